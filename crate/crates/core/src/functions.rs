//! Callable coefficient types carrying their own derivatives.

use std::fmt;
use std::sync::Arc;

pub type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type Fn3 = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Scalar function of one variable with first and second derivatives.
#[derive(Clone)]
pub struct SmoothFn {
    value: Fn1,
    d1: Fn1,
    d2: Fn1,
}

impl SmoothFn {
    pub fn new(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { value: Arc::new(value), d1: Arc::new(d1), d2: Arc::new(d2) }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c, |_| 0.0, |_| 0.0)
    }

    /// `s ↦ a + b s`.
    pub fn affine(a: f64, b: f64) -> Self {
        Self::new(move |s| a + b * s, move |_| b, |_| 0.0)
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.value)(s)
    }

    pub fn d1(&self, s: f64) -> f64 {
        (self.d1)(s)
    }

    pub fn d2(&self, s: f64) -> f64 {
        (self.d2)(s)
    }
}

impl fmt::Debug for SmoothFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmoothFn(f(0)={}, f'(0)={})", self.eval(0.0), self.d1(0.0))
    }
}

/// Diffusion-matrix entry `(u, v) ↦ D(u, v)` with both partial derivatives.
#[derive(Clone)]
pub struct CoefficientFn {
    value: Fn2,
    du: Fn2,
    dv: Fn2,
}

impl CoefficientFn {
    pub fn new(
        value: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        du: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        dv: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { value: Arc::new(value), du: Arc::new(du), dv: Arc::new(dv) }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_, _| c, |_, _| 0.0, |_, _| 0.0)
    }

    pub fn eval(&self, u: f64, v: f64) -> f64 {
        (self.value)(u, v)
    }

    pub fn du(&self, u: f64, v: f64) -> f64 {
        (self.du)(u, v)
    }

    pub fn dv(&self, u: f64, v: f64) -> f64 {
        (self.dv)(u, v)
    }
}

impl fmt::Debug for CoefficientFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CoefficientFn(D(0,0)={})", self.eval(0.0, 0.0))
    }
}

/// Reaction coefficient `(x, w) ↦ r(x, w)` with `∂r/∂w`.
#[derive(Clone)]
pub struct ReactionFn {
    value: Fn2,
    dw: Fn2,
}

impl ReactionFn {
    pub fn new(
        value: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        dw: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { value: Arc::new(value), dw: Arc::new(dw) }
    }

    /// `r(x, w) = −w`, the logistic self-limitation.
    pub fn logistic() -> Self {
        Self::new(|_, w| -w, |_, _| -1.0)
    }

    pub fn zero() -> Self {
        Self::new(|_, _| 0.0, |_, _| 0.0)
    }

    pub fn eval(&self, x: f64, w: f64) -> f64 {
        (self.value)(x, w)
    }

    pub fn dw(&self, x: f64, w: f64) -> f64 {
        (self.dw)(x, w)
    }
}

impl fmt::Debug for ReactionFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ReactionFn")
    }
}

/// Interaction coefficient `(x, u, v) ↦ I(x, u, v)` with `∂I/∂u`, `∂I/∂v`.
#[derive(Clone)]
pub struct InteractionFn {
    value: Fn3,
    du: Fn3,
    dv: Fn3,
}

impl InteractionFn {
    pub fn new(
        value: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        du: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        dv: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { value: Arc::new(value), du: Arc::new(du), dv: Arc::new(dv) }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_, _, _| c, |_, _, _| 0.0, |_, _, _| 0.0)
    }

    pub fn eval(&self, x: f64, u: f64, v: f64) -> f64 {
        (self.value)(x, u, v)
    }

    pub fn du(&self, x: f64, u: f64, v: f64) -> f64 {
        (self.du)(x, u, v)
    }

    pub fn dv(&self, x: f64, u: f64, v: f64) -> f64 {
        (self.dv)(x, u, v)
    }
}

impl fmt::Debug for InteractionFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "InteractionFn")
    }
}
