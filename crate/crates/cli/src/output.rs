//! CSV and JSON writers. Column lists come from `schema/outputs.json`,
//! which the plotting scripts read as well.

use serde::Deserialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

pub const SCHEMA_TEXT: &str = include_str!("../schema/outputs.json");

#[derive(Debug, Deserialize)]
pub struct Schema {
    pub files: BTreeMap<String, FileSchema>,
    pub vocabularies: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Deserialize)]
pub struct FileSchema {
    #[serde(default)]
    pub columns: Vec<String>,
    #[serde(default)]
    pub required: Vec<String>,
}

pub fn schema() -> &'static Schema {
    static SCHEMA: OnceLock<Schema> = OnceLock::new();
    SCHEMA.get_or_init(|| serde_json::from_str(SCHEMA_TEXT).expect("bundled schema is valid"))
}

pub fn columns(file: &str) -> &'static [String] {
    &schema().files.get(file).unwrap_or_else(|| panic!("{file} missing from schema")).columns
}

pub fn vocabulary(name: &str) -> &'static [String] {
    &schema().vocabularies.get(name).unwrap_or_else(|| panic!("{name} missing from schema"))[..]
}

/// 17 significant digits, empty for missing values.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

/// Writes `bytes` to `dir/name` through a temporary file in the same
/// directory followed by a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).map_err(|e| e.error)?;
    Ok(())
}

/// Renders rows under the header registered for `file`.
pub fn csv_bytes(file: &str, rows: &[Vec<String>]) -> Vec<u8> {
    let header = columns(file);
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        assert_eq!(row.len(), header.len(), "row width for {file}");
        w.write_record(row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

pub fn write_csv(dir: &Path, file: &str, rows: &[Vec<String>]) -> std::io::Result<()> {
    write_atomic(dir, file, &csv_bytes(file, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_lists_every_output() {
        for f in ["eig.csv", "branch_semitrivial.csv", "curves.csv", "branch.csv", "region.csv", "check.csv"] {
            assert!(!columns(f).is_empty());
        }
        assert!(!schema().files["verdict.json"].required.is_empty());
    }

    #[test]
    fn vocabularies_match_the_solver_enums() {
        use coexist_core::curves::CellVerdict;
        use coexist_core::system::Verdict;
        let region = [CellVerdict::ProvenEmpty, CellVerdict::Predicted, CellVerdict::Confirmed, CellVerdict::PredictedNotFound, CellVerdict::Unknown];
        assert_eq!(region.map(|v| v.name().to_string()).to_vec(), vocabulary("region_verdict"));
        let branch = [Verdict::UnboundedWindow, Verdict::HitsOtherSemitrivialV, Verdict::HitsOtherSemitrivialU, Verdict::HitsTrivial, Verdict::StepFailure];
        assert_eq!(branch.map(|v| v.name().to_string()).to_vec(), vocabulary("branch_verdict"));
    }

    #[test]
    fn floats_keep_seventeen_digits() {
        let s = float(std::f64::consts::PI);
        assert_eq!(s, "3.1415926535897931e0");
        assert_eq!(s.parse::<f64>().unwrap(), std::f64::consts::PI);
        assert_eq!(opt_float(None), "");
    }

    #[test]
    fn csv_quotes_fields_with_commas() {
        let bytes = csv_bytes("check.csv", &[vec!["a,b".into(), "true".into(), "".into(), "".into(), "".into()]]);
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.starts_with("hypothesis,holds,at_u,at_v,excess\r\n"));
        assert!(text.contains("\"a,b\""));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), "x.txt", b"one").unwrap();
        write_atomic(dir.path(), "x.txt", b"two").unwrap();
        assert_eq!(std::fs::read(dir.path().join("x.txt")).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
