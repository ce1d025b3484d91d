//! Dataset manifest: a CSV of image paths and labels, optionally carrying a
//! fixed split assignment.

use super::DataError;
use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Fixed split assignment carried by a three-column manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "TRAIN",
            Split::Val => "VAL",
            Split::Test => "TEST",
        })
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "TRAIN" => Ok(Split::Train),
            "VAL" => Ok(Split::Val),
            "TEST" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}, expected TRAIN, VAL, or TEST")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub path: String,
    pub label: String,
    pub split: Option<Split>,
}

/// Parsed manifest. Paths are unique and labels non-empty; either every row
/// carries a split assignment or none does.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub rows: Vec<ManifestRow>,
}

/// The format has no quoting: a comma is always a field separator, so paths
/// containing commas are rejected by field count.
const HEADER_TWO: &str = "path,label";
const HEADER_THREE: &str = "path,label,split";

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses manifest text. `origin` names the source in errors.
    pub fn parse(text: &str, origin: &str) -> Result<Self, DataError> {
        let fail = |line: usize, msg: String| DataError::Malformed {
            path: origin.to_string(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| fail(1, "empty file, expected a header row".into()))?;
        let with_split = match header.trim_end_matches('\r') {
            HEADER_TWO => false,
            HEADER_THREE => true,
            other => {
                return Err(fail(
                    1,
                    format!("header {other:?} must be {HEADER_TWO:?} or {HEADER_THREE:?}"),
                ))
            }
        };
        let want_fields = if with_split { 3 } else { 2 };
        let mut rows = Vec::new();
        let mut seen = BTreeSet::new();
        for (idx, raw) in lines {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != want_fields {
                return Err(fail(
                    line_no,
                    format!("expected {want_fields} fields, found {} (commas in paths are not supported)", fields.len()),
                ));
            }
            let path = fields[0].trim();
            let label = fields[1].trim();
            if path.is_empty() {
                return Err(fail(line_no, "empty path".into()));
            }
            if label.is_empty() {
                return Err(fail(line_no, "empty label".into()));
            }
            if !seen.insert(path.to_string()) {
                return Err(DataError::DuplicatePath {
                    path: origin.to_string(),
                    dup: path.to_string(),
                });
            }
            let split = if with_split {
                Some(Split::from_str(fields[2].trim()).map_err(|e| fail(line_no, e))?)
            } else {
                None
            };
            rows.push(ManifestRow { path: path.to_string(), label: label.to_string(), split });
        }
        Ok(Manifest { rows })
    }

    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        std::fs::write(path, self.to_csv()).map_err(|e| DataError::io(path, e))
    }

    pub fn to_csv(&self) -> String {
        let with_split = self.rows.iter().any(|r| r.split.is_some());
        let mut out = String::new();
        out.push_str(if with_split { HEADER_THREE } else { HEADER_TWO });
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.path);
            out.push(',');
            out.push_str(&r.label);
            if with_split {
                out.push(',');
                // Mixed manifests are never produced by this crate; guard
                // against hand-built rows.
                out.push_str(&r.split.expect("all rows carry a split").to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Distinct labels in first-appearance order.
    pub fn classes(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.label) {
                out.push(r.label.clone());
            }
        }
        out
    }

    pub fn has_splits(&self) -> bool {
        self.rows.first().is_some_and(|r| r.split.is_some())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_column_manifest_parses() {
        let m = Manifest::parse("path,label\na.png,cat\nb.png,dog\n", "t").unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.rows[0], ManifestRow { path: "a.png".into(), label: "cat".into(), split: None });
        assert_eq!(m.classes(), vec!["cat", "dog"]);
        assert!(!m.has_splits());
    }

    #[test]
    fn three_column_manifest_carries_splits() {
        let m = Manifest::parse("path,label,split\na.png,cat,TRAIN\nb.png,cat,TEST\n", "t").unwrap();
        assert_eq!(m.rows[0].split, Some(Split::Train));
        assert_eq!(m.rows[1].split, Some(Split::Test));
        assert!(m.has_splits());
    }

    #[test]
    fn header_only_manifest_is_empty_not_an_error() {
        let m = Manifest::parse("path,label\n", "t").unwrap();
        assert!(m.is_empty());
    }

    #[test]
    fn wrong_field_counts_are_rejected_with_line_numbers() {
        let err = Manifest::parse("path,label\na,b,c\n", "t").unwrap_err();
        assert!(matches!(&err, DataError::Malformed { line: 2, .. }), "{err}");
        // A comma inside a path shows up as an extra field.
        let err = Manifest::parse("path,label\ndir,x/a.png,cat\n", "t").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("commas in paths"), "{msg}");
    }

    #[test]
    fn bad_header_empty_fields_and_bad_split_are_rejected() {
        assert!(Manifest::parse("file,class\n", "t").is_err());
        assert!(Manifest::parse("", "t").is_err());
        assert!(Manifest::parse("path,label\n,cat\n", "t").is_err());
        assert!(Manifest::parse("path,label\na.png,\n", "t").is_err());
        let err = Manifest::parse("path,label,split\na.png,cat,train\n", "t").unwrap_err();
        assert!(err.to_string().contains("unknown split"), "{err}");
    }

    #[test]
    fn duplicate_paths_are_rejected() {
        let err = Manifest::parse("path,label\na.png,cat\na.png,dog\n", "t").unwrap_err();
        assert!(matches!(err, DataError::DuplicatePath { dup, .. } if dup == "a.png"));
    }

    #[test]
    fn csv_round_trip_preserves_rows() {
        let text = "path,label,split\na.png,cat,TRAIN\nb.png,dog,VAL\nc.png,cat,TEST\n";
        let m = Manifest::parse(text, "t").unwrap();
        assert_eq!(m.to_csv(), text);
        let again = Manifest::parse(&m.to_csv(), "t").unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn blank_lines_and_crlf_are_tolerated() {
        let m = Manifest::parse("path,label\r\na.png,cat\r\n\r\nb.png,dog\r\n", "t").unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.rows[1].path, "b.png");
    }
}
