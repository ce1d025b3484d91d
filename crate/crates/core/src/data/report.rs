//! Score report CSV and plain id-list files.
//!
//! Reports print every real with 17 significant digits, so reading a report
//! back reproduces the written f64 values exactly.

use super::DataError;
use crate::ius::{utility_level_with, ScoredRow, Thresholds, UtilityLevel};
use crate::pfm::PfmConfig;
use std::collections::BTreeSet;
use std::path::Path;
use std::str::FromStr;

/// One score report line, detached from the image it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub id: String,
    pub class: Option<String>,
    pub u: f64,
    pub level: UtilityLevel,
    pub components: [f64; 4],
}

/// A parsed report: rows in file order plus the header-derived map family
/// and the thresholds the levels were bucketed under.
#[derive(Debug, Clone)]
pub struct ScoreReport {
    pub config: PfmConfig,
    pub thresholds: Thresholds,
    pub rows: Vec<ReportRow>,
}

const THRESHOLD_MARKER: &str = "# non-standard thresholds:";

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn header_for(config: PfmConfig) -> String {
    let names = config.map_names();
    format!("id,class,u,level,c_{},c_{},c_{},c_{}", names[0], names[1], names[2], names[3])
}

fn check_field(path: &Path, what: &str, value: &str) -> Result<(), DataError> {
    if value.contains(',') || value.contains('\n') || value.contains('\r') {
        return Err(DataError::format(path, format!("{what} {value:?} contains a separator")));
    }
    if value.starts_with('#') {
        return Err(DataError::format(path, format!("{what} {value:?} starts with a comment mark")));
    }
    Ok(())
}

/// Writes scored rows as CSV in input order. Non-default thresholds are
/// recorded in a leading comment so a reader buckets the same way.
pub fn write_score_report(
    rows: &[ScoredRow],
    config: PfmConfig,
    thresholds: &Thresholds,
    path: &Path,
) -> Result<(), DataError> {
    let mut out = String::new();
    if !thresholds.is_standard() {
        let c = thresholds.cuts();
        out.push_str(THRESHOLD_MARKER);
        out.push(' ');
        out.push_str(&format!("{},{},{},{}\n", real(c[0]), real(c[1]), real(c[2]), real(c[3])));
    }
    out.push_str(&header_for(config));
    out.push('\n');
    for row in rows {
        if row.id.is_empty() {
            return Err(DataError::format(path, "empty id"));
        }
        check_field(path, "id", &row.id)?;
        if let Some(class) = &row.class {
            check_field(path, "class", class)?;
            if class.is_empty() {
                return Err(DataError::format(path, "empty class; omit the class instead"));
            }
        }
        if row.profile.config() != config {
            return Err(DataError::format(
                path,
                format!("row {:?} carries a {:?} profile in a {:?} report", row.id, row.profile.config(), config),
            ));
        }
        let c = row.profile.components();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.id,
            row.class.as_deref().unwrap_or(""),
            real(row.u),
            row.level,
            real(c[0]),
            real(c[1]),
            real(c[2]),
            real(c[3]),
        ));
    }
    std::fs::write(path, out).map_err(|e| DataError::io(path, e))
}

/// Reads a score report, inferring the map family from the header and
/// re-checking that every level matches its score under the active
/// thresholds.
pub fn read_score_report(path: &Path) -> Result<ScoreReport, DataError> {
    let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    let fail = |line: usize, msg: String| DataError::Malformed {
        path: path.display().to_string(),
        line,
        msg,
    };
    let mut thresholds = Thresholds::default();
    let mut header: Option<PfmConfig> = None;
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix(THRESHOLD_MARKER) {
            let cuts: Vec<f64> = rest
                .trim()
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| fail(line_no, format!("bad threshold: {e}")))?;
            let cuts: [f64; 4] = cuts
                .try_into()
                .map_err(|v: Vec<f64>| fail(line_no, format!("expected 4 thresholds, got {}", v.len())))?;
            thresholds = Thresholds::new(cuts).map_err(|e| fail(line_no, e.to_string()))?;
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        if header.is_none() {
            let config = [PfmConfig::Color, PfmConfig::Gray]
                .into_iter()
                .find(|c| header_for(*c) == line)
                .ok_or_else(|| fail(line_no, format!("unrecognized header {line:?}")))?;
            header = Some(config);
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(fail(line_no, format!("expected 8 fields, found {}", fields.len())));
        }
        let id = fields[0].to_string();
        if id.is_empty() {
            return Err(fail(line_no, "empty id".into()));
        }
        if !seen.insert(id.clone()) {
            return Err(fail(line_no, format!("duplicate id {id:?}")));
        }
        let class = if fields[1].is_empty() { None } else { Some(fields[1].to_string()) };
        let u: f64 = fields[2]
            .parse()
            .map_err(|e| fail(line_no, format!("bad score: {e}")))?;
        let level = UtilityLevel::from_str(fields[3]).map_err(|e| fail(line_no, e))?;
        let mut components = [0.0f64; 4];
        for (i, f) in fields[4..].iter().enumerate() {
            components[i] = f
                .parse()
                .map_err(|e| fail(line_no, format!("bad component: {e}")))?;
        }
        let want_level =
            utility_level_with(u, &thresholds).map_err(|e| fail(line_no, e.to_string()))?;
        if want_level != level {
            return Err(fail(
                line_no,
                format!("level {level} does not match score {u} (expected {want_level})"),
            ));
        }
        rows.push(ReportRow { id, class, u, level, components });
    }
    let Some(config) = header else {
        return Err(fail(1, "missing header row".into()));
    };
    Ok(ScoreReport { config, thresholds, rows })
}

/// Writes ids one per line, in order.
pub fn write_id_list(ids: &[String], path: &Path) -> Result<(), DataError> {
    let mut out = String::new();
    for id in ids {
        if id.is_empty() {
            return Err(DataError::format(path, "empty id"));
        }
        check_field(path, "id", id)?;
        out.push_str(id);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| DataError::io(path, e))
}

/// Reads an id list, preserving order and rejecting duplicates.
pub fn read_id_list(path: &Path) -> Result<Vec<String>, DataError> {
    let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    let mut ids = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let id = raw.trim_end_matches('\r');
        if id.is_empty() {
            continue;
        }
        if !seen.insert(id.to_string()) {
            return Err(DataError::Malformed {
                path: path.display().to_string(),
                line: idx + 1,
                msg: format!("duplicate id {id:?}"),
            });
        }
        ids.push(id.to_string());
    }
    Ok(ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ius::ContributionProfile;
    use tempfile::TempDir;

    fn row(id: &str, class: Option<&str>, u: f64, components: [f64; 4]) -> ScoredRow {
        ScoredRow {
            id: id.to_string(),
            class: class.map(String::from),
            profile: ContributionProfile::new(PfmConfig::Color, components).unwrap(),
            u,
            level: utility_level_with(u, &Thresholds::default()).unwrap(),
        }
    }

    #[test]
    fn report_round_trip_reproduces_scores_exactly() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("r.csv");
        let rows = vec![
            row("b", Some("cat"), 0.7071067811865475, [1.0 / 3.0, -0.2, 0.0, 1.0]),
            row("a", None, -1.0, [-1e-300, 0.25, 0.5, -0.125]),
            row("c", Some("dog"), 0.9999999999999999, [0.0, 0.0, 0.0, 1e-9]),
        ];
        write_score_report(&rows, PfmConfig::Color, &Thresholds::default(), &path).unwrap();
        let report = read_score_report(&path).unwrap();
        assert_eq!(report.config, PfmConfig::Color);
        assert!(report.thresholds.is_standard());
        assert_eq!(report.rows.len(), 3);
        // Input order survives, including non-sorted ids.
        for (got, want) in report.rows.iter().zip(&rows) {
            assert_eq!(got.id, want.id);
            assert_eq!(got.class, want.class);
            assert_eq!(got.u.to_bits(), want.u.to_bits());
            assert_eq!(got.level, want.level);
            for (a, b) in got.components.iter().zip(&want.profile.components()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn empty_report_is_a_bare_header() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("r.csv");
        write_score_report(&[], PfmConfig::Gray, &Thresholds::default(), &path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "id,class,u,level,c_band1,c_band2,c_ld,c_cf\n"
        );
        let report = read_score_report(&path).unwrap();
        assert_eq!(report.config, PfmConfig::Gray);
        assert!(report.rows.is_empty());
    }

    #[test]
    fn non_standard_thresholds_are_marked_and_honored_on_read() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("r.csv");
        let custom = Thresholds::new([-0.5, 0.0, 0.5, 0.75]).unwrap();
        let mut r = row("x", None, 0.6, [0.1, 0.1, 0.1, 0.1]);
        r.level = utility_level_with(0.6, &custom).unwrap();
        write_score_report(&[r], PfmConfig::Color, &custom, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# non-standard thresholds:"), "{text}");
        let report = read_score_report(&path).unwrap();
        assert_eq!(report.thresholds.cuts(), custom.cuts());
        assert_eq!(report.rows[0].level, UtilityLevel::High);
    }

    #[test]
    fn separator_bearing_ids_and_mixed_configs_are_rejected_on_write() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("r.csv");
        let bad = row("a,b", None, 0.5, [0.0; 4]);
        assert!(write_score_report(&[bad], PfmConfig::Color, &Thresholds::default(), &path).is_err());
        let wrong_family = row("a", None, 0.5, [0.0; 4]);
        assert!(
            write_score_report(&[wrong_family], PfmConfig::Gray, &Thresholds::default(), &path)
                .is_err()
        );
    }

    #[test]
    fn inconsistent_level_column_is_rejected_on_read() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("r.csv");
        write_score_report(
            &[row("a", None, 0.9, [0.0; 4])],
            PfmConfig::Color,
            &Thresholds::default(),
            &path,
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap().replace(",VH,", ",L,");
        std::fs::write(&path, text).unwrap();
        let err = read_score_report(&path).unwrap_err();
        assert!(err.to_string().contains("does not match score"), "{err}");
    }

    #[test]
    fn malformed_reports_are_rejected_with_line_numbers() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("r.csv");
        std::fs::write(&path, "id,who,u\n").unwrap();
        assert!(matches!(read_score_report(&path).unwrap_err(), DataError::Malformed { line: 1, .. }));

        std::fs::write(&path, "id,class,u,level,c_gr,c_by,c_ld,c_cf\nx,,0.5,M\n").unwrap();
        assert!(matches!(read_score_report(&path).unwrap_err(), DataError::Malformed { line: 2, .. }));

        std::fs::write(&path, "id,class,u,level,c_gr,c_by,c_ld,c_cf\nx,,oops,M,0,0,0,0\n").unwrap();
        assert!(matches!(read_score_report(&path).unwrap_err(), DataError::Malformed { line: 2, .. }));

        std::fs::write(
            &path,
            "id,class,u,level,c_gr,c_by,c_ld,c_cf\nx,,0.5,M,0,0,0,0\nx,,0.5,M,0,0,0,0\n",
        )
        .unwrap();
        let err = read_score_report(&path).unwrap_err();
        assert!(err.to_string().contains("duplicate id"), "{err}");

        std::fs::write(&path, "").unwrap();
        assert!(matches!(read_score_report(&path).unwrap_err(), DataError::Malformed { .. }));
    }

    #[test]
    fn id_lists_round_trip_in_order() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("ids.txt");
        let ids: Vec<String> = ["zeta", "alpha", "mid"].iter().map(|s| s.to_string()).collect();
        write_id_list(&ids, &path).unwrap();
        assert_eq!(read_id_list(&path).unwrap(), ids);

        write_id_list(&[], &path).unwrap();
        assert_eq!(read_id_list(&path).unwrap(), Vec::<String>::new());

        assert!(write_id_list(&["a\nb".to_string()], &path).is_err());
        std::fs::write(&path, "a\na\n").unwrap();
        assert!(matches!(read_id_list(&path).unwrap_err(), DataError::Malformed { line: 2, .. }));
    }
}
