//! Study-data ingestion, classification pipelines, and serialization.
//!
//! Two CSV shapes are accepted, distinguished by header:
//!
//! ```text
//! study_id,n_participants,k_ab,n_ab,k_cd,n_cd[,source]
//! study_id,n_participants,rho_ab,rho_cd[,source]
//! ```
//!
//! When the optional `source` column is absent, every row inherits the file
//! stem as its source. All emitted files are UTF-8 with LF line endings and
//! '.' decimal separators; floats are written at 6 significant digits.

use crate::error::{Error, Result};
use crate::testkit::{
    ci_strong_consistency, strong_test, weak_test, CiMethod, ConsistencyFlags, FrequencyPair,
    Verdict,
};
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyRecord {
    pub study_id: String,
    pub n_participants: u64,
    pub frequencies: FrequencyPair,
    pub source: String,
}

impl StudyRecord {
    pub fn rho_ab(&self) -> f64 {
        self.frequencies.rho_ab
    }

    pub fn rho_cd(&self) -> f64 {
        self.frequencies.rho_cd
    }
}

fn parse_field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    idx: usize,
    name: &str,
    line: usize,
) -> Result<T> {
    let raw = record.get(idx).ok_or_else(|| Error::DataAt {
        line,
        msg: format!("missing column `{name}`"),
    })?;
    raw.trim().parse().map_err(|_| Error::DataAt {
        line,
        msg: format!("cannot parse `{raw}` as {name}"),
    })
}

/// Loads study records from a CSV file; the header decides whether counts
/// or frequencies are present.
pub fn load_studies(path: &Path) -> Result<Vec<StudyRecord>> {
    let default_source = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "studies".to_string());
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::data(e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let id_col = col("study_id").ok_or_else(|| Error::data("missing `study_id` column"))?;
    let np_col =
        col("n_participants").ok_or_else(|| Error::data("missing `n_participants` column"))?;
    let source_col = col("source");
    let counts_cols = (col("k_ab"), col("n_ab"), col("k_cd"), col("n_cd"));
    let freq_cols = (col("rho_ab"), col("rho_cd"));

    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2; // header is line 1
        let row = row.map_err(|e| Error::DataAt {
            line,
            msg: e.to_string(),
        })?;
        let frequencies = match (counts_cols, freq_cols) {
            ((Some(ka), Some(na), Some(kc), Some(nc)), _) => FrequencyPair::from_counts(
                parse_field(&row, ka, "k_ab", line)?,
                parse_field(&row, na, "n_ab", line)?,
                parse_field(&row, kc, "k_cd", line)?,
                parse_field(&row, nc, "n_cd", line)?,
            ),
            (_, (Some(ra), Some(rc))) => FrequencyPair::new(
                parse_field(&row, ra, "rho_ab", line)?,
                parse_field(&row, rc, "rho_cd", line)?,
            ),
            _ => Err(Error::data(
                "header must provide either k_ab,n_ab,k_cd,n_cd or rho_ab,rho_cd",
            )),
        }
        .map_err(|e| Error::DataAt {
            line,
            msg: e.to_string(),
        })?;
        let n_participants: u64 = parse_field(&row, np_col, "n_participants", line)?;
        if n_participants == 0 {
            return Err(Error::DataAt {
                line,
                msg: "n_participants must be positive".to_string(),
            });
        }
        out.push(StudyRecord {
            study_id: parse_field(&row, id_col, "study_id", line)?,
            n_participants,
            frequencies,
            source: match source_col {
                Some(c) => parse_field(&row, c, "source", line)?,
                None => default_source.clone(),
            },
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ClassifyOptions {
    /// Weak-test tolerance; 0 counts any positive gap as a reversal.
    pub tol: f64,
    /// Confidence level for the interval-consistency flags, when wanted.
    pub ci_level: Option<f64>,
    pub ci_method: CiMethod,
    /// Whether per-source frequency averages weight studies by participants.
    pub participant_weighted_means: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            tol: 0.0,
            ci_level: Some(0.95),
            ci_method: CiMethod::Wald,
            participant_weighted_means: false,
        }
    }
}

/// Per-study verdicts, exposed for golden-file comparisons.
#[derive(Clone, Debug, Serialize)]
pub struct StudyVerdicts {
    pub study_id: String,
    pub source: String,
    pub weak: Verdict,
    pub strong: Verdict,
    pub ci: Option<ConsistencyFlags>,
}

pub fn classify_one(record: &StudyRecord, options: &ClassifyOptions) -> Result<StudyVerdicts> {
    let ci = match (options.ci_level, record.frequencies.counts) {
        (Some(level), Some(c)) => Some(ci_strong_consistency(
            c.k_ab,
            c.n_ab,
            c.k_cd,
            c.n_cd,
            level,
            options.ci_method,
        )?),
        _ => None,
    };
    Ok(StudyVerdicts {
        study_id: record.study_id.clone(),
        source: record.source.clone(),
        weak: weak_test(&record.frequencies, options.tol),
        strong: strong_test(&record.frequencies),
        ci,
    })
}

/// One aggregated row per source.
#[derive(Clone, Debug, Serialize)]
pub struct SourceSummary {
    pub source: String,
    /// Average frequency of picking the sure option in the AB task.
    pub pr_a: f64,
    /// Average frequency of picking the scaled sure option in the CD task.
    pub pr_c: f64,
    pub weak_cre_pct: f64,
    pub strong_cre_pct: f64,
    pub strong_rcre_pct: f64,
    pub ci_cre_pct: Option<f64>,
    pub ci_rcre_pct: Option<f64>,
    pub n_studies: u64,
    pub n_participants: u64,
    /// Participant-weighted share of studies whose strong verdict is CRE
    /// or RCRE.
    pub weighted_strong_violation_share: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SummaryTable {
    pub rows: Vec<SourceSummary>,
    pub verdicts: Vec<StudyVerdicts>,
}

/// Classifies every record and aggregates per source, in source order.
pub fn classify_studies(
    records: &[StudyRecord],
    options: &ClassifyOptions,
) -> Result<SummaryTable> {
    if records.is_empty() {
        return Err(Error::data("no study records to classify"));
    }
    let mut verdicts = Vec::with_capacity(records.len());
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, rec) in records.iter().enumerate() {
        verdicts.push(classify_one(rec, options)?);
        groups.entry(rec.source.as_str()).or_default().push(i);
    }
    let mut rows = Vec::with_capacity(groups.len());
    for (source, idxs) in groups {
        let n_studies = idxs.len() as u64;
        let total_participants: u64 = idxs.iter().map(|&i| records[i].n_participants).sum();
        let weight = |i: usize| -> f64 {
            if options.participant_weighted_means {
                records[i].n_participants as f64 / total_participants as f64
            } else {
                1.0 / n_studies as f64
            }
        };
        let pr_a: f64 = idxs.iter().map(|&i| weight(i) * records[i].rho_ab()).sum();
        let pr_c: f64 = idxs.iter().map(|&i| weight(i) * records[i].rho_cd()).sum();
        let share = |pred: &dyn Fn(&StudyVerdicts) -> bool| -> f64 {
            100.0 * idxs.iter().filter(|&&i| pred(&verdicts[i])).count() as f64
                / n_studies as f64
        };
        let has_ci = idxs.iter().all(|&i| verdicts[i].ci.is_some());
        let weighted_violation: f64 = idxs
            .iter()
            .filter(|&&i| matches!(verdicts[i].strong, Verdict::Cre | Verdict::Rcre))
            .map(|&i| records[i].n_participants as f64)
            .sum::<f64>()
            / total_participants.max(1) as f64;
        rows.push(SourceSummary {
            source: source.to_string(),
            pr_a,
            pr_c,
            weak_cre_pct: share(&|v| v.weak == Verdict::Cre),
            strong_cre_pct: share(&|v| v.strong == Verdict::Cre),
            strong_rcre_pct: share(&|v| v.strong == Verdict::Rcre),
            ci_cre_pct: has_ci.then(|| share(&|v| v.ci.is_some_and(|f| f.cre))),
            ci_rcre_pct: has_ci.then(|| share(&|v| v.ci.is_some_and(|f| f.rcre))),
            n_studies,
            n_participants: total_participants,
            weighted_strong_violation_share: weighted_violation,
        });
    }
    Ok(SummaryTable { rows, verdicts })
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Rounds to 6 significant digits; report files never carry more.
pub fn round_sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let magnitude = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(5 - magnitude);
    (x * factor).round() / factor
}

/// Formats a float rounded to 6 significant digits using the shortest
/// representation that round-trips.
pub fn fmt_sig6(x: f64) -> String {
    format!("{}", round_sig6(x))
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportMeta {
    /// Absent for fully deterministic operations, whose output must not
    /// depend on the seed at all.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tool_version: String,
    pub config: serde_json::Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub meta: ReportMeta,
    pub results: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(seed: Option<u64>, config: serde_json::Value, results: T) -> Self {
        Report {
            meta: ReportMeta {
                seed,
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                config,
            },
            results,
        }
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::data(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl SummaryTable {
    /// Fixed-schema CSV; one row per source.
    pub fn to_csv_string(&self) -> String {
        let mut out =
            String::from("source,pr_a,pr_c,weak_cre_pct,strong_cre_pct,strong_rcre_pct,n\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                row.source,
                fmt_sig6(row.pr_a),
                fmt_sig6(row.pr_c),
                fmt_sig6(row.weak_cre_pct),
                fmt_sig6(row.strong_cre_pct),
                fmt_sig6(row.strong_rcre_pct),
                row.n_studies
            ));
        }
        out
    }

    /// Per-study verdict lines, used by the golden-file check.
    pub fn verdicts_csv(&self) -> String {
        let mut out = String::from("study_id,weak,strong,ci_cre,ci_rcre\n");
        for v in &self.verdicts {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                v.study_id,
                v.weak,
                v.strong,
                v.ci.map(|f| f.cre.to_string()).unwrap_or_default(),
                v.ci.map(|f| f.rcre.to_string()).unwrap_or_default(),
            ));
        }
        out
    }
}

/// Writes a serialized report to `path` (or stdout when `path` is `-`).
pub fn write_report(content: &str, path: &Path) -> Result<()> {
    if path.as_os_str() == "-" {
        std::io::stdout().write_all(content.as_bytes())?;
        return Ok(());
    }
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, content)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn write_temp(name: &str, content: &str) -> std::path::PathBuf {
        let path = std::env::temp_dir().join(format!("crelab_test_{name}_{}", std::process::id()));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn loads_count_schema() {
        let path = write_temp(
            "counts.csv",
            "study_id,n_participants,k_ab,n_ab,k_cd,n_cd\nkt79,95,76,95,33,95\n",
        );
        let recs = load_studies(&path).unwrap();
        assert_eq!(recs.len(), 1);
        assert_relative_eq!(recs[0].rho_ab(), 0.80, epsilon = 1e-12);
        assert_relative_eq!(recs[0].rho_cd(), 33.0 / 95.0, epsilon = 1e-12);
        assert!((recs[0].rho_cd() - 0.347).abs() < 5e-4);
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn loads_frequency_schema_with_source() {
        let path = write_temp(
            "freqs.csv",
            "study_id,n_participants,rho_ab,rho_cd,source\ns1,100,0.8,0.35,alpha\ns2,50,0.4,0.6,beta\n",
        );
        let recs = load_studies(&path).unwrap();
        assert_eq!(recs[0].source, "alpha");
        assert_eq!(recs[1].source, "beta");
        assert!(recs[0].frequencies.counts.is_none());
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn empty_after_header_is_empty_list() {
        let path = write_temp("empty.csv", "study_id,n_participants,rho_ab,rho_cd\n");
        assert!(load_studies(&path).unwrap().is_empty());
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn out_of_range_frequency_names_line() {
        let path = write_temp(
            "bad.csv",
            "study_id,n_participants,rho_ab,rho_cd\nok,10,0.5,0.5\nbad,10,1.2,0.5\n",
        );
        match load_studies(&path) {
            Err(Error::DataAt { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected a line-tagged data error, got {other:?}"),
        }
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn malformed_row_names_line() {
        let path = write_temp(
            "malformed.csv",
            "study_id,n_participants,k_ab,n_ab,k_cd,n_cd\nx,10,three,10,2,10\n",
        );
        assert!(matches!(
            load_studies(&path),
            Err(Error::DataAt { line: 2, .. })
        ));
        std::fs::remove_file(path).ok();
    }

    fn record(id: &str, np: u64, a: f64, c: f64, source: &str) -> StudyRecord {
        StudyRecord {
            study_id: id.to_string(),
            n_participants: np,
            frequencies: FrequencyPair::new(a, c).unwrap(),
            source: source.to_string(),
        }
    }

    #[test]
    fn classify_aggregates_per_source() {
        let recs = vec![
            record("s1", 100, 0.8, 0.35, "a"),
            record("s2", 100, 0.55, 0.45, "a"),
            record("s3", 100, 0.45, 0.55, "a"),
            record("s4", 300, 0.6, 0.6, "b"),
        ];
        let table = classify_studies(&recs, &ClassifyOptions::default()).unwrap();
        assert_eq!(table.rows.len(), 2);
        let a = &table.rows[0];
        assert_eq!(a.source, "a");
        assert_eq!(a.n_studies, 3);
        assert_relative_eq!(a.pr_a, (0.8 + 0.55 + 0.45) / 3.0, epsilon = 1e-12);
        assert_relative_eq!(a.weak_cre_pct, 200.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(a.strong_cre_pct, 200.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(a.strong_rcre_pct, 100.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(a.weighted_strong_violation_share, 1.0, epsilon = 1e-12);
        let b = &table.rows[1];
        assert_eq!(b.strong_cre_pct, 0.0);
        assert_eq!(b.weighted_strong_violation_share, 0.0);
    }

    #[test]
    fn identical_records_give_degenerate_prevalences() {
        let recs = vec![record("s1", 10, 0.8, 0.2, "src"); 5];
        let table = classify_studies(&recs, &ClassifyOptions::default()).unwrap();
        assert_eq!(table.rows[0].strong_cre_pct, 100.0);
        assert_eq!(table.rows[0].strong_rcre_pct, 0.0);
        assert_eq!(table.rows[0].weak_cre_pct, 100.0);
    }

    #[test]
    fn participant_weighting_moves_share_toward_big_study() {
        let base = vec![
            record("cre", 100, 0.8, 0.2, "src"),
            record("eu", 100, 0.6, 0.6, "src"),
        ];
        let t1 = classify_studies(&base, &ClassifyOptions::default()).unwrap();
        let mut bigger = base.clone();
        bigger[0].n_participants = 200;
        let t2 = classify_studies(&bigger, &ClassifyOptions::default()).unwrap();
        assert!(
            t2.rows[0].weighted_strong_violation_share
                > t1.rows[0].weighted_strong_violation_share
        );
        let mut biggest = base;
        biggest[1].n_participants = 400;
        let t3 = classify_studies(&biggest, &ClassifyOptions::default()).unwrap();
        assert!(
            t3.rows[0].weighted_strong_violation_share
                < t1.rows[0].weighted_strong_violation_share
        );
    }

    #[test]
    fn csv_round_trip_at_six_digits() {
        let recs = vec![
            record("s1", 100, 0.812345678, 0.351234567, "a"),
            record("s2", 70, 1.0 / 3.0, 2.0 / 3.0, "b"),
        ];
        let table = classify_studies(&recs, &ClassifyOptions::default()).unwrap();
        let csv_text = table.to_csv_string();
        let mut lines = csv_text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "source,pr_a,pr_c,weak_cre_pct,strong_cre_pct,strong_rcre_pct,n"
        );
        for (line, row) in lines.zip(&table.rows) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields[0], row.source);
            let parsed: f64 = fields[1].parse().unwrap();
            assert_eq!(parsed, round_sig6(row.pr_a));
            let parsed: f64 = fields[2].parse().unwrap();
            assert_eq!(parsed, round_sig6(row.pr_c));
        }
    }

    #[test]
    fn sig6_rounding() {
        assert_eq!(fmt_sig6(0.8123456789), "0.812346");
        assert_eq!(fmt_sig6(123456.789), "123457");
        assert_eq!(fmt_sig6(-0.0001234567), "-0.000123457");
        assert_eq!(fmt_sig6(24.0), "24");
        assert_eq!(fmt_sig6(0.0), "0");
    }

    #[test]
    fn report_envelope_has_meta() {
        let rep = Report::new(Some(7), serde_json::json!({"kind": "t"}), vec![1, 2, 3]);
        let s = rep.to_json_string().unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["meta"]["seed"], 7);
        assert!(v["meta"]["tool_version"].is_string());
        assert_eq!(v["results"], serde_json::json!([1, 2, 3]));

        let det = Report::new(None, serde_json::json!({}), 1);
        let v: serde_json::Value = serde_json::from_str(&det.to_json_string().unwrap()).unwrap();
        assert!(v["meta"].get("seed").is_none());
    }
}
