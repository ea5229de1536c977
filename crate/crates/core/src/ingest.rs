//! CSV ingestion for real functional datasets, with the preprocessing rules
//! used in the application: outlier exclusion over the raw value pool,
//! complete-day filtering, day-averaging, and a configurable retained time
//! index set.

use crate::error::{Error, Result};
use crate::grid::{FunctionalSample, TimeGrid};
use crate::metrics::quantile_linear;
use crate::simgen::Dataset;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

/// Which curve a long-format row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CurveRole {
    W,
    M,
}

impl std::str::FromStr for CurveRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "W" => Ok(CurveRole::W),
            "M" => Ok(CurveRole::M),
            other => Err(Error::Schema(format!(
                "curve role must be W or M, got '{other}'"
            ))),
        }
    }
}

/// One observation: a value for a subject's curve on a given day at a given
/// time index.
#[derive(Debug, Clone, PartialEq)]
pub struct LongRecord {
    pub subject: String,
    pub role: CurveRole,
    pub day: u32,
    pub time: u32,
    pub value: f64,
}

#[derive(Debug, Clone, Default)]
pub struct LongRecords {
    pub records: Vec<LongRecord>,
}

/// A parse failure with its 1-based line number.
#[derive(Debug, Clone)]
pub struct RowIssue {
    pub line: u64,
    pub message: String,
}

/// Column-name mapping for the long CSV, plus the tolerated fraction of
/// malformed rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LongSchema {
    pub subject: String,
    pub role: String,
    pub day: String,
    pub time: String,
    pub value: String,
    pub max_bad_fraction: f64,
}

impl Default for LongSchema {
    fn default() -> Self {
        Self {
            subject: "subject".into(),
            role: "role".into(),
            day: "day".into(),
            time: "time".into(),
            value: "value".into(),
            max_bad_fraction: 0.0,
        }
    }
}

fn find_column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Schema(format!("missing column '{name}'")))
}

/// Parse a long-format CSV. Malformed rows are collected with line numbers;
/// the load fails when they exceed `max_bad_fraction` of data rows, and a
/// duplicate (subject, role, day, time) key always fails.
pub fn load_long_csv<R: Read>(
    reader: R,
    schema: &LongSchema,
) -> Result<(LongRecords, Vec<RowIssue>)> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col_subject = find_column(&headers, &schema.subject)?;
    let col_role = find_column(&headers, &schema.role)?;
    let col_day = find_column(&headers, &schema.day)?;
    let col_time = find_column(&headers, &schema.time)?;
    let col_value = find_column(&headers, &schema.value)?;

    let mut records = Vec::new();
    let mut issues = Vec::new();
    let mut seen = BTreeSet::new();
    let mut total = 0usize;
    for row in rdr.records() {
        let row = row?;
        total += 1;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let parsed = (|| -> std::result::Result<LongRecord, String> {
            let field = |i: usize, name: &str| {
                row.get(i)
                    .ok_or_else(|| format!("row too short, missing '{name}'"))
            };
            let subject = field(col_subject, &schema.subject)?.to_string();
            let role: CurveRole = field(col_role, &schema.role)?
                .parse()
                .map_err(|e: Error| e.to_string())?;
            let day: u32 = field(col_day, &schema.day)?
                .trim()
                .parse()
                .map_err(|e| format!("bad day: {e}"))?;
            let time: u32 = field(col_time, &schema.time)?
                .trim()
                .parse()
                .map_err(|e| format!("bad time: {e}"))?;
            let value: f64 = field(col_value, &schema.value)?
                .trim()
                .parse()
                .map_err(|e| format!("bad value: {e}"))?;
            if !value.is_finite() {
                return Err("non-finite value".into());
            }
            Ok(LongRecord {
                subject,
                role,
                day,
                time,
                value,
            })
        })();
        match parsed {
            Ok(rec) => {
                if !seen.insert((rec.subject.clone(), rec.role, rec.day, rec.time)) {
                    return Err(Error::Schema(format!(
                        "duplicate key at line {line}: ({}, {:?}, day {}, time {})",
                        rec.subject, rec.role, rec.day, rec.time
                    )));
                }
                records.push(rec);
            }
            Err(message) => issues.push(RowIssue { line, message }),
        }
    }
    let limit = (schema.max_bad_fraction * total as f64).floor() as usize;
    if issues.len() > limit {
        let first = &issues[0];
        return Err(Error::MalformedRows {
            n_bad: issues.len(),
            limit,
            first_line: first.line,
            first_msg: first.message.clone(),
        });
    }
    Ok((LongRecords { records }, issues))
}

/// Preprocessing rules mirroring the application pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreprocessRules {
    /// Time indices a day must cover in full to qualify.
    pub required_times: Vec<u32>,
    /// Time indices kept in the output curves (a subset of required).
    pub retained_times: Vec<u32>,
    /// Minimum qualifying days per role per subject.
    pub min_days: usize,
    /// Values above Q3 + multiplier * IQR of the role's raw pool are dropped.
    pub outlier_iqr_multiplier: f64,
}

impl Default for PreprocessRules {
    fn default() -> Self {
        Self {
            required_times: (0..24).collect(),
            retained_times: (0..24).collect(),
            min_days: 1,
            outlier_iqr_multiplier: 3.0,
        }
    }
}

impl PreprocessRules {
    pub fn validate(&self) -> Result<()> {
        if self.retained_times.is_empty() {
            return Err(Error::InvalidConfig("retained time set is empty".into()));
        }
        if self.min_days == 0 {
            return Err(Error::InvalidConfig("min_days must be >= 1".into()));
        }
        if self.outlier_iqr_multiplier < 0.0 {
            return Err(Error::InvalidConfig(
                "outlier multiplier must be nonnegative".into(),
            ));
        }
        let required: BTreeSet<u32> = self.required_times.iter().copied().collect();
        if !self.retained_times.iter().all(|t| required.contains(t)) {
            return Err(Error::InvalidConfig(
                "retained times must be a subset of required times".into(),
            ));
        }
        Ok(())
    }
}

/// Averaged per-subject curves for both roles on a common grid.
#[derive(Debug, Clone)]
pub struct SubjectCurves {
    pub subjects: Vec<String>,
    pub grid: TimeGrid<f64>,
    pub w: Array2<f64>,
    pub m: Array2<f64>,
    /// Subjects present in the input but lacking a qualifying day in some
    /// role.
    pub dropped: Vec<String>,
    /// Raw values removed by the outlier rule, per role.
    pub outliers_removed: BTreeMap<&'static str, usize>,
}

fn role_name(role: CurveRole) -> &'static str {
    match role {
        CurveRole::W => "W",
        CurveRole::M => "M",
    }
}

/// The application pipeline: per role, drop raw values above
/// Q3 + multiplier * IQR of the full value pool; keep only days covering
/// every required time; average qualifying days at each retained time.
/// Subjects without `min_days` qualifying days in both roles are dropped.
pub fn preprocess(records: &LongRecords, rules: &PreprocessRules) -> Result<SubjectCurves> {
    rules.validate()?;
    let mut retained = rules.retained_times.clone();
    retained.sort_unstable();
    retained.dedup();
    let required: BTreeSet<u32> = rules.required_times.iter().copied().collect();

    // Outlier thresholds per role over the raw pools, before any averaging.
    let mut thresholds = BTreeMap::new();
    let mut outliers_removed = BTreeMap::new();
    for role in [CurveRole::W, CurveRole::M] {
        let mut pool: Vec<f64> = records
            .records
            .iter()
            .filter(|r| r.role == role)
            .map(|r| r.value)
            .collect();
        if pool.is_empty() {
            continue;
        }
        pool.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        let q1 = quantile_linear(&pool, 0.25)?;
        let q3 = quantile_linear(&pool, 0.75)?;
        thresholds.insert(role, q3 + rules.outlier_iqr_multiplier * (q3 - q1));
        outliers_removed.insert(role_name(role), 0usize);
    }

    // (subject, role) -> day -> time -> value, outliers excluded.
    type DayMap = BTreeMap<u32, BTreeMap<u32, f64>>;
    let mut by_key: BTreeMap<(String, CurveRole), DayMap> = BTreeMap::new();
    let mut all_subjects = BTreeSet::new();
    for rec in &records.records {
        all_subjects.insert(rec.subject.clone());
        if let Some(&threshold) = thresholds.get(&rec.role) {
            if rec.value > threshold {
                *outliers_removed.get_mut(role_name(rec.role)).unwrap() += 1;
                continue;
            }
        }
        by_key
            .entry((rec.subject.clone(), rec.role))
            .or_default()
            .entry(rec.day)
            .or_default()
            .insert(rec.time, rec.value);
    }

    // Average complete days at the retained times.
    let average = |subject: &str, role: CurveRole| -> Option<Vec<f64>> {
        let days = by_key.get(&(subject.to_string(), role))?;
        let complete: Vec<&BTreeMap<u32, f64>> = days
            .values()
            .filter(|times| required.iter().all(|t| times.contains_key(t)))
            .collect();
        if complete.len() < rules.min_days {
            return None;
        }
        Some(
            retained
                .iter()
                .map(|t| {
                    complete.iter().map(|d| d[t]).sum::<f64>() / complete.len() as f64
                })
                .collect(),
        )
    };

    let mut subjects = Vec::new();
    let mut dropped = Vec::new();
    let mut w_rows = Vec::new();
    let mut m_rows = Vec::new();
    for subject in &all_subjects {
        match (average(subject, CurveRole::W), average(subject, CurveRole::M)) {
            (Some(w), Some(m)) => {
                subjects.push(subject.clone());
                w_rows.push(w);
                m_rows.push(m);
            }
            _ => dropped.push(subject.clone()),
        }
    }
    if subjects.is_empty() {
        return Err(Error::EmptyCohort);
    }

    // Map retained time indices linearly onto [0, 1].
    let grid = if retained.len() == 1 {
        return Err(Error::InvalidGrid(
            "need at least 2 retained time points".into(),
        ));
    } else {
        let lo = retained[0] as f64;
        let hi = *retained.last().unwrap() as f64;
        TimeGrid::new(
            retained
                .iter()
                .map(|&t| (t as f64 - lo) / (hi - lo))
                .collect(),
        )?
    };
    let n = subjects.len();
    let width = retained.len();
    let mut w = Array2::zeros((n, width));
    let mut m = Array2::zeros((n, width));
    for i in 0..n {
        w.row_mut(i).assign(&Array1::from(w_rows[i].clone()));
        m.row_mut(i).assign(&Array1::from(m_rows[i].clone()));
    }
    Ok(SubjectCurves {
        subjects,
        grid,
        w,
        m,
        dropped,
        outliers_removed,
    })
}

/// Column mapping for the outcome CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeSchema {
    pub subject: String,
    pub outcome: String,
    pub covariates: Vec<String>,
    pub weight: Option<String>,
}

impl Default for OutcomeSchema {
    fn default() -> Self {
        Self {
            subject: "subject".into(),
            outcome: "y".into(),
            covariates: vec![],
            weight: None,
        }
    }
}

/// Join report from `assemble_dataset`.
#[derive(Debug, Clone, Default)]
pub struct JoinReport {
    pub matched: usize,
    pub unmatched_curves: Vec<String>,
    pub unmatched_outcomes: Vec<String>,
}

/// Inner-join preprocessed curves with an outcome CSV on subject id,
/// reporting unmatched ids on both sides. A weight column, when mapped,
/// feeds weighted least squares downstream.
pub fn assemble_dataset<R: Read>(
    curves: &SubjectCurves,
    outcomes: R,
    schema: &OutcomeSchema,
) -> Result<(Dataset, JoinReport)> {
    let mut rdr = csv::Reader::from_reader(outcomes);
    let headers = rdr.headers()?.clone();
    let col_subject = find_column(&headers, &schema.subject)?;
    let col_outcome = find_column(&headers, &schema.outcome)?;
    let col_covs: Vec<usize> = schema
        .covariates
        .iter()
        .map(|c| find_column(&headers, c))
        .collect::<Result<_>>()?;
    let col_weight = schema
        .weight
        .as_ref()
        .map(|c| find_column(&headers, c))
        .transpose()?;

    struct OutcomeRow {
        y: f64,
        z: Vec<f64>,
        weight: Option<f64>,
    }
    let mut rows: BTreeMap<String, OutcomeRow> = BTreeMap::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let subject = row
            .get(col_subject)
            .ok_or_else(|| Error::Schema(format!("line {line}: missing subject")))?
            .to_string();
        let parse = |i: usize| -> Result<f64> {
            row.get(i)
                .ok_or_else(|| Error::Schema(format!("line {line}: row too short")))?
                .trim()
                .parse()
                .map_err(|e| Error::Schema(format!("line {line}: bad number: {e}")))
        };
        let y = parse(col_outcome)?;
        let z = col_covs.iter().map(|&i| parse(i)).collect::<Result<_>>()?;
        let weight = col_weight.map(parse).transpose()?;
        if rows
            .insert(subject.clone(), OutcomeRow { y, z, weight })
            .is_some()
        {
            return Err(Error::Schema(format!(
                "duplicate outcome row for subject '{subject}'"
            )));
        }
    }

    let mut report = JoinReport::default();
    let mut keep = Vec::new();
    for (i, subject) in curves.subjects.iter().enumerate() {
        if rows.contains_key(subject) {
            keep.push(i);
        } else {
            report.unmatched_curves.push(subject.clone());
        }
    }
    let curve_set: BTreeSet<&String> = curves.subjects.iter().collect();
    for subject in rows.keys() {
        if !curve_set.contains(subject) {
            report.unmatched_outcomes.push(subject.clone());
        }
    }
    report.matched = keep.len();
    if keep.is_empty() {
        return Err(Error::EmptyCohort);
    }

    let n = keep.len();
    let p = schema.covariates.len();
    let width = curves.grid.n_grid();
    let mut w = Array2::zeros((n, width));
    let mut m = Array2::zeros((n, width));
    let mut y = Array1::zeros(n);
    let mut z = Array2::zeros((n, p));
    let mut weights = col_weight.map(|_| Array1::zeros(n));
    for (r, &i) in keep.iter().enumerate() {
        let subject = &curves.subjects[i];
        let row = &rows[subject];
        w.row_mut(r).assign(&curves.w.row(i));
        m.row_mut(r).assign(&curves.m.row(i));
        y[r] = row.y;
        for (j, &v) in row.z.iter().enumerate() {
            z[[r, j]] = v;
        }
        if let Some(wt) = weights.as_mut() {
            wt[r] = row.weight.expect("weight column parsed");
        }
    }
    let dataset = Dataset {
        y,
        w: FunctionalSample::new(w, curves.grid.clone())?,
        m: FunctionalSample::new(m, curves.grid.clone())?,
        x: None,
        z,
        z_names: schema.covariates.clone(),
        weights,
    };
    Ok((dataset, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn schema() -> LongSchema {
        LongSchema::default()
    }

    fn small_rules(times: std::ops::Range<u32>) -> PreprocessRules {
        PreprocessRules {
            required_times: times.clone().collect(),
            retained_times: times.collect(),
            ..PreprocessRules::default()
        }
    }

    #[test]
    fn empty_file_with_header_parses() {
        let (records, issues) =
            load_long_csv("subject,role,day,time,value\n".as_bytes(), &schema()).unwrap();
        assert!(records.records.is_empty());
        assert!(issues.is_empty());
    }

    #[test]
    fn three_row_fixture_round_trips() {
        let csv = "subject,role,day,time,value\n\
                   s1,W,1,0,2.5\n\
                   s1,M,1,0,3.5\n\
                   s2,W,2,1,-1.0\n";
        let (records, issues) = load_long_csv(csv.as_bytes(), &schema()).unwrap();
        assert!(issues.is_empty());
        assert_eq!(records.records.len(), 3);
        assert_eq!(
            records.records[0],
            LongRecord {
                subject: "s1".into(),
                role: CurveRole::W,
                day: 1,
                time: 0,
                value: 2.5
            }
        );
        assert_eq!(records.records[2].value, -1.0);
    }

    #[test]
    fn malformed_row_with_zero_threshold_names_the_line() {
        let csv = "subject,role,day,time,value\n\
                   s1,W,1,0,2.5\n\
                   s1,W,1,1,not-a-number\n";
        match load_long_csv(csv.as_bytes(), &schema()) {
            Err(Error::MalformedRows {
                n_bad, first_line, ..
            }) => {
                assert_eq!(n_bad, 1);
                assert_eq!(first_line, 3);
            }
            other => panic!("expected malformed-rows error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_rows_below_threshold_are_collected() {
        let csv = "subject,role,day,time,value\n\
                   s1,W,1,0,2.5\n\
                   s1,W,1,1,bad\n\
                   s1,W,1,2,3.5\n";
        let lenient = LongSchema {
            max_bad_fraction: 0.5,
            ..schema()
        };
        let (records, issues) = load_long_csv(csv.as_bytes(), &lenient).unwrap();
        assert_eq!(records.records.len(), 2);
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].line, 3);
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let csv = "subject,role,day,value\ns1,W,1,2.5\n";
        assert!(matches!(
            load_long_csv(csv.as_bytes(), &schema()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn duplicate_key_rejected() {
        let csv = "subject,role,day,time,value\n\
                   s1,W,1,0,2.5\n\
                   s1,W,1,0,2.6\n";
        assert!(matches!(
            load_long_csv(csv.as_bytes(), &schema()),
            Err(Error::Schema(_))
        ));
    }

    fn records_from(rows: &[(&str, CurveRole, u32, u32, f64)]) -> LongRecords {
        LongRecords {
            records: rows
                .iter()
                .map(|&(s, role, day, time, value)| LongRecord {
                    subject: s.to_string(),
                    role,
                    day,
                    time,
                    value,
                })
                .collect(),
        }
    }

    #[test]
    fn two_identical_complete_days_average_to_either() {
        let mut rows = Vec::new();
        for day in [1, 2] {
            for t in 0..4 {
                rows.push(("s1", CurveRole::W, day, t, t as f64 + 1.0));
                rows.push(("s1", CurveRole::M, day, t, 2.0 * t as f64));
            }
        }
        let curves = preprocess(&records_from(&rows), &small_rules(0..4)).unwrap();
        assert_eq!(curves.subjects, vec!["s1"]);
        for t in 0..4 {
            assert_abs_diff_eq!(curves.w[[0, t]], t as f64 + 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(curves.m[[0, t]], 2.0 * t as f64, epsilon = 1e-12);
        }
    }

    // Value pool 1..=100 plus 1000: with linear-interpolation quantiles the
    // pool of 101 values has Q1 = 26, Q3 = 76, threshold 226, so only the
    // 1000 is excluded.
    #[test]
    fn outlier_rule_excludes_extreme_value() {
        let mut rows = Vec::new();
        for (i, v) in (1..=100).chain([1000]).enumerate() {
            rows.push(("s1", CurveRole::W, i as u32, 0, v as f64));
            rows.push(("s1", CurveRole::W, i as u32, 1, 1.0));
            rows.push(("s1", CurveRole::M, i as u32, 0, 1.0));
            rows.push(("s1", CurveRole::M, i as u32, 1, 1.0));
        }
        let records = records_from(&rows);
        let pool: Vec<f64> = (1..=100).chain([1000]).map(f64::from).collect();
        let q1 = quantile_linear(&pool, 0.25).unwrap();
        let q3 = quantile_linear(&pool, 0.75).unwrap();
        assert_abs_diff_eq!(q1, 26.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q3, 76.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q3 + 3.0 * (q3 - q1), 226.0, epsilon = 1e-12);

        let curves = preprocess(&records, &small_rules(0..2)).unwrap();
        assert_eq!(curves.outliers_removed["W"], 1);
        // The day containing the outlier became incomplete: 100 complete
        // days remain and none includes the 1000.
        assert!(curves.w[[0, 0]] <= 100.0);
    }

    #[test]
    fn incomplete_day_only_drops_subject() {
        let rows = [
            ("s1", CurveRole::W, 1, 0, 1.0),
            // missing time 1 on s1's only W day
            ("s1", CurveRole::M, 1, 0, 1.0),
            ("s1", CurveRole::M, 1, 1, 1.0),
            ("s2", CurveRole::W, 1, 0, 1.0),
            ("s2", CurveRole::W, 1, 1, 2.0),
            ("s2", CurveRole::M, 1, 0, 1.0),
            ("s2", CurveRole::M, 1, 1, 2.0),
        ];
        let curves = preprocess(&records_from(&rows), &small_rules(0..2)).unwrap();
        assert_eq!(curves.dropped, vec!["s1"]);
        assert_eq!(curves.subjects, vec!["s2"]);
    }

    #[test]
    fn preprocess_is_permutation_invariant() {
        let mut rows = Vec::new();
        for s in ["a", "b", "c"] {
            for day in [1, 2] {
                for t in 0..3 {
                    let v = (s.len() + day as usize) as f64 + t as f64 * 0.5;
                    rows.push((s, CurveRole::W, day, t, v));
                    rows.push((s, CurveRole::M, day, t, v + 1.0));
                }
            }
        }
        let forward = preprocess(&records_from(&rows), &small_rules(0..3)).unwrap();
        rows.reverse();
        let backward = preprocess(&records_from(&rows), &small_rules(0..3)).unwrap();
        assert_eq!(forward.subjects, backward.subjects);
        assert_eq!(forward.w, backward.w);
        assert_eq!(forward.m, backward.m);
    }

    #[test]
    fn retained_subset_selects_columns() {
        let mut rows = Vec::new();
        for t in 0..6 {
            rows.push(("s1", CurveRole::W, 1, t, t as f64));
            rows.push(("s1", CurveRole::M, 1, t, t as f64));
        }
        let rules = PreprocessRules {
            required_times: (0..6).collect(),
            retained_times: vec![1, 2, 3, 4],
            ..PreprocessRules::default()
        };
        let curves = preprocess(&records_from(&rows), &rules).unwrap();
        assert_eq!(curves.grid.n_grid(), 4);
        assert_abs_diff_eq!(curves.w[[0, 0]], 1.0);
        assert_abs_diff_eq!(curves.w[[0, 3]], 4.0);
        assert_abs_diff_eq!(curves.grid.points()[0], 0.0);
        assert_abs_diff_eq!(*curves.grid.points().last().unwrap(), 1.0);
    }

    #[test]
    fn empty_cohort_is_an_error() {
        let rows = [("s1", CurveRole::W, 1, 0, 1.0)];
        assert!(matches!(
            preprocess(&records_from(&rows), &small_rules(0..2)),
            Err(Error::EmptyCohort)
        ));
    }

    fn fixture_curves() -> SubjectCurves {
        let mut rows = Vec::new();
        for s in ["s1", "s2", "s3"] {
            for t in 0..3 {
                let v = s.as_bytes()[1] as f64 + t as f64;
                rows.push((s, CurveRole::W, 1, t, v));
                rows.push((s, CurveRole::M, 1, t, v * 2.0));
            }
        }
        preprocess(&records_from(&rows), &small_rules(0..3)).unwrap()
    }

    #[test]
    fn assemble_matching_fixture() {
        let curves = fixture_curves();
        let outcomes = "subject,y,age\ns1,24.0,31\ns2,27.5,45\ns3,22.0,52\n";
        let schema = OutcomeSchema {
            covariates: vec!["age".into()],
            ..OutcomeSchema::default()
        };
        let (data, report) = assemble_dataset(&curves, outcomes.as_bytes(), &schema).unwrap();
        assert_eq!(data.n(), 3);
        assert_eq!(report.matched, 3);
        assert!(report.unmatched_curves.is_empty());
        assert_eq!(data.z[[1, 0]], 45.0);
        assert!(data.weights.is_none());
    }

    #[test]
    fn unmatched_rows_are_reported_and_excluded() {
        let curves = fixture_curves();
        let outcomes = "subject,y\ns1,24.0\ns2,27.5\nmystery,9.9\n";
        let (data, report) =
            assemble_dataset(&curves, outcomes.as_bytes(), &OutcomeSchema::default()).unwrap();
        assert_eq!(data.n(), 2);
        assert_eq!(report.unmatched_curves, vec!["s3"]);
        assert_eq!(report.unmatched_outcomes, vec!["mystery"]);
    }

    #[test]
    fn weight_column_is_passed_through() {
        let curves = fixture_curves();
        let outcomes = "subject,y,wt\ns1,24.0,1.5\ns2,27.5,0.7\ns3,22.0,2.0\n";
        let schema = OutcomeSchema {
            weight: Some("wt".into()),
            ..OutcomeSchema::default()
        };
        let (data, _) = assemble_dataset(&curves, outcomes.as_bytes(), &schema).unwrap();
        let weights = data.weights.unwrap();
        assert_abs_diff_eq!(weights[1], 0.7, epsilon = 1e-12);
    }
}
