//! Spotting accuracy over an annotated corpus: mean absolute error, standard
//! error and exact-hit rate, with a comparison table against published rows.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PlaneId;
use crate::scalar::Scalar;
use crate::spotting::SpotResult;
use crate::volume::Annotation;

/// A computed MAE within this many frames of the published one is reported
/// as consistent.
pub const CONSISTENT_MAE_DELTA: f64 = 0.5;

pub fn mae(errors: &[i64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::Invalid("MAE of an empty error list".into()));
    }
    let sum: f64 = errors.iter().map(|e| e.unsigned_abs() as f64).sum();
    Ok(sum / errors.len() as f64)
}

/// Sample standard deviation (N − 1) of `|e|`, divided by `√N`.
pub fn se(errors: &[i64]) -> Result<f64> {
    let n = errors.len();
    if n < 2 {
        return Err(Error::Invalid(format!(
            "standard error needs at least two samples, got {n}"
        )));
    }
    let abs: Vec<f64> = errors.iter().map(|e| e.unsigned_abs() as f64).collect();
    let mean = abs.iter().sum::<f64>() / n as f64;
    let var = abs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1) as f64;
    Ok(var.sqrt() / (n as f64).sqrt())
}

/// Percentage of zero errors.
pub fn hit_rate(errors: &[i64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::Invalid("hit rate of an empty error list".into()));
    }
    let hits = errors.iter().filter(|&&e| e == 0).count();
    Ok(100.0 * hits as f64 / errors.len() as f64)
}

pub fn exact_hit_rate<T: Scalar>(spots: &[SpotResult<T>], truths: &[Annotation]) -> Result<f64> {
    if spots.len() != truths.len() {
        return Err(Error::Invalid(format!(
            "{} spot results for {} annotations",
            spots.len(),
            truths.len()
        )));
    }
    let errors: Vec<i64> = spots
        .iter()
        .zip(truths)
        .map(|(s, t)| s.apex_frame as i64 - t.apex as i64)
        .collect();
    hit_rate(&errors)
}

/// Spotting outcome for one annotated sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub sequence_id: String,
    pub spotted_apex: usize,
    pub truth_apex: usize,
    #[serde(default)]
    pub flat: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_plane: Option<BTreeMap<PlaneId, usize>>,
}

impl SampleOutcome {
    pub fn error(&self) -> i64 {
        self.spotted_apex as i64 - self.truth_apex as i64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneScore {
    pub mae: f64,
    pub exact_hit_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub se_quantity: String,
    pub se_denominator: String,
    pub preprocessing: String,
    pub baseline_frame: String,
}

impl Default for ReportMetadata {
    fn default() -> Self {
        Self {
            se_quantity: "absolute errors |e_i|".into(),
            se_denominator: "N-1".into(),
            preprocessing: "grayscale conversion only (BT.601 luma); no alignment".into(),
            baseline_frame: "frame 1".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub sample_count: usize,
    pub sequence_ids: Vec<String>,
    /// Spotted minus ground-truth apex, in frames.
    pub errors: Vec<i64>,
    pub mae: f64,
    /// `None` when fewer than two samples.
    pub se: Option<f64>,
    pub exact_hit_rate: f64,
    pub flat_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_plane_breakdown: Option<BTreeMap<PlaneId, PlaneScore>>,
    pub metadata: ReportMetadata,
}

pub fn build_report(outcomes: &[SampleOutcome], method: &str) -> Result<EvalReport> {
    if outcomes.is_empty() {
        return Err(Error::Invalid(format!(
            "no samples to evaluate for {method}"
        )));
    }
    let errors: Vec<i64> = outcomes.iter().map(SampleOutcome::error).collect();
    let per_plane_breakdown = if outcomes.iter().all(|o| o.per_plane.is_some()) {
        let mut by_plane: BTreeMap<PlaneId, Vec<i64>> = BTreeMap::new();
        for o in outcomes {
            for (&plane, &apex) in o.per_plane.as_ref().unwrap() {
                by_plane
                    .entry(plane)
                    .or_default()
                    .push(apex as i64 - o.truth_apex as i64);
            }
        }
        let scores = by_plane
            .into_iter()
            .map(|(p, errs)| {
                Ok((
                    p,
                    PlaneScore {
                        mae: mae(&errs)?,
                        exact_hit_rate: hit_rate(&errs)?,
                    },
                ))
            })
            .collect::<Result<_>>()?;
        Some(scores)
    } else {
        None
    };
    Ok(EvalReport {
        method: method.to_string(),
        sample_count: outcomes.len(),
        sequence_ids: outcomes.iter().map(|o| o.sequence_id.clone()).collect(),
        mae: mae(&errors)?,
        se: se(&errors).ok(),
        exact_hit_rate: hit_rate(&errors)?,
        flat_count: outcomes.iter().filter(|o| o.flat).count(),
        errors,
        per_plane_breakdown,
        metadata: ReportMetadata::default(),
    })
}

/// A published result carried verbatim for comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuotedRow {
    pub method: &'static str,
    pub mae: f64,
    pub se: f64,
    pub exact_hit_rate: Option<f64>,
}

/// Published CASME results, quoted, not recomputed.
pub const QUOTED_RESULTS: [QuotedRow; 4] = [
    QuotedRow {
        method: "LBP (BS-RoIs)",
        mae: 5.20,
        se: 0.58,
        exact_hit_rate: None,
    },
    QuotedRow {
        method: "RHOOF",
        mae: 3.60,
        se: 0.35,
        exact_hit_rate: None,
    },
    QuotedRow {
        method: "LBP-TOP",
        mae: 2.54,
        se: 0.23,
        exact_hit_rate: None,
    },
    QuotedRow {
        method: "LBP-SIPl",
        mae: 1.76,
        se: 0.12,
        exact_hit_rate: Some(43.0),
    },
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Agreement {
    Consistent,
    Divergent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub method: String,
    pub computed_mae: f64,
    pub quoted_mae: f64,
    pub delta: f64,
    pub agreement: Agreement,
}

/// Compares against the published row of the same method, if any.
pub fn compare_with_quoted(report: &EvalReport) -> Option<Comparison> {
    let quoted = QUOTED_RESULTS.iter().find(|q| q.method == report.method)?;
    let delta = report.mae - quoted.mae;
    Some(Comparison {
        method: report.method.clone(),
        computed_mae: report.mae,
        quoted_mae: quoted.mae,
        delta,
        agreement: if delta.abs() <= CONSISTENT_MAE_DELTA {
            Agreement::Consistent
        } else {
            Agreement::Divergent
        },
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "—".to_string(), |v| format!("{v:.2}"))
}

/// Fixed-width table with the published rows; a published row is replaced
/// by its computed counterpart when one is supplied. Extra computed methods
/// follow.
pub fn render_table(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<16} {:>6} {:>6} {:>7} {:>4}  Source",
        "Method", "MAE", "SE", "Hit%", "N"
    );
    let _ = writeln!(out, "{}", "-".repeat(72));
    let computed_row = |out: &mut String, r: &EvalReport| {
        let note = match compare_with_quoted(r) {
            Some(c) => format!(
                "computed; published MAE {:.2}, delta {:+.2} ({})",
                c.quoted_mae,
                c.delta,
                match c.agreement {
                    Agreement::Consistent => "consistent",
                    Agreement::Divergent => "divergent",
                }
            ),
            None => "computed".to_string(),
        };
        let _ = writeln!(
            out,
            "{:<16} {:>6.2} {:>6} {:>7.2} {:>4}  {}",
            r.method,
            r.mae,
            fmt_opt(r.se),
            r.exact_hit_rate,
            r.sample_count,
            note
        );
    };
    for q in &QUOTED_RESULTS {
        match reports.iter().find(|r| r.method == q.method) {
            Some(r) => computed_row(&mut out, r),
            None => {
                let _ = writeln!(
                    out,
                    "{:<16} {:>6.2} {:>6.2} {:>7} {:>4}  quoted, not recomputed",
                    q.method,
                    q.mae,
                    q.se,
                    fmt_opt(q.exact_hit_rate),
                    "—"
                );
            }
        }
    }
    for r in reports {
        if !QUOTED_RESULTS.iter().any(|q| q.method == r.method) {
            computed_row(&mut out, r);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spotting::{FdCurve, Scope};

    fn outcome(id: &str, spotted: usize, truth: usize) -> SampleOutcome {
        SampleOutcome {
            sequence_id: id.into(),
            spotted_apex: spotted,
            truth_apex: truth,
            flat: false,
            per_plane: None,
        }
    }

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&[1, -2, 3]).unwrap(), 2.0);
        assert_eq!(mae(&[0, 0, 0]).unwrap(), 0.0);
        assert!(mae(&[]).is_err());
    }

    #[test]
    fn se_examples() {
        assert_eq!(se(&[2, -2, 2, 2]).unwrap(), 0.0);
        assert_eq!(se(&[1, 3]).unwrap(), 1.0);
        assert_eq!(se(&[-1, 3]).unwrap(), 1.0);
        assert!(se(&[4]).is_err());
    }

    #[test]
    fn hit_rate_examples() {
        let spot = |apex| SpotResult {
            apex_frame: apex,
            peak_value: 1.0f64,
            flat: false,
            curve: FdCurve {
                values: vec![],
                planes: vec![],
                scope: Scope::AllPlanes,
            },
        };
        let truth = |apex| Annotation {
            onset: 1,
            apex,
            offset: 20,
        };
        let spots = [spot(3), spot(5), spot(7), spot(9)];
        let truths = [truth(3), truth(5), truth(7), truth(10)];
        assert_eq!(exact_hit_rate(&spots, &truths).unwrap(), 75.0);
        let misses = [truth(1), truth(1), truth(1), truth(1)];
        assert_eq!(exact_hit_rate(&spots, &misses).unwrap(), 0.0);
        assert!(exact_hit_rate(&spots[..2], &truths).is_err());
    }

    #[test]
    fn single_exact_sample() {
        let r = build_report(&[outcome("a", 4, 4)], "LBP-SIPl").unwrap();
        assert_eq!(r.mae, 0.0);
        assert_eq!(r.se, None);
        assert_eq!(r.exact_hit_rate, 100.0);
        assert!(r.per_plane_breakdown.is_none());
        let table = render_table(&[r]);
        assert!(table.contains("—"));
    }

    #[test]
    fn per_plane_breakdown_when_available() {
        let mut a = outcome("a", 4, 4);
        let mut b = outcome("b", 6, 5);
        a.per_plane = Some([(PlaneId::Sip1, 4), (PlaneId::Sip2, 1)].into());
        b.per_plane = Some([(PlaneId::Sip1, 5), (PlaneId::Sip2, 5)].into());
        let r = build_report(&[a, b], "LBP-SIPl").unwrap();
        let pp = r.per_plane_breakdown.unwrap();
        assert_eq!(pp[&PlaneId::Sip1].mae, 0.0);
        assert_eq!(pp[&PlaneId::Sip1].exact_hit_rate, 100.0);
        assert_eq!(pp[&PlaneId::Sip2].mae, 1.5);
        assert_eq!(pp[&PlaneId::Sip2].exact_hit_rate, 50.0);
    }

    #[test]
    fn table_lists_published_rows() {
        let r = build_report(&[outcome("a", 4, 4), outcome("b", 7, 5)], "LBP-SIPl").unwrap();
        let table = render_table(&[r]);
        for line in [
            "LBP (BS-RoIs)",
            "5.20",
            "0.58",
            "RHOOF",
            "3.60",
            "0.35",
            "2.54",
            "0.23",
        ] {
            assert!(table.contains(line), "{line} missing:\n{table}");
        }
        assert!(table.contains("published MAE 1.76"));
        assert_eq!(table.matches("quoted, not recomputed").count(), 3);
    }

    #[test]
    fn comparison_verdicts() {
        let mut r = build_report(&[outcome("a", 4, 2), outcome("b", 5, 5)], "LBP-TOP").unwrap();
        // mae 1.0 vs 2.54
        assert_eq!(
            compare_with_quoted(&r).unwrap().agreement,
            Agreement::Divergent
        );
        r.mae = 2.2;
        assert_eq!(
            compare_with_quoted(&r).unwrap().agreement,
            Agreement::Consistent
        );
        r.method = "plane:SIP1".into();
        assert!(compare_with_quoted(&r).is_none());
    }
}
