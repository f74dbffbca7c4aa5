//! Scripted studies. Each is a pure function of its parameters and seed and
//! returns a [`StudyResult`] table.

mod anneal;
mod audits;
mod drift;
mod equilibrium;
mod goodpoints;
mod survival;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use anneal::{density_anneal, estimate_alpha_c, model_rates, AnnealParams};
pub use audits::{interface_rate_audit, structural_audits, AuditParams};
pub use drift::{drift_audit, DriftParams, DRIFT_PATTERNS};
pub use equilibrium::{equilibrium_probe, EquilibriumParams, InitialLaw};
pub use goodpoints::{good_event_sweep, GoodEventParams};
pub use survival::{extinction_vs_growth, survival_scan, ExtinctionParams, Observable, SurvivalParams};

/// A self-describing result table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StudyResult {
    pub name: String,
    pub params: Value,
    pub seeds: Vec<u64>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub summary: Value,
    /// Not part of emitted files.
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

/// Equality ignores the wall clock.
impl PartialEq for StudyResult {
    fn eq(&self, o: &Self) -> bool {
        self.name == o.name
            && self.params == o.params
            && self.seeds == o.seeds
            && self.columns == o.columns
            && self.rows == o.rows
            && self.summary == o.summary
    }
}

impl StudyResult {
    pub fn new(name: &str, params: &impl Serialize, seeds: Vec<u64>, columns: &[&str]) -> Self {
        StudyResult {
            name: name.to_string(),
            params: serde_json::to_value(params).expect("parameters serialize"),
            seeds,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: Value::Object(Default::default()),
            wall_clock_secs: 0.0,
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width differs from header");
        self.rows.push(row);
    }

    pub fn set_summary(&mut self, key: &str, v: impl Serialize) {
        if let Value::Object(m) = &mut self.summary {
            m.insert(key.to_string(), serde_json::to_value(v).expect("summary serializes"));
        }
    }

    pub fn summary_f64(&self, key: &str) -> Option<f64> {
        self.summary.get(key).and_then(Value::as_f64)
    }

    /// Values of one column.
    pub fn column(&self, name: &str) -> Option<Vec<&Value>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[k]).collect())
    }

    /// One column as floats (non-numbers become NaN).
    pub fn column_f64(&self, name: &str) -> Option<Vec<f64>> {
        Some(
            self.column(name)?
                .into_iter()
                .map(|v| v.as_f64().unwrap_or(f64::NAN))
                .collect(),
        )
    }
}

pub(crate) fn timed<F: FnOnce() -> crate::Result<StudyResult>>(f: F) -> crate::Result<StudyResult> {
    let start = std::time::Instant::now();
    let mut r = f()?;
    r.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(r)
}

pub(crate) fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}
