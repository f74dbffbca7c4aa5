//! Drift of the rightmost particle of the pure-branching dual, by local pattern.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{num, timed, StudyResult};
use crate::engine::{Caps, Simulator, Step};
use crate::error::{Error, Result};
use crate::lattice::{Site, SpinConfig};
use crate::rng::{stream, Purpose};
use crate::rules::{build_model, ModelSpec};
use crate::stats::Estimate;
use crate::stats::Z95;

/// Patterns of `y(r-2) .. y(r+2)` around the rightmost particle `r`, with the drift each should show.
pub const DRIFT_PATTERNS: [(&str, f64); 4] = [("00100", 2.0), ("01100", 3.0), ("10100", 1.0), ("11100", 1.0)];

/// Parameters of [`drift_audit`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftParams {
    pub alpha: f64,
    /// Moves of the rightmost particle to collect per pattern.
    pub samples: u64,
    /// Length of each restarted run from a single particle.
    pub run_length: f64,
    /// Independent workers; each collects `samples / workers` per pattern.
    pub workers: u64,
    pub seed: u64,
    /// Safety bound on the restarts of one worker.
    pub max_runs: u64,
}

impl DriftParams {
    pub fn new(samples: u64, seed: u64) -> Self {
        DriftParams {
            alpha: 0.0,
            samples,
            run_length: 20.0,
            workers: 8,
            seed,
            max_runs: 10_000_000,
        }
    }
}

#[derive(Clone, Copy, Default)]
struct Tally {
    time: f64,
    moves: u64,
    sum: f64,
    sum_sq: f64,
}

fn pattern_of(sim: &Simulator, r: i64) -> usize {
    let a = sim.get(&Site::d1(r - 2)) as usize;
    let b = sim.get(&Site::d1(r - 1)) as usize;
    2 * a + b
}

fn rightmost(sim: &Simulator, from: i64) -> i64 {
    let mut r = from;
    while !sim.get(&Site::d1(r)) {
        r -= 1;
    }
    r
}

fn worker(p: &DriftParams, spec: &ModelSpec<f64>, w: u64, quota: u64) -> Result<[Tally; 4]> {
    let rules = build_model(spec)?;
    let mut t = [Tally::default(); 4];
    let mut rng = stream(p.seed, w, Purpose::Dynamics);
    let y0 = SpinConfig::sparse_1d([0]);
    for _ in 0..p.max_runs {
        if t.iter().all(|x| x.moves >= quota) {
            return Ok(t);
        }
        let mut sim = Simulator::sparse(&rules, &y0, rng, Caps::default())?;
        let mut r = 0;
        let mut pat = pattern_of(&sim, r);
        let mut last = 0.0;
        loop {
            let step = sim.step(p.run_length);
            t[pat].time += sim.time() - last;
            last = sim.time();
            match step {
                Step::Event { .. } => {
                    let hi = sim.last_toggled().iter().map(|s| s.0[0]).max().unwrap_or(r);
                    let nr = if hi >= r { rightmost(&sim, hi.max(r)) } else { r };
                    if nr != r {
                        let d = (nr - r) as f64;
                        t[pat].moves += 1;
                        t[pat].sum += d;
                        t[pat].sum_sq += d * d;
                        r = nr;
                    }
                    pat = pattern_of(&sim, r);
                }
                Step::Null => {}
                Step::Horizon | Step::Frozen => break,
                Step::Capped(_) => return Err(Error::Precondition("drift run hit the particle cap".into())),
            }
        }
        rng = sim.into_rng();
    }
    Err(Error::Precondition(format!("a pattern stayed below {quota} moves after max_runs restarts")))
}

/// Empirical drift of the rightmost particle in each of [`DRIFT_PATTERNS`]:
/// the summed displacement of `r_t` while the pattern holds divided by the
/// time spent in it. The interval treats moves as a compound Poisson process.
pub fn drift_audit(p: &DriftParams) -> Result<StudyResult> {
    timed(|| {
        if !(0.0..=1.0).contains(&p.alpha) {
            return Err(Error::param("alpha", "must lie in [0, 1]"));
        }
        if p.samples == 0 || p.workers == 0 {
            return Err(Error::param("samples", "samples and workers must be positive"));
        }
        if !(p.run_length > 0.0) {
            return Err(Error::param("run_length", "must be positive"));
        }
        let spec = ModelSpec::rebellious(p.alpha).dual();
        let quota = p.samples.div_ceil(p.workers);
        let parts = (0..p.workers)
            .into_par_iter()
            .map(|w| worker(p, &spec, w, quota))
            .collect::<Result<Vec<_>>>()?;
        let mut total = [Tally::default(); 4];
        for part in &parts {
            for (a, b) in total.iter_mut().zip(part) {
                a.time += b.time;
                a.moves += b.moves;
                a.sum += b.sum;
                a.sum_sq += b.sum_sq;
            }
        }
        let mut res = StudyResult::new(
            "drift_audit",
            p,
            vec![p.seed],
            &["pattern", "expected", "drift", "lo", "hi", "moves", "time"],
        );
        let mut worst: f64 = 0.0;
        for ((name, expected), tl) in DRIFT_PATTERNS.iter().zip(&total) {
            let drift = tl.sum / tl.time;
            let se = tl.sum_sq.sqrt() / tl.time;
            let e = Estimate {
                value: drift,
                lo: drift - Z95 * se,
                hi: drift + Z95 * se,
                n: tl.moves as usize,
            };
            if p.alpha == 0.0 {
                worst = worst.max((drift - expected).abs());
            }
            res.push(vec![
                (*name).into(),
                num(*expected),
                num(e.value),
                num(e.lo),
                num(e.hi),
                tl.moves.into(),
                num(tl.time),
            ]);
        }
        res.set_summary("interval", "normal-95 (compound Poisson)");
        if p.alpha == 0.0 {
            res.set_summary("max_abs_deviation", worst);
        }
        Ok(res)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_audit_is_close() {
        let r = drift_audit(&DriftParams::new(4000, 5)).unwrap();
        let d = r.column_f64("drift").unwrap();
        for ((_, e), v) in DRIFT_PATTERNS.iter().zip(d) {
            assert!((v - e).abs() < 0.3, "{v} vs {e}");
        }
    }
}
