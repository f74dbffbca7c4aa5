//! Density of the branching-annihilating dual on a ring while α is lowered slowly.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{num, timed, StudyResult};
use crate::engine::{Simulator, Step};
use crate::error::{Error, Result};
use crate::lattice::{LatticeShape, Site, SpinConfig};
use crate::rng::{stream, Purpose};
use crate::rules::{build_model, ModelSpec, RuleSet};
use crate::stats::{mean, mean_ci, quantile};

/// Parameters of [`density_anneal`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealParams {
    pub sites: usize,
    pub t_total: f64,
    /// α per stage; stages have equal length `t_total / schedule.len()`.
    pub schedule: Vec<f64>,
    pub replicas: u64,
    pub seed: u64,
    /// Fraction of the small-α excess density that defines the crossing.
    pub threshold_fraction: f64,
    /// Stages averaged on each side when smoothing the excess curve.
    pub smoothing: usize,
    pub bootstrap: usize,
}

impl AnnealParams {
    /// α lowered linearly from 1 to 0 in `stages` equal steps (stage midpoints).
    pub fn linear(sites: usize, t_total: f64, stages: usize, replicas: u64, seed: u64) -> Self {
        let schedule = (0..stages).map(|k| 1.0 - (k as f64 + 0.5) / stages as f64).collect();
        AnnealParams {
            sites,
            t_total,
            schedule,
            replicas,
            seed,
            threshold_fraction: 0.1,
            smoothing: 2,
            bootstrap: 200,
        }
    }

    /// Desk-scale default: 201 sites, `t_total = 3·10^4`, 100 stages.
    pub fn desk(seed: u64) -> Self {
        Self::linear(201, 3.0e4, 100, 8, seed)
    }

    /// Full-scale protocol: 700 sites, `t_total = 3·10^5`.
    pub fn full(seed: u64) -> Self {
        Self::linear(700, 3.0e5, 300, 4, seed)
    }

    fn validate(&self) -> Result<()> {
        if self.sites < 5 {
            return Err(Error::param("sites", "need at least 5 sites"));
        }
        if !(self.t_total > 0.0 && self.t_total.is_finite()) {
            return Err(Error::param("t_total", "must be positive"));
        }
        if self.schedule.is_empty() || self.schedule.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::param("schedule", "need at least one stage, every α in [0, 1]"));
        }
        if self.schedule.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::param("schedule", "must be non-increasing"));
        }
        if self.replicas == 0 {
            return Err(Error::param("replicas", "must be positive"));
        }
        if !(self.threshold_fraction > 0.0 && self.threshold_fraction < 1.0) {
            return Err(Error::param("threshold_fraction", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Rates of the templates of `generic` under `spec` (zero where `spec` has no such template).
pub fn model_rates(generic: &RuleSet<f64>, spec: &ModelSpec<f64>) -> Result<Vec<f64>> {
    let target = build_model(spec)?;
    if let Some(t) = target.templates().iter().find(|t| generic.rate_of(t.pairs()).is_none()) {
        return Err(Error::Template(format!("template {:?} is missing from {}", t.pairs(), generic.name())));
    }
    Ok(generic
        .templates()
        .iter()
        .map(|t| target.rate_of(t.pairs()).copied().unwrap_or(0.0))
        .collect())
}

/// Time-averaged density per stage for one replica.
fn anneal_replica(p: &AnnealParams, generic: &RuleSet<f64>, rates: &[Vec<f64>], replica: u64) -> Result<Vec<f64>> {
    let shape = LatticeShape::ring(p.sites)?;
    let mut x0 = SpinConfig::zeros(&shape);
    x0.set(&Site::d1(0), true);
    let mut sim = Simulator::dense(generic, &x0, stream(p.seed, replica, Purpose::Dynamics), true)?;
    let stage_len = p.t_total / p.schedule.len() as f64;
    let mut out = Vec::with_capacity(p.schedule.len());
    for (k, r) in rates.iter().enumerate() {
        sim.set_rates(r)?;
        let end = (k + 1) as f64 * stage_len;
        let mut last = sim.time();
        let mut area = 0.0;
        let mut ones = sim.ones() as f64;
        loop {
            let step = sim.step(end);
            area += ones * (sim.time() - last);
            last = sim.time();
            ones = sim.ones() as f64;
            match step {
                Step::Event { .. } | Step::Null => {}
                _ => break,
            }
        }
        out.push(area / (stage_len * p.sites as f64));
    }
    Ok(out)
}

/// Crossing estimate from per-replica excess-density curves, α descending.
///
/// The mean excess is smoothed with a centred moving average; the plateau is
/// its mean over stages with α <= 0.05; α_c is where the smoothed curve first
/// reaches `fraction` of the plateau, scanning down from the largest α, by
/// linear interpolation between stage values.
pub fn estimate_alpha_c(alphas: &[f64], excess: &[Vec<f64>], fraction: f64, smoothing: usize) -> Option<f64> {
    let n = alphas.len();
    if excess.is_empty() || n == 0 {
        return None;
    }
    let avg: Vec<f64> = (0..n).map(|k| mean(&excess.iter().map(|e| e[k]).collect::<Vec<_>>())).collect();
    let smooth: Vec<f64> = (0..n)
        .map(|k| {
            let lo = k.saturating_sub(smoothing);
            let hi = (k + smoothing).min(n - 1);
            mean(&avg[lo..=hi])
        })
        .collect();
    let low: Vec<f64> = (0..n).filter(|&k| alphas[k] <= 0.05 + 1e-9).map(|k| smooth[k]).collect();
    if low.is_empty() {
        return None;
    }
    let plateau = mean(&low);
    if plateau <= 0.0 {
        return None;
    }
    let thr = fraction * plateau;
    let k = (0..n).find(|&k| smooth[k] >= thr)?;
    if k == 0 {
        return Some(alphas[0]);
    }
    let (a0, a1, e0, e1) = (alphas[k - 1], alphas[k], smooth[k - 1], smooth[k]);
    Some(a0 + (a1 - a0) * (thr - e0) / (e1 - e0))
}

/// Anneals α along the schedule for the dual of the rebellious model on a
/// ring started from one particle, reporting the time-averaged density per
/// stage and the excess over the parity floor `1/sites`.
pub fn density_anneal(p: &AnnealParams) -> Result<StudyResult> {
    timed(|| {
        p.validate()?;
        let generic = build_model(&ModelSpec::rebellious(0.5).dual())?;
        let rates: Vec<Vec<f64>> = p
            .schedule
            .iter()
            .map(|&a| model_rates(&generic, &ModelSpec::rebellious(a).dual()))
            .collect::<Result<_>>()?;
        let curves: Vec<Vec<f64>> = (0..p.replicas)
            .into_par_iter()
            .map(|r| anneal_replica(p, &generic, &rates, r))
            .collect::<Result<_>>()?;
        let floor = 1.0 / p.sites as f64;
        let excess: Vec<Vec<f64>> = curves.iter().map(|c| c.iter().map(|d| d - floor).collect()).collect();

        let mut res = StudyResult::new(
            "density_anneal",
            p,
            vec![p.seed],
            &["stage", "alpha", "t_start", "t_end", "density", "density_lo", "density_hi", "excess"],
        );
        let stage_len = p.t_total / p.schedule.len() as f64;
        for (k, &a) in p.schedule.iter().enumerate() {
            let d: Vec<f64> = curves.iter().map(|c| c[k]).collect();
            let e = mean_ci(&d);
            res.push(vec![
                k.into(),
                num(a),
                num(k as f64 * stage_len),
                num((k + 1) as f64 * stage_len),
                num(e.value),
                num(e.lo),
                num(e.hi),
                num(e.value - floor),
            ]);
        }

        let alpha_c = estimate_alpha_c(&p.schedule, &excess, p.threshold_fraction, p.smoothing);
        let mut rng = stream(p.seed, 0, Purpose::Bootstrap);
        let mut boot: Vec<f64> = (0..p.bootstrap)
            .filter_map(|_| {
                let sample: Vec<Vec<f64>> = (0..excess.len())
                    .map(|_| excess[rng.random_range(0..excess.len())].clone())
                    .collect();
                estimate_alpha_c(&p.schedule, &sample, p.threshold_fraction, p.smoothing)
            })
            .collect();
        boot.sort_by(f64::total_cmp);

        // trend: ten α-bins, density must not drop as α decreases
        let bins = 10;
        let mut bin_means = Vec::new();
        for b in 0..bins {
            let hi = 1.0 - b as f64 / bins as f64;
            let lo = hi - 1.0 / bins as f64;
            let vals: Vec<f64> = p
                .schedule
                .iter()
                .enumerate()
                .filter(|(_, &a)| a <= hi && (a > lo || (b == bins - 1 && a >= lo)))
                .map(|(k, _)| mean(&curves.iter().map(|c| c[k]).collect::<Vec<_>>()))
                .collect();
            if !vals.is_empty() {
                bin_means.push(mean(&vals));
            }
        }
        let slack = 0.005;
        let violations = bin_means.windows(2).filter(|w| w[1] < w[0] - slack).count();

        res.set_summary("parity_floor", floor);
        res.set_summary("alpha_c", alpha_c);
        res.set_summary("alpha_c_lo", (!boot.is_empty()).then(|| quantile(&boot, 0.025)));
        res.set_summary("alpha_c_hi", (!boot.is_empty()).then(|| quantile(&boot, 0.975)));
        res.set_summary("bootstrap_samples", boot.len());
        res.set_summary("trend_bins", bin_means);
        res.set_summary("trend_violations", violations);
        res.set_summary("monotone_trend", violations == 0);
        Ok(res)
    })
}
