//! Survival of dual particle systems from finite starts.

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{num, timed, StudyResult};
use crate::engine::{run_sparse, sample_survival, Caps, RunOptions, RunStatus};
use crate::error::{Error, Result};
use crate::lattice::{gradient, SpinConfig};
use crate::rng::{derive_seed, stream, Purpose};
use crate::rules::{build_model, ModelSpec};
use crate::stats::{quantile, wilson, Estimate};

/// Parameters of [`survival_scan`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalParams {
    /// Model whose `alpha` is replaced by each grid value.
    pub model: ModelSpec<f64>,
    pub alpha_grid: Vec<f64>,
    /// Initial occupied sites on `Z`.
    pub y0: Vec<i64>,
    pub t: f64,
    pub replicas: u64,
    pub seed: u64,
    /// Fraction of the small-α plateau that defines the crossing.
    pub threshold_fraction: f64,
    /// Grid values at or below this define the plateau.
    pub plateau_alpha: f64,
    /// Runs reaching this many particles stop and count as alive.
    pub caps: Caps,
    pub bootstrap: usize,
}

impl SurvivalParams {
    /// ADBARW from two adjacent particles on the grid `0, step, ..., 1`.
    pub fn adbarw(step: f64, t: f64, replicas: u64, seed: u64) -> Self {
        let n = (1.0 / step).round() as usize;
        SurvivalParams {
            model: ModelSpec::rebellious(0.5).dual(),
            alpha_grid: (0..=n).map(|k| k as f64 / n as f64).collect(),
            y0: vec![0, 1],
            t,
            replicas,
            seed,
            threshold_fraction: 0.5,
            plateau_alpha: 0.05,
            caps: Caps {
                max_particles: 500,
                ..Caps::default()
            },
            bootstrap: 200,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.y0.len() % 2 == 1 {
            return Err(Error::param("y0", "an odd number of particles can never die out"));
        }
        let mut sites = self.y0.clone();
        sites.sort_unstable();
        sites.dedup();
        if sites.len() != self.y0.len() {
            return Err(Error::param("y0", "sites must be distinct"));
        }
        if self.alpha_grid.is_empty() || self.alpha_grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::param("alpha_grid", "need at least one value, all in [0, 1]"));
        }
        if self.alpha_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("alpha_grid", "must be strictly increasing"));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::param("t", "must be positive"));
        }
        if self.replicas == 0 {
            return Err(Error::param("replicas", "must be positive"));
        }
        if !(self.threshold_fraction > 0.0 && self.threshold_fraction < 1.0) {
            return Err(Error::param("threshold_fraction", "must lie in (0, 1)"));
        }
        if self.model.dim != 1 {
            return Err(Error::param("model", "survival scans run on Z"));
        }
        Ok(())
    }
}

/// Crossing of `p` through `fraction` of its plateau (mean over `alphas <= plateau_alpha`),
/// located by bisection on the piecewise-linear interpolant, scanning up from the smallest α.
pub fn crossing(alphas: &[f64], p: &[f64], fraction: f64, plateau_alpha: f64) -> Option<f64> {
    let low: Vec<f64> = alphas
        .iter()
        .zip(p)
        .filter(|(a, _)| **a <= plateau_alpha + 1e-9)
        .map(|(_, v)| *v)
        .collect();
    if low.is_empty() {
        return None;
    }
    let plateau = low.iter().sum::<f64>() / low.len() as f64;
    if plateau <= 0.0 {
        return None;
    }
    let thr = fraction * plateau;
    let k = (1..p.len()).find(|&k| p[k - 1] >= thr && p[k] < thr)?;
    let f = |a: f64| {
        let w = (a - alphas[k - 1]) / (alphas[k] - alphas[k - 1]);
        p[k - 1] + w * (p[k] - p[k - 1]) - thr
    };
    let (mut lo, mut hi) = (alphas[k - 1], alphas[k]);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// `P[Y_T != 0]` over an α-grid, with a threshold-crossing estimate of α_c.
pub fn survival_scan(p: &SurvivalParams) -> Result<StudyResult> {
    timed(|| {
        p.validate()?;
        let y0 = SpinConfig::sparse_1d(p.y0.iter().copied());
        let points = p
            .alpha_grid
            .par_iter()
            .enumerate()
            .map(|(k, &a)| {
                let spec = ModelSpec { alpha: a, ..p.model.clone() };
                let rules = build_model(&spec)?;
                sample_survival(&rules, &y0, p.t, p.replicas, derive_seed(p.seed, k as u64), p.caps)
            })
            .collect::<Result<Vec<_>>>()?;

        let mut res = StudyResult::new(
            "survival_scan",
            p,
            (0..p.alpha_grid.len() as u64).map(|k| derive_seed(p.seed, k)).collect(),
            &["alpha", "p_alive", "lo", "hi", "replicas", "capped", "seed"],
        );
        for (k, (a, s)) in p.alpha_grid.iter().zip(&points).enumerate() {
            res.push(vec![
                num(*a),
                num(s.estimate.value),
                num(s.estimate.lo),
                num(s.estimate.hi),
                s.estimate.n.into(),
                s.capped.into(),
                derive_seed(p.seed, k as u64).into(),
            ]);
        }

        let phat: Vec<f64> = points.iter().map(|s| s.estimate.value).collect();
        let alpha_c = crossing(&p.alpha_grid, &phat, p.threshold_fraction, p.plateau_alpha);
        let mut rng = stream(p.seed, 0, Purpose::Bootstrap);
        let n = p.replicas;
        let mut boot: Vec<f64> = (0..p.bootstrap)
            .filter_map(|_| {
                let b: Vec<f64> = phat
                    .iter()
                    .map(|&q| {
                        let draw = Binomial::new(n, q.clamp(0.0, 1.0)).expect("valid binomial");
                        draw.sample(&mut rng) as f64 / n as f64
                    })
                    .collect();
                crossing(&p.alpha_grid, &b, p.threshold_fraction, p.plateau_alpha)
            })
            .collect();
        boot.sort_by(f64::total_cmp);

        let violations: Vec<f64> = points
            .windows(2)
            .zip(p.alpha_grid.windows(2))
            .filter(|(s, _)| s[1].estimate.lo > s[0].estimate.hi)
            .map(|(_, a)| a[1])
            .collect();
        res.set_summary("interval", "wilson-95");
        res.set_summary("alpha_c", alpha_c);
        res.set_summary("alpha_c_lo", (!boot.is_empty()).then(|| quantile(&boot, 0.025)));
        res.set_summary("alpha_c_hi", (!boot.is_empty()).then(|| quantile(&boot, 0.975)));
        res.set_summary("bootstrap_samples", boot.len());
        res.set_summary("monotone_violations_at", violations);
        Ok(res)
    })
}

/// Which size is tracked by [`extinction_vs_growth`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    /// `|Y_t|`, the number of particles.
    Ones,
    /// `|∇X_t|`, ordered nearest-neighbour disagreements.
    Gradient,
}

/// Parameters of [`extinction_vs_growth`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionParams {
    pub model: ModelSpec<f64>,
    pub observable: Observable,
    /// Initial occupied sites on `Z`.
    pub y0: Vec<i64>,
    pub n_grid: Vec<usize>,
    pub t_grid: Vec<f64>,
    pub replicas: u64,
    pub seed: u64,
    pub caps: Caps,
}

impl ExtinctionParams {
    /// ADBARW at `alpha` from `δ_0 + δ_1`, particle counts.
    pub fn adbarw(alpha: f64, n_grid: Vec<usize>, t_grid: Vec<f64>, replicas: u64, seed: u64) -> Self {
        ExtinctionParams {
            model: ModelSpec::rebellious(alpha).dual(),
            observable: Observable::Ones,
            y0: vec![0, 1],
            n_grid,
            t_grid,
            replicas,
            seed,
            caps: Caps::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.t_grid.is_empty() || self.t_grid.windows(2).any(|w| w[1] <= w[0]) || self.t_grid[0] < 0.0 {
            return Err(Error::param("t_grid", "need nonnegative, strictly increasing times"));
        }
        if self.n_grid.is_empty() {
            return Err(Error::param("n_grid", "need at least one N"));
        }
        if self.replicas == 0 {
            return Err(Error::param("replicas", "must be positive"));
        }
        if self.model.dim != 1 {
            return Err(Error::param("model", "runs on Z"));
        }
        Ok(())
    }
}

/// `P[0 < size_t < N]` over `N × t`, where size is `|Y_t|` or `|∇X_t|`.
///
/// Runs stopped by a cap have size at least the cap from then on and count
/// outside every window below it.
pub fn extinction_vs_growth(p: &ExtinctionParams) -> Result<StudyResult> {
    timed(|| {
        p.validate()?;
        let rules = build_model(&p.model)?;
        let y0 = SpinConfig::sparse_1d(p.y0.iter().copied());
        let sizes: Vec<Vec<Option<usize>>> = (0..p.replicas)
            .into_par_iter()
            .map(|r| {
                let mut opts = RunOptions::new(p.seed, p.t_grid.clone()).replica(r);
                opts.caps = p.caps;
                let tr = run_sparse(&rules, &y0, &opts)?;
                let mut v: Vec<Option<usize>> = tr
                    .samples
                    .iter()
                    .map(|x| {
                        Some(match p.observable {
                            Observable::Ones => x.ones(),
                            Observable::Gradient => gradient(x),
                        })
                    })
                    .collect();
                if let RunStatus::Capped { .. } = tr.status {
                    v.resize(p.t_grid.len(), None);
                }
                Ok(v)
            })
            .collect::<Result<_>>()?;

        let capped = sizes.iter().filter(|v| v.iter().any(Option::is_none)).count();
        let mut res = StudyResult::new(
            "extinction_vs_growth",
            p,
            vec![p.seed],
            &["n", "t", "p_window", "lo", "hi", "p_zero", "replicas"],
        );
        let mut worst: Option<Estimate> = None;
        for &n in &p.n_grid {
            for (k, &t) in p.t_grid.iter().enumerate() {
                let inside = sizes
                    .iter()
                    .filter(|v| v[k].is_some_and(|s| s > 0 && s < n.max(1)))
                    .count();
                let zero = sizes.iter().filter(|v| v[k] == Some(0)).count();
                let e = wilson(inside, p.replicas as usize);
                if k + 1 == p.t_grid.len() && worst.is_none_or(|w| e.value > w.value) {
                    worst = Some(e);
                }
                res.push(vec![
                    n.into(),
                    num(t),
                    num(e.value),
                    num(e.lo),
                    num(e.hi),
                    num(zero as f64 / p.replicas as f64),
                    p.replicas.into(),
                ]);
            }
        }
        // Later-time increases per N, reported only.
        let mut increases = Vec::new();
        for (i, &n) in p.n_grid.iter().enumerate() {
            let rows = &res.rows[i * p.t_grid.len()..(i + 1) * p.t_grid.len()];
            for w in rows.windows(2).skip(1) {
                let (a, b) = (&w[0], &w[1]);
                if b[3].as_f64() > a[4].as_f64() {
                    increases.push((n, b[1].as_f64()));
                }
            }
        }
        res.set_summary("interval", "wilson-95");
        res.set_summary("capped_runs", capped);
        res.set_summary("max_p_window_at_last_t", worst.map(|e| e.value));
        res.set_summary("significant_increases", increases);
        Ok(res)
    })
}
