//! Oriented site percolation on `Z²_even = {(x, n) : x + n even}` and the
//! coarse-grained "good point" statistics of the one-dimensional dual.
//!
//! Boxes: `I_x = {2Lx - L, ..., 2Lx + L}` and `I'_x = {2Lx - 4L, ..., 2Lx + 4L}`.
//! A point `(x, n)` of `Z²_even` is good (`x ∈ χ_n`) when `Y_{nT}` has a
//! particle in `I_x` and, for `n >= 1`, `Y_t` has one in `I'_x` for every
//! `(n-1)T < t <= nT`.

use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_sparse, Event, RunOptions, Trajectory};
use crate::error::{Error, Result};
use crate::lattice::{Site, SpinConfig};
use crate::rng::{stream, Purpose};
use crate::rules::{build_model, ModelSpec};
use crate::stats::{correlation, wilson, Estimate};

/// Levels `W_0, ..., W_N` of oriented site percolation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PercolationRun {
    pub p: f64,
    pub halfwidth: i64,
    pub levels: Vec<BTreeSet<i64>>,
}

impl PercolationRun {
    /// Whether the last level is nonempty.
    pub fn survives(&self) -> bool {
        self.levels.last().is_some_and(|w| !w.is_empty())
    }
}

/// Runs `W_n = {x : ω_(x,n) = 1, ∃ x' ∈ W_{n-1}, |x - x'| = 1}` on
/// `[-halfwidth, halfwidth]`, with sites outside treated as closed.
///
/// The field is `ω_z = 1{U_z < p}` for uniforms drawn in a fixed order from
/// the seed, so runs with the same seed are monotone in `p`.
pub fn run_percolation(p: f64, w0: &[i64], n_levels: usize, halfwidth: i64, seed: u64) -> Result<PercolationRun> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param("p", "must lie in [0, 1]"));
    }
    if let Some(x) = w0.iter().find(|x| x.rem_euclid(2) != 0) {
        return Err(Error::Config(format!("W_0 must contain even sites only; found {x}")));
    }
    let reach = w0.iter().map(|x| x.abs()).max().unwrap_or(0) + n_levels as i64;
    if halfwidth < reach {
        return Err(Error::param(
            "region_halfwidth",
            format!("{halfwidth} truncates the light cone of W_0; need at least {reach}"),
        ));
    }
    let mut rng = stream(seed, 0, Purpose::Percolation);
    let mut levels = vec![w0.iter().copied().collect::<BTreeSet<i64>>()];
    for n in 1..=n_levels as i64 {
        let prev = levels.last().expect("level 0");
        let mut next = BTreeSet::new();
        let first = if (halfwidth + n) % 2 == 0 { -halfwidth } else { -halfwidth + 1 };
        let mut x = first;
        while x <= halfwidth {
            let open = rng.random::<f64>() < p;
            if open && (prev.contains(&(x - 1)) || prev.contains(&(x + 1))) {
                next.insert(x);
            }
            x += 2;
        }
        levels.push(next);
    }
    Ok(PercolationRun { p, halfwidth, levels })
}

/// Level reached from the all-open start after `burn_in` steps, a finite
/// stand-in for the upper invariant law (exploratory use only).
pub fn upper_invariant_level(p: f64, halfwidth: i64, burn_in: usize, seed: u64) -> Result<BTreeSet<i64>> {
    let width = halfwidth + burn_in as i64;
    let w0: Vec<i64> = (-width..=width).filter(|x| x % 2 == 0).collect();
    let run = run_percolation(p, &w0, burn_in, width + burn_in as i64, seed)?;
    Ok(run
        .levels
        .last()
        .expect("levels")
        .iter()
        .copied()
        .filter(|x| x.abs() <= halfwidth)
        .collect())
}

/// Good points per level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSeries {
    pub l: i64,
    pub t: f64,
    pub levels: Vec<BTreeSet<i64>>,
}

fn boxes(l: i64, x: i64) -> ((i64, i64), (i64, i64)) {
    ((2 * l * x - l, 2 * l * x + l), (2 * l * x - 4 * l, 2 * l * x + 4 * l))
}

fn occupied_in(y: &BTreeSet<i64>, (a, b): (i64, i64)) -> bool {
    y.range(a..=b).next().is_some()
}

/// Candidates `x` (with `x + n` even) whose box `I_x` meets the support.
fn meeting(y: &BTreeSet<i64>, l: i64, n: i64, wide: bool) -> BTreeSet<i64> {
    let reach = if wide { 4 * l } else { l };
    let mut out = BTreeSet::new();
    for &i in y {
        // 2Lx - reach <= i <= 2Lx + reach
        let lo = (i - reach).div_euclid(2 * l) + i64::from((i - reach).rem_euclid(2 * l) != 0);
        let hi = (i + reach).div_euclid(2 * l);
        for x in lo..=hi {
            if (x + n).rem_euclid(2) == 0 {
                out.insert(x);
            }
        }
    }
    out
}

fn to_set(y: &SpinConfig) -> Result<BTreeSet<i64>> {
    if y.shape().dim() != 1 || y.is_dense() {
        return Err(Error::Unsupported("good points are defined for sparse one-dimensional states".into()));
    }
    Ok(y.occupied().iter().map(|s| s.0[0]).collect())
}

/// Computes `χ_0, ..., χ_N` with `N = floor(horizon / T)` from a trajectory
/// with an event log; the intermediate-time clause is checked after every event.
pub fn chi_series(traj: &Trajectory, l: i64, t: f64) -> Result<ChiSeries> {
    if l < 1 {
        return Err(Error::param("L", "must be at least 1"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::param("T", "must be positive"));
    }
    let events = traj
        .events
        .as_ref()
        .ok_or_else(|| Error::Precondition("chi_series needs a trajectory with an event log".into()))?;
    let horizon = traj.sample_times.last().copied().unwrap_or(0.0);
    let n_levels = (horizon / t + 1e-9).floor() as usize;
    let mut y = to_set(&traj.initial)?;
    let mut levels = vec![meeting(&y, l, 0, false)];
    let mut k = 0usize;
    for n in 1..=n_levels as i64 {
        let end = n as f64 * t;
        let mut alive = meeting(&y, l, n, true);
        while k < events.len() && events[k].time <= end {
            let removed = apply(&mut y, &events[k]);
            for i in removed {
                alive.retain(|&x| {
                    let (_, wide) = boxes(l, x);
                    !(wide.0 <= i && i <= wide.1) || occupied_in(&y, wide)
                });
            }
            k += 1;
        }
        levels.push(alive.into_iter().filter(|&x| occupied_in(&y, boxes(l, x).0)).collect());
    }
    Ok(ChiSeries { l, t, levels })
}

/// Applies an event and returns the sites it emptied.
fn apply(y: &mut BTreeSet<i64>, e: &Event) -> Vec<i64> {
    let mut removed = Vec::new();
    for s in &e.flips {
        let i = s.0[0];
        if !y.remove(&i) {
            y.insert(i);
        } else {
            removed.push(i);
        }
    }
    removed
}

/// Initial states for [`good_event_estimate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialSampler {
    /// i.i.d. Bernoulli(`q`) on the boxes around the probed points, resampled
    /// until the precondition holds.
    Product { q: f64 },
    /// A single particle at the far edge of `I_{x-1}` or `I_{x+1}` (alternating).
    Adversarial,
    /// Even replicas product, odd replicas adversarial.
    Mixed { q: f64 },
}

/// Output of [`good_event_estimate`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GoodEventEstimate {
    pub alpha: f64,
    pub l: i64,
    pub t: f64,
    /// `(x, P[x ∈ χ_1])` for the probed points `x = -1, 1`.
    pub p_hat: Vec<(i64, Estimate)>,
    /// Both probed points pooled.
    pub pooled: Estimate,
    /// `(k, corr(1{1 ∈ χ_1}, 1{1 + k ∈ χ_1}))` for `k = 1..=15`; `None` when
    /// `1 + k` is not a level-1 point or an indicator is constant.
    pub dependence: Vec<(i64, Option<f64>)>,
}

const PROBES: [i64; 2] = [-1, 1];
const MAX_OFFSET: i64 = 15;

fn sample_initial(sampler: InitialSampler, l: i64, probe: i64, replica: u64, seed: u64) -> Result<BTreeSet<i64>> {
    let adversarial = |replica: u64| -> BTreeSet<i64> {
        let far = if replica % 2 == 0 {
            boxes(l, probe - 1).0 .0
        } else {
            boxes(l, probe + 1).0 .1
        };
        BTreeSet::from([far])
    };
    let product = |q: f64| -> Result<BTreeSet<i64>> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::param("q", "must lie in (0, 1]"));
        }
        let mut rng = stream(seed, replica, Purpose::Sampler);
        // covers I'_x for every level-1 point in -1..=1 + MAX_OFFSET
        let (lo, hi) = (boxes(l, -2).1 .0, boxes(l, 1 + MAX_OFFSET + 1).1 .1);
        for _ in 0..1000 {
            let y: BTreeSet<i64> = (lo..=hi).filter(|_| rng.random::<f64>() < q).collect();
            if precondition(&y, l, probe) {
                return Ok(y);
            }
        }
        Err(Error::Precondition("product sampler cannot meet the neighbour-good precondition".into()))
    };
    let y = match sampler {
        InitialSampler::Product { q } => product(q)?,
        InitialSampler::Adversarial => adversarial(replica / 2),
        InitialSampler::Mixed { q } => {
            if replica % 2 == 0 {
                product(q)?
            } else {
                adversarial(replica / 2)
            }
        }
    };
    if !precondition(&y, l, probe) {
        return Err(Error::Precondition("sampler violates the neighbour-good precondition".into()));
    }
    Ok(y)
}

fn precondition(y: &BTreeSet<i64>, l: i64, x: i64) -> bool {
    occupied_in(y, boxes(l, x - 1).0) || occupied_in(y, boxes(l, x + 1).0)
}

/// Estimates `P[x ∈ χ_1]` for the dual of the rebellious model at `alpha`,
/// given `χ_0 ∩ {x - 1, x + 1} ≠ ∅`, and the dependence profile of the
/// level-1 indicators.
pub fn good_event_estimate(
    alpha: f64,
    l: i64,
    t: f64,
    replicas: u64,
    sampler: InitialSampler,
    seed: u64,
) -> Result<GoodEventEstimate> {
    if replicas == 0 {
        return Err(Error::param("replicas", "must be positive"));
    }
    if l < 1 {
        return Err(Error::param("L", "must be at least 1"));
    }
    let rules = build_model(&ModelSpec::rebellious(alpha).dual())?;
    // replica r probes PROBES[r % 2]
    let outcomes: Vec<Result<(i64, bool, Vec<bool>)>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let probe = PROBES[(r % 2) as usize];
            let y0 = sample_initial(sampler, l, probe, r / 2, seed)?;
            let y0 = SpinConfig::sparse(1, y0.into_iter().map(Site::d1))?;
            let opts = RunOptions::new(seed, vec![t]).replica(r).record_events();
            let traj = run_sparse(&rules, &y0, &opts)?;
            let chi = chi_series(&traj, l, t)?;
            let level = chi.levels.get(1).cloned().unwrap_or_default();
            let row = (1..=MAX_OFFSET).map(|k| level.contains(&(1 + k))).collect();
            Ok((probe, level.contains(&probe), row))
        })
        .collect();
    let mut hits = [0usize; 2];
    let mut counts = [0usize; 2];
    let mut base = Vec::new();
    let mut others: Vec<Vec<f64>> = vec![Vec::new(); MAX_OFFSET as usize];
    for o in outcomes {
        let (probe, good, row) = o?;
        let k = usize::from(probe == 1);
        counts[k] += 1;
        hits[k] += usize::from(good);
        if probe == 1 {
            base.push(f64::from(u8::from(good)));
            for (j, v) in row.into_iter().enumerate() {
                others[j].push(f64::from(u8::from(v)));
            }
        }
    }
    let dependence = (1..=MAX_OFFSET)
        .map(|k| {
            let c = if k % 2 == 0 {
                correlation(&base, &others[(k - 1) as usize])
            } else {
                None
            };
            (k, c)
        })
        .collect();
    Ok(GoodEventEstimate {
        alpha,
        l,
        t,
        p_hat: PROBES
            .iter()
            .enumerate()
            .map(|(k, &x)| (x, wilson(hits[k], counts[k])))
            .collect(),
        pooled: wilson(hits[0] + hits[1], counts[0] + counts[1]),
        dependence,
    })
}

/// `|D_K(y, y')|` and `η(y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProximityStats {
    pub d_k: usize,
    pub eta: BTreeSet<i64>,
}

/// `|D_K| = #{(i, j) : y(i) = 1 = y'(j), |i - j| <= K}` and
/// `η(y) = {even x : I_x ∩ supp(y) ≠ ∅}`.
pub fn proximity_stats(y: &SpinConfig, y2: &SpinConfig, k: i64, l: i64) -> Result<ProximityStats> {
    if k < 0 || l < 1 {
        return Err(Error::param("K", "K must be nonnegative and L positive"));
    }
    let a = to_set(y)?;
    let b = to_set(y2)?;
    let d_k = a.iter().map(|&i| b.range(i - k..=i + k).count()).sum();
    Ok(ProximityStats {
        d_k,
        eta: meeting(&a, l, 0, false),
    })
}
