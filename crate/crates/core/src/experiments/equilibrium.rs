//! Long-run statistics of spin systems on a ring from several initial laws.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{num, timed, StudyResult};
use crate::engine::{run_dense, RunOptions};
use crate::error::{Error, Result};
use crate::lattice::{make_config, Init, LatticeShape, SpinConfig};
use crate::rng::derive_seed;
use crate::rules::{build_model, ModelSpec};
use crate::stats::{mean_ci, Estimate};

/// Largest lag of the two-point function.
const MAX_LAG: usize = 5;

/// Initial law of an equilibrium probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum InitialLaw {
    /// Independent spins, one with probability `q`.
    Product { q: f64 },
    /// Ones on the first half of the ring.
    HalfSpace,
    /// Ones on `0..len`.
    Interval { len: usize },
}

impl InitialLaw {
    fn label(&self) -> String {
        match self {
            InitialLaw::Product { q } => format!("product({q})"),
            InitialLaw::HalfSpace => "half-space".into(),
            InitialLaw::Interval { len } => format!("interval({len})"),
        }
    }

    fn sample(&self, shape: &LatticeShape, seed: u64) -> Result<SpinConfig> {
        let n = shape.n_sites().unwrap_or(0) as i64;
        match self {
            InitialLaw::Product { q } => make_config(shape, &Init::Product { p: *q, seed }),
            InitialLaw::HalfSpace => make_config(shape, &Init::Interval { a: 0, b: n / 2 - 1 }),
            InitialLaw::Interval { len } => {
                if *len == 0 || *len as i64 >= n {
                    return Err(Error::param("len", "interval must be nonempty and shorter than the ring"));
                }
                make_config(shape, &Init::Interval { a: 0, b: *len as i64 - 1 })
            }
        }
    }

    /// Homogeneous starts are the ones whose statistics should agree with product(1/2).
    fn homogeneous(&self) -> bool {
        matches!(self, InitialLaw::Product { q } if *q > 0.0 && *q < 1.0)
    }
}

/// Parameters of [`equilibrium_probe`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumParams {
    pub model: ModelSpec<f64>,
    pub sites: usize,
    pub t_relax: f64,
    pub replicas: u64,
    pub laws: Vec<InitialLaw>,
    pub seed: u64,
}

impl EquilibriumParams {
    /// Rebellious model on a ring, product(1/2) and product(1/4) starts.
    pub fn rebellious(alpha: f64, sites: usize, t_relax: f64, replicas: u64, seed: u64) -> Self {
        EquilibriumParams {
            model: ModelSpec::rebellious(alpha),
            sites,
            t_relax,
            replicas,
            laws: vec![InitialLaw::Product { q: 0.5 }, InitialLaw::Product { q: 0.25 }],
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.sites < 2 * MAX_LAG + 1 {
            return Err(Error::param("sites", format!("need at least {}", 2 * MAX_LAG + 1)));
        }
        if !(self.t_relax >= 0.0 && self.t_relax.is_finite()) {
            return Err(Error::param("t_relax", "must be finite and nonnegative"));
        }
        if self.replicas == 0 || self.laws.is_empty() {
            return Err(Error::param("replicas", "need replicas and at least one initial law"));
        }
        if self.model.dim != 1 {
            return Err(Error::param("model", "equilibrium probes run on a ring"));
        }
        for l in &self.laws {
            if let InitialLaw::Product { q } = l {
                if !(0.0..=1.0).contains(q) {
                    return Err(Error::param("q", format!("{q} is outside [0, 1]")));
                }
            }
        }
        Ok(())
    }
}

struct Stats {
    density: f64,
    disagreement: f64,
    /// `mean_i x(i) x(i+k) - density^2`, `k = 1..=MAX_LAG`.
    covariance: [f64; MAX_LAG],
    trapped: bool,
}

fn stats(x: &SpinConfig) -> Stats {
    let n = x.shape().n_sites().unwrap_or(0);
    let v: Vec<f64> = (0..n).map(|k| x.get_index(k) as u8 as f64).collect();
    let density = v.iter().sum::<f64>() / n as f64;
    let disagreement = (0..n).filter(|&i| v[i] != v[(i + 1) % n]).count() as f64 / n as f64;
    let mut covariance = [0.0; MAX_LAG];
    for (k, c) in covariance.iter_mut().enumerate() {
        let s: f64 = (0..n).map(|i| v[i] * v[(i + k + 1) % n]).sum();
        *c = s / n as f64 - density * density;
    }
    Stats {
        density,
        disagreement,
        covariance,
        trapped: x.ones() == 0 || x.ones() == n,
    }
}

/// Density, nearest-neighbour disagreement and two-point covariances up to
/// lag 5 at `t_relax`, per initial law. Non-trapped runs of every
/// homogeneous law are compared with product(1/2) through the normal
/// two-sample statistic of the disagreement probability.
pub fn equilibrium_probe(p: &EquilibriumParams) -> Result<StudyResult> {
    timed(|| {
        p.validate()?;
        let rules = build_model(&p.model)?;
        let shape = LatticeShape::ring(p.sites)?;
        let mut res = StudyResult::new(
            "equilibrium_probe",
            p,
            (0..p.laws.len() as u64).map(|k| derive_seed(p.seed, k)).collect(),
            &["law", "statistic", "value", "lo", "hi", "runs", "trapped"],
        );
        let mut disagreement: Vec<(String, bool, Estimate)> = Vec::new();
        for (k, law) in p.laws.iter().enumerate() {
            let seed = derive_seed(p.seed, k as u64);
            let runs = (0..p.replicas)
                .into_par_iter()
                .map(|r| {
                    let x0 = law.sample(&shape, derive_seed(seed, r))?;
                    let opts = RunOptions::new(seed, vec![p.t_relax]).replica(r);
                    Ok(stats(run_dense(&rules, &x0, &opts)?.last()))
                })
                .collect::<Result<Vec<_>>>()?;
            let trapped = runs.iter().filter(|s| s.trapped).count();
            let live: Vec<&Stats> = runs.iter().filter(|s| !s.trapped).collect();
            let mut emit = |name: String, vals: Vec<f64>| {
                let e = mean_ci(&vals);
                res.push(vec![
                    law.label().into(),
                    name.into(),
                    num(e.value),
                    num(e.lo),
                    num(e.hi),
                    vals.len().into(),
                    trapped.into(),
                ]);
                e
            };
            emit("density".into(), runs.iter().map(|s| s.density).collect());
            emit("density_live".into(), live.iter().map(|s| s.density).collect());
            let d = emit("disagreement_live".into(), live.iter().map(|s| s.disagreement).collect());
            for lag in 0..MAX_LAG {
                emit(
                    format!("covariance_lag{}", lag + 1),
                    live.iter().map(|s| s.covariance[lag]).collect(),
                );
            }
            disagreement.push((law.label(), law.homogeneous(), d));
        }

        let reference = p
            .laws
            .iter()
            .position(|l| *l == InitialLaw::Product { q: 0.5 })
            .map(|k| disagreement[k].2);
        let mut agreement = serde_json::Map::new();
        if let Some(r) = reference {
            for (label, homogeneous, e) in &disagreement {
                if !homogeneous || e.n < 2 || r.n < 2 {
                    continue;
                }
                let se = |x: &Estimate| (x.hi - x.value) / crate::stats::Z95;
                let z = (e.value - r.value) / (se(e).powi(2) + se(&r).powi(2)).sqrt().max(f64::MIN_POSITIVE);
                agreement.insert(
                    label.clone(),
                    serde_json::json!({ "z": num(z), "agrees": z.abs() <= crate::stats::Z95 }),
                );
            }
        }
        res.set_summary("interval", "normal-95 over replicas");
        res.set_summary("disagreement_vs_product_half", agreement);
        Ok(res)
    })
}
