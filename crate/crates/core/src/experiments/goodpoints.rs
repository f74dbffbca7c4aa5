//! Block-scale good events of the dual of the rebellious model.

use serde::{Deserialize, Serialize};

use super::{num, timed, StudyResult};
use crate::error::{Error, Result};
use crate::percolation::{good_event_estimate, GoodEventEstimate, InitialSampler};
use crate::rng::derive_seed;

/// Parameters of [`good_event_sweep`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodEventParams {
    pub alpha: f64,
    /// Block scales, tried in order; `T = t_factor · L`.
    pub ls: Vec<i64>,
    pub t_factor: f64,
    pub replicas: u64,
    /// Density of the dense product start.
    pub q: f64,
    /// Level `p_hat` must reach for an `L` to be accepted.
    pub target: f64,
    /// Stop the sweep at the first accepted `L`.
    pub stop_at_first: bool,
    /// Replicas of the dependence profile at the accepted `L`.
    pub dependence_replicas: u64,
    /// The profile uses a product start with density `dependence_q_scale / L`.
    pub dependence_q_scale: f64,
    pub seed: u64,
}

impl GoodEventParams {
    pub fn new(seed: u64) -> Self {
        GoodEventParams {
            alpha: 0.0,
            ls: vec![4, 8, 16, 32],
            t_factor: 2.0,
            replicas: 2000,
            q: 0.5,
            target: 0.9,
            stop_at_first: true,
            dependence_replicas: 10_000,
            dependence_q_scale: 0.25,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.ls.is_empty() || self.ls.iter().any(|&l| l < 1) {
            return Err(Error::param("ls", "need at least one L >= 1"));
        }
        if !(self.t_factor > 0.0) {
            return Err(Error::param("t_factor", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::param("alpha", "must lie in [0, 1]"));
        }
        if !(self.target > 0.0 && self.target <= 1.0) {
            return Err(Error::param("target", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

fn push_estimate(res: &mut StudyResult, l: i64, t: f64, sampler: &str, e: &GoodEventEstimate) {
    for (x, est) in e.p_hat.iter().map(|(x, e)| (serde_json::Value::from(*x), e)).chain([("pooled".into(), &e.pooled)]) {
        res.push(vec![
            l.into(),
            num(t),
            sampler.into(),
            x,
            num(est.value),
            num(est.lo),
            num(est.hi),
            est.n.into(),
        ]);
    }
}

/// Sweeps `L` with `T = t_factor · L`, estimating `P[x ∈ χ_1]` from dense
/// product starts and from single-particle adversarial starts. The first
/// `L` where both pooled estimates reach `target` is accepted; there the
/// correlation of level-1 indicators at even offsets is measured from a
/// sparse product start, where the indicators are not almost surely one.
pub fn good_event_sweep(p: &GoodEventParams) -> Result<StudyResult> {
    timed(|| {
        p.validate()?;
        let mut res = StudyResult::new(
            "good_event_sweep",
            p,
            vec![p.seed],
            &["l", "t", "sampler", "x", "p_hat", "lo", "hi", "replicas"],
        );
        let mut accepted = None;
        let mut per_l = Vec::new();
        for (k, &l) in p.ls.iter().enumerate() {
            let t = p.t_factor * l as f64;
            let seed = derive_seed(p.seed, k as u64);
            let prod = good_event_estimate(p.alpha, l, t, p.replicas, InitialSampler::Product { q: p.q }, seed)?;
            let adv = good_event_estimate(p.alpha, l, t, p.replicas, InitialSampler::Adversarial, seed)?;
            push_estimate(&mut res, l, t, "product", &prod);
            push_estimate(&mut res, l, t, "adversarial", &adv);
            let ok = prod.pooled.value >= p.target && adv.pooled.value >= p.target;
            per_l.push(serde_json::json!({
                "l": l,
                "product": num(prod.pooled.value),
                "adversarial": num(adv.pooled.value),
                "reached": ok,
            }));
            if ok && accepted.is_none() {
                accepted = Some((l, t));
                if p.stop_at_first {
                    break;
                }
            }
        }
        res.set_summary("interval", "wilson-95");
        res.set_summary("sweep", per_l);
        res.set_summary("accepted_l", accepted.map(|a| a.0));

        if let (Some((l, t)), true) = (accepted, p.dependence_replicas > 0) {
            let q = (p.dependence_q_scale / l as f64).min(1.0);
            let dep = good_event_estimate(
                p.alpha,
                l,
                t,
                p.dependence_replicas,
                InitialSampler::Product { q },
                derive_seed(p.seed, 1 << 32),
            )?;
            push_estimate(&mut res, l, t, "dependence-product", &dep);
            let profile: Vec<serde_json::Value> = dep
                .dependence
                .iter()
                .filter(|(_, c)| c.is_some())
                .map(|(k, c)| serde_json::json!({ "offset": k, "correlation": c.map(num) }))
                .collect();
            let far = dep
                .dependence
                .iter()
                .filter(|(k, _)| *k >= 12)
                .filter_map(|(_, c)| *c)
                .map(f64::abs)
                .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
            res.set_summary("dependence_q", q);
            res.set_summary("dependence", profile);
            res.set_summary("max_abs_correlation_offset_ge_12", far);
        }
        Ok(res)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_sweep() {
        let mut p = GoodEventParams::new(2);
        p.ls = vec![2, 4];
        p.replicas = 40;
        p.target = 0.01;
        p.dependence_replicas = 40;
        let r = good_event_sweep(&p).unwrap();
        assert_eq!(r.summary["accepted_l"], 2);
        assert_eq!(r.rows.len(), 9);
        assert_eq!(r, good_event_sweep(&p).unwrap());
    }
}
