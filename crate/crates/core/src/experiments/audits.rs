//! Structural checks of the rebellious model against its dual.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{num, timed, StudyResult};
use crate::engine::{Caps, Simulator, Step};
use crate::error::{Error, Result};
use crate::lattice::{interface_map, LatticeShape, Site, SpinConfig};
use crate::rng::{derive_seed, stream, Purpose};
use crate::rules::{build_model, effective_flip_rate, ModelSpec, RuleSet, RuleTemplate};
use crate::scalar::Rational;
use crate::stats::wilson;

/// Parameters of [`structural_audits`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditParams {
    pub seed: u64,
    /// α values for the symbolic rate match, as `(numerator, denominator)`.
    pub exact_alphas: Vec<(i64, i64)>,
    /// α values for the interval holding test.
    pub holding_alphas: Vec<f64>,
    pub lengths: Vec<usize>,
    pub times: Vec<f64>,
    pub replicas: u64,
    pub tolerance: f64,
}

impl AuditParams {
    pub fn new(replicas: u64, seed: u64) -> Self {
        AuditParams {
            seed,
            exact_alphas: vec![(0, 1), (1, 3), (1, 2), (1, 1)],
            holding_alphas: vec![0.2, 0.5, 0.8],
            lengths: (4..=12).collect(),
            times: vec![0.1, 0.25],
            replicas,
            tolerance: 0.01,
        }
    }
}

/// `α y(s-1) + α y(s) + (1-α)(y(s-2) + y(s+1))` on walls `y`.
fn closed_form(alpha: Rational, y: &SpinConfig, s: i64) -> Rational {
    let w = |i: i64| Rational::from_integer(y.get(&y.shape().wrap(&Site::d1(i))) as i64);
    let one = Rational::from_integer(1);
    alpha * (w(s - 1) + w(s)) + (one - alpha) * (w(s - 2) + w(s + 1))
}

/// Total rate of dual instances on `y` whose toggled set is exactly `{s-1, s}`.
fn dual_rate(dual: &RuleSet<Rational>, y: &SpinConfig, s: i64) -> Rational {
    let shape = y.shape();
    let want = [shape.wrap(&Site::d1(s - 1)), shape.wrap(&Site::d1(s))];
    let n = shape.n_sites().unwrap_or(0) as i64;
    let mut total = Rational::from_integer(0);
    for t in dual.templates() {
        for a in 0..n {
            let mut got = t.toggles(y, &Site::d1(a));
            got.sort();
            if got.len() == 2 && got.iter().all(|g| want.contains(g)) {
                total += *t.rate();
            }
        }
    }
    total
}

/// For every 5-site pattern `x(s-2..s+2)` on a ring of 10 (other sites 0)
/// and every α given, compares the rebellious flip rate of `s`, its closed
/// form in the walls, and the dual rate of toggling walls `s-1, s` of
/// `interface_map(x)`. All arithmetic is exact.
pub fn interface_rate_audit(alphas: &[(i64, i64)]) -> Result<StudyResult> {
    timed(|| {
        let shape = LatticeShape::ring(10)?;
        let s = 5i64;
        let mut res = StudyResult::new(
            "interface_rate_audit",
            &alphas,
            vec![],
            &["alpha", "pattern", "flip_rate", "closed_form", "dual_rate", "equal"],
        );
        let mut mismatches = 0usize;
        for &(p, q) in alphas {
            if q <= 0 || p < 0 || p > q {
                return Err(Error::param("alpha", format!("{p}/{q} is outside [0, 1]")));
            }
            let alpha = Rational::new(p, q);
            let primal = build_model(&ModelSpec::rebellious(alpha))?;
            let dual = build_model(&ModelSpec::rebellious(alpha).dual())?;
            for mask in 0u32..32 {
                let mut x = SpinConfig::zeros(&shape);
                let mut pattern = String::new();
                for k in 0..5 {
                    let bit = mask >> (4 - k) & 1 == 1;
                    x.set(&Site::d1(s - 2 + k as i64), bit);
                    pattern.push(if bit { '1' } else { '0' });
                }
                let y = interface_map(&x)?;
                let f = effective_flip_rate(&primal, &x, &Site::d1(s))?;
                let c = closed_form(alpha, &y, s);
                let d = dual_rate(&dual, &y, s);
                let eq = f == c && c == d;
                mismatches += usize::from(!eq);
                res.push(vec![
                    format!("{p}/{q}").into(),
                    pattern.into(),
                    f.to_string().into(),
                    c.to_string().into(),
                    d.to_string().into(),
                    eq.into(),
                ]);
            }
        }
        res.set_summary("patterns", res.rows.len());
        res.set_summary("mismatches", mismatches);
        res.set_summary("exact_match", mismatches == 0);
        Ok(res)
    })
}

/// Rebellious rules at α = 1 against the nearest-neighbour voter table.
fn voter_reduction() -> Result<bool> {
    let reb = build_model(&ModelSpec::rebellious(Rational::from_integer(1)))?;
    let one = Rational::from_integer(1);
    let voter = RuleSet::new(
        1,
        "voter",
        vec![RuleTemplate::row_1d(0, &[-1, 0], one)?, RuleTemplate::row_1d(0, &[0, 1], one)?],
    )?;
    Ok(reb.same_family(&voter))
}

struct Holding {
    /// No flip before each time.
    held: Vec<bool>,
    /// `X_t` equals the start at each time.
    returned: Vec<bool>,
}

fn holding_run(rules: &RuleSet<f64>, n: usize, times: &[f64], seed: u64, replica: u64) -> Result<Holding> {
    let x0 = SpinConfig::sparse_1d(0..n as i64);
    let mut sim = Simulator::sparse(rules, &x0, stream(seed, replica, Purpose::Dynamics), Caps::default())?;
    let mut first = f64::INFINITY;
    let mut returned = Vec::with_capacity(times.len());
    for &t in times {
        loop {
            match sim.step(t) {
                Step::Event { .. } => first = first.min(sim.time()),
                Step::Null => {}
                _ => break,
            }
        }
        returned.push(sim.ones() == n && (0..n as i64).all(|i| sim.get(&Site::d1(i))));
    }
    Ok(Holding {
        held: times.iter().map(|&t| first > t).collect(),
        returned,
    })
}

/// The three structural audits: interface rates equal dual rates, α = 1 is
/// the voter model, and intervals of ones are left at total rate 4.
///
/// The holding audit reports two quantities per `(α, n, t)`: the probability
/// of no flip before `t`, compared with `e^{-4t}` within `tolerance`, and
/// `P[X_t = x_n]`, which also counts excursions that return and so only
/// bounds `e^{-4t}` from above.
pub fn structural_audits(p: &AuditParams) -> Result<StudyResult> {
    timed(|| {
        if p.replicas == 0 || p.lengths.iter().any(|&n| n < 4) {
            return Err(Error::param("lengths", "intervals need length at least 4 and replicas > 0"));
        }
        if p.times.is_empty() || p.times.windows(2).any(|w| w[1] <= w[0]) || p.times[0] <= 0.0 {
            return Err(Error::param("times", "need positive, increasing times"));
        }
        let iface = interface_rate_audit(&p.exact_alphas)?;
        let voter = voter_reduction()?;

        let mut res = StudyResult::new(
            "structural_audits",
            p,
            vec![p.seed],
            &["audit", "alpha", "n", "t", "p_hold", "lo", "hi", "p_return", "expected", "pass"],
        );
        res.push(vec![
            "interface-rates".into(),
            serde_json::Value::Null,
            serde_json::Value::Null,
            serde_json::Value::Null,
            serde_json::Value::Null,
            serde_json::Value::Null,
            serde_json::Value::Null,
            serde_json::Value::Null,
            serde_json::Value::Null,
            iface.summary["exact_match"].clone(),
        ]);
        res.push(vec![
            "alpha-one-voter".into(),
            num(1.0),
            serde_json::Value::Null,
            serde_json::Value::Null,
            serde_json::Value::Null,
            serde_json::Value::Null,
            serde_json::Value::Null,
            serde_json::Value::Null,
            serde_json::Value::Null,
            voter.into(),
        ]);

        let mut worst_hold: f64 = 0.0;
        let mut min_return_margin = f64::INFINITY;
        let mut k = 0u64;
        for &alpha in &p.holding_alphas {
            let rules = build_model(&ModelSpec::rebellious(alpha))?;
            for &n in &p.lengths {
                let seed = derive_seed(p.seed, k);
                k += 1;
                let runs = (0..p.replicas)
                    .into_par_iter()
                    .map(|r| holding_run(&rules, n, &p.times, seed, r))
                    .collect::<Result<Vec<_>>>()?;
                for (j, &t) in p.times.iter().enumerate() {
                    let held = runs.iter().filter(|h| h.held[j]).count();
                    let back = runs.iter().filter(|h| h.returned[j]).count();
                    let e = wilson(held, runs.len());
                    let r = back as f64 / runs.len() as f64;
                    let expected = (-4.0 * t).exp();
                    let dev = (e.value - expected).abs();
                    worst_hold = worst_hold.max(dev);
                    min_return_margin = min_return_margin.min(r - expected);
                    res.push(vec![
                        "interval-holding".into(),
                        num(alpha),
                        n.into(),
                        num(t),
                        num(e.value),
                        num(e.lo),
                        num(e.hi),
                        num(r),
                        num(expected),
                        (dev <= p.tolerance).into(),
                    ]);
                }
            }
        }
        res.set_summary("interval", "wilson-95");
        res.set_summary("interface_exact_match", iface.summary["exact_match"].clone());
        res.set_summary("interface_patterns", iface.summary["patterns"].clone());
        res.set_summary("alpha_one_is_voter", voter);
        res.set_summary("holding_max_abs_deviation", worst_hold);
        res.set_summary("holding_pass", worst_hold <= p.tolerance);
        res.set_summary("return_min_margin", min_return_margin);
        Ok(res)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interface_rates_match_exactly() {
        let r = interface_rate_audit(&[(0, 1), (2, 7), (1, 1)]).unwrap();
        assert_eq!(r.summary["exact_match"], true);
        assert_eq!(r.rows.len(), 96);
    }

    #[test]
    fn voter_at_alpha_one() {
        assert!(voter_reduction().unwrap());
    }

    #[test]
    fn small_holding_run() {
        let mut p = AuditParams::new(4000, 3);
        p.holding_alphas = vec![0.5];
        p.lengths = vec![4, 9];
        let r = structural_audits(&p).unwrap();
        assert!(r.summary_f64("holding_max_abs_deviation").unwrap() < 0.05);
        assert!(r.summary_f64("return_min_margin").unwrap() > -0.05);
    }
}
