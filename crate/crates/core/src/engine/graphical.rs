//! Graphical representation on a torus: Poisson arrows per rule instance,
//! evaluated by a forward mod-2 sweep.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::lattice::{LatticeShape, SpinConfig};
use crate::rules::RuleSet;
use crate::scalar::Scalar;

/// One arrow: at `time`, template `template` acts at anchor index `anchor`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arrow {
    pub time: f64,
    pub template: usize,
    pub anchor: usize,
}

/// All arrows on `[0, horizon]`, sorted by time.
#[derive(Clone, Debug)]
pub struct ArrowRecord {
    pub shape: LatticeShape,
    pub horizon: f64,
    pub arrows: Vec<Arrow>,
    /// Per template and anchor: `(row index, column indices)` on the torus.
    wiring: Vec<Vec<Vec<(usize, Vec<usize>)>>>,
}

impl ArrowRecord {
    /// Samples independent Poisson arrows for every rule instance.
    pub fn sample<S: Scalar>(
        rules: &RuleSet<S>,
        shape: &LatticeShape,
        horizon: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let n = shape
            .n_sites()
            .ok_or_else(|| Error::Config("graphical runs need a torus".into()))?;
        shape.check_radius(rules.radius())?;
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::param("t", "must be finite and nonnegative"));
        }
        let mut wiring = Vec::new();
        let mut arrows = Vec::new();
        for (u, t) in rules.templates().iter().enumerate() {
            let mean = t.rate().to_f64_lossy() * horizon;
            let mut per_anchor = Vec::with_capacity(n);
            for k in 0..n {
                let a = shape.site_of(k);
                per_anchor.push(
                    t.rows()
                        .iter()
                        .map(|r| {
                            let cols = t
                                .row_columns(r)
                                .iter()
                                .map(|c| shape.index_of(&a.add(c)))
                                .collect();
                            (shape.index_of(&a.add(r)), cols)
                        })
                        .collect(),
                );
                if mean > 0.0 {
                    let count = Poisson::new(mean).expect("positive mean").sample(rng) as usize;
                    for _ in 0..count {
                        arrows.push(Arrow {
                            time: rng.random::<f64>() * horizon,
                            template: u,
                            anchor: k,
                        });
                    }
                }
            }
            wiring.push(per_anchor);
        }
        arrows.sort_by(|a, b| a.time.total_cmp(&b.time));
        Ok(ArrowRecord {
            shape: shape.clone(),
            horizon,
            arrows,
            wiring,
        })
    }

    fn apply(&self, state: &mut [u8], arrow: &Arrow) {
        let wires = &self.wiring[arrow.template][arrow.anchor];
        let flips: Vec<usize> = wires
            .iter()
            .filter(|(_, cols)| cols.iter().fold(0u8, |p, &c| p ^ state[c]) == 1)
            .map(|(r, _)| *r)
            .collect();
        for r in flips {
            state[r] ^= 1;
        }
    }

    /// State at `time <= horizon` obtained by sweeping the arrows forward from `x0`.
    pub fn evaluate_at(&self, x0: &SpinConfig, time: f64) -> Result<SpinConfig> {
        if x0.shape() != &self.shape {
            return Err(Error::ShapeMismatch("configuration and arrows differ in shape".into()));
        }
        let mut state = x0.to_bytes().expect("torus");
        for a in self.arrows.iter().take_while(|a| a.time <= time) {
            self.apply(&mut state, a);
        }
        SpinConfig::from_bytes(&self.shape, &state)
    }

    pub fn evaluate(&self, x0: &SpinConfig) -> Result<SpinConfig> {
        self.evaluate_at(x0, self.horizon)
    }

    /// Sweeps the transposed arrows backward from time `horizon`, which gives
    /// the dual state at time 0 read off the same picture.
    pub fn evaluate_dual(&self, y: &SpinConfig) -> Result<SpinConfig> {
        if y.shape() != &self.shape {
            return Err(Error::ShapeMismatch("configuration and arrows differ in shape".into()));
        }
        let mut state = y.to_bytes().expect("torus");
        for a in self.arrows.iter().rev() {
            let wires = &self.wiring[a.template][a.anchor];
            // transpose: every occupied row toggles its columns
            let mut toggles = Vec::new();
            for (r, cols) in wires {
                if state[*r] == 1 {
                    toggles.extend_from_slice(cols);
                }
            }
            for c in toggles {
                state[c] ^= 1;
            }
        }
        SpinConfig::from_bytes(&self.shape, &state)
    }
}

/// Samples arrows on `[0, t]` and evaluates the state at time `t`.
pub fn run_graphical<S: Scalar>(
    rules: &RuleSet<S>,
    x0: &SpinConfig,
    t: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(ArrowRecord, SpinConfig)> {
    let record = ArrowRecord::sample(rules, x0.shape(), t, rng)?;
    let xt = record.evaluate(x0)?;
    Ok((record, xt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::parity;
    use crate::rng::{stream, Purpose};
    use crate::rules::{build_model, ModelSpec};

    /// Integer path counts: a path may wait or follow an arrow from a column to its row.
    fn path_count_state(rec: &ArrowRecord, x0: &SpinConfig) -> SpinConfig {
        let mut counts: Vec<u64> = x0.to_bytes().unwrap().iter().map(|&b| b as u64).collect();
        for a in &rec.arrows {
            let wires = &rec.wiring[a.template][a.anchor];
            let add: Vec<(usize, u64)> = wires
                .iter()
                .map(|(r, cols)| (*r, cols.iter().map(|&c| counts[c]).sum()))
                .collect();
            for (r, v) in add {
                counts[r] += v;
            }
        }
        let bytes: Vec<u8> = counts.iter().map(|c| (c % 2) as u8).collect();
        SpinConfig::from_bytes(&rec.shape, &bytes).unwrap()
    }

    #[test]
    fn sweep_equals_path_count_parity() {
        let shape = LatticeShape::ring(7).unwrap();
        for spec in [ModelSpec::rebellious(0.4), ModelSpec::swapping(0.3), ModelSpec::rebellious(0.4).dual()] {
            let rules = build_model(&spec).unwrap();
            let mut rng = stream(5, 0, Purpose::Arrows);
            for k in 0..20u64 {
                let x0 = SpinConfig::from_state_index(&shape, (k * 37) % 128).unwrap();
                let (rec, xt) = run_graphical(&rules, &x0, 1.5, &mut rng).unwrap();
                assert_eq!(xt, path_count_state(&rec, &x0));
            }
        }
    }

    #[test]
    fn pathwise_duality_on_one_picture() {
        let shape = LatticeShape::ring(6).unwrap();
        let rules = build_model(&ModelSpec::disagreement(0.5)).unwrap();
        let mut rng = stream(8, 0, Purpose::Arrows);
        for k in 0..30u64 {
            let rec = ArrowRecord::sample(&rules, &shape, 2.0, &mut rng).unwrap();
            let x0 = SpinConfig::from_state_index(&shape, k * 5 % 64).unwrap();
            let y = SpinConfig::from_state_index(&shape, (k * 11 + 3) % 64).unwrap();
            let xt = rec.evaluate(&x0).unwrap();
            let y0 = rec.evaluate_dual(&y).unwrap();
            assert_eq!(parity(&xt, &y).unwrap(), parity(&x0, &y0).unwrap());
        }
    }
}
