//! The parity-change count `∥y∥_B`.
//!
//! `∥y∥_B` counts sites `i` for which some basis shape `B` and some `x` give
//! `y^T (T_i B) x = 1`. Since `y^T B x = Σ_c x(c) (B^T y)(c)`, such an `x`
//! exists iff `(T_i B)^T y != 0`, i.e. some column of `T_i B` sees an odd
//! number of occupied rows. That local criterion is what is evaluated here.

use std::collections::BTreeSet;

use super::RuleSet;
use crate::error::{Error, Result};
use crate::lattice::{Site, SiteOffset, SpinConfig};
use crate::scalar::Scalar;

type Shape = Vec<(SiteOffset, SiteOffset)>;

/// A finite set of rule shapes (rates ignored).
#[derive(Clone, Debug, PartialEq)]
pub struct BasisB {
    shapes: Vec<Shape>,
}

impl BasisB {
    /// Basis whose members must all occur in `rules` with positive rate.
    pub fn new<S: Scalar>(shapes: Vec<Shape>, rules: &RuleSet<S>) -> Result<Self> {
        let basis = Self::unchecked(shapes)?;
        for s in &basis.shapes {
            match rules.rate_of(s) {
                Some(r) if *r > S::zero() => {}
                _ => {
                    return Err(Error::Template(format!(
                        "basis shape {s:?} is not a rule of {}",
                        rules.name()
                    )))
                }
            }
        }
        Ok(basis)
    }

    /// Basis without the rule-membership check.
    pub fn unchecked(shapes: Vec<Shape>) -> Result<Self> {
        if shapes.is_empty() {
            return Err(Error::Template("empty basis".into()));
        }
        let shapes = shapes
            .into_iter()
            .map(|mut s| {
                s.sort();
                s.dedup();
                s
            })
            .collect();
        Ok(BasisB { shapes })
    }

    /// One-point basis `{{0} x {i, j}}` with `i != j`, for the spin systems;
    /// it gives `∥y∥_B = |y|`.
    pub fn one_point<S: Scalar>(rules: &RuleSet<S>) -> Result<Self> {
        let origin = Site::origin(rules.dim());
        let t = rules
            .templates()
            .iter()
            .find(|t| t.rows() == vec![origin.clone()] && t.columns().len() == 2)
            .ok_or_else(|| Error::Template(format!("{} has no {{0}} x {{i, j}} rule", rules.name())))?;
        Self::new(vec![t.pairs().to_vec()], rules)
    }

    /// Basis `{{0, e_k} x {i_k} : k = 1..d}`, for the duals. In `d = 1` it
    /// counts sites with `y(i) != y(i + 1)`, half of the ordered-pair gradient.
    pub fn gradient<S: Scalar>(rules: &RuleSet<S>) -> Result<Self> {
        let d = rules.dim();
        let origin = Site::origin(d);
        let mut shapes = Vec::new();
        for k in 0..d {
            let e = Site::unit(d, k);
            let t = rules
                .templates()
                .iter()
                .find(|t| t.rows() == vec![origin.clone(), e.clone()] && t.columns().len() == 1)
                .ok_or_else(|| {
                    Error::Template(format!("{} has no {{0, e_{}}} x {{i}} rule", rules.name(), k + 1))
                })?;
            shapes.push(t.pairs().to_vec());
        }
        Self::new(shapes, rules)
    }

    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }
}

fn charged(y: &SpinConfig, shape: &Shape, anchor: &Site) -> bool {
    let lattice = y.shape();
    let cols: BTreeSet<&SiteOffset> = shape.iter().map(|(_, c)| c).collect();
    cols.into_iter().any(|c| {
        shape
            .iter()
            .filter(|(_, cc)| cc == c)
            .filter(|(r, _)| y.get(&lattice.wrap(&anchor.add(r))))
            .count()
            % 2
            == 1
    })
}

pub fn norm_b(y: &SpinConfig, basis: &BasisB) -> Result<usize> {
    let lattice = y.shape();
    if basis
        .shapes
        .iter()
        .flatten()
        .any(|(r, c)| r.dim() != lattice.dim() || c.dim() != lattice.dim())
    {
        return Err(Error::ShapeMismatch("basis and configuration dimensions differ".into()));
    }
    let anchors: BTreeSet<Site> = match lattice.n_sites() {
        Some(n) => (0..n).map(|k| lattice.site_of(k)).collect(),
        None => {
            let occupied = y.occupied();
            basis
                .shapes
                .iter()
                .flat_map(|s| s.iter().map(|(r, _)| r))
                .flat_map(|r| occupied.iter().map(move |s| s.sub(r)))
                .collect()
        }
    };
    Ok(anchors
        .iter()
        .filter(|a| basis.shapes.iter().any(|s| charged(y, s, a)))
        .count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{gradient, LatticeShape};
    use crate::rules::{build_model, ModelSpec};
    use proptest::prelude::*;

    /// Literal evaluation: try every `x` on the columns of `T_i B`.
    fn brute_norm(y: &SpinConfig, basis: &BasisB) -> usize {
        let lattice = y.shape();
        let n = lattice.n_sites().unwrap();
        (0..n)
            .filter(|&k| {
                let a = lattice.site_of(k);
                basis.shapes().iter().any(|shape| {
                    let cols: Vec<Site> = {
                        let set: BTreeSet<Site> = shape.iter().map(|(_, c)| lattice.wrap(&a.add(c))).collect();
                        set.into_iter().collect()
                    };
                    (0u32..1 << cols.len()).any(|mask| {
                        let xs = |s: &Site| cols.iter().position(|c| c == s).is_some_and(|p| mask >> p & 1 == 1);
                        shape
                            .iter()
                            .filter(|(r, c)| {
                                y.get(&lattice.wrap(&a.add(r))) && xs(&lattice.wrap(&a.add(c)))
                            })
                            .count()
                            % 2
                            == 1
                    })
                })
            })
            .count()
    }

    #[test]
    fn one_point_basis_counts_particles() {
        let r = build_model(&ModelSpec::rebellious(0.5)).unwrap();
        let shape = vec![(Site::d1(0), Site::d1(1)), (Site::d1(0), Site::d1(2))];
        let basis = BasisB::new(vec![shape], &r).unwrap();
        let y = SpinConfig::sparse_1d([0, 5]);
        assert_eq!(norm_b(&y, &basis).unwrap(), 2);
        assert_eq!(norm_b(&SpinConfig::sparse_1d([]), &basis).unwrap(), 0);
    }

    #[test]
    fn gradient_basis_counts_forward_walls() {
        let dual = build_model(&ModelSpec::rebellious(0.5).dual()).unwrap();
        let basis = BasisB::gradient(&dual).unwrap();
        let ring = LatticeShape::ring(5).unwrap();
        let y = SpinConfig::from_bits(&ring, "00110").unwrap();
        assert_eq!(norm_b(&y, &basis).unwrap(), 2);
        assert_eq!(brute_norm(&y, &basis), 2);
        assert_eq!(gradient(&y), 4);
    }

    #[test]
    fn basis_must_be_rules() {
        let r = build_model(&ModelSpec::rebellious(1.0)).unwrap();
        let shape = vec![(Site::d1(0), Site::d1(1)), (Site::d1(0), Site::d1(2))];
        assert!(BasisB::new(vec![shape], &r).is_err());
        assert!(BasisB::unchecked(vec![]).is_err());
        assert!(BasisB::one_point(&r).is_ok());
    }

    proptest! {
        #[test]
        fn norms_match_literal_evaluation(bits in 0u64..(1 << 10)) {
            let ring = LatticeShape::ring(10).unwrap();
            let y = SpinConfig::from_state_index(&ring, bits).unwrap();
            let x_rules = build_model(&ModelSpec::rebellious(0.3)).unwrap();
            let one = BasisB::one_point(&x_rules).unwrap();
            prop_assert_eq!(norm_b(&y, &one).unwrap(), y.ones());
            prop_assert_eq!(norm_b(&y, &one).unwrap(), brute_norm(&y, &one));
            let dual = build_model(&ModelSpec::rebellious(0.3).dual()).unwrap();
            let grad = BasisB::gradient(&dual).unwrap();
            prop_assert_eq!(norm_b(&y, &grad).unwrap(), brute_norm(&y, &grad));
            prop_assert_eq!(2 * norm_b(&y, &grad).unwrap(), gradient(&y));
        }

        #[test]
        fn sparse_and_dense_agree(sites in proptest::collection::btree_set(0i64..20, 0..8)) {
            let dual = build_model(&ModelSpec::disagreement(0.3).dual()).unwrap();
            let grad = BasisB::gradient(&dual).unwrap();
            let sparse = SpinConfig::sparse_1d(sites.iter().copied());
            let ring = LatticeShape::ring(40).unwrap();
            let mut dense = SpinConfig::zeros(&ring);
            for &s in &sites { dense.set(&Site::d1(s), true); }
            prop_assert_eq!(norm_b(&sparse, &grad).unwrap(), norm_b(&dense, &grad).unwrap());
        }
    }
}
