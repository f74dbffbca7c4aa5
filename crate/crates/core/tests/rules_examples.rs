use cancellative::lattice::{LatticeShape, Site, SpinConfig};
use cancellative::rules::{analyze_ruleset, build_model, effective_flip_rate, transpose_dual, ModelSpec, RuleSet};
use cancellative::Rational;

fn alphas() -> Vec<Rational> {
    vec![Rational::new(0, 1), Rational::new(1, 4), Rational::new(3, 5), Rational::new(1, 1)]
}

#[test]
fn interval_exit_rate_is_four() {
    for a in alphas() {
        let rules = build_model(&ModelSpec::rebellious(a)).unwrap();
        let an = analyze_ruleset(&rules);
        for n in 4..=12 {
            let x = SpinConfig::sparse_1d(0..n);
            assert_eq!(an.total_exit_rate(&x), Rational::from_integer(4), "alpha {a} n {n}");
        }
    }
}

/// Template-by-template sum, independent of `effective_flip_rate`.
fn brute_rate(rules: &RuleSet<Rational>, x: &SpinConfig, i: &Site) -> Rational {
    let shape = x.shape();
    let n = shape.n_sites().unwrap();
    let mut total = Rational::from_integer(0);
    for t in rules.templates() {
        for k in 0..n {
            let anchor = shape.site_of(k);
            let toggled = t.toggles(x, &anchor);
            if toggled == vec![shape.wrap(i)] {
                total += *t.rate();
            }
        }
    }
    total
}

#[test]
fn neutral_np_half_disagreeing_neighbours() {
    let shape = LatticeShape::torus(vec![5, 5]).unwrap();
    let centre = Site::new(vec![2, 2]);
    let mut x = SpinConfig::zeros(&shape);
    for s in [[1, 1], [1, 2], [2, 3], [3, 3]] {
        x.set(&Site::new(s.to_vec()), true);
    }
    for a in alphas() {
        let rules = build_model(&ModelSpec::neutral_np(2, 1, a)).unwrap();
        let half = Rational::new(1, 2);
        let want = half * (half + a * half);
        assert_eq!(effective_flip_rate(&rules, &x, &centre).unwrap(), want);
        assert_eq!(brute_rate(&rules, &x, &centre), want);
    }
}

#[test]
fn affine_rate_vanishes_without_disagreement() {
    let shape = LatticeShape::torus(vec![5, 5]).unwrap();
    let x = SpinConfig::zeros(&shape);
    for a in alphas() {
        let rules = build_model(&ModelSpec::affine(2, 1, a)).unwrap();
        assert_eq!(effective_flip_rate(&rules, &x, &Site::new(vec![1, 4])).unwrap(), Rational::from_integer(0));
    }
}

#[test]
fn classification_and_transpose_for_every_model() {
    for a in [0.0, 0.3, 1.0] {
        for spec in [
            ModelSpec::neutral_np(2, 1, a),
            ModelSpec::affine(2, 1, a),
            ModelSpec::rebellious(a),
            ModelSpec::disagreement(a),
            ModelSpec::swapping(a),
        ] {
            let x = build_model(&spec).unwrap();
            let y = build_model(&spec.clone().dual()).unwrap();
            assert!(x.spin_flip_symmetric(), "{}", spec.label());
            assert!(y.parity_preserving(), "{}", spec.label());
            assert!(transpose_dual(&x).same_family(&y));
            assert!(transpose_dual(&transpose_dual(&x)).same_family(&x));
        }
    }
}

#[test]
fn rule_sets_round_trip_through_text() {
    let r = build_model(&ModelSpec::rebellious(0.3).dual()).unwrap();
    let back = RuleSet::<f64>::from_json(&r.to_json()).unwrap();
    assert!(back.same_family(&r));
}
