use std::collections::BTreeSet;

use cancellative::engine::{run_sparse, RunOptions};
use cancellative::lattice::SpinConfig;
use cancellative::percolation::{chi_series, good_event_estimate, proximity_stats, run_percolation, InitialSampler};
use cancellative::rules::{build_model, ModelSpec};

#[test]
fn open_and_closed_fields() {
    let full = run_percolation(1.0, &[0], 6, 10, 1).unwrap();
    assert_eq!(full.levels[1], BTreeSet::from([-1, 1]));
    assert_eq!(full.levels[2], BTreeSet::from([-2, 0, 2]));
    assert!(full.levels.iter().enumerate().all(|(n, w)| w.len() == n + 1));
    let empty = run_percolation(0.0, &[0], 3, 10, 1).unwrap();
    assert!(empty.levels[1].is_empty());
}

#[test]
fn survival_frequency_increases_with_p() {
    let mut prev = 0;
    for p in [0.5, 0.6, 0.7, 0.8, 0.9] {
        let alive = (0..10_000u64).filter(|&s| run_percolation(p, &[0], 40, 45, s).unwrap().survives()).count();
        assert!(alive >= prev, "p {p}: {alive} < {prev}");
        prev = alive;
    }
}

/// `χ_1` by direct inspection of every intermediate state.
fn brute_chi1(y0: &SpinConfig, states: &[(f64, BTreeSet<i64>)], l: i64, t: f64) -> BTreeSet<i64> {
    let init: BTreeSet<i64> = y0.occupied().iter().map(|s| s.0[0]).collect();
    let meets = |y: &BTreeSet<i64>, a: i64, b: i64| y.iter().any(|&i| a <= i && i <= b);
    let mut path = vec![init.clone()];
    path.extend(states.iter().filter(|(s, _)| *s <= t).map(|(_, y)| y.clone()));
    let end = path.last().unwrap().clone();
    let mut out = BTreeSet::new();
    for x in -200i64..=200 {
        if (x + 1).rem_euclid(2) != 0 {
            continue;
        }
        let wide = (2 * l * x - 4 * l, 2 * l * x + 4 * l);
        let narrow = (2 * l * x - l, 2 * l * x + l);
        if meets(&end, narrow.0, narrow.1) && path.iter().all(|y| meets(y, wide.0, wide.1)) {
            out.insert(x);
        }
    }
    out
}

#[test]
fn chi_matches_brute_force_rescan() {
    for (a, seed) in [(0.0, 1u64), (0.3, 2), (0.6, 3), (1.0, 4)] {
        let rules = build_model(&ModelSpec::rebellious(a).dual()).unwrap();
        for r in 0..30 {
            let y0 = SpinConfig::sparse_1d([-3, 0, 2, 7, 15]);
            let (l, t) = (2, 3.0);
            let tr = run_sparse(&rules, &y0, &RunOptions::new(seed, vec![t]).replica(r).record_events()).unwrap();
            let mut y: BTreeSet<i64> = [-3, 0, 2, 7, 15].into();
            let mut states = Vec::new();
            for e in tr.events.as_ref().unwrap() {
                for s in &e.flips {
                    if !y.remove(&s.0[0]) {
                        y.insert(s.0[0]);
                    }
                }
                states.push((e.time, y.clone()));
            }
            let chi = chi_series(&tr, l, t).unwrap();
            assert_eq!(chi.levels[1], brute_chi1(&y0, &states, l, t), "alpha {a} replica {r}");
            let chi0: BTreeSet<i64> = (-20..=20).filter(|x: &i64| x % 2 == 0 && [-3i64, 0, 2, 7, 15].iter().any(|i| (2 * l * x - l..=2 * l * x + l).contains(i))).collect();
            assert_eq!(chi.levels[0], chi0);
        }
    }
}

#[test]
fn chi_zero_examples() {
    let rules = build_model(&ModelSpec::rebellious(0.5).dual()).unwrap();
    let one = run_sparse(&rules, &SpinConfig::sparse_1d([0]), &RunOptions::new(1, vec![1.0]).record_events()).unwrap();
    assert_eq!(chi_series(&one, 1, 1.0).unwrap().levels[0], BTreeSet::from([0]));
    let none = run_sparse(&rules, &SpinConfig::sparse_1d([]), &RunOptions::new(1, vec![1.0]).record_events()).unwrap();
    assert!(chi_series(&none, 1, 1.0).unwrap().levels[0].is_empty());
    let bare = run_sparse(&rules, &SpinConfig::sparse_1d([0]), &RunOptions::new(1, vec![1.0])).unwrap();
    assert!(chi_series(&bare, 1, 1.0).is_err());
}

#[test]
fn branching_drives_good_events() {
    let s = InitialSampler::Product { q: 0.5 };
    let branching = good_event_estimate(0.0, 4, 8.0, 1000, s, 5).unwrap();
    let walking = good_event_estimate(1.0, 4, 8.0, 1000, s, 5).unwrap();
    assert!(walking.pooled.hi < branching.pooled.lo, "{:?} {:?}", walking.pooled, branching.pooled);
}

#[test]
fn proximity_by_hand() {
    let p = proximity_stats(&SpinConfig::sparse_1d([0]), &SpinConfig::sparse_1d([3]), 3, 1).unwrap();
    assert_eq!(p.d_k, 1);
    let p = proximity_stats(&SpinConfig::sparse_1d([3]), &SpinConfig::sparse_1d([]), 3, 1).unwrap();
    assert_eq!((p.d_k, p.eta), (0, BTreeSet::from([2])));
    let p = proximity_stats(&SpinConfig::sparse_1d([]), &SpinConfig::sparse_1d([]), 3, 1).unwrap();
    assert!(p.eta.is_empty() && p.d_k == 0);
}
