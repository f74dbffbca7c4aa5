//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::{Path, PathBuf};
use std::time::Instant;

use cancellative::engine::{run_dense, run_graphical, run_sparse, RunOptions};
use cancellative::experiments::{
    density_anneal, drift_audit, extinction_vs_growth, good_event_sweep, interface_rate_audit, structural_audits,
    AnnealParams, AuditParams, DriftParams, ExtinctionParams, GoodEventParams, StudyResult,
};
use cancellative::lattice::{LatticeShape, Site, SpinConfig};
use cancellative::oracle::{build_generator, duality_gap, transient_distribution};
use cancellative::rng::{derive_seed, stream, Purpose};
use cancellative::rules::{apply_rule, build_model, effective_flip_rate, neighbourhood, ModelSpec, RuleSet};
use cancellative::Rational;
use cancellative_cli::{emit_results, Format, RunConfig};
use rayon::prelude::*;
use serde_json::json;

const MASTER_SEED: u64 = 20_240_611;

const DUALITY_TOL: f64 = 1e-8;
const RATE_TOL: f64 = 1e-12;
const PARITY_EVENTS: u64 = 100_000;
const ORACLE_REPLICAS: u64 = 100_000;
const HOLDING_REPLICAS: u64 = 100_000;
const HOLDING_TOL: f64 = 0.01;
const DRIFT_SAMPLES: u64 = 100_000;
const DRIFT_TOL: f64 = 0.2;
const ALPHA_C_RANGE: (f64, f64) = (0.4, 0.6);
const GOOD_TARGET: f64 = 0.9;
const GOOD_MAX_L: i64 = 32;
const GOOD_MAX_CORRELATION: f64 = 0.05;
const EXTINCTION_REPLICAS: u64 = 10_000;
const EXTINCTION_BOUND: f64 = 0.05;

struct Outcome {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
    results: Vec<StudyResult>,
}

fn seed(k: u64) -> u64 {
    derive_seed(MASTER_SEED, k)
}

fn alpha_grid() -> [f64; 4] {
    [0.0, 0.3, 0.7, 1.0]
}

fn duality() -> Outcome {
    let shape = LatticeShape::ring(6).unwrap();
    let times = [0.25, 1.0, 4.0];
    let mut res = StudyResult::new(
        "acceptance_duality",
        &json!({ "sites": 6, "times": times, "tol": 1e-11 }),
        vec![],
        &["model", "alpha", "max_gap"],
    );
    let mut worst: f64 = 0.0;
    for a in alpha_grid() {
        let specs = [
            ModelSpec::neutral_np(1, 1, a).allow_1d(),
            ModelSpec::neutral_np(1, 2, a),
            ModelSpec::affine(1, 1, a).allow_1d(),
            ModelSpec::affine(1, 2, a),
            ModelSpec::rebellious(a),
            ModelSpec::disagreement(a),
            ModelSpec::swapping(a),
        ];
        for spec in specs {
            let x = build_model(&spec).unwrap();
            let y = build_model(&spec.clone().dual()).unwrap();
            let gap = duality_gap(&x, &y, &shape, &times, 1e-11).unwrap();
            worst = worst.max(gap);
            res.push(vec![spec.label().into(), json!(a), json!(gap)]);
        }
    }
    res.set_summary("max_gap", worst);
    Outcome {
        id: 1,
        name: "duality gap on Z/6",
        pass: worst <= DUALITY_TOL,
        detail: format!("max gap {worst:.3e} over {} (model, alpha) pairs, bound {DUALITY_TOL:e}", res.rows.len()),
        results: vec![res],
    }
}

fn frac(k: usize, n: usize) -> Rational {
    Rational::new(k as i64, n as i64)
}

/// `f_1` is the fraction of neighbours disagreeing with the centre.
fn np_closed(alpha: Rational, f1: Rational) -> Rational {
    let one = Rational::from_integer(1);
    f1 * ((one - f1) + alpha * f1)
}

fn affine_closed(alpha: Rational, f1: Rational) -> Rational {
    let one = Rational::from_integer(1);
    let ind = if f1 > Rational::from_integer(0) { one } else { Rational::from_integer(0) };
    alpha * f1 + (one - alpha) * ind
}

fn rebellious_closed(alpha: Rational, w: &[bool; 5]) -> Rational {
    let one = Rational::from_integer(1);
    let d = |a: bool, b: bool| Rational::from_integer((a != b) as i64);
    alpha * (d(w[1], w[2]) + d(w[2], w[3])) + (one - alpha) * (d(w[0], w[1]) + d(w[3], w[4]))
}

fn rate_formulas() -> Outcome {
    let alphas = [Rational::new(0, 1), Rational::new(1, 3), Rational::new(1, 2), Rational::new(7, 10), Rational::new(1, 1)];
    let mut res = StudyResult::new(
        "acceptance_rate_formulas",
        &json!({ "alphas": alphas.iter().map(|a| a.to_string()).collect::<Vec<_>>() }),
        vec![],
        &["model", "alpha", "patterns", "mismatches", "max_f64_error"],
    );
    let torus = LatticeShape::torus(vec![5, 5]).unwrap();
    let centre = Site::new(vec![2, 2]);
    let nbrs = neighbourhood(2, 1);
    let mut bad = 0usize;
    let mut max_err: f64 = 0.0;
    for &alpha in &alphas {
        let np = build_model(&ModelSpec::neutral_np(2, 1, alpha)).unwrap();
        let av = build_model(&ModelSpec::affine(2, 1, alpha)).unwrap();
        let np64 = np.to_f64();
        let av64 = av.to_f64();
        for (label, exact, float, closed) in [
            ("neutral-np", &np, &np64, np_closed as fn(Rational, Rational) -> Rational),
            ("affine", &av, &av64, affine_closed as fn(Rational, Rational) -> Rational),
        ] {
            let mut mism = 0usize;
            let mut n = 0usize;
            let mut err: f64 = 0.0;
            for c in [false, true] {
                for mask in 0u32..1 << nbrs.len() {
                    let mut x = SpinConfig::zeros(&torus);
                    x.set(&centre, c);
                    for (k, j) in nbrs.iter().enumerate() {
                        x.set(&torus.wrap(&centre.add(j)), mask >> k & 1 == 1);
                    }
                    let disagree = (0..nbrs.len()).filter(|&k| (mask >> k & 1 == 1) != c).count();
                    let want = closed(alpha, frac(disagree, nbrs.len()));
                    let got = effective_flip_rate(exact, &x, &centre).unwrap();
                    let got64 = effective_flip_rate(float, &x, &centre).unwrap();
                    let want64 = *want.numer() as f64 / *want.denom() as f64;
                    mism += usize::from(got != want || (got64 - want64).abs() > RATE_TOL);
                    err = err.max((got64 - want64).abs());
                    n += 1;
                }
            }
            bad += mism;
            max_err = max_err.max(err);
            res.push(vec![label.into(), alpha.to_string().into(), n.into(), mism.into(), json!(err)]);
        }

        let reb = build_model(&ModelSpec::rebellious(alpha)).unwrap();
        let reb64 = reb.to_f64();
        let ring = LatticeShape::ring(9).unwrap();
        let (mut mism, mut err) = (0usize, 0.0f64);
        for mask in 0u32..32 {
            let w: [bool; 5] = std::array::from_fn(|k| mask >> k & 1 == 1);
            let mut x = SpinConfig::zeros(&ring);
            for (k, &b) in w.iter().enumerate() {
                x.set(&Site::d1(2 + k as i64), b);
            }
            let want = rebellious_closed(alpha, &w);
            let got = effective_flip_rate(&reb, &x, &Site::d1(4)).unwrap();
            let got64 = effective_flip_rate(&reb64, &x, &Site::d1(4)).unwrap();
            let want64 = *want.numer() as f64 / *want.denom() as f64;
            mism += usize::from(got != want || (got64 - want64).abs() > RATE_TOL);
            err = err.max((got64 - want64).abs());
        }
        bad += mism;
        max_err = max_err.max(err);
        res.push(vec!["rebellious".into(), alpha.to_string().into(), 32.into(), mism.into(), json!(err)]);
    }
    res.set_summary("mismatches", bad);
    Outcome {
        id: 2,
        name: "rate formulas from rule tables",
        pass: bad == 0,
        detail: format!(
            "{bad} mismatches over {} (model, alpha) tables; 512 patterns each for d=2 R=1, 32 for rebellious; max float error {max_err:.1e}",
            res.rows.len()
        ),
        results: vec![res],
    }
}

fn invariants() -> Outcome {
    let s = seed(3);
    let mut res = StudyResult::new("acceptance_invariants", &json!({}), vec![s], &["check", "model", "events", "ok"]);

    // parity of the dual of the rebellious model from one particle
    let adbarw = build_model(&ModelSpec::rebellious(0.3).dual()).unwrap();
    let mut events = 0u64;
    let mut parity_ok = adbarw.parity_preserving();
    let mut r = 0;
    while events < PARITY_EVENTS {
        let y0 = SpinConfig::sparse_1d([0]);
        let tr = run_sparse(&adbarw, &y0, &RunOptions::new(s, vec![50.0]).replica(r).record_events()).unwrap();
        let mut y = y0.clone();
        for e in tr.events.as_ref().unwrap() {
            for site in &e.flips {
                y.toggle(site);
            }
            parity_ok &= y.ones() % 2 == 1;
            events += 1;
        }
        parity_ok &= &y == tr.last();
        r += 1;
    }
    res.push(vec!["parity".into(), adbarw.name().into(), events.into(), parity_ok.into()]);

    // coupled global-flip replay
    let torus = LatticeShape::torus(vec![5, 5]).unwrap();
    let ring = LatticeShape::ring(12).unwrap();
    let models: Vec<(RuleSet<f64>, SpinConfig)> = vec![
        (build_model(&ModelSpec::neutral_np(2, 1, 0.3)).unwrap(), SpinConfig::from_state_index(&torus, 0x0a5_3c71).unwrap()),
        (build_model(&ModelSpec::affine(2, 1, 0.3)).unwrap(), SpinConfig::from_state_index(&torus, 0x1f0_0c3a).unwrap()),
        (build_model(&ModelSpec::rebellious(0.3)).unwrap(), SpinConfig::from_bits(&ring, "011010001110").unwrap()),
        (build_model(&ModelSpec::disagreement(0.3)).unwrap(), SpinConfig::from_bits(&ring, "110010100111").unwrap()),
        (build_model(&ModelSpec::swapping(0.3)).unwrap(), SpinConfig::from_bits(&ring, "000111010110").unwrap()),
    ];
    let mut flip_ok = true;
    for (rules, x0) in &models {
        let tr = run_dense(rules, x0, &RunOptions::new(s, vec![20.0]).record_events()).unwrap();
        let mut x = x0.clone();
        let mut fx = x0.flipped().unwrap();
        let mut ok = rules.spin_flip_symmetric();
        let evs = tr.events.as_ref().unwrap();
        for e in evs {
            let t = &rules.templates()[e.template];
            x = apply_rule(&x, t, &e.anchor).unwrap();
            fx = apply_rule(&fx, t, &e.anchor).unwrap();
            ok &= x.flipped().unwrap() == fx;
        }
        ok &= &x == tr.last() && !evs.is_empty();
        flip_ok &= ok;
        res.push(vec!["global-flip".into(), rules.name().into(), evs.len().into(), ok.into()]);
    }
    Outcome {
        id: 3,
        name: "parity and spin-flip invariants",
        pass: parity_ok && flip_ok,
        detail: format!(
            "parity constant over {events} events: {parity_ok}; flipped replay for all five models: {flip_ok}"
        ),
        results: vec![res],
    }
}

/// Largest `|p_hat - p| / sigma` over states, with `sigma` from the exact `p`.
fn max_z(counts: &[u64], exact: &[f64], n: u64) -> (f64, usize) {
    let mut worst = (0.0f64, 0usize);
    for (k, (&c, &p)) in counts.iter().zip(exact).enumerate() {
        let ph = c as f64 / n as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        let z = if sigma > 0.0 {
            (ph - p).abs() / sigma
        } else if c == 0 {
            0.0
        } else {
            f64::INFINITY
        };
        if z > worst.0 {
            worst = (z, k);
        }
    }
    worst
}

fn engine_vs_oracle() -> Outcome {
    let s = seed(4);
    let shape = LatticeShape::ring(5).unwrap();
    let x0 = SpinConfig::from_bits(&shape, "01101").unwrap();
    let mut res = StudyResult::new(
        "acceptance_engine_vs_oracle",
        &json!({ "sites": 5, "t": 1.0, "x0": "01101", "replicas": ORACLE_REPLICAS }),
        vec![s],
        &["alpha", "method", "state", "exact", "count", "z"],
    );
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for (k, alpha) in [0.2, 0.8].into_iter().enumerate() {
        let rules = build_model(&ModelSpec::rebellious(alpha)).unwrap();
        let g = build_generator(&rules, &shape).unwrap();
        let exact = transient_distribution(&g, x0.state_index().unwrap() as usize, 1.0, 1e-11).unwrap();
        let sk = derive_seed(s, k as u64);
        let dense: Vec<usize> = (0..ORACLE_REPLICAS)
            .into_par_iter()
            .map(|r| {
                let tr = run_dense(&rules, &x0, &RunOptions::new(sk, vec![1.0]).replica(r)).unwrap();
                tr.last().state_index().unwrap() as usize
            })
            .collect();
        let graphical: Vec<usize> = (0..ORACLE_REPLICAS)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream(sk, r, Purpose::Arrows);
                run_graphical(&rules, &x0, 1.0, &mut rng).unwrap().1.state_index().unwrap() as usize
            })
            .collect();
        for (method, ends) in [("dense", dense), ("graphical", graphical)] {
            let mut counts = vec![0u64; exact.len()];
            for e in ends {
                counts[e] += 1;
            }
            let (z, _) = max_z(&counts, &exact, ORACLE_REPLICAS);
            worst = worst.max(z);
            pass &= z <= 3.0;
            for (state, (&c, &p)) in counts.iter().zip(&exact).enumerate() {
                let zs = max_z(&[c], &[p], ORACLE_REPLICAS).0;
                res.push(vec![json!(alpha), method.into(), state.into(), json!(p), c.into(), json!(zs)]);
            }
        }
    }
    res.set_summary("max_z", worst);
    Outcome {
        id: 4,
        name: "engine and graphical construction vs exact oracle",
        pass,
        detail: format!("largest per-state deviation {worst:.2} sigma over 32 states x 2 alphas x 2 methods (bound 3)"),
        results: vec![res],
    }
}

fn interface() -> Outcome {
    let r = interface_rate_audit(&[(0, 1), (1, 5), (1, 3), (1, 2), (7, 10), (1, 1)]).unwrap();
    let ok = r.summary["exact_match"] == true;
    Outcome {
        id: 5,
        name: "interface rates equal dual rates",
        pass: ok,
        detail: format!(
            "{} (alpha, pattern) cases, {} mismatches, exact rational arithmetic",
            r.summary["patterns"], r.summary["mismatches"]
        ),
        results: vec![r],
    }
}

fn holding() -> Outcome {
    let r = structural_audits(&AuditParams::new(HOLDING_REPLICAS, seed(6))).unwrap();
    let target = (-1.0f64).exp();
    let col = |c: &str| r.column_f64(c).unwrap();
    let (ts, hold, back) = (col("t"), col("p_hold"), col("p_return"));
    let mut hold_dev: f64 = 0.0;
    let mut back_dev: f64 = 0.0;
    for k in 0..ts.len() {
        if ts[k] == 0.25 {
            hold_dev = hold_dev.max((hold[k] - target).abs());
            back_dev = back_dev.max((back[k] - target).abs());
        }
    }
    let margin = r.summary_f64("return_min_margin").unwrap();
    let pass = hold_dev <= HOLDING_TOL && margin >= -HOLDING_TOL;
    Outcome {
        id: 6,
        name: "interval holding rate",
        pass,
        detail: format!(
            "P[no flip by 0.25] within {hold_dev:.4} of e^-1 for n = 4..12 (bound {HOLDING_TOL}); \
             P[X_0.25 = x_n] lies up to {back_dev:.4} above it and never below by more than {:.4}",
            (-margin).max(0.0)
        ),
        results: vec![r],
    }
}

fn drift() -> Outcome {
    let r = drift_audit(&DriftParams::new(DRIFT_SAMPLES, seed(7))).unwrap();
    let dev = r.summary_f64("max_abs_deviation").unwrap();
    let drifts = r.column_f64("drift").unwrap();
    Outcome {
        id: 7,
        name: "drift of the rightmost particle",
        pass: dev <= DRIFT_TOL,
        detail: format!(
            "drifts {:?} against [2, 3, 1, 1], max deviation {dev:.3} (bound {DRIFT_TOL})",
            drifts.iter().map(|d| (d * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        ),
        results: vec![r],
    }
}

fn anneal() -> Outcome {
    let r = density_anneal(&AnnealParams::desk(seed(8))).unwrap();
    let ac = r.summary_f64("alpha_c").unwrap_or(f64::NAN);
    let (lo, hi) = (
        r.summary_f64("alpha_c_lo").unwrap_or(f64::NAN),
        r.summary_f64("alpha_c_hi").unwrap_or(f64::NAN),
    );
    let monotone = r.summary["monotone_trend"] == true;
    Outcome {
        id: 8,
        name: "annealed density curve and alpha_c",
        pass: ac >= ALPHA_C_RANGE.0 && ac <= ALPHA_C_RANGE.1 && monotone,
        detail: format!(
            "alpha_c = {ac:.3} (bootstrap 95% CI [{lo:.3}, {hi:.3}]), required in [{}, {}]; monotone trend: {monotone}",
            ALPHA_C_RANGE.0, ALPHA_C_RANGE.1
        ),
        results: vec![r],
    }
}

fn good_events() -> Outcome {
    let mut p = GoodEventParams::new(seed(9));
    p.target = GOOD_TARGET;
    let r = good_event_sweep(&p).unwrap();
    let accepted = r.summary["accepted_l"].as_i64();
    let far = r.summary_f64("max_abs_correlation_offset_ge_12");
    let pass = accepted.is_some_and(|l| l <= GOOD_MAX_L) && far.is_some_and(|c| c <= GOOD_MAX_CORRELATION);
    Outcome {
        id: 9,
        name: "good events at alpha = 0",
        pass,
        detail: format!(
            "sweep {}; accepted L = {accepted:?} (need <= {GOOD_MAX_L}); max |corr| at offset >= 12: {far:?} (bound {GOOD_MAX_CORRELATION})",
            r.summary["sweep"]
        ),
        results: vec![r],
    }
}

fn extinction() -> Outcome {
    let r = extinction_vs_growth(&ExtinctionParams::adbarw(0.2, vec![6], vec![1.0e3], EXTINCTION_REPLICAS, seed(10)))
        .unwrap();
    let p = r.column_f64("p_window").unwrap()[0];
    let (lo, hi) = (r.column_f64("lo").unwrap()[0], r.column_f64("hi").unwrap()[0]);
    let zero = r.column_f64("p_zero").unwrap()[0];
    Outcome {
        id: 10,
        name: "extinction versus growth",
        pass: p <= EXTINCTION_BOUND,
        detail: format!(
            "P[0 < |Y_1000| < 6] = {p:.4} (95% CI [{lo:.4}, {hi:.4}], bound {EXTINCTION_BOUND}); P[Y_1000 = 0] = {zero:.4}; capped runs {}",
            r.summary["capped_runs"]
        ),
        results: vec![r],
    }
}

type Criterion = fn() -> Outcome;

const CRITERIA: [Criterion; 10] = [
    duality,
    rate_formulas,
    invariants,
    engine_vs_oracle,
    interface,
    holding,
    drift,
    anneal,
    good_events,
    extinction,
];

fn emit(outcome: &Outcome, dir: &Path) -> Vec<PathBuf> {
    let mut files = Vec::new();
    for (k, r) in outcome.results.iter().enumerate() {
        let path = dir.join(format!("criterion{:02}_{k}.csv", outcome.id));
        emit_results(r, &RunConfig::default(), &path, Format::Csv).unwrap();
        let json_path = dir.join(format!("criterion{:02}_{k}.json", outcome.id));
        emit_results(r, &RunConfig::default(), &json_path, Format::Json).unwrap();
        files.push(path.clone());
        files.push(cancellative_cli::manifest_path(&path));
        files.push(json_path);
    }
    files
}

fn main() {
    let filter: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut all_pass = true;
    let mut first_files = Vec::new();
    let mut identical = true;
    let mut compared = 0usize;
    for (pass_no, dir) in dirs.iter().enumerate() {
        for (k, criterion) in CRITERIA.iter().enumerate() {
            if filter.is_some_and(|f| f != k + 1 && f != 11) {
                continue;
            }
            let start = Instant::now();
            let out = criterion();
            let files = emit(&out, dir.path());
            if pass_no == 0 {
                all_pass &= out.pass;
                println!(
                    "criterion {:>2} {:<50} {} ({:.1}s) {}",
                    out.id,
                    out.name,
                    if out.pass { "PASS" } else { "FAIL" },
                    start.elapsed().as_secs_f64(),
                    out.detail
                );
                first_files.extend(files);
            } else {
                for f in files {
                    let name = f.file_name().unwrap().to_owned();
                    let before = dirs[0].path().join(&name);
                    let same = std::fs::read(&before).ok() == std::fs::read(&f).ok();
                    if !same {
                        println!("criterion 11: {} differs between runs", name.to_string_lossy());
                    }
                    identical &= same;
                    compared += 1;
                }
            }
        }
    }
    identical &= compared == first_files.len() && compared > 0;
    all_pass &= identical;
    println!(
        "criterion 11 {:<50} {} {compared} result files re-emitted with identical seeds, byte-identical: {identical}",
        "determinism of emitted result files",
        if identical { "PASS" } else { "FAIL" }
    );
    if !all_pass {
        eprintln!("acceptance: at least one criterion failed");
        std::process::exit(1);
    }
}
