//! Exact finite-state computations on small tori.
//!
//! States are bit masks (bit `k` is the spin at site index `k`). Transient
//! laws come from uniformization: with `Λ >= max exit rate` and
//! `P = I + Q/Λ`, `p_t = Σ_k Poisson(Λt)(k) p_0 P^k`, truncated where the
//! Poisson tail drops below the tolerance.

use std::collections::HashMap;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::lattice::{LatticeShape, SpinConfig};
use crate::rules::RuleSet;
use crate::scalar::Scalar;

/// Largest torus accepted by [`build_generator`].
pub const MAX_ORACLE_SITES: usize = 20;

/// Sparse generator of the finite-state chain.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorMatrix<S> {
    pub n_sites: usize,
    /// Off-diagonal entries `(target, rate)` per state, targets ascending.
    pub rows: Vec<Vec<(u32, S)>>,
    /// Diagonal entries (minus exit rates).
    pub diag: Vec<S>,
    /// Largest exit rate.
    pub lambda: S,
}

impl<S: Scalar> GeneratorMatrix<S> {
    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn to_f64(&self) -> GeneratorMatrix<f64> {
        GeneratorMatrix {
            n_sites: self.n_sites,
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|(j, q)| (*j, q.to_f64_lossy())).collect())
                .collect(),
            diag: self.diag.iter().map(|q| q.to_f64_lossy()).collect(),
            lambda: self.lambda.to_f64_lossy(),
        }
    }

    /// Rate from state `x` to state `y != x`.
    pub fn rate(&self, x: usize, y: usize) -> S {
        self.rows[x]
            .binary_search_by_key(&(y as u32), |(j, _)| *j)
            .map(|p| self.rows[x][p].1.clone())
            .unwrap_or_else(|_| S::zero())
    }
}

/// Builds the generator of `rules` on the torus `shape` (at most
/// [`MAX_ORACLE_SITES`] sites, every side at least `2R + 1`).
pub fn build_generator<S: Scalar>(rules: &RuleSet<S>, shape: &LatticeShape) -> Result<GeneratorMatrix<S>> {
    let n = shape
        .n_sites()
        .ok_or_else(|| Error::Config("the oracle needs a torus".into()))?;
    if n > MAX_ORACLE_SITES {
        return Err(Error::StateSpace(format!(
            "{n} sites exceed the oracle limit of {MAX_ORACLE_SITES}"
        )));
    }
    if shape.dim() != rules.dim() {
        return Err(Error::ShapeMismatch("rule set and lattice dimensions differ".into()));
    }
    shape.check_radius(rules.radius())?;
    // (rate, [(row bit, column mask)]) per instance
    let mut instances: Vec<(S, Vec<(u32, u32)>)> = Vec::new();
    for t in rules.templates() {
        for k in 0..n {
            let a = shape.site_of(k);
            let wires = t
                .rows()
                .iter()
                .map(|r| {
                    let mask = t
                        .row_columns(r)
                        .iter()
                        .fold(0u32, |m, c| m | 1 << shape.index_of(&a.add(c)));
                    (1u32 << shape.index_of(&a.add(r)), mask)
                })
                .collect();
            instances.push((t.rate().clone(), wires));
        }
    }
    let n_states = 1usize << n;
    let mut rows = Vec::with_capacity(n_states);
    let mut diag = Vec::with_capacity(n_states);
    let mut lambda = S::zero();
    let mut acc: HashMap<u32, S> = HashMap::new();
    for x in 0..n_states as u32 {
        acc.clear();
        for (rate, wires) in &instances {
            let flip = wires
                .iter()
                .filter(|(_, m)| (x & m).count_ones() % 2 == 1)
                .fold(0u32, |f, (b, _)| f ^ b);
            if flip != 0 {
                let e = acc.entry(x ^ flip).or_insert_with(S::zero);
                *e = e.clone() + rate.clone();
            }
        }
        let mut row: Vec<(u32, S)> = acc.drain().collect();
        row.sort_by_key(|(j, _)| *j);
        let exit = row.iter().fold(S::zero(), |s, (_, q)| s + q.clone());
        if exit > lambda {
            lambda = exit.clone();
        }
        diag.push(S::zero() - exit);
        rows.push(row);
    }
    Ok(GeneratorMatrix {
        n_sites: n,
        rows,
        diag,
        lambda,
    })
}

/// Truncated Poisson weights: `weights[k]` is the mass of `left + k`.
#[derive(Clone, Debug, PartialEq)]
pub struct PoissonWeights {
    pub left: usize,
    pub weights: Vec<f64>,
}

impl PoissonWeights {
    /// Index of the last kept term.
    pub fn right(&self) -> usize {
        self.left + self.weights.len() - 1
    }
}

/// Poisson(`mean`) weights, computed outward from the mode so that large
/// means do not underflow. The right end is the first `K` whose tail mass
/// beyond `K` is below `tol`; leading terms below `tol * 1e-6` are dropped.
pub fn poisson_weights(mean: f64, tol: f64) -> Result<PoissonWeights> {
    if !(mean >= 0.0 && mean.is_finite()) {
        return Err(Error::param("mean", "must be finite and nonnegative"));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::param("tol", "must lie in (0, 1)"));
    }
    if mean == 0.0 {
        return Ok(PoissonWeights {
            left: 0,
            weights: vec![1.0],
        });
    }
    let mode = mean.floor() as usize;
    let tiny = 1e-300;
    let mut down = vec![1.0f64];
    let mut k = mode;
    while k > 0 {
        let w = down.last().unwrap() * k as f64 / mean;
        if w < tiny {
            break;
        }
        down.push(w);
        k -= 1;
    }
    let left = k;
    let mut up = Vec::new();
    let mut w = 1.0f64;
    let mut j = mode;
    loop {
        w *= mean / (j + 1) as f64;
        j += 1;
        if w < tiny {
            break;
        }
        up.push(w);
    }
    down.reverse();
    let mut all = down;
    all.extend(up);
    let total: f64 = all.iter().sum();
    for w in &mut all {
        *w /= total;
    }
    // right truncation
    let mut tail = 0.0;
    let mut cut = all.len();
    for i in (0..all.len()).rev() {
        if tail + all[i] >= tol {
            cut = i + 1;
            break;
        }
        tail += all[i];
    }
    all.truncate(cut);
    // left truncation
    let mut head = 0.0;
    let mut start = 0;
    for (i, w) in all.iter().enumerate() {
        if head + w >= tol * 1e-6 {
            start = i;
            break;
        }
        head += w;
    }
    Ok(PoissonWeights {
        left: left + start,
        weights: all[start..].to_vec(),
    })
}

fn step<F: Float>(gen: &GeneratorMatrix<F>, v: &[F], out: &mut [F]) {
    let lam = gen.lambda;
    for (y, o) in out.iter_mut().enumerate() {
        *o = v[y] * (F::one() + gen.diag[y] / lam);
    }
    for (x, row) in gen.rows.iter().enumerate() {
        if v[x] == F::zero() {
            continue;
        }
        let vx = v[x] / lam;
        for (y, q) in row {
            out[*y as usize] = out[*y as usize] + vx * *q;
        }
    }
}

/// Law at time `t` of the chain started from the law `p0`.
pub fn transient_from<F: Float + Scalar>(
    gen: &GeneratorMatrix<F>,
    p0: &[F],
    t: f64,
    tol: f64,
) -> Result<Vec<F>> {
    if p0.len() != gen.n_states() {
        return Err(Error::ShapeMismatch("initial law has the wrong length".into()));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", "must be finite and nonnegative"));
    }
    let lam = gen.lambda.to_f64_lossy();
    if lam == 0.0 || t == 0.0 {
        return Ok(p0.to_vec());
    }
    let pw = poisson_weights(lam * t, tol)?;
    let mut v = p0.to_vec();
    let mut tmp = vec![F::zero(); v.len()];
    for _ in 0..pw.left {
        step(gen, &v, &mut tmp);
        std::mem::swap(&mut v, &mut tmp);
    }
    let mut out = vec![F::zero(); v.len()];
    for (k, w) in pw.weights.iter().enumerate() {
        let w = F::from(*w).expect("weight fits");
        for (o, vi) in out.iter_mut().zip(&v) {
            *o = *o + w * *vi;
        }
        if k + 1 < pw.weights.len() {
            step(gen, &v, &mut tmp);
            std::mem::swap(&mut v, &mut tmp);
        }
    }
    Ok(out)
}

/// Law at time `t` of the chain started from state `x0`.
pub fn transient_distribution<F: Float + Scalar>(
    gen: &GeneratorMatrix<F>,
    x0: usize,
    t: f64,
    tol: f64,
) -> Result<Vec<F>> {
    if x0 >= gen.n_states() {
        return Err(Error::param("x0", "state index out of range"));
    }
    let mut p0 = vec![F::zero(); gen.n_states()];
    p0[x0] = F::one();
    transient_from(gen, &p0, t, tol)
}

/// `P[x^T y odd]` under the law `p` of `x`.
pub fn odd_probability(p: &[f64], y: usize) -> f64 {
    p.iter()
        .enumerate()
        .filter(|(x, _)| (x & y).count_ones() % 2 == 1)
        .map(|(_, w)| w)
        .sum()
}

/// One row of a duality check.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GapRow {
    pub x0: usize,
    pub y0: usize,
    pub t: f64,
    /// `P[x_t^T y0 odd]`.
    pub lhs: f64,
    /// `P[x0^T y_t odd]`.
    pub rhs: f64,
    pub gap: f64,
}

/// Checks `P[x_t^T y0 odd] = P[x0^T y_t odd]` exactly for a process and its dual.
pub struct DualityChecker {
    gx: GeneratorMatrix<f64>,
    gy: GeneratorMatrix<f64>,
    shape: LatticeShape,
    tol: f64,
}

impl DualityChecker {
    pub fn new<S: Scalar>(x_rules: &RuleSet<S>, y_rules: &RuleSet<S>, shape: &LatticeShape, tol: f64) -> Result<Self> {
        Ok(DualityChecker {
            gx: build_generator(x_rules, shape)?.to_f64(),
            gy: build_generator(y_rules, shape)?.to_f64(),
            shape: shape.clone(),
            tol,
        })
    }

    pub fn shape(&self) -> &LatticeShape {
        &self.shape
    }

    pub fn n_states(&self) -> usize {
        self.gx.n_states()
    }

    /// Gap for one `(x0, y0, t)`.
    pub fn gap(&self, x0: &SpinConfig, y0: &SpinConfig, t: f64) -> Result<GapRow> {
        let (xi, yi) = (self.index(x0)?, self.index(y0)?);
        let px = transient_distribution(&self.gx, xi, t, self.tol)?;
        let py = transient_distribution(&self.gy, yi, t, self.tol)?;
        Ok(row(xi, yi, t, &px, &py))
    }

    /// Gaps over every pair of states and every time in `times`.
    pub fn full_grid(&self, times: &[f64]) -> Result<Vec<GapRow>> {
        let n = self.n_states();
        let mut out = Vec::with_capacity(n * n * times.len());
        for &t in times {
            let px: Vec<Vec<f64>> = (0..n)
                .map(|x| transient_distribution(&self.gx, x, t, self.tol))
                .collect::<Result<_>>()?;
            let py: Vec<Vec<f64>> = (0..n)
                .map(|y| transient_distribution(&self.gy, y, t, self.tol))
                .collect::<Result<_>>()?;
            for x in 0..n {
                for y in 0..n {
                    out.push(row(x, y, t, &px[x], &py[y]));
                }
            }
        }
        Ok(out)
    }

    fn index(&self, x: &SpinConfig) -> Result<usize> {
        if x.shape() != &self.shape {
            return Err(Error::ShapeMismatch("configuration is not on the checker's torus".into()));
        }
        Ok(x.state_index().expect("small torus") as usize)
    }
}

fn row(x0: usize, y0: usize, t: f64, px: &[f64], py: &[f64]) -> GapRow {
    let lhs = odd_probability(px, y0);
    let rhs = odd_probability(py, x0);
    GapRow {
        x0,
        y0,
        t,
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    }
}

/// Largest gap over all states at the given times.
pub fn duality_gap<S: Scalar>(
    x_rules: &RuleSet<S>,
    y_rules: &RuleSet<S>,
    shape: &LatticeShape,
    times: &[f64],
    tol: f64,
) -> Result<f64> {
    let checker = DualityChecker::new(x_rules, y_rules, shape, tol)?;
    Ok(checker
        .full_grid(times)?
        .iter()
        .map(|r| r.gap)
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{build_model, transpose_dual, ModelSpec};
    use crate::scalar::Rational;

    #[test]
    fn poisson_truncation_point() {
        // tail P[N > 47] < 1e-10 <= P[N > 46] for N ~ Poisson(16)
        let pw = poisson_weights(16.0, 1e-10).unwrap();
        assert_eq!(pw.right(), 47);
        let s: f64 = pw.weights.iter().sum();
        assert!((s - 1.0).abs() < 1e-9);
        let big = poisson_weights(5000.0, 1e-10).unwrap();
        assert!(big.left > 4000 && big.right() < 6000);
    }

    #[test]
    fn generator_rows_sum_to_zero_exactly() {
        let rules = build_model(&ModelSpec::<Rational>::rebellious(Rational::new(1, 3))).unwrap();
        let g = build_generator(&rules, &LatticeShape::ring(5).unwrap()).unwrap();
        for (row, d) in g.rows.iter().zip(&g.diag) {
            let s = row.iter().fold(*d, |a, (_, q)| a + *q);
            assert_eq!(s, Rational::from_integer(0));
        }
        // a lone one at site 2 under rebellious(1/3): flip rate 2/3 + 2*(2/3)...
        let x = 0b00100;
        let exit = -g.diag[x];
        assert!(exit > Rational::from_integer(0));
    }

    #[test]
    fn transient_solves_two_state_chain() {
        // ring of 3 with the voter model: the all-equal states are absorbing
        let rules = build_model(&ModelSpec::rebellious(1.0)).unwrap();
        let g = build_generator(&rules, &LatticeShape::ring(5).unwrap()).unwrap();
        let p = transient_distribution(&g, 0b00001, 50.0, 1e-12).unwrap();
        assert!((p[0] + p[31] - 1.0).abs() < 1e-6);
        assert!((p[31] - 0.2).abs() < 1e-6);
    }

    #[test]
    fn duality_holds_for_transpose() {
        let shape = LatticeShape::ring(5).unwrap();
        let x = build_model(&ModelSpec::rebellious(0.3)).unwrap();
        let gap = duality_gap(&x, &transpose_dual(&x), &shape, &[0.5, 2.0], 1e-12).unwrap();
        assert!(gap < 1e-10, "{gap}");
    }

    #[test]
    fn wrong_dual_has_a_gap() {
        let shape = LatticeShape::ring(5).unwrap();
        let x = build_model(&ModelSpec::rebellious(0.3)).unwrap();
        let gap = duality_gap(&x, &x, &shape, &[1.0], 1e-12).unwrap();
        assert!(gap > 1e-3);
    }

    #[test]
    fn oracle_limits() {
        let x = build_model(&ModelSpec::rebellious(0.3)).unwrap();
        assert!(build_generator(&x, &LatticeShape::ring(21).unwrap()).is_err());
        assert!(build_generator(&x, &LatticeShape::ring(4).unwrap()).is_err());
    }
}
