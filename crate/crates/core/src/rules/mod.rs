//! Cancellative rule algebra.
//!
//! A rule is a finite set `A ⊂ Z^d x Z^d` of `(row, column)` offset pairs with
//! a rate. Anchored at site `i` it acts as the mod-2 matrix `T_i A`, taking
//! `x` to `x + (T_i A) x`, where
//!
//! ```text
//! (A x)(r) = Σ_{c : (r, c) ∈ A} x(c)   (mod 2).
//! ```
//!
//! A [`RuleSet`] is the translation-invariant family of all anchored copies
//! of its templates.

mod models;
mod norm;

pub use models::{build_model, neighbourhood, one_dimensional_reduction, ModelKind, ModelSpec, Reduction};
pub use norm::{norm_b, BasisB};

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Site, SiteOffset, SpinConfig};
use crate::scalar::Scalar;

/// One rule `A` with its rate `a(A)`, anchored at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleTemplate<S = f64> {
    pairs: Vec<(SiteOffset, SiteOffset)>,
    rate: S,
}

impl<S: Scalar> RuleTemplate<S> {
    /// Errors on an empty pair list, duplicate pairs, mixed dimensions, or a
    /// non-positive rate.
    pub fn new(pairs: Vec<(SiteOffset, SiteOffset)>, rate: S) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Template("a template needs at least one pair".into()));
        }
        let d = pairs[0].0.dim();
        if pairs.iter().any(|(r, c)| r.dim() != d || c.dim() != d) {
            return Err(Error::Template("pairs of mixed dimension".into()));
        }
        if !(rate > S::zero()) {
            return Err(Error::Template(format!("rate {rate:?} is not positive")));
        }
        let mut pairs = pairs;
        pairs.sort();
        let n = pairs.len();
        pairs.dedup();
        if pairs.len() != n {
            return Err(Error::Template("duplicate pairs".into()));
        }
        Ok(RuleTemplate { pairs, rate })
    }

    /// `{row} x cols` in one dimension, the common shape of the voter rules.
    pub fn row_1d(row: i64, cols: &[i64], rate: S) -> Result<Self> {
        Self::new(
            cols.iter().map(|&c| (Site::d1(row), Site::d1(c))).collect(),
            rate,
        )
    }

    /// `rows x cols` in one dimension.
    pub fn block_1d(rows: &[i64], cols: &[i64], rate: S) -> Result<Self> {
        let mut pairs = Vec::new();
        for &r in rows {
            for &c in cols {
                pairs.push((Site::d1(r), Site::d1(c)));
            }
        }
        Self::new(pairs, rate)
    }

    pub fn pairs(&self) -> &[(SiteOffset, SiteOffset)] {
        &self.pairs
    }

    pub fn rate(&self) -> &S {
        &self.rate
    }

    pub fn dim(&self) -> usize {
        self.pairs[0].0.dim()
    }

    /// Distinct row offsets `{r : (r, c) ∈ A}`.
    pub fn rows(&self) -> Vec<SiteOffset> {
        let set: BTreeSet<_> = self.pairs.iter().map(|(r, _)| r.clone()).collect();
        set.into_iter().collect()
    }

    /// Distinct column offsets.
    pub fn columns(&self) -> Vec<SiteOffset> {
        let set: BTreeSet<_> = self.pairs.iter().map(|(_, c)| c.clone()).collect();
        set.into_iter().collect()
    }

    /// Columns `{c : (row, c) ∈ A}` of one row.
    pub fn row_columns(&self, row: &SiteOffset) -> Vec<SiteOffset> {
        self.pairs
            .iter()
            .filter(|(r, _)| r == row)
            .map(|(_, c)| c.clone())
            .collect()
    }

    /// Rows `{r : (r, col) ∈ A}` of one column.
    pub fn column_rows(&self, col: &SiteOffset) -> Vec<SiteOffset> {
        self.pairs
            .iter()
            .filter(|(_, c)| c == col)
            .map(|(r, _)| r.clone())
            .collect()
    }

    /// `A^T`, same rate.
    pub fn transposed(&self) -> Self {
        let mut pairs: Vec<_> = self
            .pairs
            .iter()
            .map(|(r, c)| (c.clone(), r.clone()))
            .collect();
        pairs.sort();
        RuleTemplate {
            pairs,
            rate: self.rate.clone(),
        }
    }

    /// Largest L-infinity norm of any offset.
    pub fn radius(&self) -> i64 {
        self.pairs
            .iter()
            .map(|(r, c)| r.max_abs().max(c.max_abs()))
            .max()
            .unwrap_or(0)
    }

    /// Every row has an even number of columns.
    pub fn rows_even(&self) -> bool {
        self.rows()
            .iter()
            .all(|r| self.row_columns(r).len() % 2 == 0)
    }

    /// Every column has an even number of rows.
    pub fn columns_even(&self) -> bool {
        self.columns()
            .iter()
            .all(|c| self.column_rows(c).len() % 2 == 0)
    }

    /// Sites toggled when the template anchored at `anchor` acts on `x`.
    pub fn toggles(&self, x: &SpinConfig, anchor: &Site) -> Vec<Site> {
        let shape = x.shape();
        let mut out = Vec::new();
        for row in self.rows() {
            let odd = self
                .row_columns(&row)
                .iter()
                .filter(|c| x.get(&shape.wrap(&anchor.add(c))))
                .count()
                % 2
                == 1;
            if odd {
                out.push(shape.wrap(&anchor.add(&row)));
            }
        }
        out
    }

    pub(crate) fn with_rate<T: Scalar>(&self, rate: T) -> RuleTemplate<T> {
        RuleTemplate {
            pairs: self.pairs.clone(),
            rate,
        }
    }
}

/// A translation-invariant family of rules.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleSet<S = f64> {
    dim: usize,
    name: String,
    templates: Vec<RuleTemplate<S>>,
}

impl<S: Scalar> RuleSet<S> {
    /// Templates sharing a pair set are merged by adding their rates, so the
    /// family is a function `A -> a(A)`.
    pub fn new(dim: usize, name: impl Into<String>, templates: Vec<RuleTemplate<S>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Template("dimension must be at least 1".into()));
        }
        let mut merged: Vec<RuleTemplate<S>> = Vec::new();
        let mut index: BTreeMap<Vec<(SiteOffset, SiteOffset)>, usize> = BTreeMap::new();
        for t in templates {
            if t.dim() != dim {
                return Err(Error::Template(format!(
                    "template of dimension {} in a rule set of dimension {dim}",
                    t.dim()
                )));
            }
            match index.get(&t.pairs) {
                Some(&k) => merged[k].rate = merged[k].rate.clone() + t.rate,
                None => {
                    index.insert(t.pairs.clone(), merged.len());
                    merged.push(t);
                }
            }
        }
        Ok(RuleSet {
            dim,
            name: name.into(),
            templates: merged,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn templates(&self) -> &[RuleTemplate<S>] {
        &self.templates
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn radius(&self) -> i64 {
        self.templates.iter().map(|t| t.radius()).max().unwrap_or(0)
    }

    /// Every row of every template has even cardinality.
    pub fn spin_flip_symmetric(&self) -> bool {
        self.templates.iter().all(|t| t.rows_even())
    }

    /// Every column of every template has even cardinality.
    pub fn parity_preserving(&self) -> bool {
        self.templates.iter().all(|t| t.columns_even())
    }

    /// Rate of the template with exactly this pair set, if present.
    pub fn rate_of(&self, pairs: &[(SiteOffset, SiteOffset)]) -> Option<&S> {
        let mut key = pairs.to_vec();
        key.sort();
        self.templates
            .iter()
            .find(|t| t.pairs == key)
            .map(|t| &t.rate)
    }

    /// Same pair sets with identical rates, ignoring order and name.
    pub fn same_family(&self, other: &RuleSet<S>) -> bool {
        self.dim == other.dim
            && self.templates.len() == other.templates.len()
            && self
                .templates
                .iter()
                .all(|t| other.rate_of(&t.pairs) == Some(&t.rate))
    }

    /// Like [`RuleSet::same_family`] with rates compared to a tolerance.
    pub fn same_family_within(&self, other: &RuleSet<S>, tol: f64) -> bool {
        self.dim == other.dim
            && self.templates.len() == other.templates.len()
            && self.templates.iter().all(|t| {
                other
                    .rate_of(&t.pairs)
                    .is_some_and(|r| r.close_to(&t.rate, tol))
            })
    }

    /// Converts every rate to another scalar type.
    pub fn map_rates<T: Scalar>(&self, f: impl Fn(&S) -> T) -> RuleSet<T> {
        RuleSet {
            dim: self.dim,
            name: self.name.clone(),
            templates: self
                .templates
                .iter()
                .map(|t| t.with_rate(f(&t.rate)))
                .collect(),
        }
    }

    /// Rates as `f64`, the engine's working precision.
    pub fn to_f64(&self) -> RuleSet<f64> {
        self.map_rates(|r| r.to_f64_lossy())
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Ruleset-level [`analyze_ruleset`].
    pub fn analyze(&self) -> RuleAnalysis<'_, S> {
        analyze_ruleset(self)
    }
}

impl<S: Scalar + Serialize> RuleSet<S> {
    /// Structured-text (JSON) form: dimension, name, and per template its
    /// pair list and rate.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("rule sets serialize")
    }
}

impl<S: Scalar + for<'de> Deserialize<'de>> RuleSet<S> {
    /// Parses [`RuleSet::to_json`] output, re-validating every template.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RuleSet<S> = serde_json::from_str(text).map_err(|e| Error::Serde(e.to_string()))?;
        let templates = raw
            .templates
            .into_iter()
            .map(|t| RuleTemplate::new(t.pairs, t.rate))
            .collect::<Result<Vec<_>>>()?;
        RuleSet::new(raw.dim, raw.name, templates)
    }
}

/// Dual rule set: every template transposed, rates unchanged.
pub fn transpose_dual<S: Scalar>(r: &RuleSet<S>) -> RuleSet<S> {
    let name = match r.name.strip_prefix("dual-of(").and_then(|s| s.strip_suffix(')')) {
        Some(inner) => inner.to_string(),
        None => format!("dual-of({})", r.name),
    };
    RuleSet {
        dim: r.dim,
        name,
        templates: r.templates.iter().map(|t| t.transposed()).collect(),
    }
}

/// `x + (T_anchor A) x (mod 2)`.
pub fn apply_rule<S: Scalar>(x: &SpinConfig, t: &RuleTemplate<S>, anchor: &Site) -> Result<SpinConfig> {
    if t.dim() != x.shape().dim() || anchor.dim() != x.shape().dim() {
        return Err(Error::ShapeMismatch(format!(
            "template of dimension {} applied on a {}-dimensional configuration",
            t.dim(),
            x.shape().dim()
        )));
    }
    let mut y = x.clone();
    for s in t.toggles(x, anchor) {
        y.toggle(&s);
    }
    Ok(y)
}

/// Total rate at which site `i` flips, summed over anchored single-row templates.
///
/// Errors if any template has more than one row, since then a flip of `i`
/// is not an isolated event.
pub fn effective_flip_rate<S: Scalar>(r: &RuleSet<S>, x: &SpinConfig, i: &Site) -> Result<S> {
    if x.shape().dim() != r.dim() || i.dim() != r.dim() {
        return Err(Error::ShapeMismatch("site, configuration and rule set dimensions differ".into()));
    }
    let shape = x.shape();
    let mut total = S::zero();
    for t in r.templates() {
        let rows = t.rows();
        if rows.len() != 1 {
            return Err(Error::Unsupported(format!(
                "template with {} rows; single-site flip rates need single-row templates",
                rows.len()
            )));
        }
        let anchor = i.sub(&rows[0]);
        let odd = t
            .row_columns(&rows[0])
            .iter()
            .filter(|c| x.get(&shape.wrap(&anchor.add(c))))
            .count()
            % 2
            == 1;
        if odd {
            total = total + t.rate().clone();
        }
    }
    Ok(total)
}

/// Row/column parity classification of a rule set, plus its exit rate.
#[derive(Clone, Debug)]
pub struct RuleAnalysis<'a, S = f64> {
    pub spin_flip_symmetric: bool,
    pub parity_preserving: bool,
    rules: &'a RuleSet<S>,
}

pub fn analyze_ruleset<S: Scalar>(r: &RuleSet<S>) -> RuleAnalysis<'_, S> {
    RuleAnalysis {
        spin_flip_symmetric: r.spin_flip_symmetric(),
        parity_preserving: r.parity_preserving(),
        rules: r,
    }
}

impl<S: Scalar> RuleAnalysis<'_, S> {
    /// `r(y) = Σ_A a(A) 1{A y != 0}` over all anchored templates.
    ///
    /// On a torus every site is an anchor; on `Z^d` only anchors within the
    /// rule radius of the support can act, which keeps the sum finite.
    pub fn total_exit_rate(&self, y: &SpinConfig) -> S {
        let shape = y.shape();
        let mut total = S::zero();
        for t in self.rules.templates() {
            let anchors: Vec<Site> = match shape.n_sites() {
                Some(n) => (0..n).map(|k| shape.site_of(k)).collect(),
                None => {
                    let cols = t.columns();
                    let set: HashSet<Site> = y
                        .occupied()
                        .iter()
                        .flat_map(|s| cols.iter().map(move |c| s.sub(c)))
                        .collect();
                    set.into_iter().collect()
                }
            };
            for a in anchors {
                if !t.toggles(y, &a).is_empty() {
                    total = total + t.rate().clone();
                }
            }
        }
        total
    }

    /// Exit rate divided by the number of torus sites (dense configurations only).
    pub fn total_exit_rate_per_site(&self, y: &SpinConfig) -> Option<f64> {
        let n = y.shape().n_sites()?;
        Some(self.total_exit_rate(y).to_f64_lossy() / n as f64)
    }
}
