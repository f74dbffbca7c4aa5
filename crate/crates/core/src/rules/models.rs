//! Constructors for the voter-type models and their duals.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{transpose_dual, RuleSet, RuleTemplate};
use crate::error::{Error, Result};
use crate::lattice::Site;
use crate::scalar::{ratio, Scalar};

/// Largest neighbourhood for which the affine model's `2^|N|` even-subset
/// templates are enumerated.
const AFFINE_MAX_NEIGHBOURS: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    NeutralNp,
    Affine,
    Rebellious,
    Disagreement,
    Swapping,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::NeutralNp => "neutral-np",
            ModelKind::Affine => "affine",
            ModelKind::Rebellious => "rebellious",
            ModelKind::Disagreement => "disagreement",
            ModelKind::Swapping => "swapping",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "neutral-np" | "np" => ModelKind::NeutralNp,
            "affine" => ModelKind::Affine,
            "rebellious" => ModelKind::Rebellious,
            "disagreement" => ModelKind::Disagreement,
            "swapping" => ModelKind::Swapping,
            _ => return None,
        })
    }

    /// Only the neutral Neuhauser-Pacala and affine models take `d` and `R`.
    pub fn has_range(&self) -> bool {
        matches!(self, ModelKind::NeutralNp | ModelKind::Affine)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameters of one of the five spin systems, or of its dual.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec<S = f64> {
    pub kind: ModelKind,
    pub dual: bool,
    pub alpha: S,
    pub dim: usize,
    pub range: usize,
    /// Permits `d = R = 1` for the neutral and affine models.
    pub allow_1d: bool,
}

impl<S: Scalar> ModelSpec<S> {
    fn one_d(kind: ModelKind, alpha: S) -> Self {
        ModelSpec {
            kind,
            dual: false,
            alpha,
            dim: 1,
            range: 1,
            allow_1d: false,
        }
    }

    pub fn rebellious(alpha: S) -> Self {
        Self::one_d(ModelKind::Rebellious, alpha)
    }

    pub fn disagreement(alpha: S) -> Self {
        Self::one_d(ModelKind::Disagreement, alpha)
    }

    pub fn swapping(alpha: S) -> Self {
        Self::one_d(ModelKind::Swapping, alpha)
    }

    pub fn neutral_np(dim: usize, range: usize, alpha: S) -> Self {
        ModelSpec {
            kind: ModelKind::NeutralNp,
            dual: false,
            alpha,
            dim,
            range,
            allow_1d: false,
        }
    }

    pub fn affine(dim: usize, range: usize, alpha: S) -> Self {
        ModelSpec {
            kind: ModelKind::Affine,
            ..Self::neutral_np(dim, range, alpha)
        }
    }

    /// The dual (transposed) system.
    pub fn dual(mut self) -> Self {
        self.dual = !self.dual;
        self
    }

    pub fn allow_1d(mut self) -> Self {
        self.allow_1d = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= S::zero() && self.alpha <= S::one()) {
            return Err(Error::param(
                "alpha",
                format!("{:?} is outside the legal range [0, 1]", self.alpha),
            ));
        }
        if self.kind.has_range() {
            if self.dim == 0 {
                return Err(Error::param("dim", "must be at least 1"));
            }
            if self.range == 0 {
                return Err(Error::param("range", "must be at least 1"));
            }
            if self.dim == 1 && self.range == 1 && !self.allow_1d {
                return Err(Error::param(
                    "dim/range",
                    "d = R = 1 reduces to a disagreement model; set allow_1d to build it",
                ));
            }
        } else if self.dim != 1 {
            return Err(Error::param(
                "dim",
                format!("the {} model is one-dimensional", self.kind),
            ));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        let base = if self.kind.has_range() {
            format!(
                "{}(d={},R={},alpha={:?})",
                self.kind, self.dim, self.range, self.alpha
            )
        } else {
            format!("{}(alpha={:?})", self.kind, self.alpha)
        };
        if self.dual {
            format!("dual-of({base})")
        } else {
            base
        }
    }
}

/// Neighbourhood `N_0`: the `(2R+1)^d - 1` sites of the cube of radius `R`
/// around the origin, origin excluded.
pub fn neighbourhood(dim: usize, range: usize) -> Vec<Site> {
    let r = range as i64;
    let mut out = Vec::new();
    let mut c = vec![-r; dim];
    loop {
        if c.iter().any(|&v| v != 0) {
            out.push(Site(c.clone()));
        }
        let mut k = dim;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if c[k] < r {
                c[k] += 1;
                break;
            }
            c[k] = -r;
        }
    }
}

/// Builds the rule table of a model. Templates with zero rate are dropped.
pub fn build_model<S: Scalar>(spec: &ModelSpec<S>) -> Result<RuleSet<S>> {
    spec.validate()?;
    let a = spec.alpha.clone();
    let b = S::one() - a.clone();
    let mut templates = Vec::new();
    let mut push = |pairs: Vec<(Site, Site)>, rate: S| -> Result<()> {
        if rate > S::zero() {
            templates.push(RuleTemplate::new(pairs, rate)?);
        }
        Ok(())
    };
    let origin = Site::origin(spec.dim);
    let row = |cols: &[Site]| -> Vec<(Site, Site)> {
        cols.iter().map(|c| (origin.clone(), c.clone())).collect()
    };
    match spec.kind {
        ModelKind::NeutralNp => {
            let nb = neighbourhood(spec.dim, spec.range);
            let n = nb.len() as i64;
            for j in &nb {
                push(row(&[origin.clone(), j.clone()]), a.clone() / ratio::<S>(n, 1))?;
            }
            for (p, j) in nb.iter().enumerate() {
                for k in &nb[p + 1..] {
                    push(row(&[j.clone(), k.clone()]), b.clone() / ratio::<S>(n * n, 1))?;
                }
            }
        }
        ModelKind::Affine => {
            let nb = neighbourhood(spec.dim, spec.range);
            if nb.len() > AFFINE_MAX_NEIGHBOURS {
                return Err(Error::Unsupported(format!(
                    "affine model with |N| = {} would need 2^{} templates",
                    nb.len(),
                    nb.len()
                )));
            }
            let n = nb.len() as i64;
            for j in &nb {
                push(row(&[origin.clone(), j.clone()]), a.clone() / ratio::<S>(n, 1))?;
            }
            // Even subsets of N ∪ {0}; the empty set acts as zero and is skipped.
            let mut pool = vec![origin.clone()];
            pool.extend(nb.iter().cloned());
            let weight = b.clone() / ratio::<S>(1i64 << (n - 1), 1);
            for mask in 1u64..(1u64 << pool.len()) {
                if mask.count_ones() % 2 != 0 {
                    continue;
                }
                let cols: Vec<Site> = (0..pool.len())
                    .filter(|&k| mask >> k & 1 == 1)
                    .map(|k| pool[k].clone())
                    .collect();
                push(row(&cols), weight.clone())?;
            }
        }
        ModelKind::Rebellious => {
            let s = |i: i64| Site::d1(i);
            push(row(&[s(-1), s(0)]), a.clone())?;
            push(row(&[s(0), s(1)]), a.clone())?;
            push(row(&[s(-2), s(-1)]), b.clone())?;
            push(row(&[s(1), s(2)]), b.clone())?;
        }
        ModelKind::Disagreement => {
            let s = |i: i64| Site::d1(i);
            push(row(&[s(-1), s(0)]), a.clone())?;
            push(row(&[s(0), s(1)]), a.clone())?;
            push(row(&[s(-1), s(1)]), b.clone())?;
        }
        ModelKind::Swapping => {
            let s = |i: i64| Site::d1(i);
            push(row(&[s(-1), s(0)]), a.clone())?;
            push(row(&[s(0), s(1)]), a.clone())?;
            let mut swap = Vec::new();
            for r in [0, 1] {
                for c in [0, 1] {
                    swap.push((s(r), s(c)));
                }
            }
            push(swap, b.clone())?;
        }
    }
    let base = RuleSet::new(spec.dim, spec.label(), templates)?;
    let base = if spec.dual {
        transpose_dual(&base).with_name(spec.label())
    } else {
        base
    };
    Ok(base)
}

/// A one-dimensional model expressed as a time-changed disagreement model:
/// `rates(model) = time_scale * rates(disagreement(alpha))`.
#[derive(Clone, Debug, PartialEq)]
pub struct Reduction<S> {
    pub alpha: S,
    pub time_scale: S,
}

/// Maps the `d = R = 1` neutral and affine models to disagreement models.
///
/// Neutral: `alpha' = 2a / (1 + a)`, time scale `(1 + a) / 4`.
/// Affine: `alpha' = 1 / (2 - a)`, time scale `(2 - a) / 2`.
pub fn one_dimensional_reduction<S: Scalar>(spec: &ModelSpec<S>) -> Result<Reduction<S>> {
    spec.validate()?;
    if !(spec.dim == 1 && spec.range == 1 && spec.allow_1d) {
        return Err(Error::Unsupported(
            "the disagreement reduction applies to d = R = 1 with allow_1d".into(),
        ));
    }
    let a = spec.alpha.clone();
    let one = S::one();
    let two = one.clone() + one.clone();
    match spec.kind {
        ModelKind::NeutralNp => Ok(Reduction {
            alpha: two.clone() * a.clone() / (one.clone() + a.clone()),
            time_scale: (one + a) / (two.clone() * two),
        }),
        ModelKind::Affine => Ok(Reduction {
            alpha: one / (two.clone() - a.clone()),
            time_scale: (two.clone() - a) / two,
        }),
        other => Err(Error::Unsupported(format!(
            "no disagreement reduction for the {other} model"
        ))),
    }
}
