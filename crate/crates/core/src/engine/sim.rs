//! Event-driven kernel shared by the dense and sparse backends.
//!
//! For every template the kernel keeps the set of anchors at which the
//! template currently acts nontrivially. The next event is exponential at
//! the total active rate; a template is chosen proportionally to
//! `rate * |active anchors|` and an anchor uniformly among its active ones.
//! After an event only anchors whose columns cover a toggled site can change
//! activity, so updates touch a radius-bounded window.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::lattice::{LatticeShape, Site, SpinConfig};
use crate::rules::RuleSet;
use crate::scalar::Scalar;

/// Limits for runs on the infinite lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Caps {
    pub max_particles: usize,
    pub max_radius: i64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_particles: 1_000_000,
            max_radius: 100_000_000,
        }
    }
}

/// Why a run stopped early.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CapReason {
    Particles,
    Radius,
}

/// Outcome of [`Simulator::step`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    /// An event fired at the current time.
    Event { template: usize, anchor: usize },
    /// A null event (only without null skipping): a clock rang where the rule acts as zero.
    Null,
    /// No event before the horizon; time now equals the horizon.
    Horizon,
    /// No rule can act; time jumped to the horizon.
    Frozen,
    /// A cap was exceeded by the last event.
    Capped(CapReason),
}

struct Row {
    row: usize,
    cols: std::ops::Range<usize>,
}

/// Templates whose activity condition agrees up to translation share one
/// set of active anchors. A template anchored at `a` acts iff its group is
/// active at `a + m`, where `m` is the template's smallest column.
struct Group {
    /// Distinct column sets of the rows, normalized so the smallest column is 0.
    rows: Vec<std::ops::Range<usize>>,
    neg_cols: Vec<usize>,
    /// Member templates with the offset id of `-m`.
    members: Vec<(usize, usize)>,
    rate: f64,
    active: IndexSet,
}
trait Shift {
    fn shift(&self, idx: usize, off: usize) -> usize;
}

struct TorusShift<'a> {
    n: usize,
    table: &'a [u32],
}

impl Shift for TorusShift<'_> {
    #[inline(always)]
    fn shift(&self, idx: usize, off: usize) -> usize {
        self.table[off * self.n + idx] as usize
    }
}

struct GridShift<'a> {
    delta: &'a [isize],
}

impl Shift for GridShift<'_> {
    #[inline(always)]
    fn shift(&self, idx: usize, off: usize) -> usize {
        idx.wrapping_add_signed(self.delta[off])
    }
}

enum Space {
    Torus {
        shape: LatticeShape,
        n: usize,
        table: Vec<u32>,
    },
    Grid {
        lo: Vec<i64>,
        ext: Vec<usize>,
        strides: Vec<usize>,
        delta: Vec<isize>,
        margin: i64,
    },
}

impl Space {
    fn len(&self) -> usize {
        match self {
            Space::Torus { n, .. } => *n,
            Space::Grid { ext, .. } => ext.iter().product(),
        }
    }

    fn site(&self, idx: usize) -> Site {
        match self {
            Space::Torus { shape, .. } => shape.site_of(idx),
            Space::Grid { lo, ext, strides, .. } => {
                Site((0..ext.len()).map(|k| lo[k] + ((idx / strides[k]) % ext[k]) as i64).collect())
            }
        }
    }

    /// Grid index of a site, `None` outside the grid.
    fn index(&self, site: &Site) -> Option<usize> {
        match self {
            Space::Torus { shape, .. } => Some(shape.index_of(site)),
            Space::Grid { lo, ext, .. } => {
                let mut idx = 0usize;
                for k in 0..ext.len() {
                    let c = site.0[k] - lo[k];
                    if c < 0 || c >= ext[k] as i64 {
                        return None;
                    }
                    idx = idx * ext[k] + c as usize;
                }
                Some(idx)
            }
        }
    }
}

#[derive(Clone, Default)]
struct IndexSet {
    items: Vec<u32>,
    pos: Vec<u32>,
}

impl IndexSet {
    fn with_capacity(n: usize) -> Self {
        IndexSet {
            items: Vec::new(),
            pos: vec![0; n],
        }
    }

    #[inline(always)]
    fn set(&mut self, idx: usize, member: bool) {
        let p = self.pos[idx];
        if member && p == 0 {
            self.items.push(idx as u32);
            self.pos[idx] = self.items.len() as u32;
        } else if !member && p != 0 {
            let last = *self.items.last().expect("nonempty");
            self.items.swap_remove((p - 1) as usize);
            if last as usize != idx {
                self.pos[last as usize] = p;
            }
            self.pos[idx] = 0;
        }
    }

    #[inline(always)]
    fn contains(&self, idx: usize) -> bool {
        self.pos[idx] != 0
    }

    fn len(&self) -> usize {
        self.items.len()
    }
}

/// State and activity sets, independent of the geometry.
struct Core {
    /// Rows of each template for firing.
    templates: Vec<Vec<Row>>,
    /// Group index and offset id of `-m` per template.
    member_of: Vec<(usize, usize)>,
    groups: Vec<Group>,
    arena: Vec<usize>,
    state: Vec<u8>,
    ones: usize,
    toggled: Vec<usize>,
}

impl Core {
    #[inline(always)]
    fn group_acts<T: Shift>(&self, sh: &T, g: usize, anchor: usize) -> bool {
        for cols in &self.groups[g].rows {
            let mut p = 0u8;
            for &c in &self.arena[cols.clone()] {
                p ^= self.state[sh.shift(anchor, c)];
            }
            if p == 1 {
                return true;
            }
        }
        false
    }

    /// Re-evaluates every group anchor whose columns include site `s`.
    #[inline(always)]
    fn refresh_around<T: Shift>(&mut self, sh: &T, s: usize) {
        for g in 0..self.groups.len() {
            for k in 0..self.groups[g].neg_cols.len() {
                let a = sh.shift(s, self.groups[g].neg_cols[k]);
                let on = self.group_acts(sh, g, a);
                self.groups[g].active.set(a, on);
            }
        }
    }

    fn fire<T: Shift>(&mut self, sh: &T, u: usize, anchor: usize) {
        self.toggled.clear();
        for row in &self.templates[u] {
            let mut p = 0u8;
            for &c in &self.arena[row.cols.clone()] {
                p ^= self.state[sh.shift(anchor, c)];
            }
            if p == 1 {
                self.toggled.push(sh.shift(anchor, row.row));
            }
        }
        for k in 0..self.toggled.len() {
            let s = self.toggled[k];
            self.state[s] ^= 1;
            if self.state[s] == 1 {
                self.ones += 1;
            } else {
                self.ones -= 1;
            }
        }
        for k in 0..self.toggled.len() {
            let s = self.toggled[k];
            self.refresh_around(sh, s);
        }
    }

    fn rebuild<T: Shift>(&mut self, sh: &T, n: usize) {
        for g in &mut self.groups {
            g.active = IndexSet::with_capacity(n);
        }
        for s in 0..n {
            if self.state[s] == 1 {
                self.refresh_around(sh, s);
            }
        }
    }

    fn set_group_rates(&mut self, rates: &[f64]) {
        for g in &mut self.groups {
            g.rate = g.members.iter().map(|(u, _)| rates[*u]).sum();
        }
    }
}

/// Continuous-time simulator of a rule set on a torus or on `Z^d`.
pub struct Simulator {
    dim: usize,
    offsets: Vec<Site>,
    rates: Vec<f64>,
    space: Space,
    core: Core,
    time: f64,
    skip_null: bool,
    caps: Option<Caps>,
    rng: ChaCha8Rng,
    radius: i64,
}

fn compile<S: Scalar>(rules: &RuleSet<S>) -> (Vec<Site>, Core, Vec<f64>) {
    let mut ids: HashMap<Site, usize> = HashMap::new();
    let mut offsets = Vec::new();
    let mut id = |s: Site, offsets: &mut Vec<Site>| -> usize {
        *ids.entry(s.clone()).or_insert_with(|| {
            offsets.push(s);
            offsets.len() - 1
        })
    };
    let mut templates = Vec::new();
    let mut member_of = Vec::new();
    let mut groups: Vec<Group> = Vec::new();
    let mut signatures: HashMap<Vec<Vec<Site>>, usize> = HashMap::new();
    let mut arena = Vec::new();
    let mut rates = Vec::new();
    for (u, t) in rules.templates().iter().enumerate() {
        let mut rows = Vec::new();
        for r in t.rows() {
            let start = arena.len();
            for c in t.row_columns(&r) {
                arena.push(id(c, &mut offsets));
            }
            rows.push(Row {
                row: id(r, &mut offsets),
                cols: start..arena.len(),
            });
        }
        templates.push(rows);
        rates.push(t.rate().to_f64_lossy());

        let m = t.columns().into_iter().min().expect("nonempty template");
        let mut sig: Vec<Vec<Site>> = t
            .rows()
            .iter()
            .map(|r| t.row_columns(r).iter().map(|c| c.sub(&m)).collect())
            .collect();
        sig.sort();
        sig.dedup();
        let g = match signatures.get(&sig) {
            Some(&g) => g,
            None => {
                let mut group_rows = Vec::new();
                for cols in &sig {
                    let start = arena.len();
                    for c in cols {
                        arena.push(id(c.clone(), &mut offsets));
                    }
                    group_rows.push(start..arena.len());
                }
                let mut union: Vec<Site> = sig.iter().flatten().cloned().collect();
                union.sort();
                union.dedup();
                let neg_cols = union.iter().map(|c| id(c.neg(), &mut offsets)).collect();
                groups.push(Group {
                    rows: group_rows,
                    neg_cols,
                    members: Vec::new(),
                    rate: 0.0,
                    active: IndexSet::default(),
                });
                signatures.insert(sig, groups.len() - 1);
                groups.len() - 1
            }
        };
        let neg_m = id(m.neg(), &mut offsets);
        groups[g].members.push((u, neg_m));
        member_of.push((g, id(m, &mut offsets)));
    }
    let mut core = Core {
        templates,
        member_of,
        groups,
        arena,
        state: Vec::new(),
        ones: 0,
        toggled: Vec::new(),
    };
    core.set_group_rates(&rates);
    (offsets, core, rates)
}

macro_rules! with_shift {
    ($space:expr, $sh:ident => $body:expr) => {
        match $space {
            Space::Torus { n, table, .. } => {
                let $sh = TorusShift { n: *n, table };
                $body
            }
            Space::Grid { delta, .. } => {
                let $sh = GridShift { delta };
                $body
            }
        }
    };
}

impl Simulator {
    /// Simulator on the torus of `x0`.
    pub fn dense<S: Scalar>(
        rules: &RuleSet<S>,
        x0: &SpinConfig,
        rng: ChaCha8Rng,
        skip_null: bool,
    ) -> Result<Self> {
        let shape = x0.shape().clone();
        let n = shape
            .n_sites()
            .ok_or_else(|| Error::Config("dense runs need a torus configuration".into()))?;
        if shape.dim() != rules.dim() {
            return Err(Error::ShapeMismatch("rule set and lattice dimensions differ".into()));
        }
        shape.check_radius(rules.radius())?;
        if n > u32::MAX as usize {
            return Err(Error::Shape("torus too large".into()));
        }
        let (offsets, mut core, rates) = compile(rules);
        let mut table = vec![0u32; offsets.len() * n];
        for (o, off) in offsets.iter().enumerate() {
            for k in 0..n {
                let s = shape.site_of(k).add(off);
                table[o * n + k] = shape.index_of(&s) as u32;
            }
        }
        core.state = x0.to_bytes().expect("dense");
        core.ones = core.state.iter().map(|&b| b as usize).sum();
        core.rebuild(&TorusShift { n, table: &table }, n);
        Ok(Simulator {
            dim: shape.dim(),
            offsets,
            rates,
            space: Space::Torus { shape, n, table },
            core,
            time: 0.0,
            skip_null,
            caps: None,
            rng,
            radius: rules.radius(),
        })
    }

    /// Simulator on `Z^d` started from a finite configuration.
    pub fn sparse<S: Scalar>(
        rules: &RuleSet<S>,
        y0: &SpinConfig,
        rng: ChaCha8Rng,
        caps: Caps,
    ) -> Result<Self> {
        let support = y0
            .support()
            .ok_or_else(|| Error::Config("sparse runs need a finite-support configuration".into()))?;
        if y0.shape().dim() != rules.dim() {
            return Err(Error::ShapeMismatch("rule set and lattice dimensions differ".into()));
        }
        let d = rules.dim();
        let radius = rules.radius();
        let margin = 4 * radius + 2;
        let (offsets, core, rates) = compile(rules);
        let mut min = vec![0i64; d];
        let mut max = vec![0i64; d];
        if let Some(first) = support.iter().next() {
            min = first.0.clone();
            max = first.0.clone();
            for s in support {
                for k in 0..d {
                    min[k] = min[k].min(s.0[k]);
                    max[k] = max[k].max(s.0[k]);
                }
            }
        }
        let pad = 2 * margin + if d == 1 { 64 } else { 8 };
        let lo: Vec<i64> = min.iter().map(|m| m - pad).collect();
        let ext: Vec<usize> = (0..d).map(|k| (max[k] - min[k] + 2 * pad + 1) as usize).collect();
        let mut sim = Simulator {
            dim: d,
            offsets,
            rates,
            space: Space::Torus {
                shape: LatticeShape::ring(1)?,
                n: 0,
                table: Vec::new(),
            },
            core,
            time: 0.0,
            skip_null: true,
            caps: Some(caps),
            rng,
            radius,
        };
        sim.install_grid(lo, ext, margin, support.iter().cloned().collect());
        Ok(sim)
    }

    fn install_grid(&mut self, lo: Vec<i64>, ext: Vec<usize>, margin: i64, occupied: Vec<Site>) {
        let d = self.dim;
        let mut strides = vec![1usize; d];
        for k in (0..d.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * ext[k + 1];
        }
        let delta: Vec<isize> = self
            .offsets
            .iter()
            .map(|o| (0..d).map(|k| o.0[k] as isize * strides[k] as isize).sum())
            .collect();
        let n: usize = ext.iter().product();
        self.space = Space::Grid {
            lo,
            ext,
            strides,
            delta,
            margin,
        };
        self.core.state = vec![0; n];
        for s in &occupied {
            let idx = self.space.index(s).expect("site inside grid");
            self.core.state[idx] = 1;
        }
        self.core.ones = occupied.len();
        let Space::Grid { delta, .. } = &self.space else { unreachable!() };
        self.core.rebuild(&GridShift { delta }, n);
    }

    /// Current total rate of non-null events.
    pub fn exit_rate(&self) -> f64 {
        self.core
            .groups
            .iter()
            .map(|g| g.rate * g.active.len() as f64)
            .sum()
    }

    /// Advances to the next event or to `horizon`, whichever comes first.
    pub fn step(&mut self, horizon: f64) -> Step {
        let n = self.space.len();
        let total = if self.skip_null {
            self.exit_rate()
        } else {
            self.rates.iter().sum::<f64>() * n as f64
        };
        if total <= 0.0 || self.core.ones == 0 && self.caps.is_some() {
            self.time = self.time.max(horizon);
            return Step::Frozen;
        }
        let dt: f64 = self.rng.sample::<f64, _>(Exp1) / total;
        if self.time + dt > horizon {
            self.time = horizon;
            return Step::Horizon;
        }
        self.time += dt;
        // one uniform picks the group and template; its residual picks the anchor
        let mut target = self.rng.random::<f64>() * total;
        let (u, anchor) = if self.skip_null {
            let groups = &self.core.groups;
            let mut pick = None;
            for (g, grp) in groups.iter().enumerate() {
                let w = grp.rate * grp.active.len() as f64;
                if w <= 0.0 {
                    continue;
                }
                pick = Some(g);
                if target < w {
                    break;
                }
                target -= w;
            }
            let grp = &groups[pick.expect("positive total rate")];
            let len = grp.active.len();
            // target / rate is uniform on [0, len)
            let mut slot = (target / grp.rate).clamp(0.0, len as f64);
            let k = (slot as usize).min(len - 1);
            let b = grp.active.items[k] as usize;
            slot = (slot - k as f64).max(0.0) * grp.rate;
            let mut member = grp.members[grp.members.len() - 1];
            for &(u, neg_m) in &grp.members {
                let r = self.rates[u];
                if r > 0.0 && slot < r {
                    member = (u, neg_m);
                    break;
                }
                slot -= r;
            }
            let (u, neg_m) = member;
            let a = with_shift!(&self.space, sh => sh.shift(b, neg_m));
            (u, a)
        } else {
            let mut pick = 0;
            for (u, r) in self.rates.iter().enumerate() {
                let w = r * n as f64;
                if w <= 0.0 {
                    continue;
                }
                pick = u;
                if target < w {
                    break;
                }
                target -= w;
            }
            let a = ((target / self.rates[pick]) as usize).min(n - 1);
            let (g, m) = self.core.member_of[pick];
            let b = with_shift!(&self.space, sh => sh.shift(a, m));
            if !self.core.groups[g].active.contains(b) {
                self.core.toggled.clear();
                return Step::Null;
            }
            (pick, a)
        };
        with_shift!(&self.space, sh => self.core.fire(&sh, u, anchor));
        let mut anchor = anchor;
        if let Some(reason) = self.check_caps_and_grow(&mut anchor) {
            return Step::Capped(reason);
        }
        Step::Event { template: u, anchor }
    }

    /// `anchor` and the toggled indices are carried over if the grid grows.
    fn check_caps_and_grow(&mut self, anchor: &mut usize) -> Option<CapReason> {
        let caps = self.caps?;
        if self.core.ones > caps.max_particles {
            return Some(CapReason::Particles);
        }
        let Space::Grid {
            lo,
            ext,
            strides,
            margin,
            ..
        } = &self.space
        else {
            return None;
        };
        let mut grow = false;
        for &s in &self.core.toggled {
            if self.core.state[s] == 0 {
                continue;
            }
            for k in 0..self.dim {
                let c = if self.dim == 1 { s } else { (s / strides[k]) % ext[k] } as i64;
                if (lo[k] + c).abs() > caps.max_radius {
                    return Some(CapReason::Radius);
                }
                if c < *margin || ext[k] as i64 - 1 - c < *margin {
                    grow = true;
                }
            }
        }
        if grow {
            self.grow(anchor);
        }
        None
    }

    fn grow(&mut self, anchor: &mut usize) {
        let (lo, ext, margin) = match &self.space {
            Space::Grid { lo, ext, margin, .. } => (lo.clone(), ext.clone(), *margin),
            Space::Torus { .. } => return,
        };
        let occupied: Vec<Site> = (0..self.core.state.len())
            .filter(|&k| self.core.state[k] == 1)
            .map(|k| self.space.site(k))
            .collect();
        let d = self.dim;
        let mut min = vec![i64::MAX; d];
        let mut max = vec![i64::MIN; d];
        for s in &occupied {
            for k in 0..d {
                min[k] = min[k].min(s.0[k]);
                max[k] = max[k].max(s.0[k]);
            }
        }
        let mut new_lo = lo.clone();
        let mut new_ext = ext.clone();
        for k in 0..d {
            let pad = (ext[k] as i64 / 2).max(2 * margin);
            let hi = lo[k] + ext[k] as i64 - 1;
            if min[k] - lo[k] < margin {
                new_lo[k] = min[k] - margin - pad;
            }
            let new_hi = if hi - max[k] < margin { max[k] + margin + pad } else { hi };
            new_ext[k] = (new_hi - new_lo[k] + 1) as usize;
        }
        let anchor_site = self.space.site(*anchor);
        let toggled: Vec<Site> = self.core.toggled.iter().map(|&k| self.space.site(k)).collect();
        self.install_grid(new_lo, new_ext, margin, occupied);
        let at = |s: &Site| self.space.index(s).expect("the grid only grows");
        *anchor = at(&anchor_site);
        self.core.toggled = toggled.iter().map(at).collect();
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Number of occupied sites.
    pub fn ones(&self) -> usize {
        self.core.ones
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.space, Space::Torus { .. })
    }

    pub fn template_count(&self) -> usize {
        self.rates.len()
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Replaces template rates (same template order as the compiled rule set).
    ///
    /// Activity does not depend on rates, so this is free; it is how slowly
    /// varying parameters are driven.
    pub fn set_rates(&mut self, rates: &[f64]) -> Result<()> {
        if rates.len() != self.rates.len() || rates.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(Error::param("rates", "wrong length or negative entry"));
        }
        self.rates.copy_from_slice(rates);
        self.core.set_group_rates(rates);
        Ok(())
    }

    /// Spin at `site` (outside the sparse grid every site is empty).
    pub fn get(&self, site: &Site) -> bool {
        self.space.index(site).is_some_and(|k| self.core.state[k] == 1)
    }

    /// Site of a kernel index as reported by [`Step::Event`].
    pub fn site_of(&self, idx: usize) -> Site {
        self.space.site(idx)
    }

    /// Sites toggled by the last event.
    pub fn last_toggled(&self) -> Vec<Site> {
        self.core.toggled.iter().map(|&k| self.space.site(k)).collect()
    }

    /// Current configuration, on the torus or as a sparse set.
    pub fn config(&self) -> SpinConfig {
        let state = &self.core.state;
        match &self.space {
            Space::Torus { shape, .. } => SpinConfig::from_bytes(shape, state).expect("state matches shape"),
            Space::Grid { .. } => SpinConfig::sparse(
                self.dim,
                (0..state.len()).filter(|&k| state[k] == 1).map(|k| self.space.site(k)),
            )
            .expect("dimension matches"),
        }
    }

    /// Hands back the random stream, e.g. to continue it in a fresh run.
    pub fn into_rng(self) -> ChaCha8Rng {
        self.rng
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use crate::rules::{build_model, ModelSpec};

    #[test]
    fn index_set_swap_remove() {
        let mut s = IndexSet::with_capacity(10);
        for k in [3, 5, 7] {
            s.set(k, true);
        }
        s.set(3, false);
        assert!(!s.contains(3) && s.contains(5) && s.contains(7));
        assert_eq!(s.len(), 2);
        s.set(7, false);
        s.set(5, false);
        assert_eq!(s.len(), 0);
    }

    #[test]
    fn active_sets_track_brute_force() {
        let rules = build_model(&ModelSpec::rebellious(0.4).dual()).unwrap();
        let y0 = SpinConfig::sparse_1d([0, 1, 5]);
        let mut sim = Simulator::sparse(&rules, &y0, stream(3, 0, Purpose::Dynamics), Caps::default()).unwrap();
        for _ in 0..2000 {
            if let Step::Frozen = sim.step(f64::INFINITY) {
                break;
            }
            let y = sim.config();
            let brute = crate::rules::analyze_ruleset(&rules).total_exit_rate(&y);
            assert!((brute - sim.exit_rate()).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_grows_without_losing_state() {
        let rules = build_model(&ModelSpec::rebellious(0.0).dual()).unwrap();
        let y0 = SpinConfig::sparse_1d([0]);
        let mut sim = Simulator::sparse(&rules, &y0, stream(1, 0, Purpose::Dynamics), Caps::default()).unwrap();
        let mut parity = 1;
        for _ in 0..20_000 {
            match sim.step(f64::INFINITY) {
                Step::Event { .. } => {
                    parity ^= sim.last_toggled().len() % 2;
                    assert_eq!(sim.ones() % 2, 1);
                }
                other => panic!("unexpected {other:?}"),
            }
        }
        assert_eq!(parity, 1);
        assert_eq!(sim.config().ones(), sim.ones());
    }

    #[test]
    fn particle_cap() {
        let rules = build_model(&ModelSpec::rebellious(0.0).dual()).unwrap();
        let caps = Caps {
            max_particles: 10,
            max_radius: 1000,
        };
        let mut sim = Simulator::sparse(&rules, &SpinConfig::sparse_1d([0]), stream(1, 0, Purpose::Dynamics), caps).unwrap();
        let mut capped = false;
        for _ in 0..100_000 {
            if let Step::Capped(CapReason::Particles) = sim.step(f64::INFINITY) {
                capped = true;
                break;
            }
        }
        assert!(capped);
    }

    #[test]
    fn dense_side_check() {
        let rules = build_model(&ModelSpec::rebellious(0.5)).unwrap();
        let x = SpinConfig::zeros(&LatticeShape::ring(4).unwrap());
        assert!(Simulator::dense(&rules, &x, stream(1, 0, Purpose::Dynamics), true).is_err());
    }
}
