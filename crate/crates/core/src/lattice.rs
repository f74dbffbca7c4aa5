//! Lattice geometry and spin configurations.
//!
//! Two backends share one configuration type:
//!
//! * **dense**: a periodic torus `Z/L_1 x ... x Z/L_d`, stored as a bitset in
//!   row-major site order (last coordinate fastest);
//! * **sparse**: a finite set of occupied sites of the infinite lattice `Z^d`.
//!
//! Dense state indices use the little-endian bit encoding: site with linear
//! index `k` is bit `k` of the state integer.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

/// A site of `Z^d`, or an offset between sites.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Site(pub Vec<i64>);

/// Translation vector; same representation as [`Site`].
pub type SiteOffset = Site;

impl Site {
    pub fn new(coords: Vec<i64>) -> Self {
        Site(coords)
    }

    /// One-dimensional site.
    pub fn d1(i: i64) -> Self {
        Site(vec![i])
    }

    pub fn origin(dim: usize) -> Self {
        Site(vec![0; dim])
    }

    /// Unit vector along axis `k`.
    pub fn unit(dim: usize, k: usize) -> Self {
        let mut c = vec![0; dim];
        c[k] = 1;
        Site(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn add(&self, other: &Site) -> Site {
        Site(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Site) -> Site {
        Site(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> Site {
        Site(self.0.iter().map(|a| -a).collect())
    }

    /// L-infinity norm.
    pub fn max_abs(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Side lengths of a torus, or the infinite lattice.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Extents {
    Torus(Vec<usize>),
    Infinite,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeShape {
    dim: usize,
    extents: Extents,
}

impl LatticeShape {
    pub fn torus(extents: Vec<usize>) -> Result<Self> {
        if extents.is_empty() {
            return Err(Error::Shape("dimension must be at least 1".into()));
        }
        if extents.iter().any(|&l| l == 0) {
            return Err(Error::Shape("torus sides must be positive".into()));
        }
        let mut n: usize = 1;
        for &l in &extents {
            n = n
                .checked_mul(l)
                .ok_or_else(|| Error::Shape("torus has too many sites".into()))?;
        }
        Ok(LatticeShape {
            dim: extents.len(),
            extents: Extents::Torus(extents),
        })
    }

    /// One-dimensional torus `Z/n`.
    pub fn ring(n: usize) -> Result<Self> {
        Self::torus(vec![n])
    }

    pub fn infinite(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("dimension must be at least 1".into()));
        }
        Ok(LatticeShape {
            dim,
            extents: Extents::Infinite,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extents(&self) -> &Extents {
        &self.extents
    }

    pub fn is_torus(&self) -> bool {
        matches!(self.extents, Extents::Torus(_))
    }

    /// Side lengths, for a torus.
    pub fn sides(&self) -> Option<&[usize]> {
        match &self.extents {
            Extents::Torus(e) => Some(e),
            Extents::Infinite => None,
        }
    }

    /// Number of sites of a torus.
    pub fn n_sites(&self) -> Option<usize> {
        self.sides().map(|e| e.iter().product())
    }

    /// Errors unless every torus side is at least `2 * radius + 1`, so that
    /// offsets of a rule of that radius never alias onto each other.
    pub fn check_radius(&self, radius: i64) -> Result<()> {
        if let Some(sides) = self.sides() {
            let need = (2 * radius + 1).max(1) as usize;
            if let Some(&l) = sides.iter().find(|&&l| l < need) {
                return Err(Error::Shape(format!(
                    "torus side {l} is below 2*radius+1 = {need} for interaction radius {radius}"
                )));
            }
        }
        Ok(())
    }

    /// Linear index of a site on the torus; coordinates are reduced mod the sides.
    pub fn index_of(&self, site: &Site) -> usize {
        let sides = self.sides().expect("index_of requires a torus");
        debug_assert_eq!(site.dim(), self.dim);
        let mut idx = 0usize;
        for (c, &l) in site.0.iter().zip(sides) {
            idx = idx * l + c.rem_euclid(l as i64) as usize;
        }
        idx
    }

    /// Inverse of [`LatticeShape::index_of`].
    pub fn site_of(&self, mut idx: usize) -> Site {
        let sides = self.sides().expect("site_of requires a torus");
        let mut c = vec![0i64; self.dim];
        for k in (0..self.dim).rev() {
            c[k] = (idx % sides[k]) as i64;
            idx /= sides[k];
        }
        Site(c)
    }

    /// Reduces a site to its canonical torus representative (identity on `Z^d`).
    pub fn wrap(&self, site: &Site) -> Site {
        match self.sides() {
            Some(sides) => Site(
                site.0
                    .iter()
                    .zip(sides)
                    .map(|(c, &l)| c.rem_euclid(l as i64))
                    .collect(),
            ),
            None => site.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Occupancy {
    Dense { n: usize, words: Vec<u64> },
    Sparse(BTreeSet<Site>),
}

/// A `{0,1}`-valued configuration on a [`LatticeShape`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    shape: LatticeShape,
    occ: Occupancy,
}

/// How to build an initial configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum Init {
    AllZero,
    AllOne,
    /// Row-major `'0'/'1'` string; on the infinite lattice (d = 1) the
    /// pattern is placed at sites `0..len`.
    Pattern(String),
    /// i.i.d. Bernoulli(p), reproducible from the seed.
    Product { p: f64, seed: u64 },
    SingleSite(Site),
    /// Ones on sites `a..=b` of a one-dimensional lattice.
    Interval { a: i64, b: i64 },
}

impl SpinConfig {
    /// All-zero configuration.
    pub fn zeros(shape: &LatticeShape) -> Self {
        let occ = match shape.n_sites() {
            Some(n) => Occupancy::Dense {
                n,
                words: vec![0; n.div_ceil(64)],
            },
            None => Occupancy::Sparse(BTreeSet::new()),
        };
        SpinConfig {
            shape: shape.clone(),
            occ,
        }
    }

    /// Sparse configuration from occupied sites (duplicates collapse).
    pub fn sparse(dim: usize, sites: impl IntoIterator<Item = Site>) -> Result<Self> {
        let shape = LatticeShape::infinite(dim)?;
        let mut set = BTreeSet::new();
        for s in sites {
            if s.dim() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "site {s} has dimension {} but the lattice has {dim}",
                    s.dim()
                )));
            }
            set.insert(s);
        }
        Ok(SpinConfig {
            shape,
            occ: Occupancy::Sparse(set),
        })
    }

    /// One-dimensional sparse configuration.
    pub fn sparse_1d(sites: impl IntoIterator<Item = i64>) -> Self {
        Self::sparse(1, sites.into_iter().map(Site::d1)).expect("dimension 1 is valid")
    }

    /// Dense configuration from a `'0'/'1'` string.
    pub fn from_bits(shape: &LatticeShape, pattern: &str) -> Result<Self> {
        let n = shape
            .n_sites()
            .ok_or_else(|| Error::Config("bit patterns need a torus shape".into()))?;
        let bytes = pattern.as_bytes();
        if bytes.len() != n {
            return Err(Error::Config(format!(
                "pattern length {} does not match {n} sites",
                bytes.len()
            )));
        }
        let mut x = SpinConfig::zeros(shape);
        for (k, &b) in bytes.iter().enumerate() {
            match b {
                b'0' => {}
                b'1' => x.set_index(k, true),
                _ => {
                    return Err(Error::Config(format!(
                        "pattern contains {:?}; only '0' and '1' are allowed",
                        b as char
                    )))
                }
            }
        }
        Ok(x)
    }

    /// Dense configuration from the little-endian state index.
    pub fn from_state_index(shape: &LatticeShape, state: u64) -> Result<Self> {
        let n = shape
            .n_sites()
            .ok_or_else(|| Error::Config("state indices need a torus shape".into()))?;
        if n > 64 || (n < 64 && state >> n != 0) {
            return Err(Error::Config(format!(
                "state {state} out of range for {n} sites"
            )));
        }
        let mut x = SpinConfig::zeros(shape);
        if let Occupancy::Dense { words, .. } = &mut x.occ {
            words[0] = state;
        }
        Ok(x)
    }

    /// Dense configuration from per-site bytes (nonzero = occupied).
    pub fn from_bytes(shape: &LatticeShape, bytes: &[u8]) -> Result<Self> {
        let n = shape
            .n_sites()
            .ok_or_else(|| Error::Config("byte vectors need a torus shape".into()))?;
        if bytes.len() != n {
            return Err(Error::Config(format!(
                "{} values for {n} sites",
                bytes.len()
            )));
        }
        let mut x = SpinConfig::zeros(shape);
        for (k, &b) in bytes.iter().enumerate() {
            if b != 0 {
                x.set_index(k, true);
            }
        }
        Ok(x)
    }

    pub fn shape(&self) -> &LatticeShape {
        &self.shape
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.occ, Occupancy::Dense { .. })
    }

    /// Spin at `site` (reduced mod the torus for dense configurations).
    pub fn get(&self, site: &Site) -> bool {
        match &self.occ {
            Occupancy::Dense { .. } => self.get_index(self.shape.index_of(site)),
            Occupancy::Sparse(set) => set.contains(site),
        }
    }

    /// Spin at a dense linear index.
    pub fn get_index(&self, k: usize) -> bool {
        match &self.occ {
            Occupancy::Dense { words, .. } => words[k / 64] >> (k % 64) & 1 == 1,
            Occupancy::Sparse(_) => panic!("get_index on a sparse configuration"),
        }
    }

    fn set_index(&mut self, k: usize, v: bool) {
        if let Occupancy::Dense { words, .. } = &mut self.occ {
            if v {
                words[k / 64] |= 1 << (k % 64);
            } else {
                words[k / 64] &= !(1 << (k % 64));
            }
        }
    }

    pub fn set(&mut self, site: &Site, v: bool) {
        match &mut self.occ {
            Occupancy::Dense { .. } => {
                let k = self.shape.index_of(site);
                self.set_index(k, v);
            }
            Occupancy::Sparse(set) => {
                if v {
                    set.insert(site.clone());
                } else {
                    set.remove(site);
                }
            }
        }
    }

    pub fn toggle(&mut self, site: &Site) {
        let v = self.get(site);
        self.set(site, !v);
    }

    /// `|x|`, the number of ones.
    pub fn ones(&self) -> usize {
        match &self.occ {
            Occupancy::Dense { words, .. } => words.iter().map(|w| w.count_ones() as usize).sum(),
            Occupancy::Sparse(set) => set.len(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.ones() == 0
    }

    /// Occupied sites in increasing order (row-major for dense).
    pub fn occupied(&self) -> Vec<Site> {
        match &self.occ {
            Occupancy::Dense { n, .. } => (0..*n)
                .filter(|&k| self.get_index(k))
                .map(|k| self.shape.site_of(k))
                .collect(),
            Occupancy::Sparse(set) => set.iter().cloned().collect(),
        }
    }

    /// Occupied dense linear indices.
    pub fn occupied_indices(&self) -> Vec<usize> {
        match &self.occ {
            Occupancy::Dense { n, .. } => (0..*n).filter(|&k| self.get_index(k)).collect(),
            Occupancy::Sparse(_) => panic!("occupied_indices on a sparse configuration"),
        }
    }

    /// Sparse support set (empty view for dense configurations is not offered).
    pub fn support(&self) -> Option<&BTreeSet<Site>> {
        match &self.occ {
            Occupancy::Sparse(set) => Some(set),
            Occupancy::Dense { .. } => None,
        }
    }

    /// Row-major `'0'/'1'` string of a dense configuration.
    pub fn to_bit_string(&self) -> Option<String> {
        match &self.occ {
            Occupancy::Dense { n, .. } => Some(
                (0..*n)
                    .map(|k| if self.get_index(k) { '1' } else { '0' })
                    .collect(),
            ),
            Occupancy::Sparse(_) => None,
        }
    }

    /// Little-endian state index of a dense configuration with at most 64 sites.
    pub fn state_index(&self) -> Option<u64> {
        match &self.occ {
            Occupancy::Dense { n, words } if *n <= 64 => Some(words[0]),
            _ => None,
        }
    }

    /// Per-site bytes of a dense configuration.
    pub fn to_bytes(&self) -> Option<Vec<u8>> {
        match &self.occ {
            Occupancy::Dense { n, .. } => Some((0..*n).map(|k| self.get_index(k) as u8).collect()),
            Occupancy::Sparse(_) => None,
        }
    }

    /// Global spin flip `1 - x` (dense only; the flip of a finite set is infinite).
    pub fn flipped(&self) -> Result<Self> {
        match &self.occ {
            Occupancy::Dense { n, words } => {
                let mut words = words.iter().map(|w| !w).collect::<Vec<_>>();
                let rem = n % 64;
                if rem != 0 {
                    let last = words.len() - 1;
                    words[last] &= (1u64 << rem) - 1;
                }
                Ok(SpinConfig {
                    shape: self.shape.clone(),
                    occ: Occupancy::Dense { n: *n, words },
                })
            }
            Occupancy::Sparse(_) => Err(Error::Unsupported(
                "global flip of a sparse configuration has infinite support".into(),
            )),
        }
    }

    /// Sorted support as coordinate tuples, the sparse serialization.
    pub fn support_list(&self) -> Vec<Vec<i64>> {
        self.occupied().into_iter().map(|s| s.0).collect()
    }
}

/// Builds a configuration on `shape`.
pub fn make_config(shape: &LatticeShape, init: &Init) -> Result<SpinConfig> {
    match init {
        Init::AllZero => Ok(SpinConfig::zeros(shape)),
        Init::AllOne => {
            if !shape.is_torus() {
                return Err(Error::Config(
                    "all-one has infinite support on the infinite lattice".into(),
                ));
            }
            SpinConfig::zeros(shape).flipped()
        }
        Init::Pattern(p) => {
            if shape.is_torus() {
                SpinConfig::from_bits(shape, p)
            } else if shape.dim() == 1 {
                let mut sites = Vec::new();
                for (k, c) in p.chars().enumerate() {
                    match c {
                        '0' => {}
                        '1' => sites.push(k as i64),
                        _ => {
                            return Err(Error::Config(format!(
                                "pattern contains {c:?}; only '0' and '1' are allowed"
                            )))
                        }
                    }
                }
                Ok(SpinConfig::sparse_1d(sites))
            } else {
                Err(Error::Config(
                    "patterns on the infinite lattice need d = 1".into(),
                ))
            }
        }
        Init::Product { p, seed } => {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::param("p", format!("{p} is outside [0, 1]")));
            }
            let n = shape.n_sites().ok_or_else(|| {
                Error::Config("product laws have infinite support on the infinite lattice".into())
            })?;
            let mut rng = stream(*seed, 0, Purpose::InitialState);
            let mut x = SpinConfig::zeros(shape);
            for k in 0..n {
                if rng.random::<f64>() < *p {
                    x.set_index(k, true);
                }
            }
            Ok(x)
        }
        Init::SingleSite(s) => {
            if s.dim() != shape.dim() {
                return Err(Error::ShapeMismatch(format!(
                    "site {s} does not match dimension {}",
                    shape.dim()
                )));
            }
            if let Some(sides) = shape.sides() {
                if s.0.iter().zip(sides).any(|(&c, &l)| c < 0 || c >= l as i64) {
                    return Err(Error::Config(format!("site {s} is outside the torus")));
                }
            }
            let mut x = SpinConfig::zeros(shape);
            x.set(s, true);
            Ok(x)
        }
        Init::Interval { a, b } => {
            if shape.dim() != 1 {
                return Err(Error::Config("intervals need d = 1".into()));
            }
            if a > b {
                return Err(Error::Config(format!("empty interval {a}..={b}")));
            }
            if let Some(sides) = shape.sides() {
                if *a < 0 || *b >= sides[0] as i64 {
                    return Err(Error::Config(format!(
                        "interval {a}..={b} is outside Z/{}",
                        sides[0]
                    )));
                }
            }
            let mut x = SpinConfig::zeros(shape);
            for i in *a..=*b {
                x.set(&Site::d1(i), true);
            }
            Ok(x)
        }
    }
}

/// Summary statistics of a configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConfigStats {
    /// `|x|`.
    pub ones: usize,
    /// Ordered nearest-neighbour pairs with unequal spins (each wall counts twice).
    pub gradient: usize,
    /// `x^T y` when a second configuration is supplied.
    pub parity: Option<u8>,
}

pub fn config_statistics(x: &SpinConfig, y: Option<&SpinConfig>) -> Result<ConfigStats> {
    let parity = match y {
        Some(y) => Some(parity(x, y)?),
        None => None,
    };
    Ok(ConfigStats {
        ones: x.ones(),
        gradient: gradient(x),
        parity,
    })
}

/// `|∇x|`: ordered pairs `(i, j)` with `|i - j| = 1` and `x(i) != x(j)`.
pub fn gradient(x: &SpinConfig) -> usize {
    let d = x.shape().dim();
    let mut directed = 0usize;
    // Every unequal ordered pair has exactly one occupied endpoint, so count
    // (occupied i, empty neighbour j) and double it.
    for s in x.occupied() {
        for k in 0..d {
            for step in [-1i64, 1] {
                let mut n = s.clone();
                n.0[k] += step;
                if !x.get(&n) {
                    directed += 1;
                }
            }
        }
    }
    2 * directed
}

/// `x^T y = Σ_i x(i) y(i) mod 2`.
pub fn parity(x: &SpinConfig, y: &SpinConfig) -> Result<u8> {
    if x.shape() != y.shape() {
        return Err(Error::ShapeMismatch(format!(
            "parity of configurations on {:?} and {:?}",
            x.shape(),
            y.shape()
        )));
    }
    let overlap = match (&x.occ, &y.occ) {
        (Occupancy::Dense { words: a, .. }, Occupancy::Dense { words: b, .. }) => a
            .iter()
            .zip(b)
            .map(|(p, q)| (p & q).count_ones() as usize)
            .sum::<usize>(),
        (Occupancy::Sparse(a), Occupancy::Sparse(b)) => a.intersection(b).count(),
        _ => unreachable!("equal shapes imply equal backends"),
    };
    Ok((overlap % 2) as u8)
}

/// Domain-wall map `y(i) = 1{x(i) != x(i+1)}` of a one-dimensional torus configuration.
pub fn interface_map(x: &SpinConfig) -> Result<SpinConfig> {
    if x.shape().dim() != 1 {
        return Err(Error::Unsupported("interface map needs d = 1".into()));
    }
    let n = x
        .shape()
        .n_sites()
        .ok_or_else(|| Error::Unsupported("interface map needs the torus backend".into()))?;
    let mut y = SpinConfig::zeros(x.shape());
    for i in 0..n {
        if x.get_index(i) != x.get_index((i + 1) % n) {
            y.set_index(i, true);
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ring(n: usize) -> LatticeShape {
        LatticeShape::ring(n).unwrap()
    }

    #[test]
    fn explicit_pattern() {
        let x = make_config(&ring(5), &Init::Pattern("00110".into())).unwrap();
        assert_eq!(x.ones(), 2);
        assert!(x.get(&Site::d1(2)) && x.get(&Site::d1(3)));
        assert!(!x.get(&Site::d1(0)));
        assert_eq!(x.state_index(), Some(0b01100));
    }

    #[test]
    fn all_one_2d() {
        let shape = LatticeShape::torus(vec![4, 4]).unwrap();
        let x = make_config(&shape, &Init::AllOne).unwrap();
        assert_eq!(x.ones(), 16);
    }

    #[test]
    fn product_density_and_reproducibility() {
        let shape = ring(10_000);
        let x = make_config(&shape, &Init::Product { p: 0.5, seed: 7 }).unwrap();
        let y = make_config(&shape, &Init::Product { p: 0.5, seed: 7 }).unwrap();
        assert_eq!(x, y);
        let density = x.ones() as f64 / 10_000.0;
        assert!((density - 0.5).abs() <= 0.02, "density {density}");
    }

    #[test]
    fn init_errors() {
        assert!(make_config(&ring(5), &Init::Pattern("0011".into())).is_err());
        assert!(make_config(&ring(5), &Init::Product { p: 1.5, seed: 1 }).is_err());
        assert!(make_config(&ring(5), &Init::Interval { a: 3, b: 5 }).is_err());
        let inf = LatticeShape::infinite(1).unwrap();
        assert!(make_config(&inf, &Init::AllOne).is_err());
        let x = make_config(&inf, &Init::Interval { a: -2, b: 2 }).unwrap();
        assert_eq!(x.ones(), 5);
    }

    #[test]
    fn statistics_by_hand() {
        let x = SpinConfig::from_bits(&ring(5), "00110").unwrap();
        let y = SpinConfig::from_bits(&ring(5), "01010").unwrap();
        let s = config_statistics(&x, Some(&y)).unwrap();
        assert_eq!(s.ones, 2);
        assert_eq!(s.gradient, 4);
        assert_eq!(s.parity, Some(1));
        let z = SpinConfig::zeros(&ring(5));
        let s = config_statistics(&z, Some(&y)).unwrap();
        assert_eq!((s.ones, s.gradient, s.parity), (0, 0, Some(0)));
    }

    #[test]
    fn sparse_gradient_and_parity() {
        let x = SpinConfig::sparse_1d([0, 1, 5]);
        let y = SpinConfig::sparse_1d([1, 5, 9]);
        assert_eq!(gradient(&x), 8);
        assert_eq!(parity(&x, &y).unwrap(), 0);
        assert!(parity(&x, &SpinConfig::zeros(&ring(5))).is_err());
    }

    #[test]
    fn interface_by_hand() {
        let x = SpinConfig::from_bits(&ring(5), "00110").unwrap();
        let y = interface_map(&x).unwrap();
        assert_eq!(y.to_bit_string().unwrap(), "01010");
        let c = SpinConfig::from_bits(&ring(5), "11111").unwrap();
        assert!(interface_map(&c).unwrap().is_zero());
        let two_d = SpinConfig::zeros(&LatticeShape::torus(vec![3, 3]).unwrap());
        assert!(interface_map(&two_d).is_err());
    }

    #[test]
    fn index_roundtrip_2d() {
        let shape = LatticeShape::torus(vec![3, 4]).unwrap();
        for k in 0..12 {
            assert_eq!(shape.index_of(&shape.site_of(k)), k);
        }
        assert_eq!(shape.index_of(&Site::new(vec![-1, 5])), 2 * 4 + 1);
    }

    proptest! {
        #[test]
        fn interface_is_even(bits in proptest::collection::vec(any::<bool>(), 1..80)) {
            let shape = ring(bits.len());
            let bytes: Vec<u8> = bits.iter().map(|&b| b as u8).collect();
            let x = SpinConfig::from_bytes(&shape, &bytes).unwrap();
            prop_assert_eq!(interface_map(&x).unwrap().ones() % 2, 0);
        }

        #[test]
        fn gradient_flip_symmetric(bits in proptest::collection::vec(any::<bool>(), 9..=9)) {
            let shape = LatticeShape::torus(vec![3, 3]).unwrap();
            let bytes: Vec<u8> = bits.iter().map(|&b| b as u8).collect();
            let x = SpinConfig::from_bytes(&shape, &bytes).unwrap();
            prop_assert_eq!(gradient(&x), gradient(&x.flipped().unwrap()));
        }

        #[test]
        fn parity_symmetric(a in any::<u16>(), b in any::<u16>()) {
            let shape = ring(16);
            let x = SpinConfig::from_state_index(&shape, a as u64).unwrap();
            let y = SpinConfig::from_state_index(&shape, b as u64).unwrap();
            prop_assert_eq!(parity(&x, &y).unwrap(), parity(&y, &x).unwrap());
            prop_assert_eq!(parity(&x, &SpinConfig::zeros(&shape)).unwrap(), 0);
            prop_assert_eq!(parity(&x, &y).unwrap() as u32, (a & b).count_ones() % 2);
        }
    }
}
