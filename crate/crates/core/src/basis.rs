//! Chain geometry and magnon-sector configuration spaces.
//!
//! Sites carry physical labels `-L..=L`. Internally every site is an offset
//! `0..L_t` with `offset = label + L`; only offsets are used for indexing.

use std::fmt;
use std::ops::RangeInclusive;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Open => f.write_str("open"),
            Boundary::Periodic => f.write_str("periodic"),
        }
    }
}

/// A chain of `2L + 1` sites labelled `-L..=L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChainGeometry {
    half_length: usize,
    boundary: Boundary,
}

impl ChainGeometry {
    pub fn new(half_length: usize, boundary: Boundary) -> Result<Self> {
        if half_length < 1 {
            return Err(Error::InvalidGeometry(
                "half length L must be at least 1".into(),
            ));
        }
        Ok(Self {
            half_length,
            boundary,
        })
    }

    /// Builds a geometry from the total number of sites, which must be odd.
    pub fn with_total_sites(total_sites: usize, boundary: Boundary) -> Result<Self> {
        if total_sites % 2 == 0 {
            return Err(Error::InvalidGeometry(format!(
                "total chain length must be odd (got {total_sites})"
            )));
        }
        Self::new(total_sites / 2, boundary)
    }

    pub fn half_length(&self) -> usize {
        self.half_length
    }

    pub fn total_sites(&self) -> usize {
        2 * self.half_length + 1
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn min_site(&self) -> i64 {
        -(self.half_length as i64)
    }

    pub fn max_site(&self) -> i64 {
        self.half_length as i64
    }

    pub fn sites(&self) -> RangeInclusive<i64> {
        self.min_site()..=self.max_site()
    }

    pub fn contains(&self, site: i64) -> bool {
        self.sites().contains(&site)
    }

    pub fn offset(&self, site: i64) -> Result<usize> {
        if !self.contains(site) {
            return Err(Error::SiteOutOfRange {
                site,
                min: self.min_site(),
                max: self.max_site(),
            });
        }
        Ok((site + self.half_length as i64) as usize)
    }

    pub fn label(&self, offset: usize) -> i64 {
        offset as i64 - self.half_length as i64
    }

    /// Nearest-neighbour bonds as offset pairs `(i, j)`; the periodic wrap
    /// bond is `(L_t - 1, 0)`.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let n = self.total_sites();
        let mut bonds: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        if self.boundary == Boundary::Periodic {
            bonds.push((n - 1, 0));
        }
        bonds
    }

    /// Left and right neighbours of an offset, if they exist.
    pub fn neighbors(&self, offset: usize) -> [Option<usize>; 2] {
        let n = self.total_sites();
        let periodic = self.boundary == Boundary::Periodic;
        let left = if offset > 0 {
            Some(offset - 1)
        } else if periodic {
            Some(n - 1)
        } else {
            None
        };
        let right = if offset + 1 < n {
            Some(offset + 1)
        } else if periodic {
            Some(0)
        } else {
            None
        };
        [left, right]
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        hi == lo + 1
            || (self.boundary == Boundary::Periodic && lo == 0 && hi + 1 == self.total_sites())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sector {
    OneMagnon,
    TwoMagnon,
    /// Adjacent magnon pairs `(m, m + 1)` treated as a single composite particle.
    BoundPair,
}

impl Sector {
    pub fn magnon_count(self) -> usize {
        match self {
            Sector::OneMagnon => 1,
            Sector::TwoMagnon | Sector::BoundPair => 2,
        }
    }
}

/// Two magnons at physical sites `l1 < l2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MagnonPair {
    l1: i64,
    l2: i64,
}

impl MagnonPair {
    pub fn new(l1: i64, l2: i64) -> Result<Self> {
        if l1 >= l2 {
            return Err(Error::UnorderedPair { l1, l2 });
        }
        Ok(Self { l1, l2 })
    }

    pub fn l1(&self) -> i64 {
        self.l1
    }

    pub fn l2(&self) -> i64 {
        self.l2
    }
}

impl fmt::Display for MagnonPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.l1, self.l2)
    }
}

/// Occupied site offsets of one basis configuration, sorted ascending.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Configuration {
    sites: [usize; 2],
    count: u8,
}

impl Configuration {
    fn single(site: usize) -> Self {
        Self {
            sites: [site, 0],
            count: 1,
        }
    }

    fn pair(a: usize, b: usize) -> Self {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        Self {
            sites: [a, b],
            count: 2,
        }
    }

    pub fn offsets(&self) -> &[usize] {
        &self.sites[..self.count as usize]
    }

    pub fn contains(&self, offset: usize) -> bool {
        self.offsets().contains(&offset)
    }
}

/// Enumerated configurations of one magnon sector in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorBasis {
    geometry: ChainGeometry,
    sector: Sector,
    configurations: Vec<Configuration>,
}

impl SectorBasis {
    pub fn new(geometry: ChainGeometry, sector: Sector) -> Self {
        let n = geometry.total_sites();
        let configurations = match sector {
            Sector::OneMagnon => (0..n).map(Configuration::single).collect(),
            Sector::TwoMagnon => (0..n)
                .flat_map(|a| (a + 1..n).map(move |b| Configuration::pair(a, b)))
                .collect(),
            Sector::BoundPair => {
                let count = match geometry.boundary() {
                    Boundary::Open => n - 1,
                    Boundary::Periodic => n,
                };
                (0..count)
                    .map(|m| Configuration::pair(m, (m + 1) % n))
                    .collect()
            }
        };
        Self {
            geometry,
            sector,
            configurations,
        }
    }

    pub fn geometry(&self) -> &ChainGeometry {
        &self.geometry
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn dim(&self) -> usize {
        self.configurations.len()
    }

    pub fn configurations(&self) -> &[Configuration] {
        &self.configurations
    }

    pub fn configuration(&self, index: usize) -> Result<Configuration> {
        self.configurations
            .get(index)
            .copied()
            .ok_or(Error::IndexOutOfRange {
                index,
                dim: self.dim(),
            })
    }

    /// Index of the configuration occupying exactly `offsets` (any order).
    pub fn index_of_offsets(&self, offsets: &[usize]) -> Option<usize> {
        let n = self.geometry.total_sites();
        if offsets.iter().any(|&o| o >= n) {
            return None;
        }
        match (self.sector, offsets) {
            (Sector::OneMagnon, &[a]) => Some(a),
            (Sector::TwoMagnon, &[a, b]) if a != b => {
                let (a, b) = if a < b { (a, b) } else { (b, a) };
                Some(a * (2 * n - a - 1) / 2 + (b - a - 1))
            }
            (Sector::BoundPair, &[a, b]) => {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                if hi == lo + 1 {
                    Some(lo)
                } else if self.geometry.boundary() == Boundary::Periodic
                    && lo == 0
                    && hi == n - 1
                {
                    Some(n - 1)
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    fn offsets_of_sites(&self, sites: &[i64]) -> Result<Vec<usize>> {
        sites.iter().map(|&l| self.geometry.offset(l)).collect()
    }

    /// Index of a two-magnon (or bound-pair) configuration.
    pub fn index_of(&self, pair: MagnonPair) -> Result<usize> {
        if self.sector == Sector::OneMagnon {
            return Err(Error::WrongSector(
                "pair lookup requires a two-magnon or bound-pair basis".into(),
            ));
        }
        let offsets = self.offsets_of_sites(&[pair.l1, pair.l2])?;
        self.index_of_offsets(&offsets).ok_or_else(|| {
            Error::WrongSector(format!("pair {pair} is not a bound-pair configuration"))
        })
    }

    pub fn pair_of(&self, index: usize) -> Result<MagnonPair> {
        let config = self.configuration(index)?;
        match config.offsets() {
            &[a, b] => MagnonPair::new(self.geometry.label(a), self.geometry.label(b)),
            _ => Err(Error::WrongSector(
                "pair lookup requires a two-magnon or bound-pair basis".into(),
            )),
        }
    }

    /// Index of the single-magnon configuration at physical site `site`.
    pub fn index_of_site(&self, site: i64) -> Result<usize> {
        if self.sector != Sector::OneMagnon {
            return Err(Error::WrongSector(
                "site lookup requires a one-magnon basis".into(),
            ));
        }
        self.geometry.offset(site)
    }

    /// Index of the bound pair whose left site is `m` (the pair `(m, m+1)`).
    pub fn index_of_bound_pair(&self, m: i64) -> Result<usize> {
        if self.sector != Sector::BoundPair {
            return Err(Error::WrongSector(
                "left-site lookup requires a bound-pair basis".into(),
            ));
        }
        let offset = self.geometry.offset(m)?;
        if offset >= self.dim() {
            return Err(Error::SiteOutOfRange {
                site: m,
                min: self.geometry.min_site(),
                max: self.geometry.label(self.dim() - 1),
            });
        }
        Ok(offset)
    }

    /// Physical label of the left site of bound pair `index`.
    pub fn bound_pair_left_site(&self, index: usize) -> Result<i64> {
        if self.sector != Sector::BoundPair {
            return Err(Error::WrongSector(
                "left-site lookup requires a bound-pair basis".into(),
            ));
        }
        self.configuration(index)?;
        Ok(self.geometry.label(index))
    }
}

/// Enumerates the configurations of `sector` on `geometry`.
pub fn enumerate_basis(geometry: ChainGeometry, sector: Sector) -> SectorBasis {
    SectorBasis::new(geometry, sector)
}

const NORM_TOLERANCE: f64 = 1e-12;

/// A normalized complex amplitude vector over a sector basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorState {
    basis: Arc<SectorBasis>,
    amplitudes: Vec<Complex64>,
}

impl SectorState {
    pub fn new(basis: Arc<SectorBasis>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                actual: amplitudes.len(),
            });
        }
        let state = Self { basis, amplitudes };
        let norm_sqr = state.norm_sqr();
        if (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "state is not normalized: squared norm {norm_sqr}"
            )));
        }
        Ok(state)
    }

    /// Wraps propagated amplitudes without re-checking the norm.
    pub(crate) fn from_evolved(basis: Arc<SectorBasis>, amplitudes: Vec<Complex64>) -> Self {
        debug_assert_eq!(basis.dim(), amplitudes.len());
        Self { basis, amplitudes }
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.amplitudes.iter().map(|a| a.norm_sqr())
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &SectorState) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Euclidean distance between two amplitude vectors.
    pub fn distance(&self, other: &SectorState) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }
}

/// Product state with magnons at the given physical sites.
///
/// For the bound-pair sector the two positions must form an adjacent pair.
pub fn make_initial_state(basis: &Arc<SectorBasis>, positions: &[i64]) -> Result<SectorState> {
    let expected = basis.sector().magnon_count();
    if positions.len() != expected {
        return Err(Error::InvalidArgument(format!(
            "{:?} sector needs {expected} positions, got {}",
            basis.sector(),
            positions.len()
        )));
    }
    for (i, &p) in positions.iter().enumerate() {
        if positions[..i].contains(&p) {
            return Err(Error::DoubleOccupancy(p));
        }
    }
    let offsets = basis.offsets_of_sites(positions)?;
    let index = basis.index_of_offsets(&offsets).ok_or_else(|| {
        Error::WrongSector(format!(
            "positions {positions:?} do not form a {:?} configuration",
            basis.sector()
        ))
    })?;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.dim()];
    amplitudes[index] = Complex64::new(1.0, 0.0);
    SectorState::new(Arc::clone(basis), amplitudes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn open(total: usize) -> ChainGeometry {
        ChainGeometry::with_total_sites(total, Boundary::Open).unwrap()
    }

    #[test]
    fn dimensions_follow_closed_forms() {
        let g5 = open(5);
        assert_eq!(SectorBasis::new(g5, Sector::TwoMagnon).dim(), 10);
        let g101 = open(101);
        assert_eq!(SectorBasis::new(g101, Sector::TwoMagnon).dim(), 5050);
        assert_eq!(SectorBasis::new(g101, Sector::OneMagnon).dim(), 101);
        assert_eq!(SectorBasis::new(g101, Sector::BoundPair).dim(), 100);
        let ring = ChainGeometry::with_total_sites(101, Boundary::Periodic).unwrap();
        assert_eq!(SectorBasis::new(ring, Sector::BoundPair).dim(), 101);
    }

    #[test]
    fn rejects_degenerate_and_even_chains() {
        assert!(ChainGeometry::new(0, Boundary::Open).is_err());
        assert!(ChainGeometry::with_total_sites(1, Boundary::Open).is_err());
        assert!(ChainGeometry::with_total_sites(4, Boundary::Open).is_err());
        let g = open(7);
        assert_eq!(g.sites().collect::<Vec<_>>(), vec![-3, -2, -1, 0, 1, 2, 3]);
    }

    #[test]
    fn lexicographic_endpoints() {
        let basis = SectorBasis::new(open(5), Sector::TwoMagnon);
        assert_eq!(basis.index_of(MagnonPair::new(-2, -1).unwrap()).unwrap(), 0);
        assert_eq!(basis.index_of(MagnonPair::new(1, 2).unwrap()).unwrap(), 9);
        assert_eq!(basis.pair_of(1).unwrap(), MagnonPair::new(-2, 0).unwrap());
    }

    #[test]
    fn pair_lookup_errors() {
        let basis = SectorBasis::new(open(5), Sector::TwoMagnon);
        assert!(MagnonPair::new(1, 1).is_err());
        assert!(MagnonPair::new(2, 1).is_err());
        assert!(matches!(
            basis.index_of(MagnonPair::new(-3, 0).unwrap()),
            Err(Error::SiteOutOfRange { .. })
        ));
        assert!(matches!(
            basis.pair_of(10),
            Err(Error::IndexOutOfRange { index: 10, dim: 10 })
        ));
    }

    #[test]
    fn initial_state_is_a_unit_vector() {
        let basis = Arc::new(SectorBasis::new(open(5), Sector::TwoMagnon));
        let state = make_initial_state(&basis, &[-1, 0]).unwrap();
        let hot = basis.index_of(MagnonPair::new(-1, 0).unwrap()).unwrap();
        for (i, a) in state.amplitudes().iter().enumerate() {
            let expected = if i == hot { 1.0 } else { 0.0 };
            assert_eq!(*a, Complex64::new(expected, 0.0));
        }
        assert_eq!(state.norm_sqr(), 1.0);
        // Position order does not matter.
        assert_eq!(make_initial_state(&basis, &[0, -1]).unwrap(), state);
    }

    #[test]
    fn initial_state_errors() {
        let basis = Arc::new(SectorBasis::new(open(5), Sector::TwoMagnon));
        assert_eq!(
            make_initial_state(&basis, &[0, 0]),
            Err(Error::DoubleOccupancy(0))
        );
        assert!(make_initial_state(&basis, &[0]).is_err());
        assert!(make_initial_state(&basis, &[0, 3]).is_err());

        let pairs = Arc::new(SectorBasis::new(open(5), Sector::BoundPair));
        assert!(make_initial_state(&pairs, &[-1, 0]).is_ok());
        assert!(make_initial_state(&pairs, &[-1, 1]).is_err());
    }

    #[test]
    fn bound_pair_wraps_on_ring() {
        let ring = ChainGeometry::with_total_sites(5, Boundary::Periodic).unwrap();
        let basis = Arc::new(SectorBasis::new(ring, Sector::BoundPair));
        assert_eq!(basis.index_of_bound_pair(2).unwrap(), 4);
        assert_eq!(basis.pair_of(4).unwrap(), MagnonPair::new(-2, 2).unwrap());
        assert!(make_initial_state(&basis, &[2, -2]).is_ok());

        let line = Arc::new(SectorBasis::new(open(5), Sector::BoundPair));
        assert!(line.index_of_bound_pair(2).is_err());
    }

    #[test]
    fn state_constructor_checks_norm_and_length() {
        let basis = Arc::new(SectorBasis::new(open(3), Sector::OneMagnon));
        let half = Complex64::new(0.5_f64.sqrt(), 0.0);
        let zero = Complex64::new(0.0, 0.0);
        assert!(SectorState::new(basis.clone(), vec![half, half, zero]).is_ok());
        assert!(SectorState::new(basis.clone(), vec![half, zero, zero]).is_err());
        assert!(SectorState::new(basis, vec![half, half]).is_err());
    }

    proptest! {
        #[test]
        fn index_and_configuration_are_inverse(half in 1usize..6, periodic in any::<bool>()) {
            let boundary = if periodic { Boundary::Periodic } else { Boundary::Open };
            let geometry = ChainGeometry::new(half, boundary).unwrap();
            for sector in [Sector::OneMagnon, Sector::TwoMagnon, Sector::BoundPair] {
                let basis = SectorBasis::new(geometry, sector);
                for (i, config) in basis.configurations().iter().enumerate() {
                    prop_assert_eq!(basis.index_of_offsets(config.offsets()), Some(i));
                    if sector != Sector::OneMagnon {
                        let pair = basis.pair_of(i).unwrap();
                        prop_assert_eq!(basis.index_of(pair).unwrap(), i);
                    }
                }
            }
        }

        #[test]
        fn dimension_matches_counts(half in 1usize..51) {
            let geometry = ChainGeometry::new(half, Boundary::Open).unwrap();
            let n = geometry.total_sites();
            prop_assert_eq!(SectorBasis::new(geometry, Sector::OneMagnon).dim(), n);
            prop_assert_eq!(SectorBasis::new(geometry, Sector::TwoMagnon).dim(), n * (n - 1) / 2);
            prop_assert_eq!(SectorBasis::new(geometry, Sector::BoundPair).dim(), n - 1);
        }
    }
}
