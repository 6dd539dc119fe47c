//! Neuron placement in integer 3D space, pairwise distances, stimulus-pair
//! selection and proximity orderings.
//!
//! Indices are 0-based inside the crate. Anything that reaches a report, a
//! file or an error message is shifted to 1-based.

use std::collections::HashMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whole-geometry redraws before falling back to lattice sampling.
pub const MAX_GEOMETRY_ATTEMPTS: usize = 1000;

pub type Point = [i32; 3];

/// Inclusive coordinate bounds applied to all three axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoordRange {
    pub lo: i32,
    pub hi: i32,
}

impl CoordRange {
    pub const fn new(lo: i32, hi: i32) -> Self {
        Self { lo, hi }
    }

    /// Number of lattice points per axis.
    pub fn side(&self) -> u64 {
        if self.hi < self.lo {
            0
        } else {
            (self.hi as i64 - self.lo as i64 + 1) as u64
        }
    }

    pub fn lattice_size(&self) -> u64 {
        self.side().saturating_pow(3)
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.iter().all(|c| (self.lo..=self.hi).contains(c))
    }
}

impl Default for CoordRange {
    fn default() -> Self {
        Self::new(0, 9)
    }
}

impl std::str::FromStr for CoordRange {
    type Err = String;

    /// Parses `lo:hi`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (lo, hi) = s
            .split_once(':')
            .ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
        let lo: i32 = lo
            .trim()
            .parse()
            .map_err(|e| format!("bad lower bound: {e}"))?;
        let hi: i32 = hi
            .trim()
            .parse()
            .map_err(|e| format!("bad upper bound: {e}"))?;
        if hi < lo {
            return Err(format!("empty range {lo}:{hi}"));
        }
        Ok(Self { lo, hi })
    }
}

/// Validated neuron positions. No two neurons share a point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GeometryFile", into = "GeometryFile")]
pub struct NetworkGeometry {
    coords: Vec<Point>,
}

/// On-disk form: `{"n": 20, "coords": [[x, y, z], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryFile {
    pub n: usize,
    pub coords: Vec<Point>,
}

impl TryFrom<GeometryFile> for NetworkGeometry {
    type Error = Error;

    fn try_from(file: GeometryFile) -> Result<Self> {
        if file.coords.len() != file.n {
            return Err(Error::SizeMismatch {
                expected: file.n,
                found: file.coords.len(),
            });
        }
        load_geometry(file.coords)
    }
}

impl From<NetworkGeometry> for GeometryFile {
    fn from(g: NetworkGeometry) -> Self {
        Self {
            n: g.coords.len(),
            coords: g.coords,
        }
    }
}

impl NetworkGeometry {
    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    pub fn axis(&self, axis: usize) -> Vec<i32> {
        self.coords.iter().map(|p| p[axis]).collect()
    }
}

/// Draws `n` neurons uniformly from the lattice spanned by `range`.
///
/// A draw containing a co-location is discarded whole and redrawn. When
/// every redraw collides (dense lattices) but the lattice can still hold `n`
/// distinct points, the geometry is drawn without replacement, which samples
/// the same conditional distribution directly.
pub fn generate_geometry(seed: u64, n: usize, range: CoordRange) -> Result<NetworkGeometry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_geometry_with(&mut rng, n, range)
}

pub fn generate_geometry_with<R: Rng>(
    rng: &mut R,
    n: usize,
    range: CoordRange,
) -> Result<NetworkGeometry> {
    if n == 0 {
        return Err(Error::Invalid("geometry needs at least one neuron".into()));
    }
    let lattice = range.lattice_size();
    if lattice == 0 {
        return Err(Error::Invalid(format!(
            "empty coordinate range {}:{}",
            range.lo, range.hi
        )));
    }

    for _ in 0..MAX_GEOMETRY_ATTEMPTS {
        let xs: Vec<i32> = (0..n).map(|_| rng.gen_range(range.lo..=range.hi)).collect();
        let ys: Vec<i32> = (0..n).map(|_| rng.gen_range(range.lo..=range.hi)).collect();
        let zs: Vec<i32> = (0..n).map(|_| rng.gen_range(range.lo..=range.hi)).collect();
        let coords: Vec<Point> = (0..n).map(|i| [xs[i], ys[i], zs[i]]).collect();
        if first_colocation(&coords).is_none() {
            return Ok(NetworkGeometry { coords });
        }
    }

    if lattice >= n as u64 {
        let side = range.side();
        let coords = index::sample(rng, lattice as usize, n)
            .into_iter()
            .map(|k| {
                let k = k as u64;
                [
                    range.lo + (k % side) as i32,
                    range.lo + ((k / side) % side) as i32,
                    range.lo + (k / (side * side)) as i32,
                ]
            })
            .collect();
        return Ok(NetworkGeometry { coords });
    }

    Err(Error::RetryExhausted {
        attempts: MAX_GEOMETRY_ATTEMPTS,
        n,
        lattice,
    })
}

/// Lowest (by second index) co-located pair, 0-based.
fn first_colocation(coords: &[Point]) -> Option<(usize, usize)> {
    let mut seen: HashMap<Point, usize> = HashMap::with_capacity(coords.len());
    for (i, p) in coords.iter().enumerate() {
        if let Some(&j) = seen.get(p) {
            return Some((j, i));
        }
        seen.insert(*p, i);
    }
    None
}

/// Wraps externally supplied coordinates, rejecting co-located neurons.
pub fn load_geometry(coords: Vec<Point>) -> Result<NetworkGeometry> {
    if coords.is_empty() {
        return Err(Error::Invalid("geometry needs at least one neuron".into()));
    }
    if let Some((a, b)) = first_colocation(&coords) {
        return Err(Error::Colocation {
            first: a + 1,
            second: b + 1,
        });
    }
    Ok(NetworkGeometry { coords })
}

/// Symmetric matrix of pairwise distances.
///
/// Entries are kept as exact squared integers so that ties compare exactly;
/// the Euclidean value is derived on demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    squared: Vec<i64>,
}

impl DistanceMatrix {
    /// Builds a matrix from raw squared distances in row-major order.
    pub fn from_squared(n: usize, squared: Vec<i64>) -> Result<Self> {
        if squared.len() != n * n {
            return Err(Error::SizeMismatch {
                expected: n * n,
                found: squared.len(),
            });
        }
        Ok(Self { n, squared })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn squared(&self, i: usize, j: usize) -> i64 {
        self.squared[i * self.n + j]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        (self.squared(i, j) as f64).sqrt()
    }

    pub fn row_squared(&self, i: usize) -> &[i64] {
        &self.squared[i * self.n..(i + 1) * self.n]
    }
}

pub fn distance_matrix(geom: &NetworkGeometry) -> DistanceMatrix {
    let n = geom.n();
    let mut squared = vec![0i64; n * n];
    // upper triangle, then mirror
    for i in 0..n {
        for j in (i + 1)..n {
            let a = geom.coords[i];
            let b = geom.coords[j];
            let d2: i64 = (0..3).map(|k| (a[k] as i64 - b[k] as i64).pow(2)).sum();
            squared[i * n + j] = d2;
            squared[j * n + i] = d2;
        }
    }
    DistanceMatrix { n, squared }
}

/// Result of scanning a distance matrix for off-diagonal zeros.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ColocationReport {
    /// Co-located pairs, 1-based, `first < second`.
    pub pairs: Vec<(usize, usize)>,
}

impl ColocationReport {
    pub fn is_ok(&self) -> bool {
        self.pairs.is_empty()
    }
}

pub fn validate_no_colocation(d: &DistanceMatrix) -> ColocationReport {
    let mut pairs = Vec::new();
    for i in 0..d.n() {
        for j in (i + 1)..d.n() {
            if d.squared(i, j) == 0 || d.squared(j, i) == 0 {
                pairs.push((i + 1, j + 1));
            }
        }
    }
    ColocationReport { pairs }
}

/// The two stimulus sources: first occurrence of max x, then of min x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StimulusPair {
    pub first: usize,
    pub second: usize,
}

impl StimulusPair {
    pub fn is_degenerate(&self) -> bool {
        self.first == self.second
    }

    /// 1-based labels.
    pub fn labels(&self) -> (usize, usize) {
        (self.first + 1, self.second + 1)
    }
}

pub fn select_stimulus_pair(geom: &NetworkGeometry) -> StimulusPair {
    let xs = geom.axis(0);
    let max = xs.iter().copied().max().unwrap_or_default();
    let min = xs.iter().copied().min().unwrap_or_default();
    let first = xs.iter().position(|&x| x == max).unwrap_or(0);
    let second = xs.iter().position(|&x| x == min).unwrap_or(0);
    let pair = StimulusPair { first, second };
    if pair.is_degenerate() {
        log::warn!(
            "degenerate stimulus pair: every neuron has x = {max}; neuron {} used twice",
            first + 1
        );
    }
    pair
}

/// A bijection between sequence positions and neuron indices.
///
/// `order[p]` is the neuron activated at position `p`; `inverse[k]` is the
/// position of neuron `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    order: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            order: (0..n).collect(),
            inverse: (0..n).collect(),
        }
    }

    /// Validates that `order` is a bijection on `0..order.len()`.
    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut inverse = vec![usize::MAX; n];
        for (pos, &k) in order.iter().enumerate() {
            if k >= n || inverse[k] != usize::MAX {
                return Err(Error::Invalid(format!(
                    "order is not a permutation of 1..={n} (entry {} at position {})",
                    k + 1,
                    pos + 1
                )));
            }
            inverse[k] = pos;
        }
        Ok(Self { order, inverse })
    }

    /// Same as [`Permutation::from_order`] for 1-based neuron labels.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let order = labels
            .iter()
            .map(|&l| {
                l.checked_sub(1)
                    .ok_or_else(|| Error::Invalid("neuron labels are 1-based".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_order(order)
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn start(&self) -> usize {
        self.order[0]
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn neuron_at(&self, position: usize) -> usize {
        self.order[position]
    }

    pub fn position_of(&self, neuron: usize) -> usize {
        self.inverse[neuron]
    }

    pub fn labels(&self) -> Vec<usize> {
        self.order.iter().map(|k| k + 1).collect()
    }

    pub fn inverse(&self) -> Permutation {
        Permutation {
            order: self.inverse.clone(),
            inverse: self.order.clone(),
        }
    }

    /// Network coordinates to sequence coordinates: `out[p] = v[order[p]]`.
    pub fn apply<T: Copy>(&self, v: &[T]) -> Vec<T> {
        self.order.iter().map(|&k| v[k]).collect()
    }

    /// Sequence coordinates back to network coordinates.
    pub fn unapply<T: Copy>(&self, v: &[T]) -> Vec<T> {
        self.inverse.iter().map(|&p| v[p]).collect()
    }
}

/// Orders every neuron by increasing distance from `start`; equal distances
/// keep ascending neuron index.
pub fn proximity_permutation(d: &DistanceMatrix, start: usize) -> Result<Permutation> {
    if start >= d.n() {
        return Err(Error::Invalid(format!(
            "start neuron {} outside 1..={}",
            start + 1,
            d.n()
        )));
    }
    let row = d.row_squared(start);
    let mut order: Vec<usize> = (0..d.n()).collect();
    order.sort_by_key(|&k| (k != start, row[k], k));
    Permutation::from_order(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::reference;

    #[test]
    fn generation_is_deterministic() {
        let a = generate_geometry(17, 20, CoordRange::new(0, 9)).unwrap();
        let b = generate_geometry(17, 20, CoordRange::new(0, 9)).unwrap();
        assert_eq!(a, b);
        assert!(a.coords().iter().all(|p| CoordRange::new(0, 9).contains(p)));
        let c = generate_geometry(18, 20, CoordRange::new(0, 9)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_point_lattice_exhausts_retries() {
        let err = generate_geometry(3, 2, CoordRange::new(0, 0)).unwrap_err();
        assert!(matches!(
            err,
            Error::RetryExhausted {
                n: 2,
                lattice: 1,
                ..
            }
        ));
    }

    #[test]
    fn full_lattice_is_a_permutation_of_points() {
        let g = generate_geometry(5, 1000, CoordRange::new(0, 9)).unwrap();
        let distinct: std::collections::HashSet<_> = g.coords().iter().collect();
        assert_eq!(distinct.len(), 1000);
        assert!(validate_no_colocation(&distance_matrix(&g)).is_ok());
    }

    #[test]
    fn load_rejects_colocation() {
        let err = load_geometry(vec![[0, 0, 0], [0, 0, 0]]).unwrap_err();
        assert_eq!(
            err,
            Error::Colocation {
                first: 1,
                second: 2
            }
        );
        let one = load_geometry(vec![[4, 7, 6]]).unwrap();
        assert_eq!(one.n(), 1);
        assert!(validate_no_colocation(&distance_matrix(&one)).is_ok());
    }

    #[test]
    fn reference_distances() {
        let g = reference::geometry();
        let d = distance_matrix(&g);
        // neuron 2 = (9,3,0), neuron 19 = (8,6,1): 1 + 9 + 1
        assert_eq!(d.squared(1, 18), 11);
        assert!((d.distance(1, 18) - 11f64.sqrt()).abs() < 1e-12);
        // neuron 3 = (1,5,0), neuron 18 = (2,4,2): 1 + 1 + 4
        assert_eq!(d.squared(2, 17), 6);
        for i in 0..g.n() {
            assert_eq!(d.squared(i, i), 0);
            for j in 0..g.n() {
                assert_eq!(d.squared(i, j), d.squared(j, i));
            }
        }
        assert!(validate_no_colocation(&d).is_ok());
    }

    #[test]
    fn planted_zero_is_reported() {
        let d = DistanceMatrix::from_squared(3, vec![0, 0, 4, 0, 0, 1, 4, 1, 0]).unwrap();
        assert_eq!(validate_no_colocation(&d).pairs, vec![(1, 2)]);
        let single = DistanceMatrix::from_squared(1, vec![0]).unwrap();
        assert!(validate_no_colocation(&single).is_ok());
    }

    #[test]
    fn stimulus_pair_rules() {
        assert_eq!(
            select_stimulus_pair(&reference::geometry()).labels(),
            (2, 3)
        );

        let flat = load_geometry(vec![[5, 0, 0], [5, 1, 0], [5, 2, 0]]).unwrap();
        let p = select_stimulus_pair(&flat);
        assert!(p.is_degenerate());
        assert_eq!(p.labels(), (1, 1));

        let rep = load_geometry(vec![[9, 0, 0], [1, 0, 0], [9, 1, 0], [1, 1, 0]]).unwrap();
        assert_eq!(select_stimulus_pair(&rep).labels(), (1, 2));
    }

    #[test]
    fn reference_permutations_and_tie() {
        let d = distance_matrix(&reference::geometry());
        assert_eq!(
            proximity_permutation(&d, 1).unwrap().labels(),
            reference::PI_X1
        );
        assert_eq!(
            proximity_permutation(&d, 2).unwrap().labels(),
            reference::PI_X2
        );
        // neurons 17 and 20 are both sqrt(13) from neuron 2
        assert_eq!(d.squared(1, 16), 13);
        assert_eq!(d.squared(1, 19), 13);
    }

    #[test]
    fn permutation_apply_roundtrip() {
        let p = Permutation::from_labels(&[3, 1, 2]).unwrap();
        let v = [10, 20, 30];
        assert_eq!(p.apply(&v), vec![30, 10, 20]);
        assert_eq!(p.unapply(&p.apply(&v)), v.to_vec());
        assert_eq!(p.inverse().apply(&p.apply(&v)), v.to_vec());
        assert!(Permutation::from_labels(&[1, 1]).is_err());
    }

    #[test]
    fn range_parsing() {
        assert_eq!("0:9".parse::<CoordRange>().unwrap(), CoordRange::new(0, 9));
        assert!("9:0".parse::<CoordRange>().is_err());
        assert!("nine".parse::<CoordRange>().is_err());
    }

    #[test]
    fn geometry_json_shape() {
        let g = load_geometry(vec![[1, 2, 3], [4, 5, 6]]).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"n":2,"coords":[[1,2,3],[4,5,6]]}"#);
        let back: NetworkGeometry = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        assert!(
            serde_json::from_str::<NetworkGeometry>(r#"{"n":2,"coords":[[1,2,3],[1,2,3]]}"#)
                .is_err()
        );
        assert!(serde_json::from_str::<NetworkGeometry>(r#"{"n":3,"coords":[[1,2,3]]}"#).is_err());
    }
}
