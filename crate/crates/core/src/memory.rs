//! Bipolar memory sets, Hebbian weights and their B-matrix halves.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::SignPolicy;
use crate::topology::Permutation;

/// `m` stored patterns of length `n`, every entry exactly -1 or +1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MemoryFile", into = "MemoryFile")]
pub struct MemorySet {
    n: usize,
    vectors: Vec<Vec<i8>>,
}

/// On-disk form: `{"m": 3, "n": 20, "vectors": [[1, -1, ...], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemoryFile {
    pub m: usize,
    pub n: usize,
    pub vectors: Vec<Vec<i8>>,
}

impl TryFrom<MemoryFile> for MemorySet {
    type Error = Error;

    fn try_from(file: MemoryFile) -> Result<Self> {
        if file.vectors.len() != file.m {
            return Err(Error::SizeMismatch {
                expected: file.m,
                found: file.vectors.len(),
            });
        }
        let set = MemorySet::new(file.vectors)?;
        if set.n != file.n {
            return Err(Error::SizeMismatch {
                expected: file.n,
                found: set.n,
            });
        }
        Ok(set)
    }
}

impl From<MemorySet> for MemoryFile {
    fn from(s: MemorySet) -> Self {
        Self {
            m: s.vectors.len(),
            n: s.n,
            vectors: s.vectors,
        }
    }
}

impl MemorySet {
    pub fn new(vectors: Vec<Vec<i8>>) -> Result<Self> {
        let n = vectors
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::Invalid("memory set is empty".into()))?;
        if n == 0 {
            return Err(Error::Invalid(
                "memories must have at least one entry".into(),
            ));
        }
        for (k, v) in vectors.iter().enumerate() {
            if v.len() != n {
                return Err(Error::SizeMismatch {
                    expected: n,
                    found: v.len(),
                });
            }
            if let Some(i) = v.iter().position(|&x| x != 1 && x != -1) {
                return Err(Error::Invalid(format!(
                    "memory {} entry {} is {}, expected -1 or +1",
                    k + 1,
                    i + 1,
                    v[i]
                )));
            }
        }
        Ok(Self { n, vectors })
    }

    pub fn m(&self) -> usize {
        self.vectors.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vectors(&self) -> &[Vec<i8>] {
        &self.vectors
    }

    pub fn get(&self, k: usize) -> &[i8] {
        &self.vectors[k]
    }

    pub fn negated(&self) -> MemorySet {
        MemorySet {
            n: self.n,
            vectors: self
                .vectors
                .iter()
                .map(|v| v.iter().map(|&x| -x).collect())
                .collect(),
        }
    }
}

pub fn generate_memories(seed: u64, m: usize, n: usize) -> Result<MemorySet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_memories_with(&mut rng, m, n)
}

pub fn generate_memories_with<R: Rng>(rng: &mut R, m: usize, n: usize) -> Result<MemorySet> {
    if m == 0 || n == 0 {
        return Err(Error::Invalid(format!(
            "need m >= 1 and n >= 1, got m={m}, n={n}"
        )));
    }
    let vectors = (0..m)
        .map(|_| {
            (0..n)
                .map(|_| if rng.gen_bool(0.5) { 1 } else { -1 })
                .collect()
        })
        .collect();
    Ok(MemorySet { n, vectors })
}

/// Dense square integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightMatrix {
    n: usize,
    data: Vec<i32>,
}

impl WeightMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0; n * n],
        }
    }

    /// Wraps raw row-major data without checking symmetry.
    pub fn from_raw(n: usize, data: Vec<i32>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::SizeMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> i32 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[i32] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// First asymmetric or nonzero-diagonal entry, if any.
    pub fn check_symmetric_zero_diagonal(&self) -> Result<()> {
        for i in 0..self.n {
            if self.get(i, i) != 0 {
                return Err(Error::NonZeroDiagonal { index: i + 1 });
            }
            for j in (i + 1)..self.n {
                if self.get(i, j) != self.get(j, i) {
                    return Err(Error::NotSymmetric {
                        row: i + 1,
                        col: j + 1,
                    });
                }
            }
        }
        Ok(())
    }

    /// `T·x`, widened to avoid overflow.
    pub fn field(&self, x: &[i8]) -> Vec<i64> {
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .map(|(&w, &s)| w as i64 * s as i64)
                    .sum()
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(out);
        for i in 0..self.n {
            w.write_record(self.row(i).iter().map(|v| v.to_string()))
                .map_err(|e| Error::Invalid(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Invalid(e.to_string()))
    }
}

/// Outer-product sum over stored patterns with the diagonal zeroed.
pub fn hebbian_weights(mems: &MemorySet) -> WeightMatrix {
    let n = mems.n();
    let mut t = WeightMatrix::zeros(n);
    for v in mems.vectors() {
        for i in 0..n {
            for j in (i + 1)..n {
                let p = (v[i] * v[j]) as i32;
                t.data[i * n + j] += p;
                t.data[j * n + i] += p;
            }
        }
    }
    t
}

/// Reorders each memory into sequence coordinates: `out[k][p] = mems[k][order[p]]`.
pub fn permute_memories(mems: &MemorySet, p: &Permutation) -> Result<MemorySet> {
    if mems.n() != p.len() {
        return Err(Error::SizeMismatch {
            expected: p.len(),
            found: mems.n(),
        });
    }
    Ok(MemorySet {
        n: mems.n,
        vectors: mems.vectors.iter().map(|v| p.apply(v)).collect(),
    })
}

/// Conjugates `t` by the permutation: `out[a][b] = t[order[a]][order[b]]`.
pub fn permute_weights(t: &WeightMatrix, p: &Permutation) -> Result<WeightMatrix> {
    if t.n() != p.len() {
        return Err(Error::SizeMismatch {
            expected: p.len(),
            found: t.n(),
        });
    }
    let n = t.n();
    let mut data = Vec::with_capacity(n * n);
    for a in 0..n {
        let ra = p.neuron_at(a);
        data.extend((0..n).map(|b| t.get(ra, p.neuron_at(b))));
    }
    Ok(WeightMatrix { n, data })
}

/// Strictly lower-triangular half of a symmetric zero-diagonal matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BMatrix {
    n: usize,
    data: Vec<i32>,
}

impl BMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> i32 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[i32] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// `B + Bᵀ`.
    pub fn symmetrize(&self) -> WeightMatrix {
        let n = self.n;
        let mut t = WeightMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t.data[i * n + j] = self.get(i, j) + self.get(j, i);
            }
        }
        t
    }

    pub fn nonzero_count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }
}

pub fn b_matrix(t: &WeightMatrix) -> Result<BMatrix> {
    t.check_symmetric_zero_diagonal()?;
    let n = t.n();
    let mut data = vec![0; n * n];
    for i in 0..n {
        for j in 0..i {
            data[i * n + j] = t.get(i, j);
        }
    }
    Ok(BMatrix { n, data })
}

/// One-step stability of a stored pattern under `sign(T·x)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StabilityEntry {
    /// 1-based memory index.
    pub memory: usize,
    pub stable: bool,
    /// 1-based components where `sign(T·x)` disagrees with `x`.
    pub unstable_components: Vec<usize>,
}

/// Zero fields under the coin policy count as unstable.
pub fn stability_report(
    t: &WeightMatrix,
    mems: &MemorySet,
    sign: SignPolicy,
) -> Result<Vec<StabilityEntry>> {
    if t.n() != mems.n() {
        return Err(Error::SizeMismatch {
            expected: t.n(),
            found: mems.n(),
        });
    }
    Ok(mems
        .vectors()
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let unstable_components: Vec<usize> = t
                .field(x)
                .into_iter()
                .enumerate()
                .filter(|&(i, h)| sign.sign_deterministic(h) != Some(x[i]))
                .map(|(i, _)| i + 1)
                .collect();
            StabilityEntry {
                memory: k + 1,
                stable: unstable_components.is_empty(),
                unstable_components,
            }
        })
        .collect())
}
