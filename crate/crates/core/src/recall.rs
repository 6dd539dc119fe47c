//! Single-source clamped recall along a proximity sequence.
//!
//! All positions here are sequence coordinates: position 0 is the stimulated
//! neuron, position `p` the `p`-th nearest. The B-matrix and memory set passed
//! in must already be permuted into that order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memory::{BMatrix, MemorySet, WeightMatrix};
use crate::policy::{Policies, SignPolicy, UpdateWindow};

/// Per-neuron state in {-1, 0, +1}; 0 means not yet clamped.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TriStateVector(Vec<i8>);

impl TriStateVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn from_values(values: Vec<i8>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !(-1..=1).contains(v)) {
            return Err(Error::Invalid(format!(
                "state entry {} is {}, expected -1, 0 or +1",
                i + 1,
                values[i]
            )));
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, p: usize) -> i8 {
        self.0[p]
    }

    pub(crate) fn set(&mut self, p: usize, value: i8) {
        debug_assert!(value == 1 || value == -1);
        self.0[p] = value;
    }

    pub fn is_clamped(&self, p: usize) -> bool {
        self.0[p] != 0
    }

    pub fn clamped_count(&self) -> usize {
        self.0.iter().filter(|&&v| v != 0).count()
    }

    pub fn is_complete(&self) -> bool {
        self.0.iter().all(|&v| v != 0)
    }

    pub fn values(&self) -> &[i8] {
        &self.0
    }

    /// The state as a bipolar vector, if fully clamped.
    pub fn to_bipolar(&self) -> Option<Vec<i8>> {
        self.is_complete().then(|| self.0.clone())
    }
}

/// Weighted input at `cursor` from the currently clamped positions.
pub fn local_field(
    b: &BMatrix,
    state: &TriStateVector,
    cursor: usize,
    window: UpdateWindow,
) -> i64 {
    let lower: i64 = b.row(cursor)[..cursor]
        .iter()
        .zip(&state.values()[..cursor])
        .map(|(&w, &s)| w as i64 * s as i64)
        .sum();
    match window {
        UpdateWindow::StrictLower => lower,
        UpdateWindow::FullRow => {
            // upper half of T's row is column `cursor` of B below the diagonal
            let upper: i64 = ((cursor + 1)..b.n())
                .map(|q| b.get(q, cursor) as i64 * state.get(q) as i64)
                .sum();
            lower + upper
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub position: usize,
    pub value: i8,
    pub field: i64,
}

/// Clamps `cursor` to the sign of its local field.
pub fn recall_step<R: Rng + ?Sized>(
    b: &BMatrix,
    state: &mut TriStateVector,
    cursor: usize,
    window: UpdateWindow,
    sign: SignPolicy,
    rng: &mut R,
) -> Result<StepOutcome> {
    if cursor >= state.len() {
        return Err(Error::Invalid(format!(
            "cursor {} past end of sequence",
            cursor + 1
        )));
    }
    if state.is_clamped(cursor) {
        return Err(Error::CursorClamped {
            position: cursor + 1,
        });
    }
    let field = local_field(b, state, cursor, window);
    let value = sign.sign(field, rng);
    state.set(cursor, value);
    Ok(StepOutcome {
        position: cursor,
        value,
        field,
    })
}

/// One iteration of a single-source recall, as exported to JSON lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecallStep {
    pub round: usize,
    pub state: TriStateVector,
    /// 1-based sequence position clamped this round.
    pub new_position: usize,
    pub value: i8,
    #[serde(skip)]
    pub field: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OutcomeKind {
    /// `memory` is 1-based.
    ExactMatch {
        memory: usize,
        polarity: Polarity,
    },
    PseudoMemory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HammingPair {
    pub direct: usize,
    pub negated: usize,
}

impl HammingPair {
    pub fn best(&self) -> (usize, Polarity) {
        if self.negated < self.direct {
            (self.negated, Polarity::Negative)
        } else {
            (self.direct, Polarity::Positive)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeClass {
    pub kind: OutcomeKind,
    /// Distances to each memory and to its negation.
    pub hamming: Vec<HammingPair>,
    /// 1-based index of the closest memory (either polarity).
    pub nearest: usize,
    pub nearest_distance: usize,
    pub nearest_polarity: Polarity,
}

impl OutcomeClass {
    pub fn is_exact(&self) -> bool {
        matches!(self.kind, OutcomeKind::ExactMatch { .. })
    }

    pub fn is_pseudo(&self) -> bool {
        !self.is_exact()
    }

    /// `Some(k)` (1-based) for a positive-polarity match with memory `k`.
    pub fn matched_memory(&self) -> Option<usize> {
        match self.kind {
            OutcomeKind::ExactMatch {
                memory,
                polarity: Polarity::Positive,
            } => Some(memory),
            _ => None,
        }
    }
}

impl std::fmt::Display for OutcomeClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            OutcomeKind::ExactMatch {
                memory,
                polarity: Polarity::Positive,
            } => write!(f, "ExactMatch memory {memory}"),
            OutcomeKind::ExactMatch {
                memory,
                polarity: Polarity::Negative,
            } => write!(f, "ExactMatch memory {memory} (negated)"),
            OutcomeKind::PseudoMemory => write!(
                f,
                "PseudoMemory, Hamming {} from memory {}{}",
                self.nearest_distance,
                self.nearest,
                if self.nearest_polarity == Polarity::Negative {
                    " (negated)"
                } else {
                    ""
                }
            ),
        }
    }
}

pub fn hamming(a: &[i8], b: &[i8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// 1-based positions where `a` and `b` differ.
pub fn differing_positions(a: &[i8], b: &[i8]) -> Vec<usize> {
    a.iter()
        .zip(b)
        .enumerate()
        .filter(|(_, (x, y))| x != y)
        .map(|(i, _)| i + 1)
        .collect()
}

pub fn classify_outcome(v: &[i8], mems: &MemorySet) -> Result<OutcomeClass> {
    if v.len() != mems.n() {
        return Err(Error::SizeMismatch {
            expected: mems.n(),
            found: v.len(),
        });
    }
    let hamming: Vec<HammingPair> = mems
        .vectors()
        .iter()
        .map(|m| {
            let direct = hamming(v, m);
            HammingPair {
                direct,
                negated: m.len() - direct,
            }
        })
        .collect();

    let (nearest, (nearest_distance, nearest_polarity)) = hamming
        .iter()
        .map(HammingPair::best)
        .enumerate()
        .min_by_key(|&(k, (d, _))| (d, k))
        .expect("memory set is never empty");

    let kind = if let Some(k) = hamming.iter().position(|h| h.direct == 0) {
        OutcomeKind::ExactMatch {
            memory: k + 1,
            polarity: Polarity::Positive,
        }
    } else if let Some(k) = hamming.iter().position(|h| h.negated == 0) {
        OutcomeKind::ExactMatch {
            memory: k + 1,
            polarity: Polarity::Negative,
        }
    } else {
        OutcomeKind::PseudoMemory
    };

    Ok(OutcomeClass {
        kind,
        hamming,
        nearest: nearest + 1,
        nearest_distance,
        nearest_polarity,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecallResult {
    pub initial: TriStateVector,
    pub trace: Vec<RecallStep>,
    pub final_state: Vec<i8>,
    /// First round (0 = the bare stimulus) at which the sign of `B·state`
    /// already equals the final vector on every unclamped position.
    pub early_convergence_round: Option<usize>,
    /// Steps whose local field was exactly zero.
    pub zero_fields: usize,
    pub outcome: OutcomeClass,
}

fn tail_matches(b: &BMatrix, state: &TriStateVector, final_state: &[i8], sign: SignPolicy) -> bool {
    let mut any_open = false;
    for (p, &target) in final_state.iter().enumerate() {
        if state.is_clamped(p) {
            continue;
        }
        any_open = true;
        let field = local_field(b, state, p, UpdateWindow::StrictLower);
        if sign.sign_deterministic(field) != Some(target) {
            return false;
        }
    }
    any_open
}

/// Stimulates position 0 with `init` and clamps positions 1..n in order.
///
/// `mems` is the permuted memory set the outcome is classified against.
pub fn single_recall(
    b: &BMatrix,
    mems: &MemorySet,
    init: i8,
    policies: &Policies,
    seed: u64,
) -> Result<RecallResult> {
    if init != 1 && init != -1 {
        return Err(Error::Invalid(format!(
            "initial stimulus must be -1 or +1, got {init}"
        )));
    }
    if b.n() != mems.n() {
        return Err(Error::SizeMismatch {
            expected: b.n(),
            found: mems.n(),
        });
    }
    let n = b.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = TriStateVector::zeros(n);
    state.set(0, init);
    let initial = state.clone();

    let mut trace = Vec::with_capacity(n.saturating_sub(1));
    let mut zero_fields = 0;
    for cursor in 1..n {
        let step = recall_step(
            b,
            &mut state,
            cursor,
            policies.window,
            policies.sign,
            &mut rng,
        )?;
        if step.field == 0 {
            zero_fields += 1;
        }
        trace.push(RecallStep {
            round: cursor,
            state: state.clone(),
            new_position: cursor + 1,
            value: step.value,
            field: step.field,
        });
    }

    let final_state = state.to_bipolar().expect("every position clamped");
    let early_convergence_round = std::iter::once(&initial)
        .chain(trace.iter().map(|s| &s.state))
        .position(|s| tail_matches(b, s, &final_state, policies.sign));
    let outcome = classify_outcome(&final_state, mems)?;

    Ok(RecallResult {
        initial,
        trace,
        final_state,
        early_convergence_round,
        zero_fields,
        outcome,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopfieldRun {
    pub final_state: Vec<i8>,
    pub iterations: usize,
    pub converged: bool,
}

/// Classical synchronous `x <- sign(T·x)` iteration from a partial cue.
/// Comparison baseline only.
pub fn hopfield_sync_recall<R: Rng + ?Sized>(
    t: &WeightMatrix,
    cue: &[i8],
    sign: SignPolicy,
    max_iterations: usize,
    rng: &mut R,
) -> HopfieldRun {
    let mut x = cue.to_vec();
    for it in 1..=max_iterations {
        let next: Vec<i8> = t.field(&x).into_iter().map(|h| sign.sign(h, rng)).collect();
        if next == x {
            return HopfieldRun {
                final_state: x,
                iterations: it - 1,
                converged: true,
            };
        }
        x = next;
    }
    HopfieldRun {
        final_state: x,
        iterations: max_iterations,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::reference;
    use crate::memory::{b_matrix, hebbian_weights};

    fn b_of(mems: &MemorySet) -> BMatrix {
        b_matrix(&hebbian_weights(mems)).unwrap()
    }

    #[test]
    fn single_pattern_step_is_exact() {
        let x = MemorySet::new(vec![vec![-1, 1, 1, -1, 1]]).unwrap();
        let b = b_of(&x);
        let mut state = TriStateVector::from_values(vec![-1, 0, 0, 0, 0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = recall_step(
            &b,
            &mut state,
            1,
            UpdateWindow::StrictLower,
            SignPolicy::ZeroToPositive,
            &mut rng,
        )
        .unwrap();
        assert_eq!(s.value, 1);
        assert_eq!(state.get(1), 1);
        let err = recall_step(
            &b,
            &mut state,
            1,
            UpdateWindow::StrictLower,
            SignPolicy::ZeroToPositive,
            &mut rng,
        )
        .unwrap_err();
        assert_eq!(err, Error::CursorClamped { position: 2 });
    }

    #[test]
    fn zero_row_follows_policy() {
        let t = WeightMatrix::zeros(3);
        let b = b_matrix(&t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut state = TriStateVector::from_values(vec![1, 0, 0]).unwrap();
        let s = recall_step(
            &b,
            &mut state,
            1,
            UpdateWindow::StrictLower,
            SignPolicy::ZeroToPositive,
            &mut rng,
        )
        .unwrap();
        assert_eq!((s.value, s.field), (1, 0));
    }

    #[test]
    fn first_reference_step_on_r1() {
        let r1 = reference::r1_mems();
        let b = b_of(&r1);
        // direct evaluation: B[2][1] * 1 = sum_k r1[k][1] * r1[k][0]
        let oracle: i64 = r1.vectors().iter().map(|v| (v[1] * v[0]) as i64).sum();
        let mut state = TriStateVector::from_values({
            let mut v = vec![0; 20];
            v[0] = 1;
            v
        })
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = recall_step(
            &b,
            &mut state,
            1,
            UpdateWindow::StrictLower,
            SignPolicy::ZeroToPositive,
            &mut rng,
        )
        .unwrap();
        assert_eq!(s.field, oracle);
        assert_eq!(s.value, 1);
        assert_eq!(s.value, r1.get(2)[1]);
    }

    #[test]
    fn reference_single_recalls() {
        let p = Policies::default();
        let r1 = reference::r1_mems();
        let res = single_recall(&b_of(&r1), &r1, 1, &p, 0).unwrap();
        assert_eq!(res.outcome.matched_memory(), Some(3));
        assert!(res.early_convergence_round.is_some());

        let r2 = reference::r2_mems();
        let b2 = b_of(&r2);
        let res = single_recall(&b2, &r2, 1, &p, 0).unwrap();
        assert_eq!(res.outcome.matched_memory(), Some(2));

        let res = single_recall(&b2, &r2, -1, &p, 0).unwrap();
        assert!(res.outcome.is_pseudo());
        assert_eq!((res.outcome.nearest, res.outcome.nearest_distance), (3, 1));
        assert_eq!(differing_positions(&res.final_state, r2.get(2)), vec![4]);
        assert_eq!(res.final_state, reference::PRINTED_PSEUDO_MEMORY);
        assert_eq!(
            res.outcome.to_string(),
            "PseudoMemory, Hamming 1 from memory 3"
        );
    }

    #[test]
    fn trace_grows_one_position_per_round() {
        let r2 = reference::r2_mems();
        let res = single_recall(&b_of(&r2), &r2, -1, &Policies::default(), 0).unwrap();
        assert_eq!(res.trace.len(), 19);
        let mut prev = res.initial.clone();
        for step in &res.trace {
            assert_eq!(step.state.clamped_count(), prev.clamped_count() + 1);
            for p in 0..20 {
                if prev.is_clamped(p) {
                    assert_eq!(prev.get(p), step.state.get(p));
                }
            }
            prev = step.state.clone();
        }
        let line = serde_json::to_string(&res.trace[0]).unwrap();
        assert!(line.starts_with(r#"{"round":1,"state":[-1,"#), "{line}");
        assert!(line.ends_with(r#""new_position":2,"value":1}"#), "{line}");
    }

    #[test]
    fn classification_cases() {
        let mems = reference::r_mems();
        let c = classify_outcome(mems.get(1), &mems).unwrap();
        assert_eq!(
            c.kind,
            OutcomeKind::ExactMatch {
                memory: 2,
                polarity: Polarity::Positive
            }
        );
        assert_eq!(c.nearest_distance, 0);

        let neg: Vec<i8> = mems.get(0).iter().map(|&x| -x).collect();
        let c = classify_outcome(&neg, &mems).unwrap();
        assert_eq!(
            c.kind,
            OutcomeKind::ExactMatch {
                memory: 1,
                polarity: Polarity::Negative
            }
        );
        assert_eq!(c.matched_memory(), None);

        let r2 = reference::r2_mems();
        let c = classify_outcome(&reference::PRINTED_PSEUDO_MEMORY, &r2).unwrap();
        assert_eq!(c.hamming[2].direct, 1);
        assert!(classify_outcome(&[1, 1], &mems).is_err());
    }

    #[test]
    fn hopfield_baseline_recovers_single_pattern() {
        let x = MemorySet::new(vec![vec![1, -1, 1, 1, -1, -1, 1]]).unwrap();
        let t = hebbian_weights(&x);
        let mut cue = vec![0i8; 7];
        cue[0] = 1;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let run = hopfield_sync_recall(&t, &cue, SignPolicy::ZeroToPositive, 50, &mut rng);
        assert!(run.converged);
        assert_eq!(run.final_state, x.get(0));
    }
}
