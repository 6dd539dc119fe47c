//! Dual-source recall. Two proximity sequences advance in lock-step rounds;
//! every value one lane clamps is written into the other lane at the
//! position that neuron occupies there.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memory::{b_matrix, hebbian_weights, permute_memories, BMatrix, MemorySet};
use crate::policy::{BlockedHandling, ConflictPolicy, Policies, RoundCounting, Visibility};
use crate::recall::{classify_outcome, local_field, recall_step, OutcomeClass, TriStateVector};
use crate::topology::{distance_matrix, proximity_permutation, NetworkGeometry, Permutation};

/// When a value was first written: round, then slot within the round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Stamp {
    pub round: usize,
    pub slot: usize,
}

/// A value together with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Write {
    pub value: i8,
    pub stamp: Stamp,
    /// 0-based lane that computed the value.
    pub lane: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Winner {
    Existing,
    Incoming,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub kept: i8,
    pub winner: Winner,
    pub policy: ConflictPolicy,
}

/// Settles two disagreeing values for the same neuron.
pub fn resolve_conflict<R: Rng + ?Sized>(
    policy: ConflictPolicy,
    existing: Write,
    incoming: Write,
    rng: &mut R,
) -> Resolution {
    debug_assert_ne!(existing.value, incoming.value);
    let winner = match policy {
        ConflictPolicy::FirstWriterWins => {
            if incoming.stamp < existing.stamp {
                Winner::Incoming
            } else {
                Winner::Existing
            }
        }
        ConflictPolicy::OwnLanePriority => Winner::Existing,
        ConflictPolicy::FairRandomDraw => {
            if rng.gen_bool(0.5) {
                Winner::Incoming
            } else {
                Winner::Existing
            }
        }
    };
    let kept = match winner {
        Winner::Existing => existing.value,
        Winner::Incoming => incoming.value,
    };
    Resolution {
        kept,
        winner,
        policy,
    }
}

/// A blocked position a lane stepped over.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blocked {
    /// 1-based sequence position.
    pub position: usize,
    /// 1-based neuron.
    pub neuron: usize,
    pub held: i8,
    /// Field the lane itself would have applied there.
    pub field: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LaneAction {
    Clamped {
        position: usize,
        neuron: usize,
        value: i8,
        field: i64,
        skipped: Vec<Blocked>,
    },
    Skipped {
        blocked: Vec<Blocked>,
    },
    Idle,
}

impl LaneAction {
    pub fn is_clamp(&self) -> bool {
        matches!(self, LaneAction::Clamped { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum CrossStatus {
    /// Target was unclamped and took the value.
    Accepted,
    /// Target already held the same value.
    Agreed,
    Conflict {
        existing: i8,
        kept: i8,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossClampEvent {
    /// 1-based lanes.
    pub source_lane: usize,
    pub target_lane: usize,
    pub neuron: usize,
    pub target_position: usize,
    pub value: i8,
    #[serde(flatten)]
    pub status: CrossStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    pub actions: [LaneAction; 2],
    pub cross_clamps: Vec<CrossClampEvent>,
    pub states: [TriStateVector; 2],
}

impl RoundReport {
    pub fn is_active(&self) -> bool {
        self.actions.iter().any(LaneAction::is_clamp)
    }
}

#[derive(Debug, Clone)]
struct Lane {
    perm: Permutation,
    b: BMatrix,
    mems: MemorySet,
    state: TriStateVector,
    stamps: Vec<Option<Stamp>>,
    cursor: usize,
    enabled: bool,
}

impl Lane {
    fn new(geom: &NetworkGeometry, mems: &MemorySet, start: usize) -> Result<Self> {
        let perm = proximity_permutation(&distance_matrix(geom), start)?;
        let permuted = permute_memories(mems, &perm)?;
        let b = b_matrix(&hebbian_weights(&permuted))?;
        let n = perm.len();
        Ok(Self {
            perm,
            b,
            mems: permuted,
            state: TriStateVector::zeros(n),
            stamps: vec![None; n],
            cursor: 1,
            enabled: true,
        })
    }

    fn write(&mut self, position: usize, w: Write) {
        self.state.set(position, w.value);
        self.stamps[position] = Some(w.stamp);
    }

    fn remaining_clamped(&self) -> bool {
        (self.cursor..self.state.len()).all(|p| self.state.is_clamped(p))
    }
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    target: usize,
    neuron: usize,
    write: Write,
}

/// A running dual-source recall.
#[derive(Debug, Clone)]
pub struct InterplaySession {
    lanes: [Lane; 2],
    policies: Policies,
    rng: ChaCha8Rng,
    round: usize,
    pending: Vec<Pending>,
    conflicts: usize,
    pair: (usize, usize),
    inits: (i8, i8),
    initial: [TriStateVector; 2],
}

fn check_init(v: i8) -> Result<()> {
    if v == 1 || v == -1 {
        Ok(())
    } else {
        Err(Error::Invalid(format!(
            "initial stimulus must be -1 or +1, got {v}"
        )))
    }
}

/// Builds both lanes. `pair` holds 0-based start neurons; each lane starts
/// with its own stimulus at position 1 and the other source's stimulus at
/// that neuron's position.
pub fn init_interplay(
    geom: &NetworkGeometry,
    mems: &MemorySet,
    pair: (usize, usize),
    inits: (i8, i8),
    policies: Policies,
    seed: u64,
) -> Result<InterplaySession> {
    let (a, b) = pair;
    if a == b {
        return Err(Error::DegeneratePair { neuron: a + 1 });
    }
    check_init(inits.0)?;
    check_init(inits.1)?;
    if geom.n() != mems.n() {
        return Err(Error::SizeMismatch {
            expected: geom.n(),
            found: mems.n(),
        });
    }
    let mut lanes = [Lane::new(geom, mems, a)?, Lane::new(geom, mems, b)?];
    let origin = [
        Write {
            value: inits.0,
            stamp: Stamp { round: 0, slot: 0 },
            lane: 0,
        },
        Write {
            value: inits.1,
            stamp: Stamp { round: 0, slot: 1 },
            lane: 1,
        },
    ];
    let starts = [a, b];
    for l in 0..2 {
        lanes[l].write(0, origin[l]);
        let other = 1 - l;
        let p = lanes[l].perm.position_of(starts[other]);
        lanes[l].write(p, origin[other]);
    }
    let initial = [lanes[0].state.clone(), lanes[1].state.clone()];
    Ok(InterplaySession {
        lanes,
        policies,
        rng: ChaCha8Rng::seed_from_u64(seed),
        round: 0,
        pending: Vec::new(),
        conflicts: 0,
        pair,
        inits,
        initial,
    })
}

impl InterplaySession {
    /// A session whose second lane never acts. Runs the same dynamics as
    /// single-source recall from `start`.
    pub fn solo(
        geom: &NetworkGeometry,
        mems: &MemorySet,
        start: usize,
        init: i8,
        policies: Policies,
        seed: u64,
    ) -> Result<Self> {
        check_init(init)?;
        let mut first = Lane::new(geom, mems, start)?;
        first.write(
            0,
            Write {
                value: init,
                stamp: Stamp { round: 0, slot: 0 },
                lane: 0,
            },
        );
        let mut second = first.clone();
        second.enabled = false;
        let initial = [first.state.clone(), second.state.clone()];
        Ok(Self {
            lanes: [first, second],
            policies,
            rng: ChaCha8Rng::seed_from_u64(seed),
            round: 0,
            pending: Vec::new(),
            conflicts: 0,
            pair: (start, start),
            inits: (init, init),
            initial,
        })
    }

    pub fn round_number(&self) -> usize {
        self.round
    }

    pub fn state(&self, lane: usize) -> &TriStateVector {
        &self.lanes[lane].state
    }

    pub fn permutation(&self, lane: usize) -> &Permutation {
        &self.lanes[lane].perm
    }

    pub fn b_matrix(&self, lane: usize) -> &BMatrix {
        &self.lanes[lane].b
    }

    pub fn policies(&self) -> &Policies {
        &self.policies
    }

    pub fn is_complete(&self) -> bool {
        self.lanes
            .iter()
            .filter(|l| l.enabled)
            .all(|l| l.state.is_complete())
    }

    fn deliver(&mut self, p: Pending) -> CrossClampEvent {
        let policy = self.policies.conflict;
        let lane = &mut self.lanes[p.target];
        let position = lane.perm.position_of(p.neuron);
        let held = lane.state.get(position);
        let status = if held == 0 {
            lane.write(position, p.write);
            CrossStatus::Accepted
        } else if held == p.write.value {
            CrossStatus::Agreed
        } else {
            let existing = Write {
                value: held,
                stamp: lane.stamps[position].unwrap_or(Stamp { round: 0, slot: 0 }),
                lane: p.target,
            };
            let res = resolve_conflict(policy, existing, p.write, &mut self.rng);
            if res.winner == Winner::Incoming {
                self.lanes[p.target].write(position, p.write);
            }
            self.conflicts += 1;
            CrossStatus::Conflict {
                existing: held,
                kept: res.kept,
            }
        };
        CrossClampEvent {
            source_lane: p.write.lane + 1,
            target_lane: p.target + 1,
            neuron: p.neuron + 1,
            target_position: position + 1,
            value: p.write.value,
            status,
        }
    }

    fn blocked_at(&self, l: usize, position: usize) -> Blocked {
        let lane = &self.lanes[l];
        Blocked {
            position: position + 1,
            neuron: lane.perm.neuron_at(position) + 1,
            held: lane.state.get(position),
            field: local_field(&lane.b, &lane.state, position, self.policies.window),
        }
    }

    fn ready(&self, l: usize) -> bool {
        let lane = &self.lanes[l];
        lane.enabled && lane.cursor < lane.state.len() && !lane.state.is_clamped(lane.cursor)
    }

    fn advance_lane(
        &mut self,
        l: usize,
        slot: usize,
        any_ready: bool,
        events: &mut Vec<CrossClampEvent>,
    ) -> Result<LaneAction> {
        let n = self.lanes[l].state.len();
        if !self.lanes[l].enabled || self.lanes[l].remaining_clamped() {
            self.lanes[l].cursor = n;
            return Ok(LaneAction::Idle);
        }

        let mut skipped = Vec::new();
        while self.lanes[l].state.is_clamped(self.lanes[l].cursor) {
            let cursor = self.lanes[l].cursor;
            skipped.push(self.blocked_at(l, cursor));
            self.lanes[l].cursor += 1;
            let single_skip = match self.policies.blocked {
                BlockedHandling::SkipRound => true,
                BlockedHandling::SkipAndAdvance => false,
                BlockedHandling::PumpOther => any_ready,
            };
            if single_skip {
                return Ok(LaneAction::Skipped { blocked: skipped });
            }
        }

        let cursor = self.lanes[l].cursor;
        let (window, sign) = (self.policies.window, self.policies.sign);
        let lane = &mut self.lanes[l];
        let step = recall_step(
            &lane.b,
            &mut lane.state,
            cursor,
            window,
            sign,
            &mut self.rng,
        )?;
        let stamp = Stamp {
            round: self.round,
            slot,
        };
        lane.stamps[cursor] = Some(stamp);
        lane.cursor += 1;
        let neuron = lane.perm.neuron_at(cursor);

        let other = 1 - l;
        if self.lanes[other].enabled {
            let pending = Pending {
                target: other,
                neuron,
                write: Write {
                    value: step.value,
                    stamp,
                    lane: l,
                },
            };
            match self.policies.visibility {
                Visibility::SameRound => events.push(self.deliver(pending)),
                Visibility::NextRound => self.pending.push(pending),
            }
        }

        Ok(LaneAction::Clamped {
            position: cursor + 1,
            neuron: neuron + 1,
            value: step.value,
            field: step.field,
            skipped,
        })
    }

    /// Plays one round: deferred cross-clamps land first, then each lane
    /// acts in the configured order.
    pub fn interplay_round(&mut self) -> Result<RoundReport> {
        self.round += 1;
        let mut events = Vec::new();
        for p in std::mem::take(&mut self.pending) {
            events.push(self.deliver(p));
        }
        let any_ready = self.ready(0) || self.ready(1);
        let mut actions = [LaneAction::Idle, LaneAction::Idle];
        for (slot, l) in self.policies.lane_order.lanes().into_iter().enumerate() {
            actions[l] = self.advance_lane(l, slot, any_ready, &mut events)?;
        }
        Ok(RoundReport {
            round: self.round,
            actions,
            cross_clamps: events,
            states: [self.lanes[0].state.clone(), self.lanes[1].state.clone()],
        })
    }

    /// Plays rounds until every enabled lane is fully clamped.
    pub fn run(mut self) -> Result<InterplayResult> {
        let n = self.lanes[0].state.len();
        let limit = 2 * n;
        let mut trace: Vec<RoundReport> = Vec::new();
        while !self.is_complete() {
            if self.round >= limit {
                return Err(Error::NonTermination { limit });
            }
            trace.push(self.interplay_round()?);
        }
        // deferred writes from the last round can still collide
        if !self.pending.is_empty() {
            let mut events = Vec::new();
            for p in std::mem::take(&mut self.pending) {
                events.push(self.deliver(p));
            }
            if let Some(last) = trace.last_mut() {
                last.cross_clamps.extend(events);
                last.states = [self.lanes[0].state.clone(), self.lanes[1].state.clone()];
            }
        }

        let lane_finals: [Vec<i8>; 2] = [0, 1].map(|l| self.lanes[l].state.values().to_vec());
        let network_finals: [Vec<i8>; 2] =
            [0, 1].map(|l| self.lanes[l].perm.unapply(&lane_finals[l]));
        let outcomes = [
            classify_outcome(&lane_finals[0], &self.lanes[0].mems)?,
            classify_outcome(&lane_finals[1], &self.lanes[1].mems)?,
        ];
        let active_rounds = trace.iter().filter(|r| r.is_active()).count();
        Ok(InterplayResult {
            policies: self.policies,
            pair: (self.pair.0 + 1, self.pair.1 + 1),
            inits: self.inits,
            initial: self.initial,
            rounds: trace.len(),
            active_rounds,
            trace,
            agreement: network_finals[0] == network_finals[1],
            lane_finals,
            network_finals,
            outcomes,
            conflicts: self.conflicts,
            orders: [self.lanes[0].perm.labels(), self.lanes[1].perm.labels()],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InterplayResult {
    pub policies: Policies,
    /// 1-based start neurons.
    pub pair: (usize, usize),
    pub inits: (i8, i8),
    pub initial: [TriStateVector; 2],
    pub trace: Vec<RoundReport>,
    pub rounds: usize,
    pub active_rounds: usize,
    /// Final states in each lane's sequence order.
    pub lane_finals: [Vec<i8>; 2],
    /// Final states in network (neuron) order.
    pub network_finals: [Vec<i8>; 2],
    pub agreement: bool,
    /// Each lane against its own permuted memory set.
    pub outcomes: [OutcomeClass; 2],
    pub conflicts: usize,
    /// 1-based proximity orders of the two lanes.
    pub orders: [Vec<usize>; 2],
}

impl InterplayResult {
    pub fn reported_rounds(&self, counting: RoundCounting) -> usize {
        match counting {
            RoundCounting::AllRounds => self.rounds,
            RoundCounting::ActiveRounds => self.active_rounds,
        }
    }

    /// 1-based neurons where each lane's final state differs from `memory`
    /// (network order).
    pub fn errors_against(&self, memory: &[i8]) -> [Vec<usize>; 2] {
        self.network_finals.clone().map(|v| {
            v.iter()
                .zip(memory)
                .enumerate()
                .filter(|(_, (a, b))| a != b)
                .map(|(i, _)| i + 1)
                .collect()
        })
    }

    /// Two-row text layout, one block per round starting at round 0.
    pub fn render_rows(&self) -> String {
        fn row(v: &[i8]) -> String {
            let cells: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            format!("[{}]", cells.join(" "))
        }
        let mut out = String::new();
        let mut block = |round: usize, states: &[TriStateVector; 2]| {
            let _ = writeln!(out, "{round}");
            let _ = writeln!(out, "r1Mems = {}", row(states[0].values()));
            let _ = writeln!(out, "r2Mems = {}", row(states[1].values()));
            let _ = writeln!(out);
        };
        block(0, &self.initial);
        for r in &self.trace {
            block(r.round, &r.states);
        }
        out
    }
}

/// Convenience wrapper: initialise and run.
pub fn run_interplay(
    geom: &NetworkGeometry,
    mems: &MemorySet,
    pair: (usize, usize),
    inits: (i8, i8),
    policies: Policies,
    seed: u64,
) -> Result<InterplayResult> {
    init_interplay(geom, mems, pair, inits, policies, seed)?.run()
}
