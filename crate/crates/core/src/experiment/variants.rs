use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fixture::reference;
use crate::interplay::run_interplay;
use crate::memory::{b_matrix, hebbian_weights, permute_memories};
use crate::policy::{
    BlockedHandling, ConflictPolicy, LaneOrder, Policies, RoundCounting, SignPolicy, UpdateWindow,
    Visibility,
};
use crate::recall::{differing_positions, single_recall, OutcomeKind, Polarity, RecallResult};
use crate::topology::{distance_matrix, proximity_permutation};

/// Policy combinations to try: the cartesian product of the axes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariantGrid {
    pub sign: Vec<SignPolicy>,
    pub window: Vec<UpdateWindow>,
    pub conflict: Vec<ConflictPolicy>,
    pub lane_order: Vec<LaneOrder>,
    pub visibility: Vec<Visibility>,
    pub blocked: Vec<BlockedHandling>,
    pub round_counting: Vec<RoundCounting>,
}

impl Default for VariantGrid {
    /// 48 combinations. Coin signs, the other conflict rules and the
    /// reversed lane order are left to custom grids.
    fn default() -> Self {
        Self {
            sign: vec![SignPolicy::ZeroToPositive, SignPolicy::ZeroToNegative],
            window: vec![UpdateWindow::StrictLower, UpdateWindow::FullRow],
            conflict: vec![ConflictPolicy::FirstWriterWins],
            lane_order: vec![LaneOrder::FirstThenSecond],
            visibility: vec![Visibility::SameRound, Visibility::NextRound],
            blocked: vec![
                BlockedHandling::SkipRound,
                BlockedHandling::SkipAndAdvance,
                BlockedHandling::PumpOther,
            ],
            round_counting: vec![RoundCounting::AllRounds, RoundCounting::ActiveRounds],
        }
    }
}

impl VariantGrid {
    pub fn single(p: Policies) -> Self {
        Self {
            sign: vec![p.sign],
            window: vec![p.window],
            conflict: vec![p.conflict],
            lane_order: vec![p.lane_order],
            visibility: vec![p.visibility],
            blocked: vec![p.blocked],
            round_counting: vec![p.round_counting],
        }
    }

    pub fn combinations(&self) -> Vec<Policies> {
        let mut out = Vec::new();
        for &sign in &self.sign {
            for &window in &self.window {
                for &conflict in &self.conflict {
                    for &lane_order in &self.lane_order {
                        for &visibility in &self.visibility {
                            for &blocked in &self.blocked {
                                for &round_counting in &self.round_counting {
                                    out.push(Policies {
                                        sign,
                                        window,
                                        conflict,
                                        lane_order,
                                        visibility,
                                        blocked,
                                        round_counting,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// One reference-trial check under one policy combination.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    pub passed: bool,
    pub observed: String,
}

fn check(id: &str, passed: bool, observed: String) -> CheckResult {
    CheckResult {
        id: id.to_string(),
        passed,
        observed,
    }
}

/// Ids of the policy-dependent checks, in report order.
pub const VARIANT_CHECKS: [&str; 8] = [
    "r1-recall-plus-memory-3",
    "r2-recall-plus-memory-2",
    "r2-recall-minus-pseudo-memory",
    "r2-pseudo-memory-vector",
    "interplay-terminates-in-agreement",
    "interplay-twelve-rounds",
    "interplay-neuron-13-error",
    "interplay-final-states",
];

fn lane_recall(start_label: usize, init: i8, p: &Policies) -> Result<(RecallResult, Vec<Vec<i8>>)> {
    let d = distance_matrix(&reference::geometry());
    let perm = proximity_permutation(&d, start_label - 1)?;
    let mems = permute_memories(&reference::r_mems(), &perm)?;
    let b = b_matrix(&hebbian_weights(&mems))?;
    let res = single_recall(&b, &mems, init, p, 0)?;
    Ok((res, mems.vectors().to_vec()))
}

/// Runs every policy-dependent check on the reference trial.
pub fn evaluate_variant(p: &Policies) -> Result<Vec<CheckResult>> {
    let (first, second) = reference::PAIR;
    let mut out = Vec::new();

    let (r1, _) = lane_recall(first, 1, p)?;
    out.push(check(
        VARIANT_CHECKS[0],
        r1.outcome.matched_memory() == Some(3),
        r1.outcome.to_string(),
    ));
    let (r2, _) = lane_recall(second, 1, p)?;
    out.push(check(
        VARIANT_CHECKS[1],
        r2.outcome.matched_memory() == Some(2),
        r2.outcome.to_string(),
    ));
    let (pseudo, r2_mems) = lane_recall(second, -1, p)?;
    let o = &pseudo.outcome;
    let positions = differing_positions(&pseudo.final_state, &r2_mems[o.nearest - 1]);
    let hit = o.kind == OutcomeKind::PseudoMemory
        && o.nearest == 3
        && o.nearest_polarity == Polarity::Positive
        && positions == [4];
    out.push(check(
        VARIANT_CHECKS[2],
        hit,
        format!("{o}, positions {positions:?}"),
    ));
    out.push(check(
        VARIANT_CHECKS[3],
        pseudo.final_state == reference::PRINTED_PSEUDO_MEMORY,
        format!("{:?}", pseudo.final_state),
    ));

    let res = run_interplay(
        &reference::geometry(),
        &reference::r_mems(),
        (first - 1, second - 1),
        reference::INTERPLAY_INITS,
        *p,
        0,
    );
    match res {
        Ok(res) => {
            let rounds = res.reported_rounds(p.round_counting);
            out.push(check(
                VARIANT_CHECKS[4],
                res.agreement && res.rounds < 20,
                format!("{} rounds, agreement {}", res.rounds, res.agreement),
            ));
            out.push(check(
                VARIANT_CHECKS[5],
                rounds == reference::INTERPLAY_ROUNDS,
                format!("{rounds} rounds ({})", p.round_counting),
            ));
            let target = reference::r_mems()
                .get(reference::INTERPLAY_TARGET - 1)
                .to_vec();
            let errors = res.errors_against(&target);
            let e = reference::INTERPLAY_ERROR_NEURON;
            out.push(check(
                VARIANT_CHECKS[6],
                errors[0] == [e] && errors[1] == [e],
                format!("wrong neurons {:?} / {:?}", errors[0], errors[1]),
            ));
            let last = &reference::PRINTED_TRACE[reference::INTERPLAY_ROUNDS];
            let finals_match = res.lane_finals[0] == last[0] && res.lane_finals[1] == last[1];
            out.push(check(
                VARIANT_CHECKS[7],
                finals_match,
                format!("{:?} / {:?}", res.lane_finals[0], res.lane_finals[1]),
            ));
        }
        Err(e) => {
            for id in &VARIANT_CHECKS[4..] {
                out.push(check(id, false, e.to_string()));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantScore {
    pub rank: usize,
    pub policies: Policies,
    pub score: usize,
    pub out_of: usize,
    /// Policy fields that differ from the defaults.
    pub departures: usize,
    pub checks: Vec<CheckResult>,
}

fn departures(p: &Policies) -> usize {
    let d = Policies::default();
    [
        p.sign != d.sign,
        p.window != d.window,
        p.conflict != d.conflict,
        p.lane_order != d.lane_order,
        p.visibility != d.visibility,
        p.blocked != d.blocked,
        p.round_counting != d.round_counting,
    ]
    .into_iter()
    .filter(|&x| x)
    .count()
}

/// Scores every combination by how many checks it passes (plus `baseline`
/// policy-independent passes out of `baseline_of`). Ranked by score, then
/// by fewest departures from the defaults, then grid order.
pub fn variant_search(
    grid: &VariantGrid,
    baseline: usize,
    baseline_of: usize,
) -> Result<Vec<VariantScore>> {
    let mut scored = Vec::new();
    for p in grid.combinations() {
        let checks = evaluate_variant(&p)?;
        let score = baseline + checks.iter().filter(|c| c.passed).count();
        scored.push(VariantScore {
            rank: 0,
            policies: p,
            score,
            out_of: baseline_of + checks.len(),
            departures: departures(&p),
            checks,
        });
    }
    // stable sort keeps grid order among ties
    scored.sort_by(|a, b| b.score.cmp(&a.score).then(a.departures.cmp(&b.departures)));
    for (i, s) in scored.iter_mut().enumerate() {
        s.rank = i + 1;
    }
    Ok(scored)
}
