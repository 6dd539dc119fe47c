//! Strategies and property bodies shared by the proptest suite and the
//! acceptance runner.
#![allow(dead_code)]

use bmatrix_interplay::interplay::{run_interplay, LaneAction};
use bmatrix_interplay::memory::{
    b_matrix, generate_memories, hebbian_weights, permute_memories, permute_weights, MemorySet,
};
use bmatrix_interplay::policy::{
    BlockedHandling, ConflictPolicy, LaneOrder, Policies, SignPolicy, UpdateWindow, Visibility,
};
use bmatrix_interplay::recall::{single_recall, OutcomeKind, Polarity};
use bmatrix_interplay::topology::{
    distance_matrix, generate_geometry, proximity_permutation, CoordRange, Permutation,
};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub const CASES: u32 = 1000;

type Check = std::result::Result<(), TestCaseError>;

fn bipolar() -> impl Strategy<Value = i8> {
    prop::sample::select(vec![-1i8, 1])
}

pub fn permutation(n: usize) -> impl Strategy<Value = Permutation> {
    Just((0..n).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_map(|v| Permutation::from_order(v).unwrap())
}

pub fn memories() -> impl Strategy<Value = MemorySet> {
    (2usize..24, 1usize..7)
        .prop_flat_map(|(n, m)| prop::collection::vec(prop::collection::vec(bipolar(), n), m))
        .prop_map(|v| MemorySet::new(v).unwrap())
}

pub fn memories_and_permutation() -> impl Strategy<Value = (MemorySet, Permutation)> {
    memories().prop_flat_map(|m| {
        let n = m.n();
        (Just(m), permutation(n))
    })
}

pub fn policies() -> impl Strategy<Value = Policies> {
    (
        prop::sample::select(vec![
            SignPolicy::ZeroToPositive,
            SignPolicy::ZeroToNegative,
            SignPolicy::ZeroToCoin,
        ]),
        prop::sample::select(vec![UpdateWindow::StrictLower, UpdateWindow::FullRow]),
        prop::sample::select(vec![LaneOrder::FirstThenSecond, LaneOrder::SecondThenFirst]),
        prop::sample::select(vec![Visibility::SameRound, Visibility::NextRound]),
        prop::sample::select(vec![
            BlockedHandling::SkipRound,
            BlockedHandling::SkipAndAdvance,
            BlockedHandling::PumpOther,
        ]),
        prop::sample::select(vec![
            ConflictPolicy::FirstWriterWins,
            ConflictPolicy::OwnLanePriority,
            ConflictPolicy::FairRandomDraw,
        ]),
    )
        .prop_map(
            |(sign, window, lane_order, visibility, blocked, conflict)| Policies {
                sign,
                window,
                lane_order,
                visibility,
                blocked,
                conflict,
                ..Policies::default()
            },
        )
}

pub fn weights_symmetric_zero_diagonal(mems: MemorySet) -> Check {
    let t = hebbian_weights(&mems);
    prop_assert!(t.check_symmetric_zero_diagonal().is_ok());
    for i in 0..t.n() {
        for j in 0..t.n() {
            // direct sum of outer products
            let direct: i32 = if i == j {
                0
            } else {
                mems.vectors().iter().map(|x| (x[i] * x[j]) as i32).sum()
            };
            prop_assert_eq!(t.get(i, j), direct);
        }
    }
    Ok(())
}

pub fn lower_plus_transpose(mems: MemorySet) -> Check {
    let t = hebbian_weights(&mems);
    let b = b_matrix(&t).unwrap();
    prop_assert_eq!(b.symmetrize(), t);
    for i in 0..b.n() {
        for j in i..b.n() {
            prop_assert_eq!(b.get(i, j), 0);
        }
    }
    Ok(())
}

pub fn hebbian_commutes((mems, p): (MemorySet, Permutation)) -> Check {
    let lhs = hebbian_weights(&permute_memories(&mems, &p).unwrap());
    let rhs = permute_weights(&hebbian_weights(&mems), &p).unwrap();
    prop_assert_eq!(lhs, rhs);
    Ok(())
}

pub fn permutation_round_trip_strategy() -> impl Strategy<Value = (Permutation, i64)> {
    ((1usize..40).prop_flat_map(permutation), any::<i64>())
}

pub fn permutation_round_trip((p, salt): (Permutation, i64)) -> Check {
    let v: Vec<i64> = (0..p.len() as i64)
        .map(|i| i.wrapping_mul(31).wrapping_add(salt))
        .collect();
    prop_assert_eq!(p.unapply(&p.apply(&v)), v.clone());
    prop_assert_eq!(p.inverse().apply(&p.apply(&v)), v);
    for pos in 0..p.len() {
        prop_assert_eq!(p.position_of(p.neuron_at(pos)), pos);
    }
    Ok(())
}

pub fn proximity_strategy() -> impl Strategy<Value = (u64, usize, f64)> {
    (any::<u64>(), 2usize..40, 0.0f64..1.0)
}

pub fn proximity_sorted_bijection((seed, n, start_frac): (u64, usize, f64)) -> Check {
    let g = generate_geometry(seed, n, CoordRange::new(0, 9)).unwrap();
    let d = distance_matrix(&g);
    let start = ((start_frac * n as f64) as usize).min(n - 1);
    let p = proximity_permutation(&d, start).unwrap();
    let mut seen = p.order().to_vec();
    seen.sort_unstable();
    prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
    prop_assert_eq!(p.start(), start);
    for w in p.order()[1..].windows(2) {
        let (a, b) = (d.squared(start, w[0]), d.squared(start, w[1]));
        prop_assert!(a < b || (a == b && w[0] < w[1]));
    }
    Ok(())
}

pub fn single_pattern_strategy() -> impl Strategy<Value = (Vec<i8>, bool, Policies, u64)> {
    (
        (2usize..30).prop_flat_map(|n| prop::collection::vec(bipolar(), n)),
        any::<bool>(),
        policies(),
        any::<u64>(),
    )
}

pub fn single_pattern_exact((x, flip, p, seed): (Vec<i8>, bool, Policies, u64)) -> Check {
    let mems = MemorySet::new(vec![x.clone()]).unwrap();
    let b = b_matrix(&hebbian_weights(&mems)).unwrap();
    let init = if flip { -x[0] } else { x[0] };
    let res = single_recall(&b, &mems, init, &p, seed).unwrap();
    let expected: Vec<i8> = if flip {
        x.iter().map(|v| -v).collect()
    } else {
        x
    };
    prop_assert_eq!(&res.final_state, &expected);
    let polarity = if flip {
        Polarity::Negative
    } else {
        Polarity::Positive
    };
    prop_assert_eq!(
        res.outcome.kind,
        OutcomeKind::ExactMatch {
            memory: 1,
            polarity
        }
    );
    Ok(())
}

pub fn recall_strategy() -> impl Strategy<Value = (u64, usize, usize, i8, Policies)> {
    (any::<u64>(), 2usize..30, 1usize..6, bipolar(), policies())
}

/// Each round clamps exactly one new position and never rewrites an
/// earlier one.
pub fn clamping_monotone((seed, n, m, init, p): (u64, usize, usize, i8, Policies)) -> Check {
    let mems = generate_memories(seed, m, n).unwrap();
    let b = b_matrix(&hebbian_weights(&mems)).unwrap();
    let res = single_recall(&b, &mems, init, &p, seed).unwrap();
    let mut prev = res.initial.clone();
    for (k, step) in res.trace.iter().enumerate() {
        prop_assert_eq!(step.state.clamped_count(), prev.clamped_count() + 1);
        prop_assert_eq!(step.new_position, k + 2);
        for q in 0..n {
            if prev.is_clamped(q) {
                prop_assert_eq!(step.state.get(q), prev.get(q));
            }
        }
        prev = step.state.clone();
    }
    Ok(())
}

pub fn final_zero_free((seed, n, m, init, p): (u64, usize, usize, i8, Policies)) -> Check {
    let mems = generate_memories(seed, m, n).unwrap();
    let b = b_matrix(&hebbian_weights(&mems)).unwrap();
    let res = single_recall(&b, &mems, init, &p, seed).unwrap();
    prop_assert_eq!(res.final_state.len(), n);
    prop_assert!(res.final_state.iter().all(|&v| v == 1 || v == -1));
    Ok(())
}

pub type InterplayCase = (u64, usize, usize, (i8, i8), Policies, (f64, f64));

pub fn interplay_strategy() -> impl Strategy<Value = InterplayCase> {
    (
        any::<u64>(),
        3usize..24,
        1usize..5,
        (bipolar(), bipolar()),
        policies(),
        (0.0f64..1.0, 0.0f64..1.0),
    )
}

pub fn interplay_invariants((seed, n, m, inits, policies, pick): InterplayCase) -> Check {
    let g = generate_geometry(seed, n, CoordRange::new(0, 9)).unwrap();
    let mems = generate_memories(seed ^ 0x5555, m, n).unwrap();
    let a = ((pick.0 * n as f64) as usize).min(n - 1);
    let b = (a + 1 + ((pick.1 * (n - 1) as f64) as usize).min(n - 2)) % n;
    let res = run_interplay(&g, &mems, (a, b), inits, policies, seed).unwrap();

    prop_assert!(res.rounds <= 2 * n);
    let mut prev = res.initial.clone();
    for r in &res.trace {
        for lane in 0..2 {
            if let LaneAction::Clamped { position, .. } = &r.actions[lane] {
                prop_assert!(!prev[lane].is_clamped(position - 1));
            }
            prop_assert!(r.states[lane].clamped_count() >= prev[lane].clamped_count());
        }
        prev = r.states.clone();
    }
    for lane in 0..2 {
        prop_assert!(res.lane_finals[lane].iter().all(|&v| v == 1 || v == -1));
    }
    if policies.conflict == ConflictPolicy::FirstWriterWins {
        prop_assert!(res.agreement);
    }
    Ok(())
}
