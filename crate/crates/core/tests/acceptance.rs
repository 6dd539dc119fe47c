//! Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

mod common;

use std::time::{Duration, Instant};

use bmatrix_interplay::experiment::{
    derive_seed, replay_reference_trial, run_batch, statistics_json, ExperimentConfig, ItemStatus,
    Mode, VariantGrid,
};
use bmatrix_interplay::fixture::{curate_row, reference, RowCuration};
use bmatrix_interplay::interplay::{resolve_conflict, run_interplay, Stamp, Winner, Write};
use bmatrix_interplay::memory::permute_memories;
use bmatrix_interplay::policy::{ConflictPolicy, Policies};
use bmatrix_interplay::topology::{distance_matrix, proximity_permutation, select_stimulus_pair};
use proptest::strategy::Strategy;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn criterion_1() -> Verdict {
    let d = distance_matrix(&reference::geometry());
    let pi1 = proximity_permutation(&d, 1).unwrap().labels();
    let pi2 = proximity_permutation(&d, 2).unwrap().labels();
    let hits1 = pi1
        .iter()
        .zip(reference::PI_X1)
        .filter(|(a, b)| **a == *b)
        .count();
    let hits2 = pi2
        .iter()
        .zip(reference::PI_X2)
        .filter(|(a, b)| **a == *b)
        .count();
    // neurons 17 and 20 sit at squared distance 13 from neuron 2
    let tie = d.squared(1, 16) == 13 && d.squared(1, 19) == 13;
    let p17 = pi1.iter().position(|&x| x == 17);
    let p20 = pi1.iter().position(|&x| x == 20);
    let pass = hits1 == 20 && hits2 == 20 && tie && p17 < p20;
    verdict(
        pass,
        format!(
            "pi_x1 {hits1}/20, pi_x2 {hits2}/20, tie 17<20 {}",
            tie && p17 < p20
        ),
    )
}

fn criterion_2() -> Verdict {
    let pair = select_stimulus_pair(&reference::geometry()).labels();
    verdict(pair == (2, 3), format!("pair {pair:?}"))
}

fn criterion_3() -> Verdict {
    let mems = reference::r_mems();
    let r1 = permute_memories(&mems, &reference::pi_x1()).unwrap();
    let r2 = permute_memories(&mems, &reference::pi_x2()).unwrap();
    let mut r1_hits = 0;
    for (p, d) in reference::PRINTED_R1_MEMS.iter().zip(r1.vectors()) {
        r1_hits += p.iter().zip(d).filter(|(a, b)| a == b).count();
    }
    let r1_ok = r1_hits == 60;
    let mut r2_ok = true;
    let mut notes = Vec::new();
    for (k, (p, d)) in reference::PRINTED_R2_MEMS
        .iter()
        .zip(r2.vectors())
        .enumerate()
    {
        match (p.len(), curate_row(p, d)) {
            (20, RowCuration::Exact) => {}
            (21, RowCuration::SpuriousEntry { candidates }) => {
                notes.push(format!("row {} spurious in {:?}", k + 1, candidates));
            }
            (_, other) => {
                r2_ok = false;
                notes.push(format!("row {} {:?}", k + 1, other));
            }
        }
    }
    verdict(
        r1_ok && r2_ok,
        format!(
            "r1Mems {r1_hits}/60 entries; r2Mems {}; {}",
            if r2_ok { "ok" } else { "mismatch" },
            notes.join(", ")
        ),
    )
}

fn run_property<S: Strategy>(
    name: &str,
    strategy: S,
    check: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases: common::CASES,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&strategy, check)
        .map_err(|e| format!("{name}: {e}"))
}

fn criterion_4() -> Verdict {
    let results = [
        run_property(
            "T symmetric/zero diagonal",
            common::memories(),
            common::weights_symmetric_zero_diagonal,
        ),
        run_property(
            "B + Bt = T",
            common::memories(),
            common::lower_plus_transpose,
        ),
        run_property(
            "commutation",
            common::memories_and_permutation(),
            common::hebbian_commutes,
        ),
        run_property(
            "permutation round trip",
            common::permutation_round_trip_strategy(),
            common::permutation_round_trip,
        ),
        run_property(
            "proximity bijection",
            common::proximity_strategy(),
            common::proximity_sorted_bijection,
        ),
        run_property(
            "single pattern",
            common::single_pattern_strategy(),
            common::single_pattern_exact,
        ),
        run_property(
            "clamping monotone",
            common::recall_strategy(),
            common::clamping_monotone,
        ),
        run_property(
            "zero-free finals",
            common::recall_strategy(),
            common::final_zero_free,
        ),
        run_property(
            "interplay",
            common::interplay_strategy(),
            common::interplay_invariants,
        ),
    ];
    let failures: Vec<String> = results.into_iter().filter_map(Result::err).collect();
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            format!("9 properties x {} cases, no violations", common::CASES)
        } else {
            failures.join("; ")
        },
    )
}

fn criterion_5() -> Verdict {
    let report = replay_reference_trial(&VariantGrid::default()).unwrap();
    let ids = [
        "r1-recall-plus-memory-3",
        "r2-recall-plus-memory-2",
        "r2-recall-minus-pseudo-memory",
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for id in ids {
        let item = report.item(id).unwrap();
        pass &= item.status != ItemStatus::NotReproduced;
        parts.push(format!(
            "{id} {} ({} variants)",
            item.status, item.reproducing_variants
        ));
    }
    verdict(pass, parts.join("; "))
}

fn criterion_6() -> Verdict {
    let (a, b) = reference::PAIR;
    let res = run_interplay(
        &reference::geometry(),
        &reference::r_mems(),
        (a - 1, b - 1),
        reference::INTERPLAY_INITS,
        Policies::default(),
        0,
    )
    .unwrap();
    let complete = res
        .trace
        .last()
        .is_some_and(|r| r.states.iter().all(|s| s.is_complete()));
    let pass = complete && res.rounds < 20 && res.agreement;
    let report = replay_reference_trial(&VariantGrid::default()).unwrap();
    let twelve = report.item("interplay-twelve-rounds").unwrap();
    let thirteen = report.item("interplay-neuron-13-error").unwrap();
    verdict(
        pass,
        format!(
            "complete {complete}, {} rounds ({} active), agreement {}; 12 rounds {}, neuron-13 error {}",
            res.rounds, res.active_rounds, res.agreement, twelve.status, thirteen.status
        ),
    )
}

fn criterion_7() -> Verdict {
    let conflicts = 10_000u64;
    let existing = Write {
        value: 1,
        stamp: Stamp { round: 1, slot: 0 },
        lane: 0,
    };
    let incoming = Write {
        value: -1,
        stamp: Stamp { round: 1, slot: 1 },
        lane: 1,
    };
    let wins = (0..conflicts)
        .filter(|&i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(2024, i));
            resolve_conflict(ConflictPolicy::FairRandomDraw, existing, incoming, &mut rng).winner
                == Winner::Incoming
        })
        .count();
    let freq = wins as f64 / conflicts as f64;
    verdict(
        (freq - 0.5).abs() <= 0.05,
        format!("incoming wins {freq:.4} over {conflicts} conflicts"),
    )
}

fn criterion_8() -> Verdict {
    let cfg = ExperimentConfig {
        trials: 1000,
        master_seed: 20,
        mode: Mode::Single,
        ..ExperimentConfig::default()
    };
    let start = Instant::now();
    let base = run_batch(&cfg, Some(1)).unwrap();
    let elapsed = start.elapsed();
    let reference = statistics_json(&base.statistics);
    let identical = [Some(2), Some(8), None]
        .into_iter()
        .all(|t| statistics_json(&run_batch(&cfg, t).unwrap().statistics) == reference);
    let rate = base.statistics.pseudo_memory_rate;
    let pass = identical && elapsed < Duration::from_secs(60) && rate > 0.0 && rate < 0.5;
    verdict(
        pass,
        format!(
            "1000 trials in {:.2}s, pseudo-memory rate {rate:.4}, mean Hamming {:.3}, identical across threads {identical}",
            elapsed.as_secs_f64(),
            base.statistics.mean_pseudo_hamming.unwrap_or(0.0)
        ),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("geometry to permutations", criterion_1),
        ("stimulus pair", criterion_2),
        ("memory permutation consistency", criterion_3),
        ("algebraic invariants", criterion_4),
        ("recall outcomes", criterion_5),
        ("interplay structure", criterion_6),
        ("fair conflict draw", criterion_7),
        ("determinism and batch", criterion_8),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let v = run();
        failed += usize::from(!v.pass);
        println!(
            "criterion {} {:<32} {} [{:.2}s] {}",
            k + 1,
            name,
            if v.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            v.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
