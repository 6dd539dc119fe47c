use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, Mode};
use super::derive_seed;
use crate::error::{Error, Result};
use crate::interplay::run_interplay;
use crate::memory::{
    b_matrix, generate_memories_with, hebbian_weights, permute_memories, MemorySet, WeightMatrix,
};
use crate::recall::{
    classify_outcome, hopfield_sync_recall, single_recall, OutcomeClass, OutcomeKind, Polarity,
};
use crate::topology::{
    distance_matrix, generate_geometry_with, proximity_permutation, select_stimulus_pair,
    NetworkGeometry,
};

const HOPFIELD_MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TrialOutcome {
    ExactMatch { memory: usize, polarity: Polarity },
    PseudoMemory { hamming: usize, nearest: usize },
}

impl TrialOutcome {
    pub fn is_pseudo(&self) -> bool {
        matches!(self, TrialOutcome::PseudoMemory { .. })
    }
}

impl From<&OutcomeClass> for TrialOutcome {
    fn from(c: &OutcomeClass) -> Self {
        match c.kind {
            OutcomeKind::ExactMatch { memory, polarity } => {
                TrialOutcome::ExactMatch { memory, polarity }
            }
            OutcomeKind::PseudoMemory => TrialOutcome::PseudoMemory {
                hamming: c.nearest_distance,
                nearest: c.nearest,
            },
        }
    }
}

/// One recall (or one lane of an interplay run) inside a trial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    /// 1-based lane of the stimulus pair.
    pub lane: usize,
    /// 1-based start neuron of that lane.
    pub start: usize,
    pub init: i8,
    /// Memory whose entries supplied the interplay stimuli.
    pub target: Option<usize>,
    pub outcome: TrialOutcome,
    pub rounds: usize,
    pub conflicts: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineRecord {
    pub outcome: TrialOutcome,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    /// SHA-256 of the geometry JSON, first 16 hex digits.
    pub geometry_digest: String,
    /// 1-based.
    pub pair: (usize, usize),
    pub degenerate: bool,
    pub runs: Vec<RunRecord>,
    pub baseline: Vec<BaselineRecord>,
}

impl TrialRecord {
    pub fn pseudo_count(&self) -> usize {
        self.runs.iter().filter(|r| r.outcome.is_pseudo()).count()
    }
}

pub fn geometry_digest(geom: &NetworkGeometry) -> String {
    let json = serde_json::to_vec(geom).expect("geometry serializes");
    let hash = Sha256::digest(json);
    hash[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Distinct values the stored memories take at `neuron`, ascending.
fn consistent_inits(mems: &MemorySet, neuron: usize) -> Vec<i8> {
    let mut v: Vec<i8> = mems.vectors().iter().map(|x| x[neuron]).collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn baseline_run(
    t: &WeightMatrix,
    mems: &MemorySet,
    cue: &[i8],
    cfg: &ExperimentConfig,
    rng: &mut ChaCha8Rng,
) -> Result<BaselineRecord> {
    let run = hopfield_sync_recall(t, cue, cfg.policies.sign, HOPFIELD_MAX_ITERATIONS, rng);
    Ok(BaselineRecord {
        outcome: (&classify_outcome(&run.final_state, mems)?).into(),
        converged: run.converged,
        iterations: run.iterations,
    })
}

/// One end-to-end sample: geometry, memories, stimulus pair, then the
/// configured recall mode for every memory-consistent stimulus.
pub fn run_trial(cfg: &ExperimentConfig, index: usize, seed: u64) -> Result<TrialRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let geom = generate_geometry_with(&mut rng, cfg.n, cfg.range)?;
    let mems = generate_memories_with(&mut rng, cfg.m, cfg.n)?;
    let mut baseline_rng = ChaCha8Rng::seed_from_u64(seed);
    baseline_rng.set_stream(1);

    let pair = select_stimulus_pair(&geom);
    let degenerate = pair.is_degenerate();
    let t = hebbian_weights(&mems);
    let mut runs = Vec::new();
    let mut baseline = Vec::new();
    let mut sub = 0u64;
    let mut next_seed = || {
        sub += 1;
        derive_seed(seed, sub)
    };

    match cfg.mode {
        Mode::Single => {
            let d = distance_matrix(&geom);
            let starts: Vec<usize> = if degenerate {
                vec![pair.first]
            } else {
                vec![pair.first, pair.second]
            };
            for (lane, &start) in starts.iter().enumerate() {
                let perm = proximity_permutation(&d, start)?;
                let permuted = permute_memories(&mems, &perm)?;
                let b = b_matrix(&hebbian_weights(&permuted))?;
                for init in consistent_inits(&mems, start) {
                    let res = single_recall(&b, &permuted, init, &cfg.policies, next_seed())?;
                    runs.push(RunRecord {
                        lane: lane + 1,
                        start: start + 1,
                        init,
                        target: None,
                        outcome: (&res.outcome).into(),
                        rounds: res.trace.len(),
                        conflicts: 0,
                    });
                    if cfg.hopfield_baseline {
                        let mut cue = vec![0i8; cfg.n];
                        cue[start] = init;
                        baseline.push(baseline_run(&t, &mems, &cue, cfg, &mut baseline_rng)?);
                    }
                }
            }
        }
        Mode::Interplay if !degenerate => {
            let (a, b) = (pair.first, pair.second);
            for k in 0..mems.m() {
                let x = mems.get(k);
                let inits = (x[a], x[b]);
                let res = run_interplay(&geom, &mems, (a, b), inits, cfg.policies, next_seed())?;
                let rounds = res.reported_rounds(cfg.policies.round_counting);
                for lane in 0..2 {
                    runs.push(RunRecord {
                        lane: lane + 1,
                        start: [a, b][lane] + 1,
                        init: [inits.0, inits.1][lane],
                        target: Some(k + 1),
                        outcome: (&res.outcomes[lane]).into(),
                        rounds,
                        conflicts: res.conflicts,
                    });
                }
                if cfg.hopfield_baseline {
                    let mut cue = vec![0i8; cfg.n];
                    cue[a] = inits.0;
                    cue[b] = inits.1;
                    baseline.push(baseline_run(&t, &mems, &cue, cfg, &mut baseline_rng)?);
                }
            }
        }
        Mode::Interplay => {}
    }

    Ok(TrialRecord {
        index,
        seed,
        geometry_digest: geometry_digest(&geom),
        pair: pair.labels(),
        degenerate,
        runs,
        baseline,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BaselineStatistics {
    pub runs: usize,
    pub exact_matches: usize,
    pub pseudo_memories: usize,
    pub non_converged: usize,
    pub exact_match_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statistics {
    pub config: ExperimentConfig,
    pub trials: usize,
    pub degenerate_trials: usize,
    pub runs: usize,
    pub exact_matches: usize,
    pub pseudo_memories: usize,
    pub exact_match_rate: f64,
    pub pseudo_memory_rate: f64,
    pub trials_with_pseudo_memory: usize,
    pub mean_pseudo_hamming: Option<f64>,
    pub pseudo_hamming_histogram: BTreeMap<usize, usize>,
    pub round_histogram: BTreeMap<usize, usize>,
    pub conflict_events: usize,
    pub runs_with_conflicts: usize,
    pub baseline: Option<BaselineStatistics>,
}

fn rate(k: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        k as f64 / n as f64
    }
}

/// Folds trial records into summary statistics. Only integer counts are
/// accumulated, so the result does not depend on record order.
pub fn aggregate(cfg: &ExperimentConfig, records: &[TrialRecord]) -> Statistics {
    let mut s = Statistics {
        config: cfg.clone(),
        trials: records.len(),
        degenerate_trials: 0,
        runs: 0,
        exact_matches: 0,
        pseudo_memories: 0,
        exact_match_rate: 0.0,
        pseudo_memory_rate: 0.0,
        trials_with_pseudo_memory: 0,
        mean_pseudo_hamming: None,
        pseudo_hamming_histogram: BTreeMap::new(),
        round_histogram: BTreeMap::new(),
        conflict_events: 0,
        runs_with_conflicts: 0,
        baseline: None,
    };
    let mut hamming_sum = 0usize;
    let mut base = BaselineStatistics::default();
    for r in records {
        s.degenerate_trials += usize::from(r.degenerate);
        s.trials_with_pseudo_memory += usize::from(r.pseudo_count() > 0);
        for run in &r.runs {
            s.runs += 1;
            *s.round_histogram.entry(run.rounds).or_default() += 1;
            match run.outcome {
                TrialOutcome::ExactMatch { .. } => s.exact_matches += 1,
                TrialOutcome::PseudoMemory { hamming, .. } => {
                    s.pseudo_memories += 1;
                    hamming_sum += hamming;
                    *s.pseudo_hamming_histogram.entry(hamming).or_default() += 1;
                }
            }
        }
        // interplay records carry the run's conflicts on both lanes
        for run in r.runs.iter().filter(|run| run.lane == 1) {
            s.conflict_events += run.conflicts;
            s.runs_with_conflicts += usize::from(run.conflicts > 0);
        }
        for b in &r.baseline {
            base.runs += 1;
            base.non_converged += usize::from(!b.converged);
            match b.outcome {
                TrialOutcome::ExactMatch { .. } => base.exact_matches += 1,
                TrialOutcome::PseudoMemory { .. } => base.pseudo_memories += 1,
            }
        }
    }
    s.exact_match_rate = rate(s.exact_matches, s.runs);
    s.pseudo_memory_rate = rate(s.pseudo_memories, s.runs);
    if s.pseudo_memories > 0 {
        s.mean_pseudo_hamming = Some(rate(hamming_sum, s.pseudo_memories));
    }
    if cfg.hopfield_baseline {
        base.exact_match_rate = rate(base.exact_matches, base.runs);
        s.baseline = Some(base);
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutput {
    pub records: Vec<TrialRecord>,
    pub statistics: Statistics,
}

/// Runs every trial, in parallel when `threads` allows. `None` uses the
/// global rayon pool.
pub fn run_batch(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<BatchOutput> {
    cfg.validate()?;
    let work = || -> Result<Vec<TrialRecord>> {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| run_trial(cfg, i, derive_seed(cfg.master_seed, i as u64)))
            .collect()
    };
    let records = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let statistics = aggregate(cfg, &records);
    Ok(BatchOutput {
        records,
        statistics,
    })
}

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    trial: usize,
    seed: u64,
    geometry_digest: &'a str,
    pair_first: usize,
    pair_second: usize,
    degenerate: bool,
    runs: usize,
    exact: usize,
    pseudo: usize,
    min_pseudo_hamming: Option<usize>,
    max_rounds: usize,
    conflicts: usize,
    baseline_exact: usize,
}

/// One row per trial.
pub fn write_trials_csv<W: std::io::Write>(out: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
    for r in records {
        let hammings = r.runs.iter().filter_map(|run| match run.outcome {
            TrialOutcome::PseudoMemory { hamming, .. } => Some(hamming),
            TrialOutcome::ExactMatch { .. } => None,
        });
        w.serialize(CsvRow {
            trial: r.index + 1,
            seed: r.seed,
            geometry_digest: &r.geometry_digest,
            pair_first: r.pair.0,
            pair_second: r.pair.1,
            degenerate: r.degenerate,
            runs: r.runs.len(),
            exact: r.runs.len() - r.pseudo_count(),
            pseudo: r.pseudo_count(),
            min_pseudo_hamming: hammings.min(),
            max_rounds: r.runs.iter().map(|run| run.rounds).max().unwrap_or(0),
            conflicts: r
                .runs
                .iter()
                .filter(|run| run.lane == 1)
                .map(|run| run.conflicts)
                .sum(),
            baseline_exact: r.baseline.iter().filter(|b| !b.outcome.is_pseudo()).count(),
        })
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Invalid(format!("csv: {e}")))?;
    Ok(())
}

/// Pretty JSON with a trailing newline; the exact bytes compared across
/// thread counts.
pub fn statistics_json(s: &Statistics) -> String {
    let mut text = serde_json::to_string_pretty(s).expect("statistics serialize");
    text.push('\n');
    text
}

pub fn write_records_jsonl<W: std::io::Write>(mut out: W, records: &[TrialRecord]) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::Invalid(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Error::Invalid(e.to_string()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::Policies;
    use crate::topology::CoordRange;

    fn cfg(trials: usize) -> ExperimentConfig {
        ExperimentConfig {
            trials,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn trials_are_reproducible() {
        let c = cfg(1);
        let a = run_trial(&c, 0, 99).unwrap();
        let b = run_trial(&c, 0, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.geometry_digest.len(), 16);
    }

    #[test]
    fn single_memory_is_always_recalled() {
        for mode in [Mode::Single, Mode::Interplay] {
            let c = ExperimentConfig {
                m: 1,
                mode,
                ..cfg(20)
            };
            let out = run_batch(&c, Some(2)).unwrap();
            assert_eq!(out.statistics.pseudo_memories, 0, "{mode:?}");
            assert!(out.statistics.runs > 0);
        }
    }

    #[test]
    fn one_trial_statistics_mirror_the_record() {
        let c = cfg(1);
        let out = run_batch(&c, None).unwrap();
        let r = &out.records[0];
        assert_eq!(out.statistics.runs, r.runs.len());
        assert_eq!(out.statistics.pseudo_memories, r.pseudo_count());
        assert_eq!(r.seed, derive_seed(0, 0));
    }

    #[test]
    fn statistics_ignore_record_order() {
        let c = ExperimentConfig {
            mode: Mode::Interplay,
            ..cfg(30)
        };
        let out = run_batch(&c, Some(1)).unwrap();
        let mut rev = out.records.clone();
        rev.reverse();
        assert_eq!(
            statistics_json(&aggregate(&c, &rev)),
            statistics_json(&out.statistics)
        );
    }

    #[test]
    fn interplay_agrees_under_first_writer_wins() {
        let c = ExperimentConfig {
            mode: Mode::Interplay,
            policies: Policies::default(),
            ..cfg(25)
        };
        for r in run_batch(&c, None).unwrap().records {
            for pair in r.runs.chunks(2) {
                assert_eq!(pair[0].outcome, pair[1].outcome);
            }
        }
    }

    #[test]
    fn exhausted_geometry_propagates() {
        let c = ExperimentConfig {
            n: 2,
            range: CoordRange::new(0, 0),
            ..cfg(1)
        };
        assert!(matches!(
            run_trial(&c, 0, 1),
            Err(Error::RetryExhausted { .. })
        ));
    }

    #[test]
    fn csv_has_one_row_per_trial() {
        let out = run_batch(&cfg(3), None).unwrap();
        let mut buf = Vec::new();
        write_trials_csv(&mut buf, &out.records).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("trial,seed,geometry_digest"));
    }
}
