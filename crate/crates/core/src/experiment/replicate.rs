use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::variants::{variant_search, VariantGrid, VariantScore, VARIANT_CHECKS};
use crate::error::Result;
use crate::fixture::{curate_row, reference, RowCuration};
use crate::interplay::run_interplay;
use crate::memory::{permute_memories, MemorySet};
use crate::policy::{Policies, RoundCounting};
use crate::topology::{distance_matrix, proximity_permutation, select_stimulus_pair, Permutation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ItemStatus {
    Reproduced,
    ReproducedUnderVariant,
    NotReproduced,
}

impl std::fmt::Display for ItemStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ItemStatus::Reproduced => "reproduced",
            ItemStatus::ReproducedUnderVariant => "reproduced-under-variant",
            ItemStatus::NotReproduced => "not-reproduced",
        })
    }
}

/// Exact items do not depend on the dynamics conventions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    Exact,
    Dynamics,
}

/// A printed row that differs from its derived counterpart.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurationNote {
    pub artifact: String,
    /// 1-based row.
    pub row: usize,
    pub printed_len: usize,
    pub curation: RowCuration,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChecklistItem {
    pub id: String,
    pub tier: Tier,
    pub status: ItemStatus,
    /// Conventions under which the status was obtained.
    pub policies: Policies,
    /// Number of grid combinations that reproduce the item.
    pub reproducing_variants: usize,
    pub observed: String,
    pub curation: Vec<CurationNote>,
}

/// One printed interplay row next to the simulated state it should match.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRow {
    pub printed_round: usize,
    /// 1-based lane.
    pub lane: usize,
    /// Executed round the printed row was compared with; 0 is the initial
    /// state.
    pub simulated_round: Option<usize>,
    pub printed_len: usize,
    pub curation: Option<RowCuration>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub items: Vec<ChecklistItem>,
    pub trace: Vec<TraceRow>,
    pub variants: Vec<VariantScore>,
    pub exact_tier_ok: bool,
}

fn exact_item(id: &str, ok: bool, observed: String, curation: Vec<CurationNote>) -> ChecklistItem {
    ChecklistItem {
        id: id.to_string(),
        tier: Tier::Exact,
        status: if ok {
            ItemStatus::Reproduced
        } else {
            ItemStatus::NotReproduced
        },
        policies: Policies::default(),
        reproducing_variants: 0,
        observed,
        curation,
    }
}

fn permutation_item(id: &str, computed: &Permutation, printed: &[usize]) -> ChecklistItem {
    let labels = computed.labels();
    let hits = labels.iter().zip(printed).filter(|(a, b)| a == b).count();
    exact_item(
        id,
        labels == printed,
        format!("{hits}/{} positions", printed.len()),
        Vec::new(),
    )
}

fn consistency_item(
    id: &str,
    artifact: &str,
    printed: &[&[i8]],
    derived: &MemorySet,
) -> ChecklistItem {
    let mut notes = Vec::new();
    let mut hits = 0;
    let mut total = 0;
    for (k, (p, d)) in printed.iter().zip(derived.vectors()).enumerate() {
        let c = curate_row(p, d);
        if p.len() == d.len() {
            hits += p.iter().zip(d).filter(|(a, b)| a == b).count();
            total += d.len();
        }
        if !c.is_exact() {
            notes.push(CurationNote {
                artifact: artifact.to_string(),
                row: k + 1,
                printed_len: p.len(),
                curation: c,
            });
        }
    }
    let ok = notes.iter().all(|n| n.curation.is_explained());
    let mut observed = format!("{hits}/{total} entries on rows of full length");
    if !notes.is_empty() {
        let _ = write!(observed, ", {} row(s) curated", notes.len());
    }
    exact_item(id, ok, observed, notes)
}

/// Pairs each printed interplay row with the simulated state of the same
/// active round under `policies`.
fn reconcile_trace(policies: Policies) -> Result<Vec<TraceRow>> {
    let (a, b) = reference::PAIR;
    let res = run_interplay(
        &reference::geometry(),
        &reference::r_mems(),
        (a - 1, b - 1),
        reference::INTERPLAY_INITS,
        policies,
        0,
    )?;
    let mut states = vec![(0, res.initial.clone())];
    states.extend(
        res.trace
            .iter()
            .filter(|r| r.is_active())
            .map(|r| (r.round, r.states.clone())),
    );
    let mut rows = Vec::new();
    for (k, printed) in reference::PRINTED_TRACE.iter().enumerate() {
        for (lane, row) in printed.iter().enumerate() {
            let sim = states.get(k);
            rows.push(TraceRow {
                printed_round: k,
                lane: lane + 1,
                simulated_round: sim.map(|s| s.0),
                printed_len: row.len(),
                curation: sim.map(|s| curate_row(row, s.1[lane].values())),
            });
        }
    }
    Ok(rows)
}

/// Checks every printed artifact of the reference trial and searches
/// `grid` for conventions under which the dynamics items reproduce.
pub fn replay_reference_trial(grid: &VariantGrid) -> Result<ReplicationReport> {
    let geom = reference::geometry();
    let d = distance_matrix(&geom);
    let pi1 = proximity_permutation(&d, reference::PAIR.0 - 1)?;
    let pi2 = proximity_permutation(&d, reference::PAIR.1 - 1)?;
    let pi18 = proximity_permutation(&d, 17)?;
    let pair = select_stimulus_pair(&geom).labels();
    let mems = reference::r_mems();

    let mut items = vec![
        permutation_item("pi-x1", &pi1, &reference::PI_X1),
        permutation_item("pi-x2", &pi2, &reference::PI_X2),
        permutation_item("order-from-neuron-18", &pi18, &reference::FROM_NEURON_18),
        exact_item(
            "stimulus-pair",
            pair == reference::PAIR,
            format!("{pair:?}"),
            Vec::new(),
        ),
        consistency_item(
            "r1-mems-consistency",
            "r1Mems",
            &reference::PRINTED_R1_MEMS,
            &permute_memories(&mems, &pi1)?,
        ),
        consistency_item(
            "r2-mems-consistency",
            "r2Mems",
            &reference::PRINTED_R2_MEMS,
            &permute_memories(&mems, &pi2)?,
        ),
    ];
    let exact_passes = items
        .iter()
        .filter(|i| i.status == ItemStatus::Reproduced)
        .count();
    let variants = variant_search(grid, exact_passes, items.len())?;

    let defaults = Policies::default();
    for (c, id) in VARIANT_CHECKS.iter().enumerate() {
        let hits: Vec<&VariantScore> = variants.iter().filter(|v| v.checks[c].passed).collect();
        let at_default = variants.iter().find(|v| v.policies == defaults);
        let (status, chosen) = match at_default {
            Some(v) if v.checks[c].passed => (ItemStatus::Reproduced, v),
            _ => match hits.first() {
                Some(v) => (ItemStatus::ReproducedUnderVariant, *v),
                None => (
                    ItemStatus::NotReproduced,
                    at_default.unwrap_or(&variants[0]),
                ),
            },
        };
        items.push(ChecklistItem {
            id: id.to_string(),
            tier: Tier::Dynamics,
            status,
            policies: chosen.policies,
            reproducing_variants: hits.len(),
            observed: chosen.checks[c].observed.clone(),
            curation: Vec::new(),
        });
    }

    let exact_tier_ok = items
        .iter()
        .filter(|i| i.tier == Tier::Exact)
        .all(|i| i.status == ItemStatus::Reproduced);
    let trace = reconcile_trace(Policies {
        round_counting: RoundCounting::ActiveRounds,
        ..defaults
    })?;
    Ok(ReplicationReport {
        items,
        trace,
        variants,
        exact_tier_ok,
    })
}

impl ReplicationReport {
    pub fn item(&self, id: &str) -> Option<&ChecklistItem> {
        self.items.iter().find(|i| i.id == id)
    }

    pub fn max_score(&self) -> usize {
        self.variants.iter().map(|v| v.score).max().unwrap_or(0)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Checklist");
        for i in &self.items {
            let _ = writeln!(
                out,
                "  {:<36} {:<26} {}",
                i.id,
                i.status.to_string(),
                i.observed
            );
            if i.status == ItemStatus::ReproducedUnderVariant {
                let _ = writeln!(out, "      under {}", i.policies);
            }
            for n in &i.curation {
                let _ = writeln!(
                    out,
                    "      curated {} row {} ({} entries): {}",
                    n.artifact,
                    n.row,
                    n.printed_len,
                    serde_json::to_string(&n.curation).unwrap_or_default()
                );
            }
        }
        let _ = writeln!(out, "\nPrinted interplay rows against active rounds");
        for r in &self.trace {
            let status = match &r.curation {
                Some(RowCuration::Exact) => "exact".to_string(),
                Some(c) => serde_json::to_string(c).unwrap_or_default(),
                None => "no simulated round".to_string(),
            };
            let _ = writeln!(
                out,
                "  round {:>2} lane {}: {}",
                r.printed_round, r.lane, status
            );
        }
        let _ = writeln!(out, "\nVariant ranking (top 10 of {})", self.variants.len());
        for v in self.variants.iter().take(10) {
            let _ = writeln!(
                out,
                "  {:>2}. {}/{}  {}",
                v.rank, v.score, v.out_of, v.policies
            );
        }
        let _ = writeln!(
            out,
            "\nexact tier: {}",
            if self.exact_tier_ok { "ok" } else { "FAILED" }
        );
        out
    }
}
