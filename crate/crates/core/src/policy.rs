//! Knobs for the conventions the recall dynamics leave open.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// How a zero local field is turned into a state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignPolicy {
    #[default]
    ZeroToPositive,
    ZeroToNegative,
    /// Seeded fair coin.
    ZeroToCoin,
}

impl SignPolicy {
    pub fn sign<R: Rng + ?Sized>(self, field: i64, rng: &mut R) -> i8 {
        match field.signum() {
            1 => 1,
            -1 => -1,
            _ => match self {
                SignPolicy::ZeroToPositive => 1,
                SignPolicy::ZeroToNegative => -1,
                SignPolicy::ZeroToCoin => {
                    if rng.gen_bool(0.5) {
                        1
                    } else {
                        -1
                    }
                }
            },
        }
    }

    /// Sign without consuming randomness; `None` for a zero field under the
    /// coin policy.
    pub fn sign_deterministic(self, field: i64) -> Option<i8> {
        match field.signum() {
            1 => Some(1),
            -1 => Some(-1),
            _ => match self {
                SignPolicy::ZeroToPositive => Some(1),
                SignPolicy::ZeroToNegative => Some(-1),
                SignPolicy::ZeroToCoin => None,
            },
        }
    }
}

/// Which clamped positions feed the local field at the cursor.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateWindow {
    /// Only positions earlier in the sequence (row of B).
    #[default]
    StrictLower,
    /// Every clamped position (row of T = B + Bᵀ), so cross-clamped later
    /// positions also contribute.
    FullRow,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConflictPolicy {
    /// The earlier write survives.
    #[default]
    FirstWriterWins,
    /// The value already held by the receiving lane survives.
    OwnLanePriority,
    /// Seeded fair coin between the two values.
    FairRandomDraw,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LaneOrder {
    #[default]
    FirstThenSecond,
    SecondThenFirst,
}

impl LaneOrder {
    pub fn lanes(self) -> [usize; 2] {
        match self {
            LaneOrder::FirstThenSecond => [0, 1],
            LaneOrder::SecondThenFirst => [1, 0],
        }
    }
}

/// When a cross-clamped value lands in the other lane.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Visibility {
    #[default]
    SameRound,
    NextRound,
}

/// What a lane does when its next position is already clamped.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockedHandling {
    /// Step over one blocked position and clamp nothing this round.
    #[default]
    SkipRound,
    /// Step over every blocked position and clamp the next free one.
    SkipAndAdvance,
    /// Skip one position while the other lane can clamp; when no lane can,
    /// every lane steps over its blocked run and clamps.
    PumpOther,
}

/// How rounds are counted when reporting an interplay run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundCounting {
    /// Every executed round.
    #[default]
    AllRounds,
    /// Only rounds in which at least one lane clamped a position.
    ActiveRounds,
}

/// Full set of dynamics conventions shared by recall and interplay.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Policies {
    pub sign: SignPolicy,
    pub window: UpdateWindow,
    pub conflict: ConflictPolicy,
    pub lane_order: LaneOrder,
    pub visibility: Visibility,
    pub blocked: BlockedHandling,
    pub round_counting: RoundCounting,
}

macro_rules! kebab_display {
    ($($t:ty),*) => {$(
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let s = serde_json::to_string(self).map_err(|_| fmt::Error)?;
                f.write_str(s.trim_matches('"'))
            }
        }

        impl std::str::FromStr for $t {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                serde_json::from_value(serde_json::Value::String(s.to_string()))
                    .map_err(|_| format!("unknown value {s:?}"))
            }
        }
    )*};
}

kebab_display!(
    SignPolicy,
    UpdateWindow,
    ConflictPolicy,
    LaneOrder,
    Visibility,
    BlockedHandling,
    RoundCounting
);

impl fmt::Display for Policies {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "sign={} window={} conflict={} order={} visibility={} blocked={} rounds={}",
            self.sign,
            self.window,
            self.conflict,
            self.lane_order,
            self.visibility,
            self.blocked,
            self.round_counting
        )
    }
}

impl Policies {
    /// Applies `key=value` overrides, comma separated, e.g.
    /// `sign=zero-to-negative,visibility=next-round`.
    pub fn with_overrides(mut self, overrides: &str) -> Result<Self, String> {
        for item in overrides
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
        {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got {item:?}"))?;
            let value = value.trim();
            match key.trim() {
                "sign" => self.sign = value.parse()?,
                "window" => self.window = value.parse()?,
                "conflict" => self.conflict = value.parse()?,
                "order" | "lane-order" => self.lane_order = value.parse()?,
                "visibility" => self.visibility = value.parse()?,
                "blocked" => self.blocked = value.parse()?,
                "rounds" | "round-counting" => self.round_counting = value.parse()?,
                other => return Err(format!("unknown policy {other:?}")),
            }
        }
        Ok(self)
    }
}
