use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::CompilerError;
use crate::spacetime::{int, rat, serde_rational, Position, Rational, TimeStamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Single,
    Sequential,
    RapidFire,
    SeqRapidFire,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Single => "single",
            Mode::Sequential => "sequential",
            Mode::RapidFire => "rapid-fire",
            Mode::SeqRapidFire => "seq-rapid-fire",
        }
    }

    pub fn is_rapid(&self) -> bool {
        matches!(self, Mode::RapidFire | Mode::SeqRapidFire)
    }
}

impl std::str::FromStr for Mode {
    type Err = CompilerError;

    fn from_str(s: &str) -> Result<Self, CompilerError> {
        match s {
            "single" => Ok(Mode::Single),
            "sequential" => Ok(Mode::Sequential),
            "rapid-fire" => Ok(Mode::RapidFire),
            "seq-rapid-fire" => Ok(Mode::SeqRapidFire),
            _ => Err(CompilerError::ConfigInvalid(format!("unknown mode {s:?}"))),
        }
    }
}

/// Two verifiers on the line and the position the prover claims.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Geometry {
    pub verifiers: [Position; 2],
    pub claimed: Position,
}

impl Geometry {
    /// Verifiers at 0 and 2, prover at 1.
    pub fn single_default() -> Self {
        Geometry {
            verifiers: [Position::from_int(0), Position::from_int(2)],
            claimed: Position::from_int(1),
        }
    }

    /// Verifiers at 0 and 1, prover at 1/2.
    pub fn multi_default() -> Self {
        Geometry {
            verifiers: [Position::from_int(0), Position::from_int(1)],
            claimed: Position::new(rat(1, 2)),
        }
    }

    pub fn default_for(mode: Mode) -> Self {
        match mode {
            Mode::Single => Self::single_default(),
            _ => Self::multi_default(),
        }
    }

    /// Distance from the claimed position to each verifier.
    pub fn distances(&self) -> [Rational; 2] {
        [
            self.claimed.distance(&self.verifiers[0]),
            self.claimed.distance(&self.verifiers[1]),
        ]
    }

    /// `D = max_j d_j`; shares are timed to meet at the claimed position `D`
    /// after the nominal round start.
    pub fn reach(&self) -> Rational {
        let [a, b] = self.distances();
        a.max(b)
    }

    pub fn round_trip(&self) -> Rational {
        int(2) * self.reach()
    }

    pub fn separation(&self) -> Rational {
        self.verifiers[0].distance(&self.verifiers[1])
    }

    /// Rescales about `V_0` so the verifiers are one unit apart.
    pub fn normalized(&self) -> Self {
        let sep = self.separation();
        let x0 = self.verifiers[0].value();
        let f = |p: Position| Position::new((p.value() - x0) / sep);
        Geometry {
            verifiers: [f(self.verifiers[0]), f(self.verifiers[1])],
            claimed: f(self.claimed),
        }
    }
}

fn default_one() -> usize {
    1
}

fn default_alpha() -> f64 {
    1.0
}

fn default_input_bits() -> usize {
    128
}

fn default_key_bits() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompilerConfig {
    pub mode: Mode,
    /// Rounds `ℓ` per block.
    #[serde(default = "default_one")]
    pub rounds: usize,
    /// Defaults to [`Geometry::default_for`] the mode.
    #[serde(default)]
    pub geometry: Option<Geometry>,
    /// Scale the geometry so the verifiers sit one unit apart.
    #[serde(default)]
    pub normalize: bool,
    /// Firing interval `Δ` for the rapid modes.
    #[serde(default, with = "serde_rational::option")]
    pub delta_t: Option<Rational>,
    /// Rapid-fire blocks `m` (seq-rapid-fire only).
    #[serde(default = "default_one")]
    pub blocks: usize,
    /// Fraction of blocks that must pass the certified-randomness test.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Idle time between consecutive blocks.
    #[serde(default = "Rational::zero", with = "serde_rational")]
    pub block_gap: Rational,
    /// Timing tolerance `τ`.
    #[serde(default = "Rational::zero", with = "serde_rational")]
    pub tau: Rational,
    #[serde(default = "default_input_bits")]
    pub oracle_input_bits: usize,
    #[serde(default = "default_key_bits")]
    pub oracle_key_bits: usize,
}

impl CompilerConfig {
    pub fn new(mode: Mode) -> Self {
        CompilerConfig {
            mode,
            rounds: 1,
            geometry: None,
            normalize: false,
            delta_t: None,
            blocks: 1,
            alpha: 1.0,
            block_gap: Rational::zero(),
            tau: Rational::zero(),
            oracle_input_bits: default_input_bits(),
            oracle_key_bits: default_key_bits(),
        }
    }

    pub fn single() -> Self {
        Self::new(Mode::Single)
    }

    pub fn sequential(rounds: usize) -> Self {
        CompilerConfig {
            rounds,
            ..Self::new(Mode::Sequential)
        }
    }

    pub fn rapid_fire(rounds: usize, delta_t: Rational) -> Self {
        CompilerConfig {
            rounds,
            delta_t: Some(delta_t),
            ..Self::new(Mode::RapidFire)
        }
    }

    pub fn seq_rapid_fire(rounds: usize, delta_t: Rational, blocks: usize, alpha: f64) -> Self {
        CompilerConfig {
            rounds,
            delta_t: Some(delta_t),
            blocks,
            alpha,
            ..Self::new(Mode::SeqRapidFire)
        }
    }

    pub fn with_geometry(mut self, g: Geometry) -> Self {
        self.geometry = Some(g);
        self
    }

    pub fn resolved_geometry(&self) -> Geometry {
        let g = self.geometry.unwrap_or_else(|| Geometry::default_for(self.mode));
        if self.normalize {
            g.normalized()
        } else {
            g
        }
    }

    pub fn block_count(&self) -> usize {
        match self.mode {
            Mode::SeqRapidFire => self.blocks,
            _ => 1,
        }
    }

    /// Blocks that must pass the certified-randomness test: `ceil(α m)`,
    /// with products within `1e-9` of an integer snapped to it.
    pub fn required_blocks(&self) -> usize {
        let m = self.block_count();
        if self.mode != Mode::SeqRapidFire {
            return m;
        }
        let x = self.alpha * m as f64;
        let r = x.round();
        if (x - r).abs() <= 1e-9 * x.max(1.0) {
            r as usize
        } else {
            x.ceil() as usize
        }
    }

    /// Checks every invariant that does not depend on the backend.
    pub fn validate(&self) -> Result<(), CompilerError> {
        let bad = |m: String| Err(CompilerError::ConfigInvalid(m));
        if self.rounds == 0 {
            return bad("rounds must be at least 1".into());
        }
        if self.mode == Mode::Single && self.rounds != 1 {
            return bad(format!("single-round mode needs rounds = 1, got {}", self.rounds));
        }
        let g = self.resolved_geometry();
        if g.separation().is_zero() {
            return bad("verifiers must be at distinct positions".into());
        }
        if self.tau < Rational::zero() {
            return bad("tau must be non-negative".into());
        }
        if self.oracle_input_bits == 0 {
            return bad("oracle_input_bits must be positive".into());
        }
        if self.oracle_key_bits == 0 || !self.oracle_key_bits.is_multiple_of(8) {
            return bad("oracle_key_bits must be a positive multiple of 8".into());
        }
        if self.mode.is_rapid() {
            let Some(d) = self.delta_t else {
                return bad("rapid-fire modes need delta_t".into());
            };
            if d <= Rational::zero() {
                return bad(format!("delta_t must be positive, got {d}"));
            }
            let spread = d * int(self.rounds as i128 - 1);
            if spread >= g.round_trip() {
                return bad(format!(
                    "delta_t * (rounds - 1) = {spread} must be below the round trip {}",
                    g.round_trip()
                ));
            }
        }
        if self.mode == Mode::SeqRapidFire {
            if self.blocks == 0 {
                return bad("blocks must be at least 1".into());
            }
            if !(self.alpha > 0.0 && self.alpha <= 1.0) {
                return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
            }
            if self.block_gap < Rational::zero() {
                return bad("block_gap must be non-negative".into());
            }
        }
        Ok(())
    }

    /// Offset of round `i` (1-based) from the start of its block.
    fn round_offset(&self, i: usize, rt: Rational) -> Rational {
        let step = match self.mode {
            Mode::Single | Mode::Sequential => rt,
            Mode::RapidFire | Mode::SeqRapidFire => self.delta_t.unwrap_or_else(Rational::one),
        };
        step * int(i as i128 - 1)
    }

    /// Send and expected-arrival table for every round of every block.
    pub fn schedule(&self) -> Schedule {
        let g = self.resolved_geometry();
        let d = g.distances();
        let reach = g.reach();
        let rt = g.round_trip();
        let block_span = self.round_offset(self.rounds, rt) + rt;
        let mut slots = Vec::new();
        let mut start = Rational::zero();
        for b in 0..self.block_count() {
            for i in 1..=self.rounds {
                let t = start + self.round_offset(i, rt);
                slots.push(RoundSlot {
                    block: b,
                    round: i,
                    start: TimeStamp::new(t),
                    send: [TimeStamp::new(t + reach - d[0]), TimeStamp::new(t + reach - d[1])],
                    at_claimed: TimeStamp::new(t + reach),
                    expected: [TimeStamp::new(t + reach + d[0]), TimeStamp::new(t + reach + d[1])],
                });
            }
            start += block_span + self.block_gap;
        }
        Schedule {
            rounds: self.rounds,
            blocks: self.block_count(),
            geometry: g,
            slots,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundSlot {
    /// 0-based block index.
    pub block: usize,
    /// 1-based round index within the block.
    pub round: usize,
    /// Nominal round start `T_i`.
    pub start: TimeStamp,
    /// When each verifier fires its share.
    pub send: [TimeStamp; 2],
    /// When both shares reach the claimed position.
    pub at_claimed: TimeStamp,
    /// When each verifier expects the answer.
    pub expected: [TimeStamp; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Schedule {
    pub rounds: usize,
    pub blocks: usize,
    pub geometry: Geometry,
    pub slots: Vec<RoundSlot>,
}

impl Schedule {
    pub fn slot(&self, block: usize, round: usize) -> Option<&RoundSlot> {
        if round == 0 || round > self.rounds || block >= self.blocks {
            return None;
        }
        self.slots.get(block * self.rounds + round - 1)
    }

    pub fn last_expected(&self) -> TimeStamp {
        self.slots
            .iter()
            .flat_map(|s| s.expected)
            .max()
            .unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> TimeStamp {
        TimeStamp::parse(s).unwrap()
    }

    #[test]
    fn single_round_answers_due_at_two() {
        let s = CompilerConfig::single().schedule();
        assert_eq!(s.slots.len(), 1);
        assert_eq!(s.slots[0].send, [t("0"), t("0")]);
        assert_eq!(s.slots[0].at_claimed, t("1"));
        assert_eq!(s.slots[0].expected, [t("2"), t("2")]);
    }

    #[test]
    fn sequential_rounds_are_unit_spaced() {
        let s = CompilerConfig::sequential(3).schedule();
        let due: Vec<_> = s.slots.iter().map(|x| x.expected[0]).collect();
        assert_eq!(due, vec![t("1"), t("2"), t("3")]);
        assert_eq!(s.slots[2].at_claimed, t("2.5"));
    }

    #[test]
    fn rapid_fire_offsets() {
        let s = CompilerConfig::rapid_fire(3, rat(1, 10)).schedule();
        let due: Vec<_> = s.slots.iter().map(|x| x.expected[1]).collect();
        assert_eq!(due, vec![t("1"), t("1.1"), t("1.2")]);
    }

    #[test]
    fn asymmetric_claim_staggers_sends() {
        let g = Geometry {
            verifiers: [Position::from_int(0), Position::from_int(2)],
            claimed: Position::parse("0.5").unwrap(),
        };
        let s = CompilerConfig::single().with_geometry(g).schedule();
        assert_eq!(s.slots[0].send, [t("1"), t("0")]);
        assert_eq!(s.slots[0].at_claimed, t("1.5"));
        assert_eq!(s.slots[0].expected, [t("2"), t("3")]);
    }

    #[test]
    fn blocks_follow_back_to_back() {
        let mut c = CompilerConfig::seq_rapid_fire(2, rat(1, 4), 3, 0.6);
        c.block_gap = rat(1, 2);
        let s = c.schedule();
        let starts: Vec<_> = s.slots.iter().map(|x| x.start).collect();
        assert_eq!(starts, vec![t("0"), t("0.25"), t("1.75"), t("2"), t("3.5"), t("3.75")]);
        assert_eq!(c.required_blocks(), 2);
        assert_eq!(s.slot(2, 2).unwrap().start, t("3.75"));
        assert!(s.slot(3, 1).is_none());
    }

    #[test]
    fn delta_gate() {
        for (d, ok) in [(rat(1, 10), true), (rat(1, 5), false), (rat(1, 8), false)] {
            assert_eq!(CompilerConfig::rapid_fire(9, d).validate().is_ok(), ok, "{d}");
        }
        assert!(CompilerConfig::rapid_fire(9, int(0)).validate().is_err());
        let mut c = CompilerConfig::rapid_fire(9, rat(1, 10));
        c.delta_t = None;
        assert!(c.validate().is_err());
        // twice the round trip on the wide geometry
        let wide = CompilerConfig::rapid_fire(9, rat(1, 5)).with_geometry(Geometry::single_default());
        assert!(wide.validate().is_ok());
    }

    #[test]
    fn alpha_ceiling_snaps_near_integers() {
        let c = CompilerConfig::seq_rapid_fire(1, rat(1, 2), 10, 0.7);
        assert_eq!(c.required_blocks(), 7);
        let c = CompilerConfig::seq_rapid_fire(1, rat(1, 2), 5, 0.61);
        assert_eq!(c.required_blocks(), 4);
        assert!(CompilerConfig::seq_rapid_fire(1, rat(1, 2), 5, 0.0).validate().is_err());
        assert!(CompilerConfig::seq_rapid_fire(1, rat(1, 2), 0, 0.5).validate().is_err());
    }

    #[test]
    fn normalization_scales_to_unit_separation() {
        let mut c = CompilerConfig::single();
        c.normalize = true;
        assert_eq!(c.resolved_geometry(), Geometry::multi_default());
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = CompilerConfig::rapid_fire(8, rat(1, 10));
        let j = serde_json::to_string(&c).unwrap();
        let back: CompilerConfig = serde_json::from_str(&j).unwrap();
        assert_eq!(back, c);
        let minimal: CompilerConfig =
            serde_json::from_str(r#"{"mode":"rapid-fire","rounds":8,"delta_t":0.1}"#).unwrap();
        assert_eq!(minimal, c);
    }
}
