//! Counter-based noise paths.
//!
//! A [`Scenario`] stands for one bi-infinite noise path `ω`. Nothing is
//! stored: the draw at time `n` and slot `s` is a pure function of the
//! 128-bit seed, the absolute time index and the slot, so backward and
//! forward compositions see the same `ω_n` no matter in which order they
//! are evaluated.
//!
//! The mixing function chains the SplitMix64 finalizer (Stafford's
//! "variant 13") over the seed halves, the time index and the slot:
//!
//! ```text
//! h0 = fmix(seed_lo ^ G)
//! h1 = fmix(h0 ^ (seed_hi + 2G))
//! h2 = fmix(h1 ^ (t * G + 3G))        t as two's-complement u64
//! w  = fmix(h2 ^ fmix(slot + 5G))
//! ```
//!
//! with `G = 0x9e3779b97f4a7c15` and wrapping arithmetic throughout. The
//! uniform value of a draw is `(w >> 11) * 2^-53`. Golden vectors live in
//! `tests/golden/noise_vectors.json`.
//!
//! Slot discipline: slot `0` drives explicit map families, slot `1 + x`
//! drives state `x` of an independent representation, and
//! [`INITIAL_STATE_SLOT`] is reserved for drawing initial conditions.

use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const DERIVE_TAG: u128 = 0x5d58_8b65_6c07_8965_a0b4_28db_f6a1_cd37;

/// Slot used to draw initial states (e.g. from `π`) at time 0.
pub const INITIAL_STATE_SLOT: u64 = u64::MAX;

#[inline]
fn fmix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The raw 64-bit word for `(seed, absolute time, slot)`.
pub fn mix_word(seed: u128, time: i64, slot: u64) -> u64 {
    let lo = seed as u64;
    let hi = (seed >> 64) as u64;
    let h = fmix(lo ^ GOLDEN);
    let h = fmix(h ^ hi.wrapping_add(GOLDEN.wrapping_mul(2)));
    let h = fmix(
        h ^ (time as u64)
            .wrapping_mul(GOLDEN)
            .wrapping_add(GOLDEN.wrapping_mul(3)),
    );
    fmix(h ^ fmix(slot.wrapping_add(GOLDEN.wrapping_mul(5))))
}

/// One draw of the noise path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Draw {
    word: u64,
}

impl Draw {
    pub fn word(self) -> u64 {
        self.word
    }

    /// Uniform value in `[0, 1)` with 53 bits of resolution.
    pub fn value(self) -> f64 {
        (self.word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// A noise path `ω`, identified by a seed and a time origin.
///
/// `shift(k)` realizes `θ_k`: drawing from the shifted scenario at time `n`
/// is the same as drawing from the original at `n + k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    seed: u128,
    offset: i64,
}

impl Scenario {
    pub const fn new(seed: u128) -> Self {
        Scenario { seed, offset: 0 }
    }

    pub const fn with_offset(seed: u128, offset: i64) -> Self {
        Scenario { seed, offset }
    }

    /// The `index`-th scenario of an experiment keyed by `master`.
    pub fn derive(master: u128, index: u64) -> Self {
        let key = master ^ DERIVE_TAG;
        let lo = mix_word(key, index as i64, 0) as u128;
        let hi = mix_word(key, index as i64, 1) as u128;
        Scenario::new((hi << 64) | lo)
    }

    pub fn seed(&self) -> u128 {
        self.seed
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// `θ_k ω`. Panics if the time origin leaves the `i64` range.
    pub fn shift(&self, k: i64) -> Scenario {
        Scenario {
            seed: self.seed,
            offset: self
                .offset
                .checked_add(k)
                .expect("scenario time origin overflowed i64"),
        }
    }

    /// Absolute time index of relative time `time`. Panics on overflow.
    pub fn absolute_time(&self, time: i64) -> i64 {
        self.offset
            .checked_add(time)
            .expect("noise time index overflowed i64")
    }

    pub fn draw(&self, time: i64, slot: u64) -> Draw {
        Draw {
            word: mix_word(self.seed, self.absolute_time(time), slot),
        }
    }

    /// Shorthand for `draw(time, slot).value()`.
    pub fn uniform(&self, time: i64, slot: u64) -> f64 {
        self.draw(time, slot).value()
    }
}

/// Formats a seed the way the CLI accepts it.
pub fn format_seed(seed: u128) -> String {
    format!("{seed:032x}")
}

/// Parses a hex seed of up to 32 digits, with or without a `0x` prefix.
pub fn parse_seed(text: &str) -> Option<u128> {
    let digits = text
        .trim()
        .trim_start_matches("0x")
        .trim_start_matches("0X");
    if digits.is_empty() || digits.len() > 32 {
        return None;
    }
    u128::from_str_radix(digits, 16).ok()
}
