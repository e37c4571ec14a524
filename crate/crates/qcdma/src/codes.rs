//! Maximum-length (m-)sequence generation from linear feedback shift
//! registers, and the cyclic-shift code family used to separate users.
//!
//! A register count `n` yields a periodic ±1 chip sequence of length
//! `S = 2^n - 1` with the classic m-sequence identities: chip sum ±1 and
//! two-valued correlation (`S` on the diagonal, `-1` between distinct
//! cyclic shifts). Users are assigned consecutive shifts of one base
//! sequence.

use serde::Serialize;

use crate::error::{Error, Result};

/// One known primitive polynomial per register count, as feedback tap
/// exponents (the `+ 1` term is implicit). Primitivity is re-validated at
/// construction by the full-period walk, so a bad entry cannot slip through.
const DEFAULT_TAPS: [(u32, &[u32]); 15] = [
    (2, &[2, 1]),
    (3, &[3, 1]),
    (4, &[4, 1]),
    (5, &[5, 2]),
    (6, &[6, 1]),
    (7, &[7, 1]),
    (8, &[8, 6, 5, 4]),
    (9, &[9, 4]),
    (10, &[10, 4, 3, 1]),
    (11, &[11, 2]),
    (12, &[12, 6, 4, 1]),
    (13, &[13, 4, 3, 1]),
    (14, &[14, 5, 3, 1]),
    (15, &[15, 1]),
    (16, &[16, 5, 3, 2]),
];

/// Feedback taps from the built-in table.
pub fn default_taps(n: u32) -> Result<Vec<u32>> {
    DEFAULT_TAPS
        .iter()
        .find(|(k, _)| *k == n)
        .map(|(_, t)| t.to_vec())
        .ok_or(Error::RegisterCount(n))
}

/// Generator description: register count, feedback taps and initial state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LfsrSpec {
    pub n: u32,
    pub taps: Vec<u32>,
    pub seed: Vec<bool>,
}

impl LfsrSpec {
    /// Spec with explicit taps and the canonical seed `[1, 0, ..., 0]`.
    pub fn new(n: u32, taps: Vec<u32>) -> Result<Self> {
        let mut seed = vec![false; n as usize];
        if seed.is_empty() {
            return Err(Error::RegisterCount(n));
        }
        seed[0] = true;
        Self::with_seed(n, taps, seed)
    }

    /// Spec from the built-in tap table for `n` in `2..=16`.
    pub fn for_register_count(n: u32) -> Result<Self> {
        Self::new(n, default_taps(n)?)
    }

    pub fn with_seed(n: u32, taps: Vec<u32>, seed: Vec<bool>) -> Result<Self> {
        if !(2..=16).contains(&n) {
            return Err(Error::RegisterCount(n));
        }
        for &t in &taps {
            if t == 0 || t > n {
                return Err(Error::TapOutOfRange { tap: t, n });
            }
        }
        if seed.len() != n as usize || seed.iter().all(|&b| !b) {
            return Err(Error::ZeroSeed);
        }
        Ok(Self { n, taps, seed })
    }

    /// Sequence period `S = 2^n - 1`.
    pub fn period(&self) -> usize {
        (1usize << self.n) - 1
    }
}

/// A ±1 chip sequence of length `S = 2^n - 1` plus the cyclic shift index
/// identifying which user it belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Code {
    chips: Vec<i8>,
    shift: usize,
}

impl Code {
    pub fn chips(&self) -> &[i8] {
        &self.chips
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn shift(&self) -> usize {
        self.shift
    }

    /// Sum of all chips; ±1 for a true m-sequence.
    pub fn balance(&self) -> i64 {
        self.chips.iter().map(|&c| c as i64).sum()
    }

    /// Rotate the chips left by `i` positions (`i` reduced modulo `S`).
    /// Shifting by the full period is the identity.
    pub fn cyclic_shift(&self, i: usize) -> Code {
        let s = self.chips.len();
        let i = i % s;
        let mut chips = Vec::with_capacity(s);
        chips.extend_from_slice(&self.chips[i..]);
        chips.extend_from_slice(&self.chips[..i]);
        Code {
            chips,
            shift: (self.shift + i) % s,
        }
    }

    /// Inner product Σ a_k b_k. Equals `S` for identical shifts of an
    /// m-sequence and −1 for distinct shifts.
    pub fn correlation(&self, other: &Code) -> Result<i64> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        Ok(self
            .chips
            .iter()
            .zip(&other.chips)
            .map(|(&a, &b)| (a as i64) * (b as i64))
            .sum())
    }

    /// One chip per line, `+1` / `-1`.
    pub fn to_chip_lines(&self) -> String {
        let mut out = String::with_capacity(self.chips.len() * 3);
        for &c in &self.chips {
            out.push_str(if c > 0 { "+1\n" } else { "-1\n" });
        }
        out
    }
}

#[cfg(test)]
impl Code {
    /// Arbitrary chip pattern for tests that need degenerate codes.
    pub(crate) fn from_test_chips(chips: Vec<i8>) -> Code {
        Code { chips, shift: 0 }
    }
}

/// Compact JSON export of one code: `{n, taps, shift, chips}`.
#[derive(Debug, Serialize)]
pub struct CodeExport<'a> {
    pub n: u32,
    pub taps: &'a [u32],
    pub shift: usize,
    pub chips: &'a [i8],
}

/// Run the LFSR for one full period and return the ±1 chip sequence,
/// mapping output bit `b` to `1 - 2b` (0 → +1, 1 → −1).
///
/// Rejects all-zero seeds and tap sets whose generated period is not
/// exactly `2^n - 1` (non-primitive feedback polynomials).
pub fn generate_mseq(spec: &LfsrSpec) -> Result<Code> {
    let period = spec.period();
    let n = spec.n as usize;

    let mut state: u32 = 0;
    for (i, &b) in spec.seed.iter().enumerate() {
        if b {
            state |= 1 << i;
        }
    }
    let tap_mask: u32 = spec.taps.iter().fold(0, |m, &t| m | 1 << (t - 1));
    let start = state;

    let mut chips = Vec::with_capacity(period);
    for step in 0..period {
        if step > 0 && state == start {
            // returned to the seed early: period divides step, not maximal
            return Err(Error::NonPrimitive {
                taps: spec.taps.clone(),
                period: step,
                expected: period,
            });
        }
        let out = (state >> (n - 1)) & 1;
        chips.push(1 - 2 * out as i8);
        let fb = (state & tap_mask).count_ones() & 1;
        state = (state << 1 | fb) & ((1 << n) - 1);
    }
    if state != start {
        return Err(Error::NonPrimitive {
            taps: spec.taps.clone(),
            period: 2 * period, // did not close after a full walk
            expected: period,
        });
    }
    Ok(Code { chips, shift: 0 })
}

/// All or the first `count` cyclic shifts of one m-sequence, assigned to
/// users in order (user p gets shift p).
#[derive(Debug, Clone)]
pub struct CodeFamily {
    base: Code,
    members: Vec<Code>,
    n: u32,
}

impl CodeFamily {
    pub fn base(&self) -> &Code {
        &self.base
    }

    pub fn members(&self) -> &[Code] {
        &self.members
    }

    pub fn code(&self, user: usize) -> &Code {
        &self.members[user]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn register_count(&self) -> u32 {
        self.n
    }

    pub fn spreading_factor(&self) -> usize {
        self.base.len()
    }
}

/// Build the family of `count` consecutively shifted codes. `count` may not
/// exceed the number of distinct shifts `S`.
pub fn build_family(spec: &LfsrSpec, count: usize) -> Result<CodeFamily> {
    let base = generate_mseq(spec)?;
    if count > base.len() {
        return Err(Error::FamilyTooLarge {
            requested: count,
            available: base.len(),
        });
    }
    let members = (0..count).map(|i| base.cyclic_shift(i)).collect();
    Ok(CodeFamily {
        base,
        members,
        n: spec.n,
    })
}
