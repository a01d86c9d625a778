//! The taxonomy of degraded-reference measurement architectures.
//!
//! A two-stage setting has three images — the pristine original (PR), the
//! degraded reference at the midpoint (DR), and the final image (FD) — and
//! six independent yes/no capabilities describing what a system deployed
//! along the chain can measure or transmit:
//!
//! 1. a reference comparison (full- or reduced-reference) of DR against PR,
//! 2. access to the DR image itself downstream,
//! 3. a no-reference measurement on DR,
//! 4. a reference comparison of FD against DR,
//! 5. access to the FD image itself at the evaluation point,
//! 6. a no-reference measurement on FD.
//!
//! Each combination is written as a 6-bit code, capability 1 first
//! (`100100` = reference comparisons across both stages). A code is usable
//! only if it says *something* about each stage: at least one of bits 1–4
//! for the first stage, and at least one of bits 4–6 for the second (bit 4
//! looks both ways: it measures stage 2 relative to the midpoint, and the
//! midpoint is the output of stage 1). Usable codes split by whether the
//! first-stage degradation is measured against the true original (bit 1):
//! those are type 1, the rest type 0.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

/// A 6-bit architecture code. Bit 1 is the most significant digit in the
/// textual form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArchCode(u8);

/// How a code classifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArchClass {
    /// At least one stage is completely unobserved; no prediction of
    /// final-versus-original quality can be grounded.
    Invalid,
    /// Usable, but the first stage is never measured against the original.
    Type0,
    /// Usable, with a reference comparison spanning the first stage.
    Type1,
}

impl ArchCode {
    /// Reference comparison across each stage separately: `100100`.
    /// The baseline two-stage measurement scenario.
    pub const FR_BOTH_STAGES: ArchCode = ArchCode(0b100100);

    /// No-reference look at the midpoint plus a reference comparison across
    /// stage 2: `001100`. The scenario when nothing survives from PR.
    pub const NR_MIDPOINT: ArchCode = ArchCode(0b001100);

    /// Builds a code from its numeric index (0..=63); the textual digits are
    /// the binary expansion, capability 1 first.
    pub fn from_index(index: u8) -> Result<Self> {
        if index >= 64 {
            return Err(Error::Domain(format!(
                "architecture code index {index} out of range 0..=63"
            )));
        }
        Ok(ArchCode(index))
    }

    /// Builds a code from the six capability flags, capability 1 first.
    pub fn from_bits(bits: [bool; 6]) -> Self {
        let mut v = 0u8;
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v |= 1 << (5 - i);
            }
        }
        ArchCode(v)
    }

    /// Parses the 6-digit textual form, e.g. `"100100"`.
    pub fn parse(s: &str) -> Result<Self> {
        if s.len() != 6 || !s.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(Error::Domain(format!(
                "architecture code must be six binary digits, got '{s}'"
            )));
        }
        let mut v = 0u8;
        for b in s.bytes() {
            v = (v << 1) | (b - b'0');
        }
        Ok(ArchCode(v))
    }

    pub fn index(self) -> u8 {
        self.0
    }

    /// The six capability flags, capability 1 first.
    pub fn bits(self) -> [bool; 6] {
        let mut out = [false; 6];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = (self.0 >> (5 - i)) & 1 == 1;
        }
        out
    }

    /// Capability 1: reference comparison of DR against PR.
    pub fn has_first_stage_reference(self) -> bool {
        self.0 & 0b100000 != 0
    }

    /// Capability 4: reference comparison of FD against DR.
    pub fn has_second_stage_reference(self) -> bool {
        self.0 & 0b000100 != 0
    }

    /// Classifies the code. A stage with no capability observing it makes
    /// the code invalid; otherwise bit 1 decides type 1 versus type 0.
    pub fn classify(self) -> ArchClass {
        let first_stage_observed = self.0 & 0b111100 != 0;
        let second_stage_observed = self.0 & 0b000111 != 0;
        if !first_stage_observed || !second_stage_observed {
            ArchClass::Invalid
        } else if self.has_first_stage_reference() {
            ArchClass::Type1
        } else {
            ArchClass::Type0
        }
    }

    /// All 64 codes in ascending numeric order.
    pub fn all() -> impl Iterator<Item = ArchCode> {
        (0u8..64).map(ArchCode)
    }
}

impl fmt::Display for ArchCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in (0..6).rev() {
            write!(f, "{}", (self.0 >> i) & 1)?;
        }
        Ok(())
    }
}

/// The sizes of the three classes over all 64 codes:
/// (invalid, type 0, type 1).
pub fn partition_counts() -> (usize, usize, usize) {
    let mut counts = (0usize, 0usize, 0usize);
    for code in ArchCode::all() {
        match code.classify() {
            ArchClass::Invalid => counts.0 += 1,
            ArchClass::Type0 => counts.1 += 1,
            ArchClass::Type1 => counts.2 += 1,
        }
    }
    counts
}

/// Codes of one class, in ascending order, rendered as digit strings.
pub fn codes_of_class(class: ArchClass) -> Vec<String> {
    ArchCode::all()
        .filter(|c| c.classify() == class)
        .map(|c| format!("{c}"))
        .collect()
}
