//! Second-quantization engine over 2M spin-orbitals.
//!
//! Spin-orbital `(mode, spin)` is linearized as `2 * mode + spin_bit` with
//! `up = 0`, `down = 1`. A basis state is a bit word; bit `b` set means
//! spin-orbital `b` is occupied. The state `|bits⟩` stands for the creation
//! operators of its occupied spin-orbitals written in ascending linear order
//! (smallest index leftmost) acting on the vacuum, so creating spin-orbital
//! `b` picks up `(-1)^(occupied spin-orbitals below b)`.

mod operators;
mod state;
mod unitary;

pub use operators::{collective_operator, CollectiveKind, SparseOperator, DENSE_MODE_LIMIT};
pub use state::{
    build_closed_shell, pauli_summand_census, transform_to_extraction_basis, FockAmplitudeState,
    PauliCensus, MAX_TRANSFORMED_AMPLITUDES, PRUNE_TOL,
};
pub use operators::creation_operator;
pub use unitary::{
    format_complex, identity_unitary, parse_complex, qft_unitary, random_unitary, ModeUnitary,
    UNITARITY_TOL,
};

use serde::{Deserialize, Serialize};

/// Largest mode count representable in a 64-bit occupation word.
pub const MAX_MODES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn bit(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }

    pub fn from_bit(bit: usize) -> Spin {
        if bit & 1 == 0 {
            Spin::Up
        } else {
            Spin::Down
        }
    }

    pub fn flipped(self) -> Spin {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinOrbital {
    pub mode: usize,
    pub spin: Spin,
}

impl SpinOrbital {
    pub fn new(mode: usize, spin: Spin) -> Self {
        Self { mode, spin }
    }

    pub fn up(mode: usize) -> Self {
        Self::new(mode, Spin::Up)
    }

    pub fn down(mode: usize) -> Self {
        Self::new(mode, Spin::Down)
    }

    /// Position in the global ordering used for fermionic signs.
    pub fn linear_index(self) -> usize {
        2 * self.mode + self.spin.bit()
    }

    pub fn from_linear(index: usize) -> Self {
        Self::new(index / 2, Spin::from_bit(index))
    }
}

/// Occupation word over 2M spin-orbitals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FockBasisState(pub u64);

impl FockBasisState {
    pub const VACUUM: FockBasisState = FockBasisState(0);

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn is_occupied(self, orb: SpinOrbital) -> bool {
        self.0 >> orb.linear_index() & 1 == 1
    }

    pub fn particle_number(self) -> u32 {
        self.0.count_ones()
    }

    /// Twice the spin projection, `N_up - N_down`.
    pub fn twice_sz(self) -> i32 {
        let up = (self.0 & 0x5555_5555_5555_5555).count_ones() as i32;
        let down = (self.0 & 0xAAAA_AAAA_AAAA_AAAA).count_ones() as i32;
        up - down
    }

    /// Occupation of one mode, 0..=2.
    pub fn mode_occupation(self, mode: usize) -> u8 {
        ((self.0 >> (2 * mode)) & 0b11).count_ones() as u8
    }

    /// Sign of moving a creation operator for `orb` to the front of this word.
    pub fn creation_sign(self, orb: SpinOrbital) -> f64 {
        let below = self.0 & ((1u64 << orb.linear_index()) - 1);
        if below.count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }
}
