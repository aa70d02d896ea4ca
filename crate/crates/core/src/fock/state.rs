use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{FockBasisState, ModeUnitary, Spin, SpinOrbital, MAX_MODES};
use crate::error::{Error, Result};

/// Amplitudes below this magnitude are dropped after every operator application.
pub const PRUNE_TOL: f64 = 1e-14;

/// Largest number of basis states a transformed state may span.
pub const MAX_TRANSFORMED_AMPLITUDES: u64 = 1 << 24;

/// Sparse amplitude vector over occupation-number basis states of `2 * n_modes`
/// spin-orbitals. Iteration order is the numeric order of the occupation words.
#[derive(Debug, Clone, PartialEq)]
pub struct FockAmplitudeState {
    n_modes: usize,
    amplitudes: BTreeMap<u64, Complex64>,
}

impl FockAmplitudeState {
    pub fn zero(n_modes: usize) -> Result<Self> {
        if n_modes == 0 || n_modes > MAX_MODES {
            return Err(Error::InvalidConfiguration(format!(
                "mode count {n_modes} outside 1..={MAX_MODES}"
            )));
        }
        Ok(Self {
            n_modes,
            amplitudes: BTreeMap::new(),
        })
    }

    pub fn vacuum(n_modes: usize) -> Result<Self> {
        let mut state = Self::zero(n_modes)?;
        state.amplitudes.insert(0, Complex64::new(1.0, 0.0));
        Ok(state)
    }

    /// Builds a state from explicit `(word, amplitude)` pairs; repeated words add up.
    pub fn from_amplitudes<I>(n_modes: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, Complex64)>,
    {
        let mut state = Self::zero(n_modes)?;
        let limit = state.word_limit();
        for (bits, amp) in entries {
            if bits >= limit {
                return Err(Error::InvalidInput(format!(
                    "occupation word {bits:#b} has bits beyond {} spin-orbitals",
                    2 * n_modes
                )));
            }
            *state.amplitudes.entry(bits).or_default() += amp;
        }
        state.prune(PRUNE_TOL);
        Ok(state)
    }

    fn word_limit(&self) -> u64 {
        if self.n_modes == MAX_MODES {
            u64::MAX
        } else {
            1u64 << (2 * self.n_modes)
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (FockBasisState, Complex64)> + '_ {
        self.amplitudes
            .iter()
            .map(|(&bits, &amp)| (FockBasisState(bits), amp))
    }

    pub fn amplitude(&self, state: FockBasisState) -> Complex64 {
        self.amplitudes
            .get(&state.0)
            .copied()
            .unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        let (small, large, conj_small) = if self.len() <= other.len() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        let mut acc = Complex64::default();
        for (bits, a) in &small.amplitudes {
            if let Some(b) = large.amplitudes.get(bits) {
                acc += if conj_small { a.conj() * b } else { b.conj() * a };
            }
        }
        acc
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for amp in out.amplitudes.values_mut() {
            *amp *= factor;
        }
        out.prune(PRUNE_TOL);
        out
    }

    /// `self += factor * other`, without pruning.
    pub fn add_scaled(&mut self, other: &Self, factor: Complex64) {
        debug_assert_eq!(self.n_modes, other.n_modes);
        for (bits, amp) in &other.amplitudes {
            *self.amplitudes.entry(*bits).or_default() += factor * amp;
        }
    }

    pub fn prune(&mut self, tol: f64) {
        self.amplitudes.retain(|_, amp| amp.norm() >= tol);
    }

    /// Largest amplitude difference over the union of supports.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (bits, a) in &self.amplitudes {
            let b = other.amplitudes.get(bits).copied().unwrap_or_default();
            worst = worst.max((a - b).norm());
        }
        for (bits, b) in &other.amplitudes {
            if !self.amplitudes.contains_key(bits) {
                worst = worst.max(b.norm());
            }
        }
        worst
    }

    fn check_orbital(&self, orb: SpinOrbital) -> Result<()> {
        if orb.mode >= self.n_modes {
            Err(Error::IndexOutOfRange {
                index: orb.mode,
                modes: self.n_modes,
            })
        } else {
            Ok(())
        }
    }

    /// `coeff · d†_orb |self⟩`. Components already holding `orb` vanish.
    pub fn apply_creation(&self, orb: SpinOrbital, coeff: Complex64) -> Result<Self> {
        self.check_orbital(orb)?;
        let bit = 1u64 << orb.linear_index();
        let mut out = BTreeMap::new();
        for (&bits, &amp) in &self.amplitudes {
            if bits & bit != 0 {
                continue;
            }
            let sign = FockBasisState(bits).creation_sign(orb);
            out.insert(bits | bit, amp * coeff * sign);
        }
        let mut state = Self {
            n_modes: self.n_modes,
            amplitudes: out,
        };
        state.prune(PRUNE_TOL);
        Ok(state)
    }

    /// `coeff · d_orb |self⟩`.
    pub fn apply_annihilation(&self, orb: SpinOrbital, coeff: Complex64) -> Result<Self> {
        self.check_orbital(orb)?;
        let bit = 1u64 << orb.linear_index();
        let mut out = BTreeMap::new();
        for (&bits, &amp) in &self.amplitudes {
            if bits & bit == 0 {
                continue;
            }
            let sign = FockBasisState(bits).creation_sign(orb);
            out.insert(bits & !bit, amp * coeff * sign);
        }
        let mut state = Self {
            n_modes: self.n_modes,
            amplitudes: out,
        };
        state.prune(PRUNE_TOL);
        Ok(state)
    }

    /// Applies `Σ_j weights[j] d†_{j,spin}`.
    pub fn apply_mode_combination(&self, weights: &[Complex64], spin: Spin) -> Result<Self> {
        let mut acc = Self::zero(self.n_modes)?;
        for (mode, &w) in weights.iter().enumerate() {
            if w == Complex64::default() {
                continue;
            }
            let term = self.apply_creation(SpinOrbital::new(mode, spin), w)?;
            acc.add_scaled(&term, Complex64::new(1.0, 0.0));
        }
        acc.prune(PRUNE_TOL);
        Ok(acc)
    }

    /// Dense vector indexed by the occupation word. Only for small mode counts.
    pub fn to_dense(&self) -> Result<Vec<Complex64>> {
        if self.n_modes > super::DENSE_MODE_LIMIT {
            return Err(Error::Capacity(format!(
                "dense vector for {} modes exceeds the {}-mode limit",
                self.n_modes,
                super::DENSE_MODE_LIMIT
            )));
        }
        let mut v = vec![Complex64::default(); 1usize << (2 * self.n_modes)];
        for (&bits, &amp) in &self.amplitudes {
            v[bits as usize] = amp;
        }
        Ok(v)
    }
}

/// `∏_{i<P} c†_{i↑} c†_{i↓} |vac⟩` in the original orbital basis.
pub fn build_closed_shell(shells: usize, n_modes: usize) -> Result<FockAmplitudeState> {
    if shells == 0 || shells > n_modes {
        return Err(Error::InvalidConfiguration(format!(
            "closed shell needs 1 <= P <= M, got P={shells}, M={n_modes}"
        )));
    }
    let mut state = FockAmplitudeState::vacuum(n_modes)?;
    let one = Complex64::new(1.0, 0.0);
    // rightmost operator acts first
    for shell in (0..shells).rev() {
        state = state.apply_creation(SpinOrbital::down(shell), one)?;
        state = state.apply_creation(SpinOrbital::up(shell), one)?;
    }
    Ok(state)
}

/// Re-expresses a state written in the original orbitals in the extraction modes,
/// substituting `c†_{i,α} = Σ_j u_ij d†_{j,α}` operator by operator.
pub fn transform_to_extraction_basis(
    state: &FockAmplitudeState,
    unitary: &ModeUnitary,
) -> Result<FockAmplitudeState> {
    let m = state.n_modes();
    if unitary.dim() != m {
        return Err(Error::InvalidConfiguration(format!(
            "unitary dimension {} does not match {m} modes",
            unitary.dim()
        )));
    }
    for (basis, _) in state.iter() {
        let up = (0..m).filter(|&i| basis.is_occupied(SpinOrbital::up(i))).count() as u64;
        let down = basis.particle_number() as u64 - up;
        let span = crate::census::binomial(m as u64, up).saturating_mul(crate::census::binomial(m as u64, down));
        if span > MAX_TRANSFORMED_AMPLITUDES {
            return Err(Error::Capacity(format!(
                "transformed state may span {span} basis states, limit {MAX_TRANSFORMED_AMPLITUDES}"
            )));
        }
    }
    let rows: Vec<Vec<Complex64>> = (0..m).map(|i| unitary.row(i).to_vec()).collect();
    let mut out = FockAmplitudeState::zero(m)?;
    for (basis, amp) in state.iter() {
        let mut running = FockAmplitudeState::vacuum(m)?;
        for b in (0..2 * m).rev() {
            if basis.0 >> b & 1 == 0 {
                continue;
            }
            let orb = SpinOrbital::from_linear(b);
            running = running.apply_mode_combination(&rows[orb.mode], orb.spin)?;
        }
        out.add_scaled(&running, amp);
    }
    out.prune(PRUNE_TOL);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PauliCensus {
    pub raw_summands: u64,
    pub vanishing: u64,
}

/// Expands `∏_i Σ_{j,k} d†_{j↑} d†_{k↓}` over all `M^(2P)` index strings and counts
/// the strings that annihilate the vacuum because a spin-orbital repeats.
pub fn pauli_summand_census(shells: usize, n_modes: usize) -> Result<PauliCensus> {
    if shells == 0 || shells > n_modes {
        return Err(Error::InvalidConfiguration(format!(
            "closed shell needs 1 <= P <= M, got P={shells}, M={n_modes}"
        )));
    }
    let raw = (n_modes as u64)
        .checked_pow(2 * shells as u32)
        .filter(|&r| r <= 100_000_000)
        .ok_or_else(|| {
            Error::Capacity(format!("M^(2P) summands too many for M={n_modes}, P={shells}"))
        })?;
    let vac = FockAmplitudeState::vacuum(n_modes)?;
    let one = Complex64::new(1.0, 0.0);
    let mut vanishing = 0;
    let mut digits = vec![0usize; 2 * shells];
    for _ in 0..raw {
        let mut running = vac.clone();
        // digits = (j_1, k_1, j_2, k_2, ...); apply right to left
        for (pos, &mode) in digits.iter().enumerate().rev() {
            let orb = if pos % 2 == 0 {
                SpinOrbital::up(mode)
            } else {
                SpinOrbital::down(mode)
            };
            running = running.apply_creation(orb, one)?;
            if running.is_empty() {
                break;
            }
        }
        if running.is_empty() {
            vanishing += 1;
        }
        for d in digits.iter_mut() {
            *d += 1;
            if *d < n_modes {
                break;
            }
            *d = 0;
        }
    }
    Ok(PauliCensus {
        raw_summands: raw,
        vanishing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{qft_unitary, random_unitary};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn creation_on_vacuum() {
        let vac = FockAmplitudeState::vacuum(3).unwrap();
        let s = vac.apply_creation(SpinOrbital::up(0), c(1.0)).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.amplitude(FockBasisState(1)), c(1.0));
    }

    #[test]
    fn pauli_exclusion() {
        let vac = FockAmplitudeState::vacuum(3).unwrap();
        let s = vac.apply_creation(SpinOrbital::up(0), c(1.0)).unwrap();
        let z = s.apply_creation(SpinOrbital::up(0), c(1.0)).unwrap();
        assert!(z.is_empty());
    }

    #[test]
    fn creation_sign_counts_lower_orbitals() {
        let vac = FockAmplitudeState::vacuum(2).unwrap();
        let s = vac.apply_creation(SpinOrbital::up(0), c(1.0)).unwrap();
        let t = s.apply_creation(SpinOrbital::up(1), c(1.0)).unwrap();
        assert_eq!(t.amplitude(FockBasisState(0b101)), c(-1.0));
    }

    #[test]
    fn creation_rejects_out_of_range_mode() {
        let vac = FockAmplitudeState::vacuum(2).unwrap();
        assert!(matches!(
            vac.apply_creation(SpinOrbital::up(2), c(1.0)),
            Err(Error::IndexOutOfRange { index: 2, modes: 2 })
        ));
    }

    #[test]
    fn closed_shell_examples() {
        let full = build_closed_shell(2, 2).unwrap();
        assert_eq!(full.len(), 1);
        assert_eq!(full.amplitude(FockBasisState(0b1111)), c(1.0));

        let one = build_closed_shell(1, 3).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.amplitude(FockBasisState(0b11)), c(1.0));

        assert!(matches!(
            build_closed_shell(4, 3),
            Err(Error::InvalidConfiguration(_))
        ));
    }

    #[test]
    fn identity_transform_is_bitwise_identity() {
        let psi = build_closed_shell(2, 4).unwrap();
        let u = crate::fock::identity_unitary(4);
        let out = transform_to_extraction_basis(&psi, &u).unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn transform_rejects_dimension_mismatch() {
        let psi = build_closed_shell(2, 4).unwrap();
        let u = qft_unitary(3).unwrap();
        assert!(transform_to_extraction_basis(&psi, &u).is_err());
    }

    #[test]
    fn transform_conserves_particle_number_and_sz() {
        for seed in 0..10 {
            let psi = build_closed_shell(2, 4).unwrap();
            let u = random_unitary(4, seed).unwrap();
            let out = transform_to_extraction_basis(&psi, &u).unwrap();
            assert!((out.norm() - 1.0).abs() < 1e-10);
            for (basis, _) in out.iter() {
                assert_eq!(basis.particle_number(), 4);
                assert_eq!(basis.twice_sz(), 0);
            }
        }
    }

    #[test]
    fn inverse_transform_recovers_source() {
        let psi = build_closed_shell(2, 4).unwrap();
        let u = random_unitary(4, 7).unwrap();
        let there = transform_to_extraction_basis(&psi, &u).unwrap();
        let back = transform_to_extraction_basis(&there, &u.adjoint()).unwrap();
        assert!(back.max_abs_diff(&psi) < 1e-10);
    }

    #[test]
    fn qft_four_mode_pauli_census() {
        let census = pauli_summand_census(2, 4).unwrap();
        assert_eq!(census.raw_summands, 256);
        assert_eq!(census.vanishing, 112);
    }
}
