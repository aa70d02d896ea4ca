//! n-body reduced density matrices: the spin state read out from one electron
//! per mode.
//!
//! `Γ[σ, σ'] = ⟨Ψ| d†_{k σ'_k} … d†_{i σ'_i} d_{i σ_i} … d_{k σ_k} |Ψ⟩` over the
//! product basis of [`crate::spin`], computed either from the correlators
//! directly or by mapping the blocks of the reduced density operator: a
//! doubly-occupied mode contributes the identity on its spin, a singly-occupied
//! one its spin state.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fock::{FockAmplitudeState, Spin, SpinOrbital};
use crate::json;
use crate::rdo::{spin_basis_for_block, RdoBlockSet};
use crate::spin::{
    collective_spin, coupled_transform, max_abs, spin_bit, Axis, SpinMatrix, MAX_SPINS,
};

/// Largest spin count for an nBRDM.
pub const MAX_NBRDM_SPINS: usize = 6;

/// Largest imaginary part tolerated in a "real" Γ.
pub const REALITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SpinDensityMatrix {
    pub modes: Vec<usize>,
    pub matrix: SpinMatrix,
    pub normalized: bool,
    /// Trace before normalization, `⟨∏ n̂_mode⟩`.
    pub raw_trace: f64,
}

fn check_modes(modes: &[usize], n_modes: usize) -> Result<()> {
    if modes.is_empty() || modes.len() > MAX_NBRDM_SPINS {
        return Err(Error::Capacity(format!(
            "nBRDM needs 1..={MAX_NBRDM_SPINS} modes, got {}",
            modes.len()
        )));
    }
    for (i, &m) in modes.iter().enumerate() {
        if m >= n_modes {
            return Err(Error::IndexOutOfRange { index: m, modes: n_modes });
        }
        if modes[..i].contains(&m) {
            return Err(Error::InvalidConfiguration(format!("duplicate mode {m} in {modes:?}")));
        }
    }
    Ok(())
}

/// Γ from the correlators, with `φ_σ = d_{i σ_i} d_{j σ_j} … d_{k σ_k} |Ψ⟩` and
/// `Γ[σ, σ'] = ⟨φ_σ'|φ_σ⟩`.
pub fn compute_nbrdm_direct(state: &FockAmplitudeState, modes: &[usize]) -> Result<SpinDensityMatrix> {
    check_modes(modes, state.n_modes())?;
    let n = modes.len();
    let dim = 1 << n;
    let one = Complex64::new(1.0, 0.0);
    let phis: Vec<FockAmplitudeState> = (0..dim)
        .map(|sigma| {
            (0..n).rev().try_fold(state.clone(), |phi, t| {
                let orb = SpinOrbital::new(modes[t], Spin::from_bit(spin_bit(sigma, t, n)));
                phi.apply_annihilation(orb, one)
            })
        })
        .collect::<Result<_>>()?;
    let matrix = SpinMatrix::from_fn(dim, dim, |r, c| phis[c].inner(&phis[r]));
    let raw_trace = matrix.trace().re;
    Ok(SpinDensityMatrix {
        modes: modes.to_vec(),
        matrix,
        normalized: false,
        raw_trace,
    })
}

/// Γ assembled from the RDO blocks without empty modes.
pub fn nbrdm_from_rdo(blocks: &RdoBlockSet) -> Result<SpinDensityMatrix> {
    let n = blocks.kept_modes.len();
    if n == 0 || n > MAX_NBRDM_SPINS {
        return Err(Error::Capacity(format!("nBRDM needs 1..={MAX_NBRDM_SPINS} modes, got {n}")));
    }
    let dim = 1 << n;
    let mut gamma = SpinMatrix::zeros(dim, dim);
    for (key, block) in &blocks.blocks {
        if key.occ.len() != n {
            return Err(Error::InvalidInput(format!(
                "block {key:?} does not match kept modes {:?}",
                blocks.kept_modes
            )));
        }
        if block.excluded_from_nbrdm {
            continue;
        }
        let singles = key.singles();
        let doubles = key.doubles();
        let q = singles.len();
        let basis = spin_basis_for_block(key)?;
        if basis.len() != block.matrix.nrows() {
            return Err(Error::InvalidInput(format!("block {key:?} has the wrong dimension")));
        }
        let s = SpinMatrix::from_fn(1 << q, basis.len(), |r, c| basis[c].spin[r]);
        let image = &s * &block.matrix * s.adjoint();
        let project = |sigma: usize| -> usize {
            singles
                .iter()
                .enumerate()
                .fold(0, |acc, (r, &t)| acc | spin_bit(sigma, t, n) << (q - 1 - r))
        };
        let doubles_of = |sigma: usize| -> Vec<usize> { doubles.iter().map(|&t| spin_bit(sigma, t, n)).collect() };
        for r in 0..dim {
            for c in 0..dim {
                if doubles_of(r) == doubles_of(c) {
                    gamma[(r, c)] += image[(project(r), project(c))];
                }
            }
        }
    }
    let raw_trace = gamma.trace().re;
    Ok(SpinDensityMatrix {
        modes: blocks.kept_modes.clone(),
        matrix: gamma,
        normalized: false,
        raw_trace,
    })
}

impl SpinDensityMatrix {
    pub fn from_matrix(modes: Vec<usize>, matrix: SpinMatrix) -> Result<Self> {
        if matrix.nrows() != 1 << modes.len() || !matrix.is_square() || modes.len() > MAX_SPINS {
            return Err(Error::InvalidInput(format!(
                "{}x{} matrix does not fit {} spins",
                matrix.nrows(),
                matrix.ncols(),
                modes.len()
            )));
        }
        let raw_trace = matrix.trace().re;
        Ok(Self {
            modes,
            matrix,
            normalized: false,
            raw_trace,
        })
    }

    pub fn n(&self) -> usize {
        self.modes.len()
    }

    /// Γ / tr Γ, keeping `raw_trace`.
    pub fn normalized(&self) -> Result<Self> {
        let tr = self.matrix.trace().re;
        if tr.abs() < 1e-300 {
            return Err(Error::NotApplicable(
                "Γ has zero trace: the modes are never singly occupied together".into(),
            ));
        }
        Ok(Self {
            modes: self.modes.clone(),
            matrix: &self.matrix / Complex64::new(tr, 0.0),
            normalized: true,
            raw_trace: self.raw_trace,
        })
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max_α max |[Γ, S_α]|`.
    pub fn spin_commutator_residual(&self) -> Result<f64> {
        Axis::ALL.iter().try_fold(0.0f64, |acc, &axis| {
            let s = collective_spin(axis, self.n())?;
            Ok(acc.max(max_abs(&(&self.matrix * &s - &s * &self.matrix))))
        })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "modes": self.modes,
            "normalized": self.normalized,
            "raw_trace": self.raw_trace,
            "matrix": json::matrix(&self.matrix),
        })
    }
}

/// Γ in the coupled basis, split by `(2S, 2M)`.
#[derive(Debug, Clone)]
pub struct SpinBlocks {
    pub blocks: BTreeMap<(u32, i32), SpinMatrix>,
    pub off_block_residual: f64,
    /// Largest difference between a block and the `M = S` block of its `S`.
    pub m_spread: f64,
}

impl SpinBlocks {
    pub fn to_json(&self) -> Value {
        let blocks: Vec<Value> = self
            .blocks
            .iter()
            .map(|(&(s2, m2), m)| json!({"2S": s2, "2M": m2, "matrix": json::matrix(m)}))
            .collect();
        json!({
            "blocks": blocks,
            "off_block_residual": self.off_block_residual,
            "m_spread": self.m_spread,
        })
    }
}

/// Rotates Γ into the coupled basis and cuts out the `(S, M)` blocks; every
/// allowed block is returned, including empty ones.
pub fn block_decompose_spin(gamma: &SpinDensityMatrix, tol: f64) -> Result<SpinBlocks> {
    let (t, labels) = coupled_transform(gamma.n())?;
    let rotated = t.adjoint() * &gamma.matrix * &t;
    let mut off_block_residual: f64 = 0.0;
    for r in 0..labels.len() {
        for c in 0..labels.len() {
            if labels[r] != labels[c] {
                off_block_residual = off_block_residual.max(rotated[(r, c)].norm());
            }
        }
    }
    if off_block_residual > tol {
        return Err(Error::StructureViolation {
            residual: off_block_residual,
            tol,
        });
    }
    let mut blocks = BTreeMap::new();
    let mut start = 0;
    while start < labels.len() {
        let end = (start..labels.len()).find(|&i| labels[i] != labels[start]).unwrap_or(labels.len());
        let size = end - start;
        blocks.insert(labels[start], rotated.view((start, start), (size, size)).into_owned());
        start = end;
    }
    let m_spread = blocks
        .iter()
        .map(|(&(s2, _), m)| max_abs(&(m - &blocks[&(s2, s2 as i32)])))
        .fold(0.0, f64::max);
    Ok(SpinBlocks {
        blocks,
        off_block_residual,
        m_spread,
    })
}

/// `|S_ab⟩⟨S_ab|` on spins `a`, `b`, identity on the others.
pub fn singlet_projector(n: usize, a: usize, b: usize) -> SpinMatrix {
    let dim = 1 << n;
    let amp = |x: usize, y: usize| match (x, y) {
        (0, 1) => std::f64::consts::FRAC_1_SQRT_2,
        (1, 0) => -std::f64::consts::FRAC_1_SQRT_2,
        _ => 0.0,
    };
    let rest_mask = !((1usize << (n - 1 - a)) | (1usize << (n - 1 - b)));
    SpinMatrix::from_fn(dim, dim, |r, c| {
        if r & rest_mask != c & rest_mask {
            return Complex64::default();
        }
        Complex64::new(amp(spin_bit(r, a, n), spin_bit(r, b, n)) * amp(spin_bit(c, a, n), spin_bit(c, b, n)), 0.0)
    })
}

/// Unit-trace family of singlet-product projectors for `n = 3` or `4`.
pub fn projector_family(n: usize) -> Result<Vec<(String, SpinMatrix)>> {
    let dim = 1 << n;
    let id = SpinMatrix::identity(dim, dim);
    let c = |x: f64| Complex64::new(x, 0.0);
    match n {
        3 => {
            let mut family: Vec<(String, SpinMatrix)> = [(0, 1), (1, 2), (0, 2)]
                .iter()
                .map(|&(a, b)| (format!("S_{a}{b}"), singlet_projector(3, a, b) * c(0.5)))
                .collect();
            family.push(("I".into(), id * c(1.0 / 8.0)));
            Ok(family)
        }
        4 => {
            let pairs = [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))];
            let mut family: Vec<(String, SpinMatrix)> = pairs
                .iter()
                .map(|&((a, b), (cc, d))| {
                    (
                        format!("S_{a}{b},S_{cc}{d}"),
                        singlet_projector(4, a, b) * singlet_projector(4, cc, d),
                    )
                })
                .collect();
            family.extend(
                pairs
                    .iter()
                    .map(|&((a, b), _)| (format!("S_{a}{b}"), singlet_projector(4, a, b) * c(0.25))),
            );
            family.push(("I".into(), id * c(1.0 / 16.0)));
            Ok(family)
        }
        _ => Err(Error::NotApplicable(format!("projector decomposition defined for n = 3, 4, got {n}"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorDecomposition {
    pub labels: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Frobenius norm of `Γ − Σ p_k F_k`.
    pub residual: f64,
    /// Global phase applied before taking the real part.
    pub phase: Complex64,
}

impl ProjectorDecomposition {
    pub fn coefficient_sum(&self) -> f64 {
        self.coefficients.iter().sum()
    }

    pub fn to_json(&self) -> Value {
        let coefficients: serde_json::Map<String, Value> = self
            .labels
            .iter()
            .zip(&self.coefficients)
            .map(|(l, &p)| (l.clone(), json!(p)))
            .collect();
        json!({"coefficients": coefficients, "residual": self.residual, "phase": json::complex(self.phase)})
    }
}

/// Least-squares expansion of a real Γ over [`projector_family`].
pub fn projector_decomposition(gamma: &SpinDensityMatrix) -> Result<ProjectorDecomposition> {
    let family = projector_family(gamma.n())?;
    let (mut best, mut phase) = (0.0, Complex64::new(1.0, 0.0));
    for z in gamma.matrix.iter() {
        if z.norm() > best {
            best = z.norm();
            phase = z.conj() / z.norm();
        }
    }
    let rotated = &gamma.matrix * phase;
    let imaginary = rotated.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    if imaginary > REALITY_TOL {
        return Err(Error::NotApplicable(format!(
            "Γ is not real (imaginary part {imaginary:.3e}); decomposition needs a real matrix"
        )));
    }
    let real = rotated.map(|z| z.re);
    let fam: Vec<DMatrix<f64>> = family.iter().map(|(_, f)| f.map(|z| z.re)).collect();
    let k = fam.len();
    let gram = DMatrix::from_fn(k, k, |a, b| fam[a].dot(&fam[b]));
    let min_gram = gram.clone().symmetric_eigen().eigenvalues.min();
    if min_gram < 1e-12 {
        return Err(Error::NotApplicable("projector family is linearly dependent".into()));
    }
    let rhs = DMatrix::from_fn(k, 1, |a, _| fam[a].dot(&real));
    let solution = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NotApplicable("singular projector Gram matrix".into()))?;
    let coefficients: Vec<f64> = solution.iter().copied().collect();
    let fit = fam
        .iter()
        .zip(&coefficients)
        .fold(DMatrix::zeros(real.nrows(), real.ncols()), |acc, (f, &p)| acc + f * p);
    Ok(ProjectorDecomposition {
        labels: family.into_iter().map(|(l, _)| l).collect(),
        coefficients,
        residual: (real - fit).norm(),
        phase,
    })
}

/// Exact real number `Σ_r c_r √r` over square-free radicands.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Surd {
    terms: BTreeMap<u64, Ratio<i64>>,
}

impl Surd {
    pub fn rational(value: Ratio<i64>) -> Self {
        let mut s = Self::default();
        s.add_term(1, value);
        s
    }

    pub fn integer(value: i64) -> Self {
        Self::rational(Ratio::from_integer(value))
    }

    /// `coeff · √radicand` with square factors pulled out.
    pub fn root(coeff: Ratio<i64>, radicand: u64) -> Self {
        let mut free = radicand;
        let mut outside = 1i64;
        let mut f = 2u64;
        while f * f <= free {
            while free.is_multiple_of(f * f) {
                free /= f * f;
                outside *= f as i64;
            }
            f += 1;
        }
        let mut s = Self::default();
        if radicand != 0 {
            s.add_term(free, coeff * outside);
        }
        s
    }

    fn add_term(&mut self, radicand: u64, coeff: Ratio<i64>) {
        let slot = self.terms.entry(radicand).or_insert_with(Ratio::zero);
        *slot += coeff;
        if slot.is_zero() {
            self.terms.remove(&radicand);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(&r, c)| *c.numer() as f64 / *c.denom() as f64 * (r as f64).sqrt())
            .sum()
    }
}

impl Add for Surd {
    type Output = Surd;
    fn add(mut self, rhs: Surd) -> Surd {
        for (r, c) in rhs.terms {
            self.add_term(r, c);
        }
        self
    }
}

impl Neg for Surd {
    type Output = Surd;
    fn neg(mut self) -> Surd {
        for c in self.terms.values_mut() {
            *c = -*c;
        }
        self
    }
}

impl Sub for Surd {
    type Output = Surd;
    fn sub(self, rhs: Surd) -> Surd {
        self + (-rhs)
    }
}

impl Mul for Surd {
    type Output = Surd;
    fn mul(self, rhs: Surd) -> Surd {
        let mut out = Surd::default();
        for (&ra, ca) in &self.terms {
            for (&rb, cb) in &rhs.terms {
                out = out + Surd::root(ca * cb, ra * rb);
            }
        }
        out
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (&r, c)) in self.terms.iter().enumerate() {
            let sign = match (i, c.is_negative()) {
                (0, true) => "-",
                (0, false) => "",
                (_, true) => " - ",
                (_, false) => " + ",
            };
            write!(f, "{sign}{}", c.abs())?;
            if r != 1 {
                write!(f, "√{r}")?;
            }
        }
        Ok(())
    }
}

/// Three-spin product state vector with exact entries, indexed as in [`crate::spin`].
type ExactVector = [Surd; 8];

fn exact_vector(entries: &[(usize, Surd)]) -> ExactVector {
    let mut v: ExactVector = Default::default();
    for (idx, amp) in entries {
        v[*idx] = v[*idx].clone() + amp.clone();
    }
    v
}

fn exact_inner(a: &ExactVector, b: &ExactVector) -> Surd {
    a.iter().zip(b).fold(Surd::default(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// Product-state index of `|σ_0 σ_1 σ_2⟩` from a string like `"udu"`.
fn three_spin_index(spins: &str) -> usize {
    spins.bytes().fold(0, |acc, s| acc << 1 | (s == b'd') as usize)
}

/// Projectors on `|S_01,↑_2⟩`, `|S_02,↑_1⟩`, `|S_12,↑_0⟩` as exact 2×2 matrices in
/// the basis `{|S_01,↑_2⟩, |S_01=1,↑_2⟩}` of the three-spin `S = M = 1/2` space,
/// where `|S_01=1,↑_2⟩ = (|↑↓↑⟩ + |↓↑↑⟩ − 2|↑↑↓⟩)/√6`.
pub fn three_spin_singlet_projectors() -> Vec<(String, [[Surd; 2]; 2])> {
    let h = || Surd::root(Ratio::new(1, 2), 2);
    let neg_h = || -h();
    let s6 = |k: i64| Surd::root(Ratio::new(k, 6), 6);
    let i = three_spin_index;
    let singlet = exact_vector(&[(i("udu"), h()), (i("duu"), neg_h())]);
    let triplet = exact_vector(&[(i("udu"), s6(1)), (i("duu"), s6(1)), (i("uud"), s6(-2))]);
    let basis = [singlet.clone(), triplet];
    let states = [
        ("S_01,up_2", singlet),
        ("S_02,up_1", exact_vector(&[(i("uud"), h()), (i("duu"), neg_h())])),
        ("S_12,up_0", exact_vector(&[(i("uud"), h()), (i("udu"), neg_h())])),
    ];
    states
        .into_iter()
        .map(|(label, v)| {
            let overlaps = [exact_inner(&basis[0], &v), exact_inner(&basis[1], &v)];
            let m = [
                [overlaps[0].clone() * overlaps[0].clone(), overlaps[0].clone() * overlaps[1].clone()],
                [overlaps[1].clone() * overlaps[0].clone(), overlaps[1].clone() * overlaps[1].clone()],
            ];
            (label.to_string(), m)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_closed_shell, identity_unitary, transform_to_extraction_basis};
    use crate::spin::{coupled_basis, kron};

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn identity_source_gives_unpolarized_spins() {
        let psi = transform_to_extraction_basis(&build_closed_shell(2, 2).unwrap(), &identity_unitary(2)).unwrap();
        let gamma = compute_nbrdm_direct(&psi, &[0, 1]).unwrap();
        assert!((gamma.raw_trace - 4.0).abs() < 1e-14);
        let g = gamma.normalized().unwrap();
        assert!(max_abs(&(&g.matrix - SpinMatrix::identity(4, 4) * c(0.25))) < 1e-15);
    }

    #[test]
    fn rejects_bad_mode_lists() {
        let psi = build_closed_shell(2, 4).unwrap();
        assert!(compute_nbrdm_direct(&psi, &[0, 0]).is_err());
        assert!(compute_nbrdm_direct(&psi, &[4]).is_err());
        assert!(matches!(compute_nbrdm_direct(&psi, &[]), Err(Error::Capacity(_))));
    }

    #[test]
    fn maximally_mixed_three_spins() {
        let gamma = SpinDensityMatrix::from_matrix(vec![0, 1, 2], SpinMatrix::identity(8, 8) * c(0.125)).unwrap();
        let d = projector_decomposition(&gamma).unwrap();
        assert!(d.residual < 1e-12);
        assert!((d.coefficients[3] - 1.0).abs() < 1e-12);
        assert!(d.coefficients[..3].iter().all(|p| p.abs() < 1e-12));
    }

    #[test]
    fn single_family_member_is_recovered() {
        let m = singlet_projector(3, 0, 1) * c(0.5);
        let gamma = SpinDensityMatrix::from_matrix(vec![0, 1, 2], m).unwrap();
        let d = projector_decomposition(&gamma).unwrap();
        assert!(d.residual < 1e-12);
        assert!((d.coefficients[0] - 1.0).abs() < 1e-12);
        assert!(d.coefficients[1..].iter().all(|p| p.abs() < 1e-12));
    }

    #[test]
    fn four_spin_family_is_independent() {
        let family = projector_family(4).unwrap();
        assert_eq!(family.len(), 7);
        for (_, f) in &family {
            assert!((f.trace().re - 1.0).abs() < 1e-14);
        }
        let gamma = SpinDensityMatrix::from_matrix(vec![0, 1, 2, 3], family[4].1.clone()).unwrap();
        let d = projector_decomposition(&gamma).unwrap();
        assert!((d.coefficients[4] - 1.0).abs() < 1e-12 && d.residual < 1e-12);
    }

    #[test]
    fn complex_gamma_is_not_applicable() {
        let mut m = SpinMatrix::identity(8, 8) * c(0.125);
        m[(1, 2)] = Complex64::new(0.0, 0.05);
        m[(2, 1)] = Complex64::new(0.0, -0.05);
        let gamma = SpinDensityMatrix::from_matrix(vec![0, 1, 2], m).unwrap();
        assert!(matches!(projector_decomposition(&gamma), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn surd_arithmetic() {
        let r3 = Surd::root(Ratio::from_integer(1), 3);
        assert_eq!(r3.clone() * r3.clone(), Surd::integer(3));
        assert_eq!(Surd::root(Ratio::from_integer(1), 12), Surd::root(Ratio::from_integer(2), 3));
        assert!((r3.clone() - Surd::integer(1)).to_f64() - (3f64.sqrt() - 1.0) < 1e-15);
        assert_eq!((r3.clone() - r3).to_string(), "0");
    }

    #[test]
    fn exact_projectors_match_coupled_basis() {
        // the Gram–Schmidt triplet-pair vector is minus the fixture's second basis vector
        let basis = coupled_basis(3, 1, 1).unwrap();
        for (label, exact) in three_spin_singlet_projectors() {
            let (a, b) = match label.as_str() {
                "S_01,up_2" => (0, 1),
                "S_02,up_1" => (0, 2),
                _ => (1, 2),
            };
            let p = singlet_projector(3, a, b);
            for r in 0..2 {
                for col in 0..2 {
                    let sign = if r == col { 1.0 } else { -1.0 };
                    let numeric = basis[r].vector.dotc(&(&p * &basis[col].vector)).re * sign;
                    // the free spin is up in the M = 1/2 space
                    assert!((numeric - exact[r][col].to_f64()).abs() < 1e-12, "{label} ({r},{col})");
                }
            }
        }
    }

    #[test]
    fn kron_of_unpolarized_factor_survives_decomposition() {
        let half = SpinMatrix::identity(2, 2) * c(0.5);
        let singlet = singlet_projector(2, 0, 1);
        let gamma = SpinDensityMatrix::from_matrix(vec![0, 1, 2], kron(&singlet, &half)).unwrap();
        let blocks = block_decompose_spin(&gamma, 1e-10).unwrap();
        assert_eq!(blocks.blocks.len(), 6);
        assert!(blocks.m_spread < 1e-12);
    }
}
