use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{FockAmplitudeState, FockBasisState, Spin, SpinOrbital};
use crate::error::{Error, Result};

/// Largest mode count for explicit full-space operators (4^6 = 4096 states).
pub const DENSE_MODE_LIMIT: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollectiveKind {
    N,
    Sz,
    S2,
    Sx,
    Sy,
}

/// Explicit matrix over the full 4^M Fock space, stored by rows.
///
/// Row and column indices are occupation words.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    rows: Vec<BTreeMap<usize, Complex64>>,
}

impl SparseOperator {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            rows: vec![BTreeMap::new(); dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut op = Self::zero(dim);
        for i in 0..dim {
            op.rows[i].insert(i, Complex64::new(1.0, 0.0));
        }
        op
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.rows[row].get(&col).copied().unwrap_or_default()
    }

    pub fn insert_add(&mut self, row: usize, col: usize, value: Complex64) {
        *self.rows[row].entry(col).or_default() += value;
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(BTreeMap::len).sum()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for row in &mut out.rows {
            for v in row.values_mut() {
                *v *= factor;
            }
        }
        out
    }

    pub fn plus(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (r, row) in other.rows.iter().enumerate() {
            for (&c, &v) in row {
                out.insert_add(r, c, v);
            }
        }
        out.drop_zeros();
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut out = Self::zero(self.dim);
        for (r, row) in self.rows.iter().enumerate() {
            for (&k, &a) in row {
                for (&c, &b) in &other.rows[k] {
                    out.insert_add(r, c, a * b);
                }
            }
        }
        out.drop_zeros();
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero(self.dim);
        for (r, row) in self.rows.iter().enumerate() {
            for (&c, &v) in row {
                out.insert_add(c, r, v.conj());
            }
        }
        out
    }

    fn drop_zeros(&mut self) {
        for row in &mut self.rows {
            row.retain(|_, v| v.norm() > 1e-15);
        }
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        self.rows
            .iter()
            .map(|row| row.iter().map(|(&c, &a)| a * v[c]).sum())
            .collect()
    }

    /// `⟨v|A|v⟩`.
    pub fn expectation(&self, v: &[Complex64]) -> Complex64 {
        let av = self.apply(v);
        v.iter().zip(&av).map(|(a, b)| a.conj() * b).sum()
    }

    /// Action on a sparse Fock state of matching dimension.
    pub fn apply_state(&self, state: &FockAmplitudeState) -> Result<FockAmplitudeState> {
        let v = state.to_dense()?;
        let out = self.apply(&v);
        FockAmplitudeState::from_amplitudes(
            state.n_modes(),
            out.into_iter()
                .enumerate()
                .map(|(i, a)| (i as u64, a)),
        )
    }
}

fn check_capacity(n_modes: usize) -> Result<usize> {
    if n_modes == 0 || n_modes > DENSE_MODE_LIMIT {
        return Err(Error::Capacity(format!(
            "full-space operators support 1..={DENSE_MODE_LIMIT} modes, got {n_modes}"
        )));
    }
    Ok(1usize << (2 * n_modes))
}

/// Matrix of `d†_orb` on the full space.
pub fn creation_operator(orb: SpinOrbital, n_modes: usize) -> Result<SparseOperator> {
    let dim = check_capacity(n_modes)?;
    if orb.mode >= n_modes {
        return Err(Error::IndexOutOfRange {
            index: orb.mode,
            modes: n_modes,
        });
    }
    let bit = 1usize << orb.linear_index();
    let mut op = SparseOperator::zero(dim);
    for word in 0..dim {
        if word & bit == 0 {
            let sign = FockBasisState(word as u64).creation_sign(orb);
            op.insert_add(word | bit, word, Complex64::new(sign, 0.0));
        }
    }
    Ok(op)
}

/// `d†_{mode,a} d_{mode,b}` on the full space.
fn hopping(mode: usize, to: Spin, from: Spin, n_modes: usize) -> Result<SparseOperator> {
    let create = creation_operator(SpinOrbital::new(mode, to), n_modes)?;
    let annihilate = creation_operator(SpinOrbital::new(mode, from), n_modes)?.adjoint();
    Ok(create.matmul(&annihilate))
}

/// Collective operator summed over all modes: particle number or a total-spin component.
pub fn collective_operator(kind: CollectiveKind, n_modes: usize) -> Result<SparseOperator> {
    let dim = check_capacity(n_modes)?;
    let half = Complex64::new(0.5, 0.0);
    let mut acc = SparseOperator::zero(dim);
    match kind {
        CollectiveKind::N => {
            for mode in 0..n_modes {
                acc = acc.plus(&hopping(mode, Spin::Up, Spin::Up, n_modes)?);
                acc = acc.plus(&hopping(mode, Spin::Down, Spin::Down, n_modes)?);
            }
        }
        CollectiveKind::Sz => {
            for mode in 0..n_modes {
                acc = acc.plus(&hopping(mode, Spin::Up, Spin::Up, n_modes)?.scaled(half));
                acc = acc.plus(&hopping(mode, Spin::Down, Spin::Down, n_modes)?.scaled(-half));
            }
        }
        CollectiveKind::Sx | CollectiveKind::Sy => {
            let (plus_w, minus_w) = if kind == CollectiveKind::Sx {
                (half, half)
            } else {
                (Complex64::new(0.0, -0.5), Complex64::new(0.0, 0.5))
            };
            for mode in 0..n_modes {
                acc = acc.plus(&hopping(mode, Spin::Up, Spin::Down, n_modes)?.scaled(plus_w));
                acc = acc.plus(&hopping(mode, Spin::Down, Spin::Up, n_modes)?.scaled(minus_w));
            }
        }
        CollectiveKind::S2 => {
            for k in [CollectiveKind::Sx, CollectiveKind::Sy, CollectiveKind::Sz] {
                let s = collective_operator(k, n_modes)?;
                acc = acc.plus(&s.matmul(&s));
            }
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_closed_shell, qft_unitary, transform_to_extraction_basis};

    #[test]
    fn capacity_limit() {
        assert!(matches!(
            collective_operator(CollectiveKind::N, 7),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn closed_shell_eigenvalues() {
        for (p, m) in [(1, 2), (2, 3), (2, 4)] {
            let psi = build_closed_shell(p, m).unwrap().to_dense().unwrap();
            let n = collective_operator(CollectiveKind::N, m).unwrap();
            let sz = collective_operator(CollectiveKind::Sz, m).unwrap();
            let s2 = collective_operator(CollectiveKind::S2, m).unwrap();
            let npsi = n.apply(&psi);
            for (a, b) in npsi.iter().zip(&psi) {
                assert!((a - b * (2 * p) as f64).norm() < 1e-12);
            }
            assert!(sz.apply(&psi).iter().all(|z| z.norm() < 1e-12));
            assert!(s2.apply(&psi).iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn spin_algebra_commutator() {
        // [Sx, Sy] = i Sz
        let m = 2;
        let sx = collective_operator(CollectiveKind::Sx, m).unwrap();
        let sy = collective_operator(CollectiveKind::Sy, m).unwrap();
        let sz = collective_operator(CollectiveKind::Sz, m).unwrap();
        let comm = sx.matmul(&sy).plus(&sy.matmul(&sx).scaled(Complex64::new(-1.0, 0.0)));
        let target = sz.scaled(Complex64::new(0.0, 1.0));
        for r in 0..comm.dim() {
            for c in 0..comm.dim() {
                assert!((comm.get(r, c) - target.get(r, c)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn transformed_shell_stays_singlet() {
        let psi = build_closed_shell(2, 4).unwrap();
        let out = transform_to_extraction_basis(&psi, &qft_unitary(4).unwrap()).unwrap();
        let v = out.to_dense().unwrap();
        let s2 = collective_operator(CollectiveKind::S2, 4).unwrap();
        assert!(s2.expectation(&v).norm() < 1e-10);
    }
}
