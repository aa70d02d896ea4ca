//! Spin-1/2 registers: product basis, collective operators and coupled bases.
//!
//! Product basis index for `n` spins: spin `t` (0-based) contributes bit
//! `n - 1 - t`, with up = 0 and down = 1, so `|σ_0 σ_1 … σ_{n-1}⟩` follows
//! Kronecker order with the first spin most significant.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::census::{binomial, d_s};
use crate::error::{Error, Result};

/// Largest spin count handled with dense `2^n` matrices.
pub const MAX_SPINS: usize = 12;

/// Overlap below which a Gram–Schmidt residual is treated as dependent.
const GS_TOL: f64 = 1e-10;

pub type SpinVector = DVector<Complex64>;
pub type SpinMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Down-spin flag of spin `t` in product index `index`.
pub fn spin_bit(index: usize, t: usize, n: usize) -> usize {
    (index >> (n - 1 - t)) & 1
}

fn check_spins(n: usize) -> Result<()> {
    if n > MAX_SPINS {
        return Err(Error::Capacity(format!("at most {MAX_SPINS} spins, got {n}")));
    }
    Ok(())
}

/// `s_α = σ_α / 2` acting on spin `t` of `n`.
pub fn single_spin_operator(axis: Axis, t: usize, n: usize) -> SpinMatrix {
    let dim = 1 << n;
    let mut op = SpinMatrix::zeros(dim, dim);
    let flip = 1 << (n - 1 - t);
    for col in 0..dim {
        let down = spin_bit(col, t, n) == 1;
        match axis {
            Axis::Z => op[(col, col)] = c(if down { -0.5 } else { 0.5 }),
            Axis::X => op[(col ^ flip, col)] = c(0.5),
            // σ_y|↑⟩ = i|↓⟩, σ_y|↓⟩ = −i|↑⟩
            Axis::Y => {
                op[(col ^ flip, col)] = Complex64::new(0.0, if down { -0.5 } else { 0.5 })
            }
        }
    }
    op
}

/// Collective `S_α = Σ_t s_α^(t)`.
pub fn collective_spin(axis: Axis, n: usize) -> Result<SpinMatrix> {
    check_spins(n)?;
    let dim = 1 << n;
    Ok((0..n).fold(SpinMatrix::zeros(dim, dim), |acc, t| {
        acc + single_spin_operator(axis, t, n)
    }))
}

pub fn total_spin_squared(n: usize) -> Result<SpinMatrix> {
    let mut acc = SpinMatrix::zeros(1 << n, 1 << n);
    for axis in Axis::ALL {
        let s = collective_spin(axis, n)?;
        acc += &s * &s;
    }
    Ok(acc)
}

/// Twice the total `S_z` of a product basis state.
pub fn twice_m(index: usize, n: usize) -> i32 {
    n as i32 - 2 * index.count_ones() as i32
}

/// `|S_ab⟩ = (|↑_a↓_b⟩ − |↓_a↑_b⟩)/√2` on the two listed spins, as amplitudes
/// over their local configurations `(σ_a, σ_b)`.
fn singlet_amplitude(sa: usize, sb: usize) -> f64 {
    match (sa, sb) {
        (0, 1) => std::f64::consts::FRAC_1_SQRT_2,
        (1, 0) => -std::f64::consts::FRAC_1_SQRT_2,
        _ => 0.0,
    }
}

/// Singlets on `pairs` times the normalized symmetric `(S, M)` state of the
/// remaining spins, with `2S` equal to their number.
pub fn paired_symmetric_state(n: usize, pairs: &[(usize, usize)], m2: i32) -> Result<SpinVector> {
    check_spins(n)?;
    let mut paired = vec![false; n];
    for &(a, b) in pairs {
        if a >= n || b >= n || a == b || paired[a] || paired[b] {
            return Err(Error::InvalidArguments(format!("bad singlet pairs {pairs:?} on {n} spins")));
        }
        paired[a] = true;
        paired[b] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&t| !paired[t]).collect();
    let r = free.len() as i32;
    if m2.abs() > r || (r - m2) % 2 != 0 {
        return Err(Error::InvalidArguments(format!("2M={m2} impossible for {r} unpaired spins")));
    }
    let downs = ((r - m2) / 2) as u32;
    let sym = 1.0 / (binomial(r as u64, downs as u64) as f64).sqrt();
    let dim = 1 << n;
    Ok(SpinVector::from_fn(dim, |idx, _| {
        let free_downs: u32 = free.iter().map(|&t| spin_bit(idx, t, n) as u32).sum();
        if free_downs != downs {
            return c(0.0);
        }
        let amp = pairs.iter().fold(sym, |acc, &(a, b)| {
            acc * singlet_amplitude(spin_bit(idx, a, n), spin_bit(idx, b, n))
        });
        c(amp)
    }))
}

/// All sets of `k` disjoint pairs `(a < b)` over `n` elements, each set sorted,
/// listed in lexicographic order.
pub fn pairings(n: usize, k: usize) -> Vec<Vec<(usize, usize)>> {
    fn extend(
        n: usize,
        k: usize,
        start: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for a in start..n {
            if used[a] {
                continue;
            }
            for b in a + 1..n {
                if used[b] {
                    continue;
                }
                used[a] = true;
                used[b] = true;
                cur.push((a, b));
                extend(n, k, a + 1, used, cur, out);
                cur.pop();
                used[a] = false;
                used[b] = false;
            }
        }
    }
    let mut out = Vec::new();
    if 2 * k <= n {
        extend(n, k, 0, &mut vec![false; n], &mut Vec::new(), &mut out);
    }
    out.sort();
    out
}

/// One vector of a coupled basis with the family member that seeded it.
#[derive(Debug, Clone)]
pub struct CoupledVector {
    pub pairs: Vec<(usize, usize)>,
    pub vector: SpinVector,
}

/// Orthonormal basis of the `(S, M)` eigenspace of `n` spins, `d_S(n)` vectors,
/// from Gram–Schmidt over singlet pairings (lexicographic) times the symmetric
/// state of the unpaired spins.
pub fn coupled_basis(n: usize, s2: u32, m2: i32) -> Result<Vec<CoupledVector>> {
    check_spins(n)?;
    let target = d_s(n as u32, s2).map_err(|e| Error::InvalidKey(e.to_string()))? as usize;
    if m2.unsigned_abs() > s2 || (s2 as i32 - m2) % 2 != 0 {
        return Err(Error::InvalidKey(format!("2M={m2} not allowed for 2S={s2}")));
    }
    let k = (n - s2 as usize) / 2;
    let mut basis: Vec<CoupledVector> = Vec::with_capacity(target);
    for pairs in pairings(n, k) {
        let mut v = paired_symmetric_state(n, &pairs, m2)?;
        for b in &basis {
            let overlap = b.vector.dotc(&v);
            v -= &b.vector * overlap;
        }
        let norm = v.norm();
        if norm > GS_TOL {
            basis.push(CoupledVector {
                pairs,
                vector: v / c(norm),
            });
            if basis.len() == target {
                break;
            }
        }
    }
    if basis.len() != target {
        return Err(Error::InvalidKey(format!(
            "singlet family spans {} of {target} states for n={n}, 2S={s2}",
            basis.len()
        )));
    }
    Ok(basis)
}

/// Unitary whose columns run over `(S ascending, M descending, basis vector)`,
/// with the matching `(2S, 2M)` label per column.
pub fn coupled_transform(n: usize) -> Result<(SpinMatrix, Vec<(u32, i32)>)> {
    let dim = 1 << n;
    let mut t = SpinMatrix::zeros(dim, dim);
    let mut labels = Vec::with_capacity(dim);
    for s2 in crate::census::allowed_s2(n as u32) {
        for m2 in (-(s2 as i32)..=s2 as i32).rev().step_by(2) {
            for v in coupled_basis(n, s2, m2)? {
                t.set_column(labels.len(), &v.vector);
                labels.push((s2, m2));
            }
        }
    }
    Ok((t, labels))
}

pub fn kron(a: &SpinMatrix, b: &SpinMatrix) -> SpinMatrix {
    a.kronecker(b)
}

/// Traces out spin `t` of an `n`-spin operator.
pub fn partial_trace_spin(rho: &SpinMatrix, t: usize, n: usize) -> SpinMatrix {
    let dim = 1 << (n - 1);
    let low_bits = n - 1 - t;
    let insert = |idx: usize, bit: usize| -> usize {
        let high = idx >> low_bits;
        let low = idx & ((1 << low_bits) - 1);
        (high << (low_bits + 1)) | (bit << low_bits) | low
    };
    SpinMatrix::from_fn(dim, dim, |r, col| {
        (0..2).map(|b| rho[(insert(r, b), insert(col, b))]).sum()
    })
}

/// `max |A_ij|`.
pub fn max_abs(a: &SpinMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn commutator(a: &SpinMatrix, b: &SpinMatrix) -> SpinMatrix {
    a * b - b * a
}
