//! Reduced density operators on a subset of modes and their block structure.
//!
//! Kept mode `t` (its position in `kept_modes`) occupies local spin-orbitals
//! `2t` (up) and `2t + 1` (down) of a `4^K` Fock space. A kept-mode state is
//! written with its spin-orbitals in front of the environment's, which fixes
//! the fermionic sign of every amplitude before the environment is summed out.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::census::allowed_s2;
use crate::error::{Error, Result};
use crate::fock::FockAmplitudeState;
use crate::json;
use crate::spin::{coupled_basis, spin_bit, SpinMatrix, SpinVector};

/// Largest number of kept modes.
pub const MAX_KEPT_MODES: usize = 6;

/// Default threshold for structural zeros.
pub const STRUCTURAL_TOL: f64 = 1e-10;

/// Blocks whose entries all stay below this are not stored.
const EMPTY_BLOCK_TOL: f64 = 1e-14;

/// Label `ζ = (N_e, S, M, n)` of a block, with `S` and `M` stored doubled.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockKey {
    pub n_e: u32,
    pub s2: u32,
    pub m2: i32,
    pub occ: Vec<u8>,
}

impl BlockKey {
    pub fn new(occ: Vec<u8>, s2: u32, m2: i32) -> Result<Self> {
        let key = Self {
            n_e: occ.iter().map(|&o| o as u32).sum(),
            s2,
            m2,
            occ,
        };
        key.validate()?;
        Ok(key)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidKey(msg));
        if self.occ.iter().any(|&o| o > 2) {
            return bad(format!("occupations must be 0, 1 or 2: {:?}", self.occ));
        }
        if self.n_e != self.occ.iter().map(|&o| o as u32).sum::<u32>() {
            return bad(format!("N_e={} does not match occ {:?}", self.n_e, self.occ));
        }
        let q = self.singles().len() as u32;
        if self.s2 > q || !(q - self.s2).is_multiple_of(2) {
            return bad(format!("2S={} impossible with {q} singly-occupied modes", self.s2));
        }
        if self.m2.unsigned_abs() > self.s2 || (self.s2 as i32 - self.m2) % 2 != 0 {
            return bad(format!("2M={} not allowed for 2S={}", self.m2, self.s2));
        }
        Ok(())
    }

    /// Positions of singly-occupied modes.
    pub fn singles(&self) -> Vec<usize> {
        (0..self.occ.len()).filter(|&t| self.occ[t] == 1).collect()
    }

    pub fn doubles(&self) -> Vec<usize> {
        (0..self.occ.len()).filter(|&t| self.occ[t] == 2).collect()
    }

    pub fn has_empty_mode(&self) -> bool {
        self.occ.contains(&0)
    }

    /// `(N_e, 2S, occ)`: the keys sharing this differ only in `M`.
    pub fn family(&self) -> (u32, u32, Vec<u8>) {
        (self.n_e, self.s2, self.occ.clone())
    }

    pub fn to_json(&self) -> Value {
        json!({"Ne": self.n_e, "2S": self.s2, "2M": self.m2, "occ": self.occ})
    }
}

/// Sparse density matrix on the kept-mode Fock space, indexed by local words.
#[derive(Debug, Clone, PartialEq)]
pub struct KeptDensity {
    kept_modes: Vec<usize>,
    entries: BTreeMap<(u64, u64), Complex64>,
}

/// Sign of listing the occupied spin-orbitals of `word` in the order given by
/// `key` instead of ascending order.
fn reorder_sign(word: u64, width: usize, key: impl Fn(usize) -> usize) -> f64 {
    let keys: Vec<usize> = (0..width).filter(|&b| word >> b & 1 == 1).map(key).collect();
    let mut inversions = 0;
    for i in 0..keys.len() {
        for j in i + 1..keys.len() {
            inversions += (keys[i] > keys[j]) as usize;
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn check_kept(kept_modes: &[usize], n_modes: usize) -> Result<()> {
    if kept_modes.is_empty() || kept_modes.len() > MAX_KEPT_MODES {
        return Err(Error::InvalidConfiguration(format!(
            "keep between 1 and {MAX_KEPT_MODES} modes, got {}",
            kept_modes.len()
        )));
    }
    let distinct: BTreeSet<usize> = kept_modes.iter().copied().collect();
    if distinct.len() != kept_modes.len() {
        return Err(Error::InvalidConfiguration(format!("duplicate kept modes in {kept_modes:?}")));
    }
    if let Some(&bad) = kept_modes.iter().find(|&&m| m >= n_modes) {
        return Err(Error::InvalidConfiguration(format!(
            "kept mode {bad} out of range for {n_modes} modes"
        )));
    }
    Ok(())
}

/// Splits a global word into (local kept word, environment word, sign) with
/// kept spin-orbitals moved in front in `kept_modes` order.
fn split_word(word: u64, kept_modes: &[usize], n_modes: usize) -> (u64, u64, f64) {
    let mut position = vec![usize::MAX; n_modes];
    for (t, &m) in kept_modes.iter().enumerate() {
        position[m] = t;
    }
    let mut local = 0u64;
    let mut env = word;
    for (t, &m) in kept_modes.iter().enumerate() {
        let pair = (word >> (2 * m)) & 0b11;
        local |= pair << (2 * t);
        env &= !(0b11 << (2 * m));
    }
    let width = 2 * n_modes;
    let sign = reorder_sign(word, width, |b| {
        let t = position[b / 2];
        if t == usize::MAX {
            width + b
        } else {
            2 * t + (b & 1)
        }
    });
    (local, env, sign)
}

/// `Tr_env |Ψ⟩⟨Ψ|` on the kept modes.
pub fn partial_trace(state: &FockAmplitudeState, kept_modes: &[usize]) -> Result<KeptDensity> {
    let n_modes = state.n_modes();
    check_kept(kept_modes, n_modes)?;
    let mut by_env: BTreeMap<u64, Vec<(u64, Complex64)>> = BTreeMap::new();
    for (basis, amp) in state.iter() {
        let (local, env, sign) = split_word(basis.bits(), kept_modes, n_modes);
        by_env.entry(env).or_default().push((local, amp * sign));
    }
    let mut entries: BTreeMap<(u64, u64), Complex64> = BTreeMap::new();
    for group in by_env.values() {
        for &(a, va) in group {
            for &(b, vb) in group {
                *entries.entry((a, b)).or_default() += va * vb.conj();
            }
        }
    }
    Ok(KeptDensity {
        kept_modes: kept_modes.to_vec(),
        entries,
    })
}

impl KeptDensity {
    /// Hand-built density from `(row word, column word, value)` entries.
    pub fn from_entries<I>(kept_modes: Vec<usize>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, u64, Complex64)>,
    {
        let k = kept_modes.len();
        check_kept(&kept_modes, usize::MAX)?;
        let mut map = BTreeMap::new();
        for (a, b, v) in entries {
            if a >> (2 * k) != 0 || b >> (2 * k) != 0 {
                return Err(Error::InvalidInput(format!("word outside {k} kept modes")));
            }
            *map.entry((a, b)).or_default() += v;
        }
        Ok(Self {
            kept_modes,
            entries: map,
        })
    }

    pub fn kept_modes(&self) -> &[usize] {
        &self.kept_modes
    }

    pub fn n_kept(&self) -> usize {
        self.kept_modes.len()
    }

    pub fn get(&self, a: u64, b: u64) -> Complex64 {
        self.entries.get(&(a, b)).copied().unwrap_or_default()
    }

    pub fn entries(&self) -> impl Iterator<Item = ((u64, u64), Complex64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.iter().filter(|((a, b), _)| a == b).map(|(_, v)| v).sum()
    }

    /// `max |ρ_ab − ρ_ba*|`.
    pub fn hermiticity_error(&self) -> f64 {
        self.entries
            .iter()
            .map(|(&(a, b), v)| (v - self.get(b, a).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Dense `4^K` matrix, for `K <= 4`.
    pub fn to_dense(&self) -> Result<SpinMatrix> {
        let k = self.n_kept();
        if k > 4 {
            return Err(Error::Capacity(format!("dense RDO limited to 4 modes, got {k}")));
        }
        let dim = 1 << (2 * k);
        let mut m = SpinMatrix::zeros(dim, dim);
        for (&(a, b), &v) in &self.entries {
            m[(a as usize, b as usize)] = v;
        }
        Ok(m)
    }

    /// Traces out every kept mode not listed in `sub` (given as global mode labels).
    pub fn reduce(&self, sub: &[usize]) -> Result<KeptDensity> {
        let positions: Vec<usize> = sub
            .iter()
            .map(|m| {
                self.kept_modes.iter().position(|k| k == m).ok_or_else(|| {
                    Error::InvalidConfiguration(format!("mode {m} is not among {:?}", self.kept_modes))
                })
            })
            .collect::<Result<_>>()?;
        check_kept(&positions, self.n_kept())?;
        let k = self.n_kept();
        let mut entries: BTreeMap<(u64, u64), Complex64> = BTreeMap::new();
        for (&(a, b), &v) in &self.entries {
            let (la, ea, sa) = split_word(a, &positions, k);
            let (lb, eb, sb) = split_word(b, &positions, k);
            if ea == eb {
                *entries.entry((la, lb)).or_default() += v * sa * sb;
            }
        }
        Ok(KeptDensity {
            kept_modes: sub.to_vec(),
            entries,
        })
    }
}

/// One orthonormal basis vector of a block.
#[derive(Debug, Clone)]
pub struct BlockBasisVector {
    pub label: String,
    /// Coupled state of the singly-occupied spins, in kept order.
    pub spin: SpinVector,
    /// Same state in the kept-mode Fock space.
    pub fock: Vec<(u64, Complex64)>,
}

/// Orthonormal basis of the block `key`, `d_S(q)` vectors. Doubly-occupied
/// modes carry the local singlet `d†_{t↑} d†_{t↓}`; the singly-occupied spins
/// use the coupled basis of [`crate::spin::coupled_basis`], mapped to Fock
/// words with their creators in ascending order.
pub fn spin_basis_for_block(key: &BlockKey) -> Result<Vec<BlockBasisVector>> {
    key.validate()?;
    let singles = key.singles();
    let doubles = key.doubles();
    let q = singles.len();
    let double_bits: u64 = doubles.iter().map(|&t| 0b11u64 << (2 * t)).sum();
    let coupled = coupled_basis(q, key.s2, key.m2)?;
    Ok(coupled
        .into_iter()
        .map(|cv| {
            let fock = (0..1usize << q)
                .filter(|&idx| cv.vector[idx].norm() > 0.0)
                .map(|idx| {
                    let word = singles.iter().enumerate().fold(double_bits, |w, (r, &t)| {
                        w | 1u64 << (2 * t + spin_bit(idx, r, q))
                    });
                    (word, cv.vector[idx])
                })
                .collect();
            BlockBasisVector {
                label: block_label(key, &singles, &doubles, &cv.pairs),
                spin: cv.vector,
                fock,
            }
        })
        .collect())
}

/// Seed state of a basis vector, e.g. `|S_00,S_12,⇑_3⟩` or `|S_12,sym(2M=-1)[3]⟩`.
fn block_label(key: &BlockKey, singles: &[usize], doubles: &[usize], pairs: &[(usize, usize)]) -> String {
    let mut parts: Vec<String> = doubles.iter().map(|t| format!("S_{t}{t}")).collect();
    let mut paired = BTreeSet::new();
    for &(a, b) in pairs {
        parts.push(format!("S_{}{}", singles[a], singles[b]));
        paired.insert(a);
        paired.insert(b);
    }
    let free: Vec<usize> = (0..singles.len()).filter(|r| !paired.contains(r)).map(|r| singles[r]).collect();
    if key.m2 == key.s2 as i32 {
        parts.extend(free.iter().map(|t| format!("⇑_{t}")));
    } else if key.m2 == -(key.s2 as i32) {
        parts.extend(free.iter().map(|t| format!("⇓_{t}")));
    } else {
        let list: Vec<String> = free.iter().map(usize::to_string).collect();
        parts.push(format!("sym(2M={})[{}]", key.m2, list.join(",")));
    }
    if parts.is_empty() {
        "|vac⟩".to_string()
    } else {
        format!("|{}⟩", parts.join(","))
    }
}

/// Every key of a `K`-mode space, in key order.
pub fn all_block_keys(k: usize) -> Vec<BlockKey> {
    let mut keys = Vec::new();
    for code in 0..3usize.pow(k as u32) {
        let occ: Vec<u8> = (0..k).map(|t| (code / 3usize.pow(t as u32) % 3) as u8).collect();
        let q = occ.iter().filter(|&&o| o == 1).count() as u32;
        for s2 in allowed_s2(q) {
            for m2 in (-(s2 as i32)..=s2 as i32).step_by(2) {
                keys.push(BlockKey::new(occ.clone(), s2, m2).expect("enumerated key is valid"));
            }
        }
    }
    keys.sort();
    keys
}

#[derive(Debug, Clone)]
pub struct RdoBlock {
    pub basis_labels: Vec<String>,
    pub matrix: SpinMatrix,
    pub probability: f64,
    /// Blocks with an empty mode do not enter the nBRDM.
    pub excluded_from_nbrdm: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    /// Largest coherence between states of different `(N_e, M, S)`.
    pub cross_sector: f64,
    /// Largest coherence between different occupation vectors at equal `(N_e, S, M)`.
    pub cross_occupation: f64,
    pub hermiticity: f64,
    /// Smallest eigenvalue over all stored blocks.
    pub min_block_eigenvalue: f64,
}

#[derive(Debug, Clone)]
pub struct RdoBlockSet {
    pub kept_modes: Vec<usize>,
    pub blocks: BTreeMap<BlockKey, RdoBlock>,
    pub residual: ResidualReport,
}

fn min_eigenvalue(m: &SpinMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    herm.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Projects `rho` onto every block of the coupled basis.
///
/// Each `(N_e, M)` sector is rotated as a whole into the coupled basis, so the
/// residual report also sees coherences between different `S` or occupations.
pub fn block_decompose(rho: &KeptDensity) -> Result<RdoBlockSet> {
    let k = rho.n_kept();
    let word_sector = |w: u64| -> (u32, i32) {
        let up = (0..k).map(|t| (w >> (2 * t) & 1) as i32).sum::<i32>();
        let down = (0..k).map(|t| (w >> (2 * t + 1) & 1) as i32).sum::<i32>();
        ((up + down) as u32, up - down)
    };

    let mut residual = ResidualReport {
        cross_sector: 0.0,
        cross_occupation: 0.0,
        hermiticity: rho.hermiticity_error(),
        min_block_eigenvalue: f64::INFINITY,
    };
    for ((a, b), v) in rho.entries() {
        if word_sector(a) != word_sector(b) {
            residual.cross_sector = residual.cross_sector.max(v.norm());
        }
    }

    let mut sectors: BTreeMap<(u32, i32), Vec<BlockKey>> = BTreeMap::new();
    for key in all_block_keys(k) {
        sectors.entry((key.n_e, key.m2)).or_default().push(key);
    }

    let mut blocks = BTreeMap::new();
    for keys in sectors.values() {
        let mut columns: Vec<(usize, Vec<(u64, Complex64)>)> = Vec::new();
        let mut spans: Vec<(BlockKey, Vec<String>, std::ops::Range<usize>)> = Vec::new();
        for (key_index, key) in keys.iter().enumerate() {
            let basis = spin_basis_for_block(key)?;
            let start = columns.len();
            let labels = basis.iter().map(|b| b.label.clone()).collect();
            columns.extend(basis.into_iter().map(|b| (key_index, b.fock)));
            spans.push((key.clone(), labels, start..columns.len()));
        }
        let words: BTreeSet<u64> = columns.iter().flat_map(|(_, f)| f.iter().map(|&(w, _)| w)).collect();
        let row_of: BTreeMap<u64, usize> = words.iter().enumerate().map(|(i, &w)| (w, i)).collect();
        let dim = words.len();
        let mut t = SpinMatrix::zeros(dim, columns.len());
        for (c, (_, fock)) in columns.iter().enumerate() {
            for &(w, amp) in fock {
                t[(row_of[&w], c)] = amp;
            }
        }
        let mut local = SpinMatrix::zeros(dim, dim);
        for &a in &words {
            for &b in &words {
                local[(row_of[&a], row_of[&b])] = rho.get(a, b);
            }
        }
        let rotated = t.adjoint() * local * &t;

        for (ca, (ka, _)) in columns.iter().enumerate() {
            for (cb, (kb, _)) in columns.iter().enumerate() {
                let (ka, kb) = (&keys[*ka], &keys[*kb]);
                let v = rotated[(ca, cb)].norm();
                if ka.s2 != kb.s2 {
                    residual.cross_sector = residual.cross_sector.max(v);
                } else if ka.occ != kb.occ {
                    residual.cross_occupation = residual.cross_occupation.max(v);
                }
            }
        }
        for (key, labels, range) in spans {
            let matrix = rotated.view((range.start, range.start), (range.len(), range.len())).into_owned();
            if matrix.iter().all(|z| z.norm() < EMPTY_BLOCK_TOL) {
                continue;
            }
            residual.min_block_eigenvalue = residual.min_block_eigenvalue.min(min_eigenvalue(&matrix));
            let probability = matrix.trace().re;
            let excluded = key.has_empty_mode();
            blocks.insert(
                key,
                RdoBlock {
                    basis_labels: labels,
                    matrix,
                    probability,
                    excluded_from_nbrdm: excluded,
                },
            );
        }
    }
    if residual.min_block_eigenvalue == f64::INFINITY {
        residual.min_block_eigenvalue = 0.0;
    }
    Ok(RdoBlockSet {
        kept_modes: rho.kept_modes().to_vec(),
        blocks,
        residual,
    })
}

/// Probabilities of one `(N_e, S, occ)` family across `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyCheck {
    pub n_e: u32,
    pub s2: u32,
    pub occ: Vec<u8>,
    /// `(2M, p)` for every allowed `M`, zero when the block is absent.
    pub probabilities: Vec<(i32, f64)>,
    pub total: f64,
    /// Largest entrywise difference between the block at `M` and at `M = S`.
    pub block_spread: f64,
    pub bounds_ok: bool,
    pub invariance_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperselectionReport {
    pub tol: f64,
    pub cross_sector: f64,
    pub coherence_ok: bool,
    pub probability_bounds_ok: bool,
    pub rotational_invariance_ok: bool,
    pub families: Vec<FamilyCheck>,
    pub passed: bool,
}

/// Checks the coherence rule and, per family, `0 <= p_M <= p_family/(2S+1)`
/// together with equality of the blocks across `M`.
pub fn verify_superselection(blocks: &RdoBlockSet, tol: f64) -> SuperselectionReport {
    let mut grouped: BTreeMap<(u32, u32, Vec<u8>), Vec<(&BlockKey, &RdoBlock)>> = BTreeMap::new();
    for (key, block) in &blocks.blocks {
        grouped.entry(key.family()).or_default().push((key, block));
    }
    let mut families = Vec::new();
    for ((n_e, s2, occ), members) in grouped {
        let probabilities: Vec<(i32, f64)> = (-(s2 as i32)..=s2 as i32)
            .step_by(2)
            .map(|m2| {
                let p = members.iter().find(|(k, _)| k.m2 == m2).map_or(0.0, |(_, b)| b.probability);
                (m2, p)
            })
            .collect();
        let total: f64 = probabilities.iter().map(|&(_, p)| p).sum();
        let cap = total / (s2 as f64 + 1.0);
        let bounds_ok = probabilities.iter().all(|&(_, p)| p >= -tol && p <= cap + tol);
        let reference = members.iter().find(|(k, _)| k.m2 == s2 as i32).map(|(_, b)| &b.matrix);
        let block_spread = members
            .iter()
            .map(|(_, b)| match reference {
                Some(r) if r.shape() == b.matrix.shape() => crate::spin::max_abs(&(&b.matrix - r)),
                Some(_) => f64::INFINITY,
                None => crate::spin::max_abs(&b.matrix),
            })
            .fold(0.0, f64::max);
        let spread_p = probabilities.iter().map(|&(_, p)| (p - probabilities[0].1).abs()).fold(0.0, f64::max);
        families.push(FamilyCheck {
            n_e,
            s2,
            occ,
            probabilities,
            total,
            block_spread,
            bounds_ok,
            invariance_ok: spread_p <= tol && block_spread <= tol,
        });
    }
    let coherence_ok = blocks.residual.cross_sector <= tol;
    let probability_bounds_ok = families.iter().all(|f| f.bounds_ok);
    let rotational_invariance_ok = families.iter().all(|f| f.invariance_ok);
    SuperselectionReport {
        tol,
        cross_sector: blocks.residual.cross_sector,
        coherence_ok,
        probability_bounds_ok,
        rotational_invariance_ok,
        families,
        passed: coherence_ok && probability_bounds_ok && rotational_invariance_ok,
    }
}

impl RdoBlockSet {
    pub fn total_probability(&self) -> f64 {
        self.blocks.values().map(|b| b.probability).sum()
    }

    /// Keys with probability above `tol`.
    pub fn populated(&self, tol: f64) -> impl Iterator<Item = (&BlockKey, &RdoBlock)> {
        self.blocks.iter().filter(move |(_, b)| b.probability > tol)
    }

    pub fn to_json(&self) -> Value {
        let blocks: Vec<Value> = self
            .blocks
            .iter()
            .map(|(key, b)| {
                json!({
                    "key": key.to_json(),
                    "probability": b.probability,
                    "excluded_from_nbrdm": b.excluded_from_nbrdm,
                    "basis": b.basis_labels,
                    "matrix": json::matrix(&b.matrix),
                })
            })
            .collect();
        json!({
            "kept_modes": self.kept_modes,
            "blocks": blocks,
            "residual_report": {
                "cross_sector": self.residual.cross_sector,
                "cross_occupation": self.residual.cross_occupation,
                "hermiticity": self.residual.hermiticity,
                "min_block_eigenvalue": self.residual.min_block_eigenvalue,
            },
        })
    }
}
