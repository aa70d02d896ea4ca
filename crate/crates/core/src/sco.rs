//! Products of singlet creation operators
//! `Ŝ†_{j,k} = ½ (d†_{j↑} d†_{k↓} − d†_{j↓} d†_{k↑})` acting on the vacuum.
//!
//! The operators are symmetric in their indices and commute with each other,
//! so a product is a multiset of index pairs. Two operators sharing exactly one
//! index rewrite as `Ŝ†_{j,k1} Ŝ†_{j,k2} = −½ Ŝ†_{j,j} Ŝ†_{k1,k2}`, and a product
//! vanishes as soon as one index occurs three or more times. Repeating the
//! rewrite yields a [`NormalForm`]: localized singlets on distinct modes times
//! delocalized singlets on disjoint pairs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

use num_complex::{Complex, Complex64};
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::fock::{
    format_complex, parse_complex, FockAmplitudeState, ModeUnitary, SpinOrbital,
    PRUNE_TOL,
};

/// Floating coefficients below this magnitude count as cancelled when merging.
pub const MERGE_TOL: f64 = 1e-14;

/// Largest number of raw summands `M^(2P)` a symbolic expansion will visit.
pub const MAX_RAW_SUMMANDS: u64 = 100_000_000;

/// Exact complex rationals, used whenever the unitary's entries permit.
pub type GaussianRational = Complex<Ratio<i64>>;

/// Scalar ring for term coefficients.
pub trait Coefficient:
    Clone + PartialEq + fmt::Debug + Add<Output = Self> + Mul<Output = Self>
{
    fn zero_coeff() -> Self;
    fn one_coeff() -> Self;
    fn minus_half() -> Self;
    /// True when a merged coefficient should be treated as cancelled.
    fn is_negligible(&self) -> bool;
    fn to_c64(&self) -> Complex64;
    fn to_token(&self) -> String;
    fn parse_token(token: &str) -> Result<Self>;
}

impl Coefficient for Complex64 {
    fn zero_coeff() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one_coeff() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn minus_half() -> Self {
        Complex64::new(-0.5, 0.0)
    }
    fn is_negligible(&self) -> bool {
        self.norm() < MERGE_TOL
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
    fn to_token(&self) -> String {
        format_complex(*self)
    }
    fn parse_token(token: &str) -> Result<Self> {
        parse_complex(token)
    }
}

impl Coefficient for GaussianRational {
    fn zero_coeff() -> Self {
        Complex::new(Ratio::zero(), Ratio::zero())
    }
    fn one_coeff() -> Self {
        Complex::new(Ratio::one(), Ratio::zero())
    }
    fn minus_half() -> Self {
        Complex::new(Ratio::new(-1, 2), Ratio::zero())
    }
    fn is_negligible(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn to_c64(&self) -> Complex64 {
        let f = |r: &Ratio<i64>| *r.numer() as f64 / *r.denom() as f64;
        Complex64::new(f(&self.re), f(&self.im))
    }
    fn to_token(&self) -> String {
        let sign = if self.im < Ratio::zero() { '-' } else { '+' };
        format!("{}{}{}j", self.re, sign, self.im.abs())
    }
    fn parse_token(token: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("cannot parse rational coefficient {token:?}"));
        let ratio = |s: &str| -> Result<Ratio<i64>> {
            let s = s.strip_prefix('+').unwrap_or(s);
            Ratio::from_str(s).map_err(|_| bad())
        };
        let body = token.trim().strip_suffix('j').ok_or_else(bad)?;
        let split = (1..body.len())
            .rev()
            .find(|&p| matches!(body.as_bytes()[p], b'+' | b'-'))
            .ok_or_else(bad)?;
        Ok(Complex::new(ratio(&body[..split])?, ratio(&body[split..])?))
    }
}

/// Recognizes entries of the form `(a + ib)/d` with `d <= max_den`.
pub fn gaussian_rational_entries(u: &ModeUnitary, max_den: i64) -> Option<Vec<Vec<GaussianRational>>> {
    let to_ratio = |x: f64| -> Option<Ratio<i64>> {
        (1..=max_den).find_map(|d| {
            let n = (x * d as f64).round();
            ((x - n / d as f64).abs() < 1e-13 && n.abs() < 1e12).then(|| Ratio::new(n as i64, d))
        })
    };
    (0..u.dim())
        .map(|i| {
            u.row(i)
                .iter()
                .map(|z| Some(Complex::new(to_ratio(z.re)?, to_ratio(z.im)?)))
                .collect()
        })
        .collect()
}

/// Product of singlet creation operators times a scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoTerm<C> {
    pub pairs: Vec<(usize, usize)>,
    pub coeff: C,
}

impl<C: Coefficient> ScoTerm<C> {
    pub fn new(pairs: Vec<(usize, usize)>, coeff: C) -> Self {
        Self { pairs, coeff }
    }

    pub fn max_index(&self) -> Option<usize> {
        self.pairs.iter().map(|&(j, k)| j.max(k)).max()
    }
}

/// Orders each pair as `j <= k` and sorts the pair list. The coefficient is untouched.
pub fn canonicalize<C: Coefficient>(term: &ScoTerm<C>) -> ScoTerm<C> {
    let mut pairs: Vec<(usize, usize)> = term
        .pairs
        .iter()
        .map(|&(j, k)| (j.min(k), j.max(k)))
        .collect();
    pairs.sort_unstable();
    ScoTerm {
        pairs,
        coeff: term.coeff.clone(),
    }
}

/// Shape of a nonzero normal form, used as the merge key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SingletPattern {
    pub localized: BTreeSet<usize>,
    /// Pairs stored with `j < k`.
    pub delocalized: BTreeSet<(usize, usize)>,
}

impl SingletPattern {
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs: Vec<(usize, usize)> = self
            .localized
            .iter()
            .map(|&j| (j, j))
            .chain(self.delocalized.iter().copied())
            .collect();
        pairs.sort_unstable();
        pairs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NormalForm<C> {
    Zero,
    Product { pattern: SingletPattern, coeff: C },
}

impl<C: Coefficient> NormalForm<C> {
    pub fn is_zero(&self) -> bool {
        matches!(self, NormalForm::Zero)
    }

    pub fn pattern(&self) -> Option<&SingletPattern> {
        match self {
            NormalForm::Zero => None,
            NormalForm::Product { pattern, .. } => Some(pattern),
        }
    }

    pub fn coeff(&self) -> Option<&C> {
        match self {
            NormalForm::Zero => None,
            NormalForm::Product { coeff, .. } => Some(coeff),
        }
    }

    /// Coefficient in front of the normalized singlet kets `|S_jj … S_jk …⟩`,
    /// i.e. the operator coefficient divided by `√2` per delocalized singlet.
    pub fn ket_coefficient(&self) -> Complex64 {
        match self {
            NormalForm::Zero => Complex64::new(0.0, 0.0),
            NormalForm::Product { pattern, coeff } => {
                coeff.to_c64() / 2f64.powf(pattern.delocalized.len() as f64 / 2.0)
            }
        }
    }

    pub fn to_term(&self) -> Option<ScoTerm<C>> {
        match self {
            NormalForm::Zero => None,
            NormalForm::Product { pattern, coeff } => {
                Some(ScoTerm::new(pattern.pairs(), coeff.clone()))
            }
        }
    }
}

impl NormalForm<GaussianRational> {
    /// Exact ket coefficient; only defined for an even number of delocalized singlets.
    pub fn ket_coefficient_exact(&self) -> Option<GaussianRational> {
        match self {
            NormalForm::Zero => Some(GaussianRational::zero_coeff()),
            NormalForm::Product { pattern, coeff } => {
                let q = pattern.delocalized.len();
                if q % 2 == 1 {
                    return None;
                }
                let scale = Ratio::new(1, 1i64 << (q / 2));
                Some(Complex::new(coeff.re * scale, coeff.im * scale))
            }
        }
    }
}

impl<C: Coefficient> fmt::Display for NormalForm<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormalForm::Zero => write!(f, "0"),
            NormalForm::Product { pattern, coeff } => {
                write!(f, "{} *", coeff.to_token())?;
                for (j, k) in pattern.pairs() {
                    write!(f, " S({j},{k})")?;
                }
                Ok(())
            }
        }
    }
}

impl<C: Coefficient> FromStr for NormalForm<C> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "0" {
            return Ok(NormalForm::Zero);
        }
        let (coeff, rest) = s
            .split_once(" *")
            .ok_or_else(|| Error::Parse(format!("expected `coeff * S(j,k) ...`, got {s:?}")))?;
        let coeff = C::parse_token(coeff)?;
        let mut pattern = SingletPattern {
            localized: BTreeSet::new(),
            delocalized: BTreeSet::new(),
        };
        let mut seen = BTreeSet::new();
        for tok in rest.split_whitespace() {
            let inner = tok
                .strip_prefix("S(")
                .and_then(|t| t.strip_suffix(')'))
                .ok_or_else(|| Error::Parse(format!("bad singlet token {tok:?}")))?;
            let (j, k) = inner
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad singlet token {tok:?}")))?;
            let j: usize = j.trim().parse().map_err(|_| Error::Parse(format!("bad index in {tok:?}")))?;
            let k: usize = k.trim().parse().map_err(|_| Error::Parse(format!("bad index in {tok:?}")))?;
            if !seen.insert(j) || (j != k && !seen.insert(k)) {
                return Err(Error::Parse(format!("index repeated in normal form {s:?}")));
            }
            if j == k {
                pattern.localized.insert(j);
            } else {
                pattern.delocalized.insert((j.min(k), j.max(k)));
            }
        }
        Ok(NormalForm::Product { pattern, coeff })
    }
}

/// Normal form together with the number of pair rewrites that produced it.
pub fn normalize_counting<C: Coefficient>(term: &ScoTerm<C>) -> (NormalForm<C>, u32) {
    let ScoTerm { mut pairs, mut coeff } = canonicalize(term);
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &(j, k) in &pairs {
        *counts.entry(j).or_default() += 1;
        *counts.entry(k).or_default() += 1;
    }
    if counts.values().any(|&c| c >= 3) {
        return (NormalForm::Zero, 0);
    }
    let mut rewrites = 0;
    loop {
        // smallest index shared by two different delocalized pairs
        let shared = counts.iter().filter(|(_, &c)| c == 2).find_map(|(&j, _)| {
            let holders: Vec<usize> = pairs
                .iter()
                .enumerate()
                .filter(|(_, &(a, b))| a != b && (a == j || b == j))
                .map(|(pos, _)| pos)
                .collect();
            (holders.len() == 2).then(|| (j, holders[0], holders[1]))
        });
        let Some((j, p1, p2)) = shared else { break };
        let other = |(a, b): (usize, usize)| if a == j { b } else { a };
        let k1 = other(pairs[p1]);
        let k2 = other(pairs[p2]);
        pairs[p1] = (j, j);
        pairs[p2] = (k1.min(k2), k1.max(k2));
        coeff = coeff * C::minus_half();
        rewrites += 1;
    }
    let mut pattern = SingletPattern {
        localized: BTreeSet::new(),
        delocalized: BTreeSet::new(),
    };
    for (j, k) in pairs {
        if j == k {
            pattern.localized.insert(j);
        } else {
            pattern.delocalized.insert((j, k));
        }
    }
    (NormalForm::Product { pattern, coeff }, rewrites)
}

pub fn normalize<C: Coefficient>(term: &ScoTerm<C>) -> NormalForm<C> {
    normalize_counting(term).0
}

fn apply_singlet_creation(
    state: &FockAmplitudeState,
    j: usize,
    k: usize,
) -> Result<FockAmplitudeState> {
    let half = Complex64::new(0.5, 0.0);
    let first = state
        .apply_creation(SpinOrbital::down(k), half)?
        .apply_creation(SpinOrbital::up(j), Complex64::new(1.0, 0.0))?;
    let second = state
        .apply_creation(SpinOrbital::up(k), -half)?
        .apply_creation(SpinOrbital::down(j), Complex64::new(1.0, 0.0))?;
    let mut out = first;
    out.add_scaled(&second, Complex64::new(1.0, 0.0));
    out.prune(PRUNE_TOL);
    Ok(out)
}

/// Numerically applies the operator product to the vacuum of `n_modes` modes.
pub fn expand_to_fock<C: Coefficient>(term: &ScoTerm<C>, n_modes: usize) -> Result<FockAmplitudeState> {
    if let Some(max) = term.max_index() {
        if max >= n_modes {
            return Err(Error::IndexOutOfRange {
                index: max,
                modes: n_modes,
            });
        }
    }
    let mut state = FockAmplitudeState::vacuum(n_modes)?;
    for &(j, k) in term.pairs.iter().rev() {
        state = apply_singlet_creation(&state, j, k)?;
    }
    Ok(state.scaled(term.coeff.to_c64()))
}

pub fn expand_normal_form<C: Coefficient>(
    form: &NormalForm<C>,
    n_modes: usize,
) -> Result<FockAmplitudeState> {
    match form.to_term() {
        Some(term) => expand_to_fock(&term, n_modes),
        None => FockAmplitudeState::zero(n_modes),
    }
}

/// Result of expanding `∏_i Σ_{j,k} u_ij u_ik Ŝ†_{j,k}` symbolically.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellExpansion<C> {
    pub n_modes: usize,
    pub shells: usize,
    /// Merged nonzero normal forms in pattern order.
    pub terms: Vec<NormalForm<C>>,
    /// `M^(2P)`: one summand per index string `(j_1, k_1, …, j_P, k_P)`.
    pub raw_summands: u64,
    /// Summands whose creation string `∏ d†_{j_i↑} d†_{k_i↓}` repeats a spin-orbital.
    pub pauli_vanishing: u64,
    /// Summands whose operator product normalizes to zero.
    pub zero_normal_forms: u64,
}

impl<C: Coefficient> ShellExpansion<C> {
    pub fn find(&self, pattern: &SingletPattern) -> Option<&NormalForm<C>> {
        self.terms.iter().find(|t| t.pattern() == Some(pattern))
    }

    pub fn to_fock(&self) -> Result<FockAmplitudeState> {
        let mut acc = FockAmplitudeState::zero(self.n_modes)?;
        for t in &self.terms {
            acc.add_scaled(&expand_normal_form(t, self.n_modes)?, Complex64::new(1.0, 0.0));
        }
        acc.prune(PRUNE_TOL);
        Ok(acc)
    }
}

/// Symbolic expansion of a closed shell of `shells` orbitals rotated by the
/// rows of `u`, with generic coefficients.
pub fn shell_expansion_with<C: Coefficient>(u: &[Vec<C>], shells: usize) -> Result<ShellExpansion<C>> {
    let m = u.len();
    if shells == 0 || shells > m || u.iter().any(|row| row.len() != m) {
        return Err(Error::InvalidConfiguration(format!(
            "shell expansion needs a square matrix and 1 <= P <= M (P={shells}, M={m})"
        )));
    }
    let raw = (m as u64)
        .checked_pow(2 * shells as u32)
        .filter(|&r| r <= MAX_RAW_SUMMANDS)
        .ok_or_else(|| Error::Capacity(format!("M^(2P) exceeds {MAX_RAW_SUMMANDS} for M={m}, P={shells}")))?;

    let mut merged: BTreeMap<SingletPattern, C> = BTreeMap::new();
    let mut pauli_vanishing = 0;
    let mut zero_normal_forms = 0;
    let mut digits = vec![0usize; 2 * shells];
    for _ in 0..raw {
        let ups: BTreeSet<usize> = digits.iter().step_by(2).copied().collect();
        let downs: BTreeSet<usize> = digits.iter().skip(1).step_by(2).copied().collect();
        if ups.len() < shells || downs.len() < shells {
            pauli_vanishing += 1;
        }
        let mut coeff = C::one_coeff();
        let mut pairs = Vec::with_capacity(shells);
        for (i, jk) in digits.chunks(2).enumerate() {
            coeff = coeff * u[i][jk[0]].clone() * u[i][jk[1]].clone();
            pairs.push((jk[0], jk[1]));
        }
        match normalize(&ScoTerm::new(pairs, coeff)) {
            NormalForm::Zero => zero_normal_forms += 1,
            NormalForm::Product { pattern, coeff } => {
                let slot = merged.entry(pattern).or_insert_with(C::zero_coeff);
                *slot = slot.clone() + coeff;
            }
        }
        for d in digits.iter_mut() {
            *d += 1;
            if *d < m {
                break;
            }
            *d = 0;
        }
    }
    let terms = merged
        .into_iter()
        .filter(|(_, c)| !c.is_negligible())
        .map(|(pattern, coeff)| NormalForm::Product { pattern, coeff })
        .collect();
    Ok(ShellExpansion {
        n_modes: m,
        shells,
        terms,
        raw_summands: raw,
        pauli_vanishing,
        zero_normal_forms,
    })
}

/// Floating-point expansion for an arbitrary unitary.
pub fn shell_expansion(u: &ModeUnitary, shells: usize) -> Result<ShellExpansion<Complex64>> {
    let rows: Vec<Vec<Complex64>> = (0..u.dim()).map(|i| u.row(i).to_vec()).collect();
    shell_expansion_with(&rows, shells)
}

/// Exact expansion, available when every entry of `u` is a Gaussian rational
/// with denominator at most 64 (identity, the four-mode Fourier transform, …).
pub fn shell_expansion_exact(u: &ModeUnitary, shells: usize) -> Result<ShellExpansion<GaussianRational>> {
    let rows = gaussian_rational_entries(u, 64).ok_or_else(|| {
        Error::NotApplicable("unitary entries are not small-denominator Gaussian rationals".into())
    })?;
    shell_expansion_with(&rows, shells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{identity_unitary, qft_unitary};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn term(pairs: &[(usize, usize)]) -> ScoTerm<Complex64> {
        ScoTerm::new(pairs.to_vec(), c(1.0))
    }

    fn pattern(loc: &[usize], deloc: &[(usize, usize)]) -> SingletPattern {
        SingletPattern {
            localized: loc.iter().copied().collect(),
            delocalized: deloc.iter().copied().collect(),
        }
    }

    #[test]
    fn canonicalize_orders_pairs() {
        let t = canonicalize(&term(&[(3, 1), (2, 2)]));
        assert_eq!(t.pairs, vec![(1, 3), (2, 2)]);
        assert_eq!(canonicalize(&t), t);
        let t = canonicalize(&term(&[(2, 1), (1, 2)]));
        assert_eq!(t.pairs, vec![(1, 2), (1, 2)]);
    }

    #[test]
    fn single_shared_index_rewrite() {
        let nf = normalize(&term(&[(1, 2), (1, 3)]));
        assert_eq!(
            nf,
            NormalForm::Product {
                pattern: pattern(&[1], &[(2, 3)]),
                coeff: c(-0.5)
            }
        );
    }

    #[test]
    fn triple_index_vanishes() {
        assert!(normalize(&term(&[(1, 2), (1, 3), (1, 4)])).is_zero());
        assert!(normalize(&term(&[(1, 1), (1, 2)])).is_zero());
        assert!(normalize(&term(&[(1, 1), (1, 1)])).is_zero());
    }

    #[test]
    fn four_operator_example() {
        let (nf, rewrites) = normalize_counting(&term(&[(1, 2), (1, 3), (4, 5), (5, 4)]));
        assert_eq!(
            nf,
            NormalForm::Product {
                pattern: pattern(&[1, 4, 5], &[(2, 3)]),
                coeff: c(0.25)
            }
        );
        assert_eq!(rewrites, 2);
    }

    #[test]
    fn expand_local_and_delocalized_singlet() {
        let local = expand_to_fock(&term(&[(1, 1)]), 3).unwrap();
        assert!((local.norm() - 1.0).abs() < 1e-15);
        let deloc = expand_to_fock(&term(&[(1, 2)]), 3).unwrap();
        assert!((deloc.norm() - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!(expand_to_fock(&term(&[(1, 3)]), 3).is_err());
    }

    #[test]
    fn text_round_trip() {
        let nf: NormalForm<Complex64> = normalize(&term(&[(1, 2), (1, 3), (4, 5), (5, 4)]));
        let text = nf.to_string();
        assert_eq!(text, "0.25+0j * S(1,1) S(2,3) S(4,4) S(5,5)");
        let back: NormalForm<Complex64> = text.parse().unwrap();
        assert_eq!(back, nf);
        assert_eq!(back.to_string(), text);

        let exact: NormalForm<GaussianRational> = "0+1/2j * S(0,1) S(2,3)".parse().unwrap();
        assert_eq!(exact.to_string(), "0+1/2j * S(0,1) S(2,3)");
        assert_eq!("0".parse::<NormalForm<Complex64>>().unwrap(), NormalForm::Zero);
        assert!("1+0j * S(0,1) S(1,2)".parse::<NormalForm<Complex64>>().is_err());
    }

    #[test]
    fn identity_shells_stay_local() {
        let exp = shell_expansion_exact(&identity_unitary(2), 2).unwrap();
        assert_eq!(exp.terms.len(), 1);
        assert_eq!(
            exp.terms[0],
            NormalForm::Product {
                pattern: pattern(&[0, 1], &[]),
                coeff: GaussianRational::one_coeff()
            }
        );
    }

    #[test]
    fn expansion_capacity_guard() {
        let u = identity_unitary(11);
        assert!(matches!(shell_expansion(&u, 4), Err(Error::Capacity(_))));
    }

    #[test]
    fn qft_expansion_matches_fock_transform() {
        let u = qft_unitary(4).unwrap();
        let exp = shell_expansion(&u, 2).unwrap();
        let psi = crate::fock::build_closed_shell(2, 4).unwrap();
        let direct = crate::fock::transform_to_extraction_basis(&psi, &u).unwrap();
        assert!(exp.to_fock().unwrap().max_abs_diff(&direct) < 1e-10);
    }
}
