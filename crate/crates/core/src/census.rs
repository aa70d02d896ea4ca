//! Closed-form counting of the blocks that diagonalize an n-mode reduced
//! density operator derived from a closed-shell state.
//!
//! For `N_e` electrons on `n` modes with every mode occupied, `N_e - n` modes
//! are doubly occupied and `q = 2n - N_e` carry one electron. Those `q` spins
//! couple to total spin `S` with multiplicity `d_S(q)`.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest `q` for which `q!` fits in a `u128`.
const MAX_FACTORIAL: u32 = 34;

/// Largest mode count accepted by [`census`].
pub const MAX_CENSUS_MODES: usize = 8;

fn factorial(n: u32) -> u128 {
    (1..=n as u128).product()
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Multiplicity of total spin `S = s2/2` among `q` coupled spin-1/2.
///
/// Even `q` uses `q!(2S+1) / ((q/2 - S)! (q/2 + S + 1)!)`; odd `q` couples one
/// more spin onto the even result, `d_S(q) = d_{S-1/2}(q-1) + d_{S+1/2}(q-1)`.
pub fn d_s(q: u32, s2: u32) -> Result<u64> {
    if s2 > q || !(q - s2).is_multiple_of(2) {
        return Err(Error::InvalidArguments(format!(
            "2S={s2} is not a valid total spin for q={q} spins"
        )));
    }
    if q >= MAX_FACTORIAL {
        return Err(Error::Capacity(format!("q={q} exceeds exact factorial range")));
    }
    Ok(d_s_unchecked(q, s2))
}

fn d_s_unchecked(q: u32, s2: u32) -> u64 {
    if q.is_multiple_of(2) {
        let (half, s) = (q / 2, s2 / 2);
        (factorial(q) * (2 * s as u128 + 1) / (factorial(half - s) * factorial(half + s + 1))) as u64
    } else {
        let lower = if s2 >= 1 { d_s_unchecked(q - 1, s2 - 1) } else { 0 };
        let upper = if s2 < q - 1 { d_s_unchecked(q - 1, s2 + 1) } else { 0 };
        lower + upper
    }
}

/// Allowed doubled total spins for `q` singly-occupied modes, ascending.
pub fn allowed_s2(q: u32) -> impl Iterator<Item = u32> {
    (q % 2..=q).step_by(2)
}

/// Size of the overcomplete product-of-singlets family for `q` spins.
pub fn w(q: u32) -> Result<u64> {
    if q >= MAX_FACTORIAL {
        return Err(Error::Capacity(format!("q={q} exceeds exact factorial range")));
    }
    let h = q / 2;
    Ok((factorial(q) / ((1u128 << h) * factorial(h))) as u64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CensusRow {
    /// Occupations sorted in descending order, e.g. `[2, 1, 1]`.
    pub occ_class: Vec<u8>,
    pub n_e: u32,
    /// Singly-occupied mode count.
    pub q: u32,
    #[serde(rename = "2S")]
    pub s2: u32,
    pub d_s: u64,
    pub w: u64,
    pub z: u64,
    pub m_count: u32,
    /// Table numbering: one subspace per occupation vector, `M = S` only.
    pub first_subspace: u64,
    pub last_subspace: u64,
    pub example: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Census {
    pub n_modes: usize,
    pub rows: Vec<CensusRow>,
    /// Blocks of the RDO with all modes occupied, counting every `M`.
    #[serde(rename = "A")]
    pub a: u64,
    /// Blocks of the nBRDM: `Σ_S (2S+1)` over the `q = n` spins.
    #[serde(rename = "B")]
    pub b: u64,
}

const MODE_LABELS: [char; 8] = ['i', 'j', 'k', 'l', 'm', 'n', 'o', 'p'];

/// `|S_ii,…,S_jk,…,⇑_l,…⟩`: localized singlets, then delocalized pairs, then aligned spins.
fn example_label(n_modes: usize, doubles: usize, s2: u32) -> String {
    let q = n_modes - doubles;
    let pairs = (q - s2 as usize) / 2;
    let mut parts = Vec::new();
    let mut label = MODE_LABELS.iter();
    for _ in 0..doubles {
        let a = label.next().unwrap();
        parts.push(format!("S_{a}{a}"));
    }
    for _ in 0..pairs {
        let a = label.next().unwrap();
        let b = label.next().unwrap();
        parts.push(format!("S_{a}{b}"));
    }
    for a in label.take(s2 as usize) {
        parts.push(format!("⇑_{a}"));
    }
    format!("|{}⟩", parts.join(","))
}

pub fn census(n_modes: usize) -> Result<Census> {
    if n_modes == 0 || n_modes > MAX_CENSUS_MODES {
        return Err(Error::InvalidArguments(format!(
            "census supports 1..={MAX_CENSUS_MODES} modes, got {n_modes}"
        )));
    }
    let n = n_modes as u32;
    let mut rows = Vec::new();
    let mut a = 0;
    let mut next = 1;
    for n_e in n..=2 * n {
        let doubles = n_e - n;
        let q = 2 * n - n_e;
        let z = binomial(n as u64, doubles as u64);
        let mut occ_class = vec![2u8; doubles as usize];
        occ_class.resize(n_modes, 1);
        for s2 in allowed_s2(q) {
            a += z * (s2 as u64 + 1);
            rows.push(CensusRow {
                occ_class: occ_class.clone(),
                n_e,
                q,
                s2,
                d_s: d_s(q, s2)?,
                w: w(q)?,
                z,
                m_count: s2 + 1,
                first_subspace: next,
                last_subspace: next + z - 1,
                example: example_label(n_modes, doubles as usize, s2),
            });
            next += z;
        }
    }
    let b = allowed_s2(n).map(|s2| s2 as u64 + 1).sum();
    Ok(Census {
        n_modes,
        rows,
        a,
        b,
    })
}

/// `S` from its doubled value: `"0"`, `"1/2"`, `"3"`, …
pub fn format_half_integer(x2: i64) -> String {
    if x2 % 2 == 0 {
        format!("{}", x2 / 2)
    } else {
        format!("{x2}/2")
    }
}

impl Census {
    /// Plain-text table grouped by occupation class.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let mut last_class: Option<&[u8]> = None;
        for row in &self.rows {
            if last_class != Some(&row.occ_class) {
                let occ: Vec<String> = row.occ_class.iter().map(u8::to_string).collect();
                let _ = writeln!(
                    out,
                    "n=({})  [z({},{})={}]",
                    occ.join(","),
                    self.n_modes,
                    row.n_e,
                    row.z
                );
                let _ = writeln!(out, "  {:<10} {:>5} {:>5}  example (M=S)", "subspace", "S", "d_S");
                last_class = Some(&row.occ_class);
            }
            let range = if row.first_subspace == row.last_subspace {
                row.first_subspace.to_string()
            } else {
                format!("{}-{}", row.first_subspace, row.last_subspace)
            };
            let _ = writeln!(
                out,
                "  {:<10} {:>5} {:>5}  {}",
                range,
                format_half_integer(row.s2 as i64),
                row.d_s,
                row.example
            );
        }
        let _ = writeln!(out, "A={} B={}", self.a, self.b);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Multiplicities of each doubled spin after coupling `q` spin-1/2 one at a time.
    fn coupled_multiplicities(q: u32) -> Vec<u64> {
        let mut mult = vec![1u64];
        for _ in 0..q {
            let mut next = vec![0u64; mult.len() + 1];
            for (s2, &count) in mult.iter().enumerate() {
                next[s2 + 1] += count;
                if s2 > 0 {
                    next[s2 - 1] += count;
                }
            }
            mult = next;
        }
        mult
    }

    #[test]
    fn d_s_matches_coupling_oracle() {
        for q in 0..=12 {
            let oracle = coupled_multiplicities(q);
            for s2 in allowed_s2(q) {
                assert_eq!(d_s(q, s2).unwrap(), oracle[s2 as usize], "q={q} 2S={s2}");
            }
        }
    }

    #[test]
    fn dimension_sum_rule() {
        for q in 0..=12 {
            let total: u64 = allowed_s2(q).map(|s2| d_s(q, s2).unwrap() * (s2 as u64 + 1)).sum();
            assert_eq!(total, 1 << q);
        }
    }

    #[test]
    fn d_s_table_values() {
        assert_eq!([0, 2, 4].map(|s| d_s(4, s).unwrap()), [2, 3, 1]);
        assert_eq!([0, 2, 4, 6].map(|s| d_s(6, s).unwrap()), [5, 9, 5, 1]);
        assert_eq!([1, 3, 5].map(|s| d_s(5, s).unwrap()), [5, 4, 1]);
        assert!(d_s(4, 1).is_err());
        assert!(d_s(3, 5).is_err());
    }

    fn perfect_matchings(k: u32) -> u64 {
        // choose the partner of the first element, recurse
        if k == 0 {
            1
        } else {
            (k as u64 - 1) * perfect_matchings(k - 2)
        }
    }

    #[test]
    fn w_matches_matching_enumeration() {
        assert_eq!(w(0).unwrap(), 1);
        assert_eq!(w(4).unwrap(), 3);
        assert_eq!(w(5).unwrap(), 15);
        for q in (0..=12).step_by(2) {
            assert_eq!(w(q).unwrap(), perfect_matchings(q));
            // one unpaired spin chosen among q+1
            assert_eq!(w(q + 1).unwrap(), (q as u64 + 1) * perfect_matchings(q));
        }
    }

    #[test]
    fn totals_match_tables() {
        for (n, a, b) in [(3, 25, 6), (4, 66, 9), (5, 168, 12), (6, 416, 16)] {
            let c = census(n).unwrap();
            assert_eq!((c.a, c.b), (a, b), "n={n}");
        }
    }

    #[test]
    fn three_mode_rows() {
        let c = census(3).unwrap();
        let row = c.rows.iter().find(|r| r.occ_class == [2, 1, 1] && r.s2 == 2).unwrap();
        assert_eq!((row.z, row.d_s, row.first_subspace, row.last_subspace), (3, 1, 6, 8));
        assert_eq!(row.example, "|S_ii,⇑_j,⇑_k⟩");
        assert_eq!(c.rows.last().unwrap().first_subspace, 12);
        assert!(c.to_table().contains("A=25 B=6"));
    }

    #[test]
    fn census_range() {
        assert!(census(0).is_err());
        assert!(census(9).is_err());
        assert_eq!(census(8).unwrap().b, 25);
    }
}
