use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Maximum entry of `U†U - I` accepted at construction.
pub const UNITARITY_TOL: f64 = 1e-12;

/// Orbital rotation `c†_i = Σ_j u_ij d†_j`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeUnitary {
    dim: usize,
    entries: Vec<Complex64>,
}

impl ModeUnitary {
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::InvalidConfiguration(format!(
                "expected {dim}x{dim} entries, got {}",
                entries.len()
            )));
        }
        let u = Self { dim, entries };
        let err = u.unitarity_error();
        if !(err <= UNITARITY_TOL) {
            return Err(Error::InvalidConfiguration(format!(
                "matrix is not unitary: max |U†U - I| = {err:.3e}"
            )));
        }
        Ok(u)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut entries = vec![Complex64::default(); n * n];
        for i in 0..n {
            for j in 0..n {
                entries[j * n + i] = self.get(i, j).conj();
            }
        }
        Self { dim: n, entries }
    }

    /// `max |(U†U - I)_ij|`.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let mut acc = Complex64::default();
                for k in 0..n {
                    acc += self.get(k, a).conj() * self.get(k, b);
                }
                if a == b {
                    acc -= 1.0;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }

    /// Resolves the built-in names `identity`, `qft` and `random:<seed>`.
    pub fn from_named(name: &str, dim: usize) -> Result<Self> {
        match name {
            "identity" => Ok(identity_unitary(dim)),
            "qft" => qft_unitary(dim),
            _ => {
                if let Some(seed) = name.strip_prefix("random:") {
                    let seed: u64 = seed
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad random seed in {name:?}")))?;
                    random_unitary(dim, seed)
                } else {
                    Err(Error::InvalidConfiguration(format!(
                        "unknown unitary {name:?}; expected identity, qft or random:<seed>"
                    )))
                }
            }
        }
    }

    /// Text form: first line `M`, then `M` rows of `re+imj` entries.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.dim);
        for i in 0..self.dim {
            let row: Vec<String> = self.row(i).iter().map(|&z| format_complex(z)).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let dim: usize = lines
            .next()
            .ok_or_else(|| Error::Parse("empty unitary file".into()))?
            .parse()
            .map_err(|_| Error::Parse("first line must be the dimension M".into()))?;
        let mut entries = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing row {r} of {dim}")))?;
            let row: Vec<Complex64> = line
                .split_whitespace()
                .map(parse_complex)
                .collect::<Result<_>>()?;
            if row.len() != dim {
                return Err(Error::Parse(format!(
                    "row {r} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            entries.extend(row);
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing rows after the matrix".into()));
        }
        Self::new(dim, entries)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::parse_text(&std::fs::read_to_string(path)?)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn to_dmatrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.entries)
    }
}

pub fn identity_unitary(dim: usize) -> ModeUnitary {
    let mut entries = vec![Complex64::default(); dim * dim];
    for i in 0..dim {
        entries[i * dim + i] = Complex64::new(1.0, 0.0);
    }
    ModeUnitary { dim, entries }
}

/// Discrete Fourier transform `u_jk = M^(-1/2) exp(2πi jk/M)`, zero-based indices.
pub fn qft_unitary(dim: usize) -> Result<ModeUnitary> {
    if dim == 0 {
        return Err(Error::InvalidArguments("qft needs M >= 1".into()));
    }
    let norm = 1.0 / (dim as f64).sqrt();
    let mut entries = Vec::with_capacity(dim * dim);
    for j in 0..dim {
        for k in 0..dim {
            // reduce the exponent first so quarter turns come out exact
            let turns = (j * k) % dim;
            entries.push(root_of_unity(turns, dim) * norm);
        }
    }
    ModeUnitary::new(dim, entries)
}

fn root_of_unity(num: usize, den: usize) -> Complex64 {
    // exact values on the axes keep small-M transforms free of 1e-17 litter
    if (4 * num).is_multiple_of(den) {
        match (4 * num / den) % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    } else {
        Complex64::from_polar(1.0, 2.0 * PI * num as f64 / den as f64)
    }
}

/// Haar-distributed unitary from the QR decomposition of a seeded complex
/// Gaussian matrix, with the phases of `R`'s diagonal moved into `Q`.
pub fn random_unitary(dim: usize, seed: u64) -> Result<ModeUnitary> {
    if dim == 0 {
        return Err(Error::InvalidArguments("random unitary needs M >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };
    let a = DMatrix::from_fn(dim, dim, |_, _| Complex64::new(gauss(), gauss()));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    let mut entries = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            entries.push(q[(i, j)]);
        }
    }
    ModeUnitary::new(dim, entries)
}

/// Formats as `re+imj` with round-trip float precision.
pub fn format_complex(z: Complex64) -> String {
    // signed zeros print as plain zeros
    let re = if z.re == 0.0 { 0.0 } else { z.re };
    let sign = if z.im < 0.0 { '-' } else { '+' };
    format!("{}{}{}j", re, sign, z.im.abs())
}

pub fn parse_complex(token: &str) -> Result<Complex64> {
    let bad = || Error::Parse(format!("cannot parse complex entry {token:?}"));
    let t = token.trim();
    let Some(body) = t.strip_suffix('j').or_else(|| t.strip_suffix('i')) else {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&p| {
            (bytes[p] == b'+' || bytes[p] == b'-') && !matches!(bytes[p - 1], b'e' | b'E')
        });
    match split {
        Some(p) => {
            let re: f64 = body[..p].parse().map_err(|_| bad())?;
            let im: f64 = body[p..].parse().map_err(|_| bad())?;
            Ok(Complex64::new(re, im))
        }
        None => {
            let im: f64 = body.parse().map_err(|_| bad())?;
            Ok(Complex64::new(0.0, im))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qft_four_matches_quarter_turn_table() {
        let u = qft_unitary(4).unwrap();
        assert_eq!(u.get(0, 0), Complex64::new(0.5, 0.0));
        // ½ e^{iπ jk/2}
        assert_eq!(u.get(1, 1), Complex64::new(0.0, 0.5));
        assert_eq!(u.get(2, 3), Complex64::new(-0.5, 0.0));
        assert_eq!(u.get(3, 3), Complex64::new(0.0, 0.5));
        assert!(u.unitarity_error() < 1e-14);
    }

    #[test]
    fn qft_one_mode() {
        let u = qft_unitary(1).unwrap();
        assert_eq!(u.entries(), &[Complex64::new(1.0, 0.0)]);
    }

    #[test]
    fn random_unitary_is_seeded_and_unitary() {
        let a = random_unitary(5, 11).unwrap();
        let b = random_unitary(5, 11).unwrap();
        let c = random_unitary(5, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.unitarity_error() < 1e-12);
    }

    #[test]
    fn rejects_non_unitary() {
        let entries = vec![Complex64::new(1.0, 0.0); 4];
        assert!(ModeUnitary::new(2, entries).is_err());
    }

    #[test]
    fn complex_token_parsing() {
        assert_eq!(parse_complex("0.5+0j").unwrap(), Complex64::new(0.5, 0.0));
        assert_eq!(parse_complex("-1e-3-2.5e-1j").unwrap(), Complex64::new(-1e-3, -0.25));
        assert_eq!(parse_complex("3j").unwrap(), Complex64::new(0.0, 3.0));
        assert_eq!(parse_complex("-2").unwrap(), Complex64::new(-2.0, 0.0));
        assert_eq!(parse_complex("1E+2+1E-2j").unwrap(), Complex64::new(100.0, 0.01));
        assert!(parse_complex("abc").is_err());
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let u = random_unitary(4, 42).unwrap();
        let back = ModeUnitary::parse_text(&u.to_text()).unwrap();
        assert_eq!(u, back);
    }

    #[test]
    fn named_unitaries() {
        assert_eq!(ModeUnitary::from_named("identity", 3).unwrap(), identity_unitary(3));
        assert_eq!(
            ModeUnitary::from_named("random:5", 3).unwrap(),
            random_unitary(3, 5).unwrap()
        );
        assert!(ModeUnitary::from_named("bogus", 3).is_err());
        assert!(ModeUnitary::from_named("random:x", 3).is_err());
    }
}
