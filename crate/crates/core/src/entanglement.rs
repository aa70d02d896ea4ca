//! Spin-squeezing separability tests on extracted spin states, and the
//! separability guaranteed by common double occupations.
//!
//! Every fully separable state of `n` spin-1/2 satisfies, for each assignment of
//! `(α, β, γ)` to the axes,
//!
//! 1. `(ΔS_x)² + (ΔS_y)² + (ΔS_z)² ≥ n/2`
//! 2. `⟨S_α²⟩ + ⟨S_β²⟩ − n/2 ≤ (n−1)(ΔS_γ)²`
//! 3. `(n−1)[(ΔS_α)² + (ΔS_β)²] ≥ ⟨S_γ²⟩ + n(n−2)/4`
//!
//! Margins are signed so that a negative margin is a violation.

use std::collections::BTreeSet;

use num_rational::Ratio;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::nbrdm::SpinDensityMatrix;
use crate::rdo::RdoBlockSet;
use crate::spin::{collective_spin, Axis};

/// Margins below this are violations.
pub const VIOLATION_TOL: f64 = 1e-10;
/// Margins in `[-VIOLATION_TOL, -INCONCLUSIVE_TOL)` are inconclusive.
pub const INCONCLUSIVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub n: usize,
    /// `⟨S_x⟩, ⟨S_y⟩, ⟨S_z⟩`.
    pub mean: [f64; 3],
    pub second: [f64; 3],
    pub variance: [f64; 3],
    /// `⟨S²⟩` from the operator, not from a quantum number.
    pub s_total_sq: f64,
}

fn expectation(rho: &crate::spin::SpinMatrix, op: &crate::spin::SpinMatrix) -> f64 {
    (rho * op).trace().re
}

/// Moments of the collective spin against Γ, normalized first if needed.
pub fn collective_moments(gamma: &SpinDensityMatrix) -> Result<Moments> {
    let gamma = if gamma.normalized { gamma.clone() } else { gamma.normalized()? };
    let n = gamma.n();
    let mut mean = [0.0; 3];
    let mut second = [0.0; 3];
    let mut variance = [0.0; 3];
    for (i, &axis) in Axis::ALL.iter().enumerate() {
        let s = collective_spin(axis, n)?;
        mean[i] = expectation(&gamma.matrix, &s);
        second[i] = expectation(&gamma.matrix, &(&s * &s));
        variance[i] = second[i] - mean[i] * mean[i];
    }
    let s_total_sq = second.iter().sum();
    Ok(Moments {
        n,
        mean,
        second,
        variance,
        s_total_sq,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Satisfied,
    Inconclusive,
    Violated,
}

impl Status {
    pub fn from_margin(margin: f64) -> Self {
        if margin < -VIOLATION_TOL {
            Status::Violated
        } else if margin < -INCONCLUSIVE_TOL {
            Status::Inconclusive
        } else {
            Status::Satisfied
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityResult {
    /// 1, 2 or 3.
    pub inequality: u8,
    /// Axis in the `γ` slot; `None` for the first inequality.
    pub gamma: Option<&'static str>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub status: Status,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NoViolation,
    EntanglementDetected,
    Inconclusive,
}

impl Verdict {
    /// CLI exit code.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::NoViolation => 0,
            Verdict::EntanglementDetected => 1,
            Verdict::Inconclusive => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqueezingReport {
    pub moments: Moments,
    pub inequalities: Vec<InequalityResult>,
    pub verdict: Verdict,
}

impl SqueezingReport {
    pub fn violated(&self, inequality: u8) -> bool {
        self.inequalities
            .iter()
            .any(|r| r.inequality == inequality && r.status == Status::Violated)
    }

    /// Most negative margin of one inequality over the `γ` choices.
    pub fn worst_margin(&self, inequality: u8) -> f64 {
        self.inequalities
            .iter()
            .filter(|r| r.inequality == inequality)
            .map(|r| r.margin)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).unwrap_or(Value::Null)
    }

    pub fn to_table(&self) -> String {
        let m = &self.moments;
        let mut out = format!(
            "n={}  <S>=({:.6}, {:.6}, {:.6})  <S^2>={:.6}\n",
            m.n, m.mean[0], m.mean[1], m.mean[2], m.s_total_sq
        );
        out.push_str(&format!(
            "var=({:.6}, {:.6}, {:.6})\n",
            m.variance[0], m.variance[1], m.variance[2]
        ));
        out.push_str(&format!("{:<4} {:<6} {:>12} {:>12} {:>12}  status\n", "ineq", "gamma", "lhs", "rhs", "margin"));
        for r in &self.inequalities {
            out.push_str(&format!(
                "{:<4} {:<6} {:>12.6} {:>12.6} {:>12.3e}  {:?}\n",
                r.inequality,
                r.gamma.unwrap_or("-"),
                r.lhs,
                r.rhs,
                r.margin,
                r.status
            ));
        }
        out.push_str(&format!("verdict: {:?}\n", self.verdict));
        out
    }
}

fn result(inequality: u8, gamma: Option<Axis>, lhs: f64, rhs: f64, margin: f64) -> InequalityResult {
    InequalityResult {
        inequality,
        gamma: gamma.map(Axis::name),
        lhs,
        rhs,
        margin,
        status: Status::from_margin(margin),
    }
}

/// Evaluates all three inequalities, the last two for every choice of `γ`.
pub fn evaluate_inequalities(gamma: &SpinDensityMatrix) -> Result<SqueezingReport> {
    let moments = collective_moments(gamma)?;
    let n = moments.n as f64;
    let (second, var) = (moments.second, moments.variance);
    let total_var: f64 = var.iter().sum();
    let mut inequalities = vec![result(1, None, total_var, n / 2.0, total_var - n / 2.0)];
    for (g, &axis) in Axis::ALL.iter().enumerate() {
        let (a, b) = ((g + 1) % 3, (g + 2) % 3);
        let lhs = second[a] + second[b] - n / 2.0;
        let rhs = (n - 1.0) * var[g];
        inequalities.push(result(2, Some(axis), lhs, rhs, rhs - lhs));
    }
    for (g, &axis) in Axis::ALL.iter().enumerate() {
        let (a, b) = ((g + 1) % 3, (g + 2) % 3);
        let lhs = (n - 1.0) * (var[a] + var[b]);
        let rhs = second[g] + n * (n - 2.0) / 4.0;
        inequalities.push(result(3, Some(axis), lhs, rhs, lhs - rhs));
    }
    let verdict = if inequalities.iter().any(|r| r.status == Status::Violated) {
        Verdict::EntanglementDetected
    } else if inequalities.iter().any(|r| r.status == Status::Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::NoViolation
    };
    Ok(SqueezingReport {
        moments,
        inequalities,
        verdict,
    })
}

/// Exact margins of the three inequalities, `γ = z`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedFormReport {
    pub n: u32,
    pub s2: u32,
    pub m2: Option<i32>,
    pub margins: [Ratio<i64>; 3],
}

impl ClosedFormReport {
    pub fn violated(&self, inequality: u8) -> bool {
        self.margins[inequality as usize - 1] < Ratio::from_integer(0)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "2S": self.s2,
            "2M": self.m2,
            "margins": self.margins.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
        })
    }
}

fn check_spin(s2: u32, n: u32) -> Result<()> {
    if s2 > n || !(n - s2).is_multiple_of(2) {
        return Err(Error::InvalidArguments(format!("2S={s2} is not reachable with {n} spins")));
    }
    Ok(())
}

fn quarter(x: i64) -> Ratio<i64> {
    Ratio::new(x, 4)
}

/// Closed forms on `|S, M⟩`: `⟨S_x²⟩ = ⟨S_y²⟩ = [S(S+1) − M²]/2`, `⟨S_z²⟩ = M²`,
/// `(ΔS_z)² = 0`.
pub fn eigenstate_inequalities(s2: u32, m2: i32, n: u32) -> Result<ClosedFormReport> {
    check_spin(s2, n)?;
    if m2.unsigned_abs() > s2 || (s2 as i32 - m2) % 2 != 0 {
        return Err(Error::InvalidArguments(format!("2M={m2} is not allowed for 2S={s2}")));
    }
    let ss = quarter(s2 as i64 * (s2 as i64 + 2));
    let mm = quarter(m2 as i64 * m2 as i64);
    let half_n = Ratio::new(n as i64, 2);
    let transverse = ss - mm;
    let n1 = Ratio::from_integer(n as i64 - 1);
    Ok(ClosedFormReport {
        n,
        s2,
        m2: Some(m2),
        margins: [
            transverse - half_n,
            half_n - transverse,
            n1 * transverse - mm - quarter(n as i64 * (n as i64 - 2)),
        ],
    })
}

/// Closed forms on the uniform mixture over `M` at fixed `S`, where every
/// `⟨S_α²⟩ = (ΔS_α)² = S(S+1)/3`.
pub fn rotinv_inequalities(s2: u32, n: u32) -> Result<ClosedFormReport> {
    check_spin(s2, n)?;
    let x = quarter(s2 as i64 * (s2 as i64 + 2));
    let third = x / 3;
    let half_n = Ratio::new(n as i64, 2);
    let n1 = Ratio::from_integer(n as i64 - 1);
    Ok(ClosedFormReport {
        n,
        s2,
        m2: None,
        margins: [
            x - half_n,
            n1 * third - (third * 2 - half_n),
            n1 * third * 2 - third - quarter(n as i64 * (n as i64 - 2)),
        ],
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeparabilityBound {
    /// Kept modes doubly occupied in every populated occupation vector.
    pub common_doubles: Vec<usize>,
    pub p: usize,
    /// Parts of a partition Γ is guaranteed separable across, as mode labels.
    pub partition: Vec<Vec<usize>>,
    /// Every populated occupation vector has a doubly-occupied mode.
    pub gme_excluded: bool,
    pub fully_separable: bool,
}

impl SeparabilityBound {
    pub fn description(&self) -> String {
        let parts: Vec<String> = self
            .partition
            .iter()
            .map(|part| part.iter().map(|m| format!("s_{m}")).collect::<Vec<_>>().join(" "))
            .collect();
        let mut text = if self.p == 0 {
            "no separability implied by double occupations".to_string()
        } else {
            format!("at least {}-separable: {}", self.partition.len(), parts.join(" | "))
        };
        if self.gme_excluded {
            text.push_str("; no genuine multipartite entanglement");
        }
        text
    }
}

/// Separability implied by the occupation vectors populated in the blocks
/// that reach the nBRDM.
pub fn separability_bound(blocks: &RdoBlockSet, tol: f64) -> Result<SeparabilityBound> {
    let occs: BTreeSet<&Vec<u8>> = blocks
        .populated(tol)
        .filter(|(_, b)| !b.excluded_from_nbrdm)
        .map(|(k, _)| &k.occ)
        .collect();
    if occs.is_empty() {
        return Err(Error::InvalidInput("no populated blocks without an empty mode".into()));
    }
    let kept = &blocks.kept_modes;
    let positions: Vec<usize> = (0..kept.len()).filter(|&t| occs.iter().all(|o| o[t] == 2)).collect();
    let gme_excluded = occs.iter().all(|o| o.contains(&2));
    let mut partition: Vec<Vec<usize>> = positions.iter().map(|&t| vec![kept[t]]).collect();
    let rest: Vec<usize> = (0..kept.len()).filter(|t| !positions.contains(t)).map(|t| kept[t]).collect();
    if !rest.is_empty() {
        partition.push(rest);
    }
    Ok(SeparabilityBound {
        common_doubles: positions.iter().map(|&t| kept[t]).collect(),
        p: positions.len(),
        fully_separable: partition.len() == kept.len(),
        partition,
        gme_excluded,
    })
}

/// `⟨S²⟩` against the normalized Γ.
pub fn total_spin_squared_expectation(gamma: &SpinDensityMatrix) -> Result<f64> {
    let g = if gamma.normalized { gamma.clone() } else { gamma.normalized()? };
    let s2 = crate::spin::total_spin_squared(g.n())?;
    Ok(expectation(&g.matrix, &s2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use crate::nbrdm::singlet_projector;
    use crate::spin::SpinMatrix;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn pure(n: usize, index: usize) -> SpinDensityMatrix {
        let mut m = SpinMatrix::zeros(1 << n, 1 << n);
        m[(index, index)] = c(1.0);
        SpinDensityMatrix::from_matrix((0..n).collect(), m).unwrap()
    }

    #[test]
    fn singlet_violates_first_inequality() {
        let gamma = SpinDensityMatrix::from_matrix(vec![0, 1], singlet_projector(2, 0, 1)).unwrap();
        let r = evaluate_inequalities(&gamma).unwrap();
        assert!(r.moments.s_total_sq.abs() < 1e-14);
        assert!(r.moments.mean.iter().all(|m| m.abs() < 1e-14));
        assert!(r.violated(1));
        assert!((r.worst_margin(1) + 1.0).abs() < 1e-14);
        assert_eq!(r.verdict, Verdict::EntanglementDetected);
    }

    #[test]
    fn aligned_spins_pass() {
        for n in 1..=6 {
            let r = evaluate_inequalities(&pure(n, 0)).unwrap();
            assert!((r.moments.mean[2] - n as f64 / 2.0).abs() < 1e-12);
            assert!(r.moments.variance[2].abs() < 1e-12);
            assert_eq!(r.verdict, Verdict::NoViolation, "n={n}");
        }
    }

    #[test]
    fn status_bands() {
        assert_eq!(Status::from_margin(-1e-9), Status::Violated);
        assert_eq!(Status::from_margin(-1e-11), Status::Inconclusive);
        assert_eq!(Status::from_margin(-1e-13), Status::Satisfied);
        assert_eq!(Verdict::Inconclusive.exit_code(), 2);
    }

    #[test]
    fn closed_form_examples() {
        let r = eigenstate_inequalities(4, 4, 4).unwrap();
        assert_eq!(r.margins[0], Ratio::from_integer(0));
        assert_eq!(r.margins[1], Ratio::from_integer(0));
        assert_eq!(eigenstate_inequalities(0, 0, 4).unwrap().margins[0], Ratio::from_integer(-2));
        assert!(rotinv_inequalities(0, 4).unwrap().violated(1));
        assert_eq!(rotinv_inequalities(2, 6).unwrap().margins[0], Ratio::from_integer(-1));
        assert!(eigenstate_inequalities(3, 0, 4).is_err());
        assert!(eigenstate_inequalities(2, 4, 4).is_err());
    }
}
