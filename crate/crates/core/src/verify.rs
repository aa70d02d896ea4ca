//! Invariant suite over a corpus of closed-shell sources, run by `fermispin verify`.

use serde::Serialize;

use crate::census::{allowed_s2, census, d_s};
use crate::entanglement::{evaluate_inequalities, rotinv_inequalities, separability_bound, Verdict};
use crate::error::Result;
use crate::fock::{build_closed_shell, identity_unitary, random_unitary, transform_to_extraction_basis, ModeUnitary};
use crate::nbrdm::{
    block_decompose_spin, compute_nbrdm_direct, nbrdm_from_rdo, singlet_projector, three_spin_singlet_projectors,
    SpinDensityMatrix,
};
use crate::rdo::{block_decompose, partial_trace, verify_superselection};
use crate::sco::shell_expansion;
use crate::spin::{coupled_basis, max_abs, SpinMatrix};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    /// Named unitaries acting on `n_modes` modes.
    pub sources: Vec<(String, ModeUnitary)>,
    pub shells: usize,
    pub tol: f64,
}

impl SuiteConfig {
    /// Seeds `0..count` of the random unitary on four modes, two shells.
    pub fn random_corpus(count: u64) -> Result<Self> {
        let sources = (0..count)
            .map(|seed| Ok((format!("random:{seed}"), random_unitary(4, seed)?)))
            .collect::<Result<_>>()?;
        Ok(Self {
            sources,
            shells: 2,
            tol: 1e-10,
        })
    }
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

fn fixed_checks() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let totals: Vec<(u64, u64)> = (3..=6).map(|n| census(n).map(|c| (c.a, c.b))).collect::<Result<_>>()?;
    out.push(check(
        "census totals n=3..6",
        totals == [(25, 6), (66, 9), (168, 12), (416, 16)],
        format!("{totals:?}"),
    ));
    let sum_rule = (0..=12u32).all(|q| {
        allowed_s2(q).map(|s2| d_s(q, s2).map(|d| d * (s2 as u64 + 1)).unwrap_or(0)).sum::<u64>() == 1 << q
    });
    out.push(check("d_S dimension sum rule q<=12", sum_rule, ""));

    // exact projector images against the numerically coupled basis, whose second
    // vector has the opposite sign
    let basis = coupled_basis(3, 1, 1)?;
    let mut worst: f64 = 0.0;
    for (k, (_, exact)) in three_spin_singlet_projectors().iter().enumerate() {
        let (a, b) = [(0, 1), (0, 2), (1, 2)][k];
        let p = singlet_projector(3, a, b);
        for r in 0..2 {
            for c in 0..2 {
                let sign = if r == c { 1.0 } else { -1.0 };
                let numeric = basis[r].vector.dotc(&(&p * &basis[c].vector)).re * sign;
                worst = worst.max((numeric - exact[r][c].to_f64()).abs());
            }
        }
    }
    out.push(check("three-spin projector images", worst < 1e-12, format!("max deviation {worst:.2e}")));

    let singlet = SpinDensityMatrix::from_matrix(vec![0, 1], singlet_projector(2, 0, 1))?;
    let report = evaluate_inequalities(&singlet)?;
    out.push(check("singlet violates inequality 1", report.violated(1), ""));
    let mut aligned_ok = true;
    for n in 1..=6 {
        let mut m = SpinMatrix::zeros(1 << n, 1 << n);
        m[(0, 0)] = num_complex::Complex64::new(1.0, 0.0);
        let r = evaluate_inequalities(&SpinDensityMatrix::from_matrix((0..n).collect(), m)?)?;
        aligned_ok &= r.verdict == Verdict::NoViolation;
    }
    out.push(check("aligned spins pass n<=6", aligned_ok, ""));
    let second_ok = (1..=12u32).all(|n| {
        allowed_s2(n).all(|s2| rotinv_inequalities(s2, n).map(|r| !r.violated(2)).unwrap_or(false))
    });
    out.push(check("inequality 2 holds for rotation-invariant states n<=12", second_ok, ""));

    let full = transform_to_extraction_basis(&build_closed_shell(4, 4)?, &identity_unitary(4))?;
    let blocks = block_decompose(&partial_trace(&full, &[0, 1, 2, 3])?)?;
    let bound = separability_bound(&blocks, 1e-12)?;
    let gamma = compute_nbrdm_direct(&full, &[0, 1, 2, 3])?.normalized()?;
    let uniform = max_abs(&(&gamma.matrix - SpinMatrix::identity(16, 16) / num_complex::Complex64::new(16.0, 0.0)));
    out.push(check(
        "identity source is fully separable",
        bound.fully_separable && uniform < 1e-12 && evaluate_inequalities(&gamma)?.verdict == Verdict::NoViolation,
        bound.description(),
    ));
    Ok(out)
}

fn source_checks(name: &str, u: &ModeUnitary, shells: usize, tol: f64) -> Result<Vec<CheckResult>> {
    let m = u.dim();
    let psi = transform_to_extraction_basis(&build_closed_shell(shells, m)?, u)?;
    let mut out = Vec::new();

    let expansion = shell_expansion(u, shells)?;
    let diff = expansion.to_fock()?.max_abs_diff(&psi);
    out.push(check(format!("{name}: singlet expansion equals transform"), diff < 1e-12, format!("{diff:.2e}")));

    let kept_sets: Vec<Vec<usize>> = [vec![0], vec![0, 1], vec![0, 1, 2], vec![0, 1, 2, 3]]
        .into_iter()
        .filter(|k| k.len() <= m)
        .collect();
    for kept in kept_sets {
        let rho = partial_trace(&psi, &kept)?;
        let blocks = block_decompose(&rho)?;
        if kept.len() <= 3 {
            let report = verify_superselection(&blocks, tol);
            out.push(check(
                format!("{name}: superselection K={}", kept.len()),
                report.passed,
                format!("cross-sector {:.2e}", report.cross_sector),
            ));
        }
        if kept.len() >= 2 {
            let direct = compute_nbrdm_direct(&psi, &kept)?;
            let mapped = nbrdm_from_rdo(&blocks)?;
            let diff = max_abs(&(&direct.matrix - &mapped.matrix));
            let comm = direct.spin_commutator_residual()?;
            out.push(check(
                format!("{name}: nBRDM routes n={}", kept.len()),
                diff < tol && comm < tol,
                format!("route diff {diff:.2e}, commutator {comm:.2e}"),
            ));
            let spin_blocks = block_decompose_spin(&direct, tol);
            out.push(check(
                format!("{name}: nBRDM spin blocks n={}", kept.len()),
                spin_blocks.as_ref().is_ok_and(|b| b.m_spread < tol),
                match &spin_blocks {
                    Ok(b) => format!("{} blocks, M spread {:.2e}", b.blocks.len(), b.m_spread),
                    Err(e) => e.to_string(),
                },
            ));
        }
    }
    Ok(out)
}

pub fn run_suite(config: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let mut out = fixed_checks()?;
    for (name, u) in &config.sources {
        out.extend(source_checks(name, u, config.shells, config.tol)?);
    }
    Ok(out)
}
