use fermispin::entanglement::*;
use fermispin::fock::{
    build_closed_shell, identity_unitary, qft_unitary, random_unitary, transform_to_extraction_basis, ModeUnitary,
};
use fermispin::nbrdm::{compute_nbrdm_direct, SpinDensityMatrix};
use fermispin::rdo::{block_decompose, partial_trace};
use fermispin::spin::{coupled_basis, kron, paired_symmetric_state, SpinMatrix};
use num_complex::Complex64;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn paulis() -> [SpinMatrix; 3] {
    let i = Complex64::new(0.0, 1.0);
    [
        SpinMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]),
        SpinMatrix::from_row_slice(2, 2, &[c(0.0), -i, i, c(0.0)]),
        SpinMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]),
    ]
}

/// Collective spin built from explicit Kronecker products of Pauli matrices.
fn oracle_collective(axis: usize, n: usize) -> SpinMatrix {
    let p = &paulis()[axis];
    let id = SpinMatrix::identity(2, 2);
    (0..n).fold(SpinMatrix::zeros(1 << n, 1 << n), |acc, t| {
        let term = (0..n).fold(SpinMatrix::identity(1, 1), |k, s| kron(&k, if s == t { p } else { &id }));
        acc + term * c(0.5)
    })
}

fn random_product_state(n: usize, rng: &mut ChaCha8Rng) -> SpinDensityMatrix {
    let [x, y, z] = paulis();
    let matrix = (0..n).fold(SpinMatrix::identity(1, 1), |acc, _| {
        let r: f64 = rng.random::<f64>().cbrt();
        let cos_t: f64 = rng.random_range(-1.0..1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let sin_t = (1.0 - cos_t * cos_t).sqrt();
        let bloch = [r * sin_t * phi.cos(), r * sin_t * phi.sin(), r * cos_t];
        let rho = (SpinMatrix::identity(2, 2) + &x * c(bloch[0]) + &y * c(bloch[1]) + &z * c(bloch[2])) * c(0.5);
        kron(&acc, &rho)
    });
    SpinDensityMatrix::from_matrix((0..n).collect(), matrix).unwrap()
}

#[test]
fn product_states_never_violate() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..50 {
        let n = 1 + k % 6;
        let report = evaluate_inequalities(&random_product_state(n, &mut rng)).unwrap();
        for r in &report.inequalities {
            assert!(r.margin >= -1e-10, "state {k} n={n}: {r:?}");
        }
        assert!(report.moments.variance.iter().all(|&v| v >= -1e-12));
    }
}

fn projector(v: &fermispin::spin::SpinVector) -> SpinMatrix {
    v * v.adjoint()
}

#[test]
fn eigenstate_closed_forms_match_numeric() {
    for n in 1..=4u32 {
        for s2 in (n % 2..=n).step_by(2) {
            for m2 in (-(s2 as i32)..=s2 as i32).step_by(2) {
                let exact = eigenstate_inequalities(s2, m2, n).unwrap();
                for v in coupled_basis(n as usize, s2, m2).unwrap() {
                    let gamma = SpinDensityMatrix::from_matrix((0..n as usize).collect(), projector(&v.vector)).unwrap();
                    let report = evaluate_inequalities(&gamma).unwrap();
                    let numeric = [
                        report.inequalities[0].margin,
                        report.inequalities.iter().find(|r| r.inequality == 2 && r.gamma == Some("z")).unwrap().margin,
                        report.inequalities.iter().find(|r| r.inequality == 3 && r.gamma == Some("z")).unwrap().margin,
                    ];
                    for (got, want) in numeric.iter().zip(&exact.margins) {
                        let want = *want.numer() as f64 / *want.denom() as f64;
                        assert!((got - want).abs() < 1e-10, "n={n} 2S={s2} 2M={m2}");
                    }
                }
            }
        }
    }
}

#[test]
fn rotation_invariant_closed_forms_match_numeric() {
    for n in 1..=4u32 {
        for s2 in (n % 2..=n).step_by(2) {
            let dim = 1 << n;
            let mut sum = SpinMatrix::zeros(dim, dim);
            for m2 in (-(s2 as i32)..=s2 as i32).step_by(2) {
                for v in coupled_basis(n as usize, s2, m2).unwrap() {
                    sum += projector(&v.vector);
                }
            }
            let gamma = SpinDensityMatrix::from_matrix((0..n as usize).collect(), sum).unwrap();
            let report = evaluate_inequalities(&gamma).unwrap();
            let exact = rotinv_inequalities(s2, n).unwrap();
            for (k, want) in exact.margins.iter().enumerate() {
                let want = *want.numer() as f64 / *want.denom() as f64;
                for r in report.inequalities.iter().filter(|r| r.inequality as usize == k + 1) {
                    assert!((r.margin - want).abs() < 1e-10, "n={n} 2S={s2} {r:?}");
                }
            }
        }
    }
}

#[test]
fn second_inequality_never_fails_for_rotation_invariant_states() {
    for n in 1..=12u32 {
        for s2 in (n % 2..=n).step_by(2) {
            let r = rotinv_inequalities(s2, n).unwrap();
            assert!(r.margins[1] >= Ratio::from_integer(0), "n={n} 2S={s2}");
        }
    }
}

#[test]
fn singlet_with_unpolarized_spins() {
    for n in 2..=6usize {
        for l in (n % 2..n).step_by(2) {
            let paired = n - l;
            let pairs: Vec<(usize, usize)> = (0..paired / 2).map(|k| (2 * k, 2 * k + 1)).collect();
            let singlet = projector(&paired_symmetric_state(paired, &pairs, 0).unwrap());
            let mixed = SpinMatrix::identity(1 << l, 1 << l) * c(1.0 / (1 << l) as f64);
            let gamma = SpinDensityMatrix::from_matrix((0..n).collect(), kron(&singlet, &mixed)).unwrap();
            let s_sq = total_spin_squared_expectation(&gamma).unwrap();
            assert!((s_sq - 0.75 * l as f64).abs() < 1e-12, "n={n} l={l}");
            let report = evaluate_inequalities(&gamma).unwrap();
            assert_eq!(report.violated(1), 0.75 * (l as f64) < n as f64 / 2.0, "n={n} l={l}");
        }
    }
}

#[test]
fn qft_moments_match_oracle() {
    let psi = transform_to_extraction_basis(&build_closed_shell(2, 4).unwrap(), &qft_unitary(4).unwrap()).unwrap();
    let gamma = compute_nbrdm_direct(&psi, &[0, 1, 2, 3]).unwrap().normalized().unwrap();
    let moments = collective_moments(&gamma).unwrap();
    for axis in 0..3 {
        let s = oracle_collective(axis, 4);
        let mean = (&gamma.matrix * &s).trace().re;
        let second = (&gamma.matrix * &s * &s).trace().re;
        assert!((moments.mean[axis] - mean).abs() < 1e-12);
        assert!((moments.second[axis] - second).abs() < 1e-12);
    }
    assert!(moments.s_total_sq.abs() < 1e-10);
    let report = evaluate_inequalities(&gamma).unwrap();
    assert!(report.violated(1) && report.violated(3) && !report.violated(2));
}

#[test]
fn separability_from_double_occupations() {
    let full = transform_to_extraction_basis(&build_closed_shell(4, 4).unwrap(), &identity_unitary(4)).unwrap();
    let blocks = block_decompose(&partial_trace(&full, &[0, 1, 2, 3]).unwrap()).unwrap();
    let bound = separability_bound(&blocks, 1e-12).unwrap();
    assert_eq!(bound.p, 4);
    assert!(bound.fully_separable && bound.gme_excluded);
    let gamma = compute_nbrdm_direct(&full, &[0, 1, 2, 3]).unwrap().normalized().unwrap();
    assert!(fermispin::spin::max_abs(&(&gamma.matrix - SpinMatrix::identity(16, 16) * c(1.0 / 16.0))) < 1e-12);
    assert_eq!(evaluate_inequalities(&gamma).unwrap().verdict, Verdict::NoViolation);

    let mut entries = vec![Complex64::default(); 16];
    entries[0] = c(1.0);
    let inner = random_unitary(3, 4).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            entries[(i + 1) * 4 + j + 1] = inner.get(i, j);
        }
    }
    let planted = transform_to_extraction_basis(
        &build_closed_shell(3, 4).unwrap(),
        &ModeUnitary::new(4, entries).unwrap(),
    )
    .unwrap();
    let blocks = block_decompose(&partial_trace(&planted, &[1, 0, 2]).unwrap()).unwrap();
    let bound = separability_bound(&blocks, 1e-12).unwrap();
    assert_eq!(bound.p, 1);
    assert_eq!(bound.partition, vec![vec![0], vec![1, 2]]);
    assert!(bound.gme_excluded);

    let generic =
        transform_to_extraction_basis(&build_closed_shell(2, 4).unwrap(), &random_unitary(4, 1).unwrap()).unwrap();
    let blocks = block_decompose(&partial_trace(&generic, &[0, 1, 2]).unwrap()).unwrap();
    let bound = separability_bound(&blocks, 1e-12).unwrap();
    assert_eq!((bound.p, bound.gme_excluded), (0, false));
    assert_eq!(bound.partition, vec![vec![0, 1, 2]]);
}
