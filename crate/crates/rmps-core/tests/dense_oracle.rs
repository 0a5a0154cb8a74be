//! Cross-module checks of the tensor-network operations against dense
//! brute-force linear algebra at small system size.

use num_complex::Complex64 as C64;

use rmps_core::dense::{self, apply_dense, vec_inner, vec_norm};
use rmps_core::hamiltonian::{ising_mpo, NnModel};
use rmps_core::moments::{empirical_moment, exact_first_moment, MomentOrder};
use rmps_core::mps::{
    apply_mpo_compress, expectation_mpo, inner_product, left_canonicalize, to_dense,
};
use rmps_core::sampler::{sample_indexed, RmpsSpec};

fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

#[test]
fn mpo_application_matches_dense_action() {
    // H|ψ⟩ through the compressed-application path equals the dense
    // matrix-vector product, and the factored norm is ln‖H|ψ⟩‖.
    let n = 6;
    let lambda = 1.5;
    let spec = RmpsSpec::new(n, 4, 17).unwrap();
    let psi = sample_indexed(&spec, 4).unwrap();
    let h = ising_mpo(n, lambda).unwrap();
    let (out, stats) = apply_mpo_compress(&h, &psi, 64, 0.0).unwrap();

    let v = to_dense(&psi).unwrap();
    let hd = dense::ising_dense(n, lambda);
    let hv = apply_dense(&hd, &v).unwrap();
    let norm = vec_norm(&hv);
    let normalized: Vec<C64> = hv.iter().map(|z| z / norm).collect();

    let got = to_dense(&out).unwrap();
    assert!(
        max_abs_diff(&got, &normalized) <= 1e-9,
        "max deviation {}",
        max_abs_diff(&got, &normalized)
    );
    assert!(
        (stats.log_norm - norm.ln()).abs() <= 1e-9,
        "offset {} vs ln‖Hψ‖ {}",
        stats.log_norm,
        norm.ln()
    );
    assert!((out.log_norm_offset - norm.ln()).abs() <= 1e-9);
}

#[test]
fn truncated_application_fidelity_against_dense() {
    // chi_max = 2 on a χ = 8 state: the squared overlap with the dense exact
    // result equals 1 − discarded_weight.
    let n = 6;
    let spec = RmpsSpec::new(n, 8, 23).unwrap();
    let psi = sample_indexed(&spec, 0).unwrap();
    let h = ising_mpo(n, 1.5).unwrap();
    let (trunc, stats) = apply_mpo_compress(&h, &psi, 2, 0.0).unwrap();

    let v = to_dense(&psi).unwrap();
    let hv = apply_dense(&dense::ising_dense(n, 1.5), &v).unwrap();
    let norm = vec_norm(&hv);
    let exact: Vec<C64> = hv.iter().map(|z| z / norm).collect();
    let got = to_dense(&trunc).unwrap();
    let fidelity = vec_inner(&exact, &got).norm_sqr();
    assert!(
        (fidelity - (1.0 - stats.discarded_weight)).abs() <= 1e-8,
        "fidelity {fidelity} vs 1 − discarded {}",
        1.0 - stats.discarded_weight
    );
}

#[test]
fn gauge_invariance_of_expectations() {
    let n = 7;
    let spec = RmpsSpec::new(n, 8, 5).unwrap();
    let h = ising_mpo(n, 0.9).unwrap();
    for idx in 0..4u64 {
        let psi = sample_indexed(&spec, idx).unwrap();
        let canon = left_canonicalize(&psi).unwrap();
        let a = expectation_mpo(&psi, &h).unwrap();
        let b = expectation_mpo(&canon, &h).unwrap();
        assert!((a - b).norm() <= 1e-9, "idx {idx}: {a} vs {b}");
    }
}

#[test]
fn inner_products_match_dense_for_sampled_states() {
    let spec = RmpsSpec::new(6, 4, 71).unwrap();
    let psi = sample_indexed(&spec, 0).unwrap();
    let phi = sample_indexed(&spec, 1).unwrap();
    let ip = inner_product(&psi, &phi).unwrap();
    let dense_ip = vec_inner(&to_dense(&psi).unwrap(), &to_dense(&phi).unwrap());
    assert!((ip - dense_ip).norm() <= 1e-10);
}

#[test]
fn heisenberg_expectation_matches_dense() {
    let n = 6;
    let lambda = 0.4;
    let spec = RmpsSpec::new(n, 8, 13).unwrap();
    let psi = sample_indexed(&spec, 2).unwrap();
    let h = rmps_core::hamiltonian::heisenberg_mpo(n, lambda).unwrap();
    let e = expectation_mpo(&psi, &h).unwrap();
    let v = to_dense(&psi).unwrap();
    let hv = apply_dense(&NnModel::Heisenberg { lambda }.dense(n), &v).unwrap();
    let expect = vec_inner(&v, &hv);
    assert!((e - expect).norm() <= 1e-9);
    assert!(e.im.abs() <= 1e-10, "Hermitian expectation must be real");
}

#[test]
fn empirical_first_moment_error_scales_as_inverse_sqrt_m() {
    // Doubling M four times shrinks the max entrywise error by about 1/√2
    // each time (ratio within ±30% on average).
    let spec = RmpsSpec::new(4, 2, 321).unwrap();
    let exact = exact_first_moment(&spec).unwrap();
    let mut errors = Vec::new();
    for m in [2000u64, 8000, 32000] {
        let emp = empirical_moment(&spec, MomentOrder::First, m).unwrap();
        errors.push(emp.matrix.sub(&exact.matrix).max_abs());
    }
    // Quadrupling M should halve the error.
    for w in errors.windows(2) {
        let ratio = w[1] / w[0];
        assert!(
            (0.2..=0.9).contains(&ratio),
            "error ratio {ratio} out of the 1/2 ± tolerance band ({errors:?})"
        );
    }
}

#[test]
fn thousand_streams_first_moment_envelope() {
    // 10³ independent streams at N = 4, χ = 2: the empirical first moment is
    // I/16 within the Monte Carlo envelope.
    let spec = RmpsSpec::new(4, 2, 2718).unwrap();
    let m = 1000u64;
    let emp = empirical_moment(&spec, MomentOrder::First, m).unwrap();
    let exact = exact_first_moment(&spec).unwrap();
    let dev = emp.matrix.sub(&exact.matrix).max_abs();
    let envelope = 5.0 / (m as f64).sqrt();
    assert!(dev <= envelope, "deviation {dev} vs envelope {envelope}");
}
