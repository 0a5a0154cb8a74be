//! Variance scaling of the ratio statistic against the bond dimension.

use rmps_core::estimator::{
    estimate_thermal_expectation, variance_diagnostics, ThermalFilter,
};
use rmps_core::hamiltonian::{
    default_applications, default_half_width, heisenberg_mpo, FilterSpec, NnModel,
};
use rmps_core::linalg::ComplexMatrix;
use rmps_core::mps::MpoOperator;
use rmps_core::sampler::RmpsSpec;
use rmps_core::C64;

fn mag_mpo(n: usize) -> MpoOperator {
    let z = rmps_core::dense::pauli_z().scale(C64::new(1.0 / n as f64, 0.0));
    let ops: Vec<ComplexMatrix> = (0..n).map(|_| z.clone()).collect();
    MpoOperator::sum_of_sites(&ops).unwrap()
}

#[test]
fn relative_variance_of_z_decreases_with_chi() {
    let n = 6;
    let lambda = 1.0;
    let model = NnModel::Heisenberg { lambda };
    let e = -0.15 * n as f64;
    let r = default_half_width(&model, n, e);
    let k = default_applications(r, n, 0.5);
    let fs = FilterSpec::new(e, r, k).unwrap();
    let h = heisenberg_mpo(n, lambda).unwrap();
    let b = mag_mpo(n);
    let mut prev = f64::INFINITY;
    for chi in [2usize, 4, 8] {
        let spec = RmpsSpec::new(n, chi, 1234).unwrap();
        let est = estimate_thermal_expectation(
            &h,
            &b,
            &ThermalFilter::Microcanonical(fs),
            &spec,
            150,
            32,
            1e-12,
        )
        .unwrap();
        let diag = variance_diagnostics(&est.records, chi).unwrap();
        assert!(
            diag.rel_var_z < prev,
            "chi={chi}: rel var {} did not fall below {prev}",
            diag.rel_var_z
        );
        prev = diag.rel_var_z;
    }
}
