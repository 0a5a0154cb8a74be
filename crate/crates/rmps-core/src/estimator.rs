//! The Monte Carlo (ε, δ) estimation engine.
//!
//! Each draw i builds a fresh random MPS ψ_i from its own stream, applies the
//! filter A = G^(k/2) (polynomial energy window or imaginary-time Trotter
//! steps) and records
//!
//!   x_i = ⟨ψ_i|ABA|ψ_i⟩,  y_i = ⟨ψ_i|A²|ψ_i⟩,  z_i = x_i/y_i,
//!
//! where the global norms cancel in z_i = ⟨φ_i|B|φ_i⟩/⟨φ_i|φ_i⟩ for the
//! normalized filtered state φ_i. Thermal expectation values are means of
//! z_i; operator traces are D times the mean of the unfiltered expectation,
//! with D tracked in log scale so chains of a hundred sites cannot overflow.
//!
//! Everything is deterministic in (configuration, master seed): sample i
//! always consumes stream i, and reductions run in index order. The
//! per-sample entry points are pure, so a driver may distribute indices over
//! threads and still reproduce the sequential result bit for bit.

use alloc::{format, vec::Vec};

use crate::hamiltonian::{
    apply_filter_power, microcanonical_filter, trotter_imaginary_step, FilterSpec, TrotterSpec,
};
use crate::linalg::ComplexMatrix;
use crate::math;
use crate::mps::{expectation_mpo, MpoOperator};
use crate::sampler::{sample_indexed, RmpsSpec};
use crate::stats;
use crate::tol;
use crate::{Error, Result};

/// One Monte Carlo draw.
#[derive(Clone, Copy, Debug)]
pub struct SampleRecord {
    pub index: u64,
    /// ⟨ψ|ABA|ψ⟩ with the log-norm reconstituted.
    pub x: f64,
    /// ⟨ψ|A²|ψ⟩ with the log-norm reconstituted.
    pub y: f64,
    /// x/y, the norm-free ratio statistic.
    pub z: f64,
    /// ln‖A ψ‖ accumulated over the filter applications.
    pub log_norm: f64,
    pub total_discarded_weight: f64,
    /// Master seed; together with `index` it identifies the stream.
    pub seed: u64,
    /// y fell below the degeneracy threshold; flagged, never dropped.
    pub degenerate: bool,
}

/// Sample-count plan from the Chebyshev bound M ≈ 1/(δ ε² χ).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorPlan {
    pub epsilon: f64,
    pub delta: f64,
    pub chi: usize,
    pub num_samples: u64,
}

/// M = ceil(1/(δ ε² χ)), never below 1.
///
/// The analytic bound carries an unstated prefactor and is not tight; treat
/// the plan as a starting point and re-plan from the measured variance when
/// it matters.
pub fn plan_samples(epsilon: f64, delta: f64, chi: usize) -> Result<EstimatorPlan> {
    if !(epsilon > 0.0 && epsilon < 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(
            "epsilon and delta must lie strictly between 0 and 1".into(),
        ));
    }
    if chi < 2 {
        return Err(Error::InvalidArgument("chi must be at least 2".into()));
    }
    let raw = 1.0 / (delta * epsilon * epsilon * chi as f64);
    let num_samples = math::ceil(raw).max(1.0) as u64;
    Ok(EstimatorPlan {
        epsilon,
        delta,
        chi,
        num_samples,
    })
}

/// Aggregated estimate.
#[derive(Clone, Debug)]
pub struct EstimateResult {
    /// Mean of the per-sample statistic (z for thermal runs, x for traces).
    pub mean: f64,
    /// Standard error of the mean (delete-one jackknife, which for a plain
    /// mean equals s/√M).
    pub standard_error: f64,
    pub samples_used: u64,
    pub degenerate_count: u64,
    /// The estimate is `mean · 2^log2_scale`; zero for thermal expectation
    /// values, N·log₂d for traces.
    pub log2_scale: f64,
    pub records: Vec<SampleRecord>,
}

impl EstimateResult {
    /// The estimate in linear scale; infinite if 2^log2_scale overflows.
    pub fn value(&self) -> f64 {
        self.mean * math::pow(2.0, self.log2_scale)
    }
}

/// Reduce records (in index order) to a mean and standard error.
pub fn reduce_records(records: Vec<SampleRecord>, log2_scale: f64) -> EstimateResult {
    let zs: Vec<f64> = records.iter().map(|r| r.z).collect();
    let mean = stats::mean(&zs);
    let standard_error = stats::standard_error(&zs);
    EstimateResult {
        mean,
        standard_error,
        samples_used: records.len() as u64,
        degenerate_count: records.iter().filter(|r| r.degenerate).count() as u64,
        log2_scale,
        records,
    }
}

/// The thermal filter route.
#[derive(Clone, Debug)]
pub enum ThermalFilter {
    /// Polynomial window G = I − (H−E)²/r², applied k/2 times.
    Microcanonical(FilterSpec),
    /// Imaginary time: k/2 first-order Trotter sweeps of exp(−τ h) gates with
    /// τ = β/k, using the supplied nearest-neighbor terms.
    Canonical {
        spec: TrotterSpec,
        terms: Vec<ComplexMatrix>,
    },
}

/// A prepared estimator: the filter operator is built once and shared
/// read-only by every sample (and by every worker thread).
pub struct ThermalEngine {
    spec: RmpsSpec,
    observable: MpoOperator,
    route: Route,
    chi_max: usize,
    cutoff: f64,
}

enum Route {
    Filter {
        g: MpoOperator,
        half_k: u32,
    },
    Trotter {
        terms: Vec<ComplexMatrix>,
        tau: f64,
        half_steps: u32,
    },
}

impl ThermalEngine {
    pub fn new(
        h: &MpoOperator,
        observable: &MpoOperator,
        filter: &ThermalFilter,
        spec: &RmpsSpec,
        chi_max: usize,
        cutoff: f64,
    ) -> Result<Self> {
        spec.validate()?;
        if chi_max == 0 {
            return Err(Error::InvalidArgument("chi_max must be at least 1".into()));
        }
        if h.num_sites() != spec.num_sites || observable.num_sites() != spec.num_sites {
            return Err(Error::ShapeMismatch(
                "operators must match the sampling spec".into(),
            ));
        }
        let route = match filter {
            ThermalFilter::Microcanonical(fs) => {
                let g = microcanonical_filter(h, fs, chi_max.max(h.max_bond().pow(2) + 1), cutoff)?;
                Route::Filter {
                    g,
                    half_k: fs.half_applications(),
                }
            }
            ThermalFilter::Canonical { spec: ts, terms } => {
                if terms.len() != spec.num_sites - 1 {
                    return Err(Error::ShapeMismatch(
                        "need one Trotter term per bond".into(),
                    ));
                }
                Route::Trotter {
                    terms: terms.clone(),
                    tau: ts.tau(),
                    half_steps: ts.num_steps / 2,
                }
            }
        };
        Ok(Self {
            spec: *spec,
            observable: observable.clone(),
            route,
            chi_max,
            cutoff,
        })
    }

    pub fn spec(&self) -> &RmpsSpec {
        &self.spec
    }

    /// The filter operator's bond dimension (1 for the Trotter route).
    pub fn filter_bond(&self) -> usize {
        match &self.route {
            Route::Filter { g, .. } => g.max_bond(),
            Route::Trotter { .. } => 1,
        }
    }

    /// Draw, filter, and measure sample `index`. Pure: any thread may run any
    /// index.
    pub fn sample(&self, index: u64) -> Result<SampleRecord> {
        let psi = sample_indexed(&self.spec, index)?;
        let (phi, discarded) = match &self.route {
            Route::Filter { g, half_k } => {
                let (phi, diag) = apply_filter_power(g, &psi, *half_k, self.chi_max, self.cutoff)?;
                (phi, diag.total_discarded)
            }
            Route::Trotter {
                terms,
                tau,
                half_steps,
            } => {
                let mut state = psi;
                let mut discarded = 0.0;
                for _ in 0..*half_steps {
                    let (next, stats) =
                        trotter_imaginary_step(terms, &state, *tau, self.chi_max, self.cutoff)?;
                    discarded += stats.discarded_weight;
                    state = next;
                }
                (state, discarded)
            }
        };
        let log_norm = phi.log_norm_offset;
        let z = expectation_mpo(&phi, &self.observable)?.re;
        let y = math::exp(2.0 * log_norm);
        let x = z * y;
        Ok(SampleRecord {
            index,
            x,
            y,
            z,
            log_norm,
            total_discarded_weight: discarded,
            seed: self.spec.master_seed,
            degenerate: y < tol::DEGENERATE_Y,
        })
    }
}

/// Monte Carlo estimate of the thermal expectation value ⟨B⟩_T with M draws.
///
/// Deterministic for a fixed master seed (carried by `spec`) regardless of
/// how callers distribute the samples over threads.
pub fn estimate_thermal_expectation(
    h: &MpoOperator,
    observable: &MpoOperator,
    filter: &ThermalFilter,
    spec: &RmpsSpec,
    num_samples: u64,
    chi_max: usize,
    cutoff: f64,
) -> Result<EstimateResult> {
    if num_samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let engine = ThermalEngine::new(h, observable, filter, spec, chi_max, cutoff)?;
    let mut records = Vec::with_capacity(num_samples as usize);
    for index in 0..num_samples {
        records.push(engine.sample(index)?);
    }
    Ok(reduce_records(records, 0.0))
}

/// One unfiltered draw for trace estimation: x = ⟨ψ_i|op|ψ_i⟩.
pub fn trace_sample(op: &MpoOperator, spec: &RmpsSpec, index: u64) -> Result<SampleRecord> {
    let psi = sample_indexed(spec, index)?;
    let x = expectation_mpo(&psi, op)?.re;
    Ok(SampleRecord {
        index,
        x,
        y: 1.0,
        z: x,
        log_norm: 0.0,
        total_discarded_weight: 0.0,
        seed: spec.master_seed,
        degenerate: false,
    })
}

/// Tr[op] ≈ D · mean(⟨ψ_i|op|ψ_i⟩). The result keeps D = d^N in log scale:
/// `mean` is the sample mean and `log2_scale` = N, so chains far beyond
/// double-precision range still report a finite (log₂, mantissa) pair.
pub fn estimate_trace(
    op: &MpoOperator,
    spec: &RmpsSpec,
    num_samples: u64,
) -> Result<EstimateResult> {
    if num_samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    spec.validate()?;
    if op.num_sites() != spec.num_sites {
        return Err(Error::ShapeMismatch(
            "operator must match the sampling spec".into(),
        ));
    }
    let mut records = Vec::with_capacity(num_samples as usize);
    for index in 0..num_samples {
        records.push(trace_sample(op, spec, index)?);
    }
    Ok(reduce_records(records, spec.num_sites as f64))
}

/// One scan cell: the mean of M draws at fixed χ.
#[derive(Clone, Copy, Debug)]
pub struct ScanCell {
    pub chi: usize,
    pub num_samples: u64,
    pub run: u32,
    pub mean_x: f64,
}

/// Aggregate over runs of one (χ, M) point.
#[derive(Clone, Copy, Debug)]
pub struct ScanRow {
    pub chi: usize,
    pub num_samples: u64,
    /// Var[x̄]/Ave[x̄]² over the runs.
    pub rel_var: f64,
    pub mean_of_means: f64,
    /// The collapse coordinate M·χ².
    pub collapse_coord: f64,
}

#[derive(Clone, Debug)]
pub struct ScanResult {
    pub cells: Vec<ScanCell>,
    pub rows: Vec<ScanRow>,
}

/// Deterministic layout of scan cells: every sample in the whole scan has a
/// globally unique stream index, independent of execution order.
pub fn scan_cell_layout(
    chi_list: &[usize],
    m_list: &[u64],
    runs: u32,
) -> Vec<(usize, u64, u32, u64)> {
    let mut cells = Vec::new();
    let mut base = 0u64;
    for &chi in chi_list {
        for &m in m_list {
            for run in 0..runs {
                cells.push((chi, m, run, base));
                base += m;
            }
        }
    }
    cells
}

/// Mean of ⟨ψ|op|ψ⟩ over the M samples of one cell, with stream indices
/// base..base+M.
pub fn scan_cell_mean(
    op: &MpoOperator,
    num_sites: usize,
    chi: usize,
    num_samples: u64,
    base_index: u64,
    master_seed: u64,
) -> Result<f64> {
    let spec = RmpsSpec::new(num_sites, chi, master_seed)?;
    let mut sum = 0.0;
    for i in 0..num_samples {
        sum += trace_sample(op, &spec, base_index + i)?.x;
    }
    Ok(sum / num_samples as f64)
}

/// The relative-variance scan: for each (χ, M), repeat `runs` times the
/// M-sample mean of x = ⟨ψ|op|ψ⟩ and report Var[x̄]/Ave[x̄]².
pub fn relative_variance_scan(
    op: &MpoOperator,
    num_sites: usize,
    chi_list: &[usize],
    m_list: &[u64],
    runs: u32,
    master_seed: u64,
) -> Result<ScanResult> {
    if runs < 2 {
        return Err(Error::InvalidArgument("need at least two runs".into()));
    }
    if chi_list.is_empty() || m_list.is_empty() {
        return Err(Error::InvalidArgument("empty scan grid".into()));
    }
    let layout = scan_cell_layout(chi_list, m_list, runs);
    let mut cells = Vec::with_capacity(layout.len());
    for &(chi, m, run, base) in &layout {
        let mean_x = scan_cell_mean(op, num_sites, chi, m, base, master_seed)?;
        cells.push(ScanCell {
            chi,
            num_samples: m,
            run,
            mean_x,
        });
    }
    let rows = scan_rows_from_cells(&cells);
    Ok(ScanResult { cells, rows })
}

/// Aggregate per-(χ, M) statistics from the cell table.
pub fn scan_rows_from_cells(cells: &[ScanCell]) -> Vec<ScanRow> {
    let mut rows: Vec<ScanRow> = Vec::new();
    let mut seen: Vec<(usize, u64)> = Vec::new();
    for cell in cells {
        let key = (cell.chi, cell.num_samples);
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        let means: Vec<f64> = cells
            .iter()
            .filter(|c| c.chi == cell.chi && c.num_samples == cell.num_samples)
            .map(|c| c.mean_x)
            .collect();
        let mean = stats::mean(&means);
        let var = stats::variance(&means);
        rows.push(ScanRow {
            chi: cell.chi,
            num_samples: cell.num_samples,
            rel_var: if mean != 0.0 {
                var / (mean * mean)
            } else {
                f64::INFINITY
            },
            mean_of_means: mean,
            collapse_coord: cell.num_samples as f64 * (cell.chi * cell.chi) as f64,
        });
    }
    rows
}

/// Variance diagnostics of a record set: the measured relative variance of z,
/// its error-propagation decomposition, and the comparison against the 1/χ
/// envelope.
#[derive(Clone, Copy, Debug)]
pub struct VarianceDiagnostics {
    pub rel_var_z: f64,
    pub rel_var_x: f64,
    pub rel_var_y: f64,
    /// 2 Cov[x, y]/(Ave[x] Ave[y]).
    pub covariance_term: f64,
    /// rel_var_x + rel_var_y − covariance_term.
    pub error_propagation: f64,
    /// 1/χ.
    pub chi_bound: f64,
    /// rel_var_z · χ; at or below O(1) when the bound holds.
    pub bound_ratio: f64,
}

pub fn variance_diagnostics(records: &[SampleRecord], chi: usize) -> Result<VarianceDiagnostics> {
    if records.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "variance diagnostics need at least 2 records, got {}",
            records.len()
        )));
    }
    let xs: Vec<f64> = records.iter().map(|r| r.x).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.y).collect();
    let zs: Vec<f64> = records.iter().map(|r| r.z).collect();
    let (mx, my, mz) = (stats::mean(&xs), stats::mean(&ys), stats::mean(&zs));
    let rel = |v: f64, m: f64| if m != 0.0 { v / (m * m) } else { 0.0 };
    let rel_var_x = rel(stats::variance(&xs), mx);
    let rel_var_y = rel(stats::variance(&ys), my);
    let rel_var_z = rel(stats::variance(&zs), mz);
    let covariance_term = if mx != 0.0 && my != 0.0 {
        2.0 * stats::covariance(&xs, &ys) / (mx * my)
    } else {
        0.0
    };
    let chi_bound = 1.0 / chi as f64;
    Ok(VarianceDiagnostics {
        rel_var_z,
        rel_var_x,
        rel_var_y,
        covariance_term,
        error_propagation: rel_var_x + rel_var_y - covariance_term,
        chi_bound,
        bound_ratio: rel_var_z * chi as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense;
    use crate::hamiltonian::{
        default_applications, default_half_width, heisenberg_mpo, ising_mpo, NnModel,
    };
    use crate::mps::MpoOperator;
    use num_complex::Complex64 as C64;

    #[test]
    fn plan_samples_examples() {
        let p = plan_samples(0.1, 0.1, 16).unwrap();
        assert_eq!(p.num_samples, 63);
        // Near-unity tolerances floor at a single sample.
        let p = plan_samples(1.0 - 1e-9, 1.0 - 1e-9, 1 << 20).unwrap();
        assert_eq!(p.num_samples, 1);
        // Halving ε quadruples M.
        let a = plan_samples(0.5, 0.1, 4).unwrap().num_samples;
        let b = plan_samples(0.25, 0.1, 4).unwrap().num_samples;
        assert_eq!(b, 4 * a);
        assert!(plan_samples(0.0, 0.5, 4).is_err());
        assert!(plan_samples(0.5, 1.0, 4).is_err());
        assert!(plan_samples(0.5, 0.5, 1).is_err());
    }

    #[test]
    fn identity_observable_gives_unit_mean_zero_error() {
        let n = 5;
        let spec = RmpsSpec::new(n, 4, 101).unwrap();
        let model = NnModel::Ising { lambda: 1.5 };
        let h = ising_mpo(n, 1.5).unwrap();
        let b = MpoOperator::identity(n, 2);
        let e_target = -0.1 * n as f64;
        let r = default_half_width(&model, n, e_target);
        let fs = FilterSpec::new(e_target, r, 8).unwrap();
        let est = estimate_thermal_expectation(
            &h,
            &b,
            &ThermalFilter::Microcanonical(fs),
            &spec,
            6,
            32,
            1e-12,
        )
        .unwrap();
        assert!((est.mean - 1.0).abs() <= 1e-9, "mean {}", est.mean);
        assert!(est.standard_error <= 1e-9);
        assert_eq!(est.samples_used, 6);
    }

    #[test]
    fn z_is_scale_invariant_in_b() {
        let n = 4;
        let spec = RmpsSpec::new(n, 2, 55).unwrap();
        let h = ising_mpo(n, 1.2).unwrap();
        let b = dense_mag_mpo(n);
        let fs = FilterSpec::new(
            -0.5,
            default_half_width(&NnModel::Ising { lambda: 1.2 }, n, -0.5),
            6,
        )
        .unwrap();
        let filter = ThermalFilter::Microcanonical(fs);
        let a = estimate_thermal_expectation(&h, &b, &filter, &spec, 4, 16, 1e-12).unwrap();
        let b3 = b.scale(C64::new(3.0, 0.0));
        let c = estimate_thermal_expectation(&h, &b3, &filter, &spec, 4, 16, 1e-12).unwrap();
        for (ra, rc) in a.records.iter().zip(&c.records) {
            assert!((rc.z - 3.0 * ra.z).abs() <= 1e-12 * ra.z.abs().max(1.0));
        }
    }

    fn dense_mag_mpo(n: usize) -> MpoOperator {
        let z = dense::pauli_z();
        let scaled = z.scale(C64::new(1.0 / n as f64, 0.0));
        let ops: Vec<ComplexMatrix> = (0..n).map(|_| scaled.clone()).collect();
        MpoOperator::sum_of_sites(&ops).unwrap()
    }

    #[test]
    fn estimates_are_deterministic() {
        let n = 5;
        let spec = RmpsSpec::new(n, 4, 777).unwrap();
        let h = heisenberg_mpo(n, 0.5).unwrap();
        let b = dense_mag_mpo(n);
        let model = NnModel::Heisenberg { lambda: 0.5 };
        let e = -0.15 * n as f64;
        let r = default_half_width(&model, n, e);
        let k = default_applications(r, n, 0.6);
        let fs = FilterSpec::new(e, r, k).unwrap();
        let filter = ThermalFilter::Microcanonical(fs);
        let a = estimate_thermal_expectation(&h, &b, &filter, &spec, 5, 32, 1e-12).unwrap();
        let c = estimate_thermal_expectation(&h, &b, &filter, &spec, 5, 32, 1e-12).unwrap();
        assert_eq!(a.mean.to_bits(), c.mean.to_bits());
        assert_eq!(a.standard_error.to_bits(), c.standard_error.to_bits());
        for (ra, rc) in a.records.iter().zip(&c.records) {
            assert_eq!(ra.z.to_bits(), rc.z.to_bits());
            assert_eq!(ra.log_norm.to_bits(), rc.log_norm.to_bits());
        }
    }

    #[test]
    fn microcanonical_estimate_matches_dense_reference() {
        // N = 6 Heisenberg at a moderate window: the MC mean over a decent
        // sample count lands within 4 standard errors of Tr(G^k B)/Tr(G^k).
        let n = 6;
        let lambda = 1.0;
        let spec = RmpsSpec::new(n, 8, 2025).unwrap();
        let model = NnModel::Heisenberg { lambda };
        let h = heisenberg_mpo(n, lambda).unwrap();
        let b = dense_mag_mpo(n);
        let e = -0.15 * n as f64;
        let r = default_half_width(&model, n, e);
        let k = default_applications(r, n, 0.6);
        let fs = FilterSpec::new(e, r, k).unwrap();
        let est = estimate_thermal_expectation(
            &h,
            &b,
            &ThermalFilter::Microcanonical(fs),
            &spec,
            48,
            32,
            1e-12,
        )
        .unwrap();
        let reference =
            dense::filtered_average(&model.dense(n), &dense::magnetization_dense(n), e, r, k)
                .unwrap();
        let tolerance = 4.0 * est.standard_error.max(1e-3);
        assert!(
            (est.mean - reference).abs() <= tolerance,
            "MC {} vs dense {reference} (stderr {})",
            est.mean,
            est.standard_error
        );
        assert_eq!(est.degenerate_count, 0);
    }

    #[test]
    fn canonical_route_matches_dense_gibbs() {
        // β = 0.8 Ising canonical average via Trotter filtering vs the dense
        // Tr(e^{−βH} B)/Tr(e^{−βH}).
        let n = 5;
        let lambda = 1.2;
        let beta = 0.8;
        let spec = RmpsSpec::new(n, 8, 4242).unwrap();
        let model = NnModel::Ising { lambda };
        let h = ising_mpo(n, lambda).unwrap();
        let b = dense_mag_mpo(n);
        let steps = 128u32;
        let ts = TrotterSpec::new(beta, steps).unwrap();
        let filter = ThermalFilter::Canonical {
            spec: ts,
            terms: model.nn_terms(n).unwrap(),
        };
        let est = estimate_thermal_expectation(&h, &b, &filter, &spec, 64, 32, 1e-12).unwrap();
        // Dense reference.
        let hd = model.dense(n);
        let w = dense::herm_exp(&hd, -beta).unwrap();
        let bw = dense::magnetization_dense(n).matrix.mul(&w.matrix);
        let reference = bw.trace().re / w.matrix.trace().re;
        let tolerance = 4.0 * est.standard_error.max(2e-2);
        assert!(
            (est.mean - reference).abs() <= tolerance,
            "MC {} vs dense {reference} (stderr {})",
            est.mean,
            est.standard_error
        );
    }

    #[test]
    fn trace_of_identity_is_hilbert_dimension() {
        let n = 7;
        let spec = RmpsSpec::new(n, 4, 31).unwrap();
        let id = MpoOperator::identity(n, 2);
        let est = estimate_trace(&id, &spec, 10).unwrap();
        assert!((est.mean - 1.0).abs() <= 1e-9);
        assert!(est.standard_error <= 1e-9);
        assert!((est.value() - 128.0).abs() <= 1e-6);
        assert!((est.log2_scale - 7.0).abs() <= 1e-12);
    }

    #[test]
    fn trace_estimate_matches_dense_trace() {
        // Arbitrary Hermitian MPO: the Ising Hamiltonian itself at N = 6.
        let n = 6;
        let spec = RmpsSpec::new(n, 8, 90).unwrap();
        let h = ising_mpo(n, 1.5).unwrap();
        let est = estimate_trace(&h, &spec, 3000).unwrap();
        // Tr H = 0 for the Ising chain; use absolute scale D·stderr.
        let scale = math::pow(2.0, n as f64);
        assert!(
            (est.value()).abs() <= 3.0 * est.standard_error * scale + 1e-9,
            "trace {} (stderr {})",
            est.value(),
            est.standard_error * scale
        );
        // And Tr H² matches the closed form.
        let (h2, _) = crate::hamiltonian::mpo_square(&h, 16, 1e-14).unwrap();
        let est2 = estimate_trace(&h2, &spec, 3000).unwrap();
        let expect = dense::ising_trace_h2(n, 1.5);
        let err = 3.0 * est2.standard_error * scale;
        assert!(
            (est2.value() - expect).abs() <= err,
            "Tr H² {} vs {expect} ± {err}",
            est2.value()
        );
    }

    #[test]
    fn scan_layout_is_disjoint_and_deterministic() {
        let layout = scan_cell_layout(&[2, 4], &[8, 16], 3);
        assert_eq!(layout.len(), 12);
        // Bases partition the index space without overlap.
        let mut prev_end = 0u64;
        for &(_, m, _, base) in &layout {
            assert_eq!(base, prev_end);
            prev_end = base + m;
        }
    }

    #[test]
    fn scan_rel_var_decreases_with_m() {
        let n = 6;
        let op = {
            let h = ising_mpo(n, 1.5).unwrap();
            crate::hamiltonian::mpo_square(&h, 16, 1e-14).unwrap().0
        };
        let scan = relative_variance_scan(&op, n, &[2], &[4, 64], 30, 5150).unwrap();
        let small = scan.rows.iter().find(|r| r.num_samples == 4).unwrap();
        let large = scan.rows.iter().find(|r| r.num_samples == 64).unwrap();
        assert!(
            large.rel_var < small.rel_var,
            "rel var did not fall: {} -> {}",
            small.rel_var,
            large.rel_var
        );
        // Collapse coordinate bookkeeping.
        assert_eq!(small.collapse_coord, 4.0 * 4.0);
    }

    #[test]
    fn variance_diagnostics_on_constant_records() {
        let rec = |i: u64, z: f64| SampleRecord {
            index: i,
            x: z,
            y: 1.0,
            z,
            log_norm: 0.0,
            total_discarded_weight: 0.0,
            seed: 0,
            degenerate: false,
        };
        let records: Vec<SampleRecord> = (0..10).map(|i| rec(i, 2.5)).collect();
        let d = variance_diagnostics(&records, 8).unwrap();
        assert!(d.rel_var_z.abs() <= 1e-18);
        assert!(d.rel_var_x.abs() <= 1e-18);
        assert!(d.error_propagation.abs() <= 1e-15);
        assert!((d.chi_bound - 0.125).abs() <= 1e-15);
        assert!(variance_diagnostics(&records[..1], 8).is_err());
    }

    #[test]
    fn variance_diagnostics_identity_observable() {
        // B = identity → z_i = 1 exactly, Var[z] = 0, while x and y fluctuate
        // together and the error-propagation decomposition cancels.
        let n = 5;
        let spec = RmpsSpec::new(n, 4, 808).unwrap();
        let model = NnModel::Ising { lambda: 1.0 };
        let h = ising_mpo(n, 1.0).unwrap();
        let b = MpoOperator::identity(n, 2);
        let e = 0.0;
        let r = default_half_width(&model, n, e);
        let fs = FilterSpec::new(e, r, 16).unwrap();
        let est = estimate_thermal_expectation(
            &h,
            &b,
            &ThermalFilter::Microcanonical(fs),
            &spec,
            12,
            32,
            1e-12,
        )
        .unwrap();
        let d = variance_diagnostics(&est.records, 4).unwrap();
        assert!(d.rel_var_z <= 1e-18, "Var[z] = {}", d.rel_var_z);
        assert!(d.rel_var_x > 0.0 && d.rel_var_y > 0.0);
        assert!(
            d.error_propagation.abs() <= 1e-9 * d.rel_var_x.max(d.rel_var_y),
            "decomposition {} vs parts {} {}",
            d.error_propagation,
            d.rel_var_x,
            d.rel_var_y
        );
    }
}
