//! Experiment orchestration.
//!
//! Each runner validates its configuration, computes with the deterministic
//! parallel driver, and emits `data.csv` + `summary.json` + `meta.json` into
//! the run directory. Sample index layouts are fixed per experiment, so the
//! artifacts depend only on (config, master seed).

use std::path::{Path, PathBuf};
use std::time::Instant;

use rmps_core::C64;
use serde::Serialize;

use rmps_core::dense;
use rmps_core::estimator::{
    reduce_records, scan_cell_layout, scan_cell_mean, scan_rows_from_cells, trace_sample,
    variance_diagnostics, EstimateResult, SampleRecord, ScanCell, ThermalEngine, ThermalFilter,
};
use rmps_core::hamiltonian::NnModel;
use rmps_core::linalg::ComplexMatrix;
use rmps_core::moments::{
    empirical_moment_with_stats, exact_first_moment, exact_second_moment, max_entry_zscore,
    two_design_report, EmpiricalMoment, MomentOrder,
};
use rmps_core::mps::MpoOperator;
use rmps_core::sampler::RmpsSpec;
use rmps_core::stats;

use crate::config::{ExperimentConfig, ExperimentKind, ObservableKind};
use crate::output::{fmt_f64, run_dir, write_run, CsvTable};
use crate::parallel::map_indexed;
use crate::{config_err, numerical_err, CliResult};

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_root: PathBuf,
    pub workers: usize,
}

/// Validate and execute; returns the run directory.
pub fn execute(config: &ExperimentConfig, opts: &RunOptions) -> CliResult<PathBuf> {
    config.validate()?;
    let dir = run_dir(&opts.out_root, config);
    let started = Instant::now();
    match config.experiment {
        ExperimentKind::MomentsCheck => run_moments_check(config, opts, &dir, started)?,
        ExperimentKind::Trace => run_trace(config, opts, &dir, started)?,
        ExperimentKind::VarianceScan => run_variance_scan(config, opts, &dir, started)?,
        ExperimentKind::Magnetization => run_magnetization(config, opts, &dir, started)?,
        ExperimentKind::Thermal => run_thermal(config, opts, &dir, started)?,
    }
    Ok(dir)
}

/// Build the configured observable as an MPO.
pub fn observable_mpo(
    kind: ObservableKind,
    model: &NnModel,
    num_sites: usize,
) -> CliResult<MpoOperator> {
    match kind {
        ObservableKind::Identity => Ok(MpoOperator::identity(num_sites, 2)),
        ObservableKind::Magnetization => magnetization_mpo(num_sites),
        ObservableKind::HSquared => {
            let h = model.mpo(num_sites).map_err(config_err)?;
            let (h2, _) =
                rmps_core::hamiltonian::mpo_square(&h, 64, 1e-14).map_err(numerical_err)?;
            Ok(h2)
        }
    }
}

/// (1/N) Σ Zᵢ as a bond-2 MPO.
pub fn magnetization_mpo(num_sites: usize) -> CliResult<MpoOperator> {
    let z = dense::pauli_z().scale(C64::new(1.0 / num_sites as f64, 0.0));
    let ops: Vec<ComplexMatrix> = (0..num_sites).map(|_| z.clone()).collect();
    MpoOperator::sum_of_sites(&ops).map_err(config_err)
}

/// Empirical moment with fixed-size index chunks accumulated in chunk order:
/// deterministic for every worker count.
pub fn parallel_empirical_moment(
    spec: &RmpsSpec,
    order: MomentOrder,
    samples: u64,
    workers: usize,
) -> CliResult<EmpiricalMoment> {
    const CHUNK: u64 = 4096;
    if samples <= CHUNK {
        return empirical_moment_with_stats(spec, order, samples).map_err(numerical_err);
    }
    let chunks = samples.div_ceil(CHUNK) as usize;
    let partials = map_indexed(chunks, workers, |c| {
        let start = c as u64 * CHUNK;
        let count = CHUNK.min(samples - start);
        chunk_moment_sums(spec, order, start, count)
    });
    let mut iter = partials.into_iter();
    let first = iter.next().unwrap().map_err(numerical_err)?;
    let (mut sum, mut sumsq) = first;
    for p in iter {
        let (s, q) = p.map_err(numerical_err)?;
        for (a, b) in sum.iter_mut().zip(&s) {
            *a += b;
        }
        for (a, b) in sumsq.iter_mut().zip(&q) {
            *a += b;
        }
    }
    let dim2 = sum.len();
    let dim = (dim2 as f64).sqrt() as usize;
    let inv_m = 1.0 / samples as f64;
    let mut stderr = vec![0.0f64; dim2];
    for i in 0..dim2 {
        sum[i] *= inv_m;
        let var = (sumsq[i] * inv_m - sum[i].norm_sqr()).max(0.0);
        stderr[i] = (var * inv_m).sqrt();
    }
    Ok(EmpiricalMoment {
        mean: dense::DenseOperator::new(ComplexMatrix::new(dim, dim, sum).map_err(numerical_err)?)
            .map_err(numerical_err)?,
        entry_stderr: stderr,
        samples,
    })
}

type MomentSums = Result<(Vec<C64>, Vec<f64>), rmps_core::Error>;

fn chunk_moment_sums(spec: &RmpsSpec, order: MomentOrder, start: u64, count: u64) -> MomentSums {
    use rmps_core::mps::to_dense_with_limit;
    use rmps_core::sampler::sample_indexed;
    let n = spec.num_sites;
    let d = 1usize << n;
    let dim = match order {
        MomentOrder::First => d,
        MomentOrder::Second => d * d,
    };
    let mut sum = vec![C64::new(0.0, 0.0); dim * dim];
    let mut sumsq = vec![0.0f64; dim * dim];
    let mut amp2 = vec![C64::new(0.0, 0.0); dim];
    for i in 0..count {
        let psi = sample_indexed(spec, start + i)?;
        let amp = to_dense_with_limit(&psi, rmps_core::tol::DENSE_LIMIT_SITES)?;
        let vec_ref: &[C64] = match order {
            MomentOrder::First => &amp,
            MomentOrder::Second => {
                for s1 in 0..d {
                    for s2 in 0..d {
                        amp2[s1 * d + s2] = amp[s1] * amp[s2];
                    }
                }
                &amp2
            }
        };
        for (r, &ar) in vec_ref.iter().enumerate() {
            let row_sum = &mut sum[r * dim..(r + 1) * dim];
            let row_sq = &mut sumsq[r * dim..(r + 1) * dim];
            for c in 0..dim {
                let w = ar * vec_ref[c].conj();
                row_sum[c] += w;
                row_sq[c] += w.norm_sqr();
            }
        }
    }
    Ok((sum, sumsq))
}

#[derive(Serialize)]
struct MomentsSummary {
    first_moment_samples: u64,
    first_moment_max_dev: f64,
    first_moment_envelope: f64,
    second_moment_samples: Option<u64>,
    second_moment_max_zscore: Option<f64>,
    two_design_chi_slope: f64,
    leading_coeff_ratio_at_max_chi: f64,
}

fn run_moments_check(
    config: &ExperimentConfig,
    opts: &RunOptions,
    dir: &Path,
    started: Instant,
) -> CliResult<()> {
    let n = config.num_sites;
    let chi_values = config.chi_values()?;
    let chi = chi_values[0];
    let spec = RmpsSpec::new(n, chi, config.master_seed).map_err(config_err)?;
    let m = config.m_values()?[0];

    let first = parallel_empirical_moment(&spec, MomentOrder::First, m, opts.workers)?;
    let exact1 = exact_first_moment(&spec).map_err(numerical_err)?;
    let first_dev = first.mean.matrix.sub(&exact1.matrix).max_abs();
    let envelope = 5.0 / (m as f64).sqrt();

    // Second-moment z table: dense exact operator up to N = 5.
    let (second_samples, second_z) = if n <= 5 {
        let emp = parallel_empirical_moment(&spec, MomentOrder::Second, m, opts.workers)?;
        let exact2 = exact_second_moment(&spec).map_err(numerical_err)?;
        let z = max_entry_zscore(&emp, &exact2).map_err(numerical_err)?;
        (Some(m), Some(z))
    } else {
        (None, None)
    };

    // Two-design table over the χ sweep.
    let sweep: Vec<usize> = if chi_values.len() > 1 {
        chi_values.clone()
    } else {
        let mut v = Vec::new();
        let mut c = 2usize;
        while c <= chi && c <= 1 << (n - 1) {
            v.push(c);
            c *= 2;
        }
        v
    };
    let report = two_design_report(n.min(6), &sweep).map_err(numerical_err)?;

    let mut table = CsvTable::new(vec![
        "num_sites",
        "chi",
        "distance",
        "relative_distance",
        "exact_norm",
        "leading_coeff_ratio",
    ]);
    for row in &report.rows {
        table.push(vec![
            row.num_sites.to_string(),
            row.chi.to_string(),
            fmt_f64(row.distance),
            fmt_f64(row.relative_distance),
            fmt_f64(row.exact_norm),
            fmt_f64(row.leading_coeff_ratio),
        ]);
    }
    let leading = report
        .rows
        .iter()
        .filter(|r| r.num_sites == n.min(6))
        .last()
        .map(|r| r.leading_coeff_ratio)
        .unwrap_or(f64::NAN);
    let summary = MomentsSummary {
        first_moment_samples: m,
        first_moment_max_dev: first_dev,
        first_moment_envelope: envelope,
        second_moment_samples: second_samples,
        second_moment_max_zscore: second_z,
        two_design_chi_slope: report.chi_slope,
        leading_coeff_ratio_at_max_chi: leading,
    };
    write_run(
        dir,
        config,
        &table,
        &summary,
        started.elapsed().as_secs_f64(),
        opts.workers,
    )
}

fn record_table() -> CsvTable {
    CsvTable::new(vec![
        "index",
        "x",
        "y",
        "z",
        "log_norm",
        "discarded_weight",
        "seed",
    ])
}

fn push_records(table: &mut CsvTable, records: &[SampleRecord]) {
    for r in records {
        table.push(vec![
            r.index.to_string(),
            fmt_f64(r.x),
            fmt_f64(r.y),
            fmt_f64(r.z),
            fmt_f64(r.log_norm),
            fmt_f64(r.total_discarded_weight),
            r.seed.to_string(),
        ]);
    }
}

#[derive(Serialize)]
struct TraceSummary {
    mean: f64,
    standard_error: f64,
    samples: u64,
    log2_scale: f64,
    /// mean · 2^log2_scale when representable.
    value: f64,
    /// D·stderr in linear scale.
    value_standard_error: f64,
    closed_form: Option<f64>,
}

fn run_trace(
    config: &ExperimentConfig,
    opts: &RunOptions,
    dir: &Path,
    started: Instant,
) -> CliResult<()> {
    let n = config.num_sites;
    let chi = config.chi_values()?[0];
    let spec = RmpsSpec::new(n, chi, config.master_seed).map_err(config_err)?;
    let model = config.model()?;
    let kind = config.observable.unwrap_or(ObservableKind::HSquared);
    let op = observable_mpo(kind, &model, n)?;
    let m = config.m_values()?[0];

    let records: Result<Vec<_>, _> = map_indexed(m as usize, opts.workers, |i| {
        trace_sample(&op, &spec, i as u64)
    })
    .into_iter()
    .collect();
    let records = records.map_err(numerical_err)?;
    let est = reduce_records(records, n as f64);

    let mut table = record_table();
    push_records(&mut table, &est.records);
    let scale = 2f64.powi(n as i32);
    let closed_form = match (kind, &model) {
        (ObservableKind::HSquared, NnModel::Ising { lambda }) => {
            Some(dense::ising_trace_h2(n, *lambda))
        }
        (ObservableKind::Identity, _) => Some(scale),
        _ => None,
    };
    let summary = TraceSummary {
        mean: est.mean,
        standard_error: est.standard_error,
        samples: est.samples_used,
        log2_scale: est.log2_scale,
        value: est.value(),
        value_standard_error: est.standard_error * scale,
        closed_form,
    };
    write_run(
        dir,
        config,
        &table,
        &summary,
        started.elapsed().as_secs_f64(),
        opts.workers,
    )
}

#[derive(Serialize)]
struct ScanRowOut {
    chi: usize,
    num_samples: u64,
    rel_var: f64,
    mean_of_means: f64,
    collapse_coord: f64,
}

#[derive(Serialize)]
struct ScanSummary {
    rows: Vec<ScanRowOut>,
    /// Log-log slope of rel_var against M for each χ.
    slopes_vs_m: Vec<(usize, f64)>,
}

fn run_variance_scan(
    config: &ExperimentConfig,
    opts: &RunOptions,
    dir: &Path,
    started: Instant,
) -> CliResult<()> {
    let n = config.num_sites;
    let model = config.model()?;
    let h = model.mpo(n).map_err(config_err)?;
    let (h2, _) = rmps_core::hamiltonian::mpo_square(&h, 64, 1e-14).map_err(numerical_err)?;
    let chi_list = config.chi_values()?;
    let m_list = config.m_values()?;
    let runs = config.runs()?;
    let layout = scan_cell_layout(&chi_list, &m_list, runs);
    let seed = config.master_seed;

    let cells: Result<Vec<ScanCell>, _> = map_indexed(layout.len(), opts.workers, |i| {
        let (chi, m, run, base) = layout[i];
        scan_cell_mean(&h2, n, chi, m, base, seed).map(|mean_x| ScanCell {
            chi,
            num_samples: m,
            run,
            mean_x,
        })
    })
    .into_iter()
    .collect();
    let cells = cells.map_err(numerical_err)?;
    let rows = scan_rows_from_cells(&cells);

    let mut table = CsvTable::new(vec![
        "chi",
        "num_samples",
        "run",
        "mean_x",
        "rel_var",
        "collapse_coord",
    ]);
    for cell in &cells {
        let row = rows
            .iter()
            .find(|r| r.chi == cell.chi && r.num_samples == cell.num_samples)
            .expect("row exists for cell");
        table.push(vec![
            cell.chi.to_string(),
            cell.num_samples.to_string(),
            cell.run.to_string(),
            fmt_f64(cell.mean_x),
            fmt_f64(row.rel_var),
            fmt_f64(row.collapse_coord),
        ]);
    }
    let slopes_vs_m: Vec<(usize, f64)> = chi_list
        .iter()
        .map(|&chi| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.chi == chi)
                .map(|r| (r.num_samples as f64, r.rel_var))
                .collect();
            (chi, stats::loglog_slope(&pts))
        })
        .collect();
    let summary = ScanSummary {
        rows: rows
            .iter()
            .map(|r| ScanRowOut {
                chi: r.chi,
                num_samples: r.num_samples,
                rel_var: r.rel_var,
                mean_of_means: r.mean_of_means,
                collapse_coord: r.collapse_coord,
            })
            .collect(),
        slopes_vs_m,
    };
    write_run(
        dir,
        config,
        &table,
        &summary,
        started.elapsed().as_secs_f64(),
        opts.workers,
    )
}

#[derive(Serialize)]
struct MagnetizationPoint {
    lambda: f64,
    mean: f64,
    standard_error: f64,
    realizations: u32,
}

#[derive(Serialize)]
struct MagnetizationSummary {
    num_sites: usize,
    chi: usize,
    energy_per_site: f64,
    filter_applications: u32,
    points: Vec<MagnetizationPoint>,
}

fn run_magnetization(
    config: &ExperimentConfig,
    opts: &RunOptions,
    dir: &Path,
    started: Instant,
) -> CliResult<()> {
    let n = config.num_sites;
    let chi = config.single_chi()?;
    let spec = RmpsSpec::new(n, chi, config.master_seed).map_err(config_err)?;
    let lambdas = config.lambda_values()?;
    let runs = config.runs()?;
    let observable = magnetization_mpo(n)?;
    let chi_max = config.chi_max(chi);
    let cutoff = config.cutoff();

    let mut table = CsvTable::new(vec![
        "lambda",
        "num_sites",
        "realization",
        "magnetization",
        "mean",
        "standard_error",
        "log_norm",
        "discarded_weight",
        "stream_index",
    ]);
    let mut points = Vec::with_capacity(lambdas.len());
    let mut k_used = 0u32;
    for (li, &lambda) in lambdas.iter().enumerate() {
        let model = config.model_with_lambda(lambda)?;
        let h = model.mpo(n).map_err(config_err)?;
        let fs = config.filter_spec(&model, n)?;
        k_used = fs.num_applications;
        let engine = ThermalEngine::new(
            &h,
            &observable,
            &ThermalFilter::Microcanonical(fs),
            &spec,
            chi_max,
            cutoff,
        )
        .map_err(numerical_err)?;
        // One RMPS per point per realization; stream indices partitioned by λ.
        let base = (li as u64) * runs as u64;
        let recs: Result<Vec<SampleRecord>, _> = map_indexed(runs as usize, opts.workers, |r| {
            engine.sample(base + r as u64)
        })
        .into_iter()
        .collect();
        let recs = recs.map_err(numerical_err)?;
        let zs: Vec<f64> = recs.iter().map(|r| r.z).collect();
        let mean = stats::mean(&zs);
        let standard_error = stats::standard_error(&zs);
        for (r, rec) in recs.iter().enumerate() {
            table.push(vec![
                fmt_f64(lambda),
                n.to_string(),
                r.to_string(),
                fmt_f64(rec.z),
                fmt_f64(mean),
                fmt_f64(standard_error),
                fmt_f64(rec.log_norm),
                fmt_f64(rec.total_discarded_weight),
                rec.index.to_string(),
            ]);
        }
        points.push(MagnetizationPoint {
            lambda,
            mean,
            standard_error,
            realizations: runs,
        });
    }
    let summary = MagnetizationSummary {
        num_sites: n,
        chi,
        energy_per_site: config
            .filter
            .as_ref()
            .map(|f| f.energy_per_site)
            .unwrap_or(f64::NAN),
        filter_applications: k_used,
        points,
    };
    write_run(
        dir,
        config,
        &table,
        &summary,
        started.elapsed().as_secs_f64(),
        opts.workers,
    )
}

#[derive(Serialize)]
struct ThermalSummary {
    mean: f64,
    standard_error: f64,
    samples: u64,
    degenerate_count: u64,
    planned_epsilon: Option<f64>,
    planned_delta: Option<f64>,
    rel_var_z: f64,
    /// Var[z]/Ave[z]² · χ, the measured counterpart of the 1/χ envelope.
    bound_ratio: f64,
    /// Samples the measured variance suggests for the requested (ε, δ); the
    /// analytic plan M ≈ 1/(δε²χ) is an upper-scaling guide, not tight.
    replanned_samples: Option<u64>,
    filter_bond: usize,
    filter_applications: Option<u32>,
}

fn run_thermal(
    config: &ExperimentConfig,
    opts: &RunOptions,
    dir: &Path,
    started: Instant,
) -> CliResult<()> {
    let n = config.num_sites;
    let chi = config.single_chi()?;
    let spec = RmpsSpec::new(n, chi, config.master_seed).map_err(config_err)?;
    let model = config.model()?;
    let h = model.mpo(n).map_err(config_err)?;
    let observable = observable_mpo(config.observable(), &model, n)?;
    let m = config.planned_samples(chi)?;
    let chi_max = config.chi_max(chi);
    let cutoff = config.cutoff();

    let (filter, k_used) = match config.trotter_spec()? {
        Some(ts) => (
            ThermalFilter::Canonical {
                spec: ts,
                terms: model.nn_terms(n).map_err(config_err)?,
            },
            Some(ts.num_steps),
        ),
        None => {
            let fs = config.filter_spec(&model, n)?;
            (ThermalFilter::Microcanonical(fs), Some(fs.num_applications))
        }
    };
    let engine = ThermalEngine::new(&h, &observable, &filter, &spec, chi_max, cutoff)
        .map_err(numerical_err)?;
    let records: Result<Vec<SampleRecord>, _> =
        map_indexed(m as usize, opts.workers, |i| engine.sample(i as u64))
            .into_iter()
            .collect();
    let records = records.map_err(numerical_err)?;
    let est: EstimateResult = reduce_records(records, 0.0);

    let diag = variance_diagnostics(&est.records, chi).ok();
    let rel_var_z = diag.map(|d| d.rel_var_z).unwrap_or(0.0);
    let replanned = match (config.epsilon, config.delta) {
        (Some(eps), Some(delta)) if rel_var_z > 0.0 => {
            Some((rel_var_z / (delta * eps * eps)).ceil().max(1.0) as u64)
        }
        _ => None,
    };

    let mut table = record_table();
    push_records(&mut table, &est.records);
    let summary = ThermalSummary {
        mean: est.mean,
        standard_error: est.standard_error,
        samples: est.samples_used,
        degenerate_count: est.degenerate_count,
        planned_epsilon: config.epsilon,
        planned_delta: config.delta,
        rel_var_z,
        bound_ratio: rel_var_z * chi as f64,
        replanned_samples: replanned,
        filter_bond: engine.filter_bond(),
        filter_applications: k_used,
    };
    write_run(
        dir,
        config,
        &table,
        &summary,
        started.elapsed().as_secs_f64(),
        opts.workers,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn opts() -> RunOptions {
        RunOptions {
            out_root: std::env::temp_dir().join("rmps-run-tests"),
            workers: 2,
        }
    }

    #[test]
    fn trace_identity_summary_is_exact() {
        let cfg = ExperimentConfig::parse(
            r#"{"experiment":"trace","model":"ising","num_sites":6,"lambda":1.5,
                "chi":4,"num_samples":20,"observable":"identity","master_seed":5}"#,
        )
        .unwrap();
        let dir = execute(&cfg, &opts()).unwrap();
        let summary: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap())
                .unwrap();
        let mean = summary["mean"].as_f64().unwrap();
        assert!((mean - 1.0).abs() <= 1e-9);
        let value = summary["value"].as_f64().unwrap();
        assert!((value - 64.0).abs() <= 1e-6);
        let stderr = summary["standard_error"].as_f64().unwrap();
        assert!(stderr <= 1e-9);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn reruns_are_byte_identical_across_worker_counts() {
        let cfg = ExperimentConfig::parse(
            r#"{"experiment":"thermal","model":"heisenberg","num_sites":6,"lambda":0.5,
                "chi":4,"num_samples":6,"observable":"magnetization",
                "filter":{"energy_per_site":-0.15,"window_scale":0.8},
                "master_seed":31}"#,
        )
        .unwrap();
        let mut o1 = opts();
        o1.out_root = std::env::temp_dir().join("rmps-run-tests-w1");
        o1.workers = 1;
        let mut o2 = opts();
        o2.out_root = std::env::temp_dir().join("rmps-run-tests-w2");
        o2.workers = 2;
        let d1 = execute(&cfg, &o1).unwrap();
        let d2 = execute(&cfg, &o2).unwrap();
        let a = std::fs::read(d1.join("data.csv")).unwrap();
        let b = std::fs::read(d2.join("data.csv")).unwrap();
        assert_eq!(a, b);
        let a = std::fs::read(d1.join("summary.json")).unwrap();
        let b = std::fs::read(d2.join("summary.json")).unwrap();
        assert_eq!(a, b);
        std::fs::remove_dir_all(&o1.out_root).ok();
        std::fs::remove_dir_all(&o2.out_root).ok();
    }

    #[test]
    fn thermal_canonical_route_runs() {
        let cfg = ExperimentConfig::parse(
            r#"{"experiment":"thermal","model":"ising","num_sites":5,"lambda":1.2,
                "chi":4,"num_samples":4,"observable":"magnetization",
                "beta":0.5,"trotter_steps":16,"master_seed":77}"#,
        )
        .unwrap();
        let mut o = opts();
        o.out_root = std::env::temp_dir().join("rmps-run-tests-canonical");
        let dir = execute(&cfg, &o).unwrap();
        let summary: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap())
                .unwrap();
        assert_eq!(summary["samples"], 4);
        assert_eq!(summary["filter_applications"], 16);
        assert!(summary["mean"].as_f64().unwrap().is_finite());
        std::fs::remove_dir_all(&o.out_root).ok();
    }

    #[test]
    fn parallel_empirical_moment_is_worker_independent() {
        let spec = RmpsSpec::new(3, 2, 77).unwrap();
        let a = parallel_empirical_moment(&spec, MomentOrder::First, 9000, 1).unwrap();
        let b = parallel_empirical_moment(&spec, MomentOrder::First, 9000, 4).unwrap();
        for (x, y) in a.mean.matrix.data().iter().zip(b.mean.matrix.data()) {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
    }
}
