//! Exact ensemble moments and 2-design distance checks.
//!
//! The first moment of the random-MPS ensemble is I/D for every bond
//! dimension. The second moment is assembled from symmetric/antisymmetric
//! two-copy projectors: one fused block covering the ramp sites plus the
//! first bulk site, then one projector per remaining site, summed over
//! even-parity label strings. The coefficients follow from the per-site
//! Haar averages: the terminal site contributes 1/(d² D_q), each bulk update
//! one factor α (symmetric branch) or β (antisymmetric branch), and ramp
//! sites contribute nothing. This reproduces the published three- and
//! four-qubit operators exactly and is verified against brute-force sample
//! averages in tests.
//!
//! Index convention for two-copy operators: copy-major, i.e. a basis vector
//! of H⊗H is indexed s₁·D + s₂ where s₁, s₂ are computational-basis indices
//! (site 1 most significant) of the first and second copy. The formula's
//! site-local projectors act on the pair of copies of each site block, which
//! in this indexing means bit positions (N−1−j) of s₁ and s₂ jointly.

use alloc::{format, vec, vec::Vec};
use num_complex::Complex64 as C64;

use crate::dense::DenseOperator;
use crate::linalg::{operator_norm_hermitian, ComplexMatrix};
use crate::math;
use crate::mps::to_dense_with_limit;
use crate::sampler::{sample_indexed, RmpsSpec};
use crate::stats;
use crate::tol;
use crate::{Error, Result};

/// The sector constants of the two-copy Haar average over a χ-dimensional
/// auxiliary space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectorCoefficients {
    /// α = (χ+1)/(2(2χ+1)) = D_s^χ / D_s^{2χ}.
    pub alpha: f64,
    /// β = (χ−1)/(2(2χ−1)) = D_a^χ / D_a^{2χ}.
    pub beta: f64,
    /// Symmetric-subspace dimension χ(χ+1)/2.
    pub dim_sym: u64,
    /// Antisymmetric-subspace dimension χ(χ−1)/2.
    pub dim_asym: u64,
}

/// Exact rational evaluations of the sector constants.
pub fn alpha_beta(chi: u64) -> SectorCoefficients {
    let c = chi as f64;
    SectorCoefficients {
        alpha: (c + 1.0) / (2.0 * (2.0 * c + 1.0)),
        beta: (c - 1.0) / (2.0 * (2.0 * c - 1.0)),
        dim_sym: chi * (chi + 1) / 2,
        dim_asym: chi * (chi - 1) / 2,
    }
}

/// Product of the per-site average factors (the telescoping chain); must equal
/// 1/D for every admissible spec. Kept separate from [`exact_first_moment`] so
/// the identity is testable on its own.
pub fn first_moment_telescoping(spec: &RmpsSpec) -> f64 {
    let bonds = spec.bond_profile();
    let d = spec.phys_dim as f64;
    let n = spec.num_sites;
    let mut product = 1.0;
    for j in 1..n {
        product *= bonds[j] as f64 / (d * bonds[j - 1] as f64);
    }
    // Terminal site: the two rescaled columns average to I/(d·χ_last).
    product /= d * bonds[n - 1] as f64;
    product
}

/// The exact first moment I/D (independent of χ).
pub fn exact_first_moment(spec: &RmpsSpec) -> Result<DenseOperator> {
    spec.validate()?;
    if spec.num_sites > tol::DENSE_LIMIT_SITES {
        return Err(Error::ResourceLimit(format!(
            "first moment for N = {} exceeds the dense limit",
            spec.num_sites
        )));
    }
    let dim = 1usize << spec.num_sites;
    let scale = first_moment_telescoping(spec) * dim as f64; // = 1 exactly
    Ok(DenseOperator {
        matrix: ComplexMatrix::identity(dim).scale(C64::new(scale / dim as f64, 0.0)),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Sym,
    Asym,
}

/// One projector block: the two copies of sites [start, end) carry Π_parity.
#[derive(Clone, Copy, Debug)]
pub struct MomentBlock {
    pub start: usize,
    pub end: usize,
    pub parity: Parity,
}

/// One term of the second-moment sum.
#[derive(Clone, Debug)]
pub struct MomentTerm {
    pub coeff: f64,
    pub blocks: Vec<MomentBlock>,
}

/// The second-moment operator as an explicit term list.
///
/// Term enumeration (0-based sites, L = log₂χ ramp sites):
/// with no bulk sites (L = N−1) the two terms are Π_q on the fused block
/// [0, N−1) times Π_q on the last site, weighted 1/(d² D_q). Otherwise the
/// branch types t_j ∈ {s, a} of the bulk updates j ∈ {L, …, N−2} determine
/// everything: t_{N−2} equals the terminal label, each bulk update
/// contributes c_{t_j} ∈ {α, β}, the fused block [0, L+1) carries Π_{t_L},
/// and site j ∈ {L+1, …, N−2} carries the symmetric projector exactly when
/// t_{j−1} = t_j.
pub fn second_moment_terms(num_sites: usize, chi: usize) -> Result<Vec<MomentTerm>> {
    let spec = RmpsSpec::new(num_sites, chi, 0)?;
    let n = num_sites;
    let l = spec.ramp_len();
    let coeffs = alpha_beta(chi as u64);
    let d2 = (spec.phys_dim * spec.phys_dim) as f64;
    let mut terms = Vec::new();

    let weight = |q: Parity| -> f64 {
        match q {
            Parity::Sym => 1.0 / (d2 * coeffs.dim_sym as f64),
            Parity::Asym => 1.0 / (d2 * coeffs.dim_asym as f64),
        }
    };
    let c_of = |q: Parity| -> f64 {
        match q {
            Parity::Sym => coeffs.alpha,
            Parity::Asym => coeffs.beta,
        }
    };

    if l == n - 1 {
        // No bulk sites: fused [0, N−1) and the terminal share the label.
        for q in [Parity::Sym, Parity::Asym] {
            if q == Parity::Asym && coeffs.dim_asym == 0 {
                continue;
            }
            terms.push(MomentTerm {
                coeff: weight(q),
                blocks: vec![
                    MomentBlock {
                        start: 0,
                        end: n - 1,
                        parity: q,
                    },
                    MomentBlock {
                        start: n - 1,
                        end: n,
                        parity: q,
                    },
                ],
            });
        }
        return Ok(terms);
    }

    // Bulk update types t_j for j ∈ {L, …, N−2}; t_{N−2} is the terminal
    // label, the rest are free.
    let free = n - 1 - l; // number of free binary choices (t_L..t_{N−3}, q_N)
    for mask in 0u64..(1u64 << free) {
        let mut t = vec![Parity::Sym; n - 1 - l]; // indexed by j − L
        for (bit, slot) in t.iter_mut().enumerate() {
            if (mask >> bit) & 1 == 1 {
                *slot = Parity::Asym;
            }
        }
        let q_terminal = t[n - 2 - l];
        if q_terminal == Parity::Asym && coeffs.dim_asym == 0 {
            continue;
        }
        let mut coeff = weight(q_terminal);
        for &tj in &t {
            coeff *= c_of(tj);
        }
        let mut blocks = Vec::with_capacity(n - l);
        blocks.push(MomentBlock {
            start: 0,
            end: l + 1,
            parity: t[0],
        });
        for j in (l + 1)..(n - 1) {
            let parity = if t[j - 1 - l] == t[j - l] {
                Parity::Sym
            } else {
                Parity::Asym
            };
            blocks.push(MomentBlock {
                start: j,
                end: j + 1,
                parity,
            });
        }
        blocks.push(MomentBlock {
            start: n - 1,
            end: n,
            parity: q_terminal,
        });
        terms.push(MomentTerm { coeff, blocks });
    }
    Ok(terms)
}

/// Trace of the term-list operator, computable without building it: each
/// block contributes the dimension of its projector.
pub fn second_moment_trace(num_sites: usize, chi: usize) -> Result<f64> {
    let terms = second_moment_terms(num_sites, chi)?;
    let mut total = 0.0;
    for term in &terms {
        let mut tr = term.coeff;
        for b in &term.blocks {
            let m = 1u64 << (b.end - b.start);
            let dim = match b.parity {
                Parity::Sym => m * (m + 1) / 2,
                Parity::Asym => m * (m - 1) / 2,
            };
            tr *= dim as f64;
        }
        total += tr;
    }
    Ok(total)
}

/// Dense second moment on H⊗H (copy-major index s₁·D + s₂).
pub fn exact_second_moment(spec: &RmpsSpec) -> Result<DenseOperator> {
    spec.validate()?;
    let n = spec.num_sites;
    if n > tol::SECOND_MOMENT_LIMIT_SITES {
        return Err(Error::ResourceLimit(format!(
            "second moment for N = {n} exceeds the dense limit of {} sites",
            tol::SECOND_MOMENT_LIMIT_SITES
        )));
    }
    let terms = second_moment_terms(n, spec.bond_dim)?;
    let d = 1usize << n;
    let dim2 = d * d;
    let mut out = ComplexMatrix::zeros(dim2, dim2);
    let nblocks = terms.first().map(|t| t.blocks.len()).unwrap_or(0);
    let mut masks: Vec<(u32, usize)> = Vec::with_capacity(nblocks);
    for term in &terms {
        masks.clear();
        for b in &term.blocks {
            let width = b.end - b.start;
            let lo = n - b.end; // lowest bit position of the block
            masks.push((width as u32, lo));
        }
        for s1 in 0..d {
            for s2 in 0..d {
                let row = s1 * d + s2;
                // Enumerate keep/swap choices per block.
                for choice in 0u32..(1u32 << term.blocks.len()) {
                    let mut c1 = s1;
                    let mut c2 = s2;
                    let mut value = term.coeff;
                    for (bi, b) in term.blocks.iter().enumerate() {
                        let (width, lo) = masks[bi];
                        let mask = ((1usize << width) - 1) << lo;
                        let swap = (choice >> bi) & 1 == 1;
                        value *= 0.5;
                        if swap {
                            if b.parity == Parity::Asym {
                                value = -value;
                            }
                            let x1 = c1 & mask;
                            let x2 = c2 & mask;
                            c1 = (c1 & !mask) | x2;
                            c2 = (c2 & !mask) | x1;
                        }
                    }
                    let col = c1 * d + c2;
                    let cur = out.get(row, col);
                    out.set(row, col, cur + C64::new(value, 0.0));
                }
            }
        }
    }
    Ok(DenseOperator { matrix: out })
}

/// Dense Haar second moment 2Π_sym/(D(D+1)) = (I + F)/(D(D+1)) on H⊗H.
pub fn haar_second_moment(dim: usize) -> Result<DenseOperator> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let dim2 = dim
        .checked_mul(dim)
        .ok_or_else(|| Error::ResourceLimit("two-copy dimension overflow".into()))?;
    if dim2 > 1usize << (2 * tol::SECOND_MOMENT_LIMIT_SITES) {
        return Err(Error::ResourceLimit(
            "dense Haar second moment exceeds the dense limit".into(),
        ));
    }
    let scale = 1.0 / (dim as f64 * (dim as f64 + 1.0));
    let mut m = ComplexMatrix::zeros(dim2, dim2);
    for s1 in 0..dim {
        for s2 in 0..dim {
            let row = s1 * dim + s2;
            let cur = m.get(row, row);
            m.set(row, row, cur + C64::new(scale, 0.0));
            let col = s2 * dim + s1;
            let cur = m.get(row, col);
            m.set(row, col, cur + C64::new(scale, 0.0));
        }
    }
    Ok(DenseOperator { matrix: m })
}

/// Matrix-free application of the exact second moment; used for operator-norm
/// distances at sizes where the dense matrix would not fit comfortably.
pub struct SecondMomentOp {
    num_sites: usize,
    terms: Vec<MomentTerm>,
}

impl SecondMomentOp {
    pub fn new(num_sites: usize, chi: usize) -> Result<Self> {
        Ok(Self {
            num_sites,
            terms: second_moment_terms(num_sites, chi)?,
        })
    }

    pub fn two_copy_dim(&self) -> usize {
        1usize << (2 * self.num_sites)
    }

    /// out = Σ_terms coeff · (Π_b …) v, one block projector at a time.
    pub fn apply(&self, v: &[C64], out: &mut [C64]) {
        let n = self.num_sites;
        let d = 1usize << n;
        let dim2 = d * d;
        debug_assert_eq!(v.len(), dim2);
        debug_assert_eq!(out.len(), dim2);
        for o in out.iter_mut() {
            *o = C64::new(0.0, 0.0);
        }
        let mut work = vec![C64::new(0.0, 0.0); dim2];
        let mut next = vec![C64::new(0.0, 0.0); dim2];
        for term in &self.terms {
            work.copy_from_slice(v);
            for b in &term.blocks {
                let width = b.end - b.start;
                let lo = n - b.end;
                let mask = ((1usize << width) - 1) << lo;
                let sign = if b.parity == Parity::Sym { 1.0 } else { -1.0 };
                for s1 in 0..d {
                    for s2 in 0..d {
                        let idx = s1 * d + s2;
                        let x1 = s1 & mask;
                        let x2 = s2 & mask;
                        let t1 = (s1 & !mask) | x2;
                        let t2 = (s2 & !mask) | x1;
                        let swapped = t1 * d + t2;
                        next[idx] = (work[idx] + work[swapped] * sign) * 0.5;
                    }
                }
                core::mem::swap(&mut work, &mut next);
            }
            for (o, w) in out.iter_mut().zip(&work) {
                *o += w * term.coeff;
            }
        }
    }
}

/// Matrix-free application of the Haar second moment.
pub struct HaarSecondMomentOp {
    dim: usize,
}

impl HaarSecondMomentOp {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }

    pub fn apply(&self, v: &[C64], out: &mut [C64]) {
        let d = self.dim;
        let scale = 1.0 / (d as f64 * (d as f64 + 1.0));
        for s1 in 0..d {
            for s2 in 0..d {
                let idx = s1 * d + s2;
                let swapped = s2 * d + s1;
                out[idx] = (v[idx] + v[swapped]) * scale;
            }
        }
    }
}

/// Largest singular value of a − b and that divided by ‖b‖_∞.
pub fn moment_distance(a: &DenseOperator, b: &DenseOperator) -> Result<(f64, f64)> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch(format!(
            "moment operators differ in dimension: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let dim = a.dim();
    let mut tmp = vec![C64::new(0.0, 0.0); dim];
    let dist = operator_norm_hermitian(
        dim,
        |v, out| {
            a.matrix.matvec(v, out);
            b.matrix.matvec(v, &mut tmp);
            for (o, t) in out.iter_mut().zip(&tmp) {
                *o -= t;
            }
        },
        20_000,
        1e-12,
    );
    let bnorm = b.operator_norm();
    if bnorm == 0.0 {
        return Ok((dist, if dist == 0.0 { 0.0 } else { f64::INFINITY }));
    }
    Ok((dist, dist / bnorm))
}

/// Matrix-free version of [`moment_distance`] between the exact RMPS second
/// moment and the Haar second moment.
pub fn rmps_haar_distance(num_sites: usize, chi: usize) -> Result<(f64, f64)> {
    let exact = SecondMomentOp::new(num_sites, chi)?;
    let haar = HaarSecondMomentOp::new(1usize << num_sites);
    let dim2 = exact.two_copy_dim();
    let mut tmp = vec![C64::new(0.0, 0.0); dim2];
    let dist = operator_norm_hermitian(
        dim2,
        |v, out| {
            exact.apply(v, out);
            haar.apply(v, &mut tmp);
            for (o, t) in out.iter_mut().zip(&tmp) {
                *o -= t;
            }
        },
        20_000,
        1e-12,
    );
    let d = (1usize << num_sites) as f64;
    let haar_norm = 2.0 / (d * (d + 1.0));
    Ok((dist, dist / haar_norm))
}

/// ‖exact second moment‖_∞, matrix-free.
pub fn rmps_second_moment_norm(num_sites: usize, chi: usize) -> Result<f64> {
    let exact = SecondMomentOp::new(num_sites, chi)?;
    let dim2 = exact.two_copy_dim();
    Ok(operator_norm_hermitian(
        dim2,
        |v, out| exact.apply(v, out),
        20_000,
        1e-12,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MomentOrder {
    First,
    Second,
}

/// Empirical moment with per-entry fluctuation information.
pub struct EmpiricalMoment {
    pub mean: DenseOperator,
    /// Standard error of each mean entry (complex scatter / √M).
    pub entry_stderr: Vec<f64>,
    pub samples: u64,
}

/// Monte Carlo average of |ψ⟩⟨ψ| (order 1, on D) or |ψ⟩⟨ψ|⊗|ψ⟩⟨ψ|
/// (order 2, on D²), with per-sample streams derived from the spec's master
/// seed.
pub fn empirical_moment_with_stats(
    spec: &RmpsSpec,
    order: MomentOrder,
    samples: u64,
) -> Result<EmpiricalMoment> {
    spec.validate()?;
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let n = spec.num_sites;
    let limit = match order {
        MomentOrder::First => tol::DENSE_LIMIT_SITES / 2,
        MomentOrder::Second => tol::SECOND_MOMENT_LIMIT_SITES,
    };
    if n > limit {
        return Err(Error::ResourceLimit(format!(
            "empirical moment for N = {n} exceeds the dense limit of {limit} sites"
        )));
    }
    let d = 1usize << n;
    let dim = match order {
        MomentOrder::First => d,
        MomentOrder::Second => d * d,
    };
    let mut sum = vec![C64::new(0.0, 0.0); dim * dim];
    let mut sumsq = vec![0.0f64; dim * dim];
    let mut amp2 = vec![C64::new(0.0, 0.0); dim];
    for idx in 0..samples {
        let psi = sample_indexed(spec, idx)?;
        let amp = to_dense_with_limit(&psi, tol::DENSE_LIMIT_SITES)?;
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
    let inv_m = 1.0 / samples as f64;
    let mut stderr = vec![0.0f64; dim * dim];
    for i in 0..dim * dim {
        sum[i] *= inv_m;
        let var = (sumsq[i] * inv_m - sum[i].norm_sqr()).max(0.0);
        stderr[i] = math::sqrt(var * inv_m);
    }
    Ok(EmpiricalMoment {
        mean: DenseOperator {
            matrix: ComplexMatrix::new(dim, dim, sum)?,
        },
        entry_stderr: stderr,
        samples,
    })
}

/// The plain empirical moment operator.
pub fn empirical_moment(
    spec: &RmpsSpec,
    order: MomentOrder,
    samples: u64,
) -> Result<DenseOperator> {
    Ok(empirical_moment_with_stats(spec, order, samples)?.mean)
}

/// Largest entrywise z-score between an empirical moment and its exact
/// counterpart.
pub fn max_entry_zscore(empirical: &EmpiricalMoment, exact: &DenseOperator) -> Result<f64> {
    let dim = exact.dim();
    if empirical.mean.dim() != dim {
        return Err(Error::ShapeMismatch("moment dimensions differ".into()));
    }
    let mut worst = 0.0f64;
    for r in 0..dim {
        for c in 0..dim {
            let diff = (empirical.mean.matrix.get(r, c) - exact.matrix.get(r, c)).norm();
            let se = empirical.entry_stderr[r * dim + c];
            if se > 0.0 {
                worst = worst.max(diff / se);
            } else if diff > 1e-12 {
                worst = f64::INFINITY;
            }
        }
    }
    Ok(worst)
}

/// One row of the 2-design table.
#[derive(Clone, Copy, Debug)]
pub struct TwoDesignRow {
    pub num_sites: usize,
    pub chi: usize,
    pub distance: f64,
    pub relative_distance: f64,
    pub exact_norm: f64,
    pub haar_norm: f64,
    /// ‖exact‖_∞ · D²/2; approaches 1 as χ grows (the perturbative leading
    /// coefficient 2/D²).
    pub leading_coeff_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct TwoDesignReport {
    pub rows: Vec<TwoDesignRow>,
    /// Log-log slope of relative distance against χ at the largest N.
    pub chi_slope: f64,
}

/// Tabulate the RMPS-vs-Haar second-moment distance against χ (and against N
/// for every smaller chain admitting each χ). Deterministic; matrix-free.
pub fn two_design_report(num_sites: usize, chi_list: &[usize]) -> Result<TwoDesignReport> {
    if num_sites < 2 || num_sites > 6 {
        return Err(Error::InvalidArgument(
            "two-design report covers 2 <= N <= 6".into(),
        ));
    }
    let mut rows = Vec::new();
    for n in 2..=num_sites {
        for &chi in chi_list {
            if RmpsSpec::new(n, chi, 0).is_err() {
                continue;
            }
            let (dist, rel) = rmps_haar_distance(n, chi)?;
            let exact_norm = rmps_second_moment_norm(n, chi)?;
            let d = (1usize << n) as f64;
            let haar_norm = 2.0 / (d * (d + 1.0));
            rows.push(TwoDesignRow {
                num_sites: n,
                chi,
                distance: dist,
                relative_distance: rel,
                exact_norm,
                haar_norm,
                leading_coeff_ratio: exact_norm * d * d / 2.0,
            });
        }
    }
    let top: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.num_sites == num_sites)
        .map(|r| (r.chi as f64, r.relative_distance))
        .collect();
    Ok(TwoDesignReport {
        rows,
        chi_slope: stats::loglog_slope(&top),
    })
}
