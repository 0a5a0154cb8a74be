//! Spin-chain Hamiltonians, energy filters, and imaginary-time steps as MPOs.
//!
//! Models are nearest-neighbor on an open chain. The Heisenberg field term is
//! read as H = −Σᵢ ¼(XX+YY+ZZ)ᵢ,ᵢ₊₁ + λ Σᵢ Zᵢ (couplings over i = 1..N−1,
//! field over i = 1..N), which keeps the conventional Zeeman form on the open
//! chain.
//!
//! The microcanonical filter is the polynomial G = I − (H−E)²/r². With
//! r at least the spectral radius of H−E the filter maps the spectrum into
//! [0, 1] and repeated application narrows the energy window like r/√k.
//! Defaults: r = 1.05 × (sum of term norms + |E|), and k chosen so the
//! surviving window r/√(2k) is a fixed fraction of N in energy units.

use alloc::vec::Vec;
use num_complex::Complex64 as C64;

use crate::dense;
use crate::linalg::{hermitian_eig, ComplexMatrix};
use crate::math;
use crate::mps::{
    apply_mpo_zipup, apply_two_site_gate, mpo_compress, renormalize, CompressionStats, MpoOperator,
    MpsState, Tensor4,
};
use crate::{Error, Result};

/// Microcanonical filter parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterSpec {
    /// Window center E (extensive units).
    pub target_energy: f64,
    /// Half width r of the filter parabola.
    pub half_width: f64,
    /// Total number of filter applications k (even; the estimator applies
    /// A = G^(k/2) to each sample).
    pub num_applications: u32,
}

impl FilterSpec {
    pub fn new(target_energy: f64, half_width: f64, num_applications: u32) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::InvalidArgument(
                "filter half width must be positive".into(),
            ));
        }
        if num_applications == 0 || num_applications % 2 != 0 {
            return Err(Error::InvalidArgument(
                "the number of filter applications must be even and positive".into(),
            ));
        }
        Ok(Self {
            target_energy,
            half_width,
            num_applications,
        })
    }

    pub fn half_applications(&self) -> u32 {
        self.num_applications / 2
    }

    /// Energy window surviving k applications, r/√(2k).
    pub fn window(&self) -> f64 {
        self.half_width / math::sqrt(2.0 * self.num_applications as f64)
    }
}

/// Imaginary-time (canonical) parameters: G = exp(−βH/k) applied k times.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrotterSpec {
    pub inverse_temperature: f64,
    pub num_steps: u32,
}

impl TrotterSpec {
    pub fn new(inverse_temperature: f64, num_steps: u32) -> Result<Self> {
        if inverse_temperature < 0.0 {
            return Err(Error::InvalidArgument("β must be non-negative".into()));
        }
        if num_steps == 0 || num_steps % 2 != 0 {
            return Err(Error::InvalidArgument(
                "the number of Trotter steps must be even and positive".into(),
            ));
        }
        Ok(Self {
            inverse_temperature,
            num_steps,
        })
    }

    pub fn tau(&self) -> f64 {
        self.inverse_temperature / self.num_steps as f64
    }
}

/// The spin-chain models used in the experiments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NnModel {
    /// H = Σ XᵢXᵢ₊₁ + λ Σ Zᵢ
    Ising { lambda: f64 },
    /// H = −Σ ¼(XX+YY+ZZ) + λ Σ Zᵢ
    Heisenberg { lambda: f64 },
}

impl NnModel {
    pub fn lambda(&self) -> f64 {
        match self {
            NnModel::Ising { lambda } | NnModel::Heisenberg { lambda } => *lambda,
        }
    }

    /// MPO of the Hamiltonian.
    pub fn mpo(&self, num_sites: usize) -> Result<MpoOperator> {
        match self {
            NnModel::Ising { lambda } => ising_mpo(num_sites, *lambda),
            NnModel::Heisenberg { lambda } => heisenberg_mpo(num_sites, *lambda),
        }
    }

    /// Dense form, built independently from Kronecker products.
    pub fn dense(&self, num_sites: usize) -> dense::DenseOperator {
        match self {
            NnModel::Ising { lambda } => dense::ising_dense(num_sites, *lambda),
            NnModel::Heisenberg { lambda } => dense::heisenberg_dense(num_sites, *lambda),
        }
    }

    /// Upper bound on ‖H‖ from the sum of term norms.
    pub fn norm_bound(&self, num_sites: usize) -> f64 {
        let n = num_sites as f64;
        match self {
            NnModel::Ising { lambda } => (n - 1.0) + lambda.abs() * n,
            NnModel::Heisenberg { lambda } => 0.75 * (n - 1.0) + lambda.abs() * n,
        }
    }

    /// Nearest-neighbor two-site terms (d²×d², row = (out₁out₂)) whose sum is
    /// H; on-site fields are split between adjacent bonds, with boundary sites
    /// giving their full share to their only bond.
    pub fn nn_terms(&self, num_sites: usize) -> Result<Vec<ComplexMatrix>> {
        if num_sites < 2 {
            return Err(Error::InvalidArgument("need at least two sites".into()));
        }
        let x = dense::pauli_x();
        let y = dense::pauli_y();
        let z = dense::pauli_z();
        let id = dense::pauli_id();
        let lambda = self.lambda();
        let coupling = match self {
            NnModel::Ising { .. } => dense::kron(&x, &x),
            NnModel::Heisenberg { .. } => dense::kron(&x, &x)
                .add(&dense::kron(&y, &y))
                .add(&dense::kron(&z, &z))
                .scale(C64::new(-0.25, 0.0)),
        };
        let zl = dense::kron(&z, &id);
        let zr = dense::kron(&id, &z);
        let mut terms = Vec::with_capacity(num_sites - 1);
        for i in 0..num_sites - 1 {
            // Field shares: boundary sites have a single bond.
            let left_share = if i == 0 { 1.0 } else { 0.5 };
            let right_share = if i == num_sites - 2 { 1.0 } else { 0.5 };
            let term = coupling
                .add(&zl.scale(C64::new(lambda * left_share, 0.0)))
                .add(&zr.scale(C64::new(lambda * right_share, 0.0)));
            terms.push(term);
        }
        Ok(terms)
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Transverse-field Ising MPO, bond dimension 3:
/// H = Σ_{i<N} XᵢXᵢ₊₁ + λ Σᵢ Zᵢ.
pub fn ising_mpo(num_sites: usize, lambda: f64) -> Result<MpoOperator> {
    if num_sites < 2 {
        return Err(Error::InvalidArgument("need at least two sites".into()));
    }
    let x = dense::pauli_x();
    let z = dense::pauli_z();
    let id = dense::pauli_id();
    let zero = ComplexMatrix::zeros(2, 2);
    let onsite = z.scale(c(lambda));
    // Row-vector convention: [ I  X  λZ ; 0  0  X ; 0  0  I ]
    let rows: [[&ComplexMatrix; 3]; 3] =
        [[&id, &x, &onsite], [&zero, &zero, &x], [&zero, &zero, &id]];
    build_banded_mpo(num_sites, 3, &rows)
}

/// Heisenberg-in-field MPO, bond dimension 5:
/// H = −Σ_{i<N} ¼(XX+YY+ZZ)ᵢ,ᵢ₊₁ + λ Σᵢ Zᵢ.
pub fn heisenberg_mpo(num_sites: usize, lambda: f64) -> Result<MpoOperator> {
    if num_sites < 2 {
        return Err(Error::InvalidArgument("need at least two sites".into()));
    }
    let x = dense::pauli_x();
    let y = dense::pauli_y();
    let z = dense::pauli_z();
    let id = dense::pauli_id();
    let zero = ComplexMatrix::zeros(2, 2);
    let q = c(-0.25);
    let xq = x.scale(q);
    let yq = y.scale(q);
    let zq = z.scale(q);
    let onsite = z.scale(c(lambda));
    let rows: [[&ComplexMatrix; 5]; 5] = [
        [&id, &xq, &yq, &zq, &onsite],
        [&zero, &zero, &zero, &zero, &x],
        [&zero, &zero, &zero, &zero, &y],
        [&zero, &zero, &zero, &zero, &z],
        [&zero, &zero, &zero, &zero, &id],
    ];
    build_banded_mpo(num_sites, 5, &rows)
}

/// Assemble a translation-invariant MPO from its w×w operator-valued matrix;
/// the first site takes the first row, the last site the last column.
fn build_banded_mpo<const W: usize>(
    num_sites: usize,
    w: usize,
    rows: &[[&ComplexMatrix; W]; W],
) -> Result<MpoOperator> {
    let d = 2usize;
    let mut tensors = Vec::with_capacity(num_sites);
    for j in 0..num_sites {
        let (wl, wr) = if j == 0 {
            (1, w)
        } else if j == num_sites - 1 {
            (w, 1)
        } else {
            (w, w)
        };
        let mut t = Tensor4::zeros(wl, d, d, wr);
        for wi in 0..wl {
            for v in 0..wr {
                let src = if j == 0 {
                    rows[0][v]
                } else if j == num_sites - 1 {
                    rows[wi][w - 1]
                } else {
                    rows[wi][v]
                };
                for so in 0..d {
                    for si in 0..d {
                        let val = src.get(so, si);
                        if val.re != 0.0 || val.im != 0.0 {
                            t.set(wi, so, si, v, val);
                        }
                    }
                }
            }
        }
        tensors.push(t);
    }
    MpoOperator::from_tensors(d, tensors)
}

/// MPO for H², compressed to bond ≤ chi_w with the given cutoff. Returns the
/// operator and the relative discarded weight of the compression.
pub fn mpo_square(h: &MpoOperator, chi_w: usize, cutoff: f64) -> Result<(MpoOperator, f64)> {
    let raw = h.mul(h)?;
    mpo_compress(&raw, chi_w, cutoff)
}

/// The microcanonical filter G = I − (H − E)²/r² as a compressed MPO.
pub fn microcanonical_filter(
    h: &MpoOperator,
    fs: &FilterSpec,
    chi_w: usize,
    cutoff: f64,
) -> Result<MpoOperator> {
    let n = h.num_sites();
    let id = MpoOperator::identity(n, h.phys_dim());
    let shifted = h.add(&id.scale(c(-fs.target_energy)))?;
    let (squared, _) = mpo_square(&shifted, chi_w.max(h.max_bond() * h.max_bond()), cutoff)?;
    let g = id.add(&squared.scale(c(-1.0 / (fs.half_width * fs.half_width))))?;
    let (compressed, _) = mpo_compress(&g, chi_w.max(2), cutoff)?;
    Ok(compressed)
}

/// Default half width: 1.05 × (Σ term norms + |E|), which keeps the filter
/// spectrum inside [0, 1].
pub fn default_half_width(model: &NnModel, num_sites: usize, target_energy: f64) -> f64 {
    1.05 * (model.norm_bound(num_sites) + target_energy.abs())
}

/// Default application count: the smallest even k whose surviving window
/// r/√(2k) is at most `window_scale · √N`.
///
/// The √N scaling keeps the filtered ensemble pinned: the window term in the
/// weight exponent, N(e − e₀)²/(2·window_scale²), grows with N exactly like
/// the entropy term, so the saddle-point energy density does not drift with
/// system size. An extensive window (∝ N) would leave an O(1) exponent that
/// the density of states overwhelms on long chains.
pub fn default_applications(half_width: f64, num_sites: usize, window_scale: f64) -> u32 {
    let window2 = window_scale * window_scale * num_sites as f64;
    let k = half_width * half_width / (2.0 * window2);
    let k = math::ceil(k).max(1.0) as u32;
    k + (k & 1)
}

/// Filter application diagnostics.
#[derive(Clone, Debug, Default)]
pub struct FilterDiagnostics {
    /// ln of the norm removed by each application.
    pub step_log_norms: Vec<f64>,
    /// Relative discarded weight of each application.
    pub step_discarded: Vec<f64>,
    pub total_discarded: f64,
}

/// ψ_out ∝ G^half_k |ψ⟩, renormalized after every application with the norm
/// accumulated in `log_norm_offset`. Per-step renormalization means the state
/// can never underflow, no matter how strongly the filter contracts.
pub fn apply_filter_power(
    g: &MpoOperator,
    psi: &MpsState,
    half_k: u32,
    chi_max: usize,
    cutoff: f64,
) -> Result<(MpsState, FilterDiagnostics)> {
    if half_k == 0 {
        return Err(Error::InvalidArgument(
            "need at least one application".into(),
        ));
    }
    let mut state = psi.clone();
    let mut diag = FilterDiagnostics::default();
    for _ in 0..half_k {
        let (next, stats): (MpsState, CompressionStats) =
            apply_mpo_zipup(g, &state, chi_max, cutoff)?;
        diag.step_log_norms.push(stats.log_norm);
        diag.step_discarded.push(stats.discarded_weight);
        diag.total_discarded += stats.discarded_weight;
        state = next;
    }
    Ok((state, diag))
}

/// One first-order imaginary-time Trotter sweep: exp(−τ h) gates on the odd
/// bonds (0-2, 2-3 …) then the even bonds, truncated to chi_max and
/// renormalized. `h_terms` holds one d²×d² Hermitian term per bond.
pub fn trotter_imaginary_step(
    h_terms: &[ComplexMatrix],
    psi: &MpsState,
    tau: f64,
    chi_max: usize,
    cutoff: f64,
) -> Result<(MpsState, CompressionStats)> {
    if tau < 0.0 {
        return Err(Error::InvalidArgument("τ must be non-negative".into()));
    }
    if chi_max == 0 {
        return Err(Error::InvalidArgument("chi_max must be at least 1".into()));
    }
    let n = psi.num_sites();
    if h_terms.len() != n - 1 {
        return Err(Error::ShapeMismatch("need one term per bond".into()));
    }
    let mut state = psi.clone();
    let mut discarded = 0.0;
    let gates: Result<Vec<ComplexMatrix>> = h_terms.iter().map(|h| gate_exp(h, -tau)).collect();
    let gates = gates?;
    for parity in [0usize, 1] {
        let mut bond = parity;
        while bond + 1 < n {
            discarded += apply_two_site_gate(&mut state, bond, &gates[bond], chi_max, cutoff)?;
            bond += 2;
        }
    }
    let before = state.log_norm_offset;
    renormalize(&mut state)?;
    let stats = CompressionStats {
        discarded_weight: discarded,
        log_norm: state.log_norm_offset - before,
        max_bond: state.max_bond(),
    };
    Ok((state, stats))
}

/// exp(s·h) for a Hermitian matrix, via eigendecomposition.
pub fn gate_exp(h: &ComplexMatrix, s: f64) -> Result<ComplexMatrix> {
    let (evals, evecs) = hermitian_eig(h)?;
    let dim = h.rows();
    let mut scaled = evecs.clone();
    for j in 0..dim {
        let w = math::exp(s * evals[j]);
        for i in 0..dim {
            let v = scaled.get(i, j);
            scaled.set(i, j, v * w);
        }
    }
    Ok(scaled.mul(&evecs.adjoint()))
}
