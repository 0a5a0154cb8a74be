//! Dense small-system ground truth.
//!
//! Operators here are built straight from Kronecker products of Pauli
//! matrices, independently of the MPO constructions, so the two routes check
//! each other. Everything is limited to desk-scale dimensions and is used by
//! oracles, moment formulas, and the verification suites.

use alloc::{format, vec, vec::Vec};
use num_complex::Complex64 as C64;

use crate::linalg::{hermitian_eig, operator_norm_hermitian, ComplexMatrix};
use crate::math;
use crate::{Error, Result};

/// A dense operator on a d^N-dimensional Hilbert space.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    pub matrix: ComplexMatrix,
}

impl DenseOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if matrix.rows() != matrix.cols() {
            return Err(Error::ShapeMismatch("dense operators are square".into()));
        }
        Ok(Self { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let adj = self.matrix.adjoint();
        self.matrix.sub(&adj).max_abs()
    }

    /// Largest singular value via power iteration (Hermitian inputs).
    pub fn operator_norm(&self) -> f64 {
        let m = &self.matrix;
        operator_norm_hermitian(self.dim(), |v, out| m.matvec(v, out), 10_000, 1e-12)
    }

    pub fn eig(&self) -> Result<(Vec<f64>, ComplexMatrix)> {
        hermitian_eig(&self.matrix)
    }
}

pub fn pauli_id() -> ComplexMatrix {
    ComplexMatrix::identity(2)
}

pub fn pauli_x() -> ComplexMatrix {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    ComplexMatrix::new(2, 2, vec![z, o, o, z]).unwrap()
}

pub fn pauli_y() -> ComplexMatrix {
    let z = C64::new(0.0, 0.0);
    ComplexMatrix::new(2, 2, vec![z, C64::new(0.0, -1.0), C64::new(0.0, 1.0), z]).unwrap()
}

pub fn pauli_z() -> ComplexMatrix {
    let z = C64::new(0.0, 0.0);
    ComplexMatrix::new(2, 2, vec![C64::new(1.0, 0.0), z, z, C64::new(-1.0, 0.0)]).unwrap()
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    ComplexMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a.get(i / br, j / bc) * b.get(i % br, j % bc)
    })
}

/// Σ-term embedding: `op` acting on `sites` (ascending, contiguous not
/// required) of an N-qubit chain.
pub fn embed(num_sites: usize, ops: &[(usize, &ComplexMatrix)]) -> ComplexMatrix {
    let mut out = ComplexMatrix::identity(1);
    for site in 0..num_sites {
        let local = ops
            .iter()
            .find(|(s, _)| *s == site)
            .map(|(_, m)| (*m).clone())
            .unwrap_or_else(pauli_id);
        out = kron(&out, &local);
    }
    out
}

/// Dense transverse-field Ising Hamiltonian Σ XᵢXᵢ₊₁ + λ Σ Zᵢ.
pub fn ising_dense(num_sites: usize, lambda: f64) -> DenseOperator {
    let dim = 1usize << num_sites;
    let mut h = ComplexMatrix::zeros(dim, dim);
    let x = pauli_x();
    let z = pauli_z();
    for i in 0..num_sites.saturating_sub(1) {
        h = h.add(&embed(num_sites, &[(i, &x), (i + 1, &x)]));
    }
    for i in 0..num_sites {
        h = h.add(&embed(num_sites, &[(i, &z)]).scale(C64::new(lambda, 0.0)));
    }
    DenseOperator { matrix: h }
}

/// Dense Heisenberg-in-field Hamiltonian
/// −Σ ¼(XᵢXᵢ₊₁ + YᵢYᵢ₊₁ + ZᵢZᵢ₊₁) + λ Σ Zᵢ.
pub fn heisenberg_dense(num_sites: usize, lambda: f64) -> DenseOperator {
    let dim = 1usize << num_sites;
    let mut h = ComplexMatrix::zeros(dim, dim);
    let x = pauli_x();
    let y = pauli_y();
    let z = pauli_z();
    let quarter = C64::new(-0.25, 0.0);
    for i in 0..num_sites.saturating_sub(1) {
        h = h.add(&embed(num_sites, &[(i, &x), (i + 1, &x)]).scale(quarter));
        h = h.add(&embed(num_sites, &[(i, &y), (i + 1, &y)]).scale(quarter));
        h = h.add(&embed(num_sites, &[(i, &z), (i + 1, &z)]).scale(quarter));
    }
    for i in 0..num_sites {
        h = h.add(&embed(num_sites, &[(i, &z)]).scale(C64::new(lambda, 0.0)));
    }
    DenseOperator { matrix: h }
}

/// Per-site magnetization (1/N) Σ Zᵢ.
pub fn magnetization_dense(num_sites: usize) -> DenseOperator {
    let dim = 1usize << num_sites;
    let mut m = ComplexMatrix::zeros(dim, dim);
    let z = pauli_z();
    for i in 0..num_sites {
        m = m.add(&embed(num_sites, &[(i, &z)]));
    }
    DenseOperator {
        matrix: m.scale(C64::new(1.0 / num_sites as f64, 0.0)),
    }
}

/// Closed-form Tr H² for the Ising chain: D·((N−1) + λ²N), from Pauli-string
/// orthogonality (cross terms are traceless).
pub fn ising_trace_h2(num_sites: usize, lambda: f64) -> f64 {
    let d = math::pow(2.0, num_sites as f64);
    d * ((num_sites as f64 - 1.0) + lambda * lambda * num_sites as f64)
}

/// Dense microcanonical reference: Tr(G^k B) / Tr(G^k) for the polynomial
/// filter G = I − (H−E)²/r², evaluated in the eigenbasis of H.
pub fn filtered_average(
    h: &DenseOperator,
    b: &DenseOperator,
    energy: f64,
    half_width: f64,
    applications: u32,
) -> Result<f64> {
    if h.dim() != b.dim() {
        return Err(Error::ShapeMismatch(
            "operators must share a dimension".into(),
        ));
    }
    let (evals, evecs) = h.eig()?;
    let dim = h.dim();
    // b in the eigenbasis: diagonal entries ⟨v_i|B|v_i⟩.
    let bv = b.matrix.mul(&evecs);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..dim {
        let g = 1.0 - (evals[i] - energy) * (evals[i] - energy) / (half_width * half_width);
        let weight = powi(g, applications);
        let mut diag = C64::new(0.0, 0.0);
        for r in 0..dim {
            diag += evecs.get(r, i).conj() * bv.get(r, i);
        }
        num += weight * diag.re;
        den += weight;
    }
    if den <= 0.0 {
        return Err(Error::Numerical("filter weights sum to zero".into()));
    }
    Ok(num / den)
}

/// exp(s·H) for Hermitian H via eigendecomposition.
pub fn herm_exp(h: &DenseOperator, s: f64) -> Result<DenseOperator> {
    let (evals, evecs) = h.eig()?;
    let dim = h.dim();
    // evecs · diag(exp(s λ)) · evecs†
    let mut scaled = evecs.clone();
    for j in 0..dim {
        let w = math::exp(s * evals[j]);
        for i in 0..dim {
            let v = scaled.get(i, j);
            scaled.set(i, j, v * w);
        }
    }
    Ok(DenseOperator {
        matrix: scaled.mul(&evecs.adjoint()),
    })
}

/// Apply a dense operator to an amplitude vector.
pub fn apply_dense(op: &DenseOperator, v: &[C64]) -> Result<Vec<C64>> {
    if v.len() != op.dim() {
        return Err(Error::ShapeMismatch(format!(
            "vector length {} does not match operator dimension {}",
            v.len(),
            op.dim()
        )));
    }
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    op.matrix.matvec(v, &mut out);
    Ok(out)
}

pub fn vec_inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vec_norm(a: &[C64]) -> f64 {
    math::sqrt(a.iter().map(|z| z.norm_sqr()).sum())
}

fn powi(base: f64, exp: u32) -> f64 {
    let mut acc = 1.0;
    let mut b = base;
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        b *= b;
        e >>= 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_algebra() {
        let x = pauli_x();
        let y = pauli_y();
        let z = pauli_z();
        // XY = iZ
        let xy = x.mul(&y);
        assert!(xy.sub(&z.scale(C64::new(0.0, 1.0))).max_abs() <= 1e-15);
        // X² = I
        assert!(x.mul(&x).sub(&pauli_id()).max_abs() <= 1e-15);
    }

    #[test]
    fn ising_two_site_lambda_zero_spectrum() {
        // H = X⊗X has eigenvalues {−1, −1, +1, +1}.
        let h = ising_dense(2, 0.0);
        let (evals, _) = h.eig().unwrap();
        let expect = [-1.0, -1.0, 1.0, 1.0];
        for (a, b) in evals.iter().zip(expect.iter()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn ising_trace_h2_closed_form_matches_dense() {
        for (n, lambda) in [(2usize, 1.0f64), (4, 1.5), (6, 0.7)] {
            let h = ising_dense(n, lambda);
            let h2 = h.matrix.mul(&h.matrix);
            let dense_trace = h2.trace().re;
            let closed = ising_trace_h2(n, lambda);
            assert!(
                (dense_trace - closed).abs() <= 1e-9 * closed.abs().max(1.0),
                "N={n} λ={lambda}: dense {dense_trace} vs closed {closed}"
            );
        }
        // The N=2, λ=1 value quoted from Pauli-string orthogonality.
        assert!((ising_trace_h2(2, 1.0) - 12.0).abs() <= 1e-12);
        // N=10, λ=1.5 → 1024·(9 + 2.25·10)
        assert!((ising_trace_h2(10, 1.5) - 32256.0).abs() <= 1e-9);
    }

    #[test]
    fn heisenberg_two_site_spectrum() {
        // −¼(XX+YY+ZZ): triplet at −¼, singlet at +¾.
        let h = heisenberg_dense(2, 0.0);
        let (evals, _) = h.eig().unwrap();
        assert!((evals[0] + 0.25).abs() <= 1e-12);
        assert!((evals[1] + 0.25).abs() <= 1e-12);
        assert!((evals[2] + 0.25).abs() <= 1e-12);
        assert!((evals[3] - 0.75).abs() <= 1e-12);
    }

    #[test]
    fn heisenberg_commutes_with_total_z_at_zero_field() {
        for n in [2usize, 4, 6] {
            let h = heisenberg_dense(n, 0.0);
            let mz = magnetization_dense(n);
            let c = h.matrix.mul(&mz.matrix).sub(&mz.matrix.mul(&h.matrix));
            assert!(c.max_abs() <= 1e-12, "N={n}: [H, ΣZ] = {}", c.max_abs());
        }
    }

    #[test]
    fn hamiltonians_are_hermitian() {
        for n in [2usize, 5] {
            assert!(ising_dense(n, 1.5).hermiticity_defect() <= 1e-12);
            assert!(heisenberg_dense(n, 0.3).hermiticity_defect() <= 1e-12);
        }
    }

    #[test]
    fn filtered_average_concentrates_on_target_energy() {
        // With many applications the filtered energy collapses onto the
        // eigenvalue closest to E, and the energy spread shrinks with k.
        let h = ising_dense(4, 1.1);
        let (evals, _) = h.eig().unwrap();
        let target = evals[3];
        let r = 2.0 * evals.iter().map(|e| (e - target).abs()).fold(0.0, f64::max);
        let got = filtered_average(&h, &h, target, r, 200_000).unwrap();
        assert!((got - target).abs() <= 1e-6, "got {got}, target {target}");
        // Energy distance to the target is non-increasing in k.
        let mut prev = f64::INFINITY;
        for k in [4u32, 16, 64, 256, 1024] {
            let e = filtered_average(&h, &h, target, r, k).unwrap();
            let dist = (e - target).abs();
            assert!(dist <= prev + 1e-9, "k={k}: {dist} > {prev}");
            prev = dist;
        }
    }

    #[test]
    fn herm_exp_matches_scalar_case() {
        let z = DenseOperator { matrix: pauli_z() };
        let e = herm_exp(&z, -0.5).unwrap();
        assert!((e.matrix.get(0, 0).re - math::exp(-0.5)).abs() <= 1e-12);
        assert!((e.matrix.get(1, 1).re - math::exp(0.5)).abs() <= 1e-12);
        assert!(e.matrix.get(0, 1).norm() <= 1e-14);
    }

    #[test]
    fn operator_norm_of_pauli_is_one() {
        let z = DenseOperator { matrix: pauli_z() };
        assert!((z.operator_norm() - 1.0).abs() <= 1e-10);
    }
}
