//! Dense complex linear algebra kernels.
//!
//! Everything is hand-rolled on `f64` so the crate stays `no_std`: Householder
//! QR (which also backs exact Haar-unitary sampling via the Ginibre + phase
//! correction construction), a Hermitian eigensolver (tridiagonalization plus
//! implicit-shift QL), truncated SVD through the Gram matrix of the smaller
//! side, and a power-iteration operator norm. All routines are deterministic
//! for fixed input, so experiment outputs are reproducible.

use alloc::{format, vec, vec::Vec};
use num_complex::Complex64 as C64;

use crate::math;
use crate::rng::{complex_gaussian, Stream};
use crate::{Error, Result};

/// Dense complex matrix in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    /// Create from row-major entries; rejects shape mismatch and non-finite
    /// values.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "expected {} entries for {rows}x{cols}, got {}",
                rows * cols,
                data.len()
            )));
        }
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidArgument(
                "matrix entries must be finite".into(),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_raw(rows, cols, vec![C64::new(0.0, 0.0); rows * cols])
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::from_raw(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_raw(
            self.rows,
            self.cols,
            self.data.iter().map(|z| z * s).collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_raw(
            self.rows,
            self.cols,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_raw(
            self.rows,
            self.cols,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    /// Matrix product `self * other` (ikj loop order, row-major friendly).
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must match");
        let (m, k, n) = (self.rows, self.cols, other.cols);
        let mut out = vec![C64::new(0.0, 0.0); m * n];
        for i in 0..m {
            let arow = &self.data[i * k..(i + 1) * k];
            let orow = &mut out[i * n..(i + 1) * n];
            for (l, &a) in arow.iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let brow = &other.data[l * n..(l + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Self::from_raw(m, n, out)
    }

    /// `self† * other`.
    pub fn dagger_mul(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        let (m, k, n) = (self.cols, self.rows, other.cols);
        let mut out = vec![C64::new(0.0, 0.0); m * n];
        for l in 0..k {
            let arow = &self.data[l * self.cols..(l + 1) * self.cols];
            let brow = &other.data[l * n..(l + 1) * n];
            for i in 0..m {
                let a = arow[i].conj();
                let orow = &mut out[i * n..(i + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Self::from_raw(m, n, out)
    }

    pub fn matvec(&self, v: &[C64], out: &mut [C64]) {
        assert_eq!(v.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            let row = self.row(i);
            let mut acc = C64::new(0.0, 0.0);
            for (&a, &x) in row.iter().zip(v) {
                acc += a * x;
            }
            *o = acc;
        }
    }

    pub fn trace(&self) -> C64 {
        debug_assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.data.iter().map(|z| z.norm_sqr()).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max entrywise deviation of `self† self` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let g = self.dagger_mul(self);
        let mut worst = 0.0;
        for i in 0..g.rows {
            for j in 0..g.cols {
                let target = if i == j {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                };
                worst = f64::max(worst, (g.get(i, j) - target).norm());
            }
        }
        worst
    }
}

fn phase_of(z: C64) -> C64 {
    let n = z.norm();
    if n > 0.0 {
        z / n
    } else {
        C64::new(1.0, 0.0)
    }
}

/// Thin Householder QR: `a = q * r` with `q` of shape rows×k, `r` k×cols,
/// k = min(rows, cols).
pub fn householder_qr(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let (m, n) = (a.rows, a.cols);
    let k = m.min(n);
    let mut r = a.clone();
    // Reflectors (start row, normalized v) in application order.
    let mut reflectors: Vec<(usize, Vec<C64>)> = Vec::with_capacity(k);
    for col in 0..k {
        let mut xnorm2 = 0.0;
        for i in col..m {
            xnorm2 += r.get(i, col).norm_sqr();
        }
        let xnorm = math::sqrt(xnorm2);
        if xnorm == 0.0 {
            continue;
        }
        let x0 = r.get(col, col);
        let alpha = -phase_of(x0) * xnorm;
        let mut v: Vec<C64> = (col..m).map(|i| r.get(i, col)).collect();
        v[0] -= alpha;
        let vnorm = math::sqrt(v.iter().map(|z| z.norm_sqr()).sum());
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // r[col.., col..] -= 2 v (v† r)
        for j in col..n {
            let mut c = C64::new(0.0, 0.0);
            for (idx, vi) in v.iter().enumerate() {
                c += vi.conj() * r.get(col + idx, j);
            }
            let c2 = c * 2.0;
            for (idx, vi) in v.iter().enumerate() {
                let cur = r.get(col + idx, j);
                r.set(col + idx, j, cur - c2 * vi);
            }
        }
        reflectors.push((col, v));
    }
    // Zero out the strictly-lower part left behind by rounding.
    let mut rmat = ComplexMatrix::zeros(k, n);
    for i in 0..k {
        for j in i..n {
            rmat.set(i, j, r.get(i, j));
        }
    }
    // Q = H_0 H_1 ... applied to the thin identity.
    let mut q = ComplexMatrix::zeros(m, k);
    for i in 0..k {
        q.set(i, i, C64::new(1.0, 0.0));
    }
    for (start, v) in reflectors.iter().rev() {
        for j in 0..k {
            let mut c = C64::new(0.0, 0.0);
            for (idx, vi) in v.iter().enumerate() {
                c += vi.conj() * q.get(start + idx, j);
            }
            let c2 = c * 2.0;
            for (idx, vi) in v.iter().enumerate() {
                let cur = q.get(start + idx, j);
                q.set(start + idx, j, cur - c2 * vi);
            }
        }
    }
    (q, rmat)
}

/// QR with the diagonal of `r` made real and non-negative, so the
/// factorization is unique for full-rank input. Used for deterministic gauge
/// fixing in canonicalization.
pub fn qr_positive(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let (mut q, mut r) = householder_qr(a);
    let k = r.rows;
    for i in 0..k {
        let ph = phase_of(r.get(i, i));
        let phc = ph.conj();
        for row in 0..q.rows {
            let v = q.get(row, i);
            q.set(row, i, v * ph);
        }
        for j in i..r.cols {
            let v = r.get(i, j);
            r.set(i, j, v * phc);
        }
    }
    (q, r)
}

/// Haar-distributed random unitary.
///
/// Ginibre matrix → QR → multiply Q by the phases of diag(R). The phase
/// correction is what makes the distribution exactly Haar rather than merely
/// unitary; the ensemble moment checks downstream are sensitive to this.
pub fn haar_unitary(dim: usize, rng: &mut Stream) -> Result<ComplexMatrix> {
    if dim == 0 {
        return Err(Error::InvalidArgument("haar_unitary needs dim >= 1".into()));
    }
    let mut g = ComplexMatrix::zeros(dim, dim);
    for z in g.data.iter_mut() {
        *z = complex_gaussian(rng);
    }
    let (mut q, r) = householder_qr(&g);
    for j in 0..dim {
        let ph = phase_of(r.get(j, j));
        for i in 0..dim {
            let v = q.get(i, j);
            q.set(i, j, v * ph);
        }
    }
    Ok(q)
}

/// Eigendecomposition of a Hermitian matrix: `a = V diag(λ) V†` with λ
/// ascending and V unitary.
///
/// Householder tridiagonalization, a diagonal phase similarity to make the
/// tridiagonal real, then implicit-shift QL with eigenvector accumulation.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if a.rows != a.cols {
        return Err(Error::ShapeMismatch(format!(
            "hermitian_eig needs a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    let p = a.rows;
    // Work on the symmetrized copy; inputs are Hermitian by construction and
    // this absorbs rounding from upstream contractions.
    let mut w = ComplexMatrix::from_fn(p, p, |i, j| (a.get(i, j) + a.get(j, i).conj()) * 0.5);
    let mut q = ComplexMatrix::identity(p);

    // Tridiagonalize.
    for k in 0..p.saturating_sub(2) {
        let mut xnorm2 = 0.0;
        for i in (k + 1)..p {
            xnorm2 += w.get(i, k).norm_sqr();
        }
        let offdiag2 = xnorm2 - w.get(k + 1, k).norm_sqr();
        if offdiag2 <= 0.0 || xnorm2 == 0.0 {
            continue;
        }
        let x0 = w.get(k + 1, k);
        let alpha = -phase_of(x0) * math::sqrt(xnorm2);
        let len = p - k - 1;
        let mut v: Vec<C64> = (0..len).map(|i| w.get(k + 1 + i, k)).collect();
        v[0] -= alpha;
        let vnorm = math::sqrt(v.iter().map(|z| z.norm_sqr()).sum());
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // Rank-2 update of the trailing block B = w[k+1.., k+1..]:
        // B ← B − 2(v w† + w v†) with w = Bv − (v†Bv) v.
        let mut pvec = vec![C64::new(0.0, 0.0); len];
        for i in 0..len {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..len {
                acc += w.get(k + 1 + i, k + 1 + j) * v[j];
            }
            pvec[i] = acc;
        }
        let gamma: f64 = v
            .iter()
            .zip(&pvec)
            .map(|(vi, pi)| (vi.conj() * pi).re)
            .sum();
        let wvec: Vec<C64> = pvec
            .iter()
            .zip(&v)
            .map(|(pi, vi)| pi - vi * gamma)
            .collect();
        for i in 0..len {
            for j in 0..len {
                let delta = (v[i] * wvec[j].conj() + wvec[i] * v[j].conj()) * 2.0;
                let cur = w.get(k + 1 + i, k + 1 + j);
                w.set(k + 1 + i, k + 1 + j, cur - delta);
            }
        }
        // Column k and its mirror row collapse onto the subdiagonal.
        w.set(k + 1, k, alpha);
        w.set(k, k + 1, alpha.conj());
        for i in (k + 2)..p {
            w.set(i, k, C64::new(0.0, 0.0));
            w.set(k, i, C64::new(0.0, 0.0));
        }
        // Accumulate the similarity into Q: Q ← Q (I − 2 ṽṽ†).
        for row in 0..p {
            let mut c = C64::new(0.0, 0.0);
            for (idx, vi) in v.iter().enumerate() {
                c += q.get(row, k + 1 + idx) * vi;
            }
            let c2 = c * 2.0;
            for (idx, vi) in v.iter().enumerate() {
                let cur = q.get(row, k + 1 + idx);
                q.set(row, k + 1 + idx, cur - c2 * vi.conj());
            }
        }
    }

    // Phase similarity making the subdiagonal real non-negative.
    let mut d: Vec<f64> = (0..p).map(|i| w.get(i, i).re).collect();
    let mut t = vec![0.0f64; p];
    let mut phi = C64::new(1.0, 0.0);
    for i in 0..p.saturating_sub(1) {
        let e = w.get(i + 1, i);
        let mag = e.norm();
        t[i] = mag;
        let phi_next = if mag > 0.0 { phi * (e / mag) } else { phi };
        // Scale column i+1 of Q by its phase.
        for row in 0..p {
            let v = q.get(row, i + 1);
            q.set(row, i + 1, v * phi_next);
        }
        phi = phi_next;
    }

    ql_implicit(&mut d, &mut t, &mut q)?;

    // Sort ascending, permuting eigenvector columns.
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_unstable_by(|&i, &j| d[i].total_cmp(&d[j]));
    let sorted: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vecs = ComplexMatrix::zeros(p, p);
    for (newcol, &oldcol) in order.iter().enumerate() {
        for row in 0..p {
            vecs.set(row, newcol, q.get(row, oldcol));
        }
    }
    Ok((sorted, vecs))
}

/// Implicit-shift QL on a real symmetric tridiagonal (d, t) with rotation
/// accumulation into the complex column matrix `q`.
fn ql_implicit(d: &mut [f64], t: &mut [f64], q: &mut ComplexMatrix) -> Result<()> {
    let p = d.len();
    let eps = f64::EPSILON;
    for l in 0..p {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < p {
                let dd = math::abs(d[m]) + math::abs(d[m + 1]);
                if math::abs(t[m]) <= eps * dd + 1e-300 {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Numerical("tridiagonal QL failed to converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * t[l]);
            let mut r = math::hypot(g, 1.0);
            g = d[m] - d[l] + t[l] / (g + math::copysign(r, g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut pp = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * t[i];
                let b = c * t[i];
                r = math::hypot(f, g);
                t[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= pp;
                    t[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - pp;
                r = (d[i] - g) * s + 2.0 * c * b;
                pp = s * r;
                d[i + 1] = g + pp;
                g = c * r - b;
                // Rotate eigenvector columns i, i+1.
                for row in 0..q.rows() {
                    let qi1 = q.get(row, i + 1);
                    let qi = q.get(row, i);
                    q.set(row, i + 1, qi * s + qi1 * c);
                    q.set(row, i, qi * c - qi1 * s);
                }
            }
            if underflow {
                continue;
            }
            d[l] -= pp;
            t[l] = g;
            t[m] = 0.0;
        }
    }
    Ok(())
}

/// Truncated singular value decomposition.
#[derive(Clone, Debug)]
pub struct SvdResult {
    /// Left singular vectors, one column per kept value.
    pub left: ComplexMatrix,
    /// Kept singular values, non-increasing.
    pub singular_values: Vec<f64>,
    /// Conjugated right singular vectors, one row per kept value (the V† of
    /// `m = U Σ V†`).
    pub right_conj: ComplexMatrix,
    /// Sum of the squared singular values that were dropped; equals the
    /// squared Frobenius reconstruction error.
    pub discarded_weight: f64,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `U Σ V†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let k = self.rank();
        let mut scaled = self.right_conj.clone();
        for i in 0..k {
            let s = self.singular_values[i];
            for j in 0..scaled.cols() {
                let v = scaled.get(i, j);
                scaled.set(i, j, v * s);
            }
        }
        self.left.mul(&scaled)
    }
}

/// Keep at most `max_rank` singular values, also dropping any whose squared
/// value falls below `cutoff` × (total squared weight). At least one value is
/// always kept.
pub fn truncated_svd(m: &ComplexMatrix, max_rank: usize, cutoff: f64) -> Result<SvdResult> {
    if max_rank == 0 {
        return Err(Error::InvalidArgument("max_rank must be at least 1".into()));
    }
    if cutoff < 0.0 {
        return Err(Error::InvalidArgument("cutoff must be non-negative".into()));
    }
    let (rows, cols) = (m.rows, m.cols);
    let small_is_rows = rows <= cols;

    let gram = if small_is_rows {
        // G = m m†
        let mut g = ComplexMatrix::zeros(rows, rows);
        for i in 0..rows {
            for j in 0..rows {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..cols {
                    acc += m.get(i, k) * m.get(j, k).conj();
                }
                g.set(i, j, acc);
            }
        }
        g
    } else {
        m.dagger_mul(m)
    };

    let (lambda, vecs) = hermitian_eig(&gram)?;
    let p = lambda.len();
    let total: f64 = lambda.iter().map(|&l| f64::max(l, 0.0)).sum();
    let threshold = cutoff * total;

    // Eigenvalues ascend; walk from the top.
    let mut kept = 0usize;
    for i in 0..p.min(max_rank) {
        let l = f64::max(lambda[p - 1 - i], 0.0);
        if l < threshold && kept >= 1 {
            break;
        }
        kept += 1;
    }
    let kept = kept.max(1);
    let sigma: Vec<f64> = (0..kept)
        .map(|i| math::sqrt(f64::max(lambda[p - 1 - i], 0.0)))
        .collect();
    let kept_weight: f64 = sigma.iter().map(|s| s * s).sum();
    let discarded = f64::max(total - kept_weight, 0.0);

    // Columns of `vecs`, top eigenvalues first.
    let eig_side = ComplexMatrix::from_fn(p, kept, |i, j| vecs.get(i, p - 1 - j));

    let (left, right_conj) = if small_is_rows {
        // eig side is U; rows of V† are u_i† m / σ_i.
        let mut right = eig_side.dagger_mul(m);
        scale_rows_by_inv_sigma(&mut right, &sigma);
        orthonormalize_rows(&mut right);
        (eig_side, right)
    } else {
        // eig side is V; U = m V Σ⁻¹.
        let right = eig_side.adjoint();
        let mut left = m.mul(&eig_side);
        scale_cols_by_inv_sigma(&mut left, &sigma);
        orthonormalize_cols(&mut left);
        (left, right)
    };

    Ok(SvdResult {
        left,
        singular_values: sigma,
        right_conj,
        discarded_weight: discarded,
    })
}

/// Truncation primitive for compression sweeps: returns the left-orthonormal
/// basis `u` (rows×k, columns exactly orthonormal from the eigensolver), the
/// carry `u† m` (k×cols, which equals Σ V†), the absolute discarded weight,
/// and the total squared weight. Requires rows ≤ cols or not; both handled.
pub(crate) fn split_left_trunc(
    m: &ComplexMatrix,
    max_rank: usize,
    cutoff: f64,
) -> Result<(ComplexMatrix, ComplexMatrix, f64, f64)> {
    debug_assert!(max_rank >= 1);
    let rows = m.rows;
    let mut g = ComplexMatrix::zeros(rows, rows);
    for i in 0..rows {
        for j in 0..=i {
            let mut acc = C64::new(0.0, 0.0);
            let ri = m.row(i);
            let rj = m.row(j);
            for (a, b) in ri.iter().zip(rj) {
                acc += a * b.conj();
            }
            g.set(i, j, acc);
            g.set(j, i, acc.conj());
        }
    }
    let (lambda, vecs) = hermitian_eig(&g)?;
    let p = lambda.len();
    let total: f64 = lambda.iter().map(|&l| f64::max(l, 0.0)).sum();
    if total == 0.0 {
        return Err(Error::Numerical("cannot split a zero matrix".into()));
    }
    let threshold = f64::max(cutoff * total, 1e-28 * total);
    let mut kept = 0usize;
    for i in 0..p.min(max_rank) {
        let l = f64::max(lambda[p - 1 - i], 0.0);
        if l < threshold && kept >= 1 {
            break;
        }
        kept += 1;
    }
    let kept = kept.max(1);
    let kept_weight: f64 = (0..kept).map(|i| f64::max(lambda[p - 1 - i], 0.0)).sum();
    let discarded = f64::max(total - kept_weight, 0.0);
    let u = ComplexMatrix::from_fn(p, kept, |i, j| vecs.get(i, p - 1 - j));
    let carry = u.dagger_mul(m);
    Ok((u, carry, discarded, total))
}

/// Mirror of [`split_left_trunc`] keeping the right factor orthonormal:
/// returns the carry `m v` (rows×k, = U Σ), the row-orthonormal `v†` (k×cols),
/// the absolute discarded weight, and the total squared weight.
pub(crate) fn split_right_trunc(
    m: &ComplexMatrix,
    max_rank: usize,
    cutoff: f64,
) -> Result<(ComplexMatrix, ComplexMatrix, f64, f64)> {
    debug_assert!(max_rank >= 1);
    let g = m.dagger_mul(m);
    let (lambda, vecs) = hermitian_eig(&g)?;
    let p = lambda.len();
    let total: f64 = lambda.iter().map(|&l| f64::max(l, 0.0)).sum();
    if total == 0.0 {
        return Err(Error::Numerical("cannot split a zero matrix".into()));
    }
    let threshold = f64::max(cutoff * total, 1e-28 * total);
    let mut kept = 0usize;
    for i in 0..p.min(max_rank) {
        let l = f64::max(lambda[p - 1 - i], 0.0);
        if l < threshold && kept >= 1 {
            break;
        }
        kept += 1;
    }
    let kept = kept.max(1);
    let kept_weight: f64 = (0..kept).map(|i| f64::max(lambda[p - 1 - i], 0.0)).sum();
    let discarded = f64::max(total - kept_weight, 0.0);
    let v = ComplexMatrix::from_fn(p, kept, |i, j| vecs.get(i, p - 1 - j));
    let carry = m.mul(&v);
    Ok((carry, v.adjoint(), discarded, total))
}

fn scale_rows_by_inv_sigma(m: &mut ComplexMatrix, sigma: &[f64]) {
    let floor = sigma.first().copied().unwrap_or(0.0) * 1e-14;
    for (i, &s) in sigma.iter().enumerate() {
        let inv = if s > floor && s > 0.0 { 1.0 / s } else { 0.0 };
        for j in 0..m.cols {
            let v = m.get(i, j);
            m.set(i, j, v * inv);
        }
    }
}

fn scale_cols_by_inv_sigma(m: &mut ComplexMatrix, sigma: &[f64]) {
    let floor = sigma.first().copied().unwrap_or(0.0) * 1e-14;
    for (j, &s) in sigma.iter().enumerate() {
        let inv = if s > floor && s > 0.0 { 1.0 / s } else { 0.0 };
        for i in 0..m.rows {
            let v = m.get(i, j);
            m.set(i, j, v * inv);
        }
    }
}

/// Modified Gram-Schmidt pass over rows; rows that vanish are replaced by
/// deterministic fallback basis vectors so the result is always orthonormal.
fn orthonormalize_rows(m: &mut ComplexMatrix) {
    let (k, n) = (m.rows, m.cols);
    for i in 0..k {
        for prev in 0..i {
            let mut proj = C64::new(0.0, 0.0);
            for j in 0..n {
                proj += m.get(prev, j).conj() * m.get(i, j);
            }
            for j in 0..n {
                let v = m.get(i, j) - proj * m.get(prev, j);
                m.set(i, j, v);
            }
        }
        let mut norm2 = 0.0;
        for j in 0..n {
            norm2 += m.get(i, j).norm_sqr();
        }
        if norm2 > 1e-24 {
            let inv = 1.0 / math::sqrt(norm2);
            for j in 0..n {
                let v = m.get(i, j);
                m.set(i, j, v * inv);
            }
        } else {
            // Deterministic fallback direction.
            'basis: for e in 0..n {
                for j in 0..n {
                    m.set(i, j, C64::new(if j == e { 1.0 } else { 0.0 }, 0.0));
                }
                for prev in 0..i {
                    let mut proj = C64::new(0.0, 0.0);
                    for j in 0..n {
                        proj += m.get(prev, j).conj() * m.get(i, j);
                    }
                    for j in 0..n {
                        let v = m.get(i, j) - proj * m.get(prev, j);
                        m.set(i, j, v);
                    }
                }
                let mut nn = 0.0;
                for j in 0..n {
                    nn += m.get(i, j).norm_sqr();
                }
                if nn > 0.5 {
                    let inv = 1.0 / math::sqrt(nn);
                    for j in 0..n {
                        let v = m.get(i, j);
                        m.set(i, j, v * inv);
                    }
                    break 'basis;
                }
            }
        }
    }
}

fn orthonormalize_cols(m: &mut ComplexMatrix) {
    let mut t = m.adjoint();
    orthonormalize_rows(&mut t);
    *m = t.adjoint();
}

/// Operator norm (largest |eigenvalue|) of a Hermitian operator given only its
/// action, via power iteration on the squared operator. Deterministic.
pub fn operator_norm_hermitian(
    dim: usize,
    mut apply: impl FnMut(&[C64], &mut [C64]),
    max_iter: usize,
    rel_tol: f64,
) -> f64 {
    if dim == 0 {
        return 0.0;
    }
    let mut v: Vec<C64> = (0..dim)
        .map(|i| {
            let x = i as f64;
            C64::new(math::cos(0.7 * x + 0.3), math::sin(1.3 * x + 1.1))
        })
        .collect();
    normalize(&mut v);
    let mut w = vec![C64::new(0.0, 0.0); dim];
    let mut u = vec![C64::new(0.0, 0.0); dim];
    let mut est = 0.0f64;
    for _ in 0..max_iter {
        apply(&v, &mut w);
        let new_est = math::sqrt(w.iter().map(|z| z.norm_sqr()).sum());
        if new_est == 0.0 {
            return 0.0;
        }
        apply(&w, &mut u);
        let unorm = math::sqrt(u.iter().map(|z| z.norm_sqr()).sum());
        if unorm == 0.0 {
            return new_est;
        }
        for (vi, ui) in v.iter_mut().zip(&u) {
            *vi = ui / unorm;
        }
        if math::abs(new_est - est) <= rel_tol * new_est {
            return new_est;
        }
        est = new_est;
    }
    est
}

fn normalize(v: &mut [C64]) {
    let n = math::sqrt(v.iter().map(|z| z.norm_sqr()).sum());
    if n > 0.0 {
        for z in v.iter_mut() {
            *z /= n;
        }
    }
}
