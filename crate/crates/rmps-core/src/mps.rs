//! Matrix product states and operators over an open chain.
//!
//! States are chains of rank-3 tensors `(left_bond, phys, right_bond)` with
//! boundary bonds of size 1; operators are rank-4 chains
//! `(left_bond, phys_out, phys_in, right_bond)`. States are kept unit-norm
//! with an additive `log_norm_offset` so repeated filter applications cannot
//! underflow, and the dense-basis convention is fixed once: site 1 is the most
//! significant digit of the computational-basis index.
//!
//! Two compression routes are provided. [`apply_mpo_compress`] contracts the
//! MPO exactly and then truncates through a canonical two-sweep pass, which
//! makes the reported discarded weight equal to the squared reconstruction
//! error. [`apply_mpo_zipup`] truncates while sweeping, which is much cheaper
//! for long chains and is the route the iterative filter uses; its discarded
//! weight is a per-step estimate rather than an exact identity.

use alloc::{format, vec, vec::Vec};
use num_complex::Complex64 as C64;

use crate::linalg::{qr_positive, split_left_trunc, split_right_trunc, ComplexMatrix};
use crate::math;
use crate::tol;
use crate::{Error, Result};

/// Rank-3 site tensor with shape `(left, phys, right)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    pub dl: usize,
    pub d: usize,
    pub dr: usize,
    pub data: Vec<C64>,
}

impl Tensor3 {
    pub fn zeros(dl: usize, d: usize, dr: usize) -> Self {
        Self {
            dl,
            d,
            dr,
            data: vec![C64::new(0.0, 0.0); dl * d * dr],
        }
    }

    #[inline]
    pub fn at(&self, a: usize, s: usize, b: usize) -> C64 {
        self.data[(a * self.d + s) * self.dr + b]
    }

    #[inline]
    pub fn set(&mut self, a: usize, s: usize, b: usize, v: C64) {
        self.data[(a * self.d + s) * self.dr + b] = v;
    }

    fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Rank-4 operator tensor with shape `(left, phys_out, phys_in, right)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4 {
    pub wl: usize,
    pub d_out: usize,
    pub d_in: usize,
    pub wr: usize,
    pub data: Vec<C64>,
}

impl Tensor4 {
    pub fn zeros(wl: usize, d_out: usize, d_in: usize, wr: usize) -> Self {
        Self {
            wl,
            d_out,
            d_in,
            wr,
            data: vec![C64::new(0.0, 0.0); wl * d_out * d_in * wr],
        }
    }

    #[inline]
    pub fn at(&self, w: usize, so: usize, si: usize, v: usize) -> C64 {
        self.data[((w * self.d_out + so) * self.d_in + si) * self.wr + v]
    }

    #[inline]
    pub fn set(&mut self, w: usize, so: usize, si: usize, v: usize, val: C64) {
        self.data[((w * self.d_out + so) * self.d_in + si) * self.wr + v] = val;
    }

    fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CanonicalForm {
    None,
    Left,
    Right,
}

/// Open-boundary matrix product state.
#[derive(Clone, Debug)]
pub struct MpsState {
    phys_dim: usize,
    tensors: Vec<Tensor3>,
    pub canonical_form: CanonicalForm,
    /// Accumulated log of factored-out norms; the represented vector is
    /// `exp(log_norm_offset)` times the unit-norm tensor contraction.
    pub log_norm_offset: f64,
}

impl MpsState {
    pub fn from_tensors(
        phys_dim: usize,
        tensors: Vec<Tensor3>,
        canonical_form: CanonicalForm,
        log_norm_offset: f64,
    ) -> Result<Self> {
        if phys_dim == 0 || tensors.is_empty() {
            return Err(Error::InvalidArgument(
                "state needs at least one site and a positive physical dimension".into(),
            ));
        }
        if tensors[0].dl != 1 || tensors[tensors.len() - 1].dr != 1 {
            return Err(Error::ShapeMismatch(
                "boundary bonds must have size 1".into(),
            ));
        }
        for (j, t) in tensors.iter().enumerate() {
            if t.d != phys_dim {
                return Err(Error::ShapeMismatch(format!(
                    "site {j} has physical dimension {} instead of {phys_dim}",
                    t.d
                )));
            }
            if !t.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "site {j} has non-finite entries"
                )));
            }
            if j + 1 < tensors.len() && t.dr != tensors[j + 1].dl {
                return Err(Error::ShapeMismatch(format!(
                    "bond mismatch between sites {j} and {}: {} vs {}",
                    j + 1,
                    t.dr,
                    tensors[j + 1].dl
                )));
            }
        }
        Ok(Self {
            phys_dim,
            tensors,
            canonical_form,
            log_norm_offset,
        })
    }

    /// Computational-basis product state |σ₁ σ₂ … σ_N⟩.
    pub fn basis_state(num_sites: usize, phys_dim: usize, config: &[usize]) -> Result<Self> {
        if config.len() != num_sites {
            return Err(Error::ShapeMismatch(
                "configuration length must equal N".into(),
            ));
        }
        let mut tensors = Vec::with_capacity(num_sites);
        for &s in config {
            if s >= phys_dim {
                return Err(Error::InvalidArgument("basis label out of range".into()));
            }
            let mut t = Tensor3::zeros(1, phys_dim, 1);
            t.set(0, s, 0, C64::new(1.0, 0.0));
            tensors.push(t);
        }
        Self::from_tensors(phys_dim, tensors, CanonicalForm::Left, 0.0)
    }

    pub fn num_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn phys_dim(&self) -> usize {
        self.phys_dim
    }

    pub fn tensors(&self) -> &[Tensor3] {
        &self.tensors
    }

    pub fn tensor(&self, j: usize) -> &Tensor3 {
        &self.tensors[j]
    }

    /// Bond profile including the two boundary bonds of size 1.
    pub fn bond_dims(&self) -> Vec<usize> {
        let mut v = Vec::with_capacity(self.tensors.len() + 1);
        v.push(1);
        for t in &self.tensors {
            v.push(t.dr);
        }
        v
    }

    pub fn max_bond(&self) -> usize {
        self.tensors
            .iter()
            .map(|t| t.dr.max(t.dl))
            .max()
            .unwrap_or(1)
    }

    /// Max deviation from Σ_σ A†A = I across all sites.
    pub fn left_canonical_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for t in &self.tensors {
            let m = ComplexMatrix::from_raw(t.dl * t.d, t.dr, t.data.clone());
            worst = worst.max(m.unitarity_defect());
        }
        worst
    }
}

/// Matrix product operator.
#[derive(Clone, Debug)]
pub struct MpoOperator {
    phys_dim: usize,
    tensors: Vec<Tensor4>,
}

impl MpoOperator {
    pub fn from_tensors(phys_dim: usize, tensors: Vec<Tensor4>) -> Result<Self> {
        if phys_dim == 0 || tensors.is_empty() {
            return Err(Error::InvalidArgument(
                "operator needs at least one site and a positive physical dimension".into(),
            ));
        }
        if tensors[0].wl != 1 || tensors[tensors.len() - 1].wr != 1 {
            return Err(Error::ShapeMismatch(
                "boundary bonds must have size 1".into(),
            ));
        }
        for (j, t) in tensors.iter().enumerate() {
            if t.d_out != phys_dim || t.d_in != phys_dim {
                return Err(Error::ShapeMismatch(format!(
                    "site {j} physical dimensions must equal {phys_dim}"
                )));
            }
            if !t.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "site {j} has non-finite entries"
                )));
            }
            if j + 1 < tensors.len() && t.wr != tensors[j + 1].wl {
                return Err(Error::ShapeMismatch(format!(
                    "bond mismatch between sites {j} and {}",
                    j + 1
                )));
            }
        }
        Ok(Self { phys_dim, tensors })
    }

    pub fn identity(num_sites: usize, phys_dim: usize) -> Self {
        let mut tensors = Vec::with_capacity(num_sites);
        for _ in 0..num_sites {
            let mut t = Tensor4::zeros(1, phys_dim, phys_dim, 1);
            for s in 0..phys_dim {
                t.set(0, s, s, 0, C64::new(1.0, 0.0));
            }
            tensors.push(t);
        }
        Self { phys_dim, tensors }
    }

    /// Bond-1 MPO acting with `op` on one site and the identity elsewhere.
    pub fn single_site(num_sites: usize, site: usize, op: &ComplexMatrix) -> Result<Self> {
        let d = op.rows();
        if op.cols() != d {
            return Err(Error::ShapeMismatch("site operator must be square".into()));
        }
        if site >= num_sites {
            return Err(Error::InvalidArgument("site index out of range".into()));
        }
        let mut out = Self::identity(num_sites, d);
        let mut t = Tensor4::zeros(1, d, d, 1);
        for so in 0..d {
            for si in 0..d {
                t.set(0, so, si, 0, op.get(so, si));
            }
        }
        out.tensors[site] = t;
        Ok(out)
    }

    /// Bond-2 MPO for Σ_j op_j, one operator per site (coefficients folded in).
    pub fn sum_of_sites(ops: &[ComplexMatrix]) -> Result<Self> {
        let n = ops.len();
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one site".into()));
        }
        let d = ops[0].rows();
        if n == 1 {
            return Self::single_site(1, 0, &ops[0]);
        }
        let mut tensors = Vec::with_capacity(n);
        for (j, op) in ops.iter().enumerate() {
            if op.rows() != d || op.cols() != d {
                return Err(Error::ShapeMismatch(
                    "site operators must share one dimension".into(),
                ));
            }
            let (wl, wr) = match j {
                0 => (1, 2),
                x if x == n - 1 => (2, 1),
                _ => (2, 2),
            };
            let mut t = Tensor4::zeros(wl, d, d, wr);
            for so in 0..d {
                for si in 0..d {
                    let idv = if so == si {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    let ov = op.get(so, si);
                    if j == 0 {
                        t.set(0, so, si, 0, idv);
                        t.set(0, so, si, 1, ov);
                    } else if j == n - 1 {
                        t.set(0, so, si, 0, ov);
                        t.set(1, so, si, 0, idv);
                    } else {
                        t.set(0, so, si, 0, idv);
                        t.set(0, so, si, 1, ov);
                        t.set(1, so, si, 1, idv);
                    }
                }
            }
            tensors.push(t);
        }
        Self::from_tensors(d, tensors)
    }

    pub fn num_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn phys_dim(&self) -> usize {
        self.phys_dim
    }

    pub fn tensors(&self) -> &[Tensor4] {
        &self.tensors
    }

    pub fn tensor(&self, j: usize) -> &Tensor4 {
        &self.tensors[j]
    }

    pub fn max_bond(&self) -> usize {
        self.tensors
            .iter()
            .map(|t| t.wl.max(t.wr))
            .max()
            .unwrap_or(1)
    }

    /// `self + other`, by direct sum of the virtual spaces.
    pub fn add(&self, other: &Self) -> Result<Self> {
        let n = self.num_sites();
        if other.num_sites() != n || other.phys_dim != self.phys_dim {
            return Err(Error::ShapeMismatch(
                "operator sum needs matching shapes".into(),
            ));
        }
        let d = self.phys_dim;
        if n == 1 {
            let (a, b) = (&self.tensors[0], &other.tensors[0]);
            let mut t = Tensor4::zeros(1, d, d, 1);
            for so in 0..d {
                for si in 0..d {
                    t.set(0, so, si, 0, a.at(0, so, si, 0) + b.at(0, so, si, 0));
                }
            }
            return Self::from_tensors(d, vec![t]);
        }
        let mut tensors = Vec::with_capacity(n);
        for j in 0..n {
            let a = &self.tensors[j];
            let b = &other.tensors[j];
            let (wl, wr) = if j == 0 {
                (1, a.wr + b.wr)
            } else if j == n - 1 {
                (a.wl + b.wl, 1)
            } else {
                (a.wl + b.wl, a.wr + b.wr)
            };
            let mut t = Tensor4::zeros(wl, d, d, wr);
            for so in 0..d {
                for si in 0..d {
                    for w in 0..a.wl {
                        for v in 0..a.wr {
                            t.set(w, so, si, v, a.at(w, so, si, v));
                        }
                    }
                    for w in 0..b.wl {
                        for v in 0..b.wr {
                            let tw = if j == 0 { 0 } else { a.wl + w };
                            let tv = if j == n - 1 { 0 } else { a.wr + v };
                            let cur = t.at(tw, so, si, tv);
                            t.set(tw, so, si, tv, cur + b.at(w, so, si, v));
                        }
                    }
                }
            }
            tensors.push(t);
        }
        Self::from_tensors(d, tensors)
    }

    /// `s * self`.
    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        for z in out.tensors[0].data.iter_mut() {
            *z *= s;
        }
        out
    }

    /// Operator product `self ∘ other` (apply `other` first).
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let n = self.num_sites();
        if other.num_sites() != n || other.phys_dim != self.phys_dim {
            return Err(Error::ShapeMismatch(
                "operator product needs matching shapes".into(),
            ));
        }
        let d = self.phys_dim;
        let mut tensors = Vec::with_capacity(n);
        for j in 0..n {
            let a = &self.tensors[j];
            let b = &other.tensors[j];
            let mut t = Tensor4::zeros(a.wl * b.wl, d, d, a.wr * b.wr);
            for wa in 0..a.wl {
                for wb in 0..b.wl {
                    let w = wa * b.wl + wb;
                    for so in 0..d {
                        for si in 0..d {
                            for va in 0..a.wr {
                                for vb in 0..b.wr {
                                    let v = va * b.wr + vb;
                                    let mut acc = C64::new(0.0, 0.0);
                                    for m in 0..d {
                                        acc += a.at(wa, so, m, va) * b.at(wb, m, si, vb);
                                    }
                                    t.set(w, so, si, v, acc);
                                }
                            }
                        }
                    }
                }
            }
            tensors.push(t);
        }
        Self::from_tensors(d, tensors)
    }

    /// Dense matrix form (for small-system oracles).
    pub fn to_dense(&self, limit_sites: usize) -> Result<ComplexMatrix> {
        let n = self.num_sites();
        if n > limit_sites {
            return Err(Error::ResourceLimit(format!(
                "dense operator for {n} sites exceeds the limit of {limit_sites}"
            )));
        }
        let d = self.phys_dim;
        // env[(row_block, col_block), w] over processed sites.
        let mut dim = 1usize;
        let mut env = vec![C64::new(1.0, 0.0); 1];
        let mut wcur = 1usize;
        for t in &self.tensors {
            let newdim = dim * d;
            let mut next = vec![C64::new(0.0, 0.0); newdim * newdim * t.wr];
            for r in 0..dim {
                for c in 0..dim {
                    for w in 0..wcur {
                        let e = env[(r * dim + c) * wcur + w];
                        if e.re == 0.0 && e.im == 0.0 {
                            continue;
                        }
                        for so in 0..d {
                            for si in 0..d {
                                for v in 0..t.wr {
                                    let val = e * t.at(w, so, si, v);
                                    if val.re == 0.0 && val.im == 0.0 {
                                        continue;
                                    }
                                    let rr = r * d + so;
                                    let cc = c * d + si;
                                    next[(rr * newdim + cc) * t.wr + v] += val;
                                }
                            }
                        }
                    }
                }
            }
            env = next;
            dim = newdim;
            wcur = t.wr;
        }
        ComplexMatrix::new(dim, dim, env)
    }
}

/// ⟨bra|ket⟩ by left-to-right transfer contraction. Excludes the states'
/// `log_norm_offset`s; callers compose them when reconstructing raw overlaps.
pub fn inner_product(bra: &MpsState, ket: &MpsState) -> Result<C64> {
    if bra.num_sites() != ket.num_sites() || bra.phys_dim != ket.phys_dim {
        return Err(Error::ShapeMismatch(
            "inner product needs matching shapes".into(),
        ));
    }
    let d = bra.phys_dim;
    let mut env = vec![C64::new(1.0, 0.0); 1]; // (bra_bond × ket_bond)
    let mut bdim = 1usize;
    let mut kdim = 1usize;
    for (tb, tk) in bra.tensors.iter().zip(&ket.tensors) {
        // T[a', s, b] = Σ_a env[a', a] ket[a, s, b]
        let mut t = vec![C64::new(0.0, 0.0); bdim * d * tk.dr];
        for ap in 0..bdim {
            for a in 0..kdim {
                let e = env[ap * kdim + a];
                if e.re == 0.0 && e.im == 0.0 {
                    continue;
                }
                for s in 0..d {
                    let base = (a * d + s) * tk.dr;
                    let tbase = (ap * d + s) * tk.dr;
                    for b in 0..tk.dr {
                        t[tbase + b] += e * tk.data[base + b];
                    }
                }
            }
        }
        // env'[b', b] = Σ_{a', s} conj(bra[a', s, b']) T[a', s, b]
        let mut next = vec![C64::new(0.0, 0.0); tb.dr * tk.dr];
        for ap in 0..bdim {
            for s in 0..d {
                let brow = (ap * d + s) * tb.dr;
                let trow = (ap * d + s) * tk.dr;
                for bp in 0..tb.dr {
                    let coef = tb.data[brow + bp].conj();
                    if coef.re == 0.0 && coef.im == 0.0 {
                        continue;
                    }
                    let nrow = bp * tk.dr;
                    for b in 0..tk.dr {
                        next[nrow + b] += coef * t[trow + b];
                    }
                }
            }
        }
        env = next;
        bdim = tb.dr;
        kdim = tk.dr;
    }
    Ok(env[0])
}

/// State norm (of the unit-normalized tensor part).
pub fn norm(psi: &MpsState) -> f64 {
    math::sqrt(
        inner_product(psi, psi)
            .map(|z| z.re)
            .unwrap_or(0.0)
            .max(0.0),
    )
}

/// ⟨ψ|O|ψ⟩ by a single sweep. Excludes `log_norm_offset`.
pub fn expectation_mpo(psi: &MpsState, op: &MpoOperator) -> Result<C64> {
    if psi.num_sites() != op.num_sites() || psi.phys_dim != op.phys_dim {
        return Err(Error::ShapeMismatch(
            "expectation needs matching shapes".into(),
        ));
    }
    let d = psi.phys_dim;
    let mut env = vec![C64::new(1.0, 0.0); 1]; // (bra_bond, w, ket_bond)
    let mut adim = 1usize;
    let mut wdim = 1usize;
    for (ta, tw) in psi.tensors.iter().zip(&op.tensors) {
        let br = ta.dr;
        let wr = tw.wr;
        // T1[a', w, s, b] = Σ_a env[a', w, a] A[a, s, b]
        let mut t1 = vec![C64::new(0.0, 0.0); adim * wdim * d * br];
        for ap in 0..adim {
            for w in 0..wdim {
                for a in 0..adim {
                    let e = env[(ap * wdim + w) * adim + a];
                    if e.re == 0.0 && e.im == 0.0 {
                        continue;
                    }
                    for s in 0..d {
                        let abase = (a * d + s) * br;
                        let tbase = ((ap * wdim + w) * d + s) * br;
                        for b in 0..br {
                            t1[tbase + b] += e * ta.data[abase + b];
                        }
                    }
                }
            }
        }
        // T2[a', so, w', b] = Σ_{w, si} T1[a', w, si, b] W[w, so, si, w']
        let mut t2 = vec![C64::new(0.0, 0.0); adim * d * wr * br];
        for ap in 0..adim {
            for w in 0..wdim {
                for si in 0..d {
                    let t1base = ((ap * wdim + w) * d + si) * br;
                    for so in 0..d {
                        for v in 0..wr {
                            let coef = tw.at(w, so, si, v);
                            if coef.re == 0.0 && coef.im == 0.0 {
                                continue;
                            }
                            let t2base = ((ap * d + so) * wr + v) * br;
                            for b in 0..br {
                                t2[t2base + b] += coef * t1[t1base + b];
                            }
                        }
                    }
                }
            }
        }
        // env'[b', w', b] = Σ_{a', so} conj(A[a', so, b']) T2[a', so, w', b]
        let mut next = vec![C64::new(0.0, 0.0); br * wr * br];
        for ap in 0..adim {
            for so in 0..d {
                let abase = (ap * d + so) * br;
                for bp in 0..br {
                    let coef = ta.data[abase + bp].conj();
                    if coef.re == 0.0 && coef.im == 0.0 {
                        continue;
                    }
                    for v in 0..wr {
                        let t2base = ((ap * d + so) * wr + v) * br;
                        let nbase = (bp * wr + v) * br;
                        for b in 0..br {
                            next[nbase + b] += coef * t2[t2base + b];
                        }
                    }
                }
            }
        }
        env = next;
        adim = br;
        wdim = wr;
    }
    Ok(env[0])
}

/// Full amplitude vector, site 1 most significant. Rejects chains longer than
/// `limit_sites`.
pub fn to_dense_with_limit(psi: &MpsState, limit_sites: usize) -> Result<Vec<C64>> {
    let n = psi.num_sites();
    if n > limit_sites {
        return Err(Error::ResourceLimit(format!(
            "dense vector for {n} sites exceeds the limit of {limit_sites}"
        )));
    }
    let d = psi.phys_dim;
    let mut amp = vec![C64::new(1.0, 0.0); 1];
    let mut dim = 1usize;
    let mut bond = 1usize;
    for t in &psi.tensors {
        let mut next = vec![C64::new(0.0, 0.0); dim * d * t.dr];
        for s_idx in 0..dim {
            for a in 0..bond {
                let v = amp[s_idx * bond + a];
                if v.re == 0.0 && v.im == 0.0 {
                    continue;
                }
                for s in 0..d {
                    let abase = (a * d + s) * t.dr;
                    let nbase = (s_idx * d + s) * t.dr;
                    for b in 0..t.dr {
                        next[nbase + b] += v * t.data[abase + b];
                    }
                }
            }
        }
        amp = next;
        dim *= d;
        bond = t.dr;
    }
    Ok(amp)
}

/// [`to_dense_with_limit`] at the default limit.
pub fn to_dense(psi: &MpsState) -> Result<Vec<C64>> {
    to_dense_with_limit(psi, tol::DENSE_LIMIT_SITES)
}

/// Gauge-equivalent left-canonical state. The output is unit-norm with the
/// factored norm added to `log_norm_offset`; the QR phase convention (real
/// positive R diagonal) makes the result deterministic.
pub fn left_canonicalize(psi: &MpsState) -> Result<MpsState> {
    let d = psi.phys_dim;
    let n = psi.num_sites();
    let mut tensors = Vec::with_capacity(n);
    let mut carry = ComplexMatrix::identity(1);
    for j in 0..n {
        let t = &psi.tensors[j];
        let cdim = carry.rows();
        // B[c, s, b] = Σ_a carry[c, a] A[a, s, b], reshaped (c·d) × dr.
        let mut m = ComplexMatrix::zeros(cdim * d, t.dr);
        for c in 0..cdim {
            for a in 0..t.dl {
                let e = carry.get(c, a);
                if e.re == 0.0 && e.im == 0.0 {
                    continue;
                }
                for s in 0..d {
                    for b in 0..t.dr {
                        let cur = m.get(c * d + s, b);
                        m.set(c * d + s, b, cur + e * t.at(a, s, b));
                    }
                }
            }
        }
        let (q, r) = qr_positive(&m);
        let k = q.cols();
        let mut nt = Tensor3::zeros(cdim, d, k);
        for c in 0..cdim {
            for s in 0..d {
                for b in 0..k {
                    nt.set(c, s, b, q.get(c * d + s, b));
                }
            }
        }
        tensors.push(nt);
        carry = r;
    }
    // carry is 1×1 real non-negative: the state norm.
    let c = carry.get(0, 0).re;
    if !(c > 0.0) {
        return Err(Error::Numerical("cannot canonicalize a zero state".into()));
    }
    MpsState::from_tensors(
        d,
        tensors,
        CanonicalForm::Left,
        psi.log_norm_offset + math::ln(c),
    )
}

/// Per-application compression diagnostics.
#[derive(Clone, Debug, Default)]
pub struct CompressionStats {
    /// Relative discarded weight: for the exact route, the squared overlap
    /// deficit 1 − |⟨exact|truncated⟩|².
    pub discarded_weight: f64,
    /// ln of the norm factored out by this application.
    pub log_norm: f64,
    /// Largest bond dimension of the output.
    pub max_bond: usize,
}

/// ψ′ ∝ O|ψ⟩: exact contraction, then canonical two-sweep truncation.
///
/// Output is unit-norm (ln‖O ψ‖ plus the truncation loss goes to
/// `log_norm_offset`) and right-canonical. The reported discarded weight
/// equals 1 − |⟨O ψ|ψ′⟩|²/‖O ψ‖² to machine precision because the per-site
/// truncation errors of the canonical sweep are mutually orthogonal.
pub fn apply_mpo_compress(
    op: &MpoOperator,
    psi: &MpsState,
    chi_max: usize,
    cutoff: f64,
) -> Result<(MpsState, CompressionStats)> {
    if chi_max == 0 {
        return Err(Error::InvalidArgument("chi_max must be at least 1".into()));
    }
    if psi.num_sites() != op.num_sites() || psi.phys_dim != op.phys_dim {
        return Err(Error::ShapeMismatch(
            "operator application needs matching shapes".into(),
        ));
    }
    let raw = apply_mpo_exact(op, psi)?;
    let canon = left_canonicalize(&raw)?;
    let exact_log_norm = canon.log_norm_offset - psi.log_norm_offset;

    // Right-to-left truncation sweep on the normalized left-canonical state.
    let d = psi.phys_dim;
    let n = canon.num_sites();
    let mut tensors = canon.tensors;
    let mut discarded_total = 0.0f64;
    let mut carry = ComplexMatrix::identity(1);
    for j in (1..n).rev() {
        let t = &tensors[j];
        let edim = carry.cols();
        // B[a, s, e] = Σ_b A[a, s, b] carry[b, e], reshaped a × (d·e)
        let mut m = ComplexMatrix::zeros(t.dl, d * edim);
        for a in 0..t.dl {
            for s in 0..d {
                for b in 0..t.dr {
                    let v = t.at(a, s, b);
                    if v.re == 0.0 && v.im == 0.0 {
                        continue;
                    }
                    for e in 0..edim {
                        let cur = m.get(a, s * edim + e);
                        m.set(a, s * edim + e, cur + v * carry.get(b, e));
                    }
                }
            }
        }
        let (new_carry, vt, disc, _total) = split_right_trunc(&m, chi_max, cutoff)?;
        discarded_total += disc;
        let k = vt.rows();
        let mut nt = Tensor3::zeros(k, d, edim);
        for r in 0..k {
            for s in 0..d {
                for e in 0..edim {
                    nt.set(r, s, e, vt.get(r, s * edim + e));
                }
            }
        }
        tensors[j] = nt;
        carry = new_carry;
    }
    // Absorb the carry into site 0 and renormalize.
    {
        let t = &tensors[0];
        let edim = carry.cols();
        let mut nt = Tensor3::zeros(1, d, edim);
        for s in 0..d {
            for b in 0..t.dr {
                let v = t.at(0, s, b);
                if v.re == 0.0 && v.im == 0.0 {
                    continue;
                }
                for e in 0..edim {
                    let cur = nt.at(0, s, e);
                    nt.set(0, s, e, cur + v * carry.get(b, e));
                }
            }
        }
        tensors[0] = nt;
    }
    let mut out = MpsState::from_tensors(d, tensors, CanonicalForm::Right, 0.0)?;
    let nrm = norm(&out);
    if !(nrm > 0.0) {
        return Err(Error::Numerical("state vanished during compression".into()));
    }
    let inv = C64::new(1.0 / nrm, 0.0);
    for z in out.tensors[0].data.iter_mut() {
        *z *= inv;
    }
    out.log_norm_offset = psi.log_norm_offset + exact_log_norm + math::ln(nrm);
    let stats = CompressionStats {
        discarded_weight: discarded_total,
        log_norm: exact_log_norm + math::ln(nrm),
        max_bond: out.max_bond(),
    };
    Ok((out, stats))
}

/// Exact O|ψ⟩ with the composite bond w·χ; no truncation, no normalization.
fn apply_mpo_exact(op: &MpoOperator, psi: &MpsState) -> Result<MpsState> {
    let d = psi.phys_dim;
    let n = psi.num_sites();
    let mut tensors = Vec::with_capacity(n);
    for j in 0..n {
        let a = &psi.tensors[j];
        let w = &op.tensors[j];
        let mut t = Tensor3::zeros(w.wl * a.dl, d, w.wr * a.dr);
        for wi in 0..w.wl {
            for so in 0..d {
                for si in 0..d {
                    for v in 0..w.wr {
                        let coef = w.at(wi, so, si, v);
                        if coef.re == 0.0 && coef.im == 0.0 {
                            continue;
                        }
                        for ai in 0..a.dl {
                            let l = wi * a.dl + ai;
                            for b in 0..a.dr {
                                let r = v * a.dr + b;
                                let cur = t.at(l, so, r);
                                t.set(l, so, r, cur + coef * a.at(ai, si, b));
                            }
                        }
                    }
                }
            }
        }
        tensors.push(t);
    }
    MpsState::from_tensors(d, tensors, CanonicalForm::None, psi.log_norm_offset)
}

/// ψ′ ∝ O|ψ⟩ by a single truncating sweep (zip-up). Left-canonical output,
/// unit norm, offsets accumulated as in [`apply_mpo_compress`]. The discarded
/// weight is the sum of per-site relative discards.
pub fn apply_mpo_zipup(
    op: &MpoOperator,
    psi: &MpsState,
    chi_max: usize,
    cutoff: f64,
) -> Result<(MpsState, CompressionStats)> {
    if chi_max == 0 {
        return Err(Error::InvalidArgument("chi_max must be at least 1".into()));
    }
    if psi.num_sites() != op.num_sites() || psi.phys_dim != op.phys_dim {
        return Err(Error::ShapeMismatch(
            "operator application needs matching shapes".into(),
        ));
    }
    let d = psi.phys_dim;
    let n = psi.num_sites();
    let mut tensors: Vec<Tensor3> = Vec::with_capacity(n);
    // carry[m, (w, a)]
    let mut carry = ComplexMatrix::identity(1);
    let mut wdim = 1usize;
    let mut adim = 1usize;
    let mut discarded_total = 0.0f64;
    let mut log_norm = 0.0f64;
    for j in 0..n {
        let a = &psi.tensors[j];
        let w = &op.tensors[j];
        let mdim = carry.rows();
        let (wr, ar) = (w.wr, a.dr);
        // T1[m, w, si, a'] = Σ_a carry[m, (w, a)] A[a, si, a']
        let mut t1 = vec![C64::new(0.0, 0.0); mdim * wdim * d * ar];
        for mi in 0..mdim {
            for wi in 0..wdim {
                for ai in 0..adim {
                    let e = carry.get(mi, wi * adim + ai);
                    if e.re == 0.0 && e.im == 0.0 {
                        continue;
                    }
                    for si in 0..d {
                        let abase = (ai * d + si) * ar;
                        let tbase = ((mi * wdim + wi) * d + si) * ar;
                        for b in 0..ar {
                            t1[tbase + b] += e * a.data[abase + b];
                        }
                    }
                }
            }
        }
        // T2[m, so, w', a'] = Σ_{w, si} T1[m, w, si, a'] W[w, so, si, w']
        let mut t2 = vec![C64::new(0.0, 0.0); mdim * d * wr * ar];
        for mi in 0..mdim {
            for wi in 0..wdim {
                for si in 0..d {
                    let t1base = ((mi * wdim + wi) * d + si) * ar;
                    for so in 0..d {
                        for v in 0..wr {
                            let coef = w.at(wi, so, si, v);
                            if coef.re == 0.0 && coef.im == 0.0 {
                                continue;
                            }
                            let t2base = ((mi * d + so) * wr + v) * ar;
                            for b in 0..ar {
                                t2[t2base + b] += coef * t1[t1base + b];
                            }
                        }
                    }
                }
            }
        }
        let m = ComplexMatrix::from_raw(mdim * d, wr * ar, t2);
        if j + 1 < n {
            let (u, new_carry, disc, total) = split_left_trunc(&m, chi_max, cutoff)?;
            discarded_total += disc / total;
            let k = u.cols();
            let mut nt = Tensor3::zeros(mdim, d, k);
            for mi in 0..mdim {
                for s in 0..d {
                    for b in 0..k {
                        nt.set(mi, s, b, u.get(mi * d + s, b));
                    }
                }
            }
            tensors.push(nt);
            carry = new_carry;
            wdim = wr;
            adim = ar;
        } else {
            // Final site: wr = ar = 1; normalize in place.
            let nrm = m.frobenius_norm();
            if !(nrm > 0.0) {
                return Err(Error::Numerical("state vanished during zip-up".into()));
            }
            log_norm = math::ln(nrm);
            let inv = 1.0 / nrm;
            let mut nt = Tensor3::zeros(mdim, d, 1);
            for mi in 0..mdim {
                for s in 0..d {
                    nt.set(mi, s, 0, m.get(mi * d + s, 0) * inv);
                }
            }
            tensors.push(nt);
        }
    }
    let out = MpsState::from_tensors(
        d,
        tensors,
        CanonicalForm::Left,
        psi.log_norm_offset + log_norm,
    )?;
    let stats = CompressionStats {
        discarded_weight: discarded_total,
        log_norm,
        max_bond: out.max_bond(),
    };
    Ok((out, stats))
}

/// Apply a two-site gate (d²×d², row = (out₁ out₂), col = (in₁ in₂)) on sites
/// (j, j+1), splitting back with at most `chi_max` kept values. Returns the
/// relative discarded weight. No renormalization.
pub fn apply_two_site_gate(
    psi: &mut MpsState,
    j: usize,
    gate: &ComplexMatrix,
    chi_max: usize,
    cutoff: f64,
) -> Result<f64> {
    let d = psi.phys_dim;
    let n = psi.num_sites();
    if j + 1 >= n {
        return Err(Error::InvalidArgument(
            "gate needs two adjacent sites".into(),
        ));
    }
    if gate.rows() != d * d || gate.cols() != d * d {
        return Err(Error::ShapeMismatch("gate must be d²×d²".into()));
    }
    let (left, right) = (&psi.tensors[j], &psi.tensors[j + 1]);
    let (al, ar) = (left.dl, right.dr);
    let mid = left.dr;
    // theta[a, s1, s2, e]
    let mut theta = vec![C64::new(0.0, 0.0); al * d * d * ar];
    for a in 0..al {
        for s1 in 0..d {
            for m in 0..mid {
                let lv = left.at(a, s1, m);
                if lv.re == 0.0 && lv.im == 0.0 {
                    continue;
                }
                for s2 in 0..d {
                    let rbase = (m * d + s2) * ar;
                    let tbase = ((a * d + s1) * d + s2) * ar;
                    for e in 0..ar {
                        theta[tbase + e] += lv * right.data[rbase + e];
                    }
                }
            }
        }
    }
    // theta'[a, o1, o2, e] = Σ_{s1 s2} gate[(o1 o2), (s1 s2)] theta[a, s1, s2, e]
    let mut theta2 = vec![C64::new(0.0, 0.0); al * d * d * ar];
    for a in 0..al {
        for o1 in 0..d {
            for o2 in 0..d {
                let grow = o1 * d + o2;
                let obase = ((a * d + o1) * d + o2) * ar;
                for s1 in 0..d {
                    for s2 in 0..d {
                        let gv = gate.get(grow, s1 * d + s2);
                        if gv.re == 0.0 && gv.im == 0.0 {
                            continue;
                        }
                        let tbase = ((a * d + s1) * d + s2) * ar;
                        for e in 0..ar {
                            theta2[obase + e] += gv * theta[tbase + e];
                        }
                    }
                }
            }
        }
    }
    let m = ComplexMatrix::from_raw(al * d, d * ar, theta2);
    let (u, carry, disc, total) = split_left_trunc(&m, chi_max, cutoff)?;
    let k = u.cols();
    let mut lt = Tensor3::zeros(al, d, k);
    for a in 0..al {
        for s in 0..d {
            for b in 0..k {
                lt.set(a, s, b, u.get(a * d + s, b));
            }
        }
    }
    let mut rt = Tensor3::zeros(k, d, ar);
    for b in 0..k {
        for s in 0..d {
            for e in 0..ar {
                rt.set(b, s, e, carry.get(b, s * ar + e));
            }
        }
    }
    psi.tensors[j] = lt;
    psi.tensors[j + 1] = rt;
    psi.canonical_form = CanonicalForm::None;
    Ok(disc / total)
}

/// Renormalize in place, adding ln(norm) to the offset.
pub fn renormalize(psi: &mut MpsState) -> Result<()> {
    let nrm = norm(psi);
    if !(nrm > 0.0) {
        return Err(Error::Numerical("cannot renormalize a zero state".into()));
    }
    let inv = C64::new(1.0 / nrm, 0.0);
    for z in psi.tensors[0].data.iter_mut() {
        *z *= inv;
    }
    psi.log_norm_offset += math::ln(nrm);
    Ok(())
}

/// MPO compression by the same two-sweep pass as states, keeping the overall
/// scale in the tensors (operators are not normalized). Returns the relative
/// discarded weight.
pub fn mpo_compress(op: &MpoOperator, chi_max: usize, cutoff: f64) -> Result<(MpoOperator, f64)> {
    if chi_max == 0 {
        return Err(Error::InvalidArgument("chi_max must be at least 1".into()));
    }
    let d = op.phys_dim;
    let n = op.num_sites();
    // View the MPO as an MPS with physical dimension d², sweep left with QR.
    let mut mats: Vec<Tensor4> = op.tensors.clone();
    let mut carry = ComplexMatrix::identity(1);
    for j in 0..n {
        let t = &mats[j];
        let cdim = carry.rows();
        let mut m = ComplexMatrix::zeros(cdim * d * d, t.wr);
        for c in 0..cdim {
            for w in 0..t.wl {
                let e = carry.get(c, w);
                if e.re == 0.0 && e.im == 0.0 {
                    continue;
                }
                for so in 0..d {
                    for si in 0..d {
                        for v in 0..t.wr {
                            let row = (c * d + so) * d + si;
                            let cur = m.get(row, v);
                            m.set(row, v, cur + e * t.at(w, so, si, v));
                        }
                    }
                }
            }
        }
        if j + 1 < n {
            let (q, r) = qr_positive(&m);
            let k = q.cols();
            let mut nt = Tensor4::zeros(cdim, d, d, k);
            for c in 0..cdim {
                for so in 0..d {
                    for si in 0..d {
                        for v in 0..k {
                            nt.set(c, so, si, v, q.get((c * d + so) * d + si, v));
                        }
                    }
                }
            }
            mats[j] = nt;
            carry = r;
        } else {
            // Keep the scale: the final column absorbs everything.
            let mut nt = Tensor4::zeros(cdim, d, d, 1);
            for c in 0..cdim {
                for so in 0..d {
                    for si in 0..d {
                        nt.set(c, so, si, 0, m.get((c * d + so) * d + si, 0));
                    }
                }
            }
            mats[j] = nt;
            carry = ComplexMatrix::identity(1);
        }
    }
    // Right-to-left truncation sweep.
    let mut discarded = 0.0f64;
    let mut carry_r = ComplexMatrix::identity(1);
    for j in (1..n).rev() {
        let t = &mats[j];
        let edim = carry_r.cols();
        let mut m = ComplexMatrix::zeros(t.wl, d * d * edim);
        for w in 0..t.wl {
            for so in 0..d {
                for si in 0..d {
                    for v in 0..t.wr {
                        let val = t.at(w, so, si, v);
                        if val.re == 0.0 && val.im == 0.0 {
                            continue;
                        }
                        for e in 0..edim {
                            let col = (so * d + si) * edim + e;
                            let cur = m.get(w, col);
                            m.set(w, col, cur + val * carry_r.get(v, e));
                        }
                    }
                }
            }
        }
        let (new_carry, vt, disc, total) = split_right_trunc(&m, chi_max, cutoff)?;
        discarded += if total > 0.0 { disc / total } else { 0.0 };
        let k = vt.rows();
        let mut nt = Tensor4::zeros(k, d, d, edim);
        for r in 0..k {
            for so in 0..d {
                for si in 0..d {
                    for e in 0..edim {
                        nt.set(r, so, si, e, vt.get(r, (so * d + si) * edim + e));
                    }
                }
            }
        }
        mats[j] = nt;
        carry_r = new_carry;
    }
    {
        let t = &mats[0];
        let edim = carry_r.cols();
        let mut nt = Tensor4::zeros(1, d, d, edim);
        for so in 0..d {
            for si in 0..d {
                for v in 0..t.wr {
                    let val = t.at(0, so, si, v);
                    if val.re == 0.0 && val.im == 0.0 {
                        continue;
                    }
                    for e in 0..edim {
                        let cur = nt.at(0, so, si, e);
                        nt.set(0, so, si, e, cur + val * carry_r.get(v, e));
                    }
                }
            }
        }
        mats[0] = nt;
    }
    Ok((MpoOperator::from_tensors(d, mats)?, discarded))
}
