//! Normalized random MPS states.
//!
//! A sample is built from one independent Haar unitary per site, read off in
//! three phases:
//!
//! - ramp sites j = 1..L (L = log₂χ): U_j has dimension 2^j and the two site
//!   matrices are its upper and lower row blocks, doubling the bond until it
//!   reaches χ;
//! - bulk sites j = L+1..N−1: U_j has dimension 2χ and A^σ is the χ×χ block
//!   of rows selected by σ restricted to the first χ columns (the main-text
//!   reading A = L^σ U R with R = [I; 0], which is the dimensionally
//!   consistent one);
//! - the terminal site: a χ×χ unitary whose first two columns, divided by
//!   √d, become the two column vectors.
//!
//! Every site tensor then satisfies Σ_σ A†A = I exactly, so the state is
//! left-canonical and unit-norm by construction; no normalization sweep is
//! needed or performed.

use alloc::{format, vec::Vec};

use crate::linalg::haar_unitary;
use crate::math;
use crate::mps::{CanonicalForm, MpsState, Tensor3};
use crate::rng::{stream_for, Stream};
use crate::{Error, Result};

/// Parameters of the random-MPS distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RmpsSpec {
    pub num_sites: usize,
    pub phys_dim: usize,
    pub bond_dim: usize,
    pub master_seed: u64,
}

impl RmpsSpec {
    pub fn new(num_sites: usize, bond_dim: usize, master_seed: u64) -> Result<Self> {
        let spec = Self {
            num_sites,
            phys_dim: 2,
            bond_dim,
            master_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks N ≥ 2, d = 2, and χ a power of two with 2 ≤ χ ≤ 2^(N−1).
    ///
    /// Specs with χ above 2^(N−1) are rejected rather than silently capped:
    /// the construction (and the moment formulas verified against it) assume
    /// the doubling ramp completes before the terminal site.
    pub fn validate(&self) -> Result<()> {
        if self.num_sites < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 sites, got {}",
                self.num_sites
            )));
        }
        if self.phys_dim != 2 {
            return Err(Error::InvalidArgument(format!(
                "only d = 2 is validated, got {}",
                self.phys_dim
            )));
        }
        let chi = self.bond_dim;
        if chi < 2 || !chi.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "bond dimension must be a power of two with chi >= 2, got {chi}"
            )));
        }
        let ramp = chi.trailing_zeros() as usize; // log2(chi)
        if ramp > self.num_sites - 1 {
            return Err(Error::InvalidArgument(format!(
                "chi = {chi} needs a ramp of {ramp} sites but only {} fit before the terminal site",
                self.num_sites - 1
            )));
        }
        Ok(())
    }

    /// Number of ramp sites, log₂χ.
    pub fn ramp_len(&self) -> usize {
        self.bond_dim.trailing_zeros() as usize
    }

    /// Bond profile including both boundary 1s: (1, 2, 4, …, χ, …, χ, 1).
    pub fn bond_profile(&self) -> Vec<usize> {
        let n = self.num_sites;
        let chi = self.bond_dim;
        let mut bonds = Vec::with_capacity(n + 1);
        for j in 0..n {
            bonds.push(chi.min(1usize << j.min(62)));
        }
        bonds.push(1);
        bonds
    }

    pub fn hilbert_log2(&self) -> usize {
        self.num_sites
    }
}

/// The stream for sample `index`; see [`crate::rng::stream_for`].
pub fn sample_seed_for(index: u64, master_seed: u64) -> Stream {
    stream_for(master_seed, index)
}

/// Draw one normalized random MPS.
pub fn sample_rmps(spec: &RmpsSpec, rng: &mut Stream) -> Result<MpsState> {
    spec.validate()?;
    let n = spec.num_sites;
    let d = spec.phys_dim;
    let bonds = spec.bond_profile();
    let inv_sqrt_d = 1.0 / math::sqrt(d as f64);
    let mut tensors = Vec::with_capacity(n);
    for j in 0..n {
        let (bl, br) = (bonds[j], bonds[j + 1]);
        let mut t = Tensor3::zeros(bl, d, br);
        if j + 1 < n {
            // Ramp (br = d·bl, all columns) or bulk (br = bl = χ, first χ of 2χ
            // columns): either way A^σ is the σ-th block of rows of U.
            let u = haar_unitary(d * bl, rng)?;
            for s in 0..d {
                for a in 0..bl {
                    for b in 0..br {
                        t.set(a, s, b, u.get(s * bl + a, b));
                    }
                }
            }
        } else {
            // Terminal site: columns of a bl×bl unitary, rescaled by 1/√d so
            // the full contraction has norm exactly 1.
            let u = haar_unitary(bl, rng)?;
            for s in 0..d {
                for a in 0..bl {
                    t.set(a, s, 0, u.get(a, s) * inv_sqrt_d);
                }
            }
        }
        tensors.push(t);
    }
    MpsState::from_tensors(d, tensors, CanonicalForm::Left, 0.0)
}

/// Convenience: the sample with the given index under the spec's master seed.
pub fn sample_indexed(spec: &RmpsSpec, index: u64) -> Result<MpsState> {
    let mut rng = sample_seed_for(index, spec.master_seed);
    sample_rmps(spec, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::{inner_product, to_dense};
    use crate::tol;
    use num_complex::Complex64 as C64;

    #[test]
    fn spec_validation() {
        assert!(RmpsSpec::new(5, 4, 0).is_ok());
        assert!(RmpsSpec::new(1, 2, 0).is_err());
        assert!(RmpsSpec::new(5, 3, 0).is_err());
        assert!(RmpsSpec::new(5, 1, 0).is_err());
        // chi = 2^(N−1) is the largest admissible bond
        assert!(RmpsSpec::new(5, 16, 0).is_ok());
        assert!(RmpsSpec::new(5, 32, 0).is_err());
        assert!(RmpsSpec::new(2, 2, 0).is_ok());
    }

    #[test]
    fn bond_profile_matches_three_phase_construction() {
        let spec = RmpsSpec::new(5, 4, 0).unwrap();
        assert_eq!(spec.bond_profile(), alloc::vec![1, 2, 4, 4, 4, 1]);
        assert_eq!(spec.ramp_len(), 2);
        let tight = RmpsSpec::new(4, 8, 0).unwrap();
        assert_eq!(tight.bond_profile(), alloc::vec![1, 2, 4, 8, 1]);
    }

    #[test]
    fn samples_are_normalized_and_left_canonical() {
        for (n, chi) in [(2usize, 2usize), (4, 2), (5, 4), (6, 8), (8, 16), (9, 2)] {
            let spec = RmpsSpec::new(n, chi, 77).unwrap();
            for idx in 0..20u64 {
                let psi = sample_indexed(&spec, idx).unwrap();
                let ip = inner_product(&psi, &psi).unwrap();
                assert!(
                    (ip - C64::new(1.0, 0.0)).norm() <= tol::STATE_NORM,
                    "N={n} chi={chi} idx={idx}: norm² = {ip}"
                );
                assert!(
                    psi.left_canonical_defect() <= tol::STATE_NORM,
                    "N={n} chi={chi} idx={idx}"
                );
                assert_eq!(psi.bond_dims(), spec.bond_profile());
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_per_index() {
        let spec = RmpsSpec::new(6, 4, 123).unwrap();
        let a = sample_indexed(&spec, 5).unwrap();
        let b = sample_indexed(&spec, 5).unwrap();
        for (ta, tb) in a.tensors().iter().zip(b.tensors()) {
            assert_eq!(ta.data, tb.data);
        }
        // Different indices give nearly orthogonal states (overlap ~ 1/√D).
        let c = sample_indexed(&spec, 6).unwrap();
        let ip = inner_product(&a, &c).unwrap().norm();
        assert!(ip < 0.8, "independent samples overlap {ip}");
    }

    #[test]
    fn dense_vector_is_normalized() {
        let spec = RmpsSpec::new(2, 2, 9).unwrap();
        let psi = sample_indexed(&spec, 0).unwrap();
        let v = to_dense(&psi).unwrap();
        let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm2 - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn single_site_z_mean_is_zero() {
        // ⟨ψ|Z₁|ψ⟩ has mean 0 within 5 standard errors.
        use crate::linalg::ComplexMatrix;
        use crate::mps::{expectation_mpo, MpoOperator};
        let z = ComplexMatrix::new(
            2,
            2,
            alloc::vec![
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(-1.0, 0.0)
            ],
        )
        .unwrap();
        let spec = RmpsSpec::new(4, 2, 31).unwrap();
        let op = MpoOperator::single_site(4, 0, &z).unwrap();
        let m = 4000u64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for idx in 0..m {
            let psi = sample_indexed(&spec, idx).unwrap();
            let e = expectation_mpo(&psi, &op).unwrap().re;
            sum += e;
            sumsq += e * e;
        }
        let mean = sum / m as f64;
        let var = (sumsq / m as f64 - mean * mean).max(0.0);
        let stderr = math::sqrt(var / m as f64);
        assert!(
            mean.abs() <= 5.0 * stderr.max(1e-6),
            "mean {mean}, stderr {stderr}"
        );
    }
}
