//! Versioned binary container for states and operators.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   4 bytes  b"RMPS"
//! version u32      currently 1
//! kind    u8       0 = state, 1 = operator
//! N       u32      number of sites
//! d       u32      physical dimension
//! extra   state: canonical form u8 (0 none, 1 left, 2 right) + f64 offset
//! sites   per site: bond dims (u32s), then entries as f64 (re, im) pairs
//!         in the tensor's row-major index order
//! ```
//!
//! Encoding and decoding work on byte buffers only; file handling lives in
//! the companion crate.

use alloc::{vec, vec::Vec};
use num_complex::Complex64 as C64;

use crate::mps::{CanonicalForm, MpoOperator, MpsState, Tensor3, Tensor4};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"RMPS";
pub const VERSION: u32 = 1;

const KIND_STATE: u8 = 0;
const KIND_OPERATOR: u8 = 1;

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new() -> Self {
        Self { buf: Vec::new() }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn complex(&mut self, z: C64) {
        self.f64(z.re);
        self.f64(z.im);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::InvalidArgument("container truncated".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f64(&mut self) -> Result<f64> {
        let b = self.take(8)?;
        let mut a = [0u8; 8];
        a.copy_from_slice(b);
        Ok(f64::from_le_bytes(a))
    }

    fn complex(&mut self) -> Result<C64> {
        Ok(C64::new(self.f64()?, self.f64()?))
    }

    fn done(&self) -> bool {
        self.pos == self.buf.len()
    }
}

pub fn encode_mps(psi: &MpsState) -> Vec<u8> {
    let mut w = Writer::new();
    w.buf.extend_from_slice(MAGIC);
    w.u32(VERSION);
    w.u8(KIND_STATE);
    w.u32(psi.num_sites() as u32);
    w.u32(psi.phys_dim() as u32);
    w.u8(match psi.canonical_form {
        CanonicalForm::None => 0,
        CanonicalForm::Left => 1,
        CanonicalForm::Right => 2,
    });
    w.f64(psi.log_norm_offset);
    for t in psi.tensors() {
        w.u32(t.dl as u32);
        w.u32(t.dr as u32);
        for &z in &t.data {
            w.complex(z);
        }
    }
    w.buf
}

pub fn decode_mps(bytes: &[u8]) -> Result<MpsState> {
    let mut r = Reader::new(bytes);
    check_header(&mut r, KIND_STATE)?;
    let n = r.u32()? as usize;
    let d = r.u32()? as usize;
    let form = match r.u8()? {
        0 => CanonicalForm::None,
        1 => CanonicalForm::Left,
        2 => CanonicalForm::Right,
        other => {
            return Err(Error::InvalidArgument(alloc::format!(
                "unknown canonical form tag {other}"
            )))
        }
    };
    let offset = r.f64()?;
    if n == 0 || d == 0 || n > 1 << 20 {
        return Err(Error::InvalidArgument(
            "implausible container header".into(),
        ));
    }
    let mut tensors = Vec::with_capacity(n);
    for _ in 0..n {
        let dl = r.u32()? as usize;
        let dr = r.u32()? as usize;
        let len = dl
            .checked_mul(d)
            .and_then(|x| x.checked_mul(dr))
            .ok_or_else(|| Error::InvalidArgument("tensor shape overflow".into()))?;
        let mut data = vec![C64::new(0.0, 0.0); len];
        for z in data.iter_mut() {
            *z = r.complex()?;
        }
        tensors.push(Tensor3 { dl, d, dr, data });
    }
    if !r.done() {
        return Err(Error::InvalidArgument("trailing bytes in container".into()));
    }
    MpsState::from_tensors(d, tensors, form, offset)
}

pub fn encode_mpo(op: &MpoOperator) -> Vec<u8> {
    let mut w = Writer::new();
    w.buf.extend_from_slice(MAGIC);
    w.u32(VERSION);
    w.u8(KIND_OPERATOR);
    w.u32(op.num_sites() as u32);
    w.u32(op.phys_dim() as u32);
    for t in op.tensors() {
        w.u32(t.wl as u32);
        w.u32(t.wr as u32);
        for &z in &t.data {
            w.complex(z);
        }
    }
    w.buf
}

pub fn decode_mpo(bytes: &[u8]) -> Result<MpoOperator> {
    let mut r = Reader::new(bytes);
    check_header(&mut r, KIND_OPERATOR)?;
    let n = r.u32()? as usize;
    let d = r.u32()? as usize;
    if n == 0 || d == 0 || n > 1 << 20 {
        return Err(Error::InvalidArgument(
            "implausible container header".into(),
        ));
    }
    let mut tensors = Vec::with_capacity(n);
    for _ in 0..n {
        let wl = r.u32()? as usize;
        let wr = r.u32()? as usize;
        let len = wl
            .checked_mul(d * d)
            .and_then(|x| x.checked_mul(wr))
            .ok_or_else(|| Error::InvalidArgument("tensor shape overflow".into()))?;
        let mut data = vec![C64::new(0.0, 0.0); len];
        for z in data.iter_mut() {
            *z = r.complex()?;
        }
        tensors.push(Tensor4 {
            wl,
            d_out: d,
            d_in: d,
            wr,
            data,
        });
    }
    if !r.done() {
        return Err(Error::InvalidArgument("trailing bytes in container".into()));
    }
    MpoOperator::from_tensors(d, tensors)
}

fn check_header(r: &mut Reader<'_>, kind: u8) -> Result<()> {
    let magic = r.take(4)?;
    if magic != MAGIC {
        return Err(Error::InvalidArgument("not an RMPS container".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::InvalidArgument(alloc::format!(
            "unsupported container version {version}"
        )));
    }
    let k = r.u8()?;
    if k != kind {
        return Err(Error::InvalidArgument(
            "container holds a different kind".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::heisenberg_mpo;
    use crate::mps::inner_product;
    use crate::sampler::{sample_indexed, RmpsSpec};

    #[test]
    fn state_roundtrip_is_exact() {
        let spec = RmpsSpec::new(6, 4, 99).unwrap();
        let mut psi = sample_indexed(&spec, 3).unwrap();
        psi.log_norm_offset = -1.25;
        let bytes = encode_mps(&psi);
        let back = decode_mps(&bytes).unwrap();
        assert_eq!(back.num_sites(), 6);
        assert_eq!(back.log_norm_offset, -1.25);
        assert_eq!(back.canonical_form, psi.canonical_form);
        for (a, b) in psi.tensors().iter().zip(back.tensors()) {
            assert_eq!(a.data, b.data);
        }
        let ip = inner_product(&psi, &back).unwrap();
        assert!((ip.norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn operator_roundtrip_is_exact() {
        let op = heisenberg_mpo(5, 0.7).unwrap();
        let bytes = encode_mpo(&op);
        let back = decode_mpo(&bytes).unwrap();
        for (a, b) in op.tensors().iter().zip(back.tensors()) {
            assert_eq!(a.data, b.data);
        }
    }

    #[test]
    fn corrupt_containers_are_rejected() {
        let spec = RmpsSpec::new(3, 2, 1).unwrap();
        let psi = sample_indexed(&spec, 0).unwrap();
        let bytes = encode_mps(&psi);
        assert!(decode_mps(&bytes[..bytes.len() - 3]).is_err());
        let mut wrong_magic = bytes.clone();
        wrong_magic[0] = b'X';
        assert!(decode_mps(&wrong_magic).is_err());
        let mut wrong_version = bytes.clone();
        wrong_version[4] = 9;
        assert!(decode_mps(&wrong_version).is_err());
        assert!(decode_mpo(&bytes).is_err());
        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(decode_mps(&trailing).is_err());
    }
}
