//! File IO for the binary state/operator containers.

use std::fs;
use std::path::Path;

use rmps_core::container;
use rmps_core::mps::{MpoOperator, MpsState};

use crate::{numerical_err, CliResult};

pub fn save_state(path: &Path, psi: &MpsState) -> CliResult<()> {
    fs::write(path, container::encode_mps(psi))?;
    Ok(())
}

pub fn load_state(path: &Path) -> CliResult<MpsState> {
    let bytes = fs::read(path)?;
    container::decode_mps(&bytes).map_err(numerical_err)
}

pub fn save_operator(path: &Path, op: &MpoOperator) -> CliResult<()> {
    fs::write(path, container::encode_mpo(op))?;
    Ok(())
}

pub fn load_operator(path: &Path) -> CliResult<MpoOperator> {
    let bytes = fs::read(path)?;
    container::decode_mpo(&bytes).map_err(numerical_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rmps_core::mps::inner_product;
    use rmps_core::sampler::{sample_indexed, RmpsSpec};

    #[test]
    fn state_file_roundtrip() {
        let dir = std::env::temp_dir().join("rmps-thermo-storage-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("state.rmps");
        let spec = RmpsSpec::new(5, 4, 3).unwrap();
        let psi = sample_indexed(&spec, 0).unwrap();
        save_state(&path, &psi).unwrap();
        let back = load_state(&path).unwrap();
        let ip = inner_product(&psi, &back).unwrap();
        assert!((ip.norm() - 1.0).abs() <= 1e-12);
        std::fs::remove_dir_all(&dir).ok();
    }
}
