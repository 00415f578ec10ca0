use std::fs;
use std::path::Path;

use serde_json::json;

use super::{CorrectorSet, HomogenizedTensor};
use crate::elliptic::SolveReport;
use crate::error::{Error, Result};
use crate::lattice::io::{load_vector, read_components, save_vector, write_components};
use crate::lattice::{ScalarField, SkewTensorField};

impl CorrectorSet {
    /// Directory layout: `phi.bin` (d components), `q_<i>.bin`, `sigma.bin`
    /// (stored `(i, j<k)` components) and `summary.json`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let grid = self.grid();
        let phi: Vec<&[f64]> = self.phi.iter().map(|p| p.data()).collect();
        write_components(&dir.join("phi.bin"), grid, &phi)?;
        for (i, q) in self.q.iter().enumerate() {
            save_vector(&dir.join(format!("q_{i}.bin")), q)?;
        }
        let sigma: Vec<&[f64]> = self.sigma.components().iter().map(|c| c.as_slice()).collect();
        write_components(&dir.join("sigma.bin"), grid, &sigma)?;
        let summary = json!({
            "schema": 1,
            "dim": grid.dim(),
            "n": grid.n(),
            "a_hom": self.a_hom.matrix,
            "a_hom_ellipticity": self.a_hom.ellipticity,
            "a_hom_operator_norm": self.a_hom.operator_norm,
            "reports": self.reports,
            "energies": self.energies(),
            "sigma_identity_residuals": self.sigma_identity_residuals(),
        });
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let (grid, phi) = read_components(&dir.join("phi.bin"))?;
        let d = grid.dim();
        if phi.len() != d {
            return Err(Error::Format(format!("phi.bin holds {} components for d = {d}", phi.len())));
        }
        let phi = phi.into_iter().map(|p| ScalarField::from_vec(grid, p)).collect::<Result<Vec<_>>>()?;
        let q = (0..d).map(|i| load_vector(&dir.join(format!("q_{i}.bin")))).collect::<Result<Vec<_>>>()?;
        let (sgrid, comps) = read_components(&dir.join("sigma.bin"))?;
        let mut sigma = SkewTensorField::zeros(grid);
        if sgrid != grid || comps.len() != sigma.components().len() {
            return Err(Error::Format("sigma.bin does not match phi.bin".into()));
        }
        let mut it = comps.into_iter();
        for i in 0..d {
            for j in 0..d {
                for k in j + 1..d {
                    *sigma.upper_mut(i, j, k) = it.next().expect("component count checked");
                }
            }
        }
        let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("summary.json"))?)?;
        let matrix: Vec<f64> = serde_json::from_value(summary["a_hom"].clone())?;
        let reports: Vec<SolveReport> = serde_json::from_value(summary["reports"].clone())?;
        if matrix.len() != d * d {
            return Err(Error::Format("a_hom has the wrong size".into()));
        }
        Ok(Self { phi, q, a_hom: HomogenizedTensor::new(d, matrix), sigma, reports })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::SolveOptions;
    use crate::lattice::{CoefficientField, Grid};

    #[test]
    fn roundtrip() {
        let g = Grid::new(3, 8).unwrap();
        let prof = [1.0, 0.5, 0.25, 0.5];
        let a = CoefficientField::laminate(g, &prof).unwrap();
        let c = CorrectorSet::compute(&a, &SolveOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        c.save(dir.path()).unwrap();
        let back = CorrectorSet::load(dir.path()).unwrap();
        assert_eq!(back.phi, c.phi);
        assert_eq!(back.q, c.q);
        assert_eq!(back.sigma, c.sigma);
        assert_eq!(back.a_hom, c.a_hom);
        let text = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
        assert!(text.find("\"a_hom\"").unwrap() < text.find("\"schema\"").unwrap());
    }
}
