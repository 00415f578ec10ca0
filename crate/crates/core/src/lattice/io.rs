//! Flat binary field layout: `d`, `N`, component count as little-endian `u64`,
//! then cell-major row-major little-endian `f64` (components of one cell adjacent).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::lattice::{CoefficientField, Grid, ScalarField, VectorField};

pub fn write_components(path: &Path, grid: Grid, comps: &[&[f64]]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for h in [grid.dim() as u64, grid.n() as u64, comps.len() as u64] {
        w.write_all(&h.to_le_bytes())?;
    }
    for idx in 0..grid.len() {
        for c in comps {
            w.write_all(&c[idx].to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_components(path: &Path) -> Result<(Grid, Vec<Vec<f64>>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut word = [0u8; 8];
    let mut header = [0u64; 3];
    for h in header.iter_mut() {
        r.read_exact(&mut word)?;
        *h = u64::from_le_bytes(word);
    }
    let grid = Grid::new(header[0] as usize, header[1] as usize)?;
    let ncomp = header[2] as usize;
    if ncomp == 0 || ncomp > 9 {
        return Err(Error::Format(format!("component count {ncomp}")));
    }
    let mut comps = vec![vec![0.0; grid.len()]; ncomp];
    for idx in 0..grid.len() {
        for c in comps.iter_mut() {
            r.read_exact(&mut word)
                .map_err(|_| Error::Format(format!("{}: truncated field data", path.display())))?;
            c[idx] = f64::from_le_bytes(word);
        }
    }
    if r.read(&mut word)? != 0 {
        return Err(Error::Format(format!("{}: trailing bytes", path.display())));
    }
    Ok((grid, comps))
}

pub fn save_scalar(path: &Path, u: &ScalarField) -> Result<()> {
    write_components(path, u.grid(), &[u.data()])
}

pub fn load_scalar(path: &Path) -> Result<ScalarField> {
    let (grid, mut comps) = read_components(path)?;
    if comps.len() != 1 {
        return Err(Error::Format(format!("expected 1 component, found {}", comps.len())));
    }
    ScalarField::from_vec(grid, comps.pop().unwrap())
}

pub fn save_vector(path: &Path, u: &VectorField) -> Result<()> {
    let refs: Vec<&[f64]> = u.components().iter().map(|c| c.as_slice()).collect();
    write_components(path, u.grid(), &refs)
}

pub fn load_vector(path: &Path) -> Result<VectorField> {
    let (grid, comps) = read_components(path)?;
    if comps.len() != grid.dim() {
        return Err(Error::Format(format!("expected {} components, found {}", grid.dim(), comps.len())));
    }
    VectorField::from_components(grid, comps)
}

pub fn save_coefficients(path: &Path, a: &CoefficientField) -> Result<()> {
    let refs: Vec<&[f64]> = a.entries().iter().map(|c| c.as_slice()).collect();
    write_components(path, a.grid(), &refs)
}

pub fn load_coefficients(path: &Path) -> Result<CoefficientField> {
    let (grid, comps) = read_components(path)?;
    if comps.len() != grid.dim() * grid.dim() {
        return Err(Error::Format(format!("expected {} components, found {}", grid.dim().pow(2), comps.len())));
    }
    CoefficientField::from_entries(grid, comps)
}
