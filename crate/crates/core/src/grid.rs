//! Cell-centered tensor grids on boxes and sampled fields.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Neumann,
}

impl Boundary {
    fn tag(self) -> u8 {
        match self {
            Boundary::Periodic => 0,
            Boundary::Neumann => 1,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Boundary::Periodic),
            1 => Ok(Boundary::Neumann),
            t => Err(Error::Parse(format!("unknown boundary tag {t}"))),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Periodic => "periodic",
            Boundary::Neumann => "neumann",
        })
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Boundary::Periodic),
            "neumann" => Ok(Boundary::Neumann),
            other => Err(Error::UnknownName {
                kind: "domain",
                name: other.to_string(),
            }),
        }
    }
}

/// A box `[0, L_0] x ... ` split into `N_i` cells per axis with nodes at the
/// cell centers. Storage is row-major with axis 0 slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformGrid {
    cells: Vec<usize>,
    lengths: Vec<f64>,
    boundary: Boundary,
}

impl UniformGrid {
    pub fn new(cells: &[usize], lengths: &[f64], boundary: Boundary) -> Result<Self> {
        let dim = cells.len();
        if !(1..=2).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if lengths.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "{} lengths given for a {dim}-dimensional grid",
                lengths.len()
            )));
        }
        if cells.contains(&0) {
            return Err(Error::InvalidArgument(
                "grid needs at least one cell per axis".into(),
            ));
        }
        if lengths.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(Error::InvalidArgument(format!("invalid extents {lengths:?}")));
        }
        Ok(Self {
            cells: cells.to_vec(),
            lengths: lengths.to_vec(),
            boundary,
        })
    }

    /// `[0, length]` with `cells` cells.
    pub fn interval(cells: usize, length: f64, boundary: Boundary) -> Result<Self> {
        Self::new(&[cells], &[length], boundary)
    }

    /// `[0, length]^2` with `cells x cells` cells.
    pub fn square(cells: usize, length: f64, boundary: Boundary) -> Result<Self> {
        Self::new(&[cells, cells], &[length, length], boundary)
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.cells[axis] as f64
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    /// Midpoint quadrature weight `h_0 h_1 ...`.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// Multi-index of the flat node index.
    pub fn multi_index(&self, flat: usize) -> [usize; 2] {
        match self.dim() {
            1 => [flat, 0],
            _ => [flat / self.cells[1], flat % self.cells[1]],
        }
    }

    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        match self.dim() {
            1 => idx[0],
            _ => idx[0] * self.cells[1] + idx[1],
        }
    }

    /// Coordinates of node `flat`; unused trailing coordinates are zero.
    pub fn node(&self, flat: usize) -> [f64; 2] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; 2];
        for a in 0..self.dim() {
            x[a] = (idx[a] as f64 + 0.5) * self.spacing(a);
        }
        x
    }

    /// Distance from node `flat` to the nearest face of the box.
    pub fn distance_to_boundary(&self, flat: usize) -> f64 {
        let x = self.node(flat);
        (0..self.dim())
            .map(|a| x[a].min(self.lengths[a] - x[a]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn check_same(&self, other: &UniformGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Node values of a scalar function on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: UniformGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: UniformGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &UniformGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &UniformGrid, value: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![value; grid.len()],
        }
    }

    /// Evaluate `f` at every node; `f` receives the node coordinates.
    pub fn sample<F: Fn(&[f64]) -> f64>(grid: &UniformGrid, f: F) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let x = grid.node(i);
                f(&x[..grid.dim()])
            })
            .collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub(crate) fn from_parts(grid: UniformGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Field {
        Field::from_parts(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map<F: Fn(f64, f64) -> f64>(&self, other: &Field, f: F) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        Ok(Field::from_parts(
            self.grid.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|v| s * v)
    }

    /// Midpoint rule `sum_i v_i h^n`.
    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn mean(&self) -> f64 {
        self.integrate() / self.grid.volume()
    }

    /// `<u, v> = sum_i u_i v_i h^n`.
    pub fn inner(&self, other: &Field) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(dot(&self.values, &other.values) * self.grid.cell_volume())
    }

    pub fn l2_norm(&self) -> f64 {
        (dot(&self.values, &self.values) * self.grid.cell_volume()).sqrt()
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "L^p norm needs p in [1, inf), got {p}"
            )));
        }
        if p == 2.0 {
            return Ok(self.l2_norm());
        }
        let s: f64 = self.values.iter().map(|v| v.abs().powf(p)).sum();
        Ok((s * self.grid.cell_volume()).powf(1.0 / p))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Write as CSV with one row per node: coordinates then value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header = match self.grid.dim() {
            1 => "x,value",
            _ => "x,y,value",
        };
        writeln!(w, "{header}")?;
        for (i, v) in self.values.iter().enumerate() {
            let x = self.grid.node(i);
            match self.grid.dim() {
                1 => writeln!(w, "{:.17e},{:.17e}", x[0], v)?,
                _ => writeln!(w, "{:.17e},{:.17e},{:.17e}", x[0], x[1], v)?,
            }
        }
        Ok(())
    }

    /// Binary checkpoint, little-endian:
    ///
    /// ```text
    /// u32 n | u64 N_i (n times) | f64 L_i (n times) | u8 boundary (0 periodic, 1 neumann)
    /// f64 values (row-major, axis 0 slowest)
    /// ```
    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> Result<()> {
        let g = &self.grid;
        w.write_all(&(g.dim() as u32).to_le_bytes())?;
        for &n in g.cells() {
            w.write_all(&(n as u64).to_le_bytes())?;
        }
        for &l in g.lengths() {
            w.write_all(&l.to_le_bytes())?;
        }
        w.write_all(&[g.boundary().tag()])?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Field> {
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let dim = u32::from_le_bytes(b4) as usize;
        if !(1..=2).contains(&dim) {
            return Err(Error::Parse(format!("checkpoint dimension {dim}")));
        }
        let mut cells = Vec::with_capacity(dim);
        for _ in 0..dim {
            r.read_exact(&mut b8)?;
            cells.push(u64::from_le_bytes(b8) as usize);
        }
        let mut lengths = Vec::with_capacity(dim);
        for _ in 0..dim {
            r.read_exact(&mut b8)?;
            lengths.push(f64::from_le_bytes(b8));
        }
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        let grid = UniformGrid::new(&cells, &lengths, Boundary::from_tag(tag[0])?)?;
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            r.read_exact(&mut b8)?;
            values.push(f64::from_le_bytes(b8));
        }
        Field::new(grid, values)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cell_centers() {
        let g = UniformGrid::interval(4, 1.0, Boundary::Neumann).unwrap();
        let f = Field::sample(&g, |x| x[0]);
        assert_eq!(f.values(), &[0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn constant_sampling_and_norms() {
        let g = UniformGrid::interval(17, 1.0, Boundary::Neumann).unwrap();
        let f = Field::sample(&g, |_| 1.0);
        assert!(f.values().iter().all(|&v| v == 1.0));
        assert!((f.integrate() - 1.0).abs() < 1e-14);
        assert!((f.l2_norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cosine_has_zero_mean_and_known_norm() {
        for n in [16, 64, 256] {
            let g = UniformGrid::interval(n, 1.0, Boundary::Neumann).unwrap();
            let f = Field::sample(&g, |x| (PI * x[0]).cos());
            assert!(f.integrate().abs() < 1e-13);
            let h = 1.0 / n as f64;
            assert!((f.l2_norm() - 0.5f64.sqrt()).abs() < 10.0 * h * h);
        }
    }

    #[test]
    fn lp_norms() {
        let g = UniformGrid::square(8, 2.0, Boundary::Periodic).unwrap();
        let f = Field::sample(&g, |x| x[0] - x[1]);
        assert_eq!(f.lp_norm(2.0).unwrap(), f.l2_norm());
        assert!(f.lp_norm(0.5).is_err());
        let c = Field::constant(&g, 3.0);
        assert!((c.lp_norm(4.0).unwrap() - 3.0 * 4.0f64.powf(0.25)).abs() < 1e-12);
    }

    #[test]
    fn integration_is_second_order() {
        let mut errs = Vec::new();
        for n in [16, 32, 64] {
            let g = UniformGrid::interval(n, 1.0, Boundary::Neumann).unwrap();
            let f = Field::sample(&g, |x| x[0].exp());
            errs.push((f.integrate() - (1f64.exp() - 1.0)).abs());
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 2.0).abs() < 0.05, "order {order}");
        }
    }

    #[test]
    fn rejects_bad_grids_and_fields() {
        assert!(UniformGrid::new(&[4, 4, 4], &[1.0; 3], Boundary::Periodic).is_err());
        assert!(UniformGrid::new(&[0], &[1.0], Boundary::Periodic).is_err());
        assert!(UniformGrid::new(&[4], &[-1.0], Boundary::Periodic).is_err());
        let g = UniformGrid::interval(4, 1.0, Boundary::Periodic).unwrap();
        assert!(Field::new(g.clone(), vec![0.0; 3]).is_err());
        assert!(Field::new(g, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let g = UniformGrid::new(&[3, 5], &[1.0, 2.5], Boundary::Neumann).unwrap();
        let f = Field::sample(&g, |x| x[0] * 7.0 - x[1].sin());
        let mut buf = Vec::new();
        f.write_checkpoint(&mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 2 * 8 + 2 * 8 + 1 + 15 * 8);
        let back = Field::read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn distance_to_boundary() {
        let g = UniformGrid::square(4, 1.0, Boundary::Neumann).unwrap();
        let i = g.flat_index([1, 2]);
        assert_eq!(g.node(i), [0.375, 0.625]);
        assert!((g.distance_to_boundary(i) - 0.375).abs() < 1e-15);
    }
}
