//! Orthogonal transforms that diagonalize the Laplacian on a grid: the DFT for
//! periodic boxes and the DCT-II for cell-centered Neumann boxes.
//!
//! Every diagonal operator in the crate (Laplacian, its inverse, Sobolev
//! weights, implicit solver updates) goes through [`Spectral`], so norms and
//! solvers share one transform stack.

use std::f64::consts::PI;
use std::sync::Arc;

use rustdct::{DctPlanner, TransformType2And3};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::{Boundary, Field, UniformGrid};

/// Transform coefficients; real for Neumann grids, complex for periodic ones.
#[derive(Debug, Clone)]
pub enum Coeffs {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl Coeffs {
    pub fn len(&self) -> usize {
        match self {
            Coeffs::Real(v) => v.len(),
            Coeffs::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn norm_sqr(&self, k: usize) -> f64 {
        match self {
            Coeffs::Real(v) => v[k] * v[k],
            Coeffs::Complex(v) => v[k].norm_sqr(),
        }
    }

    pub fn scale_each(&mut self, diag: &[f64]) {
        match self {
            Coeffs::Real(v) => v.iter_mut().zip(diag).for_each(|(c, d)| *c *= d),
            Coeffs::Complex(v) => v.iter_mut().zip(diag).for_each(|(c, d)| *c *= d),
        }
    }
}

enum AxisPlan {
    Fourier {
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
    },
    Cosine(Arc<dyn TransformType2And3<f64>>),
}

/// Transform plans and per-mode data for one grid.
pub struct Spectral {
    grid: UniformGrid,
    plans: Vec<AxisPlan>,
    wavevectors: Vec<[f64; 2]>,
    eigenvalues: Vec<f64>,
    weights: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: &UniformGrid) -> Self {
        let dim = grid.dim();
        let mut fft = FftPlanner::new();
        let mut dct = DctPlanner::new();
        let plans = grid
            .cells()
            .iter()
            .map(|&n| match grid.boundary() {
                Boundary::Periodic => AxisPlan::Fourier {
                    forward: fft.plan_fft_forward(n),
                    inverse: fft.plan_fft_inverse(n),
                },
                Boundary::Neumann => AxisPlan::Cosine(dct.plan_dct2(n)),
            })
            .collect();

        // per-axis wavenumbers and Parseval weights
        let axis_data: Vec<(Vec<f64>, Vec<f64>)> = (0..dim)
            .map(|a| {
                let n = grid.cells()[a];
                let l = grid.lengths()[a];
                let base = l / (n * n) as f64;
                (0..n)
                    .map(|j| match grid.boundary() {
                        Boundary::Periodic => {
                            let kappa = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                            (2.0 * PI * kappa / l, base)
                        }
                        Boundary::Neumann => (PI * j as f64 / l, if j == 0 { base } else { 2.0 * base }),
                    })
                    .unzip()
            })
            .collect();

        let len = grid.len();
        let mut wavevectors = Vec::with_capacity(len);
        let mut weights = Vec::with_capacity(len);
        for flat in 0..len {
            let idx = grid.multi_index(flat);
            let mut xi = [0.0; 2];
            let mut w = 1.0;
            for a in 0..dim {
                xi[a] = axis_data[a].0[idx[a]];
                w *= axis_data[a].1[idx[a]];
            }
            wavevectors.push(xi);
            weights.push(w);
        }
        let eigenvalues = wavevectors.iter().map(|x| x[0] * x[0] + x[1] * x[1]).collect();
        Self {
            grid: grid.clone(),
            plans,
            wavevectors,
            eigenvalues,
            weights,
        }
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    /// Eigenvalues `|xi_k|^2` of `-Delta` for every coefficient slot.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Angular wave vector of each coefficient slot.
    pub fn wavevectors(&self) -> &[[f64; 2]] {
        &self.wavevectors
    }

    /// Parseval weights: `||v||_{L^2}^2 = sum_k weights[k] |c_k|^2`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn forward(&self, values: &[f64]) -> Coeffs {
        assert_eq!(values.len(), self.grid.len());
        let shape = self.grid.cells();
        match self.grid.boundary() {
            Boundary::Neumann => {
                let mut data = values.to_vec();
                for (axis, plan) in self.plans.iter().enumerate() {
                    if let AxisPlan::Cosine(p) = plan {
                        for_each_line(&mut data, shape, axis, |line| p.process_dct2(line));
                    }
                }
                Coeffs::Real(data)
            }
            Boundary::Periodic => {
                let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                for (axis, plan) in self.plans.iter().enumerate() {
                    if let AxisPlan::Fourier { forward, .. } = plan {
                        for_each_line(&mut data, shape, axis, |line| forward.process(line));
                    }
                }
                Coeffs::Complex(data)
            }
        }
    }

    pub fn inverse(&self, coeffs: Coeffs) -> Vec<f64> {
        let shape = self.grid.cells();
        match coeffs {
            Coeffs::Real(mut data) => {
                for (axis, plan) in self.plans.iter().enumerate() {
                    if let AxisPlan::Cosine(p) = plan {
                        let s = 2.0 / shape[axis] as f64;
                        for_each_line(&mut data, shape, axis, |line| {
                            p.process_dct3(line);
                            line.iter_mut().for_each(|v| *v *= s);
                        });
                    }
                }
                data
            }
            Coeffs::Complex(mut data) => {
                for (axis, plan) in self.plans.iter().enumerate() {
                    if let AxisPlan::Fourier { inverse, .. } = plan {
                        inverse_lines(&mut data, shape, axis, inverse.as_ref());
                    }
                }
                let s = 1.0 / self.grid.len() as f64;
                data.into_iter().map(|c| c.re * s).collect()
            }
        }
    }

    /// `T^-1 diag(d) T v`.
    pub fn apply_diagonal(&self, values: &[f64], diag: &[f64]) -> Vec<f64> {
        assert_eq!(diag.len(), self.grid.len());
        let mut c = self.forward(values);
        c.scale_each(diag);
        self.inverse(c)
    }

    /// Multiplier that depends on the eigenvalue only.
    pub fn apply_symbol<F: Fn(f64) -> f64>(&self, values: &[f64], symbol: F) -> Vec<f64> {
        let diag: Vec<f64> = self.eigenvalues.iter().map(|&l| symbol(l)).collect();
        self.apply_diagonal(values, &diag)
    }

    /// `sum_k w(lambda_k) weights_k |c_k|^2`.
    pub fn quadratic_form<F: Fn(f64) -> f64>(&self, values: &[f64], w: F) -> f64 {
        let c = self.forward(values);
        (0..c.len())
            .map(|k| w(self.eigenvalues[k]) * self.weights[k] * c.norm_sqr(k))
            .sum()
    }

    pub fn field(&self, values: Vec<f64>) -> Field {
        Field::from_parts(self.grid.clone(), values)
    }
}

fn inverse_lines(data: &mut [Complex64], shape: &[usize], axis: usize, plan: &dyn Fft<f64>) {
    for_each_line(data, shape, axis, |line| plan.process(line));
}

/// Call `f` on every 1D line of a row-major array along `axis`.
pub(crate) fn for_each_line<T: Copy + Default, F: FnMut(&mut [T])>(
    data: &mut [T],
    shape: &[usize],
    axis: usize,
    mut f: F,
) {
    let n = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    if inner == 1 {
        for line in data.chunks_exact_mut(n) {
            f(line);
        }
        return;
    }
    let mut buf = vec![T::default(); n];
    for o in 0..outer {
        for i in 0..inner {
            let base = o * n * inner + i;
            for (j, b) in buf.iter_mut().enumerate() {
                *b = data[base + j * inner];
            }
            f(&mut buf);
            for (j, b) in buf.iter().enumerate() {
                data[base + j * inner] = *b;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grids() -> Vec<UniformGrid> {
        vec![
            UniformGrid::interval(16, 1.0, Boundary::Neumann).unwrap(),
            UniformGrid::interval(15, 2.0, Boundary::Periodic).unwrap(),
            UniformGrid::new(&[8, 6], &[1.0, 0.5], Boundary::Neumann).unwrap(),
            UniformGrid::new(&[8, 6], &[1.0, 0.5], Boundary::Periodic).unwrap(),
        ]
    }

    #[test]
    fn round_trip_is_identity() {
        for g in grids() {
            let s = Spectral::new(&g);
            let v: Vec<f64> = (0..g.len()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
            let back = s.inverse(s.forward(&v));
            for (a, b) in v.iter().zip(&back) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parseval_weights() {
        for g in grids() {
            let s = Spectral::new(&g);
            let f = Field::sample(&g, |x| (3.0 * x[0]).sin() + x.iter().sum::<f64>());
            let q = s.quadratic_form(f.values(), |_| 1.0);
            assert!((q.sqrt() - f.l2_norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn lines_along_slow_axis() {
        let mut data: Vec<usize> = (0..6).collect();
        let mut seen = Vec::new();
        for_each_line(&mut data, &[2, 3], 0, |line| seen.push(line.to_vec()));
        assert_eq!(seen, vec![vec![0, 3], vec![1, 4], vec![2, 5]]);
    }
}
