//! The nonlocal operator restricted to a box,
//!
//! ```text
//! L_eps c(x) = int_Omega J_eps(|x - y|) (c(x) - c(y)) dy = a_eps(x) c(x) - (J_eps * c_bar)(x),
//! ```
//!
//! where `c_bar` is the zero extension of `c` and `a_eps = J_eps * 1_Omega` is
//! the degree function. On periodic grids `Omega` is the torus.
//!
//! Two independent discretizations share the midpoint weights `J(x_i - x_j) h^n`:
//! [`apply_direct`] loops over every node pair, [`NonlocalOperator::apply`]
//! uses a zero-padded FFT convolution with a precomputed kernel spectrum.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{dot, Boundary, Field, UniformGrid};
use crate::kernel::Kernel;
use crate::spectral::{for_each_line, Spectral};

/// Kernel support must span at least this many cells per radius before
/// [`NonlocalOperator::new`] warns.
pub const MIN_CELLS_PER_RADIUS: f64 = 4.0;

#[derive(Debug, Clone)]
struct Stencil {
    offsets: Vec<[isize; 2]>,
    weights: Vec<f64>,
    half_width: [usize; 2],
}

impl Stencil {
    fn new(kernel: &Kernel, grid: &UniformGrid) -> Self {
        let dim = grid.dim();
        let mut half_width = [0usize; 2];
        for (a, hw) in half_width.iter_mut().enumerate().take(dim) {
            *hw = (kernel.radius() / grid.spacing(a)).floor() as usize;
        }
        let vol = grid.cell_volume();
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        let (m0, m1) = (half_width[0] as isize, half_width[1] as isize);
        for i in -m0..=m0 {
            for j in -m1..=m1 {
                let x = [
                    i as f64 * grid.spacing(0),
                    if dim > 1 { j as f64 * grid.spacing(1) } else { 0.0 },
                ];
                let w = kernel.eval(&x) * vol;
                if w > 0.0 {
                    offsets.push([i, j]);
                    weights.push(w);
                }
            }
        }
        Self {
            offsets,
            weights,
            half_width,
        }
    }
}

struct PaddedConvolution {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    kernel_hat: Vec<Complex64>,
}

impl PaddedConvolution {
    fn new(stencil: &Stencil, grid: &UniformGrid) -> Self {
        let dim = grid.dim();
        let shape: Vec<usize> = (0..dim)
            .map(|a| match grid.boundary() {
                Boundary::Periodic => grid.cells()[a],
                Boundary::Neumann => (grid.cells()[a] + stencil.half_width[a] + 1).next_power_of_two(),
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward: Vec<_> = shape.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse: Vec<_> = shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect();

        let total: usize = shape.iter().product();
        let mut kernel_hat = vec![Complex64::new(0.0, 0.0); total];
        for (off, &w) in stencil.offsets.iter().zip(&stencil.weights) {
            let mut flat = 0usize;
            for a in 0..dim {
                let p = shape[a] as isize;
                flat = flat * shape[a] + off[a].rem_euclid(p) as usize;
            }
            kernel_hat[flat] += w;
        }
        for (a, plan) in forward.iter().enumerate() {
            for_each_line(&mut kernel_hat, &shape, a, |line| plan.process(line));
        }
        Self {
            shape,
            forward,
            inverse,
            kernel_hat,
        }
    }

    /// `(K * x_bar)` restricted to the grid.
    fn apply(&self, grid: &UniformGrid, x: &[f64]) -> Vec<f64> {
        let dim = grid.dim();
        let total: usize = self.shape.iter().product();
        let mut buf = vec![Complex64::new(0.0, 0.0); total];
        for (flat, &v) in x.iter().enumerate() {
            buf[self.padded_index(grid, flat)] = Complex64::new(v, 0.0);
        }
        for (a, plan) in self.forward.iter().enumerate().take(dim) {
            for_each_line(&mut buf, &self.shape, a, |line| plan.process(line));
        }
        buf.iter_mut().zip(&self.kernel_hat).for_each(|(b, k)| *b *= k);
        for (a, plan) in self.inverse.iter().enumerate().take(dim) {
            for_each_line(&mut buf, &self.shape, a, |line| plan.process(line));
        }
        let s = 1.0 / total as f64;
        (0..grid.len())
            .map(|flat| buf[self.padded_index(grid, flat)].re * s)
            .collect()
    }

    fn padded_index(&self, grid: &UniformGrid, flat: usize) -> usize {
        match grid.dim() {
            1 => flat,
            _ => {
                let idx = grid.multi_index(flat);
                idx[0] * self.shape[1] + idx[1]
            }
        }
    }
}

/// Precomputed `L_eps` on one grid: stencil weights, degree function and the
/// padded kernel spectrum. Immutable and `Sync`.
pub struct NonlocalOperator {
    kernel: Kernel,
    grid: UniformGrid,
    stencil: Stencil,
    degree: Vec<f64>,
    conv: PaddedConvolution,
}

impl std::fmt::Debug for NonlocalOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NonlocalOperator")
            .field("kernel", &self.kernel)
            .field("grid", &self.grid)
            .field("stencil_len", &self.stencil.weights.len())
            .finish()
    }
}

impl NonlocalOperator {
    pub fn new(kernel: &Kernel, grid: &UniformGrid) -> Result<Self> {
        check_compatible(kernel, grid)?;
        if grid.max_spacing() * MIN_CELLS_PER_RADIUS > kernel.radius() {
            log::warn!(
                "kernel radius {} is resolved by fewer than {} cells (h = {})",
                kernel.radius(),
                MIN_CELLS_PER_RADIUS,
                grid.max_spacing()
            );
        }
        let stencil = Stencil::new(kernel, grid);
        let conv = PaddedConvolution::new(&stencil, grid);
        let degree = match grid.boundary() {
            Boundary::Periodic => vec![stencil.weights.iter().sum(); grid.len()],
            Boundary::Neumann => conv.apply(grid, &vec![1.0; grid.len()]),
        };
        Ok(Self {
            kernel: *kernel,
            grid: grid.clone(),
            stencil,
            degree,
            conv,
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    /// `a_eps(x_i) = sum_j J(x_i - x_j) h^n`.
    pub fn degree(&self) -> Field {
        Field::from_parts(self.grid.clone(), self.degree.clone())
    }

    pub fn degree_max(&self) -> f64 {
        self.degree.iter().fold(0.0, |m, &v| m.max(v))
    }

    /// Sum of all stencil weights: the discrete full-space mass of `J_eps`.
    pub fn full_mass(&self) -> f64 {
        self.stencil.weights.iter().sum()
    }

    /// `L_eps c` via the padded FFT convolution.
    pub fn apply(&self, field: &Field) -> Result<Field> {
        self.grid.check_same(field.grid())?;
        Ok(Field::from_parts(
            self.grid.clone(),
            self.apply_values(field.values()),
        ))
    }

    pub(crate) fn apply_values(&self, c: &[f64]) -> Vec<f64> {
        let conv = self.conv.apply(&self.grid, c);
        c.iter()
            .zip(&self.degree)
            .zip(conv)
            .map(|((&c, &a), k)| a * c - k)
            .collect()
    }

    /// `E_eps(c) = 1/2 <L_eps c, c>`, which equals the quarter-weighted double
    /// integral of `J |c(x) - c(y)|^2`.
    pub fn energy(&self, field: &Field) -> Result<f64> {
        let lc = self.apply(field)?;
        Ok(0.5 * lc.inner(field)?)
    }

    pub(crate) fn energy_values(&self, c: &[f64]) -> f64 {
        0.5 * dot(&self.apply_values(c), c) * self.grid.cell_volume()
    }

    /// Discrete symbol `sum_m K_m (1 - cos(xi . m h))` of the convolution
    /// part extended by reflection (Neumann) or periodically.
    pub fn discrete_symbol(&self, xi: [f64; 2]) -> f64 {
        let h = [
            self.grid.spacing(0),
            if self.grid.dim() > 1 {
                self.grid.spacing(1)
            } else {
                0.0
            },
        ];
        self.stencil
            .offsets
            .iter()
            .zip(&self.stencil.weights)
            .map(|(m, &w)| {
                let t = xi[0] * m[0] as f64 * h[0] + xi[1] * m[1] as f64 * h[1];
                let s = (0.5 * t).sin();
                2.0 * w * s * s
            })
            .sum()
    }

    /// [`Self::discrete_symbol`] at every mode of `spectral`. On periodic grids
    /// these are the exact eigenvalues of `L_eps`; on Neumann grids they are
    /// the eigenvalues of the reflected operator, which differs from `L_eps`
    /// only within one kernel radius of the boundary.
    pub fn symbol_diagonal(&self, spectral: &Spectral) -> Result<Vec<f64>> {
        self.grid.check_same(spectral.grid())?;
        Ok(spectral
            .wavevectors()
            .par_iter()
            .map(|&xi| self.discrete_symbol(xi))
            .collect())
    }

    /// `||R_eps c||_{L^2(Omega')}` with
    /// `R_eps c(x) = int_{Omega^c} J_eps(|x - y|) (c(x) - c~(y)) dy`, where
    /// `c~` is the even reflection of `c` across each face and `Omega'` is the
    /// set of nodes at distance at least `margin` from the boundary.
    pub fn interior_remainder(&self, field: &Field, margin: f64) -> Result<f64> {
        self.grid.check_same(field.grid())?;
        let g = &self.grid;
        if g.boundary() != Boundary::Neumann {
            return Err(Error::InvalidArgument(
                "the interior remainder needs a bounded (Neumann) box".into(),
            ));
        }
        let half_min = g.lengths().iter().fold(f64::INFINITY, |m, &l| m.min(0.5 * l));
        if !(margin >= 0.0 && margin < half_min) {
            return Err(Error::InvalidArgument(format!(
                "margin {margin} leaves no interior (half side {half_min})"
            )));
        }
        let dim = g.dim();
        let cells = g.cells();
        let c = field.values();
        let sum_sq: f64 = (0..g.len())
            .into_par_iter()
            .filter(|&i| g.distance_to_boundary(i) >= margin)
            .map(|i| {
                let idx = g.multi_index(i);
                let mut r = 0.0;
                for (off, &w) in self.stencil.offsets.iter().zip(&self.stencil.weights) {
                    let mut outside = false;
                    let mut refl = [0usize; 2];
                    for a in 0..dim {
                        let j = idx[a] as isize + off[a];
                        let n = cells[a] as isize;
                        refl[a] = if j < 0 {
                            outside = true;
                            (-1 - j) as usize
                        } else if j >= n {
                            outside = true;
                            (2 * n - 1 - j) as usize
                        } else {
                            j as usize
                        };
                    }
                    if outside {
                        r += w * (c[i] - c[g.flat_index(refl)]);
                    }
                }
                r * r
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum();
        Ok((sum_sq * g.cell_volume()).sqrt())
    }
}

fn check_compatible(kernel: &Kernel, grid: &UniformGrid) -> Result<()> {
    if kernel.dim() != grid.dim() {
        return Err(Error::GridMismatch(format!(
            "{}-dimensional kernel on a {}-dimensional grid",
            kernel.dim(),
            grid.dim()
        )));
    }
    let limit = match grid.boundary() {
        Boundary::Periodic => 0.5,
        Boundary::Neumann => 1.0,
    };
    for &l in grid.lengths() {
        if kernel.radius() > limit * l {
            return Err(Error::InvalidArgument(format!(
                "kernel radius {} too large for a {} box of side {l}",
                kernel.radius(),
                grid.boundary()
            )));
        }
    }
    Ok(())
}

/// Degree function `a_eps` at every node.
pub fn degree_function(kernel: &Kernel, grid: &UniformGrid) -> Result<Field> {
    Ok(NonlocalOperator::new(kernel, grid)?.degree())
}

/// `L_eps c` by the O(N^2) double loop over node pairs; the reference oracle
/// for [`NonlocalOperator::apply`].
pub fn apply_direct(kernel: &Kernel, field: &Field) -> Result<Field> {
    let g = field.grid();
    check_compatible(kernel, g)?;
    let c = field.values();
    let vol = g.cell_volume();
    let nodes: Vec<[f64; 2]> = (0..g.len()).map(|i| g.node(i)).collect();
    let values = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for (j, xj) in nodes.iter().enumerate() {
                let d = separation(g, &nodes[i], xj);
                let w = kernel.eval(&d);
                if w > 0.0 {
                    acc += w * (c[i] - c[j]);
                }
            }
            acc * vol
        })
        .collect();
    Ok(Field::from_parts(g.clone(), values))
}

/// `L_eps c` through the padded FFT path.
pub fn apply_fft(kernel: &Kernel, field: &Field) -> Result<Field> {
    NonlocalOperator::new(kernel, field.grid())?.apply(field)
}

/// `E_eps(c) = 1/2 <L_eps c, c>`.
pub fn nonlocal_energy(kernel: &Kernel, field: &Field) -> Result<f64> {
    NonlocalOperator::new(kernel, field.grid())?.energy(field)
}

/// Brute-force `sum_i sum_j J(x_i - x_j) |c_i - c_j|^2 h^{2n}`, the discrete
/// double integral `int int J |c(x) - c(y)|^2 dy dx`.
pub fn pair_sum(kernel: &Kernel, field: &Field) -> Result<f64> {
    let g = field.grid();
    check_compatible(kernel, g)?;
    let c = field.values();
    let vol = g.cell_volume();
    let nodes: Vec<[f64; 2]> = (0..g.len()).map(|i| g.node(i)).collect();
    let total: f64 = (0..g.len())
        .into_par_iter()
        .map(|i| {
            nodes
                .iter()
                .enumerate()
                .map(|(j, xj)| {
                    let d = separation(g, &nodes[i], xj);
                    let diff = c[i] - c[j];
                    kernel.eval(&d) * diff * diff
                })
                .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(total * vol * vol)
}

/// `R_eps` over the sub-box at distance `margin` from the boundary.
pub fn interior_remainder(kernel: &Kernel, field: &Field, margin: f64) -> Result<f64> {
    NonlocalOperator::new(kernel, field.grid())?.interior_remainder(field, margin)
}

fn separation(g: &UniformGrid, a: &[f64; 2], b: &[f64; 2]) -> [f64; 2] {
    let mut d = [0.0; 2];
    for k in 0..g.dim() {
        d[k] = a[k] - b[k];
        if g.boundary() == Boundary::Periodic {
            let l = g.lengths()[k];
            d[k] -= l * (d[k] / l).round();
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{MollifierSpec, Profile};
    use std::f64::consts::PI;

    fn kernel(dim: usize, eps: f64) -> Kernel {
        MollifierSpec::new(dim, Profile::Poly23)
            .unwrap()
            .at_scale(eps)
            .unwrap()
    }

    fn wiggle(x: &[f64]) -> f64 {
        (7.0 * x[0]).sin() + x[0] * x[0] + x.get(1).map_or(0.0, |y| (3.0 * y).cos() * x[0])
    }

    #[test]
    fn constants_are_annihilated() {
        for b in [Boundary::Neumann, Boundary::Periodic] {
            let g = UniformGrid::interval(128, 1.0, b).unwrap();
            let k = kernel(1, 0.1);
            let f = Field::constant(&g, 3.0);
            let direct = apply_direct(&k, &f).unwrap();
            assert_eq!(direct.max_abs(), 0.0);
            let fft = apply_fft(&k, &f).unwrap();
            assert!(fft.max_abs() < 1e-10);
        }
    }

    #[test]
    fn degree_function_profile() {
        let g = UniformGrid::interval(400, 1.0, Boundary::Neumann).unwrap();
        let k = kernel(1, 0.05);
        let a = degree_function(&k, &g).unwrap();
        let full = k.total_mass();
        let mid = g.len() / 2;
        // interior nodes see the whole kernel: the midpoint sum of a C^2 bump
        assert!((a.values()[mid] - full).abs() < 1e-6 * full);
        assert!(a.values()[0] < 0.6 * full);
        // non-decreasing towards the center on the left half
        for w in a.values()[..mid].windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * full);
        }
        let gp = UniformGrid::interval(400, 1.0, Boundary::Periodic).unwrap();
        let ap = degree_function(&k, &gp).unwrap();
        let v0 = ap.values()[0];
        assert!(ap.values().iter().all(|&v| v == v0));
    }

    #[test]
    fn fft_matches_direct_1d_and_2d() {
        for b in [Boundary::Neumann, Boundary::Periodic] {
            let g = UniformGrid::interval(200, 1.0, b).unwrap();
            let f = Field::sample(&g, wiggle);
            let k = kernel(1, 0.1);
            let d = apply_direct(&k, &f).unwrap();
            let q = apply_fft(&k, &f).unwrap();
            assert!(d.sub(&q).unwrap().l2_norm() <= 1e-11 * d.l2_norm());

            let g2 = UniformGrid::new(&[24, 20], &[1.0, 0.8], b).unwrap();
            let f2 = Field::sample(&g2, wiggle);
            let k2 = kernel(2, 0.2);
            let d2 = apply_direct(&k2, &f2).unwrap();
            let q2 = apply_fft(&k2, &f2).unwrap();
            assert!(d2.sub(&q2).unwrap().l2_norm() <= 1e-11 * d2.l2_norm());
        }
    }

    #[test]
    fn mean_is_annihilated() {
        let g = UniformGrid::interval(300, 1.0, Boundary::Neumann).unwrap();
        let f = Field::sample(&g, wiggle);
        let lc = apply_direct(&kernel(1, 0.07), &f).unwrap();
        assert!(lc.integrate().abs() < 1e-10 * lc.l2_norm());
    }

    #[test]
    fn linear_field_on_torus() {
        // a linear ramp is not periodic, so use a field that is linear on the
        // stencil's reach around each node: the constant-gradient part of a
        // slowly varying sine. Odd first moment kills the gradient term exactly.
        let g = UniformGrid::interval(512, 1.0, Boundary::Periodic).unwrap();
        let k = kernel(1, 0.05);
        let f = Field::sample(&g, |x| (2.0 * PI * x[0]).sin());
        let lc = apply_fft(&k, &f).unwrap();
        // L c = sigma(2 pi) c with sigma close to (2 pi)^2, no first-order term
        let sigma = NonlocalOperator::new(&k, &g)
            .unwrap()
            .discrete_symbol([2.0 * PI, 0.0]);
        assert!(lc.sub(&f.scale(sigma)).unwrap().max_abs() < 1e-9 * sigma);
    }

    #[test]
    fn symbol_diagonal_is_exact_on_torus() {
        let g = UniformGrid::square(32, 1.0, Boundary::Periodic).unwrap();
        let k = kernel(2, 0.2);
        let op = NonlocalOperator::new(&k, &g).unwrap();
        let sp = Spectral::new(&g);
        let diag = op.symbol_diagonal(&sp).unwrap();
        let f = Field::sample(&g, wiggle);
        let via_symbol = sp.apply_diagonal(f.values(), &diag);
        let via_op = op.apply(&f).unwrap();
        for (a, b) in via_symbol.iter().zip(via_op.values()) {
            assert!((a - b).abs() < 1e-9 * op.full_mass());
        }
    }

    #[test]
    fn symbol_diagonal_matches_reflection_on_neumann() {
        // for a Neumann eigenmode supported away from the boundary layer the
        // two operators agree in the interior
        let g = UniformGrid::interval(256, 1.0, Boundary::Neumann).unwrap();
        let k = kernel(1, 0.1);
        let op = NonlocalOperator::new(&k, &g).unwrap();
        let f = Field::sample(&g, |x| (3.0 * PI * x[0]).cos());
        let lc = op.apply(&f).unwrap();
        let sigma = op.discrete_symbol([3.0 * PI, 0.0]);
        for i in 0..g.len() {
            if g.distance_to_boundary(i) > k.radius() {
                assert!((lc.values()[i] - sigma * f.values()[i]).abs() < 1e-9 * sigma);
            }
        }
    }

    #[test]
    fn energy_identity_against_pair_sum() {
        let g = UniformGrid::interval(32, 1.0, Boundary::Neumann).unwrap();
        let f = Field::sample(&g, wiggle);
        let k = kernel(1, 0.3);
        let lc = apply_direct(&k, &f).unwrap();
        let form = lc.inner(&f).unwrap();
        let pairs = pair_sum(&k, &f).unwrap();
        assert!((form / pairs - 0.5).abs() < 1e-12);
        let e = nonlocal_energy(&k, &f).unwrap();
        assert!((e - 0.25 * pairs).abs() < 1e-11 * pairs);
    }

    #[test]
    fn remainder_edge_cases() {
        let g = UniformGrid::interval(400, 1.0, Boundary::Neumann).unwrap();
        let k = kernel(1, 0.1);
        let f = Field::sample(&g, |x| (PI * x[0]).cos());
        assert_eq!(interior_remainder(&k, &f, 0.1001).unwrap(), 0.0);
        assert_eq!(
            interior_remainder(&k, &Field::constant(&g, 2.0), 0.0).unwrap(),
            0.0
        );
        assert!(interior_remainder(&k, &f, 0.05).unwrap() > 0.0);
        assert!(interior_remainder(&k, &f, 0.5).is_err());
        let gp = UniformGrid::interval(400, 1.0, Boundary::Periodic).unwrap();
        assert!(interior_remainder(&k, &Field::zeros(&gp), 0.2).is_err());
    }

    #[test]
    fn rejects_oversized_kernels() {
        let g = UniformGrid::interval(64, 1.0, Boundary::Periodic).unwrap();
        assert!(NonlocalOperator::new(&kernel(1, 0.6), &g).is_err());
        assert!(NonlocalOperator::new(&kernel(2, 0.1), &g).is_err());
    }
}
