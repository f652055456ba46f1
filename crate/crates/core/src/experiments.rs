//! Convergence studies: each one turns a family of kernels `J_eps` into an
//! `(eps, error)` table and fits a log-log slope.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Boundary, Field, UniformGrid};
use crate::kernel::{Kernel, MollifierSpec};
use crate::local_op::{dirichlet_energy, laplacian};
use crate::nonlocal_op::{apply_direct, pair_sum, NonlocalOperator};
use crate::norms::{hminus1_norm, sobolev_norm};
use crate::potentials::Potential;
use crate::solvers::{Equation, Solver, SolverConfig, TrajectoryRecord};
use crate::spectral::Spectral;

/// Relative agreement expected between the two operator implementations.
pub const ORACLE_TOL: f64 = 1e-10;
/// Errors below `FLOOR_FACTOR * ORACLE_TOL * scale` are excluded from fits.
pub const FLOOR_FACTOR: f64 = 10.0;
/// Smallest admissible `eps` in units of the grid spacing.
pub const MIN_CELLS_PER_EPS: f64 = 8.0;
/// Default number of reference steps per nonlocal step in solution studies.
pub const REFERENCE_REFINEMENT: usize = 10;

pub const DEFAULT_EPSILONS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
pub const SOLUTION_EPSILONS: [f64; 4] = [0.16, 0.08, 0.04, 0.02];

/// Closed interval of accepted slopes; `hi` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub const HALF: Band = Band { lo: 0.35, hi: 0.8 };
    pub const HALF_SHARP: Band = Band { lo: 0.4, hi: 0.7 };
    pub const ONE: Band = Band {
        lo: 0.9,
        hi: f64::INFINITY,
    };
    pub const FLAT: Band = Band {
        lo: 0.85,
        hi: f64::INFINITY,
    };

    pub fn contains(&self, slope: f64) -> bool {
        slope >= self.lo && slope <= self.hi
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.hi.is_infinite() {
            write!(f, ">= {}", self.lo)
        } else {
            write!(f, "[{}, {}]", self.lo, self.hi)
        }
    }
}

/// Parses `lo:hi` or `lo:` (unbounded above).
impl FromStr for Band {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("band must look like lo:hi, got {s:?}")))?;
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad band bound {v:?}")))
        };
        let lo = num(lo)?;
        let hi = if hi.trim().is_empty() {
            f64::INFINITY
        } else {
            num(hi)?
        };
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::Parse(format!("empty band {s:?}")));
        }
        Ok(Band { lo, hi })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePoint {
    pub epsilon: f64,
    pub error: f64,
    pub included: bool,
}

/// `(eps, error)` pairs sorted by decreasing `eps`, with the least-squares
/// fit `ln error = slope ln eps + intercept` over the included points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTable {
    pub label: String,
    pub points: Vec<RatePoint>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl RateTable {
    pub fn epsilons(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.epsilon).collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.error).collect()
    }

    /// Errors strictly decrease as `eps` decreases.
    pub fn strictly_decreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].error < w[0].error)
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = label.to_string();
        self
    }
}

/// Least-squares slope over all pairs.
pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<RateTable> {
    fit_with_floor(pairs, 0.0)
}

/// Least-squares slope over the pairs whose error is at least `floor`.
///
/// Fails with [`Error::ExactAgreement`] when every error is below the floor
/// and with `InvalidArgument` when fewer than three points remain.
pub fn fit_with_floor(pairs: &[(f64, f64)], floor: f64) -> Result<RateTable> {
    if pairs.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "a rate fit needs at least 3 points, got {}",
            pairs.len()
        )));
    }
    let mut sorted = pairs.to_vec();
    for &(e, err) in &sorted {
        if !(e > 0.0 && e.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon {e} must be positive")));
        }
        if !(err >= 0.0 && err.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "error {err} must be finite and nonnegative"
            )));
        }
        if floor <= 0.0 && err == 0.0 {
            return Err(Error::InvalidArgument(
                "zero error cannot enter a log-log fit".into(),
            ));
        }
    }
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidArgument("epsilons must be distinct".into()));
    }
    let points: Vec<RatePoint> = sorted
        .iter()
        .map(|&(epsilon, error)| RatePoint {
            epsilon,
            error,
            included: error >= floor && error > 0.0,
        })
        .collect();
    let used: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.included)
        .map(|p| (p.epsilon.ln(), p.error.ln()))
        .collect();
    if used.is_empty() {
        return Err(Error::ExactAgreement { floor });
    }
    if used.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "only {} points above the error floor {floor:e}",
            used.len()
        )));
    }
    let n = used.len() as f64;
    let mx = used.iter().map(|p| p.0).sum::<f64>() / n;
    let my = used.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = used.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = used.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(RateTable {
        label: String::new(),
        points,
        slope,
        intercept,
        r_squared,
    })
}

/// Smooth test functions for the operator and energy studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TestFunction {
    /// `sin(2 pi x) + 1/2 sin(4 pi x)`, periodic on the unit interval.
    SinPeriodic,
    /// `cos(pi x)`: zero normal derivative but nonzero curvature at the ends.
    CosPi,
    /// `cos(2 pi x)`.
    Cos2Pi,
    /// `cos(2 pi x)` times a smooth bump supported in `[0.25, 0.75]`; flat at
    /// the boundary.
    Flat,
}

impl TestFunction {
    pub const ALL: [TestFunction; 4] = [
        TestFunction::SinPeriodic,
        TestFunction::CosPi,
        TestFunction::Cos2Pi,
        TestFunction::Flat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestFunction::SinPeriodic => "sin-periodic",
            TestFunction::CosPi => "cospix",
            TestFunction::Cos2Pi => "cos2pix",
            TestFunction::Flat => "flat",
        }
    }

    /// Value at `x`; in 2D the function is the product over axes.
    pub fn eval(self, x: &[f64]) -> f64 {
        x.iter().map(|&t| self.eval_1d(t)).product()
    }

    fn eval_1d(self, x: f64) -> f64 {
        match self {
            TestFunction::SinPeriodic => (2.0 * PI * x).sin() + 0.5 * (4.0 * PI * x).sin(),
            TestFunction::CosPi => (PI * x).cos(),
            TestFunction::Cos2Pi => (2.0 * PI * x).cos(),
            TestFunction::Flat => (2.0 * PI * x).cos() * bump(x),
        }
    }

    pub fn sample(self, grid: &UniformGrid) -> Result<Field> {
        if grid.lengths().iter().any(|&l| (l - 1.0).abs() > 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "test function {} lives on the unit box",
                self.name()
            )));
        }
        if self == TestFunction::SinPeriodic && grid.boundary() != Boundary::Periodic {
            return Err(Error::InvalidArgument(
                "sin-periodic has a nonzero normal derivative; use a periodic grid".into(),
            ));
        }
        Ok(Field::sample(grid, |x| self.eval(x)))
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TestFunction::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "test function",
                name: s.to_string(),
            })
    }
}

/// `exp(1 - 1/(1 - s^2))` with `s = (x - 1/2)/(1/4)`; equals 1 at the center.
pub fn bump(x: f64) -> f64 {
    let s = (x - 0.5) / 0.25;
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// Smooth Neumann-compatible initial data: `0.4 cos(pi x) + 0.1 cos(2 pi x)`
/// along the first axis, plus `0.1 cos(pi y)` in 2D. Every mode lies in the
/// stable band of the double well with `K = 1` on the unit box.
pub fn smooth_initial(grid: &UniformGrid) -> Field {
    Field::sample(grid, |x| {
        let base = 0.4 * (PI * x[0]).cos() + 0.1 * (2.0 * PI * x[0]).cos();
        base + x.get(1).map_or(0.0, |y| 0.1 * (PI * y).cos())
    })
}

/// Independent uniform values in `[-amplitude, amplitude]` from a seeded
/// ChaCha stream.
pub fn random_field(grid: &UniformGrid, seed: u64, amplitude: f64) -> Field {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.len())
        .map(|_| amplitude * rng.gen_range(-1.0..=1.0))
        .collect();
    Field::from_parts(grid.clone(), values)
}

/// Rejects `eps` the grid cannot resolve.
pub fn check_resolution(grid: &UniformGrid, epsilons: &[f64]) -> Result<()> {
    let h = grid.max_spacing();
    let smallest = epsilons.iter().cloned().fold(f64::INFINITY, f64::min);
    if smallest < MIN_CELLS_PER_EPS * h {
        return Err(Error::Unresolved {
            radius: smallest,
            spacing: h,
        });
    }
    Ok(())
}

fn kernels(mollifier: &MollifierSpec, epsilons: &[f64]) -> Result<Vec<Kernel>> {
    epsilons.iter().map(|&e| mollifier.at_scale(e)).collect()
}

/// `max_xi |sigma_eps(xi) - |xi|^2| / |xi|^3` over `xi in {+-1, .., +-lattice_max}^n`.
pub fn symbol_error(kernel: &Kernel, lattice_max: i32) -> f64 {
    let axis: Vec<f64> = (1..=lattice_max).flat_map(|k| [k as f64, -(k as f64)]).collect();
    let points: Vec<[f64; 2]> = match kernel.dim() {
        1 => axis.iter().map(|&a| [a, 0.0]).collect(),
        _ => axis
            .iter()
            .flat_map(|&a| axis.iter().map(move |&b| [a, b]))
            .collect(),
    };
    points
        .par_iter()
        .map(|xi| {
            let xi = &xi[..kernel.dim()];
            let n2: f64 = xi.iter().map(|v| v * v).sum();
            (kernel.fourier_symbol(xi) - n2).abs() / n2.powf(1.5)
        })
        .reduce(|| 0.0, f64::max)
}

pub fn symbol_study(mollifier: &MollifierSpec, lattice_max: i32, epsilons: &[f64]) -> Result<RateTable> {
    let ks = kernels(mollifier, epsilons)?;
    let pairs: Vec<(f64, f64)> = ks
        .par_iter()
        .map(|k| (k.epsilon(), symbol_error(k, lattice_max)))
        .collect();
    Ok(fit_rate(&pairs)?.with_label("symbol"))
}

/// `||L_eps c + Delta c||_{L^2}` for every `eps`.
pub fn operator_rate_study(
    grid: &UniformGrid,
    mollifier: &MollifierSpec,
    field: &Field,
    epsilons: &[f64],
) -> Result<RateTable> {
    check_resolution(grid, epsilons)?;
    grid.check_same(field.grid())?;
    let spectral = Spectral::new(grid);
    let lap = laplacian(&spectral, field)?;
    let ks = kernels(mollifier, epsilons)?;
    let pairs = ks
        .par_iter()
        .map(|k| {
            let lc = NonlocalOperator::new(k, grid)?.apply(field)?;
            Ok((k.epsilon(), lc.add(&lap)?.l2_norm()))
        })
        .collect::<Result<Vec<_>>>()?;
    let floor = FLOOR_FACTOR * ORACLE_TOL * lap.l2_norm();
    Ok(fit_with_floor(&pairs, floor)?.with_label("operator"))
}

/// `|E_eps(c) - 1/2 int |grad c|^2|` for every `eps`, plus the limit value.
pub fn energy_rate_study(
    grid: &UniformGrid,
    mollifier: &MollifierSpec,
    field: &Field,
    epsilons: &[f64],
) -> Result<(RateTable, f64)> {
    check_resolution(grid, epsilons)?;
    let spectral = Spectral::new(grid);
    let target = dirichlet_energy(&spectral, field)?;
    let ks = kernels(mollifier, epsilons)?;
    let pairs = ks
        .par_iter()
        .map(|k| {
            let e = NonlocalOperator::new(k, grid)?.energy(field)?;
            Ok((k.epsilon(), (e - target).abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    let floor = FLOOR_FACTOR * ORACLE_TOL * target.abs().max(field.l2_norm().powi(2));
    Ok((fit_with_floor(&pairs, floor)?.with_label("energy"), target))
}

/// Interior remainder at `margin = margin_factor * eps R` for every `eps`.
/// Points where the remainder vanishes identically are kept with error 0 and
/// excluded from the fit.
pub fn remainder_study(
    grid: &UniformGrid,
    mollifier: &MollifierSpec,
    field: &Field,
    epsilons: &[f64],
    margin_factor: f64,
) -> Result<Vec<(f64, f64)>> {
    check_resolution(grid, epsilons)?;
    let ks = kernels(mollifier, epsilons)?;
    ks.par_iter()
        .map(|k| {
            let r = NonlocalOperator::new(k, grid)?.interior_remainder(field, margin_factor * k.radius())?;
            Ok((k.epsilon(), r))
        })
        .collect()
}

/// Relative L2 gap between the FFT and direct operator applications.
pub fn oracle_gap(kernel: &Kernel, field: &Field) -> Result<f64> {
    let direct = apply_direct(kernel, field)?;
    let fast = NonlocalOperator::new(kernel, field.grid())?.apply(field)?;
    Ok(direct.sub(&fast)?.l2_norm() / direct.l2_norm().max(f64::MIN_POSITIVE))
}

/// Both sides of the quadratic-form identity for the nonlocal energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactorAudit {
    /// `<L_eps u, u>`.
    pub quadratic_form: f64,
    /// `int int J_eps |u(x) - u(y)|^2`.
    pub double_integral: f64,
    /// `quadratic_form / double_integral`.
    pub ratio: f64,
}

pub fn factor_audit(kernel: &Kernel, field: &Field) -> Result<FactorAudit> {
    let form = apply_direct(kernel, field)?.inner(field)?;
    let double_integral = pair_sum(kernel, field)?;
    if double_integral <= 0.0 {
        return Err(Error::InvalidArgument(
            "the audit needs a non-constant field".into(),
        ));
    }
    Ok(FactorAudit {
        quadratic_form: form,
        double_integral,
        ratio: form / double_integral,
    })
}

/// Protocol for comparing nonlocal trajectories against a local reference.
#[derive(Debug, Clone)]
pub struct SolutionStudy {
    /// The nonlocal equation; the reference solves its local limit.
    pub equation: Equation,
    pub config: SolverConfig,
    pub potential: Potential,
    pub mollifier: MollifierSpec,
    pub epsilons: Vec<f64>,
    pub initial: Field,
    /// Reference steps per nonlocal step.
    pub reference_refinement: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionReport {
    /// `sup_t ||u||_{H^-1}`.
    pub hminus1_sup: RateTable,
    /// `(int ||u||^2 dt)^{1/2}`.
    pub l2_spacetime: RateTable,
    /// `sup_t ||u||_{L^2}`.
    pub l2_sup: RateTable,
    /// `sup_t ||u||_{H^-1/2}`.
    pub hminus_half_sup: RateTable,
    /// `(int ||u||_{L^p}^2 dt)^{1/2}` for p = 2 and 4.
    pub lp_l2time: Vec<(f64, RateTable)>,
    /// `max_t ||c||_{H^3}` of the reference trajectory.
    pub reference_h3_max: f64,
    /// `sup_t ||c||_{L^2}` of the reference, the scale of the errors.
    pub reference_l2_max: f64,
}

impl SolutionReport {
    pub fn tables(&self) -> Vec<&RateTable> {
        let mut v = vec![
            &self.hminus1_sup,
            &self.l2_spacetime,
            &self.l2_sup,
            &self.hminus_half_sup,
        ];
        v.extend(self.lp_l2time.iter().map(|(_, t)| t));
        v
    }
}

/// Recorded states of one run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Field>,
    pub record: TrajectoryRecord,
}

impl SolutionStudy {
    fn reference_config(&self) -> SolverConfig {
        let mut cfg = self.config.clone();
        let r = self.reference_refinement.max(1);
        cfg.tau = self.config.effective_tau() / r as f64;
        cfg.record_every = self.config.record_every * r;
        cfg.keep_states = true;
        cfg
    }

    /// Local reference trajectory sampled at the study's record times.
    pub fn reference(&self) -> Result<Trajectory> {
        let solver = Solver::new(
            self.equation.local_limit(),
            self.initial.grid(),
            self.reference_config(),
            self.potential,
            None,
        )?;
        trajectory(&solver, &self.initial)
    }

    pub fn nonlocal(&self, epsilon: f64) -> Result<Trajectory> {
        let kernel = self.mollifier.at_scale(epsilon)?;
        let mut cfg = self.config.clone();
        cfg.keep_states = true;
        let solver = Solver::new(
            self.equation,
            self.initial.grid(),
            cfg,
            self.potential,
            Some(&kernel),
        )?;
        trajectory(&solver, &self.initial)
    }

    pub fn run(&self) -> Result<SolutionReport> {
        Ok(self.run_full()?.report)
    }

    /// Like [`Self::run`], keeping the reference and the per-`eps`
    /// trajectories (in the order of `epsilons`).
    pub fn run_full(&self) -> Result<SolutionRun> {
        if !self.equation.is_nonlocal() {
            return Err(Error::InvalidArgument(format!(
                "solution studies compare a nonlocal equation with its limit, got {}",
                self.equation
            )));
        }
        check_resolution(self.initial.grid(), &self.epsilons)?;
        let (reference, runs) = rayon::join(
            || self.reference(),
            || {
                self.epsilons
                    .par_iter()
                    .map(|&e| self.nonlocal(e))
                    .collect::<Result<Vec<_>>>()
            },
        );
        let reference = reference?;
        let runs = runs?;
        let spectral = Spectral::new(self.initial.grid());

        let mut h3 = 0.0f64;
        let mut l2max = 0.0f64;
        for s in &reference.states {
            h3 = h3.max(sobolev_norm(&spectral, s, 3.0)?);
            l2max = l2max.max(s.l2_norm());
        }

        let mut rows: Vec<[f64; 6]> = Vec::new();
        for run in &runs {
            check_times(&reference.times, &run.times)?;
            let mut sup_h1 = 0.0f64;
            let mut sup_l2 = 0.0f64;
            let mut sup_half = 0.0f64;
            let mut l2_sq = Vec::new();
            let mut l4_sq = Vec::new();
            for (a, b) in run.states.iter().zip(&reference.states) {
                let u = a.sub(b)?;
                sup_h1 = sup_h1.max(hminus1_norm(&spectral, &u)?);
                sup_l2 = sup_l2.max(u.l2_norm());
                sup_half = sup_half.max(sobolev_norm(&spectral, &u, -0.5)?);
                l2_sq.push(u.l2_norm().powi(2));
                l4_sq.push(u.lp_norm(4.0)?.powi(2));
            }
            rows.push([
                sup_h1,
                trapezoid(&run.times, &l2_sq).sqrt(),
                sup_l2,
                sup_half,
                trapezoid(&run.times, &l2_sq).sqrt(),
                trapezoid(&run.times, &l4_sq).sqrt(),
            ]);
        }
        let floor = FLOOR_FACTOR * ORACLE_TOL * l2max;
        let table = |col: usize, label: &str| -> Result<RateTable> {
            let pairs: Vec<(f64, f64)> = self
                .epsilons
                .iter()
                .zip(&rows)
                .map(|(&e, r)| (e, r[col]))
                .collect();
            Ok(fit_with_floor(&pairs, floor)?.with_label(label))
        };
        let report = SolutionReport {
            hminus1_sup: table(0, "hminus1_sup")?,
            l2_spacetime: table(1, "l2_spacetime")?,
            l2_sup: table(2, "l2_sup")?,
            hminus_half_sup: table(3, "hminus_half_sup")?,
            lp_l2time: vec![(2.0, table(4, "l2_l2time")?), (4.0, table(5, "l4_l2time")?)],
            reference_h3_max: h3,
            reference_l2_max: l2max,
        };
        Ok(SolutionRun {
            report,
            reference,
            runs,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolutionRun {
    pub report: SolutionReport,
    pub reference: Trajectory,
    pub runs: Vec<Trajectory>,
}

fn trajectory(solver: &Solver, initial: &Field) -> Result<Trajectory> {
    let record = solver.run(initial)?;
    Ok(Trajectory {
        times: record.times.clone(),
        states: record.states.clone(),
        record,
    })
}

fn check_times(a: &[f64], b: &[f64]) -> Result<()> {
    let scale = a.last().copied().unwrap_or(1.0).abs().max(1e-300);
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| (x - y).abs() > 1e-9 * scale) {
        return Err(Error::InvalidArgument(format!(
            "time grids differ ({} vs {} records)",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Trapezoidal rule on a possibly nonuniform time grid.
pub fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// The terms of the differential inequality for `u = c_eps - c` at each
/// recorded time:
/// `d/dt 1/2 ||u||_{-1}^2 + 1/2 ||u||^2 + 1/2 E_eps(u) <= C (||u||_{-1}^2 + ||L_eps c + Delta c||^2)`.
#[derive(Debug, Clone, Serialize)]
pub struct GronwallTrace {
    pub times: Vec<f64>,
    pub ddt_half_hminus1_sq: Vec<f64>,
    pub half_l2_sq: Vec<f64>,
    pub half_energy: Vec<f64>,
    pub hminus1_sq: Vec<f64>,
    pub consistency_sq: Vec<f64>,
    /// `max_t lhs / rhs_base`: the smallest constant for which the inequality
    /// holds at every recorded time.
    pub constant: f64,
}

impl GronwallTrace {
    pub fn lhs(&self, i: usize) -> f64 {
        self.ddt_half_hminus1_sq[i] + self.half_l2_sq[i] + self.half_energy[i]
    }

    pub fn rhs(&self, i: usize, constant: f64) -> f64 {
        constant * (self.hminus1_sq[i] + self.consistency_sq[i])
    }

    pub fn holds_with(&self, constant: f64) -> bool {
        (0..self.times.len()).all(|i| self.lhs(i) <= self.rhs(i, constant) * (1.0 + 1e-12))
    }

    /// `int_0^T E_eps(u) dt`.
    pub fn energy_integral(&self) -> f64 {
        let e: Vec<f64> = self.half_energy.iter().map(|v| 2.0 * v).collect();
        trapezoid(&self.times, &e)
    }

    /// CSV with one row per recorded time.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "t,ddt_half_hminus1_sq,half_l2_sq,half_energy,lhs,hminus1_sq,consistency_sq,rhs"
        )?;
        for i in 0..self.times.len() {
            writeln!(
                w,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                self.times[i],
                self.ddt_half_hminus1_sq[i],
                self.half_l2_sq[i],
                self.half_energy[i],
                self.lhs(i),
                self.hminus1_sq[i],
                self.consistency_sq[i],
                self.rhs(i, self.constant)
            )?;
        }
        Ok(())
    }
}

/// Evaluates the inequality terms from synchronized nonlocal and local
/// trajectories. The time derivative is a central difference (one-sided at
/// the ends).
pub fn gronwall_trace(kernel: &Kernel, nonlocal: &Trajectory, local: &Trajectory) -> Result<GronwallTrace> {
    check_times(&local.times, &nonlocal.times)?;
    let times = nonlocal.times.clone();
    if times.len() < 3 {
        return Err(Error::InvalidArgument(
            "a trace needs at least 3 recorded times".into(),
        ));
    }
    let grid = nonlocal.states[0].grid();
    let spectral = Spectral::new(grid);
    let op = NonlocalOperator::new(kernel, grid)?;

    let terms = nonlocal
        .states
        .par_iter()
        .zip(&local.states)
        .map(|(ce, c)| {
            let u = ce.sub(c)?;
            let h = hminus1_norm(&spectral, &u)?;
            let consistency = op.apply(c)?.add(&laplacian(&spectral, c)?)?.l2_norm();
            Ok([
                h * h,
                u.l2_norm().powi(2),
                op.energy(&u)?,
                consistency * consistency,
            ])
        })
        .collect::<Result<Vec<[f64; 4]>>>()?;

    let n = times.len();
    let half_h: Vec<f64> = terms.iter().map(|t| 0.5 * t[0]).collect();
    let ddt: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                i if i == n - 1 => (n - 2, n - 1),
                i => (i - 1, i + 1),
            };
            (half_h[b] - half_h[a]) / (times[b] - times[a])
        })
        .collect();
    let mut trace = GronwallTrace {
        times,
        ddt_half_hminus1_sq: ddt,
        half_l2_sq: terms.iter().map(|t| 0.5 * t[1]).collect(),
        half_energy: terms.iter().map(|t| 0.5 * t[2]).collect(),
        hminus1_sq: terms.iter().map(|t| t[0]).collect(),
        consistency_sq: terms.iter().map(|t| t[3]).collect(),
        constant: 0.0,
    };
    let mut constant = 0.0f64;
    for i in 0..n {
        let base = trace.rhs(i, 1.0);
        let lhs = trace.lhs(i);
        if base > 0.0 {
            constant = constant.max(lhs / base);
        } else if lhs > 0.0 {
            constant = f64::INFINITY;
        }
    }
    trace.constant = constant;
    Ok(trace)
}
