//! First-order IMEX time stepping for local and nonlocal Cahn-Hilliard and
//! Allen-Cahn flows, with mass and energy tracking.
//!
//! Every scheme has the form, per transform coefficient,
//!
//! ```text
//! c+ = c - tau m w (L c + f'(c))^ / (1 + tau m w (A + S))
//! ```
//!
//! where `w = lambda` (Cahn-Hilliard) or `1` (Allen-Cahn), `L` is `-Delta` or
//! `L_eps`, `A` is the diagonal part treated implicitly (`lambda` locally, the
//! discrete symbol of the reflected `L_eps` nonlocally) and `S` is the
//! stabilizer. With `Scheme::FullyExplicit` the denominator is 1.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Field, UniformGrid};
use crate::kernel::Kernel;
use crate::nonlocal_op::NonlocalOperator;
use crate::potentials::Potential;
use crate::spectral::Spectral;

/// A state is declared divergent once its L2 norm exceeds this multiple of
/// `max(||c0||, 1)`.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// Safety factor in the explicit stability rules.
pub const EXPLICIT_SAFETY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Equation {
    LocalCh,
    NonlocalCh,
    LocalAc,
    NonlocalAc,
}

impl Equation {
    pub const ALL: [Equation; 4] = [
        Equation::LocalCh,
        Equation::NonlocalCh,
        Equation::LocalAc,
        Equation::NonlocalAc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Equation::LocalCh => "local-ch",
            Equation::NonlocalCh => "nonlocal-ch",
            Equation::LocalAc => "local-ac",
            Equation::NonlocalAc => "nonlocal-ac",
        }
    }

    pub fn is_nonlocal(self) -> bool {
        matches!(self, Equation::NonlocalCh | Equation::NonlocalAc)
    }

    pub fn conserves_mass(self) -> bool {
        matches!(self, Equation::LocalCh | Equation::NonlocalCh)
    }

    /// The local equation the nonlocal one converges to (identity on local ones).
    pub fn local_limit(self) -> Equation {
        match self {
            Equation::NonlocalCh => Equation::LocalCh,
            Equation::NonlocalAc => Equation::LocalAc,
            e => e,
        }
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Equation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Equation::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "equation",
                name: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    SemiImplicitStabilized,
    FullyExplicit,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::SemiImplicitStabilized => "semi-implicit",
            Scheme::FullyExplicit => "explicit",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semi-implicit" => Ok(Scheme::SemiImplicitStabilized),
            "explicit" => Ok(Scheme::FullyExplicit),
            _ => Err(Error::UnknownName {
                kind: "scheme",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub mobility: f64,
    pub tau: f64,
    pub final_time: f64,
    /// Stabilization `S`; must be at least the potential's `alpha` for the
    /// semi-implicit scheme.
    pub stabilization: f64,
    pub scheme: Scheme,
    /// Record mass and energy every this many steps (the final step is
    /// always recorded).
    pub record_every: usize,
    /// Keep a copy of the state at every recorded time.
    pub keep_states: bool,
    /// Run an explicit scheme beyond its stability rule (with a warning).
    pub allow_unstable: bool,
}

impl SolverConfig {
    pub fn new(tau: f64, final_time: f64, potential: &Potential) -> Self {
        Self {
            mobility: 1.0,
            tau,
            final_time,
            stabilization: potential.alpha(),
            scheme: Scheme::SemiImplicitStabilized,
            record_every: 1,
            keep_states: false,
            allow_unstable: false,
        }
    }

    /// Number of steps; the step is shortened to `final_time / steps`.
    pub fn steps(&self) -> usize {
        (self.final_time / self.tau - 1e-9).ceil().max(1.0) as usize
    }

    pub fn effective_tau(&self) -> f64 {
        self.final_time / self.steps() as f64
    }

    fn validate(&self, potential: &Potential) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.mobility) || !positive(self.tau) || !positive(self.final_time) {
            return Err(Error::InvalidArgument(format!(
                "mobility, tau and final time must be positive (m={}, tau={}, T={})",
                self.mobility, self.tau, self.final_time
            )));
        }
        if self.tau > self.final_time {
            return Err(Error::InvalidArgument(format!(
                "tau {} exceeds the final time {}",
                self.tau, self.final_time
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidArgument("record_every must be at least 1".into()));
        }
        if !(self.stabilization >= 0.0 && self.stabilization.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "stabilization {} must be nonnegative",
                self.stabilization
            )));
        }
        if self.scheme == Scheme::SemiImplicitStabilized && self.stabilization < potential.alpha() {
            return Err(Error::InvalidArgument(format!(
                "stabilization {} below the concavity bound {} of {potential}",
                self.stabilization,
                potential.alpha()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    /// States at the recorded times when `keep_states` is set.
    pub states: Vec<Field>,
    /// Number of potential evaluations that had to clamp their argument.
    pub clamp_events: usize,
    pub final_state: Field,
}

impl TrajectoryRecord {
    /// CSV with header `t,mass,energy`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,mass,energy")?;
        for i in 0..self.times.len() {
            writeln!(w, "{:e},{:e},{:e}", self.times[i], self.mass[i], self.energy[i])?;
        }
        Ok(())
    }
}

/// Precomputed diagonals and operators for one equation on one grid.
pub struct Solver {
    equation: Equation,
    config: SolverConfig,
    potential: Potential,
    spectral: Spectral,
    op: Option<NonlocalOperator>,
    // L c + f'(c) is scaled by -tau m w / denom per coefficient
    gain: Vec<f64>,
}

impl fmt::Debug for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Solver")
            .field("equation", &self.equation)
            .field("config", &self.config)
            .field("potential", &self.potential)
            .finish()
    }
}

impl Solver {
    pub fn new(
        equation: Equation,
        grid: &UniformGrid,
        config: SolverConfig,
        potential: Potential,
        kernel: Option<&Kernel>,
    ) -> Result<Self> {
        config.validate(&potential)?;
        let spectral = Spectral::new(grid);
        let op = match (equation.is_nonlocal(), kernel) {
            (true, Some(k)) => Some(NonlocalOperator::new(k, grid)?),
            (true, None) => {
                return Err(Error::InvalidArgument(format!("{equation} needs a kernel")));
            }
            (false, _) => None,
        };
        let lambda = spectral.eigenvalues();
        let implicit: Vec<f64> = match &op {
            Some(op) => op.symbol_diagonal(&spectral)?,
            None => lambda.to_vec(),
        };
        let ch = matches!(equation, Equation::LocalCh | Equation::NonlocalCh);
        let tau = config.effective_tau();
        let m = config.mobility;
        let s = config.stabilization;

        if config.scheme == Scheme::FullyExplicit {
            let lmax = lambda.iter().cloned().fold(0.0, f64::max);
            let rule = match (ch, &op) {
                (true, Some(op)) => EXPLICIT_SAFETY / (m * op.degree_max() * lmax),
                (true, None) => EXPLICIT_SAFETY / (m * lmax * lmax),
                (false, Some(op)) => EXPLICIT_SAFETY / (m * op.degree_max()),
                (false, None) => EXPLICIT_SAFETY / (m * lmax),
            };
            if tau > rule {
                if config.allow_unstable {
                    log::warn!("tau {tau} exceeds the explicit stability limit {rule}");
                } else {
                    return Err(Error::InvalidArgument(format!(
                        "tau {tau} exceeds the explicit stability limit {rule}; allow_unstable overrides"
                    )));
                }
            }
        }

        let gain = lambda
            .iter()
            .zip(&implicit)
            .map(|(&l, &a)| {
                let w = if ch { l } else { 1.0 };
                let denom = match config.scheme {
                    Scheme::SemiImplicitStabilized => 1.0 + tau * m * w * (a + s),
                    Scheme::FullyExplicit => 1.0,
                };
                -tau * m * w / denom
            })
            .collect();
        Ok(Self {
            equation,
            config,
            potential,
            spectral,
            op,
            gain,
        })
    }

    pub fn equation(&self) -> Equation {
        self.equation
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn grid(&self) -> &UniformGrid {
        self.spectral.grid()
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn operator(&self) -> Option<&NonlocalOperator> {
        self.op.as_ref()
    }

    /// One time step.
    pub fn step(&self, state: &Field) -> Result<Field> {
        self.grid().check_same(state.grid())?;
        let mut work = vec![0.0; state.values().len()];
        let (next, _) = self.advance(state.values(), &mut work);
        Ok(self.spectral.field(next))
    }

    fn advance(&self, c: &[f64], work: &mut [f64]) -> (Vec<f64>, usize) {
        let clamped = self.potential.fprime_into(c, work);
        // r = L c + f'(c)
        let mut coeffs = match &self.op {
            Some(op) => {
                let lc = op.apply_values(c);
                work.iter_mut().zip(lc).for_each(|(w, l)| *w += l);
                self.spectral.forward(work)
            }
            None => {
                let mut fc = self.spectral.forward(work);
                let cc = self.spectral.forward(c);
                add_scaled(&mut fc, &cc, self.spectral.eigenvalues());
                fc
            }
        };
        coeffs.scale_each(&self.gain);
        let delta = self.spectral.inverse(coeffs);
        let next = c.iter().zip(delta).map(|(a, d)| a + d).collect();
        (next, clamped)
    }

    /// `E^CH` for local flows, `E_eps + int f` for nonlocal ones.
    pub fn energy(&self, state: &Field) -> Result<f64> {
        Ok(self.energy_values(state.values()))
    }

    fn energy_values(&self, c: &[f64]) -> f64 {
        let vol = self.grid().cell_volume();
        let bulk = self.potential.integral(c, vol);
        let interface = match &self.op {
            Some(op) => op.energy_values(c),
            None => 0.5 * self.spectral.quadratic_form(c, |l| l),
        };
        interface + bulk
    }

    pub fn run(&self, initial: &Field) -> Result<TrajectoryRecord> {
        self.run_with(initial, |_, _, _| {})
    }

    /// Steps to the final time, calling `observer(step, t, state)` after every
    /// step (and once for the initial state with step 0).
    pub fn run_with<F: FnMut(usize, f64, &[f64])>(
        &self,
        initial: &Field,
        mut observer: F,
    ) -> Result<TrajectoryRecord> {
        self.grid().check_same(initial.grid())?;
        let steps = self.config.steps();
        let tau = self.config.effective_tau();
        let vol = self.grid().cell_volume();
        let limit = DIVERGENCE_FACTOR * initial.l2_norm().max(1.0);

        let mut rec = TrajectoryRecord {
            times: Vec::new(),
            mass: Vec::new(),
            energy: Vec::new(),
            states: Vec::new(),
            clamp_events: 0,
            final_state: initial.clone(),
        };
        let mut c = initial.values().to_vec();
        let mut work = vec![0.0; c.len()];
        let record = |rec: &mut TrajectoryRecord, t: f64, c: &[f64]| {
            rec.times.push(t);
            rec.mass.push(c.iter().sum::<f64>() * vol);
            rec.energy.push(self.energy_values(c));
            if self.config.keep_states {
                rec.states.push(self.spectral.field(c.to_vec()));
            }
        };
        record(&mut rec, 0.0, &c);
        observer(0, 0.0, &c);
        for n in 1..=steps {
            let (next, clamped) = self.advance(&c, &mut work);
            rec.clamp_events += clamped;
            c = next;
            let t = n as f64 * tau;
            let norm = (c.iter().map(|v| v * v).sum::<f64>() * vol).sqrt();
            if !norm.is_finite() || norm > limit {
                return Err(Error::Diverged { time: t, norm });
            }
            if n % self.config.record_every == 0 || n == steps {
                record(&mut rec, t, &c);
            }
            observer(n, t, &c);
        }
        if rec.clamp_events > 0 {
            log::warn!("{} potential evaluations were clamped", rec.clamp_events);
        }
        rec.final_state = self.spectral.field(c);
        Ok(rec)
    }
}

fn add_scaled(target: &mut crate::spectral::Coeffs, src: &crate::spectral::Coeffs, diag: &[f64]) {
    use crate::spectral::Coeffs;
    match (target, src) {
        (Coeffs::Real(t), Coeffs::Real(s)) => {
            for ((t, s), d) in t.iter_mut().zip(s).zip(diag) {
                *t += d * s;
            }
        }
        (Coeffs::Complex(t), Coeffs::Complex(s)) => {
            for ((t, s), d) in t.iter_mut().zip(s).zip(diag) {
                *t += s * d;
            }
        }
        _ => unreachable!("coefficients from one transform stack"),
    }
}

fn one_step(
    equation: Equation,
    state: &Field,
    config: &SolverConfig,
    potential: &Potential,
    kernel: Option<&Kernel>,
) -> Result<Field> {
    Solver::new(equation, state.grid(), config.clone(), *potential, kernel)?.step(state)
}

pub fn step_local_ch(state: &Field, config: &SolverConfig, potential: &Potential) -> Result<Field> {
    one_step(Equation::LocalCh, state, config, potential, None)
}

pub fn step_nonlocal_ch(
    state: &Field,
    config: &SolverConfig,
    potential: &Potential,
    kernel: &Kernel,
) -> Result<Field> {
    one_step(Equation::NonlocalCh, state, config, potential, Some(kernel))
}

pub fn step_local_ac(state: &Field, config: &SolverConfig, potential: &Potential) -> Result<Field> {
    one_step(Equation::LocalAc, state, config, potential, None)
}

pub fn step_nonlocal_ac(
    state: &Field,
    config: &SolverConfig,
    potential: &Potential,
    kernel: &Kernel,
) -> Result<Field> {
    one_step(Equation::NonlocalAc, state, config, potential, Some(kernel))
}

/// Builds a solver and runs it; `kernel` is required for nonlocal equations.
pub fn run(
    equation: Equation,
    initial: &Field,
    config: &SolverConfig,
    potential: &Potential,
    kernel: Option<&Kernel>,
) -> Result<TrajectoryRecord> {
    Solver::new(equation, initial.grid(), config.clone(), *potential, kernel)?.run(initial)
}
