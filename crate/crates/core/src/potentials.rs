//! Free-energy densities with their derivatives, concavity bound `alpha`
//! (`f'' >= -alpha`) and the convex-concave split of `f'`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Potential {
    /// `K (1 - c^2)^2`.
    DoubleWell { k: f64 },
    /// `theta/2 [(1-c) ln(1-c) + (1+c) ln(1+c)] - theta_c/2 c^2`, evaluated on
    /// `[-1 + clamp, 1 - clamp]`.
    Logarithmic { theta: f64, theta_c: f64, clamp: f64 },
}

impl Potential {
    pub fn double_well(k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "double-well K must be positive, got {k}"
            )));
        }
        Ok(Potential::DoubleWell { k })
    }

    pub fn logarithmic(theta: f64, theta_c: f64, clamp: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < theta_c && theta_c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "logarithmic potential needs 0 < theta < theta_c, got theta={theta}, theta_c={theta_c}"
            )));
        }
        if !(clamp > 0.0 && clamp < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "clamp width {clamp} outside (0, 0.5)"
            )));
        }
        Ok(Potential::Logarithmic {
            theta,
            theta_c,
            clamp,
        })
    }

    /// Concavity bound: `f''(s) >= -alpha` on the admissible range.
    pub fn alpha(&self) -> f64 {
        match *self {
            Potential::DoubleWell { k } => 4.0 * k,
            Potential::Logarithmic { theta_c, .. } => theta_c,
        }
    }

    /// Clamped argument and whether clamping was needed.
    pub fn clamp(&self, c: f64) -> (f64, bool) {
        match *self {
            Potential::DoubleWell { .. } => (c, false),
            Potential::Logarithmic { clamp, .. } => {
                let lim = 1.0 - clamp;
                if c > lim {
                    (lim, true)
                } else if c < -lim {
                    (-lim, true)
                } else {
                    (c, false)
                }
            }
        }
    }

    pub fn f(&self, c: f64) -> f64 {
        let (c, _) = self.clamp(c);
        match *self {
            Potential::DoubleWell { k } => {
                let w = 1.0 - c * c;
                k * w * w
            }
            Potential::Logarithmic { theta, theta_c, .. } => {
                0.5 * theta * ((1.0 - c) * (1.0 - c).ln() + (1.0 + c) * (1.0 + c).ln())
                    - 0.5 * theta_c * c * c
            }
        }
    }

    pub fn fprime(&self, c: f64) -> f64 {
        let (vex, cave) = self.split(c);
        vex + cave
    }

    pub fn fsecond(&self, c: f64) -> f64 {
        let (c, _) = self.clamp(c);
        match *self {
            Potential::DoubleWell { k } => 12.0 * k * c * c - 4.0 * k,
            Potential::Logarithmic { theta, theta_c, .. } => theta / (1.0 - c * c) - theta_c,
        }
    }

    /// `(f'_vex, f'_cave)` with `f'_vex` nondecreasing and `f'_cave` having
    /// slope in `[-alpha, 0]`.
    pub fn split(&self, c: f64) -> (f64, f64) {
        let (c, _) = self.clamp(c);
        match *self {
            Potential::DoubleWell { k } => (4.0 * k * c * c * c, -4.0 * k * c),
            Potential::Logarithmic { theta, theta_c, .. } => {
                (0.5 * theta * ((1.0 + c) / (1.0 - c)).ln(), -theta_c * c)
            }
        }
    }

    /// `f'` at every value, written into `out`; returns the number of clamped
    /// inputs.
    pub fn fprime_into(&self, c: &[f64], out: &mut [f64]) -> usize {
        let mut clamped = 0;
        for (o, &v) in out.iter_mut().zip(c) {
            if self.clamp(v).1 {
                clamped += 1;
            }
            *o = self.fprime(v);
        }
        clamped
    }

    /// `sum f(c_i)` times `cell_volume`.
    pub fn integral(&self, c: &[f64], cell_volume: f64) -> f64 {
        c.iter().map(|&v| self.f(v)).sum::<f64>() * cell_volume
    }

    /// Bounds of the admissible range for sampling checks.
    pub fn admissible_range(&self) -> (f64, f64) {
        match *self {
            Potential::DoubleWell { .. } => (-2.0, 2.0),
            Potential::Logarithmic { clamp, .. } => (-1.0 + clamp, 1.0 - clamp),
        }
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Potential::DoubleWell { k } => write!(f, "doublewell:K={k}"),
            Potential::Logarithmic {
                theta,
                theta_c,
                clamp,
            } => {
                write!(f, "logarithmic:theta={theta},theta_c={theta_c},clamp={clamp}")
            }
        }
    }
}

/// Parses `doublewell:K=1` or `logarithmic:theta=0.8,theta_c=1[,clamp=1e-6]`.
impl FromStr for Potential {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, params) = s.split_once(':').unwrap_or((s, ""));
        let mut k = None;
        let mut theta = None;
        let mut theta_c = None;
        let mut clamp = None;
        for item in params.split(',').filter(|p| !p.trim().is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value in potential, got {item:?}")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad number {value:?} in potential")))?;
            match key.trim() {
                "K" | "k" => k = Some(value),
                "theta" => theta = Some(value),
                "theta_c" => theta_c = Some(value),
                "clamp" => clamp = Some(value),
                other => return Err(Error::Parse(format!("unknown potential parameter {other:?}"))),
            }
        }
        match kind.trim() {
            "doublewell" | "double-well" => Potential::double_well(k.unwrap_or(1.0)),
            "logarithmic" | "log" => Potential::logarithmic(
                theta.unwrap_or(0.8),
                theta_c.unwrap_or(1.0),
                clamp.unwrap_or(DEFAULT_CLAMP),
            ),
            other => Err(Error::UnknownName {
                kind: "potential",
                name: other.to_string(),
            }),
        }
    }
}
