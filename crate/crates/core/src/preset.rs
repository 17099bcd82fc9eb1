//! The three benchmark problems by name, with their solver defaults.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::evolution::EvolutionSystem;
use crate::fem::{heat_distributed_preset, heat_neumann_preset};
use crate::newton::NewtonOptions;
use crate::ode::{pendulum_with_radius, PENDULUM_OPTIMAL_TIME};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Pendulum,
    HeatDistributed,
    HeatNeumann,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Pendulum, Preset::HeatDistributed, Preset::HeatNeumann];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Pendulum => "pendulum",
            Preset::HeatDistributed => "heat-distributed",
            Preset::HeatNeumann => "heat-neumann",
        }
    }

    /// Target radius `delta0`.
    pub fn radius(self) -> f64 {
        match self {
            Preset::Pendulum => 1e-6,
            _ => 0.1,
        }
    }

    pub fn default_nu0(self) -> f64 {
        match self {
            Preset::Pendulum => 0.6 * PENDULUM_OPTIMAL_TIME,
            Preset::HeatDistributed => 0.8,
            Preset::HeatNeumann => 0.6,
        }
    }

    /// Analytic optimal time, when one is known.
    pub fn reference_time(self) -> Option<f64> {
        match self {
            Preset::Pendulum => Some(PENDULUM_OPTIMAL_TIME),
            _ => None,
        }
    }

    /// True when the preset has a spatial mesh parameter `n`.
    pub fn has_mesh(self) -> bool {
        self != Preset::Pendulum
    }

    /// Nodes of the discretization: 2 for the pendulum, `(n + 1)^2` otherwise.
    pub fn node_count(self, n: usize) -> usize {
        if self.has_mesh() {
            (n + 1) * (n + 1)
        } else {
            2
        }
    }

    /// Checks the mesh parameter without assembling anything.
    pub fn validate_mesh(self, n: usize) -> Result<()> {
        match self {
            Preset::Pendulum => Ok(()),
            Preset::HeatDistributed if n < 4 || n % 4 != 0 => {
                Err(Error::ConfigError(format!("heat-distributed needs n >= 4 divisible by 4, got {n}")))
            }
            Preset::HeatNeumann if n < 2 => Err(Error::ConfigError(format!("heat-neumann needs n >= 2, got {n}"))),
            _ => Ok(()),
        }
    }

    /// Builds the system; `n` is ignored for the pendulum.
    pub fn build<T: Scalar>(self, n: usize, radius: Option<T>) -> Result<Box<dyn EvolutionSystem<T>>> {
        self.validate_mesh(n)?;
        let radius = radius.unwrap_or(T::lit(self.radius()));
        Ok(match self {
            Preset::Pendulum => Box::new(pendulum_with_radius(radius)?),
            Preset::HeatDistributed => Box::new(heat_distributed_preset(n)?.with_radius(radius)?),
            Preset::HeatNeumann => Box::new(heat_neumann_preset(n)?.with_radius(radius)?),
        })
    }

    /// Solver defaults for target radius `delta0`.
    ///
    /// The boundary-control problem gets looser tolerances. Its inner
    /// solves slow down sharply below a gap of about `1e-6`, and a gap of
    /// that size moves the computed time by less than `1e-6`.
    pub fn options<T: Scalar>(self, delta0: T) -> NewtonOptions<T> {
        let mut o = NewtonOptions::for_radius(T::lit(self.default_nu0()), delta0);
        if self == Preset::HeatNeumann {
            o.tol_delta = T::lit(1e-5) * (T::one() + delta0);
            o.inner.tol_gap = T::lit(1e-6) * (T::one() + delta0);
            o.inner.history_cap = 100;
            o.inner.max_iter = 20_000;
        }
        o
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::ConfigError(format!("unknown preset '{s}'")))
    }
}
