//! Experiment drivers behind the `dlra` command. Each `run_*` function
//! returns a [`Table`] that the binary writes as CSV.

pub mod addition;
pub mod error;
pub mod explicit;
pub mod fit;
pub mod lyapunov;
pub mod quantum;
pub mod selftest;
pub mod table;

use std::fmt;
use std::str::FromStr;

pub use addition::{addition_cells, run_addition, AdditionCell, AdditionConfig};
pub use error::{Error, Result};
pub use explicit::{explicit_cells, run_explicit, ExplicitCell, ExplicitConfig, ExplicitPath, Method};
pub use fit::loglog_slope;
pub use lyapunov::{lyapunov_cells, run_lyapunov, LyapunovCell, LyapunovConfig, LyapunovProblem};
pub use quantum::{ground_preset, ground_runs, laser_runs, run_ground_state, run_laser, GroundRun, LaserExperiment};
pub use selftest::{run_selftest, selftest_checks, structured_checks, Check};
pub use table::{Cell, Table};

/// Problem scale. `Desk` runs in seconds to minutes; `Paper` uses the sizes
/// of the published experiments.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Preset {
    #[default]
    Desk,
    Paper,
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Desk => "desk",
            Preset::Paper => "paper",
        })
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            other => Err(error::config(format!("unknown preset {other:?}"))),
        }
    }
}

/// `T / h` as a step count; `h` must divide `T` to 1e-12.
pub fn step_count(h: f64, t_final: f64) -> Result<usize> {
    dlra_quantum::drive::step_count(h, t_final).map_err(Error::from)
}
