//! Forcing descriptors `constant:c`, `gaussian:x0,y0,sigma,amp`, `file:path`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use epitaxy_core::io::read_field_file;
use epitaxy_core::{Field, Grid2D};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum ForcingSpec {
    Constant(f64),
    Gaussian { x0: f64, y0: f64, sigma: f64, amp: f64 },
    File(PathBuf),
}

impl ForcingSpec {
    pub fn to_field(&self, grid: Grid2D) -> CliResult<Field> {
        match self {
            ForcingSpec::Constant(c) => Ok(Field::constant(grid, *c)),
            &ForcingSpec::Gaussian { x0, y0, sigma, amp } => Ok(Field::from_fn(grid, |x, y| {
                amp * (-((x - x0).powi(2) + (y - y0).powi(2)) / (2.0 * sigma * sigma)).exp()
            })),
            ForcingSpec::File(p) => {
                let f = read_field_file(p)?;
                let fg = f.grid();
                if *fg != grid {
                    return Err(CliError::Usage(format!(
                        "forcing file {} is on a {}x{} grid, run grid is {}x{}",
                        p.display(),
                        fg.nx(),
                        fg.ny(),
                        grid.nx(),
                        grid.ny()
                    )));
                }
                Ok(f)
            }
        }
    }

    /// Profile `f(r)` on the unit disk; only forcings symmetric about the
    /// origin qualify.
    pub fn radial_profile(&self) -> CliResult<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
        match *self {
            ForcingSpec::Constant(c) => Ok(Box::new(move |_| c)),
            ForcingSpec::Gaussian { x0, y0, sigma, amp } if x0 == 0.0 && y0 == 0.0 => {
                Ok(Box::new(move |r: f64| amp * (-r * r / (2.0 * sigma * sigma)).exp()))
            }
            _ => Err(CliError::Usage(format!(
                "radial needs a forcing centred at the origin, got `{self}`"
            ))),
        }
    }
}

impl FromStr for ForcingSpec {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let bad = |why: &str| CliError::Usage(format!("forcing `{s}`: {why}"));
        let (kind, rest) = s.split_once(':').ok_or_else(|| bad("expected kind:args"))?;
        let nums = |rest: &str| -> CliResult<Vec<f64>> {
            rest.split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| bad("bad number")))
                .collect()
        };
        let spec = match kind.trim() {
            "constant" => match nums(rest)?[..] {
                [c] => ForcingSpec::Constant(c),
                _ => return Err(bad("constant takes one value")),
            },
            "gaussian" => match nums(rest)?[..] {
                [x0, y0, sigma, amp] if sigma > 0.0 => ForcingSpec::Gaussian { x0, y0, sigma, amp },
                [_, _, _, _] => return Err(bad("sigma must be positive")),
                _ => return Err(bad("gaussian takes x0,y0,sigma,amp")),
            },
            "file" if !rest.is_empty() => ForcingSpec::File(PathBuf::from(rest)),
            _ => return Err(bad("kind must be constant, gaussian or file")),
        };
        match &spec {
            ForcingSpec::Constant(c) if !c.is_finite() => Err(bad("value must be finite")),
            ForcingSpec::Gaussian { x0, y0, amp, .. } if ![x0, y0, amp].iter().all(|v| v.is_finite()) => {
                Err(bad("values must be finite"))
            }
            _ => Ok(spec),
        }
    }
}

impl fmt::Display for ForcingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForcingSpec::Constant(c) => write!(f, "constant:{c}"),
            ForcingSpec::Gaussian { x0, y0, sigma, amp } => write!(f, "gaussian:{x0},{y0},{sigma},{amp}"),
            ForcingSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}
