//! Run configuration: a TOML file with one table per concern, plus flag
//! overrides applied on top.
//!
//! Exact fields take `"num/den"` strings or integers. TOML floats are
//! rejected there, so a config can never smuggle in a rounded value.

use std::fmt;
use std::path::{Path, PathBuf};

use gdtune_core::instances::{Activation, Family, InstanceDistribution};
use gdtune_core::rational::parse_rational;
use gdtune_core::{Budget, GdConfig, Interval, MomentumVariant, Rational};
use num_bigint::BigInt;
use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;

use crate::error::{CliError, Result};

/// A rational read without rounding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Exact(pub Rational);

impl<'de> Deserialize<'de> for Exact {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Exact;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an exact rational such as \"1/10\" or an integer")
            }

            fn visit_str<E: de::Error>(self, s: &str) -> std::result::Result<Exact, E> {
                parse_rational(s).map(Exact).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Exact, E> {
                Ok(Exact(Rational::from_integer(BigInt::from(v))))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Exact, E> {
                Ok(Exact(Rational::from_integer(BigInt::from(v))))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Exact, E> {
                Err(E::custom(format!(
                    "float {v} is not exact; write it as a \"num/den\" string"
                )))
            }
        }
        d.deserialize_any(V)
    }
}

fn exacts(v: &[Exact]) -> Vec<Rational> {
    v.iter().map(|e| e.0.clone()).collect()
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GdSection {
    #[serde(rename = "H")]
    pub h: Option<u32>,
    pub theta: Option<Exact>,
    pub domain: Option<[Exact; 2]>,
    pub budget_degree: Option<usize>,
    pub budget_bits: Option<u64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSection {
    /// `random_poly`, `random_pwpoly`, `net_mse` or `scalar_quadratic`.
    pub family: Option<String>,
    pub seed: Option<u64>,
    pub d: Option<usize>,
    pub delta: Option<u32>,
    pub p: Option<usize>,
    pub lo: Option<Exact>,
    pub hi: Option<Exact>,
    pub widths: Option<Vec<usize>>,
    pub activation: Option<String>,
    pub samples: Option<usize>,
    pub free: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSection {
    /// Instance files or `builtin:NAME`; when empty, `m` instances are drawn.
    #[serde(default)]
    pub instances: Vec<String>,
    pub m: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub m_schedule: Option<Vec<usize>>,
    pub trials: Option<usize>,
    pub test_size: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentumSection {
    pub gamma_grid: Option<Vec<Exact>>,
    /// `velocity_first` (default) or `literal`.
    pub variant: Option<String>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub sweeps: Option<usize>,
    pub init: Option<Vec<Exact>>,
    /// Zero-based coordinate for `trace --binding schedule`.
    pub index: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    pub eta: Option<Exact>,
    pub direction: Option<Vec<Exact>>,
    pub index: Option<usize>,
    pub base: Option<Vec<Exact>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericSection {
    pub grid: Option<usize>,
    pub refine: Option<u32>,
    /// Grid points closer than this to an exact breakpoint are not compared.
    pub separation: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdimSection {
    pub m_max: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotSection {
    /// Sample points per cell for piecewise polynomials.
    pub points: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub gd: GdSection,
    #[serde(default)]
    pub distribution: DistributionSection,
    #[serde(default)]
    pub sample: SampleSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub momentum: MomentumSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub init: InitSection,
    #[serde(default)]
    pub numeric: NumericSection,
    #[serde(default)]
    pub pdim: PdimSection,
    #[serde(default)]
    pub plot: PlotSection,
}

/// Flag values that override config fields one-to-one.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub domain: Option<(Rational, Rational)>,
    pub h: Option<u32>,
    pub theta: Option<Rational>,
    pub grid: Option<usize>,
    pub gamma_grid: Option<Vec<Rational>>,
    pub m_schedule: Option<Vec<usize>>,
    pub trials: Option<usize>,
    pub budget_degree: Option<usize>,
    pub threads: Option<usize>,
}

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_GRID: usize = 10_000;
pub const DEFAULT_REFINE: u32 = 40;
pub const DEFAULT_SEPARATION: f64 = 1e-6;

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let at = match e.span() {
                Some(span) => {
                    let line = text[..span.start].matches('\n').count() + 1;
                    format!("config line {line}")
                }
                None => "config".to_string(),
            };
            CliError::parse(at, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        let exact = |q: &Rational| Exact(q.clone());
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if o.out.is_some() {
            self.out.clone_from(&o.out);
        }
        if let Some((lo, hi)) = &o.domain {
            self.gd.domain = Some([exact(lo), exact(hi)]);
        }
        if o.h.is_some() {
            self.gd.h = o.h;
        }
        if let Some(t) = &o.theta {
            self.gd.theta = Some(exact(t));
        }
        if o.grid.is_some() {
            self.numeric.grid = o.grid;
        }
        if let Some(g) = &o.gamma_grid {
            self.momentum.gamma_grid = Some(g.iter().map(exact).collect());
        }
        if o.m_schedule.is_some() {
            self.experiment.m_schedule.clone_from(&o.m_schedule);
        }
        if o.trials.is_some() {
            self.experiment.trials = o.trials;
        }
        if o.budget_degree.is_some() {
            self.gd.budget_degree = o.budget_degree;
        }
        if o.threads.is_some() {
            self.threads = o.threads;
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    /// H, theta and the domain have no defaults.
    pub fn gd(&self) -> Result<GdConfig> {
        let g = &self.gd;
        let h = g.h.ok_or_else(|| missing("gd.H (or --H)"))?;
        let theta = g.theta.clone().ok_or_else(|| missing("gd.theta (or --theta)"))?.0;
        let [lo, hi] = g.domain.clone().ok_or_else(|| missing("gd.domain (or --domain LO HI)"))?;
        let domain = Interval::new(lo.0, hi.0)?;
        let mut budget = Budget::default();
        if let Some(d) = g.budget_degree {
            budget.max_degree = d;
        }
        if let Some(b) = g.budget_bits {
            budget.max_bits = b;
        }
        Ok(GdConfig::new(h, theta, domain)?.with_budget(budget))
    }

    pub fn distribution(&self) -> Result<InstanceDistribution> {
        let s = &self.distribution;
        let family_name = s.family.as_deref().ok_or_else(|| missing("distribution.family"))?;
        let range = || -> Result<(Rational, Rational)> {
            let lo = s.lo.clone().ok_or_else(|| missing("distribution.lo"))?.0;
            let hi = s.hi.clone().ok_or_else(|| missing("distribution.hi"))?.0;
            Ok((lo, hi))
        };
        let family = match family_name {
            "random_poly" => {
                let (lo, hi) = range()?;
                Family::RandomPoly {
                    d: s.d.ok_or_else(|| missing("distribution.d"))?,
                    delta: s.delta.ok_or_else(|| missing("distribution.delta"))?,
                    lo,
                    hi,
                }
            }
            "random_pwpoly" => {
                let (lo, hi) = range()?;
                Family::RandomPwPoly {
                    d: s.d.ok_or_else(|| missing("distribution.d"))?,
                    delta: s.delta.ok_or_else(|| missing("distribution.delta"))?,
                    p: s.p.ok_or_else(|| missing("distribution.p"))?,
                    lo,
                    hi,
                }
            }
            "net_mse" => Family::NetMse {
                widths: s.widths.clone().ok_or_else(|| missing("distribution.widths"))?,
                activation: Activation::parse(s.activation.as_deref().unwrap_or("relu"))?,
                samples: s.samples.ok_or_else(|| missing("distribution.samples"))?,
                free: s.free.clone().ok_or_else(|| missing("distribution.free"))?,
            },
            "scalar_quadratic" => {
                let (lo, hi) = range()?;
                Family::ScalarQuadratic { lo, hi }
            }
            other => return Err(CliError::Config(format!("unknown distribution family {other:?}"))),
        };
        let dist = InstanceDistribution {
            family,
            seed: s.seed.unwrap_or(0),
        };
        dist.validate()?;
        Ok(dist)
    }

    pub fn gamma_grid(&self) -> Result<Vec<Rational>> {
        self.momentum
            .gamma_grid
            .as_deref()
            .map(exacts)
            .ok_or_else(|| missing("momentum.gamma_grid (or --gamma-grid)"))
    }

    pub fn momentum_variant(&self) -> Result<MomentumVariant> {
        match self.momentum.variant.as_deref() {
            None | Some("velocity_first") => Ok(MomentumVariant::VelocityFirst),
            Some("literal") => Ok(MomentumVariant::Literal),
            Some(other) => Err(CliError::Config(format!("unknown momentum variant {other:?}"))),
        }
    }

    pub fn init_eta(&self) -> Result<Rational> {
        self.init.eta.clone().map(|e| e.0).ok_or_else(|| missing("init.eta"))
    }

    pub fn init_direction(&self) -> Option<Vec<Rational>> {
        self.init.direction.as_deref().map(exacts)
    }

    pub fn init_base(&self) -> Option<Vec<Rational>> {
        self.init.base.as_deref().map(exacts)
    }

    pub fn init_schedule(&self) -> Option<Vec<Rational>> {
        self.schedule.init.as_deref().map(exacts)
    }

    pub fn grid(&self) -> usize {
        self.numeric.grid.unwrap_or(DEFAULT_GRID)
    }

    pub fn refine(&self) -> u32 {
        self.numeric.refine.unwrap_or(DEFAULT_REFINE)
    }

    pub fn separation(&self) -> f64 {
        self.numeric.separation.unwrap_or(DEFAULT_SEPARATION)
    }
}

fn missing(field: &str) -> CliError {
    CliError::Config(format!("missing {field}"))
}

/// `a,b,c` into a list of exact rationals.
pub fn parse_rational_list(text: &str) -> std::result::Result<Vec<Rational>, String> {
    text.split(',')
        .map(|s| parse_rational(s.trim()).map_err(|e| e.to_string()))
        .collect()
}

pub fn parse_usize_list(text: &str) -> std::result::Result<Vec<usize>, String> {
    text.split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|e| format!("{s:?}: {e}")))
        .collect()
}

pub fn parse_exact(text: &str) -> std::result::Result<Rational, String> {
    parse_rational(text).map_err(|e| e.to_string())
}
