//! Experiment configuration and the built-in presets.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::design::{Correlation, DesignSpec, Family, SignalBlock, SignalSpec};
use crate::error::{Error, Result};
use crate::seqpath::Method;

pub const DESK_SCALE: f64 = 0.25;
pub const FULL_REPLICATES: usize = 500;
pub const DESK_REPLICATES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    RankCsv,
    SummaryCsv,
    PredictionOverlay,
    SvgPlot,
    DiagramCsv,
    DiagramSvg,
}

impl OutputKind {
    pub const DEFAULT: [OutputKind; 4] = [
        OutputKind::RankCsv,
        OutputKind::SummaryCsv,
        OutputKind::SvgPlot,
        OutputKind::PredictionOverlay,
    ];
}

/// The axis an experiment varies. Sweep values must be strictly
/// increasing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "snake_case")]
pub enum Sweep {
    /// Vary the number of nonzero coefficients, all equal to `magnitude`.
    Sparsity {
        values: Vec<usize>,
        magnitude: f64,
        noise_sigma: f64,
    },
    /// Vary the coefficient size `M` at fixed sparsity. With `two_mixture`
    /// the first `k/2` coefficients are `M` and the remaining ones are
    /// `M²/(10√(2 ln p))`.
    Magnitude {
        values: Vec<f64>,
        k: usize,
        noise_sigma: f64,
        #[serde(default)]
        two_mixture: bool,
    },
    /// Vary the correlation parameter of a correlated design; the kind
    /// comes from the design's own correlation.
    Correlation {
        values: Vec<f64>,
        k: usize,
        magnitude: f64,
        noise_sigma: f64,
    },
    /// An explicit list of signals; the sweep value is the 1-based position.
    Signals { signals: Vec<SignalSpec> },
}

impl Sweep {
    pub fn len(&self) -> usize {
        match self {
            Sweep::Sparsity { values, .. } => values.len(),
            Sweep::Magnitude { values, .. } | Sweep::Correlation { values, .. } => values.len(),
            Sweep::Signals { signals } => signals.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn axis_label(&self) -> &'static str {
        match self {
            Sweep::Sparsity { .. } => "sparsity k",
            Sweep::Magnitude { .. } => "signal magnitude M",
            Sweep::Correlation { .. } => "correlation rho",
            Sweep::Signals { .. } => "signal index",
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        match self {
            Sweep::Sparsity { values, .. } => values[i] as f64,
            Sweep::Magnitude { values, .. } | Sweep::Correlation { values, .. } => values[i],
            Sweep::Signals { .. } => (i + 1) as f64,
        }
    }
}

/// One sweep point made concrete.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub design: DesignSpec,
    pub signal: SignalSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub design: DesignSpec,
    pub sweep: Sweep,
    pub methods: Vec<Method>,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<OutputKind>,
}

fn default_outputs() -> Vec<OutputKind> {
    OutputKind::DEFAULT.to_vec()
}

impl ExperimentConfig {
    /// Parses without validating, so that overrides can be applied first.
    pub fn parse_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config = Self::parse_json(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn wants(&self, kind: OutputKind) -> bool {
        self.outputs.contains(&kind)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(Error::Config(format!("method {m} is listed twice")));
            }
        }
        if self.sweep.is_empty() {
            return Err(Error::Config("the sweep has no values".into()));
        }
        let increasing = match &self.sweep {
            Sweep::Sparsity { values, .. } => values.windows(2).all(|w| w[0] < w[1]),
            Sweep::Magnitude { values, .. } | Sweep::Correlation { values, .. } => {
                values.windows(2).all(|w| w[0] < w[1])
            }
            Sweep::Signals { .. } => true,
        };
        if !increasing {
            return Err(Error::Config("sweep values must be strictly increasing".into()));
        }
        if let Sweep::Correlation { .. } = self.sweep {
            if self.design.family != Family::GaussianCorrelated {
                return Err(Error::Config("a correlation sweep needs a correlated design".into()));
            }
        }
        for i in 0..self.sweep.len() {
            self.point(i)?;
        }
        Ok(())
    }

    /// The design and signal at sweep position `i`.
    pub fn point(&self, i: usize) -> Result<SweepPoint> {
        let p = self.design.p;
        let mut design = self.design.clone();
        let signal = match &self.sweep {
            Sweep::Sparsity { values, magnitude, noise_sigma } => {
                SignalSpec::uniform(p, values[i], *magnitude, *noise_sigma)
            }
            Sweep::Magnitude { values, k, noise_sigma, two_mixture } => {
                let m = values[i];
                if *two_mixture {
                    let first = k / 2;
                    let second = k - first;
                    let blocks = [
                        (first, m),
                        (second, m * m / (10.0 * (2.0 * (p as f64).ln()).sqrt())),
                    ]
                    .into_iter()
                    .filter(|&(count, _)| count > 0)
                    .map(|(count, magnitude)| SignalBlock { count, magnitude })
                    .collect();
                    SignalSpec {
                        p,
                        blocks,
                        noise_sigma: *noise_sigma,
                        shuffle_support: false,
                    }
                } else {
                    SignalSpec::uniform(p, *k, m, *noise_sigma)
                }
            }
            Sweep::Correlation { values, k, magnitude, noise_sigma } => {
                let rho = values[i];
                design.correlation = match design.correlation {
                    Some(Correlation::Equi(_)) => Some(Correlation::Equi(rho)),
                    Some(Correlation::Decaying(_)) => Some(Correlation::Decaying(rho)),
                    None => return Err(Error::Config("a correlation sweep needs a correlation kind".into())),
                };
                SignalSpec::uniform(p, *k, *magnitude, *noise_sigma)
            }
            Sweep::Signals { signals } => signals[i].clone(),
        };
        design.validate()?;
        signal.validate()?;
        if signal.p != p {
            return Err(Error::Config(format!(
                "signal at sweep position {} has length {} but the design has p = {p}",
                i + 1,
                signal.p
            )));
        }
        Ok(SweepPoint {
            value: self.sweep.value(i),
            design,
            signal,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Fig1,
    Study1a,
    Study1b,
    Study2a,
    Study2b,
    Study3a,
    Study3b,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::Fig1,
        Preset::Study1a,
        Preset::Study1b,
        Preset::Study2a,
        Preset::Study2b,
        Preset::Study3a,
        Preset::Study3b,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Study1a => "study1a",
            Preset::Study1b => "study1b",
            Preset::Study2a => "study2a",
            Preset::Study2b => "study2b",
            Preset::Study3a => "study3a",
            Preset::Study3b => "study3b",
        }
    }

    pub fn from_name(name: &str) -> Option<Preset> {
        Preset::ALL.into_iter().find(|p| p.name() == name)
    }
}

/// Replicate count at a given scale: 500 at full scale, 100 at the desk
/// scale 0.25, linear in between and proportional below.
pub fn replicates_for_scale(scale: f64) -> usize {
    let r = if scale >= DESK_SCALE {
        DESK_REPLICATES as f64
            + (scale - DESK_SCALE) * (FULL_REPLICATES - DESK_REPLICATES) as f64 / (1.0 - DESK_SCALE)
    } else {
        DESK_REPLICATES as f64 * scale / DESK_SCALE
    };
    (r.round() as usize).max(1)
}

fn scaled(v: usize, scale: f64) -> usize {
    ((v as f64 * scale).round() as usize).max(1)
}

/// Scaled integer grid with duplicates removed.
fn scaled_grid(full: impl IntoIterator<Item = usize>, scale: f64) -> Vec<usize> {
    let mut out: Vec<usize> = full.into_iter().map(|v| scaled(v, scale)).collect();
    out.dedup();
    out
}

fn strong(p: usize, factor: f64) -> f64 {
    factor * (2.0 * (p as f64).ln()).sqrt()
}

/// Builds a preset at `scale` (1 is the full published size). Dimensions,
/// sparsities and the replicate count shrink with the scale; magnitudes
/// tied to `√(2 ln p)` use the scaled `p`.
pub fn preset(which: Preset, scale: f64, seed: u64) -> Result<ExperimentConfig> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::Config(format!("scale must lie in (0, 1], got {scale}")));
    }
    let all = Method::ALL.to_vec();
    let sparsity_grid = |top: usize, step: usize| scaled_grid((1..=top / step).map(|i| i * step), scale);
    let (design, sweep) = match which {
        Preset::Fig1 => {
            let (n, p) = (scaled(2000, scale), scaled(1800, scale));
            (
                DesignSpec::gaussian(n, p),
                Sweep::Sparsity {
                    values: sparsity_grid(320, 10),
                    magnitude: strong(p, 100.0),
                    noise_sigma: 1.0,
                },
            )
        }
        Preset::Study1a => {
            let (n, p) = (scaled(1000, scale), scaled(1000, scale));
            (
                DesignSpec::gaussian(n, p),
                Sweep::Sparsity {
                    values: sparsity_grid(200, 10),
                    magnitude: 100.0,
                    noise_sigma: 1.0,
                },
            )
        }
        Preset::Study1b => {
            // ±1/√500 at n = 800, i.e. variance 1/(0.625 n)
            let (n, p) = (scaled(800, scale), scaled(1200, scale));
            (
                DesignSpec::bernoulli(n, p).with_scale(1.0 / (0.625 * n as f64)),
                Sweep::Sparsity {
                    values: sparsity_grid(200, 10),
                    magnitude: 100.0,
                    noise_sigma: 1.0,
                },
            )
        }
        Preset::Study2a | Preset::Study2b => {
            let (n, p) = (scaled(500, scale), scaled(1000, scale));
            let factors = [0.2, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.4, 4.0, 5.0, 6.0, 8.0, 10.0];
            (
                DesignSpec::gaussian(n, p),
                Sweep::Magnitude {
                    values: factors.iter().map(|&f| strong(p, f)).collect(),
                    k: scaled(80, scale),
                    noise_sigma: 1.0,
                    two_mixture: which == Preset::Study2b,
                },
            )
        }
        Preset::Study3a | Preset::Study3b => {
            let (n, p) = (scaled(500, scale), scaled(1000, scale));
            let correlation = if which == Preset::Study3a {
                Correlation::Equi(0.0)
            } else {
                Correlation::Decaying(0.0)
            };
            (
                DesignSpec::correlated(n, p, correlation),
                Sweep::Correlation {
                    values: (0..9).map(|i| i as f64 / 10.0).collect(),
                    k: scaled(80, scale),
                    magnitude: strong(p, 100.0),
                    noise_sigma: 1.0,
                },
            )
        }
    };
    let config = ExperimentConfig {
        design,
        sweep,
        methods: all,
        replicates: replicates_for_scale(scale),
        seed,
        outputs: default_outputs(),
    };
    config.validate()?;
    Ok(config)
}
