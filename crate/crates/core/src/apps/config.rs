//! Flat `key = value` experiment configuration.
//!
//! Every report embeds the fully resolved configuration (all defaults
//! written out) so a run can be repeated from the report alone.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::device::DeviceParams;
use crate::error::{Error, Result};
use crate::mapping::SignedMode;
use crate::system::ConverterSpec;
use crate::write_verify::{WriteVerifyConfig, DEFAULT_TOL_FRACTION};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Mvm,
    Inv,
    Pinv,
    Egv,
    NnInfer,
    ProgramDemo,
    Run,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Mvm => "mvm",
            Self::Inv => "inv",
            Self::Pinv => "pinv",
            Self::Egv => "egv",
            Self::NnInfer => "nn-infer",
            Self::ProgramDemo => "program-demo",
            Self::Run => "run",
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "mvm" => Self::Mvm,
            "inv" => Self::Inv,
            "pinv" => Self::Pinv,
            "egv" => Self::Egv,
            "nn-infer" => Self::NnInfer,
            "program-demo" => Self::ProgramDemo,
            "run" => Self::Run,
            _ => return Err(Error::Config(format!("unknown experiment '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    Wishart(usize),
    Gram(usize),
    Regression(usize, usize),
    File(PathBuf),
}

impl fmt::Display for MatrixSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Wishart(n) => write!(f, "wishart({n})"),
            Self::Gram(n) => write!(f, "gram({n})"),
            Self::Regression(m, n) => write!(f, "regression({m},{n})"),
            Self::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for MatrixSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if let Some(p) = s.strip_prefix("file:") {
            return Ok(Self::File(PathBuf::from(p)));
        }
        let bad = || Error::Config(format!("bad matrix source '{s}'"));
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let args: Vec<usize> = rest
            .strip_suffix(')')
            .ok_or_else(bad)?
            .split(',')
            .map(|a| a.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let src = match (name.trim(), args.as_slice()) {
            ("wishart", [n]) => Self::Wishart(*n),
            ("gram", [n]) => Self::Gram(*n),
            ("regression", [m, n]) => Self::Regression(*m, *n),
            _ => return Err(bad()),
        };
        match src {
            Self::Wishart(0) | Self::Gram(0) | Self::Regression(0, _) | Self::Regression(_, 0) => {
                Err(Error::Config(format!(
                    "generator dimensions must be >= 1 in '{s}'"
                )))
            }
            ok => Ok(ok),
        }
    }
}

fn default_data(file: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(file)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// `None` picks the experiment's default generator.
    pub matrix: Option<MatrixSource>,
    /// Weight resolution: 4 (one slice) or 8 (two slices).
    pub bits: u32,
    pub signed_mode: SignedMode,
    pub noise: bool,
    pub seed: u64,
    pub trials: usize,
    /// EGV eigenvalue in problem units; `None` runs power iteration.
    pub lambda: Option<f64>,
    pub weights: PathBuf,
    pub images: PathBuf,
    pub labels: PathBuf,
    /// Images evaluated from the start of the file; `None` means all.
    pub n_images: Option<usize>,
    pub device: DeviceParams,
    pub converter: ConverterSpec,
    pub tol_fraction: f64,
    pub write_verify: WriteVerifyConfig,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        let device = DeviceParams::default();
        Self {
            experiment,
            matrix: None,
            bits: 4,
            signed_mode: SignedMode::Differential,
            noise: true,
            seed: 0,
            trials: 1,
            lambda: None,
            weights: default_data("cnn.amcw"),
            images: default_data("mnist-1k-images-idx3-ubyte"),
            labels: default_data("mnist-1k-labels-idx1-ubyte"),
            n_images: Some(1000),
            device,
            converter: ConverterSpec::default(),
            tol_fraction: DEFAULT_TOL_FRACTION,
            write_verify: WriteVerifyConfig::for_device(&device),
        }
    }

    pub fn matrix_source(&self) -> MatrixSource {
        self.matrix.clone().unwrap_or(match self.experiment {
            Experiment::Pinv => MatrixSource::Regression(128, 6),
            Experiment::Egv => MatrixSource::Gram(128),
            Experiment::ProgramDemo => MatrixSource::Wishart(16),
            _ => MatrixSource::Wishart(128),
        })
    }

    /// Device model actually simulated: noise off zeroes both noise sources.
    pub fn effective_device(&self) -> DeviceParams {
        let mut d = self.device;
        d.rng_seed = self.seed;
        if self.noise {
            d
        } else {
            d.noiseless()
        }
    }

    /// Write-verify schedule with the tolerance derived from `tol_fraction`.
    pub fn effective_write_verify(&self) -> WriteVerifyConfig {
        self.write_verify
            .with_tol_fraction(&self.device, self.tol_fraction)
    }

    pub fn n_slices(&self) -> u32 {
        self.bits / 4
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.bits, 4 | 8) {
            return Err(Error::Config(format!(
                "bits must be 4 or 8, got {}",
                self.bits
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.tol_fraction > 0.0 && self.tol_fraction <= 1.0) {
            return Err(Error::Config("tol_fraction must be in (0, 1]".into()));
        }
        if let Some(l) = self.lambda {
            if !l.is_finite() {
                return Err(Error::Config("lambda must be finite".into()));
            }
        }
        self.device
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.converter
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.effective_write_verify()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. Unknown keys are rejected.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Config(format!("bad value '{v}' for {key}")))
        }
        fn flag(key: &str, v: &str) -> Result<bool> {
            match v {
                "on" | "true" => Ok(true),
                "off" | "false" => Ok(false),
                _ => Err(Error::Config(format!("{key} must be on or off, got '{v}'"))),
            }
        }
        let d = &mut self.device;
        let wv = &mut self.write_verify;
        match key {
            "experiment" => self.experiment = value.parse()?,
            "matrix" => {
                self.matrix = if value == "default" {
                    None
                } else {
                    Some(value.parse()?)
                }
            }
            "bits" => self.bits = num(key, value)?,
            "signed_mode" => {
                self.signed_mode = match value {
                    "differential" => SignedMode::Differential,
                    "nonnegative" => SignedMode::Nonnegative,
                    _ => return Err(Error::Config(format!("unknown signed_mode '{value}'"))),
                }
            }
            "noise" => self.noise = flag(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "trials" => self.trials = num(key, value)?,
            "lambda" => {
                self.lambda = if value == "auto" {
                    None
                } else {
                    Some(num(key, value)?)
                }
            }
            "weights" => self.weights = PathBuf::from(value),
            "images" => self.images = PathBuf::from(value),
            "labels" => self.labels = PathBuf::from(value),
            "n_images" => {
                self.n_images = if value == "all" {
                    None
                } else {
                    Some(num(key, value)?)
                }
            }
            "g_min" => d.g_min = num(key, value)?,
            "g_max" => d.g_max = num(key, value)?,
            "pulse_width" => d.pulse_width = num(key, value)?,
            "v_set" => d.v_set = num(key, value)?,
            "v_th_set" => d.v_th_set = num(key, value)?,
            "v_th_reset" => d.v_th_reset = num(key, value)?,
            "alpha_set" => d.alpha_set = num(key, value)?,
            "alpha_reset" => d.alpha_reset = num(key, value)?,
            "beta_set" => d.beta_set = num(key, value)?,
            "beta_reset" => d.beta_reset = num(key, value)?,
            "sigma_write" => d.sigma_write = num(key, value)?,
            "sigma_read" => d.sigma_read = num(key, value)?,
            "dac_bits" => self.converter.dac_bits = num(key, value)?,
            "adc_bits" => self.converter.adc_bits = num(key, value)?,
            "v_ref" => self.converter.v_ref = num(key, value)?,
            "tol_fraction" => self.tol_fraction = num(key, value)?,
            "max_pulses" => wv.max_pulses = num(key, value)?,
            "vg_start" => wv.vg_start = num(key, value)?,
            "vg_step" => wv.vg_step = num(key, value)?,
            "vg_max" => wv.vg_max = num(key, value)?,
            "vsl_start" => wv.vsl_start = num(key, value)?,
            "vsl_step" => wv.vsl_step = num(key, value)?,
            "vsl_max" => wv.vsl_max = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn from_file(path: &Path, experiment: Experiment) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::new(experiment);
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Every key with its resolved value, one `key = value` per line.
    pub fn to_text(&self) -> String {
        let d = &self.device;
        let wv = &self.write_verify;
        let onoff = |b: bool| if b { "on" } else { "off" };
        let entries: Vec<(&str, String)> = vec![
            ("experiment", self.experiment.name().into()),
            ("matrix", self.matrix_source().to_string()),
            ("bits", self.bits.to_string()),
            ("signed_mode", self.signed_mode.name().into()),
            ("noise", onoff(self.noise).into()),
            ("seed", self.seed.to_string()),
            ("trials", self.trials.to_string()),
            (
                "lambda",
                self.lambda.map_or("auto".into(), |l| format!("{l:?}")),
            ),
            ("weights", self.weights.display().to_string()),
            ("images", self.images.display().to_string()),
            ("labels", self.labels.display().to_string()),
            (
                "n_images",
                self.n_images.map_or("all".into(), |n| n.to_string()),
            ),
            ("g_min", format!("{:?}", d.g_min)),
            ("g_max", format!("{:?}", d.g_max)),
            ("pulse_width", format!("{:?}", d.pulse_width)),
            ("v_set", format!("{:?}", d.v_set)),
            ("v_th_set", format!("{:?}", d.v_th_set)),
            ("v_th_reset", format!("{:?}", d.v_th_reset)),
            ("alpha_set", format!("{:?}", d.alpha_set)),
            ("alpha_reset", format!("{:?}", d.alpha_reset)),
            ("beta_set", format!("{:?}", d.beta_set)),
            ("beta_reset", format!("{:?}", d.beta_reset)),
            ("sigma_write", format!("{:?}", d.sigma_write)),
            ("sigma_read", format!("{:?}", d.sigma_read)),
            ("dac_bits", self.converter.dac_bits.to_string()),
            ("adc_bits", self.converter.adc_bits.to_string()),
            ("v_ref", format!("{:?}", self.converter.v_ref)),
            ("tol_fraction", format!("{:?}", self.tol_fraction)),
            ("max_pulses", wv.max_pulses.to_string()),
            ("vg_start", format!("{:?}", wv.vg_start)),
            ("vg_step", format!("{:?}", wv.vg_step)),
            ("vg_max", format!("{:?}", wv.vg_max)),
            ("vsl_start", format!("{:?}", wv.vsl_start)),
            ("vsl_step", format!("{:?}", wv.vsl_step)),
            ("vsl_max", format!("{:?}", wv.vsl_max)),
        ];
        entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
