//! Flat `key=value` configuration with command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rkbs::feature_space::NormSpec;
use rkbs::learn::{Loss, Regularizer};
use rkbs::{Kernel, RkbsPair, YoungKind, YoungPair};

/// An invalid or missing configuration field.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config field `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl fmt::Display) -> Self {
        Self {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

pub const KNOWN_KEYS: &[&str] = &[
    "command",
    "kernel",
    "gamma",
    "grid_points",
    "pair",
    "p",
    "terms",
    "norm",
    "young",
    "young_p",
    "k",
    "vector",
    "weights",
    "x",
    "y",
    "k_list",
    "samples",
    "sample_count",
    "lambda",
    "lambda_path",
    "loss",
    "reg",
    "seed",
    "out",
    "tol",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    KernelTable,
    Norm,
    SipScan,
    Interpolate,
    Regnet,
    L1,
    Verify,
}

impl FromStr for Command {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Ok(match s.trim() {
            "kernel-table" => Self::KernelTable,
            "norm" => Self::Norm,
            "sip-scan" => Self::SipScan,
            "interpolate" => Self::Interpolate,
            "regnet" => Self::Regnet,
            "l1" => Self::L1,
            "verify" => Self::Verify,
            other => {
                return Err(ConfigError::new(
                    "command",
                    format!("unknown command `{other}`"),
                ))
            }
        })
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::KernelTable => "kernel-table",
            Self::Norm => "norm",
            Self::SipScan => "sip-scan",
            Self::Interpolate => "interpolate",
            Self::Regnet => "regnet",
            Self::L1 => "l1",
            Self::Verify => "verify",
        })
    }
}

/// Raw key/value settings; later insertions win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Parses `key=value` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut settings = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            settings.set_pair(line).map_err(|e| {
                if e.field.is_empty() {
                    ConfigError::new(format!("line {}", n + 1), e.message)
                } else {
                    e
                }
            })?;
        }
        Ok(settings)
    }

    /// Applies one `key=value` assignment.
    pub fn set_pair(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| {
            ConfigError::new("", format!("expected key=value, found `{assignment}`"))
        })?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError::new(key, "unknown key"));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parse_value<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|s| {
                s.parse::<T>()
                    .map_err(|e| ConfigError::new(key, format!("cannot parse `{s}`: {e}")))
            })
            .transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.parse_value::<f64>(key)?.unwrap_or(default);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ConfigError::new(key, "must be finite"))
        }
    }

    pub fn positive_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.f64_or(key, default)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(ConfigError::new(
                key,
                format!("must be positive, found {v}"),
            ))
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        Ok(self.parse_value::<usize>(key)?.unwrap_or(default))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        Ok(self.parse_value::<u64>(key)?.unwrap_or(default))
    }

    /// Comma-separated list of finite floats.
    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(raw) = self.get(key) else {
            return Ok(None);
        };
        let values = raw
            .split(',')
            .map(|s| {
                let s = s.trim();
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| ConfigError::new(key, format!("`{s}` is not a finite number")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if values.is_empty() {
            return Err(ConfigError::new(key, "list is empty"));
        }
        Ok(Some(values))
    }

    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        Ok(self.list(key)?.unwrap_or_else(|| default.to_vec()))
    }

    pub fn command(&self) -> Result<Command, ConfigError> {
        self.get("command")
            .ok_or_else(|| ConfigError::new("command", "no command given"))?
            .parse()
    }

    pub fn seed(&self) -> Result<u64, ConfigError> {
        self.u64_or("seed", 0)
    }

    pub fn tol(&self, default: f64) -> Result<f64, ConfigError> {
        self.positive_or("tol", default)
    }

    pub fn out(&self) -> Option<PathBuf> {
        self.get("out").map(PathBuf::from)
    }

    pub fn kernel(&self) -> Result<Kernel, ConfigError> {
        let name = self.get("kernel").unwrap_or("hat");
        let kernel: Kernel = name.parse().map_err(|e| ConfigError::new("kernel", e))?;
        match kernel {
            Kernel::Gaussian { .. } => Kernel::gaussian(self.positive_or("gamma", 1.0)?)
                .map_err(|e| ConfigError::new("gamma", e)),
            k => Ok(k),
        }
    }

    /// Norm spec from `norm`, `p`, `young`, `young_p`, `k`.
    pub fn norm_spec(&self) -> Result<NormSpec, ConfigError> {
        let kind = self.get("norm").unwrap_or("p");
        match kind {
            "p" => NormSpec::p(self.f64_or("p", 2.0)?).map_err(|e| ConfigError::new("p", e)),
            "sup" => Ok(NormSpec::Sup),
            "orlicz_gauge" => Ok(NormSpec::OrliczGauge(self.young()?)),
            "orlicz_dual" => Ok(NormSpec::OrliczDual(self.young()?)),
            other => Err(ConfigError::new("norm", format!("unknown norm `{other}`"))),
        }
    }

    fn young(&self) -> Result<YoungPair, ConfigError> {
        let kind: YoungKind = self
            .get("young")
            .unwrap_or("entropy")
            .parse()
            .map_err(|e| ConfigError::new("young", e))?;
        match kind {
            YoungKind::Power => YoungPair::power(self.f64_or("young_p", 2.0)?)
                .map_err(|e| ConfigError::new("young_p", e)),
            YoungKind::Entropy => Ok(YoungPair::entropy()),
            YoungKind::ScaledEntropy => YoungPair::scaled_entropy(self.f64_or("k", 1.0)?)
                .map_err(|e| ConfigError::new("k", e)),
        }
    }

    /// A built-in RKBS pair from `pair`, `p`, `terms`, `gamma`, `grid_points`.
    pub fn pair(&self, default: &str) -> Result<RkbsPair, ConfigError> {
        let name = self.get("pair").unwrap_or(default);
        let terms = self.usize_or("terms", 60)?;
        if terms == 0 {
            return Err(ConfigError::new("terms", "must be at least 1"));
        }
        let gamma = self.positive_or("gamma", 1.0)?;
        let built = match name {
            "gaussian_p" => RkbsPair::gaussian_p(self.f64_or("p", 2.0)?, terms, gamma),
            "gaussian_rkhs" => RkbsPair::gaussian_rkhs(terms, gamma),
            "entropy_orlicz" => RkbsPair::entropy_orlicz(terms, gamma),
            "hat_delta" => RkbsPair::hat_delta(self.usize_or("grid_points", 101)?),
            other => return Err(ConfigError::new("pair", format!("unknown pair `{other}`"))),
        };
        built.map_err(|e| ConfigError::new("pair", e))
    }

    pub fn loss(&self) -> Result<Loss, ConfigError> {
        self.get("loss")
            .unwrap_or("square")
            .parse()
            .map_err(|e| ConfigError::new("loss", e))
    }

    pub fn regularizer(&self) -> Result<Regularizer, ConfigError> {
        self.get("reg")
            .unwrap_or("square")
            .parse()
            .map_err(|e| ConfigError::new("reg", e))
    }
}
