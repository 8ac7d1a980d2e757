use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentKind {
    Toy,
    Sparse,
    Deblur,
    Track,
    Minimax,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [Self::Toy, Self::Sparse, Self::Deblur, Self::Track, Self::Minimax];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Toy => "toy",
            Self::Sparse => "sparse",
            Self::Deblur => "deblur",
            Self::Track => "track",
            Self::Minimax => "minimax",
        }
    }

    pub fn about(&self) -> &'static str {
        match self {
            Self::Toy => "Binary signal seen through two Gaussian channels: PLMMSE against naive convex combinations",
            Self::Sparse => "Sparse recovery in a Hadamard dictionary from a blurred and a direct channel over an SNR grid",
            Self::Deblur => "Fusion of a blurred signal with a noisy sharp copy, against denoising and Wiener deconvolution",
            Self::Track => "Maneuvering target tracking: recursive PLMMSE, Kalman and IMM over the acceleration noise grid",
            Self::Minimax => "Worst-case distribution check: PLMMSE against random nonlinear challengers",
        }
    }

    /// Default Monte Carlo count.
    pub fn default_mc(&self) -> usize {
        match self {
            Self::Toy => 100_000,
            Self::Sparse => 200,
            Self::Deblur => 100,
            Self::Track => 100,
            Self::Minimax => 100_000,
        }
    }

    pub fn mc_units(&self) -> &'static str {
        match self {
            Self::Toy | Self::Minimax => "draws",
            Self::Sparse | Self::Deblur => "trials",
            Self::Track => "runs",
        }
    }

    pub fn schema(&self) -> &'static [ParamSpec] {
        match self {
            Self::Toy => TOY,
            Self::Sparse => SPARSE,
            Self::Deblur => DEBLUR,
            Self::Track => TRACK,
            Self::Minimax => MINIMAX,
        }
    }

    pub fn spec(&self, key: &str) -> Option<&'static ParamSpec> {
        self.schema().iter().find(|s| s.key == key)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamType {
    Float,
    Int,
    Bool,
    /// `start:step:stop` (inclusive) or a comma-separated list.
    Grid,
    Choice(&'static [&'static str]),
}

/// One experiment parameter: flag name, default, units and description.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamSpec {
    pub key: &'static str,
    pub kind: ParamType,
    pub default: &'static str,
    pub units: &'static str,
    pub help: &'static str,
}

const fn param(key: &'static str, kind: ParamType, default: &'static str, units: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec {
        key,
        kind,
        default,
        units,
        help,
    }
}

use ParamType::{Bool, Choice, Float, Grid, Int};

const TOY: &[ParamSpec] = &[
    param("sigma-u2", Float, "1", "variance", "noise variance of the Y channel"),
    param("sigma-v2", Float, "1", "variance", "noise variance of the Z channel"),
    param("alpha-grid", Grid, "0:0.025:1", "weight in [0, 1]", "weights of the naive combinations"),
];

const SPARSE: &[ParamSpec] = &[
    param("m", Int, "64", "coefficients", "signal length, a power of two"),
    param("p", Float, "0.5", "probability", "probability of the large-variance component"),
    param("sigma1-sq", Float, "1", "variance", "variance of the large component"),
    param("sigma2-sq", Float, "0", "variance", "variance of the small component"),
    param("snr-grid", Grid, "-5:2.5:20", "dB", "input SNR of the Y channel"),
    param("z-snr", Float, "0", "dB", "SNR of the Z channel in the coefficient domain"),
    param("kernel-decay", Float, "8.5", "samples", "decay length of the exponential blur kernel"),
    param("column-norm", Float, "0.99", "unitless", "column norm of the blur matrix"),
    param("g-scale", Float, "0.01", "unitless", "gain of the Z channel"),
    param("brute-force", Bool, "false", "flag", "also run the exhaustive MMSE oracle (m <= 16)"),
    param("beta-nodes", Int, "512", "nodes", "quadrature nodes for the shrinkage variance"),
];

const DEBLUR: &[ParamSpec] = &[
    param("n", Int, "1024", "samples", "signal length"),
    param("levels", Int, "5", "levels", "wavelet decomposition depth"),
    param("wavelet", Choice(&["haar", "sym4"]), "haar", "name", "orthogonal wavelet"),
    param("p", Float, "0.1", "probability", "fraction of active wavelet coefficients"),
    param("sigma1-sq", Float, "10000", "variance", "variance of active coefficients"),
    param("sigma-u2", Float, "0.0833333333333", "variance", "noise variance of the blurred channel"),
    param("sigma-v2", Float, "2025", "variance", "noise variance of the sharp channel"),
    param("blur-sigma", Float, "3.2", "samples", "width of the Gaussian blur kernel"),
    param("em-iterations", Int, "10", "iterations", "EM iterations per band"),
    param("pooling", Choice(&["all", "per-band"]), "all", "name", "pooling of the signal and shrinkage variance estimates"),
];

const TRACK: &[ParamSpec] = &[
    param("p", Float, "0.05", "probability", "maneuver probability per step"),
    param("sigma1", Float, "10", "std dev", "acceleration increment during a maneuver"),
    param("sigma2", Float, "1", "std dev", "nominal acceleration increment"),
    param("sigma-u", Float, "5", "std dev", "position sensor noise"),
    param("sigma-v-grid", Grid, "1:1:15", "std dev", "acceleration sensor noise"),
    param("steps", Int, "1000", "steps", "track length"),
    param("u-noise", Choice(&["gaussian", "mixture"]), "gaussian", "name", "law of the position noise"),
    param("outlier-prob", Float, "0.1", "probability", "outlier probability of the mixture noise"),
    param("variance-ratio", Float, "25", "ratio", "outlier to nominal variance ratio of the mixture noise"),
];

const MINIMAX: &[ParamSpec] = &[
    param("x-dim", Int, "2", "dimension", "dimension of X"),
    param("y-dim", Int, "2", "dimension", "dimension of Y"),
    param("z-dim", Int, "2", "dimension", "dimension of Z"),
    param("slack", Float, "0.5", "variance", "diagonal of the independent noise covariance"),
    param("build-mc", Int, "50000", "draws", "draws used to estimate the construction moments"),
    param("train", Int, "20000", "draws", "training draws for the fitted challengers"),
    param("challengers", Int, "5", "count", "number of random-feature challengers"),
    param("features", Int, "16", "features", "random features per challenger"),
];

/// Parses `start:step:stop` (inclusive), a comma-separated list, or a single
/// number.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| -> Result<f64> {
        let v: f64 = t
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("'{t}' is not a number")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::invalid(format!("'{t}' is not finite")))
        }
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if step == 0.0 || (stop - start) * step < 0.0 {
                return Err(Error::invalid(format!("grid '{s}' never reaches its end")));
            }
            let span = (stop - start) / step;
            let count = span.round();
            if (span - count).abs() > 1e-9 * span.abs().max(1.0) {
                return Err(Error::invalid(format!("grid '{s}': step does not divide the range")));
            }
            if count > 1e6 {
                return Err(Error::invalid(format!("grid '{s}' is too long")));
            }
            Ok((0..=count as usize).map(|k| start + k as f64 * step).collect())
        }
        [_] => s.split(',').map(num).collect(),
        _ => Err(Error::invalid(format!("grid '{s}' must be start:step:stop or a list"))),
    }
}

fn check_value(spec: &ParamSpec, value: &str) -> Result<()> {
    let bad = |what: &str| Error::invalid(format!("--{} expects {what}, got '{value}'", spec.key));
    match spec.kind {
        Float => {
            let v = value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad("a finite number"))?;
            match spec.units {
                "probability" if !(0.0..=1.0).contains(&v) => Err(bad("a probability in [0, 1]")),
                "variance" | "std dev" | "samples" | "ratio" if v < 0.0 => Err(bad("a nonnegative number")),
                _ => Ok(()),
            }
        }
        Int => value.parse::<usize>().map(|_| ()).map_err(|_| bad("a nonnegative integer")),
        Bool => value.parse::<bool>().map(|_| ()).map_err(|_| bad("true or false")),
        Grid => parse_grid(value).map(|_| ()).map_err(|e| bad(&e.to_string())),
        Choice(options) => {
            if options.contains(&value) {
                Ok(())
            } else {
                Err(bad(&format!("one of {}", options.join(", "))))
            }
        }
    }
}

/// A fully specified experiment: parameters, seed, Monte Carlo count and
/// output location.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    params: BTreeMap<String, String>,
    pub seed: u64,
    pub mc_count: usize,
    pub output: Option<PathBuf>,
    /// Also write the per-run values next to the output table.
    pub store_runs: bool,
}

impl ExperimentConfig {
    pub const DEFAULT_SEED: u64 = 1;

    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            params: kind.schema().iter().map(|s| (s.key.to_string(), s.default.to_string())).collect(),
            seed: Self::DEFAULT_SEED,
            mc_count: kind.default_mc(),
            output: None,
            store_runs: false,
        }
    }

    /// Sets a schema parameter or one of `seed`, `mc`, `out`, `store-runs`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| Error::invalid(format!("seed must be a 64-bit unsigned integer, got '{value}'")))?
            }
            "mc" => {
                self.mc_count = value
                    .parse()
                    .map_err(|_| Error::invalid(format!("mc must be a nonnegative integer, got '{value}'")))?
            }
            "out" => self.output = Some(PathBuf::from(value)),
            "store-runs" => {
                self.store_runs = value
                    .parse()
                    .map_err(|_| Error::invalid(format!("store-runs expects true or false, got '{value}'")))?
            }
            _ => {
                let spec = self.kind.spec(key).ok_or_else(|| {
                    Error::invalid(format!("unknown parameter '{key}' for experiment '{}'", self.kind))
                })?;
                check_value(spec, value)?;
                self.params.insert(key.to_string(), value.to_string());
            }
        }
        Ok(())
    }

    /// Reads `key = value` lines; `#` starts a comment. An optional
    /// `experiment = <kind>` line must match `kind` when one is given.
    pub fn parse(text: &str, kind: Option<ExperimentKind>) -> Result<Self> {
        let mut entries = Vec::new();
        let mut declared = None;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("line {}: expected 'key = value'", no + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "experiment" {
                declared = Some(value.parse::<ExperimentKind>()?);
            } else {
                entries.push((no + 1, key.to_string(), value.to_string()));
            }
        }
        let kind = match (kind, declared) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::invalid(format!("config declares experiment '{b}', expected '{a}'")))
            }
            (Some(k), _) | (None, Some(k)) => k,
            (None, None) => return Err(Error::invalid("config does not name an experiment")),
        };
        let mut cfg = Self::new(kind);
        for (no, key, value) in entries {
            cfg.set(&key, &value).map_err(|e| e.context(format!("line {no}")))?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path, kind: Option<ExperimentKind>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, kind).map_err(|e| e.context(format!("config file {}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        for spec in self.kind.schema() {
            let value = self
                .params
                .get(spec.key)
                .ok_or_else(|| Error::invalid(format!("missing parameter '{}'", spec.key)))?;
            check_value(spec, value)?;
        }
        if self.mc_count == 0 {
            return Err(Error::invalid("mc must be positive"));
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Result<&str> {
        self.params
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::invalid(format!("unknown parameter '{key}'")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v = self.raw(key)?;
        v.parse()
            .map_err(|_| Error::invalid(format!("parameter '{key}' = '{v}' is not a number")))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let v = self.raw(key)?;
        v.parse()
            .map_err(|_| Error::invalid(format!("parameter '{key}' = '{v}' is not an integer")))
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        let v = self.raw(key)?;
        v.parse()
            .map_err(|_| Error::invalid(format!("parameter '{key}' = '{v}' is not a boolean")))
    }

    pub fn grid(&self, key: &str) -> Result<Vec<f64>> {
        parse_grid(self.raw(key)?)
    }

    /// Parameters in key order, followed by seed and mc, for table metadata.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = vec![("experiment".to_string(), self.kind.name().to_string())];
        out.extend(self.params.iter().map(|(k, v)| (k.clone(), v.clone())));
        out.push(("seed".into(), self.seed.to_string()));
        out.push(("mc".into(), self.mc_count.to_string()));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("1:1:3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_grid("-5:2.5:20").unwrap().len(), 11);
        assert_eq!(parse_grid("3:-1:1").unwrap(), vec![3.0, 2.0, 1.0]);
        assert_eq!(parse_grid("0.5, 2").unwrap(), vec![0.5, 2.0]);
        assert_eq!(parse_grid("7").unwrap(), vec![7.0]);
        for bad in ["1:0:3", "1:1:2.5", "3:1:1", "a:1:2", "1:2", ""] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn file_parsing_and_overrides() {
        let text = "# sweep\nexperiment = track\nsteps = 200  # shorter\nsigma-v-grid = 1:2:9\nseed = 42\nmc = 3\n";
        let mut cfg = ExperimentConfig::parse(text, None).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Track);
        assert_eq!(cfg.usize("steps").unwrap(), 200);
        assert_eq!(cfg.grid("sigma-v-grid").unwrap().len(), 5);
        assert_eq!((cfg.seed, cfg.mc_count), (42, 3));
        cfg.set("steps", "50").unwrap();
        assert_eq!(cfg.usize("steps").unwrap(), 50);
        cfg.validate().unwrap();

        assert!(ExperimentConfig::parse(text, Some(ExperimentKind::Toy)).is_err());
        assert!(ExperimentConfig::parse("bogus = 1", Some(ExperimentKind::Toy)).is_err());
        assert!(ExperimentConfig::parse("no equals sign", Some(ExperimentKind::Toy)).is_err());
        assert!(ExperimentConfig::parse("", None).is_err());
    }

    #[test]
    fn values_are_type_checked() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Deblur);
        assert!(cfg.set("wavelet", "db2").is_err());
        assert!(cfg.set("levels", "-1").is_err());
        assert!(cfg.set("p", "nan").is_err());
        assert!(cfg.set("seed", "x").is_err());
        cfg.set("wavelet", "sym4").unwrap();
        cfg.validate().unwrap();
    }

    #[test]
    fn defaults_validate() {
        for kind in ExperimentKind::ALL {
            ExperimentConfig::new(kind).validate().unwrap();
            assert_eq!(kind.name().parse::<ExperimentKind>().unwrap(), kind);
        }
    }
}
