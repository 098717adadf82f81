//! Run configuration: command-line flags layered over an optional JSON config file.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use idsense_core::capacity::Mode;
use idsense_core::channel::{validate_channel, RawChannel, StateDmc};
use idsense_core::estimation::DistortionMatrix;
use idsense_core::sim::IdentitySample;
use num_bigint::BigUint;
use serde::Deserialize;

use crate::error::{CliError, CliResult, Context};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Det,
    Rand,
    Both,
}

impl ModeArg {
    pub fn modes(self) -> Vec<Mode> {
        match self {
            ModeArg::Det => vec![Mode::Deterministic],
            ModeArg::Rand => vec![Mode::Randomized],
            ModeArg::Both => vec![Mode::Deterministic, Mode::Randomized],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleArg {
    All,
    Random,
}

/// Numbers in a config file may be written as JSON numbers or strings.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum NumberOrString {
    Number(serde_json::Number),
    Text(String),
}

impl NumberOrString {
    fn into_string(self) -> String {
        match self {
            NumberOrString::Number(n) => n.to_string(),
            NumberOrString::Text(s) => s,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum GridSpec {
    List(Vec<f64>),
    Text(String),
}

fn opt_number_string<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    Ok(Option::<NumberOrString>::deserialize(d)?.map(NumberOrString::into_string))
}

fn opt_grid<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    Ok(Option::<GridSpec>::deserialize(d)?.map(|g| match g {
        GridSpec::List(v) => v.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
        GridSpec::Text(s) => s,
    }))
}

/// Every experiment parameter. Flags override the config file field by field.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Channel description (JSON)
    #[arg(long)]
    pub channel: Option<PathBuf>,
    /// Distortion matrix: `hamming` or a JSON file
    #[arg(long)]
    pub distortion: Option<String>,
    /// Per-symbol distortion budget
    #[arg(short = 'D', long = "budget", allow_negative_numbers = true)]
    #[serde(rename = "D")]
    pub budget: Option<f64>,
    /// Budget grid, `a:b:step` or a comma-separated list
    #[arg(long)]
    #[serde(deserialize_with = "opt_grid")]
    pub grid: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Pilot length
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of identities N (decimal, any size)
    #[arg(long)]
    #[serde(deserialize_with = "opt_number_string")]
    pub identities: Option<String>,
    /// Number of colors M
    #[arg(long)]
    pub colors: Option<usize>,
    /// Typicality radius
    #[arg(long)]
    pub eps: Option<f64>,
    /// Trials per identity pair
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also run the exhaustive oracle; fail with exit code 4 if it is too large
    #[arg(long)]
    pub exact: bool,
    /// Tail mass for the image-size bounds
    #[arg(long)]
    pub mu: Option<f64>,
    /// Identity pairs to simulate
    #[arg(long, value_enum)]
    pub sample: Option<SampleArg>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Settings {
    /// Flags win; file paths in the config are relative to the config file.
    pub fn merge(self, file: Settings, base: &Path) -> Settings {
        let rebase = |p: PathBuf| if p.is_relative() { base.join(p) } else { p };
        let distortion = self.distortion.or(file.distortion.map(|d| {
            if d == "hamming" {
                d
            } else {
                rebase(PathBuf::from(d)).to_string_lossy().into_owned()
            }
        }));
        Settings {
            channel: self.channel.or(file.channel.map(rebase)),
            distortion,
            budget: self.budget.or(file.budget),
            grid: self.grid.or(file.grid),
            mode: self.mode.or(file.mode),
            n: self.n.or(file.n),
            identities: self.identities.or(file.identities),
            colors: self.colors.or(file.colors),
            eps: self.eps.or(file.eps),
            trials: self.trials.or(file.trials),
            seed: self.seed.or(file.seed),
            exact: self.exact || file.exact,
            mu: self.mu.or(file.mu),
            sample: self.sample.or(file.sample),
            format: self.format.or(file.format),
            out: self.out.or(file.out.map(rebase)),
        }
    }

    pub fn require<T: Clone>(value: &Option<T>, flag: &str) -> CliResult<T> {
        value.clone().ok_or_else(|| CliError::Config(format!("missing required parameter --{flag}")))
    }

    pub fn budget(&self) -> CliResult<f64> {
        let d = Self::require(&self.budget, "budget")?;
        if !d.is_finite() {
            return Err(CliError::Config(format!("budget {d} is not finite")));
        }
        Ok(d)
    }

    pub fn identities(&self) -> CliResult<BigUint> {
        let text = Self::require(&self.identities, "identities")?;
        BigUint::parse_bytes(text.trim().as_bytes(), 10)
            .ok_or_else(|| CliError::Config(format!("--identities `{text}` is not a nonnegative integer")))
    }

    pub fn eps(&self) -> CliResult<f64> {
        let eps = Self::require(&self.eps, "eps")?;
        if !(eps > 0.0 && eps < 1.0) {
            return Err(CliError::Config(format!("--eps {eps} must lie in (0, 1)")));
        }
        Ok(eps)
    }

    pub fn mu(&self) -> CliResult<f64> {
        let mu = self.mu.unwrap_or(0.1);
        if !(mu > 0.0 && mu < 1.0) {
            return Err(CliError::Config(format!("--mu {mu} must lie in (0, 1)")));
        }
        Ok(mu)
    }

    pub fn sample(&self, identities: &BigUint) -> IdentitySample {
        match self.sample {
            Some(SampleArg::All) => IdentitySample::All,
            Some(SampleArg::Random) => IdentitySample::Random,
            None if *identities <= BigUint::from(idsense_core::sim::ALL_PAIRS_LIMIT) => IdentitySample::All,
            None => IdentitySample::Random,
        }
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }
}

/// Reads a `--config` file.
pub fn load_config(path: &Path) -> CliResult<Settings> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
}

pub(crate) fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Read {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Channel file: a raw channel plus an optional inline distortion matrix.
#[derive(Debug, Clone, Deserialize)]
pub struct ChannelFile {
    #[serde(flatten)]
    pub raw: RawChannel,
    #[serde(default)]
    pub distortion: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum DistortionFile {
    Matrix(Vec<Vec<f64>>),
    Wrapped { distortion: Vec<Vec<f64>> },
}

/// A validated channel with the distortion matrix it is scored with.
#[derive(Debug, Clone)]
pub struct Problem {
    pub channel: StateDmc,
    pub distortion: DistortionMatrix,
}

pub fn load_problem(settings: &Settings) -> CliResult<Problem> {
    let path = Settings::require(&settings.channel, "channel")?;
    let text = read(&path)?;
    let file: ChannelFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("channel file {}: {e}", path.display())))?;
    let channel = validate_channel(&file.raw).context(&format!("channel file {}", path.display()))?;
    let rows = match settings.distortion.as_deref() {
        Some("hamming") => None,
        Some(other) => {
            let dpath = PathBuf::from(other);
            let parsed: DistortionFile = serde_json::from_str(&read(&dpath)?)
                .map_err(|e| CliError::Config(format!("distortion file {}: {e}", dpath.display())))?;
            Some(match parsed {
                DistortionFile::Matrix(m) | DistortionFile::Wrapped { distortion: m } => m,
            })
        }
        None => file.distortion,
    };
    let distortion = match rows {
        Some(rows) => DistortionMatrix::new(&rows).context("distortion matrix")?,
        None => DistortionMatrix::hamming(channel.state_size()),
    };
    if distortion.size() != channel.state_size() {
        return Err(CliError::Config(format!(
            "distortion matrix is {0}x{0} but the channel has {1} states",
            distortion.size(),
            channel.state_size()
        )));
    }
    Ok(Problem { channel, distortion })
}

/// `a:b:step` (inclusive of `b` up to rounding) or `d1,d2,...`.
pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let bad = |why: &str| CliError::Config(format!("grid `{spec}`: {why}"));
    let number = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(&format!("`{s}` is not a number")));
    let grid: Vec<f64> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected a:b:step"));
        }
        let (a, b, step) = (number(parts[0])?, number(parts[1])?, number(parts[2])?);
        if !a.is_finite() || !b.is_finite() || step.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || b < a {
            return Err(bad("need a <= b and step > 0"));
        }
        let count = ((b - a) / step + 1e-9).floor() as usize + 1;
        if count > 100_000 {
            return Err(bad("more than 100000 points"));
        }
        (0..count).map(|k| a + k as f64 * step).collect()
    } else {
        spec.split(',').map(number).collect::<CliResult<_>>()?
    };
    if grid.is_empty() {
        return Err(bad("empty grid"));
    }
    if grid.iter().any(|d| !d.is_finite()) {
        return Err(bad("entries must be finite"));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(bad("grid must be ascending"));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.05,0.3,0.6").unwrap(), vec![0.05, 0.3, 0.6]);
        assert_eq!(parse_grid("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("0.1:0.3:0.1").unwrap().len(), 3);
        assert!(parse_grid("0.3,0.1").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("x").is_err());
    }

    #[test]
    fn flags_override_config() {
        let file: Settings = serde_json::from_str(
            r#"{"channel": "ch.json", "D": 0.3, "identities": 12, "grid": [0.1, 0.2], "seed": 4}"#,
        )
        .unwrap();
        let flags = Settings {
            seed: Some(9),
            ..Settings::default()
        };
        let merged = flags.merge(file, Path::new("/cfg"));
        assert_eq!(merged.channel, Some(PathBuf::from("/cfg/ch.json")));
        assert_eq!(merged.seed, Some(9));
        assert_eq!(merged.budget, Some(0.3));
        assert_eq!(merged.identities.as_deref(), Some("12"));
        assert_eq!(merged.grid.as_deref(), Some("0.1,0.2"));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(serde_json::from_str::<Settings>(r#"{"chanel": "x"}"#).is_err());
    }
}
