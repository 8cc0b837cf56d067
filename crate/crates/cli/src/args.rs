use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;
use weierlift::weier::{parse_amplitude, validate_component, ComponentConfig};
use weierlift::{Error, Phase, Result, TruncationPolicy, VectorWeierstrass};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Component parameters shared by every subcommand. The component exponent
/// flag `--alpha` is declared per subcommand because `norms` uses it for
/// the seminorm exponent.
#[derive(Args, Clone, Debug, Default)]
pub struct ComponentArgs {
    /// Integer base of a component; repeat for each component
    #[arg(long = "b", value_name = "B")]
    pub b: Vec<f64>,
    /// Amplitude `p/q` or decimal, paired with `--b` in order
    #[arg(long = "a", value_name = "A")]
    pub a: Vec<String>,
    /// Phase shared by all components: cos or sin
    #[arg(long, value_name = "PHASE")]
    pub phase: Option<String>,
    /// Use the two-component preset (b, a) = (2, 18/25), (3, 3/5)
    #[arg(long)]
    pub figure1: bool,
    /// JSON or TOML record with a `components` list
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Args, Clone, Debug)]
pub struct PolicyArgs {
    /// Fixed truncation level
    #[arg(long = "N", value_name = "N")]
    pub n: Option<usize>,
    /// Tolerance for the tail-controlled limit
    #[arg(long)]
    pub tol: Option<f64>,
    /// Exponent slack in the tail bound
    #[arg(long = "eps-prime", default_value_t = 0.05)]
    pub eps_prime: f64,
    /// Largest truncation level the tolerance mode may use
    #[arg(long = "max-n", default_value_t = weierlift::weier::DEFAULT_MAX_N)]
    pub max_n: usize,
}

#[derive(Args, Clone, Debug)]
pub struct OutputArgs {
    /// Output file, or directory for commands that write several tables
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub components: Vec<ComponentConfig>,
    #[serde(default)]
    pub y0: Option<Vec<f64>>,
    #[serde(default, rename = "t_end")]
    pub t_end: Option<String>,
}

pub fn read_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::param("config", format!("cannot read {}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
    let parsed = if is_json {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| Error::param("config", format!("{}: {}", path.display(), e.trim())))
}

fn parse_phase(s: &str) -> Result<Phase> {
    s.parse::<Phase>().map_err(|_| Error::param("phase", format!("expected `cos` or `sin`, got `{s}`")))
}

impl ComponentArgs {
    pub fn is_empty(&self) -> bool {
        self.b.is_empty() && self.a.is_empty() && !self.figure1 && self.config.is_none()
    }

    /// Builds the driver from flags; `alpha` holds the component exponents.
    pub fn build(&self, alpha: &[f64]) -> Result<VectorWeierstrass> {
        let phase = self.phase.as_deref().map(parse_phase).transpose()?;
        if self.figure1 {
            if !self.b.is_empty() || !self.a.is_empty() || !alpha.is_empty() || self.config.is_some() {
                return Err(Error::param("figure1", "cannot be combined with --b, --a, --alpha or --config"));
            }
            let v = VectorWeierstrass::figure1();
            return match phase {
                Some(p) => VectorWeierstrass::new(v.components().iter().map(|c| c.with_phase(p)).collect()),
                None => Ok(v),
            };
        }
        if let Some(path) = &self.config {
            if !self.b.is_empty() || !self.a.is_empty() || !alpha.is_empty() {
                return Err(Error::param("config", "cannot be combined with --b, --a or --alpha"));
            }
            let cfg = read_config(path)?;
            let comps = cfg
                .components
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let mut c = c.clone();
                    if let Some(p) = phase {
                        c.phase = p;
                    }
                    c.build().map_err(|e| Error::param("config", format!("component {i}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            return VectorWeierstrass::new(comps);
        }
        if self.b.is_empty() {
            return Err(Error::param("b", "give at least one --b, or use --figure1 or --config"));
        }
        if !self.a.is_empty() && !alpha.is_empty() {
            return Err(Error::param("a", "give amplitudes with either --a or --alpha, not both"));
        }
        let count = self.a.len().max(alpha.len());
        if count != self.b.len() {
            return Err(Error::param(
                "b",
                format!("{} bases but {count} amplitudes; pair each --b with one --a or --alpha", self.b.len()),
            ));
        }
        let phase = phase.unwrap_or_default();
        let comps = self
            .b
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                let amplitude = match self.a.get(i) {
                    Some(a) => parse_amplitude(a)?,
                    None => weierlift::Amplitude::Alpha(alpha[i]),
                };
                validate_component(b, amplitude, phase)
            })
            .collect::<Result<Vec<_>>>()?;
        VectorWeierstrass::new(comps)
    }
}

impl PolicyArgs {
    pub fn policy(&self, default_n: Option<usize>) -> Result<TruncationPolicy> {
        match (self.n, self.tol) {
            (Some(_), Some(_)) => Err(Error::param("tol", "give either --N or --tol, not both")),
            (Some(n), None) => Ok(TruncationPolicy::Fixed(n)),
            (None, Some(tol)) => Ok(TruncationPolicy::Tolerance {
                tol,
                eps_prime: self.eps_prime,
                max_n: self.max_n,
            }),
            (None, None) => default_n
                .map(TruncationPolicy::Fixed)
                .ok_or_else(|| Error::param("N", "give --N or --tol")),
        }
    }
}

pub fn parse_time(flag: &'static str, s: &str) -> Result<weierlift::RationalTime> {
    s.parse().map_err(|e: Error| Error::param(flag, e.to_string()))
}
