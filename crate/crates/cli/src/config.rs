//! Flat-sectioned `key = value` experiment configs.
//!
//! ```text
//! seed = 7
//!
//! [marginal]
//! family = gaussian
//! d = 3
//!
//! [noise]
//! family = boundary_power
//! alpha = 0.7
//! c = 0.5
//! ```
//!
//! Keys before the first section header are top-level. Unknown sections and
//! keys are rejected, as are duplicates.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use halfcert::certificate::{CertificateScaling, Preconditioner};
use halfcert::distributions::{BoundedParams, Marginal};
use halfcert::learner::{GradBound, LearnerConfig};
use halfcert::noise::{NoiseField, TsybakovParams};
use halfcert::oracle::OracleConfig;
use halfcert::rng::derive_seed;
use halfcert::Halfspace;

use crate::CliError;

const KNOWN: &[(&str, &[&str])] = &[
    ("", &["seed"]),
    ("marginal", &["family", "d", "shards"]),
    ("noise", &["family", "alpha", "a_const", "c", "eta"]),
    ("target", &["seed", "w"]),
    (
        "learner",
        &[
            "eps",
            "delta",
            "k",
            "t_max",
            "n_per_iter",
            "lambda",
            "q_bound",
            "G",
            "z_accept",
            "whitening_power",
            "scaling",
        ],
    ),
    (
        "bounds",
        &["preset", "L", "R", "U", "B", "beta", "tail_constant"],
    ),
    ("output", &["directory"]),
];

/// Keys that hold a vector rather than a scalar.
const VECTOR_KEYS: &[&str] = &["target.w"];

/// Parsed but unvalidated config: `section.key` (or `key` at top level) to
/// the value text, in sorted order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = i + 1;
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| {
                        CliError::usage(format!(
                            "config line {lineno}: unterminated section header"
                        ))
                    })?
                    .trim();
                if name.is_empty() || !KNOWN.iter().any(|(s, _)| *s == name) {
                    return Err(CliError::usage(format!(
                        "config line {lineno}: unknown section `[{name}]`"
                    )));
                }
                section = name.to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::usage(format!("config line {lineno}: expected key = value"))
            })?;
            let key = k.trim();
            let path = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            if !is_known(&path) {
                return Err(CliError::usage(format!(
                    "config line {lineno}: unknown key `{path}`"
                )));
            }
            if entries.insert(path.clone(), v.trim().to_string()).is_some() {
                return Err(CliError::usage(format!(
                    "config line {lineno}: duplicate key `{path}`"
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, path: &str) -> Option<&str> {
        self.entries.get(path).map(String::as_str)
    }

    /// Overrides one scalar key, as a sweep does.
    pub fn set_scalar(&mut self, path: &str, value: &str) -> Result<(), CliError> {
        if !is_known(path) {
            return Err(CliError::usage(format!("`{path}` is not a config key")));
        }
        if VECTOR_KEYS.contains(&path) {
            return Err(CliError::usage(format!("`{path}` is not a scalar key")));
        }
        self.entries
            .insert(path.to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

impl fmt::Display for RawConfig {
    /// Canonical text form; parses back to an equal config.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (section, _) in KNOWN {
            let prefix = format!("{section}.");
            let keys: Vec<(&String, &String)> = self
                .entries
                .iter()
                .filter(|(k, _)| {
                    if section.is_empty() {
                        !k.contains('.')
                    } else {
                        k.starts_with(&prefix)
                    }
                })
                .collect();
            if keys.is_empty() {
                continue;
            }
            if !section.is_empty() {
                writeln!(f, "[{section}]")?;
            }
            for (k, v) in keys {
                writeln!(f, "{} = {v}", k.strip_prefix(&prefix).unwrap_or(k))?;
            }
        }
        Ok(())
    }
}

fn is_known(path: &str) -> bool {
    let (section, key) = path.split_once('.').unwrap_or(("", path));
    KNOWN
        .iter()
        .any(|(s, keys)| *s == section && keys.contains(&key))
}

/// Validated experiment config.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub marginal: Marginal,
    pub shards: usize,
    pub noise: NoiseField,
    pub tsybakov: TsybakovParams,
    pub target: Halfspace,
    pub learner: LearnerConfig,
    pub bounds: BoundedParams,
    pub output_dir: Option<PathBuf>,
    pub raw: RawConfig,
}

struct Reader<'a>(&'a RawConfig);

impl Reader<'_> {
    fn num<T: std::str::FromStr>(&self, path: &str, default: T) -> Result<T, CliError> {
        match self.0.get(path) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| CliError::usage(format!("{path}: cannot parse `{v}`"))),
        }
    }

    fn opt_f64(&self, path: &str) -> Result<Option<f64>, CliError> {
        match self.0.get(path) {
            None | Some("auto") => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::usage(format!("{path}: cannot parse `{v}`"))),
        }
    }

    fn req_f64(&self, path: &str, why: &str) -> Result<f64, CliError> {
        self.opt_f64(path)?
            .ok_or_else(|| CliError::usage(format!("{path}: required {why}")))
    }

    fn text<'b>(&'b self, path: &str, default: &'b str) -> &'b str {
        self.0.get(path).unwrap_or(default)
    }
}

/// Tags a core validation error with the config key it came from.
fn field(path: &str) -> impl Fn(halfcert::Error) -> CliError + '_ {
    move |e| CliError::usage(format!("{path}: {e}"))
}

pub fn parse_vector(text: &str) -> Result<Vec<f64>, CliError> {
    text.split([',', ';'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::usage(format!("cannot parse `{s}` as a number")))
        })
        .collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        Self::from_raw(RawConfig::parse(text)?)
    }

    pub fn from_raw(raw: RawConfig) -> Result<Self, CliError> {
        let r = Reader(&raw);
        let seed: u64 = r.num("seed", 0)?;

        let d: usize = r.num("marginal.d", 2)?;
        let marginal = Marginal::from_name(r.text("marginal.family", "gaussian"), d)
            .map_err(field("marginal"))?;
        let shards: usize = r.num("marginal.shards", 8)?;
        if shards == 0 {
            return Err(CliError::usage("marginal.shards: must be at least 1"));
        }

        let noise = match r.text("noise.family", "boundary_power") {
            "boundary_power" => NoiseField::BoundaryPower {
                c: r.num("noise.c", 0.5)?,
            },
            "constant_massart" => NoiseField::ConstantMassart {
                eta: r.req_f64("noise.eta", "for constant_massart")?,
            },
            "zero" => NoiseField::Zero,
            other => {
                return Err(CliError::usage(format!(
                "noise.family: unknown family `{other}` (boundary_power, constant_massart, zero)"
            )))
            }
        };
        noise.validate().map_err(field("noise"))?;
        let alpha: f64 = r.num("noise.alpha", 0.7)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CliError::usage(format!(
                "noise.alpha: must lie in (0, 1), got {alpha}"
            )));
        }
        let a_const = match r.opt_f64("noise.a_const")? {
            Some(a) => a,
            None => noise.admissible_a(alpha, marginal.projection_density_sup()),
        };
        let tsybakov = TsybakovParams::new(alpha, a_const).map_err(field("noise.a_const"))?;

        let target = match raw.get("target.w") {
            Some(text) => {
                let w = parse_vector(text)?;
                if w.len() != d {
                    return Err(CliError::usage(format!(
                        "target.w: has {} coordinates, marginal.d is {d}",
                        w.len()
                    )));
                }
                Halfspace::from_coords(w).map_err(field("target.w"))?
            }
            None => {
                let tseed: u64 = r.num("target.seed", derive_seed(seed, "target"))?;
                random_direction(d, tseed)?
            }
        };

        let bounds = match r.text("bounds.preset", "log_concave_default") {
            "log_concave_default" => match r.opt_f64("bounds.tail_constant")? {
                None => BoundedParams::log_concave_default(),
                Some(c) => BoundedParams::log_concave_with_tail_constant(c)
                    .map_err(field("bounds.tail_constant"))?,
            },
            "gaussian" => {
                BoundedParams::gaussian(r.req_f64("bounds.R", "for the gaussian preset")?)
                    .map_err(field("bounds.R"))?
            }
            "custom" => BoundedParams::new(
                r.req_f64("bounds.L", "for the custom preset")?,
                r.req_f64("bounds.R", "for the custom preset")?,
                r.opt_f64("bounds.U")?,
                r.req_f64("bounds.B", "for the custom preset")?,
                r.req_f64("bounds.beta", "for the custom preset")?,
            )
            .map_err(field("bounds"))?,
            other => {
                return Err(CliError::usage(format!(
                "bounds.preset: unknown preset `{other}` (log_concave_default, gaussian, custom)"
            )))
            }
        };

        let mut learner = LearnerConfig::new(
            r.num("learner.eps", 0.15)?,
            r.num("learner.k", 4)?,
            bounds,
            tsybakov,
        );
        learner.delta = r.num("learner.delta", learner.delta)?;
        learner.t_max = r.num("learner.t_max", learner.t_max)?;
        learner.n_per_iter = r.num("learner.n_per_iter", learner.n_per_iter)?;
        learner.lambda = r.opt_f64("learner.lambda")?;
        learner.q_bound = r.num("learner.q_bound", learner.q_bound)?;
        learner.z_accept = r.num("learner.z_accept", learner.z_accept)?;
        learner.grad_bound = match r.text("learner.G", "adaptive") {
            "adaptive" => GradBound::Adaptive,
            v => GradBound::Fixed(
                v.parse()
                    .map_err(|_| CliError::usage(format!("learner.G: cannot parse `{v}`")))?,
            ),
        };
        learner.preconditioner = match r.num("learner.whitening_power", 3u32)? {
            0 => Preconditioner::Identity,
            power => Preconditioner::MarginWhitening { power },
        };
        learner.scaling = match r.text("learner.scaling", "minimal_norm") {
            "minimal_norm" => CertificateScaling::MinimalNorm,
            "full_budget" => CertificateScaling::FullBudget,
            other => {
                return Err(CliError::usage(format!(
                    "learner.scaling: unknown scaling `{other}` (minimal_norm, full_budget)"
                )))
            }
        };
        learner.seed = derive_seed(seed, "learner");
        learner.validate().map_err(|e| match e {
            halfcert::Error::InvalidParameter { name, reason } => {
                CliError::usage(format!("learner.{name}: {reason}"))
            }
            e => CliError::usage(format!("learner: {e}")),
        })?;

        let output_dir = raw.get("output.directory").map(PathBuf::from);
        Ok(Self {
            seed,
            marginal,
            shards,
            noise,
            tsybakov,
            target,
            learner,
            bounds,
            output_dir,
            raw,
        })
    }

    pub fn oracle(&self) -> Result<OracleConfig, CliError> {
        Ok(OracleConfig::new(
            self.marginal,
            self.target.clone(),
            self.noise,
            self.tsybakov,
            derive_seed(self.seed, "oracle"),
        )?
        .with_shards(self.shards)?)
    }

    /// Every resolved setting, defaults included, for metadata sidecars.
    pub fn describe(&self) -> Vec<(String, String)> {
        let l = &self.learner;
        let b = &self.bounds;
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(";")
        };
        let mut out = vec![
            ("seed".into(), self.seed.to_string()),
            ("marginal.family".into(), self.marginal.name().into()),
            ("marginal.d".into(), self.marginal.dim().to_string()),
            ("marginal.shards".into(), self.shards.to_string()),
            ("noise.family".into(), self.noise.name().into()),
            ("noise.alpha".into(), self.tsybakov.alpha().to_string()),
            ("noise.a_const".into(), self.tsybakov.a_const().to_string()),
            ("target.w".into(), join(self.target.normal().as_slice())),
            ("learner.eps".into(), l.eps.to_string()),
            ("learner.delta".into(), l.delta.to_string()),
            ("learner.k".into(), l.k.to_string()),
            ("learner.t_max".into(), l.t_max.to_string()),
            ("learner.n_per_iter".into(), l.n_per_iter.to_string()),
            ("learner.lambda".into(), l.lambda_value().to_string()),
            ("learner.q_bound".into(), l.q_bound.to_string()),
            (
                "learner.G".into(),
                match l.grad_bound {
                    GradBound::Adaptive => "adaptive".into(),
                    GradBound::Fixed(g) => g.to_string(),
                },
            ),
            ("learner.z_accept".into(), l.z_accept.to_string()),
            (
                "learner.whitening_power".into(),
                match l.preconditioner {
                    Preconditioner::Identity => "0".into(),
                    Preconditioner::MarginWhitening { power } => power.to_string(),
                },
            ),
            (
                "learner.scaling".into(),
                match l.scaling {
                    CertificateScaling::MinimalNorm => "minimal_norm".into(),
                    CertificateScaling::FullBudget => "full_budget".into(),
                },
            ),
            ("bounds.L".into(), b.l_low.to_string()),
            ("bounds.R".into(), b.r_rad.to_string()),
            (
                "bounds.U".into(),
                b.u_up.map(|u| u.to_string()).unwrap_or_default(),
            ),
            ("bounds.B".into(), b.b_tail.to_string()),
            ("bounds.beta".into(), b.beta_tail.to_string()),
            ("library_version".into(), halfcert::VERSION.into()),
        ];
        match self.noise {
            NoiseField::BoundaryPower { c } => out.push(("noise.c".into(), c.to_string())),
            NoiseField::ConstantMassart { eta } => out.push(("noise.eta".into(), eta.to_string())),
            NoiseField::Zero => {}
        }
        out
    }
}

/// Uniform random unit vector from a Gaussian draw.
pub fn random_direction(d: usize, seed: u64) -> Result<Halfspace, CliError> {
    let g = Marginal::Gaussian { d }.sample(1, seed)?;
    Ok(Halfspace::from_coords(g.row(0).to_vec())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_defaults() {
        let cfg = ExperimentConfig::parse(
            "seed = 3\n[marginal]\nd = 3\n[noise]\nalpha = 0.6 # inline comment\n[bounds]\npreset = gaussian\nR = 2\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.marginal, Marginal::Gaussian { d: 3 });
        assert_eq!(cfg.tsybakov.alpha(), 0.6);
        assert_eq!(cfg.bounds.r_rad, 2.0);
        assert_eq!(cfg.learner.k, 4);
        assert_eq!(cfg.target.dim(), 3);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        let e = RawConfig::parse("[learner]\nfoo = 1\n").unwrap_err();
        assert_eq!(e.code, 2);
        assert!(e.message.contains("learner.foo"));
        assert!(RawConfig::parse("[nope]\n").is_err());
        assert!(RawConfig::parse("seed = 1\nseed = 2\n").is_err());
        assert!(RawConfig::parse("just text\n").is_err());
    }

    #[test]
    fn bad_alpha_names_the_field() {
        let e = ExperimentConfig::parse("[noise]\nalpha = 1.5\n").unwrap_err();
        assert_eq!(e.code, 2);
        assert!(e.message.contains("noise.alpha"), "{}", e.message);
    }

    #[test]
    fn explicit_target_and_dimension_check() {
        let cfg = ExperimentConfig::parse("[target]\nw = 3, 4\n").unwrap();
        assert!((cfg.target.normal().as_slice()[0] - 0.6).abs() < 1e-15);
        assert!(ExperimentConfig::parse("[target]\nw = 1, 0, 0\n").is_err());
        assert!(ExperimentConfig::parse("[target]\nw = 0, 0\n").is_err());
    }

    #[test]
    fn display_round_trips() {
        let raw =
            RawConfig::parse("seed = 9\n[learner]\nk = 2\neps = 0.2\n[marginal]\nd = 4\n").unwrap();
        assert_eq!(RawConfig::parse(&raw.to_string()).unwrap(), raw);
    }

    #[test]
    fn scalar_override() {
        let mut raw = RawConfig::parse("").unwrap();
        raw.set_scalar("learner.k", "6").unwrap();
        assert_eq!(
            ExperimentConfig::from_raw(raw.clone()).unwrap().learner.k,
            6
        );
        assert!(raw.set_scalar("target.w", "1,0").is_err());
        assert!(raw.set_scalar("learner", "1").is_err());
        assert!(raw.set_scalar("learner.nope", "1").is_err());
    }
}
