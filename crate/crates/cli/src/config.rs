//! Study configuration: a flat key=value file merged with flag overrides.

use std::f64::consts::PI;
use std::path::PathBuf;

use sbfem::norms::{Weight, WeightedNormSpec};

use crate::error::{CliError, Result};

/// Which benchmark a study runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    Test1,
    Test2,
    Test3,
    Custom,
}

/// Fully validated study parameters.
#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub kind: ProblemKind,
    /// Problem id exactly as configured; echoed into the CSV `problem` column.
    pub label: String,
    pub theta_max: f64,
    /// Wavenumber index of the `custom` harmonic mode.
    pub harmonic_index: usize,
    pub orders: Vec<usize>,
    pub levels: Vec<usize>,
    pub quad_levels: Option<usize>,
    pub quad_points: Option<usize>,
    pub out: PathBuf,
    pub plot_dir: Option<PathBuf>,
}

/// One layer of settings; `None` means "not given here". Layers merge with
/// later sources winning, flags last.
#[derive(Clone, Debug, Default)]
pub struct ConfigOverrides {
    pub problem: Option<String>,
    pub theta_max: Option<f64>,
    pub k: Option<usize>,
    pub orders: Option<Vec<usize>>,
    pub levels: Option<Vec<usize>>,
    pub quad_levels: Option<usize>,
    pub quad_points: Option<usize>,
    pub out: Option<PathBuf>,
    pub plot_dir: Option<PathBuf>,
}

impl ConfigOverrides {
    pub fn merge(mut self, over: ConfigOverrides) -> ConfigOverrides {
        self.problem = over.problem.or(self.problem);
        self.theta_max = over.theta_max.or(self.theta_max);
        self.k = over.k.or(self.k);
        self.orders = over.orders.or(self.orders);
        self.levels = over.levels.or(self.levels);
        self.quad_levels = over.quad_levels.or(self.quad_levels);
        self.quad_points = over.quad_points.or(self.quad_points);
        self.out = over.out.or(self.out);
        self.plot_dir = over.plot_dir.or(self.plot_dir);
        self
    }

    /// Parses the flat `key = value` format. `#` starts a comment line;
    /// blank lines are skipped; keys may appear at most once.
    pub fn parse_file(text: &str) -> Result<ConfigOverrides> {
        let mut out = ConfigOverrides::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected key=value, got `{line}`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let duplicate = |taken: bool| -> Result<()> {
                if taken {
                    Err(CliError::Config(format!("line {}: duplicate key `{key}`", lineno + 1)))
                } else {
                    Ok(())
                }
            };
            match key {
                "problem" => {
                    duplicate(out.problem.is_some())?;
                    out.problem = Some(value.to_string());
                }
                "theta_max" => {
                    duplicate(out.theta_max.is_some())?;
                    out.theta_max = Some(parse_f64(key, value)?);
                }
                "k" => {
                    duplicate(out.k.is_some())?;
                    out.k = Some(parse_usize(key, value)?);
                }
                "orders" => {
                    duplicate(out.orders.is_some())?;
                    out.orders = Some(parse_usize_list(key, value)?);
                }
                "levels" => {
                    duplicate(out.levels.is_some())?;
                    out.levels = Some(parse_usize_list(key, value)?);
                }
                "quad_levels" => {
                    duplicate(out.quad_levels.is_some())?;
                    out.quad_levels = Some(parse_usize(key, value)?);
                }
                "quad_points" => {
                    duplicate(out.quad_points.is_some())?;
                    out.quad_points = Some(parse_usize(key, value)?);
                }
                "out" => {
                    duplicate(out.out.is_some())?;
                    out.out = Some(PathBuf::from(value));
                }
                "plot_dir" => {
                    duplicate(out.plot_dir.is_some())?;
                    out.plot_dir = Some(PathBuf::from(value));
                }
                other => {
                    return Err(CliError::Config(format!(
                        "line {}: unknown config key `{other}`",
                        lineno + 1
                    )));
                }
            }
        }
        Ok(out)
    }
}

pub fn parse_usize_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(|item| parse_usize(key, item.trim()))
        .collect()
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: `{value}` is not a nonnegative integer")))
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    let parsed: f64 = value
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: `{value}` is not a number")))?;
    if !parsed.is_finite() {
        return Err(CliError::Config(format!("{key} must be finite, got {parsed}")));
    }
    Ok(parsed)
}

const BUILTIN_THETA: f64 = 1.5 * PI;

impl StudyConfig {
    /// Validates one merged override layer into a runnable configuration.
    pub fn build(sources: ConfigOverrides) -> Result<StudyConfig> {
        let label = sources
            .problem
            .ok_or_else(|| CliError::Config("no problem selected; pass --problem".into()))?;
        let kind = match label.as_str() {
            "test1" => ProblemKind::Test1,
            "test2" => ProblemKind::Test2,
            "test3" | "test3-manufactured" => ProblemKind::Test3,
            "custom" => ProblemKind::Custom,
            other => {
                return Err(CliError::Config(format!(
                    "unknown problem `{other}`; known: test1, test2, test3, test3-manufactured, custom"
                )));
            }
        };

        let theta_max = match (kind, sources.theta_max) {
            (ProblemKind::Custom, Some(t)) => {
                if t <= 0.0 || t > 2.0 * PI {
                    return Err(CliError::Config(format!(
                        "theta_max must lie in (0, 2*pi], got {t}"
                    )));
                }
                t
            }
            (_, Some(t)) if (t - BUILTIN_THETA).abs() > 1e-12 => {
                return Err(CliError::Config(format!(
                    "{label} is posed on the sector of angle 3*pi/2; got theta_max = {t}"
                )));
            }
            _ => BUILTIN_THETA,
        };

        let harmonic_index = sources.k.unwrap_or(1);
        if kind != ProblemKind::Custom && sources.k.is_some() {
            return Err(CliError::Config(
                "k applies only to the custom problem".into(),
            ));
        }
        if harmonic_index == 0 {
            return Err(CliError::Config("k must be at least 1".into()));
        }

        let orders = sources.orders.unwrap_or_else(|| vec![1, 2]);
        if orders.is_empty() {
            return Err(CliError::Config("orders must not be empty".into()));
        }
        for &p in &orders {
            if !(1..=6).contains(&p) {
                return Err(CliError::Config(format!("order {p} outside 1..=6")));
            }
        }
        for (i, &p) in orders.iter().enumerate() {
            if orders[i + 1..].contains(&p) {
                return Err(CliError::Config(format!("order {p} appears more than once")));
            }
        }

        let levels = sources.levels.unwrap_or_else(|| vec![4, 8, 16, 32, 64]);
        if levels.is_empty() {
            return Err(CliError::Config("levels must not be empty".into()));
        }
        if levels[0] == 0 {
            return Err(CliError::Config("levels must be positive".into()));
        }
        if levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config(format!(
                "levels must be strictly increasing, got {levels:?}"
            )));
        }

        // Probe the quadrature overrides now so misconfiguration surfaces as
        // a config error, not mid-study.
        let mut probe = WeightedNormSpec::<f64>::new(Weight::R, theta_max)
            .map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(l) = sources.quad_levels {
            probe = probe
                .with_levels(l)
                .map_err(|e| CliError::Config(format!("quad_levels: {e}")))?;
        }
        if let Some(q) = sources.quad_points {
            probe = probe
                .with_radial_points(q)
                .and_then(|s| s.with_angular_points(q))
                .map_err(|e| CliError::Config(format!("quad_points: {e}")))?;
        }
        drop(probe);

        Ok(StudyConfig {
            kind,
            label,
            theta_max,
            harmonic_index,
            orders,
            levels,
            quad_levels: sources.quad_levels,
            quad_points: sources.quad_points,
            out: sources.out.unwrap_or_else(|| PathBuf::from("results.csv")),
            plot_dir: sources.plot_dir,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ConfigOverrides {
        ConfigOverrides {
            problem: Some("test1".into()),
            ..ConfigOverrides::default()
        }
    }

    #[test]
    fn defaults_fill_in() {
        let config = StudyConfig::build(base()).unwrap();
        assert_eq!(config.kind, ProblemKind::Test1);
        assert_eq!(config.orders, vec![1, 2]);
        assert_eq!(config.levels, vec![4, 8, 16, 32, 64]);
        assert_eq!(config.theta_max, BUILTIN_THETA);
        assert_eq!(config.out, PathBuf::from("results.csv"));
    }

    #[test]
    fn alias_maps_to_the_manufactured_problem() {
        let mut src = base();
        src.problem = Some("test3-manufactured".into());
        let config = StudyConfig::build(src).unwrap();
        assert_eq!(config.kind, ProblemKind::Test3);
        assert_eq!(config.label, "test3-manufactured");
    }

    #[test]
    fn rejects_bad_values() {
        let mut src = base();
        src.problem = Some("test9".into());
        assert!(StudyConfig::build(src).is_err());

        let mut src = base();
        src.orders = Some(vec![1, 7]);
        assert!(StudyConfig::build(src).is_err());

        let mut src = base();
        src.orders = Some(vec![2, 2]);
        assert!(StudyConfig::build(src).is_err());

        let mut src = base();
        src.levels = Some(vec![8, 8]);
        assert!(StudyConfig::build(src).is_err());

        let mut src = base();
        src.theta_max = Some(3.0);
        assert!(StudyConfig::build(src).is_err());

        let mut src = base();
        src.k = Some(2);
        assert!(StudyConfig::build(src).is_err(), "k on a builtin problem");

        let mut src = base();
        src.quad_levels = Some(5);
        assert!(StudyConfig::build(src).is_err(), "grading too shallow");
    }

    #[test]
    fn custom_problem_takes_free_parameters() {
        let src = ConfigOverrides {
            problem: Some("custom".into()),
            theta_max: Some(PI),
            k: Some(3),
            ..ConfigOverrides::default()
        };
        let config = StudyConfig::build(src).unwrap();
        assert_eq!(config.kind, ProblemKind::Custom);
        assert_eq!(config.theta_max, PI);
        assert_eq!(config.harmonic_index, 3);
    }

    #[test]
    fn file_layer_parses_and_flags_win() {
        let text = "\n# study setup\nproblem = test2\norders = 1,2\nlevels=4, 8,16\nout = a.csv\n";
        let file = ConfigOverrides::parse_file(text).unwrap();
        let flags = ConfigOverrides {
            out: Some(PathBuf::from("b.csv")),
            ..ConfigOverrides::default()
        };
        let config = StudyConfig::build(file.merge(flags)).unwrap();
        assert_eq!(config.kind, ProblemKind::Test2);
        assert_eq!(config.levels, vec![4, 8, 16]);
        assert_eq!(config.out, PathBuf::from("b.csv"));
    }

    #[test]
    fn file_parser_rejects_junk() {
        assert!(ConfigOverrides::parse_file("problem test1").is_err());
        assert!(ConfigOverrides::parse_file("volume = 11").is_err());
        assert!(ConfigOverrides::parse_file("problem=a\nproblem=b").is_err());
        assert!(ConfigOverrides::parse_file("orders = 1,x").is_err());
        assert!(ConfigOverrides::parse_file("theta_max = inf").is_err());
    }
}
