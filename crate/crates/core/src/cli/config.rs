//! TOML experiment files.
//!
//! ```toml
//! mt = 8
//! n = 64
//! constraint = "discrete"      # energy | par | continuous | discrete
//! alphabet_size = 8            # discrete only
//! gamma_p_db = 1.5             # par only
//! eta = [0.0, 0.5, 1.0]        # a list selects sweep mode
//! zeta = 1e-6
//! max_sweeps = 1000
//! seed = 0
//! trials = 10
//! output_dir = "out"
//! theta_d = [-55, -35, 5]      # [lo, hi, step] in degrees, or a list of them
//! theta_u = [[-90, -60, 5], [-30, 90, 5]]
//! dt_over_lambda = 0.5
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{validate_config, AngleRegion, AngleScenario, ConstraintSpec, RunConfig};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum EtaSpec {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum RegionSpec {
    One(Vec<f64>),
    Many(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mt: usize,
    n: usize,
    constraint: String,
    eta: EtaSpec,
    gamma_p_db: Option<f64>,
    alphabet_size: Option<usize>,
    zeta: Option<f64>,
    max_sweeps: Option<usize>,
    seed: Option<u64>,
    trials: Option<usize>,
    init_alphabet: Option<usize>,
    output_dir: Option<PathBuf>,
    theta_d: Option<RegionSpec>,
    theta_u: Option<RegionSpec>,
    dt_over_lambda: Option<f64>,
}

/// A parsed and validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    /// Run settings; `eta` holds the first weight.
    pub run: RunConfig,
    pub etas: Vec<f64>,
    /// True when `eta` was given as a list.
    pub sweep: bool,
    pub trials: usize,
    pub output_dir: PathBuf,
    /// The file's contents, echoed into `metrics.json`.
    pub echo: serde_json::Value,
}

impl Experiment {
    pub const DEFAULT_TRIALS: usize = 10;
}

fn regions(spec: Option<RegionSpec>, key: &str, default: &[AngleRegion]) -> Result<Vec<AngleRegion>> {
    let triples = match spec {
        None => return Ok(default.to_vec()),
        Some(RegionSpec::One(t)) => vec![t],
        Some(RegionSpec::Many(ts)) => ts,
    };
    triples
        .into_iter()
        .map(|t| match t.as_slice() {
            [lo, hi] => Ok(AngleRegion::new(*lo, *hi, AngleRegion::DEFAULT_STEP_DEG)),
            [lo, hi, step] => Ok(AngleRegion::new(*lo, *hi, *step)),
            _ => Err(Error::Config(format!("{key}: expected [lo_deg, hi_deg, step_deg], got {t:?}"))),
        })
        .collect()
}

fn constraint(raw: &RawConfig) -> Result<ConstraintSpec> {
    let unused = |key: &str, present: bool| {
        if present {
            Err(Error::Config(format!("{key} does not apply to constraint \"{}\"", raw.constraint)))
        } else {
            Ok(())
        }
    };
    match raw.constraint.as_str() {
        "energy" | "continuous" => {
            unused("gamma_p_db", raw.gamma_p_db.is_some())?;
            unused("alphabet_size", raw.alphabet_size.is_some())?;
            Ok(if raw.constraint == "energy" { ConstraintSpec::Energy } else { ConstraintSpec::ContinuousPhase })
        }
        "par" => {
            unused("alphabet_size", raw.alphabet_size.is_some())?;
            let db = raw.gamma_p_db.ok_or_else(|| Error::Config("constraint \"par\" requires gamma_p_db".into()))?;
            Ok(ConstraintSpec::par_db(db))
        }
        "discrete" => {
            unused("gamma_p_db", raw.gamma_p_db.is_some())?;
            let alphabet = raw
                .alphabet_size
                .ok_or_else(|| Error::Config("constraint \"discrete\" requires alphabet_size".into()))?;
            Ok(ConstraintSpec::DiscretePhase { alphabet })
        }
        other => Err(Error::Config(format!(
            "constraint: unknown value \"{other}\" (expected energy, par, continuous or discrete)"
        ))),
    }
}

/// Parses experiment text; `origin` labels error messages.
pub fn parse_config_str(text: &str, origin: &str) -> Result<Experiment> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| located(text, origin, &e))?;
    let raw: RawConfig = toml::from_str(text).map_err(|e| located(text, origin, &e))?;

    let default_d = [AngleRegion::new(-55.0, -35.0, AngleRegion::DEFAULT_STEP_DEG)];
    let default_u = [
        AngleRegion::new(-90.0, -60.0, AngleRegion::DEFAULT_STEP_DEG),
        AngleRegion::new(-30.0, 90.0, AngleRegion::DEFAULT_STEP_DEG),
    ];
    let theta_d = regions(raw.theta_d.clone(), "theta_d", &default_d)?;
    let theta_u = regions(raw.theta_u.clone(), "theta_u", &default_u)?;
    let scenario =
        AngleScenario::from_regions_deg(raw.mt, raw.n, &theta_d, &theta_u, raw.dt_over_lambda.unwrap_or(0.5))?;

    let (etas, sweep) = match raw.eta.clone() {
        EtaSpec::One(e) => (vec![e], false),
        EtaSpec::Many(es) if es.is_empty() => return Err(Error::Config("eta: list is empty".into())),
        EtaSpec::Many(es) => (es, true),
    };
    let trials = raw.trials.unwrap_or(Experiment::DEFAULT_TRIALS);
    if trials < 1 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    for &eta in &etas {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::Config(format!("eta out of [0,1]: {eta}")));
        }
    }

    let run = validate_config(RunConfig {
        mt: raw.mt,
        n: raw.n,
        scenario,
        constraint: constraint(&raw)?,
        eta: etas[0],
        zeta: raw.zeta.unwrap_or(RunConfig::DEFAULT_ZETA),
        max_sweeps: raw.max_sweeps.unwrap_or(RunConfig::DEFAULT_MAX_SWEEPS),
        seed: raw.seed.unwrap_or(0),
        init_alphabet: raw.init_alphabet.unwrap_or(RunConfig::DEFAULT_INIT_ALPHABET),
    })?;
    let echo = serde_json::to_value(&table).map_err(|e| Error::Config(e.to_string()))?;
    Ok(Experiment {
        run,
        etas,
        sweep,
        trials,
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from(".")),
        echo,
    })
}

pub fn parse_config(path: &Path) -> Result<Experiment> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config_str(&text, &path.display().to_string())
}

/// `origin:line:col: message` for a TOML error.
fn located(text: &str, origin: &str, e: &toml::de::Error) -> Error {
    let msg = e.message().trim().replace('\n', " ");
    match e.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            Error::Config(format!("{origin}:{line}:{col}: {msg}"))
        }
        None => Error::Config(format!("{origin}: {msg}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = r#"
mt = 8
n = 64
constraint = "discrete"
alphabet_size = 8
eta = 0.5
zeta = 1e-6
theta_d = [-55, -35, 5]
theta_u = [[-90, -60, 5], [-30, 90, 5]]
"#;

    #[test]
    fn reference_settings_load() {
        let exp = parse_config_str(REFERENCE, "ref.toml").unwrap();
        assert_eq!(exp.run.mt, 8);
        assert_eq!(exp.run.constraint, ConstraintSpec::DiscretePhase { alphabet: 8 });
        assert_eq!(exp.run.zeta, 1e-6);
        assert_eq!(exp.run.scenario, AngleScenario::reference(8, 64).unwrap());
        assert!(!exp.sweep);
        assert_eq!(exp.trials, 10);
        assert_eq!(exp.echo["alphabet_size"], 8);
    }

    #[test]
    fn defaults_match_reference_scenario() {
        let exp = parse_config_str("mt = 4\nn = 16\nconstraint = \"energy\"\neta = 0.0\n", "x").unwrap();
        assert_eq!(exp.run.scenario, AngleScenario::reference(4, 16).unwrap());
        assert_eq!(exp.run.max_sweeps, 1000);
    }

    #[test]
    fn missing_mt_names_the_key() {
        let err = parse_config_str("n = 16\nconstraint = \"energy\"\neta = 0.0\n", "x").unwrap_err();
        assert!(err.to_string().contains("mt"), "{err}");
    }

    #[test]
    fn eta_list_is_sweep_mode() {
        let exp = parse_config_str("mt = 2\nn = 8\nconstraint = \"continuous\"\neta = [0, 0.5, 1]\n", "x").unwrap();
        assert!(exp.sweep);
        assert_eq!(exp.etas, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn par_in_db() {
        let exp =
            parse_config_str("mt = 2\nn = 8\nconstraint = \"par\"\ngamma_p_db = 1.5\neta = 0.5\n", "x").unwrap();
        match exp.run.constraint {
            ConstraintSpec::Par { gamma_p } => assert!((gamma_p - 10f64.powf(0.15)).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_config_str("mt = 2\nn = 8\nbogus = 1\n", "cfg.toml").unwrap_err();
        assert!(err.to_string().contains("cfg.toml:3"), "{err}");
        let err = parse_config_str("mt = 2\nn = = 8\n", "cfg.toml").unwrap_err();
        assert!(err.to_string().contains("cfg.toml:2"), "{err}");
    }

    #[test]
    fn validation_errors() {
        for text in [
            "mt = 2\nn = 8\nconstraint = \"hexagonal\"\neta = 0.5\n",
            "mt = 2\nn = 8\nconstraint = \"par\"\neta = 0.5\n",
            "mt = 2\nn = 8\nconstraint = \"energy\"\neta = 1.5\n",
            "mt = 2\nn = 8\nconstraint = \"energy\"\neta = []\n",
            "mt = 2\nn = 8\nconstraint = \"energy\"\neta = 0.5\ntheta_d = [1, 2, 3, 4]\n",
            "mt = 2\nn = 8\nconstraint = \"energy\"\neta = 0.5\nalphabet_size = 4\n",
            "mt = 2\nn = 8\nconstraint = \"energy\"\neta = 0.5\ntrials = 0\n",
        ] {
            assert!(matches!(parse_config_str(text, "x"), Err(Error::Config(_) | Error::Constraint(_))), "{text}");
        }
    }
}
