use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ckdv_core::scenario::ScenarioConfig;
use ckdv_core::solver::Scheme;

#[derive(Debug, Parser)]
#[command(name = "ckdv", version, about = "Internal waves in a stratified tank via coupled KdV modes")]
pub struct Invocation {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the tank scenario and write snapshots and the field.
    Run,
    /// Write the c/d/g tables and the comparison with the published tables.
    Coeffs,
    /// Measure the convergence order of a scheme on the soliton benchmark.
    Converge,
    /// Run the quick verification checks.
    Verify,
    /// Count solitons released by canonical sech² pulses.
    Fission {
        /// Pulse strengths s in u₀ = s·sech²(x).
        #[arg(long, value_delimiter = ',', default_values_t = [2.0, 6.0])]
        strength: Vec<f64>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file (TOML); defaults to the reference tank.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output root; the run writes into <out>/<run-id>.
    #[arg(long, global = true, env = "CKDV_OUT", default_value = "out", value_name = "DIR")]
    pub out: PathBuf,

    /// Name of the run; letters, digits, '.', '_' and '-'.
    #[arg(long, global = true, value_name = "ID")]
    pub run_id: Option<String>,

    #[arg(long, global = true, value_name = "S")]
    pub t_end: Option<f64>,

    #[arg(long, global = true, value_name = "M")]
    pub dx: Option<f64>,

    #[arg(long, global = true, value_name = "S")]
    pub dt: Option<f64>,

    /// Comma-separated mode indices, e.g. 2,4,6.
    #[arg(long, global = true, value_delimiter = ',', value_name = "LIST")]
    pub modes: Option<Vec<u32>>,

    #[arg(long, global = true, value_enum)]
    pub scheme: Option<SchemeArg>,

    #[arg(long, global = true, value_name = "N")]
    pub snapshot_every: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    TwoStage,
    OneStage,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::TwoStage => Scheme::TwoStage,
            SchemeArg::OneStage => Scheme::OneStage,
        }
    }
}

impl Common {
    /// Flag values win over the file.
    pub fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(t) = self.t_end {
            cfg.run.t_end = t;
        }
        if let Some(dx) = self.dx {
            cfg.grid.dx = dx;
        }
        if let Some(dt) = self.dt {
            cfg.scheme.dt = dt;
        }
        if let Some(m) = &self.modes {
            cfg.run.modes = m.clone();
        }
        if let Some(s) = self.scheme {
            cfg.scheme.kind = s.into();
        }
        if let Some(n) = self.snapshot_every {
            cfg.run.snapshot_every = n;
        }
    }
}

pub fn is_safe_run_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Invocation, clap::Error> {
        Invocation::try_parse_from(std::iter::once("ckdv").chain(args.iter().copied()))
    }

    #[test]
    fn run_with_config() {
        let inv = parse(&["run", "--config", "tank.toml"]).unwrap();
        assert!(matches!(inv.command, Command::Run));
        assert_eq!(inv.common.config, Some(PathBuf::from("tank.toml")));
    }

    #[test]
    fn override_before_config() {
        let inv = parse(&["run", "--dt", "1e-6", "--config", "tank.toml"]).unwrap();
        assert_eq!(inv.common.dt, Some(1e-6));
        let mut cfg = ScenarioConfig::reference_tank();
        inv.common.apply(&mut cfg);
        assert_eq!(cfg.scheme.dt, 1e-6);
        assert_eq!(cfg.run.t_end, 0.02);
    }

    #[test]
    fn lists_and_schemes() {
        let inv = parse(&["converge", "--scheme", "one-stage", "--modes", "2,4,6"]).unwrap();
        assert_eq!(inv.common.scheme, Some(SchemeArg::OneStage));
        assert_eq!(inv.common.modes, Some(vec![2, 4, 6]));
    }

    #[test]
    fn unknown_tokens_rejected() {
        let err = parse(&["frobnicate"]).unwrap_err();
        assert!(err.to_string().contains("frobnicate"));
        let err = parse(&["run", "--bogus"]).unwrap_err();
        assert!(err.to_string().contains("--bogus"));
    }

    #[test]
    fn run_ids() {
        assert!(is_safe_run_id("tank_01.a-b"));
        assert!(!is_safe_run_id("../x"));
        assert!(!is_safe_run_id("a/b"));
        assert!(!is_safe_run_id(""));
        assert!(!is_safe_run_id(".hidden"));
    }
}
