use std::fs;
use std::path::PathBuf;

use gensylv::krylov::{ResidualMode, SolveConfig, StartingBlocks};
use gensylv::problems::{ProblemSpec, DEFAULT_GAMMA};
use gensylv::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::args::{BlocksArg, Family, Format, ResidualArg, RunArgs};

/// Everything one invocation of `run` or `verify` needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub solve: SolveConfig,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub factors: bool,
}

/// One entry of a `--config` file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunEntry {
    problem: ProblemSpec,
    #[serde(default)]
    solve: SolveConfig,
    #[serde(default)]
    out: Option<PathBuf>,
    #[serde(default)]
    format: Option<Format>,
    #[serde(default)]
    factors: bool,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ConfigFile {
    Batch(Vec<RunEntry>),
    Single(RunEntry),
}

/// Parses a config file body; a JSON array describes a batch.
pub fn parse_config(text: &str) -> Result<Vec<RunConfig>> {
    let file: ConfigFile = serde_json::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))?;
    let entries = match file {
        ConfigFile::Batch(v) if v.is_empty() => return Err(Error::Config("config file holds an empty batch".into())),
        ConfigFile::Batch(v) => v,
        ConfigFile::Single(e) => vec![e],
    };
    Ok(entries
        .into_iter()
        .map(|e| RunConfig {
            problem: e.problem,
            solve: e.solve,
            out: e.out,
            format: e.format.unwrap_or_default(),
            factors: e.factors,
        })
        .collect())
}

/// Resolves the command line (and config file, if any) into run configs.
/// Flags given next to `--config` override the file.
pub fn resolve(args: &RunArgs) -> Result<Vec<RunConfig>> {
    let mut configs = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => vec![RunConfig {
            problem: problem_from_flags(args)?,
            solve: SolveConfig::default(),
            out: None,
            format: Format::default(),
            factors: false,
        }],
    };
    let batch = configs.len() > 1;
    for (i, cfg) in configs.iter_mut().enumerate() {
        apply_overrides(args, cfg)?;
        if batch {
            if let Some(out) = &cfg.out {
                cfg.out = Some(out.join(format!("run-{i:02}")));
            }
        }
        if cfg.factors && cfg.out.is_none() {
            return Err(Error::Config("writing factors needs an output directory".into()));
        }
        cfg.problem.validate()?;
        cfg.solve.validate()?;
    }
    Ok(configs)
}

fn problem_from_flags(args: &RunArgs) -> Result<ProblemSpec> {
    let family = args.family.ok_or_else(|| Error::Config("either --family or --config is required".into()))?;
    let n = args.n.ok_or_else(|| Error::Config("--n is required with --family".into()))?;
    let only = |set: bool, flag: &str, fam: &str| -> Result<()> {
        if set {
            Err(Error::Config(format!("{flag} applies to the {fam} family only")))
        } else {
            Ok(())
        }
    };
    if family != Family::Mimo {
        only(args.gamma.is_some(), "--gamma", "mimo")?;
    }
    if family != Family::Lowrank {
        only(args.scaled, "--scaled", "lowrank")?;
    }
    if family != Family::Helmholtz {
        only(args.shift.is_some(), "--shift", "helmholtz")?;
    } else {
        only(args.seed.is_some(), "--seed", "mimo and lowrank")?;
    }
    let seed = args.seed.unwrap_or(0);
    Ok(match family {
        Family::Mimo => ProblemSpec::Mimo { n, gamma: args.gamma.unwrap_or(DEFAULT_GAMMA), seed },
        Family::Lowrank => ProblemSpec::Lowrank { n, seed, scaled: args.scaled },
        Family::Helmholtz => ProblemSpec::Helmholtz { n, shift: args.shift.unwrap_or(1.0) },
    })
}

fn apply_overrides(args: &RunArgs, cfg: &mut RunConfig) -> Result<()> {
    let s = &mut cfg.solve;
    if let Some(tol) = args.tol {
        s.tol = tol;
    }
    if let Some(k) = args.max_iters {
        s.max_iters = k;
    }
    match (args.blocks, args.ell) {
        (Some(BlocksArg::Commutator) | None, Some(ell)) => s.blocks = StartingBlocks::Commutator { ell },
        (Some(BlocksArg::Commutator), None) => s.blocks = StartingBlocks::Commutator { ell: 1 },
        (Some(BlocksArg::Lowrank), None) => s.blocks = StartingBlocks::LowRank,
        (Some(BlocksArg::Plain), None) => s.blocks = StartingBlocks::Plain,
        (Some(_), Some(_)) => return Err(Error::Config("--ell only applies to commutator starting blocks".into())),
        (None, None) => {}
    }
    if let Some(r) = args.residual {
        s.residual = match r {
            ResidualArg::Cheap => ResidualMode::Cheap,
            ResidualArg::True => ResidualMode::True,
            ResidualArg::Both => ResidualMode::Both,
        };
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    if let Some(f) = args.format {
        cfg.format = f;
    }
    cfg.factors |= args.factors;
    Ok(())
}
