//! Command-line front end. All numbers are rational strings.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::lopezabad::{stage_dump, StageScenario, SystemDump};
use crate::pushout::{admissibility_check, sample_tuples, PushoutDump, PushoutScenario};
use crate::ratlin::{parse_rational, RVector, Rational};
use crate::space::{operator_norm, LinearMap, NormedSpace};
use crate::verify::{
    reproduce_upperbound_counterexample, reproduce_welldefined_counterexample, run_claim_suite, suite_system, summary,
    ClaimReport, Realization, SuiteConfig,
};

#[derive(Parser, Debug)]
#[command(name = "pushoutforge", version, about = "Exact polyhedral pushouts and directed-system checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Args, Debug, Clone)]
pub struct Options {
    #[arg(long, global = true, default_value = "6/5", value_parser = rational_arg)]
    pub lambda: Rational,
    #[arg(long, global = true, default_value = "4/5", value_parser = rational_arg)]
    pub eta: Rational,
    #[arg(long = "ground-size", global = true, default_value_t = 3)]
    pub ground_size: usize,
    #[arg(long = "q", global = true, default_value_t = 1)]
    pub q_policy: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "samples", global = true, default_value_t = 20)]
    pub sample_count: usize,
    #[arg(long, global = true, value_enum, default_value_t = RealizationArg::Coordinate)]
    pub realization: RealizationArg,
    #[arg(long = "in", global = true)]
    pub input_path: Option<PathBuf>,
    #[arg(long = "out", global = true)]
    pub output_path: Option<PathBuf>,
    /// Record wall-clock time in reports (breaks byte-identical output).
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RealizationArg {
    Coordinate,
    General,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Norms, dual norms and operator norms from JSON.
    Space {
        #[command(subcommand)]
        action: SpaceAction,
    },
    /// Build a pushout from a scenario and sample the admissibility inequality.
    Pushout {
        #[command(subcommand)]
        action: PushoutAction,
    },
    /// Build a finite local system and dump every stage.
    Stage {
        #[command(subcommand)]
        action: StageAction,
    },
    /// Run the claim suite.
    Claims {
        #[command(subcommand)]
        action: ClaimsAction,
    },
    /// Reproduce the two general-realization counterexamples.
    Counterexamples,
}

#[derive(Subcommand, Debug)]
pub enum SpaceAction {
    Eval,
}

#[derive(Subcommand, Debug)]
pub enum PushoutAction {
    Build,
}

#[derive(Subcommand, Debug)]
pub enum StageAction {
    Build,
}

#[derive(Subcommand, Debug)]
pub enum ClaimsAction {
    Run,
}

fn rational_arg(s: &str) -> std::result::Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

/// `space eval` input: a space with optional vector and functional, or a map.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceQuery {
    Map(LinearMap),
    Space {
        space: NormedSpace,
        #[serde(default, with = "opt_vec", skip_serializing_if = "Option::is_none")]
        x: Option<RVector>,
        #[serde(default, with = "opt_vec", skip_serializing_if = "Option::is_none")]
        f: Option<RVector>,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpaceEval {
    #[serde(default, with = "opt_rat", skip_serializing_if = "Option::is_none")]
    pub norm: Option<Rational>,
    #[serde(default, with = "opt_rat", skip_serializing_if = "Option::is_none")]
    pub dual_norm: Option<Rational>,
    #[serde(default, with = "opt_rat", skip_serializing_if = "Option::is_none")]
    pub operator_norm: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PushoutOutput {
    pub pushout: PushoutDump,
    pub admissibility: ClaimReport,
}

mod opt_vec {
    use super::*;
    use serde::{Deserializer, Serializer};
    pub fn serialize<S: Serializer>(v: &Option<RVector>, s: S) -> std::result::Result<S::Ok, S::Error> {
        v.as_ref().map(|x| crate::ratlin::format_vector(x)).serialize(s)
    }
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<RVector>, D::Error> {
        let v = Option::<Vec<String>>::deserialize(d)?;
        v.map(|x| crate::ratlin::parse_vector(&x)).transpose().map_err(serde::de::Error::custom)
    }
}

mod opt_rat {
    use super::*;
    use serde::{Deserializer, Serializer};
    pub fn serialize<S: Serializer>(v: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
        v.as_ref().map(crate::ratlin::format_rational).serialize(s)
    }
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Rational>, D::Error> {
        let v = Option::<String>::deserialize(d)?;
        v.map(|x| parse_rational(&x)).transpose().map_err(serde::de::Error::custom)
    }
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
enum Failure {
    /// Malformed input or parameters: exit 2.
    Usage(String),
    /// Anything else raised by the library: exit 2 as well, reported plainly.
    Library(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameters(_) | Error::ParseRational(_) => Failure::Usage(e.to_string()),
            other => Failure::Library(other),
        }
    }
}

fn read_text(path: Option<&Path>) -> std::result::Result<(&Path, String), Failure> {
    let path = path.ok_or_else(|| Failure::Usage("this subcommand needs --in <file>".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok((path, text))
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> std::result::Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: Option<&Path>) -> std::result::Result<T, Failure> {
    let (path, text) = read_text(path)?;
    parse_json(path, &text)
}

/// Picks the variant by shape first so that errors keep their line and column.
fn read_space_query(path: Option<&Path>) -> std::result::Result<SpaceQuery, Failure> {
    #[derive(Deserialize)]
    struct Point {
        space: NormedSpace,
        #[serde(default, with = "opt_vec")]
        x: Option<RVector>,
        #[serde(default, with = "opt_vec")]
        f: Option<RVector>,
    }
    let (path, text) = read_text(path)?;
    let shape: serde_json::Value = parse_json(path, &text)?;
    if shape.get("domain").is_some() {
        Ok(SpaceQuery::Map(parse_json(path, &text)?))
    } else {
        let p: Point = parse_json(path, &text)?;
        Ok(SpaceQuery::Space { space: p.space, x: p.x, f: p.f })
    }
}

fn emit(opts: &Options, stdout: &mut dyn Write, value: &impl Serialize) -> std::result::Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Library(e.into()))?;
    match &opts.output_path {
        Some(p) => std::fs::write(p, text + "\n").map_err(|e| Failure::Library(e.into())),
        None => writeln!(stdout, "{text}").map_err(|e| Failure::Library(e.into())),
    }
}

fn suite_config(opts: &Options) -> SuiteConfig {
    SuiteConfig {
        lambda: opts.lambda.clone(),
        eta: opts.eta.clone(),
        ground_size: opts.ground_size,
        q_policy: opts.q_policy,
        seed: opts.seed,
        samples: opts.sample_count,
        realization: match opts.realization {
            RealizationArg::Coordinate => Realization::Coordinate,
            RealizationArg::General => Realization::General,
        },
        timing: opts.timing,
    }
}

/// Parses `args` (including the program name) and runs. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 { write!(stdout, "{e}") } else { write!(stderr, "{e}") };
            return code;
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
        Err(Failure::Library(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> std::result::Result<i32, Failure> {
    let opts = &cli.opts;
    let cfg = suite_config(opts);
    cfg.validate()?;
    match &cli.command {
        Command::Space { action: SpaceAction::Eval } => {
            let q = read_space_query(opts.input_path.as_deref())?;
            let mut out = SpaceEval::default();
            match q {
                SpaceQuery::Map(m) => out.operator_norm = Some(operator_norm(&m)?),
                SpaceQuery::Space { space, x, f } => {
                    if let Some(x) = x {
                        out.norm = Some(space.norm(&x)?);
                    }
                    if let Some(f) = f {
                        out.dual_norm = Some(space.dual_norm(&f)?);
                    }
                }
            }
            emit(opts, stdout, &out)?;
            Ok(0)
        }
        Command::Pushout { action: PushoutAction::Build } => {
            let sc: PushoutScenario = read_json(opts.input_path.as_deref())?;
            let p = sc.build()?;
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(opts.seed);
            let mut tuples = Vec::new();
            for n in 1..=2 {
                tuples.extend(sample_tuples(&p, &mut rng, n, opts.sample_count, 8)?);
            }
            let report = admissibility_check(&p, &tuples)?;
            let failed = report.is_assert_failure();
            emit(opts, stdout, &PushoutOutput { pushout: PushoutDump::from(&p), admissibility: report })?;
            Ok(i32::from(failed))
        }
        Command::Stage { action: StageAction::Build } => {
            let sys = match &opts.input_path {
                Some(p) => read_json::<StageScenario>(Some(p))?.build()?,
                None => suite_system(&cfg)?,
            };
            let dump: SystemDump = stage_dump(&sys)?;
            emit(opts, stdout, &dump)?;
            Ok(0)
        }
        Command::Claims { action: ClaimsAction::Run } => {
            let reports = run_claim_suite(&cfg)?;
            let _ = write!(stderr, "{}", summary(&reports));
            emit(opts, stdout, &reports)?;
            Ok(i32::from(reports.iter().any(ClaimReport::is_assert_failure)))
        }
        Command::Counterexamples => {
            let reports = vec![reproduce_welldefined_counterexample()?, reproduce_upperbound_counterexample()?];
            let _ = write!(stderr, "{}", summary(&reports));
            emit(opts, stdout, &reports)?;
            Ok(i32::from(reports.iter().any(ClaimReport::is_assert_failure)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("pushoutforge").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn parameter_violations_exit_2() {
        assert_eq!(run_args(&["--eta", "3/2", "counterexamples"]).0, 2);
        assert_eq!(run_args(&["--lambda", "1", "counterexamples"]).0, 2);
        assert_eq!(run_args(&["--lambda", "3/2", "--eta", "2/3", "counterexamples"]).0, 2);
        assert_eq!(run_args(&["--eta", "0.8", "counterexamples"]).0, 2);
    }

    #[test]
    fn bad_json_reports_location() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.json");
        std::fs::write(&p, "{\"space\": {\"dim\": 2,\n \"vertices\": [}").unwrap();
        let (code, _, err) = run_args(&["space", "eval", "--in", p.to_str().unwrap()]);
        assert_eq!(code, 2);
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn space_eval_linf() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("q.json");
        std::fs::write(
            &p,
            r#"{"space": {"dim": 2, "vertices": [["1","1"],["1","-1"],["-1","1"],["-1","-1"]]}, "x": ["1","-1"], "f": ["1","1"]}"#,
        )
        .unwrap();
        let (code, out, _) = run_args(&["space", "eval", "--in", p.to_str().unwrap()]);
        assert_eq!(code, 0);
        let back: SpaceEval = serde_json::from_str(&out).unwrap();
        assert_eq!(back.norm, Some(crate::ratlin::int(1)));
        assert_eq!(back.dual_norm, Some(crate::ratlin::int(2)));
    }

    #[test]
    fn counterexamples_pass() {
        let (code, out, _) = run_args(&["counterexamples"]);
        assert_eq!(code, 0);
        let back: Vec<ClaimReport> = serde_json::from_str(&out).unwrap();
        assert_eq!(back.len(), 2);
        assert!(back.iter().all(ClaimReport::passed));
    }
}
