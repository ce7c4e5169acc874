//! The command-line surface: every JSON it writes reads back, the suite is
//! deterministic, and exit codes follow the input.

use std::path::Path;

use pushoutforge::cli::{run, PushoutOutput, SpaceEval};
use pushoutforge::lopezabad::SystemDump;
use pushoutforge::ratlin::{parse_rational, rat};
use pushoutforge::verify::{ClaimReport, Verdict};

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["pushoutforge"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const LINF2: &str = r#"{"dim":2,"vertices":[["1","1"],["1","-1"],["-1","1"],["-1","-1"]]}"#;

#[test]
fn space_eval_norm_dual_and_operator() {
    let dir = tempfile::tempdir().unwrap();
    let query = write(dir.path(), "q.json", &format!(r#"{{"space":{LINF2},"x":["1","-1"],"f":["1/2","1/3"]}}"#));
    let (code, out, _) = cli(&["space", "eval", "--in", &query]);
    assert_eq!(code, 0);
    let eval: SpaceEval = serde_json::from_str(&out).unwrap();
    assert_eq!(eval.norm, Some(rat(1, 1)));
    assert_eq!(eval.dual_norm, Some(rat(5, 6)));

    let map = write(
        dir.path(),
        "m.json",
        &format!(r#"{{"domain":{LINF2},"codomain":{LINF2},"matrix":[["1","1"],["0","1"]]}}"#),
    );
    let (code, out, _) = cli(&["space", "eval", "--in", &map]);
    assert_eq!(code, 0);
    let eval: SpaceEval = serde_json::from_str(&out).unwrap();
    assert_eq!(eval.operator_norm, Some(rat(2, 1)));
}

#[test]
fn pushout_build_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(
        dir.path(),
        "p.json",
        &format!(r#"{{"B":{LINF2},"S_basis":[["1","1"]],"E":{{"dim":1,"vertices":[["1"],["-1"]]}},"u":[["4/5"]],"eta":"4/5"}}"#),
    );
    let out_path = dir.path().join("out.json");
    let (code, _, err) = cli(&["pushout", "build", "--in", &scenario, "--samples", "10", "--out", out_path.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&out_path).unwrap();
    let parsed: PushoutOutput = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed.admissibility.verdict, Verdict::Pass);
    assert_eq!(parsed.pushout.eta, rat(4, 5));
    assert_eq!(serde_json::to_string_pretty(&parsed).unwrap() + "\n", text);
}

#[test]
fn stage_build_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(
        dir.path(),
        "s.json",
        &format!(
            r#"{{"base_space":{LINF2},"ground_size":2,"dense_vectors":[["1","0"],["1/2","1"]],
                "stage_set":[0,1],"lambda":"6/5","eta":"4/5"}}"#
        ),
    );
    let (code, out, err) = cli(&["stage", "build", "--in", &scenario]);
    assert_eq!(code, 0, "{err}");
    let dump: SystemDump = serde_json::from_str(&out).unwrap();
    assert_eq!(serde_json::to_string_pretty(&dump).unwrap() + "\n", out);
}

#[test]
fn claims_are_deterministic_and_read_back() {
    let args = ["claims", "run", "--ground-size", "2", "--samples", "4", "--seed", "5"];
    let (code, first, err) = cli(&args);
    assert_eq!(code, 0, "{err}");
    let (_, second, _) = cli(&args);
    assert_eq!(first, second);
    let reports: Vec<ClaimReport> = serde_json::from_str(&first).unwrap();
    assert!(reports.iter().all(|r| r.runtime_ms == 0));
    assert_eq!(serde_json::to_string_pretty(&reports).unwrap() + "\n", first);
    let (_, other_seed, _) = cli(&["claims", "run", "--ground-size", "2", "--samples", "4", "--seed", "6"]);
    assert_ne!(first, other_seed);
}

#[test]
fn default_claim_suite_exits_zero() {
    let (code, _, err) = cli(&["claims", "run"]);
    assert_eq!(code, 0, "{err}");
    assert!(err.contains("0 assert failures"));
}

#[test]
fn counterexamples_report_the_exact_value() {
    let (code, out, _) = cli(&["counterexamples"]);
    assert_eq!(code, 0);
    let reports: Vec<ClaimReport> = serde_json::from_str(&out).unwrap();
    assert_eq!(reports.len(), 2);
    assert!(reports.iter().all(|r| r.verdict == Verdict::Pass));
    let norm = parse_rational(reports[1].witness["norm"].as_str().unwrap()).unwrap();
    assert!(norm >= rat(5, 3));
}

#[test]
fn exit_codes_for_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let broken = write(dir.path(), "b.json", "{\"space\": {\"dim\": 2,\n \"vertices\": [[\"1\", \"x\"]]}}");
    let (code, _, err) = cli(&["space", "eval", "--in", &broken]);
    assert_eq!(code, 2);
    assert!(err.contains("line"), "{err}");
    for args in [
        vec!["counterexamples", "--lambda", "1"],
        vec!["counterexamples", "--eta", "1"],
        vec!["counterexamples", "--lambda", "2", "--eta", "1/2"],
        vec!["counterexamples", "--lambda", "0.5"],
        vec!["claims", "run", "--ground-size", "0"],
        vec!["space", "eval"],
    ] {
        assert_eq!(cli(&args).0, 2, "{args:?}");
    }
}
