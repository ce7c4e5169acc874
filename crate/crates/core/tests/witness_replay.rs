//! Every failing claim carries a witness; replaying it from scratch must
//! reproduce the same exact violation.

use pushoutforge::lopezabad::{
    ell_infty_equivalence, kernel_slice, kernel_slice_distortion, partial_sums, LocalSystem, StageIndex,
};
use pushoutforge::ratlin::{parse_rational, parse_vector, Rational};
use pushoutforge::verify::{coordinate_control, run_claim_suite, suite_system, ClaimReport, SuiteConfig, Verdict};
use serde_json::Value;

fn rat(v: &Value) -> Rational {
    parse_rational(v.as_str().expect("rational string")).unwrap()
}

fn coefficients(v: &Value) -> Vec<Rational> {
    let items: Vec<String> = serde_json::from_value(v.clone()).unwrap();
    parse_vector(&items).unwrap()
}

fn stage(v: &Value) -> StageIndex {
    let label = v.as_str().unwrap().trim_matches(|c| c == '{' || c == '}');
    StageIndex::new(label.split(',').filter(|s| !s.is_empty()).map(|s| s.trim().parse().unwrap()).collect())
}

fn replay(sys: &LocalSystem, cfg: &SuiteConfig, r: &ClaimReport) {
    let w = r.witness.get("refutation").cloned().unwrap_or(Value::Null);
    let lambda = &cfg.lambda;
    match r.claim_id.as_str() {
        "lopezabad.linf_upper" => {
            let o = ell_infty_equivalence(sys, &coefficients(&w["a"])).unwrap();
            assert_eq!(o.norm, rat(&w["norm"]));
            assert!(o.norm > rat(&w["upper"]));
        }
        "lopezabad.cauchy_gap" => {
            let k = w["k"].as_u64().unwrap() as usize;
            let p = &partial_sums(sys, &coefficients(&w["a"])).unwrap()[k - 1];
            assert_eq!(p.gap, rat(&w["gap"]));
            assert!(p.gap > rat(&w["bound"]));
        }
        "lopezabad.property_d" => {
            let (contraction, expansion) = sys.stage(&stage(&w["stage"])).unwrap().phi_distortion().unwrap();
            assert_eq!((contraction.clone(), expansion.clone()), (rat(&w["i_b_norm"]), rat(&w["phi_norm"])));
            assert!(contraction > Rational::from_integer(1.into()) || expansion > *lambda);
        }
        "lopezabad.nu_inverse" => {
            let st = sys.stage(&stage(&w["stage"])).unwrap();
            assert_eq!(st.nu_inv_norm, rat(&w["nu_inverse_norm"]));
            assert!(st.nu_inv_norm > *lambda);
        }
        "lopezabad.kernel_distortion" => {
            let s = stage(&w["stage"]);
            let k = kernel_slice(sys, &s).unwrap();
            let (expansion, contraction) = kernel_slice_distortion(sys, &s, &k).unwrap();
            assert_eq!((expansion.clone(), contraction.clone()), (rat(&w["phi_norm"]), rat(&w["phi_inverse_norm"])));
            assert!(expansion > *lambda || contraction > Rational::from_integer(1.into()));
        }
        "counterexample.upperbound_control" => {
            let o = coordinate_control(&cfg.params().unwrap()).unwrap();
            assert_eq!(o.norm, rat(&r.witness["norm"]));
            assert!(!o.upper_holds());
        }
        other => panic!("no replay for failing claim {other}: {:?}", r.witness),
    }
}

#[test]
fn failing_witnesses_replay() {
    for cfg in [
        SuiteConfig { ground_size: 2, samples: 8, seed: 1, ..Default::default() },
        SuiteConfig { ground_size: 3, samples: 6, ..Default::default() },
    ] {
        let sys = suite_system(&cfg).unwrap();
        let reports = run_claim_suite(&cfg).unwrap();
        let failing: Vec<&ClaimReport> = reports.iter().filter(|r| r.verdict == Verdict::Fail).collect();
        assert!(!failing.is_empty());
        for r in failing {
            replay(&sys, &cfg, r);
        }
    }
}
