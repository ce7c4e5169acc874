//! Claim reports and the exact check suite.

use std::collections::BTreeMap;
use std::time::Instant;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::lopezabad::{
    antilex_compare, build_local_system, chart_functional, ell_infty_equivalence, intro_functional, isometry_check,
    kernel_slice, kernel_slice_distortion, kernel_slices_nest, partial_sums, predecessor, prefix_map_norm,
    prefix_quotient_map, transition_check, EquivalenceOutcome, GroundSet, LocalSystem, Params, StageIndex, MAX_TOP_SIZE,
};
use crate::pushout::{admissibility_check, kisliakov_pushout, random_scenario, sample_tuples, PushoutResult};
use crate::ratlin::{
    self, dot, format_rational, format_vector, max_abs, rat, small_rational, small_vector, unit, vector, zeros, RMatrix,
    RVector, Rational,
};
use crate::space::{make_linf, operator_norm, random_space};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
}

/// `Assert` claims must hold; `Report` claims record an instance outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClaimClass {
    Assert,
    Report,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimReport {
    pub claim_id: String,
    pub anchor: String,
    pub instance: String,
    pub class: ClaimClass,
    pub verdict: Verdict,
    pub witness: BTreeMap<String, Value>,
    pub runtime_ms: u64,
}

impl ClaimReport {
    pub fn new(claim_id: &str, anchor: &str, class: ClaimClass) -> Self {
        ClaimReport {
            claim_id: claim_id.to_string(),
            anchor: anchor.to_string(),
            instance: String::new(),
            class,
            verdict: Verdict::Skipped,
            witness: BTreeMap::new(),
            runtime_ms: 0,
        }
    }

    pub fn instance(mut self, text: impl Into<String>) -> Self {
        self.instance = text.into();
        self
    }

    pub fn verdict(mut self, pass: bool) -> Self {
        self.verdict = if pass { Verdict::Pass } else { Verdict::Fail };
        self
    }

    pub fn rat(mut self, key: &str, r: &Rational) -> Self {
        self.witness.insert(key.to_string(), Value::String(format_rational(r)));
        self
    }

    pub fn vec(mut self, key: &str, v: &[Rational]) -> Self {
        self.witness.insert(key.to_string(), serde_json::json!(format_vector(v)));
        self
    }

    pub fn value(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.witness.insert(key.to_string(), v.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// True when an `Assert` claim did not pass.
    pub fn is_assert_failure(&self) -> bool {
        self.class == ClaimClass::Assert && self.verdict == Verdict::Fail
    }
}

/// Runs `f` and stamps the elapsed time when `timing` is set.
pub fn timed(timing: bool, f: impl FnOnce() -> ClaimReport) -> ClaimReport {
    let start = Instant::now();
    let mut r = f();
    if timing {
        r.runtime_ms = start.elapsed().as_millis() as u64;
    }
    r
}

/// How `ν_t` is realised in the scenario evaluated by the upper-bound and
/// distortion reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Realization {
    Coordinate,
    General,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteConfig {
    pub lambda: Rational,
    pub eta: Rational,
    pub ground_size: usize,
    pub q_policy: usize,
    pub seed: u64,
    pub samples: usize,
    pub realization: Realization,
    /// Stamp `runtime_ms`; off keeps reports byte-identical across runs.
    pub timing: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            lambda: rat(6, 5),
            eta: rat(4, 5),
            ground_size: 3,
            q_policy: 1,
            seed: 0,
            samples: 20,
            realization: Realization::Coordinate,
            timing: false,
        }
    }
}

impl SuiteConfig {
    pub fn params(&self) -> Result<Params> {
        Params::new(self.lambda.clone(), self.eta.clone())
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        if self.ground_size == 0 || self.ground_size > MAX_TOP_SIZE {
            return Err(Error::InvalidParameters(format!("ground size must lie in 1..={MAX_TOP_SIZE}")));
        }
        if self.q_policy == 0 {
            return Err(Error::InvalidParameters("q must be at least 1".into()));
        }
        if self.samples == 0 {
            return Err(Error::InvalidParameters("samples must be at least 1".into()));
        }
        Ok(())
    }
}

const BOUND: i64 = 8;

/// Two representatives of one coset of `(ℓ∞² ⊕₁ ℝ)/span{(e₁+e₂, -ν(e₁+e₂))}`
/// disagree in the first `b`-coordinate, while `(b₁ - b₂)/2` agrees.
pub fn reproduce_welldefined_counterexample() -> Result<ClaimReport> {
    let eta = rat(4, 5);
    let b_space = make_linf(2)?;
    let x = make_linf(1)?;
    let s = vector(&[1, 1]);
    let nu = RMatrix::from_rows(&[vec![eta.clone()]])?;
    let p = kisliakov_pushout(&b_space, &[s.clone()], &x, &nu, &eta)?;

    let b = vec![rat(3, 4), rat(-1, 2)];
    let e = vec![rat(1, 3)];
    let b2 = ratlin::sub(&b, &s);
    let e2 = ratlin::add(&e, &nu.column(0));
    let same_class = p.class_of(&b, &e)? == p.class_of(&b2, &e2)?;
    let difference = &b[0] - &b2[0];
    let coordinate_error = match intro_functional(&p, 0) {
        Err(Error::WellDefinedness { value, .. }) => Some(value),
        _ => None,
    };

    let half = rat(1, 2);
    let f = vec![half.clone(), -half.clone()];
    let f_values = (dot(&f, &b), dot(&f, &b2));
    let f_chart = chart_functional(&p, &ratlin::concat(&f, &[Rational::zero()]))?;
    let f_norm = p.space.dual_norm(&f_chart)?;

    // control: S = span{e₂} leaves b₁ alone
    let s_ctl = vector(&[0, 1]);
    let p_ctl = kisliakov_pushout(&b_space, &[s_ctl.clone()], &x, &nu, &eta)?;
    let control_defined = intro_functional(&p_ctl, 0).is_ok();
    let b_ctl = ratlin::sub(&b, &s_ctl);
    let control_same_class = p_ctl.class_of(&b, &e)? == p_ctl.class_of(&b_ctl, &ratlin::add(&e, &nu.column(0)))?;
    let control_constant = b[0] == b_ctl[0];

    let pass = same_class
        && difference.is_one()
        && coordinate_error.is_some()
        && f_values.0 == f_values.1
        && control_defined
        && control_same_class
        && control_constant;
    Ok(ClaimReport::new("counterexample.welldefined", "general-realization:coordinate-not-well-defined", ClaimClass::Assert)
        .instance("S = span{e1+e2} in ℓ∞², E = ℝ, ν(e1+e2) = 4/5")
        .verdict(pass)
        .vec("b", &b)
        .vec("e", &e)
        .vec("b_shifted", &b2)
        .vec("e_shifted", &e2)
        .value("same_coset", same_class)
        .rat("b1", &b[0])
        .rat("b1_shifted", &b2[0])
        .rat("difference", &difference)
        .rat("kernel_value_of_b1", &coordinate_error.unwrap_or_else(Rational::zero))
        .rat("half_difference_functional", &f_values.0)
        .rat("half_difference_functional_shifted", &f_values.1)
        .rat("half_difference_dual_norm", &f_norm)
        .value("control_coordinate_defined", control_defined)
        .value("control_b1_constant", control_constant && control_same_class))
}

/// The three-stage general realization: `S = span{e₁+e₂}` at both
/// singleton stages, then `S = span{e₁+e₂, e₃+e₄} ⊂ ℓ∞⁴` glued onto
/// `j(v₁)` and `v₂`.
#[derive(Clone, Debug)]
pub struct UpperBoundScenario {
    pub stages: [PushoutResult; 3],
    /// `v₁` carried into the second singleton stage.
    pub jv1: RVector,
    pub v2: RVector,
    /// `j(v₁) + v₂` in the last stage.
    pub sum: RVector,
    pub norm: Rational,
    /// `(e₁+e₂) + (e₁-e₂)` in `ℓ∞⁴`.
    pub phi_image: RVector,
    /// `‖φ‖` on `G` at the last stage.
    pub phi_expansion: Rational,
    /// `(b₁ - b₂)/2` at each singleton stage, evaluated on its own `v`.
    pub f_values: (Rational, Rational),
}

pub fn upperbound_scenario(eta: &Rational) -> Result<UpperBoundScenario> {
    let l2 = make_linf(2)?;
    let diag = vector(&[1, 1]);
    let anti = vector(&[1, -1]);
    let x = make_linf(1)?;
    let p1 = kisliakov_pushout(&l2, &[diag.clone()], &x, &RMatrix::from_rows(&[vec![eta.clone()]])?, eta)?;
    let d1 = p1.i_e.apply(&[Rational::one()])?;
    let nu2 = RMatrix::from_columns(d1.len(), &[ratlin::scale(&d1, eta)])?;
    let p2 = kisliakov_pushout(&l2, &[diag.clone()], &p1.space, &nu2, eta)?;

    let half = rat(1, 2);
    let f = vec![half.clone(), -half.clone()];
    let f1 = chart_functional(&p1, &ratlin::concat(&f, &zeros(x.dim())))?;
    let f2 = chart_functional(&p2, &ratlin::concat(&f, &zeros(p1.space.dim())))?;
    let v1 = p1.i_b.apply(&anti)?;
    let v2 = p2.i_b.apply(&anti)?;
    let f_values = (dot(&f1, &v1), dot(&f2, &v2));
    let jv1 = p2.i_e.apply(&v1)?;

    let e2 = &p2.space;
    let n_plus = e2.norm(&ratlin::add(&jv1, &v2))?;
    let n_minus = e2.norm(&ratlin::sub(&jv1, &v2))?;
    let c = eta / n_plus.clone().max(n_minus);
    let l4 = make_linf(4)?;
    let s3 = vec![vector(&[1, 1, 0, 0]), vector(&[0, 0, 1, 1])];
    let nu3 = RMatrix::from_columns(e2.dim(), &[ratlin::scale(&jv1, &c), ratlin::scale(&v2, &c)])?;
    let p3 = kisliakov_pushout(&l4, &s3, e2, &nu3, eta)?;
    let sum = p3.i_e.apply(&ratlin::add(&jv1, &v2))?;
    let norm = p3.space.norm(&sum)?;
    let phi_image = ratlin::add(&vector(&[1, 1, 0, 0]), &vector(&[1, -1, 0, 0]));

    let g = p3.i_b.matrix.column_vectors();
    let mut phi_expansion = Rational::zero();
    for i in 0..4 {
        phi_expansion = phi_expansion.max(p3.space.sup_on_subspace(&g, &unit(4, i))?.0);
    }
    Ok(UpperBoundScenario { stages: [p1, p2, p3], jv1, v2, sum, norm, phi_image, phi_expansion, f_values })
}

/// Certifies `‖j(v₁) + v₂‖ >= 2/λ > λ` for `λ = 6/5`, `η = 4/5`.
pub fn reproduce_upperbound_counterexample() -> Result<ClaimReport> {
    let lambda = rat(6, 5);
    let eta = rat(4, 5);
    let sc = upperbound_scenario(&eta)?;
    let phi_sup = max_abs(&sc.phi_image);
    let lower = &phi_sup / &lambda;
    let upper = lambda.clone();
    let pass = sc.norm >= lower && lower > upper && sc.f_values.0.is_one() && sc.f_values.1.is_one();
    let control = coordinate_control(&Params::new(lambda.clone(), eta.clone())?)?;
    Ok(ClaimReport::new("counterexample.upperbound", "general-realization:upper-bound-fails", ClaimClass::Assert)
        .instance("λ = 6/5, η = 4/5, S = span{e1+e2, e3+e4} ⊂ ℓ∞⁴, a = (1, 1)")
        .verdict(pass)
        .rat("norm", &sc.norm)
        .vec("phi_image", &sc.phi_image)
        .rat("phi_image_sup", &phi_sup)
        .rat("two_over_lambda", &lower)
        .rat("lambda_max_a", &upper)
        .rat("f1_v1", &sc.f_values.0)
        .rat("f2_v2", &sc.f_values.1)
        .rat("control_norm", &control.norm)
        .rat("control_bound", &control.upper)
        .value("control_upper_holds", control.upper_holds()))
}

/// The same two-point sum under the coordinate realization.
pub fn coordinate_control(params: &Params) -> Result<EquivalenceOutcome> {
    let ground = GroundSet::new(2, vec![vector(&[1]), vector(&[1])])?;
    let sys = build_local_system(make_linf(1)?, ground, StageIndex::range(2), params.clone(), 1)?;
    ell_infty_equivalence(&sys, &[Rational::one(), Rational::one()])
}

/// Seeded dense vectors in the suite's base space `ℓ∞²`.
pub fn suite_system(cfg: &SuiteConfig) -> Result<LocalSystem> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dense: Vec<RVector> = (0..cfg.ground_size)
        .map(|_| loop {
            let v = small_vector(&mut rng, 2, BOUND);
            if !ratlin::is_zero_vec(&v) {
                break v;
            }
        })
        .collect();
    let ground = GroundSet::new(cfg.ground_size, dense)?;
    build_local_system(make_linf(2)?, ground, StageIndex::range(cfg.ground_size), cfg.params()?, cfg.q_policy)
}

/// First failing instance, kept as a witness.
#[derive(Default)]
struct Tally {
    checked: usize,
    failure: Option<Value>,
}

impl Tally {
    fn record(&mut self, ok: bool, witness: impl FnOnce() -> Value) {
        self.checked += 1;
        if !ok && self.failure.is_none() {
            self.failure = Some(witness());
        }
    }

    fn finish(self, report: ClaimReport) -> ClaimReport {
        let ok = self.failure.is_none();
        let r = report.value("checked", self.checked).verdict(ok);
        match self.failure {
            Some(w) => r.value("refutation", w),
            None => r,
        }
    }
}

fn fv(v: &[Rational]) -> Value {
    serde_json::json!(format_vector(v))
}

fn fr(r: &Rational) -> Value {
    Value::String(format_rational(r))
}

/// Runs every check in a fixed order.
pub fn run_claim_suite(cfg: &SuiteConfig) -> Result<Vec<ClaimReport>> {
    cfg.validate()?;
    let params = cfg.params()?;
    let t = cfg.timing;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut out = Vec::new();

    out.push(timed_result(t, || norm_axioms(cfg, &mut rng))?);
    let scenarios: Vec<PushoutResult> = (0..cfg.samples)
        .map(|_| random_scenario(&mut rng, &params.eta, 3, BOUND)?.build())
        .collect::<Result<_>>()?;
    out.push(timed_result(t, || pushout_isometry(&scenarios))?);
    out.push(timed_result(t, || pushout_contraction(&scenarios, &mut rng))?);
    out.push(timed_result(t, || pushout_kernel(&scenarios))?);
    out.push(timed_result(t, || pushout_admissibility(&scenarios, &mut rng))?);
    out.push(timed(t, antilex_order));

    let sys = suite_system(cfg)?;
    out.extend(timed_result(t, || Ok(vec_wrap(orthogonal_extension(&sys)?)))?.into_vec());
    out.push(timed_result(t, || vanishing(&sys))?);
    out.push(timed_result(t, || transitions(&sys))?);
    out.push(timed_result(t, || isometries(&sys, cfg, &mut rng))?);
    out.push(timed_result(t, || prefix_norms(&sys))?);
    out.push(timed_result(t, || c0_images(&sys, &mut rng))?);
    let general = match cfg.realization {
        Realization::General => Some(upperbound_scenario(&params.eta)?),
        Realization::Coordinate => None,
    };
    let (lower, upper) = linf_equivalence(&sys, cfg, &mut rng, general.as_ref())?;
    out.push(lower);
    out.push(upper);
    let (recovery, gaps) = partial_sum_checks(&sys, cfg, &mut rng)?;
    out.push(recovery);
    out.push(gaps);
    out.push(timed_result(t, || property_d(&sys, general.as_ref()))?);
    out.push(timed_result(t, || nu_inverse(&sys))?);
    out.extend(kernel_checks(&sys, t)?);
    out.push(timed_result(t, reproduce_welldefined_counterexample)?);
    out.push(timed_result(t, reproduce_upperbound_counterexample)?);
    out.push(timed_result(t, || control_report(&params))?);
    Ok(out)
}

/// One-line-per-claim text summary.
pub fn summary(reports: &[ClaimReport]) -> String {
    let mut s = String::new();
    for r in reports {
        let class = match r.class {
            ClaimClass::Assert => "assert",
            ClaimClass::Report => "report",
        };
        let verdict = match r.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Skipped => "SKIP",
        };
        s.push_str(&format!("{verdict:<5} {class:<7} {:<36} {}\n", r.claim_id, r.instance));
    }
    let failed = reports.iter().filter(|r| r.is_assert_failure()).count();
    s.push_str(&format!("{} claims, {} assert failures\n", reports.len(), failed));
    s
}

struct VecWrap(Vec<ClaimReport>);

fn vec_wrap(v: Vec<ClaimReport>) -> VecWrap {
    VecWrap(v)
}

impl VecWrap {
    fn into_vec(self) -> Vec<ClaimReport> {
        self.0
    }
}

fn timed_result<T: Stampable>(timing: bool, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let mut r = f()?;
    if timing {
        r.stamp(start.elapsed().as_millis() as u64);
    }
    Ok(r)
}

trait Stampable {
    fn stamp(&mut self, ms: u64);
}

impl Stampable for ClaimReport {
    fn stamp(&mut self, ms: u64) {
        self.runtime_ms = ms;
    }
}

impl Stampable for VecWrap {
    fn stamp(&mut self, ms: u64) {
        for r in &mut self.0 {
            r.runtime_ms = ms;
        }
    }
}

fn norm_axioms(cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<ClaimReport> {
    let mut tally = Tally::default();
    for _ in 0..cfg.samples {
        let dim = rng.gen_range(1..=3);
        let extra = rng.gen_range(0..=2);
        let s = random_space(rng, dim, extra, BOUND)?;
        let x = small_vector(rng, dim, BOUND);
        let y = small_vector(rng, dim, BOUND);
        let f = small_vector(rng, dim, BOUND);
        let c = small_rational(rng, BOUND);
        let (nx, ny) = (s.norm(&x)?, s.norm(&y)?);
        let ok = !nx.is_negative()
            && (nx.is_zero() == ratlin::is_zero_vec(&x))
            && s.norm(&ratlin::scale(&x, &c))? == c.abs() * &nx
            && s.norm(&ratlin::add(&x, &y))? <= &nx + &ny
            && dot(&f, &x) <= s.dual_norm(&f)? * &nx;
        tally.record(ok, || serde_json::json!({"x": fv(&x), "y": fv(&y), "f": fv(&f), "c": fr(&c)}));
    }
    Ok(tally.finish(
        ClaimReport::new("space.norm_axioms", "polyhedral-norm:axioms-and-duality", ClaimClass::Assert)
            .instance(format!("{} random polytopes, dim <= 3", cfg.samples)),
    ))
}

fn pushout_isometry(ps: &[PushoutResult]) -> Result<ClaimReport> {
    let mut tally = Tally::default();
    for p in ps {
        for v in p.e().vertices() {
            let lhs = p.space.norm(&p.i_e.apply(v)?)?;
            let rhs = p.e().norm(v)?;
            tally.record(lhs == rhs, || serde_json::json!({"e": fv(v), "image_norm": fr(&lhs), "norm": fr(&rhs)}));
        }
    }
    Ok(tally.finish(
        ClaimReport::new("pushout.i_e_isometry", "pushout:i_E-isometric", ClaimClass::Assert)
            .instance(format!("{} random pushouts, every ball vertex of E", ps.len())),
    ))
}

fn pushout_contraction(ps: &[PushoutResult], rng: &mut ChaCha8Rng) -> Result<ClaimReport> {
    let mut tally = Tally::default();
    for p in ps {
        let norm = operator_norm(&p.i_b)?;
        tally.record(norm <= Rational::one(), || serde_json::json!({"i_b_norm": fr(&norm)}));
        if p.s_basis.is_empty() {
            continue;
        }
        let coeffs = small_vector(rng, p.s_basis.len(), BOUND);
        let b = ratlin::combine(p.b().dim(), &p.s_basis, &coeffs);
        let lhs = p.space.norm(&p.i_b.apply(&b)?)?;
        let rhs = &p.eta * p.b().norm(&b)?;
        tally.record(lhs <= rhs, || serde_json::json!({"b": fv(&b), "image_norm": fr(&lhs), "bound": fr(&rhs)}));
    }
    Ok(tally.finish(
        ClaimReport::new("pushout.i_b_contraction", "pushout:i_B-contractive", ClaimClass::Assert)
            .instance(format!("{} random pushouts: ‖i_B‖ <= 1 and ‖i_B(s)‖ <= η‖s‖ on S", ps.len())),
    ))
}

fn pushout_kernel(ps: &[PushoutResult]) -> Result<ClaimReport> {
    let mut tally = Tally::default();
    for p in ps {
        let gens: Vec<RVector> = p
            .s_basis
            .iter()
            .enumerate()
            .map(|(j, s)| ratlin::concat(s, &ratlin::neg(&p.u.matrix.column(j))))
            .collect();
        let kernel = p.result.projection.kernel_basis();
        let dim = p.b().dim() + p.e().dim();
        tally.record(ratlin::same_span(dim, &gens, &kernel), || serde_json::json!({"generators": gens.len()}));
    }
    Ok(tally.finish(
        ClaimReport::new("pushout.kernel", "pushout:kernel-is-graph-of-u", ClaimClass::Assert)
            .instance(format!("{} random pushouts, rref comparison", ps.len())),
    ))
}

fn pushout_admissibility(ps: &[PushoutResult], rng: &mut ChaCha8Rng) -> Result<ClaimReport> {
    let mut admitted = 0;
    let mut min_slack: Option<Rational> = None;
    let mut refutation = None;
    for p in ps {
        for n in 1..=2 {
            let tuples = sample_tuples(p, rng, n, 3, BOUND)?;
            let r = admissibility_check(p, &tuples)?;
            admitted += r.witness["admitted"].as_u64().unwrap_or(0);
            if let Some(Value::String(s)) = r.witness.get("min_slack") {
                let v = ratlin::parse_rational(s)?;
                if min_slack.as_ref().is_none_or(|m| v < *m) {
                    min_slack = Some(v);
                }
            }
            if r.verdict == Verdict::Fail && refutation.is_none() {
                refutation = r.witness.get("refuting_tuple").cloned();
            }
        }
    }
    let r = ClaimReport::new("pushout.admissibility", "admissible-embedding:metric-inequality", ClaimClass::Assert)
        .instance(format!("{} random pushouts, tuples of length 2 and 3", ps.len()))
        .value("admitted", admitted)
        .verdict(refutation.is_none());
    let r = match min_slack {
        Some(m) => r.rat("min_slack", &m),
        None => r,
    };
    Ok(match refutation {
        Some(w) => r.value("refutation", w),
        None => r,
    })
}

fn antilex_order() -> ClaimReport {
    let mut tally = Tally::default();
    let all = StageIndex::range(4).subsets();
    for a in &all {
        for b in &all {
            let ab = antilex_compare(a, b);
            let ok = ab == antilex_compare(b, a).reverse() && (!a.is_subset(b) || ab != std::cmp::Ordering::Greater);
            tally.record(ok, || serde_json::json!({"t": a.label(), "u": b.label()}));
        }
        if a.is_empty() || a.len() > 3 {
            continue;
        }
        let pred = predecessor(a).expect("nonempty");
        let between = a.subsets().into_iter().any(|s| s > pred && s < *a);
        tally.record(pred < *a && !between, || serde_json::json!({"t": a.label(), "predecessor": pred.label()}));
    }
    tally.finish(
        ClaimReport::new("lopezabad.antilex", "antilex-order:total-extends-inclusion", ClaimClass::Assert)
            .instance("all subsets of a 4-element ground set"),
    )
}

fn orthogonal_extension(sys: &LocalSystem) -> Result<Vec<ClaimReport>> {
    let lambda = &sys.params.lambda;
    let bound = sys.params.functional_bound();
    let mut unit_value = Tally::default();
    let mut v_norm = Tally::default();
    let mut old = Tally::default();
    let mut fresh = Tally::default();
    let mut new_norm = Tally::default();
    for (k, f) in sys.functionals.iter().enumerate() {
        let (intro, v) = sys.v(k)?;
        let st = sys.stage(&intro)?;
        let val = sys.evaluate(f.gamma, &intro, &v)?;
        unit_value.record(val.is_one(), || serde_json::json!({"gamma": f.gamma, "value": fr(&val)}));
        let nv = st.space.norm(&v)?;
        v_norm.record(&nv <= lambda, || serde_json::json!({"gamma": f.gamma, "norm": fr(&nv)}));
        for g in sys.functionals.iter().filter(|g| g.intro < intro) {
            let val = sys.evaluate(g.gamma, &intro, &v)?;
            old.record(val.is_zero(), || serde_json::json!({"gamma": g.gamma, "v_of": f.gamma, "value": fr(&val)}));
        }
        for (t, w) in &f.stagewise {
            let d = sys.stage(t)?.space.dual_norm(w)?;
            old.record(d <= bound, || serde_json::json!({"gamma": f.gamma, "stage": t.label(), "dual_norm": fr(&d)}));
        }
        let prev = st.prev.clone().expect("singleton stage has a predecessor");
        for y in &sys.stage(&prev)?.g_basis {
            let val = sys.evaluate(f.gamma, &intro, &sys.transport(&prev, &intro, y)?)?;
            fresh.record(val.is_zero(), || serde_json::json!({"gamma": f.gamma, "from": prev.label(), "value": fr(&val)}));
        }
        let d = st.space.dual_norm(&f.stagewise[&intro])?;
        new_norm.record(&d <= lambda, || serde_json::json!({"gamma": f.gamma, "dual_norm": fr(&d)}));
    }
    let inst = format!("stages below {}", sys.top);
    Ok(vec![
        unit_value.finish(
            ClaimReport::new("lopezabad.ext_unit", "orthogonal-extension:new-functional-reads-v", ClaimClass::Assert)
                .instance(inst.clone()),
        ),
        v_norm.finish(
            ClaimReport::new("lopezabad.ext_v_norm", "orthogonal-extension:v-norm-at-most-lambda", ClaimClass::Assert)
                .instance(inst.clone()),
        ),
        old.finish(
            ClaimReport::new("lopezabad.ext_old", "orthogonal-extension:old-functionals-kill-v-and-stay-bounded", ClaimClass::Assert)
                .instance(inst.clone())
                .rat("bound", &bound),
        ),
        fresh.finish(
            ClaimReport::new("lopezabad.ext_fresh", "orthogonal-extension:new-functional-kills-G_s", ClaimClass::Assert)
                .instance(inst.clone()),
        ),
        new_norm.finish(
            ClaimReport::new("lopezabad.ext_new_norm", "orthogonal-extension:new-functional-norm", ClaimClass::Assert)
                .instance(inst),
        ),
    ])
}

fn vanishing(sys: &LocalSystem) -> Result<ClaimReport> {
    let mut tally = Tally::default();
    for s in &sys.order {
        for f in sys.functionals.iter().filter(|f| !s.contains(f.gamma)) {
            for y in &sys.stage(s)?.g_basis {
                let val = sys.evaluate(f.gamma, &sys.top, &sys.transport(s, &sys.top, y)?)?;
                tally.record(val.is_zero(), || {
                    serde_json::json!({"gamma": f.gamma, "stage": s.label(), "y": fv(y), "value": fr(&val)})
                });
            }
        }
    }
    Ok(tally.finish(
        ClaimReport::new("lopezabad.vanishing", "general-vanishing", ClaimClass::Assert)
            .instance(format!("every G_s below {}, every γ outside s", sys.top)),
    ))
}

fn transitions(sys: &LocalSystem) -> Result<ClaimReport> {
    let mut tally = Tally::default();
    for u in &sys.order {
        for t in sys.order.iter().filter(|t| *t >= u) {
            let ok = transition_check(sys, u, t)?;
            tally.record(ok, || serde_json::json!({"from": u.label(), "to": t.label()}));
        }
    }
    Ok(tally.finish(
        ClaimReport::new("lopezabad.transition", "transition-maps:preserve-ell-infty-component", ClaimClass::Assert)
            .instance(format!("all stage pairs below {}", sys.top)),
    ))
}

fn isometries(sys: &LocalSystem, cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<ClaimReport> {
    let mut tally = Tally::default();
    for t in sys.order.iter().skip(1) {
        let st = sys.stage(t)?;
        let prev = sys.stage(st.prev.as_ref().expect("nonempty stage"))?;
        let mut vs: Vec<RVector> = prev.space.vertices().iter().take(4).cloned().collect();
        vs.extend((0..cfg.samples.min(4)).map(|_| small_vector(rng, prev.dim(), BOUND)));
        let ok = isometry_check(sys, t, &vs)?;
        tally.record(ok, || serde_json::json!({"stage": t.label()}));
    }
    Ok(tally.finish(
        ClaimReport::new("lopezabad.isometry", "connecting-maps:isometric", ClaimClass::Assert)
            .instance("chain steps on vertices and random vectors"),
    ))
}

fn prefix_norms(sys: &LocalSystem) -> Result<ClaimReport> {
    let bound = sys.params.functional_bound();
    let mut tally = Tally::default();
    let mut norms = Vec::new();
    for k in 1..=sys.functionals.len() {
        let n = prefix_map_norm(sys, k)?;
        tally.record(n <= bound, || serde_json::json!({"k": k, "norm": fr(&n)}));
        norms.push(n);
    }
    Ok(tally.finish(
        ClaimReport::new("lopezabad.prefix_norm", "quotient-map:norm-bound", ClaimClass::Assert)
            .instance(format!("prefix maps into ℓ∞^k at {}", sys.top))
            .vec("norms", &norms)
            .rat("bound", &bound),
    ))
}

fn c0_images(sys: &LocalSystem, rng: &mut ChaCha8Rng) -> Result<ClaimReport> {
    let mut tally = Tally::default();
    let k = sys.functionals.len();
    for s in &sys.order {
        let st = sys.stage(s)?;
        let coeffs = small_vector(rng, st.g_basis.len(), BOUND);
        let y = ratlin::combine(st.dim(), &st.g_basis, &coeffs);
        let image = prefix_quotient_map(sys, k, &sys.transport(s, &sys.top, &y)?)?;
        let ok = sys.functionals.iter().zip(&image).all(|(f, x)| s.contains(f.gamma) || x.is_zero());
        tally.record(ok, || serde_json::json!({"stage": s.label(), "image": fv(&image)}));
    }
    Ok(tally.finish(
        ClaimReport::new("lopezabad.c0_image", "quotient-map:finitely-supported-image", ClaimClass::Assert)
            .instance("random elements of every G_s"),
    ))
}

fn random_coefficients(sys: &LocalSystem, rng: &mut ChaCha8Rng) -> RVector {
    let k = rng.gen_range(1..=sys.functionals.len().max(1));
    small_vector(rng, k.min(sys.functionals.len()), BOUND)
}

fn linf_equivalence(
    sys: &LocalSystem,
    cfg: &SuiteConfig,
    rng: &mut ChaCha8Rng,
    general: Option<&UpperBoundScenario>,
) -> Result<(ClaimReport, ClaimReport)> {
    let start = Instant::now();
    let mut lower = Tally::default();
    let mut upper = Tally::default();
    for _ in 0..cfg.samples {
        let a = random_coefficients(sys, rng);
        let o = ell_infty_equivalence(sys, &a)?;
        let w = || serde_json::json!({"a": fv(&a), "norm": fr(&o.norm), "lower": fr(&o.lower), "upper": fr(&o.upper)});
        lower.record(o.lower_holds(), w);
        if general.is_none() {
            upper.record(o.upper_holds(), w);
        }
    }
    let mut up = ClaimReport::new("lopezabad.linf_upper", "linf-equivalence:upper", ClaimClass::Report);
    up = match general {
        None => up.instance(format!("{} random coefficient vectors, coordinate realization", cfg.samples)),
        Some(sc) => {
            let bound = cfg.lambda.clone();
            upper.record(sc.norm <= bound, || serde_json::json!({"a": ["1", "1"], "norm": fr(&sc.norm), "upper": fr(&bound)}));
            up.instance("a = (1, 1) on the general-realization scenario")
        }
    };
    let ms = if cfg.timing { start.elapsed().as_millis() as u64 } else { 0 };
    let mut lo = lower.finish(
        ClaimReport::new("lopezabad.linf_lower", "linf-equivalence:lower", ClaimClass::Assert)
            .instance(format!("{} random coefficient vectors", cfg.samples)),
    );
    let mut up = upper.finish(up);
    lo.runtime_ms = ms;
    up.runtime_ms = ms;
    Ok((lo, up))
}

fn partial_sum_checks(sys: &LocalSystem, cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<(ClaimReport, ClaimReport)> {
    let start = Instant::now();
    let mut recovery = Tally::default();
    let mut gaps = Tally::default();
    for _ in 0..cfg.samples {
        let a = random_coefficients(sys, rng);
        for (k, p) in partial_sums(sys, &a)?.iter().enumerate() {
            let ok = p.coordinates.iter().enumerate().all(|(j, c)| if j <= k { *c == a[j] } else { c.is_zero() });
            recovery.record(ok, || serde_json::json!({"a": fv(&a), "k": k + 1, "coordinates": fv(&p.coordinates)}));
            gaps.record(p.gap <= p.gap_bound, || {
                serde_json::json!({"a": fv(&a), "k": k + 1, "gap": fr(&p.gap), "bound": fr(&p.gap_bound)})
            });
        }
    }
    let ms = if cfg.timing { start.elapsed().as_millis() as u64 } else { 0 };
    let mut r = recovery.finish(
        ClaimReport::new("lopezabad.recovery", "successive-approximation:coordinates-recovered", ClaimClass::Assert)
            .instance(format!("{} random coefficient vectors", cfg.samples)),
    );
    let mut g = gaps.finish(
        ClaimReport::new("lopezabad.cauchy_gap", "successive-approximation:gap-bound", ClaimClass::Report)
            .instance(format!("{} random coefficient vectors", cfg.samples)),
    );
    r.runtime_ms = ms;
    g.runtime_ms = ms;
    Ok((r, g))
}

fn property_d(sys: &LocalSystem, general: Option<&UpperBoundScenario>) -> Result<ClaimReport> {
    let lambda = &sys.params.lambda;
    let mut tally = Tally::default();
    let report = ClaimReport::new("lopezabad.property_d", "local-stage:phi-distortion", ClaimClass::Report);
    if let Some(sc) = general {
        tally.record(sc.phi_expansion <= *lambda, || serde_json::json!({"phi_norm": fr(&sc.phi_expansion)}));
        return Ok(tally.finish(report.instance("last stage of the general-realization scenario")));
    }
    let mut expansions = Vec::new();
    for t in sys.order.iter().skip(1) {
        let (contraction, expansion) = sys.stage(t)?.phi_distortion()?;
        tally.record(contraction <= Rational::one() && expansion <= *lambda, || {
            serde_json::json!({"stage": t.label(), "i_b_norm": fr(&contraction), "phi_norm": fr(&expansion)})
        });
        expansions.push(expansion);
    }
    Ok(tally.finish(report.instance("every pushout stage: ‖i_B‖ <= 1 and ‖φ‖ <= λ").vec("phi_norms", &expansions)))
}

fn nu_inverse(sys: &LocalSystem) -> Result<ClaimReport> {
    let mut tally = Tally::default();
    let mut values = Vec::new();
    for t in sys.order.iter().skip(1) {
        let st = sys.stage(t)?;
        tally.record(st.nu_inv_norm <= sys.params.lambda, || {
            serde_json::json!({"stage": t.label(), "nu_inverse_norm": fr(&st.nu_inv_norm)})
        });
        values.push(st.nu_inv_norm.clone());
    }
    Ok(tally.finish(
        ClaimReport::new("lopezabad.nu_inverse", "local-stage:nu-inverse-bound", ClaimClass::Report)
            .instance("measured ‖ν_t⁻¹‖ against λ with ‖ν_t‖ = η enforced")
            .vec("values", &values),
    ))
}

fn kernel_checks(sys: &LocalSystem, timing: bool) -> Result<Vec<ClaimReport>> {
    let start = Instant::now();
    let mut shape = Tally::default();
    let mut nest = Tally::default();
    let mut dist = Tally::default();
    for s in &sys.order {
        let k = kernel_slice(sys, s)?;
        let dim = sys.stage(s)?.dim();
        let expected = k.n - k.r;
        let ok = k.basis.len() == expected && ratlin::same_span(dim, &k.basis, &k.chart_basis);
        shape.record(ok, || serde_json::json!({"stage": s.label(), "dim": k.basis.len(), "expected": expected}));
        for t in sys.order.iter().filter(|t| s.is_subset(t) && *t != s) {
            let ok = kernel_slices_nest(sys, s, t)?;
            nest.record(ok, || serde_json::json!({"from": s.label(), "to": t.label()}));
        }
        if !s.is_empty() {
            let (expansion, contraction) = kernel_slice_distortion(sys, s, &k)?;
            dist.record(expansion <= sys.params.lambda && contraction <= Rational::one(), || {
                serde_json::json!({"stage": s.label(), "phi_norm": fr(&expansion), "phi_inverse_norm": fr(&contraction)})
            });
        }
    }
    let ms = if timing { start.elapsed().as_millis() as u64 } else { 0 };
    let mut out = vec![
        shape.finish(
            ClaimReport::new("lopezabad.kernel_slice", "kernel:slice-is-coordinate-subspace", ClaimClass::Assert)
                .instance("every stage: dim K_s = n_s - r_s, functional and chart routes agree"),
        ),
        nest.finish(
            ClaimReport::new("lopezabad.kernel_nesting", "kernel:slices-nest", ClaimClass::Assert)
                .instance("every pair s ⊊ t"),
        ),
        dist.finish(
            ClaimReport::new("lopezabad.kernel_distortion", "kernel:slice-distortion", ClaimClass::Report)
                .instance("‖φ_s|K_s‖ <= λ and ‖φ_s⁻¹‖ <= 1 on the slice"),
        ),
    ];
    for r in &mut out {
        r.runtime_ms = ms;
    }
    Ok(out)
}

fn control_report(params: &Params) -> Result<ClaimReport> {
    let o = coordinate_control(params)?;
    Ok(ClaimReport::new("counterexample.upperbound_control", "coordinate-realization:upper-bound", ClaimClass::Report)
        .instance("a = (1, 1) over ℝ with two singleton stages, coordinate realization")
        .verdict(o.upper_holds())
        .rat("norm", &o.norm)
        .rat("bound", &o.upper))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counterexamples_reproduce() {
        let w = reproduce_welldefined_counterexample().unwrap();
        assert!(w.passed(), "{w:?}");
        let u = reproduce_upperbound_counterexample().unwrap();
        assert!(u.passed(), "{u:?}");
        assert_eq!(u.witness["norm"], "2");
    }

    #[test]
    fn config_validation() {
        assert!(SuiteConfig::default().validate().is_ok());
        let bad = [
            SuiteConfig { lambda: rat(1, 1), ..Default::default() },
            SuiteConfig { eta: rat(9, 10), ..Default::default() },
            SuiteConfig { ground_size: MAX_TOP_SIZE + 1, ..Default::default() },
            SuiteConfig { q_policy: 0, ..Default::default() },
            SuiteConfig { samples: 0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn small_suite_has_no_assert_failures() {
        let cfg = SuiteConfig { ground_size: 2, samples: 4, ..Default::default() };
        let reports = run_claim_suite(&cfg).unwrap();
        assert!(reports.iter().all(|r| !r.is_assert_failure()), "{}", summary(&reports));
        let again = run_claim_suite(&cfg).unwrap();
        assert_eq!(serde_json::to_string(&reports).unwrap(), serde_json::to_string(&again).unwrap());
    }
}
