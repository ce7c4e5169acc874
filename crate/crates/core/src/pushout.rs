//! The Kisliakov pushout `(B ⊕₁ E) / {(s, -u s) : s ∈ S}` and the
//! admissibility inequality of the resulting embedding `i_E`.

use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ratlin::{self, independent, in_span, serde_rational, small_vector, sub, RMatrix, RVector, Rational};
use crate::space::{
    direct_sum_l1, operator_norm, quotient, random_independent, random_space, section_vertices, LinearMap, NormedSpace,
    QuotientSpace,
};
use crate::verify::{ClaimClass, ClaimReport};

/// A constructed pushout. `space` is the quotient in its own coordinates;
/// `i_b` and `i_e` land there.
#[derive(Clone, Debug)]
pub struct PushoutResult {
    pub result: QuotientSpace,
    pub space: Arc<NormedSpace>,
    pub i_b: LinearMap,
    pub i_e: LinearMap,
    pub s_basis: Vec<RVector>,
    /// `u` on the section of `B` along `S`, in `S`-basis coordinates.
    pub u: LinearMap,
    pub u_norm: Rational,
    pub eta: Rational,
}

impl PushoutResult {
    pub fn b(&self) -> &NormedSpace {
        &self.i_b.domain
    }

    pub fn e(&self) -> &NormedSpace {
        &self.i_e.domain
    }

    /// Class of `(b, e)` in pushout coordinates.
    pub fn class_of(&self, b: &[Rational], e: &[Rational]) -> Result<RVector> {
        self.result.coords(&ratlin::concat(b, e))
    }

    /// Quotient of the pushout by `i_E(E)`.
    pub fn quotient_by_e(&self) -> Result<QuotientSpace> {
        quotient(self.space.clone(), self.i_e.matrix.column_vectors())
    }
}

/// Builds the pushout of `B ⊇ S → E`. Column `j` of `u_matrix` is `u(s_j)`.
pub fn kisliakov_pushout(
    b: &NormedSpace,
    s_basis: &[RVector],
    e: &NormedSpace,
    u_matrix: &RMatrix,
    eta: &Rational,
) -> Result<PushoutResult> {
    if eta.is_negative() || *eta > Rational::one() {
        return Err(Error::InvalidParameters(format!("eta = {} must lie in [0, 1]", ratlin::format_rational(eta))));
    }
    let k = s_basis.len();
    if u_matrix.rows() != e.dim() && k > 0 {
        return Err(Error::DimensionMismatch { expected: e.dim(), found: u_matrix.rows() });
    }
    if u_matrix.cols() != k && k > 0 {
        return Err(Error::DimensionMismatch { expected: k, found: u_matrix.cols() });
    }
    for s in s_basis {
        if s.len() != b.dim() {
            return Err(Error::DimensionMismatch { expected: b.dim(), found: s.len() });
        }
    }
    if !independent(b.dim(), s_basis) {
        return Err(Error::DependentVectors);
    }
    let u_matrix = if k == 0 { RMatrix::zeros(e.dim(), 0) } else { u_matrix.clone() };

    let section = Arc::new(if k == 0 {
        NormedSpace::new(0, vec![])?
    } else {
        NormedSpace::new(k, section_vertices(b, s_basis)?)?
    });
    let e_arc = Arc::new(e.clone());
    let u = LinearMap::new(section, e_arc.clone(), u_matrix.clone())?;
    let u_norm = operator_norm(&u)?;
    if u_norm > *eta {
        return Err(Error::NormBoundViolated { norm: u_norm, bound: eta.clone() });
    }

    let sum = Arc::new(direct_sum_l1(b, e)?);
    let kernel: Vec<RVector> =
        (0..k).map(|j| ratlin::concat(&s_basis[j], &ratlin::neg(&u_matrix.column(j)))).collect();
    let result = quotient(sum, kernel)?;
    let space = Arc::new(result.to_space()?);

    let (db, de) = (b.dim(), e.dim());
    let q = &result.projection;
    let cols_b: Vec<usize> = (0..db).collect();
    let cols_e: Vec<usize> = (db..db + de).collect();
    let i_b = LinearMap::new(Arc::new(b.clone()), space.clone(), q.select_columns(&cols_b))?;
    let i_e = LinearMap::new(e_arc, space.clone(), q.select_columns(&cols_e))?;
    Ok(PushoutResult { result, space, i_b, i_e, s_basis: s_basis.to_vec(), u, u_norm, eta: eta.clone() })
}

/// Slack `Σ‖x_i‖ - ‖Σx_i‖ - (1-η) Σ‖q(x_i)‖` of one tuple.
pub fn admissibility_slack(p: &PushoutResult, q: &QuotientSpace, tuple: &[RVector]) -> Result<Rational> {
    let dim = p.space.dim();
    let mut total = ratlin::zeros(dim);
    let mut norms = Rational::zero();
    let mut qnorms = Rational::zero();
    for x in tuple {
        if x.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: x.len() });
        }
        ratlin::axpy(&mut total, &Rational::one(), x);
        norms += p.space.norm(x)?;
        qnorms += q.quotient_norm(x)?.0;
    }
    Ok(norms - p.space.norm(&total)? - (Rational::one() - &p.eta) * qnorms)
}

/// Checks the admissibility inequality on every tuple whose sum lies in
/// `i_E(E)`; other tuples are skipped and counted.
pub fn admissibility_check(p: &PushoutResult, tuples: &[Vec<RVector>]) -> Result<ClaimReport> {
    let q = p.quotient_by_e()?;
    let image = p.i_e.matrix.column_vectors();
    let dim = p.space.dim();
    let mut slacks = Vec::new();
    let mut skipped = 0usize;
    let mut worst: Option<(Rational, usize)> = None;
    for (idx, t) in tuples.iter().enumerate() {
        let mut total = ratlin::zeros(dim);
        for x in t {
            if x.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: x.len() });
            }
            ratlin::axpy(&mut total, &Rational::one(), x);
        }
        if !in_span(dim, &image, &total) {
            skipped += 1;
            continue;
        }
        let slack = admissibility_slack(p, &q, t)?;
        if worst.as_ref().is_none_or(|(w, _)| slack < *w) {
            worst = Some((slack.clone(), idx));
        }
        slacks.push(slack);
    }
    let admitted = slacks.len();
    let mut report = ClaimReport::new("pushout.admissibility", "admissible-embedding:metric-inequality", ClaimClass::Assert)
        .instance(format!("{} tuples, {} admitted, {} skipped (sum outside i_E(E))", tuples.len(), admitted, skipped))
        .value("admitted", admitted)
        .value("skipped", skipped)
        .vec("slacks", &slacks)
        .rat("eta", &p.eta);
    report = match worst {
        None => report,
        Some((w, idx)) => {
            let ok = !w.is_negative();
            let mut r = report.rat("min_slack", &w).verdict(ok);
            if !ok {
                let rows: Vec<Vec<String>> = tuples[idx].iter().map(|x| ratlin::format_vector(x)).collect();
                r = r.value("refuting_tuple", serde_json::json!(rows));
            }
            r
        }
    };
    Ok(report)
}

/// Tuples `(x_0, …, x_n)` with `x_n = i_E(e) - Σ_{i<n} x_i`, so the sum lies in `i_E(E)`.
pub fn sample_tuples<R: Rng + ?Sized>(
    p: &PushoutResult,
    rng: &mut R,
    n: usize,
    count: usize,
    bound: i64,
) -> Result<Vec<Vec<RVector>>> {
    let dim = p.space.dim();
    let verts = p.space.vertices();
    let mut out = Vec::with_capacity(count);
    for c in 0..count {
        let mut tuple = Vec::with_capacity(n + 1);
        let mut partial = ratlin::zeros(dim);
        for i in 0..n {
            // alternate vertex-derived and random entries
            let x = if (c + i) % 3 == 0 && !verts.is_empty() {
                verts[rng.gen_range(0..verts.len())].clone()
            } else {
                small_vector(rng, dim, bound)
            };
            ratlin::axpy(&mut partial, &Rational::one(), &x);
            tuple.push(x);
        }
        let e = small_vector(rng, p.e().dim(), bound);
        tuple.push(sub(&p.i_e.apply(&e)?, &partial));
        out.push(tuple);
    }
    Ok(out)
}

/// A random scenario with `dim B, dim E <= max_dim` and `‖u‖` equal to
/// `η`, `3η/4` or `η/2` (or zero when `S = 0`).
pub fn random_scenario<R: Rng + ?Sized>(rng: &mut R, eta: &Rational, max_dim: usize, bound: i64) -> Result<PushoutScenario> {
    let db = rng.gen_range(1..=max_dim);
    let de = rng.gen_range(1..=max_dim);
    let extra = rng.gen_range(0..=2);
    let b = random_space(rng, db, extra, bound)?;
    let extra = rng.gen_range(0..=2);
    let e = random_space(rng, de, extra, bound)?;
    let k = rng.gen_range(0..=db);
    let s_basis = random_independent(rng, db, k, bound);
    let mut u = RMatrix::zeros(de, k);
    if k > 0 {
        let raw = RMatrix::from_columns(de, &(0..k).map(|_| small_vector(rng, de, bound)).collect::<Vec<_>>())?;
        let section = Arc::new(NormedSpace::new(k, section_vertices(&b, &s_basis)?)?);
        let norm = operator_norm(&LinearMap::new(section, Arc::new(e.clone()), raw.clone())?)?;
        if !norm.is_zero() {
            let target = eta * [Rational::one(), ratlin::rat(3, 4), ratlin::rat(1, 2)][rng.gen_range(0..3)].clone();
            u = raw.scaled(&(target / norm));
        }
    }
    Ok(PushoutScenario { B: b, S_basis: s_basis, E: e, u, eta: eta.clone() })
}

/// Pushout scenario file: `{B, S_basis, E, u, eta}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct PushoutScenario {
    pub B: NormedSpace,
    #[serde(with = "serde_rational::vecs")]
    pub S_basis: Vec<RVector>,
    pub E: NormedSpace,
    #[serde(with = "serde_rational::matrix")]
    pub u: RMatrix,
    #[serde(with = "serde_rational::scalar")]
    pub eta: Rational,
}

impl PushoutScenario {
    pub fn build(&self) -> Result<PushoutResult> {
        kisliakov_pushout(&self.B, &self.S_basis, &self.E, &self.u, &self.eta)
    }
}

/// Serializable summary of a built pushout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PushoutDump {
    pub space: NormedSpace,
    #[serde(with = "serde_rational::vecs")]
    pub kernel_basis: Vec<RVector>,
    pub complement: Vec<usize>,
    #[serde(with = "serde_rational::matrix")]
    pub i_b: RMatrix,
    #[serde(with = "serde_rational::matrix")]
    pub i_e: RMatrix,
    #[serde(with = "serde_rational::scalar")]
    pub u_norm: Rational,
    #[serde(with = "serde_rational::scalar")]
    pub eta: Rational,
}

impl From<&PushoutResult> for PushoutDump {
    fn from(p: &PushoutResult) -> Self {
        PushoutDump {
            space: (*p.space).clone(),
            kernel_basis: p.result.kernel_basis.clone(),
            complement: p.result.complement.clone(),
            i_b: p.i_b.matrix.clone(),
            i_e: p.i_e.matrix.clone(),
            u_norm: p.u_norm.clone(),
            eta: p.eta.clone(),
        }
    }
}
