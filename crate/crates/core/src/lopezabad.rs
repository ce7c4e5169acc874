//! Finite truncations of the Lopez-Abad directed system.
//!
//! Stages are indexed by finite subsets of a ground set and built in
//! anti-lexicographic order. Every stage `E_t` is the pushout of the
//! previous stage along `ν_t : S_t → Y_t`, where `S_t` is a coordinate
//! subspace of `ℓ∞^{n_t}` and `Y_t` collects what earlier stages already
//! glued in. The chart of `E_t` is `[free coordinates of ℓ∞^{n_t} | chart of
//! E_prev]`, so each connecting map `j` pads with zeros at the front.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pushout::{kisliakov_pushout, PushoutResult};
use crate::ratlin::{self, dot, in_span, max_abs, serde_rational, span_basis, unit, zeros, RMatrix, RVector, Rational};
use crate::space::{auerbach_basis_in, make_linf, section_vertices, NormedSpace};
use crate::verify::{ClaimClass, ClaimReport};

/// Largest top index accepted by [`build_local_system`].
pub const MAX_TOP_SIZE: usize = 4;

/// A finite subset of the ground set, kept strictly increasing.
///
/// `Ord` is the anti-lexicographic order: compare maxima, then recurse on
/// what is left; the empty set comes first.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct StageIndex(Vec<usize>);

impl TryFrom<Vec<usize>> for StageIndex {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        if v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameters(format!("stage index {v:?} is not strictly increasing")));
        }
        Ok(StageIndex(v))
    }
}

impl From<StageIndex> for Vec<usize> {
    fn from(s: StageIndex) -> Self {
        s.0
    }
}

impl StageIndex {
    /// Sorts and deduplicates.
    pub fn new(mut elements: Vec<usize>) -> Self {
        elements.sort_unstable();
        elements.dedup();
        StageIndex(elements)
    }

    pub fn empty() -> Self {
        StageIndex(Vec::new())
    }

    pub fn singleton(i: usize) -> Self {
        StageIndex(vec![i])
    }

    /// `{0, …, n-1}`.
    pub fn range(n: usize) -> Self {
        StageIndex((0..n).collect())
    }

    pub fn elements(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn is_subset(&self, other: &StageIndex) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    /// All subsets, in anti-lexicographic order.
    pub fn subsets(&self) -> Vec<StageIndex> {
        let k = self.0.len();
        let mut out: Vec<StageIndex> = (0..1usize << k)
            .map(|mask| StageIndex((0..k).filter(|b| mask >> b & 1 == 1).map(|b| self.0[b]).collect()))
            .collect();
        out.sort();
        out
    }

    pub fn label(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        format!("{{{}}}", parts.join(","))
    }
}

impl fmt::Debug for StageIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl fmt::Display for StageIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

pub fn antilex_compare(t: &StageIndex, u: &StageIndex) -> Ordering {
    t.0.iter().rev().cmp(u.0.iter().rev())
}

impl Ord for StageIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        antilex_compare(self, other)
    }
}

impl PartialOrd for StageIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The largest subset of `t` strictly below `t`.
pub fn predecessor(t: &StageIndex) -> Result<StageIndex> {
    if t.is_empty() {
        return Err(Error::InvalidParameters("the empty stage has no predecessor".into()));
    }
    let subs = t.subsets();
    Ok(subs[subs.len() - 2].clone())
}

/// Ground indices `0..size` with one vector of the base space each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundSet {
    pub size: usize,
    pub dense_vectors: Vec<RVector>,
}

impl GroundSet {
    pub fn new(size: usize, dense_vectors: Vec<RVector>) -> Result<Self> {
        if dense_vectors.len() < size {
            return Err(Error::InvalidParameters(format!(
                "ground set of size {size} needs {size} dense vectors, got {}",
                dense_vectors.len()
            )));
        }
        Ok(GroundSet { size, dense_vectors })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Params {
    pub lambda: Rational,
    pub eta: Rational,
}

impl Params {
    /// Requires `λ > 1`, `0 < η < 1` and `λη < 1`.
    pub fn new(lambda: Rational, eta: Rational) -> Result<Self> {
        let one = Rational::one();
        if lambda <= one {
            return Err(Error::InvalidParameters(format!("lambda = {} must exceed 1", ratlin::format_rational(&lambda))));
        }
        if !eta.is_positive() || eta >= one {
            return Err(Error::InvalidParameters(format!("eta = {} must lie in (0, 1)", ratlin::format_rational(&eta))));
        }
        if &lambda * &eta >= one {
            return Err(Error::InvalidParameters("lambda * eta must be below 1".into()));
        }
        Ok(Params { lambda, eta })
    }

    /// `λ(1 + η)`.
    pub fn functional_bound(&self) -> Rational {
        &self.lambda * (Rational::one() + &self.eta)
    }
}

#[derive(Clone, Debug)]
pub struct StageRecord {
    pub t: StageIndex,
    pub prev: Option<StageIndex>,
    pub space: Arc<NormedSpace>,
    /// Auerbach basis of `Y_t`, in coordinates of the previous stage.
    pub yt_basis: Vec<RVector>,
    /// `ν_t` as a matrix from `S_t` coordinates into the previous stage.
    pub nu: RMatrix,
    /// `max_ε ‖Σ ε_l w_l‖`, the norm of the raw coordinate inverse.
    pub iota_inv_norm: Rational,
    /// Measured `‖ν_t⁻¹‖`.
    pub nu_inv_norm: Rational,
    pub n: usize,
    pub m: usize,
    pub q: usize,
    /// `G_t = i_B(ℓ∞^{n_t})`, basis `i_B(e_l)`.
    pub g_basis: Vec<RVector>,
    pub free_indices: Vec<usize>,
    /// `j_{u,t}` for every stage `u` built so far, including `t` itself.
    pub j_maps: BTreeMap<StageIndex, RMatrix>,
    pub pushout: Option<PushoutResult>,
}

impl StageRecord {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    fn pushout(&self) -> Result<&PushoutResult> {
        self.pushout.as_ref().ok_or_else(|| Error::MissingStage(format!("{} has no pushout", self.t)))
    }

    /// `i_B(x) = [(x, 0)]`.
    pub fn i_b(&self, x: &[Rational]) -> Result<RVector> {
        self.pushout()?.i_b.apply(x)
    }

    /// `(‖φ_t⁻¹‖, ‖φ_t‖)`: the norm of `i_B` and of its inverse on `G_t`.
    ///
    /// `‖i_B‖ <= 1` holds because each `i_B(vertex)` is itself a listed ball
    /// vertex; the value is still computed.
    pub fn phi_distortion(&self) -> Result<(Rational, Rational)> {
        let p = self.pushout()?;
        let cube = make_linf(self.n)?;
        let mut contraction = Rational::zero();
        for v in cube.vertices().iter().filter(|v| v[0].is_positive()) {
            contraction = contraction.max(self.space.norm(&p.i_b.apply(v)?)?);
        }
        let mut expansion = Rational::zero();
        for i in 0..self.n {
            expansion = expansion.max(self.space.sup_on_subspace(&self.g_basis, &unit(self.n, i))?.0);
        }
        Ok((contraction, expansion))
    }
}

/// `e*_γ` on every stage from its introduction onwards, in chart coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoordinateFunctional {
    pub gamma: usize,
    pub intro: StageIndex,
    pub free_index: usize,
    pub stagewise: BTreeMap<StageIndex, RVector>,
}

#[derive(Clone, Debug)]
pub struct LocalSystem {
    pub ground: GroundSet,
    pub base: Arc<NormedSpace>,
    pub params: Params,
    pub q_policy: usize,
    pub top: StageIndex,
    /// Subsets of `top` in the order they were built.
    pub order: Vec<StageIndex>,
    pub stages: BTreeMap<StageIndex, StageRecord>,
    pub functionals: Vec<CoordinateFunctional>,
}

impl LocalSystem {
    pub fn stage(&self, t: &StageIndex) -> Result<&StageRecord> {
        self.stages.get(t).ok_or_else(|| Error::MissingStage(t.label()))
    }

    pub fn top_stage(&self) -> &StageRecord {
        &self.stages[&self.top]
    }

    /// `j_{s,t}` for `s` built no later than `t`.
    pub fn j_map(&self, s: &StageIndex, t: &StageIndex) -> Result<&RMatrix> {
        self.stage(t)?.j_maps.get(s).ok_or_else(|| Error::MissingStage(format!("{s} does not precede {t}")))
    }

    pub fn transport(&self, s: &StageIndex, t: &StageIndex, y: &[Rational]) -> Result<RVector> {
        self.j_map(s, t)?.mul_vec(y)
    }

    pub fn functional(&self, gamma: usize) -> Result<&CoordinateFunctional> {
        self.functionals
            .iter()
            .find(|f| f.gamma == gamma)
            .ok_or_else(|| Error::MissingStage(format!("singleton stage {{{gamma}}}")))
    }

    /// `e*_γ(y)` for `y` in stage `t`.
    pub fn evaluate(&self, gamma: usize, t: &StageIndex, y: &[Rational]) -> Result<Rational> {
        let f = self.functional(gamma)?;
        let w = f.stagewise.get(t).ok_or_else(|| Error::MissingStage(format!("e*_{gamma} on {t}")))?;
        Ok(dot(w, y))
    }

    /// `v_k = [(e_{j_k}, 0)]` in its introduction stage.
    pub fn v(&self, k: usize) -> Result<(StageIndex, RVector)> {
        let f = self.functionals.get(k).ok_or_else(|| Error::MissingStage(format!("functional {k}")))?;
        let st = self.stage(&f.intro)?;
        Ok((f.intro.clone(), st.i_b(&unit(st.n, f.free_index))?))
    }

    /// `v_k` carried to the top stage.
    pub fn v_top(&self, k: usize) -> Result<RVector> {
        let (s, v) = self.v(k)?;
        self.transport(&s, &self.top, &v)
    }

    /// Chart position in stage `t` of the free coordinate introduced for `γ`.
    pub fn free_chart_position(&self, gamma: usize, t: &StageIndex) -> Result<usize> {
        let f = self.functional(gamma)?;
        let intro = self.stage(&f.intro)?;
        let here = self.stage(t)?;
        if here.t < intro.t {
            return Err(Error::MissingStage(format!("e*_{gamma} on {t}")));
        }
        // free slots are listed first in the intro chart
        let slot = intro.free_indices.iter().position(|&j| j == f.free_index).expect("free index");
        Ok(here.dim() - intro.dim() + slot)
    }
}

fn sign_vectors(m: usize) -> impl Iterator<Item = RVector> {
    // first sign fixed: the norm is even
    (0..1usize << m.saturating_sub(1)).map(move |mask| {
        (0..m)
            .map(|i| if i > 0 && mask >> (i - 1) & 1 == 1 { -Rational::one() } else { Rational::one() })
            .collect()
    })
}

/// Builds every stage below `top` in anti-lexicographic order.
pub fn build_local_system(
    base: NormedSpace,
    ground: GroundSet,
    top: StageIndex,
    params: Params,
    q_policy: usize,
) -> Result<LocalSystem> {
    if q_policy == 0 {
        return Err(Error::InvalidParameters("q_policy must be at least 1".into()));
    }
    if top.len() > MAX_TOP_SIZE {
        return Err(Error::InvalidParameters(format!("top index has {} elements, limit {MAX_TOP_SIZE}", top.len())));
    }
    if let Some(&i) = top.elements().iter().find(|&&i| i >= ground.size) {
        return Err(Error::InvalidParameters(format!("index {i} outside the ground set")));
    }
    for d in &ground.dense_vectors {
        if d.len() != base.dim() {
            return Err(Error::DimensionMismatch { expected: base.dim(), found: d.len() });
        }
    }
    let base = Arc::new(base);
    let order = top.subsets();
    let mut stages: BTreeMap<StageIndex, StageRecord> = BTreeMap::new();
    let empty = StageIndex::empty();
    let mut j0 = BTreeMap::new();
    j0.insert(empty.clone(), RMatrix::identity(base.dim()));
    stages.insert(
        empty.clone(),
        StageRecord {
            t: empty.clone(),
            prev: None,
            space: base.clone(),
            yt_basis: Vec::new(),
            nu: RMatrix::zeros(base.dim(), 0),
            iota_inv_norm: Rational::zero(),
            nu_inv_norm: Rational::zero(),
            n: 0,
            m: 0,
            q: 0,
            // X_∅ = {0}; anything larger would have to sit inside every G_{α}
            g_basis: Vec::new(),
            free_indices: Vec::new(),
            j_maps: j0,
            pushout: None,
        },
    );
    let mut functionals: Vec<CoordinateFunctional> = Vec::new();

    for w in order.windows(2) {
        let (prev_t, t) = (&w[0], &w[1]);
        let prev = &stages[prev_t];
        let record = build_stage(&stages, prev, t, &ground, &params, q_policy)?;
        let p = record.pushout.as_ref().expect("pushout stage");
        for f in functionals.iter_mut() {
            let last = f.stagewise.values().next_back().expect("nonempty").clone();
            let ext = extend_through(p, &last)?;
            f.stagewise.insert(t.clone(), ext);
        }
        if t.len() == 1 {
            let gamma = t.elements()[0];
            let free_index = record.free_indices[0];
            let mut stagewise = BTreeMap::new();
            stagewise.insert(t.clone(), intro_functional(p, free_index)?);
            functionals.push(CoordinateFunctional { gamma, intro: t.clone(), free_index, stagewise });
        }
        stages.insert(t.clone(), record);
    }
    functionals.sort_by_key(|f| f.gamma);
    Ok(LocalSystem { ground, base, params, q_policy, top, order, stages, functionals })
}

fn build_stage(
    stages: &BTreeMap<StageIndex, StageRecord>,
    prev: &StageRecord,
    t: &StageIndex,
    ground: &GroundSet,
    params: &Params,
    q_policy: usize,
) -> Result<StageRecord> {
    let e_prev = &prev.space;
    let dp = e_prev.dim();

    // Y_t: earlier distinguished subspaces below t, plus the dense vectors in t
    let mut spanning: Vec<RVector> = Vec::new();
    for u in t.subsets() {
        if u.is_empty() || u == *t {
            continue;
        }
        let j = &prev.j_maps[&u];
        for g in &stages[&u].g_basis {
            spanning.push(j.mul_vec(g)?);
        }
    }
    let j_base = &prev.j_maps[&StageIndex::empty()];
    for &alpha in t.elements() {
        spanning.push(j_base.mul_vec(&ground.dense_vectors[alpha])?);
    }
    let y_span = span_basis(dp, &spanning);
    let m = y_span.len();
    let n = m + q_policy;

    let (yt_basis, iota_inv_norm) = if m == 0 {
        (Vec::new(), Rational::zero())
    } else {
        let ab = auerbach_basis_in(e_prev, &y_span)?;
        let mut c = Rational::zero();
        for eps in sign_vectors(m) {
            c = c.max(e_prev.norm(&ratlin::combine(dp, &ab.basis, &eps))?);
        }
        (ab.basis, c)
    };
    // ν(e_l) = (η / C) w_l
    let nu = if m == 0 {
        RMatrix::zeros(dp, 0)
    } else {
        let factor = &params.eta / &iota_inv_norm;
        let cols: Vec<RVector> = yt_basis.iter().map(|w| ratlin::scale(w, &factor)).collect();
        RMatrix::from_columns(dp, &cols)?
    };
    // ‖ν⁻¹‖ = (C / η) · max_l ‖w*_l‖, and Auerbach duals have norm one
    let nu_inv_norm = if m == 0 { Rational::zero() } else { &iota_inv_norm / &params.eta };

    let b = make_linf(n)?;
    let s_basis: Vec<RVector> = (0..m).map(|i| unit(n, i)).collect();
    let p = kisliakov_pushout(&b, &s_basis, e_prev, &nu, &params.eta)?;
    let g_basis = p.i_b.matrix.column_vectors();
    let free_indices: Vec<usize> = p.result.complement.iter().copied().filter(|&c| c < n).collect();

    let i_e = &p.i_e.matrix;
    let mut j_maps = BTreeMap::new();
    for (u, j) in &prev.j_maps {
        j_maps.insert(u.clone(), i_e.mul(j)?);
    }
    j_maps.insert(t.clone(), RMatrix::identity(p.space.dim()));

    Ok(StageRecord {
        t: t.clone(),
        prev: Some(prev.t.clone()),
        space: p.space.clone(),
        yt_basis,
        nu,
        iota_inv_norm,
        nu_inv_norm,
        n,
        m,
        q: q_policy,
        g_basis,
        free_indices,
        j_maps,
        pushout: Some(p),
    })
}

/// Chart form of a functional `g` on `B ⊕ E`, after checking it kills the kernel.
pub fn chart_functional(p: &PushoutResult, g: &[Rational]) -> Result<RVector> {
    for (i, k) in p.result.kernel_basis.iter().enumerate() {
        let value = dot(g, k);
        if !value.is_zero() {
            return Err(Error::WellDefinedness { generator: i, value });
        }
    }
    Ok(p.result.complement.iter().map(|&c| g[c].clone()).collect())
}

/// `[(b, e)] ↦ b_j` on a pushout.
pub fn intro_functional(p: &PushoutResult, j: usize) -> Result<RVector> {
    let n = p.b().dim();
    let g = ratlin::concat(&unit(n, j), &zeros(p.e().dim()));
    chart_functional(p, &g)
}

/// Extends `f` from `E` to the pushout by `[(b, e)] ↦ φ(b) + f(e)`, where
/// `φ = f ∘ u` on `S` and `φ = 0` on the coordinate directions outside the
/// pivots of `S`.
pub fn extend_through(p: &PushoutResult, f: &[Rational]) -> Result<RVector> {
    let n = p.b().dim();
    if f.len() != p.e().dim() {
        return Err(Error::DimensionMismatch { expected: p.e().dim(), found: f.len() });
    }
    let phi = if p.s_basis.is_empty() {
        zeros(n)
    } else {
        let (_, pivots) = RMatrix::from_rows_with_cols(&p.s_basis, n)?.rref();
        let mut rows = p.s_basis.clone();
        let mut rhs: RVector = p.u.matrix.column_vectors().iter().map(|us| dot(f, us)).collect();
        for c in (0..n).filter(|c| !pivots.contains(c)) {
            rows.push(unit(n, c));
            rhs.push(Rational::zero());
        }
        RMatrix::from_rows(&rows)?.solve(&rhs)?.ok_or(Error::Singular)?
    };
    chart_functional(p, &ratlin::concat(&phi, f))
}

/// Recomputes `e*_γ` along the chain from its introduction stage.
pub fn extend_functional(sys: &LocalSystem, gamma: usize) -> Result<CoordinateFunctional> {
    let intro = StageIndex::singleton(gamma);
    let st = sys.stage(&intro)?;
    let free_index = st.free_indices[0];
    let mut stagewise = BTreeMap::new();
    let mut current = intro_functional(st.pushout()?, free_index)?;
    stagewise.insert(intro.clone(), current.clone());
    for t in sys.order.iter().filter(|t| **t > intro) {
        current = extend_through(sys.stage(t)?.pushout()?, &current)?;
        stagewise.insert(t.clone(), current.clone());
    }
    Ok(CoordinateFunctional { gamma, intro, free_index, stagewise })
}

/// `(e*_{γ_1}(y), …, e*_{γ_k}(y))` for `y` in the top stage.
pub fn prefix_quotient_map(sys: &LocalSystem, k: usize, y: &[Rational]) -> Result<RVector> {
    if k > sys.functionals.len() {
        return Err(Error::InvalidParameters(format!("{k} functionals requested, {} extended", sys.functionals.len())));
    }
    sys.functionals[..k].iter().map(|f| sys.evaluate(f.gamma, &sys.top, y)).collect()
}

/// Operator norm of the prefix map into `ℓ∞^k`: the largest dual norm of
/// its coordinates.
pub fn prefix_map_norm(sys: &LocalSystem, k: usize) -> Result<Rational> {
    let space = &sys.top_stage().space;
    let mut best = Rational::zero();
    for f in sys.functionals.iter().take(k) {
        best = best.max(space.dual_norm(&f.stagewise[&sys.top])?);
    }
    Ok(best)
}

/// Norm of `Σ a_i v_i` at the top stage against the two ℓ∞ bounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceOutcome {
    pub norm: Rational,
    pub lower: Rational,
    pub upper: Rational,
    pub vector: RVector,
}

impl EquivalenceOutcome {
    pub fn lower_holds(&self) -> bool {
        self.lower <= self.norm
    }

    pub fn upper_holds(&self) -> bool {
        self.norm <= self.upper
    }
}

pub fn ell_infty_equivalence(sys: &LocalSystem, a: &[Rational]) -> Result<EquivalenceOutcome> {
    let top = sys.top_stage();
    let mut y = zeros(top.dim());
    for (k, ak) in a.iter().enumerate() {
        if !ak.is_zero() {
            ratlin::axpy(&mut y, ak, &sys.v_top(k)?);
        }
    }
    let mx = max_abs(a);
    let norm = top.space.norm(&y)?;
    Ok(EquivalenceOutcome {
        norm,
        lower: &mx / sys.params.functional_bound(),
        upper: &sys.params.lambda * &mx,
        vector: y,
    })
}

/// Lower bound (asserted) and upper bound (reported) for one coefficient vector.
pub fn ell_infty_equivalence_check(sys: &LocalSystem, a: &[Rational]) -> Result<(ClaimReport, ClaimReport)> {
    let o = ell_infty_equivalence(sys, a)?;
    let instance = format!("coefficients {:?} at stage {}", ratlin::format_vector(a), sys.top);
    let lower = ClaimReport::new("lopezabad.linf_lower", "linf-equivalence:lower", ClaimClass::Assert)
        .instance(instance.clone())
        .verdict(o.lower_holds())
        .vec("coefficients", a)
        .rat("norm", &o.norm)
        .rat("bound", &o.lower);
    let upper = ClaimReport::new("lopezabad.linf_upper", "linf-equivalence:upper", ClaimClass::Report)
        .instance(instance)
        .verdict(o.upper_holds())
        .vec("coefficients", a)
        .rat("norm", &o.norm)
        .rat("bound", &o.upper);
    Ok((lower, upper))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialSum {
    /// `y_k = Σ_{i<=k} a_i v_i` at the top stage.
    pub y: RVector,
    /// `‖y_m - y_k‖` with `m` the last index.
    pub gap: Rational,
    /// `λ · max_{k<i<=m} |a_i|`.
    pub gap_bound: Rational,
    /// `e*_{γ_j}(y_k)` for every extended `j`.
    pub coordinates: RVector,
}

pub fn partial_sums(sys: &LocalSystem, a: &[Rational]) -> Result<Vec<PartialSum>> {
    if a.len() > sys.functionals.len() {
        return Err(Error::MissingStage(format!("{} coefficients, {} singleton stages", a.len(), sys.functionals.len())));
    }
    let top = sys.top_stage();
    let mut ys = Vec::with_capacity(a.len());
    let mut y = zeros(top.dim());
    for (k, ak) in a.iter().enumerate() {
        if !ak.is_zero() {
            ratlin::axpy(&mut y, ak, &sys.v_top(k)?);
        }
        ys.push(y.clone());
    }
    let last = ys.last().cloned().unwrap_or_else(|| zeros(top.dim()));
    let all = sys.functionals.len();
    ys.into_iter()
        .enumerate()
        .map(|(k, y)| {
            let gap = top.space.norm(&ratlin::sub(&last, &y))?;
            let gap_bound = &sys.params.lambda * max_abs(&a[k + 1..]);
            let coordinates = prefix_quotient_map(sys, all, &y)?;
            Ok(PartialSum { y, gap, gap_bound, coordinates })
        })
        .collect()
}

/// The slice `K_s = {x ∈ G_s : e*_γ(x) = 0 for γ ∈ s}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelSlice {
    /// Basis in stage coordinates.
    pub basis: Vec<RVector>,
    /// The same subspace in `φ_s` coordinates (`ℓ∞^{n_s}`).
    pub phi_basis: Vec<RVector>,
    /// Basis obtained by zeroing chart coordinates instead of functionals.
    pub chart_basis: Vec<RVector>,
    pub r: usize,
    pub n: usize,
}

pub fn kernel_slice(sys: &LocalSystem, s: &StageIndex) -> Result<KernelSlice> {
    let st = sys.stage(s)?;
    let dim = st.dim();
    if s.is_empty() {
        return Ok(KernelSlice { basis: Vec::new(), phi_basis: Vec::new(), chart_basis: Vec::new(), r: 0, n: 0 });
    }
    let n = st.n;
    let g = RMatrix::from_columns(dim, &st.g_basis)?;
    // functionals pulled back to ℓ∞^{n_s} through i_B
    let mut by_functional = Vec::new();
    let mut by_chart = Vec::new();
    for &gamma in s.elements() {
        let f = &sys.functional(gamma)?.stagewise[s];
        by_functional.push(g.transpose().mul_vec(f)?);
        by_chart.push(g.row(sys.free_chart_position(gamma, s)?).to_vec());
    }
    let phi_basis = RMatrix::from_rows_with_cols(&by_functional, n)?.kernel_basis();
    let chart_phi = RMatrix::from_rows_with_cols(&by_chart, n)?.kernel_basis();
    let basis = phi_basis.iter().map(|c| g.mul_vec(c)).collect::<Result<Vec<_>>>()?;
    let chart_basis = chart_phi.iter().map(|c| g.mul_vec(c)).collect::<Result<Vec<_>>>()?;
    Ok(KernelSlice { basis, phi_basis, chart_basis, r: s.len(), n })
}

/// `(‖φ_s|K_s‖, ‖φ_s⁻¹|φ(K_s)‖)`.
pub fn kernel_slice_distortion(sys: &LocalSystem, s: &StageIndex, k: &KernelSlice) -> Result<(Rational, Rational)> {
    if s.is_empty() || k.phi_basis.is_empty() {
        return Ok((Rational::one(), Rational::one()));
    }
    let st = sys.stage(s)?;
    let mut expansion = Rational::zero();
    for i in 0..k.n {
        let f: RVector = k.phi_basis.iter().map(|c| c[i].clone()).collect();
        expansion = expansion.max(st.space.sup_on_subspace(&k.basis, &f)?.0);
    }
    let cube = make_linf(k.n)?;
    let mut contraction = Rational::zero();
    for c in section_vertices(&cube, &k.phi_basis)? {
        let x = ratlin::combine(k.n, &k.phi_basis, &c);
        contraction = contraction.max(st.space.norm(&st.i_b(&x)?)?);
    }
    Ok((expansion, contraction))
}

/// `K_s` carried into `K_t` for `s ⊆ t`.
pub fn kernel_slices_nest(sys: &LocalSystem, s: &StageIndex, t: &StageIndex) -> Result<bool> {
    let ks = kernel_slice(sys, s)?;
    let kt = kernel_slice(sys, t)?;
    let dim = sys.stage(t)?.dim();
    for b in &ks.basis {
        if !in_span(dim, &kt.basis, &sys.transport(s, t, b)?) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// For `u ⊊ t`: `j_{u,t}(G_u) ⊆ G_t`, and each `i_B^u(e_l)` is recovered
/// exactly from its image, so its `ℓ∞^{n_u}` coordinates survive transport.
pub fn transition_check(sys: &LocalSystem, u: &StageIndex, t: &StageIndex) -> Result<bool> {
    let su = sys.stage(u)?;
    let stt = sys.stage(t)?;
    let j = sys.j_map(u, t)?;
    let gu = RMatrix::from_columns(su.dim(), &su.g_basis)?;
    let jg = j.mul(&gu)?;
    for (l, col) in jg.column_vectors().iter().enumerate() {
        if u.is_subset(t) && u != t && !in_span(stt.dim(), &stt.g_basis, col) {
            return Ok(false);
        }
        match jg.solve(col)? {
            Some(x) if x == unit(su.g_basis.len(), l) => {}
            _ => return Ok(false),
        }
    }
    Ok(true)
}

/// `‖j(y)‖ = ‖y‖` for the chain step into `t` on the given vectors.
pub fn isometry_check(sys: &LocalSystem, t: &StageIndex, vectors: &[RVector]) -> Result<bool> {
    let st = sys.stage(t)?;
    let prev = st.prev.as_ref().ok_or_else(|| Error::MissingStage(format!("predecessor of {t}")))?;
    let sp = sys.stage(prev)?;
    let j = sys.j_map(prev, t)?;
    for y in vectors {
        if st.space.norm(&j.mul_vec(y)?)? != sp.space.norm(y)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Scenario file for `stage build`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageScenario {
    pub base_space: NormedSpace,
    pub ground_size: usize,
    #[serde(with = "serde_rational::vecs")]
    pub dense_vectors: Vec<RVector>,
    pub stage_set: StageIndex,
    #[serde(with = "serde_rational::scalar")]
    pub lambda: Rational,
    #[serde(with = "serde_rational::scalar")]
    pub eta: Rational,
    #[serde(default = "default_q")]
    pub q_policy: usize,
}

fn default_q() -> usize {
    1
}

impl StageScenario {
    pub fn build(&self) -> Result<LocalSystem> {
        let ground = GroundSet::new(self.ground_size, self.dense_vectors.clone())?;
        let params = Params::new(self.lambda.clone(), self.eta.clone())?;
        build_local_system(self.base_space.clone(), ground, self.stage_set.clone(), params, self.q_policy)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageDump {
    pub t: StageIndex,
    pub prev: Option<StageIndex>,
    pub space: NormedSpace,
    #[serde(with = "serde_rational::vecs")]
    pub yt_basis: Vec<RVector>,
    #[serde(with = "serde_rational::vecs")]
    pub nu_columns: Vec<RVector>,
    #[serde(with = "serde_rational::scalar")]
    pub iota_inv_norm: Rational,
    #[serde(with = "serde_rational::scalar")]
    pub nu_inv_norm: Rational,
    pub n: usize,
    pub m: usize,
    pub q: usize,
    #[serde(with = "serde_rational::vecs")]
    pub g_basis: Vec<RVector>,
    pub free_indices: Vec<usize>,
    /// `j_{u,t}` columns, keyed by the label of `u`.
    pub j_maps: BTreeMap<String, Vec<Vec<String>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalDump {
    pub gamma: usize,
    pub intro: StageIndex,
    pub free_index: usize,
    pub stagewise: BTreeMap<String, Vec<String>>,
    #[serde(with = "serde_rational::vec")]
    pub dual_norms: RVector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemDump {
    #[serde(with = "serde_rational::scalar")]
    pub lambda: Rational,
    #[serde(with = "serde_rational::scalar")]
    pub eta: Rational,
    pub top: StageIndex,
    pub stages: Vec<StageDump>,
    pub functionals: Vec<FunctionalDump>,
}

pub fn stage_dump(sys: &LocalSystem) -> Result<SystemDump> {
    let mut stages = Vec::new();
    for t in &sys.order {
        let st = sys.stage(t)?;
        let j_maps = st
            .j_maps
            .iter()
            .map(|(u, j)| (u.label(), j.column_vectors().iter().map(|c| ratlin::format_vector(c)).collect()))
            .collect();
        stages.push(StageDump {
            t: t.clone(),
            prev: st.prev.clone(),
            space: (*st.space).clone(),
            yt_basis: st.yt_basis.clone(),
            nu_columns: st.nu.column_vectors(),
            iota_inv_norm: st.iota_inv_norm.clone(),
            nu_inv_norm: st.nu_inv_norm.clone(),
            n: st.n,
            m: st.m,
            q: st.q,
            g_basis: st.g_basis.clone(),
            free_indices: st.free_indices.clone(),
            j_maps,
        });
    }
    let mut functionals = Vec::new();
    for f in &sys.functionals {
        let mut dual_norms = Vec::new();
        let mut stagewise = BTreeMap::new();
        for (t, w) in &f.stagewise {
            dual_norms.push(sys.stage(t)?.space.dual_norm(w)?);
            stagewise.insert(t.label(), ratlin::format_vector(w));
        }
        functionals.push(FunctionalDump {
            gamma: f.gamma,
            intro: f.intro.clone(),
            free_index: f.free_index,
            stagewise,
            dual_norms,
        });
    }
    Ok(SystemDump { lambda: sys.params.lambda.clone(), eta: sys.params.eta.clone(), top: sys.top.clone(), stages, functionals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratlin::{int, rat, vector};

    fn idx(v: &[usize]) -> StageIndex {
        StageIndex::new(v.to_vec())
    }

    fn params() -> Params {
        Params::new(rat(6, 5), rat(4, 5)).unwrap()
    }

    fn small_system(top: &[usize]) -> LocalSystem {
        let ground = GroundSet::new(3, vec![vector(&[1]), vector(&[1]), vector(&[-1])]).unwrap();
        build_local_system(make_linf(1).unwrap(), ground, idx(top), params(), 1).unwrap()
    }

    #[test]
    fn antilex_examples() {
        assert_eq!(antilex_compare(&idx(&[]), &idx(&[1])), Ordering::Less);
        assert_eq!(antilex_compare(&idx(&[2]), &idx(&[1, 2])), Ordering::Less);
        assert_eq!(antilex_compare(&idx(&[1, 2]), &idx(&[3])), Ordering::Less);
    }

    #[test]
    fn predecessor_examples() {
        assert_eq!(predecessor(&idx(&[1])).unwrap(), idx(&[]));
        assert_eq!(predecessor(&idx(&[1, 3])).unwrap(), idx(&[3]));
        assert_eq!(predecessor(&idx(&[1, 2, 3])).unwrap(), idx(&[2, 3]));
        assert!(predecessor(&idx(&[])).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Params::new(int(1), rat(1, 2)).is_err());
        assert!(Params::new(rat(3, 2), int(1)).is_err());
        assert!(Params::new(rat(3, 2), rat(2, 3)).is_err());
        assert!(Params::new(rat(3, 2), int(0)).is_err());
        assert!(StageIndex::try_from(vec![2, 1]).is_err());
    }

    #[test]
    fn empty_top_is_base() {
        let sys = small_system(&[]);
        assert_eq!(sys.stages.len(), 1);
        assert_eq!(*sys.top_stage().space, make_linf(1).unwrap());
    }

    #[test]
    fn singleton_stage() {
        let sys = small_system(&[0]);
        let st = sys.stage(&idx(&[0])).unwrap();
        assert_eq!((st.m, st.n, st.g_basis.len()), (1, 2, 2));
        assert_eq!(st.free_indices, vec![1]);
        let (v_stage, v) = sys.v(0).unwrap();
        assert_eq!(v_stage, idx(&[0]));
        assert_eq!(sys.evaluate(0, &v_stage, &v).unwrap(), int(1));
        let (contraction, _) = st.phi_distortion().unwrap();
        assert!(contraction <= int(1));
    }

    #[test]
    fn two_point_system() {
        let sys = small_system(&[0, 1]);
        assert_eq!(sys.order, vec![idx(&[]), idx(&[0]), idx(&[1]), idx(&[0, 1])]);
        for u in &sys.order {
            for t in sys.order.iter().filter(|t| *t >= u) {
                assert!(transition_check(&sys, u, t).unwrap(), "{u} -> {t}");
            }
        }
        // biorthogonality at the top
        for i in 0..2 {
            for l in 0..2 {
                let v = sys.v_top(l).unwrap();
                let expect = if i == l { int(1) } else { int(0) };
                assert_eq!(sys.evaluate(i, &sys.top, &v).unwrap(), expect);
            }
        }
        // recomputed extension agrees with the stored one
        assert_eq!(extend_functional(&sys, 0).unwrap(), sys.functionals[0]);
    }

    #[test]
    fn chart_positions_match_functionals() {
        let sys = small_system(&[0, 1]);
        for f in &sys.functionals {
            for (t, w) in &f.stagewise {
                let pos = sys.free_chart_position(f.gamma, t).unwrap();
                assert_eq!(*w, unit(sys.stage(t).unwrap().dim(), pos));
            }
        }
    }

    #[test]
    fn kernel_slices() {
        let sys = small_system(&[0, 1]);
        let k0 = kernel_slice(&sys, &idx(&[0])).unwrap();
        assert_eq!(k0.basis.len(), k0.n - 1);
        let k01 = kernel_slice(&sys, &idx(&[0, 1])).unwrap();
        assert_eq!(k01.basis.len(), k01.n - 2);
        let dim = sys.top_stage().dim();
        assert!(ratlin::same_span(dim, &k01.basis, &k01.chart_basis));
        assert!(kernel_slices_nest(&sys, &idx(&[0]), &idx(&[0, 1])).unwrap());
        let e = kernel_slice(&sys, &idx(&[])).unwrap();
        assert_eq!(e.r, 0);
    }

    #[test]
    fn prefix_map_examples() {
        let sys = small_system(&[0, 1]);
        let y = sys.transport(&idx(&[]), &sys.top, &vector(&[1])).unwrap();
        assert_eq!(prefix_quotient_map(&sys, 2, &y).unwrap(), vector(&[0, 0]));
        let v1 = sys.v_top(0).unwrap();
        assert_eq!(prefix_quotient_map(&sys, 2, &v1).unwrap(), vector(&[1, 0]));
        assert!(prefix_map_norm(&sys, 2).unwrap() <= sys.params.functional_bound());
        assert!(prefix_quotient_map(&sys, 3, &v1).is_err());
    }

    #[test]
    fn partial_sum_examples() {
        let sys = small_system(&[0, 1]);
        let ps = partial_sums(&sys, &[int(1)]).unwrap();
        assert_eq!(ps[0].coordinates[0], int(1));
        let ps = partial_sums(&sys, &[int(0), int(0)]).unwrap();
        assert!(ps.iter().all(|p| ratlin::is_zero_vec(&p.y) && p.gap.is_zero()));
    }

    #[test]
    fn dump_round_trip() {
        let sys = small_system(&[0, 1]);
        let dump = stage_dump(&sys).unwrap();
        let text = serde_json::to_string(&dump).unwrap();
        let back: SystemDump = serde_json::from_str(&text).unwrap();
        assert_eq!(back, dump);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn antilex_is_a_well_order_extending_inclusion(n in 1usize..=5) {
                let all = StageIndex::range(n).subsets();
                for w in all.windows(2) {
                    prop_assert_eq!(antilex_compare(&w[0], &w[1]), Ordering::Less);
                }
                for t in &all {
                    for u in &all {
                        prop_assert_eq!(antilex_compare(t, u), antilex_compare(u, t).reverse());
                        if t.is_subset(u) && t != u {
                            prop_assert_eq!(antilex_compare(t, u), Ordering::Less);
                        }
                    }
                    if !t.is_empty() {
                        let p = predecessor(t).unwrap();
                        prop_assert!(p.is_subset(t) && &p != t);
                        let between = t.subsets().into_iter().filter(|u| antilex_compare(&p, u).is_lt() && antilex_compare(u, t).is_lt()).count();
                        prop_assert_eq!(between, 0);
                    }
                }
            }
        }
    }
}
