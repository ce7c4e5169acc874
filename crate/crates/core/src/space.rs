//! Polyhedral normed spaces.
//!
//! A [`NormedSpace`] is `R^dim` whose unit ball is the convex hull of a
//! symmetric vertex list. Norms, quotient norms and suprema of functionals
//! over subspace sections are all exact linear programs; dual norms and
//! operator norms are maxima over ball vertices.

use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, lp_maximize, LinearProgram, LpOutcome};
use crate::ratlin::{self, dot, independent, neg, rank_of, serde_rational, unit, zeros, RMatrix, RVector, Rational};

pub const DEFAULT_VERTEX_CAP: usize = 4096;
pub const VERTEX_CAP_ENV: &str = "PUSHOUTFORGE_VERTEX_CAP";

/// Maximum number of ball vertices a constructed space may carry.
const ACTIVE_TOLERANCE: f64 = 1e-6;

/// `max f·c : W c = Σ λ_i v_i, Σ λ_i <= 1, λ >= 0` over the given vertices.
fn section_program(dim: usize, vertices: &[&RVector], w: &[RVector], f: &[Rational]) -> Result<Option<(Rational, RVector)>> {
    let nv = vertices.len();
    let k = w.len();
    let mut obj = zeros(nv);
    obj.extend(f.iter().cloned());
    let mut lp = LinearProgram::new(obj);
    for r in 0..dim {
        let mut row: RVector = vertices.iter().map(|v| v[r].clone()).collect();
        row.extend(w.iter().map(|wv| -&wv[r]));
        lp = lp.eq(row, Rational::zero());
    }
    let mut mass = vec![Rational::one(); nv];
    mass.extend(zeros(k));
    lp = lp.le(mass, Rational::one());
    for i in 0..nv {
        lp = lp.nonneg(i);
    }
    Ok(match lp_maximize(&lp)? {
        LpOutcome::Optimal { value, point } => Some((value, point[nv..].to_vec())),
        _ => None,
    })
}

fn to_f64(v: &[Rational]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
}

pub fn vertex_cap() -> usize {
    std::env::var(VERTEX_CAP_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(DEFAULT_VERTEX_CAP)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SpaceJson", into = "SpaceJson")]
pub struct NormedSpace {
    dim: usize,
    vertices: Vec<RVector>,
    facets: Option<Vec<RVector>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceJson {
    pub dim: usize,
    #[serde(with = "serde_rational::vecs")]
    pub vertices: Vec<RVector>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "serde_rational::option_vecs")]
    pub facets: Option<Vec<RVector>>,
}

impl TryFrom<SpaceJson> for NormedSpace {
    type Error = Error;
    fn try_from(j: SpaceJson) -> Result<Self> {
        let s = NormedSpace::new(j.dim, j.vertices)?;
        match j.facets {
            Some(f) => s.with_facets(f),
            None => Ok(s),
        }
    }
}

impl From<NormedSpace> for SpaceJson {
    fn from(s: NormedSpace) -> Self {
        SpaceJson { dim: s.dim, vertices: s.vertices, facets: s.facets }
    }
}

impl NormedSpace {
    /// Validates a symmetric, spanning vertex list. Zero vectors and
    /// duplicates are dropped.
    pub fn new(dim: usize, vertices: Vec<RVector>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut kept = Vec::with_capacity(vertices.len());
        for v in vertices {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
            }
            if ratlin::is_zero_vec(&v) || !seen.insert(v.clone()) {
                continue;
            }
            kept.push(v);
        }
        if let Some(v) = kept.iter().find(|v| !seen.contains(&neg(v))) {
            return Err(Error::NotSymmetric(format!("{:?} has no opposite", ratlin::format_vector(v))));
        }
        let cap = vertex_cap();
        if kept.len() > cap {
            return Err(Error::VertexCapExceeded { count: kept.len(), cap });
        }
        let rank = rank_of(dim, &kept);
        if rank < dim {
            return Err(Error::DegenerateVertexSet { rank, dim });
        }
        Ok(NormedSpace { dim, vertices: kept, facets: None })
    }

    /// Unit ball = conv(±generators).
    pub fn symmetric(dim: usize, generators: Vec<RVector>) -> Result<Self> {
        let mut all = Vec::with_capacity(2 * generators.len());
        for g in generators {
            let n = neg(&g);
            all.push(g);
            all.push(n);
        }
        Self::new(dim, all)
    }

    /// Attaches an H-representation after checking it against the vertices.
    pub fn with_facets(mut self, facets: Vec<RVector>) -> Result<Self> {
        for f in &facets {
            if f.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, found: f.len() });
            }
            let mut tight = 0;
            for v in &self.vertices {
                let val = dot(f, v);
                if val > Rational::one() {
                    return Err(Error::InvalidParameters("facet violated by a vertex".into()));
                }
                if val.is_one() {
                    tight += 1;
                }
            }
            if tight < self.dim {
                return Err(Error::InvalidParameters("facet tight at fewer than dim vertices".into()));
            }
        }
        self.facets = Some(facets);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[RVector] {
        &self.vertices
    }

    pub fn facets(&self) -> Option<&[RVector]> {
        self.facets.as_deref()
    }

    fn check_dim(&self, x: &[Rational]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        Ok(())
    }

    /// Gauge of the unit ball at `x`.
    pub fn norm(&self, x: &[Rational]) -> Result<Rational> {
        self.check_dim(x)?;
        if ratlin::is_zero_vec(x) {
            return Ok(Rational::zero());
        }
        if let Some(v) = self.certified_norm(x)? {
            return Ok(v);
        }
        Ok(self.norm_with_weights(x)?.0)
    }

    /// Exact norm from a floating-point guess of the supporting facet: the
    /// dual program restricted to nearly active vertices is solved exactly,
    /// and its optimum counts only if it satisfies every vertex constraint.
    fn certified_norm(&self, x: &[Rational]) -> Result<Option<Rational>> {
        let fv: Vec<Vec<f64>> = self.vertices.iter().map(|v| to_f64(v)).collect();
        let Some(y) = lp::approx_gauge_dual(&fv, &to_f64(x)) else {
            return Ok(None);
        };
        let mut restricted = LinearProgram::new(x.to_vec());
        for (v, f) in self.vertices.iter().zip(&fv) {
            let s: f64 = f.iter().zip(&y).map(|(a, b)| a * b).sum();
            if s >= 1.0 - ACTIVE_TOLERANCE {
                restricted = restricted.le(v.clone(), Rational::one());
            }
        }
        let LpOutcome::Optimal { value, point } = lp_maximize(&restricted)? else {
            return Ok(None);
        };
        let one = Rational::one();
        Ok(self.vertices.iter().all(|v| dot(&point, v) <= one).then_some(value))
    }

    /// Norm together with convex weights on the vertices realising it.
    pub fn norm_with_weights(&self, x: &[Rational]) -> Result<(Rational, RVector)> {
        self.check_dim(x)?;
        let nv = self.vertices.len();
        if ratlin::is_zero_vec(x) {
            return Ok((Rational::zero(), zeros(nv)));
        }
        let mut lp = LinearProgram::new(vec![-Rational::one(); nv]);
        for r in 0..self.dim {
            let row: RVector = self.vertices.iter().map(|v| v[r].clone()).collect();
            lp = lp.eq(row, x[r].clone());
        }
        for i in 0..nv {
            lp = lp.nonneg(i);
        }
        match lp_maximize(&lp)? {
            LpOutcome::Optimal { value, point } => Ok((-value, point)),
            other => Err(Error::Lp(format!("gauge program returned {other:?}"))),
        }
    }

    /// `max_v f·v` over ball vertices.
    pub fn dual_norm(&self, f: &[Rational]) -> Result<Rational> {
        self.check_dim(f)?;
        Ok(self.vertices.iter().map(|v| dot(f, v)).max().unwrap_or_else(Rational::zero).max(Rational::zero()))
    }

    /// Supremum of `f·c` over `{c : W c in ball}`, with a maximiser `c`.
    pub fn sup_on_subspace(&self, w: &[RVector], f: &[Rational]) -> Result<(Rational, RVector)> {
        let k = w.len();
        if f.len() != k {
            return Err(Error::DimensionMismatch { expected: k, found: f.len() });
        }
        for v in w {
            self.check_dim(v)?;
        }
        if let Some(found) = self.certified_sup(w, f)? {
            return Ok(found);
        }
        let all: Vec<&RVector> = self.vertices.iter().collect();
        section_program(self.dim, &all, w, f)?.ok_or_else(|| Error::Lp("section program has no optimum".into()))
    }

    /// Same certificate scheme as the norm: with `y` and `μ` solving
    /// `min μ : Wᵀy = f, y·v <= μ` over nearly active vertices, the value is
    /// exact once `y·v <= μ` holds for every vertex.
    fn certified_sup(&self, w: &[RVector], f: &[Rational]) -> Result<Option<(Rational, RVector)>> {
        let (d, k) = (self.dim, w.len());
        let fv: Vec<Vec<f64>> = self.vertices.iter().map(|v| to_f64(v)).collect();
        let fw: Vec<Vec<f64>> = w.iter().map(|v| to_f64(v)).collect();
        let ff = to_f64(f);
        // columns of [V, -W, W, 0; 1, 0, 0, 1] for (λ, c⁺, c⁻, slack)
        let mut columns: Vec<Vec<f64>> = Vec::with_capacity(fv.len() + 2 * k + 1);
        let mut cost = Vec::with_capacity(columns.capacity());
        for v in &fv {
            let mut c = v.clone();
            c.push(1.0);
            columns.push(c);
            cost.push(0.0);
        }
        for sign in [-1.0, 1.0] {
            for (wl, fl) in fw.iter().zip(&ff) {
                let mut c: Vec<f64> = wl.iter().map(|x| sign * x).collect();
                c.push(0.0);
                columns.push(c);
                cost.push(-sign * fl);
            }
        }
        let mut slack = vec![0.0; d];
        slack.push(1.0);
        columns.push(slack);
        cost.push(0.0);
        let mut rhs = vec![0.0; d];
        rhs.push(1.0);
        let Some(u) = lp::approx_dual(&columns, &rhs, &cost) else {
            return Ok(None);
        };
        let mu = u[d];
        let tolerance = ACTIVE_TOLERANCE * mu.abs().max(1.0);

        let mut obj = zeros(d);
        obj.push(-Rational::one());
        let mut restricted = LinearProgram::new(obj).nonneg(d);
        for (l, fl) in f.iter().enumerate() {
            let mut row: RVector = (0..d).map(|r| w[l][r].clone()).collect();
            row.push(Rational::zero());
            restricted = restricted.eq(row, fl.clone());
        }
        for (v, fl) in self.vertices.iter().zip(&fv) {
            let s: f64 = -fl.iter().zip(&u[..d]).map(|(a, b)| a * b).sum::<f64>();
            if s >= mu - tolerance {
                let mut row = v.clone();
                row.push(-Rational::one());
                restricted = restricted.le(row, Rational::zero());
            }
        }
        let LpOutcome::Optimal { value, point } = lp_maximize(&restricted)? else {
            return Ok(None);
        };
        let mu = -value;
        let y = &point[..d];
        let mut tight = Vec::new();
        for v in &self.vertices {
            let s = dot(y, v);
            if s > mu {
                return Ok(None);
            }
            if s == mu {
                tight.push(v);
            }
        }
        // complementary slackness puts a maximiser on the tight vertices
        Ok(section_program(d, &tight, w, f)?.filter(|(value, _)| *value == mu))
    }

    /// Drops vertices lying in the hull of the remaining ones.
    pub fn prune_redundant(&self) -> Result<NormedSpace> {
        let mut kept = self.vertices.clone();
        let mut i = 0;
        while i < kept.len() {
            let v = kept[i].clone();
            let nv = neg(&v);
            let others: Vec<RVector> = kept.iter().filter(|u| **u != v && **u != nv).cloned().collect();
            if rank_of(self.dim, &others) == self.dim {
                let hull = NormedSpace { dim: self.dim, vertices: others.clone(), facets: None };
                if hull.norm(&v)? <= Rational::one() {
                    kept = others;
                    continue;
                }
            }
            i += 1;
        }
        Ok(NormedSpace { dim: self.dim, vertices: kept, facets: self.facets.clone() })
    }
}

/// `ℓ∞^n`: all sign vectors as vertices, `±e_i` as facets.
pub fn make_linf(n: usize) -> Result<NormedSpace> {
    if n == 0 {
        return Err(Error::InvalidParameters("ℓ∞^0 is not a valid space".into()));
    }
    let cap = vertex_cap();
    if n >= usize::BITS as usize - 1 || (1usize << n) > cap {
        return Err(Error::VertexCapExceeded { count: 1usize.checked_shl(n as u32).unwrap_or(usize::MAX), cap });
    }
    let vertices: Vec<RVector> = (0..1usize << n)
        .map(|mask| (0..n).map(|i| if mask >> i & 1 == 1 { -Rational::one() } else { Rational::one() }).collect())
        .collect();
    let facets: Vec<RVector> = (0..n).flat_map(|i| [unit(n, i), neg(&unit(n, i))]).collect();
    Ok(NormedSpace { dim: n, vertices, facets: Some(facets) })
}

/// `ℓ1^n`: vertices `±e_i`.
pub fn make_l1(n: usize) -> Result<NormedSpace> {
    NormedSpace::symmetric(n, (0..n).map(|i| unit(n, i)).collect())
}

/// Symmetric polytope spanned by `dim + extra` random small-rational
/// generators, redrawn until they span.
pub fn random_space<R: rand::Rng + ?Sized>(rng: &mut R, dim: usize, extra: usize, bound: i64) -> Result<NormedSpace> {
    loop {
        let gens: Vec<RVector> = (0..dim + extra).map(|_| ratlin::small_vector(rng, dim, bound)).collect();
        if rank_of(dim, &gens) == dim {
            return NormedSpace::symmetric(dim, gens);
        }
    }
}

/// `k` random independent vectors in dimension `dim` (`k <= dim`).
pub fn random_independent<R: rand::Rng + ?Sized>(rng: &mut R, dim: usize, k: usize, bound: i64) -> Vec<RVector> {
    loop {
        let v: Vec<RVector> = (0..k).map(|_| ratlin::small_vector(rng, dim, bound)).collect();
        if independent(dim, &v) {
            return v;
        }
    }
}

/// ℓ1-direct sum: the ball is the hull of both embedded balls.
pub fn direct_sum_l1(a: &NormedSpace, b: &NormedSpace) -> Result<NormedSpace> {
    let dim = a.dim + b.dim;
    let count = a.vertices.len() + b.vertices.len();
    let cap = vertex_cap();
    if count > cap {
        return Err(Error::VertexCapExceeded { count, cap });
    }
    let mut vertices = Vec::with_capacity(count);
    for v in &a.vertices {
        vertices.push(ratlin::concat(v, &zeros(b.dim)));
    }
    for w in &b.vertices {
        vertices.push(ratlin::concat(&zeros(a.dim), w));
    }
    Ok(NormedSpace { dim, vertices, facets: None })
}

/// Vertices of `{x in R^dim : n·x <= 1 for every normal n}`, assumed bounded.
///
/// Enumerates `dim`-subsets of constraints with independence pruning.
pub fn vertices_of_h_polytope(dim: usize, normals: &[RVector]) -> Vec<RVector> {
    let mut uniq: Vec<RVector> = Vec::new();
    let mut seen = HashSet::new();
    for n in normals {
        if !ratlin::is_zero_vec(n) && seen.insert(n.clone()) {
            uniq.push(n.clone());
        }
    }
    if dim == 0 {
        return vec![Vec::new()];
    }
    let mut found = BTreeSet::new();
    let mut chosen = Vec::with_capacity(dim);
    let mut echelon: Vec<(usize, RVector)> = Vec::with_capacity(dim);
    enumerate_bases(dim, &uniq, 0, &mut chosen, &mut echelon, &mut found);
    found.into_iter().collect()
}

fn enumerate_bases(
    dim: usize,
    normals: &[RVector],
    start: usize,
    chosen: &mut Vec<usize>,
    echelon: &mut Vec<(usize, RVector)>,
    found: &mut BTreeSet<RVector>,
) {
    if chosen.len() == dim {
        let rows: Vec<RVector> = chosen.iter().map(|&i| normals[i].clone()).collect();
        let a = RMatrix::from_rows(&rows).expect("square system");
        let Ok(Some(x)) = a.solve(&vec![Rational::one(); dim]) else {
            return;
        };
        if normals.iter().all(|n| dot(n, &x) <= Rational::one()) {
            found.insert(x);
        }
        return;
    }
    let need = dim - chosen.len();
    for i in start..normals.len() {
        if normals.len() - i < need {
            break;
        }
        let Some(reduced) = reduce_against(echelon, &normals[i]) else {
            continue;
        };
        chosen.push(i);
        echelon.push(reduced);
        enumerate_bases(dim, normals, i + 1, chosen, echelon, found);
        echelon.pop();
        chosen.pop();
    }
}

/// Reduces `v` by an echelon family; `None` if it becomes zero.
fn reduce_against(echelon: &[(usize, RVector)], v: &[Rational]) -> Option<(usize, RVector)> {
    let mut r = v.to_vec();
    for (p, row) in echelon {
        if !r[*p].is_zero() {
            let f = r[*p].clone() / &row[*p];
            ratlin::axpy(&mut r, &-f, row);
        }
    }
    let p = r.iter().position(|x| !x.is_zero())?;
    Some((p, r))
}

/// Complete irredundant H-representation of the ball (facet normals `f`
/// with ball = `{x : f·x <= 1}`).
pub fn facet_enumeration(s: &NormedSpace) -> Result<Vec<RVector>> {
    let rank = rank_of(s.dim, &s.vertices);
    if rank < s.dim {
        return Err(Error::DegenerateVertexSet { rank, dim: s.dim });
    }
    if s.dim == 0 {
        return Ok(Vec::new());
    }
    Ok(vertices_of_h_polytope(s.dim, &s.vertices))
}

/// Vertices of `ball ∩ span(W)` in `W`-coordinates.
pub fn section_vertices(s: &NormedSpace, w: &[RVector]) -> Result<Vec<RVector>> {
    for v in w {
        s.check_dim(v)?;
    }
    if !independent(s.dim, w) {
        return Err(Error::DependentVectors);
    }
    if w.is_empty() {
        return Ok(Vec::new());
    }
    let computed;
    let facets = match s.facets() {
        Some(f) => f,
        None => {
            computed = facet_enumeration(s)?;
            &computed
        }
    };
    let restricted: Vec<RVector> = facets.iter().map(|f| w.iter().map(|wv| dot(f, wv)).collect()).collect();
    Ok(vertices_of_h_polytope(w.len(), &restricted))
}

/// Quotient of a polyhedral space by the span of `kernel_basis`.
///
/// Coordinates on the quotient are the ambient coordinates outside the
/// pivot columns of `rref(kernel_basis)`; `projection` maps an ambient
/// vector to those coordinates and is zero exactly on the kernel.
#[derive(Clone, Debug)]
pub struct QuotientSpace {
    pub ambient: Arc<NormedSpace>,
    pub kernel_basis: Vec<RVector>,
    pub pivots: Vec<usize>,
    pub complement: Vec<usize>,
    pub projection: RMatrix,
}

pub fn quotient(s: Arc<NormedSpace>, kernel: Vec<RVector>) -> Result<QuotientSpace> {
    let d = s.dim;
    for v in &kernel {
        s.check_dim(v)?;
    }
    let kernel: Vec<RVector> = kernel.into_iter().filter(|v| !ratlin::is_zero_vec(v)).collect();
    if !independent(d, &kernel) {
        return Err(Error::DependentVectors);
    }
    let (r, pivots) = RMatrix::from_rows_with_cols(&kernel, d)?.rref();
    let complement: Vec<usize> = (0..d).filter(|c| !pivots.contains(c)).collect();
    let mut projection = RMatrix::zeros(complement.len(), d);
    for (j, &c) in complement.iter().enumerate() {
        projection.set(j, c, Rational::one());
        for (i, &p) in pivots.iter().enumerate() {
            let v = -r.get(i, c).clone();
            projection.set(j, p, v);
        }
    }
    Ok(QuotientSpace { ambient: s, kernel_basis: kernel, pivots, complement, projection })
}

impl QuotientSpace {
    pub fn dim(&self) -> usize {
        self.complement.len()
    }

    /// Quotient coordinates of the class of `x`.
    pub fn coords(&self, x: &[Rational]) -> Result<RVector> {
        self.projection.mul_vec(x)
    }

    /// The representative supported on the complement coordinates.
    pub fn lift(&self, c: &[Rational]) -> RVector {
        let mut x = zeros(self.ambient.dim);
        for (j, &col) in self.complement.iter().enumerate() {
            x[col] = c[j].clone();
        }
        x
    }

    /// `min_c ‖x + N c‖` and the representative attaining it.
    pub fn quotient_norm(&self, x: &[Rational]) -> Result<(Rational, RVector)> {
        let s = &self.ambient;
        s.check_dim(x)?;
        let nv = s.vertices.len();
        let k = self.kernel_basis.len();
        let mut obj = vec![-Rational::one(); nv];
        obj.extend(zeros(k));
        let mut lp = LinearProgram::new(obj);
        for r in 0..s.dim {
            let mut row: RVector = s.vertices.iter().map(|v| v[r].clone()).collect();
            row.extend(self.kernel_basis.iter().map(|n| -&n[r]));
            lp = lp.eq(row, x[r].clone());
        }
        for i in 0..nv {
            lp = lp.nonneg(i);
        }
        match lp_maximize(&lp)? {
            LpOutcome::Optimal { value, point } => {
                let mut rep = x.to_vec();
                for (j, n) in self.kernel_basis.iter().enumerate() {
                    ratlin::axpy(&mut rep, &point[nv + j], n);
                }
                Ok((-value, rep))
            }
            other => Err(Error::Lp(format!("quotient program returned {other:?}"))),
        }
    }

    /// The quotient as a normed space on its own coordinates. Projected
    /// vertices are kept even when redundant.
    pub fn to_space(&self) -> Result<NormedSpace> {
        let mut verts = Vec::with_capacity(self.ambient.vertices.len());
        for v in &self.ambient.vertices {
            verts.push(self.projection.mul_vec(v)?);
        }
        NormedSpace::new(self.dim(), verts)
    }
}

/// Exact matrix between two polyhedral spaces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MapJson", into = "MapJson")]
pub struct LinearMap {
    pub domain: Arc<NormedSpace>,
    pub codomain: Arc<NormedSpace>,
    pub matrix: RMatrix,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapJson {
    pub domain: NormedSpace,
    pub codomain: NormedSpace,
    #[serde(with = "serde_rational::matrix")]
    pub matrix: RMatrix,
}

impl TryFrom<MapJson> for LinearMap {
    type Error = Error;
    fn try_from(j: MapJson) -> Result<Self> {
        let m = if j.matrix.rows() == 0 { RMatrix::zeros(j.codomain.dim(), j.domain.dim()) } else { j.matrix };
        LinearMap::new(Arc::new(j.domain), Arc::new(j.codomain), m)
    }
}

impl From<LinearMap> for MapJson {
    fn from(m: LinearMap) -> Self {
        MapJson { domain: (*m.domain).clone(), codomain: (*m.codomain).clone(), matrix: m.matrix }
    }
}

impl LinearMap {
    pub fn new(domain: Arc<NormedSpace>, codomain: Arc<NormedSpace>, matrix: RMatrix) -> Result<Self> {
        if matrix.rows() != codomain.dim {
            return Err(Error::DimensionMismatch { expected: codomain.dim, found: matrix.rows() });
        }
        if matrix.cols() != domain.dim {
            return Err(Error::DimensionMismatch { expected: domain.dim, found: matrix.cols() });
        }
        Ok(LinearMap { domain, codomain, matrix })
    }

    pub fn apply(&self, x: &[Rational]) -> Result<RVector> {
        self.matrix.mul_vec(x)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &LinearMap) -> Result<LinearMap> {
        LinearMap::new(inner.domain.clone(), self.codomain.clone(), self.matrix.mul(&inner.matrix)?)
    }

    pub fn operator_norm(&self) -> Result<Rational> {
        operator_norm(self)
    }
}

fn leading_positive(v: &[Rational]) -> bool {
    v.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_positive())
}

/// `max_v ‖T v‖` over domain ball vertices (one of each ± pair).
pub fn operator_norm(t: &LinearMap) -> Result<Rational> {
    let mut best = Rational::zero();
    for v in t.domain.vertices.iter().filter(|v| leading_positive(v)) {
        let n = t.codomain.norm(&t.apply(v)?)?;
        if n > best {
            best = n;
        }
    }
    Ok(best)
}

/// `(‖T‖, ‖T⁻¹‖)` for an invertible map.
pub fn distortion(t: &LinearMap) -> Result<(Rational, Rational)> {
    let inv = t.matrix.inverse()?;
    let back = LinearMap::new(t.codomain.clone(), t.domain.clone(), inv)?;
    Ok((operator_norm(t)?, operator_norm(&back)?))
}

/// An Auerbach basis of a subspace `span(W)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuerbachBasis {
    /// Basis vectors in ambient coordinates, each of norm one.
    pub basis: Vec<RVector>,
    /// The same vectors in `W`-coordinates.
    pub coords: Vec<RVector>,
    /// Biorthogonal functionals in `W`-coordinates, each of dual norm one.
    pub duals: Vec<RVector>,
}

/// Auerbach basis of the whole space; duals are in ambient coordinates.
pub fn auerbach_basis(s: &NormedSpace) -> Result<(Vec<RVector>, Vec<RVector>)> {
    if s.dim == 0 {
        return Err(Error::InvalidParameters("Auerbach basis of a zero-dimensional space".into()));
    }
    let w: Vec<RVector> = (0..s.dim).map(|i| unit(s.dim, i)).collect();
    let a = auerbach_basis_in(s, &w)?;
    Ok((a.basis, a.duals))
}

/// Auerbach basis of `span(W)` by determinant ascent.
///
/// Starting from the normalised `W`, any basis vector whose biorthogonal
/// functional exceeds one somewhere on the section ball is replaced by the
/// maximiser. Each swap multiplies `|det|` by that excess, so the loop ends,
/// and at the end every functional has norm exactly one.
pub fn auerbach_basis_in(s: &NormedSpace, w: &[RVector]) -> Result<AuerbachBasis> {
    let k = w.len();
    for v in w {
        s.check_dim(v)?;
    }
    if !independent(s.dim, w) {
        return Err(Error::DependentVectors);
    }
    let mut coords: Vec<RVector> = Vec::with_capacity(k);
    for (l, wv) in w.iter().enumerate() {
        let n = s.norm(wv)?;
        let mut c = zeros(k);
        c[l] = Rational::one() / n;
        coords.push(c);
    }
    loop {
        let duals = biorthogonal(k, &coords)?;
        let mut swapped = false;
        for l in 0..k {
            let (value, maximiser) = s.sup_on_subspace(w, &duals[l])?;
            if value > Rational::one() {
                coords[l] = maximiser;
                swapped = true;
                break;
            }
        }
        if !swapped {
            let basis = coords.iter().map(|c| ratlin::combine(s.dim, w, c)).collect();
            return Ok(AuerbachBasis { basis, coords, duals });
        }
    }
}

/// Rows of the inverse of the matrix whose columns are `coords`.
fn biorthogonal(k: usize, coords: &[RVector]) -> Result<Vec<RVector>> {
    let m = RMatrix::from_columns(k, coords)?;
    Ok(m.inverse()?.row_vectors())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratlin::{int, rat, vector};

    fn l1_2() -> NormedSpace {
        make_l1(2).unwrap()
    }

    #[test]
    fn linf_shapes() {
        let s = make_linf(1).unwrap();
        assert_eq!(s.vertices().len(), 2);
        let s = make_linf(2).unwrap();
        assert_eq!((s.vertices().len(), s.facets().unwrap().len()), (4, 4));
        let s = make_linf(3).unwrap();
        assert_eq!(s.vertices().len(), 8);
        assert_eq!(s.norm(&vector(&[1, -1, 1])).unwrap(), int(1));
        assert!(make_linf(0).is_err());
    }

    #[test]
    fn norm_examples() {
        let s = make_linf(2).unwrap();
        assert_eq!(s.norm(&vector(&[1, -1])).unwrap(), int(1));
        assert_eq!(s.norm(&[rat(3, 2), rat(1, 2)]).unwrap(), rat(3, 2));
        let sum = direct_sum_l1(&make_linf(2).unwrap(), &make_linf(1).unwrap()).unwrap();
        assert_eq!(sum.norm(&vector(&[1, 0, 1])).unwrap(), int(2));
        assert!(matches!(s.norm(&vector(&[1])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn dual_norm_examples() {
        let s = make_linf(2).unwrap();
        assert_eq!(s.dual_norm(&vector(&[1, 1])).unwrap(), int(2));
        assert_eq!(s.dual_norm(&vector(&[0, 0])).unwrap(), int(0));
        assert_eq!(s.dual_norm(&[rat(1, 2), rat(-1, 2)]).unwrap(), int(1));
    }

    #[test]
    fn direct_sum_examples() {
        let l11 = direct_sum_l1(&make_linf(1).unwrap(), &make_linf(1).unwrap()).unwrap();
        assert_eq!(l11.vertices().len(), 4);
        assert_eq!(l11.norm(&vector(&[1, 1])).unwrap(), int(2));

        let zero = NormedSpace::new(0, vec![]).unwrap();
        let a = make_linf(2).unwrap();
        let same = direct_sum_l1(&a, &zero).unwrap();
        assert_eq!(same.vertices(), a.vertices());

        let big = direct_sum_l1(&make_linf(2).unwrap(), &make_linf(2).unwrap()).unwrap();
        assert_eq!(big.norm(&vector(&[1, 1, 1, -1])).unwrap(), int(2));
    }

    #[test]
    fn quotient_examples() {
        let s = Arc::new(make_linf(2).unwrap());
        let q = quotient(s.clone(), vec![vector(&[0, 0])]).unwrap();
        assert_eq!(q.quotient_norm(&[rat(3, 2), rat(1, 2)]).unwrap().0, rat(3, 2));

        let q = quotient(s.clone(), vec![vector(&[1, 1])]).unwrap();
        let (v, rep) = q.quotient_norm(&vector(&[1, 0])).unwrap();
        assert_eq!(v, rat(1, 2));
        assert_eq!(s.norm(&rep).unwrap(), rat(1, 2));
        assert_eq!(q.quotient_norm(&vector(&[-3, -3])).unwrap().0, int(0));

        assert!(matches!(quotient(s, vec![vector(&[1, 1]), vector(&[2, 2])]), Err(Error::DependentVectors)));
    }

    #[test]
    fn quotient_space_matches_quotient_norm() {
        let s = Arc::new(make_linf(3).unwrap());
        let q = quotient(s, vec![vector(&[1, 1, 0])]).unwrap();
        let qs = q.to_space().unwrap();
        for x in [vector(&[1, 0, 0]), vector(&[2, -1, 1]), vec![rat(1, 3), int(0), rat(-5, 2)]] {
            assert_eq!(qs.norm(&q.coords(&x).unwrap()).unwrap(), q.quotient_norm(&x).unwrap().0);
        }
    }

    #[test]
    fn facet_examples() {
        let f: BTreeSet<RVector> = facet_enumeration(&make_linf(2).unwrap()).unwrap().into_iter().collect();
        let expect: BTreeSet<RVector> =
            [vector(&[1, 0]), vector(&[-1, 0]), vector(&[0, 1]), vector(&[0, -1])].into_iter().collect();
        assert_eq!(f, expect);

        let f = facet_enumeration(&l1_2()).unwrap();
        assert_eq!(f.len(), 4);
        assert!(f.iter().all(|n| n.iter().all(|x| x.abs() == int(1))));

        // dual ball of ℓ∞¹ ⊕₁ ℓ∞² is [-1, 1] × (ℓ1² ball)
        let s = direct_sum_l1(&make_linf(1).unwrap(), &make_linf(2).unwrap()).unwrap();
        let f: BTreeSet<RVector> = facet_enumeration(&s).unwrap().into_iter().collect();
        let mut expect = BTreeSet::new();
        for a in [-1, 1] {
            for b in [-1, 1] {
                expect.insert(vector(&[a, b, 0]));
                expect.insert(vector(&[a, 0, b]));
            }
        }
        assert_eq!(f, expect);
    }

    #[test]
    fn section_examples() {
        let s = make_linf(2).unwrap();
        let full = section_vertices(&s, &[unit(2, 0), unit(2, 1)]).unwrap();
        let fs: BTreeSet<RVector> = full.into_iter().collect();
        let vs: BTreeSet<RVector> = s.vertices().iter().cloned().collect();
        assert_eq!(fs, vs);

        let diag = section_vertices(&s, &[vector(&[1, 1])]).unwrap();
        assert_eq!(diag, vec![vector(&[-1]), vector(&[1])]);
        let anti = section_vertices(&s, &[vector(&[1, -1])]).unwrap();
        assert_eq!(anti, vec![vector(&[-1]), vector(&[1])]);
        assert!(matches!(
            section_vertices(&s, &[vector(&[1, 1]), vector(&[2, 2])]),
            Err(Error::DependentVectors)
        ));
    }

    #[test]
    fn operator_norm_examples() {
        let s = Arc::new(make_linf(2).unwrap());
        let id = LinearMap::new(s.clone(), s.clone(), RMatrix::identity(2)).unwrap();
        assert_eq!(operator_norm(&id).unwrap(), int(1));
        let z = LinearMap::new(s.clone(), s.clone(), RMatrix::zeros(2, 2)).unwrap();
        assert_eq!(operator_norm(&z).unwrap(), int(0));
        let t = LinearMap::new(s.clone(), s.clone(), RMatrix::from_i64(&[&[1, 1], &[0, 1]])).unwrap();
        assert_eq!(operator_norm(&t).unwrap(), int(2));
        assert!(LinearMap::new(s.clone(), s, RMatrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn distortion_examples() {
        let s = Arc::new(make_linf(2).unwrap());
        let id = LinearMap::new(s.clone(), s.clone(), RMatrix::identity(2)).unwrap();
        assert_eq!(distortion(&id).unwrap(), (int(1), int(1)));
        let one = Arc::new(make_linf(1).unwrap());
        let two = LinearMap::new(one.clone(), one, RMatrix::from_i64(&[&[2]])).unwrap();
        assert_eq!(distortion(&two).unwrap(), (int(2), rat(1, 2)));
        let t = LinearMap::new(s.clone(), s.clone(), RMatrix::from_i64(&[&[1, 1], &[0, 1]])).unwrap();
        assert_eq!(distortion(&t).unwrap(), (int(2), int(2)));
        let sing = LinearMap::new(s.clone(), s, RMatrix::from_i64(&[&[1, 1], &[1, 1]])).unwrap();
        assert!(matches!(distortion(&sing), Err(Error::Singular)));
    }

    fn assert_auerbach(s: &NormedSpace, basis: &[RVector], duals: &[RVector]) {
        for (l, w) in basis.iter().enumerate() {
            assert_eq!(s.norm(w).unwrap(), int(1));
            assert_eq!(s.dual_norm(&duals[l]).unwrap(), int(1));
            for (k, v) in basis.iter().enumerate() {
                let expect = if k == l { int(1) } else { int(0) };
                assert_eq!(dot(&duals[l], v), expect);
            }
        }
    }

    #[test]
    fn auerbach_examples() {
        for n in 1..=3 {
            let s = make_linf(n).unwrap();
            let (b, d) = auerbach_basis(&s).unwrap();
            let std: Vec<RVector> = (0..n).map(|i| unit(n, i)).collect();
            assert_eq!(b, std);
            assert_eq!(d, std);
        }
        let s = l1_2();
        let (b, d) = auerbach_basis(&s).unwrap();
        assert_eq!(b, vec![unit(2, 0), unit(2, 1)]);
        assert_auerbach(&s, &b, &d);

        // exhaustive: every vertex pair of ℓ∞¹ ⊕₁ ℓ∞¹ with maximal |det| is Auerbach,
        // and the returned basis attains that maximum
        let s = direct_sum_l1(&make_linf(1).unwrap(), &make_linf(1).unwrap()).unwrap();
        let (b, d) = auerbach_basis(&s).unwrap();
        assert_auerbach(&s, &b, &d);
        let vs = s.vertices();
        let mut best = int(0);
        for i in 0..vs.len() {
            for j in 0..vs.len() {
                let det = RMatrix::from_columns(2, &[vs[i].clone(), vs[j].clone()]).unwrap().determinant().unwrap();
                best = best.max(det.abs());
            }
        }
        let got = RMatrix::from_columns(2, &b).unwrap().determinant().unwrap().abs();
        assert_eq!(got, best);
    }

    #[test]
    fn auerbach_on_skewed_hexagon() {
        let s = NormedSpace::symmetric(2, vec![vector(&[1, 0]), vec![int(1), rat(4, 5)], vector(&[0, 1])]).unwrap();
        let (b, d) = auerbach_basis(&s).unwrap();
        assert_auerbach(&s, &b, &d);
    }

    #[test]
    fn rejects_bad_vertex_sets() {
        assert!(matches!(NormedSpace::new(2, vec![vector(&[1, 0])]), Err(Error::NotSymmetric(_))));
        assert!(matches!(
            NormedSpace::new(2, vec![vector(&[1, 0]), vector(&[-1, 0])]),
            Err(Error::DegenerateVertexSet { .. })
        ));
    }

    #[test]
    fn prune_keeps_hull() {
        let s = NormedSpace::symmetric(2, vec![vector(&[1, 0]), vector(&[0, 1]), vec![rat(1, 4), rat(1, 4)]]).unwrap();
        let p = s.prune_redundant().unwrap();
        assert_eq!(p.vertices().len(), 4);
        assert_eq!(p.norm(&vector(&[1, 1])).unwrap(), s.norm(&vector(&[1, 1])).unwrap());
    }

    mod props {
        use super::*;
        use crate::ratlin::{add, scale, small_rational, small_vector};
        use proptest::prelude::*;
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;

        fn space(seed: u64, dim: usize) -> (ChaCha8Rng, NormedSpace) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let extra = rng.gen_range(0..=3);
            let s = random_space(&mut rng, dim, extra, 4).unwrap();
            (rng, s)
        }

        fn full_sup(s: &NormedSpace, w: &[RVector], f: &[Rational]) -> Rational {
            let all: Vec<&RVector> = s.vertices().iter().collect();
            section_program(s.dim(), &all, w, f).unwrap().unwrap().0
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn norm_axioms(seed in any::<u64>(), dim in 1usize..=3) {
                let (mut rng, s) = space(seed, dim);
                let x = small_vector(&mut rng, dim, 5);
                let y = small_vector(&mut rng, dim, 5);
                let a = small_rational(&mut rng, 5);
                let nx = s.norm(&x).unwrap();
                prop_assert_eq!(nx.is_zero(), ratlin::is_zero_vec(&x));
                prop_assert!(!nx.is_negative());
                prop_assert_eq!(s.norm(&scale(&x, &a)).unwrap(), a.abs() * &nx);
                prop_assert!(s.norm(&add(&x, &y)).unwrap() <= nx + s.norm(&y).unwrap());
            }

            #[test]
            fn certified_norm_matches_simplex(seed in any::<u64>(), dim in 1usize..=4) {
                let (mut rng, s) = space(seed, dim);
                let x = small_vector(&mut rng, dim, 7);
                prop_assume!(!ratlin::is_zero_vec(&x));
                prop_assert_eq!(s.norm(&x).unwrap(), s.norm_with_weights(&x).unwrap().0);
            }

            #[test]
            fn certified_sup_matches_simplex(seed in any::<u64>(), dim in 2usize..=4) {
                let (mut rng, s) = space(seed, dim);
                let k = rng.gen_range(1..=dim);
                let w = random_independent(&mut rng, dim, k, 3);
                let f = small_vector(&mut rng, k, 5);
                let (value, c) = s.sup_on_subspace(&w, &f).unwrap();
                prop_assert_eq!(&value, &full_sup(&s, &w, &f));
                prop_assert_eq!(dot(&f, &c), value);
                prop_assert!(s.norm(&ratlin::combine(dim, &w, &c)).unwrap() <= Rational::one());
            }

            #[test]
            fn holder(seed in any::<u64>(), dim in 1usize..=3) {
                let (mut rng, s) = space(seed, dim);
                let x = small_vector(&mut rng, dim, 5);
                let f = small_vector(&mut rng, dim, 5);
                prop_assert!(dot(&f, &x).abs() <= s.dual_norm(&f).unwrap() * s.norm(&x).unwrap());
            }

            #[test]
            fn facets_reproduce_norm(seed in any::<u64>(), dim in 1usize..=3) {
                let (mut rng, s) = space(seed, dim);
                let facets = facet_enumeration(&s).unwrap();
                let x = small_vector(&mut rng, dim, 5);
                let via_facets = facets.iter().map(|g| dot(g, &x)).max().unwrap().max(Rational::zero());
                prop_assert_eq!(via_facets, s.norm(&x).unwrap());
                let back = vertices_of_h_polytope(dim, &facets);
                let again = NormedSpace::new(dim, back).unwrap();
                for v in s.vertices() {
                    prop_assert!(again.norm(v).unwrap() <= Rational::one());
                }
                for v in again.vertices() {
                    prop_assert_eq!(s.norm(v).unwrap(), Rational::one());
                }
            }

            #[test]
            fn quotient_norm_is_smaller(seed in any::<u64>(), dim in 2usize..=3) {
                let (mut rng, s) = space(seed, dim);
                let kernel = random_independent(&mut rng, dim, 1, 3);
                let q = quotient(Arc::new(s.clone()), kernel.clone()).unwrap();
                let x = small_vector(&mut rng, dim, 5);
                let (qn, rep) = q.quotient_norm(&x).unwrap();
                prop_assert!(qn <= s.norm(&x).unwrap());
                prop_assert_eq!(s.norm(&rep).unwrap(), qn.clone());
                prop_assert!(ratlin::in_span(dim, &kernel, &ratlin::sub(&x, &rep)));
            }

            #[test]
            fn operator_norm_submultiplicative(seed in any::<u64>(), d in 1usize..=3) {
                let (mut rng, a) = space(seed, d);
                let b = Arc::new(random_space(&mut rng, d, 1, 4).unwrap());
                let a = Arc::new(a);
                let m1 = RMatrix::from_columns(d, &random_independent(&mut rng, d, d, 3)).unwrap();
                let m2 = RMatrix::from_columns(d, &random_independent(&mut rng, d, d, 3)).unwrap();
                let s = LinearMap::new(a.clone(), b.clone(), m1).unwrap();
                let t = LinearMap::new(b, a, m2).unwrap();
                let st = t.compose(&s).unwrap();
                prop_assert!(operator_norm(&st).unwrap() <= operator_norm(&s).unwrap() * operator_norm(&t).unwrap());
            }
        }
    }
}
