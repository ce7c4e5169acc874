//! Exact two-phase simplex over the rationals.
//!
//! Variables are free unless the program contains a row of the form
//! `-c * x_i <= 0` with `c > 0`; such rows are absorbed into a sign
//! restriction instead of becoming tableau rows. Entering variables are
//! priced by largest reduced cost; after a run of degenerate pivots the
//! method switches to Bland's least-index rule until progress resumes,
//! so it terminates without perturbation.

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::ratlin::{zeros, RVector, Rational};

/// `maximize objective·x` subject to `normal·x <= bound` and `normal·x = value`.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub objective: RVector,
    pub constraints: Vec<(RVector, Rational)>,
    pub equalities: Vec<(RVector, Rational)>,
    /// Indices restricted to `x_i >= 0`.
    pub nonnegative: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { value: Rational, point: RVector },
    Unbounded,
    Infeasible,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<(Rational, RVector)> {
        match self {
            LpOutcome::Optimal { value, point } => Some((value, point)),
            _ => None,
        }
    }
}

impl LinearProgram {
    pub fn new(objective: RVector) -> Self {
        LinearProgram { objective, ..Default::default() }
    }

    pub fn dim(&self) -> usize {
        self.objective.len()
    }

    pub fn le(mut self, normal: RVector, bound: Rational) -> Self {
        self.constraints.push((normal, bound));
        self
    }

    pub fn eq(mut self, normal: RVector, value: Rational) -> Self {
        self.equalities.push((normal, value));
        self
    }

    /// Adds `x_i >= 0`.
    pub fn nonneg(mut self, i: usize) -> Self {
        self.nonnegative.push(i);
        self
    }
}

/// Solves `p` exactly. The optimal point is a basic feasible solution.
pub fn lp_maximize(p: &LinearProgram) -> Result<LpOutcome> {
    let n = p.dim();
    for (normal, _) in p.constraints.iter().chain(&p.equalities) {
        if normal.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: normal.len() });
        }
    }

    let mut nonneg = vec![false; n];
    for &i in &p.nonnegative {
        if i >= n {
            return Err(Error::DimensionMismatch { expected: n, found: i + 1 });
        }
        nonneg[i] = true;
    }
    let mut rows_ineq: Vec<&(RVector, Rational)> = Vec::new();
    for c in &p.constraints {
        match sign_restriction(c) {
            Some(i) => nonneg[i] = true,
            None => rows_ineq.push(c),
        }
    }

    // column layout: per variable a plus column and (if free) a minus column,
    // then one slack per inequality row, then artificials.
    let mut var_cols: Vec<(usize, Option<usize>)> = Vec::with_capacity(n);
    let mut ncols = 0;
    for &nn in &nonneg {
        if nn {
            var_cols.push((ncols, None));
            ncols += 1;
        } else {
            var_cols.push((ncols, Some(ncols + 1)));
            ncols += 2;
        }
    }
    let slack0 = ncols;
    ncols += rows_ineq.len();
    let nrows = rows_ineq.len() + p.equalities.len();
    let art0 = ncols;
    let total = ncols + nrows;

    let mut t: Vec<Vec<Rational>> = Vec::with_capacity(nrows);
    let mut basis: Vec<usize> = Vec::with_capacity(nrows);
    let all_rows = rows_ineq.iter().map(|r| (*r, true)).chain(p.equalities.iter().map(|r| (r, false)));
    for (k, ((normal, rhs), is_ineq)) in all_rows.enumerate() {
        let mut row = zeros(total + 1);
        for (i, a) in normal.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let (plus, minus) = var_cols[i];
            row[plus] = a.clone();
            if let Some(m) = minus {
                row[m] = -a;
            }
        }
        if is_ineq {
            row[slack0 + k] = Rational::from_integer(1.into());
        }
        row[total] = rhs.clone();
        let negative = rhs.is_negative();
        if negative {
            for x in row.iter_mut() {
                *x = -&*x;
            }
        }
        if is_ineq && !negative {
            basis.push(slack0 + k);
        } else {
            row[art0 + k] = Rational::from_integer(1.into());
            basis.push(art0 + k);
        }
        t.push(row);
    }

    // phase 1: maximize -sum(artificials)
    let mut cost1 = zeros(total);
    for c in cost1.iter_mut().skip(art0) {
        *c = -Rational::from_integer(1.into());
    }
    let allowed1 = vec![true; total];
    let mut tab = Tableau { t, basis, width: total };
    tab.run(&cost1, &allowed1);
    if tab.objective(&cost1).is_negative() {
        return Ok(LpOutcome::Infeasible);
    }
    tab.evict_artificials(art0);

    let mut cost2 = zeros(total);
    for (i, c) in p.objective.iter().enumerate() {
        let (plus, minus) = var_cols[i];
        cost2[plus] = c.clone();
        if let Some(m) = minus {
            cost2[m] = -c;
        }
    }
    let allowed2: Vec<bool> = (0..total).map(|j| j < art0).collect();
    if !tab.run(&cost2, &allowed2) {
        return Ok(LpOutcome::Unbounded);
    }

    let mut values = zeros(total);
    for (i, &b) in tab.basis.iter().enumerate() {
        values[b] = tab.t[i][total].clone();
    }
    let point: RVector = var_cols
        .iter()
        .map(|&(plus, minus)| match minus {
            Some(m) => &values[plus] - &values[m],
            None => values[plus].clone(),
        })
        .collect();
    let value = crate::ratlin::dot(&p.objective, &point);
    Ok(LpOutcome::Optimal { value, point })
}

fn sign_restriction((normal, bound): &(RVector, Rational)) -> Option<usize> {
    if !bound.is_zero() {
        return None;
    }
    let mut hit = None;
    for (i, a) in normal.iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        if hit.is_some() || !a.is_negative() {
            return None;
        }
        hit = Some(i);
    }
    hit
}

const DEGENERATE_LIMIT: usize = 8;

struct Tableau {
    t: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn objective(&self, cost: &[Rational]) -> Rational {
        let mut acc = Rational::zero();
        for (i, &b) in self.basis.iter().enumerate() {
            if !cost[b].is_zero() {
                acc += &cost[b] * &self.t[i][self.width];
            }
        }
        acc
    }

    fn reduced_costs(&self, cost: &[Rational]) -> RVector {
        let mut d = cost[..self.width].to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            if cost[b].is_zero() {
                continue;
            }
            for (j, a) in self.t[i][..self.width].iter().enumerate() {
                if !a.is_zero() {
                    d[j] -= &cost[b] * a;
                }
            }
        }
        d
    }

    /// Dantzig pricing, falling back to Bland's rule after a run of
    /// degenerate pivots; returns false when unbounded.
    fn run(&mut self, cost: &[Rational], allowed: &[bool]) -> bool {
        let mut d = self.reduced_costs(cost);
        let mut degenerate_run = 0usize;
        loop {
            let bland = degenerate_run >= DEGENERATE_LIMIT;
            let mut entering: Option<usize> = None;
            for j in 0..self.width {
                if !allowed[j] || !d[j].is_positive() {
                    continue;
                }
                if bland {
                    entering = Some(j);
                    break;
                }
                if entering.map_or(true, |e| d[j] > d[e]) {
                    entering = Some(j);
                }
            }
            let Some(j) = entering else {
                return true;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.t.len() {
                let a = &self.t[i][j];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.t[i][self.width] / a;
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, ratio)) = leave else {
                return false;
            };
            degenerate_run = if ratio.is_zero() { degenerate_run + 1 } else { 0 };
            self.pivot(r, j);
            let f = d[j].clone();
            for (c, x) in self.t[r][..self.width].iter().enumerate() {
                if !x.is_zero() {
                    d[c] -= &f * x;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.t[r][j].clone();
        for x in self.t[r].iter_mut() {
            if !x.is_zero() {
                *x /= &p;
            }
        }
        let pivot_row = self.t[r].clone();
        let nz: Vec<usize> = (0..=self.width).filter(|&c| !pivot_row[c].is_zero()).collect();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r || row[j].is_zero() {
                continue;
            }
            let f = row[j].clone();
            for &c in &nz {
                let delta = &f * &pivot_row[c];
                row[c] -= delta;
            }
        }
        self.basis[r] = j;
    }

    /// Pivots zero-level artificials out of the basis, dropping redundant rows.
    fn evict_artificials(&mut self, art0: usize) {
        let mut i = 0;
        while i < self.t.len() {
            if self.basis[i] >= art0 {
                match (0..art0).find(|&j| !self.t[i][j].is_zero()) {
                    Some(j) => self.pivot(i, j),
                    None => {
                        self.t.remove(i);
                        self.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }
}

/// Approximate dual of the gauge program `min Σλ : Σ λ_i v_i = x, λ >= 0`,
/// i.e. a point `y` with `y·x` maximal subject to `y·v_i <= 1`.
pub fn approx_gauge_dual(vertices: &[Vec<f64>], x: &[f64]) -> Option<Vec<f64>> {
    let cost = vec![-1.0; vertices.len()];
    Some(approx_dual(vertices, x, &cost)?.iter().map(|u| -u).collect())
}

/// Multipliers `u` of `max c·z : A z = b, z >= 0` (columns of `A` given),
/// so that `c_j <= u·A_j` at the optimum.
///
/// Plain `f64` simplex: the result is only a hint for choosing an active
/// set and must be certified exactly by the caller.
pub fn approx_dual(columns: &[Vec<f64>], b: &[f64], cost: &[f64]) -> Option<Vec<f64>> {
    let d = b.len();
    let nv = columns.len();
    let art0 = nv;
    let width = nv + d;
    let flip: Vec<f64> = b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
    let mut t = vec![vec![0.0; width + 1]; d];
    for r in 0..d {
        for (j, v) in columns.iter().enumerate() {
            t[r][j] = flip[r] * v[r];
        }
        t[r][art0 + r] = 1.0;
        t[r][width] = flip[r] * b[r];
    }
    let mut basis: Vec<usize> = (art0..width).collect();

    let mut cost1 = vec![0.0; width];
    cost1[art0..].iter_mut().for_each(|c| *c = -1.0);
    float_run(&mut t, &mut basis, &cost1, width, width)?;
    if basis.iter().zip(&t).any(|(&b, row)| b >= art0 && row[width] > FLOAT_EPS) {
        return None;
    }
    let mut cost2 = vec![0.0; width];
    cost2[..nv].copy_from_slice(cost);
    float_run(&mut t, &mut basis, &cost2, width, art0)?;

    // u = c_B B⁻¹, read off the artificial block
    let mut u = vec![0.0; d];
    for (i, &bi) in basis.iter().enumerate() {
        if bi < nv && cost[bi] != 0.0 {
            for (r, ur) in u.iter_mut().enumerate() {
                *ur += cost[bi] * t[i][art0 + r];
            }
        }
    }
    Some(u.iter().zip(&flip).map(|(a, f)| a * f).collect())
}

const FLOAT_EPS: f64 = 1e-9;

fn float_run(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], width: usize, allowed: usize) -> Option<()> {
    for _ in 0..FLOAT_PIVOT_LIMIT {
        let mut d = cost.to_vec();
        for (i, &b) in basis.iter().enumerate() {
            if cost[b] != 0.0 {
                for j in 0..width {
                    d[j] -= cost[b] * t[i][j];
                }
            }
        }
        let Some(j) = (0..allowed).filter(|&j| d[j] > FLOAT_EPS).max_by(|&a, &b| d[a].total_cmp(&d[b])) else {
            return Some(());
        };
        let r = (0..t.len())
            .filter(|&i| t[i][j] > FLOAT_EPS)
            .min_by(|&a, &b| (t[a][width] / t[a][j]).total_cmp(&(t[b][width] / t[b][j])))?;
        let p = t[r][j];
        t[r].iter_mut().for_each(|x| *x /= p);
        let pivot_row = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            let f = row[j];
            if i != r && f != 0.0 {
                row.iter_mut().zip(&pivot_row).for_each(|(x, p)| *x -= f * p);
            }
        }
        basis[r] = j;
    }
    None
}

const FLOAT_PIVOT_LIMIT: usize = 10_000;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratlin::{int, rat, vector};

    #[test]
    fn box_optimum() {
        let p = LinearProgram::new(vector(&[1, 1]))
            .le(vector(&[1, 0]), int(1))
            .le(vector(&[-1, 0]), int(1))
            .le(vector(&[0, 1]), int(1))
            .le(vector(&[0, -1]), int(1));
        assert_eq!(lp_maximize(&p).unwrap(), LpOutcome::Optimal { value: int(2), point: vector(&[1, 1]) });
    }

    #[test]
    fn infeasible_and_unbounded() {
        let p = LinearProgram::new(vector(&[1])).le(vector(&[1]), int(-1)).le(vector(&[-1]), int(0));
        assert_eq!(lp_maximize(&p).unwrap(), LpOutcome::Infeasible);

        let p = LinearProgram::new(vector(&[1, 0])).le(vector(&[0, 1]), int(1));
        assert_eq!(lp_maximize(&p).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn equalities_and_signs() {
        // max x + 2y, x + y = 3/2, x, y >= 0 -> y = 3/2
        let p = LinearProgram::new(vector(&[1, 2])).eq(vector(&[1, 1]), rat(3, 2)).nonneg(0).nonneg(1);
        let (v, x) = lp_maximize(&p).unwrap().optimal().unwrap();
        assert_eq!(v, int(3));
        assert_eq!(x, vec![int(0), rat(3, 2)]);
    }

    #[test]
    fn redundant_equalities() {
        let p = LinearProgram::new(vector(&[1, 0]))
            .eq(vector(&[1, 1]), int(1))
            .eq(vector(&[2, 2]), int(2))
            .le(vector(&[1, 0]), int(5))
            .le(vector(&[-1, 0]), int(5));
        let (v, x) = lp_maximize(&p).unwrap().optimal().unwrap();
        assert_eq!(v, int(5));
        assert_eq!(x, vector(&[5, -4]));
    }

    #[test]
    fn dimension_mismatch() {
        let p = LinearProgram::new(vector(&[1, 0])).le(vector(&[1]), int(1));
        assert!(matches!(lp_maximize(&p), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn float_guide_on_square() {
        let square = vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]];
        let y = approx_gauge_dual(&square, &[2.0, 1.0]).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-9 && y[1].abs() < 1e-9);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn program() -> impl Strategy<Value = (Vec<Vec<i64>>, Vec<i64>, Vec<i64>)> {
            (1usize..=3, 1usize..=4).prop_flat_map(|(n, m)| {
                (
                    proptest::collection::vec(proptest::collection::vec(-3i64..=3, n), m),
                    proptest::collection::vec(0i64..=4, m),
                    proptest::collection::vec(-3i64..=3, n),
                )
            })
        }

        proptest! {
            #[test]
            fn strong_duality((rows, rhs, cost) in program()) {
                let n = cost.len();
                // box rows keep the primal bounded; x = 0 is feasible
                let mut g: Vec<RVector> = rows.iter().map(|r| vector(r)).collect();
                let mut h: RVector = rhs.iter().map(|&b| int(b)).collect();
                for i in 0..n {
                    for sgn in [1, -1] {
                        let mut e = vec![0; n];
                        e[i] = sgn;
                        g.push(vector(&e));
                        h.push(int(2));
                    }
                }
                let mut primal = LinearProgram::new(vector(&cost));
                for (gi, hi) in g.iter().zip(&h) {
                    primal = primal.le(gi.clone(), hi.clone());
                }
                let (pv, x) = lp_maximize(&primal).unwrap().optimal().unwrap();
                for (gi, hi) in g.iter().zip(&h) {
                    prop_assert!(crate::ratlin::dot(gi, &x) <= *hi);
                }
                // min h·y : Gᵀy = c, y >= 0
                let mut dual = LinearProgram::new(h.iter().map(|v| -v).collect());
                for j in 0..n {
                    dual = dual.eq(g.iter().map(|gi| gi[j].clone()).collect(), int(cost[j]));
                }
                for i in 0..g.len() {
                    dual = dual.nonneg(i);
                }
                let (dv, y) = lp_maximize(&dual).unwrap().optimal().unwrap();
                prop_assert!(y.iter().all(|v| !v.is_negative()));
                prop_assert_eq!(pv, -dv);
            }
        }
    }
}
