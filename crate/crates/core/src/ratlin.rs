//! Exact rational scalars, vectors and dense matrices.
//!
//! Everything downstream is built on [`Rational`] (an arbitrary-precision
//! fraction kept in lowest terms), plain `Vec<Rational>` vectors and the
//! row-major [`RMatrix`].

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;
pub type RVector = Vec<Rational>;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `n / d`, reduced. Panics on `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn vector(entries: &[i64]) -> RVector {
    entries.iter().map(|&e| int(e)).collect()
}

/// Parses `"p/q"` or `"p"`. Whitespace around the string is ignored.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let parsed = match t.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| Error::ParseRational(s.into()))?;
            let q: BigInt = q.trim().parse().map_err(|_| Error::ParseRational(s.into()))?;
            if q.is_zero() {
                return Err(Error::ParseRational(s.into()));
            }
            Rational::new(p, q)
        }
        None => Rational::from_integer(t.parse().map_err(|_| Error::ParseRational(s.into()))?),
    };
    Ok(parsed)
}

/// Canonical `"p/q"` form, or `"p"` when the denominator is one.
pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

pub fn format_vector(v: &[Rational]) -> Vec<String> {
    v.iter().map(format_rational).collect()
}

pub fn parse_vector(v: &[String]) -> Result<RVector> {
    v.iter().map(|s| parse_rational(s)).collect()
}

pub fn zeros(n: usize) -> RVector {
    vec![Rational::zero(); n]
}

pub fn unit(n: usize, i: usize) -> RVector {
    let mut v = zeros(n);
    v[i] = Rational::one();
    v
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Rational::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            acc += x * y;
        }
    }
    acc
}

pub fn add(a: &[Rational], b: &[Rational]) -> RVector {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[Rational], b: &[Rational]) -> RVector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[Rational], s: &Rational) -> RVector {
    a.iter().map(|x| x * s).collect()
}

pub fn neg(a: &[Rational]) -> RVector {
    a.iter().map(|x| -x).collect()
}

/// `acc += s * a`
pub fn axpy(acc: &mut [Rational], s: &Rational, a: &[Rational]) {
    if s.is_zero() {
        return;
    }
    for (x, y) in acc.iter_mut().zip(a) {
        if !y.is_zero() {
            *x += s * y;
        }
    }
}

pub fn is_zero_vec(a: &[Rational]) -> bool {
    a.iter().all(Zero::is_zero)
}

pub fn max_abs(a: &[Rational]) -> Rational {
    a.iter().map(|x| x.abs()).max().unwrap_or_else(Rational::zero)
}

pub fn concat(a: &[Rational], b: &[Rational]) -> RVector {
    a.iter().chain(b).cloned().collect()
}

/// Linear combination `sum_j coeffs[j] * vectors[j]` in dimension `dim`.
pub fn combine(dim: usize, vectors: &[RVector], coeffs: &[Rational]) -> RVector {
    let mut out = zeros(dim);
    for (v, c) in vectors.iter().zip(coeffs) {
        axpy(&mut out, c, v);
    }
    out
}

/// Uniform rational with `|numerator| <= bound` and `1 <= denominator <= bound`.
pub fn small_rational<R: rand::Rng + ?Sized>(rng: &mut R, bound: i64) -> Rational {
    let n = rng.gen_range(-bound..=bound);
    let d = rng.gen_range(1..=bound.max(1));
    rat(n, d)
}

pub fn small_vector<R: rand::Rng + ?Sized>(rng: &mut R, dim: usize, bound: i64) -> RVector {
    (0..dim).map(|_| small_rational(rng, bound)).collect()
}

/// Dense row-major rational matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl fmt::Debug for RMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(format_rational).collect();
            write!(f, "[{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl RMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RMatrix { rows, cols, data: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Rational::one());
        }
        m
    }

    pub fn from_rows(rows: &[RVector]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        Self::from_rows_with_cols(rows, cols)
    }

    /// Like [`RMatrix::from_rows`] but fixes the column count, so an empty
    /// row list still yields a `0 x cols` matrix.
    pub fn from_rows_with_cols(rows: &[RVector], cols: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, found: r.len() });
            }
            data.extend(r.iter().cloned());
        }
        Ok(RMatrix { rows: rows.len(), cols, data })
    }

    /// Matrix whose columns are the given vectors, each of length `rows`.
    pub fn from_columns(rows: usize, columns: &[RVector]) -> Result<Self> {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::DimensionMismatch { expected: rows, found: c.len() });
            }
            for (i, x) in c.iter().enumerate() {
                m.set(i, j, x.clone());
            }
        }
        Ok(m)
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let rs: Vec<RVector> = rows.iter().map(|r| vector(r)).collect();
        Self::from_rows(&rs).expect("ragged literal matrix")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Rational {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Rational) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Rational] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> RVector {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn row_vectors(&self) -> Vec<RVector> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn column_vectors(&self) -> Vec<RVector> {
        (0..self.cols).map(|c| self.column(c)).collect()
    }

    pub fn transpose(&self) -> RMatrix {
        let mut t = RMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &[Rational]) -> Result<RVector> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, found: x.len() });
        }
        Ok((0..self.rows).map(|r| dot(self.row(r), x)).collect())
    }

    pub fn mul(&self, other: &RMatrix) -> Result<RMatrix> {
        if other.rows != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, found: other.rows });
        }
        let mut out = RMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let b = other.get(k, c);
                    if !b.is_zero() {
                        let v = out.get(r, c) + a * b;
                        out.set(r, c, v);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn scaled(&self, s: &Rational) -> RMatrix {
        RMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    /// Sub-matrix made of the given columns, in order.
    pub fn select_columns(&self, cols: &[usize]) -> RMatrix {
        let mut m = RMatrix::zeros(self.rows, cols.len());
        for r in 0..self.rows {
            for (j, &c) in cols.iter().enumerate() {
                m.set(r, j, self.get(r, c).clone());
            }
        }
        m
    }

    /// Reduced row-echelon form and the strictly increasing pivot columns.
    pub fn rref(&self) -> (RMatrix, Vec<usize>) {
        let mut a = self.clone();
        let mut pivots = Vec::new();
        let mut prow = 0;
        for col in 0..a.cols {
            if prow == a.rows {
                break;
            }
            let Some(found) = (prow..a.rows).find(|&r| !a.get(r, col).is_zero()) else {
                continue;
            };
            a.swap_rows(found, prow);
            let p = a.get(prow, col).clone();
            if !p.is_one() {
                for c in col..a.cols {
                    let v = a.get(prow, c) / &p;
                    a.set(prow, c, v);
                }
            }
            for r in 0..a.rows {
                if r == prow {
                    continue;
                }
                let f = a.get(r, col).clone();
                if f.is_zero() {
                    continue;
                }
                for c in col..a.cols {
                    let pv = a.get(prow, c);
                    if pv.is_zero() {
                        continue;
                    }
                    let v = a.get(r, c) - &f * pv;
                    a.set(r, c, v);
                }
            }
            pivots.push(col);
            prow += 1;
        }
        (a, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the null space: one vector per free column of the RREF.
    pub fn kernel_basis(&self) -> Vec<RVector> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&fc| {
                let mut v = zeros(self.cols);
                v[fc] = Rational::one();
                for (row, &pc) in pivots.iter().enumerate() {
                    v[pc] = -r.get(row, fc).clone();
                }
                v
            })
            .collect()
    }

    /// Some `x` with `self * x = b`, or `None` if `b` is outside the column space.
    pub fn solve(&self, b: &[Rational]) -> Result<Option<RVector>> {
        if b.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, found: b.len() });
        }
        let mut aug = RMatrix::zeros(self.rows, self.cols + 1);
        for r in 0..self.rows {
            for c in 0..self.cols {
                aug.set(r, c, self.get(r, c).clone());
            }
            aug.set(r, self.cols, b[r].clone());
        }
        let (red, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return Ok(None);
        }
        let mut x = zeros(self.cols);
        for (row, &pc) in pivots.iter().enumerate() {
            x[pc] = red.get(row, self.cols).clone();
        }
        Ok(Some(x))
    }

    pub fn determinant(&self) -> Result<Rational> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch { expected: self.rows, found: self.cols });
        }
        let mut a = self.clone();
        let n = self.rows;
        let mut det = Rational::one();
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| !a.get(r, col).is_zero()) else {
                return Ok(Rational::zero());
            };
            if p != col {
                a.swap_rows(p, col);
                det = -det;
            }
            let pv = a.get(col, col).clone();
            det *= &pv;
            for r in col + 1..n {
                let f = a.get(r, col) / &pv;
                if f.is_zero() {
                    continue;
                }
                for c in col..n {
                    let v = a.get(r, c) - &f * a.get(col, c);
                    a.set(r, c, v);
                }
            }
        }
        Ok(det)
    }

    pub fn inverse(&self) -> Result<RMatrix> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch { expected: self.rows, found: self.cols });
        }
        let n = self.rows;
        let mut aug = RMatrix::zeros(n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                aug.set(r, c, self.get(r, c).clone());
            }
            aug.set(r, n + r, Rational::one());
        }
        let (red, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return Err(Error::Singular);
        }
        let mut inv = RMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                inv.set(r, c, red.get(r, n + c).clone());
            }
        }
        Ok(inv)
    }
}

/// Rank of a list of vectors of common length `dim`.
pub fn rank_of(dim: usize, vectors: &[RVector]) -> usize {
    RMatrix::from_rows_with_cols(vectors, dim).map_or(0, |m| m.rank())
}

pub fn independent(dim: usize, vectors: &[RVector]) -> bool {
    rank_of(dim, vectors) == vectors.len()
}

/// Canonical basis (nonzero RREF rows) of the span of `vectors`.
pub fn span_basis(dim: usize, vectors: &[RVector]) -> Vec<RVector> {
    let m = RMatrix::from_rows_with_cols(vectors, dim).expect("vector length");
    let (r, pivots) = m.rref();
    (0..pivots.len()).map(|i| r.row(i).to_vec()).collect()
}

/// Whether two families span the same subspace.
pub fn same_span(dim: usize, a: &[RVector], b: &[RVector]) -> bool {
    span_basis(dim, a) == span_basis(dim, b)
}

/// Whether `v` lies in the span of `basis`.
pub fn in_span(dim: usize, basis: &[RVector], v: &[Rational]) -> bool {
    let m = RMatrix::from_columns(dim, basis).expect("vector length");
    matches!(m.solve(v), Ok(Some(_)))
}

/// Serde adapters encoding rationals as `"p/q"` strings.
pub mod serde_rational {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub mod scalar {
        use super::*;
        pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
            format_rational(r).serialize(s)
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
            let s = String::deserialize(d)?;
            parse_rational(&s).map_err(serde::de::Error::custom)
        }
    }

    pub mod vec {
        use super::*;
        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
            format_vector(v).serialize(s)
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<RVector, D::Error> {
            let v = Vec::<String>::deserialize(d)?;
            parse_vector(&v).map_err(serde::de::Error::custom)
        }
    }

    pub mod vecs {
        use super::*;
        pub fn serialize<S: Serializer>(v: &[RVector], s: S) -> std::result::Result<S::Ok, S::Error> {
            v.iter().map(|r| format_vector(r)).collect::<Vec<_>>().serialize(s)
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<RVector>, D::Error> {
            let v = Vec::<Vec<String>>::deserialize(d)?;
            v.iter().map(|r| parse_vector(r)).collect::<Result<_>>().map_err(serde::de::Error::custom)
        }
    }

    pub mod matrix {
        use super::*;
        pub fn serialize<S: Serializer>(m: &RMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
            vecs::serialize(&m.row_vectors(), s)
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<RMatrix, D::Error> {
            let rows = vecs::deserialize(d)?;
            RMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
        }
    }

    pub mod option_vecs {
        use super::*;
        pub fn serialize<S: Serializer>(v: &Option<Vec<RVector>>, s: S) -> std::result::Result<S::Ok, S::Error> {
            v.as_ref().map(|rows| rows.iter().map(|r| format_vector(r)).collect::<Vec<_>>()).serialize(s)
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<RVector>>, D::Error> {
            let v = Option::<Vec<Vec<String>>>::deserialize(d)?;
            v.map(|rows| rows.iter().map(|r| parse_vector(r)).collect::<Result<_>>())
                .transpose()
                .map_err(serde::de::Error::custom)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form() {
        let r = rat(6, -4);
        assert_eq!(*r.numer(), BigInt::from(-3));
        assert_eq!(*r.denom(), BigInt::from(2));
        assert_eq!(format_rational(&r), "-3/2");
        assert_eq!(format_rational(&int(5)), "5");
        assert_eq!(parse_rational(" 4/6 ").unwrap(), rat(2, 3));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("0.5").is_err());
    }

    #[test]
    fn rref_examples() {
        let (r, p) = RMatrix::identity(2).rref();
        assert_eq!(r, RMatrix::identity(2));
        assert_eq!(p, vec![0, 1]);

        let (r, p) = RMatrix::from_i64(&[&[1, 1], &[1, 1]]).rref();
        assert_eq!(r, RMatrix::from_i64(&[&[1, 1], &[0, 0]]));
        assert_eq!(p, vec![0]);

        // hand elimination: R2 <- R2 - R1/2 gives [[2,4],[0,1]], then back-substitute
        let (r, p) = RMatrix::from_i64(&[&[2, 4], &[1, 3]]).rref();
        assert_eq!(r, RMatrix::identity(2));
        assert_eq!(p, vec![0, 1]);
    }

    #[test]
    fn kernel_examples() {
        assert!(RMatrix::identity(3).kernel_basis().is_empty());

        let k = RMatrix::zeros(1, 2).kernel_basis();
        assert_eq!(k.len(), 2);
        assert!(independent(2, &k));

        let m = RMatrix::from_i64(&[&[1, 1]]);
        let k = m.kernel_basis();
        assert_eq!(k.len(), 1);
        assert!(same_span(2, &k, &[vector(&[1, -1])]));
        assert!(is_zero_vec(&m.mul_vec(&k[0]).unwrap()));
    }

    #[test]
    fn solve_examples() {
        let b = vec![rat(1, 3), rat(-2, 5)];
        assert_eq!(RMatrix::identity(2).solve(&b).unwrap(), Some(b.clone()));

        let m = RMatrix::from_i64(&[&[1, 1]]);
        let x = m.solve(&vector(&[1])).unwrap().unwrap();
        assert_eq!(&x[0] + &x[1], int(1));

        let m = RMatrix::from_i64(&[&[1], &[1]]);
        assert_eq!(m.solve(&vector(&[1, 2])).unwrap(), None);
        assert!(matches!(m.solve(&vector(&[1])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn determinant_and_inverse() {
        let m = RMatrix::from_i64(&[&[1, 1], &[0, 1]]);
        assert_eq!(m.determinant().unwrap(), int(1));
        assert_eq!(m.inverse().unwrap(), RMatrix::from_i64(&[&[1, -1], &[0, 1]]));
        assert!(matches!(RMatrix::from_i64(&[&[1, 2], &[2, 4]]).inverse(), Err(Error::Singular)));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn matrix() -> impl Strategy<Value = RMatrix> {
            (1usize..=4, 1usize..=4).prop_flat_map(|(r, c)| {
                proptest::collection::vec(proptest::collection::vec((-4i64..=4, 1i64..=3), c), r).prop_map(|rows| {
                    let rows: Vec<RVector> = rows.iter().map(|row| row.iter().map(|&(n, d)| rat(n, d)).collect()).collect();
                    RMatrix::from_rows(&rows).unwrap()
                })
            })
        }

        proptest! {
            #[test]
            fn rank_nullity(m in matrix()) {
                let k = m.kernel_basis();
                prop_assert_eq!(k.len() + m.rank(), m.cols());
                for v in &k {
                    prop_assert!(is_zero_vec(&m.mul_vec(v).unwrap()));
                }
                prop_assert!(independent(m.cols(), &k));
            }

            #[test]
            fn inverse_when_nonsingular(m in matrix()) {
                prop_assume!(m.rows() == m.cols());
                let det = m.determinant().unwrap();
                match m.inverse() {
                    Ok(inv) => {
                        prop_assert!(!det.is_zero());
                        prop_assert_eq!(m.mul(&inv).unwrap(), RMatrix::identity(m.rows()));
                    }
                    Err(_) => prop_assert!(det.is_zero()),
                }
            }

            #[test]
            fn rational_text_round_trip(n in -1000i64..1000, d in 1i64..1000) {
                let r = rat(n, d);
                prop_assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
            }
        }
    }
}
