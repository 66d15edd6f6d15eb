//! Exact sparse bi-Laurent polynomials in the chart coordinates `(z, u)`.
//!
//! The blown-up plane is covered by `U = (z, u)` and `V = (xi, v)`, glued on
//! the overlap by `(xi, v) = (1/z, z*u)`. Everything on the overlap is stored
//! in the `U` frame; a monomial `z^l u^i` is holomorphic on `U` iff `l >= 0`
//! and on `V` iff `l <= i`.

mod matrix;
pub(crate) mod parse;

pub use matrix::{MatrixBL, MatrixError};
pub use parse::{parse_polynomial, ParseError, ParseErrorKind};

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

/// Exact coefficient field.
pub type Rational = num_rational::BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// `z^zexp * u^udeg`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub zexp: i64,
    pub udeg: u32,
}

impl Monomial {
    pub const ONE: Monomial = Monomial { zexp: 0, udeg: 0 };

    pub fn new(zexp: i64, udeg: u32) -> Self {
        Monomial { zexp, udeg }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, other: Monomial) -> Monomial {
        Monomial {
            zexp: self.zexp + other.zexp,
            udeg: self.udeg + other.udeg,
        }
    }

    pub fn is_holomorphic_u(self) -> bool {
        self.zexp >= 0
    }

    pub fn is_holomorphic_v(self) -> bool {
        self.zexp <= self.udeg as i64
    }

    /// Exponents `(xi, v)` of the same monomial in the `V` chart.
    pub fn to_v_chart(self) -> (i64, u32) {
        (self.udeg as i64 - self.zexp, self.udeg)
    }
}

// Ordered by u-degree first so that printing and basis enumeration group by
// infinitesimal neighbourhood.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.udeg, self.zexp).cmp(&(other.udeg, other.zexp))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Finite sum of `Rational * z^l u^i` with `l` any integer and `i >= 0`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BiLaurent {
    terms: BTreeMap<Monomial, Rational>,
}

impl BiLaurent {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(Rational::one(), Monomial::ONE)
    }

    pub fn monomial(coeff: Rational, m: Monomial) -> Self {
        let mut p = Self::zero();
        p.add_term(m, coeff);
        p
    }

    /// `z^zexp u^udeg` with coefficient one.
    pub fn zu(zexp: i64, udeg: u32) -> Self {
        Self::monomial(Rational::one(), Monomial::new(zexp, udeg))
    }

    pub fn constant(c: Rational) -> Self {
        Self::monomial(c, Monomial::ONE)
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, Rational)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                *existing += c;
                if existing.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn monomials(&self) -> impl Iterator<Item = Monomial> + '_ {
        self.terms.keys().copied()
    }

    pub fn coeff(&self, m: Monomial) -> Rational {
        self.terms.get(&m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        BiLaurent {
            terms: self.terms.iter().map(|(m, a)| (*m, a * c)).collect(),
        }
    }

    /// Multiplication by a single monomial (a shift of every exponent).
    pub fn shift(&self, m: Monomial) -> Self {
        BiLaurent {
            terms: self
                .terms
                .iter()
                .map(|(k, a)| (k.mul(m), a.clone()))
                .collect(),
        }
    }

    pub fn min_udeg(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.udeg).min()
    }

    pub fn max_udeg(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.udeg).max()
    }

    pub fn zexp_range(&self) -> Option<(i64, i64)> {
        let mut it = self.terms.keys().map(|m| m.zexp);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), e| (lo.min(e), hi.max(e))))
    }

    pub fn is_holomorphic_u(&self) -> bool {
        self.terms.keys().all(|m| m.is_holomorphic_u())
    }

    pub fn is_holomorphic_v(&self) -> bool {
        self.terms.keys().all(|m| m.is_holomorphic_v())
    }

    /// Terms that are not holomorphic on `V`.
    pub fn non_v_part(&self) -> Self {
        self.filter(|m| !m.is_holomorphic_v())
    }

    pub fn filter<F: Fn(Monomial) -> bool>(&self, keep: F) -> Self {
        BiLaurent {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(**m))
                .map(|(m, c)| (*m, c.clone()))
                .collect(),
        }
    }

    pub fn truncate(&self, w: &Window) -> Self {
        self.filter(|m| w.contains(&m))
    }

    /// Drops every term of u-degree above `umax`.
    pub fn truncate_udeg(&self, umax: u32) -> Self {
        self.filter(|m| m.udeg <= umax)
    }

    pub fn to_v_chart(&self) -> VChartPoly {
        VChartPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.to_v_chart(), c.clone()))
                .collect(),
        }
    }

    /// Multiplicative identity check used by matrix inversion: a nonzero
    /// constant times a pure power of `z`.
    pub fn as_unit(&self) -> Option<(Rational, i64)> {
        if self.terms.len() != 1 {
            return None;
        }
        let (m, c) = self.terms.iter().next()?;
        (m.udeg == 0).then(|| (c.clone(), m.zexp))
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// True when every coefficient is an integer.
    pub fn is_integral(&self) -> bool {
        self.terms.values().all(|c| c.is_integer())
    }

    pub fn max_abs_coeff(&self) -> Rational {
        self.terms
            .values()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }
}

/// Is `q` holomorphic on the chart `U` (no negative powers of `z`)?
pub fn is_holomorphic_u(q: &BiLaurent) -> bool {
    q.is_holomorphic_u()
}

/// Is `q` holomorphic on the chart `V` (every term `z^l u^i` has `l <= i`)?
pub fn is_holomorphic_v(q: &BiLaurent) -> bool {
    q.is_holomorphic_v()
}

pub fn to_v_chart(q: &BiLaurent) -> VChartPoly {
    q.to_v_chart()
}

pub fn truncate(q: &BiLaurent, w: &Window) -> BiLaurent {
    q.truncate(w)
}

/// A polynomial written in the `V` chart coordinates `(xi, v)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VChartPoly {
    terms: BTreeMap<(i64, u32), Rational>,
}

impl VChartPoly {
    pub fn terms(&self) -> impl Iterator<Item = (&(i64, u32), &Rational)> {
        self.terms.iter()
    }

    /// Holomorphic on `V` in the ordinary sense: no negative power of `xi`.
    pub fn is_holomorphic(&self) -> bool {
        self.terms.keys().all(|(xi, _)| *xi >= 0)
    }

    /// Back to `U` coordinates: `xi^a v^b = z^(b-a) u^b`.
    pub fn to_u_chart(&self) -> BiLaurent {
        BiLaurent::from_terms(
            self.terms
                .iter()
                .map(|((a, b), c)| (Monomial::new(*b as i64 - a, *b), c.clone())),
        )
    }
}

impl fmt::Display for VChartPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (idx, ((a, b), c)) in self.terms.iter().enumerate() {
            let factors: Vec<String> = [("xi", *a), ("v", *b as i64)]
                .iter()
                .filter(|(_, e)| *e != 0)
                .map(|(name, e)| {
                    if *e == 1 {
                        name.to_string()
                    } else {
                        format!("{name}^{e}")
                    }
                })
                .collect();
            parse::write_term(f, idx == 0, c, &factors)?;
        }
        Ok(())
    }
}

/// Retained monomials: `udeg <= umax` and `zmin <= zexp <= zmax`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Window {
    pub umax: u32,
    pub zmin: i64,
    pub zmax: i64,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("invalid window: zmin {zmin} exceeds zmax {zmax}")]
pub struct WindowError {
    pub zmin: i64,
    pub zmax: i64,
}

impl Window {
    pub fn new(umax: u32, zmin: i64, zmax: i64) -> Result<Self, WindowError> {
        if zmin > zmax {
            return Err(WindowError { zmin, zmax });
        }
        Ok(Window { umax, zmin, zmax })
    }

    pub fn contains(&self, m: &Monomial) -> bool {
        m.udeg <= self.umax && self.zmin <= m.zexp && m.zexp <= self.zmax
    }

    pub fn enlarged(&self, du: u32, dz: i64) -> Self {
        Window {
            umax: self.umax + du,
            zmin: self.zmin - dz,
            zmax: self.zmax + dz,
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u<={} z in [{}, {}]", self.umax, self.zmin, self.zmax)
    }
}

impl fmt::Display for BiLaurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (idx, (m, c)) in self.terms.iter().enumerate() {
            let mut factors = Vec::new();
            match m.zexp {
                0 => {}
                1 => factors.push("z".to_string()),
                e => factors.push(format!("z^{e}")),
            }
            match m.udeg {
                0 => {}
                1 => factors.push("u".to_string()),
                e => factors.push(format!("u^{e}")),
            }
            parse::write_term(f, idx == 0, c, &factors)?;
        }
        Ok(())
    }
}

impl std::str::FromStr for BiLaurent {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_polynomial(s)
    }
}

impl<'a> Add<&'a BiLaurent> for &'a BiLaurent {
    type Output = BiLaurent;

    fn add(self, rhs: &'a BiLaurent) -> BiLaurent {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for BiLaurent {
    type Output = BiLaurent;

    fn add(mut self, rhs: BiLaurent) -> BiLaurent {
        self += &rhs;
        self
    }
}

impl AddAssign<&BiLaurent> for BiLaurent {
    fn add_assign(&mut self, rhs: &BiLaurent) {
        for (m, c) in &rhs.terms {
            self.add_term(*m, c.clone());
        }
    }
}

impl SubAssign<&BiLaurent> for BiLaurent {
    fn sub_assign(&mut self, rhs: &BiLaurent) {
        for (m, c) in &rhs.terms {
            self.add_term(*m, -c.clone());
        }
    }
}

impl<'a> Sub<&'a BiLaurent> for &'a BiLaurent {
    type Output = BiLaurent;

    fn sub(self, rhs: &'a BiLaurent) -> BiLaurent {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Sub for BiLaurent {
    type Output = BiLaurent;

    fn sub(mut self, rhs: BiLaurent) -> BiLaurent {
        self -= &rhs;
        self
    }
}

impl Neg for &BiLaurent {
    type Output = BiLaurent;

    fn neg(self) -> BiLaurent {
        BiLaurent {
            terms: self.terms.iter().map(|(m, c)| (*m, -c.clone())).collect(),
        }
    }
}

impl Neg for BiLaurent {
    type Output = BiLaurent;

    fn neg(self) -> BiLaurent {
        -&self
    }
}

impl<'a> Mul<&'a BiLaurent> for &'a BiLaurent {
    type Output = BiLaurent;

    fn mul(self, rhs: &'a BiLaurent) -> BiLaurent {
        let mut out = BiLaurent::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(*mb), ca * cb);
            }
        }
        out
    }
}

impl Mul for BiLaurent {
    type Output = BiLaurent;

    fn mul(self, rhs: BiLaurent) -> BiLaurent {
        &self * &rhs
    }
}
