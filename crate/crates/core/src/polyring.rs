//! Univariate polynomials over F_q.
//!
//! Polynomials are enumerated by reading the base-q digits of an integer `m`
//! as coefficient indices: `f_m = sum a_i x^i` where `m = sum a_i q^i`. So
//! the indices `0..q^d` are exactly the polynomials of degree below `d`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::ffield::{FieldElement, FieldSpec};

/// Upper bound on the number of monic candidates `irreducibles_up_to` may scan.
pub const ENUMERATION_BUDGET: u64 = 1 << 24;

/// A polynomial over F_q with coefficient indices stored low-degree first.
///
/// Always trimmed: the last stored coefficient is nonzero and the zero
/// polynomial stores nothing.
#[derive(Clone, PartialEq, Eq)]
pub struct Poly {
    field: FieldSpec,
    coeffs: Vec<u32>,
}

/// An eventually-zero digit sequence over `{0, ..., q-1}`, trimmed of
/// trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DigitVector {
    q: u64,
    digits: Vec<u64>,
}

impl DigitVector {
    pub fn new(q: u64, mut digits: Vec<u64>) -> Result<Self> {
        if q < 2 {
            return Err(Error::invalid(
                "q",
                format!("q must be at least 2, got {q}"),
            ));
        }
        if let Some(&d) = digits.iter().find(|&&d| d >= q) {
            return Err(Error::invalid(
                "digits",
                format!("digit {d} is not below q = {q}"),
            ));
        }
        while digits.last() == Some(&0) {
            digits.pop();
        }
        Ok(DigitVector { q, digits })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    /// Digit at position `i`; zero past the stored prefix.
    pub fn get(&self, i: usize) -> u64 {
        self.digits.get(i).copied().unwrap_or(0)
    }
}

/// `chi(a_0, a_1, ...) = sum a_i q^i`.
pub fn chi(v: &DigitVector) -> BigUint {
    let q = BigUint::from(v.q);
    v.digits
        .iter()
        .rev()
        .fold(BigUint::zero(), |acc, &d| acc * &q + BigUint::from(d))
}

/// Inverse of [`chi`]: the base-q digits of `m`.
pub fn chi_inv(q: u64, m: &BigUint) -> Result<DigitVector> {
    if q < 2 {
        return Err(Error::invalid(
            "q",
            format!("q must be at least 2, got {q}"),
        ));
    }
    DigitVector::new(q, base_q_digits(m, q))
}

fn base_q_digits(m: &BigUint, q: u64) -> Vec<u64> {
    let q = BigUint::from(q);
    let mut rest = m.clone();
    let mut digits = Vec::new();
    while !rest.is_zero() {
        let (quot, rem) = rest.div_rem(&q);
        digits.push(rem.to_u64().expect("digit below q"));
        rest = quot;
    }
    digits
}

impl Poly {
    pub fn zero(field: &FieldSpec) -> Poly {
        Poly {
            field: field.clone(),
            coeffs: Vec::new(),
        }
    }

    pub fn one(field: &FieldSpec) -> Poly {
        Poly {
            field: field.clone(),
            coeffs: vec![1],
        }
    }

    pub fn x(field: &FieldSpec) -> Poly {
        Poly {
            field: field.clone(),
            coeffs: vec![0, 1],
        }
    }

    /// Builds a polynomial from coefficient indices, low degree first.
    pub fn from_coeffs(field: &FieldSpec, coeffs: Vec<u32>) -> Result<Poly> {
        for &c in &coeffs {
            field.check_index(c as u64)?;
        }
        Ok(Poly::from_raw(field, coeffs))
    }

    pub fn from_elements(field: &FieldSpec, coeffs: &[FieldElement]) -> Result<Poly> {
        let mut raw = Vec::with_capacity(coeffs.len());
        for c in coeffs {
            field.same_field(c.field())?;
            raw.push(c.raw());
        }
        Ok(Poly::from_raw(field, raw))
    }

    pub(crate) fn from_raw(field: &FieldSpec, mut coeffs: Vec<u32>) -> Poly {
        trim(&mut coeffs);
        Poly {
            field: field.clone(),
            coeffs,
        }
    }

    pub fn constant(field: &FieldSpec, c: u32) -> Result<Poly> {
        Poly::from_coeffs(field, vec![c])
    }

    /// `f_m` for a machine-sized index.
    pub fn from_index(field: &FieldSpec, m: u64) -> Poly {
        let q = field.q();
        let mut coeffs = Vec::new();
        let mut m = m;
        while m > 0 {
            coeffs.push((m % q) as u32);
            m /= q;
        }
        Poly {
            field: field.clone(),
            coeffs,
        }
    }

    pub fn from_index_big(field: &FieldSpec, m: &BigUint) -> Poly {
        let digits = base_q_digits(m, field.q());
        Poly::from_raw(field, digits.into_iter().map(|d| d as u32).collect())
    }

    /// `f_m` for a signed index; negative `m` is rejected.
    pub fn from_index_signed(field: &FieldSpec, m: &BigInt) -> Result<Poly> {
        match m.sign() {
            Sign::Minus => Err(Error::NegativeIndex(m.to_string())),
            _ => Ok(Poly::from_index_big(field, m.magnitude())),
        }
    }

    pub fn from_digit_vector(field: &FieldSpec, v: &DigitVector) -> Result<Poly> {
        if v.q != field.q() {
            return Err(Error::FieldMismatch {
                left: field.q(),
                right: v.q,
            });
        }
        Ok(Poly::from_raw(
            field,
            v.digits.iter().map(|&d| d as u32).collect(),
        ))
    }

    /// The index `m` with `f_m = self`.
    pub fn to_index(&self) -> BigUint {
        let q = BigUint::from(self.field.q());
        self.coeffs
            .iter()
            .rev()
            .fold(BigUint::zero(), |acc, &c| acc * &q + BigUint::from(c))
    }

    pub fn to_index_u64(&self) -> Option<u64> {
        let q = self.field.q();
        self.coeffs
            .iter()
            .rev()
            .try_fold(0u64, |acc, &c| acc.checked_mul(q)?.checked_add(c as u64))
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn coeffs(&self) -> &[u32] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> u32 {
        self.coeffs.get(i).copied().unwrap_or(0)
    }

    /// `None` for the zero polynomial. `Option`'s ordering puts `None` below
    /// every real degree.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs == [1]
    }

    /// Nonzero constant.
    pub fn is_unit(&self) -> bool {
        self.coeffs.len() == 1
    }

    pub fn leading(&self) -> u32 {
        self.coeffs.last().copied().unwrap_or(0)
    }

    pub fn is_monic(&self) -> bool {
        self.leading() == 1
    }

    /// Scales to leading coefficient one. Zero stays zero.
    pub fn monic(&self) -> Poly {
        match self.coeffs.last() {
            None | Some(&1) => self.clone(),
            Some(&lc) => {
                let inv = self.field.inv_raw(lc).expect("nonzero leading coefficient");
                self.scale(inv)
            }
        }
    }

    pub fn scale(&self, c: u32) -> Poly {
        if c == 0 {
            return Poly::zero(&self.field);
        }
        let f = &self.field;
        Poly {
            field: f.clone(),
            coeffs: self.coeffs.iter().map(|&a| f.mul_raw(a, c)).collect(),
        }
    }

    pub fn try_add(&self, rhs: &Poly) -> Result<Poly> {
        self.field.same_field(&rhs.field)?;
        Ok(self + rhs)
    }

    pub fn try_sub(&self, rhs: &Poly) -> Result<Poly> {
        self.field.same_field(&rhs.field)?;
        Ok(self - rhs)
    }

    pub fn try_mul(&self, rhs: &Poly) -> Result<Poly> {
        self.field.same_field(&rhs.field)?;
        Ok(self * rhs)
    }

    /// Euclidean division: `self = quotient * divisor + remainder` with
    /// `deg remainder < deg divisor`.
    pub fn div_rem(&self, divisor: &Poly) -> Result<(Poly, Poly)> {
        self.field.same_field(&divisor.field)?;
        if divisor.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let f = &self.field;
        let dd = divisor.coeffs.len() - 1;
        let lead_inv = f.inv_raw(divisor.leading())?;
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return Ok((Poly::zero(f), self.clone()));
        }
        let mut quot = vec![0u32; rem.len() - dd];
        while rem.len() > dd {
            let top = rem.len() - 1;
            let c = f.mul_raw(rem[top], lead_inv);
            let shift = top - dd;
            quot[shift] = c;
            for (i, &d) in divisor.coeffs.iter().enumerate() {
                rem[shift + i] = f.sub_raw(rem[shift + i], f.mul_raw(c, d));
            }
            trim(&mut rem);
        }
        Ok((Poly::from_raw(f, quot), Poly::from_raw(f, rem)))
    }

    pub fn rem(&self, divisor: &Poly) -> Result<Poly> {
        self.field.same_field(&divisor.field)?;
        if divisor.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let mut r = self.coeffs.clone();
        rem_in_place(&self.field, &mut r, &divisor.coeffs);
        Ok(Poly::from_raw(&self.field, r))
    }

    /// True when `divisor | self`. Everything divides zero, and zero divides
    /// only zero.
    pub fn is_divisible_by(&self, divisor: &Poly) -> bool {
        if divisor.is_zero() {
            return self.is_zero();
        }
        let mut r = self.coeffs.clone();
        rem_in_place(&self.field, &mut r, &divisor.coeffs);
        r.is_empty()
    }

    /// Monic greatest common divisor; `gcd(0, 0) = 0`.
    pub fn gcd(&self, other: &Poly) -> Result<Poly> {
        self.field.same_field(&other.field)?;
        Ok(gcd_unchecked(self, other))
    }

    /// Index order: by degree, then by coefficients from the top down. Agrees
    /// with comparing `to_index()` values.
    pub fn cmp_index(&self, other: &Poly) -> Ordering {
        self.coeffs
            .len()
            .cmp(&other.coeffs.len())
            .then_with(|| self.coeffs.iter().rev().cmp(other.coeffs.iter().rev()))
    }

    /// Renders like `2x^2+x+1` with coefficient indices as multipliers.
    pub fn to_human(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut terms = Vec::new();
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let coef = if c == 1 && i > 0 {
                String::new()
            } else {
                c.to_string()
            };
            terms.push(match i {
                0 => coef,
                1 => format!("{coef}x"),
                _ => format!("{coef}x^{i}"),
            });
        }
        terms.join("+")
    }
}

impl fmt::Display for Poly {
    /// Comma-separated coefficient indices, ascending; empty for zero.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) over {}", self.to_human(), self.field)
    }
}

fn trim(coeffs: &mut Vec<u32>) {
    while coeffs.last() == Some(&0) {
        coeffs.pop();
    }
}

fn rem_in_place(f: &FieldSpec, r: &mut Vec<u32>, divisor: &[u32]) {
    let dd = divisor.len() - 1;
    let lead = divisor[dd];
    let lead_inv = if lead == 1 {
        1
    } else {
        f.inv_raw(lead).expect("nonzero leading coefficient")
    };
    trim(r);
    while r.len() > dd {
        let top = r.len() - 1;
        let c = f.mul_raw(r[top], lead_inv);
        let shift = top - dd;
        for (i, &d) in divisor.iter().enumerate() {
            r[shift + i] = f.sub_raw(r[shift + i], f.mul_raw(c, d));
        }
        trim(r);
    }
}

pub(crate) fn gcd_unchecked(a: &Poly, b: &Poly) -> Poly {
    let f = &a.field;
    let mut x = a.coeffs.clone();
    let mut y = b.coeffs.clone();
    while !y.is_empty() {
        rem_in_place(f, &mut x, &y);
        std::mem::swap(&mut x, &mut y);
    }
    Poly::from_raw(f, x).monic()
}

fn add_slices(f: &FieldSpec, a: &[u32], b: &[u32]) -> Vec<u32> {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut out = long.to_vec();
    for (o, &s) in out.iter_mut().zip(short) {
        *o = f.add_raw(*o, s);
    }
    out
}

impl Add for &Poly {
    type Output = Poly;

    /// Panics if the operands live in different fields; see [`Poly::try_add`].
    fn add(self, rhs: &Poly) -> Poly {
        assert!(self.field == rhs.field, "field mismatch in polynomial add");
        Poly::from_raw(
            &self.field,
            add_slices(&self.field, &self.coeffs, &rhs.coeffs),
        )
    }
}

impl Neg for &Poly {
    type Output = Poly;

    fn neg(self) -> Poly {
        let f = &self.field;
        Poly {
            field: f.clone(),
            coeffs: self.coeffs.iter().map(|&c| f.neg_raw(c)).collect(),
        }
    }
}

impl Sub for &Poly {
    type Output = Poly;

    fn sub(self, rhs: &Poly) -> Poly {
        assert!(self.field == rhs.field, "field mismatch in polynomial sub");
        let f = &self.field;
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n)
            .map(|i| f.sub_raw(self.coeff(i), rhs.coeff(i)))
            .collect();
        Poly::from_raw(f, coeffs)
    }
}

impl Mul for &Poly {
    type Output = Poly;

    fn mul(self, rhs: &Poly) -> Poly {
        assert!(self.field == rhs.field, "field mismatch in polynomial mul");
        let f = &self.field;
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero(f);
        }
        let mut out = vec![0u32; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = f.add_raw(out[i + j], f.mul_raw(a, b));
            }
        }
        // Product of nonzero leading coefficients is nonzero in a field.
        Poly {
            field: f.clone(),
            coeffs: out,
        }
    }
}

/// Parses either the comma format (`"1,0,2"`, empty for zero) or the human
/// format (`"2x^2+x+1"`), with coefficients given as element indices.
pub fn parse_poly(field: &FieldSpec, text: &str) -> Result<Poly> {
    let t = text.trim();
    if t.contains('x') {
        parse_human(field, text)
    } else {
        parse_comma(field, text)
    }
}

fn parse_comma(field: &FieldSpec, text: &str) -> Result<Poly> {
    if text.trim().is_empty() {
        return Ok(Poly::zero(field));
    }
    let mut coeffs = Vec::new();
    let mut pos = 0;
    for part in text.split(',') {
        let tok = part.trim();
        let c: u64 = tok.parse().map_err(|_| {
            Error::parse(pos, format!("expected a coefficient index, found {tok:?}"))
        })?;
        if c >= field.q() {
            return Err(Error::parse(
                pos,
                format!("coefficient {c} is not below q = {}", field.q()),
            ));
        }
        coeffs.push(c as u32);
        pos += part.len() + 1;
    }
    Ok(Poly::from_raw(field, coeffs))
}

fn parse_human(field: &FieldSpec, text: &str) -> Result<Poly> {
    let mut terms: BTreeMap<usize, u32> = BTreeMap::new();
    let mut pos = 0;
    for raw in text.split('+') {
        let term: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
        let err = |msg: String| Error::parse(pos, msg);
        if term.is_empty() {
            return Err(err("empty term".into()));
        }
        let (coef_part, exp) = match term.find('x') {
            None => (term.as_str(), 0usize),
            Some(ix) => {
                let rest = &term[ix + 1..];
                let exp = if rest.is_empty() {
                    1
                } else if let Some(e) = rest.strip_prefix('^') {
                    e.parse().map_err(|_| err(format!("bad exponent {e:?}")))?
                } else {
                    return Err(err(format!("unexpected {rest:?} after x")));
                };
                (term[..ix].trim_end_matches('*'), exp)
            }
        };
        let coef: u64 = if coef_part.is_empty() {
            1
        } else {
            coef_part
                .parse()
                .map_err(|_| err(format!("bad coefficient {coef_part:?}")))?
        };
        if coef >= field.q() {
            return Err(err(format!(
                "coefficient {coef} is not below q = {}",
                field.q()
            )));
        }
        let slot = terms.entry(exp).or_insert(0);
        *slot = field.add_raw(*slot, coef as u32);
        pos += raw.len() + 1;
    }
    let deg = terms.keys().next_back().copied().unwrap_or(0);
    let mut coeffs = vec![0u32; deg + 1];
    for (e, c) in terms {
        coeffs[e] = c;
    }
    Ok(Poly::from_raw(field, coeffs))
}

/// Monic irreducible test by trial division with every monic polynomial of
/// degree `1..=deg/2`. Constants and non-monic inputs are not irreducible.
pub fn is_irreducible(f: &Poly) -> bool {
    let Some(deg) = f.degree() else {
        return false;
    };
    if deg == 0 || !f.is_monic() {
        return false;
    }
    let field = f.field();
    let q = field.q();
    for d in 1..=deg / 2 {
        let start = q.pow(d as u32);
        for m in start..2 * start {
            // indices [q^d, 2 q^d) are the monic polynomials of degree d
            let g = Poly::from_index(field, m);
            if f.is_divisible_by(&g) {
                return false;
            }
        }
    }
    true
}

/// Möbius function by trial factorisation.
fn mobius(n: u64) -> i32 {
    assert!(n >= 1);
    let mut n = n;
    let mut sign = 1;
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            n /= d;
            if n.is_multiple_of(d) {
                return 0;
            }
            sign = -sign;
        }
        d += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

/// Number of monic irreducibles of degree `m` over F_q, from the necklace
/// formula `(1/m) sum_{d | m} mu(d) q^(m/d)`.
pub fn count_irreducibles(q: u64, m: u32) -> Result<BigUint> {
    if m < 1 {
        return Err(Error::invalid("m", "degree must be at least 1"));
    }
    if q < 2 {
        return Err(Error::invalid(
            "q",
            format!("q must be at least 2, got {q}"),
        ));
    }
    let qb = BigInt::from(q);
    let mut sum = BigInt::zero();
    for d in (1..=m).filter(|d| m.is_multiple_of(*d)) {
        let mu = mobius(d as u64);
        if mu != 0 {
            sum += BigInt::from(mu) * num_traits::pow(qb.clone(), (m / d) as usize);
        }
    }
    let (quot, rem) = (&sum / BigInt::from(m), &sum % BigInt::from(m));
    debug_assert!(rem.is_zero());
    Ok(quot.to_biguint().expect("count is nonnegative"))
}

/// Counts `phi_m` for `m = 1..` and, up to `t`, the explicit lists.
#[derive(Clone, Debug)]
pub struct IrreducibleTable {
    field: FieldSpec,
    counts: BTreeMap<u32, BigUint>,
    lists: BTreeMap<u32, Vec<Poly>>,
}

impl IrreducibleTable {
    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn count(&self, m: u32) -> Option<&BigUint> {
        self.counts.get(&m)
    }

    pub fn list(&self, m: u32) -> Option<&[Poly]> {
        self.lists.get(&m).map(Vec::as_slice)
    }

    pub fn max_degree(&self) -> u32 {
        self.lists.keys().next_back().copied().unwrap_or(0)
    }

    /// Every listed irreducible, by degree then index.
    pub fn all(&self) -> impl Iterator<Item = &Poly> {
        self.lists.values().flatten()
    }
}

/// Lists the monic irreducibles of every degree `1..=t`, each list in index
/// order.
pub fn irreducibles_up_to(field: &FieldSpec, t: u32) -> Result<IrreducibleTable> {
    if t < 1 {
        return Err(Error::invalid("t", "degree bound must be at least 1"));
    }
    let q = field.q();
    let mut candidates: u64 = 0;
    for m in 1..=t {
        candidates = q
            .checked_pow(m)
            .and_then(|c| candidates.checked_add(c))
            .filter(|&c| c <= ENUMERATION_BUDGET)
            .ok_or_else(|| Error::BudgetExceeded {
                what: "irreducible enumeration",
                required: format!("sum of {q}^m for m <= {t}"),
                budget: ENUMERATION_BUDGET,
            })?;
    }
    let mut lists: BTreeMap<u32, Vec<Poly>> = BTreeMap::new();
    let mut counts = BTreeMap::new();
    for m in 1..=t {
        let start = q.pow(m);
        let mut found = Vec::new();
        for idx in start..2 * start {
            let f = Poly::from_index(field, idx);
            let reducible = lists
                .range(1..=m / 2)
                .flat_map(|(_, l)| l)
                .any(|g| f.is_divisible_by(g));
            if !reducible {
                found.push(f);
            }
        }
        counts.insert(m, count_irreducibles(q, m)?);
        lists.insert(m, found);
    }
    Ok(IrreducibleTable {
        field: field.clone(),
        counts,
        lists,
    })
}

/// Coefficients of `prod_{f listed} (1 - T^deg f)^(-1)` up to `T^order`.
pub fn euler_product_coefficients(table: &IrreducibleTable, order: usize) -> Vec<BigUint> {
    let mut series = vec![BigUint::zero(); order + 1];
    series[0] = BigUint::one();
    for f in table.all() {
        let d = f.degree().expect("irreducibles are nonzero");
        // multiply by 1/(1 - T^d): s[i] += s[i - d], ascending
        for i in d..=order {
            let prev = series[i - d].clone();
            series[i] += prev;
        }
    }
    series
}

/// `phi_m` as a machine integer, for callers that know it is small.
pub fn count_irreducibles_u64(q: u64, m: u32) -> Result<u64> {
    count_irreducibles(q, m)?
        .to_u64()
        .ok_or_else(|| Error::invalid("m", "irreducible count exceeds 64 bits"))
}
