//! Finite fields F_q, q = p^e.
//!
//! Elements are identified with integers `0..q` through their base-p digit
//! expansion against the power basis `1, x, ..., x^(e-1)` of
//! `F_p[x]/(modulus)`. Index 0 is zero and index 1 is one. The modulus is the
//! irreducible of degree `e` with the smallest index, so every field is built
//! the same way on every run.
//!
//! Hot loops work on raw `u32` indices through the `*_raw` methods of
//! [`FieldSpec`]; [`FieldElement`] is the checked, self-describing value type.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;

use crate::error::{Error, Result};

/// Largest supported field order. Element indices are stored as `u32`.
pub const MAX_ORDER: u64 = 1 << 31;

/// Extension fields at or below this order get full addition and
/// multiplication tables.
const TABLE_LIMIT: u64 = 256;

/// Common interface of the finite fields used for rank computations.
///
/// Implemented by [`FieldSpec`] (elements are raw indices) and by the residue
/// fields `F_q[x]/(f)` built in [`crate::polymatrix`].
pub trait FiniteField {
    type Elem: Clone + PartialEq + fmt::Debug;

    fn order(&self) -> BigUint;
    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn inv(&self, a: &Self::Elem) -> Result<Self::Elem>;
}

struct Tables {
    add: Vec<u32>,
    mul: Vec<u32>,
    neg: Vec<u32>,
    inv: Vec<u32>,
}

struct Inner {
    p: u32,
    e: u32,
    q: u32,
    // F_p coefficients, ascending, monic of degree e. Empty when e = 1.
    modulus: Vec<u32>,
    tables: Option<Tables>,
}

/// A validated finite field description. Cheap to clone and share.
#[derive(Clone)]
pub struct FieldSpec(Arc<Inner>);

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Splits `q` into `(p, e)` with `q = p^e`, or `None` if `q` is not a prime power.
pub fn prime_power_decompose(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let mut p = 0;
    let mut d = 2u64;
    while d.saturating_mul(d) <= q {
        if q.is_multiple_of(d) {
            p = d;
            break;
        }
        d += 1;
    }
    if p == 0 {
        return Some((q, 1));
    }
    let mut rest = q;
    let mut e = 0;
    while rest.is_multiple_of(p) {
        rest /= p;
        e += 1;
    }
    (rest == 1).then_some((p, e))
}

/// Builds F_q for `q = p^e` with its canonical modulus.
pub fn make_field(p: u64, e: u32) -> Result<FieldSpec> {
    FieldSpec::new(p, e)
}

impl FieldSpec {
    pub fn new(p: u64, e: u32) -> Result<Self> {
        if e < 1 {
            return Err(Error::InvalidExponent { e });
        }
        if !is_prime(p) {
            return Err(Error::NotPrime { p });
        }
        let q = checked_pow(p, e)
            .filter(|&q| q <= MAX_ORDER)
            .ok_or(Error::OrderOverflow {
                p,
                e,
                max: MAX_ORDER,
            })?;
        let p32 = p as u32;
        let modulus = if e == 1 {
            Vec::new()
        } else {
            smallest_irreducible(p32, e as usize)
        };
        let mut inner = Inner {
            p: p32,
            e,
            q: q as u32,
            modulus,
            tables: None,
        };
        if e > 1 && q <= TABLE_LIMIT {
            inner.tables = Some(build_tables(&inner));
        }
        Ok(FieldSpec(Arc::new(inner)))
    }

    /// Builds the field with `q` elements.
    pub fn with_order(q: u64) -> Result<Self> {
        let (p, e) = prime_power_decompose(q).ok_or(Error::NotPrimePower { q })?;
        FieldSpec::new(p, e)
    }

    pub fn p(&self) -> u64 {
        self.0.p as u64
    }

    pub fn e(&self) -> u32 {
        self.0.e
    }

    pub fn q(&self) -> u64 {
        self.0.q as u64
    }

    /// The defining modulus over F_p as ascending digit coefficients
    /// (length `e + 1`), or `None` for a prime field.
    pub fn modulus(&self) -> Option<&[u32]> {
        (self.0.e > 1).then_some(self.0.modulus.as_slice())
    }

    pub fn element(&self, index: u64) -> Result<FieldElement> {
        self.check_index(index)?;
        Ok(FieldElement {
            field: self.clone(),
            index: index as u32,
        })
    }

    pub fn zero_element(&self) -> FieldElement {
        FieldElement {
            field: self.clone(),
            index: 0,
        }
    }

    pub fn one_element(&self) -> FieldElement {
        FieldElement {
            field: self.clone(),
            index: 1,
        }
    }

    /// Builds the element with the given power-basis digits (low first).
    pub fn element_from_digits(&self, digits: &[u32]) -> Result<FieldElement> {
        if digits.len() > self.0.e as usize {
            return Err(Error::invalid(
                "digits",
                format!("expected at most {} digits", self.0.e),
            ));
        }
        if let Some(&d) = digits.iter().find(|&&d| d >= self.0.p) {
            return Err(Error::invalid(
                "digits",
                format!("digit {d} is not below p = {}", self.0.p),
            ));
        }
        Ok(FieldElement {
            field: self.clone(),
            index: encode(digits, self.0.p),
        })
    }

    pub(crate) fn check_index(&self, index: u64) -> Result<()> {
        if index >= self.q() {
            return Err(Error::IndexOutOfRange { index, q: self.q() });
        }
        Ok(())
    }

    pub(crate) fn same_field(&self, other: &FieldSpec) -> Result<()> {
        if Arc::ptr_eq(&self.0, &other.0) || self == other {
            Ok(())
        } else {
            Err(Error::FieldMismatch {
                left: self.q(),
                right: other.q(),
            })
        }
    }

    // Unchecked index arithmetic. Callers guarantee that all indices are < q.

    #[inline]
    pub fn add_raw(&self, a: u32, b: u32) -> u32 {
        let f = &*self.0;
        if f.e == 1 {
            let s = a as u64 + b as u64;
            let p = f.p as u64;
            return if s >= p { (s - p) as u32 } else { s as u32 };
        }
        if let Some(t) = &f.tables {
            return t.add[(a * f.q + b) as usize];
        }
        let mut da = decode(a, f.p, f.e);
        let db = decode(b, f.p, f.e);
        for (x, y) in da.iter_mut().zip(db) {
            *x = (*x + y) % f.p;
        }
        encode(&da, f.p)
    }

    #[inline]
    pub fn neg_raw(&self, a: u32) -> u32 {
        let f = &*self.0;
        if f.e == 1 {
            return if a == 0 { 0 } else { f.p - a };
        }
        if let Some(t) = &f.tables {
            return t.neg[a as usize];
        }
        let da: Vec<u32> = decode(a, f.p, f.e)
            .into_iter()
            .map(|d| (f.p - d) % f.p)
            .collect();
        encode(&da, f.p)
    }

    #[inline]
    pub fn sub_raw(&self, a: u32, b: u32) -> u32 {
        self.add_raw(a, self.neg_raw(b))
    }

    #[inline]
    pub fn mul_raw(&self, a: u32, b: u32) -> u32 {
        let f = &*self.0;
        if f.e == 1 {
            return ((a as u64 * b as u64) % f.p as u64) as u32;
        }
        if let Some(t) = &f.tables {
            return t.mul[(a * f.q + b) as usize];
        }
        mul_slow(f, a, b)
    }

    pub fn pow_raw(&self, a: u32, mut exp: u64) -> u32 {
        let mut base = a;
        let mut acc = 1u32;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul_raw(acc, base);
            }
            base = self.mul_raw(base, base);
            exp >>= 1;
        }
        acc
    }

    pub fn inv_raw(&self, a: u32) -> Result<u32> {
        if a == 0 {
            return Err(Error::DivisionByZero);
        }
        if let Some(t) = &self.0.tables {
            return Ok(t.inv[a as usize]);
        }
        Ok(self.pow_raw(a, self.q() - 2))
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.0.p == other.0.p && self.0.e == other.0.e
    }
}

impl Eq for FieldSpec {}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("p", &self.0.p)
            .field("e", &self.0.e)
            .field("q", &self.0.q)
            .field("modulus", &self.0.modulus)
            .finish()
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.0.q)
    }
}

impl FiniteField for FieldSpec {
    type Elem = u32;

    fn order(&self) -> BigUint {
        BigUint::from(self.q())
    }
    fn zero(&self) -> u32 {
        0
    }
    fn one(&self) -> u32 {
        1
    }
    fn is_zero(&self, a: &u32) -> bool {
        *a == 0
    }
    fn add(&self, a: &u32, b: &u32) -> u32 {
        self.add_raw(*a, *b)
    }
    fn sub(&self, a: &u32, b: &u32) -> u32 {
        self.sub_raw(*a, *b)
    }
    fn mul(&self, a: &u32, b: &u32) -> u32 {
        self.mul_raw(*a, *b)
    }
    fn neg(&self, a: &u32) -> u32 {
        self.neg_raw(*a)
    }
    fn inv(&self, a: &u32) -> Result<u32> {
        self.inv_raw(*a)
    }
}

/// An element of F_q together with the field it belongs to.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldElement {
    field: FieldSpec,
    index: u32,
}

impl FieldElement {
    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn index(&self) -> u64 {
        self.index as u64
    }

    pub(crate) fn raw(&self) -> u32 {
        self.index
    }

    /// Power-basis digits, low first, always `e` of them.
    pub fn digits(&self) -> Vec<u32> {
        decode(self.index, self.field.0.p, self.field.0.e)
    }

    pub fn is_zero(&self) -> bool {
        self.index == 0
    }

    fn with(&self, index: u32) -> FieldElement {
        FieldElement {
            field: self.field.clone(),
            index,
        }
    }

    pub fn add(&self, rhs: &FieldElement) -> Result<FieldElement> {
        self.field.same_field(&rhs.field)?;
        Ok(self.with(self.field.add_raw(self.index, rhs.index)))
    }

    pub fn sub(&self, rhs: &FieldElement) -> Result<FieldElement> {
        self.field.same_field(&rhs.field)?;
        Ok(self.with(self.field.sub_raw(self.index, rhs.index)))
    }

    pub fn mul(&self, rhs: &FieldElement) -> Result<FieldElement> {
        self.field.same_field(&rhs.field)?;
        Ok(self.with(self.field.mul_raw(self.index, rhs.index)))
    }

    pub fn neg(&self) -> FieldElement {
        self.with(self.field.neg_raw(self.index))
    }

    pub fn inv(&self) -> Result<FieldElement> {
        Ok(self.with(self.field.inv_raw(self.index)?))
    }

    pub fn pow(&self, exp: u64) -> FieldElement {
        self.with(self.field.pow_raw(self.index, exp))
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.index, self.field)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index)
    }
}

fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    (0..exp).try_fold(1u64, |acc, _| acc.checked_mul(base))
}

fn decode(mut index: u32, p: u32, e: u32) -> Vec<u32> {
    let mut digits = vec![0; e as usize];
    for d in digits.iter_mut() {
        *d = index % p;
        index /= p;
    }
    digits
}

fn encode(digits: &[u32], p: u32) -> u32 {
    digits.iter().rev().fold(0u32, |acc, &d| acc * p + d)
}

fn mul_slow(f: &Inner, a: u32, b: u32) -> u32 {
    let p = f.p as u64;
    let e = f.e as usize;
    let da = decode(a, f.p, f.e);
    let db = decode(b, f.p, f.e);
    let mut prod = vec![0u64; 2 * e - 1];
    for (i, &x) in da.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in db.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x as u64 * y as u64) % p;
        }
    }
    // Reduce by the monic modulus from the top down.
    for top in (e..prod.len()).rev() {
        let c = prod[top];
        if c == 0 {
            continue;
        }
        prod[top] = 0;
        for (i, &m) in f.modulus[..e].iter().enumerate() {
            let idx = top - e + i;
            prod[idx] = (prod[idx] + (p - c) * m as u64) % p;
        }
    }
    let digits: Vec<u32> = prod[..e].iter().map(|&d| d as u32).collect();
    encode(&digits, f.p)
}

fn build_tables(f: &Inner) -> Tables {
    let q = f.q as usize;
    let mut add = vec![0u32; q * q];
    let mut mul = vec![0u32; q * q];
    let mut neg = vec![0u32; q];
    for a in 0..q as u32 {
        let da = decode(a, f.p, f.e);
        neg[a as usize] = encode(
            &da.iter().map(|&d| (f.p - d) % f.p).collect::<Vec<_>>(),
            f.p,
        );
        for b in 0..q as u32 {
            let db = decode(b, f.p, f.e);
            let sum: Vec<u32> = da.iter().zip(&db).map(|(x, y)| (x + y) % f.p).collect();
            add[a as usize * q + b as usize] = encode(&sum, f.p);
            mul[a as usize * q + b as usize] = mul_slow(f, a, b);
        }
    }
    let mut inv = vec![0u32; q];
    for a in 1..q {
        inv[a] = (1..q as u32)
            .find(|&b| mul[a * q + b as usize] == 1)
            .expect("nonzero element without inverse");
    }
    Tables { add, mul, neg, inv }
}

// F_p polynomial helpers used only to find the modulus. Coefficients ascending.

fn fp_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let mut r: Vec<u64> = a.iter().map(|&c| c as u64).collect();
    let p = p as u64;
    let dm = m.len() - 1;
    let lead_inv = inv_mod(m[dm] as u64, p);
    while let Some(&top) = r.last() {
        if top == 0 {
            r.pop();
            continue;
        }
        if r.len() <= dm {
            break;
        }
        let shift = r.len() - 1 - dm;
        let c = top * lead_inv % p;
        for (i, &mc) in m.iter().enumerate() {
            r[shift + i] = (r[shift + i] + (p - c) * mc as u64 % p) % p;
        }
    }
    r.into_iter().map(|c| c as u32).collect()
}

fn inv_mod(a: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    let mut base = a % p;
    let mut exp = p - 2;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    acc
}

fn monic_of_degree(p: u32, deg: usize, r: u64) -> Vec<u32> {
    let mut coeffs = Vec::with_capacity(deg + 1);
    let mut r = r;
    for _ in 0..deg {
        coeffs.push((r % p as u64) as u32);
        r /= p as u64;
    }
    coeffs.push(1);
    coeffs
}

fn fp_is_irreducible(f: &[u32], p: u32) -> bool {
    let deg = f.len() - 1;
    for d in 1..=deg / 2 {
        let count = (p as u64).pow(d as u32);
        for r in 0..count {
            let g = monic_of_degree(p, d, r);
            if fp_rem(f, &g, p).is_empty() {
                return false;
            }
        }
    }
    true
}

fn smallest_irreducible(p: u32, e: usize) -> Vec<u32> {
    let count = (p as u64).pow(e as u32);
    (0..count)
        .map(|r| monic_of_degree(p, e, r))
        .find(|f| fp_is_irreducible(f, p))
        .expect("irreducible polynomials exist in every degree")
}
