//! Closed-form densities and bounds, all as exact rationals.
//!
//! `zeta_q(j)^{-1} = 1 - q^{1-j}` for `j >= 2`, with the value 0 at `j = 1`.
//! The density of unimodular `k x n` matrices is
//! `prod_{j=n-k+1}^{n} zeta_q(j)^{-1}`, which is 0 for square matrices.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ffield::prime_power_decompose;
use crate::polymatrix::IrreducibleSet;
use crate::polyring::count_irreducibles;

/// Exact truncated zeta products above this many estimated numerator bits
/// are refused; use [`zeta_q_inverse_truncated_enclosure`] instead.
pub const EXACT_PRODUCT_BIT_BUDGET: u64 = 1 << 28;

/// An exact rational in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DensityValue(BigRational);

impl DensityValue {
    pub fn new(value: BigRational) -> Result<Self> {
        if value.is_negative() || value > BigRational::one() {
            return Err(Error::invalid(
                "density",
                format!("{value} is outside [0, 1]"),
            ));
        }
        Ok(DensityValue(value))
    }

    pub fn zero() -> Self {
        DensityValue(BigRational::zero())
    }

    pub fn one() -> Self {
        DensityValue(BigRational::one())
    }

    pub fn ratio(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Result<Self> {
        let denom = denom.into();
        if denom.is_zero() {
            return Err(Error::DivisionByZero);
        }
        DensityValue::new(BigRational::new(numer.into(), denom))
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn into_inner(self) -> BigRational {
        self.0
    }

    /// Decimal rendering rounded half-up to `digits` places.
    pub fn to_decimal(&self, digits: usize) -> String {
        format_decimal(&self.0, digits)
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for DensityValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", rational_string(&self.0))
    }
}

impl Serialize for DensityValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Always `numerator/denominator`, also for integers.
pub fn rational_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Decimal rendering of any rational, rounded half away from zero.
pub fn format_decimal(r: &BigRational, digits: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10), digits);
    let scaled = r * BigRational::from_integer(scale.clone());
    let rounded = scaled.round().to_integer();
    let negative = rounded.is_negative();
    let (int_part, frac_part) = rounded.abs().div_rem(&scale);
    let sign = if negative { "-" } else { "" };
    if digits == 0 {
        return format!("{sign}{int_part}");
    }
    format!(
        "{sign}{int_part}.{:0>width$}",
        frac_part.to_string(),
        width = digits
    )
}

fn check_q(q: u64) -> Result<()> {
    if q < 2 {
        return Err(Error::invalid(
            "q",
            format!("q must be at least 2, got {q}"),
        ));
    }
    prime_power_decompose(q)
        .map(|_| ())
        .ok_or(Error::NotPrimePower { q })
}

fn check_shape(k: usize, n: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::invalid("k", "k must be at least 1"));
    }
    if k > n {
        return Err(Error::RowsExceedColumns { k, n });
    }
    Ok(())
}

fn q_pow(q: u64, exp: u64) -> BigInt {
    num_traits::pow(BigInt::from(q), exp as usize)
}

/// `1 - q^{-exp}`.
fn one_minus_inverse_power(q: u64, exp: u64) -> BigRational {
    let d = q_pow(q, exp);
    BigRational::new(&d - BigInt::one(), d)
}

/// `zeta_q(j)^{-1} = 1 - q^{1-j}`, and 0 at `j = 1`.
pub fn zeta_q_inverse(q: u64, j: u32) -> Result<DensityValue> {
    check_q(q)?;
    if j < 1 {
        return Err(Error::invalid("j", "j must be at least 1"));
    }
    DensityValue::new(one_minus_inverse_power(q, (j - 1) as u64))
}

fn estimated_product_bits(q: u64, j: u32, t: u32) -> u64 {
    let log2q = 64 - q.leading_zeros() as u64;
    (1..=t)
        .map(|m| {
            // m * phi_m <= q^m
            let qm = q.checked_pow(m).unwrap_or(u64::MAX);
            qm.saturating_mul(j as u64).saturating_mul(log2q)
        })
        .fold(0u64, u64::saturating_add)
}

/// `q^exp`, by shifting when `q` is a power of two.
fn q_power_big(q: u64, exp: u64) -> BigUint {
    if q.is_power_of_two() {
        BigUint::one() << (exp * q.trailing_zeros() as u64)
    } else {
        BigUint::from(q).pow(exp as u32)
    }
}

/// Exact numerator and the exponent `s` of the denominator `q^s` of
/// `prod_{m<=t} (1 - q^{-jm})^{phi_m}`. The numerator is coprime to `q`.
fn truncated_product_parts(q: u64, j: u32, t: u32) -> Result<(BigUint, u64)> {
    let mut numer = BigUint::one();
    let mut exponent = 0u64;
    for m in 1..=t {
        let phi = count_irreducibles(q, m)?
            .to_u64()
            .ok_or_else(|| Error::invalid("t", "irreducible count exceeds 64 bits"))?;
        let jm = j as u64 * m as u64;
        let base = BigUint::from(q).pow(jm as u32) - BigUint::one();
        numer *= num_traits::pow(base, phi as usize);
        exponent += jm * phi;
    }
    Ok((numer, exponent))
}

/// `prod_{m=1}^{t} (1 - q^{-jm})^{phi_m}`, the Euler product for
/// `zeta_q(j)^{-1}` cut at degree `t`. Exact; decreases in `t` towards
/// [`zeta_q_inverse`].
pub fn zeta_q_inverse_truncated(q: u64, j: u32, t: u32) -> Result<DensityValue> {
    check_q(q)?;
    if j < 2 {
        return Err(Error::invalid(
            "j",
            "the Euler product converges only for j >= 2",
        ));
    }
    if t < 1 {
        return Err(Error::invalid("t", "t must be at least 1"));
    }
    let bits = estimated_product_bits(q, j, t);
    if bits > EXACT_PRODUCT_BIT_BUDGET {
        return Err(Error::BudgetExceeded {
            what: "exact truncated product",
            required: format!("{bits} bits"),
            budget: EXACT_PRODUCT_BIT_BUDGET,
        });
    }
    let (numer, exponent) = truncated_product_parts(q, j, t)?;
    let denom = q_power_big(q, exponent);
    // already in lowest terms: q^jm - 1 is coprime to q
    Ok(DensityValue(BigRational::new_raw(
        numer.into(),
        denom.into(),
    )))
}

/// Rigorous dyadic lower and upper bounds on the truncated product, each with
/// a denominator of `2^precision`. Every multiplication rounds the lower
/// bound down and the upper bound up.
pub fn zeta_q_inverse_truncated_enclosure(
    q: u64,
    j: u32,
    t: u32,
    precision: u32,
) -> Result<(DensityValue, DensityValue)> {
    check_q(q)?;
    if j < 2 {
        return Err(Error::invalid(
            "j",
            "the Euler product converges only for j >= 2",
        ));
    }
    if t < 1 {
        return Err(Error::invalid("t", "t must be at least 1"));
    }
    let one = BigUint::one() << precision;
    let mul_down = |a: &BigUint, b: &BigUint| (a * b) >> precision;
    let mul_up = |a: &BigUint, b: &BigUint| {
        let prod = a * b;
        let floor = &prod >> precision;
        if (&floor << precision) == prod {
            floor
        } else {
            floor + 1u32
        }
    };
    let mut lo = one.clone();
    let mut hi = one.clone();
    for m in 1..=t {
        let phi = count_irreducibles(q, m)?
            .to_u64()
            .ok_or_else(|| Error::invalid("t", "irreducible count exceeds 64 bits"))?;
        let denom = BigUint::from(q).pow(j * m);
        // fixed-point encodings of 1 - q^{-jm}
        let scaled = &one * (&denom - 1u32);
        let (floor, rem) = scaled.div_rem(&denom);
        let base_lo = floor.clone();
        let base_hi = if rem.is_zero() { floor } else { floor + 1u32 };
        let (mut p_lo, mut p_hi) = (one.clone(), one.clone());
        let (mut b_lo, mut b_hi) = (base_lo, base_hi);
        let mut e = phi;
        while e > 0 {
            if e & 1 == 1 {
                p_lo = mul_down(&p_lo, &b_lo);
                p_hi = mul_up(&p_hi, &b_hi).min(one.clone());
            }
            e >>= 1;
            if e > 0 {
                b_lo = mul_down(&b_lo, &b_lo);
                b_hi = mul_up(&b_hi, &b_hi).min(one.clone());
            }
        }
        lo = mul_down(&lo, &p_lo);
        hi = mul_up(&hi, &p_hi).min(one.clone());
    }
    let denom: BigInt = one.into();
    Ok((
        DensityValue::new(BigRational::new(lo.into(), denom.clone()))?,
        DensityValue::new(BigRational::new(hi.into(), denom))?,
    ))
}

/// `prod_{j=n-k+1}^{n} zeta_q(j)^{-1}`; 0 when `k = n`.
pub fn density_unimodular(q: u64, k: usize, n: usize) -> Result<DensityValue> {
    check_q(q)?;
    check_shape(k, n)?;
    let mut acc = BigRational::one();
    for j in n - k + 1..=n {
        acc *= zeta_q_inverse(q, j as u32)?.0;
    }
    DensityValue::new(acc)
}

/// `prod_{j=n-k+1}^{n} prod_{f in P} (1 - q^{-j deg f})`.
pub fn density_e_p(k: usize, n: usize, set: &IrreducibleSet) -> Result<DensityValue> {
    check_shape(k, n)?;
    let degrees: Vec<usize> = set
        .members()
        .iter()
        .map(|f| f.degree().unwrap_or(0))
        .collect();
    density_e_p_degrees(set.field().q(), k, n, &degrees)
}

/// [`density_e_p`] from the member degrees alone.
pub fn density_e_p_degrees(q: u64, k: usize, n: usize, degrees: &[usize]) -> Result<DensityValue> {
    check_q(q)?;
    check_shape(k, n)?;
    if degrees.contains(&0) {
        return Err(Error::invalid("P", "irreducibles have degree at least 1"));
    }
    let mut acc = BigRational::one();
    for j in n - k + 1..=n {
        for &d in degrees {
            acc *= one_minus_inverse_power(q, (j * d) as u64);
        }
    }
    DensityValue::new(acc)
}

/// Exact density of `H_f` next to the bound `2 / q_f^2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HfBound {
    pub exact: DensityValue,
    pub bound: DensityValue,
}

/// `D(H_f) = 1 - prod_{j=n-k+1}^{n} (1 - q_f^{-j})` with `q_f = q^{deg f}`.
pub fn bound_h_f(q: u64, k: usize, n: usize, f_degree: usize) -> Result<HfBound> {
    check_q(q)?;
    check_shape(k, n)?;
    if k >= n {
        return Err(Error::invalid(
            "k",
            format!("requires k < n, got k = {k}, n = {n}"),
        ));
    }
    if f_degree < 1 {
        return Err(Error::invalid(
            "deg f",
            "irreducibles have degree at least 1",
        ));
    }
    let e_f = density_e_p_degrees(q, k, n, &[f_degree])?;
    let exact = DensityValue::new(BigRational::one() - e_f.0)?;
    let qf = q_pow(q, f_degree as u64);
    let bound = BigRational::new(BigInt::from(2), &qf * &qf);
    Ok(HfBound {
        exact,
        bound: DensityValue::new(bound)?,
    })
}

/// `2 / (q^t (q - 1))`, bounding the gap between `D(E_{P_t})` and `D(E)`.
pub fn tail_bound(q: u64, t: u32) -> Result<DensityValue> {
    check_q(q)?;
    if t < 1 {
        return Err(Error::invalid("t", "t must be at least 1"));
    }
    DensityValue::new(BigRational::new(
        BigInt::from(2),
        q_pow(q, t as u64) * BigInt::from(q - 1),
    ))
}

/// `|truncated - zeta_q(j)^{-1}| <= tail_bound(q, t)`, decided exactly when the
/// product is small enough and through a rigorous enclosure otherwise.
pub fn truncated_zeta_within_tail(q: u64, j: u32, t: u32) -> Result<bool> {
    if t < 1 {
        return Err(Error::invalid("t", "t must be at least 1"));
    }
    Ok(truncated_zeta_tail_checks(q, j, t)?[t as usize - 1])
}

/// [`truncated_zeta_within_tail`] for every `t` in `1..=t_max`, extending the
/// exact product one degree at a time.
pub fn truncated_zeta_tail_checks(q: u64, j: u32, t_max: u32) -> Result<Vec<bool>> {
    check_q(q)?;
    if j < 2 {
        return Err(Error::invalid(
            "j",
            "the Euler product converges only for j >= 2",
        ));
    }
    if t_max < 1 {
        return Err(Error::invalid("t", "t must be at least 1"));
    }
    let target = zeta_q_inverse(q, j)?.0;
    let mut out = Vec::with_capacity(t_max as usize);
    let mut numer = BigUint::one();
    let mut exponent = 0u64;
    for t in 1..=t_max {
        let tail = tail_bound(q, t)?.0;
        let upper = &target + &tail;
        let lower = &target - &tail;
        if estimated_product_bits(q, j, t) > EXACT_PRODUCT_BIT_BUDGET {
            let (lo, hi) = zeta_q_inverse_truncated_enclosure(q, j, t, 512)?;
            out.push(hi.0 <= upper && lo.0 >= lower);
            continue;
        }
        let phi = count_irreducibles(q, t)?
            .to_u64()
            .ok_or_else(|| Error::invalid("t", "irreducible count exceeds 64 bits"))?;
        let jm = j as u64 * t as u64;
        let base = BigUint::from(q).pow(jm as u32) - BigUint::one();
        numer *= num_traits::pow(base, phi as usize);
        exponent += jm * phi;
        // numer / q^exponent against lower and upper by cross multiplication
        let denom: BigInt = q_power_big(q, exponent).into();
        let n: BigInt = numer.clone().into();
        let le_upper = &n * upper.denom() <= upper.numer() * &denom;
        let ge_lower = lower.is_negative() || &n * lower.denom() >= lower.numer() * &denom;
        out.push(le_upper && ge_lower);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffield::make_field;
    use crate::polyring::{irreducibles_up_to, Poly};

    fn r(n: i64, d: i64) -> DensityValue {
        DensityValue::ratio(n, d).unwrap()
    }

    #[test]
    fn zeta_examples() {
        assert_eq!(zeta_q_inverse(2, 2).unwrap(), r(1, 2));
        assert_eq!(zeta_q_inverse(5, 1).unwrap(), DensityValue::zero());
        assert_eq!(zeta_q_inverse(3, 3).unwrap(), r(8, 9));
        assert!(zeta_q_inverse(2, 0).is_err());
        assert!(zeta_q_inverse(1, 2).is_err());
        assert!(matches!(
            zeta_q_inverse(6, 2),
            Err(Error::NotPrimePower { q: 6 })
        ));
    }

    #[test]
    fn truncated_examples() {
        assert_eq!(zeta_q_inverse_truncated(2, 2, 1).unwrap(), r(9, 16));
        assert_eq!(zeta_q_inverse_truncated(2, 3, 1).unwrap(), r(49, 64));
        assert!(zeta_q_inverse_truncated(2, 1, 3).is_err());
        let half = r(1, 2);
        let mut prev = DensityValue::one();
        for t in 1..=10 {
            let v = zeta_q_inverse_truncated(2, 2, t).unwrap();
            assert!(v < prev && v >= half);
            let gap = v.value() - half.value();
            assert!(gap <= *tail_bound(2, t).unwrap().value());
            prev = v;
        }
    }

    #[test]
    fn truncated_matches_brute_force_product() {
        // product over the explicit irreducible lists
        for q in [2u64, 3] {
            let field = make_field(q, 1).unwrap();
            let table = irreducibles_up_to(&field, 5).unwrap();
            for j in 2..=3u32 {
                let mut acc = BigRational::one();
                for f in table.all() {
                    acc *= one_minus_inverse_power(q, j as u64 * f.degree().unwrap() as u64);
                }
                assert_eq!(zeta_q_inverse_truncated(q, j, 5).unwrap().0, acc);
            }
        }
    }

    #[test]
    fn enclosure_brackets_exact_value() {
        for (q, j, t) in [(2, 2, 8), (3, 3, 5), (4, 2, 4)] {
            let exact = zeta_q_inverse_truncated(q, j, t).unwrap();
            let (lo, hi) = zeta_q_inverse_truncated_enclosure(q, j, t, 256).unwrap();
            assert!(lo <= exact && exact <= hi);
            let width = hi.value() - lo.value();
            assert!(width < BigRational::new(BigInt::one(), BigInt::one() << 240u32));
        }
    }

    #[test]
    fn unimodular_density_examples() {
        assert_eq!(density_unimodular(2, 1, 2).unwrap(), r(1, 2));
        for q in [2, 3, 4, 5] {
            for n in 1..6 {
                assert_eq!(density_unimodular(q, n, n).unwrap(), DensityValue::zero());
            }
        }
        assert_eq!(density_unimodular(3, 2, 3).unwrap(), r(16, 27));
        assert!(density_unimodular(2, 3, 2).is_err());
        assert!(density_unimodular(2, 0, 2).is_err());
    }

    #[test]
    fn explicit_form_matches_zeta_factorisation() {
        for q in [2u64, 3, 4, 7] {
            for n in 1..6usize {
                for k in 1..=n {
                    let explicit = (1..=k)
                        .map(|i| one_minus_inverse_power(q, (n - i) as u64))
                        .fold(BigRational::one(), |a, b| a * b);
                    assert_eq!(density_unimodular(q, k, n).unwrap().0, explicit);
                }
            }
        }
    }

    #[test]
    fn e_p_examples() {
        let f2 = make_field(2, 1).unwrap();
        let x = Poly::from_index(&f2, 2);
        let x1 = Poly::from_index(&f2, 3);
        let set = IrreducibleSet::new(&f2, vec![x.clone()]).unwrap();
        assert_eq!(density_e_p(1, 2, &set).unwrap(), r(3, 4));
        let set = IrreducibleSet::new(&f2, vec![x, x1]).unwrap();
        assert_eq!(density_e_p(1, 2, &set).unwrap(), r(9, 16));
        for (k, n) in [(1, 1), (2, 3), (3, 3)] {
            assert_eq!(
                density_e_p(k, n, &IrreducibleSet::empty(&f2)).unwrap(),
                DensityValue::one()
            );
        }
    }

    #[test]
    fn e_p_is_monotone_and_converges() {
        for q in [2u64, 3] {
            let field = make_field(q, 1).unwrap();
            let table = irreducibles_up_to(&field, 6).unwrap();
            for (k, n) in [(1, 2), (1, 3), (2, 3)] {
                let mut set = IrreducibleSet::empty(&field);
                let mut prev = density_e_p(k, n, &set).unwrap();
                for f in table.all() {
                    set = set.with(f.clone()).unwrap();
                    let next = density_e_p(k, n, &set).unwrap();
                    assert!(next <= prev);
                    prev = next;
                }
                let limit = density_unimodular(q, k, n).unwrap();
                let gap = prev.value() - limit.value();
                assert!(!gap.is_negative());
                assert!(gap <= *tail_bound(q, 6).unwrap().value());
            }
        }
    }

    #[test]
    fn h_f_examples() {
        let b = bound_h_f(2, 1, 2, 1).unwrap();
        assert_eq!((b.exact, b.bound), (r(1, 4), r(1, 2)));
        assert_eq!(bound_h_f(2, 1, 3, 1).unwrap().exact, r(1, 8));
        assert_eq!(bound_h_f(2, 2, 3, 1).unwrap().exact, r(11, 32));
        assert_eq!(bound_h_f(3, 1, 2, 2).unwrap().exact, r(1, 81));
        assert!(bound_h_f(2, 2, 2, 1).is_err());
        for q in [2u64, 3, 4] {
            for n in 2..6 {
                for k in 1..n {
                    for d in 1..4 {
                        let b = bound_h_f(q, k, n, d).unwrap();
                        assert!(b.exact <= b.bound);
                    }
                }
            }
        }
    }

    #[test]
    fn tail_examples() {
        assert_eq!(tail_bound(2, 4).unwrap(), r(1, 8));
        assert_eq!(tail_bound(3, 2).unwrap(), r(1, 9));
        assert_eq!(tail_bound(2, 1).unwrap(), DensityValue::one());
        assert!(tail_bound(2, 0).is_err());
    }

    #[test]
    fn rendering() {
        assert_eq!(r(1, 2).to_string(), "1/2");
        assert_eq!(DensityValue::zero().to_string(), "0/1");
        assert_eq!(r(2, 3).to_decimal(4), "0.6667");
        assert_eq!(r(1, 8).to_decimal(2), "0.13");
        assert_eq!(DensityValue::one().to_decimal(0), "1");
        assert_eq!(
            format_decimal(&BigRational::new((-1).into(), 3.into()), 3),
            "-0.333"
        );
    }
}
