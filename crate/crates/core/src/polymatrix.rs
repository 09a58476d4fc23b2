//! Matrices over F_q[x]: maximal minors, unimodularity, reduction modulo an
//! irreducible, Smith normal form and unimodular completion.
//!
//! A `k x n` matrix with `k <= n` is unimodular exactly when the gcd of its
//! `k x k` minors is 1. Matrices with more rows than columns are rejected by
//! every operation that asks about unimodularity.

use std::fmt;

use itertools::Itertools;
use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ffield::{FieldSpec, FiniteField};
use crate::polyring::{gcd_unchecked, is_irreducible, parse_poly, Poly};

/// Square matrices up to this size use cofactor expansion for determinants;
/// larger ones use fraction-free elimination.
const COFACTOR_LIMIT: usize = 4;

/// A dense `k x n` matrix over F_q[x], row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct PolyMatrix {
    field: FieldSpec,
    k: usize,
    n: usize,
    entries: Vec<Poly>,
}

impl PolyMatrix {
    pub fn new(field: &FieldSpec, rows: Vec<Vec<Poly>>) -> Result<Self> {
        let k = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if k == 0 || n == 0 {
            return Err(Error::invalid("matrix", "empty matrix"));
        }
        let mut entries = Vec::with_capacity(k * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(
                    "matrix",
                    format!("row {i} has {} entries, expected {n}", row.len()),
                ));
            }
            for e in row {
                field.same_field(e.field())?;
                entries.push(e);
            }
        }
        Ok(PolyMatrix {
            field: field.clone(),
            k,
            n,
            entries,
        })
    }

    /// Builds the matrix whose entry `(i, j)` is `f_{indices[i*n + j]}`.
    pub fn from_indices(field: &FieldSpec, k: usize, n: usize, indices: &[u64]) -> Result<Self> {
        if k == 0 || n == 0 {
            return Err(Error::invalid("matrix", "empty matrix"));
        }
        if indices.len() != k * n {
            return Err(Error::invalid(
                "matrix",
                format!("expected {} entries, got {}", k * n, indices.len()),
            ));
        }
        Ok(PolyMatrix {
            field: field.clone(),
            k,
            n,
            entries: indices
                .iter()
                .map(|&m| Poly::from_index(field, m))
                .collect(),
        })
    }

    pub(crate) fn from_entries(field: &FieldSpec, k: usize, n: usize, entries: Vec<Poly>) -> Self {
        debug_assert_eq!(entries.len(), k * n);
        PolyMatrix {
            field: field.clone(),
            k,
            n,
            entries,
        }
    }

    pub fn identity(field: &FieldSpec, n: usize) -> Self {
        let mut m = PolyMatrix::zeros(field, n, n);
        for i in 0..n {
            m.entries[i * n + i] = Poly::one(field);
        }
        m
    }

    pub fn zeros(field: &FieldSpec, k: usize, n: usize) -> Self {
        PolyMatrix {
            field: field.clone(),
            k,
            n,
            entries: vec![Poly::zero(field); k * n],
        }
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.k
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Poly {
        &self.entries[i * self.n + j]
    }

    fn get_mut(&mut self, i: usize, j: usize) -> &mut Poly {
        &mut self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[Poly] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn entries(&self) -> &[Poly] {
        &self.entries
    }

    pub fn mul(&self, rhs: &PolyMatrix) -> Result<PolyMatrix> {
        self.field.same_field(&rhs.field)?;
        if self.n != rhs.k {
            return Err(Error::invalid(
                "matrix",
                format!(
                    "cannot multiply {}x{} by {}x{}",
                    self.k, self.n, rhs.k, rhs.n
                ),
            ));
        }
        let mut out = PolyMatrix::zeros(&self.field, self.k, rhs.n);
        for i in 0..self.k {
            for j in 0..rhs.n {
                let mut acc = Poly::zero(&self.field);
                for l in 0..self.n {
                    let a = self.get(i, l);
                    let b = rhs.get(l, j);
                    if !a.is_zero() && !b.is_zero() {
                        acc = &acc + &(a * b);
                    }
                }
                *out.get_mut(i, j) = acc;
            }
        }
        Ok(out)
    }

    /// Stacks `self` on top of `below`.
    pub fn stack(&self, below: &PolyMatrix) -> Result<PolyMatrix> {
        self.field.same_field(&below.field)?;
        if self.n != below.n {
            return Err(Error::invalid("matrix", "column counts differ"));
        }
        let mut entries = self.entries.clone();
        entries.extend(below.entries.iter().cloned());
        Ok(PolyMatrix::from_entries(
            &self.field,
            self.k + below.k,
            self.n,
            entries,
        ))
    }

    pub fn transpose(&self) -> PolyMatrix {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.n {
            for i in 0..self.k {
                entries.push(self.get(i, j).clone());
            }
        }
        PolyMatrix::from_entries(&self.field, self.n, self.k, entries)
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> PolyMatrix {
        let mut entries = Vec::with_capacity(self.k * cols.len());
        for i in 0..self.k {
            for &j in cols {
                entries.push(self.get(i, j).clone());
            }
        }
        PolyMatrix::from_entries(&self.field, self.k, cols.len(), entries)
    }

    pub fn determinant(&self) -> Result<Poly> {
        if self.k != self.n {
            return Err(Error::invalid(
                "matrix",
                format!("determinant of a non-square {}x{} matrix", self.k, self.n),
            ));
        }
        let refs: Vec<&Poly> = self.entries.iter().collect();
        Ok(if self.n <= COFACTOR_LIMIT {
            det_cofactor(&self.field, &refs, self.n)
        } else {
            det_bareiss(&self.field, &refs, self.n)
        })
    }

    /// Comma/pipe/semicolon text form; see [`parse_matrix`].
    pub fn to_text(&self) -> String {
        (0..self.k)
            .map(|i| self.row(i).iter().map(Poly::to_string).join("|"))
            .join(";")
    }

    pub fn to_doc(&self) -> MatrixDoc {
        MatrixDoc {
            q: self.field.q(),
            p: self.field.p(),
            e: self.field.e(),
            k: self.k,
            n: self.n,
            entries: (0..self.k)
                .map(|i| self.row(i).iter().map(Poly::to_string).collect())
                .collect(),
        }
    }

    pub fn from_doc(doc: &MatrixDoc) -> Result<PolyMatrix> {
        let field = FieldSpec::new(doc.p, doc.e)?;
        if field.q() != doc.q {
            return Err(Error::invalid(
                "q",
                format!("q = {} does not equal p^e = {}", doc.q, field.q()),
            ));
        }
        let mut rows = Vec::with_capacity(doc.entries.len());
        for row in &doc.entries {
            rows.push(
                row.iter()
                    .map(|s| parse_poly(&field, s))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        let m = PolyMatrix::new(&field, rows)?;
        if m.k != doc.k || m.n != doc.n {
            return Err(Error::invalid(
                "entries",
                format!(
                    "shape {}x{} does not match k = {}, n = {}",
                    m.k, m.n, doc.k, doc.n
                ),
            ));
        }
        Ok(m)
    }
}

impl fmt::Debug for PolyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolyMatrix<{}>[", self.field)?;
        for i in 0..self.k {
            if i > 0 {
                f.write_str("; ")?;
            }
            let row = self.row(i).iter().map(Poly::to_human).join(", ");
            f.write_str(&row)?;
        }
        f.write_str("]")
    }
}

impl fmt::Display for PolyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// JSON mirror of a matrix; entries use the comma polynomial format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub q: u64,
    pub p: u64,
    pub e: u32,
    pub k: usize,
    pub n: usize,
    pub entries: Vec<Vec<String>>,
}

/// Parses `"e|e|...;e|e|..."`: rows split by `;`, entries by `|`, each entry
/// in the polynomial text format.
pub fn parse_matrix(field: &FieldSpec, text: &str) -> Result<PolyMatrix> {
    if text.trim().is_empty() {
        return Err(Error::parse(0, "empty matrix"));
    }
    let mut rows = Vec::new();
    let mut pos = 0;
    for row_text in text.split(';') {
        let mut row = Vec::new();
        for entry in row_text.split('|') {
            let poly = parse_poly(field, entry).map_err(|e| match e {
                Error::Parse { pos: inner, msg } => Error::parse(pos + inner, msg),
                other => other,
            })?;
            row.push(poly);
            pos += entry.len() + 1;
        }
        if let Some(first) = rows.first().map(Vec::len) {
            if row.len() != first {
                return Err(Error::parse(
                    pos.saturating_sub(1),
                    format!(
                        "row {} has {} entries, expected {first}",
                        rows.len(),
                        row.len()
                    ),
                ));
            }
        }
        rows.push(row);
    }
    PolyMatrix::new(field, rows)
}

fn det_cofactor(field: &FieldSpec, m: &[&Poly], n: usize) -> Poly {
    match n {
        1 => m[0].clone(),
        2 => &(m[0] * m[3]) - &(m[1] * m[2]),
        _ => {
            let mut acc = Poly::zero(field);
            let mut minor: Vec<&Poly> = Vec::with_capacity((n - 1) * (n - 1));
            for j in 0..n {
                if m[j].is_zero() {
                    continue;
                }
                minor.clear();
                for i in 1..n {
                    for c in (0..n).filter(|&c| c != j) {
                        minor.push(m[i * n + c]);
                    }
                }
                let term = m[j] * &det_cofactor(field, &minor, n - 1);
                acc = if j % 2 == 0 {
                    &acc + &term
                } else {
                    &acc - &term
                };
            }
            acc
        }
    }
}

fn exact_div(a: &Poly, b: &Poly) -> Poly {
    let (quot, rem) = a.div_rem(b).expect("nonzero divisor");
    debug_assert!(rem.is_zero(), "fraction-free elimination left a remainder");
    quot
}

fn det_bareiss(field: &FieldSpec, m: &[&Poly], n: usize) -> Poly {
    let mut a: Vec<Poly> = m.iter().map(|&p| p.clone()).collect();
    let mut prev = Poly::one(field);
    let mut negate = false;
    for t in 0..n - 1 {
        if a[t * n + t].is_zero() {
            let Some(r) = (t + 1..n).find(|&r| !a[r * n + t].is_zero()) else {
                return Poly::zero(field);
            };
            for c in 0..n {
                a.swap(t * n + c, r * n + c);
            }
            negate = !negate;
        }
        let pivot = a[t * n + t].clone();
        for i in t + 1..n {
            for j in t + 1..n {
                let num = &(&a[i * n + j] * &pivot) - &(&a[i * n + t] * &a[t * n + j]);
                a[i * n + j] = exact_div(&num, &prev);
            }
            a[i * n + t] = Poly::zero(field);
        }
        prev = pivot;
    }
    let det = a[n * n - 1].clone();
    if negate {
        -&det
    } else {
        det
    }
}

fn require_wide(a: &PolyMatrix) -> Result<()> {
    if a.k > a.n {
        Err(Error::RowsExceedColumns { k: a.k, n: a.n })
    } else {
        Ok(())
    }
}

/// All `k x k` minors, column selections in lexicographic order.
pub fn maximal_minors(a: &PolyMatrix) -> Result<Vec<Poly>> {
    require_wide(a)?;
    Ok((0..a.n)
        .combinations(a.k)
        .map(|cols| minor(a, &cols))
        .collect())
}

fn minor(a: &PolyMatrix, cols: &[usize]) -> Poly {
    let refs: Vec<&Poly> = a.entries.iter().collect();
    minor_of(&a.field, a.k, a.n, &refs, cols)
}

fn minor_of(field: &FieldSpec, k: usize, n: usize, entries: &[&Poly], cols: &[usize]) -> Poly {
    let mut sel: Vec<&Poly> = Vec::with_capacity(k * k);
    for i in 0..k {
        for &j in cols {
            sel.push(entries[i * n + j]);
        }
    }
    if k <= COFACTOR_LIMIT {
        det_cofactor(field, &sel, k)
    } else {
        det_bareiss(field, &sel, k)
    }
}

/// Monic gcd of the maximal minors; zero exactly when the rank is below `k`.
pub fn minors_gcd(a: &PolyMatrix) -> Result<Poly> {
    require_wide(a)?;
    let refs: Vec<&Poly> = a.entries.iter().collect();
    Ok(minors_gcd_of(&a.field, a.k, a.n, &refs))
}

/// [`minors_gcd`] over a borrowed row-major grid with `k <= n`.
pub(crate) fn minors_gcd_of(field: &FieldSpec, k: usize, n: usize, entries: &[&Poly]) -> Poly {
    let mut g = Poly::zero(field);
    if k == 1 {
        for &e in entries {
            if e.is_zero() {
                continue;
            }
            g = gcd_unchecked(&g, e);
            if g.is_one() {
                break;
            }
        }
        return g;
    }
    for cols in (0..n).combinations(k) {
        let m = minor_of(field, k, n, entries, &cols);
        if m.is_zero() {
            continue;
        }
        g = gcd_unchecked(&g, &m);
        if g.is_one() {
            break;
        }
    }
    g
}

pub fn is_unimodular(a: &PolyMatrix) -> Result<bool> {
    Ok(minors_gcd(a)?.is_one())
}

/// A finite set of distinct monic irreducibles with their product and its degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IrreducibleSet {
    field: FieldSpec,
    members: Vec<Poly>,
    product: Poly,
    degree: usize,
}

impl IrreducibleSet {
    /// Members are stored in index order. Duplicates and non-irreducible
    /// inputs are rejected.
    pub fn new(field: &FieldSpec, mut members: Vec<Poly>) -> Result<Self> {
        for f in &members {
            field.same_field(f.field())?;
            if !is_irreducible(f) {
                return Err(Error::NotIrreducible(f.to_human()));
            }
        }
        members.sort_by(|a, b| a.cmp_index(b));
        if let Some(w) = members.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(
                "P",
                format!("{} listed twice", w[0].to_human()),
            ));
        }
        let product = members.iter().fold(Poly::one(field), |acc, f| &acc * f);
        let degree = members.iter().map(|f| f.degree().unwrap_or(0)).sum();
        Ok(IrreducibleSet {
            field: field.clone(),
            members,
            product,
            degree,
        })
    }

    pub fn empty(field: &FieldSpec) -> Self {
        IrreducibleSet {
            field: field.clone(),
            members: Vec::new(),
            product: Poly::one(field),
            degree: 0,
        }
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn members(&self) -> &[Poly] {
        &self.members
    }

    /// `f_P`, the product of the members.
    pub fn product(&self) -> &Poly {
        &self.product
    }

    /// `d_P = deg f_P`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn with(&self, f: Poly) -> Result<Self> {
        let mut members = self.members.clone();
        members.push(f);
        IrreducibleSet::new(&self.field, members)
    }
}

/// Membership in `E_P`: the minors gcd is coprime to every member of `P`.
/// A rank-deficient matrix (gcd 0) is excluded unless `P` is empty.
pub fn in_e_p(a: &PolyMatrix, set: &IrreducibleSet) -> Result<bool> {
    a.field.same_field(&set.field)?;
    let g = minors_gcd(a)?;
    Ok(gcd_coprime_to(&g, set))
}

pub(crate) fn gcd_coprime_to(g: &Poly, set: &IrreducibleSet) -> bool {
    // for irreducible f, gcd(g, f) = 1 iff f does not divide g; every f
    // divides 0, so rank-deficient matrices only pass for the empty set
    set.members.iter().all(|f| !g.is_divisible_by(f))
}

/// Membership in `E_P` decided through ranks of the reductions modulo each
/// member of `P`.
pub fn in_e_p_by_reduction(a: &PolyMatrix, set: &IrreducibleSet) -> Result<bool> {
    require_wide(a)?;
    for f in &set.members {
        if rank_over_field(&reduce_mod(a, f)?) < a.k {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The residue field `F_q[x]/(f)` for a monic irreducible `f`; elements are
/// reduced polynomials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientField {
    modulus: Poly,
}

impl QuotientField {
    pub fn new(modulus: &Poly) -> Result<Self> {
        if !is_irreducible(modulus) {
            return Err(Error::NotIrreducible(modulus.to_human()));
        }
        Ok(QuotientField {
            modulus: modulus.clone(),
        })
    }

    pub fn modulus(&self) -> &Poly {
        &self.modulus
    }

    pub fn base(&self) -> &FieldSpec {
        self.modulus.field()
    }

    pub fn reduce(&self, a: &Poly) -> Poly {
        a.rem(&self.modulus).expect("modulus is nonzero")
    }
}

impl FiniteField for QuotientField {
    type Elem = Poly;

    fn order(&self) -> BigUint {
        BigUint::from(self.base().q()).pow(self.modulus.degree().unwrap_or(0) as u32)
    }
    fn zero(&self) -> Poly {
        Poly::zero(self.base())
    }
    fn one(&self) -> Poly {
        Poly::one(self.base())
    }
    fn is_zero(&self, a: &Poly) -> bool {
        a.is_zero()
    }
    fn add(&self, a: &Poly, b: &Poly) -> Poly {
        a + b
    }
    fn sub(&self, a: &Poly, b: &Poly) -> Poly {
        a - b
    }
    fn mul(&self, a: &Poly, b: &Poly) -> Poly {
        self.reduce(&(a * b))
    }
    fn neg(&self, a: &Poly) -> Poly {
        -a
    }
    fn inv(&self, a: &Poly) -> Result<Poly> {
        if a.is_zero() {
            return Err(Error::DivisionByZero);
        }
        // extended Euclid: track s with s*a = r (mod modulus)
        let (mut r0, mut r1) = (self.modulus.clone(), a.clone());
        let (mut s0, mut s1) = (Poly::zero(self.base()), Poly::one(self.base()));
        while !r1.is_zero() {
            let (quot, rem) = r0.div_rem(&r1)?;
            let s2 = &s0 - &(&quot * &s1);
            r0 = std::mem::replace(&mut r1, rem);
            s0 = std::mem::replace(&mut s1, s2);
        }
        // r0 is a nonzero constant since the modulus is irreducible
        let c = self.base().inv_raw(r0.leading())?;
        Ok(self.reduce(&s0.scale(c)))
    }
}

/// A dense matrix over any [`FiniteField`].
#[derive(Clone, Debug)]
pub struct FieldMatrix<F: FiniteField> {
    field: F,
    rows: usize,
    cols: usize,
    entries: Vec<F::Elem>,
}

impl<F: FiniteField> FieldMatrix<F> {
    pub fn new(field: F, rows: usize, cols: usize, entries: Vec<F::Elem>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::invalid(
                "matrix",
                format!("expected {} entries, got {}", rows * cols, entries.len()),
            ));
        }
        Ok(FieldMatrix {
            field,
            rows,
            cols,
            entries,
        })
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &F::Elem {
        &self.entries[i * self.cols + j]
    }
}

/// Entry-wise reduction modulo a monic irreducible `f`, landing in
/// `F_q[x]/(f)`.
pub fn reduce_mod(a: &PolyMatrix, f: &Poly) -> Result<FieldMatrix<QuotientField>> {
    a.field.same_field(f.field())?;
    let field = QuotientField::new(f)?;
    let entries = a.entries.iter().map(|e| field.reduce(e)).collect();
    FieldMatrix::new(field, a.k, a.n, entries)
}

/// Row rank by Gaussian elimination.
pub fn rank_over_field<F: FiniteField>(m: &FieldMatrix<F>) -> usize {
    let f = &m.field;
    let cols = m.cols;
    let mut a = m.entries.clone();
    let mut rank = 0;
    for c in 0..cols {
        if rank == m.rows {
            break;
        }
        let Some(pr) = (rank..m.rows).find(|&r| !f.is_zero(&a[r * cols + c])) else {
            continue;
        };
        for j in 0..cols {
            a.swap(rank * cols + j, pr * cols + j);
        }
        let inv = f.inv(&a[rank * cols + c]).expect("pivot is nonzero");
        for r in rank + 1..m.rows {
            if f.is_zero(&a[r * cols + c]) {
                continue;
            }
            let factor = f.mul(&a[r * cols + c], &inv);
            for j in c..cols {
                let t = f.mul(&factor, &a[rank * cols + j]);
                a[r * cols + j] = f.sub(&a[r * cols + j], &t);
            }
        }
        rank += 1;
    }
    rank
}

/// Number of rank-`k` matrices of shape `k x n` over a field with `order`
/// elements: `prod_{j<k} (Q^n - Q^j)`.
pub fn count_full_rank(order: u64, k: usize, n: usize) -> Result<BigUint> {
    if order < 2 {
        return Err(Error::invalid(
            "Q",
            format!("field order must be at least 2, got {order}"),
        ));
    }
    if crate::ffield::prime_power_decompose(order).is_none() {
        return Err(Error::NotPrimePower { q: order });
    }
    if k < 1 {
        return Err(Error::invalid("k", "k must be at least 1"));
    }
    if k > n {
        return Err(Error::RowsExceedColumns { k, n });
    }
    let q = BigUint::from(order);
    let qn = q.pow(n as u32);
    Ok((0..k)
        .map(|j| &qn - q.pow(j as u32))
        .fold(BigUint::one(), |acc, t| acc * t))
}

/// `A = U * D * V` with `U`, `V` invertible over F_q[x] and `D` diagonal.
#[derive(Clone, Debug)]
pub struct SmithForm {
    pub u: PolyMatrix,
    pub d: PolyMatrix,
    pub v: PolyMatrix,
}

impl SmithForm {
    /// Diagonal of `D`: monic invariant factors, then zeros.
    pub fn invariants(&self) -> Vec<Poly> {
        (0..self.d.k.min(self.d.n))
            .map(|i| self.d.get(i, i).clone())
            .collect()
    }
}

struct SmithState {
    u: PolyMatrix,
    d: PolyMatrix,
    v: PolyMatrix,
}

impl SmithState {
    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        let n = self.d.n;
        for c in 0..n {
            self.d.entries.swap(i * n + c, j * n + c);
        }
        let k = self.u.n;
        for r in 0..k {
            self.u.entries.swap(r * k + i, r * k + j);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        let n = self.d.n;
        for r in 0..self.d.k {
            self.d.entries.swap(r * n + i, r * n + j);
        }
        for c in 0..n {
            self.v.entries.swap(i * n + c, j * n + c);
        }
    }

    /// row_i += c * row_j on D, with the matching inverse update of U.
    fn add_row_multiple(&mut self, i: usize, j: usize, c: &Poly) {
        for col in 0..self.d.n {
            let t = c * self.d.get(j, col);
            let e = self.d.get_mut(i, col);
            *e = &*e + &t;
        }
        for r in 0..self.u.k {
            let t = c * self.u.get(r, i);
            let e = self.u.get_mut(r, j);
            *e = &*e - &t;
        }
    }

    /// col_j += c * col_i on D, with the matching inverse update of V.
    fn add_col_multiple(&mut self, j: usize, i: usize, c: &Poly) {
        for r in 0..self.d.k {
            let t = c * self.d.get(r, i);
            let e = self.d.get_mut(r, j);
            *e = &*e + &t;
        }
        for col in 0..self.v.n {
            let t = c * self.v.get(j, col);
            let e = self.v.get_mut(i, col);
            *e = &*e - &t;
        }
    }

    fn scale_row(&mut self, i: usize, unit: u32) {
        let f = self.d.field.clone();
        let inv = f.inv_raw(unit).expect("unit is nonzero");
        for col in 0..self.d.n {
            let e = self.d.get_mut(i, col);
            *e = e.scale(unit);
        }
        for r in 0..self.u.k {
            let e = self.u.get_mut(r, i);
            *e = e.scale(inv);
        }
    }

    /// Nonzero entry of least degree in the trailing block; ties go to the
    /// smallest (row, column).
    fn pivot(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, usize)> = None;
        for i in t..self.d.k {
            for j in t..self.d.n {
                if let Some(deg) = self.d.get(i, j).degree() {
                    if best.is_none_or(|(bd, _, _)| deg < bd) {
                        best = Some((deg, i, j));
                    }
                }
            }
        }
        best.map(|(_, i, j)| (i, j))
    }
}

pub fn smith_normal_form(a: &PolyMatrix) -> SmithForm {
    let field = &a.field;
    let mut s = SmithState {
        u: PolyMatrix::identity(field, a.k),
        d: a.clone(),
        v: PolyMatrix::identity(field, a.n),
    };
    let (k, n) = (a.k, a.n);
    for t in 0..k.min(n) {
        loop {
            let Some((pi, pj)) = s.pivot(t) else {
                return SmithForm {
                    u: s.u,
                    d: s.d,
                    v: s.v,
                };
            };
            s.swap_rows(t, pi);
            s.swap_cols(t, pj);
            let pivot = s.d.get(t, t).clone();
            let mut clean = true;
            for i in t + 1..k {
                if s.d.get(i, t).is_zero() {
                    continue;
                }
                let (quot, rem) = s.d.get(i, t).div_rem(&pivot).expect("pivot is nonzero");
                s.add_row_multiple(i, t, &-&quot);
                clean &= rem.is_zero();
            }
            for j in t + 1..n {
                if s.d.get(t, j).is_zero() {
                    continue;
                }
                let (quot, rem) = s.d.get(t, j).div_rem(&pivot).expect("pivot is nonzero");
                s.add_col_multiple(j, t, &-&quot);
                clean &= rem.is_zero();
            }
            if !clean {
                continue;
            }
            let offender = (t + 1..k)
                .cartesian_product(t + 1..n)
                .find(|&(i, j)| !s.d.get(i, j).is_divisible_by(&pivot));
            match offender {
                Some((i, _)) => s.add_row_multiple(t, i, &Poly::one(field)),
                None => break,
            }
        }
        let lc = s.d.get(t, t).leading();
        if lc != 1 {
            let inv = field.inv_raw(lc).expect("pivot is nonzero");
            s.scale_row(t, inv);
        }
    }
    SmithForm {
        u: s.u,
        d: s.d,
        v: s.v,
    }
}

/// Rows `B` such that `[A; B]` is square with a nonzero constant determinant.
///
/// Returns `None` when `A` is already square and invertible.
pub fn complete_to_invertible(a: &PolyMatrix) -> Result<Option<PolyMatrix>> {
    require_wide(a)?;
    if a.k == a.n {
        return if a.determinant()?.is_unit() {
            Ok(None)
        } else {
            Err(Error::NotUnimodular)
        };
    }
    let snf = smith_normal_form(a);
    if !snf.invariants().iter().all(Poly::is_one) {
        return Err(Error::NotUnimodular);
    }
    // A = U [I | 0] V, so A = U * (top k rows of V); the other rows of V finish it.
    let n = a.n;
    let rows = snf.v.entries[a.k * n..].to_vec();
    Ok(Some(PolyMatrix::from_entries(&a.field, n - a.k, n, rows)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffield::make_field;
    use crate::polyring::irreducibles_up_to;

    fn f2() -> FieldSpec {
        make_field(2, 1).unwrap()
    }

    fn m(field: &FieldSpec, text: &str) -> PolyMatrix {
        parse_matrix(field, text).unwrap()
    }

    fn p(field: &FieldSpec, text: &str) -> Poly {
        parse_poly(field, text).unwrap()
    }

    #[test]
    fn minors_examples() {
        let f2 = f2();
        assert_eq!(
            maximal_minors(&m(&f2, "1|0,1")).unwrap(),
            vec![p(&f2, "1"), p(&f2, "x")]
        );
        assert_eq!(
            maximal_minors(&m(&f2, "1|0;0|1")).unwrap(),
            vec![p(&f2, "1")]
        );
        assert_eq!(
            maximal_minors(&m(&f2, "x|x+1;x+1|x")).unwrap(),
            vec![p(&f2, "1")]
        );
        assert_eq!(
            maximal_minors(&m(&f2, "1;1")).unwrap_err(),
            Error::RowsExceedColumns { k: 2, n: 1 }
        );
    }

    #[test]
    fn gcd_and_unimodularity_examples() {
        let f2 = f2();
        assert!(minors_gcd(&m(&f2, "1|x")).unwrap().is_one());
        assert_eq!(minors_gcd(&m(&f2, "x|x^2")).unwrap(), p(&f2, "x"));
        assert!(minors_gcd(&m(&f2, "|")).unwrap().is_zero());
        assert!(is_unimodular(&m(&f2, "1|x")).unwrap());
        assert!(!is_unimodular(&m(&f2, "x|x^2")).unwrap());
        assert!(is_unimodular(&m(&f2, "x|x+1;x+1|x")).unwrap());
        let err = is_unimodular(&m(&f2, "1;x")).unwrap_err();
        assert!(err
            .to_string()
            .contains("cannot extend a matrix with more rows than columns"));
    }

    #[test]
    fn e_p_examples() {
        let f2 = f2();
        let px = IrreducibleSet::new(&f2, vec![p(&f2, "x")]).unwrap();
        assert!(in_e_p(&m(&f2, "1|x"), &px).unwrap());
        assert!(!in_e_p(&m(&f2, "x|x^3"), &px).unwrap());
        assert!(in_e_p(&m(&f2, "x+1|x^2+1"), &px).unwrap());
        assert!(!in_e_p(&m(&f2, "0|0"), &px).unwrap());
        // no conditions at all: even the zero matrix belongs
        assert!(in_e_p(&m(&f2, "0|0"), &IrreducibleSet::empty(&f2)).unwrap());
        assert!(in_e_p_by_reduction(&m(&f2, "0|0"), &IrreducibleSet::empty(&f2)).unwrap());
        assert!(in_e_p_by_reduction(&m(&f2, "x+1|x^2+1"), &px).unwrap());
    }

    #[test]
    fn irreducible_set_validation() {
        let f2 = f2();
        let set = IrreducibleSet::new(&f2, vec![p(&f2, "x+1"), p(&f2, "x")]).unwrap();
        assert_eq!(set.members()[0], p(&f2, "x"));
        assert_eq!(set.product(), &p(&f2, "x^2+x"));
        assert_eq!(set.degree(), 2);
        assert!(matches!(
            IrreducibleSet::new(&f2, vec![p(&f2, "x^2+1")]),
            Err(Error::NotIrreducible(_))
        ));
        assert!(IrreducibleSet::new(&f2, vec![p(&f2, "x"), p(&f2, "x")]).is_err());
    }

    #[test]
    fn reduce_mod_examples() {
        let f2 = f2();
        let x = p(&f2, "x");
        let r = reduce_mod(&m(&f2, "x^2|x"), &x).unwrap();
        assert!(r.get(0, 0).is_zero() && r.get(0, 1).is_zero());
        let r = reduce_mod(&m(&f2, "x+1"), &x).unwrap();
        assert!(r.get(0, 0).is_one());
        let r = reduce_mod(&m(&f2, "x^2"), &p(&f2, "x^2+x+1")).unwrap();
        assert_eq!(r.get(0, 0), &p(&f2, "x+1"));
        assert!(reduce_mod(&m(&f2, "x"), &p(&f2, "x^2+1")).is_err());
    }

    #[test]
    fn quotient_field_inverses() {
        let f3 = make_field(3, 1).unwrap();
        let field = QuotientField::new(&p(&f3, "x^2+1")).unwrap();
        assert_eq!(field.order(), BigUint::from(9u32));
        for idx in 1..9 {
            let a = Poly::from_index(&f3, idx);
            let inv = field.inv(&a).unwrap();
            assert!(field.mul(&a, &inv).is_one());
        }
    }

    #[test]
    fn rank_examples() {
        let f2 = f2();
        let zero = FieldMatrix::new(f2.clone(), 2, 2, vec![0u32; 4]).unwrap();
        assert_eq!(rank_over_field(&zero), 0);
        let id = FieldMatrix::new(f2.clone(), 3, 3, vec![1, 0, 0, 0, 1, 0, 0, 0, 1]).unwrap();
        assert_eq!(rank_over_field(&id), 3);
        let ones = FieldMatrix::new(f2, 2, 2, vec![1u32; 4]).unwrap();
        assert_eq!(rank_over_field(&ones), 1);
    }

    #[test]
    fn full_rank_count_examples() {
        assert_eq!(count_full_rank(2, 1, 2).unwrap(), BigUint::from(3u32));
        assert_eq!(count_full_rank(2, 2, 2).unwrap(), BigUint::from(6u32));
        assert_eq!(count_full_rank(4, 1, 2).unwrap(), BigUint::from(15u32));
        assert!(count_full_rank(2, 3, 2).is_err());
        assert!(count_full_rank(1, 1, 2).is_err());
    }

    #[test]
    fn full_rank_count_brute_force() {
        for q in [2u64, 3, 4] {
            let field = FieldSpec::with_order(q).unwrap();
            for n in 1..=2usize {
                for k in 1..=n {
                    let cells = (k * n) as u32;
                    let mut hits = 0u64;
                    for code in 0..q.pow(cells) {
                        let mut c = code;
                        let entries = (0..cells)
                            .map(|_| {
                                let d = (c % q) as u32;
                                c /= q;
                                d
                            })
                            .collect();
                        let mat = FieldMatrix::new(field.clone(), k, n, entries).unwrap();
                        hits += (rank_over_field(&mat) == k) as u64;
                    }
                    assert_eq!(BigUint::from(hits), count_full_rank(q, k, n).unwrap());
                }
            }
        }
    }

    #[test]
    fn bareiss_matches_cofactor() {
        let f3 = make_field(3, 1).unwrap();
        let mut seed = 7u64;
        for _ in 0..20 {
            let idx: Vec<u64> = (0..25)
                .map(|_| {
                    seed = seed
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    (seed >> 33) % 27
                })
                .collect();
            let a = PolyMatrix::from_indices(&f3, 5, 5, &idx).unwrap();
            let refs: Vec<&Poly> = a.entries().iter().collect();
            // Laplace along the first row with 4x4 cofactor minors
            let mut expected = Poly::zero(&f3);
            for j in 0..5 {
                let mut minor = Vec::new();
                for i in 1..5 {
                    for c in (0..5).filter(|&c| c != j) {
                        minor.push(refs[i * 5 + c]);
                    }
                }
                let term = refs[j] * &det_cofactor(&f3, &minor, 4);
                expected = if j % 2 == 0 {
                    &expected + &term
                } else {
                    &expected - &term
                };
            }
            assert_eq!(a.determinant().unwrap(), expected);
        }
    }

    #[test]
    fn smith_examples() {
        let f2 = f2();
        let id = PolyMatrix::identity(&f2, 3);
        let snf = smith_normal_form(&id);
        assert!(snf.invariants().iter().all(Poly::is_one));

        let a = m(&f2, "x|x^2");
        let snf = smith_normal_form(&a);
        assert_eq!(snf.invariants(), vec![p(&f2, "x")]);
        assert_eq!(snf.u.mul(&snf.d).unwrap().mul(&snf.v).unwrap(), a);

        let a = m(&f2, "x|0;0|x");
        assert_eq!(
            smith_normal_form(&a).invariants(),
            vec![p(&f2, "x"), p(&f2, "x")]
        );

        let f3 = make_field(3, 1).unwrap();
        let a = m(&f3, "x^2+2|x+1|0;2x|x^2|1");
        let snf = smith_normal_form(&a);
        assert_eq!(snf.u.mul(&snf.d).unwrap().mul(&snf.v).unwrap(), a);
        assert!(snf.u.determinant().unwrap().is_unit());
        assert!(snf.v.determinant().unwrap().is_unit());
    }

    #[test]
    fn smith_divisibility_chain() {
        let f2 = f2();
        // diag(x, x+1) has invariants 1, x(x+1)
        let a = m(&f2, "x|0;0|x+1");
        let inv = smith_normal_form(&a).invariants();
        assert_eq!(inv, vec![p(&f2, "1"), p(&f2, "x^2+x")]);
    }

    #[test]
    fn completion_examples() {
        let f2 = f2();
        let b = complete_to_invertible(&m(&f2, "1|x")).unwrap().unwrap();
        assert_eq!(b, m(&f2, "0|1"));

        let a = m(&f2, "x|x+1");
        let b = complete_to_invertible(&a).unwrap().unwrap();
        assert!(a.stack(&b).unwrap().determinant().unwrap().is_unit());

        assert_eq!(
            complete_to_invertible(&m(&f2, "x|x^2")).unwrap_err(),
            Error::NotUnimodular
        );
        assert!(complete_to_invertible(&m(&f2, "x|x+1;x+1|x"))
            .unwrap()
            .is_none());
        assert!(complete_to_invertible(&m(&f2, "x|0;0|1")).is_err());
    }

    #[test]
    fn column_swap_keeps_minors_gcd() {
        let f3 = make_field(3, 1).unwrap();
        let a = m(&f3, "x|x+1|2;x^2|1|x");
        let b = a.select_columns(&[2, 1, 0]);
        assert_eq!(minors_gcd(&a).unwrap(), minors_gcd(&b).unwrap());
    }

    #[test]
    fn reduction_route_agrees_on_small_grid() {
        let f2 = f2();
        let table = irreducibles_up_to(&f2, 2).unwrap();
        let set = IrreducibleSet::new(&f2, table.all().cloned().collect()).unwrap();
        for code in 0..4u64.pow(4) {
            let idx: Vec<u64> = (0..4).map(|i| (code >> (2 * i)) & 3).collect();
            let a = PolyMatrix::from_indices(&f2, 2, 2, &idx).unwrap();
            assert_eq!(
                in_e_p(&a, &set).unwrap(),
                in_e_p_by_reduction(&a, &set).unwrap()
            );
        }
    }

    #[test]
    fn text_and_json_forms() {
        let f2 = f2();
        let a = m(&f2, "0,1|1,1");
        assert_eq!(a.rows(), 1);
        assert_eq!(a.get(0, 0), &p(&f2, "x"));
        assert_eq!(a.get(0, 1), &p(&f2, "x+1"));
        assert_eq!(a.to_text(), "0,1|1,1");
        assert!(
            matches!(parse_matrix(&f2, ""), Err(Error::Parse { msg, .. }) if msg == "empty matrix")
        );
        assert!(matches!(
            parse_matrix(&f2, "1|1;1"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_matrix(&f2, "1|2"),
            Err(Error::Parse { pos: 2, .. })
        ));
        let doc = a.to_doc();
        let json = serde_json::to_string(&doc).unwrap();
        assert_eq!(
            json,
            r#"{"q":2,"p":2,"e":1,"k":1,"n":2,"entries":[["0,1","1,1"]]}"#
        );
        let back: MatrixDoc = serde_json::from_str(&json).unwrap();
        assert_eq!(PolyMatrix::from_doc(&back).unwrap(), a);
    }
}
