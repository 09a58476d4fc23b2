//! Exact censuses and seeded Monte Carlo estimates of
//! `|S ∩ M_N| / |M_N|`, where `M_N` holds the `k x n` matrices whose entries
//! are among `f_0, ..., f_N`.
//!
//! Census tuples are visited in odometer order: entries row-major, the last
//! entry varying fastest. Monte Carlo samples are grouped in batches of
//! [`MC_BATCH`]; batch `b` draws from ChaCha8 stream `b` of the seed, so the
//! hit count does not depend on how many workers run the batches.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::density::{
    density_e_p, density_e_p_degrees, density_unimodular, format_decimal, rational_string,
    DensityValue,
};
use crate::error::{Error, Result};
use crate::ffield::FieldSpec;
use crate::polymatrix::{gcd_coprime_to, minors_gcd_of, IrreducibleSet, PolyMatrix};
use crate::polyring::{is_irreducible, Poly};

pub const DEFAULT_CENSUS_BUDGET: u64 = 100_000_000;

/// Samples per Monte Carlo batch; each batch owns one generator stream.
pub const MC_BATCH: u64 = 4096;

/// Identifies the sampling scheme recorded with every estimate.
pub const RNG_ID: &str = "chacha8-seed_from_u64/stream-per-batch-4096/mulhi-u64";

/// Two-sided 99% normal quantile for the Wilson interval.
const Z_99: f64 = 2.5758293035489004;

/// Polynomials `f_0..=f_N` are precomputed when `N` is below this.
const POLY_CACHE_LIMIT: u64 = 1 << 20;

#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub census_budget: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            workers: 0,
            census_budget: DEFAULT_CENSUS_BUDGET,
        }
    }
}

impl RunConfig {
    pub fn with_workers(workers: usize) -> Self {
        RunConfig {
            workers,
            ..RunConfig::default()
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::invalid("workers", e.to_string()))
    }
}

/// The finite sample space `M_N` of `k x n` matrices.
#[derive(Clone, Debug)]
pub struct SpaceSpec {
    field: FieldSpec,
    k: usize,
    n: usize,
    bound: u64,
}

impl SpaceSpec {
    pub fn new(field: &FieldSpec, k: usize, n: usize, bound: u64) -> Result<Self> {
        if k < 1 {
            return Err(Error::invalid("k", "k must be at least 1"));
        }
        if k > n {
            return Err(Error::RowsExceedColumns { k, n });
        }
        if bound == u64::MAX {
            return Err(Error::invalid("N", "N + 1 must fit in 64 bits"));
        }
        Ok(SpaceSpec {
            field: field.clone(),
            k,
            n,
            bound,
        })
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The enumeration bound `N`.
    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn cells(&self) -> usize {
        self.k * self.n
    }

    /// `|M_N| = (N + 1)^{kn}`.
    pub fn size(&self) -> BigUint {
        BigUint::from(self.bound + 1).pow(self.cells() as u32)
    }
}

/// Which set a census or estimate measures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Predicate {
    /// `E`: unimodular matrices.
    Unimodular,
    /// `E_P`: minors gcd coprime to every member of `P`.
    CoprimeTo(IrreducibleSet),
    /// `H_f`: minors gcd divisible by the irreducible `f`.
    DivisibleBy(Poly),
}

impl Predicate {
    pub fn divisible_by(f: Poly) -> Result<Self> {
        if !is_irreducible(&f) {
            return Err(Error::NotIrreducible(f.to_human()));
        }
        Ok(Predicate::DivisibleBy(f))
    }

    fn check_field(&self, field: &FieldSpec) -> Result<()> {
        match self {
            Predicate::Unimodular => Ok(()),
            Predicate::CoprimeTo(set) => field.same_field(set.field()),
            Predicate::DivisibleBy(f) => field.same_field(f.field()),
        }
    }

    /// Evaluates the predicate on a row-major `k x n` grid, `k <= n`.
    pub(crate) fn holds_on(
        &self,
        field: &FieldSpec,
        k: usize,
        n: usize,
        entries: &[&Poly],
    ) -> bool {
        let g = minors_gcd_of(field, k, n, entries);
        match self {
            Predicate::Unimodular => g.is_one(),
            Predicate::CoprimeTo(set) => gcd_coprime_to(&g, set),
            Predicate::DivisibleBy(f) => g.is_divisible_by(f),
        }
    }

    pub fn holds(&self, a: &PolyMatrix) -> Result<bool> {
        self.check_field(a.field())?;
        if a.rows() > a.cols() {
            return Err(Error::RowsExceedColumns {
                k: a.rows(),
                n: a.cols(),
            });
        }
        let refs: Vec<&Poly> = a.entries().iter().collect();
        Ok(self.holds_on(a.field(), a.rows(), a.cols(), &refs))
    }

    /// The natural density of the set.
    pub fn theory(&self, q: u64, k: usize, n: usize) -> Result<DensityValue> {
        match self {
            Predicate::Unimodular => density_unimodular(q, k, n),
            Predicate::CoprimeTo(set) => density_e_p(k, n, set),
            Predicate::DivisibleBy(f) => {
                let d = f.degree().unwrap_or(0);
                let e_f = density_e_p_degrees(q, k, n, &[d])?;
                DensityValue::new(BigRational::one() - e_f.into_inner())
            }
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Unimodular => f.write_str("E"),
            Predicate::CoprimeTo(set) => {
                let names: Vec<String> = set.members().iter().map(Poly::to_human).collect();
                write!(f, "E_P{{{}}}", names.join(";"))
            }
            Predicate::DivisibleBy(p) => write!(f, "H_f{{{}}}", p.to_human()),
        }
    }
}

/// A source of entry indices, uniform on `[0, bound]`.
pub trait EntryStream {
    fn next_entry(&mut self, bound: u64) -> u64;
}

impl EntryStream for ChaCha8Rng {
    /// Exactly one `next_u64` per entry, mapped by the high half of a
    /// 64x64-bit product.
    fn next_entry(&mut self, bound: u64) -> u64 {
        let x = self.next_u64();
        ((x as u128 * (bound as u128 + 1)) >> 64) as u64
    }
}

/// Hands out one independent stream per Monte Carlo batch.
pub trait StreamSource: Sync {
    type Stream: EntryStream;

    fn stream(&self, batch: u64) -> Self::Stream;
    fn id(&self) -> String;
}

/// The default source: ChaCha8 seeded from a `u64`, stream index = batch.
#[derive(Clone, Copy, Debug)]
pub struct ChaChaSource {
    pub seed: u64,
}

impl StreamSource for ChaChaSource {
    type Stream = ChaCha8Rng;

    fn stream(&self, batch: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(batch);
        rng
    }

    fn id(&self) -> String {
        RNG_ID.to_string()
    }
}

/// Draws one matrix of `M_N`: each entry is `f_l` with `l` from the stream,
/// entries drawn row-major.
pub fn sample_matrix(space: &SpaceSpec, stream: &mut impl EntryStream) -> PolyMatrix {
    let idx: Vec<u64> = (0..space.cells())
        .map(|_| stream.next_entry(space.bound))
        .collect();
    PolyMatrix::from_indices(&space.field, space.k, space.n, &idx)
        .expect("shape checked by SpaceSpec")
}

struct PolyTable {
    field: FieldSpec,
    cached: Vec<Poly>,
}

impl PolyTable {
    fn new(field: &FieldSpec, bound: u64) -> Self {
        let cached = if bound < POLY_CACHE_LIMIT {
            (0..=bound).map(|m| Poly::from_index(field, m)).collect()
        } else {
            Vec::new()
        };
        PolyTable {
            field: field.clone(),
            cached,
        }
    }

    fn get(&self, m: u64) -> std::borrow::Cow<'_, Poly> {
        match self.cached.get(m as usize) {
            Some(p) => std::borrow::Cow::Borrowed(p),
            None => std::borrow::Cow::Owned(Poly::from_index(&self.field, m)),
        }
    }
}

/// Exact count of `S ∩ M_N`.
#[derive(Clone, Debug)]
pub struct CensusResult {
    pub space: SpaceSpec,
    pub predicate: Predicate,
    pub hits: u64,
    pub total: u64,
    pub ratio: DensityValue,
}

fn census_size(space: &SpaceSpec, budget: u64) -> Result<u64> {
    let size = space.size();
    size.to_u64()
        .filter(|&s| s <= budget)
        .ok_or_else(|| Error::BudgetExceeded {
            what: "census",
            required: size.to_string(),
            budget,
        })
}

/// Visits all `(N+1)^{kn}` tuples and counts the members of the predicate's set.
pub fn exhaustive_census(
    space: &SpaceSpec,
    predicate: &Predicate,
    config: &RunConfig,
) -> Result<CensusResult> {
    predicate.check_field(&space.field)?;
    let total = census_size(space, config.census_budget)?;
    let table = PolyTable::new(&space.field, space.bound);
    let radix = space.bound + 1;
    let cells = space.cells();
    const CHUNK: u64 = 1 << 14;
    let chunks = total.div_ceil(CHUNK);
    let count_chunk = |c: u64| -> u64 {
        let start = c * CHUNK;
        let end = (start + CHUNK).min(total);
        // odometer digits of `start`, most significant entry first
        let mut digits = vec![0u64; cells];
        let mut rest = start;
        for d in digits.iter_mut().rev() {
            *d = rest % radix;
            rest /= radix;
        }
        let mut entries: Vec<_> = digits.iter().map(|&d| table.get(d)).collect();
        let mut hits = 0u64;
        for _ in start..end {
            let refs: Vec<&Poly> = entries.iter().map(|p| p.as_ref()).collect();
            if predicate.holds_on(&space.field, space.k, space.n, &refs) {
                hits += 1;
            }
            for pos in (0..cells).rev() {
                digits[pos] += 1;
                if digits[pos] < radix {
                    entries[pos] = table.get(digits[pos]);
                    break;
                }
                digits[pos] = 0;
                entries[pos] = table.get(0);
            }
        }
        hits
    };
    let hits: u64 = config
        .pool()?
        .install(|| (0..chunks).into_par_iter().map(count_chunk).sum());
    Ok(CensusResult {
        space: space.clone(),
        predicate: predicate.clone(),
        hits,
        total,
        ratio: DensityValue::ratio(hits, total)?,
    })
}

/// A seeded estimate of the census ratio.
#[derive(Clone, Debug)]
pub struct MCEstimate {
    pub space: SpaceSpec,
    pub predicate: Predicate,
    pub samples: u64,
    pub hits: u64,
    pub estimate: DensityValue,
    /// Half-width of the 99% Wilson score interval.
    pub ci_half_width: f64,
    /// Center of the Wilson interval.
    pub ci_center: f64,
    pub seed: u64,
    pub rng_id: String,
}

/// Wilson score interval at 99%: `(center, half_width)`.
pub fn wilson_interval(hits: u64, samples: u64) -> (f64, f64) {
    let n = samples as f64;
    let p = hits as f64 / n;
    let z2 = Z_99 * Z_99;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_99 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (center, half)
}

pub fn monte_carlo(
    space: &SpaceSpec,
    predicate: &Predicate,
    samples: u64,
    seed: u64,
    config: &RunConfig,
) -> Result<MCEstimate> {
    monte_carlo_with_source(
        space,
        predicate,
        samples,
        &ChaChaSource { seed },
        seed,
        config,
    )
}

/// [`monte_carlo`] with an arbitrary per-batch stream source.
pub fn monte_carlo_with_source<S: StreamSource>(
    space: &SpaceSpec,
    predicate: &Predicate,
    samples: u64,
    source: &S,
    seed: u64,
    config: &RunConfig,
) -> Result<MCEstimate> {
    if samples < 1 {
        return Err(Error::invalid("samples", "need at least one sample"));
    }
    predicate.check_field(&space.field)?;
    let batches = samples.div_ceil(MC_BATCH);
    let cells = space.cells();
    let run_batch = |b: u64| -> u64 {
        let mut stream = source.stream(b);
        let count = MC_BATCH.min(samples - b * MC_BATCH);
        let mut hits = 0;
        for _ in 0..count {
            let entries: Vec<Poly> = (0..cells)
                .map(|_| Poly::from_index(&space.field, stream.next_entry(space.bound)))
                .collect();
            let refs: Vec<&Poly> = entries.iter().collect();
            if predicate.holds_on(&space.field, space.k, space.n, &refs) {
                hits += 1;
            }
        }
        hits
    };
    let hits: u64 = config
        .pool()?
        .install(|| (0..batches).into_par_iter().map(run_batch).sum());
    let (ci_center, ci_half_width) = wilson_interval(hits, samples);
    Ok(MCEstimate {
        space: space.clone(),
        predicate: predicate.clone(),
        samples,
        hits,
        estimate: DensityValue::ratio(hits, samples)?,
        ci_half_width,
        ci_center,
        seed,
        rng_id: source.id(),
    })
}

/// Census of `E_P` at `N = m q^{d_P} - 1` against the closed-form count.
#[derive(Clone, Debug)]
pub struct LemmaCheck {
    pub bound: u64,
    pub census: u64,
    pub closed_form: BigRational,
    pub holds: bool,
}

/// `(m q^{d_P})^{kn} prod_{f in P} prod_{j=0}^{k-1} (1 - q^{(j-n) deg f})`.
pub fn lemma_closed_form(q: u64, k: usize, n: usize, set: &IrreducibleSet, m: u64) -> BigRational {
    let block = BigInt::from(m) * num_traits::pow(BigInt::from(q), set.degree());
    let mut acc = BigRational::from_integer(num_traits::pow(block, k * n));
    for f in set.members() {
        let d = f.degree().unwrap_or(0);
        for j in 0..k {
            let qd = num_traits::pow(BigInt::from(q), (n - j) * d);
            acc *= BigRational::new(&qd - BigInt::one(), qd);
        }
    }
    acc
}

pub fn lemma_exactness_check(
    field: &FieldSpec,
    k: usize,
    n: usize,
    set: &IrreducibleSet,
    m: u64,
    config: &RunConfig,
) -> Result<LemmaCheck> {
    if m < 1 {
        return Err(Error::invalid("m", "m must be at least 1"));
    }
    field.same_field(set.field())?;
    let block = field
        .q()
        .checked_pow(set.degree() as u32)
        .and_then(|b| b.checked_mul(m))
        .ok_or_else(|| Error::BudgetExceeded {
            what: "census",
            required: format!("({m} * {}^{})^{}", field.q(), set.degree(), k * n),
            budget: config.census_budget,
        })?;
    let space = SpaceSpec::new(field, k, n, block - 1)?;
    let census = exhaustive_census(&space, &Predicate::CoprimeTo(set.clone()), config)?;
    let closed_form = lemma_closed_form(field.q(), k, n, set, m);
    let holds = closed_form == BigRational::from_integer(census.hits.into());
    Ok(LemmaCheck {
        bound: space.bound,
        census: census.hits,
        closed_form,
        holds,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportMode {
    Exhaustive,
    MonteCarlo { samples: u64, seed: u64 },
}

/// One line of a report: the CSV/JSON columns, exact values as strings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub q: u64,
    pub p: u64,
    pub e: u32,
    pub k: usize,
    pub n: usize,
    #[serde(rename = "N")]
    pub bound: u64,
    pub predicate: String,
    pub hits: u64,
    pub total: u64,
    pub ratio: String,
    pub theory: String,
    pub gap: String,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub rng_id: Option<String>,
    pub ci: Option<f64>,
    #[serde(skip)]
    pub gap_value: BigRational,
}

impl ReportRow {
    fn build(
        space: &SpaceSpec,
        predicate: &Predicate,
        hits: u64,
        total: u64,
        ratio: &DensityValue,
    ) -> Result<Self> {
        let f = &space.field;
        let theory = predicate.theory(f.q(), space.k, space.n)?;
        let gap_value = ratio.value() - theory.value();
        Ok(ReportRow {
            q: f.q(),
            p: f.p(),
            e: f.e(),
            k: space.k,
            n: space.n,
            bound: space.bound,
            predicate: predicate.to_string(),
            hits,
            total,
            ratio: ratio.to_string(),
            theory: theory.to_string(),
            gap: rational_string(&gap_value),
            samples: None,
            seed: None,
            rng_id: None,
            ci: None,
            gap_value,
        })
    }

    /// Decimal rendering of the gap, for display next to the exact value.
    pub fn gap_decimal(&self, digits: usize) -> String {
        format_decimal(&self.gap_value, digits)
    }
}

impl CensusResult {
    pub fn to_row(&self) -> Result<ReportRow> {
        ReportRow::build(
            &self.space,
            &self.predicate,
            self.hits,
            self.total,
            &self.ratio,
        )
    }
}

impl MCEstimate {
    pub fn to_row(&self) -> Result<ReportRow> {
        let mut row = ReportRow::build(
            &self.space,
            &self.predicate,
            self.hits,
            self.samples,
            &self.estimate,
        )?;
        row.samples = Some(self.samples);
        row.seed = Some(self.seed);
        row.rng_id = Some(self.rng_id.clone());
        row.ci = Some(self.ci_half_width);
        Ok(row)
    }
}

/// Ratio (or estimate) against the closed-form density for each `N` in an
/// ascending schedule. No convergence rate is asserted.
pub fn convergence_report(
    field: &FieldSpec,
    k: usize,
    n: usize,
    predicate: &Predicate,
    schedule: &[u64],
    mode: ReportMode,
    config: &RunConfig,
) -> Result<Vec<ReportRow>> {
    if schedule.is_empty() {
        return Err(Error::invalid("schedule", "schedule is empty"));
    }
    if schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(
            "schedule",
            "schedule must be strictly ascending",
        ));
    }
    let mut rows = Vec::with_capacity(schedule.len());
    for &bound in schedule {
        let space = SpaceSpec::new(field, k, n, bound)?;
        let row = match mode {
            ReportMode::Exhaustive => exhaustive_census(&space, predicate, config)?.to_row()?,
            ReportMode::MonteCarlo { samples, seed } => {
                monte_carlo(&space, predicate, samples, seed, config)?.to_row()?
            }
        };
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffield::make_field;
    use crate::polymatrix::count_full_rank;
    use num_traits::{Signed, Zero};

    fn f(q: u64) -> FieldSpec {
        FieldSpec::with_order(q).unwrap()
    }

    fn cfg() -> RunConfig {
        RunConfig::with_workers(2)
    }

    fn set(field: &FieldSpec, idx: &[u64]) -> IrreducibleSet {
        IrreducibleSet::new(
            field,
            idx.iter().map(|&m| Poly::from_index(field, m)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn census_small_examples() {
        let f2 = f(2);
        let s = SpaceSpec::new(&f2, 1, 2, 3).unwrap();
        let c = exhaustive_census(&s, &Predicate::Unimodular, &cfg()).unwrap();
        assert_eq!((c.hits, c.total), (9, 16));
        assert_eq!(c.ratio.to_string(), "9/16");

        let s = SpaceSpec::new(&f2, 1, 2, 0).unwrap();
        assert_eq!(
            exhaustive_census(&s, &Predicate::Unimodular, &cfg())
                .unwrap()
                .hits,
            0
        );

        let s = SpaceSpec::new(&f2, 2, 2, 1).unwrap();
        let c = exhaustive_census(&s, &Predicate::Unimodular, &cfg()).unwrap();
        assert_eq!(BigUint::from(c.hits), count_full_rank(2, 2, 2).unwrap());
        assert_eq!(c.hits, 6);
    }

    #[test]
    fn census_budget_is_enforced() {
        let s = SpaceSpec::new(&f(2), 2, 2, 15).unwrap();
        let small = RunConfig {
            workers: 1,
            census_budget: 1000,
        };
        let err = exhaustive_census(&s, &Predicate::Unimodular, &small).unwrap_err();
        assert!(err.is_resource());
    }

    #[test]
    fn census_matches_direct_loop() {
        let f3 = f(3);
        let s = SpaceSpec::new(&f3, 1, 3, 4).unwrap();
        let mut hits = 0;
        for a in 0..5u64 {
            for b in 0..5u64 {
                for c in 0..5u64 {
                    let g = Poly::from_index(&f3, a)
                        .gcd(&Poly::from_index(&f3, b))
                        .unwrap()
                        .gcd(&Poly::from_index(&f3, c))
                        .unwrap();
                    if g.is_one() {
                        hits += 1;
                    }
                }
            }
        }
        let c = exhaustive_census(&s, &Predicate::Unimodular, &cfg()).unwrap();
        assert_eq!(c.hits, hits);
    }

    #[test]
    fn lemma_examples() {
        let f2 = f(2);
        let r = lemma_exactness_check(&f2, 1, 2, &set(&f2, &[2, 3]), 1, &cfg()).unwrap();
        assert_eq!((r.bound, r.census), (3, 9));
        assert!(r.holds);
        let r = lemma_exactness_check(&f2, 1, 2, &set(&f2, &[2]), 1, &cfg()).unwrap();
        assert_eq!((r.bound, r.census), (1, 3));
        assert!(r.holds);
        let f3 = f(3);
        let r = lemma_exactness_check(&f3, 1, 2, &set(&f3, &[3]), 2, &cfg()).unwrap();
        assert_eq!((r.bound, r.census), (5, 32));
        assert!(r.holds);
    }

    #[test]
    fn sample_matrix_degenerate_bounds() {
        let f3 = f(3);
        let mut rng = ChaChaSource { seed: 7 }.stream(0);
        let zero = SpaceSpec::new(&f3, 2, 3, 0).unwrap();
        for _ in 0..20 {
            let a = sample_matrix(&zero, &mut rng);
            assert!(a.entries().iter().all(Poly::is_zero));
        }
        let consts = SpaceSpec::new(&f3, 2, 3, 2).unwrap();
        for _ in 0..20 {
            let a = sample_matrix(&consts, &mut rng);
            assert!(a.entries().iter().all(|p| p.degree().unwrap_or(0) == 0));
        }
    }

    #[test]
    fn sample_matrix_golden() {
        let s = SpaceSpec::new(&f(2), 1, 2, 3).unwrap();
        let mut rng = ChaChaSource { seed: 20240601 }.stream(0);
        let a = sample_matrix(&s, &mut rng);
        let idx: Vec<u64> = a
            .entries()
            .iter()
            .map(|p| p.to_index_u64().unwrap())
            .collect();
        assert_eq!(idx, GOLDEN);
    }

    const GOLDEN: [u64; 2] = [1, 3];

    #[test]
    fn entry_draws_cover_range_uniformly() {
        let mut rng = ChaChaSource { seed: 1 }.stream(3);
        let mut counts = [0u32; 5];
        for _ in 0..50_000 {
            counts[rng.next_entry(4) as usize] += 1;
        }
        for c in counts {
            assert!((9_000..11_000).contains(&c), "{counts:?}");
        }
    }

    #[test]
    fn monte_carlo_examples() {
        let f2 = f(2);
        let s = SpaceSpec::new(&f2, 1, 2, 0).unwrap();
        let m = monte_carlo(&s, &Predicate::Unimodular, 1, 5, &cfg()).unwrap();
        assert_eq!(m.hits, 0);
        assert!(m.estimate.value().is_zero());

        let s = SpaceSpec::new(&f2, 1, 2, (1 << 16) - 1).unwrap();
        let m = monte_carlo(&s, &Predicate::Unimodular, 100_000, 11, &cfg()).unwrap();
        assert!((m.estimate.to_f64() - 0.5).abs() < 0.01);
        assert_eq!(m.rng_id, RNG_ID);

        let s = SpaceSpec::new(&f2, 2, 2, (1 << 10) - 1).unwrap();
        let m = monte_carlo(&s, &Predicate::Unimodular, 100_000, 11, &cfg()).unwrap();
        assert!(m.estimate.to_f64() <= 0.02);
    }

    #[test]
    fn monte_carlo_independent_of_workers() {
        let f3 = f(3);
        let s = SpaceSpec::new(&f3, 1, 2, 80).unwrap();
        let runs: Vec<u64> = [1, 2, 4]
            .iter()
            .map(|&w| {
                monte_carlo(
                    &s,
                    &Predicate::Unimodular,
                    10_000,
                    99,
                    &RunConfig::with_workers(w),
                )
                .unwrap()
                .hits
            })
            .collect();
        assert!(runs.windows(2).all(|w| w[0] == w[1]), "{runs:?}");
    }

    #[test]
    fn monte_carlo_rejects_zero_samples() {
        let s = SpaceSpec::new(&f(2), 1, 2, 3).unwrap();
        assert!(monte_carlo(&s, &Predicate::Unimodular, 0, 1, &cfg()).is_err());
    }

    #[test]
    fn wilson_interval_behaves_at_zero() {
        let (c, h) = wilson_interval(0, 100_000);
        assert!(c > 0.0 && c - h <= 1e-12 && c + h < 1e-4);
        let (c, h) = wilson_interval(50, 100);
        assert!((c - 0.5).abs() < 1e-12);
        assert!((h - 0.12472).abs() < 1e-5);
    }

    #[test]
    fn space_rejects_tall_shapes() {
        assert!(matches!(
            SpaceSpec::new(&f(2), 3, 2, 1),
            Err(Error::RowsExceedColumns { k: 3, n: 2 })
        ));
        assert!(SpaceSpec::new(&f(2), 0, 2, 1).is_err());
    }

    #[test]
    fn convergence_report_examples() {
        let f2 = make_field(2, 1).unwrap();
        let rows = convergence_report(
            &f2,
            1,
            2,
            &Predicate::Unimodular,
            &[3, 7, 15],
            ReportMode::Exhaustive,
            &cfg(),
        )
        .unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].ratio, "9/16");
        assert!(rows.iter().all(|r| r.theory == "1/2"));
        let last = rows.last().unwrap();
        assert!(last.gap_value.abs() < rows[0].gap_value.abs());

        let square = convergence_report(
            &f2,
            2,
            2,
            &Predicate::Unimodular,
            &[1, 3],
            ReportMode::MonteCarlo {
                samples: 500,
                seed: 3,
            },
            &cfg(),
        )
        .unwrap();
        assert!(square.iter().all(|r| r.theory == "0/1"));
        assert!(square
            .iter()
            .all(|r| r.seed == Some(3) && r.samples == Some(500)));

        let none = convergence_report(
            &f2,
            1,
            2,
            &Predicate::Unimodular,
            &[],
            ReportMode::Exhaustive,
            &cfg(),
        );
        assert!(none.is_err());
        let unsorted = convergence_report(
            &f2,
            1,
            2,
            &Predicate::Unimodular,
            &[3, 3],
            ReportMode::Exhaustive,
            &cfg(),
        );
        assert!(unsorted.is_err());
    }

    #[test]
    fn predicate_labels_and_theory() {
        let f2 = f(2);
        assert_eq!(Predicate::Unimodular.to_string(), "E");
        let p = Predicate::CoprimeTo(set(&f2, &[2, 3]));
        assert_eq!(p.to_string(), "E_P{x;x+1}");
        assert_eq!(p.theory(2, 1, 2).unwrap().to_string(), "9/16");
        let h = Predicate::divisible_by(Poly::from_index(&f2, 2)).unwrap();
        assert_eq!(h.to_string(), "H_f{x}");
        // 1 - (1 - 1/4) for k = 1, n = 2
        assert_eq!(h.theory(2, 1, 2).unwrap().to_string(), "1/4");
        assert!(Predicate::divisible_by(Poly::from_index(&f2, 4)).is_err());
    }

    #[test]
    fn report_row_serializes_columns() {
        let s = SpaceSpec::new(&f(2), 1, 2, 3).unwrap();
        let row = exhaustive_census(&s, &Predicate::Unimodular, &cfg())
            .unwrap()
            .to_row()
            .unwrap();
        let v = serde_json::to_value(&row).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        for col in [
            "q",
            "p",
            "e",
            "k",
            "n",
            "N",
            "predicate",
            "hits",
            "total",
            "ratio",
            "theory",
            "gap",
            "samples",
            "seed",
            "rng_id",
            "ci",
        ] {
            assert!(keys.contains(&col), "{col}");
        }
        assert_eq!(v["gap"], "1/16");
    }
}
