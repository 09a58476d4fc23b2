//! Criterion benchmarks for the fqx kernels live in `benches/`; this crate
//! only provides their seeded inputs.

use fqx::experiment::{sample_matrix, ChaChaSource, SpaceSpec, StreamSource};
use fqx::{FieldSpec, PolyMatrix};

/// `count` matrices of shape `k x n` with entry indices in `[0, bound]`.
pub fn matrices(
    q: u64,
    k: usize,
    n: usize,
    bound: u64,
    count: usize,
    seed: u64,
) -> Vec<PolyMatrix> {
    let field = FieldSpec::with_order(q).expect("valid order");
    let space = SpaceSpec::new(&field, k, n, bound).expect("valid shape");
    let mut stream = ChaChaSource { seed }.stream(0);
    (0..count)
        .map(|_| sample_matrix(&space, &mut stream))
        .collect()
}
