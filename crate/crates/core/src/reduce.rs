//! Deterministic pairwise summation.
//!
//! The reduction tree depends only on the slice length, never on the number
//! of worker threads, so every sum in the crate is reproducible bit for bit.

const LEAF: usize = 32;
const PAR_THRESHOLD: usize = 1 << 14;

pub fn pairwise_sum(xs: &[f64]) -> f64 {
    pairwise_map_sum(xs, &|x| x)
}

/// Sum of `f(x)` over `xs`, reduced along a fixed binary tree.
pub fn pairwise_map_sum<F>(xs: &[f64], f: &F) -> f64
where
    F: Fn(f64) -> f64 + Sync,
{
    if xs.len() <= LEAF {
        let mut acc = 0.0;
        for &x in xs {
            acc += f(x);
        }
        return acc;
    }
    let (left, right) = xs.split_at(xs.len() / 2);
    if xs.len() >= PAR_THRESHOLD {
        let (a, b) = rayon::join(|| pairwise_map_sum(left, f), || pairwise_map_sum(right, f));
        a + b
    } else {
        pairwise_map_sum(left, f) + pairwise_map_sum(right, f)
    }
}

/// Pairwise sum of the elementwise product `xs[i] * ys[i]`.
pub fn pairwise_dot(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    if xs.len() <= LEAF {
        let mut acc = 0.0;
        for (x, y) in xs.iter().zip(ys) {
            acc += x * y;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    let (xl, xr) = xs.split_at(mid);
    let (yl, yr) = ys.split_at(mid);
    if xs.len() >= PAR_THRESHOLD {
        let (a, b) = rayon::join(|| pairwise_dot(xl, yl), || pairwise_dot(xr, yr));
        a + b
    } else {
        pairwise_dot(xl, yl) + pairwise_dot(xr, yr)
    }
}
