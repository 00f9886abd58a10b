//! Composite Simpson quadrature.

use alloc::vec::Vec;

/// Composite Simpson rule with `n` intervals (rounded up to an even count ≥ 2).
pub fn simpson<F: FnMut(f64) -> f64>(a: f64, b: f64, n: usize, mut f: F) -> f64 {
    let n = even_at_least_two(n);
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let x = a + i as f64 * h;
        if i % 2 == 1 {
            odd += f(x);
        } else {
            even += f(x);
        }
    }
    h / 3.0 * (f(a) + 4.0 * odd + 2.0 * even + f(b))
}

/// Composite Simpson over `[a, b]` split at `cuts`, with roughly `n`
/// intervals distributed by piece length.
///
/// The integrand receives `(s, anchor)`, where `anchor` is the midpoint of
/// the piece being integrated; step-function factors should be evaluated at
/// the anchor so that a jump at a cut is never sampled from the wrong side.
pub fn simpson_split<F>(a: f64, b: f64, n: usize, cuts: &[f64], mut f: F) -> f64
where
    F: FnMut(f64, f64) -> f64,
{
    if b <= a {
        return 0.0;
    }
    let mut nodes: Vec<f64> = Vec::with_capacity(cuts.len() + 2);
    nodes.push(a);
    nodes.extend(cuts.iter().copied().filter(|&c| c > a && c < b));
    nodes.push(b);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();

    let span = b - a;
    nodes
        .windows(2)
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            let share = libm::ceil((hi - lo) / span * n as f64) as usize;
            let anchor = 0.5 * (lo + hi);
            simpson(lo, hi, share, |s| f(s, anchor))
        })
        .sum()
}

fn even_at_least_two(n: usize) -> usize {
    let n = n.max(2);
    n + n % 2
}
