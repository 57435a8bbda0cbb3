//! Brute-force references for the elastic measures: every admissible
//! alignment or edit script is enumerated and the cheapest one kept.

#![allow(dead_code)]

fn min_over_paths(
    n: usize,
    m: usize,
    start: (usize, usize, f64),
    allowed: &dyn Fn(usize, usize) -> bool,
    step: &dyn Fn((usize, usize), (usize, usize)) -> f64,
) -> f64 {
    fn walk(
        at: (usize, usize),
        acc: f64,
        end: (usize, usize),
        allowed: &dyn Fn(usize, usize) -> bool,
        step: &dyn Fn((usize, usize), (usize, usize)) -> f64,
        best: &mut f64,
    ) {
        if at == end {
            *best = best.min(acc);
            return;
        }
        for (di, dj) in [(1, 1), (1, 0), (0, 1)] {
            let next = (at.0 + di, at.1 + dj);
            if next.0 > end.0 || next.1 > end.1 || !allowed(next.0, next.1) {
                continue;
            }
            walk(next, acc + step(at, next), end, allowed, step, best);
        }
    }
    let mut best = f64::INFINITY;
    if allowed(start.0, start.1) {
        walk(
            (start.0, start.1),
            start.2,
            (n, m),
            allowed,
            step,
            &mut best,
        );
    }
    best
}

pub fn dtw(a: &[f64], b: &[f64], band: Option<usize>, weight: &dyn Fn(usize) -> f64) -> f64 {
    // Cells are 1-based; the path visits (1,1) .. (n,m).
    let cost = |i: usize, j: usize| weight(i.abs_diff(j)) * (a[i - 1] - b[j - 1]).powi(2);
    let allowed = |i: usize, j: usize| band.is_none_or(|r| i.abs_diff(j) <= r);
    min_over_paths(a.len(), b.len(), (1, 1, cost(1, 1)), &allowed, &|_, to| {
        cost(to.0, to.1)
    })
}

pub fn erp(a: &[f64], b: &[f64], g: f64, band: Option<usize>) -> f64 {
    let allowed = |i: usize, j: usize| band.is_none_or(|r| i.abs_diff(j) <= r);
    let step = |from: (usize, usize), to: (usize, usize)| match (to.0 - from.0, to.1 - from.1) {
        (1, 1) => (a[to.0 - 1] - b[to.1 - 1]).abs(),
        (1, 0) => (a[to.0 - 1] - g).abs(),
        _ => (b[to.1 - 1] - g).abs(),
    };
    min_over_paths(a.len(), b.len(), (0, 0, 0.0), &allowed, &step)
}

pub fn twed(a: &[f64], b: &[f64], nu: f64, lambda: f64) -> f64 {
    let pa: Vec<f64> = std::iter::once(0.0).chain(a.iter().copied()).collect();
    let pb: Vec<f64> = std::iter::once(0.0).chain(b.iter().copied()).collect();
    // A script may not delete before the first match.
    let allowed = |i: usize, j: usize| (i == 0) == (j == 0);
    let step = |from: (usize, usize), to: (usize, usize)| match (to.0 - from.0, to.1 - from.1) {
        (1, 1) => {
            (pa[to.0] - pb[to.1]).abs()
                + (pa[from.0] - pb[from.1]).abs()
                + nu * (to.0.abs_diff(to.1) + from.0.abs_diff(from.1)) as f64
        }
        (1, 0) => (pa[to.0] - pa[from.0]).abs() + nu + lambda,
        _ => (pb[to.1] - pb[from.1]).abs() + nu + lambda,
    };
    min_over_paths(a.len(), b.len(), (0, 0, 0.0), &allowed, &step)
}

fn split_merge_cost(new: f64, prev: f64, other: f64, c: f64) -> f64 {
    let lo = prev.min(other);
    let hi = prev.max(other);
    if new >= lo && new <= hi {
        c
    } else {
        c + (new - prev).abs().min((new - other).abs())
    }
}

pub fn msm(a: &[f64], b: &[f64], c: f64) -> f64 {
    let step = |from: (usize, usize), to: (usize, usize)| {
        let (x, y) = (a[from.0 - 1], b[from.1 - 1]);
        match (to.0 - from.0, to.1 - from.1) {
            (1, 1) => (a[to.0 - 1] - b[to.1 - 1]).abs(),
            (1, 0) => split_merge_cost(a[to.0 - 1], x, y, c),
            _ => split_merge_cost(b[to.1 - 1], y, x, c),
        }
    };
    min_over_paths(
        a.len(),
        b.len(),
        (1, 1, (a[0] - b[0]).abs()),
        &|_, _| true,
        &step,
    )
}

/// `1 - L / min(len)` with `L` the longest chain of strictly increasing
/// index pairs whose values match.
pub fn lcss(a: &[f64], b: &[f64], eps: f64, band: Option<usize>) -> f64 {
    fn longest(
        a: &[f64],
        b: &[f64],
        eps: f64,
        band: Option<usize>,
        after: (usize, usize),
    ) -> usize {
        let mut best = 0;
        for i in after.0..a.len() {
            for j in after.1..b.len() {
                let near = band.is_none_or(|r| i.abs_diff(j) <= r);
                if near && (a[i] - b[j]).abs() <= eps {
                    best = best.max(1 + longest(a, b, eps, band, (i + 1, j + 1)));
                }
            }
        }
        best
    }
    1.0 - longest(a, b, eps, band, (0, 0)) as f64 / a.len().min(b.len()) as f64
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

pub fn wdtw_weight(g: f64, n: usize) -> impl Fn(usize) -> f64 {
    move |k| 1.0 / (1.0 + (-g * (k as f64 - n as f64 / 2.0)).exp())
}

pub fn dtw_band(window: f64, n: usize) -> usize {
    (window * n as f64 - 1e-9).ceil().max(0.0) as usize
}
