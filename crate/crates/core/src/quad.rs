//! Quadrature rules: Gauss-Legendre of arbitrary order, adaptive
//! Gauss-Kronrod (10/21 point pair) and pairwise summation.

use std::collections::BinaryHeap;
use std::cmp::Ordering;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Pairwise (cascade) summation. The result depends only on the order of
/// `values`, never on how the values were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BASE: usize = 8;
    if values.len() <= BASE {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Gauss-Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on P_n with the Tricomi initial guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Integrate `f` over [a, b]; works for reversed limits too.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Mapped nodes and weights on [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (mid + half * x, w * half))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Shared 20-point rule used for the trajectory's cumulative integrals.
pub fn gl20() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(20))
}

/// Shared 16-point rule used by composite oscillatory panels.
pub fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208080372838,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// One Gauss-Kronrod 21 panel: (Kronrod value, |Kronrod - Gauss|).
pub fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kron = WGK[10] * fc;
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(mid - dx);
        let f2 = f(mid + dx);
        kron += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Tolerances for [`adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOpts {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for AdaptiveOpts {
    fn default() -> Self {
        AdaptiveOpts { rel_tol: 1e-10, abs_tol: 1e-300, max_intervals: 4000 }
    }
}

/// Integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss-Kronrod quadrature over [a, b], optionally with
/// initial breakpoints (strictly inside the interval) where the integrand is
/// known to lose smoothness.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: AdaptiveOpts,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, intervals: 0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut edges = vec![lo];
    let mut inner: Vec<f64> = breakpoints.iter().copied().filter(|&x| x > lo && x < hi).collect();
    inner.sort_by(f64::total_cmp);
    edges.extend(inner);
    edges.push(hi);

    let mut heap = BinaryHeap::new();
    let (mut total, mut err) = (0.0, 0.0);
    for w in edges.windows(2) {
        let (value, error) = gk21(&mut f, w[0], w[1]);
        total += value;
        err += error;
        heap.push(Panel { a: w[0], b: w[1], value, error });
    }
    loop {
        // Running sums drive termination only; the returned value is re-summed.
        if err <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            let (value, error) = totals(&heap);
            return Ok(QuadResult { value: sign * value, error, intervals: heap.len() });
        }
        if heap.len() >= opts.max_intervals {
            let (value, error) = totals(&heap);
            return Err(Error::Quadrature { value: sign * value, error, intervals: heap.len() });
        }
        let worst = heap.pop().expect("non-empty panel set");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b || worst.error == 0.0 {
            // Interval cannot be split further in floating point.
            err -= worst.error;
            heap.push(Panel { error: 0.0, ..worst });
            if heap.iter().all(|p| p.error == 0.0) {
                err = 0.0;
            }
            continue;
        }
        let (v1, e1) = gk21(&mut f, worst.a, mid);
        let (v2, e2) = gk21(&mut f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        if err < 0.0 {
            err = totals(&heap).1;
        }
    }
}

fn totals(heap: &BinaryHeap<Panel>) -> (f64, f64) {
    let mut panels: Vec<&Panel> = heap.iter().collect();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let values: Vec<f64> = panels.iter().map(|p| p.value).collect();
    let errors: Vec<f64> = panels.iter().map(|p| p.error).collect();
    (pairwise_sum(&values), pairwise_sum(&errors))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_weights_sum_to_two() {
        for n in [1, 2, 5, 16, 20, 64, 128] {
            let rule = GaussLegendre::new(n);
            let s: f64 = rule.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
        }
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let rule = GaussLegendre::new(10);
        for deg in 0..20 {
            let got = rule.integrate(-1.0, 1.0, |x| x.powi(deg));
            let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((got - want).abs() < 1e-14, "deg {deg}: {got} vs {want}");
        }
    }

    #[test]
    fn kronrod_weights_and_exactness() {
        let s: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        assert!((s - 2.0).abs() < 1e-15);
        let g: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((g - 2.0).abs() < 1e-15);
        for deg in 0..=31 {
            let (v, _) = gk21(&mut |x: f64| x.powi(deg), 0.0, 1.0);
            assert!((v - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "deg {deg}");
        }
    }

    #[test]
    fn adaptive_handles_peaks_and_reversed_limits() {
        let f = |x: f64| 1.0 / (1e-4 + x * x);
        let exact = 2.0 * (1.0 / 1e-4f64.sqrt()) * (1.0 / 1e-4f64.sqrt()).atan();
        let r = adaptive(f, -1.0, 1.0, &[], AdaptiveOpts { rel_tol: 1e-12, ..Default::default() }).unwrap();
        assert!((r.value - exact).abs() / exact < 1e-11);
        let rr = adaptive(f, 1.0, -1.0, &[], AdaptiveOpts { rel_tol: 1e-12, ..Default::default() }).unwrap();
        assert_eq!(rr.value, -r.value);
    }

    #[test]
    fn adaptive_reports_budget_exhaustion() {
        let r = adaptive(
            |x: f64| (1.0 / x).sin(),
            1e-9,
            1.0,
            &[],
            AdaptiveOpts { rel_tol: 1e-14, abs_tol: 0.0, max_intervals: 10 },
        );
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 4950.0);
    }
}
