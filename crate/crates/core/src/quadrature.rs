//! Adaptive Gauss–Kronrod (7/15) quadrature for vector-valued integrands.
//!
//! The 7-point Gauss–Legendre rule and its 15-point Kronrod extension share
//! nodes, so each panel yields an estimate and an error bound from 15
//! evaluations. Panels are bisected worst-first until the summed error meets
//! the tolerance or the evaluation budget runs out.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use arrayvec::ArrayVec;

use crate::error::{Error, Result};

/// Fixed-capacity value vector returned by integrands.
pub type Vals = ArrayVec<f64, 10>;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and evaluation budget of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of integrand evaluations.
    pub budget: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-8, abs_tol: 1e-12, budget: 100_000 }
    }
}

/// Result of an integration: value, error estimate and evaluation count.
#[derive(Debug, Clone)]
pub struct QuadResult {
    pub value: Vals,
    pub error: f64,
    pub evals: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: Vals,
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
        self.error.total_cmp(&other.error).then_with(|| other.a.total_cmp(&self.a))
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

fn norm(v: &Vals) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn axpy(acc: &mut Vals, w: f64, x: &Vals) {
    if acc.is_empty() {
        acc.extend(x.iter().map(|v| w * v));
    } else {
        for (a, v) in acc.iter_mut().zip(x) {
            *a += w * v;
        }
    }
}

fn gk15<F>(f: &mut F, a: f64, b: f64) -> Result<Panel>
where
    F: FnMut(f64) -> Result<Vals>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let n = fc.len();
    let mut gauss = Vals::new();
    let mut kron = Vals::new();
    axpy(&mut kron, WGK[7], &fc);
    axpy(&mut gauss, WG[3], &fc);
    let mut samples: ArrayVec<(Vals, Vals), 7> = ArrayVec::new();
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        let mut sum = f1.clone();
        for (s, v) in sum.iter_mut().zip(&f2) {
            *s += v;
        }
        axpy(&mut kron, WGK[j], &sum);
        if j % 2 == 1 {
            axpy(&mut gauss, WG[j / 2], &sum);
        }
        samples.push((f1, f2));
    }
    let mut value = Vals::new();
    let mut error = 0.0_f64;
    for c in 0..n {
        let resk = kron[c];
        let mean = 0.5 * resk;
        let mut res_abs = WGK[7] * fc[c].abs();
        let mut res_asc = WGK[7] * (fc[c] - mean).abs();
        for (j, (f1, f2)) in samples.iter().enumerate() {
            res_abs += WGK[j] * (f1[c].abs() + f2[c].abs());
            res_asc += WGK[j] * ((f1[c] - mean).abs() + (f2[c] - mean).abs());
        }
        let e = rescale_error(
            (resk - gauss[c]) * half,
            res_abs * half.abs(),
            res_asc * half.abs(),
        );
        error = error.max(e);
        value.push(resk * half);
    }
    if value.iter().any(|v| !v.is_finite()) {
        return Err(Error::QuadratureBudgetExceeded { budget: 0, error: f64::INFINITY });
    }
    Ok(Panel { a, b, value, error })
}

/// Adaptively integrates a vector-valued function over `[a, b]`.
///
/// `counter` accumulates evaluations so nested integrations can share one budget.
pub fn integrate_with<F>(mut f: F, a: f64, b: f64, cfg: &QuadConfig, counter: &Cell<usize>) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<Vals>,
{
    let start = counter.get();
    let mut eval = |x: f64| {
        counter.set(counter.get() + 1);
        f(x)
    };
    if a == b {
        let probe = eval(a)?;
        let zero: Vals = probe.iter().map(|_| 0.0).collect();
        return Ok(QuadResult { value: zero, error: 0.0, evals: counter.get() - start });
    }
    let first = gk15(&mut eval, a, b)?;
    let mut total = first.value.clone();
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    loop {
        let target = cfg.abs_tol.max(cfg.rel_tol * norm(&total));
        if total_err <= target {
            break;
        }
        if counter.get() + 30 > cfg.budget {
            return Err(Error::QuadratureBudgetExceeded { budget: cfg.budget, error: total_err });
        }
        let worst = heap.pop().expect("panel heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let left = gk15(&mut eval, worst.a, mid)?;
        let right = gk15(&mut eval, mid, worst.b)?;
        for c in 0..total.len() {
            total[c] += left.value[c] + right.value[c] - worst.value[c];
        }
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum in a fixed order so the result does not depend on heap layout.
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut value = Vals::new();
    let mut error = 0.0;
    for p in &panels {
        axpy(&mut value, 1.0, &p.value);
        error += p.error;
    }
    Ok(QuadResult { value, error, evals: counter.get() - start })
}

/// Adaptive integration with a fresh evaluation counter.
pub fn integrate<F>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<Vals>,
{
    integrate_with(f, a, b, cfg, &Cell::new(0))
}

/// Scalar convenience wrapper.
pub fn integrate_scalar<F>(mut f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let r = integrate(
        |x| {
            let mut v = Vals::new();
            v.push(f(x)?);
            Ok(v)
        },
        a,
        b,
        cfg,
    )?;
    Ok(r.value[0])
}

/// Iterated adaptive integration over the unit square `[0,1]²`.
pub fn integrate_unit_square<F>(mut f: F, cfg: &QuadConfig, counter: &Cell<usize>) -> Result<QuadResult>
where
    F: FnMut(f64, f64) -> Result<Vals>,
{
    let inner_cfg = QuadConfig { rel_tol: cfg.rel_tol * 0.1, abs_tol: cfg.abs_tol * 0.1, budget: cfg.budget };
    integrate_with(
        |u| {
            let r = integrate_with(|v| f(u, v), 0.0, 1.0, &inner_cfg, counter)?;
            Ok(r.value)
        },
        0.0,
        1.0,
        cfg,
        counter,
    )
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = x;
                p0 = 1.0;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate_scalar(|x| Ok(x.powi(5) - 3.0 * x * x), -1.0, 2.0, &QuadConfig::default()).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let v = integrate_scalar(|x| Ok(1.0 / x.sqrt()), 0.0, 1.0, &QuadConfig::default()).unwrap();
        assert!((v - 2.0).abs() < 1e-7);
    }

    #[test]
    fn budget_is_enforced() {
        let cfg = QuadConfig { rel_tol: 1e-14, abs_tol: 0.0, budget: 100 };
        let r = integrate_scalar(|x| Ok((1.0 / x).sin()), 1e-6, 1.0, &cfg);
        assert!(matches!(r, Err(Error::QuadratureBudgetExceeded { .. })));
    }

    #[test]
    fn unit_square_product() {
        let counter = Cell::new(0);
        let r = integrate_unit_square(
            |u, v| {
                let mut out = Vals::new();
                out.push((u * v).exp());
                out.push(u + v);
                Ok(out)
            },
            &QuadConfig::default(),
            &counter,
        )
        .unwrap();
        // ∫∫ e^{uv} = Σ 1/(k!(k+1)²)
        let mut exact = 0.0;
        let mut fact = 1.0;
        for k in 0..30 {
            if k > 0 {
                fact *= k as f64;
            }
            exact += 1.0 / (fact * ((k + 1) * (k + 1)) as f64);
        }
        assert!((r.value[0] - exact).abs() < 1e-10);
        assert!((r.value[1] - 1.0).abs() < 1e-12);
        assert_eq!(counter.get(), r.evals);
    }

    #[test]
    fn gauss_legendre_weights_sum() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "n = {n}");
            let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
            if n >= 2 {
                assert!((m - 2.0 / 3.0).abs() < 1e-13);
            }
        }
    }
}
