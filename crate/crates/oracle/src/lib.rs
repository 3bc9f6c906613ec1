//! Reference numerics for tests.
//!
//! Nothing in here shares code with `fracvb`: the quadrature is a plain
//! adaptive Gauss–Kronrod (7/15) integrator and the series oracles are
//! straightforward partial sums. Test suites use these to freeze expected
//! values and to cross-check closed forms.

use std::f64::consts::PI;

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1].
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
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for k in 0..7 {
        let dx = h * XGK[k];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (est, err) = gk15(f, a, b);
    if err <= tol.max(4.0 * f64::EPSILON * est.abs()) || depth == 0 || (b - a).abs() < 1e-15 * (a.abs() + b.abs()) {
        return est;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// Integrate `f` over the finite interval `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    // Pre-split so narrow features are not missed by the first panel.
    let pieces = 16;
    let w = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| {
            let lo = a + w * k as f64;
            let hi = if k + 1 == pieces { b } else { lo + w };
            adapt(&f, lo, hi, tol / pieces as f64, 40)
        })
        .sum()
}

/// Integrate over the whole real line via `x = t / (1 - t^2)`.
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: F, tol: f64) -> f64 {
    let g = |t: f64| {
        let d = 1.0 - t * t;
        if d <= 0.0 {
            return 0.0;
        }
        let x = t / d;
        let jac = (1.0 + t * t) / (d * d);
        let v = f(x) * jac;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, -1.0, 1.0, tol)
}

/// Integrate over `[a, inf)` via `x = a + t / (1 - t)`.
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> f64 {
    let g = |t: f64| {
        let d = 1.0 - t;
        if d <= 0.0 {
            return 0.0;
        }
        let x = a + t / d;
        let v = f(x) / (d * d);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, tol)
}

/// Euler–Mascheroni constant from the harmonic partial sum with
/// Euler–Maclaurin tail corrections (`terms` summands).
pub fn euler_mascheroni(terms: usize) -> f64 {
    let n = terms as f64;
    // Sum smallest terms first.
    let h: f64 = (1..=terms).rev().map(|k| 1.0 / k as f64).sum();
    h - n.ln() - 1.0 / (2.0 * n) + 1.0 / (12.0 * n * n) - 1.0 / (120.0 * n.powi(4))
}

pub fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean) * (x - mean) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

/// Density of a finite Gaussian mixture.
pub fn gaussian_mixture_pdf(x: f64, weights: &[f64], means: &[f64], vars: &[f64]) -> f64 {
    weights
        .iter()
        .zip(means)
        .zip(vars)
        .map(|((w, m), v)| w * normal_pdf(x, *m, *v))
        .sum()
}

/// `KL(p || q)` for two densities on the real line by quadrature.
/// Points where `p` underflows contribute nothing.
pub fn kl_real_line<P: Fn(f64) -> f64, Q: Fn(f64) -> f64>(p: P, q: Q, tol: f64) -> f64 {
    integrate_real_line(
        |x| {
            let a = p(x);
            if a <= 0.0 {
                return 0.0;
            }
            let b = q(x);
            a * (a / b).ln()
        },
        tol,
    )
}

/// Running mean and standard error of a Monte-Carlo sample.
#[derive(Debug, Default, Clone, Copy)]
pub struct MeanAcc {
    n: u64,
    mean: f64,
    m2: f64,
}

impl MeanAcc {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}
