//! Dormand-Prince 5(4) with the Hairer dense output, and adaptive
//! Gauss-Kronrod (7, 15) quadrature.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th- and embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Dense output of order 4.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const MAX_STEPS: usize = 1_000_000;

/// One accepted step with its interpolation coefficients.
#[derive(Debug, Clone)]
struct Step<const D: usize> {
    t: f64,
    h: f64,
    r: [[f64; D]; 5],
}

impl<const D: usize> Step<D> {
    fn value(&self, t: f64) -> [f64; D] {
        let th = (t - self.t) / self.h;
        let th1 = 1.0 - th;
        std::array::from_fn(|k| {
            let r = &self.r;
            r[0][k] + th * (r[1][k] + th1 * (r[2][k] + th * (r[3][k] + th1 * r[4][k])))
        })
    }

    fn derivative(&self, t: f64) -> [f64; D] {
        let th = (t - self.t) / self.h;
        let th1 = 1.0 - th;
        std::array::from_fn(|k| {
            let r = &self.r;
            let d = r[1][k]
                + (1.0 - 2.0 * th) * r[2][k]
                + th * (2.0 - 3.0 * th) * r[3][k]
                + 2.0 * th * th1 * (1.0 - 2.0 * th) * r[4][k];
            d / self.h
        })
    }
}

/// Continuous solution of an initial value problem on `[t0, t1]`.
#[derive(Debug, Clone)]
pub struct DenseSolution<const D: usize> {
    steps: Vec<Step<D>>,
    t0: f64,
    t1: f64,
}

impl<const D: usize> DenseSolution<D> {
    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    /// Step boundaries, `t0` first and `t1` last.
    pub fn nodes(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.steps.iter().map(|s| s.t).collect();
        v.push(self.t1);
        v
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    fn locate(&self, t: f64) -> Result<&Step<D>> {
        let span = self.t1 - self.t0;
        let slack = 1e-12 * (1.0 + span.abs());
        if !(t >= self.t0 - slack && t <= self.t1 + slack) {
            return Err(Error::OutsideInterval { t, t0: self.t0, t1: self.t1 });
        }
        let k = self.steps.partition_point(|s| s.t <= t).saturating_sub(1);
        Ok(&self.steps[k])
    }

    pub fn eval(&self, t: f64) -> Result<[f64; D]> {
        Ok(self.locate(t)?.value(t))
    }

    /// Like [`DenseSolution::eval`] with `t` clamped to the interval.
    pub fn eval_clamped(&self, t: f64) -> [f64; D] {
        let t = t.clamp(self.t0, self.t1);
        let k = self.steps.partition_point(|s| s.t <= t).saturating_sub(1);
        self.steps[k].value(t)
    }

    /// Time derivative of the interpolant (not of the vector field).
    pub fn eval_derivative(&self, t: f64) -> Result<[f64; D]> {
        Ok(self.locate(t)?.derivative(t))
    }
}

fn axpy<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    std::array::from_fn(|k| y[k] + h * terms.iter().map(|(a, v)| a * v[k]).sum::<f64>())
}

/// Integrate `y' = f(t, y)` from `t0` to `t1 > t0` with mixed error control
/// `atol = rtol = tol`. `check` can veto a state (e.g. a sign condition).
pub fn dopri5<const D: usize, F>(f: F, t0: f64, y0: [f64; D], t1: f64, tol: f64) -> Result<DenseSolution<D>>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    dopri5_checked(f, t0, y0, t1, tol, |_, _| Ok(()))
}

pub fn dopri5_checked<const D: usize, F, C>(
    f: F,
    t0: f64,
    y0: [f64; D],
    t1: f64,
    tol: f64,
    check: C,
) -> Result<DenseSolution<D>>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
    C: Fn(f64, &[f64; D]) -> Result<()>,
{
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::InvalidParameter(format!("integration interval [{t0}, {t1}] is empty")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let scale = |a: &[f64; D], b: &[f64; D], k: usize| tol + tol * a[k].abs().max(b[k].abs());

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = initial_step(&f, t, &y, &k1, t1 - t0, tol);
    let mut steps = Vec::new();

    for _ in 0..MAX_STEPS {
        if t >= t1 {
            return Ok(DenseSolution { steps, t0, t1 });
        }
        let last = t + h >= t1 || t + 1.01 * h >= t1;
        if last {
            h = t1 - t;
        }
        if h <= 1e-14 * (1.0 + t.abs()) {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y1 = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t + h, &y1);

        let err = {
            let e = axpy(&[0.0; D], h, &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)]);
            let s: f64 = (0..D).map(|k| (e[k] / scale(&y, &y1, k)).powi(2)).sum();
            (s / D as f64).sqrt()
        };
        if !err.is_finite() {
            h *= 0.2;
            continue;
        }
        if err <= 1.0 {
            let tn = if last { t1 } else { t + h };
            check(tn, &y1)?;
            let ydiff: [f64; D] = std::array::from_fn(|k| y1[k] - y[k]);
            let bspl: [f64; D] = std::array::from_fn(|k| h * k1[k] - ydiff[k]);
            let r = [
                y,
                ydiff,
                bspl,
                std::array::from_fn(|k| ydiff[k] - h * k7[k] - bspl[k]),
                axpy(&[0.0; D], h, &[(D1, &k1), (D3, &k3), (D4, &k4), (D5, &k5), (D6, &k6), (D7, &k7)]),
            ];
            steps.push(Step { t, h, r });
            t = tn;
            y = y1;
            k1 = k7;
            h *= (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
    }
    Err(Error::StepSizeUnderflow { t, h })
}

/// Starting step from the size of the solution and its first derivatives.
fn initial_step<const D: usize, F>(f: &F, t: f64, y: &[f64; D], k1: &[f64; D], span: f64, tol: f64) -> f64
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    let sk = |k: usize| tol + tol * y[k].abs();
    let norm = |v: &dyn Fn(usize) -> f64| ((0..D).map(|k| (v(k) / sk(k)).powi(2)).sum::<f64>() / D as f64).sqrt();
    let d0 = norm(&|k| y[k]);
    let d1 = norm(&|k| k1[k]);
    let mut h0 = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    let y1: [f64; D] = std::array::from_fn(|k| y[k] + h0 * k1[k]);
    let k2 = f(t + h0, &y1);
    let d2 = norm(&|k| k2[k] - k1[k]) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1).min(span)
}

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
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Kronrod estimate and `|Kronrod - Gauss|` on `[a, b]`.
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let s = f(c - r * XGK[i]) + f(c + r * XGK[i]);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * r, ((k - g) * r).abs())
}

const MAX_SUBDIVISIONS: usize = 500;

/// Globally adaptive G7K15 integration to absolute tolerance `abs_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (v, e) = gk15(&f, a, b);
    let mut parts = vec![(a, b, v, e)];
    for _ in 0..MAX_SUBDIVISIONS {
        let total_err: f64 = parts.iter().map(|p| p.3).sum();
        if total_err <= abs_tol {
            return Ok(parts.iter().map(|p| p.2).sum());
        }
        // Bisect the interval with the largest error estimate.
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
    let error = parts.iter().map(|p| p.3).sum();
    Err(Error::Quadrature { a, b, error })
}
