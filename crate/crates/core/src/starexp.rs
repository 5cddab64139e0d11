//! Star exponential of the scaled oscillator `H = (pi^2 + Omega^2 xi^2) / 2`.
//!
//! Three routes to the same symbol:
//!
//! * closed form `sec(Omega tau / 2) exp[(2H / (i hbar Omega)) tan(Omega tau / 2)]`;
//! * the Weyl symbol of the Mehler propagator, whose defining integral is a
//!   complex Gaussian and is evaluated by formula;
//! * the Abel-regularised Fourier-Dirichlet series over the `W_n`.
//!
//! Wigner functions evolve by rotation in `(xi, pi / Omega)`; the same
//! evolution is available as star conjugation by the closed form.

use std::f64::consts::{FRAC_PI_4, PI};

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::ermakov::ErmakovSolution;
use crate::error::{Error, Result};
use crate::invariant::{scaled_energy, MAX_LAGUERRE_ORDER};
use crate::spectral::{signed_index, Fft1d};
use crate::star::{star_separable, Factor, StarGridOptions};
use crate::symbols::{GridSymbol, PhaseGrid, PhysContext, PolySymbol};

/// Width of the guard bands around poles, in units of `pi` in `Omega tau`.
pub const POLE_GUARD: f64 = 1e-3;

/// Damping added to the Gaussian exponent of the propagator integral.
pub const BRANCH_EPS: f64 = 1e-8;

/// Largest fraction of `sum |W|^2` that evolution may push off the grid.
pub const CLIP_LIMIT: f64 = 1e-10;

/// `H = (pi^2 + Omega^2 xi^2) / 2` sampled on the grid.
pub fn sho_hamiltonian(grid: &PhaseGrid, ctx: &PhysContext) -> GridSymbol {
    let w = ctx.omega_cap;
    GridSymbol::from_real_fn(*grid, move |xi, pi| scaled_energy(xi, pi, w))
}

/// `H` as an exact polynomial in `(xi, pi)`.
pub fn sho_hamiltonian_poly(ctx: &PhysContext) -> PolySymbol {
    PolySymbol::quadratic(0.5, 0.0, 0.5 * ctx.omega_cap * ctx.omega_cap)
}

/// Distance of `omega_tau / pi` to the nearest odd integer.
fn odd_pole_distance(omega_tau: f64) -> f64 {
    let x = omega_tau / PI - 1.0;
    (x - 2.0 * (0.5 * x).round()).abs()
}

fn check_odd_pole(omega_tau: f64) -> Result<()> {
    let distance = odd_pole_distance(omega_tau);
    if distance < POLE_GUARD {
        Err(Error::Pole { omega_tau, distance, guard: POLE_GUARD })
    } else {
        Ok(())
    }
}

/// `(sec(Omega tau / 2), tan(Omega tau / 2))` behind the pole guard.
pub fn closed_form_parts(tau: f64, ctx: &PhysContext) -> Result<(f64, f64)> {
    let theta = ctx.omega_cap * tau;
    check_odd_pole(theta)?;
    let half = 0.5 * theta;
    Ok((1.0 / half.cos(), half.tan()))
}

/// Closed form at a single value of `H`.
pub fn star_exp_closed_value(h: Complex64, tau: f64, ctx: &PhysContext) -> Result<Complex64> {
    let (sec, tan) = closed_form_parts(tau, ctx)?;
    Ok(closed_value(h, sec, tan, ctx))
}

fn closed_value(h: Complex64, sec: f64, tan: f64, ctx: &PhysContext) -> Complex64 {
    let k = Complex64::new(0.0, -2.0 * tan / (ctx.hbar * ctx.omega_cap));
    sec * (k * h).exp()
}

/// Closed form applied pointwise to sampled values of `H`.
pub fn star_exp_closed(h_vals: &GridSymbol, tau: f64, ctx: &PhysContext) -> Result<GridSymbol> {
    let (sec, tan) = closed_form_parts(tau, ctx)?;
    let c = *ctx;
    Ok(h_vals.map(move |h| closed_value(h, sec, tan, &c)))
}

/// The Mehler-kernel integral at fixed `tau`, reduced to the constants of
/// `2 pref e^{C0 xi^2} int exp(-a s^2 - b s) ds` with `b = 2 i pi / hbar`.
#[derive(Debug, Clone, Copy)]
struct Mehler {
    /// `2 pref sqrt(pi / a)` on the branch selected by damping.
    scale: Complex64,
    a: Complex64,
    /// Coefficient of `xi^2` in the exponent.
    c0: Complex64,
    hbar: f64,
}

impl Mehler {
    fn new(tau: f64, ctx: &PhysContext) -> Result<Self> {
        let (hbar, w) = (ctx.hbar, ctx.omega_cap);
        let theta = w * tau;
        check_odd_pole(theta)?;
        // Half-angle forms avoid cancellation in 1 + cos and cos - 1.
        let (sh, ch) = (0.5 * theta).sin_cos();
        let s = 2.0 * sh * ch;
        let (one_plus_c, c_minus_one) = (2.0 * ch * ch, -2.0 * sh * sh);
        let maslov = (theta / PI).floor();
        let pref = (w / (2.0 * PI * hbar * s.abs())).sqrt()
            * Complex64::from_polar(1.0, -FRAC_PI_4 - 0.5 * PI * maslov);
        let a = Complex64::new(0.0, -w * one_plus_c / (hbar * s));
        // The damped coefficient fixes the branch of sqrt(pi / a); the value
        // is its eps -> 0 limit.
        let damped = a + BRANCH_EPS;
        if !(damped.re > 0.0) || !damped.is_finite() {
            return Err(Error::BranchAmbiguity(-damped.re));
        }
        let pi_c = Complex64::new(PI, 0.0);
        let mut root = (pi_c / a).sqrt();
        let root_damped = (pi_c / damped).sqrt();
        if (root - root_damped).norm() > (root + root_damped).norm() {
            root = -root;
        }
        let scale = 2.0 * pref * root;
        let c0 = Complex64::new(0.0, w * c_minus_one / (hbar * s));
        Ok(Self { scale, a, c0, hbar })
    }

    fn value(&self, xi: f64, pi: f64) -> Complex64 {
        let b = Complex64::new(0.0, 2.0 * pi / self.hbar);
        self.scale * (b * b / (4.0 * self.a) + self.c0 * xi * xi).exp()
    }
}

/// Weyl symbol of the propagator, `2 int e^{-2 i s pi / hbar} K(xi + s, tau; xi - s, 0) ds`.
///
/// At `Omega tau` equal to a multiple `2 k pi` the kernel is `(-1)^k delta`
/// and the symbol is that constant; odd multiples of `pi` are poles.
pub fn star_exp_via_propagator(grid: &PhaseGrid, tau: f64, ctx: &PhysContext) -> Result<GridSymbol> {
    let theta = ctx.omega_cap * tau;
    let k = (theta / (2.0 * PI)).round();
    if (theta - 2.0 * PI * k).abs() <= 4.0 * f64::EPSILON * theta.abs().max(1.0) {
        let sign = if (k as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        return Ok(GridSymbol::constant(*grid, Complex64::new(sign, 0.0)));
    }
    let m = Mehler::new(tau, ctx)?;
    Ok(GridSymbol::from_fn(*grid, move |xi, pi| m.value(xi, pi)))
}

fn check_series(n_max: usize, abel_r: f64) -> Result<()> {
    if n_max > MAX_LAGUERRE_ORDER {
        return Err(Error::InvalidParameter(format!("n_max = {n_max} exceeds {MAX_LAGUERRE_ORDER}")));
    }
    if !(abel_r > 0.0 && abel_r <= 1.0) {
        return Err(Error::InvalidParameter(format!("Abel factor r = {abel_r} must lie in (0, 1]")));
    }
    Ok(())
}

/// Partial sum `2 pi hbar sum_{n <= n_max} r^n e^{-i tau Omega (n + 1/2)} W_n`
/// at one value of the scaled energy.
pub fn fourier_dirichlet_value(energy: f64, tau: f64, n_max: usize, abel_r: f64, ctx: &PhysContext) -> Result<Complex64> {
    check_series(n_max, abel_r)?;
    Ok(dirichlet_unchecked(energy, tau, n_max, abel_r, ctx))
}

fn dirichlet_unchecked(energy: f64, tau: f64, n_max: usize, abel_r: f64, ctx: &PhysContext) -> Complex64 {
    // 2 pi hbar W_n = 2 (-1)^n e^{-z/2} L_n(z), z = 4 I / (hbar Omega).
    let z = 4.0 * energy / (ctx.hbar * ctx.omega_cap);
    let theta = ctx.omega_cap * tau;
    let step = Complex64::from_polar(-abel_r, -theta);
    let mut weight = Complex64::from_polar(2.0 * (-0.5 * z).exp(), -0.5 * theta);
    let (mut prev, mut cur) = (1.0, 1.0 - z);
    let mut sum = weight * prev;
    for k in 1..=n_max {
        weight *= step;
        sum += weight * cur;
        let next = (((2 * k + 1) as f64 - z) * cur - k as f64 * prev) / (k + 1) as f64;
        prev = cur;
        cur = next;
    }
    sum
}

/// The full Abel-weighted series `n_max -> infinity` in closed form, from the
/// Laguerre generating function `sum L_n(z) t^n = e^{-t z / (1 - t)} / (1 - t)`
/// at `t = -r e^{-i Omega tau}`. Requires `r < 1`.
pub fn fourier_dirichlet_abel_limit(energy: f64, tau: f64, abel_r: f64, ctx: &PhysContext) -> Complex64 {
    let z = 4.0 * energy / (ctx.hbar * ctx.omega_cap);
    let theta = ctx.omega_cap * tau;
    let t = Complex64::from_polar(-abel_r, -theta);
    let one = Complex64::new(1.0, 0.0);
    2.0 * Complex64::from_polar((-0.5 * z).exp(), -0.5 * theta) * (-t * z / (one - t)).exp() / (one - t)
}

/// Fourier-Dirichlet partial sum on the grid.
pub fn fourier_dirichlet_sum(grid: &PhaseGrid, tau: f64, n_max: usize, abel_r: f64, ctx: &PhysContext) -> Result<GridSymbol> {
    check_series(n_max, abel_r)?;
    let c = *ctx;
    Ok(GridSymbol::from_fn(*grid, move |xi, pi| {
        dirichlet_unchecked(scaled_energy(xi, pi, c.omega_cap), tau, n_max, abel_r, &c)
    }))
}

/// `exp(-i Omega (n + 1/2) tau(t))`.
pub fn phase_function(sol: &ErmakovSolution, n: usize, t: f64) -> Result<Complex64> {
    let tau = sol.tau(t)?;
    let w = sol.model().omega_cap;
    Ok(Complex64::from_polar(1.0, -w * (n as f64 + 0.5) * tau))
}

/// Which side of the sampled symbol the star exponential multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpSide {
    Left,
    Right,
}

/// `Exp(tau) * w` or `w * Exp(tau)` with the exponential kept analytic.
///
/// The closed form factorises as `g(xi) g(pi)`, so the product runs through
/// [`star_separable`]; `w` must decay at the boundary, the exponential need
/// not.
pub fn star_with_exp(w: &GridSymbol, tau: f64, ctx: &PhysContext, side: ExpSide) -> Result<GridSymbol> {
    let (sec, tan) = closed_form_parts(tau, ctx)?;
    let k = -tan / (ctx.hbar * ctx.omega_cap);
    let w2 = ctx.omega_cap * ctx.omega_cap;
    let gx = move |xi: f64| Complex64::from_polar(sec, k * w2 * xi * xi);
    let gp = move |pi: f64| Complex64::from_polar(1.0, k * pi * pi);
    let expand = match side {
        ExpSide::Left => Factor::Right,
        ExpSide::Right => Factor::Left,
    };
    let pad = conjugation_padding(w.grid(), 1.0 / sec.abs(), ctx.omega_cap);
    star_separable(w, gx, gp, ctx, expand, pad, &StarGridOptions::default())
}

/// Padding that keeps the products of periodic copies off the grid.
///
/// In `(xi, pi / Omega)` the product of `Exp(tau)` with a function localised
/// at `z` sits at `(z + R z) / 2`, at distance `|z| |cos(Omega tau / 2)|` from
/// the origin. Copies lie at least one period away, so the period times
/// `|cos|` must exceed the grid radius by another grid radius plus margin.
fn conjugation_padding(grid: &PhaseGrid, cos_half: f64, omega: f64) -> usize {
    let (lx, lp) = (grid.x_max, grid.p_max / omega);
    let radius = lx.hypot(lp);
    let need = 3.0 * radius / (2.0 * lx.min(lp) * cos_half.max(1e-300));
    (need.ceil() as usize).max(2).next_power_of_two()
}

/// Evolution as star conjugation, `Exp(tau) * W0 * Exp(-tau)`.
///
/// The intermediate `Exp(tau) * W0` is the symbol of a cross term between the
/// evolved and initial states; it decays when both are localised, so the grid
/// must hold both.
pub fn evolve_by_conjugation(w0: &GridSymbol, tau: f64, ctx: &PhysContext) -> Result<GridSymbol> {
    let half = star_with_exp(w0, tau, ctx, ExpSide::Left)?;
    star_with_exp(&half, -tau, ctx, ExpSide::Right)
}

/// How evolution resamples the rotated function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Resampling {
    /// Three FFT shears per sub-rotation of at most `pi / 4`.
    #[default]
    Spectral,
    /// Bilinear interpolation at the rotated nodes.
    Bilinear,
}

/// Classical rotation of `W0` through `Omega tau`, spectral resampling.
pub fn evolve_wigner(w0: &GridSymbol, tau: f64, ctx: &PhysContext) -> Result<GridSymbol> {
    evolve_wigner_with(w0, tau, ctx, Resampling::Spectral)
}

/// `W(xi, pi) = W0(xi c - (pi / Omega) s, Omega xi s + pi c)` with
/// `(c, s) = (cos, sin)(Omega tau)`.
pub fn evolve_wigner_with(w0: &GridSymbol, tau: f64, ctx: &PhysContext, method: Resampling) -> Result<GridSymbol> {
    w0.check_decay(crate::invariant::DECAY_LIMIT.max(1e-10))?;
    let theta = ctx.omega_cap * tau;
    let theta = theta - 2.0 * PI * (theta / (2.0 * PI)).round();
    if theta == 0.0 {
        return Ok(w0.clone());
    }
    match method {
        Resampling::Spectral => rotate_spectral(w0, theta, ctx.omega_cap),
        Resampling::Bilinear => rotate_bilinear(w0, theta, ctx.omega_cap),
    }
}

fn energy(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum()
}

fn rotate_spectral(w0: &GridSymbol, theta: f64, omega: f64) -> Result<GridSymbol> {
    let grid = *w0.grid();
    let total = energy(w0.values());
    let steps = (theta.abs() / FRAC_PI_4).ceil().max(1.0) as usize;
    let phi = theta / steps as f64;
    let alpha = -(0.5 * phi).tan();
    let beta = phi.sin();
    let xs = grid.xs();
    let etas: Vec<f64> = grid.ps().iter().map(|p| p / omega).collect();
    let shift_x: Vec<f64> = etas.iter().map(|e| alpha * e).collect();
    let shift_p: Vec<f64> = xs.iter().map(|x| omega * beta * x).collect();
    let fx = Fft1d::new(2 * grid.n_x);
    let fp = Fft1d::new(2 * grid.n_p);

    let mut a = w0.values().clone();
    let mut lost = 0.0;
    for _ in 0..steps {
        lost += shear(&mut a, Axis(0), &shift_x, grid.dx(), &fx);
        lost += shear(&mut a, Axis(1), &shift_p, grid.dp(), &fp);
        lost += shear(&mut a, Axis(0), &shift_x, grid.dx(), &fx);
    }
    let fraction = if total > 0.0 { lost / total } else { 0.0 };
    if fraction > CLIP_LIMIT {
        return Err(Error::Clipped { fraction });
    }
    GridSymbol::new(grid, a)
}

/// Replaces every lane `f` along `axis` by `f(. + d)`, one shift per lane,
/// through a 2x zero-padded FFT. Returns the energy shifted into the padding.
fn shear(a: &mut Array2<Complex64>, axis: Axis, shifts: &[f64], h: f64, fft: &Fft1d) -> f64 {
    let n = a.len_of(axis);
    let m = fft.len();
    let lanes: Vec<Vec<Complex64>> = a.lanes(axis).into_iter().map(|l| l.to_vec()).collect();
    let zero = Complex64::new(0.0, 0.0);
    let out: Vec<(Vec<Complex64>, f64)> = lanes
        .into_par_iter()
        .zip(shifts.par_iter())
        .map(|(lane, &d)| {
            if d.abs() >= n as f64 * h {
                return (vec![zero; n], lane.iter().map(|v| v.norm_sqr()).sum());
            }
            let mut buf = vec![zero; m];
            buf[..n].copy_from_slice(&lane);
            let mut scratch = fft.scratch();
            fft.forward(&mut buf, &mut scratch);
            let dk = 2.0 * PI / (m as f64 * h);
            for (k, v) in buf.iter_mut().enumerate() {
                if k == m / 2 {
                    *v = zero;
                } else {
                    *v *= Complex64::from_polar(1.0 / m as f64, signed_index(k, m) as f64 * dk * d);
                }
            }
            fft.inverse(&mut buf, &mut scratch);
            let spill = buf[n..].iter().map(|v| v.norm_sqr()).sum();
            buf.truncate(n);
            (buf, spill)
        })
        .collect();
    let mut lost = 0.0;
    for (mut dst, (src, spill)) in a.lanes_mut(axis).into_iter().zip(out) {
        dst.iter_mut().zip(src).for_each(|(d, s)| *d = s);
        lost += spill;
    }
    lost
}

fn rotate_bilinear(w0: &GridSymbol, theta: f64, omega: f64) -> Result<GridSymbol> {
    let grid = *w0.grid();
    let (s, c) = theta.sin_cos();
    let inside = |x: f64, p: f64| x.abs() <= grid.x_max && p.abs() <= grid.p_max;
    // Input mass whose image under the rotation leaves the grid.
    let total = energy(w0.values());
    let mut lost = 0.0;
    for i in 0..grid.n_x {
        for j in 0..grid.n_p {
            let (xi, eta) = (grid.x(i), grid.p(j) / omega);
            let (x1, e1) = (c * xi + s * eta, -s * xi + c * eta);
            if !inside(x1, omega * e1) {
                lost += w0.at(i, j).norm_sqr();
            }
        }
    }
    let fraction = if total > 0.0 { lost / total } else { 0.0 };
    if fraction > CLIP_LIMIT {
        return Err(Error::Clipped { fraction });
    }
    Ok(GridSymbol::from_fn(grid, |xi, pi| {
        let eta = pi / omega;
        let (x0, e0) = (c * xi - s * eta, s * xi + c * eta);
        w0.interpolate(x0, omega * e0).unwrap_or_default()
    }))
}
