//! Lewis-Riesenfeld invariant and the diagonal Wigner functions
//! `W_n = (-1)^n / (pi hbar) e^{-2I/(hbar Omega)} L_n(4I/(hbar Omega))`.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::ermakov::{solve_rho, ErmakovSolution};
use crate::error::{Error, Result};
use crate::models::TdModel;
use crate::symbols::{GridSymbol, PhaseGrid, PhysContext};

/// Largest Laguerre order evaluated by forward recurrence.
pub const MAX_LAGUERRE_ORDER: usize = 500;

/// Required `boundary / peak` ratio of a sampled `W_n`.
pub const DECAY_LIMIT: f64 = 1e-12;

/// A solved auxiliary equation together with the physical constants.
#[derive(Debug, Clone)]
pub struct InvariantSpec {
    pub sol: ErmakovSolution,
    pub ctx: PhysContext,
}

impl InvariantSpec {
    /// `ctx.omega_cap` is taken from the model.
    pub fn new(sol: ErmakovSolution, hbar: f64) -> Result<Self> {
        let ctx = PhysContext::new(hbar, sol.model().omega_cap)?;
        Ok(Self { sol, ctx })
    }

    pub fn solve(model: &TdModel, t0: f64, t1: f64, tol: f64, hbar: f64) -> Result<Self> {
        Self::new(solve_rho(model, t0, t1, tol)?, hbar)
    }

    pub fn model(&self) -> &TdModel {
        self.sol.model()
    }

    /// `(rho, rho', m)` at `t`.
    fn scaling(&self, t: f64) -> Result<(f64, f64, f64)> {
        Ok((self.sol.rho(t)?, self.sol.rho_dot(t)?, self.model().m(t)))
    }

    /// `xi = x / rho`, `pi = p rho - m x rho'`.
    pub fn xi_pi_of_xp(&self, x: f64, p: f64, t: f64) -> Result<(f64, f64)> {
        let (r, dr, m) = self.scaling(t)?;
        Ok((x / r, p * r - m * x * dr))
    }

    /// Inverse of [`InvariantSpec::xi_pi_of_xp`].
    pub fn xp_of_xi_pi(&self, xi: f64, pi: f64, t: f64) -> Result<(f64, f64)> {
        let (r, dr, m) = self.scaling(t)?;
        let x = xi * r;
        Ok((x, (pi + m * x * dr) / r))
    }

    /// `I = (pi^2 + Omega^2 xi^2) / 2`.
    pub fn invariant_eval(&self, x: f64, p: f64, t: f64) -> Result<f64> {
        let (xi, pi) = self.xi_pi_of_xp(x, p, t)?;
        Ok(scaled_energy(xi, pi, self.ctx.omega_cap))
    }
}

/// `(pi^2 + Omega^2 xi^2) / 2`.
pub fn scaled_energy(xi: f64, pi: f64, omega: f64) -> f64 {
    0.5 * (pi * pi + omega * omega * xi * xi)
}

pub fn xi_pi_of_xp(spec: &InvariantSpec, x: f64, p: f64, t: f64) -> Result<(f64, f64)> {
    spec.xi_pi_of_xp(x, p, t)
}

pub fn invariant_eval(spec: &InvariantSpec, x: f64, p: f64, t: f64) -> Result<f64> {
    spec.invariant_eval(x, p, t)
}

/// `L_n(z)` by the forward three-term recurrence.
pub fn laguerre(n: usize, z: f64) -> Result<f64> {
    if n > MAX_LAGUERRE_ORDER {
        return Err(Error::InvalidParameter(format!("Laguerre order {n} exceeds {MAX_LAGUERRE_ORDER}")));
    }
    Ok(laguerre_unchecked(n, z))
}

fn laguerre_unchecked(n: usize, z: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 1.0 - z);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = (((2 * k + 1) as f64 - z) * cur - k as f64 * prev) / (k + 1) as f64;
        prev = cur;
        cur = next;
    }
    cur
}

/// `W_n` as a function of the scaled energy `I`.
pub fn wigner_of_energy(n: usize, energy: f64, ctx: &PhysContext) -> f64 {
    let s = energy / (ctx.hbar * ctx.omega_cap);
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign / (PI * ctx.hbar) * (-2.0 * s).exp() * laguerre_unchecked(n, 4.0 * s)
}

/// Coordinates of the sampled Wigner function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frame {
    /// Scaled coordinates `(xi, pi)`; time plays no role.
    XiPi,
    /// Original coordinates `(x, p)` at time `t`.
    Xp { t: f64 },
}

/// Half-extent in `xi` that contains `W_n` to the decay limit: the classical
/// turning radius plus six ground-state widths.
pub fn xi_extent(n: usize, ctx: &PhysContext) -> f64 {
    (ctx.hbar / ctx.omega_cap).sqrt() * (((2 * n + 1) as f64).sqrt() + 6.0)
}

/// Largest node spacing in `xi` for the eighth-order stencils to resolve the
/// Laguerre oscillations of `W_n` to about `1e-6`.
pub fn xi_spacing(n: usize, ctx: &PhysContext) -> f64 {
    0.12 * (ctx.hbar / ctx.omega_cap).sqrt() / ((2 * n + 1) as f64).sqrt()
}

fn pow2_at_least(v: f64) -> usize {
    let mut n = 64;
    while (n as f64) < v {
        n *= 2;
    }
    n
}

/// Grid for `W_n` in the `(xi, pi)` frame, with equal scaled resolution in
/// `xi` and `pi / Omega`.
pub fn auto_grid(n: usize, ctx: &PhysContext) -> Result<PhaseGrid> {
    let l = xi_extent(n, ctx);
    let nodes = pow2_at_least(2.0 * l / xi_spacing(n, ctx));
    PhaseGrid::new(nodes, nodes, l, ctx.omega_cap * l)
}

/// Grid for `W_n` pulled back to `(x, p)` at time `t`: the bounding box of
/// the sheared ellipse, at the resolution of [`auto_grid`].
pub fn auto_grid_xp(n: usize, spec: &InvariantSpec, t: f64) -> Result<PhaseGrid> {
    let base = auto_grid(n, &spec.ctx)?;
    let (r, dr, m) = spec.scaling(t)?;
    let x_max = r * base.x_max;
    let p_max = base.p_max / r + m * dr.abs() * base.x_max;
    PhaseGrid::new(base.n_x, base.n_p, x_max, p_max)
}

/// `W_n` sampled on `(xi, pi)` nodes.
pub fn wigner_xi_pi(n: usize, ctx: &PhysContext, grid: &PhaseGrid) -> Result<GridSymbol> {
    if n > MAX_LAGUERRE_ORDER {
        return Err(Error::InvalidParameter(format!("Laguerre order {n} exceeds {MAX_LAGUERRE_ORDER}")));
    }
    let w = *ctx;
    let sym = GridSymbol::from_real_fn(*grid, move |xi, pi| wigner_of_energy(n, scaled_energy(xi, pi, w.omega_cap), &w));
    sym.check_decay(DECAY_LIMIT)?;
    Ok(sym)
}

/// `W_n` in the requested frame; in `Xp { t }` it is the pullback through
/// `(x, p) -> (xi, pi)` at time `t`.
pub fn wigner_n(n: usize, spec: &InvariantSpec, grid: &PhaseGrid, frame: Frame) -> Result<GridSymbol> {
    match frame {
        Frame::XiPi => wigner_xi_pi(n, &spec.ctx, grid),
        Frame::Xp { t } => {
            if n > MAX_LAGUERRE_ORDER {
                return Err(Error::InvalidParameter(format!("Laguerre order {n} exceeds {MAX_LAGUERRE_ORDER}")));
            }
            let (r, dr, m) = spec.scaling(t)?;
            let ctx = spec.ctx;
            let sym = GridSymbol::from_real_fn(*grid, move |x, p| {
                let (xi, pi) = (x / r, p * r - m * x * dr);
                wigner_of_energy(n, scaled_energy(xi, pi, ctx.omega_cap), &ctx)
            });
            sym.check_decay(DECAY_LIMIT)?;
            Ok(sym)
        }
    }
}

/// Minimum value and the fraction of `int |W|` carried by negative values.
pub fn negativity(w: &GridSymbol) -> (f64, f64) {
    let min = w.values().iter().fold(f64::INFINITY, |m, v| m.min(v.re));
    let (neg, abs) = w.values().iter().fold((0.0, 0.0), |(n, a), v| (n + (-v.re).max(0.0), a + v.re.abs()));
    (min, if abs > 0.0 { neg / abs } else { 0.0 })
}

/// `int W` as a real number.
pub fn normalization(w: &GridSymbol) -> f64 {
    let c: Complex64 = w.integral();
    c.re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_model, ModelPreset};

    fn spec_for(preset: ModelPreset) -> InvariantSpec {
        InvariantSpec::solve(&build_model(&preset).unwrap(), 0.0, 10.0, 1e-11, 1.0).unwrap()
    }

    #[test]
    fn laguerre_values() {
        for z in [0.0, 0.5, 3.0, 40.0] {
            assert_eq!(laguerre(0, z).unwrap(), 1.0);
        }
        for n in 0..=50 {
            assert_eq!(laguerre(n, 0.0).unwrap(), 1.0);
        }
        assert_eq!(laguerre(1, 1.0).unwrap(), 0.0);
        // L_3(z) = (-z^3 + 9 z^2 - 18 z + 6) / 6.
        let z = 1.7f64;
        let l3 = (-z.powi(3) + 9.0 * z * z - 18.0 * z + 6.0) / 6.0;
        assert!((laguerre(3, z).unwrap() - l3).abs() < 1e-14);
        assert!(laguerre(501, 1.0).is_err());
    }

    #[test]
    fn sho_scaling_is_identity() {
        let s = spec_for(ModelPreset::sho());
        let (xi, pi) = s.xi_pi_of_xp(0.7, -1.1, 3.0).unwrap();
        assert!((xi - 0.7).abs() < 1e-12 && (pi + 1.1).abs() < 1e-12);
        let i = s.invariant_eval(0.7, -1.1, 3.0).unwrap();
        assert!((i - (0.49 + 1.21) / 2.0).abs() < 1e-12);
        assert_eq!(s.invariant_eval(0.0, 0.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn ck_scaling_at_origin_of_time() {
        let s = spec_for(ModelPreset::caldirola_kanai());
        let w0: f64 = 0.91f64.sqrt();
        let (x, p) = (0.8, -0.4);
        let (xi, pi) = s.xi_pi_of_xp(x, p, 0.0).unwrap();
        assert!((xi - x * w0.sqrt()).abs() < 1e-12);
        assert!((pi - (p / w0.sqrt() + 0.3 * x / w0.sqrt())).abs() < 1e-12);
        let (x2, p2) = s.xp_of_xi_pi(xi, pi, 0.0).unwrap();
        assert!((x2 - x).abs() < 1e-12 && (p2 - p).abs() < 1e-12);
        let (xi0, pi0) = s.xi_pi_of_xp(0.0, p, 4.0).unwrap();
        assert_eq!(xi0, 0.0);
        assert!((pi0 - p * s.sol.rho(4.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn ground_state_peak_and_normalisation() {
        let ctx = PhysContext::default();
        assert!((wigner_of_energy(0, 0.0, &ctx) - 1.0 / PI).abs() < 1e-15);
        for n in [0usize, 1, 4, 10] {
            let g = auto_grid(n, &ctx).unwrap();
            let w = wigner_xi_pi(n, &ctx, &g).unwrap();
            assert!((normalization(&w) - 1.0).abs() < 1e-8, "n={n}: {}", normalization(&w));
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((wigner_of_energy(n, 0.0, &ctx) - sign / PI).abs() < 1e-14);
        }
    }

    #[test]
    fn first_excited_state_vanishes_on_its_ellipse() {
        let ctx = PhysContext::new(0.7, 1.3).unwrap();
        let e = ctx.hbar * ctx.omega_cap / 4.0;
        for k in 0..16 {
            let th = k as f64 * PI / 8.0;
            let xi = (2.0 * e).sqrt() / ctx.omega_cap * th.cos();
            let pi = (2.0 * e).sqrt() * th.sin();
            assert!(wigner_of_energy(1, scaled_energy(xi, pi, ctx.omega_cap), &ctx).abs() < 1e-15);
        }
    }

    #[test]
    fn pullback_matches_composition() {
        let s = spec_for(ModelPreset::caldirola_kanai());
        let t = 2.0;
        let g = auto_grid_xp(2, &s, t).unwrap();
        let w = wigner_n(2, &s, &g, Frame::Xp { t }).unwrap();
        let mut worst: f64 = 0.0;
        for i in (0..g.n_x).step_by(7) {
            for j in (0..g.n_p).step_by(5) {
                let (xi, pi) = s.xi_pi_of_xp(g.x(i), g.p(j), t).unwrap();
                let want = wigner_of_energy(2, scaled_energy(xi, pi, 1.0), &s.ctx);
                worst = worst.max((w.at(i, j).re - want).abs());
            }
        }
        assert!(worst <= 1e-12);
        assert!((normalization(&w) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let ctx = PhysContext::default();
        let g = PhaseGrid::square(64, 3.0).unwrap();
        assert!(matches!(wigner_xi_pi(4, &ctx, &g), Err(Error::BoundaryDecay { .. })));
    }

    #[test]
    fn negativity_of_odd_states() {
        let ctx = PhysContext::default();
        let g = auto_grid(1, &ctx).unwrap();
        let (min, frac) = negativity(&wigner_xi_pi(1, &ctx, &g).unwrap());
        assert!((min + 1.0 / PI).abs() < 1e-3);
        assert!(frac > 0.0 && frac < 0.5);
        let (min0, frac0) = negativity(&wigner_xi_pi(0, &ctx, &g).unwrap());
        assert!(min0 >= 0.0 && frac0 == 0.0);
    }
}
