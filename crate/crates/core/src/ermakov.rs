//! The auxiliary (Ermakov-Pinney) equation
//! `rho'' + gamma rho' + omega^2 rho = Omega^2 / (m^2 rho^3)`,
//! the scaled time `tau(t) = int dt / (m rho^2)`, and classical trajectories.

use std::io::Write;

use crate::error::{Error, Result};
use crate::models::TdModel;
use crate::ode::{dopri5, dopri5_checked, integrate, DenseSolution};
use crate::symbols::io::fmt_f64;

/// Probe count for residual and drift diagnostics.
pub const PROBES: usize = 1001;

/// Absolute tolerance of the `tau` quadrature over the whole interval.
pub const TAU_TOL: f64 = 1e-10;

/// Local tolerance handed to the integrator so that the global error of the
/// returned interpolants stays below the user tolerance on moderate intervals.
fn local_tol(tol: f64) -> f64 {
    tol / 20.0
}

fn check_tol(tol: f64) -> Result<()> {
    if !(1e-12..=1e-6).contains(&tol) {
        return Err(Error::InvalidParameter(format!("tolerance {tol:e} outside [1e-12, 1e-6]")));
    }
    Ok(())
}

fn probes(t0: f64, t1: f64) -> impl Iterator<Item = f64> {
    (0..PROBES).map(move |k| t0 + (t1 - t0) * k as f64 / (PROBES - 1) as f64)
}

/// Fundamental solutions `u`, `v` of `x'' + gamma x' + omega^2 x = 0` with
/// `u(t0) = 1, u'(t0) = 0, v(t0) = 0, v'(t0) = 1`.
#[derive(Debug, Clone)]
pub struct LinearModes {
    sol: DenseSolution<4>,
    model: TdModel,
    /// `W(u, v) = u v' - u' v` at `t0`.
    pub wronskian: f64,
    /// `sup |m(t) W(t) / m(t0) - W(t0)|` over the probes.
    pub wronskian_drift: f64,
}

impl LinearModes {
    pub fn t0(&self) -> f64 {
        self.sol.t0()
    }

    pub fn t1(&self) -> f64 {
        self.sol.t1()
    }

    /// `[u, u', v, v']` at `t`.
    pub fn state(&self, t: f64) -> Result<[f64; 4]> {
        self.sol.eval(t)
    }

    pub fn u(&self, t: f64) -> Result<f64> {
        Ok(self.sol.eval(t)?[0])
    }

    pub fn v(&self, t: f64) -> Result<f64> {
        Ok(self.sol.eval(t)?[2])
    }

    pub fn wronskian_at(&self, t: f64) -> Result<f64> {
        let [u, du, v, dv] = self.sol.eval(t)?;
        Ok(u * dv - du * v)
    }

    pub fn model(&self) -> &TdModel {
        &self.model
    }
}

pub fn solve_linear_modes(model: &TdModel, t0: f64, t1: f64, tol: f64) -> Result<LinearModes> {
    check_tol(tol)?;
    model.validate_on(t0, t1, PROBES)?;
    let rhs = |t: f64, y: &[f64; 4]| {
        let g = model.gamma(t);
        let w2 = model.omega_sq(t);
        [y[1], -g * y[1] - w2 * y[0], y[3], -g * y[3] - w2 * y[2]]
    };
    let sol = dopri5(rhs, t0, [1.0, 0.0, 0.0, 1.0], t1, local_tol(tol))?;
    let m0 = model.m(t0);
    let mut drift: f64 = 0.0;
    for t in probes(t0, t1) {
        let [u, du, v, dv] = sol.eval_clamped(t);
        drift = drift.max((model.m(t) * (u * dv - du * v) / m0 - 1.0).abs());
    }
    let limit = 100.0 * tol;
    if drift > limit {
        return Err(Error::WronskianDrift { drift, limit });
    }
    Ok(LinearModes { sol, model: model.clone(), wronskian: 1.0, wronskian_drift: drift })
}

/// Starting data for `rho` when no closed form is imposed:
/// `rho0 = (Omega / (m omega_eff))^{1/2}`, `rho0' = -gamma rho0 / 2`, with
/// `omega_eff^2 = omega^2 - gamma^2/4 - gamma'/2`, the frequency of the
/// equation satisfied by `sqrt(m) x`.
pub fn initial_rho(model: &TdModel, t0: f64) -> Result<(f64, f64)> {
    let g = model.gamma(t0);
    let w2 = model.omega_sq(t0) - g * g / 4.0 - model.gamma_dot(t0) / 2.0;
    if w2 <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "effective frequency squared {w2} at t0 = {t0} is not positive; no oscillatory seed for rho"
        )));
    }
    let rho = (model.omega_cap / (model.m(t0) * w2.sqrt())).sqrt();
    Ok((rho, -g * rho / 2.0))
}

/// How `rho` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoMethod {
    /// Superposition `rho^2 = A u^2 + 2 B u v + C v^2` of the linear modes.
    Pinney,
    /// Direct integration of the auxiliary equation.
    Direct,
}

#[derive(Debug, Clone)]
enum Repr {
    Pinney { modes: LinearModes, a: f64, b: f64, c: f64 },
    Direct(DenseSolution<2>),
}

/// `rho`, `rho'` and `tau` on `[t0, t1]` with residual diagnostics.
#[derive(Debug, Clone)]
pub struct ErmakovSolution {
    model: TdModel,
    repr: Repr,
    t0: f64,
    t1: f64,
    tau_nodes: Vec<f64>,
    tau_values: Vec<f64>,
    pub residual_sup: f64,
    pub tol: f64,
}

impl ErmakovSolution {
    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn model(&self) -> &TdModel {
        &self.model
    }

    pub fn method(&self) -> RhoMethod {
        match self.repr {
            Repr::Pinney { .. } => RhoMethod::Pinney,
            Repr::Direct(_) => RhoMethod::Direct,
        }
    }

    fn check_range(&self, t: f64) -> Result<()> {
        let slack = 1e-12 * (1.0 + (self.t1 - self.t0).abs());
        if t >= self.t0 - slack && t <= self.t1 + slack {
            Ok(())
        } else {
            Err(Error::OutsideInterval { t, t0: self.t0, t1: self.t1 })
        }
    }

    /// `(rho, rho', rho'')` at `t` (clamped to the interval).
    fn jet(&self, t: f64) -> (f64, f64, f64) {
        match &self.repr {
            Repr::Pinney { modes, a, b, c } => {
                let [u, du, v, dv] = modes.sol.eval_clamped(t);
                let g = self.model.gamma(t);
                let w2 = self.model.omega_sq(t);
                let ddu = -g * du - w2 * u;
                let ddv = -g * dv - w2 * v;
                let q = a * u * u + 2.0 * b * u * v + c * v * v;
                let dq = 2.0 * (a * u * du + b * (du * v + u * dv) + c * v * dv);
                let ddq = 2.0 * (a * (du * du + u * ddu) + b * (ddu * v + 2.0 * du * dv + u * ddv) + c * (dv * dv + v * ddv));
                let rho = q.sqrt();
                (rho, dq / (2.0 * rho), ddq / (2.0 * rho) - dq * dq / (4.0 * rho * rho * rho))
            }
            Repr::Direct(sol) => {
                let [rho, drho] = sol.eval_clamped(t);
                let tc = t.clamp(self.t0, self.t1);
                let dd = sol.eval_derivative(tc).map(|d| d[1]).unwrap_or(f64::NAN);
                (rho, drho, dd)
            }
        }
    }

    pub fn rho(&self, t: f64) -> Result<f64> {
        self.check_range(t)?;
        Ok(self.jet(t).0)
    }

    pub fn rho_dot(&self, t: f64) -> Result<f64> {
        self.check_range(t)?;
        Ok(self.jet(t).1)
    }

    /// `|rho'' + gamma rho' + omega^2 rho - Omega^2 / (m^2 rho^3)|` at `t`.
    pub fn residual_at(&self, t: f64) -> Result<f64> {
        self.check_range(t)?;
        Ok(self.residual_unchecked(t))
    }

    fn residual_unchecked(&self, t: f64) -> f64 {
        let (r, dr, ddr) = self.jet(t);
        let m = self.model.m(t);
        let w = self.model.omega_cap;
        (ddr + self.model.gamma(t) * dr + self.model.omega_sq(t) * r - w * w / (m * m * r * r * r)).abs()
    }

    fn tau_integrand(&self, s: f64) -> f64 {
        let r = self.jet(s).0;
        1.0 / (self.model.m(s) * r * r)
    }

    /// `tau(t) = int_{t0}^{t} ds / (m rho^2)`.
    pub fn tau(&self, t: f64) -> Result<f64> {
        self.check_range(t)?;
        let t = t.clamp(self.t0, self.t1);
        let k = self.tau_nodes.partition_point(|&s| s <= t).saturating_sub(1).min(self.tau_nodes.len() - 2);
        let lo = self.tau_nodes[k];
        let share = TAU_TOL * ((t - lo) / (self.t1 - self.t0)).max(1e-3);
        Ok(self.tau_values[k] + integrate(|s| self.tau_integrand(s), lo, t, share)?)
    }

    /// Rows `(t, rho, rho', tau)` at `samples` equispaced times.
    pub fn samples(&self, samples: usize) -> Result<Vec<[f64; 4]>> {
        let n = samples.max(2);
        (0..n)
            .map(|k| {
                let t = self.t0 + (self.t1 - self.t0) * k as f64 / (n - 1) as f64;
                let (r, dr, _) = self.jet(t);
                Ok([t, r, dr, self.tau(t)?])
            })
            .collect()
    }

    /// CSV with header `t,rho,rhodot,tau`.
    pub fn write_csv<W: Write>(&self, mut out: W, samples: usize) -> Result<()> {
        writeln!(out, "t,rho,rhodot,tau")?;
        for row in self.samples(samples)? {
            writeln!(out, "{},{},{},{}", fmt_f64(row[0]), fmt_f64(row[1]), fmt_f64(row[2]), fmt_f64(row[3]))?;
        }
        Ok(())
    }
}

/// Solve for `rho` by the linear-mode superposition when the mass is
/// constant, by direct integration otherwise.
pub fn solve_rho(model: &TdModel, t0: f64, t1: f64, tol: f64) -> Result<ErmakovSolution> {
    let method = if model.has_constant_mass() { RhoMethod::Pinney } else { RhoMethod::Direct };
    solve_rho_with(model, t0, t1, tol, method)
}

pub fn solve_rho_with(model: &TdModel, t0: f64, t1: f64, tol: f64, method: RhoMethod) -> Result<ErmakovSolution> {
    check_tol(tol)?;
    model.validate_on(t0, t1, PROBES)?;
    let (rho0, drho0) = initial_rho(model, t0)?;
    let repr = match method {
        RhoMethod::Pinney => {
            let modes = solve_linear_modes(model, t0, t1, tol)?;
            // rho^2 = A u^2 + 2 B u v + C v^2 with A C - B^2 = (Omega / (m0 W0))^2.
            let a = rho0 * rho0;
            let b = rho0 * drho0;
            let k = model.omega_cap / (model.m(t0) * modes.wronskian);
            let c = (b * b + k * k) / a;
            Repr::Pinney { modes, a, b, c }
        }
        RhoMethod::Direct => {
            let w = model.omega_cap;
            let rhs = |t: f64, y: &[f64; 2]| {
                let m = model.m(t);
                [y[1], -model.gamma(t) * y[1] - model.omega_sq(t) * y[0] + w * w / (m * m * y[0].powi(3))]
            };
            let positive = |t: f64, y: &[f64; 2]| if y[0] > 0.0 { Ok(()) } else { Err(Error::RhoNonPositive { t }) };
            Repr::Direct(dopri5_checked(rhs, t0, [rho0, drho0], t1, local_tol(tol), positive)?)
        }
    };
    let nodes = match &repr {
        Repr::Pinney { modes, .. } => modes.sol.nodes(),
        Repr::Direct(sol) => sol.nodes(),
    };
    let mut sol = ErmakovSolution {
        model: model.clone(),
        repr,
        t0,
        t1,
        tau_nodes: nodes,
        tau_values: Vec::new(),
        residual_sup: 0.0,
        tol,
    };

    let mut residual: f64 = 0.0;
    for t in probes(t0, t1) {
        let r = sol.jet(t).0;
        if !(r > 0.0) {
            return Err(Error::RhoNonPositive { t });
        }
        residual = residual.max(sol.residual_unchecked(t));
    }
    if !residual.is_finite() || residual > 1000.0 * tol {
        return Err(Error::ResidualTooLarge { residual, limit: 1000.0 * tol });
    }
    sol.residual_sup = residual;

    let span = t1 - t0;
    let mut acc = 0.0;
    let mut values = vec![0.0];
    for w in sol.tau_nodes.windows(2) {
        let share = TAU_TOL * (w[1] - w[0]) / span;
        acc += integrate(|s| sol.tau_integrand(s), w[0], w[1], share)?;
        values.push(acc);
    }
    sol.tau_values = values;
    Ok(sol)
}

/// `tau(t)` of a solved auxiliary equation.
pub fn tau_of_t(sol: &ErmakovSolution, t: f64) -> Result<f64> {
    sol.tau(t)
}

/// A classical trajectory of `x'' + gamma x' + omega^2 x = 0`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    sol: DenseSolution<2>,
    model: TdModel,
}

impl Trajectory {
    pub fn x(&self, t: f64) -> Result<f64> {
        Ok(self.sol.eval(t)?[0])
    }

    pub fn xdot(&self, t: f64) -> Result<f64> {
        Ok(self.sol.eval(t)?[1])
    }

    /// Canonical momentum `p = m(t) x'(t)`.
    pub fn p(&self, t: f64) -> Result<f64> {
        Ok(self.model.m(t) * self.xdot(t)?)
    }

    /// `(x, p)` at `t`.
    pub fn phase_point(&self, t: f64) -> Result<(f64, f64)> {
        let [x, v] = self.sol.eval(t)?;
        Ok((x, self.model.m(t) * v))
    }
}

pub fn classical_trajectory(model: &TdModel, x0: f64, xdot0: f64, t0: f64, t1: f64, tol: f64) -> Result<Trajectory> {
    check_tol(tol)?;
    model.validate_on(t0, t1, PROBES)?;
    let rhs = |t: f64, y: &[f64; 2]| [y[1], -model.gamma(t) * y[1] - model.omega_sq(t) * y[0]];
    let sol = dopri5(rhs, t0, [x0, xdot0], t1, local_tol(tol))?;
    Ok(Trajectory { sol, model: model.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_model, FrequencySpec, Frequency, Mass, ModelPreset};
    use std::f64::consts::PI;

    fn sho() -> TdModel {
        build_model(&ModelPreset::sho()).unwrap()
    }

    fn ck(gamma0: f64) -> TdModel {
        build_model(&ModelPreset::CaldirolaKanai { m0: 1.0, gamma0, omega0: 1.0 }).unwrap()
    }

    #[test]
    fn unit_oscillator_modes() {
        let tol = 1e-10;
        let modes = solve_linear_modes(&sho(), 0.0, 2.0 * PI, tol).unwrap();
        for t in probes(0.0, 2.0 * PI) {
            assert!((modes.u(t).unwrap() - t.cos()).abs() <= tol);
            assert!((modes.v(t).unwrap() - t.sin()).abs() <= tol);
        }
        assert_eq!(modes.wronskian, 1.0);
    }

    #[test]
    fn damped_modes_match_closed_form() {
        let tol = 1e-10;
        let (g, w): (f64, f64) = (0.2, (1.0f64 - 0.01).sqrt());
        let modes = solve_linear_modes(&ck(g), 0.0, 10.0, tol).unwrap();
        for t in probes(0.0, 10.0) {
            let e = (-g * t / 2.0).exp();
            let u = e * ((w * t).cos() + g / (2.0 * w) * (w * t).sin());
            let v = e * (w * t).sin() / w;
            assert!((modes.u(t).unwrap() - u).abs() <= 10.0 * tol);
            assert!((modes.v(t).unwrap() - v).abs() <= 10.0 * tol);
            // Abel: m W is constant.
            assert!(((g * t).exp() * modes.wronskian_at(t).unwrap() - 1.0).abs() <= 100.0 * tol);
        }
    }

    #[test]
    fn constant_frequency_rho_is_constant() {
        let sol = solve_rho(&sho(), 0.0, 10.0, 1e-12).unwrap();
        assert_eq!(sol.method(), RhoMethod::Pinney);
        for t in probes(0.0, 10.0) {
            assert!((sol.rho(t).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(sol.residual_sup <= 1e-12, "{}", sol.residual_sup);
        assert!((sol.tau(7.5).unwrap() - 7.5).abs() < 1e-9);
    }

    #[test]
    fn caldirola_kanai_rho_and_tau() {
        let model = ck(0.6);
        let sol = solve_rho(&model, 0.0, 10.0, 1e-12).unwrap();
        assert_eq!(sol.method(), RhoMethod::Direct);
        let mut worst: f64 = 0.0;
        for t in probes(0.0, 10.0) {
            worst = worst.max((sol.rho(t).unwrap() - model.closed_rho(t).unwrap()).abs());
        }
        assert!(worst <= 1e-10, "{worst}");
        for t in [0.0, 1.0, 5.0, 10.0] {
            assert!((sol.tau(t).unwrap() - 0.91f64.sqrt() * t).abs() <= 1e-9);
        }
    }

    #[test]
    fn pinney_and_direct_agree_for_unit_mass() {
        let tol = 1e-11;
        let model = build_model(&ModelPreset::td_frequency()).unwrap();
        let a = solve_rho_with(&model, 0.0, 10.0, tol, RhoMethod::Pinney).unwrap();
        let b = solve_rho_with(&model, 0.0, 10.0, tol, RhoMethod::Direct).unwrap();
        for t in probes(0.0, 10.0) {
            assert!((a.rho(t).unwrap() - b.rho(t).unwrap()).abs() <= 100.0 * tol);
        }
    }

    #[test]
    fn paul_trap_residual_on_long_interval() {
        let model = build_model(&ModelPreset::td_frequency()).unwrap();
        let sol = solve_rho(&model, 0.0, 20.0, 1e-11).unwrap();
        assert!(sol.residual_sup <= 1e-8, "{}", sol.residual_sup);
    }

    #[test]
    fn constant_paul_trap_reduces() {
        let model = build_model(&ModelPreset::TdFrequency { spec: FrequencySpec::PaulTrap { a: 2.0, b: 0.0 } }).unwrap();
        let sol = solve_rho(&model, 0.0, 5.0, 1e-12).unwrap();
        assert!((sol.rho(3.0).unwrap() - 2.0f64.powf(-0.25)).abs() < 1e-11);
    }

    #[test]
    fn tau_is_increasing_for_quench() {
        let model = build_model(&ModelPreset::TdFrequency { spec: FrequencySpec::quench() }).unwrap();
        let sol = solve_rho(&model, 0.0, 20.0, 1e-10).unwrap();
        let taus: Vec<f64> = probes(0.0, 20.0).map(|t| sol.tau(t).unwrap()).collect();
        assert!(taus.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn unit_frequency_tau_is_identity() {
        let model = TdModel::new(Mass::Constant(1.0), Frequency::Constant(1.0), 1.0, "unit").unwrap();
        let sol = solve_rho(&model, 0.0, 10.0, 1e-12).unwrap();
        assert!((sol.tau(10.0).unwrap() - 10.0).abs() <= 1e-9);
    }

    #[test]
    fn trajectories() {
        let tol = 1e-10;
        let tr = classical_trajectory(&sho(), 1.0, 0.0, 0.0, 10.0, tol).unwrap();
        for t in probes(0.0, 10.0) {
            let (x, p) = tr.phase_point(t).unwrap();
            assert!((x - t.cos()).abs() <= 10.0 * tol);
            assert!(((x * x + p * p) / 2.0 - 0.5).abs() <= 10.0 * tol);
        }
        let g: f64 = 0.2;
        let w = (1.0f64 - g * g / 4.0).sqrt();
        let tr = classical_trajectory(&ck(g), 1.0, 0.0, 0.0, 10.0, tol).unwrap();
        for t in probes(0.0, 10.0) {
            let exact = (-g * t / 2.0).exp() * ((w * t).cos() + g / (2.0 * w) * (w * t).sin());
            assert!((tr.x(t).unwrap() - exact).abs() <= 10.0 * tol);
        }
    }

    #[test]
    fn bad_tolerance_and_range() {
        assert!(solve_rho(&sho(), 0.0, 1.0, 1e-3).is_err());
        let sol = solve_rho(&sho(), 0.0, 1.0, 1e-10).unwrap();
        assert!(matches!(sol.rho(2.0), Err(Error::OutsideInterval { .. })));
    }

    #[test]
    fn csv_export() {
        let sol = solve_rho(&ck(0.6), 0.0, 2.0, 1e-10).unwrap();
        let mut buf = Vec::new();
        sol.write_csv(&mut buf, 5).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,rho,rhodot,tau");
        assert_eq!(lines.len(), 6);
    }
}
