//! Time-dependent oscillators `m(t)`, `omega(t)` and the preset catalog.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbols::PolySymbol;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Mass profile.
#[derive(Clone)]
pub enum Mass {
    Constant(f64),
    /// `m0 * exp(gamma0 * t)`.
    Exponential { m0: f64, gamma0: f64 },
    Custom(ScalarFn),
}

/// Frequency profile.
#[derive(Clone)]
pub enum Frequency {
    Constant(f64),
    /// `omega^2 = a + b cos t`.
    PaulTrap { a: f64, b: f64 },
    /// `omega1 + (omega2 - omega1) * S((t - t_on) / width)` with the quintic
    /// smoothstep `S`.
    Quench { omega1: f64, omega2: f64, t_on: f64, width: f64 },
    Custom(ScalarFn),
}

impl fmt::Debug for Mass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mass::Constant(m) => write!(f, "Constant({m})"),
            Mass::Exponential { m0, gamma0 } => write!(f, "Exponential {{ m0: {m0}, gamma0: {gamma0} }}"),
            Mass::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl fmt::Debug for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frequency::Constant(w) => write!(f, "Constant({w})"),
            Frequency::PaulTrap { a, b } => write!(f, "PaulTrap {{ a: {a}, b: {b} }}"),
            Frequency::Quench { omega1, omega2, t_on, width } => {
                write!(f, "Quench {{ omega1: {omega1}, omega2: {omega2}, t_on: {t_on}, width: {width} }}")
            }
            Frequency::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Quintic smoothstep on `[0, 1]`, clamped outside.
pub fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

/// Fourth-order central difference with the step `1e-5 * (1 + |t|)`.
fn central_difference(f: &dyn Fn(f64) -> f64, t: f64) -> f64 {
    let h = 1e-5 * (1.0 + t.abs());
    (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h)
}

/// A damped, driven-free oscillator `L = m(t)/2 (xdot^2 - omega(t)^2 x^2)`
/// together with the constant `Omega` of its scaled frame.
#[derive(Debug, Clone)]
pub struct TdModel {
    pub mass: Mass,
    pub frequency: Frequency,
    pub omega_cap: f64,
    pub label: String,
    pub preset: Option<ModelPreset>,
}

impl TdModel {
    pub fn new(mass: Mass, frequency: Frequency, omega_cap: f64, label: impl Into<String>) -> Result<Self> {
        if !(omega_cap > 0.0 && omega_cap.is_finite()) {
            return Err(Error::InvalidParameter(format!("Omega must be positive, got {omega_cap}")));
        }
        Ok(Self { mass, frequency, omega_cap, label: label.into(), preset: None })
    }

    pub fn m(&self, t: f64) -> f64 {
        match &self.mass {
            Mass::Constant(m) => *m,
            Mass::Exponential { m0, gamma0 } => m0 * (gamma0 * t).exp(),
            Mass::Custom(f) => f(t),
        }
    }

    pub fn omega_sq(&self, t: f64) -> f64 {
        match &self.frequency {
            Frequency::Constant(w) => w * w,
            Frequency::PaulTrap { a, b } => a + b * t.cos(),
            Frequency::Quench { .. } | Frequency::Custom(_) => self.omega(t).powi(2),
        }
    }

    pub fn omega(&self, t: f64) -> f64 {
        match &self.frequency {
            Frequency::Constant(w) => *w,
            Frequency::PaulTrap { .. } => self.omega_sq(t).sqrt(),
            Frequency::Quench { omega1, omega2, t_on, width } => {
                omega1 + (omega2 - omega1) * smoothstep((t - t_on) / width)
            }
            Frequency::Custom(f) => f(t),
        }
    }

    /// `gamma = mdot / m`.
    pub fn gamma(&self, t: f64) -> f64 {
        match &self.mass {
            Mass::Constant(_) => 0.0,
            Mass::Exponential { gamma0, .. } => *gamma0,
            Mass::Custom(f) => central_difference(&|s| f(s), t) / f(t),
        }
    }

    pub fn gamma_dot(&self, t: f64) -> f64 {
        match &self.mass {
            Mass::Constant(_) | Mass::Exponential { .. } => 0.0,
            Mass::Custom(_) => central_difference(&|s| self.gamma(s), t),
        }
    }

    pub fn has_constant_mass(&self) -> bool {
        matches!(self.mass, Mass::Constant(_))
    }

    /// Check `m > 0` and `omega^2` finite at `count` points of `[t0, t1]`.
    pub fn validate_on(&self, t0: f64, t1: f64, count: usize) -> Result<()> {
        for k in 0..=count {
            let t = t0 + (t1 - t0) * k as f64 / count as f64;
            let m = self.m(t);
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::InvalidParameter(format!("mass {m} is not positive at t = {t}")));
            }
            let w2 = self.omega_sq(t);
            if !w2.is_finite() || w2 < 0.0 {
                return Err(Error::InvalidParameter(format!("omega^2 = {w2} is not real-valued at t = {t}")));
            }
        }
        Ok(())
    }

    /// `H = p^2 / 2m + m omega^2 x^2 / 2` at time `t`.
    pub fn hamiltonian_symbol(&self, t: f64) -> PolySymbol {
        let m = self.m(t);
        PolySymbol::quadratic(0.5 / m, 0.0, 0.5 * m * self.omega_sq(t))
    }

    /// Closed-form `rho(t)` when the preset has one.
    pub fn closed_rho(&self, t: f64) -> Option<f64> {
        self.preset.as_ref().and_then(|p| p.closed_rho(t))
    }

    pub fn closed_tau(&self, t: f64) -> Option<f64> {
        self.preset.as_ref().and_then(|p| p.closed_tau(t))
    }
}

/// `hamiltonian_symbol` as a free function.
pub fn hamiltonian_symbol(model: &TdModel, t: f64) -> PolySymbol {
    model.hamiltonian_symbol(t)
}

/// Shipped frequency profiles for the time-dependent-frequency preset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum FrequencySpec {
    PaulTrap { a: f64, b: f64 },
    Quench { omega1: f64, omega2: f64, t_on: f64, width: f64 },
}

impl FrequencySpec {
    pub fn paul_trap() -> Self {
        FrequencySpec::PaulTrap { a: 1.0, b: 0.3 }
    }

    pub fn quench() -> Self {
        FrequencySpec::Quench { omega1: 1.0, omega2: 2.0, t_on: 2.0, width: 3.0 }
    }

    fn frequency(&self) -> Frequency {
        match *self {
            FrequencySpec::PaulTrap { a, b } => Frequency::PaulTrap { a, b },
            FrequencySpec::Quench { omega1, omega2, t_on, width } => Frequency::Quench { omega1, omega2, t_on, width },
        }
    }
}

/// The catalog of frequency profiles.
pub fn tdf_frequency_specs() -> Vec<(&'static str, FrequencySpec)> {
    vec![("paul_trap", FrequencySpec::paul_trap()), ("quench", FrequencySpec::quench())]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum ModelPreset {
    Sho { omega0: f64 },
    CaldirolaKanai { m0: f64, gamma0: f64, omega0: f64 },
    TdFrequency { spec: FrequencySpec },
}

impl ModelPreset {
    pub fn sho() -> Self {
        ModelPreset::Sho { omega0: 1.0 }
    }

    pub fn caldirola_kanai() -> Self {
        ModelPreset::CaldirolaKanai { m0: 1.0, gamma0: 0.6, omega0: 1.0 }
    }

    pub fn td_frequency() -> Self {
        ModelPreset::TdFrequency { spec: FrequencySpec::paul_trap() }
    }

    /// Preset by CLI name: `sho`, `ck` (or `caldirola_kanai`), `tdf` (or `td_frequency`).
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "sho" => Ok(Self::sho()),
            "ck" | "caldirola_kanai" => Ok(Self::caldirola_kanai()),
            "tdf" | "td_frequency" => Ok(Self::td_frequency()),
            other => Err(Error::InvalidParameter(format!("unknown model '{other}' (expected sho, ck or tdf)"))),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            ModelPreset::Sho { .. } => "sho",
            ModelPreset::CaldirolaKanai { .. } => "caldirola_kanai",
            ModelPreset::TdFrequency { .. } => "td_frequency",
        }
    }

    /// Parameter names accepted by [`ModelPreset::set_param`].
    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            ModelPreset::Sho { .. } => &["omega0"],
            ModelPreset::CaldirolaKanai { .. } => &["m0", "gamma0", "omega0"],
            ModelPreset::TdFrequency { spec: FrequencySpec::PaulTrap { .. } } => &["profile", "a", "b"],
            ModelPreset::TdFrequency { spec: FrequencySpec::Quench { .. } } => {
                &["profile", "omega1", "omega2", "t_on", "width"]
            }
        }
    }

    /// Override one parameter. `profile` switches the frequency profile of
    /// the time-dependent-frequency preset to its defaults.
    pub fn set_param(&mut self, key: &str, value: &str) -> Result<()> {
        if key == "profile" {
            return match self {
                ModelPreset::TdFrequency { spec } => {
                    *spec = match value {
                        "paul_trap" | "paul" => FrequencySpec::paul_trap(),
                        "quench" => FrequencySpec::quench(),
                        other => {
                            return Err(Error::InvalidParameter(format!(
                                "unknown profile '{other}' (expected paul_trap or quench)"
                            )))
                        }
                    };
                    Ok(())
                }
                _ => Err(Error::InvalidParameter(format!("model {} has no parameter 'profile'", self.id()))),
            };
        }
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("parameter {key}: '{value}' is not a number")))?;
        let slot: Option<&mut f64> = match (self as &mut ModelPreset, key) {
            (ModelPreset::Sho { omega0 }, "omega0") => Some(omega0),
            (ModelPreset::CaldirolaKanai { m0, .. }, "m0") => Some(m0),
            (ModelPreset::CaldirolaKanai { gamma0, .. }, "gamma0") => Some(gamma0),
            (ModelPreset::CaldirolaKanai { omega0, .. }, "omega0") => Some(omega0),
            (ModelPreset::TdFrequency { spec: FrequencySpec::PaulTrap { a, .. } }, "a") => Some(a),
            (ModelPreset::TdFrequency { spec: FrequencySpec::PaulTrap { b, .. } }, "b") => Some(b),
            (ModelPreset::TdFrequency { spec: FrequencySpec::Quench { omega1, .. } }, "omega1") => Some(omega1),
            (ModelPreset::TdFrequency { spec: FrequencySpec::Quench { omega2, .. } }, "omega2") => Some(omega2),
            (ModelPreset::TdFrequency { spec: FrequencySpec::Quench { t_on, .. } }, "t_on") => Some(t_on),
            (ModelPreset::TdFrequency { spec: FrequencySpec::Quench { width, .. } }, "width") => Some(width),
            _ => None,
        };
        match slot {
            Some(s) => {
                *s = v;
                Ok(())
            }
            None => Err(Error::InvalidParameter(format!(
                "model {} has no parameter '{key}' (expected one of {})",
                self.id(),
                self.param_names().join(", ")
            ))),
        }
    }

    /// `Omega0 = sqrt(omega0^2 - gamma0^2 / 4)` for Caldirola-Kanai.
    pub fn ck_omega0(&self) -> Option<f64> {
        match *self {
            ModelPreset::CaldirolaKanai { gamma0, omega0, .. } => {
                let w2 = omega0 * omega0 - gamma0 * gamma0 / 4.0;
                (w2 > 0.0).then(|| w2.sqrt())
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        match *self {
            ModelPreset::Sho { omega0 } => positive("omega0", omega0),
            ModelPreset::CaldirolaKanai { m0, gamma0, omega0 } => {
                positive("m0", m0)?;
                positive("omega0", omega0)?;
                if !(gamma0 >= 0.0 && gamma0.is_finite()) {
                    return Err(Error::InvalidParameter(format!("gamma0 must be non-negative, got {gamma0}")));
                }
                let w2 = omega0 * omega0 - gamma0 * gamma0 / 4.0;
                if w2 <= 0.0 {
                    return Err(Error::Overdamped(w2));
                }
                Ok(())
            }
            ModelPreset::TdFrequency { spec: FrequencySpec::PaulTrap { a, b } } => {
                if !(a.is_finite() && b.is_finite() && a - b.abs() > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "Paul-trap profile needs a > |b| so that omega^2 stays positive, got a = {a}, b = {b}"
                    )));
                }
                Ok(())
            }
            ModelPreset::TdFrequency { spec: FrequencySpec::Quench { omega1, omega2, t_on, width } } => {
                positive("omega1", omega1)?;
                positive("omega2", omega2)?;
                positive("width", width)?;
                if !t_on.is_finite() {
                    return Err(Error::InvalidParameter(format!("t_on must be finite, got {t_on}")));
                }
                Ok(())
            }
        }
    }

    /// Closed-form `rho(t)`: SHO, Caldirola-Kanai, and the `b = 0` Paul trap.
    pub fn closed_rho(&self, t: f64) -> Option<f64> {
        match *self {
            ModelPreset::Sho { .. } => Some(1.0),
            ModelPreset::CaldirolaKanai { m0, gamma0, .. } => {
                let w = self.ck_omega0()?;
                Some((-gamma0 * t / 2.0).exp() / (m0 * w).sqrt())
            }
            ModelPreset::TdFrequency { spec: FrequencySpec::PaulTrap { a, b } } if b == 0.0 => Some(a.powf(-0.25)),
            _ => None,
        }
    }

    /// Closed-form `tau(t)` measured from `t = 0`.
    pub fn closed_tau(&self, t: f64) -> Option<f64> {
        match *self {
            ModelPreset::Sho { .. } => Some(t),
            ModelPreset::CaldirolaKanai { .. } => Some(self.ck_omega0()? * t),
            ModelPreset::TdFrequency { spec: FrequencySpec::PaulTrap { a, b } } if b == 0.0 => Some(a.sqrt() * t),
            _ => None,
        }
    }

    pub fn build(&self) -> Result<TdModel> {
        build_model(self)
    }
}

/// Instantiate a preset.
pub fn build_model(preset: &ModelPreset) -> Result<TdModel> {
    preset.validate()?;
    let mut model = match *preset {
        ModelPreset::Sho { omega0 } => TdModel::new(Mass::Constant(1.0), Frequency::Constant(omega0), omega0, "sho")?,
        ModelPreset::CaldirolaKanai { m0, gamma0, omega0 } => TdModel::new(
            Mass::Exponential { m0, gamma0 },
            Frequency::Constant(omega0),
            1.0,
            format!("caldirola_kanai(m0={m0}, gamma0={gamma0}, omega0={omega0})"),
        )?,
        ModelPreset::TdFrequency { spec } => {
            let label = match spec {
                FrequencySpec::PaulTrap { a, b } => format!("td_frequency(paul_trap a={a}, b={b})"),
                FrequencySpec::Quench { omega1, omega2, t_on, width } => {
                    format!("td_frequency(quench {omega1}->{omega2}, t_on={t_on}, width={width})")
                }
            };
            TdModel::new(Mass::Constant(1.0), spec.frequency(), 1.0, label)?
        }
    };
    model.preset = Some(*preset);
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ck_parameters() {
        let p = ModelPreset::caldirola_kanai();
        let w = 0.91f64.sqrt();
        assert!((p.ck_omega0().unwrap() - w).abs() < 1e-15);
        assert!((p.closed_rho(0.0).unwrap() - w.powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn undamped_ck_is_sho() {
        let p = ModelPreset::CaldirolaKanai { m0: 1.0, gamma0: 0.0, omega0: 1.0 };
        assert_eq!(p.closed_rho(3.0), Some(1.0));
        assert_eq!(p.closed_tau(3.0), Some(3.0));
    }

    #[test]
    fn overdamped_is_rejected() {
        let p = ModelPreset::CaldirolaKanai { m0: 1.0, gamma0: 2.5, omega0: 1.0 };
        assert!(matches!(build_model(&p), Err(Error::Overdamped(_))));
    }

    #[test]
    fn ck_hamiltonian() {
        let m = build_model(&ModelPreset::caldirola_kanai()).unwrap();
        let h0 = m.hamiltonian_symbol(0.0);
        assert!(h0.max_coeff_diff(&PolySymbol::quadratic(0.5, 0.0, 0.5)) < 1e-15);
        let t = 2.0;
        let h = m.hamiltonian_symbol(t);
        let kinetic = h.eval(0.0, 1.3).re;
        assert!((kinetic - 1.69 * (-0.6 * t).exp() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn quench_is_smooth_and_monotone() {
        let m = build_model(&ModelPreset::TdFrequency { spec: FrequencySpec::quench() }).unwrap();
        assert_eq!(m.omega(0.0), 1.0);
        assert_eq!(m.omega(10.0), 2.0);
        let mut last = 0.0;
        for k in 0..100 {
            let w = m.omega(k as f64 * 0.1);
            assert!(w >= last);
            last = w;
        }
    }

    #[test]
    fn custom_mass_derivative() {
        let m = TdModel::new(
            Mass::Custom(Arc::new(|t: f64| 1.0 + 0.5 * t.sin())),
            Frequency::Constant(1.0),
            1.0,
            "custom",
        )
        .unwrap();
        for t in [0.0f64, 0.7, 2.0] {
            let g = 0.5 * t.cos() / (1.0 + 0.5 * t.sin());
            assert!((m.gamma(t) - g).abs() < 1e-9);
        }
    }

    #[test]
    fn param_overrides() {
        let mut p = ModelPreset::caldirola_kanai();
        p.set_param("gamma0", "0.2").unwrap();
        assert_eq!(p, ModelPreset::CaldirolaKanai { m0: 1.0, gamma0: 0.2, omega0: 1.0 });
        assert!(p.set_param("a", "1").is_err());
        let mut t = ModelPreset::td_frequency();
        t.set_param("profile", "quench").unwrap();
        t.set_param("omega2", "3").unwrap();
        assert!(matches!(t, ModelPreset::TdFrequency { spec: FrequencySpec::Quench { omega2, .. } } if omega2 == 3.0));
    }
}
