//! Verification suites: each check yields a row `{suite, metric, value,
//! tolerance, pass}`; a report collects the rows of the selected suites.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ermakov::{classical_trajectory, solve_rho};
use crate::error::{Error, Result};
use crate::invariant::{auto_grid, wigner_xi_pi, xi_extent, InvariantSpec};
use crate::models::{build_model, FrequencySpec, ModelPreset};
use crate::oracle::{idempotency_constant, sho_eigenstates, star_via_operators, PositionGrid};
use crate::star::{
    moyal_bracket, moyal_bracket_mixed, poisson_bracket, star_grid, star_mixed_with, star_poly, star_poly_hbar,
    MixedOptions, Side,
};
use crate::starexp::{
    closed_form_parts, evolve_by_conjugation, evolve_wigner, fourier_dirichlet_abel_limit, fourier_dirichlet_sum,
    phase_function, sho_hamiltonian, sho_hamiltonian_poly, star_exp_closed, star_exp_via_propagator, star_with_exp,
    ExpSide,
};
use crate::symbols::{GridSymbol, PhaseGrid, PhysContext, PolySymbol};

/// Version of the report layout.
pub const SCHEMA: u32 = 1;

/// Time interval of the Ermakov, invariant and closed-form suites.
pub const T_END: f64 = 10.0;

/// Solver tolerance used by the time-dependent suites.
pub const SOLVER_TOL: f64 = 1e-10;

/// Tighter tolerance for the closed-form comparisons, where the phase error
/// is `Omega (n + 1/2)` times the error in `tau`.
pub const CLOSED_FORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Oracle,
    Stargenvalue,
    Projection,
    Ermakov,
    Invariant,
    Routes,
    Evolution,
    ClosedForms,
    ClassicalLimit,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Oracle,
        Suite::Stargenvalue,
        Suite::Projection,
        Suite::Ermakov,
        Suite::Invariant,
        Suite::Routes,
        Suite::Evolution,
        Suite::ClosedForms,
        Suite::ClassicalLimit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Oracle => "oracle",
            Suite::Stargenvalue => "stargenvalue",
            Suite::Projection => "projection",
            Suite::Ermakov => "ermakov",
            Suite::Invariant => "invariant",
            Suite::Routes => "routes",
            Suite::Evolution => "evolution",
            Suite::ClosedForms => "closed_forms",
            Suite::ClassicalLimit => "classical_limit",
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        let key = name.trim().to_ascii_lowercase().replace('-', "_");
        Suite::ALL.into_iter().find(|s| s.name() == key).ok_or_else(|| {
            let names: Vec<_> = Suite::ALL.iter().map(|s| s.name()).collect();
            Error::InvalidParameter(format!("unknown suite '{name}' (expected one of {})", names.join(", ")))
        })
    }

    /// Suites whose rows depend on the time-dependent model.
    pub fn per_model(self) -> bool {
        matches!(self, Suite::Ermakov | Suite::Invariant | Suite::ClosedForms)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub suite: String,
    pub metric: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub model: Option<String>,
    /// `None` when the check could not be evaluated.
    pub value: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl Row {
    /// Passes when `value <= tolerance`.
    pub fn at_most(suite: Suite, metric: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            suite: suite.name().into(),
            metric: metric.into(),
            model: None,
            value: Some(value),
            tolerance,
            pass: value <= tolerance,
            error: None,
        }
    }

    pub fn failed(suite: Suite, metric: impl Into<String>, tolerance: f64, err: &Error) -> Self {
        Self {
            suite: suite.name().into(),
            metric: metric.into(),
            model: None,
            value: None,
            tolerance,
            pass: false,
            error: Some(err.to_string()),
        }
    }

    pub fn with_model(mut self, model: &str) -> Self {
        self.model = Some(model.into());
        self
    }
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub hbar: f64,
    pub models: Vec<(String, ModelPreset)>,
    pub suites: Vec<Suite>,
    /// Relative offset of the engine's `hbar` from the reference value.
    pub hbar_mismatch: f64,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            models: vec![("sho".into(), ModelPreset::sho())],
            suites: Suite::ALL.to_vec(),
            hbar_mismatch: 0.0,
            seed: 20240607,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub hbar: f64,
    pub hbar_mismatch: f64,
    pub models: Vec<String>,
    pub suites: Vec<Suite>,
    pub pass: bool,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn failures(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| !r.pass)
    }
}

/// Runs the selected suites. Errors inside a suite become failing rows, so
/// the report is always complete.
pub fn run(cfg: &VerifyConfig) -> Result<Report> {
    let ctx = PhysContext::new(cfg.hbar, 1.0)?;
    let engine = ctx.with_hbar(cfg.hbar * (1.0 + cfg.hbar_mismatch))?;
    if cfg.models.is_empty() {
        return Err(Error::InvalidParameter("no model selected".into()));
    }
    let mut rows = Vec::new();
    for &suite in &cfg.suites {
        if suite.per_model() {
            for (label, preset) in &cfg.models {
                let got = match suite {
                    Suite::Ermakov => ermakov_suite(preset),
                    Suite::Invariant => invariant_suite(preset, cfg.hbar),
                    _ => closed_form_suite(preset),
                };
                rows.extend(collect(suite, got).into_iter().map(|r| r.with_model(label)));
            }
            continue;
        }
        // Frame suites live in (xi, pi) with the first model's Omega.
        let omega = build_model(&cfg.models[0].1)?.omega_cap;
        let ctx = PhysContext::new(ctx.hbar, omega)?;
        let engine = PhysContext::new(engine.hbar, omega)?;
        let got = match suite {
            Suite::Oracle => oracle_suite(&ctx, &engine, cfg.seed, 20),
            Suite::Stargenvalue => stargenvalue_suite(&ctx, &engine, 10),
            Suite::Projection => projection_suite(&ctx, &engine, 5),
            Suite::Routes => routes_suite(&ctx),
            Suite::Evolution => evolution_suite(&ctx),
            Suite::ClassicalLimit => classical_limit_suite(cfg.seed, 10),
            _ => unreachable!("per-model suites handled above"),
        };
        rows.extend(collect(suite, got));
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(Report {
        schema: SCHEMA,
        hbar: cfg.hbar,
        hbar_mismatch: cfg.hbar_mismatch,
        models: cfg.models.iter().map(|(l, _)| l.clone()).collect(),
        suites: cfg.suites.clone(),
        pass,
        rows,
    })
}

fn collect(suite: Suite, got: Result<Vec<Row>>) -> Vec<Row> {
    got.unwrap_or_else(|e| vec![Row::failed(suite, "suite aborted", 0.0, &e)])
}

fn random_poly(rng: &mut ChaCha8Rng, degree: u32) -> PolySymbol {
    let mut f = PolySymbol::zero();
    for a in 0..=degree {
        for b in 0..=(degree - a) {
            let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            f.add_term(a, b, c);
        }
    }
    f
}

fn random_int_poly(rng: &mut ChaCha8Rng, degree: u32) -> PolySymbol {
    let mut f = PolySymbol::zero();
    for a in 0..=degree {
        for b in 0..=(degree - a) {
            f.add_term(a, b, Complex64::new(rng.random_range(-5i32..=5) as f64, 0.0));
        }
    }
    f
}

/// Sup over `pairs` random windowed polynomial pairs of the interior relative
/// difference between the twisted-convolution product and operator
/// composition, plus exact polynomial cases.
pub fn oracle_suite(ctx: &PhysContext, engine: &PhysContext, seed: u64, pairs: usize) -> Result<Vec<Row>> {
    let s = Suite::Oracle;
    let mut rows = Vec::new();
    let h = engine.hbar;
    let xp = star_poly(&PolySymbol::x(), &PolySymbol::p(), engine);
    let want = &PolySymbol::monomial(1, 1, 1.0) + &PolySymbol::constant(Complex64::new(0.0, 0.5 * ctx.hbar));
    rows.push(Row::at_most(s, "x*p vs xp + i hbar/2 (coefficient sup)", xp.max_coeff_diff(&want), 1e-12));
    let x2p2 = star_poly(&PolySymbol::monomial(2, 0, 1.0), &PolySymbol::monomial(0, 2, 1.0), engine);
    let want = PolySymbol::from_terms([
        ((2, 2), Complex64::new(1.0, 0.0)),
        ((1, 1), Complex64::new(0.0, 2.0 * ctx.hbar)),
        ((0, 0), Complex64::new(-0.5 * ctx.hbar * ctx.hbar, 0.0)),
    ]);
    rows.push(Row::at_most(s, "x^2*p^2 vs hand expansion (coefficient sup)", x2p2.max_coeff_diff(&want), 1e-12));

    // n_q = 256 matches the aligned 128 x 128 phase grid.
    let grid = PhaseGrid::aligned(128, h, 1.0 / ctx.omega_cap)?;
    let qgrid = PositionGrid::matching(&grid, ctx)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = 1.2 * ctx.hbar;
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let (pf, pg) = (random_poly(&mut rng, 4), random_poly(&mut rng, 4));
        let (cf, cg): ((f64, f64), (f64, f64)) = (
            (rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)),
            (rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)),
        );
        let window = |c: (f64, f64), w: f64| {
            move |x: f64, p: f64| (-((x - c.0).powi(2) + ((p - c.1) / w).powi(2)) / width).exp()
        };
        let (wf, wg) = (window(cf, ctx.omega_cap), window(cg, ctx.omega_cap));
        let f = GridSymbol::from_fn(grid, |x, p| pf.eval(x, p) * wf(x, p));
        let g = GridSymbol::from_fn(grid, |x, p| pg.eval(x, p) * wg(x, p));
        let engine_product = star_grid(&f, &g, engine)?;
        let oracle_product = star_via_operators(&f, &g, &qgrid, &grid, ctx)?;
        worst = worst.max(engine_product.rel_diff_in(&oracle_product, &grid.interior(0.5))?);
    }
    rows.push(Row::at_most(s, format!("star_grid vs operators, {pairs} windowed pairs (interior rel)"), worst, 1e-4));
    Ok(rows)
}

/// `|H * W_n - hbar Omega (n + 1/2) W_n|_inf / |W_n|_inf` from both sides,
/// and the oracle's eigenvalues.
pub fn stargenvalue_suite(ctx: &PhysContext, engine: &PhysContext, n_max: usize) -> Result<Vec<Row>> {
    let s = Suite::Stargenvalue;
    let mut rows = Vec::new();
    let h = sho_hamiltonian_poly(ctx);
    let opts = MixedOptions::for_poly(&h).with_accuracy(8);
    for n in 0..=n_max {
        let grid = auto_grid(n, ctx)?;
        let w = wigner_xi_pi(n, ctx, &grid)?;
        let e = ctx.hbar * ctx.omega_cap * (n as f64 + 0.5);
        let ew = w.scale(Complex64::new(e, 0.0));
        let sup = w.sup();
        let mut worst: f64 = 0.0;
        for side in [Side::Left, Side::Right] {
            let hw = star_mixed_with(&h, &w, engine, side, opts)?;
            worst = worst.max(hw.max_abs_diff_in(&ew, &grid.full())? / sup);
        }
        rows.push(Row::at_most(s, format!("n={n} |H*W - E W|/|W|"), worst, 1e-6));
    }
    let l = xi_extent(n_max, ctx) * 1.15;
    let qgrid = PositionGrid::new(256, l)?;
    let states = sho_eigenstates(&qgrid, ctx, n_max + 1)?;
    let worst = states.iter().enumerate().fold(0.0f64, |m, (n, (e, _))| {
        let want = ctx.hbar * ctx.omega_cap * (n as f64 + 0.5);
        m.max((e - want).abs() / want)
    });
    rows.push(Row::at_most(s, format!("oracle eigenvalues n<={n_max} vs hbar Omega (n+1/2) (rel)"), worst, 1e-6));
    Ok(rows)
}

/// `W_m * W_n = c delta_mn W_n` through the twisted convolution, with `c`
/// checked for consistency and against the operator oracle.
pub fn projection_suite(ctx: &PhysContext, engine: &PhysContext, n_max: usize) -> Result<Vec<Row>> {
    let s = Suite::Projection;
    let mut rows = Vec::new();
    let grid = PhaseGrid::aligned_covering(xi_extent(n_max, ctx), engine.hbar, 1.0 / ctx.omega_cap)?;
    let ws = (0..=n_max).map(|n| wigner_xi_pi(n, ctx, &grid)).collect::<Result<Vec<_>>>()?;
    let mut cs = Vec::new();
    let mut peak: f64 = 0.0;
    let mut off: f64 = 0.0;
    let mut diag_resid: f64 = 0.0;
    for m in 0..=n_max {
        for n in m..=n_max {
            let prod = star_grid(&ws[m], &ws[n], engine)?;
            if m == n {
                let c = prod.projection_coefficient(&ws[n])?;
                let cw = ws[n].scale(c);
                diag_resid = diag_resid.max(prod.max_abs_diff_in(&cw, &grid.full())? / cw.sup());
                peak = peak.max(prod.sup());
                cs.push(c);
            } else {
                off = off.max(prod.sup());
            }
        }
    }
    let c0 = cs[0];
    let spread = cs.iter().fold(0.0f64, |m, c| m.max((c - c0).norm() / c0.norm()));
    rows.push(Row::at_most(s, format!("c_n consistency n<={n_max} (rel)"), spread, 1e-6));
    rows.push(Row::at_most(s, format!("|W_n*W_n - c W_n|/|c W_n| n<={n_max}"), diag_resid, 1e-6));
    rows.push(Row::at_most(s, "off-diagonal sup / peak", off / peak, 1e-6));
    rows.push(Row::at_most(s, "|c 2 pi hbar - 1|", (c0 * 2.0 * PI * ctx.hbar - 1.0).norm(), 1e-6));

    let ogrid = PhaseGrid::aligned(128, ctx.hbar, 1.0 / ctx.omega_cap)?;
    let qgrid = PositionGrid::matching(&ogrid, ctx)?;
    let c_oracle = idempotency_constant(&qgrid, &ogrid, ctx, 0)?;
    rows.push(Row::at_most(s, "c vs oracle idempotency constant (rel)", (c0 - c_oracle).norm() / c_oracle.norm(), 1e-3));
    Ok(rows)
}

const TRAJECTORY_STARTS: [(f64, f64); 5] = [(1.0, 0.0), (0.0, 1.0), (0.5, -0.7), (-1.2, 0.4), (2.0, 1.0)];

pub fn ermakov_suite(preset: &ModelPreset) -> Result<Vec<Row>> {
    let model = build_model(preset)?;
    let sol = solve_rho(&model, 0.0, T_END, SOLVER_TOL)?;
    Ok(vec![Row::at_most(
        Suite::Ermakov,
        format!("residual sup on [0, {T_END}] ({:?})", sol.method()),
        sol.residual_sup,
        1e-8,
    )])
}

pub fn invariant_suite(preset: &ModelPreset, hbar: f64) -> Result<Vec<Row>> {
    let model = build_model(preset)?;
    let spec = InvariantSpec::solve(&model, 0.0, T_END, SOLVER_TOL, hbar)?;
    let mut worst: f64 = 0.0;
    for (x0, v0) in TRAJECTORY_STARTS {
        let traj = classical_trajectory(&model, x0, v0, 0.0, T_END, SOLVER_TOL)?;
        let (x, p) = traj.phase_point(0.0)?;
        let i0 = spec.invariant_eval(x, p, 0.0)?;
        for k in 0..=400 {
            let t = T_END * k as f64 / 400.0;
            let (x, p) = traj.phase_point(t)?;
            worst = worst.max((spec.invariant_eval(x, p, t)? - i0).abs() / i0);
        }
    }
    Ok(vec![Row::at_most(Suite::Invariant, "drift |I(t)-I(0)|/I(0), 5 trajectories", worst, 1e-6)])
}

/// Solver against the closed forms attached to the preset. A Paul trap with
/// `b != 0` has none; its `b = 0` member is checked instead.
pub fn closed_form_suite(preset: &ModelPreset) -> Result<Vec<Row>> {
    let s = Suite::ClosedForms;
    let preset = match preset {
        ModelPreset::TdFrequency { spec: FrequencySpec::PaulTrap { a, .. } } => {
            ModelPreset::TdFrequency { spec: FrequencySpec::PaulTrap { a: *a, b: 0.0 } }
        }
        ModelPreset::TdFrequency { .. } => ModelPreset::TdFrequency { spec: FrequencySpec::PaulTrap { a: 1.3, b: 0.0 } },
        other => *other,
    };
    let label = match preset {
        ModelPreset::TdFrequency { spec: FrequencySpec::PaulTrap { a, .. } } => format!(" (Paul trap a={a}, b=0)"),
        _ => String::new(),
    };
    let model = build_model(&preset)?;
    let sol = solve_rho(&model, 0.0, T_END, CLOSED_FORM_TOL)?;
    let omega = model.omega_cap;
    let (mut er, mut et, mut ep) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..=1000 {
        let t = T_END * k as f64 / 1000.0;
        let (r, tau) = match (preset.closed_rho(t), preset.closed_tau(t)) {
            (Some(r), Some(tau)) => (r, tau),
            _ => return Err(Error::InvalidParameter(format!("no closed form for {}", preset.id()))),
        };
        er = er.max((sol.rho(t)? - r).abs());
        et = et.max((sol.tau(t)? - tau).abs());
        for n in 0..=5 {
            let z = phase_function(&sol, n, t)?;
            let want = Complex64::from_polar(1.0, -omega * (n as f64 + 0.5) * tau);
            ep = ep.max((z * want.conj()).arg().abs());
        }
    }
    Ok(vec![
        Row::at_most(s, format!("rho sup error on [0, {T_END}]{label}"), er, 1e-8),
        Row::at_most(s, format!("tau sup error on [0, {T_END}]{label}"), et, 1e-8),
        Row::at_most(s, format!("phase function error n<=5{label}"), ep, 1e-9),
    ])
}

/// Route-equivalence angles `Omega tau`.
pub const ROUTE_ANGLES: [f64; 4] = [0.3, PI / 2.0, 2.0, 3.0 * PI / 4.0];

pub fn route_grid(ctx: &PhysContext) -> Result<PhaseGrid> {
    let l = 5.0 * (ctx.hbar / ctx.omega_cap).sqrt();
    PhaseGrid::new(64, 64, l, ctx.omega_cap * l)
}

pub fn routes_suite(ctx: &PhysContext) -> Result<Vec<Row>> {
    let s = Suite::Routes;
    let mut rows = Vec::new();
    let grid = route_grid(ctx)?;
    let h = sho_hamiltonian(&grid, ctx);
    for theta in ROUTE_ANGLES {
        let tau = theta / ctx.omega_cap;
        let closed = star_exp_closed(&h, tau, ctx)?;
        let prop = star_exp_via_propagator(&grid, tau, ctx)?;
        let err = prop.rel_diff_in(&closed, &grid.interior(0.8))?;
        rows.push(Row::at_most(s, format!("closed vs propagator, Omega tau={theta:.6} (interior rel)"), err, 1e-8));
        let (sec, _) = closed_form_parts(tau, ctx)?;
        let dev = closed.values().iter().fold(0.0f64, |m, v| m.max((v.norm() - sec.abs()).abs()));
        rows.push(Row::at_most(s, format!("|Exp| - |sec|, Omega tau={theta:.6}"), dev / sec.abs(), 1e-12));
    }
    let (tau, r, n_max) = (PI / 2.0 / ctx.omega_cap, 0.9, 500);
    let sum = fourier_dirichlet_sum(&grid, tau, n_max, r, ctx)?;
    let w = ctx.omega_cap;
    let limit = GridSymbol::from_fn(grid, |xi, pi| {
        fourier_dirichlet_abel_limit(crate::invariant::scaled_energy(xi, pi, w), tau, r, ctx)
    });
    let err = sum.rel_diff_in(&limit, &grid.full())?;
    rows.push(Row::at_most(s, format!("Fourier-Dirichlet r={r} n_max={n_max} vs Abel limit"), err, 1e-10));
    Ok(rows)
}

/// Coherent-state Wigner function centred at `(xi0, pi0)`.
pub fn coherent_wigner(grid: &PhaseGrid, xi0: f64, pi0: f64, ctx: &PhysContext) -> GridSymbol {
    let (h, w) = (ctx.hbar, ctx.omega_cap);
    GridSymbol::from_real_fn(*grid, move |xi, pi| {
        (-((xi - xi0).powi(2) * w + (pi - pi0).powi(2) / w) / h).exp() / (PI * h)
    })
}

/// Grid and displaced Gaussian used by the evolution checks.
pub fn evolution_setup(ctx: &PhysContext) -> Result<(PhaseGrid, GridSymbol)> {
    let unit = (ctx.hbar / ctx.omega_cap).sqrt();
    let l = 7.0 * unit;
    let grid = PhaseGrid::new(128, 128, l, ctx.omega_cap * l)?;
    let w0 = coherent_wigner(&grid, 1.5 * unit, 0.5 * ctx.omega_cap * unit, ctx);
    Ok((grid, w0))
}

pub fn evolution_suite(ctx: &PhysContext) -> Result<Vec<Row>> {
    let s = Suite::Evolution;
    let mut rows = Vec::new();
    let (grid, w0) = evolution_setup(ctx)?;
    let interior = grid.interior(0.8);
    let tau = PI / 2.0 / ctx.omega_cap;
    let rot = evolve_wigner(&w0, tau, ctx)?;
    let conj = evolve_by_conjugation(&w0, tau, ctx)?;
    rows.push(Row::at_most(s, "conjugation vs rotation, Omega tau=pi/2 (interior rel)", conj.rel_diff_in(&rot, &interior)?, 1e-5));

    let (mut d1, mut d2) = (0.0f64, 0.0f64);
    let n0 = w0.norms();
    for theta in [0.7, PI / 2.0, 2.5, -1.9] {
        let n1 = evolve_wigner(&w0, theta / ctx.omega_cap, ctx)?.norms();
        d1 = d1.max((n1.integral - n0.integral).norm() / n0.integral.norm());
        d2 = d2.max((n1.l2 * n1.l2 - n0.l2 * n0.l2).abs() / (n0.l2 * n0.l2));
    }
    rows.push(Row::at_most(s, "int W conservation (rel)", d1, 1e-6));
    rows.push(Row::at_most(s, "int W^2 conservation (rel)", d2, 1e-6));

    let mut fixed: f64 = 0.0;
    for n in 0..=5 {
        let g = auto_grid(n, ctx)?;
        let w = wigner_xi_pi(n, ctx, &g)?;
        for theta in [0.7, PI / 2.0, 2.5] {
            fixed = fixed.max(evolve_wigner(&w, theta / ctx.omega_cap, ctx)?.rel_diff_in(&w, &g.full())?);
        }
    }
    rows.push(Row::at_most(s, "W_n fixed points n<=5 (rel)", fixed, 1e-6));

    let dt = 1e-3;
    let t0 = 0.6 / ctx.omega_cap;
    let w = evolve_wigner(&w0, t0, ctx)?;
    let wp = evolve_wigner(&w0, t0 + dt, ctx)?;
    let wm = evolve_wigner(&w0, t0 - dt, ctx)?;
    let dwdt = wp.zip_with(&wm, |a, b| (a - b) / (2.0 * dt))?;
    let h = sho_hamiltonian_poly(ctx);
    let br = moyal_bracket_mixed(&h, &w, ctx, MixedOptions::for_poly(&h).with_accuracy(8))?;
    rows.push(Row::at_most(s, "Moyal equation residual, dtau=1e-3 (interior rel)", dwdt.rel_diff_in(&br, &interior)?, 1e-4));

    let (t1, t2) = (0.8 / ctx.omega_cap, 1.1 / ctx.omega_cap);
    let two = star_with_exp(&star_with_exp(&w0, t2, ctx, ExpSide::Left)?, t1, ctx, ExpSide::Left)?;
    let one = star_with_exp(&w0, t1 + t2, ctx, ExpSide::Left)?;
    rows.push(Row::at_most(s, "group law Exp(t1)*Exp(t2)*W = Exp(t1+t2)*W (interior rel)", two.rel_diff_in(&one, &interior)?, 1e-5));
    Ok(rows)
}

/// `hbar = 0` products are pointwise and brackets of quadratics are Poisson,
/// on integer-coefficient polynomials where both are exact in floating point.
pub fn classical_limit_suite(seed: u64, cases: usize) -> Result<Vec<Row>> {
    let s = Suite::ClassicalLimit;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let (mut prod, mut bracket) = (0.0f64, 0.0f64);
    for _ in 0..cases {
        let (f, g) = (random_int_poly(&mut rng, 4), random_int_poly(&mut rng, 4));
        prod = prod.max(star_poly_hbar(&f, &g, 0.0).max_coeff_diff(&f.pointwise(&g)));
        let (q1, q2) = (random_int_poly(&mut rng, 2), random_int_poly(&mut rng, 2));
        for hbar in [0.5, 1.0, 2.0] {
            let ctx = PhysContext::new(hbar, 1.0)?;
            bracket = bracket.max(moyal_bracket(&q1, &q2, &ctx)?.max_coeff_diff(&poisson_bracket(&q1, &q2)));
        }
    }
    Ok(vec![
        Row::at_most(s, format!("star at hbar=0 vs pointwise, {cases} pairs"), prod, 0.0),
        Row::at_most(s, format!("Moyal vs Poisson bracket of quadratics, {cases} pairs"), bracket, 0.0),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(Suite::by_name(s.name()).unwrap(), s);
        }
        assert_eq!(Suite::by_name("Closed-Forms").unwrap(), Suite::ClosedForms);
        assert!(Suite::by_name("nope").is_err());
    }

    #[test]
    fn failing_row_serialises_null_value() {
        let r = Row::failed(Suite::Routes, "x", 1e-8, &Error::BranchAmbiguity(0.0));
        let j = serde_json::to_string(&r).unwrap();
        assert!(j.contains("\"value\":null") && j.contains("\"pass\":false"), "{j}");
    }

    #[test]
    fn classical_limit_is_exact() {
        let rows = classical_limit_suite(7, 5).unwrap();
        assert!(rows.iter().all(|r| r.pass), "{rows:?}");
    }

    #[test]
    fn ermakov_rows_carry_the_model() {
        let cfg = VerifyConfig {
            suites: vec![Suite::Ermakov],
            models: vec![("tdf".into(), ModelPreset::td_frequency())],
            ..VerifyConfig::default()
        };
        let rep = run(&cfg).unwrap();
        assert_eq!(rep.schema, SCHEMA);
        assert!(!rep.rows.is_empty());
        assert!(rep.rows.iter().all(|r| r.suite == "ermakov" && r.model.as_deref() == Some("tdf")));
        assert!(rep.pass, "{:?}", rep.rows);
    }

    #[test]
    fn hbar_mismatch_breaks_stargenvalues() {
        let ctx = PhysContext::new(1.0, 1.0).unwrap();
        let engine = ctx.with_hbar(1.001).unwrap();
        let rows = stargenvalue_suite(&ctx, &engine, 2).unwrap();
        assert!(rows.iter().take(3).all(|r| !r.pass), "{rows:?}");
        let rows = stargenvalue_suite(&ctx, &ctx, 2).unwrap();
        assert!(rows.iter().all(|r| r.pass), "{rows:?}");
    }
}
