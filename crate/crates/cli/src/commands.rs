use std::io::Write;
use std::path::{Path, PathBuf};

use moyal::ermakov::solve_rho;
use moyal::invariant::{auto_grid, auto_grid_xp, negativity, normalization, wigner_n, Frame, InvariantSpec};
use moyal::models::build_model;
use moyal::starexp::{
    evolve_by_conjugation, evolve_wigner_with, fourier_dirichlet_sum, sho_hamiltonian, star_exp_closed,
    star_exp_via_propagator, Resampling,
};
use moyal::symbols::io::{fmt_f64, load, save, Format};
use moyal::symbols::{GridSymbol, PhaseGrid, PhysContext};
use moyal::verify::{self, Suite, VerifyConfig};

use crate::args::{EvolveArgs, FrameArg, InvariantArgs, Method, Route, StarexpArgs, TauArgs, VerifyArgs, WignerArgs};
use crate::config::Settings;
use crate::CliError;

/// Solver tolerance for the auxiliary equation behind `tau` and pullbacks.
const SOLVER_TOL: f64 = 1e-12;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// `3`, `0..3` or `0..=3`, inclusive.
pub fn parse_levels(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = || usage(format!("--n '{s}': expected a non-negative level or an inclusive range a..b"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?),
        None => {
            let n = num(s)?;
            (n, n)
        }
    };
    if lo > hi {
        return Err(bad());
    }
    Ok((lo..=hi).collect())
}

/// `<stem>_<suffix>.<ext>`; a directory stem gets `default_stem` inside it.
fn output_path(out: Option<&Path>, default_stem: &str, suffix: &str, format: Format) -> PathBuf {
    let stem = match out {
        Some(p) if p.is_dir() => p.join(default_stem),
        Some(p) => p.with_extension(""),
        None => PathBuf::from(default_stem),
    };
    let mut name = stem.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(format!("_{suffix}.{}", format.extension()));
    stem.with_file_name(name)
}

fn frame_context(settings: &Settings) -> Result<(String, PhysContext), CliError> {
    let (name, preset) = settings.preset()?;
    let model = build_model(&preset)?;
    Ok((name, PhysContext::new(settings.hbar, model.omega_cap)?))
}

/// Same extent, `n` nodes per axis.
fn with_nodes(grid: PhaseGrid, n: Option<usize>) -> Result<PhaseGrid, CliError> {
    Ok(match n {
        Some(n) => PhaseGrid::new(n, n, grid.x_max, grid.p_max)?,
        None => grid,
    })
}

pub fn wigner(settings: &Settings, a: &WignerArgs) -> Result<(), CliError> {
    let levels = parse_levels(&a.n)?;
    let n_top = *levels.last().expect("non-empty range");
    let (_, preset) = settings.preset()?;
    let model = build_model(&preset)?;
    let format = settings.format.unwrap_or(Format::Csv);
    let (spec, frame, grid) = match a.frame {
        FrameArg::Xi => {
            let spec = InvariantSpec::solve(&model, 0.0, 1.0, SOLVER_TOL, settings.hbar)?;
            let grid = with_nodes(auto_grid(n_top, &spec.ctx)?, settings.grid)?;
            (spec, Frame::XiPi, grid)
        }
        FrameArg::X => {
            if !(a.time >= 0.0 && a.time.is_finite()) {
                return Err(usage(format!("--time must be non-negative, got {}", a.time)));
            }
            let spec = InvariantSpec::solve(&model, 0.0, a.time.max(1.0), SOLVER_TOL, settings.hbar)?;
            let grid = with_nodes(auto_grid_xp(n_top, &spec, a.time)?, settings.grid)?;
            (spec, Frame::Xp { t: a.time }, grid)
        }
    };
    let mut stdout = std::io::stdout().lock();
    for n in levels {
        let w = wigner_n(n, &spec, &grid, frame)?;
        let path = output_path(settings.out.as_deref(), "wigner", &format!("n{n}"), format);
        save(&w, &path, format)?;
        let (min, neg) = negativity(&w);
        writeln!(
            stdout,
            "n={n} integral={} min={} negative_fraction={} file={}",
            fmt_f64(normalization(&w)),
            fmt_f64(min),
            fmt_f64(neg),
            path.display()
        )?;
    }
    Ok(())
}

fn route_symbol(route: Route, grid: &PhaseGrid, tau: f64, a: &StarexpArgs, ctx: &PhysContext) -> Result<GridSymbol, CliError> {
    Ok(match route {
        Route::Closed => star_exp_closed(&sho_hamiltonian(grid, ctx), tau, ctx)?,
        Route::Propagator => star_exp_via_propagator(grid, tau, ctx)?,
        Route::Fourier => fourier_dirichlet_sum(grid, tau, a.n_max, a.abel_r, ctx)?,
    })
}

pub fn starexp(settings: &Settings, a: &StarexpArgs) -> Result<(), CliError> {
    let (_, ctx) = frame_context(settings)?;
    let n = settings.grid.unwrap_or(64);
    let l = 5.0 * (ctx.hbar / ctx.omega_cap).sqrt();
    let grid = PhaseGrid::new(n, n, l, ctx.omega_cap * l)?;
    let format = settings.format.unwrap_or(Format::Csv);
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "omega_tau={}", fmt_f64(ctx.omega_cap * a.tau))?;
    let mut computed: Vec<(Route, GridSymbol)> = Vec::new();
    for &route in &a.route {
        if computed.iter().any(|(r, _)| *r == route) {
            continue;
        }
        let s = route_symbol(route, &grid, a.tau, a, &ctx)?;
        let origin = s.at(n / 2, n / 2);
        write!(stdout, "route={} origin_re={} origin_im={}", route.name(), fmt_f64(origin.re), fmt_f64(origin.im))?;
        if settings.out.is_some() {
            let path = output_path(settings.out.as_deref(), "starexp", route.name(), format);
            save(&s, &path, format)?;
            write!(stdout, " file={}", path.display())?;
        }
        writeln!(stdout)?;
        computed.push((route, s));
    }
    if a.diff {
        let (first, reference) = &computed[0];
        let interior = grid.interior(0.8);
        for (route, s) in &computed[1..] {
            let d = s.rel_diff_in(reference, &interior)?;
            writeln!(stdout, "max_rel_diff {} {} {}", first.name(), route.name(), fmt_f64(d))?;
        }
    }
    Ok(())
}

pub fn evolve(settings: &Settings, a: &EvolveArgs) -> Result<(), CliError> {
    let (_, preset) = settings.preset()?;
    let model = build_model(&preset)?;
    let ctx = PhysContext::new(settings.hbar, model.omega_cap)?;
    let tau = match (a.tau, a.t) {
        (Some(tau), _) => tau,
        (None, Some(t)) if t == 0.0 => 0.0,
        (None, Some(t)) if t > 0.0 && t.is_finite() => solve_rho(&model, 0.0, t, SOLVER_TOL)?.tau(t)?,
        (None, Some(t)) => return Err(usage(format!("--t must be non-negative, got {t}"))),
        (None, None) => return Err(usage("one of --tau or --t is required")),
    };
    let input_format = Format::from_path(&a.input);
    let w0 = load(&a.input)?;
    let w = match a.method {
        Method::Rotation => evolve_wigner_with(&w0, tau, &ctx, Resampling::Spectral)?,
        Method::Bilinear => evolve_wigner_with(&w0, tau, &ctx, Resampling::Bilinear)?,
        Method::Conjugation => evolve_by_conjugation(&w0, tau, &ctx)?,
    };
    let format = settings.format.or(input_format).unwrap_or(Format::Csv);
    let path = match &settings.out {
        Some(p) if p.extension().is_some() => p.clone(),
        Some(p) => p.with_extension(format.extension()),
        None => PathBuf::from(format!("evolved.{}", format.extension())),
    };
    save(&w, &path, format)?;
    let mut stdout = std::io::stdout().lock();
    writeln!(
        stdout,
        "tau={} integral_in={} integral_out={} file={}",
        fmt_f64(tau),
        fmt_f64(w0.integral().re),
        fmt_f64(w.integral().re),
        path.display()
    )?;
    Ok(())
}

pub fn tau(settings: &Settings, a: &TauArgs) -> Result<(), CliError> {
    let (_, preset) = settings.preset()?;
    let model = build_model(&preset)?;
    if !(a.t >= 0.0 && a.t.is_finite()) {
        return Err(usage(format!("--t must be non-negative, got {}", a.t)));
    }
    let mut stdout = std::io::stdout().lock();
    if a.t == 0.0 {
        writeln!(stdout, "{}", fmt_f64(0.0))?;
        return Ok(());
    }
    let sol = solve_rho(&model, 0.0, a.t, SOLVER_TOL)?;
    writeln!(stdout, "{}", fmt_f64(sol.tau(a.t)?))?;
    if let Some(out) = &settings.out {
        if a.samples < 2 {
            return Err(usage("--samples must be at least 2"));
        }
        let path = if out.extension().is_some() { out.clone() } else { out.with_extension("csv") };
        sol.write_csv(std::io::BufWriter::new(std::fs::File::create(&path)?), a.samples)?;
    }
    Ok(())
}

pub fn invariant(settings: &Settings, a: &InvariantArgs) -> Result<(), CliError> {
    let (_, preset) = settings.preset()?;
    let model = build_model(&preset)?;
    if a.x.is_none() && !a.drift {
        return Err(usage("give --x and --p, or --drift"));
    }
    let mut stdout = std::io::stdout().lock();
    if let (Some(x), Some(p)) = (a.x, a.p) {
        if !(a.t >= 0.0 && a.t.is_finite()) {
            return Err(usage(format!("--t must be non-negative, got {}", a.t)));
        }
        let spec = InvariantSpec::solve(&model, 0.0, a.t.max(1.0), SOLVER_TOL, settings.hbar)?;
        let (xi, pi) = spec.xi_pi_of_xp(x, p, a.t)?;
        let i = spec.invariant_eval(x, p, a.t)?;
        writeln!(stdout, "xi={} pi={} invariant={}", fmt_f64(xi), fmt_f64(pi), fmt_f64(i))?;
    }
    if a.drift {
        for row in verify::invariant_suite(&preset, settings.hbar)? {
            writeln!(stdout, "drift={} tolerance={} pass={}", fmt_f64(row.value.unwrap_or(f64::NAN)), fmt_f64(row.tolerance), row.pass)?;
        }
    }
    Ok(())
}

fn write_report_csv<W: Write>(report: &verify::Report, mut w: W) -> Result<(), CliError> {
    writeln!(w, "suite,model,metric,value,tolerance,pass,error")?;
    let quote = |s: &str| format!("\"{}\"", s.replace('"', "\"\""));
    for r in &report.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.suite,
            r.model.as_deref().unwrap_or(""),
            quote(&r.metric),
            r.value.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.tolerance),
            r.pass,
            r.error.as_deref().map(quote).unwrap_or_default()
        )?;
    }
    Ok(())
}

pub fn verify(settings: &Settings, a: &VerifyArgs) -> Result<(), CliError> {
    let suites = if a.suite.is_empty() {
        Suite::ALL.to_vec()
    } else {
        a.suite.iter().map(|s| Suite::by_name(s).map_err(|e| usage(e.to_string()))).collect::<Result<Vec<_>, _>>()?
    };
    let defaults = VerifyConfig::default();
    let cfg = VerifyConfig {
        hbar: settings.hbar,
        models: settings.presets()?,
        suites,
        hbar_mismatch: a.inject_hbar_mismatch,
        seed: a.seed.unwrap_or(defaults.seed),
    };
    let report = verify::run(&cfg)?;
    let format = settings.format.unwrap_or(Format::Json);
    let emit = |w: &mut dyn Write| -> Result<(), CliError> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *w, &report).map_err(|e| CliError::Core(e.into()))?;
                writeln!(w)?;
            }
            Format::Csv => write_report_csv(&report, &mut *w)?,
        }
        Ok(())
    };
    match &settings.out {
        Some(p) => {
            let mut f = std::io::BufWriter::new(std::fs::File::create(p)?);
            emit(&mut f)?;
            f.flush()?;
        }
        None => emit(&mut std::io::stdout().lock())?,
    }
    let mut stderr = std::io::stderr().lock();
    for r in &report.rows {
        let value = r.value.map(fmt_f64).unwrap_or_else(|| "n/a".into());
        let model = r.model.as_deref().map(|m| format!(" [{m}]")).unwrap_or_default();
        writeln!(stderr, "{} {}{} {}: {} (tol {})", if r.pass { "PASS" } else { "FAIL" }, r.suite, model, r.metric, value, fmt_f64(r.tolerance))?;
    }
    if report.pass {
        Ok(())
    } else {
        Err(CliError::VerifyFailed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_ranges() {
        assert_eq!(parse_levels("3").unwrap(), vec![3]);
        assert_eq!(parse_levels("0..3").unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(parse_levels("2..=4").unwrap(), vec![2, 3, 4]);
        for bad in ["-1", "3..1", "a", "0..", ""] {
            assert!(matches!(parse_levels(bad), Err(CliError::Usage(_))), "{bad}");
        }
    }

    #[test]
    fn output_names() {
        assert_eq!(output_path(None, "wigner", "n2", Format::Csv), PathBuf::from("wigner_n2.csv"));
        assert_eq!(output_path(Some(Path::new("out/w.json")), "wigner", "n0", Format::Json), PathBuf::from("out/w_n0.json"));
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(output_path(Some(dir.path()), "starexp", "closed", Format::Csv), dir.path().join("starexp_closed.csv"));
    }
}
