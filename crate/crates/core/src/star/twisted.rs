//! Star product of two sampled symbols as a twisted convolution.
//!
//! Expanding one factor in plane waves, `g = sum_l g_l e^{i l.z}`, the
//! integral form of the product collapses to
//!
//! ```text
//! (f * g)(x, p) = sum_l g_l e^{i l.z} f(x - hbar l_p / 2, p + hbar l_x / 2)
//! ```
//!
//! and symmetrically when `f` is expanded instead. The plane-wave
//! coefficients come from a 2x zero-padded 2-D FFT. On an *aligned* grid each
//! padded frequency shifts the other factor by a whole number of nodes, so
//! the sum is evaluated exactly on the nodes with no interpolation. The only
//! approximation is the trigonometric representation of the expanded factor,
//! which is spectrally accurate once that factor has decayed at the edge.
//!
//! The cost is `O(N^2 K)` for `K` retained coefficients. Nothing faster exists
//! in general: on a finite grid the product is isomorphic to multiplication of
//! dense matrices.

use ndarray::{s, Array2};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::{fft2, signed_index, Direction};
use crate::symbols::{GridSymbol, PhaseGrid, PhysContext, Window};

/// Which factor is expanded in plane waves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarGridOptions {
    /// Plane-wave coefficients below `spectral_tol * max|c|` are dropped.
    pub spectral_tol: f64,
    /// Required `boundary / sup` ratio for factors that must decay.
    pub decay_tol: f64,
}

impl Default for StarGridOptions {
    fn default() -> Self {
        Self { spectral_tol: 1e-15, decay_tol: 1e-12 }
    }
}

/// Product valid only inside `valid`; zero outside.
#[derive(Debug, Clone)]
pub struct LocalProduct {
    pub symbol: GridSymbol,
    pub valid: Window,
}

/// Integer node shifts `(k_x, k_p)` per padded frequency step.
pub fn alignment(grid: &PhaseGrid, ctx: &PhysContext) -> Result<(i64, i64)> {
    let (sx, sp) = grid.shift_quanta(ctx.hbar);
    let near = |v: f64| (v - v.round()).abs() <= 1e-9 * v.abs().max(1.0) && v.round() >= 1.0;
    if near(sx) && near(sp) {
        Ok((sx.round() as i64, sp.round() as i64))
    } else {
        Err(Error::NotAligned { shift_x: sx, shift_p: sp })
    }
}

struct Spectrum {
    /// Coefficients grouped by `b` (momentum frequency): `(b, [(a, c_ab)])`.
    groups: Vec<(i64, Vec<(i64, Complex64)>)>,
    count: usize,
}

fn spectrum(f: &GridSymbol, tol: f64, pad: usize) -> Spectrum {
    let g = f.grid();
    let (mx, mp) = (pad * g.n_x, pad * g.n_p);
    let mut padded = Array2::<Complex64>::zeros((mx, mp));
    padded.slice_mut(s![..g.n_x, ..g.n_p]).assign(f.values());
    fft2(&mut padded, Direction::Forward);
    let norm = 1.0 / (mx * mp) as f64;
    let cmax = padded.iter().fold(0.0f64, |m, v| m.max(v.norm())) * norm;
    let cut = tol * cmax;
    let mut groups: Vec<(i64, Vec<(i64, Complex64)>)> = Vec::new();
    let mut count = 0;
    for kb in 0..mp {
        let b = signed_index(kb, mp);
        let mut row = Vec::new();
        for ka in 0..mx {
            let c = padded[[ka, kb]] * norm;
            if c.norm() >= cut && c != Complex64::new(0.0, 0.0) {
                row.push((signed_index(ka, mx), c));
            }
        }
        if !row.is_empty() {
            count += row.len();
            groups.push((b, row));
        }
    }
    Spectrum { groups, count }
}

fn phase_table(n_nodes: usize, m: usize) -> Array2<Complex64> {
    // table[[a + m/2, i]] = exp(2 pi i a i / m) for signed a in [-m/2, m/2).
    Array2::from_shape_fn((m, n_nodes), |(ka, i)| {
        let a = ka as i64 - (m / 2) as i64;
        let ph = 2.0 * PI * ((a * i as i64).rem_euclid(m as i64)) as f64 / m as f64;
        Complex64::new(ph.cos(), ph.sin())
    })
}

fn is_constant(f: &GridSymbol) -> Option<Complex64> {
    let v0 = f.at(0, 0);
    f.values().iter().all(|v| *v == v0).then_some(v0)
}

/// Star product of two sampled symbols with default options.
pub fn star_grid(f: &GridSymbol, g: &GridSymbol, ctx: &PhysContext) -> Result<GridSymbol> {
    star_grid_with(f, g, ctx, &StarGridOptions::default())
}

/// Star product requiring both factors to have decayed at the boundary.
///
/// The cheaper factor (fewer retained plane waves) is expanded. A factor that
/// is exactly constant acts as a scalar and need not decay.
pub fn star_grid_with(f: &GridSymbol, g: &GridSymbol, ctx: &PhysContext, opts: &StarGridOptions) -> Result<GridSymbol> {
    f.check_same_grid(g)?;
    if let Some(c) = is_constant(f) {
        return Ok(g.scale(c));
    }
    if let Some(c) = is_constant(g) {
        return Ok(f.scale(c));
    }
    f.check_decay(opts.decay_tol)?;
    g.check_decay(opts.decay_tol)?;
    let shifts = alignment(f.grid(), ctx)?;
    let sf = spectrum(f, opts.spectral_tol, 2);
    let sg = spectrum(g, opts.spectral_tol, 2);
    let out = if sf.count < sg.count {
        twisted_sum(&sf, g, Factor::Left, shifts, None)
    } else {
        twisted_sum(&sg, f, Factor::Right, shifts, None)
    };
    Ok(out.symbol)
}

/// Star product in which only the `expand`ed factor must decay.
///
/// The other factor may be anything smooth on the grid (a chirp, a
/// polynomial); the product is exact only where every shift needed by the
/// expansion stays on the grid, reported as `valid`. Outside that window the
/// result is set to zero.
pub fn star_grid_one_sided(
    f: &GridSymbol,
    g: &GridSymbol,
    ctx: &PhysContext,
    expand: Factor,
    opts: &StarGridOptions,
) -> Result<LocalProduct> {
    f.check_same_grid(g)?;
    let shifts = alignment(f.grid(), ctx)?;
    let (expanded, other) = match expand {
        Factor::Left => (f, g),
        Factor::Right => (g, f),
    };
    expanded.check_decay(opts.decay_tol)?;
    let spec = spectrum(expanded, opts.spectral_tol, 2);
    let window = valid_window(&spec, other.grid(), expand, shifts);
    Ok(twisted_sum(&spec, other, expand, shifts, Some(window)))
}

fn sigma(expand: Factor) -> i64 {
    match expand {
        Factor::Right => 1,
        Factor::Left => -1,
    }
}

fn valid_window(spec: &Spectrum, grid: &PhaseGrid, expand: Factor, (kx, kp): (i64, i64)) -> Window {
    let sg = sigma(expand);
    // Row used for output row i is i - sg*b*kx; column is j + sg*a*kp.
    let (mut row_lo, mut row_hi) = (0i64, 0i64);
    let (mut col_lo, mut col_hi) = (0i64, 0i64);
    for (b, row) in &spec.groups {
        let d = -sg * b * kx;
        row_lo = row_lo.min(d);
        row_hi = row_hi.max(d);
        for (a, _) in row {
            let e = sg * a * kp;
            col_lo = col_lo.min(e);
            col_hi = col_hi.max(e);
        }
    }
    let clamp = |v: i64, n: usize| v.clamp(0, n as i64) as usize;
    let (nx, np) = (grid.n_x as i64, grid.n_p as i64);
    let i0 = clamp(-row_lo, grid.n_x);
    let j0 = clamp(-col_lo, grid.n_p);
    Window {
        i0,
        i1: clamp(nx - row_hi, grid.n_x).max(i0),
        j0,
        j1: clamp(np - col_hi, grid.n_p).max(j0),
    }
}

fn twisted_sum(
    spec: &Spectrum,
    other: &GridSymbol,
    expand: Factor,
    (kx, kp): (i64, i64),
    window: Option<Window>,
) -> LocalProduct {
    let grid = *other.grid();
    let (nx, np) = (grid.n_x, grid.n_p);
    let (mx, mp) = (2 * nx, 2 * np);
    let ex = phase_table(nx, mx);
    let ep = phase_table(np, mp);
    let sg = sigma(expand);
    let win = window.unwrap_or_else(|| grid.full());
    let vals = other.values();

    let rows: Vec<Vec<Complex64>> = (0..nx)
        .into_par_iter()
        .map(|i| {
            let mut out = vec![Complex64::new(0.0, 0.0); np];
            if i < win.i0 || i >= win.i1 {
                return out;
            }
            let mut acc = vec![Complex64::new(0.0, 0.0); np];
            for (b, row) in &spec.groups {
                let src = i as i64 - sg * b * kx;
                if src < 0 || src >= nx as i64 {
                    continue;
                }
                let src_row = vals.row(src as usize);
                let src_row = src_row.as_slice().expect("standard layout");
                acc.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
                for (a, c) in row {
                    let coef = c * ex[[(a + nx as i64) as usize, i]];
                    let shift = sg * a * kp;
                    let j_lo = (-shift).max(0) as usize;
                    let j_hi = (np as i64 - shift).min(np as i64).max(0) as usize;
                    if j_lo >= j_hi {
                        continue;
                    }
                    let s_lo = (j_lo as i64 + shift) as usize;
                    let src_slice = &src_row[s_lo..s_lo + (j_hi - j_lo)];
                    for (o, v) in acc[j_lo..j_hi].iter_mut().zip(src_slice) {
                        *o += coef * v;
                    }
                }
                let eb = ep.row((b + np as i64) as usize);
                for ((o, a), e) in out.iter_mut().zip(&acc).zip(eb.iter()) {
                    *o += a * e;
                }
            }
            if window.is_some() {
                for (j, o) in out.iter_mut().enumerate() {
                    if j < win.j0 || j >= win.j1 {
                        *o = Complex64::new(0.0, 0.0);
                    }
                }
            }
            out
        })
        .collect();

    let mut values = Array2::<Complex64>::zeros((nx, np));
    for (i, r) in rows.into_iter().enumerate() {
        values.row_mut(i).iter_mut().zip(r).for_each(|(d, s)| *d = s);
    }
    LocalProduct { symbol: GridSymbol::from_parts_unchecked(grid, values), valid: win }
}

/// Star product of a sampled symbol with an analytic separable factor
/// `G(x, p) = gx(x) gp(p)`.
///
/// The sampled factor `f` is expanded in plane waves and must decay; `G` is
/// evaluated at the shifted points directly, so it may grow or oscillate
/// without bound and the grid need not be aligned. With `side = Left` the
/// result is `f * G`, with `Right` it is `G * f`.
///
/// The expansion treats `f` as periodic with period `pad` times the grid
/// extent. Each periodic copy contributes its own product with `G`, which for
/// a chirp need not stay near the copy; `pad` must be large enough to keep
/// those contributions off the grid.
pub fn star_separable<FX, FP>(
    f: &GridSymbol,
    gx: FX,
    gp: FP,
    ctx: &PhysContext,
    side: Factor,
    pad: usize,
    opts: &StarGridOptions,
) -> Result<GridSymbol>
where
    FX: Fn(f64) -> Complex64 + Sync,
    FP: Fn(f64) -> Complex64 + Sync,
{
    if pad < 2 || !pad.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("padding factor {pad} must be a power of two >= 2")));
    }
    f.check_decay(opts.decay_tol)?;
    let grid = *f.grid();
    let (nx, np) = (grid.n_x, grid.n_p);
    let (mx, mp) = (pad * nx, pad * np);
    let spec = spectrum(f, opts.spectral_tol, pad);
    let ex = phase_table(nx, mx);
    let ep = phase_table(np, mp);
    // The expanded factor on the left shifts G by (+hbar k_p/2, -hbar k_x/2).
    let sg = match side {
        Factor::Left => -1.0,
        Factor::Right => 1.0,
    };
    let half = 0.5 * ctx.hbar;
    let kx = |a: i64| 2.0 * PI * a as f64 / (mx as f64 * grid.dx());
    let kp = |b: i64| 2.0 * PI * b as f64 / (mp as f64 * grid.dp());
    let xs = grid.xs();
    let ps = grid.ps();

    // fp(p_j + shift(a)) for every x-frequency a in use.
    let mut a_used: Vec<i64> = spec.groups.iter().flat_map(|(_, r)| r.iter().map(|(a, _)| *a)).collect();
    a_used.sort_unstable();
    a_used.dedup();
    let fp_rows: Vec<Vec<Complex64>> = a_used
        .par_iter()
        .map(|&a| {
            let d = sg * half * kx(a);
            ps.iter().map(|p| gp(p + d)).collect()
        })
        .collect();
    let fp_of = |a: i64| &fp_rows[a_used.binary_search(&a).expect("frequency tabulated")];
    let fx_rows: Vec<Vec<Complex64>> = spec
        .groups
        .par_iter()
        .map(|(b, _)| {
            let d = -sg * half * kp(*b);
            xs.iter().map(|x| gx(x + d)).collect()
        })
        .collect();

    let rows: Vec<Vec<Complex64>> = (0..nx)
        .into_par_iter()
        .map(|i| {
            let mut out = vec![Complex64::new(0.0, 0.0); np];
            let mut acc = vec![Complex64::new(0.0, 0.0); np];
            for ((b, row), fxr) in spec.groups.iter().zip(&fx_rows) {
                acc.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
                for (a, c) in row {
                    let coef = c * ex[[(a + (mx / 2) as i64) as usize, i]];
                    for (o, v) in acc.iter_mut().zip(fp_of(*a)) {
                        *o += coef * v;
                    }
                }
                let eb = ep.row((b + (mp / 2) as i64) as usize);
                let gxi = fxr[i];
                for ((o, a), e) in out.iter_mut().zip(&acc).zip(eb.iter()) {
                    *o += gxi * a * e;
                }
            }
            out
        })
        .collect();

    let mut values = Array2::<Complex64>::zeros((nx, np));
    for (i, r) in rows.into_iter().enumerate() {
        values.row_mut(i).iter_mut().zip(r).for_each(|(d, s)| *d = s);
    }
    Ok(GridSymbol::from_parts_unchecked(grid, values))
}
