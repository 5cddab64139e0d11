use std::collections::HashMap;

use ndarray::{Array2, Zip};
use num_complex::Complex64;

use super::fd::{derivative_along, stencil_radius};
use super::poly::series_coefficient;
use crate::error::{Error, Result};
use crate::symbols::{GridSymbol, PhysContext, PolySymbol};

/// Which side of the product the polynomial factor sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `poly * grid`
    Left,
    /// `grid * poly`
    Right,
}

/// Default formal accuracy of the finite-difference stencils.
pub const DEFAULT_FD_ACCURACY: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedOptions {
    /// Highest total derivative order `m + n` kept in the series.
    pub max_order: u32,
    /// Formal accuracy of the difference stencils (even, >= 2).
    pub accuracy: usize,
}

impl MixedOptions {
    pub fn for_poly(f: &PolySymbol) -> Self {
        Self { max_order: f.degree(), accuracy: DEFAULT_FD_ACCURACY }
    }

    pub fn with_accuracy(mut self, accuracy: usize) -> Self {
        self.accuracy = accuracy;
        self
    }
}

/// `f * g` with `f` exact and `g` differentiated by 4th-order stencils.
pub fn star_mixed(f: &PolySymbol, g: &GridSymbol, ctx: &PhysContext, max_order: u32) -> Result<GridSymbol> {
    star_mixed_with(f, g, ctx, Side::Left, MixedOptions { max_order, accuracy: DEFAULT_FD_ACCURACY })
}

/// `g * f`, the mirror of [`star_mixed`].
pub fn star_mixed_right(g: &GridSymbol, f: &PolySymbol, ctx: &PhysContext, max_order: u32) -> Result<GridSymbol> {
    star_mixed_with(f, g, ctx, Side::Right, MixedOptions { max_order, accuracy: DEFAULT_FD_ACCURACY })
}

pub fn star_mixed_with(
    f: &PolySymbol,
    g: &GridSymbol,
    ctx: &PhysContext,
    side: Side,
    opts: MixedOptions,
) -> Result<GridSymbol> {
    if opts.max_order < f.degree() {
        return Err(Error::InvalidParameter(format!(
            "max_order {} is below the polynomial degree {}",
            opts.max_order,
            f.degree()
        )));
    }
    let grid = *g.grid();
    let max_d = opts.max_order as usize;
    let required = (2 * max_d + 5).max(2 * stencil_radius(max_d, opts.accuracy) + 1);
    if grid.n_x < required || grid.n_p < required {
        return Err(Error::Degenerate { required, n_x: grid.n_x, n_p: grid.n_p });
    }

    let mut cache = DerivCache::new(g, opts.accuracy);
    let mut out = Array2::<Complex64>::zeros((grid.n_x, grid.n_p));
    for m in 0..=opts.max_order {
        for n in 0..=(opts.max_order - m) {
            // Derivative orders (x, p) landing on f and on g.
            let (f_ord, g_ord) = match side {
                Side::Left => ((n, m), (m, n)),
                Side::Right => ((m, n), (n, m)),
            };
            let df = f.derivative(f_ord.0, f_ord.1);
            if df.is_zero() {
                continue;
            }
            let coef = series_coefficient(ctx.hbar, m, n);
            if coef == Complex64::new(0.0, 0.0) {
                continue;
            }
            let dg = cache.get(g_ord.0 as usize, g_ord.1 as usize)?;
            let sf = df.sample(&grid);
            Zip::from(&mut out).and(sf.values()).and(dg).par_for_each(|o, &a, &b| *o += coef * a * b);
        }
    }
    Ok(GridSymbol::from_parts_unchecked(grid, out))
}

struct DerivCache<'a> {
    g: &'a GridSymbol,
    accuracy: usize,
    x_only: HashMap<usize, Array2<Complex64>>,
    mixed: HashMap<(usize, usize), Array2<Complex64>>,
}

impl<'a> DerivCache<'a> {
    fn new(g: &'a GridSymbol, accuracy: usize) -> Self {
        Self { g, accuracy, x_only: HashMap::new(), mixed: HashMap::new() }
    }

    fn get(&mut self, dx_ord: usize, dp_ord: usize) -> Result<&Array2<Complex64>> {
        if !self.mixed.contains_key(&(dx_ord, dp_ord)) {
            let grid = *self.g.grid();
            if !self.x_only.contains_key(&dx_ord) {
                let d = derivative_along(self.g.values(), 0, grid.dx(), dx_ord, self.accuracy)?;
                self.x_only.insert(dx_ord, d);
            }
            let base = &self.x_only[&dx_ord];
            let d = derivative_along(base, 1, grid.dp(), dp_ord, self.accuracy)?;
            self.mixed.insert((dx_ord, dp_ord), d);
        }
        Ok(&self.mixed[&(dx_ord, dp_ord)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::star::star_poly;
    use crate::symbols::PhaseGrid;

    fn ctx() -> PhysContext {
        PhysContext::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn unit_polynomial_returns_input() {
        let g = PhaseGrid::square(32, 3.0).unwrap();
        let w = GridSymbol::from_real_fn(g, |x, p| (-(x * x + p * p)).exp());
        let out = star_mixed(&PolySymbol::one(), &w, &ctx(), 0).unwrap();
        assert_eq!(out.values(), w.values());
    }

    #[test]
    fn x_star_sampled_p_matches_exact_product() {
        // Linear symbols are differentiated exactly by any consistent stencil.
        let g = PhaseGrid::square(32, 2.0).unwrap();
        let p = PolySymbol::p().sample(&g);
        let out = star_mixed(&PolySymbol::x(), &p, &ctx(), 1).unwrap();
        let want = star_poly(&PolySymbol::x(), &PolySymbol::p(), &ctx()).sample(&g);
        assert!(out.max_abs_diff_in(&want, &g.full()).unwrap() < 1e-12);
        let right = star_mixed_right(&p, &PolySymbol::x(), &ctx(), 1).unwrap();
        let want_r = star_poly(&PolySymbol::p(), &PolySymbol::x(), &ctx()).sample(&g);
        assert!(right.max_abs_diff_in(&want_r, &g.full()).unwrap() < 1e-12);
    }

    #[test]
    fn mixed_agrees_with_exact_polynomial_product() {
        // Degree <= 4 in g: the 4th-order stencils (exact to degree 4 + d - 1)
        // differentiate it exactly, so the mixed route must reproduce star_poly.
        let g = PhaseGrid::square(32, 1.5).unwrap();
        let f = PolySymbol::from_terms([
            ((2, 0), Complex64::new(0.5, 0.0)),
            ((0, 2), Complex64::new(0.5, 0.0)),
            ((1, 1), Complex64::new(0.0, 0.3)),
        ]);
        let h = PolySymbol::from_terms([
            ((1, 2), Complex64::new(1.0, 0.0)),
            ((2, 1), Complex64::new(0.0, -1.0)),
            ((0, 1), Complex64::new(2.0, 0.0)),
        ]);
        let hg = h.sample(&g);
        for side in [Side::Left, Side::Right] {
            let out = star_mixed_with(&f, &hg, &ctx(), side, MixedOptions::for_poly(&f)).unwrap();
            let exact = match side {
                Side::Left => star_poly(&f, &h, &ctx()),
                Side::Right => star_poly(&h, &f, &ctx()),
            };
            let want = exact.sample(&g);
            let err = out.max_abs_diff_in(&want, &g.full()).unwrap();
            assert!(err < 1e-9 * want.sup(), "{side:?}: {err}");
        }
    }

    #[test]
    fn order_below_degree_is_rejected() {
        let g = PhaseGrid::square(16, 1.0).unwrap();
        let err = star_mixed(&PolySymbol::monomial(2, 0, 1.0), &GridSymbol::zeros(g), &ctx(), 1).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn coarse_grid_is_degenerate() {
        let g = PhaseGrid::square(8, 1.0).unwrap();
        let err = star_mixed(&PolySymbol::monomial(2, 0, 1.0), &GridSymbol::zeros(g), &ctx(), 2).unwrap_err();
        assert!(matches!(err, Error::Degenerate { required: 9, .. }));
    }
}
