//! The Moyal star product and bracket.

pub mod fd;
mod mixed;
mod poly;
mod twisted;

use num_complex::Complex64;

pub use mixed::{star_mixed, star_mixed_right, star_mixed_with, MixedOptions, Side, DEFAULT_FD_ACCURACY};
pub use poly::{star_poly, star_poly_hbar};
pub use twisted::{alignment, star_grid, star_grid_one_sided, star_grid_with, star_separable, Factor, LocalProduct, StarGridOptions};

use crate::error::Result;
use crate::symbols::{GridSymbol, PhysContext, PolySymbol};

/// Symbol types closed under the star product.
pub trait StarAlgebra: Sized {
    fn star(&self, other: &Self, ctx: &PhysContext) -> Result<Self>;
    fn combine(&self, other: &Self, a: Complex64, b: Complex64) -> Result<Self>;
}

impl StarAlgebra for PolySymbol {
    fn star(&self, other: &Self, ctx: &PhysContext) -> Result<Self> {
        Ok(star_poly(self, other, ctx))
    }

    fn combine(&self, other: &Self, a: Complex64, b: Complex64) -> Result<Self> {
        Ok(&self.scale(a) + &other.scale(b))
    }
}

impl StarAlgebra for GridSymbol {
    fn star(&self, other: &Self, ctx: &PhysContext) -> Result<Self> {
        star_grid(self, other, ctx)
    }

    fn combine(&self, other: &Self, a: Complex64, b: Complex64) -> Result<Self> {
        self.zip_with(other, |u, v| a * u + b * v)
    }
}

/// `(f * g - g * f) / (i hbar)`.
pub fn moyal_bracket<T: StarAlgebra>(f: &T, g: &T, ctx: &PhysContext) -> Result<T> {
    let fg = f.star(g, ctx)?;
    let gf = g.star(f, ctx)?;
    let k = Complex64::new(0.0, -1.0 / ctx.hbar);
    fg.combine(&gf, k, -k)
}

/// Bracket `{f, g}` of an exact polynomial with a sampled symbol.
pub fn moyal_bracket_mixed(f: &PolySymbol, g: &GridSymbol, ctx: &PhysContext, opts: MixedOptions) -> Result<GridSymbol> {
    let fg = star_mixed_with(f, g, ctx, Side::Left, opts)?;
    let gf = star_mixed_with(f, g, ctx, Side::Right, opts)?;
    let k = Complex64::new(0.0, -1.0 / ctx.hbar);
    fg.zip_with(&gf, |u, v| k * (u - v))
}

/// Canonical Poisson bracket `f_x g_p - f_p g_x` of polynomials.
pub fn poisson_bracket(f: &PolySymbol, g: &PolySymbol) -> PolySymbol {
    &f.derivative(1, 0).pointwise(&g.derivative(0, 1)) - &f.derivative(0, 1).pointwise(&g.derivative(1, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctx(hbar: f64) -> PhysContext {
        PhysContext::new(hbar, 1.0).unwrap()
    }

    #[test]
    fn bracket_of_canonical_pair_is_one() {
        let b = moyal_bracket(&PolySymbol::x(), &PolySymbol::p(), &ctx(0.6)).unwrap();
        assert!(b.max_coeff_diff(&PolySymbol::one()) <= 1e-15);
    }

    #[test]
    fn bracket_of_squares() {
        let b = moyal_bracket(&PolySymbol::monomial(2, 0, 1.0), &PolySymbol::monomial(0, 2, 1.0), &ctx(1.0)).unwrap();
        assert!(b.max_coeff_diff(&PolySymbol::monomial(1, 1, 4.0)) <= 1e-14, "{b}");
    }

    #[test]
    fn bracket_is_antisymmetric_on_grids() {
        let g = crate::symbols::PhaseGrid::aligned(64, 1.0, 1.0).unwrap();
        let f = GridSymbol::from_real_fn(g, |x, p| (-(2.0 * x * x + 3.0 * p * p)).exp());
        let b = moyal_bracket(&f, &f, &ctx(1.0)).unwrap();
        assert!(b.sup() == 0.0);
    }

    fn quadratic() -> impl Strategy<Value = PolySymbol> {
        proptest::collection::vec(-3.0..3.0f64, 6).prop_map(|c| {
            PolySymbol::from_terms([
                ((2, 0), Complex64::new(c[0], 0.0)),
                ((1, 1), Complex64::new(c[1], 0.0)),
                ((0, 2), Complex64::new(c[2], 0.0)),
                ((1, 0), Complex64::new(c[3], 0.0)),
                ((0, 1), Complex64::new(c[4], 0.0)),
                ((0, 0), Complex64::new(c[5], 0.0)),
            ])
        })
    }

    proptest! {
        #[test]
        fn quadratic_brackets_are_classical(f in quadratic(), g in quadratic(), hbar in 0.0..3.0f64) {
            let cx = PhysContext { hbar: hbar.max(1e-3), omega_cap: 1.0 };
            let m = moyal_bracket(&f, &g, &cx).unwrap();
            let pb = poisson_bracket(&f, &g);
            prop_assert!(m.max_coeff_diff(&pb) <= 1e-12 * (1.0 + pb.max_coeff()));
        }
    }
}
