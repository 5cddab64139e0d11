use num_complex::Complex64;

use crate::symbols::{PhysContext, PolySymbol};

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Coefficient `(i hbar / 2)^(m+n) (-1)^m / (m! n!)` of the bidifferential
/// expansion.
pub(crate) fn series_coefficient(hbar: f64, m: u32, n: u32) -> Complex64 {
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    Complex64::new(0.0, hbar / 2.0).powu(m + n) * (sign / (factorial(m) * factorial(n)))
}

/// Moyal product of two polynomials.
///
/// The bidifferential series
/// `sum_{m,n} (i hbar/2)^(m+n) (-1)^m / (m! n!) (d_p^m d_x^n f)(d_p^n d_x^m g)`
/// terminates once either factor runs out of degree, so the result is exact
/// up to coefficient rounding.
pub fn star_poly(f: &PolySymbol, g: &PolySymbol, ctx: &PhysContext) -> PolySymbol {
    star_poly_hbar(f, g, ctx.hbar)
}

/// As [`star_poly`] with an explicit `hbar`; `hbar = 0` gives the pointwise
/// product.
pub fn star_poly_hbar(f: &PolySymbol, g: &PolySymbol, hbar: f64) -> PolySymbol {
    let m_max = f.degree_p().min(g.degree_x());
    let n_max = f.degree_x().min(g.degree_p());
    let mut out = PolySymbol::zero();
    for m in 0..=m_max {
        for n in 0..=n_max {
            let coef = series_coefficient(hbar, m, n);
            if coef == Complex64::new(0.0, 0.0) {
                continue;
            }
            let df = f.derivative(n, m);
            let dg = g.derivative(m, n);
            if df.is_zero() || dg.is_zero() {
                continue;
            }
            out = &out + &df.pointwise(&dg).scale(coef);
        }
    }
    out
}
