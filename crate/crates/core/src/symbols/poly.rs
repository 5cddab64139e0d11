use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::grid::{GridSymbol, PhaseGrid};

/// Exact bivariate polynomial `sum c_ab x^a p^b` with complex coefficients.
///
/// Zero coefficients are never stored, so structural equality is value
/// equality up to floating-point rounding.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolySymbol {
    terms: BTreeMap<(u32, u32), Complex64>,
}

impl PolySymbol {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: impl Into<Complex64>) -> Self {
        Self::monomial(0, 0, c)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn x() -> Self {
        Self::monomial(1, 0, 1.0)
    }

    pub fn p() -> Self {
        Self::monomial(0, 1, 1.0)
    }

    pub fn monomial(deg_x: u32, deg_p: u32, c: impl Into<Complex64>) -> Self {
        let mut out = Self::zero();
        out.add_term(deg_x, deg_p, c.into());
        out
    }

    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = ((u32, u32), Complex64)>,
    {
        let mut out = Self::zero();
        for ((a, b), c) in terms {
            out.add_term(a, b, c);
        }
        out
    }

    /// `(p^2 + k x^2) / 2` style quadratic: `a p^2 + b x p + c x^2`.
    pub fn quadratic(p2: f64, xp: f64, x2: f64) -> Self {
        Self::from_terms([
            ((0, 2), Complex64::new(p2, 0.0)),
            ((1, 1), Complex64::new(xp, 0.0)),
            ((2, 0), Complex64::new(x2, 0.0)),
        ])
    }

    pub fn add_term(&mut self, deg_x: u32, deg_p: u32, c: Complex64) {
        let slot = self.terms.entry((deg_x, deg_p)).or_insert(Complex64::new(0.0, 0.0));
        *slot += c;
        if *slot == Complex64::new(0.0, 0.0) {
            self.terms.remove(&(deg_x, deg_p));
        }
    }

    pub fn coeff(&self, deg_x: u32, deg_p: u32) -> Complex64 {
        self.terms.get(&(deg_x, deg_p)).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), Complex64)> + '_ {
        self.terms.iter().map(|(&k, &v)| (k, v))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Largest total degree of a stored term; zero for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|(a, b)| a + b).max().unwrap_or(0)
    }

    pub fn degree_x(&self) -> u32 {
        self.terms.keys().map(|(a, _)| *a).max().unwrap_or(0)
    }

    pub fn degree_p(&self) -> u32 {
        self.terms.keys().map(|(_, b)| *b).max().unwrap_or(0)
    }

    pub fn is_finite(&self) -> bool {
        self.terms.values().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn is_real(&self) -> bool {
        self.terms.values().all(|c| c.im == 0.0)
    }

    pub fn conj(&self) -> Self {
        Self { terms: self.terms.iter().map(|(&k, v)| (k, v.conj())).collect() }
    }

    pub fn scale(&self, c: impl Into<Complex64>) -> Self {
        let c = c.into();
        Self::from_terms(self.terms().map(|(k, v)| (k, v * c)))
    }

    /// `d^m/dx^m d^n/dp^n`.
    pub fn derivative(&self, m: u32, n: u32) -> Self {
        let falling = |d: u32, k: u32| ((d - k + 1)..=d).fold(1.0, |acc, f| acc * f as f64);
        Self::from_terms(
            self.terms()
                .filter(|((a, b), _)| *a >= m && *b >= n)
                .map(|((a, b), c)| ((a - m, b - n), c * (falling(a, m) * falling(b, n)))),
        )
    }

    /// Pointwise (commutative) product.
    pub fn pointwise(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for ((a, b), c) in self.terms() {
            for ((d, e), f) in other.terms() {
                out.add_term(a + d, b + e, c * f);
            }
        }
        out
    }

    /// Horner evaluation, nested with `x` outermost.
    pub fn eval(&self, x: f64, p: f64) -> Complex64 {
        let dx = self.degree_x();
        let dp = self.degree_p();
        let mut acc = Complex64::new(0.0, 0.0);
        for a in (0..=dx).rev() {
            let mut inner = Complex64::new(0.0, 0.0);
            for b in (0..=dp).rev() {
                inner = inner * p + self.coeff(a, b);
            }
            acc = acc * x + inner;
        }
        acc
    }

    pub fn sample(&self, grid: &PhaseGrid) -> GridSymbol {
        GridSymbol::from_fn(*grid, |x, p| self.eval(x, p))
    }

    /// Largest coefficient-wise difference.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        (self - other).terms.values().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.norm()))
    }
}

/// Sample a polynomial on every node of `grid`.
pub fn sample_poly(poly: &PolySymbol, grid: &PhaseGrid) -> GridSymbol {
    poly.sample(grid)
}

impl Add for &PolySymbol {
    type Output = PolySymbol;
    fn add(self, rhs: &PolySymbol) -> PolySymbol {
        let mut out = self.clone();
        for ((a, b), c) in rhs.terms() {
            out.add_term(a, b, c);
        }
        out
    }
}

impl Sub for &PolySymbol {
    type Output = PolySymbol;
    fn sub(self, rhs: &PolySymbol) -> PolySymbol {
        let mut out = self.clone();
        for ((a, b), c) in rhs.terms() {
            out.add_term(a, b, -c);
        }
        out
    }
}

impl Neg for &PolySymbol {
    type Output = PolySymbol;
    fn neg(self) -> PolySymbol {
        self.scale(-1.0)
    }
}

impl Mul<Complex64> for &PolySymbol {
    type Output = PolySymbol;
    fn mul(self, rhs: Complex64) -> PolySymbol {
        self.scale(rhs)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for PolySymbol {
            type Output = PolySymbol;
            fn $f(self, rhs: PolySymbol) -> PolySymbol {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);

impl fmt::Display for PolySymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for ((a, b), c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({}{:+}i)", c.re, c.im)?;
            match a {
                0 => {}
                1 => write!(f, "x")?,
                _ => write!(f, "x^{a}")?,
            }
            match b {
                0 => {}
                1 => write!(f, "p")?,
                _ => write!(f, "p^{b}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_samples_to_ones() {
        let g = PhaseGrid::new(8, 16, 1.0, 2.0).unwrap();
        let s = sample_poly(&PolySymbol::one(), &g);
        assert!(s.values().iter().all(|v| *v == c(1.0, 0.0)));
    }

    #[test]
    fn coordinate_function_fills_columns() {
        let g = PhaseGrid::new(8, 8, 1.0, 1.0).unwrap();
        let s = sample_poly(&PolySymbol::x(), &g);
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(s.at(i, j), c(g.x(i), 0.0));
            }
        }
    }

    #[test]
    fn direct_evaluation() {
        let f = PolySymbol::monomial(2, 2, 1.0);
        assert_eq!(f.eval(2.0, 3.0), c(36.0, 0.0));
    }

    #[test]
    fn zero_coefficients_are_dropped() {
        let mut f = PolySymbol::x();
        f.add_term(1, 0, c(-1.0, 0.0));
        assert!(f.is_zero());
        assert_eq!(f.degree(), 0);
        let g = &PolySymbol::monomial(3, 1, 2.0) - &PolySymbol::monomial(3, 1, 2.0);
        assert_eq!(g.num_terms(), 0);
    }

    #[test]
    fn derivatives_of_monomials() {
        let f = PolySymbol::monomial(3, 2, c(1.0, 1.0));
        let d = f.derivative(2, 1);
        assert_eq!(d, PolySymbol::monomial(1, 1, c(12.0, 12.0)));
        assert!(f.derivative(4, 0).is_zero());
    }

    fn arb_poly(max_deg: u32) -> impl Strategy<Value = PolySymbol> {
        proptest::collection::vec(((0..=max_deg), (0..=max_deg), -2.0..2.0f64, -2.0..2.0f64), 0..8).prop_map(
            move |ts| {
                PolySymbol::from_terms(
                    ts.into_iter()
                        .filter(|(a, b, _, _)| a + b <= max_deg)
                        .map(|(a, b, re, im)| ((a, b), c(re, im))),
                )
            },
        )
    }

    proptest! {
        #[test]
        fn sampling_is_linear(f in arb_poly(4), g in arb_poly(4), ar in -2.0..2.0f64, br in -2.0..2.0f64) {
            let grid = PhaseGrid::square(16, 1.5).unwrap();
            let a = c(ar, 0.5);
            let b = c(br, -0.25);
            let combo = &f.scale(a) + &g.scale(b);
            let lhs = sample_poly(&combo, &grid);
            let sf = sample_poly(&f, &grid);
            let sg = sample_poly(&g, &grid);
            for i in 0..16 {
                for j in 0..16 {
                    let rhs = sf.at(i, j) * a + sg.at(i, j) * b;
                    let scale = 1.0 + rhs.norm() + (sf.at(i, j) * a).norm() + (sg.at(i, j) * b).norm();
                    prop_assert!((lhs.at(i, j) - rhs).norm() <= 1e-13 * scale);
                }
            }
        }

        #[test]
        fn even_real_symbol_integral_is_real(cx in 0.0..2.0f64, cp in 0.0..2.0f64, k in 0.0..2.0f64) {
            let grid = PhaseGrid::square(32, 2.0).unwrap();
            let f = PolySymbol::from_terms([
                ((0, 0), c(k, 0.0)),
                ((2, 0), c(cx, 0.0)),
                ((0, 2), c(cp, 0.0)),
                ((2, 2), c(1.0, 0.0)),
            ]);
            let i = sample_poly(&f, &grid).integral();
            prop_assert!(i.im.abs() <= 1e-14 * i.re.abs().max(1e-300));
        }

        #[test]
        fn pointwise_product_evaluates_to_product(f in arb_poly(3), g in arb_poly(3), x in -1.0..1.0f64, p in -1.0..1.0f64) {
            let lhs = f.pointwise(&g).eval(x, p);
            let rhs = f.eval(x, p) * g.eval(x, p);
            prop_assert!((lhs - rhs).norm() <= 1e-11 * (1.0 + rhs.norm()));
        }
    }
}
