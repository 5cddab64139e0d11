use ndarray::{Array2, Zip};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Physical constants shared by every computation: the reduced Planck
/// constant and the constant frequency of the scaled oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysContext {
    pub hbar: f64,
    pub omega_cap: f64,
}

impl PhysContext {
    pub fn new(hbar: f64, omega_cap: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")));
        }
        if !(omega_cap > 0.0 && omega_cap.is_finite()) {
            return Err(Error::InvalidParameter(format!("Omega must be positive, got {omega_cap}")));
        }
        Ok(Self { hbar, omega_cap })
    }

    pub fn with_hbar(self, hbar: f64) -> Result<Self> {
        Self::new(hbar, self.omega_cap)
    }
}

impl Default for PhysContext {
    fn default() -> Self {
        Self { hbar: 1.0, omega_cap: 1.0 }
    }
}

/// Uniform, origin-centred sampling of the phase plane.
///
/// Nodes are `x_i = -x_max + i*dx` for `i < n_x` (and likewise in `p`), so the
/// node set is symmetric about the origin under the periodic convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub n_x: usize,
    pub n_p: usize,
    pub x_max: f64,
    pub p_max: f64,
}

impl PhaseGrid {
    pub fn new(n_x: usize, n_p: usize, x_max: f64, p_max: f64) -> Result<Self> {
        for (name, n) in [("n_x", n_x), ("n_p", n_p)] {
            if n < 8 || !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!("{name} = {n} must be a power of two >= 8")));
            }
        }
        for (name, v) in [("x_max", x_max), ("p_max", p_max)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidGrid(format!("{name} = {v} must be positive")));
            }
        }
        Ok(Self { n_x, n_p, x_max, p_max })
    }

    pub fn square(n: usize, half_extent: f64) -> Result<Self> {
        Self::new(n, n, half_extent, half_extent)
    }

    /// Square-index grid on which every frequency of the 2x zero-padded
    /// spectrum shifts the phase plane by exactly one node:
    /// `dx * dp = pi * hbar / (2 n)`. `aspect` is `x_max / p_max`.
    pub fn aligned(n: usize, hbar: f64, aspect: f64) -> Result<Self> {
        if !(aspect > 0.0 && hbar > 0.0) {
            return Err(Error::InvalidGrid("aspect and hbar must be positive".into()));
        }
        let area = PI * hbar * n as f64 / 8.0;
        Self::new(n, n, (area * aspect).sqrt(), (area / aspect).sqrt())
    }

    /// Smallest aligned grid whose half-extents reach at least `x_min` and
    /// `x_min / aspect`.
    pub fn aligned_covering(x_min: f64, hbar: f64, aspect: f64) -> Result<Self> {
        let mut n = 8;
        loop {
            let g = Self::aligned(n, hbar, aspect)?;
            if g.x_max >= x_min {
                return Ok(g);
            }
            n *= 2;
            if n > 1 << 14 {
                return Err(Error::InvalidGrid(format!("no aligned grid up to n = 16384 reaches {x_min}")));
            }
        }
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.x_max / self.n_x as f64
    }

    pub fn dp(&self) -> f64 {
        2.0 * self.p_max / self.n_p as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.x_max + i as f64 * self.dx()
    }

    pub fn p(&self, j: usize) -> f64 {
        -self.p_max + j as f64 * self.dp()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n_x).map(|i| self.x(i)).collect()
    }

    pub fn ps(&self) -> Vec<f64> {
        (0..self.n_p).map(|j| self.p(j)).collect()
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dp()
    }

    pub fn len(&self) -> usize {
        self.n_x * self.n_p
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node shift, in units of `(dx, dp)`, produced by one frequency step of
    /// the 2x zero-padded spectrum.
    pub fn shift_quanta(&self, hbar: f64) -> (f64, f64) {
        let dk_x = PI / (self.n_x as f64 * self.dx());
        let dk_p = PI / (self.n_p as f64 * self.dp());
        (hbar * dk_p / (2.0 * self.dx()), hbar * dk_x / (2.0 * self.dp()))
    }

    pub fn same_as(&self, other: &PhaseGrid) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        self.n_x == other.n_x
            && self.n_p == other.n_p
            && close(self.x_max, other.x_max)
            && close(self.p_max, other.p_max)
    }

    /// Index window covering the central `fraction` of each axis.
    pub fn interior(&self, fraction: f64) -> Window {
        let cut = |n: usize| {
            let keep = ((n as f64 * fraction).round() as usize).clamp(1, n);
            let lo = (n - keep) / 2;
            (lo, lo + keep)
        };
        let (i0, i1) = cut(self.n_x);
        let (j0, j1) = cut(self.n_p);
        Window { i0, i1, j0, j1 }
    }

    pub fn full(&self) -> Window {
        Window { i0: 0, i1: self.n_x, j0: 0, j1: self.n_p }
    }
}

/// Half-open index box `[i0, i1) x [j0, j1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

impl Window {
    pub fn contains(&self, i: usize, j: usize) -> bool {
        (self.i0..self.i1).contains(&i) && (self.j0..self.j1).contains(&j)
    }

    pub fn intersect(&self, other: &Window) -> Window {
        let i0 = self.i0.max(other.i0);
        let j0 = self.j0.max(other.j0);
        Window { i0, i1: self.i1.min(other.i1).max(i0), j0, j1: self.j1.min(other.j1).max(j0) }
    }

    pub fn is_empty(&self) -> bool {
        self.i1 <= self.i0 || self.j1 <= self.j0
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.i0..self.i1).flat_map(move |i| (self.j0..self.j1).map(move |j| (i, j)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolNorms {
    pub l2: f64,
    pub sup: f64,
    pub integral: Complex64,
}

/// Complex function sampled on a [`PhaseGrid`]; `values[[i, j]]` is the value
/// at `(x_i, p_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSymbol {
    grid: PhaseGrid,
    values: Array2<Complex64>,
}

impl GridSymbol {
    pub fn new(grid: PhaseGrid, values: Array2<Complex64>) -> Result<Self> {
        if values.dim() != (grid.n_x, grid.n_p) {
            return Err(Error::InvalidGrid(format!(
                "values have shape {:?}, grid expects ({}, {})",
                values.dim(),
                grid.n_x,
                grid.n_p
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidParameter(format!("non-finite symbol value {bad}")));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_parts_unchecked(grid: PhaseGrid, values: Array2<Complex64>) -> Self {
        debug_assert_eq!(values.dim(), (grid.n_x, grid.n_p));
        Self { grid, values }
    }

    pub fn from_fn<F>(grid: PhaseGrid, f: F) -> Self
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        let (dx, dp) = (grid.dx(), grid.dp());
        let mut values = Array2::zeros((grid.n_x, grid.n_p));
        Zip::indexed(&mut values).par_for_each(|(i, j), v| {
            *v = f(-grid.x_max + i as f64 * dx, -grid.p_max + j as f64 * dp);
        });
        Self { grid, values }
    }

    pub fn from_real_fn<F>(grid: PhaseGrid, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        Self::from_fn(grid, |x, p| Complex64::new(f(x, p), 0.0))
    }

    pub fn constant(grid: PhaseGrid, c: Complex64) -> Self {
        Self { grid, values: Array2::from_elem((grid.n_x, grid.n_p), c) }
    }

    pub fn zeros(grid: PhaseGrid) -> Self {
        Self::constant(grid, Complex64::new(0.0, 0.0))
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<Complex64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[[i, j]]
    }

    pub fn map<F: Fn(Complex64) -> Complex64 + Sync + Send>(&self, f: F) -> Self {
        Self { grid: self.grid, values: self.values.mapv(f) }
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    pub fn add(&self, other: &GridSymbol) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridSymbol) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise (commutative) product.
    pub fn mul(&self, other: &GridSymbol) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn zip_with<F>(&self, other: &GridSymbol, f: F) -> Result<Self>
    where
        F: Fn(Complex64, Complex64) -> Complex64,
    {
        self.check_same_grid(other)?;
        let mut values = self.values.clone();
        Zip::from(&mut values).and(&other.values).for_each(|a, &b| *a = f(*a, b));
        Ok(Self { grid: self.grid, values })
    }

    pub fn check_same_grid(&self, other: &GridSymbol) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn sup_in(&self, w: &Window) -> f64 {
        w.iter().fold(0.0, |m, (i, j)| m.max(self.values[[i, j]].norm()))
    }

    /// Largest modulus on the outermost ring of nodes divided by the sup.
    pub fn boundary_ratio(&self) -> f64 {
        let sup = self.sup();
        if sup == 0.0 {
            return 0.0;
        }
        let (nx, np) = (self.grid.n_x, self.grid.n_p);
        let mut edge: f64 = 0.0;
        for i in 0..nx {
            edge = edge.max(self.values[[i, 0]].norm()).max(self.values[[i, np - 1]].norm());
        }
        for j in 0..np {
            edge = edge.max(self.values[[0, j]].norm()).max(self.values[[nx - 1, j]].norm());
        }
        edge / sup
    }

    pub fn check_decay(&self, limit: f64) -> Result<()> {
        let measured = self.boundary_ratio();
        if measured > limit {
            Err(Error::BoundaryDecay { measured, limit })
        } else {
            Ok(())
        }
    }

    /// Uniform-weight quadrature norms (periodic convention).
    pub fn norms(&self) -> SymbolNorms {
        let w = self.grid.cell_area();
        let mut integral = Complex64::new(0.0, 0.0);
        let mut sq = 0.0;
        let mut sup: f64 = 0.0;
        for v in self.values.iter() {
            integral += v;
            sq += v.norm_sqr();
            sup = sup.max(v.norm());
        }
        SymbolNorms { l2: (sq * w).sqrt(), sup, integral: integral * w }
    }

    pub fn integral(&self) -> Complex64 {
        self.norms().integral
    }

    /// `sup |self - other| / sup |other|` over the window.
    pub fn rel_diff_in(&self, other: &GridSymbol, w: &Window) -> Result<f64> {
        self.check_same_grid(other)?;
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for (i, j) in w.iter() {
            num = num.max((self.values[[i, j]] - other.values[[i, j]]).norm());
            den = den.max(other.values[[i, j]].norm());
        }
        Ok(if den == 0.0 { num } else { num / den })
    }

    pub fn max_abs_diff_in(&self, other: &GridSymbol, w: &Window) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(w.iter().fold(0.0, |m, (i, j)| m.max((self.values[[i, j]] - other.values[[i, j]]).norm())))
    }

    /// Bilinear interpolation; `None` outside the node rectangle.
    pub fn interpolate(&self, x: f64, p: f64) -> Option<Complex64> {
        let g = &self.grid;
        let fx = (x + g.x_max) / g.dx();
        let fp = (p + g.p_max) / g.dp();
        let eps = 1e-9;
        if fx < -eps || fp < -eps || fx > (g.n_x - 1) as f64 + eps || fp > (g.n_p - 1) as f64 + eps {
            return None;
        }
        let i = (fx.floor().max(0.0) as usize).min(g.n_x - 2);
        let j = (fp.floor().max(0.0) as usize).min(g.n_p - 2);
        let tx = (fx - i as f64).clamp(0.0, 1.0);
        let tp = (fp - j as f64).clamp(0.0, 1.0);
        let v = &self.values;
        Some(
            v[[i, j]] * ((1.0 - tx) * (1.0 - tp))
                + v[[i + 1, j]] * (tx * (1.0 - tp))
                + v[[i, j + 1]] * ((1.0 - tx) * tp)
                + v[[i + 1, j + 1]] * (tx * tp),
        )
    }

    /// Least-squares constant `c` minimising `|self - c*other|`.
    pub fn projection_coefficient(&self, other: &GridSymbol) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = 0.0;
        Zip::from(&self.values).and(&other.values).for_each(|a, b| {
            num += b.conj() * a;
            den += b.norm_sqr();
        });
        Ok(if den == 0.0 { Complex64::new(0.0, 0.0) } else { num / den })
    }
}

/// Free-function form of [`GridSymbol::norms`].
pub fn symbol_norms(f: &GridSymbol) -> SymbolNorms {
    f.norms()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(PhaseGrid::new(12, 16, 1.0, 1.0).is_err());
        assert!(PhaseGrid::new(4, 16, 1.0, 1.0).is_err());
        assert!(PhaseGrid::new(16, 16, 0.0, 1.0).is_err());
        let g = PhaseGrid::new(16, 32, 2.0, 3.0).unwrap();
        assert!((g.dx() * 16.0 - 4.0).abs() < 1e-15);
        assert!((g.dp() * 32.0 - 6.0).abs() < 1e-15);
        assert_eq!(g.x(8), 0.0);
        assert_eq!(g.p(16), 0.0);
    }

    #[test]
    fn aligned_grid_has_unit_shift_quanta() {
        for hbar in [0.5, 1.0, 2.0] {
            let g = PhaseGrid::aligned(128, hbar, 0.7).unwrap();
            let (sx, sp) = g.shift_quanta(hbar);
            assert!((sx - 1.0).abs() < 1e-12 && (sp - 1.0).abs() < 1e-12, "{sx} {sp}");
        }
    }

    #[test]
    fn ones_integrate_to_area() {
        for n in [8, 32, 128] {
            let g = PhaseGrid::square(n, 1.0).unwrap();
            let norms = GridSymbol::constant(g, c(1.0)).norms();
            assert!((norms.integral - c(4.0)).norm() < 1e-12);
            assert_eq!(norms.sup, 1.0);
        }
    }

    #[test]
    fn zero_symbol_norms() {
        let g = PhaseGrid::square(16, 3.0).unwrap();
        let n = symbol_norms(&GridSymbol::zeros(g));
        assert_eq!((n.l2, n.sup, n.integral), (0.0, 0.0, c(0.0)));
    }

    #[test]
    fn gaussian_integral_converges_to_pi() {
        // Refinement oracle: the uniform sum converges spectrally for a
        // Gaussian, so successive grids must agree with pi and each other.
        let mut last = 0.0;
        for n in [64, 128, 256] {
            let g = PhaseGrid::square(n, 8.0).unwrap();
            let f = GridSymbol::from_real_fn(g, |x, p| (-(x * x + p * p)).exp());
            let i = f.norms().integral;
            assert!((i.re - PI).abs() < 1e-8, "n={n}: {}", i.re);
            assert!(i.im.abs() <= 1e-14 * i.re);
            if n > 64 {
                assert!((i.re - last).abs() < 1e-10);
            }
            last = i.re;
        }
    }

    #[test]
    fn bilinear_is_exact_at_nodes_and_linear_functions() {
        let g = PhaseGrid::square(16, 2.0).unwrap();
        let f = GridSymbol::from_real_fn(g, |x, p| 3.0 * x - 2.0 * p + 1.0);
        assert_eq!(f.interpolate(g.x(3), g.p(5)).unwrap(), f.at(3, 5));
        let v = f.interpolate(0.123, -0.77).unwrap();
        assert!((v.re - (3.0 * 0.123 + 2.0 * 0.77 + 1.0)).abs() < 1e-12);
        assert!(f.interpolate(2.5, 0.0).is_none());
    }

    #[test]
    fn decay_check_reports_measured_ratio() {
        let g = PhaseGrid::square(32, 2.0).unwrap();
        let f = GridSymbol::from_real_fn(g, |x, p| (-(x * x + p * p) / 2.0).exp());
        match f.check_decay(1e-12) {
            Err(Error::BoundaryDecay { measured, .. }) => assert!(measured > 1e-3),
            other => panic!("expected decay error, got {other:?}"),
        }
    }

    #[test]
    fn interior_window_is_centred() {
        let g = PhaseGrid::square(64, 1.0).unwrap();
        let w = g.interior(0.5);
        assert_eq!((w.i0, w.i1, w.j0, w.j1), (16, 48, 16, 48));
    }
}
