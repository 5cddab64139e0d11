//! Dense-matrix Weyl quantisation: an independent check on the star product.
//!
//! Conventions used throughout this module:
//!
//! * positions `q_i = -q_max + i dq`, `i < n_q`;
//! * momenta `p_k = k dp_q`, `k` in `[-n_q/2, n_q/2)`, with `dp_q = 2 pi hbar / (n_q dq)`;
//! * a matrix entry is the integral kernel times `dq`, so composing operators
//!   is a plain matrix product and the identity operator is the identity
//!   matrix.
//!
//! Kernel entries depend on `i - j` modulo `n_q`. Polynomial symbols keep the
//! periodic wrap (so `X` and the Fourier-basis `P` compose exactly); for grid
//! symbols entries with `|i - j| > n_q/2` are zero. The Wigner transform reads
//! offsets `|i - j| <= n_q/2` in steps of one node; entries whose midpoint
//! falls between rows are interpolated along the midpoint direction, so the
//! transform inverts the quantisation for symbols smooth in `x`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::Fft1d;
use crate::symbols::{GridSymbol, PhaseGrid, PhysContext, PolySymbol};

/// Largest supported matrix dimension.
pub const MAX_NQ: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionGrid {
    pub n_q: usize,
    pub q_max: f64,
}

impl PositionGrid {
    pub fn new(n_q: usize, q_max: f64) -> Result<Self> {
        if n_q < 8 || !n_q.is_power_of_two() || n_q > MAX_NQ {
            return Err(Error::InvalidGrid(format!("n_q = {n_q} must be a power of two in [8, {MAX_NQ}]")));
        }
        if !(q_max > 0.0 && q_max.is_finite()) {
            return Err(Error::InvalidGrid(format!("q_max = {q_max} must be positive")));
        }
        Ok(Self { n_q, q_max })
    }

    /// Position grid whose midpoints and momenta coincide with the nodes of
    /// `phase`: `dq = 2 dx` and `dp_q = dp`. Requires `pi hbar / (dx dp)` to be
    /// a power of two (true for every aligned phase grid, where it is `2 n`).
    pub fn matching(phase: &PhaseGrid, ctx: &PhysContext) -> Result<Self> {
        let ratio = PI * ctx.hbar / (phase.dx() * phase.dp());
        let n_q = ratio.round() as usize;
        if (ratio - n_q as f64).abs() > 1e-9 * ratio || !n_q.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "pi hbar / (dx dp) = {ratio} is not a power of two; no matching position grid"
            )));
        }
        Self::new(n_q, n_q as f64 * phase.dx())
    }

    pub fn dq(&self) -> f64 {
        2.0 * self.q_max / self.n_q as f64
    }

    pub fn q(&self, i: usize) -> f64 {
        -self.q_max + i as f64 * self.dq()
    }

    pub fn dp(&self, hbar: f64) -> f64 {
        2.0 * PI * hbar / (self.n_q as f64 * self.dq())
    }

    /// Momentum of FFT bin `k` (unsigned bin index).
    pub fn p_of_bin(&self, k: usize, hbar: f64) -> f64 {
        crate::spectral::signed_index(k, self.n_q) as f64 * self.dp(hbar)
    }

    /// Midpoint `(q_i + q_j)/2` for `i + j = s`.
    pub fn midpoint(&self, s: usize) -> f64 {
        -self.q_max + s as f64 * self.dq() / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub grid: PositionGrid,
    pub matrix: DMatrix<Complex64>,
}

impl OperatorMatrix {
    pub fn new(grid: PositionGrid, matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != grid.n_q || matrix.ncols() != grid.n_q {
            return Err(Error::InvalidGrid(format!(
                "matrix is {}x{}, grid has n_q = {}",
                matrix.nrows(),
                matrix.ncols(),
                grid.n_q
            )));
        }
        if matrix.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidParameter("non-finite operator entry".into()));
        }
        Ok(Self { grid, matrix })
    }

    pub fn identity(grid: PositionGrid) -> Self {
        Self { grid, matrix: DMatrix::identity(grid.n_q, grid.n_q) }
    }

    /// Rank-one projector `|v><v|` for a unit vector in the discrete inner product.
    pub fn projector(grid: PositionGrid, v: &DVector<Complex64>) -> Self {
        Self { grid, matrix: v * v.adjoint() }
    }

    pub fn compose(&self, other: &OperatorMatrix) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid: self.grid, matrix: &self.matrix * &other.matrix })
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// `sum |kappa|^2 dx dx'`, which equals the squared Frobenius norm.
    pub fn hilbert_schmidt_sq(&self) -> f64 {
        self.matrix.iter().map(|v| v.norm_sqr()).sum()
    }

    /// `max |A - A^dagger|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.grid.n_q;
        let mut d: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                d = d.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

/// Anything the oracle can quantise.
#[derive(Debug, Clone, Copy)]
pub enum Symbol<'a> {
    Poly(&'a PolySymbol),
    Grid(&'a GridSymbol),
}

impl<'a> From<&'a PolySymbol> for Symbol<'a> {
    fn from(p: &'a PolySymbol) -> Self {
        Symbol::Poly(p)
    }
}

impl<'a> From<&'a GridSymbol> for Symbol<'a> {
    fn from(g: &'a GridSymbol) -> Self {
        Symbol::Grid(g)
    }
}

/// Decay level below which a grid symbol is treated as zero off its grid.
const OFF_GRID_DECAY: f64 = 1e-12;

impl Symbol<'_> {
    fn evaluator(&self) -> Result<impl Fn(f64, f64) -> Result<Complex64> + Sync + '_> {
        let zero_outside = match self {
            Symbol::Grid(g) => g.boundary_ratio() <= OFF_GRID_DECAY,
            Symbol::Poly(_) => false,
        };
        let this = *self;
        Ok(move |x: f64, p: f64| match this {
            Symbol::Poly(f) => Ok(f.eval(x, p)),
            Symbol::Grid(g) => match g.interpolate(x, p) {
                Some(v) => Ok(v),
                None if zero_outside => Ok(Complex64::new(0.0, 0.0)),
                None => Err(Error::OutOfRange { x, p }),
            },
        })
    }
}

/// Weyl quantisation of a symbol on `qgrid`.
pub fn weyl_quantize<'a>(f: impl Into<Symbol<'a>>, qgrid: &PositionGrid, ctx: &PhysContext) -> Result<OperatorMatrix> {
    let f = f.into();
    let eval = f.evaluator()?;
    let n = qgrid.n_q;
    let fft = Fft1d::new(n);
    // kernels[s][d mod n] = (1/n) sum_k f(mid_s, p_k) e^{2 pi i k d / n}
    let kernels: Vec<Vec<Complex64>> = (0..2 * n - 1)
        .into_par_iter()
        .map(|s| -> Result<Vec<Complex64>> {
            let mid = qgrid.midpoint(s);
            let mut v = (0..n).map(|k| eval(mid, qgrid.p_of_bin(k, ctx.hbar))).collect::<Result<Vec<_>>>()?;
            let mut scratch = fft.scratch();
            fft.inverse(&mut v, &mut scratch);
            v.iter_mut().for_each(|c| *c /= n as f64);
            Ok(v)
        })
        .collect::<Result<_>>()?;
    // Offsets beyond half the ring are aliases of short offsets across the
    // periodic seam. Polynomial symbols keep them, which makes X and the
    // Fourier-basis P compose exactly; decaying symbols have no kernel there.
    let periodic = matches!(f, Symbol::Poly(_));
    let half = n / 2;
    let matrix = DMatrix::from_fn(n, n, |i, j| {
        if !periodic && i.abs_diff(j) > half {
            Complex64::new(0.0, 0.0)
        } else {
            kernels[i + j][(i + n - j) % n]
        }
    });
    OperatorMatrix::new(*qgrid, matrix)
}

/// Wigner transform of `a`, evaluated on the nodes of `target`.
pub fn wigner_transform(a: &OperatorMatrix, target: &PhaseGrid, ctx: &PhysContext) -> Result<GridSymbol> {
    let q = a.grid;
    let n = q.n_q;
    let dq = q.dq();
    let dp = q.dp(ctx.hbar);
    // Offsets |i - j| <= n/2 fix the position coverage; the offset step dq
    // fixes the momentum coverage.
    let x_cover = q.q_max / 2.0;
    let p_cover = n as f64 / 2.0 * dp;
    let tol = 1e-9;
    if target.x_max > x_cover * (1.0 + tol) {
        return Err(Error::Coverage { target: target.x_max, coverage: x_cover });
    }
    if target.p_max > p_cover * (1.0 + tol) {
        return Err(Error::Coverage { target: target.p_max, coverage: p_cover });
    }

    // Midpoint rows needed by the target, as fractional row indices s.
    let s_of = |x: f64| (x + q.q_max) / (dq / 2.0);
    let s_lo = s_of(-target.x_max).floor().max(0.0) as usize;
    let s_hi = (s_of(target.x_max).ceil() as usize + 1).min(2 * n - 2);
    let fft = Fft1d::new(n);
    let half = (n / 2) as i64;
    let interp = HalfStepInterpolator::new(MIDPOINT_INTERP_NODES);
    let rows: Vec<Vec<Complex64>> = (s_lo..=s_hi)
        .into_par_iter()
        .map(|s| {
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            for d in -half..half {
                // Entry (i, j) with i - j = d pairs <x - y/2| with |x + y/2>,
                // y = -d dq. Matrix entries exist only for s + d even; the
                // other parity is interpolated along the midpoint direction.
                let val = if (s as i64 + d).rem_euclid(2) == 0 {
                    diag_entry(a, s as i64, d)
                } else {
                    interp.between(s as i64 - 1, |t| diag_entry(a, t, d), d.unsigned_abs() as i64, 2 * n as i64 - 2 - d.abs())
                };
                v[d.rem_euclid(n as i64) as usize] = val * offset_taper(d, n);
            }
            let mut scratch = fft.scratch();
            fft.forward(&mut v, &mut scratch);
            v
        })
        .collect();
    let lattice = Array2::from_shape_fn((rows.len(), n), |(r, k)| rows[r][k]);

    let bin_of = |p: f64| p / dp;
    let mut out = Array2::<Complex64>::zeros((target.n_x, target.n_p));
    for i in 0..target.n_x {
        let fs = s_of(target.x(i)) - s_lo as f64;
        let r0 = (fs.floor().max(0.0) as usize).min(lattice.nrows() - 2);
        let tr = (fs - r0 as f64).clamp(0.0, 1.0);
        for j in 0..target.n_p {
            let fk = bin_of(target.p(j));
            let k0 = fk.floor();
            let tk = fk - k0;
            let k0u = (k0 as i64).rem_euclid(n as i64) as usize;
            let k1u = (k0u + 1) % n;
            let row = |r: usize| lattice[[r, k0u]] * (1.0 - tk) + lattice[[r, k1u]] * tk;
            out[[i, j]] = row(r0) * (1.0 - tr) + row(r0 + 1) * tr;
        }
    }
    GridSymbol::new(*target, out)
}

/// Smooth cutoff on the offset sum: one for `|d| <= n/8`, falling to zero at
/// `n/2` through a C-infinity step. Decayed kernels sit inside the flat part
/// and are untouched; for polynomial symbols it confines the seam of the
/// periodic `X` and `P` to the momentum edge instead of leaking into the
/// interior.
fn offset_taper(d: i64, n: usize) -> f64 {
    let flat = n as f64 / 8.0;
    let t = (d.unsigned_abs() as f64 - flat) / (n as f64 / 2.0 - flat);
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        b / (a + b)
    }
}

/// Nodes used to interpolate kernels half-way along the midpoint direction.
/// Exact for symbols polynomial in `x` up to degree `MIDPOINT_INTERP_NODES - 1`.
const MIDPOINT_INTERP_NODES: usize = 16;

/// Entry `(i, j)` with `i + j = s`, `i - j = d` (zero when off the matrix).
fn diag_entry(a: &OperatorMatrix, s: i64, d: i64) -> Complex64 {
    let n = a.grid.n_q as i64;
    let (i, j) = ((s + d) / 2, (s - d) / 2);
    if i < 0 || j < 0 || i >= n || j >= n {
        Complex64::new(0.0, 0.0)
    } else {
        a.matrix[(i as usize, j as usize)]
    }
}

/// Lagrange interpolation at the midpoint of two samples of a sequence with
/// step 2, using a window shifted inward near the ends.
struct HalfStepInterpolator {
    width: usize,
    /// `weights[o]`: window starting `o` samples before the left neighbour.
    weights: Vec<Vec<f64>>,
}

impl HalfStepInterpolator {
    fn new(width: usize) -> Self {
        let weights = (0..width)
            .map(|o| {
                let nodes: Vec<f64> = (0..width).map(|k| k as f64 - o as f64).collect();
                crate::star::fd::fornberg_weights(0.5, &nodes, 0)
            })
            .collect();
        Self { width, weights }
    }

    /// Value half-way between samples at `t` and `t + 2`; samples live at
    /// `first, first + 2, ..., last`.
    fn between(&self, t: i64, sample: impl Fn(i64) -> Complex64, first: i64, last: i64) -> Complex64 {
        let count = (last - first) / 2 + 1;
        let w = self.width as i64;
        if count < w {
            return Complex64::new(0.0, 0.0);
        }
        let left = (t - first).div_euclid(2);
        let start = (left - (w / 2 - 1)).clamp(0, count - w);
        let weights = &self.weights[(left - start) as usize];
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, wk) in weights.iter().enumerate() {
            acc += sample(first + 2 * (start + k as i64)) * *wk;
        }
        acc
    }
}

/// Star product through operator composition.
pub fn star_via_operators<'a, 'b>(
    f: impl Into<Symbol<'a>>,
    g: impl Into<Symbol<'b>>,
    qgrid: &PositionGrid,
    target: &PhaseGrid,
    ctx: &PhysContext,
) -> Result<GridSymbol> {
    let a = weyl_quantize(f, qgrid, ctx)?;
    let b = weyl_quantize(g, qgrid, ctx)?;
    wigner_transform(&a.compose(&b)?, target, ctx)
}

/// Lowest `count` eigenpairs of the quantised oscillator Hamiltonian
/// `(p^2 + Omega^2 x^2) / 2`, by dense Hermitian diagonalisation.
///
/// Each eigenvector is normalised in the discrete inner product and its
/// largest component is made real and positive.
pub fn sho_eigenstates(
    qgrid: &PositionGrid,
    ctx: &PhysContext,
    count: usize,
) -> Result<Vec<(f64, DVector<Complex64>)>> {
    let w2 = ctx.omega_cap * ctx.omega_cap;
    let h = PolySymbol::quadratic(0.5, 0.0, 0.5 * w2);
    let hm = weyl_quantize(&h, qgrid, ctx)?;
    // Symmetrise away rounding before the Hermitian solver.
    let herm = (&hm.matrix + hm.matrix.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    Ok(order
        .into_iter()
        .take(count)
        .map(|k| {
            let mut v: DVector<Complex64> = eig.eigenvectors.column(k).into_owned();
            let (imax, _) = v.iter().enumerate().fold((0, 0.0), |(bi, bm), (i, c)| {
                if c.norm() > bm {
                    (i, c.norm())
                } else {
                    (bi, bm)
                }
            });
            let phase = v[imax].conj() / v[imax].norm();
            v *= phase;
            let norm = v.norm();
            v /= Complex64::new(norm, 0.0);
            (eig.eigenvalues[k], v)
        })
        .collect())
}

/// Measured constant `c` in `W * W = c W` for the oracle projector symbols,
/// where `W` is the Wigner function of the `n`-th oscillator eigenstate
/// (the transform of the projector divided by `2 pi hbar`).
pub fn idempotency_constant(qgrid: &PositionGrid, target: &PhaseGrid, ctx: &PhysContext, n: usize) -> Result<Complex64> {
    let states = sho_eigenstates(qgrid, ctx, n + 1)?;
    let proj = OperatorMatrix::projector(*qgrid, &states[n].1);
    let scale = Complex64::new(1.0 / (2.0 * PI * ctx.hbar), 0.0);
    let w = wigner_transform(&proj, target, ctx)?.scale(scale);
    // Operator of W is the projector scaled by 1/(2 pi hbar).
    let wop = OperatorMatrix { grid: *qgrid, matrix: &proj.matrix * scale };
    let ww = wigner_transform(&wop.compose(&wop)?, target, ctx)?;
    ww.projection_coefficient(&w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PhysContext {
        PhysContext::new(1.0, 1.0).unwrap()
    }

    fn max_abs(m: &DMatrix<Complex64>) -> f64 {
        m.iter().fold(0.0, |a, v| a.max(v.norm()))
    }

    fn setup(n: usize) -> (PhaseGrid, PositionGrid) {
        let g = PhaseGrid::aligned(n, 1.0, 1.0).unwrap();
        let q = PositionGrid::matching(&g, &ctx()).unwrap();
        (g, q)
    }

    #[test]
    fn matching_grid_for_aligned_phase_grid() {
        let (g, q) = setup(64);
        assert_eq!(q.n_q, 128);
        assert!((q.dq() - 2.0 * g.dx()).abs() < 1e-14);
        assert!((q.dp(1.0) - g.dp()).abs() < 1e-14);
    }

    #[test]
    fn position_symbol_is_diagonal() {
        let q = PositionGrid::new(32, 3.0).unwrap();
        let a = weyl_quantize(&PolySymbol::x(), &q, &ctx()).unwrap();
        for i in 0..32 {
            for j in 0..32 {
                let want = if i == j { q.q(i) } else { 0.0 };
                assert!((a.matrix[(i, j)] - Complex64::new(want, 0.0)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn unit_symbol_is_identity() {
        let q = PositionGrid::new(32, 3.0).unwrap();
        let a = weyl_quantize(&PolySymbol::one(), &q, &ctx()).unwrap();
        let d = max_abs(&(&a.matrix - DMatrix::<Complex64>::identity(32, 32)));
        assert!(d < 1e-14);
    }

    #[test]
    fn xp_is_symmetrised_product() {
        let q = PositionGrid::new(64, 4.0).unwrap();
        let cx = ctx();
        let xm = weyl_quantize(&PolySymbol::x(), &q, &cx).unwrap().matrix;
        // Momentum operator built directly from the discrete Fourier basis.
        let n = q.n_q;
        let pm = DMatrix::from_fn(n, n, |i, j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                let ph = 2.0 * PI * (k as f64) * (i as f64 - j as f64) / n as f64;
                acc += Complex64::new(0.0, ph).exp() * q.p_of_bin(k, cx.hbar);
            }
            acc / n as f64
        });
        let want = (&xm * &pm + &pm * &xm) * Complex64::new(0.5, 0.0);
        let got = weyl_quantize(&PolySymbol::monomial(1, 1, 1.0), &q, &cx).unwrap().matrix;
        let err = max_abs(&(&got - &want)) / max_abs(&want);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn identity_transforms_to_one() {
        let (g, q) = setup(32);
        let w = wigner_transform(&OperatorMatrix::identity(q), &g, &ctx()).unwrap();
        let one = GridSymbol::constant(g, Complex64::new(1.0, 0.0));
        assert!(w.max_abs_diff_in(&one, &g.full()).unwrap() < 1e-12);
    }

    #[test]
    fn round_trip_of_gaussian() {
        let (g, q) = setup(128);
        let f = GridSymbol::from_fn(g, |x, p| {
            Complex64::new((-(x * x + p * p) / 1.5).exp(), 0.3 * x * (-(x * x + p * p) / 1.5).exp())
        });
        let back = wigner_transform(&weyl_quantize(&f, &q, &ctx()).unwrap(), &g, &ctx()).unwrap();
        let w = g.interior(0.5);
        let e = back.rel_diff_in(&f, &w).unwrap();
        assert!(e < 1e-8, "{e}");
    }

    #[test]
    fn coverage_violation() {
        let q = PositionGrid::new(32, 2.0).unwrap();
        let g = PhaseGrid::square(16, 4.0).unwrap();
        let err = wigner_transform(&OperatorMatrix::identity(q), &g, &ctx()).unwrap_err();
        assert!(matches!(err, Error::Coverage { .. }));
    }

    #[test]
    fn non_decayed_grid_symbol_out_of_range() {
        let (g, q) = setup(32);
        let f = GridSymbol::constant(g, Complex64::new(1.0, 0.0));
        assert!(matches!(weyl_quantize(&f, &q, &ctx()), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn real_symbol_gives_hermitian_matrix_and_hs_identity() {
        let (g, q) = setup(128);
        let cx = ctx();
        let f = GridSymbol::from_real_fn(g, |x, p| (-(x - 0.4).powi(2) - 0.7 * p * p).exp() * (1.0 + x * p));
        let a = weyl_quantize(&f, &q, &cx).unwrap();
        assert!(a.hermiticity_defect() <= 1e-10 * a.max_abs());
        let n = f.norms();
        let hs_phase = n.l2 * n.l2 / (2.0 * PI * cx.hbar);
        let e = (a.hilbert_schmidt_sq() - hs_phase).abs() / hs_phase;
        assert!(e < 1e-4, "{e} {} {hs_phase}", a.hilbert_schmidt_sq());
        let tr = a.trace();
        let want = n.integral / (2.0 * PI * cx.hbar);
        assert!((tr - want).norm() / want.norm() < 1e-4);
    }

    #[test]
    fn ground_state_projector_is_gaussian() {
        let (g, q) = setup(64);
        let cx = ctx();
        let states = sho_eigenstates(&q, &cx, 1).unwrap();
        assert!((states[0].0 - 0.5).abs() < 1e-10);
        let w = wigner_transform(&OperatorMatrix::projector(q, &states[0].1), &g, &cx).unwrap();
        // 2 pi hbar W_0 = 2 e^{-(x^2 + p^2)/hbar}.
        let want = GridSymbol::from_real_fn(g, |x, p| 2.0 * (-(x * x + p * p)).exp());
        assert!(w.rel_diff_in(&want, &g.interior(0.5)).unwrap() < 1e-5);
    }

    #[test]
    fn canonical_pair_through_operators() {
        let cx = PhysContext::new(0.8, 1.0).unwrap();
        let g = PhaseGrid::aligned(64, cx.hbar, 1.0).unwrap();
        let q = PositionGrid::matching(&g, &cx).unwrap();
        let got = star_via_operators(&PolySymbol::x(), &PolySymbol::p(), &q, &g, &cx).unwrap();
        let want = GridSymbol::from_fn(g, |x, p| Complex64::new(x * p, cx.hbar / 2.0));
        let e = got.rel_diff_in(&want, &g.interior(0.5)).unwrap();
        assert!(e < 1e-5, "{e}");
    }

    #[test]
    fn ground_state_idempotency_through_operators() {
        let (g, q) = setup(128);
        let cx = ctx();
        let w0 = GridSymbol::from_real_fn(g, |x, p| (-(x * x + p * p)).exp() / PI);
        let got = star_via_operators(&w0, &w0, &q, &g, &cx).unwrap();
        let want = w0.scale(Complex64::new(1.0 / (2.0 * PI), 0.0));
        let e = got.rel_diff_in(&want, &g.interior(0.5)).unwrap();
        assert!(e < 1e-4, "{e}");
        let c = idempotency_constant(&q, &g, &cx, 0).unwrap();
        assert!((c - Complex64::new(1.0 / (2.0 * PI), 0.0)).norm() * 2.0 * PI < 1e-6, "{c}");
    }

    #[test]
    fn grid_star_product_matches_operator_product() {
        // Non-commuting factors: this fixes the orientation of the twisted
        // convolution against composition of operators.
        let (g, q) = setup(128);
        let cx = ctx();
        let f = GridSymbol::from_fn(g, |x, p| Complex64::new(x, 0.5 * p * p) * (-(x * x + p * p) / 1.2).exp());
        let h = GridSymbol::from_fn(g, |x, p| Complex64::new(p - 0.3 * x * p, x) * (-((x - 0.5).powi(2) + p * p) / 1.1).exp());
        let want = star_via_operators(&f, &h, &q, &g, &cx).unwrap();
        let got = crate::star::star_grid(&f, &h, &cx).unwrap();
        let e = got.rel_diff_in(&want, &g.interior(0.5)).unwrap();
        assert!(e < 1e-6, "{e}");
    }
}
