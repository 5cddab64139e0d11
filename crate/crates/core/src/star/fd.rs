//! Finite-difference derivatives of grid symbols.
//!
//! Centred Fornberg stencils in the interior and one-sided stencils of the
//! same formal order near an edge; no periodicity is assumed.

use ndarray::{Array2, Axis, Zip};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Weights `w_k` such that `f^(deriv)(z0) ~ sum_k w_k f(nodes[k])`.
pub fn fornberg_weights(z0: f64, nodes: &[f64], deriv: usize) -> Vec<f64> {
    let n = nodes.len();
    let m = deriv;
    // c[j][k]: weight of node j for the k-th derivative.
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Stencil radius giving formal accuracy `accuracy` for derivative `deriv`.
pub fn stencil_radius(deriv: usize, accuracy: usize) -> usize {
    if deriv == 0 {
        0
    } else {
        deriv.div_ceil(2) + accuracy / 2 - 1
    }
}

/// One-dimensional derivative operator on `n` uniform nodes with spacing `h`.
#[derive(Debug, Clone)]
pub struct Stencil1d {
    deriv: usize,
    width: usize,
    n: usize,
    /// Centred weights, already divided by `h^deriv`.
    centre: Vec<f64>,
    /// One-sided weights for the first `r` nodes; mirrored at the far edge.
    edge: Vec<Vec<f64>>,
}

impl Stencil1d {
    pub fn new(n: usize, h: f64, deriv: usize, accuracy: usize) -> Result<Self> {
        if accuracy < 2 || !accuracy.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("stencil accuracy must be even and >= 2, got {accuracy}")));
        }
        let r = stencil_radius(deriv, accuracy);
        let width = 2 * r + 1;
        if n < width {
            return Err(Error::Degenerate { required: width, n_x: n, n_p: n });
        }
        // Edge windows need `deriv + accuracy` nodes to keep the formal order;
        // for even derivatives that is one more than the centred stencil.
        let edge_width = width.max(deriv + accuracy);
        if n < edge_width {
            return Err(Error::Degenerate { required: edge_width, n_x: n, n_p: n });
        }
        let scale = h.powi(deriv as i32);
        let weights_at = |offset: usize, w: usize| -> Vec<f64> {
            let nodes: Vec<f64> = (0..w).map(|k| k as f64 - offset as f64).collect();
            fornberg_weights(0.0, &nodes, deriv).into_iter().map(|v| v / scale).collect()
        };
        let centre = weights_at(r, width);
        let edge = (0..r).map(|i| weights_at(i, edge_width)).collect();
        Ok(Self { deriv, width, n, centre, edge })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn apply(&self, input: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(input.len(), self.n);
        if self.deriv == 0 {
            out.copy_from_slice(input);
            return;
        }
        let r = self.width / 2;
        let n = self.n;
        let dot = |w: &[f64], src: &mut dyn Iterator<Item = Complex64>| {
            w.iter().zip(src).fold(Complex64::new(0.0, 0.0), |acc, (wk, v)| acc + v * *wk)
        };
        for i in r..n - r {
            out[i] = dot(&self.centre, &mut input[i - r..=i + r].iter().copied());
        }
        for (i, w) in self.edge.iter().enumerate() {
            let ew = w.len();
            out[i] = dot(w, &mut input[..ew].iter().copied());
            // Mirror: reversing the node order flips odd derivatives' sign.
            let sign = if self.deriv.is_multiple_of(2) { 1.0 } else { -1.0 };
            out[n - 1 - i] = dot(w, &mut input[n - ew..].iter().rev().copied()) * sign;
        }
    }
}

/// Derivative of order `deriv` along `axis` (0 = x, 1 = p).
pub fn derivative_along(
    values: &Array2<Complex64>,
    axis: usize,
    h: f64,
    deriv: usize,
    accuracy: usize,
) -> Result<Array2<Complex64>> {
    if deriv == 0 {
        return Ok(values.clone());
    }
    let n = values.len_of(Axis(axis));
    let st = Stencil1d::new(n, h, deriv, accuracy)?;
    let mut out = Array2::zeros(values.raw_dim());
    // Lanes run along `axis`; each is processed independently.
    Zip::from(out.lanes_mut(Axis(axis))).and(values.lanes(Axis(axis))).par_for_each(|mut o, v| {
        let input: Vec<Complex64> = v.iter().copied().collect();
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        st.apply(&input, &mut buf);
        o.iter_mut().zip(buf).for_each(|(a, b)| *a = b);
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_centred_weights() {
        let w = fornberg_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 1);
        let want = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
        let w2 = fornberg_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 2);
        let want2 = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w2.iter().zip(want2) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn exact_on_polynomials_including_edges() {
        // A stencil of formal order A is exact on polynomials of degree
        // deriv + A - 1, also on the one-sided edge windows.
        let n = 16;
        let h = 0.3;
        for deriv in 1..=4 {
            let st = Stencil1d::new(n, h, deriv, 4).unwrap();
            let deg = (deriv + 3) as i32;
            let xs: Vec<f64> = (0..n).map(|i| -2.0 + i as f64 * h).collect();
            let f: Vec<Complex64> = xs.iter().map(|x| Complex64::new(x.powi(deg), 0.0)).collect();
            let mut out = vec![Complex64::new(0.0, 0.0); n];
            st.apply(&f, &mut out);
            let falling: f64 = ((deg - deriv as i32 + 1)..=deg).map(|k| k as f64).product();
            for (x, o) in xs.iter().zip(&out) {
                let exact = falling * x.powi(deg - deriv as i32);
                assert!((o.re - exact).abs() < 1e-8 * (1.0 + exact.abs()), "d={deriv} x={x}: {} vs {exact}", o.re);
            }
        }
    }

    #[test]
    fn refinement_shows_fourth_order() {
        let err = |n: usize| {
            let h = 2.0 / n as f64;
            let v = Array2::from_shape_fn((n, 4), |(i, _)| Complex64::new((-1.0 + i as f64 * h).sin(), 0.0));
            let d = derivative_along(&v, 0, h, 1, 4).unwrap();
            (0..n).map(|i| (d[[i, 0]].re - (-1.0 + i as f64 * h).cos()).abs()).fold(0.0, f64::max)
        };
        let ratio = err(64) / err(128);
        assert!(ratio > 12.0, "ratio {ratio}");
    }

    #[test]
    fn too_few_nodes_is_degenerate() {
        assert!(matches!(Stencil1d::new(4, 0.1, 2, 4), Err(Error::Degenerate { .. })));
    }
}
