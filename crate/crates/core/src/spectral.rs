//! Small FFT helpers over `ndarray` storage.

use std::sync::Arc;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

fn plan(n: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    match dir {
        Direction::Forward => planner.plan_fft_forward(n),
        Direction::Inverse => planner.plan_fft_inverse(n),
    }
}

/// Unnormalised in-place transform of every lane along `axis`.
pub fn fft_axis(a: &mut Array2<Complex64>, axis: usize, dir: Direction) {
    let n = a.len_of(Axis(axis));
    let fft = plan(n, dir);
    if axis == 1 && a.is_standard_layout() {
        let data = a.as_slice_mut().expect("standard layout");
        data.par_chunks_mut(n).for_each_init(
            || vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
            |scratch, row| fft.process_with_scratch(row, scratch),
        );
        return;
    }
    let mut lanes: Vec<Vec<Complex64>> = a.lanes(Axis(axis)).into_iter().map(|l| l.to_vec()).collect();
    lanes.par_iter_mut().for_each_init(
        || vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
        |scratch, lane| fft.process_with_scratch(lane, scratch),
    );
    for (mut dst, src) in a.lanes_mut(Axis(axis)).into_iter().zip(lanes) {
        dst.iter_mut().zip(src).for_each(|(d, s)| *d = s);
    }
}

/// Unnormalised 2-D transform.
pub fn fft2(a: &mut Array2<Complex64>, dir: Direction) {
    fft_axis(a, 1, dir);
    fft_axis(a, 0, dir);
}

/// Signed frequency index of FFT bin `k` out of `n`: `[-n/2, n/2)`.
pub fn signed_index(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// In-place transform of a single vector.
pub fn fft_vec(v: &mut [Complex64], dir: Direction) {
    plan(v.len(), dir).process(v);
}

/// Reusable plan pair for repeated 1-D transforms of one length.
#[derive(Clone)]
pub struct Fft1d {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft1d {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn scratch(&self) -> Vec<Complex64> {
        let len = self.fwd.get_inplace_scratch_len().max(self.inv.get_inplace_scratch_len());
        vec![Complex64::new(0.0, 0.0); len]
    }

    pub fn forward(&self, v: &mut [Complex64], scratch: &mut [Complex64]) {
        self.fwd.process_with_scratch(v, scratch);
    }

    pub fn inverse(&self, v: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inv.process_with_scratch(v, scratch);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft2_round_trip() {
        let a0 = Array2::from_shape_fn((8, 16), |(i, j)| Complex64::new(i as f64 - 0.3 * j as f64, (i * j) as f64));
        let mut a = a0.clone();
        fft2(&mut a, Direction::Forward);
        fft2(&mut a, Direction::Inverse);
        a.mapv_inplace(|v| v / 128.0);
        for (x, y) in a.iter().zip(a0.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn fft2_of_plane_wave_is_a_spike() {
        let (m, n) = (8, 16);
        let mut a = Array2::from_shape_fn((m, n), |(i, j)| {
            let ph = 2.0 * std::f64::consts::PI * (3.0 * i as f64 / m as f64 - 2.0 * j as f64 / n as f64);
            Complex64::new(ph.cos(), ph.sin())
        });
        fft2(&mut a, Direction::Forward);
        for ((i, j), v) in a.indexed_iter() {
            let expect = if (i, j) == (3, n - 2) { (m * n) as f64 } else { 0.0 };
            assert!((v.norm() - expect).abs() < 1e-9);
        }
        assert_eq!(signed_index(n - 2, n), -2);
    }
}
