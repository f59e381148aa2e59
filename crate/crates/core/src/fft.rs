//! Periodic FFT helpers on `N^n` grids, row-major for `n = 2`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|p| {
        let mut p = p.borrow_mut();
        if let Some(f) = p.1.get(&(len, inverse)) {
            return f.clone();
        }
        let f = if inverse { p.0.plan_fft_inverse(len) } else { p.0.plan_fft_forward(len) };
        p.1.insert((len, inverse), f.clone());
        f
    })
}

fn transform(data: &mut [Complex64], n: usize, side: usize, inverse: bool) {
    let f = plan(side, inverse);
    match n {
        1 => f.process(data),
        2 => {
            // rows are contiguous
            f.process(data);
            let mut col = vec![Complex64::new(0.0, 0.0); side];
            for c in 0..side {
                for r in 0..side {
                    col[r] = data[r * side + c];
                }
                f.process(&mut col);
                for r in 0..side {
                    data[r * side + c] = col[r];
                }
            }
        }
        _ => unreachable!("dimension must be 1 or 2"),
    }
}

/// Unnormalized forward DFT in place.
pub fn forward(data: &mut [Complex64], n: usize, side: usize) {
    transform(data, n, side, false);
}

/// Inverse DFT in place, normalized by `side^n`.
pub fn inverse(data: &mut [Complex64], n: usize, side: usize) {
    transform(data, n, side, true);
    let scale = 1.0 / (data.len() as f64);
    for v in data.iter_mut() {
        *v *= scale;
    }
}

/// Signed frequency of DFT index `i` on a grid of `side` points.
#[inline]
pub fn freq(i: usize, side: usize) -> i64 {
    if i < side / 2 {
        i as i64
    } else {
        i as i64 - side as i64
    }
}

/// Signed frequency vector of a flat index; the unused slot is 0 for `n = 1`.
#[inline]
pub fn freq_vec(idx: usize, n: usize, side: usize) -> [f64; 2] {
    if n == 1 {
        [freq(idx, side) as f64, 0.0]
    } else {
        [freq(idx / side, side) as f64, freq(idx % side, side) as f64]
    }
}

/// `|xi|` for every DFT index.
pub fn freq_radii(n: usize, side: usize) -> Vec<f64> {
    (0..side.pow(n as u32))
        .map(|i| {
            let k = freq_vec(i, n, side);
            (k[0] * k[0] + k[1] * k[1]).sqrt()
        })
        .collect()
}

/// Applies a Fourier multiplier: `F^{-1}[m * F[data]]`.
pub fn apply_multiplier(data: &[Complex64], n: usize, side: usize, mult: &[Complex64]) -> Vec<Complex64> {
    let mut buf = data.to_vec();
    forward(&mut buf, n, side);
    for (b, m) in buf.iter_mut().zip(mult) {
        *b *= *m;
    }
    inverse(&mut buf, n, side);
    buf
}

/// Periodic convolution `(a * b)[x] = sum_y a[y] b[x - y]` (no `h^n` factor).
pub fn cyclic_convolve(a: &[Complex64], b: &[Complex64], n: usize, side: usize) -> Vec<Complex64> {
    let mut fa = a.to_vec();
    let mut fb = b.to_vec();
    forward(&mut fa, n, side);
    forward(&mut fb, n, side);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= *y;
    }
    inverse(&mut fa, n, side);
    fa
}

/// Real-valued periodic convolution.
pub fn cyclic_convolve_real(a: &[f64], b: &[f64], n: usize, side: usize) -> Vec<f64> {
    let ca: Vec<Complex64> = a.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let cb: Vec<Complex64> = b.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    cyclic_convolve(&ca, &cb, n, side).into_iter().map(|c| c.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_2d() {
        let side = 8;
        let data: Vec<Complex64> = (0..64).map(|i| Complex64::new(i as f64, (i * i % 7) as f64)).collect();
        let mut buf = data.clone();
        forward(&mut buf, 2, side);
        inverse(&mut buf, 2, side);
        for (a, b) in data.iter().zip(&buf) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn single_mode_lands_on_its_bin() {
        let side = 16;
        let data: Vec<Complex64> = (0..side)
            .map(|i| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * 3.0 * i as f64 / side as f64))
            .collect();
        let mut buf = data;
        forward(&mut buf, 1, side);
        assert!((buf[3].re - side as f64).abs() < 1e-9);
        assert!(buf[5].norm() < 1e-9);
    }

    #[test]
    fn frequency_indexing() {
        assert_eq!(freq(0, 8), 0);
        assert_eq!(freq(3, 8), 3);
        assert_eq!(freq(4, 8), -4);
        assert_eq!(freq(7, 8), -1);
    }
}
