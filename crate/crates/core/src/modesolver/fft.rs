//! Fast DCT-II / inverse pair and the constant-coefficient preconditioner.
//!
//! The semivectorial operator's shifted system (σI − A) is preconditioned
//! by the constant-coefficient surrogate σ − L_N − k₀²ε̄, where L_N is the
//! five-point Laplacian with zero-flux edges. That operator is diagonal in
//! the DCT-II basis cos(πp(2i+1)/(2M)), so one forward/inverse 2-D DCT
//! pair plus a pointwise divide applies its exact inverse. Two real
//! sequences are packed into each complex FFT.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Unnormalized DCT-II and its exact inverse via length-N complex FFTs.
pub struct Dct1d {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    twiddle: Vec<Complex64>,
    buf: Vec<Complex64>,
}

impl Dct1d {
    pub fn new(n: usize) -> Dct1d {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let twiddle = (0..n)
            .map(|k| {
                Complex64::from_polar(1.0, -std::f64::consts::PI * k as f64 / (2.0 * n as f64))
            })
            .collect();
        Dct1d {
            n,
            fwd,
            inv,
            twiddle,
            buf: vec![Complex64::default(); n],
        }
    }

    /// X[k] = Σ x[n] cos(π(2n+1)k / 2N), in place.
    pub fn forward(&mut self, x: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(x.len(), n);
        let half = n.div_ceil(2);
        for i in 0..half {
            self.buf[i] = Complex64::new(x[2 * i], 0.0);
        }
        for i in 0..n / 2 {
            self.buf[n - 1 - i] = Complex64::new(x[2 * i + 1], 0.0);
        }
        self.fwd.process(&mut self.buf);
        for k in 0..n {
            x[k] = (self.twiddle[k] * self.buf[k]).re;
        }
    }

    /// Forward transform of two sequences packed into one complex FFT.
    pub fn forward_pair(&mut self, x: &mut [f64], y: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(y.len(), n);
        let half = n.div_ceil(2);
        for i in 0..half {
            self.buf[i] = Complex64::new(x[2 * i], y[2 * i]);
        }
        for i in 0..n / 2 {
            self.buf[n - 1 - i] = Complex64::new(x[2 * i + 1], y[2 * i + 1]);
        }
        self.fwd.process(&mut self.buf);
        // split the packed spectra: Vx[k] = (V[k] + conj(V[n-k]))/2,
        // Vy[k] = -i (V[k] - conj(V[n-k]))/2
        x[0] = self.buf[0].re;
        y[0] = self.buf[0].im;
        for k in 1..n {
            let a = self.buf[k];
            let b = self.buf[n - k].conj();
            let vx = 0.5 * (a + b);
            let vy = Complex64::new(0.0, -0.5) * (a - b);
            x[k] = (self.twiddle[k] * vx).re;
            y[k] = (self.twiddle[k] * vy).re;
        }
    }

    /// Exact inverse of [`Self::forward`], in place.
    pub fn inverse(&mut self, x: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(x.len(), n);
        self.buf[0] = Complex64::new(x[0], 0.0);
        for k in 1..n {
            let a = Complex64::new(x[k], -x[n - k]);
            self.buf[k] = a * self.twiddle[k].conj();
        }
        self.inv.process(&mut self.buf);
        let scale = 1.0 / n as f64;
        let half = n.div_ceil(2);
        for i in 0..half {
            x[2 * i] = self.buf[i].re * scale;
        }
        for i in 0..n / 2 {
            x[2 * i + 1] = self.buf[n - 1 - i].re * scale;
        }
    }

    /// Inverse transform of two spectra packed into one complex IFFT.
    ///
    /// Pack V = Vx + i·Vy; both reconstructions are linear, and the
    /// forward reorder/twiddle relations keep the real/imag parts
    /// separated exactly as in the single-sequence path.
    pub fn inverse_pair(&mut self, x: &mut [f64], y: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(y.len(), n);
        self.buf[0] = Complex64::new(x[0], y[0]);
        for k in 1..n {
            // A_x[k] = x[k] - i x[n-k];  A_y[k] = y[k] - i y[n-k]
            // pack: A_x[k] + i A_y[k], then undo the forward twiddle
            let a = Complex64::new(x[k] + y[n - k], y[k] - x[n - k]);
            self.buf[k] = a * self.twiddle[k].conj();
        }
        self.inv.process(&mut self.buf);
        let scale = 1.0 / n as f64;
        let half = n.div_ceil(2);
        for i in 0..half {
            x[2 * i] = self.buf[i].re * scale;
            y[2 * i] = self.buf[i].im * scale;
        }
        for i in 0..n / 2 {
            x[2 * i + 1] = self.buf[n - 1 - i].re * scale;
            y[2 * i + 1] = self.buf[n - 1 - i].im * scale;
        }
    }
}

/// Inverse of σ − L_N − k₀²ε̄ on an M×M zero-flux grid (row-major).
pub struct Precond2d {
    m: usize,
    dct: Dct1d,
    lam: Vec<f64>,
    /// reciprocal eigenvalues, row-major over (p, q)
    inv_eig: Vec<f64>,
    cols: Vec<f64>,
}

impl Precond2d {
    /// `shift0` is σ − k₀²ε̄; `h` the grid spacing.
    pub fn new(m: usize, h: f64, shift0: f64) -> Precond2d {
        let lam: Vec<f64> = (0..m)
            .map(|p| (2.0 - 2.0 * (std::f64::consts::PI * p as f64 / m as f64).cos()) / (h * h))
            .collect();
        let mut pre = Precond2d {
            m,
            dct: Dct1d::new(m),
            lam,
            inv_eig: vec![0.0; m * m],
            cols: vec![0.0; 2 * m],
        };
        pre.set_shift(shift0);
        pre
    }

    /// Re-targets the constant shift without re-planning the transforms.
    pub fn set_shift(&mut self, shift0: f64) {
        let m = self.m;
        for p in 0..m {
            for q in 0..m {
                self.inv_eig[p * m + q] = 1.0 / (shift0 + self.lam[p] + self.lam[q]);
            }
        }
    }

    /// z ← (σ − L_N − k₀²ε̄)⁻¹ r
    pub fn apply(&mut self, r: &[f64], z: &mut [f64]) {
        let m = self.m;
        z.copy_from_slice(r);
        // rows, in packed pairs
        {
            let mut rows = z.chunks_exact_mut(m);
            loop {
                match (rows.next(), rows.next()) {
                    (Some(a), Some(b)) => self.dct.forward_pair(a, b),
                    (Some(a), None) => {
                        self.dct.forward(a);
                        break;
                    }
                    _ => break,
                }
            }
        }
        // columns, packed in pairs, with the eigenvalue divide fused in
        let (cols_a, cols_b) = self.cols.split_at_mut(m);
        let mut j = 0;
        while j < m {
            if j + 1 < m {
                for i in 0..m {
                    cols_a[i] = z[i * m + j];
                    cols_b[i] = z[i * m + j + 1];
                }
                self.dct.forward_pair(cols_a, cols_b);
                for i in 0..m {
                    cols_a[i] *= self.inv_eig[i * m + j];
                    cols_b[i] *= self.inv_eig[i * m + j + 1];
                }
                self.dct.inverse_pair(cols_a, cols_b);
                for i in 0..m {
                    z[i * m + j] = cols_a[i];
                    z[i * m + j + 1] = cols_b[i];
                }
                j += 2;
            } else {
                for i in 0..m {
                    cols_a[i] = z[i * m + j];
                }
                self.dct.forward(cols_a);
                for i in 0..m {
                    cols_a[i] *= self.inv_eig[i * m + j];
                }
                self.dct.inverse(cols_a);
                for i in 0..m {
                    z[i * m + j] = cols_a[i];
                }
                j += 1;
            }
        }
        // rows back
        {
            let mut rows = z.chunks_exact_mut(m);
            loop {
                match (rows.next(), rows.next()) {
                    (Some(a), Some(b)) => self.dct.inverse_pair(a, b),
                    (Some(a), None) => {
                        self.dct.inverse(a);
                        break;
                    }
                    _ => break,
                }
            }
        }
    }
}

/// Smallest 5-smooth integer ≥ n (FFT-friendly transform lengths).
pub fn next_smooth(n: usize) -> usize {
    let mut v = n.max(2);
    loop {
        let mut r = v;
        for p in [2usize, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return v;
        }
        v += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dct2(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|i| {
                        x[i]
                            * (std::f64::consts::PI * (2 * i + 1) as f64 * k as f64
                                / (2.0 * n as f64))
                                .cos()
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn dct_matches_naive_and_inverts() {
        for n in [2usize, 3, 4, 5, 8, 17, 32] {
            let x: Vec<f64> = (0..n).map(|i| ((i * 37 + 11) % 23) as f64 * 0.1 - 1.0).collect();
            let mut fast = x.clone();
            let mut dct = Dct1d::new(n);
            dct.forward(&mut fast);
            let naive = naive_dct2(&x);
            for k in 0..n {
                assert!(
                    (fast[k] - naive[k]).abs() < 1e-10,
                    "n={n} k={k}: {} vs {}",
                    fast[k],
                    naive[k]
                );
            }
            dct.inverse(&mut fast);
            for i in 0..n {
                assert!((fast[i] - x[i]).abs() < 1e-12, "inverse mismatch at {i}");
            }
        }
    }

    #[test]
    fn packed_pair_matches_single() {
        for n in [4usize, 9, 16, 25] {
            let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let y: Vec<f64> = (0..n).map(|i| (i as f64 * 0.71).cos() - 0.2).collect();
            let mut dct = Dct1d::new(n);
            let (mut xs, mut ys) = (x.clone(), y.clone());
            dct.forward(&mut xs);
            dct.forward(&mut ys);
            let (mut xp, mut yp) = (x.clone(), y.clone());
            dct.forward_pair(&mut xp, &mut yp);
            for i in 0..n {
                assert!((xs[i] - xp[i]).abs() < 1e-10, "fwd pair x mismatch at {i}");
                assert!((ys[i] - yp[i]).abs() < 1e-10, "fwd pair y mismatch at {i}");
            }
            dct.inverse_pair(&mut xp, &mut yp);
            for i in 0..n {
                assert!((xp[i] - x[i]).abs() < 1e-12, "inv pair x mismatch at {i}");
                assert!((yp[i] - y[i]).abs() < 1e-12, "inv pair y mismatch at {i}");
            }
        }
    }

    #[test]
    fn preconditioner_solves_constant_coefficient_system() {
        // verify M^{-1} M = I against a direct stencil application
        let m = 24;
        let h = 0.1;
        let shift0 = 3.0;
        let mut pre = Precond2d::new(m, h, shift0);
        let x: Vec<f64> = (0..m * m).map(|i| ((i * 29 + 7) % 41) as f64 * 0.05).collect();
        let mut r = vec![0.0; m * m];
        let ih2 = 1.0 / (h * h);
        for i in 0..m {
            for j in 0..m {
                let c = x[i * m + j];
                let mut acc = shift0 * c;
                if i > 0 {
                    acc -= ih2 * (x[(i - 1) * m + j] - c);
                }
                if i + 1 < m {
                    acc -= ih2 * (x[(i + 1) * m + j] - c);
                }
                if j > 0 {
                    acc -= ih2 * (x[i * m + j - 1] - c);
                }
                if j + 1 < m {
                    acc -= ih2 * (x[i * m + j + 1] - c);
                }
                r[i * m + j] = acc;
            }
        }
        let mut z = vec![0.0; m * m];
        pre.apply(&r, &mut z);
        for i in 0..m * m {
            assert!((z[i] - x[i]).abs() < 1e-9, "at {i}: {} vs {}", z[i], x[i]);
        }
    }

    #[test]
    fn next_smooth_values() {
        assert_eq!(next_smooth(95), 96);
        assert_eq!(next_smooth(96), 96);
        assert_eq!(next_smooth(97), 100);
        assert_eq!(next_smooth(121), 125);
        assert_eq!(next_smooth(2), 2);
    }
}
