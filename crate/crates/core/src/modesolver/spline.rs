//! Not-a-knot cubic spline interpolation.
//!
//! Not-a-knot end conditions reproduce cubic polynomials exactly (a cubic
//! satisfies every spline condition including third-derivative continuity
//! at the second and second-to-last knots, and the interpolant is unique).

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// second derivatives at the knots
    m: Vec<f64>,
}

impl CubicSpline {
    /// Builds a not-a-knot cubic spline over strictly increasing knots.
    /// Requires at least 4 points.
    pub fn new(x: &[f64], y: &[f64]) -> Result<CubicSpline> {
        let n = x.len();
        if n != y.len() {
            return Err(Error::numeric("spline: x and y lengths differ"));
        }
        if n < 4 {
            return Err(Error::numeric(format!(
                "spline: need at least 4 points, got {n}"
            )));
        }
        for i in 1..n {
            if !(x[i] > x[i - 1]) {
                return Err(Error::numeric("spline: knots must be strictly increasing"));
            }
        }
        let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();

        // Solve for second derivatives m[0..n] with not-a-knot conditions:
        //   h1*m0 - (h0+h1)*m1 + h0*m2 = 0
        //   h_{n-2}*m_{n-1} - (h_{n-3}+h_{n-2})*m_{n-2} + h_{n-3}*m_{n-3} = 0
        // Interior rows i = 1..n-2:
        //   h_{i-1}/6 m_{i-1} + (h_{i-1}+h_i)/3 m_i + h_i/6 m_{i+1} = d_i
        // Eliminate m0 and m_{n-1} via the not-a-knot rows, solve the
        // reduced tridiagonal system for m1..m_{n-2} by the Thomas
        // algorithm, then back-substitute the end values.
        let d = |i: usize| (y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1];

        let nn = n - 2; // unknowns m[1..=n-2]
        let mut sub = vec![0.0; nn];
        let mut diag = vec![0.0; nn];
        let mut sup = vec![0.0; nn];
        let mut rhs = vec![0.0; nn];
        for (row, i) in (1..n - 1).enumerate() {
            sub[row] = h[i - 1] / 6.0;
            diag[row] = (h[i - 1] + h[i]) / 3.0;
            sup[row] = h[i] / 6.0;
            rhs[row] = d(i);
        }
        // m0 = ((h0+h1)m1 - h0 m2)/h1: fold into the first row
        {
            let c0 = (h[0] + h[1]) / h[1];
            let c1 = -h[0] / h[1];
            diag[0] += sub[0] * c0;
            if nn > 1 {
                sup[0] += sub[0] * c1;
            } else {
                diag[0] += sub[0] * c1; // n == 4 pathological; nn >= 2 for n >= 4
            }
            sub[0] = 0.0;
        }
        // m_{n-1} = ((h_{n-2}+h_{n-3})m_{n-2} - h_{n-2} m_{n-3})/h_{n-3}
        {
            let hl = h[n - 2];
            let hp = h[n - 3];
            let c0 = (hl + hp) / hp;
            let c1 = -hl / hp;
            diag[nn - 1] += sup[nn - 1] * c0;
            sub[nn - 1] += sup[nn - 1] * c1;
            sup[nn - 1] = 0.0;
        }

        // Thomas algorithm
        let mut c_star = vec![0.0; nn];
        let mut d_star = vec![0.0; nn];
        c_star[0] = sup[0] / diag[0];
        d_star[0] = rhs[0] / diag[0];
        for i in 1..nn {
            let denom = diag[i] - sub[i] * c_star[i - 1];
            c_star[i] = sup[i] / denom;
            d_star[i] = (rhs[i] - sub[i] * d_star[i - 1]) / denom;
        }
        let mut mi = vec![0.0; nn];
        mi[nn - 1] = d_star[nn - 1];
        for i in (0..nn - 1).rev() {
            mi[i] = d_star[i] - c_star[i] * mi[i + 1];
        }

        let mut m = vec![0.0; n];
        m[1..(nn + 1)].copy_from_slice(&mi);
        m[0] = ((h[0] + h[1]) * m[1] - h[0] * m[2]) / h[1];
        m[n - 1] = ((h[n - 2] + h[n - 3]) * m[n - 2] - h[n - 2] * m[n - 3]) / h[n - 3];

        Ok(CubicSpline {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    /// Evaluates the spline; exact at knots, error outside the range.
    pub fn eval(&self, xq: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if !(xq >= lo && xq <= hi) {
            return Err(Error::out_of_range("interpolation query", xq, lo, hi));
        }
        // locate interval by binary search
        let i = match self
            .x
            .binary_search_by(|v| v.partial_cmp(&xq).unwrap())
        {
            Ok(i) => {
                return Ok(self.y[i]); // exact at sample points
            }
            Err(i) => i - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - xq) / h;
        let b = (xq - self.x[i]) / h;
        Ok(a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reproduces_cubics_exactly() {
        let f = |x: f64| 2.0 - 3.0 * x + 0.5 * x * x + 0.25 * x * x * x;
        let x: Vec<f64> = (0..12).map(|i| -1.0 + 0.37 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&v| f(v)).collect();
        let s = CubicSpline::new(&x, &y).unwrap();
        for k in 0..110 {
            let xq = -1.0 + (x.last().unwrap() + 1.0) * (k as f64 / 110.0) - 0.0;
            if xq < x[0] || xq > *x.last().unwrap() {
                continue;
            }
            assert_relative_eq!(s.eval(xq).unwrap(), f(xq), max_relative = 1e-12);
        }
        // midpoint of an interior interval
        let mid = 0.5 * (x[4] + x[5]);
        assert_relative_eq!(s.eval(mid).unwrap(), f(mid), max_relative = 1e-12);
    }

    #[test]
    fn exact_at_sample_points() {
        let x: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&v| (v * 0.7).sin()).collect();
        let s = CubicSpline::new(&x, &y).unwrap();
        for i in 0..x.len() {
            assert_eq!(s.eval(x[i]).unwrap(), y[i]);
        }
    }

    #[test]
    fn out_of_range_query_errors() {
        let x: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let y = vec![0.0; 6];
        let s = CubicSpline::new(&x, &y).unwrap();
        assert!(s.eval(-0.001).is_err());
        assert!(s.eval(5.001).is_err());
    }

    #[test]
    fn smooth_function_accuracy() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 * 0.25).collect();
        let y: Vec<f64> = x.iter().map(|&v| v.sin()).collect();
        let s = CubicSpline::new(&x, &y).unwrap();
        let mut max_err: f64 = 0.0;
        for k in 0..1000 {
            let xq = 9.75 * k as f64 / 999.0;
            max_err = max_err.max((s.eval(xq).unwrap() - xq.sin()).abs());
        }
        assert!(max_err < 1e-4, "spline err {max_err}");
    }
}
