//! Bessel functions J0, J1, K0, K1 for the step-index characteristic
//! equation, via the Abramowitz & Stegun rational approximations
//! (§9.4, §9.8). Absolute accuracy ~1e-7, ample for bracketed root
//! finding on the dispersion function.

pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 8.0 {
        let y = x * x;
        let p1 = 57568490574.0 + y * (-13362590354.0 + y * (651619640.7
            + y * (-11214424.18 + y * (77392.33017 + y * -184.9052456))));
        let p2 = 57568490411.0 + y * (1029532985.0 + y * (9494680.718
            + y * (59272.64853 + y * (267.8532712 + y))));
        p1 / p2
    } else {
        let z = 8.0 / ax;
        let y = z * z;
        let xx = ax - 0.785398164;
        let p1 = 1.0 + y * (-0.1098628627e-2 + y * (0.2734510407e-4
            + y * (-0.2073370639e-5 + y * 0.2093887211e-6)));
        let p2 = -0.1562499995e-1 + y * (0.1430488765e-3 + y * (-0.6911147651e-5
            + y * (0.7621095161e-6 + y * -0.934935152e-7)));
        (0.636619772 / ax).sqrt() * (xx.cos() * p1 - z * xx.sin() * p2)
    }
}

pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 8.0 {
        let y = x * x;
        let p1 = x * (72362614232.0 + y * (-7895059235.0 + y * (242396853.1
            + y * (-2972611.439 + y * (15704.48260 + y * -30.16036606)))));
        let p2 = 144725228442.0 + y * (2300535178.0 + y * (18583304.74
            + y * (99447.43394 + y * (376.9991397 + y))));
        p1 / p2
    } else {
        let z = 8.0 / ax;
        let y = z * z;
        let xx = ax - 2.356194491;
        let p1 = 1.0 + y * (0.183105e-2 + y * (-0.3516396496e-4
            + y * (0.2457520174e-5 + y * -0.240337019e-6)));
        let p2 = 0.04687499995 + y * (-0.2002690873e-3 + y * (0.8449199096e-5
            + y * (-0.88228987e-6 + y * 0.105787412e-6)));
        let ans = (0.636619772 / ax).sqrt() * (xx.cos() * p1 - z * xx.sin() * p2);
        if x < 0.0 {
            -ans
        } else {
            ans
        }
    }
}

fn bessel_i0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 3.75 {
        let y = (x / 3.75) * (x / 3.75);
        1.0 + y * (3.5156229 + y * (3.0899424 + y * (1.2067492
            + y * (0.2659732 + y * (0.360768e-1 + y * 0.45813e-2)))))
    } else {
        let y = 3.75 / ax;
        (ax.exp() / ax.sqrt())
            * (0.39894228 + y * (0.1328592e-1 + y * (0.225319e-2 + y * (-0.157565e-2
                + y * (0.916281e-2 + y * (-0.2057706e-1 + y * (0.2635537e-1
                + y * (-0.1647633e-1 + y * 0.392377e-2))))))))
    }
}

fn bessel_i1(x: f64) -> f64 {
    let ax = x.abs();
    let ans = if ax < 3.75 {
        let y = (x / 3.75) * (x / 3.75);
        ax * (0.5 + y * (0.87890594 + y * (0.51498869 + y * (0.15084934
            + y * (0.2658733e-1 + y * (0.301532e-2 + y * 0.32411e-3))))))
    } else {
        let y = 3.75 / ax;
        let a = 0.2282967e-1 + y * (-0.2895312e-1 + y * (0.1787654e-1 + y * -0.420059e-2));
        let b = 0.39894228 + y * (-0.3988024e-1 + y * (-0.362018e-2
            + y * (0.163801e-2 + y * (-0.1031555e-1 + y * a))));
        (ax.exp() / ax.sqrt()) * b
    };
    if x < 0.0 {
        -ans
    } else {
        ans
    }
}

pub fn bessel_k0(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x <= 2.0 {
        let y = x * x / 4.0;
        -(x / 2.0).ln() * bessel_i0(x)
            + (-0.57721566 + y * (0.42278420 + y * (0.23069756 + y * (0.3488590e-1
                + y * (0.262698e-2 + y * (0.10750e-3 + y * 0.74e-5))))))
    } else {
        let y = 2.0 / x;
        ((-x).exp() / x.sqrt())
            * (1.25331414 + y * (-0.7832358e-1 + y * (0.2189568e-1 + y * (-0.1062446e-1
                + y * (0.587872e-2 + y * (-0.251540e-2 + y * 0.53208e-3))))))
    }
}

pub fn bessel_k1(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x <= 2.0 {
        let y = x * x / 4.0;
        (x / 2.0).ln() * bessel_i1(x)
            + (1.0 / x)
                * (1.0 + y * (0.15443144 + y * (-0.67278579 + y * (-0.18156897
                    + y * (-0.1919402e-1 + y * (-0.110404e-2 + y * -0.4686e-4))))))
    } else {
        let y = 2.0 / x;
        ((-x).exp() / x.sqrt())
            * (1.25331414 + y * (0.23498619 + y * (-0.3655620e-1 + y * (0.1504268e-1
                + y * (-0.780353e-2 + y * (0.325614e-2 + y * -0.68245e-3))))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // reference values from standard tables
    #[test]
    fn j0_reference() {
        assert!((bessel_j0(0.0) - 1.0).abs() < 1e-7);
        assert!((bessel_j0(1.0) - 0.7651976866).abs() < 1e-7);
        assert!(bessel_j0(2.404825557695773).abs() < 1e-7);
        assert!((bessel_j0(10.0) + 0.2459357645).abs() < 1e-6);
    }

    #[test]
    fn j1_reference() {
        assert!(bessel_j1(0.0).abs() < 1e-12);
        assert!((bessel_j1(1.0) - 0.4400505857).abs() < 1e-7);
        assert!(bessel_j1(3.831705970207512).abs() < 1e-7);
        assert!((bessel_j1(-1.0) + 0.4400505857).abs() < 1e-7);
    }

    #[test]
    fn k0_k1_reference() {
        assert!((bessel_k0(1.0) - 0.4210244382).abs() < 1e-7);
        assert!((bessel_k0(2.5) - 0.0623475532).abs() < 1e-7);
        assert!((bessel_k1(1.0) - 0.6019072302).abs() < 1e-7);
        assert!((bessel_k1(2.5) - 0.0738908163).abs() < 1e-7);
    }

    #[test]
    fn k_functions_decay() {
        assert!(bessel_k0(5.0) < bessel_k0(2.0));
        assert!(bessel_k1(5.0) < bessel_k1(2.0));
        assert!(bessel_k0(20.0) > 0.0);
    }
}
