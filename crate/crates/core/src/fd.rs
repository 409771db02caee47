//! Central finite differences for scalar functions of one variable.

use crate::error::{Error, Result};

/// Central-difference estimate of the first or second derivative of `f` at `x`.
pub fn fd_derivative(f: impl Fn(f64) -> f64, x: f64, order: u8) -> Result<f64> {
    let scale = x.abs().max(1.0);
    let (h, est) = match order {
        1 => {
            let h = f64::EPSILON.cbrt() * scale;
            let (a, b) = (f(x + h), f(x - h));
            (h, (a - b) / (2.0 * h))
        }
        2 => {
            let h = f64::EPSILON.powf(0.25) * scale;
            let (a, b, c) = (f(x + h), f(x), f(x - h));
            (h, (a - 2.0 * b + c) / (h * h))
        }
        _ => {
            return Err(Error::OrderUnsupported {
                requested: order as usize,
                max: 2,
            })
        }
    };
    if !est.is_finite() {
        return Err(Error::NonFinite(format!("difference quotient at x = {x}, h = {h:e}")));
    }
    Ok(est)
}

/// Central first difference with an explicit step.
pub fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Central first difference with one level of Richardson extrapolation.
pub fn central_richardson(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d1 = central(&f, x, h);
    let d2 = central(&f, x, h / 2.0);
    (4.0 * d2 - d1) / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_slope_at_zero() {
        assert!((fd_derivative(f64::sin, 0.0, 1).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_has_zero_derivatives() {
        for x in [-3.0, 0.0, 7.5] {
            assert!(fd_derivative(|_| 4.2, x, 1).unwrap().abs() < 1e-12);
            assert!(fd_derivative(|_| 4.2, x, 2).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn exp_curvature_at_one() {
        let d = fd_derivative(f64::exp, 1.0, 2).unwrap();
        assert!((d - std::f64::consts::E).abs() < 1e-6);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(fd_derivative(|x| 1.0 / x, 0.0, 2).is_err());
        assert!(fd_derivative(f64::sin, 0.0, 3).is_err());
    }
}
