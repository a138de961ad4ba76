//! Scalar field tag and the few complex helpers everything else leans on.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    /// Smallest field containing both operands.
    pub fn join(a: Field, b: Field) -> Field {
        if a == Field::Complex || b == Field::Complex {
            Field::Complex
        } else {
            Field::Real
        }
    }
}

impl std::fmt::Display for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Field::Real => write!(f, "real"),
            Field::Complex => write!(f, "complex"),
        }
    }
}

/// Unimodular sign of a nonzero scalar, z / |z|. Returns 1 for z = 0 so the
/// caller never divides by zero; every use site filters zeros first.
pub fn sgn(z: Complex64) -> Complex64 {
    let a = z.norm();
    if a == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        z / a
    }
}

pub fn is_finite_c(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Round-trip safe scalar formatting, 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{:.16e}", v)
}

pub fn fmt_scalar(z: Complex64, field: Field) -> String {
    match field {
        Field::Real => fmt_f64(z.re),
        Field::Complex => {
            if z.im >= 0.0 || z.im.is_nan() {
                format!("{}+{}i", fmt_f64(z.re), fmt_f64(z.im))
            } else {
                format!("{}-{}i", fmt_f64(z.re), fmt_f64(-z.im))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgn_is_unimodular() {
        let z = Complex64::new(-3.0, 4.0);
        let s = sgn(z);
        assert!((s.norm() - 1.0).abs() < 1e-15);
        assert!((s * 5.0 - z).norm() < 1e-12);
    }

    #[test]
    fn fmt_round_trips() {
        let v = 0.1 + 0.2; // not representable exactly, the classic case
        let s = fmt_f64(v);
        assert_eq!(s.parse::<f64>().unwrap(), v);
    }

    #[test]
    fn complex_formatting_signs() {
        assert!(fmt_scalar(Complex64::new(1.0, -2.0), Field::Complex).contains('-'));
        assert!(fmt_scalar(Complex64::new(1.0, 2.0), Field::Complex).contains('+'));
    }
}
