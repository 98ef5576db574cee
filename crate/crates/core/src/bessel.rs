//! Zero-order Bessel function of the first kind.
//!
//! Rational approximation on `[0, 8)` and the standard asymptotic
//! amplitude/phase expansion beyond, in the Abramowitz-Stegun / Hart style.

use crate::error::{Error, Result};

const FRAC_PI_4: f64 = std::f64::consts::FRAC_PI_4;
const FRAC_2_PI: f64 = std::f64::consts::FRAC_2_PI;

/// Evaluates `J0(x)` for finite `x >= 0`.
///
/// Absolute error is below `1e-7` on `[0, 8]`; beyond that the error is
/// below `1e-7` relative to the `sqrt(2 / (pi x))` envelope.
pub fn bessel_j0(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("bessel_j0 requires a finite argument, got {x}")));
    }
    if x < 0.0 {
        return Err(Error::Domain(format!("bessel_j0 requires x >= 0, got {x}")));
    }
    Ok(j0_unchecked(x))
}

pub(crate) fn j0_unchecked(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 8.0 {
        let y = x * x;
        let num = 57568490411.0
            + y * (-13362590354.0
                + y * (651619640.7 + y * (-11214424.18 + y * (77392.33017 + y * (-184.9052456)))));
        let den = 57568490411.0
            + y * (1029532985.0 + y * (9494680.718 + y * (59272.64853 + y * (267.8532712 + y))));
        num / den
    } else {
        let z = 8.0 / ax;
        let y = z * z;
        let phase = ax - FRAC_PI_4;
        let p0 = 1.0
            + y * (-0.1098628627e-2
                + y * (0.2734510407e-4 + y * (-0.2073370639e-5 + y * 0.2093887211e-6)));
        let q0 = -0.1562499995e-1
            + y * (0.1430488765e-3
                + y * (-0.6911147651e-5 + y * (0.7621095161e-6 - y * 0.934935152e-7)));
        (FRAC_2_PI / ax).sqrt() * (phase.cos() * p0 - z * phase.sin() * q0)
    }
}
