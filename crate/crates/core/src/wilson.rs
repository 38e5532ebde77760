//! Wilson score intervals for binomial proportions.

use serde::Serialize;

use crate::error::{Error, Result};

/// Inverse of the standard normal CDF.
///
/// Acklam's rational approximation; relative error below 1.2e-9 over the
/// whole open interval.
pub fn inverse_normal_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("probability {p} outside (0,1)")));
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const LOW: f64 = 0.024_25;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let x = if p < LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    };
    Ok(x)
}

/// Two-sided critical value for a central `confidence` interval.
pub fn critical_value(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::invalid(format!("confidence {confidence} outside (0,1)")));
    }
    inverse_normal_cdf(1.0 - (1.0 - confidence) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WilsonInterval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> Result<WilsonInterval> {
    if trials == 0 {
        return Err(Error::invalid("Wilson interval needs at least one trial"));
    }
    if successes > trials {
        return Err(Error::invalid(format!(
            "{successes} successes out of {trials} trials"
        )));
    }
    let z = critical_value(confidence)?;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * ((p * (1.0 - p) + z2 / (4.0 * n)) / n).sqrt() / denom;
    Ok(WilsonInterval {
        estimate: p,
        lower: (center - half).clamp(0.0, p),
        upper: (center + half).clamp(p, 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_quantiles() {
        assert!((critical_value(0.95).unwrap() - 1.959_963_984_540_054).abs() < 1e-6);
        assert!((critical_value(0.99).unwrap() - 2.575_829_303_548_901).abs() < 1e-6);
        assert!((inverse_normal_cdf(0.5).unwrap()).abs() < 1e-12);
        assert!((inverse_normal_cdf(0.001).unwrap() + 3.090_232_306_167_813).abs() < 1e-6);
        assert!(inverse_normal_cdf(0.0).is_err());
        assert!(inverse_normal_cdf(1.0).is_err());
    }

    #[test]
    fn quantile_is_odd() {
        for &p in &[0.001, 0.01, 0.02, 0.1, 0.3, 0.45] {
            let lo = inverse_normal_cdf(p).unwrap();
            let hi = inverse_normal_cdf(1.0 - p).unwrap();
            assert!((lo + hi).abs() < 1e-8, "{p}: {lo} {hi}");
        }
    }

    #[test]
    fn all_successes() {
        let w = wilson_interval(5, 5, 0.95).unwrap();
        assert_eq!(format!("{:.3}", w.lower), "0.566");
        assert_eq!(format!("{:.3}", w.upper), "1.000");
    }

    #[test]
    fn zero_successes() {
        let w = wilson_interval(0, 5, 0.95).unwrap();
        assert_eq!(w.lower, 0.0);
        assert!(w.upper > 0.0);
    }

    #[test]
    fn half_is_symmetric() {
        let w = wilson_interval(50, 100, 0.95).unwrap();
        assert!(w.lower < 0.5 && w.upper > 0.5);
        assert!(((w.lower + w.upper) / 2.0 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(wilson_interval(6, 5, 0.95).is_err());
        assert!(wilson_interval(0, 0, 0.95).is_err());
        assert!(wilson_interval(1, 5, 1.0).is_err());
    }
}
