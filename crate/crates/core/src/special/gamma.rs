use super::SignedLog;
use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// ζ(k) − 1 for k = 2..=30.
const ZETA_MINUS_ONE: [f64; 29] = [
    0.644_934_066_848_226_4,
    0.202_056_903_159_594_3,
    0.082_323_233_711_138_19,
    0.036_927_755_143_369_93,
    0.017_343_061_984_449_14,
    0.008_349_277_381_922_827,
    0.004_077_356_197_944_339,
    0.002_008_392_826_082_214,
    0.000_994_575_127_818_085_3,
    0.000_494_188_604_119_464_6,
    0.000_246_086_553_308_048_3,
    0.000_122_713_347_578_489_1,
    6.124_813_505_870_482e-5,
    3.058_823_630_702_049e-5,
    1.528_225_940_865_187e-5,
    7.637_197_637_899_762e-6,
    3.817_293_264_999_840e-6,
    1.908_212_716_553_939e-6,
    9.539_620_338_727_96e-7,
    4.769_329_867_878_06e-7,
    2.384_505_027_277_33e-7,
    1.192_199_259_653_11e-7,
    5.960_818_905_125_95e-8,
    2.980_350_351_465_23e-8,
    1.490_155_482_836_50e-8,
    7.450_711_789_835_43e-9,
    3.725_334_024_788_46e-9,
    1.862_659_723_513_05e-9,
    9.313_274_324_196_68e-10,
];

/// `ln Γ(1 + b)`, accurate to full precision for small `|b|`.
///
/// For `|b| <= 0.5` this sums the Taylor series around 1, with the ζ(k)
/// coefficients split as 1 + (ζ(k) − 1) so the leading part folds into
/// `b − ln(1 + b)`.
pub fn ln_gamma_1p(b: f64) -> Result<f64> {
    if b.abs() > 0.5 {
        return ln_gamma(1.0 + b);
    }
    let mut sum = 0.0;
    let mut pow = -b;
    for (idx, &z) in ZETA_MINUS_ONE.iter().enumerate() {
        let k = (idx + 2) as f64;
        pow *= -b;
        // pow = (-1)^k b^k
        let term = z * pow / k;
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    Ok(-EULER_GAMMA * b + (b - b.ln_1p()) + sum)
}

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("ln_gamma", format!("x = {x} must be positive and finite")));
    }
    Ok(ln_gamma_positive(x))
}

pub(crate) fn ln_gamma_positive(x: f64) -> f64 {
    if x < 0.5 {
        // Γ(x) = Γ(1 + x) / x keeps the argument away from the pole.
        return ln_gamma_1p(x).unwrap_or(f64::NAN) - x.ln();
    }
    if x <= 1.5 {
        return ln_gamma_1p(x - 1.0).unwrap_or(f64::NAN);
    }
    if x <= 2.5 {
        return (x - 1.0).ln() + ln_gamma_1p(x - 2.0).unwrap_or(f64::NAN);
    }
    // Shift into the range where the Stirling series is exact to double
    // precision.
    let mut shift = 0.0;
    let mut y = x;
    while y < 10.0 {
        shift += y.ln();
        y += 1.0;
    }
    stirling(y) - shift
}

fn stirling(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 360.0
                    + inv2
                        * (1.0 / 1260.0
                            + inv2
                                * (-1.0 / 1680.0
                                    + inv2
                                        * (1.0 / 1188.0
                                            + inv2 * (-691.0 / 360_360.0 + inv2 / 156.0))))));
    (x - 0.5) * x.ln() - x + LN_SQRT_2PI + series
}

/// `ln (a)_n = ln Γ(a + n) − ln Γ(a)` for `a > 0`.
pub fn log_pochhammer(a: f64, n: u32) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::domain(
            "log_pochhammer",
            format!("a = {a} must be positive; use signed_log_pochhammer"),
        ));
    }
    if n == 0 {
        return Ok(0.0);
    }
    if n <= 16 {
        let mut acc = 0.0;
        for k in 0..n {
            acc += (a + k as f64).ln();
        }
        return Ok(acc);
    }
    Ok(ln_gamma_positive(a + n as f64) - ln_gamma_positive(a))
}

/// Rising factorial `(a)_n` for any real `a`, as log-magnitude and sign.
///
/// Factors `a + k` that are negative flip the sign; an exact zero factor makes
/// the whole product zero.
pub fn signed_log_pochhammer(a: f64, n: u32) -> SignedLog {
    let mut ln_abs = 0.0;
    let mut sign = 1.0;
    let mut k = 0u32;
    while k < n && a + (k as f64) <= 0.0 {
        let f = a + k as f64;
        if f == 0.0 {
            return SignedLog::ZERO;
        }
        ln_abs += (-f).ln();
        sign = -sign;
        k += 1;
    }
    if k < n {
        let start = a + k as f64;
        ln_abs += log_pochhammer(start, n - k).unwrap_or(f64::NAN);
    }
    SignedLog { ln_abs, sign }
}
