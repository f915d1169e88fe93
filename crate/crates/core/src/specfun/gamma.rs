//! Complex Gamma function by the Lanczos approximation (g = 7, nine terms)
//! with the reflection formula on the left half-plane.

use std::f64::consts::PI;

use crate::{Error, Result, C64};

const G: f64 = 7.0;
const COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(z) for complex `z`; relative error about 1e-13 for `|z| ≤ 20`.
pub fn gamma_complex(z: C64) -> Result<C64> {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Err(Error::Pole {
            what: "Gamma",
            at: format!("{}", z.re),
        });
    }
    Ok(gamma_unchecked(z))
}

fn gamma_unchecked(z: C64) -> C64 {
    if z.re < 0.5 {
        let s = (z * PI).sin();
        return C64::new(PI, 0.0) / (s * gamma_unchecked(C64::new(1.0, 0.0) - z));
    }
    let z = z - 1.0;
    let mut x = C64::new(COEFFS[0], 0.0);
    for (i, &c) in COEFFS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    (2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * x
}

/// Real Γ(x).
pub fn gamma(x: f64) -> Result<f64> {
    gamma_complex(C64::new(x, 0.0)).map(|g| g.re)
}
