//! Closed-form large-N reference curves for the disordered waveguide and the
//! chaotic cavity, plus the near-threshold noise-figure distribution. The
//! Monte Carlo ensembles are validated against these.
//!
//! Conventions: `s = L / xi_a` is the length of the waveguide in units of
//! the amplification (or absorption) length, `gamma` the dimensionless
//! amplification (or absorption) rate of the cavity, `f` the Bose-Einstein
//! occupation (`f <= -1` amplifying with `f = -1` at complete inversion,
//! `f > 0` absorbing), `alpha` the detector efficiency. The waveguide
//! mean current and excess noise in transmission are
//!
//! ```text
//!     Ibar  = (4 alpha l / 3L) I0 * s/sin(s)
//!     Pexc  = (2 alpha^2 l / 3L) f I0 * s * B(s)
//! ```
//!
//! with `B` a bracket of inverse powers of `sin(s)` (hyperbolic for the
//! absorbing medium, by the duality `s -> i s`), and analogous forms in
//! reflection. The laser threshold sits at `s = pi` and at `gamma = 1`.

use num_complex::Complex64;

use crate::{Error, Result};

/// One point of a reference curve.
///
/// `mean_current_coeff` is `Ibar / (alpha I0)`. `excess_coeff` is the excess
/// noise in the plotted units of the curve family: `Pexc * L / (alpha^2 l
/// |f| I0)` for the waveguide, `Pexc / (alpha^2 |f| I0)` for the cavity.
/// `noise_figure` is `(Pexc + Ibar) I0 / Ibar^2`, infinite when no signal
/// reaches the detector.
#[derive(Debug, Clone, Copy)]
pub struct CurvePoint {
    pub x: f64,
    pub mean_current_coeff: f64,
    pub excess_coeff: f64,
    pub noise_figure: f64,
}

/// Detection side selector, shared with the matrix formulas.
pub use crate::scatter::Side;

// Taylor coefficients of the transmission bracket
//   B_t(s) = 3/sin s - (2s - cot s)/sin^2 s + (s cot s - 1)/sin^3 s - s/sin^4 s
// in odd powers s, s^3, ..., s^13. The leading inverse powers cancel, so the
// closed form loses precision near s = 0 and the series takes over below
// `SERIES_CROSSOVER`.
const BRACKET_T_AMP: [f64; 7] = [
    -2.0 / 3.0,
    -2.0 / 9.0,
    -61.0 / 1260.0,
    -19.0 / 2160.0,
    -247.0 / 171072.0,
    -150967.0 / 681080400.0,
    -302707.0 / 9340531200.0,
];

// Reflection bracket
//   B_r(s) = 2 cot s - 1/sin s + cot s/sin^2 s + (s cot s - 1)/sin^3 s - s/sin^4 s.
const BRACKET_R_AMP: [f64; 7] = [
    -4.0 / 3.0,
    -19.0 / 90.0,
    -5.0 / 126.0,
    -1073.0 / 151200.0,
    -1777.0 / 1496880.0,
    -10190239.0 / 54486432000.0,
    -130873.0 / 4670265600.0,
];

// Hyperbolic (absorbing) counterparts; equal magnitudes, alternating signs,
// exactly the continuation s -> i s of the trigonometric brackets.
const BRACKET_T_ABS: [f64; 7] = [
    2.0 / 3.0,
    -2.0 / 9.0,
    61.0 / 1260.0,
    -19.0 / 2160.0,
    247.0 / 171072.0,
    -150967.0 / 681080400.0,
    302707.0 / 9340531200.0,
];

const BRACKET_R_ABS: [f64; 7] = [
    4.0 / 3.0,
    -19.0 / 90.0,
    5.0 / 126.0,
    -1073.0 / 151200.0,
    1777.0 / 1496880.0,
    -10190239.0 / 54486432000.0,
    130873.0 / 4670265600.0,
];

const SERIES_CROSSOVER: f64 = 0.4;

fn odd_series(coeffs: &[f64; 7], s: f64) -> f64 {
    let s2 = s * s;
    let mut acc = 0.0;
    for &a in coeffs.iter().rev() {
        acc = acc * s2 + a;
    }
    acc * s
}

/// Transmission bracket of the amplifying waveguide, `0 <= s < pi`.
pub fn bracket_transmission_amplifying(s: f64) -> f64 {
    if s < SERIES_CROSSOVER {
        return odd_series(&BRACKET_T_AMP, s);
    }
    let (sin, cos) = s.sin_cos();
    let sin2 = sin * sin;
    let num = 3.0 * sin2 * sin - 2.0 * s * sin2 + cos * sin + s * cos - sin - s;
    num / (sin2 * sin2)
}

/// Reflection bracket of the amplifying waveguide.
pub fn bracket_reflection_amplifying(s: f64) -> f64 {
    if s < SERIES_CROSSOVER {
        return odd_series(&BRACKET_R_AMP, s);
    }
    let (sin, cos) = s.sin_cos();
    let sin2 = sin * sin;
    let num = 2.0 * cos * sin2 * sin - sin2 * sin + cos * sin + s * cos - sin - s;
    num / (sin2 * sin2)
}

/// Transmission bracket of the absorbing waveguide, any `s >= 0`.
pub fn bracket_transmission_absorbing(s: f64) -> f64 {
    if s < SERIES_CROSSOVER {
        return odd_series(&BRACKET_T_ABS, s);
    }
    let sinh = s.sinh();
    let coth = 1.0 / s.tanh();
    3.0 / sinh - (2.0 * s + coth) / (sinh * sinh) - (s * coth - 1.0) / sinh.powi(3)
        + s / sinh.powi(4)
}

/// Reflection bracket of the absorbing waveguide.
pub fn bracket_reflection_absorbing(s: f64) -> f64 {
    if s < SERIES_CROSSOVER {
        return odd_series(&BRACKET_R_ABS, s);
    }
    let sinh = s.sinh();
    let coth = 1.0 / s.tanh();
    2.0 * coth - 1.0 / sinh - coth / (sinh * sinh) - (s * coth - 1.0) / sinh.powi(3)
        + s / sinh.powi(4)
}

fn s_over_sin(s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        s / s.sin()
    }
}

fn s_cot(s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        s * s.cos() / s.sin()
    }
}

fn s_over_sinh(s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        s / s.sinh()
    }
}

fn s_coth(s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        s / s.tanh()
    }
}

fn curve_point(x: f64, mean_over_alpha_i0: f64, pexc_over_i0: f64, alpha: f64, excess_coeff: f64) -> CurvePoint {
    let ibar = alpha * mean_over_alpha_i0;
    let noise_figure = if ibar > 0.0 { (pexc_over_i0 + ibar) / (ibar * ibar) } else { f64::INFINITY };
    CurvePoint { x, mean_current_coeff: mean_over_alpha_i0, excess_coeff, noise_figure }
}

/// Reference curve of the amplifying disordered waveguide at `s = L/xi_a`,
/// valid below the laser threshold `s = pi`. `l_over_l_total` is `l/L`.
pub fn waveguide_amplifying(
    s: f64,
    l_over_l_total: f64,
    alpha: f64,
    f: f64,
    side: Side,
) -> Result<CurvePoint> {
    if !(0.0..std::f64::consts::PI).contains(&s) {
        return Err(Error::ThresholdCrossed(format!(
            "s = {s} is at or beyond the laser threshold s = pi"
        )));
    }
    let ll = l_over_l_total;
    let (mean, bracket) = match side {
        Side::Transmission => ((4.0 / 3.0) * ll * s_over_sin(s), bracket_transmission_amplifying(s)),
        Side::Reflection => (1.0 - (4.0 / 3.0) * ll * s_cot(s), bracket_reflection_amplifying(s)),
    };
    let pexc_over_i0 = (2.0 / 3.0) * ll * alpha * alpha * f * s * bracket;
    let excess_coeff = (2.0 / 3.0) * f.signum() * s * bracket;
    Ok(curve_point(s, mean, pexc_over_i0, alpha, if f == 0.0 { 0.0 } else { excess_coeff }))
}

/// Reference curve of the absorbing disordered waveguide; total on `s >= 0`.
pub fn waveguide_absorbing(
    s: f64,
    l_over_l_total: f64,
    alpha: f64,
    f: f64,
    side: Side,
) -> Result<CurvePoint> {
    if s < 0.0 {
        return Err(Error::InvalidSpec(format!("s must be nonnegative, got {s}")));
    }
    let ll = l_over_l_total;
    let (mean, bracket) = match side {
        Side::Transmission => {
            ((4.0 / 3.0) * ll * s_over_sinh(s), bracket_transmission_absorbing(s))
        }
        Side::Reflection => (1.0 - (4.0 / 3.0) * ll * s_coth(s), bracket_reflection_absorbing(s)),
    };
    let pexc_over_i0 = (2.0 / 3.0) * ll * alpha * alpha * f * s * bracket;
    let excess_coeff = (2.0 / 3.0) * f.signum() * s * bracket;
    Ok(curve_point(s, mean, pexc_over_i0, alpha, if f == 0.0 { 0.0 } else { excess_coeff }))
}

/// Reference point of the amplifying chaotic cavity at dimensionless rate
/// `gamma`, valid below the laser threshold `gamma = 1`. Detection is in
/// reflection (the cavity has no transmission).
pub fn cavity_amplifying(gamma: f64, alpha: f64, f: f64) -> Result<CurvePoint> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::ThresholdCrossed(format!(
            "gamma = {gamma} is at or beyond the laser threshold gamma = 1"
        )));
    }
    let mean = 1.0 / (1.0 - gamma);
    let shape = gamma * (gamma - gamma * gamma - 1.0) / (1.0 - gamma).powi(4);
    let pexc_over_i0 = 2.0 * alpha * alpha * f * shape;
    let excess_coeff = if f == 0.0 { 0.0 } else { 2.0 * f.signum() * shape };
    Ok(curve_point(gamma, mean, pexc_over_i0, alpha, excess_coeff))
}

/// Reference point of the absorbing chaotic cavity; total on `gamma >= 0`.
pub fn cavity_absorbing(gamma: f64, alpha: f64, f: f64) -> Result<CurvePoint> {
    if gamma < 0.0 {
        return Err(Error::InvalidSpec(format!("gamma must be nonnegative, got {gamma}")));
    }
    let mean = 1.0 / (1.0 + gamma);
    let shape = gamma * (gamma * gamma + gamma + 1.0) / (1.0 + gamma).powi(4);
    let pexc_over_i0 = 2.0 * alpha * alpha * f * shape;
    let excess_coeff = if f == 0.0 { 0.0 } else { 2.0 * f.signum() * shape };
    Ok(curve_point(gamma, mean, pexc_over_i0, alpha, excess_coeff))
}

/// Limiting noise figure at the laser threshold for a resonance with
/// coupling vector `sigma`: `-2 f Sigma / |sigma_{m0}|^2`. The same limit
/// holds for detection in transmission and in reflection. Infinite when the
/// input mode is uncoupled.
pub fn threshold_noise_figure(sigma: &[Complex64], m0: usize, f: f64) -> f64 {
    let total: f64 = sigma.iter().map(|z| z.norm_sqr()).sum();
    let own = sigma[m0].norm_sqr();
    if own == 0.0 {
        f64::INFINITY
    } else {
        -2.0 * f * total / own
    }
}

/// Probability density of the threshold noise figure for a chaotic cavity
/// with `n >= 2` coupled modes: supported on `F >= -2f`, normalized, with
/// every moment divergent. The mode sits at `F = -f n`.
pub fn threshold_pdf(noise_figure: f64, n: usize, f: f64) -> f64 {
    assert!(n >= 2, "the threshold distribution needs n >= 2");
    let floor = -2.0 * f;
    if noise_figure < floor {
        return 0.0;
    }
    let base = 1.0 + 2.0 * f / noise_figure;
    -2.0 * f * (n as f64 - 1.0) * base.powi(n as i32 - 2) / (noise_figure * noise_figure)
}

/// Cumulative distribution matching [`threshold_pdf`].
pub fn threshold_cdf(noise_figure: f64, n: usize, f: f64) -> f64 {
    assert!(n >= 2);
    let floor = -2.0 * f;
    if noise_figure < floor {
        return 0.0;
    }
    (1.0 + 2.0 * f / noise_figure).powi(n as i32 - 1)
}

/// Most probable threshold noise figure, `-f n` for `n >= 2`.
pub fn threshold_typical(n: usize, f: f64) -> f64 {
    assert!(n >= 2);
    -f * n as f64
}
