//! Photodetection statistics of a coherent input sent through a scattering
//! medium with linear gain or loss.
//!
//! A monochromatic coherent beam of photocurrent `I0` enters the medium in
//! mode `m0`; every outgoing mode on the detected side is counted with
//! efficiency `alpha` over a time `tau`. Beating of the coherent field with
//! spontaneous emission makes the count super-Poissonian. With
//! `u = t e_{m0}` (the transmitted column of the input mode) and the
//! deficit matrix `D = 1 - r r^dagger - t t^dagger`, the excess-noise
//! generating function is
//!
//! ```text
//!     F_exc(xi) = alpha xi tau I0 * u^dagger [1 - alpha xi f D]^{-1} u,
//! ```
//!
//! whose Taylor coefficients are the factorial cumulants
//! `kappa_k = k! alpha^k tau f^{k-1} I0 * u^dagger D^{k-1} u`. Detection in
//! reflection exchanges `r -> t'`, `t -> r'`. The full photocount
//! distribution follows by inverting the generating function around the
//! unit circle.
//!
//! `f` is the Bose-Einstein occupation of the medium: negative for an
//! amplifier (`f = -1` at complete population inversion), positive for an
//! absorber at temperature `T > 0`, zero for a noiseless passive medium.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{c, hermitian_eigen, Cholesky, ComplexMatrix};
use crate::scatter::{ScatteringMatrix, Side};
use crate::{ensembles, Error, Result};

/// Bose-Einstein occupation `f = 1/(exp(x) - 1)` at `x = hbar omega / kT`.
/// Negative temperatures give `f <= -1`, the amplifying convention.
pub fn bose_einstein(x: f64) -> f64 {
    1.0 / (x.exp() - 1.0)
}

/// Detector and input-beam configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionConfig {
    /// Detector efficiency, in `(0, 1]`.
    pub alpha: f64,
    /// Bose-Einstein occupation of the medium; `>= -1`.
    pub f: f64,
    /// Input mode index, zero-based, `< N`.
    pub m0: usize,
    /// Input photocurrent (photons per unit time), `>= 0`.
    pub i0: f64,
    /// Counting time, `> 0`.
    pub tau: f64,
    /// Detection side.
    pub side: Side,
}

impl DetectionConfig {
    pub fn new(alpha: f64, f: f64, m0: usize, i0: f64, tau: f64, side: Side) -> Result<Self> {
        let cfg = Self { alpha, f, m0, i0, tau, side };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidSpec(format!("alpha = {} not in (0, 1]", self.alpha)));
        }
        if !self.f.is_finite() || self.f < -1.0 {
            return Err(Error::InvalidSpec(format!(
                "f = {} must be finite and >= -1 (complete inversion)",
                self.f
            )));
        }
        if !(self.i0 >= 0.0) || !self.i0.is_finite() {
            return Err(Error::InvalidSpec("i0 must be finite and nonnegative".into()));
        }
        if !(self.tau > 0.0) {
            return Err(Error::InvalidSpec("tau must be positive".into()));
        }
        Ok(())
    }
}

/// Derived photodetection observables of one medium.
///
/// Invariants: `noise_power = mean_current + excess_noise`,
/// `cumulants[0] = mean_current * tau`, and
/// `noise_power = (cumulants[1] + cumulants[0]) / tau`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhotonStatistics {
    pub mean_current: f64,
    pub noise_power: f64,
    pub excess_noise: f64,
    /// Noise figure; `+inf` with `undefined_signal` set when nothing
    /// reaches the detector (sweeps near threshold must not abort).
    pub noise_figure: f64,
    pub undefined_signal: bool,
    /// Factorial cumulants `kappa_1 ..= kappa_4`.
    pub cumulants: Vec<f64>,
    /// Largest admissible generating-function argument.
    pub pgf_radius: f64,
    pub config_hash: String,
}

/// Short-time generating-function value plus a grid-quality flag.
#[derive(Debug, Clone, Copy)]
pub struct ShortTimeEstimate {
    pub value: f64,
    /// Set when the deficit varies by more than 10% between grid nodes.
    pub coarse_grid: bool,
}

fn check_mode(sm: &ScatteringMatrix, cfg: &DetectionConfig) -> Result<()> {
    cfg.validate()?;
    if cfg.m0 >= sm.n_modes() {
        return Err(Error::Structural(format!(
            "input mode {} out of range for N = {}",
            cfg.m0,
            sm.n_modes()
        )));
    }
    Ok(())
}

/// Column of the signal block seen by the detector: `t e_{m0}` in
/// transmission, `r' e_{m0}` in reflection.
fn signal_column(sm: &ScatteringMatrix, cfg: &DetectionConfig) -> Vec<Complex64> {
    let b = sm.blocks();
    match cfg.side {
        Side::Transmission => b.t.column(cfg.m0),
        Side::Reflection => b.r_prime.column(cfg.m0),
    }
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Largest `xi > 0` for which `1 - alpha xi f D` stays positive definite;
/// infinite when `f D` has no positive eigenvalue.
fn critical_xi(deficit: &ComplexMatrix, alpha: f64, f: f64) -> f64 {
    let (vals, _) = hermitian_eigen(deficit);
    vals.iter()
        .map(|&d| f * d)
        .filter(|&fd| fd > 0.0)
        .map(|fd| 1.0 / (alpha * fd))
        .fold(f64::INFINITY, f64::min)
}

/// Excess-noise generating function `F_exc(xi)` at real `xi`.
///
/// Fails with a domain error carrying the critical `xi` when the argument
/// lies outside the convergence region (detected by a failed Cholesky
/// factorization of `1 - alpha xi f D`).
pub fn generating_function_exc(
    sm: &ScatteringMatrix,
    cfg: &DetectionConfig,
    xi: f64,
) -> Result<f64> {
    check_mode(sm, cfg)?;
    if xi == 0.0 {
        return Ok(0.0);
    }
    let d = sm.deficit_matrix(cfg.side)?;
    let n = sm.n_modes();
    let mut a = ComplexMatrix::identity(n);
    let shift = -cfg.alpha * xi * cfg.f;
    for i in 0..n {
        for j in 0..n {
            let dij = d[(i, j)];
            a[(i, j)] += dij * shift;
        }
    }
    let chol = Cholesky::factor(&a).map_err(|_| Error::Domain {
        critical_xi: critical_xi(&d, cfg.alpha, cfg.f),
        message: format!("xi = {xi} outside the convergence region of F_exc"),
    })?;
    let u = signal_column(sm, cfg);
    let y = chol.solve_vec(&u);
    Ok(cfg.alpha * xi * cfg.tau * cfg.i0 * inner(&u, &y).re)
}

/// Factorial cumulants `kappa_1 ..= kappa_{k_max}`:
/// `kappa_k = k! alpha^k tau f^{k-1} I0 * u^dagger D^{k-1} u`.
pub fn factorial_cumulants(
    sm: &ScatteringMatrix,
    cfg: &DetectionConfig,
    k_max: usize,
) -> Result<Vec<f64>> {
    check_mode(sm, cfg)?;
    let d = sm.deficit_matrix(cfg.side)?;
    let u = signal_column(sm, cfg);
    let mut out = Vec::with_capacity(k_max);
    let mut x = u.clone();
    let mut k_factorial = 1.0;
    let mut alpha_pow = 1.0;
    let mut f_pow = 1.0;
    for k in 1..=k_max {
        k_factorial *= k as f64;
        alpha_pow *= cfg.alpha;
        if k > 1 {
            f_pow *= cfg.f;
            x = d.mul_vec(&x);
        }
        out.push(k_factorial * alpha_pow * cfg.tau * f_pow * cfg.i0 * inner(&u, &x).re);
    }
    Ok(out)
}

/// Noise figure for the given input mode: input SNR over output SNR,
/// independent of `I0`.
pub fn noise_figure(sm: &ScatteringMatrix, cfg: &DetectionConfig) -> Result<f64> {
    check_mode(sm, cfg)?;
    let u = signal_column(sm, cfg);
    let signal = norm_sqr(&u);
    if signal == 0.0 {
        return Err(Error::UndefinedSignal);
    }
    let d = sm.deficit_matrix(cfg.side)?;
    // u^dagger (r r^dagger + t t^dagger) u = |u|^2 - u^dagger D u
    let beat = signal - inner(&u, &d.mul_vec(&u)).re;
    Ok(-2.0 * cfg.f * beat / (signal * signal)
        + (1.0 + 2.0 * cfg.alpha * cfg.f) / (cfg.alpha * signal))
}

/// Ensemble noise figure as a ratio of separately averaged traces. All
/// members must share the mode count and regime.
pub fn noise_figure_trace_averaged(
    ensemble: &[ScatteringMatrix],
    cfg: &DetectionConfig,
) -> Result<f64> {
    let first = ensemble
        .first()
        .ok_or_else(|| Error::Structural("trace-averaged noise figure needs samples".into()))?;
    check_mode(first, cfg)?;
    let n = first.n_modes();
    let regime = first.regime();
    let mut sig_sum = 0.0;
    let mut beat_sum = 0.0;
    for sm in ensemble {
        if sm.n_modes() != n || sm.regime() != regime {
            return Err(Error::Structural(
                "ensemble members must share mode count and regime".into(),
            ));
        }
        let b = sm.blocks();
        let u = match cfg.side {
            Side::Transmission => &b.t,
            Side::Reflection => &b.r_prime,
        };
        let d = sm.deficit_matrix(cfg.side)?;
        let gram = u.adjoint().matmul(u);
        let sig = gram.trace().re;
        let du = d.matmul(u);
        let beat = sig - u.adjoint().matmul(&du).trace().re;
        sig_sum += sig;
        beat_sum += beat;
    }
    let count = ensemble.len() as f64;
    let sig = sig_sum / count;
    let beat = beat_sum / count;
    if sig == 0.0 {
        return Err(Error::UndefinedSignal);
    }
    let nf = n as f64;
    Ok(-2.0 * cfg.f * nf * beat / (sig * sig)
        + nf * (1.0 + 2.0 * cfg.alpha * cfg.f) / (cfg.alpha * sig))
}

/// Mean current, noise power, excess noise, noise figure, the first four
/// factorial cumulants and the generating-function radius.
pub fn statistics(sm: &ScatteringMatrix, cfg: &DetectionConfig) -> Result<PhotonStatistics> {
    check_mode(sm, cfg)?;
    let u = signal_column(sm, cfg);
    let d = sm.deficit_matrix(cfg.side)?;
    let signal = norm_sqr(&u);
    let mean_current = cfg.alpha * cfg.i0 * signal;
    let excess_noise =
        2.0 * cfg.alpha * cfg.alpha * cfg.f * cfg.i0 * inner(&u, &d.mul_vec(&u)).re;
    let noise_power = mean_current + excess_noise;
    let (noise_figure, undefined_signal) = match noise_figure(sm, cfg) {
        Ok(nf) => (nf, false),
        Err(Error::UndefinedSignal) => (f64::INFINITY, true),
        Err(e) => return Err(e),
    };
    Ok(PhotonStatistics {
        mean_current,
        noise_power,
        excess_noise,
        noise_figure,
        undefined_signal,
        cumulants: factorial_cumulants(sm, cfg, 4)?,
        pgf_radius: critical_xi(&d, cfg.alpha, cfg.f),
        config_hash: ensembles::spec_hash(cfg),
    })
}

/// Photocount distribution `p(0 ..= n_max)` by contour inversion of
/// `exp(F_exc)` around the unit circle (trapezoidal rule, at least
/// `8 n_max` nodes). The spontaneous-emission background is assumed
/// filtered out.
pub fn photocount_distribution(
    sm: &ScatteringMatrix,
    cfg: &DetectionConfig,
    n_max: usize,
) -> Result<Vec<f64>> {
    check_mode(sm, cfg)?;
    let d = sm.deficit_matrix(cfg.side)?;
    let (vals, vecs) = hermitian_eigen(&d);
    let u = signal_column(sm, cfg);
    let u_tilde = vecs.adjoint().mul_vec(&u);
    let weights: Vec<f64> = u_tilde.iter().map(|z| z.norm_sqr()).collect();

    let nodes = (8 * (n_max + 1)).max(64);
    let prefactor = cfg.alpha * cfg.tau * cfg.i0;
    let mut contour = Vec::with_capacity(nodes);
    for j in 0..nodes {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / nodes as f64;
        let z = Complex64::from_polar(1.0, theta);
        let xi = z - 1.0;
        let mut acc = Complex64::default();
        for (&w, &dk) in weights.iter().zip(&vals) {
            let denom = c(1.0, 0.0) - xi * (cfg.alpha * cfg.f * dk);
            if denom.norm() < 1e-12 {
                return Err(Error::Domain {
                    critical_xi: critical_xi(&d, cfg.alpha, cfg.f),
                    message: "inversion contour crosses a singularity of F_exc; reduce the \
                              gain margin or tau * I0"
                        .into(),
                });
            }
            acc += w / denom;
        }
        let f_exc = xi * prefactor * acc;
        contour.push(f_exc.exp());
    }

    let mut p = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut sum = Complex64::default();
        for (j, w) in contour.iter().enumerate() {
            let theta = 2.0 * std::f64::consts::PI * (j as f64) * (n as f64) / nodes as f64;
            sum += w * Complex64::from_polar(1.0, -theta);
        }
        p.push(sum.re / nodes as f64);
    }

    let min = p.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -1e-9 {
        return Err(Error::NumericalConsistency(format!(
            "photocount quadrature produced probability {min:.3e}; increase n_max"
        )));
    }
    for v in &mut p {
        *v = v.max(0.0);
    }
    let total: f64 = p.iter().sum();
    if total < 1.0 - 1e-6 {
        return Err(Error::NumericalConsistency(format!(
            "photocount distribution captures only {total:.8} of the mass; increase n_max"
        )));
    }
    for v in &mut p {
        *v /= total;
    }
    Ok(p)
}

/// Per-frequency integrand of the amplified-spontaneous-emission term:
/// `-(tau / 2 pi) ln det(1 - alpha xi f D)` at the frequency of `sm`. The
/// full frequency integral is assumed to be removed by filtering.
pub fn spontaneous_term_integrand(
    sm: &ScatteringMatrix,
    cfg: &DetectionConfig,
    xi: f64,
) -> Result<f64> {
    check_mode(sm, cfg)?;
    if xi == 0.0 {
        return Ok(0.0);
    }
    let d = sm.deficit_matrix(cfg.side)?;
    let n = sm.n_modes();
    let mut a = ComplexMatrix::identity(n);
    let shift = -cfg.alpha * xi * cfg.f;
    for i in 0..n {
        for j in 0..n {
            let dij = d[(i, j)];
            a[(i, j)] += dij * shift;
        }
    }
    let chol = Cholesky::factor(&a).map_err(|_| Error::Domain {
        critical_xi: critical_xi(&d, cfg.alpha, cfg.f),
        message: format!("xi = {xi} outside the convergence region of the spontaneous term"),
    })?;
    Ok(-(cfg.tau / (2.0 * std::f64::consts::PI)) * chol.ln_det())
}

/// Short-time-regime generating function over a sampled frequency grid:
/// the deficit is integrated over frequency (trapezoidal rule) before the
/// resolvent is taken at the working frequency `omega0`.
pub fn generating_function_exc_short_time(
    grid: &[(f64, ScatteringMatrix)],
    cfg: &DetectionConfig,
    xi: f64,
    omega0: f64,
) -> Result<ShortTimeEstimate> {
    if grid.is_empty() {
        return Err(Error::Structural("frequency grid must be nonempty".into()));
    }
    let n = grid[0].1.n_modes();
    for (_, sm) in grid {
        if sm.n_modes() != n {
            return Err(Error::Structural("grid members must share the mode count".into()));
        }
    }
    check_mode(&grid[0].1, cfg)?;

    let deficits: Vec<ComplexMatrix> =
        grid.iter().map(|(_, sm)| sm.deficit_matrix(cfg.side)).collect::<Result<_>>()?;

    // Trapezoidal weights on a (possibly nonuniform) sorted grid.
    let mut integral = ComplexMatrix::zeros(n, n);
    if grid.len() > 1 {
        for i in 0..grid.len() {
            let lo = if i == 0 { grid[0].0 } else { grid[i - 1].0 };
            let hi = if i + 1 == grid.len() { grid[i].0 } else { grid[i + 1].0 };
            let w = 0.5 * (hi - lo);
            integral = integral.add(&deficits[i].scale(c(w, 0.0)));
        }
    }

    let mut coarse_grid = false;
    for pair in deficits.windows(2) {
        let scale = pair[0].frobenius_norm().max(pair[1].frobenius_norm());
        if scale > 1e-12 && pair[1].sub(&pair[0]).frobenius_norm() > 0.1 * scale {
            coarse_grid = true;
        }
    }

    let shift = -cfg.alpha * xi * cfg.tau / (2.0 * std::f64::consts::PI) * cfg.f;
    let mut a = ComplexMatrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            let v = integral[(i, j)];
            a[(i, j)] += v * shift;
        }
    }
    let chol = Cholesky::factor(&a).map_err(|_| Error::Domain {
        critical_xi: critical_xi(&integral, cfg.alpha, cfg.f * cfg.tau / (2.0 * std::f64::consts::PI)),
        message: format!("xi = {xi} outside the short-time convergence region"),
    })?;

    // Signal blocks at the grid node nearest the working frequency.
    let nearest = grid
        .iter()
        .min_by(|a, b| {
            (a.0 - omega0).abs().partial_cmp(&(b.0 - omega0).abs()).unwrap()
        })
        .expect("nonempty grid");
    let u = signal_column(&nearest.1, cfg);
    let y = chol.solve_vec(&u);
    Ok(ShortTimeEstimate {
        value: cfg.alpha * xi * cfg.tau * cfg.i0 * inner(&u, &y).re,
        coarse_grid,
    })
}
