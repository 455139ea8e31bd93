//! Random scattering-matrix generators for the three media studied here:
//! the amplifying or absorbing disordered waveguide, the chaotic cavity
//! with an `N`-mode opening, and the single-resonance pole model near the
//! laser threshold, plus Haar-distributed coupling vectors.
//!
//! All generators are pure functions of `(spec, seed)`. Seeds are
//! counter-based: the stream for sample `i` of a run is derived from
//! `(base_seed, i)` alone, so ensembles are reproducible under any
//! parallel schedule.
//!
//! # Waveguide model
//!
//! The waveguide is built by star-composing `n_slices` thin sections. A
//! section is a weak per-mode reflector (reflection probability
//! `dL / l_m` per mode) sandwiched between Haar mode mixers, scaled by a
//! uniform amplitude factor `exp(+-kappa dL)` for gain or loss. Two
//! constants tie the microscopic model to the diffusive reference curves:
//!
//! - the slice scattering strength uses an effective mean free path
//!   `l_m = 4l / (3 - 4l/L)`, which makes the zero-gain mean transmittance
//!   of the composed system equal the diffusive value `4l/3L`;
//! - the gain rate `kappa = l_m/(6 xi_a^2)`, reduced by the boundary
//!   factor `(L/(L + z0 l_m))^2`, places the lasing threshold of the finite
//!   sample at `L/xi_a = pi` where the reference curves diverge. The
//!   extrapolation coefficient `z0` was fitted once against the measured
//!   gain response (see `tests/waveguide_calibration.rs`).

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::linalg::{c, ComplexMatrix, Lu};
use crate::scatter::{Blocks, Regime, ScatteringMatrix};
use crate::{Error, Result};

/// Fractional distance from the lasing threshold below which specs are
/// rejected unless `allow_near_threshold` is set.
pub const THRESHOLD_MARGIN: f64 = 0.02;

/// Boundary extrapolation coefficient of the slice model, in units of the
/// model mean free path. Fitted once against the measured amplification
/// response of the zero-gain-calibrated model at L/l = 10.
const BOUNDARY_EXTRAPOLATION: f64 = 1.0;

/// Counter-based per-sample RNG stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSeed {
    pub base_seed: u64,
    pub sample_index: u64,
}

impl RngSeed {
    pub fn new(base_seed: u64, sample_index: u64) -> Self {
        Self { base_seed, sample_index }
    }

    /// The independent stream for this `(base, index)` pair.
    pub fn stream(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base_seed);
        rng.set_stream(self.sample_index);
        rng
    }
}

/// Short hex digest of any serializable spec, recorded next to results.
pub fn spec_hash<T: Serialize>(spec: &T) -> String {
    let text = serde_json::to_string(spec).expect("spec serialization cannot fail");
    let digest = Sha256::digest(text.as_bytes());
    let mut out = String::with_capacity(16);
    for byte in digest.iter().take(8) {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Disordered waveguide of length `length`, transport mean free path
/// `mean_free_path`, amplification (or absorption) length `amp_length`,
/// with `n_modes` propagating modes per side.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveguideSpec {
    pub n_modes: usize,
    pub mean_free_path: f64,
    pub length: f64,
    pub amp_length: f64,
    pub regime: Regime,
    pub n_slices: usize,
    #[serde(default)]
    pub allow_near_threshold: bool,
}

impl WaveguideSpec {
    /// Spec with the minimum admissible slice count `ceil(20 L / l)`.
    pub fn new(
        n_modes: usize,
        mean_free_path: f64,
        length: f64,
        amp_length: f64,
        regime: Regime,
    ) -> Result<Self> {
        let n_slices = (20.0 * length / mean_free_path).ceil().max(1.0) as usize;
        let spec = Self {
            n_modes,
            mean_free_path,
            length,
            amp_length,
            regime,
            n_slices,
            allow_near_threshold: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Gain parameter `s = L / xi_a`.
    pub fn s_param(&self) -> f64 {
        self.length / self.amp_length
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_modes == 0 {
            return Err(Error::InvalidSpec("waveguide needs at least one mode".into()));
        }
        if !(self.mean_free_path > 0.0) || !(self.length > 0.0) || !(self.amp_length > 0.0) {
            return Err(Error::InvalidSpec(
                "mean_free_path, length and amp_length must be positive".into(),
            ));
        }
        if self.regime == Regime::Unitary {
            return Err(Error::InvalidSpec(
                "waveguide regime must be amplifying or absorbing; use amp_length = inf for \
                 the lossless limit"
                    .into(),
            ));
        }
        let min_slices = (20.0 * self.length / self.mean_free_path).ceil().max(1.0) as usize;
        if self.n_slices < min_slices {
            return Err(Error::InvalidSpec(format!(
                "n_slices = {} too coarse; need at least {min_slices} so slices stay thin \
                 against the mean free path",
                self.n_slices
            )));
        }
        let s = self.s_param();
        if self.regime == Regime::Amplifying
            && !self.allow_near_threshold
            && s >= (1.0 - THRESHOLD_MARGIN) * std::f64::consts::PI
        {
            return Err(Error::InvalidSpec(format!(
                "s = L/xi_a = {s:.4} is within {THRESHOLD_MARGIN:.0e} of the laser threshold pi; \
                 set allow_near_threshold for threshold studies"
            )));
        }
        Ok(())
    }
}

/// Chaotic cavity coupled to `n_modes` ideal waveguide channels, modeled by
/// an `n_levels x n_levels` random Hamiltonian. `gamma` is the
/// dimensionless amplification (or absorption) rate; lasing sits at
/// `gamma = 1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CavitySpec {
    pub n_modes: usize,
    pub gamma: f64,
    pub regime: Regime,
    pub n_levels: usize,
    #[serde(default)]
    pub allow_near_threshold: bool,
}

impl CavitySpec {
    pub fn new(n_modes: usize, gamma: f64, regime: Regime, n_levels: usize) -> Result<Self> {
        let spec = Self { n_modes, gamma, regime, n_levels, allow_near_threshold: false };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_modes == 0 {
            return Err(Error::InvalidSpec("cavity needs at least one channel".into()));
        }
        if self.n_levels < 10 * self.n_modes {
            return Err(Error::InvalidSpec(format!(
                "n_levels = {} too small; need at least 10 N = {} for stable pole spacing",
                self.n_levels,
                10 * self.n_modes
            )));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::InvalidSpec("gamma must be nonnegative".into()));
        }
        if self.gamma == 0.0 && self.regime != Regime::Unitary {
            return Err(Error::InvalidSpec("gamma = 0 is the unitary cavity".into()));
        }
        if self.gamma > 0.0 && self.regime == Regime::Unitary {
            return Err(Error::InvalidSpec("unitary cavity requires gamma = 0".into()));
        }
        if self.regime == Regime::Amplifying
            && !self.allow_near_threshold
            && self.gamma >= 1.0 - THRESHOLD_MARGIN
        {
            return Err(Error::InvalidSpec(format!(
                "gamma = {} is within {THRESHOLD_MARGIN} of the laser threshold 1; set \
                 allow_near_threshold for threshold studies",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// Single-resonance model near the laser threshold: a rank-one scattering
/// matrix with complex coupling vector `couplings`, decay rate `decay` and
/// amplification rate `amp_rate = 1/tau_a`. Lasing sits at
/// `decay * tau_a = 1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoleSpec {
    pub couplings: Vec<Complex64>,
    pub decay: f64,
    pub amp_rate: f64,
    pub resonance: f64,
}

impl PoleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.couplings.len() < 2 || self.couplings.len() % 2 != 0 {
            return Err(Error::InvalidSpec(
                "couplings must cover an even number 2N of modes; pad the closed side with \
                 zeros for one-sided geometries"
                    .into(),
            ));
        }
        if !(self.decay > 0.0) {
            return Err(Error::InvalidSpec("decay rate must be positive".into()));
        }
        if !(self.amp_rate >= 0.0) {
            return Err(Error::InvalidSpec("amp_rate must be nonnegative".into()));
        }
        Ok(())
    }

    /// Total coupling strength `Sigma = sum |sigma_n|^2`.
    pub fn total_coupling(&self) -> f64 {
        self.couplings.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Unit vector with the rotation-invariant (Haar) distribution, as the
/// normalized vector of i.i.d. standard complex Gaussians.
pub fn sample_haar_coupling(n: usize, seed: RngSeed) -> Vec<Complex64> {
    assert!(n >= 1, "need at least one component");
    let mut rng = seed.stream();
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut v {
        *z /= norm;
    }
    v
}

/// Haar-distributed `n x n` unitary: QR of a complex Ginibre matrix with
/// the phases of the R diagonal absorbed into Q.
fn haar_unitary(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(n, n, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    // Modified Gram-Schmidt on columns.
    let mut q = g;
    for j in 0..n {
        for k in 0..j {
            let mut proj = Complex64::default();
            for i in 0..n {
                proj += q[(i, k)].conj() * q[(i, j)];
            }
            for i in 0..n {
                let qik = q[(i, k)];
                q[(i, j)] -= proj * qik;
            }
        }
        let norm = (0..n).map(|i| q[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        // The diagonal phase comes from the first nonzero projection; fix
        // it with the sign of the original pivot so the distribution is
        // exactly Haar rather than QR-convention dependent.
        let pivot = q[(j, j)];
        let phase = if pivot.norm() > 0.0 { pivot / pivot.norm() } else { c(1.0, 0.0) };
        let scale = phase / norm;
        for i in 0..n {
            q[(i, j)] *= scale.conj();
        }
    }
    q
}

/// Effective mean free path of the slice model; reproduces the diffusive
/// transmittance `4l/3L` of the reference curves when the medium is many
/// mean free paths long. Clamped for short media.
fn model_mean_free_path(l: f64, length: f64) -> f64 {
    4.0 * l / (3.0 - 4.0 * l / length).max(1.0)
}

/// One thin section: per-mode reflector with Gaussian reflection
/// amplitudes, Haar mixers on both sides, overall amplitude factor `g`.
fn waveguide_slice(
    n: usize,
    sigma_theta: f64,
    gain: f64,
    rng: &mut impl Rng,
) -> Result<ScatteringMatrix> {
    let w = haar_unitary(n, rng);
    let v = haar_unitary(n, rng);
    let sin_theta: Vec<f64> = (0..n)
        .map(|_| (sigma_theta * rng.sample::<f64, _>(StandardNormal)).clamp(-0.999, 0.999))
        .collect();
    let cos_theta: Vec<f64> = sin_theta.iter().map(|s| (1.0 - s * s).sqrt()).collect();

    // Blocks of mixer(W) * reflector * mixer(V), scaled by the gain:
    //   r' = W^T (i sin) W,  t = V cos W,  t' = t^T,  r = V (i sin) V^T.
    let scale_rows = |m: &ComplexMatrix, d: &[f64], imag: bool| {
        ComplexMatrix::from_fn(n, n, |i, j| {
            let v = m[(i, j)] * d[i];
            if imag {
                c(-v.im, v.re)
            } else {
                v
            }
        })
    };
    let wt = w.transpose();
    let r_prime = wt.matmul(&scale_rows(&w, &sin_theta, true)).scale(c(gain, 0.0));
    let t = v.matmul(&scale_rows(&w, &cos_theta, false)).scale(c(gain, 0.0));
    let r = v.matmul(&scale_rows(&v.transpose(), &sin_theta, true)).scale(c(gain, 0.0));
    let blocks = Blocks { t_prime: t.transpose(), t, r_prime, r };
    let regime = if gain > 1.0 {
        Regime::Amplifying
    } else if gain < 1.0 {
        Regime::Absorbing
    } else {
        Regime::Unitary
    };
    ScatteringMatrix::from_blocks(&blocks, regime)
}

/// Draw one waveguide sample by star-composing thin sections.
///
/// Deterministic in `(spec, seed)`. Fails with a threshold error when the
/// cascade lases, which can happen for individual samples near
/// `s = L/xi_a = pi`.
pub fn sample_waveguide(spec: &WaveguideSpec, seed: RngSeed) -> Result<ScatteringMatrix> {
    spec.validate()?;
    let mut rng = seed.stream();
    let n = spec.n_modes;
    let dl = spec.length / spec.n_slices as f64;
    let l_m = model_mean_free_path(spec.mean_free_path, spec.length);
    let sigma_theta = (dl / l_m).sqrt();

    let boundary = spec.length / (spec.length + BOUNDARY_EXTRAPOLATION * l_m);
    let kappa = boundary * boundary * l_m / (6.0 * spec.amp_length * spec.amp_length);
    let gain = match spec.regime {
        Regime::Amplifying => (kappa * dl).exp(),
        Regime::Absorbing => (-kappa * dl).exp(),
        Regime::Unitary => 1.0,
    };

    let mut acc = ScatteringMatrix::uniform_transmission(n, 1.0);
    for _ in 0..spec.n_slices {
        let slice = waveguide_slice(n, sigma_theta, gain, &mut rng)?;
        acc = acc.star_compose(&slice)?;
    }
    // The sample regime follows the spec; at xi_a = inf the gain factor is
    // exactly 1 and the semidefiniteness bound holds trivially either way.
    let acc = acc.with_regime(spec.regime);
    acc.validate_regime()?;
    Ok(acc)
}

/// Draw one cavity sample from the random-Hamiltonian model.
///
/// The cavity reflection matrix at the working frequency (band center) is
/// `r = 1 - 2 pi i W^T (omega - H + i pi W W^T -+ i/(2 tau_a))^{-1} W`
/// with `H` an `M x M` Gaussian orthogonal random matrix with unit mean
/// level spacing at the center, `W` the coupling matrix of `N` ideal
/// channels, and `1/tau_a = gamma N / (2 pi)`. The result is embedded as a
/// `2N x 2N` scattering matrix with `t = 0` (no transmission) and a
/// perfectly reflecting back port.
pub fn sample_cavity(spec: &CavitySpec, seed: RngSeed) -> Result<ScatteringMatrix> {
    spec.validate()?;
    let mut rng = seed.stream();
    let n = spec.n_modes;
    let m = spec.n_levels;

    // GOE with semicircle level density 1/(unit spacing) at the center:
    // off-diagonal variance M/pi^2, diagonal doubled.
    let sigma = (m as f64).sqrt() / std::f64::consts::PI;
    let mut h = ComplexMatrix::zeros(m, m);
    for i in 0..m {
        let d: f64 = rng.sample(StandardNormal);
        h[(i, i)] = c(sigma * std::f64::consts::SQRT_2 * d, 0.0);
        for j in (i + 1)..m {
            let x: f64 = rng.sample(StandardNormal);
            h[(i, j)] = c(sigma * x, 0.0);
            h[(j, i)] = h[(i, j)];
        }
    }

    // Ideal coupling: pi W^T W = (M/pi) * 1_N; amplification shifts every
    // pole up by 1/(2 tau_a).
    let pi = std::f64::consts::PI;
    let coupling = m as f64 / pi; // pi w^2
    let half_rate = spec.gamma * n as f64 / (4.0 * pi); // 1/(2 tau_a)
    let rate_sign = match spec.regime {
        Regime::Amplifying => -1.0,
        Regime::Absorbing => 1.0,
        Regime::Unitary => 0.0,
    };
    let mut k = h.scale(c(-1.0, 0.0));
    for i in 0..m {
        let width = if i < n { coupling } else { 0.0 };
        k[(i, i)] += c(0.0, width + rate_sign * half_rate);
    }

    // r = 1 - 2 i (M/pi) * (K^{-1})_{channel block}
    let lu = Lu::factor(&k).map_err(|_| {
        Error::ThresholdCrossed("cavity resolvent is singular at the working frequency".into())
    })?;
    let mut rhs = ComplexMatrix::zeros(m, n);
    for j in 0..n {
        rhs[(j, j)] = c(1.0, 0.0);
    }
    let g = lu.solve_mat(&rhs);
    let mut r = ComplexMatrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            r[(i, j)] -= c(0.0, 2.0 * coupling) * g[(i, j)];
        }
    }
    r.symmetrize();

    let blocks = Blocks {
        r_prime: r,
        t_prime: ComplexMatrix::zeros(n, n),
        t: ComplexMatrix::zeros(n, n),
        r: ComplexMatrix::identity(n),
    };
    let sm = ScatteringMatrix::from_blocks(&blocks, spec.regime)?;
    sm.validate_regime().map_err(|_| {
        Error::ThresholdCrossed(
            "cavity sample violates the gain-deficit bound; a resolvent pole has crossed the \
             real axis"
                .into(),
        )
    })?;
    Ok(sm)
}

/// Scattering matrix of a single resonance at frequency `omega`:
/// `S_nm = sigma_n sigma_m / (omega - omega_th + i Gamma/2 - i/(2 tau_a))`.
///
/// This is a resonant approximation: it is reciprocal and rank one but does
/// not satisfy the global gain-deficit bound, so no regime validation is
/// applied.
pub fn sample_pole_matrix(spec: &PoleSpec, omega: f64) -> Result<ScatteringMatrix> {
    spec.validate()?;
    let denom = c(omega - spec.resonance, 0.5 * (spec.decay - spec.amp_rate));
    let total = spec.total_coupling();
    if denom.norm() < 1e-12 * total {
        return Err(Error::ThresholdCrossed(format!(
            "pole denominator |{denom}| below 1e-12 * Sigma = {:.3e}",
            1e-12 * total
        )));
    }
    let dim = spec.couplings.len();
    let s = ComplexMatrix::from_fn(dim, dim, |i, j| spec.couplings[i] * spec.couplings[j] / denom);
    Ok(ScatteringMatrix::from_blocks_unchecked(
        &Blocks {
            r_prime: s.submatrix(0, 0, dim / 2, dim / 2),
            t_prime: s.submatrix(0, dim / 2, dim / 2, dim / 2),
            t: s.submatrix(dim / 2, 0, dim / 2, dim / 2),
            r: s.submatrix(dim / 2, dim / 2, dim / 2, dim / 2),
        },
        Regime::Amplifying,
    ))
}
