//! Independent semiclassical Monte Carlo check of the photodetection
//! formulas.
//!
//! The optical equivalence theorem replaces mode operators by classical
//! amplitudes: the coherent input becomes the constant vector
//! `a_in = sqrt(tau I0) e_{m0}`, and the spontaneous emission becomes a
//! vector `c` of circular complex Gaussians with per-quadrature variance
//! `|f|/2`, coupled through a matrix `V` with `V V^dagger = S S^dagger - 1`
//! and entering conjugated:
//!
//! ```text
//!     a_out = S a_in + V conj(c).
//! ```
//!
//! In the long-time regime one frequency bin of width `2 pi / tau`
//! contributes, and the integrated intensity on the detected side is
//! `W = alpha sum_detected |a_out_n|^2`. Factorial cumulants of the count
//! equal ordinary cumulants of `W`, and the count itself is a Poisson
//! mixture over `W`. This module shares no code path with the closed
//! formulas it validates; keep it free of `photostat` imports.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::ensembles::{spec_hash, RngSeed};
use crate::exec::{map_samples, ExecMode};
use crate::linalg::{c, hermitian_sqrt_psd, ComplexMatrix};
use crate::photostat::DetectionConfig;
use crate::scatter::{ScatteringMatrix, Side};
use crate::stats::{batch_statistic, variance};
use crate::{Error, Result};

/// Number of contiguous batches used for Monte Carlo error bars.
pub const N_BATCHES: usize = 20;

/// Hermitian PSD factor `V` with `V V^dagger = S S^dagger - 1`. Any factor
/// with that Gram matrix gives the same observables; the Hermitian root is
/// used here, and tests cross-check against a Cholesky factor.
pub fn noise_factor(sm: &ScatteringMatrix) -> Result<ComplexMatrix> {
    let dim = 2 * sm.n_modes();
    let gram = sm.matrix().matmul(&sm.matrix().adjoint()).sub(&ComplexMatrix::identity(dim));
    let norm2 = {
        let f = sm.matrix().frobenius_norm();
        f * f
    };
    hermitian_sqrt_psd(&gram, 1e-10 * norm2.max(1.0)).map_err(|_| {
        Error::InvariantViolation(
            "S S^dagger - 1 is not PSD; the semiclassical noise factor needs an amplifying \
             (or unitary) matrix"
                .into(),
        )
    })
}

/// One draw of the semiclassical amplitudes and the resulting integrated
/// intensity.
#[derive(Debug, Clone)]
pub struct SemiclassicalSample {
    pub c_amplitudes: Vec<Complex64>,
    pub a_in: Complex64,
    pub w: f64,
}

/// Reusable sampler for one `(matrix, detection)` pair.
pub struct WSampler {
    coherent_out: Vec<Complex64>,
    factor: ComplexMatrix,
    detected: std::ops::Range<usize>,
    alpha: f64,
    quad_sigma: f64,
    a_in: Complex64,
}

impl WSampler {
    pub fn new(sm: &ScatteringMatrix, cfg: &DetectionConfig) -> Result<Self> {
        cfg.validate()?;
        let n = sm.n_modes();
        if cfg.m0 >= n {
            return Err(Error::Structural(format!(
                "input mode {} out of range for N = {n}",
                cfg.m0
            )));
        }
        let factor = noise_factor(sm)?;
        let a_in = c(cfg.i0 * cfg.tau, 0.0).sqrt();
        let coherent_out: Vec<Complex64> =
            sm.matrix().column(cfg.m0).iter().map(|s| s * a_in).collect();
        let detected = match cfg.side {
            Side::Transmission => n..2 * n,
            Side::Reflection => 0..n,
        };
        Ok(Self {
            coherent_out,
            factor,
            detected,
            alpha: cfg.alpha,
            quad_sigma: (cfg.f.abs() / 2.0).sqrt(),
            a_in,
        })
    }

    /// Draw the noise amplitudes and return the integrated intensity.
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        self.draw(rng).w
    }

    pub fn draw(&self, rng: &mut impl Rng) -> SemiclassicalSample {
        let dim = self.coherent_out.len();
        let c_amplitudes: Vec<Complex64> = (0..dim)
            .map(|_| {
                c(
                    self.quad_sigma * rng.sample::<f64, _>(StandardNormal),
                    self.quad_sigma * rng.sample::<f64, _>(StandardNormal),
                )
            })
            .collect();
        let conj: Vec<Complex64> = c_amplitudes.iter().map(|z| z.conj()).collect();
        let noise = self.factor.mul_vec(&conj);
        let mut w = 0.0;
        for i in self.detected.clone() {
            w += (self.coherent_out[i] + noise[i]).norm_sqr();
        }
        SemiclassicalSample { c_amplitudes, a_in: self.a_in, w: self.alpha * w }
    }
}

/// Single draw of `W` for the given per-sample seed.
pub fn sample_w(sm: &ScatteringMatrix, cfg: &DetectionConfig, seed: RngSeed) -> Result<f64> {
    let sampler = WSampler::new(sm, cfg)?;
    Ok(sampler.sample(&mut seed.stream()))
}

/// Monte Carlo estimates of the first two cumulants of the photocount.
#[derive(Debug, Clone, Serialize)]
pub struct CumulantEstimate {
    pub kappa1: f64,
    pub kappa2: f64,
    pub stderr1: f64,
    pub stderr2: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub spec_hash: String,
}

impl CumulantEstimate {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("estimate serialization cannot fail")
    }
}

/// Estimate `kappa_1 = mean(W)` and `kappa_2 = var(W)` from `n_samples`
/// independent draws on counter-based streams, with batch-means standard
/// errors over [`N_BATCHES`] contiguous index ranges.
pub fn estimate_cumulants(
    sm: &ScatteringMatrix,
    cfg: &DetectionConfig,
    n_samples: u64,
    seed: RngSeed,
) -> Result<CumulantEstimate> {
    if n_samples < 1000 {
        return Err(Error::InvalidSpec(format!(
            "need at least 1000 samples for stable error bars, got {n_samples}"
        )));
    }
    let sampler = WSampler::new(sm, cfg)?;
    let ws: Vec<f64> = map_samples(n_samples, ExecMode::default(), |i| {
        sampler.sample(&mut RngSeed::new(seed.base_seed, seed.sample_index + i).stream())
    });
    let kappa1 = ws.iter().sum::<f64>() / ws.len() as f64;
    let kappa2 = variance(&ws);
    let (_, stderr1) = batch_statistic(&ws, N_BATCHES, |b| b.iter().sum::<f64>() / b.len() as f64);
    let (_, stderr2) = batch_statistic(&ws, N_BATCHES, variance);
    Ok(CumulantEstimate {
        kappa1,
        kappa2,
        stderr1,
        stderr2,
        n_samples,
        seed: seed.base_seed,
        spec_hash: spec_hash(&(sm.to_json(), cfg)),
    })
}

/// Empirical photocount histogram: each draw of `W` feeds a Poisson count
/// (the Poisson mixture realizes the normally ordered expectation).
/// Returns counts of `n = 0, 1, 2, ...` up to the largest observed value.
pub fn estimate_photocounts(
    sm: &ScatteringMatrix,
    cfg: &DetectionConfig,
    n_samples: u64,
    seed: RngSeed,
) -> Result<Vec<u64>> {
    let sampler = WSampler::new(sm, cfg)?;
    let counts: Vec<u64> = map_samples(n_samples, ExecMode::default(), |i| {
        let mut rng = RngSeed::new(seed.base_seed, seed.sample_index + i).stream();
        let w = sampler.sample(&mut rng);
        poisson_draw(&mut rng, w)
    });
    let max = counts.iter().copied().max().unwrap_or(0) as usize;
    let mut hist = vec![0u64; max + 1];
    for k in counts {
        hist[k as usize] += 1;
    }
    Ok(hist)
}

/// Poisson sampler: sequential inversion below mean 30, transformed
/// rejection (PTRS) above. The rejection method keeps the tails honest
/// without a normal approximation.
pub fn poisson_draw(rng: &mut impl Rng, lambda: f64) -> u64 {
    assert!(lambda >= 0.0 && lambda.is_finite(), "Poisson mean must be finite, got {lambda}");
    if lambda == 0.0 {
        return 0;
    }
    if lambda < 30.0 {
        let target = rng.gen::<f64>();
        let mut pmf = (-lambda).exp();
        let mut cdf = pmf;
        let mut k = 0u64;
        while target > cdf && k < 10_000 {
            k += 1;
            pmf *= lambda / k as f64;
            cdf += pmf;
        }
        k
    } else {
        let b = 0.931 + 2.53 * lambda.sqrt();
        let a = -0.059 + 0.02483 * b;
        let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        let v_r = 0.9277 - 3.6224 / (b - 2.0);
        let ln_lambda = lambda.ln();
        loop {
            let u = rng.gen::<f64>() - 0.5;
            let v = rng.gen::<f64>();
            let us = 0.5 - u.abs();
            let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
            if us >= 0.07 && v <= v_r {
                return k as u64;
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            let lhs = (v * inv_alpha / (a / (us * us) + b)).ln();
            let rhs = k * ln_lambda - lambda - statrs::function::gamma::ln_gamma(k + 1.0);
            if lhs <= rhs {
                return k as u64;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Cholesky;
    use crate::scatter::Regime;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_amplifier(g: f64) -> ScatteringMatrix {
        ScatteringMatrix::uniform_transmission(1, g.sqrt())
    }

    fn cfg(f: f64, i0: f64, side: Side) -> DetectionConfig {
        DetectionConfig::new(1.0, f, 0, i0, 1.0, side).unwrap()
    }

    #[test]
    fn noiseless_propagation_is_deterministic() {
        // f -> 0: W = alpha tau I0 (t^dagger t)_{m0 m0} exactly.
        let sm = ScatteringMatrix::uniform_transmission(2, 1.0);
        let cfg = cfg(0.0, 2.5, Side::Transmission);
        for i in 0..5 {
            let w = sample_w(&sm, &cfg, RngSeed::new(3, i)).unwrap();
            assert_relative_eq!(w, 2.5, max_relative = 1e-12);
        }
    }

    #[test]
    fn scalar_mean_includes_spontaneous_term() {
        // E[W] = alpha tau I0 G + alpha |f| (G - 1) per frequency bin.
        let g = 2.0;
        let sm = scalar_amplifier(g);
        let cfg = cfg(-1.0, 1.0, Side::Transmission);
        let est = estimate_cumulants(&sm, &cfg, 100_000, RngSeed::new(11, 0)).unwrap();
        let expect = g + (g - 1.0);
        assert!(
            (est.kappa1 - expect).abs() < 3.0 * est.stderr1,
            "kappa1 = {} +- {} vs {expect}",
            est.kappa1,
            est.stderr1
        );
    }

    #[test]
    fn zero_input_mean_matches_deficit_trace() {
        // I0 = 0: E[W] = -alpha f tr_detected(V V^dagger) = alpha f tr D.
        let g = 2.0;
        let sm = scalar_amplifier(g);
        let cfg = cfg(-1.0, 0.0, Side::Transmission);
        let est = estimate_cumulants(&sm, &cfg, 100_000, RngSeed::new(13, 0)).unwrap();
        let expect = g - 1.0;
        assert!((est.kappa1 - expect).abs() < 3.0 * est.stderr1);
    }

    #[test]
    fn unitary_medium_has_no_excess_variance() {
        let sm = ScatteringMatrix::uniform_transmission(1, 1.0);
        let cfg = cfg(-1.0, 3.0, Side::Transmission);
        let est = estimate_cumulants(&sm, &cfg, 50_000, RngSeed::new(17, 0)).unwrap();
        assert!(est.kappa2.abs() < 3.0 * est.stderr2.max(1e-12), "kappa2 = {}", est.kappa2);
    }

    #[test]
    fn scalar_variance_matches_closed_form() {
        // Var W = 2 G (G-1) tau I0 |f| + (G-1)^2 f^2 at alpha = 1.
        let g = 2.0;
        let sm = scalar_amplifier(g);
        let cfg = cfg(-1.0, 1.0, Side::Transmission);
        let est = estimate_cumulants(&sm, &cfg, 200_000, RngSeed::new(19, 0)).unwrap();
        let expect = 2.0 * g * (g - 1.0) + (g - 1.0) * (g - 1.0);
        assert!(
            (est.kappa2 - expect).abs() < 3.0 * est.stderr2,
            "kappa2 = {} +- {} vs {expect}",
            est.kappa2,
            est.stderr2
        );
    }

    #[test]
    fn hermitian_and_cholesky_factors_give_same_observables() {
        // Observables depend on V only through V V^dagger. Compare the
        // Hermitian-root sampler against a Cholesky-factor sampler on a
        // strictly amplifying cavity.
        let spec = crate::ensembles::CavitySpec::new(2, 0.4, Regime::Amplifying, 30).unwrap();
        let sm = crate::ensembles::sample_cavity(&spec, RngSeed::new(23, 0)).unwrap();
        let cfg = cfg(-1.0, 1.0, Side::Reflection);

        let est = estimate_cumulants(&sm, &cfg, 100_000, RngSeed::new(29, 0)).unwrap();

        // Cholesky-based factor of S S^dagger - 1 (strictly PD here).
        let dim = 4;
        let gram =
            sm.matrix().matmul(&sm.matrix().adjoint()).sub(&ComplexMatrix::identity(dim));
        assert!(Cholesky::factor(&gram).is_ok(), "cavity gain deficit should be strictly PD");
        let mut lower = ComplexMatrix::zeros(dim, dim);
        for j in 0..dim {
            let mut d = gram[(j, j)].re;
            for k in 0..j {
                d -= lower[(j, k)].norm_sqr();
            }
            let dj = d.sqrt();
            lower[(j, j)] = crate::linalg::c(dj, 0.0);
            for i in (j + 1)..dim {
                let mut s = gram[(i, j)];
                for k in 0..j {
                    s -= lower[(i, k)] * lower[(j, k)].conj();
                }
                lower[(i, j)] = s / dj;
            }
        }

        let coherent: Vec<Complex64> = sm.matrix().column(0).to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n_samples = 100_000;
        let mut ws = Vec::with_capacity(n_samples);
        for _ in 0..n_samples {
            let cvec: Vec<Complex64> = (0..dim)
                .map(|_| {
                    crate::linalg::c(
                        (0.5f64).sqrt() * rng.sample::<f64, _>(StandardNormal),
                        (0.5f64).sqrt() * rng.sample::<f64, _>(StandardNormal),
                    )
                })
                .collect();
            let conj: Vec<Complex64> = cvec.iter().map(|z| z.conj()).collect();
            let noise = lower.mul_vec(&conj);
            let mut w = 0.0;
            for i in 0..2 {
                w += (coherent[i] + noise[i]).norm_sqr();
            }
            ws.push(w);
        }
        let mean = ws.iter().sum::<f64>() / ws.len() as f64;
        let var = variance(&ws);
        assert!((mean - est.kappa1).abs() < 4.0 * est.stderr1, "{mean} vs {}", est.kappa1);
        assert!((var - est.kappa2).abs() < 4.0 * est.stderr2, "{var} vs {}", est.kappa2);
    }

    #[test]
    fn noise_factor_rejects_absorbing_matrices() {
        let sm = ScatteringMatrix::uniform_transmission(1, 0.5);
        assert!(noise_factor(&sm).is_err());
    }

    #[test]
    fn w_is_nonnegative() {
        let spec = crate::ensembles::CavitySpec::new(3, 0.5, Regime::Amplifying, 40).unwrap();
        let sm = crate::ensembles::sample_cavity(&spec, RngSeed::new(41, 0)).unwrap();
        let cfg = cfg(-1.0, 0.7, Side::Reflection);
        let sampler = WSampler::new(&sm, &cfg).unwrap();
        for i in 0..2000 {
            let w = sampler.sample(&mut RngSeed::new(43, i).stream());
            assert!(w >= 0.0);
        }
    }

    #[test]
    fn estimator_error_shrinks_with_sample_count() {
        let sm = scalar_amplifier(2.0);
        let cfg = cfg(-1.0, 1.0, Side::Transmission);
        let small = estimate_cumulants(&sm, &cfg, 10_000, RngSeed::new(47, 0)).unwrap();
        let large = estimate_cumulants(&sm, &cfg, 1_000_000, RngSeed::new(47, 0)).unwrap();
        let ratio = small.stderr1 / large.stderr1;
        assert!(
            ratio > 5.0 && ratio < 20.0,
            "expected ~10x error reduction from 100x samples, got {ratio}"
        );
    }

    #[test]
    fn wrong_conjugation_variance_breaks_the_cumulants() {
        // Treating the noise as coupled without conjugation assigns the
        // classical variance -(1 + f) instead of -f; at full inversion the
        // spontaneous noise then vanishes entirely and kappa_2 collapses.
        let spec = crate::ensembles::CavitySpec::new(2, 0.4, Regime::Amplifying, 30).unwrap();
        let sm = crate::ensembles::sample_cavity(&spec, RngSeed::new(53, 0)).unwrap();
        let cfg = cfg(-1.0, 1.0, Side::Reflection);
        let est = estimate_cumulants(&sm, &cfg, 50_000, RngSeed::new(59, 0)).unwrap();
        // With the wrong pairing the classical variance is -(1 + f), which
        // vanishes at f = -1: W becomes deterministic and kappa_2 drops to
        // zero. The correct sampler must sit many sigma away from that.
        assert!(
            est.kappa2 > 5.0 * est.stderr2,
            "kappa2 = {} +- {} should be resolvably nonzero",
            est.kappa2,
            est.stderr2
        );
    }

    #[test]
    fn poisson_sampler_matches_pmf_small_and_large_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for &lambda in &[3.0f64, 80.0] {
            let n = 100_000;
            let top = (lambda + 8.0 * lambda.sqrt()) as usize;
            let mut counts = vec![0u64; top + 1];
            for _ in 0..n {
                let k = poisson_draw(&mut rng, lambda) as usize;
                if k <= top {
                    counts[k] += 1;
                }
            }
            let expected: Vec<f64> = (0..=top)
                .map(|k| n as f64 * crate::stats::poisson_pmf(k as u64, lambda))
                .collect();
            let (_, _, p) = crate::stats::chi_square_gof(&counts, &expected, 5.0);
            assert!(p > 0.005, "lambda = {lambda}: p = {p}");
        }
    }

    #[test]
    fn photocount_histogram_of_unitary_medium_is_poisson() {
        let sm = ScatteringMatrix::uniform_transmission(1, 1.0);
        let mean = 4.0;
        let cfg = cfg(0.0, mean, Side::Transmission);
        let hist = estimate_photocounts(&sm, &cfg, 100_000, RngSeed::new(67, 0)).unwrap();
        let expected: Vec<f64> = (0..hist.len())
            .map(|k| 100_000.0 * crate::stats::poisson_pmf(k as u64, mean))
            .collect();
        let (_, _, p) = crate::stats::chi_square_gof(&hist, &expected, 5.0);
        assert!(p > 0.01, "chi-square p = {p}");
    }

    #[test]
    fn spontaneous_only_histogram_has_thermal_tail() {
        // I0 = 0, single mode, G = 2: geometric (Bose-Einstein) counts.
        let sm = scalar_amplifier(2.0);
        let cfg = cfg(-1.0, 0.0, Side::Transmission);
        let n = 200_000u64;
        let hist = estimate_photocounts(&sm, &cfg, n, RngSeed::new(71, 0)).unwrap();
        let est = estimate_cumulants(&sm, &cfg, n, RngSeed::new(71, 0)).unwrap();
        let mean_hist: f64 =
            hist.iter().enumerate().map(|(k, &c)| k as f64 * c as f64).sum::<f64>() / n as f64;
        assert!((mean_hist - est.kappa1).abs() < 0.02);
        // geometric distribution with mean nbar: p(n) ~ nbar^n/(1+nbar)^{n+1}
        let nbar = 1.0f64;
        let expected: Vec<f64> = (0..hist.len())
            .map(|k| n as f64 * nbar.powi(k as i32) / (1.0 + nbar).powi(k as i32 + 1))
            .collect();
        let (_, _, p) = crate::stats::chi_square_gof(&hist, &expected, 5.0);
        assert!(p > 0.01, "thermal histogram p = {p}");
    }
}
