//! Scattering matrices of two-sided multimode media.
//!
//! A medium embedded in an `N`-mode waveguide is described by a `2N x 2N`
//! scattering matrix relating incoming to outgoing mode amplitudes, with
//! modes `1..N` on the left and `N+1..2N` on the right. The block layout is
//!
//! ```text
//!     S = [ r'  t' ]
//!         [ t   r  ]
//! ```
//!
//! where `r'` reflects left-incident waves, `t` transmits left to right,
//! `t'` transmits right to left and `r` reflects right-incident waves.
//! Reciprocity forces `t' = t^T`, `r = r^T`, `r' = r'^T`. An amplifying
//! medium has `S S^dagger - 1` positive semidefinite, an absorbing one the
//! complement; the deficit matrix `1 - r r^dagger - t t^dagger` measures how
//! far from flux conservation the medium operates and sets the strength of
//! the spontaneous-emission noise.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{c, condition_1norm, is_psd_within, ComplexMatrix, Lu};
use crate::{Error, Result};

/// Relative tolerance for the reciprocity check `S = S^T`.
pub const RECIPROCITY_RTOL: f64 = 1e-10;
/// Relative (to `|S|_F^2`) tolerance for the semidefiniteness checks.
pub const PSD_RTOL: f64 = 1e-10;
/// Absolute tolerance on `|S S^dagger - 1|` for unitary matrices.
pub const UNITARITY_TOL: f64 = 1e-10;
/// Largest admissible condition number of the interior resolvent when
/// star-composing two sections; beyond this the cascade is lasing.
pub const STAR_CONDITION_LIMIT: f64 = 1e12;

/// Flux regime of a medium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Amplifying,
    Absorbing,
    Unitary,
}

/// Which side the photodetector sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Transmission,
    Reflection,
}

/// The four `N x N` blocks of a scattering matrix.
#[derive(Debug, Clone)]
pub struct Blocks {
    pub r: ComplexMatrix,
    pub t: ComplexMatrix,
    pub r_prime: ComplexMatrix,
    pub t_prime: ComplexMatrix,
}

/// A validated `2N x 2N` scattering matrix.
#[derive(Debug, Clone)]
pub struct ScatteringMatrix {
    n_modes: usize,
    s: ComplexMatrix,
    regime: Regime,
}

impl ScatteringMatrix {
    /// Construct and validate shape, finiteness and reciprocity. The
    /// semidefiniteness invariant is checked separately by
    /// [`ScatteringMatrix::validate_regime`] (generators call it; resonant
    /// pole approximations are exempt).
    pub fn new(n_modes: usize, s: ComplexMatrix, regime: Regime) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::Structural("n_modes must be at least 1".into()));
        }
        if s.rows() != 2 * n_modes || s.cols() != 2 * n_modes {
            return Err(Error::Structural(format!(
                "scattering matrix must be {0}x{0}, got {1}x{2}",
                2 * n_modes,
                s.rows(),
                s.cols()
            )));
        }
        s.check_finite()?;
        let scale = s.max_abs().max(1.0);
        let sym = s.symmetry_error();
        if sym > RECIPROCITY_RTOL * scale {
            return Err(Error::NumericalConsistency(format!(
                "reciprocity violated: |S - S^T| = {sym:.3e} exceeds {RECIPROCITY_RTOL:.0e} * {scale:.3e}"
            )));
        }
        Ok(Self { n_modes, s, regime })
    }

    /// Assemble from blocks in the documented layout and validate.
    pub fn from_blocks(blocks: &Blocks, regime: Regime) -> Result<Self> {
        let s = Self::assemble(blocks);
        Self::new(blocks.r.rows(), s, regime)
    }

    /// Assemble from blocks without any validation. Intended for synthetic
    /// matrices in tests and for resonance-pole approximations that do not
    /// satisfy the full invariants.
    pub fn from_blocks_unchecked(blocks: &Blocks, regime: Regime) -> Self {
        Self { n_modes: blocks.r.rows(), s: Self::assemble(blocks), regime }
    }

    fn assemble(blocks: &Blocks) -> ComplexMatrix {
        let n = blocks.r.rows();
        let mut s = ComplexMatrix::zeros(2 * n, 2 * n);
        s.set_submatrix(0, 0, &blocks.r_prime);
        s.set_submatrix(0, n, &blocks.t_prime);
        s.set_submatrix(n, 0, &blocks.t);
        s.set_submatrix(n, n, &blocks.r);
        s
    }

    /// Ideal transparent section: `r = r' = 0`, `t = t' = amplitude * 1`.
    /// With `amplitude = 1` this is the identity of the star product; with
    /// `amplitude != 1` it is a uniform gain or loss slab.
    pub fn uniform_transmission(n_modes: usize, amplitude: f64) -> Self {
        let regime = if amplitude > 1.0 {
            Regime::Amplifying
        } else if amplitude < 1.0 {
            Regime::Absorbing
        } else {
            Regime::Unitary
        };
        let mut s = ComplexMatrix::zeros(2 * n_modes, 2 * n_modes);
        for i in 0..n_modes {
            s[(i, n_modes + i)] = c(amplitude, 0.0);
            s[(n_modes + i, i)] = c(amplitude, 0.0);
        }
        Self { n_modes, s, regime }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Relabel the regime without revalidating. The caller asserts the new
    /// label is physically right (used by generators that compose unitary
    /// sections into a medium whose regime is set by its spec).
    pub fn with_regime(mut self, regime: Regime) -> Self {
        self.regime = regime;
        self
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.s
    }

    /// The four `N x N` blocks: `r'` top-left, `t'` top-right, `t`
    /// bottom-left, `r` bottom-right.
    pub fn blocks(&self) -> Blocks {
        let n = self.n_modes;
        Blocks {
            r_prime: self.s.submatrix(0, 0, n, n),
            t_prime: self.s.submatrix(0, n, n, n),
            t: self.s.submatrix(n, 0, n, n),
            r: self.s.submatrix(n, n, n, n),
        }
    }

    /// Deficit matrix `D = 1 - r r^dagger - t t^dagger` for transmission-side
    /// statistics, or the primed analogue for reflection-side. Hermitian;
    /// `-D` is PSD for amplifying media, `D` for absorbing. The unitary
    /// regime returns the zero matrix.
    pub fn deficit_matrix(&self, side: Side) -> Result<ComplexMatrix> {
        let n = self.n_modes;
        if self.regime == Regime::Unitary {
            return Ok(ComplexMatrix::zeros(n, n));
        }
        let b = self.blocks();
        let (rr, tt) = match side {
            Side::Transmission => (&b.r, &b.t),
            Side::Reflection => (&b.r_prime, &b.t_prime),
        };
        let mut d = ComplexMatrix::identity(n)
            .sub(&rr.matmul(&rr.adjoint()))
            .sub(&tt.matmul(&tt.adjoint()));
        let herm = d.hermiticity_error();
        if herm > 1e-10 * d.max_abs().max(1.0) {
            return Err(Error::NumericalConsistency(format!(
                "deficit matrix not Hermitian: error {herm:.3e}"
            )));
        }
        d.hermitianize();
        Ok(d)
    }

    /// Check the semidefiniteness invariant appropriate to the regime.
    /// Tolerances scale with `|S|_F^2` because near-threshold amplifying
    /// matrices have large norms.
    pub fn validate_regime(&self) -> Result<()> {
        let two_n = 2 * self.n_modes;
        let gram = self.s.matmul(&self.s.adjoint()).sub(&ComplexMatrix::identity(two_n));
        let scale = {
            let f = self.s.frobenius_norm();
            f * f
        };
        match self.regime {
            Regime::Unitary => {
                let dev = gram.frobenius_norm();
                if dev > UNITARITY_TOL {
                    return Err(Error::InvariantViolation(format!(
                        "unitary matrix has |S S^dagger - 1| = {dev:.3e}"
                    )));
                }
            }
            Regime::Amplifying => {
                if !is_psd_within(&gram, PSD_RTOL * scale) {
                    return Err(Error::InvariantViolation(
                        "amplifying matrix: S S^dagger - 1 is not PSD".into(),
                    ));
                }
            }
            Regime::Absorbing => {
                if !is_psd_within(&gram.scale(c(-1.0, 0.0)), PSD_RTOL * scale) {
                    return Err(Error::InvariantViolation(
                        "absorbing matrix: 1 - S S^dagger is not PSD".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Redheffer star product of `self` (left section) with `rhs` (right
    /// section): the scattering matrix of the cascade. Fails with a
    /// threshold error when the interior resolvent `1 - r_a r_b'` is
    /// singular or has condition number above [`STAR_CONDITION_LIMIT`]
    /// (physically: the cascade lases and the linear theory breaks down).
    pub fn star_compose(&self, rhs: &ScatteringMatrix) -> Result<ScatteringMatrix> {
        if self.n_modes != rhs.n_modes {
            return Err(Error::Structural(format!(
                "star product needs equal mode counts, got {} and {}",
                self.n_modes, rhs.n_modes
            )));
        }
        let n = self.n_modes;
        let a = self.blocks();
        let b = rhs.blocks();

        let id = ComplexMatrix::identity(n);
        // x = 1 - r_a r_b' couples the right-going interior amplitudes,
        // y = 1 - r_b' r_a the left-going ones.
        let x = id.sub(&a.r.matmul(&b.r_prime));
        let y = id.sub(&b.r_prime.matmul(&a.r));

        let lasing = |detail: String| Error::ThresholdCrossed(detail);
        let lu_x = Lu::factor(&x)
            .map_err(|_| lasing("interior resolvent 1 - r_a r_b' is singular".into()))?;
        let cond = x.one_norm() * lu_x.inverse().one_norm();
        if !cond.is_finite() || cond > STAR_CONDITION_LIMIT {
            return Err(lasing(format!(
                "interior resolvent condition number {cond:.3e} exceeds {STAR_CONDITION_LIMIT:.0e}"
            )));
        }
        let lu_y = Lu::factor(&y)
            .map_err(|_| lasing("interior resolvent 1 - r_b' r_a is singular".into()))?;

        // t_c  = t_b (1 - r_a r_b')^-1 t_a
        // r_c  = r_b + t_b (1 - r_a r_b')^-1 r_a t_b'
        // t'_c = t_a' (1 - r_b' r_a)^-1 t_b'
        // r'_c = r_a' + t_a' (1 - r_b' r_a)^-1 r_b' t_a
        let xt = lu_x.solve_mat(&a.t);
        let xrt = lu_x.solve_mat(&a.r.matmul(&b.t_prime));
        let yt = lu_y.solve_mat(&b.t_prime);
        let yrt = lu_y.solve_mat(&b.r_prime.matmul(&a.t));

        let blocks = Blocks {
            t: b.t.matmul(&xt),
            r: b.r.add(&b.t.matmul(&xrt)),
            t_prime: a.t_prime.matmul(&yt),
            r_prime: a.r_prime.add(&a.t_prime.matmul(&yrt)),
        };

        let regime = match (self.regime, rhs.regime) {
            (Regime::Unitary, r) | (r, Regime::Unitary) => r,
            (Regime::Amplifying, Regime::Amplifying) => Regime::Amplifying,
            (Regime::Absorbing, Regime::Absorbing) => Regime::Absorbing,
            _ => {
                return Err(Error::Structural(
                    "cannot star-compose amplifying with absorbing sections".into(),
                ))
            }
        };
        // Reciprocity of the result follows from reciprocity of the inputs;
        // construction re-validates it (accumulated tolerance).
        let s = Self::assemble(&blocks);
        let scale = s.max_abs().max(1.0);
        let sym = s.symmetry_error();
        if sym > 1e-8 * scale {
            return Err(Error::NumericalConsistency(format!(
                "star product lost reciprocity: |S - S^T| = {sym:.3e}"
            )));
        }
        Ok(Self { n_modes: n, s, regime })
    }

    /// Condition number of the interior resolvent a cascade with `rhs`
    /// would have to invert. Exposed for threshold diagnostics.
    pub fn star_condition(&self, rhs: &ScatteringMatrix) -> Result<f64> {
        let n = self.n_modes;
        let a = self.blocks();
        let b = rhs.blocks();
        let x = ComplexMatrix::identity(n).sub(&a.r.matmul(&b.r_prime));
        condition_1norm(&x)
    }

    /// Self-describing JSON layout `{n_modes, regime, re, im}`, row-major.
    pub fn to_json(&self) -> String {
        let dto = MatrixDto {
            n_modes: self.n_modes,
            regime: self.regime,
            re: self.s.entries().iter().map(|z| z.re).collect(),
            im: self.s.entries().iter().map(|z| z.im).collect(),
        };
        serde_json::to_string(&dto).expect("matrix serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dto: MatrixDto = serde_json::from_str(text)
            .map_err(|e| Error::Structural(format!("bad matrix JSON: {e}")))?;
        if dto.re.len() != dto.im.len() {
            return Err(Error::Structural("re/im arrays differ in length".into()));
        }
        let dim = 2 * dto.n_modes;
        let entries: Vec<Complex64> =
            dto.re.iter().zip(&dto.im).map(|(&re, &im)| c(re, im)).collect();
        let s = ComplexMatrix::from_entries(dim, dim, entries)?;
        Self::new(dto.n_modes, s, dto.regime)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixDto {
    n_modes: usize,
    regime: Regime,
    re: Vec<f64>,
    im: Vec<f64>,
}
