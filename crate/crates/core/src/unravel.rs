//! Diffusive unravelings `U(Θ, Υ)` and the coarse-graining relation.
//!
//! An unraveling of `L` decoherence channels is described by the detection
//! efficiencies `Θ = diag(η_1, …, η_L)` and a complex symmetric correlation
//! matrix `Υ`. Both are packed into the real `2L × 2L` matrix
//!
//! ```text
//! U(Θ, Υ) = ½ [ Θ + Re Υ    Im Υ     ]
//!             [ Im Υ        Θ − Re Υ ]
//! ```
//!
//! which must be positive semidefinite for the unraveling to be physical.
//! Unphysical instances can still be built (the feasibility solver and its
//! tests probe the outside of the cone); they carry `is_valid() == false`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, DEFAULT_PSD_TOL};

/// Asymmetry of `Υ` tolerated (and symmetrized away) on construction.
pub const UPSILON_SYMMETRY_TOL: f64 = 1e-9;

/// Slack used by the analytic single-channel cone test.
pub const CONE_SLACK: f64 = 1e-12;

/// The real `2L × 2L` block form of an unraveling.
#[derive(Debug, Clone, PartialEq)]
pub struct RealUForm(DMatrix<f64>);

impl RealUForm {
    pub fn from_parts(theta: &[f64], upsilon: &DMatrix<Complex64>) -> Self {
        let l = theta.len();
        let mut m = DMatrix::zeros(2 * l, 2 * l);
        for i in 0..l {
            for j in 0..l {
                let u = upsilon[(i, j)];
                let th = if i == j { theta[i] } else { 0.0 };
                m[(i, j)] = 0.5 * (th + u.re);
                m[(i + l, j + l)] = 0.5 * (th - u.re);
                m[(i, j + l)] = 0.5 * u.im;
                m[(i + l, j)] = 0.5 * u.im;
            }
        }
        RealUForm(m)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.0)
    }

    pub fn is_psd(&self) -> bool {
        // Symmetric by construction, so the asymmetry check cannot fail.
        linalg::is_psd(&self.0, DEFAULT_PSD_TOL).unwrap_or(false)
    }
}

impl std::ops::Sub for &RealUForm {
    type Output = RealUForm;

    fn sub(self, rhs: &RealUForm) -> RealUForm {
        RealUForm(&self.0 - &rhs.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnravelingMatrix {
    theta: Vec<f64>,
    upsilon: DMatrix<Complex64>,
    real: RealUForm,
    valid: bool,
}

impl UnravelingMatrix {
    /// Number of decoherence channels `L`.
    pub fn channels(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn upsilon(&self) -> &DMatrix<Complex64> {
        &self.upsilon
    }

    pub fn real_form(&self) -> &RealUForm {
        &self.real
    }

    /// Whether `U(Θ, Υ)` is PSD within the scale-aware tolerance.
    pub fn is_valid(&self) -> bool {
        self.valid
    }

    /// Single-channel unraveling `U(η, υ)`.
    pub fn scalar(eta: f64, upsilon: Complex64) -> Result<Self> {
        build_unraveling(&[eta], &DMatrix::from_element(1, 1, upsilon))
    }

    /// Same unraveling with every efficiency and correlation scaled by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let theta: Vec<f64> = self.theta.iter().map(|t| t * s).collect();
        build_unraveling(&theta, &self.upsilon.map(|u| u * s))
    }
}

pub fn build_unraveling(theta: &[f64], upsilon: &DMatrix<Complex64>) -> Result<UnravelingMatrix> {
    let l = theta.len();
    if l == 0 {
        return Err(Error::InvalidParameter("an unraveling needs at least one channel".into()));
    }
    if upsilon.nrows() != l || upsilon.ncols() != l {
        return Err(Error::DimensionMismatch {
            expected: l,
            got: upsilon.nrows().max(upsilon.ncols()),
        });
    }
    for (channel, &value) in theta.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::EfficiencyOutOfRange { channel, value });
        }
    }
    let mut asym = 0.0_f64;
    for i in 0..l {
        for j in (i + 1)..l {
            asym = asym.max((upsilon[(i, j)] - upsilon[(j, i)]).norm());
        }
    }
    if asym > UPSILON_SYMMETRY_TOL {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let upsilon = (upsilon + upsilon.transpose()).map(|u| u * 0.5);
    let real = RealUForm::from_parts(theta, &upsilon);
    let valid = real.is_psd();
    Ok(UnravelingMatrix {
        theta: theta.to_vec(),
        upsilon,
        real,
        valid,
    })
}

/// Scale-aware PSD test for a real symmetric matrix.
pub fn is_psd(m: &DMatrix<f64>, tol: f64) -> Result<bool> {
    linalg::is_psd(m, tol)
}

/// Uniform-phase dyne scheme `dV_l = e^{iφ} √η dW_l`: `Θ = ηI`, `Υ = η e^{2iφ} I`.
///
/// `φ = 0` is the information-carrying current, `φ = π/2` pure noise.
pub fn dyne_unraveling(l: usize, eta: f64, phi: f64) -> Result<UnravelingMatrix> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::EfficiencyOutOfRange {
            channel: 0,
            value: eta,
        });
    }
    let phase = Complex64::from_polar(eta, 2.0 * phi);
    let upsilon = DMatrix::from_diagonal_element(l, l, phase);
    build_unraveling(&vec![eta; l], &upsilon)
}

/// `U0 − Uk` and whether it is PSD, i.e. whether `Uk` is obtainable from
/// `U0` by discarding part of the record.
pub fn coarse_grain_residual(
    u0: &UnravelingMatrix,
    uk: &UnravelingMatrix,
) -> Result<(RealUForm, bool)> {
    if u0.channels() != uk.channels() {
        return Err(Error::DimensionMismatch {
            expected: u0.channels(),
            got: uk.channels(),
        });
    }
    let residual = u0.real_form() - uk.real_form();
    let ok = residual.is_psd();
    Ok((residual, ok))
}

/// Closed-form single-channel validity: `|υ| ≤ η`.
pub fn cone_condition_l1(eta: f64, upsilon: Complex64) -> bool {
    upsilon.norm() <= eta + CONE_SLACK
}

/// Wire format of a single unraveling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnravelingJson {
    #[serde(rename = "L")]
    pub l: usize,
    pub theta: Vec<f64>,
    pub upsilon_re: Vec<Vec<f64>>,
    pub upsilon_im: Vec<Vec<f64>>,
}

impl From<&UnravelingMatrix> for UnravelingJson {
    fn from(u: &UnravelingMatrix) -> Self {
        let l = u.channels();
        let rows = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
            (0..l)
                .map(|i| (0..l).map(|j| f(&u.upsilon[(i, j)])).collect())
                .collect()
        };
        UnravelingJson {
            l,
            theta: u.theta.clone(),
            upsilon_re: rows(|c| c.re),
            upsilon_im: rows(|c| c.im),
        }
    }
}

impl TryFrom<&UnravelingJson> for UnravelingMatrix {
    type Error = Error;

    fn try_from(j: &UnravelingJson) -> Result<Self> {
        let l = j.l;
        if j.theta.len() != l {
            return Err(Error::DimensionMismatch {
                expected: l,
                got: j.theta.len(),
            });
        }
        for rows in [&j.upsilon_re, &j.upsilon_im] {
            if rows.len() != l {
                return Err(Error::DimensionMismatch {
                    expected: l,
                    got: rows.len(),
                });
            }
            if let Some(bad) = rows.iter().find(|r| r.len() != l) {
                return Err(Error::DimensionMismatch {
                    expected: l,
                    got: bad.len(),
                });
            }
        }
        let upsilon =
            DMatrix::from_fn(l, l, |r, c| Complex64::new(j.upsilon_re[r][c], j.upsilon_im[r][c]));
        build_unraveling(&j.theta, &upsilon)
    }
}
