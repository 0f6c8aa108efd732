//! Diffraction coefficients: the kernel of the half Klein-Gordon
//! propagator at time pi on the cone link.
//!
//! For a circle link of circumference alpha the kernel has the closed form
//!
//!   D(alpha, delta) = (i / (2 alpha)) [ cot(pi (delta - pi) / alpha)
//!                                     - cot(pi (delta + pi) / alpha) ]
//!
//! with delta = theta_in - theta_out, obtained by Abel summation of the
//! exact mode sum (1/alpha) sum_{k in Z} e^{-i pi |2 pi k / alpha|}
//! e^{2 pi i k delta / alpha}: damping each mode by e^{-pi eps nu_k} turns
//! the two half-sums into convergent geometric series whose eps -> 0 limits
//! are -1/2 + (i/2) cot(pi (delta -+ pi) / alpha). The kernel is taken with
//! respect to the link's arc-length measure.
//!
//! The kernel is singular where delta is congruent to +-pi mod alpha (entry
//! and exit joined by a link geodesic of length pi, wrapping allowed); those
//! configurations are errors, never values.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Guard radius around the singular set of the coefficient evaluators.
/// Coarser than the geometry classifier because the cotangent blows up and
/// double precision degrades earlier.
pub const SINGULARITY_GUARD_TOL: f64 = 1e-6;

/// Default Abel damping schedule (halving; extrapolated to zero).
pub const DEFAULT_DAMPING_SCHEDULE: [f64; 6] = [0.004, 0.002, 0.001, 0.0005, 0.00025, 0.000125];

/// Default mode-count ceiling for the generic mode-sum evaluator.
pub const DEFAULT_MODE_TRUNCATION: usize = 400_000;

/// Default bound on the difference of successive extrapolants.
pub const DEFAULT_EXTRAPOLATION_TOL: f64 = 1e-6;

/// Per-mode damping factors below this threshold are dropped from the sum.
const DAMPING_CUTOFF: f64 = 1e-16;

#[derive(Debug, Error)]
pub enum DiffractionError {
    #[error("entry/exit pair lies within {tol} of the geometric singular set (distance {dist})")]
    GeometricSingularity { dist: f64, tol: f64 },
    #[error("mode sum did not converge: extrapolation residual {residual} exceeds {tol}")]
    NonConvergent { residual: f64, tol: f64 },
    #[error("damping schedule must be strictly decreasing and positive")]
    BadSchedule,
    #[error("link circumference must be positive, got {0}")]
    BadCircumference(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoefficientMethod {
    ClosedForm,
    ModeSum,
}

/// A finite diffraction coefficient value with its provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiffractionCoefficient {
    pub value: Complex64,
    pub method: CoefficientMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub circumference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<(f64, f64)>,
    /// Difference of the last two extrapolants (mode-sum only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extrapolation_residual: Option<f64>,
}

/// Distance from delta to the singular set {pi, -pi} modulo alpha.
pub fn singular_set_distance(alpha: f64, delta: f64) -> f64 {
    let mut best = f64::INFINITY;
    for target in [PI, -PI] {
        let d = (delta - target).rem_euclid(alpha);
        best = best.min(d.min(alpha - d));
    }
    best
}

/// Closed-form diffraction coefficient for a circle link.
pub fn diffraction_coefficient_closed(
    alpha: f64,
    theta_in: f64,
    theta_out: f64,
) -> Result<DiffractionCoefficient, DiffractionError> {
    if !(alpha > 0.0) {
        return Err(DiffractionError::BadCircumference(alpha));
    }
    let delta = theta_in - theta_out;
    let dist = singular_set_distance(alpha, delta);
    if dist <= SINGULARITY_GUARD_TOL {
        return Err(DiffractionError::GeometricSingularity {
            dist,
            tol: SINGULARITY_GUARD_TOL,
        });
    }
    let cot = |x: f64| x.cos() / x.sin();
    let value = Complex64::new(0.0, 1.0 / (2.0 * alpha))
        * (cot(PI * (delta - PI) / alpha) - cot(PI * (delta + PI) / alpha));
    Ok(DiffractionCoefficient {
        value,
        method: CoefficientMethod::ClosedForm,
        circumference: Some(alpha),
        coordinates: Some((theta_in, theta_out)),
        extrapolation_residual: None,
    })
}

/// True unless the cone is an orbifold quotient of the plane
/// (2 pi / alpha a positive integer), where the coefficient vanishes
/// identically by the pi-periodicity of the cotangent.
pub fn is_diffractive_cone(alpha: f64) -> bool {
    let ratio = 2.0 * PI / alpha;
    let nearest = ratio.round();
    !(nearest >= 1.0 && (ratio - nearest).abs() <= 1e-9)
}

/// One mode of a caller-supplied link spectrum.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpectrumMode {
    /// Laplace eigenvalue on the link; nonnegative.
    pub mu: f64,
    /// Eigenfunction value at the entry point.
    pub phi_in: Complex64,
    /// Eigenfunction value at the exit point.
    pub phi_out: Complex64,
}

/// Truncated eigendata of the link Laplacian, with the dimension fixing the
/// Klein-Gordon shift ((2-n)/2)^2.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkSpectrum {
    pub modes: Vec<SpectrumMode>,
    pub dimension: u32,
}

impl LinkSpectrum {
    pub fn shift(&self) -> f64 {
        let s = (2.0 - self.dimension as f64) / 2.0;
        s * s
    }
}

/// Validate a damping schedule: strictly decreasing, positive.
fn check_schedule(schedule: &[f64]) -> Result<(), DiffractionError> {
    if schedule.is_empty() || schedule.windows(2).any(|w| w[1] >= w[0]) || schedule[schedule.len() - 1] <= 0.0 {
        return Err(DiffractionError::BadSchedule);
    }
    Ok(())
}

/// Neville extrapolation of (eps_i, value_i) samples to eps = 0.
/// Returns the extrapolant and the difference of the last two diagonal
/// entries (the reported residual).
pub fn extrapolate_to_zero(epsilons: &[f64], values: &[Complex64]) -> (Complex64, f64) {
    let n = values.len();
    let mut table: Vec<Complex64> = values.to_vec();
    let mut diagonals = vec![table[n - 1]];
    for j in 1..n {
        for i in (j..n).rev() {
            let num = table[i] * epsilons[i - j] - table[i - 1] * epsilons[i];
            table[i] = num / (epsilons[i - j] - epsilons[i]);
        }
        diagonals.push(table[n - 1]);
    }
    let residual = if diagonals.len() >= 2 {
        (diagonals[diagonals.len() - 1] - diagonals[diagonals.len() - 2]).norm()
    } else {
        f64::NAN
    };
    (*diagonals.last().unwrap(), residual)
}

/// Abel-regularized evaluation of the half Klein-Gordon kernel at time pi
/// from a caller-supplied link spectrum.
pub fn diffraction_coefficient_modesum(
    spectrum: &LinkSpectrum,
    schedule: &[f64],
    extrapolation_tol: f64,
) -> Result<DiffractionCoefficient, DiffractionError> {
    check_schedule(schedule)?;
    if spectrum.modes.is_empty() {
        return Ok(DiffractionCoefficient {
            value: Complex64::new(0.0, 0.0),
            method: CoefficientMethod::ModeSum,
            circumference: None,
            coordinates: None,
            extrapolation_residual: Some(0.0),
        });
    }
    let shift = spectrum.shift();
    // The eps-independent part of each term.
    let terms: Vec<(f64, Complex64)> = spectrum
        .modes
        .iter()
        .map(|m| {
            let nu = (m.mu + shift).sqrt();
            let phase = Complex64::from_polar(1.0, -PI * nu);
            (nu, phase * m.phi_in * m.phi_out.conj())
        })
        .collect();
    let mut sums = Vec::with_capacity(schedule.len());
    for &eps in schedule {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(nu, c) in &terms {
            let w = (-PI * eps * nu).exp();
            // Eigenvalues are nondecreasing, so once the damping underflows
            // the remaining tail is negligible.
            if w < DAMPING_CUTOFF {
                break;
            }
            acc += c * w;
        }
        sums.push(acc);
    }
    let (value, residual) = extrapolate_to_zero(schedule, &sums);
    if schedule.len() >= 2 && !(residual <= extrapolation_tol) {
        return Err(DiffractionError::NonConvergent {
            residual,
            tol: extrapolation_tol,
        });
    }
    Ok(DiffractionCoefficient {
        value,
        method: CoefficientMethod::ModeSum,
        circumference: None,
        coordinates: None,
        extrapolation_residual: Some(residual),
    })
}

/// Real cosine/sine eigenbasis of a circle link, truncated at `k_modes`
/// frequencies, evaluated at the entry/exit coordinates.
pub fn circle_link_spectrum(
    alpha: f64,
    theta_in: f64,
    theta_out: f64,
    k_modes: usize,
) -> LinkSpectrum {
    let mut modes = Vec::with_capacity(2 * k_modes + 1);
    let norm0 = 1.0 / alpha.sqrt();
    modes.push(SpectrumMode {
        mu: 0.0,
        phi_in: Complex64::new(norm0, 0.0),
        phi_out: Complex64::new(norm0, 0.0),
    });
    let norm = (2.0 / alpha).sqrt();
    for k in 1..=k_modes {
        let freq = 2.0 * PI * k as f64 / alpha;
        let mu = freq * freq;
        modes.push(SpectrumMode {
            mu,
            phi_in: Complex64::new(norm * (freq * theta_in).cos(), 0.0),
            phi_out: Complex64::new(norm * (freq * theta_out).cos(), 0.0),
        });
        modes.push(SpectrumMode {
            mu,
            phi_in: Complex64::new(norm * (freq * theta_in).sin(), 0.0),
            phi_out: Complex64::new(norm * (freq * theta_out).sin(), 0.0),
        });
    }
    LinkSpectrum {
        modes,
        dimension: 2,
    }
}

/// Abel-damped circle mode sum using multiplicative recurrences for the
/// exponentials: the same sum as `diffraction_coefficient_modesum` over the
/// circle eigenbasis, summed termwise with truncation chosen per damping
/// value. Fast enough for dense verification grids.
pub fn abel_mode_sum_circle(
    alpha: f64,
    theta_in: f64,
    theta_out: f64,
    schedule: &[f64],
    extrapolation_tol: f64,
) -> Result<DiffractionCoefficient, DiffractionError> {
    check_schedule(schedule)?;
    if !(alpha > 0.0) {
        return Err(DiffractionError::BadCircumference(alpha));
    }
    let delta = theta_in - theta_out;
    let mut sums = Vec::with_capacity(schedule.len());
    for &eps in schedule {
        // Mode k contributes (1/alpha) q^k e^{+-i phi_{+-} k} with
        // q = e^{-2 pi^2 eps / alpha}.
        let decay = 2.0 * PI * PI * eps / alpha;
        let q = (-decay).exp();
        let k_cut = (-DAMPING_CUTOFF.ln() / decay).ceil() as usize;
        let step_plus = Complex64::from_polar(q, (2.0 * PI * delta - 2.0 * PI * PI) / alpha);
        let step_minus = Complex64::from_polar(q, (-2.0 * PI * delta - 2.0 * PI * PI) / alpha);
        let mut w_plus = Complex64::new(1.0, 0.0);
        let mut w_minus = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::new(1.0, 0.0); // k = 0 term
        for _ in 1..=k_cut {
            w_plus *= step_plus;
            w_minus *= step_minus;
            acc += w_plus + w_minus;
        }
        sums.push(acc / alpha);
    }
    let (value, residual) = extrapolate_to_zero(schedule, &sums);
    if schedule.len() >= 2 && !(residual <= extrapolation_tol) {
        return Err(DiffractionError::NonConvergent {
            residual,
            tol: extrapolation_tol,
        });
    }
    Ok(DiffractionCoefficient {
        value,
        method: CoefficientMethod::ModeSum,
        circumference: Some(alpha),
        coordinates: Some((theta_in, theta_out)),
        extrapolation_residual: Some(residual),
    })
}
