//! Assembly of the trace-singularity symbol for strictly diffractive
//! closed chains and its conversion to a time-domain singularity of the
//! wave trace.
//!
//! For a chain of k diffractions on an n-dimensional flat surface the
//! symbol is
//!
//!   a(xi) = L0 (2 pi)^{k n / 2} e^{i k (n-3) pi / 4}
//!           chi(xi) xi^{-k(n-1)/2} prod_j i^{-m_j} D_j W_j
//!
//! with W_j = l_j^{-(n-1)/2} (flat: Theta_j = 1, m_j = 0). The leading
//! time-domain singularity is (t - L + i0)^{-1 + k(n-1)/2}, multiplied by
//! log(t - L + i0) when the power is an integer. The distributional
//! Fourier constants linking the two pictures are pinned numerically by
//! `numeric_symbol_transform` and frozen in `time_domain_singularity`.

use crate::diffraction::is_diffractive_cone;
use crate::enumerate::ClosedChain;
use crate::geometry::{ConeGraph, TransitionClass};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("chain contains a geometric transition; the symbol formula requires strict diffraction")]
    GeometricTransitionPresent,
    #[error("expected {expected} diffraction coefficients, got {got}")]
    MissingCoefficient { expected: usize, got: usize },
    #[error("diffraction coefficient {0} is not finite")]
    NonFiniteCoefficient(usize),
    #[error("quadrature did not converge: relative change {0} after refinement")]
    QuadratureNonConvergent(f64),
}

/// Smooth transition profile of the frequency cutoff chi:
/// 0 below 0, 1 above 1, infinitely smooth in between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TransitionProfile {
    /// f(x) = exp(-1/x) glue.
    #[default]
    ExpReciprocal,
    /// f(x) = exp(-1/x^2) glue; steeper shoulder.
    ExpReciprocalSquare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub profile: TransitionProfile,
}

impl CutoffSpec {
    /// Evaluate chi at xi.
    pub fn eval(&self, xi: f64) -> f64 {
        if xi <= 0.0 {
            return 0.0;
        }
        if xi >= 1.0 {
            return 1.0;
        }
        let f = |x: f64| -> f64 {
            if x <= 0.0 {
                0.0
            } else {
                match self.profile {
                    TransitionProfile::ExpReciprocal => (-1.0 / x).exp(),
                    TransitionProfile::ExpReciprocalSquare => (-1.0 / (x * x)).exp(),
                }
            }
        };
        let a = f(xi);
        let b = f(1.0 - xi);
        a / (a + b)
    }
}

/// Per-segment amplitude data entering the symbol product.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SegmentData {
    pub length: f64,
    pub morse_index: u32,
    pub theta: f64,
    pub w_factor: f64,
}

/// Flat-surface segment amplitude: Theta = 1, Morse index 0,
/// W = length^{-(n-1)/2}.
pub fn segment_amplitude(length: f64, dimension: u32) -> SegmentData {
    let exponent = -((dimension as f64 - 1.0) / 2.0);
    SegmentData {
        length,
        morse_index: 0,
        theta: 1.0,
        w_factor: length.powf(exponent),
    }
}

/// The frequency-domain symbol of one trace singularity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymbolDescriptor {
    pub location: f64,
    pub primitive_length: f64,
    pub diffraction_count: usize,
    pub dimension: u32,
    /// Decay exponent s = k(n-1)/2: a(xi) ~ prefactor * chi(xi) * xi^{-s}.
    pub exponent: f64,
    pub prefactor: Complex64,
    pub cutoff: CutoffSpec,
    /// True when some cone along the chain has an identically vanishing
    /// diffraction coefficient (orbifold cone angle), forcing prefactor 0.
    pub vanishing: bool,
}

impl SymbolDescriptor {
    /// a(xi) for the assembled chain.
    pub fn eval(&self, xi: f64) -> Complex64 {
        self.prefactor * self.cutoff.eval(xi) * xi.powf(-self.exponent)
    }
}

/// Assemble the symbol for a strictly diffractive chain given its
/// diffraction coefficients (one per transition, in chain order).
pub fn assemble_symbol(
    graph: &ConeGraph,
    chain: &ClosedChain,
    dimension: u32,
    coefficients: &[Complex64],
    cutoff: CutoffSpec,
) -> Result<SymbolDescriptor, TraceError> {
    let k = chain.diffraction_count;
    if chain
        .transitions
        .iter()
        .any(|t| t.class == TransitionClass::Geometric)
    {
        return Err(TraceError::GeometricTransitionPresent);
    }
    if coefficients.len() != k {
        return Err(TraceError::MissingCoefficient {
            expected: k,
            got: coefficients.len(),
        });
    }
    for (i, c) in coefficients.iter().enumerate() {
        if !c.re.is_finite() || !c.im.is_finite() {
            return Err(TraceError::NonFiniteCoefficient(i));
        }
    }
    let n = dimension as f64;
    let kf = k as f64;
    let vanishing = chain.transitions.iter().any(|t| {
        let alpha = graph
            .cone_point(t.cone_point)
            .expect("transition cone point exists")
            .link
            .circumference();
        !is_diffractive_cone(alpha)
    });
    let mut prefactor = if vanishing {
        Complex64::new(0.0, 0.0)
    } else {
        let amplitude = (2.0 * PI).powf(kf * n / 2.0);
        let phase = Complex64::from_polar(1.0, kf * (n - 3.0) * PI / 4.0);
        let mut product = Complex64::new(1.0, 0.0);
        for (traversal, coefficient) in chain.traversals.iter().zip(coefficients) {
            let seg = graph
                .segment(traversal.segment)
                .expect("chain references a graph segment");
            let data = segment_amplitude(seg.length, dimension);
            // i^{-m_j} = 1 on flat surfaces (m_j = 0).
            product *= coefficient * data.w_factor;
        }
        chain.primitive_length * amplitude * phase * product
    };
    if prefactor.norm() == 0.0 {
        prefactor = Complex64::new(0.0, 0.0);
    }
    Ok(SymbolDescriptor {
        location: chain.total_length,
        primitive_length: chain.primitive_length,
        diffraction_count: k,
        dimension,
        exponent: kf * (n - 1.0) / 2.0,
        prefactor,
        cutoff,
        vanishing,
    })
}

/// Predicted wave-trace singularity at t = L.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingularityDescriptor {
    pub location: f64,
    /// Exponent of (t - L + i0): -1 + k(n-1)/2, as a reduced fraction.
    pub exponent_num: i64,
    pub exponent_den: i64,
    pub exponent: f64,
    /// True iff k(n-1)/2 is an integer: the power law carries a log factor.
    pub log_flag: bool,
    pub leading_coefficient: Complex64,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Lanczos approximation of the Gamma function (g = 7, n = 9).
pub fn gamma(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = COEFFS[0];
        let t = x + 7.5;
        for (i, &c) in COEFFS.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// Convert a symbol to its leading time-domain singularity.
///
/// For non-integer s the Fourier transform of chi(xi) xi^{-s} contributes
/// Gamma(1-s) e^{-i pi (s-1)/2} (t-L+i0)^{s-1} plus smoother terms; for
/// integer s = m the leading non-smooth term is
/// -i^{m-1}/(m-1)! (t-L+i0)^{m-1} log(t-L+i0). Both constants were pinned
/// against `numeric_symbol_transform` (see the tests) before being frozen
/// here.
pub fn time_domain_singularity(symbol: &SymbolDescriptor) -> SingularityDescriptor {
    let k = symbol.diffraction_count as i64;
    let n = symbol.dimension as i64;
    // p = -1 + k(n-1)/2 as a reduced fraction.
    let (mut num, mut den) = (k * (n - 1) - 2, 2i64);
    let g = gcd(num, den);
    if g > 1 {
        num /= g;
        den /= g;
    }
    let s = symbol.exponent;
    let s_int = s.round();
    let is_int = (s - s_int).abs() < 1e-12;
    let transform_constant = if is_int {
        let m = s_int as u32;
        let factorial: f64 = (1..m).map(|i| i as f64).product();
        // -i^{m-1} / (m-1)!
        -Complex64::i().powu(m - 1) / factorial
    } else {
        Complex64::from_polar(gamma(1.0 - s), -PI * (s - 1.0) / 2.0)
    };
    SingularityDescriptor {
        location: symbol.location,
        exponent_num: num,
        exponent_den: den,
        exponent: num as f64 / den as f64,
        log_flag: is_int,
        leading_coefficient: symbol.prefactor * transform_constant,
    }
}

/// Tapered numerical quadrature of C * int e^{i (t-L) xi} chi(xi) xi^{-s} dxi,
/// evaluated on a grid of time offsets tau = t - L. Serves as the
/// independent oracle fixing the constants in `time_domain_singularity`.
pub fn numeric_symbol_transform(
    symbol: &SymbolDescriptor,
    tau_grid: &[f64],
    taper: f64,
) -> Result<Vec<Complex64>, TraceError> {
    if symbol.prefactor.norm() == 0.0 {
        return Ok(vec![Complex64::new(0.0, 0.0); tau_grid.len()]);
    }
    let coarse = transform_series(symbol, tau_grid, taper, 1.0);
    let fine = transform_series(symbol, tau_grid, taper, 2.0);
    let mut worst = 0.0f64;
    for (c, f) in coarse.iter().zip(&fine) {
        let denom = f.norm().max(1e-300);
        worst = worst.max((c - f).norm() / denom);
    }
    if worst > 1e-6 {
        return Err(TraceError::QuadratureNonConvergent(worst));
    }
    Ok(fine)
}

fn transform_series(
    symbol: &SymbolDescriptor,
    tau_grid: &[f64],
    taper: f64,
    refine: f64,
) -> Vec<Complex64> {
    let s = symbol.exponent;
    let chi = symbol.cutoff;
    // Integration cutoff where the taper has decayed below 1e-16.
    let xi_max = 37.0 / taper;
    tau_grid
        .iter()
        .map(|&tau| {
            let phase = Complex64::new(-taper, tau);
            let f = |xi: f64| -> Complex64 {
                (phase * xi).exp() * chi.eval(xi) * xi.powf(-s)
            };
            // [0, 1]: chi vanishes to all orders at 0, integrand smooth.
            let mut total = simpson(&f, 1e-12, 1.0, (2000.0 * refine) as usize);
            // [1, xi_max]: geometric panels sized to the local oscillation.
            let mut lo = 1.0f64;
            while lo < xi_max {
                let hi = (lo * 2.0).min(xi_max);
                let cycles = (tau.abs() + taper) * (hi - lo) / (2.0 * PI);
                let n = ((cycles * 48.0 * refine).ceil() as usize).clamp(128, 4_000_000);
                total += simpson(&f, lo, hi, n);
                lo = hi;
            }
            symbol.prefactor * total
        })
        .collect()
}

fn simpson(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64, n: usize) -> Complex64 {
    let n = if n % 2 == 0 { n } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += f(a + i as f64 * h) * w;
    }
    acc * h / 3.0
}

/// Assemble symbols and singularity predictions for every strictly
/// diffractive chain, summing coefficients of chains that share a location
/// and exponent. Chains with geometric transitions, and chains whose
/// coefficients cannot be evaluated (entry/exit pair on the singular set),
/// are skipped and reported.
pub fn predict_singularities(
    graph: &ConeGraph,
    chains: &[ClosedChain],
    dimension: u32,
    cutoff: CutoffSpec,
) -> (Vec<SingularityDescriptor>, Vec<String>) {
    let mut predictions: Vec<SingularityDescriptor> = Vec::new();
    let mut skipped = Vec::new();
    for (idx, chain) in chains.iter().enumerate() {
        if chain.any_geometric {
            skipped.push(format!(
                "chain {idx} (L={}) contains a geometric transition",
                chain.total_length
            ));
            continue;
        }
        let mut coefficients = Vec::with_capacity(chain.diffraction_count);
        let mut failed = None;
        for t in &chain.transitions {
            let alpha = graph
                .cone_point(t.cone_point)
                .expect("cone point exists")
                .link
                .circumference();
            match crate::diffraction::diffraction_coefficient_closed(alpha, t.theta_in, t.theta_out)
            {
                Ok(c) => coefficients.push(c.value),
                Err(e) => {
                    failed = Some(e.to_string());
                    break;
                }
            }
        }
        if let Some(reason) = failed {
            skipped.push(format!("chain {idx} (L={}): {reason}", chain.total_length));
            continue;
        }
        let symbol = match assemble_symbol(graph, chain, dimension, &coefficients, cutoff) {
            Ok(s) => s,
            Err(e) => {
                skipped.push(format!("chain {idx}: {e}"));
                continue;
            }
        };
        if symbol.vanishing {
            // No predicted singularity: the smooth/orbifold picture.
            continue;
        }
        let descriptor = time_domain_singularity(&symbol);
        // Coincident lengths with the same exponent are summed.
        match predictions.iter_mut().find(|p| {
            (p.location - descriptor.location).abs() <= 1e-9
                && p.exponent_num == descriptor.exponent_num
                && p.exponent_den == descriptor.exponent_den
        }) {
            Some(p) => p.leading_coefficient += descriptor.leading_coefficient,
            None => predictions.push(descriptor),
        }
    }
    predictions.sort_by(|a, b| {
        a.location
            .partial_cmp(&b.location)
            .unwrap()
            .then(a.exponent.partial_cmp(&b.exponent).unwrap())
    });
    (predictions, skipped)
}
