//! Resonance-counting thresholds and logarithmic band geometry for planar
//! configurations of cone points.

use crate::diffraction::is_diffractive_cone;
use crate::enumerate::ClosedChain;
use crate::geometry::{ConeGraph, TransitionClass};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BandsError {
    #[error("need at least 2 cone points, got {0}")]
    TooFewConePoints(usize),
    #[error("no segments between distinct cone points")]
    NoSegments,
    #[error("chain contains a geometric transition")]
    GeometricTransitionPresent,
    #[error("rho must be positive, got {0}")]
    BadRho(f64),
}

/// Greatest distance between a pair of cone points, measured along the
/// graph's segments (visible straight lines).
pub fn dmax(graph: &ConeGraph) -> Result<f64, BandsError> {
    if graph.cone_points().len() < 2 {
        return Err(BandsError::TooFewConePoints(graph.cone_points().len()));
    }
    graph
        .segments()
        .iter()
        .filter(|s| s.a.cone_point != s.b.cone_point)
        .map(|s| s.length)
        .max_by(|a, b| a.partial_cmp(b).unwrap())
        .ok_or(BandsError::NoSegments)
}

/// Resonance-counting threshold rho = (n-1) k / (2 L) attached to a
/// strictly diffractive closed chain.
pub fn hiwu_threshold(chain: &ClosedChain, dimension: u32) -> Result<f64, BandsError> {
    if chain
        .transitions
        .iter()
        .any(|t| t.class == TransitionClass::Geometric)
    {
        return Err(BandsError::GeometricTransitionPresent);
    }
    Ok((dimension as f64 - 1.0) * chain.diffraction_count as f64 / (2.0 * chain.total_length))
}

/// The logarithmic region {Im lambda > -rho log |Re lambda|, |Re lambda| > 1/rho}.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegionSpec {
    pub rho: f64,
}

impl RegionSpec {
    pub fn new(rho: f64) -> Result<Self, BandsError> {
        if !(rho > 0.0) {
            return Err(BandsError::BadRho(rho));
        }
        Ok(Self { rho })
    }

    pub fn contains(&self, lambda: Complex64) -> bool {
        let re = lambda.re.abs();
        re > 1.0 / self.rho && lambda.im > -self.rho * re.ln()
    }
}

/// Membership in the analytic-continuation region for a given rho.
pub fn bawu_region_contains(rho: f64, lambda: Complex64) -> Result<bool, BandsError> {
    Ok(RegionSpec::new(rho)?.contains(lambda))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HypothesisStatus {
    Passed,
    Failed,
    /// Not algorithmically decidable from the finite description; surfaced
    /// rather than silently assumed.
    Unchecked,
}

/// Results of the geometric hypothesis checks behind the band statements.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub no_three_collinear: HypothesisStatus,
    /// Offending triple of cone point ids, if collinearity fails.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub collinear_triple: Option<[u32; 3]>,
    /// Flat metrics have no conjugate points; always passes here.
    pub non_conjugacy: HypothesisStatus,
    /// Cone points whose diffraction coefficient vanishes identically.
    pub non_diffractive_cones: Vec<u32>,
    pub all_cones_diffractive: bool,
    /// The escape-to-infinity hypothesis cannot be decided from a finite
    /// segment list.
    pub escape_to_infinity: HypothesisStatus,
    pub escape_note: String,
}

/// Check the geometric hypotheses behind the band statements on a
/// positioned configuration.
pub fn check_hypotheses(graph: &ConeGraph) -> HypothesisReport {
    let positioned: Vec<(u32, [f64; 2])> = graph
        .cone_points()
        .iter()
        .filter_map(|p| p.position.map(|pos| (p.id, pos)))
        .collect();
    // Scale-relative area tolerance for the collinearity test.
    let mut scale: f64 = 0.0;
    for i in 0..positioned.len() {
        for j in (i + 1)..positioned.len() {
            let (p, q) = (positioned[i].1, positioned[j].1);
            scale = scale.max((p[0] - q[0]).hypot(p[1] - q[1]));
        }
    }
    let tol = 1e-12 * scale * scale;
    let mut collinear_triple = None;
    'outer: for i in 0..positioned.len() {
        for j in (i + 1)..positioned.len() {
            for k in (j + 1)..positioned.len() {
                let (a, b, c) = (positioned[i].1, positioned[j].1, positioned[k].1);
                let area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
                if area.abs() <= tol {
                    collinear_triple =
                        Some([positioned[i].0, positioned[j].0, positioned[k].0]);
                    break 'outer;
                }
            }
        }
    }
    let non_diffractive: Vec<u32> = graph
        .cone_points()
        .iter()
        .filter(|p| !is_diffractive_cone(p.link.circumference()))
        .map(|p| p.id)
        .collect();
    HypothesisReport {
        no_three_collinear: if collinear_triple.is_some() {
            HypothesisStatus::Failed
        } else {
            HypothesisStatus::Passed
        },
        collinear_triple,
        non_conjugacy: HypothesisStatus::Passed,
        all_cones_diffractive: non_diffractive.is_empty(),
        non_diffractive_cones: non_diffractive,
        escape_to_infinity: HypothesisStatus::Unchecked,
        escape_note: "escape of geodesics missing the cone points is not decidable from the \
                      finite segment list; verify separately for the configuration at hand"
            .to_string(),
    }
}

/// Threshold data for one back-and-forth chain candidate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainThreshold {
    pub segment_id: u32,
    pub length: f64,
    /// rho = (n-1) k / (2 L) with k = 2, L = 2 length.
    pub rho: f64,
    pub endpoints_diffractive: bool,
}

/// The sharp logarithmic resonance band around slope (n-1)/(2 D_max).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResonanceBandReport {
    pub d_max: f64,
    /// rho* = (n-1)/(2 D_max): counting is bounded below this slope and
    /// almost linearly growing above it.
    pub rho_star: f64,
    pub epsilon: f64,
    /// Slopes of the band (-rho*-eps) log|Re| < Im < (-rho*+eps) log|Re|.
    pub band_lower_slope: f64,
    pub band_upper_slope: f64,
    pub per_chain_thresholds: Vec<ChainThreshold>,
    /// Back-and-forth chain along the longest segment realizing rho*.
    pub witness_segment: u32,
    /// False when a hypothesis failure makes the band statement
    /// inapplicable; the failure flags live in `hypotheses`.
    pub applicable: bool,
    pub hypotheses: HypothesisReport,
    /// Counting lower bound in symbolic form; the theory fixes no values
    /// for the constants.
    pub lower_bound_statement: String,
}

/// Compute the optimal-band report for a positioned configuration.
pub fn optimal_band(
    graph: &ConeGraph,
    dimension: u32,
    epsilon: f64,
) -> Result<ResonanceBandReport, BandsError> {
    let d_max = dmax(graph)?;
    let n = dimension as f64;
    let rho_star = (n - 1.0) / (2.0 * d_max);
    let hypotheses = check_hypotheses(graph);
    let mut per_chain = Vec::new();
    let mut witness = None;
    for seg in graph.segments() {
        if seg.a.cone_point == seg.b.cone_point {
            continue;
        }
        let alpha_a = graph
            .cone_point(seg.a.cone_point)
            .expect("endpoint exists")
            .link
            .circumference();
        let alpha_b = graph
            .cone_point(seg.b.cone_point)
            .expect("endpoint exists")
            .link
            .circumference();
        let endpoints_diffractive =
            is_diffractive_cone(alpha_a) && is_diffractive_cone(alpha_b);
        let threshold = ChainThreshold {
            segment_id: seg.id,
            length: seg.length,
            rho: (n - 1.0) * 2.0 / (2.0 * (2.0 * seg.length)),
            endpoints_diffractive,
        };
        if (seg.length - d_max).abs() <= 1e-12 * d_max && witness.is_none() {
            witness = Some(threshold.clone());
        }
        per_chain.push(threshold);
    }
    let witness = witness.ok_or(BandsError::NoSegments)?;
    let applicable = witness.endpoints_diffractive
        && hypotheses.no_three_collinear == HypothesisStatus::Passed;
    Ok(ResonanceBandReport {
        d_max,
        rho_star,
        epsilon,
        band_lower_slope: -(rho_star + epsilon),
        band_upper_slope: -(rho_star - epsilon),
        witness_segment: witness.segment_id,
        per_chain_thresholds: per_chain,
        applicable,
        hypotheses,
        lower_bound_statement: format!(
            "N_rho(r) >= C r^(1-eps) for every eps > 0 and rho > {rho_star} \
             (constants C symbolic; hypotheses as reported)"
        ),
    })
}
