//! Diffractive trace computations on Euclidean surfaces with conic
//! singularities: surface construction, closed geodesic enumeration,
//! diffraction coefficients, wave-trace singularity data, comparison against
//! reference spectra, and resonance-band thresholds.

pub mod bands;
pub mod cache;
pub mod diffraction;
pub mod enumerate;
pub mod geometry;
pub mod spectral;
pub mod trace;

pub use bands::{
    bawu_region_contains, check_hypotheses, dmax, hiwu_threshold, optimal_band, BandsError,
    HypothesisReport, HypothesisStatus, RegionSpec, ResonanceBandReport,
};
pub use cache::{enumerate_cached, enumerate_cached_in, cache_dir, CACHE_ENV_VAR};
pub use diffraction::{
    abel_mode_sum_circle, circle_link_spectrum, diffraction_coefficient_closed,
    diffraction_coefficient_modesum, extrapolate_to_zero, is_diffractive_cone,
    singular_set_distance,
    CoefficientMethod, DiffractionCoefficient, DiffractionError, LinkSpectrum, SpectrumMode,
    DEFAULT_DAMPING_SCHEDULE,
};
pub use enumerate::{
    canonicalize, chain_from_word, dlspec, enumerate_closed_chains, primitive_decompose,
    ClosedChain, EnumError, LengthSpectrumEntry, Transition, Traversal, DEFAULT_NODE_BUDGET,
};
pub use geometry::{
    build_doubled_polygon, build_planar_exterior, classify_transition, link_distance, ConeGraph,
    ConePoint, GeodesicSegment, GeometryError, LinkCircle, SegmentEnd, SurfaceSpec,
    TransitionClass, GEOMETRIC_TOL,
};
pub use spectral::{
    compare_with_prediction, detect_peaks, doubled_unit_square_frequencies, load_frequencies,
    smoothed_trace, ComparisonReport, FrequencyList, Peak, PeakMatch, SmoothedTrace,
    SpectralError,
};
pub use trace::{
    assemble_symbol, gamma, numeric_symbol_transform, predict_singularities, segment_amplitude,
    time_domain_singularity,
    CutoffSpec, SingularityDescriptor, SymbolDescriptor, TraceError, TransitionProfile,
};
