//! Smoothed wave trace from externally computed Laplace frequencies, peak
//! detection, and comparison against predicted singular times.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::BufRead;
use std::path::Path;
use thiserror::Error;

/// Frequencies are summed in fixed-size blocks (pairwise within a block)
/// so results are bit-stable regardless of any outer parallelism.
const SUM_BLOCK: usize = 1024;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: cannot parse frequency: {text:?}")]
    Parse {
        path: String,
        line: usize,
        text: String,
    },
    #[error("{path}:{line}: negative frequency {value}")]
    Negative {
        path: String,
        line: usize,
        value: f64,
    },
    #[error("smoothing width must be positive, got {0}")]
    BadSigma(f64),
    #[error("prominence must be positive, got {0}")]
    BadProminence(f64),
}

/// Sorted list of wave frequencies (square roots of Laplace eigenvalues).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrequencyList {
    pub frequencies: Vec<f64>,
    pub source: String,
}

impl FrequencyList {
    pub fn new(mut frequencies: Vec<f64>, source: impl Into<String>) -> Self {
        frequencies.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Self {
            frequencies,
            source: source.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn max(&self) -> Option<f64> {
        self.frequencies.last().copied()
    }
}

/// Parse a plain-text frequency file: one float per line, `#` comments.
pub fn load_frequencies(path: impl AsRef<Path>) -> Result<FrequencyList, SpectralError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| SpectralError::Io {
        path: display.clone(),
        source,
    })?;
    let reader = std::io::BufReader::new(file);
    let mut freqs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| SpectralError::Io {
            path: display.clone(),
            source,
        })?;
        let text = line.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let value: f64 = text.parse().map_err(|_| SpectralError::Parse {
            path: display.clone(),
            line: i + 1,
            text: text.to_string(),
        })?;
        if value < 0.0 {
            return Err(SpectralError::Negative {
                path: display.clone(),
                line: i + 1,
                value,
            });
        }
        freqs.push(value);
    }
    Ok(FrequencyList::new(freqs, display))
}

/// Frequencies of the doubled unit square up to `lambda_max`: the union
/// (with multiplicity) of the Neumann (m, n >= 0) and Dirichlet
/// (m, n >= 1) spectra of the unit square, lambda = pi sqrt(m^2 + n^2).
pub fn doubled_unit_square_frequencies(lambda_max: f64) -> FrequencyList {
    let mut freqs = Vec::new();
    let bound = (lambda_max / PI).floor() as i64 + 1;
    for m in 0..=bound {
        for n in 0..=bound {
            let lambda = PI * ((m * m + n * n) as f64).sqrt();
            if lambda > lambda_max {
                continue;
            }
            // Neumann mode.
            freqs.push(lambda);
            // Dirichlet mode.
            if m >= 1 && n >= 1 {
                freqs.push(lambda);
            }
        }
    }
    FrequencyList::new(freqs, "doubled unit square (exact)")
}

/// The Gaussian-smoothed half-wave trace on a time grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoothedTrace {
    pub t_grid: Vec<f64>,
    pub values: Vec<Complex64>,
    pub sigma: f64,
}

/// Evaluate sum_j e^{-i t lambda_j} e^{-sigma^2 lambda_j^2 / 2} on the grid.
pub fn smoothed_trace(
    freqs: &FrequencyList,
    sigma: f64,
    t_grid: &[f64],
) -> Result<SmoothedTrace, SpectralError> {
    if !(sigma > 0.0) {
        return Err(SpectralError::BadSigma(sigma));
    }
    // Frequency-independent Gaussian damping; fully damped modes drop out.
    let damped: Vec<(f64, f64)> = freqs
        .frequencies
        .iter()
        .map(|&l| (l, (-0.5 * sigma * sigma * l * l).exp()))
        .filter(|&(_, w)| w > 0.0)
        .collect();
    let values = t_grid
        .iter()
        .map(|&t| {
            let mut total = Complex64::new(0.0, 0.0);
            for block in damped.chunks(SUM_BLOCK) {
                let mut acc = Complex64::new(0.0, 0.0);
                for &(l, w) in block {
                    acc += Complex64::from_polar(w, -t * l);
                }
                total += acc;
            }
            total
        })
        .collect();
    Ok(SmoothedTrace {
        t_grid: t_grid.to_vec(),
        values,
        sigma,
    })
}

/// A detected singular time with its smoothed amplitude.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Peak {
    pub time: f64,
    pub amplitude: f64,
}

/// Local maxima of |trace| exceeding `prominence` times the median, refined
/// by three-point parabolic interpolation.
pub fn detect_peaks(trace: &SmoothedTrace, prominence: f64) -> Result<Vec<Peak>, SpectralError> {
    if !(prominence > 0.0) {
        return Err(SpectralError::BadProminence(prominence));
    }
    let mags: Vec<f64> = trace.values.iter().map(|v| v.norm()).collect();
    if mags.len() < 3 {
        return Ok(Vec::new());
    }
    let mut sorted = mags.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    let threshold = prominence * median;
    let mut peaks = Vec::new();
    for i in 1..mags.len() - 1 {
        if mags[i] > threshold && mags[i] >= mags[i - 1] && mags[i] > mags[i + 1] {
            let denom = mags[i - 1] - 2.0 * mags[i] + mags[i + 1];
            let shift = if denom.abs() > 1e-300 {
                0.5 * (mags[i - 1] - mags[i + 1]) / denom
            } else {
                0.0
            };
            let h = trace.t_grid[i + 1] - trace.t_grid[i];
            peaks.push(Peak {
                time: trace.t_grid[i] + shift.clamp(-0.5, 0.5) * h,
                amplitude: mags[i],
            });
        }
    }
    Ok(peaks)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeakMatch {
    pub peak: Peak,
    pub predicted_location: f64,
    pub distance: f64,
}

/// Result of matching detected peaks against predicted singular times.
/// Unrealized predictions are allowed (the containment is one-directional);
/// unmatched peaks are flagged as violations up to smoothing artifacts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub matches: Vec<PeakMatch>,
    pub unmatched_peaks: Vec<Peak>,
    pub unrealized_predictions: Vec<f64>,
    /// Successive amplitude ratios of the matched peaks in time order.
    pub amplitude_ratios: Vec<f64>,
}

/// Match each detected peak to the nearest predicted location within `tol`.
pub fn compare_with_prediction(
    peaks: &[Peak],
    predictions: &[f64],
    tol: f64,
) -> ComparisonReport {
    let mut matches = Vec::new();
    let mut unmatched = Vec::new();
    let mut realized = vec![false; predictions.len()];
    for &peak in peaks {
        let best = predictions
            .iter()
            .enumerate()
            .map(|(i, &p)| (i, (p - peak.time).abs()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        match best {
            Some((i, dist)) if dist <= tol => {
                realized[i] = true;
                matches.push(PeakMatch {
                    peak,
                    predicted_location: predictions[i],
                    distance: dist,
                });
            }
            _ => unmatched.push(peak),
        }
    }
    let unrealized = predictions
        .iter()
        .zip(&realized)
        .filter(|(_, &r)| !r)
        .map(|(&p, _)| p)
        .collect();
    let mut sorted_matches = matches.clone();
    sorted_matches.sort_by(|a, b| a.peak.time.partial_cmp(&b.peak.time).unwrap());
    let amplitude_ratios = sorted_matches
        .windows(2)
        .map(|w| w[1].peak.amplitude / w[0].peak.amplitude)
        .collect();
    ComparisonReport {
        matches,
        unmatched_peaks: unmatched,
        unrealized_predictions: unrealized,
        amplitude_ratios,
    }
}
