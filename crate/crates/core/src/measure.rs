//! Opinion histograms, densities and peak detection.
//!
//! Counts are exact integers. Densities are derived on demand and normalized so
//! that `sum(density) / bins == 1`.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeasureError {
    #[error("bin count mismatch: {left} vs {right}")]
    Shape { left: usize, right: usize },
    #[error("histogram needs at least one bin")]
    NoBins,
}

/// Equal-width tallies over `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    counts: Vec<u64>,
    samples: u64,
}

impl Histogram {
    pub fn new(bins: usize) -> Result<Self, MeasureError> {
        if bins == 0 {
            return Err(MeasureError::NoBins);
        }
        Ok(Histogram {
            counts: vec![0; bins],
            samples: 0,
        })
    }

    pub fn from_counts(counts: Vec<u64>) -> Result<Self, MeasureError> {
        if counts.is_empty() {
            return Err(MeasureError::NoBins);
        }
        let samples = counts.iter().sum();
        Ok(Histogram { counts, samples })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    /// Bin index of opinion `x`: `floor(x * B)`, with `x = 1` folded into the
    /// last bin.
    #[inline(always)]
    pub fn bin_of<F: Scalar>(&self, x: F) -> usize {
        let bins = self.counts.len();
        let idx = (x * F::from_usize(bins).unwrap()).floor().to_usize().unwrap_or(0);
        idx.min(bins - 1)
    }

    /// Tallies every opinion. Opinions must lie in `[0, 1]`.
    pub fn accumulate<F: Scalar>(&mut self, opinions: &[F]) {
        let scale = F::from_usize(self.counts.len()).unwrap();
        let last = self.counts.len() - 1;
        for &x in opinions {
            debug_assert!(x >= F::zero() && x <= F::one());
            let idx = (x * scale).to_usize().unwrap_or(0).min(last);
            self.counts[idx] += 1;
        }
        self.samples += opinions.len() as u64;
    }

    pub fn merge(&self, other: &Histogram) -> Result<Histogram, MeasureError> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    pub fn merge_from(&mut self, other: &Histogram) -> Result<(), MeasureError> {
        if self.bins() != other.bins() {
            return Err(MeasureError::Shape {
                left: self.bins(),
                right: other.bins(),
            });
        }
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.samples += other.samples;
        Ok(())
    }

    /// Probability density per bin; all zeros when the histogram is empty.
    pub fn density<F: Scalar>(&self) -> Vec<F> {
        if self.samples == 0 {
            return vec![F::zero(); self.bins()];
        }
        let scale = self.bins() as f64 / self.samples as f64;
        self.counts
            .iter()
            .map(|&c| F::lit(c as f64 * scale))
            .collect()
    }

    /// Opinion at the center of each bin.
    pub fn bin_centers<F: Scalar>(&self) -> Vec<F> {
        bin_centers(self.bins())
    }
}

pub fn bin_centers<F: Scalar>(bins: usize) -> Vec<F> {
    (0..bins)
        .map(|i| F::lit((i as f64 + 0.5) / bins as f64))
        .collect()
}

/// Mass of `density` over bins whose centers lie below and above 0.5.
/// A middle bin (odd `B`) counts toward neither side.
pub fn mass_split<F: Scalar>(density: &[F]) -> (F, F) {
    let bins = density.len();
    let width = F::one() / F::from_usize(bins).unwrap();
    let half = bins / 2;
    let lower = density[..half].iter().fold(F::zero(), |acc, &v| acc + v) * width;
    let upper = density[bins - half..].iter().fold(F::zero(), |acc, &v| acc + v) * width;
    (lower, upper)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak<F> {
    pub bin: usize,
    /// Bin-center opinion.
    pub location: F,
    /// Smoothed density at the peak.
    pub height: F,
}

/// Peaks sorted by strictly increasing location.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PeakSet<F> {
    pub peaks: Vec<Peak<F>>,
}

impl<F: Scalar> PeakSet<F> {
    pub fn count(&self) -> usize {
        self.peaks.len()
    }

    pub fn locations(&self) -> Vec<F> {
        self.peaks.iter().map(|p| p.location).collect()
    }

    pub fn heights(&self) -> Vec<F> {
        self.peaks.iter().map(|p| p.height).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakParams {
    /// Peaks below this fraction of the smoothed global maximum are dropped.
    pub min_height_frac: f64,
    /// Smoothing width and minimum peak spacing, in bins.
    pub min_separation: usize,
}

impl Default for PeakParams {
    fn default() -> Self {
        PeakParams {
            min_height_frac: 0.2,
            min_separation: 9,
        }
    }
}

/// Centered moving average of odd width; windows are truncated at the edges.
pub fn smooth<F: Scalar>(density: &[F], width: usize) -> Vec<F> {
    let width = if width.is_multiple_of(2) { width + 1 } else { width.max(1) };
    let half = width / 2;
    let n = density.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0f64);
    for &v in density {
        prefix.push(prefix.last().unwrap() + v.to_f64().unwrap());
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            F::lit((prefix[hi] - prefix[lo]) / (hi - lo) as f64)
        })
        .collect()
}

/// Local maxima of the smoothed density.
///
/// A maximum is a bin, or a run of equal bins, strictly higher than its
/// neighbors on both sides (the array edge counts as lower). A run reports its
/// middle bin (lower middle for even runs). Candidates under
/// `min_height_frac * max` are discarded, and of two candidates closer than
/// `min_separation` bins the higher one survives (ties keep the lower index).
pub fn detect_peaks<F: Scalar>(density: &[F], params: &PeakParams) -> PeakSet<F> {
    let n = density.len();
    if n == 0 {
        return PeakSet::default();
    }
    let smoothed = smooth(density, params.min_separation);
    let global_max = smoothed.iter().fold(F::zero(), |m, &v| m.max(v));
    if global_max <= F::zero() {
        return PeakSet::default();
    }
    let threshold = global_max * F::lit(params.min_height_frac);

    let mut candidates = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && smoothed[j + 1] == smoothed[i] {
            j += 1;
        }
        let left_lower = i == 0 || smoothed[i - 1] < smoothed[i];
        let right_lower = j + 1 == n || smoothed[j + 1] < smoothed[i];
        // a run covering the whole array has no lower side
        let whole = i == 0 && j + 1 == n;
        if left_lower && right_lower && !whole && smoothed[i] > F::zero() && smoothed[i] >= threshold {
            candidates.push((i + (j - i) / 2, smoothed[i]));
        }
        i = j + 1;
    }

    // strongest first, ties to the lower index
    candidates.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut kept: Vec<(usize, F)> = Vec::new();
    for (bin, h) in candidates {
        if kept.iter().all(|&(k, _)| k.abs_diff(bin) >= params.min_separation) {
            kept.push((bin, h));
        }
    }
    kept.sort_by_key(|&(bin, _)| bin);
    let centers: Vec<F> = bin_centers(n);
    PeakSet {
        peaks: kept
            .into_iter()
            .map(|(bin, height)| Peak {
                bin,
                location: centers[bin],
                height,
            })
            .collect(),
    }
}

/// L1 distance between a density and its mirror image about opinion 0.5.
pub fn symmetry_l1<F: Scalar>(density: &[F]) -> F {
    let n = density.len();
    if n == 0 {
        return F::zero();
    }
    let total = (0..n).fold(F::zero(), |acc, i| acc + (density[i] - density[n - 1 - i]).abs());
    total / F::from_usize(n).unwrap()
}

/// `(1/B) * sum |a_i - b_i|`, in `[0, 2]` for normalized densities.
pub fn l1_distance<F: Scalar>(a: &[F], b: &[F]) -> Result<F, MeasureError> {
    if a.len() != b.len() {
        return Err(MeasureError::Shape {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Ok(F::zero());
    }
    let total = a
        .iter()
        .zip(b)
        .fold(F::zero(), |acc, (&x, &y)| acc + (x - y).abs());
    Ok(total / F::from_usize(a.len()).unwrap())
}
