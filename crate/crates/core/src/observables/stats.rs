//! Binder ratios, binning analysis and histogram diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const JACKKNIFE_BINS: usize = 32;

/// Split `n` items into `bins` contiguous ranges whose sizes differ by at most one.
fn bin_ranges(n: usize, bins: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    (0..bins).map(move |b| (b * n / bins)..((b + 1) * n / bins))
}

fn u4(m2: f64, m4: f64) -> f64 {
    (3.0 - m4 / (m2 * m2)) / 2.0
}

/// Binder ratio `(3 - ⟨F⁴⟩/⟨F²⟩²)/2` and its jackknife error from per-sample
/// second and fourth moments.
pub fn binder_from_moments(f2: &[f64], f4: &[f64]) -> Result<(f64, f64)> {
    if f2.len() != f4.len() {
        return Err(Error::Validation(format!(
            "moment columns differ in length: {} vs {}",
            f2.len(),
            f4.len()
        )));
    }
    let n = f2.len();
    if n < 2 {
        return Err(Error::Insufficient(format!("Binder ratio needs >= 2 samples, got {n}")));
    }
    let s2: f64 = f2.iter().sum();
    let s4: f64 = f4.iter().sum();
    if s2 <= 0.0 {
        return Err(Error::UndefinedRatio("<F^2> vanishes".into()));
    }
    let value = u4(s2 / n as f64, s4 / n as f64);

    let bins = n.min(JACKKNIFE_BINS);
    let mut estimates = Vec::with_capacity(bins);
    for r in bin_ranges(n, bins) {
        let m = (n - r.len()) as f64;
        let b2: f64 = f2[r.clone()].iter().sum();
        let b4: f64 = f4[r].iter().sum();
        let rest2 = (s2 - b2) / m;
        if rest2 <= 0.0 {
            // the leave-one-out set is all zero; the ratio is undefined there
            continue;
        }
        estimates.push(u4(rest2, (s4 - b4) / m));
    }
    let k = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / k;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() * (k - 1.0) / k;
    Ok((value, var.sqrt()))
}

/// Binder ratio of raw order-parameter samples.
pub fn binder(samples: &[f64]) -> Result<(f64, f64)> {
    let f2: Vec<f64> = samples.iter().map(|f| f * f).collect();
    let f4: Vec<f64> = f2.iter().map(|f| f * f).collect();
    binder_from_moments(&f2, &f4)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinnedError {
    pub mean: f64,
    pub stderr: f64,
    /// Integrated autocorrelation time, `0.5` for uncorrelated data.
    pub tau_int: f64,
    /// Bin size at which the error estimate was read off.
    pub bin_size: usize,
}

const MIN_SERIES: usize = 16;
const MIN_BINS: usize = 32;

fn stderr_of(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

/// Mean and error of a correlated series by logarithmic binning.
///
/// The series is repeatedly halved into pair averages. The error is read at
/// the shallowest level that no deeper level exceeds by more than two of its
/// own standard deviations.
pub fn binned_error(series: &[f64]) -> Result<BinnedError> {
    let n = series.len();
    if n < MIN_SERIES {
        return Err(Error::Insufficient(format!(
            "binning analysis needs >= {MIN_SERIES} samples, got {n}"
        )));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut level: Vec<f64> = series.to_vec();
    let mut errs = Vec::new(); // (stderr, its uncertainty, bin size)
    let mut size = 1;
    loop {
        let e = stderr_of(&level);
        let de = e / (2.0 * (level.len() as f64 - 1.0)).sqrt();
        errs.push((e, de, size));
        if level.len() / 2 < MIN_BINS {
            break;
        }
        level = level.chunks_exact(2).map(|p| 0.5 * (p[0] + p[1])).collect();
        size *= 2;
    }
    let plateau = (0..errs.len())
        .find(|&l| errs[l + 1..].iter().all(|&(e, de, _)| e <= errs[l].0 + 2.0 * de))
        .unwrap_or(errs.len() - 1);
    let (stderr, _, bin_size) = errs[plateau];
    let base = errs[0].0;
    let tau_int = if base > 0.0 {
        0.5 * (stderr / base).powi(2)
    } else {
        0.5
    };
    Ok(BinnedError {
        mean,
        stderr,
        tau_int,
        bin_size,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Equal-width histogram over the sample range; a degenerate range gives one bin.
pub fn histogram(samples: &[f64], n_bins: usize) -> Result<Histogram> {
    if samples.is_empty() {
        return Err(Error::Insufficient("histogram of an empty sample".into()));
    }
    if n_bins == 0 {
        return Err(Error::Config("histogram needs at least one bin".into()));
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Ok(Histogram {
            left: vec![lo],
            right: vec![hi],
            counts: vec![samples.len() as u64],
        });
    }
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0u64; n_bins];
    for &s in samples {
        let b = (((s - lo) / width) as usize).min(n_bins - 1);
        counts[b] += 1;
    }
    let left = (0..n_bins).map(|b| lo + b as f64 * width).collect();
    let right = (0..n_bins)
        .map(|b| if b + 1 == n_bins { hi } else { lo + (b + 1) as f64 * width })
        .collect();
    Ok(Histogram {
        left,
        right,
        counts,
    })
}

pub const DEFAULT_DIP_THRESHOLD: f64 = 0.2;
/// Local maxima lower than this fraction of the tallest bin are ignored.
pub const DEFAULT_MIN_PEAK_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bimodality {
    pub is_bimodal: bool,
    pub dip_score: f64,
    /// Lower of the two peaks of the best-scoring pair.
    pub peak_count: u64,
    /// Smallest count between them.
    pub valley_count: u64,
}

impl Bimodality {
    /// Depth of the dip in Poisson standard deviations,
    /// `(peak − valley) / sqrt(peak + valley)`.
    pub fn significance(&self) -> f64 {
        let total = (self.peak_count + self.valley_count) as f64;
        if total == 0.0 {
            return 0.0;
        }
        (self.peak_count as f64 - self.valley_count as f64) / total.sqrt()
    }
}

/// Two-peak diagnostic on a histogram.
///
/// `dip_score = 1 - valley / min(peak_a, peak_b)` maximised over pairs of
/// qualifying local maxima; bimodal iff the score reaches `dip_threshold`.
pub fn bimodality(hist: &Histogram, dip_threshold: f64, min_peak_fraction: f64) -> Bimodality {
    let c = &hist.counts;
    let tallest = c.iter().copied().max().unwrap_or(0);
    if c.len() < 3 || tallest == 0 {
        return Bimodality {
            is_bimodal: false,
            dip_score: 0.0,
            peak_count: 0,
            valley_count: 0,
        };
    }
    let floor = min_peak_fraction * tallest as f64;
    // Plateau-aware local maxima: a run of equal counts above both neighbours.
    let mut peaks = Vec::new();
    let mut i = 0;
    while i < c.len() {
        let mut j = i;
        while j + 1 < c.len() && c[j + 1] == c[i] {
            j += 1;
        }
        let left_lower = i == 0 || c[i - 1] < c[i];
        let right_lower = j + 1 == c.len() || c[j + 1] < c[i];
        if left_lower && right_lower && c[i] > 0 && c[i] as f64 >= floor {
            peaks.push((i, j));
        }
        i = j + 1;
    }
    let mut best = 0.0f64;
    let (mut peak_count, mut valley_count) = (0, 0);
    for (a, &(_, pa_end)) in peaks.iter().enumerate() {
        for &(pb_start, _) in &peaks[a + 1..] {
            let valley = c[pa_end..=pb_start].iter().copied().min().unwrap_or(0);
            let low_peak = c[pa_end].min(c[pb_start]);
            let score = 1.0 - valley as f64 / low_peak as f64;
            if score > best {
                best = score;
                peak_count = low_peak;
                valley_count = valley;
            }
        }
    }
    Bimodality {
        is_bimodal: best >= dip_threshold && best > 0.0,
        dip_score: best,
        peak_count,
        valley_count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn binder_examples() {
        let (u, e) = binder(&[0.3; 50]).unwrap();
        assert!((u - 1.0).abs() < 1e-12 && e < 1e-12);
        let (u, _) = binder(&[1.0, 1.0, 0.0, 0.0]).unwrap();
        assert!((u - 0.5).abs() < 1e-12);
        assert!(matches!(binder(&[0.0; 10]), Err(Error::UndefinedRatio(_))));
        assert!(matches!(binder(&[1.0]), Err(Error::Insufficient(_))));
    }

    #[test]
    fn gaussian_binder_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..200_000).map(|_| normal.sample(&mut rng)).collect();
        let (u, e) = binder(&xs).unwrap();
        assert!(u.abs() < 4.0 * e + 1e-3, "U4={u} err={e}");
    }

    #[test]
    fn binning_iid_matches_naive_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..4096).map(|_| rng.random::<f64>()).collect();
        let naive = stderr_of(&xs);
        let b = binned_error(&xs).unwrap();
        assert!((b.stderr / naive - 1.0).abs() < 0.2, "{} vs {naive}", b.stderr);
        assert!((b.tau_int - 0.5).abs() < 0.2);
        assert_eq!(binned_error(&[2.5; 64]).unwrap().stderr, 0.0);
        assert!(matches!(binned_error(&[1.0; 8]), Err(Error::Insufficient(_))));
    }

    #[test]
    fn binning_recovers_ar1_autocorrelation() {
        let rho: f64 = 0.9;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut x = 0.0;
        let xs: Vec<f64> = (0..1 << 17)
            .map(|_| {
                x = rho * x + normal.sample(&mut rng);
                x
            })
            .collect();
        let analytic = (1.0 + rho) / (1.0 - rho) / 2.0;
        let b = binned_error(&xs).unwrap();
        assert!(
            b.tau_int > analytic / 2.0 && b.tau_int < analytic * 2.0,
            "tau_int {} vs {analytic}",
            b.tau_int
        );
    }

    #[test]
    fn histogram_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let uni: Vec<f64> = (0..5000).map(|_| normal.sample(&mut rng)).collect();
        let h = histogram(&uni, 20).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), 5000);
        assert!(!bimodality(&h, DEFAULT_DIP_THRESHOLD, DEFAULT_MIN_PEAK_FRACTION).is_bimodal);

        let mix: Vec<f64> = (0..5000)
            .map(|k| normal.sample(&mut rng) * 0.5 + if k % 2 == 0 { -3.0 } else { 3.0 })
            .collect();
        let h = histogram(&mix, 20).unwrap();
        assert!(bimodality(&h, DEFAULT_DIP_THRESHOLD, DEFAULT_MIN_PEAK_FRACTION).is_bimodal);

        let two: Vec<f64> = (0..200).map(|k| if k < 100 { 0.2 } else { 0.4 }).collect();
        let h = histogram(&two, 8).unwrap();
        let b = bimodality(&h, DEFAULT_DIP_THRESHOLD, DEFAULT_MIN_PEAK_FRACTION);
        assert!(b.is_bimodal);
        assert_eq!(b.dip_score, 1.0);
        assert_eq!((b.peak_count, b.valley_count), (100, 0));
        assert_eq!(b.significance(), 10.0);

        let flat = histogram(&[0.7; 300], 10).unwrap();
        assert_eq!(flat.len(), 1);
        assert!(!bimodality(&flat, DEFAULT_DIP_THRESHOLD, DEFAULT_MIN_PEAK_FRACTION).is_bimodal);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn binder_never_exceeds_one(xs in prop::collection::vec(0.0f64..1.0, 2..200)) {
                prop_assume!(xs.iter().any(|&x| x > 1e-6));
                let (u, _) = binder(&xs).unwrap();
                prop_assert!(u <= 1.0 + 1e-12);
            }
        }
    }
}
