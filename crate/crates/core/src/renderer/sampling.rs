//! Ray sampling: stratified coarse samples and inverse-CDF hierarchical
//! resampling from coarse compositing weights.

use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Uniform PDF floor added during hierarchical resampling, as a fraction of
/// the total weight mass. Prevents the sampling PDF from collapsing early in
/// training.
pub const DEFAULT_PDF_FLOOR: f64 = 1e-2;

/// Ascending sample depths along one ray plus inter-sample distances.
/// The last delta is the distance to the far bound, so the sample intervals
/// exactly tile `[t_0, t_far]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RaySamples {
    pub t: Vec<f64>,
    pub deltas: Vec<f64>,
    pub t_far: f64,
}

impl RaySamples {
    /// Builds samples from ascending depths; deltas use the far-bound
    /// sentinel for the final interval.
    pub fn from_depths(t: Vec<f64>, t_far: f64) -> Self {
        assert!(!t.is_empty());
        let mut deltas = Vec::with_capacity(t.len());
        for i in 0..t.len() - 1 {
            debug_assert!(t[i + 1] > t[i], "sample depths must be strictly ascending");
            deltas.push(t[i + 1] - t[i]);
        }
        deltas.push((t_far - t[t.len() - 1]).max(1e-12));
        RaySamples { t, deltas, t_far }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// One uniform draw per equal-width bin of `[t_near, t_far]`; bin midpoints
/// when `rng` is `None`.
pub fn stratified_sample(
    t_near: f64,
    t_far: f64,
    n: usize,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<RaySamples> {
    if !(t_near < t_far) || !t_near.is_finite() || !t_far.is_finite() {
        return Err(Error::InvalidBounds(format!(
            "need t_near < t_far, got [{t_near}, {t_far}]"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidBounds(format!("need N >= 2 samples, got {n}")));
    }
    let bin = (t_far - t_near) / n as f64;
    let mut t = Vec::with_capacity(n);
    for i in 0..n {
        let u = match rng.as_deref_mut() {
            Some(r) => r.gen_range(0.0..1.0),
            None => 0.5,
        };
        t.push(t_near + (i as f64 + u) * bin);
    }
    Ok(RaySamples::from_depths(t, t_far))
}

/// Inverse-CDF sampling from the piecewise-constant PDF proportional to the
/// coarse weights (per-interval, the last interval running to the far bound),
/// plus a uniform floor of `floor_frac` of the total mass. The drawn samples
/// are merged with the coarse depths and returned sorted ascending.
///
/// All-zero weights fall back to a uniform PDF. `rng = None` uses the
/// midpoint quantiles `(k + 0.5) / n_fine` (deterministic rendering).
pub fn hierarchical_resample(
    coarse: &RaySamples,
    weights: &[f64],
    n_fine: usize,
    floor_frac: f64,
    mut rng: Option<&mut ChaCha8Rng>,
) -> RaySamples {
    assert_eq!(coarse.len(), weights.len());
    assert!(weights.iter().all(|&w| w >= 0.0), "weights must be nonnegative");
    let n = coarse.len();

    let total: f64 = weights.iter().sum();
    let mut mass: Vec<f64> = if total > 0.0 {
        let floor = floor_frac * total / n as f64;
        weights.iter().map(|&w| w + floor).collect()
    } else {
        vec![1.0; n]
    };
    let mass_total: f64 = mass.iter().sum();
    for m in mass.iter_mut() {
        *m /= mass_total;
    }
    let mut cdf = Vec::with_capacity(n + 1);
    cdf.push(0.0);
    let mut acc = 0.0;
    for &m in &mass {
        acc += m;
        cdf.push(acc);
    }
    cdf[n] = 1.0;

    let mut merged = coarse.t.clone();
    for k in 0..n_fine {
        let u: f64 = match rng.as_deref_mut() {
            Some(r) => r.gen_range(0.0..1.0),
            None => (k as f64 + 0.5) / n_fine as f64,
        };
        // Find the interval containing u.
        let mut idx = match cdf.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        if idx >= n {
            idx = n - 1;
        }
        let span = cdf[idx + 1] - cdf[idx];
        let frac = if span > 0.0 { (u - cdf[idx]) / span } else { 0.5 };
        let lo = coarse.t[idx];
        let hi = lo + coarse.deltas[idx];
        merged.push(lo + frac * (hi - lo));
    }
    merged.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Enforce strict ascent (duplicate draws are measure-zero but possible).
    let eps = 1e-12 * (coarse.t_far - merged[0]).abs().max(1.0);
    for i in 1..merged.len() {
        if merged[i] <= merged[i - 1] {
            merged[i] = merged[i - 1] + eps;
        }
    }
    RaySamples::from_depths(merged, coarse.t_far)
}
