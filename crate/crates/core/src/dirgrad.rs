//! Directional image gradients, gradient-orientation histograms, and adaptive
//! dominant-angle estimation.
//!
//! Axis conventions: `x` is the column axis (rightward), `y` the row axis
//! (downward). Forward differences with a replicated border, so the last
//! column of `D_x` and the last row of `D_y` are zero. Orientations are taken
//! modulo pi; for an elongated streak the dominant gradient orientation is
//! perpendicular to the streak direction.

use crate::error::{Error, Result};
use ndarray::{Array2, Array3, ArrayView3};

pub const DEFAULT_BIN_COUNT: usize = 60;
pub const DEFAULT_SUPPRESSION_PERCENTILE: f64 = 50.0;

/// Magnitude-weighted gradient-orientation histogram over `[0, pi)`.
#[derive(Debug, Clone)]
pub struct OrientationHistogram {
    pub bins: Vec<f64>,
    pub total_mass: f64,
}

/// Top-K orientations (bin centers, radians in `[0, pi)`, ascending).
#[derive(Debug, Clone, PartialEq)]
pub struct DominantDirections {
    pub angles_rad: Vec<f64>,
    pub masses: Vec<f64>,
}

/// Forward difference along columns; last column zero.
pub fn grad_x(image: &ArrayView3<f64>) -> Array3<f64> {
    let (h, w, c) = image.dim();
    let mut out = Array3::zeros((h, w, c));
    for r in 0..h {
        for q in 0..w.saturating_sub(1) {
            for ch in 0..c {
                out[(r, q, ch)] = image[(r, q + 1, ch)] - image[(r, q, ch)];
            }
        }
    }
    out
}

/// Forward difference along rows; last row zero.
pub fn grad_y(image: &ArrayView3<f64>) -> Array3<f64> {
    let (h, w, c) = image.dim();
    let mut out = Array3::zeros((h, w, c));
    for r in 0..h.saturating_sub(1) {
        for q in 0..w {
            for ch in 0..c {
                out[(r, q, ch)] = image[(r + 1, q, ch)] - image[(r, q, ch)];
            }
        }
    }
    out
}

/// Adjoint of `grad_x`: scatters sensitivities back onto the image.
pub fn grad_x_adjoint(s: &ArrayView3<f64>) -> Array3<f64> {
    let (h, w, c) = s.dim();
    let mut out = Array3::zeros((h, w, c));
    for r in 0..h {
        for q in 0..w {
            for ch in 0..c {
                let mut v = 0.0;
                if q >= 1 {
                    v += s[(r, q - 1, ch)];
                }
                if q + 1 < w {
                    v -= s[(r, q, ch)];
                }
                out[(r, q, ch)] = v;
            }
        }
    }
    out
}

/// Adjoint of `grad_y`.
pub fn grad_y_adjoint(s: &ArrayView3<f64>) -> Array3<f64> {
    let (h, w, c) = s.dim();
    let mut out = Array3::zeros((h, w, c));
    for r in 0..h {
        for q in 0..w {
            for ch in 0..c {
                let mut v = 0.0;
                if r >= 1 {
                    v += s[(r - 1, q, ch)];
                }
                if r + 1 < h {
                    v -= s[(r, q, ch)];
                }
                out[(r, q, ch)] = v;
            }
        }
    }
    out
}

/// Gradient along direction `theta`: `cos(theta) D_x + sin(theta) D_y`.
/// Linear in the image and exactly differentiable.
pub fn directional_gradient(image: &ArrayView3<f64>, theta: f64) -> Array3<f64> {
    let gx = grad_x(image);
    let gy = grad_y(image);
    theta.cos() * &gx + theta.sin() * &gy
}

/// Adjoint of `directional_gradient` for backpropagation.
pub fn directional_gradient_adjoint(s: &ArrayView3<f64>, theta: f64) -> Array3<f64> {
    theta.cos() * &grad_x_adjoint(s) + theta.sin() * &grad_y_adjoint(s)
}

/// BT.601 luminance.
pub fn luminance(image: &ArrayView3<f64>) -> Array2<f64> {
    let (h, w, c) = image.dim();
    let mut out = Array2::zeros((h, w));
    if c >= 3 {
        for r in 0..h {
            for q in 0..w {
                out[(r, q)] = 0.299 * image[(r, q, 0)]
                    + 0.587 * image[(r, q, 1)]
                    + 0.114 * image[(r, q, 2)];
            }
        }
    } else {
        for r in 0..h {
            for q in 0..w {
                out[(r, q)] = image[(r, q, 0)];
            }
        }
    }
    out
}

/// Magnitude-weighted orientation histogram of the luminance gradient.
///
/// Pixels whose gradient magnitude falls strictly below the given percentile
/// of the patch's own magnitudes contribute nothing; survivors contribute
/// their magnitude to the bin containing `atan2(D_y, D_x) mod pi`.
pub fn orientation_histogram(
    image: &ArrayView3<f64>,
    suppression_percentile: f64,
    bin_count: usize,
) -> OrientationHistogram {
    assert!(bin_count > 0, "bin_count must be positive");
    let luma = luminance(image);
    let (h, w) = luma.dim();
    let mut mags = Vec::with_capacity(h * w);
    let mut entries = Vec::with_capacity(h * w);
    for r in 0..h {
        for q in 0..w {
            let dx = if q + 1 < w {
                luma[(r, q + 1)] - luma[(r, q)]
            } else {
                0.0
            };
            let dy = if r + 1 < h {
                luma[(r + 1, q)] - luma[(r, q)]
            } else {
                0.0
            };
            let mag = (dx * dx + dy * dy).sqrt();
            mags.push(mag);
            entries.push((mag, dy.atan2(dx)));
        }
    }
    let threshold = percentile(&mut mags, suppression_percentile);
    let mut bins = vec![0.0; bin_count];
    let mut total_mass = 0.0;
    for (mag, angle) in entries {
        if mag <= 0.0 || mag < threshold {
            continue;
        }
        let orientation = angle.rem_euclid(std::f64::consts::PI);
        let mut bin = (orientation / std::f64::consts::PI * bin_count as f64) as usize;
        if bin >= bin_count {
            bin = bin_count - 1;
        }
        bins[bin] += mag;
        total_mass += mag;
    }
    OrientationHistogram { bins, total_mass }
}

fn percentile(values: &mut [f64], pct: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = (pct / 100.0 * (values.len() - 1) as f64).round() as usize;
    values[pos.min(values.len() - 1)]
}

impl OrientationHistogram {
    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    pub fn bin_width_rad(&self) -> f64 {
        std::f64::consts::PI / self.bins.len() as f64
    }

    pub fn bin_center_rad(&self, bin: usize) -> f64 {
        (bin as f64 + 0.5) * self.bin_width_rad()
    }
}

/// Top-K bins by mass after circular non-max suppression over a +-2 bin
/// neighbourhood. Angles come back ascending.
pub fn dominant_angles(hist: &OrientationHistogram, k: usize) -> Result<DominantDirections> {
    let n = hist.bin_count();
    assert!(k >= 1 && k <= n, "K must be in 1..={n}");
    if hist.total_mass <= 0.0 {
        return Err(Error::NoDominantDirection);
    }
    let mut candidates: Vec<(usize, f64)> = hist
        .bins
        .iter()
        .enumerate()
        .filter(|(_, &m)| m > 0.0)
        .map(|(i, &m)| (i, m))
        .collect();
    candidates.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));

    // Greedy non-max suppression: skip candidates within +-2 bins (circular)
    // of an already chosen peak.
    let mut chosen: Vec<(usize, f64)> = Vec::new();
    for (bin, mass) in candidates {
        let clash = chosen.iter().any(|(b, _)| {
            let d = (bin as isize - *b as isize).unsigned_abs() % n;
            d.min(n - d) <= 2
        });
        if !clash {
            chosen.push((bin, mass));
            if chosen.len() == k {
                break;
            }
        }
    }
    chosen.sort_by_key(|(b, _)| *b);
    Ok(DominantDirections {
        angles_rad: chosen.iter().map(|(b, _)| hist.bin_center_rad(*b)).collect(),
        masses: chosen.iter().map(|(_, m)| *m).collect(),
    })
}

/// Circular distance between two orientations, in radians, on `[0, pi)`.
pub fn orientation_distance(a: f64, b: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let d = (a - b).rem_euclid(pi);
    d.min(pi - d)
}
