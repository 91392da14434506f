//! Transmittance-weighted quadrature compositing along a ray:
//! `C = sum_i T_i (1 - exp(-sigma_i delta_i)) c_i` with
//! `T_i = exp(-sum_{j<i} sigma_j delta_j)`.
//!
//! The quadrature is exact for piecewise-constant fields aligned to the
//! sample intervals, which the acceptance oracle exploits.

use super::sampling::RaySamples;

#[derive(Debug, Clone)]
pub struct RayRenderResult {
    pub color: [f64; 3],
    pub weights: Vec<f64>,
    pub opacity: f64,
}

/// Forward compositing. `rgb` is row-major `(n, 3)` flattened.
pub fn composite_ray(samples: &RaySamples, sigma: &[f64], rgb: &[f64]) -> RayRenderResult {
    let n = samples.len();
    assert_eq!(sigma.len(), n);
    assert_eq!(rgb.len(), 3 * n);
    debug_assert!(sigma.iter().all(|&s| s >= 0.0), "density must be nonnegative");

    let mut color = [0.0; 3];
    let mut weights = Vec::with_capacity(n);
    let mut transmittance = 1.0f64;
    for i in 0..n {
        let alpha = 1.0 - (-sigma[i] * samples.deltas[i]).exp();
        let w = transmittance * alpha;
        for c in 0..3 {
            color[c] += w * rgb[3 * i + c];
        }
        weights.push(w);
        transmittance *= 1.0 - alpha;
    }
    RayRenderResult {
        color,
        weights,
        opacity: 1.0 - transmittance,
    }
}

/// Backward pass: gradient of a scalar loss with respect to `sigma` and
/// `rgb`, given `d_color = dL/dC`.
///
/// With `a_i = 1 - exp(-sigma_i delta_i)` and `g_i = dL/dw_i = d_color . c_i`:
/// `dL/dsigma_i = delta_i * (T_i (1 - a_i) g_i - sum_{j>i} w_j g_j)`.
pub fn composite_ray_backward(
    samples: &RaySamples,
    sigma: &[f64],
    rgb: &[f64],
    d_color: &[f64; 3],
) -> (Vec<f64>, Vec<f64>) {
    let n = samples.len();
    let mut alphas = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut trans = Vec::with_capacity(n); // T_i before sample i
    let mut transmittance = 1.0f64;
    for i in 0..n {
        let alpha = 1.0 - (-sigma[i] * samples.deltas[i]).exp();
        trans.push(transmittance);
        weights.push(transmittance * alpha);
        alphas.push(alpha);
        transmittance *= 1.0 - alpha;
    }

    let mut d_rgb = vec![0.0; 3 * n];
    let mut g = vec![0.0; n];
    for i in 0..n {
        for c in 0..3 {
            d_rgb[3 * i + c] = weights[i] * d_color[c];
        }
        g[i] = d_color[0] * rgb[3 * i]
            + d_color[1] * rgb[3 * i + 1]
            + d_color[2] * rgb[3 * i + 2];
    }

    // Suffix sums of w_j g_j.
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + weights[i] * g[i];
    }
    let mut d_sigma = vec![0.0; n];
    for i in 0..n {
        d_sigma[i] = samples.deltas[i] * (trans[i] * (1.0 - alphas[i]) * g[i] - suffix[i + 1]);
    }
    (d_sigma, d_rgb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renderer::sampling::stratified_sample;

    #[test]
    fn zero_density_renders_black() {
        let samples = stratified_sample(0.0, 1.0, 8, None).unwrap();
        let rgb = vec![0.9; 24];
        let out = composite_ray(&samples, &[0.0; 8], &rgb);
        assert_eq!(out.color, [0.0; 3]);
        assert!(out.weights.iter().all(|&w| w == 0.0));
        assert_eq!(out.opacity, 0.0);
    }

    #[test]
    fn opaque_first_sample_saturates() {
        let samples = RaySamples::from_depths(vec![0.1, 0.5, 0.9], 1.0);
        let sigma = [1e6, 0.3, 0.3];
        let mut rgb = vec![0.0; 9];
        rgb[0] = 0.2;
        rgb[1] = 0.4;
        rgb[2] = 0.8;
        let out = composite_ray(&samples, &sigma, &rgb);
        assert!((out.color[0] - 0.2).abs() < 1e-9);
        assert!((out.color[1] - 0.4).abs() < 1e-9);
        assert!((out.color[2] - 0.8).abs() < 1e-9);
        assert!((out.weights[0] - 1.0).abs() < 1e-9);
        assert!((out.opacity - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unit_density_matches_closed_form() {
        // sigma = 1 on [0,1], c = 1: opacity = 1 - e^-1 exactly, any N with
        // samples at interval left edges.
        for n in [4usize, 16, 64] {
            let t: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
            let samples = RaySamples::from_depths(t, 1.0);
            let sigma = vec![1.0; n];
            let rgb = vec![1.0; 3 * n];
            let out = composite_ray(&samples, &sigma, &rgb);
            let expect = 1.0 - (-1.0f64).exp();
            for c in 0..3 {
                assert!(
                    (out.color[c] - expect).abs() < 1e-14,
                    "n={n}: {} vs {expect}",
                    out.color[c]
                );
            }
            assert!((out.opacity - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn weights_nonnegative_and_sum_below_one() {
        let samples = stratified_sample(0.5, 4.0, 32, None).unwrap();
        let sigma: Vec<f64> = (0..32).map(|i| (i % 5) as f64 * 0.7).collect();
        let rgb = vec![0.5; 96];
        let out = composite_ray(&samples, &sigma, &rgb);
        assert!(out.weights.iter().all(|&w| w >= 0.0));
        let sum: f64 = out.weights.iter().sum();
        assert!(sum <= 1.0 + 1e-5);
        assert!((sum - out.opacity).abs() < 1e-12);
    }

    #[test]
    fn increasing_density_never_raises_later_transmittance() {
        let samples = stratified_sample(0.0, 2.0, 16, None).unwrap();
        let mut sigma: Vec<f64> = (0..16).map(|i| 0.1 + (i % 3) as f64 * 0.4).collect();
        let rgb = vec![1.0; 48];
        let base = composite_ray(&samples, &sigma, &rgb);
        sigma[4] += 1.0;
        let bumped = composite_ray(&samples, &sigma, &rgb);
        // T_j for j > 4 is w_j / alpha_j; compare via weights given equal alphas.
        for j in 5..16 {
            assert!(bumped.weights[j] <= base.weights[j] + 1e-12);
        }
    }

    #[test]
    fn backward_matches_finite_difference() {
        let samples = stratified_sample(0.2, 3.0, 10, None).unwrap();
        let mut sigma: Vec<f64> = (0..10).map(|i| 0.2 + 0.15 * (i as f64)).collect();
        let mut rgb: Vec<f64> = (0..30).map(|i| ((i * 7) % 11) as f64 / 11.0).collect();
        let d_color = [0.3, -0.8, 0.5];
        let (d_sigma, d_rgb) = composite_ray_backward(&samples, &sigma, &rgb, &d_color);
        let loss = |sig: &[f64], col: &[f64]| {
            let out = composite_ray(&samples, sig, col);
            d_color[0] * out.color[0] + d_color[1] * out.color[1] + d_color[2] * out.color[2]
        };
        let h = 1e-7;
        for i in [0usize, 3, 9] {
            let orig = sigma[i];
            sigma[i] = orig + h;
            let lp = loss(&sigma, &rgb);
            sigma[i] = orig - h;
            let lm = loss(&sigma, &rgb);
            sigma[i] = orig;
            let fd = (lp - lm) / (2.0 * h);
            assert!(
                (fd - d_sigma[i]).abs() / fd.abs().max(1e-6) < 1e-5,
                "sigma[{i}]: fd={fd} an={}",
                d_sigma[i]
            );
        }
        for i in [1usize, 14, 29] {
            let orig = rgb[i];
            rgb[i] = orig + h;
            let lp = loss(&sigma, &rgb);
            rgb[i] = orig - h;
            let lm = loss(&sigma, &rgb);
            rgb[i] = orig;
            let fd = (lp - lm) / (2.0 * h);
            assert!(
                (fd - d_rgb[i]).abs() / fd.abs().max(1e-6) < 1e-5,
                "rgb[{i}]: fd={fd} an={}",
                d_rgb[i]
            );
        }
    }
}
