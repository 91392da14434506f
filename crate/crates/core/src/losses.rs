//! The four unsupervised loss terms and their weighted total.
//!
//! Every term is differentiable with respect to the rendered background `B`
//! and the predicted rain `R`; gradients are written out analytically so the
//! whole pipeline holds up to finite-difference checks at double precision.
//!
//! Angle convention: the dominant angles fed to the rotation loss are
//! gradient orientations (as estimated by [`crate::dirgrad`]), which for a
//! rain streak are perpendicular to the streak's elongation. The loss rewards
//! rain-orientation gradients in `R` (the negative term) and evacuates them
//! from `B` and from `I - R`.

use crate::dirgrad::{directional_gradient, directional_gradient_adjoint, DominantDirections};
use crate::error::{Error, Result};
use ndarray::Array3;
use std::f64::consts::FRAC_PI_2;

pub const DEFAULT_LL_EPSILON: f64 = 1e-6;

/// Weights (likelihood, reconstruction, total variation, gradient rotation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda_ll: f64,
    pub lambda_rec: f64,
    pub lambda_tv: f64,
    pub lambda_agr: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda_ll: 0.1,
            lambda_rec: 500.0,
            lambda_tv: 0.5,
            lambda_agr: 1.0,
        }
    }
}

/// Per-term values and the weighted total for one training patch.
#[derive(Debug, Clone)]
pub struct LossBreakdown {
    pub ll: f64,
    pub rec: f64,
    pub tv: f64,
    pub agr: f64,
    pub total: f64,
    pub dominant_angles_used: Option<DominantDirections>,
}

fn check_shapes(i: &Array3<f64>, b: &Array3<f64>, r: &Array3<f64>) -> Result<()> {
    if i.dim() != b.dim() || i.dim() != r.dim() {
        return Err(Error::ShapeMismatch(format!(
            "I {:?}, B {:?}, R {:?}",
            i.dim(),
            b.dim(),
            r.dim()
        )));
    }
    Ok(())
}

/// Mean squared reconstruction error `mean((I - B - R)^2)`.
pub fn loss_rec(i: &Array3<f64>, b: &Array3<f64>, r: &Array3<f64>) -> Result<f64> {
    check_shapes(i, b, r)?;
    let n = i.len() as f64;
    let sum: f64 = ndarray::Zip::from(i)
        .and(b)
        .and(r)
        .fold(0.0, |acc, &iv, &bv, &rv| {
            let d = iv - bv - rv;
            acc + d * d
        });
    Ok(sum / n)
}

/// `loss_rec` plus its gradients with respect to B and R (both equal).
pub fn loss_rec_grad(
    i: &Array3<f64>,
    b: &Array3<f64>,
    r: &Array3<f64>,
) -> Result<(f64, Array3<f64>)> {
    check_shapes(i, b, r)?;
    let n = i.len() as f64;
    let mut grad = Array3::zeros(i.raw_dim());
    let mut sum = 0.0;
    ndarray::Zip::from(&mut grad)
        .and(i)
        .and(b)
        .and(r)
        .for_each(|g, &iv, &bv, &rv| {
            let d = iv - bv - rv;
            sum += d * d;
            *g = -2.0 * d / n;
        });
    Ok((sum / n, grad))
}

/// Residual-variance-normalized reconstruction error
/// `mean((I-B-R)^2) / (sigma^2 + eps)`, with `sigma` the standard deviation
/// of the residual over the patch, treated as a constant under
/// differentiation.
pub fn loss_likelihood(
    i: &Array3<f64>,
    b: &Array3<f64>,
    r: &Array3<f64>,
    eps: f64,
) -> Result<f64> {
    Ok(loss_likelihood_grad(i, b, r, eps)?.0)
}

pub fn loss_likelihood_grad(
    i: &Array3<f64>,
    b: &Array3<f64>,
    r: &Array3<f64>,
    eps: f64,
) -> Result<(f64, Array3<f64>)> {
    check_shapes(i, b, r)?;
    assert!(eps > 0.0, "likelihood epsilon must be positive");
    let n = i.len() as f64;
    let residual = i - b - r;
    let mean = residual.sum() / n;
    let msq = residual.iter().map(|v| v * v).sum::<f64>() / n;
    let var = (msq - mean * mean).max(0.0);
    let denom = var + eps;
    let value = msq / denom;
    // sigma detached: d/dB = -2 (I-B-R) / (n * denom), same for R.
    let grad = residual.mapv(|d| -2.0 * d / (n * denom));
    Ok((value, grad))
}

/// Subgradient of |v|: zero at the kink (unlike `f64::signum`, which maps
/// +0.0 to 1.0 and would leak gradient on flat regions).
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Anisotropic total variation `mean(|D_x B|) + mean(|D_y B|)`.
pub fn loss_tv(b: &Array3<f64>) -> f64 {
    loss_tv_grad(b).0
}

pub fn loss_tv_grad(b: &Array3<f64>) -> (f64, Array3<f64>) {
    let n = b.len() as f64;
    let gx = crate::dirgrad::grad_x(&b.view());
    let gy = crate::dirgrad::grad_y(&b.view());
    let value = gx.iter().map(|v| v.abs()).sum::<f64>() / n
        + gy.iter().map(|v| v.abs()).sum::<f64>() / n;
    let sx = gx.mapv(|v| sign(v) / n);
    let sy = gy.mapv(|v| sign(v) / n);
    let grad =
        crate::dirgrad::grad_x_adjoint(&sx.view()) + crate::dirgrad::grad_y_adjoint(&sy.view());
    (value, grad)
}

fn mean_abs_and_sign(g: &Array3<f64>) -> (f64, Array3<f64>) {
    let n = g.len() as f64;
    let value = g.iter().map(|v| v.abs()).sum::<f64>() / n;
    (value, g.mapv(|v| sign(v) / n))
}

/// Adaptive gradient rotation loss over the dominant orientations:
/// `(1/K) sum_k [ mean|grad_{tk+pi/2} R| - mean|grad_{tk} R|
///              + mean|grad_{tk} B| + mean|grad_{tk} (I - R)| ]`.
/// May be negative; the negative term rewards rain-orientation gradients
/// living in `R`.
pub fn loss_agr(
    i: &Array3<f64>,
    b: &Array3<f64>,
    r: &Array3<f64>,
    angles: &DominantDirections,
) -> Result<f64> {
    Ok(loss_agr_grad(i, b, r, angles)?.0)
}

/// Returns `(value, dB, dR)`.
pub fn loss_agr_grad(
    i: &Array3<f64>,
    b: &Array3<f64>,
    r: &Array3<f64>,
    angles: &DominantDirections,
) -> Result<(f64, Array3<f64>, Array3<f64>)> {
    check_shapes(i, b, r)?;
    let k = angles.angles_rad.len();
    assert!(k >= 1, "need at least one dominant direction");
    let scale = 1.0 / k as f64;
    let mut value = 0.0;
    let mut db = Array3::zeros(b.raw_dim());
    let mut dr = Array3::zeros(r.raw_dim());
    let i_minus_r = i - r;
    for &theta in &angles.angles_rad {
        let perp = theta + FRAC_PI_2;

        let (v1, s1) = mean_abs_and_sign(&directional_gradient(&r.view(), perp));
        let (v2, s2) = mean_abs_and_sign(&directional_gradient(&r.view(), theta));
        let (v3, s3) = mean_abs_and_sign(&directional_gradient(&b.view(), theta));
        let (v4, s4) = mean_abs_and_sign(&directional_gradient(&i_minus_r.view(), theta));
        value += scale * (v1 - v2 + v3 + v4);

        dr = dr
            + scale
                * (directional_gradient_adjoint(&s1.view(), perp)
                    - directional_gradient_adjoint(&s2.view(), theta)
                    - directional_gradient_adjoint(&s4.view(), theta));
        db = db + scale * directional_gradient_adjoint(&s3.view(), theta);
    }
    Ok((value, db, dr))
}

/// Weighted total (Eq. 11 shape): per-term values plus the combined scalar.
pub fn total_loss(
    i: &Array3<f64>,
    b: &Array3<f64>,
    r: &Array3<f64>,
    weights: &LossWeights,
    angles: Option<&DominantDirections>,
    eps: f64,
) -> Result<LossBreakdown> {
    let ll = loss_likelihood(i, b, r, eps)?;
    let rec = loss_rec(i, b, r)?;
    let tv = loss_tv(b);
    let agr = match angles {
        Some(a) => loss_agr(i, b, r, a)?,
        None => 0.0,
    };
    Ok(LossBreakdown {
        ll,
        rec,
        tv,
        agr,
        total: weights.lambda_ll * ll
            + weights.lambda_rec * rec
            + weights.lambda_tv * tv
            + weights.lambda_agr * agr,
        dominant_angles_used: angles.cloned(),
    })
}

/// Total loss plus gradients: `(breakdown, dTotal/dB, dTotal/dR)`.
pub fn total_loss_grad(
    i: &Array3<f64>,
    b: &Array3<f64>,
    r: &Array3<f64>,
    weights: &LossWeights,
    angles: Option<&DominantDirections>,
    eps: f64,
) -> Result<(LossBreakdown, Array3<f64>, Array3<f64>)> {
    let (ll, g_ll) = loss_likelihood_grad(i, b, r, eps)?;
    let (rec, g_rec) = loss_rec_grad(i, b, r)?;
    let (tv, g_tv) = loss_tv_grad(b);
    let (agr, g_agr_b, g_agr_r) = match angles {
        Some(a) => loss_agr_grad(i, b, r, a)?,
        None => (0.0, Array3::zeros(b.raw_dim()), Array3::zeros(r.raw_dim())),
    };
    let db = weights.lambda_ll * &g_ll
        + weights.lambda_rec * &g_rec
        + weights.lambda_tv * &g_tv
        + weights.lambda_agr * &g_agr_b;
    let dr = weights.lambda_ll * &g_ll
        + weights.lambda_rec * &g_rec
        + weights.lambda_agr * &g_agr_r;
    let breakdown = LossBreakdown {
        ll,
        rec,
        tv,
        agr,
        total: weights.lambda_ll * ll
            + weights.lambda_rec * rec
            + weights.lambda_tv * tv
            + weights.lambda_agr * agr,
        dominant_angles_used: angles.cloned(),
    };
    Ok((breakdown, db, dr))
}
