//! Compact neural radiance field backend.
//!
//! Positional encoding, a density/color MLP, stratified + hierarchical ray
//! sampling, and transmittance-weighted quadrature compositing. The renderer
//! is exposed behind the [`RenderBackend`] trait so alternative backends can
//! be swapped in; only the radiance-field backend is implemented here.
//!
//! Rays composite over a black background: where accumulated opacity is below
//! one, the missing transmittance contributes zero color.

mod composite;
mod encoding;
mod field;
mod render;
mod sampling;

pub use composite::{composite_ray, composite_ray_backward, RayRenderResult};
pub use encoding::{encoded_len, positional_encode, EncodingConfig};
pub use field::{FieldCache, FieldConfig, FieldGrads, NeuralField};
pub use render::{
    render_rays, render_rays_train, RenderBackend, NeuralRenderer, RenderConfig, RenderResult,
    TrainRender,
};
pub use sampling::{hierarchical_resample, stratified_sample, RaySamples, DEFAULT_PDF_FLOOR};

use ndarray::{Array1, Array2};

/// Anything that maps sample positions + view directions to density and
/// color. Implemented by [`NeuralField`] and by analytic stand-ins in tests.
pub trait FieldEval {
    /// `positions`, `dirs`: `(n, 3)`. Returns `sigma (n) >= 0` and
    /// `rgb (n, 3)` in `[0, 1]`.
    fn eval(&self, positions: &Array2<f64>, dirs: &Array2<f64>) -> (Array1<f64>, Array2<f64>);
}
