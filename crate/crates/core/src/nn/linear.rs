use ndarray::{Array1, Array2};
use rand::Rng;

/// Fully connected layer `y = x W^T + b` with weights stored `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct LinearGrad {
    pub dw: Array2<f64>,
    pub db: Array1<f64>,
}

impl Linear {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Linear {
            w: Array2::zeros((out_dim, in_dim)),
            b: Array1::zeros(out_dim),
        }
    }

    /// Glorot-uniform init, bias zero.
    pub fn glorot(in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let w = Array2::from_shape_fn((out_dim, in_dim), |_| rng.gen_range(-limit..limit));
        Linear {
            w,
            b: Array1::zeros(out_dim),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.w.nrows()
    }

    /// `x` is `(batch, in)`; returns `(batch, out)`.
    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut y = x.dot(&self.w.t());
        y += &self.b;
        y
    }

    /// Backward pass. `x` is the forward input, `dy` the output gradient.
    /// Returns parameter gradients and the input gradient.
    pub fn backward(&self, x: &Array2<f64>, dy: &Array2<f64>) -> (LinearGrad, Array2<f64>) {
        let dw = dy.t().dot(x);
        let db = dy.sum_axis(ndarray::Axis(0));
        let dx = dy.dot(&self.w);
        (LinearGrad { dw, db }, dx)
    }

    /// Parameter gradients only (skips the input-gradient GEMM).
    pub fn backward_params(&self, x: &Array2<f64>, dy: &Array2<f64>) -> LinearGrad {
        LinearGrad {
            dw: dy.t().dot(x),
            db: dy.sum_axis(ndarray::Axis(0)),
        }
    }

    pub fn grad_zeros(&self) -> LinearGrad {
        LinearGrad {
            dw: Array2::zeros(self.w.raw_dim()),
            db: Array1::zeros(self.b.raw_dim()),
        }
    }
}

impl LinearGrad {
    pub fn accumulate(&mut self, other: &LinearGrad) {
        self.dw += &other.dw;
        self.db += &other.db;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn backward_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut layer = Linear::glorot(4, 3, &mut rng);
        let x = Array2::from_shape_fn((5, 4), |_| rng.gen_range(-1.0..1.0));
        // Loss = sum(y^2) so dy = 2y.
        let y = layer.forward(&x);
        let dy = 2.0 * &y;
        let (grad, dx) = layer.backward(&x, &dy);

        let h = 1e-6;
        let loss = |l: &Linear, xv: &Array2<f64>| l.forward(xv).iter().map(|v| v * v).sum::<f64>();
        for idx in [(0, 0), (2, 3), (1, 1)] {
            let orig = layer.w[idx];
            layer.w[idx] = orig + h;
            let lp = loss(&layer, &x);
            layer.w[idx] = orig - h;
            let lm = loss(&layer, &x);
            layer.w[idx] = orig;
            let fd = (lp - lm) / (2.0 * h);
            assert!((fd - grad.dw[idx]).abs() / fd.abs().max(1.0) < 1e-6);
        }
        let mut x2 = x.clone();
        let orig = x2[(3, 2)];
        x2[(3, 2)] = orig + h;
        let lp = loss(&layer, &x2);
        x2[(3, 2)] = orig - h;
        let lm = loss(&layer, &x2);
        let fd = (lp - lm) / (2.0 * h);
        assert!((fd - dx[(3, 2)]).abs() / fd.abs().max(1.0) < 1e-6);
    }
}
