use ndarray::{Array1, Array2, Array3, Array4};
use rand::Rng;

/// 3x3 convolution, stride 1, zero padding 1 ("same"). Feature maps are
/// channel-first `(c, h, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    /// `(out, in, 3, 3)`
    pub w: Array4<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct Conv2dGrad {
    pub dw: Array4<f64>,
    pub db: Array1<f64>,
}

const K: usize = 3;

impl Conv2d {
    pub fn zeros(in_ch: usize, out_ch: usize) -> Self {
        Conv2d {
            w: Array4::zeros((out_ch, in_ch, K, K)),
            b: Array1::zeros(out_ch),
        }
    }

    /// He-uniform init, bias zero.
    pub fn he(in_ch: usize, out_ch: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (in_ch * K * K) as f64).sqrt();
        let w = Array4::from_shape_fn((out_ch, in_ch, K, K), |_| rng.gen_range(-limit..limit));
        Conv2d {
            w,
            b: Array1::zeros(out_ch),
        }
    }

    pub fn in_ch(&self) -> usize {
        self.w.shape()[1]
    }

    pub fn out_ch(&self) -> usize {
        self.w.shape()[0]
    }

    /// im2col: `(h*w, in*9)` with zero padding.
    fn im2col(x: &Array3<f64>) -> Array2<f64> {
        let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let mut col = Array2::zeros((h * w, c * K * K));
        for r in 0..h {
            for q in 0..w {
                let row = r * w + q;
                let mut col_idx = 0;
                for ch in 0..c {
                    for dr in 0..K {
                        for dq in 0..K {
                            let rr = r as isize + dr as isize - 1;
                            let qq = q as isize + dq as isize - 1;
                            if rr >= 0 && rr < h as isize && qq >= 0 && qq < w as isize {
                                col[(row, col_idx)] = x[(ch, rr as usize, qq as usize)];
                            }
                            col_idx += 1;
                        }
                    }
                }
            }
        }
        col
    }

    fn col2im(col: &Array2<f64>, c: usize, h: usize, w: usize) -> Array3<f64> {
        let mut x = Array3::zeros((c, h, w));
        for r in 0..h {
            for q in 0..w {
                let row = r * w + q;
                let mut col_idx = 0;
                for ch in 0..c {
                    for dr in 0..K {
                        for dq in 0..K {
                            let rr = r as isize + dr as isize - 1;
                            let qq = q as isize + dq as isize - 1;
                            if rr >= 0 && rr < h as isize && qq >= 0 && qq < w as isize {
                                x[(ch, rr as usize, qq as usize)] += col[(row, col_idx)];
                            }
                            col_idx += 1;
                        }
                    }
                }
            }
        }
        x
    }

    fn w_matrix(&self) -> Array2<f64> {
        let (o, i) = (self.out_ch(), self.in_ch());
        self.w
            .to_shape((o, i * K * K))
            .expect("contiguous conv weights")
            .to_owned()
    }

    /// `x` is `(in, h, w)`; returns `(out, h, w)`.
    pub fn forward(&self, x: &Array3<f64>) -> Array3<f64> {
        let (h, w) = (x.shape()[1], x.shape()[2]);
        let col = Self::im2col(x);
        let mut y = col.dot(&self.w_matrix().t()); // (h*w, out)
        y += &self.b;
        let o = self.out_ch();
        let mut out = Array3::zeros((o, h, w));
        for r in 0..h {
            for q in 0..w {
                for ch in 0..o {
                    out[(ch, r, q)] = y[(r * w + q, ch)];
                }
            }
        }
        out
    }

    /// Returns parameter gradients and the input gradient.
    pub fn backward(&self, x: &Array3<f64>, dy: &Array3<f64>) -> (Conv2dGrad, Array3<f64>) {
        let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let o = self.out_ch();
        let col = Self::im2col(x);
        let mut dy_mat = Array2::zeros((h * w, o));
        for r in 0..h {
            for q in 0..w {
                for ch in 0..o {
                    dy_mat[(r * w + q, ch)] = dy[(ch, r, q)];
                }
            }
        }
        let dw_mat = dy_mat.t().dot(&col); // (out, in*9)
        let dw = dw_mat
            .to_shape((o, c, K, K))
            .expect("contiguous grad")
            .to_owned();
        let db = dy_mat.sum_axis(ndarray::Axis(0));
        let dcol = dy_mat.dot(&self.w_matrix()); // (h*w, in*9)
        let dx = Self::col2im(&dcol, c, h, w);
        (Conv2dGrad { dw, db }, dx)
    }

    pub fn grad_zeros(&self) -> Conv2dGrad {
        Conv2dGrad {
            dw: Array4::zeros(self.w.raw_dim()),
            db: Array1::zeros(self.b.raw_dim()),
        }
    }
}

impl Conv2dGrad {
    pub fn accumulate(&mut self, other: &Conv2dGrad) {
        self.dw += &other.dw;
        self.db += &other.db;
    }
}

/// Nearest-neighbour 2x upsampling of a `(c, h, w)` map.
pub fn upsample2x_nearest(x: &Array3<f64>) -> Array3<f64> {
    let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let mut out = Array3::zeros((c, h * 2, w * 2));
    for ch in 0..c {
        for r in 0..h {
            for q in 0..w {
                let v = x[(ch, r, q)];
                out[(ch, 2 * r, 2 * q)] = v;
                out[(ch, 2 * r + 1, 2 * q)] = v;
                out[(ch, 2 * r, 2 * q + 1)] = v;
                out[(ch, 2 * r + 1, 2 * q + 1)] = v;
            }
        }
    }
    out
}

/// Adjoint of nearest-neighbour upsampling: sums each 2x2 block.
pub fn upsample2x_backward(dy: &Array3<f64>) -> Array3<f64> {
    let (c, h2, w2) = (dy.shape()[0], dy.shape()[1], dy.shape()[2]);
    let (h, w) = (h2 / 2, w2 / 2);
    let mut dx = Array3::zeros((c, h, w));
    for ch in 0..c {
        for r in 0..h {
            for q in 0..w {
                dx[(ch, r, q)] = dy[(ch, 2 * r, 2 * q)]
                    + dy[(ch, 2 * r + 1, 2 * q)]
                    + dy[(ch, 2 * r, 2 * q + 1)]
                    + dy[(ch, 2 * r + 1, 2 * q + 1)];
            }
        }
    }
    dx
}
