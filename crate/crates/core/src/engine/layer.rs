use rand::distributions::{Distribution, Uniform};
use rand::Rng;

use super::matrix::dot;
use super::{Matrix, Scalar};
use crate::{Error, Result};

/// Affine layer with one binary mask entry per output filter.
///
/// Weights are `out_dim × in_dim`. A masked filter (`mask[j] == false`)
/// produces exactly zero for every input.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearLayer<S = f32> {
    pub weights: Matrix<S>,
    pub bias: Vec<S>,
    pub mask: Vec<bool>,
}

/// Gradients of a single layer, accumulated in `f64`.
#[derive(Debug, Clone)]
pub struct LayerGrad {
    pub weights: Matrix<f64>,
    pub bias: Vec<f64>,
}

impl<S: Scalar> LinearLayer<S> {
    /// Uniform init in `±sqrt(1/fan_in)` for weights and biases.
    pub fn init<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let limit = (1.0 / in_dim.max(1) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit);
        let weights = (0..in_dim * out_dim)
            .map(|_| S::of(dist.sample(rng)))
            .collect();
        let bias = (0..out_dim).map(|_| S::of(dist.sample(rng))).collect();
        Self {
            weights: Matrix::from_vec(out_dim, in_dim, weights).expect("sized above"),
            bias,
            mask: vec![true; out_dim],
        }
    }

    pub fn from_parts(weights: Matrix<S>, bias: Vec<S>) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::shape(
                "LinearLayer::from_parts",
                format!("{} biases", weights.rows()),
                bias.len(),
            ));
        }
        let mask = vec![true; bias.len()];
        Ok(Self {
            weights,
            bias,
            mask,
        })
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn active_filters(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Affine map without the mask applied.
    pub fn affine(&self, x: &Matrix<S>) -> Result<Matrix<S>> {
        if x.cols() != self.in_dim() {
            return Err(Error::shape(
                "linear_forward",
                format!("{} input columns", self.in_dim()),
                format!("{}x{}", x.rows(), x.cols()),
            ));
        }
        let mut out = Matrix::zeros(x.rows(), self.out_dim());
        for b in 0..x.rows() {
            let xb = x.row(b);
            let dst = out.row_mut(b);
            for (j, d) in dst.iter_mut().enumerate() {
                *d = S::of(dot(xb, self.weights.row(j)) + self.bias[j].f64());
            }
        }
        Ok(out)
    }
}

/// `out[b][j] = mask[j] · (x[b] · W[j] + bias[j])`.
pub fn linear_forward<S: Scalar>(x: &Matrix<S>, layer: &LinearLayer<S>) -> Result<Matrix<S>> {
    let mut out = layer.affine(x)?;
    apply_gates(&mut out, &layer.mask, None);
    Ok(out)
}

/// Multiplies output column `j` by `mask[j]` and, when given, by `gates[j]`.
pub(crate) fn apply_gates<S: Scalar>(out: &mut Matrix<S>, mask: &[bool], gates: Option<&[S]>) {
    let cols = out.cols();
    for b in 0..out.rows() {
        let row = out.row_mut(b);
        for j in 0..cols {
            if !mask[j] {
                row[j] = S::zero();
            } else if let Some(g) = gates {
                row[j] = row[j] * g[j];
            }
        }
    }
}

/// Parameter, input and gate gradients of one layer.
pub type LinearBackward<S> = (LayerGrad, Option<Matrix<S>>, Option<Vec<f64>>);

/// Backward pass of a (optionally gated) masked linear layer.
///
/// `affine_out` is the pre-mask affine output, needed only for the gate
/// gradient. Returns the parameter gradient, the input gradient, and the
/// gate gradient when gates were used. Parameter gradients are empty
/// (`0×0`) when `need_param_grad` is false.
pub fn linear_backward<S: Scalar>(
    x: &Matrix<S>,
    layer: &LinearLayer<S>,
    grad_out: &Matrix<S>,
    gates: Option<&[S]>,
    affine_out: Option<&Matrix<S>>,
    need_param_grad: bool,
    need_input_grad: bool,
) -> Result<LinearBackward<S>> {
    let (out_dim, in_dim) = layer.weights.shape();
    if grad_out.cols() != out_dim || grad_out.rows() != x.rows() || x.cols() != in_dim {
        return Err(Error::shape(
            "linear_backward",
            format!("{}x{out_dim} grad for {}x{in_dim} input", x.rows(), x.rows()),
            format!("{}x{}", grad_out.rows(), grad_out.cols()),
        ));
    }
    // Effective per-filter multiplier.
    let scale: Vec<f64> = (0..out_dim)
        .map(|j| {
            if !layer.mask[j] {
                0.0
            } else {
                gates.map_or(1.0, |g| g[j].f64())
            }
        })
        .collect();

    let (mut gw, mut gb) = if need_param_grad {
        (Matrix::<f64>::zeros(out_dim, in_dim), vec![0.0f64; out_dim])
    } else {
        (Matrix::<f64>::zeros(0, 0), Vec::new())
    };
    let mut gx = need_input_grad.then(|| vec![0.0f64; x.rows() * in_dim]);
    let mut ggate = gates.map(|_| vec![0.0f64; out_dim]);

    for b in 0..x.rows() {
        let xb = x.row(b);
        let gob = grad_out.row(b);
        for j in 0..out_dim {
            let go = gob[j].f64();
            if let (Some(gg), Some(z)) = (ggate.as_mut(), affine_out) {
                if layer.mask[j] {
                    gg[j] += go * z[(b, j)].f64();
                }
            }
            let g = go * scale[j];
            if g == 0.0 {
                continue;
            }
            if need_param_grad {
                gb[j] += g;
                let wrow = gw.row_mut(j);
                for (w, xi) in wrow.iter_mut().zip(xb) {
                    *w += g * xi.f64();
                }
            }
            if let Some(gx) = gx.as_mut() {
                let dst = &mut gx[b * in_dim..(b + 1) * in_dim];
                for (d, w) in dst.iter_mut().zip(layer.weights.row(j)) {
                    *d += g * w.f64();
                }
            }
        }
    }
    let gx = gx.map(|v| {
        Matrix::from_vec(x.rows(), in_dim, v.into_iter().map(S::of).collect()).expect("sized")
    });
    Ok((
        LayerGrad {
            weights: gw,
            bias: gb,
        },
        gx,
        ggate,
    ))
}
