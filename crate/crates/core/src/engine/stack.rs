//! Forward and backward passes over an ordered stack of linear layers.
//!
//! Every layer except the last is followed by a leaky ReLU and dropout. The
//! last layer produces logits. Layers are passed by reference so callers can
//! assemble a stack out of layers owned by different structures (the
//! layer-replacement strategies route batches through mixed stacks).

use rand::Rng;

use super::layer::{apply_gates, linear_backward, LayerGrad, LinearLayer};
use super::ops::{dropout, leaky_relu, leaky_relu_backward};
use super::{Matrix, Scalar};
use crate::Result;

/// Whether dropout is active.
pub enum Mode<'r, R: Rng + ?Sized> {
    Eval,
    Train { dropout: f64, rng: &'r mut R },
}

/// Cached intermediates of one forward pass.
#[derive(Debug, Clone)]
pub struct StackPass<S> {
    /// Input fed to each layer.
    pub inputs: Vec<Matrix<S>>,
    /// Affine output before masks and gates; kept only for gated layers.
    pub affine: Vec<Option<Matrix<S>>>,
    /// Masked (and gated) layer output, i.e. the activation input.
    pub linear: Vec<Matrix<S>>,
    pub dropout: Vec<Option<Matrix<S>>>,
    pub output: Matrix<S>,
}

#[derive(Debug, Clone)]
pub struct StackGrads<S> {
    /// One entry per layer; empty for layers whose parameters were not requested.
    pub layers: Vec<LayerGrad>,
    pub gates: Vec<Option<Vec<f64>>>,
    pub input: Option<Matrix<S>>,
}

fn gate_of<'a, S>(gates: Option<&'a [Option<&'a [S]>]>, k: usize) -> Option<&'a [S]> {
    gates.and_then(|g| g.get(k).copied().flatten())
}

pub fn stack_forward<S: Scalar, R: Rng + ?Sized>(
    layers: &[&LinearLayer<S>],
    x: &Matrix<S>,
    gates: Option<&[Option<&[S]>]>,
    slope: f64,
    mut mode: Mode<'_, R>,
) -> Result<StackPass<S>> {
    let n = layers.len();
    let mut pass = StackPass {
        inputs: Vec::with_capacity(n),
        affine: Vec::with_capacity(n),
        linear: Vec::with_capacity(n),
        dropout: Vec::with_capacity(n),
        output: Matrix::zeros(0, 0),
    };
    let mut h = x.clone();
    for (k, layer) in layers.iter().enumerate() {
        let z = layer.affine(&h)?;
        let gate = gate_of(gates, k);
        let mut lin = z.clone();
        apply_gates(&mut lin, &layer.mask, gate);
        pass.affine.push(gate.map(|_| z));
        pass.inputs.push(h);
        if k + 1 == n {
            pass.output = lin.clone();
            pass.linear.push(lin);
            pass.dropout.push(None);
            break;
        }
        let act = leaky_relu(&lin, slope);
        let (next, drop) = match &mut mode {
            Mode::Eval => (act, None),
            Mode::Train { dropout: rate, rng } => dropout(&act, *rate, true, &mut **rng)?,
        };
        pass.linear.push(lin);
        pass.dropout.push(drop);
        h = next;
    }
    if n == 0 {
        pass.output = x.clone();
    }
    Ok(pass)
}

/// Backpropagates `grad_output` through a cached pass.
///
/// `need_params[k]` selects which layers get parameter gradients; `None`
/// means all of them.
pub fn stack_backward<S: Scalar>(
    layers: &[&LinearLayer<S>],
    pass: &StackPass<S>,
    grad_output: &Matrix<S>,
    gates: Option<&[Option<&[S]>]>,
    slope: f64,
    need_params: Option<&[bool]>,
    need_input_grad: bool,
) -> Result<StackGrads<S>> {
    let n = layers.len();
    let mut layer_grads = vec![
        LayerGrad {
            weights: Matrix::zeros(0, 0),
            bias: Vec::new(),
        };
        n
    ];
    let mut gate_grads = vec![None; n];
    // Layers below the lowest one needing parameters only matter for the input gradient.
    let lowest = if need_input_grad {
        0
    } else {
        need_params.map_or(0, |np| np.iter().position(|&b| b).unwrap_or(n))
    };
    let lowest = match gates {
        Some(g) => g
            .iter()
            .position(|x| x.is_some())
            .map_or(lowest, |p| p.min(lowest)),
        None => lowest,
    };
    let mut grad = grad_output.clone();
    let mut input_grad = None;
    for k in (lowest..n).rev() {
        if k + 1 < n {
            if let Some(d) = &pass.dropout[k] {
                let data = grad
                    .data()
                    .iter()
                    .zip(d.data())
                    .map(|(&g, &m)| g * m)
                    .collect();
                grad = Matrix::from_vec(grad.rows(), grad.cols(), data)?;
            }
            grad = leaky_relu_backward(&pass.linear[k], &grad, slope);
        }
        let want_params = need_params.is_none_or(|np| np[k]);
        let want_input = k > lowest || need_input_grad;
        let (lg, gx, gg) = linear_backward(
            &pass.inputs[k],
            layers[k],
            &grad,
            gate_of(gates, k),
            pass.affine[k].as_ref(),
            want_params,
            want_input,
        )?;
        layer_grads[k] = lg;
        gate_grads[k] = gg;
        match gx {
            Some(gx) if k > lowest => grad = gx,
            Some(gx) => input_grad = Some(gx),
            None => {}
        }
    }
    Ok(StackGrads {
        layers: layer_grads,
        gates: gate_grads,
        input: if need_input_grad { input_grad } else { None },
    })
}
