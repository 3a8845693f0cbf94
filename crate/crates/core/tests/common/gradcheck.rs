//! Central finite-difference checks of every differentiable op, in f64.
//! Each check covers [`CASES`] random shapes and returns the count.

use prunebench::engine::stack::{stack_backward, stack_forward, Mode};
use prunebench::engine::{
    dropout, leaky_relu, leaky_relu_backward, linear_backward, softmax_cross_entropy, LinearLayer,
    Matrix,
};
use prunebench::Net;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-4;
const TOL: f64 = 1e-4;
pub const CASES: u64 = 24;

fn rel_err(a: &[f64], n: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(n).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(a).max(norm(n)).max(1e-8)
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix<f64> {
    Matrix::from_vec(r, c, (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn weighted_sum(y: &Matrix<f64>, r: &Matrix<f64>) -> f64 {
    y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

/// Central difference of `f` with respect to every entry of `params`.
fn numeric(params: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + H;
            let up = f(&p);
            p[i] = orig - H;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * H)
        })
        .collect()
}

fn check(label: &str, seed: u64, analytic: &[f64], numeric: &[f64]) -> Result<(), String> {
    let e = rel_err(analytic, numeric);
    if e < TOL {
        Ok(())
    } else {
        Err(format!("{label} seed {seed}: relative error {e:e}"))
    }
}

fn random_layer(rng: &mut ChaCha8Rng, i: usize, o: usize, masked: bool) -> LinearLayer<f64> {
    let mut l = LinearLayer::<f64>::init(i, o, rng);
    if masked && o > 1 {
        let j = rng.gen_range(0..o);
        l.mask[j] = false;
    }
    l
}

pub fn linear_layer_gradients() -> Result<u64, String> {
    for seed in 0..CASES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (b, i, o) = (rng.gen_range(1..5), rng.gen_range(1..6), rng.gen_range(1..6));
        let layer = random_layer(&mut rng, i, o, seed % 2 == 0);
        let x = random_matrix(&mut rng, b, i);
        let r = random_matrix(&mut rng, b, o);
        let gates: Option<Vec<f64>> =
            (seed % 3 != 0).then(|| (0..o).map(|_| rng.gen_range(0.1..1.0)).collect());

        let forward = |l: &LinearLayer<f64>, x: &Matrix<f64>, g: Option<&[f64]>| {
            let pass = stack_forward::<f64, ChaCha8Rng>(
                &[l],
                x,
                Some(&[g]),
                0.01,
                Mode::Eval,
            )
            .unwrap();
            weighted_sum(&pass.output, &r)
        };
        let affine = layer.affine(&x).unwrap();
        let (lg, gx, gg) =
            linear_backward(&x, &layer, &r, gates.as_deref(), Some(&affine), true, true).unwrap();

        let nw = numeric(layer.weights.data(), |w| {
            let mut l = layer.clone();
            l.weights.data_mut().copy_from_slice(w);
            forward(&l, &x, gates.as_deref())
        });
        check("weights", seed, lg.weights.data(), &nw)?;
        let nb = numeric(&layer.bias, |bv| {
            let mut l = layer.clone();
            l.bias.copy_from_slice(bv);
            forward(&l, &x, gates.as_deref())
        });
        check("bias", seed, &lg.bias, &nb)?;
        let nx = numeric(x.data(), |xv| {
            let xm = Matrix::from_vec(b, i, xv.to_vec()).unwrap();
            forward(&layer, &xm, gates.as_deref())
        });
        check("input", seed, gx.unwrap().data(), &nx)?;
        if let Some(g) = &gates {
            let ng = numeric(g, |gv| forward(&layer, &x, Some(gv)));
            let ag = gg.unwrap();
            // Masked filters are hard zeros, so their gate has no effect either way.
            check("gates", seed, &ag, &ng)?;
        }
    }
    Ok(CASES)
}

pub fn leaky_relu_gradient() -> Result<u64, String> {
    for seed in 0..CASES {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let (r, c) = (rng.gen_range(1..6), rng.gen_range(1..6));
        let slope = rng.gen_range(0.0..0.3);
        // Keep inputs away from the kink so the central difference is exact.
        let x = random_matrix(&mut rng, r, c).map(|v| if v.abs() < 0.05 { v + 0.1 } else { v });
        let w = random_matrix(&mut rng, r, c);
        let a = leaky_relu_backward(&x, &w, slope);
        let n = numeric(x.data(), |xv| {
            let xm = Matrix::from_vec(r, c, xv.to_vec()).unwrap();
            weighted_sum(&leaky_relu(&xm, slope), &w)
        });
        check("leaky_relu", seed, a.data(), &n)?;
    }
    Ok(CASES)
}

pub fn dropout_gradient_with_fixed_mask() -> Result<u64, String> {
    for seed in 0..CASES {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
        let (r, c) = (rng.gen_range(1..6), rng.gen_range(1..6));
        let rate = rng.gen_range(0.1..0.7);
        let x = random_matrix(&mut rng, r, c);
        let w = random_matrix(&mut rng, r, c);
        let run = |xm: &Matrix<f64>| {
            let mut mask_rng = ChaCha8Rng::seed_from_u64(seed);
            dropout(xm, rate, true, &mut mask_rng).unwrap()
        };
        let (_, scale) = run(&x);
        let scale = scale.unwrap();
        let a: Vec<f64> = w.data().iter().zip(scale.data()).map(|(g, s)| g * s).collect();
        let n = numeric(x.data(), |xv| {
            let xm = Matrix::from_vec(r, c, xv.to_vec()).unwrap();
            weighted_sum(&run(&xm).0, &w)
        });
        check("dropout", seed, &a, &n)?;
    }
    Ok(CASES)
}

pub fn cross_entropy_gradient() -> Result<u64, String> {
    for seed in 0..CASES {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
        let (b, c) = (rng.gen_range(1..6), rng.gen_range(2..7));
        let logits = random_matrix(&mut rng, b, c).map(|v| 3.0 * v);
        let labels: Vec<usize> = (0..b).map(|_| rng.gen_range(0..c)).collect();
        let (_, g) = softmax_cross_entropy(&logits, &labels).unwrap();
        let n = numeric(logits.data(), |lv| {
            let lm = Matrix::from_vec(b, c, lv.to_vec()).unwrap();
            softmax_cross_entropy(&lm, &labels).unwrap().0
        });
        check("cross_entropy", seed, g.data(), &n)?;
    }
    Ok(CASES)
}

/// Full stack: linear, gates, masks, leaky ReLU and the loss composed.
pub fn whole_network_gradients() -> Result<u64, String> {
    for seed in 0..CASES {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + seed);
        let depth = rng.gen_range(2..5);
        let mut dims = vec![rng.gen_range(1..6)];
        for _ in 0..depth {
            dims.push(rng.gen_range(2..6));
        }
        let mut net = Net::<f64>::from_dims(&dims, seed).unwrap();
        for l in net.layers.iter_mut().take(depth - 1) {
            if rng.gen_bool(0.5) {
                let j = rng.gen_range(0..l.out_dim());
                l.mask[j] = false;
            }
        }
        let b = rng.gen_range(1..5);
        let x = random_matrix(&mut rng, b, dims[0]);
        let classes = *dims.last().unwrap();
        let y: Vec<usize> = (0..b).map(|_| rng.gen_range(0..classes)).collect();
        let gate_vals: Vec<Vec<f64>> = net
            .layers
            .iter()
            .map(|l| (0..l.out_dim()).map(|_| rng.gen_range(0.2..1.0)).collect())
            .collect();
        let slope = net.leaky_slope;

        let loss_of = |n: &Net<f64>, x: &Matrix<f64>, gv: &[Vec<f64>]| {
            let gates: Vec<Option<&[f64]>> = gv.iter().map(|g| Some(g.as_slice())).collect();
            let pass =
                stack_forward::<f64, ChaCha8Rng>(&n.layer_refs(), x, Some(&gates), slope, Mode::Eval)
                    .unwrap();
            softmax_cross_entropy(&pass.output, &y).unwrap().0
        };

        let gates: Vec<Option<&[f64]>> = gate_vals.iter().map(|g| Some(g.as_slice())).collect();
        let refs = net.layer_refs();
        let pass =
            stack_forward::<f64, ChaCha8Rng>(&refs, &x, Some(&gates), slope, Mode::Eval).unwrap();
        let (_, g_out) = softmax_cross_entropy(&pass.output, &y).unwrap();
        let grads = stack_backward(&refs, &pass, &g_out, Some(&gates), slope, None, true).unwrap();

        for k in 0..net.layers.len() {
            let nw = numeric(net.layers[k].weights.data(), |w| {
                let mut n = net.clone();
                n.layers[k].weights.data_mut().copy_from_slice(w);
                loss_of(&n, &x, &gate_vals)
            });
            check(&format!("layer {k} weights"), seed, grads.layers[k].weights.data(), &nw)?;
            let nb = numeric(&net.layers[k].bias, |bv| {
                let mut n = net.clone();
                n.layers[k].bias.copy_from_slice(bv);
                loss_of(&n, &x, &gate_vals)
            });
            check(&format!("layer {k} bias"), seed, &grads.layers[k].bias, &nb)?;
            let ng = numeric(&gate_vals[k], |gv| {
                let mut all = gate_vals.clone();
                all[k] = gv.to_vec();
                loss_of(&net, &x, &all)
            });
            check(&format!("layer {k} gates"), seed, grads.gates[k].as_ref().unwrap(), &ng)?;
        }
        let nx = numeric(x.data(), |xv| {
            let xm = Matrix::from_vec(b, dims[0], xv.to_vec()).unwrap();
            loss_of(&net, &xm, &gate_vals)
        });
        check("input", seed, grads.input.unwrap().data(), &nx)?;
    }
    Ok(CASES)
}
