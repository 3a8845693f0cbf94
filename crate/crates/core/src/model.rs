//! The deep fully connected classifier and the surgery every pruning
//! strategy is built from.
//!
//! A net is an ordered stack of [`LinearLayer`]s with a leaky ReLU (and
//! dropout while training) between consecutive layers. All layers except
//! the final classifier can be masked or shrunk; the classifier keeps its
//! `num_classes` outputs.

use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine::stack::{stack_forward, Mode};
use crate::engine::{LinearLayer, Matrix, Scalar, DEFAULT_LEAKY_SLOPE};
use crate::{Error, Result};

/// Shape of the stepped-width architecture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    pub input_width: usize,
    pub base_filters: usize,
    pub hidden_layers: usize,
    pub width_step: usize,
    pub num_classes: usize,
}

impl ModelConfig {
    /// 175 base filters, ten classes.
    pub fn big() -> Self {
        Self {
            input_width: crate::dataio::FEATURE_WIDTH,
            base_filters: 175,
            hidden_layers: 27,
            width_step: 1,
            num_classes: 10,
        }
    }

    /// 75 base filters, five grouped classes.
    pub fn small() -> Self {
        Self {
            base_filters: 75,
            num_classes: 5,
            ..Self::big()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_width == 0 || self.base_filters == 0 || self.num_classes == 0 {
            return Err(Error::InvalidArgument(format!(
                "model widths must be >= 1: {self:?}"
            )));
        }
        Ok(())
    }

    /// Output widths of every layer except the classifier:
    /// the input layer plus one per hidden layer.
    pub fn filter_widths(&self) -> Vec<usize> {
        (0..=self.hidden_layers)
            .map(|i| self.base_filters + i * self.width_step)
            .collect()
    }

    /// `[input, w0, w1, ..., classes]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input_width];
        d.extend(self.filter_widths());
        d.push(self.num_classes);
        d
    }

    /// Closed-form count of every weight and bias slot.
    pub fn param_count(&self) -> usize {
        self.dims().windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

/// Ordered stack of masked linear layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Net<S = f32> {
    pub layers: Vec<LinearLayer<S>>,
    pub leaky_slope: f64,
}

/// The model every strategy transforms.
pub type PrunableNet = Net<f32>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountMode {
    All,
    Nonzero,
}

pub fn build_model(config: &ModelConfig, seed: u64) -> Result<PrunableNet> {
    config.validate()?;
    Net::from_dims(&config.dims(), seed)
}

impl<S: Scalar> Net<S> {
    /// Fresh net with layer `k` mapping `dims[k] → dims[k+1]`.
    pub fn from_dims(dims: &[usize], seed: u64) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidArgument(format!("bad layer dims {dims:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .map(|w| LinearLayer::init(w[0], w[1], &mut rng))
            .collect();
        Ok(Self {
            layers,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
        })
    }

    pub fn from_layers(layers: Vec<LinearLayer<S>>) -> Result<Self> {
        let net = Self {
            layers,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
        };
        net.check_chain()?;
        Ok(net)
    }

    pub fn check_chain(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidArgument("net has no layers".into()));
        }
        for (k, w) in self.layers.windows(2).enumerate() {
            if w[0].out_dim() != w[1].in_dim() {
                return Err(Error::shape(
                    "layer chain",
                    format!("layer {} in_dim {}", k + 1, w[0].out_dim()),
                    w[1].in_dim(),
                ));
            }
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim())
    }

    /// Index of the classifier layer.
    pub fn output_index(&self) -> usize {
        self.layers.len() - 1
    }

    /// Output width of every layer.
    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.out_dim()).collect()
    }

    /// Active (unmasked) filters of every layer.
    pub fn active_filters(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.active_filters()).collect()
    }

    pub fn layer_refs(&self) -> Vec<&LinearLayer<S>> {
        self.layers.iter().collect()
    }

    /// Inference-mode logits.
    pub fn forward(&self, x: &Matrix<S>) -> Result<Matrix<S>> {
        let refs = self.layer_refs();
        let pass = stack_forward::<S, ChaCha8Rng>(&refs, x, None, self.leaky_slope, Mode::Eval)?;
        Ok(pass.output)
    }

    /// Post-activation output of layer `index` (inference mode).
    pub fn activations(&self, x: &Matrix<S>, index: usize) -> Result<Matrix<S>> {
        if index >= self.layers.len() {
            return Err(Error::LayerIndex {
                index,
                layers: self.layers.len(),
            });
        }
        let refs: Vec<_> = self.layers[..=index].iter().collect();
        let pass = stack_forward::<S, ChaCha8Rng>(&refs, x, None, self.leaky_slope, Mode::Eval)?;
        Ok(crate::engine::leaky_relu(&pass.output, self.leaky_slope))
    }

    pub fn predict(&self, x: &Matrix<S>) -> Result<Vec<usize>> {
        Ok(self.forward(x)?.argmax_rows())
    }

    /// Counts weight and bias slots.
    ///
    /// In nonzero mode a masked filter's row and bias count as zero, while
    /// downstream weights are counted by their stored value.
    pub fn count_params(&self, mode: CountMode) -> usize {
        self.layers
            .iter()
            .map(|l| match mode {
                CountMode::All => l.weights.data().len() + l.bias.len(),
                CountMode::Nonzero => (0..l.out_dim())
                    .filter(|&j| l.mask[j])
                    .map(|j| {
                        let row = l.weights.row(j).iter().filter(|v| !v.is_zero()).count();
                        row + usize::from(!l.bias[j].is_zero())
                    })
                    .sum(),
            })
            .sum()
    }

    fn check_keep(&self, layer_index: usize, keep: &[usize]) -> Result<()> {
        let layers = self.layers.len();
        let layer = self.layers.get(layer_index).ok_or(Error::LayerIndex {
            index: layer_index,
            layers,
        })?;
        if keep.is_empty() {
            return Err(Error::EmptyKeepSet { layer: layer_index });
        }
        if let Some(&bad) = keep.iter().find(|&&j| j >= layer.out_dim()) {
            return Err(Error::InvalidArgument(format!(
                "filter {bad} out of range for layer {layer_index} with {} filters",
                layer.out_dim()
            )));
        }
        Ok(())
    }

    /// Sets `mask[j] = (j ∈ keep)` on one layer. Weights are untouched.
    pub fn mask_filters(&mut self, layer_index: usize, keep: &[usize]) -> Result<()> {
        self.check_keep(layer_index, keep)?;
        let mask = &mut self.layers[layer_index].mask;
        mask.iter_mut().for_each(|m| *m = false);
        for &j in keep {
            mask[j] = true;
        }
        Ok(())
    }

    /// Physically keeps only the given filters of one layer and the matching
    /// input columns of the next layer. `keep` is sorted and deduplicated.
    pub fn shrink_layer(&mut self, layer_index: usize, keep: &[usize]) -> Result<()> {
        self.check_keep(layer_index, keep)?;
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let layer = &mut self.layers[layer_index];
        layer.weights = layer.weights.select_rows(&keep);
        layer.bias = keep.iter().map(|&j| layer.bias[j]).collect();
        layer.mask = keep.iter().map(|&j| layer.mask[j]).collect();
        if let Some(next) = self.layers.get_mut(layer_index + 1) {
            next.weights = next.weights.select_cols(&keep);
        }
        Ok(())
    }

    /// Replaces layers `first..=last` with a single layer.
    pub fn replace_span(
        &mut self,
        first: usize,
        last: usize,
        new_layer: LinearLayer<S>,
    ) -> Result<()> {
        let layers = self.layers.len();
        if first > last || last >= layers {
            return Err(Error::LayerIndex {
                index: last,
                layers,
            });
        }
        let (span_in, span_out) = (self.layers[first].in_dim(), self.layers[last].out_dim());
        if new_layer.in_dim() != span_in || new_layer.out_dim() != span_out {
            return Err(Error::shape(
                "replace_span",
                format!("{span_in}->{span_out}"),
                format!("{}->{}", new_layer.in_dim(), new_layer.out_dim()),
            ));
        }
        self.layers.splice(first..=last, std::iter::once(new_layer));
        Ok(())
    }

    pub fn cast<T: Scalar>(&self) -> Net<T> {
        Net {
            layers: self
                .layers
                .iter()
                .map(|l| LinearLayer {
                    weights: l.weights.cast(),
                    bias: l.bias.iter().map(|b| T::of(b.f64())).collect(),
                    mask: l.mask.clone(),
                })
                .collect(),
            leaky_slope: self.leaky_slope,
        }
    }
}

const MAGIC: &[u8; 8] = b"PBNET\0\0\0";
const CHECKPOINT_VERSION: u32 = 1;

impl<S: Scalar> Net<S> {
    /// Binary checkpoint: magic, version, dtype, slope, then per layer the
    /// dims, weights, biases and mask, all little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.push(S::DTYPE);
        out.extend_from_slice(&self.leaky_slope.to_bits().to_le_bytes());
        out.extend_from_slice(&(self.layers.len() as u64).to_le_bytes());
        for l in &self.layers {
            out.extend_from_slice(&(l.in_dim() as u64).to_le_bytes());
            out.extend_from_slice(&(l.out_dim() as u64).to_le_bytes());
            for &w in l.weights.data() {
                w.write_le(&mut out);
            }
            for &b in &l.bias {
                b.write_le(&mut out);
            }
            out.extend(l.mask.iter().map(|&m| u8::from(m)));
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(8)? != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = u32::from_le_bytes(cur.take(4)?.try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let dtype = cur.take(1)?[0];
        if dtype != S::DTYPE {
            return Err(Error::Checkpoint(format!(
                "dtype tag {dtype} does not match {}",
                S::DTYPE
            )));
        }
        let leaky_slope = f64::from_bits(cur.u64()?);
        let n = cur.u64()? as usize;
        let mut layers = Vec::with_capacity(n.min(4096));
        for _ in 0..n {
            let in_dim = cur.u64()? as usize;
            let out_dim = cur.u64()? as usize;
            let w = cur.take(in_dim * out_dim * S::BYTES)?;
            let weights = w.chunks_exact(S::BYTES).map(S::read_le).collect();
            let b = cur.take(out_dim * S::BYTES)?;
            let bias = b.chunks_exact(S::BYTES).map(S::read_le).collect();
            let mask = cur.take(out_dim)?.iter().map(|&m| m != 0).collect();
            layers.push(LinearLayer {
                weights: Matrix::from_vec(out_dim, in_dim, weights)?,
                bias,
                mask,
            });
        }
        if cur.pos != bytes.len() {
            return Err(Error::Checkpoint("trailing bytes".into()));
        }
        let mut net = Net::from_layers(layers)?;
        net.leaky_slope = leaky_slope;
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut buf))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&buf)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_input(rows: usize, cols: usize, seed: u64) -> Matrix<f32> {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols).map(|_| rng.gen_range(-2.0..2.0)).collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn preset_architectures() {
        let big = ModelConfig::big();
        assert_eq!(big.filter_widths(), (175..=202).collect::<Vec<_>>());
        assert_eq!(big.dims().last(), Some(&10));
        let small = ModelConfig::small();
        assert_eq!(small.filter_widths(), (75..=102).collect::<Vec<_>>());
        assert_eq!(small.dims().last(), Some(&5));
    }

    #[test]
    fn degenerate_stack() {
        let cfg = ModelConfig {
            hidden_layers: 0,
            base_filters: 8,
            ..ModelConfig::small()
        };
        let net = build_model(&cfg, 0).unwrap();
        assert_eq!(net.layers.len(), 2);
        assert_eq!((net.layers[0].in_dim(), net.layers[0].out_dim()), (1515, 8));
        assert_eq!((net.layers[1].in_dim(), net.layers[1].out_dim()), (8, 5));
    }

    #[test]
    fn one_masked_filter_drops_row_plus_bias() {
        let net0 = Net::<f32>::from_dims(&[7, 5, 4, 3], 3).unwrap();
        let mut net = net0.clone();
        net.mask_filters(1, &[0, 1, 3]).unwrap();
        assert_eq!(
            net0.count_params(CountMode::Nonzero) - net.count_params(CountMode::Nonzero),
            5 + 1
        );
    }

    #[test]
    fn mask_edge_cases() {
        let x = random_input(6, 4, 1);
        let mut net = Net::<f32>::from_dims(&[4, 3, 2], 9).unwrap();
        let before = net.forward(&x).unwrap();
        net.mask_filters(0, &[0, 1, 2]).unwrap();
        assert_eq!(net.forward(&x).unwrap(), before);
        assert!(matches!(
            net.mask_filters(0, &[]),
            Err(Error::EmptyKeepSet { layer: 0 })
        ));
        net.mask_filters(0, &[0]).unwrap();
        let h = crate::engine::linear_forward(&x, &net.layers[0]).unwrap();
        for b in 0..6 {
            assert_eq!(h[(b, 1)], 0.0);
            assert_eq!(h[(b, 2)], 0.0);
        }
    }

    #[test]
    fn shrink_rechains_dims() {
        let mut net = Net::<f32>::from_dims(&[3, 4, 4, 2], 0).unwrap();
        let all = net.count_params(CountMode::All);
        net.shrink_layer(1, &[0, 1, 2, 3]).unwrap();
        assert_eq!(net.count_params(CountMode::All), all);
        net.shrink_layer(1, &[0, 2]).unwrap();
        assert_eq!(net.layers[2].in_dim(), 2);
        net.check_chain().unwrap();
        assert!(net.shrink_layer(1, &[]).is_err());
    }

    #[test]
    fn replace_span_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net = Net::<f32>::from_dims(&[3, 4, 5, 6, 7, 8, 2], 0).unwrap();
        let fresh = LinearLayer::init(4, 5, &mut rng);
        net.replace_span(1, 1, fresh).unwrap();
        assert_eq!(net.layers.len(), 6);
        let span = LinearLayer::init(4, 8, &mut rng);
        net.replace_span(1, 4, span).unwrap();
        assert_eq!(net.layers.len(), 3);
        net.check_chain().unwrap();
        let wrong = LinearLayer::init(3, 3, &mut rng);
        assert!(net.replace_span(0, 0, wrong).is_err());
    }

    #[test]
    fn replace_with_composed_linear_pair() {
        // Two linear maps with nothing between them compose to W2·W1, W2·b1 + b2.
        let net = Net::<f64>::from_dims(&[3, 4, 2], 5).unwrap();
        let (l1, l2) = (&net.layers[0], &net.layers[1]);
        let mut w = Matrix::<f64>::zeros(2, 3);
        let mut b = vec![0.0; 2];
        for i in 0..2 {
            for j in 0..3 {
                w[(i, j)] = (0..4).map(|k| l2.weights[(i, k)] * l1.weights[(k, j)]).sum();
            }
            b[i] = l2.bias[i] + (0..4).map(|k| l2.weights[(i, k)] * l1.bias[k]).sum::<f64>();
        }
        let composed = LinearLayer::from_parts(w, b).unwrap();
        let x = random_input(5, 3, 2).cast::<f64>();
        let direct = crate::engine::linear_forward(
            &crate::engine::linear_forward(&x, l1).unwrap(),
            l2,
        )
        .unwrap();
        let mut replaced = net.clone();
        replaced.replace_span(0, 1, composed).unwrap();
        let out = replaced.forward(&x).unwrap();
        for (a, b) in out.data().iter().zip(direct.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn checkpoint_round_trip_bitwise() {
        let mut net = Net::<f32>::from_dims(&[5, 4, 3], 11).unwrap();
        net.mask_filters(0, &[1, 3]).unwrap();
        let bytes = net.to_bytes();
        let back = Net::<f32>::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(back, net);
        assert!(Net::<f64>::from_bytes(&bytes).is_err());
        assert!(Net::<f32>::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }

    proptest! {
        #[test]
        fn closed_form_matches_slot_enumeration(
            input in 1usize..40, base in 1usize..12, hidden in 0usize..6,
            step in 0usize..3, classes in 1usize..6,
        ) {
            let cfg = ModelConfig { input_width: input, base_filters: base, hidden_layers: hidden, width_step: step, num_classes: classes };
            let net = build_model(&cfg, 1).unwrap();
            let slots: usize = net.layers.iter()
                .map(|l| l.weights.data().len() + l.bias.len())
                .sum();
            prop_assert_eq!(cfg.param_count(), slots);
            prop_assert_eq!(net.count_params(CountMode::All), slots);
        }

        #[test]
        fn surgery_keeps_chain(ops in proptest::collection::vec((0usize..4, any::<u64>(), any::<bool>()), 1..12)) {
            use rand::seq::index::sample;
            let mut net = Net::<f32>::from_dims(&[6, 8, 7, 6, 5, 3], 2).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            for (k, s, replace) in ops {
                let n = net.layers.len();
                if n < 2 { break; }
                let k = k % (n - 1);
                let mut r = ChaCha8Rng::seed_from_u64(s);
                if replace && k + 1 < n - 1 {
                    let l = LinearLayer::init(net.layers[k].in_dim(), net.layers[k + 1].out_dim(), &mut rng);
                    net.replace_span(k, k + 1, l).unwrap();
                } else {
                    let w = net.layers[k].out_dim();
                    let amount = 1 + (s as usize) % w;
                    let keep = sample(&mut r, w, amount).into_vec();
                    net.shrink_layer(k, &keep).unwrap();
                }
                prop_assert!(net.check_chain().is_ok());
                prop_assert_eq!(net.num_classes(), 3);
            }
        }

        #[test]
        fn mask_then_shrink_equivalent(seed in any::<u64>(), layer in 0usize..3, subset in 1u32..255) {
            let net = Net::<f32>::from_dims(&[5, 8, 8, 8, 4], seed).unwrap();
            let keep: Vec<usize> = (0..8).filter(|j| subset & (1 << j) != 0).collect();
            let mut masked = net.clone();
            masked.mask_filters(layer, &keep).unwrap();
            let mut shrunk = masked.clone();
            shrunk.shrink_layer(layer, &keep).unwrap();
            let x = random_input(7, 5, seed ^ 1);
            let a = masked.forward(&x).unwrap();
            let b = shrunk.forward(&x).unwrap();
            for (p, q) in a.data().iter().zip(b.data()) {
                prop_assert!((p - q).abs() <= 1e-6);
            }
        }
    }
}
