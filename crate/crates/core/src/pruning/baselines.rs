use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{sub_seed, PrunePlan, StrategyConfig};
use crate::engine::{train, Dataset};
use crate::model::{Net, PrunableNet};
use crate::Result;

const TAG_KEEP: u64 = 0x5E1EC7;
const TAG_TRAIN: u64 = 0x7A11;
const TAG_INIT: u64 = 0x1417;

/// Masks a uniformly random `keep[k]`-subset of every planned layer, then retrains.
pub fn random_structured(
    net: &PrunableNet,
    plan: &PrunePlan,
    data: &Dataset<f32>,
    config: &StrategyConfig,
) -> Result<PrunableNet> {
    let mut out = net.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, TAG_KEEP));
    for (k, (&w, &keep)) in plan.widths.iter().zip(&plan.keep).enumerate() {
        let mut chosen = sample(&mut rng, w, keep).into_vec();
        chosen.sort_unstable();
        out.mask_filters(k, &chosen)?;
    }
    train(&mut out, data, &config.phase(config.prune_epochs, TAG_TRAIN))?;
    Ok(out)
}

/// Fresh net at the planned widths, trained from scratch.
pub fn recreation(
    net: &PrunableNet,
    plan: &PrunePlan,
    data: &Dataset<f32>,
    config: &StrategyConfig,
) -> Result<PrunableNet> {
    let dims = plan.shrunk_dims(net.input_width(), net.num_classes());
    let mut out = Net::from_dims(&dims, sub_seed(config.seed, TAG_INIT))?;
    out.leaky_slope = net.leaky_slope;
    train(&mut out, data, &config.phase(config.prune_epochs, TAG_TRAIN))?;
    Ok(out)
}
