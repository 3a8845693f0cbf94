use crate::model::Net;
use crate::{Error, Result};

/// Hidden layers are pruned this much harder than the first layer.
pub const HIDDEN_TARGET_RATIO: f64 = 0.9;

/// Per-layer filter budgets derived from one pruning percent.
///
/// Entry `k` covers net layer `k`; the classifier is never part of a plan.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunePlan {
    pub percent: f64,
    pub widths: Vec<usize>,
    pub targets: Vec<f64>,
    pub keep: Vec<usize>,
}

/// `max(1, ceil(width · target))`, tolerant of representation error in the product.
pub fn keep_count(width: usize, target: f64) -> usize {
    let raw = width as f64 * target;
    let c = (raw - 1e-9).ceil().max(0.0) as usize;
    c.clamp(1, width.max(1))
}

fn check_percent(percent: f64) -> Result<()> {
    if !(percent > 0.0 && percent <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "pruning percent must be in (0, 1], got {percent}"
        )));
    }
    Ok(())
}

/// The first layer keeps `percent` of its filters and every hidden layer
/// keeps `0.9 · percent`. A percent of exactly 1 keeps everything.
pub fn make_plan<S: crate::engine::Scalar>(net: &Net<S>, percent: f64) -> Result<PrunePlan> {
    check_percent(percent)?;
    let widths: Vec<usize> = net.widths()[..net.output_index()].to_vec();
    let hidden = if percent >= 1.0 {
        1.0
    } else {
        HIDDEN_TARGET_RATIO * percent
    };
    let targets: Vec<f64> = (0..widths.len())
        .map(|k| if k == 0 { percent } else { hidden })
        .collect();
    let keep = widths
        .iter()
        .zip(&targets)
        .map(|(&w, &t)| keep_count(w, t))
        .collect();
    Ok(PrunePlan {
        percent,
        widths,
        targets,
        keep,
    })
}

impl PrunePlan {
    pub fn keeps_all(&self) -> bool {
        self.keep == self.widths
    }

    /// Fraction of all planned filters that survive.
    pub fn kept_fraction(&self) -> f64 {
        self.keep.iter().sum::<usize>() as f64 / self.widths.iter().sum::<usize>().max(1) as f64
    }

    /// Layer dims of a net physically built at the planned widths.
    pub fn shrunk_dims(&self, input_width: usize, num_classes: usize) -> Vec<usize> {
        let mut d = vec![input_width];
        d.extend(&self.keep);
        d.push(num_classes);
        d
    }

    /// True when every planned layer of `net` has between 1 and `keep[k]`
    /// active filters.
    pub fn is_met_by<S: crate::engine::Scalar>(&self, net: &Net<S>) -> bool {
        let active = net.active_filters();
        active.len() == self.keep.len() + 1
            && active
                .iter()
                .zip(&self.keep)
                .all(|(&a, &k)| a >= 1 && a <= k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, ModelConfig};

    #[test]
    fn full_percent_keeps_all() {
        let net = build_model(&ModelConfig::small(), 0).unwrap();
        let plan = make_plan(&net, 1.0).unwrap();
        assert!(plan.keeps_all());
    }

    #[test]
    fn small_model_four_percent() {
        let net = build_model(&ModelConfig::small(), 0).unwrap();
        let plan = make_plan(&net, 0.04).unwrap();
        assert_eq!(plan.keep[0], 3);
        for (k, &w) in plan.widths.iter().enumerate().skip(1) {
            assert_eq!(plan.keep[k], (w as f64 * 0.036).ceil() as usize);
        }
        assert_eq!(plan.keep.len(), 28);
    }

    #[test]
    fn rounding_is_exact_on_integral_products() {
        assert_eq!(keep_count(100, 0.5), 50);
        assert_eq!(keep_count(100, 0.9 * 0.5), 45);
        assert_eq!(keep_count(10, 0.001), 1);
        assert_eq!(keep_count(75, 0.99), 75);
    }

    #[test]
    fn percent_bounds() {
        let net = build_model(&ModelConfig::small(), 0).unwrap();
        assert!(make_plan(&net, 0.0).is_err());
        assert!(make_plan(&net, 1.01).is_err());
    }
}
