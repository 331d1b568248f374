//! Training losses as plain functions with analytic gradients.
//!
//! Gradients are taken with respect to the probability inputs and returned
//! flattened in input order: for signal-valued inputs, level by level, each
//! level row-major `length x (num_classes + 1)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::signal::{BackgroundPoints, ClassId, ProbabilitySignal};
use crate::{Error, Result};

/// Clamp applied to probabilities before taking logarithms.
pub const PROB_EPS: f64 = 1e-7;

/// Focusing parameter of the focal and background losses.
pub const DEFAULT_FOCAL_GAMMA: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// Nothing contributed (no supervised terms); value and gradient are zero.
    pub empty: bool,
}

impl LossValue {
    fn zero(n: usize) -> Self {
        LossValue {
            value: 0.0,
            gradient: vec![0.0; n],
            empty: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda_mil: f64,
    pub lambda_act: f64,
    pub lambda_bg: f64,
    pub lambda_g: f64,
    pub lambda_sigma: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda_mil: 1.0,
            lambda_act: 1.0,
            lambda_bg: 1.0,
            lambda_g: 1.0,
            lambda_sigma: 1.0,
        }
    }
}

/// Which loss terms a total is assembled from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TotalMode {
    /// MIL + action + background.
    Base,
    /// Base terms plus Gaussian alignment and sigma regression.
    Main,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossComponents {
    pub mil: Option<f64>,
    pub act: Option<f64>,
    pub bg: Option<f64>,
    pub gaussian: Option<f64>,
    pub sigma: Option<f64>,
}

/// Clamped probability and the derivative of the clamp (0 when saturated).
#[inline]
fn clamp_prob(p: f64) -> (f64, f64) {
    if p < PROB_EPS {
        (PROB_EPS, 0.0)
    } else if p > 1.0 - PROB_EPS {
        (1.0 - PROB_EPS, 0.0)
    } else {
        (p, 1.0)
    }
}

/// Mean of the `k` largest values of each class column.
pub fn video_level_scores(signal: &ProbabilitySignal, k: usize) -> Result<Vec<f64>> {
    if k == 0 || k > signal.len() {
        return Err(Error::invalid(format!(
            "top-k must be in 1..={}, got {k}",
            signal.len()
        )));
    }
    Ok((0..signal.num_classes())
        .map(|c| {
            let mut col = signal.column(c);
            col.sort_unstable_by(|a, b| b.total_cmp(a));
            col[..k].iter().sum::<f64>() / k as f64
        })
        .collect())
}

/// Video-level binary cross-entropy averaged over pyramid levels.
///
/// `scores[l][c]` is the top-k score of class `c` at level `l`. The gradient
/// is flattened level-major.
pub fn mil_loss(scores: &[Vec<f64>], video_label: &[bool]) -> Result<LossValue> {
    if scores.is_empty() {
        return Err(Error::invalid("MIL loss needs at least one level"));
    }
    let levels = scores.len() as f64;
    let mut value = 0.0;
    let mut gradient = Vec::with_capacity(scores.len() * video_label.len());
    for level in scores {
        if level.len() != video_label.len() {
            return Err(Error::DimensionMismatch {
                expected: video_label.len(),
                actual: level.len(),
            });
        }
        for (&raw, &y) in level.iter().zip(video_label) {
            let (p, dclamp) = clamp_prob(raw);
            let (term, dterm) = if y {
                (math::ln(p), 1.0 / p)
            } else {
                (math::ln(1.0 - p), -1.0 / (1.0 - p))
            };
            value -= term / levels;
            gradient.push(-dterm / levels * dclamp);
        }
    }
    Ok(LossValue {
        value,
        gradient,
        empty: false,
    })
}

fn check_levels<T>(signals: &[ProbabilitySignal], per_level: &[T]) -> Result<usize> {
    if signals.len() != per_level.len() {
        return Err(Error::DimensionMismatch {
            expected: signals.len(),
            actual: per_level.len(),
        });
    }
    Ok(signals.iter().map(|s| s.values().len()).sum())
}

/// Snippet-level focal loss over the supervised `(snippet, class)` pairs of
/// every level, normalized by `n_positive`.
pub fn action_focal_loss(
    signals: &[ProbabilitySignal],
    supervised: &[Vec<(usize, ClassId)>],
    gamma: f64,
    n_positive: usize,
) -> Result<LossValue> {
    let total = check_levels(signals, supervised)?;
    if supervised.iter().all(|s| s.is_empty()) {
        return Ok(LossValue::zero(total));
    }
    if n_positive == 0 {
        return Err(Error::invalid("n_positive must be >= 1"));
    }
    let norm = 1.0 / n_positive as f64;
    let mut value = 0.0;
    let mut gradient = vec![0.0; total];
    let mut offset = 0;
    for (signal, points) in signals.iter().zip(supervised) {
        let w = signal.width();
        for &(t, class_id) in points {
            if t >= signal.len() {
                return Err(Error::invalid(format!(
                    "supervised snippet {t} outside level {} of length {}",
                    signal.level(),
                    signal.len()
                )));
            }
            let positive = signal.class_index(class_id)?;
            for c in 0..signal.num_classes() {
                let (p, dclamp) = clamp_prob(signal.get(t, c));
                let (term, dterm) = if c == positive {
                    let q = 1.0 - p;
                    let mod_ = math::powf(q, gamma);
                    let lp = math::ln(p);
                    (
                        lp * mod_,
                        mod_ / p - gamma * math::powf(q, gamma - 1.0) * lp,
                    )
                } else {
                    let mod_ = math::powf(p, gamma);
                    let lq = math::ln(1.0 - p);
                    (
                        lq * mod_,
                        -mod_ / (1.0 - p) + gamma * math::powf(p, gamma - 1.0) * lq,
                    )
                };
                value -= norm * term;
                gradient[offset + t * w + c] -= norm * dterm * dclamp;
            }
        }
        offset += signal.values().len();
    }
    Ok(LossValue {
        value,
        gradient,
        empty: false,
    })
}

/// Background loss over the selected background snippets of every level,
/// normalized by `m_bg`: pushes class scores down and background up.
pub fn background_loss(
    signals: &[ProbabilitySignal],
    background: &[BackgroundPoints],
    gamma: f64,
    m_bg: usize,
) -> Result<LossValue> {
    let total = check_levels(signals, background)?;
    if m_bg == 0 || background.iter().all(|b| b.is_empty()) {
        return Ok(LossValue::zero(total));
    }
    let norm = 1.0 / m_bg as f64;
    let mut value = 0.0;
    let mut gradient = vec![0.0; total];
    let mut offset = 0;
    for (signal, points) in signals.iter().zip(background) {
        let w = signal.width();
        for &b in points.indices() {
            if b >= signal.len() {
                return Err(Error::invalid(format!(
                    "background snippet {b} outside level {} of length {}",
                    signal.level(),
                    signal.len()
                )));
            }
            for c in 0..signal.num_classes() {
                let (p, dclamp) = clamp_prob(signal.get(b, c));
                let mod_ = math::powf(p, gamma);
                let lq = math::ln(1.0 - p);
                value -= norm * mod_ * lq;
                let d = gamma * math::powf(p, gamma - 1.0) * lq - mod_ / (1.0 - p);
                gradient[offset + b * w + c] -= norm * d * dclamp;
            }
            let bg_col = signal.num_classes();
            let (pb, dclamp) = clamp_prob(signal.get(b, bg_col));
            let q = 1.0 - pb;
            let mod_ = math::powf(q, gamma);
            let lp = math::ln(pb);
            value -= norm * mod_ * lp;
            let d = -gamma * math::powf(q, gamma - 1.0) * lp + mod_ / pb;
            gradient[offset + b * w + bg_col] -= norm * d * dclamp;
        }
        offset += signal.values().len();
    }
    Ok(LossValue {
        value,
        gradient,
        empty: false,
    })
}

/// Unnormalized kernel `exp(-((t - t_i) / sigma)^2 / 2)` on `0..length`; peak 1 at `t_i`.
pub fn gaussian_kernel(t_i: usize, sigma_tilde: f64, length: usize) -> Result<Vec<f64>> {
    if !(sigma_tilde > 0.0 && sigma_tilde.is_finite()) {
        return Err(Error::invalid(format!(
            "kernel sigma must be > 0, got {sigma_tilde}"
        )));
    }
    let inv = 1.0 / sigma_tilde;
    Ok((0..length)
        .map(|t| {
            let z = (t as f64 - t_i as f64) * inv;
            math::exp(-0.5 * z * z)
        })
        .collect())
}

/// Pointwise maximum of the kernels of one class's instances `(t_i, sigma_i)`.
pub fn mix_kernels(instances: &[(usize, f64)], length: usize) -> Result<Vec<f64>> {
    let (first, rest) = instances
        .split_first()
        .ok_or_else(|| Error::invalid("cannot mix an empty kernel set"))?;
    let mut mixed = gaussian_kernel(first.0, first.1, length)?;
    for &(t, s) in rest {
        for (m, g) in mixed.iter_mut().zip(gaussian_kernel(t, s, length)?) {
            if g > *m {
                *m = g;
            }
        }
    }
    Ok(mixed)
}

/// Mixed kernels for every class present in a video.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernelSet {
    length: usize,
    kernels: Vec<(ClassId, Vec<f64>)>,
}

impl GaussianKernelSet {
    /// Groups `(t_i, sigma_i, class)` instances by class and mixes each group.
    pub fn from_instances(instances: &[(usize, f64, ClassId)], length: usize) -> Result<Self> {
        let mut by_class: BTreeMap<ClassId, Vec<(usize, f64)>> = BTreeMap::new();
        for &(t, s, c) in instances {
            by_class.entry(c).or_default().push((t, s));
        }
        let kernels = by_class
            .into_iter()
            .map(|(c, inst)| Ok((c, mix_kernels(&inst, length)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(GaussianKernelSet { length, kernels })
    }

    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn classes(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.kernels.iter().map(|(c, _)| *c)
    }

    pub fn kernel(&self, class_id: ClassId) -> Option<&[f64]> {
        self.kernels
            .iter()
            .find(|(c, _)| *c == class_id)
            .map(|(_, k)| k.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClassId, &[f64])> {
        self.kernels.iter().map(|(c, k)| (*c, k.as_slice()))
    }
}

/// Mean squared error between the first-level class columns and the mixed
/// kernels, over the classes present in the set.
pub fn gaussian_alignment_loss(
    p_hat_level1: &ProbabilitySignal,
    kernels: &GaussianKernelSet,
) -> Result<LossValue> {
    let n = p_hat_level1.values().len();
    if kernels.len() != p_hat_level1.len() {
        return Err(Error::DimensionMismatch {
            expected: p_hat_level1.len(),
            actual: kernels.len(),
        });
    }
    if kernels.is_empty() {
        return Ok(LossValue::zero(n));
    }
    let w = p_hat_level1.width();
    let norm = 1.0 / (p_hat_level1.len() as f64 * kernels.kernels.len() as f64);
    let mut value = 0.0;
    let mut gradient = vec![0.0; n];
    for (class_id, kernel) in kernels.iter() {
        let c = p_hat_level1.class_index(class_id)?;
        for (t, g) in kernel.iter().enumerate() {
            let r = p_hat_level1.get(t, c) - g;
            value += norm * r * r;
            gradient[t * w + c] = 2.0 * norm * r;
        }
    }
    Ok(LossValue {
        value,
        gradient,
        empty: false,
    })
}

/// Mean squared error between pseudo-label and predicted widths; gradient
/// with respect to the predictions.
pub fn sigma_loss(pseudo_sigmas: &[f64], predicted_sigmas: &[f64]) -> Result<LossValue> {
    if pseudo_sigmas.len() != predicted_sigmas.len() {
        return Err(Error::DimensionMismatch {
            expected: pseudo_sigmas.len(),
            actual: predicted_sigmas.len(),
        });
    }
    if pseudo_sigmas.is_empty() {
        return Err(Error::invalid("sigma loss needs at least one instance"));
    }
    let norm = 1.0 / pseudo_sigmas.len() as f64;
    let mut value = 0.0;
    let gradient = pseudo_sigmas
        .iter()
        .zip(predicted_sigmas)
        .map(|(s, p)| {
            let r = p - s;
            value += norm * r * r;
            2.0 * norm * r
        })
        .collect();
    Ok(LossValue {
        value,
        gradient,
        empty: false,
    })
}

/// Weighted sum of the loss terms required by `mode`.
pub fn total_loss(
    components: &LossComponents,
    weights: &LossWeights,
    mode: TotalMode,
) -> Result<f64> {
    let need = |v: Option<f64>, name: &'static str| v.ok_or(Error::MissingComponent(name));
    let mut total = weights.lambda_mil * need(components.mil, "mil")?
        + weights.lambda_act * need(components.act, "act")?
        + weights.lambda_bg * need(components.bg, "bg")?;
    if mode == TotalMode::Main {
        total += weights.lambda_g * need(components.gaussian, "gaussian")?
            + weights.lambda_sigma * need(components.sigma, "sigma")?;
    }
    Ok(total)
}
