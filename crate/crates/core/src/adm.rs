//! Pseudo-label generation by actionness distribution modeling.
//!
//! For every annotated point the class probability signal is cut to the
//! span between the nearest background snippets, a peak is located near the
//! point, and two templates centred on that peak are fitted by bounded
//! minimization of the squared error: a peak-matched Gaussian (width `sigma`)
//! and a peak-height uniform box (half-width `omega`). The pseudo-label
//! interval is `t_star +- (gamma1 * sigma + gamma2 * omega)`.

use alloc::format;
use alloc::vec::Vec;

use crate::math;
use crate::optim::{minimize_bounded, Bounds1D, MinimizeOptions};
use crate::signal::{
    augment_points, select_background_points, smooth_signal, upsample_signal, BackgroundPoints,
    ClassId, Interval, PointAnnotation, ProbabilitySignal,
};
use crate::{Error, Result};

/// Span between the nearest background snippets around an annotated point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreliminaryBoundary {
    pub start: usize,
    pub end: usize,
}

impl PreliminaryBoundary {
    pub fn duration(&self) -> usize {
        self.end - self.start
    }

    pub fn contains(&self, t: usize) -> bool {
        self.start <= t && t <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmConfig {
    /// Peak search radius as a fraction of the boundary duration.
    pub delta: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Lower bound for both fitted widths.
    pub sigma_lower: f64,
    pub smoothing_sigma: f64,
    pub background_threshold: f64,
    /// Radius used to keep annotated neighbourhoods out of the background set.
    pub augment_radius: usize,
    /// Also clip the final interval to the preliminary boundary.
    pub clip_to_boundary: bool,
    pub minimize: MinimizeOptions,
}

impl Default for AdmConfig {
    fn default() -> Self {
        AdmConfig {
            delta: 0.25,
            gamma1: 1.0,
            gamma2: 1.0,
            sigma_lower: 1e-6,
            smoothing_sigma: 2.0,
            background_threshold: 0.5,
            augment_radius: 2,
            clip_to_boundary: false,
            minimize: MinimizeOptions::default(),
        }
    }
}

impl AdmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return Err(Error::invalid(format!(
                "delta must be in (0, 0.5], got {}",
                self.delta
            )));
        }
        if self.gamma1.is_nan()
            || self.gamma2.is_nan()
            || self.gamma1 < 0.0
            || self.gamma2 < 0.0
            || self.gamma1 + self.gamma2 <= 0.0
        {
            return Err(Error::invalid(
                "gamma1, gamma2 must be >= 0 with a positive sum",
            ));
        }
        if !(self.sigma_lower > 0.0 && self.sigma_lower.is_finite()) {
            return Err(Error::invalid("sigma_lower must be > 0"));
        }
        if self.smoothing_sigma.is_nan() || self.smoothing_sigma <= 0.0 {
            return Err(Error::invalid("smoothing_sigma must be > 0"));
        }
        if !(self.background_threshold > 0.0 && self.background_threshold < 1.0) {
            return Err(Error::invalid("background_threshold must be in (0, 1)"));
        }
        Ok(())
    }
}

/// Outcome of one template fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentFit {
    pub value: f64,
    /// Squared error at `value`.
    pub residual: f64,
    /// Upper bound collapsed onto the lower bound; `value` is the fallback.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeakSearch {
    pub t_star: usize,
    /// The search window was empty and `t` itself was returned.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabel {
    pub t: usize,
    pub t_star: usize,
    pub sigma: f64,
    pub omega: f64,
    pub delta: f64,
    pub interval: Interval,
    pub class_id: ClassId,
    pub degenerate: bool,
    pub gaussian_residual: f64,
    pub uniform_residual: f64,
}

/// Nearest background index at or before `t` and at or after `t`, falling back
/// to the video edges.
pub fn preliminary_boundaries(
    t: usize,
    background: &BackgroundPoints,
    length: usize,
) -> Result<PreliminaryBoundary> {
    if t >= length {
        return Err(Error::invalid(format!(
            "point {t} outside signal of length {length}"
        )));
    }
    let idx = background.indices();
    let before = idx.partition_point(|&b| b <= t);
    let start = if before > 0 { idx[before - 1] } else { 0 };
    let after = idx.partition_point(|&b| b < t);
    let end = idx
        .get(after)
        .copied()
        .unwrap_or(length - 1)
        .min(length - 1);
    Ok(PreliminaryBoundary { start, end })
}

/// Argmax of `column` over `boundary ∩ [t - delta*d, t + delta*d]`, smallest
/// index on ties.
pub fn find_peak(
    column: &[f64],
    boundary: PreliminaryBoundary,
    t: usize,
    delta: f64,
) -> PeakSearch {
    let reach = delta * boundary.duration() as f64;
    let lo = math::ceil(t as f64 - reach).max(0.0) as usize;
    let hi = math::floor(t as f64 + reach) as usize;
    let lo = lo.max(boundary.start);
    let hi = hi.min(boundary.end).min(column.len().saturating_sub(1));
    if lo > hi {
        return PeakSearch {
            t_star: t,
            fallback: true,
        };
    }
    let mut best = lo;
    for i in lo + 1..=hi {
        if column[i] > column[best] {
            best = i;
        }
    }
    PeakSearch {
        t_star: best,
        fallback: false,
    }
}

/// Upper bound shared by both fitted widths: distance from the peak to the
/// farther boundary.
pub fn width_upper_bound(boundary: PreliminaryBoundary, t_star: usize) -> f64 {
    (t_star.saturating_sub(boundary.start)).max(boundary.end.saturating_sub(t_star)) as f64
}

/// Squared error of a Gaussian with width `sigma`, scaled so its peak equals
/// `column[t_star]`, against the column restricted to `boundary`.
pub fn gaussian_fit_loss(
    column: &[f64],
    boundary: PreliminaryBoundary,
    t_star: usize,
    sigma: f64,
) -> f64 {
    let peak = column[t_star];
    let inv = 1.0 / sigma;
    (boundary.start..=boundary.end)
        .map(|t| {
            let z = (t as f64 - t_star as f64) * inv;
            let r = peak * math::exp(-0.5 * z * z) - column[t];
            r * r
        })
        .sum()
}

/// Squared error of a box of height `column[t_star]` covering
/// `|t - t_star| <= omega` against the column restricted to `boundary`.
pub fn uniform_fit_loss(
    column: &[f64],
    boundary: PreliminaryBoundary,
    t_star: usize,
    omega: f64,
) -> f64 {
    let peak = column[t_star];
    (boundary.start..=boundary.end)
        .map(|t| {
            let d = (t as f64 - t_star as f64).abs();
            let model = if d <= omega { peak } else { 0.0 };
            let r = model - column[t];
            r * r
        })
        .sum()
}

pub fn fit_gaussian(
    column: &[f64],
    boundary: PreliminaryBoundary,
    t_star: usize,
    lower: f64,
    options: MinimizeOptions,
) -> Result<ComponentFit> {
    let upper = width_upper_bound(boundary, t_star);
    if upper <= lower {
        return Ok(ComponentFit {
            value: lower,
            residual: gaussian_fit_loss(column, boundary, t_star, lower),
            degenerate: true,
        });
    }
    let bounds = Bounds1D::new(lower, upper)?;
    let r = minimize_bounded(
        |s| gaussian_fit_loss(column, boundary, t_star, s),
        bounds,
        options,
    )?;
    Ok(ComponentFit {
        value: r.x,
        residual: r.f,
        degenerate: false,
    })
}

/// Fits the uniform half-width.
///
/// The box objective is a step function of `omega` (constant between
/// integers), so the bounded search only seeds an integer descent that walks
/// to the neighbouring cell while the error strictly drops. The reported
/// width is the integer half-width of the winning cell, floored at `lower`.
pub fn fit_uniform(
    column: &[f64],
    boundary: PreliminaryBoundary,
    t_star: usize,
    lower: f64,
    options: MinimizeOptions,
) -> Result<ComponentFit> {
    let upper = width_upper_bound(boundary, t_star);
    let loss = |w: f64| uniform_fit_loss(column, boundary, t_star, w);
    if upper <= lower {
        return Ok(ComponentFit {
            value: 0.0,
            residual: loss(0.0),
            degenerate: true,
        });
    }
    let bounds = Bounds1D::new(lower, upper)?;
    let seed = minimize_bounded(loss, bounds, options)?;

    let max_k = upper as usize;
    let mut k = (math::floor(seed.x) as usize).min(max_k);
    let mut fk = loss(k as f64);
    loop {
        if k > 0 {
            let f_left = loss((k - 1) as f64);
            if f_left < fk {
                k -= 1;
                fk = f_left;
                continue;
            }
        }
        if k < max_k {
            let f_right = loss((k + 1) as f64);
            if f_right < fk {
                k += 1;
                fk = f_right;
                continue;
            }
        }
        break;
    }
    Ok(ComponentFit {
        value: (k as f64).max(lower).min(upper),
        residual: fk,
        degenerate: false,
    })
}

fn round_clip(x: f64, lo: usize, hi: usize) -> usize {
    let r = math::round(x);
    if r <= lo as f64 {
        lo
    } else if r >= hi as f64 {
        hi
    } else {
        r as usize
    }
}

/// Fits one pseudo-label for `point` on a fitting signal at annotation resolution.
pub fn fit_point(
    signal: &ProbabilitySignal,
    point: &PointAnnotation,
    background: &BackgroundPoints,
    config: &AdmConfig,
) -> Result<PseudoLabel> {
    let length = signal.len();
    let column = signal.class_column(point.class_id)?;
    let boundary = preliminary_boundaries(point.t, background, length)?;

    if boundary.start == boundary.end {
        return Ok(PseudoLabel {
            t: point.t,
            t_star: point.t,
            sigma: config.sigma_lower,
            omega: 0.0,
            delta: config.gamma1 * config.sigma_lower,
            interval: Interval {
                start: point.t,
                end: point.t,
            },
            class_id: point.class_id,
            degenerate: true,
            gaussian_residual: 0.0,
            uniform_residual: 0.0,
        });
    }

    let peak = find_peak(&column, boundary, point.t, config.delta);
    let t_star = peak.t_star;
    let g = fit_gaussian(
        &column,
        boundary,
        t_star,
        config.sigma_lower,
        config.minimize,
    )?;
    let u = fit_uniform(
        &column,
        boundary,
        t_star,
        config.sigma_lower,
        config.minimize,
    )?;
    let delta = config.gamma1 * g.value + config.gamma2 * u.value;

    let (lo, hi) = if config.clip_to_boundary {
        (boundary.start, boundary.end)
    } else {
        (0, length - 1)
    };
    let interval = Interval {
        start: round_clip(t_star as f64 - delta, lo, hi),
        end: round_clip(t_star as f64 + delta, lo, hi),
    };

    Ok(PseudoLabel {
        t: point.t,
        t_star,
        sigma: g.value,
        omega: u.value,
        delta,
        interval,
        class_id: point.class_id,
        degenerate: g.degenerate || u.degenerate || peak.fallback,
        gaussian_residual: g.residual,
        uniform_residual: u.residual,
    })
}

/// One pseudo-label per annotated point, in input order.
///
/// `signal` is the smoothed last-level signal already brought to annotation
/// resolution; `background` comes from the first pyramid level.
pub fn generate_pseudo_labels(
    signal: &ProbabilitySignal,
    points: &[PointAnnotation],
    background: &BackgroundPoints,
    config: &AdmConfig,
) -> Result<Vec<PseudoLabel>> {
    config.validate()?;
    points
        .iter()
        .map(|p| fit_point(signal, p, background, config))
        .collect()
}

/// Upsamples the last pyramid level to `target_length` and smooths it.
pub fn prepare_fitting_signal(
    last_level: &ProbabilitySignal,
    target_length: usize,
    smoothing_sigma: f64,
) -> Result<ProbabilitySignal> {
    let up = upsample_signal(last_level, target_length)?;
    smooth_signal(&up, smoothing_sigma)
}

/// Runs the whole per-video pipeline on a fused pyramid (`levels[0]` is level 1).
///
/// Background points come from level 1 with the annotated neighbourhoods
/// removed; fitting uses the last level, upsampled and smoothed.
pub fn pseudo_labels_for_video(
    levels: &[ProbabilitySignal],
    points: &[PointAnnotation],
    config: &AdmConfig,
) -> Result<Vec<PseudoLabel>> {
    config.validate()?;
    let first = levels
        .iter()
        .find(|s| s.level() == 1)
        .ok_or_else(|| Error::invalid("pyramid has no level-1 signal"))?;
    let last = levels.iter().max_by_key(|s| s.level()).expect("non-empty");
    let fitting = prepare_fitting_signal(last, first.len(), config.smoothing_sigma)?;
    let augmented = augment_points(points, config.augment_radius, 1, 1, first.len())?;
    let background = select_background_points(first, &augmented, config.background_threshold)?;
    generate_pseudo_labels(&fitting, points, &background, config)
}

/// Supervised snippets for the action loss: indices within `r_s` of each
/// annotated point (mapped to `level`) that also fall inside the label's
/// interval at that level.
pub fn sample_supervision(
    labels: &[PseudoLabel],
    r_s: usize,
    level: u32,
    theta: usize,
) -> Vec<(usize, ClassId)> {
    let scale = math::level_scale(theta.max(1), level);
    let mut out = Vec::new();
    for label in labels {
        let center = label.t / scale;
        let lo = center.saturating_sub(r_s).max(label.interval.start / scale);
        let hi = (center + r_s).min(label.interval.end / scale);
        out.extend((lo..=hi).map(|t| (t, label.class_id)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn bp(idx: &[usize], len: usize) -> BackgroundPoints {
        BackgroundPoints::new(idx.to_vec(), len).unwrap()
    }

    fn gaussian_column(len: usize, center: usize, sigma: f64, peak: f64) -> Vec<f64> {
        (0..len)
            .map(|t| {
                let z = (t as f64 - center as f64) / sigma;
                peak * (-0.5 * z * z).exp()
            })
            .collect()
    }

    fn box_column(len: usize, center: usize, half: usize, h: f64) -> Vec<f64> {
        (0..len)
            .map(|t| if t.abs_diff(center) <= half { h } else { 0.0 })
            .collect()
    }

    fn wide(len: usize) -> PreliminaryBoundary {
        PreliminaryBoundary {
            start: 0,
            end: len - 1,
        }
    }

    fn grid_argmin(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64) {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .map(|x| (x, f(x)))
            .fold(
                (lo, f64::INFINITY),
                |acc, p| if p.1 < acc.1 { p } else { acc },
            )
    }

    #[test]
    fn boundary_examples() {
        assert_eq!(
            preliminary_boundaries(10, &bp(&[2, 20], 30), 30).unwrap(),
            PreliminaryBoundary { start: 2, end: 20 }
        );
        assert_eq!(
            preliminary_boundaries(10, &bp(&[2, 20], 30), 30)
                .unwrap()
                .duration(),
            18
        );
        assert_eq!(
            preliminary_boundaries(10, &bp(&[20], 30), 30).unwrap(),
            PreliminaryBoundary { start: 0, end: 20 }
        );
        assert_eq!(
            preliminary_boundaries(10, &bp(&[], 30), 30).unwrap(),
            PreliminaryBoundary { start: 0, end: 29 }
        );
        assert!(preliminary_boundaries(30, &bp(&[], 30), 30).is_err());
    }

    #[test]
    fn peak_examples() {
        let col = gaussian_column(40, 18, 4.0, 0.9);
        let b = PreliminaryBoundary { start: 5, end: 35 };
        assert_eq!(find_peak(&col, b, 15, 0.25).t_star, 18);

        // global max at 30 is outside the +-0.25*30 window around 10
        let mut col = vec![0.1; 40];
        col[30] = 0.99;
        col[12] = 0.5;
        let b = PreliminaryBoundary { start: 0, end: 30 };
        assert_eq!(find_peak(&col, b, 10, 0.25).t_star, 12);

        let flat = vec![0.4; 40];
        let b = PreliminaryBoundary { start: 4, end: 36 };
        // reach = 8, window [12, 28]
        let p = find_peak(&flat, b, 20, 0.25);
        assert_eq!(
            p,
            PeakSearch {
                t_star: 12,
                fallback: false
            }
        );

        // point outside its boundary: empty window
        let p = find_peak(&flat, PreliminaryBoundary { start: 0, end: 3 }, 20, 0.1);
        assert!(p.fallback);
        assert_eq!(p.t_star, 20);
    }

    #[test]
    fn gaussian_recovery() {
        let col = gaussian_column(201, 100, 5.0, 0.8);
        let g = fit_gaussian(&col, wide(201), 100, 1e-6, MinimizeOptions::default()).unwrap();
        assert!((g.value - 5.0).abs() / 5.0 < 0.01, "{g:?}");
        assert!(!g.degenerate);
    }

    #[test]
    fn single_snippet_drives_widths_to_lower_bound() {
        let mut col = vec![0.0; 41];
        col[20] = 0.7;
        let b = wide(41);
        let g = fit_gaussian(&col, b, 20, 1e-6, MinimizeOptions::default()).unwrap();
        let (gx, gf) = grid_argmin(|s| gaussian_fit_loss(&col, b, 20, s), 1e-6, 20.0, 100_000);
        assert!(g.residual <= gf + 1e-9, "{g:?} vs grid ({gx}, {gf})");
        // the loss is flat (to machine precision) for sigma well below one snippet
        assert!(g.value < 0.2, "{g:?}");

        let u = fit_uniform(&col, b, 20, 1e-6, MinimizeOptions::default()).unwrap();
        assert_eq!(u.value, 1e-6);
        assert_eq!(u.residual, 0.0);
    }

    #[test]
    fn plateau_matches_grid_oracle() {
        let col = box_column(81, 40, 25, 0.9);
        let b = PreliminaryBoundary { start: 10, end: 70 };
        let g = fit_gaussian(&col, b, 40, 1e-6, MinimizeOptions::default()).unwrap();
        let (gx, gf) = grid_argmin(|s| gaussian_fit_loss(&col, b, 40, s), 1e-6, 30.0, 100_000);
        assert!((g.value - gx).abs() < 1e-3, "{} vs {gx}", g.value);
        assert!(g.residual <= gf + 1e-12);
        assert!(g.value > 15.0);
    }

    #[test]
    fn rectangle_recovery() {
        let col = box_column(61, 30, 8, 0.9);
        let u = fit_uniform(&col, wide(61), 30, 1e-6, MinimizeOptions::default()).unwrap();
        assert!((u.value - 8.0).abs() <= 1.0, "{u:?}");
        assert_eq!(u.residual, 0.0);
    }

    #[test]
    fn uniform_on_gaussian_matches_grid_oracle() {
        let col = gaussian_column(101, 50, 7.0, 0.85);
        let b = PreliminaryBoundary { start: 20, end: 85 };
        let u = fit_uniform(&col, b, 50, 1e-6, MinimizeOptions::default()).unwrap();
        let ub = width_upper_bound(b, 50);
        let (_, gf) = grid_argmin(|w| uniform_fit_loss(&col, b, 50, w), 1e-6, ub, 100_000);
        assert!(u.value > 0.0 && u.value <= ub);
        assert!((u.residual - gf).abs() < 1e-12, "{} vs {gf}", u.residual);
    }

    #[test]
    fn degenerate_boundary() {
        let col = vec![0.5; 10];
        let b = PreliminaryBoundary { start: 4, end: 4 };
        let g = fit_gaussian(&col, b, 4, 1e-6, MinimizeOptions::default()).unwrap();
        assert!(g.degenerate && g.value == 1e-6);
        let u = fit_uniform(&col, b, 4, 1e-6, MinimizeOptions::default()).unwrap();
        assert!(u.degenerate && u.value == 0.0);

        let rows: Vec<Vec<f64>> = (0..10).map(|_| vec![0.5, 0.5]).collect();
        let s = ProbabilitySignal::from_rows("v", 1, 1, &rows).unwrap();
        let p = PointAnnotation {
            video_id: "v".into(),
            t: 4,
            class_id: 1,
        };
        let labels =
            generate_pseudo_labels(&s, &[p], &bp(&[4], 10), &AdmConfig::default()).unwrap();
        assert!(labels[0].degenerate);
        assert_eq!(labels[0].interval, Interval { start: 4, end: 4 });
        assert_eq!(labels[0].omega, 0.0);
    }

    fn signal_from_column(col: &[f64]) -> ProbabilitySignal {
        let rows: Vec<Vec<f64>> = col.iter().map(|&c| vec![c, 1.0 - c]).collect();
        ProbabilitySignal::from_rows("v", 1, 1, &rows).unwrap()
    }

    #[test]
    fn pure_gaussian_delta_when_gamma2_is_zero() {
        let col = gaussian_column(120, 60, 6.0, 0.9);
        let s = signal_from_column(&col);
        let cfg = AdmConfig {
            gamma1: 1.0,
            gamma2: 0.0,
            ..AdmConfig::default()
        };
        let pts = [
            PointAnnotation {
                video_id: "v".into(),
                t: 58,
                class_id: 1,
            },
            PointAnnotation {
                video_id: "v".into(),
                t: 63,
                class_id: 1,
            },
        ];
        let labels = generate_pseudo_labels(&s, &pts, &bp(&[20, 100], 120), &cfg).unwrap();
        assert_eq!(labels.len(), 2);
        for l in &labels {
            assert_eq!(l.delta, l.sigma);
            assert_eq!(l.t_star, 60);
            assert!(l.interval.contains(l.t_star));
        }
    }

    #[test]
    fn rejects_invalid_points_and_config() {
        let s = signal_from_column(&[0.5; 10]);
        let p = PointAnnotation {
            video_id: "v".into(),
            t: 10,
            class_id: 1,
        };
        assert!(generate_pseudo_labels(&s, &[p], &bp(&[], 10), &AdmConfig::default()).is_err());
        let p = PointAnnotation {
            video_id: "v".into(),
            t: 3,
            class_id: 2,
        };
        assert!(generate_pseudo_labels(&s, &[p], &bp(&[], 10), &AdmConfig::default()).is_err());
        let bad = AdmConfig {
            delta: 0.7,
            ..AdmConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = AdmConfig {
            gamma1: 0.0,
            gamma2: 0.0,
            ..AdmConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn clip_to_boundary_switch() {
        let col = box_column(100, 50, 10, 0.9);
        let s = signal_from_column(&col);
        let p = PointAnnotation {
            video_id: "v".into(),
            t: 50,
            class_id: 1,
        };
        let b = bp(&[38, 62], 100);
        let free = generate_pseudo_labels(&s, core::slice::from_ref(&p), &b, &AdmConfig::default())
            .unwrap();
        let cfg = AdmConfig {
            clip_to_boundary: true,
            ..AdmConfig::default()
        };
        let clipped = generate_pseudo_labels(&s, &[p], &b, &cfg).unwrap();
        assert!(free[0].interval.start < 38);
        assert_eq!(clipped[0].interval, Interval { start: 38, end: 62 });
    }

    fn label(t: usize, start: usize, end: usize) -> PseudoLabel {
        PseudoLabel {
            t,
            t_star: t,
            sigma: 1.0,
            omega: 1.0,
            delta: 2.0,
            interval: Interval { start, end },
            class_id: 3,
            degenerate: false,
            gaussian_residual: 0.0,
            uniform_residual: 0.0,
        }
    }

    #[test]
    fn sampling_examples() {
        let idx = |v: Vec<(usize, ClassId)>| v.into_iter().map(|p| p.0).collect::<Vec<_>>();
        assert_eq!(
            idx(sample_supervision(&[label(10, 5, 20)], 2, 1, 2)),
            vec![8, 9, 10, 11, 12]
        );
        assert_eq!(
            idx(sample_supervision(&[label(10, 9, 11)], 2, 1, 2)),
            vec![9, 10, 11]
        );
        assert_eq!(
            idx(sample_supervision(&[label(10, 0, 30)], 2, 2, 2)),
            vec![3, 4, 5, 6, 7]
        );
        assert!(sample_supervision(&[label(10, 0, 30)], 2, 1, 2)
            .iter()
            .all(|p| p.1 == 3));
    }

    proptest! {
        #[test]
        fn boundaries_match_linear_scan(
            mask in proptest::collection::vec(proptest::bool::weighted(0.3), 1..80),
            t_frac in 0.0f64..1.0,
        ) {
            let len = mask.len();
            let t = ((t_frac * len as f64) as usize).min(len - 1);
            let idx: Vec<usize> = (0..len).filter(|&i| mask[i]).collect();
            let b = preliminary_boundaries(t, &bp(&idx, len), len).unwrap();
            let start = (0..=t).rev().find(|&i| mask[i]).unwrap_or(0);
            let end = (t..len).find(|&i| mask[i]).unwrap_or(len - 1);
            prop_assert_eq!(b, PreliminaryBoundary { start, end });
            prop_assert!(b.contains(t));
        }

        #[test]
        fn peak_matches_exhaustive_scan(
            col in proptest::collection::vec(0.0f64..1.0, 5..60),
            s_frac in 0.0f64..0.5,
            e_frac in 0.5f64..1.0,
            t_frac in 0.0f64..1.0,
            delta in 0.01f64..0.5,
        ) {
            let n = col.len();
            let start = (s_frac * n as f64) as usize;
            let end = ((e_frac * n as f64) as usize).min(n - 1).max(start);
            let t = start + ((t_frac * (end - start) as f64) as usize);
            let b = PreliminaryBoundary { start, end };
            let got = find_peak(&col, b, t, delta);
            let reach = delta * (end - start) as f64;
            let mut best: Option<usize> = None;
            for i in start..=end {
                let d = (i as f64 - t as f64).abs();
                if d <= reach && best.is_none_or(|j| col[i] > col[j]) {
                    best = Some(i);
                }
            }
            prop_assert_eq!(got.t_star, best.unwrap());
        }

        #[test]
        fn fits_stay_in_bounds_and_ignore_scale(
            sigma0 in 1.0f64..15.0,
            center in 20usize..60,
            k in 0.05f64..1.0,
            start in 0usize..20,
            end in 60usize..80,
        ) {
            let col = gaussian_column(80, center, sigma0, 0.9);
            let scaled: Vec<f64> = col.iter().map(|v| v * k).collect();
            let b = PreliminaryBoundary { start, end };
            let ub = width_upper_bound(b, center);
            let opts = MinimizeOptions::default();
            let g1 = fit_gaussian(&col, b, center, 1e-6, opts).unwrap();
            let g2 = fit_gaussian(&scaled, b, center, 1e-6, opts).unwrap();
            prop_assert!(g1.value >= 1e-6 && g1.value <= ub);
            prop_assert!((g1.value - g2.value).abs() <= 1e-4 * g1.value.max(1.0));
            let u1 = fit_uniform(&col, b, center, 1e-6, opts).unwrap();
            let u2 = fit_uniform(&scaled, b, center, 1e-6, opts).unwrap();
            prop_assert!(u1.value >= 0.0 && u1.value <= ub);
            prop_assert_eq!(u1.value, u2.value);
        }

        #[test]
        fn one_label_per_point_inside_video(
            col in proptest::collection::vec(0.0f64..1.0, 10..80),
            ts in proptest::collection::vec(0.0f64..1.0, 0..8),
            bg_mask in proptest::collection::vec(proptest::bool::weighted(0.2), 80),
        ) {
            let n = col.len();
            let s = signal_from_column(&col);
            let pts: Vec<_> = ts.iter()
                .map(|f| PointAnnotation { video_id: "v".into(), t: ((f * n as f64) as usize).min(n - 1), class_id: 1 })
                .collect();
            let idx: Vec<usize> = (0..n).filter(|&i| bg_mask[i]).collect();
            let labels = generate_pseudo_labels(&s, &pts, &bp(&idx, n), &AdmConfig::default()).unwrap();
            prop_assert_eq!(labels.len(), pts.len());
            for l in &labels {
                prop_assert!(l.interval.end < n);
                prop_assert!(l.interval.contains(l.t_star));
                prop_assert_eq!(l.delta, 1.0 * l.sigma + 1.0 * l.omega);
                prop_assert!(l.omega >= 0.0 && l.sigma >= 1e-6);
            }
        }
    }
}
