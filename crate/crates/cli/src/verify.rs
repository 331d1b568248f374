//! Verification suites run by `adm verify`.
//!
//! Every check compares a library routine against an independent oracle
//! (central finite differences, dense grids, exhaustive scans or a naive
//! re-implementation) on seeded random instances.

use std::time::Instant;

use adm_core::adm::{
    find_peak, fit_gaussian, fit_uniform, gaussian_fit_loss, preliminary_boundaries,
    uniform_fit_loss, width_upper_bound, PreliminaryBoundary,
};
use adm_core::decoder::{nms, Proposal};
use adm_core::eval::{average_precision, tiou, GroundTruthInstance};
use adm_core::losses::{
    action_focal_loss, background_loss, gaussian_alignment_loss, mil_loss, mix_kernels, sigma_loss,
    video_level_scores, GaussianKernelSet, DEFAULT_FOCAL_GAMMA,
};
use adm_core::optim::{minimize_bounded, Bounds1D, MinimizeOptions};
use adm_core::signal::smooth_column;
use adm_core::{BackgroundPoints, ClassId, ProbabilitySignal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const FD_STEP: f64 = 1e-5;
pub const GRADIENT_TOLERANCE: f64 = 1e-4;
pub const GRADIENT_INSTANCES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Gradients,
    Fitting,
    Oracles,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientCheck {
    pub loss_name: String,
    pub max_rel_err: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyCheck {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    /// Largest observed deviation from the oracle (check-specific units).
    pub max_error: f64,
    pub limit: f64,
    pub seconds: f64,
    pub pass: bool,
}

impl PropertyCheck {
    fn new(name: &str, limit: f64) -> Self {
        PropertyCheck {
            name: name.to_string(),
            cases: 0,
            failures: 0,
            max_error: 0.0,
            limit,
            seconds: 0.0,
            pass: true,
        }
    }

    /// Records one case whose deviation is `err`; fails the case above `limit`.
    fn record(&mut self, err: f64) {
        self.cases += 1;
        if err.is_nan() || err > self.max_error {
            self.max_error = err;
        }
        if err.is_nan() || err > self.limit {
            self.failures += 1;
            self.pass = false;
        }
    }

    /// Records a boolean case.
    fn record_ok(&mut self, ok: bool) {
        self.record(if ok { 0.0 } else { 1.0 });
    }
}

fn timed(mut check: PropertyCheck, started: Instant) -> PropertyCheck {
    check.seconds = started.elapsed().as_secs_f64();
    check
}

// ---------------------------------------------------------------------------
// gradients

/// Central differences of `f` at `x`.
pub fn finite_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Largest entry-wise relative error, with magnitudes below `1e-6` treated as `1e-6`.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-6))
        .fold(0.0, f64::max)
}

fn random_probs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.05..0.95)).collect()
}

fn pyramid_shapes(rng: &mut ChaCha8Rng) -> (usize, Vec<usize>) {
    let classes = rng.random_range(1..=4);
    let levels = rng.random_range(1..=3);
    let base = rng.random_range(8..=24);
    let lengths = (0..levels).map(|l| (base >> l).max(2)).collect();
    (classes, lengths)
}

fn build_levels(values: &[f64], classes: usize, lengths: &[usize]) -> Vec<ProbabilitySignal> {
    let mut offset = 0;
    lengths
        .iter()
        .enumerate()
        .map(|(l, &len)| {
            let n = len * (classes + 1);
            let s = ProbabilitySignal::from_flat(
                "v",
                l as u32 + 1,
                len,
                classes,
                values[offset..offset + n].to_vec(),
            )
            .expect("probabilities stay inside (0, 1)");
            offset += n;
            s
        })
        .collect()
}

fn check_mil(rng: &mut ChaCha8Rng) -> f64 {
    let levels = rng.random_range(1..=3);
    let classes = rng.random_range(1..=6);
    let label: Vec<bool> = (0..classes).map(|_| rng.random_bool(0.4)).collect();
    let x = random_probs(rng, levels * classes);
    let f = |v: &[f64]| {
        let scores: Vec<Vec<f64>> = v.chunks(classes).map(<[f64]>::to_vec).collect();
        mil_loss(&scores, &label).unwrap().value
    };
    let scores: Vec<Vec<f64>> = x.chunks(classes).map(<[f64]>::to_vec).collect();
    let analytic = mil_loss(&scores, &label).unwrap().gradient;
    max_relative_error(&analytic, &finite_difference(f, &x, FD_STEP))
}

fn check_focal(rng: &mut ChaCha8Rng) -> f64 {
    let (classes, lengths) = pyramid_shapes(rng);
    let total: usize = lengths.iter().map(|l| l * (classes + 1)).sum();
    let x = random_probs(rng, total);
    let supervised: Vec<Vec<(usize, ClassId)>> = lengths
        .iter()
        .map(|&len| {
            (0..rng.random_range(1..=5))
                .map(|_| {
                    (
                        rng.random_range(0..len),
                        rng.random_range(1..=classes as ClassId),
                    )
                })
                .collect()
        })
        .collect();
    let n_pos: usize = supervised.iter().map(Vec::len).sum();
    let f = |v: &[f64]| {
        action_focal_loss(
            &build_levels(v, classes, &lengths),
            &supervised,
            DEFAULT_FOCAL_GAMMA,
            n_pos,
        )
        .unwrap()
        .value
    };
    let analytic = action_focal_loss(
        &build_levels(&x, classes, &lengths),
        &supervised,
        DEFAULT_FOCAL_GAMMA,
        n_pos,
    )
    .unwrap()
    .gradient;
    max_relative_error(&analytic, &finite_difference(f, &x, FD_STEP))
}

fn check_background(rng: &mut ChaCha8Rng) -> f64 {
    let (classes, lengths) = pyramid_shapes(rng);
    let total: usize = lengths.iter().map(|l| l * (classes + 1)).sum();
    let x = random_probs(rng, total);
    let background: Vec<BackgroundPoints> = lengths
        .iter()
        .map(|&len| {
            let idx = (0..len).filter(|_| rng.random_bool(0.3)).collect();
            BackgroundPoints::new(idx, len).unwrap()
        })
        .collect();
    let m_bg = background
        .iter()
        .map(BackgroundPoints::len)
        .sum::<usize>()
        .max(1);
    let f = |v: &[f64]| {
        background_loss(
            &build_levels(v, classes, &lengths),
            &background,
            DEFAULT_FOCAL_GAMMA,
            m_bg,
        )
        .unwrap()
        .value
    };
    let analytic = background_loss(
        &build_levels(&x, classes, &lengths),
        &background,
        DEFAULT_FOCAL_GAMMA,
        m_bg,
    )
    .unwrap()
    .gradient;
    max_relative_error(&analytic, &finite_difference(f, &x, FD_STEP))
}

fn check_sigma(rng: &mut ChaCha8Rng) -> f64 {
    let n = rng.random_range(1..=12);
    let pseudo: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..30.0)).collect();
    let predicted: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..30.0)).collect();
    let f = |v: &[f64]| sigma_loss(&pseudo, v).unwrap().value;
    let analytic = sigma_loss(&pseudo, &predicted).unwrap().gradient;
    // closed form 2 (pred - pseudo) / N as a second reference
    let closed: Vec<f64> = pseudo
        .iter()
        .zip(&predicted)
        .map(|(s, p)| 2.0 * (p - s) / n as f64)
        .collect();
    max_relative_error(&analytic, &finite_difference(f, &predicted, FD_STEP))
        .max(max_relative_error(&analytic, &closed))
}

fn check_alignment(rng: &mut ChaCha8Rng) -> f64 {
    let classes = rng.random_range(1..=4);
    let len = rng.random_range(10..=40);
    let x = random_probs(rng, len * (classes + 1));
    let instances: Vec<(usize, f64, ClassId)> = (0..rng.random_range(1..=5))
        .map(|_| {
            (
                rng.random_range(0..len),
                rng.random_range(0.5..8.0),
                rng.random_range(1..=classes as ClassId),
            )
        })
        .collect();
    let kernels = GaussianKernelSet::from_instances(&instances, len).unwrap();
    let signal =
        |v: &[f64]| ProbabilitySignal::from_flat("v", 1, len, classes, v.to_vec()).unwrap();
    let f = |v: &[f64]| gaussian_alignment_loss(&signal(v), &kernels).unwrap().value;
    let analytic = gaussian_alignment_loss(&signal(&x), &kernels)
        .unwrap()
        .gradient;
    max_relative_error(&analytic, &finite_difference(f, &x, FD_STEP))
}

/// Finite-difference check of all five losses on `GRADIENT_INSTANCES` random
/// instances each.
pub fn gradient_suite(seed: u64) -> Vec<GradientCheck> {
    type Check = fn(&mut ChaCha8Rng) -> f64;
    let checks: [(&str, Check); 5] = [
        ("mil", check_mil),
        ("action_focal", check_focal),
        ("background", check_background),
        ("sigma_mse", check_sigma),
        ("gaussian_alignment", check_alignment),
    ];
    checks
        .iter()
        .enumerate()
        .map(|(i, (name, check))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let max_rel_err = (0..GRADIENT_INSTANCES)
                .map(|_| check(&mut rng))
                .fold(0.0, f64::max);
            GradientCheck {
                loss_name: name.to_string(),
                max_rel_err,
                pass: max_rel_err < GRADIENT_TOLERANCE,
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// fitting

fn gaussian_case(rng: &mut ChaCha8Rng) -> (Vec<f64>, PreliminaryBoundary, usize, f64) {
    let sigma0: f64 = rng.random_range(3.0..=40.0);
    let peak = rng.random_range(0.3..=1.0);
    let reach = (5.0 * sigma0).ceil() as usize;
    let left = reach + rng.random_range(0..20);
    let right = reach + rng.random_range(0..20);
    let pad = rng.random_range(0..10);
    let center = pad + left;
    let len = center + right + 1 + pad;
    let column = (0..len)
        .map(|t| {
            let z = (t as f64 - center as f64) / sigma0;
            peak * (-0.5 * z * z).exp()
        })
        .collect();
    let boundary = PreliminaryBoundary {
        start: center - left,
        end: center + right,
    };
    (column, boundary, center, sigma0)
}

fn rectangle_case(rng: &mut ChaCha8Rng) -> (Vec<f64>, PreliminaryBoundary, usize, usize) {
    let half: usize = rng.random_range(1..=60);
    let height = rng.random_range(0.3..=1.0);
    let left = half + rng.random_range(1..=40);
    let right = half + rng.random_range(1..=40);
    let center = left;
    let len = left + right + 1;
    let column = (0..len)
        .map(|t| {
            if t.abs_diff(center) <= half {
                height
            } else {
                0.0
            }
        })
        .collect();
    (
        column,
        PreliminaryBoundary {
            start: 0,
            end: len - 1,
        },
        center,
        half,
    )
}

/// Noise-free plateau with Gaussian shoulders, the shape in between the two templates.
fn mixed_case(rng: &mut ChaCha8Rng) -> (Vec<f64>, PreliminaryBoundary, usize) {
    let core = rng.random_range(0..=20) as f64;
    let shoulder = rng.random_range(1.0..=10.0);
    let peak = rng.random_range(0.3..=1.0);
    let reach = (core + 4.0 * shoulder).ceil() as usize + rng.random_range(1..=15);
    let center = reach;
    let len = 2 * reach + 1;
    let column = (0..len)
        .map(|t| {
            let d = (t as f64 - center as f64).abs();
            let over = (d - core).max(0.0) / shoulder;
            peak * (-0.5 * over * over).exp()
        })
        .collect();
    (
        column,
        PreliminaryBoundary {
            start: 0,
            end: len - 1,
        },
        center,
    )
}

pub const FIT_CASES: usize = 1000;
pub const SIGMA_RECOVERY_TOLERANCE: f64 = 0.02;
pub const OMEGA_RECOVERY_TOLERANCE: f64 = 1.0;

pub fn gaussian_recovery_check(seed: u64, cases: usize) -> PropertyCheck {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut check = PropertyCheck::new("gaussian_sigma_recovery_rel_err", SIGMA_RECOVERY_TOLERANCE);
    for _ in 0..cases {
        let (col, b, center, sigma0) = gaussian_case(&mut rng);
        let fit = fit_gaussian(&col, b, center, 1e-6, MinimizeOptions::default()).unwrap();
        check.record((fit.value - sigma0).abs() / sigma0);
    }
    timed(check, started)
}

pub fn rectangle_recovery_check(seed: u64, cases: usize) -> PropertyCheck {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut check = PropertyCheck::new(
        "rectangle_omega_recovery_snippets",
        OMEGA_RECOVERY_TOLERANCE,
    );
    for _ in 0..cases {
        let (col, b, center, half) = rectangle_case(&mut rng);
        let fit = fit_uniform(&col, b, center, 1e-6, MinimizeOptions::default()).unwrap();
        check.record((fit.value - half as f64).abs());
    }
    timed(check, started)
}

fn grid_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    let step = (hi - lo) / (n - 1) as f64;
    let mut best = (lo, f(lo));
    for i in 1..n {
        let x = lo + step * i as f64;
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// The fitted sigma never loses to a 10^4-point grid over `[l_b, u_b]`.
pub fn gaussian_grid_check(seed: u64, cases: usize) -> PropertyCheck {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut check = PropertyCheck::new("gaussian_fit_vs_grid_excess_loss", 1e-9);
    for _ in 0..cases {
        let (col, b, center) = mixed_case(&mut rng);
        let fit = fit_gaussian(&col, b, center, 1e-6, MinimizeOptions::default()).unwrap();
        let ub = width_upper_bound(b, center);
        let (_, fgrid) = grid_min(|s| gaussian_fit_loss(&col, b, center, s), 1e-6, ub, 10_000);
        check.record((fit.residual - fgrid).max(0.0));
    }
    timed(check, started)
}

/// The fitted omega reaches the exact minimum over all integer half-widths.
pub fn uniform_grid_check(seed: u64, cases: usize) -> PropertyCheck {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut check = PropertyCheck::new("uniform_fit_vs_enumeration_excess_loss", 1e-12);
    for i in 0..cases {
        let (col, b, center) = if i % 2 == 0 {
            mixed_case(&mut rng)
        } else {
            let (c, b, t, _) = gaussian_case(&mut rng);
            (c, b, t)
        };
        let fit = fit_uniform(&col, b, center, 1e-6, MinimizeOptions::default()).unwrap();
        let ub = width_upper_bound(b, center) as usize;
        let best = (0..=ub)
            .map(|k| uniform_fit_loss(&col, b, center, k as f64))
            .fold(f64::INFINITY, f64::min);
        check.record((fit.residual - best).max(0.0));
    }
    timed(check, started)
}

pub fn fitting_suite(seed: u64) -> Vec<PropertyCheck> {
    vec![
        gaussian_recovery_check(seed, FIT_CASES),
        rectangle_recovery_check(seed.wrapping_add(1), FIT_CASES),
        gaussian_grid_check(seed.wrapping_add(2), 25),
        uniform_grid_check(seed.wrapping_add(3), 200),
    ]
}

// ---------------------------------------------------------------------------
// oracles

/// A random unimodal objective on random bounds.
fn unimodal_case(rng: &mut ChaCha8Rng) -> (Box<dyn Fn(f64) -> f64>, f64, f64) {
    let lo = rng.random_range(-20.0..10.0);
    let hi = lo + rng.random_range(0.5..30.0);
    let c = rng.random_range(lo..hi);
    let a = rng.random_range(0.1..10.0);
    let f: Box<dyn Fn(f64) -> f64> = match rng.random_range(0..4) {
        0 => {
            let k = rng.random_range(0.0..2.0);
            Box::new(move |x| a * (x - c).powi(2) + k * (x - c).powi(4))
        }
        1 => {
            let p = rng.random_range(1.0..3.0);
            Box::new(move |x| a * (x - c).abs().powf(p))
        }
        2 => {
            let w = rng.random_range(0.5..10.0);
            Box::new(move |x| -a * (-(x - c).powi(2) / w).exp())
        }
        _ => {
            // cubic a(x-c)^2 (1 + s (x-c)) kept convex on the interval
            let s = rng.random_range(-1.0..1.0) / (3.0 * (hi - lo));
            Box::new(move |x| a * (x - c).powi(2) * (1.0 + s * (x - c)))
        }
    };
    (f, lo, hi)
}

pub const OPTIMIZER_GRID_POINTS: usize = 100_000;

pub fn optimizer_grid_check(seed: u64, cases: usize) -> PropertyCheck {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opts = MinimizeOptions::default();
    // normalized so the limit is 1.0: err / (x_tolerance + grid_step)
    let mut check = PropertyCheck::new("optimizer_vs_dense_grid_normalized_err", 1.0);
    for _ in 0..cases {
        let (f, lo, hi) = unimodal_case(&mut rng);
        let r = minimize_bounded(&f, Bounds1D::new(lo, hi).unwrap(), opts).unwrap();
        let step = (hi - lo) / (OPTIMIZER_GRID_POINTS - 1) as f64;
        let (xg, _) = grid_min(&f, lo, hi, OPTIMIZER_GRID_POINTS);
        check.record((r.x - xg).abs() / (opts.x_tolerance + step));
    }
    timed(check, started)
}

/// Straight-line AP: sort, match, then average the interpolated precision
/// at every true positive.
pub fn naive_average_precision(
    proposals: &[Proposal],
    gt: &[GroundTruthInstance],
    thr: f64,
) -> f64 {
    let mut idx: Vec<usize> = (0..proposals.len()).collect();
    idx.sort_by(|&a, &b| {
        let pa = &proposals[a];
        let pb = &proposals[b];
        if pa.score != pb.score {
            return pb.score.partial_cmp(&pa.score).unwrap();
        }
        (pa.start, pa.end, a).cmp(&(pb.start, pb.end, b))
    });
    let mut used = vec![false; gt.len()];
    let mut is_tp = Vec::new();
    for &i in &idx {
        let p = &proposals[i];
        let mut best_iou = -1.0;
        let mut best_g = usize::MAX;
        for g in 0..gt.len() {
            if used[g] || gt[g].video_id != p.video_id {
                continue;
            }
            let inter_lo = p.start.max(gt[g].start);
            let inter_hi = p.end.min(gt[g].end);
            let inter = if inter_hi >= inter_lo {
                inter_hi - inter_lo + 1
            } else {
                0
            };
            let union = (p.end - p.start + 1) + (gt[g].end - gt[g].start + 1) - inter;
            let iou = inter as f64 / union as f64;
            if iou >= thr && iou > best_iou {
                best_iou = iou;
                best_g = g;
            }
        }
        if best_g != usize::MAX {
            used[best_g] = true;
            is_tp.push(true);
        } else {
            is_tp.push(false);
        }
    }
    let mut prec = Vec::new();
    let mut tp = 0;
    for (k, hit) in is_tp.iter().enumerate() {
        if *hit {
            tp += 1;
        }
        prec.push(tp as f64 / (k + 1) as f64);
    }
    let mut ap = 0.0;
    for k in 0..is_tp.len() {
        if is_tp[k] {
            let best_after = prec[k..].iter().cloned().fold(0.0, f64::max);
            ap += best_after / gt.len() as f64;
        }
    }
    ap
}

fn random_ap_case(rng: &mut ChaCha8Rng) -> (Vec<Proposal>, Vec<GroundTruthInstance>) {
    let videos = ["a", "b"];
    let n_gt = rng.random_range(1..=5);
    let n_prop = rng.random_range(0..=10);
    let gt = (0..n_gt)
        .map(|_| {
            let s = rng.random_range(0..40);
            GroundTruthInstance {
                video_id: videos[rng.random_range(0..2)].to_string(),
                start: s,
                end: s + rng.random_range(0..15),
                class_id: 1,
            }
        })
        .collect();
    let props = (0..n_prop)
        .map(|_| {
            let s = rng.random_range(0..40);
            Proposal {
                video_id: videos[rng.random_range(0..2)].to_string(),
                start: s,
                end: s + rng.random_range(0..15),
                class_id: 1,
                // coarse scores so ties occur
                score: rng.random_range(1..=10) as f64 / 10.0,
            }
        })
        .collect();
    (props, gt)
}

pub fn ap_reference_check(seed: u64, cases: usize) -> PropertyCheck {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut check = PropertyCheck::new("average_precision_vs_naive_abs_err", 1e-12);
    for _ in 0..cases {
        let (props, gt) = random_ap_case(&mut rng);
        let thr = [0.1, 0.3, 0.5, 0.7][rng.random_range(0..4)];
        let ap = average_precision(&props, &gt, thr).unwrap();
        check.record((ap - naive_average_precision(&props, &gt, thr)).abs());
    }
    timed(check, started)
}

/// Quadratic NMS: repeatedly take the best remaining proposal and strike
/// out its same-class overlaps.
pub fn naive_nms(proposals: &[Proposal], thr: f64) -> Vec<Proposal> {
    let mut remaining: Vec<Proposal> = proposals.to_vec();
    let mut kept = Vec::new();
    while !remaining.is_empty() {
        let mut best = 0;
        for i in 1..remaining.len() {
            let (a, b) = (&remaining[i], &remaining[best]);
            let better = a.score > b.score
                || (a.score == b.score
                    && (a.start, a.end, a.class_id) < (b.start, b.end, b.class_id));
            if better {
                best = i;
            }
        }
        let top = remaining.remove(best);
        remaining
            .retain(|p| p.class_id != top.class_id || tiou(p.interval(), top.interval()) <= thr);
        kept.push(top);
    }
    kept
}

pub fn random_proposals(rng: &mut ChaCha8Rng, n: usize) -> Vec<Proposal> {
    (0..n)
        .map(|_| {
            let s = rng.random_range(0..200);
            Proposal {
                video_id: "v".into(),
                start: s,
                end: s + rng.random_range(0..40),
                class_id: rng.random_range(1..=3),
                score: rng.random_range(0..=20) as f64 / 20.0,
            }
        })
        .collect()
}

pub fn nms_reference_check(seed: u64, cases: usize) -> PropertyCheck {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut check = PropertyCheck::new("nms_vs_naive_mismatches", 0.0);
    for _ in 0..cases {
        let props = random_proposals(&mut rng, 50);
        let thr = rng.random_range(0.1..0.9);
        check.record_ok(nms(&props, thr) == naive_nms(&props, thr));
    }
    timed(check, started)
}

pub fn nms_idempotence_check(seed: u64, cases: usize) -> PropertyCheck {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut check = PropertyCheck::new("nms_idempotence_violations", 0.0);
    for _ in 0..cases {
        let n = rng.random_range(0..=60);
        let props = random_proposals(&mut rng, n);
        let thr = rng.random_range(0.1..0.9);
        let once = nms(&props, thr);
        check.record_ok(nms(&once, thr) == once);
    }
    timed(check, started)
}

pub fn boundary_and_peak_check(seed: u64, cases: usize) -> PropertyCheck {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut check = PropertyCheck::new("boundary_and_peak_vs_scan_mismatches", 0.0);
    for _ in 0..cases {
        let len = rng.random_range(2..=120);
        let density = rng.random_range(0.0..0.6);
        let mask: Vec<bool> = (0..len).map(|_| rng.random_bool(density)).collect();
        let t = rng.random_range(0..len);
        let idx: Vec<usize> = (0..len).filter(|&i| mask[i]).collect();
        let b = preliminary_boundaries(t, &BackgroundPoints::new(idx, len).unwrap(), len).unwrap();
        let start = (0..=t).rev().find(|&i| mask[i]).unwrap_or(0);
        let end = (t..len).find(|&i| mask[i]).unwrap_or(len - 1);
        let mut ok = b == PreliminaryBoundary { start, end };

        let col: Vec<f64> = (0..len)
            .map(|_| rng.random_range(0..=10) as f64 / 10.0)
            .collect();
        let delta = rng.random_range(0.01..=0.5);
        let reach = delta * (end - start) as f64;
        let mut best: Option<usize> = None;
        for i in start..=end {
            if (i as f64 - t as f64).abs() <= reach && best.is_none_or(|j| col[i] > col[j]) {
                best = Some(i);
            }
        }
        ok &= find_peak(&col, b, t, delta).t_star == best.unwrap();
        check.record_ok(ok);
    }
    timed(check, started)
}

pub fn signal_ops_check(seed: u64, cases: usize) -> PropertyCheck {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut check = PropertyCheck::new("smoothing_topk_mixing_vs_direct_abs_err", 1e-12);
    for _ in 0..cases {
        let len = rng.random_range(1..=60);
        let col: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..=1.0)).collect();

        // smoothing: direct sum with explicit mirrored indices
        let sigma = rng.random_range(0.3..6.0);
        let r = (4.0 * sigma + 0.5f64).floor() as i64;
        let weights: Vec<f64> = (-r..=r)
            .map(|k| (-0.5 * (k as f64 / sigma).powi(2)).exp())
            .collect();
        let z: f64 = weights.iter().sum();
        let got = smooth_column(&col, sigma).unwrap();
        let mut err: f64 = 0.0;
        for t in 0..len as i64 {
            let mut acc = 0.0;
            for (j, k) in (-r..=r).enumerate() {
                let mut i = t + k;
                loop {
                    if i < 0 {
                        i = -i - 1;
                    } else if i >= len as i64 {
                        i = 2 * len as i64 - i - 1;
                    } else {
                        break;
                    }
                }
                acc += weights[j] / z * col[i as usize];
            }
            err = err.max((acc.clamp(0.0, 1.0) - got[t as usize]).abs());
        }

        // top-k: full sort then average
        let rows: Vec<Vec<f64>> = col.iter().map(|&c| vec![c, 1.0 - c]).collect();
        let s = ProbabilitySignal::from_rows("v", 1, 1, &rows).unwrap();
        let k = rng.random_range(1..=len);
        let mut sorted = col.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let want = sorted[..k].iter().sum::<f64>() / k as f64;
        err = err.max((video_level_scores(&s, k).unwrap()[0] - want).abs());

        // kernel mixing: double loop
        let inst: Vec<(usize, f64)> = (0..rng.random_range(1..=4))
            .map(|_| (rng.random_range(0..len), rng.random_range(0.5..6.0)))
            .collect();
        let mixed = mix_kernels(&inst, len).unwrap();
        for (t, m) in mixed.iter().enumerate() {
            let mut best: f64 = 0.0;
            for &(ti, si) in &inst {
                best = best.max((-0.5 * ((t as f64 - ti as f64) / si).powi(2)).exp());
            }
            err = err.max((m - best).abs());
        }
        check.record(err);
    }
    timed(check, started)
}

pub fn oracle_suite(seed: u64) -> Vec<PropertyCheck> {
    vec![
        optimizer_grid_check(seed, 100),
        ap_reference_check(seed.wrapping_add(1), 500),
        nms_reference_check(seed.wrapping_add(2), 200),
        nms_idempotence_check(seed.wrapping_add(3), 1000),
        boundary_and_peak_check(seed.wrapping_add(4), 500),
        signal_ops_check(seed.wrapping_add(5), 200),
    ]
}
