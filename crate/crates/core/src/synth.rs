//! Seeded synthetic videos: oracle probability signals with known ground
//! truth, and point annotations sampled from the ground truth.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::eval::GroundTruthInstance;
use crate::math;
use crate::signal::{BackgroundPoints, ClassId, PointAnnotation, ProbabilitySignal};
use crate::{Error, Result};

/// Attempts at placing a full set of instances before giving up.
const MAX_PACKING_ATTEMPTS: usize = 200;
/// Attempts at placing one instance within a packing attempt.
const MAX_PLACEMENT_TRIES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    /// Constant height over the whole instance.
    Plateau,
    /// Peak-matched bump with `sigma = duration / 4`.
    Gaussian,
    /// Plateau over the middle half with Gaussian shoulders.
    PlateauWithShoulders,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointMode {
    Uniform,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub length: usize,
    pub num_classes: usize,
    /// Inclusive range of instance counts per video.
    pub instances_per_video: (usize, usize),
    /// Inclusive range of instance durations in snippets.
    pub duration_range: (usize, usize),
    /// Relative weights of plateau, gaussian, plateau-with-shoulders.
    pub shape_mix: [f64; 3],
    pub noise_std: f64,
    /// Floor of the class probability inside an instance.
    pub background_level: f64,
    /// Range the instance peak height is drawn from.
    pub peak_range: (f64, f64),
    /// Minimum number of snippets separating two instances.
    pub min_gap: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            length: 512,
            num_classes: 5,
            instances_per_video: (2, 6),
            duration_range: (10, 80),
            shape_mix: [1.0, 1.0, 1.0],
            noise_std: 0.0,
            background_level: 0.3,
            peak_range: (0.7, 0.95),
            min_gap: 4,
            seed: 42,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.duration_range;
        if lo < 3 || lo > hi {
            return Err(Error::invalid(format!(
                "invalid duration range {lo}..={hi} (min 3)"
            )));
        }
        if hi > self.length {
            return Err(Error::invalid("durations cannot exceed the video length"));
        }
        let (a, b) = self.instances_per_video;
        if a > b {
            return Err(Error::invalid("invalid instance count range"));
        }
        if self.num_classes == 0 {
            return Err(Error::invalid("num_classes must be >= 1"));
        }
        if self.shape_mix.iter().any(|w| w.is_nan() || *w < 0.0)
            || self.shape_mix.iter().sum::<f64>() <= 0.0
        {
            return Err(Error::invalid(
                "shape weights must be >= 0 with a positive sum",
            ));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::invalid("noise_std must be >= 0"));
        }
        if !(0.0..1.0).contains(&self.background_level) {
            return Err(Error::invalid("background_level must be in [0, 1)"));
        }
        let (pl, ph) = self.peak_range;
        if !(pl <= ph && ph <= 1.0 && pl >= self.background_level) {
            return Err(Error::invalid(
                "peak range must satisfy background_level <= lo <= hi <= 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticVideo {
    pub signal: ProbabilitySignal,
    pub gt: Vec<GroundTruthInstance>,
    pub shapes: Vec<Shape>,
    pub true_background: BackgroundPoints,
}

/// Noise-free class probability of an instance at offset `t`.
pub fn shape_value(
    shape: Shape,
    inst: &GroundTruthInstance,
    peak: f64,
    floor: f64,
    t: usize,
) -> f64 {
    let d = (inst.end - inst.start + 1) as f64;
    let center = 0.5 * (inst.start + inst.end) as f64;
    let v = match shape {
        Shape::Plateau => peak,
        Shape::Gaussian => {
            let z = (t as f64 - center) / (d / 4.0);
            peak * math::exp(-0.5 * z * z)
        }
        Shape::PlateauWithShoulders => {
            let quarter = d / 4.0;
            let core_lo = inst.start as f64 + quarter;
            let core_hi = inst.end as f64 - quarter;
            let tf = t as f64;
            let dist = if tf < core_lo {
                core_lo - tf
            } else if tf > core_hi {
                tf - core_hi
            } else {
                0.0
            };
            let s = (d / 8.0).max(1.0);
            peak * math::exp(-0.5 * (dist / s) * (dist / s))
        }
    };
    v.max(floor)
}

fn pick_shape<R: Rng + ?Sized>(mix: &[f64; 3], rng: &mut R) -> Shape {
    let total: f64 = mix.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (w, s) in mix
        .iter()
        .zip([Shape::Plateau, Shape::Gaussian, Shape::PlateauWithShoulders])
    {
        if u < *w {
            return s;
        }
        u -= w;
    }
    Shape::PlateauWithShoulders
}

fn place_instances<R: Rng + ?Sized>(
    config: &SyntheticConfig,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    let (nmin, nmax) = config.instances_per_video;
    let n = rng.random_range(nmin..=nmax);
    let (dmin, dmax) = config.duration_range;
    for _ in 0..MAX_PACKING_ATTEMPTS {
        let mut placed: Vec<(usize, usize)> = Vec::with_capacity(n);
        let mut ok = true;
        for _ in 0..n {
            let d = rng.random_range(dmin..=dmax);
            let mut done = false;
            for _ in 0..MAX_PLACEMENT_TRIES {
                let s = rng.random_range(0..=config.length - d);
                let e = s + d - 1;
                let clear = placed
                    .iter()
                    .all(|&(ps, pe)| e + config.min_gap < ps || pe + config.min_gap < s);
                if clear {
                    placed.push((s, e));
                    done = true;
                    break;
                }
            }
            if !done {
                ok = false;
                break;
            }
        }
        if ok {
            placed.sort_unstable();
            return Ok(placed);
        }
    }
    Err(Error::PackingFailed {
        requested: n,
        attempts: MAX_PACKING_ATTEMPTS,
    })
}

/// Generates one video. All randomness comes from `rng`.
pub fn generate_video<R: Rng + ?Sized>(
    config: &SyntheticConfig,
    video_id: &str,
    rng: &mut R,
) -> Result<SyntheticVideo> {
    config.validate()?;
    let spans = place_instances(config, rng)?;
    let c = config.num_classes;
    let w = c + 1;
    let mut values = vec![0.0; config.length * w];
    let mut gt = Vec::with_capacity(spans.len());
    let mut shapes = Vec::with_capacity(spans.len());

    for (s, e) in spans {
        let class_id: ClassId = rng.random_range(1..=c as ClassId);
        let shape = pick_shape(&config.shape_mix, rng);
        let (pl, ph) = config.peak_range;
        let peak = if pl < ph {
            rng.random_range(pl..=ph)
        } else {
            pl
        };
        let inst = GroundTruthInstance {
            video_id: String::from(video_id),
            start: s,
            end: e,
            class_id,
        };
        let col = class_id as usize - 1;
        for t in s..=e {
            values[t * w + col] = shape_value(shape, &inst, peak, config.background_level, t);
        }
        gt.push(inst);
        shapes.push(shape);
    }
    for row in values.chunks_exact_mut(w) {
        let max = row[..c].iter().cloned().fold(0.0, f64::max);
        row[c] = 1.0 - max;
    }
    if config.noise_std > 0.0 {
        let normal = Normal::new(0.0, config.noise_std)
            .map_err(|_| Error::invalid("noise_std must be finite"))?;
        for v in &mut values {
            *v = (*v + normal.sample(rng)).clamp(0.0, 1.0);
        }
    }

    let signal = ProbabilitySignal::from_flat(video_id, 1, config.length, c, values)?;
    let mut video = SyntheticVideo {
        signal,
        gt,
        shapes,
        true_background: BackgroundPoints::default(),
    };
    video.true_background = derive_background_points(&video, 0.5);
    Ok(video)
}

/// One annotated snippet per instance: uniform over the instance, or normal
/// around its centre with `std = duration / 6`, rounded and clipped.
pub fn sample_point<R: Rng + ?Sized>(
    inst: &GroundTruthInstance,
    mode: PointMode,
    rng: &mut R,
) -> PointAnnotation {
    let t = if inst.start == inst.end {
        inst.start
    } else {
        match mode {
            PointMode::Uniform => rng.random_range(inst.start..=inst.end),
            PointMode::Gaussian => {
                let d = (inst.end - inst.start + 1) as f64;
                let center = 0.5 * (inst.start + inst.end) as f64;
                let normal = Normal::new(center, d / 6.0).expect("positive std");
                let x = math::round(normal.sample(rng));
                x.clamp(inst.start as f64, inst.end as f64) as usize
            }
        }
    };
    PointAnnotation {
        video_id: inst.video_id.clone(),
        t,
        class_id: inst.class_id,
    }
}

/// Snippets whose oracle background probability exceeds `threshold`,
/// excluding every ground-truth instance.
pub fn derive_background_points(video: &SyntheticVideo, threshold: f64) -> BackgroundPoints {
    let n = video.signal.len();
    let mut inside = vec![false; n];
    for g in &video.gt {
        for slot in &mut inside[g.start..=g.end.min(n - 1)] {
            *slot = true;
        }
    }
    let indices = (0..n)
        .filter(|&t| !inside[t] && video.signal.background(t) > threshold)
        .collect();
    BackgroundPoints::new(indices, n).expect("indices are generated in order")
}

/// Average-pools a level-1 signal into pyramid level `level` (`theta^(level-1)`
/// snippets per cell, last cell partial).
pub fn pool_level(
    signal: &ProbabilitySignal,
    level: u32,
    theta: usize,
) -> Result<ProbabilitySignal> {
    if theta == 0 || level == 0 {
        return Err(Error::invalid("level and theta must be >= 1"));
    }
    let scale = math::level_scale(theta, level);
    let n = signal.len();
    let cells = n.div_ceil(scale);
    let w = signal.width();
    let mut values = Vec::with_capacity(cells * w);
    for cell in 0..cells {
        let lo = cell * scale;
        let hi = ((cell + 1) * scale).min(n);
        for col in 0..w {
            let mean = (lo..hi).map(|t| signal.get(t, col)).sum::<f64>() / (hi - lo) as f64;
            values.push(mean.clamp(0.0, 1.0));
        }
    }
    ProbabilitySignal::from_flat(
        signal.video_id(),
        level,
        cells,
        signal.num_classes(),
        values,
    )
}

/// SplitMix64 step, used to derive independent per-video seeds.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticEntry {
    pub video: SyntheticVideo,
    pub points: Vec<PointAnnotation>,
    pub seed: u64,
}

/// `num_videos` videos with ids `video_0000...`, each driven by its own
/// seed derived from `config.seed`, plus one sampled point per instance.
pub fn generate_dataset(
    config: &SyntheticConfig,
    num_videos: usize,
    mode: PointMode,
) -> Result<Vec<SyntheticEntry>> {
    (0..num_videos)
        .map(|i| {
            let seed = derive_seed(config.seed, i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let id = format!("video_{i:04}");
            let video = generate_video(config, &id, &mut rng)?;
            let points = video
                .gt
                .iter()
                .map(|g| sample_point(g, mode, &mut rng))
                .collect();
            Ok(SyntheticEntry {
                video,
                points,
                seed,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::tiou;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn noiseless_signal_is_analytic() {
        let cfg = SyntheticConfig {
            noise_std: 0.0,
            ..SyntheticConfig::default()
        };
        let v = generate_video(&cfg, "v", &mut rng(1)).unwrap();
        assert!(!v.gt.is_empty());
        for t in 0..cfg.length {
            let inst =
                v.gt.iter()
                    .zip(&v.shapes)
                    .find(|(g, _)| g.start <= t && t <= g.end);
            let row = v.signal.row(t);
            match inst {
                None => {
                    assert!(row[..cfg.num_classes].iter().all(|x| *x == 0.0));
                    assert_eq!(row[cfg.num_classes], 1.0);
                }
                Some((g, _)) => {
                    let c = g.class_id as usize - 1;
                    assert!(row[c] >= cfg.background_level);
                    assert_eq!(row[cfg.num_classes], 1.0 - row[c]);
                }
            }
        }
    }

    #[test]
    fn same_seed_same_video() {
        let cfg = SyntheticConfig {
            noise_std: 0.05,
            ..SyntheticConfig::default()
        };
        let a = generate_video(&cfg, "v", &mut rng(7)).unwrap();
        let b = generate_video(&cfg, "v", &mut rng(7)).unwrap();
        assert_eq!(a, b);
        assert!(a
            .signal
            .values()
            .iter()
            .zip(b.signal.values())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = generate_video(&cfg, "v", &mut rng(8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn instances_are_disjoint() {
        let cfg = SyntheticConfig::default();
        for seed in 0..50 {
            let v = generate_video(&cfg, "v", &mut rng(seed)).unwrap();
            for (i, a) in v.gt.iter().enumerate() {
                for b in &v.gt[i + 1..] {
                    assert_eq!(tiou(a.interval(), b.interval()), 0.0);
                }
            }
        }
    }

    #[test]
    fn infeasible_packing_errors() {
        let cfg = SyntheticConfig {
            length: 50,
            instances_per_video: (5, 5),
            duration_range: (20, 20),
            ..SyntheticConfig::default()
        };
        assert!(matches!(
            generate_video(&cfg, "v", &mut rng(0)),
            Err(Error::PackingFailed { .. })
        ));
        let bad = SyntheticConfig {
            duration_range: (2, 5),
            ..SyntheticConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    fn inst(s: usize, e: usize) -> GroundTruthInstance {
        GroundTruthInstance {
            video_id: "v".into(),
            start: s,
            end: e,
            class_id: 2,
        }
    }

    #[test]
    fn point_sampling() {
        let mut r = rng(3);
        let one = inst(17, 17);
        assert_eq!(sample_point(&one, PointMode::Uniform, &mut r).t, 17);
        assert_eq!(sample_point(&one, PointMode::Gaussian, &mut r).t, 17);
        let g = inst(100, 159);
        for _ in 0..1000 {
            let p = sample_point(&g, PointMode::Uniform, &mut r);
            assert!(g.interval().contains(p.t));
            assert_eq!(p.class_id, 2);
            assert!(g
                .interval()
                .contains(sample_point(&g, PointMode::Gaussian, &mut r).t));
        }
        let n = 10_000;
        let mean = (0..n)
            .map(|_| sample_point(&g, PointMode::Gaussian, &mut r).t as f64)
            .sum::<f64>()
            / n as f64;
        let center = 129.5;
        assert!((mean - center).abs() < 0.05 * center, "{mean}");
    }

    #[test]
    fn background_points() {
        let cfg = SyntheticConfig::default();
        let v = generate_video(&cfg, "v", &mut rng(11)).unwrap();
        let bg = derive_background_points(&v, 0.5);
        // noiseless: exactly the complement of the instances
        let total: usize = v.gt.iter().map(|g| g.end - g.start + 1).sum();
        assert_eq!(bg.len(), cfg.length - total);
        for g in &v.gt {
            assert!(bg.indices().iter().all(|t| !g.interval().contains(*t)));
        }
        assert!(derive_background_points(&v, 1.0).is_empty());

        let noisy = SyntheticConfig {
            noise_std: 0.1,
            ..SyntheticConfig::default()
        };
        let v = generate_video(&noisy, "v", &mut rng(11)).unwrap();
        let want: Vec<usize> = (0..noisy.length)
            .filter(|&t| {
                v.signal.background(t) > 0.7 && !v.gt.iter().any(|g| g.interval().contains(t))
            })
            .collect();
        assert_eq!(derive_background_points(&v, 0.7).indices(), want.as_slice());
    }

    #[test]
    fn pooling() {
        let cfg = SyntheticConfig {
            length: 101,
            instances_per_video: (1, 1),
            ..SyntheticConfig::default()
        };
        let v = generate_video(&cfg, "v", &mut rng(5)).unwrap();
        let l2 = pool_level(&v.signal, 2, 2).unwrap();
        assert_eq!(l2.len(), 51);
        assert_eq!(l2.level(), 2);
        let l1 = pool_level(&v.signal, 1, 2).unwrap();
        assert_eq!(l1, v.signal);
    }

    #[test]
    fn dataset_seeds_are_stable() {
        let cfg = SyntheticConfig::default();
        let a = generate_dataset(&cfg, 3, PointMode::Gaussian).unwrap();
        let b = generate_dataset(&cfg, 3, PointMode::Gaussian).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        for e in &a {
            assert_eq!(e.points.len(), e.video.gt.len());
        }
        assert_ne!(derive_seed(42, 0), derive_seed(42, 1));
    }
}
