//! Subcommand implementations. Each `run_*` function is what the binary
//! calls after argument parsing.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use adm_core::adm::{pseudo_labels_for_video, AdmConfig, PseudoLabel};
use adm_core::decoder::{decode, DecoderConfig, Proposal};
use adm_core::eval::{map_report, pseudo_label_quality, GroundTruthInstance};
use adm_core::optim::MinimizeOptions;
use adm_core::synth::{generate_dataset, pool_level, PointMode, SyntheticConfig};
use adm_core::PointAnnotation;
use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use log::info;
use serde::Serialize;

use crate::io::{
    read_json, read_signal_dir, report_csv, signal_file_name, write_atomic, write_json,
    AnnotationRecord, EvalReportFile, GroundTruthRecord, PseudoLabelRecord, SignalFile,
    VideoProposals, VideoPseudoLabels,
};
use crate::verify::{fitting_suite, gradient_suite, oracle_suite, Suite};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PointModeArg {
    Uniform,
    Gaussian,
}

impl From<PointModeArg> for PointMode {
    fn from(m: PointModeArg) -> Self {
        match m {
            PointModeArg::Uniform => PointMode::Uniform,
            PointModeArg::Gaussian => PointMode::Gaussian,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Output dataset directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub num_videos: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Snippets per video (T).
    #[arg(long, default_value_t = 512)]
    pub length: usize,
    #[arg(long, default_value_t = 5)]
    pub num_classes: usize,
    #[arg(long, default_value_t = 2)]
    pub min_instances: usize,
    #[arg(long, default_value_t = 6)]
    pub max_instances: usize,
    #[arg(long, default_value_t = 10)]
    pub min_duration: usize,
    #[arg(long, default_value_t = 80)]
    pub max_duration: usize,
    /// Relative weights of plateau, gaussian and plateau-with-shoulders shapes.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 1.0, 1.0])]
    pub shape_mix: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub noise_std: f64,
    #[arg(long, default_value_t = 0.3)]
    pub background_level: f64,
    #[arg(long, default_value_t = 4)]
    pub min_gap: usize,
    #[arg(long, value_enum, default_value_t = PointModeArg::Gaussian)]
    pub point_mode: PointModeArg,
    /// Number of pyramid levels written per video.
    #[arg(long, default_value_t = 1)]
    pub levels: u32,
    /// Downsampling ratio between pyramid levels.
    #[arg(long, default_value_t = 2)]
    pub theta: usize,
}

impl SynthArgs {
    pub fn config(&self) -> Result<SyntheticConfig> {
        let mix: [f64; 3] = self
            .shape_mix
            .as_slice()
            .try_into()
            .context("--shape-mix takes exactly three weights")?;
        Ok(SyntheticConfig {
            length: self.length,
            num_classes: self.num_classes,
            instances_per_video: (self.min_instances, self.max_instances),
            duration_range: (self.min_duration, self.max_duration),
            shape_mix: mix,
            noise_std: self.noise_std,
            background_level: self.background_level,
            min_gap: self.min_gap,
            seed: self.seed,
            ..SyntheticConfig::default()
        })
    }
}

#[derive(Debug, Serialize)]
struct ManifestConfig {
    length: usize,
    num_classes: usize,
    instances_per_video: (usize, usize),
    duration_range: (usize, usize),
    shape_mix: [f64; 3],
    noise_std: f64,
    background_level: f64,
    peak_range: (f64, f64),
    min_gap: usize,
    point_mode: PointModeArg,
    levels: u32,
    theta: usize,
}

#[derive(Debug, Serialize)]
struct ManifestVideo {
    video_id: String,
    seed: u64,
    num_instances: usize,
}

#[derive(Debug, Serialize)]
struct Manifest {
    seed: u64,
    num_videos: usize,
    config: ManifestConfig,
    videos: Vec<ManifestVideo>,
}

pub const SIGNALS_DIR: &str = "signals";
pub const GT_FILE: &str = "gt.json";
pub const ANNOTATIONS_FILE: &str = "annotations.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes `signals/`, `gt.json`, `annotations.json` and `manifest.json` under `args.out`.
pub fn run_synth(args: &SynthArgs) -> Result<()> {
    if args.levels == 0 || args.theta == 0 {
        bail!("--levels and --theta must be >= 1");
    }
    let config = args.config()?;
    let entries = generate_dataset(&config, args.num_videos, args.point_mode.into())?;

    let signal_dir = args.out.join(SIGNALS_DIR);
    fs::create_dir_all(&signal_dir)
        .with_context(|| format!("cannot create {}", signal_dir.display()))?;

    let mut gt = Vec::new();
    let mut annotations = Vec::new();
    let mut videos = Vec::new();
    for entry in &entries {
        let video = &entry.video;
        let id = video.signal.video_id();
        for level in 1..=args.levels {
            let signal = if level == 1 {
                video.signal.clone()
            } else {
                pool_level(&video.signal, level, args.theta)?
            };
            write_json(
                &signal_dir.join(signal_file_name(id, level)),
                &SignalFile::from_signal(&signal),
            )?;
        }
        gt.extend(video.gt.iter().map(GroundTruthRecord::from));
        annotations.extend(entry.points.iter().map(AnnotationRecord::from));
        videos.push(ManifestVideo {
            video_id: id.to_string(),
            seed: entry.seed,
            num_instances: video.gt.len(),
        });
    }
    write_json(&args.out.join(GT_FILE), &gt)?;
    write_json(&args.out.join(ANNOTATIONS_FILE), &annotations)?;
    let manifest = Manifest {
        seed: args.seed,
        num_videos: args.num_videos,
        config: ManifestConfig {
            length: config.length,
            num_classes: config.num_classes,
            instances_per_video: config.instances_per_video,
            duration_range: config.duration_range,
            shape_mix: config.shape_mix,
            noise_std: config.noise_std,
            background_level: config.background_level,
            peak_range: config.peak_range,
            min_gap: config.min_gap,
            point_mode: args.point_mode,
            levels: args.levels,
            theta: args.theta,
        },
        videos,
    };
    write_json(&args.out.join(MANIFEST_FILE), &manifest)?;
    info!(
        "wrote {} videos, {} instances to {}",
        entries.len(),
        gt.len(),
        args.out.display()
    );
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct AdmArgs {
    /// Directory of signal JSON files (one per video and pyramid level).
    #[arg(long)]
    pub signals: PathBuf,
    /// JSON array of point annotations.
    #[arg(long)]
    pub annotations: PathBuf,
    /// Output pseudo-label JSON file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.25)]
    pub delta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma2: f64,
    /// Lower bound l_b for sigma and omega.
    #[arg(long, default_value_t = 1e-6)]
    pub l_b: f64,
    /// Std of the Gaussian smoothing applied before fitting.
    #[arg(long, default_value_t = 2.0)]
    pub kernel_sigma: f64,
    #[arg(long, default_value_t = 0.5)]
    pub bg_threshold: f64,
    /// Radius r_a kept out of the background set around each point.
    #[arg(long, default_value_t = 2)]
    pub r_a: usize,
    #[arg(long)]
    pub clip_to_boundary: bool,
    #[arg(long, default_value_t = 1e-5)]
    pub x_tolerance: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iterations: usize,
}

impl AdmArgs {
    pub fn config(&self) -> AdmConfig {
        AdmConfig {
            delta: self.delta,
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            sigma_lower: self.l_b,
            smoothing_sigma: self.kernel_sigma,
            background_threshold: self.bg_threshold,
            augment_radius: self.r_a,
            clip_to_boundary: self.clip_to_boundary,
            minimize: MinimizeOptions {
                x_tolerance: self.x_tolerance,
                max_iterations: self.max_iterations,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmSummary {
    pub annotations: usize,
    pub pseudo_labels: usize,
    pub mean_gaussian_residual: f64,
    pub mean_uniform_residual: f64,
}

impl AdmSummary {
    pub fn alpha(&self) -> f64 {
        if self.annotations == 0 {
            0.0
        } else {
            self.pseudo_labels as f64 / self.annotations as f64
        }
    }
}

fn group_points(points: Vec<PointAnnotation>) -> BTreeMap<String, Vec<PointAnnotation>> {
    let mut by_video: BTreeMap<String, Vec<PointAnnotation>> = BTreeMap::new();
    for p in points {
        by_video.entry(p.video_id.clone()).or_default().push(p);
    }
    by_video
}

/// Pseudo-labels for every annotated video, keyed by video id.
pub fn pseudo_labels_for_dataset(
    signals: &Path,
    annotations: &Path,
    config: &AdmConfig,
) -> Result<BTreeMap<String, Vec<PseudoLabel>>> {
    config.validate()?;
    let records: Vec<AnnotationRecord> = read_json(annotations)?;
    let points: Vec<PointAnnotation> = records.into_iter().map(Into::into).collect();
    let by_video = group_points(points);
    if by_video.is_empty() {
        return Ok(BTreeMap::new());
    }
    let videos = read_signal_dir(signals)?;
    let mut out = BTreeMap::new();
    for (id, pts) in by_video {
        let levels = videos
            .get(&id)
            .with_context(|| format!("annotation references video {id}, which has no signal"))?;
        let labels = pseudo_labels_for_video(levels, &pts, config)
            .with_context(|| format!("fitting video {id}"))?;
        out.insert(id, labels);
    }
    Ok(out)
}

pub fn run_adm(args: &AdmArgs) -> Result<AdmSummary> {
    let labels = pseudo_labels_for_dataset(&args.signals, &args.annotations, &args.config())?;
    let records: Vec<VideoPseudoLabels> = labels
        .iter()
        .map(|(id, ls)| VideoPseudoLabels {
            video_id: id.clone(),
            labels: ls.iter().map(PseudoLabelRecord::from).collect(),
        })
        .collect();
    write_json(&args.out, &records)?;

    let all: Vec<&PseudoLabel> = labels.values().flatten().collect();
    let n = all.len();
    let mean = |f: fn(&PseudoLabel) -> f64| {
        if n == 0 {
            0.0
        } else {
            all.iter().map(|l| f(l)).sum::<f64>() / n as f64
        }
    };
    let summary = AdmSummary {
        annotations: n,
        pseudo_labels: n,
        mean_gaussian_residual: mean(|l| l.gaussian_residual),
        mean_uniform_residual: mean(|l| l.uniform_residual),
    };
    eprintln!(
        "{} pseudo-labels for {} annotations (alpha {:.3}); mean residual gaussian {:.6}, uniform {:.6}",
        summary.pseudo_labels,
        summary.annotations,
        summary.alpha(),
        summary.mean_gaussian_residual,
        summary.mean_uniform_residual
    );
    Ok(summary)
}

#[derive(Debug, Clone, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub signals: PathBuf,
    /// Output proposal JSON file.
    #[arg(long)]
    pub out: PathBuf,
    /// Binarization thresholds, as `lo:hi:step` or a comma list.
    #[arg(long, default_value = "0.1:0.9:0.1")]
    pub thresholds: String,
    #[arg(long, default_value_t = 0.25)]
    pub oic_inflation: f64,
    #[arg(long, default_value_t = 0.45)]
    pub nms_tiou: f64,
    /// Video-level score a class needs to be decoded.
    #[arg(long, default_value_t = 0.5)]
    pub class_threshold: f64,
    /// Video-level scores average the top `T / topk_divisor` snippets.
    #[arg(long, default_value_t = 8)]
    pub topk_divisor: usize,
    #[arg(long, default_value_t = 2)]
    pub theta: usize,
}

impl DecodeArgs {
    pub fn config(&self) -> Result<DecoderConfig> {
        Ok(DecoderConfig {
            thresholds: parse_thresholds(&self.thresholds)?,
            oic_inflation: self.oic_inflation,
            nms_tiou: self.nms_tiou,
            class_score_threshold: self.class_threshold,
            topk_divisor: self.topk_divisor,
            downsample_ratio: self.theta,
        })
    }
}

pub fn decode_dataset(
    signals: &Path,
    config: &DecoderConfig,
) -> Result<BTreeMap<String, Vec<Proposal>>> {
    config.validate()?;
    let videos = read_signal_dir(signals)?;
    videos
        .into_iter()
        .map(|(id, levels)| {
            let proposals =
                decode(&levels, config).with_context(|| format!("decoding video {id}"))?;
            Ok((id, proposals))
        })
        .collect()
}

/// Returns the number of proposals written.
pub fn run_decode(args: &DecodeArgs) -> Result<usize> {
    let decoded = decode_dataset(&args.signals, &args.config()?)?;
    let records: Vec<VideoProposals> = decoded
        .iter()
        .map(|(id, ps)| VideoProposals::from_proposals(id, ps))
        .collect();
    write_json(&args.out, &records)?;
    let n = decoded.values().map(Vec::len).sum();
    info!("decoded {n} proposals from {} videos", decoded.len());
    Ok(n)
}

#[derive(Debug, Clone, Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["proposals", "pseudo_labels"]))]
pub struct EvalArgs {
    /// Proposal JSON produced by `decode`.
    #[arg(long)]
    pub proposals: Option<PathBuf>,
    /// Pseudo-label JSON produced by `adm`.
    #[arg(long)]
    pub pseudo_labels: Option<PathBuf>,
    /// Ground-truth JSON array.
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, default_value = "0.1:0.7:0.1")]
    pub thresholds: String,
    /// Output report JSON; the CSV table goes next to it.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn csv_path(json: &Path) -> PathBuf {
    json.with_extension("csv")
}

pub fn run_eval(args: &EvalArgs) -> Result<EvalReportFile> {
    let thresholds = parse_thresholds(&args.thresholds)?;
    let gt_records: Vec<GroundTruthRecord> = read_json(&args.gt)?;
    let gt: Vec<GroundTruthInstance> = gt_records
        .into_iter()
        .map(GroundTruthRecord::into_instance)
        .collect::<Result<_>>()?;
    if gt.is_empty() {
        bail!(
            "ground truth file {} contains no instances",
            args.gt.display()
        );
    }

    let (report, quality) = if let Some(path) = &args.pseudo_labels {
        let videos: Vec<VideoPseudoLabels> = read_json(path)?;
        let pseudo: Vec<Proposal> = videos
            .iter()
            .flat_map(VideoPseudoLabels::to_proposals)
            .collect();
        let q = pseudo_label_quality(&pseudo, &gt, &thresholds)?;
        (q.eval.clone(), Some(q))
    } else {
        let path = args.proposals.as_ref().expect("clap enforces one input");
        let videos: Vec<VideoProposals> = read_json(path)?;
        let proposals: Vec<Proposal> = videos
            .iter()
            .flat_map(VideoProposals::to_proposals)
            .collect();
        (map_report(&proposals, &gt, &thresholds)?, None)
    };

    let file = EvalReportFile::new(&report, quality.as_ref());
    write_json(&args.out, &file)?;
    let table = report_csv(&report);
    write_atomic(&csv_path(&args.out), table.as_bytes())?;
    print!("{table}");
    println!("average mAP: {:.2}", 100.0 * report.average_map);
    if let Some(q) = &quality {
        println!("alpha: {:.3}  mean tIoU: {:.4}", q.alpha, q.mean_tiou);
    }
    Ok(file)
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Runs one suite, prints its JSON report to stdout and returns whether
/// every check passed.
pub fn run_verify(args: &VerifyArgs) -> Result<bool> {
    let (json, failures): (String, Vec<String>) = match args.suite {
        Suite::Gradients => {
            let checks = gradient_suite(args.seed);
            let failed = checks
                .iter()
                .filter(|c| !c.pass)
                .map(|c| c.loss_name.clone())
                .collect();
            (crate::io::to_json(&checks)?, failed)
        }
        Suite::Fitting | Suite::Oracles => {
            let checks = if args.suite == Suite::Fitting {
                fitting_suite(args.seed)
            } else {
                oracle_suite(args.seed)
            };
            let failed = checks
                .iter()
                .filter(|c| !c.pass)
                .map(|c| c.name.clone())
                .collect();
            (crate::io::to_json(&checks)?, failed)
        }
    };
    print!("{json}");
    for name in &failures {
        eprintln!("FAILED: {name}");
    }
    Ok(failures.is_empty())
}

/// Parses `lo:hi:step`, `lo:hi` (step 0.1) or a comma-separated list.
pub fn parse_thresholds(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    let values: Vec<f64> = if text.contains(':') {
        let parts: Vec<f64> = text
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("invalid threshold range `{text}`"))?;
        let (lo, hi, step) = match parts.as_slice() {
            [lo, hi] => (*lo, *hi, 0.1),
            [lo, hi, step] => (*lo, *hi, *step),
            _ => bail!("threshold range `{text}` must be lo:hi or lo:hi:step"),
        };
        if step.is_nan() || step <= 0.0 || hi < lo {
            bail!("threshold range `{text}` needs lo <= hi and a positive step");
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|i| ((lo + step * i as f64) * 1e9).round() / 1e9)
            .collect()
    } else {
        text.split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("invalid threshold list `{text}`"))?
    };
    if values.is_empty() || values.iter().any(|v| !(0.0..=1.0).contains(v)) {
        bail!("thresholds must lie in [0, 1]");
    }
    Ok(values)
}
