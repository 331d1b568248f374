//! JSON/CSV file formats and file-system helpers.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use adm_core::adm::PseudoLabel;
use adm_core::decoder::Proposal;
use adm_core::eval::{EvalReport, GroundTruthInstance, PseudoLabelQuality};
use adm_core::{ClassId, PointAnnotation, ProbabilitySignal};
use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignalFile {
    pub video_id: String,
    pub level: u32,
    pub length: usize,
    pub num_classes: usize,
    pub values: Vec<Vec<f64>>,
}

impl SignalFile {
    pub fn from_signal(s: &ProbabilitySignal) -> Self {
        SignalFile {
            video_id: s.video_id().to_string(),
            level: s.level(),
            length: s.len(),
            num_classes: s.num_classes(),
            values: s.rows().map(<[f64]>::to_vec).collect(),
        }
    }

    pub fn into_signal(self) -> Result<ProbabilitySignal> {
        if self.values.len() != self.length {
            bail!(
                "signal {} declares length {} but has {} rows",
                self.video_id,
                self.length,
                self.values.len()
            );
        }
        let id = self.video_id.clone();
        ProbabilitySignal::from_rows(self.video_id, self.level, self.num_classes, &self.values)
            .with_context(|| format!("invalid signal for video {id}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub video_id: String,
    pub t: usize,
    pub class_id: ClassId,
}

impl From<&PointAnnotation> for AnnotationRecord {
    fn from(p: &PointAnnotation) -> Self {
        AnnotationRecord {
            video_id: p.video_id.clone(),
            t: p.t,
            class_id: p.class_id,
        }
    }
}

impl From<AnnotationRecord> for PointAnnotation {
    fn from(r: AnnotationRecord) -> Self {
        PointAnnotation {
            video_id: r.video_id,
            t: r.t,
            class_id: r.class_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub video_id: String,
    pub start: usize,
    pub end: usize,
    pub class_id: ClassId,
}

impl From<&GroundTruthInstance> for GroundTruthRecord {
    fn from(g: &GroundTruthInstance) -> Self {
        GroundTruthRecord {
            video_id: g.video_id.clone(),
            start: g.start,
            end: g.end,
            class_id: g.class_id,
        }
    }
}

impl GroundTruthRecord {
    pub fn into_instance(self) -> Result<GroundTruthInstance> {
        if self.start > self.end {
            bail!(
                "ground truth in {} has start {} > end {}",
                self.video_id,
                self.start,
                self.end
            );
        }
        Ok(GroundTruthInstance {
            video_id: self.video_id,
            start: self.start,
            end: self.end,
            class_id: self.class_id,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabelRecord {
    pub t: usize,
    pub t_star: usize,
    pub sigma: f64,
    pub omega: f64,
    pub delta: f64,
    pub start: usize,
    pub end: usize,
    pub class_id: ClassId,
    pub degenerate: bool,
}

impl From<&PseudoLabel> for PseudoLabelRecord {
    fn from(l: &PseudoLabel) -> Self {
        PseudoLabelRecord {
            t: l.t,
            t_star: l.t_star,
            sigma: l.sigma,
            omega: l.omega,
            delta: l.delta,
            start: l.interval.start,
            end: l.interval.end,
            class_id: l.class_id,
            degenerate: l.degenerate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoPseudoLabels {
    pub video_id: String,
    pub labels: Vec<PseudoLabelRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalRecord {
    pub start: usize,
    pub end: usize,
    pub class_id: ClassId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoProposals {
    pub video_id: String,
    pub proposals: Vec<ProposalRecord>,
}

impl VideoProposals {
    pub fn from_proposals(video_id: &str, proposals: &[Proposal]) -> Self {
        VideoProposals {
            video_id: video_id.to_string(),
            proposals: proposals
                .iter()
                .map(|p| ProposalRecord {
                    start: p.start,
                    end: p.end,
                    class_id: p.class_id,
                    score: p.score,
                })
                .collect(),
        }
    }

    pub fn to_proposals(&self) -> Vec<Proposal> {
        self.proposals
            .iter()
            .map(|r| Proposal {
                video_id: self.video_id.clone(),
                start: r.start,
                end: r.end,
                class_id: r.class_id,
                score: r.score,
            })
            .collect()
    }
}

impl VideoPseudoLabels {
    /// Pseudo-labels as unit-score proposals.
    pub fn to_proposals(&self) -> Vec<Proposal> {
        self.labels
            .iter()
            .map(|l| Proposal {
                video_id: self.video_id.clone(),
                start: l.start,
                end: l.end,
                class_id: l.class_id,
                score: 1.0,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApRecord {
    pub class_id: ClassId,
    pub tiou: f64,
    pub ap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapRecord {
    pub tiou: f64,
    pub map: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityRecord {
    pub alpha: f64,
    pub mean_tiou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReportFile {
    pub threshold_range: Vec<f64>,
    pub ap: Vec<ApRecord>,
    pub map_at: Vec<MapRecord>,
    pub average_map: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pseudo_label_quality: Option<QualityRecord>,
}

impl EvalReportFile {
    pub fn new(report: &EvalReport, quality: Option<&PseudoLabelQuality>) -> Self {
        let mut ap = Vec::new();
        for (i, &thr) in report.thresholds.iter().enumerate() {
            for (j, &class_id) in report.classes.iter().enumerate() {
                ap.push(ApRecord {
                    class_id,
                    tiou: thr,
                    ap: report.ap[i][j],
                });
            }
        }
        EvalReportFile {
            threshold_range: report.thresholds.clone(),
            ap,
            map_at: report
                .thresholds
                .iter()
                .zip(&report.map_at)
                .map(|(&tiou, &map)| MapRecord { tiou, map })
                .collect(),
            average_map: report.average_map,
            pseudo_label_quality: quality.map(|q| QualityRecord {
                alpha: q.alpha,
                mean_tiou: q.mean_tiou,
            }),
        }
    }
}

/// Report table: one row per tIoU, one column per class, then mAP. Values in percent.
pub fn report_csv(report: &EvalReport) -> String {
    let mut out = String::from("tiou");
    for c in &report.classes {
        out.push_str(&format!(",class_{c}"));
    }
    out.push_str(",mAP\n");
    for (i, thr) in report.thresholds.iter().enumerate() {
        out.push_str(&format!("{thr:.2}"));
        for v in &report.ap[i] {
            out.push_str(&format!(",{:.2}", 100.0 * v));
        }
        out.push_str(&format!(",{:.2}\n", 100.0 * report.map_at[i]));
    }
    out
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("malformed JSON in {}", path.display()))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .with_context(|| format!("{} is not a file path", path.display()))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f =
            fs::File::create(&tmp).with_context(|| format!("cannot create {}", tmp.display()))?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("cannot move {} into place", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json(value)?.as_bytes())
}

/// Loads every `*.json` signal file in `dir`, grouped by video and sorted by level.
pub fn read_signal_dir(dir: &Path) -> Result<BTreeMap<String, Vec<ProbabilitySignal>>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot list signal directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    let mut videos: BTreeMap<String, Vec<ProbabilitySignal>> = BTreeMap::new();
    for path in paths {
        let file: SignalFile = read_json(&path)?;
        let signal = file
            .into_signal()
            .with_context(|| format!("in {}", path.display()))?;
        videos
            .entry(signal.video_id().to_string())
            .or_default()
            .push(signal);
    }
    for (id, levels) in videos.iter_mut() {
        levels.sort_by_key(|s| s.level());
        if levels.windows(2).any(|w| w[0].level() == w[1].level()) {
            bail!("video {id} has duplicate pyramid levels");
        }
    }
    Ok(videos)
}

pub fn signal_file_name(video_id: &str, level: u32) -> String {
    format!("{video_id}_l{level}.json")
}
