//! Probability signals, point annotations and the signal-conditioning
//! operations applied before pseudo-label fitting.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Action class label, 1-based (`1..=num_classes`).
pub type ClassId = u32;

/// Inclusive snippet interval `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl Interval {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start > end {
            return Err(Error::invalid(format!(
                "interval start {start} > end {end}"
            )));
        }
        Ok(Interval { start, end })
    }

    /// Number of snippets covered (`end - start + 1`).
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, t: usize) -> bool {
        self.start <= t && t <= self.end
    }
}

/// A `length x (num_classes + 1)` grid of probabilities at one pyramid level.
///
/// Columns `0..num_classes` hold class `1..=num_classes`; the last column is
/// the background probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilitySignal {
    video_id: String,
    level: u32,
    length: usize,
    num_classes: usize,
    values: Vec<f64>,
}

impl ProbabilitySignal {
    /// Builds a signal from row-major values, checking shape and range.
    pub fn from_flat(
        video_id: impl Into<String>,
        level: u32,
        length: usize,
        num_classes: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if level == 0 {
            return Err(Error::invalid("pyramid level must be >= 1"));
        }
        if num_classes == 0 {
            return Err(Error::invalid("num_classes must be >= 1"));
        }
        let expected = length * (num_classes + 1);
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: values.len(),
            });
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            let width = num_classes + 1;
            return Err(Error::invalid(format!(
                "probability {v} at (t={}, col={}) is outside [0, 1]",
                i / width,
                i % width
            )));
        }
        Ok(ProbabilitySignal {
            video_id: video_id.into(),
            level,
            length,
            num_classes,
            values,
        })
    }

    /// Builds a signal from nested rows; every row must have `num_classes + 1` entries.
    pub fn from_rows(
        video_id: impl Into<String>,
        level: u32,
        num_classes: usize,
        rows: &[Vec<f64>],
    ) -> Result<Self> {
        let width = num_classes + 1;
        let mut values = Vec::with_capacity(rows.len() * width);
        for row in rows {
            if row.len() != width {
                return Err(Error::DimensionMismatch {
                    expected: width,
                    actual: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::from_flat(video_id, level, rows.len(), num_classes, values)
    }

    /// Same metadata, new values. Values are trusted to stay in range.
    fn with_values(&self, length: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), length * self.width());
        ProbabilitySignal {
            video_id: self.video_id.clone(),
            level: self.level,
            length,
            num_classes: self.num_classes,
            values,
        }
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Row width, `num_classes + 1`.
    pub fn width(&self) -> usize {
        self.num_classes + 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let w = self.width();
        &self.values[t * w..(t + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.width())
    }

    /// Raw column access, `col` in `0..=num_classes`.
    pub fn get(&self, t: usize, col: usize) -> f64 {
        self.values[t * self.width() + col]
    }

    pub fn background(&self, t: usize) -> f64 {
        self.get(t, self.num_classes)
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        self.rows().map(|r| r[col]).collect()
    }

    /// Column of a 1-based class id.
    pub fn class_column(&self, class_id: ClassId) -> Result<Vec<f64>> {
        let col = self.class_index(class_id)?;
        Ok(self.column(col))
    }

    pub fn background_column(&self) -> Vec<f64> {
        self.column(self.num_classes)
    }

    pub(crate) fn class_index(&self, class_id: ClassId) -> Result<usize> {
        if class_id == 0 || class_id as usize > self.num_classes {
            return Err(Error::invalid(format!(
                "class id {class_id} outside 1..={}",
                self.num_classes
            )));
        }
        Ok(class_id as usize - 1)
    }

    /// Rebuilds the grid column by column. The background column goes through
    /// `f` only when `include_background` is set.
    fn map_columns(
        &self,
        length: usize,
        include_background: bool,
        mut f: impl FnMut(&[f64]) -> Vec<f64>,
    ) -> Self {
        let w = self.width();
        let mut out = vec![0.0; length * w];
        for col in 0..w {
            let src = self.column(col);
            let dst = if col < self.num_classes || include_background {
                f(&src)
            } else {
                src
            };
            for (t, v) in dst.into_iter().enumerate() {
                out[t * w + col] = v;
            }
        }
        self.with_values(length, out)
    }
}

/// One annotated snippet (level-1 resolution) with its class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointAnnotation {
    pub video_id: String,
    pub t: usize,
    pub class_id: ClassId,
}

/// Annotation intervals obtained by widening each point by a radius at a given level.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedLabelSet {
    pub entries: Vec<(Interval, ClassId)>,
    pub level: u32,
    pub radius: usize,
    pub downsample_ratio: usize,
}

impl AugmentedLabelSet {
    pub fn covers(&self, t: usize) -> bool {
        self.entries.iter().any(|(iv, _)| iv.contains(t))
    }
}

/// Sorted, unique snippet indices predicted as background.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BackgroundPoints {
    indices: Vec<usize>,
}

impl BackgroundPoints {
    /// Requires strictly increasing indices below `length`.
    pub fn new(indices: Vec<usize>, length: usize) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "background indices must be strictly increasing",
            ));
        }
        if let Some(&last) = indices.last() {
            if last >= length {
                return Err(Error::invalid(format!(
                    "background index {last} outside signal of length {length}"
                )));
            }
        }
        Ok(BackgroundPoints { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, t: usize) -> bool {
        self.indices.binary_search(&t).is_ok()
    }
}

/// Fuses class-specific and class-agnostic scores:
/// `out[t, c] = raw[t, c] * (1 - raw[t, bg])`, background copied.
pub fn fuse_probabilities(raw: &ProbabilitySignal) -> ProbabilitySignal {
    let c = raw.num_classes;
    let mut values = raw.values.clone();
    for row in values.chunks_exact_mut(c + 1) {
        let keep = 1.0 - row[c];
        for v in &mut row[..c] {
            *v *= keep;
        }
    }
    raw.with_values(raw.length, values)
}

/// Normalized Gaussian weights on `-r..=r` with `r = floor(4 sigma + 0.5)`.
pub fn gaussian_smoothing_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!(
            "kernel sigma must be > 0, got {sigma}"
        )));
    }
    let radius = math::floor(4.0 * sigma + 0.5) as isize;
    let mut w: Vec<f64> = (-radius..=radius)
        .map(|k| {
            let z = k as f64 / sigma;
            math::exp(-0.5 * z * z)
        })
        .collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    Ok(w)
}

/// Half-sample symmetric reflection (`d c b a | a b c d | d c b a`).
fn reflect_index(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

/// Convolves one column with a truncated normalized Gaussian, reflecting at the edges.
pub fn smooth_column(column: &[f64], sigma: f64) -> Result<Vec<f64>> {
    let kernel = gaussian_smoothing_kernel(sigma)?;
    let n = column.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let radius = (kernel.len() / 2) as isize;
    Ok((0..n as isize)
        .map(|t| {
            let acc: f64 = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * column[reflect_index(t + k as isize - radius, n)])
                .sum();
            acc.clamp(0.0, 1.0)
        })
        .collect())
}

/// Gaussian-smooths every class column; the background column is left untouched.
pub fn smooth_signal(signal: &ProbabilitySignal, kernel_sigma: f64) -> Result<ProbabilitySignal> {
    gaussian_smoothing_kernel(kernel_sigma)?;
    Ok(signal.map_columns(signal.length, false, |col| {
        smooth_column(col, kernel_sigma).expect("sigma validated above")
    }))
}

/// Linear interpolation of `column` onto `target` uniformly spaced positions.
pub fn interpolate_column(column: &[f64], target: usize) -> Vec<f64> {
    let n = column.len();
    if target == n {
        return column.to_vec();
    }
    let last = n - 1;
    (0..target)
        .map(|i| {
            if i == target - 1 {
                return column[last];
            }
            let num = i * last;
            let den = target - 1;
            let j = num / den;
            let frac = (num % den) as f64 / den as f64;
            let v = column[j] + frac * (column[j + 1] - column[j]);
            v.clamp(0.0, 1.0)
        })
        .collect()
}

/// Raises the temporal resolution of every column to `target_length`.
pub fn upsample_signal(
    signal: &ProbabilitySignal,
    target_length: usize,
) -> Result<ProbabilitySignal> {
    if target_length < signal.length {
        return Err(Error::invalid(format!(
            "target length {target_length} is shorter than signal length {}",
            signal.length
        )));
    }
    if target_length == signal.length {
        return Ok(signal.clone());
    }
    if signal.length < 2 {
        return Err(Error::invalid("upsampling needs a signal of length >= 2"));
    }
    Ok(signal.map_columns(target_length, true, |col| {
        interpolate_column(col, target_length)
    }))
}

/// Widens each annotated point into `[t / theta^(level-1) - r_a, t / theta^(level-1) + r_a]`,
/// clipped to `[0, level_length - 1]`.
pub fn augment_points(
    points: &[PointAnnotation],
    r_a: usize,
    level: u32,
    theta: usize,
    level_length: usize,
) -> Result<AugmentedLabelSet> {
    if theta == 0 {
        return Err(Error::invalid("downsample ratio must be >= 1"));
    }
    if level == 0 {
        return Err(Error::invalid("pyramid level must be >= 1"));
    }
    if level_length == 0 && !points.is_empty() {
        return Err(Error::invalid("cannot augment points on an empty level"));
    }
    let scale = math::level_scale(theta, level);
    let entries = points
        .iter()
        .map(|p| {
            let center = (p.t / scale).min(level_length - 1);
            let iv = Interval {
                start: center.saturating_sub(r_a),
                end: (center + r_a).min(level_length - 1),
            };
            (iv, p.class_id)
        })
        .collect();
    Ok(AugmentedLabelSet {
        entries,
        level,
        radius: r_a,
        downsample_ratio: theta,
    })
}

/// Snippets whose background probability exceeds `threshold` and that lie
/// outside every augmented annotation interval.
pub fn select_background_points(
    signal: &ProbabilitySignal,
    augmented: &AugmentedLabelSet,
    threshold: f64,
) -> Result<BackgroundPoints> {
    if signal.level != augmented.level {
        return Err(Error::invalid(format!(
            "signal level {} differs from augmented label level {}",
            signal.level, augmented.level
        )));
    }
    let mut covered = vec![false; signal.length];
    for (iv, _) in &augmented.entries {
        let end = iv.end.min(signal.length.saturating_sub(1));
        for slot in covered.iter_mut().take(end + 1).skip(iv.start) {
            *slot = true;
        }
    }
    let indices = (0..signal.length)
        .filter(|&t| !covered[t] && signal.background(t) > threshold)
        .collect();
    Ok(BackgroundPoints { indices })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_class(col: &[f64], bg: &[f64]) -> ProbabilitySignal {
        let rows: Vec<Vec<f64>> = col.iter().zip(bg).map(|(&c, &b)| vec![c, b]).collect();
        ProbabilitySignal::from_rows("v", 1, 1, &rows).unwrap()
    }

    fn point(t: usize) -> PointAnnotation {
        PointAnnotation {
            video_id: "v".into(),
            t,
            class_id: 1,
        }
    }

    #[test]
    fn rejects_bad_shapes_and_ranges() {
        assert!(matches!(
            ProbabilitySignal::from_flat("v", 1, 2, 1, vec![0.0; 3]),
            Err(Error::DimensionMismatch {
                expected: 4,
                actual: 3
            })
        ));
        assert!(ProbabilitySignal::from_flat("v", 1, 1, 1, vec![0.5, 1.5]).is_err());
        assert!(ProbabilitySignal::from_flat("v", 1, 1, 1, vec![f64::NAN, 0.5]).is_err());
        assert!(ProbabilitySignal::from_rows("v", 1, 2, &[vec![0.1, 0.2]]).is_err());
    }

    #[test]
    fn fuse_examples() {
        let s = one_class(&[0.8, 0.8, 0.8], &[0.25, 1.0, 0.0]);
        let f = fuse_probabilities(&s);
        assert!((f.get(0, 0) - 0.6).abs() < 1e-15);
        assert_eq!(f.get(1, 0), 0.0);
        assert_eq!(f.get(2, 0), 0.8);
        assert_eq!(f.background_column(), s.background_column());
    }

    #[test]
    fn smoothing_preserves_constants() {
        let s = one_class(&[0.4; 20], &[0.6; 20]);
        let sm = smooth_signal(&s, 3.0).unwrap();
        for t in 0..20 {
            assert!((sm.get(t, 0) - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothing_impulse_matches_direct_sum() {
        let n = 41;
        let mut col = vec![0.0; n];
        col[20] = 1.0;
        let sigma = 2.5;
        let got = smooth_column(&col, sigma).unwrap();
        // direct sum with unnormalized weights, normalized afterwards
        let r = (4.0f64 * sigma + 0.5).floor() as i64;
        let z: f64 = (-r..=r)
            .map(|k| (-0.5 * (k as f64 / sigma).powi(2)).exp())
            .sum();
        for (t, g) in got.iter().enumerate() {
            let d = t as i64 - 20;
            let want = if d.abs() <= r {
                (-0.5 * (d as f64 / sigma).powi(2)).exp() / z
            } else {
                0.0
            };
            assert!((g - want).abs() < 1e-12, "t={t}: {g} vs {want}");
        }
    }

    #[test]
    fn tiny_kernel_is_identity() {
        let col = [0.1, 0.9, 0.3, 0.0, 1.0];
        let got = smooth_column(&col, 0.1).unwrap();
        for (a, b) in got.iter().zip(col.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(smooth_column(&col, 0.0).is_err());
        assert!(smooth_column(&col, -1.0).is_err());
    }

    #[test]
    fn reflection_handles_wide_kernels() {
        // kernel radius far larger than the signal
        let got = smooth_column(&[0.2, 0.8], 10.0).unwrap();
        assert!(got.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!((got[0] - got[1]).abs() < 0.2);
    }

    #[test]
    fn upsample_examples() {
        let s = one_class(&[0.0, 1.0], &[1.0, 0.0]);
        let up = upsample_signal(&s, 3).unwrap();
        assert_eq!(up.class_column(1).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(up.background_column(), vec![1.0, 0.5, 0.0]);
        assert_eq!(upsample_signal(&s, 2).unwrap(), s);
        assert!(upsample_signal(&s, 1).is_err());
    }

    #[test]
    fn augment_examples() {
        let a = augment_points(&[point(10)], 0, 1, 2, 100).unwrap();
        assert_eq!(a.entries[0].0, Interval { start: 10, end: 10 });
        let a = augment_points(&[point(10)], 2, 1, 2, 100).unwrap();
        assert_eq!(a.entries[0].0, Interval { start: 8, end: 12 });
        let a = augment_points(&[point(10)], 2, 2, 2, 50).unwrap();
        assert_eq!(a.entries[0].0, Interval { start: 3, end: 7 });
        let a = augment_points(&[point(1), point(99)], 3, 1, 2, 100).unwrap();
        assert_eq!(a.entries[0].0, Interval { start: 0, end: 4 });
        assert_eq!(a.entries[1].0, Interval { start: 96, end: 99 });
    }

    #[test]
    fn background_examples() {
        let s = one_class(&[0.0; 5], &[1.0; 5]);
        let none = augment_points(&[], 2, 1, 2, 5).unwrap();
        assert_eq!(
            select_background_points(&s, &none, 0.5).unwrap().indices(),
            &[0, 1, 2, 3, 4]
        );

        let s = one_class(&[0.0; 5], &[0.99; 5]);
        let aug = augment_points(&[point(2)], 0, 1, 2, 5).unwrap();
        assert_eq!(
            select_background_points(&s, &aug, 0.5).unwrap().indices(),
            &[0, 1, 3, 4]
        );

        let s = one_class(&[0.0, 0.0], &[0.6, 0.8]);
        let none = augment_points(&[], 0, 1, 2, 2).unwrap();
        assert_eq!(
            select_background_points(&s, &none, 0.7).unwrap().indices(),
            &[1]
        );

        let aug2 = augment_points(&[], 0, 2, 2, 2).unwrap();
        assert!(select_background_points(&s, &aug2, 0.7).is_err());
    }

    #[test]
    fn background_points_validation() {
        assert!(BackgroundPoints::new(vec![1, 1], 5).is_err());
        assert!(BackgroundPoints::new(vec![3, 1], 5).is_err());
        assert!(BackgroundPoints::new(vec![1, 5], 5).is_err());
        let b = BackgroundPoints::new(vec![0, 2, 4], 5).unwrap();
        assert!(b.contains(2) && !b.contains(3));
    }

    fn unit_col(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..=1.0, n)
    }

    proptest! {
        #[test]
        fn fusion_is_monotone_in_background(c in 0.0f64..=1.0, b1 in 0.0f64..=1.0, b2 in 0.0f64..=1.0) {
            let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
            let f_lo = fuse_probabilities(&one_class(&[c], &[lo])).get(0, 0);
            let f_hi = fuse_probabilities(&one_class(&[c], &[hi])).get(0, 0);
            prop_assert!(f_hi <= f_lo);
        }

        #[test]
        fn smoothing_stays_in_unit_range(col in unit_col(1..60), sigma in 0.05f64..8.0) {
            for v in smooth_column(&col, sigma).unwrap() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn upsampling_matches_direct_interpolation(col in unit_col(2..30), extra in 0usize..100) {
            let n = col.len();
            let m = n + extra;
            let up = interpolate_column(&col, m);
            prop_assert_eq!(up.len(), m);
            prop_assert_eq!(up[0], col[0]);
            prop_assert_eq!(up[m - 1], col[n - 1]);
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for (i, v) in up.iter().enumerate() {
                prop_assert!(*v >= lo - 1e-15 && *v <= hi + 1e-15);
                // float-position oracle
                let x = if m == 1 { 0.0 } else { i as f64 * (n - 1) as f64 / (m - 1) as f64 };
                let j = (x.floor() as usize).min(n - 2);
                let w = x - j as f64;
                let want = col[j] * (1.0 - w) + col[j + 1] * w;
                prop_assert!((v - want).abs() < 1e-12);
            }
        }

        #[test]
        fn one_interval_per_point_and_background_disjoint(
            ts in proptest::collection::vec(0usize..80, 0..10),
            r in 0usize..6,
            bg in unit_col(80..81),
        ) {
            let pts: Vec<_> = ts.iter().map(|&t| point(t)).collect();
            let aug = augment_points(&pts, r, 1, 2, 80).unwrap();
            prop_assert_eq!(aug.entries.len(), pts.len());
            let s = one_class(&[0.0; 80], &bg);
            let b = select_background_points(&s, &aug, 0.5).unwrap();
            for &t in b.indices() {
                prop_assert!(!aug.covers(t));
                prop_assert!(bg[t] > 0.5);
            }
            prop_assert!(BackgroundPoints::new(b.indices().to_vec(), 80).is_ok());
        }
    }
}
