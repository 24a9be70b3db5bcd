//! Accuracy and throughput metrics: confusion-matrix mIoU over frame
//! sequences, the GOP average-time model, and the one-row-per-run CSV shape.

use super::{BenchError, LabelMap};

/// Per-class intersection-over-union and its mean.
///
/// A class absent from both predictions and ground truth has no defined IoU
/// and is excluded from the mean.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyMetrics {
    pub per_class_iou: Vec<Option<f64>>,
    pub miou: f64,
}

/// Accumulate a confusion matrix over all frames and reduce it to IoU.
pub fn evaluate_miou(
    preds: &[LabelMap],
    gts: &[LabelMap],
    num_classes: usize,
) -> Result<AccuracyMetrics, BenchError> {
    if preds.len() != gts.len() {
        return Err(BenchError::ShapeMismatch {
            frame: preds.len().min(gts.len()),
        });
    }
    let mut confusion = vec![0u64; num_classes * num_classes];
    for (frame, (pred, gt)) in preds.iter().zip(gts).enumerate() {
        if pred.width != gt.width || pred.height != gt.height {
            return Err(BenchError::ShapeMismatch { frame });
        }
        for (&p, &g) in pred.labels.iter().zip(&gt.labels) {
            if p as usize >= num_classes {
                return Err(BenchError::LabelOutOfRange {
                    frame,
                    label: p,
                    classes: num_classes,
                });
            }
            if g as usize >= num_classes {
                return Err(BenchError::LabelOutOfRange {
                    frame,
                    label: g,
                    classes: num_classes,
                });
            }
            confusion[g as usize * num_classes + p as usize] += 1;
        }
    }

    let mut per_class_iou = Vec::with_capacity(num_classes);
    let mut sum = 0.0;
    let mut counted = 0usize;
    for c in 0..num_classes {
        let tp = confusion[c * num_classes + c];
        let gt_total: u64 = (0..num_classes)
            .map(|p| confusion[c * num_classes + p])
            .sum();
        let pred_total: u64 = (0..num_classes)
            .map(|g| confusion[g * num_classes + c])
            .sum();
        let union = gt_total + pred_total - tp;
        if union == 0 {
            per_class_iou.push(None);
        } else {
            let iou = tp as f64 / union as f64;
            per_class_iou.push(Some(iou));
            sum += iou;
            counted += 1;
        }
    }
    let miou = if counted == 0 {
        0.0
    } else {
        sum / counted as f64
    };
    Ok(AccuracyMetrics {
        per_class_iou,
        miou,
    })
}

/// Average per-frame time of a GOP-`g` schedule:
/// `T_avg = T_I / g + (1 - 1/g) * T_P`.
pub fn predict_avg_time(g: usize, t_i_ms: f64, t_p_ms: f64) -> Result<f64, BenchError> {
    if g < 1 {
        return Err(BenchError::InvalidGop);
    }
    if t_i_ms < 0.0 || t_p_ms < 0.0 {
        return Err(BenchError::NegativeTime);
    }
    let g = g as f64;
    Ok(t_i_ms / g + (1.0 - 1.0 / g) * t_p_ms)
}

pub const CSV_HEADER: &str = "modules,gop,alpha,thr_rgc,thr_rgfs,miou,fps,keyframe_pct";

/// One benchmark run, in the CSV row shape.
#[derive(Debug, Clone)]
pub struct RunRow {
    pub modules: String,
    pub gop: usize,
    pub alpha: f32,
    pub thr_rgc: u32,
    pub thr_rgfs: f64,
    pub miou: Option<f64>,
    pub fps: f64,
    pub keyframe_pct: f64,
}

impl RunRow {
    pub fn csv_line(&self) -> String {
        let miou = self.miou.map(|v| format!("{v:.6}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{:.3},{:.2}",
            self.modules,
            self.gop,
            self.alpha,
            self.thr_rgc,
            self.thr_rgfs,
            miou,
            self.fps,
            self.keyframe_pct
        )
    }

    pub fn pretty(&self) -> String {
        let miou = self
            .miou
            .map(|v| format!("{:.2}%", 100.0 * v))
            .unwrap_or_else(|| "n/a".into());
        format!(
            "modules={:<12} g={:<3} alpha={:<5} mIoU={:<8} fps={:<8.1} keyframes={:.1}%",
            self.modules, self.gop, self.alpha, miou, self.fps, self.keyframe_pct
        )
    }
}
