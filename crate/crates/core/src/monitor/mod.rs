//! IR-camera process monitoring: find the torch by edge-template matching,
//! find the hot melt region by thresholded blob labeling, and turn the gap
//! between them into a standoff length that picks the next layer from a
//! densely sliced plan.

mod pgm;
mod synth;

use thiserror::Error;

use crate::slicer::SlicePlan;

pub use pgm::{read_frame_pgm, read_template, write_frame_pgm, write_template};
pub use synth::{synth_frame, torch_sprite, SynthParams, TORCH_INTENSITY, BACKGROUND_INTENSITY, FLAME_INTENSITY};

/// Gradient magnitude above which a pixel counts as an edge.
pub const EDGE_THRESHOLD: f64 = 30_000.0;
/// Intensity above which a pixel belongs to the flame.
pub const FLAME_THRESHOLD: u16 = 40_000;
pub const MIN_FLAME_AREA: usize = 25;
pub const MIN_MATCH_SCORE: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonitorError {
    #[error("frame data has {found} pixels, expected {expected}")]
    FrameSize { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("template ({tw}×{th}) is larger than the frame ({fw}×{fh})")]
    TemplateTooLarge { tw: usize, th: usize, fw: usize, fh: usize },
    #[error("template has no edge pixels")]
    EmptyTemplate,
    #[error("torch not found (best score {0:.3})")]
    TorchNotFound(f64),
    #[error("no flame above threshold")]
    FlameNotFound,
    #[error("measured height {0:.3} mm is beyond the top of the plan")]
    PlanExhausted(f64),
    #[error("geometry does not fit in the frame: {0}")]
    OutOfFrame(String),
    #[error("image file: {0}")]
    Image(String),
}

/// 16-bit intensity raster, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct IRFrame {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u16>,
    pub px_per_mm: f64,
}

impl IRFrame {
    pub fn new(width: usize, height: usize, data: Vec<u16>, px_per_mm: f64) -> Result<Self, MonitorError> {
        if data.len() != width * height {
            return Err(MonitorError::FrameSize {
                expected: width * height,
                found: data.len(),
            });
        }
        if !(px_per_mm > 0.0 && px_per_mm.is_finite()) {
            return Err(MonitorError::InvalidParameter("px_per_mm must be positive".into()));
        }
        Ok(IRFrame {
            width,
            height,
            data,
            px_per_mm,
        })
    }

    pub fn filled(width: usize, height: usize, value: u16, px_per_mm: f64) -> Self {
        IRFrame {
            width,
            height,
            data: vec![value; width * height],
            px_per_mm,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: u16) {
        self.data[row * self.width + col] = value;
    }
}

/// 3×3 Sobel gradient magnitude; border pixels are zero.
pub fn gradient_magnitude(frame: &IRFrame) -> Vec<f64> {
    let (w, h) = (frame.width, frame.height);
    let mut out = vec![0.0; w * h];
    if w < 3 || h < 3 {
        return out;
    }
    let px = |r: usize, c: usize| frame.data[r * w + c] as f64;
    for r in 1..h - 1 {
        for c in 1..w - 1 {
            let gx = (px(r - 1, c + 1) + 2.0 * px(r, c + 1) + px(r + 1, c + 1))
                - (px(r - 1, c - 1) + 2.0 * px(r, c - 1) + px(r + 1, c - 1));
            let gy = (px(r + 1, c - 1) + 2.0 * px(r + 1, c) + px(r + 1, c + 1))
                - (px(r - 1, c - 1) + 2.0 * px(r - 1, c) + px(r - 1, c + 1));
            out[r * w + c] = gx.hypot(gy);
        }
    }
    out
}

/// Binary edge map of a frame.
pub fn edge_map(frame: &IRFrame, threshold: f64) -> Vec<bool> {
    gradient_magnitude(frame).into_iter().map(|g| g > threshold).collect()
}

/// Binary edge bitmap of the torch with the tip position.
#[derive(Debug, Clone, PartialEq)]
pub struct TorchTemplate {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
    /// Torch tip as (row, col) inside the bitmap.
    pub anchor: (usize, usize),
}

impl TorchTemplate {
    pub fn new(width: usize, height: usize, bits: Vec<bool>, anchor: (usize, usize)) -> Result<Self, MonitorError> {
        if bits.len() != width * height {
            return Err(MonitorError::FrameSize {
                expected: width * height,
                found: bits.len(),
            });
        }
        if !bits.iter().any(|&b| b) {
            return Err(MonitorError::EmptyTemplate);
        }
        if anchor.0 >= height || anchor.1 >= width {
            return Err(MonitorError::InvalidParameter("anchor outside the template".into()));
        }
        Ok(TorchTemplate {
            width,
            height,
            bits,
            anchor,
        })
    }

    /// Edge template of a rendered torch image.
    pub fn from_image(image: &IRFrame, anchor: (usize, usize), edge_threshold: f64) -> Result<Self, MonitorError> {
        TorchTemplate::new(image.width, image.height, edge_map(image, edge_threshold), anchor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemplateMatch {
    /// Top-left corner of the best window (row, col).
    pub row: usize,
    pub col: usize,
    pub score: f64,
}

/// Normalized cross-correlation of the template against the binary edge
/// map of `frame` at every placement. Flat windows score 0. Ties go to the
/// smallest row, then column.
pub fn match_template(frame: &IRFrame, template: &TorchTemplate, edge_threshold: f64) -> Result<TemplateMatch, MonitorError> {
    let (fw, fh, tw, th) = (frame.width, frame.height, template.width, template.height);
    if tw > fw || th > fh {
        return Err(MonitorError::TemplateTooLarge { tw, th, fw, fh });
    }
    let edges: Vec<f64> = edge_map(frame, edge_threshold).into_iter().map(|b| f64::from(u8::from(b))).collect();
    // integral image of the edge map (binary, so it doubles as the squared sum)
    let iw = fw + 1;
    let mut integral = vec![0.0; iw * (fh + 1)];
    for r in 0..fh {
        let mut row_sum = 0.0;
        for c in 0..fw {
            row_sum += edges[r * fw + c];
            integral[(r + 1) * iw + c + 1] = integral[r * iw + c + 1] + row_sum;
        }
    }
    let window_sum = |r: usize, c: usize| {
        integral[(r + th) * iw + c + tw] - integral[r * iw + c + tw] - integral[(r + th) * iw + c] + integral[r * iw + c]
    };
    let set: Vec<usize> = (0..tw * th).filter(|&i| template.bits[i]).map(|i| (i / tw) * fw + i % tw).collect();
    let n = (tw * th) as f64;
    let k = set.len() as f64;
    let t_var = k - k * k / n;
    let mut best = TemplateMatch {
        row: 0,
        col: 0,
        score: f64::NEG_INFINITY,
    };
    for r in 0..=fh - th {
        for c in 0..=fw - tw {
            let base = r * fw + c;
            let cross: f64 = set.iter().map(|&o| edges[base + o]).sum();
            let s = window_sum(r, c);
            let e_var = s - s * s / n;
            let den = (t_var * e_var).sqrt();
            let score = if den > 1e-12 { (cross - k * s / n) / den } else { 0.0 };
            if score > best.score {
                best = TemplateMatch { row: r, col: c, score };
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blob {
    pub area: usize,
    /// (row, col) mean of member pixels.
    pub centroid: (f64, f64),
    pub top: usize,
    pub left: usize,
    pub bottom: usize,
    pub right: usize,
}

/// 8-connected components of a binary image, largest first; equal areas
/// keep scan order.
pub fn label_components(mask: &[bool], width: usize, height: usize) -> Vec<Blob> {
    let mut seen = vec![false; mask.len()];
    let mut blobs = Vec::new();
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (mut area, mut sr, mut sc) = (0usize, 0.0, 0.0);
        let (mut top, mut left, mut bottom, mut right) = (usize::MAX, usize::MAX, 0, 0);
        while let Some(i) = stack.pop() {
            let (r, c) = (i / width, i % width);
            area += 1;
            sr += r as f64;
            sc += c as f64;
            top = top.min(r);
            bottom = bottom.max(r);
            left = left.min(c);
            right = right.max(c);
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                    if nr < 0 || nc < 0 || nr >= height as i64 || nc >= width as i64 {
                        continue;
                    }
                    let j = nr as usize * width + nc as usize;
                    if mask[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        blobs.push(Blob {
            area,
            centroid: (sr / area as f64, sc / area as f64),
            top,
            left,
            bottom,
            right,
        });
    }
    blobs.sort_by_key(|b| std::cmp::Reverse(b.area));
    blobs
}

/// Largest 8-connected region above `threshold` with at least
/// [`MIN_FLAME_AREA`] pixels.
pub fn detect_flame(frame: &IRFrame, threshold: u16) -> Option<Blob> {
    let mask: Vec<bool> = frame.data.iter().map(|&v| v > threshold).collect();
    label_components(&mask, frame.width, frame.height)
        .into_iter()
        .next()
        .filter(|b| b.area >= MIN_FLAME_AREA)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorConfig {
    pub edge_threshold: f64,
    pub flame_threshold: u16,
    pub min_score: f64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig {
            edge_threshold: EDGE_THRESHOLD,
            flame_threshold: FLAME_THRESHOLD,
            min_score: MIN_MATCH_SCORE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandoffEstimate {
    pub standoff_mm: f64,
    pub torch: TemplateMatch,
    /// Torch tip (row, col) in the frame.
    pub tip: (usize, usize),
    pub flame: Blob,
}

/// Vertical distance from the torch tip down to the top of the flame, in mm.
pub fn estimate_standoff(
    frame: &IRFrame,
    template: &TorchTemplate,
    config: &MonitorConfig,
) -> Result<StandoffEstimate, MonitorError> {
    let torch = match_template(frame, template, config.edge_threshold)?;
    if torch.score < config.min_score {
        return Err(MonitorError::TorchNotFound(torch.score));
    }
    let flame = detect_flame(frame, config.flame_threshold).ok_or(MonitorError::FlameNotFound)?;
    let tip = (torch.row + template.anchor.0, torch.col + template.anchor.1);
    Ok(StandoffEstimate {
        standoff_mm: (flame.top as f64 - tip.0 as f64) / frame.px_per_mm,
        torch,
        tip,
        flame,
    })
}

/// Index of the dense-plan layer to print next: the first layer after
/// `current` whose height `k·h` is nearest `measured + nominal`. Ties go to
/// the lower index.
pub fn select_slice(
    dense_plan: &SlicePlan,
    measured_height: f64,
    nominal_height: f64,
    current: Option<usize>,
) -> Result<usize, MonitorError> {
    if !(measured_height >= 0.0) {
        return Err(MonitorError::InvalidParameter("measured height must be non-negative".into()));
    }
    let h = dense_plan.h;
    let last = dense_plan.layers.len().checked_sub(1).ok_or(MonitorError::PlanExhausted(measured_height))?;
    if measured_height > last as f64 * h {
        return Err(MonitorError::PlanExhausted(measured_height));
    }
    let first = current.map_or(0, |c| c + 1);
    if first > last {
        return Err(MonitorError::PlanExhausted(measured_height));
    }
    let target = measured_height + nominal_height;
    let mut best = first;
    let mut best_gap = (first as f64 * h - target).abs();
    for k in first + 1..=last {
        let gap = (k as f64 * h - target).abs();
        if gap < best_gap - 1e-9 {
            best = k;
            best_gap = gap;
        }
        if k as f64 * h > target + h {
            break;
        }
    }
    Ok(best)
}
