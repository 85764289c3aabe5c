//! Synthetic IR frames: a warm torch silhouette, a hot melt disk below it
//! and Gaussian sensor noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{IRFrame, MonitorError};

pub const BACKGROUND_INTENSITY: u16 = 8_000;
pub const TORCH_INTENSITY: u16 = 20_000;
pub const FLAME_INTENSITY: u16 = 60_000;

const SPRITE_WIDTH: usize = 25;
const SPRITE_HEIGHT: usize = 40;
const MARGIN: usize = 2;

/// Torch silhouette tapering toward the nozzle, on a `background` margin.
/// Returns the image and the tip (row, col).
pub fn torch_sprite(intensity: u16, background: u16) -> (IRFrame, (usize, usize)) {
    let mut img = IRFrame::filled(SPRITE_WIDTH, SPRITE_HEIGHT, background, 1.0);
    let center = SPRITE_WIDTH / 2;
    let (top, bottom) = (MARGIN, SPRITE_HEIGHT - 1 - MARGIN);
    for r in top..=bottom {
        let f = (r - top) as f64 / (bottom - top) as f64;
        let half = (10.0 - 7.0 * f).round() as usize;
        for c in center - half..=center + half {
            img.set(r, c, intensity);
        }
    }
    (img, (bottom, center))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub width: usize,
    pub height: usize,
    /// Torch tip (row, col).
    pub tip: (usize, usize),
    /// Flame disk center (row, col) and radius in pixels; radius 0 omits it.
    pub flame_center: (f64, f64),
    pub flame_radius: f64,
    /// Noise standard deviation as a fraction of full scale.
    pub noise_sigma: f64,
    pub px_per_mm: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            width: 160,
            height: 200,
            tip: (80, 80),
            flame_center: (100.0, 80.0),
            flame_radius: 8.0,
            noise_sigma: 0.0,
            px_per_mm: 4.0,
            seed: 0,
        }
    }
}

pub fn synth_frame(params: &SynthParams) -> Result<IRFrame, MonitorError> {
    if !(params.noise_sigma >= 0.0) {
        return Err(MonitorError::InvalidParameter("noise sigma must be non-negative".into()));
    }
    let (sprite, anchor) = torch_sprite(TORCH_INTENSITY, BACKGROUND_INTENSITY);
    let (tr, tc) = params.tip;
    if tr < anchor.0
        || tc < anchor.1
        || tr - anchor.0 + sprite.height > params.height
        || tc - anchor.1 + sprite.width > params.width
    {
        return Err(MonitorError::OutOfFrame(format!("torch tip at {:?}", params.tip)));
    }
    let (fr, fc) = params.flame_center;
    let rad = params.flame_radius;
    if rad > 0.0 && (fr - rad < 0.0 || fc - rad < 0.0 || fr + rad > params.height as f64 - 1.0 || fc + rad > params.width as f64 - 1.0) {
        return Err(MonitorError::OutOfFrame(format!("flame at {:?}", params.flame_center)));
    }
    let mut frame = IRFrame::new(
        params.width,
        params.height,
        vec![BACKGROUND_INTENSITY; params.width * params.height],
        params.px_per_mm,
    )?;
    let (r0, c0) = (tr - anchor.0, tc - anchor.1);
    for r in 0..sprite.height {
        for c in 0..sprite.width {
            frame.set(r0 + r, c0 + c, sprite.get(r, c));
        }
    }
    if rad > 0.0 {
        let (lo_r, hi_r) = ((fr - rad).floor() as usize, (fr + rad).ceil() as usize);
        let (lo_c, hi_c) = ((fc - rad).floor() as usize, (fc + rad).ceil() as usize);
        for r in lo_r..=hi_r {
            for c in lo_c..=hi_c {
                let (dr, dc) = (r as f64 - fr, c as f64 - fc);
                if dr * dr + dc * dc <= rad * rad {
                    frame.set(r, c, FLAME_INTENSITY);
                }
            }
        }
    }
    if params.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let noise = Normal::new(0.0, params.noise_sigma * 65535.0)
            .map_err(|e| MonitorError::InvalidParameter(e.to_string()))?;
        for v in &mut frame.data {
            *v = (*v as f64 + noise.sample(&mut rng)).round().clamp(0.0, 65535.0) as u16;
        }
    }
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monitor::{detect_flame, estimate_standoff, MonitorConfig, TorchTemplate, EDGE_THRESHOLD, FLAME_THRESHOLD};

    #[test]
    fn deterministic_for_a_seed() {
        let p = SynthParams {
            noise_sigma: 0.05,
            seed: 9,
            ..SynthParams::default()
        };
        assert_eq!(synth_frame(&p).unwrap(), synth_frame(&p).unwrap());
        let q = SynthParams { seed: 10, ..p };
        assert_ne!(synth_frame(&p).unwrap(), synth_frame(&q).unwrap());
    }

    #[test]
    fn out_of_frame_geometry() {
        let p = SynthParams {
            tip: (5, 80),
            ..SynthParams::default()
        };
        assert!(matches!(synth_frame(&p), Err(MonitorError::OutOfFrame(_))));
        let p = SynthParams {
            flame_center: (197.0, 80.0),
            ..SynthParams::default()
        };
        assert!(matches!(synth_frame(&p), Err(MonitorError::OutOfFrame(_))));
    }

    #[test]
    fn clean_frame_standoff() {
        let (sprite, anchor) = torch_sprite(TORCH_INTENSITY, BACKGROUND_INTENSITY);
        let t = TorchTemplate::from_image(&sprite, anchor, EDGE_THRESHOLD).unwrap();
        let p = SynthParams {
            tip: (60, 70),
            flame_center: (110.0, 70.0),
            flame_radius: 10.0,
            ..SynthParams::default()
        };
        let frame = synth_frame(&p).unwrap();
        assert_eq!(detect_flame(&frame, FLAME_THRESHOLD).unwrap().top, 100);
        let est = estimate_standoff(&frame, &t, &MonitorConfig::default()).unwrap();
        assert_eq!(est.tip, (60, 70));
        assert_eq!(est.standoff_mm, 10.0);
    }
}
