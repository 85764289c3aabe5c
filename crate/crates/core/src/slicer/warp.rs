//! Layer warping: blends each layer into the next so consecutive layers join
//! end to start and a stack of loops becomes one continuous spiral.

use super::{build_points, resample, Layer, LayerPoint, SlicePlan};

/// Returns a copy of `plan` where layer `i ≥ 1` is replaced by
/// `α·p_i + (1 − α)·p_{i−1}`, with `α` the fraction of the path length of
/// layer `i − 1` covered at that point. Layer 0 is kept as is. Warped layers
/// are open. A layer whose segment count differs from its predecessor is left
/// unwarped.
pub fn warp_layers(plan: &SlicePlan) -> SlicePlan {
    let mut layers = Vec::with_capacity(plan.layers.len());
    for (i, layer) in plan.layers.iter().enumerate() {
        if i == 0 {
            layers.push(layer.clone());
            continue;
        }
        let prev = &plan.layers[i - 1];
        if prev.segments.len() != layer.segments.len() || layer.is_empty() {
            layers.push(layer.clone());
            continue;
        }
        let segments = prev
            .segments
            .iter()
            .zip(&layer.segments)
            .map(|(a, b)| blend(a, prev.closed, b, layer.closed, plan.sampling))
            .collect();
        let mut warped = Layer::new(layer.index, segments, false);
        warped.touches_boundary = layer.touches_boundary;
        layers.push(warped);
    }
    SlicePlan {
        layers,
        h: plan.h,
        source: plan.source.clone(),
        sampling: plan.sampling,
    }
}

fn blend(
    prev: &[LayerPoint],
    prev_closed: bool,
    next: &[LayerPoint],
    next_closed: bool,
    spacing: f64,
) -> Vec<LayerPoint> {
    let (prev, next) = if prev.len() == next.len() {
        (prev.to_vec(), next.to_vec())
    } else {
        let count = prev.len().min(next.len());
        (resample_to(prev, prev_closed, count, spacing), resample_to(next, next_closed, count, spacing))
    };
    let total = prev.last().map_or(0.0, |p| p.lambda);
    let mut pos = Vec::with_capacity(prev.len());
    let mut nrm = Vec::with_capacity(prev.len());
    for (a, b) in prev.iter().zip(&next) {
        let alpha = if total > 0.0 { a.lambda / total } else { 0.0 };
        pos.push(b.p * alpha + a.p * (1.0 - alpha));
        nrm.push((b.n * alpha + a.n * (1.0 - alpha)).try_normalize(1e-12).unwrap_or(b.n));
    }
    build_points(&pos, &nrm, false)
}

/// Resamples a segment to exactly `count` points.
fn resample_to(seg: &[LayerPoint], closed: bool, count: usize, spacing: f64) -> Vec<LayerPoint> {
    let pos: Vec<_> = seg.iter().map(|p| p.p).collect();
    let nrm: Vec<_> = seg.iter().map(|p| p.n).collect();
    let mut length: f64 = pos.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    if closed {
        length += (pos[0] - pos[pos.len() - 1]).norm();
    }
    let intervals = if closed { count } else { count.saturating_sub(1).max(1) };
    // pick a spacing that makes `resample` produce `intervals` steps
    let step = (length / intervals as f64).max(spacing * 1e-9);
    match resample(&pos, &nrm, closed, step * (1.0 + 1e-9)) {
        Some((p, n)) if p.len() == count => build_points(&p, &n, closed),
        _ => seg[..count.min(seg.len())].to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slicer::slice_axisymmetric;

    #[test]
    fn warped_layers_join_end_to_start() {
        let plan = slice_axisymmetric(&[(30.0, 0.0), (30.0, 20.0)], 1.0, 0.5).unwrap();
        let warped = warp_layers(&plan);
        assert_eq!(warped.layers.len(), plan.layers.len());
        assert_eq!(warped.layers[0], plan.layers[0]);
        for i in 1..plan.layers.len() {
            let w = &warped.layers[i].segments[0];
            let prev = &plan.layers[i - 1].segments[0];
            let orig = &plan.layers[i].segments[0];
            assert!(!warped.layers[i].closed);
            assert_eq!(w[0].p, prev[0].p);
            assert_eq!(w[w.len() - 1].p, orig[orig.len() - 1].p);
            let gap = (warped.layers[i - 1].segments[0].last().unwrap().p - w[0].p).norm();
            assert!(gap <= 0.5 + 1e-9, "gap {gap}");
        }
    }

    #[test]
    fn helix_rises_one_h_per_turn() {
        let plan = slice_axisymmetric(&[(30.0, 0.0), (30.0, 20.0)], 1.0, 0.5).unwrap();
        let warped = warp_layers(&plan);
        for i in 1..warped.layers.len() - 1 {
            let a = &warped.layers[i].segments[0];
            let b = &warped.layers[i + 1].segments[0];
            for j in [0, a.len() / 3, a.len() - 1] {
                assert!((b[j].p.z - a[j].p.z - 1.0).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn unequal_counts_are_resampled() {
        let plan = slice_axisymmetric(&[(30.0, 0.0), (20.0, 10.0)], 1.0, 0.5).unwrap();
        let warped = warp_layers(&plan);
        for i in 1..plan.layers.len() {
            let w = &warped.layers[i].segments[0];
            let expect = plan.layers[i - 1].segments[0].len().min(plan.layers[i].segments[0].len());
            assert_eq!(w.len(), expect);
            assert!((w[0].p - plan.layers[i - 1].segments[0][0].p).norm() < 1e-9);
        }
    }
}
