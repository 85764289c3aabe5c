use waam_core::monitor::{
    estimate_standoff, match_template, synth_frame, torch_sprite, MonitorConfig, SynthParams, TorchTemplate,
    BACKGROUND_INTENSITY, EDGE_THRESHOLD, TORCH_INTENSITY,
};

fn template() -> TorchTemplate {
    let (sprite, anchor) = torch_sprite(TORCH_INTENSITY, BACKGROUND_INTENSITY);
    TorchTemplate::from_image(&sprite, anchor, EDGE_THRESHOLD).unwrap()
}

#[test]
fn torch_located_through_five_percent_noise() {
    let t = template();
    let mut hits = 0;
    for trial in 0..100u64 {
        let tip = (50 + (trial as usize * 7) % 60, 30 + (trial as usize * 13) % 100);
        let frame = synth_frame(&SynthParams {
            tip,
            flame_center: (tip.0 as f64 + 30.0, tip.1 as f64),
            noise_sigma: 0.05,
            seed: trial,
            ..SynthParams::default()
        })
        .unwrap();
        let m = match_template(&frame, &t, EDGE_THRESHOLD).unwrap();
        let found = (m.row + t.anchor.0, m.col + t.anchor.1);
        if found.0.abs_diff(tip.0) <= 2 && found.1.abs_diff(tip.1) <= 2 {
            hits += 1;
        }
    }
    println!("located {hits}/100");
    assert!(hits >= 95, "only {hits}/100 within 2 px");
}

#[test]
fn growing_standoff_sequence() {
    let t = template();
    let px_per_mm = 4.0;
    let mut previous = f64::NEG_INFINITY;
    for k in 0..200 {
        let truth = 5.0 + 10.0 * k as f64 / 199.0;
        let top = 60.0 + truth * px_per_mm;
        let radius = 8.0;
        let frame = synth_frame(&SynthParams {
            tip: (60, 80),
            flame_center: (top + radius, 80.0),
            flame_radius: radius,
            noise_sigma: 0.02,
            px_per_mm,
            seed: 1000 + k,
            ..SynthParams::default()
        })
        .unwrap();
        let est = estimate_standoff(&frame, &t, &MonitorConfig::default()).unwrap();
        assert!((est.standoff_mm - truth).abs() <= 0.5, "frame {k}: {} vs {truth}", est.standoff_mm);
        assert!(est.standoff_mm >= previous - 0.5);
        previous = previous.max(est.standoff_mm);
    }
}
