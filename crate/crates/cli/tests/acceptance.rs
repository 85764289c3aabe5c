//! Acceptance checks. Runs without the libtest harness so every criterion
//! prints one PASS/FAIL line on each `cargo test`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use waam_core::emitter::{emit, emit_ir, motion_statement_count, parse_script, Dialect, DeviceKind, Move, Script, Statement};
use waam_core::geometry::{axis_rotation, write_stl_binary, Point3, Vec3};
use waam_core::metrology::{evaluate, icp_register, sample_mesh, EvalConfig, IcpConfig, PointCloud, RigidTransform};
use waam_core::monitor::{
    estimate_standoff, select_slice, synth_frame, torch_sprite, IRFrame, MonitorConfig, SynthParams, TorchTemplate,
    BACKGROUND_INTENSITY, EDGE_THRESHOLD, TORCH_INTENSITY,
};
use waam_core::planner::{plan_print, segment_speed, MaterialTable, PlanOptions, Primitive};
use waam_core::positioner::{
    align_directions, base_orientation, gravity_align, smooth_trajectory, AlignConfig, JointLimits, PositionerState,
    PositionerTrajectory,
};
use waam_core::shapes::{self, BladeParams};
use waam_core::slicer::{slice_axisymmetric, slice_surface, warp_layers, SliceConfig, SlicePlan};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: f64) -> Result<(), String> {
    check(elapsed.as_secs_f64() < limit, || format!("took {:.2} s, limit {limit} s", elapsed.as_secs_f64()))
}

fn slice_wall(h: f64) -> Result<SlicePlan, String> {
    let mesh = shapes::wall(100.0, 50.0, 1.0);
    slice_surface(&mesh, &SliceConfig { h, ..SliceConfig::default() }).map_err(|e| e.to_string())
}

fn wall_layers() -> Outcome {
    let start = Instant::now();
    let plan = slice_wall(1.0)?;
    let elapsed = start.elapsed();
    let n = plan.layers.len();
    check((n as i64 - 50).abs() <= 1, || format!("{n} layers"))?;
    let mut worst: f64 = 0.0;
    for (k, layer) in plan.layers.iter().enumerate() {
        for p in layer.points() {
            worst = worst.max((p.p.z - k as f64 * plan.h).abs());
        }
    }
    check(worst <= 0.3, || format!("z-band deviation {worst:.4} mm"))?;
    within(elapsed, 5.0)?;
    Ok(format!("{n} layers, max |z - k·h| {worst:.2e} mm, {:.2} s", elapsed.as_secs_f64()))
}

fn sphere_cap() -> Outcome {
    let r = 50.0;
    let mesh = shapes::sphere_zone(r, 30.0, 1.0);
    let plan = slice_surface(&mesh, &SliceConfig::default()).map_err(|e| e.to_string())?;
    check(plan.layers.len() > 10, || format!("only {} layers", plan.layers.len()))?;
    let (mut radius_err, mut ortho): (f64, f64) = (0.0, 0.0);
    for (k, layer) in plan.layers.iter().enumerate() {
        // arc length k·h along the meridian from the equator
        let lat = k as f64 * plan.h / r;
        let expect = r * lat.cos();
        for p in layer.points() {
            let radial = (p.p.x * p.p.x + p.p.y * p.p.y).sqrt();
            radius_err = radius_err.max((radial - expect).abs());
            ortho = ortho.max(p.a.dot(&p.t).abs()).max(p.a.dot(&p.n).abs());
        }
    }
    check(radius_err <= 0.5, || format!("circle radius off by {radius_err:.4} mm"))?;
    check(ortho <= 1e-9, || format!("a·t or a·n = {ortho:e}"))?;
    Ok(format!(
        "{} layers, max radius error {radius_err:.3} mm, max |a·t|,|a·n| {ortho:.1e}",
        plan.layers.len()
    ))
}

fn dense_vs_coarse() -> Outcome {
    let coarse = slice_wall(1.0)?;
    let dense = slice_wall(0.1)?;
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for (k, layer) in coarse.layers.iter().enumerate() {
        let d = dense.layers.get(10 * k).ok_or_else(|| format!("dense plan has no layer {}", 10 * k))?;
        check(layer.point_count() == d.point_count(), || format!("layer {k}: point counts differ"))?;
        for (p, q) in layer.points().zip(d.points()) {
            worst = worst.max((p.p - q.p).norm());
            compared += 1;
        }
    }
    check(worst <= 0.3, || format!("max pointwise gap {worst:.4} mm"))?;
    Ok(format!("{compared} point pairs, max gap {worst:.2e} mm"))
}

fn max_gap(plan: &SlicePlan) -> Result<f64, String> {
    let mut gap: f64 = 0.0;
    for pair in plan.layers.windows(2) {
        let end = pair[0].segments[0].last().ok_or("empty layer")?.p;
        let start = pair[1].segments[0].first().ok_or("empty layer")?.p;
        gap = gap.max((end - start).norm());
    }
    Ok(gap)
}

fn warp_continuity() -> Outcome {
    let sampling = SliceConfig::default().spacing;
    // faceted mesh, as the CLI slices it
    let mesh = shapes::cylinder(20.0, 20.0, 252, 20);
    let plan = slice_surface(&mesh, &SliceConfig::default()).map_err(|e| e.to_string())?;
    check(plan.layers.iter().all(|l| l.closed), || "cylinder layers are not closed loops".into())?;
    let mesh_gap = max_gap(&warp_layers(&plan))?;
    check(mesh_gap <= sampling + 1e-9, || format!("mesh spiral endpoint gap {mesh_gap:.4} mm"))?;

    // exact surface of revolution for the helix rise
    let plan = slice_axisymmetric(&[(20.0, 0.0), (20.0, 20.0)], 1.0, sampling).map_err(|e| e.to_string())?;
    let warped = warp_layers(&plan);
    let gap = max_gap(&warped)?;
    check(gap <= sampling + 1e-9, || format!("endpoint gap {gap:.4} mm"))?;
    let mut rise_err: f64 = 0.0;
    for i in 1..warped.layers.len() - 1 {
        let a = &warped.layers[i].segments[0];
        let b = &warped.layers[i + 1].segments[0];
        check(a.len() == b.len(), || format!("turns {i} and {} differ in length", i + 1))?;
        for (p, q) in a.iter().zip(b) {
            rise_err = rise_err.max((q.p.z - p.p.z - plan.h).abs());
        }
    }
    check(rise_err <= 1e-6, || format!("rise per turn off by {rise_err:e} mm"))?;
    Ok(format!(
        "mesh spiral gap {mesh_gap:.3} mm; revolved spiral {} turns, gap {gap:.3} mm, rise error {rise_err:.1e} mm",
        warped.layers.len()
    ))
}

fn positioner_ik() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let a = loop {
            let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let n = v.norm();
            if n > 1e-3 && n <= 1.0 {
                break v / n;
            }
        };
        for q in gravity_align(&a).map_err(|e| e.to_string())? {
            // R(z, q2)·R(y, q1)·z
            let forward = axis_rotation(&Vec3::z(), q.q2) * axis_rotation(&Vec3::y(), q.q1) * Vec3::z();
            worst = worst.max((forward - a).norm());
            worst = worst.max((base_orientation(&q) * a - Vec3::z()).norm());
        }
    }
    check(worst <= 1e-9, || format!("IK residual {worst:e}"))?;
    for trial in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + trial);
        let n = rng.random_range(10..60);
        let states = (0..n).map(|_| PositionerState::new(-0.4, rng.random_range(-3.0..3.0))).collect();
        let mut traj = PositionerTrajectory::new(states);
        for f in &mut traj.singular_flags {
            *f = rng.random_bool(0.2);
        }
        let out = smooth_trajectory(&traj, 5, &JointLimits::default()).map_err(|e| e.to_string())?;
        check(out.max_q2_step() <= traj.max_q2_step() + 1e-12, || format!("trial {trial}: smoothing steepened q2"))?;
    }
    let vertical = align_directions(&vec![Vec3::z(); 40], &AlignConfig::default()).map_err(|e| e.to_string())?;
    check(vertical.singular_flags.iter().all(|&f| f), || "vertical waypoints not flagged singular".into())?;
    let q2 = vertical.states[0].q2;
    check(vertical.states.iter().all(|q| q.q2 == q2 && q.q1 == 0.0), || "q2 not held on vertical run".into())?;
    Ok(format!("10^4 directions, max residual {worst:.1e}; 200 smoothing trials; vertical hold"))
}

fn speed_coordination() -> Outcome {
    let table = MaterialTable::builtin();
    let aluminum = table.get("aluminum").map_err(|e| e.to_string())?;
    check(aluminum.speed == 9.0, || format!("aluminum v_r {}", aluminum.speed))?;
    let exact = segment_speed(5.0, 5.0, aluminum.speed);
    check(exact == 9.0, || format!("v1 = {exact} when d1 = d_r"))?;
    let plan = slice_surface(&shapes::blade(&BladeParams::default()), &SliceConfig::default()).map_err(|e| e.to_string())?;
    let (program, _) = plan_print(&plan, aluminum, &PlanOptions { d_r: 5.0, ..PlanOptions::default() })
        .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut stationary = 0;
    for s in &program.segments {
        if s.world_distance == 0.0 {
            // torch holds still while only the positioner turns
            stationary += 1;
            check(s.speed == program.v_r, || format!("stationary segment at {} mm/s", s.speed))?;
            continue;
        }
        worst = worst.max((s.speed * (program.d_r / program.v_r) - s.world_distance).abs());
    }
    check(worst <= 1e-9, || format!("v1·(d_r/v_r) - d1 up to {worst:e}"))?;
    Ok(format!(
        "{} segments ({stationary} stationary at v_r), max parity error {worst:.1e}; v1 = v_r exactly at d1 = d_r",
        program.segments.len()
    ))
}

fn gravity_alignment() -> Outcome {
    let plan = slice_surface(&shapes::blade(&BladeParams::default()), &SliceConfig::default()).map_err(|e| e.to_string())?;
    let material = MaterialTable::builtin().get("aluminum").map_err(|e| e.to_string())?.clone();
    let (program, traj) = plan_print(&plan, &material, &PlanOptions::default()).map_err(|e| e.to_string())?;
    check(traj.len() == program.segments.len(), || "trajectory and program lengths differ".into())?;
    let mut worst: f64 = 0.0;
    let mut exact = 0;
    for (k, s) in program.segments.iter().enumerate() {
        if !traj.is_exact(k) {
            continue;
        }
        exact += 1;
        let up = base_orientation(&s.target.positioner) * s.target.direction;
        worst = worst.max((up - Vec3::z()).norm());
    }
    check(exact > program.segments.len() / 2, || format!("only {exact} exact waypoints"))?;
    check(worst <= 1e-6, || format!("world increment off z by {worst:e}"))?;
    Ok(format!("{exact} of {} waypoints exact, max deviation {worst:.1e}", program.segments.len()))
}

fn milli(rng: &mut ChaCha8Rng, range: f64) -> f64 {
    (rng.random_range(-range..range) * 1000.0).round() / 1000.0
}

fn fuzz_script(seed: u64) -> Script {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pose = |rng: &mut ChaCha8Rng| {
        [
            milli(rng, 500.0),
            milli(rng, 500.0),
            milli(rng, 500.0),
            milli(rng, 180.0),
            milli(rng, 90.0),
            milli(rng, 180.0),
        ]
    };
    let mut statements = vec![Statement::Sync("main".into())];
    let mut arc = false;
    for _ in 0..rng.random_range(1..40) {
        if rng.random_bool(0.2) {
            statements.push(if arc { Statement::ArcOff } else { Statement::ArcOn });
            arc = !arc;
        }
        let primitive = [Primitive::MoveL, Primitive::MoveC, Primitive::MoveJ][rng.random_range(0..3)];
        let via = (primitive == Primitive::MoveC).then(|| pose(&mut rng));
        statements.push(Statement::Move(Move {
            primitive,
            robot: "torch".into(),
            target: pose(&mut rng),
            via,
            positioner: "table".into(),
            joints: [milli(&mut rng, 95.0), milli(&mut rng, 720.0)],
            speed: rng.random_range(1..30_000) as f64 / 1000.0,
        }));
    }
    if arc {
        statements.push(Statement::ArcOff);
    }
    statements.push(Statement::EndSync);
    Script {
        name: format!("fuzz{seed}"),
        d_r: Some(rng.random_range(1..10_000) as f64 / 1000.0),
        v_r: Some(rng.random_range(1..20_000) as f64 / 1000.0),
        material: rng.random_bool(0.5).then(|| "aluminum".to_string()),
        feed_ipm: None,
        devices: vec![("torch".into(), DeviceKind::Robot), ("table".into(), DeviceKind::Positioner)],
        groups: vec!["main".into()],
        statements,
    }
}

fn emitter_fuzz() -> Outcome {
    let dialects = [Dialect::InformLike, Dialect::RapidLike, Dialect::KarelLike];
    let mut moves = 0;
    for seed in 0..100 {
        let script = fuzz_script(seed);
        let text = emit_ir(&script).map_err(|e| e.to_string())?;
        let back = parse_script(&text).map_err(|e| format!("program {seed}: {e}"))?;
        check(back == script, || format!("program {seed}: parse(emit_ir(s)) != s"))?;
        check(emit_ir(&script).map_err(|e| e.to_string())? == text, || format!("program {seed}: IR not deterministic"))?;
        let count = script.moves().count();
        moves += count;
        for d in dialects {
            let out = emit(&script, d).map_err(|e| e.to_string())?;
            check(emit(&script, d).map_err(|e| e.to_string())? == out, || format!("program {seed}: {d:?} not deterministic"))?;
            let n = motion_statement_count(&out, d).map_err(|e| e.to_string())?;
            check(n == count, || format!("program {seed}: {d:?} has {n} motion statements, IR {count}"))?;
        }
    }
    Ok(format!("100 programs, {moves} moves, identity + parity + determinism in 3 dialects"))
}

fn torch_template() -> Result<TorchTemplate, String> {
    let (sprite, anchor) = torch_sprite(TORCH_INTENSITY, BACKGROUND_INTENSITY);
    TorchTemplate::from_image(&sprite, anchor, EDGE_THRESHOLD).map_err(|e| e.to_string())
}

fn monitor() -> Outcome {
    let template = torch_template()?;
    let config = MonitorConfig::default();
    let mut hits = 0;
    for trial in 0..100u64 {
        let tip = (50 + (trial as usize * 7) % 60, 30 + (trial as usize * 13) % 100);
        let frame = synth_frame(&SynthParams {
            tip,
            flame_center: (tip.0 as f64 + 30.0, tip.1 as f64),
            noise_sigma: 0.05,
            seed: 7_000 + trial,
            ..SynthParams::default()
        })
        .map_err(|e| e.to_string())?;
        if let Ok(est) = estimate_standoff(&frame, &template, &config) {
            if est.tip.0.abs_diff(tip.0) <= 2 && est.tip.1.abs_diff(tip.1) <= 2 {
                hits += 1;
            }
        }
    }
    check(hits >= 95, || format!("located {hits}/100"))?;

    // noiseless frame built by hand: tip row 100, flame top row 140 at 4 px/mm
    let (sprite, anchor) = torch_sprite(TORCH_INTENSITY, 0);
    let mut frame = IRFrame::filled(200, 220, 0, 4.0);
    for r in 0..sprite.height {
        for c in 0..sprite.width {
            frame.set(100 - anchor.0 + r, 80 + c, sprite.get(r, c));
        }
    }
    for r in 140..160 {
        for c in 70..110 {
            frame.set(r, c, 60_000);
        }
    }
    let est = estimate_standoff(&frame, &template, &config).map_err(|e| e.to_string())?;
    check(est.standoff_mm == 10.0, || format!("constructed standoff {} mm, expected 10", est.standoff_mm))?;

    let dense = slice_wall(0.1)?;
    let torch_z = 25.0;
    let px_per_mm = 4.0;
    let mut last: Option<usize> = None;
    for k in 0..200u64 {
        let height = 0.1 * k as f64;
        let standoff = torch_z - height;
        let radius = 8.0;
        let frame = synth_frame(&SynthParams {
            tip: (40, 80),
            flame_center: (40.0 + standoff * px_per_mm + radius, 80.0),
            flame_radius: radius,
            noise_sigma: 0.02,
            px_per_mm,
            seed: 9_000 + k,
            ..SynthParams::default()
        })
        .map_err(|e| e.to_string())?;
        let est = estimate_standoff(&frame, &template, &config).map_err(|e| format!("frame {k}: {e}"))?;
        let measured = (torch_z - est.standoff_mm).max(0.0);
        let idx = select_slice(&dense, measured, 1.05, None).map_err(|e| format!("frame {k}: {e}"))?;
        check(last.is_none_or(|l| idx >= l), || format!("frame {k}: slice {idx} after {}", last.unwrap_or(0)))?;
        last = Some(idx);
    }
    Ok(format!("{hits}/100 located within 2 px; standoff exact; 200 frames monotone up to slice {}", last.unwrap_or(0)))
}

fn metrology() -> Outcome {
    let known = RigidTransform::new(axis_rotation(&Vec3::z(), 5f64.to_radians()), Vec3::new(2.0, -1.0, 0.5));
    let blade = shapes::blade(&BladeParams::default());

    let start = Instant::now();
    let source = sample_mesh(&blade, 1.0, 3).map_err(|e| e.to_string())?;
    let target = source.transformed(&known);
    let r = icp_register(&source, &target, &RigidTransform::identity(), &IcpConfig::default()).map_err(|e| e.to_string())?;
    let (clean_angle, clean_shift) = r.transform.difference(&known);
    check(clean_angle <= 1e-3 && clean_shift <= 1e-3, || {
        format!("clean ICP off by {clean_angle:e} rad / {clean_shift:e} mm")
    })?;
    within(start.elapsed(), 10.0)?;

    let start = Instant::now();
    let mut noisy = source.transformed(&known);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let lo = noisy.points.iter().fold(Point3::repeat(f64::INFINITY), |a, p| a.inf(p));
    let hi = noisy.points.iter().fold(Point3::repeat(f64::NEG_INFINITY), |a, p| a.sup(p));
    let n = noisy.len();
    for i in rand::seq::index::sample(&mut rng, n, n * 3 / 10) {
        noisy.points[i] = Point3::new(
            rng.random_range(lo.x..hi.x),
            rng.random_range(lo.y..hi.y),
            rng.random_range(lo.z..hi.z),
        );
    }
    let r = icp_register(&source, &noisy, &RigidTransform::identity(), &IcpConfig::default()).map_err(|e| e.to_string())?;
    let (out_angle, out_shift) = r.transform.difference(&known);
    check(out_angle <= 0.05 && out_shift <= 0.5, || format!("outlier ICP off by {out_angle} rad / {out_shift} mm"))?;
    within(start.elapsed(), 10.0)?;

    let start = Instant::now();
    let cad = shapes::wall(100.0, 50.0, 1.0);
    let mid = sample_mesh(&cad, 2.0, 2).map_err(|e| e.to_string())?;
    let normals = mid.normals.as_ref().ok_or("no normals")?;
    let mut shell = Vec::new();
    for (p, n) in mid.points.iter().zip(normals) {
        shell.push(p + n * 1.5);
        shell.push(p - n * 1.5);
    }
    let config = EvalConfig { nominal_width: 3.0, ..EvalConfig::default() };
    let report = evaluate(&cad, &PointCloud::new(shell), &config).map_err(|e| e.to_string())?;
    let width = report.width.ok_or_else(|| report.width_note.clone().unwrap_or_default())?;
    check((width.mean_mm - 3.0).abs() <= 0.02, || format!("mean width {} mm", width.mean_mm))?;
    within(start.elapsed(), 10.0)?;

    let start = Instant::now();
    let cad = shapes::wall(100.0, 50.0, 2.0);
    let mut scan = sample_mesh(&cad, 2.0, 3).map_err(|e| e.to_string())?;
    let normals = scan.normals.clone().ok_or("no normals")?;
    for (p, n) in scan.points.iter_mut().zip(&normals) {
        if (40.0..65.0).contains(&p.x) && (15.0..35.0).contains(&p.z) {
            *p += n * 0.4;
        }
    }
    let report = evaluate(&cad, &scan, &EvalConfig::default()).map_err(|e| e.to_string())?;
    check((report.e_max_mm - 0.4).abs() <= 0.02, || format!("bulge e_max {} mm", report.e_max_mm))?;
    within(start.elapsed(), 10.0)?;

    Ok(format!(
        "clean {clean_angle:.1e} rad / {clean_shift:.1e} mm; outliers {out_angle:.1e} rad / {out_shift:.1e} mm; \
         width {:.4} mm; bulge e_max {:.4} mm",
        width.mean_mm, report.e_max_mm
    ))
}

fn waam(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_waam")).args(args).output().map_err(|e| e.to_string())?;
    check(out.status.success(), || {
        format!("waam {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr).trim())
    })
}

fn pipeline(dir: &Path, fixture: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let out = dir.to_str().ok_or("non-UTF-8 path")?;
    let path = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let fixture = fixture.to_str().ok_or("non-UTF-8 path")?;
    waam(&["slice", "--mesh", fixture, "--out", out])?;
    waam(&["plan", "--plan", &path("cylinder.plan"), "--out", out])?;
    waam(&["emit", "--program", &path("cylinder.prog"), "--dialect", "rapid", "--out", out])?;
    waam(&["evaluate", "--cad", fixture, "--out", out])?;
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let entry = entry.map_err(|e| e.to_string())?;
        let bytes = std::fs::read(entry.path()).map_err(|e| e.to_string())?;
        files.push((entry.file_name().to_string_lossy().into_owned(), bytes));
    }
    files.sort();
    Ok(files)
}

fn cli_pipeline() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fixture = tmp.path().join("cylinder.stl");
    std::fs::write(&fixture, write_stl_binary(&shapes::cylinder(20.0, 20.0, 252, 20))).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let first = pipeline(&tmp.path().join("a"), &fixture)?;
    let elapsed = start.elapsed();
    let second = pipeline(&tmp.path().join("b"), &fixture)?;
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    check(first == second, || format!("outputs differ between runs: {names:?}"))?;
    within(elapsed, 60.0)?;
    let report = first
        .iter()
        .find(|(n, _)| n == "cylinder.report.toml")
        .ok_or("no cylinder.report.toml")?;
    let table: toml::Table = toml::from_str(&String::from_utf8_lossy(&report.1)).map_err(|e| e.to_string())?;
    let e_avg = table.get("e_avg_mm").and_then(toml::Value::as_float).ok_or("report lacks e_avg_mm")?;
    check(e_avg < 1e-6, || format!("e_avg {e_avg} mm"))?;
    Ok(format!("{} files byte-identical across two runs, {:.2} s, e_avg {e_avg:.1e} mm", first.len(), elapsed.as_secs_f64()))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("slicer wall oracle", wall_layers),
        ("slicer sphere-cap oracle", sphere_cap),
        ("dense-vs-coarse consistency", dense_vs_coarse),
        ("warp continuity", warp_continuity),
        ("positioner IK", positioner_ik),
        ("speed coordination", speed_coordination),
        ("gravity alignment", gravity_alignment),
        ("emitter round trip", emitter_fuzz),
        ("monitor", monitor),
        ("metrology", metrology),
        ("CLI pipeline", cli_pipeline),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
