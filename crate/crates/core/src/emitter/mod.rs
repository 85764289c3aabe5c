//! Robot program text: a small line-oriented motion IR that parses and
//! prints losslessly at 3-decimal precision, plus backends for three
//! industrial controller dialect styles.
//!
//! ```text
//! PROGRAM cylinder
//! PARAM v_r 9.000
//! DEVICE torch ROBOT
//! DEVICE table POSITIONER
//! GROUP main
//! SYNC main
//! MOVL torch 30.000 0.000 0.000 180.000 0.000 -90.000 table 0.000 0.000 V=9.000
//! ARCON
//! MOVL torch ...
//! ARCOF
//! ENDSYNC
//! ```
//!
//! Poses are `x y z rx ry rz` in mm and degrees, with the rotation built as
//! `Rz(rz)·Ry(ry)·Rx(rx)`. Positioner joints are in degrees.

mod dialects;

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::geometry::{Point3, Rotation3, Vec3};
use crate::planner::{DevicePose, MotionProgram, MotionSegment, Primitive, Waypoint};
use crate::positioner::{base_orientation, PositionerState};

pub use dialects::{emit, motion_statement_count, read_dialect, script_readback, Dialect, ReadBack};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmitError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}: unbalanced {what}")]
    Unbalanced { line: usize, what: String },
    #[error("line {line}, column {column}: unknown device '{name}'")]
    UnknownDevice { line: usize, column: usize, name: String },
    #[error("line {line}, column {column}: group '{name}' is not declared")]
    UndeclaredGroup { line: usize, column: usize, name: String },
    #[error("program has no motion")]
    Empty,
    #[error("{0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviceKind {
    Robot,
    Positioner,
}

/// Slowest speed the IR can carry (mm/s); slower planned moves are raised to it.
pub const MIN_SPEED: f64 = 0.001;

/// `x y z rx ry rz`, mm and degrees.
pub type Pose6 = [f64; 6];

#[derive(Debug, Clone, PartialEq)]
pub struct Move {
    pub primitive: Primitive,
    pub robot: String,
    pub target: Pose6,
    /// Pass-through pose of a circular move.
    pub via: Option<Pose6>,
    pub positioner: String,
    /// Positioner joints (deg).
    pub joints: [f64; 2],
    /// mm/s
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    Move(Move),
    ArcOn,
    ArcOff,
    Sync(String),
    EndSync,
}

/// A parsed IR program.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Script {
    pub name: String,
    pub d_r: Option<f64>,
    pub v_r: Option<f64>,
    pub material: Option<String>,
    pub feed_ipm: Option<f64>,
    pub devices: Vec<(String, DeviceKind)>,
    pub groups: Vec<String>,
    pub statements: Vec<Statement>,
}

impl Script {
    pub fn moves(&self) -> impl Iterator<Item = &Move> {
        self.statements.iter().filter_map(|s| match s {
            Statement::Move(m) => Some(m),
            _ => None,
        })
    }

    /// IR view of a planned program: one synchronized group holding every
    /// move, with the arc switched around each deposition span. Speeds below
    /// [`MIN_SPEED`] are raised to it.
    pub fn from_program(program: &MotionProgram) -> Result<Script, EmitError> {
        if program.segments.is_empty() {
            return Err(EmitError::Empty);
        }
        let (robot, positioner) = ("torch".to_string(), "positioner".to_string());
        let mut statements = vec![Statement::Sync("main".into())];
        let mut arc = false;
        for seg in &program.segments {
            if seg.target.arc_on != arc {
                statements.push(if seg.target.arc_on { Statement::ArcOn } else { Statement::ArcOff });
                arc = seg.target.arc_on;
            }
            statements.push(Statement::Move(Move {
                primitive: seg.primitive,
                robot: robot.clone(),
                target: pose_to_six(&seg.target.torch),
                via: seg.via.as_ref().map(pose_to_six),
                positioner: positioner.clone(),
                joints: [seg.target.positioner.q1.to_degrees(), seg.target.positioner.q2.to_degrees()],
                speed: seg.speed.max(MIN_SPEED),
            }));
        }
        if arc {
            statements.push(Statement::ArcOff);
        }
        statements.push(Statement::EndSync);
        Ok(Script {
            name: program.name.clone(),
            d_r: Some(program.d_r),
            v_r: Some(program.v_r),
            material: Some(program.material.clone()),
            feed_ipm: Some(program.feed_ipm),
            devices: vec![(robot, DeviceKind::Robot), (positioner, DeviceKind::Positioner)],
            groups: vec!["main".into()],
            statements,
        })
    }

    /// Planner view of the script. Moves between `ARCON` and `ARCOF` deposit;
    /// each span together with the travel move before it forms one path.
    pub fn to_program(&self) -> Result<MotionProgram, EmitError> {
        let mut segments = Vec::new();
        let mut arc = false;
        let mut path = 0;
        let mut span_ended = false;
        let mut previous: Option<Point3> = None;
        for st in &self.statements {
            match st {
                Statement::ArcOn => arc = true,
                Statement::ArcOff => {
                    arc = false;
                    span_ended = true;
                }
                Statement::Move(m) => {
                    if span_ended {
                        path += 1;
                        span_ended = false;
                    }
                    let torch = six_to_pose(&m.target);
                    let q = PositionerState::from_degrees(m.joints[0], m.joints[1]);
                    let world = base_orientation(&q) * torch.position;
                    let d1 = previous.map_or(0.0, |p| (world - p).norm());
                    previous = Some(world);
                    segments.push(MotionSegment {
                        primitive: m.primitive,
                        target: Waypoint {
                            torch,
                            positioner: q,
                            arc_on: arc,
                            direction: -(torch.orientation * Vec3::z()),
                            path,
                        },
                        via: m.via.as_ref().map(six_to_pose),
                        speed: m.speed,
                        world_distance: d1,
                    });
                }
                Statement::Sync(_) | Statement::EndSync => {}
            }
        }
        if segments.is_empty() {
            return Err(EmitError::Empty);
        }
        Ok(MotionProgram {
            name: self.name.clone(),
            segments,
            d_r: self.d_r.unwrap_or(crate::planner::DEFAULT_WAYPOINT_SPACING),
            v_r: self.v_r.unwrap_or(0.0),
            material: self.material.clone().unwrap_or_default(),
            feed_ipm: self.feed_ipm.unwrap_or(0.0),
        })
    }
}

pub fn pose_to_six(pose: &DevicePose) -> Pose6 {
    let (rx, ry, rz) = pose.orientation.euler_angles();
    [
        pose.position.x,
        pose.position.y,
        pose.position.z,
        rx.to_degrees(),
        ry.to_degrees(),
        rz.to_degrees(),
    ]
}

pub fn six_to_pose(six: &Pose6) -> DevicePose {
    DevicePose {
        position: Point3::new(six[0], six[1], six[2]),
        orientation: Rotation3::from_euler_angles(six[3].to_radians(), six[4].to_radians(), six[5].to_radians()),
    }
}

/// Fixed 3 decimals; negative zero prints as `0.000`.
pub fn fmt3(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

struct Num(f64);

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fmt3(self.0))
    }
}

fn keyword(p: Primitive) -> &'static str {
    match p {
        Primitive::MoveL => "MOVL",
        Primitive::MoveC => "MOVC",
        Primitive::MoveJ => "MOVJ",
    }
}

/// Canonical IR text.
pub fn emit_ir(script: &Script) -> Result<String, EmitError> {
    if script.moves().next().is_none() {
        return Err(EmitError::Empty);
    }
    let mut out = String::new();
    let _ = writeln!(out, "PROGRAM {}", script.name);
    if let Some(v) = script.d_r {
        let _ = writeln!(out, "PARAM d_r {}", Num(v));
    }
    if let Some(v) = script.v_r {
        let _ = writeln!(out, "PARAM v_r {}", Num(v));
    }
    if let Some(m) = &script.material {
        let _ = writeln!(out, "PARAM material {m}");
    }
    if let Some(v) = script.feed_ipm {
        let _ = writeln!(out, "PARAM feed_ipm {}", Num(v));
    }
    for (name, kind) in &script.devices {
        let kind = match kind {
            DeviceKind::Robot => "ROBOT",
            DeviceKind::Positioner => "POSITIONER",
        };
        let _ = writeln!(out, "DEVICE {name} {kind}");
    }
    for g in &script.groups {
        let _ = writeln!(out, "GROUP {g}");
    }
    for st in &script.statements {
        match st {
            Statement::ArcOn => out.push_str("ARCON\n"),
            Statement::ArcOff => out.push_str("ARCOF\n"),
            Statement::Sync(g) => {
                let _ = writeln!(out, "SYNC {g}");
            }
            Statement::EndSync => out.push_str("ENDSYNC\n"),
            Statement::Move(m) => {
                let _ = write!(out, "{} {}", keyword(m.primitive), m.robot);
                if let Some(via) = &m.via {
                    for v in via {
                        let _ = write!(out, " {}", Num(*v));
                    }
                }
                for v in &m.target {
                    let _ = write!(out, " {}", Num(*v));
                }
                let _ = writeln!(
                    out,
                    " {} {} {} V={}",
                    m.positioner,
                    Num(m.joints[0]),
                    Num(m.joints[1]),
                    Num(m.speed)
                );
            }
        }
    }
    Ok(out)
}

struct Tokens<'a> {
    line: usize,
    items: Vec<(usize, &'a str)>,
    pos: usize,
    end_column: usize,
}

impl<'a> Tokens<'a> {
    fn new(line: usize, text: &'a str) -> Self {
        let body = text.split('#').next().unwrap_or("");
        let mut items = Vec::new();
        let mut start = None;
        for (i, c) in body.char_indices() {
            match (c.is_whitespace(), start) {
                (false, None) => start = Some(i),
                (true, Some(s)) => {
                    items.push((s, &body[s..i]));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            items.push((s, &body[s..]));
        }
        let items = items
            .into_iter()
            .map(|(byte, tok)| (body[..byte].chars().count() + 1, tok))
            .collect();
        Tokens {
            line,
            items,
            pos: 0,
            end_column: body.chars().count() + 1,
        }
    }

    fn error(&self, column: usize, message: String) -> EmitError {
        EmitError::Syntax {
            line: self.line,
            column,
            message,
        }
    }

    fn next(&mut self, expected: &str) -> Result<(usize, &'a str), EmitError> {
        let t = self
            .items
            .get(self.pos)
            .copied()
            .ok_or_else(|| self.error(self.end_column, format!("expected {expected}, found end of line")))?;
        self.pos += 1;
        Ok(t)
    }

    fn number(&mut self, expected: &str) -> Result<f64, EmitError> {
        let (col, tok) = self.next(expected)?;
        match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.error(col, format!("expected {expected}, found '{tok}'"))),
        }
    }

    fn pose(&mut self) -> Result<Pose6, EmitError> {
        let mut p = [0.0; 6];
        for (v, name) in p.iter_mut().zip(["x", "y", "z", "rx", "ry", "rz"]) {
            *v = self.number(name)?;
        }
        Ok(p)
    }

    fn finish(&self) -> Result<(), EmitError> {
        match self.items.get(self.pos) {
            Some((col, tok)) => Err(self.error(*col, format!("unexpected '{tok}' at end of statement"))),
            None => Ok(()),
        }
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Parses IR text. A leading `PROGRAM` line is optional.
pub fn parse_script(text: &str) -> Result<Script, EmitError> {
    let mut script = Script {
        name: "program".into(),
        ..Script::default()
    };
    let mut arc_line: Option<usize> = None;
    let mut sync_line: Option<usize> = None;
    let mut seen_statement = false;
    let device = |script: &Script, col: usize, line: usize, name: &str, kind: DeviceKind| {
        if script.devices.iter().any(|(n, k)| n == name && *k == kind) {
            Ok(name.to_string())
        } else {
            Err(EmitError::UnknownDevice {
                line,
                column: col,
                name: name.to_string(),
            })
        }
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut tk = Tokens::new(line, raw);
        let Some(&(col, head)) = tk.items.first() else { continue };
        tk.pos = 1;
        let ident = |tk: &mut Tokens, what: &str| -> Result<String, EmitError> {
            let (c, t) = tk.next(what)?;
            if is_ident(t) {
                Ok(t.to_string())
            } else {
                Err(tk.error(c, format!("expected {what}, found '{t}'")))
            }
        };
        match head {
            "PROGRAM" => {
                if seen_statement {
                    return Err(tk.error(col, "PROGRAM must be the first statement".into()));
                }
                script.name = ident(&mut tk, "program name")?;
            }
            "PARAM" => {
                let (c, key) = tk.next("parameter name")?;
                match key {
                    "d_r" => script.d_r = Some(tk.number("d_r value")?),
                    "v_r" => script.v_r = Some(tk.number("v_r value")?),
                    "feed_ipm" => script.feed_ipm = Some(tk.number("feed_ipm value")?),
                    "material" => script.material = Some(ident(&mut tk, "material name")?),
                    _ => {
                        return Err(tk.error(c, format!("expected one of d_r, v_r, material, feed_ipm, found '{key}'")))
                    }
                }
            }
            "DEVICE" => {
                let name = ident(&mut tk, "device name")?;
                let (c, kind) = tk.next("ROBOT or POSITIONER")?;
                let kind = match kind {
                    "ROBOT" => DeviceKind::Robot,
                    "POSITIONER" => DeviceKind::Positioner,
                    _ => return Err(tk.error(c, format!("expected ROBOT or POSITIONER, found '{kind}'"))),
                };
                script.devices.push((name, kind));
            }
            "GROUP" => {
                let g = ident(&mut tk, "group name")?;
                script.groups.push(g);
            }
            "SYNC" => {
                let (c, g) = tk.next("group name")?;
                if !script.groups.iter().any(|x| x == g) {
                    return Err(EmitError::UndeclaredGroup {
                        line,
                        column: c,
                        name: g.to_string(),
                    });
                }
                if sync_line.is_some() {
                    return Err(EmitError::Unbalanced {
                        line,
                        what: "SYNC (already inside a SYNC block)".into(),
                    });
                }
                sync_line = Some(line);
                script.statements.push(Statement::Sync(g.to_string()));
            }
            "ENDSYNC" => {
                if sync_line.take().is_none() {
                    return Err(EmitError::Unbalanced {
                        line,
                        what: "ENDSYNC without SYNC".into(),
                    });
                }
                script.statements.push(Statement::EndSync);
            }
            "ARCON" => {
                if arc_line.is_some() {
                    return Err(EmitError::Unbalanced {
                        line,
                        what: "ARCON (arc already on)".into(),
                    });
                }
                arc_line = Some(line);
                script.statements.push(Statement::ArcOn);
            }
            "ARCOF" => {
                if arc_line.take().is_none() {
                    return Err(EmitError::Unbalanced {
                        line,
                        what: "ARCOF without ARCON".into(),
                    });
                }
                script.statements.push(Statement::ArcOff);
            }
            "MOVL" | "MOVC" | "MOVJ" => {
                let primitive = match head {
                    "MOVL" => Primitive::MoveL,
                    "MOVC" => Primitive::MoveC,
                    _ => Primitive::MoveJ,
                };
                let (c, robot) = tk.next("robot name")?;
                let robot = device(&script, c, line, robot, DeviceKind::Robot)?;
                let via = if primitive == Primitive::MoveC { Some(tk.pose()?) } else { None };
                let target = tk.pose()?;
                let (c, pos) = tk.next("positioner name")?;
                let positioner = device(&script, c, line, pos, DeviceKind::Positioner)?;
                let joints = [tk.number("q1")?, tk.number("q2")?];
                let (c, sp) = tk.next("V=<speed>")?;
                let speed = sp
                    .strip_prefix("V=")
                    .and_then(|v| v.parse::<f64>().ok())
                    .filter(|v| v.is_finite() && *v > 0.0)
                    .ok_or_else(|| tk.error(c, format!("expected V=<positive speed>, found '{sp}'")))?;
                script.statements.push(Statement::Move(Move {
                    primitive,
                    robot,
                    target,
                    via,
                    positioner,
                    joints,
                    speed,
                }));
            }
            other => {
                return Err(tk.error(
                    col,
                    format!(
                        "expected one of PROGRAM, PARAM, DEVICE, GROUP, SYNC, ENDSYNC, MOVL, MOVC, MOVJ, ARCON, ARCOF, found '{other}'"
                    ),
                ))
            }
        }
        tk.finish()?;
        seen_statement = true;
    }
    if let Some(line) = arc_line {
        return Err(EmitError::Unbalanced {
            line,
            what: "ARCON without ARCOF".into(),
        });
    }
    if let Some(line) = sync_line {
        return Err(EmitError::Unbalanced {
            line,
            what: "SYNC without ENDSYNC".into(),
        });
    }
    Ok(script)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "DEVICE r1 ROBOT\nDEVICE p1 POSITIONER\n";

    #[test]
    fn two_moves() {
        let text = format!(
            "{HEADER}MOVL r1 0 0 0 180 0 0 p1 0 0 V=9\nMOVL r1 5 0 0 180 0 0 p1 -30 10 V=9 # step\n"
        );
        let s = parse_script(&text).unwrap();
        assert_eq!(s.moves().count(), 2);
        assert_eq!(s.to_program().unwrap().segments.len(), 2);
    }

    #[test]
    fn lone_arcon_names_line_one() {
        assert_eq!(
            parse_script("ARCON\n").unwrap_err(),
            EmitError::Unbalanced {
                line: 1,
                what: "ARCON without ARCOF".into()
            }
        );
        assert!(matches!(parse_script("ARCOF\n"), Err(EmitError::Unbalanced { line: 1, .. })));
    }

    #[test]
    fn diagnostics_carry_position() {
        let err = parse_script(&format!("{HEADER}MOVL r1 0 0 zero 180 0 0 p1 0 0 V=9\n")).unwrap_err();
        assert_eq!(
            err,
            EmitError::Syntax {
                line: 3,
                column: 13,
                message: "expected z, found 'zero'".into()
            }
        );
        let err = parse_script(&format!("{HEADER}MOVL r9 0 0 0 0 0 0 p1 0 0 V=9\n")).unwrap_err();
        assert!(matches!(err, EmitError::UnknownDevice { line: 3, column: 6, .. }));
        let err = parse_script("SYNC g\n").unwrap_err();
        assert!(matches!(err, EmitError::UndeclaredGroup { line: 1, column: 6, .. }));
        let err = parse_script(&format!("{HEADER}MOVL r1 0 0 0 0 0 0 p1 0 0\n")).unwrap_err();
        assert!(matches!(err, EmitError::Syntax { line: 3, .. }));
        assert!(matches!(parse_script("JUMP\n"), Err(EmitError::Syntax { line: 1, column: 1, .. })));
        assert!(matches!(
            parse_script(&format!("{HEADER}MOVL r1 0 0 0 0 0 0 p1 0 0 V=0\n")),
            Err(EmitError::Syntax { .. })
        ));
    }

    #[test]
    fn groups_survive_round_trip() {
        let text = format!(
            "PROGRAM g\n{HEADER}GROUP a\nGROUP b\nSYNC b\nMOVL r1 1.000 2.000 3.000 0.000 0.000 0.000 p1 0.000 0.000 V=1.000\nENDSYNC\nSYNC a\nENDSYNC\n"
        );
        let s = parse_script(&text).unwrap();
        assert_eq!(s.groups, vec!["a", "b"]);
        let again = emit_ir(&s).unwrap();
        assert_eq!(again, text);
        assert_eq!(parse_script(&again).unwrap(), s);
    }

    #[test]
    fn empty_program_is_refused() {
        assert_eq!(emit_ir(&Script::default()), Err(EmitError::Empty));
    }

    #[test]
    fn negative_zero_formatting() {
        assert_eq!(fmt3(-0.0001), "0.000");
        assert_eq!(fmt3(4.5), "4.500");
        assert_eq!(fmt3(-1.23456), "-1.235");
    }

    #[test]
    fn pose_conversion_round_trip() {
        let six = [1.0, 2.0, 3.0, 170.0, -20.0, 45.0];
        let back = pose_to_six(&six_to_pose(&six));
        for (a, b) in six.iter().zip(back) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
