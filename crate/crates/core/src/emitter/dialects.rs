//! Controller-dialect text: INFORM-like (numbered position records),
//! RAPID-like (inline robtargets) and KAREL-like (position array plus
//! `MOVE TO`). Each writer has a matching reader that recovers the motion
//! statements, used to check what was written.

use std::fmt::Write as _;
use std::str::FromStr;

use super::{fmt3, EmitError, Move, Pose6, Script, Statement};
use crate::planner::Primitive;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dialect {
    InformLike,
    RapidLike,
    KarelLike,
}

impl FromStr for Dialect {
    type Err = EmitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "inform" | "inform_like" => Ok(Dialect::InformLike),
            "rapid" | "rapid_like" => Ok(Dialect::RapidLike),
            "karel" | "karel_like" => Ok(Dialect::KarelLike),
            _ => Err(EmitError::Unsupported(format!("unknown dialect '{s}'"))),
        }
    }
}

impl Dialect {
    pub fn extension(self) -> &'static str {
        match self {
            Dialect::InformLike => "JBI",
            Dialect::RapidLike => "mod",
            Dialect::KarelLike => "kl",
        }
    }
}

/// What a dialect reader recovers from program text.
#[derive(Debug, Clone, PartialEq)]
pub enum ReadBack {
    Move {
        primitive: Primitive,
        target: Pose6,
        via: Option<Pose6>,
        joints: [f64; 2],
        speed: f64,
    },
    ArcOn,
    ArcOff,
}

pub fn emit(script: &Script, dialect: Dialect) -> Result<String, EmitError> {
    if script.moves().next().is_none() {
        return Err(EmitError::Empty);
    }
    Ok(match dialect {
        Dialect::InformLike => inform(script),
        Dialect::RapidLike => rapid(script),
        Dialect::KarelLike => karel(script),
    })
}

pub fn motion_statement_count(text: &str, dialect: Dialect) -> Result<usize, EmitError> {
    Ok(read_dialect(text, dialect)?
        .iter()
        .filter(|r| matches!(r, ReadBack::Move { .. }))
        .count())
}

pub fn read_dialect(text: &str, dialect: Dialect) -> Result<Vec<ReadBack>, EmitError> {
    match dialect {
        Dialect::InformLike => read_inform(text),
        Dialect::RapidLike => read_rapid(text),
        Dialect::KarelLike => read_karel(text),
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| fmt3(*v)).collect::<Vec<_>>().join(",")
}

fn upper_name(name: &str) -> String {
    name.to_ascii_uppercase().replace('-', "_")
}

fn inform(script: &Script) -> String {
    // position records: one C per robot pose (via first), one EC per move
    let mut robot_poses: Vec<Pose6> = Vec::new();
    let mut station: Vec<[f64; 2]> = Vec::new();
    for m in script.moves() {
        if let Some(v) = m.via {
            robot_poses.push(v);
        }
        robot_poses.push(m.target);
        station.push(m.joints);
    }
    let mut out = String::new();
    let _ = writeln!(out, "/JOB\n//NAME {}\n//POS", upper_name(&script.name));
    let _ = writeln!(out, "///NPOS {},0,0,0,{},0", robot_poses.len(), station.len());
    let _ = writeln!(out, "///TOOL 0\n///POSTYPE USER\n///RECTAN\n///RCONF 0,0,0,0,0,0,0,0");
    for (k, p) in robot_poses.iter().enumerate() {
        let _ = writeln!(out, "C{k:05}={}", join(p));
    }
    let _ = writeln!(out, "///POSTYPE ANGLE");
    for (k, q) in station.iter().enumerate() {
        let _ = writeln!(out, "EC{k:05}={}", join(q));
    }
    let _ = writeln!(out, "//INST\n///DATE 2000/01/01 00:00");
    if let Some(m) = &script.material {
        let _ = writeln!(out, "///COMM {m}");
    }
    let _ = writeln!(out, "///ATTR SC,RW,RJ\n///GROUP1 RB1,ST1\nNOP");
    let (mut c, mut ec) = (0, 0);
    for st in &script.statements {
        match st {
            Statement::ArcOn => out.push_str("ARCON\n"),
            Statement::ArcOff => out.push_str("ARCOF\n"),
            Statement::Sync(g) => {
                let _ = writeln!(out, "'SYNC {g}");
            }
            Statement::EndSync => out.push_str("'ENDSYNC\n"),
            Statement::Move(m) => {
                let speed = fmt3(m.speed);
                let _ = match m.primitive {
                    Primitive::MoveL => writeln!(out, "MOVL C{c:05} EC{ec:05} V={speed}"),
                    Primitive::MoveJ => writeln!(out, "MOVJ C{c:05} EC{ec:05} V={speed}"),
                    Primitive::MoveC => {
                        c += 1;
                        writeln!(out, "MOVC C{:05} C{c:05} EC{ec:05} V={speed}", c - 1)
                    }
                };
                c += 1;
                ec += 1;
            }
        }
    }
    out.push_str("END\n");
    out
}

fn reader_error(line: usize, message: impl Into<String>) -> EmitError {
    EmitError::Syntax {
        line: line + 1,
        column: 1,
        message: message.into(),
    }
}

fn numbers(text: &str, line: usize) -> Result<Vec<f64>, EmitError> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| reader_error(line, format!("bad number '{t}'"))))
        .collect()
}

fn read_inform(text: &str) -> Result<Vec<ReadBack>, EmitError> {
    use std::collections::HashMap;
    let mut records: HashMap<String, Vec<f64>> = HashMap::new();
    let mut out = Vec::new();
    let mut in_inst = false;
    for (i, line) in text.lines().enumerate() {
        if line == "//INST" {
            in_inst = true;
            continue;
        }
        if !in_inst {
            if let Some((name, values)) = line.split_once('=') {
                if name.starts_with('C') || name.starts_with("EC") {
                    records.insert(name.to_string(), numbers(values, i)?);
                }
            }
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let lookup = |name: &str, len: usize| -> Result<Vec<f64>, EmitError> {
            records
                .get(name)
                .filter(|v| v.len() == len)
                .cloned()
                .ok_or_else(|| reader_error(i, format!("missing position record {name}")))
        };
        let speed = |tok: Option<&&str>| -> Result<f64, EmitError> {
            tok.and_then(|t| t.strip_prefix("V="))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| reader_error(i, "missing V=<speed>"))
        };
        let six = |v: Vec<f64>| -> Pose6 { [v[0], v[1], v[2], v[3], v[4], v[5]] };
        match tokens.first().copied() {
            Some("MOVL") | Some("MOVJ") if tokens.len() == 4 => out.push(ReadBack::Move {
                primitive: if tokens[0] == "MOVL" { Primitive::MoveL } else { Primitive::MoveJ },
                target: six(lookup(tokens[1], 6)?),
                via: None,
                joints: { let q = lookup(tokens[2], 2)?; [q[0], q[1]] },
                speed: speed(tokens.get(3))?,
            }),
            Some("MOVC") if tokens.len() == 5 => out.push(ReadBack::Move {
                primitive: Primitive::MoveC,
                via: Some(six(lookup(tokens[1], 6)?)),
                target: six(lookup(tokens[2], 6)?),
                joints: { let q = lookup(tokens[3], 2)?; [q[0], q[1]] },
                speed: speed(tokens.get(4))?,
            }),
            Some("ARCON") => out.push(ReadBack::ArcOn),
            Some("ARCOF") => out.push(ReadBack::ArcOff),
            Some("NOP") | Some("END") | None => {}
            Some(t) if t.starts_with("///") || t.starts_with('\'') => {}
            Some(t) => return Err(reader_error(i, format!("unexpected instruction '{t}'"))),
        }
    }
    Ok(out)
}

fn robtarget(p: &Pose6, q: &[f64; 2]) -> String {
    format!(
        "[[{},{},{}],OrientZYX({},{},{}),[0,0,0,0],[{},{},9E9,9E9,9E9,9E9]]",
        fmt3(p[0]),
        fmt3(p[1]),
        fmt3(p[2]),
        fmt3(p[5]),
        fmt3(p[4]),
        fmt3(p[3]),
        fmt3(q[0]),
        fmt3(q[1])
    )
}

fn rapid(script: &Script) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "MODULE {}", upper_name(&script.name));
    if let Some(m) = &script.material {
        let _ = writeln!(out, "  ! material {m}");
    }
    let _ = writeln!(out, "  PROC main()");
    for st in &script.statements {
        let _ = match st {
            Statement::ArcOn => writeln!(out, "    SetDO doArc,1;"),
            Statement::ArcOff => writeln!(out, "    SetDO doArc,0;"),
            Statement::Sync(g) => writeln!(out, "    SyncMoveOn sync_{g},all_tasks;"),
            Statement::EndSync => writeln!(out, "    SyncMoveOff sync_end;"),
            Statement::Move(m) => {
                let speed = format!("v{}", fmt3(m.speed));
                match (m.primitive, &m.via) {
                    (Primitive::MoveC, Some(via)) => writeln!(
                        out,
                        "    MoveC {},{},{speed},fine,tool0;",
                        robtarget(via, &m.joints),
                        robtarget(&m.target, &m.joints)
                    ),
                    (Primitive::MoveJ, _) => {
                        writeln!(out, "    MoveJ {},{speed},fine,tool0;", robtarget(&m.target, &m.joints))
                    }
                    _ => writeln!(out, "    MoveL {},{speed},fine,tool0;", robtarget(&m.target, &m.joints)),
                }
            }
        };
    }
    let _ = writeln!(out, "  ENDPROC\nENDMODULE");
    out
}

/// Parses one `[[x,y,z],OrientZYX(rz,ry,rx),[..],[q1,q2,..]]` literal from
/// the start of `s`, returning the pose, joints and the rest of the text.
fn parse_robtarget(s: &str, line: usize) -> Result<(Pose6, [f64; 2], &str), EmitError> {
    let bad = || reader_error(line, "malformed robtarget");
    let s = s.strip_prefix("[[").ok_or_else(bad)?;
    let (xyz, s) = s.split_once("],OrientZYX(").ok_or_else(bad)?;
    let (rot, s) = s.split_once("),[0,0,0,0],[").ok_or_else(bad)?;
    let (ext, rest) = s.split_once("]]").ok_or_else(bad)?;
    let xyz = numbers(xyz, line)?;
    let rot = numbers(rot, line)?;
    let ext: Vec<&str> = ext.split(',').collect();
    if xyz.len() != 3 || rot.len() != 3 || ext.len() != 6 {
        return Err(bad());
    }
    let q = numbers(&ext[..2].join(","), line)?;
    Ok(([xyz[0], xyz[1], xyz[2], rot[2], rot[1], rot[0]], [q[0], q[1]], rest))
}

fn read_rapid(text: &str) -> Result<Vec<ReadBack>, EmitError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let speed_of = |rest: &str| -> Result<f64, EmitError> {
            rest.strip_prefix(",v")
                .and_then(|r| r.split(',').next())
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| reader_error(i, "missing speed"))
        };
        if let Some(rest) = line.strip_prefix("MoveL ").or_else(|| line.strip_prefix("MoveJ ")) {
            let (target, joints, rest) = parse_robtarget(rest, i)?;
            out.push(ReadBack::Move {
                primitive: if line.starts_with("MoveL") { Primitive::MoveL } else { Primitive::MoveJ },
                target,
                via: None,
                joints,
                speed: speed_of(rest)?,
            });
        } else if let Some(rest) = line.strip_prefix("MoveC ") {
            let (via, _, rest) = parse_robtarget(rest, i)?;
            let rest = rest.strip_prefix(',').ok_or_else(|| reader_error(i, "MoveC needs two targets"))?;
            let (target, joints, rest) = parse_robtarget(rest, i)?;
            out.push(ReadBack::Move {
                primitive: Primitive::MoveC,
                target,
                via: Some(via),
                joints,
                speed: speed_of(rest)?,
            });
        } else if line == "SetDO doArc,1;" {
            out.push(ReadBack::ArcOn);
        } else if line == "SetDO doArc,0;" {
            out.push(ReadBack::ArcOff);
        } else if line.starts_with("Move") {
            return Err(reader_error(i, format!("unknown motion '{line}'")));
        }
    }
    Ok(out)
}

fn karel(script: &Script) -> String {
    let name = upper_name(&script.name);
    let count: usize = script.moves().map(|m| 1 + usize::from(m.via.is_some())).sum();
    let mut out = String::new();
    let _ = writeln!(out, "PROGRAM {name}\nVAR\n  p : ARRAY[{count}] OF XYZWPREXT\nBEGIN");
    if let Some(m) = &script.material {
        let _ = writeln!(out, "  -- material {m}");
    }
    let mut k = 0;
    let mut declare = |out: &mut String, pose: &Pose6, q: &[f64; 2]| -> usize {
        k += 1;
        let _ = writeln!(
            out,
            "  p[{k}] = POS({},{},{},{},{},{},'N U T, 0, 0, 0')",
            fmt3(pose[0]),
            fmt3(pose[1]),
            fmt3(pose[2]),
            fmt3(pose[3]),
            fmt3(pose[4]),
            fmt3(pose[5])
        );
        let _ = writeln!(out, "  p[{k}].ext1 = {}", fmt3(q[0]));
        let _ = writeln!(out, "  p[{k}].ext2 = {}", fmt3(q[1]));
        k
    };
    let mut motype = "";
    let mut speed = String::new();
    for st in &script.statements {
        match st {
            Statement::ArcOn => out.push_str("  DOUT[1] = ON\n"),
            Statement::ArcOff => out.push_str("  DOUT[1] = OFF\n"),
            Statement::Sync(g) => {
                let _ = writeln!(out, "  -- SYNC {g}");
            }
            Statement::EndSync => out.push_str("  -- ENDSYNC\n"),
            Statement::Move(m) => {
                let via = m.via.as_ref().map(|v| declare(&mut out, v, &m.joints));
                let target = declare(&mut out, &m.target, &m.joints);
                let kind = match m.primitive {
                    Primitive::MoveL => "LINEAR",
                    Primitive::MoveC => "CIRCULAR",
                    Primitive::MoveJ => "JOINT",
                };
                if kind != motype {
                    let _ = writeln!(out, "  $MOTYPE = {kind}");
                    motype = kind;
                }
                let s = fmt3(m.speed);
                if s != speed {
                    let _ = writeln!(out, "  $SPEED = {s}");
                    speed = s;
                }
                let _ = match via {
                    Some(v) => writeln!(out, "  MOVE TO p[{target}] VIA p[{v}]"),
                    None => writeln!(out, "  MOVE TO p[{target}]"),
                };
            }
        }
    }
    let _ = writeln!(out, "END {name}");
    out
}

fn read_karel(text: &str) -> Result<Vec<ReadBack>, EmitError> {
    use std::collections::HashMap;
    let mut poses: HashMap<usize, Pose6> = HashMap::new();
    let mut ext: HashMap<(usize, u8), f64> = HashMap::new();
    let mut motype = Primitive::MoveL;
    let mut speed = None;
    let mut out = Vec::new();
    let index = |s: &str, line: usize| -> Result<usize, EmitError> {
        s.strip_prefix("p[")
            .and_then(|r| r.split(']').next())
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| reader_error(line, format!("bad position reference '{s}'")))
    };
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix("MOVE TO ") {
            let mut parts = rest.split(" VIA ");
            let target = index(parts.next().unwrap_or(""), i)?;
            let via = parts.next().map(|v| index(v, i)).transpose()?;
            let pose = |k: usize| poses.get(&k).copied().ok_or_else(|| reader_error(i, format!("p[{k}] not set")));
            let q = |k: usize, e: u8| ext.get(&(k, e)).copied().ok_or_else(|| reader_error(i, format!("p[{k}] missing ext{e}")));
            out.push(ReadBack::Move {
                primitive: if via.is_some() { Primitive::MoveC } else { motype },
                target: pose(target)?,
                via: via.map(pose).transpose()?,
                joints: [q(target, 1)?, q(target, 2)?],
                speed: speed.ok_or_else(|| reader_error(i, "$SPEED not set"))?,
            });
        } else if let Some(v) = line.strip_prefix("$SPEED = ") {
            speed = Some(v.parse().map_err(|_| reader_error(i, "bad speed"))?);
        } else if let Some(v) = line.strip_prefix("$MOTYPE = ") {
            motype = match v {
                "LINEAR" => Primitive::MoveL,
                "CIRCULAR" => Primitive::MoveC,
                "JOINT" => Primitive::MoveJ,
                _ => return Err(reader_error(i, format!("unknown motion type '{v}'"))),
            };
        } else if line == "DOUT[1] = ON" {
            out.push(ReadBack::ArcOn);
        } else if line == "DOUT[1] = OFF" {
            out.push(ReadBack::ArcOff);
        } else if line.starts_with("p[") {
            let k = index(line, i)?;
            let (lhs, rhs) = line.split_once(" = ").ok_or_else(|| reader_error(i, "expected assignment"))?;
            if lhs.ends_with(".ext1") || lhs.ends_with(".ext2") {
                let e = if lhs.ends_with('1') { 1 } else { 2 };
                ext.insert((k, e), rhs.parse().map_err(|_| reader_error(i, "bad number"))?);
            } else {
                let body = rhs
                    .strip_prefix("POS(")
                    .and_then(|r| r.split(",'").next())
                    .ok_or_else(|| reader_error(i, "expected POS(...)"))?;
                let v = numbers(body, i)?;
                if v.len() != 6 {
                    return Err(reader_error(i, "POS needs six values"));
                }
                poses.insert(k, [v[0], v[1], v[2], v[3], v[4], v[5]]);
            }
        }
    }
    Ok(out)
}

/// Reads the motion statements of a script the same way the dialect
/// readers report them, for comparison.
pub fn script_readback(script: &Script) -> Vec<ReadBack> {
    script
        .statements
        .iter()
        .filter_map(|st| match st {
            Statement::Move(Move {
                primitive,
                target,
                via,
                joints,
                speed,
                ..
            }) => Some(ReadBack::Move {
                primitive: *primitive,
                target: *target,
                via: *via,
                joints: *joints,
                speed: *speed,
            }),
            Statement::ArcOn => Some(ReadBack::ArcOn),
            Statement::ArcOff => Some(ReadBack::ArcOff),
            _ => None,
        })
        .collect()
}
