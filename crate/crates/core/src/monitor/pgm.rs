//! Binary PGM (P5) frames and templates.
//!
//! Frames are 16-bit big-endian with an optional `# px_per_mm <value>`
//! header comment. Templates are 8-bit (255 = edge) with the tip stored in a
//! `.anchor` sidecar holding `row col`.

use std::path::Path;

use super::{IRFrame, MonitorError, TorchTemplate};

pub fn write_frame_pgm(frame: &IRFrame) -> Vec<u8> {
    let mut out = format!("P5\n# px_per_mm {}\n{} {}\n65535\n", frame.px_per_mm, frame.width, frame.height).into_bytes();
    for v in &frame.data {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out
}

struct Pgm {
    width: usize,
    height: usize,
    data: Vec<u16>,
    px_per_mm: Option<f64>,
}

fn parse_pgm(bytes: &[u8]) -> Result<Pgm, MonitorError> {
    let bad = |m: &str| MonitorError::Image(m.to_string());
    let mut pos = 0;
    let mut fields: Vec<String> = Vec::new();
    let mut px_per_mm = None;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos >= bytes.len() {
            return Err(bad("truncated header"));
        }
        if bytes[pos] == b'#' {
            let end = bytes[pos..].iter().position(|&b| b == b'\n').map_or(bytes.len(), |e| pos + e);
            let comment = String::from_utf8_lossy(&bytes[pos + 1..end]);
            let mut parts = comment.split_whitespace();
            if parts.next() == Some("px_per_mm") {
                px_per_mm = parts.next().and_then(|v| v.parse().ok());
            }
            pos = end;
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    if fields[0] != "P5" {
        return Err(bad("not a binary PGM (P5)"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (width, height, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if maxval == 0 || maxval > 65535 {
        return Err(bad("maxval out of range"));
    }
    let depth = if maxval > 255 { 2 } else { 1 };
    let raster = bytes.get(pos..).unwrap_or(&[]);
    if raster.len() < width * height * depth {
        return Err(bad("raster truncated"));
    }
    let data = if depth == 2 {
        raster.chunks_exact(2).take(width * height).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    } else {
        raster[..width * height].iter().map(|&b| b as u16).collect()
    };
    Ok(Pgm {
        width,
        height,
        data,
        px_per_mm,
    })
}

/// Reads a frame; `default_px_per_mm` applies when the file does not say.
pub fn read_frame_pgm(bytes: &[u8], default_px_per_mm: f64) -> Result<IRFrame, MonitorError> {
    let pgm = parse_pgm(bytes)?;
    IRFrame::new(pgm.width, pgm.height, pgm.data, pgm.px_per_mm.unwrap_or(default_px_per_mm))
}

/// Writes `<path>` (8-bit PGM) and `<path>.anchor`.
pub fn write_template(template: &TorchTemplate, path: &Path) -> Result<(), MonitorError> {
    let mut out = format!("P5\n{} {}\n255\n", template.width, template.height).into_bytes();
    out.extend(template.bits.iter().map(|&b| if b { 255u8 } else { 0 }));
    std::fs::write(path, out).map_err(|e| MonitorError::Image(format!("{}: {e}", path.display())))?;
    let sidecar = anchor_path(path);
    std::fs::write(&sidecar, format!("{} {}\n", template.anchor.0, template.anchor.1))
        .map_err(|e| MonitorError::Image(format!("{}: {e}", sidecar.display())))
}

pub fn read_template(path: &Path) -> Result<TorchTemplate, MonitorError> {
    let bytes = std::fs::read(path).map_err(|e| MonitorError::Image(format!("{}: {e}", path.display())))?;
    let pgm = parse_pgm(&bytes)?;
    let sidecar = anchor_path(path);
    let text = std::fs::read_to_string(&sidecar).map_err(|e| MonitorError::Image(format!("{}: {e}", sidecar.display())))?;
    let nums: Vec<usize> = text
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| MonitorError::Image("anchor must be 'row col'".into())))
        .collect::<Result<_, _>>()?;
    if nums.len() != 2 {
        return Err(MonitorError::Image("anchor must be 'row col'".into()));
    }
    TorchTemplate::new(pgm.width, pgm.height, pgm.data.iter().map(|&v| v > 127).collect(), (nums[0], nums[1]))
}

fn anchor_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".anchor");
    s.into()
}
