//! Writes the wall and cylinder test meshes as binary STL into the given
//! directory (default: current directory).

use waam_core::geometry::write_stl_binary;
use waam_core::shapes::{cylinder, wall};

fn main() -> std::io::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| ".".into());
    std::fs::create_dir_all(&dir)?;
    std::fs::write(format!("{dir}/wall.stl"), write_stl_binary(&wall(100.0, 50.0, 1.0)))?;
    std::fs::write(format!("{dir}/cylinder.stl"), write_stl_binary(&cylinder(20.0, 20.0, 252, 20)))?;
    Ok(())
}
