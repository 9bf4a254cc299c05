//! Helpers for driving the `rcme` binary in integration tests.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn rcme() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rcme"))
}

pub fn run_ok(args: &[&str], cwd: &Path) -> Output {
    let output = rcme().args(args).current_dir(cwd).output().expect("spawn rcme");
    assert!(
        output.status.success(),
        "rcme {args:?} failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

pub fn exit_code(args: &[&str], cwd: &Path) -> i32 {
    rcme()
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn rcme")
        .status
        .code()
        .expect("no exit code")
}

fn texture(x: i64, y: i64, seed: u64) -> u8 {
    let mut cell = (x as u64 / 4) ^ ((y as u64 / 4) << 20) ^ seed;
    cell ^= cell << 13;
    cell ^= cell >> 7;
    cell ^= cell << 17;
    let noise = (cell >> 24) as u8;
    let gradient = ((x * 2 + y * 3).rem_euclid(160)) as u8;
    gradient / 2 + noise / 2
}

fn luma_plane(width: u32, height: u32, shift_x: i64, shift_y: i64, seed: u64) -> Vec<u8> {
    let mut plane = Vec::with_capacity(width as usize * height as usize);
    for y in 0..height {
        for x in 0..width {
            let sx = (i64::from(x) + shift_x).clamp(0, i64::from(width) - 1);
            let sy = (i64::from(y) + shift_y).clamp(0, i64::from(height) - 1);
            plane.push(texture(sx, sy, seed));
        }
    }
    plane
}

/// Frames alternate between zero offset and (dx, dy), so consecutive pairs
/// carry opposite global motion.
pub fn translation_y4m(width: u32, height: u32, frames: u32, dx: i64, dy: i64) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(format!("YUV4MPEG2 W{width} H{height} F25:1 Ip A1:1 C420\n").as_bytes());
    let chroma = vec![128u8; (width as usize).div_ceil(2) * (height as usize).div_ceil(2) * 2];
    for k in 0..frames {
        let (ox, oy) = if k % 2 == 0 { (0, 0) } else { (dx, dy) };
        out.extend_from_slice(b"FRAME\n");
        out.extend_from_slice(&luma_plane(width, height, ox, oy, 0xBEEF));
        out.extend_from_slice(&chroma);
    }
    out
}

pub fn static_y4m(width: u32, height: u32, frames: u32) -> Vec<u8> {
    translation_y4m(width, height, frames, 0, 0)
}

pub fn write_clip(dir: &Path, name: &str, bytes: &[u8]) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, bytes).unwrap();
    path
}

pub fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("read {name}: {e}"))
}

/// Parse a CSV body (header + rows) into field vectors.
pub fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect::<Vec<_>>())
        .collect();
    (header, rows)
}

pub fn field<'a>(header: &[String], row: &'a [String], name: &str) -> &'a str {
    let idx = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    &row[idx]
}
