//! Shared CSV/PGM emitters for square grids (rate surfaces, heatmaps).

use std::fmt::Display;
use std::io::{self, Write};

pub(crate) fn write_csv_grid<W: Write, T: Display>(
    w: &mut W,
    side: usize,
    values: &[T],
) -> io::Result<()> {
    debug_assert_eq!(values.len(), side * side);
    for row in values.chunks(side) {
        let mut first = true;
        for v in row {
            if !first {
                write!(w, ",")?;
            }
            write!(w, "{v}")?;
            first = false;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Linear scale to the 8-bit range; an all-zero input stays all zero.
pub(crate) fn scale_to_bytes(values: &[u64]) -> Vec<u8> {
    let max = values.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return vec![0; values.len()];
    }
    values
        .iter()
        .map(|&v| ((v as f64 / max as f64) * 255.0).round() as u8)
        .collect()
}

/// Binary 8-bit PGM with a single `#` comment line after the magic.
pub(crate) fn write_pgm<W: Write>(
    w: &mut W,
    width: usize,
    height: usize,
    comment: &str,
    bytes: &[u8],
) -> io::Result<()> {
    debug_assert_eq!(bytes.len(), width * height);
    debug_assert!(!comment.contains('\n'));
    write!(w, "P5\n# {comment}\n{width} {height}\n255\n")?;
    w.write_all(bytes)
}
