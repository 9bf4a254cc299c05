//! Raw video ingestion (Y4M and headerless planar 4:2:0) and block
//! sampling over 8-bit luma planes.
//!
//! Only the luma plane takes part in motion estimation; chroma is parsed
//! and discarded. 10-bit inputs are rejected rather than converted.

use std::io::{self, Read, Write};

use crate::motion::MotionVector;

#[derive(thiserror::Error, Debug)]
pub enum FrameError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed header at byte {offset}: {reason}")]
    Header { offset: u64, reason: String },
    #[error("unsupported colorspace {colorspace:?} at byte {offset}: need a C420-family 8-bit stream")]
    UnsupportedColorspace { offset: u64, colorspace: String },
    #[error("truncated frame payload at byte {offset}: expected {expected} more bytes, got {got}")]
    Truncated { offset: u64, expected: usize, got: usize },
    #[error("block ({origin_x},{origin_y}) {width}x{height} out of bounds for {frame_width}x{frame_height} frame")]
    BlockOutOfBounds {
        origin_x: u32,
        origin_y: u32,
        width: u32,
        height: u32,
        frame_width: u32,
        frame_height: u32,
    },
}

/// A single 8-bit luminance plane.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LumaFrame {
    width: u32,
    height: u32,
    frame_index: u32,
    samples: Vec<u8>,
}

impl LumaFrame {
    pub fn new(width: u32, height: u32, frame_index: u32, samples: Vec<u8>) -> Self {
        assert!(width >= 1 && height >= 1, "frame dimensions must be positive");
        assert_eq!(samples.len(), width as usize * height as usize, "sample count must be width*height");
        LumaFrame { width, height, frame_index, samples }
    }

    pub fn from_fn(width: u32, height: u32, frame_index: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        let mut samples = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Self::new(width, height, frame_index, samples)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn frame_index(&self) -> u32 {
        self.frame_index
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn sample(&self, x: u32, y: u32) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.samples[y as usize * self.width as usize + x as usize]
    }

    /// Sample with edge-clamp padding for out-of-frame coordinates.
    pub fn sample_clamped(&self, x: i64, y: i64) -> u8 {
        let cx = x.clamp(0, i64::from(self.width) - 1) as usize;
        let cy = y.clamp(0, i64::from(self.height) - 1) as usize;
        self.samples[cy * self.width as usize + cx]
    }

    pub fn row(&self, y: u32) -> &[u8] {
        let w = self.width as usize;
        let start = y as usize * w;
        &self.samples[start..start + w]
    }
}

/// Position and shape of a block inside a frame. Blocks need not be square.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockGeometry {
    pub origin_x: u32,
    pub origin_y: u32,
    pub width: u32,
    pub height: u32,
}

impl BlockGeometry {
    pub fn new(origin_x: u32, origin_y: u32, width: u32, height: u32) -> Self {
        assert!(width >= 1 && height >= 1, "block dimensions must be positive");
        BlockGeometry { origin_x, origin_y, width, height }
    }

    pub fn fits_in(&self, frame_width: u32, frame_height: u32) -> bool {
        u64::from(self.origin_x) + u64::from(self.width) <= u64::from(frame_width)
            && u64::from(self.origin_y) + u64::from(self.height) <= u64::from(frame_height)
    }

    pub fn area(&self) -> u64 {
        u64::from(self.width) * u64::from(self.height)
    }
}

/// A dense copy of an m x n pixel region.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    width: u32,
    height: u32,
    samples: Vec<u8>,
}

impl Block {
    pub fn from_samples(width: u32, height: u32, samples: Vec<u8>) -> Self {
        assert_eq!(samples.len(), width as usize * height as usize);
        Block { width, height, samples }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn row(&self, y: u32) -> &[u8] {
        let w = self.width as usize;
        let start = y as usize * w;
        &self.samples[start..start + w]
    }
}

/// Copy the block at `geom` out of `frame`. The geometry must lie fully
/// inside the frame.
pub fn extract_block(frame: &LumaFrame, geom: BlockGeometry) -> Result<Block, FrameError> {
    if !geom.fits_in(frame.width(), frame.height()) {
        return Err(FrameError::BlockOutOfBounds {
            origin_x: geom.origin_x,
            origin_y: geom.origin_y,
            width: geom.width,
            height: geom.height,
            frame_width: frame.width(),
            frame_height: frame.height(),
        });
    }
    let mut samples = Vec::with_capacity(geom.area() as usize);
    for j in 0..geom.height {
        let row = frame.row(geom.origin_y + j);
        let start = geom.origin_x as usize;
        samples.extend_from_slice(&row[start..start + geom.width as usize]);
    }
    Ok(Block::from_samples(geom.width, geom.height, samples))
}

/// Sample the candidate block at `geom` displaced by `mv` from the
/// reference frame. Out-of-frame coordinates replicate the border pel, so
/// any displacement is valid.
pub fn sample_candidate(reference: &LumaFrame, geom: BlockGeometry, mv: MotionVector) -> Block {
    let base_x = i64::from(geom.origin_x) + i64::from(mv.x);
    let base_y = i64::from(geom.origin_y) + i64::from(mv.y);
    let mut samples = Vec::with_capacity(geom.area() as usize);
    for j in 0..geom.height {
        let sy = base_y + i64::from(j);
        for i in 0..geom.width {
            samples.push(reference.sample_clamped(base_x + i64::from(i), sy));
        }
    }
    Block::from_samples(geom.width, geom.height, samples)
}

fn chroma_plane_len(width: u32, height: u32) -> usize {
    (width as usize).div_ceil(2) * (height as usize).div_ceil(2)
}

/// Byte-counting reader so decode errors can report where they happened.
struct CountingReader<R: Read> {
    inner: R,
    offset: u64,
}

impl<R: Read> CountingReader<R> {
    fn new(inner: R) -> Self {
        CountingReader { inner, offset: 0 }
    }

    fn read_byte(&mut self) -> Result<Option<u8>, FrameError> {
        let mut b = [0u8; 1];
        loop {
            match self.inner.read(&mut b) {
                Ok(0) => return Ok(None),
                Ok(_) => {
                    self.offset += 1;
                    return Ok(Some(b[0]));
                }
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e.into()),
            }
        }
    }

    /// Read exactly `len` bytes; on a short read the error carries how many
    /// arrived.
    fn read_exact_counted(&mut self, buf: &mut [u8]) -> Result<(), FrameError> {
        let mut filled = 0usize;
        while filled < buf.len() {
            match self.inner.read(&mut buf[filled..]) {
                Ok(0) => {
                    return Err(FrameError::Truncated {
                        offset: self.offset,
                        expected: buf.len() - filled,
                        got: filled,
                    })
                }
                Ok(n) => {
                    filled += n;
                    self.offset += n as u64;
                }
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e.into()),
            }
        }
        Ok(())
    }

    fn skip(&mut self, len: usize) -> Result<(), FrameError> {
        let mut remaining = len;
        let mut chunk = [0u8; 4096];
        while remaining > 0 {
            let take = remaining.min(chunk.len());
            self.read_exact_counted(&mut chunk[..take])?;
            remaining -= take;
        }
        Ok(())
    }

    /// Read up to a newline. Returns None on clean EOF before any byte.
    fn read_line(&mut self, max_len: usize) -> Result<Option<String>, FrameError> {
        let start = self.offset;
        let mut line = Vec::new();
        loop {
            match self.read_byte()? {
                None if line.is_empty() => return Ok(None),
                None => {
                    return Err(FrameError::Header {
                        offset: self.offset,
                        reason: "stream ended inside a header line".into(),
                    })
                }
                Some(b'\n') => break,
                Some(b) => {
                    if line.len() >= max_len {
                        return Err(FrameError::Header {
                            offset: start,
                            reason: format!("header line longer than {max_len} bytes"),
                        });
                    }
                    line.push(b);
                }
            }
        }
        String::from_utf8(line).map(Some).map_err(|_| FrameError::Header {
            offset: start,
            reason: "header line is not valid ASCII".into(),
        })
    }
}

const C420_FAMILY: &[&str] = &["420", "420jpeg", "420mpeg2", "420paldv"];

/// Streaming YUV4MPEG2 reader that yields luma planes in display order.
pub struct Y4mReader<R: Read> {
    reader: CountingReader<R>,
    width: u32,
    height: u32,
    next_index: u32,
}

impl<R: Read> Y4mReader<R> {
    /// Parse the stream header. The colorspace must be in the C420 family;
    /// an absent C tag defaults to plain 420.
    pub fn new(inner: R) -> Result<Self, FrameError> {
        let mut reader = CountingReader::new(inner);
        let line = reader
            .read_line(1024)?
            .ok_or_else(|| FrameError::Header { offset: 0, reason: "empty stream".into() })?;
        let mut tags = line.split(' ');
        if tags.next() != Some("YUV4MPEG2") {
            return Err(FrameError::Header {
                offset: 0,
                reason: "missing YUV4MPEG2 magic".into(),
            });
        }
        let mut width = None;
        let mut height = None;
        let mut colorspace = "420".to_string();
        for tag in tags {
            let (key, value) = match tag.chars().next() {
                Some(c) => (c, &tag[1..]),
                None => continue,
            };
            match key {
                'W' => {
                    width = Some(value.parse::<u32>().map_err(|_| FrameError::Header {
                        offset: 0,
                        reason: format!("bad width tag {tag:?}"),
                    })?)
                }
                'H' => {
                    height = Some(value.parse::<u32>().map_err(|_| FrameError::Header {
                        offset: 0,
                        reason: format!("bad height tag {tag:?}"),
                    })?)
                }
                'C' => colorspace = value.to_string(),
                // Frame rate, interlacing, aspect and X comments do not
                // affect luma extraction.
                'F' | 'I' | 'A' | 'X' => {}
                _ => {}
            }
        }
        if !C420_FAMILY.contains(&colorspace.as_str()) {
            return Err(FrameError::UnsupportedColorspace { offset: 0, colorspace });
        }
        let (width, height) = match (width, height) {
            (Some(w), Some(h)) if w >= 1 && h >= 1 => (w, h),
            _ => {
                return Err(FrameError::Header {
                    offset: 0,
                    reason: "header must carry positive W and H tags".into(),
                })
            }
        };
        Ok(Y4mReader { reader, width, height, next_index: 0 })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn next_frame(&mut self) -> Result<Option<LumaFrame>, FrameError> {
        let marker_offset = self.reader.offset;
        let line = match self.reader.read_line(1024)? {
            None => return Ok(None),
            Some(l) => l,
        };
        if line != "FRAME" && !line.starts_with("FRAME ") {
            return Err(FrameError::Header {
                offset: marker_offset,
                reason: format!("expected FRAME marker, found {line:?}"),
            });
        }
        let luma_len = self.width as usize * self.height as usize;
        let mut samples = vec![0u8; luma_len];
        self.reader.read_exact_counted(&mut samples)?;
        self.reader.skip(2 * chroma_plane_len(self.width, self.height))?;
        let frame = LumaFrame::new(self.width, self.height, self.next_index, samples);
        self.next_index += 1;
        Ok(Some(frame))
    }
}

impl<R: Read> Iterator for Y4mReader<R> {
    type Item = Result<LumaFrame, FrameError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame().transpose()
    }
}

/// Headerless planar 4:2:0 reader; dimensions come from the caller.
pub struct RawYuvReader<R: Read> {
    reader: CountingReader<R>,
    width: u32,
    height: u32,
    next_index: u32,
}

impl<R: Read> RawYuvReader<R> {
    pub fn new(inner: R, width: u32, height: u32) -> Self {
        assert!(width >= 1 && height >= 1, "frame dimensions must be positive");
        RawYuvReader { reader: CountingReader::new(inner), width, height, next_index: 0 }
    }

    pub fn next_frame(&mut self) -> Result<Option<LumaFrame>, FrameError> {
        let luma_len = self.width as usize * self.height as usize;
        let mut samples = vec![0u8; luma_len];
        // Probe one byte so a stream ending exactly on a frame boundary is
        // a clean end rather than a truncation error.
        match self.reader.read_byte()? {
            None => return Ok(None),
            Some(b) => samples[0] = b,
        }
        self.reader.read_exact_counted(&mut samples[1..])?;
        self.reader.skip(2 * chroma_plane_len(self.width, self.height))?;
        let frame = LumaFrame::new(self.width, self.height, self.next_index, samples);
        self.next_index += 1;
        Ok(Some(frame))
    }
}

impl<R: Read> Iterator for RawYuvReader<R> {
    type Item = Result<LumaFrame, FrameError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame().transpose()
    }
}

/// Write luma planes as headerless planar 4:2:0 with zero-filled chroma.
/// Re-reading with `RawYuvReader` reproduces the luma exactly.
pub fn write_raw_yuv<W: Write>(frames: &[LumaFrame], w: &mut W) -> io::Result<()> {
    for frame in frames {
        w.write_all(frame.samples())?;
        let chroma = vec![0u8; 2 * chroma_plane_len(frame.width(), frame.height())];
        w.write_all(&chroma)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn y4m_bytes(header: &str, frames: &[&[u8]]) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(header.as_bytes());
        out.push(b'\n');
        for f in frames {
            out.extend_from_slice(b"FRAME\n");
            out.extend_from_slice(f);
        }
        out
    }

    #[test]
    fn y4m_minimal_stream() {
        // 4x4 luma followed by 2x2 U and V planes.
        let mut payload = Vec::new();
        payload.extend((0u8..16).collect::<Vec<_>>());
        payload.extend([128u8; 8]);
        let data = y4m_bytes("YUV4MPEG2 W4 H4 F25:1 C420", &[&payload]);
        let mut reader = Y4mReader::new(&data[..]).unwrap();
        let frame = reader.next_frame().unwrap().unwrap();
        assert_eq!((frame.width(), frame.height()), (4, 4));
        assert_eq!(frame.frame_index(), 0);
        assert_eq!(frame.samples(), (0u8..16).collect::<Vec<_>>().as_slice());
        assert!(reader.next_frame().unwrap().is_none());
    }

    #[test]
    fn y4m_two_frames_indexed_in_order() {
        let payload = vec![7u8; 24];
        let data = y4m_bytes("YUV4MPEG2 W4 H4 F30:1 Ip A1:1 C420jpeg", &[&payload, &payload]);
        let frames: Vec<LumaFrame> = Y4mReader::new(&data[..]).unwrap().map(|f| f.unwrap()).collect();
        assert_eq!(frames.len(), 2);
        assert_eq!(frames[0].frame_index(), 0);
        assert_eq!(frames[1].frame_index(), 1);
    }

    #[test]
    fn y4m_truncated_payload_reports_offset() {
        let short = vec![0u8; 10];
        let data = y4m_bytes("YUV4MPEG2 W4 H4 C420", &[&short]);
        let mut reader = Y4mReader::new(&data[..]).unwrap();
        match reader.next_frame() {
            Err(FrameError::Truncated { offset, expected, got }) => {
                assert_eq!(offset, data.len() as u64);
                assert_eq!(got + expected, 16);
            }
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn y4m_rejects_bad_magic_and_colorspaces() {
        assert!(matches!(
            Y4mReader::new(&b"JUNK W4 H4\n"[..]),
            Err(FrameError::Header { offset: 0, .. })
        ));
        assert!(matches!(
            Y4mReader::new(&b"YUV4MPEG2 W4 H4 C444\n"[..]),
            Err(FrameError::UnsupportedColorspace { .. })
        ));
        // 10-bit input is rejected, not converted.
        assert!(matches!(
            Y4mReader::new(&b"YUV4MPEG2 W4 H4 C420p10\n"[..]),
            Err(FrameError::UnsupportedColorspace { .. })
        ));
    }

    #[test]
    fn y4m_rejects_garbage_frame_marker() {
        let mut data = y4m_bytes("YUV4MPEG2 W4 H4 C420", &[]);
        data.extend_from_slice(b"FRAMX\n");
        let mut reader = Y4mReader::new(&data[..]).unwrap();
        assert!(matches!(reader.next_frame(), Err(FrameError::Header { .. })));
    }

    #[test]
    fn raw_reader_frame_sizes() {
        let data = [9u8; 24];
        let frames: Vec<_> = RawYuvReader::new(&data[..], 4, 4).map(|f| f.unwrap()).collect();
        assert_eq!(frames.len(), 1);

        let data = [9u8; 48];
        let frames: Vec<_> = RawYuvReader::new(&data[..], 4, 4).map(|f| f.unwrap()).collect();
        assert_eq!(frames.len(), 2);
        assert_eq!(frames[1].frame_index(), 1);

        let data = [9u8; 25];
        let mut reader = RawYuvReader::new(&data[..], 4, 4);
        assert!(reader.next_frame().unwrap().is_some());
        assert!(matches!(reader.next_frame(), Err(FrameError::Truncated { .. })));
    }

    #[test]
    fn extract_block_examples() {
        let frame = LumaFrame::from_fn(4, 4, 0, |x, y| (y * 4 + x) as u8);
        let whole = extract_block(&frame, BlockGeometry::new(0, 0, 4, 4)).unwrap();
        assert_eq!(whole.samples(), frame.samples());

        let interior = extract_block(&frame, BlockGeometry::new(1, 1, 2, 2)).unwrap();
        assert_eq!(interior.samples(), &[5, 6, 9, 10]);

        assert!(matches!(
            extract_block(&frame, BlockGeometry::new(3, 3, 2, 2)),
            Err(FrameError::BlockOutOfBounds { .. })
        ));
    }

    #[test]
    fn sample_candidate_clamps_at_left_edge() {
        let frame = LumaFrame::from_fn(4, 4, 0, |x, y| (y * 4 + x) as u8);
        let geom = BlockGeometry::new(0, 0, 2, 2);
        let far_left = sample_candidate(&frame, geom, MotionVector::new(-10, 0));
        // Both columns replicate column 0 of each row.
        assert_eq!(far_left.samples(), &[0, 0, 4, 4]);

        let identity = sample_candidate(&frame, geom, MotionVector::ZERO);
        assert_eq!(identity, extract_block(&frame, geom).unwrap());
    }

    proptest! {
        #[test]
        fn inbounds_candidate_equals_shifted_extract(
            mvx in -2i32..=2,
            mvy in -2i32..=2,
            seed in any::<u64>(),
        ) {
            let mut state = seed | 1;
            let mut next = move || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 33) as u8
            };
            let frame = LumaFrame::from_fn(10, 10, 0, |_, _| next());
            let geom = BlockGeometry::new(3, 3, 4, 4);
            let shifted_geom = BlockGeometry::new(
                (3 + mvx) as u32,
                (3 + mvy) as u32,
                4,
                4,
            );
            let candidate = sample_candidate(&frame, geom, MotionVector::new(mvx, mvy));
            let extracted = extract_block(&frame, shifted_geom).unwrap();
            prop_assert_eq!(candidate, extracted);
        }

        #[test]
        fn raw_round_trip_preserves_luma(
            width in 1u32..12,
            height in 1u32..12,
            n_frames in 1usize..4,
            seed in any::<u64>(),
        ) {
            let mut state = seed | 1;
            let mut next = move || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 33) as u8
            };
            let frames: Vec<LumaFrame> = (0..n_frames)
                .map(|i| LumaFrame::from_fn(width, height, i as u32, |_, _| next()))
                .collect();
            let mut bytes = Vec::new();
            write_raw_yuv(&frames, &mut bytes).unwrap();
            let reread: Vec<LumaFrame> = RawYuvReader::new(&bytes[..], width, height)
                .map(|f| f.unwrap())
                .collect();
            prop_assert_eq!(frames, reread);
        }
    }
}
