//! File formats.
//!
//! # Stack file
//!
//! ```text
//! "EITSTK01"                 8 bytes magic
//! header_length              u32 little-endian, byte length of the JSON header
//! header                     UTF-8 JSON object
//! payload                    u16 little-endian DN values, detuning-major,
//!                            then row-major (y outer, x inner)
//! ```
//!
//! The header carries `format_version`, `camera`, `detunings_hz`, `seed`
//! and optional `scene`, `sweep`, `noise` and `geometry` records. Unknown keys
//! are ignored on read.
//!
//! # Field map CSV
//!
//! Header `x_m,y_m,B_gauss,valid`, one row per pixel with y outer. Masked
//! pixels have an empty `B_gauss` and `valid = 0`.
//!
//! # Preview
//!
//! Binary 16-bit PGM (`P5`, maxval 65535, big-endian samples as Netpbm
//! requires). A comment line records the scale bounds.

use std::fs;
use std::io::{self, BufRead, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recon::FieldMap;
use crate::stack_sim::{CameraConfig, ImageStack, NoiseConfig, Scene, StackMetadata, SweepConfig};

pub const STACK_MAGIC: &[u8; 8] = b"EITSTK01";
pub const STACK_FORMAT_VERSION: u32 = 1;
pub const CSV_HEADER: &str = "x_m,y_m,B_gauss,valid";

// Refuse absurd header lengths before allocating.
const MAX_HEADER_LEN: u32 = 256 << 20;

#[derive(Debug, Serialize, Deserialize)]
struct StackHeader {
    format_version: u32,
    camera: CameraConfig,
    detunings_hz: Vec<f64>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scene: Option<Scene>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise: Option<NoiseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    geometry: Option<String>,
}

/// Writes a stack and returns the number of bytes written.
pub fn write_stack<W: Write>(stack: &ImageStack, mut dst: W) -> Result<u64> {
    let meta = stack.metadata();
    let header = StackHeader {
        format_version: STACK_FORMAT_VERSION,
        camera: *stack.camera(),
        detunings_hz: stack.detunings().to_vec(),
        seed: meta.noise.map(|n| n.seed),
        scene: meta.scene,
        sweep: meta.sweep,
        noise: meta.noise,
        geometry: meta.geometry.clone(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::format(format!("header encode: {e}")))?;
    let header_len = u32::try_from(json.len()).map_err(|_| Error::format("header too large"))?;

    dst.write_all(STACK_MAGIC)?;
    dst.write_all(&header_len.to_le_bytes())?;
    dst.write_all(&json)?;
    let mut payload = Vec::with_capacity(stack.samples().len() * 2);
    for dn in stack.samples() {
        payload.extend_from_slice(&dn.to_le_bytes());
    }
    dst.write_all(&payload)?;
    dst.flush()?;
    Ok((STACK_MAGIC.len() + 4 + json.len() + payload.len()) as u64)
}

fn read_exact_or_format<R: Read>(src: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    src.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => Error::format(format!("truncated {what}")),
        _ => Error::Io(e),
    })
}

pub fn read_stack<R: Read>(mut src: R) -> Result<ImageStack> {
    let mut magic = [0u8; 8];
    read_exact_or_format(&mut src, &mut magic, "magic")?;
    if &magic != STACK_MAGIC {
        return Err(Error::format("not an EIT stack file (bad magic)"));
    }
    let mut len = [0u8; 4];
    read_exact_or_format(&mut src, &mut len, "header length")?;
    let header_len = u32::from_le_bytes(len);
    if header_len > MAX_HEADER_LEN {
        return Err(Error::format(format!("header length {header_len} is implausible")));
    }
    let mut json = vec![0u8; header_len as usize];
    read_exact_or_format(&mut src, &mut json, "header")?;
    let header: StackHeader =
        serde_json::from_slice(&json).map_err(|e| Error::format(format!("header parse: {e}")))?;
    if header.format_version != STACK_FORMAT_VERSION {
        return Err(Error::format(format!(
            "unsupported stack format version {}",
            header.format_version
        )));
    }
    header
        .camera
        .validate()
        .map_err(|e| Error::format(format!("header camera: {e}")))?;

    let count = header
        .camera
        .pixel_count()
        .checked_mul(header.detunings_hz.len())
        .ok_or_else(|| Error::format("stack dimensions overflow"))?;
    let mut payload = Vec::new();
    src.read_to_end(&mut payload)?;
    if payload.len() != count * 2 {
        return Err(Error::format(format!(
            "payload holds {} bytes, header declares {}",
            payload.len(),
            count * 2
        )));
    }
    let frames = payload
        .chunks_exact(2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .collect();
    let metadata = StackMetadata {
        scene: header.scene,
        sweep: header.sweep,
        noise: header.noise,
        geometry: header.geometry,
    };
    ImageStack::new(header.detunings_hz, frames, header.camera, metadata)
}

/// Writes `path` through a temporary sibling and a rename, so readers never
/// see a partial file.
pub fn write_atomic<F>(path: &Path, write: F) -> Result<u64>
where
    F: FnOnce(&mut io::BufWriter<fs::File>) -> Result<u64>,
{
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Io(io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name")))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);

    let result = (|| {
        let mut w = io::BufWriter::new(fs::File::create(&tmp)?);
        let n = write(&mut w)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(n)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

pub fn write_stack_file(stack: &ImageStack, path: &Path) -> Result<u64> {
    write_atomic(path, |w| write_stack(stack, w))
}

pub fn read_stack_file(path: &Path) -> Result<ImageStack> {
    read_stack(io::BufReader::new(fs::File::open(path)?))
}

/// Counts bytes passed through to the inner writer.
struct Counting<W> {
    inner: W,
    count: u64,
}

impl<W: Write> Write for Counting<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.count += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

pub fn export_field_csv<W: Write>(map: &FieldMap, dst: W) -> Result<u64> {
    let mut w = Counting { inner: dst, count: 0 };
    writeln!(w, "{CSV_HEADER}")?;
    for iy in 0..map.height {
        for ix in 0..map.width {
            let (x, y) = map.pixel_center(ix, iy);
            match map.get(ix, iy) {
                Some(b) => writeln!(w, "{x:.10e},{y:.10e},{b:.12e},1")?,
                None => writeln!(w, "{x:.10e},{y:.10e},,0")?,
            }
        }
    }
    w.flush()?;
    Ok(w.count)
}

/// Parses a CSV written by [`export_field_csv`]. Dimensions and pitch are
/// recovered from the coordinate columns.
pub fn read_field_csv<R: BufRead>(src: R) -> Result<FieldMap> {
    let mut lines = src.lines();
    let header = lines.next().ok_or_else(|| Error::format("empty CSV"))??;
    if header.trim_end() != CSV_HEADER {
        return Err(Error::format(format!("unexpected CSV header {header:?}")));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::format(format!("malformed CSV row {}: {line:?}", lineno + 2));
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        if fields.len() != 4 {
            return Err(bad());
        }
        let x: f64 = fields[0].parse().map_err(|_| bad())?;
        let y: f64 = fields[1].parse().map_err(|_| bad())?;
        let value = match (fields[2], fields[3]) {
            ("", "0") => None,
            (b, "1") => Some(b.parse::<f64>().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        rows.push((x, y, value));
    }
    if rows.is_empty() {
        return Err(Error::format("CSV has no pixel rows"));
    }

    let width = rows.iter().take_while(|r| r.1 == rows[0].1).count();
    if rows.len() % width != 0 {
        return Err(Error::format("CSV rows do not form a rectangle"));
    }
    let height = rows.len() / width;
    let pitch = if width > 1 {
        rows[1].0 - rows[0].0
    } else if height > 1 {
        rows[width].1 - rows[0].1
    } else {
        0.0
    };
    let mut map = FieldMap::from_values(width, height, pitch, rows.iter().map(|r| r.2).collect())?;
    map.pixel_pitch = pitch;
    let tol = 1e-6 * pitch.abs().max(1e-12);
    for (i, &(x, y, _)) in rows.iter().enumerate() {
        let (ex, ey) = map.pixel_center(i % width, i / width);
        if (x - ex).abs() > tol || (y - ey).abs() > tol {
            return Err(Error::format(format!("CSV row {} has off-grid coordinates", i + 2)));
        }
    }
    Ok(map)
}

pub fn read_field_csv_file(path: &Path) -> Result<FieldMap> {
    read_field_csv(io::BufReader::new(fs::File::open(path)?))
}

pub fn write_field_csv_file(map: &FieldMap, path: &Path) -> Result<u64> {
    write_atomic(path, |w| export_field_csv(map, w))
}

/// Linear `[min, max]` → `[0, 65535]` with clamping; `None` maps to 0.
pub fn export_preview_pgm<W: Write>(
    width: usize,
    height: usize,
    values: &[Option<f64>],
    min: f64,
    max: f64,
    dst: W,
) -> Result<u64> {
    if !(min.is_finite() && max.is_finite() && min < max) {
        return Err(Error::domain(format!("invalid preview scale [{min}, {max}]")));
    }
    if values.len() != width * height {
        return Err(Error::domain("preview value count does not match dimensions"));
    }
    let mut w = Counting { inner: dst, count: 0 };
    write!(w, "P5\n# scale_min={min:e} scale_max={max:e}\n{width} {height}\n65535\n")?;
    let mut body = Vec::with_capacity(values.len() * 2);
    for v in values {
        let level = match v {
            Some(v) if !v.is_nan() => {
                let t = ((v - min) / (max - min)).clamp(0.0, 1.0);
                (t * 65535.0 + 0.5).floor() as u16
            }
            _ => 0,
        };
        body.extend_from_slice(&level.to_be_bytes());
    }
    w.write_all(&body)?;
    w.flush()?;
    Ok(w.count)
}

pub fn export_map_preview<W: Write>(map: &FieldMap, min: f64, max: f64, dst: W) -> Result<u64> {
    let values: Vec<Option<f64>> = map.values().collect();
    export_preview_pgm(map.width, map.height, &values, min, max, dst)
}

/// Preview of one stack frame in DN.
pub fn export_frame_preview<W: Write>(stack: &ImageStack, k: usize, min: f64, max: f64, dst: W) -> Result<u64> {
    if k >= stack.len() {
        return Err(Error::domain(format!("frame {k} out of range")));
    }
    let values: Vec<Option<f64>> = stack.frame(k).iter().map(|&dn| Some(f64::from(dn))).collect();
    export_preview_pgm(stack.width(), stack.height(), &values, min, max, dst)
}
