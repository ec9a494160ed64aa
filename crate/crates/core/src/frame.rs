//! Raw 8-bit frames and their on-disk formats.
//!
//! Supported inputs are binary netpbm (`P5` grayscale, `P6` RGB; several
//! images may be concatenated in one file) and raw interleaved GRAY8/RGB24
//! streams described by a flat `key=value` sidecar.

use std::fs;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// An 8-bit image, row-major with interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub samples: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, channels: usize, samples: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::Geometry(format!("channels must be 1 or 3, got {channels}")));
        }
        let expected = width * height * channels;
        if samples.len() != expected {
            return Err(Error::Geometry(format!(
                "{width}x{height}x{channels} needs {expected} samples, got {}",
                samples.len()
            )));
        }
        Ok(Self { width, height, channels, samples })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Self {
        Self { width, height, channels, samples: vec![value; width * height * channels] }
    }

    /// Number of samples, `width * height * channels`.
    pub fn pixel_count(&self) -> usize {
        self.samples.len()
    }

    pub fn same_geometry(&self, other: &Frame) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.samples[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: u8) {
        self.samples[(y * self.width + x) * self.channels + c] = v;
    }

    /// Encodes as binary PGM (1 channel) or PPM (3 channels).
    pub fn to_pnm(&self) -> Vec<u8> {
        let magic = if self.channels == 1 { "P5" } else { "P6" };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.samples);
        out
    }

    pub fn write_pnm(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_pnm())?;
        Ok(())
    }
}

/// Reads every netpbm image in `bytes` (one or more concatenated P5/P6 images).
pub fn parse_pnm(bytes: &[u8]) -> Result<Vec<Frame>> {
    let mut frames = Vec::new();
    let mut pos = 0;
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos >= bytes.len() {
            break;
        }
        let (frame, next) = parse_one_pnm(bytes, pos)?;
        frames.push(frame);
        pos = next;
    }
    if frames.is_empty() {
        return Err(Error::Parse("no netpbm image found".into()));
    }
    Ok(frames)
}

fn parse_one_pnm(bytes: &[u8], start: usize) -> Result<(Frame, usize)> {
    let mut pos = start;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        // skip whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(Error::Parse("truncated netpbm header".into())),
            }
        }
        let tok_start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        fields.push(String::from_utf8_lossy(&bytes[tok_start..pos]).into_owned());
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;

    let channels = match fields[0].as_str() {
        "P5" => 1,
        "P6" => 3,
        other => return Err(Error::Parse(format!("unsupported netpbm magic {other:?}"))),
    };
    let num = |s: &str| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad netpbm field {s:?}")));
    let width = num(&fields[1])?;
    let height = num(&fields[2])?;
    let maxval = num(&fields[3])?;
    if maxval != 255 {
        return Err(Error::Parse(format!("only maxval 255 is supported, got {maxval}")));
    }
    let len = width * height * channels;
    let end = pos + len;
    if end > bytes.len() {
        return Err(Error::Parse("truncated netpbm raster".into()));
    }
    Ok((Frame::new(width, height, channels, bytes[pos..end].to_vec())?, end))
}

/// Geometry sidecar for raw GRAY8/RGB24 streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawDescriptor {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub frames: usize,
}

impl RawDescriptor {
    pub fn parse(text: &str) -> Result<Self> {
        let kv = crate::config::parse_key_values(text)?;
        let get = |key: &str| -> Result<usize> {
            kv.iter()
                .find(|(k, _)| k == key)
                .ok_or_else(|| Error::Parse(format!("descriptor is missing {key:?}")))?
                .1
                .parse()
                .map_err(|_| Error::Parse(format!("descriptor field {key:?} is not an integer")))
        };
        Ok(Self { width: get("width")?, height: get("height")?, channels: get("channels")?, frames: get("frames")? })
    }

    pub fn to_text(&self) -> String {
        format!("width={}\nheight={}\nchannels={}\nframes={}\n", self.width, self.height, self.channels, self.frames)
    }

    pub fn frame_len(&self) -> usize {
        self.width * self.height * self.channels
    }
}

/// Splits a raw interleaved stream into frames.
pub fn parse_raw(bytes: &[u8], desc: &RawDescriptor) -> Result<Vec<Frame>> {
    let len = desc.frame_len();
    if len == 0 || bytes.len() < len * desc.frames {
        return Err(Error::Parse(format!(
            "raw stream holds {} bytes, descriptor needs {}",
            bytes.len(),
            len * desc.frames
        )));
    }
    bytes
        .chunks_exact(len)
        .take(desc.frames)
        .map(|c| Frame::new(desc.width, desc.height, desc.channels, c.to_vec()))
        .collect()
}

/// Loads a frame sequence from disk.
///
/// `path` may be a netpbm file, a directory of netpbm files (sorted by name),
/// or a raw stream whose descriptor lives at `<path>.desc` unless given.
pub fn load_frames(path: &Path, descriptor: Option<&Path>) -> Result<Vec<Frame>> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("pgm" | "ppm" | "pnm")))
            .collect();
        entries.sort();
        let mut frames = Vec::new();
        for p in entries {
            frames.extend(parse_pnm(&fs::read(&p)?)?);
        }
        if frames.is_empty() {
            return Err(Error::Parse(format!("no netpbm files in {}", path.display())));
        }
        return Ok(frames);
    }

    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    if matches!(ext, "pgm" | "ppm" | "pnm") {
        return parse_pnm(&fs::read(path)?);
    }

    let desc_path = match descriptor {
        Some(p) => p.to_path_buf(),
        None => {
            let mut p = path.as_os_str().to_owned();
            p.push(".desc");
            PathBuf::from(p)
        }
    };
    let mut text = String::new();
    BufReader::new(fs::File::open(&desc_path)?).read_to_string(&mut text)?;
    let desc = RawDescriptor::parse(&text)?;
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    parse_raw(&bytes, &desc)
}
