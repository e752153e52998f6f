//! Grayscale images: PGM/CSV I/O, normalization, region-of-interest
//! cropping, horizontal concatenation and a synthetic stroke-glyph generator.
//!
//! Formats:
//! - PGM `P2` (ASCII) and `P5` (binary, one byte per pixel), `maxval <= 255`.
//!   Pixels are divided by `maxval` on load; on save `maxval` is 255 and a
//!   pixel `p` is written as `floor(p * 255 + 0.5)`.
//! - CSV: one image row per line, values separated by `,`, decimal point, no
//!   header. Values are written in shortest round-trip form, so a CSV
//!   round trip is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::RngStream;

/// Background intensity of dark-on-light handwriting.
pub const BACKGROUND: f64 = 1.0;
pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const PGM_MAXVAL: u32 = 255;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageGray {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl ImageGray {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidRange(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::ShapeMismatch {
                left: (height, width),
                right: (pixels.len(), 1),
            });
        }
        if let Some((index, &value)) = pixels
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(Error::OutOfRange { index, value });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    fn set(&mut self, row: usize, col: usize, v: f64) {
        self.pixels[row * self.width + col] = v;
    }

    /// `height x width` matrix of the pixels.
    pub fn to_matrix(&self) -> Matrix {
        Matrix::new(self.height, self.width, self.pixels.clone())
            .expect("image invariants imply a valid matrix")
    }

    pub fn from_matrix(m: &Matrix) -> Result<Self> {
        Self::new(m.cols(), m.rows(), m.as_slice().to_vec())
    }

    /// Sub-image of rows `r0..r1` and columns `c0..c1`.
    pub fn crop(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Result<Self> {
        if r0 >= r1 || c0 >= c1 || r1 > self.height || c1 > self.width {
            return Err(Error::InvalidRange(format!(
                "crop rows {r0}..{r1}, cols {c0}..{c1} of {}x{}",
                self.height, self.width
            )));
        }
        let mut pixels = Vec::with_capacity((r1 - r0) * (c1 - c0));
        for r in r0..r1 {
            pixels.extend_from_slice(&self.pixels[r * self.width + c0..r * self.width + c1]);
        }
        Self::new(c1 - c0, r1 - r0, pixels)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DialectSample {
    pub label: String,
    pub image: ImageGray,
    pub source_id: String,
}

impl DialectSample {
    pub fn new(label: impl Into<String>, image: ImageGray, source_id: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if label.is_empty() {
            return Err(Error::InvalidConfig("dialect label must be non-empty".into()));
        }
        Ok(Self {
            label,
            image,
            source_id: source_id.into(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageFormat {
    PgmAscii,
    PgmBinary,
    Csv,
}

impl ImageFormat {
    /// Guess from the extension: `.csv` is CSV, `.pgm` is binary PGM on save
    /// (either PGM flavour loads from the magic number).
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase) {
            Some(ext) if ext == "csv" => Ok(ImageFormat::Csv),
            Some(ext) if ext == "pgm" => Ok(ImageFormat::PgmBinary),
            _ => Err(Error::UnsupportedFormat(format!(
                "cannot infer image format of {}",
                path.display()
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// Foreground is darker than the threshold.
    #[default]
    DarkOnLight,
    LightOnDark,
}

impl Polarity {
    fn is_foreground(self, p: f64, threshold: f64) -> bool {
        match self {
            Polarity::DarkOnLight => p < threshold,
            Polarity::LightOnDark => p > threshold,
        }
    }
}

/// Splits a PGM header into tokens, skipping `#` comments. Returns the four
/// header tokens and the byte offset just past the single whitespace that
/// follows `maxval`.
fn pgm_header(bytes: &[u8]) -> Result<([String; 4], usize)> {
    let mut tokens: Vec<String> = Vec::with_capacity(4);
    let mut i = 0;
    while tokens.len() < 4 {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'#') {
            if bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        if i >= bytes.len() {
            return Err(Error::Parse("truncated PGM header".into()));
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'#' {
            i += 1;
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    if i >= bytes.len() {
        // header without any payload separator
        return Err(Error::Parse("truncated PGM header".into()));
    }
    let tokens: [String; 4] = tokens.try_into().expect("four tokens");
    Ok((tokens, i + 1))
}

fn parse_dim(tok: &str, what: &str) -> Result<usize> {
    tok.parse::<usize>()
        .ok()
        .filter(|&v| v > 0)
        .ok_or_else(|| Error::Parse(format!("invalid PGM {what} `{tok}`")))
}

/// Parses a PGM (`P2` or `P5`) from memory.
pub fn parse_pgm(bytes: &[u8]) -> Result<ImageGray> {
    let (tokens, payload_start) = pgm_header(bytes)?;
    let width = parse_dim(&tokens[1], "width")?;
    let height = parse_dim(&tokens[2], "height")?;
    let maxval: u32 = tokens[3]
        .parse()
        .map_err(|_| Error::Parse(format!("invalid PGM maxval `{}`", tokens[3])))?;
    if maxval == 0 || maxval > PGM_MAXVAL {
        return Err(Error::UnsupportedFormat(format!("PGM maxval {maxval}")));
    }
    let n = width * height;
    let raw: Vec<u32> = match tokens[0].as_str() {
        "P2" => {
            let text = std::str::from_utf8(&bytes[payload_start..])
                .map_err(|_| Error::Parse("P2 payload is not ASCII".into()))?;
            let vals: Vec<u32> = text
                .split_ascii_whitespace()
                .map(|t| {
                    t.parse::<u32>()
                        .map_err(|_| Error::Parse(format!("invalid P2 sample `{t}`")))
                })
                .collect::<Result<_>>()?;
            if vals.len() != n {
                return Err(Error::Parse(format!("expected {n} P2 samples, found {}", vals.len())));
            }
            vals
        }
        "P5" => {
            let payload = &bytes[payload_start..];
            if payload.len() < n {
                return Err(Error::Parse(format!(
                    "expected {n} P5 bytes, found {}",
                    payload.len()
                )));
            }
            payload[..n].iter().map(|&b| b as u32).collect()
        }
        other => return Err(Error::UnsupportedFormat(format!("PGM magic `{other}`"))),
    };
    if let Some(bad) = raw.iter().find(|&&v| v > maxval) {
        return Err(Error::Parse(format!("sample {bad} exceeds maxval {maxval}")));
    }
    let m = maxval as f64;
    ImageGray::new(width, height, raw.into_iter().map(|v| v as f64 / m).collect())
}

/// Parses a comma-separated matrix (no header). Any finite values.
pub fn parse_csv_matrix(text: &str) -> Result<Matrix> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(r, line)| {
            line.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("line {}: invalid value `{t}`", r + 1)))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    if rows.is_empty() {
        return Err(Error::Parse("empty CSV".into()));
    }
    Matrix::from_rows(&rows).map_err(|e| match e {
        Error::ShapeMismatch { .. } => Error::Parse("ragged CSV rows".into()),
        Error::NonFinite(i) => Error::Parse(format!("non-finite CSV value at {i}")),
        other => other,
    })
}

pub fn format_csv_matrix(m: &Matrix) -> String {
    let mut out = String::new();
    for r in 0..m.rows() {
        let line: Vec<String> = m.row(r).iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(m: &Matrix, path: &Path) -> Result<()> {
    fs::write(path, format_csv_matrix(m)).map_err(|e| Error::io(path, e))
}

pub fn read_matrix_csv(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv_matrix(&text)
}

pub fn load_image(path: &Path, format: ImageFormat) -> Result<ImageGray> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        ImageFormat::PgmAscii | ImageFormat::PgmBinary => parse_pgm(&bytes),
        ImageFormat::Csv => {
            let text = String::from_utf8(bytes).map_err(|_| Error::Parse("CSV is not UTF-8".into()))?;
            let m = parse_csv_matrix(&text)?;
            ImageGray::from_matrix(&m).map_err(|e| match e {
                Error::OutOfRange { value, .. } => {
                    Error::UnsupportedFormat(format!("CSV pixel {value} outside [0, 1]"))
                }
                other => other,
            })
        }
    }
}

/// Loads a PGM (either flavour) or CSV image chosen by extension.
pub fn load_image_auto(path: &Path) -> Result<ImageGray> {
    load_image(path, ImageFormat::from_path(path)?)
}

fn to_pgm_level(p: f64) -> u32 {
    (p * PGM_MAXVAL as f64 + 0.5).floor() as u32
}

pub fn encode_image(image: &ImageGray, format: ImageFormat) -> Vec<u8> {
    match format {
        ImageFormat::PgmAscii => {
            let mut out = format!("P2\n{} {}\n{}\n", image.width, image.height, PGM_MAXVAL);
            for r in 0..image.height {
                let row: Vec<String> = (0..image.width)
                    .map(|c| to_pgm_level(image.get(r, c)).to_string())
                    .collect();
                out.push_str(&row.join(" "));
                out.push('\n');
            }
            out.into_bytes()
        }
        ImageFormat::PgmBinary => {
            let mut out =
                format!("P5\n{} {}\n{}\n", image.width, image.height, PGM_MAXVAL).into_bytes();
            out.extend(image.pixels.iter().map(|&p| to_pgm_level(p) as u8));
            out
        }
        ImageFormat::Csv => format_csv_matrix(&image.to_matrix()).into_bytes(),
    }
}

pub fn save_image(image: &ImageGray, path: &Path, format: ImageFormat) -> Result<()> {
    fs::write(path, encode_image(image, format)).map_err(|e| Error::io(path, e))
}

/// `(p - min) / (max - min)`; a constant image maps to all zeros.
pub fn normalize_minmax(image: &ImageGray) -> ImageGray {
    let min = image.pixels.iter().copied().fold(f64::INFINITY, f64::min);
    let max = image.pixels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let pixels = if span > 0.0 {
        image
            .pixels
            .iter()
            .map(|&p| ((p - min) / span).clamp(0.0, 1.0))
            .collect()
    } else {
        vec![0.0; image.pixels.len()]
    };
    ImageGray {
        width: image.width,
        height: image.height,
        pixels,
    }
}

/// Min-max scales an arbitrary matrix into an image (for dumps).
pub fn matrix_to_display_image(m: &Matrix) -> ImageGray {
    let min = m.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
    let max = m.as_slice().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let pixels = m
        .as_slice()
        .iter()
        .map(|&v| if span > 0.0 { ((v - min) / span).clamp(0.0, 1.0) } else { 0.0 })
        .collect();
    ImageGray {
        width: m.cols(),
        height: m.rows(),
        pixels,
    }
}

/// Crops to the tight bounding box of the foreground pixels.
pub fn roi_extract(image: &ImageGray, threshold: f64, polarity: Polarity) -> Result<ImageGray> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidRange(format!("threshold {threshold} not in (0, 1)")));
    }
    let (mut r0, mut r1, mut c0, mut c1) = (usize::MAX, 0, usize::MAX, 0);
    for r in 0..image.height {
        for c in 0..image.width {
            if polarity.is_foreground(image.get(r, c), threshold) {
                r0 = r0.min(r);
                r1 = r1.max(r + 1);
                c0 = c0.min(c);
                c1 = c1.max(c + 1);
            }
        }
    }
    if r0 == usize::MAX {
        return Err(Error::NoForeground(threshold));
    }
    image.crop(r0, r1, c0, c1)
}

/// Places the samples side by side in order. Shorter images are padded with
/// [`BACKGROUND`]; the padding is split evenly, the odd row going to the bottom.
pub fn concat_sequence(samples: &[DialectSample]) -> Result<ImageGray> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples(samples.len()));
    }
    let height = samples.iter().map(|s| s.image.height).max().expect("non-empty");
    let width: usize = samples.iter().map(|s| s.image.width).sum();
    let mut out = ImageGray::filled(width, height, BACKGROUND)?;
    let mut x0 = 0;
    for s in samples {
        let img = &s.image;
        let top = (height - img.height) / 2;
        for r in 0..img.height {
            for c in 0..img.width {
                out.set(top + r, x0 + c, img.get(r, c));
            }
        }
        x0 += img.width;
    }
    Ok(out)
}

/// Draws a 1-pixel Bresenham line of intensity 0.
fn draw_line(img: &mut ImageGray, (r0, c0): (i64, i64), (r1, c1): (i64, i64)) {
    let dc = (c1 - c0).abs();
    let dr = -(r1 - r0).abs();
    let sc = if c0 < c1 { 1 } else { -1 };
    let sr = if r0 < r1 { 1 } else { -1 };
    let (mut r, mut c) = (r0, c0);
    let mut err = dc + dr;
    loop {
        img.set(r as usize, c as usize, 0.0);
        if r == r1 && c == c1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dr {
            err += dr;
            c += sc;
        }
        if e2 <= dc {
            err += dc;
            r += sr;
        }
    }
}

/// Synthetic dark-on-light glyphs made of random straight strokes.
///
/// Glyph `i` uses stream `i` of `seed`, so glyphs do not depend on `count`.
pub fn synth_glyphs(
    seed: u64,
    count: usize,
    side: usize,
    strokes_per_glyph: (usize, usize),
) -> Result<Vec<DialectSample>> {
    let (lo, hi) = strokes_per_glyph;
    if side < 8 {
        return Err(Error::InvalidRange(format!("glyph side {side} < 8")));
    }
    if count < 1 {
        return Err(Error::InvalidRange("glyph count must be >= 1".into()));
    }
    if lo < 1 || lo > hi {
        return Err(Error::InvalidRange(format!("stroke range {lo}..={hi}")));
    }
    let max = side as i64 - 1;
    (0..count)
        .map(|i| {
            let mut rng = RngStream::new(seed, i as u64);
            let mut img = ImageGray::filled(side, side, BACKGROUND)?;
            let strokes = rng.draw_uniform_int(lo as i64, hi as i64)?;
            for _ in 0..strokes {
                let a = (rng.draw_uniform_int(0, max)?, rng.draw_uniform_int(0, max)?);
                let b = (rng.draw_uniform_int(0, max)?, rng.draw_uniform_int(0, max)?);
                draw_line(&mut img, a, b);
            }
            DialectSample::new(format!("synth-{i}"), img, format!("synth:seed={seed}"))
        })
        .collect()
}
