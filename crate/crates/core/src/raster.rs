//! Complex rasters, directional phase differencing, teacher-frame sampling,
//! scan serialization and label maps.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;

use crate::cxnum::CVector;
use crate::error::{Error, Result};
use crate::seed;

const RASTER_MAGIC: &[u8; 4] = b"CXR1";

/// Aspect classes, in teacher-row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Aspect {
    North = 0,
    East = 1,
    South = 2,
    West = 3,
    Flat = 4,
}

impl Aspect {
    pub const COUNT: usize = 5;
    pub const ALL: [Aspect; 5] = [Aspect::North, Aspect::East, Aspect::South, Aspect::West, Aspect::Flat];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Aspect::North => "north",
            Aspect::East => "east",
            Aspect::South => "south",
            Aspect::West => "west",
            Aspect::Flat => "flat",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name().eq_ignore_ascii_case(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Range; differences along rows, scans rightward.
    EastWest,
    /// Azimuth; differences along columns, scans downward.
    NorthSouth,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::EastWest => "ew",
            Direction::NorthSouth => "ns",
        }
    }
}

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub row: usize,
    pub col: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Rect {
    pub fn new(row: usize, col: usize, rows: usize, cols: usize) -> Self {
        Self { row, col, rows, cols }
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        row >= self.row && row < self.row + self.rows && col >= self.col && col < self.col + self.cols
    }

    pub fn fits_in(&self, width: usize, height: usize) -> bool {
        self.rows > 0 && self.cols > 0 && self.row + self.rows <= height && self.col + self.cols <= width
    }
}

/// Labeled teacher rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TeacherArea {
    pub rect: Rect,
    pub class: Aspect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexRaster {
    width: usize,
    height: usize,
    pixels: Vec<Complex64>,
}

impl ComplexRaster {
    pub fn new(width: usize, height: usize, pixels: Vec<Complex64>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::dim(
                "ComplexRaster::new",
                format!("{} pixels for {width}x{height}", pixels.len()),
            ));
        }
        if let Some(i) = pixels.iter().position(|p| !p.re.is_finite() || !p.im.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite pixel at row {}, col {}",
                i / width,
                i % width
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.pixels[row * self.width + col]
    }

    pub fn pixels(&self) -> &[Complex64] {
        &self.pixels
    }

    /// Multiplies every pixel by `c`.
    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&p| p * c).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut pixels = Vec::with_capacity(self.pixels.len());
        for c in 0..self.width {
            for r in 0..self.height {
                pixels.push(self.get(r, c));
            }
        }
        Self {
            width: self.height,
            height: self.width,
            pixels,
        }
    }

    /// `CXR1`: magic, `u32` width and height, then little-endian `f32`
    /// (re, im) pairs, row-major.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let mut buf = Vec::with_capacity(12 + 8 * self.pixels.len());
        buf.extend_from_slice(RASTER_MAGIC);
        buf.extend_from_slice(&(self.width as u32).to_le_bytes());
        buf.extend_from_slice(&(self.height as u32).to_le_bytes());
        for p in &self.pixels {
            buf.extend_from_slice(&(p.re as f32).to_le_bytes());
            buf.extend_from_slice(&(p.im as f32).to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut head = [0u8; 12];
        r.read_exact(&mut head)?;
        if &head[..4] != RASTER_MAGIC {
            return Err(Error::format("CXR1", "bad magic"));
        }
        let width = u32::from_le_bytes(head[4..8].try_into().unwrap()) as usize;
        let height = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        if body.len() != width * height * 8 {
            return Err(Error::format(
                "CXR1",
                format!("expected {} payload bytes, found {}", width * height * 8, body.len()),
            ));
        }
        let pixels = body
            .chunks_exact(8)
            .map(|c| {
                Complex64::new(
                    f32::from_le_bytes(c[..4].try_into().unwrap()) as f64,
                    f32::from_le_bytes(c[4..].try_into().unwrap()) as f64,
                )
            })
            .collect();
        Self::new(width, height, pixels)
    }
}

/// Directional phase difference with the amplitude kept.
///
/// Pixel `(i, j)` becomes `|r(i,j)| · exp(j·arg(r(i,j+1) · conj r(i,j)))` for
/// east-west (row neighbour below for north-south). The last column (row)
/// repeats the previous difference so the shape is unchanged.
pub fn phase_difference(r: &ComplexRaster, direction: Direction) -> Result<ComplexRaster> {
    let (w, h) = (r.width, r.height);
    match direction {
        Direction::EastWest if w < 2 => {
            return Err(Error::invalid(format!("east-west difference needs width >= 2, got {w}")))
        }
        Direction::NorthSouth if h < 2 => {
            return Err(Error::invalid(format!("north-south difference needs height >= 2, got {h}")))
        }
        _ => {}
    }
    let diff_at = |i: usize, j: usize| -> f64 {
        match direction {
            Direction::EastWest => (r.get(i, j + 1) * r.get(i, j).conj()).arg(),
            Direction::NorthSouth => (r.get(i + 1, j) * r.get(i, j).conj()).arg(),
        }
    };
    ComplexRaster::from_fn(w, h, |i, j| {
        let (di, dj) = match direction {
            Direction::EastWest => (i, j.min(w - 2)),
            Direction::NorthSouth => (i.min(h - 2), j),
        };
        Complex64::from_polar(r.get(i, j).norm(), diff_at(di, dj))
    })
}

/// A teacher frame. East-west frames are `n_w` rows by `n_t` columns;
/// north-south frames are `n_t` rows by `n_w` columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frame {
    pub origin: (usize, usize),
    pub rows: usize,
    pub cols: usize,
    pub direction: Direction,
}

impl Frame {
    pub fn new(origin: (usize, usize), n_w: usize, n_t: usize, direction: Direction) -> Self {
        let (rows, cols) = frame_shape(n_w, n_t, direction);
        Self {
            origin,
            rows,
            cols,
            direction,
        }
    }

    pub fn rect(&self) -> Rect {
        Rect::new(self.origin.0, self.origin.1, self.rows, self.cols)
    }
}

pub fn frame_shape(n_w: usize, n_t: usize, direction: Direction) -> (usize, usize) {
    match direction {
        Direction::EastWest => (n_w, n_t),
        Direction::NorthSouth => (n_t, n_w),
    }
}

/// Draws `per_area` frames uniformly (with replacement) from each area, in
/// area order. Frame positions are fully inside their area.
pub fn sample_frames(
    diff: &ComplexRaster,
    areas: &[TeacherArea],
    per_area: usize,
    n_w: usize,
    n_t: usize,
    direction: Direction,
    seed: u64,
) -> Result<Vec<(Frame, Aspect)>> {
    if n_w == 0 || n_t == 0 {
        return Err(Error::invalid("frame dimensions must be positive"));
    }
    let (rows, cols) = frame_shape(n_w, n_t, direction);
    for (id, a) in areas.iter().enumerate() {
        if !a.rect.fits_in(diff.width, diff.height) {
            return Err(Error::invalid(format!("teacher area {id} ({}) lies outside the raster", a.class.name())));
        }
        if a.rect.rows < rows || a.rect.cols < cols {
            return Err(Error::invalid(format!(
                "teacher area {id} ({}) is {}x{}, smaller than the {rows}x{cols} frame",
                a.class.name(),
                a.rect.rows,
                a.rect.cols
            )));
        }
    }
    let mut rng = seed::rng(seed);
    let mut out = Vec::with_capacity(areas.len() * per_area);
    for a in areas {
        for _ in 0..per_area {
            let r = a.rect.row + rng.random_range(0..=a.rect.rows - rows);
            let c = a.rect.col + rng.random_range(0..=a.rect.cols - cols);
            out.push((
                Frame {
                    origin: (r, c),
                    rows,
                    cols,
                    direction,
                },
                a.class,
            ));
        }
    }
    Ok(out)
}

/// Serializes a frame: east-west frames emit their columns left to right
/// (each read top to bottom); north-south frames emit their rows top to
/// bottom (each read left to right).
pub fn frame_to_sequence(diff: &ComplexRaster, frame: &Frame) -> Result<Vec<CVector>> {
    if !frame.rect().fits_in(diff.width, diff.height) {
        return Err(Error::invalid(format!("frame {:?} outside {}x{} raster", frame, diff.width, diff.height)));
    }
    let (r0, c0) = frame.origin;
    let seq = match frame.direction {
        Direction::EastWest => (0..frame.cols)
            .map(|j| CVector::from_vec((0..frame.rows).map(|i| diff.get(r0 + i, c0 + j)).collect()))
            .collect::<Result<Vec<_>>>()?,
        Direction::NorthSouth => (0..frame.rows)
            .map(|i| CVector::from_vec((0..frame.cols).map(|j| diff.get(r0 + i, c0 + j)).collect()))
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(seq)
}

/// Streaming form of [`scan_sequence`]: visits each window in scan order
/// with its assigned (center) pixel.
pub fn scan_windows(
    diff: &ComplexRaster,
    direction: Direction,
    n_w: usize,
    mut visit: impl FnMut((usize, usize), &[Complex64]) -> Result<()>,
) -> Result<()> {
    check_scan(diff, direction, n_w)?;
    let half = n_w / 2;
    let mut buf = vec![Complex64::new(0.0, 0.0); n_w];
    match direction {
        Direction::EastWest => {
            for band in 0..=diff.height - n_w {
                for c in 0..diff.width {
                    for (k, b) in buf.iter_mut().enumerate() {
                        *b = diff.get(band + k, c);
                    }
                    visit((band + half, c), &buf)?;
                }
            }
        }
        Direction::NorthSouth => {
            for band in 0..=diff.width - n_w {
                for r in 0..diff.height {
                    buf.copy_from_slice(&diff.pixels[r * diff.width + band..r * diff.width + band + n_w]);
                    visit((r, band + half), &buf)?;
                }
            }
        }
    }
    Ok(())
}

fn check_scan(diff: &ComplexRaster, direction: Direction, n_w: usize) -> Result<()> {
    let extent = match direction {
        Direction::EastWest => diff.height,
        Direction::NorthSouth => diff.width,
    };
    if n_w == 0 || n_w > extent {
        return Err(Error::invalid(format!(
            "scan window {n_w} does not fit the {} extent {extent}",
            direction.name()
        )));
    }
    Ok(())
}

/// Number of steps a full scan takes.
pub fn scan_len(width: usize, height: usize, direction: Direction, n_w: usize) -> usize {
    match direction {
        Direction::EastWest => (height + 1).saturating_sub(n_w) * width,
        Direction::NorthSouth => (width + 1).saturating_sub(n_w) * height,
    }
}

/// One continuous scan of the whole raster. East-west: a vertical `n_w`
/// window sweeps each row band left to right, then the band moves down a
/// pixel. North-south: a horizontal window sweeps each column band top to
/// bottom, then moves right. Each step is assigned to the window center.
pub fn scan_sequence(
    diff: &ComplexRaster,
    direction: Direction,
    n_w: usize,
) -> Result<(Vec<CVector>, Vec<(usize, usize)>)> {
    check_scan(diff, direction, n_w)?;
    let n = scan_len(diff.width, diff.height, direction, n_w);
    let mut seq = Vec::with_capacity(n);
    let mut coords = Vec::with_capacity(n);
    scan_windows(diff, direction, n_w, |rc, w| {
        seq.push(CVector::from_vec(w.to_vec())?);
        coords.push(rc);
        Ok(())
    })?;
    Ok((seq, coords))
}

/// Per-pixel output vectors; `None` where no scan step landed.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputGrid {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<Option<CVector>>,
}

impl OutputGrid {
    pub fn get(&self, row: usize, col: usize) -> Option<&CVector> {
        self.cells[row * self.width + col].as_ref()
    }
}

/// Places scan outputs back onto the pixel grid.
pub fn outputs_to_map(
    outputs: Vec<CVector>,
    coords: &[(usize, usize)],
    width: usize,
    height: usize,
) -> Result<OutputGrid> {
    if outputs.len() != coords.len() {
        return Err(Error::dim(
            "outputs_to_map",
            format!("{} outputs for {} coordinates", outputs.len(), coords.len()),
        ));
    }
    let mut cells: Vec<Option<CVector>> = vec![None; width * height];
    for (y, &(r, c)) in outputs.into_iter().zip(coords) {
        if r >= height || c >= width {
            return Err(Error::invalid(format!("coordinate ({r}, {c}) outside {width}x{height}")));
        }
        let cell = &mut cells[r * width + c];
        if cell.is_some() {
            return Err(Error::invalid(format!("duplicate scan coordinate ({r}, {c})")));
        }
        *cell = Some(y);
    }
    Ok(OutputGrid { width, height, cells })
}

/// Per-pixel class grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u8>,
}

impl LabelMap {
    /// Excluded from evaluation (water).
    pub const MASKED: u8 = 255;
    /// Not covered by a classifier.
    pub const MISSING: u8 = 254;

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            labels: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::dim("LabelMap::from_vec", format!("{} labels for {width}x{height}", labels.len())));
        }
        if let Some(bad) = labels
            .iter()
            .find(|&&l| (l as usize) >= Aspect::COUNT && l != Self::MASKED && l != Self::MISSING)
        {
            return Err(Error::invalid(format!("invalid label value {bad}")));
        }
        Ok(Self { width, height, labels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.labels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: u8) {
        self.labels[row * self.width + col] = v;
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn class_at(&self, row: usize, col: usize) -> Option<Aspect> {
        Aspect::from_index(self.get(row, col) as usize)
    }

    /// Binary PGM (P5), one byte per pixel.
    pub fn write_pgm(&self, mut w: impl Write) -> Result<()> {
        let mut buf = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        buf.extend_from_slice(&self.labels);
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_pgm(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        // Header: magic, width, height, maxval, each separated by whitespace.
        let mut fields = Vec::with_capacity(4);
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::format("PGM", "truncated header"));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        pos += 1;
        if fields[0] != "P5" {
            return Err(Error::format("PGM", format!("unsupported magic {}", fields[0])));
        }
        let parse = |s: &str| s.parse::<usize>().map_err(|_| Error::format("PGM", format!("bad number {s}")));
        let (width, height, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
        if maxval > 255 {
            return Err(Error::format("PGM", "only 8-bit maps are supported"));
        }
        let body = bytes.get(pos..).unwrap_or_default();
        if body.len() != width * height {
            return Err(Error::format("PGM", format!("expected {} pixels, found {}", width * height, body.len())));
        }
        Self::from_vec(width, height, body.to_vec())
    }
}
