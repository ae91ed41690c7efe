use std::io::Write;
use std::path::Path;

use crate::error::{Error, IoContext, Result};

pub type Rgb = [u8; 3];

pub const BACKGROUND: Rgb = [255, 255, 255];
pub const NEUTRAL: Rgb = [128, 128, 128];
pub const HIGHLIGHT: Rgb = [0, 0, 255];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RenderMode {
    Geometry,
    Colored,
    Highlight(usize),
}

/// An RGB raster, row-major with row 0 at the top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Rgb>,
    pub mode: RenderMode,
}

impl ViewImage {
    pub fn filled(width: usize, height: usize, color: Rgb, mode: RenderMode) -> Self {
        Self {
            width,
            height,
            pixels: vec![color; width * height],
            mode,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn put(&mut self, x: usize, y: usize, c: Rgb) {
        self.pixels[y * self.width + x] = c;
    }

    /// Mask of non-background pixels.
    pub fn silhouette(&self) -> Vec<bool> {
        self.pixels.iter().map(|&p| p != BACKGROUND).collect()
    }

    pub fn mask_of(&self, color: Rgb) -> Vec<bool> {
        self.pixels.iter().map(|&p| p == color).collect()
    }

    /// The image translated by `(dx, dy)` pixels; uncovered pixels get `fill`.
    pub fn shifted(&self, dx: isize, dy: isize, fill: Rgb) -> Self {
        let mut out = Self::filled(self.width, self.height, fill, self.mode);
        for y in 0..self.height {
            for x in 0..self.width {
                let sx = x as isize - dx;
                let sy = y as isize - dy;
                if sx >= 0 && sy >= 0 && (sx as usize) < self.width && (sy as usize) < self.height {
                    out.put(x, y, self.get(sx as usize, sy as usize));
                }
            }
        }
        out
    }

    /// Binary PPM (P6), maxval 255.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.pixels.len() * 3);
        for p in &self.pixels {
            out.extend_from_slice(p);
        }
        out
    }

    pub fn from_ppm(bytes: &[u8], mode: RenderMode) -> Result<Self> {
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
                return Err(Error::Format("truncated PPM header".into()));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        if fields[0] != "P6" {
            return Err(Error::Format(format!("expected P6, found {}", fields[0])));
        }
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::Format(format!("bad PPM header field `{s}`: {e}")))
        };
        let (w, h, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
        if maxval != 255 {
            return Err(Error::Format(format!("unsupported PPM maxval {maxval}")));
        }
        let body = &bytes[pos + 1..];
        if body.len() != w * h * 3 {
            return Err(Error::Format(format!(
                "PPM body has {} bytes, expected {}",
                body.len(),
                w * h * 3
            )));
        }
        let pixels = body.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Ok(Self {
            width: w,
            height: h,
            pixels,
            mode,
        })
    }

    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).at(path)?;
        f.write_all(&self.to_ppm()).at(path)
    }

    pub fn read_ppm(path: &Path, mode: RenderMode) -> Result<Self> {
        Self::from_ppm(&std::fs::read(path).at(path)?, mode)
    }
}

/// Per-class colors for colored renders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorPalette {
    colors: Vec<Rgb>,
}

impl ColorPalette {
    pub fn new(colors: Vec<Rgb>) -> Result<Self> {
        for (i, c) in colors.iter().enumerate() {
            if *c == BACKGROUND || *c == HIGHLIGHT || *c == NEUTRAL {
                return Err(Error::InvalidArgument(format!(
                    "palette color {i} {c:?} collides with a reserved render color"
                )));
            }
            if colors[..i].contains(c) {
                return Err(Error::InvalidArgument(format!("palette color {c:?} repeated")));
            }
        }
        Ok(Self { colors })
    }

    pub fn color(&self, class: usize) -> Option<Rgb> {
        self.colors.get(class).copied()
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn colors(&self) -> &[Rgb] {
        &self.colors
    }
}
