use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::KernelError;

/// Grayscale 8-bit image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageBuffer {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize) -> Self {
        ImageBuffer { width, height, pixels: vec![0; width * height] }
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        ImageBuffer { width, height, pixels: vec![value; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        ImageBuffer { width, height, pixels }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Pixel with coordinates clamped to the image (edge replication).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.pixels[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    pub fn psnr(&self, candidate: &ImageBuffer) -> Result<f64, KernelError> {
        if (self.width, self.height) != (candidate.width, candidate.height) {
            return Err(KernelError::Dimension(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, candidate.width, candidate.height
            )));
        }
        Ok(sigrt::quality::psnr(&self.pixels, &candidate.pixels)?)
    }

    /// Binary PGM (P5) encoding.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Self, KernelError> {
        let bad = |m: &str| KernelError::Format(format!("pgm: {m}"));
        let mut fields = Vec::new();
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
                return Err(bad("truncated header"));
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header"))?.to_string());
        }
        if fields[0] != "P5" {
            return Err(bad("not P5"));
        }
        let parse = |s: &str| s.parse::<usize>().map_err(|_| bad("bad number"));
        let (width, height, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
        if maxval != 255 {
            return Err(bad("only maxval 255 is supported"));
        }
        let data = &bytes[pos + 1..];
        if data.len() < width * height {
            return Err(bad("truncated pixel data"));
        }
        Ok(ImageBuffer { width, height, pixels: data[..width * height].to_vec() })
    }

    /// Deterministic synthetic test picture: smooth shading, a few discs and
    /// bars for sharp edges, and mild texture noise.
    pub fn synthetic(seed: u64, width: usize, height: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let discs: Vec<(f64, f64, f64, f64)> = (0..12)
            .map(|_| {
                (
                    rng.random_range(0.0..1.0),
                    rng.random_range(0.0..1.0),
                    rng.random_range(0.03..0.18),
                    rng.random_range(-90.0..90.0),
                )
            })
            .collect();
        let bars = rng.random_range(6.0..14.0);
        let noise: Vec<f64> = (0..width * height).map(|_| rng.random_range(-6.0..6.0)).collect();
        ImageBuffer::from_fn(width, height, |x, y| {
            let u = x as f64 / width as f64;
            let v = y as f64 / height as f64;
            let mut val = 70.0 + 90.0 * u * (1.0 - 0.5 * v) + 30.0 * (6.0 * v).sin();
            for &(cx, cy, r, shade) in &discs {
                if (u - cx).powi(2) + (v - cy).powi(2) < r * r {
                    val += shade;
                }
            }
            if v > 0.7 && ((u * bars).floor() as i64) % 2 == 0 {
                val -= 40.0;
            }
            val += noise[y * width + x];
            val.round().clamp(0.0, 255.0) as u8
        })
    }
}
