//! 8x8 block DCT (JPEG style, level-shifted by 128). Tasks cover one
//! frequency band `u + v = k` for a stripe of block rows; there is no
//! approximate body, so non-accurate bands are dropped and stay zero.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use sigrt::{RegionId, Runtime, Significance, Task};

use crate::slots::Slots;
use crate::{ImageBuffer, KernelError, KernelParams, KernelRun};

pub const BANDS: usize = 15;
/// Block rows per task.
pub const STRIPE_BLOCKS: usize = 8;

/// Transformed image: coefficient `(u, v)` of block `(bx, by)` sits at
/// pixel position `(8*bx + u, 8*by + v)` of a padded plane.
#[derive(Clone, Debug, PartialEq)]
pub struct DctPlanes {
    /// Original image size (before padding).
    pub width: usize,
    pub height: usize,
    /// Padded size, multiples of 8.
    pub padded_width: usize,
    pub padded_height: usize,
    pub coeffs: Vec<f64>,
}

impl DctPlanes {
    pub fn coeff(&self, bx: usize, by: usize, u: usize, v: usize) -> f64 {
        self.coeffs[(by * 8 + v) * self.padded_width + bx * 8 + u]
    }

    /// Inverse transform back to an image of the original size.
    pub fn reconstruct(&self) -> ImageBuffer {
        let mut full = vec![0.0; self.padded_width * self.padded_height];
        for by in 0..self.padded_height / 8 {
            for bx in 0..self.padded_width / 8 {
                let mut block = [0.0; 64];
                for v in 0..8 {
                    for u in 0..8 {
                        block[v * 8 + u] = self.coeff(bx, by, u, v);
                    }
                }
                let px = inverse_block(&block);
                for y in 0..8 {
                    for x in 0..8 {
                        full[(by * 8 + y) * self.padded_width + bx * 8 + x] = px[y * 8 + x];
                    }
                }
            }
        }
        ImageBuffer::from_fn(self.width, self.height, |x, y| {
            (full[y * self.padded_width + x] + 128.0).round().clamp(0.0, 255.0) as u8
        })
    }
}

/// Band significance: 0.95 for the DC band falling linearly to 0.05 for
/// the highest band.
pub fn band_significance(k: usize) -> f64 {
    0.05 + 0.9 * (1.0 - k as f64 / 14.0)
}

fn cos_table() -> &'static [[f64; 8]; 8] {
    static T: OnceLock<[[f64; 8]; 8]> = OnceLock::new();
    T.get_or_init(|| {
        let mut t = [[0.0; 8]; 8];
        for (u, row) in t.iter_mut().enumerate() {
            for (x, c) in row.iter_mut().enumerate() {
                *c = ((2 * x + 1) as f64 * u as f64 * PI / 16.0).cos();
            }
        }
        t
    })
}

fn alpha(u: usize) -> f64 {
    if u == 0 {
        std::f64::consts::FRAC_1_SQRT_2
    } else {
        1.0
    }
}

/// Separable forward DCT of a level-shifted 8x8 block (row-major, `[y*8+x]`).
pub fn forward_block(block: &[f64; 64]) -> [f64; 64] {
    let c = cos_table();
    let mut tmp = [0.0; 64];
    for y in 0..8 {
        for u in 0..8 {
            let s: f64 = (0..8).map(|x| block[y * 8 + x] * c[u][x]).sum();
            tmp[y * 8 + u] = 0.5 * alpha(u) * s;
        }
    }
    let mut out = [0.0; 64];
    for u in 0..8 {
        for v in 0..8 {
            let s: f64 = (0..8).map(|y| tmp[y * 8 + u] * c[v][y]).sum();
            out[v * 8 + u] = 0.5 * alpha(v) * s;
        }
    }
    out
}

/// Inverse of [`forward_block`]; input indexed `[v*8+u]`.
pub fn inverse_block(coeffs: &[f64; 64]) -> [f64; 64] {
    let c = cos_table();
    let mut tmp = [0.0; 64];
    for v in 0..8 {
        for x in 0..8 {
            let s: f64 = (0..8).map(|u| alpha(u) * coeffs[v * 8 + u] * c[u][x]).sum();
            tmp[v * 8 + x] = 0.5 * s;
        }
    }
    let mut out = [0.0; 64];
    for x in 0..8 {
        for y in 0..8 {
            let s: f64 = (0..8).map(|v| alpha(v) * tmp[v * 8 + x] * c[v][y]).sum();
            out[y * 8 + x] = 0.5 * s;
        }
    }
    out
}

/// Level-shifted, edge-padded copy of the image.
fn padded(img: &ImageBuffer) -> (usize, usize, Vec<f64>) {
    let pw = img.width.div_ceil(8) * 8;
    let ph = img.height.div_ceil(8) * 8;
    let mut data = Vec::with_capacity(pw * ph);
    for y in 0..ph {
        for x in 0..pw {
            data.push(img.get(x.min(img.width - 1), y.min(img.height - 1)) as f64 - 128.0);
        }
    }
    (pw, ph, data)
}

fn band(k: usize) -> Vec<(usize, usize)> {
    (0..8).flat_map(|u| (0..8).map(move |v| (u, v))).filter(|&(u, v)| u + v == k).collect()
}

/// Computes band `k` of every block in block rows `rows`, direct form.
fn band_task(plane: &[f64], pw: usize, rows: std::ops::Range<usize>, k: usize) -> Vec<f64> {
    let c = cos_table();
    let pairs = band(k);
    let mut out = Vec::with_capacity(rows.len() * (pw / 8) * pairs.len());
    for by in rows {
        for bx in 0..pw / 8 {
            for &(u, v) in &pairs {
                let mut s = 0.0;
                for y in 0..8 {
                    let row = &plane[(by * 8 + y) * pw + bx * 8..][..8];
                    let mut r = 0.0;
                    for x in 0..8 {
                        r += row[x] * c[u][x];
                    }
                    s += r * c[v][y];
                }
                out.push(0.25 * alpha(u) * alpha(v) * s);
            }
        }
    }
    out
}

/// Bit-reversal-like interleaving so that, among equally significant
/// stripes, the ones picked first are spread over the image.
fn interleaved(n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    if n > 1 {
        let shift = usize::BITS - n.next_power_of_two().trailing_zeros();
        order.sort_by_key(|&i| (i.reverse_bits() >> shift, i));
    }
    order
}

/// Transform in group `"dct"`.
pub fn run(rt: &mut Runtime, img: &ImageBuffer, params: &KernelParams) -> Result<KernelRun<DctPlanes>, KernelError> {
    if img.width == 0 || img.height == 0 {
        return Err(KernelError::ImageTooSmall { width: img.width, height: img.height, min: 1 });
    }
    let (pw, ph, plane) = padded(img);
    let plane = Arc::new(plane);
    let block_rows = ph / 8;
    let stripes = block_rows.div_ceil(STRIPE_BLOCKS);
    let slots: Slots<Option<Vec<f64>>> = Slots::new(stripes * BANDS, |_| None);
    let src = RegionId::named("dct.in");
    let dst = RegionId::named("dct.out");
    let g = rt.init_group("dct", params.ratio)?;

    let start = Instant::now();
    for &st in &interleaved(stripes) {
        let rows = st * STRIPE_BLOCKS..((st + 1) * STRIPE_BLOCKS).min(block_rows);
        for k in 0..BANDS {
            let s = if params.uniform { 0.5 } else { band_significance(k) };
            let (plane, slots) = (plane.clone(), slots.clone());
            let idx = st * BANDS + k;
            let task = Task::new(g, Significance::new(s)?, rows.clone(), move |rows| {
                *slots.lock(idx) = Some(band_task(&plane, pw, rows, k));
            })
            .reads(src)
            .writes(dst.part(idx as u64));
            rt.spawn(task)?;
        }
    }
    rt.wait_group(g, None)?;
    let elapsed = start.elapsed();

    let mut coeffs = vec![0.0; pw * ph];
    for st in 0..stripes {
        for k in 0..BANDS {
            let Some(vals) = slots.lock(st * BANDS + k).take() else { continue };
            let pairs = band(k);
            let mut it = vals.into_iter();
            for by in st * STRIPE_BLOCKS..((st + 1) * STRIPE_BLOCKS).min(block_rows) {
                for bx in 0..pw / 8 {
                    for &(u, v) in &pairs {
                        coeffs[(by * 8 + v) * pw + bx * 8 + u] = it.next().unwrap_or(0.0);
                    }
                }
            }
        }
    }
    Ok(KernelRun {
        output: DctPlanes { width: img.width, height: img.height, padded_width: pw, padded_height: ph, coeffs },
        elapsed,
    })
}

/// Sequential separable reference transform of a whole image.
pub fn reference(img: &ImageBuffer) -> DctPlanes {
    let (pw, ph, plane) = padded(img);
    let mut coeffs = vec![0.0; pw * ph];
    for by in 0..ph / 8 {
        for bx in 0..pw / 8 {
            let mut block = [0.0; 64];
            for y in 0..8 {
                for x in 0..8 {
                    block[y * 8 + x] = plane[(by * 8 + y) * pw + bx * 8 + x];
                }
            }
            let out = forward_block(&block);
            for v in 0..8 {
                for u in 0..8 {
                    coeffs[(by * 8 + v) * pw + bx * 8 + u] = out[v * 8 + u];
                }
            }
        }
    }
    DctPlanes { width: img.width, height: img.height, padded_width: pw, padded_height: ph, coeffs }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_sizes_cover_block() {
        let sizes: Vec<usize> = (0..BANDS).map(|k| band(k).len()).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 64);
        assert_eq!(sizes[0], 1);
        assert_eq!(sizes[7], 8);
        assert_eq!(sizes[14], 1);
    }

    #[test]
    fn significance_range() {
        assert!((band_significance(0) - 0.95).abs() < 1e-12);
        assert!((band_significance(14) - 0.05).abs() < 1e-12);
        assert!((1..BANDS).all(|k| band_significance(k) < band_significance(k - 1)));
    }

    #[test]
    fn dc_of_flat_block() {
        // Flat block of value 200: shifted 72, DC = 8 * 72.
        let out = forward_block(&[72.0; 64]);
        assert!((out[0] - 576.0).abs() < 1e-9);
        assert!(out[1..].iter().all(|c| c.abs() < 1e-9));
    }

    #[test]
    fn inverse_round_trip() {
        let mut b = [0.0; 64];
        for (i, v) in b.iter_mut().enumerate() {
            *v = ((i * 37) % 251) as f64 - 128.0;
        }
        let back = inverse_block(&forward_block(&b));
        for i in 0..64 {
            assert!((back[i] - b[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn direct_band_matches_separable() {
        let img = ImageBuffer::synthetic(5, 16, 8);
        let (pw, _, plane) = padded(&img);
        let r = reference(&img);
        for k in 0..BANDS {
            let vals = band_task(&plane, pw, 0..1, k);
            let mut it = vals.iter();
            for bx in 0..2 {
                for (u, v) in band(k) {
                    assert!((it.next().unwrap() - r.coeff(bx, 0, u, v)).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn interleave_is_permutation() {
        for n in 1..20 {
            let mut o = interleaved(n);
            o.sort();
            assert_eq!(o, (0..n).collect::<Vec<_>>());
        }
        assert_eq!(interleaved(8), vec![0, 4, 2, 6, 1, 5, 3, 7]);
    }
}
