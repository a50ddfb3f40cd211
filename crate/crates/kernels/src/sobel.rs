//! Sobel edge detection, one task per output row.

use std::sync::Arc;
use std::time::Instant;

use sigrt::{RegionId, Runtime, Significance, Task};

use crate::slots::Slots;
use crate::{ImageBuffer, KernelError, KernelParams, KernelRun};

/// Rows `y-1`, `y`, `y+1` with edge replication.
fn neighbourhood(img: &ImageBuffer, y: usize) -> [&[u8]; 3] {
    [img.row(y.saturating_sub(1)), img.row(y), img.row((y + 1).min(img.height - 1))]
}

/// Row significance: cycles through 0.1, 0.2, ..., 0.9 with stride 7 so
/// neighbouring rows differ and the approximated rows spread over the image.
pub fn row_significance(row: usize) -> f64 {
    0.1 + 0.8 * ((row * 7) % 9) as f64 / 8.0
}

fn check(img: &ImageBuffer) -> Result<(), KernelError> {
    if img.width < 3 || img.height < 3 {
        return Err(KernelError::ImageTooSmall { width: img.width, height: img.height, min: 3 });
    }
    Ok(())
}

/// Full 3x3 gradient magnitude for row `y`.
pub fn row_accurate(img: &ImageBuffer, y: usize, out: &mut [u8]) {
    let [a, b, c] = neighbourhood(img, y);
    let w = img.width;
    for (x, o) in out.iter_mut().enumerate() {
        let (l, r) = (x.saturating_sub(1), (x + 1).min(w - 1));
        let px = |row: &[u8], i: usize| row[i] as i32;
        let gx = px(a, r) - px(a, l) + 2 * (px(b, r) - px(b, l)) + px(c, r) - px(c, l);
        let gy = px(c, l) + 2 * px(c, x) + px(c, r) - px(a, l) - 2 * px(a, x) - px(a, r);
        let mag = ((gx * gx + gy * gy) as f64).sqrt();
        *o = mag.round().min(255.0) as u8;
    }
}

/// Centre column dropped, L1 magnitude instead of the square root.
pub fn row_approximate(img: &ImageBuffer, y: usize, out: &mut [u8]) {
    let [a, b, c] = neighbourhood(img, y);
    let w = img.width;
    for (x, o) in out.iter_mut().enumerate() {
        let (l, r) = (x.saturating_sub(1), (x + 1).min(w - 1));
        let px = |row: &[u8], i: usize| row[i] as i32;
        let gx = px(a, r) - px(a, l) + 2 * (px(b, r) - px(b, l)) + px(c, r) - px(c, l);
        let gy = px(c, l) + px(c, r) - px(a, l) - px(a, r);
        *o = (gx.abs() + gy.abs()).min(255) as u8;
    }
}

/// Runs the filter as one task per row in group `"sobel"`. Dropped rows
/// (only possible under perforation) stay zero.
pub fn run(rt: &mut Runtime, img: &ImageBuffer, params: &KernelParams) -> Result<KernelRun<ImageBuffer>, KernelError> {
    check(img)?;
    let (w, h) = (img.width, img.height);
    let input = Arc::new(img.clone());
    let rows: Slots<Vec<u8>> = Slots::new(h, |_| vec![0u8; w]);
    let src = RegionId::named("sobel.in");
    let dst = RegionId::named("sobel.out");
    let g = rt.init_group("sobel", params.ratio)?;

    let start = Instant::now();
    for y in 0..h {
        let s = if params.uniform { 0.5 } else { row_significance(y) };
        let (a_img, a_rows) = (input.clone(), rows.clone());
        let (b_img, b_rows) = (input.clone(), rows.clone());
        let task = Task::new(g, Significance::new(s)?, y, move |y| {
            row_accurate(&a_img, y, &mut a_rows.lock(y));
        })
        .approx(move |y| row_approximate(&b_img, y, &mut b_rows.lock(y)))
        .reads(src)
        .writes(dst.part(y as u64));
        rt.spawn(task)?;
    }
    rt.wait_group(g, None)?;
    let elapsed = start.elapsed();

    let mut out = ImageBuffer::new(w, h);
    for y in 0..h {
        out.pixels[y * w..(y + 1) * w].copy_from_slice(&rows.lock(y));
    }
    Ok(KernelRun { output: out, elapsed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significance_cycle() {
        let s: Vec<f64> = (0..9).map(row_significance).collect();
        let mut sorted = s.clone();
        sorted.sort_by(f64::total_cmp);
        for (i, v) in sorted.iter().enumerate() {
            assert!((v - (0.1 + 0.1 * i as f64)).abs() < 1e-12);
        }
        assert_eq!(row_significance(9), row_significance(0));
    }

    #[test]
    fn vertical_step_edge() {
        // Columns 0..2 dark, 2.. bright: accurate |gx| = 4*100 → clamps.
        let img = ImageBuffer::from_fn(5, 3, |x, _| if x < 2 { 0 } else { 100 });
        let mut acc = vec![0; 5];
        row_accurate(&img, 1, &mut acc);
        assert_eq!(acc, vec![0, 255, 255, 0, 0]);
        let img = ImageBuffer::from_fn(5, 3, |x, _| if x < 2 { 0 } else { 20 });
        row_accurate(&img, 1, &mut acc);
        assert_eq!(acc, vec![0, 80, 80, 0, 0]);
        let mut apx = vec![0; 5];
        row_approximate(&img, 1, &mut apx);
        // GX's centre column is zero already, so the L1 magnitude matches.
        assert_eq!(apx, vec![0, 80, 80, 0, 0]);
    }

    #[test]
    fn rejects_tiny_images() {
        let mut rt = Runtime::new(1, sigrt::PolicyConfig::Agnostic).unwrap();
        let err = run(&mut rt, &ImageBuffer::new(2, 10), &KernelParams::with_ratio(1.0));
        assert!(matches!(err, Err(KernelError::ImageTooSmall { .. })));
        assert_eq!(rt.spawned(), 0);
    }
}
