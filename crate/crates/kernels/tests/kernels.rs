use sigrt::quality::{group_stats, relative_error};
use sigrt::{BufferSize, ExecutionDecision, PolicyConfig, Runtime};
use sigrt_kernels::alternating::{self, Particles};
use sigrt_kernels::jacobi::{self, JacobiParams, JacobiSystem};
use sigrt_kernels::kmeans::{self, KmeansInput};
use sigrt_kernels::mc::{self, Boundary, McConfig};
use sigrt_kernels::{dct, sobel, Benchmark, DegreePreset, ImageBuffer, KernelParams, Output, RunSpec};

fn policies() -> Vec<PolicyConfig> {
    vec![
        PolicyConfig::Agnostic,
        PolicyConfig::gtb(BufferSize::Bounded(32)),
        PolicyConfig::gtb(BufferSize::Max),
        PolicyConfig::lqh(),
        PolicyConfig::Perforation,
    ]
}

fn rt(policy: PolicyConfig) -> Runtime {
    Runtime::new(4, policy).unwrap()
}

// Straightforward Sobel written from the textbook kernels.
fn sobel_reference(img: &ImageBuffer) -> ImageBuffer {
    let px = |x: i64, y: i64| img.get_clamped(x as isize, y as isize) as f64;
    ImageBuffer::from_fn(img.width, img.height, |x, y| {
        let (x, y) = (x as i64, y as i64);
        let gx = px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1)
            - px(x - 1, y - 1)
            - 2.0 * px(x - 1, y)
            - px(x - 1, y + 1);
        let gy = px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1)
            - px(x - 1, y - 1)
            - 2.0 * px(x, y - 1)
            - px(x + 1, y - 1);
        (gx * gx + gy * gy).sqrt().round().min(255.0) as u8
    })
}

#[test]
fn sobel_full_ratio_is_bit_exact_under_every_policy() {
    let img = ImageBuffer::synthetic(7, 96, 80);
    let expect = sobel_reference(&img);
    for p in policies() {
        let out = sobel::run(&mut rt(p), &img, &KernelParams::with_ratio(1.0)).unwrap().output;
        assert_eq!(out, expect, "{p}");
    }
}

#[test]
fn sobel_flat_image_has_no_edges() {
    let img = ImageBuffer::filled(40, 30, 117);
    for p in policies() {
        for r in [0.0, 0.3, 0.8] {
            let out = sobel::run(&mut rt(p), &img, &KernelParams::with_ratio(r)).unwrap().output;
            assert!(out.pixels.iter().all(|&v| v == 0), "{p} r={r}");
        }
    }
}

#[test]
fn sobel_mild_beats_aggressive() {
    let img = ImageBuffer::synthetic(1, 512, 512);
    let mut rt = rt(PolicyConfig::gtb(BufferSize::Max));
    let reference = sobel::run(&mut rt, &img, &KernelParams::with_ratio(1.0)).unwrap().output;
    let mild = sobel::run(&mut rt, &img, &KernelParams::with_ratio(0.8)).unwrap().output;
    let aggr = sobel::run(&mut rt, &img, &KernelParams::with_ratio(0.0)).unwrap().output;
    let (pm, pa) = (reference.psnr(&mild).unwrap(), reference.psnr(&aggr).unwrap());
    assert!(pm.is_finite() && pa.is_finite());
    assert!(pm > pa, "{pm} vs {pa}");
}

#[test]
fn sobel_preset_accuracy_counts() {
    let img = ImageBuffer::synthetic(2, 64, 512);
    let mut rt = rt(PolicyConfig::gtb(BufferSize::Max));
    sobel::run(&mut rt, &img, &KernelParams::with_ratio(0.35)).unwrap();
    let recs = rt.take_records();
    assert_eq!(recs.len(), 512);
    assert_eq!(recs.iter().filter(|r| r.decision.is_accurate()).count(), 180);
}

#[test]
fn dct_full_ratio_matches_separable_reference() {
    let img = ImageBuffer::synthetic(3, 72, 40);
    let expect = dct::reference(&img);
    for p in policies() {
        let out = dct::run(&mut rt(p), &img, &KernelParams::with_ratio(1.0)).unwrap().output;
        assert_eq!(out.coeffs.len(), expect.coeffs.len());
        let worst = out.coeffs.iter().zip(&expect.coeffs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-9, "{p}: {worst}");
        assert_eq!(out.reconstruct(), img, "{p}");
    }
}

#[test]
fn dct_pads_odd_sizes() {
    let img = ImageBuffer::synthetic(4, 13, 10);
    let out = dct::run(&mut rt(PolicyConfig::Agnostic), &img, &KernelParams::with_ratio(1.0)).unwrap().output;
    assert_eq!((out.padded_width, out.padded_height), (16, 16));
    assert_eq!(out.reconstruct(), img);
}

#[test]
fn dct_flat_image_needs_only_dc() {
    let img = ImageBuffer::filled(64, 64, 200);
    for r in [0.05, 0.1, 0.4] {
        let out = dct::run(&mut rt(PolicyConfig::gtb(BufferSize::Max)), &img, &KernelParams::with_ratio(r)).unwrap().output;
        assert_eq!(out.reconstruct(), img, "r={r}");
        for by in 0..8 {
            for bx in 0..8 {
                for v in 0..8 {
                    for u in 0..8 {
                        let c = out.coeff(bx, by, u, v);
                        if u + v > 0 {
                            assert!(c.abs() < 1e-9);
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn dct_aggressive_keeps_low_bands() {
    let img = ImageBuffer::synthetic(5, 512, 512);
    let mut rt = rt(PolicyConfig::gtb(BufferSize::Max));
    let out = dct::run(&mut rt, &img, &KernelParams::with_ratio(0.1)).unwrap().output;
    let recs = rt.take_records();
    // Every accurate task is at least as significant as every dropped one.
    let min_acc = recs.iter().filter(|r| r.decision.is_accurate()).map(|r| r.significance.value()).fold(1.0, f64::min);
    let max_drop = recs.iter().filter(|r| !r.decision.is_accurate()).map(|r| r.significance.value()).fold(0.0, f64::max);
    assert!(min_acc >= max_drop);
    assert!(recs.iter().all(|r| r.decision != ExecutionDecision::Approximate));
    let psnr = img.psnr(&out.reconstruct()).unwrap();
    assert!(psnr > 20.0, "reconstruction psnr {psnr}");
}

#[test]
fn mc_constant_boundary_is_exact_under_drops() {
    let cfg = McConfig { boundary: Boundary::Constant(1.0), walks: 16, ..McConfig::new(16) };
    for p in policies() {
        for r in [0.5, 1.0] {
            let out = mc::run(&mut rt(p), &cfg, &KernelParams::with_ratio(r)).unwrap().output;
            assert!(out.values().unwrap().iter().all(|&v| v == 1.0), "{p} r={r}");
        }
    }
}

#[test]
fn mc_is_independent_of_schedule() {
    let cfg = McConfig { walks: 32, ..McConfig::new(16) };
    let params = KernelParams::with_ratio(0.5).seed(11);
    let a = mc::run(&mut Runtime::new(1, PolicyConfig::gtb(BufferSize::Max)).unwrap(), &cfg, &params).unwrap().output;
    let b = mc::run(&mut Runtime::new(6, PolicyConfig::gtb(BufferSize::Max)).unwrap(), &cfg, &params).unwrap().output;
    assert_eq!(a, b);
}

#[test]
fn mc_degrades_with_ratio() {
    let cfg = McConfig::new(32);
    let mut rt = rt(PolicyConfig::gtb(BufferSize::Max));
    let run = |rt: &mut Runtime, r: f64| mc::run(rt, &cfg, &KernelParams::with_ratio(r).seed(5)).unwrap().output;
    let acc = run(&mut rt, 1.0).values().unwrap();
    let errs: Vec<f64> = [0.8, 0.5].iter().map(|&r| relative_error(&acc, &run(&mut rt, r).values().unwrap()).unwrap()).collect();
    assert!(errs[0] > 0.0 && errs[0] <= errs[1], "{errs:?}");
    assert!(errs[1] < 10.0, "{errs:?}");
    // The accurate run is close to the exact harmonic solution.
    let out = run(&mut rt, 1.0);
    let exact: Vec<f64> = out.points.iter().map(|&(x, y)| Boundary::Harmonic.value(x, y)).collect();
    assert!(relative_error(&exact, &acc).unwrap() < 3.0);
}

// Plain Lloyd iterations with the same seeding and stopping rule.
fn kmeans_reference(input: &KmeansInput, k: usize, seed: u64) -> (Vec<f64>, Vec<u32>, usize) {
    let (n, d) = (input.n, input.d);
    let mut cen = kmeans::init_centroids(input, k, seed);
    let mut labels = vec![u32::MAX; n];
    let chunk = kmeans::chunk_size(n, 4);
    for it in 1..=kmeans::MAX_ITERATIONS {
        let mut changed = 0;
        for (i, label) in labels.iter_mut().enumerate() {
            let p = input.point(i);
            let mut best = (f64::INFINITY, 0);
            for j in 0..k {
                let dist = kmeans::sq_euclidean(p, &cen[j * d..(j + 1) * d]);
                if dist < best.0 {
                    best = (dist, j as u32);
                }
            }
            changed += usize::from(*label != best.1);
            *label = best.1;
        }
        // Sum per chunk, then across chunks, to mirror the task split.
        let mut sums = vec![0.0; k * d];
        let mut counts = vec![0u64; k];
        for c in 0..n.div_ceil(chunk) {
            let mut cs = vec![0.0; k * d];
            let end = ((c + 1) * chunk).min(n);
            for (i, &l) in labels.iter().enumerate().take(end).skip(c * chunk) {
                let l = l as usize;
                counts[l] += 1;
                for (s, x) in cs[l * d..(l + 1) * d].iter_mut().zip(input.point(i)) {
                    *s += x;
                }
            }
            for (s, x) in sums.iter_mut().zip(&cs) {
                *s += x;
            }
        }
        for j in 0..k {
            assert!(counts[j] > 0);
            for v in &mut sums[j * d..(j + 1) * d] {
                *v /= counts[j] as f64;
            }
        }
        cen = sums;
        if (changed as f64) < n as f64 / 1000.0 {
            return (cen, labels, it);
        }
    }
    panic!("reference did not converge");
}

#[test]
fn kmeans_full_ratio_matches_reference() {
    let input = KmeansInput::gaussian_mixture(8, 4000, 16, 4);
    let (cen, labels, iters) = kmeans_reference(&input, 4, 3);
    for p in policies() {
        let out = kmeans::run(&mut rt(p), &input, 4, &KernelParams::with_ratio(1.0).seed(3)).unwrap().output;
        assert_eq!(out.iterations, iters, "{p}");
        assert_eq!(out.assignments, labels, "{p}");
        assert_eq!(out.centroids, cen, "{p}");
        assert!(out.converged);
    }
}

#[test]
fn kmeans_single_cluster_is_the_mean() {
    let input = KmeansInput::gaussian_mixture(2, 1000, 8, 3);
    let mut mean = vec![0.0; 8];
    for i in 0..1000 {
        for (m, x) in mean.iter_mut().zip(input.point(i)) {
            *m += x / 1000.0;
        }
    }
    let out = kmeans::run(&mut rt(PolicyConfig::Agnostic), &input, 1, &KernelParams::with_ratio(1.0)).unwrap().output;
    for (a, b) in out.centroids.iter().zip(&mean) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn kmeans_rejects_bad_k() {
    let input = KmeansInput::gaussian_mixture(2, 10, 8, 2);
    let mut rt = rt(PolicyConfig::Agnostic);
    assert!(kmeans::run(&mut rt, &input, 11, &KernelParams::with_ratio(1.0)).is_err());
    assert!(kmeans::run(&mut rt, &input, 0, &KernelParams::with_ratio(1.0)).is_err());
}

#[test]
fn kmeans_aggressive_error_is_small() {
    let input = KmeansInput::gaussian_mixture(1, 50_000, 16, 4);
    let mut rt = rt(PolicyConfig::gtb(BufferSize::Max));
    let acc = kmeans::run(&mut rt, &input, 4, &KernelParams::with_ratio(1.0).seed(1)).unwrap().output;
    let apx = kmeans::run(&mut rt, &input, 4, &KernelParams::with_ratio(0.4).seed(1)).unwrap().output;
    let err = Output::Kmeans(apx).quality(&Output::Kmeans(acc)).unwrap().value;
    assert!(err < 0.45, "relative error {err}%");
}

fn jacobi_sequential(sys: &JacobiSystem, tol: f64) -> (Vec<f64>, usize) {
    let n = sys.n;
    let mut x: Vec<f64> = (0..n).map(|i| sys.b[i] / sys.a[i * n + i]).collect();
    for sweep in 1.. {
        let new: Vec<f64> = (0..n)
            .map(|i| {
                let s: f64 = (0..n).filter(|&j| j != i).map(|j| sys.a[i * n + j] * x[j]).sum();
                (sys.b[i] - s) / sys.a[i * n + i]
            })
            .collect();
        let diff = new.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = new;
        if diff < tol {
            return (x, sweep);
        }
    }
    unreachable!()
}

// Gaussian elimination with partial pivoting.
fn dense_solve(sys: &JacobiSystem) -> Vec<f64> {
    let n = sys.n;
    let mut a = sys.a.clone();
    let mut b = sys.b.clone();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs())).unwrap();
        for j in 0..n {
            a.swap(col * n + j, piv * n + j);
        }
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            for j in col..n {
                a[row * n + j] -= f * a[col * n + j];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i * n + j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i * n + i];
    }
    x
}

#[test]
fn jacobi_identity_converges_immediately() {
    let b: Vec<f64> = (0..40).map(|i| i as f64 - 7.5).collect();
    let sys = JacobiSystem::identity(b.clone());
    for p in policies() {
        let out = jacobi::run(&mut rt(p), &sys, &JacobiParams::native()).unwrap().output;
        assert_eq!((out.sweeps, &out.x), (1, &b), "{p}");
        for preset in DegreePreset::ALL {
            let params = JacobiParams::preset(preset);
            let out = jacobi::run(&mut rt(p), &sys, &params).unwrap().output;
            assert_eq!(out.x, b);
            // The first sweep eligible for the convergence check succeeds.
            assert_eq!(out.sweeps, params.warmup + 1);
        }
    }
}

#[test]
fn jacobi_accurate_matches_sequential() {
    let sys = JacobiSystem::random_decaying(4, 100);
    let (x_ref, sweeps) = jacobi_sequential(&sys, 1e-5);
    for p in policies() {
        let out = jacobi::run(&mut rt(p), &sys, &JacobiParams::native()).unwrap().output;
        assert_eq!(out.sweeps, sweeps, "{p}");
        let worst = out.x.iter().zip(&x_ref).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-9, "{p}: {worst}");
    }
}

#[test]
fn jacobi_mild_is_close_to_direct_solve() {
    let sys = JacobiSystem::random_decaying(9, 256);
    let exact = dense_solve(&sys);
    for p in [PolicyConfig::gtb(BufferSize::Max), PolicyConfig::lqh(), PolicyConfig::gtb(BufferSize::Bounded(32))] {
        let params = JacobiParams::preset(DegreePreset::Mild);
        let mut rt = rt(p);
        let out = jacobi::run(&mut rt, &sys, &params).unwrap().output;
        let xmax = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = out.x.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / xmax;
        assert!(err <= 10.0 * params.tolerance, "{p}: {err}");
        // Warm-up sweeps drop exactly the off-band tiles.
        let recs = rt.take_records();
        let dropped = recs.iter().filter(|r| r.decision == ExecutionDecision::Dropped).count();
        assert_eq!(dropped, 5 * 42, "{p}");
    }
}

#[test]
fn alternating_trace_follows_ratio() {
    let p = Particles::random(1, 64 * 20);
    for (policy, r) in [
        (PolicyConfig::gtb(BufferSize::Max), 0.5),
        (PolicyConfig::gtb(BufferSize::Max), 1.0),
        (PolicyConfig::gtb(BufferSize::Max), 0.0),
        (PolicyConfig::lqh(), 1.0),
    ] {
        let mut rt = rt(policy);
        let out = alternating::run(&mut rt, &p, 10, &KernelParams::with_ratio(r)).unwrap().output;
        let trace = alternating::trace(&rt.take_records(), out.group);
        assert_eq!(trace.len(), 10);
        for t in &trace {
            let want = if t.step % 2 == 1 { 1.0 } else { r };
            assert_eq!(t.ratio, want);
            assert_eq!(t.dropped, 0);
            if policy != PolicyConfig::lqh() {
                assert!((t.accurate_fraction - want).abs() < 1e-12, "{policy} {t:?}");
            }
        }
    }
}

#[test]
fn suite_runs_every_benchmark_at_every_preset() {
    let mut rt = rt(PolicyConfig::gtb(BufferSize::Max));
    for b in Benchmark::ALL {
        let size = match b {
            Benchmark::Mc => 16,
            Benchmark::Kmeans => 4000,
            Benchmark::Alternating => 512,
            _ => 64,
        };
        let input = b.generate(3, size).unwrap();
        let reference = b.run(&mut rt, &input, &RunSpec::reference(3)).unwrap().output;
        let q0 = reference.quality(&reference).unwrap();
        let mut prev = q0;
        for p in DegreePreset::ALL {
            let out = b.run(&mut rt, &input, &RunSpec::preset(p, 3)).unwrap().output;
            let q = out.quality(&reference).unwrap();
            assert!(prev.at_least(&q), "{b} {p}: {prev:?} then {q:?}");
            prev = q;
        }
        let stats = group_stats(&rt.take_records());
        assert!(stats.iter().all(|s| s.inverted == 0), "{b}");
    }
}

#[test]
fn outputs_round_trip_through_files() {
    let dir = std::env::temp_dir().join(format!("sigrt-kernels-{}", std::process::id()));
    let mut rt = rt(PolicyConfig::Agnostic);
    let input = Benchmark::Dct.generate(1, 32).unwrap();
    let out = Benchmark::Dct.run(&mut rt, &input, &RunSpec::reference(1)).unwrap().output;
    let files = out.write(&dir, "dct").unwrap();
    assert_eq!(files.len(), 2);
    let (meta, values) = sigrt_kernels::output::read_values(&std::fs::read(&files[0]).unwrap()).unwrap();
    assert_eq!(meta["benchmark"], "dct");
    assert_eq!(values, out.values());
    let img = ImageBuffer::from_pgm(&std::fs::read(&files[1]).unwrap()).unwrap();
    let Output::Dct(planes) = &out else { unreachable!() };
    assert_eq!(img, planes.reconstruct());
    std::fs::remove_dir_all(dir).ok();
}
