//! Acceptance criteria 1 to 10. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use meme_core::appearance::{learn_model, segment_frame, AppearanceModel, LearnConfig, UserInput};
use meme_core::evaluation::{
    compare_methods, nematode_yield, surface_error, tune_thresholds, Comparison, MemeSettings, ThresholdConfig,
};
use meme_core::imagecore::morphology::default_radius;
use meme_core::imagecore::BinaryMask;
use meme_core::mixture::{fit_em, EmConfig};
use meme_core::motility::{analyze, curvature_profile, frequency_bin};
use meme_core::skeleton::{
    boundary_pixels, chamfer_transform, extract_skeleton, trace_skeleton, Point, Skeleton, SkeletonConfig,
    DEFAULT_PRIOR_FLOOR,
};
use meme_core::synthgen::{generate_sequence, GeneratedSequence, SceneSpec, WormSpec};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

struct Scene {
    spec: SceneSpec,
    generated: GeneratedSequence,
    model: AppearanceModel,
    settings: MemeSettings,
}

impl Scene {
    fn new(spec: SceneSpec) -> Self {
        let generated = generate_sequence(&spec).expect("scene renders");
        let width = spec.worm.width.round() as usize;
        let input = UserInput::new(generated.sequence.frames()[0].clone(), generated.masks[0].clone(), width)
            .expect("annotation is valid");
        let model = learn_model(&input, &LearnConfig::default()).expect("model learns");
        let settings = MemeSettings {
            smooth_radius: default_radius(spec.worm.width),
            keep_largest: true,
        };
        Self {
            spec,
            generated,
            model,
            settings,
        }
    }

    fn width(&self) -> usize {
        self.spec.worm.width.round() as usize
    }

    fn compare(&self) -> Comparison {
        let g = &self.generated;
        let truth: Vec<(usize, BinaryMask)> = g.masks.iter().cloned().enumerate().collect();
        let baseline = tune_thresholds(&g.sequence, 0, &g.masks[0], &ThresholdConfig::default()).expect("tuning");
        compare_methods(&g.sequence, &truth, &self.model, self.settings, &baseline).expect("comparison")
    }

    fn skeletons(&self) -> Vec<Option<Skeleton>> {
        let cfg = SkeletonConfig::new(self.width());
        self.generated
            .sequence
            .frames()
            .iter()
            .map(|f| {
                let m = segment_frame(&self.model, f, self.settings.smooth_radius, true).ok()?;
                extract_skeleton(&m, &cfg).ok().map(|e| e.resampled)
            })
            .collect()
    }
}

fn homogeneous_accuracy(uniform: &Comparison, elapsed: Duration) -> Outcome {
    let (e, y) = uniform.meme_mean();
    let pass = e < 0.01 && y > 0.80 && elapsed < Duration::from_secs(180);
    outcome(pass, format!("uniform: mean error {e:.5} (< 0.01), mean yield {y:.4} (> 0.80), {elapsed:.1?} (< 3 min)"))
}

fn global_error_bound(scenes: &[(&str, Comparison)]) -> Outcome {
    let parts: Vec<String> = scenes
        .iter()
        .map(|(n, c)| format!("{n} {:.5}", c.meme_mean().0))
        .collect();
    let pass = scenes.iter().all(|(_, c)| c.meme_mean().0 < 0.10);
    outcome(pass, format!("mean error {} (each < 0.10)", parts.join(", ")))
}

fn baseline_superiority(pillars: &Comparison) -> Outcome {
    let (_, meme) = pillars.meme_mean();
    let (_, base) = pillars.baseline_mean();
    let margin = 100.0 * (meme - base);
    outcome(
        margin > 10.0,
        format!("pillars: yield {meme:.4} vs tuned threshold {base:.4}, margin {margin:.1} pp (> 10)"),
    )
}

fn normal_samples(mean: f64, sigma: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let d = Normal::new(mean, sigma).unwrap();
    (0..n).map(|_| vec![d.sample(rng)]).collect()
}

fn em_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut xs = normal_samples(50.0, 5.0, 2500, &mut rng);
    xs.extend(normal_samples(200.0, 5.0, 2500, &mut rng));
    let fit = fit_em(&xs, &EmConfig::new(2, 7)).expect("fit");
    let mut comps = fit.mixture.components().to_vec();
    comps.sort_by(|a, b| a.mean[0].total_cmp(&b.mean[0]));
    let recovered = (comps[0].mean[0] - 50.0).abs() <= 2.0
        && (comps[1].mean[0] - 200.0).abs() <= 2.0
        && comps.iter().all(|c| (c.weight - 0.5).abs() <= 0.05);

    let mut worst_drop = 0.0f64;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.random_range(1..=4);
        let mut data = Vec::new();
        for _ in 0..rng.random_range(1..=3) {
            let (m, s, n) = (rng.random_range(0.0..255.0), rng.random_range(2.0..30.0), rng.random_range(50..400));
            data.extend(normal_samples(m, s, n, &mut rng));
        }
        let cfg = EmConfig {
            tol: 0.0,
            max_iter: 50,
            ..EmConfig::new(k, seed)
        };
        let fit = fit_em(&data, &cfg).expect("fit");
        for w in fit.trace.windows(2) {
            worst_drop = worst_drop.max(w[0] - w[1]);
        }
    }
    let monotone = worst_drop <= 1e-9;
    outcome(
        recovered && monotone,
        format!(
            "means {:.3} / {:.3}, weights {:.4} / {:.4}; largest log-likelihood drop over 50 seeds {worst_drop:.2e}",
            comps[0].mean[0], comps[1].mean[0], comps[0].weight, comps[1].weight
        ),
    )
}

fn brute_distance(mask: &BinaryMask) -> Vec<f64> {
    let b = boundary_pixels(mask).pixels();
    let (w, h) = mask.dims();
    let mut out = vec![0.0; w * h];
    for (x, y) in mask.pixels() {
        out[y * w + x] = b
            .iter()
            .map(|&(bx, by)| (bx as f64 - x as f64).hypot(by as f64 - y as f64))
            .fold(f64::INFINITY, f64::min);
    }
    out
}

fn max_distance_error(mask: &BinaryMask) -> f64 {
    chamfer_transform(mask)
        .values()
        .iter()
        .zip(brute_distance(mask))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn chamfer_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (w, h) = (rng.random_range(1..=40), rng.random_range(1..=40));
        let p = rng.random_range(0.2..0.95);
        let data = (0..w * h).map(|_| rng.random_bool(p)).collect();
        worst = worst.max(max_distance_error(&BinaryMask::new(w, h, data).unwrap()));
    }
    let bar = BinaryMask::from_fn(61, 7, |_, _| true);
    let ring = BinaryMask::from_fn(31, 31, |x, y| {
        let r2 = (x as f64 - 15.0).powi(2) + (y as f64 - 15.0).powi(2);
        (36.0..=169.0).contains(&r2)
    });
    let fixtures = max_distance_error(&bar).max(max_distance_error(&ring));
    outcome(
        worst <= 1e-9 && fixtures <= 1e-9,
        format!("largest deviation {worst:.1e} on 200 random masks, {fixtures:.1e} on bar and ring"),
    )
}

fn dist_to_polyline(p: Point, line: &[Point]) -> f64 {
    line.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let (vx, vy) = (b.x - a.x, b.y - a.y);
            let t = (((p.x - a.x) * vx + (p.y - a.y) * vy) / (vx * vx + vy * vy)).clamp(0.0, 1.0);
            (p.x - a.x - t * vx).hypot(p.y - a.y - t * vy)
        })
        .fold(f64::INFINITY, f64::min)
}

fn noise_free(amplitude: f64, wavelength: f64, n_frames: usize) -> SceneSpec {
    SceneSpec {
        n_frames,
        noise_sigma: 0.0,
        worm: WormSpec {
            amplitude,
            wavelength,
            intensity_sigma: 0.0,
            ..WormSpec::default()
        },
        ..SceneSpec::default()
    }
}

fn skeleton_accuracy() -> Outcome {
    let bar = BinaryMask::from_fn(61, 7, |_, _| true);
    let s = trace_skeleton(&chamfer_transform(&bar), &bar, (0, 3), DEFAULT_PRIOR_FLOOR).expect("bar traces");
    let bar_off = s.points().iter().map(|p| (p.y - 3.0).abs()).fold(0.0, f64::max);

    let (mut worst_dev, mut worst_len, mut failures) = (0.0f64, 0.0f64, 0);
    for (a, lam) in [(20.0, 240.0), (30.0, 200.0), (10.0, 300.0)] {
        let spec = noise_free(a, lam, 30);
        let g = generate_sequence(&spec).expect("scene renders");
        let cfg = SkeletonConfig::new(spec.worm.width as usize);
        for (mask, truth) in g.masks.iter().zip(&g.centerlines) {
            let Ok(e) = extract_skeleton(mask, &cfg) else {
                failures += 1;
                continue;
            };
            let pts = e.resampled.points();
            let dev = pts.iter().map(|&p| dist_to_polyline(p, truth.points())).sum::<f64>() / pts.len() as f64;
            worst_dev = worst_dev.max(dev);
            worst_len = worst_len.max((e.resampled.length() - truth.length()).abs() / truth.length());
        }
    }
    outcome(
        bar_off <= 0.5 && worst_dev < 1.0 && worst_len < 0.05 && failures == 0,
        format!(
            "bar: {} points, max off-midline {bar_off:.2} px; worms: worst mean deviation {worst_dev:.3} px, \
             worst length error {:.2}%, {failures} untraced frames",
            s.len(),
            100.0 * worst_len
        ),
    )
}

fn motility_recovery() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for f in [1.0, 1.5, 2.0] {
        let spec = SceneSpec {
            n_frames: 120,
            worm: WormSpec {
                frequency: f,
                ..WormSpec::default()
            },
            ..SceneSpec::default()
        };
        let scene = Scene::new(spec);
        let truth = scene.generated.truth.clone();
        match analyze(&scene.skeletons(), scene.spec.frame_rate) {
            Ok(a) => {
                let r = &a.report;
                let bin = frequency_bin(&a.field);
                let rel = (r.wave_speed - truth.wave_speed).abs() / truth.wave_speed;
                let ok = (r.frequency - f).abs() <= bin && rel < 0.10 && r.wavelength == r.wave_speed / r.frequency;
                pass &= ok;
                parts.push(format!(
                    "f={f}: {:.3} Hz (bin {bin:.3}), c {:.3} vs {:.3} ({:.1}%)",
                    r.frequency,
                    r.wave_speed,
                    truth.wave_speed,
                    100.0 * rel
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("f={f}: {e}"));
            }
        }
    }
    let n = 49;
    let circle: Vec<Point> = (0..n)
        .map(|i| {
            let a = 1.5 * std::f64::consts::PI * i as f64 / (n - 1) as f64;
            Point::new(100.0 + 40.0 * a.cos(), 100.0 + 40.0 * a.sin())
        })
        .collect();
    let (k, _) = curvature_profile(&Skeleton::from_points(circle)).expect("curvature");
    let circle_err = k[2..n - 2].iter().map(|v| (v * 40.0 - 1.0).abs()).fold(0.0, f64::max);
    pass &= circle_err <= 0.05;
    parts.push(format!("circle r=40: worst relative error {:.2}%", 100.0 * circle_err));
    outcome(pass, parts.join("; "))
}

fn metric_definitions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut mismatches = 0;
    for _ in 0..20 {
        let (w, h) = (rng.random_range(1..=8), rng.random_range(1..=8));
        let g = BinaryMask::new(w, h, (0..w * h).map(|_| rng.random_bool(0.4)).collect()).unwrap();
        let s = BinaryMask::new(w, h, (0..w * h).map(|_| rng.random_bool(0.5)).collect()).unwrap();
        let (mut differ, mut worm, mut found) = (0usize, 0usize, 0usize);
        for y in 0..h {
            for x in 0..w {
                differ += usize::from(g.get(x, y) != s.get(x, y));
                if g.get(x, y) {
                    worm += 1;
                    found += usize::from(s.get(x, y));
                }
            }
        }
        if surface_error(&g, &s).unwrap() != differ as f64 / (w * h) as f64 {
            mismatches += 1;
        }
        match nematode_yield(&g, &s) {
            Ok(y) if worm > 0 && y == found as f64 / worm as f64 => {}
            Err(_) if worm == 0 => {}
            _ => mismatches += 1,
        }
    }
    let mut changed = 0;
    for _ in 0..200 {
        let (w, h) = (rng.random_range(1..=12), rng.random_range(1..=12));
        let mut g = BinaryMask::new(w, h, (0..w * h).map(|_| rng.random_bool(0.3)).collect()).unwrap();
        g.set(0, 0, true);
        let s = BinaryMask::new(w, h, (0..w * h).map(|_| rng.random_bool(0.5)).collect()).unwrap();
        let mut t = s.clone();
        for (x, y) in g.invert().pixels() {
            if rng.random_bool(0.5) {
                t.set(x, y, !t.get(x, y));
            }
        }
        if nematode_yield(&g, &s).unwrap() != nematode_yield(&g, &t).unwrap() {
            changed += 1;
        }
    }
    outcome(
        mismatches == 0 && changed == 0,
        format!("{mismatches} hand-count mismatches in 20 pairs; {changed} yield changes in 200 background flips"),
    )
}

fn throughput(uniform: &Scene) -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let cfg = SkeletonConfig::new(uniform.width());
    let frame = &uniform.generated.sequence.frames()[10];
    let (elapsed, ok) = pool.install(|| {
        let t = Instant::now();
        let ok = segment_frame(&uniform.model, frame, uniform.settings.smooth_radius, true)
            .and_then(|m| extract_skeleton(&m, &cfg))
            .is_ok();
        (t.elapsed(), ok)
    });
    outcome(
        ok && elapsed < Duration::from_secs(2),
        format!("segmentation and skeleton of one 640x480 frame on one thread: {elapsed:.2?} (< 2 s)"),
    )
}

fn meme(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_meme"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

fn artifacts(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .chain(std::fs::read_dir(dir.join("masks")).unwrap())
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let config = root.join("run.conf");
    std::fs::write(
        &config,
        "sequence_dir=data/frames\nannotation=data/annotation.txt\nsynth.n_frames=40\nseed=11\n",
    )
    .unwrap();
    let conf = config.to_str().unwrap();
    let data = root.join("data");
    let (a, b) = (root.join("a"), root.join("b"));
    let out = |d: &Path| format!("output_dir={}", d.display());
    let runs = [
        vec!["synth".to_string(), out(&data)],
        vec!["all".into(), "--threads".into(), "1".into(), out(&a)],
        vec!["all".into(), "--threads".into(), "4".into(), out(&b)],
    ];
    for run in &runs {
        let mut args = vec![run[0].as_str(), "--config", conf];
        args.extend(run[1..].iter().map(String::as_str));
        if let Err(e) = meme(&args) {
            return outcome(false, format!("`meme {}` failed: {e}", run[0]));
        }
    }
    let (fa, fb) = (artifacts(&a), artifacts(&b));
    let names = |v: &[PathBuf], base: &Path| -> Vec<PathBuf> {
        v.iter().map(|p| p.strip_prefix(base).unwrap().to_path_buf()).collect()
    };
    if names(&fa, &a) != names(&fb, &b) {
        return outcome(false, "the two runs wrote different file sets");
    }
    let differing: Vec<String> = fa
        .iter()
        .zip(&fb)
        .filter(|(x, y)| std::fs::read(x).unwrap() != std::fs::read(y).unwrap())
        .map(|(x, _)| x.display().to_string())
        .collect();
    let csvs = fa.iter().filter(|p| p.extension().is_some_and(|e| e == "csv")).count();
    let masks = fa.iter().filter(|p| p.extension().is_some_and(|e| e == "png")).count();
    outcome(
        differing.is_empty() && masks == 40 && csvs >= 4,
        format!(
            "{csvs} CSVs and {masks} masks from runs on 1 and 4 threads; {} differ",
            differing.len()
        ),
    )
}

fn main() -> ExitCode {
    let t = Instant::now();
    let uniform = Scene::new(SceneSpec::preset("uniform").unwrap());
    let uniform_cmp = uniform.compare();
    let uniform_time = t.elapsed();
    let gradient_cmp = Scene::new(SceneSpec::preset("gradient").unwrap()).compare();
    let pillars_cmp = Scene::new(SceneSpec::preset("pillars").unwrap()).compare();

    let results = [
        ("homogeneous-background accuracy", homogeneous_accuracy(&uniform_cmp, uniform_time)),
        (
            "global error bound",
            global_error_bound(&[
                ("uniform", uniform_cmp.clone()),
                ("gradient", gradient_cmp),
                ("pillars", pillars_cmp.clone()),
            ]),
        ),
        ("baseline superiority on pillars", baseline_superiority(&pillars_cmp)),
        ("EM correctness", em_correctness()),
        ("distance transform oracle", chamfer_oracle()),
        ("skeleton geometric accuracy", skeleton_accuracy()),
        ("motility metric recovery", motility_recovery()),
        ("metric definitions", metric_definitions()),
        ("per-frame throughput", throughput(&uniform)),
        ("determinism", determinism()),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!("{} criterion {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of {} criteria pass", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
