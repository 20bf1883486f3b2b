//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured values (run with `--nocapture` to see them).
//!
//! Criteria 5, 6, 7, and 9 need the UCR Coffee, Trace, and BeetleFly
//! datasets as text files under `data/` at the workspace root (override the
//! directory with `SS_SHAPELETS_DATA`). See `data/README.md` for the format;
//! the tests fail with instructions when a file is missing.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ss_shapelets::chain::{brute_force_chain, chain_salience, find_chain};
use ss_shapelets::dataset::{detect_delimiter, znormalize, Dataset, TimeSeries};
use ss_shapelets::lds::{brute_force_select, select_shapelets, scatter_between, scatter_within, ScatterPair};
use ss_shapelets::matrix::Matrix;
use ss_shapelets::metrics::{rand_index, RepresentationMatrix};
use ss_shapelets::pipeline::{grid_search, raw_spectral_baseline, sample_labels};
use ss_shapelets::spectral::rbf_affinity;

fn data_dir() -> PathBuf {
    match std::env::var_os("SS_SHAPELETS_DATA") {
        Some(dir) => PathBuf::from(dir),
        None => PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"),
    }
}

fn dataset_path(name: &str) -> PathBuf {
    data_dir().join(format!("{name}.txt"))
}

fn load_ucr(name: &str) -> Dataset {
    let path = dataset_path(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|_| {
        panic!(
            "UCR dataset {name} not found at {}.\n\
             Export the UCR archive's {name} TRAIN+TEST splits as one text file \
             (one series per line: class label, then the values; comma, tab, or \
             whitespace separated) and place it there, or point SS_SHAPELETS_DATA \
             at a directory containing {name}.txt. See data/README.md.",
            path.display()
        )
    });
    Dataset::parse(&text, detect_delimiter(&text)).expect("dataset file must parse")
}

fn random_series(rng: &mut ChaCha8Rng, len: usize) -> TimeSeries {
    TimeSeries { id: 0, label: None, values: (0..len).map(|_| rng.gen_range(-3.0..3.0)).collect() }
}

fn random_psd(rng: &mut ChaCha8Rng, dim: usize) -> Matrix {
    let g: Vec<Vec<f64>> =
        (0..dim).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let mut out = Matrix::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            out[(r, c)] = (0..dim).map(|t| g[r][t] * g[c][t]).sum();
        }
    }
    out
}

/// Median of ten protocol repeats: sample 5% seeds, grid-search, report the
/// ground-truth Rand Index of the winning configuration.
fn median_grid_search_ri(dataset: &Dataset, seeds: std::ops::Range<u64>) -> f64 {
    let mut scores: Vec<f64> = seeds
        .map(|seed| {
            let labeled = sample_labels(dataset, 0.05, seed).expect("5% must cover all classes");
            grid_search(dataset, &labeled, seed).expect("grid search must succeed").best.rand_index
        })
        .collect();
    scores.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = scores.len();
    if n % 2 == 1 {
        scores[n / 2]
    } else {
        0.5 * (scores[n / 2 - 1] + scores[n / 2])
    }
}

#[test]
fn c01_findchain_matches_brute_force_exactly() {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for trial in 0..200 {
        let l = rng.gen_range(10..=40);
        let window_len = rng.gen_range(2..=5);
        let max_k = (l / window_len).min(3);
        let k = rng.gen_range(1..=max_k);
        let x = random_series(&mut rng, l);
        let fast = find_chain(&x, window_len, k).unwrap();
        let brute = brute_force_chain(&x, window_len, k).unwrap();
        let equal = fast.salience == brute.salience
            || (fast.salience - brute.salience).abs() <= 1e-9 * brute.salience.abs().max(1.0);
        assert!(
            equal,
            "trial {trial} (l={l}, w={window_len}, k={k}): {} vs {}",
            fast.salience, brute.salience
        );
    }
    let elapsed = clock.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}, budget 10s");
    println!("acceptance c01 findchain-exactness: PASS (200 instances in {elapsed:?})");
}

#[test]
fn c02_selection_matches_brute_force_exactly() {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for trial in 0..200 {
        let gamma = rng.gen_range(1..=10);
        let k = rng.gen_range(1..=gamma);
        let lambda = [0.0, 0.1, 1.0, 10.0][rng.gen_range(0..4)];
        let scatter =
            ScatterPair { between: random_psd(&mut rng, gamma), within: random_psd(&mut rng, gamma) };
        let fast = select_shapelets(&scatter, lambda, k).unwrap();
        let brute = brute_force_select(&scatter, lambda, k).unwrap();
        let equal = fast.objective == brute.objective
            || (fast.objective - brute.objective).abs() <= 1e-12 * brute.objective.abs().max(1.0);
        assert!(
            equal,
            "trial {trial} (gamma={gamma}, k={k}, lambda={lambda}): {} vs {}",
            fast.objective, brute.objective
        );
    }
    let elapsed = clock.elapsed();
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}, budget 5s");
    println!("acceptance c02 selection-exactness: PASS (200 scatter pairs in {elapsed:?})");
}

#[test]
fn c03_rand_index_matches_pair_counting_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for _ in 0..100 {
        let n = rng.gen_range(2..=60);
        let pred: Vec<usize> = (0..n).map(|_| rng.gen_range(0..5)).collect();
        let truth: Vec<usize> = (0..n).map(|_| rng.gen_range(0..4)).collect();
        // explicit O(n^2) pair counting
        let mut agree = 0u64;
        let mut total = 0u64;
        for i in 0..n {
            for j in (i + 1)..n {
                total += 1;
                if (pred[i] == pred[j]) == (truth[i] == truth[j]) {
                    agree += 1;
                }
            }
        }
        let oracle = agree as f64 / total as f64;
        assert_eq!(rand_index(&pred, &truth).unwrap(), oracle, "n={n}");
    }
    println!("acceptance c03 rand-index-oracle: PASS (100 assignment pairs, exact)");
}

#[test]
fn c04_scatter_identity_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for trial in 0..100 {
        let gamma = rng.gen_range(1..=8);
        let n = rng.gen_range(3..=40);
        let classes = rng.gen_range(1..=4.min(n));
        let rows: Vec<Vec<f64>> =
            (0..gamma).map(|_| (0..n).map(|_| rng.gen_range(0.0..5.0)).collect()).collect();
        let h = RepresentationMatrix::from_matrix(Matrix::from_rows(&rows).unwrap());
        let labels: Vec<usize> =
            (0..n).map(|j| if j < classes { j } else { rng.gen_range(0..classes) }).collect();

        let sb = scatter_between(&h, &labels).unwrap();
        let sw = scatter_within(&h, &labels).unwrap();
        let global: Vec<f64> =
            (0..gamma).map(|r| (0..n).map(|j| h.entry(r, j)).sum::<f64>() / n as f64).collect();
        let mut total = Matrix::zeros(gamma, gamma);
        for j in 0..n {
            for r in 0..gamma {
                for c in 0..gamma {
                    total[(r, c)] += (h.entry(r, j) - global[r]) * (h.entry(c, j) - global[c]);
                }
            }
        }
        let mut max_diff: f64 = 0.0;
        for r in 0..gamma {
            for c in 0..gamma {
                max_diff = max_diff.max((sb[(r, c)] + sw[(r, c)] - total[(r, c)]).abs());
            }
        }
        let tolerance = 1e-9 * (1.0 + total.max_abs());
        assert!(max_diff <= tolerance, "trial {trial}: {max_diff} > {tolerance}");
    }
    println!("acceptance c04 scatter-identity: PASS (100 instances)");
}

#[test]
fn c05_coffee_reproduction() {
    let dataset = load_ucr("Coffee");
    assert_eq!((dataset.len(), dataset.num_classes, dataset.series_length), (56, 2, 286));
    let clock = Instant::now();
    let median = median_grid_search_ri(&dataset, 0..10);
    let elapsed = clock.elapsed();
    assert!(median >= 0.90, "median Rand Index {median} < 0.90");
    assert!(elapsed < Duration::from_secs(120), "took {elapsed:?}, budget 2min");
    println!("acceptance c05 coffee-reproduction: PASS (median RI {median:.3} in {elapsed:?})");
}

#[test]
fn c06_trace_reproduction() {
    let dataset = load_ucr("Trace");
    let clock = Instant::now();
    let median = median_grid_search_ri(&dataset, 0..10);
    let elapsed = clock.elapsed();
    assert!(median >= 0.90, "median Rand Index {median} < 0.90");
    assert!(elapsed < Duration::from_secs(300), "took {elapsed:?}, budget 5min");
    println!("acceptance c06 trace-reproduction: PASS (median RI {median:.3} in {elapsed:?})");
}

#[test]
fn c07_shapelets_beat_raw_spectral_on_beetlefly() {
    let dataset = load_ucr("BeetleFly");
    let shapelet_median = median_grid_search_ri(&dataset, 0..10);
    let mut baseline: Vec<f64> = (0..10)
        .map(|seed| raw_spectral_baseline(&dataset, 1.0, seed).expect("baseline must run").1)
        .collect();
    baseline.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let baseline_median = 0.5 * (baseline[4] + baseline[5]);
    let gain = shapelet_median - baseline_median;
    assert!(
        gain >= 0.15,
        "shapelet median {shapelet_median:.3} vs raw-spectral median {baseline_median:.3}: gain {gain:.3} < 0.15"
    );
    println!(
        "acceptance c07 shapelet-benefit: PASS (shapelets {shapelet_median:.3} vs raw {baseline_median:.3})"
    );
}

#[test]
fn c08_findchain_scaling_smoke() {
    let synthetic = |length: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(808);
        let values: Vec<f64> = (0..length)
            .map(|t| {
                let t = t as f64;
                (t / 23.0).sin() + 0.5 * (t / 7.0).cos() + rng.gen_range(-0.3..0.3)
            })
            .collect();
        TimeSeries { id: 0, label: None, values: znormalize(&values) }
    };
    // median wall time of 3 runs, after a warm-up
    let time_find = |series: &TimeSeries, window_len: usize| {
        find_chain(series, window_len, 3).unwrap();
        let mut samples: Vec<f64> = (0..3)
            .map(|_| {
                let clock = Instant::now();
                find_chain(series, window_len, 3).unwrap();
                clock.elapsed().as_secs_f64()
            })
            .collect();
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        samples[1]
    };

    let long = synthetic(1024);
    let long_time = time_find(&long, 256);
    assert!(long_time < 1.0, "find_chain at l=1024, window 256 took {long_time:.3}s");

    let short = synthetic(512);
    let short_time = time_find(&short, 128);
    let ratio = long_time / short_time;
    assert!(ratio <= 6.0, "doubling l scaled time by {ratio:.2}x (> 6x)");

    // brute-force gap on an instance under the enumeration guard
    let medium = synthetic(380);
    let clock = Instant::now();
    find_chain(&medium, 3, 3).unwrap();
    let fast = clock.elapsed().as_secs_f64();
    let clock = Instant::now();
    brute_force_chain(&medium, 3, 3).unwrap();
    let brute = clock.elapsed().as_secs_f64();
    assert!(
        brute >= 10.0 * fast,
        "brute force {brute:.4}s is not 10x slower than find_chain {fast:.4}s"
    );
    println!(
        "acceptance c08 scaling-smoke: PASS (l=1024: {long_time:.4}s, 512->1024 ratio {ratio:.2}x, brute/fast {:.0}x)",
        brute / fast
    );
}

#[test]
fn c09_cli_output_is_byte_identical_on_coffee() {
    let coffee = dataset_path("Coffee");
    assert!(
        coffee.exists(),
        "UCR dataset Coffee not found at {} (see data/README.md)",
        coffee.display()
    );
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &std::path::Path| {
        let status = Command::new(env!("CARGO_BIN_EXE_ss-shapelets"))
            .args([
                "run",
                "--data",
                coffee.to_str().unwrap(),
                "--supervision",
                "0.05",
                "--seed",
                "4242",
                "--grid-search",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .expect("binary must run");
        assert!(status.success(), "run failed with {status}");
    };
    let first = dir.path().join("a.json");
    let second = dir.path().join("b.json");
    run(&first);
    run(&second);
    let a = std::fs::read(&first).unwrap();
    let b = std::fs::read(&second).unwrap();
    assert!(!a.is_empty() && a == b, "outputs differ between identical runs");
    println!("acceptance c09 determinism: PASS ({} identical bytes)", a.len());
}

#[test]
fn c10_property_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);

    // z-normalization: zero mean, unit population std, idempotent
    for _ in 0..50 {
        let len = rng.gen_range(2..80);
        let values: Vec<f64> = (0..len).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let out = znormalize(&values);
        let mean = out.iter().sum::<f64>() / len as f64;
        let std =
            (out.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / len as f64).sqrt();
        assert!(mean.abs() <= 1e-9);
        if std > 0.0 {
            assert!((std - 1.0).abs() <= 1e-9);
        }
        let twice = znormalize(&out);
        assert!(out.iter().zip(&twice).all(|(a, b)| (a - b).abs() <= 1e-9));
    }

    // chains: ordering, non-overlap, and dominance over 1000 sampled chains
    for _ in 0..3 {
        let l = rng.gen_range(30..=50);
        let w = rng.gen_range(2..=5);
        let k = rng.gen_range(2..=(l / w).min(4));
        let x = random_series(&mut rng, l);
        let best = find_chain(&x, w, k).unwrap();
        assert_eq!(best.starts.len(), k);
        assert!(best.starts.windows(2).all(|p| p[0] + w <= p[1]));
        let slack = l - k * w;
        for _ in 0..1000 {
            let mut cuts: Vec<usize> = (0..k).map(|_| rng.gen_range(0..=slack)).collect();
            cuts.sort_unstable();
            let starts: Vec<usize> =
                cuts.iter().enumerate().map(|(i, c)| c + i * w).collect();
            let sampled = chain_salience(&x, w, &starts).unwrap();
            assert!(best.salience >= sampled);
        }
    }

    // affinity: symmetric with unit diagonal
    let rows: Vec<Vec<f64>> =
        (0..3).map(|_| (0..12).map(|_| rng.gen_range(0.0..3.0)).collect()).collect();
    let reps = RepresentationMatrix::from_matrix(Matrix::from_rows(&rows).unwrap());
    let affinity = rbf_affinity(&reps, 1.0).unwrap();
    for i in 0..12 {
        assert_eq!(affinity.entry(i, i), 1.0);
        for j in 0..12 {
            assert_eq!(affinity.entry(i, j), affinity.entry(j, i));
            assert!(affinity.entry(i, j) > 0.0 && affinity.entry(i, j) <= 1.0);
        }
    }

    // selection matrix reconstruction: k ones, column sums 1, row sums <= 1
    let scatter =
        ScatterPair { between: random_psd(&mut rng, 8), within: random_psd(&mut rng, 8) };
    let selection = select_shapelets(&scatter, 0.1, 3).unwrap();
    let w = selection.selection_matrix(8);
    assert_eq!(w.data().iter().sum::<f64>(), 3.0);
    for col in 0..3 {
        assert_eq!((0..8).map(|r| w[(r, col)]).sum::<f64>(), 1.0);
    }
    for row in 0..8 {
        assert!((0..3).map(|c| w[(row, c)]).sum::<f64>() <= 1.0);
    }

    println!("acceptance c10 property-suite: PASS");
}
