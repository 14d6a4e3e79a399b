//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::HashMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use ts_observer::belief::DiscreteBelief;
use ts_observer::diagnostics::{
    bayes_regret_estimate, counterexample_report, enumerate_exact, log_count_study, martingale_check,
    posterior_convergence_report, run_replication, Plan,
};
use ts_observer::harness::{parse_config, summarize};
use ts_observer::model::{ModelSpec, ParameterGrid, RewardFamily, TruthMode};
use ts_observer::policies::{PolicyKind, PolicyState};
use ts_observer::rng::rng_from_seed;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_grid(rng: &mut impl Rng, max_m: usize, max_k: usize) -> ParameterGrid {
    let m = rng.random_range(1..=max_m);
    let k = rng.random_range(1..=max_k);
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut prior: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let fix = 1.0 - prior.iter().sum::<f64>();
    prior[0] += fix;
    // Means on a coarse lattice so that ties in the optimal action occur.
    let means = (0..m)
        .map(|_| (0..k).map(|_| f64::from(rng.random_range(1..10u8)) / 10.0).collect())
        .collect();
    ParameterGrid::new(prior, means, RewardFamily::Bernoulli).expect("valid random grid")
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut rng = rng_from_seed(101);
    let mut instances = vec![(ParameterGrid::default_instance(), 5)];
    for _ in 0..20 {
        let grid = random_grid(&mut rng, 3, 3);
        let horizon = rng.random_range(1..=5);
        instances.push((grid, horizon));
    }
    for (grid, horizon) in &instances {
        let tree = enumerate_exact(grid, &PolicyKind::ThompsonDiscrete, *horizon).map_err(|e| e.to_string())?;
        let report = martingale_check(&tree);
        worst = worst.max(report.max_residual).max(report.max_action_residual);
    }
    let elapsed = start.elapsed();
    check(
        worst < 1e-10 && elapsed < Duration::from_secs(10),
        format!("{} instances, max tower residual {worst:.2e}, {:.2}s", instances.len(), elapsed.as_secs_f64()),
    )
}

fn criterion_2() -> Outcome {
    let draws = 100_000;
    let mut rng = rng_from_seed(202);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let grid = random_grid(&mut rng, 6, 4);
        let m = grid.num_params();
        // Random belief with some zero weights.
        let mut w: Vec<f64> = (0..m)
            .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() })
            .collect();
        if w.iter().all(|&x| x == 0.0) {
            w[0] = 1.0;
        }
        let total: f64 = w.iter().sum();
        let mut w: Vec<f64> = w.iter().map(|x| x / total).collect();
        let fix = 1.0 - w.iter().sum::<f64>();
        let first = w.iter().position(|&x| x > 0.0).unwrap();
        w[first] += fix;
        let belief = DiscreteBelief::new(w).map_err(|e| e.to_string())?;
        let exact = belief.optimal_action_distribution(&grid).map_err(|e| e.to_string())?;
        let state = PolicyState::ThompsonDiscrete(belief);
        let mut counts = vec![0u64; grid.num_actions()];
        for _ in 0..draws {
            counts[state.ts_select(&grid, &mut rng).map_err(|e| e.to_string())?] += 1;
        }
        let tv: f64 = counts
            .iter()
            .zip(&exact.probs)
            .map(|(&c, &p)| (c as f64 / draws as f64 - p).abs())
            .sum::<f64>()
            / 2.0;
        worst = worst.max(tv);
    }
    check(worst < 0.01, format!("50 beliefs x 1e5 draws, max TV {worst:.4}"))
}

fn criterion_3() -> Outcome {
    let episodes = 100_000;
    let grid = ParameterGrid::default_instance();
    let tree = enumerate_exact(&grid, &PolicyKind::ThompsonDiscrete, 2).map_err(|e| e.to_string())?;
    let model = ModelSpec::Grid {
        grid,
        truth: TruthMode::DrawnFromPrior,
    };
    let plan = Plan::new(2, episodes, 303);
    let mut counts: HashMap<Vec<(usize, u8)>, u64> = HashMap::new();
    for i in 0..episodes {
        let rep = run_replication(&model, &PolicyKind::ThompsonDiscrete, &plan, i, false).map_err(|e| e.to_string())?;
        let h: Vec<(usize, u8)> = rep.trace.steps().iter().map(|s| (s.action, s.reward as u8)).collect();
        *counts.entry(h).or_default() += 1;
    }
    let leaves = tree.leaves();
    let mut worst_z: f64 = 0.0;
    let mut covered = 0u64;
    for leaf in &leaves {
        let p = leaf.probability;
        let observed = counts.get(&leaf.history).copied().unwrap_or(0);
        covered += observed;
        let se = (p * (1.0 - p) / episodes as f64).sqrt();
        let diff = (observed as f64 / episodes as f64 - p).abs();
        let z = if se > 0.0 { diff / se } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
        worst_z = worst_z.max(z);
    }
    check(
        worst_z <= 4.0 && covered == episodes as u64,
        format!("{} depth-2 histories, max |z| {worst_z:.2}, unexplained episodes {}", leaves.len(), episodes as u64 - covered),
    )
}

fn criterion_4() -> Outcome {
    let config = parse_config(
        "model = beta-bernoulli\ntrue_means = 0.9 0.7 0.5 0.3 0.1\npolicy = thompson-beta\nhorizon = 20000\nreplications = 100\nseed = 404\n",
    )
    .map_err(|e| e.to_string())?;
    let s = summarize(&config).map_err(|e| e.to_string())?.summary;
    let correct = s.rows.iter().filter(|r| r.point_estimate == 1).count();
    let dominant = s.rows.iter().filter(|r| r.optimal_frequency > 0.9).count();
    check(
        correct >= 99 && dominant >= 95,
        format!("point estimate correct {correct}/100, best-arm frequency > 0.9 in {dominant}/100"),
    )
}

fn criterion_5() -> Outcome {
    let report = posterior_convergence_report(&ParameterGrid::default_instance(), &Plan::new(5000, 100, 505))
        .map_err(|e| e.to_string())?;
    check(
        report.median_gap < 0.05,
        format!("median max_a |p_T(a) - I| = {:.3e}", report.median_gap),
    )
}

fn criterion_6() -> Outcome {
    let model = ModelSpec::Grid {
        grid: ParameterGrid::default_instance(),
        truth: TruthMode::Fixed(0),
    };
    let checkpoints = [100, 1000, 10_000, 100_000, 1_000_000];
    let report = counterexample_report(
        &model,
        &PolicyKind::ThompsonDiscrete,
        1,
        &Plan::new(1_000_000, 4, 606),
        &checkpoints,
    )
    .map_err(|e| e.to_string())?;
    let forced = |t: usize| report.checkpoints.iter().find(|c| c.t == t).map(|c| c.forced_plays);
    let ok = forced(10_000) == Some(100)
        && forced(1_000_000) == Some(1000)
        && report.forced_plays == 1000
        && report.regret_per_t_decreasing
        && report.fixed_count_strictly_increasing;
    let regret: Vec<String> = report.checkpoints.iter().map(|c| format!("{:.2e}", c.regret_per_t)).collect();
    check(
        ok,
        format!(
            "forced plays {:?}/{:?}, regret/T [{}], fixed count strictly increasing {}",
            forced(10_000),
            forced(1_000_000),
            regret.join(", "),
            report.fixed_count_strictly_increasing
        ),
    )
}

fn criterion_7() -> Outcome {
    let model = ModelSpec::BetaBernoulli { arms: 5, means: None };
    let report = bayes_regret_estimate(&model, &PolicyKind::ThompsonBeta, &Plan::new(10_000, 200, 707))
        .map_err(|e| e.to_string())?;
    let c = report.checkpoints(&[100, 1000, 10_000]).map_err(|e| e.to_string())?;
    let decreasing = c[0].per_t > c[1].per_t && c[1].per_t > c[2].per_t;
    let ratio = c[2].per_sqrt_t / c[1].per_sqrt_t;
    check(
        decreasing && (0.5..=2.0).contains(&ratio),
        format!(
            "regret/T {:.4} > {:.4} > {:.4}: {decreasing}; regret/sqrt(T) ratio 1e4:1e3 = {ratio:.3}",
            c[0].per_t, c[1].per_t, c[2].per_t
        ),
    )
}

fn criterion_8() -> Outcome {
    let means = [0.9, 0.7, 0.5, 0.3, 0.1];
    let plan = Plan::new(100_000, 50, 808);
    let checkpoints = [10_000, 100_000];
    let ts = log_count_study(&means, &PolicyKind::ThompsonBeta, &plan, &checkpoints).map_err(|e| e.to_string())?;
    let uniform = log_count_study(&means, &PolicyKind::Uniform, &plan, &checkpoints).map_err(|e| e.to_string())?;
    check(
        ts.bounded && !uniform.bounded,
        format!(
            "thompson max change factor {:.2} (bounded {}), uniform {:.2} (bounded {})",
            ts.max_change_factor, ts.bounded, uniform.max_change_factor, uniform.bounded
        ),
    )
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).expect("readable output") {
            let path = entry.expect("entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                files.push((rel, std::fs::read(&path).expect("readable file")));
            }
        }
    }
    files.sort();
    files
}

fn criterion_9() -> Outcome {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut names: Vec<_> = std::fs::read_dir(&configs)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .collect();
    names.sort();
    let mut files_compared = 0;
    for config in &names {
        let stem = config.file_stem().unwrap().to_string_lossy().to_string();
        let mut runs = Vec::new();
        for (i, jobs) in ["1", "4", "4"].iter().enumerate() {
            let out = tmp.path().join(format!("{stem}-{i}"));
            let status = Command::new(env!("CARGO_BIN_EXE_ts-observer"))
                .args(["simulate", "--config"])
                .arg(config)
                .arg("--out")
                .arg(&out)
                .args(["--jobs", jobs])
                .output()
                .map_err(|e| e.to_string())?;
            if !status.status.success() {
                return Err(format!("{stem}: {}", String::from_utf8_lossy(&status.stderr)));
            }
            runs.push(snapshot(&out));
        }
        if runs[0] != runs[1] || runs[1] != runs[2] {
            return Err(format!("{stem}: outputs differ between runs"));
        }
        files_compared += runs[0].len();
    }
    check(
        files_compared > 0,
        format!("{} configs, {files_compared} files identical across --jobs 1/4/4", names.len()),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("exact martingale tower identity", criterion_1),
        ("probability matching", criterion_2),
        ("simulation matches enumeration", criterion_3),
        ("observer consistency on fixed arms", criterion_4),
        ("posterior converges to indicator", criterion_5),
        ("square-step counterexample", criterion_6),
        ("regret rate sanity", criterion_7),
        ("log-count diagnostic with negative control", criterion_8),
        ("determinism across runs and --jobs", criterion_9),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {}: FAIL  {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
