use std::path::PathBuf;

use super::config::{ExperimentConfig, ExperimentKind};
use super::table::{format_number, runs_path, ResultTable};
use super::{Estimate, SeedTree};
use crate::deblur::{deblur_experiment, DeblurExperimentConfig, MomentPooling};
use crate::error::{Error, Result};
use crate::estimator::{toy_mse_curves, toy_squared_errors, ScalarToyConfig};
use crate::linalg::FilterBank;
use crate::minimax::{build_worst_case, constraint_report, demo_scenario, minimax_check, sample_worst_case, Challenger};
use crate::sparse::{sparse_experiment, SparseExperimentConfig};
use crate::tracking::{tracking_experiment, FilterKind, KinematicErrors, TrackingConfig, UNoise};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "PLMMSE_THREADS";

const FEATURE_LABEL: u64 = 0x3133;

/// Summary table and, when requested, the per-run values behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub table: ResultTable,
    pub runs: Option<ResultTable>,
}

/// Runs `f` on a pool of `PLMMSE_THREADS` workers when the variable is set.
pub fn with_thread_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(f());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::InvalidConfiguration(format!("{THREADS_ENV} must be a positive integer, got '{raw}'")))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfiguration(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs the experiment and returns its summary table.
pub fn run(config: &ExperimentConfig) -> Result<ResultTable> {
    Ok(run_detailed(config)?.table)
}

pub fn run_detailed(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let out = with_thread_pool(|| match config.kind {
        ExperimentKind::Toy => toy(config),
        ExperimentKind::Sparse => sparse(config),
        ExperimentKind::Deblur => deblur(config),
        ExperimentKind::Track => track(config),
        ExperimentKind::Minimax => minimax(config),
    })?
    .map_err(|e| e.context(format!("{} experiment", config.kind)))?;
    let mut table = out.table;
    table.prepend_metadata(config.echo())?;
    Ok(RunOutput {
        table,
        runs: if config.store_runs { out.runs } else { None },
    })
}

/// Runs the experiment and writes the tables to `config.output`; returns the
/// written paths.
pub fn execute(config: &ExperimentConfig) -> Result<(RunOutput, Vec<PathBuf>)> {
    let out = run_detailed(config)?;
    let mut written = Vec::new();
    if let Some(path) = &config.output {
        out.table.write_csv(path)?;
        written.push(path.clone());
        if let Some(runs) = &out.runs {
            let p = runs_path(path);
            runs.write_csv(&p)?;
            written.push(p);
        }
    }
    Ok((out, written))
}

fn est(e: &Estimate) -> [f64; 2] {
    [e.mean, e.se]
}

fn toy(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let toy = ScalarToyConfig::new(cfg.f64("sigma-u2")?, cfg.f64("sigma-v2")?)?;
    let alphas = cfg.grid("alpha-grid")?;
    let seeds = SeedTree::new(cfg.seed);
    let curves = toy_mse_curves(&toy, &alphas, cfg.mc_count, seeds)?;
    let mut table = ResultTable::new(["plmmse", "alpha", "mse", "mse_se", "excess", "excess_se"])?;
    for ((a, n), g) in alphas.iter().zip(&curves.naive).zip(&curves.naive_minus_plmmse) {
        let [m, s] = est(n);
        let [gm, gs] = est(g);
        table.push_row(vec![0.0, *a, m, s, gm, gs])?;
    }
    let [m, s] = est(&curves.plmmse);
    table.push_row(vec![1.0, f64::NAN, m, s, 0.0, 0.0])?;
    table.add_metadata("gamma", format_number(curves.gamma))?;
    table.add_metadata("best_alpha", format_number(alphas[curves.best_naive().0]))?;
    table.add_metadata("relative_gap", format_number(curves.relative_gap()))?;

    let runs = if cfg.store_runs {
        let rows = toy_squared_errors(&toy, &alphas, cfg.mc_count, seeds)?;
        let mut cols = vec!["draw".to_string(), "plmmse".to_string()];
        cols.extend((0..alphas.len()).map(|k| format!("naive_{k}")));
        let mut t = ResultTable::new(cols)?;
        for (i, r) in rows.into_iter().enumerate() {
            let mut row = vec![i as f64];
            row.extend(r);
            t.push_row(row)?;
        }
        Some(t)
    } else {
        None
    };
    Ok(RunOutput { table, runs })
}

fn sparse(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let sc = SparseExperimentConfig {
        m: cfg.usize("m")?,
        p: cfg.f64("p")?,
        sigma1_sq: cfg.f64("sigma1-sq")?,
        sigma2_sq: cfg.f64("sigma2-sq")?,
        kernel_decay: cfg.f64("kernel-decay")?,
        column_norm: cfg.f64("column-norm")?,
        g_scale: cfg.f64("g-scale")?,
        snr_grid_db: cfg.grid("snr-grid")?,
        z_snr_db: cfg.f64("z-snr")?,
        mc_count: cfg.mc_count,
        seed: cfg.seed,
        brute_force: cfg.bool("brute-force")?,
        beta_nodes: cfg.usize("beta-nodes")?,
    };
    let res = sparse_experiment(&sc)?;
    let mut cols = vec!["snr_db", "sigma_u2", "z_only", "z_only_se", "y_linear", "y_linear_se", "plmmse", "plmmse_se"];
    if sc.brute_force {
        cols.extend(["mmse", "mmse_se"]);
    }
    let mut table = ResultTable::new(cols.clone())?;
    let mut runs = ResultTable::new(
        ["run", "snr_db", "z_only", "y_linear", "plmmse"]
            .into_iter()
            .chain(sc.brute_force.then_some("mmse")),
    )?;
    for pt in &res.points {
        let mut row = vec![pt.snr_db, pt.sigma_u_sq];
        for e in [pt.z_only_mse(), pt.y_linear_mse(), pt.plmmse_mse()] {
            row.extend(est(&e));
        }
        if let Some(e) = pt.mmse_mse() {
            row.extend(est(&e));
        }
        table.push_row(row)?;
        for r in 0..pt.plmmse.len() {
            let mut row = vec![r as f64, pt.snr_db, pt.z_only[r], pt.y_linear[r], pt.plmmse[r]];
            if let Some(m) = &pt.mmse {
                row.push(m[r]);
            }
            runs.push_row(row)?;
        }
    }
    table.add_metadata("sigma_v2", format_number(sc.sigma_v_sq()))?;
    table.add_metadata("beta", format_number(res.stats.beta[0]))?;
    Ok(RunOutput { table, runs: Some(runs) })
}

fn deblur(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let dc = DeblurExperimentConfig {
        n: cfg.usize("n")?,
        levels: cfg.usize("levels")?,
        bank: match cfg.raw("wavelet")? {
            "sym4" => FilterBank::symlet4(),
            _ => FilterBank::haar(),
        },
        p: cfg.f64("p")?,
        sigma1_sq: cfg.f64("sigma1-sq")?,
        sigma_u_sq: cfg.f64("sigma-u2")?,
        sigma_v_sq: cfg.f64("sigma-v2")?,
        blur_sigma: cfg.f64("blur-sigma")?,
        trials: cfg.mc_count,
        em_iterations: cfg.usize("em-iterations")?,
        pooling: match cfg.raw("pooling")? {
            "per-band" => MomentPooling::PerBand,
            _ => MomentPooling::AllCoefficients,
        },
        seed: cfg.seed,
    };
    let res = deblur_experiment(&dc)?;
    let [d, w, f] = res.summary();
    let mut table = ResultTable::new([
        "denoise", "denoise_se", "wiener", "wiener_se", "fused", "fused_se", "wins", "trials",
    ])?;
    let mut row = Vec::new();
    for e in [d, w, f] {
        row.extend(est(&e));
    }
    row.extend([res.wins() as f64, res.trials.len() as f64]);
    table.push_row(row)?;
    let mut runs = ResultTable::new(["trial", "denoise", "wiener", "fused", "sigma_w2_hat", "beta_hat", "clamped"])?;
    for (i, t) in res.trials.iter().enumerate() {
        runs.push_row(vec![
            i as f64,
            t.denoise_only,
            t.wiener_only,
            t.fused,
            t.sigma_w_sq_hat,
            t.beta_hat,
            f64::from(u8::from(t.clamped)),
        ])?;
    }
    Ok(RunOutput { table, runs: Some(runs) })
}

fn track(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let sq = |k: &str| cfg.f64(k).map(|v| v * v);
    let tc = TrackingConfig {
        p: cfg.f64("p")?,
        sigma1_sq: sq("sigma1")?,
        sigma2_sq: sq("sigma2")?,
        sigma_u_sq: sq("sigma-u")?,
        sigma_v_grid: cfg.grid("sigma-v-grid")?,
        mc_runs: cfg.mc_count,
        steps: cfg.usize("steps")?,
        u_noise: match cfg.raw("u-noise")? {
            "mixture" => UNoise::Mixture {
                outlier_prob: cfg.f64("outlier-prob")?,
                variance_ratio: cfg.f64("variance-ratio")?,
            },
            _ => UNoise::Gaussian,
        },
        seed: cfg.seed,
        transition: None,
    };
    let res = tracking_experiment(&tc)?;
    let names: Vec<String> = FilterKind::ALL
        .iter()
        .flat_map(|f| KinematicErrors::NAMES.iter().map(move |q| format!("{}_{q}", f.name())))
        .collect();
    let mut cols = vec!["sigma_v".to_string(), "beta".to_string()];
    for n in &names {
        cols.push(n.clone());
        cols.push(format!("{n}_se"));
    }
    cols.push("imm_fallbacks".into());
    let mut table = ResultTable::new(cols)?;
    let mut run_cols = vec!["sigma_v".to_string(), "run".to_string()];
    run_cols.extend(names.iter().cloned());
    let mut runs = ResultTable::new(run_cols)?;
    for pt in &res.points {
        let mut row = vec![pt.sigma_v, pt.beta];
        for f in FilterKind::ALL {
            for q in 0..3 {
                row.extend(est(&pt.estimate(f, q)));
            }
        }
        row.push(pt.imm_fallbacks as f64);
        table.push_row(row)?;
        for (r, errs) in pt.runs.iter().enumerate() {
            let mut row = vec![pt.sigma_v, r as f64];
            for (fi, _) in FilterKind::ALL.iter().enumerate() {
                row.extend((0..3).map(|q| errs[fi].get(q)));
            }
            runs.push_row(row)?;
        }
    }
    Ok(RunOutput { table, runs: Some(runs) })
}

fn minimax(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let seeds = SeedTree::new(cfg.seed);
    let (target, sampler) = demo_scenario(
        cfg.usize("x-dim")?,
        cfg.usize("y-dim")?,
        cfg.usize("z-dim")?,
        cfg.f64("slack")?,
        &seeds.child(0),
    )?;
    let c = build_worst_case(target, sampler, cfg.usize("build-mc")?, &seeds.child(1))?;
    let train_count = cfg.usize("train")?;
    if train_count < 2 {
        return Err(Error::invalid("train must be at least 2"));
    }
    let train = sample_worst_case(&c, train_count, &seeds.child(2))?;
    let mut challengers = vec![Challenger::mean(train.x.mean()), Challenger::joint_linear(&train)?];
    let mut rng = seeds.stream(FEATURE_LABEL, 0);
    let features = cfg.usize("features")?;
    for k in 0..cfg.usize("challengers")? {
        challengers.push(Challenger::random_features(format!("random_features_{k}"), &train, features, &mut rng)?);
    }
    let report = minimax_check(&c, &challengers, cfg.mc_count, &seeds.child(4))?;
    let fresh = sample_worst_case(&c, cfg.mc_count, &seeds.child(5))?;
    let constraints = constraint_report(&c, &fresh)?;

    let mut table = ResultTable::new(["estimator", "mse", "mse_se", "excess", "excess_se"])?;
    let [m, s] = est(&report.plmmse);
    table.push_row(vec![0.0, m, s, 0.0, 0.0])?;
    table.add_metadata("estimator_0", "plmmse")?;
    for (i, r) in report.challengers.iter().enumerate() {
        let [m, s] = est(&r.mse);
        let [xm, xs] = est(&r.excess);
        table.push_row(vec![(i + 1) as f64, m, s, xm, xs])?;
        table.add_metadata(format!("estimator_{}", i + 1), &r.name)?;
    }
    table.add_metadata("min_eigenvalue_uu", format_number(c.min_eigenvalue))?;
    table.add_metadata("max_formula_deviation", format_number(report.max_formula_deviation))?;
    table.add_metadata("cov_xx_rel_error", format_number(constraints.cov_xx_error))?;
    table.add_metadata("cov_xy_rel_error", format_number(constraints.cov_xy_error))?;
    table.add_metadata("regression_residuals_within_3se", constraints.residuals_within(3.0))?;

    let mut cols = vec!["sample".to_string(), "plmmse".to_string()];
    cols.extend(report.challengers.iter().map(|r| r.name.clone()));
    let mut runs = ResultTable::new(cols)?;
    for (i, r) in report.squared_errors.iter().enumerate() {
        let mut row = vec![i as f64];
        row.extend(r);
        runs.push_row(row)?;
    }
    Ok(RunOutput { table, runs: Some(runs) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ExperimentKind) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(kind);
        match kind {
            ExperimentKind::Toy => c.set("mc", "20000").unwrap(),
            ExperimentKind::Sparse => {
                c.set("m", "16").unwrap();
                c.set("mc", "20").unwrap();
                c.set("snr-grid", "0:10:20").unwrap();
            }
            ExperimentKind::Deblur => {
                c.set("n", "512").unwrap();
                c.set("levels", "4").unwrap();
                c.set("mc", "4").unwrap();
            }
            ExperimentKind::Track => {
                c.set("mc", "2").unwrap();
                c.set("steps", "100").unwrap();
                c.set("sigma-v-grid", "1:7:15").unwrap();
            }
            ExperimentKind::Minimax => {
                c.set("mc", "10000").unwrap();
                c.set("build-mc", "10000").unwrap();
                c.set("train", "2000").unwrap();
                c.set("challengers", "2").unwrap();
            }
        }
        c.store_runs = true;
        c
    }

    #[test]
    fn every_experiment_is_deterministic_and_se_consistent() {
        for kind in ExperimentKind::ALL {
            let cfg = small(kind);
            let a = run_detailed(&cfg).unwrap();
            let b = run_detailed(&cfg).unwrap();
            assert_eq!(a.table.to_csv(), b.table.to_csv(), "{kind}");
            assert_eq!(a.table.meta("seed"), Some("1"));
            let runs = a.runs.expect("runs stored");
            assert!(!runs.rows().is_empty());
            assert!(!a.table.se_pairs().is_empty() || kind == ExperimentKind::Deblur);
        }
    }

    #[test]
    fn toy_table_shape_and_se() {
        let mut cfg = small(ExperimentKind::Toy);
        cfg.set("alpha-grid", "0:0.25:1").unwrap();
        let out = run_detailed(&cfg).unwrap();
        assert_eq!(out.table.rows().len(), 6);
        let runs = out.runs.unwrap();
        for (k, row) in out.table.rows().iter().enumerate() {
            let col = if k < 5 { format!("naive_{k}") } else { "plmmse".into() };
            let e = Estimate::from_samples(&runs.column(&col).unwrap());
            assert!((e.se - row[3]).abs() <= 1e-12 * e.se.max(1.0));
            assert!((e.mean - row[2]).abs() <= 1e-12 * e.mean.max(1.0));
        }
    }

    #[test]
    fn output_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(ExperimentKind::Deblur);
        cfg.output = Some(dir.path().join("d.csv"));
        let (_, written) = execute(&cfg).unwrap();
        assert_eq!(written.len(), 2);
        let back = ResultTable::read_csv(&written[0]).unwrap();
        assert_eq!(back.meta("experiment"), Some("deblur"));
        assert_eq!(ResultTable::read_csv(&written[1]).unwrap().rows().len(), 4);
    }
}
