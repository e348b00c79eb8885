//! Run orchestration behind the `kdv2` subcommands. Every entry point
//! validates its configuration before touching the output directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{picard_iterate, wv_regularity_study, ContractionReport, PicardSettings, WvStudyConfig};
use crate::equations::soliton;
use crate::error::{Error, Result};
use crate::hamiltonian::invariant_report;
use crate::integrators::{evolve, StepConfig};
use crate::io::{
    write_ensemble_csv, write_invariants_csv, write_json, write_nit_check_csv, write_picard_csv,
    write_snapshot, write_wv_norms_csv, EnsembleRow, NitCheckRow, RunConfig,
};
use crate::nit::{equivalence_experiment, loglog_slope, transformed_coefficients, NitParams};
use crate::noise::RNG_ALGORITHM;
use crate::trajectory::BlowUpRecord;

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "KDV2_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub preset: String,
    pub scheme: String,
    pub seed: u64,
    pub rng: &'static str,
    pub n_points: usize,
    pub length: f64,
    pub dt: f64,
    pub t_final: f64,
    pub snapshots: usize,
    pub final_time: f64,
    pub final_sup_norm: f64,
    pub final_mass: f64,
    pub final_l2: f64,
    pub final_hamiltonian: f64,
    pub blew_up: bool,
    pub blowup: Option<BlowUpRecord>,
    /// Excluded from byte-for-byte replay comparisons.
    pub wall_time_s: f64,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.blew_up {
            1
        } else {
            0
        }
    }
}

fn prepare_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

fn snapshot_name(i: usize) -> String {
    format!("snap_{i:06}.bin")
}

/// Runs one trajectory and writes `config.resolved`, `invariants.csv`,
/// `snapshots/` and `summary.json` into `out`.
pub fn run(config: &RunConfig, out: &Path) -> Result<RunSummary> {
    config.validate()?;
    let start = Instant::now();
    let grid = config.grid()?;
    let set = config.coefficients()?;
    let model = config.noise_model();
    let cfg = config.step_config();
    let u0 = config.init.build(&grid)?;

    let traj = evolve(&u0, &set, &model, &cfg)?;
    let report = invariant_report(&traj, set.alpha, set.beta)?;

    prepare_dir(out)?;
    fs::write(out.join("config.resolved"), config.to_toml_string())?;
    let snaps = out.join("snapshots");
    fs::create_dir_all(&snaps)?;
    for (i, (t, s)) in traj.times.iter().zip(&traj.snapshots).enumerate() {
        write_snapshot(&snaps.join(snapshot_name(i)), s, *t)?;
    }
    write_invariants_csv(&out.join("invariants.csv"), &report)?;

    let last = report.last().expect("nonempty report");
    let summary = RunSummary {
        preset: config.preset.name().into(),
        scheme: cfg.scheme.name().into(),
        seed: model.seed,
        rng: RNG_ALGORITHM,
        n_points: grid.n_points(),
        length: grid.length(),
        dt: cfg.dt,
        t_final: cfg.t_final,
        snapshots: traj.len(),
        final_time: traj.final_time(),
        final_sup_norm: traj.last().expect("nonempty").sup_norm(),
        final_mass: last.mass,
        final_l2: last.l2,
        final_hamiltonian: last.hamiltonian,
        blew_up: traj.terminated_early.is_some(),
        blowup: traj.terminated_early,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Worker pool honouring `KDV2_THREADS`.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
        if n == 0 {
            return Err(Error::Usage(format!("{THREADS_ENV} must be at least 1")));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Usage(format!("cannot build worker pool: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub members: usize,
    pub base_seed: u64,
    pub blowups: usize,
    pub blowup_fraction: f64,
    pub rows: Vec<EnsembleRow>,
}

pub fn member_dir(out: &Path, index: usize) -> PathBuf {
    out.join(format!("member_{index:04}"))
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = if xs.len() > 1 { xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, v)
}

/// `m` members with seeds `base + index`, each written to `member_XXXX/`,
/// then `ensemble.csv` with mean and variance of the final scalars over the
/// members that did not blow up, plus the blow-up fraction.
pub fn ensemble(config: &RunConfig, m: usize, out: &Path) -> Result<EnsembleSummary> {
    if m == 0 {
        return Err(Error::Usage("ensemble size must be at least 1".into()));
    }
    config.validate()?;
    let pool = thread_pool()?;
    prepare_dir(out)?;
    fs::write(out.join("config.resolved"), config.to_toml_string())?;
    let base = config.noise.seed;
    let results: Vec<RunSummary> = pool.install(|| {
        (0..m)
            .into_par_iter()
            .map(|i| {
                let mut c = config.clone();
                c.noise.seed = base.wrapping_add(i as u64);
                c.ensemble = 1;
                run(&c, &member_dir(out, i))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let ok: Vec<&RunSummary> = results.iter().filter(|r| !r.blew_up).collect();
    let blowups = m - ok.len();
    let mut rows = Vec::new();
    let scalars: [(&str, fn(&RunSummary) -> f64); 4] = [
        ("final_mass", |r| r.final_mass),
        ("final_l2", |r| r.final_l2),
        ("final_hamiltonian", |r| r.final_hamiltonian),
        ("final_sup_norm", |r| r.final_sup_norm),
    ];
    for (name, f) in scalars {
        let xs: Vec<f64> = ok.iter().map(|r| f(r)).collect();
        let (mean, variance) = mean_var(&xs);
        rows.push(EnsembleRow { quantity: name.into(), mean, variance, members: xs.len() });
    }
    let p = blowups as f64 / m as f64;
    rows.push(EnsembleRow { quantity: "blowup_fraction".into(), mean: p, variance: p * (1.0 - p), members: m });
    write_ensemble_csv(&out.join("ensemble.csv"), &rows)?;
    let summary = EnsembleSummary { members: m, base_seed: base, blowups, blowup_fraction: p, rows };
    write_json(&out.join("ensemble_summary.json"), &summary)?;
    Ok(summary)
}

/// Picard iteration on `[0, picard.t_horizon]`; writes `picard.csv` and
/// `picard_summary.json`.
pub fn picard(config: &RunConfig, out: &Path) -> Result<ContractionReport> {
    config.validate()?;
    let p = &config.picard;
    let grid = config.grid()?;
    let set = config.coefficients()?;
    let model = config.noise_model();
    let cfg = StepConfig { t_final: p.t_horizon, ..config.step_config() };
    let settings = PicardSettings { n_iter: p.iters, sigma: p.sigma, kappa: p.kappa, radius: None };
    let u0 = config.init.build(&grid)?;
    let (report, _) = picard_iterate(&u0, &set, &model, &cfg, &settings)?;
    prepare_dir(out)?;
    fs::write(out.join("config.resolved"), config.to_toml_string())?;
    write_picard_csv(&out.join("picard.csv"), &report.successive_diffs)?;
    write_json(&out.join("picard_summary.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NitCheckSummary {
    pub identity_cubic: String,
    pub identity_mixed: String,
    pub matches_kdv2a: bool,
    pub rows: Vec<NitCheckRow>,
    pub slope: Option<f64>,
}

/// Rational identities plus the equivalence experiment with a soliton of
/// speed 1; writes `nit_check.csv`.
pub fn nit_check(config: &RunConfig, out: &Path) -> Result<NitCheckSummary> {
    let s = &config.nit_check;
    if s.alphas.is_empty() || s.alphas.iter().any(|a| !(*a >= 0.0)) {
        return Err(Error::Usage("nit-check needs a nonempty list of nonnegative alphas".into()));
    }
    let grid = config.grid()?;
    StepConfig::new(s.dt, s.t_final, crate::integrators::Scheme::Etd4).validate()?;

    let p = NitParams::new(1.0, 1.0);
    let src = crate::equations::CoefficientSet::preset(crate::equations::Preset::Kdv2Moving, 1.0, 1.0)?;
    let t = transformed_coefficients(&p, &src)?;
    let u0 = soliton(&grid, 1.0, grid.length() / 2.0)?;
    let rows = equivalence_experiment(&u0, &s.alphas, s.t_final, s.dt)?;
    let xs: Vec<f64> = rows.iter().map(|r| r.alpha).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.error_sup).collect();
    let slope = loglog_slope(&xs, &ys);
    let out_rows: Vec<NitCheckRow> = rows
        .iter()
        .map(|r| NitCheckRow {
            alpha: r.alpha,
            beta: r.beta,
            error_sup: r.error_sup,
            slope_estimate: slope.unwrap_or(f64::NAN),
        })
        .collect();
    prepare_dir(out)?;
    write_nit_check_csv(&out.join("nit_check.csv"), &out_rows)?;
    Ok(NitCheckSummary {
        identity_cubic: format!("{}", t.table.u2ux),
        identity_mixed: format!("{}", t.table.uxu2x),
        matches_kdv2a: t.preset == Some(crate::equations::Preset::Kdv2a),
        rows: out_rows,
        slope,
    })
}

/// Monte Carlo regularity study of the stochastic convolution; writes
/// `wv_norms.csv`.
pub fn noise_check(config: &RunConfig, out: &Path) -> Result<crate::analysis::WvStudyTable> {
    let s = &config.noise_check;
    let model = config.noise_model();
    if model.is_zero() {
        log::warn!("noise amplitude is zero; every norm will vanish");
    }
    let cfg = WvStudyConfig { length: s.length, dt: s.dt, t_final: s.t_final, xhat_sigma: None };
    let pool = thread_pool()?;
    let table = pool.install(|| wv_regularity_study(&model, s.sigma_tilde, s.epsilon, s.paths, &s.grids, &cfg))?;
    prepare_dir(out)?;
    write_wv_norms_csv(&out.join("wv_norms.csv"), &table.rows)?;
    write_json(&out.join("wv_summary.json"), &table)?;
    Ok(table)
}
