//! Subcommand implementations.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use serde::Serialize;
use tenreg::benchmarks::{self, Benchmark, ExperimentConfig, Schedule};
use tenreg::paramspace::latin_hypercube;
use tenreg::solver::{self, SolverConfig, SolverState};
use tenreg::{sampler, stats, CpModel, Marginal, ParameterSpace, SampleSet, SolverMode};

use crate::config::{Failure, RunConfig};
use crate::simulator;
use crate::{AdaptArgs, BenchArgs, BenchCmd, FitArgs, PredictArgs, SampleArgs, SolverOverrides, StatsArgs};

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("writing {}", path.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn samples_bytes(data: &SampleSet) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    data.write_csv(&mut buf)?;
    Ok(buf)
}

fn save_model(model: &CpModel, path: &Path) -> Result<()> {
    write_atomic(path, model.to_json()?.as_bytes())
}

fn load_model(path: &Path) -> Result<CpModel> {
    CpModel::read_path(path).with_context(|| format!("reading model {}", path.display()))
}

fn read_samples(path: &Path, space: Option<&ParameterSpace>) -> Result<SampleSet> {
    SampleSet::read_csv_path(path, space).with_context(|| format!("reading samples {}", path.display()))
}

fn required(value: Option<PathBuf>, what: &str, key: &str) -> Result<PathBuf> {
    value.ok_or_else(|| Failure::Config(format!("no {what}: pass --{key} or set paths.{key}")).into())
}

/// Appends CSV text to `path`, dropping the header line when the file
/// already has content.
fn append_csv(path: &Path, text: &[u8]) -> Result<()> {
    let exists = path.metadata().map(|m| m.len() > 0).unwrap_or(false);
    let body = if exists {
        match text.iter().position(|&b| b == b'\n') {
            Some(i) => &text[i + 1..],
            None => &[][..],
        }
    } else {
        text
    };
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    f.write_all(body)?;
    Ok(())
}

fn apply_overrides(cfg: &mut RunConfig, o: &SolverOverrides) -> Result<()> {
    if let Some(p) = o.degree {
        cfg.degree = p;
    }
    if let Some(m) = &o.mode {
        cfg.solver.mode = m.parse::<SolverMode>().map_err(|e| Failure::Config(e.to_string()))?;
    }
    if let Some(r) = o.rank {
        cfg.solver.rank = r;
    }
    if let Some(l) = o.lambda0 {
        cfg.solver.lambda0 = l;
    }
    if let Some(q) = o.q {
        cfg.solver.q = q;
    }
    if let Some(l) = o.polish_lambda0 {
        cfg.solver.polish_lambda0 = Some(l);
    }
    if let Some(n) = o.max_iters {
        cfg.solver.max_iters = n;
    }
    if let Some(t) = o.tol {
        cfg.solver.tol = t;
    }
    Ok(())
}

fn fit_log_bytes(state: &SolverState) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    state.write_fit_log(&mut buf)?;
    Ok(buf)
}

pub fn sample(args: SampleArgs) -> Result<()> {
    let cfg = RunConfig::load(args.config.as_deref())?;
    cfg.validate()?;
    let space = cfg.space()?;
    let n = args
        .n
        .or(cfg.n_init)
        .ok_or_else(|| Failure::Config("no sample count: pass --n or set n_init".into()))?;
    if n == 0 {
        return Err(cfg.error_at("n_init", "must be at least 1").into());
    }
    let seed = args
        .seed
        .or(cfg.seed)
        .ok_or_else(|| Failure::Config("no seed: pass --seed or set seed".into()))?;
    let out = required(args.out.or(cfg.paths.samples.clone()), "output file", "samples")?;
    let data = SampleSet::from_unit(&space, latin_hypercube(n, space.dim(), seed)?)?;
    write_atomic(&out, &samples_bytes(&data)?)?;
    info!("wrote {n} unlabeled points to {}", out.display());
    Ok(())
}

pub fn fit(args: FitArgs) -> Result<()> {
    let mut cfg = RunConfig::load(args.config.as_deref())?;
    apply_overrides(&mut cfg, &args.solver)?;
    cfg.validate()?;
    let samples = required(args.samples.or(cfg.paths.samples.clone()), "sample file", "samples")?;
    let out = required(args.out.or(cfg.paths.model.clone()), "model file", "model")?;
    let warm = args.warm.as_deref().map(load_model).transpose()?;
    let space = match &warm {
        Some(m) => m.space().clone(),
        None => cfg.space()?,
    };
    let degree = match &warm {
        Some(m) if args.solver.degree.is_none() => m.degree(),
        _ => cfg.degree,
    };
    let data = read_samples(&samples, Some(&space))?;
    data.labeled_outputs()
        .with_context(|| format!("{} is not fully labeled", samples.display()))?;

    let mut solver_config = cfg.solver.clone();
    if args.cv {
        let grid = args.cv_grid.unwrap_or_else(|| solver::lambda0_grid().to_vec());
        let cv = solver::cross_validate_lambda0(&data, &space, degree, &solver_config, &grid, args.seed)?;
        info!("cross-validated lambda0 = {:e}", cv.best);
        solver_config.lambda0 = cv.best;
    }
    let (model, state) = solver::fit(&data, &space, degree, &solver_config, warm.as_ref(), args.seed)?;
    save_model(&model, &out)?;
    info!(
        "fitted rank {} on {} samples in {} sweeps; wrote {}",
        model.rank(),
        data.len(),
        state.iter,
        out.display()
    );
    let log_path = args
        .fit_log
        .or_else(|| cfg.paths.reports.as_ref().map(|d| d.join("fit_log.csv")));
    if let Some(p) = log_path {
        write_atomic(&p, &fit_log_bytes(&state)?)?;
    }
    Ok(())
}

/// Relative error of `model` on labeled points.
fn batch_error(model: &CpModel, points: &[Vec<f64>], ys: &[f64]) -> Result<f64> {
    let pred: Vec<f64> = points.iter().map(|x| model.evaluate(x)).collect();
    Ok(benchmarks::relative_l2(&pred, ys)?)
}

pub fn adapt(args: AdaptArgs) -> Result<()> {
    let mut cfg = RunConfig::load(args.config.as_deref())?;
    apply_overrides(&mut cfg, &args.solver)?;
    if let Some(b) = args.budget {
        cfg.sampler.budget = Some(b);
    }
    if let Some(k) = args.batch_size {
        cfg.sampler.batch_size = k;
    }
    if let Some(m) = args.m_factor {
        cfg.sampler.m_factor = m;
    }
    if let Some(n) = args.n_init {
        cfg.n_init = Some(n);
    }
    cfg.validate()?;
    if let Some(t) = args.target_error {
        if !(t > 0.0) {
            return Err(Failure::Config(format!("--target-error must be positive, got {t}")).into());
        }
    }
    let seed = args.seed;
    let samples = required(args.samples.or(cfg.paths.samples.clone()), "sample file", "samples")?;
    let model_path = required(args.model.or(cfg.paths.model.clone()), "model file", "model")?;
    let reports = args.reports.or(cfg.paths.reports.clone());
    let budget = cfg
        .sampler
        .budget
        .ok_or_else(|| Failure::Config("no budget: pass --budget or set sampler.budget".into()))?;

    let existing = if model_path.exists() {
        Some(load_model(&model_path)?)
    } else {
        None
    };
    let space = match (&existing, &cfg.space) {
        (Some(m), None) => m.space().clone(),
        _ => cfg.space()?,
    };
    let degree = existing.as_ref().map_or(cfg.degree, |m| m.degree());

    let mut data = if samples.exists() {
        read_samples(&samples, Some(&space))?
    } else {
        let n = cfg.n_init.ok_or_else(|| {
            Failure::Config(format!(
                "{} does not exist and no initial design size is set (n_init)",
                samples.display()
            ))
        })?;
        if n == 0 {
            return Err(cfg.error_at("n_init", "must be at least 1").into());
        }
        let data = SampleSet::from_unit(&space, latin_hypercube(n, space.dim(), seed)?)?;
        write_atomic(&samples, &samples_bytes(&data)?)?;
        info!("wrote {n} initial design points to {}", samples.display());
        data
    };

    let missing = data.missing_rows();
    if !missing.is_empty() {
        let points: Vec<Vec<f64>> = missing.iter().map(|&i| data.phys_row(i)).collect();
        let ys = simulator::run(&args.simulator, &points)?;
        for (&i, y) in missing.iter().zip(ys) {
            data.set_output(i, y);
        }
        write_atomic(&samples, &samples_bytes(&data)?)?;
        info!("labeled {} rows of {}", missing.len(), samples.display());
    }

    if data.len() >= budget && existing.is_some() && missing.is_empty() {
        println!(
            "budget already spent: {} labeled samples, budget {budget}; nothing to do",
            data.len()
        );
        return Ok(());
    }

    let fit_log = reports.as_ref().map(|d| d.join("fit_log.csv"));
    let sampling_log = reports.as_ref().map(|d| d.join("sampling_log.csv"));
    let solver_config: SolverConfig = cfg.solver.clone();

    let mut model = match existing {
        Some(m) if missing.is_empty() => m,
        warm => {
            let (m, state) = solver::fit(&data, &space, degree, &solver_config, warm.as_ref(), seed)?;
            save_model(&m, &model_path)?;
            if let Some(p) = &fit_log {
                append_csv(p, &fit_log_bytes(&state)?)?;
            }
            info!("n={} rank={}", data.len(), m.rank());
            m
        }
    };

    while data.len() < budget {
        let k = cfg.sampler.batch_size.min(budget - data.len());
        let m = sampler::mc_sample_count(data.len(), cfg.sampler.m_factor);
        let round = data.len();
        let picks = sampler::select_next(&data, &model, k, m, seed, round as u32)?;
        if picks.is_empty() {
            warn!("no new candidate points; stopping at {} samples", data.len());
            break;
        }
        let points: Vec<Vec<f64>> = picks.iter().map(|p| p.candidate.point_phys.clone()).collect();
        let ys = simulator::run(&args.simulator, &points)?;
        let batch_err = batch_error(&model, &points, &ys).ok();

        for (p, &y) in picks.iter().zip(&ys) {
            data.push(&p.candidate.point_unit, &p.candidate.point_phys, Some(y))?;
        }
        write_atomic(&samples, &samples_bytes(&data)?)?;
        if let Some(path) = &sampling_log {
            let mut buf = Vec::new();
            sampler::write_sampling_log(&mut buf, round, &picks, true)?;
            append_csv(path, &buf)?;
        }

        let (next, state) = solver::fit(&data, &space, degree, &solver_config, Some(&model), seed)?;
        model = next;
        save_model(&model, &model_path)?;
        if let Some(p) = &fit_log {
            append_csv(p, &fit_log_bytes(&state)?)?;
        }
        match batch_err {
            Some(e) => info!("n={} rank={} error on new batch {e:.3e}", data.len(), model.rank()),
            None => info!("n={} rank={}", data.len(), model.rank()),
        }
        if let (Some(target), Some(e)) = (args.target_error, batch_err) {
            if e <= target {
                info!("target error {target:e} reached ({e:.3e})");
                break;
            }
        }
    }
    Ok(())
}

pub fn predict(args: PredictArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let data = read_samples(&args.samples, Some(model.space()))?;
    let pred = model.evaluate_rows(data.phys_points());
    let mut w = csv::Writer::from_writer(Vec::new());
    let d = model.dim();
    let mut header: Vec<String> = (1..=d).map(|k| format!("x_{k}")).collect();
    header.push("y_hat".into());
    w.write_record(&header)?;
    for (i, y) in pred.iter().enumerate() {
        let mut rec: Vec<String> = data.phys_row(i).iter().map(|v| v.to_string()).collect();
        rec.push(y.to_string());
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    match &args.out {
        Some(p) => write_atomic(p, &bytes),
        None => {
            std::io::stdout().write_all(&bytes)?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct SobolSummary {
    main: Vec<f64>,
    total: Vec<f64>,
}

#[derive(Serialize)]
struct StatsSummary {
    mean: f64,
    std: f64,
    sobol: Option<SobolSummary>,
}

pub fn stats(args: StatsArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let mean = stats::mean(&model);
    let var = stats::variance(&model);
    let sobol = match stats::sobol(&model) {
        Ok(r) => Some(r),
        Err(tenreg::Error::ZeroVariance(v)) => {
            warn!("surrogate variance is {v:e}; Sobol indices skipped");
            None
        }
        Err(e) => return Err(e.into()),
    };
    let summary = StatsSummary {
        mean,
        std: var.max(0.0).sqrt(),
        sobol: sobol.as_ref().map(|r| SobolSummary {
            main: r.main.clone(),
            total: r.total.clone(),
        }),
    };
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    match &args.out {
        Some(p) => write_atomic(p, json.as_bytes())?,
        None => print!("{json}"),
    }
    if let Some(p) = &args.sobol_csv {
        match &sobol {
            Some(r) => {
                let mut buf = Vec::new();
                r.write_csv(&mut buf)?;
                write_atomic(p, &buf)?;
            }
            None => warn!("no Sobol indices to write to {}", p.display()),
        }
    }
    if let Some(p) = &args.kde {
        let values = stats::mc_values(&model, args.mc_samples, args.seed)?;
        let grid = stats::kde_grid(&values, args.grid_points);
        match stats::kde(&values, &grid) {
            Ok(density) => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["y", "density"])?;
                for (y, f) in grid.iter().zip(&density) {
                    w.write_record([y.to_string(), f.to_string()])?;
                }
                write_atomic(p, &w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?)?;
            }
            Err(e) => warn!("density table skipped: {e}"),
        }
    }
    Ok(())
}

fn write_experiment(dir: &Path, exp: &benchmarks::Experiment, sobol: Option<&tenreg::SobolReport>) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut report = exp.report.clone();
    if let Some(r) = sobol {
        let mut buf = Vec::new();
        r.write_csv(&mut buf)?;
        write_atomic(&dir.join("sobol.csv"), &buf)?;
        report.final_stats.sobol_path = Some("sobol.csv".into());
    }
    write_atomic(&dir.join("report.json"), report.to_json()?.as_bytes())?;
    let mut curves = Vec::new();
    report.write_curves_csv(&mut curves)?;
    write_atomic(&dir.join("curves.csv"), &curves)?;
    save_model(&exp.model, &dir.join("model.json"))?;
    write_atomic(&dir.join("samples.csv"), &samples_bytes(&exp.data)?)?;
    Ok(())
}

pub fn bench(args: BenchArgs) -> Result<()> {
    match args.which {
        BenchCmd::Synthetic {
            seed,
            out,
            n_init,
            batches,
            batch_size,
            test_size,
            oracle_samples,
        } => {
            let bench = Benchmark::synthetic_100().with_test_size(test_size);
            let config = ExperimentConfig {
                cv_grid: Some(solver::log_grid(-4.0, 6.0, 11)),
                ..ExperimentConfig::default()
            };
            let schedule = Schedule {
                n_init,
                batches,
                batch_size,
            };
            let exp = benchmarks::run_adaptive_experiment(&bench, &config, &schedule, seed)?;
            let sobol = stats::sobol(&exp.model).ok();
            write_experiment(&out, &exp, sobol.as_ref())?;
            if let Some(n) = oracle_samples {
                let (main, total) = benchmarks::mc_sobol_oracle(&bench, n, seed)?;
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["index", "S", "T"])?;
                for (j, (s, t)) in main.iter().zip(&total).enumerate() {
                    w.write_record([(j + 1).to_string(), s.to_string(), t.to_string()])?;
                }
                write_atomic(&out.join("oracle_sobol.csv"), &w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?)?;
            }
            let last = exp.report.rounds.last().expect("at least one round");
            println!(
                "n={} rank={} test error {:.3e} mean {:.3} std {:.3}",
                last.n_train, last.rank, last.test_error, exp.report.final_stats.mean, exp.report.final_stats.std
            );
        }
        BenchCmd::Planted {
            seed,
            out,
            dim,
            rank,
            degree,
            n,
        } => {
            if dim == 0 || rank == 0 {
                bail!(Failure::Config("--dim and --rank must be at least 1".into()));
            }
            let space = ParameterSpace::iid(Marginal::uniform(-1.0, 1.0)?, dim)?;
            let truth = benchmarks::planted_model(&space, degree, rank, seed)?;
            let n = n.unwrap_or(4 * truth.unknowns());
            let bench = Benchmark::planted(truth);
            let config = ExperimentConfig {
                degree,
                solver: SolverConfig {
                    rank: rank + 2,
                    lambda0: 0.1,
                    polish_lambda0: Some(1e-6),
                    max_iters: 20_000,
                    tol: 1e-10,
                    ..SolverConfig::default()
                },
                ..ExperimentConfig::default()
            };
            let schedule = Schedule {
                n_init: n,
                batches: 0,
                batch_size: 1,
            };
            let exp = benchmarks::run_adaptive_experiment(&bench, &config, &schedule, seed)?;
            let sobol = stats::sobol(&exp.model).ok();
            write_experiment(&out, &exp, sobol.as_ref())?;
            let last = exp.report.rounds.last().expect("at least one round");
            println!(
                "planted rank {rank}, recovered rank {} on {} samples, test error {:.3e}",
                last.rank, last.n_train, last.test_error
            );
        }
    }
    Ok(())
}
