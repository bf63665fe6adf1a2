//! Experiment runners.
//!
//! Chain experiments share one planted instance across trials (AMP draws one
//! instance per trial). Trial `i` uses the seed `trial_seed(master_seed, i)`;
//! the shared instance uses a separate stream of the master seed. Per-trial
//! files are written as soon as a trial finishes.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::index::sample;
use rayon::prelude::*;

use swlab_core::amp::{amp_init, amp_like_map, amp_trace, AmpInit, SpectralScale};
use swlab_core::dynamics::{
    curie_weiss_rgd, default_inner_steps, glauber_run, overlap_concentration_probe, prgd_run,
    rgd_run, rgd_step, GlauberChain, GlauberOptions, IsingModel, Trajectory,
};
use swlab_core::instances::{assemble, assemble_ones, write_instance, SpikedInstance};
use swlab_core::rng::{derive_seed, rng_from_seed, stream, trial_seed};
use swlab_core::scalar::{at_condition, find_opt, solve_q, FixedPointReport, Regime};
use swlab_core::SpinConfiguration;

use crate::config::{AmpInitKind, ExperimentConfig, ExperimentKind, StartKind};
use crate::summary::{quantiles, InstanceMeta, RunSummary, TrialRecord, Versions};
use crate::HarnessError;

type Result<T> = std::result::Result<T, HarnessError>;

/// Stream tag of the shared instance.
const INSTANCE_STREAM: u64 = 0x696e_7374;

/// Relative threshold on `|R|/OPT` that counts as having left the origin.
pub const ESCAPE_FRACTION_OF_OPT: f64 = 0.5;

/// Runs `cfg`, writes its files to `cfg.output_dir` and returns the summary.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| {
        HarnessError::Input(format!("cannot create {}: {e}", cfg.output_dir.display()))
    })?;
    let clock = Instant::now();
    let mut summary = match cfg.experiment {
        ExperimentKind::FixedPoint => run_fixed_point(cfg, false),
        ExperimentKind::PhaseDiagram => run_fixed_point(cfg, true),
        ExperimentKind::Glauber => run_glauber(cfg),
        ExperimentKind::Rgd => run_rgd(cfg),
        ExperimentKind::Prgd => run_prgd(cfg),
        ExperimentKind::Amp => run_amp(cfg),
        ExperimentKind::Compare => run_compare(cfg),
        ExperimentKind::Magnetization => run_magnetization(cfg),
        ExperimentKind::CurieWeiss => run_curie_weiss(cfg),
        ExperimentKind::OverlapProbe => run_overlap_probe(cfg),
    }?;
    summary.wall_ms = clock.elapsed().as_millis() as u64;
    summary.write(&summary_path(cfg))?;
    Ok(summary)
}

pub fn summary_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.join(format!("{}_summary.json", cfg.experiment))
}

/// `{experiment}_{trial:04}.csv`.
pub fn trial_file_name(kind: ExperimentKind, trial: usize) -> String {
    format!("{kind}_{trial:04}.csv")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::Internal(format!("cannot create {}: {e}", path.display())))
}

fn write_trajectory(cfg: &ExperimentConfig, trial: usize, t: &Trajectory) -> Result<Option<String>> {
    if !cfg.write_trajectories {
        return Ok(None);
    }
    let name = trial_file_name(cfg.experiment, trial);
    t.write_csv(create(&cfg.output_dir.join(&name))?)?;
    Ok(Some(name))
}

fn write_text(cfg: &ExperimentConfig, name: &str, text: &str) -> Result<()> {
    std::fs::write(cfg.output_dir.join(name), text)
        .map_err(|e| HarnessError::Internal(format!("cannot write {name}: {e}")))
}

fn pool(cfg: &ExperimentConfig) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        b = b.num_threads(w);
    }
    b.build().map_err(|e| HarnessError::Internal(e.to_string()))
}

/// Runs `count` independent trials on the worker pool; results come back in
/// trial order regardless of scheduling.
fn run_trials<T, F>(cfg: &ExperimentConfig, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync,
{
    let master = cfg.master_seed;
    let results: Vec<Result<T>> = pool(cfg)?.install(|| {
        (0..count).into_par_iter().map(|i| f(i, trial_seed(master, i as u64))).collect()
    });
    results.into_iter().collect()
}

fn shared_instance(cfg: &ExperimentConfig, lambda: f64) -> Result<SpikedInstance> {
    let inst = assemble(cfg.n, lambda, derive_seed(cfg.master_seed, INSTANCE_STREAM))?;
    dump_if_requested(cfg, &inst)?;
    Ok(inst)
}

fn dump_if_requested(cfg: &ExperimentConfig, inst: &SpikedInstance) -> Result<()> {
    if cfg.dump_instance {
        let path = cfg.output_dir.join(format!("{}_instance.bin", cfg.experiment));
        write_instance(inst, create(&path)?)?;
    }
    Ok(())
}

fn opt_report(cfg: &ExperimentConfig, beta: f64, lambda: f64) -> Result<FixedPointReport> {
    Ok(find_opt(beta, lambda, &cfg.params())?)
}

/// Default tolerance: 0.05 around a positive target, 0.1 around zero.
fn tolerance(cfg: &ExperimentConfig, target: f64) -> f64 {
    cfg.tolerance.unwrap_or(if target > 0.0 { 0.05 } else { 0.1 })
}

/// Spins with correlation exactly `round(n·r)/n`-close to `r` with the spike.
fn with_correlation(inst: &SpikedInstance, r: f64, seed: u64) -> SpinConfiguration {
    let n = inst.n;
    let flips = (((1.0 - r) / 2.0) * n as f64).round() as usize;
    let mut rng = rng_from_seed(seed);
    let mut sigma = inst.spike.as_slice().to_vec();
    for i in sample(&mut rng, n, flips.min(n)).into_iter() {
        sigma[i] = -sigma[i];
    }
    SpinConfiguration::new(sigma).expect("signs")
}

fn start_config(cfg: &ExperimentConfig, inst: &SpikedInstance, seed: u64) -> Result<SpinConfiguration> {
    let seed = derive_seed(seed, stream::START);
    match cfg.start {
        StartKind::Random => Ok(SpinConfiguration::random(inst.n, &mut rng_from_seed(seed))),
        StartKind::Spike => Ok(inst.spike.clone()),
        StartKind::Warm => {
            let r = cfg
                .warm_start
                .ok_or_else(|| HarnessError::Input("start = warm needs warm_start".into()))?;
            Ok(with_correlation(inst, r, seed))
        }
    }
}

struct Finish {
    opt: Option<f64>,
    regime: Option<Regime>,
    tolerance: Option<f64>,
    criterion: String,
    instance: Option<InstanceMeta>,
    aggregates: Vec<(String, f64)>,
    /// Overrides the default rule `pass_fraction ≥ min_pass_fraction`.
    passed: Option<bool>,
}

fn finish(cfg: &ExperimentConfig, records: Vec<TrialRecord>, f: Finish) -> RunSummary {
    let passes = records.iter().filter(|r| r.pass).count();
    let pass_fraction = passes as f64 / records.len().max(1) as f64;
    let deviations: Vec<f64> = records.iter().map(|r| r.deviation).collect();
    RunSummary {
        experiment: cfg.experiment.name().to_string(),
        config: cfg.echo(),
        opt: f.opt,
        regime: f.regime.map(|r| r.as_str().to_string()),
        trials: records.len(),
        pass_fraction,
        quantiles: quantiles(&deviations),
        wall_ms: 0,
        versions: Versions::default(),
        tolerance: f.tolerance,
        passed: f.passed.unwrap_or(pass_fraction >= cfg.min_pass_fraction),
        criterion: f.criterion,
        instance: f.instance,
        records,
        aggregates: f.aggregates,
    }
}

fn regime_code(r: Regime) -> f64 {
    match r {
        Regime::SubCritical => 0.0,
        Regime::SuperCriticalHighTemp => 1.0,
        Regime::LowTempWithFP => 2.0,
        Regime::LowTempNoFP => 3.0,
    }
}

fn cell_margin(report: &FixedPointReport) -> f64 {
    match report.opt_point() {
        Some(fp) => fp.at_margin,
        None => 1.0 - report.beta * report.beta,
    }
}

fn run_fixed_point(cfg: &ExperimentConfig, diagram: bool) -> Result<RunSummary> {
    let cells: Vec<(f64, f64)> = cfg
        .lambda
        .values()
        .iter()
        .flat_map(|&l| cfg.beta.values().iter().map(move |&b| (b, l)))
        .collect();
    let reports = run_trials(cfg, cells.len(), |i, _| opt_report(cfg, cells[i].0, cells[i].1))?;
    let mut grid = String::from("beta,lambda,opt,regime,at_margin,fixed_points,unresolved\n");
    let mut points = String::from("beta,lambda,z,derivative,stable,at_satisfied,at_margin\n");
    let mut records = Vec::with_capacity(cells.len());
    let mut seen = [0usize; 4];
    for (i, r) in reports.iter().enumerate() {
        grid.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.beta,
            r.lambda,
            r.opt,
            r.regime,
            cell_margin(r),
            r.fixed_points.len(),
            r.unresolved
        ));
        for fp in &r.fixed_points {
            points.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.beta, r.lambda, fp.z, fp.derivative, fp.stable, fp.at_satisfied, fp.at_margin
            ));
        }
        seen[regime_code(r.regime) as usize] += 1;
        records.push(TrialRecord {
            trial: i,
            seed: 0,
            value: r.opt,
            deviation: 0.0,
            pass: !r.unresolved,
            file: None,
            extra: vec![
                ("beta".into(), r.beta),
                ("lambda".into(), r.lambda),
                ("regime".into(), regime_code(r.regime)),
                ("at_margin".into(), cell_margin(r)),
                ("fixed_points".into(), r.fixed_points.len() as f64),
            ],
        });
    }
    write_text(cfg, &format!("{}_grid.csv", cfg.experiment), &grid)?;
    write_text(cfg, &format!("{}_points.csv", cfg.experiment), &points)?;
    let single = reports.len() == 1;
    let witnessed = seen.iter().filter(|&&c| c > 0).count();
    let mut aggregates = vec![("regimes_witnessed".to_string(), witnessed as f64)];
    for (name, count) in ["SubCritical", "SuperCriticalHighTemp", "LowTempWithFP", "LowTempNoFP"]
        .iter()
        .zip(seen)
    {
        aggregates.push((format!("cells_{name}"), count as f64));
    }
    let resolved = records.iter().all(|r| r.pass);
    let (criterion, passed) = if diagram {
        ("all four regimes witnessed on the grid and every cell resolved".to_string(), resolved && witnessed == 4)
    } else {
        ("every grid cell resolved by the fixed-point scan".to_string(), resolved)
    };
    Ok(finish(
        cfg,
        records,
        Finish {
            opt: single.then(|| reports[0].opt),
            regime: single.then(|| reports[0].regime),
            tolerance: None,
            criterion,
            instance: None,
            aggregates,
            passed: Some(passed),
        },
    ))
}

fn correlation_record(
    trial: usize,
    seed: u64,
    final_r: f64,
    target: f64,
    tol: f64,
    file: Option<String>,
) -> TrialRecord {
    let value = final_r.abs();
    let deviation = (value - target).abs();
    TrialRecord {
        trial,
        seed,
        value,
        deviation,
        pass: deviation <= tol,
        file,
        extra: vec![("signed_correlation".into(), final_r)],
    }
}

fn run_glauber(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let (beta, lambda) = (cfg.single_beta()?, cfg.single_lambda()?);
    let report = opt_report(cfg, beta, lambda)?;
    let inst = shared_instance(cfg, lambda)?;
    let n = cfg.n as u64;
    let steps = cfg.steps.unwrap_or(10 * n * n);
    let tol = tolerance(cfg, report.opt);
    let model = IsingModel::new(&inst.m_matrix, beta, vec![0.0; cfg.n])?;
    let opts = GlauberOptions {
        record_every: Some(cfg.record_every.unwrap_or(n)),
        reference: Some(inst.spike.clone()),
        ..Default::default()
    };
    let records = run_trials(cfg, cfg.trials, |i, seed| {
        let start = start_config(cfg, &inst, seed)?;
        let run = glauber_run(&model, &start, steps, derive_seed(seed, stream::CHAIN), &opts)?;
        let file = write_trajectory(cfg, i, &run.trajectory)?;
        let r = run.trajectory.final_correlation().unwrap_or(0.0);
        Ok(correlation_record(i, seed, r, report.opt, tol, file))
    })?;
    Ok(finish(
        cfg,
        records,
        Finish {
            opt: Some(report.opt),
            regime: Some(report.regime),
            tolerance: Some(tol),
            criterion: format!(
                "fraction of trials with ||R| - OPT| <= {tol} is at least {}",
                cfg.min_pass_fraction
            ),
            instance: Some(InstanceMeta::of(&inst)),
            aggregates: vec![("steps".into(), steps as f64)],
            passed: None,
        },
    ))
}

/// First step at which `|R|` reaches `threshold`.
fn escape_step(t: &Trajectory, threshold: f64) -> Option<u64> {
    t.entries.iter().find(|e| e.correlation.abs() >= threshold).map(|e| e.step)
}

fn run_rgd(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let (beta, lambda) = (cfg.single_beta()?, cfg.single_lambda()?);
    let report = opt_report(cfg, beta, lambda)?;
    let inst = shared_instance(cfg, lambda)?;
    let steps = cfg.steps.unwrap_or(200);
    let inner = cfg.inner_steps.unwrap_or_else(|| default_inner_steps(cfg.n));
    let tol = tolerance(cfg, report.opt);
    let threshold = ESCAPE_FRACTION_OF_OPT * report.opt;
    let records = run_trials(cfg, cfg.trials, |i, seed| {
        let start = start_config(cfg, &inst, seed)?;
        let traj = rgd_run(&start, &inst, beta, steps, inner, derive_seed(seed, stream::CHAIN))?;
        let file = write_trajectory(cfg, i, &traj)?;
        let mut rec = correlation_record(i, seed, traj.final_correlation().unwrap_or(0.0), report.opt, tol, file);
        let escape = if report.opt > 0.0 { escape_step(&traj, threshold) } else { None };
        rec.extra.push(("escape_step".into(), escape.map_or(-1.0, |s| s as f64)));
        Ok(rec)
    })?;
    let escaped = records
        .iter()
        .filter(|r| r.extra("escape_step").is_some_and(|s| s >= 0.0 && s <= cfg.escape_window as f64))
        .count();
    let escape_fraction = escaped as f64 / records.len() as f64;
    let pass_fraction = records.iter().filter(|r| r.pass).count() as f64 / records.len() as f64;
    let needs_escape = report.opt > 0.0 && cfg.start == StartKind::Random;
    let passed = pass_fraction >= cfg.min_pass_fraction
        && (!needs_escape || escape_fraction >= cfg.min_pass_fraction);
    Ok(finish(
        cfg,
        records,
        Finish {
            opt: Some(report.opt),
            regime: Some(report.regime),
            tolerance: Some(tol),
            criterion: format!(
                "at least {} of trials end with ||R| - OPT| <= {tol}; from random starts, at least \
                 that fraction also reaches |R| >= {ESCAPE_FRACTION_OF_OPT} OPT within {} steps",
                cfg.min_pass_fraction, cfg.escape_window
            ),
            instance: Some(InstanceMeta::of(&inst)),
            aggregates: vec![
                ("escape_fraction".into(), escape_fraction),
                ("inner_steps".into(), inner as f64),
            ],
            passed: Some(passed),
        },
    ))
}

fn run_prgd(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let (beta, lambda) = (cfg.single_beta()?, cfg.single_lambda()?);
    let report = opt_report(cfg, beta, lambda)?;
    let inst = assemble_ones(cfg.n, lambda, derive_seed(cfg.master_seed, INSTANCE_STREAM))?;
    dump_if_requested(cfg, &inst)?;
    let steps = cfg.steps.unwrap_or(200);
    let inner = cfg.inner_steps.unwrap_or_else(|| default_inner_steps(cfg.n));
    let z0 = cfg.warm_start.unwrap_or(0.0);
    let tol = tolerance(cfg, report.opt);
    let records = run_trials(cfg, cfg.trials, |i, seed| {
        let traj = prgd_run(z0, &inst.noise, beta, lambda, steps, inner, seed)?;
        let file = write_trajectory(cfg, i, &traj)?;
        Ok(correlation_record(i, seed, traj.final_correlation().unwrap_or(0.0), report.opt, tol, file))
    })?;
    Ok(finish(
        cfg,
        records,
        Finish {
            opt: Some(report.opt),
            regime: Some(report.regime),
            tolerance: Some(tol),
            criterion: format!("fraction of trials with ||z_T| - OPT| <= {tol} is at least {}", cfg.min_pass_fraction),
            instance: Some(InstanceMeta::of(&inst)),
            aggregates: vec![],
            passed: None,
        },
    ))
}

fn amp_start(cfg: &ExperimentConfig) -> AmpInit {
    match cfg.amp_init {
        AmpInitKind::Zero => AmpInit::Zero,
        AmpInitKind::Spectral => AmpInit::Spectral(SpectralScale::SecondMoment { sigma0_sq: cfg.amp_sigma0_sq }),
        AmpInitKind::SpectralMatch => AmpInit::Spectral(SpectralScale::MatchOverlap),
        AmpInitKind::SideInformation => AmpInit::SideInformation { overlap: cfg.side_overlap },
    }
}

fn run_amp(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let lambda = cfg.single_lambda()?;
    let report = opt_report(cfg, lambda, lambda)?;
    let steps = cfg.steps.unwrap_or(30) as usize;
    let tol = cfg.tolerance.unwrap_or(0.05);
    let params = cfg.params();
    let init = amp_start(cfg);
    let records = run_trials(cfg, cfg.trials, |i, seed| {
        let inst = assemble(cfg.n, lambda, seed)?;
        let (state, s0) = amp_init(&inst, init, seed)?;
        let trace = amp_trace(&inst, state, s0, steps, cfg.onsager, &params)?;
        let file = if cfg.write_trajectories {
            let name = trial_file_name(cfg.experiment, i);
            trace.write_csv(create(&cfg.output_dir.join(&name))?)?;
            Some(name)
        } else {
            None
        };
        let dev = trace.max_deviation();
        Ok(TrialRecord {
            trial: i,
            seed,
            value: *trace.correlations.last().unwrap_or(&0.0),
            deviation: dev,
            pass: dev <= tol,
            file,
            extra: vec![("sigma0_sq".into(), s0)],
        })
    })?;
    Ok(finish(
        cfg,
        records,
        Finish {
            opt: Some(report.opt),
            regime: Some(report.regime),
            tolerance: Some(tol),
            criterion: format!(
                "fraction of seeds whose correlation stays within {tol} of the Bayes recursion for t <= {steps} \
                 is at least {}",
                cfg.min_pass_fraction
            ),
            instance: None,
            aggregates: vec![],
            passed: None,
        },
    ))
}

fn run_compare(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let (beta, lambda) = (cfg.single_beta()?, cfg.single_lambda()?);
    let r0 = cfg.warm_start.unwrap_or(0.6);
    let params = cfg.params();
    let at = at_condition(beta, beta * lambda * r0.abs(), &params)?;
    if !at.satisfied {
        return Err(HarnessError::Input(format!(
            "AT condition fails at (beta, beta*lambda*R0) = ({beta}, {}): margin {}",
            beta * lambda * r0.abs(),
            at.margin
        )));
    }
    let report = opt_report(cfg, beta, lambda)?;
    let inst = shared_instance(cfg, lambda)?;
    let inner = cfg.inner_steps.unwrap_or_else(|| default_inner_steps(cfg.n));
    let tol = cfg.tolerance.unwrap_or(0.05);
    let records = run_trials(cfg, cfg.trials, |i, seed| {
        let sigma = with_correlation(&inst, r0, derive_seed(seed, stream::START));
        let predicted = amp_like_map(&sigma, &inst, beta, lambda, &params)?;
        let step = rgd_step(&sigma, &inst, beta, inner, derive_seed(seed, stream::CHAIN))?;
        let r1 = inst.spike_correlation(&step.next)?;
        let mut traj = Trajectory::new(1, seed);
        traj.entries.push(swlab_core::dynamics::TrajectoryEntry {
            step: 0,
            correlation: inst.spike_correlation(&sigma)?,
            energy: swlab_core::instances::posterior_energy(&sigma, &inst, beta)?,
            z_field: None,
        });
        traj.entries.push(swlab_core::dynamics::TrajectoryEntry {
            step: 1,
            correlation: r1,
            energy: swlab_core::instances::posterior_energy(&step.next, &inst, beta)?,
            z_field: Some(step.z),
        });
        let file = write_trajectory(cfg, i, &traj)?;
        let deviation = (r1 - predicted).abs();
        Ok(TrialRecord {
            trial: i,
            seed,
            value: r1,
            deviation,
            pass: deviation <= tol,
            file,
            extra: vec![("predicted".into(), predicted), ("z".into(), step.z)],
        })
    })?;
    let median = quantiles(&records.iter().map(|r| r.deviation).collect::<Vec<_>>()).p50;
    Ok(finish(
        cfg,
        records,
        Finish {
            opt: Some(report.opt),
            regime: Some(report.regime),
            tolerance: Some(tol),
            criterion: format!("median |R(sigma') - f(R0)| <= {tol} for R0 = {r0}"),
            instance: Some(InstanceMeta::of(&inst)),
            aggregates: vec![("median_deviation".into(), median), ("at_margin".into(), at.margin)],
            passed: Some(median <= tol),
        },
    ))
}

fn run_magnetization(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let beta = cfg.single_beta()?;
    if beta >= 1.0 {
        return Err(HarnessError::Input(format!("magnetization needs beta < 1, got {beta}")));
    }
    let inst = assemble_ones(cfg.n, 0.0, derive_seed(cfg.master_seed, INSTANCE_STREAM))?;
    dump_if_requested(cfg, &inst)?;
    let n = cfg.n as u64;
    let burn_in = cfg.inner_steps.unwrap_or_else(|| default_inner_steps(cfg.n));
    let steps = cfg.steps.unwrap_or(100 * n);
    let every = cfg.record_every.unwrap_or(n);
    let tol = cfg.tolerance.unwrap_or(0.03);
    let params = cfg.params();
    let small_field = (cfg.n as f64).powf(-0.25);
    let hs = cfg.field.values().to_vec();
    if hs.iter().any(|&h| h < 0.0) {
        return Err(HarnessError::Input("field values must be >= 0".into()));
    }
    let cells = hs.len() * cfg.trials;
    let runs = run_trials(cfg, cells, |i, seed| {
        let h = hs[i / cfg.trials];
        let model = IsingModel::new(&inst.noise, beta, vec![h; cfg.n])?;
        let mut rng = rng_from_seed(seed);
        let start = SpinConfiguration::random(cfg.n, &mut rng);
        let mut chain = GlauberChain::new(model, start)?;
        chain.run(burn_in, &mut rng);
        let mut traj = Trajectory::new(every, seed);
        let (mut sum, mut count) = (0.0, 0usize);
        let mut done = 0;
        while done < steps {
            let chunk = every.min(steps - done);
            chain.run(chunk, &mut rng);
            done += chunk;
            sum += chain.correlation();
            count += 1;
            traj.entries.push(swlab_core::dynamics::TrajectoryEntry {
                step: burn_in + done,
                correlation: chain.correlation(),
                energy: chain.energy(),
                z_field: Some(h),
            });
        }
        let file = write_trajectory(cfg, i, &traj)?;
        Ok((seed, sum / count.max(1) as f64, file))
    })?;
    let mut table = String::from("h,empirical,q1,deviation,small_field\n");
    let mut records = Vec::with_capacity(hs.len());
    for (k, &h) in hs.iter().enumerate() {
        let chunk = &runs[k * cfg.trials..(k + 1) * cfg.trials];
        let m = chunk.iter().map(|r| r.1).sum::<f64>() / cfg.trials as f64;
        let q1 = solve_q(beta, h, &params)?.q1;
        let deviation = (m - q1).abs();
        table.push_str(&format!("{h},{m},{q1},{deviation},{}\n", h <= small_field));
        records.push(TrialRecord {
            trial: k,
            seed: chunk[0].0,
            value: m,
            deviation,
            pass: deviation <= tol,
            file: chunk[0].2.clone(),
            extra: vec![("h".into(), h), ("q1".into(), q1)],
        });
    }
    write_text(cfg, "magnetization_table.csv", &table)?;
    let max_dev = records.iter().map(|r| r.deviation).fold(0.0, f64::max);
    Ok(finish(
        cfg,
        records,
        Finish {
            opt: None,
            regime: None,
            tolerance: Some(tol),
            criterion: format!("max over h of |<m> - q1(beta, h)| <= {tol}"),
            instance: Some(InstanceMeta::of(&inst)),
            aggregates: vec![("max_deviation".into(), max_dev), ("small_field_threshold".into(), small_field)],
            passed: Some(max_dev <= tol),
        },
    ))
}

/// Stable solution of `m = tanh(βm + h)`: the root of largest modulus with the
/// sign of `h` (positive when `h = 0`).
pub fn mean_field_root(beta: f64, h: f64) -> f64 {
    let sign = if h < 0.0 { -1.0 } else { 1.0 };
    let h = h.abs();
    let g = |m: f64| (beta * m + h).tanh() - m;
    if g(1e-12) <= 0.0 && h == 0.0 {
        return 0.0;
    }
    // g(1) < 0 always; g(0+) > 0 when h > 0 or β > 1
    let (mut lo, mut hi) = (0.0f64.max(1e-12), 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    sign * 0.5 * (lo + hi)
}

fn run_curie_weiss(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let beta = cfg.single_beta()?;
    let steps = cfg.steps.unwrap_or(1000);
    let tol = cfg.tolerance.unwrap_or(0.02);
    let hs = cfg.field.values().to_vec();
    let cells = hs.len() * cfg.trials;
    let records = run_trials(cfg, cells, |i, seed| {
        let h = hs[i / cfg.trials];
        let traj = curie_weiss_rgd(beta, h, cfg.n, steps, seed)?;
        let file = write_trajectory(cfg, i, &traj)?;
        let tail = &traj.entries[traj.entries.len() / 2..];
        let limit = tail.iter().map(|e| e.correlation).sum::<f64>() / tail.len() as f64;
        let root = mean_field_root(beta, h);
        // with h = 0 the two symmetric roots are equally stable
        let value = if h == 0.0 { limit.abs() } else { limit };
        let deviation = (value - root).abs();
        Ok(TrialRecord {
            trial: i,
            seed,
            value,
            deviation,
            pass: deviation <= tol,
            file,
            extra: vec![("h".into(), h), ("root".into(), root)],
        })
    })?;
    Ok(finish(
        cfg,
        records,
        Finish {
            opt: None,
            regime: None,
            tolerance: Some(tol),
            criterion: format!(
                "time-averaged magnetization over the second half within {tol} of the stable root of m = tanh(beta m + h)"
            ),
            instance: None,
            aggregates: vec![],
            passed: None,
        },
    ))
}

fn run_overlap_probe(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let (beta, h) = (cfg.single_beta()?, cfg.single_field()?);
    let inst = assemble_ones(cfg.n, 0.0, derive_seed(cfg.master_seed, INSTANCE_STREAM))?;
    dump_if_requested(cfg, &inst)?;
    let inner = cfg.inner_steps.unwrap_or_else(|| default_inner_steps(cfg.n));
    let tol = cfg.tolerance.unwrap_or(0.03);
    let probe = overlap_concentration_probe(&inst.noise, beta, h, cfg.trials.max(2), inner, cfg.master_seed)?;
    let records: Vec<TrialRecord> = probe
        .overlaps
        .iter()
        .enumerate()
        .map(|(i, &o)| TrialRecord {
            trial: i,
            seed: trial_seed(cfg.master_seed, i as u64),
            value: o,
            deviation: (o - probe.q_predicted).abs(),
            pass: (o - probe.q_predicted).abs() <= tol,
            file: None,
            extra: vec![],
        })
        .collect();
    let mut table = String::from("trial,overlap,q_predicted\n");
    for (i, o) in probe.overlaps.iter().enumerate() {
        table.push_str(&format!("{i},{o},{}\n", probe.q_predicted));
    }
    write_text(cfg, "overlap-probe_overlaps.csv", &table)?;
    let mean_dev = (probe.mean_overlap - probe.q_predicted).abs();
    Ok(finish(
        cfg,
        records,
        Finish {
            opt: None,
            regime: None,
            tolerance: Some(tol),
            criterion: format!("|mean overlap - q(beta, h)| <= {tol}"),
            instance: Some(InstanceMeta::of(&inst)),
            aggregates: vec![
                ("mean_overlap".into(), probe.mean_overlap),
                ("var_overlap".into(), probe.var_overlap),
                ("q_predicted".into(), probe.q_predicted),
            ],
            passed: Some(mean_dev <= tol),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_field_roots() {
        let r = mean_field_root(2.0, 0.0);
        assert!((r - (2.0 * r).tanh()).abs() < 1e-12 && r > 0.95);
        assert_eq!(mean_field_root(0.5, 0.0), 0.0);
        let r = mean_field_root(0.5, 0.2);
        assert!((r - (0.5 * r + 0.2f64).tanh()).abs() < 1e-12);
        assert!((mean_field_root(1.5, -0.1) + mean_field_root(1.5, 0.1)).abs() < 1e-12);
    }

    #[test]
    fn prescribed_correlation_is_exact() {
        let inst = assemble(1000, 1.0, 3).unwrap();
        let s = with_correlation(&inst, 0.6, 9);
        assert!((inst.spike_correlation(&s).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn file_names() {
        assert_eq!(trial_file_name(ExperimentKind::Glauber, 7), "glauber_0007.csv");
    }
}
