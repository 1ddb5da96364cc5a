//! The subcommands. Each writes its files through [`Artifacts`] and reports
//! whether every monitored inequality held.

use std::path::PathBuf;

use log::{info, warn};
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use viscoplate::attractor::{
    assemble_sweep, continuous_dependence_experiment, hausdorff_semidistance, sweep_member, ContinuousDependence,
    SweepMember, BALL_TOLERANCE,
};
use viscoplate::dynamics::{simulate, Model, Observer, PlateState};
use viscoplate::energy::{
    decay_envelope_check, dissipation_residual, EnergyConstants, EnergyMeter, EnergyRecorder, EnergyReport,
};

use crate::clouds::{read_cloud, state_cells, state_columns, without_history, write_cloud};
use crate::config::{Experiment, ExperimentConfig};
use crate::error::{LabError, Result};
use crate::format::{float, num, num_list, opt_num, opt_num_list, Artifacts, Cell, Completeness, Csv};
use crate::initial::initial_states;

/// Below this fraction of `E(0)` the decay fit stops.
pub const DECAY_FLOOR: f64 = 1e-10;

/// Column order of `energy.csv`.
pub const ENERGY_COLUMNS: [&str; 7] = [
    "t",
    "E",
    "Psi",
    "E_eps",
    "phase_norm_sq",
    "residual_312",
    "envelope_331",
];

/// Field order of `sweep.json`.
pub const SWEEP_FIELDS: [&str; 5] = ["epsilons", "semidistances", "ratios", "fitted_K2", "fitted_KB"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    /// Some monitored inequality or acceptance check failed.
    Violation,
}

impl Outcome {
    fn from_pass(passed: bool) -> Self {
        if passed {
            Outcome::Pass
        } else {
            Outcome::Violation
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Outcome::Pass => 0,
            Outcome::Violation => 2,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads for sweeps and continuous-dependence runs; `0` lets rayon decide.
    pub jobs: usize,
    /// Cloud files for `dist`, overriding `[dist]`.
    pub clouds: Vec<PathBuf>,
}

/// Runs one subcommand and always leaves a MANIFEST behind.
pub fn run(experiment: Experiment, config: &ExperimentConfig, options: &RunOptions) -> Result<Outcome> {
    if let Some(declared) = config.experiment {
        if declared != experiment {
            return Err(LabError::config(format!(
                "configuration is for `{declared}`, not `{experiment}`"
            )));
        }
    }
    let mut artifacts = Artifacts::create(&config.output)?;
    let result = match experiment {
        Experiment::Simulate => run_simulate(config, &mut artifacts),
        Experiment::EnergyAudit => run_energy_audit(config, &mut artifacts),
        Experiment::Decay => run_decay(config, &mut artifacts),
        Experiment::ContDep => with_pool(options.jobs, || run_cont_dep(config, &mut artifacts)),
        Experiment::Sweep => with_pool(options.jobs, || run_sweep(config, &mut artifacts)),
        Experiment::Dist => run_dist(config, options, &mut artifacts),
    };
    match result {
        Ok(outcome) => {
            artifacts.finish(Completeness::Complete)?;
            info!("{experiment}: {outcome:?}");
            Ok(outcome)
        }
        Err(e) => {
            artifacts.finish(Completeness::Partial(e.to_string()))?;
            Err(e)
        }
    }
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| LabError::config(format!("cannot start {jobs} workers: {e}")))?;
    pool.install(f)
}

pub fn constants_json(model: &Model) -> Value {
    let c = EnergyConstants::new(model);
    json!({
        "lambda0": num(c.lambda0),
        "lambda1": num(c.lambda1),
        "lambda2": num(c.lambda2),
        "mu0": num(c.mu0),
        "delta": num(c.delta),
        "a0": num(c.a0),
        "a1": num(c.a1),
        "C_f": num(c.c_f),
        "volume": num(c.volume),
        "forcing_bound": num(c.forcing_bound),
        "C1": num(c.c1),
        "young_eps1": num(c.young_eps1),
        "C2": num(c.c2),
        "C3": num(c.c3),
        "pert_eps1": num(c.pert_eps1),
        "eps2": num(c.eps2),
        "C4": num(c.c4),
        "C": num(c.c_absorb),
        "rho0": num(c.rho0),
        "dim": model.domain.dim(),
        "modes": model.domain.modes(),
        "grid": model.domain.grid(),
        "stability_limit": num(model.stability_limit()),
    })
}

fn first_initial(config: &ExperimentConfig, model: &Model) -> Result<PlateState> {
    let mut states = initial_states(&config.initial, model, config.seed, config.integrator.dt)?;
    Ok(states.swap_remove(0))
}

struct TrajectoryWriter<'m> {
    meter: EnergyMeter<'m>,
    csv: Csv,
    stride: usize,
}

impl Observer for TrajectoryWriter<'_> {
    fn observe(&mut self, step: usize, state: &PlateState) -> viscoplate::Result<()> {
        if step.is_multiple_of(self.stride) {
            let mut row = vec![
                Cell::from(state.t),
                Cell::from(self.meter.energy(state)?),
                Cell::from(state.phase_norm_sq()),
            ];
            row.extend(state_cells(state));
            self.csv.row(row);
        }
        Ok(())
    }
}

fn run_simulate(config: &ExperimentConfig, artifacts: &mut Artifacts) -> Result<Outcome> {
    let model = &config.model;
    artifacts.write_json("constants.json", &constants_json(model))?;
    let initial = first_initial(config, model)?;
    let mut header = vec!["t".to_string(), "E".into(), "phase_norm_sq".into()];
    header.extend(state_columns(&model.domain));
    let mut writer = TrajectoryWriter {
        meter: EnergyMeter::new(model),
        csv: Csv::new(&header),
        stride: config.integrator.record_stride,
    };
    let result = simulate(
        &initial,
        model,
        config.integrator.t_end,
        config.integrator.dt,
        &mut [&mut writer],
    );
    artifacts.write_csv("trajectory.csv", writer.csv)?;
    let trajectory = result?;
    let end = &trajectory.final_state;
    artifacts.write_json(
        "summary.json",
        &json!({
            "steps": trajectory.steps,
            "t_end": num(end.t),
            "final_phase_norm_sq": num(end.phase_norm_sq()),
            "finite": end.is_finite(),
        }),
    )?;
    Ok(Outcome::Pass)
}

// energy records over the configured run, with the CSV written even on failure
fn energy_run(config: &ExperimentConfig, artifacts: &mut Artifacts) -> Result<(Vec<EnergyReport>, f64)> {
    let model = &config.model;
    let constants = EnergyConstants::new(model);
    artifacts.write_json("constants.json", &constants_json(model))?;
    let eps = config.energy.eps.unwrap_or(constants.eps2);
    if !(eps > 0.0 && eps <= constants.eps2) {
        return Err(LabError::config(format!(
            "[energy] eps = {eps} outside (0, eps2] with eps2 = {}",
            constants.eps2
        )));
    }
    let initial = first_initial(config, model)?;
    let mut recorder = EnergyRecorder::new(model, config.integrator.record_stride);
    let result = simulate(
        &initial,
        model,
        config.integrator.t_end,
        config.integrator.dt,
        &mut [&mut recorder],
    );
    let reports = recorder.into_reports();
    artifacts.write_csv("energy.csv", energy_csv(&reports, model, &constants, eps))?;
    result?;
    Ok((reports, eps))
}

fn energy_csv(reports: &[EnergyReport], model: &Model, constants: &EnergyConstants, eps: f64) -> Csv {
    let mut csv = Csv::new(&ENERGY_COLUMNS);
    let Some(first) = reports.first() else {
        return csv;
    };
    for r in reports {
        csv.row([
            Cell::from(r.t),
            Cell::from(r.energy),
            Cell::from(r.psi),
            Cell::from(r.energy + eps * r.psi),
            Cell::from(r.phase_norm_sq),
            Cell::from(dissipation_residual(r, model)),
            Cell::from(constants.envelope(first.energy, r.t - first.t, eps)),
        ]);
    }
    csv
}

fn check(passed: bool, fields: Value) -> Value {
    let mut map = match fields {
        Value::Object(m) => m,
        _ => Map::new(),
    };
    map.insert("passed".into(), Value::Bool(passed));
    Value::Object(map)
}

fn run_energy_audit(config: &ExperimentConfig, artifacts: &mut Artifacts) -> Result<Outcome> {
    let model = &config.model;
    let (reports, eps) = energy_run(config, artifacts)?;
    let constants = EnergyConstants::new(model);
    let rel = |x: f64, r: &EnergyReport| x / (1.0 + r.energy.abs());

    let identity = reports
        .iter()
        .filter_map(|r| r.identity_residual().map(|x| rel(x, r)))
        .fold(0.0, f64::max);
    let dissipation = reports
        .iter()
        .filter_map(|r| dissipation_residual(r, model).map(|x| rel(x, r)))
        .fold(f64::NEG_INFINITY, f64::max);
    let half_cf = 0.5 * constants.c_f * constants.volume;
    let mut sandwich_ok = true;
    for r in &reports {
        let e_eps = r.energy + eps * r.psi;
        let slack = 1e-12 * (1.0 + r.energy.abs());
        if !(0.5 * r.energy - half_cf <= e_eps + slack && e_eps <= 1.5 * r.energy + half_cf + slack) {
            sandwich_ok = false;
        }
    }
    let samples: Vec<(f64, f64)> = reports.iter().map(|r| (r.t, r.energy)).collect();
    let fit = decay_envelope_check(&samples, model, eps)?;
    let identity_ok = identity <= config.energy.identity_tolerance;
    let dissipation_ok = !(dissipation > config.energy.tolerance);
    let passed = identity_ok && dissipation_ok && sandwich_ok && fit.inside_envelope();
    artifacts.write_json(
        "audit.json",
        &json!({
            "eps": num(eps),
            "eps2": num(constants.eps2),
            "records": reports.len(),
            "identity": check(identity_ok, json!({
                "max_relative_residual": num(identity),
                "tolerance": num(config.energy.identity_tolerance),
            })),
            "dissipation": check(dissipation_ok, json!({
                "max_relative_residual": num(dissipation),
                "tolerance": num(config.energy.tolerance),
            })),
            "sandwich": check(sandwich_ok, json!({})),
            "envelope": check(fit.inside_envelope(), json!({
                "first_violation_t": opt_num(fit.first_violation.map(|v| v.t)),
            })),
            "passed": passed,
        }),
    )?;
    Ok(Outcome::from_pass(passed))
}

fn run_decay(config: &ExperimentConfig, artifacts: &mut Artifacts) -> Result<Outcome> {
    let model = &config.model;
    let (reports, eps) = energy_run(config, artifacts)?;
    let samples: Vec<(f64, f64)> = reports.iter().map(|r| (r.t, r.energy)).collect();
    let fit = decay_envelope_check(&samples, model, eps)?;
    let e0 = samples.first().map_or(0.0, |s| s.1);
    let e_end = samples.last().map_or(0.0, |s| s.1);
    let slope_ok = fit.slope_ok(config.energy.slope_slack);
    let passed = fit.inside_envelope() && slope_ok;
    artifacts.write_json(
        "decay.json",
        &json!({
            "eps": num(eps),
            "envelope_slope": num(fit.envelope_slope),
            "fitted_slope": opt_num(fit.fitted_slope),
            "slope_slack": num(config.energy.slope_slack),
            "samples_in_fit": fit.samples_in_fit,
            "reached_floor": e0 > 0.0 && e_end < DECAY_FLOOR * e0,
            "slope_ok": slope_ok,
            "inside_envelope": fit.inside_envelope(),
            "first_violation_t": opt_num(fit.first_violation.map(|v| v.t)),
            "passed": passed,
        }),
    )?;
    Ok(Outcome::from_pass(passed))
}

/// The continuous-dependence report for a list of damping perturbations.
#[derive(Debug, Clone)]
pub struct ContDepSummary {
    pub epsilons: Vec<f64>,
    pub runs: Vec<ContinuousDependence>,
    /// `sup ‖w‖²` with identical dampings.
    pub zero_gap_difference: f64,
    pub ratio_spread: f64,
    /// `sup ‖w‖²` at `ε_{i+1}` over that at `ε_i`.
    pub contractions: Vec<f64>,
    pub spread_ok: bool,
    pub contraction_ok: bool,
}

impl ContDepSummary {
    pub fn passed(&self) -> bool {
        self.spread_ok && self.contraction_ok && self.zero_gap_difference == 0.0
    }
}

pub fn continuous_dependence(config: &ExperimentConfig) -> Result<ContDepSummary> {
    let cd = &config.cont_dep;
    let template = &config.model;
    let reference = template.clone().with_damping(cd.family.at(0.0));
    let initial = first_initial(config, &reference)?;
    let dt = config.integrator.dt;
    let runs = cd
        .epsilons
        .par_iter()
        .map(|&eps| {
            let model = template.clone().with_damping(cd.family.at(eps));
            Ok(continuous_dependence_experiment(
                &model, &reference, &initial, cd.horizon, dt,
            )?)
        })
        .collect::<Result<Vec<_>>>()?;
    let zero = continuous_dependence_experiment(&reference, &reference, &initial, cd.horizon, dt)?;
    let ratios: Vec<f64> = runs.iter().filter_map(|r| r.ratio()).collect();
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(*r), hi.max(*r)));
    let ratio_spread = if ratios.is_empty() { f64::NAN } else { hi / lo };
    let contractions: Vec<f64> = runs
        .windows(2)
        .map(|w| w[1].sup_phase_distance_sq / w[0].sup_phase_distance_sq)
        .collect();
    let (c_lo, c_hi) = cd.contraction;
    Ok(ContDepSummary {
        epsilons: cd.epsilons.clone(),
        spread_ok: ratio_spread <= cd.ratio_spread,
        contraction_ok: contractions.iter().all(|c| (c_lo..=c_hi).contains(c)),
        zero_gap_difference: zero.sup_phase_distance_sq,
        ratio_spread,
        contractions,
        runs,
    })
}

fn run_cont_dep(config: &ExperimentConfig, artifacts: &mut Artifacts) -> Result<Outcome> {
    let reference = config.model.clone().with_damping(config.cont_dep.family.at(0.0));
    artifacts.write_json("constants.json", &constants_json(&reference))?;
    let summary = continuous_dependence(config)?;
    let mut csv = Csv::new(&["epsilon", "t", "E_w", "phase_distance_sq"]);
    let stride = config.integrator.record_stride;
    for (eps, run) in summary.epsilons.iter().zip(&summary.runs) {
        for i in (0..run.times.len()).step_by(stride) {
            csv.row([
                Cell::from(*eps),
                Cell::from(run.times[i]),
                Cell::from(run.difference_energy[i]),
                Cell::from(run.phase_distance_sq[i]),
            ]);
        }
    }
    artifacts.write_csv("cont_dep.csv", csv)?;
    let pick = |f: fn(&ContinuousDependence) -> f64| -> Vec<f64> { summary.runs.iter().map(f).collect() };
    let cd = &config.cont_dep;
    let passed = summary.passed();
    artifacts.write_json(
        "cont_dep.json",
        &json!({
            "epsilons": num_list(&summary.epsilons),
            "damping_gaps": num_list(&pick(|r| r.damping_gap)),
            "sup_phase_distance_sq": num_list(&pick(|r| r.sup_phase_distance_sq)),
            "sup_difference_energy": num_list(&pick(|r| r.sup_difference_energy)),
            "ratios": opt_num_list(&summary.runs.iter().map(|r| r.ratio()).collect::<Vec<_>>()),
            "fitted_K2": opt_num_list(&summary.runs.iter().map(|r| r.fitted_k2).collect::<Vec<_>>()),
            "fitted_KB": opt_num_list(&summary.runs.iter().map(|r| r.fitted_kb).collect::<Vec<_>>()),
            "KB_bound": num_list(&pick(|r| r.kb_bound)),
            "K2_bound": num_list(&pick(|r| r.k2_bound)),
            "ratio_spread": check(summary.spread_ok, json!({
                "value": num(summary.ratio_spread),
                "limit": num(cd.ratio_spread),
            })),
            "contraction": check(summary.contraction_ok, json!({
                "values": num_list(&summary.contractions),
                "range": num_list(&[cd.contraction.0, cd.contraction.1]),
            })),
            "zero_gap": check(summary.zero_gap_difference == 0.0, json!({
                "sup_phase_distance_sq": num(summary.zero_gap_difference),
            })),
            "passed": passed,
        }),
    )?;
    Ok(Outcome::from_pass(passed))
}

fn member_model(config: &ExperimentConfig, epsilon: f64) -> Model {
    config.model.clone().with_damping(config.sweep.family.at(epsilon))
}

fn run_sweep(config: &ExperimentConfig, artifacts: &mut Artifacts) -> Result<Outcome> {
    let sweep = &config.sweep;
    let params = config.sweep_params();
    let reference = member_model(config, 0.0);
    let initial = initial_states(&config.initial, &reference, config.seed, config.integrator.dt)?;
    info!("sweep over {} damping values", sweep.epsilons.len());
    let members = sweep
        .epsilons
        .par_iter()
        .map(|&eps| Ok(sweep_member(&config.model, sweep.family, eps, &initial, &params)?))
        .collect::<Result<Vec<SweepMember>>>()?;
    let mut constants = Vec::new();
    let mut ball = Vec::new();
    let mut inside_all = true;
    let mut clouds = Vec::new();
    for (i, member) in members.iter().enumerate() {
        let model = member_model(config, member.epsilon);
        let rho0 = EnergyConstants::new(&model).rho0;
        let norm = member.cloud.max_phase_norm();
        let inside = norm <= rho0 + BALL_TOLERANCE;
        inside_all &= inside;
        if member.cloud.metadata.transient_warning {
            warn!(
                "epsilon {}: a trajectory was outside the absorbing ball late in the transient",
                member.epsilon
            );
        }
        ball.push(json!({
            "epsilon": num(member.epsilon),
            "rho0": num(rho0),
            "max_phase_norm": num(norm),
            "inside": inside,
            "transient_warning": member.cloud.metadata.transient_warning,
        }));
        let mut c = constants_json(&model);
        c["epsilon"] = num(member.epsilon);
        constants.push(c);
        clouds.push(write_cloud(
            artifacts,
            i,
            &member.cloud,
            config.attractor.write_history,
        )?);
    }
    artifacts.write_json("constants.json", &json!({ "members": constants }))?;
    let report = assemble_sweep(&members, &params)?;
    artifacts.write_json(
        "sweep.json",
        &json!({
            "epsilons": num_list(&report.epsilons),
            "semidistances": num_list(&report.semidistances),
            "ratios": opt_num_list(&report.ratios),
            "fitted_K2": opt_num_list(&report.fitted_k2),
            "fitted_KB": opt_num_list(&report.fitted_kb),
        }),
    )?;
    let passed = report.passed() && inside_all;
    artifacts.write_json(
        "sweep_summary.json",
        &json!({
            "tolerance": num(report.tolerance),
            "slack": num(report.slack),
            "within_tolerance": report.within_tolerance,
            "monotone": report.monotone,
            "ball": ball,
            "clouds": clouds,
            "passed": passed,
        }),
    )?;
    Ok(Outcome::from_pass(passed))
}

fn run_dist(config: &ExperimentConfig, options: &RunOptions, artifacts: &mut Artifacts) -> Result<Outcome> {
    let (a, b) = match options.clouds.as_slice() {
        [a, b] => (a.clone(), b.clone()),
        [] => match (&config.dist.a, &config.dist.b) {
            (Some(a), Some(b)) => (a.clone(), b.clone()),
            _ => return Err(LabError::config("dist needs two cloud files ([dist] a and b)")),
        },
        _ => return Err(LabError::config("dist takes exactly two cloud files")),
    };
    let (la, lb) = (read_cloud(&a)?, read_cloud(&b)?);
    let with_history = la.with_history && lb.with_history;
    let (ca, cb) = if with_history {
        (la.cloud, lb.cloud)
    } else {
        (without_history(la.cloud), without_history(lb.cloud))
    };
    let forward = hausdorff_semidistance(&ca, &cb)?;
    let backward = hausdorff_semidistance(&cb, &ca)?;
    println!("{}", float(forward));
    artifacts.write_json(
        "dist.json",
        &json!({
            "a": a.display().to_string(),
            "b": b.display().to_string(),
            "semidistance": num(forward),
            "reverse_semidistance": num(backward),
            "memory_included": with_history,
        }),
    )?;
    Ok(Outcome::Pass)
}
