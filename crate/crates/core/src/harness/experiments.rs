//! The individual experiments. Each one computes in memory and returns its
//! artifacts; writing to disk happens in the caller.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, ExperimentSpec, MocSection, OutputFormat};
use super::initial::generate_initial_data;
use super::snapshot::{encode_physical, encode_spectral};
use super::{Artifacts, ExitStatus, ExperimentOutcome, HarnessError};
use crate::diagnostics::{
    linf_and_grad, smoothing_rate_fit, sobolev_column, AnalyticityObserver, FitError, RunRecord, SobolevObserver,
    SupNormObserver,
};
use crate::galerkin::NonlinearEvaluator;
use crate::integrator::{run, Observer, RunOutcome, SampleSchedule, StepperConfig, Termination};
use crate::moc::{
    certify, default_xi_range, rescale_for_data, search_parameters, smallness_check, smallness_constant,
    verify_field_moc, CertificateReport, Moc, MocError, MocRegime, SearchInputs, SmallnessReport,
};
use crate::spectral::{to_physical, Grid, ModelParams, Regime, SpectralField};

pub(crate) struct Context<'a> {
    pub cfg: &'a ExperimentConfig,
    pub params: ModelParams,
    pub grid: Grid,
    pub stepper: StepperConfig,
    pub evaluator: NonlinearEvaluator,
    pub hash: String,
}

impl<'a> Context<'a> {
    pub fn new(cfg: &'a ExperimentConfig) -> Result<Self, HarnessError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            params: cfg.params()?,
            grid: cfg.grid.grid()?,
            stepper: cfg.stepper.stepper()?,
            evaluator: cfg.stepper.evaluator.evaluator(),
            hash: cfg.hash(),
        })
    }

    fn tags(&self) -> [(&str, &str); 2] {
        [("config", self.hash.as_str()), ("code", crate::CODE_VERSION)]
    }

    fn csv_preamble(&self) -> String {
        format!("# config_hash={}\n# code_version={}\n", self.hash, crate::CODE_VERSION)
    }

    /// `0` and `samples` log-spaced times from `t_min` (default `t_end/1000`),
    /// plus the snapshot times.
    fn schedule(&self, samples: usize, t_min: Option<f64>) -> SampleSchedule {
        let t_end = self.stepper.t_end;
        let mut times = SampleSchedule::logarithmic(t_min.unwrap_or(1e-3 * t_end), t_end, samples)
            .times()
            .to_vec();
        times.extend(&self.cfg.output.snapshot_times);
        SampleSchedule::explicit(times, t_end)
    }

    fn add_record(&self, art: &mut Artifacts, stem: &str, record: &mut RunRecord) {
        record.metadata.config_hash = self.hash.clone();
        record
            .metadata
            .extra
            .insert("experiment".into(), self.cfg.experiment.name().into());
        if self.cfg.output.wants(OutputFormat::Csv) {
            art.add(
                format!("{stem}.csv"),
                format!("{}{}", self.csv_preamble(), record.to_csv()),
            );
        }
        if self.cfg.output.wants(OutputFormat::Json) {
            art.add(format!("{stem}.json"), record.to_json());
        }
    }

    fn add_snapshots(&self, art: &mut Artifacts, fields: &[(f64, SpectralField)]) -> Result<(), HarnessError> {
        for (i, (t, f)) in fields.iter().enumerate() {
            let phys = to_physical(f)?;
            art.add(
                format!("snapshots/snap_{i:03}.gqg"),
                encode_physical(&phys, *t, &self.tags()),
            );
            if self.cfg.output.spectral_snapshots {
                art.add(
                    format!("snapshots/snap_{i:03}.spec"),
                    encode_spectral(f, *t, &self.tags()),
                );
            }
        }
        Ok(())
    }

    fn add_certificate(&self, art: &mut Artifacts, report: &CertificateReport) {
        if self.cfg.output.wants(OutputFormat::Json) {
            let mut v = serde_json::to_value(report).expect("report serializes");
            v["config_hash"] = json!(self.hash);
            art.add_json("certificate.json", &v);
        }
        if self.cfg.output.wants(OutputFormat::Csv) {
            art.add("certificate.csv", format!("{}{}", self.csv_preamble(), report.to_csv()));
        }
    }

    /// Runs with the given observers, capturing fields at the snapshot times.
    fn evolve(
        &self,
        theta0: &SpectralField,
        observers: Vec<Box<dyn Observer + '_>>,
        schedule: &SampleSchedule,
    ) -> Result<(RunOutcome, Vec<(f64, SpectralField)>), HarnessError> {
        let mut captured = Vec::new();
        let outcome = {
            let mut obs: Vec<Box<dyn Observer + '_>> = observers.into_iter().collect();
            obs.push(Box::new(FieldCapture {
                times: self.cfg.output.snapshot_times.clone(),
                out: &mut captured,
            }));
            run(theta0, &self.params, &self.stepper, &self.evaluator, &mut obs, schedule)?
        };
        Ok((outcome, captured))
    }
}

fn termination_status(t: &Termination) -> ExitStatus {
    match t {
        Termination::Completed => ExitStatus::Success,
        Termination::BlowUpSuspected { .. } => ExitStatus::BlowUpSuspected,
    }
}

/// Copies the field at each listed time. Adds no columns.
struct FieldCapture<'a> {
    times: Vec<f64>,
    out: &'a mut Vec<(f64, SpectralField)>,
}

impl Observer for FieldCapture<'_> {
    fn columns(&self) -> Vec<String> {
        Vec::new()
    }

    fn observe(&mut self, time: f64, theta: &SpectralField, _params: &ModelParams) -> Vec<f64> {
        if self.times.contains(&time) {
            self.out.push((time, theta.clone()));
        }
        Vec::new()
    }
}

/// Records `moc_worst_ratio`, the largest `|θ(x) - θ(y)| / ω(|x - y|)`.
pub struct MocObserver {
    pub moc: Moc,
}

impl Observer for MocObserver {
    fn columns(&self) -> Vec<String> {
        vec!["moc_worst_ratio".into()]
    }

    fn observe(&mut self, _time: f64, theta: &SpectralField, _params: &ModelParams) -> Vec<f64> {
        match to_physical(theta) {
            Ok(p) => vec![verify_field_moc(&p, &self.moc).worst_ratio],
            Err(_) => vec![f64::NAN],
        }
    }
}

pub(crate) fn execute(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    let ctx = Context::new(cfg)?;
    let mut art = Artifacts::default();
    let theta0 = generate_initial_data(cfg)?;
    let (status, details) = match &cfg.experiment {
        ExperimentSpec::Decay {
            samples,
            t_min,
            sobolev_orders,
            sup_norms,
        } => {
            let mut obs: Vec<Box<dyn Observer>> = vec![Box::new(SobolevObserver::new(sobolev_orders.clone()))];
            if *sup_norms {
                obs.push(Box::new(SupNormObserver::default()));
            }
            let (mut out, snaps) = ctx.evolve(&theta0, obs, &ctx.schedule(*samples, *t_min))?;
            ctx.add_record(&mut art, "record", &mut out.record);
            ctx.add_snapshots(&mut art, &snaps)?;
            let residual = out.record.series("energy_residual")?;
            let details = json!({
                "initial_l2_sq": theta0.l2_sq(),
                "final_l2_sq": out.final_state.theta.l2_sq(),
                "max_abs_energy_residual": residual.iter().map(|p| p.1.abs()).fold(0.0, f64::max),
            });
            (termination_status(&out.termination), with_run(details, &out))
        }
        ExperimentSpec::Smoothing {
            s,
            n_max,
            window,
            samples,
            t_min,
        } => {
            let orders: Vec<f64> = (0..=*n_max).map(|n| s + n as f64 * ctx.params.alpha).collect();
            let obs: Vec<Box<dyn Observer>> = vec![Box::new(SobolevObserver::new(orders))];
            let (mut out, snaps) = ctx.evolve(&theta0, obs, &ctx.schedule(*samples, t_min.or(Some(window[0]))))?;
            ctx.add_record(&mut art, "record", &mut out.record);
            ctx.add_snapshots(&mut art, &snaps)?;
            let mut fits = Vec::new();
            for n in 1..=*n_max {
                let order = s + n as f64 * ctx.params.alpha;
                let slope = match smoothing_rate_fit(&out.record, *s, n, (window[0], window[1])) {
                    Ok(v) => Some(v),
                    Err(FitError::InsufficientSamples(_)) => None,
                    Err(e) => return Err(e.into()),
                };
                fits.push(json!({
                    "n": n,
                    "order": order,
                    "column": sobolev_column(order),
                    "slope": slope,
                    "expected": -(n as f64) / 2.0,
                }));
            }
            let details = json!({ "s": s, "window": window, "fits": fits });
            (termination_status(&out.termination), with_run(details, &out))
        }
        ExperimentSpec::Analyticity { window, samples, t_min } => {
            let obs: Vec<Box<dyn Observer>> = vec![Box::new(AnalyticityObserver)];
            let (mut out, snaps) = ctx.evolve(&theta0, obs, &ctx.schedule(*samples, *t_min))?;
            ctx.add_record(&mut art, "record", &mut out.record);
            ctx.add_snapshots(&mut art, &snaps)?;
            let series: Vec<(f64, f64)> = out
                .record
                .series("analyticity_delta")?
                .into_iter()
                .filter(|(t, _)| *t >= window[0] && *t <= window[1])
                .collect();
            let positive = series.iter().all(|p| p.1 > 0.0);
            let max_drop = series
                .windows(2)
                .map(|w| (w[0].1 - w[1].1) / w[0].1.abs().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            let details = json!({
                "window": window,
                "delta_series": series,
                "positive": positive,
                "non_decreasing": max_drop <= 0.0,
                "max_relative_drop": max_drop,
            });
            (termination_status(&out.termination), with_run(details, &out))
        }
        ExperimentSpec::MocPreserve {
            moc,
            slack,
            samples,
            t_min,
        } => {
            let sel = select_moc(&ctx, moc)?;
            if let Some(r) = &sel.report {
                ctx.add_certificate(&mut art, r);
            }
            match sel.certified() {
                None => (ExitStatus::CertificationFailed, json!({ "selection": sel.summary() })),
                Some(m) => {
                    let schedule = ctx.schedule(*samples, *t_min);
                    let (report, mut out, snaps) = moc_preserve_inner(&ctx, &theta0, &m, *slack, &schedule)?;
                    ctx.add_record(&mut art, "record", &mut out.record);
                    ctx.add_snapshots(&mut art, &snaps)?;
                    let status = match termination_status(&report.termination) {
                        ExitStatus::Success if report.gated && !report.preserved => ExitStatus::CertificationFailed,
                        s => s,
                    };
                    let details = json!({ "selection": sel.summary(), "preserve": report });
                    (status, with_run(details, &out))
                }
            }
        }
        ExperimentSpec::Convergence { n_fine, samples, t_min } => {
            let nf = n_fine.unwrap_or(2 * ctx.grid.n());
            let mf = (2 * nf + 2).max(ctx.grid.m() * nf / ctx.grid.n());
            let fine_grid = Grid::new(nf, mf)?;
            let schedule = ctx.schedule(*samples, *t_min);
            let (rows, mut coarse, mut fine) = convergence_inner(&ctx, &theta0, fine_grid, &schedule)?;
            ctx.add_record(&mut art, "record_coarse", &mut coarse.record);
            ctx.add_record(&mut art, "record_fine", &mut fine.record);
            let mut csv = ctx.csv_preamble();
            csv.push_str("time,l2_diff,l2_coarse,l2_fine\n");
            for r in &rows {
                csv.push_str(&format!(
                    "{:e},{:e},{:e},{:e}\n",
                    r.time, r.l2_diff, r.l2_coarse, r.l2_fine
                ));
            }
            if ctx.cfg.output.wants(OutputFormat::Csv) {
                art.add("convergence.csv", csv);
            }
            let status = termination_status(&coarse.termination).worst(termination_status(&fine.termination));
            let details = json!({
                "n_coarse": ctx.grid.n(),
                "n_fine": nf,
                "final_l2_diff": rows.last().map(|r| r.l2_diff),
                "max_l2_diff": rows.iter().map(|r| r.l2_diff).fold(0.0, f64::max),
                "rows": rows,
                "termination_coarse": coarse.termination,
                "termination_fine": fine.termination,
            });
            (status, details)
        }
        ExperimentSpec::Certify { moc } => {
            let sel = select_moc(&ctx, moc)?;
            if let Some(r) = &sel.report {
                ctx.add_certificate(&mut art, r);
            }
            let mut details = json!({ "selection": sel.summary() });
            if let Some(m) = sel.certified() {
                if m.regime() == MocRegime::Supercritical {
                    details["smallness_constant"] = json!(smallness_constant(&m, &ctx.params)?);
                }
            }
            let status = if sel.certified().is_some() {
                ExitStatus::Success
            } else {
                ExitStatus::CertificationFailed
            };
            (status, details)
        }
        ExperimentSpec::SmallnessSweep {
            amplitudes,
            moc,
            evolve,
            slack,
            samples,
            t_min,
        } => {
            let sel = select_moc(&ctx, moc)?;
            if let Some(r) = &sel.report {
                ctx.add_certificate(&mut art, r);
            }
            match sel.certified() {
                None => (ExitStatus::CertificationFailed, json!({ "selection": sel.summary() })),
                Some(m) => {
                    let schedule = ctx.schedule(*samples, *t_min);
                    let rows: Result<Vec<SweepRow>, HarnessError> = amplitudes
                        .par_iter()
                        .map(|&a| sweep_row(&ctx, &theta0.scaled(a), a, &m, *evolve, *slack, &schedule))
                        .collect();
                    let rows = rows?;
                    let mut csv = ctx.csv_preamble();
                    csv.push_str("amplitude,lhs,c,satisfied,consistent,initial_ratio,max_ratio,termination\n");
                    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
                    for r in &rows {
                        csv.push_str(&format!(
                            "{:e},{:e},{:e},{},{},{},{},{}\n",
                            r.amplitude,
                            r.lhs,
                            r.c,
                            r.satisfied,
                            r.consistent,
                            opt(r.initial_ratio),
                            opt(r.max_ratio),
                            r.termination.as_deref().unwrap_or("")
                        ));
                    }
                    if ctx.cfg.output.wants(OutputFormat::Csv) {
                        art.add("sweep.csv", csv);
                    }
                    let failed = rows
                        .iter()
                        .any(|r| r.satisfied && (!r.consistent || r.max_ratio.is_some_and(|x| !(x <= 1.0 + slack))));
                    let status = if failed {
                        ExitStatus::CertificationFailed
                    } else {
                        ExitStatus::Success
                    };
                    (status, json!({ "selection": sel.summary(), "rows": rows }))
                }
            }
        }
    };
    let summary = json!({
        "experiment": cfg.experiment.name(),
        "status": status,
        "exit_code": status.code(),
        "config_hash": ctx.hash,
        "code_version": crate::CODE_VERSION,
        "details": details,
    });
    if cfg.output.wants(OutputFormat::Json) || cfg.output.wants(OutputFormat::Csv) {
        art.add_json("summary.json", &summary);
    }
    art.add("config.toml", cfg.to_toml_string());
    Ok(ExperimentOutcome {
        status,
        summary,
        artifacts: art,
    })
}

fn with_run(mut details: Value, out: &RunOutcome) -> Value {
    details["steps"] = json!(out.steps);
    details["termination"] = json!(out.termination);
    details
}

/// The modulus chosen for an experiment and how it was obtained.
pub(crate) struct MocSelection {
    pub report: Option<CertificateReport>,
    pub searched: Option<(usize, usize, usize)>,
}

impl MocSelection {
    pub fn certified(&self) -> Option<Moc> {
        self.report.as_ref().filter(|r| r.certified).map(|r| r.moc)
    }

    fn summary(&self) -> Value {
        json!({
            "certified": self.certified().is_some(),
            "moc": self.report.as_ref().map(|r| r.moc),
            "worst_margin": self.report.as_ref().map(|r| r.worst_margin),
            "side_conditions": self.report.as_ref().map(|r| &r.side_conditions),
            "search": self.searched.map(|(c, i, b)| json!({ "candidates": c, "invalid": i, "budget": b })),
        })
    }
}

fn select_moc(ctx: &Context, section: &MocSection) -> Result<MocSelection, HarnessError> {
    let params = &ctx.params;
    let regime = params.regime();
    let constants = section.constants();
    let fixed = if let Some(path) = &section.file {
        let path = ctx.cfg.resolve_input(path);
        let text = std::fs::read_to_string(&path).map_err(|source| HarnessError::Io { path, source })?;
        Some(serde_json::from_str::<Moc>(&text).map_err(|e| MocError::Invalid(e.to_string()))?)
    } else if let (Some(d), Some(g)) = (section.delta, section.gamma) {
        let r = section.r_for(regime);
        Some(match regime {
            Regime::Subcritical => Moc::subcritical(params, r, d, g)?,
            _ => Moc::supercritical(params, r, section.tail_exponent_for(regime).unwrap_or(0.9), d, g)?,
        })
    } else {
        None
    };
    match fixed {
        Some(m) => {
            let (range, _) = default_xi_range(&m);
            let report = certify(&m, params, &constants, range, section.points)?;
            Ok(MocSelection {
                report: Some(report),
                searched: None,
            })
        }
        None => {
            let inputs = SearchInputs {
                r: section.r_for(regime),
                tail_exponent: section.tail_exponent_for(regime),
                constants,
                budget: section.budget,
                points: section.points,
            };
            let out = search_parameters(params, &inputs)?;
            Ok(MocSelection {
                report: out.report,
                searched: Some((out.candidates, out.invalid, out.budget)),
            })
        }
    }
}

/// Time series of the modulus ratio along one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MocPreserveReport {
    /// The rescaled modulus the field is checked against.
    pub moc: Moc,
    pub smallness: Option<SmallnessReport>,
    /// Whether preservation is expected: the smallness condition holds
    /// (supercritical) or the datum has the modulus at `t = 0` (subcritical).
    pub gated: bool,
    pub times: Vec<f64>,
    pub worst_ratios: Vec<f64>,
    pub max_ratio: f64,
    pub slack: f64,
    /// `max_ratio ≤ 1 + slack`.
    pub preserved: bool,
    pub termination: Termination,
}

/// Doublings tried when fitting a subcritical modulus to the datum.
const MAX_DOUBLINGS: usize = 64;

/// Rescales `moc` to `theta0`. Supercritical: `λ^{2α+2β-1} = 2‖∇θ₀‖_∞`.
/// Subcritical: the same start, then `λ` doubles until the datum has the
/// modulus.
pub fn fit_moc_to_data(
    theta0: &SpectralField,
    moc: &Moc,
    params: &ModelParams,
) -> Result<(Moc, Option<SmallnessReport>), HarnessError> {
    let phys = to_physical(theta0)?;
    if moc.regime() == MocRegime::Supercritical {
        let report = smallness_check(&phys, moc, params)?;
        let scaled = match report.rescaled {
            Some(m) => m,
            None if report.grad_linf > 0.0 => rescale_for_data(moc, report.grad_linf)?,
            None => *moc,
        };
        return Ok((scaled, Some(report)));
    }
    let grad = linf_and_grad(theta0)?.grad;
    if grad == 0.0 {
        return Ok((*moc, None));
    }
    let mut m = rescale_for_data(moc, grad)?;
    for _ in 0..MAX_DOUBLINGS {
        if verify_field_moc(&phys, &m).holds {
            break;
        }
        m = m.with_lambda(2.0 * m.lambda())?;
    }
    Ok((m, None))
}

type PreserveRun = (MocPreserveReport, RunOutcome, Vec<(f64, SpectralField)>);

fn moc_preserve_inner(
    ctx: &Context,
    theta0: &SpectralField,
    moc: &Moc,
    slack: f64,
    schedule: &SampleSchedule,
) -> Result<PreserveRun, HarnessError> {
    let (scaled, smallness) = fit_moc_to_data(theta0, moc, &ctx.params)?;
    let obs: Vec<Box<dyn Observer>> = vec![Box::new(MocObserver { moc: scaled })];
    let (out, snaps) = ctx.evolve(theta0, obs, schedule)?;
    Ok((preserve_report(scaled, smallness, slack, &out)?, out, snaps))
}

fn preserve_report(
    moc: Moc,
    smallness: Option<SmallnessReport>,
    slack: f64,
    out: &RunOutcome,
) -> Result<MocPreserveReport, HarnessError> {
    let series = out.record.series("moc_worst_ratio")?;
    let max_ratio = series
        .iter()
        .map(|p| p.1)
        .fold(0.0, |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) });
    let gated = match &smallness {
        Some(s) => s.satisfied,
        None => series.first().is_some_and(|p| p.1 <= 1.0),
    };
    Ok(MocPreserveReport {
        moc,
        smallness,
        gated,
        times: series.iter().map(|p| p.0).collect(),
        worst_ratios: series.iter().map(|p| p.1).collect(),
        max_ratio,
        slack,
        preserved: max_ratio <= 1.0 + slack,
        termination: out.termination.clone(),
    })
}

/// Evolves `theta0` and tracks its ratio against `moc` rescaled to the datum.
pub fn moc_preserve_run(
    theta0: &SpectralField,
    params: &ModelParams,
    stepper: &StepperConfig,
    evaluator: &NonlinearEvaluator,
    moc: &Moc,
    slack: f64,
    schedule: &SampleSchedule,
) -> Result<(MocPreserveReport, RunOutcome), HarnessError> {
    let (scaled, smallness) = fit_moc_to_data(theta0, moc, params)?;
    let mut obs: Vec<Box<dyn Observer>> = vec![Box::new(MocObserver { moc: scaled })];
    let out = run(theta0, params, stepper, evaluator, &mut obs, schedule)?;
    Ok((preserve_report(scaled, smallness, slack, &out)?, out))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub time: f64,
    /// `‖θ_coarse - θ_fine‖` in the coefficient norm `(Σ|θ̂(k)|²)^{1/2}`,
    /// including the fine modes outside the coarse lattice.
    pub l2_diff: f64,
    pub l2_coarse: f64,
    pub l2_fine: f64,
}

/// Coefficient-space `L²` distance between fields on nested lattices.
pub fn l2_difference(a: &SpectralField, b: &SpectralField) -> f64 {
    let (small, big) = if a.grid().n() <= b.grid().n() { (a, b) } else { (b, a) };
    small.resample(big.grid()).axpy(-1.0, big).l2_sq().sqrt()
}

fn convergence_inner(
    ctx: &Context,
    theta0: &SpectralField,
    fine_grid: Grid,
    schedule: &SampleSchedule,
) -> Result<(Vec<ConvergenceRow>, RunOutcome, RunOutcome), HarnessError> {
    let times = schedule.times().to_vec();
    let fine0 = theta0.resample(fine_grid);
    let mut coarse_fields = Vec::new();
    let mut fine_fields = Vec::new();
    let coarse = {
        let mut obs: Vec<Box<dyn Observer + '_>> = vec![Box::new(FieldCapture {
            times: times.clone(),
            out: &mut coarse_fields,
        })];
        run(theta0, &ctx.params, &ctx.stepper, &ctx.evaluator, &mut obs, schedule)?
    };
    let fine = {
        let mut obs: Vec<Box<dyn Observer + '_>> = vec![Box::new(FieldCapture {
            times,
            out: &mut fine_fields,
        })];
        run(&fine0, &ctx.params, &ctx.stepper, &ctx.evaluator, &mut obs, schedule)?
    };
    let rows = coarse_fields
        .iter()
        .zip(&fine_fields)
        .map(|((t, c), (_, f))| ConvergenceRow {
            time: *t,
            l2_diff: l2_difference(c, f),
            l2_coarse: c.l2_sq().sqrt(),
            l2_fine: f.l2_sq().sqrt(),
        })
        .collect();
    Ok((rows, coarse, fine))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub amplitude: f64,
    pub lhs: f64,
    pub c: f64,
    pub satisfied: bool,
    pub consistent: bool,
    pub initial_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
    pub termination: Option<String>,
}

fn sweep_row(
    ctx: &Context,
    theta0: &SpectralField,
    amplitude: f64,
    moc: &Moc,
    evolve: bool,
    slack: f64,
    schedule: &SampleSchedule,
) -> Result<SweepRow, HarnessError> {
    let phys = to_physical(theta0)?;
    let small = smallness_check(&phys, moc, &ctx.params)?;
    let mut row = SweepRow {
        amplitude,
        lhs: small.lhs,
        c: small.c,
        satisfied: small.satisfied,
        consistent: small.consistent,
        initial_ratio: small.moc_check.as_ref().map(|m| m.worst_ratio),
        max_ratio: None,
        termination: None,
    };
    if evolve {
        let (rep, _) = moc_preserve_run(theta0, &ctx.params, &ctx.stepper, &ctx.evaluator, moc, slack, schedule)?;
        row.max_ratio = Some(rep.max_ratio);
        row.termination = Some(match rep.termination {
            Termination::Completed => "completed".into(),
            Termination::BlowUpSuspected { time } => format!("blow_up_suspected@{time:e}"),
        });
    }
    Ok(row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn l2_difference_counts_tail() {
        let g1 = Grid::minimal(2).unwrap();
        let g2 = Grid::minimal(4).unwrap();
        let mut a = SpectralField::zeros(g1);
        a.set_pair(1, 0, Complex64::new(1.0, 0.0));
        let mut b = a.resample(g2);
        b.set_pair(3, 1, Complex64::new(0.0, 0.5));
        assert!((l2_difference(&a, &b) - (0.5f64).sqrt()).abs() < 1e-15);
        assert_eq!(l2_difference(&b, &a), l2_difference(&a, &b));
    }

    #[test]
    fn zero_datum_keeps_zero_ratio() {
        let params = ModelParams::new(0.2, 0.6, 1.0).unwrap();
        let moc = Moc::supercritical(&params, 1.2, 0.9, 1.0 / 32.0, 1.0 / 32.0).unwrap();
        let grid = Grid::minimal(4).unwrap();
        let (rep, _) = moc_preserve_run(
            &SpectralField::zeros(grid),
            &params,
            &StepperConfig::fixed(0.01, 0.05),
            &NonlinearEvaluator::pseudospectral(),
            &moc,
            0.02,
            &SampleSchedule::uniform(0.05, 5),
        )
        .unwrap();
        assert!(rep.worst_ratios.iter().all(|&r| r == 0.0));
        assert!(rep.gated && rep.preserved);
    }

    #[test]
    fn subcritical_fit_gives_modulus_at_start() {
        let params = ModelParams::new(0.75, 0.75, 1.0).unwrap();
        let moc = Moc::subcritical(&params, 1.5, 0.25, 1.0 / 128.0).unwrap();
        let grid = Grid::minimal(8).unwrap();
        let mut theta = SpectralField::zeros(grid);
        theta.set_pair(1, 0, Complex64::new(2.0, 0.0));
        theta.set_pair(2, 3, Complex64::new(0.0, 0.7));
        let (m, small) = fit_moc_to_data(&theta, &moc, &params).unwrap();
        assert!(small.is_none());
        assert!(m.lambda() > 1.0);
        assert!(verify_field_moc(&to_physical(&theta).unwrap(), &m).holds);
    }
}
