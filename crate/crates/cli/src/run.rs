//! Scenario execution. Every artifact is built in memory, in a fixed
//! order, before anything touches the output directory.

use std::f64::consts::PI;
use std::fmt::Display;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use wavekit_core::beam::{
    dispersion_params, evaluate_field_with, propagate_closed_form, propagate_paraxial_ode, quadratic_model,
    sample_field, BeamState, DispersionParams, Gouy, ParaxialOptions, TrainSpec,
};
use wavekit_core::dispersion::DispersionModel;
use wavekit_core::oracle::{compare_fields, exact_propagate, plan_grid, write_snapshot, GridPlan};
use wavekit_core::parametrix::{conductivity, dielectric_symbol, ColdPlasmaMedium};
use wavekit_core::rays::{trace_ray, transport_amplitude, RayOptions, RayStatus, Span};
use wavekit_core::symbols::{compose_left, GridField};
use wavekit_core::wigner::{intensity_from_wigner, WignerState};

use crate::config::{Analysis, ConfigError, MediumKind, Normalized, Scenario};
use crate::output::csv;

/// Samples in the dense `beam_params.csv` trace, besides the requested times.
const TRACE_POINTS: usize = 200;
/// Field sections cover `x_c ± SECTION_HALF·w`.
const SECTION_HALF: f64 = 6.0;
const SECTION_MAX_POINTS: usize = 1 << 16;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{analysis}: {message}")]
    Numerical { analysis: &'static str, message: String },
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical { .. } => 3,
            RunError::Io { .. } => 1,
        }
    }
}

fn numerical<E: Display>(analysis: &'static str) -> impl Fn(E) -> RunError {
    move |e| RunError::Numerical { analysis, message: e.to_string() }
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareRecord {
    pub index: usize,
    pub t: f64,
    pub x_c: f64,
    pub w_closed: f64,
    pub l2_rel: f64,
    pub linf_rel: f64,
    pub width_beam: f64,
    pub width_oracle: f64,
    pub peak_beam: f64,
    pub peak_oracle: f64,
    /// `peak_beam − peak_oracle`.
    pub peak_shift: f64,
}

#[derive(Debug)]
pub struct RunReport {
    /// Scenario as run, with any seed override applied.
    pub scenario: Scenario,
    pub params: DispersionParams,
    pub train: TrainSpec,
    /// Output times in normalized units, ascending.
    pub times: Vec<f64>,
    /// Dense closed-form trace written to `beam_params.csv`.
    pub trace: Vec<BeamState>,
    pub compare: Vec<CompareRecord>,
    /// Largest Wigner reconstruction error per output time, relative to the
    /// envelope peak.
    pub wigner_errors: Vec<f64>,
    pub artifacts: Vec<(String, Vec<u8>)>,
    pub wall_times: Vec<(String, f64)>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn artifact(&self, name: &str) -> Option<&[u8]> {
        self.artifacts.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }
}

/// Time at which `w/w0` reaches `ratio`.
fn time_for_ratio(spec: &TrainSpec, p: &DispersionParams, ratio: f64) -> Result<f64, ConfigError> {
    let rate = 2.0 * (1.0 - p.r) * p.vg / (spec.k0 * spec.w0 * spec.w0);
    let u = (ratio * ratio - 1.0).sqrt();
    if u == 0.0 {
        return Ok(0.0);
    }
    if rate == 0.0 {
        return Err(ConfigError::Invalid(format!(
            "width ratio {ratio} is never reached: the envelope does not spread (r = {})",
            p.r
        )));
    }
    Ok(u / rate.abs())
}

fn sorted_times(mut t: Vec<f64>) -> Vec<f64> {
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

fn params_for(n: &Normalized) -> Result<DispersionParams, RunError> {
    let p = dispersion_params(&n.train).map_err(numerical("dispersion"))?;
    if let Some(o) = n.cross_check {
        let tol = n.tolerances.override_tol;
        let checks = [("r", o.r, p.r), ("vg_over_vp", o.vg_over_vp, p.vg / p.vp), ("vp", o.vp, p.vp)];
        for (name, given, computed) in checks {
            if (given - computed).abs() > tol {
                return Err(ConfigError::Invalid(format!(
                    "medium.overrides.{name} = {given} disagrees with the value {computed} computed from the medium"
                ))
                .into());
            }
        }
    }
    Ok(p)
}

/// Points of a field section: a slice of the oracle grid when there is
/// one, otherwise a local grid resolving the carrier.
fn section_points(s: &BeamState, k0: f64, grid: Option<&GridPlan>, warnings: &mut Vec<String>) -> Vec<f64> {
    let (lo, hi) = (s.x_c - SECTION_HALF * s.w, s.x_c + SECTION_HALF * s.w);
    if let Some(g) = grid {
        let j0 = ((lo - g.x_min) / g.dx).ceil().max(0.0) as usize;
        let j1 = (((hi - g.x_min) / g.dx).floor().max(0.0) as usize).min(g.m - 1);
        return (j0..=j1).map(|j| g.x_min + j as f64 * g.dx).collect();
    }
    let mut dx = 2.0 * PI / k0 / 32.0;
    let mut n = ((hi - lo) / dx).ceil() as usize + 1;
    if n > SECTION_MAX_POINTS {
        n = SECTION_MAX_POINTS;
        dx = (hi - lo) / (n - 1) as f64;
        warnings.push(format!(
            "field section at t = {} undersamples the carrier (dx = {dx:.3e})",
            s.t
        ));
    }
    (0..n).map(|j| lo + j as f64 * dx).collect()
}

fn state_row(s: &BeamState, w0: f64) -> Vec<f64> {
    vec![s.t, s.x_c, s.w, s.w / w0, s.inv_r, s.phi, s.s0, s.a_mag]
}

const STATE_COLUMNS: [&str; 8] = ["t", "x_c", "w", "w_over_w0", "inv_R", "phi", "S0", "A_mag"];

fn params_note(p: &DispersionParams) -> String {
    format!(
        "omega0 = {:.16e}, vp = {:.16e}, vg = {:.16e}, r = {:.16e}",
        p.omega0, p.vp, p.vg, p.r
    )
}

#[derive(Serialize)]
struct ParametrixProbe {
    omega: f64,
    t: f64,
    omega_pe: f64,
    omega_pe_dot: f64,
    /// Conductivity terms, highest order first, as `[re, im]`.
    sigma: Vec<[f64; 2]>,
    /// Closed-form values of the same terms.
    sigma_closed: Vec<[f64; 2]>,
    epsilon: [f64; 2],
    /// `|σ∘q − 1|` with `q` the Ohm's-law symbol.
    residual: f64,
}

#[derive(Serialize)]
struct ParametrixReport {
    profile: String,
    omega_pe0: f64,
    ramp: f64,
    t_ramp: f64,
    nu: f64,
    levels: usize,
    seed: u64,
    /// Largest relative deviation from the closed form, per term.
    max_rel_error: Vec<f64>,
    probes: Vec<ParametrixProbe>,
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn run_parametrix(n: &Normalized) -> Result<Vec<u8>, RunError> {
    let c = &n.parametrix;
    let (w0, ramp, t_ramp) = (c.omega_pe0, c.ramp, c.t_ramp);
    let m = ColdPlasmaMedium::new(move |t| ((t * (1.0 / t_ramp)).tanh() * ramp + 1.0) * w0, c.nu, 1.0).map_err(numerical("parametrix"))?;
    let probes = m.probes(
        (c.omega_window[0], c.omega_window[1]),
        (c.t_window[0], c.t_window[1]),
        c.probes,
        n.tolerances.probe_seed,
    );
    let sigma = conductivity(&m, c.levels, &probes).map_err(numerical("parametrix"))?;
    let eps = dielectric_symbol(&m, c.levels).map_err(numerical("parametrix"))?;
    let residual = compose_left(&sigma.to_symbol(), &m.ohm_symbol().to_symbol(), c.levels + 1).map_err(numerical("parametrix"))?;
    let mut max_rel = vec![0.0f64; c.levels];
    let mut out = Vec::with_capacity(probes.len());
    for (k, x) in &probes {
        let (omega, t) = (-k[0], x[0]);
        let (wp, dwp) = m.omega_pe(t);
        let z = Complex64::new(omega, m.nu());
        let closed = [
            Complex64::i() * wp * wp / (4.0 * PI * z),
            wp * wp / (4.0 * PI * z * z) * (2.0 / wp * dwp - m.nu()),
        ];
        let mut terms = Vec::new();
        for (i, term) in sigma.terms().iter().enumerate() {
            let v = term.eval_scalar(k, x).map_err(numerical("parametrix"))?;
            let rel = (v - closed[i]).norm() / closed[i].norm();
            max_rel[i] = max_rel[i].max(if rel.is_finite() { rel } else { (v - closed[i]).norm() });
            terms.push(v);
        }
        out.push(ParametrixProbe {
            omega,
            t,
            omega_pe: wp,
            omega_pe_dot: dwp,
            sigma: terms.iter().map(|&v| pair(v)).collect(),
            sigma_closed: closed[..c.levels].iter().map(|&v| pair(v)).collect(),
            epsilon: pair(eps.eval_scalar(k, x).map_err(numerical("parametrix"))?),
            residual: (residual.eval_scalar(k, x).map_err(numerical("parametrix"))? - 1.0).norm(),
        });
    }
    let report = ParametrixReport {
        profile: "omega_pe(t) = omega_pe0 (1 + ramp tanh(t / t_ramp))".into(),
        omega_pe0: w0,
        ramp,
        t_ramp,
        nu: c.nu,
        levels: c.levels,
        seed: n.tolerances.probe_seed,
        max_rel_error: max_rel,
        probes: out,
    };
    Ok(json(&report))
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

#[derive(Serialize)]
struct CompareReport<'a> {
    k0w0: f64,
    grid_points: usize,
    x_min: f64,
    dx: f64,
    gouy: &'static str,
    records: &'a [CompareRecord],
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    units: &'static str,
    seed: u64,
    analyses: Vec<&'static str>,
    /// Output times in normalized units; file index `idx` refers to entry `idx`.
    times: &'a [f64],
    files: Vec<&'a str>,
    warnings: &'a [String],
    wall_times: Vec<(&'a str, f64)>,
    total_seconds: f64,
    config_toml: String,
    config: &'a Scenario,
}

/// Runs every requested analysis. `seed` replaces `tolerances.probe_seed`.
pub fn execute(scenario: &Scenario, seed: Option<u64>) -> Result<RunReport, RunError> {
    let mut scenario = scenario.clone();
    if let Some(s) = seed {
        scenario.tolerances.probe_seed = s;
    }
    let n = scenario.normalize()?;
    let spec = n.train.clone();
    let p = params_for(&n)?;
    let mut times = n.times.clone();
    for &ratio in &n.width_ratios {
        times.push(time_for_ratio(&spec, &p, ratio)?);
    }
    let times = sorted_times(times);
    let t_max = times.last().copied().unwrap_or(0.0);
    let has = |a: Analysis| n.analyses.contains(&a);

    let mut report = RunReport {
        scenario: scenario.clone(),
        params: p,
        train: spec.clone(),
        times: times.clone(),
        trace: Vec::new(),
        compare: Vec::new(),
        wigner_errors: Vec::new(),
        artifacts: Vec::new(),
        wall_times: Vec::new(),
        warnings: n.warnings.clone(),
    };
    let w0 = spec.w0;
    let needs_grid = has(Analysis::Oracle) || has(Analysis::Compare);
    let grid = needs_grid.then(|| {
        let plan = plan_grid(&spec, &p, t_max, n.grid.margin);
        match n.grid.m {
            Some(m) => GridPlan { m, x_min: plan.x_min, dx: plan.dx * plan.m as f64 / m as f64 },
            None => plan,
        }
    });
    if let Some(g) = &grid {
        if g.dx > 2.0 * PI / spec.k0 / 16.0 * (1.0 + 1e-12) {
            report.warnings.push(format!("grid.m = {} gives dx = {:.3e} above λ0/16", g.m, g.dx));
        }
    }

    if has(Analysis::Beam) {
        let clock = Instant::now();
        let mut dense: Vec<f64> = (0..=TRACE_POINTS).map(|i| t_max * i as f64 / TRACE_POINTS as f64).collect();
        dense.extend_from_slice(&times);
        let dense = sorted_times(dense);
        report.trace = dense.iter().map(|&t| propagate_closed_form(&spec, &p, t)).collect();
        let rows = report.trace.iter().map(|s| state_row(s, w0));
        report.artifacts.push((
            "beam_params.csv".into(),
            csv("closed-form beam parameters", &[params_note(&p)], &STATE_COLUMNS, rows),
        ));
        for (idx, &t) in times.iter().enumerate() {
            let s = propagate_closed_form(&spec, &p, t);
            let xs = section_points(&s, spec.k0, grid.as_ref(), &mut report.warnings);
            let rows = xs.iter().map(|&x| {
                let v = evaluate_field_with(&s, x, SECTION_HALF, Gouy::Half);
                vec![x, v.value]
            });
            let note = format!("t = {t:.16e}, x_c = {:.16e}, w = {:.16e}", s.x_c, s.w);
            report.artifacts.push((format!("field_t{idx:03}.csv"), csv("beam field section", &[note], &["x", "psi"], rows)));
        }
        report.wall_times.push(("beam".into(), clock.elapsed().as_secs_f64()));
    }

    if let Some(g) = &grid {
        let clock = Instant::now();
        let psi0 = GridField::from_fn(g.m, g.x_min, g.dx, 0.0, |x| Complex64::new(spec.initial_field(x), 0.0))
            .map_err(numerical("oracle"))?;
        for (idx, &t) in times.iter().enumerate() {
            let exact = exact_propagate(&psi0, &spec.medium, t).map_err(numerical("oracle"))?;
            let s = propagate_closed_form(&spec, &p, t);
            if has(Analysis::Oracle) {
                let xs = section_points(&s, spec.k0, Some(g), &mut report.warnings);
                let j0 = ((xs[0] - g.x_min) / g.dx).round() as usize;
                let rows = xs.iter().enumerate().map(|(i, &x)| vec![x, exact.samples[j0 + i].re]);
                let note = format!("t = {t:.16e}, grid M = {}, x_min = {:.16e}, dx = {:.16e}", g.m, g.x_min, g.dx);
                report.artifacts.push((format!("oracle_t{idx:03}.csv"), csv("spectral reference field", &[note], &["x", "psi"], rows)));
                let mut bin = Vec::with_capacity(16 * (g.m + 2));
                write_snapshot(&mut bin, &exact).map_err(numerical("oracle"))?;
                report.artifacts.push((format!("oracle_t{idx:03}.bin"), bin));
            }
            if has(Analysis::Compare) {
                let beam = sample_field(&s, g.m, g.x_min, g.dx, Gouy::Half).map_err(numerical("compare"))?;
                let beam = GridField { time: t, ..beam };
                let c = compare_fields(&exact, &beam).map_err(numerical("compare"))?;
                report.compare.push(CompareRecord {
                    index: idx,
                    t,
                    x_c: s.x_c,
                    w_closed: s.w,
                    l2_rel: c.l2_rel,
                    linf_rel: c.linf_rel,
                    width_beam: c.width_b,
                    width_oracle: c.width_a,
                    peak_beam: c.peak_b,
                    peak_oracle: c.peak_a,
                    peak_shift: c.peak_b - c.peak_a,
                });
            }
        }
        if has(Analysis::Compare) {
            let rep = CompareReport {
                k0w0: spec.k0 * spec.w0,
                grid_points: g.m,
                x_min: g.x_min,
                dx: g.dx,
                gouy: "half",
                records: &report.compare,
            };
            report.artifacts.push(("compare.json".into(), json(&rep)));
        }
        report.wall_times.push(("oracle".into(), clock.elapsed().as_secs_f64()));
    }

    if has(Analysis::Rays) {
        let clock = Instant::now();
        run_rays(&n, &spec, &p, &times, &mut report)?;
        report.wall_times.push(("rays".into(), clock.elapsed().as_secs_f64()));
    }

    if has(Analysis::Wigner) {
        let clock = Instant::now();
        run_wigner(&n, &spec, &p, &times, &mut report)?;
        report.wall_times.push(("wigner".into(), clock.elapsed().as_secs_f64()));
    }

    if has(Analysis::Parametrix) {
        let clock = Instant::now();
        report.artifacts.push(("parametrix.json".into(), run_parametrix(&n)?));
        report.wall_times.push(("parametrix".into(), clock.elapsed().as_secs_f64()));
    }
    Ok(report)
}

fn run_rays(
    n: &Normalized,
    spec: &TrainSpec,
    p: &DispersionParams,
    times: &[f64],
    report: &mut RunReport,
) -> Result<(), RunError> {
    let err = numerical("rays");
    let model = if n.kind == MediumKind::Overrides {
        quadratic_model(p, spec.k0)
    } else {
        DispersionModel::transverse_wave(spec.medium.clone())
    };
    let t_max = times.last().copied().unwrap_or(0.0);
    let span = if t_max > 0.0 { Span::Coordinate { axis: 1, value: t_max } } else { Span::Tau(0.0) };
    let opts = RayOptions {
        tol: n.tolerances.ode_tol,
        shell_tol: n.tolerances.shell_tol,
        project_axis: Some(1),
        ..RayOptions::default()
    };
    let ray = trace_ray(&model, &[0.0, 0.0], &[spec.k0, -p.omega0], span, &opts).map_err(&err)?;
    if ray.status != RayStatus::Completed {
        return Err(RunError::Numerical {
            analysis: "rays",
            message: format!("reference ray stopped early ({:?}): {}", ray.status, ray.note.clone().unwrap_or_default()),
        });
    }
    let log_a2 = if spec.a0 != 0.0 { 2.0 * spec.a0.abs().ln() } else { 0.0 };
    let ray = transport_amplitude(&ray, log_a2, |x: &[f64], k: &[f64]| model.gamma(k, x)).map_err(&err)?;
    let rows = ray
        .samples
        .iter()
        .map(|s| vec![s.tau, s.x[0], s.x[1], s.k[0], -s.k[1], s.s, s.log_a2, s.det_j]);
    report.artifacts.push((
        "rays.csv".into(),
        csv(
            "reference ray in (x, t)",
            &[params_note(p)],
            &["tau", "x", "t", "kappa", "omega", "S", "log_A2", "det_J"],
            rows,
        ),
    ));
    let init = propagate_closed_form(spec, p, 0.0);
    let popts = ParaxialOptions { tol: n.tolerances.ode_tol, max_width: None };
    let states = propagate_paraxial_ode(&model, &ray, &init, times, &popts).map_err(numerical("paraxial"))?;
    let mut columns = STATE_COLUMNS.to_vec();
    columns.push("w_rel_err");
    let rows = states.iter().map(|s| {
        let closed = propagate_closed_form(spec, p, s.t);
        let mut row = state_row(s, spec.w0);
        row.push((s.w - closed.w) / closed.w);
        row
    });
    report.artifacts.push(("beam_ode.csv".into(), csv("paraxial ODE along the reference ray", &[], &columns, rows)));
    Ok(())
}

fn run_wigner(
    n: &Normalized,
    spec: &TrainSpec,
    p: &DispersionParams,
    times: &[f64],
    report: &mut RunReport,
) -> Result<(), RunError> {
    let cfg = &n.wigner;
    let ell = cfg.kernel_width.expect("set by normalize");
    let mut intensity_rows = Vec::new();
    for (idx, &t) in times.iter().enumerate() {
        let s = propagate_closed_form(spec, p, t);
        let dx = 2.0 * PI / spec.k0 / 16.0;
        let m = ((16.0 * s.w / dx) as usize).next_power_of_two();
        let x_min = s.x_c - 0.5 * m as f64 * dx;
        let field = sample_field(&s, m, x_min, dx, Gouy::Half).map_err(numerical("wigner"))?;
        let half = cfg.window * s.w;
        let st = WignerState::from_field(&field, cfg.stride, Some((s.x_c - half - 6.0 * ell, s.x_c + half + 6.0 * ell)));
        let peak = 0.5 * s.a_mag * s.a_mag;
        let mut worst = 0.0f64;
        for i in 0..cfg.points {
            let x = s.x_c - half + 2.0 * half * i as f64 / (cfg.points - 1) as f64;
            let xi = x - s.x_c;
            let envelope = peak * (-2.0 * xi * xi / (s.w * s.w)).exp();
            let got = intensity_from_wigner(&st, &[x], ell).map_err(numerical("wigner"))?;
            if peak > 0.0 {
                worst = worst.max((got - envelope).abs() / peak);
            }
            intensity_rows.push(vec![idx as f64, t, x, got, envelope]);
        }
        report.wigner_errors.push(worst);
        let floor = cfg.write_floor * st.max_w();
        let rows = st
            .samples
            .iter()
            .filter(|q| q.w.abs() >= floor && q.w != 0.0)
            .map(|q| vec![q.x[0], q.k[0], q.w, q.weight]);
        let note = format!("t = {t:.16e}, kernel width = {ell:.16e}, reconstruction error = {worst:.6e}");
        report.artifacts.push((format!("wigner_t{idx:03}.csv"), csv("pseudo-Wigner samples", &[note], &["x", "k", "W", "weight"], rows)));
    }
    report.artifacts.push((
        "wigner_intensity.csv".into(),
        csv(
            "intensity from the Wigner function against the phase-averaged envelope",
            &[],
            &["index", "t", "x", "intensity", "envelope"],
            intensity_rows,
        ),
    ));
    Ok(())
}

/// Writes the artifacts and `run.json` into `dir`, creating it if needed.
pub fn write_run(dir: &Path, report: &RunReport, total_seconds: f64) -> Result<(), RunError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| RunError::Io { path: path.clone(), source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    for (name, bytes) in &report.artifacts {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(io(&path))?;
    }
    let n = report.scenario.normalize()?;
    let manifest = Manifest {
        tool: "wavekit",
        version: env!("CARGO_PKG_VERSION"),
        core_version: wavekit_core::VERSION,
        units: crate::output::UNITS,
        seed: report.scenario.tolerances.probe_seed,
        analyses: n.analyses.iter().map(|a| a.name()).collect(),
        times: &report.times,
        files: report.artifacts.iter().map(|(n, _)| n.as_str()).collect(),
        warnings: &report.warnings,
        wall_times: report.wall_times.iter().map(|(n, t)| (n.as_str(), *t)).collect(),
        total_seconds,
        config_toml: report.scenario.to_toml(),
        config: &report.scenario,
    };
    let path = dir.join("run.json");
    std::fs::write(&path, json(&manifest)).map_err(io(&path))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(text: &str) -> Scenario {
        Scenario::from_toml(text).unwrap()
    }

    const BASE: &str = "[medium]\nkind = \"cold_plasma\"\nomega_pe = 1.0\n[train]\nw0 = 20.0\nk0 = 1.0\n";

    #[test]
    fn width_ratio_times_hit_the_ratio() {
        let s = scenario(&format!("width_ratios = [1.0, 2.0]\nanalyses = [\"beam\"]\n{BASE}"));
        let r = execute(&s, None).unwrap();
        assert_eq!(r.times.len(), 2);
        let w = propagate_closed_form(&r.train, &r.params, r.times[1]).w;
        assert!((w / 20.0 - 2.0).abs() < 1e-12);
        assert!(r.artifact("field_t001.csv").is_some());
    }

    #[test]
    fn override_disagreement_is_a_config_error() {
        let bad = format!("times = [1.0]\n{BASE}[medium.overrides]\nr = 0.2\nvg_over_vp = 0.5\n");
        assert!(matches!(execute(&scenario(&bad), None), Err(RunError::Config(_))));
        let good = format!("times = [1.0]\n{BASE}[medium.overrides]\nr = 0.5\nvg_over_vp = 0.5\nvp = 1.4142135623730951\n");
        assert!(execute(&scenario(&good), None).is_ok());
    }

    #[test]
    fn parametrix_matches_closed_forms() {
        let s = scenario(&format!("analyses = [\"parametrix\"]\n{BASE}[parametrix]\nprobes = 20\n"));
        let r = execute(&s, Some(3)).unwrap();
        let v: serde_json::Value = serde_json::from_slice(r.artifact("parametrix.json").unwrap()).unwrap();
        assert_eq!(v["seed"], 3);
        for e in v["max_rel_error"].as_array().unwrap() {
            assert!(e.as_f64().unwrap() < 1e-12);
        }
        assert_eq!(v["probes"].as_array().unwrap().len(), 20);
    }

    #[test]
    fn rays_and_ode_follow_the_closed_form() {
        let s = scenario(&format!("times = [0.0, 300.0]\nanalyses = [\"rays\"]\n{BASE}"));
        let r = execute(&s, None).unwrap();
        let t = crate::output::parse_csv(std::str::from_utf8(r.artifact("beam_ode.csv").unwrap()).unwrap()).unwrap();
        for e in t.column("w_rel_err").unwrap() {
            assert!(e.abs() < 1e-7);
        }
        let rays = crate::output::parse_csv(std::str::from_utf8(r.artifact("rays.csv").unwrap()).unwrap()).unwrap();
        let ts = rays.column("t").unwrap();
        assert!((ts.last().unwrap() - 300.0).abs() < 1e-9);
    }
}
