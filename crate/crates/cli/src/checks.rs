//! Acceptance checks, shared by `wavekit selftest` and the acceptance test
//! target. Criteria 1 and 2 inspect run artifacts; the others call the
//! library directly.

use std::convert::Infallible;
use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;

use wavekit_core::beam::{
    dispersion_params, propagate_closed_form, propagate_paraxial_ode, quadratic_model, sample_field, Gouy,
    Overrides, ParaxialOptions, TrainSpec, DEFAULT_MIN_K0W0,
};
use wavekit_core::dispersion::{absorption_coefficient, eigen_mode, AbsorptionSource, DispersionModel};
use wavekit_core::jet::Jet;
use wavekit_core::linalg::det_real;
use wavekit_core::medium::RefractiveIndex;
use wavekit_core::parametrix::{conductivity, ColdPlasmaMedium};
use wavekit_core::rays::{project_to_shell, trace_ray, transport_amplitude, RayOptions, Span};
use wavekit_core::symbols::{
    compose_left, hermitian_split, reduce_symbol, Form, ProbeSampler, ReducedSymbol, SymMat, TwoPointSymbol,
};
use wavekit_core::wigner::{evolve_wigner, intensity_from_wigner, WignerOptions, WignerSample, WignerState};

use crate::config::Scenario;
use crate::output::parse_csv;
use crate::run::execute;

/// Spreading scenario: overrides `r = 0.2`, `v_g/v_p = 0.8`, `k0·w0 = 20`.
pub const SPREADING: &str = include_str!("../scenarios/spreading.toml");
/// Cold plasma with `ω_pe = c = 1` up to `w = 2w0`, `k0·w0 = 20`.
pub const COLD_PLASMA: &str = include_str!("../scenarios/cold_plasma.toml");
pub const VACUUM: &str = include_str!("../scenarios/vacuum.toml");

pub const SPREADING_R: f64 = 0.2;
pub const SPREADING_VG: f64 = 0.8;
pub const SPREADING_K0W0: f64 = 20.0;
/// `u` beyond which `π/2 − φ` must be below `1/u`.
pub const GOUY_LIMIT_U: f64 = 1e6;

#[derive(Clone, Debug)]
pub struct Check {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(id: u8, name: &'static str, passed: bool, detail: String) -> Check {
        Check { id, name, passed, detail }
    }

    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        format!("criterion {} [{}] {verdict}: {}", self.id, self.name, self.detail)
    }
}

/// The cold-plasma scenario with `w0` set for the given `k0·w0`.
pub fn cold_plasma_scenario(k0w0: f64) -> String {
    let mut s = Scenario::from_toml(COLD_PLASMA).expect("bundled scenario parses");
    s.train.w0 = k0w0 / s.train.k0;
    s.to_toml()
}

/// Spreading scenario with one output time far past the spreading scale.
pub fn spreading_long_scenario() -> String {
    let mut s = Scenario::from_toml(SPREADING).expect("bundled scenario parses");
    s.times.push(1e9);
    s.to_toml()
}

/// Criterion 1 from `beam_params.csv` and the field sections.
pub fn closed_form_reproduction(beam_params: &str, sections: &[String], runtime: f64) -> Check {
    let name = "closed-form reproduction";
    let fail = |d: String| Check::new(1, name, false, d);
    let t = match parse_csv(beam_params) {
        Ok(t) => t,
        Err(e) => return fail(format!("beam_params.csv: {e}")),
    };
    let col = |c: &str| t.column(c).unwrap_or_default();
    let (ts, ratio, phi, amp, w) = (col("t"), col("w_over_w0"), col("phi"), col("A_mag"), col("w"));
    if ts.is_empty() || ratio.len() != ts.len() {
        return fail("beam_params.csv has no usable rows".into());
    }
    let (k0, w0) = (1.0, SPREADING_K0W0);
    let rate = 2.0 * (1.0 - SPREADING_R) * SPREADING_VG / (k0 * w0 * w0);
    let (mut width_err, mut energy_err, mut phase_err) = (0.0f64, 0.0f64, 0.0f64);
    let mut monotone = true;
    let mut limit_ok = false;
    let mut u_max = 0.0f64;
    for i in 0..ts.len() {
        let u = rate * ts[i];
        width_err = width_err.max((ratio[i] / (1.0 + u * u).sqrt() - 1.0).abs());
        energy_err = energy_err.max((amp[i] * amp[i] * w[i] / w0 - 1.0).abs());
        phase_err = phase_err.max((phi[i] - u.atan()).abs());
        if i > 0 && phi[i] < phi[i - 1] {
            monotone = false;
        }
        if u >= GOUY_LIMIT_U {
            limit_ok = PI / 2.0 - phi[i] <= 1.0 / u && phi[i] < PI / 2.0;
        }
        u_max = u_max.max(u);
    }
    // Sections: envelope and carrier from the formulas, Gouy phase halved.
    let mut section_err = 0.0f64;
    for text in sections {
        let Ok(tab) = parse_csv(text) else { return fail("unreadable field section".into()) };
        let Some(tt) = text.lines().find_map(|l| l.strip_prefix("# t = ")).and_then(|l| l.split(',').next()) else {
            return fail("field section without a time note".into());
        };
        let tt: f64 = tt.trim().parse().unwrap_or(f64::NAN);
        let u = rate * tt;
        let vg = SPREADING_VG;
        let wt = w0 * (1.0 + u * u).sqrt();
        let inv_r = 2.0 * u / (k0 * w0 * w0 * (1.0 + u * u));
        let s0 = -k0 * tt * (1.0 - vg);
        let a = (w0 / wt).sqrt();
        let (xs, psi) = (tab.column("x").unwrap_or_default(), tab.column("psi").unwrap_or_default());
        for (x, v) in xs.iter().zip(&psi) {
            let xi = x - vg * tt;
            let want = a * (-(xi / wt).powi(2)).exp() * (s0 + k0 * xi + 0.5 * k0 * inv_r * xi * xi - 0.5 * u.atan()).cos();
            section_err = section_err.max((v - want).abs() / a);
        }
    }
    let passed = width_err <= 1e-12
        && energy_err <= 1e-12
        && phase_err <= 1e-12
        && monotone
        && limit_ok
        && section_err <= 1e-9
        && !sections.is_empty()
        && runtime < 1.0;
    Check::new(
        1,
        name,
        passed,
        format!(
            "w/w0 err {width_err:.1e}, A²w err {energy_err:.1e}, φ err {phase_err:.1e}, φ monotone {monotone}, \
             π/2 limit {limit_ok} (u up to {u_max:.1e}), {} sections err {section_err:.1e}, runtime {runtime:.3} s",
            sections.len()
        ),
    )
}

/// L2 error at the largest output time of a `compare.json`.
pub fn final_error(compare_json: &str) -> Result<(f64, f64, f64), String> {
    let v: serde_json::Value = serde_json::from_str(compare_json).map_err(|e| e.to_string())?;
    let recs = v["records"].as_array().ok_or("no records")?;
    let last = recs.last().ok_or("empty records")?;
    let get = |k: &str| last[k].as_f64().ok_or(format!("missing {k}"));
    let k0w0 = v["k0w0"].as_f64().ok_or("missing k0w0")?;
    Ok((get("l2_rel")?, get("w_closed")? / k0w0, get("t")?))
}

/// Criterion 2 from the `compare.json` of the `k0·w0 = 20` and `40` runs;
/// `runtime` is the slower of the two.
pub fn oracle_agreement(compare_20: &str, compare_40: &str, runtime: f64) -> Check {
    let name = "oracle agreement";
    match (final_error(compare_20), final_error(compare_40)) {
        (Ok((e20, r20, _)), Ok((e40, r40, _))) => {
            let ratio = e20 / e40;
            let at_2w0 = (r20 - 2.0).abs() < 1e-9 && (r40 - 2.0).abs() < 1e-9;
            let passed = e20 <= 0.05 && ratio >= 1.5 && at_2w0 && runtime < 30.0;
            Check::new(
                2,
                name,
                passed,
                format!(
                    "L2 at w = 2w0: {e20:.4} (k0w0 20), {e40:.4} (k0w0 40), ratio {ratio:.2}, runtime {runtime:.2} s"
                ),
            )
        }
        (a, b) => Check::new(2, name, false, format!("unreadable compare.json: {:?} {:?}", a.err(), b.err())),
    }
}

fn run_artifacts(toml: &str) -> Result<crate::run::RunReport, String> {
    let s = Scenario::from_toml(toml).map_err(|e| e.to_string())?;
    execute(&s, None).map_err(|e| e.to_string())
}

fn text(report: &crate::run::RunReport, name: &str) -> String {
    report.artifact(name).map(|b| String::from_utf8_lossy(b).into_owned()).unwrap_or_default()
}

/// Criterion 1 through the library pipeline.
pub fn closed_form_in_process() -> Check {
    let clock = Instant::now();
    match run_artifacts(&spreading_long_scenario()) {
        Ok(r) => {
            let runtime = clock.elapsed().as_secs_f64();
            let sections: Vec<String> = (0..r.times.len())
                .filter(|&i| r.times[i] < 1e6)
                .map(|i| text(&r, &format!("field_t{i:03}.csv")))
                .collect();
            closed_form_reproduction(&text(&r, "beam_params.csv"), &sections, runtime)
        }
        Err(e) => Check::new(1, "closed-form reproduction", false, e),
    }
}

/// Criterion 2 through the library pipeline.
pub fn oracle_in_process() -> Check {
    let timed = |k0w0: f64| {
        let clock = Instant::now();
        let r = run_artifacts(&cold_plasma_scenario(k0w0));
        (r, clock.elapsed().as_secs_f64())
    };
    let ((a, ta), (b, tb)) = (timed(20.0), timed(40.0));
    let runtime = ta.max(tb);
    match (a, b) {
        (Ok(a), Ok(b)) => oracle_agreement(&text(&a, "compare.json"), &text(&b, "compare.json"), runtime),
        (a, b) => Check::new(2, "oracle agreement", false, format!("{:?} {:?}", a.err(), b.err())),
    }
}

fn ramp(t_scale: f64, nu0: f64) -> ColdPlasmaMedium {
    ColdPlasmaMedium::new(move |t| (t * (1.0 / t_scale)).tanh() * 0.3 + 1.0, nu0 / t_scale, 1.0).expect("valid")
}

/// Pairwise order estimates `p_i` from successive halvings of `δ` show an
/// asymptotic order of at least two when every estimate after the first is
/// either `≥ 2` or falls short by at most half the previous shortfall, so
/// the shortfall tends to zero. A residual `aδ² + bδ³` with `b/a < 0`
/// approaches 2 from below.
pub fn order_at_least_two(orders: &[f64]) -> bool {
    let mut prev: Option<f64> = None;
    for &p in orders {
        let deficit = 2.0 - p;
        if !p.is_finite() {
            return false;
        }
        if deficit > 0.0 && prev.is_some_and(|d| deficit > 0.5 * d) {
            return false;
        }
        prev = Some(deficit.max(0.0));
    }
    orders.len() >= 2 || orders.first().is_some_and(|&p| p >= 2.0)
}

/// Criterion 3: conductivity terms against closed forms, and the residual
/// order of the parametrix.
pub fn parametrix_closed_forms() -> Check {
    let name = "parametrix closed forms";
    let run = || -> Result<(f64, Vec<f64>), String> {
        let m = ramp(5.0, 0.2);
        let probes = m.probes((0.5, 6.0), (-10.0, 10.0), 100, 7);
        let p = conductivity(&m, 2, &probes).map_err(|e| e.to_string())?;
        let mut worst = 0.0f64;
        for (k, x) in &probes {
            let (omega, t) = (-k[0], x[0]);
            let (wp, dwp) = m.omega_pe(t);
            let z = Complex64::new(omega, m.nu());
            let lead = Complex64::i() * wp * wp / (4.0 * PI * z);
            let next = wp * wp / (4.0 * PI * z * z) * (2.0 / wp * dwp - m.nu());
            let a = p.terms()[0].eval_scalar(k, x).map_err(|e| e.to_string())?;
            let b = p.terms()[1].eval_scalar(k, x).map_err(|e| e.to_string())?;
            worst = worst.max((a - lead).norm() / lead.norm()).max((b - next).norm() / next.norm());
        }
        let mut residuals = Vec::new();
        for scale in [10.0, 20.0, 40.0, 80.0] {
            let m = ramp(scale, 0.2);
            let probes = [m.phase_point(2.0, 0.3 * scale)];
            let p = conductivity(&m, 2, &probes).map_err(|e| e.to_string())?;
            let prod = compose_left(&p.to_symbol(), &m.ohm_symbol().to_symbol(), 3).map_err(|e| e.to_string())?;
            let (k, x) = &probes[0];
            residuals.push((prod.eval_scalar(k, x).map_err(|e| e.to_string())? - 1.0).norm());
        }
        let orders = residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        Ok((worst, orders))
    };
    match run() {
        Ok((worst, orders)) => {
            let passed = worst <= 1e-12 && order_at_least_two(&orders);
            let shown: Vec<String> = orders.iter().map(|o| format!("{o:.6}")).collect();
            let deficits: Vec<String> = orders.iter().map(|o| format!("{:.1e}", 2.0 - o)).collect();
            Check::new(
                3,
                name,
                passed,
                format!(
                    "100 probes max rel err {worst:.1e}; residual orders [{}], 2 − order [{}]",
                    shown.join(", "),
                    deficits.join(", ")
                ),
            )
        }
        Err(e) => Check::new(3, name, false, e),
    }
}

/// Coefficients `c[m][n]` of `x^m D^n`, `D = −i∂_x`, as Gaussian integers.
type Poly = Vec<Vec<(i64, i64)>>;

fn gmul(a: (i64, i64), b: (i64, i64)) -> (i64, i64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

/// Normal-ordered product using `D^n x^p = Σ_j C(n,j) (−i)^j p!/(p−j)! x^{p−j} D^{n−j}`.
fn compose_poly(a: &Poly, b: &Poly) -> Poly {
    let binom = |n: usize, k: usize| (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i as i64 + 1));
    let falling = |p: usize, j: usize| (0..j).map(|i| (p - i) as i64).product::<i64>();
    let mut out = vec![vec![(0i64, 0i64); 7]; 7];
    for (m, row) in a.iter().enumerate() {
        for (n, &ca) in row.iter().enumerate() {
            for (p, brow) in b.iter().enumerate() {
                for (q, &cb) in brow.iter().enumerate() {
                    for j in 0..=n.min(p) {
                        let s = binom(n, j) * falling(p, j);
                        let c = gmul(gmul(ca, cb), [(1, 0), (0, -1), (-1, 0), (0, 1)][j % 4]);
                        let slot = &mut out[m + p - j][n - j + q];
                        slot.0 += s * c.0;
                        slot.1 += s * c.1;
                    }
                }
            }
        }
    }
    out
}

fn poly_symbol(c: Poly) -> ReducedSymbol {
    ReducedSymbol::scalar(1, Form::LEFT, 3.0, move |k, x| {
        let mut acc = Jet::zero(k[0].nvars(), k[0].order());
        for (m, row) in c.iter().enumerate() {
            for (n, &(re, im)) in row.iter().enumerate() {
                if (re, im) != (0, 0) {
                    acc = acc + x[0].powi(m as i32) * &k[0].powi(n as i32) * Complex64::new(re as f64, im as f64);
                }
            }
        }
        acc
    })
}

fn random_poly(s: &mut ProbeSampler) -> Poly {
    let mut p = vec![vec![(0, 0); 4]; 4];
    for m in 0..4 {
        for n in 0..4 - m {
            p[m][n] = (s.uniform(-3.5, 3.5).round() as i64, s.uniform(-3.5, 3.5).round() as i64);
        }
    }
    p
}

/// Criterion 4: left composition against explicit operator products.
pub fn product_rule(pairs: usize, seed: u64) -> Check {
    let name = "product rule";
    let mut s = ProbeSampler::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let (a, b) = (random_poly(&mut s), random_poly(&mut s));
        let exact = compose_poly(&a, &b);
        let c = match compose_left(&poly_symbol(a), &poly_symbol(b), 4) {
            Ok(c) => c,
            Err(e) => return Check::new(4, name, false, e.to_string()),
        };
        for _ in 0..3 {
            let (k, x) = (s.uniform(-2.0, 2.0), s.uniform(-2.0, 2.0));
            let got = c.eval_scalar(&[k], &[x]).unwrap_or(Complex64::new(f64::NAN, 0.0));
            let mut want = Complex64::new(0.0, 0.0);
            for (m, row) in exact.iter().enumerate() {
                for (n, &(re, im)) in row.iter().enumerate() {
                    want += Complex64::new(re as f64, im as f64) * x.powi(m as i32) * k.powi(n as i32);
                }
            }
            let err = (got - want).norm() / want.norm().max(1.0);
            worst = worst.max(if err.is_nan() { f64::INFINITY } else { err });
        }
    }
    Check::new(4, name, worst <= 1e-12, format!("{pairs} random pairs of degree ≤ 3, max rel err {worst:.1e}"))
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Graded two-point symbols: scalar 1-D, scalar 2-D and a 2×2 matrix.
fn gamma_catalog() -> Vec<(&'static str, TwoPointSymbol)> {
    let scalar_1d = TwoPointSymbol::graded(vec![
        TwoPointSymbol::scalar(1, 2.0, 1.0, |k, x, xp| {
            &k[0] * &k[0] * (&x[0] * 0.3).sin().exp() + &k[0] * (&xp[0] * 0.7).cos() - (&x[0] + &xp[0]) * 0.5
        }),
        TwoPointSymbol::scalar(1, 1.0, 1.0, |k, x, xp| {
            (&x[0] * &xp[0] * 0.2).cos() * c(0.0, 0.4) + &k[0] * (&xp[0] * 0.1) * c(0.05, 0.1)
        }),
    ]);
    let scalar_2d = TwoPointSymbol::graded(vec![
        TwoPointSymbol::scalar(2, 2.0, 1.0, |k, x, xp| {
            &k[0] * &k[1] * (&x[1] - &xp[0] * 0.5).cos() + &k[1] * &k[1] * (&xp[1] * 0.3).exp() - &x[0] * &k[0] * 0.2
        }),
        TwoPointSymbol::scalar(2, 1.0, 1.0, |k, x, xp| (&x[0] + &xp[1]).sin() * c(0.1, -0.3) + &k[0] * c(0.0, 0.02)),
    ]);
    let matrix = TwoPointSymbol::graded(vec![
        TwoPointSymbol::analytic(1, 2, 2.0, 1.0, |k, x, xp| {
            let off = &k[0] * (&x[0] - &xp[0]) * c(0.0, 0.3) + 0.4;
            SymMat::from_entries(
                2,
                vec![
                    &k[0] * &k[0] * (&x[0] * 0.5).cos() - 1.0,
                    off.clone(),
                    off,
                    &k[0] * 2.0 + (&xp[0] * &xp[0] * 0.1).exp() * (&x[0] * 0.2).cos(),
                ],
            )
        }),
        TwoPointSymbol::analytic(1, 2, 1.0, 1.0, |k, x, xp| {
            let z = Jet::zero(k[0].nvars(), k[0].order());
            SymMat::from_entries(
                2,
                vec![
                    (&x[0] * 0.4).cos() * c(0.0, 0.2),
                    &z + c(0.03, 0.01),
                    &xp[0] * c(0.0, 0.05),
                    &k[0] * c(0.0, -0.1),
                ],
            )
        }),
    ]);
    vec![("scalar 1-D", scalar_1d), ("scalar 2-D", scalar_2d), ("2x2 matrix", matrix)]
}

/// Criterion 5: `γ` from left, Weyl and right reduced symbols against the
/// two-point value; principal parts identical.
pub fn intrinsic_gamma() -> Check {
    let name = "intrinsic absorption identity";
    let forms = [Form::LEFT, Form::WEYL, Form::RIGHT];
    let points: [(&[f64], &[f64]); 3] =
        [(&[0.8, -0.4], &[0.3, 1.1]), (&[1.7, 0.2], &[-0.6, 0.4]), (&[-1.2, 0.9], &[2.0, -1.5])];
    let mut worst = 0.0f64;
    let mut principal_diff = 0.0f64;
    let mut cases = 0;
    for (label, d) in gamma_catalog() {
        let dim = d.dim();
        let reduced: Result<Vec<_>, _> = forms.iter().map(|&f| reduce_symbol(&d, f, 2)).collect();
        let reduced = match reduced {
            Ok(r) => r,
            Err(e) => return Check::new(5, name, false, format!("{label}: {e}")),
        };
        for (k, x) in points {
            let (k, x) = (&k[..dim], &x[..dim]);
            let mut run = || -> Result<(), String> {
                let pr: Vec<Vec<Complex64>> = reduced
                    .iter()
                    .map(|r| r.principal().eval(k, x))
                    .collect::<Result<_, _>>()
                    .map_err(|e| e.to_string())?;
                for p in &pr[1..] {
                    for (a, b) in p.iter().zip(&pr[0]) {
                        principal_diff = principal_diff.max((a - b).norm());
                    }
                }
                let (tensor, _) = hermitian_split(reduced[0].principal());
                let (_, e) = eigen_mode(&tensor, k, x, 0).map_err(|e| e.to_string())?;
                let intrinsic = absorption_coefficient(AbsorptionSource::Intrinsic(&d), &e, k, x).map_err(|e| e.to_string())?;
                for r in &reduced {
                    let g = absorption_coefficient(AbsorptionSource::Reduced(r), &e, k, x).map_err(|e| e.to_string())?;
                    worst = worst.max((g - intrinsic).abs() / intrinsic.abs().max(1e-3));
                }
                Ok(())
            };
            if let Err(e) = run() {
                return Check::new(5, name, false, format!("{label}: {e}"));
            }
            cases += 1;
        }
    }
    Check::new(
        5,
        name,
        worst <= 1e-9 && principal_diff == 0.0,
        format!("{cases} catalog points, 3 forms: γ max rel spread {worst:.1e}, principal part max diff {principal_diff:.1e}"),
    )
}

fn lens() -> DispersionModel {
    DispersionModel::scalar(2, |k, x| {
        let r2 = &x[0] * &x[0] + &x[1] * &x[1];
        &k[0] * &k[0] + &k[1] * &k[1] - ((r2 * -0.25).exp() * 0.3 + 1.0)
    })
}

/// Criterion 6: Hamiltonian drift, symplecticity, time reversal and the
/// point-source amplitude law.
pub fn hamiltonian_flow() -> Check {
    let name = "Hamiltonian flow";
    let catalog: Vec<(DispersionModel, Vec<f64>, Vec<f64>, f64)> = vec![
        (lens(), vec![-3.0, 0.5], vec![1.0, 0.1], 3.0),
        (
            DispersionModel::transverse_wave(RefractiveIndex::cold_plasma(1.0).expect("valid")),
            vec![0.0, 0.0],
            vec![1.0, -1.5],
            5.0,
        ),
        (DispersionModel::scalar(1, |k, x| &k[0] * &k[0] - &x[0] * 0.5), vec![2.0], vec![1.0], 4.0),
    ];
    let opts = RayOptions { project_axis: Some(0), detect_caustics: false, ..Default::default() };
    let run = || -> Result<(f64, f64, f64, f64), String> {
        let (mut drift, mut det_err, mut reversal) = (0.0f64, 0.0f64, 0.0f64);
        for (model, x0, k0, span) in &catalog {
            let fwd = trace_ray(model, x0, k0, Span::Tau(*span), &opts).map_err(|e| e.to_string())?;
            for s in &fwd.samples {
                drift = drift.max(model.hamiltonian(&s.k, &s.x).map_err(|e| e.to_string())?.abs());
            }
            det_err = det_err.max((det_real(&fwd.last().monodromy, 2 * fwd.dim) - 1.0).abs());
            let end = fwd.last();
            let back_opts = RayOptions { project_axis: None, ..opts.clone() };
            let back = trace_ray(model, &end.x, &end.k, Span::Tau(-span), &back_opts).map_err(|e| e.to_string())?;
            let (a, b) = (fwd.first(), back.last());
            for i in 0..a.x.len() {
                reversal = reversal.max((a.x[i] - b.x[i]).abs()).max((a.k[i] - b.k[i]).abs());
            }
        }
        // Fan from a point source, seen from τ0 = 1 over a decade.
        let model = DispersionModel::scalar(2, |k, _| &k[0] * &k[0] + &k[1] * &k[1] - 1.0);
        let tau0 = 1.0;
        let o = RayOptions {
            tangents: Some(vec![(vec![0.0, 2.0 * tau0], vec![0.0, 1.0])]),
            max_step: 0.1,
            ..opts.clone()
        };
        let ray = trace_ray(&model, &[2.0 * tau0, 0.0], &[1.0, 0.0], Span::Tau(9.0 * tau0), &o).map_err(|e| e.to_string())?;
        let ray = transport_amplitude(&ray, 0.0, |_, _| Ok::<_, Infallible>(0.0)).map_err(|e| e.to_string())?;
        let mut source = 0.0f64;
        for s in &ray.samples {
            source = source.max((s.log_a2.exp() * (tau0 + s.tau) / tau0 - 1.0).abs());
        }
        Ok((drift, det_err, reversal, source))
    };
    match run() {
        Ok((drift, det_err, reversal, source)) => Check::new(
            6,
            name,
            drift < 1e-6 && det_err < 1e-6 && reversal < 1e-7 && source < 0.01,
            format!(
                "drift {drift:.1e}, |det M − 1| {det_err:.1e}, reversal {reversal:.1e}, point-source |A|²τ spread {source:.1e}"
            ),
        ),
        Err(e) => Check::new(6, name, false, e),
    }
}

/// Windowed Wigner intensity of a closed-form train against its
/// phase-averaged envelope, relative to the peak.
pub fn reconstruction_error(k0w0: f64, t: f64) -> Result<f64, String> {
    let spec = TrainSpec::new(1.0, k0w0, 1.0, RefractiveIndex::cold_plasma(1.0).expect("valid"), DEFAULT_MIN_K0W0)
        .map_err(|e| e.to_string())?;
    let p = dispersion_params(&spec).map_err(|e| e.to_string())?;
    let s = propagate_closed_form(&spec, &p, t);
    let dx = 2.0 * PI / 16.0;
    let m = ((16.0 * s.w / dx) as usize).next_power_of_two();
    let field = sample_field(&s, m, s.x_c - 0.5 * m as f64 * dx, dx, Gouy::Half).map_err(|e| e.to_string())?;
    let ell = 1.6 / spec.k0;
    let half = 2.0 * s.w;
    let st = WignerState::from_field(&field, 2, Some((s.x_c - half - 6.0 * ell, s.x_c + half + 6.0 * ell)));
    let peak = 0.5 * s.a_mag * s.a_mag;
    let mut worst = 0.0f64;
    for i in 0..=40 {
        let x = s.x_c - half + 2.0 * half * i as f64 / 40.0;
        let xi = x - s.x_c;
        let target = peak * (-2.0 * xi * xi / (s.w * s.w)).exp();
        let got = intensity_from_wigner(&st, &[x], ell).map_err(|e| e.to_string())?;
        worst = worst.max((got - target).abs() / peak);
    }
    Ok(worst)
}

/// Criterion 7: mass conservation, mono-kinetic transport and intensity
/// reconstruction.
pub fn wigner_consistency() -> Check {
    let name = "Wigner consistency";
    let run = || -> Result<(f64, f64, f64), String> {
        let model = lens();
        let mut samples = Vec::new();
        for i in 0..12 {
            let x = vec![-3.0, -1.5 + 0.25 * i as f64];
            let k = project_to_shell(&model, &x, &[1.0, 0.05 * i as f64], 0).map_err(|e| e.to_string())?;
            samples.push(WignerSample { k, x, w: 1.0 + 0.1 * i as f64, weight: 0.01 * (1.0 + i as f64) });
        }
        let st = WignerState::new(samples, 1e-9);
        let out = evolve_wigner(&model, &|_, _| 0.0, &st, 3.0, &WignerOptions::default()).map_err(|e| e.to_string())?;
        let mass = (out.mass() - st.mass()).abs() / st.mass();

        let model = DispersionModel::scalar(2, |k, x| {
            &k[0] * &k[0] + &k[1] * &k[1] - 1.0 + ((&x[0] * 0.7).sin() * 0.5 + 1.0) * Complex64::new(0.0, -0.1)
        });
        let (x0, k0) = (vec![0.2, -0.4], vec![0.6, 0.8]);
        let st = WignerState::new(
            vec![WignerSample { k: k0.clone(), x: x0.clone(), w: 2.0, weight: (2.0 * PI).powi(2) }],
            1e-9,
        );
        let ell = 0.5;
        let i0 = intensity_from_wigner(&st, &x0, ell).map_err(|e| e.to_string())?;
        let ray = trace_ray(&model, &x0, &k0, Span::Tau(4.0), &RayOptions::default()).map_err(|e| e.to_string())?;
        let ray = transport_amplitude(&ray, 0.0, |x: &[f64], k: &[f64]| model.gamma(k, x)).map_err(|e| e.to_string())?;
        let out = evolve_wigner(&model, &|_, _| 0.0, &st, 4.0, &WignerOptions::default()).map_err(|e| e.to_string())?;
        let i1 = intensity_from_wigner(&out, &out.samples[0].x, ell).map_err(|e| e.to_string())?;
        let mono = ((i1 / i0) / ray.last().log_a2.exp() - 1.0).abs();

        let mut recon = 0.0f64;
        for (k0w0, t) in [(20.0, 0.0), (20.0, 800.0), (40.0, 1500.0)] {
            recon = recon.max(reconstruction_error(k0w0, t)?);
        }
        Ok((mass, mono, recon))
    };
    match run() {
        Ok((mass, mono, recon)) => Check::new(
            7,
            name,
            mass < 1e-6 && mono < 1e-6 && recon < 0.02,
            format!("mass drift {mass:.1e}, mono-kinetic vs ray transport {mono:.1e}, envelope reconstruction {recon:.2e}"),
        ),
        Err(e) => Check::new(7, name, false, e),
    }
}

/// Largest deviation of the paraxial ODE from the closed form over
/// `[0, t_end]`: relative in `w`, `|Δ(1/R)|·k0·w²`, absolute in `φ`.
pub fn ode_deviation(spec: &TrainSpec, model: &DispersionModel, t_end: f64) -> Result<f64, String> {
    let p = dispersion_params(spec).map_err(|e| e.to_string())?;
    let init = propagate_closed_form(spec, &p, 0.0);
    let ray = trace_ray(model, &[0.0, 0.0], &[spec.k0, -p.omega0], Span::Coordinate { axis: 1, value: t_end }, &RayOptions::default())
        .map_err(|e| e.to_string())?;
    let times: Vec<f64> = (0..=40).map(|i| t_end * i as f64 / 40.0).collect();
    let states =
        propagate_paraxial_ode(model, &ray, &init, &times, &ParaxialOptions::default()).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for s in &states {
        let c = propagate_closed_form(spec, &p, s.t);
        worst = worst
            .max(((s.w - c.w) / c.w).abs())
            .max((s.inv_r - c.inv_r).abs() * spec.k0 * c.w * c.w)
            .max((s.phi - c.phi).abs());
    }
    Ok(worst)
}

/// Criterion 8 over the spreading-scenario span (`w` up to `3w0`).
pub fn paraxial_ode() -> Check {
    let name = "paraxial ODE vs closed form";
    let t_end = 8f64.sqrt() * SPREADING_K0W0 * SPREADING_K0W0 / (2.0 * (1.0 - SPREADING_R) * SPREADING_VG);
    let run = || -> Result<Vec<(&'static str, f64)>, String> {
        let base = |m: RefractiveIndex| TrainSpec::new(1.0, SPREADING_K0W0, 1.0, m, DEFAULT_MIN_K0W0).map_err(|e| e.to_string());
        let spread = base(RefractiveIndex::Vacuum)?.with_overrides(Overrides { r: SPREADING_R, vg_over_vp: SPREADING_VG, vp: 1.0 });
        let pf = dispersion_params(&spread).map_err(|e| e.to_string())?;
        let plasma = base(RefractiveIndex::cold_plasma(1.0).expect("valid"))?;
        let vacuum = base(RefractiveIndex::Vacuum)?;
        Ok(vec![
            ("r = 0.2 overrides", ode_deviation(&spread, &quadratic_model(&pf, 1.0), t_end)?),
            ("cold plasma", ode_deviation(&plasma, &DispersionModel::transverse_wave(plasma.medium.clone()), t_end)?),
            ("vacuum", ode_deviation(&vacuum, &DispersionModel::transverse_wave(RefractiveIndex::Vacuum), t_end)?),
        ])
    };
    match run() {
        Ok(devs) => {
            let worst = devs.iter().map(|d| d.1).fold(0.0, f64::max);
            let shown: Vec<String> = devs.iter().map(|(n, d)| format!("{n} {d:.1e}")).collect();
            Check::new(8, name, worst <= 1e-8, format!("t ≤ {t_end:.1}: {}", shown.join(", ")))
        }
        Err(e) => Check::new(8, name, false, e),
    }
}

/// Criteria 3 to 8, which need no run artifacts.
pub fn library_checks() -> Vec<Check> {
    vec![
        parametrix_closed_forms(),
        product_rule(32, 11),
        intrinsic_gamma(),
        hamiltonian_flow(),
        wigner_consistency(),
        paraxial_ode(),
    ]
}

/// Every criterion, 1 and 2 through the in-process pipeline.
pub fn all_checks() -> Vec<Check> {
    let mut out = vec![closed_form_in_process(), oracle_in_process()];
    out.extend(library_checks());
    out
}
