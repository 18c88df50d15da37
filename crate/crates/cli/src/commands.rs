use crate::config::RunConfig;
use crate::output::{num, opt, Table};
use crate::CliError;
use anisoweight::ineq::{
    dilation_invariance_check, poincare_mixed_ratio, poincare_weighted_ratio, random_family, sobolev_ratio, Ratio,
};
use anisoweight::muckenhoupt::{
    adversarial_family, ap_scan, doubling_scan, BallFamily, CenterKind, ProbeConfig, ScanReport,
};
use anisoweight::plap::{
    build_mesh, decay_fit, holder_modulus, linf_check, oscillation_profile, solve, BoundaryDatum, DecayFit,
    DiscreteField, HolderReport, LinfCheck, MeshMode, MeshQuality, OscillationProfile, ProblemSpec, ScalarField,
    SolveReport, SolverConfig,
};
use anisoweight::quad::{integrate_weight, mu_scaling_exponent, Ball, QuadConfig, QuadResult, Region, ScalingFit};
use anisoweight::weights::{classify, RegionReport};
use anisoweight::{Error, ProbeExponents, WeightParams};
use serde::Serialize;
use std::sync::Arc;

/// A finished analysis: the JSON result, its CSV table and, when the analysis
/// reached a negative verdict, the reason.
pub struct Outcome {
    pub result: serde_json::Value,
    pub table: Table,
    pub failure: Option<String>,
}

impl Outcome {
    fn new(result: &impl Serialize, table: Table, failure: Option<String>) -> Result<Self, CliError> {
        let result = serde_json::to_value(result).map_err(|e| CliError::Analysis(e.to_string()))?;
        Ok(Self { result, table, failure })
    }
}

/// Library errors caused by bad input are usage errors; the rest are analysis failures.
impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::DimensionMismatch { .. } | Error::Supercritical { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Analysis(e.to_string()),
        }
    }
}

fn params(cfg: &RunConfig) -> Result<WeightParams, CliError> {
    Ok(WeightParams::new(cfg.theta()?, cfg.n()?)?)
}

fn quad(cfg: &RunConfig) -> Result<QuadConfig, CliError> {
    let q = QuadConfig {
        seed: cfg.seed.unwrap_or(0),
        ..QuadConfig::default().with_rel_tol(cfg.tol.unwrap_or(1e-8))
    };
    q.validate()?;
    Ok(q)
}

fn verdict(cfg: &RunConfig, ok: bool, why: impl FnOnce() -> String) -> Option<String> {
    (cfg.require.unwrap_or(false) && !ok).then(why)
}

pub fn classify_cmd(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let w = params(cfg)?;
    let mut probes = ProbeExponents::new(cfg.p()?);
    probes.q = cfg.q;
    probes.p0 = cfg.p0;
    probes.m = cfg.m;
    probes.validate(&w)?;
    let rep: RegionReport = classify(&w, &probes);
    let mut t = Table::new(&["flag", "holds", "violated"]);
    let violated = |flag: &str| {
        rep.witness
            .iter()
            .filter(|x| x.flag == flag)
            .flat_map(|x| x.violated.iter().map(|c| c.to_string()))
            .collect::<Vec<_>>()
            .join("; ")
    };
    let mut flags = vec![("radon".to_string(), Some(rep.is_radon)), ("doubling".into(), Some(rep.is_doubling))];
    flags.extend(rep.ap.iter().map(|e| (format!("ap[{}]", e.p), Some(e.holds))));
    flags.push(("sobolev".into(), rep.sobolev_admissible));
    flags.push(("poincare_mixed".into(), rep.poincare_mixed_admissible));
    let mut all = true;
    for (flag, holds) in flags {
        let Some(h) = holds else { continue };
        all &= h;
        t.push(vec![flag.clone(), h.to_string(), violated(&flag)]);
    }
    let failure = verdict(cfg, all, || "some region flags fail".into());
    Outcome::new(&rep, t, failure)
}

#[derive(Serialize)]
struct MeasureResult {
    radius: f64,
    half: bool,
    measure: QuadResult,
    scaling: Option<ScalingFit>,
    expected_slope: f64,
}

pub fn measure_cmd(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let w = params(cfg)?;
    let q = quad(cfg)?;
    let radius = cfg.radius.unwrap_or(1.0);
    let half = cfg.half.unwrap_or(false);
    let mut ball = Ball::centered(w.n, radius);
    if half {
        ball = ball.half();
    }
    let measure = integrate_weight(&w, &Region::Ball(ball), &q)?;
    let mut t = Table::new(&["radius", "measure"]);
    t.push(vec![num(radius), num(measure.value)]);
    let scaling = if cfg.fit_scaling.unwrap_or(false) {
        let fit = mu_scaling_exponent(
            &w,
            cfg.r_min.unwrap_or(1e-2),
            cfg.r_max.unwrap_or(1e2),
            cfg.num_radii.unwrap_or(9),
            &q,
        )?;
        t.rows.clear();
        for (r, m) in fit.radii.iter().zip(&fit.measures) {
            t.push(vec![num(*r), num(*m)]);
        }
        Some(fit)
    } else {
        None
    };
    let expected = w.homogeneous_dim();
    let ok = measure.converged && scaling.as_ref().is_none_or(|f| (f.slope - expected).abs() <= 1e-2);
    let failure = verdict(cfg, ok, || "quadrature did not converge or slope is off n+Σθ".into());
    let res = MeasureResult {
        radius,
        half,
        measure,
        scaling,
        expected_slope: expected,
    };
    Outcome::new(&res, t, failure)
}

fn scan_table(rep: &ScanReport, kinds: &[String]) -> Table {
    let mut t = Table::new(&["index", "kind", "radius", "center", "value", "coarse", "error"]);
    for (i, r) in rep.results.iter().enumerate() {
        t.push(vec![
            i.to_string(),
            kinds[i].clone(),
            num(r.radius),
            r.center.iter().map(|&c| num(c)).collect::<Vec<_>>().join(";"),
            num(r.value),
            num(r.coarse),
            r.error.clone().unwrap_or_default(),
        ]);
    }
    t
}

#[derive(Serialize)]
struct ScanResult {
    family: String,
    report: ScanReport,
    /// max/median over finite values
    spread: Option<f64>,
}

fn family(cfg: &RunConfig, w: &WeightParams) -> Result<(BallFamily, Vec<String>), CliError> {
    let fam = adversarial_family(
        w,
        cfg.count.unwrap_or(200),
        cfg.r_min.unwrap_or(1e-2),
        cfg.r_max.unwrap_or(1e1),
        cfg.seed.unwrap_or(0),
    )?;
    let kinds = fam
        .kinds
        .iter()
        .map(|k| match *k {
            CenterKind::Origin => "origin".to_string(),
            CenterKind::Axis { f } => format!("axis:{f}"),
            CenterKind::Plane { g } => format!("plane:{g}"),
            CenterKind::Generic { f, g } => format!("generic:{f}:{g}"),
        })
        .collect();
    Ok((fam, kinds))
}

fn spread(rep: &ScanReport) -> Option<f64> {
    let mut v: Vec<f64> = rep.results.iter().map(|r| r.value).filter(|v| v.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let med = if v.len() % 2 == 1 {
        v[v.len() / 2]
    } else {
        0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
    };
    Some(v[v.len() - 1] / med)
}

pub fn ap_scan_cmd(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let w = params(cfg)?;
    let p = cfg.p()?;
    let q = quad(cfg)?;
    let (fam, kinds) = family(cfg, &w)?;
    let probe = ProbeConfig {
        levels: cfg.levels.unwrap_or(ProbeConfig::default().levels),
        ..ProbeConfig::default()
    };
    let rep = ap_scan(&w, p, &fam, &probe, &q)?;
    let t = scan_table(&rep, &kinds);
    let ok = !rep.diverged && rep.sup.is_finite() && rep.faults.is_empty();
    let failure = verdict(cfg, ok, || format!("A_{p} quotient unbounded (sup {})", rep.sup));
    let res = ScanResult {
        family: fam.description,
        spread: spread(&rep),
        report: rep,
    };
    Outcome::new(&res, t, failure)
}

pub fn doubling_scan_cmd(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let w = params(cfg)?;
    let q = quad(cfg)?;
    let (fam, kinds) = family(cfg, &w)?;
    let rep = doubling_scan(&w, &fam, &q)?;
    let t = scan_table(&rep, &kinds);
    let ok = rep.sup.is_finite() && rep.faults.is_empty();
    let failure = verdict(cfg, ok, || "doubling ratios unbounded or below 1".into());
    let res = ScanResult {
        family: fam.description,
        spread: spread(&rep),
        report: rep,
    };
    Outcome::new(&res, t, failure)
}

#[derive(Serialize)]
struct IneqRow {
    sobolev: Option<f64>,
    poincare: Option<f64>,
    mixed: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct IneqResult {
    p_tilde: f64,
    rows: Vec<IneqRow>,
    dilation: Option<anisoweight::ineq::DilationReport>,
    dilation_error: Option<String>,
    sobolev_max: Option<f64>,
    poincare_max: Option<f64>,
    mixed_max: Option<f64>,
}

pub fn ineq_cmd(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let w = params(cfg)?;
    let p = cfg.p()?;
    let q = quad(cfg)?;
    let pt = cfg.p_tilde.unwrap_or(0.5 * (1.0 + p));
    let fam = random_family(w.n, cfg.count.unwrap_or(50), cfg.seed.unwrap_or(0));
    let ball = Ball::centered(w.n, 1.0);
    let value = |r: anisoweight::Result<anisoweight::ineq::IneqReport>| r.map(|r| r.ratio);
    let mut rows = Vec::new();
    let mut t = Table::new(&["index", "sobolev", "poincare", "mixed", "error"]);
    let mut all_finite = true;
    for (i, u) in fam.iter().enumerate() {
        let mut errs = Vec::new();
        let mut take = |r: anisoweight::Result<Ratio>| match r {
            Ok(Ratio::Value(v)) => Some(v),
            Ok(other) => {
                errs.push(format!("{other:?}"));
                None
            }
            Err(e) => {
                errs.push(e.to_string());
                None
            }
        };
        let s = take(value(sobolev_ratio(&w, p, u, &ball, &q)));
        let pw = take(value(poincare_weighted_ratio(&w, pt, u, &ball, &q)));
        let mx = cfg.p0.and_then(|p0| take(value(poincare_mixed_ratio(&w, p0, u, 1.0, &q))));
        let error = (!errs.is_empty()).then(|| errs.join("; "));
        all_finite &= error.is_none();
        t.push(vec![i.to_string(), opt(s), opt(pw), opt(mx), error.clone().unwrap_or_default()]);
        rows.push(IneqRow {
            sobolev: s,
            poincare: pw,
            mixed: mx,
            error,
        });
    }
    let (dilation, dilation_error) = match fam
        .first()
        .map(|u| dilation_invariance_check(&w, p, None, u, &[0.25, 0.5, 1.0, 2.0], &q))
    {
        Some(Ok(d)) => (Some(d), None),
        Some(Err(e)) => (None, Some(e.to_string())),
        None => (None, None),
    };
    let max = |f: fn(&IneqRow) -> Option<f64>| rows.iter().filter_map(f).reduce(f64::max);
    let res = IneqResult {
        p_tilde: pt,
        sobolev_max: max(|r| r.sobolev),
        poincare_max: max(|r| r.poincare),
        mixed_max: max(|r| r.mixed),
        rows,
        dilation,
        dilation_error,
    };
    let failure = verdict(cfg, all_finite, || "some ratios are not finite".into());
    Outcome::new(&res, t, failure)
}

fn mode(n: usize) -> MeshMode {
    if n == 2 {
        MeshMode::Planar
    } else {
        MeshMode::Axisymmetric { n }
    }
}

fn problem(cfg: &RunConfig) -> Result<ProblemSpec, CliError> {
    let w = params(cfg)?;
    let mut spec = ProblemSpec::new(w, cfg.p()?)
        .with_phi0(cfg.phi0.clone().unwrap_or(BoundaryDatum::Zero))
        .with_radius(cfg.radius.unwrap_or(1.0));
    if let Some(m) = cfg.m {
        spec = spec.with_m(m);
    }
    if let Some(f) = &cfg.f0 {
        spec = spec.with_f0(f.clone());
    }
    if let Some(f) = &cfg.f1 {
        spec = spec.with_f1(f.clone());
    }
    Ok(spec)
}

fn solver_config(cfg: &RunConfig) -> Result<SolverConfig, CliError> {
    Ok(SolverConfig {
        tol: cfg.solver_tol.unwrap_or(SolverConfig::default().tol),
        quad: quad(cfg)?,
        ..SolverConfig::default()
    })
}

fn mesh_sizes(cfg: &RunConfig) -> Vec<f64> {
    let h = cfg.h.unwrap_or(0.05);
    (0..=cfg.refinements.unwrap_or(0)).map(|k| h * 0.5f64.powi(k as i32)).collect()
}

#[derive(Serialize)]
struct MeshSummary {
    h: f64,
    grading: f64,
    singular_depth: usize,
    vertices: usize,
    cells: usize,
    quality: MeshQuality,
}

fn solve_at(cfg: &RunConfig, spec: &ProblemSpec, h: f64) -> Result<(DiscreteField, SolveReport, MeshSummary), CliError> {
    let grading = cfg.grading.unwrap_or(2.0);
    let depth = cfg.depth.unwrap_or(4);
    let mut mesh = build_mesh(mode(spec.params.n), h, grading, depth)?;
    if spec.domain_radius != 1.0 {
        mesh = mesh.scaled(spec.domain_radius)?;
    }
    let summary = MeshSummary {
        h,
        grading,
        singular_depth: depth,
        vertices: mesh.vertex_count(),
        cells: mesh.cell_count(),
        quality: mesh.quality(),
    };
    let (field, report) = solve(spec, Arc::new(mesh), &solver_config(cfg)?)?;
    Ok((field, report, summary))
}

#[derive(Serialize)]
struct SolveResult {
    mesh: MeshSummary,
    report: SolveReport,
    linf: LinfCheck,
}

pub fn solve_cmd(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = problem(cfg)?;
    let h = *mesh_sizes(cfg).last().unwrap();
    let (field, report, mesh) = solve_at(cfg, &spec, h)?;
    if let Some(path) = &cfg.field_out {
        std::fs::write(path, field.to_json()?)
            .map_err(|e| CliError::Analysis(format!("cannot write {}: {e}", path.display())))?;
    }
    let mut t = Table::new(&["step", "stage", "epsilon", "kind", "energy"]);
    for (i, s) in report.trajectory.iter().enumerate() {
        t.push(vec![
            i.to_string(),
            s.stage.to_string(),
            num(s.epsilon),
            format!("{:?}", s.kind).to_lowercase(),
            num(s.energy),
        ]);
    }
    // non-convergence is always an analysis failure
    let failure = (!report.converged).then(|| format!("solver did not converge: residual {:e}", report.residual));
    let res = SolveResult {
        linf: linf_check(&field, &spec, &report),
        mesh,
        report,
    };
    Outcome::new(&res, t, failure)
}

#[derive(Serialize)]
struct DecayLevel {
    h: Option<f64>,
    vertices: usize,
    fit: Option<DecayFit>,
    fit_error: Option<String>,
    oscillation: Option<OscillationProfile>,
    holder: Option<HolderReport>,
    /// Manufactured preset only.
    max_error: Option<f64>,
    order: Option<f64>,
    peak: Option<f64>,
}

#[derive(Serialize)]
struct DecayResult {
    levels: Vec<DecayLevel>,
    min_order: Option<f64>,
    verdict: bool,
}

fn analyse(cfg: &RunConfig, field: &DiscreteField) -> Result<DecayLevel, CliError> {
    let (a, b) = (cfg.fit_min.unwrap_or(1e-3), cfg.fit_max.unwrap_or(0.1));
    let (fit, fit_error) = match decay_fit(field, a, b) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let radii: Vec<f64> = (0..10)
        .map(|k| 0.5 * field.domain_radius() * 0.5f64.powi(k))
        .filter(|&r| r >= field.resolution())
        .collect();
    let oscillation = if radii.is_empty() {
        None
    } else {
        Some(oscillation_profile(field, &radii)?)
    };
    let holder = match cfg.holder {
        Some(e) => Some(holder_modulus(field, e, cfg.pairs.unwrap_or(2000), cfg.seed.unwrap_or(0))?),
        None => None,
    };
    Ok(DecayLevel {
        h: None,
        vertices: field.mesh.vertex_count(),
        fit,
        fit_error,
        oscillation,
        holder,
        max_error: None,
        order: None,
        peak: None,
    })
}

pub fn decay_cmd(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let manufactured = cfg.preset.as_deref() == Some("manufactured-p2");
    let mut levels = Vec::new();
    if let Some(path) = &cfg.field {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        levels.push(analyse(cfg, &DiscreteField::from_json(&text)?)?);
    } else {
        let spec = problem(cfg)?;
        let mut prev: Option<f64> = None;
        for h in mesh_sizes(cfg) {
            let (field, report, _) = solve_at(cfg, &spec, h)?;
            report.ensure_converged()?;
            let mut lv = analyse(cfg, &field)?;
            lv.h = Some(h);
            if manufactured {
                let err = field
                    .mesh
                    .vertices
                    .iter()
                    .zip(&field.values)
                    .map(|(x, u)| (u - x[1] * (1.0 - x[0] * x[0] - x[1] * x[1])).abs())
                    .fold(0.0, f64::max);
                lv.order = prev.map(|e| (e / err).log2());
                lv.max_error = Some(err);
                lv.peak = Some(field.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
                prev = Some(err);
            }
            levels.push(lv);
        }
    }
    let mut t = Table::new(&["level", "h", "vertices", "alpha", "fit_residual", "max_error", "order", "peak"]);
    for (i, l) in levels.iter().enumerate() {
        t.push(vec![
            i.to_string(),
            opt(l.h),
            l.vertices.to_string(),
            opt(l.fit.as_ref().map(|f| f.alpha)),
            opt(l.fit.as_ref().map(|f| f.residual)),
            opt(l.max_error),
            opt(l.order),
            opt(l.peak),
        ]);
    }
    let min_order = levels.iter().filter_map(|l| l.order).reduce(f64::min);
    let last = levels.last().unwrap();
    let ok = if manufactured {
        let peak = 2.0 / (3.0 * 3f64.sqrt());
        min_order.is_some_and(|o| o >= 1.8) && last.peak.is_some_and(|v| ((v - peak) / peak).abs() <= 0.01)
    } else {
        last.fit.as_ref().is_some_and(|f| f.in_window)
    };
    let failure = verdict(cfg, ok, || {
        if manufactured {
            format!("convergence order {min_order:?} below 1.8 or peak off by more than 1%")
        } else {
            "decay exponent missing or outside (0, 1.5)".into()
        }
    });
    Outcome::new(&DecayResult { levels, min_order, verdict: ok }, t, failure)
}
