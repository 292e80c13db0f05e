//! The scan pipeline: checks, profile, assembly, winding verdict and certificates.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use evanskit::evalsys::{assemble, assemble_multid_model, symbol_positivity, EigenvalueSystem};
use evanskit::evans::{default_radii, winding_number, Contour, EvansSample, Geometry, Verdict, WindingOptions};
use evanskit::linalg::{c64, C64};
use evanskit::model::{check_hypotheses, HypothesisCheck, HypothesisReport, State};
use evanskit::profile::{burgers_profile, default_half_length, multid_profile, solve_profile, ShockProfile};
use evanskit::reduction::{regime_partition_and_normal_form, Regime};
use evanskit::Error;
use serde::Serialize;

use crate::config::{GeometryKind, ScanConfig};
use crate::registry::{build_system, SystemInstance};
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const CACHE_ENV: &str = "EVANSKIT_CACHE_DIR";

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct EndpointStates {
    pub u_minus: Vec<f64>,
    pub u_plus: Vec<f64>,
    pub v_minus: Option<Vec<f64>>,
    pub v_plus: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ProfileDiagnostics {
    pub eps: f64,
    pub half_length: f64,
    pub points: usize,
    pub endpoint_states: EndpointStates,
    pub tail_rate: f64,
    pub tail_r2: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RegimeEntry {
    pub tag: Regime,
    pub lo: f64,
    pub hi: f64,
    pub lo_hat: f64,
    pub hi_hat: f64,
    pub certificate: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ContourEntry {
    pub geometry: Geometry,
    pub initial_points: usize,
    pub samples: usize,
    pub winding: Option<i64>,
    pub total_phase: Option<f64>,
    /// `min|D| / max|D|` over the samples.
    #[serde(rename = "min_abs_D")]
    pub min_abs_d: Option<f64>,
    pub min_lambda: Option<C64>,
    pub depth: Option<usize>,
    pub closure_defect: Option<f64>,
}

#[derive(Debug, Clone, Serialize, PartialEq, Default)]
pub struct Timings {
    pub profile_s: f64,
    pub winding_s: f64,
    pub certificates_s: f64,
    pub total_s: f64,
    pub profile_from_cache: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub schema_version: u32,
    pub config: ScanConfig,
    pub hypotheses: HypothesisReport,
    pub profile: Option<ProfileDiagnostics>,
    pub regimes: Vec<RegimeEntry>,
    /// Why no certificates were computed, when they were not.
    pub regime_note: Option<String>,
    pub contours: Vec<ContourEntry>,
    pub verdict: Verdict,
    pub error: Option<String>,
    pub timings: Timings,
    #[serde(skip)]
    pub samples: Vec<EvansSample>,
    #[serde(skip)]
    pub profile_data: Option<Arc<ShockProfile>>,
}

impl ScanReport {
    /// `0` stable, `2` unstable, `3` inconclusive or failed.
    pub fn exit_code(&self) -> i32 {
        if self.error.is_some() {
            return 3;
        }
        match self.verdict {
            Verdict::Stable => 0,
            Verdict::Unstable { .. } => 2,
            Verdict::Inconclusive { .. } => 3,
        }
    }
}

/// Directory of cached profiles: `$EVANSKIT_CACHE_DIR`, else `<out>/cache`.
pub fn cache_dir(cfg: &ScanConfig) -> Option<PathBuf> {
    match std::env::var_os(CACHE_ENV) {
        Some(d) if !d.is_empty() => Some(PathBuf::from(d)),
        _ => cfg.output.dir.as_ref().map(|d| d.join("cache")),
    }
}

/// Cache file name keyed by system, parameters, `ε` and `L`.
pub fn cache_file_name(cfg: &ScanConfig, sys: &SystemInstance, half_length: f64) -> String {
    let params: Vec<String> = sys.params.iter().map(|(k, v)| format!("{k}{v:e}")).collect();
    let tag = if params.is_empty() { String::new() } else { format!("-{}", params.join("-")) };
    format!("{}{}-eps{:e}-L{:e}.profile", cfg.system, tag, cfg.eps, half_length)
}

fn check(name: &str, margin: f64) -> HypothesisCheck {
    let passed = margin > 0.0;
    HypothesisCheck { name: name.into(), passed, margin: margin.max(0.0), witness: None }
}

/// The two-dimensional model is checked through its symbol rather than one-dimensional hyperbolicity.
pub fn hypotheses_for(sys: &SystemInstance, eps: f64) -> HypothesisReport {
    match &sys.multid {
        Some((m, _)) => {
            let ends = [State::from_column_slice(&[eps, 0.0]), State::from_column_slice(&[-eps, 0.0])];
            let symbol = ends.iter().map(|u| symbol_positivity(m, u, 256)).fold(f64::INFINITY, f64::min);
            HypothesisReport {
                system: sys.model.name(),
                checks: vec![
                    check("a_positive", m.a),
                    check("b11_normalized", 1.0 - (m.b11[0] - 1.0).abs().min(1.0) - f64::EPSILON),
                    check("symbol_positivity", symbol),
                ],
                genuine_nonlinearity: Some(1.0),
                beta: Some(m.b11[0]),
            }
        }
        None => check_hypotheses(&sys.model),
    }
}

fn half_length_for(sys: &SystemInstance, eps: f64) -> evanskit::Result<f64> {
    match &sys.multid {
        Some((m, _)) => Ok(24.0 * m.b11[0] / eps),
        None => default_half_length(&sys.model, eps),
    }
}

fn fresh_profile(sys: &SystemInstance, eps: f64, l: f64) -> evanskit::Result<ShockProfile> {
    match (&sys.multid, sys.model.name().as_str()) {
        (Some((m, _)), _) => Ok(multid_profile(m, eps, l)),
        (None, "burgers") => Ok(burgers_profile(eps, l)),
        _ => solve_profile(&sys.model, eps, Some(l)),
    }
}

fn load_or_solve(cfg: &ScanConfig, sys: &SystemInstance, l: f64) -> evanskit::Result<(ShockProfile, bool)> {
    if let Some(dir) = cache_dir(cfg) {
        let path = dir.join(cache_file_name(cfg, sys, l));
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(p) = ShockProfile::from_cache_str(&text, &sys.model) {
                return Ok((p, true));
            }
        }
    }
    Ok((fresh_profile(sys, cfg.eps, l)?, false))
}

fn diagnostics(p: &ShockProfile) -> ProfileDiagnostics {
    let v = |s: &evanskit::model::State| s.iter().cloned().collect::<Vec<f64>>();
    ProfileDiagnostics {
        eps: p.eps,
        half_length: p.half_length,
        points: p.points(),
        endpoint_states: EndpointStates {
            u_minus: v(&p.u_minus),
            u_plus: v(&p.u_plus),
            v_minus: p.v_minus.as_ref().map(v),
            v_plus: p.v_plus.as_ref().map(v),
        },
        tail_rate: p.theta_hat,
        tail_r2: p.tail_r2,
        residual: p.residual,
    }
}

fn contour_for(cfg: &ScanConfig, r_min: f64, r_max: f64) -> Contour {
    match cfg.contour.geometry {
        GeometryKind::HalfAnnulus => Contour::half_annulus(r_min, r_max, cfg.contour.points),
        GeometryKind::Rectangle => Contour::rectangle(c64(r_min, -r_max), c64(r_max, r_max), cfg.contour.points),
    }
}

fn not_applicable(e: &Error) -> bool {
    matches!(e, Error::InvalidConfig(_) | Error::WrongFormulation(_))
}

fn certificates(es: &EigenvalueSystem, cfg: &ScanConfig, r_min: f64, r_max: f64) -> (Vec<RegimeEntry>, Option<String>, Option<String>) {
    if !cfg.regimes.enabled {
        return (vec![], Some("disabled".into()), None);
    }
    match regime_partition_and_normal_form(es, cfg.regimes.c, r_min, r_max) {
        Ok(nf) => {
            let entries = nf
                .segments
                .iter()
                .map(|s| {
                    let cert = match s.tag {
                        Regime::I => nf.regime_i.as_ref().and_then(|c| serde_json::to_value(c).ok()),
                        Regime::II => nf.regime_ii.as_ref().and_then(|c| serde_json::to_value(c).ok()),
                        Regime::III => nf.regime_iii.as_ref().and_then(|c| serde_json::to_value(c).ok()),
                    };
                    RegimeEntry { tag: s.tag, lo: s.lo, hi: s.hi, lo_hat: s.lo_hat, hi_hat: s.hi_hat, certificate: cert }
                })
                .collect();
            (entries, None, None)
        }
        Err(e) if not_applicable(&e) => (vec![], Some(format!("not applicable: {e}")), None),
        Err(e) => (vec![], None, Some(format!("certificates: {e}"))),
    }
}

/// Runs the full pipeline; module failures land in `error` and the verdict becomes inconclusive.
pub fn run_scan(cfg: &ScanConfig) -> Result<ScanReport, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let sys = build_system(&cfg.system, &cfg.params)?;
    let hypotheses = hypotheses_for(&sys, cfg.eps);
    let mut report = ScanReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        hypotheses: hypotheses.clone(),
        profile: None,
        regimes: vec![],
        regime_note: None,
        contours: vec![],
        verdict: Verdict::Inconclusive { reason: "not run".into(), lambda: None },
        error: None,
        timings: Timings::default(),
        samples: vec![],
        profile_data: None,
    };
    let fail = |mut r: ScanReport, msg: String| {
        r.verdict = Verdict::Inconclusive { reason: msg.clone(), lambda: None };
        r.error = Some(msg);
        r.timings.total_s = start.elapsed().as_secs_f64();
        r
    };
    if !hypotheses.all_passed() {
        let failed: Vec<&str> = hypotheses.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        return Ok(fail(report, format!("hypotheses failed: {}", failed.join(", "))));
    }

    let t = Instant::now();
    let l = match cfg.domain.half_length {
        Some(l) => l,
        None => match half_length_for(&sys, cfg.eps) {
            Ok(l) => l,
            Err(e) => return Ok(fail(report, format!("profile: {e}"))),
        },
    };
    let (profile, cached) = match load_or_solve(cfg, &sys, l) {
        Ok(p) => p,
        Err(e) => return Ok(fail(report, format!("profile: {e}"))),
    };
    let profile = Arc::new(profile);
    report.timings.profile_s = t.elapsed().as_secs_f64();
    report.timings.profile_from_cache = cached;
    report.profile = Some(diagnostics(&profile));
    report.profile_data = Some(profile.clone());

    let es = match &sys.multid {
        Some((m, xi2)) => assemble_multid_model(profile.clone(), *m, *xi2),
        None => assemble(profile.clone(), &sys.model),
    };
    let es = match es {
        Ok(es) => es,
        Err(e) => return Ok(fail(report, format!("assembly: {e}"))),
    };

    let (dr_min, dr_max) = default_radii(&es, cfg.eps);
    let r_min = cfg.contour.rmin.unwrap_or(dr_min);
    let r_max = cfg.contour.rmax.unwrap_or(dr_max);
    if !(r_min < r_max) {
        return Ok(fail(report, format!("empty contour annulus: r_min = {r_min}, R_max = {r_max}")));
    }
    let contour = contour_for(cfg, r_min, r_max);
    let opts = WindingOptions { tol: cfg.tolerances.ode, zero_floor: cfg.tolerances.zero_floor, jobs: cfg.output.jobs, ..Default::default() };
    let t = Instant::now();
    let mut entry = ContourEntry {
        geometry: contour.geometry,
        initial_points: contour.points.len(),
        samples: 0,
        winding: None,
        total_phase: None,
        min_abs_d: None,
        min_lambda: None,
        depth: None,
        closure_defect: None,
    };
    report.verdict = match winding_number(&es, &contour, &opts) {
        Ok(w) => {
            entry.samples = w.samples.len();
            entry.winding = Some(w.winding);
            entry.total_phase = Some(w.total_phase);
            entry.min_abs_d = Some(w.min_rel_abs);
            entry.min_lambda = Some(w.min_lambda);
            entry.depth = Some(w.depth);
            entry.closure_defect = Some(w.closure_defect);
            let v = if w.closure_defect > cfg.tolerances.frame {
                Verdict::Inconclusive { reason: format!("frame closure defect {:e}", w.closure_defect), lambda: None }
            } else {
                match w.winding {
                    0 => Verdict::Stable,
                    k if k > 0 => Verdict::Unstable { count: k },
                    k => Verdict::Inconclusive { reason: format!("negative winding {k}"), lambda: None },
                }
            };
            report.samples = w.samples;
            v
        }
        Err(Error::ZeroOnContour(l)) => Verdict::Inconclusive { reason: "near-zero of D on the contour".into(), lambda: Some(l) },
        Err(e) => Verdict::Inconclusive { reason: e.to_string(), lambda: None },
    };
    report.contours.push(entry);
    report.timings.winding_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let (regimes, note, err) = certificates(&es, cfg, r_min, r_max);
    report.regimes = regimes;
    report.regime_note = note;
    report.error = err;
    report.timings.certificates_s = t.elapsed().as_secs_f64();
    report.timings.total_s = start.elapsed().as_secs_f64();
    Ok(report)
}
