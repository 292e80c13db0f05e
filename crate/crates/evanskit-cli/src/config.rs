//! Scan configuration: a TOML file with command-line overrides.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::registry::list_systems;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryKind {
    /// Boundary of `{Re λ ≥ 0, r_min ≤ |λ| ≤ R_max}`.
    #[default]
    HalfAnnulus,
    /// Rectangle `[r_min, R_max] × [−R_max, R_max]`.
    Rectangle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourSpec {
    #[serde(default)]
    pub geometry: GeometryKind,
    /// Defaults to `10⁻³ min(1, ε)²`.
    pub rmin: Option<f64>,
    /// Defaults to `10(1 + sup‖𝔸(x, 1)‖²)`.
    pub rmax: Option<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    256
}

impl Default for ContourSpec {
    fn default() -> Self {
        ContourSpec { geometry: GeometryKind::HalfAnnulus, rmin: None, rmax: None, points: default_points() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    /// Half-length of the computational domain; defaults to `24β/(|Λ|ε)`.
    #[serde(rename = "L")]
    pub half_length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub ode: f64,
    /// Largest accepted frame closure defect around the contour.
    pub frame: f64,
    /// Relative floor on `min|D| / max|D|`.
    pub zero_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { ode: 1e-9, frame: 1e-6, zero_floor: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegimeSpec {
    pub enabled: bool,
    pub c: f64,
}

impl Default for RegimeSpec {
    fn default() -> Self {
        RegimeSpec { enabled: true, c: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    /// Worker threads; unset means all cores.
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub system: String,
    pub eps: f64,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub contour: ContourSpec,
    #[serde(default)]
    pub domain: DomainSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub regimes: RegimeSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Command-line values that replace configuration keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub system: Option<String>,
    pub eps: Option<f64>,
    pub contour: Option<String>,
    pub rmin: Option<f64>,
    pub rmax: Option<f64>,
    pub points: Option<usize>,
    pub domain_l: Option<f64>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

fn set(root: &mut toml::Table, path: &[&str], value: toml::Value) {
    let mut t = root;
    for key in &path[..path.len() - 1] {
        let entry = t.entry(key.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        if !entry.is_table() {
            *entry = toml::Value::Table(toml::Table::new());
        }
        t = entry.as_table_mut().unwrap();
    }
    t.insert(path[path.len() - 1].to_string(), value);
}

impl ScanConfig {
    pub fn new(system: &str, eps: f64) -> Self {
        ScanConfig {
            system: system.into(),
            eps,
            params: BTreeMap::new(),
            contour: ContourSpec::default(),
            domain: DomainSpec::default(),
            tolerances: Tolerances::default(),
            regimes: RegimeSpec::default(),
            output: OutputSpec::default(),
        }
    }

    /// Parses `text` (may be empty), applies `ov`, then validates.
    pub fn from_sources(text: Option<&str>, ov: &Overrides) -> Result<ScanConfig, CliError> {
        let mut root: toml::Table = match text {
            Some(t) => t.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?,
            None => toml::Table::new(),
        };
        let v = |x: f64| toml::Value::Float(x);
        if let Some(s) = &ov.system {
            set(&mut root, &["system"], toml::Value::String(s.clone()));
        }
        if let Some(x) = ov.eps {
            set(&mut root, &["eps"], v(x));
        }
        if let Some(g) = &ov.contour {
            set(&mut root, &["contour", "geometry"], toml::Value::String(g.clone()));
        }
        if let Some(x) = ov.rmin {
            set(&mut root, &["contour", "rmin"], v(x));
        }
        if let Some(x) = ov.rmax {
            set(&mut root, &["contour", "rmax"], v(x));
        }
        if let Some(n) = ov.points {
            set(&mut root, &["contour", "points"], toml::Value::Integer(n as i64));
        }
        if let Some(x) = ov.domain_l {
            set(&mut root, &["domain", "L"], v(x));
        }
        if let Some(x) = ov.tol {
            set(&mut root, &["tolerances", "ode"], v(x));
        }
        if let Some(p) = &ov.out {
            set(&mut root, &["output", "dir"], toml::Value::String(p.to_string_lossy().into_owned()));
        }
        if let Some(j) = ov.jobs {
            set(&mut root, &["output", "jobs"], toml::Value::Integer(j as i64));
        }
        // integers are accepted where floats are expected
        for key in ["eps"] {
            if let Some(toml::Value::Integer(i)) = root.get(key) {
                let f = *i as f64;
                root.insert(key.into(), v(f));
            }
        }
        let cfg: ScanConfig = toml::Value::Table(root).try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !list_systems().iter().any(|e| e.name == self.system) {
            return Err(CliError::UnknownSystem(self.system.clone()));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        let t = &self.tolerances;
        if !(t.ode > 0.0 && t.frame > 0.0 && t.zero_floor > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if let (Some(a), Some(b)) = (self.contour.rmin, self.contour.rmax) {
            if !(a < b) {
                return bad(format!("need rmin < rmax, got {a} and {b}"));
            }
        }
        if self.contour.rmin.is_some_and(|r| !(r > 0.0)) || self.contour.rmax.is_some_and(|r| !(r > 0.0)) {
            return bad("contour radii must be positive".into());
        }
        if self.contour.points < 16 {
            return bad("at least 16 contour points are needed".into());
        }
        if self.domain.half_length.is_some_and(|l| !(l > 0.0)) {
            return bad("domain half-length must be positive".into());
        }
        if self.output.jobs == Some(0) {
            return bad("jobs must be at least 1".into());
        }
        if !(self.regimes.c > 0.0) {
            return bad("regime constant must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let text = "system = \"gnl2x2\"\neps = 0.1\n[contour]\npoints = 64\nrmax = 5.0\n[params]\nb1 = 2.0\n";
        let ov = Overrides { eps: Some(0.05), points: Some(128), domain_l: Some(300.0), ..Default::default() };
        let c = ScanConfig::from_sources(Some(text), &ov).unwrap();
        assert_eq!(c.eps, 0.05);
        assert_eq!(c.contour.points, 128);
        assert_eq!(c.contour.rmax, Some(5.0));
        assert_eq!(c.domain.half_length, Some(300.0));
        assert_eq!(c.params["b1"], 2.0);
    }

    #[test]
    fn flags_alone_suffice() {
        let ov = Overrides { system: Some("burgers".into()), eps: Some(1.0), contour: Some("rectangle".into()), ..Default::default() };
        let c = ScanConfig::from_sources(None, &ov).unwrap();
        assert_eq!(c.contour.geometry, GeometryKind::Rectangle);
        assert_eq!(c.tolerances, Tolerances::default());
    }

    #[test]
    fn invalid_configs() {
        let ov = Overrides::default();
        assert!(matches!(ScanConfig::from_sources(Some("system = \"kdv\"\neps = 1.0"), &ov), Err(CliError::UnknownSystem(_))));
        for text in [
            "system = \"burgers\"\neps = -1.0",
            "system = \"burgers\"\neps = 1.0\n[tolerances]\node = 0.0\nframe = 1e-6\nzero_floor = 1e-8",
            "system = \"burgers\"\neps = 1.0\n[contour]\nrmin = 2.0\nrmax = 1.0",
            "system = \"burgers\"\neps = 1.0\ncolour = 1",
            "system = \"burgers\"",
        ] {
            assert!(matches!(ScanConfig::from_sources(Some(text), &ov), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn partial_tables_keep_defaults() {
        let text = "system = \"burgers\"\neps = 1.0\n[tolerances]\nzero_floor = 1e-6\n[regimes]\nc = 6.0\n";
        let c = ScanConfig::from_sources(Some(text), &Overrides { tol: Some(1e-10), ..Default::default() }).unwrap();
        assert_eq!(c.tolerances, Tolerances { ode: 1e-10, frame: 1e-6, zero_floor: 1e-6 });
        assert_eq!(c.regimes, RegimeSpec { enabled: true, c: 6.0 });
    }

    #[test]
    fn integer_eps_is_accepted() {
        let c = ScanConfig::from_sources(Some("system = \"burgers\"\neps = 1"), &Overrides::default()).unwrap();
        assert_eq!(c.eps, 1.0);
    }
}
