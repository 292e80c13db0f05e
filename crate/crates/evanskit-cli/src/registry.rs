//! Systems that can be scanned by name.

use std::collections::BTreeMap;

use evanskit::model::{Burgers, Gnl2x2, JinXin, Model, MultidModel};
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    pub doc: &'static str,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SystemEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: Vec<ParamSpec>,
}

fn p(name: &'static str, default: f64, doc: &'static str) -> ParamSpec {
    ParamSpec { name, default, doc }
}

pub fn list_systems() -> Vec<SystemEntry> {
    vec![
        SystemEntry { name: "burgers", summary: "scalar viscous Burgers equation", params: vec![] },
        SystemEntry {
            name: "gnl2x2",
            summary: "genuinely nonlinear 2x2 viscous system f(u) = (u1^2/2, u1 + u2)",
            params: vec![p("b1", 1.0, "viscosity of the first component"), p("b2", 1.0, "viscosity of the second component")],
        },
        SystemEntry {
            name: "jinxin",
            summary: "Jin-Xin relaxation of Burgers",
            params: vec![p("a2", 1.0, "squared relaxation speed"), p("tau", 1.0, "relaxation time"), p("u0", 0.0, "base state")],
        },
        SystemEntry {
            name: "multid-model",
            summary: "two-dimensional Burgers / linearly degenerate model at one transverse frequency",
            params: vec![p("a", 1.0, "speed of the linearly degenerate field"), p("xi2", 0.0, "transverse frequency")],
        },
    ]
}

/// A constructed system; `multid` carries the two-dimensional data when present.
#[derive(Debug, Clone)]
pub struct SystemInstance {
    pub model: Model,
    pub multid: Option<(MultidModel, f64)>,
    pub params: BTreeMap<String, f64>,
}

/// Builds a registered system, filling unspecified parameters with their defaults.
pub fn build_system(name: &str, params: &BTreeMap<String, f64>) -> Result<SystemInstance, CliError> {
    let entry = list_systems().into_iter().find(|e| e.name == name).ok_or_else(|| CliError::UnknownSystem(name.to_string()))?;
    for k in params.keys() {
        if !entry.params.iter().any(|p| p.name == k) {
            return Err(CliError::Config(format!("system {name} has no parameter {k}")));
        }
    }
    let full: BTreeMap<String, f64> =
        entry.params.iter().map(|p| (p.name.to_string(), params.get(p.name).copied().unwrap_or(p.default))).collect();
    let g = |k: &str| full[k];
    let (model, multid) = match name {
        "burgers" => (Model::viscous(Burgers), None),
        "gnl2x2" => (Model::viscous(Gnl2x2 { b: [g("b1"), g("b2")] }), None),
        "jinxin" => (Model::relaxation(JinXin { a2: g("a2"), tau: g("tau"), u0: g("u0") }), None),
        _ => {
            let m = MultidModel { a: g("a"), ..Default::default() };
            (Model::viscous(m), Some((m, g("xi2"))))
        }
    };
    Ok(SystemInstance { model, multid, params: full })
}
