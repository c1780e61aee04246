//! Experiment configuration: TOML schema, `--set` overrides and validation.

use prethermal::heating_lab::EnvelopeKind;
use prethermal::lieb_robinson::BoundKind;
use prethermal::{Boundary, Lattice, Pauli, PauliString};
use serde::{Deserialize, Serialize};
use std::fmt;

pub const SCHEMA_VERSION: u32 = 1;

/// A schema violation, with the dotted path of the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl SchemaError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for SchemaError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub lattice: LatticeSection,
    #[serde(default)]
    pub hamiltonian: HamiltonianSection,
    #[serde(default)]
    pub drive: DriveSection,
    #[serde(default)]
    pub magnus: MagnusSection,
    #[serde(default)]
    pub lr: LrSection,
    #[serde(default)]
    pub response: ResponseSection,
    #[serde(default)]
    pub heating: HeatingSection,
    #[serde(default)]
    pub delta: DeltaSection,
    #[serde(default)]
    pub lemmas: LemmasSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryName {
    Open,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeSection {
    pub extents: Vec<usize>,
    pub boundary: BoundaryName,
}

impl Default for LatticeSection {
    fn default() -> Self {
        Self { extents: vec![8], boundary: BoundaryName::Open }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    PowerlawIsing,
    Terms,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    /// Pauli string such as `"Z0 Z1"`.
    pub string: String,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HamiltonianSection {
    pub family: Family,
    /// Decay exponent of the family and of the power-law class used by every bound.
    pub alpha: f64,
    pub j: f64,
    pub hx: f64,
    pub hz: f64,
    pub terms: Vec<Term>,
}

impl Default for HamiltonianSection {
    fn default() -> Self {
        Self { family: Family::PowerlawIsing, alpha: 3.0, j: 1.0, hx: 0.5, hz: 0.5, terms: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveSection {
    /// Amplitude of `g cos(ωt) Σ_i P_i`.
    pub g: f64,
    /// Frequencies of the heating scan.
    pub omegas: Vec<f64>,
    /// Pauli letter `P` of the uniform drive.
    pub operator: String,
}

impl Default for DriveSection {
    fn default() -> Self {
        Self { g: 0.5, omegas: vec![4.0, 5.0, 6.0, 7.0, 8.0, 9.0], operator: "X".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MagnusSection {
    pub periods: Vec<f64>,
    /// `0` selects the order from `ω_*`.
    pub q_max: usize,
    pub report_orders: usize,
    pub kappa: f64,
    pub c: f64,
    pub residual_samples: usize,
}

impl Default for MagnusSection {
    fn default() -> Self {
        Self { periods: vec![0.2, 0.1, 0.05], q_max: 3, report_orders: 5, kappa: 1.0, c: 10.0, residual_samples: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LrSection {
    /// Bound kinds to evaluate; empty means every applicable kind.
    pub kinds: Vec<String>,
    pub include_conjectural: bool,
    pub a_site: usize,
    pub b_sites: Vec<usize>,
    pub operator: String,
    pub t_max: f64,
    pub dt: f64,
    pub mu: f64,
    pub xi: f64,
    pub sigma: Option<f64>,
    pub beta_cone: f64,
    pub conjectured_c: f64,
}

impl Default for LrSection {
    fn default() -> Self {
        Self {
            kinds: Vec::new(),
            include_conjectural: false,
            a_site: 0,
            b_sites: (3..=7).collect(),
            operator: "X".into(),
            t_max: 3.0,
            dt: 0.1,
            mu: 0.5,
            xi: 0.5,
            sigma: None,
            beta_cone: 1.0,
            conjectured_c: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResponseSection {
    pub beta: f64,
    pub lo: f64,
    pub hi: f64,
    pub delta_omega: f64,
    pub k_max: usize,
    /// Sites carrying `O_i`; empty means every site.
    pub sites: Vec<usize>,
    pub operator: String,
}

impl Default for ResponseSection {
    fn default() -> Self {
        Self { beta: 1.0, lo: -14.0, hi: 14.0, delta_omega: 0.5, k_max: 10, sites: Vec::new(), operator: "X".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatingSection {
    pub beta: f64,
    pub n_periods: usize,
    pub fraction: f64,
}

impl Default for HeatingSection {
    fn default() -> Self {
        Self { beta: 1.0, n_periods: 2000, fraction: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeltaSection {
    pub period: f64,
    pub n_periods: usize,
    pub site: usize,
    pub operator: String,
    pub threshold: f64,
    pub kinds: Vec<String>,
    pub sigma: Option<f64>,
    pub beta_cone: f64,
}

impl Default for DeltaSection {
    fn default() -> Self {
        Self {
            period: 0.2,
            n_periods: 500,
            site: 0,
            operator: "X".into(),
            threshold: 1e-3,
            kinds: vec!["gong".into(), "else".into(), "conjectured".into()],
            sigma: None,
            beta_cone: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LemmasSection {
    pub q_max: usize,
    pub q0_max: usize,
    pub closure_cases: usize,
    /// Adds the incomplete-gamma step rows, some of which fail.
    pub include_inner: bool,
}

impl Default for LemmasSection {
    fn default() -> Self {
        Self { q_max: 12, q0_max: 30, closure_cases: 100, include_inner: false }
    }
}

/// Applies `key=value` to a parsed document; the value is read as a TOML value, else as a string.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<(), SchemaError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| SchemaError::new("--set", format!("expected key=value, got '{assignment}'")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(SchemaError::new("--set", format!("malformed key '{key}'")));
    }
    let value = parse_value(raw.trim());
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("nonempty key");
    let mut table = doc;
    let mut walked = String::new();
    for p in parts {
        if !walked.is_empty() {
            walked.push('.');
        }
        walked.push_str(p);
        let entry = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| SchemaError::new(walked.clone(), "is not a table"))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Parses, applies overrides, deserializes and validates.
pub fn load(text: &str, overrides: &[String]) -> Result<ExperimentConfig, SchemaError> {
    let mut doc: toml::Table =
        text.parse().map_err(|e: toml::de::Error| SchemaError::new("", e.message().to_string()))?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(toml::Value::Table(doc)).map_err(|e| {
        let path = e.path().to_string();
        SchemaError::new(path, e.into_inner().message().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn positive(path: &str, x: f64) -> Result<(), SchemaError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(SchemaError::new(path, format!("must be positive and finite, got {x}")))
    }
}

fn finite(path: &str, x: f64) -> Result<(), SchemaError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(SchemaError::new(path, format!("must be finite, got {x}")))
    }
}

pub fn parse_pauli(path: &str, s: &str) -> Result<Pauli, SchemaError> {
    let mut chars = s.chars();
    match (chars.next().and_then(Pauli::from_char), chars.next()) {
        (Some(p), None) => Ok(p),
        _ => Err(SchemaError::new(path, format!("expected one of X, Y, Z, got '{s}'"))),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), SchemaError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(SchemaError::new(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        let n = self.lattice()?.num_sites();

        let h = &self.hamiltonian;
        positive("hamiltonian.alpha", h.alpha)?;
        finite("hamiltonian.j", h.j)?;
        finite("hamiltonian.hx", h.hx)?;
        finite("hamiltonian.hz", h.hz)?;
        for (k, t) in h.terms.iter().enumerate() {
            let path = format!("hamiltonian.terms[{k}]");
            let s =
                PauliString::parse(&t.string).map_err(|e| SchemaError::new(format!("{path}.string"), e.to_string()))?;
            if let Some((i, _)) = s.letters().find(|&(i, _)| i >= n) {
                return Err(SchemaError::new(format!("{path}.string"), format!("site {i} out of range for {n} sites")));
            }
            finite(&format!("{path}.coefficient"), t.coefficient)?;
        }
        if h.family == Family::Terms && h.terms.is_empty() {
            return Err(SchemaError::new("hamiltonian.terms", "family 'terms' needs at least one term"));
        }

        let d = &self.drive;
        finite("drive.g", d.g)?;
        parse_pauli("drive.operator", &d.operator)?;
        for (k, &w) in d.omegas.iter().enumerate() {
            positive(&format!("drive.omegas[{k}]"), w)?;
        }

        let m = &self.magnus;
        for (k, &t) in m.periods.iter().enumerate() {
            positive(&format!("magnus.periods[{k}]"), t)?;
        }
        if m.q_max > 0 && m.report_orders < m.q_max {
            return Err(SchemaError::new("magnus.report_orders", "must be at least q_max"));
        }
        if m.kappa <= std::f64::consts::LN_2 || !m.kappa.is_finite() {
            return Err(SchemaError::new("magnus.kappa", "must exceed ln 2"));
        }
        positive("magnus.c", m.c)?;
        if m.residual_samples == 0 {
            return Err(SchemaError::new("magnus.residual_samples", "must be at least 1"));
        }

        let lr = &self.lr;
        for (k, name) in lr.kinds.iter().enumerate() {
            BoundKind::parse(name).map_err(|e| SchemaError::new(format!("lr.kinds[{k}]"), e.to_string()))?;
        }
        parse_pauli("lr.operator", &lr.operator)?;
        positive("lr.t_max", lr.t_max)?;
        positive("lr.dt", lr.dt)?;
        positive("lr.mu", lr.mu)?;
        positive("lr.xi", lr.xi)?;
        if let Some(s) = lr.sigma {
            positive("lr.sigma", s)?;
        }
        positive("lr.beta_cone", lr.beta_cone)?;
        positive("lr.conjectured_c", lr.conjectured_c)?;

        let r = &self.response;
        positive("response.beta", r.beta)?;
        finite("response.lo", r.lo)?;
        finite("response.hi", r.hi)?;
        if r.hi <= r.lo {
            return Err(SchemaError::new("response.hi", "must exceed response.lo"));
        }
        positive("response.delta_omega", r.delta_omega)?;
        parse_pauli("response.operator", &r.operator)?;

        let ht = &self.heating;
        positive("heating.beta", ht.beta)?;
        if ht.n_periods == 0 {
            return Err(SchemaError::new("heating.n_periods", "must be at least 1"));
        }
        if !(ht.fraction > 0.0 && ht.fraction < 1.0) {
            return Err(SchemaError::new("heating.fraction", "must lie in (0, 1)"));
        }

        let dl = &self.delta;
        positive("delta.period", dl.period)?;
        parse_pauli("delta.operator", &dl.operator)?;
        positive("delta.threshold", dl.threshold)?;
        for (k, name) in dl.kinds.iter().enumerate() {
            EnvelopeKind::parse(name).map_err(|e| SchemaError::new(format!("delta.kinds[{k}]"), e.to_string()))?;
        }
        if let Some(s) = dl.sigma {
            positive("delta.sigma", s)?;
        }
        positive("delta.beta_cone", dl.beta_cone)?;

        if self.lemmas.q_max == 0 || self.lemmas.q0_max == 0 {
            return Err(SchemaError::new("lemmas", "q_max and q0_max must be at least 1"));
        }
        Ok(())
    }

    /// Site-index checks for the sections a subcommand reads.
    pub fn check_sites(&self, sections: &[&str]) -> Result<(), SchemaError> {
        let n = self.lattice()?.num_sites();
        let site = |path: String, i: usize| {
            if i < n {
                Ok(())
            } else {
                Err(SchemaError::new(path, format!("site {i} out of range for {n} sites")))
            }
        };
        for section in sections {
            match *section {
                "lr" => {
                    site("lr.a_site".into(), self.lr.a_site)?;
                    for (k, &b) in self.lr.b_sites.iter().enumerate() {
                        site(format!("lr.b_sites[{k}]"), b)?;
                        if b == self.lr.a_site {
                            return Err(SchemaError::new(format!("lr.b_sites[{k}]"), "must differ from a_site"));
                        }
                    }
                }
                "response" => {
                    for (k, &i) in self.response.sites.iter().enumerate() {
                        site(format!("response.sites[{k}]"), i)?;
                    }
                }
                "delta" => site("delta.site".into(), self.delta.site)?,
                _ => {}
            }
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<Lattice, SchemaError> {
        let boundary = match self.lattice.boundary {
            BoundaryName::Open => Boundary::Open,
            BoundaryName::Periodic => Boundary::Periodic,
        };
        Lattice::new(self.lattice.extents.clone(), boundary)
            .map_err(|e| SchemaError::new("lattice.extents", e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = load("schema_version = 1", &[]).unwrap();
        assert_eq!(c.lattice.extents, vec![8]);
        assert_eq!(c.magnus.q_max, 3);
        assert!(!c.lemmas.include_inner);
    }

    #[test]
    fn unknown_key_names_its_path() {
        let e = load("schema_version = 1\n[magnus]\nqmax = 3\n", &[]).unwrap_err();
        assert!(e.path.starts_with("magnus"), "{e}");
        assert!(e.message.contains("qmax"), "{e}");
    }

    #[test]
    fn wrong_type_names_its_path() {
        let e = load("schema_version = 1\n[response]\nbeta = \"hot\"\n", &[]).unwrap_err();
        assert_eq!(e.path, "response.beta");
    }

    #[test]
    fn overrides_apply_before_validation() {
        let c = load("schema_version = 1", &["lattice.extents=[6]".into(), "drive.operator=Z".into()]).unwrap();
        assert_eq!(c.lattice.extents, vec![6]);
        assert_eq!(c.drive.operator, "Z");
        let c = load("schema_version = 1", &["lr.a_site=9".into()]).unwrap();
        assert_eq!(c.check_sites(&["lr"]).unwrap_err().path, "lr.a_site");
        assert!(c.check_sites(&["response", "delta"]).is_ok());
        assert!(load("schema_version = 1", &["nonsense".into()]).is_err());
    }

    #[test]
    fn version_and_values_checked() {
        assert_eq!(load("schema_version = 2", &[]).unwrap_err().path, "schema_version");
        assert!(load("", &[]).is_err());
        assert_eq!(load("schema_version = 1\n[heating]\nfraction = 1.5\n", &[]).unwrap_err().path, "heating.fraction");
        assert_eq!(load("schema_version = 1\n[delta]\nkinds = [\"Nope\"]\n", &[]).unwrap_err().path, "delta.kinds[0]");
    }

    #[test]
    fn round_trip_through_toml() {
        let c = load("schema_version = 1\nseed = 4\n", &[]).unwrap();
        assert_eq!(load(&toml::to_string(&c).unwrap(), &[]).unwrap(), c);
    }
}
