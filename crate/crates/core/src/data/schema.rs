use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Surgical technique column: 0 open, 1 laparoscopic, 2 conversion.
pub const TREATMENT: &str = "Technique";
pub const TIME: &str = "Survival_Time";
/// 1 when death was observed at `Survival_Time`, 0 when censored.
pub const EVENT: &str = "Event";

pub const TECHNIQUE_OPEN: f64 = 0.0;
pub const TECHNIQUE_LAPAROSCOPIC: f64 = 1.0;
pub const TECHNIQUE_CONVERSION: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableKind {
    Continuous,
    Binary,
    Ordinal,
}

impl VariableKind {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "continuous" => Some(Self::Continuous),
            "binary" => Some(Self::Binary),
            "ordinal" => Some(Self::Ordinal),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Continuous => "continuous",
            Self::Binary => "binary",
            Self::Ordinal => "ordinal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VariableKind,
    pub min: f64,
    pub max: f64,
    pub units: Option<String>,
}

impl Variable {
    pub fn new(name: &str, kind: VariableKind, min: f64, max: f64) -> Self {
        Self {
            name: name.to_string(),
            kind,
            min,
            max,
            units: None,
        }
    }

    pub fn with_units(mut self, units: &str) -> Self {
        self.units = Some(units.to_string());
        self
    }

    /// Why `value` is not admissible, if it is not.
    pub fn violation(&self, value: f64) -> Option<String> {
        if !value.is_finite() {
            return Some(format!("value {value} is not finite"));
        }
        if self.kind != VariableKind::Continuous && value.fract() != 0.0 {
            return Some(format!("{} value {value} is not an integer", self.kind.as_str()));
        }
        if value < self.min || value > self.max {
            return Some(format!("value {value} outside [{}, {}]", self.min, self.max));
        }
        None
    }
}

/// Admissible columns of a cohort file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSchema {
    variables: Vec<Variable>,
}

impl CohortSchema {
    pub fn new(variables: Vec<Variable>) -> Result<Self> {
        for (i, v) in variables.iter().enumerate() {
            if v.name.is_empty() || v.name.contains(',') {
                return Err(Error::Schema(format!("bad variable name `{}`", v.name)));
            }
            if variables[..i].iter().any(|u| u.name == v.name) {
                return Err(Error::Schema(format!("duplicate variable `{}`", v.name)));
            }
            if !(v.min <= v.max) {
                return Err(Error::Schema(format!("`{}` has min > max", v.name)));
            }
            let consistent = match v.kind {
                VariableKind::Continuous => true,
                VariableKind::Binary => v.min == 0.0 && v.max == 1.0,
                VariableKind::Ordinal => v.min.fract() == 0.0 && v.max.fract() == 0.0,
            };
            if !consistent {
                return Err(Error::Schema(format!(
                    "range [{}, {}] does not fit {} variable `{}`",
                    v.min,
                    v.max,
                    v.kind.as_str(),
                    v.name
                )));
            }
        }
        Ok(Self { variables })
    }

    /// The colorectal-surgery variables plus the technique and event columns.
    pub fn colorectal() -> Self {
        use VariableKind::*;
        let binary = |name: &str| Variable::new(name, Binary, 0.0, 1.0);
        let vars = vec![
            Variable::new("Age", Continuous, 18.0, 100.0).with_units("years"),
            binary("Sex").with_units("1 = male"),
            Variable::new("BMI", Continuous, 12.0, 60.0).with_units("kg/m2"),
            Variable::new("ASA", Ordinal, 1.0, 4.0),
            binary("DM"),
            binary("IHD"),
            binary("Mortality"),
            binary("Morbidity"),
            binary("Arrhythmia"),
            binary("HT"),
            binary("CVA"),
            binary("Pulmonary"),
            binary("Renal"),
            binary("Hepatic"),
            binary("Previous_Surgery"),
            Variable::new("Previous", Ordinal, 0.0, 4.0).with_units("4 = four or more"),
            Variable::new("T", Ordinal, 1.0, 4.0),
            Variable::new("N", Ordinal, 0.0, 2.0),
            binary("M"),
            Variable::new("Stage", Ordinal, 1.0, 4.0),
            Variable::new("LN", Ordinal, 0.0, 200.0).with_units("count"),
            Variable::new("Grading", Ordinal, 1.0, 3.0),
            Variable::new("Op_Time", Continuous, 0.0, 1440.0).with_units("minutes"),
            Variable::new("Blood_Loss", Continuous, 0.0, 20000.0).with_units("ml"),
            binary("Reoperation"),
            Variable::new(TIME, Continuous, 1e-9, 600.0).with_units("months"),
            Variable::new(TREATMENT, Ordinal, 0.0, 2.0)
                .with_units("0 open, 1 laparoscopic, 2 conversion"),
            binary(EVENT),
        ];
        Self::new(vars).expect("built-in schema is consistent")
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn get(&self, name: &str) -> Option<&Variable> {
        self.variables.iter().find(|v| v.name == name)
    }

    /// Parses `name,kind,min,max[,units]` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut vars = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.splitn(5, ',').map(str::trim).collect();
            let bad = |what: &str| Error::Schema(format!("line {}: {what}", lineno + 1));
            if fields.len() < 4 {
                return Err(bad("expected name,kind,min,max[,units]"));
            }
            let kind = VariableKind::parse(fields[1])
                .ok_or_else(|| bad(&format!("unknown kind `{}`", fields[1])))?;
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("`{s}` is not a number")));
            let mut v = Variable::new(fields[0], kind, num(fields[2])?, num(fields[3])?);
            if let Some(u) = fields.get(4).filter(|u| !u.is_empty()) {
                v.units = Some(u.to_string());
            }
            vars.push(v);
        }
        Self::new(vars)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# name,kind,min,max,units\n");
        for v in &self.variables {
            let _ = write!(out, "{},{},{},{}", v.name, v.kind.as_str(), v.min, v.max);
            if let Some(u) = &v.units {
                let _ = write!(out, ",{u}");
            }
            out.push('\n');
        }
        out
    }
}
