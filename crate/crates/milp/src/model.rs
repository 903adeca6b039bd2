//! Sparse mixed-integer linear model.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Index of a variable inside a [`MilpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrality {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integrality: Integrality,
}

impl Variable {
    pub fn is_binary(&self) -> bool {
        self.integrality == Integrality::Binary
    }

    pub fn is_fixed(&self) -> bool {
        self.lower == self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

/// One sparse row `sum(coeff * var) sense rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    /// Constraint family and entity, e.g. `vdrop[12]`.
    pub tag: String,
}

impl LinearConstraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(v, a)| a * values[v.0]).sum()
    }

    /// Amount by which `values` violates this row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        match self.sense {
            Sense::Le => (act - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - act).max(0.0),
            Sense::Eq => (act - self.rhs).abs(),
        }
    }

    /// Row activity bounds `[lo, hi]` implied by sense and rhs.
    pub fn activity_bounds(&self) -> (f64, f64) {
        match self.sense {
            Sense::Le => (f64::NEG_INFINITY, self.rhs),
            Sense::Ge => (self.rhs, f64::INFINITY),
            Sense::Eq => (self.rhs, self.rhs),
        }
    }
}

/// Minimization model with bounded variables and sparse rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MilpModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<LinearConstraint>,
    /// Sparse objective, minimized.
    pub objective: Vec<(VarId, f64)>,
    #[serde(skip)]
    names: HashMap<String, VarId>,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.names.get(name).copied()
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        integrality: Integrality,
    ) -> Result<VarId, ModelError> {
        let name = name.into();
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(ModelError::BadBounds { name, lower, upper });
        }
        if integrality == Integrality::Binary && (lower < 0.0 || upper > 1.0) {
            return Err(ModelError::BadBounds { name, lower, upper });
        }
        if self.names.contains_key(&name) {
            return Err(ModelError::DuplicateName(name));
        }
        let id = VarId(self.variables.len());
        self.names.insert(name.clone(), id);
        self.variables.push(Variable {
            name,
            lower,
            upper,
            integrality,
        });
        Ok(id)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> Result<VarId, ModelError> {
        self.add_var(name, lower, upper, Integrality::Continuous)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Result<VarId, ModelError> {
        self.add_var(name, 0.0, 1.0, Integrality::Binary)
    }

    /// Narrows the bounds of an existing variable.
    pub fn fix(&mut self, id: VarId, value: f64) {
        let v = &mut self.variables[id.0];
        v.lower = value;
        v.upper = value;
    }

    /// Adds a row; repeated variable ids are merged and exact zeros dropped.
    pub fn add_constraint(
        &mut self,
        coeffs: impl IntoIterator<Item = (VarId, f64)>,
        sense: Sense,
        rhs: f64,
        tag: impl Into<String>,
    ) -> Result<usize, ModelError> {
        let tag = tag.into();
        let coeffs = self.merge_terms(coeffs, &tag)?;
        if !rhs.is_finite() {
            return Err(ModelError::NonFinite { tag });
        }
        self.constraints.push(LinearConstraint {
            coeffs,
            sense,
            rhs,
            tag,
        });
        Ok(self.constraints.len() - 1)
    }

    pub fn set_objective(&mut self, coeffs: impl IntoIterator<Item = (VarId, f64)>) -> Result<(), ModelError> {
        self.objective = self.merge_terms(coeffs, "objective")?;
        Ok(())
    }

    fn merge_terms(
        &self,
        coeffs: impl IntoIterator<Item = (VarId, f64)>,
        tag: &str,
    ) -> Result<Vec<(VarId, f64)>, ModelError> {
        let mut merged: Vec<(VarId, f64)> = Vec::new();
        for (v, a) in coeffs {
            if v.0 >= self.variables.len() {
                return Err(ModelError::UnknownVariable {
                    tag: tag.to_string(),
                    var: v.0,
                });
            }
            if !a.is_finite() {
                return Err(ModelError::NonFinite { tag: tag.to_string() });
            }
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some((_, b)) => *b += a,
                None => merged.push((v, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        Ok(merged)
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, c)| c * values[v.0]).sum()
    }

    /// Dense objective vector.
    pub fn cost_vector(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.variables.len()];
        for &(v, a) in &self.objective {
            c[v.0] += a;
        }
        c
    }

    /// Largest violation of any row or variable bound at `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| c.violation(values)).fold(0.0, f64::max);
        let bounds = self
            .variables
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// Largest distance of a binary variable from {0, 1}.
    pub fn max_integrality_violation(&self, values: &[f64]) -> f64 {
        self.variables
            .iter()
            .zip(values)
            .filter(|(v, _)| v.is_binary())
            .map(|(_, &x)| (x - x.round()).abs())
            .fold(0.0, f64::max)
    }

    pub fn binaries(&self) -> impl Iterator<Item = VarId> + '_ {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_binary())
            .map(|(i, _)| VarId(i))
    }

    /// Structural checks: bounds ordered, binaries within [0, 1], ids in range.
    pub fn validate(&self) -> Result<(), ModelError> {
        for v in &self.variables {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(ModelError::BadBounds {
                    name: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
            if v.is_binary() && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(ModelError::BadBounds {
                    name: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
        }
        let n = self.variables.len();
        for c in &self.constraints {
            let mut seen = std::collections::HashSet::new();
            for &(v, a) in &c.coeffs {
                if v.0 >= n {
                    return Err(ModelError::UnknownVariable {
                        tag: c.tag.clone(),
                        var: v.0,
                    });
                }
                if !a.is_finite() {
                    return Err(ModelError::NonFinite { tag: c.tag.clone() });
                }
                if !seen.insert(v) {
                    return Err(ModelError::DuplicateTerm {
                        tag: c.tag.clone(),
                        var: v.0,
                    });
                }
            }
        }
        for &(v, _) in &self.objective {
            if v.0 >= n {
                return Err(ModelError::UnknownVariable {
                    tag: "objective".into(),
                    var: v.0,
                });
            }
        }
        Ok(())
    }

    /// Rebuilds the name index after deserialization.
    pub fn reindex(&mut self) {
        self.names = self
            .variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.clone(), VarId(i)))
            .collect();
    }

    /// Human-readable constraint listing, one row per line.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "variables: {}", self.variables.len());
        for (i, v) in self.variables.iter().enumerate() {
            let kind = if v.is_binary() { "bin" } else { "cont" };
            let _ = writeln!(out, "  {i:>5} {:<28} {kind:<4} [{}, {}]", v.name, v.lower, v.upper);
        }
        let _ = writeln!(out, "objective: min {}", self.format_terms(&self.objective));
        let _ = writeln!(out, "constraints: {}", self.constraints.len());
        for (i, c) in self.constraints.iter().enumerate() {
            let _ = writeln!(
                out,
                "  {i:>5} {:<24} {} {} {}",
                c.tag,
                self.format_terms(&c.coeffs),
                c.sense,
                c.rhs
            );
        }
        out
    }

    fn format_terms(&self, terms: &[(VarId, f64)]) -> String {
        if terms.is_empty() {
            return "0".into();
        }
        terms
            .iter()
            .map(|&(v, a)| format!("{a:+} {}", self.variables[v.0].name))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_terms_are_merged() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, 1.0).unwrap();
        let y = m.add_continuous("y", 0.0, 1.0).unwrap();
        m.add_constraint([(x, 1.0), (y, 2.0), (x, 3.0), (y, -2.0)], Sense::Le, 1.0, "r")
            .unwrap();
        assert_eq!(m.constraints[0].coeffs, vec![(x, 4.0)]);
        m.validate().unwrap();
    }

    #[test]
    fn rejects_bad_binary_bounds_and_names() {
        let mut m = MilpModel::new();
        assert!(m.add_var("b", 0.0, 2.0, Integrality::Binary).is_err());
        m.add_binary("b").unwrap();
        assert!(matches!(m.add_binary("b"), Err(ModelError::DuplicateName(_))));
        assert!(m.add_continuous("c", 1.0, 0.0).is_err());
    }

    #[test]
    fn violation_by_sense() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, 5.0).unwrap();
        m.add_constraint([(x, 1.0)], Sense::Le, 1.0, "le").unwrap();
        m.add_constraint([(x, 1.0)], Sense::Ge, 3.0, "ge").unwrap();
        assert_eq!(m.max_violation(&[2.0]), 1.0);
        assert_eq!(m.max_violation(&[6.0]), 5.0);
    }
}
