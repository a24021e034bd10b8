use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VarId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lb: f64,
    pub ub: f64,
    pub kind: VarKind,
    /// Objective coefficient (minimized).
    pub obj: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * values[j]).sum()
    }

    /// Amount by which `values` violate the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        match self.sense {
            Sense::Le => (act - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - act).max(0.0),
            Sense::Eq => (act - self.rhs).abs(),
        }
    }
}

/// A minimization MILP over continuous and binary variables.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MilpModel {
    pub vars: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub obj_constant: f64,
    #[serde(skip)]
    names: HashMap<String, VarId>,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.vars.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lb: f64, ub: f64, kind: VarKind, obj: f64) -> VarId {
        let name = name.into();
        let id = self.vars.len();
        self.names.insert(name.clone(), id);
        self.vars.push(Variable { name, lb, ub, kind, obj });
        id
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lb: f64, ub: f64, obj: f64) -> VarId {
        self.add_var(name, lb, ub, VarKind::Continuous, obj)
    }

    pub fn add_binary(&mut self, name: impl Into<String>, obj: f64) -> VarId {
        self.add_var(name, 0.0, 1.0, VarKind::Binary, obj)
    }

    /// Adds a row; repeated variables in `terms` are merged and zero coefficients dropped.
    pub fn add_constraint(&mut self, name: impl Into<String>, terms: Vec<(VarId, f64)>, sense: Sense, rhs: f64) -> usize {
        let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(terms.len());
        for (j, a) in terms {
            match merged.iter_mut().find(|(k, _)| *k == j) {
                Some(slot) => slot.1 += a,
                None => merged.push((j, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        self.constraints.push(Constraint {
            name: name.into(),
            terms: merged,
            sense,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        if self.names.len() == self.vars.len() {
            return self.names.get(name).copied();
        }
        self.vars.iter().position(|v| v.name == name)
    }

    /// Rebuilds the name index after the variable list was edited directly.
    pub fn reindex(&mut self) {
        self.names = self.vars.iter().enumerate().map(|(i, v)| (v.name.clone(), i)).collect();
    }

    pub fn objective(&self, values: &[f64]) -> f64 {
        self.obj_constant + self.vars.iter().zip(values).map(|(v, x)| v.obj * x).sum::<f64>()
    }

    /// Largest bound, row or integrality violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &x) in self.vars.iter().zip(values) {
            worst = worst.max(v.lb - x).max(x - v.ub);
            if v.kind == VarKind::Binary {
                worst = worst.max(x.min(1.0 - x).max(0.0));
            }
        }
        for c in &self.constraints {
            worst = worst.max(c.violation(values));
        }
        worst
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        let mut seen = HashMap::with_capacity(self.vars.len());
        for (i, v) in self.vars.iter().enumerate() {
            check_name(&v.name)?;
            if seen.insert(v.name.as_str(), i).is_some() {
                return bad(format!("duplicate variable name `{}`", v.name));
            }
            if v.lb.is_nan() || v.ub.is_nan() || v.lb > v.ub || v.lb == f64::INFINITY || v.ub == f64::NEG_INFINITY {
                return bad(format!("variable `{}` has bounds [{}, {}]", v.name, v.lb, v.ub));
            }
            if !v.obj.is_finite() {
                return bad(format!("variable `{}` has objective coefficient {}", v.name, v.obj));
            }
            if v.kind == VarKind::Binary && (v.lb < 0.0 || v.ub > 1.0) {
                return bad(format!("binary `{}` has bounds [{}, {}]", v.name, v.lb, v.ub));
            }
        }
        let mut rows = HashMap::with_capacity(self.constraints.len());
        for c in &self.constraints {
            check_name(&c.name)?;
            if rows.insert(c.name.as_str(), ()).is_some() {
                return bad(format!("duplicate constraint name `{}`", c.name));
            }
            if !c.rhs.is_finite() {
                return bad(format!("constraint `{}` has rhs {}", c.name, c.rhs));
            }
            for &(j, a) in &c.terms {
                if j >= self.vars.len() {
                    return bad(format!("constraint `{}` references variable {j}", c.name));
                }
                if !a.is_finite() {
                    return bad(format!("constraint `{}` has coefficient {a}", c.name));
                }
            }
        }
        if !self.obj_constant.is_finite() {
            return bad("objective constant is not finite".into());
        }
        Ok(())
    }
}

/// Names must be usable in LP files: `[A-Za-z_][A-Za-z0-9_]*`, at most 255
/// characters, and not starting with `e`/`E` (which readers may take for an exponent).
pub fn check_name(name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && name.len() <= 255
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !name.starts_with(|c: char| c.is_ascii_digit() || c == 'e' || c == 'E');
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("illegal name `{name}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_terms_and_checks() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, 10.0, 1.0);
        let y = m.add_binary("y", 2.0);
        m.add_constraint("c1", vec![(x, 1.0), (y, 2.0), (x, 3.0), (y, -2.0)], Sense::Ge, 4.0);
        assert_eq!(m.constraints[0].terms, vec![(x, 4.0)]);
        assert!(m.validate().is_ok());
        assert_eq!(m.var_id("y"), Some(y));
        assert_eq!(m.objective(&[1.0, 1.0]), 3.0);
        assert_eq!(m.max_violation(&[0.5, 0.0]), 2.0);
        assert_eq!(m.max_violation(&[1.0, 0.25]), 0.25);
    }

    #[test]
    fn rejects_bad_models() {
        let mut m = MilpModel::new();
        m.add_continuous("x", 2.0, 1.0, 0.0);
        assert!(m.validate().is_err());

        let mut m = MilpModel::new();
        m.add_continuous("energy", 0.0, 1.0, 0.0);
        assert!(m.validate().is_err());

        let mut m = MilpModel::new();
        m.add_continuous("x", 0.0, 1.0, 0.0);
        m.add_continuous("x", 0.0, 1.0, 0.0);
        assert!(m.validate().is_err());

        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, 1.0, 0.0);
        m.add_constraint("r", vec![(x, 1.0)], Sense::Le, f64::INFINITY);
        assert!(m.validate().is_err());
    }
}
