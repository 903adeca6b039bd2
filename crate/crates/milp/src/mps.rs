//! Free-format MPS writer.

use std::collections::HashMap;
use std::fmt::Write;

use crate::error::MpsError;
use crate::model::{Integrality, MilpModel, Sense};

#[derive(Debug, Clone)]
pub struct MpsOptions {
    pub name: String,
    /// Longest token emitted for a row or column name.
    pub max_name_len: usize,
}

impl Default for MpsOptions {
    fn default() -> Self {
        Self {
            name: "DSR".into(),
            max_name_len: 64,
        }
    }
}

/// Maps a name onto the characters free MPS readers accept inside a token.
pub fn sanitize_name(name: &str, max_len: usize) -> String {
    let mut s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '_' | '[' | ']' | '.' | ',' | '-' | '(' | ')') {
                c
            } else {
                '_'
            }
        })
        .take(max_len)
        .collect();
    if s.is_empty() {
        s.push('_');
    }
    s
}

pub fn export_mps(model: &MilpModel) -> Result<String, MpsError> {
    export_mps_with(model, &MpsOptions::default())
}

/// Writes `model` as free MPS (minimization). Binaries are declared with `BV`
/// bounds; binaries already fixed by the model are written `FX`.
pub fn export_mps_with(model: &MilpModel, opts: &MpsOptions) -> Result<String, MpsError> {
    model.validate()?;
    let cols = unique_tokens(model.variables.iter().map(|v| v.name.as_str()), opts.max_name_len)?;
    let row_names: Vec<String> = model
        .constraints
        .iter()
        .enumerate()
        .map(|(i, c)| format!("c{i}_{}", c.tag))
        .collect();
    let rows = unique_tokens(row_names.iter().map(String::as_str), opts.max_name_len)?;
    let obj = "obj";
    if rows.iter().any(|r| r == obj) {
        return Err(MpsError::NameCollision {
            first: obj.into(),
            second: obj.into(),
            token: obj.into(),
        });
    }

    // Column-major view of the rows.
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.num_vars()];
    for (i, c) in model.constraints.iter().enumerate() {
        for &(v, a) in &c.coeffs {
            by_col[v.0].push((i, a));
        }
    }
    let cost = model.cost_vector();

    let mut out = String::new();
    let _ = writeln!(out, "NAME {}", sanitize_name(&opts.name, opts.max_name_len));
    let _ = writeln!(out, "OBJSENSE");
    let _ = writeln!(out, "    MIN");
    let _ = writeln!(out, "ROWS");
    let _ = writeln!(out, " N  {obj}");
    for (c, name) in model.constraints.iter().zip(&rows) {
        let t = match c.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        let _ = writeln!(out, " {t}  {name}");
    }
    let _ = writeln!(out, "COLUMNS");
    for (j, col) in cols.iter().enumerate() {
        if cost[j] != 0.0 {
            let _ = writeln!(out, "    {col}  {obj}  {}", num(cost[j]));
        }
        for &(i, a) in &by_col[j] {
            let _ = writeln!(out, "    {col}  {}  {}", rows[i], num(a));
        }
        if cost[j] == 0.0 && by_col[j].is_empty() {
            // Keep the column declared even when it appears nowhere.
            let _ = writeln!(out, "    {col}  {obj}  0");
        }
    }
    let _ = writeln!(out, "RHS");
    for (c, name) in model.constraints.iter().zip(&rows) {
        if c.rhs != 0.0 {
            let _ = writeln!(out, "    RHS  {name}  {}", num(c.rhs));
        }
    }
    let _ = writeln!(out, "RANGES");
    let _ = writeln!(out, "BOUNDS");
    for (v, col) in model.variables.iter().zip(&cols) {
        if v.integrality == Integrality::Binary && v.lower == 0.0 && v.upper == 1.0 {
            let _ = writeln!(out, " BV BND  {col}");
            continue;
        }
        if v.lower == v.upper {
            let _ = writeln!(out, " FX BND  {col}  {}", num(v.lower));
            continue;
        }
        if v.lower == f64::NEG_INFINITY {
            let _ = writeln!(out, " MI BND  {col}");
        } else {
            let _ = writeln!(out, " LO BND  {col}  {}", num(v.lower));
        }
        if v.upper == f64::INFINITY {
            let _ = writeln!(out, " PL BND  {col}");
        } else {
            let _ = writeln!(out, " UP BND  {col}  {}", num(v.upper));
        }
    }
    let _ = writeln!(out, "ENDATA");
    Ok(out)
}

/// Shortest round-trip decimal representation.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn unique_tokens<'a>(names: impl Iterator<Item = &'a str>, max_len: usize) -> Result<Vec<String>, MpsError> {
    let mut seen: HashMap<String, &'a str> = HashMap::new();
    let mut out = Vec::new();
    for name in names {
        let token = sanitize_name(name, max_len);
        if let Some(first) = seen.insert(token.clone(), name) {
            return Err(MpsError::NameCollision {
                first: first.to_string(),
                second: name.to_string(),
                token,
            });
        }
        out.push(token);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MilpModel;

    #[test]
    fn empty_model_skeleton() {
        let text = export_mps(&MilpModel::new()).unwrap();
        let sections: Vec<&str> = text.lines().filter(|l| !l.starts_with(' ')).collect();
        assert_eq!(
            sections,
            ["NAME DSR", "OBJSENSE", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA"]
        );
        assert!(!text.contains("    RHS"));
    }

    #[test]
    fn collision_after_truncation() {
        let mut m = MilpModel::new();
        m.add_continuous("flow_on_edge_1", 0.0, 1.0).unwrap();
        m.add_continuous("flow_on_edge_2", 0.0, 1.0).unwrap();
        let opts = MpsOptions {
            max_name_len: 8,
            ..MpsOptions::default()
        };
        assert!(matches!(
            export_mps_with(&m, &opts),
            Err(MpsError::NameCollision { .. })
        ));
        assert!(export_mps(&m).is_ok());
    }

    #[test]
    fn sanitizes_spaces() {
        assert_eq!(sanitize_name("x 1$a", 64), "x_1_a");
        assert_eq!(sanitize_name("", 64), "_");
    }

    #[test]
    fn binaries_and_bounds() {
        let mut m = MilpModel::new();
        let b = m.add_binary("b").unwrap();
        let f = m.add_var("f", 1.0, 1.0, Integrality::Binary).unwrap();
        let x = m.add_continuous("x", f64::NEG_INFINITY, 2.5).unwrap();
        m.add_constraint([(b, 1.0), (x, -1.0), (f, 1.0)], Sense::Ge, -1.0, "r")
            .unwrap();
        m.set_objective([(x, 1.0)]).unwrap();
        let text = export_mps(&m).unwrap();
        assert!(text.contains(" BV BND  b\n"));
        assert!(text.contains(" FX BND  f  1.0\n"));
        assert!(text.contains(" MI BND  x\n"));
        assert!(text.contains(" UP BND  x  2.5\n"));
        assert!(text.contains(" G  c0_r\n"));
        assert!(text.contains("    RHS  c0_r  -1.0\n"));
    }
}
