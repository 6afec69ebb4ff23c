//! File formats: framework JSON, report JSON writer and number formatting.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::framework::{EdgeOrbit, PeriodicFramework, Placement, QuotientGraph};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexRecord {
    id: String,
    position: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRecord {
    tail: String,
    head: String,
    shift: Vec<i64>,
}

/// On-disk framework layout. `lattice[r][c]` is coordinate `r` of
/// generator `c`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameworkFile {
    dimension: usize,
    vertex_orbits: Vec<VertexRecord>,
    lattice: Vec<Vec<f64>>,
    edge_orbits: Vec<EdgeRecord>,
}

pub fn framework_to_value(fw: &PeriodicFramework) -> Value {
    let d = fw.dimension();
    let p = fw.placement();
    let file = FrameworkFile {
        dimension: d,
        vertex_orbits: fw
            .graph()
            .vertex_orbits
            .iter()
            .zip(&p.positions)
            .map(|(id, pos)| VertexRecord {
                id: id.clone(),
                position: pos.iter().copied().collect(),
            })
            .collect(),
        lattice: (0..d)
            .map(|r| p.lattice.row(r).iter().copied().collect())
            .collect(),
        edge_orbits: fw
            .graph()
            .edge_orbits
            .iter()
            .map(|e| EdgeRecord {
                tail: fw.orbit_id(e.tail).to_string(),
                head: fw.orbit_id(e.head).to_string(),
                shift: e.shift.clone(),
            })
            .collect(),
    };
    serde_json::to_value(file).expect("framework record is always serializable")
}

pub fn framework_to_json(fw: &PeriodicFramework) -> String {
    to_json_string(&framework_to_value(fw))
}

pub fn framework_from_json(text: &str) -> Result<PeriodicFramework> {
    let file: FrameworkFile = serde_json::from_str(text)?;
    let d = file.dimension;
    if file.lattice.len() != d || file.lattice.iter().any(|r| r.len() != d) {
        return Err(Error::DimensionMismatch(format!("lattice must be {d}x{d}")));
    }
    let mut graph = QuotientGraph::new(d, file.vertex_orbits.iter().map(|v| v.id.clone()));
    for e in file.edge_orbits {
        graph.edge_orbits.push(EdgeOrbit::new(
            graph.orbit_index(&e.tail)?,
            graph.orbit_index(&e.head)?,
            e.shift,
        ));
    }
    let positions = file
        .vertex_orbits
        .into_iter()
        .map(|v| DVector::from_vec(v.position))
        .collect();
    let lattice = DMatrix::from_fn(d, d, |r, c| file.lattice[r][c]);
    PeriodicFramework::new(graph, Placement::new(positions, lattice))
}

pub fn load_framework(path: impl AsRef<Path>) -> Result<PeriodicFramework> {
    framework_from_json(&fs::read_to_string(path)?)
}

pub fn save_framework(fw: &PeriodicFramework, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, framework_to_json(fw))?;
    Ok(())
}

/// Formats a float with `digits` significant digits, positional notation
/// for moderate exponents and trailing zeros removed. With 17 digits the
/// result parses back to the identical `f64`.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0.0" } else { "0.0" }.to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let ds: String = mantissa.chars().filter(|c| *c != '.').collect();

    if (-5..digits as i32).contains(&exp) {
        let (int, frac) = if exp >= 0 {
            let split = (exp as usize + 1).min(ds.len());
            let mut int = ds[..split].to_string();
            int.extend(std::iter::repeat_n('0', exp as usize + 1 - split));
            (int, ds[split..].to_string())
        } else {
            let zeros = "0".repeat((-exp - 1) as usize);
            ("0".to_string(), zeros + &ds)
        };
        let frac = frac.trim_end_matches('0');
        let frac = if frac.is_empty() { "0" } else { frac };
        format!("{sign}{int}.{frac}")
    } else {
        let (lead, rest) = ds.split_at(1);
        let rest = rest.trim_end_matches('0');
        if rest.is_empty() {
            format!("{sign}{lead}e{exp}")
        } else {
            format!("{sign}{lead}.{rest}e{exp}")
        }
    }
}

/// Pretty JSON with keys in insertion order, flat numeric arrays kept on
/// one line and floats written with 17 significant digits.
pub fn to_json_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, value: &Value, indent: usize) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_sig(n.as_f64().unwrap_or(f64::NAN), 17));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
            } else if items.iter().all(|v| !v.is_array() && !v.is_object()) {
                out.push('[');
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, v, indent);
                }
                out.push(']');
            } else {
                out.push_str("[\n");
                for (i, v) in items.iter().enumerate() {
                    push_indent(out, indent + 1);
                    write_value(out, v, indent + 1);
                    if i + 1 < items.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                push_indent(out, indent);
                out.push(']');
            }
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, v)) in map.iter().enumerate() {
                push_indent(out, indent + 1);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(out, v, indent + 1);
                if i + 1 < map.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            push_indent(out, indent);
            out.push('}');
        }
    }
}

fn push_indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

pub(crate) fn vec_to_value(v: &DVector<f64>) -> Value {
    Value::Array(v.iter().map(|&x| float_value(x)).collect())
}

pub(crate) fn float_value(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}
