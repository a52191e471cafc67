//! Tab-separated text form of a [`LinearProgram`].
//!
//! ```text
//! # comment
//! vars   n
//! scale  s
//! obj    c_0 ... c_{n-1}
//! eq     a_0 ... a_{n-1}  rhs
//! le     a_0 ... a_{n-1}  rhs
//! lower  l_0 ... l_{n-1}
//! upper  u_0 ... u_{n-1}      (inf allowed)
//! ```
//!
//! Floats are written with 17 significant digits so a round trip is exact.

use std::fmt::Write;

use super::{Constraint, LinearProgram, VarBounds};
use crate::error::{Error, Result};

fn push_row(out: &mut String, tag: &str, values: impl IntoIterator<Item = f64>) {
    out.push_str(tag);
    for v in values {
        write!(out, "\t{v:.16e}").unwrap();
    }
    out.push('\n');
}

pub fn write_dump(lp: &LinearProgram) -> String {
    let mut out = String::new();
    writeln!(out, "vars\t{}", lp.num_vars()).unwrap();
    push_row(&mut out, "scale", [lp.scale]);
    push_row(&mut out, "obj", lp.objective.iter().copied());
    for r in &lp.equalities {
        push_row(&mut out, "eq", r.coeffs.iter().copied().chain([r.rhs]));
    }
    for r in &lp.inequalities {
        push_row(&mut out, "le", r.coeffs.iter().copied().chain([r.rhs]));
    }
    push_row(&mut out, "lower", lp.bounds.iter().map(|b| b.lower));
    push_row(&mut out, "upper", lp.bounds.iter().map(|b| b.upper));
    out
}

pub fn parse_dump(text: &str) -> Result<LinearProgram> {
    let mut n: Option<usize> = None;
    let mut scale = 1.0;
    let mut objective = None;
    let mut equalities = Vec::new();
    let mut inequalities = Vec::new();
    let mut lower = None;
    let mut upper = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |message: String| Error::Parse { line, message };
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split('\t');
        let tag = fields.next().unwrap_or_default().trim();
        let rest: Vec<&str> = fields.map(str::trim).collect();

        if tag == "vars" {
            if n.is_some() {
                return Err(err("duplicate vars line".into()));
            }
            let [v] = rest[..] else {
                return Err(err("vars takes one value".into()));
            };
            let v: usize = v
                .parse()
                .map_err(|e| err(format!("bad variable count: {e}")))?;
            n = Some(v);
            continue;
        }
        let Some(n) = n else {
            return Err(err("vars line must come first".into()));
        };
        let nums = rest
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| err(format!("bad number {s:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let expect = |k: usize| {
            if nums.len() == k {
                Ok(())
            } else {
                Err(err(format!(
                    "{tag} expects {k} values, found {}",
                    nums.len()
                )))
            }
        };
        match tag {
            "scale" => {
                expect(1)?;
                scale = nums[0];
            }
            "obj" => {
                expect(n)?;
                objective = Some(nums);
            }
            "eq" | "le" => {
                expect(n + 1)?;
                let mut coeffs = nums;
                let rhs = coeffs.pop().unwrap_or_default();
                let row = Constraint::new(coeffs, rhs);
                if tag == "eq" {
                    equalities.push(row);
                } else {
                    inequalities.push(row);
                }
            }
            "lower" => {
                expect(n)?;
                lower = Some(nums);
            }
            "upper" => {
                expect(n)?;
                upper = Some(nums);
            }
            other => return Err(err(format!("unknown line type {other:?}"))),
        }
    }

    let last = text.lines().count().max(1);
    let objective = objective.ok_or(Error::Parse {
        line: last,
        message: "missing obj line".into(),
    })?;
    let n = objective.len();
    let lower = lower.unwrap_or_else(|| vec![0.0; n]);
    let upper = upper.unwrap_or_else(|| vec![f64::INFINITY; n]);
    let lp = LinearProgram {
        objective,
        equalities,
        inequalities,
        bounds: lower
            .into_iter()
            .zip(upper)
            .map(|(l, u)| VarBounds::new(l, u))
            .collect(),
        scale,
    };
    lp.validate()?;
    Ok(lp)
}
