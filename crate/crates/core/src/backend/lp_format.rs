//! Reading and writing the CPLEX-style LP text format.
//!
//! Coefficients are written with 17 significant digits so a parse of the export
//! reproduces every `f64` exactly. Every column gets an explicit bounds line,
//! which also fixes the column order on re-import.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use super::{Constraint, LinearProgramSpec, RowSense, Sense, VarKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing section: {0}")]
    MissingSection(&'static str),
}

fn valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    s.len() <= 255 && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '[' | ']' | '(' | ')'))
        && !s.eq_ignore_ascii_case("free")
        && !s.eq_ignore_ascii_case("inf")
        && !s.eq_ignore_ascii_case("infinity")
}

fn column_names(spec: &LinearProgramSpec) -> Vec<String> {
    let names: Vec<String> = (0..spec.num_vars()).map(|j| spec.var_name(j)).collect();
    let mut seen = HashSet::new();
    if names.iter().all(|n| valid_name(n) && seen.insert(n.clone())) {
        names
    } else {
        (0..spec.num_vars()).map(|j| format!("x{j}")).collect()
    }
}

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.16e}")
    }
}

fn write_terms(out: &mut String, terms: impl Iterator<Item = (usize, f64)>, names: &[String]) {
    let mut any = false;
    for (j, a) in terms {
        if a == 0.0 {
            continue;
        }
        let sign = if a < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", num(a.abs()), names[j]);
        any = true;
    }
    if !any {
        match names.first() {
            Some(n) => {
                let _ = write!(out, " 0 {n}");
            }
            None => out.push_str(" 0"),
        }
    }
}

/// Renders `spec` in LP text format.
pub fn export_lp_text(spec: &LinearProgramSpec) -> String {
    let names = column_names(spec);
    let mut out = String::new();
    out.push_str(match spec.sense {
        Sense::Minimize => "Minimize\n",
        Sense::Maximize => "Maximize\n",
    });
    out.push_str(" obj:");
    write_terms(&mut out, spec.objective.iter().copied().enumerate(), &names);
    out.push_str("\nSubject To\n");
    for (i, row) in spec.constraints.iter().enumerate() {
        let _ = write!(out, " c{i}:");
        write_terms(&mut out, row.coefficients.iter().copied(), &names);
        let op = match row.sense {
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
            RowSense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", num(row.rhs));
    }
    out.push_str("Bounds\n");
    for j in 0..spec.num_vars() {
        let (l, u) = (spec.lower[j], spec.upper[j]);
        if l == f64::NEG_INFINITY && u == f64::INFINITY {
            let _ = writeln!(out, " {} free", names[j]);
        } else {
            let _ = writeln!(out, " {} <= {} <= {}", num(l), names[j], num(u));
        }
    }
    let binaries: Vec<&str> = (0..spec.num_vars())
        .filter(|&j| spec.kinds[j] == VarKind::Binary)
        .map(|j| names[j].as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for b in binaries {
            let _ = writeln!(out, " {b}");
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Head,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    Done,
}

fn parse_number(tok: &str, line: usize) -> Result<f64, LpParseError> {
    tok.parse::<f64>().map_err(|_| LpParseError::Syntax {
        line,
        msg: format!("expected a number, found {tok:?}"),
    })
}

/// Parses a linear expression made of `[+|-] [coef] name` terms.
fn parse_terms(tokens: &[&str], line: usize) -> Result<Vec<(String, f64)>, LpParseError> {
    let mut terms = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for &tok in tokens {
        match tok {
            "+" => {}
            "-" => sign = -sign,
            _ => {
                if let Ok(v) = tok.parse::<f64>() {
                    if coef.is_some() {
                        return Err(LpParseError::Syntax {
                            line,
                            msg: "two coefficients in a row".into(),
                        });
                    }
                    coef = Some(v);
                } else {
                    terms.push((tok.to_string(), sign * coef.unwrap_or(1.0)));
                    sign = 1.0;
                    coef = None;
                }
            }
        }
    }
    if let Some(c) = coef {
        // a bare constant is only accepted when it is zero
        if c != 0.0 {
            return Err(LpParseError::Syntax {
                line,
                msg: "constant terms are not supported".into(),
            });
        }
    }
    Ok(terms)
}

fn strip_label(s: &str) -> &str {
    match s.find(':') {
        Some(p) => &s[p + 1..],
        None => s,
    }
}

/// Parses LP text produced by [`export_lp_text`] (and the common subset of the
/// format used by other tools).
pub fn parse_lp_text(text: &str) -> Result<LinearProgramSpec, LpParseError> {
    let mut section = Section::Head;
    let mut sense = None;
    let mut objective: Vec<(String, f64)> = Vec::new();
    let mut rows: Vec<(Vec<(String, f64)>, RowSense, f64)> = Vec::new();
    let mut bounds: Vec<(String, f64, f64)> = Vec::new();
    let mut binaries: Vec<String> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('\\').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let lower = content.to_ascii_lowercase();
        match lower.as_str() {
            "minimize" | "minimise" | "min" => {
                sense = Some(Sense::Minimize);
                section = Section::Objective;
                continue;
            }
            "maximize" | "maximise" | "max" => {
                sense = Some(Sense::Maximize);
                section = Section::Objective;
                continue;
            }
            "subject to" | "such that" | "st" | "s.t." => {
                section = Section::Constraints;
                continue;
            }
            "bounds" => {
                section = Section::Bounds;
                continue;
            }
            "binaries" | "binary" | "bin" => {
                section = Section::Binaries;
                continue;
            }
            "end" => {
                section = Section::Done;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Head | Section::Done => {
                return Err(LpParseError::Syntax {
                    line,
                    msg: format!("unexpected content {content:?}"),
                })
            }
            Section::Objective => {
                let tokens: Vec<&str> = strip_label(content).split_whitespace().collect();
                objective.extend(parse_terms(&tokens, line)?);
            }
            Section::Constraints => {
                let tokens: Vec<&str> = strip_label(content).split_whitespace().collect();
                let op = tokens
                    .iter()
                    .position(|t| matches!(*t, "<=" | ">=" | "=" | "=<" | "=>" | "<" | ">"))
                    .ok_or(LpParseError::Syntax {
                        line,
                        msg: "constraint without comparison operator".into(),
                    })?;
                let rs = match tokens[op] {
                    "<=" | "=<" | "<" => RowSense::Le,
                    ">=" | "=>" | ">" => RowSense::Ge,
                    _ => RowSense::Eq,
                };
                if tokens.len() != op + 2 {
                    return Err(LpParseError::Syntax {
                        line,
                        msg: "right-hand side must be a single number".into(),
                    });
                }
                let rhs = parse_number(tokens[op + 1], line)?;
                rows.push((parse_terms(&tokens[..op], line)?, rs, rhs));
            }
            Section::Bounds => {
                let tokens: Vec<&str> = content.split_whitespace().collect();
                match tokens.as_slice() {
                    [name, free] if free.eq_ignore_ascii_case("free") => {
                        bounds.push((name.to_string(), f64::NEG_INFINITY, f64::INFINITY))
                    }
                    [l, "<=", name, "<=", u] => {
                        bounds.push((name.to_string(), parse_number(l, line)?, parse_number(u, line)?))
                    }
                    [name, "<=", u] => bounds.push((name.to_string(), 0.0, parse_number(u, line)?)),
                    [name, ">=", l] => bounds.push((name.to_string(), parse_number(l, line)?, f64::INFINITY)),
                    [name, "=", v] => {
                        let v = parse_number(v, line)?;
                        bounds.push((name.to_string(), v, v))
                    }
                    _ => {
                        return Err(LpParseError::Syntax {
                            line,
                            msg: format!("unrecognized bound {content:?}"),
                        })
                    }
                }
            }
            Section::Binaries => {
                binaries.extend(content.split_whitespace().map(str::to_string));
            }
        }
    }
    let sense = sense.ok_or(LpParseError::MissingSection("objective"))?;
    if section != Section::Done {
        return Err(LpParseError::MissingSection("End"));
    }

    // column order: bounds section first, then any remaining names by appearance
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut order: Vec<String> = Vec::new();
    let mut intern = |name: &str, index: &mut HashMap<String, usize>| -> usize {
        if let Some(&j) = index.get(name) {
            return j;
        }
        order.push(name.to_string());
        index.insert(name.to_string(), order.len() - 1);
        order.len() - 1
    };
    for (name, _, _) in &bounds {
        intern(name, &mut index);
    }
    for (name, _) in &objective {
        intern(name, &mut index);
    }
    for (terms, _, _) in &rows {
        for (name, _) in terms {
            intern(name, &mut index);
        }
    }
    for name in &binaries {
        intern(name, &mut index);
    }
    let n = order.len();
    let mut spec = LinearProgramSpec::new(sense);
    for name in &order {
        spec.add_named_var(name.clone(), 0.0, 0.0, f64::INFINITY, VarKind::Continuous);
    }
    for (name, c) in objective {
        spec.objective[index[&name]] += c;
    }
    for (terms, rs, rhs) in rows {
        let coeffs = terms.into_iter().map(|(name, a)| (index[&name], a)).collect();
        spec.constraints.push(Constraint::new(coeffs, rs, rhs));
    }
    for (name, l, u) in bounds {
        let j = index[&name];
        spec.lower[j] = l;
        spec.upper[j] = u;
    }
    for name in binaries {
        let j = index[&name];
        spec.kinds[j] = VarKind::Binary;
        if spec.upper[j] == f64::INFINITY {
            spec.upper[j] = 1.0;
        }
    }
    debug_assert_eq!(spec.num_vars(), n);
    Ok(spec)
}
