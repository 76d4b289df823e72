//! CPLEX-style LP text export and "<name> <value>" solution import.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{Comparator, Model, VarKind};

const MAX_NAME_LEN: usize = 255;
const MAX_LINE_LEN: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExportError {
    #[error("names `{first}` and `{second}` both map to `{sanitized}`")]
    NameCollision {
        first: String,
        second: String,
        sanitized: String,
    },
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolutionParseError {
    #[error("line {line}: expected `<name> <value>`")]
    Malformed { line: usize },
    #[error("line {line}: unknown variable `{name}`")]
    UnknownVariable { line: usize, name: String },
}

/// Renders `model` in LP format: Minimize / Subject To / Bounds / Generals / Binaries / End.
pub fn export_lp_text(model: &Model) -> Result<String, ExportError> {
    model.validate()?;
    let var_names = sanitized_names(model.vars().iter().map(|v| v.name.as_str()), "x")?;
    let row_names = sanitized_names(model.constraints().iter().map(|r| r.name.as_str()), "c")?;

    let mut out = String::new();
    if !model.name.is_empty() {
        let _ = writeln!(out, "\\ Problem: {}", model.name.replace(['\n', '\r'], " "));
    }
    out.push_str("Minimize\n");
    let mut obj = String::from(" obj:");
    if model.objective().is_empty() {
        if let Some(first) = var_names.first() {
            let _ = write!(obj, " 0 {first}");
        }
    }
    write_terms(&mut out, &mut obj, model.objective().iter().map(|&(v, c)| (c, var_names[v.0].as_str())));
    if model.objective_offset() != 0.0 {
        push_token(&mut out, &mut obj, &format!("{} {}", sign(model.objective_offset()), fmt_num(model.objective_offset().abs())));
    }
    out.push_str(&obj);
    out.push('\n');

    out.push_str("Subject To\n");
    for (i, row) in model.constraints().iter().enumerate() {
        let mut line = format!(" {}:", row_names[i]);
        if row.terms.is_empty() {
            if let Some(first) = var_names.first() {
                let _ = write!(line, " 0 {first}");
            }
        }
        write_terms(&mut out, &mut line, row.terms.iter().map(|&(v, c)| (c, var_names[v.0].as_str())));
        let cmp = match row.cmp {
            Comparator::Le => "<=",
            Comparator::Ge => ">=",
            Comparator::Eq => "=",
        };
        push_token(&mut out, &mut line, &format!("{cmp} {}", fmt_num(row.rhs)));
        out.push_str(&line);
        out.push('\n');
    }

    out.push_str("Bounds\n");
    for (v, name) in model.vars().iter().zip(&var_names) {
        if v.kind == VarKind::Binary {
            continue;
        }
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " {name} free");
            }
            (true, true) if v.lower == v.upper => {
                let _ = writeln!(out, " {name} = {}", fmt_num(v.lower));
            }
            (true, true) => {
                let _ = writeln!(out, " {} <= {name} <= {}", fmt_num(v.lower), fmt_num(v.upper));
            }
            (true, false) => {
                if v.lower != 0.0 {
                    let _ = writeln!(out, " {name} >= {}", fmt_num(v.lower));
                }
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= {name} <= {}", fmt_num(v.upper));
            }
        }
    }

    out.push_str("Generals\n");
    let mut line = String::new();
    for (v, name) in model.vars().iter().zip(&var_names) {
        if v.kind == VarKind::Integer {
            push_token(&mut out, &mut line, name);
        }
    }
    flush_line(&mut out, &mut line);

    out.push_str("Binaries\n");
    for (v, name) in model.vars().iter().zip(&var_names) {
        if v.kind == VarKind::Binary {
            push_token(&mut out, &mut line, name);
        }
    }
    flush_line(&mut out, &mut line);
    out.push_str("End\n");
    Ok(out)
}

/// Names exactly as [`export_lp_text`] writes them, indexed by variable id.
pub fn exported_var_names(model: &Model) -> Result<Vec<String>, ExportError> {
    sanitized_names(model.vars().iter().map(|v| v.name.as_str()), "x")
}

/// Reads a solution file with one `<name> <value>` pair per line.
///
/// Variables missing from the file are zero. Blank lines and lines starting with
/// `#` or `\` are skipped.
pub fn parse_solution_text(model: &Model, text: &str) -> Result<Vec<f64>, SolutionParseError> {
    let names = exported_var_names(model).unwrap_or_else(|_| model.vars().iter().map(|v| v.name.clone()).collect());
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, name) in names.iter().enumerate() {
        index.insert(name.as_str(), i);
    }
    for (i, v) in model.vars().iter().enumerate() {
        index.entry(v.name.as_str()).or_insert(i);
    }
    let mut values = vec![0.0; model.num_vars()];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('\\') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(name), Some(value), None) = (it.next(), it.next(), it.next()) else {
            return Err(SolutionParseError::Malformed { line: lineno + 1 });
        };
        let value: f64 = value
            .parse()
            .map_err(|_| SolutionParseError::Malformed { line: lineno + 1 })?;
        let &j = index.get(name).ok_or_else(|| SolutionParseError::UnknownVariable {
            line: lineno + 1,
            name: name.to_string(),
        })?;
        values[j] = value;
    }
    Ok(values)
}

fn sanitized_names<'a>(names: impl Iterator<Item = &'a str>, prefix: &str) -> Result<Vec<String>, ExportError> {
    let mut seen: HashMap<String, String> = HashMap::new();
    let mut out = Vec::new();
    for (i, raw) in names.enumerate() {
        let name = if raw.is_empty() {
            format!("{prefix}{i}")
        } else {
            sanitize(raw)
        };
        if let Some(first) = seen.get(&name) {
            return Err(ExportError::NameCollision {
                first: first.clone(),
                second: raw.to_string(),
                sanitized: name,
            });
        }
        seen.insert(name.clone(), raw.to_string());
        out.push(name);
    }
    Ok(out)
}

fn sanitize(raw: &str) -> String {
    let mut s: String = raw
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "!\"#$%&()/,.;?@_`'{}|~".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    let first = s.chars().next().unwrap_or('_');
    let bad_start = first.is_ascii_digit()
        || first == '.'
        || ((first == 'e' || first == 'E') && s[1..].chars().next().is_some_and(|c| c.is_ascii_digit() || c == '+' || c == '-'));
    if bad_start {
        s.insert(0, '_');
    }
    s.truncate(MAX_NAME_LEN);
    s
}

fn sign(c: f64) -> &'static str {
    if c < 0.0 {
        "-"
    } else {
        "+"
    }
}

fn fmt_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}

fn write_terms<'a>(out: &mut String, line: &mut String, terms: impl Iterator<Item = (f64, &'a str)>) {
    for (k, (c, name)) in terms.enumerate() {
        let token = if k == 0 && c >= 0.0 {
            format!("{} {name}", fmt_num(c))
        } else {
            format!("{} {} {name}", sign(c), fmt_num(c.abs()))
        };
        push_token(out, line, &token);
    }
}

/// Appends a token, wrapping onto a continuation line when the current one gets long.
fn push_token(out: &mut String, line: &mut String, token: &str) {
    if !line.is_empty() && line.len() + token.len() + 1 > MAX_LINE_LEN {
        out.push_str(line);
        out.push('\n');
        line.clear();
    }
    line.push(' ');
    line.push_str(token);
}

fn flush_line(out: &mut String, line: &mut String) {
    if !line.is_empty() {
        out.push_str(line);
        out.push('\n');
        line.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Comparator::*;

    #[test]
    fn single_variable_model_has_all_sections() {
        let mut m = Model::new("one");
        let x = m.add_continuous("x", 0.0, 4.0);
        m.set_objective([(x, 1.0)]);
        let text = export_lp_text(&m).unwrap();
        for section in ["Minimize", "Subject To", "Bounds", "Generals", "Binaries", "End"] {
            assert!(text.lines().any(|l| l == section), "missing {section}:\n{text}");
        }
        assert!(text.contains(" obj: 1 x"));
        assert!(text.contains(" 0 <= x <= 4"));
    }

    #[test]
    fn binaries_and_generals_are_listed() {
        let mut m = Model::new("kinds");
        let b = m.add_binary("pick");
        let n = m.add_integer("count", 0.0, 4.0);
        m.add_constraint("link", [(b, 4.0), (n, -1.0)], Ge, 0.0);
        let text = export_lp_text(&m).unwrap();
        let bin_at = text.find("Binaries").unwrap();
        let gen_at = text.find("Generals").unwrap();
        assert!(text[bin_at..].contains(" pick"));
        assert!(text[gen_at..bin_at].contains(" count"));
        assert!(text.contains(" link: 4 pick - 1 count >= 0"));
    }

    #[test]
    fn names_are_sanitized_and_collisions_rejected() {
        let mut m = Model::new("names");
        m.add_continuous("f[0,1]", 0.0, 1.0);
        m.add_continuous("2nd", 0.0, 1.0);
        let names = exported_var_names(&m).unwrap();
        assert_eq!(names, vec!["f_0,1_", "_2nd"]);

        m.add_continuous("f(0,1)", 0.0, 1.0);
        m.add_continuous("f 0,1 ", 0.0, 1.0);
        assert!(matches!(export_lp_text(&m), Err(ExportError::NameCollision { .. })));
    }

    #[test]
    fn long_rows_are_wrapped() {
        let mut m = Model::new("wide");
        let vars: Vec<_> = (0..200).map(|i| m.add_continuous(format!("flow_variable_{i}"), 0.0, 1.0)).collect();
        m.add_constraint("sum", vars.iter().map(|&v| (v, 1.0)), Le, 10.0);
        let text = export_lp_text(&m).unwrap();
        assert!(text.lines().all(|l| l.len() <= MAX_LINE_LEN));
    }

    #[test]
    fn solution_text_round_trip() {
        let mut m = Model::new("sol");
        m.add_continuous("a", 0.0, 1.0);
        m.add_integer("b[1]", 0.0, 5.0);
        let vals = parse_solution_text(&m, "# comment\na 0.5\nb_1_ 3\n").unwrap();
        assert_eq!(vals, vec![0.5, 3.0]);
        assert!(parse_solution_text(&m, "zzz 1").is_err());
        assert!(parse_solution_text(&m, "a").is_err());
    }
}
