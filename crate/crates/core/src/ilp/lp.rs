//! LP text format: objective section, `Subject To` with one row per line,
//! a `Binary` listing and `End`. Comment lines start with `\`. Variable
//! names are rewritten to legal LP identifiers and the original names are
//! appended as a `\ var <lp-name> = <name>` table so parsing restores them.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;

use thiserror::Error;

use super::{Constraint, IlpError, IpModel, LinExpr, Linear, Objective, Relation, Sense, VarId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError { line, column, message: message.into() }
    }
}

const KEYWORDS: &[&str] = &[
    "max", "maximize", "maximise", "maximum", "min", "minimize", "minimise", "minimum", "st", "subject", "such",
    "bounds", "bound", "binary", "binaries", "bin", "general", "generals", "gen", "end", "free", "inf", "infinity",
];

fn sanitize(name: &str) -> String {
    let mut out: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    let first = out.chars().next();
    let needs_prefix = match first {
        None => true,
        Some(c) => !c.is_ascii_alphabetic() || c == 'e' || c == 'E',
    } || KEYWORDS.contains(&out.to_ascii_lowercase().as_str());
    if needs_prefix {
        out.insert_str(0, "v_");
    }
    out
}

fn lp_names(model: &IpModel) -> Vec<String> {
    let mut used = HashSet::new();
    model
        .vars()
        .iter()
        .map(|v| {
            let base = sanitize(&v.name);
            let mut name = base.clone();
            let mut k = 1;
            while !used.insert(name.clone()) {
                name = format!("{base}_{k}");
                k += 1;
            }
            name
        })
        .collect()
}

fn write_expr(out: &mut String, expr: &LinExpr, names: &[String], with_constant: bool) {
    let mut first = true;
    for &(c, v) in &expr.terms {
        let name = &names[v.index()];
        let sign = if c < 0 { "-" } else { "+" };
        let mag = c.unsigned_abs();
        if first {
            if c < 0 {
                out.push_str("- ");
            }
        } else {
            out.push(' ');
            out.push_str(sign);
            out.push(' ');
        }
        if mag != 1 {
            out.push_str(&format!("{mag} "));
        }
        out.push_str(name);
        first = false;
    }
    if with_constant && expr.constant != 0 {
        if first {
            out.push_str(&expr.constant.to_string());
        } else {
            let sign = if expr.constant < 0 { "-" } else { "+" };
            out.push_str(&format!(" {sign} {}", expr.constant.unsigned_abs()));
        }
        first = false;
    }
    if first {
        out.push('0');
    }
}

pub fn export_lp_string(model: &IpModel) -> Result<String, IlpError> {
    if !model.is_linear() {
        return Err(IlpError::PreconditionViolation(
            "model has implication or reified constraints; linearize it first".into(),
        ));
    }
    let names = lp_names(model);
    let mut out = String::new();
    out.push_str("\\ 0-1 model\n");
    for (k, v) in &model.metadata {
        out.push_str(&format!("\\ meta {k} = {v}\n"));
    }
    let obj = model.objective();
    out.push_str(match obj.sense {
        Sense::Maximize => "Maximize\n",
        Sense::Minimize => "Minimize\n",
    });
    out.push_str(" obj: ");
    write_expr(&mut out, &obj.expr.canonical(), &names, true);
    out.push('\n');
    out.push_str("Subject To\n");
    for (k, c) in model.constraints().iter().enumerate() {
        let Constraint::Linear(l) = c else { unreachable!() };
        let l = l.canonical();
        out.push_str(&format!(" c{k}: "));
        write_expr(&mut out, &l.expr, &names, false);
        out.push_str(&format!(" {} {}\n", l.rel.symbol(), l.rhs));
    }
    out.push_str("Binary\n");
    for n in &names {
        out.push_str(&format!(" {n}\n"));
    }
    out.push_str("End\n");
    out.push_str("\\ names\n");
    for (v, n) in model.vars().iter().zip(&names) {
        out.push_str(&format!("\\ var {n} = {}\n", v.name));
    }
    Ok(out)
}

pub fn export_lp(model: &IpModel, writer: &mut impl Write) -> Result<(), IlpError> {
    let text = export_lp_string(model)?;
    writer.write_all(text.as_bytes())?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Sign(i64),
    Num(i64),
    Name(String),
    Rel(Relation),
    Colon,
}

fn tokenize(line: &str, lineno: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        let col = k + 1;
        if c.is_whitespace() {
            k += 1;
        } else if c == '+' || c == '-' {
            out.push((Tok::Sign(if c == '+' { 1 } else { -1 }), col));
            k += 1;
        } else if c == ':' {
            out.push((Tok::Colon, col));
            k += 1;
        } else if c.is_ascii_digit() {
            let start = k;
            while k < chars.len() && chars[k].is_ascii_digit() {
                k += 1;
            }
            let text: String = chars[start..k].iter().collect();
            if k < chars.len() && (chars[k] == '.' || chars[k].is_ascii_alphabetic()) {
                return Err(ParseError::new(lineno, k + 1, "only integer coefficients are supported"));
            }
            let n = text.parse().map_err(|_| ParseError::new(lineno, col, "number out of range"))?;
            out.push((Tok::Num(n), col));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = k;
            while k < chars.len() && (chars[k].is_ascii_alphanumeric() || chars[k] == '_') {
                k += 1;
            }
            out.push((Tok::Name(chars[start..k].iter().collect()), col));
        } else if matches!(c, '<' | '>' | '=' | '!') {
            let start = k;
            while k < chars.len() && matches!(chars[k], '<' | '>' | '=' | '!') {
                k += 1;
            }
            let sym: String = chars[start..k].iter().collect();
            let rel = match sym.as_str() {
                "<=" => Relation::Le,
                ">=" => Relation::Ge,
                "=" => Relation::Eq,
                _ => return Err(ParseError::new(lineno, col, format!("unknown relation {sym:?}"))),
            };
            out.push((Tok::Rel(rel), col));
        } else {
            return Err(ParseError::new(lineno, col, format!("unexpected character {c:?}")));
        }
    }
    Ok(out)
}

/// Parsed `Σ coef·name + constant`, names unresolved.
type RawExpr = (Vec<(i64, String)>, i64);

fn parse_expr(toks: &[(Tok, usize)], lineno: usize, end_col: usize) -> Result<RawExpr, ParseError> {
    let mut terms = Vec::new();
    let mut constant = 0i64;
    let mut k = 0;
    let mut first = true;
    while k < toks.len() {
        let mut sign = 1;
        let mut saw_sign = false;
        while let Some((Tok::Sign(s), _)) = toks.get(k) {
            sign *= s;
            saw_sign = true;
            k += 1;
        }
        if !first && !saw_sign {
            return Err(ParseError::new(lineno, toks[k].1, "expected + or - between terms"));
        }
        match toks.get(k) {
            Some((Tok::Num(n), _)) => {
                k += 1;
                if let Some((Tok::Name(name), _)) = toks.get(k) {
                    terms.push((sign * n, name.clone()));
                    k += 1;
                } else {
                    constant += sign * n;
                }
            }
            Some((Tok::Name(name), _)) => {
                terms.push((sign, name.clone()));
                k += 1;
            }
            Some((t, col)) => return Err(ParseError::new(lineno, *col, format!("unexpected token {t:?}"))),
            None => return Err(ParseError::new(lineno, end_col, "expression ends after a sign")),
        }
        first = false;
    }
    if first {
        return Err(ParseError::new(lineno, end_col, "empty expression"));
    }
    Ok((terms, constant))
}

/// Drops an optional leading `label:`.
fn strip_label(toks: &[(Tok, usize)]) -> &[(Tok, usize)] {
    match toks {
        [(Tok::Name(_), _), (Tok::Colon, _), rest @ ..] => rest,
        _ => toks,
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Objective,
    Constraints,
    Binary,
    End,
}

fn section_header(line: &str) -> Option<(Section, Option<Sense>)> {
    let l = line.trim().to_ascii_lowercase();
    let l = l.split_whitespace().collect::<Vec<_>>().join(" ");
    match l.as_str() {
        "maximize" | "maximise" | "maximum" | "max" => Some((Section::Objective, Some(Sense::Maximize))),
        "minimize" | "minimise" | "minimum" | "min" => Some((Section::Objective, Some(Sense::Minimize))),
        "subject to" | "such that" | "st" | "s.t." => Some((Section::Constraints, None)),
        "binary" | "binaries" | "bin" => Some((Section::Binary, None)),
        "end" => Some((Section::End, None)),
        _ => None,
    }
}

/// Reads a document in the dialect written by [`export_lp`].
pub fn parse_lp(text: &str) -> Result<IpModel, ParseError> {
    let mut section = Section::None;
    let mut sense = None;
    let mut objective: Option<RawExpr> = None;
    let mut rows: Vec<(RawExpr, Relation, i64, usize)> = Vec::new();
    let mut binaries: Vec<(String, usize)> = Vec::new();
    let mut renames: Vec<(String, String, usize)> = Vec::new();
    let mut metadata = BTreeMap::new();
    let mut last_line = 0;

    for (k, raw) in text.lines().enumerate() {
        let lineno = k + 1;
        last_line = lineno;
        let (content, comment) = match raw.find('\\') {
            Some(p) => (&raw[..p], Some(raw[p + 1..].trim())),
            None => (raw, None),
        };
        if let Some(comment) = comment {
            if let Some(rest) = comment.strip_prefix("var ") {
                let (lp, orig) = rest
                    .split_once(" = ")
                    .ok_or_else(|| ParseError::new(lineno, 1, "malformed name table entry"))?;
                renames.push((lp.trim().to_string(), orig.trim().to_string(), lineno));
            } else if let Some(rest) = comment.strip_prefix("meta ") {
                if let Some((key, value)) = rest.split_once(" = ") {
                    metadata.insert(key.trim().to_string(), value.trim().to_string());
                }
            }
        }
        if content.trim().is_empty() {
            continue;
        }
        if let Some((next, s)) = section_header(content) {
            if next == Section::Objective {
                if sense.is_some() {
                    return Err(ParseError::new(lineno, 1, "second objective section"));
                }
                sense = s;
            }
            section = next;
            continue;
        }
        let toks = tokenize(content, lineno)?;
        let end_col = content.len() + 1;
        match section {
            Section::None => return Err(ParseError::new(lineno, 1, "content before the objective section")),
            Section::End => return Err(ParseError::new(lineno, 1, "content after End")),
            Section::Objective => {
                if objective.is_some() {
                    return Err(ParseError::new(lineno, 1, "objective spans several lines"));
                }
                objective = Some(parse_expr(strip_label(&toks), lineno, end_col)?);
            }
            Section::Constraints => {
                let body = strip_label(&toks);
                let pos = body
                    .iter()
                    .position(|(t, _)| matches!(t, Tok::Rel(_)))
                    .ok_or_else(|| ParseError::new(lineno, end_col, "constraint has no relation"))?;
                let Tok::Rel(rel) = body[pos].0 else { unreachable!() };
                let lhs = parse_expr(&body[..pos], lineno, body[pos].1)?;
                let rhs_toks = &body[pos + 1..];
                let rhs = match rhs_toks {
                    [(Tok::Num(n), _)] => *n,
                    [(Tok::Sign(s), _), (Tok::Num(n), _)] => s * n,
                    [] => return Err(ParseError::new(lineno, end_col, "missing right-hand side")),
                    [(_, col), ..] => {
                        return Err(ParseError::new(lineno, *col, "right-hand side must be an integer"))
                    }
                };
                rows.push((lhs, rel, rhs, lineno));
            }
            Section::Binary => {
                for (t, col) in toks {
                    match t {
                        Tok::Name(n) => binaries.push((n, lineno)),
                        other => return Err(ParseError::new(lineno, col, format!("unexpected {other:?} in Binary"))),
                    }
                }
            }
        }
    }

    let sense = sense.ok_or_else(|| ParseError::new(last_line.max(1), 1, "missing objective section"))?;
    if section != Section::End {
        return Err(ParseError::new(last_line.max(1), 1, "missing End"));
    }

    let rename: HashMap<&str, &str> = renames.iter().map(|(a, b, _)| (a.as_str(), b.as_str())).collect();
    let mut model = IpModel::new();
    let mut ids: HashMap<String, VarId> = HashMap::new();
    for (name, lineno) in &binaries {
        if ids.contains_key(name) {
            continue;
        }
        let full = rename.get(name.as_str()).copied().unwrap_or(name);
        let id = model
            .add_var(full)
            .map_err(|e| ParseError::new(*lineno, 1, e.to_string()))?;
        ids.insert(name.clone(), id);
    }
    let resolve = |(terms, constant): RawExpr, lineno: usize| -> Result<LinExpr, ParseError> {
        let mut expr = LinExpr { terms: Vec::with_capacity(terms.len()), constant };
        for (c, n) in terms {
            let v = ids
                .get(&n)
                .ok_or_else(|| ParseError::new(lineno, 1, format!("variable {n} is not declared binary")))?;
            expr.add(c, *v);
        }
        Ok(expr.canonical())
    };
    let obj = resolve(objective.unwrap_or_default(), 1)?;
    let mut constraints = Vec::with_capacity(rows.len());
    for (lhs, rel, rhs, lineno) in rows {
        let expr = resolve(lhs, lineno)?;
        constraints.push(Linear::new(expr, rel, rhs).canonical());
    }
    for l in constraints {
        model.add_linear(l).expect("variables resolved above");
    }
    model.set_objective(Objective { sense, expr: obj }).expect("variables resolved above");
    model.metadata = metadata;
    Ok(model)
}
