//! Reader and writer for the CPLEX-style LP text format.
//!
//! The writer lists every variable in the objective (zero coefficients
//! included) so a read-back reproduces the variable order exactly. Numbers
//! are printed in shortest round-trip form.

use std::fmt::Write as _;

use super::model::{MilpModel, Sense, VarKind};
use crate::error::{Error, Result};

const WRAP: usize = 200;

fn num(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x != 0.0 && (x.abs() < 1e-5 || x.abs() >= 1e15) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn push_term(line: &mut String, out: &mut String, coef: f64, name: &str) {
    let sign = if coef < 0.0 { '-' } else { '+' };
    let piece = format!(" {sign} {} {name}", num(coef.abs()));
    if line.len() + piece.len() > WRAP {
        out.push_str(line);
        out.push('\n');
        line.clear();
        line.push(' ');
    }
    line.push_str(&piece);
}

/// Renders `model` as an LP document.
pub fn write_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    out.push_str("\\ written by ies-core\nMinimize\n");
    let mut line = String::from(" obj:");
    for v in &model.vars {
        push_term(&mut line, &mut out, v.obj, &v.name);
    }
    if model.obj_constant != 0.0 {
        let sign = if model.obj_constant < 0.0 { '-' } else { '+' };
        let _ = write!(line, " {sign} {}", num(model.obj_constant.abs()));
    }
    out.push_str(&line);
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        let mut line = format!(" {}:", c.name);
        if c.terms.is_empty() {
            // an empty row still needs a left-hand side
            let first = model.vars.first().map_or("x", |v| v.name.as_str());
            let _ = write!(line, " 0 {first}");
        }
        for &(j, a) in &c.terms {
            push_term(&mut line, &mut out, a, &model.vars[j].name);
        }
        let _ = writeln!(line, " {} {}", c.sense.symbol(), num(c.rhs));
        out.push_str(&line);
    }
    out.push_str("Bounds\n");
    for v in &model.vars {
        let default = match v.kind {
            VarKind::Continuous => v.lb == 0.0 && v.ub == f64::INFINITY,
            VarKind::Binary => v.lb == 0.0 && v.ub == 1.0,
        };
        if default {
            continue;
        }
        if v.lb == f64::NEG_INFINITY && v.ub == f64::INFINITY {
            let _ = writeln!(out, " {} free", v.name);
        } else if v.lb == v.ub {
            let _ = writeln!(out, " {} = {}", v.name, num(v.lb));
        } else {
            let _ = writeln!(out, " {} <= {} <= {}", num(v.lb), v.name, num(v.ub));
        }
    }
    let binaries: Vec<&str> = model.vars.iter().filter(|v| v.kind == VarKind::Binary).map(|v| v.name.as_str()).collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        let mut line = String::new();
        for b in binaries {
            if line.len() + b.len() + 1 > WRAP {
                out.push_str(&line);
                out.push('\n');
                line.clear();
            }
            line.push(' ');
            line.push_str(b);
        }
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str("End\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Plus,
    Minus,
    Colon,
    Cmp(Sense),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    Generals,
    End,
}

fn section_of(line: &str) -> Option<(Section, bool)> {
    let l = line.to_ascii_lowercase();
    let l = l.split_whitespace().collect::<Vec<_>>().join(" ");
    Some(match l.as_str() {
        "minimize" | "minimise" | "minimum" | "min" => (Section::Objective, false),
        "maximize" | "maximise" | "maximum" | "max" => (Section::Objective, true),
        "subject to" | "such that" | "st" | "s.t." | "st." => (Section::Constraints, false),
        "bounds" | "bound" => (Section::Bounds, false),
        "binaries" | "binary" | "bin" => (Section::Binaries, false),
        "generals" | "general" | "gen" | "integers" => (Section::Generals, false),
        "end" => (Section::End, false),
        _ => return None,
    })
}

fn lp_err(line: usize, msg: impl Into<String>) -> Error {
    Error::LpParse { line, msg: msg.into() }
}

fn tokenize(text: &str, line: usize, out: &mut Vec<(Tok, usize)>) -> Result<()> {
    let b = text.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if c == '+' {
            out.push((Tok::Plus, line));
            i += 1;
        } else if c == '-' {
            out.push((Tok::Minus, line));
            i += 1;
        } else if c == ':' {
            out.push((Tok::Colon, line));
            i += 1;
        } else if c == '<' || c == '>' || c == '=' {
            let two = if i + 1 < b.len() { &text[i..i + 2] } else { "" };
            let (sense, len) = match two {
                "<=" | "=<" => (Sense::Le, 2),
                ">=" | "=>" => (Sense::Ge, 2),
                _ => match c {
                    '<' => (Sense::Le, 1),
                    '>' => (Sense::Ge, 1),
                    _ => (Sense::Eq, 1),
                },
            };
            out.push((Tok::Cmp(sense), line));
            i += len;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < b.len() && ((b[i] as char).is_ascii_digit() || b[i] == b'.') {
                i += 1;
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let mut k = i + 1;
                if k < b.len() && (b[k] == b'+' || b[k] == b'-') {
                    k += 1;
                }
                if k < b.len() && (b[k] as char).is_ascii_digit() {
                    i = k;
                    while i < b.len() && (b[i] as char).is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let v: f64 = text[start..i].parse().map_err(|_| lp_err(line, format!("bad number `{}`", &text[start..i])))?;
            out.push((Tok::Num(v), line));
        } else if c.is_ascii_alphabetic() || "_!\"#$%&()/,.;?@`'{}|~[]".contains(c) {
            let start = i;
            while i < b.len() {
                let d = b[i] as char;
                if d.is_ascii_alphanumeric() || "_!\"#$%&()/,.;?@`'{}|~[]".contains(d) {
                    i += 1;
                } else {
                    break;
                }
            }
            let word = &text[start..i];
            match word.to_ascii_lowercase().as_str() {
                "inf" | "infinity" => out.push((Tok::Num(f64::INFINITY), line)),
                _ => out.push((Tok::Name(word.to_string()), line)),
            }
        } else {
            return Err(lp_err(line, format!("unexpected character `{c}`")));
        }
    }
    Ok(())
}

struct Builder {
    model: MilpModel,
    bounded: Vec<bool>,
}

impl Builder {
    fn var(&mut self, name: &str) -> usize {
        match self.model.var_id(name) {
            Some(j) => j,
            None => {
                self.bounded.push(false);
                self.model.add_continuous(name, 0.0, f64::INFINITY, 0.0)
            }
        }
    }
}

/// Reads a linear expression; returns terms, constant and the index after it.
fn expression(toks: &[(Tok, usize)], mut i: usize, b: &mut Builder) -> Result<(Vec<(usize, f64)>, f64, usize)> {
    let mut terms = Vec::new();
    let mut constant = 0.0;
    loop {
        let mut sign = 1.0;
        let mut seen_sign = false;
        while let Some((t, _)) = toks.get(i) {
            match t {
                Tok::Plus => {}
                Tok::Minus => sign = -sign,
                _ => break,
            }
            seen_sign = true;
            i += 1;
        }
        match toks.get(i) {
            Some((Tok::Num(v), _)) => {
                let v = *v;
                if let Some((Tok::Name(n), _)) = toks.get(i + 1) {
                    let j = b.var(n);
                    terms.push((j, sign * v));
                    i += 2;
                } else {
                    constant += sign * v;
                    i += 1;
                }
            }
            Some((Tok::Name(n), _)) => {
                let j = b.var(n);
                terms.push((j, sign));
                i += 1;
            }
            Some((_, line)) if seen_sign => return Err(lp_err(*line, "dangling sign")),
            _ => return Ok((terms, constant, i)),
        }
    }
}

fn signed_number(toks: &[(Tok, usize)], mut i: usize, line: usize) -> Result<(f64, usize)> {
    let mut sign = 1.0;
    loop {
        match toks.get(i) {
            Some((Tok::Plus, _)) => i += 1,
            Some((Tok::Minus, _)) => {
                sign = -sign;
                i += 1
            }
            Some((Tok::Num(v), _)) => return Ok((sign * v, i + 1)),
            _ => return Err(lp_err(line, "expected a number")),
        }
    }
}

/// Parses an LP document into a model.
pub fn parse_lp(text: &str) -> Result<MilpModel> {
    let mut section = Section::None;
    let mut maximize = false;
    let mut obj_toks = Vec::new();
    let mut con_toks = Vec::new();
    let mut bound_lines: Vec<(Vec<(Tok, usize)>, usize)> = Vec::new();
    let mut bin_toks = Vec::new();
    let mut seen_objective = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('\\').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some((s, max)) = section_of(line) {
            if s == Section::Objective {
                if seen_objective {
                    return Err(lp_err(line_no, "second objective section"));
                }
                seen_objective = true;
                maximize = max;
            }
            section = s;
            continue;
        }
        match section {
            Section::None => return Err(lp_err(line_no, "content before the objective section")),
            Section::Objective => tokenize(line, line_no, &mut obj_toks)?,
            Section::Constraints => tokenize(line, line_no, &mut con_toks)?,
            Section::Bounds => {
                let mut t = Vec::new();
                tokenize(line, line_no, &mut t)?;
                bound_lines.push((t, line_no));
            }
            Section::Binaries => tokenize(line, line_no, &mut bin_toks)?,
            Section::Generals => return Err(lp_err(line_no, "general integer variables are not supported")),
            Section::End => return Err(lp_err(line_no, "content after End")),
        }
    }
    if !seen_objective {
        return Err(lp_err(0, "missing objective section"));
    }
    let mut b = Builder {
        model: MilpModel::new(),
        bounded: Vec::new(),
    };

    // objective, with an optional label
    let mut i = 0;
    if let (Some((Tok::Name(_), _)), Some((Tok::Colon, _))) = (obj_toks.first(), obj_toks.get(1)) {
        i = 2;
    }
    let (terms, constant, end) = expression(&obj_toks, i, &mut b)?;
    if end != obj_toks.len() {
        return Err(lp_err(obj_toks[end].1, "unexpected token in objective"));
    }
    let flip = if maximize { -1.0 } else { 1.0 };
    for (j, a) in terms {
        b.model.vars[j].obj += flip * a;
    }
    b.model.obj_constant = flip * constant;

    // constraints
    let mut i = 0;
    let mut unnamed = 0;
    while i < con_toks.len() {
        let line = con_toks[i].1;
        let name = match (&con_toks[i].0, con_toks.get(i + 1)) {
            (Tok::Name(n), Some((Tok::Colon, _))) => {
                i += 2;
                n.clone()
            }
            _ => {
                unnamed += 1;
                format!("R{unnamed}")
            }
        };
        let (terms, constant, end) = expression(&con_toks, i, &mut b)?;
        let sense = match con_toks.get(end) {
            Some((Tok::Cmp(s), _)) => *s,
            _ => return Err(lp_err(line, format!("constraint `{name}` lacks a comparison"))),
        };
        let (rhs, next) = signed_number(&con_toks, end + 1, line)?;
        b.model.add_constraint(name, terms, sense, rhs - constant);
        i = next;
    }

    // bounds
    for (toks, line) in &bound_lines {
        let toks = toks.as_slice();
        let err = || lp_err(*line, "unrecognized bound");
        let name_at = |k: usize| match toks.get(k) {
            Some((Tok::Name(n), _)) => Some(n.clone()),
            _ => None,
        };
        if toks.len() == 2 {
            if let (Some(n), Some((Tok::Name(kw), _))) = (name_at(0), toks.get(1)) {
                if kw.eq_ignore_ascii_case("free") {
                    let j = b.var(&n);
                    b.model.vars[j].lb = f64::NEG_INFINITY;
                    b.model.vars[j].ub = f64::INFINITY;
                    b.bounded[j] = true;
                    continue;
                }
            }
            return Err(err());
        }
        if let Some(n) = name_at(0) {
            // x <= u, x >= l, x = v
            let Some((Tok::Cmp(s), _)) = toks.get(1) else { return Err(err()) };
            let (v, end) = signed_number(toks, 2, *line)?;
            if end != toks.len() {
                return Err(err());
            }
            let j = b.var(&n);
            let var = &mut b.model.vars[j];
            match s {
                Sense::Le => var.ub = v,
                Sense::Ge => var.lb = v,
                Sense::Eq => {
                    var.lb = v;
                    var.ub = v;
                }
            }
            b.bounded[j] = true;
            continue;
        }
        // l <= x [<= u]
        let (l, k) = signed_number(toks, 0, *line)?;
        let Some((Tok::Cmp(s1), _)) = toks.get(k) else { return Err(err()) };
        let Some(n) = name_at(k + 1) else { return Err(err()) };
        let j = b.var(&n);
        match s1 {
            Sense::Le => b.model.vars[j].lb = l,
            Sense::Ge => b.model.vars[j].ub = l,
            Sense::Eq => {
                b.model.vars[j].lb = l;
                b.model.vars[j].ub = l;
            }
        }
        if k + 2 < toks.len() {
            let Some((Tok::Cmp(s2), _)) = toks.get(k + 2) else { return Err(err()) };
            let (u, end) = signed_number(toks, k + 3, *line)?;
            if end != toks.len() || s1 != s2 {
                return Err(err());
            }
            match s2 {
                Sense::Le => b.model.vars[j].ub = u,
                _ => b.model.vars[j].lb = u,
            }
        }
        b.bounded[j] = true;
    }

    for (t, line) in &bin_toks {
        let Tok::Name(n) = t else { return Err(lp_err(*line, "expected a variable name")) };
        let j = b.var(n);
        let var = &mut b.model.vars[j];
        var.kind = VarKind::Binary;
        if !b.bounded[j] {
            var.lb = 0.0;
            var.ub = 1.0;
        }
    }
    b.model.validate()?;
    Ok(b.model)
}
