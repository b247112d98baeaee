//! LP and MPS text for [`LpModel`], with readers for the same dialects and
//! for `<name> <value>` solution dumps.
//!
//! Numbers carry 9 significant digits and never use exponent notation.
//! Bounds are written for every variable in declaration order so a read
//! model keeps the original variable order.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Assignment, Formulation, LinExpr, LpModel, MilpError, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Lp,
    Mps,
}

impl FileFormat {
    pub fn extension(self) -> &'static str {
        match self {
            FileFormat::Lp => "lp",
            FileFormat::Mps => "mps",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        match label.to_ascii_lowercase().as_str() {
            "lp" => Some(FileFormat::Lp),
            "mps" => Some(FileFormat::Mps),
            _ => None,
        }
    }
}

/// Terms per line in LP expressions.
const TERMS_PER_LINE: usize = 8;

pub(crate) fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "+inf".into() } else { "-inf".into() };
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.truncate(s.trim_end_matches('0').trim_end_matches('.').len());
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn header(model: &LpModel, comment: &str) -> String {
    let yes = if model.with_vi { "yes" } else { "no" };
    format!("{comment} model: {}\n{comment} formulation: {}\n{comment} valid inequalities: {yes}\n", model.name, model.formulation)
}

fn lp_expr(model: &LpModel, out: &mut String, expr: &LinExpr) {
    for (n, &(v, c)) in expr.iter().enumerate() {
        if n > 0 && n % TERMS_PER_LINE == 0 {
            out.push_str("\n  ");
        }
        let sign = if c < 0.0 { "-" } else { "+" };
        if n > 0 || c < 0.0 {
            let _ = write!(out, " {sign}");
        }
        let name = &model.variables[v].name;
        if c.abs() == 1.0 {
            let _ = write!(out, " {name}");
        } else {
            let _ = write!(out, " {} {name}", fmt_num(c.abs()));
        }
    }
}

pub fn format_lp(model: &LpModel) -> String {
    let mut out = header(model, "\\");
    out.push_str("Minimize\n obj:");
    lp_expr(model, &mut out, &model.objective);
    out.push_str("\nSubject To\n");
    for row in &model.rows {
        let _ = write!(out, " {}:", row.name);
        lp_expr(model, &mut out, &row.expr);
        let _ = writeln!(out, " {} {}", row.sense.symbol(), fmt_num(row.rhs));
    }
    out.push_str("Bounds\n");
    for v in &model.variables {
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (true, true) => writeln!(out, " {} <= {} <= {}", fmt_num(v.lower), v.name, fmt_num(v.upper)),
            (true, false) => writeln!(out, " {} >= {}", v.name, fmt_num(v.lower)),
            (false, true) => writeln!(out, " -inf <= {} <= {}", v.name, fmt_num(v.upper)),
            (false, false) => writeln!(out, " {} free", v.name),
        }
        .unwrap();
    }
    for (title, pick) in [("Binaries", true), ("Generals", false)] {
        let names: Vec<&str> = model.variables.iter().filter(|v| v.integer && v.is_binary() == pick).map(|v| v.name.as_str()).collect();
        if names.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{title}");
        for chunk in names.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

pub fn format_mps(model: &LpModel) -> String {
    let width = model.rows.iter().map(|r| r.name.len()).chain(model.variables.iter().map(|v| v.name.len())).max().unwrap_or(8).max(8);
    let mut out = format!("NAME          {}\n", model.name.replace(char::is_whitespace, "_"));
    out.push_str(&header(model, "*"));
    out.push_str("ROWS\n N  obj\n");
    for row in &model.rows {
        let t = match row.sense {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        };
        let _ = writeln!(out, " {t}  {}", row.name);
    }

    // Column-major entries, objective first.
    let mut entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.variables.len()];
    for &(v, c) in &model.objective {
        entries[v].push((usize::MAX, c));
    }
    for (r, row) in model.rows.iter().enumerate() {
        for &(v, c) in &row.expr {
            entries[v].push((r, c));
        }
    }
    let row_name = |r: usize| if r == usize::MAX { "obj" } else { model.rows[r].name.as_str() };

    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut markers = 0;
    for (v, var) in model.variables.iter().enumerate() {
        if var.integer != in_int {
            let kind = if var.integer { "INTORG" } else { "INTEND" };
            let _ = writeln!(out, "    {:<width$}  'MARKER'  '{kind}'", format!("M{markers}"));
            markers += 1;
            in_int = var.integer;
        }
        if entries[v].is_empty() {
            let _ = writeln!(out, "    {:<width$}  {:<width$}  0", var.name, "obj");
        }
        for &(r, c) in &entries[v] {
            let _ = writeln!(out, "    {:<width$}  {:<width$}  {}", var.name, row_name(r), fmt_num(c));
        }
    }
    if in_int {
        let _ = writeln!(out, "    {:<width$}  'MARKER'  'INTEND'", format!("M{markers}"));
    }

    out.push_str("RHS\n");
    for row in model.rows.iter().filter(|r| r.rhs != 0.0) {
        let _ = writeln!(out, "    {:<width$}  {:<width$}  {}", "RHS", row.name, fmt_num(row.rhs));
    }

    out.push_str("BOUNDS\n");
    for var in &model.variables {
        let mut line = |t: &str, value: Option<f64>| {
            let _ = write!(out, " {t} {:<width$}  {:<width$}", "BND", var.name);
            if let Some(v) = value {
                let _ = write!(out, "  {}", fmt_num(v));
            }
            out.push('\n');
        };
        if var.is_binary() {
            line("BV", None);
            continue;
        }
        match (var.lower, var.upper) {
            (l, u) if l == f64::NEG_INFINITY && u == f64::INFINITY => line("FR", None),
            (l, u) => {
                if l == f64::NEG_INFINITY {
                    line("MI", None);
                } else if l != 0.0 {
                    line("LO", Some(l));
                }
                if u.is_finite() {
                    line("UP", Some(u));
                } else if var.integer {
                    line("PL", None);
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

pub fn write_model(model: &LpModel, format: FileFormat, path: impl AsRef<Path>) -> Result<(), MilpError> {
    let text = match format {
        FileFormat::Lp => format_lp(model),
        FileFormat::Mps => format_mps(model),
    };
    fs::write(path, text)?;
    Ok(())
}

/// Reads an LP or MPS file, picking the dialect from the content.
pub fn read_model(path: impl AsRef<Path>) -> Result<LpModel, MilpError> {
    let text = fs::read_to_string(path)?;
    let first = text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('*') && !l.starts_with('\\'));
    match first {
        Some(l) if l.starts_with("NAME") || l == "ROWS" => parse_mps(&text),
        _ => parse_lp(&text),
    }
}

fn perr(line: usize, message: impl Into<String>) -> MilpError {
    MilpError::Parse { line, message: message.into() }
}

fn parse_num(line: usize, token: &str) -> Result<f64, MilpError> {
    match token.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => token.parse().map_err(|_| perr(line, format!("expected a number, found {token:?}"))),
    }
}

/// Metadata comment lines shared by both dialects.
fn apply_meta(model: &mut LpModel, text: &str) {
    if let Some((key, value)) = text.split_once(':') {
        let value = value.trim();
        match key.trim() {
            "model" => model.name = value.to_string(),
            "formulation" => {
                if let Some(f) = Formulation::from_label(value) {
                    model.formulation = f;
                }
            }
            "valid inequalities" => model.with_vi = value == "yes",
            _ => {}
        }
    }
}

fn var_or_new(model: &mut LpModel, name: &str) -> usize {
    match model.var(name) {
        Some(v) => v,
        None => model.add_variable(name.to_string(), 0.0, f64::INFINITY, false).unwrap(),
    }
}

#[derive(PartialEq)]
enum LpSection {
    None,
    Objective,
    Rows,
    Bounds,
    Integers { binary: bool },
    End,
}

/// Parses the LP dialect written by [`format_lp`]: tokens separated by
/// whitespace, one `name:` label per objective or row.
pub fn parse_lp(text: &str) -> Result<LpModel, MilpError> {
    let mut model = LpModel::new("", Formulation::TimeBased, false);
    let mut section = LpSection::None;
    // Statement being collected: label, terms, pending sign and coefficient.
    let mut label: Option<String> = None;
    let mut terms: LinExpr = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    let mut sense: Option<Sense> = None;
    let mut declared = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = raw.trim();
        if let Some(comment) = line.strip_prefix('\\') {
            apply_meta(&mut model, comment);
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let keyword = line.to_ascii_lowercase();
        let next = match keyword.as_str() {
            "minimize" | "minimum" | "min" => Some(LpSection::Objective),
            "maximize" | "maximum" | "max" => return Err(perr(ln, "only minimization models are supported")),
            "subject to" | "such that" | "st" | "s.t." => Some(LpSection::Rows),
            "bounds" => Some(LpSection::Bounds),
            "binaries" | "binary" => Some(LpSection::Integers { binary: true }),
            "generals" | "general" => Some(LpSection::Integers { binary: false }),
            "end" => Some(LpSection::End),
            _ => None,
        };
        if let Some(next) = next {
            if label.is_some() && section == LpSection::Objective {
                model.objective = std::mem::take(&mut terms);
                label = None;
            }
            if label.is_some() {
                return Err(perr(ln, "unfinished constraint before section header"));
            }
            section = next;
            continue;
        }

        match section {
            LpSection::None | LpSection::End => return Err(perr(ln, "text outside any section")),
            LpSection::Objective | LpSection::Rows => {
                for tok in line.split_whitespace() {
                    if let Some(name) = tok.strip_suffix(':') {
                        if label.is_some() {
                            return Err(perr(ln, format!("label {name} inside an expression")));
                        }
                        label = Some(name.to_string());
                        continue;
                    }
                    if label.is_none() {
                        return Err(perr(ln, format!("expected a label, found {tok:?}")));
                    }
                    match tok {
                        "+" => sign = 1.0,
                        "-" => sign = -1.0,
                        "<=" | "=<" => sense = Some(Sense::Le),
                        ">=" | "=>" => sense = Some(Sense::Ge),
                        "=" => sense = Some(Sense::Eq),
                        _ if sense.is_some() => {
                            let rhs = parse_num(ln, tok)?;
                            let name = label.take().unwrap();
                            model.add_row(name, std::mem::take(&mut terms), sense.take().unwrap(), rhs);
                            sign = 1.0;
                        }
                        _ => match tok.parse::<f64>() {
                            Ok(c) => coef = Some(c),
                            Err(_) => {
                                let v = var_or_new(&mut model, tok);
                                terms.push((v, sign * coef.take().unwrap_or(1.0)));
                                sign = 1.0;
                            }
                        },
                    }
                }
            }
            LpSection::Bounds => {
                let t: Vec<&str> = line.split_whitespace().collect();
                let (name, lower, upper) = match t.as_slice() {
                    [lo, "<=", name, "<=", up] => (*name, parse_num(ln, lo)?, parse_num(ln, up)?),
                    [name, ">=", lo] => (*name, parse_num(ln, lo)?, f64::INFINITY),
                    [name, "<=", up] => (*name, 0.0, parse_num(ln, up)?),
                    [name, "=", v] => (*name, parse_num(ln, v)?, parse_num(ln, v)?),
                    [name, "free"] => (*name, f64::NEG_INFINITY, f64::INFINITY),
                    _ => return Err(perr(ln, format!("unsupported bound {line:?}"))),
                };
                let v = var_or_new(&mut model, name);
                model.variables[v].lower = lower;
                model.variables[v].upper = upper;
                declared.push(v);
            }
            LpSection::Integers { binary } => {
                for name in line.split_whitespace() {
                    let v = var_or_new(&mut model, name);
                    let var = &mut model.variables[v];
                    var.integer = true;
                    if binary {
                        var.lower = 0.0;
                        var.upper = 1.0;
                    }
                }
            }
        }
    }
    if section != LpSection::End {
        return Err(perr(text.lines().count(), "missing End"));
    }
    Ok(reorder(model, &declared))
}

/// Puts the variables listed in `order` first, in that order.
fn reorder(model: LpModel, order: &[usize]) -> LpModel {
    let mut seen = vec![false; model.variables.len()];
    let mut perm = Vec::with_capacity(model.variables.len());
    for v in order.iter().copied().chain(0..model.variables.len()) {
        if !seen[v] {
            seen[v] = true;
            perm.push(v);
        }
    }
    if perm.iter().enumerate().all(|(i, &v)| i == v) {
        return model;
    }
    let mut new_index = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        new_index[old] = new;
    }
    let mut out = LpModel::new(model.name.clone(), model.formulation, model.with_vi);
    for &old in &perm {
        let v = &model.variables[old];
        out.add_variable(v.name.clone(), v.lower, v.upper, v.integer).unwrap();
    }
    let remap = |e: &LinExpr| e.iter().map(|&(v, c)| (new_index[v], c)).collect::<LinExpr>();
    out.objective = remap(&model.objective);
    for row in &model.rows {
        out.add_row(row.name.clone(), remap(&row.expr), row.sense, row.rhs);
    }
    out
}

/// Parses MPS as written by [`format_mps`]; fields are separated by
/// whitespace, so names longer than eight characters are fine.
pub fn parse_mps(text: &str) -> Result<LpModel, MilpError> {
    let mut model = LpModel::new("", Formulation::TimeBased, false);
    let mut section = "";
    let mut objective_row: Option<String> = None;
    let mut row_at = std::collections::HashMap::new();
    let mut pending: Vec<(String, Sense)> = Vec::new();
    let mut exprs: Vec<LinExpr> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut integer = false;

    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        if let Some(comment) = raw.strip_prefix('*') {
            apply_meta(&mut model, comment);
            continue;
        }
        if raw.trim().is_empty() {
            continue;
        }
        let t: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            section = match t[0] {
                "NAME" => {
                    model.name = t.get(1).unwrap_or(&"").to_string();
                    "NAME"
                }
                "ROWS" => "ROWS",
                "COLUMNS" => "COLUMNS",
                "RHS" => "RHS",
                "BOUNDS" => "BOUNDS",
                "RANGES" => return Err(perr(ln, "RANGES are not supported")),
                "OBJSENSE" => "OBJSENSE",
                "ENDATA" => break,
                other => return Err(perr(ln, format!("unknown section {other}"))),
            };
            continue;
        }
        match section {
            "ROWS" => {
                let [kind, name] = t.as_slice() else { return Err(perr(ln, "expected row type and name")) };
                let sense = match *kind {
                    "N" => {
                        objective_row.get_or_insert_with(|| name.to_string());
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    _ => return Err(perr(ln, format!("unknown row type {kind}"))),
                };
                row_at.insert(name.to_string(), pending.len());
                pending.push((name.to_string(), sense));
                exprs.push(Vec::new());
                rhs.push(0.0);
            }
            "COLUMNS" => {
                if t.get(1) == Some(&"'MARKER'") {
                    integer = match t.get(2) {
                        Some(&"'INTORG'") => true,
                        Some(&"'INTEND'") => false,
                        _ => return Err(perr(ln, "unknown marker")),
                    };
                    continue;
                }
                if t.len() != 3 && t.len() != 5 {
                    return Err(perr(ln, "expected column, row, value"));
                }
                let v = var_or_new(&mut model, t[0]);
                model.variables[v].integer = integer;
                for pair in t[1..].chunks(2) {
                    let value = parse_num(ln, pair[1])?;
                    if Some(pair[0]) == objective_row.as_deref() {
                        if value != 0.0 {
                            model.objective.push((v, value));
                        }
                    } else {
                        let &r = row_at.get(pair[0]).ok_or_else(|| perr(ln, format!("unknown row {}", pair[0])))?;
                        exprs[r].push((v, value));
                    }
                }
            }
            "RHS" => {
                if t.len() != 3 && t.len() != 5 {
                    return Err(perr(ln, "expected set, row, value"));
                }
                for pair in t[1..].chunks(2) {
                    let &r = row_at.get(pair[0]).ok_or_else(|| perr(ln, format!("unknown row {}", pair[0])))?;
                    rhs[r] = parse_num(ln, pair[1])?;
                }
            }
            "BOUNDS" => {
                if t.len() < 3 {
                    return Err(perr(ln, "expected type, set, column"));
                }
                let v = model.var(t[2]).ok_or_else(|| perr(ln, format!("unknown column {}", t[2])))?;
                let value = || t.get(3).ok_or_else(|| perr(ln, "missing bound value")).and_then(|s| parse_num(ln, s));
                let var = &mut model.variables[v];
                match t[0] {
                    "UP" => var.upper = value()?,
                    "LO" => var.lower = value()?,
                    "FX" => {
                        var.lower = value()?;
                        var.upper = var.lower;
                    }
                    "FR" => {
                        var.lower = f64::NEG_INFINITY;
                        var.upper = f64::INFINITY;
                    }
                    "MI" => var.lower = f64::NEG_INFINITY,
                    "PL" => var.upper = f64::INFINITY,
                    "BV" => {
                        var.integer = true;
                        var.lower = 0.0;
                        var.upper = 1.0;
                    }
                    other => return Err(perr(ln, format!("unsupported bound type {other}"))),
                }
            }
            "OBJSENSE" => {
                if t[0] != "MIN" && t[0] != "MINIMIZE" {
                    return Err(perr(ln, "only minimization models are supported"));
                }
            }
            _ => return Err(perr(ln, "data outside any section")),
        }
    }
    for (((name, sense), expr), rhs) in pending.into_iter().zip(exprs).zip(rhs) {
        model.add_row(name, expr, sense, rhs);
    }
    Ok(model)
}

/// Reads `<name> <value>` lines. Lines in the `<index> <name> <value> ...`
/// layout some solvers print are accepted too; anything else, such as
/// status headers, is skipped.
pub fn parse_values(text: &str) -> Assignment {
    let mut out = Assignment::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('*') || line.starts_with('\\') {
            continue;
        }
        let t: Vec<&str> = line.split_whitespace().collect();
        let pair = match t.as_slice() {
            [name, value] => Some((*name, *value)),
            [index, name, value, ..] if index.parse::<usize>().is_ok() => Some((*name, *value)),
            _ => None,
        };
        if let Some((name, value)) = pair {
            if let Ok(v) = value.parse::<f64>() {
                if name.parse::<f64>().is_err() {
                    out.insert(name.to_string(), v);
                }
            }
        }
    }
    out
}

pub fn read_values(path: impl AsRef<Path>) -> Result<Assignment, MilpError> {
    Ok(parse_values(&fs::read_to_string(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{generate, GenSpec};
    use crate::milp::{build, BuildOptions, Row};

    fn same_rows(a: &LpModel, b: &LpModel) {
        assert_eq!(a.rows.len(), b.rows.len());
        let names = |m: &LpModel, r: &Row| {
            let mut e: Vec<(String, f64)> = r.expr.iter().map(|&(v, c)| (m.variables[v].name.clone(), c)).collect();
            e.sort_by(|x, y| x.0.cmp(&y.0));
            e
        };
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!((&ra.name, ra.sense), (&rb.name, rb.sense));
            assert!(close(ra.rhs, rb.rhs), "{} rhs", ra.name);
            let (ea, eb) = (names(a, ra), names(b, rb));
            assert_eq!(ea.len(), eb.len(), "{}", ra.name);
            for (x, y) in ea.iter().zip(&eb) {
                assert_eq!(x.0, y.0);
                assert!(close(x.1, y.1), "{} {}", ra.name, x.0);
            }
        }
        assert_eq!(a.variables.len(), b.variables.len());
        for (va, vb) in a.variables.iter().zip(&b.variables) {
            assert_eq!((&va.name, va.integer), (&vb.name, vb.integer));
            assert!(close(va.lower, vb.lower) && close(va.upper, vb.upper), "{}", va.name);
        }
        assert_eq!((a.formulation, a.with_vi, &a.name), (b.formulation, b.with_vi, &b.name));
    }

    fn close(a: f64, b: f64) -> bool {
        a == b || (a - b).abs() <= 1e-8 * a.abs().max(1.0)
    }

    #[test]
    fn numbers_without_exponents() {
        assert_eq!(fmt_num(1234.5), "1234.5");
        assert_eq!(fmt_num(-0.000012345678912), "-0.0000123456789");
        assert_eq!(fmt_num(123456789012.0), "123456789012");
        assert_eq!(fmt_num(2.0 / 3.0), "0.666666667");
        assert_eq!(fmt_num(-1e-30 * 0.0), "0");
        assert!(!fmt_num(1e-7).contains('e'));
    }

    #[test]
    fn lp_round_trip_is_stable() {
        let inst = generate(&GenSpec::uniform(5, 2, 1, 2, 11)).unwrap();
        for f in Formulation::ALL {
            let m = build(&inst, f, BuildOptions { with_vi: true, ..Default::default() });
            let text = format_lp(&m);
            assert!(text.starts_with("\\ model:"));
            assert!(text.contains("\nMinimize\n"));
            let back = parse_lp(&text).unwrap();
            same_rows(&m, &back);
            assert_eq!(format_lp(&back), text);
        }
    }

    #[test]
    fn mps_round_trip() {
        let inst = generate(&GenSpec::uniform(5, 2, 2, 2, 12)).unwrap();
        for f in Formulation::ALL {
            let m = build(&inst, f, BuildOptions::default());
            let back = parse_mps(&format_mps(&m)).unwrap();
            same_rows(&m, &back);
        }
    }

    #[test]
    fn detects_dialect_from_content() {
        let inst = generate(&GenSpec::uniform(3, 1, 1, 1, 2)).unwrap();
        let m = build(&inst, Formulation::NodeBased, BuildOptions::default());
        let dir = tempfile::tempdir().unwrap();
        for format in [FileFormat::Lp, FileFormat::Mps] {
            let path = dir.path().join(format!("m.{}", format.extension()));
            write_model(&m, format, &path).unwrap();
            same_rows(&m, &read_model(&path).unwrap());
        }
    }

    #[test]
    fn small_file_names_rows_by_family() {
        let inst = crate::instance::tests::line_instance();
        let text = format_lp(&build(&inst, Formulation::TimeBased, BuildOptions { with_vi: true, ..Default::default() }));
        assert!(text.len() < 100_000);
        assert!(text.contains(" prec12_1_0:"));
        assert!(text.contains(" time9_0_1_0:"));
    }

    #[test]
    fn reads_value_dumps() {
        let text = "# objective 12\nx_0_1_0 1\nt_1_0 12.5\nOptimal - objective value 3\n      7 f_1_2_0   4   0\n";
        let a = parse_values(text);
        assert_eq!(a.len(), 3);
        assert_eq!(a["t_1_0"], 12.5);
        assert_eq!(a["f_1_2_0"], 4.0);
    }

    #[test]
    fn parse_errors_carry_lines() {
        let err = parse_lp("Minimize\n obj: x\nSubject To\n c1: x <= abc\nEnd\n").unwrap_err();
        assert!(matches!(err, MilpError::Parse { line: 4, .. }), "{err}");
        assert!(matches!(parse_mps("NAME a\nROWS\n Q  r\n"), Err(MilpError::Parse { line: 3, .. })));
    }
}
