//! Line-oriented text formats for instances and solutions.
//!
//! Instance files:
//!
//! ```text
//! NAME <string>
//! VEHICLES <K>
//! LMAX <decimal>
//! NODES <count>
//! <id> <DEPOT|TYPE1|TYPE2|KEY> <x> <y> <service_time> [<key center id>]
//! [MATRIX EXPLICIT
//! <one row per node>]
//! ```
//!
//! Solution files hold one `ROUTE <k>: ...` line per vehicle, with key visits
//! written as `P<c>` / `D<c>`, followed by `Z <decimal>` and
//! `LMAXUSED <decimal>`. `#` starts a comment in both formats.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::instance::{Instance, InstanceError, NodeKind, PhysicalNode, TravelSource};
use crate::solution::{Route, Solution, Visit};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse { line, message: message.into() }
}

/// Non-empty, comment-stripped lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

fn num<T: std::str::FromStr>(line: usize, token: Option<&str>, what: &str) -> Result<T, FormatError> {
    let token = token.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    token.parse().map_err(|_| parse_err(line, format!("invalid {what} '{token}'")))
}

pub fn parse_instance(text: &str) -> Result<Instance, FormatError> {
    let mut lines = content_lines(text).peekable();
    let mut name = None;
    let mut vehicles = None;
    let mut lmax = None;
    let mut count = None;
    while let Some(&(ln, line)) = lines.peek() {
        let mut tokens = line.split_whitespace();
        let head = tokens.next().unwrap_or_default();
        match head {
            "NAME" => name = Some(line[4..].trim().to_string()),
            "VEHICLES" => vehicles = Some(num::<usize>(ln, tokens.next(), "vehicle count")?),
            "LMAX" => lmax = Some(num::<f64>(ln, tokens.next(), "LMAX")?),
            "NODES" => {
                count = Some(num::<usize>(ln, tokens.next(), "node count")?);
                lines.next();
                break;
            }
            other => return Err(parse_err(ln, format!("unexpected header '{other}'"))),
        }
        lines.next();
    }
    let count = count.ok_or_else(|| parse_err(0, "missing NODES section"))?;
    let vehicles = vehicles.ok_or_else(|| parse_err(0, "missing VEHICLES"))?;
    let lmax = lmax.ok_or_else(|| parse_err(0, "missing LMAX"))?;

    let mut nodes = Vec::with_capacity(count);
    let mut key_of = BTreeMap::new();
    for _ in 0..count {
        let (ln, line) = lines.next().ok_or_else(|| parse_err(0, "fewer node lines than NODES declares"))?;
        let mut t = line.split_whitespace();
        let id: usize = num(ln, t.next(), "node id")?;
        let kind = match t.next() {
            Some("DEPOT") => NodeKind::Depot,
            Some("TYPE1") => NodeKind::TypeI,
            Some("TYPE2") => NodeKind::TypeII,
            Some("KEY") => NodeKind::KeyCenter,
            other => return Err(parse_err(ln, format!("unknown node kind {other:?}"))),
        };
        let x = num(ln, t.next(), "x")?;
        let y = num(ln, t.next(), "y")?;
        let service_time = num(ln, t.next(), "service time")?;
        if kind == NodeKind::TypeII {
            key_of.insert(id, num::<usize>(ln, t.next(), "key center id")?);
        }
        if let Some(extra) = t.next() {
            return Err(parse_err(ln, format!("unexpected token '{extra}'")));
        }
        nodes.push(PhysicalNode { id, kind, x, y, service_time });
    }

    let mut travel = TravelSource::RoundedEuclidean;
    if let Some((ln, line)) = lines.next() {
        if line.split_whitespace().collect::<Vec<_>>() != ["MATRIX", "EXPLICIT"] {
            return Err(parse_err(ln, format!("unexpected line '{line}'")));
        }
        let mut rows = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, line) = lines.next().ok_or_else(|| parse_err(ln, "matrix has too few rows"))?;
            let row = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| parse_err(ln, format!("invalid matrix entry '{t}'"))))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(parse_err(ln, "trailing content after matrix"));
        }
        travel = TravelSource::Explicit(rows);
    }
    Ok(Instance::new(name.unwrap_or_default(), nodes, key_of, vehicles, lmax, travel)?)
}

pub fn format_instance(instance: &Instance) -> String {
    let mut out = String::new();
    writeln!(out, "NAME {}", instance.name()).unwrap();
    writeln!(out, "VEHICLES {}", instance.num_vehicles()).unwrap();
    writeln!(out, "LMAX {}", instance.max_duration()).unwrap();
    writeln!(out, "NODES {}", instance.node_count()).unwrap();
    for n in instance.nodes() {
        write!(out, "{} {} {} {} {}", n.id, n.kind.tag(), n.x, n.y, n.service_time).unwrap();
        if let Some(c) = instance.center_of(n.id) {
            write!(out, " {c}").unwrap();
        }
        out.push('\n');
    }
    if let TravelSource::Explicit(rows) = instance.travel_source() {
        out.push_str("MATRIX EXPLICIT\n");
        for row in rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", cells.join(" ")).unwrap();
        }
    }
    out
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance, FormatError> {
    parse_instance(&fs::read_to_string(path)?)
}

pub fn write_instance(instance: &Instance, path: impl AsRef<Path>) -> Result<(), FormatError> {
    fs::write(path, format_instance(instance))?;
    Ok(())
}

fn parse_visit(instance: &Instance, ln: usize, token: &str) -> Result<Visit, FormatError> {
    let (visit, id) = if let Some(rest) = token.strip_prefix('P') {
        let c: usize = num(ln, Some(rest), "pickup center")?;
        (Visit::KeyPickup(c), c)
    } else if let Some(rest) = token.strip_prefix('D') {
        let c: usize = num(ln, Some(rest), "delivery center")?;
        (Visit::KeyDelivery(c), c)
    } else {
        let i: usize = num(ln, Some(token), "node id")?;
        (Visit::Demand(i), i)
    };
    if id >= instance.node_count() {
        return Err(parse_err(ln, format!("unknown node id {id}")));
    }
    let kind = instance.kind(id);
    let fits = match visit {
        Visit::Demand(_) => kind.is_demand(),
        _ => kind == NodeKind::KeyCenter,
    };
    if !fits {
        return Err(parse_err(ln, format!("visit '{token}' does not match node kind {kind:?}")));
    }
    Ok(visit)
}

/// Parse a solution against its instance. Route durations and totals are
/// recomputed; the stored `Z` / `LMAXUSED` lines are only syntax-checked.
pub fn parse_solution(instance: &Instance, text: &str) -> Result<Solution, FormatError> {
    let mut routes = Vec::new();
    for (ln, line) in content_lines(text) {
        if let Some(rest) = line.strip_prefix("ROUTE") {
            let (label, body) = rest.split_once(':').ok_or_else(|| parse_err(ln, "ROUTE line without ':'"))?;
            let k: usize = num(ln, Some(label.trim()), "route number")?;
            if k != routes.len() + 1 {
                return Err(parse_err(ln, format!("expected ROUTE {}, found ROUTE {k}", routes.len() + 1)));
            }
            let visits = body.split_whitespace().map(|t| parse_visit(instance, ln, t)).collect::<Result<Vec<_>, _>>()?;
            routes.push(Route::new(instance, visits));
        } else {
            let mut t = line.split_whitespace();
            match t.next() {
                Some("Z") => {
                    num::<f64>(ln, t.next(), "Z")?;
                }
                Some("LMAXUSED") => {
                    num::<f64>(ln, t.next(), "LMAXUSED")?;
                }
                _ => return Err(parse_err(ln, format!("unexpected line '{line}'"))),
            }
        }
    }
    Ok(Solution::from_routes(routes))
}

pub fn format_solution(solution: &Solution) -> String {
    let mut out = String::new();
    for (k, route) in solution.routes.iter().enumerate() {
        write!(out, "ROUTE {}:", k + 1).unwrap();
        for v in &route.visits {
            write!(out, " {v}").unwrap();
        }
        out.push('\n');
    }
    writeln!(out, "Z {:.2}", solution.z).unwrap();
    writeln!(out, "LMAXUSED {:.2}", solution.l).unwrap();
    out
}

pub fn read_solution(instance: &Instance, path: impl AsRef<Path>) -> Result<Solution, FormatError> {
    parse_solution(instance, &fs::read_to_string(path)?)
}

pub fn write_solution(solution: &Solution, path: impl AsRef<Path>) -> Result<(), FormatError> {
    fs::write(path, format_solution(solution))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# toy
NAME toy
VEHICLES 2
LMAX 250.5
NODES 5
0 DEPOT 0 0 0
1 TYPE1 10 0 20
2 TYPE2 0 10 25 3
3 KEY 5 5 30
4 TYPE1 3 4 40
";

    #[test]
    fn instance_round_trip() {
        let inst = parse_instance(SAMPLE).unwrap();
        assert_eq!(inst.name(), "toy");
        assert_eq!(inst.num_vehicles(), 2);
        assert_eq!(inst.max_duration(), 250.5);
        assert_eq!(inst.center_of(2), Some(3));
        assert_eq!(inst.c(0, 4), 5.0);
        let text = format_instance(&inst);
        let again = parse_instance(&text).unwrap();
        assert_eq!(format_instance(&again), text);
    }

    #[test]
    fn explicit_matrix_round_trip() {
        let text = "NAME m\nVEHICLES 1\nLMAX 10\nNODES 2\n0 DEPOT 0 0 0\n1 TYPE1 0 0 1\nMATRIX EXPLICIT\n0 2.5\n2.5 0\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.c(0, 1), 2.5);
        assert_eq!(format_instance(&inst), text);
    }

    #[test]
    fn instance_errors() {
        assert!(matches!(parse_instance("NAME x\nVEHICLES 1\nLMAX 1\n"), Err(FormatError::Parse { .. })));
        let bad_kind = SAMPLE.replace("TYPE1 10", "TYPEX 10");
        assert!(matches!(parse_instance(&bad_kind), Err(FormatError::Parse { line: 7, .. })));
        let bad_center = SAMPLE.replace("25 3", "25 1");
        assert!(matches!(parse_instance(&bad_center), Err(FormatError::Instance(InstanceError::NotAKeyCenter { .. }))));
    }

    #[test]
    fn solution_round_trip() {
        let inst = parse_instance(SAMPLE).unwrap();
        let text = "ROUTE 1: P3 2 D3 1\nROUTE 2: 4\nZ 0\nLMAXUSED 0\n";
        let sol = parse_solution(&inst, text).unwrap();
        assert_eq!(sol.routes[0].visits, vec![Visit::KeyPickup(3), Visit::Demand(2), Visit::KeyDelivery(3), Visit::Demand(1)]);
        let written = format_solution(&sol);
        assert_eq!(parse_solution(&inst, &written).unwrap(), sol);
        assert!(written.contains("ROUTE 2: 4\n"));
    }

    #[test]
    fn solution_errors() {
        let inst = parse_instance(SAMPLE).unwrap();
        for bad in ["ROUTE 1: 9\n", "ROUTE 1: P1\n", "ROUTE 1: 3\n", "ROUTE 2: 1\n", "ROUTE 1 1\n", "BOGUS\n"] {
            assert!(parse_solution(&inst, bad).is_err(), "{bad}");
        }
    }
}
