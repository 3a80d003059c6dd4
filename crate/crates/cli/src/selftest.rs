//! The invariant battery behind `finmf selftest`.

use std::time::Instant;

use finmf_core::char_table::character_table;
use finmf_core::engine::{EngineError, ErrorKind, Method};
use finmf_core::surfaces::{count_bundles, relation_sweep};
use finmf_core::{Cut, CycloNumber, Engine, LabelVector, MarkedSurface};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::output::Report;

/// Surfaces exercised by counts, completeness and route agreement.
pub const BATTERY: [(usize, usize); 4] = [(0, 1), (0, 2), (0, 3), (1, 1)];

enum Outcome {
    Pass(Value),
    Skipped(String),
    Fail(Value),
}

/// Cap errors skip a check; anything else fails it.
fn outcome(result: Result<Value, EngineError>) -> Outcome {
    match result {
        Ok(v) => Outcome::Pass(v),
        Err(e) if e.kind() == ErrorKind::Cap => Outcome::Skipped(e.to_string()),
        Err(e) => Outcome::Fail(json!({ "message": e.to_string(), "details": e.payload() })),
    }
}

fn fail(check: &str, details: Value) -> EngineError {
    EngineError::Violation { check: check.into(), payload: details }
}

fn surf(g: usize, n: usize) -> MarkedSurface {
    MarkedSurface::new(g, n).expect("battery surfaces are valid")
}

pub fn run(engine: &Engine, timings: bool) -> Result<Report, CliError> {
    type Check = fn(&Engine) -> Result<Value, EngineError>;
    let checks: [(&str, Check); 14] = [
        ("group_invariants", group_invariants),
        ("character_tables", character_tables),
        ("double_labels", double_labels),
        ("double_orthonormality", orthonormality),
        ("fusion_axioms", fusion_axioms),
        ("duality", duality),
        ("bundle_counts", bundle_counts),
        ("rho_relations", rho_relations),
        ("gluing_torus", gluing_torus),
        ("gluing_four_points", gluing_four_points),
        ("torus_dimension", torus_dimension),
        ("decomposition_completeness", completeness),
        ("modular_data", modular),
        ("route_agreement", route_agreement),
    ];
    let mut results = Vec::new();
    let mut failed = Vec::new();
    let mut text = String::new();
    for (name, check) in checks {
        let start = Instant::now();
        let result = outcome(check(engine));
        let elapsed = start.elapsed();
        let (status, detail) = match result {
            Outcome::Pass(v) => ("pass", v),
            Outcome::Skipped(reason) => ("skipped", json!({ "reason": reason })),
            Outcome::Fail(v) => {
                failed.push(name);
                ("fail", v)
            }
        };
        let mut entry = json!({ "check": name, "status": status, "detail": detail });
        text.push_str(&format!("{status:>7}  {name}"));
        if timings {
            let ms = elapsed.as_secs_f64() * 1e3;
            entry["millis"] = json!(format!("{ms:.1}"));
            text.push_str(&format!("  ({ms:.1} ms)"));
        }
        text.push('\n');
        results.push(entry);
    }
    let g = engine.group();
    let report = json!({
        "group": g.name().map_or_else(|| format!("order-{}", g.order()), str::to_string),
        "order": g.order(),
        "label_count": engine.double().len(),
        "passed": failed.is_empty(),
        "checks": results,
    });
    if !failed.is_empty() {
        return Err(CliError::violation(format!("selftest failed: {}", failed.join(", ")), report));
    }
    let rows = results
        .iter()
        .map(|r| vec![r["check"].as_str().unwrap_or("").to_string(), r["status"].as_str().unwrap_or("").to_string()])
        .collect();
    Ok(Report::new(report, text).with_table(&["check", "status"], rows))
}

fn group_invariants(e: &Engine) -> Result<Value, EngineError> {
    let g = e.group();
    g.check_invariants().map_err(|m| fail("group invariants", json!(m)))?;
    Ok(json!({ "order": g.order(), "classes": g.classes().len() }))
}

fn character_tables(e: &Engine) -> Result<Value, EngineError> {
    let g = e.group();
    let mut subgroups = vec![(**g).clone()];
    for cent in &g.classes().centralizer {
        let (sub, _) = g.subgroup(cent).map_err(|err| fail("centralizer subgroup", json!(err.to_string())))?;
        subgroups.push(sub);
    }
    for sub in &subgroups {
        let table = character_table(sub).map_err(|err| fail("character table", json!(err.to_string())))?;
        table
            .verify(&sub.classes().inverse_class)
            .map_err(|err| fail("orthogonality", json!({ "order": sub.order(), "error": err.to_string() })))?;
        let square_sum: usize = table.degrees.iter().map(|d| d * d).sum();
        if square_sum != sub.order() {
            return Err(fail("degree square sum", json!({ "order": sub.order(), "sum": square_sum })));
        }
    }
    Ok(json!({ "tables": subgroups.len() }))
}

fn double_labels(e: &Engine) -> Result<Value, EngineError> {
    let d = e.double();
    let g = e.group();
    let n = g.order();
    let square_sum: usize = d.labels().iter().map(|l| l.dim * l.dim).sum();
    // label count = Σ over classes of the number of centralizer classes
    let expected: usize = g
        .classes()
        .centralizer
        .iter()
        .map(|c| d.group().subgroup(c).map(|(s, _)| s.classes().len()).unwrap_or(0))
        .sum();
    if square_sum != n * n || d.len() != expected {
        return Err(fail(
            "double labels",
            json!({ "labels": d.len(), "expected": expected, "dim_square_sum": square_sum }),
        ));
    }
    Ok(json!({ "labels": d.len(), "dim_square_sum": square_sum }))
}

fn orthonormality(e: &Engine) -> Result<Value, EngineError> {
    let d = e.double();
    for a in 0..d.len() {
        for b in 0..d.len() {
            let ip = d.inner_product(d.orbit_character(a), d.orbit_character(b))?;
            let expected = CycloNumber::from_integer(ip.conductor(), i64::from(a == b));
            if ip != expected {
                return Err(fail("character orthonormality", json!({ "a": a, "b": b, "value": ip.to_string() })));
            }
        }
    }
    Ok(json!({ "pairs": d.len() * d.len() }))
}

fn fusion_axioms(e: &Engine) -> Result<Value, EngineError> {
    let d = e.double();
    let k = d.len();
    let nf = d.fusion_table()?;
    let dims: Vec<u64> = d.labels().iter().map(|l| l.dim as u64).collect();
    for a in 0..k {
        if (0..k).any(|c| nf[0][a][c] != u64::from(a == c)) {
            return Err(fail("fusion unit", json!({ "label": a })));
        }
        for b in 0..k {
            if nf[a][b] != nf[b][a] {
                return Err(fail("fusion commutativity", json!({ "a": a, "b": b })));
            }
            let dim: u64 = (0..k).map(|c| nf[a][b][c] * dims[c]).sum();
            if dim != dims[a] * dims[b] {
                return Err(fail("fusion dimensions", json!({ "a": a, "b": b })));
            }
            for c in 0..k {
                for x in 0..k {
                    let left: u64 = (0..k).map(|m| nf[a][b][m] * nf[m][c][x]).sum();
                    let right: u64 = (0..k).map(|m| nf[b][c][m] * nf[a][m][x]).sum();
                    if left != right {
                        return Err(fail("fusion associativity", json!({ "a": a, "b": b, "c": c, "x": x })));
                    }
                }
            }
        }
    }
    Ok(json!({ "labels": k }))
}

fn duality(e: &Engine) -> Result<Value, EngineError> {
    let d = e.double();
    let nf = d.fusion_table()?;
    let self_dual = (0..d.len()).filter(|&l| d.dual_index(l) == l).count();
    for a in 0..d.len() {
        let dual = d.dual_index(a);
        if d.dual_index(dual) != a || d.labels()[dual].dim != d.labels()[a].dim {
            return Err(fail("duality involution", json!({ "label": a, "dual": dual })));
        }
        for b in 0..d.len() {
            if nf[a][b][0] != u64::from(b == dual) {
                return Err(fail("duality pairing", json!({ "a": a, "b": b })));
            }
        }
    }
    Ok(json!({ "self_dual": self_dual }))
}

fn bundle_counts(e: &Engine) -> Result<Value, EngineError> {
    let g = e.group();
    let mut counts = Vec::new();
    for (genus, n) in BATTERY {
        let count = count_bundles(g, &surf(genus, n), e.caps().count)?;
        let expected = (g.order() as u64).pow((2 * genus + 2 * n - 2) as u32);
        if count != expected {
            return Err(fail(
                "bundle count",
                json!({ "genus": genus, "points": n, "count": count, "expected": expected }),
            ));
        }
        counts.push(json!({ "genus": genus, "points": n, "count": count }));
    }
    Ok(Value::Array(counts))
}

fn rho_relations(e: &Engine) -> Result<Value, EngineError> {
    let g = e.group();
    let mut done = Vec::new();
    for (genus, n) in [(0, 2), (1, 1)] {
        let checks = relation_sweep(g, &surf(genus, n), e.caps().count)?;
        done.push(json!({ "genus": genus, "points": n, "identities": checks }));
    }
    Ok(Value::Array(done))
}

fn gluing_torus(e: &Engine) -> Result<Value, EngineError> {
    let torus = surf(1, 1);
    let mut lhs = Vec::new();
    for l in 0..e.double().len() {
        lhs.push(e.verify_gluing(&LabelVector::simple(torus.clone(), &[l])?, &Cut::NonSeparating)?.lhs);
    }
    Ok(json!({ "dims": lhs }))
}

fn gluing_four_points(e: &Engine) -> Result<Value, EngineError> {
    let split = Cut::Separating { genus: 0, subset: vec!["p1".into(), "p2".into()] };
    let r = e.verify_gluing(&LabelVector::vacuum(surf(0, 4)), &split)?;
    Ok(json!({ "dim": r.lhs, "orbits": r.bundles.orbits }))
}

/// Vacuum on the one-holed torus against a Burnside count of conjugation
/// orbits on commuting pairs.
fn torus_dimension(e: &Engine) -> Result<Value, EngineError> {
    let g = e.group();
    let n = g.order();
    let mut fixed = 0usize;
    for x in 0..n {
        let cent: Vec<usize> = (0..n).filter(|&y| g.commute(x, y)).collect();
        for &a in &cent {
            for &b in &cent {
                if g.commute(a, b) {
                    fixed += 1;
                }
            }
        }
    }
    let burnside = (fixed / n) as u64;
    let dim = e.dim_w(&LabelVector::vacuum(surf(1, 1)), Method::Auto)?.value;
    if dim != burnside || !fixed.is_multiple_of(n) {
        return Err(fail("torus dimension", json!({ "dim": dim, "burnside": fixed as f64 / n as f64 })));
    }
    Ok(json!({ "dim": dim }))
}

fn completeness(e: &Engine) -> Result<Value, EngineError> {
    let mut out = Vec::new();
    for (genus, n) in BATTERY {
        let t = e.decomposition_table(&surf(genus, n))?;
        out.push(json!({ "genus": genus, "points": n, "bundles": t.bundle_count.to_string(), "square_sum": t.square_sum.to_string() }));
    }
    Ok(Value::Array(out))
}

fn modular(e: &Engine) -> Result<Value, EngineError> {
    let md = e.modular_data()?;
    let torus = e.verlinde_dim(1, &[])?;
    if torus != md.len() as u64 {
        return Err(fail("verlinde torus", json!({ "dim": torus, "labels": md.len() })));
    }
    Ok(json!({ "labels": md.len(), "st_cube_scalar": md.st_cube_scalar.to_string() }))
}

fn route_agreement(e: &Engine) -> Result<Value, EngineError> {
    let k = e.double().len();
    let mut instances = 0usize;
    for (genus, n) in BATTERY {
        let x = surf(genus, n);
        e.dim_w(&LabelVector::vacuum(x.clone()), Method::All)?;
        instances += 1;
        if n == 1 {
            for l in 0..k {
                e.dim_w(&LabelVector::simple(x.clone(), &[l])?, Method::Auto)?;
                instances += 1;
            }
        }
    }
    Ok(json!({ "instances": instances }))
}
