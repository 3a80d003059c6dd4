use std::sync::Arc;

use finmf_core::char_table::character_table;
use finmf_core::engine::{Caps, DecompositionTable, GluingDimReport, LabelCombo, Method};
use finmf_core::surfaces::{count_bundles, cut_surface, enumerate_bundles, grade_histogram};
use finmf_core::{Engine, FiniteGroup, LabelVector, MarkedSurface};
use serde_json::{json, Value};

use crate::cache::TableCache;
use crate::error::CliError;
use crate::output::Report;
use crate::parse::{combo_name, load_group, parse_cut, parse_labels};
use crate::{Cli, Command, CommonArgs, SurfaceArgs};

pub(crate) fn dispatch(cli: &Cli) -> Result<Report, CliError> {
    let common = &cli.common;
    let group = Arc::new(load_group(&common.group, common.order_cap as usize)?);
    let cache = common.cache_dir.as_deref().map(TableCache::new);
    if let Some(c) = &cache {
        c.preload(&group)?;
    }
    let report = match &cli.command {
        Command::Group { table } => group_report(&group, *table)?,
        Command::Bundles { surface, count_only, list } => bundles_report(common, &group, surface, *count_only, *list)?,
        other => {
            let engine = Engine::new(group.clone(), caps(common))?;
            match other {
                Command::Double { fusion } => double_report(&engine, *fusion)?,
                Command::Dims { surface, labels, method, table } => {
                    dims_report(&engine, surface, labels.as_deref(), method, *table)?
                }
                Command::GlueCheck { surface, cut, labels, all_labels } => {
                    glue_report(&engine, surface, cut, labels.as_deref(), *all_labels)?
                }
                Command::Modular => modular_report(&engine)?,
                Command::Verlinde { genus, labels } => verlinde_report(&engine, *genus, labels)?,
                Command::Selftest { timings } => crate::selftest::run(&engine, *timings)?,
                Command::Group { .. } | Command::Bundles { .. } => unreachable!("handled above"),
            }
        }
    };
    if let Some(c) = &cache {
        c.persist(&group)?;
    }
    Ok(report)
}

pub fn caps(common: &CommonArgs) -> Caps {
    Caps { count: common.state_cap, materialize: common.materialize_cap, grid: common.grid_cap }
}

fn group_name(g: &FiniteGroup) -> String {
    g.name().map_or_else(|| format!("order-{}", g.order()), str::to_string)
}

fn surface(args: &SurfaceArgs) -> Result<MarkedSurface, CliError> {
    Ok(MarkedSurface::new(args.genus, args.points)?)
}

fn surface_json(x: &MarkedSurface) -> Value {
    json!({ "genus": x.genus(), "points": x.boundary_count(), "boundary_names": x.boundary_names() })
}

fn group_report(g: &FiniteGroup, with_table: bool) -> Result<Report, CliError> {
    let info = g.classes();
    let table = character_table(g)?;
    let reps: Vec<String> = info.representative.iter().map(|&r| g.element_name(r).to_string()).collect();
    let classes: Vec<Value> = (0..info.len())
        .map(|c| {
            json!({
                "index": c,
                "representative": reps[c],
                "size": info.class_size(c),
                "element_order": g.element_order(info.representative[c]),
                "centralizer_order": info.centralizer[c].len(),
                "inverse_class": info.inverse_class[c],
            })
        })
        .collect();
    let mut j = json!({
        "name": group_name(g),
        "order": g.order(),
        "exponent": g.exponent(),
        "abelian": g.is_abelian(),
        "digest": g.digest_hex(),
        "classes": classes,
        "character_table": table.to_file(&reps),
    });
    if with_table {
        j["mul"] = json!(g.mul_table());
    }
    let mut text =
        format!("{} (order {}, exponent {}), {} classes\n", group_name(g), g.order(), g.exponent(), info.len());
    text.push_str(&format!("degrees: {:?}\n", table.degrees));
    for c in 0..info.len() {
        let row: Vec<String> = (0..table.len()).map(|r| table.value(r, c).to_string()).collect();
        text.push_str(&format!("[{}] size {}: {}\n", reps[c], info.class_size(c), row.join(", ")));
    }
    let rows = (0..info.len())
        .map(|c| {
            vec![
                c.to_string(),
                reps[c].clone(),
                info.class_size(c).to_string(),
                g.element_order(info.representative[c]).to_string(),
                info.centralizer[c].len().to_string(),
            ]
        })
        .collect();
    Ok(Report::new(j, text)
        .with_table(&["class", "representative", "size", "element_order", "centralizer_order"], rows))
}

fn double_report(engine: &Engine, with_fusion: bool) -> Result<Report, CliError> {
    let d = engine.double();
    let labels: Vec<Value> = d
        .labels()
        .iter()
        .map(|l| {
            json!({
                "index": l.index,
                "name": d.label_name(l),
                "class": l.class_index,
                "irrep": l.cent_irrep_index,
                "dim": l.dim,
                "dual": d.dual_index(l.index),
            })
        })
        .collect();
    let square_sum: usize = d.labels().iter().map(|l| l.dim * l.dim).sum();
    let mut j = json!({
        "group": group_name(d.group()),
        "order": d.group().order(),
        "label_count": d.len(),
        "dim_square_sum": square_sum,
        "labels": labels,
    });
    if with_fusion {
        let table = d.fusion_table()?;
        let mut records = Vec::new();
        for (a, row) in table.iter().enumerate() {
            for (b, col) in row.iter().enumerate() {
                for (c, &n) in col.iter().enumerate() {
                    if n > 0 {
                        records.push(json!([a, b, c, n]));
                    }
                }
            }
        }
        j["fusion"] = Value::Array(records);
    }
    let mut text = format!("D({}): {} labels, sum of dim^2 = {}\n", group_name(d.group()), d.len(), square_sum);
    for l in d.labels() {
        text.push_str(&format!("{:>3}  {}  dual {}\n", l.index, d.label_name(l), d.dual_index(l.index)));
    }
    let rows = d
        .labels()
        .iter()
        .map(|l| vec![l.index.to_string(), d.label_name(l), l.dim.to_string(), d.dual_index(l.index).to_string()])
        .collect();
    Ok(Report::new(j, text).with_table(&["index", "name", "dim", "dual"], rows))
}

fn bundles_report(
    common: &CommonArgs,
    g: &FiniteGroup,
    args: &SurfaceArgs,
    count_only: bool,
    list: bool,
) -> Result<Report, CliError> {
    let x = surface(args)?;
    if count_only {
        let count = count_bundles(g, &x, common.state_cap)?;
        return Ok(Report::new(json!({ "count": count }), format!("{count} bundles on {x}")));
    }
    let hist = grade_histogram(g, &x, common.state_cap)?;
    let count: u64 = hist.values().sum();
    let names = |m: &[usize]| -> Vec<String> { m.iter().map(|&e| g.element_name(e).to_string()).collect() };
    let grades: Vec<Value> = hist.iter().map(|(m, &c)| json!({ "monodromies": names(m), "count": c })).collect();
    let mut j = json!({ "count": count, "grade_histogram": grades });
    let mut text = format!("{count} bundles on {x}\n");
    for (m, c) in &hist {
        text.push_str(&format!("{}: {c}\n", names(m).join(" ")));
    }
    if list {
        let tuples = enumerate_bundles(g, &x, common.materialize_cap)?;
        j["tuples"] = serde_json::to_value(&tuples).expect("serializable");
    }
    let rows = hist.iter().map(|(m, c)| vec![names(m).join(" "), c.to_string()]).collect();
    Ok(Report::new(j, text).with_table(&["monodromies", "count"], rows))
}

fn labels_or_vacuum(engine: &Engine, x: &MarkedSurface, labels: Option<&str>) -> Result<LabelVector, CliError> {
    match labels {
        None => Ok(LabelVector::vacuum(x.clone())),
        Some(text) => {
            let combos = parse_labels(engine.double(), text)?;
            Ok(LabelVector::new(x.clone(), combos)?)
        }
    }
}

fn names(engine: &Engine, combos: &[LabelCombo]) -> Vec<String> {
    combos.iter().map(|c| combo_name(engine.double(), c)).collect()
}

fn dims_report(
    engine: &Engine,
    args: &SurfaceArgs,
    labels: Option<&str>,
    method: &str,
    table: bool,
) -> Result<Report, CliError> {
    let x = surface(args)?;
    let method: Method = method.parse()?;
    if table {
        return Ok(table_report(engine, &engine.decomposition_table(&x)?));
    }
    let lv = labels_or_vacuum(engine, &x, labels)?;
    let r = engine.dim_w(&lv, method)?;
    let label_names = names(engine, &lv.labels);
    let j = json!({
        "group": group_name(engine.group()),
        "surface": surface_json(&x),
        "labels": label_names,
        "method": method,
        "routes": { "enumeration": r.enumeration, "characters": r.characters, "verlinde": r.verlinde },
        "dim": r.value,
    });
    let text = format!("dim W({x}; {}) = {}", label_names.join(", "), r.value);
    Ok(Report::new(j, text))
}

fn table_report(engine: &Engine, t: &DecompositionTable) -> Report {
    let d = engine.double();
    let name = |l: usize| d.label_name(&d.labels()[l]);
    let entries: Vec<Value> = t
        .entries
        .iter()
        .map(|(ls, &v)| json!({ "labels": ls.iter().map(|&l| name(l)).collect::<Vec<_>>(), "indices": ls, "dim": v }))
        .collect();
    let j = json!({
        "group": group_name(engine.group()),
        "surface": surface_json(&t.surface),
        "entries": entries,
        "weighted_sum": t.weighted_sum.to_string(),
        "bundle_count": t.bundle_count.to_string(),
        "square_sum": t.square_sum.to_string(),
        "character_norm": t.character_norm.to_string(),
    });
    let mut text = format!("decomposition of E{}: {} nonzero entries\n", t.surface, t.entries.len());
    for (ls, v) in &t.entries {
        text.push_str(&format!("{:?}: {v}\n", ls));
    }
    text.push_str(&format!(
        "sum (prod dim) * dim W = {} = |P|; sum dim W^2 = {} = <chi_E, chi_E>\n",
        t.weighted_sum, t.square_sum
    ));
    let rows = t
        .entries
        .iter()
        .map(|(ls, v)| vec![ls.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" "), v.to_string()])
        .collect();
    Report::new(j, text).with_table(&["labels", "dim"], rows)
}

fn glue_json(engine: &Engine, r: &GluingDimReport) -> Value {
    let d = engine.double();
    json!({
        "labels": names(engine, &r.labels),
        "lhs": r.lhs,
        "rhs": r.rhs,
        "contributions": r.contributions.iter().map(|c| json!({ "label": d.label_name(&d.labels()[c.label]), "dim": c.dim })).collect::<Vec<_>>(),
    })
}

fn glue_report(
    engine: &Engine,
    args: &SurfaceArgs,
    cut_text: &str,
    labels: Option<&str>,
    all: bool,
) -> Result<Report, CliError> {
    let x = surface(args)?;
    let cut = parse_cut(cut_text)?;
    let pieces = cut_surface(&x, &cut)?;
    let vectors: Vec<LabelVector> = if all {
        let k = engine.double().len();
        let n = x.boundary_count();
        let total = (k as u64)
            .checked_pow(n as u32)
            .filter(|&t| t <= engine.caps().materialize)
            .ok_or_else(|| CliError::Cap(format!("{k}^{n} label assignments exceed the materialization cap")))?;
        (0..total)
            .map(|mut i| {
                let mut ls = vec![0usize; n];
                for slot in ls.iter_mut().rev() {
                    *slot = (i % k as u64) as usize;
                    i /= k as u64;
                }
                LabelVector::simple(x.clone(), &ls)
            })
            .collect::<Result<_, _>>()?
    } else {
        vec![labels_or_vacuum(engine, &x, labels)?]
    };
    let reports: Vec<GluingDimReport> =
        vectors.iter().map(|lv| engine.verify_gluing(lv, &cut)).collect::<Result<_, _>>()?;
    let bundles = &reports[0].bundles;
    let j = json!({
        "group": group_name(engine.group()),
        "surface": surface_json(&x),
        "cut": cut_text,
        "pieces": pieces.pieces.iter().map(surface_json).collect::<Vec<_>>(),
        "new_boundaries": [pieces.first_name(), pieces.second_name()],
        "bundles": {
            "count": bundles.bundles,
            "matching": bundles.matching,
            "orbits": bundles.orbits,
            "invariants": bundles.invariants,
            "invariants_swapped": bundles.invariants_swapped,
        },
        "results": reports.iter().map(|r| glue_json(engine, r)).collect::<Vec<_>>(),
    });
    let mut text = format!(
        "cut {x} along {cut_text}: |P| = {} = orbits {} = invariants {} / {}\n",
        bundles.bundles, bundles.orbits, bundles.invariants, bundles.invariants_swapped
    );
    for r in &reports {
        text.push_str(&format!("{}: {} = {}\n", names(engine, &r.labels).join(", "), r.lhs, r.rhs));
    }
    let rows = reports
        .iter()
        .map(|r| vec![names(engine, &r.labels).join(" | "), r.lhs.to_string(), r.rhs.to_string()])
        .collect();
    Ok(Report::new(j, text).with_table(&["labels", "lhs", "rhs"], rows))
}

fn modular_report(engine: &Engine) -> Result<Report, CliError> {
    let md = engine.modular_data()?;
    let d = engine.double();
    let label_names: Vec<String> = md.labels.iter().map(|l| d.label_name(l)).collect();
    let j = json!({
        "group": group_name(engine.group()),
        "labels": label_names,
        "S": md.s,
        "T": md.t,
        "charge_conjugation": md.charge_conjugation,
        "st_cube_scalar": md.st_cube_scalar,
    });
    let mut text = format!("modular data of D({}), {} labels\n", group_name(engine.group()), md.len());
    for (i, name) in label_names.iter().enumerate() {
        let row: Vec<String> = md.s[i].iter().map(ToString::to_string).collect();
        text.push_str(&format!("{name}: T = {}; S row = [{}]\n", md.t[i], row.join(", ")));
    }
    let rows = (0..md.len())
        .map(|i| {
            let mut row = vec![label_names[i].clone(), md.t[i].to_string()];
            row.extend(md.s[i].iter().map(ToString::to_string));
            row
        })
        .collect();
    let mut header = vec!["label".to_string(), "T".to_string()];
    header.extend((0..md.len()).map(|j| format!("S{j}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    Ok(Report::new(j, text).with_table(&header_refs, rows))
}

fn verlinde_report(engine: &Engine, genus: usize, labels: &str) -> Result<Report, CliError> {
    let combos = parse_labels(engine.double(), labels)?;
    let dim = engine.verlinde_dim(genus, &combos)?;
    let label_names = names(engine, &combos);
    let j = json!({
        "group": group_name(engine.group()),
        "genus": genus,
        "labels": label_names,
        "dim": dim,
    });
    Ok(Report::new(j, format!("Verlinde dimension at genus {genus} with {} labels: {dim}", label_names.len())))
}
