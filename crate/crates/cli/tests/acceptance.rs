//! Acceptance battery: one PASS/FAIL line per criterion; exits nonzero if
//! any failed. Runs without the libtest harness so the lines always show. Each criterion checks library output against an
//! oracle computed here.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use finmf_core::engine::{DecompositionTable, Method};
use finmf_core::group::standard_presets;
use finmf_core::surfaces::{count_bundles, enumerate_bundles, relation_sweep, rho_action, BundleTuple};
use finmf_core::{
    character_table, preset_group, Caps, Cut, CycloNumber, Engine, FiniteGroup, LabelVector, MarkedSurface, Preset,
};

type Outcome = Result<String, String>;

const BATTERY: [(usize, usize); 4] = [(0, 1), (0, 2), (0, 3), (1, 1)];

fn group(p: Preset) -> Arc<FiniteGroup> {
    Arc::new(preset_group(&p).unwrap())
}

fn engine(p: Preset) -> Engine {
    Engine::new(group(p), Caps::default()).unwrap()
}

fn surf(g: usize, n: usize) -> MarkedSurface {
    MarkedSurface::new(g, n).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn z2() -> Preset {
    Preset::Cyclic(2)
}

fn s3() -> Preset {
    Preset::Symmetric(3)
}

/// All index vectors in `0..k` of length `n`, lexicographic.
fn vectors(k: usize, n: usize) -> Vec<Vec<usize>> {
    (0..n).fold(vec![vec![]], |acc, _| {
        acc.into_iter().flat_map(|v| (0..k).map(move |x| [v.clone(), vec![x]].concat())).collect()
    })
}

/// Every full tuple (a, b, s, m₁..m_n) satisfying
/// m₁ · Π s_j m_j s_j⁻¹ · Π [a_i, b_i] = e, by brute force.
fn brute_force_count(g: &FiniteGroup, genus: usize, n: usize) -> u64 {
    let width = 2 * genus + (n - 1) + n;
    let mut count = 0;
    for v in vectors(g.order(), width) {
        let (a, rest) = v.split_at(genus);
        let (b, rest) = rest.split_at(genus);
        let (s, m) = rest.split_at(n - 1);
        let mut acc = m[0];
        for j in 1..n {
            acc = g.mul(acc, g.conj(s[j - 1], m[j]));
        }
        for i in 0..genus {
            acc = g.mul(acc, g.commutator(a[i], b[i]));
        }
        if acc == g.identity() {
            count += 1;
        }
    }
    count
}

/// The ρ-action written out from its definition, boundary `i` from 1.
fn rho_oracle(g: &FiniteGroup, t: &BundleTuple, i: usize, x: usize) -> BundleTuple {
    let mut out = t.clone();
    if i == 1 {
        for y in out.a.iter_mut().chain(out.b.iter_mut()) {
            *y = g.conj(x, *y);
        }
        for y in out.s.iter_mut() {
            *y = g.mul(x, *y);
        }
        out.m[0] = g.conj(x, t.m[0]);
    } else {
        out.s[i - 2] = g.mul(t.s[i - 2], g.inv(x));
        out.m[i - 1] = g.conj(x, t.m[i - 1]);
    }
    out
}

/// ⟨χ_E, χ_E⟩ by Burnside: (1/|G|ⁿ) Σ over g⃗ and gradings of fixed-point
/// counts squared, with the combined action built from `rho_oracle`.
fn character_norm_oracle(g: &FiniteGroup, x: &MarkedSurface) -> u128 {
    let n = x.boundary_count();
    let bundles = enumerate_bundles(g, x, 1 << 24).unwrap();
    let mut total = 0u128;
    for act in vectors(g.order(), n) {
        let mut fixed: BTreeMap<Vec<usize>, u128> = BTreeMap::new();
        for t in &bundles {
            let image = (1..=n).fold(t.clone(), |acc, i| rho_oracle(g, &acc, i, act[i - 1]));
            if &image == t {
                *fixed.entry(t.m.clone()).or_insert(0) += 1;
            }
        }
        total += fixed.values().map(|c| c * c).sum::<u128>();
    }
    let scale = (g.order() as u128).pow(n as u32);
    assert_eq!(total % scale, 0, "Burnside sum not divisible");
    total / scale
}

/// Conjugation orbits on commuting pairs, by Burnside.
fn commuting_pair_orbits(g: &FiniteGroup) -> u64 {
    let n = g.order();
    let mut fixed = 0;
    for x in 0..n {
        let cent: Vec<usize> = (0..n).filter(|&y| g.commute(x, y)).collect();
        for &a in &cent {
            fixed += cent.iter().filter(|&&b| g.commute(a, b)).count();
        }
    }
    assert_eq!(fixed % n, 0);
    (fixed / n) as u64
}

fn criterion_1() -> Outcome {
    let presets = [z2(), Preset::Cyclic(3), s3(), Preset::Dihedral(4), Preset::Quaternion8];
    let mut checked = 0;
    for p in presets {
        let g = group(p);
        for (genus, n) in BATTERY {
            let count = count_bundles(&g, &surf(genus, n), u64::MAX).map_err(|e| e.to_string())?;
            let law = (g.order() as u64).pow((2 * genus + 2 * n - 2) as u32);
            let brute = brute_force_count(&g, genus, n);
            ensure(count == law && brute == law, || {
                format!("{} ({genus},{n}): {count} vs {law} vs brute {brute}", g.order())
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} counts match |G|^(2g+2n-2) and brute force"))
}

fn criterion_2() -> Outcome {
    let mut identities = 0;
    for p in [z2(), s3()] {
        let g = group(p);
        for (genus, n) in [(0, 2), (1, 1)] {
            let x = surf(genus, n);
            identities += relation_sweep(&g, &x, u64::MAX).map_err(|e| e.to_string())?;
            for t in enumerate_bundles(&g, &x, u64::MAX).unwrap() {
                for i in 1..=n {
                    for e in 0..g.order() {
                        let got = rho_action(&g, &x, &t, i, e).unwrap();
                        ensure(got == rho_oracle(&g, &t, i, e), || format!("rho_{i}({e}) on {t:?}"))?;
                    }
                }
            }
        }
    }
    Ok(format!("{identities} identities, actions match the defining formulas"))
}

/// Both orthogonality relations, evaluated here with exact arithmetic.
fn orthogonality(g: &FiniteGroup) -> Result<(), String> {
    let t = character_table(g).map_err(|e| e.to_string())?;
    let info = g.classes();
    let k = t.len();
    ensure(k == info.len(), || "table is not square".into())?;
    let c = t.conductor;
    let int = |v: i64| CycloNumber::from_integer(c, v);
    for i in 0..k {
        for j in 0..k {
            let row = (0..k)
                .fold(int(0), |acc, cl| acc + int(info.class_size(cl) as i64) * t.value(i, cl) * t.value(j, cl).conj());
            ensure(row == int(if i == j { g.order() as i64 } else { 0 }), || {
                format!("row {i},{j} of order {}", g.order())
            })?;
            let col = (0..k).fold(int(0), |acc, r| acc + t.value(r, i) * t.value(r, j).conj());
            let expect = if i == j { info.centralizer[i].len() as i64 } else { 0 };
            ensure(col == int(expect), || format!("column {i},{j} of order {}", g.order()))?;
        }
    }
    let squares: usize = t.degrees.iter().map(|d| d * d).sum();
    ensure(squares == g.order(), || format!("degree squares {squares} != {}", g.order()))
}

fn criterion_3() -> Outcome {
    let mut tables = 0;
    for p in standard_presets() {
        let g = group(p);
        orthogonality(&g)?;
        tables += 1;
        for cent in &g.classes().centralizer {
            orthogonality(&g.subgroup(cent).unwrap().0)?;
            tables += 1;
        }
    }
    Ok(format!("{tables} tables pass both orthogonality relations"))
}

fn criterion_4() -> Outcome {
    for (p, expected) in [(z2(), 4), (s3(), 8), (Preset::Dihedral(4), 22), (Preset::Quaternion8, 22)] {
        let e = engine(p);
        let d = e.double();
        let n = e.group().order();
        let k = d.len();
        ensure(k == expected && expected as u64 == commuting_pair_orbits(e.group()), || {
            format!("order {n}: {k} labels")
        })?;
        let squares: usize = d.labels().iter().map(|l| l.dim * l.dim).sum();
        ensure(squares == n * n, || format!("order {n}: dim squares {squares}"))?;
        for a in 0..k {
            for b in 0..k {
                let ip = d.inner_product(d.orbit_character(a), d.orbit_character(b)).unwrap();
                ensure(ip == CycloNumber::from_integer(ip.conductor(), i64::from(a == b)), || {
                    format!("<{a},{b}> = {ip}")
                })?;
            }
        }
        let nf = d.fusion_table().map_err(|e| e.to_string())?;
        let dims: Vec<u64> = d.labels().iter().map(|l| l.dim as u64).collect();
        for a in 0..k {
            ensure((0..k).all(|c| nf[0][a][c] == u64::from(a == c)), || format!("vacuum is not a unit at {a}"))?;
            for b in 0..k {
                ensure(nf[a][b] == nf[b][a], || format!("{a}*{b} not commutative"))?;
                let dim: u64 = (0..k).map(|c| nf[a][b][c] * dims[c]).sum();
                ensure(dim == dims[a] * dims[b], || format!("dim({a}*{b})"))?;
                let chi = d.tensor_character(d.orbit_character(a), d.orbit_character(b)).unwrap();
                ensure(d.decompose(&chi).unwrap() == nf[a][b], || format!("fusion {a}*{b} disagrees with characters"))?;
                for c in 0..k {
                    for x in 0..k {
                        let l: u64 = (0..k).map(|m| nf[a][b][m] * nf[m][c][x]).sum();
                        let r: u64 = (0..k).map(|m| nf[b][c][m] * nf[a][m][x]).sum();
                        ensure(l == r, || format!("({a}*{b})*{c} at {x}"))?;
                    }
                }
            }
        }
    }
    Ok("label counts 4/8/22/22, orthonormal, fusion ring axioms".into())
}

fn tables(e: &Engine) -> Result<BTreeMap<(usize, usize), DecompositionTable>, String> {
    BATTERY
        .iter()
        .map(|&(g, n)| e.decomposition_table(&surf(g, n)).map(|t| ((g, n), t)).map_err(|err| err.to_string()))
        .collect()
}

fn criterion_5() -> Outcome {
    let mut done = 0;
    for p in [z2(), s3()] {
        let e = engine(p);
        let g = e.group();
        let n = g.order() as u128;
        for ((genus, points), t) in tables(&e)? {
            let x = surf(genus, points);
            let dims: Vec<u128> = e.double().labels().iter().map(|l| l.dim as u128).collect();
            let weighted: u128 =
                t.entries.iter().map(|(ls, &w)| ls.iter().map(|&l| dims[l]).product::<u128>() * w as u128).sum();
            let law = n.pow((2 * genus + 2 * points - 2) as u32);
            ensure(weighted == law && t.weighted_sum == law, || {
                format!("({genus},{points}) weighted {weighted} vs {law}")
            })?;
            let squares: u128 = t.entries.values().map(|&w| (w as u128).pow(2)).sum();
            let norm = character_norm_oracle(g, &x);
            ensure(squares == norm && t.character_norm == norm, || {
                format!("({genus},{points}) squares {squares} vs norm {norm}")
            })?;
            done += 1;
        }
    }
    Ok(format!("{done} surfaces: both completeness sums exact"))
}

fn criterion_6() -> Outcome {
    let mut checks = 0;
    for p in [z2(), s3()] {
        let e = engine(p);
        let d = e.double();
        let k = d.len();
        let n = e.group().order() as u64;
        let t03 = e.decomposition_table(&surf(0, 3)).map_err(|e| e.to_string())?;
        let t04 = e.decomposition_table(&surf(0, 4)).map_err(|e| e.to_string())?;
        let t11 = e.decomposition_table(&surf(1, 1)).map_err(|e| e.to_string())?;
        let torus = surf(1, 1);
        for l in 0..k {
            let r = e
                .verify_gluing(&LabelVector::simple(torus.clone(), &[l]).unwrap(), &Cut::NonSeparating)
                .map_err(|e| e.to_string())?;
            let b = &r.bundles;
            ensure(
                b.bundles == n * n
                    && b.orbits == b.bundles
                    && b.invariants == b.bundles
                    && b.invariants_swapped == b.bundles,
                || format!("torus bundles {b:?}"),
            )?;
            let oracle: u64 = (0..k).map(|m| t03.get(&[l, m, d.dual_index(m)])).sum();
            ensure(r.lhs == r.rhs && r.lhs == oracle && r.lhs == t11.get(&[l]), || {
                format!("torus label {l}: {} {} {oracle}", r.lhs, r.rhs)
            })?;
            checks += 1;
        }
        let split = Cut::Separating { genus: 0, subset: vec!["p1".into(), "p2".into()] };
        let four = surf(0, 4);
        let samples = [vec![0, 0, 0, 0], vec![1, 1, 0, 0], vec![k - 1, d.dual_index(k - 1), 1, 1]];
        for ls in &samples {
            let r =
                e.verify_gluing(&LabelVector::simple(four.clone(), ls).unwrap(), &split).map_err(|e| e.to_string())?;
            let b = &r.bundles;
            ensure(
                b.bundles == n.pow(6)
                    && b.orbits == b.bundles
                    && b.invariants == b.bundles
                    && b.invariants_swapped == b.bundles,
                || format!("four-point bundles {b:?}"),
            )?;
            ensure(r.lhs == r.rhs, || format!("four-point {ls:?}: {} vs {}", r.lhs, r.rhs))?;
            checks += 1;
        }
        for ls in vectors(k, 4) {
            let sum: u64 =
                (0..k).map(|m| t03.get(&[ls[0], ls[1], m]) * t03.get(&[d.dual_index(m), ls[2], ls[3]])).sum();
            ensure(t04.get(&ls) == sum, || format!("four-point {ls:?}: {} vs {sum}", t04.get(&ls)))?;
            checks += 1;
        }
    }
    Ok(format!("{checks} gluing identities"))
}

fn criterion_7() -> Outcome {
    for (p, torus) in [(z2(), 4), (s3(), 8)] {
        let e = engine(p);
        let d = e.double();
        let disk = e.decomposition_table(&surf(0, 1)).unwrap();
        ensure(disk.entries == BTreeMap::from([(vec![0], 1)]), || format!("disk {:?}", disk.entries))?;
        let annulus = e.decomposition_table(&surf(0, 2)).unwrap();
        let expected: BTreeMap<Vec<usize>, u64> = (0..d.len()).map(|m| (vec![m, d.dual_index(m)], 1)).collect();
        ensure(annulus.entries == expected, || format!("annulus {:?}", annulus.entries))?;
        let dim = e.dim_w(&LabelVector::vacuum(surf(1, 1)), Method::All).map_err(|e| e.to_string())?.value;
        let burnside = commuting_pair_orbits(e.group());
        ensure(dim == torus && burnside == torus, || format!("torus {dim}, Burnside {burnside}"))?;
    }
    Ok("disk, annulus and torus spot values".into())
}

fn criterion_8() -> Outcome {
    let mut groups = 0;
    for p in standard_presets() {
        let e = engine(p);
        let d = e.double();
        let md = e.modular_data().map_err(|e| e.to_string())?;
        let k = md.len();
        let s = &md.s;
        let c = s[0][0].conductor();
        let int = |v: i64| CycloNumber::from_integer(c, v);
        let n = e.group().order() as i64;
        ensure(md.t[0] == int(1), || "T_vacuum != 1".into())?;
        let matmul = |a: &Vec<Vec<CycloNumber>>, b: &Vec<Vec<CycloNumber>>| -> Vec<Vec<CycloNumber>> {
            (0..k).map(|i| (0..k).map(|j| (0..k).fold(int(0), |acc, x| acc + &a[i][x] * &b[x][j])).collect()).collect()
        };
        let sdag: Vec<Vec<CycloNumber>> = (0..k).map(|i| (0..k).map(|j| s[j][i].conj()).collect()).collect();
        let unit = matmul(s, &sdag);
        let square = matmul(s, s);
        for i in 0..k {
            ensure(s[0][i] == int(d.labels()[i].dim as i64) * int(n).inv().unwrap(), || format!("S_0{i}"))?;
            for j in 0..k {
                ensure(s[i][j] == s[j][i], || format!("S not symmetric at {i},{j}"))?;
                ensure(unit[i][j] == int(i64::from(i == j)), || format!("S not unitary at {i},{j}"))?;
                ensure(square[i][j] == int(i64::from(j == d.dual_index(i))), || format!("S^2 != C at {i},{j}"))?;
            }
        }
        let st: Vec<Vec<CycloNumber>> = (0..k).map(|i| (0..k).map(|j| &s[i][j] * &md.t[j]).collect()).collect();
        let cube = matmul(&matmul(&st, &st), &st);
        let scalar = cube[0][0].clone();
        ensure(!scalar.is_zero(), || "(ST)^3 vanishes".into())?;
        for i in 0..k {
            for j in 0..k {
                ensure(cube[i][j] == &scalar * &square[i][j], || format!("(ST)^3 not proportional to S^2 at {i},{j}"))?;
            }
        }
        // Verlinde coefficients in integer form through the scaled matrix X = N²S.
        let f = d.field();
        let lcm = d.labels().iter().fold(1i128, |acc, l| num_lcm(acc, l.dim as i128));
        let nf = d.fusion_table().unwrap();
        let x = |a: usize, b: usize| md.scaled_s(a, b);
        let xconj: Vec<Vec<_>> = (0..k).map(|a| (0..k).map(|b| f.int_conj(x(a, b)).unwrap()).collect()).collect();
        for a in 0..k {
            for b in 0..k {
                let weighted: Vec<_> = (0..k)
                    .map(|m| {
                        let mut w = f.int_zero();
                        f.int_scale_add(&mut w, lcm / d.labels()[m].dim as i128, &f.int_mul(x(a, m), x(b, m)).unwrap())
                            .unwrap();
                        w
                    })
                    .collect();
                for target in 0..k {
                    let mut acc = f.int_zero();
                    for m in 0..k {
                        f.int_mul_add(&mut acc, &weighted[m], &xconj[target][m]).unwrap();
                    }
                    let expect = f.int_from(nf[a][b][target] as i128 * (n as i128).pow(5) * lcm);
                    ensure(acc == expect, || format!("Verlinde N_{a}{b}^{target}"))?;
                    ensure(md.verlinde_fusion[a][b][target] == nf[a][b][target], || {
                        format!("stored Verlinde N_{a}{b}^{target}")
                    })?;
                }
            }
        }
        let torus = e.verlinde_dim(1, &[]).map_err(|e| e.to_string())?;
        ensure(torus == k as u64, || format!("verlinde torus {torus} vs {k}"))?;
        groups += 1;
    }
    Ok(format!("{groups} presets: all modular axioms"))
}

fn num_lcm(a: i128, b: i128) -> i128 {
    let (mut x, mut y) = (a, b);
    while y != 0 {
        (x, y) = (y, x % y);
    }
    a / x * b
}

fn criterion_9() -> Outcome {
    let mut agreed = 0;
    for p in [z2(), s3()] {
        let e = engine(p);
        let k = e.double().len();
        for ((genus, points), t) in tables(&e)? {
            let x = surf(genus, points);
            for ls in vectors(k, points) {
                let lv = LabelVector::simple(x.clone(), &ls).unwrap();
                let chars = e.dim_characters(&lv).map_err(|e| e.to_string())?;
                let verlinde = e.verlinde_dim(genus, &lv.labels).map_err(|e| e.to_string())?;
                ensure(chars == verlinde && chars == t.get(&ls), || {
                    format!("({genus},{points}) {ls:?}: {chars} vs {verlinde}")
                })?;
                agreed += 1;
            }
        }
        let four = surf(0, 4);
        let t04 = e.decomposition_table(&four).map_err(|e| e.to_string())?;
        for ls in vectors(k, 4) {
            let lv = LabelVector::simple(four.clone(), &ls).unwrap();
            let verlinde = e.verlinde_dim(0, &lv.labels).map_err(|e| e.to_string())?;
            ensure(verlinde == t04.get(&ls), || format!("(0,4) {ls:?}"))?;
            agreed += 1;
        }
        e.dim_w(&LabelVector::vacuum(surf(1, 1)), Method::All).map_err(|e| e.to_string())?;
    }
    Ok(format!("{agreed} instances agree"))
}

fn criterion_10() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_finmf");
    let commands: [&[&str]; 5] = [
        &["modular", "--group", "preset:S3"],
        &["dims", "--group", "preset:S3", "--genus", "0", "--points", "3", "--table"],
        &[
            "glue-check",
            "--group",
            "preset:S3",
            "--genus",
            "1",
            "--points",
            "1",
            "--cut",
            "nonseparating",
            "--all-labels",
        ],
        &["double", "--group", "preset:D4", "--fusion"],
        &["bundles", "--group", "preset:Q8", "--genus", "1", "--points", "1"],
    ];
    for args in commands {
        let mut outputs = Vec::new();
        for threads in ["1", "2", "3", "8", "1"] {
            let out = Command::new(bin).args(args).args(["--threads", threads]).output().map_err(|e| e.to_string())?;
            ensure(out.status.success(), || format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr)))?;
            outputs.push(out.stdout);
        }
        ensure(outputs.windows(2).all(|w| w[0] == w[1]), || format!("{args:?} output varies"))?;
    }
    Ok(format!("{} commands byte-identical across thread counts", commands.len()))
}

fn main() {
    let criteria: [fn() -> Outcome; 10] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
    ];
    let mut failed = Vec::new();
    for (i, criterion) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(criterion)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {}: PASS ({secs:.2} s) {detail}", i + 1),
            Err(why) => {
                println!("criterion {}: FAIL ({secs:.2} s) {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
