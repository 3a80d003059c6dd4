//! Marked surfaces, marked `G`-bundles and the module `E(Xᵐ)`.
//!
//! A connected surface of genus `g` with `n ≥ 1` marked boundary points is
//! presented by its fundamental groupoid based at the marked points: loops
//! `a_i, b_i` at `p₁`, transporters `s_j : p₁ → p_j` for `j ≥ 2` and boundary
//! loops `m_j` at `p_j`, subject to
//!
//! ```text
//! m₁ · Π_{j≥2} s_j m_j s_j⁻¹ · Π_i [a_i, b_i] = e,   [a, b] = a b a⁻¹ b⁻¹.
//! ```
//!
//! Isomorphism classes of marked bundles are the tuples of free coordinates
//! `(a, b, s, m₂..m_n)`, with `m₁` solved from the relation. Tuples are
//! indexed lexicographically by their free coordinates, most significant
//! first.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::double::DrinfeldDouble;
use crate::group::FiniteGroup;

/// Default cap for streamed (counting-only) enumeration.
pub const DEFAULT_COUNT_CAP: u64 = 100_000_000;
/// Default cap for enumeration that stores every tuple.
pub const DEFAULT_MATERIALIZE_CAP: u64 = 1_000_000;

const CHUNK: u64 = 1 << 12;

#[derive(Debug, Clone, Error)]
pub enum SurfaceError {
    #[error("{what} needs {needed} states, cap is {cap}")]
    CapExceeded { what: String, needed: String, cap: u64 },
    #[error("boundary index {index} out of range 1..={count}")]
    BoundaryIndex { index: usize, count: usize },
    #[error("invalid surface: {0}")]
    InvalidSurface(String),
    #[error("invalid cut: {0}")]
    InvalidCut(String),
    #[error("invalid bundle tuple: {0}")]
    InvalidTuple(String),
    #[error("gluing check failed: {0}")]
    GluingMismatch(serde_json::Value),
    #[error("rho relation failed: {0}")]
    RelationViolated(serde_json::Value),
}

impl SurfaceError {
    pub fn is_cap(&self) -> bool {
        matches!(self, SurfaceError::CapExceeded { .. })
    }
}

/// A connected oriented surface with one marked point per boundary circle.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct MarkedSurface {
    genus: usize,
    boundary_names: Vec<String>,
}

impl MarkedSurface {
    /// Boundary names default to `p1, …, pn`.
    pub fn new(genus: usize, points: usize) -> Result<MarkedSurface, SurfaceError> {
        MarkedSurface::with_names(genus, (1..=points).map(|i| format!("p{i}")).collect())
    }

    pub fn with_names(genus: usize, boundary_names: Vec<String>) -> Result<MarkedSurface, SurfaceError> {
        if boundary_names.is_empty() {
            return Err(SurfaceError::InvalidSurface("at least one marked boundary point is required".into()));
        }
        for (i, name) in boundary_names.iter().enumerate() {
            if boundary_names[..i].contains(name) {
                return Err(SurfaceError::InvalidSurface(format!("duplicate boundary name `{name}`")));
            }
        }
        Ok(MarkedSurface { genus, boundary_names })
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary_names.len()
    }

    pub fn boundary_names(&self) -> &[String] {
        &self.boundary_names
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.boundary_names.iter().position(|b| b == name)
    }

    pub fn euler_characteristic(&self) -> i64 {
        2 - 2 * self.genus as i64 - self.boundary_count() as i64
    }
}

impl fmt::Display for MarkedSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(g={}, n={})", self.genus, self.boundary_count())
    }
}

/// One marked bundle, as group-element indices. `s[j]` is the transporter to
/// boundary `j + 2`; `m[i]` is the monodromy at boundary `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct BundleTuple {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub s: Vec<usize>,
    pub m: Vec<usize>,
}

impl BundleTuple {
    /// Monodromy at boundary `i`, counted from 1.
    pub fn monodromy(&self, i: usize) -> Result<usize, SurfaceError> {
        if i == 0 || i > self.m.len() {
            return Err(SurfaceError::BoundaryIndex { index: i, count: self.m.len() });
        }
        Ok(self.m[i - 1])
    }
}

/// The tuple set `P(Xᵐ)` for a group and surface type.
#[derive(Clone, Copy)]
pub struct BundleSpace<'g> {
    group: &'g FiniteGroup,
    genus: usize,
    points: usize,
}

impl<'g> BundleSpace<'g> {
    pub fn new(group: &'g FiniteGroup, surface: &MarkedSurface) -> BundleSpace<'g> {
        BundleSpace { group, genus: surface.genus, points: surface.boundary_count() }
    }

    pub fn free_len(&self) -> usize {
        2 * self.genus + 2 * (self.points - 1)
    }

    /// `N^(2g+2n−2)`, or `None` on overflow.
    pub fn size(&self) -> Option<u64> {
        (self.group.order() as u64).checked_pow(self.free_len() as u32)
    }

    fn checked_size(&self, cap: u64, what: &str) -> Result<u64, SurfaceError> {
        check_cap(self.group.order(), self.free_len() as u32, 1, cap, what)
    }

    fn s_offset(&self) -> usize {
        2 * self.genus
    }

    fn m_offset(&self) -> usize {
        2 * self.genus + self.points - 1
    }

    /// `m₁` for free coordinates `d`.
    fn first_monodromy(&self, d: &[usize]) -> usize {
        let g = self.group;
        let (so, mo) = (self.s_offset(), self.m_offset());
        let mut prod = 0;
        for j in 0..self.points - 1 {
            prod = g.mul(prod, g.conj(d[so + j], d[mo + j]));
        }
        for i in 0..self.genus {
            prod = g.mul(prod, g.commutator(d[i], d[self.genus + i]));
        }
        g.inv(prod)
    }

    fn monodromy_at(&self, d: &[usize], m1: usize, i: usize) -> usize {
        if i == 0 {
            m1
        } else {
            d[self.m_offset() + i - 1]
        }
    }

    pub fn tuple(&self, d: &[usize]) -> BundleTuple {
        let (g, so, mo) = (self.genus, self.s_offset(), self.m_offset());
        let mut m = Vec::with_capacity(self.points);
        m.push(self.first_monodromy(d));
        m.extend_from_slice(&d[mo..]);
        BundleTuple { a: d[..g].to_vec(), b: d[g..2 * g].to_vec(), s: d[so..mo].to_vec(), m }
    }

    pub fn digits(&self, t: &BundleTuple) -> Vec<usize> {
        let mut d = Vec::with_capacity(self.free_len());
        d.extend_from_slice(&t.a);
        d.extend_from_slice(&t.b);
        d.extend_from_slice(&t.s);
        d.extend_from_slice(&t.m[1..]);
        d
    }

    pub fn decode(&self, mut index: u64) -> BundleTuple {
        let n = self.group.order() as u64;
        let mut d = vec![0usize; self.free_len()];
        for slot in d.iter_mut().rev() {
            *slot = (index % n) as usize;
            index /= n;
        }
        self.tuple(&d)
    }

    pub fn encode(&self, t: &BundleTuple) -> u64 {
        let n = self.group.order() as u64;
        self.digits(t).iter().fold(0, |acc, &x| acc * n + x as u64)
    }

    /// Checks shapes, element ranges and the surface relation.
    pub fn validate(&self, t: &BundleTuple) -> Result<(), SurfaceError> {
        let n = self.group.order();
        if t.a.len() != self.genus
            || t.b.len() != self.genus
            || t.s.len() + 1 != self.points
            || t.m.len() != self.points
        {
            return Err(SurfaceError::InvalidTuple(format!("expected shape (g={}, n={})", self.genus, self.points)));
        }
        if t.a.iter().chain(&t.b).chain(&t.s).chain(&t.m).any(|&x| x >= n) {
            return Err(SurfaceError::InvalidTuple("element index out of range".into()));
        }
        if self.first_monodromy(&self.digits(t)) != t.m[0] {
            return Err(SurfaceError::InvalidTuple("surface relation violated".into()));
        }
        Ok(())
    }

    /// `ρ_i(g)`, boundary `i` counted from 1.
    pub fn rho(&self, t: &BundleTuple, i: usize, x: usize) -> Result<BundleTuple, SurfaceError> {
        if i == 0 || i > self.points {
            return Err(SurfaceError::BoundaryIndex { index: i, count: self.points });
        }
        let g = self.group;
        let mut out = t.clone();
        if i == 1 {
            out.a.iter_mut().chain(out.b.iter_mut()).for_each(|y| *y = g.conj(x, *y));
            out.s.iter_mut().for_each(|y| *y = g.mul(x, *y));
            out.m[0] = g.conj(x, t.m[0]);
        } else {
            out.s[i - 2] = g.mul(t.s[i - 2], g.inv(x));
            out.m[i - 1] = g.conj(x, t.m[i - 1]);
        }
        Ok(out)
    }

    /// Whether `ρ₁(act₁)⋯ρ_n(act_n)` fixes the tuple with free coordinates `d`.
    fn fixes(&self, d: &[usize], m1: usize, act: &[usize]) -> bool {
        let g = self.group;
        let g1 = act[0];
        if !d[..2 * self.genus].iter().all(|&x| g.commute(g1, x)) || !g.commute(g1, m1) {
            return false;
        }
        let (so, mo) = (self.s_offset(), self.m_offset());
        (0..self.points - 1).all(|j| {
            let (s, m, gj) = (d[so + j], d[mo + j], act[j + 1]);
            g.mul(g.mul(g1, s), g.inv(gj)) == s && g.commute(gj, m)
        })
    }

    /// Elements `g₁` for which some `ρ`-action with first component `g₁`
    /// fixes the tuple; the other components are then `s_j⁻¹ g₁ s_j`.
    fn stabilizer(&self, d: &[usize], m1: usize, out: &mut Vec<usize>) {
        let g = self.group;
        let (so, mo) = (self.s_offset(), self.m_offset());
        out.clear();
        out.extend((0..g.order()).filter(|&x| {
            d[..2 * self.genus].iter().all(|&y| g.commute(x, y))
                && g.commute(x, m1)
                && (0..self.points - 1).all(|j| g.commute(g.conj(g.inv(d[so + j]), x), d[mo + j]))
        }));
    }
}

fn check_cap(base: usize, exponent: u32, factor: u64, cap: u64, what: &str) -> Result<u64, SurfaceError> {
    let needed = (base as u128).checked_pow(exponent).and_then(|x| x.checked_mul(factor as u128));
    match needed {
        Some(x) if x <= cap as u128 => Ok(x as u64),
        Some(x) => Err(SurfaceError::CapExceeded { what: what.into(), needed: x.to_string(), cap }),
        None => {
            Err(SurfaceError::CapExceeded { what: what.into(), needed: format!("{base}^{exponent}*{factor}"), cap })
        }
    }
}

/// Streams every digit vector of `base^width` through `body` in parallel
/// chunks, folding per-chunk state and merging by `merge`.
fn par_scan<T, I, B, M>(base: usize, width: usize, init: I, body: B, merge: M) -> T
where
    T: Send,
    I: Fn() -> T + Sync + Send,
    B: Fn(&mut T, &[usize]) + Sync + Send,
    M: Fn(T, T) -> T + Sync + Send,
{
    let total = (base as u64).pow(width as u32);
    let chunks = total.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(total);
            let mut digits = vec![0usize; width];
            let mut rest = start;
            for slot in digits.iter_mut().rev() {
                *slot = (rest % base as u64) as usize;
                rest /= base as u64;
            }
            let mut acc = init();
            for _ in start..end {
                body(&mut acc, &digits);
                for slot in digits.iter_mut().rev() {
                    *slot += 1;
                    if *slot < base {
                        break;
                    }
                    *slot = 0;
                }
            }
            acc
        })
        .reduce(&init, &merge)
}

fn merge_counts<K: std::hash::Hash + Eq>(mut x: HashMap<K, u64>, y: HashMap<K, u64>) -> HashMap<K, u64> {
    if x.len() < y.len() {
        return merge_counts(y, x);
    }
    for (k, v) in y {
        *x.entry(k).or_insert(0) += v;
    }
    x
}

fn add_vectors(mut x: Vec<u64>, y: Vec<u64>) -> Vec<u64> {
    x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
    x
}

/// All bundles in lexicographic order of their free coordinates.
pub fn enumerate_bundles(g: &FiniteGroup, x: &MarkedSurface, cap: u64) -> Result<Vec<BundleTuple>, SurfaceError> {
    let space = BundleSpace::new(g, x);
    space.checked_size(cap, "bundle enumeration")?;
    let mut out = Vec::new();
    let mut d = vec![0usize; space.free_len()];
    loop {
        out.push(space.tuple(&d));
        let mut carry = true;
        for slot in d.iter_mut().rev() {
            *slot += 1;
            if *slot < g.order() {
                carry = false;
                break;
            }
            *slot = 0;
        }
        if carry {
            return Ok(out);
        }
    }
}

/// Number of bundles per monodromy vector, streamed without storing tuples.
pub fn grade_histogram(
    g: &FiniteGroup,
    x: &MarkedSurface,
    cap: u64,
) -> Result<BTreeMap<Vec<usize>, u64>, SurfaceError> {
    let space = BundleSpace::new(g, x);
    space.checked_size(cap, "bundle counting")?;
    let counts = par_scan(
        g.order(),
        space.free_len(),
        HashMap::<Vec<usize>, u64>::new,
        |acc, d| {
            let m1 = space.first_monodromy(d);
            let key: Vec<usize> = (0..space.points).map(|i| space.monodromy_at(d, m1, i)).collect();
            *acc.entry(key).or_insert(0) += 1;
        },
        merge_counts,
    );
    Ok(counts.into_iter().collect())
}

/// Total number of bundles, by streaming.
pub fn count_bundles(g: &FiniteGroup, x: &MarkedSurface, cap: u64) -> Result<u64, SurfaceError> {
    Ok(grade_histogram(g, x, cap)?.values().sum())
}

pub fn monodromy(p: &BundleTuple, i: usize) -> Result<usize, SurfaceError> {
    p.monodromy(i)
}

pub fn rho_action(
    g: &FiniteGroup,
    x: &MarkedSurface,
    p: &BundleTuple,
    i: usize,
    elem: usize,
) -> Result<BundleTuple, SurfaceError> {
    BundleSpace::new(g, x).rho(p, i, elem)
}

/// Exhaustive check of the ρ-action on every bundle of `x`: well-defined,
/// conjugates only the `i`-th monodromy, `ρ_i(g)ρ_i(h) = ρ_i(gh)`, actions at
/// distinct boundaries commute, and each `ρ_i(g)` is a bijection. Returns the
/// number of individual identities checked. Work is `|P|·n²·|G|²`, capped.
pub fn relation_sweep(g: &FiniteGroup, x: &MarkedSurface, cap: u64) -> Result<u64, SurfaceError> {
    let space = BundleSpace::new(g, x);
    let size = space.size().unwrap_or(u64::MAX);
    let n = x.boundary_count();
    let order = g.order() as u64;
    let work = (size as u128) * (n * n) as u128 * (order * order) as u128;
    if work > cap as u128 {
        return Err(SurfaceError::CapExceeded { what: "relation sweep".into(), needed: work.to_string(), cap });
    }
    let all = enumerate_bundles(g, x, cap)?;
    let fail = |what: &str, t: &BundleTuple, i: usize, elem: usize| {
        SurfaceError::RelationViolated(
            json!({ "relation": what, "tuple": t, "boundary": i, "element": g.element_name(elem) }),
        )
    };
    let checks = all
        .par_iter()
        .map(|t| -> Result<u64, SurfaceError> {
            let mut count = 0u64;
            for i in 1..=n {
                if &space.rho(t, i, 0)? != t {
                    return Err(fail("identity acts trivially", t, i, 0));
                }
                for elem in 0..g.order() {
                    let r = space.rho(t, i, elem)?;
                    space.validate(&r).map_err(|_| fail("image is a bundle", t, i, elem))?;
                    let monodromy_ok = (1..=n).all(|j| {
                        let expect = if j == i { g.conj(elem, t.m[j - 1]) } else { t.m[j - 1] };
                        r.m[j - 1] == expect
                    });
                    if !monodromy_ok {
                        return Err(fail("monodromy transforms by conjugation", t, i, elem));
                    }
                    for other in 0..g.order() {
                        if space.rho(&space.rho(t, i, other)?, i, elem)? != space.rho(t, i, g.mul(elem, other))? {
                            return Err(fail("rho_i(g) rho_i(h) = rho_i(gh)", t, i, elem));
                        }
                        for j in (1..=n).filter(|&j| j != i) {
                            let lhs = space.rho(&space.rho(t, j, other)?, i, elem)?;
                            let rhs = space.rho(&space.rho(t, i, elem)?, j, other)?;
                            if lhs != rhs {
                                return Err(fail("distinct boundaries commute", t, i, elem));
                            }
                        }
                        count += n as u64;
                    }
                }
            }
            Ok(count)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    for i in 1..=n {
        for elem in 0..g.order() {
            let mut images: Vec<u64> =
                all.iter().map(|t| space.rho(t, i, elem).map(|r| space.encode(&r))).collect::<Result<_, _>>()?;
            images.sort_unstable();
            images.dedup();
            if images.len() != all.len() {
                return Err(fail("rho_i(g) is a bijection", &all[0], i, elem));
            }
        }
    }
    Ok(checks + (n * g.order()) as u64)
}

/// Trace of `⊗_i g_i δ_{h_i}` on `E(Xᵐ)`: the number of bundles with
/// monodromy `h_i` at every boundary and fixed by `ρ₁(g₁)⋯ρ_n(g_n)`.
pub fn e_module_character(
    g: &FiniteGroup,
    x: &MarkedSurface,
    pairs: &[(usize, usize)],
    cap: u64,
) -> Result<u64, SurfaceError> {
    let actions: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let grades: Vec<Option<usize>> = pairs.iter().map(|p| Some(p.1)).collect();
    module_trace(g, x, &actions, &grades, cap)
}

/// Like [`e_module_character`], with `None` grades summed over (acting by
/// the unit `Σ_h δ_h` there).
pub fn module_trace(
    g: &FiniteGroup,
    x: &MarkedSurface,
    actions: &[usize],
    grades: &[Option<usize>],
    cap: u64,
) -> Result<u64, SurfaceError> {
    let n = x.boundary_count();
    if actions.len() != n || grades.len() != n {
        return Err(SurfaceError::InvalidTuple(format!("expected {n} boundary entries")));
    }
    let space = BundleSpace::new(g, x);
    space.checked_size(cap, "module trace")?;
    Ok(par_scan(
        g.order(),
        space.free_len(),
        || 0u64,
        |acc, d| {
            let m1 = space.first_monodromy(d);
            let graded = grades.iter().enumerate().all(|(i, h)| h.is_none_or(|h| space.monodromy_at(d, m1, i) == h));
            if graded && space.fixes(d, m1, actions) {
                *acc += 1;
            }
        },
        |a, b| a + b,
    ))
}

/// `T[g·N + h]`: trace of `g δ_h` acting at boundary `p` (0-based) alone.
pub fn boundary_character(g: &FiniteGroup, x: &MarkedSurface, p: usize, cap: u64) -> Result<Vec<u64>, SurfaceError> {
    let space = BundleSpace::new(g, x);
    let order = g.order();
    space.checked_size(cap / order.max(1) as u64, "boundary character")?;
    Ok(par_scan(
        order,
        space.free_len(),
        || vec![0u64; order * order],
        |acc, d| {
            let m1 = space.first_monodromy(d);
            let h = space.monodromy_at(d, m1, p);
            let mut act = vec![0usize; space.points];
            for elem in 0..order {
                act[p] = elem;
                if space.fixes(d, m1, &act) {
                    acc[elem * order + h] += 1;
                }
            }
        },
        add_vectors,
    ))
}

/// `D[g·N + h]`: trace of `g δ_h` acting through the coproduct on the
/// boundaries `p` and `q` (0-based), i.e. the number of bundles fixed by
/// `ρ_p(g)ρ_q(g)` with `m_p·m_q = h`.
pub fn diagonal_character(
    g: &FiniteGroup,
    x: &MarkedSurface,
    p: usize,
    q: usize,
    cap: u64,
) -> Result<Vec<u64>, SurfaceError> {
    let space = BundleSpace::new(g, x);
    let order = g.order();
    space.checked_size(cap / order.max(1) as u64, "diagonal character")?;
    Ok(par_scan(
        order,
        space.free_len(),
        || vec![0u64; order * order],
        |acc, d| {
            let m1 = space.first_monodromy(d);
            let h = g.mul(space.monodromy_at(d, m1, p), space.monodromy_at(d, m1, q));
            let mut act = vec![0usize; space.points];
            for elem in 0..order {
                act[p] = elem;
                act[q] = elem;
                if space.fixes(d, m1, &act) {
                    acc[elem * order + h] += 1;
                }
            }
        },
        add_vectors,
    ))
}

/// Histogram of stabilizer data over pair orbits of `D(G)`.
///
/// Entry `o⃗` counts pairs `(P, g)` with `P` on the slice `s = e` and `g`
/// fixing `P`, such that `(g, m_i(P))` lies in pair orbit `o_i` for every
/// boundary. Summing over all of `P(Xᵐ)` instead of the slice multiplies
/// every entry by `N^(n−1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitHistogram {
    pub points: usize,
    pub entries: BTreeMap<Vec<u32>, u64>,
}

pub fn orbit_histogram(double: &DrinfeldDouble, x: &MarkedSurface, cap: u64) -> Result<OrbitHistogram, SurfaceError> {
    let g = double.group().as_ref();
    let order = g.order();
    let space = BundleSpace::new(g, x);
    let width = 2 * space.genus + space.points - 1;
    check_cap(order, width as u32, order as u64, cap, "character route")?;
    let so = space.s_offset();
    let counts = par_scan(
        order,
        width,
        HashMap::<Vec<u32>, u64>::new,
        |acc, slice| {
            let mut d = Vec::with_capacity(space.free_len());
            d.extend_from_slice(&slice[..so]);
            d.extend(std::iter::repeat_n(0, space.points - 1));
            d.extend_from_slice(&slice[so..]);
            let m1 = space.first_monodromy(&d);
            let mut stab = Vec::new();
            space.stabilizer(&d, m1, &mut stab);
            for &elem in &stab {
                let key: Vec<u32> = (0..space.points)
                    .map(|i| double.orbit_of(elem, space.monodromy_at(&d, m1, i)).expect("stabilizer commutes") as u32)
                    .collect();
                *acc.entry(key).or_insert(0) += 1;
            }
        },
        merge_counts,
    );
    Ok(OrbitHistogram { points: space.points, entries: counts.into_iter().collect() })
}

/// `N^n·⟨χ_E, χ_E⟩ = Σ_{(g⃗, h⃗)} χ_E(g⃗, h⃗)²`, by counting fixed points over
/// all bundles.
pub fn character_square_sum(g: &FiniteGroup, x: &MarkedSurface, cap: u64) -> Result<u128, SurfaceError> {
    let space = BundleSpace::new(g, x);
    let order = g.order();
    check_cap(order, space.free_len() as u32, order as u64, cap, "character norm")?;
    let (so, n) = (space.s_offset(), space.points);
    let counts = par_scan(
        order,
        space.free_len(),
        HashMap::<Vec<u32>, u64>::new,
        |acc, d| {
            let m1 = space.first_monodromy(d);
            let mut stab = Vec::new();
            space.stabilizer(d, m1, &mut stab);
            for &g1 in &stab {
                let mut key = Vec::with_capacity(2 * n);
                key.push(g1 as u32);
                key.extend((0..n - 1).map(|j| g.conj(g.inv(d[so + j]), g1) as u32));
                key.extend((0..n).map(|i| space.monodromy_at(d, m1, i) as u32));
                *acc.entry(key).or_insert(0) += 1;
            }
        },
        merge_counts,
    );
    Ok(counts.values().map(|&c| c as u128 * c as u128).sum())
}

/// How to cut a surface along a simple closed curve.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Cut {
    /// Along a non-separating curve: `(g, n) → (g−1, n+2)`.
    NonSeparating,
    /// Into a piece of genus `genus` carrying the boundaries `subset`, and
    /// the complementary piece.
    Separating { genus: usize, subset: Vec<String> },
}

/// Location of a boundary circle: `(piece, 0-based boundary index)`.
pub type BoundarySlot = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CutResult {
    pub pieces: Vec<MarkedSurface>,
    pub first: BoundarySlot,
    pub second: BoundarySlot,
    /// Where each original boundary ended up.
    pub placement: Vec<BoundarySlot>,
}

impl CutResult {
    pub fn first_name(&self) -> &str {
        &self.pieces[self.first.0].boundary_names()[self.first.1]
    }

    pub fn second_name(&self) -> &str {
        &self.pieces[self.second.0].boundary_names()[self.second.1]
    }
}

fn fresh_name(base: &str, taken: &[String]) -> String {
    if !taken.iter().any(|t| t == base) {
        return base.to_string();
    }
    (2..).map(|k| format!("{base}{k}")).find(|c| !taken.contains(c)).expect("unbounded search")
}

pub fn cut_surface(x: &MarkedSurface, cut: &Cut) -> Result<CutResult, SurfaceError> {
    let n = x.boundary_count();
    let c1 = fresh_name("c'", &x.boundary_names);
    let mut taken = x.boundary_names.clone();
    taken.push(c1.clone());
    let c2 = fresh_name("c''", &taken);
    match cut {
        Cut::NonSeparating => {
            if x.genus == 0 {
                return Err(SurfaceError::InvalidCut("a non-separating cut needs genus at least 1".into()));
            }
            let mut names = x.boundary_names.clone();
            names.push(c1);
            names.push(c2);
            Ok(CutResult {
                pieces: vec![MarkedSurface::with_names(x.genus - 1, names)?],
                first: (0, n),
                second: (0, n + 1),
                placement: (0..n).map(|i| (0, i)).collect(),
            })
        }
        Cut::Separating { genus, subset } => {
            if *genus > x.genus {
                return Err(SurfaceError::InvalidCut(format!("piece genus {genus} exceeds {}", x.genus)));
            }
            for (i, name) in subset.iter().enumerate() {
                if x.position(name).is_none() {
                    return Err(SurfaceError::InvalidCut(format!("unknown boundary `{name}`")));
                }
                if subset[..i].contains(name) {
                    return Err(SurfaceError::InvalidCut(format!("boundary `{name}` listed twice")));
                }
            }
            let mut left = Vec::new();
            let mut right = Vec::new();
            let mut placement = Vec::with_capacity(n);
            for name in &x.boundary_names {
                if subset.contains(name) {
                    placement.push((0, left.len()));
                    left.push(name.clone());
                } else {
                    placement.push((1, right.len()));
                    right.push(name.clone());
                }
            }
            let (l, r) = (left.len(), right.len());
            left.push(c1);
            right.push(c2);
            Ok(CutResult {
                pieces: vec![
                    MarkedSurface::with_names(*genus, left)?,
                    MarkedSurface::with_names(x.genus - genus, right)?,
                ],
                first: (0, l),
                second: (1, r),
                placement,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GluingReport {
    pub surface: MarkedSurface,
    pub cut: Cut,
    /// `|P(Xᵐ)|`.
    pub bundles: u64,
    /// Bundles on the cut surface with `m_{c'}·m_{c''} = e`.
    pub matching: u64,
    /// Orbits of the diagonal action on the matching bundles.
    pub orbits: u64,
    /// `D(G)`-invariants of `E(X_cut)`, coproduct factors on `(c', c'')`.
    pub invariants: u64,
    /// The same with the factors placed on `(c'', c')`.
    pub invariants_swapped: u64,
}

/// Caps for [`gluing_bijection_check`].
#[derive(Debug, Clone, Copy)]
pub struct GluingCaps {
    pub count: u64,
    pub materialize: u64,
}

impl Default for GluingCaps {
    fn default() -> Self {
        GluingCaps { count: DEFAULT_COUNT_CAP, materialize: DEFAULT_MATERIALIZE_CAP }
    }
}

struct UnionFind(Vec<u32>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n as u32).collect())
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.0[x as usize] != x {
            let up = self.0[self.0[x as usize] as usize];
            self.0[x as usize] = up;
            x = up;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb) as usize] = ra.min(rb);
        }
    }

    fn roots(&mut self) -> u64 {
        (0..self.0.len() as u32).filter(|&x| self.find(x) == x).count() as u64
    }
}

/// Orbit count of the diagonal action on matching bundles by explicit union
/// of generator images. Also returns the number of matching bundles.
fn explicit_orbits(g: &FiniteGroup, cut: &CutResult, cap: u64) -> Result<(u64, u64), SurfaceError> {
    let gens = g.generating_set();
    let spaces: Vec<BundleSpace> = cut.pieces.iter().map(|p| BundleSpace::new(g, p)).collect();
    let matching = |t1: &BundleTuple, t2: &BundleTuple| g.mul(t1.m[cut.first.1], t2.m[cut.second.1]) == 0;
    let mut keys: Vec<u64> = Vec::new();
    let push = |keys: &mut Vec<u64>, k: u64| -> Result<(), SurfaceError> {
        if keys.len() as u64 >= cap {
            return Err(SurfaceError::CapExceeded {
                what: "gluing orbit enumeration".into(),
                needed: format!(">{cap}"),
                cap,
            });
        }
        keys.push(k);
        Ok(())
    };
    if spaces.len() == 1 {
        let s = spaces[0];
        check_cap(g.order(), s.free_len() as u32, 1, cap.saturating_mul(g.order() as u64), "gluing orbit enumeration")?;
        for i in 0..s.size().expect("checked") {
            let t = s.decode(i);
            if matching(&t, &t) {
                push(&mut keys, i)?;
            }
        }
    } else {
        let (s1, s2) = (spaces[0], spaces[1]);
        let n1 = check_cap(g.order(), s1.free_len() as u32, 1, u64::MAX, "gluing")?;
        let n2 = check_cap(g.order(), s2.free_len() as u32, 1, u64::MAX, "gluing")?;
        if n1.checked_mul(n2).is_none() {
            return Err(SurfaceError::CapExceeded {
                what: "gluing orbit enumeration".into(),
                needed: format!("{n1}*{n2}"),
                cap,
            });
        }
        let mut by_grade: Vec<Vec<u64>> = vec![Vec::new(); g.order()];
        for i2 in 0..n2 {
            by_grade[s2.decode(i2).m[cut.second.1]].push(i2);
        }
        for i1 in 0..n1 {
            let t1 = s1.decode(i1);
            for &i2 in &by_grade[g.inv(t1.m[cut.first.1])] {
                push(&mut keys, i1 * n2 + i2)?;
            }
        }
    }
    let mut uf = UnionFind::new(keys.len());
    let locate = |k: u64| keys.binary_search(&k).expect("diagonal action preserves matching bundles") as u32;
    for (idx, &k) in keys.iter().enumerate() {
        for &x in &gens {
            let image = if spaces.len() == 1 {
                let s = spaces[0];
                let t = s.decode(k);
                let t = s.rho(&t, cut.first.1 + 1, x)?;
                let t = s.rho(&t, cut.second.1 + 1, x)?;
                s.encode(&t)
            } else {
                let (s1, s2) = (spaces[0], spaces[1]);
                let n2 = s2.size().expect("checked");
                let t1 = s1.rho(&s1.decode(k / n2), cut.first.1 + 1, x)?;
                let t2 = s2.rho(&s2.decode(k % n2), cut.second.1 + 1, x)?;
                s1.encode(&t1) * n2 + s2.encode(&t2)
            };
            uf.union(idx as u32, locate(image));
        }
    }
    Ok((uf.roots(), keys.len() as u64))
}

/// Character of `E(X_cut)` restricted to one copy of `D(G)` through the
/// coproduct, with the first tensor factor on `first` and the second on
/// `second`. Flattened `[g·N + h]`.
pub fn cut_diagonal_character(
    g: &FiniteGroup,
    cut: &CutResult,
    first: BoundarySlot,
    second: BoundarySlot,
    cap: u64,
) -> Result<Vec<u64>, SurfaceError> {
    let order = g.order();
    if first.0 == second.0 {
        return diagonal_character(g, &cut.pieces[first.0], first.1, second.1, cap);
    }
    let a = boundary_character(g, &cut.pieces[first.0], first.1, cap)?;
    let b = boundary_character(g, &cut.pieces[second.0], second.1, cap)?;
    let mut out = vec![0u64; order * order];
    for elem in 0..order {
        for h1 in 0..order {
            let x = a[elem * order + h1];
            if x == 0 {
                continue;
            }
            for h2 in 0..order {
                out[elem * order + g.mul(h1, h2)] += x * b[elem * order + h2];
            }
        }
    }
    Ok(out)
}

/// `dim V^{D(G)} = (1/N)·Σ_g χ(g δ_e)` for a flattened `D(G)` character.
fn invariants_of(g: &FiniteGroup, chi: &[u64]) -> Option<u64> {
    let order = g.order() as u64;
    let total: u64 = (0..g.order()).map(|elem| chi[elem * g.order()]).sum();
    total.is_multiple_of(order).then_some(total / order)
}

/// Checks that cutting and regluing preserves the bundle count and that
/// `E(X)` matches the `D(G)`-invariants of `E(X_cut)` in either factor order.
pub fn gluing_bijection_check(
    g: &FiniteGroup,
    x: &MarkedSurface,
    cut: &Cut,
    caps: GluingCaps,
) -> Result<GluingReport, SurfaceError> {
    let result = cut_surface(x, cut)?;
    let bundles = BundleSpace::new(g, x).checked_size(caps.count, "bundle counting")?;
    let (orbits, matching) = explicit_orbits(g, &result, caps.materialize)?;
    let inv = |first, second| -> Result<Option<u64>, SurfaceError> {
        Ok(invariants_of(g, &cut_diagonal_character(g, &result, first, second, caps.count)?))
    };
    let invariants = inv(result.first, result.second)?;
    let invariants_swapped = inv(result.second, result.first)?;
    let report = GluingReport {
        surface: x.clone(),
        cut: cut.clone(),
        bundles,
        matching,
        orbits,
        invariants: invariants.unwrap_or(u64::MAX),
        invariants_swapped: invariants_swapped.unwrap_or(u64::MAX),
    };
    if orbits != bundles || report.invariants != bundles || report.invariants_swapped != bundles {
        return Err(SurfaceError::GluingMismatch(json!({
            "group": g.name(),
            "report": report,
        })));
    }
    Ok(report)
}
