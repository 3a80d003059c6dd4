//! Finite groups as dense multiplication tables.
//!
//! Elements are indices `0..N` with the identity pinned to `0`. Every other
//! module refers to group elements by index only.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Default cap on the order of groups built from generators or presets.
pub const DEFAULT_ORDER_CAP: usize = 2000;

/// Largest degree accepted by the symmetric-group preset.
pub const MAX_SYMMETRIC_DEGREE: usize = 6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("group closure exceeds the order cap of {cap} elements")]
    OrderCapExceeded { cap: usize },
    #[error("generator {index} is not a permutation of 0..{degree}")]
    InvalidGenerator { index: usize, degree: usize },
    #[error("generators act on different point sets ({expected} vs {found} points)")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("unknown preset group `{0}`")]
    UnknownPreset(String),
    #[error("preset `{name}` does not accept parameter {parameter}")]
    ParameterOutOfRange { name: String, parameter: i64 },
    #[error("invalid multiplication table: {0}")]
    InvalidTable(String),
    #[error("element list is not a subgroup: {0}")]
    NotASubgroup(String),
    #[error("malformed group file: {0}")]
    Format(String),
}

/// A finite group stored as a full Cayley table.
pub struct FiniteGroup {
    order: usize,
    mul: Vec<u32>,
    inv: Vec<u32>,
    element_order: Vec<u32>,
    exponent: usize,
    names: Vec<String>,
    name: Option<String>,
    digest: [u8; 32],
    classes: OnceLock<ConjClassInfo>,
}

impl fmt::Debug for FiniteGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteGroup")
            .field("name", &self.name)
            .field("order", &self.order)
            .field("exponent", &self.exponent)
            .finish()
    }
}

impl Clone for FiniteGroup {
    fn clone(&self) -> Self {
        FiniteGroup {
            order: self.order,
            mul: self.mul.clone(),
            inv: self.inv.clone(),
            element_order: self.element_order.clone(),
            exponent: self.exponent,
            names: self.names.clone(),
            name: self.name.clone(),
            digest: self.digest,
            classes: OnceLock::new(),
        }
    }
}

impl PartialEq for FiniteGroup {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order && self.mul == other.mul
    }
}

impl Eq for FiniteGroup {}

impl FiniteGroup {
    /// Builds a group from a row-major table that is already known to satisfy
    /// the group axioms with identity `0`.
    pub(crate) fn from_valid_table(
        order: usize,
        mul: Vec<u32>,
        names: Vec<String>,
        name: Option<String>,
    ) -> FiniteGroup {
        debug_assert_eq!(mul.len(), order * order);
        let mut inv = vec![0u32; order];
        for x in 0..order {
            let row = &mul[x * order..(x + 1) * order];
            let y = row.iter().position(|&v| v == 0).expect("latin square row");
            inv[x] = y as u32;
        }
        let mut element_order = vec![1u32; order];
        for x in 1..order {
            let mut k = 1u32;
            let mut p = x;
            while p != 0 {
                p = mul[p * order + x] as usize;
                k += 1;
            }
            element_order[x] = k;
        }
        let exponent = element_order.iter().fold(1usize, |acc, &o| num_integer::lcm(acc, o as usize));
        let digest = table_digest(order, &mul);
        FiniteGroup { order, mul, inv, element_order, exponent, names, name, digest, classes: OnceLock::new() }
    }

    /// Closure of a list of permutations under composition.
    ///
    /// Indexing is breadth-first from the identity, expanding each element by
    /// right multiplication with the generators in the order given. An empty
    /// generator list yields the trivial group.
    pub fn from_generators(generators: &[Vec<usize>], cap: usize) -> Result<FiniteGroup, GroupError> {
        Self::from_generators_named(generators, cap, None)
    }

    pub fn from_generators_named(
        generators: &[Vec<usize>],
        cap: usize,
        name: Option<String>,
    ) -> Result<FiniteGroup, GroupError> {
        let degree = generators.first().map_or(0, Vec::len);
        for (index, g) in generators.iter().enumerate() {
            if g.len() != degree {
                return Err(GroupError::DegreeMismatch { expected: degree, found: g.len() });
            }
            let mut seen = vec![false; degree];
            for &p in g {
                if p >= degree || seen[p] {
                    return Err(GroupError::InvalidGenerator { index, degree });
                }
                seen[p] = true;
            }
        }
        let identity: Vec<usize> = (0..degree).collect();
        let mut elements = vec![identity.clone()];
        let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
        index.insert(identity, 0);
        let mut queue = VecDeque::from([0usize]);
        while let Some(x) = queue.pop_front() {
            for g in generators {
                let prod = compose(&elements[x], g);
                if !index.contains_key(&prod) {
                    if elements.len() >= cap {
                        return Err(GroupError::OrderCapExceeded { cap });
                    }
                    index.insert(prod.clone(), elements.len());
                    queue.push_back(elements.len());
                    elements.push(prod);
                }
            }
        }
        let order = elements.len();
        let mut mul = vec![0u32; order * order];
        for (x, px) in elements.iter().enumerate() {
            for (y, py) in elements.iter().enumerate() {
                mul[x * order + y] = index[&compose(px, py)] as u32;
            }
        }
        let names = elements.iter().map(|p| cycle_notation(p)).collect();
        Ok(FiniteGroup::from_valid_table(order, mul, names, name))
    }

    /// Builds a group from an arbitrary row-major table, verifying every group
    /// axiom: identity at index 0, latin-square rows and columns, and
    /// associativity.
    pub fn from_table(order: usize, mul: Vec<u32>, name: Option<String>) -> Result<FiniteGroup, GroupError> {
        if order == 0 {
            return Err(GroupError::InvalidTable("order must be positive".into()));
        }
        if mul.len() != order * order {
            return Err(GroupError::InvalidTable(format!("expected {} entries, found {}", order * order, mul.len())));
        }
        if let Some(bad) = mul.iter().find(|&&v| v as usize >= order) {
            return Err(GroupError::InvalidTable(format!("entry {bad} out of range")));
        }
        for x in 0..order {
            if mul[x] as usize != x || mul[x * order] as usize != x {
                return Err(GroupError::InvalidTable("index 0 is not the identity".into()));
            }
        }
        for x in 0..order {
            let mut row = vec![false; order];
            let mut col = vec![false; order];
            for y in 0..order {
                let r = mul[x * order + y] as usize;
                let c = mul[y * order + x] as usize;
                if row[r] || col[c] {
                    return Err(GroupError::InvalidTable(format!("row or column {x} is not a permutation")));
                }
                row[r] = true;
                col[c] = true;
            }
        }
        // Light's test: associativity only needs checking against a
        // generating set.
        let at = |x: usize, y: usize| mul[x * order + y] as usize;
        for g in generating_set(order, &mul) {
            for x in 0..order {
                let xg = at(x, g);
                for y in 0..order {
                    if at(xg, y) != at(x, at(g, y)) {
                        return Err(GroupError::InvalidTable(format!("not associative at ({x}, {g}, {y})")));
                    }
                }
            }
        }
        let names = (0..order).map(|i| i.to_string()).collect();
        Ok(FiniteGroup::from_valid_table(order, mul, names, name))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        0
    }

    #[inline]
    pub fn mul(&self, x: usize, y: usize) -> usize {
        self.mul[x * self.order + y] as usize
    }

    #[inline]
    pub fn inv(&self, x: usize) -> usize {
        self.inv[x] as usize
    }

    /// `g x g^-1`.
    #[inline]
    pub fn conj(&self, g: usize, x: usize) -> usize {
        self.mul(self.mul(g, x), self.inv(g))
    }

    /// `a b a^-1 b^-1`.
    #[inline]
    pub fn commutator(&self, a: usize, b: usize) -> usize {
        self.mul(self.mul(a, b), self.mul(self.inv(a), self.inv(b)))
    }

    #[inline]
    pub fn commute(&self, x: usize, y: usize) -> bool {
        self.mul(x, y) == self.mul(y, x)
    }

    pub fn pow(&self, x: usize, k: usize) -> usize {
        let k = k % self.element_order[x] as usize;
        (0..k).fold(0, |acc, _| self.mul(acc, x))
    }

    pub fn element_order(&self, x: usize) -> usize {
        self.element_order[x] as usize
    }

    /// Least common multiple of the element orders.
    pub fn exponent(&self) -> usize {
        self.exponent
    }

    pub fn element_name(&self, x: usize) -> &str {
        &self.names[x]
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn mul_table(&self) -> &[u32] {
        &self.mul
    }

    /// SHA-256 of the multiplication table; keys the character-table cache.
    pub fn digest(&self) -> &[u8; 32] {
        &self.digest
    }

    pub fn digest_hex(&self) -> String {
        self.digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// A small generating set, chosen greedily in index order.
    pub fn generating_set(&self) -> Vec<usize> {
        generating_set(self.order, &self.mul)
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order).all(|x| (0..x).all(|y| self.commute(x, y)))
    }

    /// Conjugacy classes, centralizers and power maps, computed on first use.
    pub fn classes(&self) -> &ConjClassInfo {
        self.classes.get_or_init(|| ConjClassInfo::compute(self))
    }

    /// Exhaustive check of the table axioms. Cubic in the order.
    pub fn check_invariants(&self) -> Result<(), String> {
        let n = self.order;
        for x in 0..n {
            if self.mul(0, x) != x || self.mul(x, 0) != x {
                return Err(format!("identity law fails at {x}"));
            }
            if self.mul(x, self.inv(x)) != 0 {
                return Err(format!("inverse law fails at {x}"));
            }
            if !self.exponent.is_multiple_of(self.element_order(x)) {
                return Err(format!("order of {x} does not divide the exponent"));
            }
        }
        for x in 0..n {
            let mut row = vec![false; n];
            let mut col = vec![false; n];
            for y in 0..n {
                row[self.mul(x, y)] = true;
                col[self.mul(y, x)] = true;
            }
            if row.iter().chain(col.iter()).any(|s| !s) {
                return Err(format!("row/column {x} is not a permutation"));
            }
        }
        for x in 0..n {
            for y in 0..n {
                let xy = self.mul(x, y);
                for z in 0..n {
                    if self.mul(xy, z) != self.mul(x, self.mul(y, z)) {
                        return Err(format!("associativity fails at ({x}, {y}, {z})"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Re-indexes a subgroup as a standalone group. Element `i` of the result
    /// corresponds to `elements_sorted[i]` in `self`; the returned vector is
    /// that translation map.
    pub fn subgroup(&self, elements: &[usize]) -> Result<(FiniteGroup, Vec<usize>), GroupError> {
        let mut elems: Vec<usize> = elements.to_vec();
        elems.sort_unstable();
        elems.dedup();
        if elems.first() != Some(&0) {
            return Err(GroupError::NotASubgroup("missing the identity".into()));
        }
        if let Some(&bad) = elems.iter().find(|&&x| x >= self.order) {
            return Err(GroupError::NotASubgroup(format!("element {bad} out of range")));
        }
        let mut local = vec![u32::MAX; self.order];
        for (i, &x) in elems.iter().enumerate() {
            local[x] = i as u32;
        }
        let m = elems.len();
        let mut mul = vec![0u32; m * m];
        for (i, &x) in elems.iter().enumerate() {
            if local[self.inv(x)] == u32::MAX {
                return Err(GroupError::NotASubgroup(format!("inverse of {x} missing")));
            }
            for (j, &y) in elems.iter().enumerate() {
                let p = local[self.mul(x, y)];
                if p == u32::MAX {
                    return Err(GroupError::NotASubgroup(format!("product of {x} and {y} missing")));
                }
                mul[i * m + j] = p;
            }
        }
        let names = elems.iter().map(|&x| self.names[x].clone()).collect();
        Ok((FiniteGroup::from_valid_table(m, mul, names, None), elems))
    }

    /// Direct product `self × other`; element `(x, y)` has index
    /// `x * |other| + y`.
    pub fn direct_product(&self, other: &FiniteGroup) -> FiniteGroup {
        let (n1, n2) = (self.order, other.order);
        let n = n1 * n2;
        let mut mul = vec![0u32; n * n];
        for x1 in 0..n1 {
            for y1 in 0..n2 {
                let a = x1 * n2 + y1;
                for x2 in 0..n1 {
                    for y2 in 0..n2 {
                        let b = x2 * n2 + y2;
                        mul[a * n + b] = (self.mul(x1, x2) * n2 + other.mul(y1, y2)) as u32;
                    }
                }
            }
        }
        let mut names = Vec::with_capacity(n);
        for x in 0..n1 {
            for y in 0..n2 {
                names.push(format!("{}x{}", self.names[x], other.names[y]));
            }
        }
        let name = match (self.name(), other.name()) {
            (Some(a), Some(b)) => Some(format!("{a}x{b}")),
            _ => None,
        };
        FiniteGroup::from_valid_table(n, mul, names, name)
    }

    pub fn to_file(&self) -> GroupFile {
        GroupFile { order: self.order, mul: self.mul.clone(), name: self.name.clone() }
    }

    pub fn from_file(file: GroupFile) -> Result<FiniteGroup, GroupError> {
        FiniteGroup::from_table(file.order, file.mul, file.name)
    }

    pub fn from_json(text: &str) -> Result<FiniteGroup, GroupError> {
        let file: GroupFile = serde_json::from_str(text).map_err(|e| GroupError::Format(e.to_string()))?;
        FiniteGroup::from_file(file)
    }
}

/// On-disk group format: `{"order": N, "mul": [N*N row-major], "name": ...}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct GroupFile {
    pub order: usize,
    pub mul: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

fn table_digest(order: usize, mul: &[u32]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update((order as u64).to_le_bytes());
    for v in mul {
        hasher.update(v.to_le_bytes());
    }
    let out = hasher.finalize();
    let mut d = [0u8; 32];
    d.copy_from_slice(&out);
    d
}

/// Greedy generating set of a latin-square table with identity 0.
fn generating_set(order: usize, mul: &[u32]) -> Vec<usize> {
    let mut inside = vec![false; order];
    inside[0] = true;
    let mut members = vec![0usize];
    let mut gens = Vec::new();
    while let Some(g) = (0..order).find(|&x| !inside[x]) {
        gens.push(g);
        // regrow the closure from scratch with the enlarged generator list
        inside.iter_mut().for_each(|v| *v = false);
        inside[0] = true;
        members.clear();
        members.push(0);
        let mut i = 0;
        while i < members.len() {
            let x = members[i];
            for &h in &gens {
                let p = mul[x * order + h] as usize;
                if !inside[p] {
                    inside[p] = true;
                    members.push(p);
                }
            }
            i += 1;
        }
    }
    gens
}

/// `(p ∘ q)(i) = p(q(i))`.
fn compose(p: &[usize], q: &[usize]) -> Vec<usize> {
    q.iter().map(|&i| p[i]).collect()
}

/// One-based cycle notation, e.g. `(12)(34)`; `()` is the identity.
pub fn cycle_notation(perm: &[usize]) -> String {
    let wide = perm.len() > 9;
    let mut seen = vec![false; perm.len()];
    let mut out = String::new();
    for start in 0..perm.len() {
        if seen[start] || perm[start] == start {
            continue;
        }
        let mut cycle = Vec::new();
        let mut p = start;
        while !seen[p] {
            seen[p] = true;
            cycle.push((p + 1).to_string());
            p = perm[p];
        }
        out.push('(');
        out.push_str(&cycle.join(if wide { "," } else { "" }));
        out.push(')');
    }
    if out.is_empty() {
        out.push_str("()");
    }
    out
}

/// Conjugacy structure of a group, in canonical class order.
///
/// Classes are sorted by (order of representative, representative index); the
/// representative is the minimal element index of its class, so class 0 is
/// the identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjClassInfo {
    pub classes: Vec<Vec<usize>>,
    pub class_of: Vec<usize>,
    pub representative: Vec<usize>,
    /// Sorted centralizer of each class representative.
    pub centralizer: Vec<Vec<usize>>,
    /// `power_map[c][k]` is the class of `rep(c)^k`, for `k` in `0..exponent`.
    pub power_map: Vec<Vec<usize>>,
    /// Minimal-index `σ` with `σ · rep · σ^-1 = h`, for every element `h`.
    pub transporter: Vec<usize>,
    /// Class containing the inverses of the given class.
    pub inverse_class: Vec<usize>,
}

impl ConjClassInfo {
    fn compute(g: &FiniteGroup) -> ConjClassInfo {
        let n = g.order();
        let mut assigned = vec![false; n];
        let mut raw: Vec<Vec<usize>> = Vec::new();
        for x in 0..n {
            if assigned[x] {
                continue;
            }
            let mut class = Vec::new();
            for y in 0..n {
                let c = g.conj(y, x);
                if !assigned[c] {
                    assigned[c] = true;
                    class.push(c);
                }
            }
            class.sort_unstable();
            raw.push(class);
        }
        raw.sort_by_key(|c| (g.element_order(c[0]), c[0]));
        let mut class_of = vec![0usize; n];
        for (ci, c) in raw.iter().enumerate() {
            for &x in c {
                class_of[x] = ci;
            }
        }
        let representative: Vec<usize> = raw.iter().map(|c| c[0]).collect();
        let centralizer: Vec<Vec<usize>> =
            representative.iter().map(|&a| (0..n).filter(|&y| g.commute(a, y)).collect()).collect();
        let e = g.exponent();
        let power_map = representative
            .iter()
            .map(|&a| {
                let mut row = Vec::with_capacity(e);
                let mut p = 0;
                for _ in 0..e {
                    row.push(class_of[p]);
                    p = g.mul(p, a);
                }
                row
            })
            .collect();
        let mut transporter = vec![usize::MAX; n];
        for &a in &representative {
            for s in 0..n {
                let h = g.conj(s, a);
                if transporter[h] == usize::MAX {
                    transporter[h] = s;
                }
            }
        }
        let inverse_class = representative.iter().map(|&a| class_of[g.inv(a)]).collect();
        ConjClassInfo { classes: raw, class_of, representative, centralizer, power_map, transporter, inverse_class }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class_size(&self, c: usize) -> usize {
        self.classes[c].len()
    }
}

/// Named preset groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Preset {
    Cyclic(usize),
    /// Dihedral group of order `2n`.
    Dihedral(usize),
    Symmetric(usize),
    Quaternion8,
    DirectProduct(Vec<Preset>),
}

impl Preset {
    /// Looks up a preset by family name and parameter, e.g. `("dihedral", 4)`.
    pub fn from_name(name: &str, parameter: Option<i64>) -> Result<Preset, GroupError> {
        let need =
            |p: Option<i64>| p.ok_or_else(|| GroupError::ParameterOutOfRange { name: name.to_string(), parameter: 0 });
        let ranged = |p: i64, lo: i64, hi: i64| {
            if p < lo || p > hi {
                Err(GroupError::ParameterOutOfRange { name: name.to_string(), parameter: p })
            } else {
                Ok(p as usize)
            }
        };
        match name.to_ascii_lowercase().as_str() {
            "cyclic" => Ok(Preset::Cyclic(ranged(need(parameter)?, 1, DEFAULT_ORDER_CAP as i64)?)),
            "dihedral" => Ok(Preset::Dihedral(ranged(need(parameter)?, 1, DEFAULT_ORDER_CAP as i64 / 2)?)),
            "symmetric" => Ok(Preset::Symmetric(ranged(need(parameter)?, 1, MAX_SYMMETRIC_DEGREE as i64)?)),
            "quaternion8" => Ok(Preset::Quaternion8),
            "trivial" => Ok(Preset::Cyclic(1)),
            _ => Err(GroupError::UnknownPreset(name.to_string())),
        }
    }

    /// Parses short names: `Z4`/`C4`, `D4` (order 8), `S3`, `Q8`, `trivial`,
    /// long forms `cyclic:4`, and products joined by `x`, e.g. `Z2xS3`.
    pub fn parse(text: &str) -> Result<Preset, GroupError> {
        let t = text.trim();
        if t.contains('x') && !t.starts_with("cyclic") && !t.starts_with("dihedral") {
            let parts = t.split('x').map(Preset::parse).collect::<Result<Vec<_>, _>>()?;
            return Ok(Preset::DirectProduct(parts));
        }
        if let Some((family, param)) = t.split_once(':') {
            let p = param.parse::<i64>().map_err(|_| GroupError::UnknownPreset(text.to_string()))?;
            return Preset::from_name(family, Some(p));
        }
        let lower = t.to_ascii_lowercase();
        if lower == "trivial" || lower == "quaternion8" {
            return Preset::from_name(&lower, None);
        }
        if lower == "q8" {
            return Ok(Preset::Quaternion8);
        }
        let (head, digits) = t.split_at(t.find(|c: char| c.is_ascii_digit()).unwrap_or(t.len()));
        let p = digits.parse::<i64>().map_err(|_| GroupError::UnknownPreset(text.to_string()))?;
        match head {
            "Z" | "C" => Preset::from_name("cyclic", Some(p)),
            "D" => Preset::from_name("dihedral", Some(p)),
            "S" => Preset::from_name("symmetric", Some(p)),
            _ => Err(GroupError::UnknownPreset(text.to_string())),
        }
    }

    pub fn short_name(&self) -> String {
        match self {
            Preset::Cyclic(n) => format!("Z{n}"),
            Preset::Dihedral(n) => format!("D{n}"),
            Preset::Symmetric(n) => format!("S{n}"),
            Preset::Quaternion8 => "Q8".to_string(),
            Preset::DirectProduct(parts) => parts.iter().map(Preset::short_name).collect::<Vec<_>>().join("x"),
        }
    }

    /// Permutation generators realizing the preset.
    fn generators(&self) -> Vec<Vec<usize>> {
        match *self {
            Preset::Cyclic(n) => {
                if n == 1 {
                    vec![]
                } else {
                    vec![(0..n).map(|i| (i + 1) % n).collect()]
                }
            }
            Preset::Dihedral(n) if n >= 3 => {
                let rot = (0..n).map(|i| (i + 1) % n).collect();
                let refl = (0..n).map(|i| (n - i) % n).collect();
                vec![rot, refl]
            }
            Preset::Dihedral(n) => {
                // regular action on pairs (k, f) ↦ index k + n·f
                let idx = |k: usize, f: usize| k % n + n * (f % 2);
                let rot = (0..2 * n).map(|p| idx(p % n + 1, p / n)).collect();
                let refl = (0..2 * n).map(|p| idx(n - p % n, p / n + 1)).collect();
                vec![rot, refl]
            }
            Preset::Symmetric(n) => {
                if n <= 1 {
                    vec![]
                } else {
                    let mut t: Vec<usize> = (0..n).collect();
                    t.swap(0, 1);
                    let c = (0..n).map(|i| (i + 1) % n).collect();
                    vec![t, c]
                }
            }
            Preset::Quaternion8 => {
                // left regular action on ±1, ±i, ±j, ±k, index = unit + 4·sign
                let unit_mul = |u: usize, v: usize| -> (usize, usize) {
                    // returns (unit, sign) of u·v for units 1,i,j,k = 0..4
                    const TABLE: [[(usize, usize); 4]; 4] = [
                        [(0, 0), (1, 0), (2, 0), (3, 0)],
                        [(1, 0), (0, 1), (3, 0), (2, 1)],
                        [(2, 0), (3, 1), (0, 1), (1, 0)],
                        [(3, 0), (2, 0), (1, 1), (0, 1)],
                    ];
                    TABLE[u][v]
                };
                let left = |u: usize| -> Vec<usize> {
                    (0..8)
                        .map(|p| {
                            let (v, s) = (p % 4, p / 4);
                            let (w, t) = unit_mul(u, v);
                            w + 4 * ((s + t) % 2)
                        })
                        .collect()
                };
                vec![left(1), left(2)]
            }
            Preset::DirectProduct(ref parts) => {
                let blocks: Vec<Vec<Vec<usize>>> = parts.iter().map(Preset::generators).collect();
                let degrees: Vec<usize> = parts.iter().map(Preset::degree).collect();
                let total: usize = degrees.iter().sum();
                let mut out = Vec::new();
                let mut offset = 0;
                for (block, &deg) in blocks.iter().zip(&degrees) {
                    for g in block {
                        let mut p: Vec<usize> = (0..total).collect();
                        for i in 0..deg {
                            p[offset + i] = offset + g[i];
                        }
                        out.push(p);
                    }
                    offset += deg;
                }
                out
            }
        }
    }

    fn degree(&self) -> usize {
        match *self {
            Preset::Cyclic(n) | Preset::Symmetric(n) => n.max(1),
            Preset::Dihedral(n) if n >= 3 => n,
            Preset::Dihedral(n) => 2 * n,
            Preset::Quaternion8 => 8,
            Preset::DirectProduct(ref parts) => parts.iter().map(Preset::degree).sum(),
        }
    }
}

/// Builds a preset group. Output is identical across runs.
pub fn preset_group(preset: &Preset) -> Result<FiniteGroup, GroupError> {
    preset_group_with_cap(preset, DEFAULT_ORDER_CAP)
}

pub fn preset_group_with_cap(preset: &Preset, cap: usize) -> Result<FiniteGroup, GroupError> {
    if let Preset::Symmetric(n) = preset {
        if *n > MAX_SYMMETRIC_DEGREE {
            return Err(GroupError::ParameterOutOfRange { name: "symmetric".into(), parameter: *n as i64 });
        }
    }
    let gens = preset.generators();
    FiniteGroup::from_generators_named(&gens, cap, Some(preset.short_name()))
}

/// The presets exercised by the self-test and the acceptance battery.
pub fn standard_presets() -> Vec<Preset> {
    vec![
        Preset::Cyclic(1),
        Preset::Cyclic(2),
        Preset::Cyclic(3),
        Preset::Cyclic(4),
        Preset::DirectProduct(vec![Preset::Cyclic(2), Preset::Cyclic(2)]),
        Preset::Symmetric(3),
        Preset::Dihedral(4),
        Preset::Quaternion8,
        Preset::Dihedral(5),
        Preset::Symmetric(4),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sizes(g: &FiniteGroup) -> Vec<usize> {
        g.classes().classes.iter().map(Vec::len).collect()
    }

    #[test]
    fn single_involution() {
        let g = FiniteGroup::from_generators(&[vec![1, 0]], DEFAULT_ORDER_CAP).unwrap();
        assert_eq!(g.order(), 2);
    }

    #[test]
    fn transposition_and_three_cycle() {
        let g = FiniteGroup::from_generators(&[vec![1, 0, 2], vec![1, 2, 0]], DEFAULT_ORDER_CAP).unwrap();
        assert_eq!(g.order(), 6);
        assert_eq!(sizes(&g), vec![1, 3, 2]);
    }

    #[test]
    fn empty_generators_give_trivial_group() {
        let g = FiniteGroup::from_generators(&[], DEFAULT_ORDER_CAP).unwrap();
        assert_eq!(g.order(), 1);
        assert_eq!(g.exponent(), 1);
    }

    #[test]
    fn cap_is_enforced() {
        let err = preset_group_with_cap(&Preset::Symmetric(4), 10).unwrap_err();
        assert_eq!(err, GroupError::OrderCapExceeded { cap: 10 });
    }

    #[test]
    fn invalid_generators_rejected() {
        assert!(matches!(FiniteGroup::from_generators(&[vec![0, 0]], 10), Err(GroupError::InvalidGenerator { .. })));
        assert!(matches!(
            FiniteGroup::from_generators(&[vec![1, 0], vec![0, 1, 2]], 10),
            Err(GroupError::DegreeMismatch { .. })
        ));
    }

    #[test]
    fn preset_examples() {
        let z4 = preset_group(&Preset::Cyclic(4)).unwrap();
        assert_eq!((z4.order(), z4.classes().len()), (4, 4));

        let s3 = preset_group(&Preset::Symmetric(3)).unwrap();
        assert_eq!(sizes(&s3), vec![1, 3, 2]);
        let cent: Vec<usize> = s3.classes().centralizer.iter().map(Vec::len).collect();
        assert_eq!(cent, vec![6, 2, 3]);

        let q8 = preset_group(&Preset::Quaternion8).unwrap();
        assert_eq!(q8.order(), 8);
        let mut s = sizes(&q8);
        s.sort();
        assert_eq!(s, vec![1, 1, 2, 2, 2]);

        let d4 = preset_group(&Preset::Dihedral(4)).unwrap();
        assert_eq!(d4.order(), 8);
        assert!(!d4.is_abelian());
        let d2 = preset_group(&Preset::Dihedral(2)).unwrap();
        assert_eq!(d2.order(), 4);
        assert!(d2.is_abelian());
        let d1 = preset_group(&Preset::Dihedral(1)).unwrap();
        assert_eq!(d1.order(), 2);
    }

    #[test]
    fn preset_parsing() {
        assert_eq!(Preset::parse("S3").unwrap(), Preset::Symmetric(3));
        assert_eq!(Preset::parse("cyclic:5").unwrap(), Preset::Cyclic(5));
        assert_eq!(Preset::parse("Q8").unwrap(), Preset::Quaternion8);
        assert_eq!(
            Preset::parse("Z2xS3").unwrap(),
            Preset::DirectProduct(vec![Preset::Cyclic(2), Preset::Symmetric(3)])
        );
        assert!(matches!(Preset::parse("S7"), Err(GroupError::ParameterOutOfRange { .. })));
        assert!(matches!(Preset::parse("A5"), Err(GroupError::UnknownPreset(_))));
        assert!(matches!(Preset::from_name("nope", Some(1)), Err(GroupError::UnknownPreset(_))));
        let z2s3 = preset_group(&Preset::parse("Z2xS3").unwrap()).unwrap();
        assert_eq!(z2s3.order(), 12);
        assert_eq!(z2s3.classes().len(), 6);
    }

    #[test]
    fn conjugacy_examples() {
        let z3 = preset_group(&Preset::Cyclic(3)).unwrap();
        assert_eq!(sizes(&z3), vec![1, 1, 1]);

        let s3 = preset_group(&Preset::Symmetric(3)).unwrap();
        let info = s3.classes();
        let three_cycle = 2;
        assert_eq!(s3.element_order(info.representative[three_cycle]), 3);
        assert_eq!(info.power_map[three_cycle][2], three_cycle);
        assert_eq!(info.power_map[three_cycle][3], 0);

        let q8 = preset_group(&Preset::Quaternion8).unwrap();
        let info = q8.classes();
        // the central involution -1
        let minus_one = (0..info.len()).find(|&c| info.class_size(c) == 1 && c != 0).unwrap();
        assert_eq!(info.centralizer[minus_one].len(), 8);
    }

    #[test]
    fn class_invariants_on_presets() {
        for p in standard_presets() {
            let g = preset_group(&p).unwrap();
            g.check_invariants().unwrap();
            let info = g.classes();
            assert_eq!(info.classes[0], vec![0]);
            assert_eq!(info.classes.iter().map(Vec::len).sum::<usize>(), g.order());
            for c in 0..info.len() {
                let rep = info.representative[c];
                assert_eq!(info.class_size(c) * info.centralizer[c].len(), g.order());
                assert!(info.classes[c].iter().all(|&x| info.class_of[x] == c));
                assert_eq!(info.class_of[rep], c);
                let cent = &info.centralizer[c];
                for &x in cent {
                    assert!(g.commute(x, rep));
                    assert!(cent.binary_search(&g.inv(x)).is_ok());
                    for &y in cent {
                        assert!(cent.binary_search(&g.mul(x, y)).is_ok());
                    }
                }
            }
            for h in 0..g.order() {
                let s = info.transporter[h];
                assert_eq!(g.conj(s, info.representative[info.class_of[h]]), h);
            }
            if g.is_abelian() {
                assert!(info.classes.iter().all(|c| c.len() == 1));
                assert!(info.centralizer.iter().all(|c| c.len() == g.order()));
            }
        }
    }

    #[test]
    fn presets_are_deterministic() {
        for p in standard_presets() {
            let a = preset_group(&p).unwrap();
            let b = preset_group(&p).unwrap();
            assert_eq!(a.mul_table(), b.mul_table());
            assert_eq!(a.digest(), b.digest());
        }
    }

    #[test]
    fn table_loader_roundtrip_and_rejections() {
        let s3 = preset_group(&Preset::Symmetric(3)).unwrap();
        let json = serde_json::to_string(&s3.to_file()).unwrap();
        let back = FiniteGroup::from_json(&json).unwrap();
        assert_eq!(back, s3);

        // identity not at 0
        let bad = GroupFile { order: 2, mul: vec![1, 0, 0, 1], name: None };
        assert!(FiniteGroup::from_file(bad).is_err());
        // latin square but not associative: 3-element loop with identity 0
        let loop3 = GroupFile { order: 3, mul: vec![0, 1, 2, 1, 0, 2, 2, 2, 0], name: None };
        assert!(FiniteGroup::from_file(loop3).is_err());
        // valid latin square with identity, non-associative, order 5
        let quasi = vec![
            0, 1, 2, 3, 4, //
            1, 0, 3, 4, 2, //
            2, 4, 0, 1, 3, //
            3, 2, 4, 0, 1, //
            4, 3, 1, 2, 0,
        ];
        let err = FiniteGroup::from_table(5, quasi, None).unwrap_err();
        assert!(matches!(err, GroupError::InvalidTable(ref m) if m.contains("associative")), "{err}");
        assert!(FiniteGroup::from_json("{\"order\": 2}").is_err());
    }

    #[test]
    fn subgroup_reindexing() {
        let s3 = preset_group(&Preset::Symmetric(3)).unwrap();
        let info = s3.classes();
        let (sub, map) = s3.subgroup(&info.centralizer[1]).unwrap();
        assert_eq!(sub.order(), 2);
        assert_eq!(map[0], 0);
        assert!(s3.subgroup(&[0, info.representative[1], info.representative[2]]).is_err());
    }

    #[test]
    fn cycle_names() {
        assert_eq!(cycle_notation(&[0, 1, 2]), "()");
        assert_eq!(cycle_notation(&[1, 0, 2]), "(12)");
        assert_eq!(cycle_notation(&[1, 2, 0, 3]), "(123)");
    }
}
