//! Exact irreducible character tables by the Dixon–Schneider method.
//!
//! The class-sum structure constants are reduced modulo a prime
//! `p ≡ 1 (mod e)` with `p > 2√N`. Common eigenvectors of the class matrices
//! over `F_p` give the central characters `ω_χ`; degrees follow from the norm
//! relation, and every value is lifted to `Q(ζ_e)` by recovering the
//! eigenvalue multiplicities of `ρ(g)` from the power map.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cyclotomic::{CycloField, CycloInt, CycloNumber};
use crate::group::{FiniteGroup, GroupError};

/// Largest prime tried when looking for `p ≡ 1 (mod e)`.
pub const DEFAULT_PRIME_BOUND: u64 = 50_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CharTableError {
    #[error("no prime p ≡ 1 (mod {exponent}) with p > {min} below {bound}")]
    NoSuitablePrime { exponent: usize, min: u64, bound: u64 },
    #[error("class matrices failed to split a {dim}-dimensional eigenspace modulo {prime}")]
    NoSplit { dim: usize, prime: u64 },
    #[error("lifting failed modulo {prime}: {reason}")]
    LiftFailed { prime: u64, reason: String },
    #[error("orthogonality check failed: {0}")]
    Orthogonality(String),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("arithmetic overflow while verifying the table")]
    Overflow,
}

/// Irreducible characters of a group. Rows are characters ordered by degree
/// (trivial character first, then lexicographic on values); columns are
/// conjugacy classes in canonical order. Values live in `Q(ζ_e)` for the
/// group exponent `e`.
#[derive(Debug, Clone)]
pub struct CharacterTable {
    pub conductor: usize,
    pub class_sizes: Vec<usize>,
    pub degrees: Vec<usize>,
    values: Vec<Vec<CycloInt>>,
    pub prime: u64,
}

impl CharacterTable {
    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn order(&self) -> usize {
        self.class_sizes.iter().sum()
    }

    pub fn field(&self) -> Arc<CycloField> {
        CycloField::get(self.conductor)
    }

    /// Integral value `χ_row(class)`.
    pub fn value_int(&self, row: usize, class: usize) -> &CycloInt {
        &self.values[row][class]
    }

    pub fn value(&self, row: usize, class: usize) -> CycloNumber {
        self.field().int_to_number(&self.values[row][class])
    }

    /// The table's values embedded in `Q(ζ_target)`.
    pub fn values_in(&self, target: usize) -> Result<Vec<Vec<CycloInt>>, CharTableError> {
        let field = self.field();
        self.values
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| {
                        field.int_to_number(v).embed(target).ok().and_then(|x| x.to_cyclo_int()).ok_or_else(|| {
                            CharTableError::LiftFailed {
                                prime: self.prime,
                                reason: format!("cannot embed conductor {} into {target}", self.conductor),
                            }
                        })
                    })
                    .collect()
            })
            .collect()
    }

    /// Both orthogonality relations, checked exactly, plus `Σ deg² = N`.
    /// `inverse_class[c]` is the class of inverses of class `c`.
    pub fn verify(&self, inverse_class: &[usize]) -> Result<(), CharTableError> {
        let k = self.len();
        let n = self.order() as i128;
        let field = self.field();
        if self.degrees.iter().map(|&d| (d * d) as i128).sum::<i128>() != n {
            return Err(CharTableError::Orthogonality("sum of squared degrees differs from |G|".into()));
        }
        for i in 0..k {
            if self.values[i][0].as_integer() != Some(self.degrees[i] as i128) {
                return Err(CharTableError::Orthogonality(format!("column 0 of row {i} is not its degree")));
            }
        }
        if !self.values[0].iter().all(|v| v.as_integer() == Some(1)) {
            return Err(CharTableError::Orthogonality("row 0 is not the trivial character".into()));
        }
        let conj: Vec<Vec<CycloInt>> =
            self.values.iter().map(|row| (0..k).map(|c| row[inverse_class[c]].clone()).collect()).collect();
        for (c, &ic) in inverse_class.iter().enumerate() {
            for i in 0..k {
                let direct = field.int_conj(&self.values[i][c]).map_err(|_| CharTableError::Overflow)?;
                if direct != self.values[i][ic] {
                    return Err(CharTableError::Orthogonality(format!(
                        "χ_{i} on class {c} and its inverse class are not conjugate"
                    )));
                }
            }
        }
        for i in 0..k {
            for j in 0..k {
                let mut acc = field.int_zero();
                for c in 0..k {
                    let term = field.int_mul(&self.values[i][c], &conj[j][c]).map_err(|_| CharTableError::Overflow)?;
                    field
                        .int_scale_add(&mut acc, self.class_sizes[c] as i128, &term)
                        .map_err(|_| CharTableError::Overflow)?;
                }
                let want = if i == j { n } else { 0 };
                if acc.as_integer() != Some(want) {
                    return Err(CharTableError::Orthogonality(format!("rows {i} and {j}")));
                }
            }
        }
        for c in 0..k {
            for d in 0..k {
                let mut acc = field.int_zero();
                for i in 0..k {
                    field
                        .int_mul_add(&mut acc, &self.values[i][c], &conj[i][d])
                        .map_err(|_| CharTableError::Overflow)?;
                }
                let want = if c == d { n / self.class_sizes[c] as i128 } else { 0 };
                if acc.as_integer() != Some(want) {
                    return Err(CharTableError::Orthogonality(format!("columns {c} and {d}")));
                }
            }
        }
        Ok(())
    }

    pub fn to_file(&self, representatives: &[String]) -> CharTableFile {
        CharTableFile {
            conductor: self.conductor,
            prime: self.prime,
            degrees: self.degrees.clone(),
            class_sizes: self.class_sizes.clone(),
            class_representatives: representatives.to_vec(),
            values: (0..self.len()).map(|i| (0..self.len()).map(|c| self.value(i, c)).collect()).collect(),
        }
    }

    pub fn from_file(file: &CharTableFile) -> Option<CharacterTable> {
        let values = file
            .values
            .iter()
            .map(|row| row.iter().map(CycloNumber::to_cyclo_int).collect::<Option<Vec<_>>>())
            .collect::<Option<Vec<_>>>()?;
        Some(CharacterTable {
            conductor: file.conductor,
            class_sizes: file.class_sizes.clone(),
            degrees: file.degrees.clone(),
            values,
            prime: file.prime,
        })
    }
}

/// Serialized form of a character table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CharTableFile {
    pub conductor: usize,
    pub prime: u64,
    pub degrees: Vec<usize>,
    pub class_sizes: Vec<usize>,
    pub class_representatives: Vec<String>,
    pub values: Vec<Vec<CycloNumber>>,
}

type CacheCell = Arc<OnceLock<Result<Arc<CharacterTable>, CharTableError>>>;

fn table_cache() -> &'static Mutex<HashMap<[u8; 32], CacheCell>> {
    static CACHE: OnceLock<Mutex<HashMap<[u8; 32], CacheCell>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Cached character table of `g`, keyed by the digest of its Cayley table.
/// Concurrent callers for the same group share a single construction.
pub fn character_table(g: &FiniteGroup) -> Result<Arc<CharacterTable>, CharTableError> {
    let cell = {
        let mut cache = table_cache().lock().expect("table cache poisoned");
        cache.entry(*g.digest()).or_default().clone()
    };
    cell.get_or_init(|| compute_character_table(g, DEFAULT_PRIME_BOUND).map(Arc::new)).clone()
}

/// Pre-populates the cache, e.g. from a table loaded from disk.
pub fn seed_cache(g: &FiniteGroup, table: Arc<CharacterTable>) {
    let cell = {
        let mut cache = table_cache().lock().expect("table cache poisoned");
        cache.entry(*g.digest()).or_default().clone()
    };
    let _ = cell.set(Ok(table));
}

/// A subgroup re-indexed as a standalone group together with its table.
#[derive(Debug, Clone)]
pub struct SubgroupTable {
    pub subgroup: Arc<FiniteGroup>,
    /// `to_parent[i]` is the parent index of subgroup element `i`.
    pub to_parent: Vec<usize>,
    pub table: Arc<CharacterTable>,
}

impl SubgroupTable {
    /// Subgroup-local index of a parent element, if it lies in the subgroup.
    pub fn local_index(&self, parent: usize) -> Option<usize> {
        self.to_parent.binary_search(&parent).ok()
    }
}

pub fn restrict_table_to_subgroup(g: &FiniteGroup, elements: &[usize]) -> Result<SubgroupTable, CharTableError> {
    let (sub, to_parent) = g.subgroup(elements)?;
    let table = character_table(&sub)?;
    Ok(SubgroupTable { subgroup: Arc::new(sub), to_parent, table })
}

/// Uncached Dixon–Schneider computation.
pub fn compute_character_table(g: &FiniteGroup, prime_bound: u64) -> Result<CharacterTable, CharTableError> {
    let info = g.classes();
    let k = info.len();
    let n = g.order();
    let e = g.exponent();
    let class_sizes: Vec<usize> = info.classes.iter().map(Vec::len).collect();
    let field = CycloField::get(e);
    if k == 1 {
        let table = CharacterTable {
            conductor: e,
            class_sizes,
            degrees: vec![1],
            values: vec![vec![field.int_from(1)]],
            prime: 0,
        };
        table.verify(&info.inverse_class)?;
        return Ok(table);
    }

    let min = 2 * isqrt(n as u64) + 2;
    let p = find_prime(e as u64, min, prime_bound)?;
    let fp = Fp::new(p);

    // Simultaneous eigenspaces of the class matrices M_r[s][t] = a_{rst}.
    let mut spaces: Vec<Vec<Vec<u64>>> = vec![(0..k).map(|i| unit_vector(k, i)).collect()];
    for r in 1..k {
        if spaces.iter().all(|s| s.len() == 1) {
            break;
        }
        let m = class_matrix(g, r, &fp);
        let mut next = Vec::new();
        for basis in spaces {
            if basis.len() == 1 {
                next.push(basis);
            } else {
                next.extend(split_space(&m, &basis, &fp));
            }
        }
        spaces = next;
    }
    if let Some(s) = spaces.iter().find(|s| s.len() > 1) {
        return Err(CharTableError::NoSplit { dim: s.len(), prime: p });
    }

    let z = fp.pow(fp.primitive_root(), (p - 1) / e as u64);
    let e_inv = fp.inv(e as u64 % p);
    let mut rows: Vec<(usize, Vec<CycloInt>)> = Vec::with_capacity(k);
    for space in &spaces {
        let v = &space[0];
        if v[0] == 0 {
            return Err(CharTableError::LiftFailed { prime: p, reason: "eigenvector vanishes at the identity".into() });
        }
        let scale = fp.inv(v[0]);
        let omega: Vec<u64> = v.iter().map(|&x| fp.mul(x, scale)).collect();
        // Σ_t ω_t ω_{t'} / h_t = N / χ(1)²
        let mut s = 0u64;
        for t in 0..k {
            let term = fp.mul(fp.mul(omega[t], omega[info.inverse_class[t]]), fp.inv(class_sizes[t] as u64 % p));
            s = fp.add(s, term);
        }
        if s == 0 {
            return Err(CharTableError::LiftFailed { prime: p, reason: "degenerate norm".into() });
        }
        let d2 = fp.mul(n as u64 % p, fp.inv(s));
        let degree = (1..=isqrt(n as u64))
            .find(|&d| d * d % p == d2)
            .ok_or_else(|| CharTableError::LiftFailed { prime: p, reason: "degree is not a square root".into() })?
            as usize;
        let chi_p: Vec<u64> =
            (0..k).map(|t| fp.mul(fp.mul(degree as u64, omega[t]), fp.inv(class_sizes[t] as u64 % p))).collect();
        let mut values = Vec::with_capacity(k);
        for t in 0..k {
            let mut value = field.int_zero();
            for j in 0..e {
                // multiplicity of ζ^j as an eigenvalue of ρ(g_t)
                let mut acc = 0u64;
                for kk in 0..e {
                    let w = fp.pow(z, ((e - j) * kk % e) as u64);
                    acc = fp.add(acc, fp.mul(chi_p[info.power_map[t][kk]], w));
                }
                let mult = fp.mul(acc, e_inv);
                if mult > degree as u64 {
                    return Err(CharTableError::LiftFailed {
                        prime: p,
                        reason: format!("eigenvalue multiplicity {mult} exceeds degree {degree}"),
                    });
                }
                if mult > 0 {
                    field
                        .int_scale_add(&mut value, mult as i128, &field.int_root(j as i64))
                        .map_err(|_| CharTableError::Overflow)?;
                }
            }
            values.push(value);
        }
        rows.push((degree, values));
    }
    rows.sort_by(|(da, va), (db, vb)| {
        let triv_a = va.iter().all(|v| v.as_integer() == Some(1));
        let triv_b = vb.iter().all(|v| v.as_integer() == Some(1));
        da.cmp(db).then(triv_b.cmp(&triv_a)).then_with(|| va.cmp(vb))
    });
    let table = CharacterTable {
        conductor: e,
        class_sizes,
        degrees: rows.iter().map(|r| r.0).collect(),
        values: rows.into_iter().map(|r| r.1).collect(),
        prime: p,
    };
    table.verify(&info.inverse_class)?;
    Ok(table)
}

fn unit_vector(k: usize, i: usize) -> Vec<u64> {
    let mut v = vec![0; k];
    v[i] = 1;
    v
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Smallest prime `p ≡ 1 (mod e)` with `p ≥ min`.
fn find_prime(e: u64, min: u64, bound: u64) -> Result<u64, CharTableError> {
    let mut p = 1 + e;
    while p < min {
        p += e;
    }
    while p <= bound {
        if is_prime(p) {
            return Ok(p);
        }
        p += e;
    }
    Err(CharTableError::NoSuitablePrime { exponent: e as usize, min, bound })
}

/// `M_r[s][t] = #{x ∈ C_r : x^-1 z_t ∈ C_s}` for the class representative `z_t`.
fn class_matrix(g: &FiniteGroup, r: usize, fp: &Fp) -> Vec<Vec<u64>> {
    let info = g.classes();
    let k = info.len();
    let mut m = vec![vec![0u64; k]; k];
    for t in 0..k {
        let zt = info.representative[t];
        for &x in &info.classes[r] {
            let s = info.class_of[g.mul(g.inv(x), zt)];
            m[s][t] += 1;
        }
    }
    for row in &mut m {
        for v in row.iter_mut() {
            *v %= fp.p;
        }
    }
    m
}

/// Splits the invariant subspace spanned by `basis` (column vectors) into
/// eigenspaces of `m`.
fn split_space(m: &[Vec<u64>], basis: &[Vec<u64>], fp: &Fp) -> Vec<Vec<Vec<u64>>> {
    let k = m.len();
    let d = basis.len();
    let image: Vec<Vec<u64>> = basis
        .iter()
        .map(|b| (0..k).map(|s| (0..k).fold(0, |acc, t| fp.add(acc, fp.mul(m[s][t], b[t])))).collect())
        .collect();
    // Solve basis · R = image for the restricted matrix R (d × d).
    let mut aug: Vec<Vec<u64>> = (0..k)
        .map(|s| {
            let mut row: Vec<u64> = basis.iter().map(|b| b[s]).collect();
            row.extend(image.iter().map(|v| v[s]));
            row
        })
        .collect();
    let pivots = rref(&mut aug, d, fp);
    debug_assert_eq!(pivots.len(), d, "basis must have full rank");
    let restricted: Vec<Vec<u64>> = (0..d).map(|i| aug[i][d..2 * d].to_vec()).collect();

    let mut out = Vec::new();
    let mut found = 0;
    for lambda in 0..fp.p {
        if found == d {
            break;
        }
        let mut shifted = restricted.clone();
        for (i, row) in shifted.iter_mut().enumerate() {
            row[i] = fp.sub(row[i], lambda);
        }
        let null = nullspace(&shifted, fp);
        if null.is_empty() {
            continue;
        }
        found += null.len();
        let vectors = null
            .iter()
            .map(|c| (0..k).map(|s| (0..d).fold(0, |acc, j| fp.add(acc, fp.mul(basis[j][s], c[j])))).collect())
            .collect();
        out.push(vectors);
    }
    out
}

/// Reduced row echelon form on the first `cols` columns; returns pivot columns.
fn rref(a: &mut [Vec<u64>], cols: usize, fp: &Fp) -> Vec<usize> {
    let rows = a.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(piv) = (r..rows).find(|&i| a[i][c] != 0) else { continue };
        a.swap(r, piv);
        let inv = fp.inv(a[r][c]);
        for v in a[r].iter_mut() {
            *v = fp.mul(*v, inv);
        }
        for i in 0..rows {
            if i != r && a[i][c] != 0 {
                let f = a[i][c];
                for j in 0..a[i].len() {
                    let t = fp.mul(f, a[r][j]);
                    a[i][j] = fp.sub(a[i][j], t);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Basis of `{x : A x = 0}` for a square matrix over `F_p`.
fn nullspace(a: &[Vec<u64>], fp: &Fp) -> Vec<Vec<u64>> {
    let n = a.len();
    let mut m = a.to_vec();
    let pivots = rref(&mut m, n, fp);
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![0u64; n];
            x[f] = 1;
            for (r, &pc) in pivots.iter().enumerate() {
                x[pc] = fp.sub(0, m[r][f]);
            }
            x
        })
        .collect()
}

struct Fp {
    p: u64,
}

impl Fp {
    fn new(p: u64) -> Fp {
        Fp { p }
    }
    fn add(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.p
    }
    fn sub(&self, a: u64, b: u64) -> u64 {
        (a + self.p - b % self.p) % self.p
    }
    fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.p as u128) as u64
    }
    fn pow(&self, mut b: u64, mut k: u64) -> u64 {
        let mut r = 1 % self.p;
        b %= self.p;
        while k > 0 {
            if k & 1 == 1 {
                r = self.mul(r, b);
            }
            b = self.mul(b, b);
            k >>= 1;
        }
        r
    }
    fn inv(&self, a: u64) -> u64 {
        self.pow(a, self.p - 2)
    }
    /// Smallest generator of `F_p^*`.
    fn primitive_root(&self) -> u64 {
        let phi = self.p - 1;
        let mut factors = Vec::new();
        let mut m = phi;
        let mut d = 2;
        while d * d <= m {
            if m.is_multiple_of(d) {
                factors.push(d);
                while m.is_multiple_of(d) {
                    m /= d;
                }
            }
            d += 1;
        }
        if m > 1 {
            factors.push(m);
        }
        (2..self.p).find(|&g| factors.iter().all(|&q| self.pow(g, phi / q) != 1)).unwrap_or(1)
    }
}
