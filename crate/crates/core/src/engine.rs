//! Dimensions of the spaces `W(Xᵐ; V₁..V_n) = Hom(E(Xᵐ), ⊗_i V_i)`.
//!
//! Three routes are available and cross-checked against each other:
//!
//! * **characters**: `dim W = (1/N^n)·Σ χ_E(g⃗, h⃗)·Π_i conj χ_{λ_i*}(g_i δ_{h_i})`,
//!   evaluated through an [`OrbitHistogram`];
//! * **enumeration**: for all-vacuum labels, the number of `Gⁿ`-orbits on
//!   bundles with trivial monodromy everywhere;
//! * **verlinde**: `Σ_μ S_{0μ}^{2−2g−n}·Π_i S_{λ_i μ}` from the modular data.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::cyclotomic::{CycloError, CycloField, CycloInt, CycloNumber};
use crate::double::{nonneg_integer, DoubleError, DoubleLabel, DrinfeldDouble, OrbitCharacter};
use crate::group::FiniteGroup;
use crate::surfaces::{
    character_square_sum, cut_surface, gluing_bijection_check, orbit_histogram, BundleSpace, Cut, GluingCaps,
    GluingReport, MarkedSurface, OrbitHistogram, SurfaceError, DEFAULT_COUNT_CAP, DEFAULT_MATERIALIZE_CAP,
};

/// Default cap on character-route work (slice tuples times group order).
pub const DEFAULT_GRID_CAP: u64 = 10_000_000;

#[derive(Debug, Error, Clone)]
pub enum EngineError {
    #[error(transparent)]
    Double(#[from] DoubleError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Cyclo(#[from] CycloError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("route `{route}` does not apply: {reason}")]
    NotApplicable { route: &'static str, reason: String },
    #[error("{check} failed")]
    Violation { check: String, payload: serde_json::Value },
}

/// Coarse classification of an error, used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Cap,
    Violation,
}

impl EngineError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            EngineError::InvalidInput(_) | EngineError::NotApplicable { .. } => ErrorKind::Usage,
            EngineError::Double(DoubleError::UnknownLabel(_)) => ErrorKind::Usage,
            EngineError::Surface(e) if e.is_cap() => ErrorKind::Cap,
            EngineError::Surface(
                SurfaceError::InvalidCut(_)
                | SurfaceError::InvalidSurface(_)
                | SurfaceError::InvalidTuple(_)
                | SurfaceError::BoundaryIndex { .. },
            ) => ErrorKind::Usage,
            EngineError::Cyclo(CycloError::Overflow) => ErrorKind::Cap,
            EngineError::Double(DoubleError::CharTable(_)) => ErrorKind::Cap,
            _ => ErrorKind::Violation,
        }
    }

    /// Machine-readable details, including any counterexample.
    pub fn payload(&self) -> serde_json::Value {
        match self {
            EngineError::Violation { check, payload } => json!({ "check": check, "counterexample": payload }),
            EngineError::Surface(SurfaceError::GluingMismatch(p)) => {
                json!({ "check": "gluing bijection", "counterexample": p })
            }
            EngineError::Surface(SurfaceError::RelationViolated(p)) => {
                json!({ "check": "rho relations", "counterexample": p })
            }
            _ => json!({}),
        }
    }
}

fn violation(check: &str, payload: serde_json::Value) -> EngineError {
    EngineError::Violation { check: check.into(), payload }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Caps {
    /// Streamed bundle states.
    pub count: u64,
    /// Stored bundle states.
    pub materialize: u64,
    /// Character-route work units.
    pub grid: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { count: DEFAULT_COUNT_CAP, materialize: DEFAULT_MATERIALIZE_CAP, grid: DEFAULT_GRID_CAP }
    }
}

impl Caps {
    fn gluing(&self) -> GluingCaps {
        GluingCaps { count: self.count, materialize: self.materialize }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Characters when within the grid cap, plus Verlinde.
    Auto,
    Enumeration,
    Characters,
    Verlinde,
    /// Every route that applies.
    All,
}

impl std::str::FromStr for Method {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Method, EngineError> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(Method::Auto),
            "enumeration" | "enum" => Ok(Method::Enumeration),
            "characters" | "character" | "chars" => Ok(Method::Characters),
            "verlinde" => Ok(Method::Verlinde),
            "all" => Ok(Method::All),
            other => Err(EngineError::InvalidInput(format!("unknown method `{other}`"))),
        }
    }
}

/// A formal non-negative combination `Σ c_λ ρ_λ`, as `(label index, c)`.
pub type LabelCombo = Vec<(usize, u64)>;

/// One label combination per boundary of a surface.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabelVector {
    pub surface: MarkedSurface,
    pub labels: Vec<LabelCombo>,
}

impl LabelVector {
    pub fn new(surface: MarkedSurface, labels: Vec<LabelCombo>) -> Result<LabelVector, EngineError> {
        if labels.len() != surface.boundary_count() {
            return Err(EngineError::InvalidInput(format!(
                "{} labels given for {} boundaries",
                labels.len(),
                surface.boundary_count()
            )));
        }
        Ok(LabelVector { surface, labels })
    }

    /// One simple label per boundary.
    pub fn simple(surface: MarkedSurface, labels: &[usize]) -> Result<LabelVector, EngineError> {
        LabelVector::new(surface, labels.iter().map(|&l| vec![(l, 1)]).collect())
    }

    pub fn vacuum(surface: MarkedSurface) -> LabelVector {
        let n = surface.boundary_count();
        LabelVector { surface, labels: vec![vec![(0, 1)]; n] }
    }

    fn is_vacuum(&self) -> bool {
        self.labels.iter().all(|c| {
            let nonzero: Vec<_> = c.iter().filter(|(_, k)| *k > 0).collect();
            matches!(nonzero.as_slice(), [(0, 1)])
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DimReport {
    pub surface: MarkedSurface,
    pub labels: Vec<LabelCombo>,
    pub enumeration: Option<u64>,
    pub characters: Option<u64>,
    pub verlinde: Option<u64>,
    pub value: u64,
}

/// `dim W(X; λ⃗)` for every label tuple, keyed by label indices; zero
/// entries omitted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecompositionTable {
    pub surface: MarkedSurface,
    pub entries: BTreeMap<Vec<usize>, u64>,
    /// `Σ (Π dim λ_i)·dim W`.
    pub weighted_sum: u128,
    /// `|P(Xᵐ)|`.
    pub bundle_count: u128,
    /// `Σ (dim W)²`.
    pub square_sum: u128,
    /// `⟨χ_E, χ_E⟩` by counting.
    pub character_norm: u128,
}

impl DecompositionTable {
    pub fn get(&self, labels: &[usize]) -> u64 {
        self.entries.get(labels).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GluingContribution {
    pub label: usize,
    pub dim: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GluingDimReport {
    pub surface: MarkedSurface,
    pub cut: Cut,
    pub pieces: Vec<MarkedSurface>,
    pub labels: Vec<LabelCombo>,
    pub lhs: u64,
    pub rhs: u64,
    pub contributions: Vec<GluingContribution>,
    pub bundles: GluingReport,
}

/// Modular data of `Rep D(G)`.
#[derive(Debug, Clone)]
pub struct ModularData {
    pub labels: Vec<DoubleLabel>,
    pub s: Vec<Vec<CycloNumber>>,
    pub t: Vec<CycloNumber>,
    /// `λ ↦ λ*`, equal to `S²` as a permutation.
    pub charge_conjugation: Vec<usize>,
    /// The root of unity `p` with `(ST)³ = p·S²`.
    pub st_cube_scalar: CycloNumber,
    /// `N²·S`, which is integral.
    scaled_s: Vec<Vec<CycloInt>>,
    /// `N_{λμ}^ν` from the Verlinde formula.
    pub verlinde_fusion: Vec<Vec<Vec<u64>>>,
}

impl ModularData {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Modular-functor computations for one group.
pub struct Engine {
    double: Arc<DrinfeldDouble>,
    caps: Caps,
    /// `Y[λ][o] = conj χ_{λ*}(o)`.
    dual_conj: Vec<OrbitCharacter>,
    modular: OnceLock<Result<Arc<ModularData>, EngineError>>,
    histograms: Mutex<HashMap<(usize, usize), Arc<OrbitHistogram>>>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine").field("double", &self.double).field("caps", &self.caps).finish()
    }
}

impl Engine {
    pub fn new(group: Arc<FiniteGroup>, caps: Caps) -> Result<Engine, EngineError> {
        Engine::from_double(Arc::new(DrinfeldDouble::new(group)?), caps)
    }

    pub fn from_double(double: Arc<DrinfeldDouble>, caps: Caps) -> Result<Engine, EngineError> {
        let field = double.field().clone();
        let dual_conj = (0..double.len())
            .map(|l| {
                double
                    .orbit_character(double.dual_index(l))
                    .iter()
                    .map(|v| field.int_conj(v))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<_, _>>()?;
        Ok(Engine { double, caps, dual_conj, modular: OnceLock::new(), histograms: Mutex::new(HashMap::new()) })
    }

    pub fn double(&self) -> &Arc<DrinfeldDouble> {
        &self.double
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        self.double.group()
    }

    pub fn caps(&self) -> Caps {
        self.caps
    }

    fn field(&self) -> &Arc<CycloField> {
        self.double.field()
    }

    fn order(&self) -> usize {
        self.group().order()
    }

    fn check_labels(&self, labels: &[LabelCombo]) -> Result<(), EngineError> {
        let k = self.double.len();
        for combo in labels {
            if let Some(&(l, _)) = combo.iter().find(|(l, _)| *l >= k) {
                return Err(EngineError::InvalidInput(format!("label index {l} out of range (have {k} labels)")));
            }
        }
        Ok(())
    }

    fn histogram(&self, surface: &MarkedSurface) -> Result<Arc<OrbitHistogram>, EngineError> {
        let key = (surface.genus(), surface.boundary_count());
        if let Some(h) = self.histograms.lock().expect("histogram cache poisoned").get(&key) {
            return Ok(h.clone());
        }
        let h = Arc::new(orbit_histogram(&self.double, surface, self.caps.grid)?);
        Ok(self.histograms.lock().expect("histogram cache poisoned").entry(key).or_insert(h).clone())
    }

    fn combo_character(&self, combo: &LabelCombo) -> Result<OrbitCharacter, EngineError> {
        let f = self.field();
        let mut out = vec![f.int_zero(); self.double.len()];
        for &(l, c) in combo {
            for (slot, v) in out.iter_mut().zip(&self.dual_conj[l]) {
                f.int_scale_add(slot, c as i128, v)?;
            }
        }
        Ok(out)
    }

    fn divide_by_order(&self, total: &CycloInt, what: impl FnOnce() -> serde_json::Value) -> Result<u64, EngineError> {
        let n = self.order() as i128;
        match total.as_integer() {
            Some(x) if x >= 0 && x % n == 0 => Ok((x / n) as u64),
            _ => Err(violation(
                "integrality",
                json!({ "context": what(), "numerator": self.field().int_to_number(total).to_string(), "denominator": n }),
            )),
        }
    }

    /// Character route.
    pub fn dim_characters(&self, lv: &LabelVector) -> Result<u64, EngineError> {
        self.check_labels(&lv.labels)?;
        let hist = self.histogram(&lv.surface)?;
        let ys: Vec<OrbitCharacter> = lv.labels.iter().map(|c| self.combo_character(c)).collect::<Result<_, _>>()?;
        let f = self.field();
        let mut total = f.int_zero();
        'outer: for (key, &count) in &hist.entries {
            let mut prod = f.int_from(count as i128);
            for (y, &o) in ys.iter().zip(key) {
                let v = &y[o as usize];
                if v.is_zero() {
                    continue 'outer;
                }
                prod = f.int_mul(&prod, v)?;
            }
            f.int_scale_add(&mut total, 1, &prod)?;
        }
        self.divide_by_order(&total, || json!({ "surface": lv.surface, "labels": lv.labels }))
    }

    /// Enumeration route: all-vacuum labels only.
    pub fn dim_enumeration(&self, lv: &LabelVector) -> Result<u64, EngineError> {
        if !lv.is_vacuum() {
            return Err(EngineError::NotApplicable {
                route: "enumeration",
                reason: "labels are not all vacuum".into(),
            });
        }
        let g = self.group().as_ref();
        let space = BundleSpace::new(g, &lv.surface);
        let size = space.size().filter(|&s| s <= self.caps.count).ok_or_else(|| SurfaceError::CapExceeded {
            what: "enumeration route".into(),
            needed: format!("{}^{}", g.order(), space.free_len()),
            cap: self.caps.count,
        })?;
        let mut keys = Vec::new();
        for i in 0..size {
            if space.decode(i).m.iter().all(|&m| m == 0) {
                if keys.len() as u64 >= self.caps.materialize {
                    return Err(SurfaceError::CapExceeded {
                        what: "enumeration route".into(),
                        needed: format!(">{}", self.caps.materialize),
                        cap: self.caps.materialize,
                    }
                    .into());
                }
                keys.push(i);
            }
        }
        let mut parent: Vec<usize> = (0..keys.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let gens = g.generating_set();
        for (idx, &k) in keys.iter().enumerate() {
            let t = space.decode(k);
            for i in 1..=lv.surface.boundary_count() {
                for &x in &gens {
                    let image = space.encode(&space.rho(&t, i, x)?);
                    let j = keys.binary_search(&image).expect("action preserves trivial monodromy");
                    let (a, b) = (find(&mut parent, idx), find(&mut parent, j));
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        Ok((0..keys.len()).filter(|&x| find(&mut parent, x) == x).count() as u64)
    }

    /// Verlinde route; also serves closed surfaces (`labels` empty).
    pub fn verlinde_dim(&self, genus: usize, labels: &[LabelCombo]) -> Result<u64, EngineError> {
        self.check_labels(labels)?;
        let md = self.modular_data()?;
        let n = self.order() as i64;
        let exponent = 2 * genus as i64 + labels.len() as i64 - 2;
        let conductor = self.field().conductor();
        let mut total = CycloNumber::zero(conductor);
        for (mu, lab) in md.labels.iter().enumerate() {
            // S_{0μ}^{2−2g−n} = (N / dim μ)^{2g+n−2}
            let base = BigRational::new(BigInt::from(n), BigInt::from(lab.dim as i64));
            let weight = rational_pow(&base, exponent);
            let mut term = CycloNumber::from_rational(conductor, weight);
            for combo in labels {
                let mut s = CycloNumber::zero(conductor);
                for &(l, c) in combo {
                    s = s.checked_add(&md.s[l][mu].scale(&BigRational::from_integer(BigInt::from(c))))?;
                }
                term = term.checked_mul(&s)?;
                if term.is_zero() {
                    break;
                }
            }
            total = total.checked_add(&term)?;
        }
        nonneg_integer(&total, || format!("Verlinde sum for genus {genus}")).map_err(|_| {
            violation("verlinde integrality", json!({ "genus": genus, "labels": labels, "value": total.to_string() }))
        })
    }

    /// `dim W` by the requested routes, which must agree.
    pub fn dim_w(&self, lv: &LabelVector, method: Method) -> Result<DimReport, EngineError> {
        self.check_labels(&lv.labels)?;
        let mut report = DimReport {
            surface: lv.surface.clone(),
            labels: lv.labels.clone(),
            enumeration: None,
            characters: None,
            verlinde: None,
            value: 0,
        };
        let genus = lv.surface.genus();
        match method {
            Method::Enumeration => report.enumeration = Some(self.dim_enumeration(lv)?),
            Method::Characters => report.characters = Some(self.dim_characters(lv)?),
            Method::Verlinde => report.verlinde = Some(self.verlinde_dim(genus, &lv.labels)?),
            Method::Auto => {
                report.characters = match self.dim_characters(lv) {
                    Ok(v) => Some(v),
                    Err(e) if e.kind() == ErrorKind::Cap => None,
                    Err(e) => return Err(e),
                };
                report.verlinde = Some(self.verlinde_dim(genus, &lv.labels)?);
            }
            Method::All => {
                if lv.is_vacuum() {
                    report.enumeration = Some(self.dim_enumeration(lv)?);
                }
                report.characters = Some(self.dim_characters(lv)?);
                report.verlinde = Some(self.verlinde_dim(genus, &lv.labels)?);
            }
        }
        let values: Vec<u64> = [report.enumeration, report.characters, report.verlinde].into_iter().flatten().collect();
        report.value = values[0];
        if values.iter().any(|&v| v != report.value) {
            return Err(violation("route agreement", serde_json::to_value(&report).expect("serializable")));
        }
        Ok(report)
    }

    /// The full table of `dim W(X; λ⃗)` with both completeness identities
    /// checked.
    pub fn decomposition_table(&self, surface: &MarkedSurface) -> Result<DecompositionTable, EngineError> {
        let hist = self.histogram(surface)?;
        let f = self.field();
        let k = self.double.len();
        // nonzero Y[λ][o] per orbit
        let by_orbit: Vec<Vec<(usize, &CycloInt)>> = (0..k)
            .map(|o| (0..k).filter(|&l| !self.dual_conj[l][o].is_zero()).map(|l| (l, &self.dual_conj[l][o])).collect())
            .collect();
        let mut current: BTreeMap<Vec<u32>, CycloInt> =
            hist.entries.iter().map(|(key, &c)| (key.clone(), f.int_from(c as i128))).collect();
        for axis in 0..surface.boundary_count() {
            let mut next: BTreeMap<Vec<u32>, CycloInt> = BTreeMap::new();
            for (key, val) in &current {
                for &(l, y) in &by_orbit[key[axis] as usize] {
                    let mut nk = key.clone();
                    nk[axis] = l as u32;
                    let slot = next.entry(nk).or_insert_with(|| f.int_zero());
                    f.int_mul_add(slot, val, y)?;
                }
            }
            current = next;
        }
        let mut entries = BTreeMap::new();
        for (key, val) in current {
            let labels: Vec<usize> = key.iter().map(|&l| l as usize).collect();
            let dim = self.divide_by_order(&val, || json!({ "surface": surface, "labels": labels }))?;
            if dim > 0 {
                entries.insert(labels, dim);
            }
        }
        let dims: Vec<u128> = self.double.labels().iter().map(|l| l.dim as u128).collect();
        let weighted_sum =
            entries.iter().map(|(ls, &w)| ls.iter().map(|&l| dims[l]).product::<u128>() * w as u128).sum();
        let square_sum = entries.values().map(|&w| w as u128 * w as u128).sum();
        let n = self.order() as u128;
        let g = self.group().as_ref();
        let space = BundleSpace::new(g, surface);
        let bundle_count = (n).pow(space.free_len() as u32);
        let raw_norm = character_square_sum(g, surface, self.caps.count)?;
        let scale = n.pow(surface.boundary_count() as u32);
        let table = DecompositionTable {
            surface: surface.clone(),
            entries,
            weighted_sum,
            bundle_count,
            square_sum,
            character_norm: raw_norm / scale,
        };
        if raw_norm % scale != 0 || table.weighted_sum != bundle_count || table.square_sum != table.character_norm {
            return Err(violation(
                "decomposition completeness",
                json!({
                    "surface": surface,
                    "weighted_sum": table.weighted_sum.to_string(),
                    "bundle_count": bundle_count.to_string(),
                    "square_sum": table.square_sum.to_string(),
                    "character_norm": format!("{raw_norm}/{scale}"),
                }),
            ));
        }
        Ok(table)
    }

    /// Best available single dimension: characters within cap, else Verlinde.
    fn dim_best(&self, lv: &LabelVector) -> Result<u64, EngineError> {
        match self.dim_characters(lv) {
            Err(e) if e.kind() == ErrorKind::Cap => self.verlinde_dim(lv.surface.genus(), &lv.labels),
            other => other,
        }
    }

    /// Cuts `X`, checks the bundle bijection and invariants, and compares
    /// `dim W(X; λ⃗)` with `Σ_μ dim W(X_cut; λ⃗, μ, μ*)`.
    pub fn verify_gluing(&self, lv: &LabelVector, cut: &Cut) -> Result<GluingDimReport, EngineError> {
        self.check_labels(&lv.labels)?;
        let result = cut_surface(&lv.surface, cut)?;
        let bundles = gluing_bijection_check(self.group(), &lv.surface, cut, self.caps.gluing())?;
        let lhs = self.dim_best(lv)?;
        let mut contributions = Vec::new();
        for mu in 0..self.double.len() {
            let mu_star = self.double.dual_index(mu);
            let mut per_piece: Vec<Vec<LabelCombo>> =
                result.pieces.iter().map(|p| vec![Vec::new(); p.boundary_count()]).collect();
            for (i, &(piece, slot)) in result.placement.iter().enumerate() {
                per_piece[piece][slot] = lv.labels[i].clone();
            }
            per_piece[result.first.0][result.first.1] = vec![(mu, 1)];
            per_piece[result.second.0][result.second.1] = vec![(mu_star, 1)];
            let mut dim = 1u64;
            for (piece, labels) in result.pieces.iter().zip(per_piece) {
                dim *= self.dim_best(&LabelVector::new(piece.clone(), labels)?)?;
                if dim == 0 {
                    break;
                }
            }
            if dim > 0 {
                contributions.push(GluingContribution { label: mu, dim });
            }
        }
        let rhs = contributions.iter().map(|c| c.dim).sum();
        let report = GluingDimReport {
            surface: lv.surface.clone(),
            cut: cut.clone(),
            pieces: result.pieces,
            labels: lv.labels.clone(),
            lhs,
            rhs,
            contributions,
            bundles,
        };
        if lhs != rhs {
            return Err(violation("gluing dimension sum", serde_json::to_value(&report).expect("serializable")));
        }
        Ok(report)
    }

    /// The modular data, built and verified once.
    pub fn modular_data(&self) -> Result<Arc<ModularData>, EngineError> {
        self.modular.get_or_init(|| self.compute_modular_data().map(Arc::new)).clone()
    }

    fn compute_modular_data(&self) -> Result<ModularData, EngineError> {
        let d = &self.double;
        let g = d.group().as_ref();
        let f = self.field();
        let info = g.classes();
        let k = d.len();
        let n = g.order();
        let labels = d.labels().to_vec();
        let conj_chars: Vec<OrbitCharacter> = (0..k)
            .map(|l| d.orbit_character(l).iter().map(|v| f.int_conj(v)).collect::<Result<_, _>>())
            .collect::<Result<_, _>>()?;

        // X = N²·S, S_{(a,χ),(b,ψ)} = Σ_{g : [a, gbg⁻¹] = e} conj χ(gbg⁻¹)·conj ψ(g⁻¹ag) / (|C(a)||C(b)|)
        let mut x = vec![vec![f.int_zero(); k]; k];
        for ca in 0..info.len() {
            let a = info.representative[ca];
            for cb in 0..info.len() {
                let b = info.representative[cb];
                let weight = (n * n / (info.centralizer[ca].len() * info.centralizer[cb].len())) as i128;
                let mut pairs: BTreeMap<(usize, usize), i128> = BTreeMap::new();
                for elem in 0..n {
                    let gbg = g.conj(elem, b);
                    if !g.commute(a, gbg) {
                        continue;
                    }
                    let o1 = d.orbit_of(gbg, a).expect("commuting");
                    let o2 = d.orbit_of(g.conj(g.inv(elem), a), b).expect("commuting");
                    *pairs.entry((o1, o2)).or_insert(0) += weight;
                }
                for la in d.class_block(ca) {
                    for lb in d.class_block(cb) {
                        let mut acc = f.int_zero();
                        for (&(o1, o2), &w) in &pairs {
                            let prod = f.int_mul(&conj_chars[la][o1], &conj_chars[lb][o2])?;
                            f.int_scale_add(&mut acc, w, &prod)?;
                        }
                        x[la][lb] = acc;
                    }
                }
            }
        }

        let mut t_int = Vec::with_capacity(k);
        for lab in &labels {
            let a = info.representative[lab.class_index];
            let deg = (lab.dim / info.class_size(lab.class_index)) as i128;
            let v = &d.orbit_character(lab.index)[d.orbit_of(a, a).expect("a commutes with itself")];
            if v.0.iter().any(|c| c % deg != 0) {
                return Err(violation("T is a root of unity", json!({ "label": lab.index })));
            }
            t_int.push(CycloInt(v.0.iter().map(|c| c / deg).collect()));
        }

        let n2 = (n * n) as i128;
        let n4 = n2 * n2;
        let charge_conjugation: Vec<usize> = (0..k).map(|l| d.dual_index(l)).collect();
        let identity = |scale: i128, perm: Option<&[usize]>| -> Vec<Vec<CycloInt>> {
            (0..k)
                .map(|i| {
                    (0..k)
                        .map(|j| {
                            let hit = perm.map_or(i == j, |p| p[i] == j);
                            f.int_from(if hit { scale } else { 0 })
                        })
                        .collect()
                })
                .collect()
        };
        let matmul = |p: &[Vec<CycloInt>], q: &[Vec<CycloInt>]| -> Result<Vec<Vec<CycloInt>>, CycloError> {
            let mut out = vec![vec![f.int_zero(); k]; k];
            for i in 0..k {
                for m in 0..k {
                    if p[i][m].is_zero() {
                        continue;
                    }
                    for j in 0..k {
                        f.int_mul_add(&mut out[i][j], &p[i][m], &q[m][j])?;
                    }
                }
            }
            Ok(out)
        };
        let name = |l: usize| d.label_name(&labels[l]);

        for i in 0..k {
            for j in 0..k {
                if x[i][j] != x[j][i] {
                    return Err(violation("S symmetric", json!({ "row": name(i), "column": name(j) })));
                }
            }
            if x[0][i] != f.int_from(n as i128 * labels[i].dim as i128) {
                return Err(violation("S first row is dim/N", json!({ "label": name(i) })));
            }
        }
        let x_dagger: Vec<Vec<CycloInt>> =
            (0..k).map(|i| (0..k).map(|j| f.int_conj(&x[j][i])).collect::<Result<_, _>>()).collect::<Result<_, _>>()?;
        if matmul(&x, &x_dagger)? != identity(n4, None) {
            return Err(violation("S unitary", json!({ "group": g.name() })));
        }
        let x2 = matmul(&x, &x)?;
        if x2 != identity(n4, Some(&charge_conjugation)) {
            return Err(violation("S squared is charge conjugation", json!({ "group": g.name() })));
        }
        if !t_int[0].as_integer().is_some_and(|v| v == 1) {
            return Err(violation("T vacuum is 1", json!({})));
        }
        let xt: Vec<Vec<CycloInt>> = (0..k)
            .map(|i| (0..k).map(|j| f.int_mul(&x[i][j], &t_int[j])).collect::<Result<_, _>>())
            .collect::<Result<_, _>>()?;
        let xt3 = matmul(&matmul(&xt, &xt)?, &xt)?;
        // (XT)³ = N⁶ (ST)³ and X² = N⁴ S², so (XT)³_{00} = p·N⁶ with C_{00} = 1
        let n6 = n4 * n2;
        if xt3[0][0].0.iter().any(|c| c % n6 != 0) {
            return Err(violation(
                "(ST)^3 proportional to S^2",
                json!({ "entry": f.int_to_number(&xt3[0][0]).to_string() }),
            ));
        }
        let p = CycloInt(xt3[0][0].0.iter().map(|c| c / n6).collect());
        let scaled_x2: Vec<Vec<CycloInt>> = x2
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| f.int_mul(v, &p).map(|w| CycloInt(w.0.iter().map(|c| c * n2).collect())))
                    .collect::<Result<_, _>>()
            })
            .collect::<Result<_, _>>()?;
        let p_num = f.int_to_number(&p);
        let order = num_integer::lcm(2, f.conductor()) as i64;
        if xt3 != scaled_x2 || !p_num.pow(order)?.is_one() {
            return Err(violation("(ST)^3 proportional to S^2", json!({ "scalar": p_num.to_string() })));
        }

        // N_{ab}^c = Σ_m S_am S_bm conj S_cm / S_0m = Σ_m X_am X_bm conj X_cm / (N⁵ dim m)
        let l = labels.iter().fold(1i128, |acc, lab| acc.lcm(&(lab.dim as i128)));
        let denom = l * n4 * n as i128;
        let mut verlinde_fusion = vec![vec![vec![0u64; k]; k]; k];
        for a in 0..k {
            for b in a..k {
                let ab: Vec<CycloInt> = (0..k)
                    .map(|m| {
                        let w = f.int_mul(&x[a][m], &x[b][m])?;
                        let mut scaled = f.int_zero();
                        f.int_scale_add(&mut scaled, l / labels[m].dim as i128, &w)?;
                        Ok(scaled)
                    })
                    .collect::<Result<_, CycloError>>()?;
                for c in 0..k {
                    let mut acc = f.int_zero();
                    for m in 0..k {
                        f.int_mul_add(&mut acc, &ab[m], &x_dagger[m][c])?;
                    }
                    let value = acc.as_integer().filter(|v| v % denom == 0 && *v >= 0).ok_or_else(|| {
                        violation(
                            "Verlinde fusion integrality",
                            json!({ "a": name(a), "b": name(b), "c": name(c), "value": f.int_to_number(&acc).to_string() }),
                        )
                    })?;
                    verlinde_fusion[a][b][c] = (value / denom) as u64;
                    verlinde_fusion[b][a][c] = (value / denom) as u64;
                }
            }
        }
        let fusion = d.fusion_table()?;
        for a in 0..k {
            for b in 0..k {
                if verlinde_fusion[a][b] != fusion[a][b] {
                    return Err(violation(
                        "Verlinde fusion equals coproduct fusion",
                        json!({ "a": name(a), "b": name(b), "verlinde": verlinde_fusion[a][b], "coproduct": fusion[a][b] }),
                    ));
                }
            }
        }

        let inv_n2 = BigRational::new(BigInt::one(), BigInt::from(n2));
        let s = x.iter().map(|row| row.iter().map(|v| f.int_to_number(v).scale(&inv_n2)).collect()).collect();
        let t = t_int.iter().map(|v| f.int_to_number(v)).collect();
        Ok(ModularData { labels, s, t, charge_conjugation, st_cube_scalar: p_num, scaled_s: x, verlinde_fusion })
    }
}

impl ModularData {
    /// `N²·S_{λμ}` as an algebraic integer.
    pub fn scaled_s(&self, lambda: usize, mu: usize) -> &CycloInt {
        &self.scaled_s[lambda][mu]
    }
}

fn rational_pow(base: &BigRational, exponent: i64) -> BigRational {
    let mut out = BigRational::one();
    for _ in 0..exponent.unsigned_abs() {
        out *= base;
    }
    if exponent < 0 && !out.is_zero() {
        out.recip()
    } else {
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{preset_group, standard_presets, Preset};

    fn engine(p: Preset) -> Engine {
        Engine::new(Arc::new(preset_group(&p).unwrap()), Caps::default()).unwrap()
    }

    fn surf(g: usize, n: usize) -> MarkedSurface {
        MarkedSurface::new(g, n).unwrap()
    }

    /// Burnside count of commuting pairs up to simultaneous conjugation.
    fn commuting_pair_orbits(g: &FiniteGroup) -> u64 {
        let n = g.order();
        let mut fixed = 0u64;
        for x in 0..n {
            for a in 0..n {
                for b in 0..n {
                    if g.commute(a, b) && g.commute(x, a) && g.commute(x, b) {
                        fixed += 1;
                    }
                }
            }
        }
        fixed / n as u64
    }

    #[test]
    fn disk_selects_the_vacuum() {
        for p in standard_presets() {
            let e = engine(p);
            for l in 0..e.double().len() {
                let lv = LabelVector::simple(surf(0, 1), &[l]).unwrap();
                let r = e.dim_w(&lv, Method::Auto).unwrap();
                assert_eq!(r.value, u64::from(l == 0));
            }
        }
    }

    #[test]
    fn annulus_pairs_duals() {
        let e = engine(Preset::Symmetric(3));
        let d = e.double().clone();
        for a in 0..d.len() {
            for b in 0..d.len() {
                let lv = LabelVector::simple(surf(0, 2), &[a, b]).unwrap();
                let r = e.dim_w(&lv, Method::All).unwrap();
                assert_eq!(r.value, u64::from(b == d.dual_index(a)));
                assert_eq!(r.characters, r.verlinde);
            }
        }
    }

    #[test]
    fn torus_vacuum_counts_commuting_pair_orbits() {
        for p in [Preset::Symmetric(3), Preset::Cyclic(2), Preset::Quaternion8, Preset::Dihedral(4)] {
            let e = engine(p);
            let oracle = commuting_pair_orbits(e.group());
            let r = e.dim_w(&LabelVector::vacuum(surf(1, 1)), Method::All).unwrap();
            assert_eq!(r.value, oracle);
            assert_eq!(r.enumeration, Some(oracle));
        }
        assert_eq!(commuting_pair_orbits(&preset_group(&Preset::Symmetric(3)).unwrap()), 8);
    }

    #[test]
    fn toric_code_fusion_on_pants() {
        let e = engine(Preset::Cyclic(2));
        // labels 1, 2, 3 are e, m, f
        let r = e.dim_w(&LabelVector::simple(surf(0, 3), &[1, 2, 3]).unwrap(), Method::All).unwrap();
        assert_eq!(r.value, 1);
        let r = e.dim_w(&LabelVector::simple(surf(0, 3), &[1, 2, 2]).unwrap(), Method::All).unwrap();
        assert_eq!(r.value, 0);
    }

    #[test]
    fn pants_reproduce_fusion() {
        for p in [Preset::Symmetric(3), Preset::Quaternion8] {
            let e = engine(p);
            let d = e.double().clone();
            let fusion = d.fusion_table().unwrap();
            let table = e.decomposition_table(&surf(0, 3)).unwrap();
            for a in 0..d.len() {
                for b in 0..d.len() {
                    for c in 0..d.len() {
                        // Hom(vac, a ⊗ b ⊗ c) = N_{ab}^{c*}
                        assert_eq!(table.get(&[a, b, c]), fusion[a][b][d.dual_index(c)]);
                    }
                }
            }
        }
    }

    #[test]
    fn decomposition_examples() {
        let disk = engine(Preset::Symmetric(3)).decomposition_table(&surf(0, 1)).unwrap();
        assert_eq!(disk.entries.into_iter().collect::<Vec<_>>(), vec![(vec![0], 1)]);
        let e = engine(Preset::Cyclic(2));
        let annulus = e.decomposition_table(&surf(0, 2)).unwrap();
        assert_eq!(annulus.entries.len(), 4);
        assert!(annulus.entries.iter().all(|(k, &v)| v == 1 && k[0] == k[1]));
        let torus = e.decomposition_table(&surf(1, 1)).unwrap();
        assert_eq!(torus.weighted_sum, 4);
    }

    #[test]
    fn completeness_battery() {
        for p in [Preset::Cyclic(2), Preset::Cyclic(3), Preset::Symmetric(3), Preset::Quaternion8, Preset::Dihedral(4)]
        {
            let e = engine(p);
            for (g, n) in [(0, 1), (0, 2), (0, 3), (1, 1), (0, 4), (1, 2)] {
                if e.group().order() > 6 && g + n > 3 {
                    continue;
                }
                let t = e.decomposition_table(&surf(g, n)).unwrap();
                assert_eq!(t.weighted_sum, t.bundle_count);
                assert_eq!(t.square_sum, t.character_norm);
            }
        }
    }

    #[test]
    fn dual_placement_is_invisible() {
        // W(λ⃗) = W(λ⃗*) on every entry
        let e = engine(Preset::Quaternion8);
        let d = e.double().clone();
        for (g, n) in [(0, 3), (1, 1), (1, 2)] {
            let t = e.decomposition_table(&surf(g, n)).unwrap();
            for (labels, &v) in &t.entries {
                let dual: Vec<usize> = labels.iter().map(|&l| d.dual_index(l)).collect();
                assert_eq!(t.get(&dual), v);
            }
        }
    }

    #[test]
    fn table_agrees_with_single_queries() {
        let e = engine(Preset::Symmetric(3));
        let x = surf(1, 1);
        let t = e.decomposition_table(&x).unwrap();
        for l in 0..e.double().len() {
            let r = e.dim_w(&LabelVector::simple(x.clone(), &[l]).unwrap(), Method::All).unwrap();
            assert_eq!(r.value, t.get(&[l]));
        }
    }

    #[test]
    fn combinations_are_additive() {
        let e = engine(Preset::Symmetric(3));
        let x = surf(0, 3);
        let combo = vec![(3, 2), (5, 1)];
        let lv = LabelVector::new(x.clone(), vec![combo, vec![(3, 1)], vec![(6, 1)]]).unwrap();
        let r = e.dim_w(&lv, Method::Auto).unwrap();
        let single = |a: usize| e.dim_characters(&LabelVector::simple(x.clone(), &[a, 3, 6]).unwrap()).unwrap();
        assert_eq!(r.value, 2 * single(3) + single(5));
        assert_eq!(r.characters, r.verlinde);
    }

    #[test]
    fn enumeration_rejects_charged_labels() {
        let e = engine(Preset::Cyclic(2));
        let lv = LabelVector::simple(surf(0, 2), &[1, 1]).unwrap();
        assert!(matches!(e.dim_w(&lv, Method::Enumeration), Err(EngineError::NotApplicable { .. })));
        assert_eq!(e.dim_w(&lv, Method::All).unwrap().enumeration, None);
        assert!(matches!(LabelVector::simple(surf(0, 2), &[1]), Err(EngineError::InvalidInput(_))));
        let bad = LabelVector::simple(surf(0, 1), &[17]).unwrap();
        assert!(matches!(e.dim_w(&bad, Method::Auto), Err(EngineError::InvalidInput(_))));
    }

    #[test]
    fn gluing_examples() {
        let e = engine(Preset::Symmetric(3));
        let r = e.verify_gluing(&LabelVector::vacuum(surf(1, 1)), &Cut::NonSeparating).unwrap();
        assert_eq!(r.lhs, 8);
        assert_eq!(r.contributions.len(), 8);
        assert!(r.contributions.iter().all(|c| c.dim == 1));

        let z2 = engine(Preset::Cyclic(2));
        let cut = Cut::Separating { genus: 0, subset: vec!["p1".into(), "p2".into()] };
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for dd in 0..4 {
                        let lv = LabelVector::simple(surf(0, 4), &[a, b, c, dd]).unwrap();
                        let r = z2.verify_gluing(&lv, &cut).unwrap();
                        assert_eq!(r.lhs, u64::from(a ^ b ^ c ^ dd == 0));
                    }
                }
            }
        }

        let trivial = engine(Preset::Cyclic(1));
        for (x, cut) in [
            (surf(1, 1), Cut::NonSeparating),
            (surf(2, 1), Cut::Separating { genus: 1, subset: vec![] }),
            (surf(0, 3), Cut::Separating { genus: 0, subset: vec!["p3".into()] }),
        ] {
            let r = trivial.verify_gluing(&LabelVector::vacuum(x), &cut).unwrap();
            assert_eq!((r.lhs, r.rhs), (1, 1));
        }
    }

    #[test]
    fn gluing_single_labels() {
        let e = engine(Preset::Symmetric(3));
        for l in 0..e.double().len() {
            let lv = LabelVector::simple(surf(1, 1), &[l]).unwrap();
            e.verify_gluing(&lv, &Cut::NonSeparating).unwrap();
            e.verify_gluing(&lv, &Cut::Separating { genus: 1, subset: vec![] }).unwrap();
        }
    }

    #[test]
    fn modular_examples() {
        let z2 = engine(Preset::Cyclic(2));
        let md = z2.modular_data().unwrap();
        let half = |s: i64| CycloNumber::from_rational(2, BigRational::new(s.into(), 2.into()));
        let expected = [[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, 1, -1], [1, -1, -1, 1]];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(md.s[i][j], half(expected[i][j]));
            }
        }
        let t: Vec<i64> = md.t.iter().map(|v| v.to_integer().unwrap().try_into().unwrap()).collect();
        assert_eq!(t, vec![1, 1, 1, -1]);

        let trivial = engine(Preset::Cyclic(1)).modular_data().unwrap();
        assert!(trivial.s[0][0].is_one() && trivial.t[0].is_one());

        let s3 = engine(Preset::Symmetric(3));
        let md = s3.modular_data().unwrap();
        assert_eq!(md.len(), 8);
        for (j, lab) in md.labels.iter().enumerate() {
            assert_eq!(md.s[0][j], CycloNumber::from_rational(6, BigRational::new((lab.dim as i64).into(), 6.into())));
        }
    }

    #[test]
    fn modular_data_for_all_presets() {
        for p in standard_presets() {
            let e = engine(p);
            let md = e.modular_data().unwrap();
            assert!(md.st_cube_scalar.is_one());
            assert_eq!(e.verlinde_dim(1, &[]).unwrap(), md.len() as u64);
            let c = e.group().exponent();
            for t in &md.t {
                assert!(t.pow(c as i64).unwrap().is_one());
            }
        }
    }

    #[test]
    fn verlinde_examples() {
        assert_eq!(engine(Preset::Cyclic(2)).verlinde_dim(1, &[]).unwrap(), 4);
        let s3 = engine(Preset::Symmetric(3));
        assert_eq!(s3.verlinde_dim(1, &[]).unwrap(), 8);
        for l in 0..8 {
            let dual = s3.double().dual_index(l);
            assert_eq!(s3.verlinde_dim(0, &[vec![(l, 1)], vec![(dual, 1)]]).unwrap(), 1);
        }
        // closed genus 2: Σ_μ (N/dim μ)² counts homomorphisms up to the
        // Frobenius–Mednykh normalization
        let z2 = engine(Preset::Cyclic(2));
        assert_eq!(z2.verlinde_dim(2, &[]).unwrap(), 16);
        assert_eq!(z2.verlinde_dim(0, &[]).unwrap(), 1);
    }

    #[test]
    fn closed_genus_two_matches_gluing_of_two_tori() {
        // Z(Σ₂) = Σ_μ dim W(T¹; μ)·dim W(T¹; μ*)
        for p in [Preset::Symmetric(3), Preset::Quaternion8] {
            let e = engine(p);
            let t = e.decomposition_table(&surf(1, 1)).unwrap();
            let d = e.double().clone();
            let expected: u64 = (0..d.len()).map(|m| t.get(&[m]) * t.get(&[d.dual_index(m)])).sum();
            assert_eq!(e.verlinde_dim(2, &[]).unwrap(), expected);
        }
    }

    #[test]
    fn route_agreement_battery() {
        for p in [Preset::Cyclic(2), Preset::Symmetric(3)] {
            let e = engine(p);
            let k = e.double().len();
            for (g, n) in [(0, 1), (0, 2), (0, 3), (1, 1), (1, 2)] {
                let x = surf(g, n);
                let table = e.decomposition_table(&x).unwrap();
                let mut labels = vec![0usize; n];
                loop {
                    let v = e.verlinde_dim(g, &labels.iter().map(|&l| vec![(l, 1)]).collect::<Vec<_>>()).unwrap();
                    assert_eq!(v, table.get(&labels), "{x} {labels:?}");
                    let mut i = 0;
                    while i < n {
                        labels[i] += 1;
                        if labels[i] < k {
                            break;
                        }
                        labels[i] = 0;
                        i += 1;
                    }
                    if i == n {
                        break;
                    }
                }
            }
        }
    }
}
