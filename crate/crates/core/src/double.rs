//! The Drinfeld double `D(G) = C[G] ⋉ F(G)`.
//!
//! Basis elements are pairs `(g, h)` standing for `g·δ_h`, with
//! `g·δ_h = δ_{ghg⁻¹}·g`. Simple modules are labelled by a conjugacy class
//! (the monodromy sector) and an irreducible character of the centralizer of
//! its representative. Modules are handled through exact characters only.
//!
//! Characters of `D(G)` are constant on orbits of commuting pairs under
//! simultaneous conjugation. There are exactly as many such orbits as simple
//! labels; orbit `(c, κ)` collects the pairs `(g, h)` with `h` in class `c`
//! and `σ⁻¹gσ` in centralizer class `κ`, where `σ` is the stored transporter
//! of `h`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::Serialize;
use thiserror::Error;

use crate::char_table::{restrict_table_to_subgroup, CharTableError, SubgroupTable};
use crate::cyclotomic::{CycloError, CycloField, CycloInt, CycloNumber};
use crate::group::FiniteGroup;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DoubleError {
    #[error("operands belong to different groups")]
    GroupMismatch,
    #[error(transparent)]
    CharTable(#[from] CharTableError),
    #[error(transparent)]
    Cyclo(#[from] CycloError),
    #[error("label {label} has {count} dual candidates")]
    DualNotUnique { label: usize, count: usize },
    #[error("multiplicity <{what}> is not a non-negative integer: {value}")]
    NonIntegral { what: String, value: String },
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
}

/// Isomorphism class of a simple `D(G)`-module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct DoubleLabel {
    pub index: usize,
    pub class_index: usize,
    pub cent_irrep_index: usize,
    pub dim: usize,
}

/// A formal combination `Σ c_{g,h} g·δ_h`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoubleElement {
    group: [u8; 32],
    conductor: usize,
    terms: BTreeMap<(usize, usize), CycloNumber>,
}

impl DoubleElement {
    pub fn zero(group: &FiniteGroup) -> DoubleElement {
        DoubleElement { group: *group.digest(), conductor: group.exponent(), terms: BTreeMap::new() }
    }

    /// `g·δ_h`.
    pub fn basis(group: &FiniteGroup, g: usize, h: usize) -> DoubleElement {
        let mut x = DoubleElement::zero(group);
        x.terms.insert((g, h), CycloNumber::one(group.exponent()));
        x
    }

    /// The unit `Σ_h δ_h`.
    pub fn unit(group: &FiniteGroup) -> DoubleElement {
        let mut x = DoubleElement::zero(group);
        for h in 0..group.order() {
            x.terms.insert((0, h), CycloNumber::one(group.exponent()));
        }
        x
    }

    pub fn terms(&self) -> &BTreeMap<(usize, usize), CycloNumber> {
        &self.terms
    }

    pub fn add_term(&mut self, g: usize, h: usize, c: CycloNumber) -> Result<(), DoubleError> {
        let slot = self.terms.entry((g, h)).or_insert_with(|| CycloNumber::zero(c.conductor()));
        *slot = slot.checked_add(&c)?;
        if slot.is_zero() {
            self.terms.remove(&(g, h));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &DoubleElement) -> Result<DoubleElement, DoubleError> {
        if self.group != other.group {
            return Err(DoubleError::GroupMismatch);
        }
        let mut out = self.clone();
        for (&(g, h), c) in &other.terms {
            out.add_term(g, h, c.clone())?;
        }
        Ok(out)
    }

    /// Bilinear extension of `(g,h)·(g',h') = [h = g'h'g'⁻¹] (gg', h')`.
    pub fn product(&self, other: &DoubleElement, group: &FiniteGroup) -> Result<DoubleElement, DoubleError> {
        if self.group != other.group || self.group != *group.digest() {
            return Err(DoubleError::GroupMismatch);
        }
        let mut out = DoubleElement::zero(group);
        for (&(g, h), c) in &self.terms {
            for (&(g2, h2), c2) in &other.terms {
                if h == group.conj(g2, h2) {
                    out.add_term(group.mul(g, g2), h2, c.checked_mul(c2)?)?;
                }
            }
        }
        Ok(out)
    }
}

/// Per-orbit character of a `D(G)`-module, indexed by pair orbit.
pub type OrbitCharacter = Vec<CycloInt>;

/// The Drinfeld double of a group together with its simple modules and their
/// characters.
pub struct DrinfeldDouble {
    group: Arc<FiniteGroup>,
    field: Arc<CycloField>,
    centralizers: Vec<SubgroupTable>,
    labels: Vec<DoubleLabel>,
    class_offset: Vec<usize>,
    pair_orbit: Vec<u32>,
    orbit_class: Vec<usize>,
    orbit_rep: Vec<(usize, usize)>,
    orbit_size: Vec<usize>,
    /// `chars[λ][o]`: value of `χ_λ` on pair orbit `o`.
    chars: Vec<OrbitCharacter>,
    dual: Vec<usize>,
    fusion: OnceLock<Result<Vec<Vec<Vec<u64>>>, DoubleError>>,
}

impl fmt::Debug for DrinfeldDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DrinfeldDouble").field("group", &self.group).field("labels", &self.labels.len()).finish()
    }
}

const NOT_COMMUTING: u32 = u32::MAX;

impl DrinfeldDouble {
    pub fn new(group: Arc<FiniteGroup>) -> Result<DrinfeldDouble, DoubleError> {
        let info = group.classes();
        let e = group.exponent();
        let field = CycloField::get(e);
        let n = group.order();
        let mut centralizers = Vec::with_capacity(info.len());
        let mut cent_values = Vec::with_capacity(info.len());
        for cent in &info.centralizer {
            let sub = restrict_table_to_subgroup(&group, cent)?;
            cent_values.push(sub.table.values_in(e)?);
            centralizers.push(sub);
        }

        let mut labels = Vec::new();
        let mut class_offset = Vec::with_capacity(info.len());
        let mut orbit_class = Vec::new();
        let mut orbit_rep = Vec::new();
        let mut orbit_size = Vec::new();
        for (c, sub) in centralizers.iter().enumerate() {
            class_offset.push(labels.len());
            for (r, &deg) in sub.table.degrees.iter().enumerate() {
                labels.push(DoubleLabel {
                    index: labels.len(),
                    class_index: c,
                    cent_irrep_index: r,
                    dim: info.class_size(c) * deg,
                });
            }
            let sub_info = sub.subgroup.classes();
            for (kappa, members) in sub_info.classes.iter().enumerate() {
                orbit_class.push(c);
                orbit_rep.push((sub.to_parent[sub_info.representative[kappa]], info.representative[c]));
                orbit_size.push(info.class_size(c) * members.len());
            }
        }
        debug_assert_eq!(labels.len(), orbit_class.len());

        let mut pair_orbit = vec![NOT_COMMUTING; n * n];
        for h in 0..n {
            let c = info.class_of[h];
            let sigma = info.transporter[h];
            let sub = &centralizers[c];
            let sub_info = sub.subgroup.classes();
            for g in 0..n {
                if !group.commute(g, h) {
                    continue;
                }
                let local = group.conj(group.inv(sigma), g);
                let li = sub.local_index(local).expect("transported element lies in the centralizer");
                pair_orbit[g * n + h] = (class_offset[c] + sub_info.class_of[li]) as u32;
            }
        }

        let k = labels.len();
        let mut chars = vec![vec![field.int_zero(); k]; k];
        for lab in &labels {
            let c = lab.class_index;
            let width = centralizers[c].table.len();
            for kappa in 0..width {
                chars[lab.index][class_offset[c] + kappa] = cent_values[c][lab.cent_irrep_index][kappa].clone();
            }
        }

        let mut double = DrinfeldDouble {
            group,
            field,
            centralizers,
            labels,
            class_offset,
            pair_orbit,
            orbit_class,
            orbit_rep,
            orbit_size,
            chars,
            dual: Vec::new(),
            fusion: OnceLock::new(),
        };
        double.dual = (0..k).map(|l| double.find_dual(l)).collect::<Result<_, _>>()?;
        Ok(double)
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn field(&self) -> &Arc<CycloField> {
        &self.field
    }

    pub fn conductor(&self) -> usize {
        self.field.conductor()
    }

    /// Simple labels in canonical order (class, then centralizer row); the
    /// vacuum is label 0.
    pub fn labels(&self) -> &[DoubleLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn vacuum(&self) -> DoubleLabel {
        self.labels[0]
    }

    pub fn centralizer(&self, class: usize) -> &SubgroupTable {
        &self.centralizers[class]
    }

    /// Pair-orbit index of a commuting pair `(g, h)`.
    #[inline]
    pub fn orbit_of(&self, g: usize, h: usize) -> Option<usize> {
        let o = self.pair_orbit[g * self.group.order() + h];
        (o != NOT_COMMUTING).then_some(o as usize)
    }

    /// Conjugacy class of the grade `h` of pairs in orbit `o`.
    pub fn orbit_class(&self, o: usize) -> usize {
        self.orbit_class[o]
    }

    /// A representative `(g, h)` of orbit `o`, with `h` the class representative.
    pub fn orbit_representative(&self, o: usize) -> (usize, usize) {
        self.orbit_rep[o]
    }

    /// Number of commuting pairs in orbit `o`.
    pub fn orbit_size(&self, o: usize) -> usize {
        self.orbit_size[o]
    }

    /// Labels whose characters can be nonzero on orbits of class `c`.
    pub fn class_block(&self, c: usize) -> std::ops::Range<usize> {
        let start = self.class_offset[c];
        start..start + self.centralizers[c].table.len()
    }

    pub fn orbit_character(&self, label: usize) -> &OrbitCharacter {
        &self.chars[label]
    }

    /// `χ_λ(g·δ_h)`: zero unless `g` and `h` commute and `h` lies in the
    /// label's class; otherwise `χ_π(σ⁻¹ g σ)` for the transporter `σ` of `h`.
    pub fn double_character(&self, label: &DoubleLabel, g: usize, h: usize) -> CycloNumber {
        let info = self.group.classes();
        if !self.group.commute(g, h) || info.class_of[h] != label.class_index {
            return CycloNumber::zero(self.conductor());
        }
        let sigma = info.transporter[h];
        let sub = &self.centralizers[label.class_index];
        let local = sub
            .local_index(self.group.conj(self.group.inv(sigma), g))
            .expect("transported element lies in the centralizer");
        let kappa = sub.subgroup.classes().class_of[local];
        sub.table
            .value(label.cent_irrep_index, kappa)
            .embed(self.conductor())
            .expect("centralizer exponent divides the group exponent")
    }

    /// Character of `ρ_λ*`, the unique label matching the antipode-transformed
    /// character `χ_λ*(g·δ_h) = conj χ_λ(g·δ_{h⁻¹})`.
    pub fn dual_label(&self, label: &DoubleLabel) -> DoubleLabel {
        self.labels[self.dual[label.index]]
    }

    pub fn dual_index(&self, label: usize) -> usize {
        self.dual[label]
    }

    fn find_dual(&self, label: usize) -> Result<usize, DoubleError> {
        let info = self.group.classes();
        let c = self.labels[label].class_index;
        let dual_class = info.inverse_class[c];
        let target: Vec<CycloInt> = self
            .class_block(dual_class)
            .map(|o| {
                let (g, h) = self.orbit_rep[o];
                let o_inv = self.orbit_of(g, self.group.inv(h)).expect("g commutes with h⁻¹");
                self.field.int_conj(&self.chars[label][o_inv])
            })
            .collect::<Result<_, _>>()?;
        let candidates: Vec<usize> = self
            .class_block(dual_class)
            .filter(|&mu| self.class_block(dual_class).zip(&target).all(|(o, t)| &self.chars[mu][o] == t))
            .collect();
        match candidates.as_slice() {
            [mu] => Ok(*mu),
            _ => Err(DoubleError::DualNotUnique { label, count: candidates.len() }),
        }
    }

    /// `(1/N)·Σ_{gh=hg} χ(g·δ_h)·conj ψ(g·δ_h)`.
    pub fn inner_product(&self, chi: &OrbitCharacter, psi: &OrbitCharacter) -> Result<CycloNumber, DoubleError> {
        let mut acc = self.field.int_zero();
        for o in 0..self.len() {
            if chi[o].is_zero() || psi[o].is_zero() {
                continue;
            }
            let term = self.field.int_mul(&chi[o], &self.field.int_conj(&psi[o])?)?;
            self.field.int_scale_add(&mut acc, self.orbit_size[o] as i128, &term)?;
        }
        let n = num_rational::BigRational::from_integer((self.group.order() as i64).into());
        Ok(self.field.int_to_number(&acc).scale(&n.recip()))
    }

    /// Character of `ρ ⊗ ρ'` through the coproduct
    /// `Δ(g·δ_h) = Σ_{h₁h₂=h} g·δ_{h₁} ⊗ g·δ_{h₂}`.
    pub fn tensor_character(&self, chi: &OrbitCharacter, psi: &OrbitCharacter) -> Result<OrbitCharacter, DoubleError> {
        let n = self.group.order();
        (0..self.len())
            .map(|o| {
                let (g, h) = self.orbit_rep[o];
                let mut acc = self.field.int_zero();
                for h1 in 0..n {
                    let Some(o1) = self.orbit_of(g, h1) else { continue };
                    let h2 = self.group.mul(self.group.inv(h1), h);
                    let o2 = self.orbit_of(g, h2).expect("product of elements commuting with g");
                    self.field.int_mul_add(&mut acc, &chi[o1], &psi[o2])?;
                }
                Ok(acc)
            })
            .collect()
    }

    /// Formal combination `Σ c_λ χ_λ`.
    pub fn combination_character(&self, combo: &[(usize, u64)]) -> Result<OrbitCharacter, DoubleError> {
        let mut out = vec![self.field.int_zero(); self.len()];
        for &(l, c) in combo {
            for o in 0..self.len() {
                self.field.int_scale_add(&mut out[o], c as i128, &self.chars[l][o])?;
            }
        }
        Ok(out)
    }

    /// Multiplicity of every simple label in a module with character `chi`.
    pub fn decompose(&self, chi: &OrbitCharacter) -> Result<Vec<u64>, DoubleError> {
        (0..self.len())
            .map(|l| {
                let v = self.inner_product(chi, &self.chars[l])?;
                nonneg_integer(&v, || format!("χ, χ_{l}"))
            })
            .collect()
    }

    /// `dim V^{D(G)} = (1/N)·Σ_g χ(g·δ_e)` for an orbit character.
    pub fn invariants_dimension(&self, chi: &OrbitCharacter) -> Result<u64, DoubleError> {
        let mut acc = self.field.int_zero();
        for o in self.class_block(0) {
            self.field.int_scale_add(&mut acc, self.orbit_size[o] as i128, &chi[o])?;
        }
        let n = num_rational::BigRational::from_integer((self.group.order() as i64).into());
        nonneg_integer(&self.field.int_to_number(&acc).scale(&n.recip()), || "invariants".into())
    }

    /// Fusion coefficients `N_{λμ}^ν`, computed once from the coproduct
    /// character and cached. Indexed `[λ][μ][ν]`.
    pub fn fusion_table(&self) -> Result<&Vec<Vec<Vec<u64>>>, DoubleError> {
        self.fusion.get_or_init(|| self.compute_fusion()).as_ref().map_err(Clone::clone)
    }

    pub fn fusion_coefficients(
        &self,
        a: &DoubleLabel,
        b: &DoubleLabel,
    ) -> Result<BTreeMap<DoubleLabel, u64>, DoubleError> {
        let table = self.fusion_table()?;
        Ok(table[a.index][b.index]
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0)
            .map(|(nu, &m)| (self.labels[nu], m))
            .collect())
    }

    fn compute_fusion(&self) -> Result<Vec<Vec<Vec<u64>>>, DoubleError> {
        let g = &self.group;
        let info = g.classes();
        let k = self.len();
        // M[(o1, o2, o3)] counts (g, h1, h2) with h1, h2 ∈ C(g); the sum over g
        // collapses to class representatives weighted by class size.
        let mut weights: BTreeMap<(usize, usize, usize), i128> = BTreeMap::new();
        for (c, members) in info.classes.iter().enumerate() {
            let a = info.representative[c];
            let cent = &info.centralizer[c];
            for &h1 in cent {
                let o1 = self.orbit_of(a, h1).expect("commuting");
                for &h2 in cent {
                    let o2 = self.orbit_of(a, h2).expect("commuting");
                    let o3 = self.orbit_of(a, g.mul(h1, h2)).expect("commuting");
                    *weights.entry((o1, o2, o3)).or_insert(0) += members.len() as i128;
                }
            }
        }
        let conj_chars: Vec<OrbitCharacter> = self
            .chars
            .iter()
            .map(|row| row.iter().map(|v| self.field.int_conj(v)).collect::<Result<_, _>>())
            .collect::<Result<_, _>>()?;
        let mut acc = vec![vec![vec![self.field.int_zero(); k]; k]; k];
        for (&(o1, o2, o3), &w) in &weights {
            for la in self.class_block(self.orbit_class[o1]) {
                for mu in self.class_block(self.orbit_class[o2]) {
                    let ab = self.field.int_mul(&self.chars[la][o1], &self.chars[mu][o2])?;
                    if ab.is_zero() {
                        continue;
                    }
                    for nu in self.class_block(self.orbit_class[o3]) {
                        let t = self.field.int_mul(&ab, &conj_chars[nu][o3])?;
                        self.field.int_scale_add(&mut acc[la][mu][nu], w, &t)?;
                    }
                }
            }
        }
        let n = g.order() as i128;
        let mut out = vec![vec![vec![0u64; k]; k]; k];
        for la in 0..k {
            for mu in 0..k {
                for nu in 0..k {
                    let v = &acc[la][mu][nu];
                    match v.as_integer() {
                        Some(x) if x >= 0 && x % n == 0 => out[la][mu][nu] = (x / n) as u64,
                        _ => {
                            return Err(DoubleError::NonIntegral {
                                what: format!("N_{{{la},{mu}}}^{nu}"),
                                value: format!("({})/{n}", self.field.int_to_number(v)),
                            })
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Human-readable name, e.g. `([(12)], irrep#1, dim 3)`.
    pub fn label_name(&self, label: &DoubleLabel) -> String {
        let rep = self.group.classes().representative[label.class_index];
        format!("([{}], irrep#{}, dim {})", self.group.element_name(rep), label.cent_irrep_index, label.dim)
    }

    /// Resolves `vacuum`, a canonical index, a full name, or the short form
    /// `([rep],rN)`.
    pub fn parse_label(&self, text: &str) -> Result<DoubleLabel, DoubleError> {
        let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if t.eq_ignore_ascii_case("vacuum") {
            return Ok(self.vacuum());
        }
        if let Ok(i) = t.parse::<usize>() {
            return self.labels.get(i).copied().ok_or_else(|| DoubleError::UnknownLabel(text.into()));
        }
        for lab in &self.labels {
            let full: String = self.label_name(lab).chars().filter(|c| !c.is_whitespace()).collect();
            let rep = self.group.classes().representative[lab.class_index];
            let short = format!("([{}],r{})", self.group.element_name(rep), lab.cent_irrep_index);
            if t == full || t == short {
                return Ok(*lab);
            }
        }
        Err(DoubleError::UnknownLabel(text.into()))
    }

    /// The regular character `χ_reg(g·δ_h) = N·[g = e]`.
    pub fn regular_character(&self) -> OrbitCharacter {
        (0..self.len())
            .map(|o| {
                if self.orbit_rep[o].0 == 0 {
                    self.field.int_from(self.group.order() as i128)
                } else {
                    self.field.int_zero()
                }
            })
            .collect()
    }
}

pub(crate) fn nonneg_integer(v: &CycloNumber, what: impl FnOnce() -> String) -> Result<u64, DoubleError> {
    use num_traits::{Signed, ToPrimitive};
    match v.to_integer() {
        Some(x) if !x.is_negative() => {
            x.to_u64().ok_or_else(|| DoubleError::NonIntegral { what: what(), value: v.to_string() })
        }
        _ => Err(DoubleError::NonIntegral { what: what(), value: v.to_string() }),
    }
}
