//! Exact arithmetic in the cyclotomic field `Q(ζ_e)`.
//!
//! Elements are stored over the power basis `1, ζ, …, ζ^(φ(e)-1)` reduced
//! modulo the cyclotomic polynomial `Φ_e`, which makes the representation
//! canonical. [`CycloNumber`] carries arbitrary-precision rational coefficients;
//! [`CycloInt`] is a fixed-width integer variant for the hot loops that only
//! ever touch algebraic integers (character values and their sums).

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CycloError {
    #[error("conductor mismatch: {0} vs {1}")]
    ConductorMismatch(usize, usize),
    #[error("inverse of zero")]
    InverseOfZero,
    #[error("conductor {from} does not divide {to}")]
    NotASubfield { from: usize, to: usize },
    #[error("integer overflow in fixed-width cyclotomic arithmetic")]
    Overflow,
    #[error("conductor must be positive")]
    ZeroConductor,
}

/// Static data of `Q(ζ_e)`: the cyclotomic polynomial and reductions of
/// `x^k` for `k < e`.
#[derive(Debug)]
pub struct CycloField {
    conductor: usize,
    degree: usize,
    /// Monic `Φ_e`, lowest degree first.
    phi: Vec<i64>,
    /// `powers[k]` is `x^k mod Φ_e`.
    powers: Vec<Vec<i64>>,
    units: Vec<usize>,
}

fn field_cache() -> &'static Mutex<HashMap<usize, Arc<CycloField>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<CycloField>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `Φ_n` by dividing `x^n - 1` by `Φ_d` for every proper divisor `d`.
pub fn cyclotomic_polynomial(n: usize) -> Vec<i64> {
    assert!(n > 0, "cyclotomic polynomial of order 0");
    let mut poly = vec![0i64; n + 1];
    poly[0] = -1;
    poly[n] = 1;
    for d in (1..n).filter(|d| n.is_multiple_of(*d)) {
        poly = exact_div_monic(&poly, &cyclotomic_polynomial(d));
    }
    poly
}

fn exact_div_monic(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let qd = rem.len() - 1 - dd;
    let mut q = vec![0i64; qd + 1];
    for i in (0..=qd).rev() {
        let c = rem[i + dd];
        q[i] = c;
        for (j, &dj) in den.iter().enumerate() {
            rem[i + j] -= c * dj;
        }
    }
    debug_assert!(rem.iter().all(|&r| r == 0), "inexact cyclotomic division");
    q
}

impl CycloField {
    /// Shared field data for conductor `e`.
    pub fn get(conductor: usize) -> Arc<CycloField> {
        assert!(conductor > 0, "conductor must be positive");
        let mut cache = field_cache().lock().expect("field cache poisoned");
        cache.entry(conductor).or_insert_with(|| Arc::new(CycloField::build(conductor))).clone()
    }

    fn build(e: usize) -> CycloField {
        let phi = cyclotomic_polynomial(e);
        let degree = phi.len() - 1;
        let mut powers = Vec::with_capacity(e);
        let mut cur = vec![0i64; degree];
        cur[0] = 1;
        for _ in 0..e {
            powers.push(cur.clone());
            // multiply by x and reduce
            let top = cur[degree - 1];
            for i in (1..degree).rev() {
                cur[i] = cur[i - 1] - top * phi[i];
            }
            cur[0] = -top * phi[0];
        }
        let units = (1..=e).filter(|k| k.gcd(&e) == 1).map(|k| k % e).collect();
        CycloField { conductor: e, degree, phi, powers, units }
    }

    pub fn conductor(&self) -> usize {
        self.conductor
    }

    /// `φ(e)`, the dimension over `Q`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn phi(&self) -> &[i64] {
        &self.phi
    }

    /// Reduction of `x^k`, `k` taken modulo `e`.
    pub fn power(&self, k: i64) -> &[i64] {
        let e = self.conductor as i64;
        &self.powers[k.rem_euclid(e) as usize]
    }

    pub fn int_zero(&self) -> CycloInt {
        CycloInt(vec![0; self.degree])
    }

    pub fn int_from(&self, n: i128) -> CycloInt {
        let mut v = vec![0; self.degree];
        v[0] = n;
        CycloInt(v)
    }

    /// `ζ^k` as an integral element.
    pub fn int_root(&self, k: i64) -> CycloInt {
        CycloInt(self.power(k).iter().map(|&c| c as i128).collect())
    }

    /// `acc += a · b`.
    pub fn int_mul_add(&self, acc: &mut CycloInt, a: &CycloInt, b: &CycloInt) -> Result<(), CycloError> {
        let d = self.degree;
        let mut prod = vec![0i128; 2 * d - 1];
        for (i, &ai) in a.0.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            for (j, &bj) in b.0.iter().enumerate() {
                if bj == 0 {
                    continue;
                }
                let t = ai.checked_mul(bj).ok_or(CycloError::Overflow)?;
                prod[i + j] = prod[i + j].checked_add(t).ok_or(CycloError::Overflow)?;
            }
        }
        for (k, &c) in prod.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if k < d {
                acc.0[k] = acc.0[k].checked_add(c).ok_or(CycloError::Overflow)?;
            } else {
                for (slot, &r) in acc.0.iter_mut().zip(self.power(k as i64)) {
                    if r != 0 {
                        let t = c.checked_mul(r as i128).ok_or(CycloError::Overflow)?;
                        *slot = slot.checked_add(t).ok_or(CycloError::Overflow)?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn int_mul(&self, a: &CycloInt, b: &CycloInt) -> Result<CycloInt, CycloError> {
        let mut acc = self.int_zero();
        self.int_mul_add(&mut acc, a, b)?;
        Ok(acc)
    }

    /// `acc += k · a` for an integer `k`.
    pub fn int_scale_add(&self, acc: &mut CycloInt, k: i128, a: &CycloInt) -> Result<(), CycloError> {
        for (slot, &c) in acc.0.iter_mut().zip(a.0.iter()) {
            let t = c.checked_mul(k).ok_or(CycloError::Overflow)?;
            *slot = slot.checked_add(t).ok_or(CycloError::Overflow)?;
        }
        Ok(())
    }

    /// Galois automorphism `ζ ↦ ζ^k`.
    pub fn int_galois(&self, a: &CycloInt, k: i64) -> Result<CycloInt, CycloError> {
        let mut out = self.int_zero();
        for (j, &c) in a.0.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for (slot, &r) in out.0.iter_mut().zip(self.power(j as i64 * k)) {
                let t = c.checked_mul(r as i128).ok_or(CycloError::Overflow)?;
                *slot = slot.checked_add(t).ok_or(CycloError::Overflow)?;
            }
        }
        Ok(out)
    }

    pub fn int_conj(&self, a: &CycloInt) -> Result<CycloInt, CycloError> {
        self.int_galois(a, -1)
    }

    pub fn int_to_number(self: &Arc<Self>, a: &CycloInt) -> CycloNumber {
        CycloNumber {
            field: self.clone(),
            coeffs: a.0.iter().map(|&c| BigRational::from_integer(BigInt::from(c))).collect(),
        }
    }
}

/// Algebraic integer of `Q(ζ_e)` with `i128` power-basis coefficients. The
/// field is implicit; arithmetic goes through [`CycloField`] and is checked
/// for overflow.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CycloInt(pub Vec<i128>);

impl CycloInt {
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// The value if it is an ordinary integer.
    pub fn as_integer(&self) -> Option<i128> {
        if self.0[1..].iter().all(|&c| c == 0) {
            Some(self.0[0])
        } else {
            None
        }
    }
}

/// Exact element of `Q(ζ_e)` in canonical form.
#[derive(Clone)]
pub struct CycloNumber {
    field: Arc<CycloField>,
    coeffs: Vec<BigRational>,
}

impl CycloNumber {
    pub fn zero(conductor: usize) -> CycloNumber {
        let field = CycloField::get(conductor);
        let coeffs = vec![BigRational::zero(); field.degree];
        CycloNumber { field, coeffs }
    }

    pub fn one(conductor: usize) -> CycloNumber {
        CycloNumber::from_integer(conductor, 1)
    }

    pub fn from_integer(conductor: usize, n: i64) -> CycloNumber {
        CycloNumber::from_rational(conductor, BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_rational(conductor: usize, q: BigRational) -> CycloNumber {
        let mut z = CycloNumber::zero(conductor);
        z.coeffs[0] = q;
        z
    }

    /// Builds an element from power-basis coefficients `c_0 + c_1 ζ + …`; any
    /// length is accepted and reduced modulo `Φ_e`.
    pub fn from_coeffs(conductor: usize, coeffs: &[BigRational]) -> CycloNumber {
        let field = CycloField::get(conductor);
        let mut out = vec![BigRational::zero(); field.degree];
        for (k, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (slot, &r) in out.iter_mut().zip(field.power(k as i64)) {
                if r != 0 {
                    *slot += c * BigRational::from_integer(BigInt::from(r));
                }
            }
        }
        CycloNumber { field, coeffs: out }
    }

    /// `ζ_e^k`, with `k` reduced modulo `e`.
    pub fn root_of_unity(conductor: usize, k: i64) -> CycloNumber {
        let field = CycloField::get(conductor);
        let coeffs = field.power(k).iter().map(|&c| BigRational::from_integer(BigInt::from(c))).collect();
        CycloNumber { field, coeffs }
    }

    pub fn conductor(&self) -> usize {
        self.field.conductor
    }

    pub fn field(&self) -> &Arc<CycloField> {
        &self.field
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0].is_one() && self.coeffs[1..].iter().all(Zero::is_zero)
    }

    pub fn to_rational(&self) -> Option<BigRational> {
        if self.coeffs[1..].iter().all(Zero::is_zero) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    pub fn to_integer(&self) -> Option<BigInt> {
        self.to_rational().filter(|q| q.is_integer()).map(|q| q.to_integer())
    }

    /// Integral coefficients, if every coefficient is an integer that fits.
    pub fn to_cyclo_int(&self) -> Option<CycloInt> {
        self.coeffs
            .iter()
            .map(|c| if c.is_integer() { c.to_integer().to_i128() } else { None })
            .collect::<Option<Vec<_>>>()
            .map(CycloInt)
    }

    fn check(&self, other: &CycloNumber) -> Result<(), CycloError> {
        if self.conductor() != other.conductor() {
            Err(CycloError::ConductorMismatch(self.conductor(), other.conductor()))
        } else {
            Ok(())
        }
    }

    pub fn checked_add(&self, other: &CycloNumber) -> Result<CycloNumber, CycloError> {
        self.check(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(CycloNumber { field: self.field.clone(), coeffs })
    }

    pub fn checked_sub(&self, other: &CycloNumber) -> Result<CycloNumber, CycloError> {
        self.check(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(CycloNumber { field: self.field.clone(), coeffs })
    }

    pub fn checked_mul(&self, other: &CycloNumber) -> Result<CycloNumber, CycloError> {
        self.check(other)?;
        let d = self.field.degree;
        let mut prod = vec![BigRational::zero(); 2 * d - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    prod[i + j] += a * b;
                }
            }
        }
        let mut out: Vec<BigRational> = prod[..d].to_vec();
        for (k, c) in prod.iter().enumerate().skip(d) {
            if c.is_zero() {
                continue;
            }
            for (slot, &r) in out.iter_mut().zip(self.field.power(k as i64)) {
                if r != 0 {
                    *slot += c * BigRational::from_integer(BigInt::from(r));
                }
            }
        }
        Ok(CycloNumber { field: self.field.clone(), coeffs: out })
    }

    pub fn scale(&self, q: &BigRational) -> CycloNumber {
        CycloNumber { field: self.field.clone(), coeffs: self.coeffs.iter().map(|c| c * q).collect() }
    }

    /// Galois automorphism `ζ ↦ ζ^k`; a ring automorphism when `gcd(k, e) = 1`.
    pub fn galois(&self, k: i64) -> CycloNumber {
        let mut out = vec![BigRational::zero(); self.field.degree];
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (slot, &r) in out.iter_mut().zip(self.field.power(j as i64 * k)) {
                if r != 0 {
                    *slot += c * BigRational::from_integer(BigInt::from(r));
                }
            }
        }
        CycloNumber { field: self.field.clone(), coeffs: out }
    }

    /// Complex conjugation `ζ ↦ ζ^-1`.
    pub fn conj(&self) -> CycloNumber {
        self.galois(-1)
    }

    /// Multiplicative inverse through the norm: `a^-1 = Π_{σ≠1} σ(a) / N(a)`.
    pub fn inv(&self) -> Result<CycloNumber, CycloError> {
        if self.is_zero() {
            return Err(CycloError::InverseOfZero);
        }
        let mut partial = CycloNumber::one(self.conductor());
        for &k in self.field.units.iter().filter(|&&k| k != 1 % self.conductor().max(1)) {
            partial = partial.checked_mul(&self.galois(k as i64))?;
        }
        let norm = self.checked_mul(&partial)?.to_rational().expect("norm of a cyclotomic number is rational");
        Ok(partial.scale(&norm.recip()))
    }

    pub fn checked_div(&self, other: &CycloNumber) -> Result<CycloNumber, CycloError> {
        self.checked_mul(&other.inv()?)
    }

    /// Integer power; negative exponents invert.
    pub fn pow(&self, k: i64) -> Result<CycloNumber, CycloError> {
        let base = if k < 0 { self.inv()? } else { self.clone() };
        let mut result = CycloNumber::one(self.conductor());
        let mut b = base;
        let mut n = k.unsigned_abs();
        while n > 0 {
            if n & 1 == 1 {
                result = result.checked_mul(&b)?;
            }
            b = b.checked_mul(&b)?;
            n >>= 1;
        }
        Ok(result)
    }

    /// Image in `Q(ζ_target)` under `ζ_e ↦ ζ_target^(target/e)`.
    pub fn embed(&self, target: usize) -> Result<CycloNumber, CycloError> {
        let e = self.conductor();
        if target == 0 || !target.is_multiple_of(e) {
            return Err(CycloError::NotASubfield { from: e, to: target });
        }
        let step = target / e;
        let mut wide = vec![BigRational::zero(); target];
        for (j, c) in self.coeffs.iter().enumerate() {
            wide[(j * step) % target] += c;
        }
        Ok(CycloNumber::from_coeffs(target, &wide))
    }

    /// Double-precision value at `ζ = exp(2πi/e)`. Reporting only.
    pub fn to_complex(&self) -> (f64, f64) {
        let e = self.conductor() as f64;
        let mut re = 0.0;
        let mut im = 0.0;
        for (j, c) in self.coeffs.iter().enumerate() {
            let v = c.to_f64().unwrap_or(f64::NAN);
            let angle = 2.0 * std::f64::consts::PI * j as f64 / e;
            re += v * angle.cos();
            im += v * angle.sin();
        }
        (re, im)
    }

    /// Total order used for canonical sorting: conductor, then coefficients
    /// lexicographically.
    pub fn cmp_lex(&self, other: &CycloNumber) -> Ordering {
        self.conductor().cmp(&other.conductor()).then_with(|| self.coeffs.cmp(&other.coeffs))
    }
}

impl PartialEq for CycloNumber {
    fn eq(&self, other: &Self) -> bool {
        self.conductor() == other.conductor() && self.coeffs == other.coeffs
    }
}

impl Eq for CycloNumber {}

impl Hash for CycloNumber {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.conductor().hash(state);
        self.coeffs.hash(state);
    }
}

impl fmt::Debug for CycloNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for CycloNumber {
    /// Renders as a sum of `c*z^j` terms, `z = ζ_e`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            first = false;
            let e = self.conductor();
            match (j, mag.is_one()) {
                (0, _) => write!(f, "{mag}")?,
                (1, true) => write!(f, "z{e}")?,
                (1, false) => write!(f, "{mag}*z{e}")?,
                (_, true) => write!(f, "z{e}^{j}")?,
                (_, false) => write!(f, "{mag}*z{e}^{j}")?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait<&CycloNumber> for &CycloNumber {
            type Output = CycloNumber;
            /// Panics on conductor mismatch; use the `checked_*` form to handle it.
            fn $method(self, rhs: &CycloNumber) -> CycloNumber {
                self.$checked(rhs).expect("cyclotomic conductor mismatch")
            }
        }
        impl $trait<CycloNumber> for CycloNumber {
            type Output = CycloNumber;
            fn $method(self, rhs: CycloNumber) -> CycloNumber {
                (&self).$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl Neg for &CycloNumber {
    type Output = CycloNumber;
    fn neg(self) -> CycloNumber {
        CycloNumber { field: self.field.clone(), coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl Neg for CycloNumber {
    type Output = CycloNumber;
    fn neg(self) -> CycloNumber {
        -&self
    }
}

#[derive(Serialize, Deserialize)]
struct CycloWire {
    conductor: usize,
    coeffs: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    approx: Option<[f64; 2]>,
}

impl Serialize for CycloNumber {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let (re, im) = self.to_complex();
        let clean = |v: f64| if v.abs() < 1e-12 { 0.0 } else { (v * 1e12).round() / 1e12 };
        CycloWire {
            conductor: self.conductor(),
            coeffs: self.coeffs.iter().map(|c| [c.numer().to_string(), c.denom().to_string()]).collect(),
            approx: Some([clean(re), clean(im)]),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CycloNumber {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let wire = CycloWire::deserialize(d)?;
        if wire.conductor == 0 {
            return Err(D::Error::custom(CycloError::ZeroConductor));
        }
        let coeffs = wire
            .coeffs
            .iter()
            .map(|[n, q]| {
                let n: BigInt = n.parse().map_err(D::Error::custom)?;
                let q: BigInt = q.parse().map_err(D::Error::custom)?;
                if q.is_zero() {
                    return Err(D::Error::custom("zero denominator"));
                }
                Ok(BigRational::new(n, q))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CycloNumber::from_coeffs(wire.conductor, &coeffs))
    }
}
