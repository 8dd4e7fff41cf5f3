//! Concrete oracles: projective 2x2 matrix groups, products and small test boxes.

use crate::arith::{add_mod, inv_mod, mul_mod, neg_mod, sub_mod};
use crate::bbox::{BlackBox, BoxError, GroupElement, GroupOps};
use crate::finite_field::{ExplicitField, FieldValue};
use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::Zero;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("field too small: q = {0} (need q > 3)")]
    FieldTooSmall(String),
    #[error("matrix is singular")]
    Singular,
    #[error("determinant is not a square, matrix is outside PSL2")]
    NotInPsl2,
    #[error("{0} is not a multiple of the group exponent")]
    BadExponent(String),
    #[error("bad matrix entry: {0}")]
    Entry(String),
    #[error(transparent)]
    Box(#[from] BoxError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixKind {
    #[serde(rename = "PSL2")]
    Psl2,
    #[serde(rename = "PGL2")]
    Pgl2,
}

/// `Canonical` keeps one string per element. `Scrambled` multiplies every
/// output by a payload-dependent scalar, so equal elements may differ as strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Canonical,
    Scrambled,
}

struct MatrixOps {
    field: Arc<ExplicitField>,
    kind: MatrixKind,
    encoding: Encoding,
}

impl MatrixOps {
    fn k(&self) -> usize {
        self.field.degree()
    }

    fn entry<'a>(&self, m: &'a [u64], i: usize) -> &'a [u64] {
        let k = self.k();
        &m[i * k..(i + 1) * k]
    }

    /// Scale so that the first nonzero entry is 1.
    fn normalize(&self, mut m: Vec<u64>) -> Vec<u64> {
        let k = self.k();
        let p = self.field.characteristic();
        if k == 1 {
            let lead = *m.iter().find(|&&x| x != 0).expect("zero matrix");
            if lead != 1 {
                let li = inv_mod(lead, p).expect("nonzero lead");
                for x in m.iter_mut() {
                    *x = mul_mod(*x, li, p);
                }
            }
            return m;
        }
        let lead = (0..4)
            .map(|i| self.entry(&m, i))
            .find(|e| !ExplicitField::is_zero_raw(e))
            .expect("zero matrix")
            .to_vec();
        if ExplicitField::is_one_raw(&lead) {
            return m;
        }
        let li = self.field.inv_raw(&lead).expect("nonzero lead");
        let mut out = Vec::with_capacity(4 * k);
        for i in 0..4 {
            out.extend(self.field.mul_raw(self.entry(&m, i), &li));
        }
        m.clear();
        out
    }

    /// Canonical form, or in scrambled mode a scalar multiple chosen from `salt`.
    fn scramble(&self, m: Vec<u64>, salt: &[u64]) -> Vec<u64> {
        let m = self.normalize(m);
        if self.encoding == Encoding::Canonical {
            return m;
        }
        let p = self.field.characteristic();
        if p == 2 {
            return m;
        }
        let h = m.iter().chain(salt).fold(0x9e37_79b9_7f4a_7c15u64, |h, &x| (h ^ x).wrapping_mul(0x100_0000_01b3));
        let lambda = 1 + h % (p - 1);
        // a prime-field scalar scales every coefficient
        m.into_iter().map(|x| mul_mod(x, lambda, p)).collect()
    }

    fn product(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let k = self.k();
        if k == 1 {
            let p = self.field.characteristic();
            let dot = |x: u64, y: u64, z: u64, w: u64| add_mod(mul_mod(x, y, p), mul_mod(z, w, p), p);
            return vec![
                dot(a[0], b[0], a[1], b[2]),
                dot(a[0], b[1], a[1], b[3]),
                dot(a[2], b[0], a[3], b[2]),
                dot(a[2], b[1], a[3], b[3]),
            ];
        }
        let f = &self.field;
        let e = |m: &[u64], i: usize| m[i * k..(i + 1) * k].to_vec();
        let dot = |x: Vec<u64>, y: Vec<u64>, z: Vec<u64>, w: Vec<u64>| f.add_raw(&f.mul_raw(&x, &y), &f.mul_raw(&z, &w));
        let mut out = Vec::with_capacity(4 * k);
        out.extend(dot(e(a, 0), e(b, 0), e(a, 1), e(b, 2)));
        out.extend(dot(e(a, 0), e(b, 1), e(a, 1), e(b, 3)));
        out.extend(dot(e(a, 2), e(b, 0), e(a, 3), e(b, 2)));
        out.extend(dot(e(a, 2), e(b, 1), e(a, 3), e(b, 3)));
        out
    }

    fn adjugate(&self, a: &[u64]) -> Vec<u64> {
        let k = self.k();
        if k == 1 {
            let p = self.field.characteristic();
            return vec![a[3], neg_mod(a[1], p), neg_mod(a[2], p), a[0]];
        }
        let f = &self.field;
        let mut out = Vec::with_capacity(4 * k);
        out.extend_from_slice(self.entry(a, 3));
        out.extend(f.neg_raw(self.entry(a, 1)));
        out.extend(f.neg_raw(self.entry(a, 2)));
        out.extend_from_slice(self.entry(a, 0));
        out
    }

    fn det(&self, a: &[u64]) -> Vec<u64> {
        let f = &self.field;
        if self.k() == 1 {
            let p = f.characteristic();
            return vec![sub_mod(mul_mod(a[0], a[3], p), mul_mod(a[1], a[2], p), p)];
        }
        f.sub_raw(
            &f.mul_raw(self.entry(a, 0), self.entry(a, 3)),
            &f.mul_raw(self.entry(a, 1), self.entry(a, 2)),
        )
    }

    fn random_sl2(&self, rng: &mut ChaCha8Rng) -> Vec<u64> {
        let f = &self.field;
        let k = self.k();
        let (a, c) = loop {
            let a = f.random(rng);
            let c = f.random(rng);
            if !(f.is_zero(&a) && f.is_zero(&c)) {
                break (a, c);
            }
        };
        let t = f.random(rng);
        let (b0, d0) = if !f.is_zero(&a) {
            (f.zero(), f.inv(&a).expect("a != 0"))
        } else {
            (f.neg(&f.inv(&c).expect("c != 0")), f.zero())
        };
        let b = f.add(&b0, &f.mul(&t, &a));
        let d = f.add(&d0, &f.mul(&t, &c));
        let mut m = Vec::with_capacity(4 * k);
        for v in [a, b, c, d] {
            m.extend(v.0);
        }
        m
    }

    fn random_gl2(&self, rng: &mut ChaCha8Rng) -> Vec<u64> {
        let f = &self.field;
        loop {
            let mut m = Vec::with_capacity(4 * self.k());
            for _ in 0..4 {
                m.extend(f.random(rng).0);
            }
            if !ExplicitField::is_zero_raw(&self.det(&m)) {
                return m;
            }
        }
    }
}

impl GroupOps for MatrixOps {
    fn payload_len(&self) -> usize {
        4 * self.k()
    }

    fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        self.scramble(self.product(a, b), &[a, b].concat())
    }

    fn inv(&self, a: &[u64]) -> Vec<u64> {
        self.scramble(self.adjugate(a), a)
    }

    fn eq(&self, a: &[u64], b: &[u64]) -> bool {
        match self.encoding {
            Encoding::Canonical => a == b,
            Encoding::Scrambled => self.normalize(a.to_vec()) == self.normalize(b.to_vec()),
        }
    }

    fn identity(&self) -> Vec<u64> {
        let k = self.k();
        let mut m = vec![0; 4 * k];
        m[0] = 1;
        m[3 * k] = 1;
        m
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Option<Vec<u64>> {
        let m = match self.kind {
            MatrixKind::Psl2 => self.random_sl2(rng),
            MatrixKind::Pgl2 => self.random_gl2(rng),
        };
        Some(self.scramble(m, &[]))
    }

    fn has_sampler(&self) -> bool {
        true
    }

    fn name(&self) -> String {
        let kind = match self.kind {
            MatrixKind::Psl2 => "PSL2",
            MatrixKind::Pgl2 => "PGL2",
        };
        format!("{kind}({})", self.field.order())
    }
}

/// A projective matrix group together with its black box, for tests and wire formats.
#[derive(Clone)]
pub struct MatrixOracle {
    ops: Arc<MatrixOps>,
    bb: BlackBox,
}

impl std::fmt::Debug for MatrixOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_tuple("MatrixOracle").field(&self.bb.name()).finish()
    }
}

/// A 2x2 matrix `[[a, b], [c, d]]` stored row-major.
pub type Matrix2 = [FieldValue; 4];

impl MatrixOracle {
    pub fn new(field: ExplicitField, kind: MatrixKind, encoding: Encoding, seed: u64) -> Result<Self, OracleError> {
        let q = field.order().clone();
        let exponent = &q * (&q * &q - 1u32);
        Self::with_exponent(field, kind, encoding, exponent, seed)
    }

    /// As `new` with a caller-supplied global exponent, which must be a
    /// multiple of every element order.
    pub fn with_exponent(
        field: ExplicitField,
        kind: MatrixKind,
        encoding: Encoding,
        exponent: BigUint,
        seed: u64,
    ) -> Result<Self, OracleError> {
        let q = field.order().clone();
        if q <= BigUint::from(3u32) {
            return Err(OracleError::FieldTooSmall(q.to_string()));
        }
        let p = BigUint::from(field.characteristic());
        let (lo, hi) = (&q - 1u32, &q + 1u32);
        let needed = match (kind, field.characteristic() == 2) {
            (MatrixKind::Psl2, false) => p.lcm(&(lo / 2u32)).lcm(&(hi / 2u32)),
            _ => p.lcm(&lo).lcm(&hi),
        };
        if exponent.is_zero() || !(&exponent % &needed).is_zero() {
            return Err(OracleError::BadExponent(exponent.to_string()));
        }
        let ops = Arc::new(MatrixOps { field: Arc::new(field), kind, encoding });
        let bb = BlackBox::new(ops.clone(), exponent, seed)?;
        Ok(MatrixOracle { ops, bb })
    }

    pub fn psl2(field: ExplicitField, seed: u64) -> Result<Self, OracleError> {
        Self::new(field, MatrixKind::Psl2, Encoding::Canonical, seed)
    }

    pub fn pgl2(field: ExplicitField, seed: u64) -> Result<Self, OracleError> {
        Self::new(field, MatrixKind::Pgl2, Encoding::Canonical, seed)
    }

    pub fn black_box(&self) -> &BlackBox {
        &self.bb
    }

    pub fn field(&self) -> &ExplicitField {
        &self.ops.field
    }

    pub fn kind(&self) -> MatrixKind {
        self.ops.kind
    }

    /// The normalized matrix of an element.
    pub fn to_matrix(&self, x: &GroupElement) -> Matrix2 {
        let m = self.ops.normalize(x.payload().to_vec());
        let k = self.ops.k();
        std::array::from_fn(|i| FieldValue(m[i * k..(i + 1) * k].to_vec()))
    }

    pub fn from_matrix(&self, m: &Matrix2) -> Result<GroupElement, OracleError> {
        let mut raw = Vec::with_capacity(4 * self.ops.k());
        for v in m {
            let checked = self.field().element(v.coeffs()).map_err(|e| OracleError::Entry(e.to_string()))?;
            raw.extend(checked.0);
        }
        let det = FieldValue(self.ops.det(&raw));
        if self.field().is_zero(&det) {
            return Err(OracleError::Singular);
        }
        if self.ops.kind == MatrixKind::Psl2 && !self.field().is_square(&det) {
            return Err(OracleError::NotInPsl2);
        }
        Ok(self.bb.adopt(self.ops.scramble(raw, &[]))?)
    }

    pub fn from_u64s(&self, entries: [u64; 4]) -> Result<GroupElement, OracleError> {
        let f = self.field();
        self.from_matrix(&entries.map(|e| f.from_u64(e)))
    }

    /// Determinant of the normalized representative.
    pub fn det(&self, x: &GroupElement) -> FieldValue {
        FieldValue(self.ops.det(&self.ops.normalize(x.payload().to_vec())))
    }

    pub fn trace(&self, x: &GroupElement) -> FieldValue {
        let m = self.to_matrix(x);
        self.field().add(&m[0], &m[3])
    }

    /// Unipotent test on matrices: `(tr M)^2 = 4 det M` and `M` not scalar.
    pub fn is_unipotent(&self, x: &GroupElement) -> bool {
        let f = self.field();
        if self.bb.is_identity(x) {
            return false;
        }
        let tr = self.trace(x);
        let four_det = f.mul(&f.from_u64(4), &self.det(x));
        f.mul(&tr, &tr) == four_det
    }

    /// Element order by repeated multiplication. Test-scale only.
    pub fn order(&self, x: &GroupElement) -> u64 {
        let mut y = x.clone();
        let mut n = 1;
        while !self.bb.is_identity(&y) {
            y = self.bb.mul(&y, x);
            n += 1;
        }
        n
    }

    /// All elements, for very small fields.
    pub fn elements(&self) -> Vec<GroupElement> {
        let f = self.field();
        let vals: Vec<FieldValue> = f.elements().collect();
        let mut out = Vec::new();
        for a in &vals {
            for b in &vals {
                for c in &vals {
                    for d in &vals {
                        let m = [a.clone(), b.clone(), c.clone(), d.clone()];
                        let first = m.iter().find(|v| !f.is_zero(v));
                        if !first.is_some_and(|v| f.is_one(v)) {
                            continue;
                        }
                        if let Ok(x) = self.from_matrix(&m) {
                            out.push(x);
                        }
                    }
                }
            }
        }
        out
    }
}

pub fn make_psl2_box(field: ExplicitField, seed: u64) -> Result<BlackBox, OracleError> {
    Ok(MatrixOracle::psl2(field, seed)?.bb)
}

pub fn make_pgl2_box(field: ExplicitField, seed: u64) -> Result<BlackBox, OracleError> {
    Ok(MatrixOracle::pgl2(field, seed)?.bb)
}

/// `Z/N` written multiplicatively; exponent `N`.
struct CyclicOps(u64);

impl GroupOps for CyclicOps {
    fn payload_len(&self) -> usize {
        1
    }
    fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        vec![add_mod(a[0], b[0], self.0)]
    }
    fn inv(&self, a: &[u64]) -> Vec<u64> {
        vec![neg_mod(a[0], self.0)]
    }
    fn eq(&self, a: &[u64], b: &[u64]) -> bool {
        a == b
    }
    fn identity(&self) -> Vec<u64> {
        vec![0]
    }
    fn sample(&self, rng: &mut ChaCha8Rng) -> Option<Vec<u64>> {
        Some(vec![rng.gen_range(0..self.0)])
    }
    fn has_sampler(&self) -> bool {
        true
    }
    fn name(&self) -> String {
        format!("Z/{}", self.0)
    }
}

/// The cyclic group `Z/N` as a black box with exponent `N`.
pub fn make_cyclic_box(n: u64, seed: u64) -> Result<BlackBox, OracleError> {
    Ok(BlackBox::new(Arc::new(CyclicOps(n.max(1))), BigUint::from(n), seed)?)
}

/// Elements of a product box are pairs; this handle splits and joins them.
#[derive(Clone, Debug)]
pub struct ProductBox {
    pub whole: BlackBox,
    pub left: BlackBox,
    pub right: BlackBox,
}

impl ProductBox {
    pub fn pair(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let mut payload = a.payload().to_vec();
        payload.extend_from_slice(b.payload());
        self.whole.wrap(payload)
    }

    pub fn split(&self, x: &GroupElement) -> (GroupElement, GroupElement) {
        let n = self.left.payload_len();
        let (l, r) = x.payload().split_at(n);
        (self.left.wrap(l.to_vec()), self.right.wrap(r.to_vec()))
    }

    pub fn left_of(&self, x: &GroupElement) -> GroupElement {
        self.split(x).0
    }

    pub fn right_of(&self, x: &GroupElement) -> GroupElement {
        self.split(x).1
    }

    /// The same product with the whole box replaced (e.g. by a subgroup box).
    pub fn with_whole(&self, whole: BlackBox) -> ProductBox {
        ProductBox { whole, left: self.left.clone(), right: self.right.clone() }
    }
}

struct PairOps {
    left: BlackBox,
    right: BlackBox,
}

impl GroupOps for PairOps {
    fn payload_len(&self) -> usize {
        self.left.payload_len() + self.right.payload_len()
    }
    fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let n = self.left.payload_len();
        let mut out = self.left.mul_raw(&a[..n], &b[..n]);
        out.extend(self.right.mul_raw(&a[n..], &b[n..]));
        out
    }
    fn inv(&self, a: &[u64]) -> Vec<u64> {
        let n = self.left.payload_len();
        let mut out = self.left.inv_raw(&a[..n]);
        out.extend(self.right.inv_raw(&a[n..]));
        out
    }
    fn eq(&self, a: &[u64], b: &[u64]) -> bool {
        let n = self.left.payload_len();
        self.left.eq_raw(&a[..n], &b[..n]) && self.right.eq_raw(&a[n..], &b[n..])
    }
    fn identity(&self) -> Vec<u64> {
        let mut out = self.left.identity().payload().to_vec();
        out.extend_from_slice(self.right.identity().payload());
        out
    }
    fn sample(&self, _rng: &mut ChaCha8Rng) -> Option<Vec<u64>> {
        let mut out = self.left.random().payload().to_vec();
        out.extend_from_slice(self.right.random().payload());
        Some(out)
    }
    fn has_sampler(&self) -> bool {
        self.left.has_random_source() && self.right.has_random_source()
    }
    fn name(&self) -> String {
        format!("{} x {}", self.left.name(), self.right.name())
    }
}

/// `A x B`, exponent `lcm(E_A, E_B)`.
pub fn direct_product(a: &BlackBox, b: &BlackBox, seed: u64) -> Result<ProductBox, OracleError> {
    let e = a.exponent().value.lcm(&b.exponent().value);
    let whole = BlackBox::new(Arc::new(PairOps { left: a.clone(), right: b.clone() }), e, seed)?;
    Ok(ProductBox { whole, left: a.clone(), right: b.clone() })
}

/// Right action of `B` on `A`: `action(x, y) = x^y`.
pub type Action = Arc<dyn Fn(&GroupElement, &GroupElement) -> GroupElement + Send + Sync>;

struct SemidirectOps {
    left: BlackBox,
    right: BlackBox,
    action: Action,
}

impl SemidirectOps {
    fn act(&self, x: &[u64], y: &[u64]) -> Vec<u64> {
        let xe = self.left.wrap(x.to_vec());
        let ye = self.right.wrap(y.to_vec());
        (self.action)(&xe, &ye).payload().to_vec()
    }
}

impl GroupOps for SemidirectOps {
    fn payload_len(&self) -> usize {
        self.left.payload_len() + self.right.payload_len()
    }
    // (x1, y1)(x2, y2) = (x1 x2^(y1^-1), y1 y2)
    fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let n = self.left.payload_len();
        let y1i = self.right.inv_raw(&a[n..]);
        let twisted = self.act(&b[..n], &y1i);
        let mut out = self.left.mul_raw(&a[..n], &twisted);
        out.extend(self.right.mul_raw(&a[n..], &b[n..]));
        out
    }
    // (x, y)^-1 = ((x^-1)^y, y^-1)
    fn inv(&self, a: &[u64]) -> Vec<u64> {
        let n = self.left.payload_len();
        let xi = self.left.inv_raw(&a[..n]);
        let mut out = self.act(&xi, &a[n..]);
        out.extend(self.right.inv_raw(&a[n..]));
        out
    }
    fn eq(&self, a: &[u64], b: &[u64]) -> bool {
        let n = self.left.payload_len();
        self.left.eq_raw(&a[..n], &b[..n]) && self.right.eq_raw(&a[n..], &b[n..])
    }
    fn identity(&self) -> Vec<u64> {
        let mut out = self.left.identity().payload().to_vec();
        out.extend_from_slice(self.right.identity().payload());
        out
    }
    fn sample(&self, _rng: &mut ChaCha8Rng) -> Option<Vec<u64>> {
        let mut out = self.left.random().payload().to_vec();
        out.extend_from_slice(self.right.random().payload());
        Some(out)
    }
    fn has_sampler(&self) -> bool {
        self.left.has_random_source() && self.right.has_random_source()
    }
    fn name(&self) -> String {
        format!("{} : {}", self.left.name(), self.right.name())
    }
}

/// `A : B` with the given right action; exponent `E_A * E_B`.
pub fn semidirect_product(a: &BlackBox, b: &BlackBox, action: Action, seed: u64) -> Result<ProductBox, OracleError> {
    let e = &a.exponent().value * &b.exponent().value;
    let ops = SemidirectOps { left: a.clone(), right: b.clone(), action };
    let whole = BlackBox::new(Arc::new(ops), e, seed)?;
    Ok(ProductBox { whole, left: a.clone(), right: b.clone() })
}

/// The subgroup of `product` generated by the given pairs.
pub fn graph_subgroup(product: &ProductBox, pairs: &[(GroupElement, GroupElement)]) -> Result<ProductBox, OracleError> {
    let gens: Vec<GroupElement> = pairs.iter().map(|(a, b)| product.pair(a, b)).collect();
    Ok(product.with_whole(product.whole.subgroup(&gens)?))
}
