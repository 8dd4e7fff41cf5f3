//! Explicit finite fields `F_q`, `q = p^k`, as `F_p`-vector spaces with structure constants.
//!
//! Values are coefficient vectors in the power basis `1, x, ..., x^(k-1)` of
//! `F_p[x]/(f)`. Products go through the table `c[i][j][l]` with
//! `x^i * x^j = sum_l c[i][j][l] x^l`.

use crate::arith::{add_mod, inv_mod, is_prime, mul_mod, neg_mod, sub_mod};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("extension degree must be positive")]
    ZeroDegree,
    #[error("defining polynomial must be monic of degree {0}")]
    BadPolynomial(usize),
    #[error("defining polynomial is reducible over F_{0}")]
    Reducible(u64),
    #[error("coefficient {value} is not reduced modulo {p}")]
    Coefficient { value: u64, p: u64 },
    #[error("value has {got} coefficients, field expects {want}")]
    Length { got: usize, want: usize },
    #[error("zero has no inverse")]
    ZeroInverse,
    #[error("field order {0} is too large")]
    TooLarge(String),
}

/// Wire form of a field: `{"p": .., "k": .., "poly": [c0, .., ck]}` (low to high, monic).
/// `k` defaults to 1; a missing `poly` selects the default irreducible of degree `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub p: u64,
    #[serde(default = "degree_one")]
    pub k: usize,
    #[serde(default)]
    pub poly: Vec<u64>,
}

fn degree_one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldValue(pub(crate) Vec<u64>);

impl FieldValue {
    pub fn coeffs(&self) -> &[u64] {
        &self.0
    }
}

#[derive(Debug, Clone)]
pub struct ExplicitField {
    p: u64,
    k: usize,
    poly: Vec<u64>,
    table: Vec<u64>,
    order: BigUint,
}

impl PartialEq for ExplicitField {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.k == other.k && self.poly == other.poly
    }
}
impl Eq for ExplicitField {}

impl ExplicitField {
    pub fn prime(p: u64) -> Result<Self, FieldError> {
        Self::new(p, 1)
    }

    /// `F_{p^k}` with the least monic irreducible polynomial of degree `k`
    /// (ordered by the integer `sum c_i p^i`).
    pub fn new(p: u64, k: usize) -> Result<Self, FieldError> {
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        if k == 0 {
            return Err(FieldError::ZeroDegree);
        }
        if k == 1 {
            return Self::with_poly(p, vec![0, 1]);
        }
        let bound = (p as u128).checked_pow(k as u32).filter(|b| *b < u64::MAX as u128);
        let bound = bound.ok_or_else(|| FieldError::TooLarge(format!("{p}^{k}")))? as u64;
        for idx in 0..bound {
            let mut poly = Vec::with_capacity(k + 1);
            let mut rest = idx;
            for _ in 0..k {
                poly.push(rest % p);
                rest /= p;
            }
            poly.push(1);
            if poly[0] != 0 && irreducible(&poly, p) {
                return Self::with_poly(p, poly);
            }
        }
        unreachable!("irreducible polynomials exist in every degree")
    }

    pub fn with_poly(p: u64, poly: Vec<u64>) -> Result<Self, FieldError> {
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        if poly.len() < 2 {
            return Err(FieldError::ZeroDegree);
        }
        let k = poly.len() - 1;
        if poly[k] != 1 {
            return Err(FieldError::BadPolynomial(k));
        }
        if let Some(&value) = poly.iter().find(|&&c| c >= p) {
            return Err(FieldError::Coefficient { value, p });
        }
        if k > 1 && !irreducible(&poly, p) {
            return Err(FieldError::Reducible(p));
        }
        let table = structure_table(&poly, p);
        let order = BigUint::from(p).pow(k as u32);
        Ok(ExplicitField { p, k, poly, table, order })
    }

    pub fn from_spec(spec: &FieldSpec) -> Result<Self, FieldError> {
        if spec.poly.is_empty() {
            return Self::new(spec.p, spec.k);
        }
        if spec.poly.len() != spec.k + 1 {
            return Err(FieldError::BadPolynomial(spec.k));
        }
        Self::with_poly(spec.p, spec.poly.clone())
    }

    pub fn spec(&self) -> FieldSpec {
        FieldSpec { p: self.p, k: self.k, poly: self.poly.clone() }
    }

    pub fn characteristic(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn poly(&self) -> &[u64] {
        &self.poly
    }

    pub fn order(&self) -> &BigUint {
        &self.order
    }

    /// `q` as a machine word when it fits.
    pub fn order_u64(&self) -> Option<u64> {
        self.order.to_u64()
    }

    /// `c[i][j][l]`: coefficient of `x^l` in `x^i * x^j`.
    pub fn structure_constant(&self, i: usize, j: usize, l: usize) -> u64 {
        self.table[(i * self.k + j) * self.k + l]
    }

    pub fn zero(&self) -> FieldValue {
        FieldValue(vec![0; self.k])
    }

    pub fn one(&self) -> FieldValue {
        self.from_u64(1)
    }

    pub fn from_u64(&self, n: u64) -> FieldValue {
        let mut v = vec![0; self.k];
        v[0] = n % self.p;
        FieldValue(v)
    }

    pub fn from_i64(&self, n: i64) -> FieldValue {
        self.from_u64((n as i128).rem_euclid(self.p as i128) as u64)
    }

    pub fn element(&self, coeffs: &[u64]) -> Result<FieldValue, FieldError> {
        if coeffs.len() != self.k {
            return Err(FieldError::Length { got: coeffs.len(), want: self.k });
        }
        if let Some(&value) = coeffs.iter().find(|&&c| c >= self.p) {
            return Err(FieldError::Coefficient { value, p: self.p });
        }
        Ok(FieldValue(coeffs.to_vec()))
    }

    /// The element with base-`p` digits of `index` as coefficients.
    pub fn from_index(&self, mut index: u64) -> FieldValue {
        let mut v = vec![0; self.k];
        for c in v.iter_mut() {
            *c = index % self.p;
            index /= self.p;
        }
        FieldValue(v)
    }

    pub fn index_of(&self, a: &FieldValue) -> u64 {
        a.0.iter().rev().fold(0u64, |acc, &c| acc.wrapping_mul(self.p).wrapping_add(c))
    }

    /// All elements in index order. Only sensible for small `q`.
    pub fn elements(&self) -> impl Iterator<Item = FieldValue> + '_ {
        let q = self.order_u64().expect("enumerating a huge field");
        (0..q).map(move |i| self.from_index(i))
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldValue {
        FieldValue((0..self.k).map(|_| rng.gen_range(0..self.p)).collect())
    }

    pub fn is_zero(&self, a: &FieldValue) -> bool {
        a.0.iter().all(|&c| c == 0)
    }

    pub fn add(&self, a: &FieldValue, b: &FieldValue) -> FieldValue {
        FieldValue(self.add_raw(&a.0, &b.0))
    }

    pub fn sub(&self, a: &FieldValue, b: &FieldValue) -> FieldValue {
        FieldValue(self.sub_raw(&a.0, &b.0))
    }

    pub fn neg(&self, a: &FieldValue) -> FieldValue {
        FieldValue(self.neg_raw(&a.0))
    }

    pub fn mul(&self, a: &FieldValue, b: &FieldValue) -> FieldValue {
        FieldValue(self.mul_raw(&a.0, &b.0))
    }

    pub fn inv(&self, a: &FieldValue) -> Result<FieldValue, FieldError> {
        self.inv_raw(&a.0).map(FieldValue).ok_or(FieldError::ZeroInverse)
    }

    pub fn div(&self, a: &FieldValue, b: &FieldValue) -> Result<FieldValue, FieldError> {
        Ok(self.mul(a, &self.inv(b)?))
    }

    pub fn pow(&self, a: &FieldValue, e: &BigUint) -> FieldValue {
        let mut acc = self.one();
        for i in (0..e.bits()).rev() {
            acc = self.mul(&acc, &acc);
            if e.bit(i) {
                acc = self.mul(&acc, a);
            }
        }
        acc
    }

    pub fn frobenius(&self, a: &FieldValue) -> FieldValue {
        self.pow(a, &BigUint::from(self.p))
    }

    pub fn is_square(&self, a: &FieldValue) -> bool {
        if self.p == 2 || self.is_zero(a) {
            return true;
        }
        let e = (&self.order - 1u32) >> 1;
        self.pow(a, &e) == self.one()
    }

    /// A square root, or `None` for non-squares.
    pub fn sqrt(&self, a: &FieldValue) -> Option<FieldValue> {
        if self.is_zero(a) {
            return Some(self.zero());
        }
        let q = &self.order;
        if self.p == 2 {
            return Some(self.pow(a, &(q >> 1u32)));
        }
        if !self.is_square(a) {
            return None;
        }
        if (q % 4u32) == BigUint::from(3u32) {
            return Some(self.pow(a, &((q + 1u32) >> 2u32)));
        }
        // Tonelli-Shanks: q - 1 = 2^s t.
        let qm1 = q - 1u32;
        let s = qm1.trailing_zeros().unwrap_or(0);
        let t = &qm1 >> s;
        let z = (2..)
            .map(|i| self.from_index(i))
            .find(|z| !self.is_square(z))
            .expect("non-squares exist");
        let mut m = s;
        let mut c = self.pow(&z, &t);
        let mut x = self.pow(a, &((&t + 1u32) >> 1u32));
        let mut b = self.pow(a, &t);
        let one = self.one();
        while b != one {
            let mut i = 0;
            let mut b2 = b.clone();
            while b2 != one {
                b2 = self.mul(&b2, &b2);
                i += 1;
            }
            let mut f = c.clone();
            for _ in 0..(m - i - 1) {
                f = self.mul(&f, &f);
            }
            x = self.mul(&x, &f);
            c = self.mul(&f, &f);
            b = self.mul(&b, &c);
            m = i;
        }
        Some(x)
    }

    pub(crate) fn add_raw(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter().zip(b).map(|(&x, &y)| add_mod(x, y, self.p)).collect()
    }

    pub(crate) fn sub_raw(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter().zip(b).map(|(&x, &y)| sub_mod(x, y, self.p)).collect()
    }

    pub(crate) fn neg_raw(&self, a: &[u64]) -> Vec<u64> {
        a.iter().map(|&x| neg_mod(x, self.p)).collect()
    }

    pub(crate) fn mul_raw(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let (k, p) = (self.k, self.p);
        if k == 1 {
            return vec![mul_mod(a[0], b[0], p)];
        }
        let mut out = vec![0u64; k];
        for i in 0..k {
            if a[i] == 0 {
                continue;
            }
            for j in 0..k {
                if b[j] == 0 {
                    continue;
                }
                let ab = mul_mod(a[i], b[j], p);
                let row = &self.table[(i * k + j) * k..(i * k + j + 1) * k];
                for (o, &c) in out.iter_mut().zip(row) {
                    if c != 0 {
                        *o = add_mod(*o, mul_mod(ab, c, p), p);
                    }
                }
            }
        }
        out
    }

    pub(crate) fn inv_raw(&self, a: &[u64]) -> Option<Vec<u64>> {
        if a.iter().all(|&c| c == 0) {
            return None;
        }
        if self.k == 1 {
            return inv_mod(a[0], self.p).map(|x| vec![x]);
        }
        let e = &self.order - 2u32;
        Some(self.pow(&FieldValue(a.to_vec()), &e).0)
    }

    pub(crate) fn is_zero_raw(a: &[u64]) -> bool {
        a.iter().all(|&c| c == 0)
    }

    pub(crate) fn is_one_raw(a: &[u64]) -> bool {
        a[0] == 1 && a[1..].iter().all(|&c| c == 0)
    }
}

/// `x^i mod f` for `i < 2k - 1`, flattened into the `c[i][j][l]` table.
fn structure_table(poly: &[u64], p: u64) -> Vec<u64> {
    let k = poly.len() - 1;
    let mut powers: Vec<Vec<u64>> = Vec::with_capacity(2 * k);
    let mut cur = vec![0u64; k];
    cur[0] = 1 % p;
    for _ in 0..(2 * k).saturating_sub(1) {
        powers.push(cur.clone());
        // multiply by x and reduce with the monic poly
        let top = cur[k - 1];
        for l in (1..k).rev() {
            cur[l] = sub_mod(cur[l - 1], mul_mod(top, poly[l], p), p);
        }
        cur[0] = neg_mod(mul_mod(top, poly[0], p), p);
    }
    let mut table = vec![0u64; k * k * k];
    for i in 0..k {
        for j in 0..k {
            table[(i * k + j) * k..(i * k + j + 1) * k].copy_from_slice(&powers[i + j]);
        }
    }
    table
}

fn trim(mut a: Vec<u64>) -> Vec<u64> {
    if a.is_empty() {
        a.push(0);
    }
    while a.len() > 1 && *a.last().unwrap() == 0 {
        a.pop();
    }
    a
}

fn poly_mulmod(a: &[u64], b: &[u64], f: &[u64], p: u64) -> Vec<u64> {
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = add_mod(prod[i + j], mul_mod(x, y, p), p);
        }
    }
    poly_rem(prod, f, p)
}

fn poly_rem(mut a: Vec<u64>, f: &[u64], p: u64) -> Vec<u64> {
    let df = f.len() - 1;
    let lead_inv = inv_mod(f[df], p).expect("nonzero leading coefficient");
    while a.len() > df {
        let top = mul_mod(*a.last().unwrap(), lead_inv, p);
        let shift = a.len() - 1 - df;
        for (i, &c) in f.iter().enumerate() {
            a[shift + i] = sub_mod(a[shift + i], mul_mod(top, c, p), p);
        }
        a.pop();
    }
    trim(a)
}

fn poly_gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let (mut a, mut b) = (trim(a.to_vec()), trim(b.to_vec()));
    while !(b.len() == 1 && b[0] == 0) {
        let r = poly_rem(a, &b, p);
        a = b;
        b = r;
    }
    a
}

/// `x^(p^j) mod f`.
fn frobenius_power(f: &[u64], p: u64, j: usize) -> Vec<u64> {
    let mut h = vec![0, 1 % p];
    for _ in 0..j {
        // h <- h^p
        let mut acc = vec![1 % p];
        let mut base = h.clone();
        let mut e = p;
        while e > 0 {
            if e & 1 == 1 {
                acc = poly_mulmod(&acc, &base, f, p);
            }
            base = poly_mulmod(&base, &base, f, p);
            e >>= 1;
        }
        h = acc;
    }
    h
}

/// Rabin's test for a monic `f` of degree `k >= 2`.
fn irreducible(f: &[u64], p: u64) -> bool {
    let k = f.len() - 1;
    let x_minus = |h: Vec<u64>| {
        let mut h = h;
        h.resize(h.len().max(2), 0);
        h[1] = sub_mod(h[1], 1 % p, p);
        trim(h)
    };
    let full = x_minus(frobenius_power(f, p, k));
    if !(full.len() == 1 && full[0] == 0) {
        return false;
    }
    let mut primes = Vec::new();
    let mut n = k;
    let mut d = 2;
    while n > 1 {
        if n % d == 0 {
            primes.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    primes.into_iter().all(|r| {
        let g = poly_gcd(f, &x_minus(frobenius_power(f, p, k / r)), p);
        g.len() == 1 && g[0] != 0
    })
}

/// Value of `a` in `F_p` as an integer, if the field is prime or `a` is in the prime subfield.
pub fn prime_subfield_value(a: &FieldValue) -> Option<u64> {
    if a.0[1..].iter().all(|&c| c == 0) {
        Some(a.0[0])
    } else {
        None
    }
}

impl ExplicitField {
    pub fn is_one(&self, a: &FieldValue) -> bool {
        Self::is_one_raw(&a.0)
    }
}
