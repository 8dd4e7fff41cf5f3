//! Black-box groups: opaque fixed-length strings with counted operations.
//!
//! A [`BlackBox`] is a cheap handle. Clones share the operation oracle,
//! the counters and the random source. Subgroup boxes share the oracle and
//! counters of their parent but own a product-replacement sampler.

use num_bigint::{BigUint, RandBigInt};
use num_traits::Zero;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BoxError {
    #[error("the exponent must be positive")]
    ZeroExponent,
    #[error("a subgroup box needs at least one generator")]
    NoGenerators,
    #[error("element belongs to box {got}, expected {want}")]
    ForeignElement { got: u64, want: u64 },
    #[error("payload has {got} words, box expects {want}")]
    PayloadLength { got: usize, want: usize },
    #[error("element has odd order")]
    OddOrder,
    #[error("element has even order")]
    EvenOrder,
    #[error("random search exhausted its budget: {0}")]
    Exhausted(String),
}

/// An element string. Equality must go through [`BlackBox::eq`]: encodings need not be unique.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupElement {
    box_id: u64,
    payload: Vec<u64>,
}

impl GroupElement {
    pub fn payload(&self) -> &[u64] {
        &self.payload
    }

    pub fn box_id(&self) -> u64 {
        self.box_id
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}{:?}", self.box_id, self.payload)
    }
}

/// The operation oracle behind a box. Payloads have a fixed length.
pub trait GroupOps: Send + Sync {
    fn payload_len(&self) -> usize;
    fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64>;
    fn inv(&self, a: &[u64]) -> Vec<u64>;
    fn eq(&self, a: &[u64], b: &[u64]) -> bool;
    fn identity(&self) -> Vec<u64>;
    /// Native uniform sampling, when the oracle has it.
    fn sample(&self, _rng: &mut ChaCha8Rng) -> Option<Vec<u64>> {
        None
    }
    fn has_sampler(&self) -> bool {
        false
    }
    fn name(&self) -> String;
}

/// `E = 2^m n` with `n` odd, plus the frequently used `(n + 1) / 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exponent {
    pub value: BigUint,
    pub two_power: u64,
    pub odd_part: BigUint,
    pub half_odd_plus_one: BigUint,
}

impl Exponent {
    pub fn new(value: BigUint) -> Result<Self, BoxError> {
        if value.is_zero() {
            return Err(BoxError::ZeroExponent);
        }
        let two_power = value.trailing_zeros().unwrap_or(0);
        let odd_part = &value >> two_power;
        let half_odd_plus_one = (&odd_part + 1u32) >> 1u32;
        Ok(Exponent { value, two_power, odd_part, half_odd_plus_one })
    }
}

#[derive(Debug, Default)]
struct Counters {
    mul: AtomicU64,
    inv: AtomicU64,
    eq: AtomicU64,
    random: AtomicU64,
}

/// A snapshot of operation counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    pub mul: u64,
    pub inv: u64,
    pub eq: u64,
    pub random: u64,
}

impl OpCounts {
    pub fn total(&self) -> u64 {
        self.mul + self.inv + self.eq + self.random
    }

    pub fn since(&self, earlier: &OpCounts) -> OpCounts {
        OpCounts {
            mul: self.mul - earlier.mul,
            inv: self.inv - earlier.inv,
            eq: self.eq - earlier.eq,
            random: self.random - earlier.random,
        }
    }
}

struct Core {
    id: u64,
    ops: Arc<dyn GroupOps>,
    exponent: Exponent,
    counters: Counters,
}

struct Replacement {
    slots: Vec<Vec<u64>>,
    acc: Vec<u64>,
}

enum Source {
    Native,
    Replacement(Replacement),
}

struct Sampler {
    rng: ChaCha8Rng,
    source: Source,
}

const SLOTS: usize = 10;
const BURN_IN_PER_GENERATOR: usize = 50;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Clone)]
pub struct BlackBox {
    core: Arc<Core>,
    sampler: Arc<Mutex<Sampler>>,
}

impl fmt::Debug for BlackBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BlackBox#{}({})", self.core.id, self.core.ops.name())
    }
}

impl BlackBox {
    /// A box over `ops` with global exponent `exponent`. Oracles without a
    /// native sampler get no random source until [`BlackBox::subgroup`] is used.
    pub fn new(ops: Arc<dyn GroupOps>, exponent: BigUint, seed: u64) -> Result<Self, BoxError> {
        let core = Core {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            ops,
            exponent: Exponent::new(exponent)?,
            counters: Counters::default(),
        };
        Ok(BlackBox {
            core: Arc::new(core),
            sampler: Arc::new(Mutex::new(Sampler {
                rng: ChaCha8Rng::seed_from_u64(seed),
                source: Source::Native,
            })),
        })
    }

    pub fn id(&self) -> u64 {
        self.core.id
    }

    pub fn name(&self) -> String {
        self.core.ops.name()
    }

    pub fn exponent(&self) -> &Exponent {
        &self.core.exponent
    }

    pub fn payload_len(&self) -> usize {
        self.core.ops.payload_len()
    }

    pub fn counts(&self) -> OpCounts {
        let c = &self.core.counters;
        OpCounts {
            mul: c.mul.load(Ordering::Relaxed),
            inv: c.inv.load(Ordering::Relaxed),
            eq: c.eq.load(Ordering::Relaxed),
            random: c.random.load(Ordering::Relaxed),
        }
    }

    /// Binds a raw payload to this box after a length check.
    pub fn adopt(&self, payload: Vec<u64>) -> Result<GroupElement, BoxError> {
        let want = self.payload_len();
        if payload.len() != want {
            return Err(BoxError::PayloadLength { got: payload.len(), want });
        }
        Ok(self.wrap(payload))
    }

    pub fn check(&self, x: &GroupElement) -> Result<(), BoxError> {
        if x.box_id != self.core.id {
            return Err(BoxError::ForeignElement { got: x.box_id, want: self.core.id });
        }
        Ok(())
    }

    pub(crate) fn wrap(&self, payload: Vec<u64>) -> GroupElement {
        GroupElement { box_id: self.core.id, payload }
    }

    pub(crate) fn mul_raw(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        self.core.counters.mul.fetch_add(1, Ordering::Relaxed);
        self.core.ops.mul(a, b)
    }

    pub(crate) fn inv_raw(&self, a: &[u64]) -> Vec<u64> {
        self.core.counters.inv.fetch_add(1, Ordering::Relaxed);
        self.core.ops.inv(a)
    }

    pub(crate) fn eq_raw(&self, a: &[u64], b: &[u64]) -> bool {
        self.core.counters.eq.fetch_add(1, Ordering::Relaxed);
        self.core.ops.eq(a, b)
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        debug_assert!(a.box_id == self.core.id && b.box_id == self.core.id, "foreign element");
        self.wrap(self.mul_raw(&a.payload, &b.payload))
    }

    pub fn inv(&self, a: &GroupElement) -> GroupElement {
        debug_assert_eq!(a.box_id, self.core.id, "foreign element");
        self.wrap(self.inv_raw(&a.payload))
    }

    pub fn eq(&self, a: &GroupElement, b: &GroupElement) -> bool {
        debug_assert!(a.box_id == self.core.id && b.box_id == self.core.id, "foreign element");
        self.eq_raw(&a.payload, &b.payload)
    }

    pub fn identity(&self) -> GroupElement {
        self.wrap(self.core.ops.identity())
    }

    pub fn is_identity(&self, a: &GroupElement) -> bool {
        self.eq_raw(&a.payload, &self.core.ops.identity())
    }

    /// `g^-1 x g`.
    pub fn conj(&self, x: &GroupElement, g: &GroupElement) -> GroupElement {
        let gi = self.inv(g);
        self.mul(&self.mul(&gi, x), g)
    }

    /// `g x g` for an involution `g`: two multiplications, no inversion.
    pub fn conj_by_involution(&self, x: &GroupElement, g: &GroupElement) -> GroupElement {
        self.mul(&self.mul(g, x), g)
    }

    pub fn commute(&self, a: &GroupElement, b: &GroupElement) -> bool {
        self.eq(&self.mul(a, b), &self.mul(b, a))
    }

    pub fn is_involution(&self, x: &GroupElement) -> bool {
        !self.is_identity(x) && self.is_identity(&self.mul(x, x))
    }

    /// One random element, from the native sampler or by product replacement.
    pub fn random(&self) -> GroupElement {
        self.core.counters.random.fetch_add(1, Ordering::Relaxed);
        let mut guard = self.sampler.lock().expect("sampler poisoned");
        let sampler = &mut *guard;
        match &mut sampler.source {
            Source::Native => {
                let payload = self
                    .core
                    .ops
                    .sample(&mut sampler.rng)
                    .expect("box has no native sampler; use a subgroup box");
                self.wrap(payload)
            }
            Source::Replacement(pr) => {
                let payload = self.rattle(pr, &mut sampler.rng);
                self.wrap(payload)
            }
        }
    }

    pub fn random_u64(&self) -> u64 {
        self.sampler.lock().expect("sampler poisoned").rng.next_u64()
    }

    /// A uniformly random integer below `bound`, drawn from this box's random source.
    pub fn random_below(&self, bound: &BigUint) -> BigUint {
        self.sampler.lock().expect("sampler poisoned").rng.gen_biguint_below(bound)
    }

    fn rattle(&self, pr: &mut Replacement, rng: &mut ChaCha8Rng) -> Vec<u64> {
        let n = pr.slots.len();
        let s = rng.gen_range(0..n);
        let mut t = rng.gen_range(0..n - 1);
        if t >= s {
            t += 1;
        }
        let other = if rng.gen_bool(0.5) { pr.slots[t].clone() } else { self.inv_raw(&pr.slots[t]) };
        pr.slots[s] = if rng.gen_bool(0.5) {
            self.mul_raw(&pr.slots[s], &other)
        } else {
            self.mul_raw(&other, &pr.slots[s])
        };
        pr.acc = self.mul_raw(&pr.acc, &pr.slots[s]);
        pr.acc.clone()
    }

    /// A box for the subgroup generated by `gens`, sampled by product replacement
    /// with an accumulator after a burn-in of 50 steps per generator.
    pub fn subgroup(&self, gens: &[GroupElement]) -> Result<BlackBox, BoxError> {
        if gens.is_empty() {
            return Err(BoxError::NoGenerators);
        }
        for g in gens {
            self.check(g)?;
        }
        let seed = self.random_u64();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let slots: Vec<Vec<u64>> = (0..SLOTS.max(gens.len()))
            .map(|i| gens[i % gens.len()].payload.clone())
            .collect();
        let mut pr = Replacement { slots, acc: self.core.ops.identity() };
        for _ in 0..BURN_IN_PER_GENERATOR * gens.len() {
            self.rattle(&mut pr, &mut rng);
        }
        Ok(BlackBox {
            core: self.core.clone(),
            sampler: Arc::new(Mutex::new(Sampler { rng, source: Source::Replacement(pr) })),
        })
    }

    /// The same group with an independent random source.
    pub fn fork(&self, seed: u64) -> BlackBox {
        let guard = self.sampler.lock().expect("sampler poisoned");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let source = match &guard.source {
            Source::Native => Source::Native,
            Source::Replacement(pr) => {
                let mut pr = Replacement { slots: pr.slots.clone(), acc: pr.acc.clone() };
                for _ in 0..BURN_IN_PER_GENERATOR {
                    self.rattle(&mut pr, &mut rng);
                }
                Source::Replacement(pr)
            }
        };
        BlackBox { core: self.core.clone(), sampler: Arc::new(Mutex::new(Sampler { rng, source })) }
    }

    pub fn has_random_source(&self) -> bool {
        let guard = self.sampler.lock().expect("sampler poisoned");
        matches!(guard.source, Source::Replacement(_)) || self.core.ops.has_sampler()
    }

    pub fn power(&self, x: &GroupElement, e: &BigUint) -> GroupElement {
        let mut acc = self.identity();
        let bits = e.bits();
        for i in (0..bits).rev() {
            acc = self.mul(&acc, &acc);
            if e.bit(i) {
                acc = self.mul(&acc, x);
            }
        }
        acc
    }

    pub fn power_u64(&self, x: &GroupElement, e: u64) -> GroupElement {
        self.power(x, &BigUint::from(e))
    }

    pub fn square(&self, x: &GroupElement) -> GroupElement {
        self.mul(x, x)
    }

    /// `x^n`, the projection onto the 2-part of `<x>`.
    pub fn two_part(&self, x: &GroupElement) -> GroupElement {
        self.power(x, &self.core.exponent.odd_part)
    }

    pub fn has_even_order(&self, x: &GroupElement) -> bool {
        !self.is_identity(&self.two_part(x))
    }

    /// `l` with `|x^n| = 2^l`.
    pub fn two_height(&self, x: &GroupElement) -> u64 {
        let mut y = self.two_part(x);
        let mut l = 0;
        while !self.is_identity(&y) {
            y = self.square(&y);
            l += 1;
            debug_assert!(l <= self.core.exponent.two_power, "exponent is not a multiple of the order");
        }
        l
    }

    /// The unique involution in `<x>`, for `x` of even order.
    pub fn involution_of(&self, x: &GroupElement) -> Result<GroupElement, BoxError> {
        let mut y = self.two_part(x);
        if self.is_identity(&y) {
            return Err(BoxError::OddOrder);
        }
        for _ in 0..=self.core.exponent.two_power {
            let y2 = self.square(&y);
            if self.is_identity(&y2) {
                return Ok(y);
            }
            y = y2;
        }
        Err(BoxError::Exhausted("exponent is not a multiple of the element order".into()))
    }

    /// `x^((n+1)/2)`, the square root of an element of odd order lying in `<x>`.
    pub fn odd_sqrt(&self, x: &GroupElement) -> Result<GroupElement, BoxError> {
        let r = self.power(x, &self.core.exponent.half_odd_plus_one);
        if !self.eq(&self.square(&r), x) {
            return Err(BoxError::EvenOrder);
        }
        Ok(r)
    }

    /// Tonelli-Shanks in the cyclic group `<x>`: a square root of `z` taken
    /// inside `<x>`, or `None` when `z` is not a square there.
    pub fn cyclic_sqrt(&self, x: &GroupElement, z: &GroupElement) -> Option<GroupElement> {
        let ex = &self.core.exponent;
        let mut a = self.power(z, &ex.half_odd_plus_one);
        let mut b = self.power(z, &ex.odd_part);
        let mut c = self.two_part(x);
        let mut l = self.two_height(x);
        loop {
            if self.is_identity(&b) {
                break;
            }
            let mut d = 0;
            let mut y = b.clone();
            while !self.is_identity(&y) {
                y = self.square(&y);
                d += 1;
                if d >= l {
                    return None;
                }
            }
            let mut t = c.clone();
            for _ in 0..(l - d - 1) {
                t = self.square(&t);
            }
            a = self.mul(&a, &t);
            c = self.square(&t);
            b = self.mul(&b, &c);
            l = d;
        }
        self.eq(&self.square(&a), z).then_some(a)
    }

    /// Draw random elements until one satisfies `pred`, at most `budget` tries.
    pub fn search<F>(&self, budget: usize, what: &str, mut pred: F) -> Result<GroupElement, BoxError>
    where
        F: FnMut(&GroupElement) -> bool,
    {
        for _ in 0..budget {
            let x = self.random();
            if pred(&x) {
                return Ok(x);
            }
        }
        Err(BoxError::Exhausted(what.to_string()))
    }
}

/// Free-function form of [`BlackBox::subgroup`].
pub fn make_subgroup_box(parent: &BlackBox, gens: &[GroupElement]) -> Result<BlackBox, BoxError> {
    parent.subgroup(gens)
}

/// Number of independent tries needed to push the failure chance of an event
/// with success probability `p` below `2^-bits`.
pub fn tries_for(p: f64, bits: u32) -> usize {
    let p = p.clamp(1e-9, 1.0 - 1e-12);
    ((bits as f64) * std::f64::consts::LN_2 / -(1.0 - p).ln()).ceil().max(1.0) as usize
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;

    /// `Z/N` written multiplicatively, with native sampling.
    pub struct Cyclic(pub u64);

    impl GroupOps for Cyclic {
        fn payload_len(&self) -> usize {
            1
        }
        fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
            vec![(a[0] + b[0]) % self.0]
        }
        fn inv(&self, a: &[u64]) -> Vec<u64> {
            vec![(self.0 - a[0]) % self.0]
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

    pub fn cyclic(n: u64) -> BlackBox {
        BlackBox::new(Arc::new(Cyclic(n)), BigUint::from(n), 7).unwrap()
    }
}
