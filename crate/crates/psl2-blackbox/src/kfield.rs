//! The black box field `K` on the axis `e1 v e3`.
//!
//! Field elements are the points `(a, 0, 1)`: `e3` is zero, `d2` is one and
//! `e1` plays infinity. Addition and multiplication are straightedge
//! constructions with the unit `d1 = (0,1,1)` of the second axis and the
//! diagonal `e3 v d3`; negation and inversion are conjugations by `e3` and `d2`.
//! Points of the plane may fall on the quadric mid-construction; the policy
//! decides whether that ends the operation or is logged and traversed.

use crate::bbox::{BlackBox, GroupElement};
use crate::frame::SpinorFrame;
use crate::involution::{Confidence, InvolutionError, SerendipityOutcome, UnipotentWitness};
use crate::plane::{Plane, PlanePoint};
use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KError {
    #[error(transparent)]
    Involution(#[from] InvolutionError),
    #[error("zero has no inverse")]
    ZeroInverse,
    #[error("the field order is needed: {0}")]
    NeedOrder(&'static str),
    #[error("no non-square found in K")]
    NoNonSquare,
}

/// What a field operation does when a construction lands on the quadric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Policy {
    /// Stop and return the unipotent element.
    #[default]
    Report,
    /// Continue through the quadric point and log the witness.
    Traverse,
}

/// A point of the axis `e1 v e3` other than `e1`.
#[derive(Debug, Clone)]
pub struct FieldElementK(pub PlanePoint);

impl FieldElementK {
    pub fn point(&self) -> &PlanePoint {
        &self.0
    }

    pub fn element(&self) -> &GroupElement {
        self.0.element()
    }
}

enum Interrupt {
    Unipotent(UnipotentWitness),
    Error(KError),
}

impl<E: Into<KError>> From<E> for Interrupt {
    fn from(e: E) -> Self {
        Interrupt::Error(e.into())
    }
}

type Step<T> = Result<T, Interrupt>;

fn finish<T>(r: Step<T>) -> Result<SerendipityOutcome<T>, KError> {
    match r {
        Ok(v) => Ok(SerendipityOutcome::Ok(v)),
        Err(Interrupt::Unipotent(w)) => Ok(SerendipityOutcome::Unipotent(w)),
        Err(Interrupt::Error(e)) => Err(e),
    }
}

const MEMO_LIMIT: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    Add,
    Mul,
}

/// Lines used by every addition and multiplication, as poles.
#[derive(Debug, Clone)]
struct Scaffold {
    /// `d1 v e1`, the horizontal line through the second unit.
    horizontal: PlanePoint,
    /// `e3 v d3`, the diagonal.
    diagonal: PlanePoint,
    /// `(1, 1)` on the diagonal.
    diagonal_unit: PlanePoint,
}

pub struct BlackBoxFieldK {
    plane: Plane,
    frame: SpinorFrame,
    policy: Policy,
    scaffold: Scaffold,
    witnesses: Mutex<Vec<UnipotentWitness>>,
    memo: Mutex<HashMap<(Op, Vec<u64>, Vec<u64>), PlanePoint>>,
    additions: AtomicU64,
    multiplications: AtomicU64,
}

impl std::fmt::Debug for BlackBoxFieldK {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BlackBoxFieldK({:?}, {:?})", self.plane.black_box(), self.policy)
    }
}

fn reg(g: &GroupElement) -> PlanePoint {
    PlanePoint::Regular(g.clone())
}

impl BlackBoxFieldK {
    pub fn new(x: BlackBox, frame: SpinorFrame, policy: Policy, conf: Confidence) -> Result<Self, KError> {
        let plane = Plane::new(x, conf)?;
        let mut log = Vec::new();
        let scaffold = build_scaffold(&plane, &frame, &mut log)?;
        Ok(BlackBoxFieldK {
            plane,
            frame,
            policy,
            scaffold,
            witnesses: Mutex::new(log),
            memo: Mutex::new(HashMap::new()),
            additions: AtomicU64::new(0),
            multiplications: AtomicU64::new(0),
        })
    }

    pub fn plane(&self) -> &Plane {
        &self.plane
    }

    pub fn frame(&self) -> &SpinorFrame {
        &self.frame
    }

    pub fn black_box(&self) -> &BlackBox {
        self.plane.black_box()
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn set_policy(&mut self, policy: Policy) {
        self.policy = policy;
    }

    /// Quadric points traversed so far.
    pub fn witnesses(&self) -> Vec<UnipotentWitness> {
        self.witnesses.lock().expect("witness log poisoned").clone()
    }

    pub fn clear_witnesses(&self) {
        self.witnesses.lock().expect("witness log poisoned").clear();
    }

    fn perp(&self, pol: Policy, a: &PlanePoint, b: &PlanePoint) -> Step<PlanePoint> {
        match self.plane.perp(a, b)? {
            SerendipityOutcome::Ok(p) => Ok(p),
            SerendipityOutcome::Unipotent(w) => match pol {
                Policy::Report => Err(Interrupt::Unipotent(w)),
                Policy::Traverse => {
                    let u = w.u.clone();
                    self.witnesses.lock().expect("witness log poisoned").push(w);
                    Ok(PlanePoint::Parabolic(u))
                }
            },
        }
    }

    pub fn zero(&self) -> FieldElementK {
        FieldElementK(reg(&self.frame.e3))
    }

    pub fn one(&self) -> FieldElementK {
        FieldElementK(reg(&self.frame.d2))
    }

    pub fn infinity(&self) -> PlanePoint {
        reg(&self.frame.e1)
    }

    pub fn eq(&self, a: &FieldElementK, b: &FieldElementK) -> bool {
        self.plane.same_point(&a.0, &b.0)
    }

    pub fn is_zero(&self, a: &FieldElementK) -> bool {
        self.eq(a, &self.zero())
    }

    /// Wraps a point known to lie on the axis.
    pub fn from_point(&self, p: PlanePoint) -> FieldElementK {
        FieldElementK(p)
    }

    /// Whether an involution lies on the axis and differs from infinity.
    pub fn is_axis_point(&self, g: &GroupElement) -> bool {
        let x = self.black_box();
        let f = &self.frame;
        x.is_involution(g) && !x.eq(g, &f.e2) && x.commute(g, &f.e2) && !x.eq(g, &f.e1)
    }

    /// A random element: a random reflection in the centralizer of `e2`.
    pub fn random_element(&self) -> Result<FieldElementK, KError> {
        let e = self.plane.engine();
        for _ in 0..e.confidence().tries(0.4) {
            for c in e.centralizer_samples(&self.frame.e2, 4) {
                if self.is_axis_point(&c) {
                    return Ok(FieldElementK(reg(&c)));
                }
            }
        }
        Err(InvolutionError::Exhausted("random axis point").into())
    }

    fn memo_get(&self, op: Op, a: &FieldElementK, b: &FieldElementK) -> Option<PlanePoint> {
        let key = (op, a.element().payload().to_vec(), b.element().payload().to_vec());
        self.memo.lock().expect("memo poisoned").get(&key).cloned()
    }

    fn memo_put(&self, op: Op, a: &FieldElementK, b: &FieldElementK, r: &PlanePoint) {
        let mut m = self.memo.lock().expect("memo poisoned");
        if m.len() >= MEMO_LIMIT {
            m.clear();
        }
        m.insert((op, a.element().payload().to_vec(), b.element().payload().to_vec()), r.clone());
    }

    /// Additions started so far, including memo hits.
    pub fn additions(&self) -> u64 {
        self.additions.load(Ordering::Relaxed)
    }

    pub fn multiplications(&self) -> u64 {
        self.multiplications.load(Ordering::Relaxed)
    }

    fn add_step(&self, pol: Policy, a: &FieldElementK, b: &FieldElementK) -> Step<FieldElementK> {
        self.additions.fetch_add(1, Ordering::Relaxed);
        if let Some(r) = self.memo_get(Op::Add, a, b) {
            return Ok(FieldElementK(r));
        }
        let f = &self.frame;
        let vertical = self.perp(pol, &a.0, &reg(&f.e2))?;
        let c = self.perp(pol, &vertical, &self.scaffold.horizontal)?;
        let slope = self.perp(pol, &reg(&f.d1), &b.0)?;
        let direction = self.perp(pol, &slope, &reg(&f.e3))?;
        let parallel = self.perp(pol, &c, &direction)?;
        let r = self.perp(pol, &parallel, &reg(&f.e2))?;
        self.memo_put(Op::Add, a, b, &r);
        Ok(FieldElementK(r))
    }

    fn mul_step(&self, pol: Policy, a: &FieldElementK, b: &FieldElementK) -> Step<FieldElementK> {
        self.multiplications.fetch_add(1, Ordering::Relaxed);
        if let Some(r) = self.memo_get(Op::Mul, a, b) {
            return Ok(FieldElementK(r));
        }
        let f = &self.frame;
        let vertical = self.perp(pol, &a.0, &reg(&f.e2))?;
        let d = self.perp(pol, &self.scaffold.diagonal, &vertical)?;
        let slope = self.perp(pol, &b.0, &self.scaffold.diagonal_unit)?;
        let direction = self.perp(pol, &slope, &reg(&f.e3))?;
        let parallel = self.perp(pol, &d, &direction)?;
        let r = self.perp(pol, &reg(&f.e2), &parallel)?;
        self.memo_put(Op::Mul, a, b, &r);
        Ok(FieldElementK(r))
    }

    pub fn add(&self, a: &FieldElementK, b: &FieldElementK) -> Result<SerendipityOutcome<FieldElementK>, KError> {
        self.add_with(a, b, self.policy)
    }

    pub fn add_with(&self, a: &FieldElementK, b: &FieldElementK, pol: Policy) -> Result<SerendipityOutcome<FieldElementK>, KError> {
        finish(self.add_step(pol, a, b))
    }

    pub fn mul(&self, a: &FieldElementK, b: &FieldElementK) -> Result<SerendipityOutcome<FieldElementK>, KError> {
        finish(self.mul_step(self.policy, a, b))
    }

    pub fn mul_with(&self, a: &FieldElementK, b: &FieldElementK, pol: Policy) -> Result<SerendipityOutcome<FieldElementK>, KError> {
        finish(self.mul_step(pol, a, b))
    }

    /// The point perpendicular to both `a` and `b`.
    pub fn perp_with(&self, a: &PlanePoint, b: &PlanePoint, pol: Policy) -> Result<SerendipityOutcome<PlanePoint>, KError> {
        finish(self.perp(pol, a, b))
    }

    pub fn neg(&self, a: &FieldElementK) -> FieldElementK {
        self.conjugate(a, &self.frame.e3)
    }

    pub fn inv(&self, a: &FieldElementK) -> Result<FieldElementK, KError> {
        if self.is_zero(a) {
            return Err(KError::ZeroInverse);
        }
        Ok(self.conjugate(a, &self.frame.d2))
    }

    fn conjugate(&self, a: &FieldElementK, by: &GroupElement) -> FieldElementK {
        let x = self.black_box();
        let g = x.conj_by_involution(a.element(), by);
        FieldElementK(match a.0 {
            PlanePoint::Regular(_) => PlanePoint::Regular(g),
            PlanePoint::Parabolic(_) => PlanePoint::Parabolic(g),
        })
    }

    pub fn sub(&self, a: &FieldElementK, b: &FieldElementK) -> Result<SerendipityOutcome<FieldElementK>, KError> {
        self.add(a, &self.neg(b))
    }

    pub fn div(&self, a: &FieldElementK, b: &FieldElementK) -> Result<SerendipityOutcome<FieldElementK>, KError> {
        self.mul(a, &self.inv(b)?)
    }

    fn residue_step(&self, pol: Policy, r: &BigUint) -> Step<FieldElementK> {
        let one = self.one();
        let mut acc = self.zero();
        for i in (0..r.bits()).rev() {
            if !self.is_zero(&acc) {
                acc = self.add_step(pol, &acc, &acc)?;
            }
            if r.bit(i) {
                acc = self.add_step(pol, &acc, &one)?;
            }
        }
        Ok(acc)
    }

    /// The image of the residue `r` by double-and-add on one.
    pub fn residue_image(&self, r: &BigUint) -> Result<SerendipityOutcome<FieldElementK>, KError> {
        self.residue_image_with(r, self.policy)
    }

    pub fn residue_image_with(&self, r: &BigUint, pol: Policy) -> Result<SerendipityOutcome<FieldElementK>, KError> {
        finish(self.residue_step(pol, r))
    }

    pub fn residue_image_u64(&self, r: u64) -> Result<SerendipityOutcome<FieldElementK>, KError> {
        self.residue_image(&BigUint::from(r))
    }

    fn pow_step(&self, pol: Policy, a: &FieldElementK, e: &BigUint) -> Step<FieldElementK> {
        let mut acc = self.one();
        for i in (0..e.bits()).rev() {
            acc = self.mul_step(pol, &acc, &acc)?;
            if e.bit(i) {
                acc = self.mul_step(pol, &acc, a)?;
            }
        }
        Ok(acc)
    }

    pub fn pow(&self, a: &FieldElementK, e: &BigUint) -> Result<SerendipityOutcome<FieldElementK>, KError> {
        finish(self.pow_step(self.policy, a, e))
    }

    /// A square root of `a` in a field of order `q`, or `None` for non-squares.
    pub fn sqrt(&self, a: &FieldElementK, q: &BigUint) -> Result<SerendipityOutcome<Option<FieldElementK>>, KError> {
        finish(self.sqrt_step(self.policy, a, q))
    }

    fn sqrt_step(&self, pol: Policy, a: &FieldElementK, q: &BigUint) -> Step<Option<FieldElementK>> {
        if self.is_zero(a) {
            return Ok(Some(self.zero()));
        }
        let one = BigUint::one();
        if q.is_even() || q < &BigUint::from(3u32) {
            return Err(KError::NeedOrder("odd field order").into());
        }
        let minus_one = self.neg(&self.one());
        let half = (q - &one) >> 1;
        let euler = self.pow_step(pol, a, &half)?;
        if !self.eq(&euler, &self.one()) {
            return Ok(None);
        }
        if (q % 4u32) == BigUint::from(3u32) {
            let r = self.pow_step(pol, a, &((q + &one) >> 2))?;
            return Ok(Some(r));
        }
        // Tonelli-Shanks with q - 1 = 2^s m
        let mut m = q - &one;
        let mut s = 0u64;
        while m.is_even() {
            m >>= 1;
            s += 1;
        }
        let mut z = None;
        for _ in 0..self.plane.engine().confidence().tries(0.5) {
            let c = self.random_element()?;
            if self.is_zero(&c) {
                continue;
            }
            if self.eq(&self.pow_step(pol, &c, &half)?, &minus_one) {
                z = Some(c);
                break;
            }
        }
        let z = z.ok_or(KError::NoNonSquare)?;
        let mut c = self.pow_step(pol, &z, &m)?;
        let mut t = self.pow_step(pol, a, &m)?;
        let mut r = self.pow_step(pol, a, &((&m + &one) >> 1))?;
        let mut l = s;
        while !self.eq(&t, &self.one()) {
            let mut i = 0;
            let mut tt = t.clone();
            while !self.eq(&tt, &self.one()) {
                tt = self.mul_step(pol, &tt, &tt)?;
                i += 1;
                if i >= l {
                    return Ok(None);
                }
            }
            let mut b = c.clone();
            for _ in 0..(l - i - 1) {
                b = self.mul_step(pol, &b, &b)?;
            }
            c = self.mul_step(pol, &b, &b)?;
            r = self.mul_step(pol, &r, &b)?;
            t = self.mul_step(pol, &t, &c)?;
            l = i;
        }
        Ok(Some(r))
    }

    /// Affine coordinates `(x1, x2)` of a point off the line at infinity,
    /// both returned as elements of `K`.
    pub fn affine_coordinates(&self, p: &PlanePoint) -> Result<SerendipityOutcome<(FieldElementK, FieldElementK)>, KError> {
        finish(self.affine_step(self.policy, p))
    }

    pub fn affine_coordinates_with(
        &self,
        p: &PlanePoint,
        pol: Policy,
    ) -> Result<SerendipityOutcome<(FieldElementK, FieldElementK)>, KError> {
        finish(self.affine_step(pol, p))
    }

    fn affine_step(&self, pol: Policy, p: &PlanePoint) -> Step<(FieldElementK, FieldElementK)> {
        let f = &self.frame;
        let x1 = self.project_onto(pol, p, &reg(&f.e2))?;
        let x2 = self.project_onto(pol, p, &reg(&f.e1))?;
        let x2 = self.conjugate(&FieldElementK(x2), &f.d3);
        Ok((FieldElementK(x1), x2))
    }

    /// Projection from the coordinate point `from` onto its polar line.
    fn project_onto(&self, pol: Policy, p: &PlanePoint, from: &PlanePoint) -> Step<PlanePoint> {
        if let (PlanePoint::Regular(g), PlanePoint::Regular(s)) = (p, from) {
            let x = self.black_box();
            if x.commute(g, s) && !x.eq(g, s) {
                return Ok(p.clone());
            }
        }
        let line = self.perp(pol, p, from)?;
        self.perp(pol, &line, from)
    }

    /// The point `(x1, x2, 1)`.
    pub fn point_from_coordinates(&self, x1: &FieldElementK, x2: &FieldElementK) -> Result<SerendipityOutcome<PlanePoint>, KError> {
        self.point_from_coordinates_with(x1, x2, self.policy)
    }

    pub fn point_from_coordinates_with(
        &self,
        x1: &FieldElementK,
        x2: &FieldElementK,
        pol: Policy,
    ) -> Result<SerendipityOutcome<PlanePoint>, KError> {
        finish(self.point_step(pol, x1, x2))
    }

    fn point_step(&self, pol: Policy, x1: &FieldElementK, x2: &FieldElementK) -> Step<PlanePoint> {
        let f = &self.frame;
        let y = self.conjugate(x2, &f.d3);
        let vertical = self.perp(pol, &x1.0, &reg(&f.e2))?;
        let horizontal = self.perp(pol, &y.0, &reg(&f.e1))?;
        self.perp(pol, &vertical, &horizontal)
    }
}

fn traverse(plane: &Plane, log: &mut Vec<UnipotentWitness>, a: &PlanePoint, b: &PlanePoint) -> Result<PlanePoint, KError> {
    Ok(match plane.perp(a, b)? {
        SerendipityOutcome::Ok(p) => p,
        SerendipityOutcome::Unipotent(w) => {
            let u = w.u.clone();
            log.push(w);
            PlanePoint::Parabolic(u)
        }
    })
}

fn build_scaffold(plane: &Plane, f: &SpinorFrame, log: &mut Vec<UnipotentWitness>) -> Result<Scaffold, KError> {
    let horizontal = traverse(plane, log, &reg(&f.d1), &reg(&f.e1))?;
    let diagonal = traverse(plane, log, &reg(&f.e3), &reg(&f.d3))?;
    let vertical_unit = traverse(plane, log, &reg(&f.d2), &reg(&f.e2))?;
    let diagonal_unit = traverse(plane, log, &diagonal, &vertical_unit)?;
    Ok(Scaffold { horizontal, diagonal, diagonal_unit })
}

/// Residues `0..p` decoded against their images; a desk-scale inverse map.
pub fn residue_table(k: &BlackBoxFieldK, p: u64) -> Result<Vec<FieldElementK>, KError> {
    let mut table = Vec::with_capacity(p as usize);
    let one = k.one();
    let mut acc = k.zero();
    for _ in 0..p {
        table.push(acc.clone());
        acc = match k.add_with(&acc, &one, Policy::Traverse)? {
            SerendipityOutcome::Ok(v) => v,
            SerendipityOutcome::Unipotent(_) => unreachable!("traversal never interrupts"),
        };
    }
    Ok(table)
}

pub fn decode(k: &BlackBoxFieldK, table: &[FieldElementK], a: &FieldElementK) -> Option<u64> {
    table.iter().position(|t| k.eq(t, a)).map(|i| i as u64)
}
