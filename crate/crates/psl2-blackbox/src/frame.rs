//! A `Sym4` subgroup of `SO3(q)` and the coordinate frame it carries.
//!
//! `e1, e2, e3` are commuting involutions whose tori have order divisible by
//! 4, `theta` of order 3 cycles them, `d1` swaps `e2` and `e3` and inverts
//! `theta`. In coordinates `e1 = (1,0,0)`, `e2 = (0,1,0)`, `e3 = (0,0,1)`,
//! `d1 = (0,1,1)`, `d2 = (1,0,1)`, `d3 = (1,-1,0)`.

use crate::bbox::{BlackBox, BoxError, GroupElement};
use crate::involution::{centralizer_samples, find_involution, Confidence, InvolutionError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrameError {
    #[error(transparent)]
    Involution(#[from] InvolutionError),
    #[error(transparent)]
    Box(#[from] BoxError),
    #[error("search exhausted its budget: {0}")]
    Exhausted(&'static str),
    #[error("frame relation fails: {0}")]
    Relation(&'static str),
}

/// Samples drawn from `C(i)` when hunting for an element of order 4.
const RIGHT_TYPE_SAMPLES: usize = 32;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpinorFrame {
    pub e1: GroupElement,
    pub e2: GroupElement,
    pub e3: GroupElement,
    pub theta: GroupElement,
    pub d1: GroupElement,
    pub d2: GroupElement,
    pub d3: GroupElement,
    /// Order 4 in the torus of `e1`, squaring to `e1`.
    pub s4: GroupElement,
    /// The 24 elements of the `Sym4` subgroup.
    pub h: Vec<GroupElement>,
}

/// An element of order 4 in `C(i)`, witnessing that the torus of `i` has order divisible by 4.
pub fn order_four_in_centralizer(x: &BlackBox, i: &GroupElement, samples: usize) -> Option<GroupElement> {
    for c in centralizer_samples(x, i, samples) {
        let l = x.two_height(&c);
        if l >= 2 {
            let mut y = x.two_part(&c);
            for _ in 0..l - 2 {
                y = x.square(&y);
            }
            return Some(y);
        }
    }
    None
}

/// Monte-Carlo: `false` may be wrong with probability `(3/4)^samples`.
pub fn is_right_type(x: &BlackBox, i: &GroupElement) -> bool {
    order_four_in_centralizer(x, i, RIGHT_TYPE_SAMPLES).is_some()
}

/// One attempt at an element of order 3 cycling `i -> k -> j -> i`.
///
/// `first_odd` and `second_odd` record whether `h1 = i j^g` and `h2 = j s`
/// have odd order. `h2` lies in the torus of `i`, so it is odd only when it
/// falls in the odd part of that torus; with `sylow` (a generator of the
/// torus's Sylow 2-subgroup) an even `h2` is still usable when it is a square.
#[derive(Debug, Clone)]
pub struct CyclingAttempt {
    pub first_odd: bool,
    pub second_odd: bool,
    pub element: Option<GroupElement>,
}

pub fn cycling_attempt(
    x: &BlackBox,
    i: &GroupElement,
    j: &GroupElement,
    k: &GroupElement,
    g: &GroupElement,
    sylow: Option<&GroupElement>,
) -> CyclingAttempt {
    let h1 = x.mul(i, &x.conj(j, g));
    let Ok(n1) = x.odd_sqrt(&h1) else {
        return CyclingAttempt { first_odd: false, second_odd: false, element: None };
    };
    let gn = x.mul(g, &x.inv(&n1));
    let s = x.conj(k, &gn);
    let h2 = x.mul(j, &s);
    let (second_odd, n2) = match x.odd_sqrt(&h2) {
        Ok(n2) => (true, Some(n2)),
        Err(_) => (false, sylow.and_then(|t| torus_sqrt(x, t, &h2))),
    };
    let Some(n2) = n2 else {
        return CyclingAttempt { first_odd: true, second_odd, element: None };
    };
    let t = x.mul(&gn, &x.inv(&n2));
    let ok = x.eq(&x.conj(i, &t), k) && x.eq(&x.conj(k, &t), j) && x.eq(&x.conj(j, &t), i);
    CyclingAttempt { first_odd: true, second_odd, element: ok.then_some(t) }
}

/// A square root of the torus element `z`: the odd part by powering, the
/// 2-part by Tonelli-Shanks in `<sylow>`.
fn torus_sqrt(x: &BlackBox, sylow: &GroupElement, z: &GroupElement) -> Option<GroupElement> {
    let two = x.two_part(z);
    let odd = x.odd_sqrt(&x.mul(z, &x.inv(&two))).ok()?;
    let r = x.mul(&odd, &x.cyclic_sqrt(sylow, &two)?);
    x.eq(&x.square(&r), z).then_some(r)
}

/// The 2-part of largest 2-height among torus samples of `i`.
fn torus_sylow(x: &BlackBox, i: &GroupElement, samples: usize) -> Option<GroupElement> {
    centralizer_samples(x, i, samples)
        .into_iter()
        .filter(|c| !x.is_identity(&x.square(c)) && x.commute(c, i))
        .map(|c| x.two_part(&c))
        .max_by_key(|t| x.two_height(t))
}

/// A right-type involution together with an order-4 element of its torus.
fn right_type_involution(x: &BlackBox, conf: Confidence) -> Result<(GroupElement, GroupElement), FrameError> {
    for _ in 0..conf.tries(0.4) {
        let i = find_involution(x, conf)?;
        if let Some(s) = order_four_in_centralizer(x, &i, RIGHT_TYPE_SAMPLES) {
            return Ok((i, s));
        }
    }
    Err(FrameError::Exhausted("right-type involution"))
}

/// Elements of the subgroup generated by `gens`, for small subgroups.
pub fn closure(x: &BlackBox, gens: &[GroupElement], limit: usize) -> Option<Vec<GroupElement>> {
    let mut elems = vec![x.identity()];
    let mut frontier = 0;
    while frontier < elems.len() {
        let g = elems[frontier].clone();
        frontier += 1;
        for s in gens {
            let h = x.mul(&g, s);
            if !elems.iter().any(|e| x.eq(e, &h)) {
                if elems.len() == limit {
                    return None;
                }
                elems.push(h);
            }
        }
    }
    Some(elems)
}

pub fn build_sym4(x: &BlackBox, conf: Confidence) -> Result<SpinorFrame, FrameError> {
    let (i, s4) = right_type_involution(x, conf)?;
    let j = {
        let mut found = None;
        'search: for _ in 0..conf.tries(0.1) {
            for c in centralizer_samples(x, &i, 8) {
                // the four-group {1, i, j, ij} lies in a Sym4 only if ij is right-type too
                if x.is_involution(&c) && !x.eq(&c, &i) && is_right_type(x, &c) && is_right_type(x, &x.mul(&i, &c)) {
                    found = Some(c);
                    break 'search;
                }
            }
        }
        found.ok_or(FrameError::Exhausted("second right-type involution"))?
    };
    let k = x.mul(&i, &j);
    let sylow = torus_sylow(x, &i, 4 * RIGHT_TYPE_SAMPLES).unwrap_or_else(|| s4.clone());
    let theta = {
        let mut found = None;
        for _ in 0..conf.tries(0.2) {
            if let Some(t) = cycling_attempt(x, &i, &j, &k, &x.random(), Some(&sylow)).element {
                found = Some(t);
                break;
            }
        }
        found.ok_or(FrameError::Exhausted("element of order 3"))?
    };
    let (e1, e2, e3) = (i, k, j);
    let h = closure(x, &[theta.clone(), s4.clone(), e1.clone(), e2.clone()], 24)
        .ok_or(FrameError::Relation("generated subgroup exceeds 24 elements"))?;
    let theta_inv = x.inv(&theta);
    let d1 = h
        .iter()
        .find(|d| x.is_involution(d) && x.commute(d, &e1) && x.eq(&x.conj_by_involution(&theta, d), &theta_inv))
        .cloned()
        .ok_or(FrameError::Relation("no involution inverting theta commutes with e1"))?;
    let d2 = x.conj(&d1, &theta);
    let d3 = x.conj(&d2, &theta);
    let frame = SpinorFrame { e1, e2, e3, theta, d1, d2, d3, s4, h };
    frame.check(x)?;
    Ok(frame)
}

/// Permutations of `{0,1,2,3}` composed left to right.
pub type Perm = [u8; 4];

pub fn compose(a: &Perm, b: &Perm) -> Perm {
    [b[a[0] as usize], b[a[1] as usize], b[a[2] as usize], b[a[3] as usize]]
}

pub const THETA_PERM: Perm = [0, 2, 3, 1];
pub const D1_PERM: Perm = [0, 1, 3, 2];
pub const E1_PERM: Perm = [1, 0, 3, 2];
pub const E2_PERM: Perm = [2, 3, 0, 1];

impl SpinorFrame {
    /// Re-attaches the stored strings to a box rebuilt from the same data.
    pub fn adopt(&self, x: &BlackBox) -> Result<SpinorFrame, FrameError> {
        let a = |g: &GroupElement| x.adopt(g.payload().to_vec());
        Ok(SpinorFrame {
            e1: a(&self.e1)?,
            e2: a(&self.e2)?,
            e3: a(&self.e3)?,
            theta: a(&self.theta)?,
            d1: a(&self.d1)?,
            d2: a(&self.d2)?,
            d3: a(&self.d3)?,
            s4: a(&self.s4)?,
            h: self.h.iter().map(a).collect::<Result<_, _>>()?,
        })
    }

    /// Every defining relation as a group equation.
    pub fn check(&self, x: &BlackBox) -> Result<(), FrameError> {
        let rel = |ok: bool, what: &'static str| if ok { Ok(()) } else { Err(FrameError::Relation(what)) };
        let (e1, e2, e3) = (&self.e1, &self.e2, &self.e3);
        rel([e1, e2, e3].iter().all(|e| x.is_involution(e)), "e_i are involutions")?;
        rel(x.commute(e1, e2) && x.eq(&x.mul(e1, e2), e3), "e1 e2 = e3")?;
        rel(x.is_identity(&x.power_u64(&self.theta, 3)) && !x.is_identity(&self.theta), "theta has order 3")?;
        rel(x.eq(&x.conj(e1, &self.theta), e2) && x.eq(&x.conj(e2, &self.theta), e3), "theta cycles e1, e2, e3")?;
        rel(x.is_involution(&self.d1) && x.commute(&self.d1, e1), "d1 commutes with e1")?;
        rel(x.eq(&x.conj(e2, &self.d1), e3), "d1 swaps e2 and e3")?;
        rel(x.eq(&x.conj(&self.d2, &self.d3), &self.d1), "d2^d3 = d1")?;
        rel(x.eq(&x.conj(e1, &self.d3), e2), "e1^d3 = e2")?;
        rel(x.eq(&x.square(&self.s4), e1), "s4 squares to e1")?;
        rel(self.h.len() == 24, "H has 24 elements")?;
        Ok(())
    }

    /// Images in `Sym4` of the elements of `<theta, d1, e1, e2>`, or the
    /// first inconsistency found.
    pub fn sym4_images(&self, x: &BlackBox) -> Result<Vec<(GroupElement, Perm)>, FrameError> {
        let gens = [
            (self.theta.clone(), THETA_PERM),
            (self.d1.clone(), D1_PERM),
            (self.e1.clone(), E1_PERM),
            (self.e2.clone(), E2_PERM),
        ];
        let mut elems: Vec<(GroupElement, Perm)> = vec![(x.identity(), [0, 1, 2, 3])];
        let mut frontier = 0;
        while frontier < elems.len() {
            let (g, pg) = elems[frontier].clone();
            frontier += 1;
            for (s, ps) in &gens {
                let h = x.mul(&g, s);
                let ph = compose(&pg, ps);
                match elems.iter().find(|(e, _)| x.eq(e, &h)) {
                    Some((_, pe)) if *pe != ph => return Err(FrameError::Relation("map to Sym4 is not well defined")),
                    Some(_) => {}
                    None => {
                        if elems.len() == 24 {
                            return Err(FrameError::Relation("generated subgroup exceeds 24 elements"));
                        }
                        elems.push((h, ph));
                    }
                }
            }
        }
        Ok(elems)
    }
}
