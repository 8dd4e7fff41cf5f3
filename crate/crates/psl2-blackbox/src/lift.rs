//! Extension of a box encrypting `PSL2(q)`, `q` odd, to one encrypting
//! `PGL2(q) = SO3(q)`, by adjoining an outer diagonal involution `delta`.
//!
//! `delta` is described by its action on two tori: it inverts the torus `T`
//! through an involution `u` and centralizes `S = <z>` for `z = u u^y` of odd
//! order. Augmenting `Y` by that description gives `X = Y : <delta>`, stored
//! as pairs `((a, a^delta), flag)`.

use crate::bbox::{BlackBox, BoxError, GroupElement};
use crate::involution::{
    augment_by_proto, centralizer_samples, find_involution, proto_from_local, zeta, Augmented, Confidence,
    InvolutionError, LocalPart, Proto,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LiftError {
    #[error(transparent)]
    Involution(#[from] InvolutionError),
    #[error(transparent)]
    Box(#[from] BoxError),
    #[error("no outer involution found within budget ({0})")]
    Exhausted(&'static str),
    #[error("element does not lie in the lifted box")]
    Foreign,
}

const TORUS_GENS: usize = 3;
const CHECK_SAMPLES: usize = 32;

/// `Y` together with `X = Y : <delta>`.
#[derive(Debug, Clone)]
pub struct LiftedBox {
    y: BlackBox,
    aug: Augmented,
    delta: GroupElement,
    proto: Proto,
}

impl LiftedBox {
    pub fn base(&self) -> &BlackBox {
        &self.y
    }

    pub fn black_box(&self) -> &BlackBox {
        &self.aug.semidirect.whole
    }

    pub fn delta(&self) -> &GroupElement {
        &self.delta
    }

    /// Generating pairs `(g, g^delta)` of the graph.
    pub fn proto(&self) -> &Proto {
        &self.proto
    }

    /// A random `Y`-element with its image under `delta`.
    pub fn sample_pair(&self) -> (GroupElement, GroupElement) {
        self.aug.graph.split(&self.aug.graph.whole.random())
    }

    /// The `X`-string of `a`, given `b = a^delta`.
    pub fn embed_pair(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        self.aug.embed_pair(a, b)
    }

    /// `X`-strings of `Y`-elements known through a word in the generating pairs.
    pub fn embed_word(&self, word: &[(usize, bool)]) -> Result<GroupElement, LiftError> {
        let x = self.black_box();
        let mut acc = x.identity();
        for &(i, inverse) in word {
            let (a, b) = self.proto.pairs.get(i).ok_or(LiftError::Foreign)?;
            let g = self.embed_pair(a, b);
            acc = x.mul(&acc, &if inverse { x.inv(&g) } else { g });
        }
        Ok(acc)
    }

    /// The `Y`-element under an element of `X` outside the `delta`-coset.
    pub fn project(&self, g: &GroupElement) -> Option<GroupElement> {
        self.aug.project(g)
    }
}

/// Lifts `Y`, which must encrypt `PSL2(q)` for odd `q > 3`.
pub fn lift_psl2_to_so3(y: &BlackBox, conf: Confidence) -> Result<LiftedBox, LiftError> {
    for _ in 0..conf.tries(0.2) {
        let u = find_involution(y, conf)?;
        let Some(proto) = outer_proto(y, &u, conf)? else { continue };
        let aug = augment_by_proto(y, &proto)?;
        if !is_outer(y, &aug) || !raises_two_height(y, &aug) || !generates(y, &aug) {
            continue;
        }
        let delta = aug.swap();
        return Ok(LiftedBox { y: y.clone(), aug, delta, proto });
    }
    Err(LiftError::Exhausted("lift"))
}

/// The description of an outer involution commuting with `u`, or `None` when
/// the random choices were unlucky.
fn outer_proto(y: &BlackBox, u: &GroupElement, conf: Confidence) -> Result<Option<Proto>, LiftError> {
    let samples = centralizer_samples(y, u, 4 * conf.tries(0.25));
    let torus: Vec<GroupElement> = samples
        .iter()
        .filter(|c| !y.is_identity(&y.square(c)) && y.commute(c, u))
        .take(TORUS_GENS)
        .cloned()
        .collect();
    let z = {
        let yy = y.random();
        let z = y.mul(u, &y.conj(u, &yy));
        if y.has_even_order(&z) || y.is_identity(&z) {
            return Ok(None);
        }
        z
    };
    match torus.first() {
        Some(tau) => {
            // u inverts z; z commutes with z^tau exactly when z is unipotent
            if y.commute(&z, &y.conj(&z, tau)) {
                return Ok(None);
            }
            let mut inv = torus.clone();
            inv.push(u.clone());
            Ok(Some(proto_from_local(y, &[LocalPart::Invert(inv), LocalPart::Fix(vec![z])])))
        }
        None => {
            // C(u) is a four-group: q = 5, S has order 3, and delta maps a
            // reflection w of C(u) to u w
            if !y.is_identity(&y.power_u64(&z, 3)) {
                return Ok(None);
            }
            let Some(w) = samples.iter().find(|c| y.is_involution(c) && !y.eq(c, u)) else {
                return Ok(None);
            };
            let uw = y.mul(u, w);
            Ok(Some(proto_from_local(
                y,
                &[LocalPart::Fix(vec![z, u.clone()]), LocalPart::Map(vec![(w.clone(), uw)])],
            )))
        }
    }
}

/// An inner involution has elements of even order above 2 in its centralizer.
fn is_outer(y: &BlackBox, aug: &Augmented) -> bool {
    (0..CHECK_SAMPLES).all(|_| {
        let (a, b) = aug.graph.split(&aug.graph.whole.random());
        let c = zeta(y, &a, &b);
        !y.has_even_order(&c) || y.is_involution(&c)
    })
}

/// The outer coset of `PGL2(q)` reaches a 2-height one above every element
/// of `PSL2(q)`, while `Y x C2` does not. This catches an inner `delta` whose
/// centralizer samples all miss the elements of even order above 2.
fn raises_two_height(y: &BlackBox, aug: &Augmented) -> bool {
    let top = (0..2 * CHECK_SAMPLES).map(|_| y.two_height(&y.random())).max().unwrap_or(0);
    let x = &aug.semidirect.whole;
    (0..4 * CHECK_SAMPLES).any(|_| x.two_height(&x.random()) > top)
}

/// Monte-Carlo check that the graph covers `Y`: its first coordinates reach
/// the largest 2-height seen in `Y`.
fn generates(y: &BlackBox, aug: &Augmented) -> bool {
    let top = (0..CHECK_SAMPLES).map(|_| y.two_height(&y.random())).max().unwrap_or(0);
    (0..4 * CHECK_SAMPLES).any(|_| y.two_height(&aug.graph.left_of(&aug.graph.whole.random())) >= top)
}
