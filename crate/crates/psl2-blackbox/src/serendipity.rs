//! Enforced serendipity: the characteristic `p` and a unipotent element.
//!
//! Walking `1, 1 + 1, 1 + 1 + 1, ...` in `K` either returns to zero after `p`
//! steps or passes through a quadric point, which hands over a unipotent
//! element. Once `p` is known, a point of the quadric is built on purpose.

use crate::arith::{is_prime, trial_factor};
use crate::bbox::{BlackBox, BoxError, GroupElement};
use crate::finite_field::ExplicitField;
use crate::involution::{SerendipityOutcome, UnipotentWitness};
use crate::kfield::{BlackBoxFieldK, FieldElementK, KError, Policy};
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SerendipityError {
    #[error(transparent)]
    K(#[from] KError),
    #[error(transparent)]
    Box(#[from] BoxError),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("the group does not behave like SO3 over a field of characteristic {0}")]
    Anomaly(u64),
    #[error("the additive walk exceeded {0} steps")]
    Exhausted(u64),
}

/// How the quadric point was reached: through `sqrt(-1)` on the axis when
/// `p = 1 mod 4`, through a point `(c, d, 1)` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    OnePath,
    ThreePath,
}

impl Route {
    pub fn for_prime(p: u64) -> Route {
        if p % 4 == 1 {
            Route::OnePath
        } else {
            Route::ThreePath
        }
    }
}

#[derive(Debug, Clone)]
pub struct UnipotentCertificate {
    pub u: GroupElement,
    pub p: u64,
    pub s: GroupElement,
    pub t: GroupElement,
    pub route: Route,
    /// Field additions spent.
    pub steps: u64,
}

impl UnipotentCertificate {
    /// `u != 1`, `u^p = 1` and `p` prime.
    pub fn verify(&self, x: &BlackBox) -> bool {
        is_prime(self.p) && !x.is_identity(&self.u) && x.is_identity(&x.power_u64(&self.u, self.p))
    }
}

/// Default cap on the walk: fields beyond it need a hint.
pub const WALK_LIMIT: u64 = 1 << 24;

pub fn find_characteristic_and_unipotent(k: &BlackBoxFieldK, p_hint: Option<u64>) -> Result<UnipotentCertificate, SerendipityError> {
    find_with_limit(k, p_hint, WALK_LIMIT)
}

pub fn find_with_limit(k: &BlackBoxFieldK, p_hint: Option<u64>, limit: u64) -> Result<UnipotentCertificate, SerendipityError> {
    let start = k.additions();
    if let Some(p) = p_hint {
        if !is_prime(p) || p == 2 {
            return Err(SerendipityError::NotPrime(p));
        }
        return known_characteristic(k, p, start);
    }
    let x = k.black_box();
    let one = k.one();
    let mut acc = one.clone();
    let mut c = 1u64;
    while c <= limit {
        let next = match k.add_with(&acc, &one, Policy::Report)? {
            SerendipityOutcome::Ok(v) => v,
            SerendipityOutcome::Unipotent(w) => {
                if let Some(p) = characteristic_from_event(x, &w.u, c) {
                    return certify(k, w, p, start);
                }
                traversed(k.add_with(&acc, &one, Policy::Traverse)?)
            }
        };
        acc = next;
        c += 1;
        if k.is_zero(&acc) {
            if !is_prime(c) {
                return Err(SerendipityError::NotPrime(c));
            }
            return known_characteristic(k, c, start);
        }
    }
    Err(SerendipityError::Exhausted(limit))
}

fn traversed(r: SerendipityOutcome<FieldElementK>) -> FieldElementK {
    match r {
        SerendipityOutcome::Ok(v) => v,
        SerendipityOutcome::Unipotent(_) => unreachable!("traversal never interrupts"),
    }
}

/// The quadric points met while adding one to `a`: `(1,0,-a)`, `(a,1,1)`,
/// `(1,1,-1)`, `(1,1,-a-1)`, `(a+1,0,1)`. `p` divides the matching norm.
fn characteristic_from_event(x: &BlackBox, u: &GroupElement, a: u64) -> Option<u64> {
    let a = a as u128;
    let norms = [a * a + 1, a * a + 2, 3, (a + 1) * (a + 1) + 2, (a + 1) * (a + 1) + 1];
    for n in norms {
        let Ok(n) = u64::try_from(n) else { continue };
        if !x.is_identity(&x.power_u64(u, n)) {
            continue;
        }
        for f in trial_factor(n) {
            if is_prime(f) && x.is_identity(&x.power_u64(u, f)) {
                return Some(f);
            }
        }
    }
    None
}

fn certify(k: &BlackBoxFieldK, w: UnipotentWitness, p: u64, start: u64) -> Result<UnipotentCertificate, SerendipityError> {
    let cert = UnipotentCertificate {
        u: w.u,
        p,
        s: w.s,
        t: w.t,
        route: Route::for_prime(p),
        steps: k.additions() - start,
    };
    if !cert.verify(k.black_box()) {
        return Err(SerendipityError::Anomaly(p));
    }
    Ok(cert)
}

/// Builds a quadric point over the prime field of characteristic `p`.
fn known_characteristic(k: &BlackBoxFieldK, p: u64, start: u64) -> Result<UnipotentCertificate, SerendipityError> {
    let f = ExplicitField::prime(p).map_err(|_| SerendipityError::NotPrime(p))?;
    let coord = |v: &crate::finite_field::FieldValue| BigUint::from(v.coeffs()[0]);
    let outcome = if p % 4 == 1 {
        let c = f.sqrt(&f.from_i64(-1)).ok_or(SerendipityError::Anomaly(p))?;
        k.residue_image_with(&coord(&c), Policy::Report)?.map_unit()
    } else {
        let (c, d) = (0..p)
            .find_map(|c| {
                let c = f.from_u64(c);
                let rest = f.sub(&f.neg(&f.one()), &f.mul(&c, &c));
                f.sqrt(&rest).map(|d| (c, d))
            })
            .ok_or(SerendipityError::Anomaly(p))?;
        match k.residue_image_with(&coord(&c), Policy::Report)? {
            SerendipityOutcome::Unipotent(w) => SerendipityOutcome::Unipotent(w),
            SerendipityOutcome::Ok(xc) => match k.residue_image_with(&coord(&d), Policy::Report)? {
                SerendipityOutcome::Unipotent(w) => SerendipityOutcome::Unipotent(w),
                SerendipityOutcome::Ok(xd) => k.point_from_coordinates_with(&xc, &xd, Policy::Report)?.map_unit(),
            },
        }
    };
    match outcome {
        SerendipityOutcome::Unipotent(w) => certify(k, w, p, start),
        SerendipityOutcome::Ok(()) => Err(SerendipityError::Anomaly(p)),
    }
}

impl<T> SerendipityOutcome<T> {
    fn map_unit(self) -> SerendipityOutcome<()> {
        match self {
            SerendipityOutcome::Ok(_) => SerendipityOutcome::Ok(()),
            SerendipityOutcome::Unipotent(w) => SerendipityOutcome::Unipotent(w),
        }
    }
}

/// The unipotent radical through `u`: `<u^tau>` over the torus of the witness `s`.
pub fn unipotent_subgroup(x: &BlackBox, cert: &UnipotentCertificate, torus_gens: &[GroupElement]) -> Result<BlackBox, BoxError> {
    let mut gens = vec![cert.u.clone()];
    gens.extend(torus_gens.iter().map(|tau| x.conj(&cert.u, tau)));
    x.subgroup(&gens)
}
