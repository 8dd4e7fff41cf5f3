//! The projective plane of the adjoint module, seen through involutions.
//!
//! Regular points are the involutions of `X`. Points on the quadric are
//! represented by a nontrivial element of their unipotent radical. A line is
//! stored by its pole, so join and meet are the same operation: the point
//! perpendicular to two given points.

use crate::bbox::{BlackBox, GroupElement};
use crate::involution::{
    proto_from_local, Confidence, Engine, InvolutionError, LocalPart, SerendipityOutcome, UnipotentWitness,
};

/// An involution with its torus and a reflection inverting the torus.
#[derive(Debug, Clone)]
pub struct InvolutionPoint {
    pub s: GroupElement,
    pub torus_gens: Vec<GroupElement>,
    pub w: GroupElement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineKind {
    Toric,
    Parabolic,
}

/// A line: its pole, the group whose orbit of `flip` gives the involutions on it.
#[derive(Debug, Clone)]
pub struct PlaneLine {
    pub kind: LineKind,
    pub pole: PlanePoint,
    pub group_gens: Vec<GroupElement>,
    pub flip: GroupElement,
}

/// A point of the plane: an involution, or a quadric point given by a unipotent element.
#[derive(Debug, Clone)]
pub enum PlanePoint {
    Regular(GroupElement),
    Parabolic(GroupElement),
}

impl PlanePoint {
    pub fn element(&self) -> &GroupElement {
        match self {
            PlanePoint::Regular(g) | PlanePoint::Parabolic(g) => g,
        }
    }

    pub fn regular(&self) -> Option<&GroupElement> {
        match self {
            PlanePoint::Regular(g) => Some(g),
            PlanePoint::Parabolic(_) => None,
        }
    }
}

/// Plane operations over a box encrypting `SO3(q)`.
#[derive(Debug)]
pub struct Plane {
    engine: Engine,
}

impl Plane {
    pub fn new(x: BlackBox, conf: Confidence) -> Result<Self, InvolutionError> {
        Ok(Plane { engine: Engine::new(x, conf)? })
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn black_box(&self) -> &BlackBox {
        self.engine.black_box()
    }

    pub fn point_of(&self, s: &GroupElement) -> Result<InvolutionPoint, InvolutionError> {
        if !self.black_box().is_involution(s) {
            return Err(InvolutionError::NotInvolution);
        }
        let d = self.engine.point_data(s)?;
        Ok(InvolutionPoint { s: s.clone(), torus_gens: d.torus.clone(), w: d.reflection.clone() })
    }

    /// Three distinct involutions are collinear iff their product is an involution.
    pub fn collinear(&self, r: &GroupElement, s: &GroupElement, t: &GroupElement) -> bool {
        let x = self.black_box();
        x.is_involution(&x.mul(&x.mul(r, s), t))
    }

    /// Whether the involution `i` lies on `line`.
    pub fn on_line(&self, i: &GroupElement, line: &PlaneLine) -> bool {
        let x = self.black_box();
        match &line.pole {
            PlanePoint::Regular(j) => x.is_involution(i) && !x.eq(i, j) && x.commute(i, j),
            PlanePoint::Parabolic(u) => x.is_involution(i) && x.eq(&x.conj_by_involution(u, i), &x.inv(u)),
        }
    }

    pub fn join(&self, s: &GroupElement, t: &GroupElement) -> Result<PlaneLine, InvolutionError> {
        let x = self.black_box();
        match self.engine.j_of(s, t)? {
            SerendipityOutcome::Ok(j) => {
                let d = self.engine.point_data(&j)?;
                Ok(PlaneLine { kind: LineKind::Toric, pole: PlanePoint::Regular(j), group_gens: d.torus.clone(), flip: s.clone() })
            }
            SerendipityOutcome::Unipotent(w) => {
                let d = self.engine.point_data(s)?;
                let mut gens = vec![w.u.clone()];
                gens.extend(d.torus.iter().map(|tau| x.conj(&w.u, tau)));
                Ok(PlaneLine { kind: LineKind::Parabolic, pole: PlanePoint::Parabolic(w.u), group_gens: gens, flip: t.clone() })
            }
        }
    }

    /// The common involution of two toric lines; `Unipotent` when they meet on the quadric.
    pub fn meet(&self, k: &PlaneLine, l: &PlaneLine) -> Result<SerendipityOutcome<GroupElement>, InvolutionError> {
        match (&k.pole, &l.pole) {
            (PlanePoint::Regular(a), PlanePoint::Regular(b)) => self.engine.j_of(a, b),
            _ => match self.perp(&k.pole, &l.pole)? {
                SerendipityOutcome::Ok(PlanePoint::Regular(g)) => Ok(SerendipityOutcome::Ok(g)),
                SerendipityOutcome::Ok(PlanePoint::Parabolic(u)) => Ok(SerendipityOutcome::Unipotent(UnipotentWitness {
                    u,
                    s: k.flip.clone(),
                    t: l.flip.clone(),
                })),
                other => Ok(other.map_point()),
            },
        }
    }

    /// The pole of a line through two involutions.
    pub fn pole(&self, k: &PlaneLine) -> SerendipityOutcome<GroupElement> {
        match &k.pole {
            PlanePoint::Regular(j) => SerendipityOutcome::Ok(j.clone()),
            PlanePoint::Parabolic(u) => {
                let x = self.black_box();
                let s = x.mul(u, &k.flip);
                SerendipityOutcome::Unipotent(UnipotentWitness { u: u.clone(), s, t: k.flip.clone() })
            }
        }
    }

    /// Central projection of `x` from `s` onto the polar line of `s`.
    pub fn polar_project(&self, s: &GroupElement, x: &GroupElement) -> Result<SerendipityOutcome<GroupElement>, InvolutionError> {
        let b = self.black_box();
        if b.commute(s, x) {
            return Ok(SerendipityOutcome::Ok(x.clone()));
        }
        match self.engine.j_of(x, s)? {
            SerendipityOutcome::Ok(j) => self.engine.j_of(&j, s),
            u => Ok(u),
        }
    }

    pub fn same_point(&self, a: &PlanePoint, b: &PlanePoint) -> bool {
        let x = self.black_box();
        match (a, b) {
            (PlanePoint::Regular(s), PlanePoint::Regular(t)) => x.eq(s, t),
            (PlanePoint::Parabolic(u), PlanePoint::Parabolic(v)) => x.commute(u, v),
            _ => false,
        }
    }

    /// The point perpendicular to two distinct points: the pole of their
    /// join, equivalently the meet of their polars.
    pub fn perp(&self, a: &PlanePoint, b: &PlanePoint) -> Result<SerendipityOutcome<PlanePoint>, InvolutionError> {
        match (a, b) {
            (PlanePoint::Regular(s), PlanePoint::Regular(t)) => Ok(match self.engine.j_of(s, t)? {
                SerendipityOutcome::Ok(j) => SerendipityOutcome::Ok(PlanePoint::Regular(j)),
                SerendipityOutcome::Unipotent(w) => SerendipityOutcome::Unipotent(w),
            }),
            (PlanePoint::Regular(s), PlanePoint::Parabolic(u)) | (PlanePoint::Parabolic(u), PlanePoint::Regular(s)) => {
                self.perp_regular_parabolic(s, u).map(|p| SerendipityOutcome::Ok(p))
            }
            (PlanePoint::Parabolic(u), PlanePoint::Parabolic(v)) => {
                self.perp_parabolic(u, v).map(|j| SerendipityOutcome::Ok(PlanePoint::Regular(j)))
            }
        }
    }

    fn inverts(&self, i: &GroupElement, u: &GroupElement) -> bool {
        let x = self.black_box();
        x.eq(&x.conj_by_involution(u, i), &x.inv(u))
    }

    fn perp_regular_parabolic(&self, s: &GroupElement, u: &GroupElement) -> Result<PlanePoint, InvolutionError> {
        let x = self.black_box();
        // s on the tangent at the quadric point: the join is that tangent
        if self.inverts(s, u) {
            return Ok(PlanePoint::Parabolic(u.clone()));
        }
        let d = self.engine.point_data(s)?;
        let mut inv = d.torus.clone();
        inv.push(u.clone());
        let proto = proto_from_local(x, &[LocalPart::Invert(inv)]);
        if let Ok(j) = self.engine.reify(&proto) {
            return Ok(PlanePoint::Regular(j));
        }
        for _ in 0..self.engine.confidence().tries(0.05) {
            for c in self.engine.centralizer_samples(s, 8) {
                if x.is_involution(&c) && !x.eq(&c, s) && self.inverts(&c, u) {
                    return Ok(PlanePoint::Regular(c));
                }
            }
        }
        Err(InvolutionError::Exhausted("perpendicular of a point and a quadric point"))
    }

    fn perp_parabolic(&self, u: &GroupElement, v: &GroupElement) -> Result<GroupElement, InvolutionError> {
        let x = self.black_box();
        if x.commute(u, v) {
            return Err(InvolutionError::Coincident);
        }
        let proto = proto_from_local(x, &[LocalPart::Invert(vec![u.clone(), v.clone()])]);
        if let Ok(j) = self.engine.reify(&proto) {
            return Ok(j);
        }
        // two involutions of C(j) determine j
        let graph = self.engine.graph(&proto)?;
        let mut found: Vec<GroupElement> = Vec::new();
        for _ in 0..self.engine.confidence().tries(0.1) {
            let (a, b) = graph.split(&graph.whole.random());
            let c = self.engine.zeta(&a, &b);
            if !x.is_involution(&c) || found.iter().any(|f| x.eq(f, &c)) {
                continue;
            }
            for f in &found {
                if let SerendipityOutcome::Ok(j) = self.engine.j_of(f, &c)? {
                    if self.inverts(&j, u) && self.inverts(&j, v) {
                        return Ok(j);
                    }
                }
            }
            found.push(c);
        }
        Err(InvolutionError::Exhausted("perpendicular of two quadric points"))
    }
}

impl SerendipityOutcome<PlanePoint> {
    fn map_point(self) -> SerendipityOutcome<GroupElement> {
        match self {
            SerendipityOutcome::Ok(p) => SerendipityOutcome::Ok(p.element().clone()),
            SerendipityOutcome::Unipotent(w) => SerendipityOutcome::Unipotent(w),
        }
    }
}
