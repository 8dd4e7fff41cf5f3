//! End-to-end runs from a group description, and the JSON forms they exchange.

use crate::bbox::{BlackBox, BoxError, GroupElement};
use crate::finite_field::{ExplicitField, FieldSpec};
use crate::frame::{build_sym4, FrameError, SpinorFrame};
use crate::involution::{Confidence, InvolutionError};
use crate::kfield::{BlackBoxFieldK, FieldElementK, KError, Policy};
use crate::lift::{lift_psl2_to_so3, LiftError, LiftedBox};
use crate::morphism::{Matrix3K, MorphismError};
use crate::oracle::{Encoding, MatrixKind, MatrixOracle, OracleError};
use crate::plane::PlanePoint;
use crate::serendipity::{find_characteristic_and_unipotent, Route, SerendipityError, UnipotentCertificate};
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid group spec: {0}")]
    Spec(String),
    #[error("odd characteristic required")]
    EvenCharacteristic,
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Box(#[from] BoxError),
    #[error(transparent)]
    Involution(#[from] InvolutionError),
    #[error(transparent)]
    Lift(#[from] LiftError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    K(#[from] KError),
    #[error(transparent)]
    Serendipity(#[from] SerendipityError),
    #[error(transparent)]
    Morphism(#[from] MorphismError),
    #[error("certificate failed verification")]
    Unverified,
    #[error("{0}")]
    Unsupported(&'static str),
}

impl PipelineError {
    /// Whether the failure is a spent Monte-Carlo budget rather than bad input.
    pub fn is_exhaustion(&self) -> bool {
        use InvolutionError as I;
        let inv = |e: &I| matches!(e, I::Exhausted(_) | I::Box(BoxError::Exhausted(_)));
        match self {
            PipelineError::Involution(e) => inv(e),
            PipelineError::Box(BoxError::Exhausted(_)) => true,
            PipelineError::Lift(LiftError::Exhausted(_)) => true,
            PipelineError::Lift(LiftError::Involution(e)) => inv(e),
            PipelineError::Frame(FrameError::Exhausted(_)) => true,
            PipelineError::Frame(FrameError::Involution(e)) => inv(e),
            PipelineError::K(KError::Involution(e)) => inv(e),
            PipelineError::Serendipity(SerendipityError::Exhausted(_)) => true,
            PipelineError::Serendipity(SerendipityError::K(KError::Involution(e))) => inv(e),
            _ => false,
        }
    }
}

/// `{"type": "PSL2"|"PGL2", "field": {..}, "E": "<decimal>", "seed": <int>}`.
/// `E` defaults to `q(q^2 - 1)` and `seed` to 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    #[serde(rename = "type")]
    pub kind: MatrixKind,
    pub field: FieldSpec,
    #[serde(rename = "E", default)]
    pub exponent: String,
    #[serde(default)]
    pub seed: u64,
}

impl GroupSpec {
    /// The spec of `kind` over `field` with exponent `q(q^2 - 1)`.
    pub fn new(kind: MatrixKind, field: &ExplicitField, seed: u64) -> GroupSpec {
        let q = field.order();
        GroupSpec { kind, field: field.spec(), exponent: (q * (q * q - 1u32)).to_string(), seed }
    }

    pub fn from_json(text: &str) -> Result<GroupSpec, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Spec(e.to_string()))
    }

    pub fn oracle(&self) -> Result<MatrixOracle, PipelineError> {
        let field = ExplicitField::from_spec(&self.field).map_err(|e| PipelineError::Spec(e.to_string()))?;
        if self.exponent.is_empty() {
            return Ok(MatrixOracle::new(field, self.kind, Encoding::Canonical, self.seed)?);
        }
        let exponent: BigUint = self.exponent.parse().map_err(|_| PipelineError::Spec(format!("bad exponent {:?}", self.exponent)))?;
        Ok(MatrixOracle::with_exponent(field, self.kind, Encoding::Canonical, exponent, self.seed)?)
    }
}

/// A 2x2 matrix as `[[a, b], [c, d]]`, each entry a coefficient array.
pub type ElementWire = [[Vec<u64>; 2]; 2];

pub fn element_to_wire(o: &MatrixOracle, g: &GroupElement) -> ElementWire {
    let m = o.to_matrix(g);
    let c = |i: usize| m[i].coeffs().to_vec();
    [[c(0), c(1)], [c(2), c(3)]]
}

pub fn element_from_wire(o: &MatrixOracle, w: &ElementWire) -> Result<GroupElement, PipelineError> {
    let f = o.field();
    let entry = |v: &Vec<u64>| f.element(v).map_err(|e| PipelineError::Spec(e.to_string()));
    let m = [entry(&w[0][0])?, entry(&w[0][1])?, entry(&w[1][0])?, entry(&w[1][1])?];
    Ok(o.from_matrix(&m)?)
}

/// The certificate as written by the CLI.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateJson {
    pub p: String,
    pub route: Route,
    pub u: ElementWire,
    pub steps: u64,
}

/// A field element of `K` by kind and raw string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldElementWire {
    pub kind: PointKind,
    pub payload: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Regular,
    Parabolic,
}

pub fn field_element_to_wire(a: &FieldElementK) -> FieldElementWire {
    let kind = match a.point() {
        PlanePoint::Regular(_) => PointKind::Regular,
        PlanePoint::Parabolic(_) => PointKind::Parabolic,
    };
    FieldElementWire { kind, payload: a.element().payload().to_vec() }
}

pub fn field_element_from_wire(k: &BlackBoxFieldK, w: &FieldElementWire) -> Result<FieldElementK, PipelineError> {
    let g = k.black_box().adopt(w.payload.clone())?;
    Ok(k.from_point(match w.kind {
        PointKind::Regular => PlanePoint::Regular(g),
        PointKind::Parabolic => PlanePoint::Parabolic(g),
    }))
}

pub fn matrix_to_wire(m: &Matrix3K) -> [[FieldElementWire; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| field_element_to_wire(m.entry(i, j))))
}

pub fn matrix_from_wire(k: &BlackBoxFieldK, w: &[[FieldElementWire; 3]; 3]) -> Result<Matrix3K, PipelineError> {
    let mut rows = Vec::with_capacity(3);
    for r in w {
        rows.push([field_element_from_wire(k, &r[0])?, field_element_from_wire(k, &r[1])?, field_element_from_wire(k, &r[2])?]);
    }
    Ok(Matrix3K { rows: rows.try_into().expect("three rows") })
}

/// The saved outcome of coordinatization: enough to rebuild `K` on the same strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameFile {
    pub spec: GroupSpec,
    pub seed: u64,
    pub confidence: u32,
    pub frame: SpinorFrame,
}

/// The group, its `SO3` overgroup `X`, and the field built on `X`.
#[derive(Debug)]
pub struct Coordinatized {
    pub spec: GroupSpec,
    pub seed: u64,
    pub confidence: Confidence,
    pub oracle: MatrixOracle,
    pub lifted: Option<LiftedBox>,
    pub k: BlackBoxFieldK,
}

/// The input box with the run's sampler, and `X` over it.
fn build_x(spec: &GroupSpec, seed: u64, conf: Confidence) -> Result<(MatrixOracle, BlackBox, Option<LiftedBox>), PipelineError> {
    let oracle = spec.oracle()?;
    if oracle.field().characteristic() == 2 {
        return Err(PipelineError::EvenCharacteristic);
    }
    let y = oracle.black_box().fork(seed);
    Ok(match spec.kind {
        MatrixKind::Pgl2 => (oracle, y, None),
        MatrixKind::Psl2 => {
            let l = lift_psl2_to_so3(&y, conf)?;
            (oracle, l.black_box().clone(), Some(l))
        }
    })
}

pub fn coordinatize(spec: &GroupSpec, seed: u64, conf: Confidence) -> Result<Coordinatized, PipelineError> {
    let (oracle, x, lifted) = build_x(spec, seed, conf)?;
    let frame = build_sym4(&x, conf)?;
    let k = BlackBoxFieldK::new(x, frame, Policy::Report, conf)?;
    Ok(Coordinatized { spec: spec.clone(), seed, confidence: conf, oracle, lifted, k })
}

impl Coordinatized {
    /// Rebuilds `X` from the file and re-attaches the stored frame.
    pub fn from_frame_file(file: &FrameFile) -> Result<Coordinatized, PipelineError> {
        let conf = Confidence { bits: file.confidence };
        let (oracle, x, lifted) = build_x(&file.spec, file.seed, conf)?;
        let frame = file.frame.adopt(&x)?;
        frame.check(&x)?;
        let k = BlackBoxFieldK::new(x, frame, Policy::Report, conf)?;
        Ok(Coordinatized { spec: file.spec.clone(), seed: file.seed, confidence: conf, oracle, lifted, k })
    }

    pub fn frame_file(&self) -> FrameFile {
        FrameFile { spec: self.spec.clone(), seed: self.seed, confidence: self.confidence.bits, frame: self.k.frame().clone() }
    }

    pub fn x(&self) -> &BlackBox {
        self.k.black_box()
    }

    pub fn characteristic(&self) -> u64 {
        self.oracle.field().characteristic()
    }

    /// The input-group element under an element of `X` that lies over it.
    pub fn to_input(&self, g: &GroupElement) -> Option<GroupElement> {
        match &self.lifted {
            None => Some(g.clone()),
            Some(l) => l.project(g),
        }
    }

    /// The `X`-string of an input element; for `PSL2` inputs only `PGL2` strings exist.
    pub fn from_input(&self, g: &GroupElement) -> Result<GroupElement, PipelineError> {
        match &self.lifted {
            None => Ok(g.clone()),
            Some(_) => Err(PipelineError::Unsupported("explicit elements need a PGL2 spec")),
        }
    }

    /// A random element of `X`.
    pub fn random(&self) -> GroupElement {
        self.x().random()
    }

    /// Runs the characteristic search and checks the result in the input group.
    pub fn unipotent(&self, p_hint: Option<u64>) -> Result<(UnipotentCertificate, CertificateJson), PipelineError> {
        let cert = find_characteristic_and_unipotent(&self.k, p_hint)?;
        let u = self.to_input(&cert.u).ok_or(PipelineError::Unverified)?;
        let y = self.oracle.black_box();
        if !cert.verify(self.x()) || y.is_identity(&u) || !y.is_identity(&y.power_u64(&u, cert.p)) {
            return Err(PipelineError::Unverified);
        }
        let json = CertificateJson { p: cert.p.to_string(), route: cert.route, u: element_to_wire(&self.oracle, &u), steps: cert.steps };
        Ok((cert, json))
    }
}

/// One run of the unipotent search from a spec.
pub fn run_unipotent(
    spec: &GroupSpec,
    seed: u64,
    conf: Confidence,
    p_hint: Option<u64>,
) -> Result<CertificateJson, PipelineError> {
    let c = coordinatize(spec, seed, conf)?;
    Ok(c.unipotent(p_hint)?.1)
}
