//! Centralizers of involutions, reification of involutive automorphisms and
//! the derived operations on involutions of `PGL2(q)`.
//!
//! An involutive automorphism is handed over as a *proto*: a list of pairs
//! `(x, x^phi)` for `x` running over generators of a subgroup. Its graph is a
//! subgroup of `X x X`, and the zeta maps turn random pairs of the graph into
//! near-uniform elements of the centralizer of `phi`.

use crate::bbox::{tries_for, BlackBox, BoxError, GroupElement};
use crate::oracle::{direct_product, graph_subgroup, make_cyclic_box, semidirect_product, Action, OracleError, ProductBox};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InvolutionError {
    #[error(transparent)]
    Box(#[from] BoxError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("random search exhausted its budget: {0}")]
    Exhausted(&'static str),
    #[error("expected an involution")]
    NotInvolution,
    #[error("the two points coincide")]
    Coincident,
    #[error("element of order at most 2 cannot be split into two involutions")]
    TooSmall,
}

/// Success parameter: Monte-Carlo loops aim at failure probability `2^-bits`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Confidence {
    pub bits: u32,
}

impl Default for Confidence {
    fn default() -> Self {
        Confidence { bits: 20 }
    }
}

impl Confidence {
    /// From a success probability such as `0.999`, or a bit count when `>= 1`.
    pub fn from_value(v: f64) -> Confidence {
        if v >= 1.0 {
            Confidence { bits: v.round().clamp(1.0, 200.0) as u32 }
        } else {
            let bits = (-(1.0 - v.clamp(0.5, 1.0 - 1e-60)).log2()).ceil();
            Confidence { bits: bits.clamp(1.0, 200.0) as u32 }
        }
    }

    pub fn tries(&self, p: f64) -> usize {
        tries_for(p, self.bits)
    }
}

/// Either the requested value or a unipotent element found on the way.
#[derive(Debug, Clone)]
pub enum SerendipityOutcome<T> {
    Ok(T),
    Unipotent(UnipotentWitness),
}

impl<T> SerendipityOutcome<T> {
    pub fn ok(self) -> Option<T> {
        match self {
            SerendipityOutcome::Ok(v) => Some(v),
            SerendipityOutcome::Unipotent(_) => None,
        }
    }

    pub fn is_unipotent(&self) -> bool {
        matches!(self, SerendipityOutcome::Unipotent(_))
    }
}

/// `u = s t` is a nontrivial unipotent element for involutions `s`, `t`.
#[derive(Debug, Clone)]
pub struct UnipotentWitness {
    pub u: GroupElement,
    pub s: GroupElement,
    pub t: GroupElement,
}

/// Pairs `(x, x^phi)` on generators of the subgroup where `phi` is known.
#[derive(Debug, Clone, Default)]
pub struct Proto {
    pub pairs: Vec<(GroupElement, GroupElement)>,
}

/// Local descriptions of an involutive automorphism, merged by [`proto_from_local`].
#[derive(Debug, Clone)]
pub enum LocalPart {
    Fix(Vec<GroupElement>),
    Invert(Vec<GroupElement>),
    Map(Vec<(GroupElement, GroupElement)>),
}

pub fn proto_from_local(x: &BlackBox, parts: &[LocalPart]) -> Proto {
    let mut pairs = Vec::new();
    for part in parts {
        match part {
            LocalPart::Fix(gs) => pairs.extend(gs.iter().map(|g| (g.clone(), g.clone()))),
            LocalPart::Invert(gs) => pairs.extend(gs.iter().map(|g| (g.clone(), x.inv(g)))),
            LocalPart::Map(ps) => pairs.extend(ps.iter().cloned()),
        }
    }
    Proto { pairs }
}

/// `zeta(x)` for a pair `(a, a^phi)`: lands in the centralizer of `phi`.
pub fn zeta(x: &BlackBox, a: &GroupElement, b: &GroupElement) -> GroupElement {
    let y = x.mul(b, &x.inv(a));
    match x.involution_of(&y) {
        Ok(i) => i,
        Err(_) => {
            let r = x.power(&y, &x.exponent().half_odd_plus_one);
            x.mul(&r, a)
        }
    }
}

/// A random involution: the involution in `<x>` for random `x` of even order.
pub fn find_involution(x: &BlackBox, conf: Confidence) -> Result<GroupElement, InvolutionError> {
    for _ in 0..conf.tries(0.25) {
        if let Ok(i) = x.involution_of(&x.random()) {
            return Ok(i);
        }
    }
    Err(InvolutionError::Exhausted("involution"))
}

/// The centralizer `C(t)` as a box over zeta-generators.
#[derive(Debug, Clone)]
pub struct CentralizerBox {
    pub involution: GroupElement,
    pub gens: Vec<GroupElement>,
    pub black_box: BlackBox,
}

/// `count` zeta-samples of `C(t)`.
pub fn centralizer_samples(x: &BlackBox, t: &GroupElement, count: usize) -> Vec<GroupElement> {
    (0..count)
        .map(|_| {
            let a = x.random();
            let b = x.conj_by_involution(&a, t);
            zeta(x, &a, &b)
        })
        .collect()
}

pub fn centralizer_of_involution(x: &BlackBox, t: &GroupElement, gens: usize) -> Result<CentralizerBox, InvolutionError> {
    if !x.is_involution(t) {
        return Err(InvolutionError::NotInvolution);
    }
    let mut samples = centralizer_samples(x, t, gens.max(1));
    samples.push(t.clone());
    let black_box = x.subgroup(&samples)?;
    Ok(CentralizerBox { involution: t.clone(), gens: samples, black_box })
}

/// `X x X`-graph of a proto, augmented by the coordinate swap: the box for
/// `graph : <swap>`, in which the swap realises `phi`.
#[derive(Debug, Clone)]
pub struct Augmented {
    pub pairs: ProductBox,
    pub graph: ProductBox,
    pub semidirect: ProductBox,
}

impl Augmented {
    pub fn swap(&self) -> GroupElement {
        let s = &self.semidirect;
        s.pair(&s.left.identity(), &s.right.adopt(vec![1]).expect("C2 payload"))
    }

    /// Lift of a graph element `(a, a^phi)`.
    pub fn embed_pair(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let s = &self.semidirect;
        s.pair(&self.graph.pair(a, b), &s.right.identity())
    }

    /// First coordinate of an element of the graph part, `None` on the swapped coset.
    pub fn project(&self, x: &GroupElement) -> Option<GroupElement> {
        let (f, flag) = self.semidirect.split(x);
        if flag.payload()[0] != 0 {
            return None;
        }
        Some(self.graph.left_of(&f))
    }
}

pub fn augment_by_proto(base: &BlackBox, proto: &Proto) -> Result<Augmented, InvolutionError> {
    let pairs = direct_product(base, base, base.random_u64())?;
    let graph = graph_subgroup(&pairs, &proto.pairs)?;
    let c2 = make_cyclic_box(2, base.random_u64())?;
    let g = graph.clone();
    let swap: Action = Arc::new(move |f, flag| {
        if flag.payload()[0] == 0 {
            return f.clone();
        }
        let (a, b) = g.split(f);
        g.pair(&b, &a)
    });
    let semidirect = semidirect_product(&graph.whole, &c2, swap, base.random_u64())?;
    Ok(Augmented { pairs, graph, semidirect })
}

/// Torus and a reflection in the centralizer of an involution `t`:
/// `C(t) = T : <w>` with `T` cyclic of order `q - 1` or `q + 1`.
#[derive(Debug, Clone)]
pub struct PointData {
    pub involution: GroupElement,
    /// Elements of `T` with `c^2 != 1`.
    pub torus: Vec<GroupElement>,
    /// An involution of `C(t)` other than `t`.
    pub reflection: GroupElement,
}

const CACHE_LIMIT: usize = 4096;
const TORUS_SAMPLES: usize = 3;

/// Involution machinery over a box `X` that encrypts `PGL2(q)`, `q` odd.
pub struct Engine {
    x: BlackBox,
    pairs: ProductBox,
    conf: Confidence,
    cache: Mutex<HashMap<Vec<u64>, Arc<PointData>>>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Engine({:?})", self.x)
    }
}

impl Engine {
    pub fn new(x: BlackBox, conf: Confidence) -> Result<Self, InvolutionError> {
        let pairs = direct_product(&x, &x, x.random_u64())?;
        Ok(Engine { x, pairs, conf, cache: Mutex::new(HashMap::new()) })
    }

    pub fn black_box(&self) -> &BlackBox {
        &self.x
    }

    pub fn confidence(&self) -> Confidence {
        self.conf
    }

    pub fn find_involution(&self) -> Result<GroupElement, InvolutionError> {
        find_involution(&self.x, self.conf)
    }

    pub fn zeta(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        zeta(&self.x, a, b)
    }

    pub fn centralizer_samples(&self, t: &GroupElement, count: usize) -> Vec<GroupElement> {
        centralizer_samples(&self.x, t, count)
    }

    pub fn cached_point(&self, t: &GroupElement) -> Option<Arc<PointData>> {
        self.cache.lock().expect("cache poisoned").get(t.payload()).cloned()
    }

    /// Torus elements and a reflection of `C(t)`, cached per involution.
    pub fn point_data(&self, t: &GroupElement) -> Result<Arc<PointData>, InvolutionError> {
        if let Some(d) = self.cached_point(t) {
            return Ok(d);
        }
        let x = &self.x;
        let mut torus = Vec::new();
        let mut reflection = None;
        for _ in 0..3 * self.conf.tries(0.2) {
            let a = x.random();
            let c = zeta(x, &a, &x.conj_by_involution(&a, t));
            let c2 = x.square(&c);
            if x.is_identity(&c2) {
                if reflection.is_none() && !x.is_identity(&c) && !x.eq(&c, t) {
                    reflection = Some(c);
                }
            } else if torus.len() < 2 * TORUS_SAMPLES && x.commute(&c, t) {
                // non-involutions of C(t) lie in T
                torus.push(c);
            }
            if torus.len() >= 2 * TORUS_SAMPLES && reflection.is_some() {
                break;
            }
        }
        // keep the samples of largest 2-height: in PGL2 only those reach
        // outside PSL2, and graphs built from inner samples alone stay inner
        torus.sort_by_cached_key(|g| std::cmp::Reverse(x.two_height(g)));
        torus.truncate(TORUS_SAMPLES);
        let Some(reflection) = reflection else {
            return Err(InvolutionError::Exhausted("reflection in a centralizer"));
        };
        if torus.is_empty() {
            return Err(InvolutionError::Exhausted("torus of a centralizer"));
        }
        let data = Arc::new(PointData { involution: t.clone(), torus, reflection });
        let mut cache = self.cache.lock().expect("cache poisoned");
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(t.payload().to_vec(), data.clone());
        Ok(data)
    }

    /// Registers extra torus elements for `t`, e.g. when a search needs a
    /// generator of larger 2-height.
    fn enlarge_torus(&self, t: &GroupElement, count: usize) -> Result<Arc<PointData>, InvolutionError> {
        let old = self.point_data(t)?;
        let x = &self.x;
        let mut torus = old.torus.clone();
        for c in self.centralizer_samples(t, 4 * count) {
            if torus.len() >= old.torus.len() + count {
                break;
            }
            if !x.is_identity(&x.square(&c)) {
                torus.push(c);
            }
        }
        let data = Arc::new(PointData { involution: t.clone(), torus, reflection: old.reflection.clone() });
        self.cache.lock().expect("cache poisoned").insert(t.payload().to_vec(), data.clone());
        Ok(data)
    }

    pub fn graph(&self, proto: &Proto) -> Result<ProductBox, InvolutionError> {
        Ok(graph_subgroup(&self.pairs, &proto.pairs)?)
    }

    /// The involution `k` with `a^k = b` on every proto pair, via zeta-samples of its centralizer.
    pub fn reify(&self, proto: &Proto) -> Result<GroupElement, InvolutionError> {
        self.reify_with_budget(proto, self.conf.tries(0.2))
    }

    pub fn reify_with_budget(&self, proto: &Proto, budget: usize) -> Result<GroupElement, InvolutionError> {
        let x = &self.x;
        let graph = self.graph(proto)?;
        let mut tests = proto.pairs.clone();
        while tests.len() < 8 {
            tests.push(graph.split(&graph.whole.random()));
        }
        let mut tried: Vec<GroupElement> = Vec::new();
        for _ in 0..budget {
            let (a, b) = graph.split(&graph.whole.random());
            let c = zeta(x, &a, &b);
            let Ok(k) = x.involution_of(&c) else { continue };
            if tried.iter().any(|t| x.eq(t, &k)) {
                continue;
            }
            if tests.iter().all(|(a, b)| x.eq(&x.conj_by_involution(a, &k), b)) {
                return Ok(k);
            }
            tried.push(k);
        }
        Err(InvolutionError::Exhausted("reification"))
    }

    /// For involutions `s != t`: the involution commuting with both, or the
    /// unipotent element `st` when the line through `s` and `t` is tangent.
    pub fn j_of(&self, s: &GroupElement, t: &GroupElement) -> Result<SerendipityOutcome<GroupElement>, InvolutionError> {
        let x = &self.x;
        if x.eq(s, t) {
            return Err(InvolutionError::Coincident);
        }
        // keep the better-known involution in the role of t
        let (s, t) = if self.cached_point(t).is_none() && self.cached_point(s).is_some() { (t, s) } else { (s, t) };
        if let Ok(k) = x.involution_of(&x.mul(s, t)) {
            return Ok(SerendipityOutcome::Ok(k));
        }
        // a torus sample of odd order only leaves reification to chance; prefer
        // the involution whose samples include an element of even order
        let odd_torus = |d: &PointData| d.torus.iter().all(|g| !x.has_even_order(g));
        let mut data = self.point_data(t)?;
        let (s, t) = if odd_torus(&data) {
            let other = self.point_data(s)?;
            if odd_torus(&other) {
                (s, t)
            } else {
                data = other;
                (t, s)
            }
        } else {
            (s, t)
        };
        let u = x.mul(s, t);
        // a torus element of t normalizes <u> only when u is unipotent
        if let Some(tau) = data.torus.first() {
            let ut = x.conj(&u, tau);
            if x.commute(&u, &ut) {
                return Ok(SerendipityOutcome::Unipotent(UnipotentWitness { u, s: s.clone(), t: t.clone() }));
            }
        }
        // k is the only involution other than s, t commuting with both, so
        // candidates are checked directly; a short budget suffices since
        // failure here is structural rather than bad luck
        let perpendicular = |k: &GroupElement| !x.eq(k, s) && !x.eq(k, t) && x.commute(k, s) && x.commute(k, t);
        let search = |torus: &[GroupElement]| -> Result<Option<GroupElement>, InvolutionError> {
            let proto = proto_from_local(x, &[LocalPart::Fix(vec![u.clone()]), LocalPart::Invert(torus.to_vec())]);
            let graph = self.graph(&proto)?;
            for _ in 0..self.conf.tries(0.5) {
                let (a, b) = graph.split(&graph.whole.random());
                let c = zeta(x, &a, &b);
                // a reflection of C(k) in the class opposite s yields k via s c
                let candidates = [x.involution_of(&c).ok(), if x.is_involution(&c) { x.involution_of(&x.mul(s, &c)).ok() } else { None }];
                if let Some(k) = candidates.into_iter().flatten().find(|k| perpendicular(k)) {
                    return Ok(Some(k));
                }
            }
            Ok(None)
        };
        if let Some(k) = search(&data.torus)? {
            return Ok(SerendipityOutcome::Ok(k));
        }
        // the cached torus samples may all be inner; widen them once
        if data.torus.len() <= TORUS_SAMPLES {
            let data = self.enlarge_torus(t, TORUS_SAMPLES)?;
            if let Some(k) = search(&data.torus)? {
                return Ok(SerendipityOutcome::Ok(k));
            }
        }
        self.perpendicular_fallback(s, t, &u)
    }

    fn perpendicular_fallback(&self, s: &GroupElement, t: &GroupElement, u: &GroupElement) -> Result<SerendipityOutcome<GroupElement>, InvolutionError> {
        let x = &self.x;
        let perpendicular = |k: &GroupElement| !x.eq(k, s) && !x.eq(k, t) && x.commute(k, s) && x.commute(k, t);
        // the zeta-samples may all lie in the half of C(k) that misses k; an
        // involution inverting u is a reflection of C(k), and when it is in the
        // other class its product with s is a torus element of even order
        for _ in 0..self.conf.tries(0.4) {
            let Ok((w, _)) = self.as_two_involutions(u) else { continue };
            if let Ok(k) = x.involution_of(&x.mul(s, &w)) {
                if perpendicular(&k) {
                    return Ok(SerendipityOutcome::Ok(k));
                }
            }
        }
        // small fields: look for the reflection of C(t) that commutes with s
        for _ in 0..self.conf.tries(0.05) {
            for c in self.centralizer_samples(t, 8) {
                if x.is_involution(&c) && !x.eq(&c, t) && x.commute(&c, s) {
                    return Ok(SerendipityOutcome::Ok(c));
                }
            }
        }
        Err(InvolutionError::Exhausted("common perpendicular of two involutions"))
    }

    /// An involution `x` with `i^x = j`.
    pub fn bisect(&self, i: &GroupElement, j: &GroupElement) -> Result<GroupElement, InvolutionError> {
        let x = &self.x;
        if x.eq(i, j) {
            return Ok(self.point_data(i)?.reflection.clone());
        }
        let z = x.mul(i, j);
        let check = |r: &GroupElement| x.is_involution(r) && x.eq(&x.conj_by_involution(i, r), j);
        if let Ok(root) = x.odd_sqrt(&z) {
            let r = x.mul(&root, j);
            if check(&r) {
                return Ok(r);
            }
        }
        let k = x.involution_of(&z)?;
        let mut data = self.point_data(&k)?;
        for _ in 0..self.conf.bits.max(8) {
            let mut gens: Vec<(u64, &GroupElement)> = data.torus.iter().map(|g| (x.two_height(g), g)).collect();
            gens.sort_by(|a, b| b.0.cmp(&a.0));
            if let Some((_, g)) = gens.first() {
                if let Some(t) = x.cyclic_sqrt(g, &z) {
                    let r = x.mul(&t, j);
                    if check(&r) {
                        return Ok(r);
                    }
                }
            }
            data = self.enlarge_torus(&k, 2)?;
        }
        Err(InvolutionError::Exhausted("bisecting involution"))
    }

    /// Involutions `r`, `r'` with `x = r r'`, for `|x| > 2`.
    pub fn as_two_involutions(&self, g: &GroupElement) -> Result<(GroupElement, GroupElement), InvolutionError> {
        let x = &self.x;
        let g2 = x.square(g);
        if x.is_identity(&g2) {
            return Err(InvolutionError::TooSmall);
        }
        let inverts = |r: &GroupElement| x.is_involution(r) && x.eq(&x.conj_by_involution(g, r), &x.inv(g));
        // even order: any reflection of the centralizer of the involution in <g>
        if let Ok(i) = x.involution_of(g) {
            for c in self.centralizer_samples(&i, 8 * self.conf.tries(0.5)) {
                if !x.eq(&c, &i) && inverts(&c) {
                    return Ok((c.clone(), x.mul(&c, g)));
                }
            }
        }
        for _ in 0..self.conf.tries(0.3) {
            let y = x.random();
            if x.is_identity(&x.square(&y)) || x.commute(&y, g) {
                continue;
            }
            let proto = proto_from_local(x, &[LocalPart::Invert(vec![g.clone(), y])]);
            if let Ok(r) = self.reify_with_budget(&proto, 24) {
                if inverts(&r) {
                    return Ok((r.clone(), x.mul(&r, g)));
                }
            }
        }
        Err(InvolutionError::Exhausted("splitting into two involutions"))
    }
}


/// An involution of a box encrypting `SL2(2^n)`, `n >= 3`, from the
/// centralizer of an involutive automorphism inverting two odd-order elements.
pub fn find_involution_even_char(x: &BlackBox, conf: Confidence) -> Result<GroupElement, InvolutionError> {
    let odd_big = |y: &GroupElement| {
        !x.has_even_order(y) && !x.is_identity(y) && !x.is_identity(&x.power_u64(y, 3))
    };
    let pairs = direct_product(x, x, x.random_u64())?;
    for _ in 0..conf.tries(0.25) {
        let y1 = x.search(conf.tries(0.3), "odd element", odd_big)?;
        let y2 = x.search(conf.tries(0.3), "odd element", |y| odd_big(y) && !x.commute(y, &y1))?;
        let proto = proto_from_local(x, &[LocalPart::Invert(vec![y1, y2])]);
        let graph = graph_subgroup(&pairs, &proto.pairs)?;
        for _ in 0..conf.tries(0.5) {
            let (a, b) = graph.split(&graph.whole.random());
            let c = zeta(x, &a, &b);
            if x.is_involution(&c) {
                return Ok(c);
            }
        }
    }
    Err(InvolutionError::Exhausted("involution in even characteristic"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_field::ExplicitField;
    use crate::oracle::MatrixOracle;

    fn pgl(q: (u64, usize), seed: u64) -> MatrixOracle {
        MatrixOracle::pgl2(ExplicitField::new(q.0, q.1).unwrap(), seed).unwrap()
    }

    #[test]
    fn confidence_parsing() {
        assert_eq!(Confidence::from_value(0.999).bits, 10);
        assert_eq!(Confidence::from_value(30.0).bits, 30);
    }

    #[test]
    fn zeta_lands_in_centralizer() {
        let o = pgl((13, 1), 4);
        let x = o.black_box();
        let t = find_involution(x, Confidence::default()).unwrap();
        for c in centralizer_samples(x, &t, 200) {
            assert!(x.commute(&c, &t));
        }
    }

    #[test]
    fn centralizer_sampling_covers_the_centralizer() {
        // C(t) in PGL2(7) is dihedral of order 16 or 12
        let o = pgl((7, 1), 9);
        let x = o.black_box();
        let t = find_involution(x, Confidence::default()).unwrap();
        let all: Vec<_> = o.elements().into_iter().filter(|g| x.commute(g, &t)).collect();
        let mut hist = vec![0usize; all.len()];
        let n = 400 * all.len();
        for c in centralizer_samples(x, &t, n) {
            let i = all.iter().position(|g| x.eq(g, &c)).unwrap();
            hist[i] += 1;
        }
        // every element is reached; the zeta0 branch skews the involutions
        let (lo, hi) = (*hist.iter().min().unwrap(), *hist.iter().max().unwrap());
        assert!(lo > 100 && hi < 1200, "{hist:?}");
    }

    #[test]
    fn centralizer_box_is_a_subgroup_of_the_centralizer() {
        let o = pgl((11, 1), 2);
        let x = o.black_box();
        let t = find_involution(x, Confidence::default()).unwrap();
        let c = centralizer_of_involution(x, &t, 6).unwrap();
        for _ in 0..50 {
            assert!(x.commute(&c.black_box.random(), &t));
        }
        assert_eq!(centralizer_of_involution(x, &x.identity(), 3).unwrap_err(), InvolutionError::NotInvolution);
    }

    #[test]
    fn reify_conjugation_by_a_known_involution() {
        let o = pgl((29, 1), 5);
        let x = o.black_box();
        let e = Engine::new(x.clone(), Confidence::default()).unwrap();
        for _ in 0..10 {
            let k = e.find_involution().unwrap();
            let gens: Vec<_> = (0..3).map(|_| x.random()).collect();
            let proto = Proto { pairs: gens.iter().map(|g| (g.clone(), x.conj_by_involution(g, &k))).collect() };
            assert!(x.eq(&e.reify(&proto).unwrap(), &k));
        }
    }

    #[test]
    fn j_of_commutes_with_both() {
        let o = pgl((13, 1), 6);
        let x = o.black_box();
        let e = Engine::new(x.clone(), Confidence::default()).unwrap();
        let (mut ok, mut unip) = (0, 0);
        for _ in 0..60 {
            let s = e.find_involution().unwrap();
            let t = e.find_involution().unwrap();
            if x.eq(&s, &t) {
                continue;
            }
            match e.j_of(&s, &t).unwrap() {
                SerendipityOutcome::Ok(j) => {
                    assert!(x.is_involution(&j));
                    assert!(x.commute(&j, &s) && x.commute(&j, &t));
                    assert!(!x.eq(&j, &s) && !x.eq(&j, &t));
                    ok += 1;
                }
                SerendipityOutcome::Unipotent(w) => {
                    assert!(o.is_unipotent(&w.u));
                    unip += 1;
                }
            }
        }
        assert!(ok > 40, "{ok} {unip}");
    }

    #[test]
    fn j_of_detects_every_tangent_pair() {
        let o = pgl((7, 1), 8);
        let x = o.black_box();
        let e = Engine::new(x.clone(), Confidence::default()).unwrap();
        let invs: Vec<_> = o.elements().into_iter().filter(|g| x.is_involution(g)).collect();
        for s in invs.iter().step_by(3) {
            for t in invs.iter().step_by(2) {
                if x.eq(s, t) {
                    continue;
                }
                let unip = o.is_unipotent(&x.mul(s, t));
                assert_eq!(e.j_of(s, t).unwrap().is_unipotent(), unip);
            }
        }
    }

    #[test]
    fn bisect_conjugates() {
        let o = pgl((17, 1), 11);
        let x = o.black_box();
        let e = Engine::new(x.clone(), Confidence::default()).unwrap();
        for _ in 0..30 {
            let i = e.find_involution().unwrap();
            let j = e.find_involution().unwrap();
            // only involutions of the same class are conjugate
            let det = o.det(&x.mul(&i, &j));
            if !o.field().is_square(&det) {
                continue;
            }
            match e.bisect(&i, &j) {
                Ok(r) => {
                    assert!(x.is_involution(&r));
                    assert!(x.eq(&x.conj(&i, &r), &j));
                }
                Err(err) => panic!("{err}"),
            }
        }
    }

    #[test]
    fn two_involutions_multiply_back() {
        let o = pgl((13, 1), 12);
        let x = o.black_box();
        let e = Engine::new(x.clone(), Confidence::default()).unwrap();
        for _ in 0..20 {
            let g = x.random();
            if x.is_identity(&x.square(&g)) {
                continue;
            }
            let (r, s) = e.as_two_involutions(&g).unwrap();
            assert!(x.is_involution(&r) && x.is_involution(&s));
            assert!(x.eq(&x.mul(&r, &s), &g));
        }
        assert_eq!(e.as_two_involutions(&x.identity()).unwrap_err(), InvolutionError::TooSmall);
    }

    #[test]
    fn even_characteristic_involution_is_unipotent() {
        let o = MatrixOracle::psl2(ExplicitField::new(2, 4).unwrap(), 3).unwrap();
        let x = o.black_box();
        for _ in 0..5 {
            let t = find_involution_even_char(x, Confidence::default()).unwrap();
            assert!(x.is_involution(&t));
            assert!(o.is_unipotent(&t));
        }
    }

    #[test]
    fn augmentation_realises_the_automorphism() {
        let o = pgl((11, 1), 13);
        let x = o.black_box();
        let k = find_involution(x, Confidence::default()).unwrap();
        let gens: Vec<_> = (0..2).map(|_| x.random()).collect();
        let proto = Proto { pairs: gens.iter().map(|g| (g.clone(), x.conj_by_involution(g, &k))).collect() };
        let aug = augment_by_proto(x, &proto).unwrap();
        let big = &aug.semidirect.whole;
        let d = aug.swap();
        assert!(big.is_involution(&d));
        let (a, b) = &proto.pairs[0];
        let lifted = aug.embed_pair(a, b);
        let image = big.conj(&lifted, &d);
        let (c, dd) = aug.graph.split(&aug.semidirect.left_of(&image));
        assert!(x.eq(&c, b) && x.eq(&dd, a));
        assert!(x.eq(&aug.project(&lifted).unwrap(), a));
    }
}
