//! Acceptance suite: one `PASS`/`FAIL` line per criterion on stderr.
//!
//! The lines are written straight to the stderr handle so they show up even
//! when the test harness captures output.

use psl2_blackbox::bbox::{BlackBox, GroupElement};
use psl2_blackbox::finite_field::{ExplicitField, FieldValue};
use psl2_blackbox::frame::{build_sym4, cycling_attempt};
use psl2_blackbox::involution::{find_involution_even_char, Confidence, SerendipityOutcome};
use psl2_blackbox::kfield::{decode, residue_table, BlackBoxFieldK, Policy};
use psl2_blackbox::morphism::{matrix_eq, rho, rho_inverse, so3k_mul, Matrix3K};
use psl2_blackbox::oracle::{make_cyclic_box, MatrixKind, MatrixOracle};
use psl2_blackbox::pipeline::{coordinatize, element_from_wire, Coordinatized, GroupSpec};
use psl2_blackbox::plane::{LineKind, Plane, PlaneLine, PlanePoint};
use psl2bb_cli::bench::{bench_q, within_envelope, BenchRow};
use psl2bb_cli::commands::{unipotent_certificate, RunConfig};
use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::time::{Duration, Instant};

fn report(n: u32, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "{tag} [{n}] {detail}");
}

fn info(n: u32, detail: &str) {
    let _ = writeln!(std::io::stderr(), "INFO [{n}] {detail}");
}

fn conf() -> Confidence {
    Confidence::default()
}

fn coordinatized(kind: MatrixKind, p: u64, k: usize, seed: u64) -> Coordinatized {
    let spec = GroupSpec::new(kind, &ExplicitField::new(p, k).unwrap(), seed);
    coordinatize(&spec, seed, conf()).unwrap()
}

fn through<T>(r: SerendipityOutcome<T>) -> T {
    r.ok().expect("traversal never interrupts")
}

fn order_up_to(x: &BlackBox, g: &GroupElement, bound: u64) -> Option<u64> {
    let mut y = g.clone();
    for n in 1..=bound {
        if x.is_identity(&y) {
            return Some(n);
        }
        y = x.mul(&y, g);
    }
    None
}

// --- 1, 2: unipotent certificates -------------------------------------------

fn certificate_runs(p: u64, k: usize, runs: u64) -> (u64, Duration) {
    let field = ExplicitField::new(p, k).unwrap();
    let spec = GroupSpec::new(MatrixKind::Psl2, &field, 0);
    let o = spec.oracle().unwrap();
    let (mut good, mut slowest) = (0, Duration::ZERO);
    for seed in 0..runs {
        let cfg = RunConfig { spec: None, seed, confidence: conf(), out: None, jobs: 1 };
        let start = Instant::now();
        let result = unipotent_certificate(&spec, &cfg, None);
        let elapsed = start.elapsed();
        slowest = slowest.max(elapsed);
        let verified = result.is_ok_and(|c| {
            let u = element_from_wire(&o, &c.u).unwrap();
            c.p == p.to_string() && o.is_unipotent(&u) && !o.black_box().is_identity(&u)
        });
        if verified && elapsed < Duration::from_secs(10) {
            good += 1;
        }
    }
    (good, slowest)
}

#[test]
fn unipotent_certificates_over_small_fields() {
    let mut pass = true;
    let mut details = Vec::new();
    for (p, k) in [(5, 1), (13, 1), (17, 1), (29, 1), (101, 1), (821, 1), (5, 2), (3, 3), (7, 2)] {
        let (good, slowest) = certificate_runs(p, k, 20);
        pass &= good >= 19;
        details.push(format!("q={}:{good}/20 ({:.2}s max)", p.pow(k as u32), slowest.as_secs_f64()));
    }
    // with the characteristic known, the search costs O(log p) additions in K
    let mut ratios = Vec::new();
    for p in [101u64, 1009, 10007, 100003, 1000003] {
        let c = coordinatized(MatrixKind::Pgl2, p, 1, 3);
        let before = c.k.additions();
        let (cert, _) = c.unipotent(Some(p)).unwrap();
        let counted = c.k.additions() - before;
        pass &= counted == cert.steps && cert.p == p;
        ratios.push((p, cert.steps, cert.steps as f64 / (p as f64).log2()));
    }
    let mut sorted: Vec<f64> = ratios.iter().map(|r| r.2).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    pass &= ratios.iter().all(|r| r.2 <= 2.0 * median);
    let sweep: Vec<String> = ratios.iter().map(|(p, s, _)| format!("p={p}:{s}")).collect();
    report(
        1,
        pass,
        &format!("unipotent certificates {}; known-p additions {} (median {median:.2} per bit)", details.join(" "), sweep.join(" ")),
    );
    assert!(pass);
}

#[test]
#[ignore = "large prime; run with --ignored"]
fn unipotent_certificate_for_a_ten_digit_prime() {
    let p = 5463458053u64;
    let spec = GroupSpec::new(MatrixKind::Psl2, &ExplicitField::prime(p).unwrap(), 0);
    let cfg = RunConfig { spec: None, seed: 0, confidence: conf(), out: None, jobs: 1 };
    let start = Instant::now();
    let cert = unipotent_certificate(&spec, &cfg, Some(p));
    let elapsed = start.elapsed();
    let o = spec.oracle().unwrap();
    let pass = elapsed < Duration::from_secs(600)
        && cert.as_ref().is_ok_and(|c| c.p == p.to_string() && o.is_unipotent(&element_from_wire(&o, &c.u).unwrap()));
    report(2, pass, &format!("p={p} with hint in {:.1}s", elapsed.as_secs_f64()));
    assert!(pass);
}

// --- 3: field axioms ----------------------------------------------------------

/// Sum and product tables of K read back through the residue map.
fn decoded_tables(p: u64, seed: u64) -> Option<(Vec<Vec<u64>>, Vec<Vec<u64>>)> {
    let c = coordinatized(MatrixKind::Pgl2, p, 1, seed);
    let k = &c.k;
    let table = residue_table(k, p).ok()?;
    let distinct = (0..p as usize).all(|a| (0..a).all(|b| !k.eq(&table[a], &table[b])));
    if !distinct {
        return None;
    }
    let mut add = vec![vec![0; p as usize]; p as usize];
    let mut mul = add.clone();
    for a in 0..p as usize {
        for b in 0..p as usize {
            add[a][b] = decode(k, &table, &through(k.add_with(&table[a], &table[b], Policy::Traverse).ok()?))?;
            mul[a][b] = decode(k, &table, &through(k.mul_with(&table[a], &table[b], Policy::Traverse).ok()?))?;
        }
    }
    Some((add, mul))
}

fn field_axioms_hold(p: usize, add: &[Vec<u64>], mul: &[Vec<u64>]) -> bool {
    let (s, m) = (|a: usize, b: usize| add[a][b] as usize, |a: usize, b: usize| mul[a][b] as usize);
    let all = 0..p;
    let commutative = all.clone().all(|a| all.clone().all(|b| s(a, b) == s(b, a) && m(a, b) == m(b, a)));
    let identities = all.clone().all(|a| s(a, 0) == a && m(a, 1) == a);
    let inverses = all.clone().all(|a| all.clone().any(|b| s(a, b) == 0) && (a == 0 || all.clone().any(|b| m(a, b) == 1)));
    let triples = all.clone().all(|a| {
        all.clone().all(|b| {
            all.clone().all(|c| s(s(a, b), c) == s(a, s(b, c)) && m(m(a, b), c) == m(a, m(b, c)) && m(a, s(b, c)) == s(m(a, b), m(a, c)))
        })
    });
    let standard = all.clone().all(|a| all.clone().all(|b| s(a, b) == (a + b) % p && m(a, b) == a * b % p));
    commutative && identities && inverses && triples && standard
}

#[test]
fn field_axioms_exhaustive() {
    let mut pass = true;
    for p in [5u64, 7, 11, 13] {
        pass &= decoded_tables(p, p).is_some_and(|(a, m)| field_axioms_hold(p as usize, &a, &m));
    }
    report(3, pass, "K field axioms exhaustive at p = 5, 7, 11, 13");
    assert!(pass);
}

// --- 4: square roots in cyclic groups ------------------------------------------

#[test]
fn cyclic_square_roots_against_brute_force() {
    let mut checked = 0u64;
    let mut failures = Vec::new();
    for a in 0..=8u32 {
        for b in (1..=63u64).step_by(2) {
            let n = (1u64 << a) * b;
            let x = make_cyclic_box(n, n).unwrap();
            let g = x.adopt(vec![1 % n]).unwrap();
            let mut square = vec![false; n as usize];
            for y in 0..n {
                square[(2 * y % n) as usize] = true;
            }
            for z in 0..n {
                let ze = x.adopt(vec![z]).unwrap();
                let ok = match x.cyclic_sqrt(&g, &ze) {
                    Some(r) => square[z as usize] && x.eq(&x.square(&r), &ze),
                    None => !square[z as usize],
                };
                checked += 1;
                if !ok {
                    failures.push((n, z));
                }
            }
        }
    }
    let pass = failures.is_empty();
    report(4, pass, &format!("cyclic square roots: {checked} elements, {} mismatches", failures.len()));
    assert!(pass, "{:?}", &failures[..failures.len().min(10)]);
}

// --- 5: the adjoint morphism ----------------------------------------------------

fn decode_matrix(k: &BlackBoxFieldK, table: &[psl2_blackbox::kfield::FieldElementK], m: &Matrix3K) -> Option<[[u64; 3]; 3]> {
    let mut out = [[0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = decode(k, table, &m.rows[i][j])?;
        }
    }
    Some(out)
}

fn product_mod(a: &[[u64; 3]; 3], b: &[[u64; 3]; 3], p: u64) -> [[u64; 3]; 3] {
    let mut out = [[0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|l| a[i][l] * b[l][j]).sum::<u64>() % p;
        }
    }
    out
}

fn exhaustive_at_five() -> bool {
    let c = coordinatized(MatrixKind::Pgl2, 5, 1, 5);
    let (k, x) = (&c.k, c.x());
    let table = residue_table(k, 5).unwrap();
    let elems = c.oracle.elements();
    let images: Vec<[[u64; 3]; 3]> = elems.iter().map(|g| decode_matrix(k, &table, &rho(k, g).unwrap()).unwrap()).collect();
    let injective = images.iter().collect::<HashSet<_>>().len() == 120 && elems.len() == 120;
    let index = |g: &GroupElement| elems.iter().position(|h| x.eq(h, g)).unwrap();
    let homomorphism = (0..120).all(|i| (0..120).all(|j| images[index(&x.mul(&elems[i], &elems[j]))] == product_mod(&images[i], &images[j], 5)));
    let round_trip = elems.iter().all(|g| x.eq(&rho_inverse(k, &rho(k, g).unwrap()).unwrap(), g));
    injective && homomorphism && round_trip
}

fn sampled(p: u64, k: usize) -> bool {
    let c = coordinatized(MatrixKind::Psl2, p, k, 11);
    let (kf, x) = (&c.k, c.x());
    let pairs = (0..100).all(|_| {
        let (g, h) = (x.random(), x.random());
        let lhs = rho(kf, &x.mul(&g, &h)).unwrap();
        matrix_eq(kf, &lhs, &so3k_mul(kf, &rho(kf, &g).unwrap(), &rho(kf, &h).unwrap()).unwrap())
    });
    let round_trip = (0..100).all(|_| {
        let g = x.random();
        x.eq(&rho_inverse(kf, &rho(kf, &g).unwrap()).unwrap(), &g)
    });
    pairs && round_trip
}

#[test]
fn adjoint_morphism() {
    let five = exhaustive_at_five();
    let thirteen = sampled(13, 1);
    let twenty_five = sampled(5, 2);
    let pass = five && thirteen && twenty_five;
    report(
        5,
        pass,
        &format!("rho: q=5 exhaustive injective homomorphism {five}; q=13 sampled {thirteen}; q=25 sampled {twenty_five}"),
    );
    assert!(pass);
}

// --- 6: the Sym4 frame ------------------------------------------------------------

fn frame_is_sound(q: u64, seed: u64) -> bool {
    let c = coordinatized(MatrixKind::Psl2, q, 1, seed);
    let (x, f) = (c.x(), c.k.frame());
    let mut hist = BTreeMap::new();
    for g in &f.h {
        *hist.entry(order_up_to(x, g, 4).unwrap_or(0)).or_insert(0) += 1;
    }
    let distinct = (0..f.h.len()).all(|i| (0..i).all(|j| !x.eq(&f.h[i], &f.h[j])));
    let images = f.sym4_images(x).is_ok_and(|v| v.iter().map(|(_, perm)| *perm).collect::<HashSet<_>>().len() == 24);
    f.h.len() == 24 && distinct && hist == BTreeMap::from([(1, 1), (2, 9), (3, 8), (4, 6)]) && f.check(x).is_ok() && images
}

#[test]
fn sym4_frames() {
    let mut results = Vec::new();
    for q in [7u64, 13] {
        results.push((q, (0..10).filter(|&s| frame_is_sound(q, s)).count()));
    }
    let pass = results.iter().all(|&(_, n)| n == 10);
    let text: Vec<String> = results.iter().map(|(q, n)| format!("q={q}:{n}/10")).collect();
    report(6, pass, &format!("Sym4 frames with order histogram 1:1 2:9 3:8 4:6, {}", text.join(" ")));
    assert!(pass);
}

// --- 7: odd-order products when cycling the frame ------------------------------

#[test]
fn cycling_success_frequency() {
    let c = coordinatized(MatrixKind::Pgl2, 101, 1, 7);
    let (x, f) = (c.x(), c.k.frame());
    let trials = 2000;
    let (mut first, mut both, mut cycled) = (0, 0, 0);
    for _ in 0..trials {
        let a = cycling_attempt(x, &f.e1, &f.e3, &f.e2, &x.random(), None);
        first += a.first_odd as u32;
        both += (a.first_odd && a.second_odd) as u32;
        cycled += a.element.is_some() as u32;
    }
    let freq = both as f64 / trials as f64;
    let bound = 0.5 - 1.0 / 202.0 - 3.0 * (0.25f64 / trials as f64).sqrt();
    info(7, &format!("first product odd in {:.4} of trials; element of order 3 found in {:.4}", first as f64 / trials as f64, cycled as f64 / trials as f64));
    let pass = freq >= bound;
    report(7, pass, &format!("both products odd at q=101: {freq:.4} over {trials} trials, bound {bound:.4}"));
    assert!(pass);
}

// --- 8: incidence geometry ------------------------------------------------------

struct Model {
    p: i64,
    involutions: Vec<GroupElement>,
    axes: Vec<[i64; 3]>,
}

fn scalar(v: &FieldValue) -> i64 {
    v.coeffs().first().copied().unwrap_or(0) as i64
}

/// The traceless vector `(a, b, c)` of `[[a, b], [c, -a]]` for a matrix with zero trace.
fn axis_of(o: &MatrixOracle, g: &GroupElement) -> [i64; 3] {
    let m = o.to_matrix(g);
    [scalar(&m[0]), scalar(&m[1]), scalar(&m[2])]
}

fn nilpotent_axis(o: &MatrixOracle, u: &GroupElement, p: i64) -> [i64; 3] {
    let m = o.to_matrix(u);
    let (a, b, c, d) = (scalar(&m[0]), scalar(&m[1]), scalar(&m[2]), scalar(&m[3]));
    // u - (tr u / 2) I is nilpotent
    let half = (a + d).rem_euclid(p) * ((p + 1) / 2) % p;
    [(a - half).rem_euclid(p), b, c]
}

fn det3(r: [[i64; 3]; 3], p: i64) -> i64 {
    let d = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
        + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
    d.rem_euclid(p)
}

fn isotropic(v: [i64; 3], p: i64) -> bool {
    (v[0] * v[0] + v[1] * v[2]).rem_euclid(p) == 0
}

impl Model {
    fn new(o: &MatrixOracle, p: i64) -> Model {
        let x = o.black_box();
        let involutions: Vec<GroupElement> = o.elements().into_iter().filter(|g| x.is_involution(g)).collect();
        let axes = involutions.iter().map(|g| axis_of(o, g)).collect();
        Model { p, involutions, axes }
    }

    fn coplanar(&self, a: [i64; 3], b: [i64; 3], c: [i64; 3]) -> bool {
        det3([a, b, c], self.p) == 0
    }

    /// Isotropic points on the matrix line spanned by `a` and `b`.
    fn isotropic_on(&self, a: [i64; 3], b: [i64; 3]) -> usize {
        let p = self.p;
        let mut n = isotropic(a, p) as usize;
        for t in 0..p {
            n += isotropic([(t * a[0] + b[0]) % p, (t * a[1] + b[1]) % p, (t * a[2] + b[2]) % p], p) as usize;
        }
        n
    }

    fn line_members(&self, a: [i64; 3], b: [i64; 3]) -> Vec<usize> {
        (0..self.axes.len()).filter(|&i| self.coplanar(a, b, self.axes[i])).collect()
    }
}

fn plane_members(plane: &Plane, m: &Model, line: &PlaneLine) -> Vec<usize> {
    (0..m.involutions.len()).filter(|&i| plane.on_line(&m.involutions[i], line)).collect()
}

/// Lines through all pairs, polarity, meets and collinearity at a small prime.
fn geometry_at(q: u64) -> Result<(), String> {
    let o = MatrixOracle::pgl2(ExplicitField::prime(q).unwrap(), q).unwrap();
    let x = o.black_box();
    let plane = Plane::new(x.clone(), conf()).unwrap();
    let m = Model::new(&o, q as i64);
    let n = m.involutions.len();
    if n as u64 != q * q {
        return Err(format!("q={q}: {n} involutions"));
    }
    let mut lines: Vec<(Vec<usize>, PlaneLine, [i64; 3], [i64; 3])> = Vec::new();
    for s in 0..n {
        for t in 0..s {
            let line = plane.join(&m.involutions[s], &m.involutions[t]).map_err(|e| e.to_string())?;
            let members = m.line_members(m.axes[s], m.axes[t]);
            let iso = m.isotropic_on(m.axes[s], m.axes[t]);
            if plane_members(&plane, &m, &line) != members || members.len() as u64 != q + 1 - iso as u64 {
                return Err(format!("q={q}: line through {s}, {t}"));
            }
            if (line.kind == LineKind::Parabolic) != (iso == 1) {
                return Err(format!("q={q}: line kind through {s}, {t}"));
            }
            if !lines.iter().any(|l| l.0 == members) {
                lines.push((members, line, m.axes[s], m.axes[t]));
            }
        }
    }
    if lines.len() as u64 != q * q + q + 1 {
        return Err(format!("q={q}: {} lines", lines.len()));
    }
    // polarity: the pole of the polar line of a point is the point
    for j in 0..n {
        let perp: Vec<usize> = (0..n).filter(|&i| i != j && x.commute(&m.involutions[i], &m.involutions[j])).collect();
        let line = plane.join(&m.involutions[perp[0]], &m.involutions[perp[1]]).map_err(|e| e.to_string())?;
        if !matches!(&line.pole, PlanePoint::Regular(g) if x.eq(g, &m.involutions[j])) {
            return Err(format!("q={q}: polarity at {j}"));
        }
    }
    for (_, line, a, b) in &lines {
        if let PlanePoint::Parabolic(u) = &line.pole {
            let v = nilpotent_axis(&o, u, m.p);
            if !isotropic(v, m.p) || !m.coplanar(*a, *b, v) {
                return Err(format!("q={q}: tangent pole"));
            }
        }
    }
    // two lines meet in exactly one point
    for i in 0..lines.len() {
        for l in 0..i {
            let (li, ll) = (&lines[i], &lines[l]);
            let common: Vec<usize> = li.0.iter().filter(|a| ll.0.contains(a)).copied().collect();
            match plane.meet(&li.1, &ll.1).map_err(|e| e.to_string())? {
                SerendipityOutcome::Ok(g) => {
                    let v = axis_of(&o, &g);
                    if common.len() != 1 || !x.eq(&g, &m.involutions[common[0]]) || !m.coplanar(li.2, li.3, v) {
                        return Err(format!("q={q}: meet of lines {i}, {l}"));
                    }
                }
                SerendipityOutcome::Unipotent(w) => {
                    let v = nilpotent_axis(&o, &w.u, m.p);
                    if !common.is_empty() || !isotropic(v, m.p) || !m.coplanar(li.2, li.3, v) || !m.coplanar(ll.2, ll.3, v) {
                        return Err(format!("q={q}: quadric meet of lines {i}, {l}"));
                    }
                }
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            for c in 0..b {
                let (r, s, t) = (&m.involutions[a], &m.involutions[b], &m.involutions[c]);
                if plane.collinear(r, s, t) != m.coplanar(m.axes[a], m.axes[b], m.axes[c]) {
                    return Err(format!("q={q}: collinearity of {a}, {b}, {c}"));
                }
            }
        }
    }
    Ok(())
}

/// The fourth harmonic point of `a, b, c` on the axis, by the complete quadrangle.
fn harmonic(k: &BlackBoxFieldK, a: &PlanePoint, b: &PlanePoint, c: &PlanePoint) -> Option<PlanePoint> {
    let plane = k.plane();
    let x = k.black_box();
    let axis_pole = PlanePoint::Regular(k.frame().e2.clone());
    let perp = |u: &PlanePoint, v: &PlanePoint| -> Option<PlanePoint> {
        if plane.same_point(u, v) {
            return None;
        }
        k.perp_with(u, v, Policy::Traverse).ok().and_then(|r| r.ok())
    };
    let off_axis = |pt: &PlanePoint| match pt {
        PlanePoint::Regular(g) => !x.commute(g, &k.frame().e2),
        PlanePoint::Parabolic(_) => false,
    };
    for _ in 0..50 {
        let r = PlanePoint::Regular(plane.engine().find_involution().ok()?);
        let z = PlanePoint::Regular(plane.engine().find_involution().ok()?);
        if !off_axis(&r) {
            continue;
        }
        let Some(rc) = perp(&r, c) else { continue };
        let Some(s) = perp(&rc, &z) else { continue };
        if !off_axis(&s) || plane.same_point(&s, &r) {
            continue;
        }
        let quad = || -> Option<PlanePoint> {
            let e = perp(&perp(a, &r)?, &perp(b, &s)?)?;
            let f = perp(&perp(b, &r)?, &perp(a, &s)?)?;
            perp(&perp(&e, &f)?, &axis_pole)
        };
        if let Some(d) = quad() {
            return Some(d);
        }
    }
    None
}

fn harmonic_at_thirteen(samples: usize) -> Result<(), String> {
    let o = MatrixOracle::pgl2(ExplicitField::prime(13).unwrap(), 13).unwrap();
    let x = o.black_box().clone();
    let frame = build_sym4(&x, conf()).unwrap();
    let k = BlackBoxFieldK::new(x.clone(), frame, Policy::Traverse, conf()).unwrap();
    let table = residue_table(&k, 13).unwrap();
    let minus_one = k.neg(&k.one());
    let d = harmonic(&k, k.zero().point(), &k.infinity(), k.one().point()).ok_or("no quadrangle for 0, inf, 1")?;
    if !k.eq(&k.from_point(d), &minus_one) {
        return Err("harmonic conjugate of 1 with respect to 0, inf".into());
    }
    for i in 0..samples as u64 {
        let (a, b, c) = (i % 13, (i * 5 + 3) % 13, (i * 7 + 9) % 13);
        if a == b || b == c || a == c {
            continue;
        }
        let pt = |r: u64| table[r as usize].point().clone();
        let d = harmonic(&k, &pt(a), &pt(b), &pt(c)).ok_or(format!("no quadrangle for {a}, {b}, {c}"))?;
        let (a, b, c) = (a as i64, b as i64, c as i64);
        let Some(d) = decode(&k, &table, &k.from_point(d.clone())) else {
            // only the midpoint of a and b has its conjugate at infinity
            if !k.plane().same_point(&d, &k.infinity()) || (2 * c - a - b).rem_euclid(13) != 0 {
                return Err(format!("harmonic conjugate of {c} with respect to {a}, {b}"));
            }
            continue;
        };
        let d = d as i64;
        // cross ratio (a, b; c, d) = -1
        if ((c - a) * (d - b) + (c - b) * (d - a)).rem_euclid(13) != 0 {
            return Err(format!("cross ratio of {a}, {b}, {c}, {d}"));
        }
    }
    Ok(())
}

#[test]
fn incidence_geometry() {
    let results = [geometry_at(5), geometry_at(7), harmonic_at_thirteen(120)];
    let pass = results.iter().all(|r| r.is_ok());
    let errors: Vec<&String> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    report(
        8,
        pass,
        &format!("lines, polarity, meets and collinearity exhaustive at q = 5, 7; harmonic conjugates at q = 13 {errors:?}"),
    );
    assert!(pass);
}

// --- 9: involutions in characteristic 2 ----------------------------------------

/// `g` is a nontrivial element of the unipotent radical fixing the image of `g - 1`.
fn in_sylow_two(o: &MatrixOracle, g: &GroupElement) -> bool {
    let f = o.field();
    let raw = o.to_matrix(g);
    let Some(root) = f.sqrt(&f.sub(&f.mul(&raw[0], &raw[3]), &f.mul(&raw[1], &raw[2]))) else {
        return false;
    };
    let m: Vec<FieldValue> = raw.iter().map(|v| f.div(v, &root).unwrap()).collect();
    let one = f.one();
    let n = [f.sub(&m[0], &one), m[1].clone(), m[2].clone(), f.sub(&m[3], &one)];
    if n.iter().all(|v| f.is_zero(v)) {
        return false;
    }
    let sq = [
        f.add(&f.mul(&n[0], &n[0]), &f.mul(&n[1], &n[2])),
        f.add(&f.mul(&n[0], &n[1]), &f.mul(&n[1], &n[3])),
        f.add(&f.mul(&n[2], &n[0]), &f.mul(&n[3], &n[2])),
        f.add(&f.mul(&n[2], &n[1]), &f.mul(&n[3], &n[3])),
    ];
    // the fixed vector v spans the image of n; the Sylow subgroup is 1 + t v w^T with w^T v = 0
    let v = if f.is_zero(&n[0]) && f.is_zero(&n[2]) { [n[1].clone(), n[3].clone()] } else { [n[0].clone(), n[2].clone()] };
    let fixes_v = f.is_zero(&f.add(&f.mul(&n[0], &v[0]), &f.mul(&n[1], &v[1]))) && f.is_zero(&f.add(&f.mul(&n[2], &v[0]), &f.mul(&n[3], &v[1])));
    sq.iter().all(|v| f.is_zero(v)) && fixes_v && o.order(g) == 2
}

#[test]
fn involutions_in_even_characteristic() {
    let mut results = Vec::new();
    for n in 2..=5usize {
        let o = MatrixOracle::psl2(ExplicitField::new(2, n).unwrap(), n as u64).unwrap();
        let good = (0..20u64)
            .filter(|&seed| {
                let x = o.black_box().fork(seed);
                find_involution_even_char(&x, conf()).is_ok_and(|g| in_sylow_two(&o, &g))
            })
            .count();
        results.push((1u64 << n, good));
    }
    let pass = results.iter().all(|&(_, g)| g == 20);
    let text: Vec<String> = results.iter().map(|(q, g)| format!("q={q}:{g}/20")).collect();
    report(9, pass, &format!("involutions in PSL2(2^n) inside a Sylow 2-subgroup {}", text.join(" ")));
    assert!(pass);
}

// --- 10: operation counts -------------------------------------------------------

#[test]
fn operation_counts_stay_in_envelope() {
    let mut rows: Vec<BenchRow> = Vec::new();
    for q in [13u64, 101, 1009, 10007] {
        rows.extend(bench_q(q, MatrixKind::Pgl2, 1, conf(), 10).unwrap());
    }
    let of = |name: &str| -> Vec<BenchRow> { rows.iter().filter(|r| r.procedure == name).cloned().collect() };
    let mut pass = true;
    let mut text = Vec::new();
    for name in ["add", "mul", "reification"] {
        let (ok, c) = within_envelope(&of(name));
        pass &= ok;
        text.push(format!("{name}:{ok} (c={c:.1})"));
    }
    for (name, ops) in [("neg", 2), ("inv", 3)] {
        let ok = of(name).iter().all(|r| r.min_ops == ops && r.max_ops == ops);
        pass &= ok;
        text.push(format!("{name}=={ops}:{ok}"));
    }
    for r in &rows {
        info(10, &r.to_csv());
    }
    report(10, pass, &format!("operation counts over q = 13, 101, 1009, 10007: {}", text.join(" ")));
    assert!(pass);
}
