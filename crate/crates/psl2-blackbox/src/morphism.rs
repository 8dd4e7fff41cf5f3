//! The adjoint representation `rho: X -> SO3(K)` and its inverse.
//!
//! Row `i` of `rho(x)` spans the point `e_i^x`. The three row scalars are
//! fixed without square roots: the images of `d1` and `d2` give their ratios,
//! and orthogonality with `det = 1` gives the common factor.

use crate::bbox::GroupElement;
use crate::involution::SerendipityOutcome;
use crate::kfield::{BlackBoxFieldK, FieldElementK, KError, Policy};
use crate::plane::PlanePoint;
use num_bigint::BigUint;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MorphismError {
    #[error(transparent)]
    K(#[from] KError),
    #[error("matrix is not in SO3(K)")]
    NotSo3,
    #[error("element does not act on the frame as a rotation")]
    Degenerate,
    #[error("{0} is not the characteristic of K")]
    WrongCharacteristic(u64),
}

/// A 3x3 matrix over the black-box field.
#[derive(Debug, Clone)]
pub struct Matrix3K {
    pub rows: [[FieldElementK; 3]; 3],
}

impl Matrix3K {
    pub fn entry(&self, i: usize, j: usize) -> &FieldElementK {
        &self.rows[i][j]
    }

    pub fn transpose(&self) -> Matrix3K {
        Matrix3K { rows: std::array::from_fn(|i| std::array::from_fn(|j| self.rows[j][i].clone())) }
    }
}

/// Field arithmetic that passes through the quadric instead of reporting it.
struct Arith<'a>(&'a BlackBoxFieldK);

fn through<T>(r: Result<SerendipityOutcome<T>, KError>) -> Result<T, KError> {
    match r? {
        SerendipityOutcome::Ok(v) => Ok(v),
        SerendipityOutcome::Unipotent(_) => unreachable!("traversal never interrupts"),
    }
}

type Vec3 = [FieldElementK; 3];

impl Arith<'_> {
    fn add(&self, a: &FieldElementK, b: &FieldElementK) -> Result<FieldElementK, KError> {
        through(self.0.add_with(a, b, Policy::Traverse))
    }

    fn sub(&self, a: &FieldElementK, b: &FieldElementK) -> Result<FieldElementK, KError> {
        self.add(a, &self.0.neg(b))
    }

    fn mul(&self, a: &FieldElementK, b: &FieldElementK) -> Result<FieldElementK, KError> {
        through(self.0.mul_with(a, b, Policy::Traverse))
    }

    fn div(&self, a: &FieldElementK, b: &FieldElementK) -> Result<FieldElementK, KError> {
        self.mul(a, &self.0.inv(b)?)
    }

    fn is_zero(&self, a: &FieldElementK) -> bool {
        self.0.is_zero(a)
    }

    fn dot(&self, a: &Vec3, b: &Vec3) -> Result<FieldElementK, KError> {
        let mut acc = self.mul(&a[0], &b[0])?;
        for i in 1..3 {
            acc = self.add(&acc, &self.mul(&a[i], &b[i])?)?;
        }
        Ok(acc)
    }

    fn cross(&self, a: &Vec3, b: &Vec3) -> Result<Vec3, KError> {
        let c = |i: usize, j: usize| -> Result<FieldElementK, KError> { self.sub(&self.mul(&a[i], &b[j])?, &self.mul(&a[j], &b[i])?) };
        Ok([c(1, 2)?, c(2, 0)?, c(0, 1)?])
    }

    fn scale(&self, s: &FieldElementK, v: &Vec3) -> Result<Vec3, KError> {
        Ok([self.mul(s, &v[0])?, self.mul(s, &v[1])?, self.mul(s, &v[2])?])
    }

    fn is_null(&self, v: &Vec3) -> bool {
        v.iter().all(|c| self.is_zero(c))
    }

    fn det(&self, m: &Matrix3K) -> Result<FieldElementK, KError> {
        let r = &m.rows;
        self.dot(&r[0], &self.cross(&r[1], &r[2])?)
    }
}

fn reg(g: &GroupElement) -> PlanePoint {
    PlanePoint::Regular(g.clone())
}

/// Homogeneous coordinates of a regular point.
fn homogeneous(k: &BlackBoxFieldK, g: &GroupElement) -> Result<Vec3, KError> {
    let (x, f) = (k.black_box(), k.frame());
    if x.eq(g, &f.e1) {
        return Ok([k.one(), k.zero(), k.zero()]);
    }
    if x.commute(g, &f.e3) && !x.eq(g, &f.e3) {
        // (a, b, 0): meet the line through it and e3 with the line x2 = x3
        let through_e3 = through(k.perp_with(&reg(g), &reg(&f.e3), Policy::Traverse))?;
        let slope = through(k.perp_with(&reg(&f.d1), &reg(&f.e1), Policy::Traverse))?;
        let q = through(k.perp_with(&through_e3, &slope, Policy::Traverse))?;
        let (a, b) = through(k.affine_coordinates_with(&q, Policy::Traverse))?;
        return Ok([a, b, k.zero()]);
    }
    let (a, b) = through(k.affine_coordinates_with(&reg(g), Policy::Traverse))?;
    Ok([a, b, k.one()])
}

/// The point with homogeneous coordinates `v`.
fn point_of(k: &BlackBoxFieldK, v: &Vec3) -> Result<PlanePoint, KError> {
    let ar = Arith(k);
    let f = k.frame();
    if !ar.is_zero(&v[2]) {
        let (a, b) = (ar.div(&v[0], &v[2])?, ar.div(&v[1], &v[2])?);
        return through(k.point_from_coordinates_with(&a, &b, Policy::Traverse));
    }
    if ar.is_zero(&v[0]) {
        return Ok(reg(&f.e2));
    }
    if ar.is_zero(&v[1]) {
        return Ok(reg(&f.e1));
    }
    // (a, b, 0) is perpendicular to e3 and to (-b, a, 1)
    let other = through(k.point_from_coordinates_with(&k.neg(&v[1]), &v[0], Policy::Traverse))?;
    through(k.perp_with(&reg(&f.e3), &other, Policy::Traverse))
}

pub fn identity(k: &BlackBoxFieldK) -> Matrix3K {
    diagonal(k, [true, true, true])
}

/// `diag(+-1, +-1, +-1)`, `true` meaning `+1`.
pub fn diagonal(k: &BlackBoxFieldK, signs: [bool; 3]) -> Matrix3K {
    let (one, zero) = (k.one(), k.zero());
    Matrix3K {
        rows: std::array::from_fn(|i| {
            std::array::from_fn(|j| match (i == j, signs[i]) {
                (false, _) => zero.clone(),
                (true, true) => one.clone(),
                (true, false) => k.neg(&one),
            })
        }),
    }
}

/// Entrywise equality.
pub fn matrix_eq(k: &BlackBoxFieldK, a: &Matrix3K, b: &Matrix3K) -> bool {
    (0..3).all(|i| (0..3).all(|j| k.eq(&a.rows[i][j], &b.rows[i][j])))
}

pub fn so3k_mul(k: &BlackBoxFieldK, a: &Matrix3K, b: &Matrix3K) -> Result<Matrix3K, KError> {
    let ar = Arith(k);
    let bt = b.transpose();
    let mut rows: Vec<Vec3> = Vec::with_capacity(3);
    for i in 0..3 {
        rows.push([ar.dot(&a.rows[i], &bt.rows[0])?, ar.dot(&a.rows[i], &bt.rows[1])?, ar.dot(&a.rows[i], &bt.rows[2])?]);
    }
    let rows: [Vec3; 3] = rows.try_into().expect("three rows");
    Ok(Matrix3K { rows })
}

/// `M M^T = I` and `det M = 1`.
pub fn so3k_check(k: &BlackBoxFieldK, m: &Matrix3K) -> Result<bool, KError> {
    let gram = so3k_mul(k, m, &m.transpose())?;
    Ok(matrix_eq(k, &gram, &identity(k)) && k.eq(&Arith(k).det(m)?, &k.one()))
}

pub fn is_symmetric(k: &BlackBoxFieldK, m: &Matrix3K) -> bool {
    (0..3).all(|i| (0..i).all(|j| k.eq(&m.rows[i][j], &m.rows[j][i])))
}

/// The matrix of `x` acting on the plane.
pub fn rho(k: &BlackBoxFieldK, x: &GroupElement) -> Result<Matrix3K, MorphismError> {
    let ar = Arith(k);
    let (bb, f) = (k.black_box(), k.frame());
    let image = |g: &GroupElement| homogeneous(k, &bb.conj(g, x));
    let u = [image(&f.e1)?, image(&f.e2)?, image(&f.e3)?];
    // d2^x spans row1 + row3, d1^x spans row2 + row3
    let w = [image(&f.d2)?, image(&f.d1)?];
    let n: Vec<FieldElementK> = u.iter().map(|r| ar.dot(r, r)).collect::<Result<_, _>>()?;
    let mut ratio = Vec::with_capacity(2);
    for i in 0..2 {
        let num = ar.mul(&ar.dot(&w[i], &u[i])?, &n[2])?;
        let den = ar.mul(&ar.dot(&w[i], &u[2])?, &n[i])?;
        if ar.is_zero(&den) || ar.is_zero(&num) {
            return Err(MorphismError::Degenerate);
        }
        ratio.push(ar.div(&num, &den)?);
    }
    let scaled = Matrix3K { rows: [ar.scale(&ratio[0], &u[0])?, ar.scale(&ratio[1], &u[1])?, u[2].clone()] };
    let det = ar.det(&scaled)?;
    if ar.is_zero(&det) {
        return Err(MorphismError::Degenerate);
    }
    let lambda = ar.div(&n[2], &det)?;
    let rows = [ar.scale(&lambda, &scaled.rows[0])?, ar.scale(&lambda, &scaled.rows[1])?, ar.scale(&lambda, &scaled.rows[2])?];
    Ok(Matrix3K { rows })
}

/// The half-turn about `v`: `2 v v^T / (v.v) - I`.
fn half_turn(k: &BlackBoxFieldK, v: &Vec3) -> Result<Option<Matrix3K>, KError> {
    let ar = Arith(k);
    let n = ar.dot(v, v)?;
    if ar.is_zero(&n) {
        return Ok(None);
    }
    let two = ar.add(&k.one(), &k.one())?;
    let c = ar.div(&two, &n)?;
    let mut rows: Vec<Vec3> = Vec::with_capacity(3);
    for i in 0..3 {
        let mut row = ar.scale(&ar.mul(&c, &v[i])?, v)?;
        row[i] = ar.sub(&row[i], &k.one())?;
        rows.push(row);
    }
    Ok(Some(Matrix3K { rows: rows.try_into().expect("three rows") }))
}

/// The element of `X` mapped to `m`.
pub fn rho_inverse(k: &BlackBoxFieldK, m: &Matrix3K) -> Result<GroupElement, MorphismError> {
    if !so3k_check(k, m)? {
        return Err(MorphismError::NotSo3);
    }
    let ar = Arith(k);
    let x = k.black_box();
    if matrix_eq(k, m, &identity(k)) {
        return Ok(x.identity());
    }
    let minus_id = |m: &Matrix3K| -> Result<[Vec3; 3], KError> {
        let mut rows = m.rows.clone();
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = ar.sub(&row[i], &k.one())?;
        }
        Ok(rows)
    };
    if is_symmetric(k, m) {
        // the axis spans the image of M + I
        let mut rows = m.rows.clone();
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = ar.add(&row[i], &k.one())?;
        }
        let axis = rows.iter().find(|r| !ar.is_null(r)).ok_or(MorphismError::NotSo3)?;
        return match point_of(k, axis)? {
            PlanePoint::Regular(g) => Ok(g),
            PlanePoint::Parabolic(_) => Err(MorphismError::NotSo3),
        };
    }
    // the fixed axis is the kernel of M - I; any half-turn about a vector
    // perpendicular to it splits M into two half-turns
    let r = minus_id(m)?;
    let mut axis = None;
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        let c = ar.cross(&r[a], &r[b])?;
        if !ar.is_null(&c) {
            axis = Some(c);
            break;
        }
    }
    let axis = axis.ok_or(MorphismError::NotSo3)?;
    let basis = [[k.one(), k.zero(), k.zero()], [k.zero(), k.one(), k.zero()], [k.zero(), k.zero(), k.one()]];
    let mut helpers: Vec<Vec3> = basis.to_vec();
    for i in 0..3 {
        let mut v = basis[i].clone();
        v[(i + 1) % 3] = k.one();
        helpers.push(v);
    }
    for h in &helpers {
        let w = ar.cross(&axis, h)?;
        if ar.is_null(&w) {
            continue;
        }
        let Some(sw) = half_turn(k, &w)? else { continue };
        let first = so3k_mul(k, m, &sw)?;
        if !is_symmetric(k, &first) {
            continue;
        }
        let a = rho_inverse(k, &first)?;
        let b = rho_inverse(k, &sw)?;
        return Ok(x.mul(&a, &b));
    }
    Err(MorphismError::Degenerate)
}

/// The image of the residue `a` of the prime field of characteristic `p`.
pub fn standard_to_k(k: &BlackBoxFieldK, p: u64, a: u64) -> Result<FieldElementK, MorphismError> {
    let check = through(k.residue_image_with(&BigUint::from(p), Policy::Traverse))?;
    if !k.is_zero(&check) {
        return Err(MorphismError::WrongCharacteristic(p));
    }
    Ok(through(k.residue_image_with(&BigUint::from(a % p), Policy::Traverse))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_field::ExplicitField;
    use crate::frame::build_sym4;
    use crate::involution::Confidence;
    use crate::kfield::{decode, residue_table};
    use crate::oracle::MatrixOracle;

    fn field(p: u64, seed: u64) -> (MatrixOracle, BlackBoxFieldK) {
        let o = MatrixOracle::pgl2(ExplicitField::new(p, 1).unwrap(), seed).unwrap();
        let x = o.black_box().clone();
        let frame = build_sym4(&x, Confidence::default()).unwrap();
        let k = BlackBoxFieldK::new(x, frame, Policy::Traverse, Confidence::default()).unwrap();
        (o, k)
    }

    fn decoded(k: &BlackBoxFieldK, table: &[FieldElementK], m: &Matrix3K) -> [[u64; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| decode(k, table, &m.rows[i][j]).unwrap()))
    }

    #[test]
    fn frame_images() {
        let (_, k) = field(13, 1);
        let t = residue_table(&k, 13).unwrap();
        let f = k.frame().clone();
        assert_eq!(decoded(&k, &t, &rho(&k, &f.e1).unwrap()), [[1, 0, 0], [0, 12, 0], [0, 0, 12]]);
        assert_eq!(decoded(&k, &t, &rho(&k, &f.e2).unwrap()), [[12, 0, 0], [0, 1, 0], [0, 0, 12]]);
        assert_eq!(decoded(&k, &t, &rho(&k, &f.e3).unwrap()), [[12, 0, 0], [0, 12, 0], [0, 0, 1]]);
        assert!(matrix_eq(&k, &rho(&k, &k.black_box().identity()).unwrap(), &identity(&k)));
        // e_i^theta = e_(i+1) forces the cyclic pattern up to signs
        let r = rho(&k, &f.theta).unwrap();
        let theta = decoded(&k, &t, &r);
        for (i, row) in theta.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(v != 0, j == (i + 1) % 3);
                assert!(v == 0 || v == 1 || v == 12);
            }
        }
        let cube = so3k_mul(&k, &so3k_mul(&k, &r, &r).unwrap(), &r).unwrap();
        assert!(matrix_eq(&k, &cube, &identity(&k)));
    }

    #[test]
    fn homomorphism_and_round_trip() {
        let (o, k) = field(13, 2);
        let x = o.black_box();
        for _ in 0..10 {
            let (a, b) = (x.random(), x.random());
            let (ra, rb) = (rho(&k, &a).unwrap(), rho(&k, &b).unwrap());
            assert!(so3k_check(&k, &ra).unwrap());
            let rab = rho(&k, &x.mul(&a, &b)).unwrap();
            assert!(matrix_eq(&k, &rab, &so3k_mul(&k, &ra, &rb).unwrap()));
            assert!(x.eq(&rho_inverse(&k, &ra).unwrap(), &a));
        }
    }

    #[test]
    fn involutions_are_symmetric() {
        let (o, k) = field(11, 3);
        let x = o.black_box();
        let i = x.search(200, "involution", |g| x.is_involution(g)).unwrap();
        assert!(is_symmetric(&k, &rho(&k, &i).unwrap()));
    }

    #[test]
    fn residue_map() {
        let (_, k) = field(7, 4);
        let t = residue_table(&k, 7).unwrap();
        for a in 0..7 {
            assert!(k.eq(&standard_to_k(&k, 7, a).unwrap(), &t[a as usize]));
        }
        assert_eq!(standard_to_k(&k, 5, 1).unwrap_err(), MorphismError::WrongCharacteristic(5));
        let rejected = Matrix3K { rows: [[k.one(), k.one(), k.zero()], [k.zero(), k.one(), k.zero()], [k.zero(), k.zero(), k.one()]] };
        assert_eq!(rho_inverse(&k, &rejected).unwrap_err(), MorphismError::NotSo3);
    }
}
