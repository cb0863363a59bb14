//! Slow, generic field and curve arithmetic over `BigUint`.
//!
//! Used only by the curve search and parameter validation, where the prime
//! is a runtime value. Everything assumes `p = 3 (mod 4)`, which holds for
//! every BN prime with odd `u`, so `Fp2 = Fp[i] / (i^2 + 1)`.

use num_bigint::BigUint;
use num_traits::{One, Zero};

pub(crate) trait FieldCtx {
    type E: Clone + PartialEq + std::fmt::Debug;

    fn zero(&self) -> Self::E;
    fn one(&self) -> Self::E;
    fn from_u64(&self, v: u64) -> Self::E;
    fn add(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn sub(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn mul(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn inv(&self, a: &Self::E) -> Option<Self::E>;
    fn is_zero(&self, a: &Self::E) -> bool;

    fn square(&self, a: &Self::E) -> Self::E {
        self.mul(a, a)
    }

    fn neg(&self, a: &Self::E) -> Self::E {
        self.sub(&self.zero(), a)
    }

    fn pow(&self, a: &Self::E, e: &BigUint) -> Self::E {
        let mut acc = self.one();
        for i in (0..e.bits()).rev() {
            acc = self.square(&acc);
            if e.bit(i) {
                acc = self.mul(&acc, a);
            }
        }
        acc
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Fp {
    pub p: BigUint,
}

impl Fp {
    pub fn new(p: BigUint) -> Self {
        Self { p }
    }

    pub fn sqrt(&self, a: &BigUint) -> Option<BigUint> {
        let e = (&self.p + 1u32) >> 2;
        let root = a.modpow(&e, &self.p);
        if (&root * &root) % &self.p == a % &self.p {
            Some(root)
        } else {
            None
        }
    }

    /// True if `a > (p - 1) / 2`.
    pub fn is_lexicographically_largest(&self, a: &BigUint) -> bool {
        let half = (&self.p - 1u32) >> 1;
        *a > half
    }
}

impl FieldCtx for Fp {
    type E = BigUint;

    fn zero(&self) -> BigUint {
        BigUint::zero()
    }
    fn one(&self) -> BigUint {
        BigUint::one()
    }
    fn from_u64(&self, v: u64) -> BigUint {
        BigUint::from(v) % &self.p
    }
    fn add(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a + b) % &self.p
    }
    fn sub(&self, a: &BigUint, b: &BigUint) -> BigUint {
        ((a + &self.p) - b) % &self.p
    }
    fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % &self.p
    }
    fn inv(&self, a: &BigUint) -> Option<BigUint> {
        if a.is_zero() {
            return None;
        }
        Some(a.modpow(&(&self.p - 2u32), &self.p))
    }
    fn is_zero(&self, a: &BigUint) -> bool {
        a.is_zero()
    }
    fn pow(&self, a: &BigUint, e: &BigUint) -> BigUint {
        a.modpow(e, &self.p)
    }
}

/// `c0 + c1 * i`
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Fp2Elem {
    pub c0: BigUint,
    pub c1: BigUint,
}

#[derive(Clone, Debug)]
pub(crate) struct Fp2 {
    pub base: Fp,
}

impl Fp2 {
    pub fn new(p: BigUint) -> Self {
        Self { base: Fp::new(p) }
    }

    pub fn elem(&self, c0: u64, c1: u64) -> Fp2Elem {
        Fp2Elem {
            c0: self.base.from_u64(c0),
            c1: self.base.from_u64(c1),
        }
    }

    pub fn conjugate(&self, a: &Fp2Elem) -> Fp2Elem {
        Fp2Elem {
            c0: a.c0.clone(),
            c1: self.base.neg(&a.c1),
        }
    }

    /// Square root for `p = 3 (mod 4)`: Adj and Rodriguez-Henriquez, algorithm 9.
    pub fn sqrt(&self, a: &Fp2Elem) -> Option<Fp2Elem> {
        if self.is_zero(a) {
            return Some(self.zero());
        }
        let p = &self.base.p;
        let minus_one = self.neg(&self.one());
        let a1 = self.pow(a, &((p - 3u32) >> 2));
        let alpha = self.mul(&self.square(&a1), a);
        let a0 = self.mul(&self.conjugate(&alpha), &alpha);
        if a0 == minus_one {
            return None;
        }
        let x0 = self.mul(&a1, a);
        let root = if alpha == minus_one {
            self.mul(&self.elem(0, 1), &x0)
        } else {
            let b = self.pow(&self.add(&self.one(), &alpha), &((p - 1u32) >> 1));
            self.mul(&b, &x0)
        };
        (self.square(&root) == *a).then_some(root)
    }

    /// Lexicographic order on `(c1, c0)`.
    pub fn is_lexicographically_largest(&self, a: &Fp2Elem) -> bool {
        if !a.c1.is_zero() {
            self.base.is_lexicographically_largest(&a.c1)
        } else {
            self.base.is_lexicographically_largest(&a.c0)
        }
    }
}

impl FieldCtx for Fp2 {
    type E = Fp2Elem;

    fn zero(&self) -> Fp2Elem {
        Fp2Elem {
            c0: BigUint::zero(),
            c1: BigUint::zero(),
        }
    }
    fn one(&self) -> Fp2Elem {
        Fp2Elem {
            c0: BigUint::one(),
            c1: BigUint::zero(),
        }
    }
    fn from_u64(&self, v: u64) -> Fp2Elem {
        self.elem(v, 0)
    }
    fn add(&self, a: &Fp2Elem, b: &Fp2Elem) -> Fp2Elem {
        Fp2Elem {
            c0: self.base.add(&a.c0, &b.c0),
            c1: self.base.add(&a.c1, &b.c1),
        }
    }
    fn sub(&self, a: &Fp2Elem, b: &Fp2Elem) -> Fp2Elem {
        Fp2Elem {
            c0: self.base.sub(&a.c0, &b.c0),
            c1: self.base.sub(&a.c1, &b.c1),
        }
    }
    fn mul(&self, a: &Fp2Elem, b: &Fp2Elem) -> Fp2Elem {
        let f = &self.base;
        let t0 = f.mul(&a.c0, &b.c0);
        let t1 = f.mul(&a.c1, &b.c1);
        Fp2Elem {
            c0: f.sub(&t0, &t1),
            c1: f.add(&f.mul(&a.c0, &b.c1), &f.mul(&a.c1, &b.c0)),
        }
    }
    fn inv(&self, a: &Fp2Elem) -> Option<Fp2Elem> {
        let f = &self.base;
        let norm = f.add(&f.mul(&a.c0, &a.c0), &f.mul(&a.c1, &a.c1));
        let inv = f.inv(&norm)?;
        Some(Fp2Elem {
            c0: f.mul(&a.c0, &inv),
            c1: f.neg(&f.mul(&a.c1, &inv)),
        })
    }
    fn is_zero(&self, a: &Fp2Elem) -> bool {
        a.c0.is_zero() && a.c1.is_zero()
    }
}

/// Affine point on `y^2 = x^3 + b`.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Point<E> {
    Infinity,
    Affine { x: E, y: E },
}

pub(crate) struct ShortWeierstrass<F: FieldCtx> {
    pub field: F,
    pub b: F::E,
}

impl<F: FieldCtx> ShortWeierstrass<F> {
    pub fn new(field: F, b: F::E) -> Self {
        Self { field, b }
    }

    pub fn rhs(&self, x: &F::E) -> F::E {
        let f = &self.field;
        f.add(&f.mul(&f.square(x), x), &self.b)
    }

    pub fn is_on_curve(&self, p: &Point<F::E>) -> bool {
        match p {
            Point::Infinity => true,
            Point::Affine { x, y } => self.field.square(y) == self.rhs(x),
        }
    }

    pub fn add(&self, p: &Point<F::E>, q: &Point<F::E>) -> Point<F::E> {
        let f = &self.field;
        match (p, q) {
            (Point::Infinity, _) => q.clone(),
            (_, Point::Infinity) => p.clone(),
            (Point::Affine { x: x1, y: y1 }, Point::Affine { x: x2, y: y2 }) => {
                let lambda = if x1 == x2 {
                    if f.is_zero(&f.add(y1, y2)) {
                        return Point::Infinity;
                    }
                    // tangent: 3x^2 / 2y
                    let num = f.mul(&f.from_u64(3), &f.square(x1));
                    let den = f.add(y1, y1);
                    f.mul(&num, &f.inv(&den).expect("2y != 0"))
                } else {
                    let num = f.sub(y2, y1);
                    let den = f.sub(x2, x1);
                    f.mul(&num, &f.inv(&den).expect("x2 != x1"))
                };
                let x3 = f.sub(&f.sub(&f.square(&lambda), x1), x2);
                let y3 = f.sub(&f.mul(&lambda, &f.sub(x1, &x3)), y1);
                Point::Affine { x: x3, y: y3 }
            }
        }
    }

    pub fn mul(&self, k: &BigUint, p: &Point<F::E>) -> Point<F::E> {
        let mut acc = Point::Infinity;
        for i in (0..k.bits()).rev() {
            acc = self.add(&acc, &acc);
            if k.bit(i) {
                acc = self.add(&acc, p);
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_fp2() -> Fp2 {
        // 103 = 3 (mod 4)
        Fp2::new(BigUint::from(103u32))
    }

    #[test]
    fn fp2_inverse_and_sqrt() {
        let f = small_fp2();
        let mut squares = 0;
        for c0 in 0..20u64 {
            for c1 in 0..20u64 {
                let a = f.elem(c0, c1);
                if f.is_zero(&a) {
                    continue;
                }
                let inv = f.inv(&a).unwrap();
                assert_eq!(f.mul(&a, &inv), f.one());
                if let Some(r) = f.sqrt(&a) {
                    assert_eq!(f.square(&r), a);
                    squares += 1;
                }
                let sq = f.square(&a);
                assert!(f.sqrt(&sq).is_some());
            }
        }
        // roughly half of the nonzero elements are squares
        assert!(squares > 150 && squares < 250, "{squares}");
    }

    #[test]
    fn curve_group_law_small() {
        // y^2 = x^3 + 3 over F_103
        let curve = ShortWeierstrass::new(Fp::new(BigUint::from(103u32)), BigUint::from(3u32));
        let f = &curve.field;
        let mut points = vec![Point::Infinity];
        for x in 0..103u64 {
            let rhs = curve.rhs(&BigUint::from(x));
            if let Some(y) = f.sqrt(&rhs) {
                points.push(Point::Affine { x: BigUint::from(x), y: y.clone() });
                if !y.is_zero() {
                    points.push(Point::Affine { x: BigUint::from(x), y: f.neg(&y) });
                }
            }
        }
        let n = BigUint::from(points.len());
        for p in &points {
            assert!(curve.is_on_curve(p));
            assert_eq!(curve.mul(&n, p), Point::Infinity);
        }
        let (a, b, c) = (&points[1], &points[3], &points[5]);
        assert_eq!(curve.add(&curve.add(a, b), c), curve.add(a, &curve.add(b, c)));
        assert_eq!(curve.add(a, b), curve.add(b, a));
    }
}
