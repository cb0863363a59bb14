use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use ark_bn254::{Bn254, Fq, Fq12, Fq2, Fq6, Fr, G1Affine, G1Projective, G2Affine, G2Projective};
use ark_ec::pairing::{Pairing, PairingOutput};
use ark_ec::{AffineRepr, CurveGroup};
use ark_ff::{BigInteger, Field, One, PrimeField, UniformRand, Zero};
use num_bigint::BigUint;
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha512};

use super::curve::{FLAG_INFINITY, FLAG_LARGEST};
use super::instrument::{record, Op};
use super::PairingError;

pub const SCALAR_LEN: usize = 32;
pub const G1_ENCODED_LEN: usize = 32;
pub const G2_ENCODED_LEN: usize = 64;
pub const GT_ENCODED_LEN: usize = 12 * 32;

type Gt = PairingOutput<Bn254>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Group {
    G1,
    G2,
    Gt,
}

impl Group {
    pub fn encoded_len(self) -> usize {
        match self {
            Group::G1 => G1_ENCODED_LEN,
            Group::G2 => G2_ENCODED_LEN,
            Group::Gt => GT_ENCODED_LEN,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::G1 => "G1",
            Group::G2 => "G2",
            Group::Gt => "GT",
        })
    }
}

/// An integer modulo the group order `r`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Scalar(pub(crate) Fr);

impl Scalar {
    pub fn zero() -> Self {
        Scalar(Fr::zero())
    }

    pub fn one() -> Self {
        Scalar(Fr::one())
    }

    pub fn from_u64(v: u64) -> Self {
        Scalar(Fr::from(v))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn inverse(&self) -> Option<Self> {
        self.0.inverse().map(Scalar)
    }

    /// 32-byte big-endian.
    pub fn to_bytes(&self) -> [u8; SCALAR_LEN] {
        let bytes = self.0.into_bigint().to_bytes_be();
        bytes.try_into().expect("Fr is 32 bytes")
    }

    /// Rejects values `>= r`.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PairingError> {
        if bytes.len() > SCALAR_LEN {
            return Err(PairingError::InvalidScalar(format!("{} bytes is too long", bytes.len())));
        }
        let v = BigUint::from_bytes_be(bytes);
        if v >= *scalar_modulus() {
            return Err(PairingError::InvalidScalar("value is not reduced modulo r".into()));
        }
        Ok(Scalar(Fr::from_be_bytes_mod_order(bytes)))
    }

    pub fn to_biguint(&self) -> BigUint {
        self.0.into()
    }

    pub fn modulus() -> BigUint {
        scalar_modulus().clone()
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar({:#x})", self.to_biguint())
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 + rhs.0)
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 - rhs.0)
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 * rhs.0)
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-self.0)
    }
}

impl std::iter::Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |a, b| a + b)
    }
}

fn scalar_modulus() -> &'static BigUint {
    static R: OnceLock<BigUint> = OnceLock::new();
    R.get_or_init(|| Fr::MODULUS.into())
}

fn base_modulus() -> &'static BigUint {
    static P: OnceLock<BigUint> = OnceLock::new();
    P.get_or_init(|| Fq::MODULUS.into())
}

/// An element of G1, G2 or GT on the pinned BN254 curve.
///
/// All three groups are written additively: [`group_add`] on GT multiplies
/// in `F_p^12`, and [`scalar_mul`] on GT exponentiates.
#[derive(Clone, PartialEq, Eq)]
pub enum GroupElement {
    G1(G1Projective),
    G2(G2Projective),
    Gt(Gt),
}

impl GroupElement {
    pub fn group(&self) -> Group {
        match self {
            GroupElement::G1(_) => Group::G1,
            GroupElement::G2(_) => Group::G2,
            GroupElement::Gt(_) => Group::Gt,
        }
    }

    pub fn identity(group: Group) -> Self {
        match group {
            Group::G1 => GroupElement::G1(G1Projective::zero()),
            Group::G2 => GroupElement::G2(G2Projective::zero()),
            Group::Gt => GroupElement::Gt(Gt::zero()),
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            GroupElement::G1(p) => p.is_zero(),
            GroupElement::G2(p) => p.is_zero(),
            GroupElement::Gt(x) => x.is_zero(),
        }
    }

    /// Canonical encoding: compressed big-endian points, or the twelve
    /// `F_p` coefficients of a GT element in tower order.
    pub fn encode(&self) -> Vec<u8> {
        match self {
            GroupElement::G1(p) => encode_g1(&p.into_affine()).to_vec(),
            GroupElement::G2(p) => encode_g2(&p.into_affine()).to_vec(),
            GroupElement::Gt(x) => encode_gt(&x.0),
        }
    }

    /// Decodes and checks curve and subgroup membership.
    pub fn decode(group: Group, bytes: &[u8]) -> Result<Self, PairingError> {
        let err = |reason: &str| PairingError::InvalidEncoding { group, reason: reason.to_string() };
        if bytes.len() != group.encoded_len() {
            return Err(err(&format!("expected {} bytes, got {}", group.encoded_len(), bytes.len())));
        }
        match group {
            Group::G1 => decode_g1(bytes).map(|p| GroupElement::G1(p.into())).map_err(|r| err(&r)),
            Group::G2 => decode_g2(bytes).map(|p| GroupElement::G2(p.into())).map_err(|r| err(&r)),
            Group::Gt => decode_gt(bytes).map(|x| GroupElement::Gt(PairingOutput(x))).map_err(|r| err(&r)),
        }
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.encode())
    }

    pub fn from_hex(group: Group, s: &str) -> Result<Self, PairingError> {
        if s.chars().any(|c| c.is_ascii_uppercase()) {
            return Err(PairingError::InvalidEncoding { group, reason: "hex must be lowercase".into() });
        }
        let bytes = hex::decode(s)
            .map_err(|e| PairingError::InvalidEncoding { group, reason: format!("bad hex: {e}") })?;
        Self::decode(group, &bytes)
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hex = self.to_hex();
        write!(f, "{}({}..)", self.group(), &hex[..16])
    }
}

fn wrong(expected: Group, got: Group) -> PairingError {
    PairingError::WrongGroup { expected: expected.to_string(), got: got.to_string() }
}

/// Optimal ate pairing `e: G1 x G2 -> GT`. Bumps the pairing counter.
pub fn pair(a: &GroupElement, b: &GroupElement) -> Result<GroupElement, PairingError> {
    let (a, b) = match (a, b) {
        (GroupElement::G1(a), GroupElement::G2(b)) => (a, b),
        (GroupElement::G1(_), other) => return Err(wrong(Group::G2, other.group())),
        (other, _) => return Err(wrong(Group::G1, other.group())),
    };
    record(Op::Pairing);
    Ok(GroupElement::Gt(Bn254::pairing(a.into_affine(), b.into_affine())))
}

/// `x * e` (exponentiation for GT). Counted per group.
pub fn scalar_mul(x: &Scalar, e: &GroupElement) -> GroupElement {
    match e {
        GroupElement::G1(p) => {
            record(Op::G1Mul);
            GroupElement::G1(*p * x.0)
        }
        GroupElement::G2(p) => {
            record(Op::G2Mul);
            GroupElement::G2(*p * x.0)
        }
        GroupElement::Gt(g) => {
            record(Op::GtExp);
            GroupElement::Gt(*g * x.0)
        }
    }
}

pub fn group_add(a: &GroupElement, b: &GroupElement) -> Result<GroupElement, PairingError> {
    match (a, b) {
        (GroupElement::G1(a), GroupElement::G1(b)) => Ok(GroupElement::G1(*a + b)),
        (GroupElement::G2(a), GroupElement::G2(b)) => Ok(GroupElement::G2(*a + b)),
        (GroupElement::Gt(a), GroupElement::Gt(b)) => Ok(GroupElement::Gt(*a + b)),
        (a, b) => Err(wrong(a.group(), b.group())),
    }
}

pub fn group_neg(a: &GroupElement) -> GroupElement {
    match a {
        GroupElement::G1(p) => GroupElement::G1(-*p),
        GroupElement::G2(p) => GroupElement::G2(-*p),
        GroupElement::Gt(g) => GroupElement::Gt(-*g),
    }
}

/// Uniform on `[0, r)`.
pub fn random_scalar<R: RngCore + CryptoRng>(rng: &mut R) -> Scalar {
    Scalar(Fr::rand(rng))
}

/// SHA-512 of a domain tag and `bytes`, reduced modulo `r`.
pub fn hash_to_scalar(bytes: &[u8]) -> Scalar {
    let digest = Sha512::new_with_prefix(b"abbe-hash-to-scalar-v1").chain_update(bytes).finalize();
    Scalar(Fr::from_be_bytes_mod_order(&digest))
}

fn fq_to_bytes(x: &Fq) -> [u8; 32] {
    x.into_bigint().to_bytes_be().try_into().expect("Fq is 32 bytes")
}

fn fq_from_bytes(bytes: &[u8]) -> Result<Fq, String> {
    if BigUint::from_bytes_be(bytes) >= *base_modulus() {
        return Err("coordinate is not reduced".into());
    }
    Ok(Fq::from_be_bytes_mod_order(bytes))
}

fn fq_is_largest(x: &Fq) -> bool {
    x.into_bigint() > Fq::MODULUS_MINUS_ONE_DIV_TWO
}

fn fq2_is_largest(x: &Fq2) -> bool {
    if !x.c1.is_zero() {
        fq_is_largest(&x.c1)
    } else {
        fq_is_largest(&x.c0)
    }
}

fn encode_g1(p: &G1Affine) -> [u8; G1_ENCODED_LEN] {
    let mut out = [0u8; G1_ENCODED_LEN];
    match p.xy() {
        None => out[0] = FLAG_INFINITY,
        Some((x, y)) => {
            out = fq_to_bytes(&x);
            if fq_is_largest(&y) {
                out[0] |= FLAG_LARGEST;
            }
        }
    }
    out
}

fn encode_g2(p: &G2Affine) -> [u8; G2_ENCODED_LEN] {
    let mut out = [0u8; G2_ENCODED_LEN];
    match p.xy() {
        None => out[0] = FLAG_INFINITY,
        Some((x, y)) => {
            out[..32].copy_from_slice(&fq_to_bytes(&x.c1));
            out[32..].copy_from_slice(&fq_to_bytes(&x.c0));
            if fq2_is_largest(&y) {
                out[0] |= FLAG_LARGEST;
            }
        }
    }
    out
}

fn take_flags(bytes: &[u8]) -> Result<(bool, bool, Vec<u8>), String> {
    let flags = bytes[0] & (FLAG_INFINITY | FLAG_LARGEST);
    let mut body = bytes.to_vec();
    body[0] &= !(FLAG_INFINITY | FLAG_LARGEST);
    if flags & FLAG_INFINITY != 0 {
        if flags != FLAG_INFINITY || body.iter().any(|&b| b != 0) {
            return Err("non-canonical point at infinity".into());
        }
        return Ok((true, false, body));
    }
    Ok((false, flags & FLAG_LARGEST != 0, body))
}

fn decode_g1(bytes: &[u8]) -> Result<G1Affine, String> {
    let (infinity, largest, body) = take_flags(bytes)?;
    if infinity {
        return Ok(G1Affine::identity());
    }
    let x = fq_from_bytes(&body)?;
    let (y1, y2) = G1Affine::get_ys_from_x_unchecked(x).ok_or("x is not on the curve")?;
    let y = if fq_is_largest(&y1) == largest { y1 } else { y2 };
    let p = G1Affine::new_unchecked(x, y);
    // G1 has cofactor 1 on BN curves
    if !p.is_on_curve() {
        return Err("point is not on the curve".into());
    }
    Ok(p)
}

fn decode_g2(bytes: &[u8]) -> Result<G2Affine, String> {
    let (infinity, largest, body) = take_flags(bytes)?;
    if infinity {
        return Ok(G2Affine::identity());
    }
    let x = Fq2::new(fq_from_bytes(&body[32..])?, fq_from_bytes(&body[..32])?);
    let (y1, y2) = G2Affine::get_ys_from_x_unchecked(x).ok_or("x is not on the twist")?;
    let y = if fq2_is_largest(&y1) == largest { y1 } else { y2 };
    let p = G2Affine::new_unchecked(x, y);
    if !p.is_on_curve() || !p.is_in_correct_subgroup_assuming_on_curve() {
        return Err("point is not in the order-r subgroup".into());
    }
    Ok(p)
}

fn gt_coefficients(x: &Fq12) -> [Fq; 12] {
    let fq6 = |c: &Fq6| [c.c0.c0, c.c0.c1, c.c1.c0, c.c1.c1, c.c2.c0, c.c2.c1];
    let (a, b) = (fq6(&x.c0), fq6(&x.c1));
    [a[0], a[1], a[2], a[3], a[4], a[5], b[0], b[1], b[2], b[3], b[4], b[5]]
}

fn encode_gt(x: &Fq12) -> Vec<u8> {
    gt_coefficients(x).iter().flat_map(fq_to_bytes).collect()
}

fn decode_gt(bytes: &[u8]) -> Result<Fq12, String> {
    let c: Vec<Fq> = bytes.chunks(32).map(fq_from_bytes).collect::<Result<_, _>>()?;
    let fq6 = |o: usize| Fq6::new(Fq2::new(c[o], c[o + 1]), Fq2::new(c[o + 2], c[o + 3]), Fq2::new(c[o + 4], c[o + 5]));
    let x = Fq12::new(fq6(0), fq6(6));
    if x.is_zero() || !x.pow(Fr::MODULUS).is_one() {
        return Err("element is not in the order-r subgroup".into());
    }
    Ok(x)
}
