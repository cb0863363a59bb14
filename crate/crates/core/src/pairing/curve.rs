use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::arith::{FieldCtx, Fp, Fp2, Fp2Elem, Point, ShortWeierstrass};
use super::prime::{is_probable_prime, passes_trial_division};
use super::PairingError;

/// The only security level the curve calculator supports.
pub const SUPPORTED_SECURITY_BITS: u32 = 128;

/// Seed whose search starts at, and immediately accepts, the BN254 parameter.
pub const DEFAULT_CURVE_SEED: &[u8] = b"abbe-default-bn-curve";

/// BN254 ("alt_bn128") curve parameter.
pub(crate) const BN254_U: u64 = 0x44e9_92b4_4a69_09f1;

const U_MIN: u64 = 1 << 62;
const U_SPAN_BITS: u32 = 60;
const MAX_SEARCH_STEPS: u64 = 1 << 22;
const MAX_COEFF_SEARCH: u64 = 1 << 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CurveFamily {
    #[serde(rename = "BN")]
    BarretoNaehrig,
}

/// A Barreto-Naehrig curve `E: y^2 = x^3 + b` over `F_p` with prime order `r`,
/// together with a generator of `E(F_p)` and a generator of the order-`r`
/// subgroup of the sextic twist over `F_p^2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurveParams {
    pub family: CurveFamily,
    pub u: u64,
    pub p: BigUint,
    pub r: BigUint,
    pub security_bits: u32,
    /// Canonical (compressed) encoding of the G1 generator.
    pub g1: Vec<u8>,
    /// Canonical (compressed) encoding of the G2 generator.
    pub g2: Vec<u8>,
}

pub(crate) fn bn_p(u: u64) -> BigUint {
    let u = BigUint::from(u);
    let u2 = &u * &u;
    let u3 = &u2 * &u;
    let u4 = &u3 * &u;
    36u32 * u4 + 36u32 * u3 + 24u32 * u2 + 6u32 * u + 1u32
}

pub(crate) fn bn_r(u: u64) -> BigUint {
    let u = BigUint::from(u);
    let u2 = &u * &u;
    let u3 = &u2 * &u;
    let u4 = &u3 * &u;
    36u32 * u4 + 36u32 * u3 + 18u32 * u2 + 6u32 * u + 1u32
}

fn starting_u(seed: &[u8]) -> u64 {
    if seed == DEFAULT_CURVE_SEED {
        return BN254_U;
    }
    let digest = Sha256::new_with_prefix(b"bn-curve-search-v1").chain_update(seed).finalize();
    let raw = u64::from_be_bytes(digest[..8].try_into().expect("8 bytes"));
    (U_MIN + (raw >> (64 - U_SPAN_BITS))) | 1
}

/// Deterministically searches the BN family for a 128-bit curve.
///
/// The search starts at an odd `u` derived from `seed` and steps by 2 until
/// both `p(u)` and `r(u)` are prime. [`DEFAULT_CURVE_SEED`] yields BN254.
pub fn generate_curve(security_bits: u32, seed: &[u8]) -> Result<CurveParams, PairingError> {
    if security_bits != SUPPORTED_SECURITY_BITS {
        return Err(PairingError::UnsupportedSecurityLevel(security_bits));
    }
    let mut u = starting_u(seed);
    for _ in 0..MAX_SEARCH_STEPS {
        let r = bn_r(u);
        if passes_trial_division(&r) {
            let p = bn_p(u);
            if passes_trial_division(&p) && is_probable_prime(&r) && is_probable_prime(&p) {
                return CurveParams::derive(u, security_bits);
            }
        }
        u += 2;
    }
    Err(PairingError::InvalidCurve("search exhausted without finding a BN curve".into()))
}

pub(crate) struct CurveShape {
    pub b: u64,
    pub g1: Point<BigUint>,
    pub twist_b: Fp2Elem,
    pub g2: Point<Fp2Elem>,
}

impl CurveParams {
    /// Builds the full parameter set for a BN parameter `u` whose `p` and `r`
    /// are already known to be prime.
    pub(crate) fn derive(u: u64, security_bits: u32) -> Result<Self, PairingError> {
        let p = bn_p(u);
        let r = bn_r(u);
        let shape = find_shape(&p, &r)?;
        Ok(Self {
            family: CurveFamily::BarretoNaehrig,
            u,
            security_bits,
            g1: encode_g1_generic(&Fp::new(p.clone()), &shape.g1),
            g2: encode_g2_generic(&Fp2::new(p.clone()), &shape.g2),
            p,
            r,
        })
    }

    /// The pinned curve all group arithmetic runs on.
    pub fn default_curve() -> Self {
        static DEFAULT: std::sync::OnceLock<CurveParams> = std::sync::OnceLock::new();
        DEFAULT
            .get_or_init(|| {
                generate_curve(SUPPORTED_SECURITY_BITS, DEFAULT_CURVE_SEED)
                    .expect("default curve parameters are valid")
            })
            .clone()
    }

    /// True if this is the curve [`super::GroupElement`] arithmetic is implemented for.
    pub fn is_arithmetic_supported(&self) -> bool {
        self.u == BN254_U
    }

    /// Checks every invariant: BN polynomial relations, primality, size window,
    /// generators on the curve with exact order `r`.
    pub fn validate(&self) -> Result<(), PairingError> {
        let bad = |m: &str| Err(PairingError::InvalidCurve(m.to_string()));
        if self.security_bits != SUPPORTED_SECURITY_BITS {
            return Err(PairingError::UnsupportedSecurityLevel(self.security_bits));
        }
        if self.p != bn_p(self.u) || self.r != bn_r(self.u) {
            return bad("p and r do not match the BN polynomials in u");
        }
        if self.u % 2 == 0 {
            return bad("u must be odd");
        }
        let bits = self.r.bits();
        if !(254..=256).contains(&bits) {
            return bad(&format!("r has {bits} bits, expected 254..=256"));
        }
        if !is_probable_prime(&self.p) || !is_probable_prime(&self.r) {
            return bad("p and r must be prime");
        }
        let shape = find_shape(&self.p, &self.r)?;
        let fp = Fp::new(self.p.clone());
        let fp2 = Fp2::new(self.p.clone());
        let g1 = decode_g1_generic(&fp, shape.b, &self.g1)?;
        let g2 = decode_g2_generic(&fp2, &shape.twist_b, &self.g2)?;
        let e1 = ShortWeierstrass::new(fp, BigUint::from(shape.b));
        let e2 = ShortWeierstrass::new(fp2, shape.twist_b);
        if !e1.is_on_curve(&g1) || !e2.is_on_curve(&g2) {
            return bad("generators are not on the curve");
        }
        if g1 == Point::Infinity || e1.mul(&self.r, &g1) != Point::Infinity {
            return bad("g1 does not have order r");
        }
        if g2 == Point::Infinity || e2.mul(&self.r, &g2) != Point::Infinity {
            return bad("g2 does not have order r");
        }
        Ok(())
    }

    /// Short stable identifier: SHA-256 over `u` and both generators.
    pub fn fingerprint(&self) -> [u8; 32] {
        Sha256::new_with_prefix(b"curve-fingerprint-v1")
            .chain_update(self.u.to_be_bytes())
            .chain_update(&self.g1)
            .chain_update(&self.g2)
            .finalize()
            .into()
    }
}

/// Finds the curve coefficient, the sextic twist and both generators.
///
/// * `b`: smallest positive coefficient whose curve has exactly `r` points
///   (checked by `r * P = O` for a nonzero point, `r` prime).
/// * twist: `xi = c + i` with the smallest `c` making `xi` neither a square
///   nor a cube in `F_p^2`; both `b / xi` and `b * xi` are tried and the one
///   whose order is divisible by `r` wins. `#E'(F_p^2) = r (2p - r)`.
/// * generators: first valid x (counting up from 1), smaller root for y;
///   the G2 point is multiplied by the twist cofactor.
pub(crate) fn find_shape(p: &BigUint, r: &BigUint) -> Result<CurveShape, PairingError> {
    let fp = Fp::new(p.clone());
    let mut found = None;
    for b in 1..MAX_COEFF_SEARCH {
        let curve = ShortWeierstrass::new(fp.clone(), BigUint::from(b));
        let Some(point) = first_point_fp(&curve) else { continue };
        if curve.mul(r, &point) == Point::Infinity {
            found = Some((b, point));
            break;
        }
    }
    let (b, g1) = found.ok_or_else(|| PairingError::InvalidCurve("no coefficient b with r points".into()))?;

    let fp2 = Fp2::new(p.clone());
    let cofactor = (p << 1) - r;
    let exp_square = (p * p - 1u32) >> 1;
    let exp_cube = (p * p - 1u32) / 3u32;
    let b2 = fp2.from_u64(b);
    for c in 1..MAX_COEFF_SEARCH {
        let xi = fp2.elem(c, 1);
        if fp2.pow(&xi, &exp_square) == fp2.one() || fp2.pow(&xi, &exp_cube) == fp2.one() {
            continue;
        }
        let xi_inv = fp2.inv(&xi).expect("xi is nonzero");
        for twist_b in [fp2.mul(&b2, &xi_inv), fp2.mul(&b2, &xi)] {
            let twist = ShortWeierstrass::new(fp2.clone(), twist_b.clone());
            let Some(point) = first_point_fp2(&twist) else { continue };
            let cleared = twist.mul(&cofactor, &point);
            if cleared != Point::Infinity && twist.mul(r, &cleared) == Point::Infinity {
                return Ok(CurveShape { b, g1, twist_b, g2: cleared });
            }
        }
        break;
    }
    Err(PairingError::InvalidCurve("no sextic twist with a subgroup of order r".into()))
}

fn first_point_fp(curve: &ShortWeierstrass<Fp>) -> Option<Point<BigUint>> {
    let f = &curve.field;
    for x in 1..MAX_COEFF_SEARCH {
        let x = BigUint::from(x);
        if let Some(y) = f.sqrt(&curve.rhs(&x)) {
            let y = if f.is_lexicographically_largest(&y) { f.neg(&y) } else { y };
            return Some(Point::Affine { x, y });
        }
    }
    None
}

fn first_point_fp2(curve: &ShortWeierstrass<Fp2>) -> Option<Point<Fp2Elem>> {
    let f = &curve.field;
    for x in 1..MAX_COEFF_SEARCH {
        let x = f.from_u64(x);
        if let Some(y) = f.sqrt(&curve.rhs(&x)) {
            let y = if f.is_lexicographically_largest(&y) { f.neg(&y) } else { y };
            return Some(Point::Affine { x, y });
        }
    }
    None
}

pub(crate) const FLAG_INFINITY: u8 = 0x80;
pub(crate) const FLAG_LARGEST: u8 = 0x40;
const FLAG_MASK: u8 = FLAG_INFINITY | FLAG_LARGEST;

fn be32(v: &BigUint) -> [u8; 32] {
    let bytes = v.to_bytes_be();
    let mut out = [0u8; 32];
    out[32 - bytes.len()..].copy_from_slice(&bytes);
    out
}

fn encode_g1_generic(f: &Fp, point: &Point<BigUint>) -> Vec<u8> {
    match point {
        Point::Infinity => {
            let mut out = vec![0u8; 32];
            out[0] = FLAG_INFINITY;
            out
        }
        Point::Affine { x, y } => {
            let mut out = be32(x).to_vec();
            if f.is_lexicographically_largest(y) {
                out[0] |= FLAG_LARGEST;
            }
            out
        }
    }
}

fn encode_g2_generic(f: &Fp2, point: &Point<Fp2Elem>) -> Vec<u8> {
    match point {
        Point::Infinity => {
            let mut out = vec![0u8; 64];
            out[0] = FLAG_INFINITY;
            out
        }
        Point::Affine { x, y } => {
            let mut out = be32(&x.c1).to_vec();
            out.extend_from_slice(&be32(&x.c0));
            if f.is_lexicographically_largest(y) {
                out[0] |= FLAG_LARGEST;
            }
            out
        }
    }
}

fn split_flags(bytes: &[u8], p: &BigUint) -> Result<(bool, bool, Vec<BigUint>), String> {
    let flags = bytes[0] & FLAG_MASK;
    let mut stripped = bytes.to_vec();
    stripped[0] &= !FLAG_MASK;
    let coords: Vec<BigUint> = stripped.chunks(32).map(BigUint::from_bytes_be).collect();
    if coords.iter().any(|c| c >= p) {
        return Err("coordinate is not reduced".into());
    }
    let infinity = flags & FLAG_INFINITY != 0;
    if infinity && (flags != FLAG_INFINITY || coords.iter().any(|c| !c.is_zero())) {
        return Err("non-canonical point at infinity".into());
    }
    Ok((infinity, flags & FLAG_LARGEST != 0, coords))
}

fn decode_g1_generic(f: &Fp, b: u64, bytes: &[u8]) -> Result<Point<BigUint>, PairingError> {
    let err = |reason: String| PairingError::InvalidCurve(format!("g1: {reason}"));
    if bytes.len() != 32 {
        return Err(err(format!("expected 32 bytes, got {}", bytes.len())));
    }
    let (infinity, largest, coords) = split_flags(bytes, &f.p).map_err(err)?;
    if infinity {
        return Ok(Point::Infinity);
    }
    let x = coords[0].clone();
    let curve = ShortWeierstrass::new(f.clone(), BigUint::from(b));
    let y = f.sqrt(&curve.rhs(&x)).ok_or_else(|| err("x is not on the curve".into()))?;
    let y = if f.is_lexicographically_largest(&y) == largest { y } else { f.neg(&y) };
    Ok(Point::Affine { x, y })
}

fn decode_g2_generic(f: &Fp2, twist_b: &Fp2Elem, bytes: &[u8]) -> Result<Point<Fp2Elem>, PairingError> {
    let err = |reason: String| PairingError::InvalidCurve(format!("g2: {reason}"));
    if bytes.len() != 64 {
        return Err(err(format!("expected 64 bytes, got {}", bytes.len())));
    }
    let (infinity, largest, coords) = split_flags(bytes, &f.base.p).map_err(err)?;
    if infinity {
        return Ok(Point::Infinity);
    }
    let x = Fp2Elem { c1: coords[0].clone(), c0: coords[1].clone() };
    let curve = ShortWeierstrass::new(f.clone(), twist_b.clone());
    let y = f.sqrt(&curve.rhs(&x)).ok_or_else(|| err("x is not on the twist".into()))?;
    let y = if f.is_lexicographically_largest(&y) == largest { y } else { f.neg(&y) };
    Ok(Point::Affine { x, y })
}

/// JSON description of a curve: integers as `0x`-prefixed lowercase hex,
/// generators as plain lowercase hex of their canonical encodings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveDescription {
    pub family: CurveFamily,
    pub u: String,
    pub p: String,
    pub r: String,
    pub g1: String,
    pub g2: String,
    pub security_bits: u32,
}

pub(crate) fn to_prefixed_hex(v: &BigUint) -> String {
    format!("{v:#x}")
}

pub(crate) fn parse_prefixed_hex(s: &str) -> Option<BigUint> {
    let digits = s.strip_prefix("0x")?;
    if digits.is_empty() || digits.chars().any(|c| c.is_ascii_uppercase()) {
        return None;
    }
    BigUint::parse_bytes(digits.as_bytes(), 16)
}

impl CurveParams {
    pub fn to_description(&self) -> CurveDescription {
        CurveDescription {
            family: self.family,
            u: format!("{:#x}", self.u),
            p: to_prefixed_hex(&self.p),
            r: to_prefixed_hex(&self.r),
            g1: hex::encode(&self.g1),
            g2: hex::encode(&self.g2),
            security_bits: self.security_bits,
        }
    }

    /// Parses and fully validates a description.
    pub fn from_description(desc: &CurveDescription) -> Result<Self, PairingError> {
        let bad = |m: &str| PairingError::InvalidCurve(m.to_string());
        let u_big = parse_prefixed_hex(&desc.u).ok_or_else(|| bad("u is not 0x-prefixed lowercase hex"))?;
        let u = u64::try_from(&u_big).map_err(|_| bad("u does not fit in 64 bits"))?;
        let params = Self {
            family: desc.family,
            u,
            p: parse_prefixed_hex(&desc.p).ok_or_else(|| bad("p is not 0x-prefixed lowercase hex"))?,
            r: parse_prefixed_hex(&desc.r).ok_or_else(|| bad("r is not 0x-prefixed lowercase hex"))?,
            security_bits: desc.security_bits,
            g1: hex::decode(&desc.g1).map_err(|_| bad("g1 is not hex"))?,
            g2: hex::decode(&desc.g2).map_err(|_| bad("g2 is not hex"))?,
        };
        if params.is_arithmetic_supported() && params == Self::default_curve() {
            return Ok(params);
        }
        params.validate()?;
        Ok(params)
    }
}
