//! Ciphertext-policy attribute-based broadcast KEM.
//!
//! Policies are AND-gates over attributes plus a list of revoked users that
//! is checked independently of the attributes. Sizes and costs:
//!
//! | object / operation | size or cost                                  |
//! |--------------------|-----------------------------------------------|
//! | user private key   | `2 + n` G1 elements (`n` = attributes held)   |
//! | keygen             | `2 + n` G1 scalar multiplications              |
//! | header             | `k + 3` elements (`k` = revoked users)         |
//! | decapsulation      | 3 pairings                                     |
//!
//! # Construction
//!
//! Master secrets are `alpha, b, h` and one `a_j` per attribute. Every user
//! has a public identity `x_u = H(user_id)` and public element
//! `U_u = (b x_u + h) g2`; attribute `j` publishes `T_j = a_j g2` and
//! `Y_j = e(g1, g2)^(alpha a_j)`. With per-user randomness `t` a key is
//!
//! ```text
//! D0 = (alpha + b t) g1,   D1 = t (b x_u + h) g1,   K_j = t a_j g1
//! ```
//!
//! Encapsulating under attributes `P` and revoked set `R` picks `s` and a
//! random `M` in GT, sets `A = sum_{j in P} a_j` and outputs
//!
//! ```text
//! C_M = M * prod_{j in P} Y_j^s,   C1 = s sum_{j in P} T_j = s A g2,
//! C_v = (s / (k + 1)) U_v          for v in {phantom} + R
//! ```
//!
//! The phantom identity is never issued a key, so even an empty revocation
//! list yields one interpolation term. A holder of every attribute in `P`
//! sums `K_P = t A g1` and, for `x_u != x_v` for all `v`, recovers
//!
//! ```text
//! e(D1, C1)^(sum_v 1/((k+1)(x_u - x_v))) / e(K_P, sum_v C_v / (x_u - x_v)) = e(g1, g2)^(b t s A)
//! e(D0, C1) / that                                                       = e(g1, g2)^(alpha s A)
//! ```
//!
//! which unblinds `M`. A revoked user hits `x_u - x_u = 0`; mixing keys from
//! different users fails because each key carries its own `t`.
//! The session key is `SHA-256("abbe-kem-v1" || encode(M))`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::pairing::{
    group_add, group_neg, hash_to_scalar, pair, random_scalar, scalar_mul, CurveParams, Group,
    GroupElement, PairingError, Scalar,
};

/// KDF identifier written into header files.
pub const KDF_TAG: &str = "abbe-kem-v1";

pub const MAX_ATTRIBUTE_NAME_LEN: usize = 64;

const USER_IDENTITY_DOMAIN: &[u8] = b"abbe-user-identity\x00";
const PHANTOM_IDENTITY_DOMAIN: &[u8] = b"abbe-phantom-identity\x00";
const USER_RANDOMNESS_DOMAIN: &[u8] = b"abbe-user-randomness\x00";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AbbeError {
    #[error("duplicate user id {0:?}")]
    DuplicateUser(String),
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("unknown user {0:?}")]
    UnknownUser(String),
    #[error("revoked user {0:?} is not registered")]
    UnknownRevokedUser(String),
    #[error("invalid attribute name {0:?}: must be 1..=64 bytes")]
    InvalidAttributeName(String),
    #[error("invalid user id {0:?}")]
    InvalidUserId(String),
    #[error("user {0:?} has no attributes")]
    EmptyAttributeSet(String),
    #[error("the attribute universe is empty")]
    EmptyUniverse,
    #[error("the policy requires no attributes")]
    EmptyPolicy,
    #[error("not an intended recipient of this header")]
    NotAuthorized,
    #[error("key, header and public key do not belong to the same curve")]
    MismatchedCurve,
    #[error("malformed private key: {0}")]
    MalformedKey(String),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error(transparent)]
    Pairing(#[from] PairingError),
}

fn check_attribute_name(name: &str) -> Result<(), AbbeError> {
    if name.is_empty() || name.len() > MAX_ATTRIBUTE_NAME_LEN {
        return Err(AbbeError::InvalidAttributeName(name.to_string()));
    }
    Ok(())
}

/// The ordered set of attribute names a system knows about.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttributeUniverse {
    attributes: BTreeSet<String>,
}

impl AttributeUniverse {
    pub fn new<I, S>(names: I) -> Result<Self, AbbeError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut attributes = BTreeSet::new();
        for name in names {
            let name = name.into();
            check_attribute_name(&name)?;
            attributes.insert(name);
        }
        if attributes.is_empty() {
            return Err(AbbeError::EmptyUniverse);
        }
        Ok(Self { attributes })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.attributes.contains(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UserRecord {
    pub user_id: String,
    pub attributes: BTreeSet<String>,
}

impl UserRecord {
    pub fn new<I, S>(user_id: impl Into<String>, attributes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            user_id: user_id.into(),
            attributes: attributes.into_iter().map(Into::into).collect(),
        }
    }
}

/// AND-gate over `required_attributes`, minus the users in `revoked_users`.
///
/// Both sets are kept sorted, so equal policies compare (and serialize) equal
/// regardless of construction order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AccessPolicy {
    pub required_attributes: BTreeSet<String>,
    pub revoked_users: BTreeSet<String>,
}

impl AccessPolicy {
    pub fn new<A, R, S, T>(required: A, revoked: R) -> Self
    where
        A: IntoIterator<Item = S>,
        S: Into<String>,
        R: IntoIterator<Item = T>,
        T: Into<String>,
    {
        Self {
            required_attributes: required.into_iter().map(Into::into).collect(),
            revoked_users: revoked.into_iter().map(Into::into).collect(),
        }
    }
}

/// Brute-force authorization rule: every required attribute is held and the
/// user is not revoked.
pub fn policy_satisfies(policy: &AccessPolicy, user: &UserRecord) -> bool {
    policy.required_attributes.is_subset(&user.attributes)
        && !policy.revoked_users.contains(&user.user_id)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttributePublicKey {
    /// `a_j g2`
    pub t: GroupElement,
    /// `e(g1, g2)^(alpha a_j)`
    pub y: GroupElement,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UserPublicKey {
    pub x: Scalar,
    /// `(b x + h) g2`
    pub u: GroupElement,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MasterPublicKey {
    pub curve: CurveParams,
    pub g1: GroupElement,
    pub g2: GroupElement,
    /// `e(g1, g2)`
    pub e_gg: GroupElement,
    pub attributes: BTreeMap<String, AttributePublicKey>,
    pub users: BTreeMap<String, UserPublicKey>,
    pub phantom: UserPublicKey,
}

impl MasterPublicKey {
    /// Every group element, in a stable order.
    pub fn public_elements(&self) -> Vec<&GroupElement> {
        let mut out = vec![&self.g1, &self.g2, &self.e_gg];
        for a in self.attributes.values() {
            out.push(&a.t);
            out.push(&a.y);
        }
        for u in self.users.values() {
            out.push(&u.u);
        }
        out.push(&self.phantom.u);
        out
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct MasterSecretKey {
    pub curve: CurveParams,
    pub alpha: Scalar,
    pub b: Scalar,
    pub h: Scalar,
    pub attributes: BTreeMap<String, Scalar>,
    /// Seeds the per-user randomness so keygen needs no rng.
    pub key_seed: [u8; 32],
    /// Users registered at setup, with the attributes they may be issued.
    pub registry: BTreeMap<String, BTreeSet<String>>,
}

impl fmt::Debug for MasterSecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MasterSecretKey")
            .field("attributes", &self.attributes.keys().collect::<Vec<_>>())
            .field("registry", &self.registry.keys().collect::<Vec<_>>())
            .finish_non_exhaustive()
    }
}

/// `[D0, D1, K_j for j in attributes (sorted)]`, all in G1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UserPrivateKey {
    pub user_id: String,
    pub attributes: BTreeSet<String>,
    pub elements: Vec<GroupElement>,
}

impl UserPrivateKey {
    pub fn new(
        user_id: String,
        attributes: BTreeSet<String>,
        elements: Vec<GroupElement>,
    ) -> Result<Self, AbbeError> {
        let key = Self { user_id, attributes, elements };
        key.validate()?;
        Ok(key)
    }

    pub fn validate(&self) -> Result<(), AbbeError> {
        if self.elements.len() != 2 + self.attributes.len() {
            return Err(AbbeError::MalformedKey(format!(
                "{} elements for {} attributes, expected {}",
                self.elements.len(),
                self.attributes.len(),
                2 + self.attributes.len()
            )));
        }
        if let Some(i) = self.elements.iter().position(|e| e.group() != Group::G1) {
            return Err(AbbeError::MalformedKey(format!("element {i} is not in G1")));
        }
        Ok(())
    }

    pub fn record(&self) -> UserRecord {
        UserRecord { user_id: self.user_id.clone(), attributes: self.attributes.clone() }
    }

    fn attribute_element(&self, name: &str) -> Option<&GroupElement> {
        let idx = self.attributes.iter().position(|a| a == name)?;
        self.elements.get(2 + idx)
    }
}

/// `[C_M (GT), C1 (G2), C_phantom (G2), C_v (G2) for v in revoked (sorted)]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbbeHeader {
    pub policy: AccessPolicy,
    pub elements: Vec<GroupElement>,
}

impl AbbeHeader {
    pub fn new(policy: AccessPolicy, elements: Vec<GroupElement>) -> Result<Self, AbbeError> {
        let header = Self { policy, elements };
        header.validate()?;
        Ok(header)
    }

    /// Group layout of a header revoking `revoked` users.
    pub fn layout(revoked: usize) -> Vec<Group> {
        let mut groups = vec![Group::Gt, Group::G2];
        groups.extend(std::iter::repeat(Group::G2).take(revoked + 1));
        groups
    }

    pub fn validate(&self) -> Result<(), AbbeError> {
        let k = self.policy.revoked_users.len();
        if self.elements.len() != k + 3 {
            return Err(AbbeError::MalformedHeader(format!(
                "{} elements for {k} revoked users, expected {}",
                self.elements.len(),
                k + 3
            )));
        }
        for (i, (e, g)) in self.elements.iter().zip(Self::layout(k)).enumerate() {
            if e.group() != g {
                return Err(AbbeError::MalformedHeader(format!("element {i} should be in {g}")));
            }
        }
        if self.policy.required_attributes.is_empty() {
            return Err(AbbeError::EmptyPolicy);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SessionKey(pub [u8; 32]);

impl SessionKey {
    /// `SHA-256(KDF_TAG || canonical GT encoding)`.
    pub fn derive(gt: &GroupElement) -> Self {
        SessionKey(Sha256::new_with_prefix(KDF_TAG.as_bytes()).chain_update(gt.encode()).finalize().into())
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let bytes = hex::decode(s.trim()).ok()?;
        Some(SessionKey(bytes.try_into().ok()?))
    }
}

impl fmt::Debug for SessionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SessionKey({}..)", &self.to_hex()[..8])
    }
}

/// Public identity scalar of a user id.
pub fn user_identity(user_id: &str) -> Scalar {
    hash_to_scalar(&[USER_IDENTITY_DOMAIN, user_id.as_bytes()].concat())
}

pub(crate) fn phantom_identity() -> Scalar {
    hash_to_scalar(PHANTOM_IDENTITY_DOMAIN)
}

fn nonzero_scalar<R: RngCore + CryptoRng>(rng: &mut R) -> Scalar {
    loop {
        let s = random_scalar(rng);
        if !s.is_zero() {
            return s;
        }
    }
}

pub(crate) fn curve_generators(curve: &CurveParams) -> Result<(GroupElement, GroupElement), AbbeError> {
    if !curve.is_arithmetic_supported() {
        return Err(PairingError::UnsupportedCurve(format!("{:#x}", curve.u)).into());
    }
    Ok((GroupElement::decode(Group::G1, &curve.g1)?, GroupElement::decode(Group::G2, &curve.g2)?))
}

fn sum(elements: impl IntoIterator<Item = GroupElement>, group: Group) -> GroupElement {
    elements
        .into_iter()
        .fold(GroupElement::identity(group), |acc, e| group_add(&acc, &e).expect("same group"))
}

/// Generates the master key pair for a fixed attribute universe and user registry.
pub fn setup<R: RngCore + CryptoRng>(
    curve: &CurveParams,
    universe: &AttributeUniverse,
    registry: &[UserRecord],
    rng: &mut R,
) -> Result<(MasterPublicKey, MasterSecretKey), AbbeError> {
    let (g1, g2) = curve_generators(curve)?;

    let mut users = BTreeMap::new();
    for user in registry {
        if user.user_id.is_empty() {
            return Err(AbbeError::InvalidUserId(user.user_id.clone()));
        }
        if user.attributes.is_empty() {
            return Err(AbbeError::EmptyAttributeSet(user.user_id.clone()));
        }
        if let Some(a) = user.attributes.iter().find(|a| !universe.contains(a)) {
            return Err(AbbeError::UnknownAttribute(a.clone()));
        }
        if users.insert(user.user_id.clone(), user.attributes.clone()).is_some() {
            return Err(AbbeError::DuplicateUser(user.user_id.clone()));
        }
    }

    let alpha = nonzero_scalar(rng);
    let b = nonzero_scalar(rng);
    let h = nonzero_scalar(rng);
    let mut key_seed = [0u8; 32];
    rng.fill_bytes(&mut key_seed);

    let e_gg = pair(&g1, &g2)?;
    let mut attribute_secrets = BTreeMap::new();
    let mut attribute_keys = BTreeMap::new();
    for name in universe.iter() {
        let a = nonzero_scalar(rng);
        attribute_keys.insert(
            name.to_string(),
            AttributePublicKey { t: scalar_mul(&a, &g2), y: scalar_mul(&(alpha * a), &e_gg) },
        );
        attribute_secrets.insert(name.to_string(), a);
    }

    let identity_key = |x: Scalar| UserPublicKey { x, u: scalar_mul(&(b * x + h), &g2) };
    let phantom = identity_key(phantom_identity());
    let mut user_keys = BTreeMap::new();
    for id in users.keys() {
        let x = user_identity(id);
        if x == phantom.x {
            return Err(AbbeError::InvalidUserId(id.clone()));
        }
        user_keys.insert(id.clone(), identity_key(x));
    }

    let mpk = MasterPublicKey {
        curve: curve.clone(),
        g1,
        g2,
        e_gg,
        attributes: attribute_keys,
        users: user_keys,
        phantom,
    };
    let msk = MasterSecretKey {
        curve: curve.clone(),
        alpha,
        b,
        h,
        attributes: attribute_secrets,
        key_seed,
        registry: users,
    };
    Ok((mpk, msk))
}

fn user_randomness(msk: &MasterSecretKey, user_id: &str) -> Scalar {
    let mut counter = 0u32;
    loop {
        let t = hash_to_scalar(
            &[USER_RANDOMNESS_DOMAIN, &msk.key_seed, &counter.to_be_bytes(), user_id.as_bytes()].concat(),
        );
        if !t.is_zero() {
            return t;
        }
        counter += 1;
    }
}

/// Issues the private key of a registered user. Deterministic in `(msk, user)`.
pub fn keygen(msk: &MasterSecretKey, user: &UserRecord) -> Result<UserPrivateKey, AbbeError> {
    let registered = msk
        .registry
        .get(&user.user_id)
        .ok_or_else(|| AbbeError::UnknownUser(user.user_id.clone()))?;
    if user.attributes.is_empty() {
        return Err(AbbeError::EmptyAttributeSet(user.user_id.clone()));
    }
    if let Some(a) = user.attributes.iter().find(|a| !registered.contains(*a)) {
        return Err(AbbeError::UnknownAttribute(a.clone()));
    }
    let (g1, _) = curve_generators(&msk.curve)?;
    let t = user_randomness(msk, &user.user_id);
    let x = user_identity(&user.user_id);

    let mut elements = Vec::with_capacity(2 + user.attributes.len());
    elements.push(scalar_mul(&(msk.alpha + msk.b * t), &g1));
    elements.push(scalar_mul(&(t * (msk.b * x + msk.h)), &g1));
    for name in &user.attributes {
        let a = msk.attributes.get(name).ok_or_else(|| AbbeError::UnknownAttribute(name.clone()))?;
        elements.push(scalar_mul(&(t * *a), &g1));
    }
    Ok(UserPrivateKey { user_id: user.user_id.clone(), attributes: user.attributes.clone(), elements })
}

/// Wraps a fresh session key for everyone satisfying `policy`.
pub fn encapsulate<R: RngCore + CryptoRng>(
    mpk: &MasterPublicKey,
    policy: &AccessPolicy,
    rng: &mut R,
) -> Result<(SessionKey, AbbeHeader), AbbeError> {
    if !mpk.curve.is_arithmetic_supported() {
        return Err(AbbeError::MismatchedCurve);
    }
    if policy.required_attributes.is_empty() {
        return Err(AbbeError::EmptyPolicy);
    }
    let mut attribute_keys = Vec::with_capacity(policy.required_attributes.len());
    for name in &policy.required_attributes {
        attribute_keys.push(mpk.attributes.get(name).ok_or_else(|| AbbeError::UnknownAttribute(name.clone()))?);
    }
    let mut revoked = Vec::with_capacity(policy.revoked_users.len());
    for id in &policy.revoked_users {
        revoked.push(mpk.users.get(id).ok_or_else(|| AbbeError::UnknownRevokedUser(id.clone()))?);
    }

    let s = nonzero_scalar(rng);
    let m = random_scalar(rng);
    let message = scalar_mul(&m, &mpk.e_gg);

    let y_policy = sum(attribute_keys.iter().map(|a| a.y.clone()), Group::Gt);
    let t_policy = sum(attribute_keys.iter().map(|a| a.t.clone()), Group::G2);
    let share = s * Scalar::from_u64(revoked.len() as u64 + 1).inverse().expect("k + 1 < r");

    let mut elements = Vec::with_capacity(revoked.len() + 3);
    elements.push(group_add(&message, &scalar_mul(&s, &y_policy))?);
    elements.push(scalar_mul(&s, &t_policy));
    elements.push(scalar_mul(&share, &mpk.phantom.u));
    for user in revoked {
        elements.push(scalar_mul(&share, &user.u));
    }

    Ok((SessionKey::derive(&message), AbbeHeader { policy: policy.clone(), elements }))
}

/// Recovers the session key if `key`'s holder satisfies the header policy.
pub fn decapsulate(
    mpk: &MasterPublicKey,
    key: &UserPrivateKey,
    header: &AbbeHeader,
) -> Result<SessionKey, AbbeError> {
    if !mpk.curve.is_arithmetic_supported() {
        return Err(AbbeError::MismatchedCurve);
    }
    header.validate()?;
    key.validate()?;
    let holder = mpk.users.get(&key.user_id).ok_or_else(|| AbbeError::UnknownUser(key.user_id.clone()))?;
    if !policy_satisfies(&header.policy, &key.record()) {
        return Err(AbbeError::NotAuthorized);
    }

    let mut attribute_sum = Vec::with_capacity(header.policy.required_attributes.len());
    for name in &header.policy.required_attributes {
        attribute_sum.push(key.attribute_element(name).ok_or(AbbeError::NotAuthorized)?.clone());
    }
    let k_policy = sum(attribute_sum, Group::G1);

    let mut excluded = vec![mpk.phantom.x];
    for id in &header.policy.revoked_users {
        excluded.push(mpk.users.get(id).ok_or_else(|| AbbeError::UnknownRevokedUser(id.clone()))?.x);
    }
    let message = unblind(&key.elements[0], &key.elements[1], &k_policy, holder.x, &excluded, &header.elements)?;
    Ok(SessionKey::derive(&message))
}

/// The three-pairing core of decapsulation, without any policy checks.
fn unblind(
    d0: &GroupElement,
    d1: &GroupElement,
    k_policy: &GroupElement,
    x_holder: Scalar,
    excluded: &[Scalar],
    header: &[GroupElement],
) -> Result<GroupElement, AbbeError> {
    let (c_m, c1, shares) = (&header[0], &header[1], &header[2..]);
    debug_assert_eq!(shares.len(), excluded.len());

    let mut weights = Vec::with_capacity(excluded.len());
    for x in excluded {
        weights.push((x_holder - *x).inverse().ok_or(AbbeError::NotAuthorized)?);
    }
    let lambda = Scalar::from_u64(excluded.len() as u64).inverse().expect("k + 1 < r");
    let exponent = lambda * weights.iter().copied().sum::<Scalar>();
    let combined = sum(weights.iter().zip(shares).map(|(w, c)| scalar_mul(w, c)), Group::G2);

    let full = pair(d0, c1)?;
    let holder_term = pair(d1, c1)?;
    let share_term = pair(k_policy, &combined)?;
    let randomizer = group_add(&scalar_mul(&exponent, &holder_term), &group_neg(&share_term))?;
    let blinding = group_add(&full, &group_neg(&randomizer))?;
    Ok(group_add(c_m, &group_neg(&blinding))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairing::instrument;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    struct Fixture {
        mpk: MasterPublicKey,
        msk: MasterSecretKey,
        users: Vec<UserRecord>,
    }

    fn fixture(seed: u64) -> Fixture {
        let universe = AttributeUniverse::new(["a", "b", "c", "d"]).unwrap();
        let users = vec![
            UserRecord::new("u1", ["a", "b", "c"]),
            UserRecord::new("u2", ["a"]),
            UserRecord::new("u3", ["a", "b"]),
            UserRecord::new("u4", ["b", "d"]),
        ];
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (mpk, msk) = setup(&CurveParams::default_curve(), &universe, &users, &mut rng).unwrap();
        Fixture { mpk, msk, users }
    }

    #[test]
    fn policy_satisfies_examples() {
        let p = AccessPolicy::new(["a", "b"], Vec::<String>::new());
        assert!(policy_satisfies(&p, &UserRecord::new("x", ["a", "b", "c"])));
        assert!(!policy_satisfies(&p, &UserRecord::new("x", ["a"])));
        let p = AccessPolicy::new(["a"], ["u"]);
        assert!(!policy_satisfies(&p, &UserRecord::new("u", ["a"])));
    }

    #[test]
    fn key_and_header_sizes() {
        let f = fixture(1);
        let key = keygen(&f.msk, &f.users[0]).unwrap();
        assert_eq!(key.elements.len(), 5);
        let key = keygen(&f.msk, &f.users[1]).unwrap();
        assert_eq!(key.elements.len(), 3);

        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let (_, h) = encapsulate(&f.mpk, &AccessPolicy::new(["a", "b"], Vec::<String>::new()), &mut rng).unwrap();
        assert_eq!(h.elements.len(), 3);
        let (_, h) = encapsulate(&f.mpk, &AccessPolicy::new(["a"], ["u1", "u2"]), &mut rng).unwrap();
        assert_eq!(h.elements.len(), 5);
    }

    #[test]
    fn keygen_performs_two_plus_n_multiplications() {
        let f = fixture(3);
        for user in &f.users {
            let before = instrument::thread_counts();
            keygen(&f.msk, user).unwrap();
            let delta = instrument::thread_counts().since(&before);
            assert_eq!(delta.g1_muls, 2 + user.attributes.len() as u64);
            assert_eq!(delta.g2_muls + delta.gt_exps + delta.pairings, 0);
        }
    }

    #[test]
    fn encapsulate_cost() {
        let f = fixture(22);
        let mut rng = ChaCha20Rng::seed_from_u64(23);
        for revoked in [vec![], vec!["u1"], vec!["u1", "u2", "u4"]] {
            let k = revoked.len() as u64;
            let before = instrument::thread_counts();
            encapsulate(&f.mpk, &AccessPolicy::new(["a", "b"], revoked), &mut rng).unwrap();
            let delta = instrument::thread_counts().since(&before);
            assert_eq!(delta.elliptic_muls(), k + 2);
            assert_eq!(delta.gt_exps, 2);
            assert_eq!(delta.pairings, 0);
        }
    }

    #[test]
    fn roundtrip_and_revocation() {
        let f = fixture(4);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let policy = AccessPolicy::new(["a", "b"], ["u3"]);
        let (session, header) = encapsulate(&f.mpk, &policy, &mut rng).unwrap();
        for user in &f.users {
            let key = keygen(&f.msk, user).unwrap();
            let before = instrument::thread_counts();
            let got = decapsulate(&f.mpk, &key, &header);
            let pairings = instrument::thread_counts().since(&before).pairings;
            if policy_satisfies(&policy, user) {
                assert_eq!(got.unwrap(), session, "{}", user.user_id);
                assert_eq!(pairings, 3);
            } else {
                assert_eq!(got.unwrap_err(), AbbeError::NotAuthorized, "{}", user.user_id);
                assert_eq!(pairings, 0);
            }
        }
    }

    #[test]
    fn fresh_randomness_gives_distinct_session_keys() {
        let f = fixture(6);
        let policy = AccessPolicy::new(["a"], Vec::<String>::new());
        let (k1, h1) = encapsulate(&f.mpk, &policy, &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
        let (k2, h2) = encapsulate(&f.mpk, &policy, &mut ChaCha20Rng::seed_from_u64(2)).unwrap();
        assert_ne!(k1, k2);
        let key = keygen(&f.msk, &f.users[1]).unwrap();
        assert_eq!(decapsulate(&f.mpk, &key, &h1).unwrap(), k1);
        assert_eq!(decapsulate(&f.mpk, &key, &h2).unwrap(), k2);
    }

    #[test]
    fn setup_is_deterministic_for_a_seed() {
        let a = fixture(9);
        let b = fixture(9);
        assert_eq!(a.mpk, b.mpk);
        assert_eq!(a.msk, b.msk);
        assert_eq!(keygen(&a.msk, &a.users[0]).unwrap(), keygen(&b.msk, &b.users[0]).unwrap());
        assert_ne!(fixture(10).mpk, a.mpk);
    }

    #[test]
    fn minimal_instance() {
        let universe = AttributeUniverse::new(["only"]).unwrap();
        let users = [UserRecord::new("solo", ["only"])];
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let (mpk, msk) = setup(&CurveParams::default_curve(), &universe, &users, &mut rng).unwrap();
        let key = keygen(&msk, &users[0]).unwrap();
        let (session, header) = encapsulate(&mpk, &AccessPolicy::new(["only"], Vec::<String>::new()), &mut rng).unwrap();
        assert_eq!(decapsulate(&mpk, &key, &header).unwrap(), session);
    }

    #[test]
    fn error_paths() {
        let curve = CurveParams::default_curve();
        let universe = AttributeUniverse::new(["a"]).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let dup = [UserRecord::new("u", ["a"]), UserRecord::new("u", ["a"])];
        assert_eq!(setup(&curve, &universe, &dup, &mut rng).unwrap_err(), AbbeError::DuplicateUser("u".into()));
        let unknown = [UserRecord::new("u", ["zzz"])];
        assert_eq!(
            setup(&curve, &universe, &unknown, &mut rng).unwrap_err(),
            AbbeError::UnknownAttribute("zzz".into())
        );
        assert!(AttributeUniverse::new([""]).is_err());
        assert!(AttributeUniverse::new(["x".repeat(65)]).is_err());
        assert!(AttributeUniverse::new(["x".repeat(64)]).is_ok());

        let f = fixture(13);
        assert_eq!(
            keygen(&f.msk, &UserRecord::new("nobody", ["a"])).unwrap_err(),
            AbbeError::UnknownUser("nobody".into())
        );
        let policy = AccessPolicy::new(["nope"], Vec::<String>::new());
        assert_eq!(encapsulate(&f.mpk, &policy, &mut rng).unwrap_err(), AbbeError::UnknownAttribute("nope".into()));
        let policy = AccessPolicy::new(["a"], ["ghost"]);
        assert_eq!(
            encapsulate(&f.mpk, &policy, &mut rng).unwrap_err(),
            AbbeError::UnknownRevokedUser("ghost".into())
        );

        let other = generate_other_curve();
        let mut mpk = f.mpk.clone();
        mpk.curve = other.clone();
        let (_, header) = encapsulate(&f.mpk, &AccessPolicy::new(["a"], Vec::<String>::new()), &mut rng).unwrap();
        let key = keygen(&f.msk, &f.users[0]).unwrap();
        assert_eq!(decapsulate(&mpk, &key, &header).unwrap_err(), AbbeError::MismatchedCurve);
        assert!(matches!(
            setup(&other, &universe, &[UserRecord::new("u", ["a"])], &mut rng),
            Err(AbbeError::Pairing(PairingError::UnsupportedCurve(_)))
        ));
    }

    fn generate_other_curve() -> CurveParams {
        crate::pairing::generate_curve(128, b"not the default").unwrap()
    }

    #[test]
    fn attribute_elements_cannot_be_swapped_in() {
        // u2 holds only "a"; feeding it u2's "a" element in place of the
        // missing "b" must not produce the session key.
        let f = fixture(14);
        let mut rng = ChaCha20Rng::seed_from_u64(15);
        let policy = AccessPolicy::new(["a", "b"], Vec::<String>::new());
        let (session, header) = encapsulate(&f.mpk, &policy, &mut rng).unwrap();
        let key = keygen(&f.msk, &f.users[1]).unwrap();
        let fake = group_add(&key.elements[2], &key.elements[2]).unwrap();
        let x = f.mpk.users["u2"].x;
        let m = unblind(&key.elements[0], &key.elements[1], &fake, x, &[f.mpk.phantom.x], &header.elements).unwrap();
        assert_ne!(SessionKey::derive(&m), session);
    }

    #[test]
    fn colluding_users_cannot_combine_attribute_elements() {
        // u2 has "a", u4 has "b": together they cover {a, b} but their keys
        // use different per-user randomness.
        let f = fixture(16);
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        let policy = AccessPolicy::new(["a", "b"], Vec::<String>::new());
        let (session, header) = encapsulate(&f.mpk, &policy, &mut rng).unwrap();
        let k2 = keygen(&f.msk, &f.users[1]).unwrap();
        let k4 = keygen(&f.msk, &f.users[3]).unwrap();
        let combined = group_add(k2.attribute_element("a").unwrap(), k4.attribute_element("b").unwrap()).unwrap();
        for (holder, key) in [("u2", &k2), ("u4", &k4)] {
            let x = f.mpk.users[holder].x;
            let m = unblind(&key.elements[0], &key.elements[1], &combined, x, &[f.mpk.phantom.x], &header.elements)
                .unwrap();
            assert_ne!(SessionKey::derive(&m), session);
        }
    }

    #[test]
    fn revoked_user_cannot_skip_its_own_share() {
        // The revoked user's interpolation weight is 1/0; dropping that term
        // (and rescaling as if it was not there) does not recover the key.
        let f = fixture(18);
        let mut rng = ChaCha20Rng::seed_from_u64(19);
        let policy = AccessPolicy::new(["a"], ["u1"]);
        let (session, header) = encapsulate(&f.mpk, &policy, &mut rng).unwrap();
        let key = keygen(&f.msk, &f.users[0]).unwrap();
        let x = f.mpk.users["u1"].x;
        let k_a = key.attribute_element("a").unwrap().clone();
        let excluded = [f.mpk.phantom.x, x];
        assert_eq!(
            unblind(&key.elements[0], &key.elements[1], &k_a, x, &excluded, &header.elements).unwrap_err(),
            AbbeError::NotAuthorized
        );
        let partial: Vec<GroupElement> = header.elements[..3].to_vec();
        let m = unblind(&key.elements[0], &key.elements[1], &k_a, x, &excluded[..1], &partial).unwrap();
        assert_ne!(SessionKey::derive(&m), session);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        let f = fixture(20);
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let (_, mut header) = encapsulate(&f.mpk, &AccessPolicy::new(["a"], ["u4"]), &mut rng).unwrap();
        let mut key = keygen(&f.msk, &f.users[0]).unwrap();
        key.elements.pop();
        assert!(matches!(decapsulate(&f.mpk, &key, &header), Err(AbbeError::MalformedKey(_))));
        let key = keygen(&f.msk, &f.users[0]).unwrap();
        header.elements.pop();
        assert!(matches!(decapsulate(&f.mpk, &key, &header), Err(AbbeError::MalformedHeader(_))));
        header.elements.push(key.elements[0].clone());
        assert!(matches!(decapsulate(&f.mpk, &key, &header), Err(AbbeError::MalformedHeader(_))));
    }
}
