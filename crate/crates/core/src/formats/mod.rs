//! JSON files exchanged by the tools: configuration, keys and header.
//!
//! Loading is strict: unknown members, duplicate set entries, uppercase hex
//! and non-canonical integers are all rejected with the JSON path of the
//! first offending value. Saving always produces the canonical text form
//! (see [`canonical`]), so `save` is byte-deterministic and
//! `save(load(save(x))) == save(x)`.
//!
//! JSON-Schema documents for all three files live in `schemas/` at the
//! repository root.

pub mod canonical;

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::abbe::{
    user_identity, AbbeHeader, AccessPolicy, AttributePublicKey, MasterPublicKey, MasterSecretKey,
    UserPrivateKey, UserPublicKey, UserRecord, KDF_TAG, MAX_ATTRIBUTE_NAME_LEN,
};
use crate::pairing::{
    parse_prefixed_hex, to_prefixed_hex, CurveDescription, CurveFamily, CurveParams, Group, GroupElement, Scalar,
    SCALAR_LEN,
};

pub use canonical::to_canonical_string;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("schema violation at {path}: {reason}")]
    SchemaViolation { path: String, reason: String },
}

impl FormatError {
    /// JSON path of the offending value, `$` for syntax errors.
    pub fn path(&self) -> &str {
        match self {
            FormatError::Json { .. } => "$",
            FormatError::SchemaViolation { path, .. } => path,
        }
    }
}

fn parse_json(bytes: &[u8]) -> Result<Value, FormatError> {
    let text = std::str::from_utf8(bytes).map_err(|e| FormatError::Json {
        line: 0,
        column: e.valid_up_to(),
        message: "input is not UTF-8".into(),
    })?;
    serde_json::from_str(text).map_err(|e| FormatError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn is_identifier(key: &str) -> bool {
    let mut chars = key.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A JSON value together with its path from the document root.
#[derive(Clone)]
struct Node<'a> {
    value: &'a Value,
    path: String,
}

impl<'a> Node<'a> {
    fn root(value: &'a Value) -> Self {
        Node { value, path: "$".into() }
    }

    fn violation(&self, reason: impl Into<String>) -> FormatError {
        FormatError::SchemaViolation { path: self.path.clone(), reason: reason.into() }
    }

    fn child_path(&self, key: &str) -> String {
        if is_identifier(key) {
            format!("{}.{key}", self.path)
        } else {
            format!("{}[{}]", self.path, Value::String(key.into()))
        }
    }

    fn members(&self) -> Result<&'a Map<String, Value>, FormatError> {
        self.value.as_object().ok_or_else(|| self.violation("expected an object"))
    }

    /// An object with exactly the `required` members plus any of `optional`.
    fn record(&self, required: &[&str], optional: &[&str]) -> Result<(), FormatError> {
        let map = self.members()?;
        for key in map.keys() {
            if !required.contains(&key.as_str()) && !optional.contains(&key.as_str()) {
                return Err(FormatError::SchemaViolation {
                    path: self.child_path(key),
                    reason: "unknown member".into(),
                });
            }
        }
        for key in required {
            if !map.contains_key(*key) {
                return Err(self.violation(format!("missing member {key:?}")));
            }
        }
        Ok(())
    }

    fn field(&self, key: &str) -> Result<Node<'a>, FormatError> {
        self.opt_field(key)?.ok_or_else(|| self.violation(format!("missing member {key:?}")))
    }

    fn opt_field(&self, key: &str) -> Result<Option<Node<'a>>, FormatError> {
        Ok(self.members()?.get(key).map(|value| Node { value, path: self.child_path(key) }))
    }

    /// Members of a map-shaped object, in key order.
    fn entries(&self) -> Result<Vec<(&'a str, Node<'a>)>, FormatError> {
        Ok(self
            .members()?
            .iter()
            .map(|(k, value)| (k.as_str(), Node { value, path: self.child_path(k) }))
            .collect())
    }

    fn items(&self) -> Result<Vec<Node<'a>>, FormatError> {
        let items = self.value.as_array().ok_or_else(|| self.violation("expected an array"))?;
        Ok(items
            .iter()
            .enumerate()
            .map(|(i, value)| Node { value, path: format!("{}[{i}]", self.path) })
            .collect())
    }

    fn str(&self) -> Result<&'a str, FormatError> {
        self.value.as_str().ok_or_else(|| self.violation("expected a string"))
    }

    fn u32(&self) -> Result<u32, FormatError> {
        self.value
            .as_u64()
            .and_then(|v| u32::try_from(v).ok())
            .ok_or_else(|| self.violation("expected a non-negative 32-bit integer"))
    }

    fn nonempty_str(&self) -> Result<&'a str, FormatError> {
        let s = self.str()?;
        if s.is_empty() {
            return Err(self.violation("must not be empty"));
        }
        Ok(s)
    }

    fn attribute_name(&self) -> Result<&'a str, FormatError> {
        let s = self.str()?;
        if s.is_empty() || s.len() > MAX_ATTRIBUTE_NAME_LEN {
            return Err(self.violation(format!("attribute names are 1..={MAX_ATTRIBUTE_NAME_LEN} bytes")));
        }
        Ok(s)
    }

    /// A duplicate-free array of strings accepted by `check`.
    fn string_set(
        &self,
        check: impl Fn(&Node<'a>) -> Result<&'a str, FormatError>,
    ) -> Result<BTreeSet<String>, FormatError> {
        let mut out = BTreeSet::new();
        for item in self.items()? {
            let s = check(&item)?;
            if !out.insert(s.to_string()) {
                return Err(item.violation(format!("duplicate entry {s:?}")));
            }
        }
        Ok(out)
    }

    fn lower_hex(&self) -> Result<Vec<u8>, FormatError> {
        let s = self.str()?;
        if s.chars().any(|c| c.is_ascii_uppercase()) {
            return Err(self.violation("hex must be lowercase"));
        }
        hex::decode(s).map_err(|e| self.violation(format!("bad hex: {e}")))
    }

    fn element(&self, group: Group) -> Result<GroupElement, FormatError> {
        GroupElement::from_hex(group, self.str()?).map_err(|e| self.violation(e.to_string()))
    }

    fn scalar(&self) -> Result<Scalar, FormatError> {
        let s = self.str()?;
        let v = parse_prefixed_hex(s)
            .filter(|v| to_prefixed_hex(v) == s)
            .ok_or_else(|| self.violation("expected a canonical 0x-prefixed lowercase hex integer"))?;
        let bytes = v.to_bytes_be();
        if bytes.len() > SCALAR_LEN {
            return Err(self.violation("scalar is not reduced modulo the group order"));
        }
        Scalar::from_bytes(&bytes).map_err(|e| self.violation(e.to_string()))
    }
}

fn scalar_json(s: &Scalar) -> Value {
    Value::String(to_prefixed_hex(&s.to_biguint()))
}

fn set_json(set: &BTreeSet<String>) -> Value {
    Value::Array(set.iter().cloned().map(Value::String).collect())
}

fn elements_json(elements: &[GroupElement]) -> Value {
    Value::Array(elements.iter().map(|e| Value::String(e.to_hex())).collect())
}

fn canonical_bytes(value: &Value) -> Vec<u8> {
    to_canonical_string(value).into_bytes()
}

// ---- curve ----------------------------------------------------------------

fn curve_json(curve: &CurveParams) -> Value {
    let d = curve.to_description();
    json!({
        "family": "BN",
        "u": d.u,
        "p": d.p,
        "r": d.r,
        "g1": d.g1,
        "g2": d.g2,
        "security_bits": d.security_bits,
    })
}

fn parse_curve(node: &Node) -> Result<CurveParams, FormatError> {
    node.record(&["family", "u", "p", "r", "g1", "g2", "security_bits"], &[])?;
    let family = node.field("family")?;
    if family.str()? != "BN" {
        return Err(family.violation("only the \"BN\" family is supported"));
    }
    let hex_field = |key: &str, prefixed: bool| -> Result<String, FormatError> {
        let f = node.field(key)?;
        let s = f.str()?;
        let ok = if prefixed { parse_prefixed_hex(s).is_some_and(|v| to_prefixed_hex(&v) == s) } else {
            f.lower_hex().is_ok()
        };
        if !ok {
            return Err(f.violation("expected canonical lowercase hex"));
        }
        Ok(s.to_string())
    };
    let desc = CurveDescription {
        family: CurveFamily::BarretoNaehrig,
        u: hex_field("u", true)?,
        p: hex_field("p", true)?,
        r: hex_field("r", true)?,
        g1: hex_field("g1", false)?,
        g2: hex_field("g2", false)?,
        security_bits: node.field("security_bits")?.u32()?,
    };
    CurveParams::from_description(&desc).map_err(|e| node.violation(e.to_string()))
}

fn parse_supported_curve(node: &Node) -> Result<CurveParams, FormatError> {
    let curve = parse_curve(node)?;
    if !curve.is_arithmetic_supported() {
        return Err(node.violation("group arithmetic is not available on this curve"));
    }
    Ok(curve)
}

/// Standalone curve file written by `curvegen`.
pub fn save_curve(curve: &CurveParams) -> Vec<u8> {
    canonical_bytes(&curve_json(curve))
}

pub fn load_curve(bytes: &[u8]) -> Result<CurveParams, FormatError> {
    parse_curve(&Node::root(&parse_json(bytes)?))
}

// ---- policy ---------------------------------------------------------------

fn policy_json(policy: &AccessPolicy) -> Value {
    json!({
        "attributes": set_json(&policy.required_attributes),
        "revoked": set_json(&policy.revoked_users),
    })
}

fn parse_policy(node: &Node) -> Result<AccessPolicy, FormatError> {
    node.record(&["attributes", "revoked"], &[])?;
    let attrs = node.field("attributes")?;
    let required_attributes = attrs.string_set(Node::attribute_name)?;
    if required_attributes.is_empty() {
        return Err(attrs.violation("a policy requires at least one attribute"));
    }
    let revoked_users = node.field("revoked")?.string_set(Node::nonempty_str)?;
    Ok(AccessPolicy { required_attributes, revoked_users })
}

/// Canonical serialization of a policy alone (sorted, normalized).
pub fn policy_canonical_bytes(policy: &AccessPolicy) -> Vec<u8> {
    canonical_bytes(&policy_json(policy))
}

// ---- config ---------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigFile {
    pub curve: CurveParams,
    pub users: Vec<UserRecord>,
    pub policy: AccessPolicy,
    pub attribute_pool: Vec<String>,
}

impl ConfigFile {
    pub fn user(&self, user_id: &str) -> Option<&UserRecord> {
        self.users.iter().find(|u| u.user_id == user_id)
    }

    fn to_json(&self) -> Value {
        json!({
            "curve": curve_json(&self.curve),
            "users": self.users.iter().map(|u| json!({
                "id": u.user_id,
                "attributes": set_json(&u.attributes),
            })).collect::<Vec<_>>(),
            "policy": policy_json(&self.policy),
            "attribute_pool": self.attribute_pool,
        })
    }

    fn from_json(root: &Node) -> Result<Self, FormatError> {
        root.record(&["curve", "users", "policy", "attribute_pool"], &[])?;
        let curve = parse_curve(&root.field("curve")?)?;

        let pool_node = root.field("attribute_pool")?;
        let mut attribute_pool = Vec::new();
        let mut pool = BTreeSet::new();
        for item in pool_node.items()? {
            let name = item.attribute_name()?;
            if !pool.insert(name) {
                return Err(item.violation(format!("duplicate entry {name:?}")));
            }
            attribute_pool.push(name.to_string());
        }
        if pool.is_empty() {
            return Err(pool_node.violation("the attribute pool is empty"));
        }
        let in_pool = |item: &Node<'_>| -> Result<(), FormatError> {
            let name = item.str()?;
            if pool.contains(name) {
                Ok(())
            } else {
                Err(item.violation(format!("attribute {name:?} is not in attribute_pool")))
            }
        };

        let mut users = Vec::new();
        let mut ids = BTreeSet::new();
        for entry in root.field("users")?.items()? {
            entry.record(&["id", "attributes"], &[])?;
            let id_node = entry.field("id")?;
            let id = id_node.nonempty_str()?;
            if !ids.insert(id) {
                return Err(id_node.violation(format!("duplicate user id {id:?}")));
            }
            let attrs = entry.field("attributes")?;
            for item in attrs.items()? {
                in_pool(&item)?;
            }
            let attributes = attrs.string_set(Node::attribute_name)?;
            if attributes.is_empty() {
                return Err(attrs.violation("a user needs at least one attribute"));
            }
            users.push(UserRecord { user_id: id.to_string(), attributes });
        }

        let policy_node = root.field("policy")?;
        let policy = parse_policy(&policy_node)?;
        for item in policy_node.field("attributes")?.items()? {
            in_pool(&item)?;
        }
        for item in policy_node.field("revoked")?.items()? {
            let id = item.str()?;
            if !ids.contains(id) {
                return Err(item.violation(format!("revoked user {id:?} is not listed in users")));
            }
        }
        Ok(ConfigFile { curve, users, policy, attribute_pool })
    }
}

pub fn load_config(bytes: &[u8]) -> Result<ConfigFile, FormatError> {
    ConfigFile::from_json(&Node::root(&parse_json(bytes)?))
}

pub fn save_config(config: &ConfigFile) -> Vec<u8> {
    canonical_bytes(&config.to_json())
}

// ---- keys -----------------------------------------------------------------

/// `msk` is absent when the master secret was written to a separate file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeysFile {
    pub mpk: MasterPublicKey,
    pub msk: Option<MasterSecretKey>,
    pub user_keys: Vec<UserPrivateKey>,
}

impl KeysFile {
    pub fn user_key(&self, user_id: &str) -> Option<&UserPrivateKey> {
        self.user_keys.iter().find(|k| k.user_id == user_id)
    }
}

fn mpk_json(mpk: &MasterPublicKey) -> Value {
    let attributes: Map<String, Value> = mpk
        .attributes
        .iter()
        .map(|(k, a)| (k.clone(), json!({"t": a.t.to_hex(), "y": a.y.to_hex()})))
        .collect();
    let users: Map<String, Value> = mpk.users.iter().map(|(k, u)| (k.clone(), Value::String(u.u.to_hex()))).collect();
    json!({
        "curve": curve_json(&mpk.curve),
        "g1": mpk.g1.to_hex(),
        "g2": mpk.g2.to_hex(),
        "e_gg": mpk.e_gg.to_hex(),
        "attributes": attributes,
        "users": users,
        "phantom": mpk.phantom.u.to_hex(),
    })
}

fn parse_mpk(node: &Node) -> Result<MasterPublicKey, FormatError> {
    node.record(&["curve", "g1", "g2", "e_gg", "attributes", "users", "phantom"], &[])?;
    let curve = parse_supported_curve(&node.field("curve")?)?;
    let g1_node = node.field("g1")?;
    let g2_node = node.field("g2")?;
    let g1 = g1_node.element(Group::G1)?;
    let g2 = g2_node.element(Group::G2)?;
    if g1.encode() != curve.g1 {
        return Err(g1_node.violation("does not match the curve generator"));
    }
    if g2.encode() != curve.g2 {
        return Err(g2_node.violation("does not match the curve generator"));
    }
    let e_gg = node.field("e_gg")?.element(Group::Gt)?;

    let mut attributes = BTreeMap::new();
    for (name, entry) in node.field("attributes")?.entries()? {
        entry.attribute_name_key(name)?;
        entry.record(&["t", "y"], &[])?;
        attributes.insert(
            name.to_string(),
            AttributePublicKey { t: entry.field("t")?.element(Group::G2)?, y: entry.field("y")?.element(Group::Gt)? },
        );
    }
    let mut users = BTreeMap::new();
    for (id, entry) in node.field("users")?.entries()? {
        if id.is_empty() {
            return Err(entry.violation("user ids must not be empty"));
        }
        users.insert(id.to_string(), UserPublicKey { x: user_identity(id), u: entry.element(Group::G2)? });
    }
    let phantom = UserPublicKey { x: crate::abbe::phantom_identity(), u: node.field("phantom")?.element(Group::G2)? };
    Ok(MasterPublicKey { curve, g1, g2, e_gg, attributes, users, phantom })
}

impl Node<'_> {
    fn attribute_name_key(&self, name: &str) -> Result<(), FormatError> {
        if name.is_empty() || name.len() > MAX_ATTRIBUTE_NAME_LEN {
            return Err(self.violation(format!("attribute names are 1..={MAX_ATTRIBUTE_NAME_LEN} bytes")));
        }
        Ok(())
    }
}

fn msk_json(msk: &MasterSecretKey) -> Value {
    let attributes: Map<String, Value> = msk.attributes.iter().map(|(k, a)| (k.clone(), scalar_json(a))).collect();
    let registry: Map<String, Value> = msk.registry.iter().map(|(k, attrs)| (k.clone(), set_json(attrs))).collect();
    json!({
        "curve": curve_json(&msk.curve),
        "alpha": scalar_json(&msk.alpha),
        "b": scalar_json(&msk.b),
        "h": scalar_json(&msk.h),
        "attributes": attributes,
        "key_seed": hex::encode(msk.key_seed),
        "registry": registry,
    })
}

fn parse_msk(node: &Node) -> Result<MasterSecretKey, FormatError> {
    node.record(&["curve", "alpha", "b", "h", "attributes", "key_seed", "registry"], &[])?;
    let curve = parse_supported_curve(&node.field("curve")?)?;
    let mut attributes = BTreeMap::new();
    for (name, entry) in node.field("attributes")?.entries()? {
        entry.attribute_name_key(name)?;
        attributes.insert(name.to_string(), entry.scalar()?);
    }
    let seed_node = node.field("key_seed")?;
    let key_seed: [u8; 32] =
        seed_node.lower_hex()?.try_into().map_err(|_| seed_node.violation("expected 32 bytes of hex"))?;
    let mut registry = BTreeMap::new();
    for (id, entry) in node.field("registry")?.entries()? {
        if id.is_empty() {
            return Err(entry.violation("user ids must not be empty"));
        }
        let attrs = entry.string_set(Node::attribute_name)?;
        for item in entry.items()? {
            let name = item.str()?;
            if !attributes.contains_key(name) {
                return Err(item.violation(format!("attribute {name:?} has no master secret")));
            }
        }
        registry.insert(id.to_string(), attrs);
    }
    Ok(MasterSecretKey {
        curve,
        alpha: node.field("alpha")?.scalar()?,
        b: node.field("b")?.scalar()?,
        h: node.field("h")?.scalar()?,
        attributes,
        key_seed,
        registry,
    })
}

fn user_key_json(key: &UserPrivateKey) -> Value {
    json!({
        "user_id": key.user_id,
        "attributes": set_json(&key.attributes),
        "elements": elements_json(&key.elements),
    })
}

fn parse_user_key(node: &Node) -> Result<UserPrivateKey, FormatError> {
    node.record(&["user_id", "attributes", "elements"], &[])?;
    let user_id = node.field("user_id")?.nonempty_str()?.to_string();
    let attrs_node = node.field("attributes")?;
    let attributes = attrs_node.string_set(Node::attribute_name)?;
    if attributes.is_empty() {
        return Err(attrs_node.violation("a user needs at least one attribute"));
    }
    let elements_node = node.field("elements")?;
    let items = elements_node.items()?;
    if items.len() != 2 + attributes.len() {
        return Err(elements_node.violation(format!(
            "expected {} elements for {} attributes, found {}",
            2 + attributes.len(),
            attributes.len(),
            items.len()
        )));
    }
    let elements = items.iter().map(|e| e.element(Group::G1)).collect::<Result<Vec<_>, _>>()?;
    Ok(UserPrivateKey { user_id, attributes, elements })
}

impl KeysFile {
    fn to_json(&self) -> Value {
        let mut root = Map::new();
        root.insert("mpk".into(), mpk_json(&self.mpk));
        if let Some(msk) = &self.msk {
            root.insert("msk".into(), msk_json(msk));
        }
        root.insert("user_keys".into(), Value::Array(self.user_keys.iter().map(user_key_json).collect()));
        Value::Object(root)
    }

    fn from_json(root: &Node) -> Result<Self, FormatError> {
        root.record(&["mpk", "user_keys"], &["msk"])?;
        let mpk_node = root.field("mpk")?;
        let mpk = parse_mpk(&mpk_node)?;
        let msk = match root.opt_field("msk")? {
            Some(node) => {
                let msk = parse_msk(&node)?;
                if msk.curve != mpk.curve {
                    return Err(node.field("curve")?.violation("differs from $.mpk.curve"));
                }
                if msk.attributes.keys().ne(mpk.attributes.keys()) {
                    return Err(node.field("attributes")?.violation("attribute set differs from $.mpk.attributes"));
                }
                if msk.registry.keys().ne(mpk.users.keys()) {
                    return Err(node.field("registry")?.violation("user set differs from $.mpk.users"));
                }
                Some(msk)
            }
            None => None,
        };
        let mut user_keys = Vec::new();
        let mut seen = BTreeSet::new();
        for item in root.field("user_keys")?.items()? {
            let key = parse_user_key(&item)?;
            if !mpk.users.contains_key(&key.user_id) {
                return Err(item.field("user_id")?.violation(format!("user {:?} is not in $.mpk.users", key.user_id)));
            }
            if !seen.insert(key.user_id.clone()) {
                return Err(item.field("user_id")?.violation(format!("second key for user {:?}", key.user_id)));
            }
            for attr in item.field("attributes")?.items()? {
                if !mpk.attributes.contains_key(attr.str()?) {
                    return Err(attr.violation("attribute is not in $.mpk.attributes"));
                }
            }
            user_keys.push(key);
        }
        Ok(KeysFile { mpk, msk, user_keys })
    }
}

pub fn load_keys(bytes: &[u8]) -> Result<KeysFile, FormatError> {
    KeysFile::from_json(&Node::root(&parse_json(bytes)?))
}

pub fn save_keys(keys: &KeysFile) -> Vec<u8> {
    canonical_bytes(&keys.to_json())
}

// ---- header ---------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeaderFile {
    pub header: AbbeHeader,
    pub kdf: String,
}

impl HeaderFile {
    pub fn new(header: AbbeHeader) -> Self {
        HeaderFile { header, kdf: KDF_TAG.to_string() }
    }

    pub(crate) fn to_json(&self) -> Value {
        json!({
            "policy": policy_json(&self.header.policy),
            "elements": elements_json(&self.header.elements),
            "kdf": self.kdf,
        })
    }

    pub(crate) fn from_value(value: &Value) -> Result<Self, FormatError> {
        let root = Node::root(value);
        root.record(&["policy", "elements", "kdf"], &[])?;
        let policy = parse_policy(&root.field("policy")?)?;
        let kdf_node = root.field("kdf")?;
        if kdf_node.str()? != KDF_TAG {
            return Err(kdf_node.violation(format!("unsupported kdf, expected {KDF_TAG:?}")));
        }
        let elements_node = root.field("elements")?;
        let items = elements_node.items()?;
        let layout = AbbeHeader::layout(policy.revoked_users.len());
        if items.len() != layout.len() {
            return Err(elements_node.violation(format!(
                "expected {} elements for {} revoked users, found {}",
                layout.len(),
                policy.revoked_users.len(),
                items.len()
            )));
        }
        let elements =
            items.iter().zip(layout).map(|(e, g)| e.element(g)).collect::<Result<Vec<_>, FormatError>>()?;
        Ok(HeaderFile { header: AbbeHeader { policy, elements }, kdf: KDF_TAG.to_string() })
    }
}

pub fn load_header(bytes: &[u8]) -> Result<HeaderFile, FormatError> {
    HeaderFile::from_value(&parse_json(bytes)?)
}

pub fn save_header(header: &HeaderFile) -> Vec<u8> {
    canonical_bytes(&header.to_json())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abbe::{encapsulate, keygen, setup, AttributeUniverse};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn config() -> ConfigFile {
        ConfigFile {
            curve: CurveParams::default_curve(),
            users: vec![UserRecord::new("alice", ["a", "b", "c"]), UserRecord::new("bob", ["a"])],
            policy: AccessPolicy::new(["a"], ["bob"]),
            attribute_pool: vec!["c".into(), "a".into(), "b".into()],
        }
    }

    fn keys(config: &ConfigFile, seed: u64) -> KeysFile {
        let universe = AttributeUniverse::new(config.attribute_pool.clone()).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (mpk, msk) = setup(&config.curve, &universe, &config.users, &mut rng).unwrap();
        let user_keys = config.users.iter().map(|u| keygen(&msk, u).unwrap()).collect();
        KeysFile { mpk, msk: Some(msk), user_keys }
    }

    fn violation_path<T: std::fmt::Debug>(r: Result<T, FormatError>) -> String {
        match r.unwrap_err() {
            FormatError::SchemaViolation { path, .. } => path,
            e => panic!("expected a schema violation, got {e}"),
        }
    }

    fn edit(bytes: &[u8], f: impl FnOnce(&mut Value)) -> Vec<u8> {
        let mut v: Value = serde_json::from_slice(bytes).unwrap();
        f(&mut v);
        serde_json::to_vec_pretty(&v).unwrap()
    }

    #[test]
    fn config_roundtrip_and_canonical_form() {
        let c = config();
        let bytes = save_config(&c);
        assert_eq!(load_config(&bytes).unwrap(), c);
        // pretty-printed input loads to the same value and saves canonically
        let pretty = edit(&bytes, |_| {});
        assert_ne!(pretty, bytes);
        assert_eq!(save_config(&load_config(&pretty).unwrap()), bytes);
        assert!(!bytes.contains(&b' ') && !bytes.contains(&b'\n'));
    }

    #[test]
    fn config_violations_report_paths() {
        let bytes = save_config(&config());
        let cases: Vec<(Box<dyn FnOnce(&mut Value)>, &str)> = vec![
            (Box::new(|v| v["policy"]["attributes"] = json!(["zzz"])), "$.policy.attributes[0]"),
            (Box::new(|v| v["users"][1]["id"] = json!("alice")), "$.users[1].id"),
            (Box::new(|v| v["users"][0]["attributes"] = json!(["a", "q"])), "$.users[0].attributes[1]"),
            (Box::new(|v| v["users"][1]["attributes"] = json!(["a", "a"])), "$.users[1].attributes[1]"),
            (Box::new(|v| v["policy"]["revoked"] = json!(["carol"])), "$.policy.revoked[0]"),
            (Box::new(|v| v["policy"]["attributes"] = json!([])), "$.policy.attributes"),
            (Box::new(|v| v["extra"] = json!(1)), "$.extra"),
            (Box::new(|v| v["curve"]["p"] = json!("0x1234")), "$.curve"),
            (Box::new(|v| v["curve"]["p"] = json!("0X12")), "$.curve.p"),
            (Box::new(|v| v["users"][0].as_object_mut().unwrap().remove("id").map(|_| ()).unwrap()), "$.users[0]"),
            (Box::new(|v| v["attribute_pool"] = json!(["a", "b", "c", "a"])), "$.attribute_pool[3]"),
            (Box::new(|v| v["attribute_pool"][0] = json!("x".repeat(65))), "$.attribute_pool[0]"),
        ];
        for (f, path) in cases {
            assert_eq!(violation_path(load_config(&edit(&bytes, f))), path);
        }
        assert!(matches!(load_config(b"{not json"), Err(FormatError::Json { .. })));
        assert!(matches!(load_config(&[0xff, 0xfe]), Err(FormatError::Json { .. })));
    }

    #[test]
    fn keys_roundtrip_and_element_counts() {
        let c = config();
        let k = keys(&c, 1);
        let bytes = save_keys(&k);
        let loaded = load_keys(&bytes).unwrap();
        assert_eq!(loaded, k);
        assert_eq!(save_keys(&loaded), bytes);
        assert_eq!(loaded.user_key("alice").unwrap().elements.len(), 5);
        assert_eq!(loaded.user_key("bob").unwrap().elements.len(), 3);
    }

    #[test]
    fn setup_only_and_split_keys_files() {
        let mut k = keys(&config(), 2);
        k.user_keys.clear();
        assert_eq!(load_keys(&save_keys(&k)).unwrap(), k);
        k.msk = None;
        assert_eq!(load_keys(&save_keys(&k)).unwrap(), k);
    }

    #[test]
    fn keys_violations_name_the_element() {
        let bytes = save_keys(&keys(&config(), 3));
        let path = violation_path(load_keys(&edit(&bytes, |v| {
            // both flags set with a nonzero x is never a valid encoding
            v["user_keys"][0]["elements"][2] = json!("ff".repeat(32));
        })));
        assert_eq!(path, "$.user_keys[0].elements[2]");
        let path = violation_path(load_keys(&edit(&bytes, |v| {
            v["mpk"]["attributes"]["a"]["t"] = json!("zz");
        })));
        assert_eq!(path, "$.mpk.attributes.a.t");
        let path = violation_path(load_keys(&edit(&bytes, |v| {
            v["msk"]["alpha"] = json!("0x0001");
        })));
        assert_eq!(path, "$.msk.alpha");
        let path = violation_path(load_keys(&edit(&bytes, |v| {
            v["user_keys"][1]["elements"].as_array_mut().unwrap().pop();
        })));
        assert_eq!(path, "$.user_keys[1].elements");
    }

    #[test]
    fn header_roundtrip_without_key_material() {
        let c = config();
        let k = keys(&c, 4);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for policy in [AccessPolicy::new(["a", "b"], Vec::<String>::new()), c.policy.clone()] {
            let (_, header) = encapsulate(&k.mpk, &policy, &mut rng).unwrap();
            let file = HeaderFile::new(header);
            let bytes = save_header(&file);
            let loaded = load_header(&bytes).unwrap();
            assert_eq!(loaded, file);
            assert_eq!(loaded.header.elements.len(), policy.revoked_users.len() + 3);
            assert_eq!(save_header(&loaded), bytes);
        }
    }

    #[test]
    fn header_violations() {
        let k = keys(&config(), 6);
        let (_, header) = encapsulate(&k.mpk, &AccessPolicy::new(["a"], ["bob"]), &mut ChaCha20Rng::seed_from_u64(7))
            .unwrap();
        let bytes = save_header(&HeaderFile::new(header));
        assert_eq!(violation_path(load_header(&edit(&bytes, |v| v["kdf"] = json!("md5")))), "$.kdf");
        assert_eq!(
            violation_path(load_header(&edit(&bytes, |v| v["policy"]["revoked"] = json!([])))),
            "$.elements"
        );
        assert_eq!(
            violation_path(load_header(&edit(&bytes, |v| {
                let g2 = v["elements"][1].clone();
                v["elements"][0] = g2;
            }))),
            "$.elements[0]"
        );
    }

    #[test]
    fn policy_bytes_are_order_independent() {
        let a = AccessPolicy::new(["b", "a"], ["y", "x"]);
        let b = AccessPolicy::new(["a", "b"], ["x", "y"]);
        assert_eq!(policy_canonical_bytes(&a), policy_canonical_bytes(&b));
        assert_eq!(policy_canonical_bytes(&a), br#"{"attributes":["a","b"],"revoked":["x","y"]}"#);
    }
}
