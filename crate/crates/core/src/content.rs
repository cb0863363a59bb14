//! AES-256-GCM payload encryption under an ABBE session key.
//!
//! On-disk `.aes` layout, all integers big-endian:
//!
//! ```text
//! "ABBE1" | nonce (12) | name_len (u16) | header name (UTF-8) | ciphertext | tag (16)
//! ```
//!
//! The whole ciphertext is a single GCM message whose associated data is
//! `"ABBE1" | name_len | header name`, so it decrypts with any standard
//! AES-256-GCM implementation. The streaming functions process it in 1 MiB
//! chunks and keep memory bounded regardless of the object size.

use std::io::{self, Read, Write};

use aes::cipher::{BlockEncrypt, KeyInit, KeyIvInit, StreamCipher};
use aes::Aes256;
use ghash::universal_hash::UniversalHash;
use ghash::GHash;
use rand::{CryptoRng, RngCore};
use thiserror::Error;

use crate::abbe::SessionKey;
use crate::ndn::Name;

pub const MAGIC: &[u8; 5] = b"ABBE1";
pub const NONCE_LEN: usize = 12;
pub const TAG_LEN: usize = 16;
/// Bytes a ciphertext grows by, not counting the file preamble.
pub const OVERHEAD: usize = NONCE_LEN + TAG_LEN;
pub const CHUNK_LEN: usize = 1 << 20;

type Ctr = ctr::Ctr32BE<Aes256>;

#[derive(Debug, Error)]
pub enum ContentError {
    #[error("authentication failed: wrong key or corrupted ciphertext")]
    AuthFailure,
    #[error("malformed encrypted object: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncryptedObject {
    pub nonce: [u8; NONCE_LEN],
    pub ciphertext: Vec<u8>,
    pub tag: [u8; TAG_LEN],
    pub header_name: Name,
}

fn associated_data(header_name: &Name) -> Result<Vec<u8>, ContentError> {
    let name = header_name.to_string();
    let len = u16::try_from(name.len()).map_err(|_| ContentError::Malformed("header name too long".into()))?;
    let mut aad = Vec::with_capacity(MAGIC.len() + 2 + name.len());
    aad.extend_from_slice(MAGIC);
    aad.extend_from_slice(&len.to_be_bytes());
    aad.extend_from_slice(name.as_bytes());
    Ok(aad)
}

/// Incremental GCM over one message.
struct Gcm {
    ctr: Ctr,
    ghash: GHash,
    tag_mask: [u8; 16],
    pending: [u8; 16],
    pending_len: usize,
    aad_len: u64,
    ct_len: u64,
}

impl Gcm {
    fn new(key: &SessionKey, nonce: &[u8; NONCE_LEN], aad: &[u8]) -> Self {
        let cipher = Aes256::new(key.as_bytes().into());
        let mut h = [0u8; 16].into();
        cipher.encrypt_block(&mut h);

        let mut j0 = [0u8; 16];
        j0[..NONCE_LEN].copy_from_slice(nonce);
        j0[15] = 1;
        let mut tag_mask = j0.into();
        cipher.encrypt_block(&mut tag_mask);
        let mut first_counter = j0;
        first_counter[15] = 2;

        let mut ghash = GHash::new(&h);
        ghash.update_padded(aad);
        Gcm {
            ctr: Ctr::new(key.as_bytes().into(), &first_counter.into()),
            ghash,
            tag_mask: tag_mask.into(),
            pending: [0; 16],
            pending_len: 0,
            aad_len: aad.len() as u64,
            ct_len: 0,
        }
    }

    fn absorb(&mut self, mut ciphertext: &[u8]) {
        self.ct_len += ciphertext.len() as u64;
        if self.pending_len > 0 {
            let take = (16 - self.pending_len).min(ciphertext.len());
            self.pending[self.pending_len..self.pending_len + take].copy_from_slice(&ciphertext[..take]);
            self.pending_len += take;
            ciphertext = &ciphertext[take..];
            if self.pending_len < 16 {
                return;
            }
            self.ghash.update(&[self.pending.into()]);
            self.pending_len = 0;
        }
        let full = ciphertext.len() / 16 * 16;
        self.ghash.update_padded(&ciphertext[..full]);
        let rest = &ciphertext[full..];
        self.pending[..rest.len()].copy_from_slice(rest);
        self.pending_len = rest.len();
    }

    fn encrypt(&mut self, buf: &mut [u8]) {
        self.ctr.apply_keystream(buf);
        self.absorb(buf);
    }

    fn decrypt(&mut self, buf: &mut [u8]) {
        self.absorb(buf);
        self.ctr.apply_keystream(buf);
    }

    fn tag(mut self) -> [u8; TAG_LEN] {
        if self.pending_len > 0 {
            self.ghash.update_padded(&self.pending[..self.pending_len]);
        }
        let mut lengths = [0u8; 16];
        lengths[..8].copy_from_slice(&(self.aad_len * 8).to_be_bytes());
        lengths[8..].copy_from_slice(&(self.ct_len * 8).to_be_bytes());
        self.ghash.update(&[lengths.into()]);
        let mut tag: [u8; 16] = self.ghash.finalize().into();
        for (t, m) in tag.iter_mut().zip(self.tag_mask) {
            *t ^= m;
        }
        tag
    }
}

fn tags_equal(a: &[u8; TAG_LEN], b: &[u8]) -> bool {
    b.len() == TAG_LEN && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

pub fn encrypt_object<R: RngCore + CryptoRng>(
    key: &SessionKey,
    plaintext: &[u8],
    header_name: &Name,
    rng: &mut R,
) -> EncryptedObject {
    let aad = associated_data(header_name).expect("header names fit in u16");
    let (nonce, ciphertext, tag) = seal(key, &aad, plaintext, rng);
    EncryptedObject { nonce, ciphertext, tag, header_name: header_name.clone() }
}

pub fn decrypt_object(key: &SessionKey, obj: &EncryptedObject) -> Result<Vec<u8>, ContentError> {
    open(key, &associated_data(&obj.header_name)?, &obj.nonce, &obj.ciphertext, &obj.tag)
}

/// AES-256-GCM with caller-supplied associated data.
pub(crate) fn seal<R: RngCore + CryptoRng>(
    key: &SessionKey,
    aad: &[u8],
    plaintext: &[u8],
    rng: &mut R,
) -> ([u8; NONCE_LEN], Vec<u8>, [u8; TAG_LEN]) {
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    let mut gcm = Gcm::new(key, &nonce, aad);
    let mut ciphertext = plaintext.to_vec();
    gcm.encrypt(&mut ciphertext);
    (nonce, ciphertext, gcm.tag())
}

pub(crate) fn open(
    key: &SessionKey,
    aad: &[u8],
    nonce: &[u8; NONCE_LEN],
    ciphertext: &[u8],
    tag: &[u8; TAG_LEN],
) -> Result<Vec<u8>, ContentError> {
    let mut gcm = Gcm::new(key, nonce, aad);
    let mut plaintext = ciphertext.to_vec();
    gcm.decrypt(&mut plaintext);
    if !tags_equal(&gcm.tag(), tag) {
        return Err(ContentError::AuthFailure);
    }
    Ok(plaintext)
}

impl EncryptedObject {
    /// The `.aes` file bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = associated_data(&self.header_name).expect("header names fit in u16");
        out.splice(MAGIC.len()..MAGIC.len(), self.nonce);
        out.extend_from_slice(&self.ciphertext);
        out.extend_from_slice(&self.tag);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ContentError> {
        let mut reader = bytes;
        let (nonce, header_name) = read_preamble(&mut reader)?;
        if reader.len() < TAG_LEN {
            return Err(ContentError::Malformed("missing authentication tag".into()));
        }
        let (ciphertext, tag) = reader.split_at(reader.len() - TAG_LEN);
        Ok(EncryptedObject {
            nonce,
            ciphertext: ciphertext.to_vec(),
            tag: tag.try_into().expect("TAG_LEN bytes"),
            header_name,
        })
    }
}

fn read_exact_or_malformed<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<(), ContentError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => ContentError::Malformed(format!("truncated {what}")),
        _ => ContentError::Io(e),
    })
}

/// Reads the magic, nonce and header name.
pub fn read_preamble<R: Read>(r: &mut R) -> Result<([u8; NONCE_LEN], Name), ContentError> {
    let mut magic = [0u8; 5];
    read_exact_or_malformed(r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(ContentError::Malformed("bad magic".into()));
    }
    let mut nonce = [0u8; NONCE_LEN];
    read_exact_or_malformed(r, &mut nonce, "nonce")?;
    let mut len = [0u8; 2];
    read_exact_or_malformed(r, &mut len, "header name length")?;
    let mut name = vec![0u8; u16::from_be_bytes(len) as usize];
    read_exact_or_malformed(r, &mut name, "header name")?;
    let name = String::from_utf8(name).map_err(|_| ContentError::Malformed("header name is not UTF-8".into()))?;
    let name = name.parse().map_err(|e| ContentError::Malformed(format!("header name: {e}")))?;
    Ok((nonce, name))
}

fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

/// Streams `input` into an `.aes` file on `output`. Returns the plaintext length.
pub fn encrypt_stream<R: Read, W: Write, G: RngCore + CryptoRng>(
    key: &SessionKey,
    header_name: &Name,
    mut input: R,
    mut output: W,
    rng: &mut G,
) -> Result<u64, ContentError> {
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    let aad = associated_data(header_name)?;
    output.write_all(MAGIC)?;
    output.write_all(&nonce)?;
    output.write_all(&aad[MAGIC.len()..])?;

    let mut gcm = Gcm::new(key, &nonce, &aad);
    let mut buf = vec![0u8; CHUNK_LEN];
    let mut total = 0u64;
    loop {
        let n = read_full(&mut input, &mut buf)?;
        if n == 0 {
            break;
        }
        gcm.encrypt(&mut buf[..n]);
        output.write_all(&buf[..n])?;
        total += n as u64;
    }
    output.write_all(&gcm.tag())?;
    output.flush()?;
    Ok(total)
}

/// Streams an `.aes` file from `input`, writing plaintext to `output`.
///
/// Plaintext is written before the tag is checked. On `Err` everything
/// written to `output` must be discarded.
pub fn decrypt_stream<R: Read, W: Write>(
    key: &SessionKey,
    mut input: R,
    mut output: W,
) -> Result<(Name, u64), ContentError> {
    let (nonce, header_name) = read_preamble(&mut input)?;
    let mut gcm = Gcm::new(key, &nonce, &associated_data(&header_name)?);

    // The last TAG_LEN bytes seen so far are held back: they may be the tag.
    let mut buf = vec![0u8; CHUNK_LEN + TAG_LEN];
    let mut filled = 0;
    let mut total = 0u64;
    loop {
        let n = read_full(&mut input, &mut buf[filled..])?;
        filled += n;
        if filled < buf.len() {
            break;
        }
        let ready = filled - TAG_LEN;
        gcm.decrypt(&mut buf[..ready]);
        output.write_all(&buf[..ready])?;
        total += ready as u64;
        buf.copy_within(ready..filled, 0);
        filled = TAG_LEN;
    }
    if filled < TAG_LEN {
        return Err(ContentError::Malformed("missing authentication tag".into()));
    }
    let ready = filled - TAG_LEN;
    gcm.decrypt(&mut buf[..ready]);
    output.write_all(&buf[..ready])?;
    total += ready as u64;
    if !tags_equal(&gcm.tag(), &buf[ready..filled]) {
        return Err(ContentError::AuthFailure);
    }
    output.flush()?;
    Ok((header_name, total))
}
