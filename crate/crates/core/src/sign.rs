//! Abstract document signing with a deterministic keyed-hash mock backend.
//!
//! The mock scheme stands in for SMIME over X.509: a signer holds a 32-byte key
//! derived from its name and a seed, and signs with HMAC-SHA256 over the
//! algorithm tag, signer name and payload. Verification needs the same key, so a
//! mock [`TrustRoot`] carries it. The `algorithm` tag travels with every artifact
//! so a real PKI backend can reuse the container unchanged.
//!
//! Signed-artifact container (LF line endings):
//!
//! ```text
//! signer: <signer name>
//! algorithm: <algorithm tag>
//! digest: sha256:<hex of payload>
//! signature: <hex>
//! <base64 payload, 76 columns per line>
//! ```

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use hmac::{Hmac, KeyInit, Mac};
use sha2::{Digest, Sha256};

use crate::error::SignError;

pub const MOCK_ALGORITHM: &str = "mock-hmac-sha256";
const BASE64_COLUMNS: usize = 76;

type HmacSha256 = Hmac<Sha256>;

pub trait Signer {
    fn name(&self) -> &str;
    fn algorithm(&self) -> &str;
    fn sign(&self, payload: &[u8]) -> Result<Vec<u8>, SignError>;
}

/// Verification material for one signer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrustRoot {
    pub name: String,
    key: [u8; 32],
}

impl TrustRoot {
    pub fn from_key(name: impl Into<String>, key: [u8; 32]) -> Self {
        Self {
            name: name.into(),
            key,
        }
    }

    pub fn key(&self) -> &[u8; 32] {
        &self.key
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockSigner {
    name: String,
    key: [u8; 32],
}

impl MockSigner {
    /// Derives the signing key from the signer name and a seed.
    pub fn derive(name: impl Into<String>, seed: &[u8]) -> Self {
        let name = name.into();
        let mut h = Sha256::new();
        h.update(b"armory-mock-ca\0");
        h.update(name.as_bytes());
        h.update(b"\0");
        h.update(seed);
        let mut key = [0u8; 32];
        key.copy_from_slice(&h.finalize());
        Self { name, key }
    }

    pub fn from_key(name: impl Into<String>, key: [u8; 32]) -> Self {
        Self {
            name: name.into(),
            key,
        }
    }

    pub fn key(&self) -> &[u8; 32] {
        &self.key
    }

    pub fn trust_root(&self) -> TrustRoot {
        TrustRoot::from_key(self.name.clone(), self.key)
    }

    /// Issues a deterministic identity credential for `subject`.
    pub fn issue_identity(&self, subject: &str) -> IdentityCredential {
        let private_token = keyed(&self.key, &[b"identity\0", subject.as_bytes()]);
        let public_token = Sha256::digest(private_token.as_slice()).to_vec();
        IdentityCredential {
            subject_name: subject.to_string(),
            public_token,
            private_token,
            issuer: self.name.clone(),
        }
    }
}

impl Signer for MockSigner {
    fn name(&self) -> &str {
        &self.name
    }

    fn algorithm(&self) -> &str {
        MOCK_ALGORITHM
    }

    fn sign(&self, payload: &[u8]) -> Result<Vec<u8>, SignError> {
        Ok(mock_signature(&self.key, &self.name, payload))
    }
}

fn keyed(key: &[u8; 32], parts: &[&[u8]]) -> Vec<u8> {
    let mut mac = <HmacSha256 as KeyInit>::new_from_slice(key).expect("hmac accepts any key length");
    for p in parts {
        mac.update(p);
    }
    mac.finalize().into_bytes().to_vec()
}

fn mock_signature(key: &[u8; 32], signer: &str, payload: &[u8]) -> Vec<u8> {
    keyed(
        key,
        &[MOCK_ALGORITHM.as_bytes(), b"\0", signer.as_bytes(), b"\0", payload],
    )
}

/// A mock X.509 stand-in: subject, issuing CA and a token pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityCredential {
    pub subject_name: String,
    pub public_token: Vec<u8>,
    pub private_token: Vec<u8>,
    pub issuer: String,
}

impl IdentityCredential {
    /// Public part as `key: value` text; the private token is never included.
    pub fn public_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "subject: {}", self.subject_name);
        let _ = writeln!(s, "issuer: {}", self.issuer);
        let _ = writeln!(s, "public: {}", hex(&self.public_token));
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedArtifact {
    pub payload: Vec<u8>,
    pub signer_name: String,
    pub signature: Vec<u8>,
    pub algorithm: String,
}

pub fn sign_document(signer: &dyn Signer, payload: &[u8]) -> Result<SignedArtifact, SignError> {
    Ok(SignedArtifact {
        payload: payload.to_vec(),
        signer_name: signer.name().to_string(),
        signature: signer.sign(payload)?,
        algorithm: signer.algorithm().to_string(),
    })
}

/// True iff the artifact was signed by `root` and neither payload nor signature
/// changed since.
pub fn verify_document(root: &TrustRoot, artifact: &SignedArtifact) -> bool {
    if artifact.signer_name != root.name || artifact.algorithm != MOCK_ALGORITHM {
        return false;
    }
    let mut mac = <HmacSha256 as KeyInit>::new_from_slice(&root.key).expect("hmac accepts any key length");
    for p in [
        MOCK_ALGORITHM.as_bytes(),
        b"\0",
        artifact.signer_name.as_bytes(),
        b"\0",
        &artifact.payload,
    ] {
        mac.update(p);
    }
    mac.verify_slice(&artifact.signature).is_ok()
}

/// Verifies an encoded container. Any deviation from the canonical encoding of
/// its own content fails.
pub fn verify_encoded(root: &TrustRoot, bytes: &[u8]) -> bool {
    match SignedArtifact::decode(bytes) {
        Ok(artifact) => artifact.encode() == bytes && verify_document(root, &artifact),
        Err(_) => false,
    }
}

pub fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

pub fn unhex(s: &str) -> Option<Vec<u8>> {
    if !s.len().is_multiple_of(2) {
        return None;
    }
    (0..s.len())
        .step_by(2)
        .map(|i| {
            let pair = s.get(i..i + 2)?;
            if pair.bytes().any(|b| b.is_ascii_uppercase()) {
                return None;
            }
            u8::from_str_radix(pair, 16).ok()
        })
        .collect()
}

pub fn payload_digest(payload: &[u8]) -> String {
    let mut s = String::from("sha256:");
    s.push_str(&hex(&Sha256::digest(payload)));
    s
}

impl SignedArtifact {
    pub fn encode(&self) -> Vec<u8> {
        let mut s = String::new();
        let _ = writeln!(s, "signer: {}", self.signer_name);
        let _ = writeln!(s, "algorithm: {}", self.algorithm);
        let _ = writeln!(s, "digest: {}", payload_digest(&self.payload));
        let _ = writeln!(s, "signature: {}", hex(&self.signature));
        let body = STANDARD.encode(&self.payload);
        for chunk in body.as_bytes().chunks(BASE64_COLUMNS) {
            s.push_str(core::str::from_utf8(chunk).expect("base64 is ascii"));
            s.push('\n');
        }
        s.into_bytes()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, SignError> {
        let malformed = |m: &str| SignError::MalformedArtifact(m.to_string());
        let text = core::str::from_utf8(bytes).map_err(|_| malformed("not utf-8"))?;
        let mut lines = text.split('\n');
        let mut header = |key: &str| -> Result<&str, SignError> {
            let line = lines.next().ok_or_else(|| malformed("truncated header"))?;
            line.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(": "))
                .ok_or_else(|| SignError::MalformedArtifact(alloc::format!("expected `{key}` header")))
        };
        let signer_name = header("signer")?.to_string();
        let algorithm = header("algorithm")?.to_string();
        let digest = header("digest")?.to_string();
        let signature = unhex(header("signature")?).ok_or_else(|| malformed("signature is not hex"))?;
        let body: String = lines.collect();
        let payload = STANDARD
            .decode(body.as_bytes())
            .map_err(|_| malformed("payload is not base64"))?;
        if payload_digest(&payload) != digest {
            return Err(malformed("payload digest mismatch"));
        }
        Ok(Self {
            payload,
            signer_name,
            signature,
            algorithm,
        })
    }
}
