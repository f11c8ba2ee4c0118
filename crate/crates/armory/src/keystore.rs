//! Keystore workspaces: init, create, build and install per-subject bundles.
//!
//! Layout under the keystore root:
//!
//! ```text
//! keystore.cfg                    key = value settings
//! ca/public                       CA name, algorithm, key fingerprint
//! ca/private                      CA signing key (hex)
//! src/<pkg>/manifest.cfg          subject, policy sources, compile flags
//! build/<pkg>/permissions.xml     compiled, unsigned
//! build/<pkg>/governance.xml
//! build/<pkg>/identity.pub
//! build/<pkg>/private/identity.key
//! install/<pkg>/permissions.p7s   signed containers
//! install/<pkg>/governance.p7s
//! install/<pkg>/identity.pub
//! install/<pkg>/private/identity.key
//! ```
//!
//! `<pkg>` is the subject with the leading `/` removed and `/` replaced by `__`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use armory_core::dds::{compile_permissions, mangle_subject, CompileOptions, MappingMode, PermissionsDocument};
use armory_core::error::{CompileError, SignError};
use armory_core::eval::applicable_profiles;
use armory_core::sign::{hex, sign_document, unhex, verify_encoded, MockSigner, SignedArtifact, TrustRoot, MOCK_ALGORITHM};
use armory_core::PolicyTree;
use thiserror::Error;

use crate::clock::Clock;
use crate::permissions_xml::{parse_permissions, write_permissions, PermissionsFormatError};
use crate::policy_xml::{load_policy, PolicyFileError};

pub const CONFIG_FILE: &str = "keystore.cfg";
pub const MANIFEST_FILE: &str = "manifest.cfg";
const DEFAULT_CA_NAME: &str = "armory-ca";

#[derive(Debug, Error)]
pub enum KeystoreError {
    #[error("keystore already initialized at {0}")]
    AlreadyInitialized(PathBuf),
    #[error("{0} is not empty; refusing to initialize a keystore there")]
    NotEmpty(PathBuf),
    #[error("no keystore at {0}; run `keystore init` first")]
    NotInitialized(PathBuf),
    #[error("invalid keystore configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid package manifest {path}: {message}")]
    InvalidManifest { path: PathBuf, message: String },
    #[error("package for `{0}` already exists")]
    DuplicatePackage(String),
    #[error("no package for `{0}`")]
    UnknownPackage(String),
    #[error("package for `{0}` has not been built")]
    NotBuilt(String),
    #[error("package for `{0}` has not been installed")]
    NotInstalled(String),
    #[error("no profile in the package policy applies to `{0}`")]
    NoApplicableProfile(String),
    #[error("installed artifact {0} failed verification")]
    VerificationFailed(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Policy(#[from] PolicyFileError),
    #[error(transparent)]
    Compile(CompileError),
    #[error(transparent)]
    Permissions(#[from] PermissionsFormatError),
    #[error(transparent)]
    Sign(#[from] SignError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> KeystoreError + '_ {
    move |source| KeystoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), KeystoreError> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn read(path: &Path) -> Result<Vec<u8>, KeystoreError> {
    fs::read(path).map_err(io_err(path))
}

fn read_text(path: &Path) -> Result<String, KeystoreError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn mkdir(path: &Path) -> Result<(), KeystoreError> {
    fs::create_dir_all(path).map_err(io_err(path))
}

#[cfg(unix)]
fn restrict(path: &Path) -> Result<(), KeystoreError> {
    use std::os::unix::fs::PermissionsExt;
    fs::set_permissions(path, fs::Permissions::from_mode(0o600)).map_err(io_err(path))
}

#[cfg(not(unix))]
fn restrict(_path: &Path) -> Result<(), KeystoreError> {
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignerKind {
    Mock,
    /// Reserved for a real PKI backend; signing with it fails.
    External,
}

impl SignerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SignerKind::Mock => "mock",
            SignerKind::External => "external",
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment line.
fn parse_kv(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", n + 1))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn parse_bool(key: &str, v: &str) -> Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("`{key}` must be true or false, got `{v}`")),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeystoreConfig {
    pub ca_name: String,
    /// Mixed into the CA key derivation.
    pub ca_seed: String,
    pub domains: BTreeSet<u32>,
    pub validity_days: u32,
    pub mapping: MappingMode,
    pub signer: SignerKind,
}

impl Default for KeystoreConfig {
    fn default() -> Self {
        Self {
            ca_name: DEFAULT_CA_NAME.into(),
            ca_seed: String::new(),
            domains: BTreeSet::from([0]),
            validity_days: CompileOptions::DEFAULT_VALIDITY_DAYS,
            mapping: MappingMode::Ardent,
            signer: SignerKind::Mock,
        }
    }
}

impl KeystoreConfig {
    pub fn validate(&self) -> Result<(), KeystoreError> {
        let bad = |m: &str| Err(KeystoreError::InvalidConfig(m.to_string()));
        if self.validity_days < 1 {
            return bad("validity_days must be at least 1");
        }
        if self.domains.is_empty() {
            return bad("at least one domain id is required");
        }
        if self.ca_name.trim().is_empty() || self.ca_name.contains('\n') {
            return bad("ca_name must be a non-empty single line");
        }
        if self.ca_seed.contains('\n') {
            return bad("ca_seed must be a single line");
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let domains: Vec<String> = self.domains.iter().map(u32::to_string).collect();
        let mut s = String::new();
        let _ = writeln!(s, "ca_name = {}", self.ca_name);
        let _ = writeln!(s, "ca_seed = {}", self.ca_seed);
        let _ = writeln!(s, "domains = {}", domains.join(","));
        let _ = writeln!(s, "validity_days = {}", self.validity_days);
        let _ = writeln!(s, "mapping = {}", self.mapping);
        let _ = writeln!(s, "signer = {}", self.signer.as_str());
        s
    }

    pub fn parse(text: &str) -> Result<Self, KeystoreError> {
        let bad = KeystoreError::InvalidConfig;
        let mut cfg = KeystoreConfig::default();
        for (k, v) in parse_kv(text).map_err(bad)? {
            match k.as_str() {
                "ca_name" => cfg.ca_name = v,
                "ca_seed" => cfg.ca_seed = v,
                "domains" => cfg.domains = parse_domains(&v).map_err(bad)?,
                "validity_days" => {
                    cfg.validity_days = v.parse().map_err(|_| bad(format!("validity_days `{v}` is not a number")))?
                }
                "mapping" => cfg.mapping = v.parse().map_err(bad)?,
                "signer" => {
                    cfg.signer = match v.as_str() {
                        "mock" => SignerKind::Mock,
                        "external" => SignerKind::External,
                        _ => return Err(bad(format!("unknown signer `{v}`"))),
                    }
                }
                _ => return Err(bad(format!("unknown key `{k}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Comma- or space-separated domain ids.
pub fn parse_domains(v: &str) -> Result<BTreeSet<u32>, String> {
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<u32>().map_err(|_| format!("domain id `{s}` is not a number")))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackageManifest {
    pub subject: String,
    pub policy_sources: Vec<PathBuf>,
    pub amend_empty_partition: bool,
    pub fold: bool,
}

impl PackageManifest {
    pub fn name(&self) -> String {
        mangle_subject(&self.subject)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "subject = {}", self.subject);
        for p in &self.policy_sources {
            let _ = writeln!(s, "policy = {}", p.display());
        }
        let _ = writeln!(s, "amend_empty_partition = {}", self.amend_empty_partition);
        let _ = writeln!(s, "fold = {}", self.fold);
        s
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut m = PackageManifest {
            subject: String::new(),
            policy_sources: Vec::new(),
            amend_empty_partition: false,
            fold: false,
        };
        for (k, v) in parse_kv(text)? {
            match k.as_str() {
                "subject" => m.subject = v,
                "policy" => m.policy_sources.push(PathBuf::from(v)),
                "amend_empty_partition" => m.amend_empty_partition = parse_bool(&k, &v)?,
                "fold" => m.fold = parse_bool(&k, &v)?,
                _ => return Err(format!("unknown key `{k}`")),
            }
        }
        if m.subject.is_empty() {
            return Err("missing `subject`".into());
        }
        if m.policy_sources.is_empty() {
            return Err("missing `policy`".into());
        }
        Ok(m)
    }
}

/// Per-package compile switches chosen at `create` time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PackageOptions {
    pub amend_empty_partition: bool,
    pub fold: bool,
}

/// Loads and concatenates the profiles of several policy files.
pub fn load_sources(paths: &[PathBuf]) -> Result<PolicyTree, KeystoreError> {
    let mut merged: Option<PolicyTree> = None;
    for p in paths {
        let tree = load_policy(p)?;
        merged = Some(match merged {
            None => tree,
            Some(mut m) => {
                m.profiles.extend(tree.profiles);
                m.rules.extend(tree.rules);
                m
            }
        });
    }
    let tree = merged.unwrap_or_else(|| PolicyTree::new("empty"));
    tree.validate()
        .map_err(|e| KeystoreError::Policy(PolicyFileError::Import(e.into())))?;
    Ok(tree)
}

pub fn governance_payload(config: &KeystoreConfig) -> String {
    let mut s = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<domain_access_rules>\n  <domain_rule>\n    <domains>\n");
    for d in &config.domains {
        let _ = writeln!(s, "      <id>{d}</id>");
    }
    s.push_str(
        "    </domains>\n\
         \x20   <allow_unauthenticated_participants>false</allow_unauthenticated_participants>\n\
         \x20   <enable_join_access_control>true</enable_join_access_control>\n\
         \x20   <discovery_protection_kind>ENCRYPT</discovery_protection_kind>\n\
         \x20   <liveliness_protection_kind>ENCRYPT</liveliness_protection_kind>\n\
         \x20   <rtps_protection_kind>SIGN</rtps_protection_kind>\n\
         \x20   <topic_access_rules>\n\
         \x20     <topic_rule>\n\
         \x20       <topic_expression>*</topic_expression>\n\
         \x20       <enable_discovery_protection>true</enable_discovery_protection>\n\
         \x20       <enable_read_access_control>true</enable_read_access_control>\n\
         \x20       <enable_write_access_control>true</enable_write_access_control>\n\
         \x20       <metadata_protection_kind>ENCRYPT</metadata_protection_kind>\n\
         \x20       <data_protection_kind>ENCRYPT</data_protection_kind>\n\
         \x20     </topic_rule>\n\
         \x20   </topic_access_rules>\n\
         \x20 </domain_rule>\n\
         </domain_access_rules>\n",
    );
    s
}

/// An initialized keystore directory.
#[derive(Debug, Clone)]
pub struct Keystore {
    root: PathBuf,
    config: KeystoreConfig,
    clock: Clock,
}

impl Keystore {
    pub fn init(root: &Path, config: KeystoreConfig, clock: Clock) -> Result<Self, KeystoreError> {
        config.validate()?;
        if root.join(CONFIG_FILE).exists() {
            return Err(KeystoreError::AlreadyInitialized(root.to_path_buf()));
        }
        if root.exists() {
            let mut entries = fs::read_dir(root).map_err(io_err(root))?;
            if entries.next().is_some() {
                return Err(KeystoreError::NotEmpty(root.to_path_buf()));
            }
        }
        for dir in ["ca", "src", "build", "install"] {
            mkdir(&root.join(dir))?;
        }
        let ks = Keystore {
            root: root.to_path_buf(),
            config,
            clock,
        };
        let mut public = String::new();
        let _ = writeln!(public, "name: {}", ks.config.ca_name);
        match ks.config.signer {
            SignerKind::Mock => {
                let signer = MockSigner::derive(ks.config.ca_name.clone(), ks.config.ca_seed.as_bytes());
                let _ = writeln!(public, "algorithm: {MOCK_ALGORITHM}");
                let _ = writeln!(public, "fingerprint: {}", armory_core::sign::payload_digest(signer.key()));
                let private = ks.root.join("ca/private");
                write(&private, format!("{}\n", hex(signer.key())))?;
                restrict(&private)?;
            }
            SignerKind::External => {
                let _ = writeln!(public, "algorithm: external");
            }
        }
        write(&ks.root.join("ca/public"), public)?;
        // the config file goes last: its presence marks a complete init
        write(&ks.root.join(CONFIG_FILE), ks.config.to_text())?;
        Ok(ks)
    }

    pub fn open(root: &Path, clock: Clock) -> Result<Self, KeystoreError> {
        let cfg_path = root.join(CONFIG_FILE);
        if !cfg_path.is_file() {
            return Err(KeystoreError::NotInitialized(root.to_path_buf()));
        }
        let config = KeystoreConfig::parse(&read_text(&cfg_path)?)?;
        Ok(Keystore {
            root: root.to_path_buf(),
            config,
            clock,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config(&self) -> &KeystoreConfig {
        &self.config
    }

    fn signer(&self) -> Result<MockSigner, KeystoreError> {
        match self.config.signer {
            SignerKind::External => Err(SignError::UnknownSigner(SignerKind::External.as_str().into()).into()),
            SignerKind::Mock => {
                let path = self.root.join("ca/private");
                let text = read_text(&path)?;
                let bytes = unhex(text.trim()).filter(|b| b.len() == 32).ok_or_else(|| {
                    KeystoreError::InvalidConfig(format!("{} does not hold a 32-byte hex key", path.display()))
                })?;
                let mut key = [0u8; 32];
                key.copy_from_slice(&bytes);
                Ok(MockSigner::from_key(self.config.ca_name.clone(), key))
            }
        }
    }

    pub fn trust_root(&self) -> Result<TrustRoot, KeystoreError> {
        Ok(self.signer()?.trust_root())
    }

    pub fn src_dir(&self, subject: &str) -> PathBuf {
        self.root.join("src").join(mangle_subject(subject))
    }

    pub fn build_dir(&self, subject: &str) -> PathBuf {
        self.root.join("build").join(mangle_subject(subject))
    }

    pub fn install_dir(&self, subject: &str) -> PathBuf {
        self.root.join("install").join(mangle_subject(subject))
    }

    /// Stages a package. Returns the manifest and any warnings; a subject with no
    /// applicable profile is only a warning here and fails at build.
    pub fn create_package(
        &self,
        subject: &str,
        policies: &[PathBuf],
        options: PackageOptions,
    ) -> Result<(PackageManifest, Vec<String>), KeystoreError> {
        if !subject.starts_with('/') {
            return Err(KeystoreError::InvalidConfig(format!("subject `{subject}` is not absolute")));
        }
        let dir = self.src_dir(subject);
        if dir.exists() {
            return Err(KeystoreError::DuplicatePackage(subject.to_string()));
        }
        let sources = policies
            .iter()
            .map(|p| fs::canonicalize(p).map_err(io_err(p)))
            .collect::<Result<Vec<_>, _>>()?;
        let tree = load_sources(&sources)?;
        let mut warnings = Vec::new();
        let applicable = applicable_profiles(&tree, subject).map_err(|e| KeystoreError::Compile(e.into()))?;
        if applicable.is_empty() {
            warnings.push(format!("no profile in the policy applies to `{subject}`; build will fail"));
        }
        let manifest = PackageManifest {
            subject: subject.to_string(),
            policy_sources: sources,
            amend_empty_partition: options.amend_empty_partition,
            fold: options.fold,
        };
        mkdir(&dir)?;
        write(&dir.join(MANIFEST_FILE), manifest.to_text())?;
        Ok((manifest, warnings))
    }

    pub fn manifest(&self, subject: &str) -> Result<PackageManifest, KeystoreError> {
        let path = self.src_dir(subject).join(MANIFEST_FILE);
        if !path.is_file() {
            return Err(KeystoreError::UnknownPackage(subject.to_string()));
        }
        PackageManifest::parse(&read_text(&path)?).map_err(|message| KeystoreError::InvalidManifest { path, message })
    }

    /// Subjects of every staged package, sorted.
    pub fn packages(&self) -> Result<Vec<String>, KeystoreError> {
        let src = self.root.join("src");
        let mut out = Vec::new();
        for entry in fs::read_dir(&src).map_err(io_err(&src))? {
            let entry = entry.map_err(io_err(&src))?;
            let path = entry.path().join(MANIFEST_FILE);
            if path.is_file() {
                let m = PackageManifest::parse(&read_text(&path)?)
                    .map_err(|message| KeystoreError::InvalidManifest { path, message })?;
                out.push(m.subject);
            }
        }
        out.sort();
        Ok(out)
    }

    /// Compiles the package into its build directory; nothing is signed.
    pub fn build_package(&self, subject: &str) -> Result<PathBuf, KeystoreError> {
        let manifest = self.manifest(subject)?;
        let tree = load_sources(&manifest.policy_sources)?;
        let opts = CompileOptions {
            now: self.clock.now(),
            validity_days: self.config.validity_days,
            domains: self.config.domains.clone(),
            amend_empty_partition: manifest.amend_empty_partition,
            fold: manifest.fold,
        };
        let doc = compile_permissions(&tree, subject, self.config.mapping, &opts).map_err(|e| match e {
            CompileError::NoApplicableProfile(s) => KeystoreError::NoApplicableProfile(s),
            e => KeystoreError::Compile(e),
        })?;
        let identity = match self.config.signer {
            SignerKind::Mock => Some(self.signer()?.issue_identity(subject)),
            SignerKind::External => None,
        };

        let dir = self.build_dir(subject);
        let staging = self.root.join("build").join(format!(".{}.partial", manifest.name()));
        if staging.exists() {
            fs::remove_dir_all(&staging).map_err(io_err(&staging))?;
        }
        mkdir(&staging.join("private"))?;
        write(&staging.join("permissions.xml"), write_permissions(&doc))?;
        write(&staging.join("governance.xml"), governance_payload(&self.config))?;
        if let Some(id) = identity {
            write(&staging.join("identity.pub"), id.public_text())?;
            let key = staging.join("private/identity.key");
            write(&key, format!("{}\n", hex(&id.private_token)))?;
            restrict(&key)?;
        }
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(io_err(&dir))?;
        }
        fs::rename(&staging, &dir).map_err(io_err(&dir))?;
        Ok(dir)
    }

    /// Signs the built payloads and copies the bundle into the install directory.
    pub fn install_package(&self, subject: &str) -> Result<PathBuf, KeystoreError> {
        self.manifest(subject)?;
        let build = self.build_dir(subject);
        if ["permissions.xml", "governance.xml"].iter().any(|f| !build.join(f).is_file()) {
            return Err(KeystoreError::NotBuilt(subject.to_string()));
        }
        let signer = self.signer()?;
        let permissions = sign_document(&signer, &read(&build.join("permissions.xml"))?)?;
        let governance = sign_document(&signer, &read(&build.join("governance.xml"))?)?;

        let dir = self.install_dir(subject);
        mkdir(&dir.join("private"))?;
        write(&dir.join("permissions.p7s"), permissions.encode())?;
        write(&dir.join("governance.p7s"), governance.encode())?;
        write(&dir.join("identity.pub"), read(&build.join("identity.pub"))?)?;
        let key = dir.join("private/identity.key");
        write(&key, read(&build.join("private/identity.key"))?)?;
        restrict(&key)?;
        Ok(dir)
    }

    /// Checks both signed artifacts of an installed package against the CA and
    /// returns the permissions document they carry.
    pub fn verify_installed(&self, subject: &str) -> Result<PermissionsDocument, KeystoreError> {
        let dir = self.install_dir(subject);
        let root = self.trust_root()?;
        let mut permissions = None;
        for name in ["governance.p7s", "permissions.p7s"] {
            let path = dir.join(name);
            if !path.is_file() {
                return Err(KeystoreError::NotInstalled(subject.to_string()));
            }
            let bytes = read(&path)?;
            if !verify_encoded(&root, &bytes) {
                return Err(KeystoreError::VerificationFailed(path));
            }
            permissions = Some(SignedArtifact::decode(&bytes)?);
        }
        let payload = permissions.expect("loop ran").payload;
        let xml = String::from_utf8(payload).map_err(|_| {
            KeystoreError::Permissions(PermissionsFormatError::Malformed {
                line: 1,
                col: 1,
                message: "payload is not UTF-8".into(),
            })
        })?;
        Ok(parse_permissions(&xml)?)
    }
}
