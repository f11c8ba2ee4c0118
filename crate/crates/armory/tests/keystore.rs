mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use armory::clock::{parse_rfc3339, Clock};
use armory::keystore::{Keystore, KeystoreConfig, KeystoreError, PackageOptions};
use armory_core::sign::{verify_encoded, SignedArtifact};
use common::{fixture, CLOCK};

fn clock() -> Clock {
    Clock::Fixed(parse_rfc3339(CLOCK).unwrap())
}

fn policy() -> Vec<PathBuf> {
    vec![PathBuf::from(fixture("talker_listener/policy.xml"))]
}

fn provision(root: &Path) -> Keystore {
    let ks = Keystore::init(root, KeystoreConfig::default(), clock()).unwrap();
    for s in ["/talker", "/listener"] {
        ks.create_package(s, &policy(), PackageOptions::default()).unwrap();
        ks.build_package(s).unwrap();
        ks.install_package(s).unwrap();
    }
    ks
}

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(base, &path, out);
            } else {
                let rel = path.strip_prefix(base).unwrap().display().to_string();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

#[test]
fn layout_after_install() {
    let dir = tempfile::tempdir().unwrap();
    provision(dir.path());
    let files: Vec<String> = tree(dir.path()).into_keys().collect();
    let expected = [
        "build/listener/governance.xml",
        "build/listener/identity.pub",
        "build/listener/permissions.xml",
        "build/listener/private/identity.key",
        "build/talker/governance.xml",
        "build/talker/identity.pub",
        "build/talker/permissions.xml",
        "build/talker/private/identity.key",
        "ca/private",
        "ca/public",
        "install/listener/governance.p7s",
        "install/listener/identity.pub",
        "install/listener/permissions.p7s",
        "install/listener/private/identity.key",
        "install/talker/governance.p7s",
        "install/talker/identity.pub",
        "install/talker/permissions.p7s",
        "install/talker/private/identity.key",
        "keystore.cfg",
        "src/listener/manifest.cfg",
        "src/talker/manifest.cfg",
    ];
    assert_eq!(files, expected);
}

#[cfg(unix)]
#[test]
fn private_material_is_owner_only() {
    use std::os::unix::fs::PermissionsExt;
    let dir = tempfile::tempdir().unwrap();
    provision(dir.path());
    for f in ["ca/private", "install/talker/private/identity.key", "build/talker/private/identity.key"] {
        let mode = fs::metadata(dir.path().join(f)).unwrap().permissions().mode();
        assert_eq!(mode & 0o777, 0o600, "{f}");
    }
}

#[test]
fn pinned_clock_is_byte_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    provision(a.path());
    provision(b.path());
    assert_eq!(tree(a.path()), tree(b.path()));
}

#[test]
fn init_guards() {
    let dir = tempfile::tempdir().unwrap();
    Keystore::init(dir.path(), KeystoreConfig::default(), clock()).unwrap();
    assert!(matches!(
        Keystore::init(dir.path(), KeystoreConfig::default(), clock()),
        Err(KeystoreError::AlreadyInitialized(_))
    ));

    let other = tempfile::tempdir().unwrap();
    fs::write(other.path().join("stray"), "x").unwrap();
    assert!(matches!(
        Keystore::init(other.path(), KeystoreConfig::default(), clock()),
        Err(KeystoreError::NotEmpty(_))
    ));

    let fresh = tempfile::tempdir().unwrap();
    let bad = KeystoreConfig {
        validity_days: 0,
        ..KeystoreConfig::default()
    };
    assert!(matches!(
        Keystore::init(&fresh.path().join("ks"), bad, clock()),
        Err(KeystoreError::InvalidConfig(_))
    ));
    assert!(matches!(
        Keystore::open(&fresh.path().join("ks"), clock()),
        Err(KeystoreError::NotInitialized(_))
    ));
}

#[test]
fn package_phase_errors() {
    let dir = tempfile::tempdir().unwrap();
    let ks = Keystore::init(dir.path(), KeystoreConfig::default(), clock()).unwrap();
    ks.create_package("/talker", &policy(), PackageOptions::default()).unwrap();
    assert!(matches!(
        ks.create_package("/talker", &policy(), PackageOptions::default()),
        Err(KeystoreError::DuplicatePackage(_))
    ));
    assert!(matches!(ks.install_package("/talker"), Err(KeystoreError::NotBuilt(_))));
    assert!(matches!(ks.verify_installed("/talker"), Err(KeystoreError::NotInstalled(_))));
    assert!(matches!(ks.build_package("/nobody"), Err(KeystoreError::UnknownPackage(_))));

    let (_, warnings) = ks.create_package("/ghost", &policy(), PackageOptions::default()).unwrap();
    assert_eq!(warnings.len(), 1);
    assert!(matches!(ks.build_package("/ghost"), Err(KeystoreError::NoApplicableProfile(_))));
    assert!(!ks.build_dir("/ghost").exists());
    assert_eq!(ks.packages().unwrap(), ["/ghost", "/talker"]);
}

#[test]
fn installed_permissions_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ks = provision(dir.path());
    let doc = ks.verify_installed("/talker").unwrap();
    let built = fs::read_to_string(ks.build_dir("/talker").join("permissions.xml")).unwrap();
    assert_eq!(armory::permissions_xml::write_permissions(&doc), built);
}

#[test]
fn tampered_install_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let ks = provision(dir.path());
    let path = ks.install_dir("/talker").join("permissions.p7s");
    let mut bytes = fs::read(&path).unwrap();
    let artifact = SignedArtifact::decode(&bytes).unwrap();
    assert!(verify_encoded(&ks.trust_root().unwrap(), &bytes));
    let last = bytes.len() - 2;
    bytes[last] ^= 0x01;
    fs::write(&path, &bytes).unwrap();
    assert!(matches!(ks.verify_installed("/talker"), Err(KeystoreError::VerificationFailed(_))));
    assert!(!artifact.payload.is_empty());
}

#[test]
fn different_seed_different_signatures() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ka = provision(a.path());
    let cfg = KeystoreConfig {
        ca_seed: "other".into(),
        ..KeystoreConfig::default()
    };
    let kb = Keystore::init(b.path(), cfg, clock()).unwrap();
    let foreign = fs::read(ka.install_dir("/talker").join("permissions.p7s")).unwrap();
    assert!(!verify_encoded(&kb.trust_root().unwrap(), &foreign));
}
