#![allow(dead_code)]

use std::path::{Path, PathBuf};

pub const CLOCK: &str = "2024-01-01T00:00:00Z";

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the command line in-process.
pub fn armory<S: AsRef<str>>(args: &[S]) -> Output {
    let mut argv = vec![String::from("armory")];
    argv.extend(args.iter().map(|a| a.as_ref().to_string()));
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = armory::cli::run(argv, &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).expect("utf-8 stdout"),
        stderr: String::from_utf8(err).expect("utf-8 stderr"),
    }
}

pub fn fixture(rel: &str) -> String {
    workspace().join("fixtures").join(rel).display().to_string()
}

pub fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}
