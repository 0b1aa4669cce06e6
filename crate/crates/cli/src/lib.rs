//! Experiment harness for the `accelopt` solvers: config parsing, the
//! `run`, `bounds` and `certify` commands, and the run-directory layout.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod bounds;
pub mod certify;
pub mod config;
pub mod experiment;

use std::path::{Path, PathBuf};

/// Environment variable that prefixes relative output directories.
pub const OUT_ROOT_ENV: &str = "ACCELOPT_OUT_ROOT";

/// Resolves `out` against `$ACCELOPT_OUT_ROOT` when `out` is relative.
pub fn resolve_out(out: &Path, root: Option<&Path>) -> PathBuf {
    match root {
        Some(root) if out.is_relative() => root.join(out),
        _ => out.to_path_buf(),
    }
}
