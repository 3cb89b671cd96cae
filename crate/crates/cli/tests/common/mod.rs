//! Helpers shared by the CLI integration tests and the acceptance suite.
#![allow(dead_code)]

extern crate openblas_src;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use num_complex::Complex64;
use qcl_core::operator::CsrMatrix;
use serde_json::Value;

pub fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml"))
}

/// Run the `qcl` binary; `QCL_SEED` is cleared unless given in `env`.
pub fn qcl(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qcl"));
    cmd.args(args).env_remove("QCL_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("qcl runs")
}

pub fn run(sub: &str, config: &Path, out: &Path, sets: &[&str]) -> Output {
    let mut args = vec![sub, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    for s in sets {
        args.extend(["--set", s]);
    }
    qcl(&args, &[])
}

pub fn json(path: &Path) -> Value {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&text).expect("valid JSON")
}

/// Data rows of a CSV file as strings, header dropped.
pub fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

/// All eigenvalues of a dense complex matrix (LAPACK `zgeev`), by
/// decreasing modulus.
pub fn dense_eigenvalues(m: &CsrMatrix<Complex64>) -> Vec<Complex64> {
    let n = m.dim();
    // column-major
    let mut a = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for (j, v) in m.row(i) {
            a[i + j * n] = v;
        }
    }
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    let mut vl = vec![Complex64::new(0.0, 0.0); 1];
    let mut vr = vec![Complex64::new(0.0, 0.0); 1];
    let mut work = vec![Complex64::new(0.0, 0.0); 4 * n];
    let mut rwork = vec![0.0; 2 * n];
    let mut info = 0;
    unsafe {
        lapack::zgeev(
            b'N', b'N', n as i32, &mut a, n as i32, &mut w, &mut vl, 1, &mut vr, 1, &mut work, 4 * n as i32, &mut rwork,
            &mut info,
        );
    }
    assert_eq!(info, 0, "zgeev failed");
    w.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    w
}
