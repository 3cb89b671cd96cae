mod common;

use std::collections::BTreeSet;
use std::path::Path;

use common::{config, csv_rows, json, qcl, run};

/// Small grids and sample counts so each run takes a few seconds.
const QUICK: &[&str] = &[
    "grid.k=16",
    "grid.samples_per_cell=16",
    "density.decay_n_max=10",
    "spectrum.n_steps=100",
    "lambda.n_fibers=200",
    "lambda.batches=10",
    "lambda.mc_n=50",
    "lambda.mc_plan.n_samples=2000",
    "variance.series_plan.n_samples=2000",
    "variance.empirical_plan.n_samples=2000",
    "variance.empirical_n=200",
    "clt.plan.n_samples=2000",
    "clt.ns=[20, 200]",
    "clt.paths=2",
    "ldp.plan.n_samples=2000",
    "ldp.ns=[20, 40]",
    "lclt.plan.n_samples=2000",
    "lclt.n=200",
];

/// The coboundary structure only survives discretization on a finer grid.
fn coboundary_quick() -> Vec<&'static str> {
    let mut v = QUICK.to_vec();
    v.extend(["grid.k=32", "grid.samples_per_cell=32"]);
    v
}

fn as_str(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

fn files_in(dir: &Path) -> BTreeSet<String> {
    std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect()
}

fn manifest_files(dir: &Path) -> BTreeSet<String> {
    let m = json(&dir.join("manifest.json"));
    m["files"]
        .as_object()
        .unwrap()
        .values()
        .flat_map(|v| v.as_array().unwrap().iter().map(|e| e["path"].as_str().unwrap().to_string()))
        .collect()
}

#[test]
fn lambda_csv_contains_the_zero_row() {
    let dir = tempfile::tempdir().unwrap();
    run("lambda", &config("standard"), dir.path(), QUICK);
    let text = std::fs::read_to_string(dir.path().join("lambda.csv")).unwrap();
    assert!(text.starts_with("method,theta,lambda,std_err\n"));
    let rows = csv_rows(&dir.path().join("lambda.csv"));
    let zero = rows.iter().find(|r| r[0] == "operator" && r[1].parse::<f64>().unwrap() == 0.0).expect("θ = 0 row");
    assert_eq!(zero[2], "0.0000000000000000e0");
    assert!(rows.iter().any(|r| r[0] == "monte_carlo"));
}

#[test]
fn verify_clt_is_byte_identical_across_runs_and_pool_sizes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = config("standard");
    let args = |workers: &'static str, out: &Path| {
        let mut v = vec!["verify-clt".to_string(), "--config".into(), cfg.display().to_string()];
        v.extend(["--workers".into(), workers.into(), "--out".into(), out.display().to_string()]);
        for s in QUICK {
            v.extend(["--set".to_string(), s.to_string()]);
        }
        v
    };
    let (args_a, args_b) = (args("1", a.path()), args("3", b.path()));
    let (ra, rb) = (qcl(&as_str(&args_a), &[]), qcl(&as_str(&args_b), &[]));
    assert_eq!(ra.status.code(), rb.status.code());
    let names = files_in(a.path());
    assert_eq!(names, files_in(b.path()));
    for name in names.iter().filter(|n| *n != "manifest.json") {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
    let (ma, mb) = (json(&a.path().join("manifest.json")), json(&b.path().join("manifest.json")));
    assert_eq!(ma["files"], mb["files"]);
    assert_eq!(ma["config_hash"], mb["config_hash"]);
}

#[test]
fn resolved_config_reproduces_the_run() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run("variance", &config("dissipative"), a.path(), QUICK);
    // the resolved config is JSON with every override already applied
    run("variance", &a.path().join("config.json"), b.path(), &[]);
    let (ma, mb) = (json(&a.path().join("manifest.json")), json(&b.path().join("manifest.json")));
    assert_eq!(ma["config_hash"], mb["config_hash"]);
    assert_eq!(ma["files"], mb["files"]);
    assert_eq!(ma["exit_code"], mb["exit_code"]);
}

#[test]
fn manifest_lists_every_file_and_comes_last() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("all", &config("coboundary"), dir.path(), &coboundary_quick());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let mut on_disk = files_in(dir.path());
    assert!(on_disk.remove("manifest.json"));
    assert_eq!(on_disk, manifest_files(dir.path()));
    let manifest = std::fs::metadata(dir.path().join("manifest.json")).unwrap().modified().unwrap();
    for f in &on_disk {
        assert!(std::fs::metadata(dir.path().join(f)).unwrap().modified().unwrap() <= manifest);
    }
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["exit_code"], 3);
    assert_eq!(m["summary"]["verify-clt"], "refused");
}

#[test]
fn coboundary_pipeline_exits_with_the_degenerate_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("all", &config("coboundary"), dir.path(), &coboundary_quick());
    assert_eq!(out.status.code(), Some(3));
    let v = json(&dir.path().join("verdict.json"));
    assert_eq!(v["gates"]["variance"]["verdict"], "degenerate");
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate variance"));
    assert!(!dir.path().join("clt.csv").exists());
}

#[test]
fn lattice_observable_is_refused_by_the_local_limit_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("verify-lclt", &config("lattice"), dir.path(), QUICK);
    assert_eq!(out.status.code(), Some(3));
    let v = json(&dir.path().join("verdict.json"));
    assert_eq!(v["gates"]["aperiodicity"]["verdict"], "fail");
    assert!(!dir.path().join("lclt.csv").exists());
}

#[test]
fn invalid_configs_are_rejected_with_their_field() {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/invalid");
    let mut cases: Vec<_> = std::fs::read_dir(&corpus).unwrap().map(|e| e.unwrap().path()).collect();
    cases.sort();
    assert!(cases.len() >= 20);
    let out_dir = tempfile::tempdir().unwrap();
    for case in cases {
        let text = std::fs::read_to_string(&case).unwrap();
        let expect = text.lines().next().and_then(|l| l.strip_prefix("# expect: ")).expect("expect line");
        let out = run("density", &case, out_dir.path(), &[]);
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert_eq!(out.status.code(), Some(2), "{}: {stderr}", case.display());
        assert!(stderr.contains(expect), "{}: {stderr}", case.display());
    }
    assert!(files_in(out_dir.path()).is_empty());
}

#[test]
fn bad_overrides_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for set in ["grid.k", "grid.k=-3", "system.maps.9.kind=linear", "nosuch.field=1"] {
        let out = run("density", &config("standard"), dir.path(), &[set]);
        assert_eq!(out.status.code(), Some(2), "{set}");
    }
    let out = qcl(&["density", "--config", config("standard").to_str().unwrap()], &[("QCL_SEED", "minus one")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_hash_ignores_key_order_and_format() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.toml");
    let b = dir.path().join("b.toml");
    let c = dir.path().join("c.json");
    std::fs::write(
        &a,
        "seed = 5\n[system]\ndistribution = [1.0]\nmaps = [{ kind = \"linear\" }]\n\
         [observable]\nsymbols = [[{ frequency = [1, 0], cos = 1.0, sin = 0.5 }]]\n[grid]\nk = 4\nsamples_per_cell = 2\n",
    )
    .unwrap();
    std::fs::write(
        &b,
        "[grid]\nsamples_per_cell = 2\nk = 4\n[observable]\nsymbols = [[{ sin = 0.5, cos = 1.0, frequency = [1, 0] }]]\n\
         [system]\nmaps = [{ kind = \"linear\" }]\ndistribution = [1.0]\n",
    )
    .unwrap();
    std::fs::write(
        &c,
        r#"{"grid": {"samples_per_cell": 2, "k": 4}, "observable": {"symbols": [[{"sin": 0.5, "frequency": [1, 0], "cos": 1.0}]]},
            "system": {"maps": [{"kind": "linear"}], "distribution": [1.0]}, "seed": 5}"#,
    )
    .unwrap();
    let hash = |path: &Path, env: &[(&str, &str)]| {
        let out = dir.path().join(format!("out-{}", path.file_name().unwrap().to_str().unwrap()));
        let o = qcl(&["density", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()], env);
        assert_ne!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
        json(&out.join("manifest.json"))["config_hash"].as_str().unwrap().to_string()
    };
    // a top-level `seed` after the tables would land in [system], so b.toml
    // takes its seed from the environment
    let ha = hash(&a, &[]);
    assert_eq!(ha, hash(&b, &[("QCL_SEED", "5")]));
    assert_eq!(ha, hash(&c, &[]));
    assert_ne!(ha, hash(&a, &[("QCL_SEED", "6")]));
}

#[test]
fn reports_embed_hash_version_and_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = qcl(
        &["spectrum", "--config", config("standard").to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--set", "grid.k=8"],
        &[("QCL_SEED", "77")],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&dir.path().join("spectrum.json"));
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(r["config_hash"], m["config_hash"]);
    assert_eq!(r["seeds"]["root"], 77);
    assert!(r["tool_version"].as_str().unwrap().starts_with("qcl "));
    assert_eq!(json(&dir.path().join("config.json"))["seed"], 77);
}
