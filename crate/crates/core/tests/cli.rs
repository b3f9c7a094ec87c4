//! End-to-end tests of the `wvamag` binary: exit codes, byte-identical
//! output, manifest contents, sweeps and output-directory precedence.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use wvamag::cli::output::sha256_hex;

const BASE: &str = "params.lambda_coupling = 500.0\nparams.theta_postselect = 1e-3\n";

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wvamag"));
    cmd.env_remove("WVAMAG_OUT_DIR");
    cmd
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("failed to spawn wvamag")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(bin().arg("--help")).status.code(), Some(0));
    assert_eq!(run(bin().arg("--version")).status.code(), Some(0));
}

#[test]
fn unknown_experiment_or_flag_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", BASE);
    let out = run(bin()
        .args(["teleport", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path()));
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stderr(&out).contains("experiment"));

    let out = run(bin().args(["estimate", "--bogus"]));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_required_key_names_the_key() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "params.theta_postselect = 1e-3\n");
    let out = run(bin()
        .args(["kick", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("o")));
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("params.lambda_coupling"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn unknown_key_and_bad_value_are_config_errors() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &format!("{BASE}params.lamda = 3.0\n"));
    let out = run(bin()
        .args(["kick", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("o")));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("params.lamda"), "{}", stderr(&out));

    let cfg = write_config(tmp.path(), "d.toml", BASE);
    let out = run(bin()
        .args(["kick", "--config"])
        .arg(&cfg)
        .args(["--set", "params.fock_cutoff=-2", "--out"])
        .arg(tmp.path().join("o")));
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("params.fock_cutoff"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn leaving_the_weak_regime_exits_two() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "params.lambda_coupling = 500.0\nparams.theta_postselect = 0.1\nparams.omega_g = 10.0\n",
    );
    let out = run(bin()
        .args(["kick", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("o")));
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(
        !tmp.path().join("o").exists(),
        "nothing is written on failure"
    );
}

#[test]
fn runs_are_byte_identical_and_manifest_is_complete() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", BASE);
    for experiment in ["estimate", "kick", "flywheel", "fisher", "husimi"] {
        let a = tmp.path().join(format!("{experiment}-a"));
        let b = tmp.path().join(format!("{experiment}-b"));
        for dir in [&a, &b] {
            let out = run(bin()
                .arg(experiment)
                .arg("--config")
                .arg(&cfg)
                .arg("--out")
                .arg(dir));
            assert_eq!(out.status.code(), Some(0), "{experiment}: {}", stderr(&out));
        }
        let (fa, fb) = (read_dir_bytes(&a), read_dir_bytes(&b));
        assert_eq!(fa, fb, "{experiment} output differs between runs");

        let manifest: Value = serde_json::from_slice(&fa["manifest.json"]).unwrap();
        assert_eq!(manifest["experiment"], experiment);
        assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
        assert!(manifest["modules"]
            .as_object()
            .unwrap()
            .contains_key("fisher"));
        let files = manifest["files"].as_array().unwrap();
        assert_eq!(
            files.len() + 1,
            fa.len(),
            "{experiment}: manifest lists every other file"
        );
        for f in files {
            let name = f["path"].as_str().unwrap();
            let bytes = &fa[name];
            assert_eq!(f["bytes"].as_u64().unwrap() as usize, bytes.len());
            assert_eq!(f["sha256"].as_str().unwrap(), sha256_hex(bytes));
        }
    }
}

#[test]
fn toml_json_and_set_overrides_give_the_same_hash() {
    let tmp = TempDir::new().unwrap();
    let toml = write_config(
        tmp.path(),
        "c.toml",
        "[params]\nlambda_coupling = 500.0\ntheta_postselect = 2e-3\n",
    );
    let json = write_config(
        tmp.path(),
        "c.json",
        r#"{"params": {"lambda_coupling": 500.0, "theta_postselect": 2e-3}}"#,
    );
    let set = write_config(tmp.path(), "s.toml", BASE);
    let mut hashes = Vec::new();
    for (i, (cfg, extra)) in [
        (&toml, None),
        (&json, None),
        (&set, Some("params.theta_postselect=2e-3")),
    ]
    .into_iter()
    .enumerate()
    {
        let dir = tmp.path().join(format!("o{i}"));
        let mut cmd = bin();
        cmd.arg("estimate")
            .arg("--config")
            .arg(cfg)
            .arg("--out")
            .arg(&dir);
        if let Some(s) = extra {
            cmd.args(["--set", s]);
        }
        let out = run(&mut cmd);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let m: Value =
            serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap();
        hashes.push(m["config_hash"].as_str().unwrap().to_string());
    }
    assert_eq!(hashes[0], hashes[1]);
    assert_eq!(hashes[0], hashes[2]);
}

#[test]
fn manifest_config_reproduces_the_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        &format!("{BASE}options.n_kicks = 3\n"),
    );
    let first = tmp.path().join("first");
    assert_eq!(
        run(bin()
            .arg("kick")
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(&first))
        .status
        .code(),
        Some(0)
    );
    let manifest: Value =
        serde_json::from_slice(&fs::read(first.join("manifest.json")).unwrap()).unwrap();
    let replay = write_config(
        tmp.path(),
        "replay.json",
        &serde_json::to_string(&manifest["config"]).unwrap(),
    );
    let second = tmp.path().join("second");
    let out = run(bin()
        .arg("kick")
        .arg("--config")
        .arg(&replay)
        .arg("--out")
        .arg(&second));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(read_dir_bytes(&first), read_dir_bytes(&second));
}

#[test]
fn sweep_is_sorted_and_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        &format!("{BASE}[sweep]\nparameter = \"params.theta_postselect\"\nscale = \"log\"\nstart = 1e-3\nstop = 1e-7\npoints = 5\n"),
    );
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let out = run(bin()
            .arg("fisher")
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(dir));
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    let fa = read_dir_bytes(&a);
    assert_eq!(fa, read_dir_bytes(&b));
    let csv = String::from_utf8(fa["sweep.csv"].clone()).unwrap();
    let values: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 5);
    assert!(
        values.windows(2).all(|w| w[0] < w[1]),
        "sweep rows sorted: {values:?}"
    );
    assert!(csv
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(1) == Some("ok")));
}

#[test]
fn output_directory_precedence() {
    let tmp = TempDir::new().unwrap();
    let env_dir = tmp.path().join("env");
    let cfg_dir = tmp.path().join("cfg");
    let flag_dir = tmp.path().join("flag");
    let plain = write_config(tmp.path(), "plain.toml", BASE);
    let with_dir = write_config(
        tmp.path(),
        "dir.toml",
        &format!("output_dir = \"{}\"\n{BASE}", cfg_dir.display()),
    );

    let out = run(bin()
        .env("WVAMAG_OUT_DIR", &env_dir)
        .arg("estimate")
        .arg("--config")
        .arg(&plain));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(env_dir.join("manifest.json").exists());

    let out = run(bin()
        .env("WVAMAG_OUT_DIR", &env_dir)
        .arg("estimate")
        .arg("--config")
        .arg(&with_dir));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(cfg_dir.join("manifest.json").exists());

    let out = run(bin()
        .env("WVAMAG_OUT_DIR", &env_dir)
        .arg("estimate")
        .arg("--config")
        .arg(&with_dir)
        .arg("--out")
        .arg(&flag_dir));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(flag_dir.join("manifest.json").exists());

    // The output location never enters the results.
    assert_eq!(read_dir_bytes(&env_dir), read_dir_bytes(&cfg_dir));
    assert_eq!(read_dir_bytes(&env_dir), read_dir_bytes(&flag_dir));
}
