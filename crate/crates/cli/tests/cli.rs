use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wavekit_cli::checks::{cold_plasma_scenario, final_error, SPREADING, VACUUM};

fn wavekit(args: &[&std::ffi::OsStr]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavekit")).args(args).output().unwrap()
}

fn run_config(dir: &Path, name: &str, text: &str) -> (Output, PathBuf) {
    let cfg = dir.join(format!("{name}.toml"));
    std::fs::write(&cfg, text).unwrap();
    let out = dir.join(name);
    let o = wavekit(&["run".as_ref(), cfg.as_os_str(), "--out".as_ref(), out.as_os_str()]);
    (o, out)
}

fn files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[test]
fn runs_are_byte_identical_apart_from_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, da) = run_config(tmp.path(), "a", VACUUM);
    let (b, db) = run_config(tmp.path(), "b", VACUUM);
    assert!(a.status.success() && b.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let names = files(&da);
    assert_eq!(names, files(&db));
    for expected in ["beam_params.csv", "compare.json", "field_t000.csv", "oracle_t002.csv", "parametrix.json", "rays.csv", "run.json", "wigner_t001.csv"] {
        assert!(names.iter().any(|n| n == expected), "missing {expected}: {names:?}");
    }
    for n in names.iter().filter(|n| *n != "run.json") {
        assert_eq!(std::fs::read(da.join(n)).unwrap(), std::fs::read(db.join(n)).unwrap(), "{n} differs");
    }
}

#[test]
fn vacuum_compare_is_exact_and_manifest_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let (o, dir) = run_config(tmp.path(), "vac", VACUUM);
    assert!(o.status.success());
    let cmp: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("compare.json")).unwrap()).unwrap();
    for r in cmp["records"].as_array().unwrap() {
        assert!(r["l2_rel"].as_f64().unwrap() < 1e-8, "{r}");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("run.json")).unwrap()).unwrap();
    let echo = manifest["config_toml"].as_str().unwrap();
    let (o2, dir2) = run_config(tmp.path(), "echo", echo);
    assert!(o2.status.success());
    for n in ["compare.json", "beam_params.csv", "parametrix.json"] {
        assert_eq!(std::fs::read(dir.join(n)).unwrap(), std::fs::read(dir2.join(n)).unwrap());
    }
}

#[test]
fn doubling_k0w0_halves_the_beam_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut errs = Vec::new();
    for k0w0 in [10.0, 20.0] {
        let (o, dir) = run_config(tmp.path(), &format!("p{k0w0}"), &cold_plasma_scenario(k0w0));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let (e, ratio, _) = final_error(&std::fs::read_to_string(dir.join("compare.json")).unwrap()).unwrap();
        assert!((ratio - 2.0).abs() < 1e-9);
        errs.push(e);
    }
    assert!(errs[0] / errs[1] >= 1.5, "{errs:?}");
}

#[test]
fn seed_flag_changes_probes_only() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("v.toml");
    std::fs::write(&cfg, VACUUM).unwrap();
    let run = |seed: &str, name: &str| {
        let out = tmp.path().join(name);
        let o = wavekit(&["run".as_ref(), cfg.as_os_str(), "--out".as_ref(), out.as_os_str(), "--seed".as_ref(), seed.as_ref()]);
        assert!(o.status.success());
        out
    };
    let (a, b) = (run("1", "s1"), run("2", "s2"));
    let read = |d: &Path, n: &str| std::fs::read(d.join(n)).unwrap();
    assert_ne!(read(&a, "parametrix.json"), read(&b, "parametrix.json"));
    assert_eq!(read(&a, "beam_params.csv"), read(&b, "beam_params.csv"));
    let manifest: serde_json::Value = serde_json::from_slice(&read(&b, "run.json")).unwrap();
    assert_eq!(manifest["config"]["tolerances"]["probe_seed"], 2);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = [
        ("unknown_key", "colour = 1\n[medium]\nkind = \"vacuum\"\n[train]\nw0 = 20.0\nk0 = 1.0\n"),
        ("narrow", "times = [1.0]\nanalyses = [\"beam\"]\n[medium]\nkind = \"vacuum\"\n[train]\nw0 = 3.0\nk0 = 1.0\n"),
        ("no_omega_pe", "times = [1.0]\n[medium]\nkind = \"cold_plasma\"\n[train]\nw0 = 20.0\nk0 = 1.0\n"),
        ("bad_analysis", "times = [1.0]\nanalyses = [\"fourier\"]\n[medium]\nkind = \"vacuum\"\n[train]\nw0 = 20.0\nk0 = 1.0\n"),
        (
            "mismatch",
            "times = [1.0]\n[medium]\nkind = \"cold_plasma\"\nomega_pe = 1.0\n[medium.overrides]\nr = 0.2\nvg_over_vp = 0.8\n[train]\nw0 = 20.0\nk0 = 1.0\n",
        ),
    ];
    for (name, text) in bad {
        let (o, _) = run_config(tmp.path(), name, text);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let missing = wavekit(&["run".as_ref(), tmp.path().join("absent.toml").as_os_str()]);
    assert_eq!(missing.status.code(), Some(2));

    // n ≡ 1 on [2, 3] has no root ω n(ω) = k0 = 1.
    let no_root = "times = [1.0]\nanalyses = [\"beam\"]\n[medium]\nkind = \"table\"\nomega = [2.0, 2.5, 3.0]\nn = [1.0, 1.0, 1.0]\n[train]\nw0 = 20.0\nk0 = 1.0\n";
    let (o, _) = run_config(tmp.path(), "no_root", no_root);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dispersion"));
}

#[test]
fn plot_data_from_spreading_run() {
    let tmp = tempfile::tempdir().unwrap();
    let (o, dir) = run_config(tmp.path(), "spread", SPREADING);
    assert!(o.status.success());
    let p = wavekit(&["plot".as_ref(), dir.as_os_str()]);
    assert!(p.status.success(), "{}", String::from_utf8_lossy(&p.stderr));
    let plot = dir.join("plot");
    let names = files(&plot);
    for expected in ["gouy.txt", "ray_xt.txt", "section_t000.txt", "section_t001.txt", "width.txt", "width_ode.txt"] {
        assert!(names.iter().any(|n| n == expected), "missing {expected}: {names:?}");
    }
    let width = std::fs::read_to_string(plot.join("width.txt")).unwrap();
    let last: Vec<f64> = width.lines().last().unwrap().split(' ').map(|v| v.parse().unwrap()).collect();
    assert!((last[1] - 3.0).abs() < 1e-12);
    let ray = std::fs::read_to_string(plot.join("ray_xt.txt")).unwrap();
    for line in ray.lines().skip(1) {
        let v: Vec<f64> = line.split(' ').map(|v| v.parse().unwrap()).collect();
        assert!((v[0] - 0.8 * v[1]).abs() < 1e-8 * (1.0 + v[1]));
    }
}

#[test]
fn plot_of_empty_run_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let (o, dir) = run_config(tmp.path(), "empty", "[medium]\nkind = \"vacuum\"\n[train]\nw0 = 20.0\nk0 = 1.0\n");
    assert!(o.status.success());
    assert_eq!(files(&dir), ["run.json"]);
    let p = wavekit(&["plot".as_ref(), dir.as_os_str()]);
    assert!(p.status.success());
    assert!(!dir.join("plot").exists());
    let missing = wavekit(&["plot".as_ref(), tmp.path().join("nowhere").as_os_str()]);
    assert_eq!(missing.status.code(), Some(2));
}
