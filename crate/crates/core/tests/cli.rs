use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use amaseg::pipeline::fixtures::{add_noise, circles_image};
use amaseg::raster::{encode_pgm, PgmEncoding};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn amaseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amaseg")).args(args).output().unwrap()
}

fn prefix(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn bundled_fixtures_match_generator() {
    let (grid, _) = circles_image(256).unwrap();
    let bytes = encode_pgm(256, 256, grid.values(), PgmEncoding::Binary);
    assert_eq!(fs::read(fixture("circles_256.pgm")).unwrap(), bytes);
    let (grid, _) = circles_image(512).unwrap();
    let noisy = add_noise(&grid, 0.2, 7).unwrap();
    let bytes = encode_pgm(512, 512, noisy.values(), PgmEncoding::Binary);
    assert_eq!(fs::read(fixture("noisy_circles_512.pgm")).unwrap(), bytes);
}

#[test]
fn ama_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = prefix(dir.path(), "out/circles");
    let input = fixture("circles_256.pgm");
    let reference = fixture("circles_256_mask.pgm");
    let o = amaseg(&[
        input.to_str().unwrap(),
        "-o",
        &p,
        "--reference",
        reference.to_str().unwrap(),
        "--log",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o);
    assert!(line.contains("solver=ama") && line.contains("converged=true"), "{line}");
    let dice: f64 = line
        .split_whitespace()
        .find_map(|t| t.strip_prefix("dice="))
        .expect("dice in summary")
        .parse()
        .unwrap();
    assert!((0.0..=1.0).contains(&dice));
    for what in ["segmented.pgm", "phi.pgm", "overlay.pgm", "contours.csv", "mesh.svg", "history.csv"] {
        let f = dir.path().join(format!("out/circles_l1_{what}"));
        assert!(f.is_file(), "missing {}", f.display());
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/circles_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["solver"], "ama");
    assert_eq!(manifest["converged"], true);
    assert!(manifest["version"].is_string() && manifest["timings"].is_object());
    assert!((manifest["dice"].as_f64().unwrap() - dice).abs() < 1e-4);
}

#[test]
fn fds_writes_grid_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = prefix(dir.path(), "fds");
    let o = amaseg(&[fixture("circles_256.pgm").to_str().unwrap(), "-o", &p, "--solver", "fds", "--max-iters", "300"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("solver=fds"));
    for what in ["segmented.pgm", "phi.pgm", "overlay.pgm", "contours.csv"] {
        assert!(dir.path().join(format!("fds_l1_{what}")).is_file());
    }
    assert!(!dir.path().join("fds_l1_mesh.svg").exists());
}

#[test]
fn non_convergence_exits_3_with_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = prefix(dir.path(), "noisy");
    let o = amaseg(&[
        fixture("noisy_circles_512.pgm").to_str().unwrap(),
        "-o",
        &p,
        "--solver",
        "fds",
        "--max-iters",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("converged=false"));
    assert!(dir.path().join("noisy_l1_segmented.pgm").is_file());
    assert!(dir.path().join("noisy_manifest.json").is_file());
}

#[test]
fn fds_on_noisy_fixture_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let p = prefix(dir.path(), "noisy");
    let o = amaseg(&[fixture("noisy_circles_512.pgm").to_str().unwrap(), "-o", &p, "--solver", "fds"]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
}

#[test]
fn usage_errors_exit_1() {
    let input = fixture("circles_256.pgm");
    let input = input.to_str().unwrap();
    for args in [
        vec![input, "--dt", "0"],
        vec![input, "--bogus"],
        vec![input, "--solver", "fds", "--levels", "2"],
        vec![input, "--sd", "2"],
        vec![input, "--metric", "nope"],
        vec![],
    ] {
        let o = amaseg(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn runtime_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.pgm");
    assert_eq!(amaseg(&[missing.to_str().unwrap()]).status.code(), Some(2));
    let garbage = dir.path().join("garbage.pgm");
    fs::write(&garbage, b"not an image").unwrap();
    assert_eq!(amaseg(&[garbage.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn help_and_version_exit_0() {
    assert_eq!(amaseg(&["--help"]).status.code(), Some(0));
    let v = amaseg(&["--version"]);
    assert_eq!(v.status.code(), Some(0));
    assert!(stdout(&v).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn single_thread_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("two_objects_256.pgm");
    for run in ["a", "b"] {
        let p = prefix(dir.path(), run);
        let o = amaseg(&[input.to_str().unwrap(), "-o", &p, "--levels", "2", "--sd", "0.01", "--threads", "1"]);
        assert!(matches!(o.status.code(), Some(0 | 3)), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let mut compared = 0;
    for level in 1..=2 {
        for what in ["segmented.pgm", "phi.pgm", "overlay.pgm"] {
            let a = fs::read(dir.path().join(format!("a_l{level}_{what}"))).unwrap();
            let b = fs::read(dir.path().join(format!("b_l{level}_{what}"))).unwrap();
            assert!(a == b, "level {level} {what} differs");
            compared += 1;
        }
    }
    assert_eq!(compared, 6);
}
