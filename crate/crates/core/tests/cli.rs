use eqtwist::extension::klein_four_cocycle;
use eqtwist::run::load;
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn eqtwist(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eqtwist"))
        .env("EQTWIST_CACHE_DIR", cache)
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn path(name: &str) -> String {
    fixture(name).to_string_lossy().into_owned()
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["cyclic", "--kmax", "4"],
        vec!["transgress", "--all"],
        vec!["verify-hkr", "--trials", "10", "--seed", "3"],
        vec!["cohomology"],
    ] {
        let p = path("k4_twisted.json");
        let mut full = vec![p.as_str(), "--no-cache"];
        full.extend(args.iter().copied());
        let a = eqtwist(dir.path(), &full);
        let b = eqtwist(dir.path(), &full);
        assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn cache_hits_match_and_tampering_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let p = path("z2_point.json");
    let first = eqtwist(dir.path(), &[&p, "cyclic", "--kmax", "4"]);
    assert!(first.status.success());
    let entries: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(entries.len(), 1);

    let hit = eqtwist(dir.path(), &[&p, "cyclic", "--kmax", "4"]);
    assert_eq!(hit.stdout, first.stdout);
    let verified = eqtwist(dir.path(), &[&p, "--verify-cache", "cyclic", "--kmax", "4"]);
    assert!(verified.status.success());
    assert_eq!(verified.stdout, first.stdout);

    let text = std::fs::read_to_string(&entries[0]).unwrap();
    std::fs::write(&entries[0], text.replace("\"even\": 2", "\"even\": 3")).unwrap();
    let tampered = eqtwist(dir.path(), &[&p, "--verify-cache", "cyclic", "--kmax", "4"]);
    assert_eq!(tampered.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&tampered.stderr).contains("cache divergence"));
    assert_eq!(
        tampered.stdout, first.stdout,
        "verification reports the recomputed value"
    );
}

#[test]
fn cyclic_of_a_point_with_z2() {
    let dir = tempfile::tempdir().unwrap();
    let out = eqtwist(
        dir.path(),
        &[
            &path("z2_point.json"),
            "--no-cache",
            "cyclic",
            "--kmax",
            "6",
        ],
    );
    assert!(out.status.success());
    let hp = &json(&out)["results"]["hp"];
    assert_eq!(
        (hp["even"].as_u64(), hp["odd"].as_u64()),
        (Some(2), Some(0))
    );
    assert_eq!(hp["stable"], Value::Bool(true));
}

#[test]
fn transgress_all_on_twisted_klein_four() {
    let dir = tempfile::tempdir().unwrap();
    let out = eqtwist(
        dir.path(),
        &[
            &path("k4_twisted.json"),
            "--no-cache",
            "transgress",
            "--all",
        ],
    );
    assert!(out.status.success());
    let sectors = json(&out)["results"]["sectors"].as_array().unwrap().clone();
    let dims: Vec<(String, u64)> = sectors
        .iter()
        .map(|s| {
            (
                s["element"].as_str().unwrap().to_string(),
                s["invariant_dim"].as_u64().unwrap(),
            )
        })
        .collect();
    assert_eq!(
        dims,
        vec![
            ("e".into(), 1),
            ("a".into(), 0),
            ("b".into(), 0),
            ("c".into(), 0)
        ]
    );

    let single = eqtwist(
        dir.path(),
        &[
            &path("k4_twisted.json"),
            "--no-cache",
            "transgress",
            "--element",
            "a",
        ],
    );
    let s = json(&single);
    assert_eq!(s["results"]["sectors"].as_array().unwrap().len(), 1);
    assert_eq!(
        s["results"]["sectors"][0]["invariant_dim"].as_u64(),
        Some(0)
    );
}

#[test]
fn curved_chain_map_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = eqtwist(
        dir.path(),
        &[
            &path("curved.json"),
            "--no-cache",
            "verify-hkr",
            "--trials",
            "100",
            "--seed",
            "7",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let r = json(&out);
    assert_eq!(r["seed"].as_u64(), Some(7));
    assert!(r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["passed"] == Value::Bool(true)));
}

#[test]
fn every_valid_fixture_validates() {
    let dir = tempfile::tempdir().unwrap();
    for f in [
        "z2_point.json",
        "k4_twisted.json",
        "k4_untwisted.json",
        "s3_points.json",
        "curved.json",
        "s3_sphere.json",
        "circle_rotation.json",
    ] {
        let out = eqtwist(dir.path(), &[&path(f), "--no-cache", "validate"]);
        assert!(
            out.status.success(),
            "{f}: {}",
            String::from_utf8_lossy(&out.stdout)
        );
    }
}

#[test]
fn markdown_report_lists_every_command() {
    let dir = tempfile::tempdir().unwrap();
    let out = eqtwist(
        dir.path(),
        &[
            &path("z2_point.json"),
            "--no-cache",
            "report",
            "--format",
            "markdown",
        ],
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for c in eqtwist::run::Command::all() {
        assert!(text.contains(c.name()), "{}", c.name());
    }
}

#[test]
fn malformed_cocycle_is_a_usage_error_with_a_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = eqtwist(dir.path(), &[&path("bad_cocycle.json"), "validate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cocycle.values[0]"));
    let missing = eqtwist(dir.path(), &["/nonexistent/problem.json", "validate"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn klein_four_fixture_matches_the_library_cocycle() {
    let spec = load(&fixture("k4_twisted.json")).unwrap();
    let h = spec.base.groupoid();
    let reference = klein_four_cocycle(h);
    for a in 0..h.arrows() {
        for b in 0..h.arrows() {
            if h.compose(a, b).is_some() {
                assert_eq!(spec.theta.value(a, b), reference.value(a, b), "({a},{b})");
            }
        }
    }
}
