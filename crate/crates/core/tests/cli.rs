mod common;

use std::fs;

use common::*;
use gism::cli::{run, EXIT_IO, EXIT_PARSE, EXIT_RENDER, EXIT_USAGE, EXIT_VALIDATION};

fn gism(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["gism"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn path_str(p: &std::path::Path) -> String {
    p.display().to_string()
}

#[test]
fn shoebox_first_order_reports_five_atoms() {
    let dir = tempfile::tempdir().unwrap();
    let scene = path_str(&fixture("shoebox.json"));
    let out = path_str(dir.path());
    let (code, stdout, _) = gism(&[
        "simulate",
        "--scene",
        &scene,
        "--max-order",
        "1",
        "--out",
        &out,
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("atoms: 5 (stratum 0: 5)"), "{stdout}");
    assert!(stdout.contains("taps: 5"));
}

#[test]
fn free_field_reports_direct_arrival() {
    let dir = tempfile::tempdir().unwrap();
    let scene = path_str(&fixture("freefield.json"));
    let out = path_str(dir.path());
    let (code, stdout, _) = gism(&["simulate", "--scene", &scene, "--out", &out]);
    assert_eq!(code, 0);
    assert!(stdout.contains("atoms: 1 (stratum 0: 1)"));
    assert!(
        stdout.contains(&format!("first arrival: {} s", 5.0 / 343.0)),
        "{stdout}"
    );
}

#[test]
fn circle_reports_a_continuum() {
    let dir = tempfile::tempdir().unwrap();
    let scene = path_str(&fixture("circle.json"));
    let out = path_str(dir.path());
    let (code, stdout, _) = gism(&[
        "simulate",
        "--scene",
        &scene,
        "--lattice-M",
        "1000",
        "--out",
        &out,
    ]);
    assert_eq!(code, 0);
    assert!(
        stdout.contains("atoms: 1001 (stratum 0: 1, stratum 1: 1000)"),
        "{stdout}"
    );
}

#[test]
fn identical_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let scene = path_str(&fixture("shoebox3d.json"));
    for run_dir in ["a", "b"] {
        let out = path_str(&dir.path().join(run_dir));
        assert_eq!(gism(&["simulate", "--scene", &scene, "--out", &out]).0, 0);
    }
    for f in ["taps.csv", "rir.csv", "rir.wav", "paths.jsonl"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = path_str(&dir.path().join("out"));
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        path_str(&p)
    };
    let broken = write("broken.json", "{\"dimension\": 2,");
    let (code, _, err) = gism(&["simulate", "--scene", &broken, "--out", &out]);
    assert_eq!(code, EXIT_PARSE);
    assert!(err.starts_with("parse error"));

    let shoebox = path_str(&fixture("shoebox.json"));
    let (code, _, err) = gism(&["simulate", "--scene", &shoebox, "--fs=-5", "--out", &out]);
    assert_eq!(code, EXIT_VALIDATION);
    assert!(err.contains("simulation.output.fs"));
    assert_eq!(
        gism(&[
            "simulate",
            "--scene",
            &shoebox,
            "--lattice-M",
            "1",
            "--out",
            &out
        ])
        .0,
        EXIT_VALIDATION
    );

    let near_wall = fs::read_to_string(fixture("shoebox.json"))
        .unwrap()
        .replace("[0.3, 0.3]", "[0.6, 0.0003]")
        .replace("[0.6, 0.4]", "[0.6, 0.0003]")
        .replace("\"max_order\": 6", "\"max_order\": 1, \"collocated\": true");
    let near_wall = write("near_wall.json", &near_wall);
    assert_eq!(
        gism(&["simulate", "--scene", &near_wall, "--out", &out]).0,
        EXIT_RENDER
    );

    assert_eq!(
        gism(&["simulate", "--scene", "/no/such/file.json"]).0,
        EXIT_IO
    );
    assert_eq!(gism(&["simulate"]).0, EXIT_USAGE);
    assert_eq!(
        gism(&["--threads", "0", "sources", "--scene", &shoebox]).0,
        EXIT_USAGE
    );
    assert_eq!(
        gism(&[
            "simulate",
            "--scene",
            &shoebox,
            "--weight-convention",
            "area"
        ])
        .0,
        EXIT_USAGE
    );
}

#[test]
fn sources_lists_planar_images() {
    let scene = path_str(&fixture("shoebox.json"));
    let (code, stdout, _) = gism(&["sources", "--scene", &scene, "--max-order", "1"]);
    assert_eq!(code, 0);
    let lines: Vec<_> = stdout.lines().collect();
    assert_eq!(lines[0], "order,walls,x,y,distance");
    assert_eq!(lines.len(), 6);
    assert!(lines.contains(&"1,3,-0.3,0.3,0.9055385138137416"));

    let dir = tempfile::tempdir().unwrap();
    let out = path_str(dir.path());
    let (code, stdout, _) = gism(&["sources", "--scene", &scene, "--out", &out]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("sources: 83"));
    assert!(dir.path().join("sources.csv").exists());
}

#[test]
fn check_path_classifies_a_user_path() {
    let scene = path_str(&fixture("shoebox.json"));
    // Floor reflection from (0.3, 0.3) to (0.6, 0.4): x = 0.3 + 0.3 * 3/7.
    let x = 0.3 + 0.3 * 3.0 / 7.0;
    let via = format!("0@{x},0");
    let (code, stdout, _) = gism(&["check-path", "--scene", &scene, "--via", &via]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("valid: true"));
    assert!(stdout.contains("visible: true"));
    assert!(stdout.contains("image: (0.3, -0.3)"), "{stdout}");

    let (_, stdout, _) = gism(&["check-path", "--scene", &scene, "--via", "0@0.9,0"]);
    assert!(stdout.contains("valid: false"));

    let (code, _, err) = gism(&["check-path", "--scene", &scene, "--via", "0@0.5,0.5"]);
    assert_ne!(code, 0);
    assert!(err.contains("not on boundary element 0"));
}

#[test]
fn excitation_file_is_convolved() {
    let dir = tempfile::tempdir().unwrap();
    let exc = dir.path().join("click.csv");
    fs::write(&exc, "2\n-1\n").unwrap();
    let scene = path_str(&fixture("freefield.json"));
    let out = dir.path().join("out");
    let (code, _, err) = gism(&[
        "simulate",
        "--scene",
        &scene,
        "--excitation",
        &path_str(&exc),
        "--out",
        &path_str(&out),
    ]);
    assert_eq!(code, 0, "{err}");
    let rir = fs::read_to_string(out.join("rir.csv")).unwrap();
    let values: Vec<f64> = rir
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    // The direct tap lands on sample round(5 / 343 * 48000) = 700.
    assert_eq!(values[700], 2.0 / 5.0);
    assert_eq!(values[701], -1.0 / 5.0);
}
