use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mssc::certify::CertificationReport;
use mssc::io::render_report;
use mssc::{classify, CentroidSystem, DataSet, Verdict};
use serde_json::Value;
use tempfile::TempDir;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/tri.csv")
}

fn mssc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mssc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn rows(v: &Value) -> Vec<Vec<f64>> {
    serde_json::from_value(v.clone()).unwrap()
}

fn close(a: &[Vec<f64>], b: &[[f64; 2]]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(p, q)| p.iter().zip(q).all(|(u, v)| (u - v).abs() < 1e-9))
}

#[test]
fn certify_reports_global() {
    let f = fixture();
    let out = mssc(&[
        "certify",
        "--input",
        f.to_str().unwrap(),
        "--k",
        "2",
        "--centroids",
        "0,0.5;1,0",
    ]);
    let v = report(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "certify");
    assert_eq!(v["report"]["certification"]["verdict"], "Global");
}

#[test]
fn global_lists_two_solutions() {
    let f = fixture();
    let v = report(&mssc(&[
        "global",
        "--input",
        f.to_str().unwrap(),
        "--k",
        "2",
    ]));
    let r = &v["report"];
    assert!((r["optimal_value"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-9);
    let sols = r["global_solutions"].as_array().unwrap();
    assert_eq!(sols.len(), 2);
    assert!(close(&rows(&sols[0]), &[[0.0, 0.5], [1.0, 0.0]]));
    assert!(close(&rows(&sols[1]), &[[0.0, 1.0], [0.5, 0.0]]));
}

#[test]
fn kmeans_keeps_idle_centroid() {
    let f = fixture();
    let v = report(&mssc(&[
        "kmeans",
        "--input",
        f.to_str().unwrap(),
        "--k",
        "2",
        "--init",
        "explicit",
        "--centroids",
        "0.25,0.75;2,3",
    ]));
    let third = 1.0 / 3.0;
    assert!(close(
        &rows(&v["report"]["final_centroids"]),
        &[[third, third], [2.0, 3.0]]
    ));
    assert_eq!(v["report"]["converged"], true);
}

#[test]
fn kmeans_random_init_is_seeded() {
    let f = fixture();
    let args = [
        "kmeans",
        "--input",
        f.to_str().unwrap(),
        "--k",
        "2",
        "--init",
        "random-points",
        "--seed",
        "11",
    ];
    assert_eq!(mssc(&args).stdout, mssc(&args).stdout);
}

#[test]
fn dc_check_and_local_enum() {
    let f = fixture();
    let r = 1.0 + 5f64.sqrt() / 3.0;
    let lit = format!("0.3333333333333333,0.3333333333333333;{r},0");
    let v = report(&mssc(&[
        "dc-check",
        "--input",
        f.to_str().unwrap(),
        "--centroids",
        &lit,
    ]));
    assert_eq!(v["report"]["holds"], false);
    assert_eq!(v["report"]["witness"], 1);

    let v = report(&mssc(&[
        "local-enum",
        "--input",
        f.to_str().unwrap(),
        "--k",
        "2",
        "--families",
    ]));
    assert_eq!(v["report"]["core_solutions"].as_array().unwrap().len(), 3);
    assert_eq!(v["report"]["families"].as_array().unwrap().len(), 1);
}

#[test]
fn stability_runs_all_probes() {
    let f = fixture();
    let v = report(&mssc(&[
        "stability",
        "--input",
        f.to_str().unwrap(),
        "--k",
        "2",
        "--trials",
        "10",
        "--seed",
        "4",
    ]));
    let probes = v["report"]["probes"].as_array().unwrap();
    assert_eq!(probes.len(), 3);
    for p in probes {
        assert_eq!(p["violations"], 0);
        assert_eq!(p["data_norm"], "sum over points of Euclidean norms");
    }
}

#[test]
fn output_file_and_determinism() {
    let dir = TempDir::new().unwrap();
    let f = fixture();
    let o1 = dir.path().join("a.json");
    let o2 = dir.path().join("b.json");
    for o in [&o1, &o2] {
        let out = mssc(&[
            "global",
            "--input",
            f.to_str().unwrap(),
            "--k",
            "2",
            "--output",
            o.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&o1).unwrap(), std::fs::read(&o2).unwrap());
}

#[test]
fn header_is_skipped() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "h.csv", "x,y\n0,0\n1,0\n0,1\n");
    let v = report(&mssc(&[
        "global",
        "--input",
        p.to_str().unwrap(),
        "--k",
        "2",
    ]));
    assert!((v["report"]["optimal_value"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-9);
}

#[test]
fn input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let ragged = write(&dir, "r.csv", "0,0\n1,0,3\n0,1\n");
    let out = mssc(&["global", "--input", ragged.to_str().unwrap(), "--k", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));
    assert!(out.stdout.is_empty());

    let text = write(&dir, "t.csv", "0,0\n1,zz\n");
    assert_eq!(
        mssc(&["global", "--input", text.to_str().unwrap(), "--k", "1"])
            .status
            .code(),
        Some(2)
    );

    let empty = write(&dir, "e.csv", "");
    assert_eq!(
        mssc(&["global", "--input", empty.to_str().unwrap(), "--k", "1"])
            .status
            .code(),
        Some(2)
    );

    let f = fixture();
    let f = f.to_str().unwrap();
    assert_eq!(
        mssc(&["global", "--input", "/no/such/file.csv", "--k", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        mssc(&[
            "certify",
            "--input",
            f,
            "--k",
            "3",
            "--centroids",
            "0,0;1,1"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        mssc(&["certify", "--input", f, "--centroids", "0,0,0;1,1,1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        mssc(&["global", "--input", f, "--k", "4"]).status.code(),
        Some(2)
    );
    assert_eq!(
        mssc(&["kmeans", "--input", f, "--k", "2", "--epsilon", "-1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(mssc(&["frobnicate", "--input", f]).status.code(), Some(2));
}

#[test]
fn refusals_exit_3() {
    let dir = TempDir::new().unwrap();
    let big: String = (0..30)
        .map(|i| format!("{},{}\n", i, (i * i) % 7))
        .collect();
    let big = write(&dir, "big.csv", &big);
    let out = mssc(&["global", "--input", big.to_str().unwrap(), "--k", "5"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("S(30,5)"));

    let dup = write(&dir, "dup.csv", "0,0\n1,0\n0,0\n");
    assert_eq!(
        mssc(&["global", "--input", dup.to_str().unwrap(), "--k", "2"])
            .status
            .code(),
        Some(3)
    );

    let f = fixture();
    let out = mssc(&[
        "stability",
        "--input",
        f.to_str().unwrap(),
        "--k",
        "2",
        "--probe",
        "aubin",
        "--centroids",
        "0.2,0.2;0.9,0.9",
    ]);
    assert_eq!(out.status.code(), Some(3));

    // Certification falls back to the local verdict when the oracle refuses.
    let out = mssc(&[
        "certify",
        "--input",
        big.to_str().unwrap(),
        "--k",
        "5",
        "--centroids",
        "0,0;1,1;2,2;3,3;4,4",
    ]);
    let v = report(&out);
    let warnings = v["report"]["certification"]["warnings"].as_array().unwrap();
    assert!(warnings[0].as_str().unwrap().starts_with("oracle refused"));
}

#[test]
fn certification_report_round_trips() {
    let data = DataSet::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    for rows in [
        vec![vec![0.5, 0.5], vec![0.0, 0.0]],
        vec![
            vec![1.0 / 3.0, 1.0 / 3.0],
            vec![1.0 + 5f64.sqrt() / 3.0, 0.0],
        ],
        vec![vec![1.0 / 3.0, 1.0 / 3.0], vec![5.0, 5.0]],
        vec![vec![0.1, 0.1], vec![0.1, 0.1]],
    ] {
        let x = CentroidSystem::new(rows).unwrap();
        let original = classify(&data, &x, true).unwrap();
        let text = render_report("certify", &original).unwrap();
        let doc: Value = serde_json::from_str(&text).unwrap();
        let back: CertificationReport = serde_json::from_value(doc["report"].clone()).unwrap();
        assert_eq!(back, original);
    }
    let x = CentroidSystem::new(vec![vec![0.5, 0.5], vec![0.0, 0.0]]).unwrap();
    assert_eq!(
        classify(&data, &x, true).unwrap().verdict,
        Verdict::LocalNonGlobal
    );
}
