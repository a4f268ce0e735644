use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

fn paratransfer(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paratransfer"))
        .args(args)
        .current_dir(dir)
        .env("PARATRANSFER_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = paratransfer(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn records(csv_text: &str) -> (csv::StringRecord, Vec<csv::StringRecord>) {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let header = r.headers().unwrap().clone();
    let rows = r.records().map(Result::unwrap).collect();
    (header, rows)
}

fn column(header: &csv::StringRecord, name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn figure2_has_five_dimensions_and_a_bound() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&["figure2", "--eta-points", "6"], dir.path());
    let (header, rows) = records(&text);
    assert_eq!(
        header.iter().collect::<Vec<_>>(),
        ["d", "m", "eta", "qubit_fidelity", "qubit_fidelity_min", "oscillator_bound"]
    );
    assert_eq!(rows.len(), 5 * 6);
    let d = column(&header, "d");
    let dims: BTreeSet<&str> = rows.iter().map(|r| &r[d]).collect();
    // five qubit series plus the oscillator bound
    assert_eq!(dims.len() + 1, 6);
    for r in &rows {
        for name in ["qubit_fidelity", "qubit_fidelity_min", "oscillator_bound"] {
            let f: f64 = r[column(&header, name)].parse().unwrap();
            assert!((0.0..=1.0).contains(&f), "{name} = {f}");
        }
        let mean: f64 = r[column(&header, "qubit_fidelity")].parse().unwrap();
        let min: f64 = r[column(&header, "qubit_fidelity_min")].parse().unwrap();
        assert!(min <= mean + 1e-12);
    }
}

#[test]
fn figure3_has_three_schemes() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&["figure3", "--nodes-max", "256"], dir.path());
    let (header, rows) = records(&text);
    assert_eq!(
        header.iter().collect::<Vec<_>>(),
        ["scheme", "N", "d", "m", "round", "T_D", "sumF", "R", "eta", "attenuation"]
    );
    let s = column(&header, "scheme");
    let schemes: BTreeSet<&str> = rows.iter().map(|r| &r[s]).collect();
    assert_eq!(schemes, BTreeSet::from(["COMPLETE", "MP", "QC"]));
    for r in &rows {
        let rate: f64 = r[column(&header, "R")].parse().unwrap();
        assert!(rate >= 0.0 && rate.is_finite());
        assert_eq!(&r[column(&header, "round")], "all");
    }
}

#[test]
fn output_is_byte_identical_across_runs_and_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["fidelity-sweep", "--dimension", "4", "--channel-bits", "2", "--eta-points", "7"];
    let a = ok(&args, dir.path());
    let b = ok(&args, dir.path());
    let c = Command::new(env!("CARGO_BIN_EXE_paratransfer"))
        .args(args)
        .env("PARATRANSFER_WORKERS", "1")
        .output()
        .unwrap();
    assert_eq!(a, b);
    assert_eq!(a.as_bytes(), c.stdout.as_slice());
    let (header, rows) = records(&a);
    assert_eq!(rows.len(), 7 * 4);
    for r in &rows {
        let f: f64 = r[column(&header, "fidelity")].parse().unwrap();
        let bound: f64 = r[column(&header, "bound")].parse().unwrap();
        assert!((0.0..=1.0).contains(&f));
        assert!(f >= bound - 1e-9);
    }
}

#[test]
fn config_file_runs_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("rate.toml"),
        "version = 1\nexperiment = \"rate\"\nscheme = \"qc\"\nnodes = 16\noutput = \"rate.csv\"\n",
    )
    .unwrap();
    ok(&["run", "--config", "rate.toml"], dir.path());
    let (header, rows) = records(&std::fs::read_to_string(dir.path().join("rate.csv")).unwrap());
    let n = column(&header, "N");
    assert!(rows.iter().all(|r| &r[n] == "16"));
    assert_eq!(rows.len(), 40 + 1);

    let text = ok(&["rate", "--config", "rate.toml", "--nodes", "8", "--output", "eight.csv"], dir.path());
    assert!(text.is_empty());
    let (_, rows) = records(&std::fs::read_to_string(dir.path().join("eight.csv")).unwrap());
    assert!(rows.iter().all(|r| &r[n] == "8"));
}

#[test]
fn invalid_config_exits_2_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.toml"),
        "version = 1\nexperiment = \"figure2\"\noutput = \"out.csv\"\neta = []\n",
    )
    .unwrap();
    let out = paratransfer(&["run", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.toml:4"), "{err}");
    assert!(err.contains("eta grid is empty"), "{err}");
    assert!(!dir.path().join("out.csv").exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn syntax_errors_carry_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("typo.toml"), "version = 1\nexperiment = \"rate\"\nshceme = \"qc\"\n").unwrap();
    let out = paratransfer(&["run", "--config", "typo.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("typo.toml:3:1"), "{err}");
}

#[test]
fn flag_errors_name_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = paratransfer(&["rate", "--scheme", "qc", "--nodes", "12"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--nodes"));
    let out = paratransfer(&["figure2", "--eta-points", "0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--eta-points"));
}

#[test]
fn schedules_list_every_transfer() {
    let dir = tempfile::tempdir().unwrap();
    let (header, rows) = records(&ok(&["schedule", "--scheme", "complete", "--nodes", "6"], dir.path()));
    assert_eq!(rows.len(), 30);
    let (s, r) = (column(&header, "sender"), column(&header, "receiver"));
    let pairs: BTreeSet<(String, String)> = rows.iter().map(|x| (x[s].to_owned(), x[r].to_owned())).collect();
    assert_eq!(pairs.len(), 30);
    let (_, rows) = records(&ok(&["schedule", "--scheme", "qc", "--nodes", "8"], dir.path()));
    assert_eq!(rows.len(), 28);
}

#[test]
fn evolve_reads_network_documents() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("net.toml"),
        "version = 1\n[topology]\nkind = \"hypercube\"\ndimension = 3\n",
    )
    .unwrap();
    let (header, rows) = records(&ok(&["evolve", "--network-file", "net.toml", "--format", "csv"], dir.path()));
    assert_eq!(rows.len(), 64);
    let (re, im) = (column(&header, "re"), column(&header, "im"));
    // unprogrammed cube at one swap time: node 0 lands on 7 with amplitude i
    let entry = rows.iter().find(|x| &x[0] == "7" && &x[1] == "0").unwrap();
    let (a, b): (f64, f64) = (entry[re].parse().unwrap(), entry[im].parse().unwrap());
    assert!(a.abs() < 1e-9 && (b - 1.0).abs() < 1e-9, "{a} {b}");
}

#[test]
fn json_envelope_is_versioned() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&["rate", "--scheme", "mp", "--nodes", "4", "--format", "json"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["schema"], "rate");
    assert_eq!(v["version"], 1);
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
}
