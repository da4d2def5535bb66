use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tomokit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tomokit")).current_dir(dir).args(args).output().unwrap()
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    entries.sort();
    entries
}

#[test]
fn generate_is_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = tomokit(tmp.path(), &["generate", "--family", "thermal", "--param", "nth=0.1:2", "--n", "6", "--dim", "8", "--seed", "5", "--out", out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(dir_bytes(&tmp.path().join("a")), dir_bytes(&tmp.path().join("b")));
}

#[test]
fn measured_vacuum_counts_sit_at_zero_photons() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tomokit(tmp.path(), &["measure", "--family", "fock", "--param", "n=0", "--dim", "6", "--number", "--shots", "100", "--out", "m"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let counts = fs::read_to_string(tmp.path().join("m/counts.csv")).unwrap();
    assert_eq!(counts.lines().nth(1), Some("0,100"));
}

#[test]
fn measure_then_reconstruct_reports_fidelity() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tomokit(tmp.path(), &["measure", "--family", "coherent", "--param", "alpha=0.8", "--dim", "8", "--grid-n", "12", "--out", "m"]);
    assert!(o.status.success());
    let o = tomokit(tmp.path(), &["reconstruct", "--method", "mle", "--data", "m/expectations.csv", "--reference", "m/state.bin", "--epochs", "1500", "--out", "r"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    let f: f64 = stdout.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!(f > 0.98, "{stdout}");
    for file in ["reconstructed.bin", "history.csv", "manifest.json"] {
        assert!(tmp.path().join("r").join(file).exists());
    }
}

#[test]
fn missing_operator_file_exits_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tomokit(tmp.path(), &["measure", "--family", "fock", "--param", "n=1", "--dim", "4", "--number", "--shots", "50", "--out", "m"]);
    assert!(o.status.success());
    let o = tomokit(tmp.path(), &["reconstruct", "--method", "mle", "--counts", "m/counts.csv", "--operators", "absent.json", "--out", "r"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: "));
    let names: Vec<_> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, vec!["m"]);
}

#[test]
fn invalid_noise_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"{"zeta":0.2,"n_th":2.0,"rotation_theta_deg":20.0,"translation_xy":[0.1,0.1],"std_deviation":0.01,"salt_proportion":0.6,"pepper_proportion":0.6}"#;
    fs::write(tmp.path().join("cfg.json"), cfg).unwrap();
    let o = tomokit(tmp.path(), &["measure", "--family", "fock", "--param", "n=1", "--dim", "4", "--out", "m"]);
    assert!(o.status.success());
    let o = tomokit(tmp.path(), &["noise", "--input", "m/state.bin", "--config", "cfg.json", "--out", "n"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!tmp.path().join("n").exists());
}

#[test]
fn zero_noise_config_leaves_an_image_bit_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let zero = r#"{"zeta":0.0,"n_th":0.0,"rotation_theta_deg":0.0,"translation_xy":[0.0,0.0],"std_deviation":0.0,"salt_proportion":0.0,"pepper_proportion":0.0}"#;
    fs::write(tmp.path().join("zero.json"), zero).unwrap();
    assert!(tomokit(tmp.path(), &["measure", "--family", "coherent", "--param", "alpha=1", "--dim", "10", "--out", "m"]).status.success());
    let o = tomokit(tmp.path(), &["noise", "--input", "m/expectations.csv", "--config", "zero.json", "--out", "n"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let before = fs::read_to_string(tmp.path().join("m/expectations.csv")).unwrap();
    let after = fs::read_to_string(tmp.path().join("n/image.csv")).unwrap();
    let values = |s: &str| s.lines().skip(2).map(|l| l.parse::<f64>().unwrap().to_bits()).collect::<Vec<_>>();
    assert_eq!(values(&before), values(&after));
}

#[test]
fn default_config_printout_matches_the_noise_table() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tomokit(tmp.path(), &["noise", "--print-default-config"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["zeta"], 0.2);
    assert_eq!(v["n_th"], 2.0);
    assert_eq!(v["rotation_theta_deg"], 20.0);
    assert_eq!(v["translation_xy"], serde_json::json!([0.1, 0.1]));
    assert_eq!(v["std_deviation"], 0.01);
    assert_eq!(v["salt_proportion"], 0.0);
    assert_eq!(v["pepper_proportion"], 0.1);
}

#[test]
fn demo_writes_one_image_per_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tomokit(tmp.path(), &["noise", "--demo-exaggerated", "--grid-n", "16", "--out", "demo"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let pgms = fs::read_dir(tmp.path().join("demo")).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "pgm")).count();
    assert_eq!(pgms, 7);
    assert!(fs::read(tmp.path().join("demo/0_clean.pgm")).unwrap().starts_with(b"P5\n16 16\n65535\n"));
}

#[test]
fn benchmark_smoke_run_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = tomokit(tmp.path(), &["benchmark", "--runs", "1", "--epochs", "10", "--dim", "16", "--out", out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |d: &str| fs::read(tmp.path().join(d).join("report.json")).unwrap();
    assert_eq!(read("a"), read("b"));
}

#[test]
fn existing_output_is_never_overwritten() {
    let tmp = tempfile::tempdir().unwrap();
    fs::create_dir(tmp.path().join("out")).unwrap();
    fs::write(tmp.path().join("out/keep.txt"), "x").unwrap();
    let o = tomokit(tmp.path(), &["measure", "--family", "fock", "--param", "n=0", "--dim", "3", "--out", "out"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(fs::read_to_string(tmp.path().join("out/keep.txt")).unwrap(), "x");
}
