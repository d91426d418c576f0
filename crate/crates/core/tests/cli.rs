use std::process::{Command, Output};

fn asymbell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asymbell"))
        .args(args)
        .env("ASYMBELL_THREADS", "1")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn gen_then_exact_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let game = dir.path().join("asym.json");
    let solved = dir.path().join("solved.json");
    let g = asymbell(&[
        "gen",
        "asym-kv",
        "--l",
        "2",
        "--eta",
        "0.25",
        "--out",
        game.to_str().unwrap(),
    ]);
    assert!(g.status.success(), "{g:?}");

    let e = asymbell(&["classical-exact", "--input", game.to_str().unwrap()]);
    assert_eq!(e.status.code(), Some(0), "{e:?}");
    let v: serde_json::Value = serde_json::from_str(&stdout(&e)).unwrap();
    assert_eq!(v["value"], 0.5625);
    assert_eq!(v["method"], "exact");
    assert!(v["elapsed_ms"].is_null());
    std::fs::write(&solved, stdout(&e)).unwrap();

    let r = asymbell(&["report", solved.to_str().unwrap(), game.to_str().unwrap()]);
    assert!(r.status.success(), "{r:?}");
    let text = stdout(&r);
    assert!(text.contains("method      exact"), "{text}");
    assert!(text.contains("functional: N=4 Nprime=16 K=4"), "{text}");
}

#[test]
fn scan_to_file_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("scan.csv");
    let manifest = dir.path().join("run.json");
    let o = asymbell(&[
        "--manifest",
        manifest.to_str().unwrap(),
        "scan",
        "--l",
        "2:3",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(
        text.starts_with("l,n,eta,beta_star_lb,beta_classical,classical_method,ratio,runtime_ms\n")
    );
    assert!(
        text.contains("2,4,0.25,0.4375,0.5625,exact,0.7777777777777778,\n"),
        "{text}"
    );
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["seed"], 0);
    assert_eq!(m["output_paths"][0], csv.to_str().unwrap());
}

#[test]
fn check_suite_exit_codes() {
    let ok = asymbell(&["check", "parseval", "--trials", "200", "--l", "2:3"]);
    assert_eq!(ok.status.code(), Some(0), "{ok:?}");
    let list: Vec<serde_json::Value> = serde_json::from_str(&stdout(&ok)).unwrap();
    assert_eq!(list.len(), 4);
    assert!(String::from_utf8_lossy(&ok.stderr).contains("all 4 checks passed"));
}

#[test]
fn errors_exit_with_two() {
    let missing = asymbell(&["classical-exact", "--input", "/nonexistent/game.json"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(!missing.stderr.is_empty());

    let degenerate = asymbell(&["gen", "kv", "--l", "2"]);
    assert_eq!(degenerate.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&degenerate.stderr).contains("--eta"));

    let usage = asymbell(&["scan", "--bogus"]);
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn monte_carlo_is_reproducible() {
    let args = [
        "mc",
        "kv",
        "--l",
        "2",
        "--eta",
        "0.25",
        "--samples",
        "20000",
        "--seed",
        "3",
    ];
    let a = asymbell(&args);
    let b = asymbell(&args);
    assert!(a.status.success(), "{a:?}");
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    let est = v["value"].as_f64().unwrap();
    assert!((est - 0.4375).abs() < 0.02, "{v}");
}
