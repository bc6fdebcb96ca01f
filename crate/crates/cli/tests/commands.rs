use std::path::Path;
use std::process::Command;

use memroute::io::{read_json, Manifest, CORPUS_FILE, MANIFEST_FILE, QUERIES_FILE, SPLIT_FILE};
use memroute::policy::BENCH_POLICIES;
use memroute::{QueryType, StoreId, StoreSet};
use memroute_cli::{cmd_eval, cmd_generate, parse_lambdas, EvalArgs, GenerateArgs, REPORT_CSV, REPORT_JSON};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_memroute"))
}

fn run_ok(args: &[&str]) -> String {
    let out = bin().args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn gen_args(out: &Path, n: usize) -> GenerateArgs {
    GenerateArgs {
        out: out.to_path_buf(),
        n: Some(n),
        seed: None,
        regime: None,
        mix: None,
        split: None,
        distractor_rate: None,
        paraphrase_rate: None,
        config: None,
    }
}

fn eval_args(data: &Path, out: &Path, policies: &str) -> EvalArgs {
    EvalArgs {
        data: vec![data.to_path_buf()],
        out: out.to_path_buf(),
        policies: policies.into(),
        answerer: Default::default(),
        noise: 0.0,
        answer_seed: 0,
        baseline: None,
        bootstrap_iterations: 200,
        seed: 7,
        split: "all".parse().unwrap(),
        config: None,
    }
}

#[test]
fn generate_is_byte_identical_and_reports_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let text = run_ok(&["generate", "--n", "140", "--seed", "42", "--regime", "short", "--out", a.to_str().unwrap()]);
    assert!(text.contains("wrote 140 queries (98 train, 42 test)"));
    assert!(text.contains("knowledge_update"));
    run_ok(&["generate", "--n", "140", "--seed", "42", "--regime", "short", "--out", b.to_str().unwrap()]);
    for name in [QUERIES_FILE, CORPUS_FILE, SPLIT_FILE, MANIFEST_FILE] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn generate_rejects_zero_queries() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["generate", "--n", "0", "--out"])
        .arg(tmp.path().join("d"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("configuration error"));
    assert!(!tmp.path().join("d").exists());
}

#[test]
fn generate_degenerate_mix() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = gen_args(tmp.path(), 30);
    args.mix = Some("temporal=1".into());
    let (ds, _) = cmd_generate(&args).unwrap();
    assert!(ds.queries.iter().all(|q| q.query_type == QueryType::Temporal));
    let want = StoreSet::of(&[StoreId::LongTerm, StoreId::Episodic]);
    assert!(ds.labels.iter().all(|l| l.stores == want));
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.toml");
    std::fs::write(&cfg, "[generator]\nn_queries = 21\nseed = 5\n").unwrap();
    let mut args = gen_args(&tmp.path().join("d"), 14);
    args.n = None;
    args.config = Some(cfg.clone());
    assert_eq!(cmd_generate(&args).unwrap().0.queries.len(), 21);
    args.n = Some(14);
    assert_eq!(cmd_generate(&args).unwrap().0.queries.len(), 14);

    std::fs::write(&cfg, "[generator]\nbogus = 1\n").unwrap();
    assert!(cmd_generate(&args).is_err());
}

#[test]
fn eval_writes_reports_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d");
    cmd_generate(&gen_args(&data, 140)).unwrap();
    let out = tmp.path().join("e");
    let mut args = eval_args(&data, &out, "oracle,uniform,hybrid,rules,none,stm+sum+ltm");
    args.baseline = Some("uniform".into());
    let report = cmd_eval(&args, false).unwrap();

    let oracle = report.row("oracle").unwrap().metrics;
    assert_eq!((oracle.coverage, oracle.exact_match, oracle.waste), (1.0, 1.0, 0.0));
    let none = report.row("none").unwrap().metrics;
    assert_eq!((none.qa_accuracy, none.mean_tokens), (0.0, 0.0));
    assert!(report.row("stm+sum+ltm").unwrap().metrics.mean_tokens < report.row("uniform").unwrap().metrics.mean_tokens);
    assert_eq!(report.comparisons.len(), 5);
    let mix = report.analytic_mix.unwrap();
    assert!((mix.uniform_waste - 17.0 / 7.0).abs() < 1e-12);

    let manifest: Manifest = read_json(&out.join(MANIFEST_FILE)).unwrap();
    assert_eq!(manifest.command, "eval");
    manifest.verify_outputs(&out).unwrap();
    assert_eq!(manifest.outputs.len(), 2);
    assert_eq!(manifest.inputs.len(), 4);
    assert!(manifest.inputs.keys().any(|k| k.ends_with(QUERIES_FILE)));

    let csv = std::fs::read_to_string(out.join(REPORT_CSV)).unwrap();
    let names: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(names, ["oracle", "uniform", "hybrid", "rules", "none", "stm+sum+ltm"]);

    let table = run_ok(&["report", out.to_str().unwrap()]);
    assert!(table.lines().any(|l| l.starts_with("oracle") && l.contains("1.000")));
    assert!(table.contains("vs baseline"));

    // a second run gives the same report bytes
    let again = tmp.path().join("e2");
    cmd_eval(&eval_args(&data, &again, "oracle,uniform,hybrid,rules,none,stm+sum+ltm"), false).unwrap();
    let first = tmp.path().join("e3");
    cmd_eval(&eval_args(&data, &first, "oracle,uniform,hybrid,rules,none,stm+sum+ltm"), false).unwrap();
    assert_eq!(
        std::fs::read(again.join(REPORT_CSV)).unwrap(),
        std::fs::read(first.join(REPORT_CSV)).unwrap()
    );
}

#[test]
fn eval_rejects_tampered_input_and_unknown_policy() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d");
    cmd_generate(&gen_args(&data, 14)).unwrap();
    let err = cmd_eval(&eval_args(&data, &tmp.path().join("e"), "uniform,bogus"), false).unwrap_err();
    assert!(err.to_string().contains("bogus"), "{err}");

    let path = data.join(QUERIES_FILE);
    let mut text = std::fs::read_to_string(&path).unwrap();
    text.push('\n');
    std::fs::write(&path, text).unwrap();
    let out = bin()
        .args(["eval", "--policies", "uniform", "--data"])
        .arg(&data)
        .arg("--out")
        .arg(tmp.path().join("e"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("hash"));
}

#[test]
fn bench_runs_all_twelve_policies() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d");
    cmd_generate(&gen_args(&data, 70)).unwrap();
    let out = tmp.path().join("b");
    run_ok(&["bench", "--data", data.to_str().unwrap(), "--out", out.to_str().unwrap(), "--split", "all"]);
    let report: serde_json::Value = read_json(&out.join(REPORT_JSON)).unwrap();
    let names: Vec<&str> = report["rows"].as_array().unwrap().iter().map(|r| r["policy"].as_str().unwrap()).collect();
    assert_eq!(names, BENCH_POLICIES.to_vec());
    let manifest: Manifest = read_json(&out.join(MANIFEST_FILE)).unwrap();
    assert_eq!(manifest.command, "bench");
}

#[test]
fn sweep_and_ablate_write_files() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d");
    cmd_generate(&gen_args(&data, 70)).unwrap();
    let s = tmp.path().join("s");
    run_ok(&[
        "sweep-lambda", "--data", data.to_str().unwrap(), "--out", s.to_str().unwrap(), "--lambdas", "0:10:0.5", "--gamma", "0",
    ]);
    let csv = std::fs::read_to_string(s.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "lambda,mean_access_cost,mean_stores,mean_estimated_accuracy,mean_objective,oracle_accuracy"
    );
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 21);
    assert!((rows[0][4] - 0.9).abs() < 1e-12);
    assert!(rows.windows(2).all(|w| w[1][2] <= w[0][2]));
    assert_eq!(&rows[20][..3], &[10.0, 0.0, 0.0]);

    let a = tmp.path().join("a");
    let text = run_ok(&["ablate", "--data", data.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    assert!(text.contains("+similarity"));
    let csv = std::fs::read_to_string(a.join("ablation.csv")).unwrap();
    let variants: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(variants, ["linguistic", "+semantic", "+similarity"]);
    let m: Manifest = read_json(&a.join(MANIFEST_FILE)).unwrap();
    m.verify_outputs(&a).unwrap();
}

#[test]
fn lambda_list_parsing() {
    assert_eq!(parse_lambdas("0,0.5,2").unwrap(), vec![0.0, 0.5, 2.0]);
    assert_eq!(parse_lambdas("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    assert_eq!(parse_lambdas("0:10:0.5").unwrap().len(), 21);
    for bad in ["", "a", "1:0:1", "0:1:0", "0:1"] {
        assert!(parse_lambdas(bad).is_err(), "{bad}");
    }
}
