use std::path::PathBuf;
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn model(name: &str) -> String {
    root().join("models").join(name).display().to_string()
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name).display().to_string()
}

fn lcn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lcn"))
        .args(args)
        .env_remove("LCN_COLOR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn smokers_structure_as_dot() {
    let o = lcn(&["graph", &model("smokers.lcn"), "--kind", "structure", "--format", "dot"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let dot = stdout(&o);
    assert!(dot.starts_with("digraph \"smokers_structure\" {"));
    // 9 directed and 6 undirected edges.
    assert_eq!(dot.matches(" -> ").count(), 15);
    assert_eq!(dot.matches("[dir=none]").count(), 6);
}

#[test]
fn graph_json_lists_edges() {
    let o = lcn(&["graph", &model("undirected_path.lcn"), "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["directed"], serde_json::json!([["A", "B"], ["E", "D"]]));
    assert_eq!(v["undirected"], serde_json::json!([["B", "C"], ["C", "D"]]));
}

#[test]
fn dependency_graph_has_formula_nodes() {
    let o = lcn(&["graph", &model("smokers.lcn"), "--kind", "dependency", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let formulas = v["nodes"].as_array().unwrap().iter().filter(|n| n["kind"] == "formula").count();
    assert_eq!(formulas, 9);
}

#[test]
fn directed_local_statements() {
    let o = lcn(&["indep", &model("mixed_cycle.lcn"), "--condition", "lmc-d"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "A ⫫ C\nA ⫫ D | {B,C}\nB ⫫ C | {A,D}\n");
}

#[test]
fn indep_json() {
    let o = lcn(&["indep", &model("smokers.lcn"), "--condition", "lmc-lcn", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let first = &v.as_array().unwrap()[0];
    assert!(first["x"].is_array() && first["y"].is_array() && first["z"].is_array());
}

#[test]
fn wrong_graph_for_condition_is_a_domain_error() {
    let o = lcn(&["indep", &model("smokers.lcn"), "--condition", "lmc-lcn", "--graph", "structure"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn compare_directed_and_global() {
    let m = model("mixed_cycle.lcn");
    let o = lcn(&["compare", &m, "--condition-a", "lmc-d", "--condition-b", "gmc-c", "--graph-b", "mixed", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["only_a"].as_array().unwrap().len(), 2);
    assert_eq!(v["only_b"], serde_json::json!([{"x": ["A"], "y": ["C"], "z": ["B", "D"]}]));
}

#[test]
fn compare_two_models() {
    let o = lcn(&[
        "compare",
        &model("undirected_path.lcn"),
        &model("bidirected_path.lcn"),
        "--condition-a",
        "gmc-c",
        "--condition-b",
        "gmc-c",
        "--graph-b",
        "mixed",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let only_a = text.split("only in B").next().unwrap();
    assert!(only_a.contains("{A,B} ⫫ D | {C,E}"));
    assert!(text.split("only in B").nth(1).unwrap().contains("{A,B} ⫫ E | {C,D}"));
}

#[test]
fn factorize_smokers() {
    let o = lcn(&["factorize", &model("smokers.lcn")]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("P = P(F1,F2,F3) · P(S1,S2,S3 | F1,F2,F3) · P(C1 | S1) · P(C2 | S2) · P(C3 | S3)\n"));
    let o = lcn(&["factorize", &model("smokers_split.lcn"), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["components"][0]["clique_form"], "φ(F1,F2) · φ(F2,F3) / Z");
    assert_eq!(v["positivity_assumed"], true);
}

#[test]
fn factorize_reports_pruning() {
    let o = lcn(&["factorize", &model("hard.lcn")]);
    assert!(stdout(&o).contains("hard constraints keep 3 of 4 configurations of {A,B}"));
    let o = lcn(&["factorize", &model("hard.lcn"), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pruning"][0]["removed"], 1);
}

#[test]
fn cycles_need_condensing() {
    let m = model("bidirected_path.lcn");
    let o = lcn(&["factorize", &m, "--graph", "mixed"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--condense"));
    let o = lcn(&["factorize", &m, "--graph", "mixed", "--condense"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("P = P(A) · P(E) · P({B,C,D} | A,E)"));
}

#[test]
fn condense_text_and_json() {
    let m = model("bidirected_path.lcn");
    let o = lcn(&["condense", &m]);
    assert_eq!(stdout(&o), "node A\nnode E\nnode {B,C,D}\nA -> {B,C,D}\nE -> {B,C,D}\n");
    let o = lcn(&["condense", &m, "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["graph"]["nodes"][2]["members"], serde_json::json!(["B", "C", "D"]));
    assert!(v["mapping"].as_array().unwrap().contains(&serde_json::json!(["C", "{B,C,D}"])));
}

#[test]
fn parse_prints_the_model_back() {
    let o = lcn(&["parse", &model("pair.lcn")]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "U: 0.2 <= P(A) <= 0.4\nD: 0.6 <= P(B given A) <= 0.6\n");
}

#[test]
fn parse_error_names_the_line() {
    let o = lcn(&["parse", &fixture("bad.lcn")]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("bad.lcn: line 2, column 14"), "{err}");
    assert!(stdout(&o).is_empty());
}

#[test]
fn parse_warnings_go_to_stderr() {
    let o = lcn(&["parse", &model("hard.lcn")]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("hard constraint"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(lcn(&[]).status.code(), Some(2));
    assert_eq!(lcn(&["graph"]).status.code(), Some(2));
    assert_eq!(lcn(&["indep", "x.lcn", "--condition", "lmc-x"]).status.code(), Some(2));
    assert_eq!(lcn(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(lcn(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_file_exits_one() {
    let o = lcn(&["graph", "no/such/file.lcn"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cannot read"));
}

#[test]
fn check_dist_passes_and_fails() {
    let o = lcn(&["check-dist", &model("pair.json"), &model("pair.lcn")]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).ends_with("all checks passed\n"));
    let o = lcn(&["check-dist", &fixture("uniform.json"), &model("pair.lcn")]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).matches("VIOLATED").count(), 2);
    let o = lcn(&["check-dist", &fixture("short.json"), &model("pair.lcn")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("short.json"));
}

#[test]
fn check_dist_with_statements() {
    // Uniform tables make every pair independent.
    let o = lcn(&["check-dist", &fixture("uniform3.json"), &fixture("dependent.lcn"), "--condition", "lmc-c", "--tol", "1e-6"]);
    let text = stdout(&o);
    assert!(text.contains("statement"), "{text}");
    assert!(text.contains("statement B ⫫ C | A  holds"), "{text}");
    assert!(!text.contains("FAILS"));
}

#[test]
fn check_dist_vacuous_constraints() {
    // P(A) = 0 makes the conditional constraint vacuous.
    let dir = std::env::temp_dir().join(format!("lcn-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let table = dir.join("zero.json");
    std::fs::write(&table, r#"{"props": ["A", "B"], "probs": [0.5, 0.0, 0.5, 0.0]}"#).unwrap();
    let m = dir.join("m.lcn");
    std::fs::write(&m, "D: P(B given A) = 0.6\n").unwrap();
    let (t, m) = (table.display().to_string(), m.display().to_string());
    let o = lcn(&["check-dist", &t, &m]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("vacuous"));
    assert_eq!(lcn(&["check-dist", &t, &m, "--strict"]).status.code(), Some(1));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn verify_reports_each_check() {
    let o = lcn(&["verify", "--samples", "10", "--seed", "7"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().all(|l| l.starts_with("pass ") && l.ends_with(": 10/10")));
    assert_eq!(lcn(&["verify", "--max-props", "13"]).status.code(), Some(1));
}

#[test]
fn output_is_deterministic() {
    for args in [
        vec!["graph".to_string(), model("smokers.lcn"), "--format".into(), "json".into()],
        vec!["indep".to_string(), model("cycle6.lcn"), "--condition".into(), "gmc-c".into()],
        vec!["verify".to_string(), "--samples".into(), "5".into(), "--seed".into(), "3".into()],
    ] {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        assert_eq!(lcn(&args).stdout, lcn(&args).stdout);
    }
}

#[test]
fn colour_is_opt_in() {
    let o = Command::new(env!("CARGO_BIN_EXE_lcn"))
        .args(["check-dist", &model("pair.json"), &model("pair.lcn")])
        .env("LCN_COLOR", "1")
        .output()
        .unwrap();
    assert!(String::from_utf8(o.stdout).unwrap().contains("\x1b[32m"));
    assert!(!stdout(&lcn(&["check-dist", &model("pair.json"), &model("pair.lcn")])).contains('\x1b'));
}
