use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_distunlearn"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn frontier_from_flags() {
    let out = run(&["frontier", "--divergence", "2", "--alphas", "1,2,8,18"]);
    assert!(out.status.success());
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows[0][..3], ["alpha", "epsilon", "dominated"]);
    let eps: Vec<f64> = rows[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    let expect = [0.0, 0.0, 2.0, 8.0];
    for (e, x) in eps.iter().zip(expect) {
        assert!((e - x).abs() < 1e-12, "{e} vs {x}");
    }
    assert_eq!(rows[1][2], "true");
}

#[test]
fn frontier_bernoulli_config_as_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "f.toml",
        "[frontier]\nfamily = \"bernoulli\"\nq1 = 0.3\nq2 = 0.7\nalpha_multiples = [2.0, 4.0]\n",
    );
    let out = run(&["frontier", "-c", &cfg, "--format", "json-lines"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().all(|l| l.starts_with("{\"alpha\":") && l.contains("\"lambda_star\":")));
}

#[test]
fn bounds_grid_and_budgets() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "b.toml",
        "[bounds]\nn1 = 1000\nn2 = 1000\ndelta = 0.1\ndivergence = 0.125\nf = [0, 500, 1000]\ntarget_alpha = 0.01\ntarget_epsilon = 0.05\n",
    );
    let out_path = dir.path().join("b.csv");
    let out = run(&["bounds", "-c", &cfg, "-o", out_path.to_str().unwrap()]);
    assert!(out.status.success());
    let rows = csv_rows(&std::fs::read_to_string(&out_path).unwrap());
    assert_eq!(
        rows[0],
        ["mechanism", "f", "alpha_lower", "epsilon_upper", "vacuous", "binding_constraint"]
    );
    assert_eq!(rows.len(), 7);
    assert_eq!(rows[1][5], "both");
    assert_eq!(rows[3][5], "none");
    assert_eq!(rows[4][0], "selective");
    assert_eq!(rows[4][5], "inapplicable");
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("random: smallest certified budget"));
    assert!(err.contains("selective: smallest certified budget"));
}

const SIM: &str = "[gaussian]\nmu2 = 0.5\nn1 = 200\nn2 = 200\n\n[sweep]\nrules = [\"random\", \"selective-gaussian\"]\nbudget_fractions = { step = 0.25 }\nseeds = 3\nmaster_seed = 1\n\n[output]\npath = \"out/cells.csv\"\nsummary_path = \"out/summary.jsonl\"\n";

#[test]
fn simulate_is_reproducible_and_seedable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.toml", SIM);
    let read = || {
        (
            std::fs::read(dir.path().join("out/cells.csv")).unwrap(),
            std::fs::read(dir.path().join("out/summary.jsonl")).unwrap(),
        )
    };
    assert!(run(&["simulate", "-c", &cfg]).status.success());
    let first = read();
    let out = run(&["simulate", "-c", &cfg]);
    assert!(out.status.success());
    assert_eq!(first, read());
    assert!(String::from_utf8(out.stderr).unwrap().contains("saving vs random"));
    assert_eq!(String::from_utf8(first.0.clone()).unwrap().lines().count(), 1 + 2 * 5 * 3);

    assert!(run(&["simulate", "-c", &cfg, "--seed", "2"]).status.success());
    assert_ne!(first.0, read().0);
    assert!(run(&["simulate", "-c", &cfg, "--mu2", "5", "--seeds", "1"]).status.success());
    assert_eq!(String::from_utf8(read().0).unwrap().lines().count(), 1 + 2 * 5);
}

const EXP: &str = "[dataset]\nsource = \"synthetic\"\n[dataset.corpus]\nn_ham = 150\nn_spam = 50\n\n[sweep]\nrules = [\"random\", \"lr-cos\"]\nbudget_fractions = [0.0, 0.5, 1.0]\nseeds = 1\n";

#[test]
fn experiment_exit_code_tracks_failed_cells() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "exp.toml", EXP);
    let out_path = dir.path().join("cells.csv");
    let out = run(&["experiment", "-c", &cfg, "-o", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let failed: Vec<&str> = text.lines().filter(|l| l.contains(",failed,")).collect();
    assert_eq!(failed.len(), 2);
    assert!(failed.iter().all(|l| l.contains("single class")));

    let out = run(&["experiment", "-c", &cfg, "-o", out_path.to_str().unwrap(), "--allow-partial"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn score_emits_one_row_per_p1_sample() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "exp.toml", EXP);
    let out = run(&["score", "-c", &cfg, "--rule", "lr-cos,tfidf-norm"]);
    assert!(out.status.success());
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows[0], ["index", "score", "rule"]);
    assert_eq!(rows.len(), 1 + 2 * 50);
    assert_eq!(rows[1][2], "lr-cos");
    assert_eq!(rows[100][2], "tfidf-norm");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn bad_input_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[sweep]\nrules = [\"bogus\"]\nbudget_fractions = [0.0]\nseeds = 1\n");
    let out = run(&["simulate", "-c", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("error:"));
    assert_eq!(run(&["frontier"]).status.code(), Some(2));
    assert_eq!(run(&["frontier", "--divergence", "1"]).status.code(), Some(2));
}
