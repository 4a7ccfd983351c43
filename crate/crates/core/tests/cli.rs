use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
seed = 7
moment_budgets = [2, 4]
resolutions = [{ k = 20, l = 2 }]

[dataset]
n_eigenvalues = 40
n_samples = 30
n_alpha = 6
n_sigma = 5

[mlp]
epochs = 5
batch_size = 8

[split]
train = 20
validation = 6
test = 4
"#;

fn chebkern(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chebkern"))
        .arg("--config")
        .arg(dir.join("config.toml"))
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("config.toml"), CONFIG).unwrap();
    dir
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn staged_pipeline_produces_every_artifact() {
    let dir = setup();
    let out_dir = dir.path().join("out");
    assert_ok(&chebkern(dir.path(), &["generate"]));
    let dataset = out_dir.join("dataset_K20_L2.jsonl");
    assert!(dataset.exists());

    assert_ok(&chebkern(dir.path(), &["targets", "--input", dataset.to_str().unwrap(), "--moments", "4"]));
    let targets = out_dir.join("targets_K20_L2_M4.jsonl");
    let (_, samples) = chebkern::dataset_io::read_dataset(&targets).unwrap();
    assert_eq!(samples.len(), 30);
    assert!(samples.iter().all(|s| s.target_c.as_ref().map(Vec::len) == Some(4)));

    assert_ok(&chebkern(dir.path(), &["train", "--input", targets.to_str().unwrap()]));
    let model = out_dir.join("model_K20_L2_M4.json");
    assert!(model.exists());
    let history = fs::read_to_string(out_dir.join("history_K20_L2_M4.csv")).unwrap();
    assert_eq!(history.lines().count(), 6);

    assert_ok(&chebkern(
        dir.path(),
        &["evaluate", "--input", targets.to_str().unwrap(), "--model", model.to_str().unwrap()],
    ));
    let costs = fs::read_to_string(out_dir.join("costs_K20_L2_M4.csv")).unwrap();
    assert_eq!(costs.lines().count(), 5);
}

#[test]
fn compare_writes_sorted_results_and_plot_data() {
    let dir = setup();
    assert_ok(&chebkern(dir.path(), &["all"]));
    let out_dir = dir.path().join("out");
    let results = fs::read_to_string(out_dir.join("results.csv")).unwrap();
    let lines: Vec<&str> = results.lines().collect();
    assert_eq!(lines[0], "delta,M,method,p05,p50,p95,n_test");
    assert_eq!(lines.len(), 1 + 2 * 3);
    let methods: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(methods, ["git", "lsq_oracle", "nn", "git", "lsq_oracle", "nn"]);
    for line in &lines[1..] {
        let f: Vec<&str> = line.split(',').collect();
        let (p05, p50, p95): (f64, f64, f64) = (f[3].parse().unwrap(), f[4].parse().unwrap(), f[5].parse().unwrap());
        assert!(0.0 <= p05 && p05 <= p50 && p50 <= p95);
        assert_eq!(f[6], "4");
    }
    assert!(out_dir.join("panel_K20_L2.csv").exists());
    assert!(out_dir.join("history_K20_L2_M2.csv").exists());
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = setup();
    assert_ok(&chebkern(dir.path(), &["--jobs", "1", "compare"]));
    let first = fs::read(dir.path().join("out/results.csv")).unwrap();
    fs::remove_dir_all(dir.path().join("out")).unwrap();
    assert_ok(&chebkern(dir.path(), &["--jobs", "3", "compare"]));
    let second = fs::read(dir.path().join("out/results.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = setup();
    assert_ok(&chebkern(dir.path(), &["compare"]));
    let a = fs::read(dir.path().join("out/results.csv")).unwrap();
    assert_ok(&chebkern(dir.path(), &["--seed", "8", "compare"]));
    let b = fs::read(dir.path().join("out/results.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn failures_exit_nonzero_and_name_the_stage() {
    let dir = setup();
    let out = Command::new(env!("CARGO_BIN_EXE_chebkern"))
        .args(["--config", "/nonexistent/config.toml", "compare"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("config"));

    let out = chebkern(dir.path(), &["train", "--input", "/nonexistent/data.jsonl"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("`train`"));

    fs::write(dir.path().join("config.toml"), "moment_budgets = [1]\n").unwrap();
    let out = chebkern(dir.path(), &["compare"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("`config`"));
}

#[test]
fn training_requires_targets() {
    let dir = setup();
    assert_ok(&chebkern(dir.path(), &["generate"]));
    let dataset = dir.path().join("out/dataset_K20_L2.jsonl");
    let out = chebkern(dir.path(), &["train", "--input", dataset.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no least-squares target"));
}
