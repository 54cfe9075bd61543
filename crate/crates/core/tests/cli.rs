use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use slump_gsgp::dataset::{builtin_dataset, load_csv, split, Dataset, Sample, SplitSpec};

const SMALL: &str = "
[gsgp]
population_size = 30
generations = 5

[stgp]
population_size = 30
generations = 5
";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_slump-gsgp"));
    c.env_remove("SLUMP_GSGP_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn small_config(dir: &Path, extra: &str) -> PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, format!("{extra}\n{SMALL}")).unwrap();
    p
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|x| x.unwrap().iter().map(String::from).collect())
        .collect()
}

fn header(path: &Path) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().map(String::from).collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn train_writes_table_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "");
    let out = tmp.path().join("o");
    ok(&[
        "train",
        "--config",
        s(&cfg),
        "--seed",
        "42",
        "--out",
        s(&out),
    ]);

    assert_eq!(
        header(&out.join("predictions.csv")),
        ["sample_no", "experiment", "computation", "relative_error"]
    );
    let preds = rows(&out.join("predictions.csv"));
    let ids: Vec<&str> = preds.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(ids, ["29", "30", "31", "32", "33", "34"]);
    assert_eq!(preds[0][1], "129");

    assert_eq!(
        header(&out.join("fitness_curve.csv")),
        ["generation", "train_fitness", "test_fitness"]
    );
    assert_eq!(rows(&out.join("fitness_curve.csv")).len(), 6);

    let metrics: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["schema_version"], 1);
    assert_eq!(metrics["seed"], 42);
    assert!(metrics["test"]["rmse"].as_f64().unwrap() > 0.0);
    assert!(metrics["test"]["max_relative_error"].is_number());
}

#[test]
fn zero_generations_gives_one_curve_row() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "[gsgp]\npopulation_size = 10\ngenerations = 0\n").unwrap();
    let out = tmp.path().join("o");
    ok(&["train", "--config", s(&cfg), "--out", s(&out)]);
    let curve = rows(&out.join("fitness_curve.csv"));
    assert_eq!(curve.len(), 1);
    assert_eq!(curve[0][0], "0");
}

#[test]
fn predict_reproduces_training_predictions() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "");
    let out = tmp.path().join("o");
    ok(&[
        "train",
        "--config",
        s(&cfg),
        "--seed",
        "3",
        "--out",
        s(&out),
    ]);

    let (_, test) = split(&builtin_dataset(), SplitSpec { n_train: 28 }).unwrap();
    let input = tmp.path().join("test.csv");
    test.save_csv(&input).unwrap();
    let pout = tmp.path().join("p");
    ok(&[
        "predict",
        "--model",
        s(&out.join("model.json")),
        "--input",
        s(&input),
        "--out",
        s(&pout),
    ]);

    let trained = rows(&out.join("predictions.csv"));
    let predicted = rows(&pout.join("predictions.csv"));
    assert_eq!(trained.len(), predicted.len());
    for (a, b) in trained.iter().zip(&predicted) {
        assert_eq!(a[1..], b[1..]);
    }
}

#[test]
fn predict_edge_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "");
    let out = tmp.path().join("o");
    ok(&["train", "--config", s(&cfg), "--out", s(&out)]);
    let model = out.join("model.json");

    let empty = tmp.path().join("empty.csv");
    fs::write(
        &empty,
        "cement,fly_ash,water,sand,stone,water_reducer,recycled_aggregate,total_mass\n",
    )
    .unwrap();
    let pout = tmp.path().join("p");
    ok(&[
        "predict",
        "--model",
        s(&model),
        "--input",
        s(&empty),
        "--out",
        s(&pout),
    ]);
    assert_eq!(
        fs::read_to_string(pout.join("predictions.csv")).unwrap(),
        "sample_no,computation\n"
    );

    let seven = tmp.path().join("seven.csv");
    fs::write(
        &seven,
        "cement,fly_ash,water,sand,stone,water_reducer,recycled_aggregate\n1,2,3,4,5,6,7\n",
    )
    .unwrap();
    let res = run(&[
        "predict",
        "--model",
        s(&model),
        "--input",
        s(&seven),
        "--out",
        s(&pout),
    ]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("total_mass"));

    let corrupt = tmp.path().join("bad.json");
    fs::write(
        &corrupt,
        "{\"schema_version\": 1, \"model\": {\"kind\": \"gsgp\"}}",
    )
    .unwrap();
    assert!(!run(&[
        "predict",
        "--model",
        s(&corrupt),
        "--input",
        s(&empty),
        "--out",
        s(&pout)
    ])
    .status
    .success());
}

#[test]
fn compare_with_one_run_is_degenerate() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "");
    let out = tmp.path().join("o");
    ok(&[
        "compare",
        "--config",
        s(&cfg),
        "--runs",
        "1",
        "--seed",
        "5",
        "--out",
        s(&out),
    ]);
    assert_eq!(
        header(&out.join("comparison.csv")),
        ["run", "seed", "gsgp_rmse", "stgp_rmse", "lssvm_rmse"]
    );
    let table = rows(&out.join("comparison.csv"));
    assert_eq!(table.len(), 1);
    assert_eq!(table[0][1], "5");

    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    for a in report["algorithms"].as_array().unwrap() {
        assert_eq!(a["test_rmse_box"]["iqr"], 0.0);
    }
    assert_eq!(report["tests"].as_array().unwrap().len(), 3);
    assert_eq!(report["lssvm"]["replicated"], true);
    assert_eq!(report["seeds"], serde_json::json!([5]));
}

#[test]
fn compare_runs_replay_from_recorded_seeds() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "");
    let all = tmp.path().join("all");
    ok(&[
        "compare",
        "--config",
        s(&cfg),
        "--runs",
        "3",
        "--seed",
        "10",
        "--out",
        s(&all),
    ]);
    let table = rows(&all.join("comparison.csv"));
    for row in &table {
        let one = tmp.path().join(format!("one{}", row[1]));
        ok(&[
            "compare",
            "--config",
            s(&cfg),
            "--runs",
            "1",
            "--seed",
            &row[1],
            "--out",
            s(&one),
        ]);
        assert_eq!(rows(&one.join("comparison.csv"))[0][1..], row[1..]);
    }
}

#[test]
fn ols_baseline_layout_and_perfect_linear_data() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "");
    let out = tmp.path().join("o");
    ok(&["ols-baseline", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(
        header(&out.join("baseline_predictions.csv")),
        ["sample_no", "experiment", "gsgp", "ols"]
    );
    let table = rows(&out.join("baseline_predictions.csv"));
    assert_eq!(table.len(), 6);
    assert_eq!(table[0][3], "130");

    let linear = Dataset::new(
        (0..20)
            .map(|i| {
                let f = i as f64;
                let features = [
                    300.0 + 7.0 * f,
                    50.0 + (f * 3.0) % 11.0,
                    180.0 + f % 4.0,
                    760.0 - f,
                    1000.0 + f * f,
                    6.0 + f % 3.0,
                    10.0 * (f % 5.0),
                    2400.0 + (f * 13.0) % 7.0,
                ];
                let y = 20.0 + 0.1 * features[0] + 0.5 * features[2] - 0.02 * features[4];
                Sample::new(features, Some(y)).unwrap()
            })
            .collect(),
    );
    let data = tmp.path().join("linear.csv");
    linear.save_csv(&data).unwrap();
    let lout = tmp.path().join("lin");
    ok(&[
        "ols-baseline",
        "--config",
        s(&cfg),
        "--dataset",
        s(&data),
        "--train-size",
        "15",
        "--out",
        s(&lout),
    ]);
    let pout = tmp.path().join("lp");
    let (_, test) = split(&linear, SplitSpec { n_train: 15 }).unwrap();
    let input = tmp.path().join("lt.csv");
    test.save_csv(&input).unwrap();
    ok(&[
        "predict",
        "--model",
        s(&lout.join("ols_model.json")),
        "--input",
        s(&input),
        "--out",
        s(&pout),
    ]);
    for row in rows(&pout.join("predictions.csv")) {
        assert!(row[3].parse::<f64>().unwrap() < 1e-6, "{row:?}");
    }
}

#[test]
fn output_directory_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "");
    let out = tmp.path().join("env-out");
    let res = bin()
        .args(["train", "--config", s(&cfg)])
        .env("SLUMP_GSGP_OUT", &out)
        .output()
        .unwrap();
    assert!(res.status.success());
    assert!(out.join("model.json").is_file());
}

#[test]
fn csv_outputs_round_trip_at_six_digits() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "");
    let out = tmp.path().join("o");
    ok(&["train", "--config", s(&cfg), "--out", s(&out)]);
    for row in rows(&out.join("predictions.csv")) {
        for cell in &row[1..] {
            let v: f64 = cell.parse().unwrap();
            assert_eq!(&slump_gsgp::fmt::sig6(v), cell);
        }
    }
    let (_, test) = split(&builtin_dataset(), SplitSpec { n_train: 28 }).unwrap();
    let path = tmp.path().join("sig6.csv");
    test.write_csv_sig6(fs::File::create(&path).unwrap())
        .unwrap();
    assert_eq!(load_csv(&path).unwrap().samples(), test.samples());
}

#[test]
fn bad_config_exits_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "runs = 0");
    assert!(
        !run(&["compare", "--config", s(&cfg), "--out", s(tmp.path())])
            .status
            .success()
    );
    let unknown = tmp.path().join("u.toml");
    fs::write(&unknown, "population = 3\n").unwrap();
    assert!(
        !run(&["train", "--config", s(&unknown), "--out", s(tmp.path())])
            .status
            .success()
    );
    assert!(!run(&[
        "train",
        "--dataset",
        "/no/such/file.csv",
        "--out",
        s(tmp.path())
    ])
    .status
    .success());
}
