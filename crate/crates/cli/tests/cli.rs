use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use randlink::data::{synthetic, write_csv};
use randlink::method::train;
use randlink::{Classifier, MethodSpec};
use randlink_cli::config::load_config;
use randlink_cli::error::{EXIT_IO, EXIT_MODEL_FORMAT, EXIT_USAGE};
use randlink_cli::report::{self, parse_reports, Record, Format};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_randlink"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn code(out: &Output) -> u8 {
    out.status.code().expect("exited normally") as u8
}

/// A blobs dataset on disk plus a config pointing at it.
fn setup(config: &str) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let ds = synthetic::gaussian_blobs::<f64>(90, 4, 3, 0.8, 21).unwrap();
    write_csv(&dir.path().join("blobs.csv"), &ds, true).unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(&cfg, format!("data.path = blobs.csv\ndata.header = true\n{config}")).unwrap();
    (dir, cfg)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn train_then_predict_matches_in_memory_model() {
    let (dir, cfg) = setup("method = edrvfl\nnetwork.hidden_nodes = 12\nnetwork.layers = 3\nseed = 5\n");
    let model = dir.path().join("m.model");
    let summary = ok(&run(&["train", "--config", p(&cfg), "--out", p(&model)]));
    let recs = report::parse(&summary).unwrap();
    assert_eq!(recs[0].kind, "train");
    assert_eq!(recs.iter().filter(|r| r.kind == "shape").count(), 3 + 3);
    assert_eq!(recs.last().unwrap().kind, "timing");

    let data = dir.path().join("blobs.csv");
    let out = ok(&run(&["predict", "--model", p(&model), "--data", p(&data), "--header", "--labels", "last"]));
    let preds = report::parse(&out).unwrap();

    let exp = load_config(&cfg).unwrap();
    let ds = randlink::data::load_csv::<f64>(&data, &exp.label_column, true).unwrap();
    let spec: MethodSpec<f64> = exp.seeded_spec();
    let labels = train(&spec, &ds).unwrap().predict(ds.features()).unwrap().labels;
    let from_cli: Vec<usize> = preds
        .iter()
        .filter(|r| r.kind == "prediction")
        .map(|r| r.get_u64("class").unwrap() as usize)
        .collect();
    assert_eq!(from_cli, labels);
    let acc = preds.iter().find(|r| r.kind == "accuracy").unwrap();
    let correct = labels.iter().zip(ds.labels()).filter(|(a, b)| a == b).count();
    assert_eq!(acc.get_u64("correct"), Some(correct as u64));

    // Unlabeled input: drop the label column.
    let plain = dir.path().join("plain.csv");
    let text: String = std::fs::read_to_string(&data)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n")
        .collect();
    std::fs::write(&plain, text).unwrap();
    let out = ok(&run(&["predict", "--model", p(&model), "--data", p(&plain)]));
    let n = report::parse(&out).unwrap().iter().filter(|r| r.kind == "prediction").count();
    assert_eq!(n, 90);
}

#[test]
fn exit_codes_separate_usage_io_and_format_failures() {
    let (dir, cfg) = setup("method = helm\n");
    let out = run(&["cv", "--config", p(&cfg)]);
    assert_eq!(code(&out), EXIT_USAGE);
    assert!(String::from_utf8_lossy(&out.stderr).contains("exp.cfg:3"));

    let (_keep, cfg) = setup("method = rvfl\n");
    assert_eq!(code(&run(&["cv", "--config", p(&cfg), "--method", "nope"])), EXIT_USAGE);
    assert_eq!(code(&run(&["cv", "--config", p(&cfg), "--k", "1"])), EXIT_USAGE);
    assert_eq!(code(&run(&["cv", "--config", "/definitely/missing.cfg"])), EXIT_IO);

    let missing = dir.path().join("gone.cfg");
    std::fs::write(&missing, "data.path = nowhere.csv\n").unwrap();
    assert_eq!(code(&run(&["cv", "--config", p(&missing)])), EXIT_IO);

    let model = dir.path().join("m.model");
    ok(&run(&["train", "--config", p(&cfg), "--out", p(&model)]));
    let mut bytes = std::fs::read(&model).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x04;
    std::fs::write(&model, bytes).unwrap();
    let out = run(&["predict", "--model", p(&model), "--data", p(&dir.path().join("blobs.csv")), "--header"]);
    assert_eq!(code(&out), EXIT_MODEL_FORMAT);
    assert!(String::from_utf8_lossy(&out.stderr).contains("checksum"));

    let bad_threads = bin()
        .args(["cv", "--config", p(&cfg)])
        .env("RANDLINK_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&bad_threads), EXIT_USAGE);
}

#[test]
fn failed_train_never_touches_the_model_file() {
    let (dir, cfg) = setup("method = rvfl\n");
    let model = dir.path().join("m.model");
    std::fs::write(&model, "previous model").unwrap();
    std::fs::remove_file(dir.path().join("blobs.csv")).unwrap();
    assert_eq!(code(&run(&["train", "--config", p(&cfg), "--out", p(&model)])), EXIT_IO);
    assert_eq!(std::fs::read_to_string(&model).unwrap(), "previous model");

    let (dir, cfg) = setup("method = rvfl\n");
    let nested = dir.path().join("no/such/dir/m.model");
    assert_eq!(code(&run(&["train", "--config", p(&cfg), "--out", p(&nested)])), EXIT_IO);
    assert!(!nested.exists());
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 2, "only the dataset and config remain");
}

#[test]
fn cv_reports_are_deterministic_and_self_consistent() {
    let (dir, cfg) = setup("method = drvfl\nnetwork.hidden_nodes = 10\nnetwork.layers = 2\nseed = 3\n");
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    ok(&run(&["cv", "--config", p(&cfg), "--out", p(&a)]));
    let single = bin()
        .args(["cv", "--config", p(&cfg), "--out", p(&b)])
        .env("RANDLINK_THREADS", "1")
        .output()
        .unwrap();
    ok(&single);
    let (ra, rb) = (report::read_records(&a).unwrap(), report::read_records(&b).unwrap());
    let strip = |r: &[Record]| report::render(&report::without_timing(r), Format::Text);
    assert_eq!(strip(&ra), strip(&rb));

    let parsed = parse_reports(&ra).unwrap();
    assert_eq!(parsed.len(), 1);
    assert_eq!(parsed[0].fold_accuracies.len(), 10, "k defaults to 10");
    let (m, s) = parsed[0].recomputed();
    assert!((m - parsed[0].mean_accuracy).abs() <= 1e-12);
    assert!((s - parsed[0].std_accuracy).abs() <= 1e-12);

    let json = dir.path().join("a.json");
    ok(&run(&["cv", "--config", p(&cfg), "--out", p(&json), "--k", "4"]));
    let parsed = parse_reports(&report::read_records(&json).unwrap()).unwrap();
    assert_eq!(parsed[0].fold_accuracies.len(), 4);
}

#[test]
fn grid_emits_every_cell_and_the_rescanned_best() {
    let (dir, cfg) = setup(
        "method = edrvfl\nnetwork.hidden_nodes = 8\ngrid.c_exponents = -2..4:2\ngrid.l_values = 1..3\ncv.k = 3\n",
    );
    let out = dir.path().join("grid.txt");
    ok(&run(&["grid", "--config", p(&cfg), "--out", p(&out)]));
    let recs = report::read_records(&out).unwrap();
    let cells: Vec<&Record> = recs.iter().filter(|r| r.kind == "cell").collect();
    assert_eq!(cells.len(), 4 * 3);
    let best = recs.iter().find(|r| r.kind == "best").unwrap();
    let top = cells.iter().map(|c| c.get_f64("mean_accuracy").unwrap()).fold(f64::MIN, f64::max);
    let best_cell = cells[best.get_u64("index").unwrap() as usize];
    assert_eq!(best_cell.get_f64("mean_accuracy").unwrap(), top);
    assert!(best.get_f64("mean_accuracy").unwrap() >= top);
    let reports = parse_reports(&recs).unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0].mean_accuracy, best.get_f64("mean_accuracy").unwrap());
}

/// 13 rank rows whose column means are the closest 13-dataset match to the
/// rank row [7, 4.54, 4.35, 2, 5.73, 3.08, 1.3].
const RANK_ROWS: [[f64; 7]; 13] = [
    [7.0, 5.0, 4.0, 1.0, 6.0, 3.0, 2.0],
    [7.0, 5.0, 4.0, 1.0, 6.0, 3.0, 2.0],
    [7.0, 5.0, 4.0, 1.0, 6.0, 3.0, 2.0],
    [7.0, 4.0, 5.5, 1.0, 5.5, 3.0, 2.0],
    [7.0, 5.0, 3.0, 2.0, 6.0, 4.0, 1.0],
    [7.0, 5.0, 3.0, 2.0, 6.0, 4.0, 1.0],
    [7.0, 5.0, 3.0, 2.0, 6.0, 4.0, 1.0],
    [7.0, 3.0, 5.0, 2.0, 6.0, 4.0, 1.0],
    [7.0, 3.0, 5.0, 2.0, 6.0, 4.0, 1.0],
    [7.0, 5.0, 4.0, 3.0, 6.0, 2.0, 1.0],
    [7.0, 6.0, 4.0, 3.0, 5.0, 2.0, 1.0],
    [7.0, 4.0, 6.0, 3.0, 5.0, 2.0, 1.0],
    [7.0, 4.0, 6.0, 3.0, 5.0, 2.0, 1.0],
];

fn write_method_reports(dir: &Path, methods: &[&str], acc: impl Fn(usize, usize) -> f64) -> Vec<PathBuf> {
    methods
        .iter()
        .enumerate()
        .map(|(m, name)| {
            let mut recs = Vec::new();
            for d in 0..13 {
                recs.push(Record::new("report").str("method", *name).str("dataset", format!("d{d}")));
                let a = acc(d, m);
                recs.push(Record::new("fold").int("index", 0u64).num("accuracy", a));
                recs.push(Record::new("summary").num("mean_accuracy", a).num("std_accuracy", 0.0));
            }
            let path = dir.join(format!("{name}.txt"));
            std::fs::write(&path, report::render(&recs, Format::Text)).unwrap();
            path
        })
        .collect()
}

#[test]
fn compare_reproduces_the_table_rank_row() {
    let dir = tempfile::tempdir().unwrap();
    let names = ["m0", "m1", "m2", "m3", "m4", "m5", "m6"];
    let files = write_method_reports(dir.path(), &names, |d, m| 1.0 - RANK_ROWS[d][m] / 10.0);
    let out = dir.path().join("cmp.txt");
    let mut args = vec!["compare", "--alpha", "0.05", "--out", p(&out)];
    args.extend(files.iter().map(|f| p(f)));
    ok(&run(&args));
    let recs = report::read_records(&out).unwrap();
    let avg: Vec<f64> = recs.iter().filter(|r| r.kind == "avg_rank").map(|r| r.get_f64("rank").unwrap()).collect();
    for (a, want) in avg.iter().zip([7.0, 4.54, 4.35, 2.0, 5.73, 3.08, 1.3]) {
        assert!((a - want).abs() < 0.01, "{a} vs {want}");
    }
    let f = recs.iter().find(|r| r.kind == "friedman").unwrap();
    assert!((f.get_f64("chi_squared").unwrap() - 68.11).abs() <= 0.5);
    assert_eq!(f.get_u64("df2"), Some(72));
    let cd = recs.iter().find(|r| r.kind == "nemenyi").unwrap().get_f64("critical_difference").unwrap();
    assert!((cd - 2.49).abs() <= 0.01);
    assert_eq!(recs.iter().filter(|r| r.kind == "pair").count(), 21);
    // Reparsing the emitted file agrees with the text on stdout.
    let mut stdout_args = vec!["compare"];
    stdout_args.extend(files.iter().map(|f| p(f)));
    assert_eq!(report::parse(&ok(&run(&stdout_args))).unwrap(), recs);
}

#[test]
fn identical_methods_are_never_significantly_different() {
    let dir = tempfile::tempdir().unwrap();
    let files = write_method_reports(dir.path(), &["a", "b", "c"], |d, m| {
        if m == 2 {
            0.5
        } else {
            0.7 + 0.01 * d as f64
        }
    });
    let mut args = vec!["compare"];
    args.extend(files.iter().map(|f| p(f)));
    let recs = report::parse(&ok(&run(&args))).unwrap();
    let pair = recs
        .iter()
        .find(|r| r.kind == "pair" && r.get_str("first") == Some("a") && r.get_str("second") == Some("b"))
        .unwrap();
    assert_eq!(pair.get_f64("rank_difference"), Some(0.0));
    assert_eq!(pair.get("significant"), Some(&serde_json::Value::Bool(false)));
}

#[test]
fn compare_rejects_incomplete_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = write_method_reports(dir.path(), &["a", "b"], |_, _| 0.5);
    let partial = dir.path().join("c.txt");
    let recs = vec![
        Record::new("report").str("method", "c").str("dataset", "d0"),
        Record::new("summary").num("mean_accuracy", 0.5).num("std_accuracy", 0.0),
    ];
    std::fs::write(&partial, report::render(&recs, Format::Text)).unwrap();
    files.push(partial);
    let mut args = vec!["compare"];
    args.extend(files.iter().map(|f| p(f)));
    let out = run(&args);
    assert_eq!(code(&out), EXIT_USAGE);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no report for dataset"));
}

#[test]
fn bench_reports_one_line_per_layer_count() {
    let (_dir, cfg) = setup("method = drvfl\nnetwork.hidden_nodes = 10\nbench.repeats = 3\nbench.layers = 1, 4\n");
    let recs = report::parse(&ok(&run(&["bench", "--config", p(&cfg)]))).unwrap();
    let layers: Vec<u64> = recs.iter().map(|r| r.get_u64("layers").unwrap()).collect();
    assert_eq!(layers, vec![1, 4]);
    assert!(recs.iter().all(|r| r.get_f64("train_seconds_median").unwrap() >= 0.0));
}
