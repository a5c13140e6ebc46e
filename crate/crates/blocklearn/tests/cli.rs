//! End-to-end tests of the `blocklearn` executable: every subcommand run
//! as a real process over a shared temporary workspace, checking exit
//! codes, artifact formats, manifests, and byte-level reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use blocklearn::model::{labels_from_truth, load_pairs_csv, load_records, RecordFormat};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_blocklearn")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn blocklearn")
}

fn assert_ok(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed (status {:?})\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// One corpus + one learned formula, generated once and shared by the
/// read-only tests below.
struct Workspace {
    dir: tempfile::TempDir,
    records: PathBuf,
    formula: PathBuf,
    blocks: PathBuf,
    pairs: PathBuf,
}

fn ws() -> &'static Workspace {
    static WS: OnceLock<Workspace> = OnceLock::new();
    WS.get_or_init(|| {
        let dir = tempfile::tempdir().expect("tempdir");
        let d = dir.path().to_path_buf();
        let records = d.join("records.jsonl");
        let formula = d.join("formula.txt");
        let blocks = d.join("blocks.tsv");
        let pairs = d.join("pairs.csv");

        let out = run_in(
            &d,
            &[
                "datagen",
                "--out",
                "records.jsonl",
                "--authors",
                "45",
                "--mentions-min",
                "6",
                "--mentions-max",
                "12",
                "--seed",
                "21",
            ],
        );
        assert_ok(&out, "datagen");

        let out = run_in(
            &d,
            &[
                "learn",
                "--records",
                "records.jsonl",
                "--form",
                "disjoint-cnf",
                "--epsilon",
                "0.02",
                "--out",
                "formula.txt",
            ],
        );
        assert_ok(&out, "learn");

        let out = run_in(
            &d,
            &[
                "block",
                "--formula",
                "formula.txt",
                "--records",
                "records.jsonl",
                "--out-blocks",
                "blocks.tsv",
                "--out-pairs",
                "pairs.csv",
            ],
        );
        assert_ok(&out, "block");

        Workspace {
            dir,
            records,
            formula,
            blocks,
            pairs,
        }
    })
}

#[test]
fn datagen_writes_jsonl_with_truth_ids_and_a_manifest() {
    let w = ws();
    let records = load_records(&w.records, RecordFormat::Jsonl).unwrap();
    assert!(records.len() >= 45 * 6);
    assert!(records.records().iter().all(|r| r.truth_id.is_some()));

    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(w.dir.path().join("records.jsonl.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["command"], "datagen");
    assert_eq!(manifest["args"]["resolved_params"]["seed"], 21);
    assert_eq!(manifest["args"]["resolved_params"]["authors"], 45);
    assert_eq!(manifest["outputs"][0], "records.jsonl");
}

#[test]
fn learned_formula_file_round_trips_through_the_parser() {
    let w = ws();
    let text = std::fs::read_to_string(&w.formula).unwrap();
    assert!(text.starts_with("DISJOINT-CNF\n"), "got:\n{text}");
    let parsed = blocklearn::formula::text::parse_formula(&text).unwrap();
    assert_eq!(format!("{parsed}\n"), text);
}

#[test]
fn blocks_file_is_key_tab_comma_separated_ids() {
    let w = ws();
    let records = load_records(&w.records, RecordFormat::Jsonl).unwrap();
    let text = std::fs::read_to_string(&w.blocks).unwrap();
    let mut seen = 0usize;
    for line in text.lines() {
        let (_key, ids) = line.split_once('\t').expect("key<TAB>ids");
        for id in ids.split(',') {
            assert!(records.index_of(id).is_some(), "unknown id {id}");
            seen += 1;
        }
    }
    // Stage-1 partitions: every record in exactly one block.
    assert_eq!(seen, records.len());
}

#[test]
fn pairs_csv_has_header_and_known_ids() {
    let w = ws();
    let records = load_records(&w.records, RecordFormat::Jsonl).unwrap();
    let text = std::fs::read_to_string(&w.pairs).unwrap();
    assert!(text.starts_with("left_id,right_id\n"));
    let pairs = load_pairs_csv(&w.pairs, &records).unwrap();
    assert!(!pairs.is_empty());
}

#[test]
fn pipeline_evaluate_matches_standalone_recount() {
    let w = ws();
    let out = run_in(
        w.dir.path(),
        &[
            "evaluate",
            "--records",
            "records.jsonl",
            "--pairs",
            "pairs.csv",
            "--blocks",
            "blocks.tsv",
        ],
    );
    assert_ok(&out, "evaluate");
    let report = stdout_of(&out);

    // Recount with the library directly; the report must carry the same
    // numbers.
    let records = load_records(&w.records, RecordFormat::Jsonl).unwrap();
    let labels = labels_from_truth(&records, "truth_id").unwrap();
    let pairs = load_pairs_csv(&w.pairs, &records).unwrap();
    let m = blocklearn::evaluation::compute_metrics(&pairs, &labels).unwrap();
    assert!(
        report.contains(&format!("RR = {:.6}", m.rr)),
        "report:\n{report}"
    );
    assert!(report.contains(&format!("PC = {:.6}", m.pc)));
    assert!(report.contains("Block Size"), "histogram missing:\n{report}");
}

#[test]
fn curve_csv_has_expected_shape() {
    let w = ws();
    let out = run_in(
        w.dir.path(),
        &[
            "curve",
            "--records",
            "records.jsonl",
            "--form",
            "cnf",
            "--epsilon-grid",
            "0.0,0.02,0.1",
            "--out",
            "curve.csv",
        ],
    );
    assert_ok(&out, "curve");
    let text = std::fs::read_to_string(w.dir.path().join("curve.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "epsilon,rr,pc,f");
    assert_eq!(lines.len(), 4);
    for line in &lines[1..] {
        let fields: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(fields.len(), 4);
        for v in &fields[1..] {
            assert!((0.0..=1.0).contains(v), "metric out of range: {line}");
        }
    }
}

#[test]
fn baseline_heuristic_writes_blocks_and_metrics() {
    let w = ws();
    let out = run_in(
        w.dir.path(),
        &[
            "baseline",
            "--method",
            "heuristic",
            "--records",
            "records.jsonl",
            "--out-pairs",
            "hpairs.csv",
            "--out-blocks",
            "hblocks.tsv",
        ],
    );
    assert_ok(&out, "baseline heuristic");
    let report = stdout_of(&out);
    assert!(report.contains("Block Size"));
    assert!(report.contains("RR = "));
    assert!(w.dir.path().join("hblocks.tsv").exists());

    // The heuristic is blind to anything but names, so the learned
    // formula (which refines those very blocks) keeps no more pairs.
    let records = load_records(&w.records, RecordFormat::Jsonl).unwrap();
    let hpairs = load_pairs_csv(&w.dir.path().join("hpairs.csv"), &records).unwrap();
    let lpairs = load_pairs_csv(&w.pairs, &records).unwrap();
    assert!(lpairs.len() <= hpairs.len());
}

#[test]
fn baseline_canopy_rejects_blocks_output_but_writes_pairs() {
    let w = ws();
    let out = run_in(
        w.dir.path(),
        &[
            "baseline",
            "--method",
            "canopy",
            "--records",
            "records.jsonl",
            "--out-blocks",
            "cblocks.tsv",
        ],
    );
    assert_eq!(out.status.code(), Some(1), "canopy --out-blocks is a usage error");

    let out = run_in(
        w.dir.path(),
        &[
            "baseline",
            "--method",
            "canopy",
            "--records",
            "records.jsonl",
            "--loose",
            "0.75",
            "--tight",
            "0.9",
            "--out-pairs",
            "cpairs.csv",
        ],
    );
    assert_ok(&out, "baseline canopy");
    let records = load_records(&w.records, RecordFormat::Jsonl).unwrap();
    let pairs = load_pairs_csv(&w.dir.path().join("cpairs.csv"), &records).unwrap();
    assert!(!pairs.is_empty());
}

#[test]
fn same_seed_reproduces_artifacts_byte_for_byte_across_thread_counts() {
    let w = ws();
    for (tag, threads) in [("a", "1"), ("b", "4")] {
        let rec = format!("rep_{tag}.jsonl");
        let form = format!("rep_{tag}.formula");
        let prs = format!("rep_{tag}.pairs.csv");
        let out = run_in(
            w.dir.path(),
            &[
                "--threads", threads, "datagen", "--out", &rec, "--authors", "30",
                "--mentions-min", "5", "--mentions-max", "9", "--seed", "4",
            ],
        );
        assert_ok(&out, "datagen (repro)");
        let out = run_in(
            w.dir.path(),
            &[
                "--threads", threads, "learn", "--records", &rec, "--form", "cnf",
                "--epsilon", "0.01", "--out", &form,
            ],
        );
        assert_ok(&out, "learn (repro)");
        let out = run_in(
            w.dir.path(),
            &[
                "--threads", threads, "block", "--formula", &form, "--records", &rec,
                "--out-pairs", &prs,
            ],
        );
        assert_ok(&out, "block (repro)");
    }
    for name in ["jsonl", "formula", "pairs.csv"] {
        let a = std::fs::read(w.dir.path().join(format!("rep_a.{name}"))).unwrap();
        let b = std::fs::read(w.dir.path().join(format!("rep_b.{name}"))).unwrap();
        assert_eq!(a, b, "artifact .{name} differs between thread counts");
    }
}

#[test]
fn usage_errors_exit_one_runtime_errors_exit_two() {
    let w = ws();
    // Unknown flag: clap usage error.
    let out = run_in(w.dir.path(), &["learn", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    // Out-of-range epsilon: our usage error.
    let out = run_in(
        w.dir.path(),
        &[
            "learn", "--records", "records.jsonl", "--form", "cnf", "--epsilon", "7",
            "--out", "x.txt",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilon"));
    // Missing input file: runtime error naming the file.
    let out = run_in(
        w.dir.path(),
        &[
            "evaluate", "--records", "absent.jsonl", "--pairs", "pairs.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.jsonl"));
    // Help and version succeed.
    let out = run_in(w.dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let out = run_in(w.dir.path(), &["--version"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn blocks_output_needs_a_disjoint_formula() {
    let w = ws();
    // Learn a plain CNF, then ask block for --out-blocks: refused.
    let out = run_in(
        w.dir.path(),
        &[
            "learn", "--records", "records.jsonl", "--form", "cnf", "--out",
            "plain.formula",
        ],
    );
    assert_ok(&out, "learn cnf");
    let out = run_in(
        w.dir.path(),
        &[
            "block", "--formula", "plain.formula", "--records", "records.jsonl",
            "--out-blocks", "nope.tsv", "--out-pairs", "nope.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("disjoint"));
}
