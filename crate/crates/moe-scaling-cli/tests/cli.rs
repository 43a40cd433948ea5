//! End-to-end CLI tests against the built binary.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_moe-scaling"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    assert!(
        output.status.success(),
        "exit {:?}, stderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout.clone()).unwrap()
}

#[test]
fn predict_matches_the_scalar_oracle() {
    let out = stdout(&run(&[
        "predict", "--n", "1e9", "--d", "2e10", "--na", "2e8", "--g", "6.78", "--s", "0.3148",
    ]));
    let loss: f64 = out.trim().parse().unwrap();
    assert!((loss - 2.8407).abs() < 1e-3, "{loss}");
}

#[test]
fn predict_accepts_symbol_flag_aliases() {
    let out = stdout(&run(&[
        "predict", "--N", "1e9", "--D", "2e10", "--Na", "2e8", "--G", "6.78", "--S", "0.3148",
    ]));
    let loss: f64 = out.trim().parse().unwrap();
    assert!((loss - 2.8407).abs() < 1e-3, "{loss}");
}

#[test]
fn predict_accepts_suffix_forms() {
    let plain = stdout(&run(&[
        "predict", "--n", "1e9", "--d", "2e10", "--na", "2e8", "--g", "8", "--s", "0.2",
    ]));
    let suffixed = stdout(&run(&[
        "predict", "--n", "1B", "--d", "20B", "--na", "200M", "--g", "8", "--s", "0.2",
    ]));
    assert_eq!(plain, suffixed);
}

#[test]
fn optimal_g_prints_the_closed_form() {
    let out = stdout(&run(&["optimal", "--what", "g"]));
    let g: f64 = out.trim().parse().unwrap();
    assert!((g - 6.778).abs() < 0.005, "{g}");
}

#[test]
fn json_output_is_a_single_document() {
    let out = stdout(&run(&[
        "predict", "--n", "1e9", "--d", "2e10", "--na", "2e8", "--g", "8", "--s", "0.2",
        "--output", "json",
    ]));
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(doc["loss"].as_f64().unwrap() > 1.8);
    assert!(doc["point"]["N"].as_f64().unwrap() == 1e9);
}

#[test]
fn usage_errors_exit_with_status_2() {
    let out = run(&["predict", "--n", "1e9"]); // missing required flags
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_with_status_1_and_name_the_violation() {
    let out = run(&[
        "predict", "--n", "1e9", "--d", "2e10", "--na", "2e8", "--g", "8", "--s", "1.5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("S") && stderr.contains("[0, 1)"),
        "{stderr}"
    );
    assert!(out.stdout.is_empty());
}

#[test]
fn report_table4_reproduces_the_published_row() {
    let out = stdout(&run(&[
        "report",
        "--kind",
        "table4",
        "--model",
        "Kimi-K2:32e9:1e12",
        "--thresholds",
        "0.001,0.005",
    ]));
    assert!(out.contains("20.4"), "{out}");
    assert!(out.contains("11%"), "{out}");
    assert!(out.contains("5%"), "{out}");
}

#[test]
fn report_defaults_to_the_nine_mainstream_models() {
    let out = stdout(&run(&["report", "--kind", "table3", "--output", "csv"]));
    assert_eq!(out.lines().count(), 10); // header + nine rows
}

#[test]
fn arch_counts_and_rescaling() {
    let base = [
        "--layers",
        "20",
        "--d-hidden",
        "1280",
        "--d-head",
        "64",
        "--n-heads",
        "20",
        "--d-expert",
        "224",
        "--n-routed",
        "128",
        "--n-active-routed",
        "16",
        "--n-shared",
        "4",
    ];
    let mut args = vec!["arch"];
    args.extend_from_slice(&base);
    args.extend_from_slice(&["--output", "csv"]);
    let out = stdout(&run(&args));
    assert!(out.contains("2401894400,475136000,20,0.2"), "{out}");

    let mut args = vec!["arch"];
    args.extend_from_slice(&base);
    args.extend_from_slice(&["--expert-scale", "0.5", "--output", "csv"]);
    let out = stdout(&run(&args));
    assert!(out.contains(",112,260"), "{out}");
}

#[test]
fn sweep_emits_one_csv_row_per_level() {
    let out = stdout(&run(&[
        "sweep",
        "--target",
        "s",
        "--levels",
        "0,0.2,0.4",
        "--layers",
        "12",
        "--d-hidden",
        "512",
        "--d-head",
        "64",
        "--n-heads",
        "8",
        "--d-expert",
        "384",
        "--n-routed",
        "32",
        "--n-active-routed",
        "4",
        "--n-shared",
        "1",
    ]));
    assert_eq!(out.lines().count(), 4);
    assert!(out.lines().nth(1).unwrap().ends_with(",5,0"));
    assert!(out.lines().nth(3).unwrap().contains(",3,2,"));
}

#[test]
fn campaign_fit_registry_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let campaign = dir.path().join("campaign.csv");
    let registry = dir.path().join("registry");

    let out = run(&[
        "campaign",
        "generate",
        "--sigma",
        "0",
        "--out",
        campaign.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(campaign.exists());

    // fit the campaign and save the constants under a label
    let out = run(&[
        "fit",
        "--records",
        campaign.to_str().unwrap(),
        "--starts",
        "8",
        "--save-constants",
        "round-trip",
        "--registry-dir",
        registry.to_str().unwrap(),
        "--output",
        "json",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(doc["mean_abs_error"].as_f64().unwrap() < 1e-6);

    // the saved label is loadable as a constants source
    let out = stdout(&run(&[
        "optimal",
        "--what",
        "g",
        "--constants",
        "round-trip",
        "--registry-dir",
        registry.to_str().unwrap(),
    ]));
    let g: f64 = out.trim().parse().unwrap();
    assert!((g - 6.778).abs() < 0.01, "{g}");
}

#[test]
fn fit_json_feeds_back_as_constants() {
    let dir = tempfile::tempdir().unwrap();
    let campaign = dir.path().join("campaign.csv");
    let fit_json = dir.path().join("fit.json");
    assert!(run(&[
        "campaign",
        "generate",
        "--sigma",
        "0",
        "--out",
        campaign.to_str().unwrap(),
    ])
    .status
    .success());
    let out = stdout(&run(&[
        "fit",
        "--records",
        campaign.to_str().unwrap(),
        "--starts",
        "8",
        "--output",
        "json",
    ]));
    std::fs::write(&fit_json, &out).unwrap();
    let predicted = stdout(&run(&[
        "predict",
        "--n",
        "1e9",
        "--d",
        "2e10",
        "--na",
        "2e8",
        "--g",
        "6.78",
        "--s",
        "0.3148",
        "--constants",
        fit_json.to_str().unwrap(),
    ]));
    let loss: f64 = predicted.trim().parse().unwrap();
    assert!((loss - 2.8406).abs() < 1e-3, "{loss}");
}

#[test]
fn campaign_json_round_trips_through_ingest() {
    let dir = tempfile::tempdir().unwrap();
    let json_path = dir.path().join("campaign.json");
    let csv_path = dir.path().join("normalized.csv");
    assert!(run(&[
        "campaign",
        "generate",
        "--sigma",
        "0.005",
        "--seed",
        "3",
        "--out",
        json_path.to_str().unwrap(),
    ])
    .status
    .success());
    assert!(run(&[
        "campaign",
        "ingest",
        "--input",
        json_path.to_str().unwrap(),
        "--out",
        csv_path.to_str().unwrap(),
    ])
    .status
    .success());
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(text.lines().count(), 447); // header + 446 records
}

#[test]
fn fit_honors_bound_overrides_and_bare_optimal_degrades() {
    let dir = tempfile::tempdir().unwrap();
    let campaign = dir.path().join("c.csv");
    assert!(run(&[
        "campaign",
        "generate",
        "--sigma",
        "0",
        "--out",
        campaign.to_str().unwrap(),
    ])
    .status
    .success());
    let out = stdout(&run(&[
        "fit",
        "--records",
        campaign.to_str().unwrap(),
        "--form",
        "nd",
        "--starts",
        "6",
        "--bound",
        "alpha=0.3:0.5",
        "--no-default-start",
        "--output",
        "json",
    ]));
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    let alpha = doc["params"]["sub-law"]["nd"]["alpha"].as_f64().unwrap();
    assert!((0.3..=0.5).contains(&alpha), "{alpha}");

    // bare `optimal` prints just the closed-form optima
    let out = stdout(&run(&["optimal"]));
    assert!(out.contains("G_opt") && out.contains("S_opt"), "{out}");
}

#[test]
fn curve_g_marginal_has_its_minimum_at_the_optimum() {
    let out = stdout(&run(&[
        "curve", "--target", "g", "--min", "1", "--max", "20", "--steps", "191", "--n", "2.4e9",
        "--na", "476e6", "--d", "5e10", "--s", "0.2",
    ]));
    let mut best = (f64::INFINITY, 0.0);
    for line in out.lines().skip(1) {
        let (x, loss) = line.split_once(',').unwrap();
        let (x, loss): (f64, f64) = (x.parse().unwrap(), loss.parse().unwrap());
        if loss < best.0 {
            best = (loss, x);
        }
    }
    assert!((best.1 - 6.78).abs() <= 0.1, "argmin {}", best.1);
}

#[test]
fn curve_na_marginal_is_hook_shaped() {
    let out = stdout(&run(&[
        "curve", "--target", "na", "--min", "0.01", "--max", "1", "--steps", "100", "--n", "2.4e9",
        "--d", "5e10", "--g", "6.78", "--s", "0.3148",
    ]));
    let losses: Vec<f64> = out
        .lines()
        .skip(1)
        .map(|l| l.split_once(',').unwrap().1.parse().unwrap())
        .collect();
    let argmin = losses
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    // single interior minimum with a rising tail
    assert!(argmin > 0 && argmin < losses.len() - 1, "argmin {argmin}");
    assert!(losses[losses.len() - 1] > losses[argmin]);
    assert!(losses[0] > losses[argmin]);
}

#[test]
fn frontier_matches_the_published_functional_summary() {
    let out = stdout(&run(&[
        "frontier", "--n", "1T", "--g", "7", "--s", "0.31", "--c-min", "1e20", "--c-max", "1e22",
        "--points", "25", "--output", "json",
    ]));
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    let c0 = doc["c0"].as_f64().unwrap();
    assert!((c0 - 1.873).abs() < 0.002, "{c0}");
    let summary = &doc["summary"];
    let coeff = summary["coeff"].as_f64().unwrap();
    let exponent = summary["exponent"].as_f64().unwrap();
    assert!(((coeff - 576.0) / 576.0).abs() < 0.05, "{coeff}");
    assert!(((exponent + 0.158) / 0.158).abs() < 0.05, "{exponent}");
}

#[test]
fn unknown_constants_label_is_a_clean_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["optimal", "--what", "g", "--constants", "missing"])
        .env("MOE_SCALING_REGISTRY_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing"));
}

#[test]
fn registry_env_variable_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let campaign = Path::new(env!("CARGO_TARGET_TMPDIR")).join("env-campaign.csv");
    assert!(run(&[
        "campaign",
        "generate",
        "--sigma",
        "0",
        "--out",
        campaign.to_str().unwrap(),
    ])
    .status
    .success());
    let out = bin()
        .args([
            "fit",
            "--records",
            campaign.to_str().unwrap(),
            "--starts",
            "8",
            "--save-constants",
            "env-run",
        ])
        .env("MOE_SCALING_REGISTRY_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("env-run.json").exists());
}
