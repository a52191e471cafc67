//! The `tfkey` binary: outputs, exit codes and determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tfkey::cli::{parse_config, CSV_HEADER};
use tfkey::lp::parse_dump;

fn tfkey(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfkey"))
        .args(args)
        .env_remove("TFKEY_THREADS")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn fixed_config(slices: usize, distances: &str) -> String {
    format!(
        r#"{{
  "phase_slices": {slices},
  "n_tot": 1e12,
  "budget": {{"eps_total_pe": 4e-20, "eps_cor": 1e-10, "eps_pa": 1.6566e-10}},
  "distances": {distances},
  "protocol": {{"mu": 0.03, "nu": 0.12, "p_mu": 0.88, "p_nu": 0.07}}
}}"#
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn sweep_writes_csv_and_valid_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &fixed_config(8, r#"{"start": 0, "stop": 400, "step": 100}"#),
    );
    let out = dir.path().join("curve.csv");
    let o = tfkey(&["sweep", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "L_km,mu,nu,p_mu,p_nu,p_o,n_bit,e_bit,e_ph_upper,key_length,key_rate,plob_rate,status"
    );
    assert_eq!(CSV_HEADER.join(","), text.lines().next().unwrap());
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 5);
    for r in &rows {
        assert_eq!(r.len(), 13);
        // Every number carries 17 significant digits and round-trips.
        for f in &r[..12] {
            if *f != "inf" {
                let v: f64 = f.parse().unwrap();
                assert_eq!(&format!("{v:.16e}"), f);
            }
        }
    }
    assert_eq!(rows[0][11], "inf");
    assert_eq!(rows[1][12], "ok");

    let schema: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(
            Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/report.schema.json"),
        )
        .unwrap(),
    )
    .unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("curve.json")).unwrap())
            .unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator
        .iter_errors(&report)
        .map(|e| e.to_string())
        .collect();
    assert!(errors.is_empty(), "{errors:#?}");
    assert_eq!(report["points"].as_array().unwrap().len(), 5);
}

#[test]
fn optimized_analyze_sidecar_validates() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{
  "phase_slices": 8, "n_tot": 1e12,
  "budget": {"eps_a": 1e-21, "eps_cor": 1e-10, "eps_pa": 1.6566e-10},
  "distances": [100],
  "optimize": true,
  "mode": {"sampled": 3},
  "search": {"grid_density": 3, "refinement_rounds": 1, "starts": 1}
}"#;
    let cfg = write_config(dir.path(), "c.json", body);
    let out = dir.path().join("a.csv");
    let o = tfkey(&[
        "analyze",
        "--config",
        s(&cfg),
        "--out",
        s(&out),
        "--threads",
        "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let schema: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(
            Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/report.schema.json"),
        )
        .unwrap(),
    )
    .unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.json")).unwrap()).unwrap();
    assert!(jsonschema::is_valid(&schema, &report));
    assert!(report["points"][0]["evaluations"].as_u64().unwrap() > 0);
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &fixed_config(8, "[50, 100, 150]"));
    let mut outputs = Vec::new();
    for (i, extra) in [vec![], vec![], vec!["--seed", "11"], vec!["--seed", "11"]]
        .iter()
        .enumerate()
    {
        let out = dir.path().join(format!("o{i}.csv"));
        let mut args = vec!["sweep", "--config", s(&cfg), "--out", s(&out)];
        args.extend(extra.iter().copied());
        assert!(tfkey(&args).status.success());
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[2], outputs[3]);
    assert_ne!(outputs[0], outputs[2]);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");

    let empty = write_config(dir.path(), "e.json", &fixed_config(8, "[]"));
    let o = tfkey(&["sweep", "--config", s(&empty), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("distances"));
    assert!(!out.exists());

    let bad_field = write_config(
        dir.path(),
        "b.json",
        &fixed_config(8, "[10]").replace("\"mu\": 0.03", "\"mu\": -1"),
    );
    let o = tfkey(&["analyze", "--config", s(&bad_field), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("protocol"));

    let no_protocol = write_config(
        dir.path(),
        "n.json",
        r#"{"phase_slices": 8, "n_tot": 1000, "budget": {"eps_a": 1e-20, "eps_cor": 1e-10, "eps_pa": 1e-10}, "distances": [1]}"#,
    );
    let o = tfkey(&["analyze", "--config", s(&no_protocol), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));

    let good = write_config(dir.path(), "g.json", &fixed_config(8, "[10, 20]"));
    let o = tfkey(&["analyze", "--config", s(&good), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2), "analyze with two distances");

    let missing_dir = dir.path().join("nope/o.csv");
    let o = tfkey(&["sweep", "--config", s(&good), "--out", s(&missing_dir)]);
    assert_eq!(o.status.code(), Some(2));

    let o = tfkey(&[
        "sweep",
        "--config",
        s(&dir.path().join("absent.json")),
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = tfkey(&[
        "sweep",
        "--config",
        s(&good),
        "--out",
        s(&out),
        "--threads",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn threads_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &fixed_config(8, "[10]"));
    let out = dir.path().join("o.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_tfkey"))
        .args(["analyze", "--config", s(&cfg), "--out", s(&out)])
        .env("TFKEY_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dump_lp_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for (m, vars) in [(2usize, 4usize), (8, 16)] {
        let cfg = write_config(
            dir.path(),
            &format!("c{m}.json"),
            &fixed_config(m, "[0, 100]"),
        );
        let out = dir.path().join(format!("lp{m}.tsv"));
        let o = tfkey(&[
            "dump-lp",
            "--config",
            s(&cfg),
            "--out",
            s(&out),
            "--distance",
            "100",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let text = std::fs::read_to_string(&out).unwrap();
        let lp = parse_dump(&text).unwrap();
        assert_eq!(lp.num_vars(), vars);
        assert_eq!(lp.inequalities.len(), 2 * (m + 2));

        // Same program as the library builds directly.
        let c = parse_config(&std::fs::read_to_string(&cfg).unwrap()).unwrap();
        let p = c.protocol_params(c.protocol.unwrap()).unwrap();
        let counts = tfkey::channel::expected_observations(
            &p,
            &c.channel,
            100.0,
            tfkey::DetectorPlacement::Excluded,
        )
        .unwrap();
        let direct = tfkey::constraints::build_lp(&p, &counts, &c.budget().unwrap()).unwrap();
        assert_eq!(direct.lp, lp);
    }
    let cfg = write_config(dir.path(), "c.json", &fixed_config(2, "[0, 100]"));
    let o = tfkey(&[
        "dump-lp",
        "--config",
        s(&cfg),
        "--out",
        "/nonexistent-dir/x.tsv",
        "--distance",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}
