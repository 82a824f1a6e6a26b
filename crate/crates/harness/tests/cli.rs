use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use steinbound_harness::record::Status;
use steinbound_harness::ExperimentRecord;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_steinbound"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .args(["run", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn without_wall_clock(text: &str) -> String {
    text.lines()
        .filter(|l| !l.contains("\"line\":\"footer\""))
        .collect::<Vec<_>>()
        .join("\n")
}

const SUM_BOUND: &str = r#"
seed = 42
[experiment]
kind = "theorem-bound"
functional = "sum"
law = { law = "standard-uniform" }
sizes = [16, 64]
replicas = 200
"#;

#[test]
fn runs_are_reproducible_and_parallel_safe() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "sum.toml", SUM_BOUND);
    let (a, b, c) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"), dir.path().join("c.jsonl"));
    assert!(run(&cfg, &a, &[]).status.success());
    assert!(run(&cfg, &b, &[]).status.success());
    assert!(run(&cfg, &c, &["--jobs", "3"]).status.success());
    let (ta, tb) = (std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
    assert_eq!(without_wall_clock(&ta), without_wall_clock(&tb));
    let ra = ExperimentRecord::parse(&ta).unwrap();
    let rc = ExperimentRecord::load(&c).unwrap();
    assert_eq!(ra.rows, rc.rows);
    assert_eq!(rc.header.jobs, 3);
    assert_eq!(ra.to_jsonl(), ta);
}

#[test]
fn seed_override_changes_results() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "sum.toml", SUM_BOUND);
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    assert!(run(&cfg, &a, &[]).status.success());
    assert!(run(&cfg, &b, &["--seed", "7"]).status.success());
    let (ra, rb) = (ExperimentRecord::load(&a).unwrap(), ExperimentRecord::load(&b).unwrap());
    assert_eq!(rb.header.seed, 7);
    assert_ne!(ra.rows, rb.rows);
}

#[test]
fn verify_recomputes_bounds_and_catches_tampering() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "sum.toml", SUM_BOUND);
    let rec = dir.path().join("r.jsonl");
    assert!(run(&cfg, &rec, &[]).status.success());
    let ok = bin().arg("verify").arg(&rec).output().unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("2 with bounds"));

    let mut record = ExperimentRecord::load(&rec).unwrap();
    let bound = record.rows[0]["bound"]["theorem_bound"]["value"].as_f64().unwrap();
    record.rows[0]["bound"]["theorem_bound"]["value"] = serde_json::json!(bound * 1.001);
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, record.to_jsonl()).unwrap();
    let out = bin().arg("verify").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validation_failures_exit_2_and_name_the_key() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("x.jsonl");
    let zero = write(dir.path(), "zero.toml", &SUM_BOUND.replace("replicas = 200", "replicas = 0"));
    let out = run(&zero, &out_path, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("experiment.replicas"));

    let unknown = write(dir.path(), "unknown.toml", &format!("{SUM_BOUND}colour = \"red\"\n"));
    let out = run(&unknown, &out_path, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    let seedless = write(dir.path(), "seedless.toml", &SUM_BOUND.replace("seed = 42", ""));
    let out = run(&seedless, &out_path, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
    assert!(!out_path.exists());
}

#[test]
fn evaluation_fault_leaves_partial_failed_record() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "product.toml",
        r#"
seed = 1
[experiment]
kind = "theorem-bound"
functional = "product"
law = { law = "uniform", lo = 10.0, hi = 20.0 }
sizes = [4, 400]
replicas = 50
"#,
    );
    let rec = dir.path().join("p.jsonl");
    let out = run(&cfg, &rec, &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let record = ExperimentRecord::load(&rec).unwrap();
    assert_eq!(record.footer.status, Status::Failed);
    assert_eq!(record.rows.len(), 1);
    assert!(record.footer.error.as_deref().unwrap().contains("product"));
}

#[test]
fn mst_clt_record_schema() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "clt.toml",
        "seed = 42\n[experiment]\nkind = \"mst-clt\"\nradii = [4]\nenvironments = 200\n",
    );
    let rec = dir.path().join("clt.jsonl");
    assert!(run(&cfg, &rec, &[]).status.success());
    let record = ExperimentRecord::load(&rec).unwrap();
    let row = &record.rows[0];
    assert_eq!(row["radius"], 4);
    assert!(row["kolmogorov"]["value"].as_f64().unwrap() > 0.0);
    assert!(row["kolmogorov"]["std_error"].as_f64().unwrap() > 0.0);
    assert_eq!(row["kolmogorov"]["replicas"], 200);
    assert!(row["variance"]["value"].as_f64().unwrap() > 0.0);
    assert!(row["seed"].as_u64().is_some());
}

#[test]
fn report_fits_slopes_and_groups_kinds() {
    let dir = TempDir::new().unwrap();
    let mut paths = Vec::new();
    for n in [16, 64, 256] {
        let cfg = write(
            dir.path(),
            &format!("n{n}.toml"),
            &SUM_BOUND.replace("sizes = [16, 64]", &format!("sizes = [{n}]")),
        );
        let rec = dir.path().join(format!("n{n}.jsonl"));
        assert!(run(&cfg, &rec, &[]).status.success());
        paths.push(rec);
    }
    let nu = write(dir.path(), "nu.toml", "seed = 3\n[experiment]\nkind = \"nu-sampler\"\nn = 3\ndraws = 2000\n");
    let nu_rec = dir.path().join("nu.jsonl");
    assert!(run(&nu, &nu_rec, &[]).status.success());

    let table = bin().arg("report").args(&paths).arg(&nu_rec).output().unwrap();
    assert!(table.status.success());
    let text = String::from_utf8(table.stdout).unwrap();
    assert!(text.contains("== theorem-bound =="));
    assert!(text.contains("== nu-sampler =="));
    assert!(text.contains("slope"));
    assert!(text.contains("log-log slope of theorem_bound against n"));

    let rows = bin().arg("report").args(&paths).args(["--format", "rows"]).output().unwrap();
    assert!(rows.status.success());
    let csv_text = String::from_utf8(rows.stdout).unwrap();
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let slope_col = headers.iter().position(|h| h == "slope").unwrap();
    let records: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), 3);
    let slope: f64 = records[0][slope_col].parse().unwrap();
    assert!(slope < 0.0, "{slope}");

    let empty = bin().arg("report").output().unwrap();
    assert_eq!(empty.status.code(), Some(2));
}

#[test]
fn report_rejects_other_schema_versions() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "nu.toml", "seed = 3\n[experiment]\nkind = \"nu-sampler\"\nn = 2\ndraws = 100\n");
    let rec = dir.path().join("nu.jsonl");
    assert!(run(&cfg, &rec, &[]).status.success());
    let text = std::fs::read_to_string(&rec).unwrap().replace("\"schema_version\":1", "\"schema_version\":2");
    std::fs::write(&rec, text).unwrap();
    let out = bin().arg("report").arg(&rec).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema version 2"));
}

#[test]
fn every_experiment_kind_runs() {
    let configs = [
        "kind = \"stein-solver\"\nthresholds = [0.0]\nepsilons = [0.5]\npoints = 41",
        "kind = \"distance\"\nlaw = { law = \"rademacher\" }\nsizes = [4, 16]\nsamples = 400",
        "kind = \"theorem-bound\"\nfunctional = \"max\"\nlaw = { law = \"standard-normal\" }\nsizes = [6]\nreplicas = 40\nproxy = \"conditional-on-x\"",
        "kind = \"telescoping\"\nfunctional = \"product\"\nlaw = { law = \"standard-uniform\" }\nsizes = [1, 5]\ndraws = 5",
        "kind = \"nu-sampler\"\nn = 4\ndraws = 1000",
        "kind = \"exchangeable\"\nn = 20\nlaw = { law = \"standard-uniform\" }\nreplicas = 2000\nbins = 5",
        "kind = \"size-bias\"\npair = { case = \"bernoulli-sum\", n = 5, p = 0.5 }\nreplicas = 500",
        "kind = \"dependency\"\nmodel = \"independent\"\nlaw = { law = \"exponential\", rate = 1.0 }\nsizes = [10]\nreplicas = 200",
        "kind = \"lindeberg\"\nn = 8\nreplicas = 100\nx_law = { law = \"rademacher\" }\nz_law = { law = \"standard-normal\" }\ntest = \"cubic\"",
        "kind = \"mst-localization\"\nn = 4\nks = [1, 2]\nenvironments = 20",
        "kind = \"mst-bound\"\nradii = [1]\nreplicas = 30\npilot_replicas = 100",
        "kind = \"mst-perturbation\"\nradii = [1, 2]\nenvironments = 10\nresamples = 5",
        "kind = \"mst-alpha-profile\"\nradii = [1, 2, 3]\nenvironments = 10\nlaw = { law = \"power\", exponent = 2.0 }",
    ];
    let dir = TempDir::new().unwrap();
    for (i, body) in configs.iter().enumerate() {
        let cfg = write(dir.path(), &format!("c{i}.toml"), &format!("seed = 5\njobs = 2\n[experiment]\n{body}\n"));
        let rec = dir.path().join(format!("c{i}.jsonl"));
        let out = run(&cfg, &rec, &[]);
        assert!(out.status.success(), "{body}: {}", String::from_utf8_lossy(&out.stderr));
        let record = ExperimentRecord::load(&rec).unwrap();
        assert!(!record.rows.is_empty(), "{body}");
        assert_eq!(record.to_jsonl(), std::fs::read_to_string(&rec).unwrap());
        if record.rows.iter().any(|r| r.get("bound").is_some()) {
            assert!(bin().arg("verify").arg(&rec).status().unwrap().success());
        }
    }
    let perturbation = ExperimentRecord::load(&dir.path().join("c11.jsonl")).unwrap();
    assert!(perturbation.rows.iter().all(|r| r["environments_over_tolerance"] == 0));
    let profile = ExperimentRecord::load(&dir.path().join("c12.jsonl")).unwrap();
    assert_eq!(profile.rows[0]["monotonicity_violations"], 0);
}

#[test]
fn shipped_configs_validate() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = steinbound_harness::ExperimentConfig::load(&path).unwrap();
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 4);
}
