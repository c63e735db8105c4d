use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_copula-lab"))
        .args(args)
        .env_remove("COPULA_LAB_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_lists_subcommands() {
    let o = lab(&["--help"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for sub in [
        "simulate", "estimate", "smooth", "field", "rankstat", "study",
    ] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
    let o = lab(&["study", "--help"]);
    assert!(stdout(&o).contains("COPULA_LAB_THREADS"));
}

fn json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(o)).unwrap()
}

#[test]
fn simulate_then_estimate_smooth_and_rankstat() {
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("s.csv");
    let o = lab(&[
        "simulate",
        "--copula",
        "clayton",
        "--theta",
        "2",
        "--dim",
        "2",
        "--n",
        "300",
        "--seed",
        "4",
        "--out",
        path(&sample),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&sample).unwrap();
    assert_eq!(text.lines().count(), 301);
    assert!(text.starts_with("u1,u2"));

    let result = dir.path().join("result.json");
    let o = lab(&[
        "estimate",
        "--input",
        path(&sample),
        "--grid",
        "5",
        "--copula",
        "clayton",
        "--theta",
        "2",
        "--out",
        path(&result),
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&result).unwrap()).unwrap();
    assert_eq!(v["grid"].as_array().unwrap().len(), 25);
    // Corner (1, 1): C_n = C = 1, A_n = 0.
    assert_eq!(v["c_n"][24], 1.0);
    assert_eq!(v["c"][24], 1.0);
    assert_eq!(v["a_n"][24], 0.0);
    assert_eq!(v["input"]["kind"], "pseudo_uniform");

    let v = json(&lab(&[
        "smooth",
        "--input",
        path(&sample),
        "--grid",
        "5",
        "--kernel",
        "quartic",
    ]));
    assert_eq!(v["c_hat"].as_array().unwrap().len(), 25);
    assert!(v.get("nabla").is_none());
    let v = json(&lab(&[
        "smooth",
        "--input",
        path(&sample),
        "--grid",
        "5",
        "--h",
        "0.05",
        "--model",
        "clayton",
        "--theta",
        "2",
    ]));
    let nabla = v["nabla"].as_array().unwrap();
    assert_eq!(nabla.len(), 25);
    // The four terms add up to the difference at every point.
    for (t, d) in nabla.iter().zip(v["difference"].as_array().unwrap()) {
        let sum: f64 = t
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .sum();
        assert!((sum - d.as_f64().unwrap()).abs() < 1e-9);
    }

    let v = json(&lab(&[
        "rankstat",
        "--input",
        path(&sample),
        "--stat",
        "kendall",
        "--copula",
        "clayton",
        "--theta",
        "2",
    ]));
    let (stat, classical) = (
        v["statistic"].as_f64().unwrap(),
        v["classical"].as_f64().unwrap(),
    );
    assert!((stat - classical).abs() <= 4.0 / 300.0);
    assert!((v["model_value"].as_f64().unwrap() - 0.5).abs() < 0.01);

    // Custom J = 12 z - 3 in the Spearman-type integral reproduces --stat spearman.
    let score = dir.path().join("score.toml");
    fs::write(
        &score,
        "[rankstat]\nscore = \"custom\"\nterms = [{ coef = 12.0, c = 1 }, { coef = -3.0 }]\n",
    )
    .unwrap();
    let stats = dir.path().join("stats.json");
    let o = lab(&[
        "rankstat",
        "--input",
        path(&sample),
        "--stat",
        "custom",
        "--config",
        path(&score),
        "--out",
        path(&stats),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let custom: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&stats).unwrap()).unwrap();
    let spearman = json(&lab(&["rankstat", "--input", path(&sample)]));
    assert!(
        (custom["statistic"].as_f64().unwrap() - spearman["statistic"].as_f64().unwrap()).abs()
            < 1e-12
    );
    assert_eq!(custom["functional"], "spearman");
}

#[test]
fn field_writes_replicate_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fields.csv");
    let args = [
        "field",
        "--copula",
        "fgm",
        "--theta",
        "0.5",
        "--grid",
        "4",
        "--process",
        "kstar",
        "--reps",
        "3",
        "--seed",
        "42",
        "--out",
        path(&out),
    ];
    let o = lab(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("replicate,u1,u2,value"));
    assert_eq!(text.lines().count(), 1 + 3 * 16);
    assert!(lab(&args).status.success());
    assert_eq!(fs::read_to_string(&out).unwrap(), text);
    for process in ["bridge", "kiefer"] {
        let o = lab(&[
            "field",
            "--copula",
            "independence",
            "--grid",
            "3",
            "--process",
            process,
            "--seed",
            "1",
        ]);
        assert!(o.status.success());
        assert_eq!(stdout(&o).lines().count(), 10);
    }
}

#[test]
fn study_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        "kind = \"convergence\"\nseed = 1\ngrid = 11\nladder = [50, 200, 800]\nreplicates = 20\n\
         [model]\nfamily = \"independence\"\ndim = 2\n[output]\nformats = [\"json\", \"csv\", \"svg\"]\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = lab(&[
        "study",
        "--config",
        path(&cfg),
        "--out",
        path(&out),
        "--threads",
        "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("rate_slope"));
    for ext in ["json", "csv", "svg"] {
        assert!(out.join(format!("convergence.{ext}")).exists());
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "kind = \"lil\"\nseed = 1\ngrid = 11\nladder = [10, 100]\nreplicates = 0\n[model]\nfamily = \"independence\"\ndim = 2\n")
        .unwrap();
    assert_eq!(
        lab(&["study", "--config", path(&cfg)]).status.code(),
        Some(2)
    );

    fs::write(&cfg, "kind = \"lil\"\nseeed = 1\n").unwrap();
    assert_eq!(
        lab(&["study", "--config", path(&cfg)]).status.code(),
        Some(2)
    );

    let missing = dir.path().join("missing.toml");
    assert_eq!(
        lab(&["study", "--config", path(&missing)]).status.code(),
        Some(1)
    );

    // Tied pseudo-observations without a jitter seed.
    let tied = dir.path().join("tied.csv");
    fs::write(&tied, "0.5,0.2\n0.5,0.7\n0.1,0.4\n").unwrap();
    assert_eq!(
        lab(&["estimate", "--input", path(&tied)]).status.code(),
        Some(3)
    );
    assert_eq!(
        lab(&["estimate", "--input", path(&tied), "--jitter", "3"])
            .status
            .code(),
        Some(0)
    );
}
