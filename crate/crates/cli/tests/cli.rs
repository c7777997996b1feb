use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn gibbs() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gibbs"));
    c.env_remove("GIBBS_OUT_DIR");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    gibbs()
        .arg("run")
        .arg(cfg)
        .arg("--out-dir")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn golden_mean_pressure_report() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&configs().join("thermo_golden.toml"), tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = fs::read_to_string(tmp.path().join("report.txt")).unwrap();
    assert!(report.contains("pressure = 4.81211825059603"), "{report}");
    assert!(report.contains("[thermo::solve_thermo]"));
    assert_eq!(report, stdout(&o));
}

#[test]
fn haar_check_passes_on_uniform() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&configs().join("haar_uniform.toml"), tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("Gram deviation < 1e-10"));
    let basis = fs::read_to_string(tmp.path().join("basis.csv")).unwrap();
    assert!(basis.lines().nth(1) == Some("label,cylinder,value"));
}

#[test]
fn missing_potential_file_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.toml",
        "task = \"thermo\"\n[subshift]\npreset = \"full\"\n[potential]\nfile = \"nowhere/phi.csv\"\n",
    );
    let o = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nowhere/phi.csv"), "{}", stderr(&o));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("bad_toml", "task = \n"),
        ("unknown_task", "task = \"plot\"\n[subshift]\npreset = \"full\"\n"),
        ("not_primitive", "task = \"thermo\"\n[subshift]\nadjacency = [[0, 1], [1, 0]]\n"),
        ("unknown_key", "task = \"thermo\"\nsead = 3\n[subshift]\npreset = \"full\"\n"),
        ("over_budget", "task = \"spectrum\"\n[subshift]\npreset = \"full\"\n[params]\nn = 1000000000\n"),
        ("connes_no_states", "task = \"connes\"\n[subshift]\npreset = \"full\"\n"),
        ("bad_word", "task = \"thermo\"\n[subshift]\npreset = \"full\"\n[potential]\nvalues = [{ word = \"3\", value = 1.0 }]\n"),
    ];
    for (name, text) in cases {
        let cfg = write(tmp.path(), &format!("{name}.toml"), text);
        let o = run(&cfg, &tmp.path().join(name), &[]);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", stderr(&o));
        assert!(stderr(&o).contains("config error"), "{name}");
    }
    let o = run(&tmp.path().join("absent.toml"), tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.toml"));
}

#[test]
fn compute_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&configs().join("spectrum_uniform.toml"), tmp.path(), &["--budget-nodes", "1000"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("spectral::singular_values"), "{}", stderr(&o));
    let cfg = write(
        tmp.path(),
        "slow.toml",
        "task = \"thermo\"\n[subshift]\npreset = \"golden-mean\"\n[params]\ntol = 1e-30\nmax_iter = 3\n",
    );
    let o = run(&cfg, &tmp.path().join("slow"), &[]);
    assert_eq!(o.status.code(), Some(1));
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for cfg in ["connes_uniform.toml", "renewal_bernoulli.toml", "thermo_bernoulli_file.toml"] {
        let a = tmp.path().join(format!("{cfg}.a"));
        let b = tmp.path().join(format!("{cfg}.b"));
        assert_eq!(run(&configs().join(cfg), &a, &["-q"]).status.code(), Some(0));
        assert_eq!(run(&configs().join(cfg), &b, &["-q"]).status.code(), Some(0));
        let (ca, cb) = (dir_contents(&a), dir_contents(&b));
        assert!(!ca.is_empty());
        assert_eq!(ca, cb, "{cfg}");
        for (name, bytes) in &ca {
            assert!(!bytes.contains(&b'\r'), "{name}");
            assert!(bytes.starts_with(b"# gibbs manifest config_sha256="), "{name}");
        }
    }
}

#[test]
fn seed_flag_reaches_manifest_and_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("renewal_bernoulli.toml");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run(&cfg, &a, &["--seed", "99", "-q"]);
    run(&cfg, &b, &["-q"]);
    let ra = fs::read_to_string(a.join("report.txt")).unwrap();
    let rb = fs::read_to_string(b.join("report.txt")).unwrap();
    assert!(ra.starts_with("# gibbs manifest") && ra.lines().next().unwrap().contains(" seed=99 "));
    assert!(rb.lines().next().unwrap().contains(" seed=7 "));
    let krw = |r: &str| r.lines().find(|l| l.starts_with("krw_mean")).unwrap().to_string();
    assert_ne!(krw(&ra), krw(&rb));
}

#[test]
fn checkpoints_flag_and_env_out_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("from-env");
    let o = gibbs()
        .arg("run")
        .arg(configs().join("spectrum_uniform.toml"))
        .args(["--checkpoints", "1000,2000,4000", "-q"])
        .env("GIBBS_OUT_DIR", &out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let d = fs::read_to_string(out.join("dixmier.csv")).unwrap();
    let ns: Vec<&str> = d.lines().skip(2).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ns, ["1000", "2000", "4000"]);
    let o = run(&configs().join("spectrum_uniform.toml"), tmp.path(), &["--checkpoints", "10,5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    let o = gibbs().arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = gibbs().arg("--help").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}
