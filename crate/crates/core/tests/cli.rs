use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fluid_mimo(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fluid-mimo"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn generate_writes_every_coefficient_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["generate", "--m", "2", "--n", "10", "--seed", "42", "--out", "a.csv"];
    let out = fluid_mimo(&args, dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# fluid-mimo channel m_r=2 m_t=2 n_r=10 n_t=10");
    assert_eq!(lines[1], "i,n,j,k,re,im");
    assert_eq!(lines.len() - 2, 400);

    let mut again = args;
    again[8] = "b.csv";
    assert!(fluid_mimo(&again, dir.path()).status.success());
    assert_eq!(fs::read(dir.path().join("a.csv")).unwrap(), fs::read(dir.path().join("b.csv")).unwrap());
}

#[test]
fn zero_ports_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = fluid_mimo(&["generate", "--nr", "0", "--out", "x.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nr"), "{}", stderr(&out));
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn solve_all_from_saved_channel() {
    let dir = tempfile::tempdir().unwrap();
    let gen = fluid_mimo(&["generate", "--m", "2", "--n", "4", "--seed", "7", "--out", "ch.csv"], dir.path());
    assert!(gen.status.success());
    let out = fluid_mimo(&["solve", "--channel", "ch.csv", "--algo", "all", "--json"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let lines: Vec<serde_json::Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 5);
    let cap = |v: &serde_json::Value| v["capacity_bits"].as_f64().unwrap();
    let best = lines.iter().find(|v| v["algorithm"] == "exhaustive").unwrap();
    assert!(lines.iter().all(|v| cap(v) <= cap(best) + 1e-12));
    for v in &lines {
        let ports = v["rx_ports"].as_array().unwrap();
        assert_eq!(ports.len(), 2);
        assert!(ports.iter().all(|p| (1..=4).contains(&p.as_u64().unwrap())));
    }
}

#[test]
fn solve_dumps_lp() {
    let dir = tempfile::tempdir().unwrap();
    let out = fluid_mimo(&["solve", "--m", "1", "--n", "3", "--algo", "jcr-res", "--dump-lp", "p.lp"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let lp = fs::read_to_string(dir.path().join("p.lp")).unwrap();
    assert!(lp.contains("Maximize") && lp.contains("Subject To") && lp.trim_end().ends_with("End"));
    assert!(String::from_utf8(out.stdout).unwrap().contains("relaxation U*="));
}

#[test]
fn empty_algorithm_list_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = fluid_mimo(&["sweep", "--vary", "snr", "--values", "0", "--algos", ""], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let out = fluid_mimo(&["solve", "--algo", "simplex"], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn exhaustive_cap_refuses_before_work() {
    let dir = tempfile::tempdir().unwrap();
    let out = fluid_mimo(
        &["sweep", "--m", "2", "--vary", "n", "--values", "4,200", "--algos", "exhaustive"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(!dir.path().join("records.csv").exists());

    let out = fluid_mimo(&["solve", "--m", "2", "--n", "5", "--algo", "exhaustive", "--max-combinations", "100"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn sweep_writes_csvs_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec![
            "sweep", "--m", "1", "--n", "4", "--vary", "snr", "--values=-5,0,5", "--trials", "8", "--master-seed", "3",
            "--out-dir", out,
        ]
    };
    let first = fluid_mimo(&args("one"), dir.path());
    assert!(first.status.success(), "{}", stderr(&first));
    assert!(fluid_mimo(&args("two"), dir.path()).status.success());
    let read = |d: &str, f: &str| fs::read_to_string(dir.path().join(d).join(f)).unwrap();
    assert_eq!(read("one", "records.csv"), read("two", "records.csv"));
    let records = read("one", "records.csv");
    // header plus 3 points x 8 trials x 5 algorithms
    assert_eq!(records.lines().count(), 1 + 3 * 8 * 5);
    let summary = read("one", "summary.csv");
    assert_eq!(
        summary.lines().next().unwrap(),
        "sweep_var,point_value,algorithm,mean_capacity,stddev,ci95,mean_ratio,mean_ao_iterations"
    );
    assert_eq!(summary.lines().count(), 1 + 3 * 5);
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("link.cfg"), "# link\nm = 1\nn = 3\nsnr_db = 0\n").unwrap();
    let out = fluid_mimo(&["generate", "--config", "link.cfg", "--n", "5", "--out", "c.csv"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert!(text.starts_with("# fluid-mimo channel m_r=1 m_t=1 n_r=5 n_t=5"));

    fs::write(dir.path().join("bad.cfg"), "ports = 3\n").unwrap();
    let out = fluid_mimo(&["generate", "--config", "bad.cfg", "--out", "d.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
