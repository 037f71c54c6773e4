use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_noma-games"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn fig3_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig3.csv");
    let cfg = configs().join("fig3.toml");
    let status = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/fig3.csv");
    assert_eq!(std::fs::read(out).unwrap(), std::fs::read(golden).unwrap());
}

#[test]
fn rerun_is_byte_identical() {
    for name in ["matching", "coalition", "power", "contention"] {
        let cfg = configs().join(format!("{name}.toml"));
        let a = run(&["run", "--config", cfg.to_str().unwrap(), "--oracle"]);
        let b = run(&["run", "--config", cfg.to_str().unwrap(), "--oracle"]);
        assert!(a.status.success(), "{name}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{name}");
    }
}

#[test]
fn csv_has_header_metadata_and_lf_endings() {
    let cfg = configs().join("matching.toml");
    let out = run(&["run", "--config", cfg.to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("seed,N,K,"));
    let meta = lines.last().unwrap();
    assert!(meta.starts_with("# config_sha256="), "{meta}");
    assert!(meta.contains("seeds=1;2;3"));
    assert_eq!(lines.len(), 1 + 20 + 1);
}

#[test]
fn seed_flag_shifts_the_seed_range() {
    let cfg = configs().join("matching.toml");
    let out = run(&["run", "--config", cfg.to_str().unwrap(), "--seed", "40"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("40,"));
    assert!(text.lines().last().unwrap().contains("seeds=40;41;"));
}

#[test]
fn power_two_users_emits_trace_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "p.toml",
        "experiment = \"power\"\nseeds = [1]\nscenario.num_users = 2\nscenario.num_subcarriers = 2\n",
    );
    let out = run(&["run", "--config", &cfg]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "seed,iteration,max_power_delta,payoff_1,payoff_2,converged"
    );
}

#[test]
fn coalition_without_broadband_is_one_row_without_switches() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "experiment = \"coalition\"\nscenario.num_users = 3\nscenario.num_subcarriers = 4\ncoalition.sensors = 3\ncoalition.broadband = 0\n",
    );
    let out = run(&["run", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 2);
    let header: Vec<&str> = rows[0].split(',').collect();
    let col = header.iter().position(|&h| h == "switches_executed").unwrap();
    assert_eq!(rows[1].split(',').nth(col), Some("0"));
}

#[test]
fn output_path_from_config_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("out.csv");
    let cfg = write_config(
        dir.path(),
        "c.toml",
        &format!(
            "experiment = \"contention\"\noutput_path = {:?}\nscenario.num_users = 2\ncontention.mc_rounds = 100\n",
            target.to_str().unwrap()
        ),
    );
    let out = run(&["run", "--config", &cfg]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(target).unwrap().starts_with("seed,user,window"));
}

#[test]
fn validate_accepts_every_shipped_config() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let out = run(&["validate", "--config", path.to_str().unwrap()]);
        assert!(
            out.status.success(),
            "{}: {}",
            path.display(),
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let garbage = write_config(dir.path(), "bad.toml", "experiment = [unclosed\n");
    let out = run(&["run", "--config", &garbage]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot parse config"));

    let unknown = write_config(
        dir.path(),
        "unknown.toml",
        "experiment = \"fig3\"\nscenario.num_antennas = 4\n",
    );
    assert_eq!(run(&["validate", "--config", &unknown]).status.code(), Some(1));

    let invalid = write_config(
        dir.path(),
        "invalid.toml",
        "experiment = \"power\"\nscenario.path_loss_exponent = 1.5\n",
    );
    let out = run(&["validate", "--config", &invalid]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("path_loss_exponent"));

    let ok = configs().join("power.toml");
    let missing_dir = dir.path().join("no/such/dir/out.csv");
    let out = run(&[
        "run",
        "--config",
        ok.to_str().unwrap(),
        "--out",
        missing_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));

    let absent = dir.path().join("absent.toml");
    assert_ne!(
        run(&["run", "--config", absent.to_str().unwrap()]).status.code(),
        Some(0)
    );
}
