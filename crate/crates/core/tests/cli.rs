//! End-to-end tests of the `synchrolens` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_synchrolens"))
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).env("SYNCHROLENS_OUT", out).output().expect("spawn")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn first_line(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

fn schema() -> jsonschema::JSONSchema {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/docs/report.schema.json")).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    jsonschema::JSONSchema::options()
        .with_draft(jsonschema::Draft::Draft7)
        .compile(&schema)
        .expect("schema compiles")
}

fn assert_valid(schema: &jsonschema::JSONSchema, report: &Value, what: &str) {
    if let Err(errors) = schema.validate(report) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("{what}: report violates schema: {msgs:#?}");
    }
}

#[test]
fn list_names_every_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["list"], dir.path());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for name in synchrolens::scenarios::builtin_names() {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing from\n{text}");
    }
    let o = run(&["list", "--json"], dir.path());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 6);
    assert!(v[0]["description"].is_string());
}

#[test]
fn smib_run_writes_golden_headers() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["run", "--builtin", "smib"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        first_line(&dir.path().join("smib_traj.csv")),
        "time,v_d:gen,v_q:gen,v_d:hv,v_q:hv,v_d:inf,v_q:inf,\
         i_d:g1,i_q:g1,x:g1:delta,x:g1:omega_r,i_d:grid,i_q:grid"
    );
    assert_eq!(
        first_line(&dir.path().join("smib_chi.csv")),
        "time,rho_analytic:g1,omega_analytic:g1,rho_numeric:g1,omega_numeric:g1,masked:g1,\
         rho_analytic:grid,omega_analytic:grid,rho_numeric:grid,omega_numeric:grid,masked:grid"
    );
    let traj = std::fs::read_to_string(dir.path().join("smib_traj.csv")).unwrap();
    // header plus one row per step of the 20 s run
    assert_eq!(traj.lines().count(), 1 + 20_001);
    let second = traj.lines().nth(1).unwrap();
    assert!(second.starts_with("0e0,"), "{second}");
    assert_eq!(second.split(',').count(), 13);

    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("smib_report.json")).unwrap()).unwrap();
    assert_eq!(report["scenario"], "smib");
    assert_eq!(report["config"]["source"], "builtin:smib");
    assert_eq!(report["verdicts"][0]["device"], "g1");
    assert_eq!(report["verdicts"][0]["als"]["pass"], true);
    assert_eq!(report["unstable"], false);
}

#[test]
fn identical_invocations_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["run", "--builtin", "motor_condenser", "--t-end", "4"];
    let files = [
        "motor_condenser_traj.csv",
        "motor_condenser_chi.csv",
        "motor_condenser_report.json",
    ];
    assert_eq!(code(&run(&args, dir.path())), 0);
    let first: Vec<Vec<u8>> = files
        .iter()
        .map(|f| std::fs::read(dir.path().join(f)).unwrap())
        .collect();
    assert_eq!(code(&run(&args, dir.path())), 0);
    for (f, bytes) in files.iter().zip(&first) {
        assert_eq!(
            &std::fs::read(dir.path().join(f)).unwrap(),
            bytes,
            "{f} changed between runs"
        );
    }
    // no temporary files left behind
    let names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names.len(), 3, "{names:?}");
}

#[test]
fn every_builtin_report_matches_schema() {
    let schema = schema();
    let dir = tempfile::tempdir().unwrap();
    for name in synchrolens::scenarios::builtin_names() {
        let mut args = vec!["run", "--builtin", name, "--json"];
        // keep the output files of the stiff converter case small
        if name == "gfl_seriescomp" {
            args.extend(["--dt", "5e-5", "--t-end", "4.5"]);
        }
        let o = run(&args, dir.path());
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let printed: Value = serde_json::from_slice(&o.stdout).unwrap();
        let written: Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(format!("{name}_report.json"))).unwrap())
                .unwrap();
        assert_eq!(printed, written, "{name}: printed and written reports differ");
        assert_valid(&schema, &written, name);
    }
}

#[test]
fn sweep_writes_table_and_reports_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "sweep",
            "--builtin",
            "smib",
            "--from",
            "1.11",
            "--to",
            "1.14",
            "--step",
            "0.01",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(dir.path().join("smib_sweep.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "t_cl,max_delta_swing,als_pass");
    assert_eq!(lines.len(), 5);
    let verdicts: Vec<&str> = lines[1..].iter().map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(verdicts, ["true", "true", "false", "false"]);
}

#[test]
fn usage_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["run", "--builtin", "smib", "--no-such-flag"],
        vec!["run"],
        vec!["run", "--builtin", "nonexistent"],
        vec!["run", "--builtin", "smib", "--dt", "-1"],
        vec![
            "sweep",
            "--builtin",
            "smib",
            "--from",
            "1.2",
            "--to",
            "1.1",
            "--step",
            "0.01",
        ],
        vec![
            "sweep",
            "--builtin",
            "circuit_dc",
            "--from",
            "1.1",
            "--to",
            "1.2",
            "--step",
            "0.01",
        ],
        vec!["frobnicate"],
    ] {
        let o = run(&args, dir.path());
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty(), "{args:?} printed no diagnostic");
    }

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[system]\nname = \"x\"\n[bus.a]\nbogus = 1\n").unwrap();
    let o = run(&["run", "--file", bad.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    let msg = String::from_utf8_lossy(&o.stderr);
    assert!(msg.contains("line"), "parse error without location: {msg}");
}

#[test]
fn io_errors_exit_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["run", "--file", "/definitely/not/here.toml"], dir.path());
    assert_eq!(code(&o), 4);

    // an output "directory" that is a regular file
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, "").unwrap();
    let o = run(
        &[
            "run",
            "--builtin",
            "smib",
            "--t-end",
            "4",
            "--out",
            blocker.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn solver_failure_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = synchrolens::scenarios::builtin_source("smib")
        .unwrap()
        .replace("t_end = 20.0", "t_end = 3.0\nnewton_max_iter = 1\nnewton_tol = 1e-14");
    let file = dir.path().join("tight.toml");
    std::fs::write(&file, text).unwrap();
    let o = run(&["run", "--file", file.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}
