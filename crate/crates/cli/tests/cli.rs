use std::io::Write;
use std::process::{Command, Output, Stdio};

use num_complex::Complex64 as C;
use painleve::connection::Point;
use painleve::fixtures::random_generic_dataset;
use painleve::monodromy::{braid_around_0, MonodromyTraces};
use painleve::series::{expansion_at_point, SeriesConfig};
use serde_json::{json, Value};

fn pvi(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_pvi"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn ok_json(args: &[&str], stdin: &Value) -> Value {
    let out = pvi(args, &stdin.to_string());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn complex(v: &Value) -> C {
    C::new(v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

fn dataset() -> Value {
    let d = random_generic_dataset(1).unwrap();
    json!({ "theta": d.theta, "traces": d.traces })
}

fn identity_input() -> Value {
    let two = [2.0, 0.0];
    json!({
        "theta": { "theta0": [0.0, 0.0], "thetax": [0.0, 0.0], "theta1": [0.0, 0.0], "thetainf": [2.0, 0.0] },
        "traces": { "p0": two, "px": two, "p1": two, "pinf": two, "p0x": two, "p01": two, "px1": two }
    })
}

#[test]
fn exit_codes_follow_the_error_class() {
    assert_eq!(pvi(&["connect"], "{").status.code(), Some(2));
    assert_eq!(pvi(&["connect"], r#"{"theta": 1}"#).status.code(), Some(2));

    let mut bad_theta = identity_input();
    bad_theta["theta"]["thetainf"] = json!([0.0, 0.0]);
    assert_eq!(pvi(&["connect"], &bad_theta.to_string()).status.code(), Some(2));

    let out = pvi(&["connect"], &identity_input().to_string());
    assert_eq!(out.status.code(), Some(3));
    let msg = String::from_utf8_lossy(&out.stderr).to_lowercase();
    assert!(msg.contains("log"), "{msg}");

    let mut off = identity_input();
    off["traces"]["p0x"] = json!([3.0, 0.0]);
    assert_eq!(pvi(&["connect"], &off.to_string()).status.code(), Some(4));
    let braid = json!({ "traces": off["traces"], "generator": "g0" });
    assert_eq!(pvi(&["braid"], &braid.to_string()).status.code(), Some(4));
}

#[test]
fn braid_matches_the_library() {
    let d = random_generic_dataset(2).unwrap();
    let out = ok_json(&["braid"], &json!({ "traces": d.traces, "generator": "g0" }));
    let got: MonodromyTraces = serde_json::from_value(out["traces"].clone()).unwrap();
    assert!(got.max_abs_diff(&braid_around_0(&d.traces)) == 0.0);
    assert!(complex(&out["cubic_residual"]).norm() < 1e-10);
}

#[test]
fn schemas_are_published_for_every_command() {
    for cmd in ["connect", "expand", "eval", "braid", "picard", "verify", "job"] {
        let out = pvi(&[cmd, "--schema"], "");
        assert!(out.status.success(), "{cmd}");
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(v["version"], 1);
        assert!(v["schema"]["type"] == "object", "{cmd}");
    }
}

#[test]
fn output_is_deterministic_and_reparses() {
    let input = dataset().to_string();
    let a = pvi(&["connect"], &input);
    let b = pvi(&["connect"], &input);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    let again = serde_json::to_string(&v).unwrap();
    assert_eq!(serde_json::from_str::<Value>(&again).unwrap(), v);
}

#[test]
fn files_can_replace_stdin_and_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.json");
    let output = dir.path().join("out.json");
    std::fs::write(&input, dataset().to_string()).unwrap();
    let out = pvi(&["connect", "--in", input.to_str().unwrap(), "--out", output.to_str().unwrap()], "");
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let from_file: Value = serde_json::from_str(&std::fs::read_to_string(&output).unwrap()).unwrap();
    assert_eq!(from_file, ok_json(&["connect"], &dataset()));
}

#[test]
fn connect_expand_eval_pipeline() {
    let data = dataset();
    let connected = ok_json(&["connect"], &data);
    let at0 = &connected["at0"];
    assert_eq!(at0["sigma"]["regime"], "generic");

    let spec = json!({
        "theta": data["theta"],
        "point": "zero",
        "order": 8,
        "sigma": at0["sigma"]["sigma"],
        "r": at0["r"],
    });
    let expansion = ok_json(&["expand"], &spec);
    let evaluated = ok_json(&["eval"], &json!({ "expansion": expansion, "x": [[1e-3, 0.0]] }));
    let row = &evaluated["values"][0];

    let d = random_generic_dataset(1).unwrap();
    let lib = expansion_at_point(&d.theta, &d.traces, Point::Zero, 8).unwrap();
    let want = lib.evaluate_with(C::new(1e-3, 0.0), &SeriesConfig::default()).unwrap();
    let got = complex(&row["y"]);
    assert!((got - want).norm() < 1e-13 * want.norm(), "{got} vs {want}");
    assert!(row["pvi_residual"].as_f64().unwrap() < 1e-8);

    // The expansion leaves through JSON and comes back unchanged.
    let from_traces = ok_json(&["expand"], &json!({ "theta": data["theta"], "point": "zero", "traces": data["traces"] }));
    assert_eq!(from_traces["coeffs"].as_array().unwrap().len(), expansion["coeffs"].as_array().unwrap().len());
}

#[test]
fn picard_values_and_leading_form() {
    let out = ok_json(&["picard"], &json!({ "nu1": [0.7, 0.0], "nu2": [0.4, 0.0], "x": [[1e-4, 0.0], [0.3, 0.0]], "calV": 0.4 }));
    assert_eq!(out["leading_form"]["case"], "power");
    let row = &out["values"][0];
    let (y, lead) = (complex(&row["y"]), complex(&row["leading"]));
    assert!((y / lead - 1.0).norm() < 0.05);
    assert_eq!(pvi(&["picard"], r#"{"nu1": [0.7, 0.0], "nu2": [0.4, 0.0], "x": [[-0.5, 0.0]]}"#).status.code(), Some(3));
}

#[test]
fn job_documents_dispatch_to_commands() {
    let job = json!({ "command": "braid", "payload": { "traces": dataset()["traces"], "generator": "sigma01" }, "seed": 3 });
    let out = ok_json(&["job"], &job);
    assert!(out["traces"].is_object());
    assert_eq!(pvi(&["job"], r#"{"command": "nope"}"#).status.code(), Some(2));
}

#[test]
fn verify_batch_reports_every_run() {
    let out = ok_json(&["verify", "--batch", "2", "--seed", "0"], &json!({}));
    let s = &out["summary"];
    assert_eq!(s["runs"], 2);
    let total = s["agree"].as_u64().unwrap() + s["diagnostic"].as_u64().unwrap() + s["mismatch"].as_u64().unwrap();
    assert_eq!(total, 2);
    assert_eq!(s["mismatch"], 0);
}
