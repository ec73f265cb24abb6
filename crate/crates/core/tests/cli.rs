use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_secure-repair"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn shares(v: &Value) -> Vec<Vec<Vec<u64>>> {
    v["nodes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|n| serde_json::from_value(n["shares"].clone()).unwrap())
        .collect()
}

#[test]
fn encode_fig1_example() {
    let out = run(&[
        "encode",
        "--scheme",
        &fixture("fig1.json"),
        "--message",
        "2",
        "--keys",
        "1",
        "--seed",
        "0",
    ]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(
        shares(&v),
        vec![vec![vec![0]], vec![vec![4]], vec![vec![3]]]
    );
    assert!(v.get("keys").is_none());
    assert_eq!(v["seed"], 0);
}

#[test]
fn encode_zero_message_and_keys() {
    let out = run(&[
        "encode",
        "--scheme",
        &fixture("ramp4.json"),
        "--message",
        "0,0",
        "--keys",
        "0",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&out), 0);
    assert!(shares(&stdout_json(&out))
        .iter()
        .flatten()
        .flatten()
        .all(|&x| x == 0));
}

#[test]
fn encode_reveals_keys_only_on_request() {
    let args = [
        "encode",
        "--scheme",
        &fixture("ramp4.json"),
        "--seed",
        "5",
        "--instances",
        "2",
    ];
    let plain = stdout_json(&run(&args));
    assert!(plain.get("keys").is_none());
    let mut with = args.to_vec();
    with.push("--reveal-keys");
    let revealed = stdout_json(&run(&with));
    assert_eq!(revealed["keys"].as_array().unwrap().len(), 2);
    assert_eq!(shares(&plain), shares(&revealed));
}

#[test]
fn absent_seed_is_echoed_and_replays() {
    let first = stdout_json(&run(&["encode", "--scheme", &fixture("ramp4.json")]));
    let seed = first["seed"].as_u64().unwrap().to_string();
    let again = stdout_json(&run(&[
        "encode",
        "--scheme",
        &fixture("ramp4.json"),
        "--seed",
        &seed,
    ]));
    assert_eq!(first, again);
}

#[test]
fn input_and_parameter_errors() {
    let missing = run(&["encode", "--scheme", "/nonexistent/scheme.json"]);
    assert_eq!(code(&missing), 2);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("cannot read"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(
        code(&run(&["encode", "--scheme", bad.to_str().unwrap()])),
        2
    );

    let unknown = dir.path().join("unknown.json");
    std::fs::write(
        &unknown,
        r#"{"construction":"shamir","q":5,"n":3,"z":1,"extra":1}"#,
    )
    .unwrap();
    assert_eq!(
        code(&run(&["encode", "--scheme", unknown.to_str().unwrap()])),
        2
    );

    let small = dir.path().join("small.json");
    std::fs::write(&small, r#"{"construction":"shamir","q":3,"n":3,"z":1}"#).unwrap();
    assert_eq!(
        code(&run(&["encode", "--scheme", small.to_str().unwrap()])),
        3
    );

    assert_eq!(
        code(&run(&[
            "encode",
            "--scheme",
            &fixture("fig1.json"),
            "--message",
            "1,2"
        ])),
        3
    );
    assert_eq!(
        code(&run(&[
            "encode",
            "--scheme",
            &fixture("fig1.json"),
            "--message",
            "x"
        ])),
        2
    );
    assert_eq!(code(&run(&["frobnicate"])), 2);
}

#[test]
fn repair_fig1_with_seed() {
    let out = run(&[
        "repair",
        "--scheme",
        &fixture("fig1.json"),
        "--protocol",
        "c2",
        "--failed",
        "1",
        "--seed",
        "7",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    let rep = &v["repairs"][0];
    assert_eq!(rep["bandwidth"]["total_symbols"], 4);
    assert_eq!(rep["receivers"], serde_json::json!([2, 3]));

    // the dealer draws from the same seed, so encoding alone gives the truth
    let enc = stdout_json(&run(&[
        "encode",
        "--scheme",
        &fixture("fig1.json"),
        "--seed",
        "7",
    ]));
    assert_eq!(rep["restored"], serde_json::json!(shares(&enc)[0]));
    let msgs = rep["transcript"]["messages"].as_array().unwrap();
    assert_eq!(msgs.len(), 4);
    assert!(msgs.iter().all(|m| m["from"] != m["to"]));
}

#[test]
fn repair_parameter_errors() {
    let fig1 = fixture("fig1.json");
    assert_eq!(code(&run(&["repair", "--scheme", &fig1, "--seed", "1"])), 3);
    assert_eq!(
        code(&run(&[
            "repair",
            "--scheme",
            &fixture("vector_fig1x2.json"),
            "--protocol",
            "c4",
            "--failed",
            "1"
        ])),
        3
    );
    assert_eq!(
        code(&run(&["repair", "--scheme", &fig1, "--failed", "9"])),
        3
    );
    assert_eq!(
        code(&run(&[
            "repair",
            "--scheme",
            &fig1,
            "--failed",
            "1",
            "--protocol",
            "c7"
        ])),
        2
    );
    // a sabotaged plan never reaches the network
    assert_eq!(
        code(&run(&[
            "repair",
            "--scheme",
            &fixture("fig1_sabotaged.json"),
            "--failed",
            "1"
        ])),
        4
    );
}

#[test]
fn repair_unrepairable_pattern() {
    // two failures leave three of five nodes; decoding needs four
    let out = run(&[
        "repair",
        "--scheme",
        &fixture("ramp5.json"),
        "--failed",
        "1,2",
        "--seed",
        "3",
    ]);
    assert_eq!(code(&out), 4);
    let out = run(&[
        "repair",
        "--scheme",
        &fixture("fig1.json"),
        "--failed",
        "1",
        "--helpers",
        "2",
    ]);
    assert_eq!(code(&out), 4);
}

#[test]
fn repair_from_shares_file() {
    let dir = tempfile::tempdir().unwrap();
    let shares_path = dir.path().join("shares.json");
    let enc = run(&[
        "encode",
        "--scheme",
        &fixture("ramp4.json"),
        "--seed",
        "11",
        "--instances",
        "3",
        "--out",
        shares_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&enc), 0);
    let enc: Value = serde_json::from_str(&std::fs::read_to_string(&shares_path).unwrap()).unwrap();
    for protocol in ["c2", "c4", "c5"] {
        let out = run(&[
            "repair",
            "--scheme",
            &fixture("ramp4.json"),
            "--network",
            shares_path.to_str().unwrap(),
            "--protocol",
            protocol,
            "--failed",
            "2",
            "--seed",
            "4",
        ]);
        assert_eq!(
            code(&out),
            0,
            "{protocol}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let v = stdout_json(&out);
        let restored: Vec<Vec<u64>> =
            serde_json::from_value(v["repairs"][0]["restored"].clone()).unwrap();
        assert_eq!(restored, shares(&enc)[1], "{protocol}");
    }

    // a corrupted share is refused
    let mut bad = enc.clone();
    bad["nodes"][0]["shares"][0][0] =
        serde_json::json!((enc["nodes"][0]["shares"][0][0].as_u64().unwrap() + 1) % 5);
    let bad_path = dir.path().join("bad_shares.json");
    std::fs::write(&bad_path, bad.to_string()).unwrap();
    let out = run(&[
        "repair",
        "--scheme",
        &fixture("ramp4.json"),
        "--network",
        bad_path.to_str().unwrap(),
        "--failed",
        "2",
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn repair_two_failures_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let scheme = dir.path().join("ramp5_r2.json");
    std::fs::write(
        &scheme,
        r#"{"construction":"ramp","q":7,"n":5,"r":2,"z":1}"#,
    )
    .unwrap();
    let scheme = scheme.to_str().unwrap();
    let out = run(&[
        "repair",
        "--scheme",
        scheme,
        "--failed",
        "4,2",
        "--seed",
        "9",
        "--instances",
        "2",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    let failed: Vec<u64> = v["repairs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["failed"].as_u64().unwrap())
        .collect();
    assert_eq!(failed, vec![2, 4]);
    let enc = stdout_json(&run(&[
        "encode",
        "--scheme",
        scheme,
        "--seed",
        "9",
        "--instances",
        "2",
    ]));
    for (i, e) in [2usize, 4].iter().enumerate() {
        let restored: Vec<Vec<u64>> =
            serde_json::from_value(v["repairs"][i]["restored"].clone()).unwrap();
        assert_eq!(restored, shares(&enc)[e - 1]);
    }
    assert_eq!(
        code(&run(&[
            "repair", "--scheme", scheme, "--failed", "1,2,3", "--seed", "9"
        ])),
        4
    );
}

#[test]
fn repair_is_byte_identical_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    for (scheme, protocol) in [
        ("fig1.json", "c2"),
        ("ramp4.json", "c4"),
        ("vector_fig1x2.json", "c5"),
    ] {
        let paths: Vec<PathBuf> = (0..2)
            .map(|i| dir.path().join(format!("{protocol}-{i}.json")))
            .collect();
        for p in &paths {
            let out = run(&[
                "repair",
                "--scheme",
                &fixture(scheme),
                "--protocol",
                protocol,
                "--failed",
                "1",
                "--seed",
                "42",
                "--out",
                p.to_str().unwrap(),
            ]);
            assert_eq!(code(&out), 0);
        }
        assert_eq!(
            std::fs::read(&paths[0]).unwrap(),
            std::fs::read(&paths[1]).unwrap()
        );
    }
}

#[test]
fn verify_fig1_passes_all_cells() {
    let out = run(&[
        "verify",
        "--scheme",
        &fixture("fig1.json"),
        "--protocol",
        "c2",
    ]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    let cells = v["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 9);
    for c in cells {
        assert_eq!(c["independent"], true);
        assert_eq!(c["repairable"], true);
        assert_eq!(c["outcomes"], 625);
    }
    assert_eq!(v["all_pass"], true);
}

#[test]
fn verify_sabotaged_plan_fails_and_names_the_cell() {
    let out = run(&["verify", "--scheme", &fixture("fig1_sabotaged.json")]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("FAIL c2 e=1 A={2}"), "{err}");
    let v = stdout_json(&out);
    assert_eq!(v["all_pass"], false);
    let bad: Vec<&Value> = v["cells"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["repairable"] == false)
        .collect();
    assert_eq!(bad.len(), 3);
    assert!(bad.iter().all(|c| c["failed"] == 1));
}

#[test]
fn verify_budget_guard() {
    let out = run(&["verify", "--scheme", &fixture("fig1_q101.json")]);
    assert_eq!(code(&out), 5);
    assert!(String::from_utf8_lossy(&out.stderr).contains("104060401"));
    let out = run(&[
        "verify",
        "--scheme",
        &fixture("fig1.json"),
        "--budget",
        "100",
    ]);
    assert_eq!(code(&out), 5);
    assert!(String::from_utf8_lossy(&out.stderr).contains("625"));
}

#[test]
fn verify_basis_mode_on_ramp4() {
    let out = run(&[
        "verify",
        "--scheme",
        &fixture("ramp4.json"),
        "--protocol",
        "c4",
        "--basis",
        "--failed",
        "1",
    ]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["message_space"], "basis");
    assert_eq!(v["cells"].as_array().unwrap().len(), 4);
    // seven messages times five to the six keys and coins
    assert_eq!(v["cells"][0]["outcomes"], 7 * 15625);
}

#[test]
fn bounds_fig1_row() {
    let out = run(&[
        "bounds",
        "--scheme",
        &fixture("fig1.json"),
        "--failed",
        "1",
        "--seed",
        "2",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        "construction,n,k,r,z,t,W,measured,lower_num,lower_den,upper_num,upper_den,ratio\n\
         c2,3,1,1,1,1,2,4,2,1,6,1,2\n"
    );
}

#[test]
fn bounds_ramp5_c4_sweep() {
    let out = run(&[
        "bounds",
        "--scheme",
        &fixture("ramp5.json"),
        "--protocol",
        "c4",
        "--helpers",
        "2,3,4,5",
        "--failed",
        "1",
        "--seed",
        "0",
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[..8], ["c4", "5", "3", "1", "1", "1", "4", "20"]);
    // 20 symbols for 4 instances: 5 per instance, below 25/4
    let measured: u64 = row[7].parse().unwrap();
    assert!(measured * 4 <= 25 * 4);
}

#[test]
fn bounds_empty_run_list_and_stored_runs() {
    let out = run(&["bounds", "--scheme", &fixture("ramp5.json"), "--failed", ""]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        "construction,n,k,r,z,t,W,measured,lower_num,lower_den,upper_num,upper_den,ratio\n"
    );

    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("rep.json");
    let out = run(&[
        "repair",
        "--scheme",
        &fixture("fig1.json"),
        "--failed",
        "1",
        "--seed",
        "3",
        "--out",
        rep.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let out = run(&[
        "bounds",
        "--scheme",
        &fixture("fig1.json"),
        "--runs",
        rep.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).ends_with("c2,3,1,1,1,1,2,4,2,1,6,1,2\n"));
}
