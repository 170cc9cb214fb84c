use std::process::Command;

fn medlens() -> Command {
    Command::new(env!("CARGO_BIN_EXE_medlens"))
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("out");
    let o = out.to_str().unwrap();

    let st = medlens().args(["generate", "-o", o, "-s", "no.such.key=1"]).status().unwrap();
    assert_eq!(st.code(), Some(2));

    let st = medlens().args(["fuse", "-o", o]).status().unwrap();
    assert_eq!(st.code(), Some(3));

    let conf = d.path().join("run.conf");
    std::fs::write(&conf, "gen.n_providers = 60\ngen.n_beneficiaries = 1500\nexplain.top = 2\n").unwrap();
    let c = conf.to_str().unwrap();
    for stage in ["generate", "ingest", "detect-regression", "detect-subspace", "detect-peer", "fuse"] {
        let st = medlens().args([stage, "-c", c, "-o", o]).status().unwrap();
        assert_eq!(st.code(), Some(0), "{stage}");
    }
    let st = medlens().args(["run", "-c", c, "-o", o, "--from", "explain"]).status().unwrap();
    assert_eq!(st.code(), Some(0));
    assert!(out.join("report/report.md").exists());
    assert!(out.join("manifest.json").exists());

    let res = medlens().args(["explain", "-c", c, "-o", o, "--provider", "P0001"]).output().unwrap();
    assert_eq!(res.status.code(), Some(0));
    let js: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(js["provider_id"], "P0001");
    assert_eq!(js["peer"].as_array().unwrap().len(), 2);

    let res = medlens().args(["explain", "-c", c, "-o", o, "--provider", "NOPE"]).output().unwrap();
    assert_eq!(res.status.code(), Some(4));

    std::fs::write(out.join("ingest/drg_costs.csv"), "drg,avg_base_payment\n").unwrap();
    let res = medlens().args(["detect-peer", "-c", c, "-o", o]).output().unwrap();
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).contains("digest mismatch"));
}
