use std::path::Path;

use medlens::pipeline::{explain, run_pipeline, PeerStatus, RunConfig, Stage, StageStatus};
use medlens::Error;

fn config(dir: &Path) -> RunConfig {
    RunConfig::new(dir.join("out"))
}

#[test]
fn full_run_is_deterministic_and_explainable() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ca = config(a.path());
    let ma = run_pipeline(&ca, &Stage::ALL).unwrap();
    assert!(ma.complete);
    assert!(ca.out_dir.join("fusion/rank_final.csv").exists());
    assert!(ca.out_dir.join("report/report.md").exists());
    assert!(!ca.out_dir.join(medlens::pipeline::LOCK_FILE).exists());

    let mb = run_pipeline(&config(b.path()), &Stage::ALL).unwrap();
    assert_eq!(ma.artifact_digests(), mb.artifact_digests());

    // re-running one stage reuses verified upstream artifacts
    let again = run_pipeline(&ca, &[Stage::Fuse]).unwrap();
    assert_eq!(again.artifact_digests(), ma.artifact_digests());

    let top = std::fs::read_to_string(ca.out_dir.join("fusion/rank_final.csv")).unwrap();
    let top = top.lines().nth(1).unwrap().split(',').nth(1).unwrap().to_string();
    let r = explain(&top, &ca).unwrap();
    assert_eq!(r.final_rank, Some(1));
    assert!(r.regression.coefficient_usd.is_some());
    assert!(!r.subspace.shap.terms.is_empty());
    assert_eq!(r.peer.len(), 2);
    let persisted: medlens::pipeline::ExplanationReport =
        medlens::io::read_json(&ca.out_dir.join(format!("explain/explain_{top}.json"))).unwrap();
    assert_eq!(persisted, r);

    assert!(matches!(explain("NOPE", &ca), Err(Error::UnknownProvider(_))));

    // an unranked peer provider is reported as such
    let peer_csv = std::fs::read_to_string(ca.out_dir.join("peer/rank_peer_chronic.csv")).unwrap()
        + &std::fs::read_to_string(ca.out_dir.join("peer/rank_peer_mdc.csv")).unwrap();
    if let Some(line) = peer_csv.lines().find(|l| l.ends_with("insufficient_peers")) {
        let pid = line.split(',').nth(1).unwrap();
        let r = explain(pid, &ca).unwrap();
        assert!(r.peer.iter().any(|p| p.status == PeerStatus::InsufficientPeers && p.explanation.is_none()));
    }
    let tight = {
        let mut c = ca.clone();
        c.peer.min_peers = 10_000;
        c
    };
    let r = explain(&top, &tight).unwrap();
    assert!(r.peer.iter().all(|p| p.status == PeerStatus::InsufficientPeers));
    let js = serde_json::to_string(&r).unwrap();
    assert!(js.contains("\"insufficient peers\""));

    // tampering with an upstream artifact is detected
    let coef = ca.out_dir.join("regression/rank_regression.csv");
    let mut text = std::fs::read_to_string(&coef).unwrap();
    text.push('\n');
    std::fs::write(&coef, text).unwrap();
    let e = run_pipeline(&ca, &[Stage::Fuse]).unwrap_err();
    assert!(matches!(e, Error::StaleDigest { .. }), "{e}");
    assert_eq!(e.exit_code(), 3);
    let m = medlens::pipeline::RunManifest::load(&ca.out_dir).unwrap().unwrap();
    assert!(!m.complete);
    assert_eq!(m.stages[&Stage::Fuse].status, StageStatus::Failed);
}

#[test]
fn fuse_without_detectors_names_missing_files() {
    let d = tempfile::tempdir().unwrap();
    let e = run_pipeline(&config(d.path()), &[Stage::Fuse]).unwrap_err();
    let msg = e.to_string();
    assert!(matches!(e, Error::Precondition(_)));
    assert!(msg.contains("rank_regression.csv") && msg.contains("rank_peer_mdc.csv"), "{msg}");
}

#[test]
fn concurrent_run_is_refused() {
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path());
    let _held = medlens::pipeline::RunLock::acquire(&cfg.out_dir).unwrap();
    assert!(matches!(run_pipeline(&cfg, &[Stage::Generate]), Err(Error::Precondition(_))));
}
