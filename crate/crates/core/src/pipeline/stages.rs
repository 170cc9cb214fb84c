use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;

use super::explain::{ExplainContext, ExplanationReport};
use super::{LabelMode, Layout, RunConfig, Stage, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::eval::{self, LabelSet, Metrics, Provenance};
use crate::fusion::{self, FusionInputs};
use crate::io::{self, RejectReason};
use crate::model::{self, HistoryVisit, InpatientClaim};
use crate::peer::{self, Basis};
use crate::rank::{RankEntry, RankList, Source};
use crate::regression::{self, build_design, Feature};
use crate::subspace::{self, build_substitutability, IcdFeatureMatrix, DETECTORS};
use crate::synth;

#[derive(Serialize)]
struct Versioned<T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    body: T,
}

pub(super) fn write_versioned<T: Serialize>(path: &std::path::Path, body: T) -> Result<()> {
    io::write_json(
        path,
        &Versioned {
            schema_version: SCHEMA_VERSION,
            body,
        },
    )
}

fn mkdir(dir: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Executes one stage and returns the files it wrote.
pub(super) fn run_stage(stage: Stage, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let l = Layout::new(cfg);
    match stage {
        Stage::Generate => generate(cfg, &l),
        Stage::Ingest => ingest(cfg, &l),
        Stage::DetectRegression => detect_regression(cfg, &l),
        Stage::DetectSubspace => detect_subspace(cfg, &l),
        Stage::DetectPeer => detect_peer(cfg, &l),
        Stage::Fuse => fuse(cfg, &l),
        Stage::Explain => explain_top(cfg, &l),
        Stage::Evaluate => evaluate(cfg, &l),
        Stage::Characterize => characterize(cfg, &l),
        Stage::Report => report(cfg, &l),
    }
}

fn generate(cfg: &RunConfig, l: &Layout) -> Result<Vec<PathBuf>> {
    cfg.gen.validate()?;
    let corpus = synth::generate_corpus(&cfg.gen)?;
    mkdir(&l.data)?;
    corpus.write(&l.data)?;
    Ok(synth::Corpus::FILES.iter().map(|f| l.data(f)).collect())
}

#[derive(Serialize)]
struct IngestReport {
    target_year: i32,
    rows_read: usize,
    rows_rejected: BTreeMap<RejectReason, usize>,
    claims_dropped_by_adjustments: usize,
    target_claims: usize,
    history_inpatient_claims: usize,
    claims_dropped_small_providers: usize,
    min_beneficiaries: usize,
    providers: usize,
    patient_histories: usize,
    excluded_under_age: usize,
    missing_beneficiaries: usize,
}

fn ingest(cfg: &RunConfig, l: &Layout) -> Result<Vec<PathBuf>> {
    let year = cfg.target_year();
    let read = io::read_claims(&l.data("claims.csv"))?;
    let visits = io::read_visits(&l.data("visits.csv"))?;
    let benes = io::read_beneficiaries(&l.data("beneficiaries.csv"))?;
    let drg_mdc = io::read_drg_mdc(&l.data("drg_mdc.csv"))?;

    let rows_read = read.claims.len() + read.rejected.len();
    let mut rows_rejected = BTreeMap::new();
    for r in &read.rejected {
        *rows_rejected.entry(r.reason).or_insert(0) += 1;
    }
    let filtered = model::filter_claims(read.claims);
    let (target, prior): (Vec<InpatientClaim>, Vec<InpatientClaim>) =
        filtered.kept.into_iter().partition(|c| c.year == year);
    let n_target = target.len();
    let mut target = model::filter_small_providers(target, cfg.min_beneficiaries);
    for c in &mut target {
        model::compute_base_payment(c)?;
    }
    if target.is_empty() {
        return Err(Error::Precondition(format!(
            "no target-year ({year}) claims remain after filtering"
        )));
    }
    let mut history: Vec<HistoryVisit> = visits;
    history.extend(prior.iter().filter(|c| c.year < year).map(HistoryVisit::from_claim));

    let costs = model::compute_drg_costs(&target);
    let profiles = model::build_provider_profiles(&target, &drg_mdc, &benes)?;
    let hb = model::build_patient_histories(&target, &history, &benes, year)?;

    let dir = l.out.join("ingest");
    mkdir(&dir)?;
    io::write_claims(&l.claims_target(), &target)?;
    io::write_profiles(&l.profiles(), &profiles)?;
    io::write_histories(&l.histories(), &benes.conditions, &hb.histories)?;
    io::write_drg_costs(&l.drg_costs(), &costs)?;
    let rejected = dir.join("rejected_rows.csv");
    io::write_rows(
        &rejected,
        &["row", "reason", "field"],
        read.rejected.iter().map(|r| {
            vec![
                r.row.to_string(),
                serde_json::to_value(r.reason)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default(),
                r.field.clone(),
            ]
        }),
    )?;
    let report = dir.join("ingest_report.json");
    write_versioned(
        &report,
        IngestReport {
            target_year: year,
            rows_read,
            rows_rejected,
            claims_dropped_by_adjustments: filtered.dropped,
            target_claims: target.len(),
            history_inpatient_claims: prior.len(),
            claims_dropped_small_providers: n_target - target.len(),
            min_beneficiaries: cfg.min_beneficiaries,
            providers: profiles.profiles.len(),
            patient_histories: hb.histories.len(),
            excluded_under_age: hb.excluded_under_age,
            missing_beneficiaries: hb.missing_beneficiaries,
        },
    )?;
    Ok(vec![
        l.claims_target(),
        l.profiles(),
        l.histories(),
        l.conditions(),
        l.drg_costs(),
        rejected,
        report,
    ])
}

#[derive(Serialize)]
struct RegressionMeta<'a> {
    n_rows: usize,
    n_columns: usize,
    nnz: usize,
    n_providers: usize,
    ridge_lambda: f64,
    diagnostics: &'a regression::SolverDiagnostics,
    dropped_columns: Vec<String>,
}

fn detect_regression(cfg: &RunConfig, l: &Layout) -> Result<Vec<PathBuf>> {
    let (conditions, histories) = io::read_histories(&l.histories())?;
    let design = build_design(&histories, &conditions)?;
    let fit = regression::fit_fixed_effects(&design, cfg.regression)?;
    let rank = regression::rank_by_coefficient(&fit)?;
    mkdir(&l.out.join("regression"))?;
    regression::write_coefficients(&l.coefficients(), &fit)?;
    io::write_rank(&l.rank_regression(), &rank, "score_usd")?;
    let meta = l.stage("regression", "diagnostics.json");
    write_versioned(
        &meta,
        RegressionMeta {
            n_rows: design.n_rows(),
            n_columns: design.n_cols(),
            nnz: design.nnz(),
            n_providers: fit.provider_coefficients().len(),
            ridge_lambda: fit.ridge_lambda,
            diagnostics: &fit.diagnostics,
            dropped_columns: design.dropped.iter().map(Feature::to_string).collect(),
        },
    )?;
    Ok(vec![l.coefficients(), l.rank_regression(), meta])
}

/// Rebuilds the subspace feature matrix from ingest artifacts.
pub(super) fn feature_matrix(cfg: &RunConfig, l: &Layout) -> Result<IcdFeatureMatrix> {
    let profiles = io::read_profiles(&l.profiles())?;
    let hierarchy = io::read_icd_hierarchy(&l.data("icd_hierarchy.csv"))?;
    let j = build_substitutability(&hierarchy)?;
    IcdFeatureMatrix::build(&profiles, j, cfg.subspace.normalize)
}

#[derive(Serialize)]
struct DetectorMeta {
    detector: Source,
    seed: u64,
    hyperparameters: BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct SubspaceMeta {
    n_providers: usize,
    n_codes: usize,
    normalized: bool,
    unknown_codes: Vec<String>,
    params: subspace::SubspaceParams,
    detectors: Vec<DetectorMeta>,
}

fn detect_subspace(cfg: &RunConfig, l: &Layout) -> Result<Vec<PathBuf>> {
    let features = feature_matrix(cfg, l)?;
    let scores = subspace::run_all(&features, &cfg.subspace)?;
    let (fused, _, trace) = subspace::fuse_subspace_rankings(&scores)?;
    mkdir(&l.out.join("subspace"))?;
    let mut out = Vec::new();
    for s in &scores {
        let p = l.scores(s.detector);
        subspace::write_scores(&p, s)?;
        out.push(p);
    }
    io::write_rank(&l.rank_subspace(), &fused, "score")?;
    let trace_path = l.stage("subspace", "subspace_trace.json");
    io::write_json(&trace_path, &trace)?;
    let meta = l.stage("subspace", "detectors.json");
    write_versioned(
        &meta,
        SubspaceMeta {
            n_providers: features.provider_ids.len(),
            n_codes: features.codes.len(),
            normalized: features.normalized,
            unknown_codes: features.unknown_codes.clone(),
            params: cfg.subspace,
            detectors: scores
                .iter()
                .map(|s| DetectorMeta {
                    detector: s.detector,
                    seed: s.seed,
                    hyperparameters: s.hyperparameters.clone(),
                })
                .collect(),
        },
    )?;
    out.extend([l.rank_subspace(), trace_path, meta]);
    Ok(out)
}

fn detect_peer(cfg: &RunConfig, l: &Layout) -> Result<Vec<PathBuf>> {
    let profiles = io::read_profiles(&l.profiles())?;
    let costs = io::read_drg_costs(&l.drg_costs())?;
    mkdir(&l.out.join("peer"))?;
    let mut out = Vec::new();
    for basis in Basis::BOTH {
        let a = peer::run_peer(&profiles, &costs, basis, cfg.peer)?;
        let rank = l.rank_peer(basis);
        peer::write_peer_rank(&rank, &a.ranking)?;
        let hist = l.stage("peer", &format!("similarity_histogram_{}.csv", basis.as_str()));
        io::write_rows(
            &hist,
            &["lo", "hi", "count"],
            a.histogram
                .iter()
                .map(|(lo, hi, n)| vec![io::fmt_f64(*lo), io::fmt_f64(*hi), n.to_string()]),
        )?;
        let groups = l.stage("peer", &format!("peer_groups_{}.csv", basis.as_str()));
        io::write_rows(
            &groups,
            &["provider_id", "n_peers", "ranked", "peers"],
            a.groups.iter().map(|g| {
                vec![
                    g.provider_id.clone(),
                    g.peers.len().to_string(),
                    g.ranked.to_string(),
                    g.peers.iter().map(|(p, _)| p.as_str()).collect::<Vec<_>>().join(";"),
                ]
            }),
        )?;
        out.extend([rank, hist, groups]);
    }
    Ok(out)
}

/// Provider order of a `rank_final.csv`-style file; scores are not kept.
pub(super) fn read_order(path: &std::path::Path, source: Source) -> Result<RankList> {
    let (header, rows) = io::read_records(path)?;
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Input(format!("{}: missing column `{name}`", path.display())))
    };
    let (rc, pc) = (col("rank")?, col("provider_id")?);
    let mut v = rows
        .iter()
        .map(|r| {
            let rank: usize = r
                .get(rc)
                .unwrap_or_default()
                .parse()
                .map_err(|_| Error::Input(format!("{}: bad rank", path.display())))?;
            Ok((rank, r.get(pc).unwrap_or_default().to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    v.sort();
    RankList::new(
        source,
        v.into_iter()
            .map(|(_, provider_id)| RankEntry { provider_id, score: None })
            .collect(),
    )
}

/// Every detector ranking on disk: regression, five subspace detectors,
/// fused subspace, two peer bases.
pub(super) struct DetectorRanks {
    pub regression: RankList,
    pub components: Vec<RankList>,
    pub subspace: RankList,
    pub peer: Vec<(Basis, peer::PeerRanking)>,
}

impl DetectorRanks {
    pub fn load(l: &Layout) -> Result<Self> {
        Ok(Self {
            regression: io::read_rank(&l.rank_regression(), Source::Regression)?,
            components: DETECTORS
                .iter()
                .map(|&d| subspace::read_scores(&l.scores(d), d)?.ranking())
                .collect::<Result<_>>()?,
            subspace: read_order(&l.rank_subspace(), Source::Subspace)?,
            peer: Basis::BOTH
                .iter()
                .map(|&b| Ok((b, peer::read_peer_rank(&l.rank_peer(b), b)?)))
                .collect::<Result<_>>()?,
        })
    }

    pub fn peer_list(&self, basis: Basis) -> &RankList {
        &self.peer.iter().find(|(b, _)| *b == basis).expect("both bases loaded").1.list
    }

    pub fn all(&self) -> Vec<&RankList> {
        let mut v = vec![&self.regression];
        v.extend(&self.components);
        v.push(&self.subspace);
        v.push(self.peer_list(Basis::Mdc));
        v.push(self.peer_list(Basis::Chronic));
        v
    }
}

fn fuse(cfg: &RunConfig, l: &Layout) -> Result<Vec<PathBuf>> {
    let d = DetectorRanks::load(l)?;
    let inputs = FusionInputs {
        regression: d.regression.clone(),
        subspace: d.subspace.clone(),
        peer_mdc: d.peer_list(Basis::Mdc).clone(),
        peer_chronic: d.peer_list(Basis::Chronic).clone(),
        subspace_components: d.components.clone(),
    };
    let (fused, trace) = fusion::fuse_all(&inputs, cfg.fusion)?;
    let replayed = trace.replay(&inputs.voting_lists()?)?;
    if replayed.ids().ne(fused.ids()) {
        return Err(Error::Consistency("fusion trace replay disagrees with the fused ranking".into()));
    }
    mkdir(&l.out.join("fusion"))?;
    fusion::write_final(&l.rank_final(), &fused, &d.all())?;
    let trace_path = l.stage("fusion", "fusion_trace.json");
    io::write_json(&trace_path, &trace)?;
    Ok(vec![l.rank_final(), trace_path])
}

pub(super) fn report_paths(l: &Layout, provider: &str) -> [PathBuf; 3] {
    [
        l.stage("explain", &format!("explain_{provider}.json")),
        l.stage("explain", &format!("explain_subspace_{provider}.json")),
        l.stage("explain", &format!("explain_peer_{provider}.json")),
    ]
}

pub(super) fn write_report(l: &Layout, r: &ExplanationReport) -> Result<Vec<PathBuf>> {
    let [all, sub, peer] = report_paths(l, &r.provider_id);
    io::write_json(&all, r)?;
    write_versioned(&sub, &r.subspace)?;
    #[derive(Serialize)]
    struct PeerFile<'a> {
        provider_id: &'a str,
        bases: &'a [super::PeerEvidence],
    }
    write_versioned(
        &peer,
        PeerFile {
            provider_id: &r.provider_id,
            bases: &r.peer,
        },
    )?;
    Ok(vec![all, sub, peer])
}

fn explain_top(cfg: &RunConfig, l: &Layout) -> Result<Vec<PathBuf>> {
    let ctx = ExplainContext::from_artifacts(cfg)?;
    mkdir(&l.out.join("explain"))?;
    let top: Vec<String> = ctx.final_ranking.ids().take(cfg.explain_top).map(String::from).collect();
    let mut out = Vec::new();
    for p in &top {
        out.extend(write_report(l, &ctx.explain(p)?)?);
    }
    #[derive(Serialize)]
    struct Index<'a> {
        providers: &'a [String],
    }
    write_versioned(&l.explain_index(), Index { providers: &top })?;
    out.push(l.explain_index());
    Ok(out)
}

fn read_names(path: &std::path::Path) -> Result<Vec<String>> {
    let (header, rows) = io::read_records(path)?;
    let c = header
        .iter()
        .position(|h| h == "name")
        .ok_or_else(|| Error::Input(format!("{}: missing column `name`", path.display())))?;
    Ok(rows.iter().map(|r| r.get(c).unwrap_or_default().trim().to_string()).collect())
}

fn read_accepted(path: &std::path::Path) -> Result<Vec<(String, String)>> {
    let (header, rows) = io::read_records(path)?;
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Input(format!("{}: missing column `{name}`", path.display())))
    };
    let (lc, pc) = (col("label")?, col("provider_id")?);
    Ok(rows
        .iter()
        .map(|r| (r.get(lc).unwrap_or_default().to_string(), r.get(pc).unwrap_or_default().to_string()))
        .collect())
}

fn evaluate(cfg: &RunConfig, l: &Layout) -> Result<Vec<PathBuf>> {
    let finals = read_order(&l.rank_final(), Source::Final)?;
    let d = DetectorRanks::load(l)?;
    let known = finals.support();
    mkdir(&l.out.join("eval"))?;
    let mut out = Vec::new();
    let labels = match cfg.label_mode {
        LabelMode::Planted => LabelSet::new(
            io::read_labels(&cfg.labels_path())?
                .into_iter()
                .map(|p| p.provider_id)
                .filter(|p| known.contains(p.as_str())),
            Provenance::Planted,
        ),
        LabelMode::Names => {
            let names = read_names(&cfg.labels_path())?;
            let providers = io::read_providers(&l.data("providers.csv"))?;
            let accepted = match &cfg.accepted_reviews {
                Some(p) => read_accepted(p)?,
                None => Vec::new(),
            };
            let m = eval::match_labels(&names, &providers, &accepted);
            let review = l.stage("eval", "label_review.csv");
            eval::write_review(&review, &m.review)?;
            out.push(review);
            LabelSet::new(
                m.labels.positives.into_iter().filter(|p| known.contains(p.as_str())),
                Provenance::External,
            )
        }
    };
    if labels.is_empty() {
        return Err(Error::Precondition("no labeled provider appears in the fused ranking".into()));
    }

    let coefs = regression::read_coefficients(&l.coefficients())?;
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for (f, v) in &coefs {
        if let Some(p) = f.provider() {
            if labels.contains(p) {
                pos.push(*v);
            } else {
                neg.push(*v);
            }
        }
    }
    let coefficient_ks = if pos.is_empty() || neg.is_empty() {
        None
    } else {
        Some(eval::ks_two_sample(&pos, &neg)?)
    };

    let pr = eval::pr_curve(&finals, &labels)?;
    let lift = eval::lift_curve(&finals, &labels)?;
    let per_source = d
        .all()
        .into_iter()
        .map(|r| eval::ranking_metrics(r, &labels))
        .collect::<Result<Vec<_>>>()?;
    let metrics = Metrics {
        schema_version: eval::METRICS_SCHEMA_VERSION,
        note: eval::PU_NOTE.to_string(),
        label_provenance: labels.provenance,
        n_providers: finals.len(),
        n_positives: labels.len(),
        base_rate: labels.len() as f64 / finals.len() as f64,
        final_ranking: eval::ranking_metrics(&finals, &labels)?,
        per_source,
        coefficient_ks,
    };
    io::write_json(&l.metrics(), &metrics)?;
    let pr_path = l.stage("eval", "pr_curve.csv");
    let lift_path = l.stage("eval", "lift_curve.csv");
    let dat = l.stage("eval", "curves.dat");
    eval::write_pr_curve(&pr_path, &pr)?;
    eval::write_lift_curve(&lift_path, &lift)?;
    io::write_text(&dat, &eval::curves_dat(&pr, &lift))?;
    out.extend([l.metrics(), pr_path, lift_path, dat]);
    Ok(out)
}

fn characterize(cfg: &RunConfig, l: &Layout) -> Result<Vec<PathBuf>> {
    let finals = read_order(&l.rank_final(), Source::Final)?;
    let covariates = io::read_covariates(&l.data("covariates.csv"))?;
    let ch = eval::characterize_outliers(&finals, &covariates, cfg.quantile)?;
    mkdir(&l.out.join("characterize"))?;
    let csv = l.stage("characterize", "characterization.csv");
    eval::write_characterization(&csv, &ch)?;
    write_versioned(&l.characterization(), &ch)?;
    Ok(vec![csv, l.characterization()])
}

fn report(_cfg: &RunConfig, l: &Layout) -> Result<Vec<PathBuf>> {
    let metrics: Metrics = io::read_json(&l.metrics())?;
    let ch: eval::Characterization = {
        let v: serde_json::Value = io::read_json(&l.characterization())?;
        serde_json::from_value(v).map_err(|e| Error::json(l.characterization(), e))?
    };
    let finals = read_order(&l.rank_final(), Source::Final)?;
    let index: serde_json::Value = io::read_json(&l.explain_index())?;
    let explained: Vec<String> = index["providers"]
        .as_array()
        .map(|a| a.iter().filter_map(|v| v.as_str().map(String::from)).collect())
        .unwrap_or_default();
    let reports = explained
        .iter()
        .map(|p| {
            let path = &report_paths(l, p)[0];
            if !path.exists() {
                return Err(Error::Precondition(format!("missing explanation {}", path.display())));
            }
            io::read_json::<ExplanationReport>(path)
        })
        .collect::<Result<Vec<_>>>()?;

    let f = io::fmt_f64;
    let mut s = String::new();
    let _ = writeln!(s, "# Provider anomaly report\n");
    let _ = writeln!(s, "{}\n", metrics.note);
    let _ = writeln!(
        s,
        "Providers ranked: {}. Labeled positives: {} (base rate {}).\n",
        metrics.n_providers,
        metrics.n_positives,
        f(metrics.base_rate)
    );
    let _ = writeln!(s, "## Ranking quality\n");
    let _ = writeln!(s, "| source | AP | lift@10 | lift@50 | lift@100 | lift top 10% | hits in top 50 |");
    let _ = writeln!(s, "|---|---|---|---|---|---|---|");
    for m in std::iter::once(&metrics.final_ranking).chain(&metrics.per_source) {
        let at = |k: usize| {
            m.lift_at_k
                .iter()
                .find(|(kk, _)| *kk == k)
                .map(|(_, v)| f(*v))
                .unwrap_or_default()
        };
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} | {} |",
            m.source,
            f(m.average_precision),
            at(10),
            at(50),
            at(100),
            f(m.lift_top_10pct),
            m.hits_top_50
        );
    }
    if let Some(ks) = &metrics.coefficient_ks {
        let _ = writeln!(
            s,
            "\nRegression coefficients, labeled vs other providers: KS D = {}, p = {} (n = {} vs {}).",
            f(ks.d),
            f(ks.p_value),
            ks.n_a,
            ks.n_b
        );
    }

    let _ = writeln!(s, "\n## Top providers\n");
    for (i, id) in finals.ids().take(10).enumerate() {
        let _ = writeln!(s, "{}. {id}", i + 1);
    }

    let _ = writeln!(s, "\n## Explanations\n");
    for r in &reports {
        let _ = writeln!(s, "### {}\n", r.provider_id);
        if let Some(c) = r.regression.coefficient_usd {
            let _ = writeln!(s, "- Regression: provider effect {} USD per visit.", f(c));
        }
        let sh = &r.subspace.shap;
        let codes: Vec<String> = sh
            .terms
            .iter()
            .take(5)
            .map(|t| match &t.dollar {
                Some(dc) => format!("{} ({}, {} USD)", t.code, dc.drg, f(dc.avg_price)),
                None => t.code.clone(),
            })
            .collect();
        let _ = writeln!(
            s,
            "- Coding ({}{}): {}.",
            sh.detector,
            if sh.low_fidelity { ", low-fidelity surrogate" } else { "" },
            codes.join(", ")
        );
        for pe in &r.peer {
            match &pe.explanation {
                Some(e) => {
                    let drgs: Vec<String> = e.top.iter().take(3).map(|d| format!("{} ({})", d.drg, f(d.contribution))).collect();
                    let _ = writeln!(
                        s,
                        "- Peers by {}: excess {} USD per claim over {} peers; {}.",
                        pe.basis.as_str(),
                        f(e.excess_per_claim),
                        e.n_peers,
                        drgs.join(", ")
                    );
                }
                None => {
                    let _ = writeln!(s, "- Peers by {}: insufficient peers ({}).", pe.basis.as_str(), pe.n_peers);
                }
            }
        }
        let _ = writeln!(s);
    }

    let _ = writeln!(
        s,
        "## Top {} of providers\n\n| covariate | bucket | outliers | all |\n|---|---|---|---|",
        f(ch.quantile)
    );
    for r in &ch.rows {
        let _ = writeln!(s, "| {} | {} | {} | {} |", r.covariate, r.bucket, f(r.outlier_share), f(r.population_share));
    }
    mkdir(&l.out.join("report"))?;
    io::write_text(&l.report(), &s)?;
    Ok(vec![l.report()])
}
