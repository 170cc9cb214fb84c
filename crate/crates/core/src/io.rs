//! Delimited-file formats shared by the generator, ingestion, detectors and
//! the pipeline. All files are UTF-8 CSV with a header row. Floats are written
//! in shortest round-trip form so persisted artifacts reload bit-identically.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use csv::StringRecord;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    Beneficiary, BeneficiaryTable, DrgCostTable, DrgMdcMap, HistoryVisit, IcdHierarchy, IcdLevel,
    IcdNode, InpatientClaim, PatientHistory, ProfileSet, ProviderProfile, VisitType,
};
use crate::rank::{RankEntry, RankList, Source};
use crate::synth::{PlantedLabel, ProviderCovariates, ProviderInfo};

pub const CLAIMS_HEADER: [&str; 10] = [
    "claim_id",
    "bene_id",
    "provider_id",
    "year",
    "drg",
    "icd_list",
    "total",
    "disp",
    "educ",
    "outlier",
];

pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn open_reader(path: &Path) -> Result<csv::Reader<BufReader<File>>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(f)))
}

/// Header plus all records of a CSV file.
pub fn read_records(path: &Path) -> Result<(StringRecord, Vec<StringRecord>)> {
    let mut rdr = open_reader(path)?;
    let header = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let rows = rdr
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::csv(path, e))?;
    Ok((header, rows))
}

/// Writes rows under `header`, creating parent directories.
pub fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(f));
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&s).map_err(|e| Error::json(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn field<'a>(rec: &'a StringRecord, header: &StringRecord, name: &str) -> Option<&'a str> {
    header
        .iter()
        .position(|h| h == name)
        .and_then(|i| rec.get(i))
}

fn required<'a>(rec: &'a StringRecord, header: &StringRecord, name: &str, path: &Path) -> Result<&'a str> {
    field(rec, header, name).ok_or_else(|| {
        Error::Input(format!("{}: missing column `{name}`", path.display()))
    })
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str, path: &Path) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Input(format!("{}: bad {what} `{s}`", path.display())))
}

fn split_list(s: &str) -> Vec<String> {
    s.split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

// ---------------------------------------------------------------- claims

/// Why a raw claim row was rejected before filtering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    MissingField,
    NonNumeric,
    NegativeAmount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRow {
    /// 1-based data row (header excluded).
    pub row: usize,
    pub reason: RejectReason,
    pub field: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClaimRead {
    pub claims: Vec<InpatientClaim>,
    pub rejected: Vec<RejectedRow>,
}

/// Parses one claims row. Fields are accessed by position in
/// [`CLAIMS_HEADER`] order.
pub fn parse_claim(rec: &StringRecord) -> std::result::Result<InpatientClaim, (RejectReason, String)> {
    let get = |i: usize| -> std::result::Result<&str, (RejectReason, String)> {
        match rec.get(i) {
            Some(s) if !s.trim().is_empty() || i == 5 => Ok(s.trim()),
            _ => Err((RejectReason::MissingField, CLAIMS_HEADER[i].to_string())),
        }
    };
    let money = |i: usize| -> std::result::Result<f64, (RejectReason, String)> {
        let v: f64 = get(i)?
            .parse()
            .map_err(|_| (RejectReason::NonNumeric, CLAIMS_HEADER[i].to_string()))?;
        if !v.is_finite() {
            return Err((RejectReason::NonNumeric, CLAIMS_HEADER[i].to_string()));
        }
        if v < 0.0 {
            return Err((RejectReason::NegativeAmount, CLAIMS_HEADER[i].to_string()));
        }
        Ok(v)
    };
    if rec.len() < CLAIMS_HEADER.len() {
        return Err((
            RejectReason::MissingField,
            CLAIMS_HEADER[rec.len().min(CLAIMS_HEADER.len() - 1)].to_string(),
        ));
    }
    Ok(InpatientClaim {
        claim_id: get(0)?.to_string(),
        beneficiary_id: get(1)?.to_string(),
        provider_id: get(2)?.to_string(),
        year: get(3)?
            .parse()
            .map_err(|_| (RejectReason::NonNumeric, "year".to_string()))?,
        drg: get(4)?.to_string(),
        icd_codes: split_list(get(5)?),
        total_payment: money(6)?,
        disproportionate_amount: money(7)?,
        education_amount: money(8)?,
        outlier_amount: money(9)?,
        base_payment: None,
    })
}

pub fn read_claims(path: &Path) -> Result<ClaimRead> {
    let (header, rows) = read_records(path)?;
    let cols: Vec<&str> = header.iter().collect();
    if cols != CLAIMS_HEADER {
        return Err(Error::Input(format!(
            "{}: expected header {}, found {}",
            path.display(),
            CLAIMS_HEADER.join(","),
            cols.join(",")
        )));
    }
    let mut out = ClaimRead::default();
    for (i, rec) in rows.iter().enumerate() {
        match parse_claim(rec) {
            Ok(c) => out.claims.push(c),
            Err((reason, field)) => out.rejected.push(RejectedRow {
                row: i + 1,
                reason,
                field,
            }),
        }
    }
    Ok(out)
}

pub fn write_claims(path: &Path, claims: &[InpatientClaim]) -> Result<()> {
    write_rows(
        path,
        &CLAIMS_HEADER,
        claims.iter().map(|c| {
            vec![
                c.claim_id.clone(),
                c.beneficiary_id.clone(),
                c.provider_id.clone(),
                c.year.to_string(),
                c.drg.clone(),
                c.icd_codes.join(";"),
                fmt_f64(c.total_payment),
                fmt_f64(c.disproportionate_amount),
                fmt_f64(c.education_amount),
                fmt_f64(c.outlier_amount),
            ]
        }),
    )
}

// ---------------------------------------------------------------- visits

pub fn read_visits(path: &Path) -> Result<Vec<HistoryVisit>> {
    let (header, rows) = read_records(path)?;
    rows.iter()
        .map(|r| {
            let vt = required(r, &header, "visit_type", path)?;
            Ok(HistoryVisit {
                beneficiary_id: required(r, &header, "bene_id", path)?.to_string(),
                year: parse_num(required(r, &header, "year", path)?, "year", path)?,
                visit_type: VisitType::parse(vt).ok_or_else(|| {
                    Error::Input(format!("{}: unknown visit type `{vt}`", path.display()))
                })?,
                icd_codes: split_list(required(r, &header, "icd_list", path)?),
            })
        })
        .collect()
}

pub fn write_visits(path: &Path, visits: &[HistoryVisit]) -> Result<()> {
    write_rows(
        path,
        &["bene_id", "year", "visit_type", "icd_list"],
        visits.iter().map(|v| {
            vec![
                v.beneficiary_id.clone(),
                v.year.to_string(),
                v.visit_type.as_str().to_string(),
                v.icd_codes.join(";"),
            ]
        }),
    )
}

// ---------------------------------------------------------------- beneficiaries

/// `bene_id, birth_year, zip3` followed by one 0/1 column per chronic
/// condition; the column header is the condition name.
pub fn read_beneficiaries(path: &Path) -> Result<BeneficiaryTable> {
    let (header, rows) = read_records(path)?;
    let fixed = ["bene_id", "birth_year", "zip3"];
    if header.len() < 3 || header.iter().take(3).ne(fixed) {
        return Err(Error::Input(format!(
            "{}: header must start with bene_id,birth_year,zip3",
            path.display()
        )));
    }
    let conditions: Vec<String> = header.iter().skip(3).map(String::from).collect();
    let mut table = BeneficiaryTable {
        conditions,
        rows: BTreeMap::new(),
    };
    for r in &rows {
        let id = r.get(0).unwrap_or_default().to_string();
        let chronic = (3..header.len())
            .map(|i| match r.get(i) {
                Some("1") => Ok(true),
                Some("0") | Some("") | None => Ok(false),
                Some(other) => Err(Error::Input(format!(
                    "{}: chronic flag for {id} must be 0/1, found `{other}`",
                    path.display()
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        let b = Beneficiary {
            beneficiary_id: id.clone(),
            birth_year: parse_num(r.get(1).unwrap_or_default(), "birth_year", path)?,
            zip3: r.get(2).unwrap_or_default().to_string(),
            chronic,
        };
        if table.rows.insert(id.clone(), b).is_some() {
            return Err(Error::Input(format!(
                "{}: duplicate beneficiary {id}",
                path.display()
            )));
        }
    }
    Ok(table)
}

pub fn write_beneficiaries(path: &Path, table: &BeneficiaryTable) -> Result<()> {
    let mut header = vec!["bene_id", "birth_year", "zip3"];
    header.extend(table.conditions.iter().map(String::as_str));
    write_rows(
        path,
        &header,
        table.rows.values().map(|b| {
            let mut row = vec![b.beneficiary_id.clone(), b.birth_year.to_string(), b.zip3.clone()];
            row.extend(b.chronic.iter().map(|&f| if f { "1" } else { "0" }.to_string()));
            row
        }),
    )
}

// ---------------------------------------------------------------- vocabularies

pub fn read_icd_hierarchy(path: &Path) -> Result<IcdHierarchy> {
    let (header, rows) = read_records(path)?;
    let nodes = rows
        .iter()
        .map(|r| {
            let level = required(r, &header, "level", path)?;
            let parent = required(r, &header, "parent", path)?;
            Ok(IcdNode {
                code: required(r, &header, "code", path)?.to_string(),
                parent: (!parent.is_empty()).then(|| parent.to_string()),
                level: IcdLevel::parse(level).ok_or_else(|| {
                    Error::Input(format!("{}: unknown ICD level `{level}`", path.display()))
                })?,
                description: required(r, &header, "description", path)?.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    IcdHierarchy::new(nodes)
}

pub fn write_icd_hierarchy(path: &Path, nodes: &[IcdNode]) -> Result<()> {
    write_rows(
        path,
        &["code", "parent", "level", "description"],
        nodes.iter().map(|n| {
            vec![
                n.code.clone(),
                n.parent.clone().unwrap_or_default(),
                n.level.as_str().to_string(),
                n.description.clone(),
            ]
        }),
    )
}

pub fn read_drg_mdc(path: &Path) -> Result<DrgMdcMap> {
    let (header, rows) = read_records(path)?;
    let mut map = BTreeMap::new();
    for r in &rows {
        let drg = required(r, &header, "drg", path)?.to_string();
        let mdc = required(r, &header, "mdc", path)?.to_string();
        if map.insert(drg.clone(), mdc).is_some() {
            return Err(Error::Input(format!("{}: duplicate DRG {drg}", path.display())));
        }
    }
    Ok(DrgMdcMap(map))
}

pub fn write_drg_mdc(path: &Path, map: &DrgMdcMap) -> Result<()> {
    write_rows(
        path,
        &["drg", "mdc"],
        map.0.iter().map(|(d, m)| [d.as_str(), m.as_str()]),
    )
}

// ---------------------------------------------------------------- providers, labels, covariates

pub fn read_providers(path: &Path) -> Result<Vec<ProviderInfo>> {
    let (header, rows) = read_records(path)?;
    rows.iter()
        .map(|r| {
            Ok(ProviderInfo {
                provider_id: required(r, &header, "provider_id", path)?.to_string(),
                name: required(r, &header, "name", path)?.to_string(),
                state: field(r, &header, "state").unwrap_or_default().to_string(),
            })
        })
        .collect()
}

pub fn write_providers(path: &Path, providers: &[ProviderInfo]) -> Result<()> {
    write_rows(
        path,
        &["provider_id", "name", "state"],
        providers
            .iter()
            .map(|p| [p.provider_id.as_str(), p.name.as_str(), p.state.as_str()]),
    )
}

pub fn read_labels(path: &Path) -> Result<Vec<PlantedLabel>> {
    let (header, rows) = read_records(path)?;
    rows.iter()
        .map(|r| {
            let arch = field(r, &header, "archetype").unwrap_or("external");
            Ok(PlantedLabel {
                provider_id: required(r, &header, "provider_id", path)?.to_string(),
                archetype: arch.parse()?,
                severity: match field(r, &header, "severity") {
                    Some(s) if !s.is_empty() => parse_num(s, "severity", path)?,
                    _ => 1.0,
                },
            })
        })
        .collect()
}

pub fn write_labels(path: &Path, labels: &[PlantedLabel]) -> Result<()> {
    write_rows(
        path,
        &["provider_id", "archetype", "severity"],
        labels.iter().map(|l| {
            vec![
                l.provider_id.clone(),
                l.archetype.as_str().to_string(),
                fmt_f64(l.severity),
            ]
        }),
    )
}

pub const COVARIATES_HEADER: [&str; 7] = [
    "provider_id",
    "rating",
    "ownership",
    "urban",
    "state",
    "avg_length_of_stay",
    "n_unique_patients",
];

pub fn read_covariates(path: &Path) -> Result<Vec<ProviderCovariates>> {
    let (header, rows) = read_records(path)?;
    let opt = |r: &StringRecord, name: &str| -> Option<String> {
        field(r, &header, name)
            .filter(|s| !s.is_empty())
            .map(String::from)
    };
    rows.iter()
        .map(|r| {
            Ok(ProviderCovariates {
                provider_id: required(r, &header, "provider_id", path)?.to_string(),
                rating: opt(r, "rating").and_then(|s| s.parse().ok()),
                ownership: opt(r, "ownership"),
                urban: opt(r, "urban").map(|s| s == "1" || s.eq_ignore_ascii_case("true")),
                state: opt(r, "state"),
                avg_length_of_stay: opt(r, "avg_length_of_stay").and_then(|s| s.parse().ok()),
                n_unique_patients: opt(r, "n_unique_patients").and_then(|s| s.parse().ok()),
            })
        })
        .collect()
}

pub fn write_covariates(path: &Path, rows: &[ProviderCovariates]) -> Result<()> {
    write_rows(
        path,
        &COVARIATES_HEADER,
        rows.iter().map(|c| {
            vec![
                c.provider_id.clone(),
                c.rating.map(|r| r.to_string()).unwrap_or_default(),
                c.ownership.clone().unwrap_or_default(),
                c.urban.map(|u| if u { "1" } else { "0" }.to_string()).unwrap_or_default(),
                c.state.clone().unwrap_or_default(),
                c.avg_length_of_stay.map(fmt_f64).unwrap_or_default(),
                c.n_unique_patients.map(|n| n.to_string()).unwrap_or_default(),
            ]
        }),
    )
}

// ---------------------------------------------------------------- ingest artifacts

fn join_pairs<'a, K: std::fmt::Display + 'a, V: std::fmt::Display + 'a>(
    it: impl IntoIterator<Item = (K, V)>,
) -> String {
    let mut s = String::new();
    for (i, (k, v)) in it.into_iter().enumerate() {
        if i > 0 {
            s.push(';');
        }
        let _ = write!(s, "{k}:{v}");
    }
    s
}

fn split_pairs(s: &str, path: &Path) -> Result<Vec<(String, String)>> {
    s.split(';')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.rsplit_once(':')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Input(format!("{}: bad key:value `{t}`", path.display())))
        })
        .collect()
}

pub const PROFILES_HEADER: [&str; 7] = [
    "provider_id",
    "n_claims",
    "n_beneficiaries",
    "icd_counts",
    "mdc_dist",
    "chronic_dist",
    "drg_dist",
];

pub fn write_profiles(path: &Path, set: &ProfileSet) -> Result<()> {
    write_rows(
        path,
        &PROFILES_HEADER,
        set.profiles.iter().map(|p| {
            vec![
                p.provider_id.clone(),
                p.n_claims.to_string(),
                p.n_beneficiaries.to_string(),
                join_pairs(p.icd_counts.iter()),
                join_pairs(set.mdc_codes.iter().zip(p.mdc_dist.iter().map(|&v| fmt_f64(v)))),
                join_pairs(
                    set.chronic_names
                        .iter()
                        .zip(p.chronic_dist.iter().map(|&v| fmt_f64(v))),
                ),
                join_pairs(p.drg_dist.iter().map(|(k, &v)| (k, fmt_f64(v)))),
            ]
        }),
    )
}

pub fn read_profiles(path: &Path) -> Result<ProfileSet> {
    let (header, rows) = read_records(path)?;
    let mut mdc_codes: Option<Vec<String>> = None;
    let mut chronic_names: Option<Vec<String>> = None;
    let mut profiles = Vec::with_capacity(rows.len());
    let dense = |s: &str, labels: &mut Option<Vec<String>>| -> Result<Vec<f64>> {
        let pairs = split_pairs(s, path)?;
        let names: Vec<String> = pairs.iter().map(|(k, _)| k.clone()).collect();
        match labels {
            Some(l) if *l != names => {
                return Err(Error::Input(format!(
                    "{}: inconsistent dense coordinates",
                    path.display()
                )))
            }
            Some(_) => {}
            None => *labels = Some(names),
        }
        pairs.iter().map(|(_, v)| parse_num(v, "probability", path)).collect()
    };
    for r in &rows {
        let icd_counts = split_pairs(required(r, &header, "icd_counts", path)?, path)?
            .into_iter()
            .map(|(k, v)| Ok((k, parse_num(&v, "count", path)?)))
            .collect::<Result<_>>()?;
        let drg_dist = split_pairs(required(r, &header, "drg_dist", path)?, path)?
            .into_iter()
            .map(|(k, v)| Ok((k, parse_num(&v, "probability", path)?)))
            .collect::<Result<_>>()?;
        profiles.push(ProviderProfile {
            provider_id: required(r, &header, "provider_id", path)?.to_string(),
            n_claims: parse_num(required(r, &header, "n_claims", path)?, "n_claims", path)?,
            n_beneficiaries: parse_num(
                required(r, &header, "n_beneficiaries", path)?,
                "n_beneficiaries",
                path,
            )?,
            icd_counts,
            mdc_dist: dense(required(r, &header, "mdc_dist", path)?, &mut mdc_codes)?,
            chronic_dist: dense(required(r, &header, "chronic_dist", path)?, &mut chronic_names)?,
            drg_dist,
        });
    }
    profiles.sort_by(|a, b| a.provider_id.cmp(&b.provider_id));
    Ok(ProfileSet {
        mdc_codes: mdc_codes.unwrap_or_default(),
        chronic_names: chronic_names.unwrap_or_default(),
        profiles,
    })
}

pub const HISTORIES_HEADER: [&str; 7] = [
    "bene_id",
    "age",
    "zip3",
    "target_spend",
    "chronic_flags",
    "history_counts",
    "provider_visits",
];

/// `chronic_flags` is a 0/1 string aligned with `conditions`, which is
/// written alongside as `conditions.csv`.
pub fn write_histories(path: &Path, conditions: &[String], histories: &[PatientHistory]) -> Result<()> {
    write_rows(
        path,
        &HISTORIES_HEADER,
        histories.iter().map(|h| {
            vec![
                h.beneficiary_id.clone(),
                h.age_at_target_year.to_string(),
                h.zip3.clone(),
                fmt_f64(h.target_spend),
                h.chronic_flags.iter().map(|&f| if f { '1' } else { '0' }).collect(),
                join_pairs(
                    h.history_counts
                        .iter()
                        .map(|((vt, code), n)| (format!("{}|{code}", vt.as_str()), n)),
                ),
                join_pairs(h.provider_visits.iter()),
            ]
        }),
    )?;
    let cond_path = path.with_file_name("conditions.csv");
    write_rows(
        &cond_path,
        &["index", "condition"],
        conditions
            .iter()
            .enumerate()
            .map(|(i, c)| vec![i.to_string(), c.clone()]),
    )
}

pub fn read_histories(path: &Path) -> Result<(Vec<String>, Vec<PatientHistory>)> {
    let (ch, crow) = read_records(&path.with_file_name("conditions.csv"))?;
    let conditions = crow
        .iter()
        .map(|r| Ok(required(r, &ch, "condition", path)?.to_string()))
        .collect::<Result<Vec<_>>>()?;
    let (header, rows) = read_records(path)?;
    let histories = rows
        .iter()
        .map(|r| {
            let history_counts = split_pairs(required(r, &header, "history_counts", path)?, path)?
                .into_iter()
                .map(|(k, v)| {
                    let (vt, code) = k.split_once('|').ok_or_else(|| {
                        Error::Input(format!("{}: bad history key `{k}`", path.display()))
                    })?;
                    let vt = VisitType::parse(vt).ok_or_else(|| {
                        Error::Input(format!("{}: bad visit type `{vt}`", path.display()))
                    })?;
                    Ok(((vt, code.to_string()), parse_num(&v, "count", path)?))
                })
                .collect::<Result<_>>()?;
            let provider_visits = split_pairs(required(r, &header, "provider_visits", path)?, path)?
                .into_iter()
                .map(|(k, v)| Ok((k, parse_num(&v, "visits", path)?)))
                .collect::<Result<_>>()?;
            Ok(PatientHistory {
                beneficiary_id: required(r, &header, "bene_id", path)?.to_string(),
                age_at_target_year: parse_num(required(r, &header, "age", path)?, "age", path)?,
                zip3: required(r, &header, "zip3", path)?.to_string(),
                target_spend: parse_num(
                    required(r, &header, "target_spend", path)?,
                    "target_spend",
                    path,
                )?,
                chronic_flags: required(r, &header, "chronic_flags", path)?
                    .chars()
                    .map(|c| c == '1')
                    .collect(),
                history_counts,
                provider_visits,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((conditions, histories))
}

pub fn write_drg_costs(path: &Path, costs: &DrgCostTable) -> Result<()> {
    write_rows(
        path,
        &["drg", "avg_base_payment"],
        costs.0.iter().map(|(d, &c)| vec![d.clone(), fmt_f64(c)]),
    )
}

pub fn read_drg_costs(path: &Path) -> Result<DrgCostTable> {
    let (header, rows) = read_records(path)?;
    Ok(DrgCostTable(
        rows.iter()
            .map(|r| {
                Ok((
                    required(r, &header, "drg", path)?.to_string(),
                    parse_num(required(r, &header, "avg_base_payment", path)?, "cost", path)?,
                ))
            })
            .collect::<Result<_>>()?,
    ))
}

// ---------------------------------------------------------------- rankings

/// `rank, provider_id, <score column>`. An empty score cell means no score.
pub fn write_rank(path: &Path, list: &RankList, score_column: &str) -> Result<()> {
    write_rows(
        path,
        &["rank", "provider_id", score_column],
        list.entries().iter().enumerate().map(|(i, e)| {
            vec![
                (i + 1).to_string(),
                e.provider_id.clone(),
                e.score.map(fmt_f64).unwrap_or_default(),
            ]
        }),
    )
}

pub fn read_rank(path: &Path, source: Source) -> Result<RankList> {
    let (header, rows) = read_records(path)?;
    let mut entries: Vec<(usize, RankEntry)> = rows
        .iter()
        .map(|r| {
            let score = r.get(2).filter(|s| !s.is_empty());
            Ok((
                parse_num(required(r, &header, "rank", path)?, "rank", path)?,
                RankEntry {
                    provider_id: required(r, &header, "provider_id", path)?.to_string(),
                    score: score.map(|s| parse_num(s, "score", path)).transpose()?,
                },
            ))
        })
        .collect::<Result<_>>()?;
    entries.sort_by_key(|(rank, _)| *rank);
    RankList::new(source, entries.into_iter().map(|(_, e)| e).collect())
}
