use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use xci_core::witness::Witness;

use crate::json::{DistributionJson, RegionJson, VerdictJson};
use crate::suite::InstanceRecord;

pub fn digest(bytes: &[u8]) -> String {
    format!("sha256:{:x}", Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WitnessSummary {
    pub method: String,
    pub verified: bool,
    pub atoms: usize,
    pub mass_on_support: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<String>,
}

impl WitnessSummary {
    pub fn from_witness(w: &Witness) -> Self {
        WitnessSummary {
            method: w.method.name().to_string(),
            verified: w.verified,
            atoms: w.w.len(),
            mass_on_support: w.mass_on_support.to_string(),
            lambda: w.lambda.as_ref().map(|l| l.to_string()),
        }
    }
}

/// A failing suite instance with enough context to rerun `xci check` on it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InstanceDump {
    pub trial: usize,
    pub kind: String,
    pub reasons: Vec<String>,
    pub partition: String,
    pub region: RegionJson,
    pub verdicts: Vec<VerdictJson>,
    pub instance: DistributionJson,
}

impl InstanceDump {
    pub fn from_record(r: &InstanceRecord, reasons: Vec<String>) -> Self {
        InstanceDump {
            trial: r.trial,
            kind: r.kind.name().to_string(),
            reasons,
            partition: r.partition.to_string(),
            region: RegionJson::from_region(&r.region),
            verdicts: r.verdicts().iter().map(|v| VerdictJson::from_verdict(v)).collect(),
            instance: DistributionJson::from_dist(&r.dist),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SuiteTallies {
    pub shape: String,
    pub seed: u64,
    pub trials: usize,
    pub instances: usize,
    pub agreements: usize,
    pub disagreements: usize,
    pub verification_failures: usize,
    pub failed_instances: usize,
    pub failures: Vec<InstanceDump>,
}

impl SuiteTallies {
    pub fn from_records(shape: &str, seed: u64, trials: usize, records: &[InstanceRecord]) -> Self {
        let mut t =
            SuiteTallies { shape: shape.to_string(), seed, trials, instances: records.len(), ..Default::default() };
        for r in records {
            if r.agree() {
                t.agreements += 1;
            } else {
                t.disagreements += 1;
            }
            if r.witness_verified() == Some(false) || !r.generic_contract() {
                t.verification_failures += 1;
            }
            let reasons = r.failures();
            if !reasons.is_empty() {
                t.failed_instances += 1;
                t.failures.push(InstanceDump::from_record(r, reasons));
            }
        }
        t
    }

    pub fn passed(&self) -> bool {
        self.failed_instances == 0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<String>,
    /// Notion name to truth value.
    pub verdicts: BTreeMap<String, bool>,
    pub details: Vec<VerdictJson>,
    pub witness: Option<WitnessSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<SuiteTallies>,
    pub timing_ms: u128,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }
}
