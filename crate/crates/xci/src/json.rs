//! Wire formats. Every rational travels as a `"p/q"` or integer string.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use xci_core::ci::{Certificate, CiVerdict, Conditioning};
use xci_core::witness::{MixtureParams, VerificationReport, Witness};
use xci_core::{parse_rat, BlockPartition, BlockValue, Error, FiniteDistribution, Point, Rat, Rectangle, Region, Slab};

fn rats(values: &[Rat]) -> Vec<String> {
    values.iter().map(|r| r.to_string()).collect()
}

fn parse_rats(values: &[String]) -> Result<Vec<Rat>, Error> {
    values.iter().map(|s| parse_rat(s)).collect()
}

fn block(v: &BlockValue) -> Vec<String> {
    rats(v.coords())
}

fn parse_block(v: &[String]) -> Result<BlockValue, Error> {
    Ok(BlockValue::new(parse_rats(v)?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomJson {
    pub coords: Vec<String>,
    pub mass: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionJson {
    pub dimension: usize,
    pub atoms: Vec<AtomJson>,
}

impl DistributionJson {
    pub fn from_dist(dist: &FiniteDistribution) -> Self {
        DistributionJson {
            dimension: dist.dimension(),
            atoms: dist.atoms().map(|(p, m)| AtomJson { coords: rats(p.coords()), mass: m.to_string() }).collect(),
        }
    }

    /// Strict conversion: duplicate points, nonpositive masses and totals other
    /// than exactly 1 are rejected.
    pub fn to_dist(&self) -> Result<FiniteDistribution, Error> {
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for atom in &self.atoms {
            if atom.coords.len() != self.dimension {
                return Err(Error::InvalidDistribution(format!(
                    "atom has {} coordinates, dimension is {}",
                    atom.coords.len(),
                    self.dimension
                )));
            }
            atoms.push((Point::new(parse_rats(&atom.coords)?)?, parse_rat(&atom.mass)?));
        }
        FiniteDistribution::new(self.dimension, atoms)
    }
}

pub fn parse_distribution(text: &str) -> Result<FiniteDistribution, String> {
    let raw: DistributionJson = serde_json::from_str(text).map_err(|e| format!("malformed distribution JSON: {e}"))?;
    raw.to_dist().map_err(|e| e.to_string())
}

pub fn distribution_to_string(dist: &FiniteDistribution) -> String {
    let mut s = serde_json::to_string_pretty(&DistributionJson::from_dist(dist)).expect("serializable");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum RegionJson {
    Eh { threshold: String },
    Cross { threshold: String },
    Explicit { points: Vec<Vec<String>> },
}

impl RegionJson {
    pub fn from_region(region: &Region) -> Self {
        match region {
            Region::Eh { threshold } => RegionJson::Eh { threshold: threshold.to_string() },
            Region::Cross { threshold, .. } => RegionJson::Cross { threshold: threshold.to_string() },
            Region::Explicit(points) => {
                RegionJson::Explicit { points: points.iter().map(|p| rats(p.coords())).collect() }
            }
        }
    }

    /// The cross region needs the partition its arms refer to.
    pub fn to_region(&self, partition: &BlockPartition) -> Result<Region, Error> {
        match self {
            RegionJson::Eh { threshold } => Region::eh(parse_rat(threshold)?),
            RegionJson::Cross { threshold } => Region::cross(partition.clone(), parse_rat(threshold)?),
            RegionJson::Explicit { points } => {
                let set =
                    points.iter().map(|p| Point::new(parse_rats(p)?)).collect::<Result<BTreeSet<Point>, Error>>()?;
                if set.iter().any(|p| p.dim() != partition.dim()) {
                    return Err(Error::InvalidParameter("explicit region point has the wrong dimension".into()));
                }
                Region::explicit(set)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum GivenJson {
    None,
    /// `coordinate` is one-based.
    Exceedance {
        coordinate: usize,
        threshold: String,
    },
    Rectangle {
        #[serde(rename = "sA")]
        s_a: Vec<Vec<String>>,
        #[serde(rename = "sB")]
        s_b: Vec<Vec<String>>,
        #[serde(rename = "sC")]
        s_c: Vec<Vec<String>>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellJson {
    pub a: Vec<String>,
    pub c: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum CertificateJson {
    Triple {
        given: GivenJson,
        a: Vec<String>,
        b: Vec<String>,
        c: Vec<String>,
    },
    Slab {
        a: Vec<String>,
        #[serde(rename = "aPrime")]
        a_prime: Vec<String>,
        b: Vec<String>,
        c: Vec<String>,
        #[serde(rename = "cPrime")]
        c_prime: Vec<String>,
        minor: String,
    },
    Cycle {
        b: Vec<String>,
        cells: Vec<CellJson>,
        ratio: String,
    },
}

impl CertificateJson {
    pub fn from_certificate(cert: &Certificate) -> Self {
        match cert {
            Certificate::Triple { given, a, b, c } => CertificateJson::Triple {
                given: match given {
                    Conditioning::Unconditional => GivenJson::None,
                    Conditioning::Exceedance { coordinate, threshold } => {
                        GivenJson::Exceedance { coordinate: coordinate + 1, threshold: threshold.to_string() }
                    }
                    Conditioning::Rectangle(r) => GivenJson::Rectangle {
                        s_a: r.s_a.iter().map(block).collect(),
                        s_b: r.s_b.iter().map(block).collect(),
                        s_c: r.s_c.iter().map(block).collect(),
                    },
                },
                a: block(a),
                b: block(b),
                c: block(c),
            },
            Certificate::Slab { slab, minor } => CertificateJson::Slab {
                a: block(&slab.a),
                a_prime: block(&slab.a_prime),
                b: block(&slab.b),
                c: block(&slab.c),
                c_prime: block(&slab.c_prime),
                minor: minor.to_string(),
            },
            Certificate::Cycle { b, cells, ratio } => CertificateJson::Cycle {
                b: block(b),
                cells: cells.iter().map(|(a, c)| CellJson { a: block(a), c: block(c) }).collect(),
                ratio: ratio.to_string(),
            },
        }
    }

    pub fn to_certificate(&self) -> Result<Certificate, Error> {
        let blocks = |vs: &[Vec<String>]| vs.iter().map(|v| parse_block(v)).collect::<Result<Vec<_>, Error>>();
        Ok(match self {
            CertificateJson::Triple { given, a, b, c } => Certificate::Triple {
                given: match given {
                    GivenJson::None => Conditioning::Unconditional,
                    GivenJson::Exceedance { coordinate, threshold } => {
                        let coordinate = coordinate
                            .checked_sub(1)
                            .ok_or_else(|| Error::InvalidIndices("coordinates are one-based".into()))?;
                        Conditioning::Exceedance { coordinate, threshold: parse_rat(threshold)? }
                    }
                    GivenJson::Rectangle { s_a, s_b, s_c } => {
                        Conditioning::Rectangle(Rectangle { s_a: blocks(s_a)?, s_b: blocks(s_b)?, s_c: blocks(s_c)? })
                    }
                },
                a: parse_block(a)?,
                b: parse_block(b)?,
                c: parse_block(c)?,
            },
            CertificateJson::Slab { a, a_prime, b, c, c_prime, minor } => Certificate::Slab {
                slab: Slab {
                    a: parse_block(a)?,
                    a_prime: parse_block(a_prime)?,
                    b: parse_block(b)?,
                    c: parse_block(c)?,
                    c_prime: parse_block(c_prime)?,
                },
                minor: parse_rat(minor)?,
            },
            CertificateJson::Cycle { b, cells, ratio } => Certificate::Cycle {
                b: parse_block(b)?,
                cells: cells
                    .iter()
                    .map(|cell| Ok((parse_block(&cell.a)?, parse_block(&cell.c)?)))
                    .collect::<Result<_, Error>>()?,
                ratio: parse_rat(ratio)?,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictJson {
    pub notion: String,
    pub holds: bool,
    pub certificate: Option<CertificateJson>,
}

impl VerdictJson {
    pub fn from_verdict(v: &CiVerdict) -> Self {
        VerdictJson {
            notion: v.notion.name().to_string(),
            holds: v.holds,
            certificate: v.certificate.as_ref().map(CertificateJson::from_certificate),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportJson {
    pub dimensions_match: bool,
    pub product_support: bool,
    pub conditional_law: bool,
    pub conditional_independence: bool,
}

impl From<&VerificationReport> for ReportJson {
    fn from(r: &VerificationReport) -> Self {
        ReportJson {
            dimensions_match: r.dimensions_match,
            product_support: r.product_support,
            conditional_law: r.conditional_law,
            conditional_independence: r.conditional_independence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WitnessJson {
    #[serde(flatten)]
    pub distribution: DistributionJson,
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_closed_form: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<Option<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_conditions_hold: Option<bool>,
    pub mass_on_support: String,
    pub verified: bool,
    pub report: ReportJson,
}

impl WitnessJson {
    pub fn from_witness(w: &Witness) -> Self {
        let mix: Option<&MixtureParams> = w.mixture.as_ref();
        WitnessJson {
            distribution: DistributionJson::from_dist(&w.w),
            method: w.method.name().to_string(),
            lambda: w.lambda.as_ref().map(|l| l.to_string()),
            lambda_closed_form: w.lambda_closed_form.as_ref().map(|l| l.to_string()),
            p: mix.map(|m| m.p.iter().map(|x| x.as_ref().map(|r| r.to_string())).collect()),
            alpha: mix.map(|m| rats(&m.free_alphas())),
            alpha_conditions_hold: mix.map(|m| m.alpha_conditions_hold),
            mass_on_support: w.mass_on_support.to_string(),
            verified: w.verified,
            report: (&w.report).into(),
        }
    }
}
