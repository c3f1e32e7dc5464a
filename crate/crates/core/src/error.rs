use alloc::boxed::Box;
use alloc::string::String;

use crate::ci::{Certificate, CiVerdict};
use crate::dist::Point;
use crate::witness::VerificationReport;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("cannot parse rational {0:?}")]
    ParseRational(String),
    #[error("invalid coordinate indices: {0}")]
    InvalidIndices(String),
    #[error("invalid block partition: {0}")]
    InvalidPartition(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("conditioning event has probability zero")]
    ZeroProbabilityEvent,
    #[error("support point {0:?} lies outside the region")]
    SupportOutsideRegion(Point),
    #[error("enumeration of {count} candidates exceeds cap {cap}")]
    EnumerationTooLarge { count: u128, cap: u128 },
    #[error("exceedance independence does not hold")]
    PreconditionEhFailed(Box<CiVerdict>),
    #[error("corner aggregate is zero for an L1 B-value")]
    CornerMassZero,
    #[error("witness failed exact verification")]
    VerificationFailed(Box<VerificationReport>),
    #[error("support is not contained in the cross region")]
    SupportNotCross(Point),
    #[error("outer independence does not hold")]
    OuterCheckFailed(Box<Certificate>),
    #[error("perturbation would make a mass nonpositive")]
    MassWouldGoNonpositive,
    #[error("slab corner is not in the support")]
    SlabNotInSupport,
    #[error("perturbation leaves the slab minor at zero")]
    MinorVanishes,
    #[error("region has no points on the grid")]
    EmptyRegionOnGrid,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
