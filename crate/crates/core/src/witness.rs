//! Explicit outer-independence witnesses.
//!
//! A witness is a distribution `W` on a full product set `L_A × L_B × L_C`
//! containing `supp(Y)`, with `W_A ⊥ W_C | W_B` and `(W | W ∈ supp(Y)) = Y`.
//! Three builders are provided:
//!
//! * [`build_prop1_witness`] for laws on the EH region: scale `Y` by `λ` and fill
//!   the all-L1 cells with the rank-one completion of each B-slice.
//! * [`build_prop2_witness`] for laws on a cross region: an independent product of
//!   per-block mixtures of a point mass at zero and `Y`'s conditional arm law.
//! * [`build_outer_witness_generic`] for any law passing the outer check.
//!
//! Every builder verifies its output exactly before returning it.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::ci::{check_eh_ci, check_plain_ci, rank_one_factors};
use crate::dist::{Block, BlockPartition, BlockValue, FiniteDistribution, Point};
use crate::error::Error;
use crate::geometry::{classify_block, cross_arm, observed_values, BlockClass, Region};
use crate::rat::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Prop1,
    Prop2,
    Generic,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Prop1 => "prop1",
            Method::Prop2 => "prop2",
            Method::Generic => "generic",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "prop1" => Some(Method::Prop1),
            "prop2" => Some(Method::Prop2),
            "generic" => Some(Method::Generic),
            _ => None,
        }
    }
}

/// Outcome of the three exact witness checks.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VerificationReport {
    pub dimensions_match: bool,
    /// `supp(W)` is a product set and contains `supp(Y)`.
    pub product_support: bool,
    /// `(W | W ∈ supp(Y)) = Y`.
    pub conditional_law: bool,
    /// `W_A ⊥ W_C | W_B`.
    pub conditional_independence: bool,
}

impl VerificationReport {
    pub fn verified(&self) -> bool {
        self.dimensions_match && self.product_support && self.conditional_law && self.conditional_independence
    }
}

/// Parameters of the mixture construction on a cross support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixtureParams {
    /// `p_A, p_B, p_C`; `p_B` is `None` when B is empty.
    pub p: [Option<Rat>; 3],
    /// Arm masses `α_A, α_B, α_C` of `Y`; `α_B` is `None` when B is empty.
    pub alpha: [Option<Rat>; 3],
    /// The arm-mass identities linking `α` and `p` hold exactly.
    pub alpha_conditions_hold: bool,
}

impl MixtureParams {
    /// The free arm masses: `[α]` when B is empty, `[α₁, α₂]` otherwise.
    pub fn free_alphas(&self) -> Vec<Rat> {
        match &self.alpha {
            [Some(a), None, _] => vec![a.clone()],
            [Some(a), Some(b), _] => vec![a.clone(), b.clone()],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub w: FiniteDistribution,
    pub method: Method,
    /// Normalization constant: `w = λ·y` on `supp(Y)` (prop1).
    pub lambda: Option<Rat>,
    /// The aggregate closed-form `λ` (prop1); `None` when its denominator vanishes.
    pub lambda_closed_form: Option<Rat>,
    pub mixture: Option<MixtureParams>,
    /// `P(W ∈ supp(Y))`.
    pub mass_on_support: Rat,
    pub report: VerificationReport,
    pub verified: bool,
}

impl Witness {
    /// Whether the closed-form `λ` exists and equals the normalization `λ`.
    pub fn lambda_agrees(&self) -> bool {
        matches!((&self.lambda, &self.lambda_closed_form), (Some(a), Some(b)) if a == b)
    }
}

/// Runs the product-support, conditional-law and CI checks for candidate `w`.
pub fn verify_witness(
    w: &FiniteDistribution,
    y: &FiniteDistribution,
    partition: &BlockPartition,
) -> VerificationReport {
    let dims = w.dimension() == y.dimension() && w.dimension() == partition.dim();
    if !dims {
        return VerificationReport::default();
    }
    let product_support = match observed_values(w.support(), partition) {
        Ok([a, b, c]) => a.len() * b.len() * c.len() == w.len() && y.support().all(|p| w.contains(p)),
        Err(_) => false,
    };
    let support = y.support_set();
    let conditional_law = matches!(w.condition_on_set(&support), Ok(ref c) if c == y);
    let conditional_independence = matches!(check_plain_ci(w, partition), Ok(ref v) if v.holds);
    VerificationReport { dimensions_match: true, product_support, conditional_law, conditional_independence }
}

fn finish(
    w: FiniteDistribution,
    y: &FiniteDistribution,
    partition: &BlockPartition,
    extra_ok: bool,
    build: impl FnOnce(FiniteDistribution, VerificationReport) -> Witness,
) -> Result<Witness, Error> {
    let report = verify_witness(&w, y, partition);
    if !(report.verified() && extra_ok) {
        return Err(Error::VerificationFailed(Box::new(report)));
    }
    let mut witness = build(w, report);
    witness.verified = true;
    Ok(witness)
}

/// λ-construction on the EH region at `threshold`.
///
/// Requires exceedance independence and, for each L1 B-value carrying cells to
/// fill, a positive `P(Y_A ∈ L2, Y_B = b, Y_C ∈ L2)`.
pub fn build_prop1_witness(
    y: &FiniteDistribution,
    partition: &BlockPartition,
    threshold: &Rat,
) -> Result<Witness, Error> {
    let eh = check_eh_ci(y, partition, threshold)?;
    if !eh.holds {
        return Err(Error::PreconditionEhFailed(Box::new(eh)));
    }
    let region = Region::eh(threshold.clone())?;
    if let Some(p) = region.first_outside(y.support())? {
        return Err(Error::SupportOutsideRegion(p));
    }
    let table = y.block_table(partition)?;
    let [av, bv, cv] = observed_values(y.support(), partition)?;
    let is_l1 = |v: &BlockValue| classify_block(v, threshold) == BlockClass::L1;
    let a_l1: Vec<&BlockValue> = av.iter().filter(|v| is_l1(v)).collect();
    let c_l1: Vec<&BlockValue> = cv.iter().filter(|v| is_l1(v)).collect();

    let slices = table.slices();
    let mut filled: Vec<(Point, Rat)> = Vec::new();
    // Aggregates over all L1 B-values, for the closed form.
    let (mut agg_l1_l2, mut agg_l2_l1, mut agg_l2_l2) = (Rat::zero(), Rat::zero(), Rat::zero());
    for b in bv.iter().filter(|v| is_l1(v)) {
        let Some(cells) = slices.get(b) else { continue };
        let mut row_to_l2: BTreeMap<&BlockValue, Rat> = BTreeMap::new();
        let mut col_from_l2: BTreeMap<&BlockValue, Rat> = BTreeMap::new();
        let mut corner = Rat::zero();
        for ((a, c), m) in cells {
            match (is_l1(a), is_l1(c)) {
                (true, false) => {
                    *row_to_l2.entry(a).or_insert_with(Rat::zero) += m;
                    agg_l1_l2 += m;
                }
                (false, true) => {
                    *col_from_l2.entry(c).or_insert_with(Rat::zero) += m;
                    agg_l2_l1 += m;
                }
                (false, false) => {
                    corner += m;
                    agg_l2_l2 += m;
                }
                (true, true) => unreachable!("all-L1 cell inside the EH region"),
            }
        }
        if a_l1.is_empty() || c_l1.is_empty() {
            continue;
        }
        if corner.is_zero() {
            return Err(Error::CornerMassZero);
        }
        for a in &a_l1 {
            for c in &c_l1 {
                let (Some(r), Some(k)) = (row_to_l2.get(a), col_from_l2.get(c)) else { continue };
                filled.push((partition.assemble(a, b, c), r * k / &corner));
            }
        }
    }

    let added: Rat = filled.iter().map(|(_, m)| m).sum();
    let total = Rat::one() + added;
    let lambda = total.recip();
    let lambda_closed_form =
        if agg_l2_l2.is_zero() { None } else { Some((Rat::one() + agg_l1_l2 * agg_l2_l1 / agg_l2_l2).recip()) };
    let weights = y.atoms().map(|(p, m)| (p.clone(), m.clone())).chain(filled);
    let w = FiniteDistribution::from_weights(y.dimension(), weights)?;
    finish(w, y, partition, true, |w, report| Witness {
        w,
        method: Method::Prop1,
        mass_on_support: lambda.clone(),
        lambda: Some(lambda),
        lambda_closed_form,
        mixture: None,
        report,
        verified: false,
    })
}

/// Where each mixture factor puts its L1 mass.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum L1Placement {
    /// All L1 mass at the zero block value.
    #[default]
    Zero,
    /// Spread uniformly over the listed L1 values of blocks A, B, C. Each list must
    /// contain the zero value and only L1 values.
    Grid([Vec<BlockValue>; 3]),
}

/// Mixture construction on the cross region with the default zero placement.
pub fn build_prop2_witness(
    y: &FiniteDistribution,
    partition: &BlockPartition,
    threshold: &Rat,
) -> Result<Witness, Error> {
    build_prop2_witness_with(y, partition, threshold, &L1Placement::Zero)
}

/// Mixture construction on the cross region.
///
/// With arm masses `α_k`, the odds `p_k / (1 − p_k)` are set to `α_k / n_k`, where
/// `n_k` is the number of L1 values factor `k` spreads its remaining mass over
/// (`n_k = 1` for the zero placement, giving `p_k = α_k / (1 + α_k)`).
pub fn build_prop2_witness_with(
    y: &FiniteDistribution,
    partition: &BlockPartition,
    threshold: &Rat,
    placement: &L1Placement,
) -> Result<Witness, Error> {
    if y.dimension() != partition.dim() {
        y.block_table(partition)?;
    }
    let mut arms: [BTreeMap<BlockValue, Rat>; 3] = Default::default();
    for (p, m) in y.atoms() {
        let arm = cross_arm(partition, threshold, p).ok_or_else(|| Error::SupportNotCross(p.clone()))?;
        let slot = arm as usize;
        *arms[slot].entry(partition.block_value(p, arm)).or_insert_with(Rat::zero) += m;
    }
    let has_b = partition.has_b();

    let mut factors: Vec<BTreeMap<BlockValue, Rat>> = Vec::with_capacity(3);
    let mut p_params: [Option<Rat>; 3] = [None, None, None];
    let mut alphas: [Option<Rat>; 3] = [None, None, None];
    // Effective mixture weight on the arm once the factor is restricted to {0} ∪ arm.
    let mut q: [Rat; 3] = [Rat::zero(), Rat::zero(), Rat::zero()];
    for block in Block::ALL {
        let slot = block as usize;
        let len = partition.indices(block).len();
        let zero = BlockValue::zeros(len);
        if block == Block::B && !has_b {
            factors.push(BTreeMap::from([(zero, Rat::one())]));
            continue;
        }
        let alpha: Rat = arms[slot].values().sum();
        let l1_values = match placement {
            L1Placement::Zero => vec![zero.clone()],
            L1Placement::Grid(grids) => {
                let g = &grids[slot];
                let valid = g.contains(&zero)
                    && g.iter().all(|v| v.len() == len && classify_block(v, threshold) == BlockClass::L1);
                if !valid {
                    return Err(Error::InvalidParameter(alloc::format!(
                        "L1 grid for block {block:?} must contain zero and only L1 values"
                    )));
                }
                let mut g = g.clone();
                g.sort();
                g.dedup();
                g
            }
        };
        let n = Rat::from_integer((l1_values.len() as i64).into());
        let odds = &alpha / &n;
        let p = &odds / (Rat::one() + &odds);
        let mut factor = BTreeMap::new();
        let l1_each = (Rat::one() - &p) / &n;
        for v in l1_values {
            factor.insert(v, l1_each.clone());
        }
        if !alpha.is_zero() {
            for (v, m) in &arms[slot] {
                factor.insert(v.clone(), &p * m / &alpha);
            }
        }
        q[slot] = if p.is_zero() { Rat::zero() } else { &p / (&p + &l1_each) };
        factors.push(factor);
        p_params[slot] = Some(p);
        alphas[slot] = Some(alpha);
    }

    let mut atoms = Vec::new();
    for (a, ma) in &factors[0] {
        for (b, mb) in &factors[1] {
            for (c, mc) in &factors[2] {
                atoms.push((partition.assemble(a, b, c), ma * mb * mc));
            }
        }
    }
    let w = FiniteDistribution::new(y.dimension(), atoms)?;

    let alpha_conditions_hold = alpha_conditions(&alphas, &q, has_b);
    let independent = blocks_independent(&w, partition)?;
    let mass_on_support = w.probability(|p| y.contains(p));
    let mixture = MixtureParams { p: p_params, alpha: alphas, alpha_conditions_hold };
    finish(w, y, partition, alpha_conditions_hold && independent, |w, report| Witness {
        w,
        method: Method::Prop2,
        lambda: None,
        lambda_closed_form: None,
        mixture: Some(mixture),
        mass_on_support,
        report,
        verified: false,
    })
}

/// The arm-mass identities: with B empty, `α = p_A(1−p_C) / (p_A(1−p_C) + (1−p_A)p_C)`;
/// otherwise `α₁` and `α₂` equal the A-arm and B-arm terms over the three-term sum.
fn alpha_conditions(alphas: &[Option<Rat>; 3], p: &[Rat; 3], has_b: bool) -> bool {
    let one = Rat::one();
    let [pa, pb, pc] = p;
    if !has_b {
        let t_a = pa * (&one - pc);
        let t_c = (&one - pa) * pc;
        let denom = &t_a + &t_c;
        return !denom.is_zero() && alphas[0].as_ref() == Some(&(t_a / denom));
    }
    let t_a = pa * (&one - pb) * (&one - pc);
    let t_b = (&one - pa) * pb * (&one - pc);
    let t_c = (&one - pa) * (&one - pb) * pc;
    let denom = &t_a + &t_b + &t_c;
    !denom.is_zero() && alphas[0].as_ref() == Some(&(t_a / &denom)) && alphas[1].as_ref() == Some(&(t_b / &denom))
}

/// `W_A`, `W_B`, `W_C` mutually independent: every product cell carries the product
/// of block marginals.
fn blocks_independent(w: &FiniteDistribution, partition: &BlockPartition) -> Result<bool, Error> {
    let mut marg: [BTreeMap<BlockValue, Rat>; 3] = Default::default();
    for (p, m) in w.atoms() {
        for block in Block::ALL {
            *marg[block as usize].entry(partition.block_value(p, block)).or_insert_with(Rat::zero) += m;
        }
    }
    for (a, ma) in &marg[0] {
        for (b, mb) in &marg[1] {
            for (c, mc) in &marg[2] {
                if w.mass(&partition.assemble(a, b, c)) != ma * mb * mc {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Completion-based witness for any law passing the outer check.
///
/// Each B-slice is factored along a spanning forest of its support pattern. Product
/// cells outside the pattern take the factor product, with factors for values absent
/// from a slice set to 1. Slice weights are all 1, then everything is normalized.
pub fn build_outer_witness_generic(y: &FiniteDistribution, partition: &BlockPartition) -> Result<Witness, Error> {
    let factors = match rank_one_factors(y, partition)? {
        Ok(f) => f,
        Err(cert) => return Err(Error::OuterCheckFailed(Box::new(cert))),
    };
    let [av, _, cv] = observed_values(y.support(), partition)?;
    let one = Rat::one();
    let mut weights = Vec::new();
    for slice in &factors {
        for a in &av {
            let r = slice.row.get(a).unwrap_or(&one);
            for c in &cv {
                let k = slice.col.get(c).unwrap_or(&one);
                weights.push((partition.assemble(a, &slice.b, c), r * k));
            }
        }
    }
    let total: Rat = weights.iter().map(|(_, m)| m).sum();
    let w = FiniteDistribution::from_weights(y.dimension(), weights)?;
    finish(w, y, partition, true, |w, report| Witness {
        w,
        method: Method::Generic,
        lambda: None,
        lambda_closed_form: None,
        mixture: None,
        mass_on_support: total.recip(),
        report,
        verified: false,
    })
}

/// Dispatches on `method`.
pub fn build_witness(
    method: Method,
    y: &FiniteDistribution,
    partition: &BlockPartition,
    threshold: &Rat,
) -> Result<Witness, Error> {
    match method {
        Method::Prop1 => build_prop1_witness(y, partition, threshold),
        Method::Prop2 => build_prop2_witness(y, partition, threshold),
        Method::Generic => build_outer_witness_generic(y, partition),
    }
}
