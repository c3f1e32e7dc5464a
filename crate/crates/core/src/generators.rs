//! Seeded construction of test families.
//!
//! Masses are bounded random integers normalized exactly, so every output is a
//! small-denominator rational law and the same seed always yields the same law.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::{Block, BlockPartition, BlockValue, FiniteDistribution, Point};
use crate::error::Error;
use crate::geometry::{classify_block, BlockClass, Region, Slab};
use crate::rat::{int, rat, Rat};

/// Upper bound for the random integer weights.
pub const WEIGHT_MAX: i64 = 9;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Per-coordinate sorted value lists; the grid is their Cartesian product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    values: Vec<Vec<Rat>>,
}

impl GridSpec {
    pub fn new(values: Vec<Vec<Rat>>) -> Result<Self, Error> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("grid has no coordinates".into()));
        }
        for (k, axis) in values.iter().enumerate() {
            if axis.is_empty() {
                return Err(Error::InvalidParameter(format!("grid axis {} is empty", k + 1)));
            }
            if axis.iter().any(Signed::is_negative) {
                return Err(Error::InvalidParameter(format!("grid axis {} has a negative value", k + 1)));
            }
            if axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParameter(format!("grid axis {} is not strictly increasing", k + 1)));
            }
        }
        Ok(GridSpec { values })
    }

    /// Same values on each of `dim` axes.
    pub fn uniform(dim: usize, axis: &[Rat]) -> Result<Self, Error> {
        let mut axis = axis.to_vec();
        axis.sort();
        GridSpec::new(vec![axis; dim])
    }

    /// Fails unless every axis has a value `<= threshold` and one `> threshold`.
    pub fn require_straddle(&self, threshold: &Rat) -> Result<(), Error> {
        for (k, axis) in self.values.iter().enumerate() {
            if !(axis.iter().any(|x| x <= threshold) && axis.iter().any(|x| x > threshold)) {
                return Err(Error::InvalidParameter(format!(
                    "grid axis {} does not straddle the threshold {threshold}",
                    k + 1
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn axis(&self, k: usize) -> &[Rat] {
        &self.values[k]
    }

    /// All grid points in lexicographic order.
    pub fn points(&self) -> Vec<Point> {
        let mut out: Vec<Vec<Rat>> = vec![Vec::new()];
        for axis in &self.values {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |x| {
                        let mut p = prefix.clone();
                        p.push(x.clone());
                        p
                    })
                })
                .collect();
        }
        out.into_iter().map(|c| Point::new(c).expect("nonnegative grid")).collect()
    }

    /// Distinct grid values of one block, sorted.
    pub fn block_values(&self, partition: &BlockPartition, block: Block) -> Vec<BlockValue> {
        let set: BTreeSet<BlockValue> = self.points().iter().map(|p| partition.block_value(p, block)).collect();
        set.into_iter().collect()
    }
}

fn random_weight<R: Rng>(rng: &mut R) -> Rat {
    int(rng.gen_range(1..=WEIGHT_MAX))
}

/// `condition(m(b)·f_b(a)·g_b(c), region)` with seeded positive factors.
///
/// The result is supported on exactly the grid points inside `region`.
pub fn gen_product_ci(
    seed: u64,
    grid: &GridSpec,
    partition: &BlockPartition,
    region: &Region,
) -> Result<FiniteDistribution, Error> {
    if grid.dim() != partition.dim() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} coordinates, grid has {}",
            partition.dim(),
            grid.dim()
        )));
    }
    let mut rng = rng(seed);
    let av = grid.block_values(partition, Block::A);
    let bv = grid.block_values(partition, Block::B);
    let cv = grid.block_values(partition, Block::C);
    let mut weights = Vec::new();
    for b in &bv {
        let m = random_weight(&mut rng);
        let f: Vec<Rat> = av.iter().map(|_| random_weight(&mut rng)).collect();
        let g: Vec<Rat> = cv.iter().map(|_| random_weight(&mut rng)).collect();
        for (a, fa) in av.iter().zip(&f) {
            for (c, gc) in cv.iter().zip(&g) {
                let p = partition.assemble(a, b, c);
                if region.contains(&p)? {
                    weights.push((p, &m * fa * gc));
                }
            }
        }
    }
    if weights.is_empty() {
        return Err(Error::EmptyRegionOnGrid);
    }
    FiniteDistribution::from_weights(grid.dim(), weights)
}

/// How [`gen_perturbed`] distributes `±ε` over a slab.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Perturbation {
    /// `+ε` on `(a,c)` and `(a',c')`, `−ε` on `(a,c')` and `(a',c)`. Row and column
    /// sums inside the B-slice are unchanged.
    #[default]
    Corners,
    /// `+ε` on `(a,c)` and `−ε` on `(a,c')`; only row `a` changes.
    Row,
}

/// Moves `ε` of mass around `slab` so its 2×2 minor becomes nonzero.
pub fn gen_perturbed(
    y: &FiniteDistribution,
    partition: &BlockPartition,
    slab: &Slab,
    epsilon: &Rat,
    pattern: Perturbation,
) -> Result<FiniteDistribution, Error> {
    let [d1, d2, o1, o2] = slab.corners(partition);
    if ![&d1, &d2, &o1, &o2].iter().all(|p| y.contains(p)) {
        return Err(Error::SlabNotInSupport);
    }
    if epsilon.is_zero() {
        return Ok(y.clone());
    }
    let deltas: Vec<(&Point, Rat)> = match pattern {
        Perturbation::Corners => {
            vec![(&d1, epsilon.clone()), (&d2, epsilon.clone()), (&o1, -epsilon.clone()), (&o2, -epsilon.clone())]
        }
        Perturbation::Row => vec![(&d1, epsilon.clone()), (&o1, -epsilon.clone())],
    };
    let mut atoms: Vec<(Point, Rat)> = y.atoms().map(|(p, m)| (p.clone(), m.clone())).collect();
    for (p, delta) in deltas {
        let entry = atoms.iter_mut().find(|(q, _)| q == p).expect("checked above");
        entry.1 += delta;
        if !entry.1.is_positive() {
            return Err(Error::MassWouldGoNonpositive);
        }
    }
    let out = FiniteDistribution::new(y.dimension(), atoms)?;
    let minor = out.mass(&d1) * out.mass(&d2) - out.mass(&o1) * out.mass(&o2);
    if minor.is_zero() {
        return Err(Error::MinorVanishes);
    }
    Ok(out)
}

/// Cross-supported law from explicit per-arm weights.
///
/// `arms[k]` lists `(block value, weight)` for block `k` in A, B, C order; values must
/// be L2 at `threshold`. Weights are normalized over all arms together.
pub fn cross_from_arms(
    partition: &BlockPartition,
    arms: &[Vec<(BlockValue, Rat)>; 3],
    threshold: &Rat,
) -> Result<FiniteDistribution, Error> {
    let mut weights = Vec::new();
    for block in Block::ALL {
        let arm = &arms[block as usize];
        let len = partition.indices(block).len();
        if len == 0 && !arm.is_empty() {
            return Err(Error::InvalidParameter("arm atoms given for an empty block".into()));
        }
        for (v, wgt) in arm {
            if v.len() != len || classify_block(v, threshold) != BlockClass::L2 {
                return Err(Error::InvalidParameter(format!("arm value {v:?} is not an L2 value of block {block:?}")));
            }
            let zero = |b: Block| BlockValue::zeros(partition.indices(b).len());
            let p = match block {
                Block::A => partition.assemble(v, &zero(Block::B), &zero(Block::C)),
                Block::B => partition.assemble(&zero(Block::A), v, &zero(Block::C)),
                Block::C => partition.assemble(&zero(Block::A), &zero(Block::B), v),
            };
            weights.push((p, wgt.clone()));
        }
    }
    if weights.is_empty() {
        return Err(Error::InvalidParameter("cross law needs at least one arm atom".into()));
    }
    FiniteDistribution::from_weights(partition.dim(), weights)
}

/// Draws `n` distinct L2 block values of length `len`: one random coordinate above
/// the threshold, the rest from a small ladder that straddles it.
fn random_l2_values<R: Rng>(rng: &mut R, len: usize, n: usize, threshold: &Rat) -> Result<Vec<BlockValue>, Error> {
    let above: Vec<Rat> = (1..=8).map(|i| threshold + rat(i, 2)).collect();
    let mut ladder = vec![Rat::zero(), threshold / int(2), threshold.clone()];
    ladder.extend(above.iter().cloned());
    let mut out = BTreeSet::new();
    for _ in 0..n.saturating_mul(200) {
        if out.len() == n {
            break;
        }
        let hot = rng.gen_range(0..len);
        let coords = (0..len)
            .map(|k| if k == hot { above.choose(rng) } else { ladder.choose(rng) }.expect("nonempty").clone())
            .collect();
        out.insert(BlockValue::new(coords));
    }
    if out.len() < n {
        return Err(Error::InvalidParameter(format!(
            "could not draw {n} distinct arm atoms for a block of size {len}"
        )));
    }
    Ok(out.into_iter().collect())
}

/// Random cross-supported law with `arm_atoms[k]` distinct atoms on arm `k`.
pub fn gen_cross(
    seed: u64,
    partition: &BlockPartition,
    arm_atoms: [usize; 3],
    threshold: &Rat,
) -> Result<FiniteDistribution, Error> {
    if !threshold.is_positive() {
        return Err(Error::InvalidParameter("threshold must be positive".into()));
    }
    if arm_atoms.iter().all(|&n| n == 0) {
        return Err(Error::InvalidParameter("cross law needs at least one nonempty arm".into()));
    }
    let mut rng = rng(seed);
    let mut arms: [Vec<(BlockValue, Rat)>; 3] = Default::default();
    for block in Block::ALL {
        let n = arm_atoms[block as usize];
        if n == 0 {
            continue;
        }
        let len = partition.indices(block).len();
        if len == 0 {
            return Err(Error::InvalidParameter("arm atoms requested for an empty B block".into()));
        }
        let pool = random_l2_values(&mut rng, len, n, threshold)?;
        let arm_weight = random_weight(&mut rng);
        arms[block as usize] = pool.into_iter().map(|v| (v, &arm_weight * random_weight(&mut rng))).collect();
    }
    cross_from_arms(partition, &arms, threshold)
}

/// Two-arm discretization of a pair of independent standard Pareto variables.
///
/// A-arm atoms `(x_i, 0)` carry `arm_weight · P(X ∈ [x_i, x_{i+1}))` with
/// `P(X ∈ [x, x')) = 1/x − 1/x'` and the last cell `1/x_n`; the C arm is symmetric
/// with weight `1 − arm_weight`. The result is renormalized.
pub fn gen_pareto_axes(tail_grid: &[Rat], arm_weight: &Rat) -> Result<FiniteDistribution, Error> {
    if tail_grid.is_empty() {
        return Err(Error::InvalidParameter("tail grid is empty".into()));
    }
    if tail_grid.iter().any(|x| *x <= Rat::one()) {
        return Err(Error::InvalidParameter("tail grid values must exceed 1".into()));
    }
    if arm_weight.is_negative() || *arm_weight > Rat::one() {
        return Err(Error::InvalidParameter("arm weight must lie in [0, 1]".into()));
    }
    let mut grid = tail_grid.to_vec();
    grid.sort();
    if grid.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidParameter("tail grid values must be distinct".into()));
    }
    let cells: Vec<Rat> = grid
        .iter()
        .enumerate()
        .map(|(i, x)| match grid.get(i + 1) {
            Some(next) => x.recip() - next.recip(),
            None => x.recip(),
        })
        .collect();
    let other = Rat::one() - arm_weight;
    let mut weights = Vec::new();
    for (x, cell) in grid.iter().zip(&cells) {
        weights.push((Point::new(vec![x.clone(), Rat::zero()])?, arm_weight * cell));
        weights.push((Point::new(vec![Rat::zero(), x.clone()])?, &other * cell));
    }
    FiniteDistribution::from_weights(2, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ci::{check_eh_ci, check_inner_ci, check_outer_ci};
    use crate::dist::fixtures::*;
    use crate::geometry::enumerate_slabs;
    use crate::rat::one;

    fn pair() -> BlockPartition {
        BlockPartition::pair()
    }

    fn grid023() -> GridSpec {
        GridSpec::uniform(2, &[int(0), int(2), int(3)]).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(vec![vec![int(1), int(1)]]).is_err());
        assert!(GridSpec::new(vec![vec![int(2), int(1)]]).is_err());
        assert!(GridSpec::new(vec![vec![int(-1)]]).is_err());
        assert!(grid023().require_straddle(&one()).is_ok());
        assert!(GridSpec::uniform(2, &[int(2), int(3)]).unwrap().require_straddle(&one()).is_err());
        assert_eq!(grid023().points().len(), 9);
    }

    #[test]
    fn product_ci_outputs_pass_all_checks() {
        for seed in 0..20 {
            let y = gen_product_ci(seed, &grid023(), &pair(), &Region::eh_unit()).unwrap();
            assert_eq!(y.len(), 8);
            assert!(check_eh_ci(&y, &pair(), &one()).unwrap().holds);
            assert!(check_inner_ci(&y, &pair(), &Region::eh_unit()).unwrap().holds);
            assert!(check_outer_ci(&y, &pair()).unwrap().holds);
        }
    }

    #[test]
    fn product_ci_is_deterministic_and_checks_region() {
        let a = gen_product_ci(7, &grid023(), &pair(), &Region::eh_unit()).unwrap();
        let b = gen_product_ci(7, &grid023(), &pair(), &Region::eh_unit()).unwrap();
        assert_eq!(a, b);
        let low = GridSpec::uniform(2, &[int(0), int(1)]).unwrap();
        assert_eq!(gen_product_ci(1, &low, &pair(), &Region::eh_unit()), Err(Error::EmptyRegionOnGrid));
    }

    #[test]
    fn degenerate_product_is_vacuous() {
        let g = GridSpec::new(vec![vec![int(2)], vec![int(0)]]).unwrap();
        let y = gen_product_ci(3, &g, &pair(), &Region::eh_unit()).unwrap();
        assert_eq!(y.len(), 1);
        assert!(check_eh_ci(&y, &pair(), &one()).unwrap().holds);
        assert!(check_outer_ci(&y, &pair()).unwrap().holds);
    }

    fn slab23() -> Slab {
        let v = |x| BlockValue::from_ints(&[x]);
        Slab { a: v(2), a_prime: v(3), b: BlockValue::from_ints(&[]), c: v(2), c_prime: v(3) }
    }

    #[test]
    fn perturbing_i1_by_row_gives_i2() {
        let y = gen_perturbed(&i1(), &pair(), &slab23(), &rat(1, 24), Perturbation::Row).unwrap();
        assert_eq!(y, i2());
        assert_eq!(gen_perturbed(&i1(), &pair(), &slab23(), &rat(0, 1), Perturbation::Corners).unwrap(), i1());
    }

    #[test]
    fn corner_perturbation_breaks_inner_independence() {
        let eps = rat(1, 48);
        let y = gen_perturbed(&i1(), &pair(), &slab23(), &eps, Perturbation::Corners).unwrap();
        let [d1, d2, o1, o2] = slab23().corners(&pair());
        let minor = y.mass(&d1) * y.mass(&d2) - y.mass(&o1) * y.mass(&o2);
        // Original minor 0, plus ε times the four corner masses (each 1/12).
        assert_eq!(minor, &eps * rat(4, 12));
        assert!(!check_inner_ci(&y, &pair(), &Region::eh_unit()).unwrap().holds);
        // Row and column sums of the slice are unchanged.
        assert_eq!(y.marginal(&[0]).unwrap(), i1().marginal(&[0]).unwrap());
        assert_eq!(y.marginal(&[1]).unwrap(), i1().marginal(&[1]).unwrap());
    }

    #[test]
    fn perturbation_errors() {
        assert_eq!(
            gen_perturbed(&i1(), &pair(), &slab23(), &rat(1, 12), Perturbation::Corners),
            Err(Error::MassWouldGoNonpositive)
        );
        let v = |x| BlockValue::from_ints(&[x]);
        let off = Slab { a: v(0), a_prime: v(2), b: BlockValue::from_ints(&[]), c: v(0), c_prime: v(2) };
        assert_eq!(
            gen_perturbed(&i1(), &pair(), &off, &rat(1, 100), Perturbation::Corners),
            Err(Error::SlabNotInSupport)
        );
    }

    #[test]
    fn cross_from_uniform_arms_is_i3() {
        let v = |x| BlockValue::from_ints(&[x]);
        let arms = [vec![(v(2), one()), (v(3), one())], vec![], vec![(v(2), one()), (v(3), one())]];
        assert_eq!(cross_from_arms(&pair(), &arms, &one()).unwrap(), i3());
    }

    #[test]
    fn gen_cross_outputs() {
        let cross = Region::cross(pair(), one()).unwrap();
        for seed in 0..10 {
            let y = gen_cross(seed, &pair(), [3, 0, 2], &one()).unwrap();
            assert_eq!(y.len(), 5);
            assert!(y.support().all(|p| cross.contains(p).unwrap()));
            assert!(check_eh_ci(&y, &pair(), &one()).unwrap().holds);
            assert!(check_inner_ci(&y, &pair(), &cross).unwrap().holds);
            assert!(check_outer_ci(&y, &pair()).unwrap().holds);
        }
        let single = gen_cross(1, &pair(), [2, 0, 0], &one()).unwrap();
        assert!(single.support().all(|p| p.coords()[1] == int(0)));
        assert!(gen_cross(1, &pair(), [0, 0, 0], &one()).is_err());
        assert!(gen_cross(1, &pair(), [1, 1, 1], &one()).is_err());
        assert_eq!(gen_cross(9, &pair(), [2, 0, 2], &one()), gen_cross(9, &pair(), [2, 0, 2], &one()));
    }

    #[test]
    fn pareto_axes_example() {
        let y = gen_pareto_axes(&[int(2), int(4)], &rat(1, 2)).unwrap();
        for p in [[2, 0], [4, 0], [0, 2], [0, 4]] {
            assert_eq!(y.mass(&Point::from_ints(&p)), rat(1, 4));
        }
        assert!(check_eh_ci(&y, &pair(), &one()).unwrap().holds);
        let single = gen_pareto_axes(&[int(2), int(4)], &one()).unwrap();
        assert_eq!(single.len(), 2);
        assert!(gen_pareto_axes(&[int(1)], &rat(1, 2)).is_err());
        assert!(gen_pareto_axes(&[int(2), int(2)], &rat(1, 2)).is_err());
        assert!(gen_pareto_axes(&[int(2)], &rat(3, 2)).is_err());
    }

    #[test]
    fn pareto_cells_follow_survival_function() {
        // Unequal cells: grid {3/2, 2, 5}: 2/3−1/2 = 1/6, 1/2−1/5 = 3/10, 1/5; sum 2/3.
        let y = gen_pareto_axes(&[rat(3, 2), int(2), int(5)], &rat(1, 3)).unwrap();
        let a = |x: Rat| y.mass(&Point::new(vec![x, int(0)]).unwrap());
        let scale = rat(3, 2); // 1 / (2/3)
        assert_eq!(a(rat(3, 2)), rat(1, 3) * rat(1, 6) * &scale);
        assert_eq!(a(int(2)), rat(1, 3) * rat(3, 10) * &scale);
        assert_eq!(a(int(5)), rat(1, 3) * rat(1, 5) * &scale);
    }

    #[test]
    fn random_slab_perturbation_on_grid() {
        let g = GridSpec::uniform(2, &[int(0), rat(1, 2), int(2), int(3)]).unwrap();
        let y = gen_product_ci(11, &g, &pair(), &Region::eh_unit()).unwrap();
        let slabs = enumerate_slabs(y.support(), &pair(), &Region::eh_unit()).unwrap();
        assert!(!slabs.is_empty());
        for s in slabs {
            let [_, _, o1, o2] = s.corners(&pair());
            let eps = core::cmp::min(y.mass(&o1), y.mass(&o2)) / int(2);
            let z = gen_perturbed(&y, &pair(), &s, &eps, Perturbation::Corners).unwrap();
            let v = check_inner_ci(&z, &pair(), &Region::eh_unit()).unwrap();
            assert!(!v.holds);
        }
    }
}
