//! Support regions, L1/L2 block classes and enumeration of in-region product sets.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use num_traits::Signed;

use crate::dist::{Block, BlockPartition, BlockValue, Point};
use crate::error::Error;
use crate::rat::{one, Rat};

/// Whether a block value lies in the closed box `[0, t]^k` (L1) or outside it (L2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BlockClass {
    L1,
    L2,
}

/// L1 iff every coordinate is `<= threshold`. The empty block value is L1.
pub fn classify_block(value: &BlockValue, threshold: &Rat) -> BlockClass {
    if value.coords().iter().all(|x| x <= threshold) {
        BlockClass::L1
    } else {
        BlockClass::L2
    }
}

/// The shape `Ω` a distribution is supported on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Region {
    /// `[0,∞)^d` minus the closed box `[0,t]^d`: some coordinate strictly exceeds `t`.
    Eh { threshold: Rat },
    /// Union of the arms where exactly one block is L2 and the other blocks are zero.
    Cross { partition: BlockPartition, threshold: Rat },
    /// An explicit finite point set.
    Explicit(BTreeSet<Point>),
}

impl Region {
    pub fn eh(threshold: Rat) -> Result<Self, Error> {
        check_threshold(&threshold)?;
        Ok(Region::Eh { threshold })
    }

    /// The EH region at threshold 1.
    pub fn eh_unit() -> Self {
        Region::Eh { threshold: one() }
    }

    pub fn cross(partition: BlockPartition, threshold: Rat) -> Result<Self, Error> {
        check_threshold(&threshold)?;
        Ok(Region::Cross { partition, threshold })
    }

    pub fn explicit(points: BTreeSet<Point>) -> Result<Self, Error> {
        let mut dims = points.iter().map(Point::dim);
        let Some(d) = dims.next() else {
            return Err(Error::InvalidParameter("explicit region has no points".into()));
        };
        if dims.any(|e| e != d) {
            return Err(Error::InvalidParameter("explicit region mixes dimensions".into()));
        }
        Ok(Region::Explicit(points))
    }

    pub fn threshold(&self) -> Option<&Rat> {
        match self {
            Region::Eh { threshold } | Region::Cross { threshold, .. } => Some(threshold),
            Region::Explicit(_) => None,
        }
    }

    pub fn contains(&self, point: &Point) -> Result<bool, Error> {
        match self {
            Region::Eh { threshold } => Ok(point.coords().iter().any(|x| x > threshold)),
            Region::Cross { partition, threshold } => {
                if point.dim() != partition.dim() {
                    return Err(dim_mismatch(partition.dim(), point.dim()));
                }
                Ok(cross_arm(partition, threshold, point).is_some())
            }
            Region::Explicit(points) => {
                if let Some(first) = points.iter().next() {
                    if first.dim() != point.dim() {
                        return Err(dim_mismatch(first.dim(), point.dim()));
                    }
                }
                Ok(points.contains(point))
            }
        }
    }

    /// First support point outside the region, if any.
    pub fn first_outside<'a>(&self, support: impl IntoIterator<Item = &'a Point>) -> Result<Option<Point>, Error> {
        for p in support {
            if !self.contains(p)? {
                return Ok(Some(p.clone()));
            }
        }
        Ok(None)
    }
}

fn check_threshold(t: &Rat) -> Result<(), Error> {
    if !t.is_positive() {
        return Err(Error::InvalidParameter(format!("threshold {t} must be positive")));
    }
    Ok(())
}

fn dim_mismatch(expected: usize, got: usize) -> Error {
    Error::InvalidIndices(format!("point has dimension {got}, region expects {expected}"))
}

/// The arm a point sits on: the unique L2 block when all other blocks are zero.
pub fn cross_arm(partition: &BlockPartition, threshold: &Rat, point: &Point) -> Option<Block> {
    let mut active = None;
    for block in Block::ALL {
        let v = partition.block_value(point, block);
        if classify_block(&v, threshold) == BlockClass::L2 {
            if active.is_some() {
                return None;
            }
            active = Some(block);
        } else if !v.is_zero() {
            return None;
        }
    }
    active
}

/// A 2×2×1 product set `{a, a'} × {b} × {c, c'}` with `a < a'` and `c < c'`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slab {
    pub a: BlockValue,
    pub a_prime: BlockValue,
    pub b: BlockValue,
    pub c: BlockValue,
    pub c_prime: BlockValue,
}

impl Slab {
    /// Corners as `[(a,c), (a',c'), (a,c'), (a',c)]` assembled into points.
    pub fn corners(&self, partition: &BlockPartition) -> [Point; 4] {
        let p = |a: &BlockValue, c: &BlockValue| partition.assemble(a, &self.b, c);
        [p(&self.a, &self.c), p(&self.a_prime, &self.c_prime), p(&self.a, &self.c_prime), p(&self.a_prime, &self.c)]
    }

    pub fn to_rectangle(&self) -> Rectangle {
        Rectangle {
            s_a: alloc::vec![self.a.clone(), self.a_prime.clone()],
            s_b: alloc::vec![self.b.clone()],
            s_c: alloc::vec![self.c.clone(), self.c_prime.clone()],
        }
    }
}

/// A product set `S_A × S_B × S_C` of observed block values; each side sorted and nonempty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rectangle {
    pub s_a: Vec<BlockValue>,
    pub s_b: Vec<BlockValue>,
    pub s_c: Vec<BlockValue>,
}

impl Rectangle {
    pub fn size(&self) -> usize {
        self.s_a.len() * self.s_b.len() * self.s_c.len()
    }

    pub fn contains(&self, partition: &BlockPartition, p: &Point) -> bool {
        let (a, b, c) = partition.split(p);
        self.s_a.binary_search(&a).is_ok() && self.s_b.binary_search(&b).is_ok() && self.s_c.binary_search(&c).is_ok()
    }

    pub fn points(&self, partition: &BlockPartition) -> Vec<Point> {
        let mut out = Vec::with_capacity(self.size());
        for a in &self.s_a {
            for b in &self.s_b {
                for c in &self.s_c {
                    out.push(partition.assemble(a, b, c));
                }
            }
        }
        out
    }
}

/// Distinct block values occurring in `support`, sorted, for blocks A, B, C.
pub fn observed_values<'a>(
    support: impl IntoIterator<Item = &'a Point>,
    partition: &BlockPartition,
) -> Result<[Vec<BlockValue>; 3], Error> {
    let mut sets: [BTreeSet<BlockValue>; 3] = Default::default();
    for p in support {
        if p.dim() != partition.dim() {
            return Err(dim_mismatch(partition.dim(), p.dim()));
        }
        let (a, b, c) = partition.split(p);
        sets[0].insert(a);
        sets[1].insert(b);
        sets[2].insert(c);
    }
    Ok(sets.map(|s| s.into_iter().collect()))
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// Number of 2×2×1 candidates the slab enumeration inspects.
pub fn slab_candidate_count(values: &[Vec<BlockValue>; 3]) -> u128 {
    let choose2 = |n: usize| (n as u128) * (n.saturating_sub(1) as u128) / 2;
    choose2(values[0].len()) * values[1].len() as u128 * choose2(values[2].len())
}

/// Every in-region slab built from block values observed in `support`.
///
/// Ordered by `b`, then the A pair, then the C pair.
pub fn enumerate_slabs<'a>(
    support: impl IntoIterator<Item = &'a Point>,
    partition: &BlockPartition,
    region: &Region,
) -> Result<Vec<Slab>, Error> {
    let [av, bv, cv] = observed_values(support, partition)?;
    let mut out = Vec::new();
    for b in &bv {
        let inside = in_region_grid(&av, b, &cv, partition, region)?;
        for (i, i2) in pairs(av.len()) {
            for (j, j2) in pairs(cv.len()) {
                if inside[i][j] && inside[i][j2] && inside[i2][j] && inside[i2][j2] {
                    out.push(Slab {
                        a: av[i].clone(),
                        a_prime: av[i2].clone(),
                        b: b.clone(),
                        c: cv[j].clone(),
                        c_prime: cv[j2].clone(),
                    });
                }
            }
        }
    }
    Ok(out)
}

fn in_region_grid(
    av: &[BlockValue],
    b: &BlockValue,
    cv: &[BlockValue],
    partition: &BlockPartition,
    region: &Region,
) -> Result<Vec<Vec<bool>>, Error> {
    av.iter().map(|a| cv.iter().map(|c| region.contains(&partition.assemble(a, b, c))).collect()).collect()
}

/// `(2^nA − 1)(2^nB − 1)(2^nC − 1)`, saturating.
pub fn rectangle_candidate_count(values: &[Vec<BlockValue>; 3]) -> u128 {
    values.iter().fold(1u128, |acc, v| {
        let subsets = if v.len() >= 127 { u128::MAX } else { (1u128 << v.len()) - 1 };
        acc.saturating_mul(subsets)
    })
}

/// Every product rectangle of observed block values that lies inside `region`.
///
/// Fails with [`Error::EnumerationTooLarge`] when the number of candidate subset
/// triples exceeds `cap`.
pub fn enumerate_rectangles<'a>(
    support: impl IntoIterator<Item = &'a Point>,
    partition: &BlockPartition,
    region: &Region,
    cap: u128,
) -> Result<Vec<Rectangle>, Error> {
    let values = observed_values(support, partition)?;
    let count = rectangle_candidate_count(&values);
    if count > cap || values.iter().any(|v| v.len() >= 64) {
        return Err(Error::EnumerationTooLarge { count, cap });
    }
    let [av, bv, cv] = &values;
    // inside[k][i][j]: point (a_i, b_k, c_j) is in the region.
    let inside: Vec<Vec<Vec<bool>>> =
        bv.iter().map(|b| in_region_grid(av, b, cv, partition, region)).collect::<Result<_, _>>()?;
    let subset = |vals: &[BlockValue], mask: u64| -> Vec<BlockValue> {
        vals.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, v)| v.clone()).collect()
    };
    let members = |mask: u64, n: usize| (0..n).filter(move |i| mask >> i & 1 == 1);
    let mut out = Vec::new();
    for ma in 1..(1u64 << av.len()) {
        for mb in 1..(1u64 << bv.len()) {
            for mc in 1..(1u64 << cv.len()) {
                let ok = members(mb, bv.len())
                    .all(|k| members(ma, av.len()).all(|i| members(mc, cv.len()).all(|j| inside[k][i][j])));
                if ok {
                    out.push(Rectangle { s_a: subset(av, ma), s_b: subset(bv, mb), s_c: subset(cv, mc) });
                }
            }
        }
    }
    out.sort();
    Ok(out)
}
