//! Finite discrete distributions on nonnegative rational points.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::Error;
use crate::rat::{int, parse_rat, Rat};

/// A point of `[0, ∞)^d` with rational coordinates.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point(Vec<Rat>);

impl Point {
    pub fn new(coords: Vec<Rat>) -> Result<Self, Error> {
        if let Some(x) = coords.iter().find(|x| x.is_negative()) {
            return Err(Error::InvalidDistribution(format!("negative coordinate {x}")));
        }
        Ok(Point(coords))
    }

    /// Convenience constructor for integer grids. Panics on negative input.
    pub fn from_ints(coords: &[i64]) -> Self {
        Point::new(coords.iter().map(|&x| int(x)).collect()).expect("nonnegative coordinates")
    }

    pub fn coords(&self) -> &[Rat] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_coords(self) -> Vec<Rat> {
        self.0
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tuple(f, &self.0)
    }
}

fn write_tuple(f: &mut fmt::Formatter<'_>, xs: &[Rat]) -> fmt::Result {
    f.write_str("(")?;
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{x}")?;
    }
    f.write_str(")")
}

/// Which block of a partition a coordinate belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Block {
    A,
    B,
    C,
}

impl Block {
    pub const ALL: [Block; 3] = [Block::A, Block::B, Block::C];
}

/// The coordinates of a point restricted to one block, in the block's index order.
///
/// The B block may be empty, in which case every point has the same (empty) B value.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockValue(Vec<Rat>);

impl BlockValue {
    pub fn new(coords: Vec<Rat>) -> Self {
        BlockValue(coords)
    }

    pub fn from_ints(coords: &[i64]) -> Self {
        BlockValue(coords.iter().map(|&x| int(x)).collect())
    }

    /// The all-zeros value of the given length.
    pub fn zeros(len: usize) -> Self {
        BlockValue((0..len).map(|_| Rat::zero()).collect())
    }

    pub fn coords(&self) -> &[Rat] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }
}

impl fmt::Debug for BlockValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tuple(f, &self.0)
    }
}

/// Split of the coordinate indices `0..d` into blocks A, B, C.
///
/// Indices are zero-based. A and C must be nonempty; B may be empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockPartition {
    dim: usize,
    a: Vec<usize>,
    b: Vec<usize>,
    c: Vec<usize>,
}

impl BlockPartition {
    pub fn new(dim: usize, a: Vec<usize>, b: Vec<usize>, c: Vec<usize>) -> Result<Self, Error> {
        if a.is_empty() || c.is_empty() {
            return Err(Error::InvalidPartition("blocks A and C must be nonempty".into()));
        }
        let mut seen = BTreeSet::new();
        for &i in a.iter().chain(&b).chain(&c) {
            if i >= dim {
                return Err(Error::InvalidPartition(format!("index {} out of range 1..={dim}", i + 1)));
            }
            if !seen.insert(i) {
                return Err(Error::InvalidPartition(format!("index {} used twice", i + 1)));
            }
        }
        if seen.len() != dim {
            return Err(Error::InvalidPartition(format!("blocks do not cover all {dim} coordinates")));
        }
        Ok(BlockPartition { dim, a, b, c })
    }

    /// `A = {1}, C = {2}` in one-based terms.
    pub fn pair() -> Self {
        BlockPartition { dim: 2, a: alloc::vec![0], b: Vec::new(), c: alloc::vec![1] }
    }

    /// `A = {1}, B = {2}, C = {3}` in one-based terms.
    pub fn triple() -> Self {
        BlockPartition { dim: 3, a: alloc::vec![0], b: alloc::vec![1], c: alloc::vec![2] }
    }

    /// Parses the one-based form `"A=1,2;B=;C=3"`.
    pub fn parse(spec: &str, dim: usize) -> Result<Self, Error> {
        let mut blocks: [Option<Vec<usize>>; 3] = [None, None, None];
        for part in spec.split(';') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (name, list) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidPartition(format!("expected NAME=indices, got {part:?}")))?;
            let slot = match name.trim() {
                "A" | "a" => 0,
                "B" | "b" => 1,
                "C" | "c" => 2,
                other => return Err(Error::InvalidPartition(format!("unknown block {other:?}"))),
            };
            let mut idx = Vec::new();
            for tok in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                let one_based: usize =
                    tok.parse().map_err(|_| Error::InvalidPartition(format!("bad index {tok:?}")))?;
                if one_based == 0 {
                    return Err(Error::InvalidPartition("indices are one-based".into()));
                }
                idx.push(one_based - 1);
            }
            if blocks[slot].replace(idx).is_some() {
                return Err(Error::InvalidPartition(format!("block {name} given twice")));
            }
        }
        let [a, b, c] = blocks;
        BlockPartition::new(dim, a.unwrap_or_default(), b.unwrap_or_default(), c.unwrap_or_default())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn indices(&self, block: Block) -> &[usize] {
        match block {
            Block::A => &self.a,
            Block::B => &self.b,
            Block::C => &self.c,
        }
    }

    pub fn has_b(&self) -> bool {
        !self.b.is_empty()
    }

    /// The partition with the roles of A and C exchanged.
    pub fn swapped(&self) -> Self {
        BlockPartition { dim: self.dim, a: self.c.clone(), b: self.b.clone(), c: self.a.clone() }
    }

    pub fn block_value(&self, point: &Point, block: Block) -> BlockValue {
        BlockValue(self.indices(block).iter().map(|&i| point.0[i].clone()).collect())
    }

    pub fn split(&self, point: &Point) -> (BlockValue, BlockValue, BlockValue) {
        (self.block_value(point, Block::A), self.block_value(point, Block::B), self.block_value(point, Block::C))
    }

    /// Inverse of [`split`](Self::split).
    pub fn assemble(&self, a: &BlockValue, b: &BlockValue, c: &BlockValue) -> Point {
        let mut coords: Vec<Rat> = (0..self.dim).map(|_| Rat::zero()).collect();
        for (block, value) in [(Block::A, a), (Block::B, b), (Block::C, c)] {
            for (&i, x) in self.indices(block).iter().zip(&value.0) {
                coords[i] = x.clone();
            }
        }
        Point(coords)
    }

    fn check_dim(&self, dim: usize) -> Result<(), Error> {
        if self.dim != dim {
            return Err(Error::InvalidPartition(format!(
                "partition covers {} coordinates, distribution has {dim}",
                self.dim
            )));
        }
        Ok(())
    }
}

impl fmt::Display for BlockPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[usize]| v.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",");
        write!(f, "A={};B={};C={}", list(&self.a), list(&self.b), list(&self.c))
    }
}

/// A probability law with finitely many atoms and exact rational masses.
///
/// Invariants: every stored mass is strictly positive, masses sum to exactly one,
/// and all points share the same dimension. Zero-mass points are simply absent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteDistribution {
    dim: usize,
    atoms: BTreeMap<Point, Rat>,
}

impl FiniteDistribution {
    /// Validates and builds a distribution. Duplicate points are rejected.
    pub fn new(dim: usize, atoms: impl IntoIterator<Item = (Point, Rat)>) -> Result<Self, Error> {
        let mut map = BTreeMap::new();
        let mut total = Rat::zero();
        for (p, m) in atoms {
            if p.dim() != dim {
                return Err(Error::InvalidDistribution(format!(
                    "point {p:?} has dimension {}, expected {dim}",
                    p.dim()
                )));
            }
            if !m.is_positive() {
                return Err(Error::InvalidDistribution(format!("mass {m} at {p:?} is not positive")));
            }
            total += &m;
            if map.insert(p.clone(), m).is_some() {
                return Err(Error::InvalidDistribution(format!("duplicate point {p:?}")));
            }
        }
        if map.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!("masses sum to {total}, not 1")));
        }
        Ok(FiniteDistribution { dim, atoms: map })
    }

    /// Normalizes nonnegative weights. Zero weights are dropped and repeated points accumulate.
    pub fn from_weights(dim: usize, weights: impl IntoIterator<Item = (Point, Rat)>) -> Result<Self, Error> {
        let mut map: BTreeMap<Point, Rat> = BTreeMap::new();
        for (p, w) in weights {
            if p.dim() != dim {
                return Err(Error::InvalidDistribution(format!(
                    "point {p:?} has dimension {}, expected {dim}",
                    p.dim()
                )));
            }
            if w.is_negative() {
                return Err(Error::InvalidDistribution(format!("weight {w} at {p:?} is negative")));
            }
            if !w.is_zero() {
                *map.entry(p).or_insert_with(Rat::zero) += w;
            }
        }
        let total: Rat = map.values().sum();
        if total.is_zero() {
            return Err(Error::ZeroProbabilityEvent);
        }
        for m in map.values_mut() {
            *m /= &total;
        }
        Ok(FiniteDistribution { dim, atoms: map })
    }

    /// Unit mass at one point.
    pub fn point_mass(p: Point) -> Self {
        let dim = p.dim();
        let mut atoms = BTreeMap::new();
        atoms.insert(p, Rat::one());
        FiniteDistribution { dim, atoms }
    }

    /// One-dimensional law from `(value, mass)` pairs.
    pub fn univariate(pairs: &[(Rat, Rat)]) -> Result<Self, Error> {
        FiniteDistribution::new(1, pairs.iter().map(|(x, m)| (Point(alloc::vec![x.clone()]), m.clone())))
    }

    /// Parses `[("0","1/2"), ...]`-style string pairs for a one-dimensional law.
    pub fn univariate_str(pairs: &[(&str, &str)]) -> Result<Self, Error> {
        let parsed: Result<Vec<_>, Error> = pairs.iter().map(|(x, m)| Ok((parse_rat(x)?, parse_rat(m)?))).collect();
        Self::univariate(&parsed?)
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Atoms in canonical (lexicographic) point order.
    pub fn atoms(&self) -> impl Iterator<Item = (&Point, &Rat)> {
        self.atoms.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &Point> {
        self.atoms.keys()
    }

    pub fn support_set(&self) -> BTreeSet<Point> {
        self.atoms.keys().cloned().collect()
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.atoms.contains_key(p)
    }

    /// Mass at `p`; zero when `p` is not an atom.
    pub fn mass(&self, p: &Point) -> Rat {
        self.atoms.get(p).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn probability(&self, event: impl Fn(&Point) -> bool) -> Rat {
        self.atoms.iter().filter(|(p, _)| event(p)).map(|(_, m)| m).sum()
    }

    /// Pushforward onto the given zero-based coordinates, in the order listed.
    pub fn marginal(&self, indices: &[usize]) -> Result<Self, Error> {
        if indices.is_empty() {
            return Err(Error::InvalidIndices("empty index set".into()));
        }
        let mut seen = BTreeSet::new();
        for &i in indices {
            if i >= self.dim {
                return Err(Error::InvalidIndices(format!("index {} out of range 1..={}", i + 1, self.dim)));
            }
            if !seen.insert(i) {
                return Err(Error::InvalidIndices(format!("index {} repeated", i + 1)));
            }
        }
        let mut out: BTreeMap<Point, Rat> = BTreeMap::new();
        for (p, m) in &self.atoms {
            let q = Point(indices.iter().map(|&i| p.0[i].clone()).collect());
            *out.entry(q).or_insert_with(Rat::zero) += m;
        }
        Ok(FiniteDistribution { dim: indices.len(), atoms: out })
    }

    /// Restriction to `event`, renormalized.
    pub fn condition(&self, event: impl Fn(&Point) -> bool) -> Result<Self, Error> {
        let kept: BTreeMap<Point, Rat> =
            self.atoms.iter().filter(|(p, _)| event(p)).map(|(p, m)| (p.clone(), m.clone())).collect();
        let total: Rat = kept.values().sum();
        if total.is_zero() {
            return Err(Error::ZeroProbabilityEvent);
        }
        let atoms = kept.into_iter().map(|(p, m)| (p, m / &total)).collect();
        Ok(FiniteDistribution { dim: self.dim, atoms })
    }

    /// Restriction to a finite set of points, renormalized.
    pub fn condition_on_set(&self, set: &BTreeSet<Point>) -> Result<Self, Error> {
        self.condition(|p| set.contains(p))
    }

    /// Independent joint law; coordinates are concatenated in factor order.
    pub fn product(factors: &[FiniteDistribution]) -> Result<Self, Error> {
        let (first, rest) =
            factors.split_first().ok_or_else(|| Error::InvalidIndices("product of no factors".into()))?;
        let mut acc = first.clone();
        for f in rest {
            let mut atoms = BTreeMap::new();
            for (p, m) in &acc.atoms {
                for (q, n) in &f.atoms {
                    let mut coords = p.0.clone();
                    coords.extend(q.0.iter().cloned());
                    atoms.insert(Point(coords), m * n);
                }
            }
            acc = FiniteDistribution { dim: acc.dim + f.dim, atoms };
        }
        Ok(acc)
    }

    /// Re-indexes atoms as `(a, b, c)` block triples.
    pub fn block_table(&self, partition: &BlockPartition) -> Result<BlockTable, Error> {
        partition.check_dim(self.dim)?;
        let cells = self.atoms.iter().map(|(p, m)| (partition.split(p), m.clone())).collect::<BTreeMap<_, _>>();
        Ok(BlockTable { partition: partition.clone(), cells })
    }

    /// Maps every point through `f`; masses of colliding images accumulate.
    pub fn map_points(&self, dim: usize, f: impl Fn(&Point) -> Point) -> Result<Self, Error> {
        FiniteDistribution::from_weights(dim, self.atoms.iter().map(|(p, m)| (f(p), m.clone())))
    }

    /// Plain-text dump, one atom per line.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        for (p, m) in &self.atoms {
            s.push_str(&format!("{p:?}: {m}\n"));
        }
        s
    }
}

/// Joint masses keyed by `(A value, B value, C value)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockTable {
    partition: BlockPartition,
    cells: BTreeMap<(BlockValue, BlockValue, BlockValue), Rat>,
}

impl BlockTable {
    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn cells(&self) -> impl Iterator<Item = (&(BlockValue, BlockValue, BlockValue), &Rat)> {
        self.cells.iter()
    }

    pub fn mass(&self, a: &BlockValue, b: &BlockValue, c: &BlockValue) -> Rat {
        self.cells.get(&(a.clone(), b.clone(), c.clone())).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn values(&self, block: Block) -> BTreeSet<BlockValue> {
        self.cells
            .keys()
            .map(|(a, b, c)| match block {
                Block::A => a.clone(),
                Block::B => b.clone(),
                Block::C => c.clone(),
            })
            .collect()
    }

    /// Splits the table into per-B-value slices of `(a, c) -> mass`.
    pub fn slices(&self) -> BTreeMap<BlockValue, BTreeMap<(BlockValue, BlockValue), Rat>> {
        let mut out: BTreeMap<BlockValue, BTreeMap<_, _>> = BTreeMap::new();
        for ((a, b, c), m) in &self.cells {
            out.entry(b.clone()).or_default().insert((a.clone(), c.clone()), m.clone());
        }
        out
    }

    /// Reassembles the original distribution.
    pub fn assemble(&self) -> FiniteDistribution {
        let atoms = self.cells.iter().map(|((a, b, c), m)| (self.partition.assemble(a, b, c), m.clone())).collect();
        FiniteDistribution { dim: self.partition.dim, atoms }
    }
}
