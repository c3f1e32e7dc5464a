//! Exact decision procedures for plain, exceedance (EH), inner and outer
//! conditional independence of the A and C blocks given the B block.
//!
//! Every negative verdict carries a [`Certificate`] that can be re-checked
//! against the distribution with [`Certificate::recheck`].

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::dist::{BlockPartition, BlockTable, BlockValue, FiniteDistribution};
use crate::error::Error;
use crate::geometry::{self, Rectangle, Region, Slab};
use crate::rat::Rat;

/// Default cap on rectangle candidates for the brute-force inner check.
pub const DEFAULT_RECT_CAP: u128 = 1 << 22;
/// Default cap on slab candidates for the reduced inner check.
pub const DEFAULT_SLAB_CAP: u128 = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Notion {
    Plain,
    Eh,
    Inner,
    InnerBruteForce,
    Outer,
}

impl Notion {
    pub fn name(self) -> &'static str {
        match self {
            Notion::Plain => "plain",
            Notion::Eh => "eh",
            Notion::Inner => "inner",
            Notion::InnerBruteForce => "inner-bf",
            Notion::Outer => "outer",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "plain" => Notion::Plain,
            "eh" => Notion::Eh,
            "inner" => Notion::Inner,
            "inner-bf" => Notion::InnerBruteForce,
            "outer" => Notion::Outer,
            _ => return None,
        })
    }
}

/// The event a plain CI statement was evaluated under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Conditioning {
    Unconditional,
    /// `Y_k > threshold`, zero-based `k`.
    Exceedance {
        coordinate: usize,
        threshold: Rat,
    },
    Rectangle(Rectangle),
}

impl Conditioning {
    fn apply(&self, dist: &FiniteDistribution, partition: &BlockPartition) -> Result<FiniteDistribution, Error> {
        match self {
            Conditioning::Unconditional => Ok(dist.clone()),
            Conditioning::Exceedance { coordinate, threshold } => {
                if *coordinate >= dist.dimension() {
                    return Err(Error::InvalidIndices(alloc::format!("coordinate {}", coordinate + 1)));
                }
                dist.condition(|p| &p.coords()[*coordinate] > threshold)
            }
            Conditioning::Rectangle(r) => dist.condition(|p| r.contains(partition, p)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Certificate {
    /// `P(a,b,c)·P(b) ≠ P(a,b)·P(b,c)` under `given`.
    Triple { given: Conditioning, a: BlockValue, b: BlockValue, c: BlockValue },
    /// An in-region slab with a nonzero 2×2 minor.
    Slab { slab: Slab, minor: Rat },
    /// A cycle of support cells in the B-slice `b` whose alternating mass product is not 1.
    /// Consecutive cells share an A value or a C value, and the last cell closes back to the first.
    Cycle { b: BlockValue, cells: Vec<(BlockValue, BlockValue)>, ratio: Rat },
}

impl Certificate {
    /// True iff the certificate describes a genuine violation for `dist`.
    pub fn recheck(&self, dist: &FiniteDistribution, partition: &BlockPartition) -> bool {
        match self {
            Certificate::Triple { given, a, b, c } => {
                let Ok(cond) = given.apply(dist, partition) else { return false };
                let Ok(table) = cond.block_table(partition) else { return false };
                let m = Marginals::new(&table);
                !m.balanced(&table, a, b, c)
            }
            Certificate::Slab { slab, .. } => {
                let [d1, d2, o1, o2] = slab.corners(partition);
                dist.mass(&d1) * dist.mass(&d2) != dist.mass(&o1) * dist.mass(&o2)
            }
            Certificate::Cycle { b, cells, .. } => match cycle_ratio(dist, partition, b, cells) {
                Some(r) => !r.is_one(),
                None => false,
            },
        }
    }
}

/// Alternating product `m(e0)/m(e1)·m(e2)/m(e3)…` around a closed cycle, or
/// `None` when the cells do not form a valid cycle of support atoms.
pub fn cycle_ratio(
    dist: &FiniteDistribution,
    partition: &BlockPartition,
    b: &BlockValue,
    cells: &[(BlockValue, BlockValue)],
) -> Option<Rat> {
    let n = cells.len();
    if n < 4 || n % 2 == 1 {
        return None;
    }
    // Edges alternate between sharing the C endpoint and the A endpoint with the next cell.
    for i in 0..n {
        let (a0, c0) = &cells[i];
        let (a1, c1) = &cells[(i + 1) % n];
        let shares_c = c0 == c1 && a0 != a1;
        let shares_a = a0 == a1 && c0 != c1;
        if i % 2 == 0 && !shares_c || i % 2 == 1 && !shares_a {
            return None;
        }
    }
    let mut ratio = Rat::one();
    for (i, (a, c)) in cells.iter().enumerate() {
        let m = dist.mass(&partition.assemble(a, b, c));
        if m.is_zero() {
            return None;
        }
        if i % 2 == 0 {
            ratio *= m;
        } else {
            ratio /= m;
        }
    }
    Some(ratio)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CiVerdict {
    pub notion: Notion,
    pub holds: bool,
    pub certificate: Option<Certificate>,
}

impl CiVerdict {
    fn pass(notion: Notion) -> Self {
        CiVerdict { notion, holds: true, certificate: None }
    }

    fn fail(notion: Notion, certificate: Certificate) -> Self {
        CiVerdict { notion, holds: false, certificate: Some(certificate) }
    }
}

struct Marginals {
    b: BTreeMap<BlockValue, Rat>,
    ab: BTreeMap<(BlockValue, BlockValue), Rat>,
    bc: BTreeMap<(BlockValue, BlockValue), Rat>,
}

impl Marginals {
    fn new(table: &BlockTable) -> Self {
        let mut m = Marginals { b: BTreeMap::new(), ab: BTreeMap::new(), bc: BTreeMap::new() };
        for ((a, b, c), mass) in table.cells() {
            *m.b.entry(b.clone()).or_insert_with(Rat::zero) += mass;
            *m.ab.entry((a.clone(), b.clone())).or_insert_with(Rat::zero) += mass;
            *m.bc.entry((b.clone(), c.clone())).or_insert_with(Rat::zero) += mass;
        }
        m
    }

    fn balanced(&self, table: &BlockTable, a: &BlockValue, b: &BlockValue, c: &BlockValue) -> bool {
        let get = |map: &BTreeMap<(BlockValue, BlockValue), Rat>, k: (BlockValue, BlockValue)| {
            map.get(&k).cloned().unwrap_or_else(Rat::zero)
        };
        let pb = self.b.get(b).cloned().unwrap_or_else(Rat::zero);
        table.mass(a, b, c) * pb == get(&self.ab, (a.clone(), b.clone())) * get(&self.bc, (b.clone(), c.clone()))
    }
}

fn plain_violation(dist: &FiniteDistribution, partition: &BlockPartition) -> Result<Option<[BlockValue; 3]>, Error> {
    let table = dist.block_table(partition)?;
    let marg = Marginals::new(&table);
    let [av, bv, cv] = geometry::observed_values(dist.support(), partition)?;
    for a in &av {
        for b in &bv {
            for c in &cv {
                if !marg.balanced(&table, a, b, c) {
                    return Ok(Some([a.clone(), b.clone(), c.clone()]));
                }
            }
        }
    }
    Ok(None)
}

/// `Y_A ⊥ Y_C | Y_B` in the ordinary sense.
pub fn check_plain_ci(dist: &FiniteDistribution, partition: &BlockPartition) -> Result<CiVerdict, Error> {
    Ok(match plain_violation(dist, partition)? {
        None => CiVerdict::pass(Notion::Plain),
        Some([a, b, c]) => {
            CiVerdict::fail(Notion::Plain, Certificate::Triple { given: Conditioning::Unconditional, a, b, c })
        }
    })
}

/// Plain CI under each single-coordinate exceedance `Y_k > threshold`.
///
/// Exceedance events of probability zero impose no constraint and are skipped.
pub fn check_eh_ci(dist: &FiniteDistribution, partition: &BlockPartition, threshold: &Rat) -> Result<CiVerdict, Error> {
    dist.block_table(partition)?;
    for k in 0..dist.dimension() {
        let given = Conditioning::Exceedance { coordinate: k, threshold: threshold.clone() };
        let cond = match given.apply(dist, partition) {
            Ok(c) => c,
            Err(Error::ZeroProbabilityEvent) => continue,
            Err(e) => return Err(e),
        };
        if let Some([a, b, c]) = plain_violation(&cond, partition)? {
            return Ok(CiVerdict::fail(Notion::Eh, Certificate::Triple { given, a, b, c }));
        }
    }
    Ok(CiVerdict::pass(Notion::Eh))
}

fn require_inside(dist: &FiniteDistribution, region: &Region) -> Result<(), Error> {
    match region.first_outside(dist.support())? {
        Some(p) => Err(Error::SupportOutsideRegion(p)),
        None => Ok(()),
    }
}

/// Inner independence via vanishing 2×2 minors on every in-region slab.
pub fn check_inner_ci(
    dist: &FiniteDistribution,
    partition: &BlockPartition,
    region: &Region,
) -> Result<CiVerdict, Error> {
    check_inner_ci_capped(dist, partition, region, DEFAULT_SLAB_CAP)
}

pub fn check_inner_ci_capped(
    dist: &FiniteDistribution,
    partition: &BlockPartition,
    region: &Region,
    slab_cap: u128,
) -> Result<CiVerdict, Error> {
    dist.block_table(partition)?;
    require_inside(dist, region)?;
    let values = geometry::observed_values(dist.support(), partition)?;
    let count = geometry::slab_candidate_count(&values);
    if count > slab_cap {
        return Err(Error::EnumerationTooLarge { count, cap: slab_cap });
    }
    for slab in geometry::enumerate_slabs(dist.support(), partition, region)? {
        let [d1, d2, o1, o2] = slab.corners(partition);
        let minor = dist.mass(&d1) * dist.mass(&d2) - dist.mass(&o1) * dist.mass(&o2);
        if !minor.is_zero() {
            return Ok(CiVerdict::fail(Notion::Inner, Certificate::Slab { slab, minor }));
        }
    }
    Ok(CiVerdict::pass(Notion::Inner))
}

/// Inner independence straight from the definition: plain CI after conditioning on
/// every positive-mass in-region rectangle. Rectangles are tried smallest first.
pub fn check_inner_ci_bruteforce(
    dist: &FiniteDistribution,
    partition: &BlockPartition,
    region: &Region,
    rect_cap: u128,
) -> Result<CiVerdict, Error> {
    dist.block_table(partition)?;
    require_inside(dist, region)?;
    let mut rects = geometry::enumerate_rectangles(dist.support(), partition, region, rect_cap)?;
    rects.sort_by(|x, y| x.size().cmp(&y.size()).then_with(|| x.cmp(y)));
    for r in rects {
        let given = Conditioning::Rectangle(r);
        let cond = match given.apply(dist, partition) {
            Ok(c) => c,
            Err(Error::ZeroProbabilityEvent) => continue,
            Err(e) => return Err(e),
        };
        if let Some([a, b, c]) = plain_violation(&cond, partition)? {
            return Ok(CiVerdict::fail(Notion::InnerBruteForce, Certificate::Triple { given, a, b, c }));
        }
    }
    Ok(CiVerdict::pass(Notion::InnerBruteForce))
}

/// Rank-one factors of one B-slice: `row[a] · col[c]` equals the mass of every
/// support cell `(a, b, c)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceFactors {
    pub b: BlockValue,
    pub row: BTreeMap<BlockValue, Rat>,
    pub col: BTreeMap<BlockValue, Rat>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Node {
    A(usize),
    C(usize),
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Factor one slice along a spanning forest, then test every non-tree cell.
#[allow(clippy::result_large_err)]
fn factor_slice(b: &BlockValue, cells: &BTreeMap<(BlockValue, BlockValue), Rat>) -> Result<SliceFactors, Certificate> {
    let av: Vec<BlockValue> = {
        let mut v: Vec<_> = cells.keys().map(|(a, _)| a.clone()).collect();
        v.sort();
        v.dedup();
        v
    };
    let cv: Vec<BlockValue> = {
        let mut v: Vec<_> = cells.keys().map(|(_, c)| c.clone()).collect();
        v.sort();
        v.dedup();
        v
    };
    let na = av.len();
    let idx_a = |a: &BlockValue| av.binary_search(a).expect("observed");
    let idx_c = |c: &BlockValue| cv.binary_search(c).expect("observed");
    let edges: Vec<(usize, usize, &Rat)> = cells.iter().map(|((a, c), m)| (idx_a(a), idx_c(c), m)).collect();

    let mut uf: Vec<usize> = (0..na + cv.len()).collect();
    let mut tree_adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); na + cv.len()];
    let mut non_tree = Vec::new();
    for (e, &(i, j, _)) in edges.iter().enumerate() {
        let (ri, rj) = (find(&mut uf, i), find(&mut uf, na + j));
        if ri == rj {
            non_tree.push(e);
        } else {
            uf[ri] = rj;
            tree_adj[i].push((na + j, e));
            tree_adj[na + j].push((i, e));
        }
    }

    let node = |k: usize| if k < na { Node::A(k) } else { Node::C(k - na) };
    let mut row: Vec<Option<Rat>> = vec![None; na];
    let mut col: Vec<Option<Rat>> = vec![None; cv.len()];
    let mut parent: Vec<Option<usize>> = vec![None; na + cv.len()];
    let mut depth = vec![0usize; na + cv.len()];
    let mut seen = vec![false; na + cv.len()];
    for root in 0..na {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        row[root] = Some(Rat::one());
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &(v, e) in &tree_adj[u] {
                if seen[v] {
                    continue;
                }
                seen[v] = true;
                parent[v] = Some(u);
                depth[v] = depth[u] + 1;
                let mass = edges[e].2;
                match (node(u), node(v)) {
                    (Node::A(i), Node::C(j)) => col[j] = Some(mass / row[i].as_ref().expect("assigned")),
                    (Node::C(j), Node::A(i)) => row[i] = Some(mass / col[j].as_ref().expect("assigned")),
                    _ => unreachable!("bipartite forest"),
                }
                queue.push_back(v);
            }
        }
    }
    let row: Vec<Rat> = row.into_iter().map(|x| x.expect("every A value lies on an edge")).collect();
    let col: Vec<Rat> = col.into_iter().map(|x| x.expect("every C value lies on an edge")).collect();

    for e in non_tree {
        let (i, j, mass) = edges[e];
        if &(&row[i] * &col[j]) == mass {
            continue;
        }
        // Cycle: the offending cell, then the tree path from C(j) back to A(i).
        let mut up_c = vec![na + j];
        let mut up_a = vec![i];
        let (mut x, mut y) = (na + j, i);
        while x != y {
            if depth[x] >= depth[y] {
                x = parent[x].expect("same tree");
                up_c.push(x);
            } else {
                y = parent[y].expect("same tree");
                up_a.push(y);
            }
        }
        up_a.pop();
        let mut walk = vec![i];
        walk.extend(up_c);
        walk.extend(up_a.into_iter().rev());
        let cells_on_cycle: Vec<(BlockValue, BlockValue)> = walk
            .windows(2)
            .map(|w| match (node(w[0]), node(w[1])) {
                (Node::A(p), Node::C(q)) | (Node::C(q), Node::A(p)) => (av[p].clone(), cv[q].clone()),
                _ => unreachable!("bipartite walk"),
            })
            .collect();
        let mut ratio = Rat::one();
        for (k, cell) in cells_on_cycle.iter().enumerate() {
            let m = &cells[cell];
            if k % 2 == 0 {
                ratio *= m;
            } else {
                ratio /= m;
            }
        }
        return Err(Certificate::Cycle { b: b.clone(), cells: cells_on_cycle, ratio });
    }

    Ok(SliceFactors { b: b.clone(), row: av.into_iter().zip(row).collect(), col: cv.into_iter().zip(col).collect() })
}

/// Positive rank-one factorization of every B-slice on its observed pattern, or the
/// first inconsistent cycle found.
pub fn rank_one_factors(
    dist: &FiniteDistribution,
    partition: &BlockPartition,
) -> Result<Result<Vec<SliceFactors>, Certificate>, Error> {
    let table = dist.block_table(partition)?;
    let mut out = Vec::new();
    for (b, cells) in table.slices() {
        match factor_slice(&b, &cells) {
            Ok(f) => out.push(f),
            Err(cert) => return Ok(Err(cert)),
        }
    }
    Ok(Ok(out))
}

/// Outer independence, with `Ω` taken to be the support of `dist`.
pub fn check_outer_ci(dist: &FiniteDistribution, partition: &BlockPartition) -> Result<CiVerdict, Error> {
    Ok(match rank_one_factors(dist, partition)? {
        Ok(_) => CiVerdict::pass(Notion::Outer),
        Err(cert) => CiVerdict::fail(Notion::Outer, cert),
    })
}

/// Runs one notion. `region` is needed for the inner checks, `threshold` for EH.
pub fn check(
    notion: Notion,
    dist: &FiniteDistribution,
    partition: &BlockPartition,
    region: &Region,
    threshold: &Rat,
    caps: Caps,
) -> Result<CiVerdict, Error> {
    match notion {
        Notion::Plain => check_plain_ci(dist, partition),
        Notion::Eh => check_eh_ci(dist, partition, threshold),
        Notion::Inner => check_inner_ci_capped(dist, partition, region, caps.slab),
        Notion::InnerBruteForce => check_inner_ci_bruteforce(dist, partition, region, caps.rect),
        Notion::Outer => check_outer_ci(dist, partition),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    pub slab: u128,
    pub rect: u128,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { slab: DEFAULT_SLAB_CAP, rect: DEFAULT_RECT_CAP }
    }
}
