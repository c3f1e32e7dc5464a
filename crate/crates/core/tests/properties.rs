//! Invariants of the checks and builders on random small laws.

use proptest::prelude::*;
use xci_core::ci::{check_eh_ci, check_inner_ci, check_inner_ci_bruteforce, check_outer_ci, check_plain_ci};
use xci_core::generators::{gen_cross, gen_perturbed, gen_product_ci, GridSpec, Perturbation};
use xci_core::geometry::enumerate_slabs;
use xci_core::rat::{int, rat};
use xci_core::witness::{build_outer_witness_generic, verify_witness};
use xci_core::{parse_rat, BlockPartition, FiniteDistribution, Point, Rat, Region};

const AXIS: [(i64, i64); 4] = [(0, 1), (1, 2), (2, 1), (3, 1)];

/// Random law on a subset of `AXIS^dim` with integer weights in 1..=9.
fn law(dim: usize) -> impl Strategy<Value = FiniteDistribution> {
    let cells = AXIS.len().pow(dim as u32);
    proptest::collection::btree_map(0..cells, 1i64..=9, 1..=cells.min(12)).prop_map(move |picked| {
        let atoms = picked.into_iter().map(|(mut idx, w)| {
            let mut coords = Vec::with_capacity(dim);
            for _ in 0..dim {
                let (n, d) = AXIS[idx % AXIS.len()];
                coords.push(rat(n, d));
                idx /= AXIS.len();
            }
            (Point::new(coords).unwrap(), int(w))
        });
        FiniteDistribution::from_weights(dim, atoms.collect::<Vec<_>>()).unwrap()
    })
}

fn partition(dim: usize) -> BlockPartition {
    if dim == 2 {
        BlockPartition::pair()
    } else {
        BlockPartition::triple()
    }
}

fn everywhere(dist: &FiniteDistribution) -> Region {
    Region::explicit(dist.support_set()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 192, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn rationals_round_trip(n in -10_000i64..10_000, d in 1i64..5_000) {
        let x = rat(n, d);
        prop_assert_eq!(parse_rat(&x.to_string()).unwrap(), x);
    }

    #[test]
    fn conditioning_is_idempotent(y in law(2), t in 0i64..4) {
        let t = int(t);
        let event = |p: &Point| p.coords().iter().any(|x| x > &t);
        if let Ok(once) = y.condition(event) {
            prop_assert_eq!(once.condition(event).unwrap(), once.clone());
            prop_assert_eq!(once.atoms().map(|(_, m)| m.clone()).sum::<Rat>(), int(1));
        }
    }

    #[test]
    fn marginals_of_products_are_factors(u in law(1), v in law(1)) {
        let w = FiniteDistribution::product(&[u.clone(), v.clone()]).unwrap();
        prop_assert_eq!(w.marginal(&[0]).unwrap(), u);
        prop_assert_eq!(w.marginal(&[1]).unwrap(), v);
        prop_assert!(check_plain_ci(&w, &BlockPartition::pair()).unwrap().holds);
    }

    #[test]
    fn verdicts_are_symmetric_in_a_and_c(y in law(2)) {
        let p = BlockPartition::pair();
        let q = p.swapped();
        let region = everywhere(&y);
        prop_assert_eq!(check_eh_ci(&y, &p, &int(1)).unwrap().holds, check_eh_ci(&y, &q, &int(1)).unwrap().holds);
        prop_assert_eq!(check_inner_ci(&y, &p, &region).unwrap().holds, check_inner_ci(&y, &q, &region).unwrap().holds);
        prop_assert_eq!(check_outer_ci(&y, &p).unwrap().holds, check_outer_ci(&y, &q).unwrap().holds);
    }

    #[test]
    fn slab_reduction_matches_brute_force(y in law(2)) {
        let p = BlockPartition::pair();
        let region = everywhere(&y);
        let slab = check_inner_ci(&y, &p, &region).unwrap();
        let brute = check_inner_ci_bruteforce(&y, &p, &region, 1 << 22).unwrap();
        prop_assert_eq!(slab.holds, brute.holds);
    }

    #[test]
    fn slab_reduction_matches_brute_force_with_b(y in law(3)) {
        let p = BlockPartition::triple();
        let region = everywhere(&y);
        let slab = check_inner_ci(&y, &p, &region).unwrap();
        let brute = check_inner_ci_bruteforce(&y, &p, &region, 1 << 22).unwrap();
        prop_assert_eq!(slab.holds, brute.holds);
    }

    #[test]
    fn false_verdicts_carry_sound_certificates(y in law(3)) {
        let p = partition(3);
        let region = everywhere(&y);
        let verdicts = [
            check_eh_ci(&y, &p, &int(1)).unwrap(),
            check_inner_ci(&y, &p, &region).unwrap(),
            check_inner_ci_bruteforce(&y, &p, &region, 1 << 22).unwrap(),
            check_outer_ci(&y, &p).unwrap(),
        ];
        for v in verdicts {
            prop_assert_eq!(v.holds, v.certificate.is_none());
            if let Some(c) = v.certificate {
                prop_assert!(c.recheck(&y, &p), "{:?}", c);
            }
        }
    }

    #[test]
    fn outer_verdict_matches_generic_witness(y in law(2)) {
        let p = BlockPartition::pair();
        let outer = check_outer_ci(&y, &p).unwrap();
        match build_outer_witness_generic(&y, &p) {
            Ok(w) => {
                prop_assert!(outer.holds);
                prop_assert!(verify_witness(&w.w, &y, &p).verified());
            }
            Err(_) => prop_assert!(!outer.holds),
        }
    }

    #[test]
    fn product_laws_pass_and_perturbations_fail(seed in any::<u64>(), dim in 2usize..=3, pick in any::<prop::sample::Index>()) {
        let axis = [int(0), rat(1, 2), int(2), int(3)];
        let grid = GridSpec::uniform(dim, &axis).unwrap();
        let p = partition(dim);
        let region = Region::eh_unit();
        let y = gen_product_ci(seed, &grid, &p, &region).unwrap();
        prop_assert!(check_eh_ci(&y, &p, &int(1)).unwrap().holds);
        prop_assert!(check_inner_ci(&y, &p, &region).unwrap().holds);
        prop_assert!(check_outer_ci(&y, &p).unwrap().holds);

        let slabs = enumerate_slabs(y.support(), &p, &region).unwrap();
        let slab = pick.get(&slabs);
        let [_, _, o1, o2] = slab.corners(&p);
        let eps = y.mass(&o1).min(y.mass(&o2)) / int(3);
        let z = gen_perturbed(&y, &p, slab, &eps, Perturbation::Corners).unwrap();
        prop_assert!(!check_eh_ci(&z, &p, &int(1)).unwrap().holds);
        prop_assert!(!check_inner_ci(&z, &p, &region).unwrap().holds);
        prop_assert!(!check_outer_ci(&z, &p).unwrap().holds);
    }

    #[test]
    fn cross_laws_pass_all_checks(seed in any::<u64>(), a in 0usize..4, b in 0usize..4, c in 0usize..4) {
        prop_assume!(a + b + c > 0);
        let p = BlockPartition::triple();
        let y = gen_cross(seed, &p, [a, b, c], &int(1)).unwrap();
        let region = Region::cross(p.clone(), int(1)).unwrap();
        prop_assert!(check_eh_ci(&y, &p, &int(1)).unwrap().holds);
        prop_assert!(check_inner_ci(&y, &p, &region).unwrap().holds);
        prop_assert!(check_outer_ci(&y, &p).unwrap().holds);
    }
}
