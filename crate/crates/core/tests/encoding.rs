use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use shelfqaoa::oracle::Spectrum;
use shelfqaoa::warehouse::{build_qubo_with, CostBreakdown, FcForm, Penalties};
use shelfqaoa::{build_layout, decode_assignment, qubo_to_ising, Bitstring, ProblemInstance};

fn instance() -> impl Strategy<Value = ProblemInstance> {
    (1usize..=3, 1usize..=3)
        .prop_flat_map(|(shelves, products)| {
            (
                prop::collection::vec(1u32..=4, shelves),
                prop::collection::vec(1u32..=2, products),
                prop::collection::vec(1u32..10, products * products),
                (5.0f64..20.0, 0.1f64..1.0, 0.05f64..0.5),
            )
        })
        .prop_filter("fits", |(caps, weights, _, _)| {
            weights.iter().sum::<u32>() <= caps.iter().sum::<u32>()
        })
        .prop_map(|(caps, weights, raw, (a, b, c))| {
            let p = weights.len();
            let lambda = (0..p)
                .map(|i| {
                    (0..p)
                        .map(|j| raw[i.min(j) * p + i.max(j)] as f64 / 10.0)
                        .collect()
                })
                .collect();
            ProblemInstance::new(caps, weights, lambda, Penalties { a, b, c }).unwrap()
        })
}

proptest! {
    #[test]
    fn qubo_matches_direct_evaluation(inst in instance(), seed in any::<u64>(), literal in any::<bool>()) {
        let form = if literal { FcForm::Literal } else { FcForm::Shelf };
        let qubo = build_qubo_with(&inst, form).unwrap();
        let layout = build_layout(&inst).unwrap();
        let bits = Bitstring::from_index(seed & ((1u64 << qubo.n) - 1), qubo.n);
        let direct = CostBreakdown::evaluate(&inst, &layout, &bits, form).unwrap().total(inst.penalties());
        prop_assert!((qubo.energy(&bits).unwrap() - direct).abs() < 1e-9);
    }

    #[test]
    fn ising_matches_qubo(inst in instance(), seed in any::<u64>()) {
        let qubo = build_qubo_with(&inst, FcForm::Shelf).unwrap();
        let h = qubo_to_ising(&qubo);
        let bits = Bitstring::from_index(seed & ((1u64 << qubo.n) - 1), qubo.n);
        prop_assert!((qubo.energy(&bits).unwrap() - h.energy_of_bits(&bits).unwrap()).abs() < 1e-9);
        let back = h.to_qubo();
        prop_assert!((back.energy(&bits).unwrap() - qubo.energy(&bits).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn decode_inverts_encode(inst in instance(), picks in prop::collection::vec(any::<u8>(), 6)) {
        let layout = build_layout(&inst).unwrap();
        let shelf_of: Vec<Option<usize>> = (0..inst.num_products())
            .map(|a| (picks[a] % 4 != 3).then(|| picks[a] as usize % inst.num_shelves()))
            .collect();
        let slacks: Vec<u64> = (0..inst.num_shelves())
            .map(|m| picks[3 + m] as u64 % (1 << layout.slack_bits(m)))
            .collect();
        let bits = layout.encode(&shelf_of, &slacks).unwrap();
        let report = decode_assignment(&inst, &layout, &bits).unwrap();
        prop_assert_eq!(report.shelf_of(inst.num_products()), shelf_of);
        prop_assert_eq!(report.slacks(), slacks);
    }
}

#[test]
fn exhaustive_qubo_ising_agreement_on_reference() {
    let inst = ProblemInstance::three_products_two_shelves();
    let qubo = build_qubo_with(&inst, FcForm::Shelf).unwrap();
    let h = qubo_to_ising(&qubo);
    let spectrum = h.spectrum();
    for i in 0..1u64 << qubo.n {
        assert_abs_diff_eq!(
            qubo.energy_of_index(i),
            spectrum[i as usize],
            epsilon = 1e-9
        );
    }
}

#[test]
fn feasible_ground_states_of_reference() {
    let inst = ProblemInstance::three_products_two_shelves();
    let qubo = build_qubo_with(&inst, FcForm::Shelf).unwrap();
    let layout = build_layout(&inst).unwrap();
    let spectrum = Spectrum::from_qubo(&qubo).unwrap();
    for i in spectrum.ground_states() {
        let report = decode_assignment(&inst, &layout, &Bitstring::from_index(i, qubo.n)).unwrap();
        assert!(report.feasible);
        // Products 0 and 2 share a shelf, product 1 sits alone.
        let mut groups: Vec<Vec<usize>> =
            report.shelves.iter().map(|s| s.products.clone()).collect();
        groups.sort();
        assert_eq!(groups, vec![vec![0, 2], vec![1]]);
    }
}

#[test]
fn smallest_instance_has_four_states() {
    let inst =
        ProblemInstance::new(vec![1], vec![1], vec![vec![0.0]], Penalties::default()).unwrap();
    let qubo = build_qubo_with(&inst, FcForm::Shelf).unwrap();
    assert_eq!(qubo.n, 2);
    let spectrum = Spectrum::from_qubo(&qubo).unwrap();
    assert_eq!(spectrum.len(), 4);
    // Product placed, slack empty: every penalty vanishes.
    assert_eq!(spectrum.ground_states(), vec![1]);
    assert_abs_diff_eq!(spectrum.min_energy(), 0.0, epsilon = 1e-12);
}

#[test]
fn infeasible_states_lie_above_the_feasible_minimum() {
    let inst = ProblemInstance::three_products_two_shelves();
    let qubo = build_qubo_with(&inst, FcForm::Shelf).unwrap();
    let layout = build_layout(&inst).unwrap();
    let (mut feasible, mut infeasible) = (f64::INFINITY, f64::INFINITY);
    for i in 0..1u64 << qubo.n {
        let bits = Bitstring::from_index(i, qubo.n);
        let report = decode_assignment(&inst, &layout, &bits).unwrap();
        let e = qubo.energy_of_index(i);
        if report.feasible {
            let f = CostBreakdown::evaluate(&inst, &layout, &bits, FcForm::Shelf).unwrap();
            assert_eq!(f.f_a, 0.0);
            feasible = feasible.min(e);
        } else {
            infeasible = infeasible.min(e);
        }
    }
    assert!(infeasible > feasible, "{infeasible} vs {feasible}");
}
