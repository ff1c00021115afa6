mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigforge::linalg::cholesky;
use sigforge::sigcore::{correlation_matrix, extend_set, hadamard_set, quadratic_metric};
use sigforge::sphere::{
    extend_optimal, local_descent_baseline, ml_exhaustive, q_decomposition, RadiusPolicy, RadiusSetup, SphereDecoder,
    SphereOptions,
};
use sigforge::{Signature, SignatureSet};

fn arb_instance(max_len: usize, load: usize) -> impl Strategy<Value = SignatureSet> {
    (2..=max_len).prop_flat_map(move |l| {
        (l..=load * l).prop_flat_map(move |k| {
            prop::collection::vec(prop::collection::vec(prop::bool::ANY, l), k).prop_map(|rows| {
                SignatureSet::new(
                    rows.into_iter()
                        .map(|r| Signature::new(r.into_iter().map(|b| if b { 1 } else { -1 }).collect()).unwrap())
                        .collect(),
                )
                .unwrap()
            })
        })
    })
}

#[test]
fn q_reconstructs_norm_on_random_factor() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let set = random_set(&mut rng, 14, 9);
    let r = correlation_matrix(&set);
    let u = cholesky(&r).unwrap();
    let q = q_decomposition(&u).unwrap();
    for _ in 0..100 {
        let s = random_signature(&mut rng, 9);
        let direct = u.norm_sq(&s);
        assert!((q.weighted_norm_sq(&s) - direct).abs() <= 1e-6 * direct);
    }
}

#[test]
fn random_extension_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let set = random_set(&mut rng, 10, 8);
    let ext = extend_optimal(&set).unwrap();
    assert_eq!(ext.metric, brute_force_min(&set));
    assert_eq!(ext.metric, metric_by_inner_products(&set, ext.signature.chips()));
}

#[test]
fn candidate_list_equals_ball_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..100 {
        let l = rng.gen_range(2..=12);
        let k = rng.gen_range(l..=3 * l);
        let set = random_set(&mut rng, k, l);
        let r = correlation_matrix(&set);
        let setup = RadiusSetup::new(&r).unwrap();
        let res = SphereDecoder::new(&r)
            .unwrap()
            .search(setup.radius(), &SphereOptions { collect_candidates: true, ..Default::default() })
            .unwrap();
        let mut got: Vec<Vec<i8>> = res.candidates.unwrap().iter().map(|s| s.chips().to_vec()).collect();
        let mut want = brute_force_ball(&set, setup.quant_metric);
        got.sort();
        want.sort();
        assert_eq!(got, want, "K={k} L={l}");
        assert_eq!(res.candidates_enumerated as usize, want.len());
    }
}

#[test]
fn radius_dominates_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let l = rng.gen_range(2..=12);
        let k = rng.gen_range(l..=2 * l);
        let set = random_set(&mut rng, k, l);
        let setup = RadiusSetup::new(&correlation_matrix(&set)).unwrap();
        assert!(setup.quant_metric >= brute_force_min(&set));
    }
}

#[test]
fn monotone_loading_along_a_chain() {
    let mut set = hadamard_set(8).unwrap();
    let mut prev = 0;
    for _ in 0..12 {
        let ext = extend_optimal(&set).unwrap();
        assert!(ext.metric >= prev);
        prev = ext.metric;
        set = extend_set(&set, &ext.signature).unwrap();
    }
}

#[test]
fn descent_baseline_is_a_descent() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let l = rng.gen_range(2..=12);
        let k = rng.gen_range(l..=3 * l);
        let set = random_set(&mut rng, k, l);
        let r = correlation_matrix(&set);
        let s0 = random_signature(&mut rng, l);
        let d = local_descent_baseline(&r, &s0).unwrap();
        assert!(d.best_metric <= quadratic_metric(&r, &s0).unwrap());
        assert!(d.best_metric >= ml_exhaustive(&r).unwrap().best_metric);
        assert_eq!(d.best_metric, quadratic_metric(&r, &d.best).unwrap());
        // local optimality: no single flip improves
        for j in 0..l {
            let mut chips = d.best.chips().to_vec();
            chips[j] = -chips[j];
            let flipped = Signature::new(chips).unwrap();
            assert!(quadratic_metric(&r, &flipped).unwrap() >= d.best_metric);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sphere_invariants(set in arb_instance(10, 3)) {
        let l = set.signature_len();
        let r = correlation_matrix(&set);
        let setup = RadiusSetup::new(&r).unwrap();
        let decoder = SphereDecoder::new(&r).unwrap();
        let opts = SphereOptions { collect_candidates: true, ..Default::default() };

        let mut budgets_ok = true;
        let mut last_budget_at = vec![f64::INFINITY; l];
        let res = decoder
            .search_observed(setup.radius(), &opts, |st| {
                let q_kk = decoder.q().diag()[st.level];
                let expect = st.budget - q_kk * (st.delta + f64::from(st.partial[0])).powi(2);
                budgets_ok &= (st.next_budget - expect).abs() <= 1e-9 * st.budget.abs().max(1.0);
                budgets_ok &= st.next_budget <= st.budget + 1e-12;
                // the parent budget handed down must equal this node's budget
                if st.level + 1 < l {
                    budgets_ok &= (last_budget_at[st.level + 1] - st.budget).abs() <= 1e-9 * st.budget.abs().max(1.0);
                }
                last_budget_at[st.level] = st.next_budget;
            })
            .unwrap();
        prop_assert!(budgets_ok);

        let ml = ml_exhaustive(&r).unwrap();
        // optimality, exact
        prop_assert_eq!(res.best_metric, ml.best_metric);
        prop_assert_eq!(res.best_metric, brute_force_min(&set));
        prop_assert_eq!(&res.best, &ml.best);
        prop_assert_eq!(res.best_metric, quadratic_metric(&r, &res.best).unwrap());
        // feasibility
        let candidates = res.candidates.as_ref().unwrap();
        prop_assert!(candidates.contains(&setup.quant));
        prop_assert!(res.candidates_enumerated >= 1);
        prop_assert!(candidates.iter().all(|c| c.get(l - 1) == 1));
        // Rayleigh floor and radius ceiling
        prop_assert!(setup.eigen.value * l as f64 <= res.best_metric as f64 + 1e-6);
        prop_assert!(res.best_metric <= setup.quant_metric);
        // node accounting
        prop_assert!(res.nodes_visited <= 1u64 << (l + 1));
        prop_assert!(res.candidates_enumerated <= 1u64 << (l - 1));
    }

    #[test]
    fn shrinking_mode_finds_same_optimum(set in arb_instance(10, 3)) {
        let r = correlation_matrix(&set);
        let setup = RadiusSetup::new(&r).unwrap();
        let decoder = SphereDecoder::new(&r).unwrap();
        let fixed = decoder.search(setup.radius(), &SphereOptions::default()).unwrap();
        let shrink = decoder
            .search(setup.radius(), &SphereOptions { policy: RadiusPolicy::Shrinking, ..Default::default() })
            .unwrap();
        prop_assert_eq!(fixed.best, shrink.best);
        prop_assert_eq!(fixed.best_metric, shrink.best_metric);
        prop_assert!(shrink.nodes_visited <= fixed.nodes_visited);
    }

    #[test]
    fn sign_symmetry_loses_nothing(set in arb_instance(8, 2)) {
        let l = set.signature_len();
        let full_min = brute_force_min(&set);
        let half_min = (0..1u64 << (l - 1))
            .map(|b| metric_by_inner_products(&set, &signature_from_bits(b, l)))
            .min()
            .unwrap();
        prop_assert_eq!(full_min, half_min);
    }
}
