use std::sync::Arc;

use hardycert::functionals::{
    a_functional, b1_forms, b_functional, bv_functional, zone_chain, AKind, BKind, BvKind,
    FunctionalValue, Problem,
};
use hardycert::grid::{apply_lower, apply_upper, GridN};
use hardycert::normest::{ascend, AscentOptions};
use hardycert::weights::{dual_weight, Exponents, Weight};
use ndarray::{ArrayD, IxDyn};
use proptest::prelude::*;

fn grid(nodes: usize) -> Arc<GridN> {
    Arc::new(GridN::log(2, 1e-2, 1e2, nodes).unwrap())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// `(p, q)` with `q < p`.
fn q_below_p() -> impl Strategy<Value = (f64, f64)> {
    (1.3f64..5.0, 0.1f64..0.9).prop_map(|(p, t)| (p, 1.05 + t * (p - 1.1)))
}

fn p_below_q() -> impl Strategy<Value = (f64, f64)> {
    (1.2f64..4.0, 0.1f64..3.0).prop_map(|(p, d)| (p, p + d))
}

fn exps() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.4f64..0.4, 2)
}

fn all_values(pb: &Problem) -> Vec<FunctionalValue> {
    if pb.e.zone.is_q_below_p() {
        let mut v: Vec<_> = [BKind::B1, BKind::B2, BKind::B3]
            .iter()
            .map(|&k| b_functional(k, pb).unwrap())
            .collect();
        v.push(bv_functional(BvKind::Bv, pb).unwrap());
        v.push(bv_functional(BvKind::Bw, pb).unwrap());
        v
    } else {
        [AKind::A1, AKind::A2, AKind::A3]
            .iter()
            .map(|&k| a_functional(k, pb).unwrap())
            .collect()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn adjoint_pairing_is_exact(seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = grid(12);
        let vol = g.cell_volumes();
        let shape = IxDyn(&g.cells_shape());
        let f = ArrayD::from_shape_fn(shape.clone(), |_| rng.gen_range(0.0..1.0));
        let h = ArrayD::from_shape_fn(shape, |_| rng.gen_range(0.0..1.0));
        let lhs: f64 = (apply_lower(&f, &vol) * &h * &vol).sum();
        let rhs: f64 = (&f * &apply_upper(&h, &vol) * &vol).sum();
        prop_assert!(rel(lhs, rhs) < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn b1_forms_agree((p, q) in q_below_p(), a in exps(), b in exps()) {
        let pb = Problem::new(
            &Weight::power(1.0, a),
            &Weight::power(1.0, b),
            Exponents::new(p, q).unwrap(),
            grid(17),
        ).unwrap();
        let f = b1_forms(&pb).unwrap();
        prop_assert!(rel(f[0], f[1]) < 1e-12 && rel(f[0], f[2]) < 1e-12, "{f:?}");
    }

    #[test]
    fn heavier_w_gives_larger_functionals(
        (p, q) in prop_oneof![q_below_p(), p_below_q()],
        a in exps(),
        b in exps(),
        bump in 0.01f64..2.0,
    ) {
        let e = Exponents::new(p, q).unwrap();
        let v = Weight::power(1.0, a);
        let w = Weight::power(1.0, b.clone());
        let g = grid(17);
        let base = Problem::new(&v, &w, e, g.clone()).unwrap();
        let wf = w.sample(&g).unwrap();
        let heavier = wf.values().mapv(|x| x * (1.0 + bump));
        let heavier = Problem::from_fields(base.v.clone(), hardycert::grid::CellField::new(g, heavier).unwrap(), e).unwrap();
        for (x, y) in all_values(&base).iter().zip(all_values(&heavier)) {
            prop_assert!(y.value >= x.value * (1.0 - 1e-12), "{} {} -> {}", x.name, x.value, y.value);
        }
    }

    #[test]
    fn scaling_covariance(
        (p, q) in prop_oneof![q_below_p(), p_below_q()],
        a in exps(),
        b in exps(),
        lambda in 0.01f64..100.0,
        mu in 0.01f64..100.0,
    ) {
        let e = Exponents::new(p, q).unwrap();
        let g = grid(17);
        let (v, w) = (Weight::power(1.0, a), Weight::power(1.0, b));
        let base = all_values(&Problem::new(&v, &w, e, g.clone()).unwrap());
        let scaled = all_values(&Problem::new(&v.scaled(lambda), &w.scaled(mu), e, g).unwrap());
        let factor = lambda.powf(-1.0 / p) * mu.powf(1.0 / q);
        for (x, y) in base.iter().zip(&scaled) {
            prop_assert!(rel(x.value * factor, y.value) < 1e-10, "{}", x.name);
            prop_assert_eq!(&x.witness, &y.witness);
        }
    }

    #[test]
    fn dual_is_an_involution((p, q) in prop_oneof![q_below_p(), p_below_q()], a in exps()) {
        let e = Exponents::new(p, q).unwrap();
        let back = e.dual().unwrap().dual().unwrap();
        prop_assert!(rel(back.p, p) < 1e-12 && rel(back.q, q) < 1e-12);
        // sigma of sigma under the dual pair recovers v
        let v = Weight::power(1.7, a);
        let sigma = dual_weight(&v, &e).unwrap();
        let twice = dual_weight(&sigma, &Exponents::new(e.p_conj, 2.0).unwrap()).unwrap();
        let g = grid(9);
        let (x, y) = (v.sample(&g).unwrap(), twice.sample(&g).unwrap());
        for (s, t) in x.values().iter().zip(y.values()) {
            prop_assert!(rel(*s, *t) < 1e-12);
        }
    }

    #[test]
    fn zone_chains_hold((p, q) in prop_oneof![q_below_p(), p_below_q()], a in exps(), b in exps()) {
        // coarser meshes can break the A chains at large q through the corner tags
        let e = Exponents::new(p, q).unwrap();
        let pb = Problem::new(&Weight::power(1.0, a), &Weight::power(1.0, b), e, grid(65)).unwrap();
        let rec = zone_chain(&e, &all_values(&pb));
        prop_assert!(rec.passed, "{rec:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn quadratic_ascent_is_monotone(a in exps(), b in exps()) {
        let e = Exponents::new(2.0, 2.0).unwrap();
        let pb = Problem::new(&Weight::power(1.0, a), &Weight::power(1.0, b), e, grid(17)).unwrap();
        let est = ascend(&pb, &AscentOptions { starts: 3, iters: 60, tol: 0.0, seed: 1 }).unwrap();
        for t in &est.traces {
            for w in t.ratios.windows(2) {
                prop_assert!(w[1] >= w[0] * (1.0 - 1e-12), "{}: {:?}", t.start, w);
            }
        }
    }
}
