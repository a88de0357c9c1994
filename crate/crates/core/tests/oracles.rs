//! Independent brute-force and closed-form checks of the functionals.

use std::sync::Arc;

use approx::assert_relative_eq;
use hardycert::functionals::{
    a_functional, b_functional, bv_functional, AKind, BKind, BvKind, Problem,
};
use hardycert::grid::{stieltjes_box_integral, weighted_norm, CellField, GridN, NodeField};
use hardycert::weights::{Exponents, Weight};
use ndarray::{Array2, ArrayD, IxDyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const M: usize = 8;

fn random_table(grid: &Arc<GridN>, rng: &mut ChaCha8Rng) -> CellField {
    let vals = ArrayD::from_shape_fn(IxDyn(&[M, M]), |_| rng.gen_range(0.2..3.0));
    CellField::new(grid.clone(), vals).unwrap()
}

/// Node tables of `∫_0^t sigma` and `∫_t^∞ w` by direct summation.
fn brute_cumulations(grid: &GridN, sigma: &ArrayD<f64>, w: &ArrayD<f64>) -> (Array2<f64>, Array2<f64>) {
    let (hx, hy) = (grid.widths(0), grid.widths(1));
    let mut s = Array2::zeros((M + 1, M + 1));
    let mut ws = Array2::zeros((M + 1, M + 1));
    for i in 0..=M {
        for j in 0..=M {
            for k in 0..M {
                for l in 0..M {
                    let dv = hx[k] * hy[l];
                    if k < i && l < j {
                        s[[i, j]] += sigma[[k, l]] * dv;
                    }
                    if k >= i && l >= j {
                        ws[[i, j]] += w[[k, l]] * dv;
                    }
                }
            }
        }
    }
    (s, ws)
}

fn brute_b1(pb: &Problem) -> f64 {
    let e = pb.e;
    let r = e.r.unwrap();
    let (s, ws) = brute_cumulations(pb.grid(), pb.sigma.values(), pb.w.values());
    let psi = ws.mapv(|x| x.powf(r / e.q));
    let mut total = 0.0;
    for i in 0..M {
        for j in 0..M {
            let d2 = psi[[i + 1, j + 1]] - psi[[i, j + 1]] - psi[[i + 1, j]] + psi[[i, j]];
            total += s[[i, j]].powf(r / e.p_conj) * d2;
        }
    }
    total.powf(1.0 / r)
}

fn brute_bv(pb: &Problem) -> f64 {
    let e = pb.e;
    let r = e.r.unwrap();
    let grid = pb.grid();
    let (hx, hy) = (grid.widths(0), grid.widths(1));
    let (s, _) = brute_cumulations(grid, pb.sigma.values(), pb.w.values());
    let sigma = pb.sigma.values();
    let w = pb.w.values();
    let mut total = 0.0;
    for i in 0..M {
        for j in 0..M {
            let mut inner = 0.0;
            for k in i..M {
                for l in j..M {
                    inner += s[[k + 1, l + 1]].powf(e.q - 1.0) * w[[k, l]] * hx[k] * hy[l];
                }
            }
            total += sigma[[i, j]] * hx[i] * hy[j] * inner.powf(r / e.q);
        }
    }
    total.powf(1.0 / r)
}

fn random_problem(seed: u64, p: f64, q: f64) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = Arc::new(GridN::log(2, 0.1, 10.0, M + 1).unwrap());
    let v = random_table(&grid, &mut rng);
    let w = random_table(&grid, &mut rng);
    Problem::from_fields(v, w, Exponents::new(p, q).unwrap()).unwrap()
}

#[test]
fn b1_matches_quadruple_loop() {
    for seed in 0..5 {
        let pb = random_problem(seed, 3.0, 2.0);
        let b1 = b_functional(BKind::B1, &pb).unwrap().value;
        assert_relative_eq!(b1, brute_b1(&pb), max_relative = 1e-12);
    }
}

#[test]
fn b1_unit_square_matches_quadruple_loop() {
    let grid = Arc::new(GridN::linear(2, 0.0, 1.0, M + 1).unwrap());
    let one = Weight::constant(2, 1.0);
    let pb = Problem::new(&one, &one, Exponents::new(3.0, 2.0).unwrap(), grid).unwrap();
    let b1 = b_functional(BKind::B1, &pb).unwrap().value;
    assert_relative_eq!(b1, brute_b1(&pb), max_relative = 1e-12);
}

#[test]
fn bv_matches_quadruple_loop() {
    let grid = Arc::new(GridN::linear(2, 0.0, 1.0, M + 1).unwrap());
    let one = Weight::constant(2, 1.0);
    let pb = Problem::new(&one, &one, Exponents::new(3.0, 2.0).unwrap(), grid).unwrap();
    assert_relative_eq!(bv_functional(BvKind::Bv, &pb).unwrap().value, brute_bv(&pb), max_relative = 1e-6);
    for seed in 10..14 {
        let pb = random_problem(seed, 2.5, 1.5);
        let bv = bv_functional(BvKind::Bv, &pb).unwrap().value;
        assert_relative_eq!(bv, brute_bv(&pb), max_relative = 1e-10);
    }
}

#[test]
fn a1_unit_square() {
    let grid = Arc::new(GridN::linear(2, 0.0, 1.0, 65).unwrap());
    let one = Weight::constant(2, 1.0);
    let pb = Problem::new(&one, &one, Exponents::new(2.0, 2.0).unwrap(), grid).unwrap();
    let a1 = a_functional(AKind::A1, &pb).unwrap();
    assert_relative_eq!(a1.value, 0.25, epsilon = 1e-14);
}

#[test]
fn tail_of_inverse_square() {
    // ∫_1^1000 ∫_1^1000 x^-2 y^-2 = (1 - 1e-3)^2
    let grid = Arc::new(GridN::log(2, 1e-3, 1e3, 1025).unwrap());
    let w = Weight::power(1.0, vec![-2.0, -2.0]);
    let one = Weight::constant(2, 1.0);
    let pb = Problem::new(&one, &w, Exponents::new(2.0, 2.0).unwrap(), grid.clone()).unwrap();
    let mid = grid.axis(0).iter().position(|&x| (x - 1.0).abs() < 1e-9).unwrap();
    assert_relative_eq!(pb.wstar.at(&[mid, mid]), (1.0f64 - 1e-3).powi(2), max_relative = 1e-3);
}

#[test]
fn stieltjes_of_product_fields() {
    let n = 129;
    let grid = Arc::new(GridN::linear(2, 0.0, 1.0, n).unwrap());
    let xs = grid.axis(0).to_vec();
    let phi = ArrayD::from_shape_fn(IxDyn(&[n, n]), |ix| xs[ix[0]] * xs[ix[1]]);
    let psi = ArrayD::from_shape_fn(IxDyn(&[n, n]), |ix| (1.0 - xs[ix[0]]) * (1.0 - xs[ix[1]]));
    let phi = NodeField::new(grid.clone(), phi).unwrap();
    let psi = NodeField::new(grid, psi).unwrap();
    let total = stieltjes_box_integral(&phi, &psi).unwrap();
    // lower-left tags underestimate ∫∫ xy by O(h)
    assert!((total - 0.25).abs() < 0.01, "{total}");
}

#[test]
fn norm_of_linear_function() {
    let grid = Arc::new(GridN::linear(2, 0.0, 1.0, 257).unwrap());
    let f = CellField::from_fn(grid.clone(), |x| x[0]).unwrap();
    let one = CellField::constant(grid, 1.0).unwrap();
    assert_relative_eq!(weighted_norm(&f, &one, 2.0).unwrap(), 1.0 / 3f64.sqrt(), max_relative = 1e-5);
}
