use logdet_dspg::instance::{generate, InstanceSpec};
use logdet_dspg::model::{self, eval_f, eval_g, grad_g, x_of_u};
use logdet_dspg::{BlockVariant, CompositeVar, ConstraintMap, NormOrder, Problem, RegularizerTerm, SymmetricMatrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gradient_instances() -> Vec<(String, Problem)> {
    let mut out = Vec::new();
    for seed in 0..5u64 {
        let p = [NormOrder::One, NormOrder::Two, NormOrder::Infinity][seed as usize % 3];
        let spec = InstanceSpec::lp_loglik(20 + 2 * seed as usize, vec![p, NormOrder::Finite(1.5)], seed);
        out.push((format!("lp seed {seed}"), generate(&spec).unwrap()));
        let variant = if seed % 2 == 0 { BlockVariant::MaxNorm } else { BlockVariant::FrobeniusNorm };
        out.push((format!("block seed {seed}"), generate(&InstanceSpec::block(30, 3 + seed as usize, variant, seed)).unwrap()));
        out.push((format!("multitask seed {seed}"), generate(&InstanceSpec::multitask(6, 2 + seed as usize % 4, seed)).unwrap()));
    }
    out
}

fn random_composite(problem: &Problem, rng: &mut ChaCha8Rng, scale: f64) -> CompositeVar {
    let mut u = CompositeVar::zeros(problem);
    for y in &mut u.y {
        *y = scale * rng.random_range(-1.0..1.0);
    }
    for z in &mut u.z {
        for v in z.iter_mut() {
            *v = scale * rng.random_range(-1.0..1.0);
        }
    }
    u
}

/// A random composite point that keeps `C + ℬ(U)` comfortably positive definite.
fn interior_point(problem: &Problem, rng: &mut ChaCha8Rng) -> CompositeVar {
    let mut scale = 0.05;
    loop {
        let u = random_composite(problem, rng, scale);
        let slack = model::dual_slack(problem, &u).unwrap();
        if logdet_dspg::symmat::min_eigenvalue(&slack) > 0.5 * logdet_dspg::symmat::min_eigenvalue(problem.c()) {
            return u;
        }
        scale *= 0.5;
    }
}

#[test]
fn central_differences_match_the_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (label, problem) in gradient_instances() {
        assert!(problem.dim() <= 30, "{label}");
        let u = interior_point(&problem, &mut rng);
        let (_, factor) = eval_g(&problem, &u).unwrap();
        let grad = grad_g(&problem, &x_of_u(&problem, &factor)).unwrap().restricted(&problem);
        for dir in 0..20 {
            let d = random_composite(&problem, &mut rng, 1.0);
            let d = d.scaled(1.0 / problem.norm(&d));
            let analytic = problem.inner(&grad, &d);
            let h = 1e-4 * logdet_dspg::symmat::min_eigenvalue(problem.c());
            let gp = eval_g(&problem, &u.add_scaled(h, &d)).unwrap().0;
            let gm = eval_g(&problem, &u.add_scaled(-h, &d)).unwrap().0;
            let fd = (gp - gm) / (2.0 * h);
            let rel = (fd - analytic).abs() / analytic.abs().max(1e-3);
            assert!(rel <= 1e-5, "{label} direction {dir}: fd {fd:e} vs analytic {analytic:e} (rel {rel:e})");
        }
    }
}

#[test]
fn dense_and_coefficient_inner_products_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (label, problem) in gradient_instances() {
        let u = interior_point(&problem, &mut rng);
        let (_, factor) = eval_g(&problem, &u).unwrap();
        let grad = grad_g(&problem, &x_of_u(&problem, &factor)).unwrap();
        let d = random_composite(&problem, &mut rng, 1.0);
        let a = grad.dot_dense(&problem, &d);
        let b = problem.inner(&grad.restricted(&problem), &d);
        assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{label}: {a} vs {b}");
    }
}

fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> SymmetricMatrix {
    SymmetricMatrix::from_lower_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

fn random_positions(n: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let all: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let count = count.min(all.len());
    rand::seq::index::sample(rng, all.len(), count).into_iter().map(|k| all[k]).collect()
}

fn random_problem(n: usize, seed: u64) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = random_symmetric(n, &mut rng);
    let c = SymmetricMatrix::from_lower_fn(n, |i, j| {
        let gram: f64 = (0..n).map(|k| m.get(i, k) * m.get(k, j)).sum();
        gram + if i == j { 1.0 } else { 0.0 }
    });
    let orders = [NormOrder::One, NormOrder::Two, NormOrder::Infinity, NormOrder::Finite(3.0)];
    let terms = (0..3)
        .map(|h| {
            let pos = random_positions(n, 1 + rng.random_range(0..n * 2), &mut rng);
            let lambda = rng.random_range(0.05..0.5);
            if h % 2 == 0 {
                RegularizerTerm::selector(pos, lambda, orders[h % 4]).unwrap()
            } else {
                RegularizerTerm::ordered_pairs(pos, lambda, orders[(h + 1) % 4]).unwrap()
            }
        })
        .collect();
    let pins: Vec<(usize, usize)> = random_positions(n, n / 2, &mut rng).into_iter().filter(|&(i, j)| i != j).collect();
    Problem::new(c, 1.0 + rng.random_range(0.0..1.0), ConstraintMap::pin_zero(pins).unwrap(), terms).unwrap()
}

/// Dual feasible point: projects a random composite onto the norm balls and
/// halves until `C + ℬ(U) ≻ 0`.
fn feasible_dual(problem: &Problem, rng: &mut ChaCha8Rng) -> CompositeVar {
    let raw = random_composite(problem, rng, 1.0);
    let mut u = logdet_dspg::projections::proj_m(problem, &raw).unwrap();
    while eval_g(problem, &u).is_err() {
        u = u.scaled(0.5);
    }
    u
}

/// Primal feasible point: diagonally dominant with zeros on the pinned entries.
fn feasible_primal(problem: &Problem, rng: &mut ChaCha8Rng) -> SymmetricMatrix {
    let n = problem.dim();
    let mut x = random_symmetric(n, rng);
    if let logdet_dspg::ConstraintKind::EntryPinning(pos) = &problem.constraints().kind {
        for &(i, j) in pos {
            x.set(i, j, 0.0);
        }
    }
    for i in 0..n {
        x.set(i, i, n as f64 + rng.random_range(0.0..1.0));
    }
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn regularizer_adjoint_identity(n in 2usize..8, seed in 0u64..1000, ordered in prop::bool::ANY) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pos = random_positions(n, 1 + n, &mut rng);
        let term = if ordered {
            RegularizerTerm::ordered_pairs(pos, 1.0, NormOrder::Two).unwrap()
        } else {
            RegularizerTerm::selector(pos, 1.0, NormOrder::Finite(1.5)).unwrap()
        };
        let x = random_symmetric(n, &mut rng);
        let z: Vec<f64> = (0..term.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lhs: f64 = term.apply(&x).iter().zip(&z).map(|(a, b)| a * b).sum();
        let rhs = x.dot(&term.adjoint(n, &z));
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        // Frobenius weights
        let fro = term.adjoint(n, &z).frobenius_norm().powi(2);
        let wsum: f64 = term.weights().iter().zip(&z).map(|(w, v)| w * v * v).sum();
        prop_assert!((fro - wsum).abs() <= 1e-12 * (1.0 + fro));
    }

    #[test]
    fn constraint_adjoint_identity(n in 2usize..8, seed in 0u64..1000, general in prop::bool::ANY) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cm = if general {
            let mats = (0..3).map(|_| random_symmetric(n, &mut rng)).collect();
            ConstraintMap::general(mats, vec![0.0; 3]).unwrap()
        } else {
            let pos = random_positions(n, n, &mut rng);
            ConstraintMap::pin_zero(pos).unwrap()
        };
        let x = random_symmetric(n, &mut rng);
        let y: Vec<f64> = (0..cm.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lhs: f64 = cm.apply(&x).unwrap().iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs = x.dot(&cm.adjoint(n, &y).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn weak_duality(n in 2usize..7, seed in 0u64..10_000) {
        let problem = random_problem(n, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
        let u = feasible_dual(&problem, &mut rng);
        let x = feasible_primal(&problem, &mut rng);
        let g = eval_g(&problem, &u).unwrap().0;
        let f = eval_f(&problem, &x).unwrap();
        prop_assert!(f >= g - 1e-9 * (1.0 + f.abs()), "f {f} < g {g}");
    }

    #[test]
    fn dual_objective_is_concave(n in 2usize..7, seed in 0u64..10_000, t in 0.0f64..=1.0) {
        let problem = random_problem(n, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(31));
        let u = feasible_dual(&problem, &mut rng);
        let v = feasible_dual(&problem, &mut rng);
        let mid = CompositeVar::lerp(t, &u, &v);
        let gu = eval_g(&problem, &u).unwrap().0;
        let gv = eval_g(&problem, &v).unwrap().0;
        let gm = eval_g(&problem, &mid).unwrap().0;
        prop_assert!(gm >= t * gu + (1.0 - t) * gv - 1e-10 * (1.0 + gm.abs()));
    }

    #[test]
    fn gap_vanishes_at_matched_pairs(n in 2usize..6, seed in 0u64..10_000) {
        // Without constraints or regularizers X(U) is optimal and f(X) = g(U).
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = SymmetricMatrix::identity(n).scaled(n as f64);
        for i in 0..n {
            for j in 0..i {
                c.set(i, j, rng.random_range(-0.5..0.5));
            }
        }
        let problem = Problem::new(c, rng.random_range(0.5..2.0), ConstraintMap::none(), vec![]).unwrap();
        let u = CompositeVar::zeros(&problem);
        let (g, factor) = eval_g(&problem, &u).unwrap();
        let f = eval_f(&problem, &x_of_u(&problem, &factor)).unwrap();
        prop_assert!(model::relative_gap(f, g) <= 1e-12);
    }
}
