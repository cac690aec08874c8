mod common;

use common::{iterated_block, max_gap, padded};
use proptest::prelude::*;
use roughreg::controlled::{ControlledPair, PairLabel};
use roughreg::enhance::{chen_residual, enhance, sym_anti, xx_block, Flavor};
use roughreg::path::{holder_seminorm, Grid, GridPath, MatrixPath};
use roughreg::regcalc::{
    backward_integral, c_eps, forward_integral, scalar_qv_sweep, strong_sense_stat, symmetric_integral,
};
use roughreg::roughint::{delta1, delta2, Germ};

/// A random path on `N + 1` nodes with `d` components.
fn path(max_steps: usize, max_dim: usize) -> impl Strategy<Value = GridPath> {
    (2..=max_steps, 1..=max_dim).prop_flat_map(|(n, d)| {
        prop::collection::vec(-3.0..3.0_f64, (n + 1) * d)
            .prop_map(move |v| GridPath::new(Grid::new(1.5, n).unwrap(), d, v).unwrap())
    })
}

/// Two scalar paths on one grid.
fn scalar_pair(max_steps: usize) -> impl Strategy<Value = (GridPath, GridPath)> {
    (2..=max_steps).prop_flat_map(|n| {
        let v = prop::collection::vec(-3.0..3.0_f64, n + 1);
        (v.clone(), v).prop_map(move |(a, b)| {
            let g = Grid::unit(n).unwrap();
            (GridPath::new(g, 1, a).unwrap(), GridPath::new(g, 1, b).unwrap())
        })
    })
}

/// A scalar controlled pair with arbitrary `Y'` over a random path.
fn controlled(x: &GridPath, y: Vec<f64>, yp: Vec<f64>) -> ControlledPair {
    let grid = *x.grid();
    ControlledPair::new(
        GridPath::new(grid, 1, y).unwrap(),
        MatrixPath::new(grid, 1, x.dim(), yp).unwrap(),
        x.clone(),
        PairLabel::Custom,
    )
    .unwrap()
}

fn pair_on(max_steps: usize) -> impl Strategy<Value = (ControlledPair, ControlledPair)> {
    path(max_steps, 3).prop_flat_map(|x| {
        let (len, d) = (x.grid().len(), x.dim());
        let v = |k| prop::collection::vec(-2.0..2.0_f64, k);
        (v(len), v(len * d), v(len), v(len * d))
            .prop_map(move |(y1, p1, y2, p2)| (controlled(&x, y1, p1), controlled(&x, y2, p2)))
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn covariation_is_symmetric_bilinear_and_dominated((a, b) in scalar_pair(40), c in -2.0..2.0_f64, m in 1usize..6, frac in 0.0..=1.0_f64) {
        let grid = *a.grid();
        let eps = m.min(grid.steps()) as f64 * grid.step();
        let t = grid.node((frac * grid.steps() as f64) as usize);
        let ab = c_eps(&a, &b, eps, t).unwrap();
        prop_assert_eq!(ab, c_eps(&b, &a, eps, t).unwrap());
        prop_assert!(ab.abs() <= strong_sense_stat(&a, &b, eps, t).unwrap());
        let mix = GridPath::new(grid, 1, a.values().iter().zip(b.values()).map(|(p, q)| c * p + q).collect()).unwrap();
        let lhs = c_eps(&mix, &b, eps, t).unwrap();
        prop_assert!(close(lhs, c * ab + c_eps(&b, &b, eps, t).unwrap()));
    }

    #[test]
    fn matrix_integrals_are_linear_and_symmetric_is_the_average(x in path(30, 3), c in -2.0..2.0_f64, m in 1usize..5) {
        let grid = *x.grid();
        let eps = m.min(grid.steps()) as f64 * grid.step();
        let y = x.scaled(0.5);
        let fwd = forward_integral(&y, &x, eps, 1.5).unwrap();
        let bwd = backward_integral(&y, &x, eps, 1.5).unwrap();
        let sym = symmetric_integral(&y, &x, eps, 1.5).unwrap();
        prop_assert!(max_gap(&sym.data, &fwd.add(&bwd).scale(0.5).data) <= 1e-12);
        let scaled = forward_integral(&y.scaled(c), &x, eps, 1.5).unwrap();
        prop_assert!(max_gap(&scaled.data, &fwd.scale(c).data) <= 1e-12);
    }

    #[test]
    fn quadratic_variation_is_nonnegative_and_nondecreasing(x in path(40, 3), m in 1usize..8) {
        let grid = *x.grid();
        let eps = m.min(grid.steps()) as f64 * grid.step();
        let sweep = scalar_qv_sweep(&x, eps).unwrap();
        prop_assert!(sweep[0] == 0.0);
        for w in sweep.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn holder_seminorm_is_homogeneous(x in path(30, 2), c in -4.0..4.0_f64, alpha in 0.1..=1.0_f64) {
        let base = holder_seminorm(&x, alpha, usize::MAX).unwrap();
        let scaled = holder_seminorm(&x.scaled(c), alpha, usize::MAX).unwrap();
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-12 * (1.0 + scaled));
    }

    #[test]
    fn second_increment_of_first_increment_vanishes(x in path(30, 1), j in 0usize..31, m in 0usize..31, k in 0usize..31) {
        let n = x.grid().steps();
        let d1 = delta1(&x);
        let (j, m, k) = (j.min(n), m.min(n), k.min(n));
        prop_assert!(d1.get(j, k) == -d1.get(k, j));
        prop_assert!(delta2(|a, b| d1.get(a, b), j, m, k).abs() <= 1e-15 * (1.0 + x.max_abs()));
    }

    #[test]
    fn chen_relation_and_flavor_relations(x in path(30, 3), j in 0usize..31, m in 0usize..31, k in 0usize..31) {
        let n = x.grid().steps();
        let mut v = [j.min(n), m.min(n), k.min(n)];
        v.sort_unstable();
        let [j, m, k] = v;
        let norm = 1.0 + x.max_abs().powi(2);
        let ito = enhance(&x, Flavor::Ito).unwrap();
        let strat = enhance(&x, Flavor::Strat).unwrap();
        prop_assert!(chen_residual(&ito, j, m, k).unwrap() <= 1e-12 * norm);
        prop_assert!(chen_residual(&strat, j, m, k).unwrap() <= 1e-12 * norm);
        let (bi, bs) = (xx_block(&ito, j, k), xx_block(&strat, j, k));
        let xs = padded(&x, 0);
        prop_assert!(max_gap(&bs.data, &iterated_block(&xs, Flavor::Strat, j, k)) <= 1e-12 * norm);
        // strat - ito = half the discrete bracket over [j, k]
        let d = x.dim();
        let mut half = vec![0.0; d * d];
        for i in j..k {
            for a in 0..d {
                for b in 0..d {
                    half[a * d + b] += 0.5 * (xs[i + 1][a] - xs[i][a]) * (xs[i + 1][b] - xs[i][b]);
                }
            }
        }
        prop_assert!(max_gap(&bs.sub(&bi).data, &half) <= 1e-12 * norm);
        let ((si, ai), (ss, as_)) = (sym_anti(&bi), sym_anti(&bs));
        prop_assert!(max_gap(&ai.data, &as_.data) <= 1e-12 * norm);
        prop_assert!(max_gap(&si.add(&ai).data, &bi.data) <= 1e-12 * norm);
        let dx: Vec<f64> = (0..d).map(|a| xs[k][a] - xs[j][a]).collect();
        let geo: Vec<f64> = (0..d * d).map(|i| 0.5 * dx[i / d] * dx[i % d]).collect();
        prop_assert!(max_gap(&ss.data, &geo) <= 1e-12 * norm);
    }

    #[test]
    fn germ_is_additive_and_its_second_increment_closes((p, q) in pair_on(25), j in 0usize..26, m in 0usize..26, k in 0usize..26) {
        let x = p.x().clone();
        let n = x.grid().steps();
        let mut v = [j.min(n), m.min(n), k.min(n)];
        v.sort_unstable();
        let [j, m, k] = v;
        for flavor in [Flavor::Ito, Flavor::Strat] {
            let e = enhance(&x, flavor).unwrap();
            let sum = p.sum(&q).unwrap();
            let (gp, gq, gs) = (Germ::new(&p, &e).unwrap(), Germ::new(&q, &e).unwrap(), Germ::new(&sum, &e).unwrap());
            let scale = 1.0 + x.max_abs().powi(2);
            prop_assert!(max_gap(&gs.eval(j, k).data, &gp.eval(j, k).add(&gq.eval(j, k)).data) <= 1e-12 * scale);
            prop_assert!(gp.eval(j, j).max_norm() == 0.0);
            let (rem, der) = gp.delta2_terms(j, m, k);
            prop_assert!(gp.delta2(j, m, k).add(&rem).add(&der).max_norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn reads_past_the_horizon_clamp(x in path(20, 2), extra in 0usize..10) {
        let n = x.grid().steps();
        let xs = padded(&x, extra);
        for k in 0..=n + extra {
            prop_assert_eq!(x.row(k), &xs[k][..]);
        }
    }
}
