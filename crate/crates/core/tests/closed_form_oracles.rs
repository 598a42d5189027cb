use freefall::interferometer::commutators_at;
use freefall::moments::{positional_average, third_order_allowance, GaussianEnsemble};
use freefall::potential::{GravityModel, GravitySource};
use freefall::trajectory::{integrate_exact, x0, x1, x2, InitialConditions, IntegrationOptions};
use freefall::wavepacket::{evolve, gaussian_packet, Grid1D};
use nalgebra::Vector3;
use proptest::prelude::*;

/// Poisson bracket `{f, h}` at the phase-space point `(x, v)` for polynomials,
/// by central differences (exact for quadratics up to rounding).
fn bracket_at(f: impl Fn(f64, f64) -> f64, h: impl Fn(f64, f64) -> f64, x: f64, v: f64) -> f64 {
    let e = 1e-3;
    let d = |p: &dyn Fn(f64, f64) -> f64, dx: f64, dv: f64| (p(x + dx, v + dv) - p(x - dx, v - dv)) / (2.0 * e);
    d(&f, e, 0.0) * d(&h, 0.0, e) - d(&f, 0.0, e) * d(&h, e, 0.0)
}

fn ic(x: f64, v: f64) -> InitialConditions {
    InitialConditions::new(Vector3::new(x, 0.0, 0.0), Vector3::new(v, 0.0, 0.0)).unwrap()
}

proptest! {
    /// For polynomials of degree ≤ 2 paired with a linear one, the quantum
    /// commutator is exactly `i ħ/m` times the Poisson bracket.
    #[test]
    fn commutators_match_poisson_brackets(g in 0.1f64..10.0, t in 0.1f64..3.0, hm in 0.1f64..5.0) {
        let c = commutators_at(g, t, hm);
        let f0 = |x: f64, v: f64| x0(&ic(x, v), g, t);
        let f1 = |x: f64, v: f64| x1(&ic(x, v), g, t);
        let f2 = |x: f64, v: f64| x2(&ic(x, v), g, t);
        let tol = |a: f64| 1e-6 * a.abs().max(1e-12);

        let c01 = hm * bracket_at(f0, f1, 0.3, -0.2);
        prop_assert!((c01 - c.c01).abs() < tol(c.c01));

        // {x₀, x₂} = a x + b v + c
        let p = |x: f64, v: f64| hm * bracket_at(f0, f2, x, v);
        let cst = p(0.0, 0.0);
        let a = p(1.0, 0.0) - cst;
        let b = p(0.0, 1.0) - cst;
        prop_assert!((a - c.affine[0]).abs() < tol(c.affine[0]));
        prop_assert!((b - c.affine[1]).abs() < tol(c.affine[1]));
        prop_assert!((cst - c.affine[2]).abs() < tol(c.affine[2]));

        // [x₀, [x₀, x₂]] = i ħ/m {x₀, i (a x + b v + c)} = -(ħ/m) {x₀, a x + b v}
        let nested = -hm * bracket_at(f0, |x, v| a * x + b * v, 0.0, 0.0);
        prop_assert!((nested - c.c002).abs() < tol(c.c002));
    }
}

fn point_source_with_unit_g(radius: f64) -> GravityModel {
    GravityModel::exact(GravitySource::new(1.0, radius * radius, radius).unwrap())
}

fn slope(rs: &[f64], ys: &[f64]) -> f64 {
    let n = rs.len();
    (ys[n - 1].abs() / ys[n - 2].abs()).ln() / (rs[n - 1] / rs[n - 2]).ln()
}

#[test]
fn residual_vanishes_as_one_over_r() {
    let ic = InitialConditions::new(Vector3::new(0.1, 0.05, 0.0), Vector3::new(0.3, 0.2, 0.1)).unwrap();
    let t = 1.0;
    let rs = [1e3, 3e3, 1e4];
    let dev: Vec<f64> = rs
        .iter()
        .map(|&r| {
            let s =
                integrate_exact(&point_source_with_unit_g(r), &ic, &[t], &IntegrationOptions::default()).unwrap()[0];
            s.position.x - x0(&ic, 1.0, t)
        })
        .collect();
    let k = -slope(&rs, &dev);
    assert!((k - 1.0).abs() < 0.05, "slope {k}");
}

#[test]
fn second_order_remainder_is_third_order() {
    let ic = InitialConditions::new(Vector3::new(0.1, 0.05, 0.0), Vector3::new(0.3, 0.2, 0.1)).unwrap();
    let t = 1.0;
    let rs = [100.0, 200.0, 400.0];
    let rem: Vec<f64> = rs
        .iter()
        .map(|&r| {
            let s =
                integrate_exact(&point_source_with_unit_g(r), &ic, &[t], &IntegrationOptions::default()).unwrap()[0];
            s.position.x - x0(&ic, 1.0, t) - x1(&ic, 1.0, t) / r - x2(&ic, 1.0, t) / (r * r)
        })
        .collect();
    let k = -slope(&rs, &rem);
    assert!((k - 3.0).abs() < 0.1, "slope {k}");
}

#[test]
fn packet_mean_follows_positional_average() {
    let (g, r, t) = (1.0, 100.0, 2.0);
    let (x_c, v_c, sx) = (0.0, 0.5, 1.0);
    let (mass, hbar) = (1.0, 1.0);
    let grid = Grid1D::centred(0.0, 100.0, 1024).unwrap();
    let packet = gaussian_packet(&grid, x_c, v_c, sx, mass, hbar).unwrap();
    let model = GravityModel::cubic_with(g, r).unwrap();
    let out = evolve(&packet, &model, t, 4000).unwrap();

    let sv = hbar / (2.0 * mass * sx);
    let tiny = 1e-9;
    let ens = GaussianEnsemble::new(
        Vector3::new(x_c, 0.0, 0.0),
        Vector3::new(v_c, 0.0, 0.0),
        Vector3::new(sx, tiny, tiny),
        Vector3::new(sv, tiny, tiny),
    )
    .unwrap();
    let q = |s: f64| positional_average(&ens.moments(), g, s, t);
    let predicted = q(1.0 / r);
    // the average is quadratic in 1/R, so a second difference isolates the 1/R² part
    let second_order = 2.0 * (q(1.0 / r) - 2.0 * q(0.5 / r) + q(0.0));
    let diff = (out.mean_x() - predicted).abs();
    assert!(diff <= third_order_allowance(&ens, g, 1.0 / r, t), "{diff:e}");
    // the second-order terms are resolved, not hidden inside the allowance
    assert!(diff < 0.1 * second_order.abs(), "{diff:e} vs {second_order:e}");
}
