use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use proptest::prelude::*;

use halfcert::certificate::{
    certificate_poly_value, estimate_moment_matrix, minimize_over_psd_ball, BandIndicator,
    CertificateMatrix,
};
use halfcert::distributions::{BoundedParams, Marginal};
use halfcert::geometry::{angle, dot, norm, orthogonal_component};
use halfcert::learner::{
    initial_state, loss_gradient, loss_value, opgd_step, project_unit_ball, LearnerConfig,
    Reweighting,
};
use halfcert::noise::{c_alpha_a, NoiseField, TsybakovParams};
use halfcert::oracle::OracleConfig;
use halfcert::polynomials::{
    affine_compose, binomial_count, lift_along_direction, square_poly, MonomialBasis,
    MultivariatePoly, UnivariatePoly,
};
use halfcert::Halfspace;

fn vec_strategy(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, d).prop_filter("nonzero", |v| norm(v) > 1e-3)
}

fn pair(d: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (vec_strategy(d), vec_strategy(d))
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 200,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn angle_is_symmetric((u, v) in (2usize..6).prop_flat_map(pair)) {
        let a = angle(&u, &v).unwrap();
        let b = angle(&v, &u).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
        prop_assert!((0.0..=PI).contains(&a));
    }

    #[test]
    fn angle_is_scale_invariant((u, v) in (2usize..6).prop_flat_map(pair), c in 1e-3f64..1e3) {
        let scaled: Vec<f64> = u.iter().map(|x| c * x).collect();
        let a = angle(&u, &v).unwrap();
        let b = angle(&scaled, &v).unwrap();
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn orthogonal_component_reconstructs_target((ws, w) in (2usize..6).prop_flat_map(pair)) {
        let theta = angle(&ws, &w).unwrap();
        prop_assume!(theta > 1e-4 && PI - theta > 1e-4);
        let v = orthogonal_component(&ws, &w).unwrap();
        let v = v.as_slice();
        let wh: Vec<f64> = w.iter().map(|c| c / norm(&w)).collect();
        let sh: Vec<f64> = ws.iter().map(|c| c / norm(&ws)).collect();
        prop_assert!(dot(v, &wh).abs() <= 1e-9);
        prop_assert!((norm(v) - 1.0).abs() <= 1e-12);
        for j in 0..w.len() {
            let rebuilt = theta.cos() * wh[j] - theta.sin() * v[j];
            prop_assert!((rebuilt - sh[j]).abs() <= 1e-9);
        }
    }

    #[test]
    fn boundary_power_eta_nonincreasing(
        mut margins in prop::collection::vec(0.0f64..6.0, 2..50),
        alpha in 0.05f64..0.95,
        c in 0.01f64..3.0,
    ) {
        let p = TsybakovParams::new(alpha, 10.0).unwrap();
        let f = NoiseField::BoundaryPower { c };
        margins.sort_by(|a, b| a.total_cmp(b));
        let etas: Vec<f64> = margins.iter().map(|m| f.eta_from_margin(&p, *m)).collect();
        for w in etas.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        for e in &etas {
            prop_assert!((0.0..=0.5).contains(e));
        }
        // η depends on |margin| only.
        prop_assert_eq!(f.eta_from_margin(&p, -margins[0]), etas[0]);
    }

    #[test]
    fn c_alpha_a_decreases_in_a(alpha in 0.05f64..0.95, a1 in 0.1f64..50.0, bump in 1e-3f64..50.0) {
        let lo = c_alpha_a(&TsybakovParams::new(alpha, a1).unwrap());
        let hi = c_alpha_a(&TsybakovParams::new(alpha, a1 + bump).unwrap());
        prop_assert!(hi < lo);
        prop_assert!(hi > 0.0);
    }

    #[test]
    fn projection_lands_in_unit_ball(mut v in prop::collection::vec(-10.0f64..10.0, 1..8)) {
        project_unit_ball(&mut v);
        prop_assert!(norm(&v) <= 1.0 + 1e-12);
        let again = { let mut c = v.clone(); project_unit_ball(&mut c); c };
        for (a, b) in again.iter().zip(&v) {
            prop_assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn opgd_steps_stay_in_ball(
        grads in prop::collection::vec(prop::collection::vec(-20.0f64..20.0, 3), 1..30),
    ) {
        let cfg = LearnerConfig::new(
            0.1,
            2,
            BoundedParams::gaussian(1.0).unwrap(),
            TsybakovParams::new(0.5, 2.0).unwrap(),
        );
        let mut s = initial_state(&cfg, 3).unwrap();
        for g in &grads {
            s = opgd_step(&s, g, &cfg).unwrap();
            prop_assert!(s.w.norm() <= 1.0 + 1e-12);
        }
        prop_assert_eq!(s.t, grads.len());
    }

    #[test]
    fn basis_size_is_binomial(d in 1usize..6, k in 0usize..6) {
        let b = MonomialBasis::new(d, k).unwrap();
        prop_assert_eq!(b.len() as u128, binomial_count(d, k));
    }

    #[test]
    fn lift_inner_product_matches_univariate(
        coeffs in prop::collection::vec(-3.0f64..3.0, 1..6),
        w in prop::collection::vec(-1.0f64..1.0, 3),
        x in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        let p = UnivariatePoly::new(coeffs);
        let basis = MonomialBasis::new(3, 5).unwrap();
        let q = lift_along_direction(&p, &w, &basis).unwrap();
        let m = basis.eval_monomials(&x).unwrap();
        let inner: f64 = q.coeffs().iter().zip(&m).map(|(a, b)| a * b).sum();
        let direct = p.eval(dot(&w, &x));
        prop_assert!((inner - direct).abs() <= 1e-9 * direct.abs().max(1.0));
    }

    #[test]
    fn affine_compose_matches_pointwise(
        coeffs in prop::collection::vec(-3.0f64..3.0, 1..8),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        t in -2.0f64..2.0,
    ) {
        let p = UnivariatePoly::new(coeffs);
        let r = affine_compose(&p, a, b);
        let direct = p.eval(a * t + b);
        prop_assert!((r.eval(t) - direct).abs() <= 1e-9 * direct.abs().max(1.0));
    }

    #[test]
    fn square_poly_squares_values(
        coeffs in prop::collection::vec(-2.0f64..2.0, 6),
        x in prop::collection::vec(-2.0f64..2.0, 2),
    ) {
        let basis = MonomialBasis::new(2, 2).unwrap();
        let p = MultivariatePoly::new(basis, coeffs).unwrap();
        let sq = square_poly(&p).unwrap();
        let v = p.eval(&x).unwrap();
        prop_assert!((sq.eval(&x).unwrap() - v * v).abs() <= 1e-9 * (v * v).max(1.0));
    }

    #[test]
    fn spectral_minimum_beats_random_feasible_points(
        entries in prop::collection::vec(-3.0f64..3.0, 36),
        factors in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 6), 1..20),
        q in 0.1f64..10.0,
    ) {
        let raw = DMatrix::from_row_slice(6, 6, &entries);
        let m = (&raw + raw.transpose()) * 0.5;
        let sol = minimize_over_psd_ball(&m, q).unwrap();
        for f in &factors {
            let v = DMatrix::from_column_slice(6, 1, f);
            let n2 = v.norm_squared();
            prop_assume!(n2 > 1e-9);
            // Rank-one PSD matrix with Frobenius norm √Q.
            let a = &v * v.transpose() * (q.sqrt() / n2);
            prop_assert!(sol.objective <= (&a * &m).trace() + 1e-9);
        }
    }
}

fn reference_oracle(seed: u64) -> OracleConfig {
    let theta: f64 = 0.3;
    OracleConfig::new(
        Marginal::Gaussian { d: 2 },
        Halfspace::from_coords(vec![-theta.sin(), theta.cos()]).unwrap(),
        NoiseField::BoundaryPower { c: 0.5 },
        TsybakovParams::new(0.7, 10.0).unwrap(),
        seed,
    )
    .unwrap()
}

fn random_psd(basis: &Arc<MonomialBasis>, seed: u64) -> CertificateMatrix {
    let m = basis.len();
    let pts = Marginal::Gaussian { d: m }.sample(m, seed).unwrap();
    let b = DMatrix::from_row_slice(m, m, pts.as_flat());
    let mut c = CertificateMatrix::zero(basis.clone(), 1.0);
    c.a_mat = &b * b.transpose();
    c
}

/// The sample average of `m(x)ᵀ A m(x) · Ind_B · ⟨w,x⟩ · y` equals `tr(A M̃)`.
#[test]
fn certificate_objective_is_linear_in_a() {
    let o = reference_oracle(3);
    let data = o.draw(20_000).unwrap();
    let w = Halfspace::from_coords(vec![0.0, 1.0]).unwrap();
    let band = BandIndicator::new(w.clone(), 0.3, 4.0).unwrap();
    let basis = MonomialBasis::new(2, 3).unwrap();
    let mm = estimate_moment_matrix(&data, &band, &basis).unwrap();
    for seed in 0..5 {
        let c = random_psd(&basis, seed);
        let direct: f64 = data
            .iter()
            .map(|(x, y)| certificate_poly_value(&c, &band, x).unwrap() * w.margin(x) * y)
            .sum::<f64>()
            / data.len() as f64;
        let trace = (&c.a_mat * &mm.entries).trace();
        assert!(
            (direct - trace).abs() <= 1e-9 * trace.abs().max(1e-12),
            "direct {direct} trace {trace}"
        );
    }
}

/// `ℓ̂(w) = ⟨∇ℓ̂, w⟩` exactly, and finite differences agree with the gradient.
#[test]
fn loss_is_linear_with_matching_gradient() {
    let o = reference_oracle(4);
    let data = o.draw(5_000).unwrap();
    let w = Halfspace::from_coords(vec![0.0, 1.0]).unwrap();
    let band = BandIndicator::new(w, 0.3, 4.0).unwrap();
    let basis = MonomialBasis::new(2, 2).unwrap();
    let c = random_psd(&basis, 9);
    for rew in [
        Reweighting::Zero,
        Reweighting::Certificate {
            cert: &c,
            band: &band,
        },
    ] {
        let g = loss_gradient(&data, &rew, 0.01).unwrap();
        for u in [[0.3, -0.4], [1.0, 0.0], [-0.2, 0.9]] {
            let l = loss_value(&data, &rew, 0.01, &u).unwrap().mean;
            assert!((l - dot(&g, &u)).abs() <= 1e-10 * l.abs().max(1.0));
            let h = 1e-3;
            let dir = [0.6, 0.8];
            let shifted = [u[0] + h * dir[0], u[1] + h * dir[1]];
            let fd = (loss_value(&data, &rew, 0.01, &shifted).unwrap().mean - l) / h;
            let exact = dot(&g, &dir);
            assert!(
                (fd - exact).abs() <= 1e-6 * exact.abs().max(1.0),
                "fd {fd} exact {exact}"
            );
        }
    }
}
