//! Monte-Carlo invariants of the samplers, the oracle and the certificate
//! search.

use std::f64::consts::PI;

use halfcert::certificate::{certify, CertificateScaling, CertifyConfig, Preconditioner};
use halfcert::distributions::{
    check_bounds, isotropy, random_plane, BoundedParams, Marginal, Points,
};
use halfcert::evaluation::{check_error_sandwich, disagreement_rate};
use halfcert::geometry::dot;
use halfcert::noise::{NoiseField, TsybakovParams};
use halfcert::oracle::{empirical_noise_rate, OracleConfig};
use halfcert::rng::stream;
use halfcert::suites::ReferenceScenario;
use halfcert::Halfspace;

const FAMILIES: [&str; 3] = ["gaussian", "uniform_ball", "laplace_product"];

#[test]
fn samplers_are_isotropic_at_one_million() {
    let n = 1_000_000usize;
    let d = 3usize;
    for name in FAMILIES {
        let pts = Marginal::from_name(name, d).unwrap().sample(n, 21).unwrap();
        let iso = isotropy(&pts);
        let sn = (n as f64).sqrt();
        assert!(
            iso.mean_norm <= 5.0 / sn * (d as f64).sqrt(),
            "{name}: {iso:?}"
        );
        assert!(iso.max_cov_dev <= 10.0 / sn * d as f64, "{name}: {iso:?}");
    }
}

#[test]
fn random_planar_projections_stay_isotropic() {
    let n = 400_000usize;
    let mut rng = stream(5, "planes");
    for name in FAMILIES {
        let pts = Marginal::from_name(name, 5).unwrap().sample(n, 22).unwrap();
        let (u, v) = random_plane(&mut rng, 5);
        let flat: Vec<f64> = pts.rows().flat_map(|x| [dot(&u, x), dot(&v, x)]).collect();
        let iso = isotropy(&Points::from_flat(2, flat).unwrap());
        let sn = (n as f64).sqrt();
        assert!(iso.mean_norm <= 5.0 / sn * 2f64.sqrt(), "{name}: {iso:?}");
        assert!(iso.max_cov_dev <= 10.0 / sn * 2.0, "{name}: {iso:?}");
    }
}

#[test]
fn gaussian_meets_log_concave_constants() {
    let rep = check_bounds(
        &Marginal::Gaussian { d: 3 },
        &BoundedParams::log_concave_default(),
        400_000,
        8,
        2,
    )
    .unwrap();
    assert!(rep.passes(), "{rep:?}");
}

fn oracle(noise: NoiseField, seed: u64) -> OracleConfig {
    OracleConfig::new(
        Marginal::Gaussian { d: 3 },
        Halfspace::from_coords(vec![0.6, 0.0, -0.8]).unwrap(),
        noise,
        TsybakovParams::new(0.5, 10.0).unwrap(),
        seed,
    )
    .unwrap()
}

#[test]
fn zero_noise_never_flips() {
    for n in [1, 17, 10_000] {
        let o = oracle(NoiseField::Zero, n as u64);
        let data = o.draw(n).unwrap();
        assert_eq!(empirical_noise_rate(&data, &o.target).unwrap(), 0.0);
    }
}

#[test]
fn massart_flips_do_not_depend_on_direction() {
    let eta = 0.2;
    let o = oracle(NoiseField::ConstantMassart { eta }, 8);
    let data = o.draw(400_000).unwrap();
    let global = empirical_noise_rate(&data, &o.target).unwrap();
    let se_global = (eta * (1.0 - eta) / data.len() as f64).sqrt();
    assert!((global - eta).abs() <= 4.0 * se_global);
    for dir in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.5, -0.5, 0.7]] {
        let (mut flips, mut count) = (0usize, 0usize);
        for (x, y) in data.iter() {
            if dot(&dir, x) > 0.0 {
                count += 1;
                flips += (y != o.target.classify(x)) as usize;
            }
        }
        let rate = flips as f64 / count as f64;
        let se = (global * (1.0 - global) / count as f64).sqrt();
        assert!(
            (rate - global).abs() <= 4.0 * se,
            "dir {dir:?}: {rate} vs {global}"
        );
    }
}

#[test]
fn oracle_draws_are_reproducible() {
    let o = oracle(NoiseField::BoundaryPower { c: 0.5 }, 12);
    assert_eq!(o.draw(5000).unwrap(), o.draw(5000).unwrap());
    assert_ne!(
        o.draw(5000).unwrap(),
        o.clone().with_seed(13).draw(5000).unwrap()
    );
}

#[test]
fn disagreement_is_symmetric_and_matches_angle() {
    let m = Marginal::Gaussian { d: 4 };
    let mut rng = stream(3, "angles");
    for i in 0..10u64 {
        let (u, v) = random_plane(&mut rng, 4);
        let theta = PI * (i as f64 + 0.5) / 10.0;
        let h1 = Halfspace::from_coords(u.clone()).unwrap();
        let w2: Vec<f64> = u
            .iter()
            .zip(&v)
            .map(|(a, b)| theta.cos() * a + theta.sin() * b)
            .collect();
        let h2 = Halfspace::from_coords(w2).unwrap();
        let a = disagreement_rate(&h1, &h2, &m, 200_000, 40 + i).unwrap();
        let b = disagreement_rate(&h2, &h1, &m, 200_000, 40 + i).unwrap();
        assert_eq!(a.mean, b.mean);
        assert!(
            (a.mean - theta / PI).abs() <= 3.0 * a.se_or_nan(),
            "{theta}: {a:?}"
        );
    }
}

#[test]
fn sandwich_upper_bound_is_exact_on_shared_samples() {
    let sc = ReferenceScenario::new(2).unwrap();
    let data = sc.oracle.draw(100_000).unwrap();
    for theta in [0.01f64, 0.3, 2.0] {
        let h = Halfspace::from_coords(vec![theta.cos(), theta.sin()]).unwrap();
        let rep = check_error_sandwich(&data, &h, sc.wstar(), &sc.oracle.tsybakov).unwrap();
        assert!(rep.upper.holds && rep.upper.lhs <= rep.upper.rhs, "{rep:?}");
    }
}

fn certify_cfg(theta: f64) -> CertifyConfig {
    let mut cfg = CertifyConfig::new(theta, 12.0, 4, 1.0);
    cfg.scaling = CertificateScaling::MinimalNorm;
    cfg.preconditioner = Preconditioner::MarginWhitening { power: 3 };
    cfg
}

/// At `w = w*` no reweighting can push the validated objective far below 0;
/// at angle 0.3 a certificate validates with a clearly negative objective.
#[test]
fn certificate_search_soundness_and_sensitivity() {
    for seed in 0..5u64 {
        let sc = ReferenceScenario::new(seed).unwrap();
        let fit = sc.oracle.draw_stream(20_000, "fit", 0).unwrap();
        let hold = sc.oracle.draw_stream(20_000, "hold", 0).unwrap();

        let at_target = certify(&fit, &hold, sc.wstar(), &certify_cfg(0.3)).unwrap();
        if let Some(v) = &at_target.validation {
            if let Some(se) = v.std_err {
                assert!(v.objective_est >= -4.0 * se, "seed {seed}: {v:?}");
            }
        }
        assert!(!at_target.accepted);

        let away = certify(&fit, &hold, &sc.w, &certify_cfg(0.3)).unwrap();
        let v = away.validation.expect("certificate at angle 0.3");
        assert!(
            v.objective_est <= -3.0 * v.se_or_nan(),
            "seed {seed}: {v:?}"
        );
        assert!(away.accepted);
    }
}
