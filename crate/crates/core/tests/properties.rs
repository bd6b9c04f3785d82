mod common;

use proptest::prelude::*;

use spinbat::models::{
    bhatia_davis_bound, cooperative_model, fit_scaling, local_model, CooperativeModelParams, LocalModelParams,
};
use spinbat::observables::{distribution, sample_shots};
use spinbat::operators::{build_h, hs_norm_closed_form, hs_norm_numeric};
use spinbat::schedule::{equalized_local_field, Equalization};
use spinbat::{CrosstalkMode, DensityState, Mode, Preset, PureState, SpinLattice};

use common::{diagonal, ghz_mixture, local_single, moments, product};

fn lattice_strategy() -> impl Strategy<Value = SpinLattice> {
    (2usize..9).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n), 0..20).prop_map(move |pairs| {
            let edges: Vec<(usize, usize)> = pairs.into_iter().filter(|(a, b)| a != b).collect();
            SpinLattice::new(n, edges, "random").unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edge_list_round_trip(lat in lattice_strategy()) {
        let text = lat.to_edge_list();
        let back = SpinLattice::from_edge_list(&text).unwrap();
        prop_assert_eq!(back.n_spins(), lat.n_spins());
        prop_assert_eq!(back.edges(), lat.edges());
    }

    #[test]
    fn norm_closed_form_matches_numeric(
        lat in lattice_strategy().prop_filter("small", |l| l.n_spins() <= 6),
        h in -3.0f64..3.0,
        j in -3.0f64..3.0,
        jct in -0.5f64..0.5,
        frac in 0.0f64..1.0,
    ) {
        let mut sched = Preset::Numerics.schedule(Mode::Cooperative);
        sched.h = h;
        sched.j = j;
        sched.j_crosstalk = jct;
        let t = frac * sched.tau;
        let op = build_h(t, &sched, &lat, CrosstalkMode::EdgeSet).unwrap();
        let c = sched.coefficients(t).unwrap();
        let jc = c.jc + sched.crosstalk_bias(t).unwrap();
        let closed = hs_norm_closed_form(c.bx, c.bz, jc, lat.n_spins(), lat.n_couplings());
        let numeric = hs_norm_numeric(&op).unwrap();
        prop_assert!((closed - numeric).abs() <= 1e-10 * closed.max(1e-300));
    }

    #[test]
    fn time_resolved_equalization_is_pointwise(
        h_c in -2.0f64..2.0,
        j_c in -2.0f64..2.0,
        ratio in 0.0f64..4.0,
        frac in 0.0f64..=1.0,
    ) {
        let n = 5usize;
        let n_c = ratio * n as f64;
        let mut coop = Preset::Numerics.schedule(Mode::Cooperative);
        coop.h = h_c;
        coop.j = j_c;
        let mut local = Preset::Numerics.schedule(Mode::Local);
        local.equalization = Some(Equalization { h_c, j_c, ratio });
        let t = frac * coop.tau;
        let l = local.coefficients(t).unwrap();
        let c = coop.coefficients(t).unwrap();
        let lhs = n as f64 * (l.bx * l.bx + l.bz * l.bz);
        let rhs = n as f64 * (c.bx * c.bx + c.bz * c.bz) + n_c * c.jc * c.jc;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-12));
    }

    #[test]
    fn equalized_field_dominates(h_c in -2.0f64..2.0, j in -2.0f64..2.0, ratio in 0.0f64..4.0, g in 0.1f64..2.0) {
        let h_l = equalized_local_field(h_c, j, ratio, g).unwrap();
        prop_assert!(h_l.abs() >= h_c.abs());
        prop_assert!(h_l * h_c >= 0.0);
    }

    #[test]
    fn fit_scales_with_sigma(
        alpha in 0.5f64..2.5,
        c in 0.2f64..5.0,
        k in 0.1f64..10.0,
        noise in prop::collection::vec(-0.05f64..0.05, 5),
    ) {
        let pts: Vec<(f64, f64)> = [2.0, 3.0, 5.0, 8.0, 13.0]
            .iter()
            .zip(&noise)
            .map(|(&n, e): (&f64, &f64)| (n, (1.0 + e) / (c * n.powf(alpha)).sqrt()))
            .collect();
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(n, s)| (n, s * k)).collect();
        let a = fit_scaling(&pts).unwrap();
        let b = fit_scaling(&scaled).unwrap();
        prop_assert!((a.alpha - b.alpha).abs() <= 1e-10);
        prop_assert!((b.c / a.c - k.powi(-2)).abs() <= 1e-10 * k.powi(-2));
        prop_assert!((a.alpha_err - b.alpha_err).abs() <= 1e-10);
        prop_assert!(a.alpha_err >= 0.0 && a.c_err >= 0.0);
    }

    #[test]
    fn models_respect_variance_bound(p in 0.0f64..=1.0, theta in 0.0f64..=std::f64::consts::FRAC_PI_2, n in 1usize..50) {
        let (mu, var) = local_model(&LocalModelParams { p, theta, delta: 0.3 }, n).unwrap();
        prop_assert!(var <= bhatia_davis_bound(mu).unwrap() + 1e-12);
        let (mu, var) = cooperative_model(&CooperativeModelParams { p, theta }, n).unwrap();
        prop_assert!(var <= bhatia_davis_bound(mu).unwrap() + 1e-12);
        prop_assert!(var >= -1e-15);
    }

    #[test]
    fn shots_stay_on_support(seed in any::<u64>(), theta in 0.0f64..1.5) {
        let psi = PureState::ghz(3, theta).unwrap();
        let dist = distribution(&psi);
        let rec = sample_shots(&dist, 200, seed).unwrap();
        prop_assert!(rec.samples.iter().all(|&m| m == 1.0 || m == -1.0));
        prop_assert_eq!(rec, sample_shots(&dist, 200, seed).unwrap());
    }
}

#[test]
fn local_model_grid_matches_product_states() {
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    for n in 1..=6 {
        for &p in &grid {
            for &tf in &grid {
                let theta = tf * std::f64::consts::FRAC_PI_2;
                let (mu, var) = local_model(&LocalModelParams { p, theta, delta: 0.0 }, n).unwrap();
                for delta in [0.0, 0.5, 1.0] {
                    let rho = product(&local_single(p, theta, delta), n);
                    let (m, v) = moments(&diagonal(&rho), n);
                    assert!(
                        (m - mu).abs() <= 1e-10 && (v - var).abs() <= 1e-10,
                        "n={n} p={p} theta={theta}"
                    );
                    let with_delta = local_model(&LocalModelParams { p, theta, delta }, n).unwrap();
                    assert_eq!(with_delta, (mu, var));
                }
            }
        }
    }
}

#[test]
fn cooperative_model_grid_matches_ghz_mixtures() {
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    for n in 1..=6 {
        for &p in &grid {
            for &tf in &grid {
                let theta = tf * std::f64::consts::FRAC_PI_2;
                let (mu, var) = cooperative_model(&CooperativeModelParams { p, theta }, n).unwrap();
                let (m, v) = moments(&diagonal(&ghz_mixture(p, theta, n)), n);
                assert!(
                    (m - mu).abs() <= 1e-10 && (v - var).abs() <= 1e-10,
                    "n={n} p={p} theta={theta}"
                );
            }
        }
    }
}

#[test]
fn library_distribution_matches_dense_populations() {
    let rho = ghz_mixture(0.3, 0.4, 4);
    let data = rho.transpose().iter().copied().collect();
    let state = DensityState::new(4, data).unwrap();
    let dist = distribution(&state);
    let (m, v) = moments(&diagonal(&rho), 4);
    assert!((dist.mean() - m).abs() < 1e-14 && (dist.variance() - v).abs() < 1e-14);
}
