use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

use selci::dgp::{generate, make_beta, DgpConfig, Setting};
use selci::factor::{complement_projection, estimate_factors};
use selci::oga::{oga, select};
use selci::rng::stream;

fn gaussian(rng: &mut impl Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn factor_estimate_is_orthonormal_and_projection_annihilates_it(
        n in 20usize..60, p in 10usize..40, r in 0usize..3, seed in 0u64..1000,
    ) {
        let mut rng = stream(seed, 0);
        let f = gaussian(&mut rng, n, r);
        let l = gaussian(&mut rng, p, r);
        let x = &f * l.transpose() * 3.0 + gaussian(&mut rng, n, p) * 0.3;
        let est = estimate_factors(&x, 5).unwrap();
        prop_assert!(est.k_hat <= 5);
        prop_assert_eq!(est.f_hat.ncols(), est.k_hat);
        if est.k_hat > 0 {
            // F̂ᵀF̂ / n = I
            let g = est.f_hat.tr_mul(&est.f_hat) / n as f64;
            prop_assert!((g - DMatrix::identity(est.k_hat, est.k_hat)).amax() < 1e-8);
        }
        let resid = complement_projection(&est.f_hat, &x).unwrap();
        if est.k_hat > 0 {
            prop_assert!(est.f_hat.tr_mul(&resid).amax() < 1e-7 * (1.0 + x.amax()) * n as f64);
        }
        // Idempotent.
        let twice = complement_projection(&est.f_hat, &resid).unwrap();
        prop_assert!((twice - &resid).amax() < 1e-8 * (1.0 + x.amax()));
    }

    #[test]
    fn oga_residuals_shrink_and_are_orthogonal(n in 12usize..40, p in 5usize..20, seed in 0u64..1000) {
        let mut rng = stream(seed, 1);
        let x = gaussian(&mut rng, n, p);
        let y = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let m = p.min(n).min(6);
        let sel = oga(&x, &y, m).unwrap();
        prop_assert_eq!(sel.j_hat.len(), m);
        let mut sorted = sel.j_hat.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), m);
        for w in sel.residual_norms.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        let fitted = &x * &sel.beta_oga;
        let resid = &y - fitted;
        for &j in &sel.j_hat {
            prop_assert!(x.column(j).dot(&resid).abs() < 1e-9 * (1.0 + y.norm() * x.column(j).norm()));
        }
        // A shorter run is a prefix of the longer one.
        let prefix = oga(&x, &y, 1).unwrap();
        prop_assert_eq!(prefix.j_hat[0], sel.j_hat[0]);
    }
}

#[test]
fn lai_design_recovers_one_factor() {
    let beta = make_beta(250).unwrap();
    let hits = (0..100)
        .filter(|&seed| {
            let ds = generate(&DgpConfig::new(Setting::Lai, 200, 250, seed), &beta).unwrap();
            estimate_factors(&ds.x, 5).unwrap().k_hat == 1
        })
        .count();
    assert!(hits >= 90, "k_hat = 1 in {hits}/100 runs");
}

#[test]
fn lai_design_selects_most_of_the_support() {
    let beta = make_beta(500).unwrap();
    let hits = (0..100)
        .filter(|&seed| {
            let ds = generate(&DgpConfig::new(Setting::Lai, 400, 500, seed), &beta).unwrap();
            select(&ds.x, &ds.y).unwrap().m() >= 7
        })
        .count();
    assert!(hits >= 80, "at least 7 columns selected in {hits}/100 runs");
}

#[test]
fn lai_selection_frequencies_by_signal_strength() {
    let beta = make_beta(500).unwrap();
    let groups = [0.6, 0.4, 0.2, 0.1];
    let mut hits = [0usize; 4];
    let reps = 100;
    for seed in 0..reps {
        let ds = generate(&DgpConfig::new(Setting::Lai, 400, 500, seed), &beta).unwrap();
        for j in select(&ds.x, &ds.y).unwrap().j_hat {
            if let Some(g) = groups.iter().position(|&t| t == beta.values[j]) {
                hits[g] += 1;
            }
        }
    }
    let size = |t: f64| beta.values.iter().filter(|&&b| b == t).count() as f64;
    let ns: Vec<f64> = groups.iter().zip(hits).map(|(&t, h)| h as f64 / (size(t) * reps as f64)).collect();
    assert!(ns[0] >= 0.95 && ns[1] >= 0.95, "strong signals selected at rates {ns:?}");
    assert!((0.25..=0.6).contains(&ns[2]), "0.2 group selected at rate {}", ns[2]);
    assert!(ns[3] <= 0.1, "0.1 group selected at rate {}", ns[3]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn oga_energy_splits_along_the_path(n in 12usize..40, p in 5usize..20, seed in 0u64..1000) {
        let mut rng = stream(seed, 2);
        let x = gaussian(&mut rng, n, p);
        let y = DVector::from_fn(n, |t, _| x[(t, 0)] + rng.sample::<f64, _>(StandardNormal));
        let m = p.min(n).min(6);
        let sel = oga(&x, &y, m).unwrap();
        let explained: f64 = sel.beta_q.iter().map(|b| b * b).sum();
        let last = sel.residual_norms[m - 1];
        prop_assert!((y.norm_squared() - explained - last * last).abs() < 1e-8 * (1.0 + y.norm_squared()));
    }

    #[test]
    fn rescaling_an_unselected_column_keeps_the_selection(
        n in 12usize..40, p in 6usize..20, seed in 0u64..1000, scale in 0.01f64..100.0,
    ) {
        let mut rng = stream(seed, 3);
        let mut x = gaussian(&mut rng, n, p);
        let y = DVector::from_fn(n, |t, _| x[(t, 1)] - x[(t, 2)] + rng.sample::<f64, _>(StandardNormal));
        let m = 4.min(n);
        let sel = oga(&x, &y, m).unwrap();
        let Some(other) = (0..p).find(|j| !sel.j_hat.contains(j)) else { return Ok(()) };
        x.column_mut(other).scale_mut(scale);
        prop_assert_eq!(oga(&x, &y, m).unwrap().j_hat, sel.j_hat);
    }
}
