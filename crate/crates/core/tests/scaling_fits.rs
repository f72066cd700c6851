use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rydberg_core::exec::Execution;
use rydberg_core::scaling::{
    bootstrap, collapse_score, fit_binder, fit_order, ObservableKind, ScalingDataset, ScalingRow,
};

// Generators written out independently of the library's ansatz helpers.
fn u4(g: f64, l: u32, g_c: f64, nu: f64, a: &[f64]) -> f64 {
    let x = (g - g_c) * (l as f64).powf(1.0 / nu);
    a.iter().enumerate().map(|(k, ak)| ak * x.powi(k as i32)).sum()
}

fn order(g: f64, l: u32, g_c: f64, nu: f64, beta: f64, b: &[f64]) -> f64 {
    b.iter()
        .enumerate()
        .map(|(k, bk)| bk * (g - g_c).powi(k as i32) * (l as f64).powf((k as f64 - beta) / nu))
        .sum()
}

fn dataset(
    kind: ObservableKind,
    sizes: &[u32],
    g_c: f64,
    half_width: f64,
    points: usize,
    rel_noise: f64,
    seed: u64,
    f: impl Fn(f64, u32) -> f64,
) -> ScalingDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::new();
    for &l in sizes {
        for i in 0..points {
            let g = g_c - half_width + 2.0 * half_width * i as f64 / (points - 1) as f64;
            let exact = f(g, l);
            let sigma = if rel_noise > 0.0 { rel_noise * exact.abs() } else { 1e-3 };
            let y = exact + rel_noise * exact.abs() * unit.sample(&mut rng);
            rows.push(ScalingRow { l, g, y, y_err: sigma });
        }
    }
    ScalingDataset::new(kind, rows).unwrap()
}

const A_DC: [f64; 5] = [0.7048, 0.122, -0.0096, -0.0025, 0.00034];
const B_DC: [f64; 5] = [0.309, 0.0679, 0.0056, -0.00096, -0.000035];
const SIZES: [u32; 3] = [12, 16, 20];

#[test]
fn binder_round_trip_is_exact() {
    let a = [0.6, 0.15, -0.02, 0.004, -0.0003];
    let d = dataset(ObservableKind::Binder, &[8, 12, 16], 1.1, 0.05, 11, 0.0, 0, |g, l| {
        u4(g, l, 1.1, 0.7, &a)
    });
    let fit = fit_binder(&d, 4, 0).unwrap();
    assert!((fit.g_c - 1.1).abs() < 1e-6, "{fit:?}");
    assert!((fit.nu - 0.7).abs() < 1e-6, "{fit:?}");
    for (got, want) in fit.coefficients.iter().zip(a) {
        assert!((got - want).abs() < 1e-6, "{fit:?}");
    }
    assert!(fit.chi2 < 1e-12);
    assert!(fit.beta.is_none());
    assert!(fit.g_c_err >= 0.0 && fit.nu_err >= 0.0);
}

#[test]
fn order_round_trip_is_exact() {
    let d = dataset(ObservableKind::OrderParam, &SIZES, 1.0959, 0.03, 11, 0.0, 0, |g, l| {
        order(g, l, 1.0959, 0.632, 0.3, &B_DC)
    });
    let fit = fit_order(&d, 1.0959, 0.632, 4, 0).unwrap();
    assert!((fit.beta.unwrap() - 0.3).abs() < 1e-6, "{fit:?}");
    for (got, want) in fit.coefficients.iter().zip(B_DC) {
        assert!((got - want).abs() < 1e-6);
    }
}

#[test]
fn size_independent_amplitude_gives_zero_beta() {
    let d = dataset(ObservableKind::OrderParam, &SIZES, 1.0, 0.03, 11, 0.0, 0, |g, l| {
        order(g, l, 1.0, 0.7, 0.0, &[0.4, 0.05])
    });
    let fit = fit_order(&d, 1.0, 0.7, 2, 0).unwrap();
    assert!(fit.beta.unwrap().abs() < 1e-6, "{fit:?}");
}

#[test]
fn l_min_drops_small_sizes() {
    // L = 8 carries a correction the ansatz cannot absorb.
    let d = dataset(ObservableKind::Binder, &[8, 12, 16, 20], 1.0959, 0.03, 11, 0.0, 0, |g, l| {
        u4(g, l, 1.0959, 0.632, &A_DC) + if l == 8 { 0.05 } else { 0.0 }
    });
    let fit = fit_binder(&d, 4, 12).unwrap();
    assert_eq!(fit.points, 33);
    assert!((fit.nu - 0.632).abs() < 1e-6);
    let biased = fit_binder(&d, 4, 0).unwrap();
    assert!(biased.chi2 > 1.0);
}

#[test]
fn noisy_fits_are_well_calibrated() {
    let mut nu = Vec::new();
    let mut beta = Vec::new();
    let mut reduced = Vec::new();
    for seed in 0..20 {
        let b = dataset(ObservableKind::Binder, &SIZES, 1.0959, 0.03, 11, 0.01, seed, |g, l| {
            u4(g, l, 1.0959, 0.632, &A_DC)
        });
        let f = dataset(ObservableKind::OrderParam, &SIZES, 1.0959, 0.03, 11, 0.01, 1000 + seed, |g, l| {
            order(g, l, 1.0959, 0.632, 0.291, &B_DC)
        });
        let fb = fit_binder(&b, 4, 12).unwrap();
        let fo = fit_order(&f, fb.g_c, fb.nu, 4, 12).unwrap();
        nu.push(fb.nu);
        beta.push(fo.beta.unwrap());
        reduced.push(fb.chi2_per_dof);
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        0.5 * (v[9] + v[10])
    };
    let (m_nu, m_beta, m_chi) = (median(&mut nu), median(&mut beta), median(&mut reduced));
    assert!((m_nu / 0.632 - 1.0).abs() < 0.05, "nu {m_nu}");
    assert!((m_beta / 0.291 - 1.0).abs() < 0.10, "beta {m_beta}");
    assert!((m_chi - 1.0).abs() < 0.5, "chi2/dof {m_chi}");
}

#[test]
fn order_fit_ignores_row_order() {
    let d = dataset(ObservableKind::OrderParam, &SIZES, 1.0959, 0.03, 11, 0.01, 5, |g, l| {
        order(g, l, 1.0959, 0.632, 0.291, &B_DC)
    });
    let mut shuffled = d.clone();
    shuffled.rows.reverse();
    shuffled.rows.rotate_left(7);
    let a = fit_order(&d, 1.0959, 0.632, 4, 0).unwrap();
    let b = fit_order(&shuffled, 1.0959, 0.632, 4, 0).unwrap();
    assert_eq!(a, b);
}

#[test]
fn collapse_prefers_true_exponents() {
    let d = dataset(ObservableKind::OrderParam, &SIZES, 1.0959, 0.03, 11, 0.0, 0, |g, l| {
        order(g, l, 1.0959, 0.632, 0.291, &B_DC)
    });
    let good = collapse_score(&d, 1.0959, 0.632, Some(0.291)).unwrap();
    let wrong_nu = collapse_score(&d, 1.0959, 2.0 * 0.632, Some(0.291)).unwrap();
    let swapped = collapse_score(&d, 1.0959, 0.291, Some(0.632)).unwrap();
    assert!(good <= 1e-10, "{good}");
    assert!(wrong_nu >= 10.0 * good.max(1e-300), "{wrong_nu}");
    assert!(swapped > good);

    let b = dataset(ObservableKind::Binder, &SIZES, 1.0959, 0.03, 11, 0.0, 0, |g, l| {
        u4(g, l, 1.0959, 0.632, &A_DC)
    });
    assert!(collapse_score(&b, 1.0959, 0.632, None).unwrap() <= 1e-10);
}

#[test]
fn bootstrap_spread_is_comparable_to_covariance_errors() {
    let d = dataset(ObservableKind::Binder, &SIZES, 1.0959, 0.03, 11, 0.01, 3, |g, l| {
        u4(g, l, 1.0959, 0.632, &A_DC)
    });
    let fit = fit_binder(&d, 4, 0).unwrap();
    let boot = bootstrap(&d, 40, 9, Execution::default(), |x| fit_binder(x, 4, 0));
    assert!(boot.failures < 10, "{boot:?}");
    let nu = boot.nu.unwrap();
    assert!(nu.std > 0.2 * fit.nu_err && nu.std < 5.0 * fit.nu_err, "{boot:?} vs {}", fit.nu_err);
    let again = bootstrap(&d, 40, 9, Execution::Sequential, |x| fit_binder(x, 4, 0));
    assert_eq!(boot, again);
}
