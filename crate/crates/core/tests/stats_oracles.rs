use std::f64::consts::PI;

use opforge_core::stats::{
    class_difference, kolmogorov_sf, ks_statistic, ks_two_sample, pearson, two_proportion_z, two_sample_t, ClassStats,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

/// `P(|Z| >= |z|)` by quadrature of the normal density.
fn normal_two_tailed_oracle(z: f64) -> f64 {
    let z = z.abs().min(12.0);
    let half = simpson(|x| (-x * x / 2.0).exp() / (2.0 * PI).sqrt(), 0.0, z, 20_000);
    (1.0 - 2.0 * half).max(0.0)
}

/// `P(|T| >= |t|)` for Student's t with `nu` degrees of freedom. With
/// `x = √ν tan θ` the density integrates as `cos^(ν-1) θ`, and the upper tail
/// becomes `∫ sin^(ν-1) φ dφ` over `[0, π/2 - atan(|t|/√ν)]`.
fn student_two_tailed_oracle(t: f64, nu: f64) -> f64 {
    let f = |phi: f64| phi.sin().powf(nu - 1.0);
    let upper = PI / 2.0 - (t.abs() / nu.sqrt()).atan();
    simpson(f, 0.0, upper, 200_000) / simpson(f, 0.0, PI / 2.0, 200_000)
}

fn ks_series_oracle(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut k = 1u64;
    loop {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
        k += 1;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ecdf(xs: &[f64], t: f64) -> f64 {
    xs.iter().filter(|&&x| x <= t).count() as f64 / xs.len() as f64
}

fn brute_d(xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter().chain(ys).map(|&t| (ecdf(xs, t) - ecdf(ys, t)).abs()).fold(0.0, f64::max)
}

fn small_sample(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    // coarse grid so ties occur
    (0..n).map(|_| (rng.random_range(-20..=20) as f64) / 10.0).collect()
}

#[test]
fn z_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let n1 = rng.random_range(1..400usize);
        let n2 = rng.random_range(1..400usize);
        let x1 = rng.random_range(0..=n1);
        let x2 = rng.random_range(0..=n2);
        let r = two_proportion_z(x1, n1, x2, n2).unwrap();
        let pooled = (x1 + x2) as f64 / (n1 + n2) as f64;
        if pooled == 0.0 || pooled == 1.0 {
            assert!(r.degenerate);
            assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
            continue;
        }
        let z = (x1 as f64 / n1 as f64 - x2 as f64 / n2 as f64)
            / (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
        assert!((r.statistic - z).abs() < 1e-9, "z {} vs {}", r.statistic, z);
        let p = normal_two_tailed_oracle(z);
        assert!((r.p_value - p).abs() < 1e-9, "p {} vs {p} at z={z}", r.p_value);
    }
}

#[test]
fn z_table_one_counts() {
    let r = two_proportion_z(759, 788, 29, 788).unwrap();
    let pooled: f64 = 788.0 / 1576.0;
    let z = (759.0 / 788.0 - 29.0 / 788.0) / (pooled * (1.0 - pooled) * (2.0 / 788.0)).sqrt();
    assert!((r.statistic - z).abs() < 1e-9);
    assert!(r.p_value < 1e-9);
}

#[test]
fn welch_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    while checked < 100 {
        let n1 = rng.random_range(5..30);
        let n2 = rng.random_range(5..30);
        let xs: Vec<f64> = (0..n1).map(|_| rng.random::<f64>() * 4.0).collect();
        let shift = rng.random::<f64>();
        let ys: Vec<f64> = (0..n2).map(|_| rng.random::<f64>() * 3.0 + shift).collect();
        let r = two_sample_t(&xs, &ys).unwrap();

        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let var = |v: &[f64]| {
            let m = mean(v);
            v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
        };
        let (a, b) = (var(&xs) / n1 as f64, var(&ys) / n2 as f64);
        let t = (mean(&xs) - mean(&ys)) / (a + b).sqrt();
        let nu = (a + b).powi(2) / (a * a / (n1 - 1) as f64 + b * b / (n2 - 1) as f64);
        assert!((r.statistic - t).abs() < 1e-9);
        assert!((r.df.unwrap() - nu).abs() < 1e-9);
        let p = student_two_tailed_oracle(t, nu);
        assert!((r.p_value - p).abs() < 1e-9, "p {} vs {p} (t={t}, nu={nu})", r.p_value);
        checked += 1;
    }
}

#[test]
fn welch_small_example() {
    let r = two_sample_t(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
    let (a, b) = (1.0 / 3.0, (5.0 / 3.0) / 4.0);
    let t = (2.0 - 2.5) / f64::sqrt(a + b);
    let nu = (a + b) * (a + b) / (a * a / 2.0 + b * b / 3.0);
    assert!((r.statistic - t).abs() < 1e-9);
    assert!((r.p_value - student_two_tailed_oracle(t, nu)).abs() < 1e-9);
}

#[test]
fn welch_detects_one_sigma_shift() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let normal = |rng: &mut ChaCha8Rng| {
        let (u, v): (f64, f64) = (rng.random(), rng.random());
        (-2.0 * (1.0 - u).ln()).sqrt() * (2.0 * PI * v).cos()
    };
    let xs: Vec<f64> = (0..100).map(|_| normal(&mut rng)).collect();
    let ys: Vec<f64> = (0..100).map(|_| normal(&mut rng) + 1.0).collect();
    assert!(two_sample_t(&xs, &ys).unwrap().p_value < 0.01);
}

#[test]
fn pearson_matches_integer_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0;
    while checked < 100 {
        let n = rng.random_range(2..40);
        let xs: Vec<i64> = (0..n).map(|_| rng.random_range(-50..50)).collect();
        let ys: Vec<i64> = xs.iter().map(|x| x * rng.random_range(-3..4) + rng.random_range(-40..40)).collect();
        let (sx, sy): (i128, i128) = (xs.iter().map(|&v| v as i128).sum(), ys.iter().map(|&v| v as i128).sum());
        let sxx: i128 = xs.iter().map(|&v| (v * v) as i128).sum();
        let syy: i128 = ys.iter().map(|&v| (v * v) as i128).sum();
        let sxy: i128 = xs.iter().zip(&ys).map(|(&a, &b)| (a * b) as i128).sum();
        let n = n as i128;
        let (vx, vy) = (n * sxx - sx * sx, n * syy - sy * sy);
        let fx: Vec<f64> = xs.iter().map(|&v| v as f64).collect();
        let fy: Vec<f64> = ys.iter().map(|&v| v as f64).collect();
        if vx == 0 || vy == 0 {
            assert!(pearson(&fx, &fy).is_err());
            continue;
        }
        let r = (n * sxy - sx * sy) as f64 / ((vx as f64) * (vy as f64)).sqrt();
        assert!((pearson(&fx, &fy).unwrap() - r).abs() < 1e-9);
        checked += 1;
    }
}

#[test]
fn ks_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let n1 = rng.random_range(1..40);
        let n2 = rng.random_range(1..40);
        let xs = small_sample(&mut rng, n1);
        let ys: Vec<f64> = small_sample(&mut rng, n2).into_iter().map(|v| v + 0.3).collect();
        let d = brute_d(&xs, &ys);
        let r = ks_two_sample(&xs, &ys).unwrap();
        assert!((r.statistic - d).abs() < 1e-12);
        assert!((ks_statistic(&xs, &ys) - d).abs() < 1e-12);
        let ne = (n1 * n2) as f64 / (n1 + n2) as f64;
        let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
        let p = if d == 0.0 { 1.0 } else { ks_series_oracle(lambda) };
        assert!((r.p_value - p).abs() < 1e-9, "p {} vs {p} at λ={lambda}", r.p_value);
    }
}

#[test]
fn ks_n40_statistic() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let xs: Vec<f64> = (0..40).map(|_| rng.random()).collect();
        let ys: Vec<f64> = (0..40).map(|_| rng.random::<f64>() * 1.2).collect();
        assert!((ks_statistic(&xs, &ys) - brute_d(&xs, &ys)).abs() < 1e-12);
    }
}

#[test]
fn kolmogorov_sf_matches_series_across_branches() {
    for i in 1..=300 {
        let lambda = i as f64 * 0.01;
        assert!((kolmogorov_sf(lambda) - ks_series_oracle(lambda)).abs() < 1e-9, "λ={lambda}");
    }
}

#[test]
fn ks_trivial_cases() {
    let r = ks_two_sample(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0]).unwrap();
    assert_eq!(r.statistic, 1.0);
    let same = ks_two_sample(&[0.2, 0.1, 0.2], &[0.1, 0.2, 0.2]).unwrap();
    assert_eq!((same.statistic, same.p_value), (0.0, 1.0));
    let xs: Vec<f64> = (0..50).map(|i| i as f64 / 100.0).collect();
    let ys: Vec<f64> = (0..50).map(|i| 1.0 + i as f64 / 100.0).collect();
    let far = ks_two_sample(&xs, &ys).unwrap();
    assert!(far.p_value < 1e-6 && far.significance() > 0.999999);
}

fn stats(s: Vec<usize>, k: usize) -> ClassStats {
    let classes = (0..s.len()).map(|i| format!("C{i}")).collect();
    ClassStats { model_id: "m".into(), prompt: "x".into(), k, classes, mention_counts: s.clone(), s, mean_polarity: 0.0 }
}

proptest! {
    #[test]
    fn z_antisymmetric_and_bounded(n1 in 1usize..500, n2 in 1usize..500, f1 in 0.0f64..=1.0, f2 in 0.0f64..=1.0) {
        let (x1, x2) = ((f1 * n1 as f64) as usize, (f2 * n2 as f64) as usize);
        let a = two_proportion_z(x1, n1, x2, n2).unwrap();
        let b = two_proportion_z(x2, n2, x1, n1).unwrap();
        prop_assert!((0.0..=1.0).contains(&a.p_value));
        prop_assert!(a.statistic.is_finite());
        prop_assert_eq!(a.statistic, -b.statistic);
        prop_assert_eq!(a.p_value, b.p_value);
    }

    #[test]
    fn t_antisymmetric_and_bounded(
        xs in prop::collection::vec(-5.0f64..5.0, 2..30),
        ys in prop::collection::vec(-5.0f64..5.0, 2..30),
    ) {
        let a = two_sample_t(&xs, &ys).unwrap();
        let b = two_sample_t(&ys, &xs).unwrap();
        prop_assert!((0.0..=1.0).contains(&a.p_value));
        prop_assert!((a.statistic + b.statistic).abs() < 1e-12);
        prop_assert!((a.p_value - b.p_value).abs() < 1e-12);
    }

    #[test]
    fn ks_bounds_and_zero_iff_same_ecdf(
        xs in prop::collection::vec(0u8..6, 1..30),
        ys in prop::collection::vec(0u8..6, 1..30),
    ) {
        let fx: Vec<f64> = xs.iter().map(|&v| v as f64).collect();
        let fy: Vec<f64> = ys.iter().map(|&v| v as f64).collect();
        let r = ks_two_sample(&fx, &fy).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.statistic));
        prop_assert!((0.0..=1.0).contains(&r.p_value));
        let same = (0..6).all(|t| ecdf(&fx, t as f64) == ecdf(&fy, t as f64));
        prop_assert_eq!(r.statistic == 0.0, same);
    }

    #[test]
    fn pearson_affine(
        xs in prop::collection::vec(-10.0f64..10.0, 3..30),
        noise in prop::collection::vec(-10.0f64..10.0, 30),
        a in prop::sample::select(vec![-3.0, -0.5, 0.25, 2.0, 7.0]),
        b in -5.0f64..5.0,
    ) {
        let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| x + e).collect();
        let scaled: Vec<f64> = ys.iter().map(|y| a * y + b).collect();
        if let (Ok(r), Ok(s)) = (pearson(&xs, &ys), pearson(&xs, &scaled)) {
            prop_assert!((s - a.signum() * r).abs() < 1e-12, "{s} vs {r}");
        }
    }

    #[test]
    fn class_difference_antisymmetry_flags_and_cmax_shift(
        sa in prop::collection::vec(0usize..1000, 1..6),
        st_seed in prop::collection::vec(0usize..1000, 6),
        theta in 0i64..200,
        shift in 0usize..500,
    ) {
        let st: Vec<usize> = st_seed[..sa.len()].to_vec();
        let a = stats(sa.clone(), 2000);
        let t = stats(st.clone(), 2000);
        let at = class_difference(&a, &t, theta).unwrap();
        let ta = class_difference(&t, &a, theta).unwrap();
        prop_assert_eq!(at.d.clone(), ta.d.iter().map(|v| -v).collect::<Vec<_>>());
        let brute: Vec<usize> = (0..sa.len()).filter(|&c| sa[c] as i64 - st[c] as i64 >= theta).collect();
        prop_assert_eq!(&at.flagged, &brute);
        let plus = |v: &[usize]| v.iter().map(|x| x + shift).collect::<Vec<_>>();
        let shifted = class_difference(&stats(plus(&sa), 3000), &stats(plus(&st), 3000), theta).unwrap();
        prop_assert_eq!(shifted.c_max, at.c_max);
    }
}
