use qmimo::rate::{approx_rate, ergodic_rate_mc, rate_point};

/// `integral_0^inf log2(1 + x) e^-x dx` by composite Simpson on [0, 60].
fn exponential_channel_capacity() -> f64 {
    let (a, b, n) = (0.0f64, 60.0f64, 60_000usize);
    let h = (b - a) / n as f64;
    let f = |x: f64| (1.0 + x).log2() * (-x).exp();
    let inner: f64 = (1..n)
        .map(|k| f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + inner + f(b)) * h / 3.0
}

#[test]
fn quadrature_oracle_value() {
    assert!((exponential_channel_capacity() - 0.860347382270886).abs() < 1e-10);
}

#[test]
fn single_antenna_single_user_matches_quadrature() {
    let mc = ergodic_rate_mc(&[1.0], 1, 1.0, 1.0, 100_000, 17).unwrap();
    assert!(mc.sum.z_score(exponential_channel_capacity()).abs() < 3.0);
}

#[test]
fn single_user_ideal_adc_closed_form() {
    let r = approx_rate(&[1.0], 0, 100, 1.0, 1.0).unwrap();
    assert!((r - 102f64.log2()).abs() < 1e-12);
}

#[test]
fn rate_point_combines_both_estimates() {
    let betas = [0.5, 0.1, 1.0];
    let p = rate_point(&betas, 32, 10.0, 0.8825, Some((500, 3))).unwrap();
    let mc = ergodic_rate_mc(&betas, 32, 10.0, 0.8825, 500, 3).unwrap();
    assert_eq!(p.sum_rate_mc, Some(mc.sum));
    assert_eq!(p.per_user_mc.as_deref(), Some(&mc.per_user[..]));
    assert!((p.sum_rate_approx - p.per_user_approx.iter().sum::<f64>()).abs() < 1e-15);
    assert!(rate_point(&betas, 32, 10.0, 0.8825, None)
        .unwrap()
        .sum_rate_mc
        .is_none());
}
