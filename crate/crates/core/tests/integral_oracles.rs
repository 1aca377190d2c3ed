//! Closed-form integrals against independent numerical integration.

use hylleraas::integrals::quadrature::{tanh_sinh, GaussProduct, QuadPoint, TRange};
use hylleraas::integrals::{base_integral, folded_moment, log_integral, IntegralKey, IntegralKind, IntegralTable};
use hylleraas::real::{bits_for_digits, Real};
use proptest::prelude::*;

#[test]
fn polynomial_moments_match_gauss_product() {
    let bits = bits_for_digits(40);
    let rule = GaussProduct::new(8, bits);
    let table = IntegralTable::new();
    let mut worst = 0.0f64;
    let mut count = 0;
    for a in 0..=8i32 {
        for b in 0..=8 - a {
            for c in 0..=8 - a - b {
                let full = rule.integrate(|p| p.s.powi(a) * p.t.powi(b) * p.u.powi(c), TRange::Full);
                let exact = Real::from_ratio(&table.plain(a, b, c).unwrap(), bits);
                worst = worst.max((full - exact).abs().to_f64());
                let folded = rule.integrate(|p| p.s.powi(a) * p.t.powi(b) * p.u.powi(c), TRange::Folded);
                let exact = Real::from_ratio(&folded_moment(a, b, c).unwrap(), bits);
                worst = worst.max((folded - exact).abs().to_f64());
                count += 1;
            }
        }
    }
    assert_eq!(count, 165);
    assert!(worst <= 1e-30, "worst deviation {worst:e}");
}

#[test]
fn base_integrals_match_gauss_product() {
    let bits = bits_for_digits(40);
    let rule = GaussProduct::new(8, bits);
    for (a, b, c) in [(0, 0, 0), (1, 0, 0), (0, 0, 1), (2, 2, 1), (0, 3, 2)] {
        let q = rule.integrate(
            |p| p.s.powi(a) * p.t.powi(b) * p.u.powi(c) * &p.u * &(&(&p.s * &p.s) - &(&p.t * &p.t)),
            TRange::Folded,
        );
        let exact = Real::from_ratio(&base_integral(a, b, c).unwrap(), bits);
        assert!((q - exact).abs().to_f64() < 1e-30);
    }
}

#[test]
fn log_integral_matches_quadrature() {
    let bits = bits_for_digits(30);
    let q = tanh_sinh(
        |p: &QuadPoint<Real>| &p.ln_u * &p.u * &(&(&p.s * &p.s) - &(&p.t * &p.t)),
        TRange::Folded,
        1e-22,
        bits,
        5,
    )
    .unwrap();
    let exact = log_integral(0, 0, 0).unwrap().evaluate(bits);
    let err = (q.value - exact).abs().to_f64();
    assert!(err <= 1e-20, "deviation {err:e}");
}

#[test]
fn log_integral_is_c_derivative_of_base() {
    // d/dc of the folded base integral at c = 1, by central differences of
    // the analytically continued closed form gm(n)/((b+1)(b+c+2)).
    fn cont(a: f64, b: f64, c: f64) -> f64 {
        let f = |a: f64, b: f64, c: f64| {
            let n = a + b + c + 2.0;
            libm_gamma(n + 1.0) / 2f64.powf(n + 1.0) / ((b + 1.0) * (b + c + 2.0))
        };
        f(a + 2.0, b, c + 1.0) - f(a, b + 2.0, c + 1.0)
    }
    let h = 1e-4;
    let fd = (cont(0.0, 0.0, 1.0 + h) - cont(0.0, 0.0, 1.0 - h)) / (2.0 * h);
    let exact = log_integral(0, 0, 1).unwrap().to_f64();
    assert!((fd - exact).abs() < 1e-8, "fd {fd} exact {exact}");
}

// Lanczos gamma, adequate for the finite-difference oracle above.
fn libm_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

#[test]
fn corner_moments_match_quadrature() {
    let table = IntegralTable::new();
    for (a, b, c) in [(0, 0, -1), (1, 1, -1), (0, 2, 0), (2, 3, 1), (3, 0, -1), (1, 4, 2)] {
        let q = tanh_sinh(
            |p: &QuadPoint<f64>| p.s.powi(a) * p.t.powi(b) * p.u.powi(c) / p.s_minus_t,
            TRange::Full,
            1e-11,
            0,
            6,
        )
        .unwrap();
        let exact = table.corner(a, b, c).unwrap().to_f64();
        assert!((q.value - exact).abs() <= 1e-10 * exact.abs().max(1.0), "({a},{b},{c}): {} vs {exact}", q.value);
    }
}

#[test]
fn log_moments_with_inverse_u_squared() {
    let table = IntegralTable::new();
    for (a, b, c) in [(0, 2, -2), (2, 2, -2), (1, 0, -1), (0, 4, -2)] {
        let q = tanh_sinh(
            |p: &QuadPoint<f64>| p.s.powi(a) * p.t.powi(b) * p.u.powi(c) * p.ln_u,
            TRange::Full,
            1e-11,
            0,
            6,
        )
        .unwrap();
        let exact = table.log(a, b, c).unwrap().to_f64();
        assert!((q.value - exact).abs() <= 1e-10 * exact.abs().max(1.0), "({a},{b},{c}): {} vs {exact}", q.value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scaling_law_at_random_k(a in 0i32..4, b in 0i32..3, c in 0i32..3, k in 0.5f64..4.0) {
        let bits = bits_for_digits(30);
        let table = IntegralTable::new();
        let b = 2 * b;
        let key = IntegralKey::new(IntegralKind::Plain, a, b, c);
        let predicted = table.value_at_k(key, &Real::from_f64(k, bits)).unwrap().to_f64();
        // direct numerical integration with e^{-2ks}: substitute s' = ks
        let direct = tanh_sinh(
            |p: &QuadPoint<f64>| (p.s / k).powi(a) * (p.t / k).powi(b) * (p.u / k).powi(c) / k.powi(3),
            TRange::Full,
            1e-13,
            0,
            6,
        ).unwrap().value;
        prop_assert!((predicted - direct).abs() <= 1e-12 * predicted.abs().max(1.0));
    }
}
