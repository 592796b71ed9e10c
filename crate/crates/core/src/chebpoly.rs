//! First- and second-kind Chebyshev polynomials with first and second
//! derivatives, evaluated by the three-term recurrence and its derivatives.
//!
//! The coefficient formulas evaluate these at `1 + eta/s^2`, which sits
//! just above 1, so derivatives come from differentiating the recurrence
//! instead of any trigonometric or finite-difference shortcut.

/// A polynomial value together with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChebEval {
    pub value: f64,
    pub first_deriv: f64,
    pub second_deriv: f64,
}

/// Run the shared recurrence `P_j = 2x P_{j-1} - P_{j-2}` from the seeds
/// `(P_0, P_1)` with `P_1' = d1`.
fn recurrence(j: usize, x: f64, p1: f64, d1: f64) -> ChebEval {
    // (value, first, second) for degrees j-2 and j-1
    let (mut v0, mut d0, mut e0) = (1.0, 0.0, 0.0);
    let (mut v1, mut dd1, mut e1) = (p1, d1, 0.0);
    if j == 0 {
        return ChebEval { value: v0, first_deriv: d0, second_deriv: e0 };
    }
    for _ in 2..=j {
        let v2 = 2.0 * x * v1 - v0;
        let d2 = 2.0 * v1 + 2.0 * x * dd1 - d0;
        let e2 = 4.0 * dd1 + 2.0 * x * e1 - e0;
        v0 = v1;
        d0 = dd1;
        e0 = e1;
        v1 = v2;
        dd1 = d2;
        e1 = e2;
    }
    ChebEval { value: v1, first_deriv: dd1, second_deriv: e1 }
}

/// `T_j(x)`, `T_j'(x)`, `T_j''(x)`.
pub fn cheb_first_kind(j: usize, x: f64) -> ChebEval {
    recurrence(j, x, x, 1.0)
}

/// `U_j(x)`, `U_j'(x)`, `U_j''(x)`.
pub fn cheb_second_kind(j: usize, x: f64) -> ChebEval {
    recurrence(j, x, 2.0 * x, 2.0)
}

/// Value of `U_j(x)` only.
pub fn cheb_u(j: usize, x: f64) -> f64 {
    cheb_second_kind(j, x).value
}

/// Value of `T_j(x)` only.
pub fn cheb_t(j: usize, x: f64) -> f64 {
    cheb_first_kind(j, x).value
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn base_cases() {
        let t0 = cheb_first_kind(0, 0.7);
        assert_eq!(t0, ChebEval { value: 1.0, first_deriv: 0.0, second_deriv: 0.0 });
        let t1 = cheb_first_kind(1, 0.7);
        assert_eq!((t1.value, t1.first_deriv, t1.second_deriv), (0.7, 1.0, 0.0));
        assert_eq!(cheb_second_kind(0, -3.0).value, 1.0);
        assert!((cheb_second_kind(1, 0.3).value - 0.6).abs() < 1e-15);
    }

    #[test]
    fn t2_symbolic() {
        // T_2 = 2x^2 - 1
        let e = cheb_first_kind(2, 2.0);
        assert_eq!((e.value, e.first_deriv, e.second_deriv), (7.0, 8.0, 4.0));
    }

    #[test]
    fn values_at_one() {
        let e = cheb_first_kind(5, 1.0);
        assert_eq!((e.value, e.first_deriv, e.second_deriv), (1.0, 25.0, 200.0));
        for j in 0..60usize {
            let jf = j as f64;
            let e = cheb_first_kind(j, 1.0);
            assert!((e.value - 1.0).abs() < 1e-12);
            assert!((e.first_deriv - jf * jf).abs() < 1e-9 * (1.0 + jf * jf));
            let second = jf * jf * (jf * jf - 1.0) / 3.0;
            assert!((e.second_deriv - second).abs() < 1e-9 * (1.0 + second));
            assert!((cheb_u(j, 1.0) - (jf + 1.0)).abs() < 1e-12);
        }
        assert_eq!(cheb_u(3, 1.0), 4.0);
    }

    #[test]
    fn u_is_scaled_t_derivative() {
        let u9 = cheb_u(9, 1.02);
        let t10 = cheb_first_kind(10, 1.02).first_deriv / 10.0;
        assert!((u9 - t10).abs() <= 1e-12 * t10.abs());
    }

    #[test]
    fn derivative_link_over_damped_arguments() {
        for &eta in &[0.05, 0.15, 1.0, 3.0, 10.0, 27.0] {
            for &s in &[2usize, 10, 50, 200, 500] {
                let x = 1.0 + eta / (s * s) as f64;
                for j in 1..=s.max(40) {
                    let td = cheb_first_kind(j, x).first_deriv;
                    let u = cheb_u(j - 1, x);
                    assert!((u - td / j as f64).abs() <= 1e-10 * td.abs(), "j={j} x={x}");
                }
            }
        }
    }

    #[test]
    fn second_derivative_of_u_against_t() {
        // U_{j-1}'' = T_j''' / j; check against a differentiated T recurrence
        // through the ODE (1-x^2)T'' - xT' + j^2 T = 0 differentiated once:
        // (1-x^2)T''' - 3xT'' + (j^2-1)T' = 0.
        for j in 2..40usize {
            let x = 0.37;
            let t = cheb_first_kind(j, x);
            let jf = j as f64;
            let t3 = (3.0 * x * t.second_deriv - (jf * jf - 1.0) * t.first_deriv) / (1.0 - x * x);
            let u = cheb_second_kind(j - 1, x);
            assert!((u.second_deriv - t3 / jf).abs() <= 1e-9 * (1.0 + t3.abs()));
            assert!((u.first_deriv - t.second_deriv / jf).abs() <= 1e-9 * (1.0 + t.second_deriv.abs()));
        }
    }

    proptest! {
        #[test]
        fn bounded_on_unit_interval(j in 0usize..300, x in -1.0f64..=1.0) {
            prop_assert!(cheb_t(j, x).abs() <= 1.0 + 1e-12);
            prop_assert!(cheb_u(j, x).abs() <= j as f64 + 1.0 + 1e-12);
        }

        #[test]
        fn matches_trigonometric_forms(j in 0usize..=200, x in -0.999f64..0.999) {
            let theta = x.acos();
            let t = cheb_t(j, x);
            let t_exact = (j as f64 * theta).cos();
            prop_assert!((t - t_exact).abs() <= 1e-9 * t_exact.abs().max(1e-3) + 1e-11);
            let u = cheb_u(j, x);
            let u_exact = ((j as f64 + 1.0) * theta).sin() / theta.sin();
            prop_assert!((u - u_exact).abs() <= 1e-9 * u_exact.abs().max(1e-3) + 1e-10);
        }

        #[test]
        fn finite_up_to_degree_1000(j in 0usize..=1000, x in -1.5f64..1.5) {
            let t = cheb_first_kind(j, x.clamp(-1.0005, 1.0005));
            prop_assert!(t.value.is_finite() && t.first_deriv.is_finite() && t.second_deriv.is_finite());
        }
    }
}
