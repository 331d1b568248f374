//! Bounded scalar minimization: Brent's parabolic interpolation with
//! golden-section fallback on a closed interval.

use alloc::format;

use crate::math;
use crate::{Error, Result};

const GOLDEN: f64 = 0.381_966_011_250_105_1; // (3 - sqrt 5) / 2

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds1D {
    lo: f64,
    hi: f64,
}

impl Bounds1D {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::invalid(format!("invalid bounds [{lo}, {hi}]")));
        }
        Ok(Bounds1D { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    pub x_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            x_tolerance: 1e-5,
            max_iterations: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeResult {
    pub x: f64,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `objective` over `bounds`.
///
/// The interior search follows the classic bounded Brent scheme (absolute
/// tolerance `x_tolerance / 3` plus a relative `sqrt(eps) * |x|` term). Once it
/// stops, both endpoints are evaluated and returned instead when they are
/// strictly better, so minima sitting on a bound are reported exactly.
pub fn minimize_bounded<F>(
    mut objective: F,
    bounds: Bounds1D,
    options: MinimizeOptions,
) -> Result<MinimizeResult>
where
    F: FnMut(f64) -> f64,
{
    if options.x_tolerance.is_nan() || options.x_tolerance <= 0.0 {
        return Err(Error::invalid("x_tolerance must be > 0"));
    }
    let mut eval = |x: f64| -> Result<f64> {
        let fx = objective(x);
        if fx.is_finite() {
            Ok(fx)
        } else {
            Err(Error::NonFinite { x })
        }
    };

    let sqrt_eps = math::sqrt(f64::EPSILON);
    let (mut a, mut b) = (bounds.lo, bounds.hi);

    // x: best so far, w: second best, v: previous value of w
    let mut v = a + GOLDEN * (b - a);
    let mut w = v;
    let mut x = v;
    let mut fx = eval(x)?;
    let (mut fv, mut fw) = (fx, fx);

    let mut d = 0.0;
    let mut e = 0.0;
    let mut xm = 0.5 * (a + b);
    let mut tol1 = sqrt_eps * math::abs(x) + options.x_tolerance / 3.0;
    let mut tol2 = 2.0 * tol1;

    let mut iterations = 0;
    let mut converged = true;

    while math::abs(x - xm) > tol2 - 0.5 * (b - a) {
        if iterations >= options.max_iterations {
            converged = false;
            break;
        }
        let mut golden = true;
        if math::abs(e) > tol1 {
            golden = false;
            let mut r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = math::abs(q);
            r = e;
            e = d;
            if math::abs(p) < math::abs(0.5 * q * r) && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if xm >= x { tol1 } else { -tol1 };
                }
            } else {
                golden = true;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = GOLDEN * e;
        }

        let step = if math::abs(d) >= tol1 {
            d
        } else if d >= 0.0 {
            tol1
        } else {
            -tol1
        };
        let u = x + step;
        let fu = eval(u)?;
        iterations += 1;

        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }

        xm = 0.5 * (a + b);
        tol1 = sqrt_eps * math::abs(x) + options.x_tolerance / 3.0;
        tol2 = 2.0 * tol1;
    }

    let mut best = (bounds.clamp(x), fx);
    for edge in [bounds.lo, bounds.hi] {
        let fe = eval(edge)?;
        if fe < best.1 {
            best = (edge, fe);
        }
    }

    Ok(MinimizeResult {
        x: best.0,
        f: best.1,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn run(f: impl FnMut(f64) -> f64, lo: f64, hi: f64) -> MinimizeResult {
        minimize_bounded(
            f,
            Bounds1D::new(lo, hi).unwrap(),
            MinimizeOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn quadratic_minimum() {
        let r = run(|x| (x - 2.0) * (x - 2.0), 0.0, 5.0);
        assert!(r.converged);
        assert!((r.x - 2.0).abs() < 1e-5, "{r:?}");
    }

    #[test]
    fn nonsmooth_minimum() {
        let r = run(|x: f64| (x - 1.0).abs(), 0.0, 3.0);
        assert!((r.x - 1.0).abs() < 1e-5, "{r:?}");
    }

    #[test]
    fn minimum_on_a_bound_is_exact() {
        let r = run(|x| x, 1e-6, 10.0);
        assert_eq!(r.x, 1e-6);
        let r = run(|x| -x, 1e-6, 10.0);
        assert_eq!(r.x, 10.0);
    }

    #[test]
    fn reports_exhausted_budget() {
        let opts = MinimizeOptions {
            x_tolerance: 1e-12,
            max_iterations: 3,
        };
        let r = minimize_bounded(
            |x: f64| (x - 0.3).powi(2),
            Bounds1D::new(0.0, 1.0).unwrap(),
            opts,
        )
        .unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let err = minimize_bounded(
            |x: f64| if x > 0.5 { f64::NAN } else { x },
            Bounds1D::new(0.0, 1.0).unwrap(),
            MinimizeOptions::default(),
        )
        .unwrap_err();
        match err {
            Error::NonFinite { x } => assert!(x > 0.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(Bounds1D::new(1.0, 1.0).is_err());
        assert!(Bounds1D::new(2.0, 1.0).is_err());
        assert!(Bounds1D::new(0.0, f64::INFINITY).is_err());
        let opts = MinimizeOptions {
            x_tolerance: 0.0,
            max_iterations: 10,
        };
        assert!(minimize_bounded(|x| x, Bounds1D::new(0.0, 1.0).unwrap(), opts).is_err());
    }

    proptest! {
        #[test]
        fn stays_in_bounds_and_beats_endpoints(
            c in -5.0f64..5.0,
            k in 0.1f64..10.0,
            wiggle in 0.0f64..3.0,
            lo in -3.0f64..0.0,
            span in 0.5f64..6.0,
        ) {
            let f = move |x: f64| k * (x - c).powi(2) + wiggle * (3.0 * x).sin();
            let hi = lo + span;
            let r = run(f, lo, hi);
            prop_assert!(r.x >= lo && r.x <= hi);
            if r.converged {
                prop_assert!(r.f <= f(lo) + 1e-12);
                prop_assert!(r.f <= f(hi) + 1e-12);
            }
            let again = run(f, lo, hi);
            prop_assert_eq!(r.x.to_bits(), again.x.to_bits());
            prop_assert_eq!(r.f.to_bits(), again.f.to_bits());
        }
    }
}
