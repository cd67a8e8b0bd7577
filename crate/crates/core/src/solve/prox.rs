use crate::scalar::Scalar;

/// Proximal map of `x -> c/e * |x|^e` (`c >= 0`, `e > 1`):
/// the unique `x` with `x + c |x|^{e-1} sign(x) = y`.
///
/// The root shares the sign of `y` and lies in `[0, |y|]`. For `e < 2` the
/// scalar equation is concave in `x`, so Newton started below the root climbs
/// monotonically; for `e > 2` it is convex and Newton descends from above.
pub(crate) fn prox_power<T: Scalar>(y: T, c: T, e: T) -> T {
    if c == T::zero() || y == T::zero() {
        return y;
    }
    let target = y.abs();
    let two = T::c(2.0);
    let em1 = e - T::one();
    let x = if e == two {
        target / (T::one() + c)
    } else if e < two {
        // root >= min(y/2, (y/(2c))^{1/(e-1)})
        let lower = (target / two).min((target / (two * c)).powf(T::one() / em1));
        newton(lower, target, c, e, true)
    } else {
        let upper = target.min((target / c).powf(T::one() / em1));
        newton(upper, target, c, e, false)
    };
    x * y.signum()
}

fn newton<T: Scalar>(mut x: T, target: T, c: T, e: T, rising: bool) -> T {
    if x == T::zero() || !x.is_finite() {
        return T::zero();
    }
    let em1 = e - T::one();
    let tol = T::epsilon() * T::c(4.0);
    for _ in 0..100 {
        let phi = x + c * x.powf(em1) - target;
        let dphi = T::one() + c * em1 * x.powf(em1 - T::one());
        let next = x - phi / dphi;
        let next = if rising {
            next.max(x)
        } else {
            next.min(x).max(T::zero())
        };
        let step = (next - x).abs();
        x = next;
        if step <= tol * x || x == T::zero() {
            break;
        }
    }
    x
}
