//! Integer square root by Newton iteration.

use num_bigint::BigUint;
use num_traits::{One, Zero};

/// `floor(sqrt(n))`: the unique `r` with `r^2 <= n < (r+1)^2`.
pub fn isqrt(n: &BigUint) -> BigUint {
    if n.is_zero() {
        return BigUint::zero();
    }
    // start from a power of two that is >= sqrt(n); the iterates then decrease
    // strictly until they reach floor(sqrt(n))
    let mut x = BigUint::one() << n.bits().div_ceil(2);
    loop {
        let y = (&x + n / &x) >> 1u8;
        if y >= x {
            break;
        }
        x = y;
    }
    debug_assert!(&x * &x <= *n && (&x + 1u8) * (&x + 1u8) > *n);
    x
}

/// `Some(r)` when `n = r^2`.
pub fn exact_sqrt(n: &BigUint) -> Option<BigUint> {
    let r = isqrt(n);
    (&r * &r == *n).then_some(r)
}
