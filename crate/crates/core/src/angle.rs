use std::f64::consts::{PI, TAU};

/// Wraps an angle into `[-pi, pi)`.
#[inline]
pub fn wrap(angle: f64) -> f64 {
    let w = (angle + PI).rem_euclid(TAU) - PI;
    // rem_euclid can return TAU itself for tiny negative inputs
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

/// Smallest signed difference `a - b`, wrapped.
#[inline]
pub fn diff(a: f64, b: f64) -> f64 {
    wrap(a - b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pi_maps_to_minus_pi() {
        assert_eq!(wrap(PI), -PI);
        assert_eq!(wrap(-PI), -PI);
        assert!((wrap(3.0 * PI) + PI).abs() < 1e-12);
        assert_eq!(wrap(0.0), 0.0);
    }

    proptest! {
        #[test]
        fn wrapped_is_in_range_and_congruent(a in -1e4f64..1e4) {
            let w = wrap(a);
            prop_assert!((-PI..PI).contains(&w));
            let k = ((a - w) / TAU).round();
            prop_assert!((a - w - k * TAU).abs() < 1e-9);
        }
    }
}
