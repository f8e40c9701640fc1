use std::f64::consts::TAU;

/// Largest double below `2 pi`.
const BELOW_TAU: f64 = 6.283_185_307_179_585;

/// `a mod 2 pi` in `[0, 2 pi)`. Non-finite input maps to 0.
#[inline]
pub fn reduce_phase(a: f64) -> f64 {
    if (0.0..TAU).contains(&a) {
        return a;
    }
    if !a.is_finite() {
        return 0.0;
    }
    // beyond 2^50 the quotient loses bits; fmod is exact at any magnitude
    let r = if a.abs() < (1u64 << 50) as f64 { (-TAU).mul_add((a / TAU).floor(), a) } else { a % TAU };
    if r < 0.0 {
        (r + TAU).min(BELOW_TAU)
    } else if r >= TAU {
        (r - TAU).max(0.0)
    } else {
        r
    }
}

/// Sum of two phases in `[0, 2 pi)`, wrapped back into the range.
#[inline]
pub fn wrap_add(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s >= TAU {
        (s - TAU).min(BELOW_TAU)
    } else {
        s
    }
}

/// Distance on the circle of circumference `2 pi`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = reduce_phase(a - b);
    d.min(TAU - d)
}
