//! Gamma function.

/// `Γ(x)` via the Lanczos-class approximation of `libm::tgamma`. Poles at
/// nonpositive integers return infinity.
pub fn gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::INFINITY;
    }
    libm::tgamma(x)
}
