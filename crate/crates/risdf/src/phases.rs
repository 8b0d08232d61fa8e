//! Discrete RIS phase alphabet and quantization.

use num_complex::Complex64;

/// The 2^B available unit-modulus reflection coefficients
/// {e^{j 2π b / 2^B} : b = 0..2^B-1}.
pub fn phase_alphabet(bits: usize) -> Vec<Complex64> {
    let count = 1usize << bits;
    (0..count)
        .map(|b| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * b as f64 / count as f64))
        .collect()
}

/// Index of the alphabet point angularly closest to `theta`. Exact
/// midpoints round to the lower angle.
pub fn quantize_index(theta: Complex64, bits: usize) -> usize {
    let count = 1usize << bits;
    let step = 2.0 * std::f64::consts::PI / count as f64;
    let mut angle = theta.arg();
    if angle < 0.0 {
        angle += 2.0 * std::f64::consts::PI;
    }
    let t = angle / step;
    let frac = t - t.floor();
    let idx = if frac == 0.5 { t.floor() } else { t.round() };
    (idx as usize) % count
}

/// Quantize every entry to the nearest alphabet point. Outputs are exact
/// table entries, so membership in the alphabet is bit-exact.
pub fn quantize_phases(theta: &[Complex64], bits: usize) -> Vec<Complex64> {
    let alphabet = phase_alphabet(bits);
    theta
        .iter()
        .map(|&t| alphabet[quantize_index(t, bits)])
        .collect()
}

/// True when `theta` is (bit-exactly) a point of the B-bit alphabet,
/// within `tol` in complex distance.
pub fn in_alphabet(theta: Complex64, bits: usize, tol: f64) -> bool {
    phase_alphabet(bits)
        .iter()
        .any(|a| (theta - a).norm() <= tol)
}
