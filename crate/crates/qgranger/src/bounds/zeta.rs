use crate::error::{Error, Result};

// B_{2j} / (2j)! for j = 1..=8
const BERNOULLI_OVER_FACT: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
];

/// Riemann zeta for real `s > 1`.
///
/// Sums the first `N` terms directly and closes with the Euler-Maclaurin tail
/// `N^{1-s}/(s-1) - N^{-s}/2 + sum_j B_2j/(2j)! s(s+1)...(s+2j-2) N^{-s-2j+1}`.
/// For `s >= 60` the first three terms already reach machine precision.
pub fn riemann_zeta(s: f64) -> Result<f64> {
    if !(s > 1.0 + 1e-6) {
        return Err(Error::Domain(format!("zeta(s) diverges for s <= 1, got s = {s}")));
    }
    if s >= 60.0 {
        return Ok(1.0 + 2f64.powf(-s) + 3f64.powf(-s));
    }
    const N: usize = 20;
    let nf = N as f64;
    let mut sum: f64 = (1..N).rev().map(|k| (k as f64).powf(-s)).sum();
    let n_pow = nf.powf(-s);
    sum += nf * n_pow / (s - 1.0) + 0.5 * n_pow;
    // rising factorial s(s+1)...(s+2j-2) times N^{-s-2j+1}
    let mut fact = s;
    let mut pow = n_pow / nf;
    for (j, b) in BERNOULLI_OVER_FACT.iter().enumerate() {
        let term = b * fact * pow;
        sum += term;
        let k = 2.0 * j as f64 + 1.0;
        fact *= (s + k) * (s + k + 1.0);
        pow /= nf * nf;
    }
    Ok(sum)
}
