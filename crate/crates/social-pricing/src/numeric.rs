//! Shared numerical primitives: bracketed root finding, golden-section
//! maximization, counter-based random streams, and a small Nelder-Mead
//! simplex for low-dimensional likelihood fits.

/// Bisect `f` on `[lo, hi]`. Returns `None` when the endpoint values do not
/// straddle zero. Iterates to floating-point interval exhaustion or `iters`,
/// whichever comes first, so the result is accurate to ~1e-15 relative.
pub(crate) fn bisect<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, iters: u32) -> Option<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return Some(lo);
    }
    let f_hi = f(hi);
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.is_nan() || f_hi.is_nan() || (f_lo > 0.0) == (f_hi > 0.0) {
        return None;
    }
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval exhausted at this precision
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Golden-section search for the maximizer of a unimodal `f` on `[lo, hi]`.
/// Shrinks the interval below `xtol` (absolute). Returns the midpoint of the
/// final interval.
pub(crate) fn golden_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, xtol: f64) -> f64 {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    const INVPHI2: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (lo, hi);
    let mut c = a + INVPHI2 * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > xtol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = a + INVPHI2 * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
        if !(b - a > 0.0) {
            break;
        }
    }
    0.5 * (a + b)
}

/// SplitMix64 finalizer: bijective 64-bit mix with full avalanche.
#[inline]
pub(crate) fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// One draw from the counter-based stream keyed by (seed, run, user,
/// purpose, counter). Same key -> same value on every platform and thread
/// schedule; changing any word decorrelates the stream.
#[inline]
pub(crate) fn draw_u64(seed: u64, run: u64, user: u64, purpose: u64, counter: u64) -> u64 {
    let mut h = mix64(seed ^ 0xd6e8_feb8_6659_fd93);
    h = mix64(h ^ run);
    h = mix64(h ^ user);
    h = mix64(h ^ purpose);
    mix64(h ^ counter)
}

/// Uniform double in [0, 1) with 53 random bits.
#[inline]
pub(crate) fn draw_u01(seed: u64, run: u64, user: u64, purpose: u64, counter: u64) -> f64 {
    (draw_u64(seed, run, user, purpose, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Stream purposes for the keyed generator. Fixed numbering is part of the
/// reproducibility contract: reports quote seeds, so renumbering would
/// silently change published results.
pub(crate) mod purpose {
    pub const VALUATION: u64 = 1;
    pub const PROFILING: u64 = 2;
    pub const BINOMIAL: u64 = 3;
    pub const SAMPLE: u64 = 4;
    /// Test-only stream for generating random scenario parameters.
    #[cfg(test)]
    pub const SCENARIO: u64 = 5;
}

/// Nelder-Mead simplex minimizer for smooth low-dimensional objectives.
/// Returns (argmin, min value). Standard reflection/expansion/contraction
/// coefficients; restarts are the caller's concern.
pub(crate) fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    step: f64,
    iters: u32,
) -> (Vec<f64>, f64) {
    let dim = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let v0 = start.to_vec();
    let fv0 = f(&v0);
    simplex.push((v0, fv0));
    for i in 0..dim {
        let mut v = start.to_vec();
        v[i] += step;
        let fv = f(&v);
        simplex.push((v, fv));
    }
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        if (worst - best).abs() < 1e-14 * (1.0 + best.abs()) {
            break;
        }
        let mut centroid = vec![0.0; dim];
        for entry in simplex.iter().take(dim) {
            for (c, x) in centroid.iter_mut().zip(entry.0.iter()) {
                *c += x / dim as f64;
            }
        }
        let reflect: Vec<f64> = centroid
            .iter()
            .zip(simplex[dim].0.iter())
            .map(|(c, w)| c + (c - w))
            .collect();
        let f_reflect = f(&reflect);
        if f_reflect < simplex[0].1 {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(simplex[dim].0.iter())
                .map(|(c, w)| c + 2.0 * (c - w))
                .collect();
            let f_expand = f(&expand);
            simplex[dim] = if f_expand < f_reflect {
                (expand, f_expand)
            } else {
                (reflect, f_reflect)
            };
        } else if f_reflect < simplex[dim - 1].1 {
            simplex[dim] = (reflect, f_reflect);
        } else {
            let contract: Vec<f64> = centroid
                .iter()
                .zip(simplex[dim].0.iter())
                .map(|(c, w)| c + 0.5 * (w - c))
                .collect();
            let f_contract = f(&contract);
            if f_contract < simplex[dim].1 {
                simplex[dim] = (contract, f_contract);
            } else {
                // shrink toward the best vertex
                let best_v = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let shrunk: Vec<f64> = best_v
                        .iter()
                        .zip(entry.0.iter())
                        .map(|(b, x)| b + 0.5 * (x - b))
                        .collect();
                    let fv = f(&shrunk);
                    *entry = (shrunk, fv);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.remove(0)
}

/// Sample variance (n-1 denominator); 0 for fewer than two points.
pub(crate) fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}
