//! Scalar root finding: safeguarded bisection and real roots of
//! low-degree polynomials.

/// Bisection on a sign-changing bracket, to `rel_tol` relative width.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> Option<f64>
where
    F: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= rel_tol * mid.abs().max(f64::MIN_POSITIVE) || mid == lo || mid == hi {
            return Some(mid);
        }
        let fm = f(mid);
        if !fm.is_finite() {
            return None;
        }
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Regula falsi with the Illinois modification on a sign-changing bracket.
/// Same contract as [`bisect`]; a bisection step is forced whenever three
/// iterations fail to halve the bracket.
pub fn illinois<F>(f: F, mut a: f64, mut b: f64, rel_tol: f64) -> Option<f64>
where
    F: Fn(f64) -> f64,
{
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return None;
    }
    // Which end the last step replaced: -1 for a, +1 for b.
    let mut side = 0i8;
    let mut block_width = (b - a).abs();
    for iter in 0..400 {
        let width = (b - a).abs();
        let mid = 0.5 * (a + b);
        if width <= rel_tol * mid.abs().max(f64::MIN_POSITIVE) || mid == a || mid == b {
            return Some(mid);
        }
        if iter % 3 == 0 {
            block_width = width;
        }
        let c = if iter % 3 == 2 && width > 0.5 * block_width {
            mid
        } else {
            let c = (a * fb - b * fa) / (fb - fa);
            if c > a.min(b) && c < a.max(b) {
                c
            } else {
                mid
            }
        };
        let fc = f(c);
        if !fc.is_finite() {
            return None;
        }
        if fc == 0.0 {
            return Some(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        } else {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        }
    }
    Some(0.5 * (a + b))
}

/// First sign change of `f` on the geometric grid `start * factor^k`,
/// `k = 0..steps`.
pub fn geometric_bracket<F>(f: F, start: f64, factor: f64, steps: usize) -> Option<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let mut a = start;
    let mut fa = f(a);
    for _ in 0..steps {
        let b = a * factor;
        let fb = f(b);
        if fa.is_finite() && fb.is_finite() && (fa == 0.0 || fa.signum() != fb.signum()) {
            return Some((a, b));
        }
        a = b;
        fa = fb;
    }
    None
}

/// Bracket for a root of an increasing `f` on (0, ∞), walking from `start`
/// by factors of two toward the sign change.
pub fn bracket_increasing<F>(f: F, start: f64, steps: usize) -> Option<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let fs = f(start);
    if !fs.is_finite() {
        return None;
    }
    let factor = if fs > 0.0 { 0.5 } else { 2.0 };
    geometric_bracket(f, start, factor, steps)
}

/// Evaluates `Σ c_k t^k`.
pub fn poly_eval(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| k as f64 * c)
        .collect()
}

fn trim(coeffs: &[f64]) -> &[f64] {
    let scale = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let mut end = coeffs.len();
    while end > 0 && coeffs[end - 1].abs() <= 1e-14 * scale {
        end -= 1;
    }
    &coeffs[..end]
}

/// Cauchy bound on the moduli of the roots.
pub fn cauchy_bound(coeffs: &[f64]) -> f64 {
    let c = trim(coeffs);
    if c.len() < 2 {
        return 0.0;
    }
    let lead = c[c.len() - 1];
    1.0 + c[..c.len() - 1]
        .iter()
        .fold(0.0_f64, |m, a| m.max((a / lead).abs()))
}

/// Sorted real roots in `[lo, hi]` of a polynomial `Σ c_k t^k`, found by
/// bracketing between the critical points. Double roots at extrema are
/// reported when the extremum value vanishes to roundoff.
pub fn poly_real_roots(coeffs: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let c = trim(coeffs);
    match c.len() {
        0 | 1 => Vec::new(),
        2 => {
            let r = -c[0] / c[1];
            if (lo..=hi).contains(&r) {
                vec![r]
            } else {
                Vec::new()
            }
        }
        _ => {
            let crit = poly_real_roots(&poly_derivative(c), lo, hi);
            let mut knots = Vec::with_capacity(crit.len() + 2);
            knots.push(lo);
            knots.extend(crit.iter().copied().filter(|t| *t > lo && *t < hi));
            knots.push(hi);
            let scale: f64 = c.iter().map(|a| a.abs()).sum::<f64>();
            let mut roots: Vec<f64> = Vec::new();
            let f = |t: f64| poly_eval(c, t);
            for w in knots.windows(2) {
                let (a, b) = (w[0], w[1]);
                let (fa, fb) = (f(a), f(b));
                if fa.signum() != fb.signum() && fa != 0.0 && fb != 0.0 {
                    if let Some(r) = bisect(f, a, b, 1e-15) {
                        roots.push(r);
                    }
                }
            }
            for &k in &knots {
                let mag = scale * (1.0 + k.abs()).powi(c.len() as i32 - 1);
                if f(k).abs() <= 1e-13 * mag {
                    roots.push(k);
                }
            }
            roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
            roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + a.abs()));
            roots
        }
    }
}
