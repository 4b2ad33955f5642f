//! Real roots of low-degree polynomials restricted to an interval.
//!
//! Roots are isolated by splitting the interval at the critical points of the
//! polynomial (found recursively) so that each piece is monotone, then
//! bisected to full floating-point resolution. This is slower than the closed
//! forms but keeps working when the leading coefficient is tiny relative to
//! the others, which is exactly where the closed-form cubic loses digits.

/// Evaluates `c[0] x^d + c[1] x^(d-1) + ... + c[d]`.
pub(crate) fn eval(c: &[f64], x: f64) -> f64 {
    c.iter().fold(0.0, |acc, &ci| acc * x + ci)
}

fn derivative(c: &[f64]) -> Vec<f64> {
    let d = c.len() - 1;
    c[..d]
        .iter()
        .enumerate()
        .map(|(i, ci)| ci * (d - i) as f64)
        .collect()
}

/// Cauchy bound on the magnitude of every root.
fn root_bound(c: &[f64]) -> f64 {
    let lead = c[0].abs();
    1.0 + c[1..].iter().map(|ci| ci.abs() / lead).fold(0.0, f64::max)
}

fn split(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        if a == 0.0 {
            if b > 1.0 {
                1.0
            } else {
                0.5 * b
            }
        } else if b > 4.0 * a {
            (a * b).sqrt()
        } else {
            a + 0.5 * (b - a)
        }
    } else if b <= 0.0 {
        -split(-b, -a)
    } else {
        0.0
    }
}

fn bisect(c: &[f64], mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..2200 {
        let m = split(a, b);
        if m <= a || m >= b {
            break;
        }
        let fm = eval(c, m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    // Both ends are within an ulp or two; return the one closer to zero.
    if fa.abs() <= eval(c, b).abs() {
        a
    } else {
        b
    }
}

/// All real roots in `[lo, hi]`, ascending. `hi` may be `+inf`.
///
/// Leading coefficients that are exactly zero are dropped; a polynomial that
/// is identically zero has no isolated roots and yields an empty list.
pub(crate) fn real_roots_in(coeffs: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let first = match coeffs.iter().position(|c| *c != 0.0) {
        Some(i) => i,
        None => return Vec::new(),
    };
    let c = &coeffs[first..];
    if c.len() < 2 || !(lo <= hi) {
        return Vec::new();
    }
    if c.len() == 2 {
        let r = -c[1] / c[0];
        return if r >= lo && r <= hi {
            vec![r]
        } else {
            Vec::new()
        };
    }

    let bound = root_bound(c);
    let lo = lo.max(-bound);
    let hi = hi.min(bound);
    if lo > hi {
        return Vec::new();
    }

    let mut knots = vec![lo];
    knots.extend(
        real_roots_in(&derivative(c), lo, hi)
            .into_iter()
            .filter(|x| *x > lo && *x < hi),
    );
    knots.push(hi);

    let mut roots: Vec<f64> = Vec::new();
    let push = |r: f64, roots: &mut Vec<f64>| {
        if roots.last().is_none_or(|last| *last < r) {
            roots.push(r);
        }
    };
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (eval(c, a), eval(c, b));
        if fa == 0.0 {
            push(a, &mut roots);
        }
        if fa != 0.0 && fb != 0.0 && (fa < 0.0) != (fb < 0.0) {
            push(bisect(c, a, b, fa), &mut roots);
        }
    }
    let last = *knots.last().unwrap();
    if eval(c, last) == 0.0 {
        push(last, &mut roots);
    }
    roots
}
