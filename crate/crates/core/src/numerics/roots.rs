use super::NumericsError;

const MAX_ITER: usize = 300;

/// Brent's method on `[lo, hi]`. Stops once `|f(x)| <= tol` or the bracket is
/// narrower than `tol`.
pub fn bracketed_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64, NumericsError> {
    brent(&f, lo, hi, tol, tol)
}

fn brent<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, ftol: f64, xtol: f64) -> Result<f64, NumericsError> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(NumericsError::NoSignChange { lo, hi, f_lo: fa, f_hi: fb });
    }
    let (mut c, mut fc) = (b, fb);
    let (mut d, mut e) = (b - a, b - a);
    for _ in 0..MAX_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb.abs() <= ftol {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(NumericsError::NonFiniteIntegrand { at: b });
        }
    }
    Err(NumericsError::MaxIterations { iterations: MAX_ITER })
}

/// Solves `f(x) = y` for strictly increasing `f` on `bracket`, returning `x` with
/// `|f(x) - y| <= tol * max(1, |y|)` unless `f` is steeper than machine resolution.
pub fn monotone_inverse<F: Fn(f64) -> f64>(
    f: F,
    y: f64,
    bracket: (f64, f64),
    tol: f64,
) -> Result<f64, NumericsError> {
    let (lo, hi) = bracket;
    let (f_lo, f_hi) = (f(lo), f(hi));
    if !(f_lo <= y && y <= f_hi) {
        return Err(NumericsError::OutOfRange { y, lo: f_lo, hi: f_hi });
    }
    let ftol = tol * y.abs().max(1.0);
    brent(&|x| f(x) - y, lo, hi, ftol, 0.0)
}

/// Inverse of a strictly increasing function on the whole line: the bracket is
/// grown geometrically around `guess` until it contains the target.
pub fn expanding_inverse<F: Fn(f64) -> f64>(f: F, y: f64, guess: f64, tol: f64) -> Result<f64, NumericsError> {
    let mut width = 1.0;
    let (mut lo, mut hi) = (guess - width, guess + width);
    for _ in 0..80 {
        let (f_lo, f_hi) = (f(lo), f(hi));
        if f_lo <= y && y <= f_hi {
            return monotone_inverse(&f, y, (lo, hi), tol);
        }
        width *= 2.0;
        if f_lo > y || f_lo.is_nan() {
            lo -= width;
        }
        if f_hi < y || f_hi.is_nan() {
            hi += width;
        }
    }
    Err(NumericsError::OutOfRange { y, lo: f(lo), hi: f(hi) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_roots() {
        assert!((bracketed_root(|x| x - 1.0, 0.0, 2.0, 1e-12).unwrap() - 1.0).abs() < 1e-12);
        let r = bracketed_root(|x| x * x - 2.0, 1.0, 2.0, 1e-12).unwrap();
        assert!((r * r - 2.0).abs() <= 1e-12 || (r - 2f64.sqrt()).abs() <= 1e-12);
    }

    #[test]
    fn no_sign_change_is_reported() {
        assert!(matches!(
            bracketed_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12),
            Err(NumericsError::NoSignChange { .. })
        ));
    }

    #[test]
    fn inverse_examples() {
        let f = |x: f64| (2.0 * x).exp();
        assert!(monotone_inverse(f, 1.0, (-5.0, 5.0), 1e-14).unwrap().abs() < 1e-14);
        let x = monotone_inverse(f, (-0.08f64).exp(), (-5.0, 5.0), 1e-15).unwrap();
        assert!((x + 0.04).abs() < 1e-14);
        let x = monotone_inverse(|x| x * x * x + x, 2.0, (-3.0, 3.0), 1e-15).unwrap();
        assert!((x - 1.0).abs() < 1e-14);
        assert!(matches!(
            monotone_inverse(f, 0.0, (-5.0, 5.0), 1e-12),
            Err(NumericsError::OutOfRange { .. })
        ));
    }

    #[test]
    fn expanding_inverse_finds_far_roots() {
        let x = expanding_inverse(|x| x.exp(), 1e30, 0.0, 1e-14).unwrap();
        assert!((x - 1e30f64.ln()).abs() < 1e-12);
    }
}
