//! Scalar root finding by sampling and bisection.

/// Bisection on a bracket with `f(a) * f(b) <= 0`.
pub fn bisect<F: FnMut(f64) -> f64>(f: &mut F, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol || m == a || m == b {
            return m;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Sign changes of `f` over `n` uniform cells of `[lo, hi]`, refined by
/// bisection. Cells where `f` fails are skipped; a refined point is kept only
/// when `|f| <= accept` there, which discards poles.
pub fn scan<F: FnMut(f64) -> Option<f64>>(f: &mut F, lo: f64, hi: f64, n: usize, accept: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let h = (hi - lo) / n as f64;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=n {
        let x = if i == n { hi } else { lo + h * i as f64 };
        let Some(fx) = f(x) else {
            prev = None;
            continue;
        };
        if fx == 0.0 {
            out.push(x);
            prev = Some((x, fx));
            continue;
        }
        if let Some((px, pf)) = prev {
            if pf != 0.0 && (pf < 0.0) != (fx < 0.0) {
                let mut g = |t: f64| f(t).unwrap_or(f64::NAN);
                let r = bisect(&mut g, px, x, 1e-15 * (1.0 + x.abs()));
                if g(r).abs() <= accept * (1.0 + pf.abs().min(fx.abs())) {
                    out.push(r);
                }
            }
        }
        prev = Some((x, fx));
    }
    out
}

/// The smallest root found by [`scan`].
pub fn first_root<F: FnMut(f64) -> Option<f64>>(f: &mut F, lo: f64, hi: f64, n: usize, accept: f64) -> Option<f64> {
    scan(f, lo, hi, n, accept).into_iter().next()
}

/// Local minima of `|f|` that touch zero without a sign change (double
/// roots), found through sign changes of the centred difference quotient.
pub fn touching_roots<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64, n: usize, accept: f64) -> Vec<f64> {
    let h = (hi - lo) / n as f64;
    let eps = 1e-6 * h;
    let mut slope = |x: f64| (f(x + eps) - f(x - eps)) / (2.0 * eps);
    let mut out = Vec::new();
    let mut px = lo;
    let mut ps = slope(lo);
    for i in 1..=n {
        let x = lo + h * i as f64;
        let s = slope(x);
        if (ps < 0.0) != (s < 0.0) {
            let r = bisect(&mut slope, px, x, 1e-15 * (1.0 + x.abs()));
            out.push(r);
        }
        px = x;
        ps = s;
    }
    out.into_iter().filter(|&r| f(r).abs() <= accept).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_simple_and_double_roots() {
        let mut f = |x: f64| Some(x * x - 2.0);
        let r = scan(&mut f, -3.0, 3.0, 100, 1e-12);
        assert_eq!(r.len(), 2);
        assert!((r[1] - 2f64.sqrt()).abs() < 1e-14);
        let mut g = |x: f64| (x - 0.5) * (x - 0.5);
        let d = touching_roots(&mut g, 0.0, 1.0, 97, 1e-12);
        assert_eq!(d.len(), 1);
        assert!((d[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn rejects_poles() {
        let mut f = |x: f64| if x == 1.0 { None } else { Some(1.0 / (x - 1.0)) };
        assert!(scan(&mut f, 0.0, 2.0, 101, 1e-9).is_empty());
    }
}
