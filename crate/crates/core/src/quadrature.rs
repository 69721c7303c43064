//! Adaptive Simpson quadrature, used by the integral node of [`crate::expr`]
//! and by the linear-system routines that need `exp(∫K)`.

const MAX_DEPTH: u32 = 48;

/// `∫_a^b f(s) ds` to roughly `tol` (absolute, scaled by the interval).
pub fn integrate<E, F>(f: &mut F, a: f64, b: f64, tol: f64) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    if a == b {
        return Ok(0.0);
    }
    // Split into a few panels first so that narrow features are not missed.
    let panels = 8;
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let lo = a + h * i as f64;
        let hi = if i + 1 == panels { b } else { lo + h };
        let fa = f(lo)?;
        let fb = f(hi)?;
        let m = 0.5 * (lo + hi);
        let fm = f(m)?;
        let whole = simpson(lo, hi, fa, fm, fb);
        total += refine(f, lo, hi, fa, fm, fb, whole, tol / panels as f64, MAX_DEPTH)?;
    }
    Ok(total)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<E, F>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol.max(f64::EPSILON * whole.abs()) {
        return Ok(left + right + diff / 15.0);
    }
    Ok(refine(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
        + refine(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_smooth_functions() {
        let mut f = |s: f64| Ok::<_, ()>(s.cos());
        let v = integrate(&mut f, 0.0, 1.5, 1e-13).unwrap();
        assert!((v - 1.5f64.sin()).abs() < 1e-13);
        let mut g = |s: f64| Ok::<_, ()>(s.exp());
        let v = integrate(&mut g, 1.0, -1.0, 1e-13).unwrap();
        assert!((v + (1f64.exp() - (-1f64).exp())).abs() < 1e-13);
    }
}
