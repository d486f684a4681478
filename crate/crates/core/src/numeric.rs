//! Small scalar root-finding and fitting helpers shared by the modules.

pub(crate) const BISECT_MAX_ITERS: usize = 200;

/// Bisection on a sign-changing bracket. Stops after 200 halvings or once the
/// bracket is narrower than `1e-14 * (1 + |x|)`.
pub(crate) fn bisect<F>(f: F, mut lo: f64, mut hi: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return lo;
    }
    for _ in 0..BISECT_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= 1e-14 * (1.0 + mid.abs()) {
            return mid;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section search for the maximum of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_max<F>(f: F, mut lo: f64, mut hi: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..BISECT_MAX_ITERS {
        if (hi - lo).abs() <= 1e-13 * (1.0 + lo.abs()) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LineFit {
    pub slope: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    pub intercept: f64,
    pub r_squared: f64,
}

pub(crate) fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LineFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Uniform grid of `n + 1` points on `[lo, hi]`.
pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / n as f64;
    (0..=n).map(move |i| if i == n { hi } else { lo + step * i as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0);
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let x = golden_max(|x| -(x - 0.3) * (x - 0.3), -1.0, 2.0);
        assert!((x - 0.3).abs() < 1e-7);
    }

    #[test]
    fn line_fit_exact() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 - 0.25 * x).collect();
        let fit = fit_line(&xs, &ys).unwrap();
        assert!((fit.slope + 0.25).abs() < 1e-15);
        assert!((fit.intercept - 1.5).abs() < 1e-15);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }
}
