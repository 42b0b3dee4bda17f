//! Small least-squares helpers for scaling-law fits.

/// Ordinary least-squares line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some(LineFit { slope, intercept, r_squared })
}

/// Fit of `y ≈ A x^{-e} + B` by scanning `e` and solving for `(A, B)`
/// with residuals measured relative to `y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerFit {
    pub exponent: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub residual: f64,
}

pub fn fit_power_with_offset(x: &[f64], y: &[f64], e_min: f64, e_max: f64, steps: usize) -> Option<PowerFit> {
    if x.len() < 3 || y.len() != x.len() {
        return None;
    }
    let mut best: Option<PowerFit> = None;
    for s in 0..=steps {
        let e = e_min + (e_max - e_min) * s as f64 / steps as f64;
        // weighted normal equations for columns (x^{-e}, 1), weights 1/y^2
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&xi, &yi) in x.iter().zip(y) {
            let w = 1.0 / (yi * yi);
            let f = xi.powf(-e);
            a11 += w * f * f;
            a12 += w * f;
            a22 += w;
            b1 += w * f * yi;
            b2 += w * yi;
        }
        let det = a11 * a22 - a12 * a12;
        if det.abs() < 1e-300 {
            continue;
        }
        let amp = (b1 * a22 - b2 * a12) / det;
        let off = (a11 * b2 - a12 * b1) / det;
        let residual: f64 = x.iter().zip(y).map(|(&xi, &yi)| ((amp * xi.powf(-e) + off - yi) / yi).powi(2)).sum();
        if best.is_none_or(|b| residual < b.residual) {
            best = Some(PowerFit { exponent: e, amplitude: amp, offset: off, residual });
        }
    }
    best
}
