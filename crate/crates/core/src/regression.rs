//! Deterministic least-squares primitives.
//!
//! All sums run over the points sorted by `(x, y, w)`, so a fit does not depend on
//! the order in which the caller supplies its points.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FitDiagnostics {
    /// Model coefficients; the layout is documented on each fitting routine.
    pub coefficients: Vec<f64>,
    /// Weighted RMS residual, in units of y.
    pub residual_rms: f64,
    pub n_points: usize,
}

impl FitDiagnostics {
    /// Weighted sum of squared residuals implied by `residual_rms`.
    fn sse(&self, weight_sum: f64) -> f64 {
        self.residual_rms * self.residual_rms * weight_sum
    }
}

fn sorted_points(xs: &[f64], ys: &[f64], weights: Option<&[f64]>) -> Result<Vec<(f64, f64, f64)>> {
    if xs.len() != ys.len() {
        return Err(Error::InsufficientData(format!(
            "x and y lengths differ ({} vs {})",
            xs.len(),
            ys.len()
        )));
    }
    if let Some(w) = weights {
        if w.len() != xs.len() {
            return Err(Error::InsufficientData("weights length differs from data".into()));
        }
        if let Some(bad) = w.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::OutOfRange(format!("weights must be >= 0, got {bad}")));
        }
    }
    let mut pts: Vec<(f64, f64, f64)> = xs
        .iter()
        .zip(ys)
        .enumerate()
        .map(|(i, (&x, &y))| (x, y, weights.map_or(1.0, |w| w[i])))
        .collect();
    pts.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.total_cmp(&b.2))
    });
    Ok(pts)
}

/// Weighted straight-line fit `y = c0 + c1 x`. Coefficients: `[intercept, slope]`.
pub fn linfit(xs: &[f64], ys: &[f64], weights: Option<&[f64]>) -> Result<FitDiagnostics> {
    let pts = sorted_points(xs, ys, weights)?;
    linfit_sorted(&pts)
}

fn linfit_sorted(pts: &[(f64, f64, f64)]) -> Result<FitDiagnostics> {
    let used = pts.iter().filter(|p| p.2 > 0.0).count();
    if used < 2 {
        return Err(Error::InsufficientData(format!(
            "line fit needs 2 weighted points, got {used}"
        )));
    }
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let xm = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let ym = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - xm) * (p.0 - xm)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - xm) * (p.1 - ym)).sum();
    let x_scale = pts.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    if !(sxx > sw * (x_scale * 1e-14).powi(2)) {
        return Err(Error::DegenerateDesign("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let sse: f64 = pts
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            p.2 * r * r
        })
        .sum();
    Ok(FitDiagnostics {
        coefficients: vec![intercept, slope],
        residual_rms: (sse / sw).sqrt(),
        n_points: pts.len(),
    })
}

/// Weighted parabola fit in vertex form `y = a (x - x_v)^2 + c`.
/// Coefficients: `[a, x_v, c]`.
///
/// Flat data (curvature negligible against the data scale) has no vertex and is
/// rejected with `DegenerateFit`, as is `a <= 0` when `require_positive` is set.
pub fn quadfit_vertex(
    xs: &[f64],
    ys: &[f64],
    weights: Option<&[f64]>,
    require_positive: bool,
) -> Result<FitDiagnostics> {
    let pts = sorted_points(xs, ys, weights)?;
    let used: Vec<_> = pts.iter().filter(|p| p.2 > 0.0).collect();
    if used.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "parabola fit needs 3 weighted points, got {}",
            used.len()
        )));
    }
    let sw: f64 = used.iter().map(|p| p.2).sum();
    let xm = used.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let xs_scale = used.iter().map(|p| (p.0 - xm).abs()).fold(0.0, f64::max);
    if !(xs_scale > 0.0) {
        return Err(Error::DegenerateDesign("all x values coincide".into()));
    }
    let n = used.len();
    let mut design = DMatrix::<f64>::zeros(n, 3);
    let mut rhs = DVector::<f64>::zeros(n);
    for (i, p) in used.iter().enumerate() {
        let t = (p.0 - xm) / xs_scale;
        let sq = p.2.sqrt();
        design[(i, 0)] = sq;
        design[(i, 1)] = sq * t;
        design[(i, 2)] = sq * t * t;
        rhs[i] = sq * p.1;
    }
    let svd = design.svd(true, true);
    let sol = svd
        .solve(&rhs, 1e-13)
        .map_err(|e| Error::DegenerateDesign(e.to_string()))?;
    let (p0, p1, p2) = (sol[0], sol[1], sol[2]);

    let y_scale = used.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let y_spread = used.iter().map(|p| (p.1 - p0).abs()).fold(0.0, f64::max);
    if p2.abs() <= 1e-10 * y_scale.max(y_spread) || p2 == 0.0 {
        return Err(Error::DegenerateFit(format!(
            "no measurable curvature (normalized a = {p2:e})"
        )));
    }
    if require_positive && p2 <= 0.0 {
        return Err(Error::DegenerateFit(format!("curvature is not positive (a = {p2:e})")));
    }
    let a = p2 / (xs_scale * xs_scale);
    let t_v = -p1 / (2.0 * p2);
    let x_v = xm + xs_scale * t_v;
    let c = p0 - p1 * p1 / (4.0 * p2);
    let sse: f64 = pts
        .iter()
        .map(|p| {
            let t = (p.0 - xm) / xs_scale;
            let r = p.1 - (p0 + p1 * t + p2 * t * t);
            p.2 * r * r
        })
        .sum();
    Ok(FitDiagnostics {
        coefficients: vec![a, x_v, c],
        residual_rms: (sse / sw).sqrt(),
        n_points: pts.len(),
    })
}

/// Two independent straight lines on either side of a breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseFit {
    /// Line through the points below the split (`[intercept, slope]`).
    pub lower: FitDiagnostics,
    /// Line through the points at and above the split.
    pub upper: FitDiagnostics,
    /// Number of points assigned to the lower segment.
    pub split_index: usize,
    /// Intersection of the two lines, clamped into the data range.
    pub breakpoint: f64,
    /// Total squared residual of both segments.
    pub sse: f64,
    pub n_points: usize,
}

/// Scans every split of the x-sorted data that leaves at least `min_per_segment`
/// points on each side and keeps the one with the smallest total squared residual.
/// Exact ties go to the breakpoint closest to zero.
pub fn piecewise_two_segment(xs: &[f64], ys: &[f64], min_per_segment: usize) -> Result<PiecewiseFit> {
    let min_seg = min_per_segment.max(2);
    let pts = sorted_points(xs, ys, None)?;
    let n = pts.len();
    if n < 2 * min_seg {
        return Err(Error::InsufficientData(format!(
            "two-segment fit needs {} points, got {n}",
            2 * min_seg
        )));
    }
    let (x_first, x_last) = (pts[0].0, pts[n - 1].0);
    let mut best: Option<PiecewiseFit> = None;
    for k in min_seg..=(n - min_seg) {
        let (lo, hi) = pts.split_at(k);
        let (Ok(lower), Ok(upper)) = (linfit_sorted(lo), linfit_sorted(hi)) else {
            continue;
        };
        let sse = lower.sse(lo.len() as f64) + upper.sse(hi.len() as f64);
        let (b0, b1) = (lower.coefficients[0], lower.coefficients[1]);
        let (c0, c1) = (upper.coefficients[0], upper.coefficients[1]);
        let breakpoint = if b1 != c1 {
            ((c0 - b0) / (b1 - c1)).clamp(x_first, x_last)
        } else {
            0.5 * (lo[k - 1].0 + hi[0].0)
        };
        let candidate = PiecewiseFit {
            lower,
            upper,
            split_index: k,
            breakpoint,
            sse,
            n_points: n,
        };
        best = match best {
            None => Some(candidate),
            Some(b) => {
                let better = candidate.sse < b.sse
                    || (candidate.sse == b.sse && candidate.breakpoint.abs() < b.breakpoint.abs());
                Some(if better { candidate } else { b })
            }
        };
    }
    best.ok_or_else(|| Error::DegenerateDesign("no admissible split".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 5.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let f = linfit(&xs, &ys, None).unwrap();
        assert_eq!(f.coefficients, vec![1.0, 2.0]);
        assert_eq!(f.residual_rms, 0.0);
    }

    #[test]
    fn zero_weight_excludes_outlier() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = [0.0, 1.0, 2.0, 30.0, 4.0];
        let w = [1.0, 1.0, 1.0, 0.0, 1.0];
        let f = linfit(&xs, &ys, Some(&w)).unwrap();
        assert!((f.coefficients[1] - 1.0).abs() < 1e-15);
        assert!(f.coefficients[0].abs() < 1e-15);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            linfit(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0], None),
            Err(Error::DegenerateDesign(_))
        ));
        assert!(matches!(
            linfit(&[1.0], &[0.0], None),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            linfit(&[1.0, 2.0], &[0.0, 1.0], Some(&[1.0, -1.0])),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn exact_parabola() {
        let xs: Vec<f64> = (0..9).map(|i| i as f64 * 0.5 - 1.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * (x - 0.7).powi(2) + 2.0).collect();
        let f = quadfit_vertex(&xs, &ys, None, true).unwrap();
        assert!((f.coefficients[0] - 3.0).abs() < 1e-12);
        assert!((f.coefficients[1] - 0.7).abs() < 1e-12);
        assert!((f.coefficients[2] - 2.0).abs() < 1e-12);
        assert!(f.residual_rms < 1e-12);
    }

    #[test]
    fn flat_data_flagged() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = [5.0; 5];
        assert!(matches!(
            quadfit_vertex(&xs, &ys, None, false),
            Err(Error::DegenerateFit(_))
        ));
        let down: Vec<f64> = xs.iter().map(|x| -(x - 2.0) * (x - 2.0)).collect();
        assert!(matches!(
            quadfit_vertex(&xs, &down, None, true),
            Err(Error::DegenerateFit(_))
        ));
        assert!(quadfit_vertex(&xs, &down, None, false).is_ok());
    }

    #[test]
    fn synthetic_two_regimes() {
        // slope 0.01 below the kink at -1, slope 1 above, continuous
        let xs: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| if x < -1.0 { 0.5 + 0.01 * (x + 1.0) } else { 0.5 + (x + 1.0) })
            .collect();
        let f = piecewise_two_segment(&xs, &ys, 4).unwrap();
        assert!((f.lower.coefficients[1] - 0.01).abs() < 1e-6);
        assert!((f.upper.coefficients[1] - 1.0).abs() < 1e-6);
        assert!((f.breakpoint + 1.0).abs() <= 0.5);
    }

    #[test]
    fn kink_between_grid_points() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| if x < 12.5 { 2.0 * x } else { 25.0 - 0.5 * (x - 12.5) })
            .collect();
        let f = piecewise_two_segment(&xs, &ys, 4).unwrap();
        assert_eq!(f.split_index, 13);
        assert!((f.breakpoint - 12.5).abs() < 1e-9);
    }

    #[test]
    fn too_few_points() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert!(matches!(
            piecewise_two_segment(&xs, &xs, 4),
            Err(Error::InsufficientData(_))
        ));
    }
}
