//! Locating the efficiency at which a steady-state steering parameter crosses 1.
//!
//! The parameter is evaluated on five efficiencies across the bracket, a line
//! is fitted with inverse-variance weights, and the fit is repeated on five
//! fresh points around its crossing. The confidence half-width is the
//! delta-method 95% interval of `(1 − a)/b`.

use serde::Serialize;

use super::{steady_steering, EnsembleMode};
use crate::error::{Error, Result};
use crate::sme::{ScenarioParams, SimConfig};

const GRID_POINTS: usize = 5;
const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub eta: f64,
    pub value: f64,
    pub stderr: f64,
}

/// `S(η) ≈ intercept + slope·η` with the parameter covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub var_intercept: f64,
    pub var_slope: f64,
    pub cov: f64,
    pub chi2: f64,
}

impl LineFit {
    pub fn fit(points: &[GridPoint]) -> Result<LineFit> {
        if points.len() < 2 {
            return Err(Error::InvalidParameter("a line needs at least two points".into()));
        }
        let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for p in points {
            let w = 1.0 / p.stderr.max(1e-12).powi(2);
            s += w;
            sx += w * p.eta;
            sy += w * p.value;
            sxx += w * p.eta * p.eta;
            sxy += w * p.eta * p.value;
        }
        let det = s * sxx - sx * sx;
        if !(det > 0.0) {
            return Err(Error::InvalidParameter("fit points share one efficiency".into()));
        }
        let slope = (s * sxy - sx * sy) / det;
        let intercept = (sxx * sy - sx * sxy) / det;
        let chi2 = points
            .iter()
            .map(|p| ((p.value - intercept - slope * p.eta) / p.stderr.max(1e-12)).powi(2))
            .sum();
        Ok(LineFit {
            intercept,
            slope,
            var_intercept: sxx / det,
            var_slope: s / det,
            cov: -sx / det,
            chi2,
        })
    }

    /// Where the line reaches `level`, and the 95% half-width.
    pub fn crossing(&self, level: f64) -> (f64, f64) {
        let x = (level - self.intercept) / self.slope;
        let var = (self.var_intercept + x * x * self.var_slope + 2.0 * x * self.cov) / (self.slope * self.slope);
        (x, Z95 * var.max(0.0).sqrt())
    }

    pub fn slope_stderr(&self) -> f64 {
        self.var_slope.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CriticalStatus {
    Decided,
    /// The data could not pin the crossing inside the refined bracket.
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalEstimate {
    pub status: CriticalStatus,
    pub eta_c: f64,
    pub ci: f64,
    pub coarse: LineFit,
    pub fine: Option<LineFit>,
    pub refined_bracket: Option<(f64, f64)>,
    pub points: Vec<GridPoint>,
}

fn grid(lo: f64, hi: f64) -> Vec<f64> {
    (0..GRID_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64)
        .collect()
}

fn evaluate(template: &ScenarioParams, etas: &[f64], cfg: &SimConfig, mode: EnsembleMode) -> Result<Vec<GridPoint>> {
    etas.iter()
        .map(|&eta| {
            let params = ScenarioParams { eta, ..*template }.validated()?;
            let e = steady_steering(&params, cfg, mode)?;
            Ok(GridPoint {
                eta,
                value: e.value,
                stderr: e.stderr,
            })
        })
        .collect()
}

/// Steady-state efficiency threshold `S(η_c) = 1` for the scenario of
/// `template` (its `eta` is ignored) within `bracket`.
///
/// The bracket must straddle the threshold by two standard errors at both ends.
pub fn critical_efficiency(
    template: &ScenarioParams,
    bracket: (f64, f64),
    cfg: &SimConfig,
    mode: EnsembleMode,
) -> Result<CriticalEstimate> {
    let (lo, hi) = bracket;
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(Error::InvalidParameter(format!("bracket ({lo}, {hi}) must satisfy 0 ≤ lo < hi ≤ 1")));
    }
    let mut points = evaluate(template, &grid(lo, hi), cfg, mode)?;
    let (first, last) = (points[0], points[GRID_POINTS - 1]);
    if !(first.value < 1.0 - 2.0 * first.stderr && last.value > 1.0 + 2.0 * last.stderr) {
        return Err(Error::BracketDoesNotStraddle {
            lo,
            hi,
            s_lo: first.value,
            s_hi: last.value,
        });
    }
    let coarse = LineFit::fit(&points)?;
    let (guess, guess_ci) = coarse.crossing(1.0);
    let undecided = |eta_c, ci, fine, refined, points| CriticalEstimate {
        status: CriticalStatus::Undecided,
        eta_c,
        ci,
        coarse,
        fine,
        refined_bracket: refined,
        points,
    };
    if !(coarse.slope > 0.0) || !guess.is_finite() || guess < lo || guess > hi {
        return Ok(undecided(guess, guess_ci, None, None, points));
    }

    let half = 0.25 * (hi - lo);
    let refined = ((guess - half).max(lo), (guess + half).min(hi));
    let fine_points = evaluate(template, &grid(refined.0, refined.1), cfg, mode)?;
    let fine = LineFit::fit(&fine_points)?;
    points.extend(fine_points);
    points.sort_by(|a, b| a.eta.total_cmp(&b.eta));
    let (eta_c, ci) = fine.crossing(1.0);
    if !(fine.slope > 0.0) || !ci.is_finite() || ci > half {
        return Ok(undecided(eta_c, ci, Some(fine), Some(refined), points));
    }
    Ok(CriticalEstimate {
        status: CriticalStatus::Decided,
        eta_c,
        ci,
        coarse,
        fine: Some(fine),
        refined_bracket: Some(refined),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sme::Setting;

    fn pt(eta: f64, value: f64, stderr: f64) -> GridPoint {
        GridPoint { eta, value, stderr }
    }

    #[test]
    fn exact_line_is_recovered() {
        let pts: Vec<GridPoint> = (0..5).map(|i| pt(0.5 + 0.1 * i as f64, 0.2 + 1.0 * (0.5 + 0.1 * i as f64), 0.01)).collect();
        let f = LineFit::fit(&pts).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12 && (f.intercept - 0.2).abs() < 1e-12);
        let (x, ci) = f.crossing(1.0);
        assert!((x - 0.8).abs() < 1e-12);
        assert!(ci > 0.0 && ci < 0.05);
        assert!(f.chi2 < 1e-18);
    }

    #[test]
    fn weights_follow_inverse_variance() {
        // A wildly off but very uncertain point barely moves the fit.
        let pts = vec![pt(0.0, 0.0, 0.001), pt(1.0, 1.0, 0.001), pt(0.5, 5.0, 100.0)];
        let f = LineFit::fit(&pts).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-6);
    }

    #[test]
    fn degenerate_fits_rejected() {
        assert!(LineFit::fit(&[pt(0.5, 1.0, 0.1)]).is_err());
        assert!(LineFit::fit(&[pt(0.5, 1.0, 0.1), pt(0.5, 1.2, 0.1)]).is_err());
    }

    #[test]
    fn bracket_below_threshold_is_reported() {
        let cfg = SimConfig {
            dt: 5e-3,
            t_final: 3.0,
            burn_in: 2.0,
            n_traj: 100,
            seed: 0,
            workers: 1,
        };
        let template = ScenarioParams::l2k2(0.5, 0.2, Setting::X).unwrap();
        let err = critical_efficiency(&template, (0.0, 0.2), &cfg, EnsembleMode::Symmetric).unwrap_err();
        assert!(matches!(err, Error::BracketDoesNotStraddle { .. }), "{err}");
        assert!(critical_efficiency(&template, (0.6, 0.4), &cfg, EnsembleMode::Symmetric).is_err());
    }
}
