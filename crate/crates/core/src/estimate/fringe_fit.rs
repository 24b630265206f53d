use crate::coherence::FringeScan;
use crate::error::{invalid, Error, Result};

const P_CLAMP: (f64, f64) = (0.01, 0.99);

/// Result of fitting `P_up = c0 - (A/2) cos(phi_rf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeFit {
    pub coherence: f64,
    pub sigma: f64,
    /// Fitted intercept; 1/2 for an ideal fringe.
    pub offset: f64,
    pub offset_sigma: f64,
}

/// Weighted linear least squares on `{1, cos(phi_rf)}`.
///
/// Weights are binomial, `shots / (p (1 - p))`, with `p` taken from an
/// unweighted first pass and clamped to `[0.01, 0.99]`. Uncertainties come
/// from the weighted normal matrix, i.e. projection noise only.
pub fn fit_fringe(scan: &FringeScan) -> Result<FringeFit> {
    let pts = scan.points();
    if pts.len() < 3 {
        return Err(invalid(format!("fringe fit needs at least 3 points, got {}", pts.len())));
    }
    let (c0, c1, _) = solve(pts.iter().map(|p| (p.phi_rf.cos(), p.p_up, 1.0)))?;
    let (b0, b1, inv) = solve(pts.iter().map(|p| {
        let x = p.phi_rf.cos();
        let fitted = (c0 + c1 * x).clamp(P_CLAMP.0, P_CLAMP.1);
        (x, p.p_up, p.shots as f64 / (fitted * (1.0 - fitted)))
    }))?;
    Ok(FringeFit { coherence: -2.0 * b1, sigma: 2.0 * inv[2].sqrt(), offset: b0, offset_sigma: inv[0].sqrt() })
}

/// Returns intercept, slope and the inverse normal matrix `[s00, s01, s11]`.
fn solve(rows: impl Iterator<Item = (f64, f64, f64)>) -> Result<(f64, f64, [f64; 3])> {
    let (mut s0, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (x, y, w) in rows {
        s0 += w;
        sx += w * x;
        sxx += w * x * x;
        sy += w * y;
        sxy += w * x * y;
    }
    let det = s0 * sxx - sx * sx;
    if !(det > 1e-12 * s0 * sxx) {
        return Err(Error::IllConditioned("fringe phases give fewer than two distinct cos(phi_rf) values".into()));
    }
    let inv = [sxx / det, -sx / det, s0 / det];
    let b0 = inv[0] * sy + inv[1] * sxy;
    let b1 = inv[1] * sy + inv[2] * sxy;
    Ok((b0, b1, inv))
}
