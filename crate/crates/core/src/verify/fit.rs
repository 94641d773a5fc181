use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Least-squares fit of `log e = slope log eps + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub eps: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Points dropped because their error was not positive.
    pub excluded: usize,
    /// At least four points spanning at least 1.5 decades.
    pub adequate: bool,
}

pub fn order_fit(points: &[(f64, f64)]) -> Result<OrderFit> {
    let kept: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(eps, e)| eps > 0.0 && e > 0.0 && eps.is_finite() && e.is_finite())
        .collect();
    if kept.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "order fit needs two points with positive eps and error, got {}",
            kept.len()
        )));
    }
    let xs: Vec<f64> = kept.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument(
            "order fit needs distinct eps values".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    let (lo, hi) = kept.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), p| {
        (lo.min(p.0), hi.max(p.0))
    });
    Ok(OrderFit {
        eps: kept.iter().map(|p| p.0).collect(),
        errors: kept.iter().map(|p| p.1).collect(),
        slope,
        intercept,
        r_squared,
        excluded: points.len() - kept.len(),
        adequate: kept.len() >= 4 && (hi / lo).log10() >= 1.5 - 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let sq: Vec<(f64, f64)> = [1e-1, 1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&e| (e, e * e))
            .collect();
        let f = order_fit(&sq).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(f.adequate);
        let lin: Vec<(f64, f64)> = [1e-2, 3e-3, 1e-3, 3e-4]
            .iter()
            .map(|&e| (e, 3.0 * e))
            .collect();
        let f = order_fit(&lin).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12);
        assert!((f.intercept - 3.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_errors_are_excluded() {
        let f = order_fit(&[(1e-1, 0.0), (1e-2, 1e-2), (1e-3, 1e-3)]).unwrap();
        assert_eq!(f.excluded, 1);
        assert!(!f.adequate);
        assert!(order_fit(&[(1e-1, 0.0), (1e-2, 1e-2)]).is_err());
    }
}
