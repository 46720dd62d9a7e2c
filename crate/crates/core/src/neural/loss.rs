//! Losses and their derivatives.

/// Probabilities are clamped to `[EPS, 1 - EPS]` before taking logs.
pub const EPS: f64 = 1e-7;

pub fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Weighted binary cross-entropy on a probability:
/// `-(w * y * ln p + (1 - y) * ln(1 - p))`.
pub fn wbce(pred: f64, label: bool, pos_weight: f64) -> f64 {
    let p = pred.clamp(EPS, 1.0 - EPS);
    if label {
        -pos_weight * p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// [`wbce`] of `sigmoid(logit)` and its derivative with respect to the
/// logit. Inside the clamp range the logs are evaluated as softplus terms;
/// once clamped the loss is constant and the derivative zero.
pub fn wbce_logit(logit: f64, label: bool, pos_weight: f64) -> (f64, f64) {
    let p = sigmoid(logit);
    if !(EPS..=1.0 - EPS).contains(&p) {
        return (wbce(p, label, pos_weight), 0.0);
    }
    if label {
        (pos_weight * softplus(-logit), -pos_weight * (1.0 - p))
    } else {
        (softplus(logit), p)
    }
}

/// KL divergence from `N(mu, diag(sigma^2))` to the standard normal:
/// `sum 0.5 * (sigma^2 + mu^2 - 1 - ln sigma^2)`.
pub fn kl_gaussian(mu: &[f64], sigma: &[f64]) -> f64 {
    assert_eq!(mu.len(), sigma.len(), "mean and sigma lengths differ");
    mu.iter().zip(sigma).map(|(m, s)| 0.5 * (s * s + m * m - 1.0 - (s * s).ln())).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logit_form_matches_probability_form() {
        for s in [-8.0, -1.5, 0.0, 0.3, 4.0] {
            for label in [false, true] {
                let (l, _) = wbce_logit(s, label, 3.0);
                assert!((l - wbce(sigmoid(s), label, 3.0)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn logit_derivative_matches_difference() {
        let h = 1e-6;
        for s in [-3.0, -0.2, 0.7, 2.5] {
            for label in [false, true] {
                let (_, d) = wbce_logit(s, label, 25.0);
                let fd = (wbce_logit(s + h, label, 25.0).0 - wbce_logit(s - h, label, 25.0).0) / (2.0 * h);
                assert!((d - fd).abs() < 1e-6 * (1.0 + d.abs()), "{s} {label}: {d} vs {fd}");
            }
        }
    }

    #[test]
    fn saturated_logits_are_clamped() {
        let (l, d) = wbce_logit(40.0, false, 1.0);
        assert!((l - (-(1.0 - (1.0 - EPS)).ln())).abs() < 1e-6);
        assert_eq!(d, 0.0);
    }
}
