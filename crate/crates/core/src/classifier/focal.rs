/// Probabilities are clamped to `[PROB_CLAMP, 1 − PROB_CLAMP]` before the log.
pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocalLoss {
    pub loss: f64,
    /// Derivative of the loss with respect to the pre-sigmoid score.
    pub grad: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `FL(p_t) = −α (1 − p_t)^γ ln p_t`, where `p_t` is the probability given to
/// the true class.
///
/// The gradient is taken with respect to the true-class score `z_t`
/// (`p_t = σ(z_t)`):
///
/// `dFL/dz_t = α (1 − p)^γ (γ p ln p − (1 − p))`
///
/// evaluated at the clamped probability. Outside the clamp range the
/// gradient is zero.
pub fn focal_loss(p_t: f64, alpha: f64, gamma: f64) -> FocalLoss {
    let p = p_t.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    let q = 1.0 - p;
    let modulator = q.powf(gamma);
    let loss = -alpha * modulator * p.ln();
    let grad = if p_t == p {
        alpha * modulator * (gamma * p * p.ln() - q)
    } else {
        0.0
    };
    FocalLoss { loss, grad }
}

/// Focal loss for a raw score against a 0/1 label, with the gradient taken
/// with respect to the score.
pub fn focal_loss_logit(score: f64, label: u8, alpha: f64, gamma: f64) -> FocalLoss {
    if label == 1 {
        focal_loss(sigmoid(score), alpha, gamma)
    } else {
        let fl = focal_loss(sigmoid(-score), alpha, gamma);
        FocalLoss {
            loss: fl.loss,
            grad: -fl.grad,
        }
    }
}
