use nalgebra::DMatrix;

use super::conditions::{check_condition_i, check_condition_ii};
use super::{weighted_loss, EngineError, EtaVector, HypothesisWitness};
use crate::linalg;
use crate::model::{Network, ReactionKind};

/// Relative determinant tolerance for `eta0`, against the Hadamard bound.
pub const DEFAULT_TOL_BISECTION: f64 = 1e-10;
pub const DEFAULT_BISECTION_CAP: usize = 200;

/// `lambda` in 1, 10, .., 1e6.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=6).map(|k| 10f64.powi(k)).collect()
}

/// `eps` in 1, 0.1, .., 1e-6.
pub fn default_eps_grid() -> Vec<f64> {
    (0..=6).map(|k| 10f64.powi(-k)).collect()
}

/// Matrix of `T_eta(delta) = sum_k eta_k <y_k, delta> (y_k - y_k')`.
///
/// Equal to minus the Jacobian at the all-ones vector with rates `eta`.
pub fn build_t_eta(net: &Network, eta: &EtaVector) -> Result<DMatrix<f64>, EngineError> {
    Ok(t_eta_per_reaction(net, &eta.per_reaction(net)?))
}

pub(crate) fn t_eta_per_reaction(net: &Network, weights: &[f64]) -> DMatrix<f64> {
    let n = net.species_count();
    let mut t = DMatrix::zeros(n, n);
    for (r, &w) in net.reactions().iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let loss = r.loss_vector(n);
        for (j, c) in r.reactant().terms() {
            for (i, &l) in loss.iter().enumerate() {
                if l != 0 {
                    t[(i, j)] += w * l as f64 * f64::from(c);
                }
            }
        }
    }
    t
}

fn det_and_bound(net: &Network, weights: &[f64]) -> (f64, f64) {
    let t = t_eta_per_reaction(net, weights);
    (linalg::determinant(&t), linalg::hadamard_bound(&t))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EtaMinus {
    pub eta: EtaVector,
    pub lambda: f64,
    pub eps: f64,
    pub det: f64,
}

/// Scans `lambda` (outer loop, in the given order) and `eps` (inner loop) for
/// `eta = lambda * eta~` on the witness and `eps` elsewhere with
/// `det(T_eta) < 0` and a positive weighted sum of `y - y'`.
pub fn construct_eta_minus(
    net: &Network,
    witness: &HypothesisWitness,
    lambda_grid: &[f64],
    eps_grid: &[f64],
) -> Result<EtaMinus, EngineError> {
    let c1 = check_condition_i(net, witness);
    if !c1.holds {
        return Err(EngineError::ConditionIFailed {
            det_reactants: c1.det_reactants,
            det_vectors: c1.det_vectors,
        });
    }
    let (ok, sum) = check_condition_ii(net, witness);
    if !ok {
        return Err(EngineError::ConditionIIFailed { sum });
    }
    let idx = net.non_inflow_indices();
    for &lambda in lambda_grid {
        for &eps in eps_grid {
            let mut weights = vec![0.0; net.reaction_count()];
            for &k in &idx {
                weights[k] = eps;
            }
            for (&k, &w) in witness.reactions().iter().zip(witness.eta_tilde()) {
                weights[k] = lambda * w;
            }
            let (det, _) = det_and_bound(net, &weights);
            if det < 0.0 && weighted_loss(net, &weights).iter().all(|&s| s > 0.0) {
                let eta = EtaVector::new(idx.iter().map(|&k| weights[k]).collect())?;
                return Ok(EtaMinus {
                    eta,
                    lambda,
                    eps,
                    det,
                });
            }
        }
    }
    Err(EngineError::NoEtaMinusFound)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EtaPlus {
    pub eta: EtaVector,
    pub lambda: f64,
    pub eps: f64,
    pub det: f64,
}

/// `lambda+` on outflows and `eps+` on internal reactions, starting at
/// `(1e3, 1e-3)` and widening the ratio by 100 per step until
/// `det(T_eta) > 0`.
pub fn construct_eta_plus(net: &Network) -> Result<EtaPlus, EngineError> {
    if let Some(i) = net.first_missing_flow() {
        return Err(EngineError::NotFullyOpen(i));
    }
    let idx = net.non_inflow_indices();
    for step in 0..10 {
        let lambda = 1e3 * 10f64.powi(step);
        let eps = 1e-3 * 10f64.powi(-step);
        let mut weights = vec![0.0; net.reaction_count()];
        for &k in &idx {
            weights[k] = match net.reaction(k).kind() {
                ReactionKind::Outflow => lambda,
                _ => eps,
            };
        }
        let (det, bound) = det_and_bound(net, &weights);
        if det > DEFAULT_TOL_BISECTION * bound
            && weighted_loss(net, &weights).iter().all(|&s| s > 0.0)
        {
            let eta = EtaVector::new(idx.iter().map(|&k| weights[k]).collect())?;
            return Ok(EtaPlus {
                eta,
                lambda,
                eps,
                det,
            });
        }
    }
    Err(EngineError::NoEtaPlusFound)
}

/// Bisects `t` on `eta(t) = (1 - t) eta- + t eta+` for `det(T_eta(t)) = 0`.
///
/// The bracket is halved until it cannot shrink further in floating point
/// (or `max_iter` is reached); the endpoint with the smaller relative
/// determinant is returned if it is within `tol` of the Hadamard bound.
pub fn interpolate_eta_zero(
    net: &Network,
    eta_minus: &EtaVector,
    eta_plus: &EtaVector,
    tol: f64,
    max_iter: usize,
) -> Result<EtaVector, EngineError> {
    let minus = eta_minus.per_reaction(net)?;
    let plus = eta_plus.per_reaction(net)?;
    if minus == plus {
        return Err(EngineError::IdenticalEndpoints);
    }
    let at = |t: f64| -> Vec<f64> {
        minus
            .iter()
            .zip(&plus)
            .map(|(&a, &b)| (1.0 - t) * a + t * b)
            .collect()
    };
    let (det_minus, _) = det_and_bound(net, &minus);
    let (det_plus, _) = det_and_bound(net, &plus);
    if !(det_minus < 0.0 && det_plus > 0.0) {
        return Err(EngineError::SignPrecondition {
            det_minus,
            det_plus,
        });
    }

    let ratio = |t: f64| {
        let (d, h) = det_and_bound(net, &at(t));
        (d, if h > 0.0 { d.abs() / h } else { f64::INFINITY })
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut exact = None;
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (d, _) = ratio(mid);
        if d == 0.0 {
            exact = Some(mid);
            break;
        }
        if d < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (t, best) = match exact {
        Some(t) => (t, 0.0),
        None => {
            let (rl, rh) = (ratio(lo).1, ratio(hi).1);
            if rl <= rh {
                (lo, rl)
            } else {
                (hi, rh)
            }
        }
    };
    if best > tol {
        return Err(EngineError::BisectionStalled {
            lo,
            hi,
            ratio: best,
        });
    }
    let weights = at(t);
    EtaVector::new(
        net.non_inflow_indices()
            .iter()
            .map(|&k| weights[k])
            .collect(),
    )
}

/// Solves `det(T_eta) = 0` for the weight of reaction `free_index`, keeping
/// every other weight from `eta_base`.
///
/// Each reaction adds a rank-one term to `T_eta`, so the determinant is
/// affine in any single weight and two evaluations fix it.
pub fn solve_eta_zero_free_variable(
    net: &Network,
    eta_base: &EtaVector,
    free_index: usize,
) -> Result<EtaVector, EngineError> {
    let n = net.species_count();
    if free_index >= net.reaction_count() {
        return Err(EngineError::WitnessOutOfRange(free_index));
    }
    let reaction = net.reaction(free_index);
    if reaction.kind() == ReactionKind::Inflow {
        return Err(EngineError::FreeIndexIsInflow(free_index));
    }
    if reaction.loss_vector(n).iter().any(|&v| v < 0) {
        return Err(EngineError::FreeReactionNotNonNegative(free_index));
    }
    let mut weights = eta_base.per_reaction(net)?;
    weights[free_index] = 0.0;
    let rest = weighted_loss(net, &weights);
    if !rest.iter().all(|&s| s > 0.0) {
        return Err(EngineError::FreeConditionFailed { sum: rest });
    }

    let (d0, h0) = det_and_bound(net, &weights);
    weights[free_index] = 1.0;
    let (d1, h1) = det_and_bound(net, &weights);
    let slope = d1 - d0;
    if slope.abs() <= f64::EPSILON * h0.max(h1) {
        return Err(EngineError::ZeroCoefficient);
    }
    let value = -d0 / slope;
    if !(value > 0.0 && value.is_finite()) {
        return Err(EngineError::NonPositiveSolution(value));
    }
    weights[free_index] = value;
    EtaVector::new(
        net.non_inflow_indices()
            .iter()
            .map(|&k| weights[k])
            .collect(),
    )
}
