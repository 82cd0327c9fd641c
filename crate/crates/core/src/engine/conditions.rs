use nalgebra::DMatrix;

use super::HypothesisWitness;
use crate::linalg;
use crate::model::Network;

/// Outcome of the determinant sign condition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionI {
    pub holds: bool,
    /// `det(y_1, .., y_n)`.
    pub det_reactants: f64,
    /// `det(y_1 - y_1', .., y_n - y_n')`.
    pub det_vectors: f64,
}

/// `det(y_1, .., y_n) * det(y_1 - y_1', .., y_n - y_n') < 0`, computed exactly.
pub fn check_condition_i(net: &Network, witness: &HypothesisWitness) -> ConditionI {
    let n = net.species_count();
    let mut reactants = DMatrix::<i64>::zeros(n, n);
    let mut vectors = DMatrix::<i64>::zeros(n, n);
    for (col, &k) in witness.reactions().iter().enumerate() {
        let r = net.reaction(k);
        for (i, v) in r.reactant().to_vec(n).into_iter().enumerate() {
            reactants[(i, col)] = v;
        }
        for (i, v) in r.loss_vector(n).into_iter().enumerate() {
            vectors[(i, col)] = v;
        }
    }
    let dr = linalg::integer_determinant(&reactants);
    let dv = linalg::integer_determinant(&vectors);
    ConditionI {
        holds: dr.signum() * dv.signum() < 0,
        det_reactants: dr as f64,
        det_vectors: dv as f64,
    }
}

/// Whether `sum_i eta~_i (y_i - y_i')` is positive in every coordinate, and the sum.
pub fn check_condition_ii(net: &Network, witness: &HypothesisWitness) -> (bool, Vec<f64>) {
    let n = net.species_count();
    let mut sum = vec![0.0; n];
    for (&k, &w) in witness.reactions().iter().zip(witness.eta_tilde()) {
        for (s, v) in sum.iter_mut().zip(net.reaction(k).loss_vector(n)) {
            *s += w * v as f64;
        }
    }
    (sum.iter().all(|&s| s > 0.0), sum)
}
