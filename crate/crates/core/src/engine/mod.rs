//! The determinant optimization method for fully open networks.
//!
//! Starting from `n` reactions that satisfy a determinant sign condition and a
//! positivity condition, the method finds weights `eta0` on the internal and
//! outflow reactions at which `T_eta` is singular, takes a null vector `delta`,
//! and turns both into rates with two positive steady states: the all-ones
//! vector and `exp(delta)`.

mod certificate;
mod conditions;
mod method;
mod teta;

use std::fmt;
use std::ops::Deref;

use thiserror::Error;

use crate::model::{ModelError, Network, ReactionKind};

pub use certificate::{
    build_certificate, nullspace_delta, phi, verify_certificate, Certificate, Diagnostics,
    VerificationReport, DEFAULT_TOL_DET, DEFAULT_TOL_RANK, DEFAULT_TOL_RESIDUAL, MAX_HALVINGS,
};
pub use conditions::{check_condition_i, check_condition_ii, ConditionI};
pub use method::{run_method, MethodConfig, MethodError, MethodOutcome, Stage, Strategy};
pub use teta::{
    build_t_eta, construct_eta_minus, construct_eta_plus, default_eps_grid, default_lambda_grid,
    interpolate_eta_zero, solve_eta_zero_free_variable, EtaMinus, EtaPlus, DEFAULT_BISECTION_CAP,
    DEFAULT_TOL_BISECTION,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("eta weight {index} is {value}; weights must be finite and positive")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("{what}: expected length {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("witness reaction {0} does not exist")]
    WitnessOutOfRange(usize),
    #[error("witness reaction {0} is an inflow")]
    WitnessInflow(usize),
    #[error("witness reaction {0} listed twice")]
    WitnessDuplicate(usize),
    #[error("condition I fails: det(y) = {det_reactants}, det(y - y') = {det_vectors}")]
    ConditionIFailed {
        det_reactants: f64,
        det_vectors: f64,
    },
    #[error("condition II fails: weighted sum of y - y' is {sum:?}")]
    ConditionIIFailed { sum: Vec<f64> },
    #[error("no (lambda, eps) grid point gives det(T_eta) < 0 with a positive weighted sum")]
    NoEtaMinusFound,
    #[error("no (lambda+, eps+) grid point gives det(T_eta) > 0")]
    NoEtaPlusFound,
    #[error("network is not fully open: species X{} lacks a flow", .0 + 1)]
    NotFullyOpen(usize),
    #[error("eta- and eta+ coincide")]
    IdenticalEndpoints,
    #[error(
        "endpoint determinants must be negative then positive, got {det_minus} and {det_plus}"
    )]
    SignPrecondition { det_minus: f64, det_plus: f64 },
    #[error("bisection ended at t in [{lo}, {hi}] with |det|/bound = {ratio:e}")]
    BisectionStalled { lo: f64, hi: f64, ratio: f64 },
    #[error("reaction {0} is an inflow and carries no weight")]
    FreeIndexIsInflow(usize),
    #[error("reaction {0} has a negative entry in y - y'")]
    FreeReactionNotNonNegative(usize),
    #[error("weighted sum without the free reaction is not positive: {sum:?}")]
    FreeConditionFailed { sum: Vec<f64> },
    #[error("det(T_eta) does not depend on the free weight")]
    ZeroCoefficient,
    #[error("free weight solves to {0}, which is not positive")]
    NonPositiveSolution(f64),
    #[error("expected a one-dimensional null space, found dimension {0}")]
    RankDeficiency(usize),
    #[error("delta is not a null vector: |T delta| / (|T| |delta|) = {0:e}")]
    NotNullVector(f64),
    #[error("delta is zero, so the two steady states coincide")]
    ZeroDelta,
    #[error("scaling must be finite and positive, got {0}")]
    InvalidScaling(f64),
    #[error("inflow rates still not positive after {0} halvings of delta")]
    InflowNotPositive(u32),
    #[error("certificate document: {0}")]
    Document(String),
}

/// Positive weights on the internal and outflow reactions of a network, in
/// network order (see [`Network::non_inflow_indices`]).
#[derive(Clone, Debug, PartialEq)]
pub struct EtaVector(Vec<f64>);

impl EtaVector {
    pub fn new(weights: Vec<f64>) -> Result<Self, EngineError> {
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(EngineError::NonPositiveWeight { index, value });
        }
        Ok(Self(weights))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Weight per reaction of `net`, zero on inflows.
    pub(crate) fn per_reaction(&self, net: &Network) -> Result<Vec<f64>, EngineError> {
        let idx = net.non_inflow_indices();
        if idx.len() != self.0.len() {
            return Err(EngineError::DimensionMismatch {
                what: "eta vector",
                expected: idx.len(),
                got: self.0.len(),
            });
        }
        let mut out = vec![0.0; net.reaction_count()];
        for (&k, &w) in idx.iter().zip(&self.0) {
            out[k] = w;
        }
        Ok(out)
    }
}

impl Deref for EtaVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl fmt::Display for EtaVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, w) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{w}")?;
        }
        write!(f, ")")
    }
}

/// The `n` reactions `y_i -> y_i'` and weights `eta~_i` that start the method.
///
/// Indices are reaction indices of the network (0-based) and must name
/// internal or outflow reactions.
#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisWitness {
    reactions: Vec<usize>,
    eta_tilde: Vec<f64>,
}

impl HypothesisWitness {
    pub fn new(
        net: &Network,
        reactions: Vec<usize>,
        eta_tilde: Vec<f64>,
    ) -> Result<Self, EngineError> {
        let n = net.species_count();
        if reactions.len() != n {
            return Err(EngineError::DimensionMismatch {
                what: "witness reactions",
                expected: n,
                got: reactions.len(),
            });
        }
        if eta_tilde.len() != n {
            return Err(EngineError::DimensionMismatch {
                what: "eta tilde",
                expected: n,
                got: eta_tilde.len(),
            });
        }
        for (i, &k) in reactions.iter().enumerate() {
            if k >= net.reaction_count() {
                return Err(EngineError::WitnessOutOfRange(k));
            }
            if net.reaction(k).kind() == ReactionKind::Inflow {
                return Err(EngineError::WitnessInflow(k));
            }
            if reactions[..i].contains(&k) {
                return Err(EngineError::WitnessDuplicate(k));
            }
        }
        EtaVector::new(eta_tilde.clone())?;
        Ok(Self {
            reactions,
            eta_tilde,
        })
    }

    /// The internal reactions of `net` with all weights 1.
    pub fn internal(net: &Network, eta_tilde: Vec<f64>) -> Result<Self, EngineError> {
        let internal = net
            .reactions()
            .iter()
            .enumerate()
            .filter(|(_, r)| r.kind() == ReactionKind::Internal)
            .map(|(k, _)| k)
            .collect();
        Self::new(net, internal, eta_tilde)
    }

    /// Internal reactions of a sequestration network with
    /// `eta~ = (1, .., 1, m + 1, 1)`.
    pub fn sequestration(net: &Network, m: u32) -> Result<Self, EngineError> {
        let n = net.species_count();
        let mut eta = vec![1.0; n];
        if n >= 2 {
            eta[n - 2] = f64::from(m) + 1.0;
        }
        Self::internal(net, eta)
    }

    pub fn reactions(&self) -> &[usize] {
        &self.reactions
    }

    pub fn eta_tilde(&self) -> &[f64] {
        &self.eta_tilde
    }
}

/// `sum_k eta_k (y_k - y_k')` over all weighted reactions.
pub(crate) fn weighted_loss(net: &Network, per_reaction: &[f64]) -> Vec<f64> {
    let n = net.species_count();
    let mut sum = vec![0.0; n];
    for (r, &w) in net.reactions().iter().zip(per_reaction) {
        if w == 0.0 {
            continue;
        }
        for (s, v) in sum.iter_mut().zip(r.loss_vector(n)) {
            *s += w * v as f64;
        }
    }
    sum
}
