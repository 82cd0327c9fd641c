use std::fmt;

use thiserror::Error;

use super::certificate::{
    build_certificate, nullspace_delta, verify_certificate, Certificate, VerificationReport,
    DEFAULT_TOL_DET, DEFAULT_TOL_RANK, DEFAULT_TOL_RESIDUAL,
};
use super::conditions::{check_condition_i, check_condition_ii};
use super::teta::{
    build_t_eta, construct_eta_minus, construct_eta_plus, default_eps_grid, default_lambda_grid,
    interpolate_eta_zero, solve_eta_zero_free_variable, EtaMinus, EtaPlus, DEFAULT_BISECTION_CAP,
    DEFAULT_TOL_BISECTION,
};
use super::{EngineError, HypothesisWitness};
use crate::model::Network;

/// How `eta0` is found from `eta-`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Strategy {
    /// Bisect between `eta-` and `eta+`.
    #[default]
    Bisect,
    /// Solve for one weight of `eta-`, by default the last outflow.
    FreeVariable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodConfig {
    pub strategy: Strategy,
    pub lambda_grid: Vec<f64>,
    pub eps_grid: Vec<f64>,
    pub tol_bisection: f64,
    pub bisection_cap: usize,
    /// Reaction index solved for by [`Strategy::FreeVariable`].
    pub free_index: Option<usize>,
    pub tol_rank: f64,
    pub scaling: f64,
    pub tol_residual: f64,
    pub tol_det: f64,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Bisect,
            lambda_grid: default_lambda_grid(),
            eps_grid: default_eps_grid(),
            tol_bisection: DEFAULT_TOL_BISECTION,
            bisection_cap: DEFAULT_BISECTION_CAP,
            free_index: None,
            tol_rank: DEFAULT_TOL_RANK,
            scaling: 1.0,
            tol_residual: DEFAULT_TOL_RESIDUAL,
            tol_det: DEFAULT_TOL_DET,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Input,
    ConditionI,
    ConditionII,
    EtaMinus,
    EtaPlus,
    EtaZero,
    Nullspace,
    Certificate,
    Verify,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Input => "input",
            Stage::ConditionI => "condition I",
            Stage::ConditionII => "condition II",
            Stage::EtaMinus => "eta-",
            Stage::EtaPlus => "eta+",
            Stage::EtaZero => "eta0",
            Stage::Nullspace => "null space",
            Stage::Certificate => "certificate",
            Stage::Verify => "verify",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum MethodError {
    #[error("{stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: EngineError,
    },
    #[error("verify: certificate does not pass its checks")]
    Verification {
        certificate: Box<Certificate>,
        report: Box<VerificationReport>,
    },
}

impl MethodError {
    pub fn stage(&self) -> Stage {
        match self {
            MethodError::Stage { stage, .. } => *stage,
            MethodError::Verification { .. } => Stage::Verify,
        }
    }
}

/// A verified certificate and the intermediate weights that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodOutcome {
    pub certificate: Certificate,
    pub report: VerificationReport,
    pub eta_minus: EtaMinus,
    pub eta_plus: Option<EtaPlus>,
}

/// Runs every step of the method and returns a verified certificate.
pub fn run_method(
    net: &Network,
    witness: &HypothesisWitness,
    config: &MethodConfig,
) -> Result<MethodOutcome, MethodError> {
    let at = |stage: Stage| move |source: EngineError| MethodError::Stage { stage, source };

    if let Some(i) = net.first_missing_flow() {
        return Err(at(Stage::Input)(EngineError::NotFullyOpen(i)));
    }
    let c1 = check_condition_i(net, witness);
    if !c1.holds {
        return Err(at(Stage::ConditionI)(EngineError::ConditionIFailed {
            det_reactants: c1.det_reactants,
            det_vectors: c1.det_vectors,
        }));
    }
    let (ok, sum) = check_condition_ii(net, witness);
    if !ok {
        return Err(at(Stage::ConditionII)(EngineError::ConditionIIFailed {
            sum,
        }));
    }

    let eta_minus = construct_eta_minus(net, witness, &config.lambda_grid, &config.eps_grid)
        .map_err(at(Stage::EtaMinus))?;
    let (eta_zero, eta_plus) = match config.strategy {
        Strategy::Bisect => {
            let eta_plus = construct_eta_plus(net).map_err(at(Stage::EtaPlus))?;
            let eta_zero = interpolate_eta_zero(
                net,
                &eta_minus.eta,
                &eta_plus.eta,
                config.tol_bisection,
                config.bisection_cap,
            )
            .map_err(at(Stage::EtaZero))?;
            (eta_zero, Some(eta_plus))
        }
        Strategy::FreeVariable => {
            let free = config
                .free_index
                .or_else(|| net.outflow_index(net.species_count() - 1))
                .expect("fully open network has outflows");
            let eta_zero = solve_eta_zero_free_variable(net, &eta_minus.eta, free)
                .map_err(at(Stage::EtaZero))?;
            (eta_zero, None)
        }
    };

    let t = build_t_eta(net, &eta_zero).map_err(at(Stage::Nullspace))?;
    let delta = nullspace_delta(&t, config.tol_rank).map_err(at(Stage::Nullspace))?;
    let mut certificate = build_certificate(net, &eta_zero, &delta, config.scaling)
        .map_err(at(Stage::Certificate))?;
    let report = verify_certificate(&certificate, config.tol_residual, config.tol_det);
    certificate.diagnostics = report.diagnostics();
    if !report.passed() {
        return Err(MethodError::Verification {
            certificate: Box::new(certificate),
            report: Box::new(report),
        });
    }
    Ok(MethodOutcome {
        certificate,
        report,
        eta_minus,
        eta_plus,
    })
}
