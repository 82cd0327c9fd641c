use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::teta::build_t_eta;
use super::{EngineError, EtaVector};
use crate::linalg;
use crate::model::{ConcentrationVector, ModelError, Network, RateAssignment, ReactionKind};
use crate::numfmt::sig17;
use crate::parser::{parse_network, serialize_network};

pub const DEFAULT_TOL_RESIDUAL: f64 = 1e-10;
pub const DEFAULT_TOL_DET: f64 = 1e-8;
pub const DEFAULT_TOL_RANK: f64 = 1e-8;
/// How many times `delta` may be halved while looking for positive inflows.
pub const MAX_HALVINGS: u32 = 60;

const PHI_SERIES_CUTOFF: f64 = 1e-4;

/// `u / (e^u - 1)`, with `phi(0) = 1`.
pub fn phi(u: f64) -> f64 {
    if u.abs() < PHI_SERIES_CUTOFF {
        1.0 / (1.0 + u / 2.0 + u * u / 6.0 + u * u * u / 24.0)
    } else {
        u / u.exp_m1()
    }
}

/// Unit null vector of a matrix with a one-dimensional numerical null space,
/// oriented so that its first nonzero coordinate is positive.
///
/// A singular value counts as zero when it is at most `tol` times the largest.
pub fn nullspace_delta(t: &DMatrix<f64>, tol: f64) -> Result<Vec<f64>, EngineError> {
    let n = t.nrows();
    assert!(t.is_square(), "null space of a non-square matrix");
    let svd = t.clone().svd(false, true);
    let sigma = &svd.singular_values;
    let smax = sigma.max();
    let zero: Vec<usize> = (0..n).filter(|&i| sigma[i] <= tol * smax).collect();
    if zero.len() != 1 {
        return Err(EngineError::RankDeficiency(zero.len()));
    }
    let v_t = svd.v_t.as_ref().expect("v_t was requested");
    let mut delta: Vec<f64> = v_t.row(zero[0]).iter().copied().collect();
    let norm = delta.iter().map(|x| x * x).sum::<f64>().sqrt();
    delta.iter_mut().for_each(|x| *x /= norm);
    if let Some(first) = delta.iter().find(|x| x.abs() > f64::EPSILON) {
        if *first < 0.0 {
            delta.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok(delta)
}

/// Residuals and determinants stored with a certificate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics {
    pub residual_star: f64,
    pub residual_sharp: f64,
    pub det_star: f64,
    pub det_sharp: f64,
    pub nondegenerate_star: bool,
    pub nondegenerate_sharp: bool,
}

/// Rates and two steady states of a fully open network.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub network: Network,
    pub rates: RateAssignment,
    pub x_star: ConcentrationVector,
    pub x_sharp: ConcentrationVector,
    /// The scaled null vector; `x_sharp = exp(delta)`.
    pub delta: Vec<f64>,
    pub eta_zero: EtaVector,
    pub diagnostics: Diagnostics,
}

fn rates_for(net: &Network, weights: &[f64], delta: &[f64]) -> Option<Vec<f64>> {
    let n = net.species_count();
    let mut rates = vec![0.0; net.reaction_count()];
    let mut inflow = vec![0.0; n];
    for (k, r) in net.reactions().iter().enumerate() {
        if r.kind() == ReactionKind::Inflow {
            continue;
        }
        rates[k] = phi(r.reactant().dot(delta)) * weights[k];
        for (s, v) in inflow.iter_mut().zip(r.loss_vector(n)) {
            *s += rates[k] * v as f64;
        }
    }
    for (i, &v) in inflow.iter().enumerate() {
        let k = net.inflow_index(i)?;
        rates[k] = v;
    }
    rates
        .iter()
        .all(|&r| r > 0.0 && r.is_finite())
        .then_some(rates)
}

/// Turns `eta0` and a null vector `delta` of `T_eta0` into a certificate.
///
/// Internal and outflow rates are `phi(<y, d>) eta0` with `d = scaling *
/// delta`; inflow rates are `sum r (y - y')` over those rates, so that the
/// all-ones vector is a steady state. While some rate is not positive, `d` is
/// halved, at most [`MAX_HALVINGS`] times.
pub fn build_certificate(
    net: &Network,
    eta_zero: &EtaVector,
    delta: &[f64],
    scaling: f64,
) -> Result<Certificate, EngineError> {
    let n = net.species_count();
    if let Some(i) = net.first_missing_flow() {
        return Err(EngineError::NotFullyOpen(i));
    }
    if !(scaling.is_finite() && scaling > 0.0) {
        return Err(EngineError::InvalidScaling(scaling));
    }
    if delta.len() != n {
        return Err(EngineError::DimensionMismatch {
            what: "delta",
            expected: n,
            got: delta.len(),
        });
    }
    let dmax = linalg::max_abs(delta);
    if dmax == 0.0 || !dmax.is_finite() {
        return Err(EngineError::ZeroDelta);
    }
    let t = build_t_eta(net, eta_zero)?;
    let td = &t * nalgebra::DVector::from_column_slice(delta);
    let ratio = td.amax() / (linalg::matrix_inf_norm(&t) * dmax);
    if !(ratio <= DEFAULT_TOL_RANK) {
        return Err(EngineError::NotNullVector(ratio));
    }

    let weights = eta_zero.per_reaction(net)?;
    let mut s = scaling;
    for _ in 0..=MAX_HALVINGS {
        let scaled: Vec<f64> = delta.iter().map(|d| s * d).collect();
        if let Some(rates) = rates_for(net, &weights, &scaled) {
            let x_sharp: Vec<f64> = scaled.iter().map(|d| d.exp()).collect();
            if x_sharp.iter().all(|&x| x == 1.0) {
                return Err(EngineError::ZeroDelta);
            }
            let mut cert = Certificate {
                network: net.clone(),
                rates: RateAssignment::new(rates)?,
                x_star: ConcentrationVector::ones(n),
                x_sharp: ConcentrationVector::new(x_sharp)?,
                delta: scaled,
                eta_zero: eta_zero.clone(),
                diagnostics: Diagnostics {
                    residual_star: 0.0,
                    residual_sharp: 0.0,
                    det_star: 0.0,
                    det_sharp: 0.0,
                    nondegenerate_star: false,
                    nondegenerate_sharp: false,
                },
            };
            cert.diagnostics =
                verify_certificate(&cert, DEFAULT_TOL_RESIDUAL, DEFAULT_TOL_DET).diagnostics();
            return Ok(cert);
        }
        s /= 2.0;
    }
    Err(EngineError::InflowNotPositive(MAX_HALVINGS))
}

/// Everything recomputed when a certificate is checked.
#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub tol_residual: f64,
    pub tol_det: f64,
    /// `|f(x*)|_inf` divided by the largest single term `|gamma_ik R_k(x*)|`.
    pub residual_star: f64,
    pub residual_sharp: f64,
    pub det_star: f64,
    pub det_sharp: f64,
    /// `|det| / H` of the equilibrated Jacobian; nondegenerate when above
    /// `tol_det`.
    pub ratio_star: f64,
    pub ratio_sharp: f64,
    pub nondegenerate_star: bool,
    pub nondegenerate_sharp: bool,
    /// `|x* - x#|_inf`.
    pub distance: f64,
    pub rates_positive: bool,
    pub fully_open: bool,
}

impl VerificationReport {
    pub fn steady_star(&self) -> bool {
        self.residual_star <= self.tol_residual
    }

    pub fn steady_sharp(&self) -> bool {
        self.residual_sharp <= self.tol_residual
    }

    pub fn distinct(&self) -> bool {
        self.distance > 0.0
    }

    pub fn passed(&self) -> bool {
        self.steady_star()
            && self.steady_sharp()
            && self.nondegenerate_star
            && self.nondegenerate_sharp
            && self.distinct()
            && self.rates_positive
            && self.fully_open
    }

    pub fn diagnostics(&self) -> Diagnostics {
        Diagnostics {
            residual_star: self.residual_star,
            residual_sharp: self.residual_sharp,
            det_star: self.det_star,
            det_sharp: self.det_sharp,
            nondegenerate_star: self.nondegenerate_star,
            nondegenerate_sharp: self.nondegenerate_sharp,
        }
    }
}

fn relative_residual(net: &Network, rates: &RateAssignment, x: &[f64]) -> Result<f64, ModelError> {
    let flux = net.reactant_vector(rates, x)?;
    let f = net.ode_rhs(rates, x)?;
    let n = net.species_count();
    let largest = net
        .reactions()
        .iter()
        .zip(&flux)
        .map(|(r, v)| {
            linalg::max_abs(
                &r.reaction_vector(n)
                    .iter()
                    .map(|&g| g as f64 * v)
                    .collect::<Vec<_>>(),
            )
        })
        .fold(0.0, f64::max);
    let res = linalg::max_abs(&f);
    Ok(if largest > 0.0 { res / largest } else { res })
}

/// Determinant and its equilibrated singularity ratio.
fn det_and_ratio(
    net: &Network,
    rates: &RateAssignment,
    x: &[f64],
) -> Result<(f64, f64), ModelError> {
    let jac = net.jacobian(rates, x)?;
    Ok((
        linalg::determinant(&jac),
        linalg::scaled_singularity_ratio(&jac),
    ))
}

/// Recomputes residuals, Jacobian determinants and nondegeneracy at both
/// concentration vectors. Failures show up in the report, never as errors.
pub fn verify_certificate(
    cert: &Certificate,
    tol_residual: f64,
    tol_det: f64,
) -> VerificationReport {
    let net = &cert.network;
    let rates = &cert.rates;
    let fully_open = net.is_fully_open();
    let eval = |x: &[f64]| {
        let res = relative_residual(net, rates, x).unwrap_or(f64::INFINITY);
        let (det, ratio) = det_and_ratio(net, rates, x).unwrap_or((f64::NAN, f64::NAN));
        let nondeg = fully_open && ratio > tol_det;
        (res, det, ratio, nondeg)
    };
    let (residual_star, det_star, ratio_star, nondegenerate_star) = eval(&cert.x_star);
    let (residual_sharp, det_sharp, ratio_sharp, nondegenerate_sharp) = eval(&cert.x_sharp);
    let distance = if cert.x_star.len() == cert.x_sharp.len() {
        cert.x_star
            .iter()
            .zip(cert.x_sharp.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    } else {
        f64::NAN
    };
    VerificationReport {
        tol_residual,
        tol_det,
        residual_star,
        residual_sharp,
        det_star,
        det_sharp,
        ratio_star,
        ratio_sharp,
        nondegenerate_star,
        nondegenerate_sharp,
        distance,
        rates_positive: rates.iter().all(|&r| r > 0.0),
        fully_open,
    }
}

/// A float written with 17 significant digits.
#[derive(Clone, Copy, Debug)]
struct Num(f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match serde_json::Number::from_str(&sig17(self.0)) {
            Ok(num) if self.0.is_finite() => num.serialize(s),
            _ => s.serialize_none(),
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Num(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN)))
    }
}

fn nums(v: &[f64]) -> Vec<Num> {
    v.iter().copied().map(Num).collect()
}

fn floats(v: Vec<Num>) -> Vec<f64> {
    v.into_iter().map(|n| n.0).collect()
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct DiagnosticsDoc {
    residual_star: Num,
    residual_sharp: Num,
    det_star: Num,
    det_sharp: Num,
    nondegenerate_star: bool,
    nondegenerate_sharp: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct CertificateDoc {
    network: String,
    rates: Vec<Num>,
    x_star: Vec<Num>,
    x_sharp: Vec<Num>,
    delta: Vec<Num>,
    eta_zero: Vec<Num>,
    diagnostics: DiagnosticsDoc,
}

impl Certificate {
    /// JSON document with every number at 17 significant digits.
    pub fn to_json(&self) -> String {
        let d = &self.diagnostics;
        let doc = CertificateDoc {
            network: serialize_network(&self.network, None),
            rates: nums(&self.rates),
            x_star: nums(&self.x_star),
            x_sharp: nums(&self.x_sharp),
            delta: nums(&self.delta),
            eta_zero: nums(&self.eta_zero),
            diagnostics: DiagnosticsDoc {
                residual_star: Num(d.residual_star),
                residual_sharp: Num(d.residual_sharp),
                det_star: Num(d.det_star),
                det_sharp: Num(d.det_sharp),
                nondegenerate_star: d.nondegenerate_star,
                nondegenerate_sharp: d.nondegenerate_sharp,
            },
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("certificate serializes");
        s.push('\n');
        s
    }

    /// Reads a document written by [`Certificate::to_json`]. Values are
    /// checked for shape and positivity only; use [`verify_certificate`] for
    /// the steady-state checks.
    pub fn from_json(text: &str) -> Result<Self, EngineError> {
        let doc: CertificateDoc =
            serde_json::from_str(text).map_err(|e| EngineError::Document(e.to_string()))?;
        let (network, _) =
            parse_network(&doc.network).map_err(|e| EngineError::Document(e.to_string()))?;
        let n = network.species_count();
        let check = |what: &'static str, expected: usize, got: usize| {
            if expected == got {
                Ok(())
            } else {
                Err(EngineError::DimensionMismatch {
                    what,
                    expected,
                    got,
                })
            }
        };
        check("rates", network.reaction_count(), doc.rates.len())?;
        check("xStar", n, doc.x_star.len())?;
        check("xSharp", n, doc.x_sharp.len())?;
        check("delta", n, doc.delta.len())?;
        check(
            "etaZero",
            network.non_inflow_indices().len(),
            doc.eta_zero.len(),
        )?;
        let d = doc.diagnostics;
        Ok(Certificate {
            rates: RateAssignment::new(floats(doc.rates))?,
            x_star: ConcentrationVector::new(floats(doc.x_star))?,
            x_sharp: ConcentrationVector::new(floats(doc.x_sharp))?,
            delta: floats(doc.delta),
            eta_zero: EtaVector::new(floats(doc.eta_zero))?,
            diagnostics: Diagnostics {
                residual_star: d.residual_star.0,
                residual_sharp: d.residual_sharp.0,
                det_star: d.det_star.0,
                det_sharp: d.det_sharp.0,
                nondegenerate_star: d.nondegenerate_star,
                nondegenerate_sharp: d.nondegenerate_sharp,
            },
            network,
        })
    }
}
