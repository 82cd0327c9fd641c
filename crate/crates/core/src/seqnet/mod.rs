//! Closed forms for the fully open sequestration networks `K~(m, n)`.
//!
//! With `eta0` and `delta` known explicitly, rates and both steady states
//! are written down directly rather than found numerically. Production values
//! use the recurrences; the closed forms are there as cross-checks.

mod n3;
mod studies;

use thiserror::Error;

use crate::engine::{self, phi, Certificate, Diagnostics, EngineError, EtaVector};
use crate::model::{ConcentrationVector, ModelError, Network, RateAssignment};

pub use n3::{
    jac_dets_n3_formula, rates_n3, reproduce_table1, validate_bounds, x_sharp_n3, BoundCheck,
    BoundsReport, Table1Entry, Table1Row, TABLE1_D1, TABLE1_D2,
};
pub use studies::{
    epsilon_sweep, find_params, locate_root, match_degeneracy_intervals, recognize_sequestration,
    scan_csv, small_mn_scan, sweep_csv, Bracket, ScanRow, SweepResult, SweepSample, Which,
    DEGENERACY_INTERVALS,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeqError {
    #[error("m must be at least 2, got {0}")]
    InvalidM(u32),
    #[error("n must be odd and at least 3, got {0}")]
    InvalidN(usize),
    #[error("lambda must be finite and positive, got {0}")]
    InvalidLambda(f64),
    #[error("eps must be finite and positive, got {0}")]
    InvalidEps(f64),
    #[error("delta1 must be finite and nonzero, got {0}")]
    InvalidDelta1(f64),
    #[error("closed form needs eps > 0, got {0}")]
    ClosedFormNeedsPositiveEps(f64),
    #[error("index {k} outside 1..={max}")]
    IndexOutOfRange { k: usize, max: usize },
    #[error("no sign change between eps = {lo} and eps = {hi}")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("invalid eps range [{lo}, {hi}] or empty grid")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("last entry of eta0 is {0}, not positive")]
    NonPositiveEtaLast(f64),
    #[error("rate r{} is {value}, not positive", .index + 1)]
    NonPositiveRate { index: usize, value: f64 },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Parameters `(m, n, lambda, eps, delta1)` of the closed-form construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeqParams {
    m: u32,
    n: usize,
    lambda: f64,
    eps: f64,
    delta1: f64,
}

impl SeqParams {
    pub fn new(m: u32, n: usize, lambda: f64, eps: f64, delta1: f64) -> Result<Self, SeqError> {
        if m < 2 {
            return Err(SeqError::InvalidM(m));
        }
        if n < 3 || n.is_multiple_of(2) {
            return Err(SeqError::InvalidN(n));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(SeqError::InvalidLambda(lambda));
        }
        if !(eps.is_finite() && eps > 0.0) {
            return Err(SeqError::InvalidEps(eps));
        }
        if !(delta1.is_finite() && delta1 != 0.0) {
            return Err(SeqError::InvalidDelta1(delta1));
        }
        Ok(Self {
            m,
            n,
            lambda,
            eps,
            delta1,
        })
    }

    /// `(lambda, eps) = (1, 0.1)` for `n = 3` and `(1, 0.001)` otherwise,
    /// with `delta1 = 1`.
    pub fn defaults(m: u32, n: usize) -> Result<Self, SeqError> {
        let eps = if n == 3 { 0.1 } else { 0.001 };
        Self::new(m, n, 1.0, eps, 1.0)
    }

    pub fn with_eps(self, eps: f64) -> Result<Self, SeqError> {
        Self::new(self.m, self.n, self.lambda, eps, self.delta1)
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn delta1(&self) -> f64 {
        self.delta1
    }

    fn mf(&self) -> f64 {
        f64::from(self.m)
    }

    pub fn network(&self) -> Network {
        Network::sequestration(self.m, self.n).expect("parameters were validated")
    }
}

/// `daleth_0 ..= daleth_up_to` from `daleth_{i+2} = (2 lambda + eps) daleth_{i+1}
/// - lambda^2 daleth_i`, `daleth_0 = 1`, `daleth_1 = 2 lambda + eps`.
pub fn daleth_recurrence(lambda: f64, eps: f64, up_to: usize) -> Vec<f64> {
    let a = 2.0 * lambda + eps;
    let mut d = Vec::with_capacity(up_to + 1);
    d.push(1.0);
    if up_to >= 1 {
        d.push(a);
    }
    for i in 2..=up_to {
        d.push(a * d[i - 1] - lambda * lambda * d[i - 2]);
    }
    d
}

/// Closed form of the recurrence with `c1 = sqrt(eps (eps + 4 lambda))` and
/// `c2 = eps + 2 lambda`.
pub fn daleth_closed_form(lambda: f64, eps: f64, i: usize) -> Result<f64, SeqError> {
    if !(eps > 0.0) {
        return Err(SeqError::ClosedFormNeedsPositiveEps(eps));
    }
    let c1 = eps.sqrt() * (eps + 4.0 * lambda).sqrt();
    let c2 = eps + 2.0 * lambda;
    let i32_ = i as i32;
    let lo = (c2 - c1).powi(i32_);
    let hi = (c1 + c2).powi(i32_);
    Ok((-c2 * lo + c1 * lo + c2 * hi + c1 * hi) / (2f64.powi(i32_ + 1) * c1))
}

/// Leading principal minors `daleth_0 ..= daleth_{n-1}` of `T_eta0`.
#[derive(Clone, Debug, PartialEq)]
pub struct DalethSequence {
    pub values: Vec<f64>,
    pub lambda: f64,
    pub eps: f64,
    pub m: u32,
}

/// The recurrence up to `n - 2`, then `daleth_{n-1} = (lambda (m + 2) + eps)
/// daleth_{n-2} - lambda^2 daleth_{n-3}`.
pub fn daleth_full(p: &SeqParams) -> DalethSequence {
    let (l, e, n) = (p.lambda, p.eps, p.n);
    let mut values = daleth_recurrence(l, e, n - 2);
    values.push((l * (p.mf() + 2.0) + e) * values[n - 2] - l * l * values[n - 3]);
    DalethSequence {
        values,
        lambda: l,
        eps: e,
        m: p.m,
    }
}

/// `eta0`: `lambda` on internal reactions except `(m + 1) lambda` on
/// `X_{n-1} + X_n -> 0`, `eps` on the first `n - 1` outflows, and the value
/// that makes `det(T_eta0)` vanish on the last outflow.
pub fn eta_zero_closed_form(p: &SeqParams) -> Result<EtaVector, SeqError> {
    let last = eta_last(p);
    if !(last > 0.0) {
        return Err(SeqError::NonPositiveEtaLast(last));
    }
    let (l, n) = (p.lambda, p.n);
    let mut eta = vec![l; n];
    eta[n - 2] = (p.mf() + 1.0) * l;
    eta.extend(std::iter::repeat_n(p.eps, n - 1));
    eta.push(last);
    Ok(EtaVector::new(eta)?)
}

fn eta_last(p: &SeqParams) -> f64 {
    let d = daleth_full(p).values;
    let (l, m, n) = (p.lambda, p.mf(), p.n);
    (m + 1.0) * (m * l.powi(n as i32) + l * l * (m + 1.0) * d[n - 2]) / d[n - 1] - l * (m + 1.0)
}

/// `det(T_eta0)` expanded along the bottom row, as a function of the last
/// outflow weight.
pub fn det_t_eta_zero_expansion(p: &SeqParams, eta_last: f64) -> f64 {
    let d = daleth_full(p).values;
    let (l, m, n) = (p.lambda, p.mf(), p.n);
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * m * (m + 1.0) * l.powi(n as i32) - l * l * (m + 1.0).powi(2) * d[n - 2]
        + (l * (m + 1.0) + eta_last) * d[n - 1]
}

/// Null vector of `T_eta0`: `delta_1` given, `delta_0 = 0`,
/// `delta_k = -(2 lambda + eps)/lambda delta_{k-1} - delta_{k-2}` up to
/// `n - 1`, and a separate last entry.
pub fn delta_recurrence(p: &SeqParams) -> Vec<f64> {
    let (l, e, m, n) = (p.lambda, p.eps, p.mf(), p.n);
    let mut d = vec![0.0, p.delta1];
    for k in 2..n {
        d.push(-(2.0 * l + e) / l * d[k - 1] - d[k - 2]);
    }
    d.push(-(l * (m + 2.0) + e) / (l * (m + 1.0)) * d[n - 1] - d[n - 2] / (m + 1.0));
    d.remove(0);
    d
}

/// Closed form of `delta_k` for `1 <= k <= n - 1`.
pub fn delta_closed_form(p: &SeqParams, k: usize) -> Result<f64, SeqError> {
    if k == 0 || k >= p.n {
        return Err(SeqError::IndexOutOfRange { k, max: p.n - 1 });
    }
    let (l, e) = (p.lambda, p.eps);
    let s = (4.0 * l * e + e * e).sqrt();
    let c = 2.0 * l + e;
    let k32 = k as i32;
    Ok(
        p.delta1 * l * ((s - c).powi(k32) - (-s - c).powi(k32))
            / (2f64.powi(k32) * l.powi(k32) * s),
    )
}

/// Rates from the explicit per-reaction formulas: `phi(<y_i, delta>) eta0_i`
/// for internal reactions and outflows, and the inflow sums
/// `r_{2n+1} = r_1 + r_n + r_{n+1}`, `r_{2n+i} = r_{i-1} + r_i + r_{n+i}`,
/// `r_{3n} = r_{n-1} + r_{2n} - m r_n`.
pub fn closed_form_rates(p: &SeqParams) -> Result<RateAssignment, SeqError> {
    let n = p.n;
    let eta = eta_zero_closed_form(p)?;
    let d = delta_recurrence(p);
    // 1-based to match the reaction numbering
    let mut r = vec![0.0; 3 * n + 1];
    for i in 1..n {
        r[i] = phi(d[i - 1] + d[i]) * eta[i - 1];
    }
    r[n] = phi(d[0]) * eta[n - 1];
    for i in 1..=n {
        r[n + i] = phi(d[i - 1]) * eta[n + i - 1];
    }
    r[2 * n + 1] = r[1] + r[n] + r[n + 1];
    for i in 2..n {
        r[2 * n + i] = r[i - 1] + r[i] + r[n + i];
    }
    r[3 * n] = r[n - 1] + r[2 * n] - p.mf() * r[n];
    r.remove(0);
    if let Some((index, &value)) = r.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(SeqError::NonPositiveRate { index, value });
    }
    Ok(RateAssignment::new(r)?)
}

/// Certificate built entirely from closed forms, with diagnostics from
/// [`engine::verify_certificate`] at the default tolerances.
pub fn closed_form_certificate(p: &SeqParams) -> Result<Certificate, SeqError> {
    let rates = closed_form_rates(p)?;
    let delta = delta_recurrence(p);
    let mut cert = Certificate {
        network: p.network(),
        rates,
        x_star: ConcentrationVector::ones(p.n),
        x_sharp: ConcentrationVector::new(delta.iter().map(|d| d.exp()).collect())?,
        delta,
        eta_zero: eta_zero_closed_form(p)?,
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
        engine::verify_certificate(&cert, engine::DEFAULT_TOL_RESIDUAL, engine::DEFAULT_TOL_DET)
            .diagnostics();
    Ok(cert)
}
