use crate::engine::{self, default_eps_grid, default_lambda_grid};
use crate::model::Network;
use crate::numfmt::sig17;

use super::{closed_form_certificate, closed_form_rates, delta_recurrence, SeqError, SeqParams};

/// Which steady state a determinant belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    /// `x* = (1, .., 1)`.
    Star,
    /// `x# = exp(delta)`.
    Sharp,
}

impl std::fmt::Display for Which {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Which::Star => "x*",
            Which::Sharp => "x#",
        })
    }
}

fn jacobian_dets(p: &SeqParams) -> Result<(f64, f64), SeqError> {
    let net = p.network();
    let rates = closed_form_rates(p)?;
    let x_sharp: Vec<f64> = delta_recurrence(p).iter().map(|d| d.exp()).collect();
    let star = net.jacobian_determinant(&rates, &vec![1.0; p.n()])?;
    let sharp = net.jacobian_determinant(&rates, &x_sharp)?;
    Ok((star, sharp))
}

fn det_at(m: u32, n: usize, lambda: f64, eps: f64, which: Which) -> Result<f64, SeqError> {
    let (star, sharp) = jacobian_dets(&SeqParams::new(m, n, lambda, eps, 1.0)?)?;
    Ok(match which {
        Which::Star => star,
        Which::Sharp => sharp,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepSample {
    pub eps: f64,
    pub det_star: f64,
    pub det_sharp: f64,
}

/// An interval in `eps` whose endpoints give determinants of opposite sign.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bracket {
    pub which: Which,
    pub lo: f64,
    pub hi: f64,
    pub det_lo: f64,
    pub det_hi: f64,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn signs_differ(&self) -> bool {
        (self.det_lo < 0.0) != (self.det_hi < 0.0)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepResult {
    /// Grid points where a certificate exists.
    pub samples: Vec<SweepSample>,
    /// Grid points where it does not, with the reason.
    pub failures: Vec<(f64, SeqError)>,
    pub star: Vec<Bracket>,
    pub sharp: Vec<Bracket>,
}

/// Bisects a sign change of the chosen determinant in `eps` until the
/// bracket is at most `width` wide; `width = 0` bisects until the bracket
/// cannot shrink in floating point.
pub fn locate_root(
    m: u32,
    n: usize,
    lambda: f64,
    which: Which,
    lo: f64,
    hi: f64,
    width: f64,
) -> Result<Bracket, SeqError> {
    let (mut lo, mut hi) = (lo, hi);
    let mut det_lo = det_at(m, n, lambda, lo, which)?;
    let mut det_hi = det_at(m, n, lambda, hi, which)?;
    if !(lo < hi) || (det_lo < 0.0) == (det_hi < 0.0) {
        return Err(SeqError::NoSignChange { lo, hi });
    }
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let d = det_at(m, n, lambda, mid, which)?;
        if (d < 0.0) == (det_lo < 0.0) {
            lo = mid;
            det_lo = d;
        } else {
            hi = mid;
            det_hi = d;
        }
    }
    Ok(Bracket {
        which,
        lo,
        hi,
        det_lo,
        det_hi,
    })
}

pub const SWEEP_BRACKET_WIDTH: f64 = 1e-6;

/// Evaluates both Jacobian determinants of the closed-form certificate on
/// `grid_steps + 1` evenly spaced values of `eps` in `[eps_lo, eps_hi]`,
/// then narrows every sign change between neighbouring grid points to
/// width `1e-6`. Grid points without a valid certificate are recorded and
/// break the chain of neighbours.
pub fn epsilon_sweep(
    m: u32,
    n: usize,
    lambda: f64,
    eps_lo: f64,
    eps_hi: f64,
    grid_steps: usize,
) -> Result<SweepResult, SeqError> {
    if !(eps_lo > 0.0 && eps_lo < eps_hi && eps_hi.is_finite()) || grid_steps == 0 {
        return Err(SeqError::InvalidRange {
            lo: eps_lo,
            hi: eps_hi,
        });
    }
    SeqParams::new(m, n, lambda, eps_lo, 1.0)?;

    let mut result = SweepResult::default();
    let mut prev: Option<SweepSample> = None;
    for i in 0..=grid_steps {
        let eps = eps_lo + (eps_hi - eps_lo) * i as f64 / grid_steps as f64;
        let sample = match jacobian_dets(&SeqParams::new(m, n, lambda, eps, 1.0)?) {
            Ok((det_star, det_sharp)) => SweepSample {
                eps,
                det_star,
                det_sharp,
            },
            Err(e) => {
                result.failures.push((eps, e));
                prev = None;
                continue;
            }
        };
        if let Some(p) = prev {
            for (which, a, b, out) in [
                (Which::Star, p.det_star, sample.det_star, &mut result.star),
                (
                    Which::Sharp,
                    p.det_sharp,
                    sample.det_sharp,
                    &mut result.sharp,
                ),
            ] {
                if (a < 0.0) != (b < 0.0) {
                    let bracket = locate_root(m, n, lambda, which, p.eps, eps, SWEEP_BRACKET_WIDTH)
                        .unwrap_or(Bracket {
                            which,
                            lo: p.eps,
                            hi: eps,
                            det_lo: a,
                            det_hi: b,
                        });
                    out.push(bracket);
                }
            }
        }
        result.samples.push(sample);
        prev = Some(sample);
    }
    Ok(result)
}

/// `eps,detStar,detSharp` lines for every successful grid point.
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut s = String::from("eps,detStar,detSharp\n");
    for p in &result.samples {
        s.push_str(&format!(
            "{},{},{}\n",
            sig17(p.eps),
            sig17(p.det_star),
            sig17(p.det_sharp)
        ));
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub m: u32,
    pub n: usize,
    pub lambda: f64,
    pub eps: f64,
    pub det_star: f64,
    pub det_sharp: f64,
    pub residual_star: f64,
    pub residual_sharp: f64,
    /// Both determinants exceed `1e-8` times their Hadamard bound.
    pub both_nonzero: bool,
    pub error: Option<SeqError>,
}

/// Builds the closed-form certificate for every `(m, n)` and records both
/// Jacobian determinants. `lambda` and `eps` override the per-`n` defaults.
pub fn small_mn_scan(
    ms: &[u32],
    ns: &[usize],
    lambda: Option<f64>,
    eps: Option<f64>,
    delta1: f64,
) -> Vec<ScanRow> {
    let mut rows = Vec::new();
    for &n in ns {
        for &m in ms {
            let defaults = SeqParams::defaults(m, n);
            let lam = lambda.unwrap_or_else(|| defaults.as_ref().map_or(1.0, |p| p.lambda()));
            let e = eps.unwrap_or_else(|| defaults.as_ref().map_or(f64::NAN, |p| p.eps()));
            let mut row = ScanRow {
                m,
                n,
                lambda: lam,
                eps: e,
                det_star: f64::NAN,
                det_sharp: f64::NAN,
                residual_star: f64::NAN,
                residual_sharp: f64::NAN,
                both_nonzero: false,
                error: None,
            };
            match SeqParams::new(m, n, lam, e, delta1).and_then(|p| closed_form_certificate(&p)) {
                Ok(cert) => {
                    let d = cert.diagnostics;
                    row.det_star = d.det_star;
                    row.det_sharp = d.det_sharp;
                    row.residual_star = d.residual_star;
                    row.residual_sharp = d.residual_sharp;
                    row.both_nonzero = d.nondegenerate_star && d.nondegenerate_sharp;
                }
                Err(err) => row.error = Some(err),
            }
            rows.push(row);
        }
    }
    rows
}

/// `m,detStar,detSharp` lines for the rows with the given `n`.
pub fn scan_csv(rows: &[ScanRow], n: usize) -> String {
    let mut s = String::from("m,detStar,detSharp\n");
    for r in rows.iter().filter(|r| r.n == n && r.error.is_none()) {
        s.push_str(&format!(
            "{},{},{}\n",
            r.m,
            sig17(r.det_star),
            sig17(r.det_sharp)
        ));
    }
    s
}

/// First `(lambda, eps)` on the default grids (lambda ascending, eps
/// descending) whose closed-form certificate verifies.
pub fn find_params(m: u32, n: usize, delta1: f64) -> Result<SeqParams, SeqError> {
    let mut last = None;
    for lambda in default_lambda_grid() {
        for eps in default_eps_grid() {
            let p = SeqParams::new(m, n, lambda, eps, delta1)?;
            match closed_form_certificate(&p) {
                Ok(cert) => {
                    let report = engine::verify_certificate(
                        &cert,
                        engine::DEFAULT_TOL_RESIDUAL,
                        engine::DEFAULT_TOL_DET,
                    );
                    if report.passed() {
                        return Ok(p);
                    }
                }
                Err(e) => last = Some(e),
            }
        }
    }
    Err(last.unwrap_or(SeqError::Engine(engine::EngineError::NoEtaMinusFound)))
}

/// `(m, n)` if the fully open extension of `net` is `K~(m, n)` with the
/// internal reactions in their usual order.
pub fn recognize_sequestration(net: &Network) -> Option<(u32, usize)> {
    let n = net.species_count();
    if n < 2 {
        return None;
    }
    let m = net.reactions().iter().find_map(|r| {
        (r.reactant().single_species() == Some(0) && r.product().terms().count() == 1)
            .then(|| r.product().coefficient(n - 1))
            .filter(|&c| c >= 1)
    })?;
    let k = Network::sequestration(m, n).ok()?;
    (net.fully_open_extension() == k).then_some((m, n))
}

/// Published sign-change intervals in `eps` for `m = 2, n = 3, lambda = 1`.
pub const DEGENERACY_INTERVALS: [(Which, f64, f64); 3] = [
    (Which::Star, 0.12, 0.125),
    (Which::Sharp, 0.240, 0.241),
    (Which::Sharp, 1.159, 1.160),
];

/// For each published interval, the first sweep bracket of the same kind
/// lying inside it with verified endpoint signs and width at most `1e-6`.
pub fn match_degeneracy_intervals(
    result: &SweepResult,
) -> Vec<((Which, f64, f64), Option<Bracket>)> {
    DEGENERACY_INTERVALS
        .iter()
        .map(|&(which, lo, hi)| {
            let pool = match which {
                Which::Star => &result.star,
                Which::Sharp => &result.sharp,
            };
            let hit = pool.iter().copied().find(|b| {
                b.lo > lo && b.hi < hi && b.width() <= SWEEP_BRACKET_WIDTH && b.signs_differ()
            });
            ((which, lo, hi), hit)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_finds_star_root_near_0_124() {
        let r = epsilon_sweep(2, 3, 1.0, 0.05, 1.3, 500).unwrap();
        assert_eq!(r.samples.len() + r.failures.len(), 501);
        assert!(r
            .star
            .iter()
            .any(|b| b.lo > 0.12 && b.hi < 0.125 && b.width() <= 1e-6));
        for b in r.star.iter().chain(&r.sharp) {
            assert!(b.signs_differ());
            assert_eq!(det_at(2, 3, 1.0, b.lo, b.which).unwrap(), b.det_lo);
        }
        // eta0 turns negative past eps = (sqrt(13) - 3) / 2 for m = 2
        let cutoff = (13f64.sqrt() - 3.0) / 2.0;
        assert!(r.failures.iter().all(|(e, _)| *e > cutoff - 1e-3));
        assert!(r.samples.iter().all(|s| s.eps < cutoff + 1e-3));
    }

    #[test]
    fn sweep_beyond_valid_eps_is_empty() {
        let r = epsilon_sweep(2, 3, 1.0, 2.0, 3.0, 50).unwrap();
        assert!(r.star.is_empty() && r.sharp.is_empty());
        assert_eq!(r.failures.len(), 51);
        assert_eq!(sweep_csv(&r), "eps,detStar,detSharp\n");
    }

    #[test]
    fn sweep_rejects_bad_ranges() {
        assert!(matches!(
            epsilon_sweep(2, 3, 1.0, 0.5, 0.1, 10),
            Err(SeqError::InvalidRange { .. })
        ));
        assert!(matches!(
            epsilon_sweep(2, 3, 1.0, 0.1, 0.5, 0),
            Err(SeqError::InvalidRange { .. })
        ));
        assert_eq!(
            epsilon_sweep(1, 3, 1.0, 0.1, 0.5, 10),
            Err(SeqError::InvalidM(1))
        );
    }

    #[test]
    fn locate_root_collapses() {
        let b = locate_root(2, 3, 1.0, Which::Star, 0.12, 0.125, 0.0).unwrap();
        assert!(b.signs_differ());
        assert!(b.width() <= 2.0 * f64::EPSILON * b.hi);
        assert!(matches!(
            locate_root(2, 3, 1.0, Which::Star, 0.05, 0.1, 1e-6),
            Err(SeqError::NoSignChange { .. })
        ));
    }

    #[test]
    fn scan_covers_small_m_and_n() {
        let rows = small_mn_scan(&[2, 3, 4, 5], &[5, 7, 9, 11], None, None, 1.0);
        assert_eq!(rows.len(), 16);
        for r in &rows {
            assert!(r.both_nonzero, "{r:?}");
            assert_eq!(r.eps, 0.001);
        }
        let csv = scan_csv(&rows, 7);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("m,detStar,detSharp\n2,"));
    }

    #[test]
    fn scan_with_n3_recovers_table1() {
        let rows = small_mn_scan(&[2, 4], &[3], None, None, 1.0);
        assert!((rows[0].det_star - 0.336).abs() < 5e-3);
        assert!((rows[1].det_sharp + 7.85).abs() < 0.04);
        let bad = small_mn_scan(&[1], &[3], None, None, 1.0);
        assert_eq!(bad[0].error, Some(SeqError::InvalidM(1)));
    }

    #[test]
    fn recognizes_sequestration() {
        let k = Network::sequestration(4, 5).unwrap();
        assert_eq!(recognize_sequestration(&k), Some((4, 5)));
        let bare = Network::new(3, k_internal(2, 3)).unwrap();
        assert_eq!(recognize_sequestration(&bare), Some((2, 3)));
        let other = Network::new(2, vec![crate::model::Reaction::outflow(0)]).unwrap();
        assert_eq!(recognize_sequestration(&other), None);
    }

    fn k_internal(m: u32, n: usize) -> Vec<crate::model::Reaction> {
        Network::sequestration(m, n).unwrap().reactions()[..n].to_vec()
    }

    #[test]
    fn find_params_for_default_cases() {
        let p = find_params(2, 3, 1.0).unwrap();
        assert_eq!((p.lambda(), p.eps()), (1.0, 0.1));
    }
}
