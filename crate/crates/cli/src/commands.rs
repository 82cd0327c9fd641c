use std::fmt;
use std::fs;
use std::path::Path;

use crn_detopt::engine::{
    run_method, verify_certificate, Certificate, HypothesisWitness, MethodConfig, MethodError,
    Stage, Strategy, VerificationReport,
};
use crn_detopt::numfmt::sig17;
use crn_detopt::parse_network;
use crn_detopt::seqnet::{
    closed_form_certificate, epsilon_sweep, match_degeneracy_intervals, recognize_sequestration,
    reproduce_table1, scan_csv, small_mn_scan, sweep_csv, SeqError, SeqParams, Table1Row,
};

use crate::lists::{float_range, int_list};
use crate::{ConstructArgs, ScanArgs, StrategyArg, SweepArgs, Table1Args, Tolerances, VerifyArgs};

#[derive(Debug)]
pub enum Failure {
    Input(String),
    Inconclusive(String),
    Verification(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Inconclusive(_) => 2,
            Failure::Verification(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Inconclusive(m) | Failure::Verification(m) => {
                f.write_str(m)
            }
        }
    }
}

type CmdResult = Result<(), Failure>;

fn input(e: impl fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

fn check_tolerances(tol: &Tolerances) -> CmdResult {
    for (name, v) in [
        ("--tol-residual", tol.tol_residual),
        ("--tol-det", tol.tol_det),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Failure::Input(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn seq_failure(e: SeqError) -> Failure {
    match e {
        SeqError::InvalidM(_)
        | SeqError::InvalidN(_)
        | SeqError::InvalidLambda(_)
        | SeqError::InvalidEps(_)
        | SeqError::InvalidDelta1(_)
        | SeqError::InvalidRange { .. } => Failure::Input(e.to_string()),
        _ => Failure::Inconclusive(e.to_string()),
    }
}

fn vec_line(v: &[f64]) -> String {
    v.iter().map(|x| sig17(*x)).collect::<Vec<_>>().join(", ")
}

fn print_report(r: &VerificationReport) {
    let mark = |ok: bool| if ok { "ok" } else { "FAIL" };
    eprintln!(
        "residual x*   {:>24}  {}",
        sig17(r.residual_star),
        mark(r.steady_star())
    );
    eprintln!(
        "residual x#   {:>24}  {}",
        sig17(r.residual_sharp),
        mark(r.steady_sharp())
    );
    eprintln!(
        "det J(x*)     {:>24}  ratio {:.3e}  {}",
        sig17(r.det_star),
        r.ratio_star,
        mark(r.nondegenerate_star)
    );
    eprintln!(
        "det J(x#)     {:>24}  ratio {:.3e}  {}",
        sig17(r.det_sharp),
        r.ratio_sharp,
        mark(r.nondegenerate_sharp)
    );
    eprintln!(
        "|x* - x#|     {:>24}  {}",
        sig17(r.distance),
        mark(r.distinct())
    );
    eprintln!("rates > 0     {:>24}", mark(r.rates_positive));
    eprintln!("fully open    {:>24}", mark(r.fully_open));
    eprintln!(
        "tolerances    residual {:e}, det {:e}",
        r.tol_residual, r.tol_det
    );
}

fn print_certificate(cert: &Certificate) {
    eprintln!("rates  {}", vec_line(&cert.rates));
    eprintln!("x*     {}", vec_line(&cert.x_star));
    eprintln!("x#     {}", vec_line(&cert.x_sharp));
}

fn emit_certificate(cert: &Certificate, out: Option<&Path>) -> CmdResult {
    let json = cert.to_json();
    match out {
        Some(path) => write(path, &json),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn finish(cert: &Certificate, report: &VerificationReport, out: Option<&Path>) -> CmdResult {
    print_certificate(cert);
    print_report(report);
    emit_certificate(cert, out)?;
    if report.passed() {
        eprintln!("certificate verified");
        Ok(())
    } else {
        Err(Failure::Verification(
            "certificate does not pass verification".into(),
        ))
    }
}

pub fn construct(a: ConstructArgs) -> CmdResult {
    check_tolerances(&a.tol)?;
    if a.input == "kmn" {
        construct_kmn(&a)
    } else {
        construct_file(&a)
    }
}

fn construct_kmn(a: &ConstructArgs) -> CmdResult {
    if a.witness.is_some() || a.eta_tilde.is_some() {
        return Err(Failure::Input(
            "--witness and --eta-tilde apply to network files".into(),
        ));
    }
    let (Some(m), Some(n)) = (a.m, a.n) else {
        return Err(Failure::Input("`construct kmn` needs --m and --n".into()));
    };
    if a.strategy != StrategyArg::Bisect {
        eprintln!("note: --strategy is ignored for `kmn`, which uses closed forms");
    }
    let d = SeqParams::defaults(m, n).map_err(seq_failure)?;
    let p = SeqParams::new(
        m,
        n,
        a.lambda.unwrap_or(d.lambda()),
        a.eps.unwrap_or(d.eps()),
        a.delta1.unwrap_or(d.delta1()),
    )
    .map_err(seq_failure)?;
    eprintln!(
        "K~({m},{n})  lambda {}  eps {}  delta1 {}",
        sig17(p.lambda()),
        sig17(p.eps()),
        sig17(p.delta1())
    );
    let cert = closed_form_certificate(&p).map_err(seq_failure)?;
    let report = verify_certificate(&cert, a.tol.tol_residual, a.tol.tol_det);
    finish(&cert, &report, a.out.as_deref())
}

fn construct_file(a: &ConstructArgs) -> CmdResult {
    if a.m.is_some() || a.n.is_some() {
        return Err(Failure::Input(
            "--m and --n apply to `construct kmn`".into(),
        ));
    }
    let text = read(Path::new(&a.input))?;
    let (net, rates) =
        parse_network(&text).map_err(|e| Failure::Input(format!("{}: {e}", a.input)))?;
    if rates.is_some() {
        eprintln!("note: rates in {} are ignored", a.input);
    }

    let witness = match (&a.witness, &a.eta_tilde) {
        (Some(idx), eta) => {
            let reactions = idx
                .iter()
                .map(|&k| {
                    k.checked_sub(1)
                        .ok_or_else(|| input("witness reactions are numbered from 1"))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let eta = eta.clone().unwrap_or_else(|| vec![1.0; reactions.len()]);
            HypothesisWitness::new(&net, reactions, eta).map_err(input)?
        }
        (None, Some(eta)) => HypothesisWitness::internal(&net, eta.clone()).map_err(input)?,
        (None, None) => match recognize_sequestration(&net) {
            Some((m, _)) => HypothesisWitness::sequestration(&net, m).map_err(input)?,
            None => {
                let internal = net
                    .reactions()
                    .iter()
                    .filter(|r| r.kind() == crn_detopt::ReactionKind::Internal)
                    .count();
                HypothesisWitness::internal(&net, vec![1.0; internal]).map_err(input)?
            }
        },
    };
    eprintln!(
        "witness reactions {:?}  eta~ {}",
        witness
            .reactions()
            .iter()
            .map(|k| k + 1)
            .collect::<Vec<_>>(),
        vec_line(witness.eta_tilde())
    );

    let mut config = MethodConfig {
        strategy: match a.strategy {
            StrategyArg::Bisect => Strategy::Bisect,
            StrategyArg::FreeVariable => Strategy::FreeVariable,
        },
        tol_residual: a.tol.tol_residual,
        tol_det: a.tol.tol_det,
        ..MethodConfig::default()
    };
    if let Some(l) = a.lambda {
        config.lambda_grid = vec![l];
    }
    if let Some(e) = a.eps {
        config.eps_grid = vec![e];
    }
    if let Some(s) = a.delta1 {
        config.scaling = s;
    }

    match run_method(&net, &witness, &config) {
        Ok(outcome) => {
            let em = &outcome.eta_minus;
            eprintln!(
                "eta-   lambda {}  eps {}  det {}",
                sig17(em.lambda),
                sig17(em.eps),
                sig17(em.det)
            );
            if let Some(ep) = &outcome.eta_plus {
                eprintln!(
                    "eta+   lambda {}  eps {}  det {}",
                    sig17(ep.lambda),
                    sig17(ep.eps),
                    sig17(ep.det)
                );
            }
            eprintln!("eta0   {}", vec_line(&outcome.certificate.eta_zero));
            finish(&outcome.certificate, &outcome.report, a.out.as_deref())
        }
        Err(MethodError::Verification {
            certificate,
            report,
        }) => finish(&certificate, &report, a.out.as_deref()),
        Err(
            e @ MethodError::Stage {
                stage: Stage::Input,
                ..
            },
        ) => Err(input(e)),
        Err(e) => Err(Failure::Inconclusive(format!("method inconclusive at {e}"))),
    }
}

pub fn verify(a: VerifyArgs) -> CmdResult {
    check_tolerances(&a.tol)?;
    let text = read(&a.certificate)?;
    let cert = Certificate::from_json(&text)
        .map_err(|e| Failure::Input(format!("{}: {e}", a.certificate.display())))?;
    let report = verify_certificate(&cert, a.tol.tol_residual, a.tol.tol_det);
    print_report(&report);
    if report.passed() {
        eprintln!("certificate verified");
        Ok(())
    } else {
        Err(Failure::Verification(
            "certificate does not pass verification".into(),
        ))
    }
}

pub fn table1(a: Table1Args) -> CmdResult {
    let entries = reproduce_table1();
    let mut csv = String::from("row,m,printed,computed,pass\n");
    println!(
        "{:<4} {:>3} {:>10} {:>26}  result",
        "row", "m", "printed", "computed"
    );
    for e in &entries {
        let row = match e.row {
            Table1Row::D1 => "D1",
            Table1Row::D2 => "D2",
        };
        println!(
            "{row:<4} {:>3} {:>10} {:>26}  {}",
            e.m,
            e.printed,
            sig17(e.computed),
            if e.pass { "pass" } else { "FAIL" }
        );
        csv.push_str(&format!(
            "{row},{},{},{},{}\n",
            e.m,
            e.printed,
            sig17(e.computed),
            e.pass
        ));
    }
    if let Some(path) = &a.out {
        write(path, &csv)?;
    }
    let failed = entries.iter().filter(|e| !e.pass).count();
    println!(
        "{} of {} entries match",
        entries.len() - failed,
        entries.len()
    );
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Verification(format!(
            "{failed} table entries differ"
        )))
    }
}

pub fn scan(a: ScanArgs) -> CmdResult {
    let ms: Vec<u32> = int_list(&a.m).map_err(|e| Failure::Input(format!("--m: {e}")))?;
    let ns: Vec<usize> = int_list(&a.n).map_err(|e| Failure::Input(format!("--n: {e}")))?;
    let rows = small_mn_scan(&ms, &ns, a.lambda, a.eps, a.delta1);
    println!(
        "{:>3} {:>3} {:>8} {:>8} {:>26} {:>26}  result",
        "m", "n", "lambda", "eps", "detStar", "detSharp"
    );
    for r in &rows {
        match &r.error {
            Some(e) => println!(
                "{:>3} {:>3} {:>8} {:>8}  error: {e}",
                r.m, r.n, r.lambda, r.eps
            ),
            None => println!(
                "{:>3} {:>3} {:>8} {:>8} {:>26} {:>26}  {}",
                r.m,
                r.n,
                r.lambda,
                r.eps,
                sig17(r.det_star),
                sig17(r.det_sharp),
                if r.both_nonzero { "nonzero" } else { "FAIL" }
            ),
        }
    }
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
        for &n in &ns {
            write(&dir.join(format!("scan_n{n}.csv")), &scan_csv(&rows, n))?;
        }
    }
    let failed = rows.iter().filter(|r| !r.both_nonzero).count();
    println!(
        "{} of {} cells have both determinants nonzero",
        rows.len() - failed,
        rows.len()
    );
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Verification(format!("{failed} cells fail")))
    }
}

pub fn sweep(a: SweepArgs) -> CmdResult {
    let (lo, hi) = float_range(&a.eps).map_err(|e| Failure::Input(format!("--eps: {e}")))?;
    let result = epsilon_sweep(a.m, a.n, a.lambda, lo, hi, a.steps).map_err(seq_failure)?;
    if let Some(path) = &a.out {
        write(path, &sweep_csv(&result))?;
    }
    println!(
        "{} grid points evaluated, {} without a certificate",
        result.samples.len(),
        result.failures.len()
    );
    if let (Some((first, e)), Some((last, _))) = (result.failures.first(), result.failures.last()) {
        println!(
            "  no certificate for eps in [{}, {}]: {e}",
            sig17(*first),
            sig17(*last)
        );
    }
    for b in result.star.iter().chain(&result.sharp) {
        println!(
            "sign change of det J({}) in ({}, {})  dets {} / {}",
            b.which,
            sig17(b.lo),
            sig17(b.hi),
            sig17(b.det_lo),
            sig17(b.det_hi)
        );
    }
    if !(a.m == 2 && a.n == 3 && a.lambda == 1.0) {
        return Ok(());
    }
    let mut failed = 0;
    for ((which, lo, hi), hit) in match_degeneracy_intervals(&result) {
        match hit {
            Some(b) => println!(
                "PASS  det J({which}) root in ({lo}, {hi}): ({}, {})",
                sig17(b.lo),
                sig17(b.hi)
            ),
            None => {
                failed += 1;
                println!("FAIL  det J({which}) root in ({lo}, {hi}): none found");
            }
        }
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Verification(format!(
            "{failed} expected sign changes not found"
        )))
    }
}
