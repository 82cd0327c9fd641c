//! The `n = 3` case at `lambda = 1`, `eps = 0.1`, written out explicitly.

use std::f64::consts::E;

use crate::model::RateAssignment;

use super::SeqError;

/// Printed `det(df(x*))` for `m = 2, 3, 4`.
pub const TABLE1_D1: [(u32, f64); 3] = [(2, 0.336), (3, 2.784), (4, 6.525)];

/// Printed `det(df(x#))` for `m = 2 ..= 19`.
pub const TABLE1_D2: [(u32, f64); 18] = [
    (2, -1.063),
    (3, -3.811),
    (4, -7.85),
    (5, -13.19),
    (6, -19.8),
    (7, -27.71),
    (8, -36.89),
    (9, -47.36),
    (10, -59.11),
    (11, -72.14),
    (12, -86.4),
    (13, -102.0),
    (14, -118.9),
    (15, -137.1),
    (16, -156.5),
    (17, -177.2),
    (18, -199.2),
    (19, -222.5),
];

fn check_m(m: u32) -> Result<f64, SeqError> {
    if m < 2 {
        return Err(SeqError::InvalidM(m));
    }
    Ok(f64::from(m))
}

fn r2(m: f64) -> f64 {
    1.31 / ((1.31 / (m + 1.0)).exp() - 1.0)
}

fn r6(m: f64) -> f64 {
    (m - 1.31) / (((2.1 * m + 3.41) / (m + 1.0)).exp() - 1.0)
}

fn x3(m: f64) -> f64 {
    ((2.1 * m + 3.41) / (m + 1.0)).exp()
}

/// The nine rates of `K~(m, 3)`, in reaction order.
pub fn rates_n3(m: u32) -> Result<RateAssignment, SeqError> {
    let mf = check_m(m)?;
    let r1 = -1.1 / ((-1.1f64).exp() - 1.0);
    let r2 = r2(mf);
    let r3 = 1.0 / (E - 1.0);
    let r4 = 0.1 / (E - 1.0);
    let r5 = -0.21 / ((-2.1f64).exp() - 1.0);
    let r6 = r6(mf);
    let r7 = r1 + r3 + r4;
    let r8 = r1 + r2 + r5;
    let r9 = r2 + r6 - mf * r3;
    Ok(RateAssignment::new(vec![
        r1, r2, r3, r4, r5, r6, r7, r8, r9,
    ])?)
}

/// `x# = (e, e^-2.1, e^((2.1 m + 3.41)/(m + 1)))`.
pub fn x_sharp_n3(m: u32) -> Result<[f64; 3], SeqError> {
    let mf = check_m(m)?;
    Ok([E, (-2.1f64).exp(), x3(mf)])
}

/// `(D1, D2)`: the Jacobian determinants at `x* = (1, 1, 1)` and `x#` from
/// their expanded polynomial forms.
pub fn jac_dets_n3_formula(m: u32) -> Result<(f64, f64), SeqError> {
    let mf = f64::from(m);
    let r = rates_n3(m)?;
    let (r1, r2, r3, r4, r5, r6) = (r[0], r[1], r[2], r[3], r[4], r[5]);
    let [x1, x2, x3] = x_sharp_n3(m)?;

    let d1 = r2 * r1 * r3 * mf
        - (r2 + r6) * (r1 * r3 + r1 * r4 + r1 * r5 + r3 * r5 + r4 * r5)
        - r2 * r6 * (r1 + r3 + r4);

    let d2 = r2 * x2 * ((r1 * x2 + r3 + r4) * (r2 * x3) + r1 * x1 * mf * r3)
        - (r2 * x2 + r6) * (r1 * x2 + r3 + r4) * (r1 * x1 + r2 * x3 + r5)
        + (r2 * x2 + r6) * (r1 * x1 * r1 * x2);
    Ok((d1, d2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Table1Row {
    D1,
    D2,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Table1Entry {
    pub row: Table1Row,
    pub m: u32,
    pub printed: f64,
    pub computed: f64,
    pub pass: bool,
}

/// Every printed determinant next to the computed one, passing within
/// `0.005 * max(1, |printed|)`.
pub fn reproduce_table1() -> Vec<Table1Entry> {
    let entry = |row, m: u32, printed: f64| {
        let (d1, d2) = jac_dets_n3_formula(m).expect("m >= 2");
        let computed = match row {
            Table1Row::D1 => d1,
            Table1Row::D2 => d2,
        };
        Table1Entry {
            row,
            m,
            printed,
            computed,
            pass: (computed - printed).abs() <= 0.005 * printed.abs().max(1.0),
        }
    };
    TABLE1_D1
        .iter()
        .map(|&(m, v)| entry(Table1Row::D1, m, v))
        .chain(TABLE1_D2.iter().map(|&(m, v)| entry(Table1Row::D2, m, v)))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub m: u32,
    pub value: f64,
}

/// Violations of the `n = 3` rate and concentration bounds for integer
/// `m <= m_max`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundsReport {
    pub checked: usize,
    pub violations: Vec<BoundCheck>,
}

impl BoundsReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `m + 1 > r2 >= m`, `0.14 m > r6`, `r6 > 0.13 m - 0.5` (from
/// `m = 20`), `e^2.1 < x#_3(m) <= x#_3(2)` with `x#_3` decreasing, and
/// `r9 > 0`.
pub fn validate_bounds(m_max: u32) -> BoundsReport {
    let mut report = BoundsReport::default();
    let x3_at_2 = x3(2.0);
    let mut check = |name, m, value: f64, ok: bool| {
        report.checked += 1;
        if !ok {
            report.violations.push(BoundCheck { name, m, value });
        }
    };
    for m in 2..=m_max {
        let mf = f64::from(m);
        let r = rates_n3(m).expect("m >= 2");
        check("m + 1 > r2", m, r[1], mf + 1.0 > r[1]);
        check("r2 >= m", m, r[1], r[1] >= mf);
        check("0.14 m > r6", m, r[5], 0.14 * mf > r[5]);
        if m >= 20 {
            check("r6 > 0.13 m - 0.5", m, r[5], r[5] > 0.13 * mf - 0.5);
        }
        let x = x3(mf);
        check("x3 > e^2.1", m, x, x > 2.1f64.exp());
        check("x3 <= x3(2)", m, x, x <= x3_at_2);
        if m < m_max {
            check("x3 decreasing", m, x, x3(mf + 1.0) < x);
        }
        check("r9 > 0", m, r[8], r[8] > 0.0);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounded_rates() {
        let r = rates_n3(2).unwrap();
        for (k, printed) in [(0, 1.65), (2, 0.58), (3, 0.06), (4, 0.24), (6, 2.29)] {
            assert!((r[k] - printed).abs() <= 0.005, "r{} = {}", k + 1, r[k]);
        }
        assert!((r[0] - 1.64886).abs() < 1e-5);
        assert!((r[2] - 0.58198).abs() < 1e-5);
        assert!((r[3] - 0.05820).abs() < 1e-5);
        assert!((r[4] - 0.23930).abs() < 1e-5);
        assert!((r[6] - 2.28903).abs() < 1e-5);
        assert_eq!(rates_n3(1), Err(SeqError::InvalidM(1)));
    }

    #[test]
    fn r2_at_m2_lies_in_lemma_range() {
        let r2 = rates_n3(2).unwrap()[1];
        assert!((2.0..3.0).contains(&r2));
    }

    #[test]
    fn x3_tends_to_e_21() {
        assert!(x3(1e6) - 2.1f64.exp() < 1e-4);
    }

    #[test]
    fn table1_passes() {
        let t = reproduce_table1();
        assert_eq!(t.len(), 21);
        for e in &t {
            assert!(e.pass, "{e:?}");
        }
    }

    #[test]
    fn bounds_hold_to_200() {
        let report = validate_bounds(200);
        assert!(report.passed(), "{:?}", report.violations);
        assert!(report.checked > 1000);
    }
}
