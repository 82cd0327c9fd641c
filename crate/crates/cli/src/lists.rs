//! `a..b` and `a,b,c` argument values.

use std::str::FromStr;

/// Inclusive integer range `a..b` or a comma-separated list.
pub fn int_list<T: TryFrom<u64>>(s: &str) -> Result<Vec<T>, String> {
    let values: Vec<u64> = if let Some((lo, hi)) = s.split_once("..") {
        let (lo, hi): (u64, u64) = (parse(lo)?, parse(hi)?);
        if lo > hi {
            return Err(format!("empty range `{s}`"));
        }
        (lo..=hi).collect()
    } else {
        s.split(',').map(parse).collect::<Result<_, _>>()?
    };
    values
        .into_iter()
        .map(|v| T::try_from(v).map_err(|_| format!("{v} is too large")))
        .collect()
}

/// `lo..hi` with `lo < hi`.
pub fn float_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected `lo..hi`, got `{s}`"))?;
    let (lo, hi): (f64, f64) = (parse(lo)?, parse(hi)?);
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err(format!("empty range `{s}`"));
    }
    Ok((lo, hi))
}

fn parse<T: FromStr>(s: &str) -> Result<T, String> {
    s.trim()
        .parse()
        .map_err(|_| format!("cannot parse `{}`", s.trim()))
}
