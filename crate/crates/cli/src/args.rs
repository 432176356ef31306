//! Parsers for numeric command-line values.

use rotwave::so3::AxisVector;
use rotwave::{Error, Result};

fn usage(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub fn parse_real(s: &str) -> Result<f64> {
    let t = s.trim();
    let x: f64 = t
        .parse()
        .map_err(|_| usage(format!("malformed number {t:?}")))?;
    if !x.is_finite() {
        return Err(usage(format!("number must be finite, got {t:?}")));
    }
    Ok(x)
}

/// Comma-separated finite reals, e.g. `0.01,0.05`.
pub fn parse_real_list(s: &str) -> Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Err(usage("empty list"));
    }
    s.split(',').map(parse_real).collect()
}

/// `x,y,z`.
pub fn parse_axis_vector(s: &str) -> Result<AxisVector> {
    let v = parse_real_list(s)?;
    match v.as_slice() {
        [x, y, z] => Ok(AxisVector::new(*x, *y, *z)),
        _ => Err(usage(format!(
            "expected 3 components, got {} in {s:?}",
            v.len()
        ))),
    }
}

/// BCH operands as six reals or as two `x,y,z` triples.
pub fn parse_bch_operands<S: AsRef<str>>(items: &[S]) -> Result<(AxisVector, AxisVector)> {
    match items {
        [x, y] => Ok((
            parse_axis_vector(x.as_ref())?,
            parse_axis_vector(y.as_ref())?,
        )),
        _ if items.len() == 6 => {
            let v = items
                .iter()
                .map(|s| parse_real(s.as_ref()))
                .collect::<Result<Vec<_>>>()?;
            Ok((
                AxisVector::new(v[0], v[1], v[2]),
                AxisVector::new(v[3], v[4], v[5]),
            ))
        }
        _ => Err(usage(format!(
            "bch takes six reals or two x,y,z triples, got {} arguments",
            items.len()
        ))),
    }
}
