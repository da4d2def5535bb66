//! `key=value` parameter parsing for state families.

use std::collections::BTreeMap;

use tomokit::states::{num_entry, BatchSpec, Family, IntRange, Logical, ParamValue, Parity, Range, StateLabel};
use tomokit::{Error, Result};

/// `key=value` pairs; a repeated key keeps the last value.
pub fn parse_pairs(pairs: &[String]) -> Result<BTreeMap<String, String>> {
    pairs
        .iter()
        .map(|p| {
            let (k, v) = p.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got `{p}`")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn number(key: &str, s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("`{key}`: `{s}` is not a number")))
}

fn integer(key: &str, s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::Parse(format!("`{key}`: `{s}` is not a non-negative integer")))
}

/// `low:high`, or a single value for a degenerate span.
pub fn span(key: &str, s: &str) -> Result<(f64, f64)> {
    match s.split_once(':') {
        Some((a, b)) => Ok((number(key, a)?, number(key, b)?)),
        None => {
            let v = number(key, s)?;
            Ok((v, v))
        }
    }
}

fn int_span(key: &str, s: &str) -> Result<IntRange> {
    match s.split_once(':') {
        Some((a, b)) => Ok(IntRange::new(integer(key, a)?, integer(key, b)?)),
        None => {
            let v = integer(key, s)?;
            Ok(IntRange::new(v, v))
        }
    }
}

fn range(key: &str, s: &str) -> Result<Range> {
    let (a, b) = span(key, s)?;
    Ok(Range::new(a, b))
}

fn parity(s: &str) -> Result<Option<Parity>> {
    match s {
        "even" | "0" => Ok(Some(Parity::Even)),
        "odd" | "1" => Ok(Some(Parity::Odd)),
        "any" => Ok(None),
        _ => Err(Error::Parse(format!("parity must be even, odd or any, got `{s}`"))),
    }
}

fn logical(s: &str) -> Result<Option<Logical>> {
    match s {
        "0" | "zero" => Ok(Some(Logical::Zero)),
        "1" | "one" => Ok(Some(Logical::One)),
        "any" => Ok(None),
        _ => Err(Error::Parse(format!("logical must be 0, 1 or any, got `{s}`"))),
    }
}

fn unknown(family: Family, key: &str) -> Error {
    Error::InvalidParameter(format!("`{key}` is not a parameter of the {} family", family.name()))
}

/// Batch ranges: the family's dataset defaults with any given keys
/// overridden. Values are `low:high` or a single value.
pub fn batch_spec(family: Family, params: &BTreeMap<String, String>) -> Result<BatchSpec> {
    let mut spec = BatchSpec::dataset_default(family);
    for (key, value) in params {
        let k = key.as_str();
        match (&mut spec, k) {
            (BatchSpec::Fock { n }, "n") => *n = int_span(k, value)?,
            (BatchSpec::Coherent { alpha_magnitude }, "alpha_mag") => *alpha_magnitude = range(k, value)?,
            (BatchSpec::Thermal { nth }, "nth") => *nth = range(k, value)?,
            (BatchSpec::Cat { alpha_magnitude, .. }, "alpha_mag") => *alpha_magnitude = range(k, value)?,
            (BatchSpec::Cat { parity: p, .. }, "parity") => *p = parity(value)?,
            (BatchSpec::Binomial { n, .. }, "N") => *n = int_span(k, value)?,
            (BatchSpec::Binomial { s, .. }, "S") => *s = int_span(k, value)?,
            (BatchSpec::Num { table }, "name") => {
                *table = value.split(',').map(|name| num_entry(name.trim())).collect::<Result<_>>()?;
            }
            (BatchSpec::Gkp { delta, .. }, "delta") => *delta = range(k, value)?,
            (BatchSpec::Gkp { logical: l, .. }, "logical") => *l = logical(value)?,
            (BatchSpec::Gkp { halfwidth, .. }, "halfwidth") => *halfwidth = integer(k, value)?,
            (BatchSpec::RandomMixed { rank }, "rank") => *rank = Some(int_span(k, value)?),
            _ => return Err(unknown(family, k)),
        }
    }
    spec.validate()?;
    Ok(spec)
}

fn complex(key: &str, s: &str) -> Result<ParamValue> {
    let (re, im) = match s.split_once(',') {
        Some((a, b)) => (number(key, a)?, number(key, b)?),
        None => (number(key, s)?, 0.0),
    };
    Ok(ParamValue::Complex([re, im]))
}

/// A single fully specified state, e.g. `alpha=1` or `alpha=0.5,0.2`.
pub fn fixed_label(family: Family, params: &BTreeMap<String, String>) -> Result<StateLabel> {
    let get = |k: &str| params.get(k).map(String::as_str).ok_or_else(|| Error::InvalidParameter(format!("missing parameter `{k}`")));
    for key in params.keys() {
        let allowed: &[&str] = match family {
            Family::Num => &["name"],
            Family::Gkp => &["delta", "logical", "halfwidth"],
            Family::Cat => &["alpha", "parity"],
            _ => family.required_keys(),
        };
        if !allowed.contains(&key.as_str()) {
            return Err(unknown(family, key));
        }
    }
    let int = |k: &str| -> Result<ParamValue> { Ok(ParamValue::Int(integer(k, get(k)?)? as i64)) };
    match family {
        Family::Fock => StateLabel::new(family, [("n", int("n")?)]),
        Family::Coherent => StateLabel::new(family, [("alpha", complex("alpha", get("alpha")?)?)]),
        Family::Thermal => StateLabel::new(family, [("nth", ParamValue::Real(number("nth", get("nth")?)?))]),
        Family::Cat => {
            let p = parity(params.get("parity").map_or("even", String::as_str))?.unwrap_or(Parity::Even);
            StateLabel::new(
                family,
                [("alpha", complex("alpha", get("alpha")?)?), ("parity", ParamValue::Int(if p == Parity::Odd { 1 } else { 0 }))],
            )
        }
        Family::Binomial => StateLabel::new(family, [("N", int("N")?), ("S", int("S")?)]),
        Family::Num => Ok(num_entry(get("name")?)?.label()),
        Family::Gkp => {
            let l = logical(params.get("logical").map_or("0", String::as_str))?.unwrap_or(Logical::Zero);
            let halfwidth = params.get("halfwidth").map_or(Ok(3), |h| integer("halfwidth", h))?;
            StateLabel::new(
                family,
                [
                    ("delta", ParamValue::Real(number("delta", get("delta")?)?)),
                    ("logical", ParamValue::Int(if l == Logical::One { 1 } else { 0 })),
                    ("halfwidth", ParamValue::Int(halfwidth as i64)),
                ],
            )
        }
        Family::RandomMixed => StateLabel::new(family, [("rank", int("rank")?), ("seed", int("seed")?)]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[&str]) -> BTreeMap<String, String> {
        parse_pairs(&pairs.iter().map(|s| s.to_string()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn spans_and_ranges() {
        assert_eq!(span("x", "-5:5").unwrap(), (-5.0, 5.0));
        assert_eq!(span("x", "2").unwrap(), (2.0, 2.0));
        assert!(span("x", "a:b").is_err());
        let spec = batch_spec(Family::Cat, &map(&["alpha_mag=0:10"])).unwrap();
        assert_eq!(spec, BatchSpec::Cat { alpha_magnitude: Range::new(0.0, 10.0), parity: Some(Parity::Even) });
        assert!(batch_spec(Family::Fock, &map(&["alpha_mag=1"])).is_err());
        assert!(batch_spec(Family::Thermal, &map(&["nth=3:1"])).is_err());
    }

    #[test]
    fn fixed_labels_build() {
        let rho = fixed_label(Family::Fock, &map(&["n=2"])).unwrap().build(4).unwrap();
        assert_eq!(rho.get(2, 2).re, 1.0);
        let label = fixed_label(Family::Coherent, &map(&["alpha=0.5,0.25"])).unwrap();
        assert_eq!(label.params["alpha"], ParamValue::Complex([0.5, 0.25]));
        assert!(fixed_label(Family::Coherent, &map(&[])).is_err());
        assert!(fixed_label(Family::Num, &map(&["name=M2"])).is_ok());
    }
}
