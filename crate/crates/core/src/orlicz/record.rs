//! Text records for Young functions.
//!
//! Long form: `power p=2`, `power p=2 scale=0.5`, `expml`, `entropy`,
//! `tab knots=[(0,0),(1,1)] tail=2`, optionally followed by `outer=` and
//! `inner=` factors, and `conj <record>` for a complementary function.
//! Short form (command line): `power:2`, `power:2:0.5`, `expml`, `entropy`.

use super::young::{complementary, YoungFunction};
use crate::error::{Error, Result};
use std::fmt;
use std::str::FromStr;

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn number(key: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| bad(format!("{key}: cannot parse '{s}' as a number")))
}

/// Splits `key=value` pairs; bracketed values may contain spaces.
fn pairs(rest: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let chars: Vec<char> = rest.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && chars[i] != '=' && !chars[i].is_whitespace() {
            i += 1;
        }
        let key: String = chars[start..i].iter().collect();
        if i >= chars.len() || chars[i] != '=' {
            return Err(bad(format!("expected key=value, found '{key}'")));
        }
        i += 1;
        let vstart = i;
        if i < chars.len() && chars[i] == '[' {
            let mut depth = 0;
            while i < chars.len() {
                match chars[i] {
                    '[' => depth += 1,
                    ']' => {
                        depth -= 1;
                        if depth == 0 {
                            i += 1;
                            break;
                        }
                    }
                    _ => {}
                }
                i += 1;
            }
            if depth != 0 {
                return Err(bad(format!("unbalanced brackets in '{key}'")));
            }
        } else {
            while i < chars.len() && !chars[i].is_whitespace() {
                i += 1;
            }
        }
        out.push((key, chars[vstart..i].iter().collect()));
    }
    Ok(out)
}

fn knot_list(s: &str) -> Result<Vec<(f64, f64)>> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| bad("knots must be written as [(x,s),...]"))?;
    let mut knots = Vec::new();
    for chunk in inner.split(')') {
        let chunk = chunk.trim().trim_start_matches(',').trim();
        if chunk.is_empty() {
            continue;
        }
        let body = chunk.strip_prefix('(').ok_or_else(|| bad(format!("bad knot '{chunk}'")))?;
        let mut it = body.split(',');
        let x = number("knot", it.next().unwrap_or(""))?;
        let y = number("knot", it.next().ok_or_else(|| bad(format!("bad knot '{chunk}'")))?)?;
        if it.next().is_some() {
            return Err(bad(format!("bad knot '{chunk}'")));
        }
        knots.push((x, y));
    }
    Ok(knots)
}

fn parse_long(s: &str) -> Result<YoungFunction> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix("conj ") {
        return complementary(&parse_long(rest)?);
    }
    let (kind, rest) = s.split_once(char::is_whitespace).unwrap_or((s, ""));
    let kv = pairs(rest)?;
    let get = |k: &str| kv.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
    let known: &[&str] = match kind {
        "power" => &["p", "scale", "outer", "inner"],
        "expml" | "entropy" => &["scale", "outer", "inner"],
        "tab" => &["knots", "tail", "scale", "outer", "inner"],
        other => return Err(bad(format!("unknown Young function kind '{other}'"))),
    };
    if let Some((k, _)) = kv.iter().find(|(k, _)| !known.contains(&k.as_str())) {
        return Err(bad(format!("unknown key '{k}' for {kind}")));
    }
    let base = match kind {
        "power" => YoungFunction::power(number("p", get("p").ok_or_else(|| bad("power needs p="))?)?)?,
        "expml" => YoungFunction::ExpMinusLinear,
        "entropy" => YoungFunction::Entropy,
        _ => {
            let knots = knot_list(get("knots").ok_or_else(|| bad("tab needs knots="))?)?;
            let tail = number("tail", get("tail").ok_or_else(|| bad("tab needs tail="))?)?;
            YoungFunction::tabulated(knots, tail)?
        }
    };
    let mut outer = 1.0;
    if let Some(v) = get("scale") {
        outer *= number("scale", v)?;
    }
    if let Some(v) = get("outer") {
        outer *= number("outer", v)?;
    }
    let inner = get("inner").map(|v| number("inner", v)).transpose()?.unwrap_or(1.0);
    YoungFunction::scaled(base, outer, inner)
}

fn parse_short(s: &str) -> Result<YoungFunction> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["power", p] => YoungFunction::power(number("p", p)?),
        ["power", p, scale] => YoungFunction::scaled(YoungFunction::power(number("p", p)?)?, number("scale", scale)?, 1.0),
        _ => Err(bad(format!("cannot parse Young function '{s}'"))),
    }
}

/// Parses either the long text record or the `kind:param` short form.
pub fn parse_young(s: &str) -> Result<YoungFunction> {
    let t = s.trim();
    if t.contains(':') && !t.contains(' ') {
        parse_short(t)
    } else {
        parse_long(t)
    }
}

impl FromStr for YoungFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_young(s)
    }
}

impl fmt::Display for YoungFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Power { p } => write!(f, "power p={p}"),
            Self::ExpMinusLinear => write!(f, "expml"),
            Self::Entropy => write!(f, "entropy"),
            Self::Tabulated(t) => {
                write!(f, "tab knots=[")?;
                for (i, (x, s)) in t.knots().iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "({x},{s})")?;
                }
                write!(f, "] tail={}", t.tail())
            }
            Self::Scaled { base, outer, inner } => {
                write!(f, "{base} outer={outer}")?;
                if *inner != 1.0 {
                    write!(f, " inner={inner}")?;
                }
                Ok(())
            }
            Self::Conjugate(b) => write!(f, "conj {b}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn long_forms() {
        assert_eq!(parse_young("power p=2").unwrap(), YoungFunction::Power { p: 2.0 });
        assert_eq!(parse_young("expml").unwrap(), YoungFunction::ExpMinusLinear);
        assert_eq!(parse_young(" entropy ").unwrap(), YoungFunction::Entropy);
        let t = parse_young("tab knots=[(0,0), (1,1), (2,3)] tail=2.5").unwrap();
        assert!(matches!(t, YoungFunction::Tabulated(_)));
        assert!((t.value(1.0) - 0.5).abs() < 1e-12);
        let s = parse_young("power p=2 scale=0.5").unwrap();
        assert!((s.value(2.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn short_forms() {
        assert_eq!(parse_young("power:3").unwrap(), YoungFunction::Power { p: 3.0 });
        let s = parse_young("power:2:4").unwrap();
        assert!((s.value(1.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_garbage() {
        for s in ["cubic", "power", "power p=1", "power q=2", "tab knots=[(0,0),(1,1)]", "tab knots=[(0,0),(1,1),(2,1)] tail=2", "power:x"] {
            assert!(matches!(parse_young(s), Err(Error::InvalidInput(_))), "{s}");
        }
    }

    #[test]
    fn display_round_trips() {
        let cases = [
            "power p=2",
            "expml",
            "entropy",
            "tab knots=[(0,0),(1,0.5),(2,2)] tail=3",
            "power p=3 outer=0.25 inner=2",
            "conj tab knots=[(0,0),(1,0.5),(2,2)] tail=3",
        ];
        for c in cases {
            let f = parse_young(c).unwrap();
            let again = parse_young(&f.to_string()).unwrap();
            assert_eq!(f, again, "{c}");
        }
    }
}
