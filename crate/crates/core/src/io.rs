//! JSON formats for moment data, plus the bundled example fixtures.
//!
//! All rationals are written as strings `"p/q"` or `"p"`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::arith::{format_rational, parse_rational, Rational};
use crate::error::{Error, Result};
use crate::moments::{BivariateMoments, CurveParams};

/// A parsed moment file.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentFile {
    pub curve: CurveParams,
    pub beta: BivariateMoments,
    /// The file's own claim; [`BivariateMoments::is_symmetric`] is authoritative.
    pub symmetric: Option<bool>,
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::Parse(format!("missing field \"{key}\"")))
}

fn rational_field(obj: &Map<String, Value>, key: &str) -> Result<Rational> {
    match field(obj, key)? {
        Value::String(s) => parse_rational(s)
            .map_err(|e| Error::Parse(format!("field \"{key}\": {e}"))),
        Value::Number(n) if n.is_i64() => Ok(Rational::from_integer(n.as_i64().unwrap().into())),
        other => Err(Error::Parse(format!(
            "field \"{key}\": expected a rational string, got {other}"
        ))),
    }
}

fn parse_index(key: &str) -> Result<(usize, usize)> {
    let bad = || Error::Parse(format!("moment key \"{key}\" is not of the form \"i,j\""));
    let (i, j) = key.split_once(',').ok_or_else(bad)?;
    Ok((
        i.trim().parse().map_err(|_| bad())?,
        j.trim().parse().map_err(|_| bad())?,
    ))
}

/// Parses `{"n", "a", "b", "moments": {"i,j": "p/q"}, "symmetric"?}`.
///
/// Every index with `i + j <= 2n` must be present; a missing moment is an
/// error rather than an implicit zero.
pub fn parse_moment_json(text: &str) -> Result<MomentFile> {
    let value: Value = serde_json::from_str(text)?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Parse("top level must be an object".into()))?;
    let n = field(obj, "n")?
        .as_u64()
        .ok_or_else(|| Error::Parse("field \"n\": expected a nonnegative integer".into()))?
        as usize;
    let curve = CurveParams::new(rational_field(obj, "a")?, rational_field(obj, "b")?);
    let moments = field(obj, "moments")?
        .as_object()
        .ok_or_else(|| Error::Parse("field \"moments\": expected an object".into()))?;
    let mut values = BTreeMap::new();
    for (key, v) in moments {
        let idx = parse_index(key)?;
        if idx.0 + idx.1 > 2 * n {
            return Err(Error::Parse(format!(
                "moment \"{key}\" exceeds degree {}",
                2 * n
            )));
        }
        let s = v
            .as_str()
            .ok_or_else(|| Error::Parse(format!("moment \"{key}\": expected a string")))?;
        let r = parse_rational(s).map_err(|e| Error::Parse(format!("moment \"{key}\": {e}")))?;
        values.insert(idx, r);
    }
    let beta = BivariateMoments::new(2 * n, values)?;
    let symmetric = match obj.get("symmetric") {
        None => None,
        Some(Value::Bool(b)) => Some(*b),
        Some(_) => return Err(Error::Parse("field \"symmetric\": expected a boolean".into())),
    };
    Ok(MomentFile {
        curve,
        beta,
        symmetric,
    })
}

/// Writes a moment file in degree-lex key order.
pub fn write_moment_json(curve: &CurveParams, beta: &BivariateMoments) -> String {
    let mut moments = Map::new();
    for d in 0..=beta.degree() {
        for i in (0..=d).rev() {
            let j = d - i;
            moments.insert(format!("{i},{j}"), Value::String(format_rational(beta.at(i, j))));
        }
    }
    let mut obj = Map::new();
    obj.insert("n".into(), Value::from(beta.n()));
    obj.insert("a".into(), Value::String(format_rational(&curve.a)));
    obj.insert("b".into(), Value::String(format_rational(&curve.b)));
    obj.insert("moments".into(), Value::Object(moments));
    obj.insert("symmetric".into(), Value::Bool(beta.is_symmetric()));
    let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("json");
    s.push('\n');
    s
}

/// Support of a univariate problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SupportJson {
    Halfline,
    Union { c: String, d: String },
}

/// `{"N": 9, "gamma": [...], "support": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnivariateJson {
    #[serde(rename = "N")]
    pub n: usize,
    pub gamma: Vec<String>,
    pub support: SupportJson,
}

impl UnivariateJson {
    pub fn gamma_rational(&self) -> Result<Vec<Rational>> {
        if self.gamma.len() != self.n + 1 {
            return Err(Error::Parse(format!(
                "expected {} gamma values, found {}",
                self.n + 1,
                self.gamma.len()
            )));
        }
        self.gamma.iter().map(|s| parse_rational(s)).collect()
    }
}

/// The three worked examples shipped with the crate.
pub mod fixtures {
    /// Symmetric data on a two-component curve; `R` has no real root.
    pub const EXAMPLE_1150: &str = include_str!("../fixtures/example-1150.json");
    /// Data on the cusp `y^2 = x^3` with a unique flat extension.
    pub const EXAMPLE_1046: &str = include_str!("../fixtures/example-1046.json");
    /// Data on the cusp where `R` is a negative constant.
    pub const EXAMPLE_2031: &str = include_str!("../fixtures/example-2031.json");
    /// Generated symmetric data on `y^2 = x^3 - x` (three real roots).
    pub const SYMMETRIC_THREE_ROOTS: &str = include_str!("../fixtures/symmetric-three-roots.json");
    /// Generated symmetric data on `y^2 = x^3 + x + 1` (one real root).
    pub const SYMMETRIC_HALFLINE: &str = include_str!("../fixtures/symmetric-halfline.json");

    /// `(name, contents)` for every fixture.
    pub fn all() -> [(&'static str, &'static str); 5] {
        [
            ("example-1150", EXAMPLE_1150),
            ("example-1046", EXAMPLE_1046),
            ("example-2031", EXAMPLE_2031),
            ("symmetric-three-roots", SYMMETRIC_THREE_ROOTS),
            ("symmetric-halfline", SYMMETRIC_HALFLINE),
        ]
    }
}
