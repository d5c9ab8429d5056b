//! TOML spec files and the built-in example decompositions.
//!
//! ```toml
//! [[annuli]]
//! id = "e0"
//! alpha = -1
//! beta = "0"
//! cmag = "1"
//! a_lo = "0"
//! a_hi = "3"
//! end_lo = "v"
//! end_hi = "v"
//!
//! [[junctions]]
//! id = "v"
//! table = [[0, 0], [0, 0]]
//! ```
//!
//! Rationals may be written as `"p/q"` strings, integers, or decimals.

use sha2::{Digest, Sha256};

use crate::degeneration::{Degeneration, DegenerationSpec};
use crate::error::{Error, Result};

/// Serde adapter writing rationals as `"p/q"` and accepting strings, integers
/// and (exactly converted) floats.
pub(crate) mod rational {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};

    use crate::number::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(*r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Rational;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a rational as \"p/q\", an integer, or a decimal")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Rational, E> {
                parse_rational(v).map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rational, E> {
                Ok(Rational::from_integer(v as i128))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rational, E> {
                Ok(Rational::from_integer(v as i128))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Rational, E> {
                // shortest round-trip decimal, so 0.1 means 1/10
                parse_rational(&format!("{v:e}")).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

/// Parses a spec document without validating it.
pub fn parse_spec(text: &str) -> Result<DegenerationSpec> {
    toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

/// Parses and validates; validation messages carry the line of the offending
/// piece's `id` entry when it can be located.
pub fn load_spec(text: &str) -> Result<Degeneration> {
    let spec = parse_spec(text)?;
    let report = spec.validate();
    if report.passed() {
        return Degeneration::new(spec);
    }
    let messages = report
        .violations
        .iter()
        .map(|v| match id_line(text, &v.subject) {
            Some(line) => format!("line {line}: {v}"),
            None => v.to_string(),
        })
        .collect();
    Err(Error::Validation(messages))
}

fn id_line(text: &str, id: &str) -> Option<usize> {
    if id.is_empty() {
        return None;
    }
    let id = id.split(':').next().unwrap_or(id);
    text.lines().position(|l| {
        let Some((key, value)) = l.split_once('=') else { return false };
        key.trim() == "id" && value.trim().trim_matches(['"', '\'']) == id
    })
    .map(|k| k + 1)
}

/// Canonical TOML rendering; parsing it back yields the same spec.
pub fn to_toml(spec: &DegenerationSpec) -> String {
    toml::to_string(spec).expect("spec serializes")
}

/// Hex SHA-256 of the canonical rendering.
pub fn spec_hash(spec: &DegenerationSpec) -> String {
    Sha256::digest(to_toml(spec).as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub const BUILTIN_NAMES: [&str; 4] = ["tate", "theta", "collapsed-theta", "ball-decorated"];

/// Source text of a built-in spec.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    match name {
        "tate" => Some(TATE),
        "theta" => Some(THETA),
        "collapsed-theta" => Some(COLLAPSED_THETA),
        "ball-decorated" => Some(BALL_DECORATED),
        _ => None,
    }
}

pub fn builtin(name: &str) -> Result<Degeneration> {
    let text = builtin_source(name).ok_or_else(|| {
        Error::Argument(format!("unknown built-in spec {name:?}; known: {}", BUILTIN_NAMES.join(", ")))
    })?;
    load_spec(text)
}

// Zero crossing tables make the boundary circles meet isometrically, so the
// Tate fiber is an exact flat torus.
const TATE: &str = r#"
[[annuli]]
id = "e0"
alpha = -1
beta = "0"
cmag = "1"
a_lo = "0"
a_hi = "3"
end_lo = "v"
end_hi = "v"

[[junctions]]
id = "v"
table = [[0.0, 0.0], [0.0, 0.0]]
"#;

const THETA: &str = r#"
[[annuli]]
id = "e0"
alpha = -1
beta = "0"
cmag = "1"
a_lo = "0"
a_hi = "1"
end_lo = "u"
end_hi = "v"

[[annuli]]
id = "e1"
alpha = -1
beta = "0"
cmag = "1"
a_lo = "0"
a_hi = "1"
end_lo = "u"
end_hi = "v"

[[annuli]]
id = "e2"
alpha = -1
beta = "0"
cmag = "1"
a_lo = "0"
a_hi = "2"
end_lo = "u"
end_hi = "v"

[[junctions]]
id = "u"
table = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]

[[junctions]]
id = "v"
table = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]
"#;

const COLLAPSED_THETA: &str = r#"
[[annuli]]
id = "e0"
alpha = -1
beta = "0"
cmag = "1"
a_lo = "0"
a_hi = "1"
end_lo = "u"
end_hi = "v"

[[annuli]]
id = "e1"
alpha = -1
beta = "0"
cmag = "1"
a_lo = "0"
a_hi = "1"
end_lo = "u"
end_hi = "v"

[[annuli]]
id = "e2"
alpha = -1
beta = "1"
cmag = "1"
a_lo = "0"
a_hi = "2"
end_lo = "u"
end_hi = "v"

[[junctions]]
id = "u"
table = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]

[[junctions]]
id = "v"
table = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]
"#;

const BALL_DECORATED: &str = r#"
[[annuli]]
id = "e0"
alpha = -1
beta = "0"
cmag = "1"
a_lo = "0"
a_hi = "1"
end_lo = "u"
end_hi = "v"

[[annuli]]
id = "e1"
alpha = -1
beta = "0"
cmag = "1"
a_lo = "0"
a_hi = "1"
end_lo = "u"
end_hi = "v"

[[annuli]]
id = "e2"
alpha = -1
beta = "0"
cmag = "1"
a_lo = "0"
a_hi = "2"
end_lo = "u"
end_hi = "v"

[[balls]]
id = "b0"
alpha = 0
beta = "0"
cmag = "1"
a_lo = "0"
depth = "1"
end = "u"

[[junctions]]
id = "u"
slots = ["e0:lo", "e1:lo", "e2:lo", "b0"]
table = [[0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 0.0, 1.0], [1.0, 1.0, 1.0, 0.0]]

[[junctions]]
id = "v"
table = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]
"#;
