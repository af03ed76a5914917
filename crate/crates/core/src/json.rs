//! Fixed-width float output for byte-stable JSON.

use serde::ser::{SerializeSeq, Serializer};
use serde_json::value::RawValue;

/// 17 significant digits, enough to round-trip any finite `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn raw(x: f64) -> Box<RawValue> {
    debug_assert!(x.is_finite());
    RawValue::from_string(format_f64(x)).expect("formatted float is valid JSON")
}

pub(crate) fn f64_fixed<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&raw(*x), s)
}

pub(crate) fn opt_f64_fixed<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => f64_fixed(v, s),
        None => s.serialize_none(),
    }
}

pub(crate) fn vec_f64_fixed<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for &x in v {
        seq.serialize_element(&raw(x))?;
    }
    seq.end()
}
