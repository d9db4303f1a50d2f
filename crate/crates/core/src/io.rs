//! Channel JSON files.
//!
//! ```json
//! {"m": 1, "n": 1, "kraus": [[[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]]}
//! ```
//!
//! Each matrix is a list of rows and each entry an `[re, im]` pair. An
//! optional `"choi"` matrix uses the same encoding; when `"kraus"` is absent
//! the Kraus operators are derived from it.

use std::fmt::Write as _;

use serde_json::Value;

use crate::channel::{choi_from_kraus, kraus_from_choi, ChoiMatrix, KrausSet, RANK_TOLERANCE};
use crate::compiler::ConvexMixture;
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

fn write_matrix(out: &mut String, a: &CMat) {
    out.push('[');
    for r in 0..a.rows() {
        if r > 0 {
            out.push_str(", ");
        }
        out.push('[');
        for c in 0..a.cols() {
            if c > 0 {
                out.push_str(", ");
            }
            let z = a[(r, c)];
            let _ = write!(out, "[{:.16e}, {:.16e}]", z.re, z.im);
        }
        out.push(']');
    }
    out.push(']');
}

fn channel_body(ks: &KrausSet, with_choi: bool) -> String {
    let mut s = format!("{{\"m\": {}, \"n\": {}, \"kraus\": [", ks.m(), ks.n());
    for (i, a) in ks.ops().iter().enumerate() {
        if i > 0 {
            s.push_str(",\n  ");
        } else {
            s.push_str("\n  ");
        }
        write_matrix(&mut s, a);
    }
    s.push_str("\n]");
    if with_choi {
        s.push_str(",\n\"choi\": ");
        write_matrix(&mut s, choi_from_kraus(ks).matrix());
    }
    s.push('}');
    s
}

pub fn channel_to_json(ks: &KrausSet, with_choi: bool) -> String {
    let mut s = channel_body(ks, with_choi);
    s.push('\n');
    s
}

pub fn mixture_to_json(mix: &ConvexMixture) -> String {
    let mut s = String::from("{\"components\": [\n");
    for (i, (p, ks)) in mix.components().iter().enumerate() {
        if i > 0 {
            s.push_str(",\n");
        }
        let _ = write!(s, "{{\"p\": {p:.16e}, \"channel\": {}}}", channel_body(ks, false));
    }
    s.push_str("\n]}\n");
    s
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn parse_entry(v: &Value) -> Result<C64> {
    match v.as_array().map(|a| a.as_slice()) {
        Some([re, im]) => match (re.as_f64(), im.as_f64()) {
            (Some(re), Some(im)) => Ok(C64::new(re, im)),
            _ => Err(bad("matrix entry components must be numbers")),
        },
        _ => Err(bad("matrix entry must be a [re, im] pair")),
    }
}

fn parse_matrix(v: &Value) -> Result<CMat> {
    let rows = v.as_array().ok_or_else(|| bad("matrix must be a list of rows"))?;
    if rows.is_empty() {
        return Err(bad("matrix has no rows"));
    }
    let mut data = Vec::new();
    let mut width = None;
    for row in rows {
        let entries = row.as_array().ok_or_else(|| bad("matrix row must be a list"))?;
        if *width.get_or_insert(entries.len()) != entries.len() {
            return Err(bad("ragged matrix"));
        }
        for e in entries {
            data.push(parse_entry(e)?);
        }
    }
    CMat::from_vec(rows.len(), width.unwrap_or(0), data)
}

fn parse_dim(obj: &Value, key: &str) -> Result<usize> {
    obj.get(key)
        .and_then(Value::as_u64)
        .map(|v| v as usize)
        .filter(|&v| v <= 16)
        .ok_or_else(|| bad(format!("missing or invalid \"{key}\"")))
}

fn channel_from_value(obj: &Value) -> Result<KrausSet> {
    let m = parse_dim(obj, "m")?;
    let n = parse_dim(obj, "n")?;
    if let Some(list) = obj.get("kraus") {
        let ops = list
            .as_array()
            .ok_or_else(|| bad("\"kraus\" must be a list of matrices"))?
            .iter()
            .map(parse_matrix)
            .collect::<Result<Vec<_>>>()?;
        KrausSet::new(m, n, ops)
    } else if let Some(j) = obj.get("choi") {
        let choi = ChoiMatrix::new(m, n, parse_matrix(j)?)?;
        let ks = kraus_from_choi(&choi, RANK_TOLERANCE)?;
        KrausSet::new(m, n, ks.ops().to_vec())
    } else {
        Err(bad("neither \"kraus\" nor \"choi\" present"))
    }
}

pub fn channel_from_json(text: &str) -> Result<KrausSet> {
    let v: Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    channel_from_value(&v)
}

/// Reads a mixture file; a plain channel file is read as a single component.
pub fn mixture_from_json(text: &str) -> Result<ConvexMixture> {
    let v: Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    let Some(list) = v.get("components") else {
        return ConvexMixture::new(vec![(1.0, channel_from_value(&v)?)]);
    };
    let comps = list
        .as_array()
        .ok_or_else(|| bad("\"components\" must be a list"))?
        .iter()
        .map(|c| {
            let p = c.get("p").and_then(Value::as_f64).ok_or_else(|| bad("component without \"p\""))?;
            let ch = c.get("channel").ok_or_else(|| bad("component without \"channel\""))?;
            Ok((p, channel_from_value(ch)?))
        })
        .collect::<Result<Vec<_>>>()?;
    ConvexMixture::new(comps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{library, random_channel};

    #[test]
    fn round_trip_is_exact() {
        for seed in 0..5 {
            let ks = random_channel(2, 1, 3, seed).unwrap();
            let back = channel_from_json(&channel_to_json(&ks, false)).unwrap();
            assert_eq!(back, ks);
        }
    }

    #[test]
    fn choi_only_file() {
        let ad = library::amplitude_damping(0.3);
        let text = channel_to_json(&ad, true);
        let v: Value = serde_json::from_str(&text).unwrap();
        let choi_only = serde_json::json!({"m": 1, "n": 1, "choi": v["choi"]});
        let ks = channel_from_json(&choi_only.to_string()).unwrap();
        assert!(crate::channel::kraus_equivalent(&ks, &ad, 1e-12));
    }

    #[test]
    fn rejects_malformed() {
        for text in [
            "not json",
            "{\"m\": 1}",
            "{\"m\": 1, \"n\": 1, \"kraus\": [[[1, 0]]]}",
            "{\"m\": 1, \"n\": 1, \"kraus\": [[[[1, 0], [0, 0]], [[0, 0]]]]}",
            "{\"m\": 1, \"n\": 1, \"kraus\": [[[[1, 0], [0, 0]], [[0, 0], [0.5, 0]]]]}",
        ] {
            assert!(channel_from_json(text).is_err(), "{text}");
        }
    }

    #[test]
    fn mixture_round_trip() {
        let flip = KrausSet::unitary(library::pauli('X')).unwrap();
        let mix = ConvexMixture::new(vec![(0.25, library::identity(1)), (0.75, flip)]).unwrap();
        let back = mixture_from_json(&mixture_to_json(&mix)).unwrap();
        assert_eq!(back.components().len(), 2);
        assert_eq!(back.components()[1].0, 0.75);
        let single = mixture_from_json(&channel_to_json(&library::identity(1), false)).unwrap();
        assert_eq!(single.components().len(), 1);
    }
}
