//! Parameter checkpoints: one line `name [d1,d2] v1 v2 ...` per array, values
//! as hexadecimal floating-point literals so that a save/load cycle keeps
//! every bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::autodiff::Array;
use crate::error::{Error, Result};
use crate::params::ParameterStore;

/// `0x1.<13 hex digits>p<exp>` for normal numbers, `0x0.<13>p-1022` for
/// subnormals, `0x0p+0` for zero; negative values get a leading `-`.
pub fn format_hex_float(v: f64) -> String {
    let bits = v.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exponent = ((bits >> 52) & 0x7ff) as i64;
    let mantissa = bits & ((1 << 52) - 1);
    match (exponent, mantissa) {
        (0, 0) => format!("{sign}0x0p+0"),
        (0, m) => format!("{sign}0x0.{m:013x}p-1022"),
        (e, m) => format!("{sign}0x1.{m:013x}p{:+}", e - 1023),
    }
}

pub fn parse_hex_float(s: &str) -> Option<f64> {
    hexf_parse::parse_hexf64(s, false).ok()
}

fn checkpoint_err(name: &str, msg: impl Into<String>) -> Error {
    Error::Checkpoint {
        name: name.to_string(),
        msg: msg.into(),
    }
}

pub fn format_checkpoint(params: &ParameterStore) -> Result<String> {
    let mut out = String::new();
    for (name, array) in params.iter() {
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(checkpoint_err(
                name,
                "names must be nonempty and free of whitespace",
            ));
        }
        if !array.is_finite() {
            return Err(checkpoint_err(name, "non-finite value"));
        }
        let shape = array
            .shape()
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let _ = write!(out, "{name} [{shape}]");
        for v in array.data() {
            out.push(' ');
            out.push_str(&format_hex_float(*v));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_checkpoint(text: &str) -> Result<ParameterStore> {
    let mut params = ParameterStore::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let name = tokens.next().expect("line is not blank");
        let shape_token = tokens
            .next()
            .ok_or_else(|| checkpoint_err(name, format!("line {}: missing shape", i + 1)))?;
        let dims = shape_token
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| checkpoint_err(name, format!("malformed shape {shape_token:?}")))?;
        let shape = if dims.is_empty() {
            Vec::new()
        } else {
            dims.split(',')
                .map(|d| d.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| checkpoint_err(name, format!("malformed shape {shape_token:?}")))?
        };
        let data = tokens
            .map(|t| {
                parse_hex_float(t)
                    .ok_or_else(|| checkpoint_err(name, format!("malformed value {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(checkpoint_err(
                name,
                format!(
                    "shape {shape:?} needs {expected} values, found {}",
                    data.len()
                ),
            ));
        }
        if params.get(name).is_ok() {
            return Err(checkpoint_err(name, "appears twice"));
        }
        let array = Array::new(shape, data).map_err(|e| checkpoint_err(name, e.to_string()))?;
        params.insert(name, array);
    }
    Ok(params)
}

pub fn save_checkpoint(params: &ParameterStore, path: &Path) -> Result<()> {
    std::fs::write(path, format_checkpoint(params)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ParameterStore> {
    parse_checkpoint(&std::fs::read_to_string(path)?)
}
