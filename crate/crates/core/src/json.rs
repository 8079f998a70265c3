//! JSON output with every double written to 17 significant digits, so a
//! report parses back to the exact bits it was written from.

use std::io;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter};

use crate::state::PureState3Q;
use crate::{Error, Result};

/// Compact JSON with `{:.16e}` floats; non-finite values become `null`.
#[derive(Debug, Clone, Copy, Default)]
pub struct FullPrecision;

impl Formatter for FullPrecision {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            CompactFormatter.write_null(writer)
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_writer<W: io::Write, T: Serialize + ?Sized>(writer: W, value: &T) -> Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(writer, FullPrecision);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::InvalidParameter(format!("serialization failed: {e}")))
}

pub fn to_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    to_writer(&mut buf, value)?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

#[derive(Deserialize)]
struct StateFile {
    amps: [Complex64; 8],
}

/// Parses `{"amps": [[re, im] × 8]}` and checks the normalization at
/// `eps_norm`.
pub fn parse_state_with(text: &str, eps_norm: f64) -> Result<PureState3Q> {
    let file: StateFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    PureState3Q::with_tolerance(file.amps, eps_norm)
}

pub fn parse_state(text: &str) -> Result<PureState3Q> {
    parse_state_with(text, crate::Tolerances::default().norm)
}
