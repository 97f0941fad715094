//! JSON reading and writing.
//!
//! All floats are written with 17 significant digits so that every file
//! round-trips to bitwise identical values when read back, and identical
//! in-memory values always produce identical bytes.

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};

/// Pretty JSON formatter that writes floats in scientific notation with 17
/// (f64) or 9 (f32) significant digits.
struct Float17Pretty<'a> {
    inner: PrettyFormatter<'a>,
}

impl Float17Pretty<'_> {
    fn new() -> Self {
        Self {
            inner: PrettyFormatter::new(),
        }
    }
}

macro_rules! forward {
    ($($name:ident),* $(,)?) => {
        $(
            fn $name<W>(&mut self, writer: &mut W) -> std::io::Result<()>
            where
                W: ?Sized + Write,
            {
                self.inner.$name(writer)
            }
        )*
    };
}

impl Formatter for Float17Pretty<'_> {
    forward!(
        begin_array,
        end_array,
        begin_object,
        end_object,
        begin_object_value
    );

    fn begin_array_value<W>(&mut self, writer: &mut W, first: bool) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.inner.end_array_value(writer)
    }

    fn begin_object_key<W>(&mut self, writer: &mut W, first: bool) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.inner.begin_object_key(writer, first)
    }

    fn end_object_value<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.inner.end_object_value(writer)
    }

    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.8e}")
    }
}

/// Serializes to a pretty JSON string with fixed-precision floats and a
/// trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Float17Pretty::new());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Numerical(format!("non-utf8 json output: {e}")))
}

/// Writes a value as JSON to a file.
pub fn write_json<T: Serialize, P: AsRef<Path>>(path: P, value: &T) -> Result<()> {
    let text = to_json_string(value)?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Reads a JSON value from a string. Non-finite floats are not valid JSON
/// and are rejected by the parser.
pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

/// Reads a JSON value from a file.
pub fn read_json<T: DeserializeOwned, P: AsRef<Path>>(path: P) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    from_json_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_bitwise() {
        let values = vec![
            0.0,
            -0.0,
            1.0,
            -2.4e-6,
            std::f64::consts::PI,
            1.7976931348623157e308,
            5e-324,
            -123456.789012345678,
        ];
        let text = to_json_string(&values).unwrap();
        let back: Vec<f64> = from_json_str(&text).unwrap();
        for (a, b) in values.iter().zip(back.iter()) {
            assert_eq!(a.to_bits(), b.to_bits(), "{a} failed to round trip");
        }
    }

    #[test]
    fn serialization_is_deterministic() {
        let v = vec![1.5, 2.25, -3.125];
        assert_eq!(to_json_string(&v).unwrap(), to_json_string(&v).unwrap());
    }

    #[test]
    fn rejects_non_finite_literals() {
        assert!(from_json_str::<Vec<f64>>("[NaN]").is_err());
        assert!(from_json_str::<Vec<f64>>("[Infinity]").is_err());
    }
}
