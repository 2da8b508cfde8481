//! JSON output with floats written to 17 significant digits, and file
//! helpers for the tree and dense formats.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

use crate::dense::DensePmf;
use crate::error::Result;
use crate::tree::DistTree;

/// `%.17g` rendering of a finite float. Non-finite values become `null`.
pub fn g17(v: f64) -> String {
    if !v.is_finite() {
        return "null".to_string();
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, v))
    } else {
        let m = trim_zeros(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", m, sign, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}

/// Wraps a serde_json formatter so every float goes through [`g17`].
pub struct G17<F>(pub F);

impl<F: Formatter> Formatter for G17<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(g17(v).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        w.write_all(g17(f64::from(v)).as_bytes())
    }

    fn write_null<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.write_null(w)
    }
    fn write_bool<W: ?Sized + Write>(&mut self, w: &mut W, v: bool) -> io::Result<()> {
        self.0.write_bool(w, v)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn end_object_key<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_key(w)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Single-line JSON.
pub fn to_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, G17(CompactFormatter));
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits utf-8"))
}

/// Indented JSON.
pub fn to_string_pretty<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, G17(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits utf-8"))
}

pub fn write_file<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn read_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_tree(path: &Path) -> Result<DistTree> {
    read_file(path)
}

pub fn read_dense(path: &Path) -> Result<DensePmf> {
    read_file(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_matches_printf() {
        assert_eq!(g17(0.125), "0.125");
        assert_eq!(g17(0.1), "0.10000000000000001");
        assert_eq!(g17(1.0), "1");
        assert_eq!(g17(1.0 / 3.0), "0.33333333333333331");
        assert_eq!(g17(2.5e-7), "2.4999999999999999e-07");
        assert_eq!(g17(1e20), "1e+20");
        assert_eq!(g17(-4.0), "-4");
        assert_eq!(g17(0.0), "0");
        assert_eq!(g17(f64::NAN), "null");
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 2.0_f64.powi(-40), 123456.789, 7e-300, 0.9999999999999999] {
            let back: f64 = serde_json::from_str(&g17(v)).unwrap();
            assert_eq!(back, v);
        }
    }

    #[test]
    fn objects_use_g17() {
        #[derive(Serialize)]
        struct R {
            a: f64,
            b: Vec<f64>,
        }
        let s = to_string(&R { a: 0.1, b: vec![0.5, 1.0] }).unwrap();
        assert_eq!(s, r#"{"a":0.10000000000000001,"b":[0.5,1]}"#);
    }
}
