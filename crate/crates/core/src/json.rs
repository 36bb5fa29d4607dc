//! JSON output with floats pinned to 17 significant digits, so identical
//! results always serialize to identical bytes.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::Result;

/// Pretty-printing formatter that writes every finite float as
/// `d.dddddddddddddddde±x` and non-finite floats as `null`.
pub struct PinnedFloats<'a>(PrettyFormatter<'a>);

impl Default for PinnedFloats<'_> {
    fn default() -> Self {
        PinnedFloats(PrettyFormatter::with_indent(b"  "))
    }
}

fn write_pinned<W: ?Sized + io::Write>(writer: &mut W, value: f64) -> io::Result<()> {
    if value.is_finite() {
        write!(writer, "{value:.16e}")
    } else {
        writer.write_all(b"null")
    }
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.0.$name(writer $(, $arg)*)
            }
        )*
    };
}

impl Formatter for PinnedFloats<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write_pinned(writer, value)
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write_pinned(writer, value as f64)
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }
}

/// Serializes `value` as pretty JSON with pinned floats and a trailing newline.
pub fn to_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, PinnedFloats::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Single-line variant of [`to_string`].
pub fn to_compact_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    struct Compact;
    impl Formatter for Compact {
        fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
            write_pinned(writer, value)
        }
    }
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Compact);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        let text = to_compact_string(&[0.1, -2.0, 1e-300, f64::NAN]).unwrap();
        assert_eq!(text, "[1.0000000000000001e-1,-2.0000000000000000e0,1.0000000000000000e-300,null]");
        let back: Vec<Option<f64>> = serde_json::from_str(&text).unwrap();
        assert_eq!(back[0], Some(0.1));
        assert_eq!(back[2], Some(1e-300));
    }

    #[test]
    fn pretty_output_parses() {
        #[derive(Serialize)]
        struct S {
            a: f64,
            b: Vec<u32>,
        }
        let text = to_string(&S { a: 0.5, b: vec![1, 2] }).unwrap();
        assert!(text.ends_with("}\n"));
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["a"], 0.5);
    }
}
