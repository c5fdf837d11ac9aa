//! Canonical JSON: sorted object keys, floats at 17 significant digits.

use std::io;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};
use serde_json::Value;

/// Pretty formatter that writes every `f64` in `{:.16e}` notation.
struct FixedFloats<'a>(PrettyFormatter<'a>);

macro_rules! forward {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.0.$name(w $(, $arg)*)
            }
        )*
    };
}

impl Formatter for FixedFloats<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", format_f64(value))
    }

    forward! {
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

/// `1.0` becomes `1.0000000000000000e0`; round-trips exactly.
pub fn format_f64(value: f64) -> String {
    format!("{value:.16e}")
}

/// Serializes `value` with sorted keys and fixed float formatting.
pub fn to_canonical_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    // Value stores objects in a BTreeMap, which sorts the keys.
    let tree: Value = serde_json::to_value(value)?;
    let mut out = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut out, FixedFloats(PrettyFormatter::new()));
    tree.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

/// Single-line canonical form, used for comparisons in tests.
pub fn to_canonical_line<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let tree: Value = serde_json::to_value(value)?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, CompactFloats(CompactFormatter));
    tree.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

struct CompactFloats(CompactFormatter);

impl Formatter for CompactFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", format_f64(value))
    }
}
