//! Report and trajectory serialization.
//!
//! Every floating-point value is written with 17 significant digits in
//! scientific notation, so equal inputs give byte-identical files and the
//! text round-trips to the same `f64`.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use qsymplectic::Trajectory;

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Pretty JSON with fixed-width float output. Non-finite values become
/// `null`, as JSON has no representation for them.
pub struct ReportFormatter<'a>(PrettyFormatter<'a>);

impl Default for ReportFormatter<'_> {
    fn default() -> Self {
        Self(PrettyFormatter::with_indent(b"  "))
    }
}

impl Formatter for ReportFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            writer.write_all(format_float(value).as_bytes())
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, ReportFormatter::default());
    value.serialize(&mut ser).expect("report types serialize infallibly");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

pub fn csv_header(dim: usize) -> String {
    let mut cols = vec!["t".to_string()];
    for k in 0..dim {
        cols.push(format!("re_{k}"));
        cols.push(format!("im_{k}"));
    }
    cols.push("norm".into());
    cols.push("energy".into());
    cols.join(",")
}

/// One row per stored state: time, amplitudes, norm and energy.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let dim = traj.states.first().map_or(0, |s| s.dim());
    let mut out = csv_header(dim);
    out.push('\n');
    for ((t, state), diag) in traj.times.iter().zip(&traj.states).zip(&traj.diagnostics) {
        let mut row = vec![format_float(*t)];
        for z in state.amplitudes().iter() {
            row.push(format_float(z.re));
            row.push(format_float(z.im));
        }
        row.push(format_float(diag.norm));
        row.push(format_float(diag.energy));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
