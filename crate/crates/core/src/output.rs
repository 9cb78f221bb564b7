//! JSON and CSV writers. Every float is printed with 17 significant digits so
//! that outputs round-trip exactly and are bit-reproducible.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::ldforce::{f_ld_at, four_force};
use crate::trajectory::Trajectory;

/// Pretty JSON with `{:.16e}` floats; non-finite values become `null`.
struct ExactFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for ExactFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
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

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(|e| Error::Io(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)?)?;
    Ok(())
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Comma-separated table with a header row and LF line endings.
pub fn csv_string<I: IntoIterator<Item = Vec<f64>>>(header: &[&str], rows: I) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv<I: IntoIterator<Item = Vec<f64>>>(path: &Path, header: &[&str], rows: I) -> Result<()> {
    std::fs::write(path, csv_string(header, rows))?;
    Ok(())
}

pub const TRAJECTORY_HEADER: [&str; 9] = ["t", "z", "zdot", "zddot", "zdddot", "gamma", "f_ld", "F_t", "F_z"];

/// Trajectory samples with the LD force and its four-force appended.
pub fn trajectory_rows(traj: &Trajectory) -> Vec<Vec<f64>> {
    let m = traj.particle.m;
    let alpha = traj.particle.alpha_c;
    traj.samples()
        .iter()
        .map(|p| {
            let f = f_ld_at(p, alpha, m, traj.profile.local(p.z).d2v).f_ld;
            let (ft, fz) = four_force(p, f);
            vec![p.t, p.z, p.zdot, p.zddot, p.zdddot, p.gamma, f, ft, fz]
        })
        .collect()
}
