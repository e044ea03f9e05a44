//! CSV emitters and parsers. Floats are written with 17 significant digits
//! so every value parses back to the identical `f64`.

use std::io::{self, BufRead, Write};

use biolage_core::pde::DensitySnapshot;
use biolage_core::{Histogram, MomentScale, MomentVector};

use crate::error::{CliError, CliResult};

pub const HISTOGRAM_HEADER: &str = "bin_left,bin_right,count,density";
pub const MOMENTS_HEADER: &str = "t,k,value,log10_flag";
pub const DENSITY_HEADER: &str = "t,b_center,density";
pub const CHI_HEADER: &str = "k,chi_k";

/// Locale-free scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn bad(what: &'static str, line: usize, detail: impl std::fmt::Display) -> CliError {
    CliError::Format {
        what,
        detail: format!("line {line}: {detail}"),
    }
}

/// Splits a CSV body into checked records of `n` fields.
fn records<R: BufRead>(
    reader: R,
    what: &'static str,
    header: &str,
    n: usize,
) -> CliResult<Vec<(usize, Vec<String>)>> {
    let mut lines = reader.lines();
    let first = lines
        .next()
        .transpose()
        .map_err(|e| bad(what, 1, e))?
        .ok_or_else(|| bad(what, 1, "empty file"))?;
    if first != header {
        return Err(bad(what, 1, format!("expected header {header:?}")));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| bad(what, i + 2, e))?;
        let fields: Vec<String> = line.split(',').map(str::to_owned).collect();
        if fields.len() != n {
            return Err(bad(
                what,
                i + 2,
                format!("{} fields, expected {n}", fields.len()),
            ));
        }
        out.push((i + 2, fields));
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(what: &'static str, line: usize, s: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse()
        .map_err(|e| bad(what, line, format!("{s:?}: {e}")))
}

/// Regular bins followed by one overflow row whose right edge is `inf`.
pub fn write_histogram<W: Write>(w: &mut W, h: &Histogram) -> io::Result<()> {
    writeln!(w, "{HISTOGRAM_HEADER}")?;
    let densities = h.densities();
    for (i, (&c, d)) in h.counts.iter().zip(densities).enumerate() {
        let (lo, hi) = h.bin_edges(i);
        writeln!(w, "{},{},{c},{}", fmt_f64(lo), fmt_f64(hi), fmt_f64(d))?;
    }
    writeln!(
        w,
        "{},{},{},{}",
        fmt_f64(h.upper()),
        fmt_f64(f64::INFINITY),
        h.overflow,
        fmt_f64(0.0)
    )
}

pub fn read_histogram<R: BufRead>(r: R) -> CliResult<Histogram> {
    const WHAT: &str = "histogram csv";
    let rows = records(r, WHAT, HISTOGRAM_HEADER, 4)?;
    let (last, body) = rows
        .split_last()
        .ok_or_else(|| bad(WHAT, 2, "missing overflow row"))?;
    let mut counts = Vec::with_capacity(body.len());
    let mut bin_width = None;
    for (line, f) in body {
        let lo: f64 = num(WHAT, *line, &f[0])?;
        let hi: f64 = num(WHAT, *line, &f[1])?;
        let w = *bin_width.get_or_insert(hi - lo);
        let expected = w * counts.len() as f64;
        if lo != expected {
            return Err(bad(
                WHAT,
                *line,
                format!("bin starts at {lo}, expected {expected}"),
            ));
        }
        counts.push(num(WHAT, *line, &f[2])?);
    }
    let (line, f) = last;
    let hi: f64 = num(WHAT, *line, &f[1])?;
    if hi != f64::INFINITY {
        return Err(bad(WHAT, *line, "last row must be the overflow bin"));
    }
    let bin_width = match bin_width {
        Some(w) => w,
        None => num(WHAT, *line, &f[0])?,
    };
    Ok(Histogram {
        bin_width,
        counts,
        overflow: num(WHAT, *line, &f[2])?,
    })
}

/// Long format, one row per `(t, k)`. Log-stored components carry
/// `log10 |E_k|` with flag 1.
pub fn write_moments<W: Write>(w: &mut W, points: &[MomentVector]) -> io::Result<()> {
    writeln!(w, "{MOMENTS_HEADER}")?;
    for m in points {
        for (k, (v, s)) in m.values.iter().zip(&m.scales).enumerate() {
            let flag = u8::from(*s == MomentScale::Log10);
            writeln!(w, "{},{k},{},{flag}", fmt_f64(m.t), fmt_f64(*v))?;
        }
    }
    Ok(())
}

pub fn read_moments<R: BufRead>(r: R) -> CliResult<Vec<MomentVector>> {
    const WHAT: &str = "moments csv";
    let mut out: Vec<MomentVector> = Vec::new();
    for (line, f) in records(r, WHAT, MOMENTS_HEADER, 4)? {
        let t: f64 = num(WHAT, line, &f[0])?;
        let k: usize = num(WHAT, line, &f[1])?;
        let v: f64 = num(WHAT, line, &f[2])?;
        let scale = match f[3].as_str() {
            "0" => MomentScale::Linear,
            "1" => MomentScale::Log10,
            other => return Err(bad(WHAT, line, format!("log10_flag {other:?}"))),
        };
        if k == 0 {
            out.push(MomentVector {
                t,
                values: Vec::new(),
                scales: Vec::new(),
            });
        }
        let cur = out
            .last_mut()
            .filter(|m| m.t.to_bits() == t.to_bits() && m.values.len() == k)
            .ok_or_else(|| bad(WHAT, line, format!("unexpected order k = {k} at t = {t}")))?;
        cur.values.push(v);
        cur.scales.push(scale);
    }
    Ok(out)
}

pub fn write_density<W: Write>(w: &mut W, snapshots: &[DensitySnapshot]) -> io::Result<()> {
    writeln!(w, "{DENSITY_HEADER}")?;
    for s in snapshots {
        let t = fmt_f64(s.t);
        for (b, u) in s.b_center.iter().zip(&s.density) {
            writeln!(w, "{t},{},{}", fmt_f64(*b), fmt_f64(*u))?;
        }
    }
    Ok(())
}

pub fn read_density<R: BufRead>(r: R) -> CliResult<Vec<DensitySnapshot>> {
    const WHAT: &str = "density csv";
    let mut out: Vec<DensitySnapshot> = Vec::new();
    for (line, f) in records(r, WHAT, DENSITY_HEADER, 3)? {
        let t: f64 = num(WHAT, line, &f[0])?;
        let b: f64 = num(WHAT, line, &f[1])?;
        let u: f64 = num(WHAT, line, &f[2])?;
        match out.last_mut() {
            Some(s) if s.t.to_bits() == t.to_bits() => {
                s.b_center.push(b);
                s.density.push(u);
            }
            _ => out.push(DensitySnapshot {
                t,
                b_center: vec![b],
                density: vec![u],
            }),
        }
    }
    Ok(out)
}

pub fn write_chi<W: Write>(w: &mut W, chi: &[f64]) -> io::Result<()> {
    writeln!(w, "{CHI_HEADER}")?;
    for (k, c) in chi.iter().enumerate() {
        writeln!(w, "{k},{}", fmt_f64(*c))?;
    }
    Ok(())
}

pub fn read_chi<R: BufRead>(r: R) -> CliResult<Vec<f64>> {
    const WHAT: &str = "chi csv";
    let mut out = Vec::new();
    for (line, f) in records(r, WHAT, CHI_HEADER, 2)? {
        let k: usize = num(WHAT, line, &f[0])?;
        if k != out.len() {
            return Err(bad(WHAT, line, format!("k = {k} out of sequence")));
        }
        out.push(num(WHAT, line, &f[1])?);
    }
    Ok(out)
}
