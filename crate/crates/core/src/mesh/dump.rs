//! Field dump format.
//!
//! A dump is a short text header followed by the values in storage order
//! (row-major, `i` fastest):
//!
//! ```text
//! ibcv-field 1
//! kind face_x            # face_x | face_y | cell
//! grid <x0> <y0> <Lx> <Ly> <nx> <ny>
//! periodic <0|1> <0|1>
//! dims <ni> <nj>
//! time <t>
//! encoding ascii         # ascii | binary-le
//! end
//! ```
//!
//! ASCII payloads hold one value per line in shortest round-trip form;
//! binary payloads are `ni * nj` little-endian `f64`s. Both reproduce the
//! stored bits exactly.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::mesh::field::{CellField, FaceField};
use crate::mesh::grid::{Axis, GridSpec};

const MAGIC: &str = "ibcv-field 1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Ascii,
    BinaryLe,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DumpField {
    Face(FaceField),
    Cell(CellField),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dump {
    pub grid: GridSpec,
    pub time: f64,
    pub field: DumpField,
}

fn write_header(
    w: &mut impl Write,
    kind: &str,
    g: &GridSpec,
    periodic: [bool; 2],
    dims: (usize, usize),
    t: f64,
    enc: Encoding,
) -> Result<()> {
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "kind {kind}")?;
    writeln!(
        w,
        "grid {:?} {:?} {:?} {:?} {} {}",
        g.origin[0], g.origin[1], g.extents[0], g.extents[1], g.nx, g.ny
    )?;
    writeln!(w, "periodic {} {}", u8::from(periodic[0]), u8::from(periodic[1]))?;
    writeln!(w, "dims {} {}", dims.0, dims.1)?;
    writeln!(w, "time {t:?}")?;
    let e = match enc {
        Encoding::Ascii => "ascii",
        Encoding::BinaryLe => "binary-le",
    };
    writeln!(w, "encoding {e}")?;
    writeln!(w, "end")?;
    Ok(())
}

fn write_values(w: &mut impl Write, data: &[f64], enc: Encoding) -> Result<()> {
    match enc {
        Encoding::Ascii => {
            for v in data {
                writeln!(w, "{v:?}")?;
            }
        }
        Encoding::BinaryLe => {
            for v in data {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn write_face(w: &mut impl Write, g: &GridSpec, f: &FaceField, t: f64, enc: Encoding) -> Result<()> {
    f.check(g)?;
    let kind = match f.axis {
        Axis::X => "face_x",
        Axis::Y => "face_y",
    };
    write_header(w, kind, g, f.periodic, (f.ni, f.nj), t, enc)?;
    write_values(w, &f.data, enc)
}

pub fn write_cell(w: &mut impl Write, g: &GridSpec, p: &CellField, t: f64, enc: Encoding) -> Result<()> {
    if !p.conforms(g) {
        return Err(Error::Shape("cell field does not conform to grid".into()));
    }
    write_header(w, "cell", g, p.periodic, (p.nx, p.ny), t, enc)?;
    write_values(w, &p.data, enc)
}

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn header_line(r: &mut impl BufRead, key: &str) -> Result<Vec<String>> {
    let mut line = String::new();
    if r.read_line(&mut line)? == 0 {
        return Err(fmt_err(format!("unexpected end of header, wanted '{key}'")));
    }
    let mut parts = line.split_whitespace().map(str::to_owned);
    match parts.next() {
        Some(k) if k == key => Ok(parts.collect()),
        other => Err(fmt_err(format!("expected '{key}', found {other:?}"))),
    }
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| fmt_err(format!("bad {what}: '{s}'")))
}

pub fn read_dump(r: &mut impl BufRead) -> Result<Dump> {
    let mut first = String::new();
    r.read_line(&mut first)?;
    if first.trim_end() != MAGIC {
        return Err(fmt_err("missing dump magic line"));
    }
    let kind = header_line(r, "kind")?;
    let gl = header_line(r, "grid")?;
    let per = header_line(r, "periodic")?;
    let dims = header_line(r, "dims")?;
    let time = header_line(r, "time")?;
    let enc = header_line(r, "encoding")?;
    header_line(r, "end")?;
    if gl.len() != 6 || per.len() != 2 || dims.len() != 2 || time.len() != 1 || enc.len() != 1 || kind.len() != 1 {
        return Err(fmt_err("malformed header"));
    }
    let grid = GridSpec::new(
        [parse(&gl[0], "origin")?, parse(&gl[1], "origin")?],
        [parse(&gl[2], "extent")?, parse(&gl[3], "extent")?],
        parse(&gl[4], "nx")?,
        parse(&gl[5], "ny")?,
    )?;
    let periodic = [per[0] == "1", per[1] == "1"];
    let (ni, nj): (usize, usize) = (parse(&dims[0], "dims")?, parse(&dims[1], "dims")?);
    let time: f64 = parse(&time[0], "time")?;
    let n = ni * nj;
    let data = match enc[0].as_str() {
        "ascii" => {
            let mut data = Vec::with_capacity(n);
            for line in r.lines() {
                let line = line?;
                let s = line.trim();
                if !s.is_empty() {
                    data.push(parse::<f64>(s, "value")?);
                }
            }
            data
        }
        "binary-le" => {
            let mut bytes = Vec::new();
            r.read_to_end(&mut bytes)?;
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect()
        }
        other => return Err(fmt_err(format!("unknown encoding '{other}'"))),
    };
    if data.len() != n {
        return Err(fmt_err(format!("expected {n} values, found {}", data.len())));
    }
    let field = match kind[0].as_str() {
        "cell" => DumpField::Cell(CellField {
            nx: grid.nx,
            ny: grid.ny,
            periodic,
            data,
        }),
        k @ ("face_x" | "face_y") => {
            let axis = if k == "face_x" { Axis::X } else { Axis::Y };
            let f = FaceField {
                axis,
                nx: grid.nx,
                ny: grid.ny,
                periodic,
                ni,
                nj,
                data,
            };
            f.check(&grid)?;
            DumpField::Face(f)
        }
        other => return Err(fmt_err(format!("unknown field kind '{other}'"))),
    };
    if let DumpField::Cell(c) = &field {
        if !c.conforms(&grid) {
            return Err(fmt_err("cell dims disagree with grid"));
        }
    }
    Ok(Dump { grid, time, field })
}
