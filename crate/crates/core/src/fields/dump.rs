//! Plain-text field dumps.
//!
//! ```text
//! FIELD <name> grid=<n> components=<c>
//! i j v_1 ... v_c
//! ```
//!
//! One line per stored node, values with 17 significant digits.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use super::field::NodalField;
use super::grid::Grid;

pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_field<G: Grid, W: Write>(out: &mut W, name: &str, f: &NodalField<G>) -> io::Result<()> {
    let grid = f.grid();
    let c = f.components();
    writeln!(out, "FIELD {name} grid={} components={c}", grid.label())?;
    let m = grid.nodes_per_side();
    let mut line = String::new();
    for j in 0..m {
        for i in 0..m {
            line.clear();
            let _ = write!(line, "{i} {j}");
            let base = grid.node_index(i, j) * c;
            for v in &f.values()[base..base + c] {
                line.push(' ');
                line.push_str(&format_value(*v));
            }
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

pub fn dump_to_string<G: Grid>(name: &str, f: &NodalField<G>) -> String {
    let mut buf = Vec::new();
    write_field(&mut buf, name, f).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// A parsed dump: name, grid label, component count and node rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump {
    pub name: String,
    pub grid: usize,
    pub components: usize,
    pub rows: Vec<(usize, usize, Vec<f64>)>,
}

fn bad(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

pub fn read_field<R: BufRead>(input: R) -> io::Result<FieldDump> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| bad("empty dump"))??;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("FIELD") {
        return Err(bad("missing FIELD header"));
    }
    let name = parts.next().ok_or_else(|| bad("missing name"))?.to_string();
    let mut kv = |key: &str| -> io::Result<usize> {
        let tok = parts.next().ok_or_else(|| bad(format!("missing {key}")))?;
        tok.strip_prefix(key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(format!("bad {key} token {tok}")))
    };
    let grid = kv("grid=")?;
    let components = kv("components=")?;
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let mut idx = || -> io::Result<usize> {
            it.next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| bad("bad node index"))
        };
        let (i, j) = (idx()?, idx()?);
        let vals: Vec<f64> = it
            .map(|t| t.parse::<f64>().map_err(|e| bad(e.to_string())))
            .collect::<io::Result<_>>()?;
        if vals.len() != components {
            return Err(bad(format!("row ({i},{j}) has {} values", vals.len())));
        }
        rows.push((i, j, vals));
    }
    Ok(FieldDump {
        name,
        grid,
        components,
        rows,
    })
}

impl FieldDump {
    /// Rebuild a nodal field on `grid`; fails if the dump does not match it.
    pub fn into_field<G: Grid>(self, grid: G) -> io::Result<NodalField<G>> {
        if self.grid != grid.label() {
            return Err(bad("grid label mismatch"));
        }
        let mut f = NodalField::zeros(grid, self.components);
        let c = self.components;
        for (i, j, v) in self.rows {
            let k = grid.node_index(i, j);
            f.values_mut()[k * c..(k + 1) * c].copy_from_slice(&v);
        }
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::grid::{CellGrid, DomainGrid};
    use proptest::prelude::*;

    #[test]
    fn header_and_rows() {
        let g = CellGrid::new(4).unwrap();
        let f = NodalField::from_fn(g, 2, |y| vec![y[0], 1.0 / 3.0]);
        let s = dump_to_string("eta", &f);
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("FIELD eta grid=4 components=2"));
        assert_eq!(
            lines.next(),
            Some("0 0 -5.0000000000000000e-1 3.3333333333333331e-1")
        );
        assert_eq!(s.lines().count(), 17);
    }

    proptest! {
        #[test]
        fn dump_roundtrip(vals in proptest::collection::vec(-1e6f64..1e6, 25)) {
            let d = DomainGrid::new(4).unwrap();
            let f = NodalField::from_values(d, 1, vals).unwrap();
            let s = dump_to_string("phi", &f);
            let back = read_field(s.as_bytes()).unwrap().into_field(d).unwrap();
            prop_assert_eq!(back, f);
        }
    }
}
