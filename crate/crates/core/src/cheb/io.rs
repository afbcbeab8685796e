//! Plain-text tensor format.
//!
//! ```text
//! chebyshev-tensor 1
//! dims <d>
//! <lo_0> <hi_0> <count_0>
//! ...
//! <lo_{d-1}> <hi_{d-1}> <count_{d-1}>
//! values <prod count_i>
//! <v_0>
//! ...
//! ```
//!
//! Values are row-major and written with the shortest decimal that
//! round-trips, so reading a written tensor reproduces it bit for bit.

use std::io::{BufRead, Write};

use super::{ChebError, ChebyshevGrid, ChebyshevTensor, HyperRectangle, Interval};

const MAGIC: &str = "chebyshev-tensor 1";

pub fn write_tensor<W: Write>(tensor: &ChebyshevTensor, mut out: W) -> std::io::Result<()> {
    let grid = tensor.grid();
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "dims {}", grid.dims())?;
    for (iv, count) in grid.domain().intervals().iter().zip(grid.counts()) {
        writeln!(out, "{:?} {:?} {}", iv.lo(), iv.hi(), count)?;
    }
    writeln!(out, "values {}", tensor.values().len())?;
    for v in tensor.values() {
        writeln!(out, "{v:?}")?;
    }
    Ok(())
}

pub fn read_tensor<R: BufRead>(input: R) -> Result<ChebyshevTensor, ChebError> {
    let mut lines = input
        .lines()
        .map(|l| l.map_err(|e| ChebError::Parse(e.to_string())))
        .filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()));
    let mut next = |what: &str| {
        lines
            .next()
            .unwrap_or_else(|| Err(ChebError::Parse(format!("missing {what}"))))
    };

    if next("header")?.trim() != MAGIC {
        return Err(ChebError::Parse("bad header".into()));
    }
    let dims: usize = keyed(&next("dims line")?, "dims")?;
    let mut intervals = Vec::with_capacity(dims);
    let mut counts = Vec::with_capacity(dims);
    for d in 0..dims {
        let line = next("interval line")?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(ChebError::Parse(format!("interval line {d}: {line:?}")));
        }
        intervals.push(Interval::new(num(parts[0])?, num(parts[1])?)?);
        counts.push(
            parts[2]
                .parse()
                .map_err(|_| ChebError::Parse(format!("bad count {:?}", parts[2])))?,
        );
    }
    let total: usize = keyed(&next("values line")?, "values")?;
    let values = (0..total)
        .map(|_| next("value").and_then(|l| num(l.trim())))
        .collect::<Result<Vec<_>, _>>()?;
    let grid = ChebyshevGrid::new(HyperRectangle::new(intervals)?, &counts)?;
    ChebyshevTensor::from_values(grid, values)
}

fn keyed(line: &str, key: &str) -> Result<usize, ChebError> {
    let mut it = line.split_whitespace();
    match (it.next(), it.next(), it.next()) {
        (Some(k), Some(v), None) if k == key => v
            .parse()
            .map_err(|_| ChebError::Parse(format!("bad {key} value {v:?}"))),
        _ => Err(ChebError::Parse(format!("expected `{key} <n>`, got {line:?}"))),
    }
}

fn num(s: &str) -> Result<f64, ChebError> {
    s.parse()
        .map_err(|_| ChebError::Parse(format!("bad number {s:?}")))
}
