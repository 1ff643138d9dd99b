//! CSV and binary (`VBGF`) import/export for grid functions.
//!
//! Binary layout, all little-endian: magic `b"VBGF"`, version `u32`,
//! dimension `u32`, points per axis `u32`, box length `f64`, then `N^n`
//! pairs `(re, im)` of `f64`.

use std::io::{BufRead, Read, Write};

use num_complex::Complex64;

use super::{GridFunction, GridSpec};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"VBGF";
const VERSION: u32 = 1;

pub fn write_csv(f: &GridFunction, mut out: impl Write) -> Result<()> {
    let spec = f.spec();
    if spec.dimension() == 1 {
        writeln!(out, "x,re,im")?;
    } else {
        writeln!(out, "x,y,re,im")?;
    }
    for (i, z) in f.samples().iter().enumerate() {
        let [x, y] = spec.point(i);
        if spec.dimension() == 1 {
            writeln!(out, "{x:.16e},{:.16e},{:.16e}", z.re, z.im)?;
        } else {
            writeln!(out, "{x:.16e},{y:.16e},{:.16e},{:.16e}", z.re, z.im)?;
        }
    }
    Ok(())
}

/// Reads a CSV written by [`write_csv`]; the grid is inferred from the
/// coordinates (the first row is the box corner, the row count gives `N^n`).
pub fn read_csv(input: impl BufRead) -> Result<GridFunction> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty CSV".into()))??;
    let dim = match header.trim() {
        "x,re,im" => 1,
        "x,y,re,im" => 2,
        other => return Err(Error::Format(format!("unexpected CSV header {other:?}"))),
    };
    let mut coords = Vec::new();
    let mut samples = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 2)))?;
        if cols.len() != dim + 2 {
            return Err(Error::Format(format!(
                "line {}: expected {} columns",
                lineno + 2,
                dim + 2
            )));
        }
        coords.push(cols[0]);
        samples.push(Complex64::new(cols[dim], cols[dim + 1]));
    }
    let total = samples.len();
    let n = if dim == 1 {
        total
    } else {
        (total as f64).sqrt().round() as usize
    };
    if n < 2 || n.pow(dim as u32) != total {
        return Err(Error::Format(format!("{total} rows do not form a grid")));
    }
    let stride = if dim == 1 { 1 } else { n };
    let h = coords[stride] - coords[0];
    let box_length = h * n as f64;
    let spec = GridSpec::new(dim, box_length, n)?;
    if (coords[0] + 0.5 * box_length).abs() > 1e-9 * box_length {
        return Err(Error::Format("grid does not start at -L/2".into()));
    }
    GridFunction::new(spec, samples)
}

pub fn write_binary(f: &GridFunction, mut out: impl Write) -> Result<()> {
    let spec = f.spec();
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(spec.dimension() as u32).to_le_bytes())?;
    out.write_all(&(spec.points_per_axis() as u32).to_le_bytes())?;
    out.write_all(&spec.box_length().to_le_bytes())?;
    for z in f.samples() {
        out.write_all(&z.re.to_le_bytes())?;
        out.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary(mut input: impl Read) -> Result<GridFunction> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("missing VBGF magic".into()));
    }
    let mut u = [0u8; 4];
    let mut d = [0u8; 8];
    input.read_exact(&mut u)?;
    let version = u32::from_le_bytes(u);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported VBGF version {version}")));
    }
    input.read_exact(&mut u)?;
    let dim = u32::from_le_bytes(u) as usize;
    input.read_exact(&mut u)?;
    let n = u32::from_le_bytes(u) as usize;
    input.read_exact(&mut d)?;
    let box_length = f64::from_le_bytes(d);
    let spec = GridSpec::new(dim, box_length, n)?;
    let mut samples = Vec::with_capacity(spec.len());
    for _ in 0..spec.len() {
        input.read_exact(&mut d)?;
        let re = f64::from_le_bytes(d);
        input.read_exact(&mut d)?;
        samples.push(Complex64::new(re, f64::from_le_bytes(d)));
    }
    GridFunction::new(spec, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn binary_and_csv_round_trip(
            vals in proptest::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 32),
            l in 0.5f64..50.0,
        ) {
            let g = make_grid(1, l, 32).unwrap();
            let f = GridFunction::new(
                g,
                vals.iter().map(|&(a, b)| Complex64::new(a, b)).collect(),
            ).unwrap();
            let mut buf = Vec::new();
            write_binary(&f, &mut buf).unwrap();
            prop_assert_eq!(read_binary(&buf[..]).unwrap(), f.clone());
            let mut csv = Vec::new();
            write_csv(&f, &mut csv).unwrap();
            let back = read_csv(&csv[..]).unwrap();
            prop_assert_eq!(back.samples(), f.samples());
            prop_assert!((back.spec().box_length() - l).abs() < 1e-9 * l);
        }
    }

    #[test]
    fn rejects_bad_magic() {
        assert!(read_binary(&b"XXXX\x01\0\0\0"[..]).is_err());
    }

    #[test]
    fn two_dimensional_csv() {
        let g = make_grid(2, 2.0, 8).unwrap();
        let f = GridFunction::from_fn(g, |[x, y]| x + 10.0 * y);
        let mut csv = Vec::new();
        write_csv(&f, &mut csv).unwrap();
        let back = read_csv(&csv[..]).unwrap();
        assert_eq!(back.spec(), &g);
        assert_eq!(back.samples(), f.samples());
    }
}
