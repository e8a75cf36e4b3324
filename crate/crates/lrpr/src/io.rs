//! Matrix serialization: a plain CSV form (one row per line) and a binary
//! form (little-endian u64 rows, u64 cols, then row-major f64 entries).

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mat::matrix_from_rows;

pub fn write_csv<W: Write>(out: W, m: &DMatrix<f64>) -> Result<()> {
    let mut w = BufWriter::new(out);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                write!(w, ",")?;
            }
            // `{:?}` prints the shortest representation that round-trips.
            write!(w, "{:?}", m[(i, j)])?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<DMatrix<f64>> {
    let reader = BufReader::new(input);
    let mut entries = Vec::new();
    let mut rows = 0usize;
    let mut cols = None;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad number {tok:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::Parse(format!(
                    "row {rows} has {} fields, expected {c}",
                    row.len()
                )))
            }
            _ => {}
        }
        entries.extend(row);
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Parse("empty csv".into()))?;
    matrix_from_rows(rows, cols, &entries)
}

pub fn write_bin<W: Write>(out: W, m: &DMatrix<f64>) -> Result<()> {
    let mut w = BufWriter::new(out);
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            w.write_all(&m[(i, j)].to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_bin<R: Read>(mut input: R) -> Result<DMatrix<f64>> {
    let mut header = [0u8; 16];
    input.read_exact(&mut header)?;
    let rows = u64::from_le_bytes(header[..8].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(header[8..].try_into().unwrap()) as usize;
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Parse("matrix dimensions overflow".into()))?;
    let mut buf = vec![0u8; count * 8];
    input.read_exact(&mut buf)?;
    let entries: Vec<f64> = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    matrix_from_rows(rows, cols, &entries)
}

pub fn write_csv_path(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_csv(std::fs::File::create(path)?, m)
}

pub fn write_bin_path(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_bin(std::fs::File::create(path)?, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_matrix, stream_rng};

    #[test]
    fn csv_round_trip() {
        let m = gaussian_matrix(&mut stream_rng(1, 50, 0), 4, 3);
        let mut buf = Vec::new();
        write_csv(&mut buf, &m).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn bin_round_trip_is_bit_exact() {
        let m = gaussian_matrix(&mut stream_rng(2, 50, 1), 7, 2);
        let mut buf = Vec::new();
        write_bin(&mut buf, &m).unwrap();
        let back = read_bin(buf.as_slice()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        assert!(read_csv("1.0,2.0\n3.0\n".as_bytes()).is_err());
    }
}
