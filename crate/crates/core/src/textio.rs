//! Plain-text formats.
//!
//! - Operators: one line per matrix row, each entry written as a `re im` pair,
//!   entries separated by whitespace.
//! - States: one line per amplitude, `re im`.
//! - Fields: two columns `t value`.
//!
//! Blank lines and lines starting with `#` are ignored on input.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::error::{KrotovError, Result};
use crate::operator::DenseOperator;
use crate::state::StateVector;
use crate::C64;

fn data_lines<R: BufRead>(reader: R) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    reader.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| match l {
        Ok(s) => {
            let t = s.trim();
            !t.is_empty() && !t.starts_with('#')
        }
        Err(_) => true,
    })
}

fn parse_floats(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| tok.parse::<f64>().map_err(|e| KrotovError::Parse { line: lineno, msg: format!("`{tok}`: {e}") }))
        .collect()
}

pub fn write_operator<W: Write>(mut w: W, op: &DenseOperator) -> Result<()> {
    let m = op.matrix();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:e} {:e}", m[(i, j)].re, m[(i, j)].im)).collect();
        writeln!(w, "{}", row.join("  "))?;
    }
    Ok(())
}

pub fn read_operator<R: BufRead>(reader: R) -> Result<DenseOperator> {
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for (lineno, line) in data_lines(reader) {
        let nums = parse_floats(&line?, lineno)?;
        if nums.len() % 2 != 0 {
            return Err(KrotovError::Parse { line: lineno, msg: "odd number of values in a complex row".into() });
        }
        rows.push(nums.chunks(2).map(|c| C64::new(c[0], c[1])).collect());
    }
    let n = rows.len();
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(KrotovError::Parse { line: i + 1, msg: format!("expected {n} complex entries per row, found {}", r.len()) });
    }
    let flat: Vec<C64> = rows.into_iter().flatten().collect();
    DenseOperator::new(DMatrix::from_row_slice(n, n, &flat))
}

pub fn write_state<W: Write>(mut w: W, state: &StateVector) -> Result<()> {
    for z in state.iter() {
        writeln!(w, "{:e} {:e}", z.re, z.im)?;
    }
    Ok(())
}

pub fn read_state<R: BufRead>(reader: R) -> Result<StateVector> {
    let mut amps = Vec::new();
    for (lineno, line) in data_lines(reader) {
        let nums = parse_floats(&line?, lineno)?;
        if nums.len() != 2 {
            return Err(KrotovError::Parse { line: lineno, msg: "expected `re im`".into() });
        }
        amps.push(C64::new(nums[0], nums[1]));
    }
    Ok(StateVector::from_vec(amps))
}

pub fn write_field<W: Write>(mut w: W, times: &[f64], values: &[f64]) -> Result<()> {
    for (t, v) in times.iter().zip(values) {
        writeln!(w, "{t:.16e} {v:.16e}")?;
    }
    Ok(())
}

pub fn read_field<R: BufRead>(reader: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in data_lines(reader) {
        let nums = parse_floats(&line?, lineno)?;
        if nums.len() != 2 {
            return Err(KrotovError::Parse { line: lineno, msg: "expected `t value`".into() });
        }
        times.push(nums[0]);
        values.push(nums[1]);
    }
    Ok((times, values))
}

/// Whitespace-separated numeric columns; every row must have the same width.
pub fn read_columns<R: BufRead>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    let mut width = None;
    for (lineno, line) in data_lines(reader) {
        let nums = parse_floats(&line?, lineno)?;
        match width {
            None => width = Some(nums.len()),
            Some(w) if w != nums.len() => {
                return Err(KrotovError::Parse { line: lineno, msg: format!("expected {w} columns, found {}", nums.len()) })
            }
            _ => {}
        }
        rows.push(nums);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::pauli;

    #[test]
    fn operator_roundtrip_is_exact() {
        let op = pauli(2).add_scaled(0.123456789012345, &pauli(1));
        let mut buf = Vec::new();
        write_operator(&mut buf, &op).unwrap();
        let back = read_operator(buf.as_slice()).unwrap();
        assert_eq!(back.matrix(), op.matrix());
        assert!(back.is_hermitian());
    }

    #[test]
    fn state_and_field_roundtrip() {
        let s = StateVector::from_vec(vec![C64::new(0.6, -0.1), C64::new(1.0 / 3.0, 0.7)]);
        let mut buf = Vec::new();
        write_state(&mut buf, &s).unwrap();
        assert_eq!(read_state(buf.as_slice()).unwrap(), s);

        let t = [0.05, 0.15];
        let v = [1.0 / 7.0, -2.5e-3];
        let mut buf = Vec::new();
        write_field(&mut buf, &t, &v).unwrap();
        let (t2, v2) = read_field(buf.as_slice()).unwrap();
        assert_eq!(t2, t);
        assert_eq!(v2, v);
    }

    #[test]
    fn malformed_input_reports_line() {
        let text = "# header\n1 0 0 0\n0 0 1\n";
        match read_operator(text.as_bytes()) {
            Err(KrotovError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(read_columns("1 2\n3\n".as_bytes()).is_err());
    }
}
