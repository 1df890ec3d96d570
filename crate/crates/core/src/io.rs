//! CSV input and output.
//!
//! Input files need a header row. Regression files carry columns
//! `x1..xp,y`, multi-response files `x1..xp,y1..yq`, GGM files `x1..xp`.
//! Numbers are written with 17 significant digits so they re-parse exactly.

use std::io::{Read, Write};

use nalgebra::DVector;
use thiserror::Error;

use crate::linalg::Matrix;
use crate::model::Dataset;

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: u64,
    pub message: String,
}

impl ParseError {
    fn new(line: u64, message: impl Into<String>) -> Self {
        Self { line, message: message.into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    Regression,
    MultiResponse,
    Ggm,
}

/// 17 significant digits, scientific notation.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn classify_header(names: &[String], layout: Layout) -> Result<(usize, usize), ParseError> {
    let is_x = |s: &str| s.starts_with('x') && s[1..].parse::<usize>().is_ok();
    let is_y = |s: &str| s == "y" || (s.starts_with('y') && s[1..].parse::<usize>().is_ok());
    let p = names.iter().take_while(|s| is_x(s)).count();
    let q = names.len() - p;
    if p == 0 {
        return Err(ParseError::new(1, "header must start with covariate columns x1..xp"));
    }
    if names[p..].iter().any(|s| !is_y(s)) {
        return Err(ParseError::new(1, format!("unexpected header columns {:?}", &names[p..])));
    }
    match layout {
        Layout::Ggm if q != 0 => Err(ParseError::new(1, "GGM input takes only x columns")),
        Layout::Regression if q != 1 || names[p] != "y" => Err(ParseError::new(1, "regression input needs a single `y` column")),
        Layout::MultiResponse if q == 0 => Err(ParseError::new(1, "multi-response input needs y1..yq columns")),
        _ => Ok((p, q)),
    }
}

/// Parses a dataset. Errors carry the 1-based line number.
pub fn read_dataset<R: Read>(reader: R, layout: Layout) -> Result<Dataset, ParseError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| ParseError::new(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let (p, q) = classify_header(&header, layout)?;
    let width = p + q;

    let mut values: Vec<f64> = Vec::new();
    let mut rows = 0usize;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |pos| pos.line());
            ParseError::new(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |pos| pos.line());
        if rec.len() != width {
            return Err(ParseError::new(line, format!("expected {width} fields, found {}", rec.len())));
        }
        for field in rec.iter() {
            let v: f64 = field.parse().map_err(|_| ParseError::new(line, format!("cannot parse `{field}` as a number")))?;
            if !v.is_finite() {
                return Err(ParseError::new(line, format!("non-finite value `{field}`")));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(ParseError::new(2, "no data rows"));
    }
    let all = Matrix::from_row_slice(rows, width, &values);
    let x = all.columns(0, p).into_owned();
    let to_err = |e: crate::Error| ParseError::new(0, e.to_string());
    match layout {
        Layout::Regression => Dataset::regression(x, DVector::from_column_slice(all.column(p).as_slice())).map_err(to_err),
        Layout::MultiResponse => Dataset::multi_response(x, all.columns(p, q).into_owned()).map_err(to_err),
        Layout::Ggm => Dataset::ggm(x).map_err(to_err),
    }
}

/// Writes a matrix with header `c1..cm`.
pub fn write_matrix<W: Write>(m: &Matrix, mut w: W) -> std::io::Result<()> {
    let header: Vec<String> = (1..=m.ncols()).map(|j| format!("c{j}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for row in m.row_iter() {
        let fields: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Reads a matrix written by [`write_matrix`].
pub fn read_matrix<R: Read>(reader: R) -> Result<Matrix, ParseError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let cols = rdr.headers().map_err(|e| ParseError::new(1, e.to_string()))?.len();
    let mut values = Vec::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| ParseError::new(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        for f in rec.iter() {
            values.push(f.parse::<f64>().map_err(|_| ParseError::new(line, format!("bad number `{f}`")))?);
        }
        rows += 1;
    }
    Ok(Matrix::from_row_slice(rows, cols, &values))
}

/// Writes a regression or multi-response dataset in the input layout.
pub fn write_dataset<W: Write>(data: &Dataset, mut w: W) -> std::io::Result<()> {
    let x = data.design();
    let mut header: Vec<String> = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
    match data {
        Dataset::Regression { .. } => header.push("y".into()),
        Dataset::MultiResponse { y, .. } => header.extend((1..=y.ncols()).map(|j| format!("y{j}"))),
        Dataset::Ggm { .. } => {}
    }
    writeln!(w, "{}", header.join(","))?;
    for i in 0..x.nrows() {
        let mut fields: Vec<String> = x.row(i).iter().map(|v| fmt_f64(*v)).collect();
        match data {
            Dataset::Regression { y, .. } => fields.push(fmt_f64(y[i])),
            Dataset::MultiResponse { y, .. } => fields.extend(y.row(i).iter().map(|v| fmt_f64(*v))),
            Dataset::Ggm { .. } => {}
        }
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_regression() {
        let src = "x1,x2,y\n1,2,3\n4,5,6\n";
        let d = read_dataset(src.as_bytes(), Layout::Regression).unwrap();
        assert_eq!((d.n(), d.p()), (2, 2));
        match d {
            Dataset::Regression { y, .. } => assert_eq!(y.as_slice(), &[3.0, 6.0]),
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn ragged_row_reports_line() {
        let src = "x1,x2,y\n1,2,3\n4,5\n";
        let err = read_dataset(src.as_bytes(), Layout::Regression).unwrap_err();
        assert_eq!(err.line, 3);
    }

    #[test]
    fn bad_number_reports_line() {
        let src = "x1\n1\n2\nabc\n";
        let err = read_dataset(src.as_bytes(), Layout::Ggm).unwrap_err();
        assert_eq!(err.line, 4);
    }

    #[test]
    fn header_checks() {
        assert!(read_dataset("a,b\n1,2\n".as_bytes(), Layout::Ggm).is_err());
        assert!(read_dataset("x1,y\n1,2\n".as_bytes(), Layout::Ggm).is_err());
        assert!(read_dataset("x1,y1,y2\n1,2,3\n".as_bytes(), Layout::MultiResponse).is_ok());
        assert!(read_dataset("x1,y\n".as_bytes(), Layout::Regression).is_err());
    }

    proptest! {
        #[test]
        fn matrix_round_trips_exactly(vals in prop::collection::vec(-1e6f64..1e6, 6)) {
            let m = Matrix::from_row_slice(2, 3, &vals);
            let mut buf = Vec::new();
            write_matrix(&m, &mut buf).unwrap();
            prop_assert_eq!(read_matrix(buf.as_slice()).unwrap(), m);
        }
    }
}
