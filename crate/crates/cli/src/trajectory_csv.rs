//! Trajectory CSV: `t`, the nine entries of `A(t)` row by row, and the tip.

use std::io::{Read, Write};

use rotwave::{Error, Result};

pub const HEADER: [&str; 13] = [
    "t", "a11", "a12", "a13", "a21", "a22", "a23", "a31", "a32", "a33", "tipx", "tipy", "tipz",
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub a: [[f64; 3]; 3],
    pub tip: [f64; 3],
}

impl TrajectoryRow {
    /// `‖AᵀA − I‖_F`.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut sq = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| self.a[k][i] * self.a[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                sq += (dot - target).powi(2);
            }
        }
        sq.sqrt()
    }

    pub fn tip_norm(&self) -> f64 {
        self.tip.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// 17 significant digits in scientific notation, independent of locale.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_rows<W: Write>(w: W, rows: &[TrajectoryRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(HEADER).map_err(csv_err)?;
    for row in rows {
        let fields = std::iter::once(row.t)
            .chain(row.a.iter().flatten().copied())
            .chain(row.tip)
            .map(format_real);
        out.write_record(fields).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a file produced by [`write_rows`]; the header must match exactly.
pub fn read_rows<R: Read>(r: R) -> Result<Vec<TrajectoryRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rdr.headers().map_err(csv_err)?;
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(Error::Config(format!(
            "trajectory header must be {}, got {}",
            HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let mut v = [0.0; 13];
        for (slot, field) in v.iter_mut().zip(record.iter()) {
            *slot = field
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| {
                    Error::Config(format!("row {}: malformed number {field:?}", line + 1))
                })?;
        }
        rows.push(TrajectoryRow {
            t: v[0],
            a: [[v[1], v[2], v[3]], [v[4], v[5], v[6]], [v[7], v[8], v[9]]],
            tip: [v[10], v[11], v[12]],
        });
    }
    Ok(rows)
}

fn csv_err(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        }
    } else {
        Error::Config(format!("trajectory csv: {e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64) -> TrajectoryRow {
        let (s, c) = t.sin_cos();
        TrajectoryRow {
            t,
            a: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
            tip: [3.0 * c, 3.0 * s, 0.0],
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let rows: Vec<_> = (0..7).map(|i| row(0.1 * i as f64 + 1e-17)).collect();
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        let back = read_rows(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        for r in &back {
            assert!(r.orthogonality_defect() < 1e-15);
            assert!((r.tip_norm() - 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn fixed_formatting() {
        let mut buf = Vec::new();
        write_rows(&mut buf, &[row(0.0)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), HEADER.join(","));
        let first = lines.next().unwrap();
        assert!(
            first.starts_with("0.0000000000000000e0,1.0000000000000000e0,"),
            "{first}"
        );
        assert_eq!(format_real(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn malformed_inputs() {
        assert!(read_rows("t,a11\n0,1\n".as_bytes()).is_err());
        let mut bad = HEADER.join(",");
        bad.push_str("\n0,1,0,0,0,1,0,0,0,1,3,0,x\n");
        assert_eq!(read_rows(bad.as_bytes()).unwrap_err().exit_code(), 2);
        let mut short = HEADER.join(",");
        short.push_str("\n0,1\n");
        assert!(read_rows(short.as_bytes()).is_err());
    }
}
