use super::format::fmt_g17;
use super::IoError;
use crate::analysis::{LinearModel, Optimization};
use crate::sim::{SignalSchedule, Trajectory};
use std::io::{Read, Write};

fn csv_err(e: impl std::fmt::Display) -> IoError {
    IoError::Csv(e.to_string())
}

/// Time, states, inputs and flows, one row per grid point.
pub fn write_trajectory<W: Write>(traj: &Trajectory, w: W) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(traj.header()).map_err(csv_err)?;
    for k in 0..traj.len() {
        out.write_record(traj.row(k).into_iter().map(fmt_g17)).map_err(csv_err)?;
    }
    out.flush().map_err(csv_err)
}

/// Signal table: first column time, the rest named after inputs or
/// disturbances (`u1`, `d2`, or a channel name).
pub fn read_signals<R: Read>(r: R) -> Result<SignalSchedule, IoError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header.is_empty() {
        return Err(IoError::Csv("signal file has no columns".into()));
    }
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != header.len() {
            return Err(IoError::Csv(format!("row {} has {} fields, expected {}", line + 2, rec.len(), header.len())));
        }
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| IoError::Csv(format!("row {}, column '{}': '{field}' is not a number", line + 2, header[c])))?;
            cols[c].push(v);
        }
    }
    let mut cols = cols.into_iter();
    let mut schedule = SignalSchedule::new(cols.next().unwrap_or_default())?;
    for (name, values) in header[1..].iter().zip(cols) {
        schedule = schedule.with_column(name, values)?;
    }
    Ok(schedule)
}

/// Long-format linearization: `matrix,row,col,value` for A, B and Z with
/// 1-based indices, A and B row-major.
pub fn write_linearization<W: Write>(lin: &LinearModel, w: W) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["matrix", "row", "col", "value"]).map_err(csv_err)?;
    let mut put = |m: &str, r: usize, c: usize, v: f64| {
        out.write_record([m.to_string(), (r + 1).to_string(), (c + 1).to_string(), fmt_g17(v)]).map_err(csv_err)
    };
    for (name, mat) in [("A", &lin.a), ("B", &lin.b)] {
        for r in 0..mat.nrows() {
            for c in 0..mat.ncols() {
                put(name, r, c, mat[(r, c)])?;
            }
        }
    }
    for r in 0..lin.z.len() {
        put("Z", r, 0, lin.z[r])?;
    }
    out.flush().map_err(csv_err)
}

/// Every evaluation in order, with the running best value.
pub fn write_history<W: Write>(opt: &Optimization, names: &[String], w: W) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["evaluation".to_string(), "generation".to_string()];
    header.extend(names.iter().cloned());
    header.extend(["value".to_string(), "best_so_far".to_string()]);
    out.write_record(&header).map_err(csv_err)?;
    for h in &opt.history {
        let mut rec = vec![h.evaluation.to_string(), h.generation.to_string()];
        rec.extend(h.genes.iter().map(|g| fmt_g17(*g)));
        rec.push(fmt_g17(h.value));
        rec.push(fmt_g17(h.best_so_far));
        out.write_record(&rec).map_err(csv_err)?;
    }
    out.flush().map_err(csv_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn linearization_is_row_major() {
        let lin = LinearModel {
            a: DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]),
            b: DMatrix::from_row_slice(2, 1, &[5.0, 6.0]),
            z: DVector::from_vec(vec![7.0, 8.0]),
            x0: vec![],
            u0: vec![],
            d0: vec![],
            warnings: vec![],
        };
        let mut buf = Vec::new();
        write_linearization(&lin, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "matrix,row,col,value");
        assert_eq!(lines[2], "A,1,2,2");
        assert_eq!(lines[3], "A,2,1,3");
        assert_eq!(lines[8], "Z,2,1,8");
    }

    #[test]
    fn signals_parse_and_reject_garbage() {
        let s = read_signals("time,u1\n0,1\n1,2\n".as_bytes()).unwrap();
        assert_eq!(s.times(), &[0.0, 1.0]);
        assert!(read_signals("time,u1\n0,abc\n".as_bytes()).is_err());
        assert!(read_signals("time,u1\n1,0\n0,1\n".as_bytes()).is_err());
    }
}
