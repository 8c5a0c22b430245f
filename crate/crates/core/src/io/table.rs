//! CSV tables with five significant digits.

use std::io::Write;

use serde::Serialize;

use crate::norms::ErrorSeries;
use crate::timestepper::MonitorRecord;
use crate::{Error, Result};

/// Scientific notation with five significant digits and a signed two-digit
/// exponent, e.g. `1.2346e-03`.
pub fn format_sci(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.4e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn opt_sci(v: Option<f64>) -> String {
    v.map(format_sci).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidArgument(format!("csv: {other:?}")),
    }
}

/// Convergence table: resolution, displacement error, CO, seconds, stress
/// error, CO, seconds. The first row has empty order cells.
pub fn emit_convergence_table<W: Write>(series: &ErrorSeries, out: W) -> Result<()> {
    if series.entries.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "a convergence table needs at least 2 entries, got {}",
            series.entries.len()
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    let p = &series.parameter;
    w.write_record([
        p.as_str(),
        "displacement_error",
        "co_displacement",
        "cpu_displacement_s",
        "stress_error",
        "co_stress",
        "cpu_stress_s",
    ])
    .map_err(csv_err)?;
    let d_orders = series.displacement_orders();
    let s_orders = series.stress_orders();
    for (i, e) in series.entries.iter().enumerate() {
        w.write_record([
            format_sci(e.resolution),
            format_sci(e.displacement_error),
            opt_sci(d_orders[i]),
            format_sci(e.displacement_seconds),
            format_sci(e.stress_error),
            opt_sci(s_orders[i]),
            format_sci(e.stress_seconds),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Max-in-time norms of one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSummary {
    pub name: String,
    pub h: f64,
    pub displacement: f64,
    /// `max_n ‖κ_{h,ij}‖` arranged as a symmetric matrix.
    pub stress: [[f64; 3]; 3],
}

impl ScenarioSummary {
    pub fn is_symmetric(&self) -> bool {
        (0..3).all(|i| (0..3).all(|j| self.stress[i][j] == self.stress[j][i]))
    }
}

/// One-row scenario table: `h`, displacement norm, then the six stress
/// components in the order 11, 22, 33, 12, 13, 23.
pub fn emit_scenario_table<W: Write>(s: &ScenarioSummary, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "h",
        "displacement",
        "kappa_11",
        "kappa_22",
        "kappa_33",
        "kappa_12",
        "kappa_13",
        "kappa_23",
    ])
    .map_err(csv_err)?;
    let k = &s.stress;
    let row = [s.h, s.displacement, k[0][0], k[1][1], k[2][2], k[0][1], k[0][2], k[1][2]];
    w.write_record(row.map(format_sci)).map_err(csv_err)?;
    w.flush()?;
    Ok(())
}

/// The symmetric stress-norm matrix as three aligned text rows.
pub fn format_stress_matrix(m: &[[f64; 3]; 3]) -> String {
    let mut s = String::new();
    for row in m {
        let cells: Vec<String> = row.iter().map(|v| format!("{:>11}", format_sci(*v))).collect();
        s.push_str(&cells.join(" "));
        s.push('\n');
    }
    s
}

/// Per-step monitor log; the energy cell is empty where undefined.
pub fn emit_monitor_csv<W: Write>(records: &[MonitorRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "t", "l2_norm", "a_norm", "energy", "cg_iterations", "residual"])
        .map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.n.to_string(),
            format_sci(r.t),
            format_sci(r.l2_norm),
            format_sci(r.a_norm),
            opt_sci(r.energy),
            r.cg_iterations.to_string(),
            format_sci(r.residual),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::ErrorEntry;

    fn series(n: usize) -> ErrorSeries {
        ErrorSeries {
            parameter: "h".into(),
            reference: "h=3^-3".into(),
            factor: 3.0,
            entries: (0..n)
                .map(|i| ErrorEntry {
                    resolution: 3f64.powi(-(i as i32) - 1),
                    displacement_error: 3f64.powi(-3 * i as i32) * 0.1,
                    displacement_seconds: 1.0,
                    stress_error: 3f64.powi(-2 * i as i32) * 0.2,
                    stress_seconds: 2.0,
                })
                .collect(),
        }
    }

    fn table(s: &ErrorSeries) -> String {
        let mut buf = Vec::new();
        emit_convergence_table(s, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn sci_format() {
        assert_eq!(format_sci(0.0012345678), "1.2346e-03");
        assert_eq!(format_sci(0.0), "0.0000e+00");
        assert_eq!(format_sci(-123456.0), "-1.2346e+05");
        assert_eq!(format_sci(f64::NAN), "NaN");
    }

    #[test]
    fn four_rows_first_order_empty() {
        let t = table(&series(4));
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 5);
        for l in &lines {
            assert_eq!(l.split(',').count(), 7);
        }
        let first: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(first[2], "");
        assert_eq!(first[5], "");
        let second: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(second[2], "3.0000e+00");
        assert_eq!(second[5], "2.0000e+00");
    }

    #[test]
    fn single_pair_and_determinism() {
        let s = series(2);
        let t = table(&s);
        let orders: Vec<&str> = t.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
        assert_eq!(orders.iter().filter(|o| !o.is_empty()).count(), 1);
        assert_eq!(t, table(&s));
        let mut buf = Vec::new();
        assert!(emit_convergence_table(&series(1), &mut buf).is_err());
    }

    #[test]
    fn scenario_row_has_eight_columns() {
        let s = ScenarioSummary {
            name: "x".into(),
            h: 1.0 / 3.0,
            displacement: 0.0,
            stress: [[0.0; 3]; 3],
        };
        let mut buf = Vec::new();
        emit_scenario_table(&s, &mut buf).unwrap();
        let t = String::from_utf8(buf).unwrap();
        assert_eq!(t.lines().count(), 2);
        assert!(t.lines().all(|l| l.split(',').count() == 8));
        assert!(t.lines().nth(1).unwrap().ends_with("0.0000e+00"));
        assert!(s.is_symmetric());
        assert_eq!(format_stress_matrix(&s.stress).lines().count(), 3);
    }

    #[test]
    fn monitor_energy_blank_at_start() {
        let r = MonitorRecord {
            n: 0,
            t: 0.0,
            l2_norm: 1.0,
            a_norm: 2.0,
            energy: None,
            cg_iterations: 0,
            residual: 0.0,
        };
        let mut buf = Vec::new();
        emit_monitor_csv(&[r], &mut buf).unwrap();
        let t = String::from_utf8(buf).unwrap();
        assert_eq!(t.lines().nth(1).unwrap(), "0,0.0000e+00,1.0000e+00,2.0000e+00,,0,0.0000e+00");
    }
}
