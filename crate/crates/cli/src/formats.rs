//! CSV formats: trajectories, telemetry, PWL tables and detection logs.
//!
//! Numbers are written in scientific notation with nine significant digits.
//! Lines starting with `#` are comments.

use std::io::{Read, Write};

use battbee_core::detect::DetectionRow;
use battbee_core::identify::{PwlOcv, PwlSegment};
use battbee_core::sim::TelemetrySample;
use battbee_core::{Error, Result, Trajectory};

pub const TRAJECTORY_COLUMNS: [&str; 14] = [
    "t_s",
    "v_b",
    "v_s",
    "soc",
    "voltage_V",
    "t_core_K",
    "t_surf_K",
    "q_ohm_W",
    "q_ec_W",
    "q_decomp_W",
    "q_exo_W",
    "current_A",
    "g_isc1_S",
    "g_isc2_S",
];

pub const TELEMETRY_REQUIRED: [&str; 4] = ["t_s", "current_A", "voltage_V", "temp_surf_K"];
pub const TELEMETRY_AMBIENT: &str = "temp_amb_K";
pub const PWL_COLUMNS: [&str; 5] = ["i", "lo", "hi", "a_i", "b_i"];
pub const DETECTION_COLUMNS: [&str; 7] = ["t_s", "r_V", "r_T", "j2", "jinf", "segment", "alarm"];

fn num(v: f64) -> String {
    format!("{v:.8e}")
}

fn io(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

fn write_rows<W: Write>(mut w: W, comment: Option<&str>, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    if let Some(c) = comment {
        writeln!(w, "# {c}").map_err(io)?;
    }
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for r in rows {
        writeln!(w, "{}", r.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Writes a trajectory. `generated_unix` goes into the leading comment line
/// and is the only part of the output that is not a function of the run.
pub fn write_trajectory<W: Write>(w: W, tr: &Trajectory, generated_unix: u64) -> Result<()> {
    let comment = format!("battbee trajectory dt={} t_amb={} generated_unix={generated_unix}", tr.dt, tr.t_amb);
    write_rows(
        w,
        Some(&comment),
        &TRAJECTORY_COLUMNS,
        tr.rows.iter().map(|r| {
            [
                r.t, r.v_b, r.v_s, r.soc, r.voltage, r.t_core, r.t_surf, r.q_ohm, r.q_ec, r.q_decomp, r.q_exo, r.current,
                r.g_isc1, r.g_isc2,
            ]
            .into_iter()
            .map(num)
            .collect()
        }),
    )
}

pub fn write_telemetry<W: Write>(w: W, samples: &[TelemetrySample]) -> Result<()> {
    let mut header = TELEMETRY_REQUIRED.to_vec();
    header.push(TELEMETRY_AMBIENT);
    write_rows(
        w,
        None,
        &header,
        samples
            .iter()
            .map(|s| [s.t, s.current, s.voltage, s.temp_surf, s.temp_amb].into_iter().map(num).collect()),
    )
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

struct Table {
    header: Vec<String>,
    /// `(line, cells)`.
    rows: Vec<(usize, Vec<String>)>,
}

impl Table {
    fn read<R: Read>(r: R) -> Result<Self> {
        let mut rdr = reader(r);
        let header: Vec<String> = rdr.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_error)?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            rows.push((line, rec.iter().map(str::to_string).collect()));
        }
        Ok(Table { header, rows })
    }

    fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.column(name).ok_or_else(|| Error::Parse {
            line: Some(1),
            message: format!("missing column `{name}`"),
        })
    }
}

fn parse_cell(line: usize, column: &str, cell: &str) -> Result<f64> {
    let v: f64 = cell.parse().map_err(|_| Error::Parse {
        line: Some(line),
        message: format!("`{cell}` in column `{column}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line: Some(line),
            message: format!("non-finite value in column `{column}`"),
        });
    }
    Ok(v)
}

/// Reads telemetry. `temp_amb_K` is optional and defaults to `t_amb`; times
/// must increase strictly.
pub fn read_telemetry<R: Read>(r: R, t_amb: f64) -> Result<Vec<TelemetrySample>> {
    let table = Table::read(r)?;
    let idx: Vec<usize> = TELEMETRY_REQUIRED.iter().map(|c| table.require(c)).collect::<Result<_>>()?;
    let amb = table.column(TELEMETRY_AMBIENT);
    let mut out: Vec<TelemetrySample> = Vec::with_capacity(table.rows.len());
    for (line, cells) in &table.rows {
        let get = |k: usize, name: &str| parse_cell(*line, name, &cells[k]);
        let s = TelemetrySample {
            t: get(idx[0], TELEMETRY_REQUIRED[0])?,
            current: get(idx[1], TELEMETRY_REQUIRED[1])?,
            voltage: get(idx[2], TELEMETRY_REQUIRED[2])?,
            temp_surf: get(idx[3], TELEMETRY_REQUIRED[3])?,
            temp_amb: match amb {
                Some(k) => get(k, TELEMETRY_AMBIENT)?,
                None => t_amb,
            },
        };
        if let Some(prev) = out.last() {
            if !(s.t > prev.t) {
                return Err(Error::Parse {
                    line: Some(*line),
                    message: format!("t_s = {} does not increase past {}", s.t, prev.t),
                });
            }
        }
        out.push(s);
    }
    if out.is_empty() {
        return Err(Error::Parse {
            line: None,
            message: "telemetry has no rows".into(),
        });
    }
    Ok(out)
}

pub fn write_pwl<W: Write>(w: W, pwl: &PwlOcv) -> Result<()> {
    let comment = format!("psi_min={} psi_max={}", num(pwl.psi_min), num(pwl.psi_max));
    write_rows(
        w,
        Some(&comment),
        &PWL_COLUMNS,
        pwl.segments.iter().enumerate().map(|(i, s)| {
            let mut row = vec![i.to_string()];
            row.extend([s.lo, s.hi, s.a, s.b].into_iter().map(num));
            row
        }),
    )
}

/// Reads a segment table. Slope bounds default to the envelope of the
/// segment slopes unless `slope_bounds` is given.
pub fn read_pwl<R: Read>(r: R, slope_bounds: Option<(f64, f64)>) -> Result<PwlOcv> {
    let table = Table::read(r)?;
    let idx: Vec<usize> = PWL_COLUMNS.iter().map(|c| table.require(c)).collect::<Result<_>>()?;
    let mut segments = Vec::with_capacity(table.rows.len());
    for (k, (line, cells)) in table.rows.iter().enumerate() {
        let i = parse_cell(*line, "i", &cells[idx[0]])?;
        if i != k as f64 {
            return Err(Error::Parse {
                line: Some(*line),
                message: format!("segment index {i} out of order"),
            });
        }
        let get = |j: usize| parse_cell(*line, PWL_COLUMNS[j], &cells[idx[j]]);
        segments.push(PwlSegment {
            lo: get(1)?,
            hi: get(2)?,
            a: get(3)?,
            b: get(4)?,
        });
    }
    PwlOcv::from_segments(segments, slope_bounds)
}

pub fn write_detection_log<W: Write>(w: W, rows: &[DetectionRow]) -> Result<()> {
    write_rows(
        w,
        None,
        &DETECTION_COLUMNS,
        rows.iter().map(|r| {
            let mut v: Vec<String> = [r.t, r.r_v, r.r_t, r.j2, r.jinf].into_iter().map(num).collect();
            v.push(r.segment.to_string());
            v.push(u8::from(r.alarm).to_string());
            v
        }),
    )
}

/// Reads back any numeric table written by this module, skipping comments.
pub fn read_numeric_table<R: Read>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let table = Table::read(r)?;
    let rows = table
        .rows
        .iter()
        .map(|(line, cells)| {
            cells
                .iter()
                .zip(&table.header)
                .map(|(c, h)| parse_cell(*line, h, c))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok((table.header, rows))
}
