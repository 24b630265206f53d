//! CSV formats shared with the command-line tool.
//!
//! All writers emit `\n` line endings and 17 significant digits, so every
//! value read back is bit-identical to the value written.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use csv::{ReaderBuilder, Terminator, WriterBuilder};

use crate::coherence::{FringePoint, FringeScan};
use crate::error::{Error, Result};
use crate::estimate::{CandidateTone, EstimateReport, ScanCell, ScanGrid};
use crate::schedule::PulseSchedule;

pub const SCHEDULE_HEADER: [&str; 2] = ["index", "time_s"];
pub const FRINGE_HEADER: [&str; 3] = ["phi_rf_rad", "p_up", "shots"];
pub const SCAN_HEADER: [&str; 4] = ["f_mod_hz", "n_pulses", "coherence", "sigma"];
pub const CANDIDATE_HEADER: [&str; 3] = ["freq_hz", "dip_depth", "first_n"];
pub const REPORT_HEADER: [&str; 3] = ["freq_hz", "amp_ug", "sigma_ug"];
pub const FILTER_HEADER: [&str; 3] = ["f_hz", "abs_FT", "abs_FT_sq"];
pub const CRB_HEADER: [&str; 3] = ["eta", "sigma_N_bound", "sigma_f_bound"];

/// Full-precision decimal rendering (17 significant digits).
pub fn fmt_full(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    WriterBuilder::new().terminator(Terminator::Any(b'\n')).from_writer(w)
}

fn reader<R: Read>(r: R, header: &[&str]) -> Result<csv::Reader<R>> {
    let mut rdr = ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let got: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if got.len() < header.len() || got.iter().zip(header).any(|(g, h)| g != h) {
        return Err(Error::Parse(format!("expected header '{}', found '{}'", header.join(","), got.join(","))));
    }
    Ok(rdr)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec.get(idx).ok_or_else(|| Error::Parse(format!("line {line}: missing column '{name}'")))?;
    raw.parse().map_err(|_| Error::Parse(format!("line {line}: column '{name}' has invalid value '{raw}'")))
}

fn rows<W: Write>(w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut wtr = writer(w);
    wtr.write_record(header)?;
    for r in rows {
        wtr.write_record(&r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_schedule<W: Write>(w: W, schedule: &PulseSchedule) -> Result<()> {
    rows(
        w,
        &SCHEDULE_HEADER,
        schedule.pulse_times().iter().enumerate().map(|(i, &t)| vec![(i + 1).to_string(), fmt_full(t)]),
    )
}

pub fn write_fringe<W: Write>(w: W, scan: &FringeScan) -> Result<()> {
    rows(
        w,
        &FRINGE_HEADER,
        scan.points().iter().map(|p| vec![fmt_full(p.phi_rf), fmt_full(p.p_up), p.shots.to_string()]),
    )
}

pub fn read_fringe<R: Read>(r: R) -> Result<FringeScan> {
    let mut rdr = reader(r, &FRINGE_HEADER)?;
    let mut pts = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        pts.push(FringePoint {
            phi_rf: field(&rec, 0, "phi_rf_rad")?,
            p_up: field(&rec, 1, "p_up")?,
            shots: field(&rec, 2, "shots")?,
        });
    }
    FringeScan::new(pts)
}

/// Long format, one row per cell, rows grouped by pulse count.
pub fn write_scan<W: Write>(w: W, grid: &ScanGrid) -> Result<()> {
    let mut out = Vec::with_capacity(grid.cells().len());
    for (row, &n) in grid.n_values().iter().enumerate() {
        for (col, &f) in grid.freqs().iter().enumerate() {
            let c = grid.cell(row, col);
            out.push(vec![fmt_full(f), n.to_string(), fmt_full(c.coherence), fmt_full(c.sigma)]);
        }
    }
    rows(w, &SCAN_HEADER, out)
}

/// Reads a long-format scan; every `(f_mod, n)` combination must be present
/// exactly once.
pub fn read_scan<R: Read>(r: R) -> Result<ScanGrid> {
    let mut rdr = reader(r, &SCAN_HEADER)?;
    let mut entries = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let f: f64 = field(&rec, 0, "f_mod_hz")?;
        let n: usize = field(&rec, 1, "n_pulses")?;
        let a: f64 = field(&rec, 2, "coherence")?;
        let s: f64 = field(&rec, 3, "sigma")?;
        entries.push((f, n, ScanCell { coherence: a, sigma: s }));
    }
    if entries.is_empty() {
        return Err(Error::Parse("scan file has no data rows".into()));
    }
    let mut freqs: Vec<f64> = entries.iter().map(|e| e.0).collect();
    freqs.sort_by(f64::total_cmp);
    freqs.dedup();
    let n_values: Vec<usize> = entries.iter().map(|e| e.1).collect::<BTreeSet<_>>().into_iter().collect();
    let width = freqs.len();
    let mut cells: Vec<Option<ScanCell>> = vec![None; width * n_values.len()];
    for (f, n, c) in entries {
        let col = freqs.partition_point(|&x| x < f);
        let row = n_values.partition_point(|&x| x < n);
        let slot = &mut cells[row * width + col];
        if slot.is_some() {
            return Err(Error::Parse(format!("duplicate scan cell f_mod = {f}, n = {n}")));
        }
        *slot = Some(c);
    }
    let cells = cells
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            c.ok_or_else(|| {
                Error::Parse(format!("missing scan cell f_mod = {}, n = {}", freqs[i % width], n_values[i / width]))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ScanGrid::new(freqs, n_values, cells)
}

pub fn write_candidates<W: Write>(w: W, candidates: &[CandidateTone]) -> Result<()> {
    rows(
        w,
        &CANDIDATE_HEADER,
        candidates.iter().map(|c| vec![fmt_full(c.frequency), fmt_full(c.dip_depth), c.first_n_detected.to_string()]),
    )
}

pub fn read_candidates<R: Read>(r: R) -> Result<Vec<CandidateTone>> {
    let mut rdr = reader(r, &CANDIDATE_HEADER)?;
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            Ok(CandidateTone {
                frequency: field(&rec, 0, "freq_hz")?,
                dip_depth: field(&rec, 1, "dip_depth")?,
                first_n_detected: field(&rec, 2, "first_n")?,
            })
        })
        .collect()
}

pub fn write_report<W: Write>(w: W, report: &EstimateReport) -> Result<()> {
    rows(
        w,
        &REPORT_HEADER,
        report.tones.iter().map(|t| vec![fmt_full(t.frequency), fmt_full(t.amplitude_ug), fmt_full(t.sigma_ug)]),
    )
}

/// `(freq_hz, amp_ug)` pairs from a report-style file; extra columns are
/// ignored.
pub fn read_amplitudes<R: Read>(r: R) -> Result<Vec<(f64, f64)>> {
    let mut rdr = reader(r, &REPORT_HEADER[..2])?;
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            Ok((field(&rec, 0, "freq_hz")?, field(&rec, 1, "amp_ug")?))
        })
        .collect()
}

/// Human-readable `key = value` summary of a fit.
pub fn report_summary(report: &EstimateReport) -> String {
    let mut s = String::new();
    for t in &report.tones {
        s += &format!("tone_{}hz_ug = {} +- {}\n", t.frequency, t.amplitude_ug, t.sigma_ug);
    }
    if let Some((p, sp)) = report.slow_drift {
        s += &format!("slow_drift_hz2 = {p} +- {sp}\n");
    }
    s += &format!("chi_square = {}\n", report.chi_square);
    s += &format!("reduced_chi_square = {}\n", report.reduced_chi_square);
    s += &format!("iterations = {}\n", report.iterations);
    s += &format!("gradient_norm = {:e}\n", report.gradient_norm);
    s += &format!("converged = {}\n", report.converged);
    s
}

pub fn write_filter<W: Write>(w: W, samples: &[(f64, f64)]) -> Result<()> {
    rows(w, &FILTER_HEADER, samples.iter().map(|&(f, m)| vec![fmt_full(f), fmt_full(m), fmt_full(m * m)]))
}

pub fn write_crb<W: Write>(w: W, rows_: &[(f64, f64, f64)]) -> Result<()> {
    rows(w, &CRB_HEADER, rows_.iter().map(|&(e, sn, sf)| vec![fmt_full(e), fmt_full(sn), fmt_full(sf)]))
}
