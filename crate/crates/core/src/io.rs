//! On-disk formats: CSV tables (17 significant digits, round-trip exact for
//! f64) and the binary field-dump format.
//!
//! Field dumps are little-endian IEEE-754 f64, row-major `n x n` per
//! component (component-major for vectors), preceded by a 64-byte ASCII
//! header `"NMAGG1 <field> <n> <L> <t>\n"` padded with spaces. Both are
//! bit-exact and language-neutral.

use crate::diagnostics::EnergyReport;
use crate::error::{Error, Result};
use crate::experiments::{EtaRSweepResult, KappaSweepRow};
use crate::kernel::KappaRow;
use crate::spectral::{ScalarField, TorusGrid, VectorField2};
use ndarray::Array2;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

/// 17 significant digits: enough to reconstruct the exact f64.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

fn comment_block(lines: &[String]) -> String {
    let mut out = String::new();
    for l in lines {
        let _ = writeln!(out, "# {l}");
    }
    out
}

/// Energy-ledger time series, one row per recorded step.
pub fn write_timeseries_csv(
    path: &Path,
    header_lines: &[String],
    reports: &[EnergyReport],
) -> Result<()> {
    let mut out = comment_block(header_lines);
    let _ = writeln!(out, "{}", EnergyReport::CSV_HEADER);
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(r.t),
            r.step,
            fmt_f64(r.e_kinetic),
            fmt_f64(r.e_rotation),
            fmt_f64(r.e_nonlocal),
            fmt_f64(r.e_potential),
            fmt_f64(r.e_total),
            fmt_f64(r.d_mu),
            fmt_f64(r.d_visc),
            fmt_f64(r.d_curl),
            fmt_f64(r.d_ang),
            fmt_f64(r.d_total),
            fmt_f64(r.mass),
            fmt_f64(r.phi_max),
        );
    }
    write_text(path, &out)
}

/// Static kernel-concentration diagnostic table.
pub fn write_kappa_table_csv(path: &Path, header_lines: &[String], rows: &[KappaRow]) -> Result<()> {
    let mut out = comment_block(header_lines);
    let _ = writeln!(out, "kappa,e_kappa,e_0,rel_gap,op_gap");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(r.kappa),
            fmt_f64(r.e_kappa),
            fmt_f64(r.e_0),
            fmt_f64(r.rel_gap),
            fmt_f64(r.op_gap),
        );
    }
    write_text(path, &out)
}

/// Kernel-concentration sweep summary (static gaps + trajectory distances).
pub fn write_kappa_sweep_csv(
    path: &Path,
    header_lines: &[String],
    rows: &[KappaSweepRow],
) -> Result<()> {
    let mut out = comment_block(header_lines);
    let _ = writeln!(out, "kappa,status,e_kappa,e_0,rel_gap,op_gap,traj_dist");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_f64(r.kappa),
            if r.resolved { "ok" } else { "unresolved" },
            fmt_f64(r.e_kappa),
            fmt_f64(r.e_0),
            fmt_f64(r.rel_gap),
            fmt_f64(r.op_gap),
            fmt_f64(r.traj_dist),
        );
    }
    write_text(path, &out)
}

/// Nonpolar consistency sweep summary; the fitted log-log slope is repeated
/// on every row.
pub fn write_eta_sweep_csv(
    path: &Path,
    header_lines: &[String],
    result: &EtaRSweepResult,
) -> Result<()> {
    let mut out = comment_block(header_lines);
    let _ = writeln!(out, "eta_r,metric_nagg,metric_nmodelh,fitted_slope");
    for r in &result.rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(r.eta_r),
            fmt_f64(r.metric_nagg),
            r.metric_nmodelh.map_or("".to_string(), fmt_f64),
            fmt_f64(result.fitted_slope),
        );
    }
    write_text(path, &out)
}

const DUMP_HEADER_LEN: usize = 64;
const DUMP_MAGIC: &str = "NMAGG1";

fn dump_header(name: &str, n: usize, length: f64, t: f64) -> Result<[u8; DUMP_HEADER_LEN]> {
    let text = format!("{DUMP_MAGIC} {name} {n} {length} {t}\n");
    if text.len() > DUMP_HEADER_LEN {
        return Err(Error::Io(format!(
            "dump header exceeds {DUMP_HEADER_LEN} bytes: {text:?}"
        )));
    }
    let mut buf = [b' '; DUMP_HEADER_LEN];
    // the newline terminates the header; padding spaces follow it
    buf[..text.len()].copy_from_slice(text.as_bytes());
    Ok(buf)
}

fn write_components(path: &Path, header: [u8; 64], comps: &[&Array2<f64>]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&header)?;
    let mut buf = Vec::with_capacity(comps[0].len() * 8);
    for c in comps {
        buf.clear();
        for v in c.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        f.write_all(&buf)?;
    }
    Ok(())
}

/// Scalar field dump (one `n x n` block).
pub fn write_scalar_dump(path: &Path, name: &str, field: &ScalarField, t: f64) -> Result<()> {
    let grid = field.grid();
    let header = dump_header(name, grid.n(), grid.length(), t)?;
    write_components(path, header, &[&field.values])
}

/// Vector field dump (two component-major `n x n` blocks).
pub fn write_vector_dump(path: &Path, name: &str, field: &VectorField2, t: f64) -> Result<()> {
    let grid = field.grid();
    let header = dump_header(name, grid.n(), grid.length(), t)?;
    write_components(path, header, &[&field.u1, &field.u2])
}

/// Parsed dump: name, grid, time, and one array per component.
pub struct FieldDump {
    pub name: String,
    pub n: usize,
    pub length: f64,
    pub t: f64,
    pub components: Vec<Array2<f64>>,
}

pub fn read_field_dump(path: &Path) -> Result<FieldDump> {
    let mut f = std::fs::File::open(path)?;
    let mut header = [0u8; DUMP_HEADER_LEN];
    f.read_exact(&mut header)?;
    let text = std::str::from_utf8(&header)
        .map_err(|_| Error::Io("dump header is not ASCII".into()))?;
    let line = text
        .split('\n')
        .next()
        .ok_or_else(|| Error::Io("dump header missing newline".into()))?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some(DUMP_MAGIC) {
        return Err(Error::Io("bad dump magic".into()));
    }
    let name = parts
        .next()
        .ok_or_else(|| Error::Io("dump header missing field name".into()))?
        .to_string();
    let parse = |s: Option<&str>, what: &str| -> Result<f64> {
        s.ok_or_else(|| Error::Io(format!("dump header missing {what}")))?
            .parse::<f64>()
            .map_err(|e| Error::Io(format!("dump header bad {what}: {e}")))
    };
    let n = parse(parts.next(), "n")? as usize;
    let length = parse(parts.next(), "L")?;
    let t = parse(parts.next(), "t")?;

    let mut rest = Vec::new();
    f.read_to_end(&mut rest)?;
    if rest.len() % (n * n * 8) != 0 {
        return Err(Error::Io(format!(
            "dump payload size {} is not a multiple of n^2 f64 blocks",
            rest.len()
        )));
    }
    let blocks = rest.len() / (n * n * 8);
    let mut components = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let mut arr = Array2::<f64>::zeros((n, n));
        let base = b * n * n * 8;
        for (k, v) in arr.iter_mut().enumerate() {
            let off = base + k * 8;
            *v = f64::from_le_bytes(rest[off..off + 8].try_into().unwrap());
        }
        components.push(arr);
    }
    Ok(FieldDump {
        name,
        n,
        length,
        t,
        components,
    })
}

/// Rebuild a scalar field from a dump (grid created on the fly).
pub fn scalar_from_dump(dump: &FieldDump) -> Result<(Arc<TorusGrid>, ScalarField)> {
    if dump.components.len() != 1 {
        return Err(Error::Io(format!(
            "expected 1 component, dump has {}",
            dump.components.len()
        )));
    }
    let grid = TorusGrid::new(dump.n, dump.length)?;
    let field = ScalarField::from_values(&grid, dump.components[0].clone())?;
    Ok((grid, field))
}
