//! CSV writers. Each file starts with `# key = value` metadata lines,
//! followed by an ordinary CSV table.

use std::io::Write;

use ndarray::Array2;
use qsky::tomography::MleResult;
use qsky::{GridSpec, UnitVectorField};

use crate::error::Result;
use crate::runners::{GalleryRow, SweepRow};
use qsky::topology::ConvergenceRow;

pub type Metadata = Vec<(&'static str, String)>;

pub fn write_metadata<W: Write>(w: &mut W, meta: &[(&'static str, String)]) -> Result<()> {
    for (k, v) in meta {
        writeln!(w, "# {k} = {v}")?;
    }
    Ok(())
}

fn table<W: Write>(
    mut w: W,
    meta: &[(&'static str, String)],
    header: &[&str],
) -> Result<csv::Writer<W>> {
    write_metadata(&mut w, meta)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    Ok(out)
}

fn num(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-4 {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn grid_metadata(grid: &GridSpec) -> Metadata {
    vec![
        ("half_width", num(grid.half_width)),
        ("samples", grid.samples.to_string()),
        ("spacing", num(grid.spacing())),
        ("origin", num(grid.coord(0))),
    ]
}

pub const SWEEP_COLUMNS: [&str; 12] = [
    "p",
    "quantum_contrast",
    "purity",
    "concurrence",
    "fidelity",
    "skyrmion_number",
    "rounded",
    "residual",
    "masked_fraction",
    "measured_contrast",
    "clamped",
    "mle_converged",
];

pub fn write_sweep<W: Write>(
    w: W,
    meta: &[(&'static str, String)],
    rows: &[SweepRow],
) -> Result<()> {
    let mut out = table(w, meta, &SWEEP_COLUMNS)?;
    for r in rows {
        out.write_record([
            num(r.p),
            num(r.quantum_contrast),
            num(r.purity),
            num(r.concurrence),
            num(r.fidelity),
            num(r.skyrmion_number),
            r.rounded.to_string(),
            num(r.residual),
            num(r.masked_fraction),
            opt(r.measured_contrast),
            r.clamped.to_string(),
            r.mle_converged.map(|c| c.to_string()).unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Normalized texture, one row per unmasked sample (every `stride`-th row
/// and column).
pub fn write_texture<W: Write>(
    w: W,
    meta: &[(&'static str, String)],
    field: &UnitVectorField,
    stride: usize,
) -> Result<()> {
    let grid = field.grid();
    let mut out = table(w, meta, &["x", "y", "S1", "S2", "S3"])?;
    for row in (0..grid.samples).step_by(stride.max(1)) {
        for col in (0..grid.samples).step_by(stride.max(1)) {
            if let Some(v) = field.get(row, col) {
                let (x, y) = grid.point(row, col);
                out.write_record([num(x), num(y), num(v[0]), num(v[1]), num(v[2])])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Row-major array: line `i` holds `y = origin + i·spacing`, column `j`
/// holds `x = origin + j·spacing`. No column header.
pub fn write_density<W: Write>(
    mut w: W,
    meta: &[(&'static str, String)],
    density: &Array2<f64>,
) -> Result<()> {
    write_metadata(&mut w, meta)?;
    writeln!(w, "# layout = row-major, rows along y, columns along x")?;
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for row in density.rows() {
        out.write_record(row.iter().map(|&v| num(v)))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_gallery<W: Write>(
    w: W,
    meta: &[(&'static str, String)],
    rows: &[GalleryRow],
) -> Result<()> {
    let mut out = table(
        w,
        meta,
        &[
            "ell1",
            "ell2",
            "analytic",
            "skyrmion_number_clean",
            "skyrmion_number",
            "rounded_clean",
            "rounded",
            "residual_clean",
            "residual",
            "equal",
        ],
    )?;
    for r in rows {
        out.write_record([
            r.ell1.to_string(),
            r.ell2.to_string(),
            r.analytic.to_string(),
            num(r.clean.n),
            num(r.noisy.n),
            r.clean.rounded.to_string(),
            r.noisy.rounded.to_string(),
            num(r.clean.residual),
            num(r.noisy.residual),
            r.equal().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_convergence<W: Write>(
    w: W,
    meta: &[(&'static str, String)],
    rows: &[ConvergenceRow],
) -> Result<()> {
    let mut out = table(w, meta, &["samples", "skyrmion_number", "residual"])?;
    for r in rows {
        out.write_record([r.samples.to_string(), num(r.n), num(r.residual)])?;
    }
    out.flush()?;
    Ok(())
}

/// Density-matrix entries in the `{l1 P1, l1 P2, l2 P1, l2 P2}` basis.
pub fn write_state<W: Write>(
    w: W,
    meta: &[(&'static str, String)],
    rho: &qsky::DensityMatrix4,
) -> Result<()> {
    let mut out = table(w, meta, &["row", "col", "re", "im"])?;
    for i in 0..4 {
        for j in 0..4 {
            let z = rho.get(i, j);
            out.write_record([i.to_string(), j.to_string(), num(z.re), num(z.im)])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn mle_metadata(fit: &MleResult) -> Metadata {
    vec![
        ("log_likelihood", num(fit.log_likelihood)),
        ("iterations", fit.iterations.to_string()),
        ("converged", fit.converged.to_string()),
    ]
}
