use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use qsky::biphoton::{contrast_to_p, p_to_contrast, pure_state};
use qsky::pipeline::{evaluate_point, Pipeline, PointResult};
use qsky::tomography::{
    average_quantum_contrast, fidelity, mle_reconstruct, noise_rate_for_weight, settings_36,
    simulate_counts, witness_report, ContrastEstimate, MleResult, TomographyRecord, WitnessReport,
};
use qsky::topology::{
    convergence_scan, residuals_decreasing, skyrmion_number, skyrmion_number_analytic, texture,
    ConvergenceRow,
};
use qsky::{DensityMatrix4, GridSpec, HybridStateSpec, SkyrmionResult, UnitVectorField};
use rayon::prelude::*;

use crate::config::{Config, SweepVariable};
use crate::error::{Result, Warning};
use crate::output::{self, Metadata};

/// One sweep point, in the units of the output columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub p: f64,
    pub quantum_contrast: f64,
    pub purity: f64,
    pub concurrence: f64,
    pub fidelity: f64,
    pub skyrmion_number: f64,
    pub rounded: i64,
    pub residual: f64,
    pub masked_fraction: f64,
    pub measured_contrast: Option<f64>,
    pub clamped: bool,
    pub mle_converged: Option<bool>,
}

impl SweepRow {
    fn from_point(r: &PointResult) -> Self {
        SweepRow {
            p: r.p,
            quantum_contrast: r.quantum_contrast,
            purity: r.witnesses.purity,
            concurrence: r.witnesses.concurrence,
            fidelity: r.witnesses.fidelity,
            skyrmion_number: r.skyrmion.n,
            rounded: r.skyrmion.rounded,
            residual: r.skyrmion.residual,
            masked_fraction: r.skyrmion.masked_fraction,
            measured_contrast: r.measured_contrast,
            clamped: r.clamped,
            mle_converged: r.mle_converged,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub variable: SweepVariable,
    pub rows: Vec<SweepRow>,
    pub warnings: Vec<Warning>,
}

/// Evaluate every sweep point of `cfg`. Points run in parallel; rows come
/// back in increasing order of the sweep variable. Tomographic points use
/// seed `seed + index`.
pub fn run_sweep(cfg: &Config) -> Result<SweepTable> {
    let (variable, points) = cfg.sweep_points()?;
    let spec = cfg.spec();
    let grid = cfg.grid_spec()?;
    let pipeline: Pipeline = cfg.sweep.pipeline.into();
    let model = cfg.count_model();
    let mle = cfg.mle_options();
    let rows = points
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let p = match variable {
                SweepVariable::P => x,
                SweepVariable::Qc => contrast_to_p(x, 2)?,
            };
            let model = model.with_sampling(model.sampling, model.seed.wrapping_add(i as u64));
            let point = evaluate_point(pipeline, &spec, p, &grid, &model, &mle)?;
            let mut row = SweepRow::from_point(&point);
            if variable == SweepVariable::Qc && !point.clamped {
                row.quantum_contrast = x;
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut warnings = Vec::new();
    for r in &rows {
        if r.p > 0.0 && r.residual > cfg.numerics.residual_warn {
            warnings.push(Warning(format!(
                "p = {}: N = {} is {} from an integer",
                r.p, r.skyrmion_number, r.residual
            )));
        }
        if r.mle_converged == Some(false) {
            warnings.push(Warning(format!(
                "p = {}: maximum-likelihood fit did not converge",
                r.p
            )));
        }
    }
    Ok(SweepTable {
        variable,
        rows,
        warnings,
    })
}

/// `N` for one spec without noise and at the gallery weight.
#[derive(Debug, Clone)]
pub struct GalleryRow {
    pub ell1: i32,
    pub ell2: i32,
    pub analytic: i32,
    pub clean: SkyrmionResult,
    pub noisy: SkyrmionResult,
    pub clean_texture: UnitVectorField,
    pub noisy_texture: UnitVectorField,
}

impl GalleryRow {
    pub fn equal(&self) -> bool {
        self.clean.rounded == self.noisy.rounded
    }
}

/// Textures and `N` for each spec at `p = 1` and at `p`.
pub fn run_topology_gallery(
    specs: &[HybridStateSpec],
    p: f64,
    grid: &GridSpec,
) -> Result<Vec<GalleryRow>> {
    specs
        .par_iter()
        .map(|spec| {
            let analytic = skyrmion_number_analytic(spec)?;
            let pure = pure_state(spec)?;
            let clean_texture = texture(&pure, spec, grid)?;
            let noisy_texture = texture(
                &qsky::biphoton::apply_isotropic_noise(&pure, p)?,
                spec,
                grid,
            )?;
            Ok(GalleryRow {
                ell1: spec.ell1,
                ell2: spec.ell2,
                analytic,
                clean: skyrmion_number(&clean_texture, grid)?,
                noisy: skyrmion_number(&noisy_texture, grid)?,
                clean_texture,
                noisy_texture,
            })
        })
        .collect()
}

/// [`convergence_scan`] at the configured state, weight and half-width.
pub fn run_convergence(
    spec: &HybridStateSpec,
    p: f64,
    half_width: f64,
    resolutions: &[usize],
) -> Result<Vec<ConvergenceRow>> {
    Ok(convergence_scan(spec, p, half_width, resolutions)?)
}

/// One simulated record and its reconstruction.
#[derive(Debug, Clone)]
pub struct TomoRun {
    pub record: TomographyRecord,
    pub fit: MleResult,
    pub contrast: ContrastEstimate,
    pub witnesses: WitnessReport,
    /// Weight of the isotropic state encoded by the expected counts,
    /// `(4F - 1)/3` with `F` its fidelity to the pure state.
    pub encoded_p: f64,
    pub clamped: bool,
}

/// Simulate the 36 settings for the pure state of `cfg`, with either the
/// configured noise rate or the one that realizes `[state] p`.
pub fn run_tomo(cfg: &Config) -> Result<TomoRun> {
    let spec = cfg.spec();
    let pure = pure_state(&spec)?;
    let mut model = cfg.count_model();
    let mut clamped = false;
    match cfg.tomography.noise_rate {
        Some(rate) => model = model.with_noise_rate(rate),
        None => {
            let target =
                noise_rate_for_weight(cfg.state.p, model.pair_rate, model.coincidence_window)?;
            model.pair_rate = target.pair_rate;
            model = model.with_noise_rate(target.noise_rate);
            clamped = target.clamped;
        }
    }
    let record = simulate_counts(&pure, &settings_36(), &model)?;
    let fit = mle_reconstruct(&record, &cfg.mle_options())?;
    Ok(TomoRun {
        contrast: average_quantum_contrast(&record)?,
        witnesses: witness_report(&fit.rho, &spec)?,
        encoded_p: (4.0 * fidelity(&model.effective_state(&pure)?, &pure)? - 1.0) / 3.0,
        clamped,
        record,
        fit,
    })
}

/// What a subcommand printed, wrote and warned about.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub stdout: String,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    State,
    Skyrmion,
    Sweep,
    Gallery,
    Tomo,
    Converge,
}

fn create(dir: &Path, name: &str, files: &mut Vec<PathBuf>) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let f = File::create(&path)?;
    files.push(path);
    Ok(BufWriter::new(f))
}

fn state_metadata(cfg: &Config) -> Metadata {
    let s = &cfg.state;
    vec![
        ("ell1", s.ell1.to_string()),
        ("ell2", s.ell2.to_string()),
        ("delta", s.delta.to_string()),
        ("waist", s.waist.to_string()),
    ]
}

fn tag(ell: i32) -> String {
    if ell < 0 {
        format!("m{}", -ell)
    } else {
        ell.to_string()
    }
}

fn print_matrix(out: &mut String, rho: &DensityMatrix4) {
    for i in 0..4 {
        let cells: Vec<String> = (0..4)
            .map(|j| {
                let z = rho.get(i, j);
                format!("{:+.6}{:+.6}i", z.re, z.im)
            })
            .collect();
        let _ = writeln!(out, "  {}", cells.join("  "));
    }
}

fn residual_warning(cfg: &Config, what: &str, r: &SkyrmionResult) -> Option<Warning> {
    (r.masked_fraction < 1.0 && r.residual > cfg.numerics.residual_warn).then(|| {
        Warning(format!(
            "{what}: N = {} is {} from an integer",
            r.n, r.residual
        ))
    })
}

/// Run a subcommand, writing its CSV files under `cfg.output.dir`.
pub fn execute(command: Command, cfg: &Config) -> Result<Report> {
    let mut report = Report::default();
    let dir = cfg.output.dir.clone();
    let out = &mut report.stdout;
    match command {
        Command::State => {
            let spec = cfg.spec();
            let rho = qsky::biphoton::apply_isotropic_noise(&pure_state(&spec)?, cfg.state.p)?;
            let w = witness_report(&rho, &spec)?;
            let _ = writeln!(
                out,
                "state ({}, {}) at p = {}",
                spec.ell1, spec.ell2, cfg.state.p
            );
            print_matrix(out, &rho);
            let _ = writeln!(out, "quantum_contrast = {}", p_to_contrast(cfg.state.p, 2)?);
            let _ = writeln!(out, "purity = {}", w.purity);
            let _ = writeln!(out, "concurrence = {}", w.concurrence);
            let _ = writeln!(out, "fidelity = {}", w.fidelity);
            let mut meta = state_metadata(cfg);
            meta.push(("p", cfg.state.p.to_string()));
            output::write_state(create(&dir, "state.csv", &mut report.files)?, &meta, &rho)?;
        }
        Command::Skyrmion => {
            let spec = cfg.spec();
            let grid = cfg.grid_spec()?;
            let rho = qsky::biphoton::apply_isotropic_noise(&pure_state(&spec)?, cfg.state.p)?;
            let field = texture(&rho, &spec, &grid)?;
            let r = skyrmion_number(&field, &grid)?;
            let _ = writeln!(out, "skyrmion_number = {}", r.n);
            let _ = writeln!(out, "rounded = {}", r.rounded);
            let _ = writeln!(out, "residual = {}", r.residual);
            let _ = writeln!(out, "exterior = {}", r.exterior);
            let _ = writeln!(out, "masked_fraction = {}", r.masked_fraction);
            if let Ok(n) = skyrmion_number_analytic(&spec) {
                let _ = writeln!(out, "analytic = {n}");
            }
            let mut meta = state_metadata(cfg);
            meta.push(("p", cfg.state.p.to_string()));
            meta.extend(output::grid_metadata(&grid));
            meta.push(("skyrmion_number", r.n.to_string()));
            output::write_density(
                create(&dir, "skyrmion_density.csv", &mut report.files)?,
                &meta,
                &r.density,
            )?;
            output::write_texture(
                create(&dir, "skyrmion_texture.csv", &mut report.files)?,
                &meta,
                &field,
                1,
            )?;
            report
                .warnings
                .extend(residual_warning(cfg, "skyrmion", &r));
        }
        Command::Sweep => {
            let table = run_sweep(cfg)?;
            let grid = cfg.grid_spec()?;
            let mut meta = state_metadata(cfg);
            meta.push((
                "pipeline",
                format!("{:?}", cfg.sweep.pipeline).to_lowercase(),
            ));
            meta.push((
                "variable",
                match table.variable {
                    SweepVariable::P => "p".into(),
                    SweepVariable::Qc => "quantum_contrast".into(),
                },
            ));
            meta.extend(output::grid_metadata(&grid));
            if cfg.sweep.pipeline == crate::config::PipelineKind::Tomographic {
                let m = cfg.count_model();
                meta.push(("pair_rate", m.pair_rate.to_string()));
                meta.push(("T", m.coincidence_window.to_string()));
                meta.push(("duration", m.duration.to_string()));
                meta.push(("sampling", m.sampling.to_string()));
                meta.push(("seed", m.seed.to_string()));
            }
            output::write_sweep(
                create(&dir, "sweep.csv", &mut report.files)?,
                &meta,
                &table.rows,
            )?;
            let _ = writeln!(out, "{} sweep points written", table.rows.len());
            report.warnings.extend(table.warnings);
        }
        Command::Gallery => {
            let grid = cfg.grid_spec()?;
            let specs: Vec<HybridStateSpec> = cfg
                .gallery
                .specs
                .iter()
                .map(|&[a, b]| {
                    HybridStateSpec::new(a, b)
                        .with_delta(cfg.state.delta)
                        .with_waist(cfg.state.waist)
                })
                .collect();
            let rows = run_topology_gallery(&specs, cfg.gallery.p, &grid)?;
            let mut meta: Metadata = vec![("p", cfg.gallery.p.to_string())];
            meta.extend(output::grid_metadata(&grid));
            output::write_gallery(
                create(&dir, "gallery.csv", &mut report.files)?,
                &meta,
                &rows,
            )?;
            for r in &rows {
                let name = format!("texture_{}_{}", tag(r.ell1), tag(r.ell2));
                let mut m = vec![("ell1", r.ell1.to_string()), ("ell2", r.ell2.to_string())];
                m.extend(output::grid_metadata(&grid));
                let mut clean = m.clone();
                clean.push(("p", "1".into()));
                let mut noisy = m;
                noisy.push(("p", cfg.gallery.p.to_string()));
                let stride = cfg.gallery.stride;
                output::write_texture(
                    create(&dir, &format!("{name}_clean.csv"), &mut report.files)?,
                    &clean,
                    &r.clean_texture,
                    stride,
                )?;
                output::write_texture(
                    create(&dir, &format!("{name}_noisy.csv"), &mut report.files)?,
                    &noisy,
                    &r.noisy_texture,
                    stride,
                )?;
                let _ = writeln!(
                    out,
                    "({}, {}): N = {} -> {}",
                    r.ell1, r.ell2, r.clean.rounded, r.noisy.rounded
                );
                if !r.equal() {
                    report.warnings.push(Warning(format!(
                        "({}, {}): N changed from {} to {} under noise",
                        r.ell1, r.ell2, r.clean.rounded, r.noisy.rounded
                    )));
                }
                let what = format!("({}, {})", r.ell1, r.ell2);
                report
                    .warnings
                    .extend(residual_warning(cfg, &what, &r.clean));
                report
                    .warnings
                    .extend(residual_warning(cfg, &what, &r.noisy));
            }
        }
        Command::Tomo => {
            let run = run_tomo(cfg)?;
            let _ = writeln!(out, "measured quantum_contrast = {}", run.contrast.value);
            let _ = writeln!(out, "encoded p = {}", run.encoded_p);
            print_matrix(out, &run.fit.rho);
            let _ = writeln!(out, "purity = {}", run.witnesses.purity);
            let _ = writeln!(out, "concurrence = {}", run.witnesses.concurrence);
            let _ = writeln!(out, "fidelity = {}", run.witnesses.fidelity);
            let _ = writeln!(
                out,
                "mle iterations = {} (converged: {})",
                run.fit.iterations, run.fit.converged
            );
            run.record
                .write_csv(create(&dir, "tomo_record.csv", &mut report.files)?)?;
            let mut meta = state_metadata(cfg);
            meta.extend(output::mle_metadata(&run.fit));
            meta.push(("quantum_contrast", run.contrast.value.to_string()));
            output::write_state(
                create(&dir, "tomo_state.csv", &mut report.files)?,
                &meta,
                &run.fit.rho,
            )?;
            if !run.fit.converged {
                report
                    .warnings
                    .push(Warning("maximum-likelihood fit did not converge".into()));
            }
            if run.clamped {
                let _ = writeln!(
                    out,
                    "note: p = {} is above what the coincidence window allows; no noise added",
                    cfg.state.p
                );
            }
        }
        Command::Converge => {
            let spec = cfg.spec();
            let rows = run_convergence(
                &spec,
                cfg.state.p,
                cfg.half_width(),
                &cfg.converge.resolutions,
            )?;
            let mut meta = state_metadata(cfg);
            meta.push(("p", cfg.state.p.to_string()));
            meta.push(("half_width", cfg.half_width().to_string()));
            output::write_convergence(
                create(&dir, "convergence.csv", &mut report.files)?,
                &meta,
                &rows,
            )?;
            for r in &rows {
                let _ = writeln!(
                    out,
                    "{:>6}  N = {:.9}  residual = {:.3e}",
                    r.samples, r.n, r.residual
                );
            }
            match residuals_decreasing(&rows) {
                Some(true) => {}
                Some(false) => {
                    let _ = writeln!(out, "residuals do not decrease monotonically");
                }
                None => {
                    let _ = writeln!(out, "single resolution: no trend");
                }
            }
            let last = rows.last().expect("resolutions are non-empty");
            if cfg.state.p > 0.0 && last.residual > cfg.numerics.residual_warn {
                report.warnings.push(Warning(format!(
                    "finest resolution {}: residual {}",
                    last.samples, last.residual
                )));
            }
        }
    }
    Ok(report)
}
