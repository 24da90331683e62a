//! Run configuration read from a TOML file. Every key is optional; missing
//! keys take the defaults listed on each field.

use std::path::PathBuf;

use qsky::pipeline::Pipeline;
use qsky::tomography::{CountModel, MleOptions, Sampling};
use qsky::{GridSpec, HybridStateSpec};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub state: StateConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub tomography: TomographyConfig,
    #[serde(default)]
    pub gallery: GalleryConfig,
    #[serde(default)]
    pub converge: ConvergeConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(skip)]
    source: String,
}

/// `[state]`: the hybrid state and the noise weight used by `state`,
/// `skyrmion`, `tomo` and `converge`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateConfig {
    /// 0
    pub ell1: i32,
    /// 1
    pub ell2: i32,
    /// 0
    pub delta: f64,
    /// 1
    pub waist: f64,
    /// 1
    pub p: f64,
}

impl Default for StateConfig {
    fn default() -> Self {
        StateConfig {
            ell1: 0,
            ell2: 1,
            delta: 0.0,
            waist: 1.0,
            p: 1.0,
        }
    }
}

/// `[grid]`
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// `5 * waist` when absent.
    pub half_width: Option<f64>,
    /// 256
    pub samples: usize,
    /// 1e-6
    pub envelope_cutoff: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            half_width: None,
            samples: 256,
            envelope_cutoff: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PipelineKind {
    #[default]
    Analytic,
    Tomographic,
}

impl From<PipelineKind> for Pipeline {
    fn from(k: PipelineKind) -> Self {
        match k {
            PipelineKind::Analytic => Pipeline::Analytic,
            PipelineKind::Tomographic => Pipeline::Tomographic,
        }
    }
}

/// Sweep points, either listed or as an inclusive range.
#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub step: Option<f64>,
    pub values: Option<Vec<f64>>,
}

impl RangeSpec {
    pub fn from_values(values: Vec<f64>) -> Self {
        RangeSpec {
            values: Some(values),
            ..Default::default()
        }
    }

    pub fn inclusive(start: f64, stop: f64, step: f64) -> Self {
        RangeSpec {
            start: Some(start),
            stop: Some(stop),
            step: Some(step),
            values: None,
        }
    }
}

/// `[sweep]` with exactly one of `[sweep.p]` or `[sweep.qc]`. Without a
/// `[sweep]` section the sweep runs `p` from 0 to 1 in steps of 0.1.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub pipeline: PipelineKind,
    #[serde(default)]
    pub p: Option<RangeSpec>,
    #[serde(default)]
    pub qc: Option<RangeSpec>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            pipeline: PipelineKind::Analytic,
            p: Some(RangeSpec::inclusive(0.0, 1.0, 0.1)),
            qc: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    P,
    Qc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingKind {
    Deterministic,
    #[default]
    Poisson,
}

impl From<SamplingKind> for Sampling {
    fn from(k: SamplingKind) -> Self {
        match k {
            SamplingKind::Deterministic => Sampling::Deterministic,
            SamplingKind::Poisson => Sampling::Poisson,
        }
    }
}

/// `[tomography]`: count generator and reconstruction.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographyConfig {
    /// 1e5 Hz
    pub pair_rate: f64,
    /// 25e-9 s
    pub coincidence_window: f64,
    /// 1 s
    pub duration: f64,
    /// Flat noise singles rate for `tomo`; derived from `[state] p` when absent.
    pub noise_rate: Option<f64>,
    /// 0
    pub seed: u64,
    /// `poisson`
    pub sampling: SamplingKind,
    /// 20000
    pub mle_max_iters: usize,
    /// 1e-9
    pub mle_tol: f64,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        TomographyConfig {
            pair_rate: 1e5,
            coincidence_window: 25e-9,
            duration: 1.0,
            noise_rate: None,
            seed: 0,
            sampling: SamplingKind::Poisson,
            mle_max_iters: 20_000,
            mle_tol: 1e-9,
        }
    }
}

/// `[gallery]`
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GalleryConfig {
    /// `(l1, l2)` pairs; the default covers `N` in {-3, -2, -1, 1, 2, 3}.
    pub specs: Vec<[i32; 2]>,
    /// 0.5
    pub p: f64,
    /// Texture rows and columns written out: every `stride`-th sample (1).
    pub stride: usize,
}

impl Default for GalleryConfig {
    fn default() -> Self {
        GalleryConfig {
            specs: vec![[0, -3], [0, -2], [0, -1], [0, 1], [0, 2], [0, 3]],
            p: 0.5,
            stride: 1,
        }
    }
}

/// `[converge]`
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeConfig {
    /// [64, 128, 256]
    pub resolutions: Vec<usize>,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        ConvergeConfig {
            resolutions: vec![64, 128, 256],
        }
    }
}

/// `[numerics]`
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    /// Distance of `N` from an integer that counts as a warning (1e-2).
    pub residual_warn: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            residual_warn: 1e-2,
        }
    }
}

/// `[output]`
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// `out`
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
        }
    }
}

impl Config {
    /// Parse and validate.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg: Config = toml::from_str(text).map_err(|e| CliError::Config {
            line: e.span().map(|s| line_at(text, s.start)),
            message: e.message().trim().to_string(),
        })?;
        cfg.source = text.to_string();
        cfg.validate()?;
        Ok(cfg)
    }

    /// All defaults.
    pub fn default_validated() -> Self {
        Config::parse("").expect("defaults are valid")
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Config::parse(&std::fs::read_to_string(path)?)
    }

    /// Command-line overrides. `deterministic` replaces Poisson draws by
    /// expected counts.
    pub fn apply_overrides(
        &mut self,
        seed: Option<u64>,
        out: Option<PathBuf>,
        deterministic: bool,
    ) {
        if let Some(seed) = seed {
            self.tomography.seed = seed;
        }
        if let Some(out) = out {
            self.output.dir = out;
        }
        if deterministic {
            self.tomography.sampling = SamplingKind::Deterministic;
        }
    }

    fn fail(&self, section: &str, key: &str, message: impl Into<String>) -> CliError {
        CliError::Config {
            line: line_of(&self.source, section, key),
            message: format!("[{section}] {key}: {}", message.into()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.state;
        if s.ell1 == s.ell2 {
            return Err(self.fail("state", "ell2", "must differ from ell1"));
        }
        if !s.delta.is_finite() {
            return Err(self.fail("state", "delta", "must be finite"));
        }
        if !(s.waist.is_finite() && s.waist > 0.0) {
            return Err(self.fail("state", "waist", "must be positive"));
        }
        self.check_weight("state", "p", s.p)?;

        let g = &self.grid;
        if let Some(hw) = g.half_width {
            if !(hw.is_finite() && hw > 0.0) {
                return Err(self.fail("grid", "half_width", "must be positive"));
            }
        }
        if g.samples < GridSpec::MIN_SAMPLES {
            return Err(self.fail(
                "grid",
                "samples",
                format!("must be at least {}", GridSpec::MIN_SAMPLES),
            ));
        }
        if !(g.envelope_cutoff > 0.0 && g.envelope_cutoff < 1.0) {
            return Err(self.fail("grid", "envelope_cutoff", "must lie in (0, 1)"));
        }

        match (&self.sweep.p, &self.sweep.qc) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config {
                    line: line_of(&self.source, "sweep.qc", ""),
                    message: "give exactly one of [sweep.p] and [sweep.qc]".into(),
                });
            }
            (None, None) => {
                return Err(self.fail(
                    "sweep",
                    "pipeline",
                    "one of [sweep.p] or [sweep.qc] is required",
                ))
            }
            _ => {}
        }
        let (variable, section) = match self.sweep.p {
            Some(_) => (SweepVariable::P, "sweep.p"),
            None => (SweepVariable::Qc, "sweep.qc"),
        };
        for v in self.expand_range(section)? {
            match variable {
                SweepVariable::P => self.check_weight(section, "values", v)?,
                SweepVariable::Qc => {
                    if !(v.is_finite() && v >= 1.0) {
                        return Err(self.fail(
                            section,
                            "values",
                            format!("Qc must be finite and >= 1, got {v}"),
                        ));
                    }
                }
            }
        }

        let t = &self.tomography;
        for (v, key, strict) in [
            (t.pair_rate, "pair_rate", true),
            (t.coincidence_window, "coincidence_window", true),
            (t.duration, "duration", true),
            (t.mle_tol, "mle_tol", true),
            (t.noise_rate.unwrap_or(0.0), "noise_rate", false),
        ] {
            let ok = v.is_finite() && if strict { v > 0.0 } else { v >= 0.0 };
            if !ok {
                let need = if strict { "positive" } else { "non-negative" };
                return Err(self.fail(
                    "tomography",
                    key,
                    format!("must be finite and {need}, got {v}"),
                ));
            }
        }
        if t.mle_max_iters == 0 {
            return Err(self.fail("tomography", "mle_max_iters", "must be at least 1"));
        }

        let gal = &self.gallery;
        if gal.specs.is_empty() {
            return Err(self.fail("gallery", "specs", "at least one spec is required"));
        }
        if let Some([a, b]) = gal
            .specs
            .iter()
            .find(|[a, b]| a.unsigned_abs() == b.unsigned_abs())
        {
            return Err(self.fail(
                "gallery",
                "specs",
                format!("({a}, {b}) has |l1| = |l2| and no topology"),
            ));
        }
        self.check_weight("gallery", "p", gal.p)?;
        if gal.stride == 0 {
            return Err(self.fail("gallery", "stride", "must be at least 1"));
        }

        if self.converge.resolutions.is_empty() {
            return Err(self.fail(
                "converge",
                "resolutions",
                "at least one resolution is required",
            ));
        }
        if let Some(r) = self
            .converge
            .resolutions
            .iter()
            .find(|&&r| r < GridSpec::MIN_SAMPLES)
        {
            return Err(self.fail(
                "converge",
                "resolutions",
                format!("{r} is below the minimum of {}", GridSpec::MIN_SAMPLES),
            ));
        }

        if !(self.numerics.residual_warn.is_finite() && self.numerics.residual_warn > 0.0) {
            return Err(self.fail("numerics", "residual_warn", "must be positive"));
        }
        Ok(())
    }

    fn check_weight(&self, section: &str, key: &str, p: f64) -> Result<()> {
        if (0.0..=1.0).contains(&p) {
            Ok(())
        } else {
            Err(self.fail(
                section,
                key,
                format!("noise weight must lie in [0, 1], got {p}"),
            ))
        }
    }

    fn expand_range(&self, section: &str) -> Result<Vec<f64>> {
        let range = match section {
            "sweep.p" => self.sweep.p.as_ref(),
            _ => self.sweep.qc.as_ref(),
        }
        .expect("section checked by caller");
        let mut values = match (&range.values, range.start, range.stop, range.step) {
            (Some(v), None, None, None) => {
                if v.is_empty() {
                    return Err(self.fail(section, "values", "must not be empty"));
                }
                v.clone()
            }
            (None, Some(start), Some(stop), Some(step)) => {
                if !(step.is_finite() && step > 0.0) {
                    return Err(self.fail(section, "step", "must be positive"));
                }
                if !(start.is_finite() && stop.is_finite()) {
                    return Err(self.fail(section, "start", "start and stop must be finite"));
                }
                let span = (stop - start).abs();
                let n = (span / step + 1e-9).floor() as usize;
                let dir = if stop >= start { 1.0 } else { -1.0 };
                (0..=n)
                    .map(|i| snap(start + dir * step * i as f64))
                    .collect()
            }
            _ => {
                return Err(self.fail(
                    section,
                    "values",
                    "give either `values` or all of `start`, `stop`, `step`",
                ));
            }
        };
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(self.fail(section, "values", format!("must be finite, got {v}")));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        Ok(values)
    }

    /// Sweep variable and its points in increasing order.
    pub fn sweep_points(&self) -> Result<(SweepVariable, Vec<f64>)> {
        if self.sweep.p.is_some() {
            Ok((SweepVariable::P, self.expand_range("sweep.p")?))
        } else {
            Ok((SweepVariable::Qc, self.expand_range("sweep.qc")?))
        }
    }

    pub fn spec(&self) -> HybridStateSpec {
        HybridStateSpec::new(self.state.ell1, self.state.ell2)
            .with_delta(self.state.delta)
            .with_waist(self.state.waist)
    }

    pub fn half_width(&self) -> f64 {
        self.grid.half_width.unwrap_or(5.0 * self.state.waist)
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        Ok(GridSpec::new(self.half_width(), self.grid.samples)?
            .with_envelope_cutoff(self.grid.envelope_cutoff))
    }

    /// Generator without added noise; sweeps and `tomo` set the noise rate.
    pub fn count_model(&self) -> CountModel {
        let t = &self.tomography;
        CountModel {
            pair_rate: t.pair_rate,
            coincidence_window: t.coincidence_window,
            duration: t.duration,
            ..CountModel::default()
        }
        .with_sampling(t.sampling.into(), t.seed)
    }

    pub fn mle_options(&self) -> MleOptions {
        MleOptions {
            max_iters: self.tomography.mle_max_iters,
            tol: self.tomography.mle_tol,
            ..MleOptions::default()
        }
    }
}

/// Nearest double to the value rounded at 12 decimals, so that ranges built
/// from `0.1` steps print as `0.3` and not `0.30000000000000004`.
fn snap(v: f64) -> f64 {
    format!("{v:.12}").parse().unwrap_or(v)
}

fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// 1-based line of `key` inside `[section]`, or of the section header when
/// the key is absent.
fn line_of(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line
                .trim_matches(|c| c == '[' || c == ']')
                .trim()
                .to_string();
            if current == section {
                header = Some(i + 1);
            }
            continue;
        }
        if current == section && !key.is_empty() {
            if let Some(rest) = line.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
    }
    header
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = Config::parse("").unwrap();
        assert_eq!(cfg.state, StateConfig::default());
        assert_eq!(cfg.half_width(), 5.0);
        let (var, points) = cfg.sweep_points().unwrap();
        assert_eq!(var, SweepVariable::P);
        assert_eq!(points.len(), 11);
        assert_eq!(points[3], 0.3);
    }

    #[test]
    fn descending_range_is_sorted() {
        let cfg = Config::parse("[sweep.p]\nstart = 1.0\nstop = 0.0\nstep = 0.25\n").unwrap();
        assert_eq!(
            cfg.sweep_points().unwrap().1,
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
    }

    #[test]
    fn both_sweep_variables_rejected_with_line() {
        let text = "[sweep]\npipeline = \"analytic\"\n[sweep.p]\nvalues = [0.5]\n[sweep.qc]\nvalues = [2.0]\n";
        match Config::parse(text) {
            Err(CliError::Config { line, message }) => {
                assert_eq!(line, Some(5));
                assert!(message.contains("exactly one"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn out_of_range_weight_reports_its_line() {
        let text = "[state]\nell1 = 0\nell2 = 2\np = 1.5\n";
        match Config::parse(text) {
            Err(CliError::Config { line, .. }) => assert_eq!(line, Some(4)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let err = Config::parse("[grid]\nsamples = 64\nbogus = 1\n").unwrap_err();
        assert!(
            matches!(err, CliError::Config { line: Some(3), .. }),
            "{err}"
        );
    }

    #[test]
    fn qc_below_one_rejected() {
        assert!(Config::parse("[sweep.qc]\nvalues = [0.5, 2.0]\n").is_err());
    }

    #[test]
    fn degenerate_gallery_spec_rejected() {
        assert!(Config::parse("[gallery]\nspecs = [[2, -2]]\n").is_err());
    }

    #[test]
    fn empty_resolutions_rejected() {
        assert!(Config::parse("[converge]\nresolutions = []\n").is_err());
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = Config::parse("").unwrap();
        cfg.apply_overrides(Some(9), Some(PathBuf::from("x")), true);
        assert_eq!(cfg.tomography.seed, 9);
        assert_eq!(cfg.output.dir, PathBuf::from("x"));
        assert_eq!(cfg.count_model().sampling, Sampling::Deterministic);
    }
}
