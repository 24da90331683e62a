use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::biphoton::DensityMatrix4;
use crate::error::{ensure_finite, Error, Result};
use crate::linalg::{kron, pauli, trace_product, Mat4};

use super::settings::{Eigen, MeasurementSetting, PauliBasis, QubitProjector};

/// Stand-in for an unbounded quantum contrast (no accidentals at all).
pub const CONTRAST_CAP: f64 = 1e12;

/// How counts are drawn from their expectations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// Counts equal their expectation values (not rounded).
    #[default]
    Deterministic,
    /// Each count is an independent Poisson draw.
    Poisson,
}

impl fmt::Display for Sampling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sampling::Deterministic => "deterministic",
            Sampling::Poisson => "poisson",
        })
    }
}

impl FromStr for Sampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "deterministic" => Ok(Sampling::Deterministic),
            "poisson" => Ok(Sampling::Poisson),
            other => Err(Error::InvalidParameter {
                name: "sampling",
                reason: format!("expected `deterministic` or `poisson`, got `{other}`"),
            }),
        }
    }
}

/// Source and detection parameters of the count generator. Rates in Hz,
/// times in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountModel {
    pub pair_rate: f64,
    /// Flat (setting-independent) noise singles on photon A's detector.
    pub noise_rate_a: f64,
    pub noise_rate_b: f64,
    pub coincidence_window: f64,
    pub duration: f64,
    pub sampling: Sampling,
    pub seed: u64,
}

impl Default for CountModel {
    fn default() -> Self {
        CountModel {
            pair_rate: 1e5,
            noise_rate_a: 0.0,
            noise_rate_b: 0.0,
            coincidence_window: 25e-9,
            duration: 1.0,
            sampling: Sampling::Deterministic,
            seed: 0,
        }
    }
}

impl CountModel {
    /// Same noise rate on both detectors.
    pub fn with_noise_rate(mut self, rate: f64) -> Self {
        self.noise_rate_a = rate;
        self.noise_rate_b = rate;
        self
    }

    pub fn with_sampling(mut self, sampling: Sampling, seed: u64) -> Self {
        self.sampling = sampling;
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (v, name) in [
            (self.pair_rate, "pair_rate"),
            (self.noise_rate_a, "noise_rate_a"),
            (self.noise_rate_b, "noise_rate_b"),
            (self.coincidence_window, "coincidence_window"),
            (self.duration, "duration"),
        ] {
            ensure_finite(v, name)?;
            if v < 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be non-negative, got {v}"),
                });
            }
        }
        for (v, name) in [
            (self.coincidence_window, "coincidence_window"),
            (self.duration, "duration"),
        ] {
            if v == 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must be positive".into(),
                });
            }
        }
        Ok(())
    }

    /// The state whose Born probabilities the expected coincidences follow:
    /// `R ρ + T (R ρ_A + n_A 1) ⊗ (R ρ_B + n_B 1)`, normalized.
    pub fn effective_state(&self, rho: &DensityMatrix4) -> Result<DensityMatrix4> {
        self.validate()?;
        let (rho_a, rho_b) = marginals(rho.matrix());
        let id = pauli(0);
        let c = |x: f64| num_complex::Complex64::new(x, 0.0);
        let m_a = rho_a * c(self.pair_rate) + id * c(self.noise_rate_a);
        let m_b = rho_b * c(self.pair_rate) + id * c(self.noise_rate_b);
        let m = rho.matrix() * c(self.pair_rate) + kron(&m_a, &m_b) * c(self.coincidence_window);
        DensityMatrix4::normalized(&m)
    }
}

/// Reduced states `(ρ_A, ρ_B)`.
fn marginals(m: &Mat4) -> (crate::linalg::Mat2, crate::linalg::Mat2) {
    let a = crate::linalg::Mat2::from_fn(|i, j| m[(2 * i, 2 * j)] + m[(2 * i + 1, 2 * j + 1)]);
    let b = crate::linalg::Mat2::from_fn(|i, j| m[(i, j)] + m[(2 + i, 2 + j)]);
    (a, b)
}

/// Counts recorded for one projector setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettingCounts {
    pub setting: MeasurementSetting,
    /// Coincidences `C`, accidentals included.
    pub coincidences: f64,
    /// Singles `A` on photon A's detector.
    pub singles_a: f64,
    pub singles_b: f64,
}

/// Counts for a set of projector settings together with the timing and
/// generator parameters that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct TomographyRecord {
    pub entries: Vec<SettingCounts>,
    /// Coincidence window `T`.
    pub coincidence_window: f64,
    pub duration: f64,
    pub pair_rate: f64,
    pub noise_rate_a: f64,
    pub noise_rate_b: f64,
    pub sampling: Sampling,
    pub seed: u64,
}

const COLUMNS: [&str; 7] = ["basis_A", "eigen_A", "basis_B", "eigen_B", "C", "A", "B"];

impl TomographyRecord {
    pub fn validate(&self) -> Result<()> {
        for (v, name) in [(self.coincidence_window, "T"), (self.duration, "duration")] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Record(format!("`{name}` must be positive, got {v}")));
            }
        }
        for e in &self.entries {
            for v in [e.coincidences, e.singles_a, e.singles_b] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::Record(format!(
                        "setting {}{}: count {v} is not a non-negative number",
                        e.setting.a, e.setting.b
                    )));
                }
            }
        }
        Ok(())
    }

    /// Coincidences normalized within each of the nine basis pairs.
    pub fn frequencies(&self) -> Result<Vec<f64>> {
        let mut totals = [0.0; 9];
        for e in &self.entries {
            totals[e.setting.basis_pair()] += e.coincidences;
        }
        self.entries
            .iter()
            .map(|e| {
                let t = totals[e.setting.basis_pair()];
                if t > 0.0 {
                    Ok(e.coincidences / t)
                } else {
                    Err(Error::Record(format!(
                        "no coincidences in basis pair {}{}",
                        e.setting.a.basis, e.setting.b.basis
                    )))
                }
            })
            .collect()
    }

    pub fn total_coincidences(&self) -> f64 {
        self.entries.iter().map(|e| e.coincidences).sum()
    }

    /// Metadata lines (`# key = value`) followed by one CSV row per setting.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# T = {}", self.coincidence_window)?;
        writeln!(w, "# duration = {}", self.duration)?;
        writeln!(w, "# seed = {}", self.seed)?;
        writeln!(w, "# pair_rate = {}", self.pair_rate)?;
        writeln!(w, "# noise_rate_A = {}", self.noise_rate_a)?;
        writeln!(w, "# noise_rate_B = {}", self.noise_rate_b)?;
        writeln!(w, "# sampling = {}", self.sampling)?;
        let mut out = csv::Writer::from_writer(w);
        out.write_record(COLUMNS)?;
        for e in &self.entries {
            out.write_record([
                e.setting.a.basis.to_string(),
                e.setting.a.eigen.to_string(),
                e.setting.b.basis.to_string(),
                e.setting.b.eigen.to_string(),
                e.coincidences.to_string(),
                e.singles_a.to_string(),
                e.singles_b.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut reader = BufReader::new(r);
        let mut meta = std::collections::HashMap::new();
        let mut header = String::new();
        loop {
            header.clear();
            if reader.read_line(&mut header)? == 0 {
                return Err(Error::Record("missing column header".into()));
            }
            let Some(rest) = header.trim().strip_prefix('#') else {
                break;
            };
            let (k, v) = rest.split_once('=').ok_or_else(|| {
                Error::Record(format!("malformed metadata line `{}`", header.trim()))
            })?;
            meta.insert(k.trim().to_string(), v.trim().to_string());
        }
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols != COLUMNS {
            return Err(Error::Record(format!(
                "expected columns {COLUMNS:?}, got {cols:?}"
            )));
        }
        let num = |key: &str| -> Result<f64> {
            meta.get(key)
                .ok_or_else(|| Error::Record(format!("missing metadata `{key}`")))?
                .parse()
                .map_err(|_| Error::Record(format!("metadata `{key}` is not a number")))
        };
        let seed = meta
            .get("seed")
            .ok_or_else(|| Error::Record("missing metadata `seed`".into()))?
            .parse()
            .map_err(|_| Error::Record("metadata `seed` is not an integer".into()))?;
        let sampling = match meta.get("sampling") {
            Some(s) => s.parse()?,
            None => Sampling::Deterministic,
        };

        let mut entries = Vec::new();
        let mut rows = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(reader);
        for (line, rec) in rows.records().enumerate() {
            let rec = rec?;
            if rec.len() != COLUMNS.len() {
                return Err(Error::Record(format!(
                    "row {}: expected 7 fields",
                    line + 1
                )));
            }
            let proj = |bi: usize| -> Result<QubitProjector> {
                Ok(QubitProjector::new(
                    rec[bi].parse::<PauliBasis>()?,
                    rec[bi + 1].parse::<Eigen>()?,
                ))
            };
            let val = |i: usize| -> Result<f64> {
                rec[i].trim().parse().map_err(|_| {
                    Error::Record(format!("row {}: `{}` is not a number", line + 1, &rec[i]))
                })
            };
            entries.push(SettingCounts {
                setting: MeasurementSetting {
                    a: proj(0)?,
                    b: proj(2)?,
                },
                coincidences: val(4)?,
                singles_a: val(5)?,
                singles_b: val(6)?,
            });
        }
        let rec = TomographyRecord {
            entries,
            coincidence_window: num("T")?,
            duration: num("duration")?,
            pair_rate: num("pair_rate").unwrap_or(f64::NAN),
            noise_rate_a: num("noise_rate_A").unwrap_or(f64::NAN),
            noise_rate_b: num("noise_rate_B").unwrap_or(f64::NAN),
            sampling,
            seed,
        };
        rec.validate()?;
        Ok(rec)
    }
}

fn draw(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean)
        .expect("finite positive mean")
        .sample(rng)
}

/// Coincidence and singles counts for each setting:
/// `C = D R Tr[Π ρ] + T A B / D`, `A = D (R Tr[(Π_A ⊗ 1) ρ] + n_A)`.
pub fn simulate_counts(
    rho: &DensityMatrix4,
    settings: &[MeasurementSetting],
    model: &CountModel,
) -> Result<TomographyRecord> {
    model.validate()?;
    rho.ensure_physical()?;
    let m = rho.matrix();
    let id = pauli(0);
    let d = model.duration;
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let entries = settings
        .iter()
        .map(|&setting| {
            let p_ab = trace_product(&setting.projector(), m).re.max(0.0);
            let p_a = trace_product(&kron(&setting.a.projector(), &id), m)
                .re
                .max(0.0);
            let p_b = trace_product(&kron(&id, &setting.b.projector()), m)
                .re
                .max(0.0);
            let singles_a = d * (model.pair_rate * p_a + model.noise_rate_a);
            let singles_b = d * (model.pair_rate * p_b + model.noise_rate_b);
            let signal = d * model.pair_rate * p_ab;
            match model.sampling {
                Sampling::Deterministic => SettingCounts {
                    setting,
                    coincidences: signal + model.coincidence_window * singles_a * singles_b / d,
                    singles_a,
                    singles_b,
                },
                Sampling::Poisson => {
                    let a = draw(&mut rng, singles_a);
                    let b = draw(&mut rng, singles_b);
                    let c = draw(
                        &mut rng,
                        signal + model.coincidence_window * singles_a * singles_b / d,
                    );
                    SettingCounts {
                        setting,
                        coincidences: c,
                        singles_a: a,
                        singles_b: b,
                    }
                }
            }
        })
        .collect();
    Ok(TomographyRecord {
        entries,
        coincidence_window: model.coincidence_window,
        duration: model.duration,
        pair_rate: model.pair_rate,
        noise_rate_a: model.noise_rate_a,
        noise_rate_b: model.noise_rate_b,
        sampling: model.sampling,
        seed: model.seed,
    })
}

/// A quantum-contrast estimate with its bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastEstimate {
    pub value: f64,
    /// Settings that entered the estimate.
    pub used: usize,
    /// Settings skipped because `A·B = 0`.
    pub excluded: usize,
    /// `value` was replaced by [`CONTRAST_CAP`].
    pub capped: bool,
}

/// Per-setting contrast `C / (T a b)` with `a`, `b` the singles rates and
/// `C` the coincidence count per unit time.
fn contrast_terms(rec: &TomographyRecord) -> Result<(Vec<f64>, usize)> {
    rec.validate()?;
    let mut terms = Vec::with_capacity(rec.entries.len());
    let mut excluded = 0;
    for e in &rec.entries {
        if e.singles_a * e.singles_b == 0.0 {
            excluded += 1;
            continue;
        }
        terms.push(
            e.coincidences * rec.duration / (rec.coincidence_window * e.singles_a * e.singles_b),
        );
    }
    if terms.is_empty() {
        return Err(Error::Record("every setting has zero singles".into()));
    }
    Ok((terms, excluded))
}

fn capped(value: f64, used: usize, excluded: usize) -> ContrastEstimate {
    let over = !value.is_finite() || value > CONTRAST_CAP;
    ContrastEstimate {
        value: if over { CONTRAST_CAP } else { value },
        used,
        excluded,
        capped: over,
    }
}

/// Mean per-setting contrast over all settings with nonzero singles.
pub fn average_quantum_contrast(rec: &TomographyRecord) -> Result<ContrastEstimate> {
    let (terms, excluded) = contrast_terms(rec)?;
    let mean = terms.iter().sum::<f64>() / terms.len() as f64;
    Ok(capped(mean, terms.len(), excluded))
}

/// Largest per-setting contrast: the contrast of the best-correlated setting.
pub fn peak_quantum_contrast(rec: &TomographyRecord) -> Result<ContrastEstimate> {
    let (terms, excluded) = contrast_terms(rec)?;
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(capped(max, terms.len(), excluded))
}

/// Generator settings that realize a target noise level on a state with
/// maximally mixed marginals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseTarget {
    /// Pair rate to use (0 when the target is the fully mixed state).
    pub pair_rate: f64,
    /// Noise singles rate for each detector.
    pub noise_rate: f64,
    /// Weight `p` the counts actually encode.
    pub realized_p: f64,
    /// Average contrast the counts will show.
    pub realized_contrast: f64,
    /// The target lay beyond what the coincidence window permits.
    pub clamped: bool,
}

fn check_rates(pair_rate: f64, window: f64) -> Result<()> {
    ensure_finite(pair_rate, "pair_rate")?;
    ensure_finite(window, "coincidence_window")?;
    if pair_rate <= 0.0 || window <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "pair_rate",
            reason: "pair rate and coincidence window must be positive".into(),
        });
    }
    Ok(())
}

fn target_from_singles(pair_rate: f64, window: f64, singles: f64, clamped: bool) -> NoiseTarget {
    let acc = 4.0 * window * singles * singles;
    NoiseTarget {
        pair_rate,
        noise_rate: singles - pair_rate / 2.0,
        realized_p: pair_rate / (pair_rate + acc),
        realized_contrast: 1.0 + pair_rate / acc,
        clamped,
    }
}

fn fully_mixed(pair_rate: f64) -> NoiseTarget {
    NoiseTarget {
        pair_rate: 0.0,
        noise_rate: pair_rate / 2.0,
        realized_p: 0.0,
        realized_contrast: 1.0,
        clamped: false,
    }
}

/// Flat noise rate that makes the counts encode weight `p`.
///
/// Accidentals among the signal singles alone cap the weight at
/// `1/(1 + T R)`; larger targets are clamped to zero added noise. `p = 0`
/// blocks the pairs and keeps the singles level with noise.
pub fn noise_rate_for_weight(p: f64, pair_rate: f64, window: f64) -> Result<NoiseTarget> {
    ensure_finite(p, "p")?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter {
            name: "p",
            reason: format!("must lie in [0, 1], got {p}"),
        });
    }
    check_rates(pair_rate, window)?;
    if p == 0.0 {
        return Ok(fully_mixed(pair_rate));
    }
    let ceiling = 1.0 / (1.0 + window * pair_rate);
    if p >= ceiling {
        return Ok(target_from_singles(
            pair_rate,
            window,
            pair_rate / 2.0,
            p > ceiling,
        ));
    }
    let singles = (pair_rate * (1.0 - p) / (4.0 * window * p)).sqrt();
    Ok(target_from_singles(pair_rate, window, singles, false))
}

/// Flat noise rate that makes [`average_quantum_contrast`] equal `qc`.
pub fn noise_rate_for_contrast(qc: f64, pair_rate: f64, window: f64) -> Result<NoiseTarget> {
    ensure_finite(qc, "Qc")?;
    if qc < 1.0 {
        return Err(Error::ContrastBelowOne(qc));
    }
    check_rates(pair_rate, window)?;
    if qc == 1.0 {
        return Ok(fully_mixed(pair_rate));
    }
    let singles = (pair_rate / (4.0 * window * (qc - 1.0))).sqrt();
    if singles < pair_rate / 2.0 {
        return Ok(target_from_singles(
            pair_rate,
            window,
            pair_rate / 2.0,
            true,
        ));
    }
    Ok(target_from_singles(pair_rate, window, singles, false))
}
