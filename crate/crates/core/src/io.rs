//! On-disk formats: binary snapshots, the TOML run configuration and the
//! CSV tables written by the runner.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::WvRow;
use crate::equations::{soliton, CoefficientSet, Preset};
use crate::error::{Error, Result};
use crate::hamiltonian::InvariantReport;
use crate::integrators::{Scheme, StepConfig};
use crate::noise::{NoiseModel, PhiProfile};
use crate::spectral::{Grid, GridField};

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"KDV2";
pub const SNAPSHOT_VERSION: u16 = 1;
/// magic, version, n_points, length, time.
pub const SNAPSHOT_HEADER_LEN: usize = 4 + 2 + 4 + 8 + 8;

/// A decoded snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub length: f64,
    pub time: f64,
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn of(field: &GridField, time: f64) -> Self {
        Self { length: field.grid().length(), time, values: field.physical_values() }
    }

    pub fn n_points(&self) -> usize {
        self.values.len()
    }

    pub fn to_field(&self) -> Result<GridField> {
        let g = Grid::new(self.values.len(), self.length)?;
        Ok(GridField::physical(g, self.values.clone()))
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(SNAPSHOT_HEADER_LEN + 8 * self.values.len());
        out.extend_from_slice(&SNAPSHOT_MAGIC);
        out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.values.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.length.to_le_bytes());
        out.extend_from_slice(&self.time.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Parses a snapshot; the payload must hold exactly `n_points` samples.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < SNAPSHOT_HEADER_LEN {
            return Err(Error::Format(format!("snapshot too short: {} bytes", bytes.len())));
        }
        if bytes[..4] != SNAPSHOT_MAGIC {
            return Err(Error::Format("bad snapshot magic".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != SNAPSHOT_VERSION {
            return Err(Error::Format(format!("unsupported snapshot version {version}")));
        }
        let n = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
        let length = f64::from_le_bytes(bytes[10..18].try_into().expect("8 bytes"));
        let time = f64::from_le_bytes(bytes[18..26].try_into().expect("8 bytes"));
        let payload = &bytes[SNAPSHOT_HEADER_LEN..];
        let want = n.checked_mul(8).ok_or_else(|| Error::Format("n_points overflows".into()))?;
        if payload.len() != want {
            return Err(Error::Format(format!(
                "snapshot declares {n} points but carries {} payload bytes",
                payload.len()
            )));
        }
        let values =
            payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        Ok(Self { length, time, values })
    }
}

pub fn write_snapshot(path: &Path, field: &GridField, time: f64) -> Result<()> {
    fs::write(path, Snapshot::of(field, time).encode())?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    Snapshot::decode(&fs::read(path)?)
}

/// Initial condition of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialCondition {
    /// `(c/2) sech^2(sqrt(c) (x - x0) / 2)`; `x0` defaults to the domain centre.
    Soliton {
        c: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<f64>,
    },
    /// `amp exp(-(x - x0)^2 / width^2)`.
    Gaussian {
        amp: f64,
        width: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<f64>,
    },
    /// `amp sin(2 pi mode x / L)`.
    Sine { amp: f64, mode: u32 },
    Zero,
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::Soliton { c: 1.0, x0: None }
    }
}

impl InitialCondition {
    pub fn build(&self, grid: &Grid) -> Result<GridField> {
        let l = grid.length();
        match *self {
            InitialCondition::Soliton { c, x0 } => soliton(grid, c, x0.unwrap_or(l / 2.0)),
            InitialCondition::Gaussian { amp, width, x0 } => {
                if !(width > 0.0) {
                    return Err(Error::Usage(format!("gaussian width must be positive, got {width}")));
                }
                let x0 = x0.unwrap_or(l / 2.0);
                Ok(grid.sample(|x| {
                    let d = crate::equations::periodic_offset(x, x0, l) / width;
                    amp * (-d * d).exp()
                }))
            }
            InitialCondition::Sine { amp, mode } => {
                let k = 2.0 * std::f64::consts::PI * mode as f64 / l;
                Ok(grid.sample(|x| amp * (k * x).sin()))
            }
            InitialCondition::Zero => Ok(GridField::zeros(grid.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 512, length: 64.0 * std::f64::consts::PI }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquationConfig {
    pub alpha: f64,
    pub beta: f64,
    pub fifth_order: bool,
}

impl Default for EquationConfig {
    fn default() -> Self {
        Self { alpha: 0.1, beta: 0.1, fifth_order: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub amp: f64,
    pub decay: f64,
    pub include_mean_mode: bool,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { amp: 0.0, decay: 4.0, include_mean_mode: false, seed: 0 }
    }
}

impl NoiseConfig {
    pub fn model(&self) -> NoiseModel {
        NoiseModel {
            profile: PhiProfile::Algebraic { amp: self.amp, decay: self.decay },
            include_mean_mode: self.include_mean_mode,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepSection {
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    pub snapshot_stride: usize,
    pub blowup_threshold: f64,
}

impl Default for StepSection {
    fn default() -> Self {
        Self { dt: 1e-3, t_final: 1.0, scheme: Scheme::Etd4, snapshot_stride: 100, blowup_threshold: 1e6 }
    }
}

impl StepSection {
    pub fn config(&self) -> StepConfig {
        StepConfig {
            dt: self.dt,
            t_final: self.t_final,
            scheme: self.scheme,
            snapshot_stride: self.snapshot_stride,
            blowup_threshold: self.blowup_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardSection {
    pub sigma: f64,
    pub t_horizon: f64,
    pub iters: usize,
    pub kappa: f64,
}

impl Default for PicardSection {
    fn default() -> Self {
        Self { sigma: 0.8, t_horizon: 0.25, iters: 30, kappa: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NitCheckSection {
    pub alphas: Vec<f64>,
    pub t_final: f64,
    pub dt: f64,
}

impl Default for NitCheckSection {
    fn default() -> Self {
        Self { alphas: vec![0.1, 0.05, 0.025], t_final: 1.0, dt: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseCheckSection {
    pub sigma_tilde: f64,
    pub epsilon: f64,
    pub paths: usize,
    pub grids: Vec<usize>,
    pub length: f64,
    pub dt: f64,
    pub t_final: f64,
}

impl Default for NoiseCheckSection {
    fn default() -> Self {
        let d = crate::analysis::WvStudyConfig::default();
        Self {
            sigma_tilde: 0.9,
            epsilon: 0.5,
            paths: 200,
            grids: vec![128, 256, 512],
            length: d.length,
            dt: d.dt,
            t_final: d.t_final,
        }
    }
}

/// Everything a run needs; written back as `config.resolved`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Preset,
    pub ensemble: usize,
    pub out: String,
    pub init: InitialCondition,
    pub grid: GridConfig,
    pub equation: EquationConfig,
    pub noise: NoiseConfig,
    pub step: StepSection,
    pub picard: PicardSection,
    pub nit_check: NitCheckSection,
    pub noise_check: NoiseCheckSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: Preset::Kdv,
            ensemble: 1,
            out: "run".into(),
            init: InitialCondition::default(),
            grid: GridConfig::default(),
            equation: EquationConfig::default(),
            noise: NoiseConfig::default(),
            step: StepSection::default(),
            picard: PicardSection::default(),
            nit_check: NitCheckSection::default(),
            noise_check: NoiseCheckSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Usage(format!("invalid config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.n, self.grid.length)
    }

    pub fn coefficients(&self) -> Result<CoefficientSet> {
        Ok(CoefficientSet::preset(self.preset, self.equation.alpha, self.equation.beta)?
            .with_fifth_order(self.equation.fifth_order))
    }

    pub fn noise_model(&self) -> NoiseModel {
        self.noise.model()
    }

    pub fn step_config(&self) -> StepConfig {
        self.step.config()
    }

    /// Checks every field used by `run` and `ensemble`.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        self.coefficients()?;
        self.noise_model().validate()?;
        self.step_config().validate()?;
        if self.ensemble == 0 {
            return Err(Error::Usage("ensemble size must be at least 1".into()));
        }
        self.init.build(&grid)?;
        Ok(())
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(csv_error)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("csv: {other:?}")),
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// `t,mass,l2,hamiltonian,mass_drift,l2_drift,h_drift`.
pub fn write_invariants_csv(path: &Path, rows: &[InvariantReport]) -> Result<()> {
    write_rows(path, rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardRow {
    pub iterate: usize,
    pub diff: f64,
    /// `diff_m / diff_{m-1}`; empty for the first iterate.
    pub ratio: Option<f64>,
}

pub fn picard_rows(diffs: &[f64]) -> Vec<PicardRow> {
    diffs
        .iter()
        .enumerate()
        .map(|(i, &d)| PicardRow {
            iterate: i + 1,
            diff: d,
            ratio: if i == 0 || diffs[i - 1] == 0.0 { None } else { Some(d / diffs[i - 1]) },
        })
        .collect()
}

/// `iterate,diff,ratio`.
pub fn write_picard_csv(path: &Path, diffs: &[f64]) -> Result<()> {
    write_rows(path, &picard_rows(diffs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NitCheckRow {
    pub alpha: f64,
    pub beta: f64,
    pub error_sup: f64,
    pub slope_estimate: f64,
}

/// `alpha,beta,error_sup,slope_estimate`.
pub fn write_nit_check_csv(path: &Path, rows: &[NitCheckRow]) -> Result<()> {
    write_rows(path, rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WvNormsRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub norm_a: f64,
    pub norm_b: f64,
    pub xhat_1: f64,
    pub xhat_2: f64,
    pub xhat_3: f64,
}

impl From<&WvRow> for WvNormsRow {
    fn from(r: &WvRow) -> Self {
        Self { n: r.n, norm_a: r.norm_a, norm_b: r.norm_b, xhat_1: r.xhat[0], xhat_2: r.xhat[1], xhat_3: r.xhat[2] }
    }
}

/// `N,norm_a,norm_b,xhat_1,xhat_2,xhat_3`.
pub fn write_wv_norms_csv(path: &Path, rows: &[WvRow]) -> Result<()> {
    let rows: Vec<WvNormsRow> = rows.iter().map(WvNormsRow::from).collect();
    write_rows(path, &rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRow {
    pub quantity: String,
    pub mean: f64,
    pub variance: f64,
    pub members: usize,
}

/// `quantity,mean,variance,members`.
pub fn write_ensemble_csv(path: &Path, rows: &[EnsembleRow]) -> Result<()> {
    write_rows(path, rows)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| Error::Format(e.to_string()))?;
    f.write_all(b"\n")?;
    Ok(())
}
