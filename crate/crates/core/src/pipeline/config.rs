use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::clustering::SpectralConfig;
use crate::error::{Error, Result};
use crate::fusion::{BinarizeConfig, FusionMethod};
use crate::io::{read_kv, Report};
use crate::solver::{SolverConfig, StepConstant};

/// Joint group-sparse fit, or one independent fit per modality.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SolverMode {
    #[default]
    Joint,
    Independent,
}

impl FromStr for SolverMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint" => Ok(SolverMode::Joint),
            "independent" => Ok(SolverMode::Independent),
            other => Err(Error::invalid(
                "solver",
                format!("expected joint|independent, got `{other}`"),
            )),
        }
    }
}

impl std::fmt::Display for SolverMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverMode::Joint => "joint",
            SolverMode::Independent => "independent",
        })
    }
}

/// Parameters for generating a dataset when no modality files are given.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthParams {
    pub ambient: Vec<usize>,
    /// Defaults to `k`.
    pub clusters: Option<usize>,
    pub dim: usize,
    pub points: usize,
    pub corruption: f64,
    pub amplitude: f64,
    /// Degrees; `None` disables the angle constraint.
    pub min_angle_deg: Option<f64>,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            ambient: vec![30, 20],
            clusters: None,
            dim: 3,
            points: 60,
            corruption: 0.05,
            amplitude: 0.5,
            min_angle_deg: Some(45.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    /// One CSV per modality; empty means "use the synthesized dataset".
    pub modalities: Vec<PathBuf>,
    /// Ground-truth labels (one per observation), if known.
    pub labels: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub k: usize,
    /// Principal components kept per modality; 0 keeps raw coordinates.
    /// A single value applies to every modality.
    pub pca_dims: Vec<usize>,
    pub solver: SolverConfig,
    pub solver_mode: SolverMode,
    pub fusion: FusionMethod,
    pub binarize: BinarizeConfig,
    pub spectral: SpectralConfig,
    /// Training points per true class; 0 disables the holdout split.
    pub train_per_cluster: usize,
    /// Per-cluster basis dimension per modality; `None` picks
    /// `ceil(dim(t) / k)` where `dim(t)` is the PCA dimension (or ambient).
    pub classifier_dims: Option<Vec<usize>>,
    pub synth: SynthParams,
    pub theorem_budget: usize,
    pub detection_tol: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            modalities: Vec::new(),
            labels: None,
            out: PathBuf::from("rogsure-out"),
            seed: 0,
            k: 4,
            pca_dims: vec![0],
            solver: SolverConfig::default(),
            solver_mode: SolverMode::Joint,
            fusion: FusionMethod::Product,
            binarize: BinarizeConfig::default(),
            spectral: SpectralConfig::default(),
            train_per_cluster: 30,
            classifier_dims: None,
            synth: SynthParams::default(),
            theorem_budget: crate::theory::DEFAULT_BUDGET,
            detection_tol: 1e-5,
        }
    }
}

fn value<T: FromStr>(key: &'static str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::invalid(key, format!("cannot parse `{raw}`")))
}

fn list<T: FromStr>(key: &'static str, raw: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| value(key, s))
        .collect()
}

fn auto_or<T: FromStr>(key: &'static str, raw: &str) -> Result<Option<T>> {
    if raw == "auto" {
        Ok(None)
    } else {
        value(key, raw).map(Some)
    }
}

fn step(key: &'static str, raw: &str) -> Result<StepConstant> {
    Ok(auto_or(key, raw)?.map_or(StepConstant::Auto, StepConstant::Fixed))
}

fn fmt_step(s: StepConstant) -> String {
    match s {
        StepConstant::Auto => "auto".into(),
        StepConstant::Fixed(v) => v.to_string(),
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl PipelineConfig {
    /// Read a config file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<PipelineConfig> {
        let path = path.as_ref();
        let base = path.parent().unwrap_or(Path::new("."));
        let mut cfg = PipelineConfig::default();
        for (key, raw) in read_kv(path)? {
            cfg.set(&key, &raw, base).map_err(|e| match e {
                Error::InvalidArgument { name, reason } => Error::Parse {
                    path: path.to_path_buf(),
                    line: 0,
                    column: 0,
                    message: format!("{name}: {reason}"),
                },
                other => other,
            })?;
        }
        Ok(cfg)
    }

    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, raw: &str, base: &Path) -> Result<()> {
        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        match key {
            "modalities" => {
                self.modalities = raw
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(resolve)
                    .collect()
            }
            "labels" => self.labels = (!raw.is_empty()).then(|| resolve(raw)),
            "out" => self.out = resolve(raw),
            "seed" => self.seed = value("seed", raw)?,
            "k" => self.k = value("k", raw)?,
            "pca_dims" => self.pca_dims = list("pca_dims", raw)?,
            "solver" => self.solver_mode = raw.parse()?,
            "rho" => self.solver.rho = value("rho", raw)?,
            "lambda" => self.solver.lambda = auto_or("lambda", raw)?,
            "mu0" => self.solver.mu0 = value("mu0", raw)?,
            "growth" => self.solver.growth = value("growth", raw)?,
            "eta_w" => self.solver.eta_w = step("eta_w", raw)?,
            "eta_e" => self.solver.eta_e = step("eta_e", raw)?,
            "max_iters" => self.solver.max_iters = value("max_iters", raw)?,
            "tol_residual" => self.solver.tol_residual = value("tol_residual", raw)?,
            "tol_change" => self.solver.tol_change = value("tol_change", raw)?,
            "normalize_columns" => self.solver.normalize_columns = value("normalize_columns", raw)?,
            "fusion" => self.fusion = raw.parse()?,
            "median_domain" => self.binarize.domain = raw.parse()?,
            "zero_tol" => self.binarize.zero_tol = value("zero_tol", raw)?,
            "affinity" => self.spectral.affinity = raw.parse()?,
            "laplacian" => self.spectral.laplacian = raw.parse()?,
            "normalize_rows" => self.spectral.normalize_rows = value("normalize_rows", raw)?,
            "kmeans_restarts" => self.spectral.kmeans.restarts = value("kmeans_restarts", raw)?,
            "kmeans_max_iters" => self.spectral.kmeans.max_iters = value("kmeans_max_iters", raw)?,
            "train_per_cluster" => self.train_per_cluster = value("train_per_cluster", raw)?,
            "classifier_dims" => {
                self.classifier_dims = if raw == "auto" {
                    None
                } else {
                    Some(list("classifier_dims", raw)?)
                }
            }
            "synth_ambient" => self.synth.ambient = list("synth_ambient", raw)?,
            "synth_clusters" => self.synth.clusters = auto_or("synth_clusters", raw)?,
            "synth_dim" => self.synth.dim = value("synth_dim", raw)?,
            "synth_points" => self.synth.points = value("synth_points", raw)?,
            "synth_corruption" => self.synth.corruption = value("synth_corruption", raw)?,
            "synth_amplitude" => self.synth.amplitude = value("synth_amplitude", raw)?,
            "synth_min_angle" => {
                let deg: f64 = value("synth_min_angle", raw)?;
                self.synth.min_angle_deg = (deg > 0.0).then_some(deg);
            }
            "theorem_budget" => self.theorem_budget = value("theorem_budget", raw)?,
            "detection_tol" => self.detection_tol = value("detection_tol", raw)?,
            _ => return Err(Error::invalid("config", format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("k", "must be at least 1"));
        }
        self.solver.validate()?;
        if self.spectral.kmeans.restarts == 0 {
            return Err(Error::invalid("kmeans_restarts", "must be positive"));
        }
        if self.theorem_budget == 0 {
            return Err(Error::invalid("theorem_budget", "must be positive"));
        }
        if self.detection_tol.is_nan() || self.detection_tol < 0.0 {
            return Err(Error::invalid("detection_tol", "must be nonnegative"));
        }
        Ok(())
    }

    /// PCA dimension for modality `t` (0 = none).
    pub fn pca_dim(&self, t: usize) -> usize {
        match self.pca_dims.as_slice() {
            [] => 0,
            [single] => *single,
            dims => dims.get(t).copied().unwrap_or(0),
        }
    }

    /// Effective settings as an ordered report (paths excluded so that runs
    /// in different directories compare equal).
    pub fn snapshot(&self) -> Report {
        let mut r = Report::new();
        r.set("modalities", self.modalities.len())
            .set("labels", self.labels.is_some())
            .set("seed", self.seed)
            .set("k", self.k)
            .set("pca_dims", join(&self.pca_dims))
            .set("solver", self.solver_mode)
            .set("rho", self.solver.rho)
            .set(
                "lambda",
                self.solver.lambda.map_or("auto".to_string(), |l| l.to_string()),
            )
            .set("mu0", self.solver.mu0)
            .set("growth", self.solver.growth)
            .set("eta_w", fmt_step(self.solver.eta_w))
            .set("eta_e", fmt_step(self.solver.eta_e))
            .set("max_iters", self.solver.max_iters)
            .set("tol_residual", self.solver.tol_residual)
            .set("tol_change", self.solver.tol_change)
            .set("normalize_columns", self.solver.normalize_columns)
            .set("fusion", self.fusion)
            .set("median_domain", format!("{:?}", self.binarize.domain))
            .set("zero_tol", self.binarize.zero_tol)
            .set("affinity", format!("{:?}", self.spectral.affinity))
            .set("laplacian", format!("{:?}", self.spectral.laplacian))
            .set("normalize_rows", self.spectral.normalize_rows)
            .set("kmeans_restarts", self.spectral.kmeans.restarts)
            .set("kmeans_max_iters", self.spectral.kmeans.max_iters)
            .set("train_per_cluster", self.train_per_cluster)
            .set(
                "classifier_dims",
                self.classifier_dims.as_deref().map_or("auto".to_string(), join),
            );
        if self.modalities.is_empty() {
            r.set("synth_ambient", join(&self.synth.ambient))
                .set("synth_clusters", self.synth.clusters.unwrap_or(self.k))
                .set("synth_dim", self.synth.dim)
                .set("synth_points", self.synth.points)
                .set("synth_corruption", self.synth.corruption)
                .set("synth_amplitude", self.synth.amplitude)
                .set("synth_min_angle", self.synth.min_angle_deg.unwrap_or(0.0));
        }
        r.set("theorem_budget", self.theorem_budget)
            .set("detection_tol", self.detection_tol);
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(
            &path,
            "# demo\nmodalities = a.csv, b.csv\nk = 3\nfusion = sum\nlambda = auto\nrho = 0.2\npca_dims = 12\nsynth_min_angle = 0\n",
        )
        .unwrap();
        let cfg = PipelineConfig::load(&path).unwrap();
        assert_eq!(cfg.modalities, vec![dir.path().join("a.csv"), dir.path().join("b.csv")]);
        assert_eq!(cfg.k, 3);
        assert_eq!(cfg.fusion, FusionMethod::Sum);
        assert_eq!(cfg.solver.lambda, None);
        assert_eq!(cfg.solver.rho, 0.2);
        assert_eq!((cfg.pca_dim(0), cfg.pca_dim(1)), (12, 12));
        assert_eq!(cfg.synth.min_angle_deg, None);

        std::fs::write(&path, "bogus = 1\n").unwrap();
        assert!(PipelineConfig::load(&path).is_err());
        std::fs::write(&path, "k = many\n").unwrap();
        assert!(PipelineConfig::load(&path).is_err());
    }

    #[test]
    fn snapshot_is_stable() {
        let a = PipelineConfig::default().snapshot().render();
        assert_eq!(a, PipelineConfig::default().snapshot().render());
        assert!(a.starts_with("modalities = 0\n"));
        let bad = PipelineConfig {
            k: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
