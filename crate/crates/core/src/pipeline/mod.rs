//! End-to-end driver: every stage reads its inputs from, and writes its
//! outputs to, one output directory, so stages can run separately or chained.
//!
//! Layout of the output directory:
//!
//! ```text
//! data/modality_<t>.csv  data/clean_<t>.csv  data/labels.csv  data/mask_<t>.csv   (synth)
//! split/train.txt  split/test.txt  pca/basis_<t>.csv                                (fit)
//! fit/W_<t>.csv  fit/E_<t>.csv  fit/W_<t>.svg  fit/residuals.csv  fit_report.txt     (fit)
//! fuse/B_<t>.csv  fuse/W_fused.csv  fuse/W_fused.svg  fuse_report.txt                (fuse)
//! cluster/labels.csv  cluster_report.txt                                           (cluster)
//! classify/labels.csv  classify_report.txt                                        (classify)
//! theorem_report.txt                                                        (check-theorem)
//! eval_report.txt                                                                   (eval)
//! run_record.txt  manifest.txt
//! ```
//!
//! Reports never contain timings or absolute paths; those go to
//! `run_record.txt` only.

mod config;

pub use config::{PipelineConfig, SolverMode, SynthParams};

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::classify::{build_cluster_model, classify_batch};
use crate::clustering::{spectral_cluster, SpectralConfig};
use crate::error::{Error, Result};
use crate::fusion::{binarize, fuse_product, fuse_sum, FusedCoefficients, FusionMethod};
use crate::io::{
    format_value, load_matrix_csv, read_kv, read_labels, render_heatmap, save_labels, save_matrix_csv, Manifest, Report,
};
use crate::linalg::{Matrix, ModalityStack, Pca};
use crate::metrics::{clustering_accuracy, score_with_mapping, EvalReport};
use crate::seed;
use crate::solver::{fit_clean, fit_each_modality, fit_rogsure, SolverConfig, SolverResult};
use crate::synth::{generate_uos, stratified_indices, UoSSpec};
use crate::theory::{check_detection_property, estimate_bases, evaluate_condition, TheoremReport};

#[derive(Clone, Debug, PartialEq)]
pub struct StageTiming {
    pub stage: &'static str,
    pub seconds: f64,
}

/// What one invocation did: settings, timings, results and emitted files.
#[derive(Clone, Debug, Default)]
pub struct RunRecord {
    pub config: Report,
    pub timings: Vec<StageTiming>,
    /// Largest per-modality relative residual after each solver iteration.
    pub residual_history: Vec<f64>,
    /// Clustering of the training points against ground truth.
    pub train_eval: Option<EvalReport>,
    /// Held-out classification against ground truth.
    pub test_eval: Option<EvalReport>,
    pub theorem: Option<TheoremReport>,
    /// Stage reports in execution order.
    pub reports: Vec<(&'static str, Report)>,
    pub manifest: Manifest,
}

impl RunRecord {
    pub fn report(&self, stage: &str) -> Option<&Report> {
        self.reports.iter().find(|(s, _)| *s == stage).map(|(_, r)| r)
    }

    fn render(&self) -> String {
        let mut r = Report::new();
        r.extend("config.", &self.config);
        for t in &self.timings {
            r.set(format!("timing.{}.seconds", t.stage), format!("{:.6}", t.seconds));
        }
        r.set("residual_history.len", self.residual_history.len());
        if let Some(last) = self.residual_history.last() {
            r.set_f64("residual_history.last", *last);
        }
        for (stage, report) in &self.reports {
            r.extend(&format!("{stage}."), report);
        }
        for e in &self.manifest.entries {
            r.set(format!("artifact.{}", e.name), &e.sha256);
        }
        r.render()
    }
}

/// Shared state of one invocation.
struct Run<'a> {
    cfg: &'a PipelineConfig,
    root: PathBuf,
    record: RunRecord,
}

impl<'a> Run<'a> {
    fn start(cfg: &'a PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let root = cfg.out.clone();
        std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        let manifest_path = root.join("manifest.txt");
        let manifest = if manifest_path.exists() {
            let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
            Manifest::parse(&text)?
        } else {
            Manifest::default()
        };
        Ok(Run {
            cfg,
            root,
            record: RunRecord {
                config: cfg.snapshot(),
                manifest,
                ..Default::default()
            },
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn prepare(&self, name: &str) -> Result<PathBuf> {
        let path = self.path(name);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        Ok(path)
    }

    fn emit(&mut self, name: &str, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        let path = self.prepare(name)?;
        write(&path)?;
        self.record.manifest.record(&self.root, name)
    }

    fn emit_matrix(&mut self, name: &str, m: &Matrix) -> Result<()> {
        self.emit(name, |p| save_matrix_csv(m, p))
    }

    fn emit_labels(&mut self, name: &str, labels: &[usize]) -> Result<()> {
        self.emit(name, |p| save_labels(labels, p))
    }

    fn emit_report(&mut self, stage: &'static str, report: Report) -> Result<()> {
        self.emit(&format!("{stage}_report.txt"), |p| report.write(p))?;
        self.record.reports.retain(|(s, _)| *s != stage);
        self.record.reports.push((stage, report));
        Ok(())
    }

    fn require(&self, name: &str, producer: &'static str) -> Result<PathBuf> {
        let path = self.path(name);
        if path.exists() {
            Ok(path)
        } else {
            Err(Error::MissingArtifact { path, producer })
        }
    }

    fn timed<T>(&mut self, stage: &'static str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f(self).map_err(|e| e.in_stage(stage))?;
        self.record.timings.push(StageTiming {
            stage,
            seconds: start.elapsed().as_secs_f64(),
        });
        Ok(out)
    }

    fn finish(self) -> Result<RunRecord> {
        let manifest_path = self.path("manifest.txt");
        std::fs::write(&manifest_path, self.record.manifest.render()).map_err(|e| Error::io(&manifest_path, e))?;
        let record_path = self.path("run_record.txt");
        std::fs::write(&record_path, self.record.render()).map_err(|e| Error::io(&record_path, e))?;
        Ok(self.record)
    }

    // ---- inputs ----------------------------------------------------------

    fn synthesized(&self) -> bool {
        self.cfg.modalities.is_empty()
    }

    fn data_paths(&self, clean: bool) -> Result<Vec<PathBuf>> {
        if !self.synthesized() {
            return Ok(self.cfg.modalities.clone());
        }
        let prefix = if clean { "clean" } else { "modality" };
        let count = self.cfg.synth.ambient.len();
        (0..count)
            .map(|t| self.require(&format!("data/{prefix}_{t}.csv"), "synth"))
            .collect()
    }

    fn load_data(&self, clean: bool) -> Result<ModalityStack> {
        let paths = self.data_paths(clean)?;
        if paths.is_empty() {
            return Err(Error::invalid("modalities", "no modality files configured"));
        }
        let layers = paths.iter().map(load_matrix_csv).collect::<Result<Vec<_>>>()?;
        ModalityStack::new(layers)
    }

    fn truth(&self) -> Result<Option<Vec<usize>>> {
        let path = if self.synthesized() {
            Some(self.require("data/labels.csv", "synth")?)
        } else {
            self.cfg.labels.clone()
        };
        path.map(read_labels).transpose()
    }

    fn modality_count(&self) -> Result<usize> {
        let path = self.require("fit_report.txt", "fit")?;
        let kv = read_kv(&path)?;
        kv.iter()
            .find(|(k, _)| k == "modalities")
            .and_then(|(_, v)| v.parse().ok())
            .ok_or_else(|| Error::invalid("fit_report", "missing `modalities` entry"))
    }

    fn split(&self) -> Result<(Vec<usize>, Vec<usize>)> {
        let train = read_labels(self.require("split/train.txt", "fit")?)?;
        let test_path = self.require("split/test.txt", "fit")?;
        let test = if std::fs::metadata(&test_path).map(|m| m.len()).unwrap_or(0) == 0 {
            Vec::new()
        } else {
            read_labels(test_path)?
        };
        Ok((train, test))
    }

    /// Training (or any) columns mapped into the solver's coordinates.
    fn project(&self, data: &ModalityStack, columns: &[usize]) -> Result<ModalityStack> {
        let mut layers = Vec::with_capacity(data.len());
        for (t, x) in data.iter().enumerate() {
            let sub = x.select_columns(columns)?;
            let basis_name = format!("pca/basis_{t}.csv");
            let y = if self.cfg.pca_dim(t) > 0 {
                let basis = load_matrix_csv(self.require(&basis_name, "fit")?)?;
                basis.t_matmul(&sub)?
            } else {
                sub
            };
            layers.push(y);
        }
        let stack = ModalityStack::new(layers)?;
        Ok(if self.cfg.solver.normalize_columns {
            stack.normalize_columns()
        } else {
            stack
        })
    }
}

fn stage_synth(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let p = &cfg.synth;
    let clusters = p.clusters.unwrap_or(cfg.k);
    let mut spec = UoSSpec::uniform(p.ambient.clone(), clusters, p.dim, p.points);
    spec.corruption_fraction = p.corruption;
    spec.corruption_amplitude = p.amplitude;
    spec.min_angle = p.min_angle_deg.map(f64::to_radians);
    spec.seed = seed::subseed(cfg.seed, "synth");
    let gt = generate_uos(&spec)?;

    for t in 0..gt.observed.len() {
        run.emit_matrix(&format!("data/modality_{t}.csv"), &gt.observed[t])?;
        run.emit_matrix(&format!("data/clean_{t}.csv"), &gt.clean[t])?;
        let coords: String = std::iter::once("row,col\n".to_string())
            .chain(
                gt.corruption_mask[t]
                    .coordinates()
                    .into_iter()
                    .map(|(i, j)| format!("{i},{j}\n")),
            )
            .collect();
        run.emit(&format!("data/mask_{t}.csv"), |path| {
            std::fs::write(path, &coords).map_err(|e| Error::io(path, e))
        })?;
    }
    run.emit_labels("data/labels.csv", &gt.labels)?;

    let angles = crate::theory::min_subspace_angle(&gt.bases)?;
    let mut r = Report::new();
    r.set("modalities", gt.observed.len())
        .set_list("ambient_dims", &p.ambient)
        .set("clusters", clusters)
        .set("subspace_dim", p.dim)
        .set("points_per_cluster", p.points)
        .set("observations", gt.labels.len())
        .set_f64("corruption_fraction", p.corruption)
        .set_f64("corruption_amplitude", p.amplitude)
        .set_list(
            "corrupted_entries",
            &gt.corruption_mask.iter().map(|m| m.count()).collect::<Vec<_>>(),
        )
        .set_f64_list(
            "min_principal_angle_deg",
            &angles
                .modalities
                .iter()
                .map(|a| a.theta.to_degrees())
                .collect::<Vec<_>>(),
        );
    run.emit_report("synth", r)
}

fn stage_fit(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let data = run.load_data(false)?;
    let truth = run.truth()?;
    let n = data.n();

    let (train, test) = match &truth {
        Some(labels) if cfg.train_per_cluster > 0 => {
            if labels.len() != n {
                return Err(Error::shape("labels", n, labels.len()));
            }
            stratified_indices(labels, cfg.train_per_cluster, cfg.seed)?
        }
        _ => ((0..n).collect(), Vec::new()),
    };
    run.emit_labels("split/train.txt", &train)?;
    run.emit("split/test.txt", |path| {
        let body: String = test.iter().map(|i| format!("{i}\n")).collect();
        std::fs::write(path, body).map_err(|e| Error::io(path, e))
    })?;

    let mut pca_spectra = Vec::new();
    for (t, x) in data.iter().enumerate() {
        let d = cfg.pca_dim(t);
        if d > 0 {
            let pca = Pca::fit(&x.select_columns(&train)?, d, true)?;
            run.emit_matrix(&format!("pca/basis_{t}.csv"), &pca.basis)?;
            pca_spectra
                .push(pca.spectrum[..d].iter().sum::<f64>() / pca.spectrum.iter().sum::<f64>().max(f64::MIN_POSITIVE));
        } else {
            pca_spectra.push(1.0);
        }
    }
    let inputs = run.project(&data, &train)?;

    let results: Vec<SolverResult> = match cfg.solver_mode {
        SolverMode::Joint => vec![fit_rogsure(&inputs, &cfg.solver)?],
        SolverMode::Independent => fit_each_modality(&inputs, &cfg.solver)?,
    };
    let w: Vec<&Matrix> = results.iter().flat_map(|r| r.w.iter()).collect();
    let e: Vec<&Matrix> = results.iter().flat_map(|r| r.e.iter()).collect();
    for t in 0..w.len() {
        run.emit_matrix(&format!("fit/W_{t}.csv"), w[t])?;
        run.emit_matrix(&format!("fit/E_{t}.csv"), e[t])?;
        run.emit(&format!("fit/W_{t}.svg"), |p| render_heatmap(w[t], p))?;
    }

    // iteration history: one row per iteration (of the longest run)
    let longest = results.iter().map(|r| r.history.len()).max().unwrap_or(0);
    let mut history = String::from("iter,mu,w_change,objective,max_residual\n");
    run.record.residual_history.clear();
    for i in 0..longest {
        let recs: Vec<_> = results.iter().filter_map(|r| r.history.get(i)).collect();
        let max_res = recs
            .iter()
            .flat_map(|r| r.residuals.iter().copied())
            .fold(0.0, f64::max);
        let w_change = recs.iter().map(|r| r.w_change).fold(0.0, f64::max);
        let objective: f64 = recs.iter().map(|r| r.objective).sum();
        history.push_str(&format!(
            "{},{},{},{},{}\n",
            i + 1,
            format_value(recs[0].mu),
            format_value(w_change),
            format_value(objective),
            format_value(max_res)
        ));
        run.record.residual_history.push(max_res);
    }
    run.emit("fit/residuals.csv", |p| {
        std::fs::write(p, &history).map_err(|e| Error::io(p, e))
    })?;

    let statuses: Vec<String> = results.iter().map(|r| format!("{:?}", r.status)).collect();
    let residuals: Vec<f64> = results.iter().flat_map(|r| r.final_residuals.iter().copied()).collect();
    let mut r = Report::new();
    r.set("modalities", data.len())
        .set("observations", n)
        .set("train_points", train.len())
        .set("test_points", test.len())
        .set_list("input_dims", &inputs.iter().map(Matrix::rows).collect::<Vec<_>>())
        .set_f64_list("pca_explained", &pca_spectra)
        .set("solver", cfg.solver_mode)
        .set_list("status", &statuses)
        .set("converged", results.iter().all(|r| r.converged))
        .set_list("iterations", &results.iter().map(|r| r.iters_used).collect::<Vec<_>>())
        .set_f64_list("lambda", &results.iter().map(|r| r.lambda).collect::<Vec<_>>())
        .set_f64_list("objective", &results.iter().map(|r| r.objective).collect::<Vec<_>>())
        .set_f64_list("final_residuals", &residuals)
        .set_f64("max_residual", residuals.iter().copied().fold(0.0, f64::max));
    run.emit_report("fit", r)
}

fn stage_fuse(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let count = run.modality_count()?;
    let ws = (0..count)
        .map(|t| load_matrix_csv(run.require(&format!("fit/W_{t}.csv"), "fit")?))
        .collect::<Result<Vec<_>>>()?;
    if ws.len() < 2 {
        return Err(Error::invalid(
            "fusion",
            format!("needs at least 2 coefficient matrices, found {}", ws.len()),
        ));
    }
    let fused: FusedCoefficients = match cfg.fusion {
        FusionMethod::Product => {
            let bins = ws
                .iter()
                .map(|w| binarize(w, &cfg.binarize))
                .collect::<Result<Vec<_>>>()?;
            for (t, b) in bins.iter().enumerate() {
                run.emit_matrix(&format!("fuse/B_{t}.csv"), b)?;
            }
            fuse_product(&bins)?
        }
        FusionMethod::Sum => fuse_sum(&ws, None)?,
    };
    run.emit_matrix("fuse/W_fused.csv", &fused.total)?;
    run.emit("fuse/W_fused.svg", |p| render_heatmap(&fused.total, p))?;

    let nnz = |m: &Matrix| m.as_slice().iter().filter(|v| **v != 0.0).count();
    let mut r = Report::new();
    r.set("method", fused.method)
        .set("sources", fused.sources)
        .set_list("source_nonzeros", &ws.iter().map(nnz).collect::<Vec<_>>())
        .set("fused_nonzeros", nnz(&fused.total));
    if fused.method == FusionMethod::Product {
        r.set("median_domain", format!("{:?}", cfg.binarize.domain))
            .set_f64("zero_tol", cfg.binarize.zero_tol);
    }
    run.emit_report("fuse", r)
}

fn spectral_config(cfg: &PipelineConfig) -> SpectralConfig {
    let mut s = cfg.spectral.clone();
    s.kmeans.seed = seed::subseed(cfg.seed, "kmeans");
    s
}

fn train_truth(run: &Run, train: &[usize]) -> Result<Option<Vec<usize>>> {
    Ok(run.truth()?.map(|labels| train.iter().map(|&i| labels[i]).collect()))
}

fn stage_cluster(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let count = run.modality_count()?;
    let w = if count >= 2 {
        load_matrix_csv(run.require("fuse/W_fused.csv", "fuse")?)?
    } else {
        load_matrix_csv(run.require("fit/W_0.csv", "fit")?)?
    };
    let assignment = spectral_cluster(&w, cfg.k, &spectral_config(cfg))?;
    run.emit_labels("cluster/labels.csv", &assignment.labels)?;

    let mut sizes = vec![0usize; cfg.k];
    assignment.labels.iter().for_each(|&l| sizes[l] += 1);
    let mut r = Report::new();
    r.set("k", cfg.k)
        .set("points", assignment.labels.len())
        .set_list("cluster_sizes", &sizes)
        .set_f64_list("eigenvalues", &assignment.eigenvalues)
        .set_f64("eigengap", assignment.eigengap)
        .set_f64("wcss", assignment.wcss);

    let (train, _) = run.split()?;
    if let Some(truth) = train_truth(run, &train)? {
        let eval = clustering_accuracy(&assignment.labels, &truth)?;
        add_eval(&mut r, "train_", &eval);
        run.record.train_eval = Some(eval);
    }
    run.emit_report("cluster", r)
}

fn add_eval(r: &mut Report, prefix: &str, eval: &EvalReport) {
    r.set_f64(format!("{prefix}accuracy"), eval.accuracy)
        .set_list(format!("{prefix}mapping"), &eval.mapping)
        .set_f64_list(format!("{prefix}recall"), &eval.recall);
    for (i, row) in eval.confusion.iter().enumerate() {
        r.set_list(format!("{prefix}confusion_{i}"), row);
    }
}

/// `ceil(dim(t) / k)` unless set explicitly.
fn classifier_dims(cfg: &PipelineConfig, inputs: &ModalityStack) -> Result<Vec<usize>> {
    match &cfg.classifier_dims {
        Some(d) if d.len() == 1 => Ok(vec![d[0]; inputs.len()]),
        Some(d) if d.len() == inputs.len() => Ok(d.clone()),
        Some(d) => Err(Error::shape("classifier_dims", inputs.len(), d.len())),
        None => Ok(inputs.iter().map(|x| x.rows().div_ceil(cfg.k).max(1)).collect()),
    }
}

fn stage_classify(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let (train, test) = run.split()?;
    if test.is_empty() {
        return Err(Error::invalid(
            "train_per_cluster",
            "no held-out points; enable the split to classify",
        ));
    }
    let clusters = read_labels(run.require("cluster/labels.csv", "cluster")?)?;
    if clusters.len() != train.len() {
        return Err(Error::shape("cluster labels", train.len(), clusters.len()));
    }
    let data = run.load_data(false)?;
    let train_x = run.project(&data, &train)?;
    let test_x = run.project(&data, &test)?;
    let dims = classifier_dims(cfg, &train_x)?;
    let model = build_cluster_model(&train_x, &clusters, cfg.k, &dims)?;
    let predicted = classify_batch(&model, &test_x)?;
    run.emit_labels("classify/labels.csv", &predicted)?;

    let mut r = Report::new();
    r.set("test_points", test.len())
        .set_list("dims", &dims)
        .set("clipped", model.clipped.len());
    let truth = run.truth()?;
    if let Some(truth) = truth {
        let train_truth: Vec<usize> = train.iter().map(|&i| truth[i]).collect();
        let test_truth: Vec<usize> = test.iter().map(|&i| truth[i]).collect();
        let train_eval = clustering_accuracy(&clusters, &train_truth)?;
        let test_eval = score_with_mapping(&predicted, &test_truth, train_eval.mapping.clone())?;
        add_eval(&mut r, "test_", &test_eval);
        r.set_f64("train_accuracy", train_eval.accuracy)
            .set_f64("accuracy_gap", train_eval.accuracy - test_eval.accuracy);
        run.record.train_eval = Some(train_eval);
        run.record.test_eval = Some(test_eval);
    }
    run.emit_report("classify", r)
}

fn stage_theorem(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let data = run.load_data(true)?.normalize_columns();
    let labels = run
        .truth()?
        .ok_or_else(|| Error::invalid("labels", "the recovery condition needs ground-truth labels"))?;
    if labels.len() != data.n() {
        return Err(Error::shape("labels", data.n(), labels.len()));
    }
    let bases = estimate_bases(&data, &labels, 1e-8)?;
    let report = evaluate_condition(
        &data,
        &labels,
        &bases,
        cfg.theorem_budget,
        seed::subseed(cfg.seed, "theorem"),
    )?;

    // the guarantee is stated for the pure group penalty
    let solver = SolverConfig {
        rho: 0.0,
        ..cfg.solver.clone()
    };
    let fit = fit_clean(&data, &solver)?;
    let detection = check_detection_property(&fit.w, &labels, cfg.detection_tol)?;

    let mut r = Report::new();
    r.set_f64("max_cos_sq", report.max_cos_sq)
        .set_f64_list(
            "min_angle_deg",
            &report
                .angles
                .modalities
                .iter()
                .map(|a| a.theta.to_degrees())
                .collect::<Vec<_>>(),
        )
        .set_f64("min_inradius_sq_lower", report.min_inradius_sq_lower)
        .set_f64("min_inradius_sq_upper", report.min_inradius_sq_upper)
        .set("weakest_point", report.weakest_point)
        .set("condition_holds", report.condition_holds)
        .set_f64("margin", report.margin)
        .set("solver_status", format!("{:?}", fit.status))
        .set("detection_holds", detection.holds)
        .set_f64("detection_tol", cfg.detection_tol)
        .set_f64("worst_violation", detection.worst_violation)
        .set_f64("max_abs_coefficient", detection.max_abs)
        .set(
            "worst_location",
            detection
                .location
                .map_or("none".to_string(), |(t, k, j)| format!("{t},{k},{j}")),
        );
    run.record.theorem = Some(report);
    run.emit_report("theorem", r)
}

fn stage_eval(run: &mut Run) -> Result<()> {
    let mut r = Report::new();
    let fit = run.record.report("fit").cloned().unwrap_or_default();
    for key in ["status", "converged", "iterations", "max_residual"] {
        if let Some(v) = fit.get(key) {
            r.set(format!("solver_{key}"), v);
        }
    }
    if let Some(fuse) = run.record.report("fuse") {
        r.set("fusion", fuse.get("method").unwrap_or("none"));
    } else {
        r.set("fusion", "none");
    }
    match &run.record.train_eval {
        Some(train) => add_eval(&mut r, "train_", &train.clone()),
        None => return Err(Error::invalid("labels", "evaluation needs ground-truth labels")),
    }
    if let (Some(train), Some(test)) = (&run.record.train_eval, &run.record.test_eval) {
        let (train, test) = (train.clone(), test.clone());
        add_eval(&mut r, "test_", &test);
        r.set_f64("accuracy_gap", train.accuracy - test.accuracy);
    }
    run.emit_report("eval", r)
}

/// Generate a synthetic dataset under `<out>/data`.
pub fn cmd_synth(cfg: &PipelineConfig) -> Result<RunRecord> {
    let mut run = Run::start(cfg)?;
    run.timed("synth", stage_synth)?;
    run.finish()
}

/// Split, project and solve for the self-representation coefficients.
pub fn cmd_fit(cfg: &PipelineConfig) -> Result<RunRecord> {
    let mut run = Run::start(cfg)?;
    run.timed("fit", stage_fit)?;
    run.finish()
}

/// Fuse the per-modality coefficient matrices written by `fit`.
pub fn cmd_fuse(cfg: &PipelineConfig) -> Result<RunRecord> {
    let mut run = Run::start(cfg)?;
    run.timed("fuse", stage_fuse)?;
    run.finish()
}

/// Spectral clustering of the fused matrix (or the single modality's W).
pub fn cmd_cluster(cfg: &PipelineConfig) -> Result<RunRecord> {
    let mut run = Run::start(cfg)?;
    run.timed("cluster", stage_cluster)?;
    run.finish()
}

/// Classify held-out points with per-cluster subspaces.
pub fn cmd_classify(cfg: &PipelineConfig) -> Result<RunRecord> {
    let mut run = Run::start(cfg)?;
    run.timed("classify", stage_classify)?;
    run.finish()
}

/// Check the exact-recovery condition and the detection property on clean data.
pub fn cmd_check_theorem(cfg: &PipelineConfig) -> Result<RunRecord> {
    let mut run = Run::start(cfg)?;
    if run.synthesized() && !run.path("data/clean_0.csv").exists() {
        run.timed("synth", stage_synth)?;
    }
    run.timed("theorem", stage_theorem)?;
    run.finish()
}

/// Full pipeline: (synth) → PCA + fit → binarize + fuse → cluster →
/// classify → score.
pub fn cmd_eval(cfg: &PipelineConfig) -> Result<RunRecord> {
    let mut run = Run::start(cfg)?;
    if run.synthesized() {
        run.timed("synth", stage_synth)?;
    }
    run.timed("fit", stage_fit)?;
    if run.modality_count()? >= 2 {
        run.timed("fuse", stage_fuse)?;
    }
    run.timed("cluster", stage_cluster)?;
    if !run.split()?.1.is_empty() {
        run.timed("classify", stage_classify)?;
    }
    run.timed("eval", stage_eval)?;
    run.finish()
}
