//! Batch experiments behind the command-line tool: single GSGP training runs,
//! prediction from saved models, the multi-run three-way comparison and the
//! linear baseline table.
//!
//! Every command is a pure function of its resolved [`ExperimentConfig`], so
//! repeating one with the same config and seed rewrites byte-identical files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::baselines::lssvm::{DEFAULT_GAMMA, DEFAULT_SIGMA_SQ};
use crate::baselines::{
    grid_search, lssvm_fit, lssvm_predict, ols_fit, ols_predict, stgp_run, GridSearchResult,
    LinearModel, LssvmModel, StgpConfig,
};
use crate::dataset::{builtin_dataset, load_csv, split, Dataset, SplitSpec};
use crate::expr::ExprTree;
use crate::fmt::sig6;
use crate::gsgp::{evolve, GsgpConfig, GsgpModel, GsgpRun};
use crate::stats::{
    box_summary, pearson_r, relative_errors, rmse, wilcoxon_rank_sum, BoxSummary, PairedSeries,
    RankSumResult,
};

/// Version stamped into every JSON file this module writes.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub const DEFAULT_OUT_DIR: &str = "out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LssvmSettings {
    pub gamma: f64,
    pub sigma_sq: f64,
    /// Choose `(γ, σ²)` by leave-one-out RMSE over the fixed grid instead.
    pub grid_search: bool,
}

impl Default for LssvmSettings {
    fn default() -> Self {
        LssvmSettings {
            gamma: DEFAULT_GAMMA,
            sigma_sq: DEFAULT_SIGMA_SQ,
            grid_search: false,
        }
    }
}

/// Everything a command needs. Loaded from a TOML file, then overridden by
/// command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `"builtin"` for the embedded 34-mix table, otherwise a CSV path.
    pub dataset: String,
    pub n_train: usize,
    pub runs: usize,
    pub master_seed: u64,
    /// Not embedded in reports, so identical experiments written to
    /// different directories produce identical files.
    #[serde(skip_serializing)]
    pub out_dir: PathBuf,
    pub gsgp: GsgpConfig,
    pub stgp: StgpConfig,
    pub lssvm: LssvmSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: "builtin".into(),
            n_train: 28,
            runs: 50,
            master_seed: 0,
            out_dir: PathBuf::from(DEFAULT_OUT_DIR),
            gsgp: GsgpConfig::default(),
            stgp: StgpConfig::default(),
            lssvm: LssvmSettings::default(),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub dataset: Option<String>,
    pub n_train: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Reads `path` if given (defaults otherwise), applies `overrides` and
    /// validates the result.
    pub fn resolve(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(v) = overrides.seed {
            cfg.master_seed = v;
        }
        if let Some(v) = overrides.runs {
            cfg.runs = v;
        }
        if let Some(v) = &overrides.out_dir {
            cfg.out_dir = v.clone();
        }
        if let Some(v) = &overrides.dataset {
            cfg.dataset = v.clone();
        }
        if let Some(v) = overrides.n_train {
            cfg.n_train = v;
        }
        cfg.gsgp.rng_seed = cfg.master_seed;
        cfg.stgp.rng_seed = cfg.master_seed;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            bail!("runs must be at least 1");
        }
        if self.dataset != "builtin" && !Path::new(&self.dataset).is_file() {
            bail!("dataset file {} does not exist", self.dataset);
        }
        self.gsgp.validate()?;
        self.stgp.validate()?;
        let l = &self.lssvm;
        if !(l.gamma > 0.0 && l.gamma.is_finite() && l.sigma_sq > 0.0 && l.sigma_sq.is_finite()) {
            bail!("lssvm gamma and sigma_sq must be positive and finite");
        }
        Ok(())
    }

    /// Seed of comparison run `i`.
    pub fn run_seed(&self, run: usize) -> u64 {
        self.master_seed.wrapping_add(run as u64)
    }

    /// Loads the dataset and cuts it into train and test sets. Both must
    /// carry slump values.
    pub fn load_split(&self) -> Result<(Dataset, Dataset)> {
        let ds = if self.dataset == "builtin" {
            builtin_dataset()
        } else {
            load_csv(Path::new(&self.dataset))
                .with_context(|| format!("loading {}", self.dataset))?
        };
        if !ds.has_targets() {
            bail!("dataset {} has no slump column", self.dataset);
        }
        Ok(split(
            &ds,
            SplitSpec {
                n_train: self.n_train,
            },
        )?)
    }

    fn gsgp_with_seed(&self, seed: u64) -> GsgpConfig {
        GsgpConfig {
            rng_seed: seed,
            ..self.gsgp.clone()
        }
    }

    fn stgp_with_seed(&self, seed: u64) -> StgpConfig {
        StgpConfig {
            rng_seed: seed,
            ..self.stgp.clone()
        }
    }
}

/// A model file as written by `train` and `ols-baseline`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub model: SavedModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SavedModel {
    Gsgp(GsgpModel),
    Ols(LinearModel),
    Lssvm(LssvmModel),
    Stgp { tree: ExprTree },
}

impl SavedModel {
    pub fn predict(&self, ds: &Dataset) -> Result<Vec<f64>> {
        Ok(match self {
            SavedModel::Gsgp(m) => m.predict(ds)?.0,
            SavedModel::Ols(m) => ds
                .samples()
                .iter()
                .map(|s| ols_predict(m, &s.features))
                .collect(),
            SavedModel::Lssvm(m) => ds
                .samples()
                .iter()
                .map(|s| lssvm_predict(m, &s.features))
                .collect(),
            SavedModel::Stgp { tree } => {
                if !tree.is_primitive() {
                    bail!("stgp model contains non-primitive nodes");
                }
                tree.eval_dataset(ds)
            }
        })
    }
}

impl ModelFile {
    pub fn new(model: SavedModel) -> Self {
        ModelFile {
            schema_version: REPORT_SCHEMA_VERSION,
            model,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading model {}", path.display()))?;
        let file: ModelFile = serde_json::from_str(&text)
            .with_context(|| format!("corrupt model file {}", path.display()))?;
        if file.schema_version != REPORT_SCHEMA_VERSION {
            bail!("unsupported model schema version {}", file.schema_version);
        }
        Ok(file)
    }
}

/// Accuracy of one set of predictions against measured slump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Pearson correlation; absent when either series is constant.
    pub r: Option<f64>,
    pub rmse: f64,
    pub max_relative_error: f64,
}

pub fn metrics(experimental: &[f64], computed: &[f64]) -> Result<Metrics> {
    let s = PairedSeries::new(experimental.to_vec(), computed.to_vec())?;
    let rel = relative_errors(&s)?;
    Ok(Metrics {
        r: pearson_r(&s).ok(),
        rmse: rmse(&s),
        max_relative_error: rel.iter().copied().fold(0.0, f64::max),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

fn prepare_out(cfg: &ExperimentConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    Ok(&cfg.out_dir)
}

/// Rows of the prediction table: sample number, measured, predicted and
/// relative error, or just number and prediction when slump is unknown.
fn prediction_rows(
    ds: &Dataset,
    computed: &[f64],
) -> Result<(Vec<&'static str>, Vec<Vec<String>>)> {
    let ids = ds.row_numbers();
    match ds.targets().filter(|t| !t.is_empty()) {
        Some(targets) => {
            let rel = relative_errors(&PairedSeries::new(targets.clone(), computed.to_vec())?)?;
            let rows = (0..ds.len())
                .map(|i| {
                    vec![
                        ids[i].to_string(),
                        sig6(targets[i]),
                        sig6(computed[i]),
                        sig6(rel[i]),
                    ]
                })
                .collect();
            Ok((
                vec!["sample_no", "experiment", "computation", "relative_error"],
                rows,
            ))
        }
        None => {
            let rows = (0..ds.len())
                .map(|i| vec![ids[i].to_string(), sig6(computed[i])])
                .collect();
            Ok((vec!["sample_no", "computation"], rows))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub best_train_fitness: f64,
    pub train: Metrics,
    pub test: Metrics,
}

/// One GSGP run with the master seed. Writes `fitness_curve.csv`,
/// `predictions.csv`, `model.json` and `metrics.json`.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<TrainReport> {
    let (train, test) = cfg.load_split()?;
    let run = evolve(&cfg.gsgp_with_seed(cfg.master_seed), &train, &test)?;
    let out = prepare_out(cfg)?;

    let curve: Vec<Vec<String>> = run
        .history
        .iter()
        .map(|h| {
            vec![
                h.generation.to_string(),
                sig6(h.train_fitness),
                h.test_fitness.map(sig6).unwrap_or_default(),
            ]
        })
        .collect();
    write_csv(
        &out.join("fitness_curve.csv"),
        &["generation", "train_fitness", "test_fitness"],
        &curve,
    )?;

    let (header, rows) = prediction_rows(&test, &run.predictions)?;
    write_csv(&out.join("predictions.csv"), &header, &rows)?;

    write_json(
        &out.join("model.json"),
        &ModelFile::new(SavedModel::Gsgp(run.model())),
    )?;

    let report = TrainReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: cfg.clone(),
        seed: cfg.master_seed,
        best_train_fitness: run.best.train_fitness,
        train: metrics(
            &train.targets().expect("checked on load"),
            &run.best.train_semantics,
        )?,
        test: metrics(&test.targets().expect("checked on load"), &run.predictions)?,
    };
    write_json(&out.join("metrics.json"), &report)?;
    Ok(report)
}

/// Applies a saved model to every row of `input` and writes
/// `predictions.csv` to `out_dir`. Returns the predictions.
pub fn cmd_predict(model_path: &Path, input: &Path, out_dir: &Path) -> Result<Vec<f64>> {
    let model = ModelFile::load(model_path)?;
    let ds = load_csv(input).with_context(|| format!("loading {}", input.display()))?;
    let computed = model.model.predict(&ds)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let (header, rows) = prediction_rows(&ds, &computed)?;
    write_csv(&out_dir.join("predictions.csv"), &header, &rows)?;
    Ok(computed)
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgorithmSummary {
    pub name: &'static str,
    pub test_rmse: Vec<f64>,
    pub train_rmse: Vec<f64>,
    pub test_rmse_box: BoxSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairwiseTest {
    pub first: &'static str,
    pub second: &'static str,
    pub result: RankSumResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct LssvmSummary {
    pub gamma: f64,
    pub sigma_sq: f64,
    /// The LS-SVM fit is deterministic, so one fit stands for every run.
    pub replicated: bool,
    pub grid: Option<GridSearchResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<AlgorithmSummary>,
    /// Algorithm names, lowest median test RMSE first.
    pub ordering_by_median: Vec<&'static str>,
    pub tests: Vec<PairwiseTest>,
    pub lssvm: LssvmSummary,
    pub ols_test_rmse: f64,
    pub ols_train_rmse: f64,
}

impl ComparisonReport {
    pub fn algorithm(&self, name: &str) -> Option<&AlgorithmSummary> {
        self.algorithms.iter().find(|a| a.name == name)
    }

    pub fn test(&self, first: &str, second: &str) -> Option<&RankSumResult> {
        self.tests
            .iter()
            .find(|t| t.first == first && t.second == second)
            .map(|t| &t.result)
    }
}

fn rmse_of(targets: &[f64], computed: &[f64]) -> Result<f64> {
    Ok(rmse(&PairedSeries::new(
        targets.to_vec(),
        computed.to_vec(),
    )?))
}

/// One GSGP run and its train and test RMSE.
pub fn gsgp_rmse(
    cfg: &ExperimentConfig,
    seed: u64,
    train: &Dataset,
    test: &Dataset,
) -> Result<(GsgpRun, f64, f64)> {
    let run = evolve(&cfg.gsgp_with_seed(seed), train, test)?;
    let tr = rmse_of(
        &train.targets().expect("checked on load"),
        &run.best.train_semantics,
    )?;
    let te = rmse_of(&test.targets().expect("checked on load"), &run.predictions)?;
    Ok((run, tr, te))
}

/// `runs` seeded GSGP and STGP runs against one LS-SVM fit. Writes
/// `comparison.csv` and `report.json`.
pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    let (train, test) = cfg.load_split()?;
    let train_y = train.targets().expect("checked on load");
    let test_y = test.targets().expect("checked on load");

    let seeds: Vec<u64> = (0..cfg.runs).map(|i| cfg.run_seed(i)).collect();
    let mut gsgp = (Vec::new(), Vec::new());
    let mut stgp = (Vec::new(), Vec::new());
    for &seed in &seeds {
        let (_, tr, te) = gsgp_rmse(cfg, seed, &train, &test)?;
        gsgp.0.push(tr);
        gsgp.1.push(te);
        let run = stgp_run(&cfg.stgp_with_seed(seed), &train, &test)?;
        stgp.0
            .push(rmse_of(&train_y, &run.best.eval_dataset(&train))?);
        stgp.1.push(rmse_of(&test_y, &run.predictions)?);
    }

    let grid = if cfg.lssvm.grid_search {
        Some(grid_search(&train)?)
    } else {
        None
    };
    let (gamma, sigma_sq) = grid
        .as_ref()
        .map_or((cfg.lssvm.gamma, cfg.lssvm.sigma_sq), |g| {
            (g.gamma, g.sigma_sq)
        });
    let svm = lssvm_fit(&train, gamma, sigma_sq)?;
    let svm_on = |ds: &Dataset| -> Vec<f64> {
        ds.samples()
            .iter()
            .map(|s| lssvm_predict(&svm, &s.features))
            .collect()
    };
    let svm_train = rmse_of(&train_y, &svm_on(&train))?;
    let svm_test = rmse_of(&test_y, &svm_on(&test))?;

    let ols = ols_fit(&train)?;
    let ols_on = |ds: &Dataset| -> Vec<f64> {
        ds.samples()
            .iter()
            .map(|s| ols_predict(&ols, &s.features))
            .collect()
    };

    let summary = |name, (train_rmse, test_rmse): (Vec<f64>, Vec<f64>)| AlgorithmSummary {
        name,
        test_rmse_box: box_summary(&test_rmse),
        test_rmse,
        train_rmse,
    };
    let algorithms = vec![
        summary("gsgp", gsgp),
        summary("stgp", stgp),
        summary(
            "lssvm",
            (vec![svm_train; cfg.runs], vec![svm_test; cfg.runs]),
        ),
    ];
    let mut ordering: Vec<&AlgorithmSummary> = algorithms.iter().collect();
    ordering.sort_by(|a, b| a.test_rmse_box.median.total_cmp(&b.test_rmse_box.median));
    let tests = [(0, 1), (0, 2), (1, 2)]
        .iter()
        .map(|&(i, j)| PairwiseTest {
            first: algorithms[i].name,
            second: algorithms[j].name,
            result: wilcoxon_rank_sum(&algorithms[i].test_rmse, &algorithms[j].test_rmse),
        })
        .collect();

    let report = ComparisonReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: cfg.clone(),
        ordering_by_median: ordering.iter().map(|a| a.name).collect(),
        tests,
        lssvm: LssvmSummary {
            gamma,
            sigma_sq,
            replicated: true,
            grid,
        },
        ols_test_rmse: rmse_of(&test_y, &ols_on(&test))?,
        ols_train_rmse: rmse_of(&train_y, &ols_on(&train))?,
        seeds,
        algorithms,
    };

    let out = prepare_out(cfg)?;
    let rows: Vec<Vec<String>> = (0..cfg.runs)
        .map(|i| {
            let mut row = vec![i.to_string(), report.seeds[i].to_string()];
            row.extend(report.algorithms.iter().map(|a| sig6(a.test_rmse[i])));
            row
        })
        .collect();
    write_csv(
        &out.join("comparison.csv"),
        &["run", "seed", "gsgp_rmse", "stgp_rmse", "lssvm_rmse"],
        &rows,
    )?;
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct OlsBaseline {
    pub model: LinearModel,
    pub gsgp: Vec<f64>,
    pub ols: Vec<f64>,
}

/// OLS and the master-seed GSGP run side by side on the test rows. Writes
/// `baseline_predictions.csv` and `ols_model.json`.
pub fn cmd_ols_baseline(cfg: &ExperimentConfig) -> Result<OlsBaseline> {
    let (train, test) = cfg.load_split()?;
    let model = ols_fit(&train)?;
    let run = evolve(&cfg.gsgp_with_seed(cfg.master_seed), &train, &test)?;
    let ols: Vec<f64> = test
        .samples()
        .iter()
        .map(|s| ols_predict(&model, &s.features))
        .collect();
    let gsgp = run.predictions.0;

    let out = prepare_out(cfg)?;
    let targets = test.targets().expect("checked on load");
    let rows: Vec<Vec<String>> = (0..test.len())
        .map(|i| {
            vec![
                test.row_numbers()[i].to_string(),
                sig6(targets[i]),
                sig6(gsgp[i]),
                sig6(ols[i]),
            ]
        })
        .collect();
    write_csv(
        &out.join("baseline_predictions.csv"),
        &["sample_no", "experiment", "gsgp", "ols"],
        &rows,
    )?;
    write_json(
        &out.join("ols_model.json"),
        &ModelFile::new(SavedModel::Ols(model.clone())),
    )?;
    Ok(OlsBaseline { model, gsgp, ols })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_sections_and_overrides() {
        let cfg = ExperimentConfig::from_toml(
            "runs = 3\nmaster_seed = 9\n[gsgp]\npopulation_size = 20\n[lssvm]\ngrid_search = true\n",
        )
        .unwrap();
        assert_eq!(cfg.runs, 3);
        assert_eq!(cfg.gsgp.population_size, 20);
        assert_eq!(cfg.gsgp.generations, 50);
        assert!(cfg.lssvm.grid_search);
        assert_eq!(cfg.run_seed(2), 11);
        assert!(ExperimentConfig::from_toml("popsize = 3").is_err());
    }

    #[test]
    fn shipped_config_spells_out_the_defaults() {
        let cfg = ExperimentConfig::from_toml(include_str!("../configs/default.toml")).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn zero_runs_rejected() {
        let o = Overrides {
            runs: Some(0),
            ..Default::default()
        };
        assert!(ExperimentConfig::resolve(None, &o).is_err());
    }

    #[test]
    fn missing_dataset_rejected() {
        let o = Overrides {
            dataset: Some("/nonexistent/x.csv".into()),
            ..Default::default()
        };
        assert!(ExperimentConfig::resolve(None, &o).is_err());
    }

    #[test]
    fn metrics_of_perfect_predictions() {
        let m = metrics(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((m.r.unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(m.rmse, 0.0);
        assert_eq!(m.max_relative_error, 0.0);
        assert_eq!(metrics(&[1.0, 2.0], &[5.0, 5.0]).unwrap().r, None);
    }

    #[test]
    fn saved_model_json_is_tagged() {
        let m = ModelFile::new(SavedModel::Stgp {
            tree: ExprTree::var(2),
        });
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains("\"kind\":\"stgp\""), "{text}");
        let back: ModelFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }
}
