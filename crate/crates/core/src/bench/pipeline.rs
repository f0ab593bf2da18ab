use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::io::write_atomic;
use super::report::{confusion, confusion_csv, report_csv, EvalReport, SnrResult};
use crate::baselines::{
    filter_scores, fqi_indices, magnitude_indices, pcs_indices, random_indices, uniform_indices,
    FilterMethod,
};
use crate::classifiers::{make_ranker, ArchKind, NeuralRanker, RankerModel};
use crate::error::{Error, Result};
use crate::neurokit::{self, argmax, checkpoint, Examples, Shape, TrainConfig};
use crate::search::{ensemble_subsample, NeuralLeafTrainer, SelectionPlan, DEFAULT_LEAF_BUDGET};
use crate::sigstream::{FrameBatch, LabeledDataset, ModType, Splits};
use crate::wrapper::{holistic_select, standardize, subsampler_net, StandardizeStats};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    None,
    Uniform,
    Random,
    Magnitude,
    Pcs,
    Fisher,
    Laplacian,
    Fqi,
    SubnetCnn,
    SubnetCldnn,
    SubnetResnet,
    Holistic,
    Ensemble,
}

impl Method {
    pub const ALL: [Method; 13] = [
        Method::None,
        Method::Uniform,
        Method::Random,
        Method::Magnitude,
        Method::Pcs,
        Method::Fisher,
        Method::Laplacian,
        Method::Fqi,
        Method::SubnetCnn,
        Method::SubnetCldnn,
        Method::SubnetResnet,
        Method::Holistic,
        Method::Ensemble,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Uniform => "uniform",
            Method::Random => "random",
            Method::Magnitude => "magnitude",
            Method::Pcs => "pcs",
            Method::Fisher => "fisher",
            Method::Laplacian => "laplacian",
            Method::Fqi => "fqi",
            Method::SubnetCnn => "subnet-cnn",
            Method::SubnetCldnn => "subnet-cldnn",
            Method::SubnetResnet => "subnet-resnet",
            Method::Holistic => "holistic",
            Method::Ensemble => "ensemble",
        }
    }

    /// Whether selection consults trained rankers.
    pub fn needs_rankers(self) -> bool {
        matches!(
            self,
            Method::Fqi
                | Method::SubnetCnn
                | Method::SubnetCldnn
                | Method::SubnetResnet
                | Method::Holistic
                | Method::Ensemble
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub method: Method,
    /// Samples kept per frame; `None` means all of them.
    pub k: Option<usize>,
    pub seed: u64,
    /// Final classifier.
    pub train: TrainConfig,
    pub ranker: TrainConfig,
    /// Classifiers trained at the search-tree leaves.
    pub leaf: TrainConfig,
    pub leaf_budget: usize,
    pub test_fraction: f64,
    pub val_fraction: f64,
    pub out: Option<PathBuf>,
    /// Directory of saved ranker checkpoints to reuse.
    pub rankers: Option<PathBuf>,
    /// A saved plan to evaluate instead of selecting.
    pub plan: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: PathBuf::from("dataset.msub"),
            method: Method::None,
            k: None,
            seed: 0,
            train: TrainConfig::default(),
            ranker: TrainConfig::default(),
            leaf: NeuralLeafTrainer::default_config(0),
            leaf_budget: DEFAULT_LEAF_BUDGET,
            test_fraction: 0.25,
            val_fraction: 0.25,
            out: None,
            rankers: None,
            plan: None,
        }
    }
}

impl RunConfig {
    /// Resolves `k` against the frame width.
    pub fn resolve_k(&self, d: usize) -> Result<usize> {
        let k = self.k.unwrap_or(d);
        let mut errs = Vec::new();
        if k == 0 || k > d {
            errs.push(format!("k={k} must lie in [1, d={d}]"));
        }
        if self.method == Method::None && k != d {
            errs.push(format!("method none keeps every sample, so k must equal d={d}"));
        }
        if errs.is_empty() {
            Ok(k)
        } else {
            Err(Error::Validation(errs))
        }
    }
}

/// Which samples each frame keeps.
#[derive(Clone, Debug, PartialEq)]
pub enum Selector {
    Plan(SelectionPlan),
    /// The `k` largest-magnitude samples of each frame.
    TopMagnitude(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub method: Method,
    pub selector: Selector,
    pub seconds: f64,
}

impl Selection {
    pub fn k(&self) -> usize {
        match &self.selector {
            Selector::Plan(p) => p.k,
            Selector::TopMagnitude(k) => *k,
        }
    }

    pub fn plan(&self) -> Option<&SelectionPlan> {
        match &self.selector {
            Selector::Plan(p) => Some(p),
            Selector::TopMagnitude(_) => None,
        }
    }
}

/// Reduces every frame of `batch` to `2 x k`, kept samples in ascending
/// position order.
pub fn reduce(batch: &FrameBatch, selector: &Selector) -> Result<FrameBatch> {
    match selector {
        Selector::Plan(plan) => {
            if plan.d != batch.d {
                return Err(Error::Shape(format!(
                    "plan is for d={}, frames have {}",
                    plan.d, batch.d
                )));
            }
            let sorted: BTreeMap<i16, Vec<usize>> = plan
                .per_snr
                .keys()
                .map(|&s| (s, plan.sorted_indices(s).unwrap()))
                .collect();
            if let Some(s) = batch.snrs.iter().find(|s| !sorted.contains_key(s)) {
                return Err(Error::InvalidInput(format!("plan has no entry for SNR {s} dB")));
            }
            batch.keep_samples_with(plan.k, |i| sorted[&batch.snrs[i]].as_slice())
        }
        Selector::TopMagnitude(k) => {
            let per_frame = (0..batch.len())
                .map(|i| magnitude_indices(batch.frame(i), *k))
                .collect::<Result<Vec<_>>>()?;
            batch.keep_samples_with(*k, |i| per_frame[i].as_slice())
        }
    }
}

/// Standardized data, splits and (once trained) the three rankers for one
/// seed. Selection only ever reads the train and validation frames.
pub struct Workbench {
    pub data: LabeledDataset,
    pub stats: StandardizeStats,
    pub splits: Splits,
    pub train: FrameBatch,
    pub val: FrameBatch,
    pub test: FrameBatch,
    pub seed: u64,
    rankers: Option<Vec<NeuralRanker>>,
}

impl Workbench {
    pub fn new(ds: &LabeledDataset, seed: u64, test_fraction: f64, val_fraction: f64) -> Result<Self> {
        ds.validate()?;
        let splits = Splits::stratified(ds, test_fraction, val_fraction, seed)?;
        if splits.train.is_empty() || splits.test.is_empty() {
            return Err(Error::InvalidInput(
                "dataset too small for a train/test split".into(),
            ));
        }
        let (stats, data) = standardize(ds, &splits.training_side())?;
        Ok(Workbench {
            train: data.batch(&splits.train),
            val: data.batch(&splits.val),
            test: data.batch(&splits.test),
            data,
            stats,
            splits,
            seed,
            rankers: None,
        })
    }

    pub fn d(&self) -> usize {
        self.data.d
    }

    pub fn grid(&self) -> &[i16] {
        &self.data.snr_grid
    }

    /// Trains the CNN, CLDNN and ResNet rankers on the pooled training
    /// frames, early-stopping on validation.
    pub fn train_rankers(&mut self, cfg: &TrainConfig) -> Result<&[NeuralRanker]> {
        let rankers = ArchKind::ALL
            .iter()
            .enumerate()
            .map(|(i, &kind)| {
                let cfg = TrainConfig {
                    seed: self.seed.wrapping_mul(31).wrapping_add(i as u64 + 1),
                    ..cfg.clone()
                };
                make_ranker(kind, &self.train, &self.val, &cfg)
            })
            .collect::<Result<Vec<_>>>()?;
        self.rankers = Some(rankers);
        Ok(self.rankers.as_deref().unwrap())
    }

    pub fn set_rankers(&mut self, rankers: Vec<NeuralRanker>) -> Result<()> {
        if rankers.len() != 3 {
            return Err(Error::InvalidInput("expected three rankers".into()));
        }
        if let Some(r) = rankers.iter().find(|r| r.samples() != self.d()) {
            return Err(Error::Shape(format!(
                "{} ranker takes {} samples, data has {}",
                r.kind,
                r.samples(),
                self.d()
            )));
        }
        self.rankers = Some(rankers);
        Ok(())
    }

    pub fn rankers(&self) -> Option<&[NeuralRanker]> {
        self.rankers.as_deref()
    }

    fn need_rankers(&self) -> Result<&[NeuralRanker]> {
        self.rankers()
            .ok_or_else(|| Error::InvalidInput("method needs trained rankers".into()))
    }

    fn ranker(&self, kind: ArchKind) -> Result<&NeuralRanker> {
        self.need_rankers()?
            .iter()
            .find(|r| r.kind == kind)
            .ok_or_else(|| Error::InvalidInput(format!("no {kind} ranker")))
    }

    /// Frames of the training side (train and validation) pooled.
    pub fn training_side(&self) -> FrameBatch {
        self.data.batch(&self.splits.training_side())
    }

    /// Runs `method` at `k`.
    pub fn select(&self, method: Method, k: usize, leaf_budget: usize, leaf: &TrainConfig) -> Result<Selection> {
        let d = self.d();
        if k == 0 || k > d {
            return Err(Error::Validation(vec![format!("k={k} must lie in [1, d={d}]")]));
        }
        let start = Instant::now();
        let grid = self.grid().to_vec();
        let everywhere = |idx: Vec<usize>| SelectionPlan::uniform_over(d, idx, &grid);
        let per_snr = |f: &dyn Fn(&FrameBatch) -> Result<Vec<usize>>| -> Result<SelectionPlan> {
            let mut plan = SelectionPlan::new(d, k);
            for (s, b) in self.val.by_snr() {
                plan.per_snr.insert(s, f(&b)?);
            }
            Ok(plan)
        };
        let plan = match method {
            Method::None => {
                if k != d {
                    return Err(Error::Validation(vec![format!(
                        "method none keeps every sample, so k must equal d={d}"
                    )]));
                }
                everywhere((0..d).collect())
            }
            Method::Uniform => everywhere(uniform_indices(d, k)?),
            Method::Random => everywhere(random_indices(d, k, self.seed)?),
            Method::Magnitude => {
                return Ok(Selection {
                    method,
                    selector: Selector::TopMagnitude(k),
                    seconds: start.elapsed().as_secs_f64(),
                })
            }
            Method::Pcs => everywhere(pcs_indices(&self.training_side().x, d, k)?.1),
            Method::Fisher | Method::Laplacian => {
                let fm = if method == Method::Fisher {
                    FilterMethod::Fisher
                } else {
                    FilterMethod::Laplacian
                };
                everywhere(filter_scores(&self.training_side(), fm)?.top_k(k)?)
            }
            Method::Fqi => {
                let r = self.ranker(ArchKind::MiniResNet)?;
                per_snr(&|b| fqi_indices(r, b, k))?
            }
            Method::SubnetCnn | Method::SubnetCldnn | Method::SubnetResnet => {
                let kind = match method {
                    Method::SubnetCnn => ArchKind::MiniCnn,
                    Method::SubnetCldnn => ArchKind::MiniCldnn,
                    _ => ArchKind::MiniResNet,
                };
                let r = self.ranker(kind)?;
                per_snr(&|b| Ok(subsampler_net(k, b, r)?.indices))?
            }
            Method::Holistic => {
                let rs = self.ranker_refs()?;
                per_snr(&|b| Ok(holistic_select(k, b, &rs)?.indices))?
            }
            Method::Ensemble => {
                let rs = self.ranker_refs()?;
                let trainer = NeuralLeafTrainer {
                    train: self.train.by_snr(),
                    val: self.val.by_snr(),
                    cfg: TrainConfig {
                        seed: self.seed.wrapping_add(7),
                        ..leaf.clone()
                    },
                };
                ensemble_subsample(k, &self.val.by_snr(), &rs, &trainer, leaf_budget)?
            }
        };
        Ok(Selection {
            method,
            selector: Selector::Plan(plan.with_method(method.name())),
            seconds: start.elapsed().as_secs_f64(),
        })
    }

    fn ranker_refs(&self) -> Result<Vec<&dyn RankerModel>> {
        Ok(self
            .need_rankers()?
            .iter()
            .map(|r| r as &dyn RankerModel)
            .collect())
    }

    /// Trains the final MiniResNet on the reduced pooled training frames
    /// and scores it on the test split per SNR.
    pub fn evaluate(&self, selection: &Selection, cfg: &TrainConfig) -> Result<EvalReport> {
        let k = selection.k();
        let tr = reduce(&self.train, &selection.selector)?;
        let va = reduce(&self.val, &selection.selector)?;
        let te = reduce(&self.test, &selection.selector)?;
        let cfg = TrainConfig {
            seed: self.seed,
            ..cfg.clone()
        };
        let out = neurokit::train(
            ArchKind::MiniResNet.layers(k),
            Shape::Seq { channels: 2, len: k },
            Examples::new(&tr.x, &tr.labels),
            Examples::new(&va.x, &va.labels),
            &cfg,
        )?;
        let probs = out.model.predict_masked(&te.x, te.len(), &[])?;
        let preds: Vec<usize> = probs.chunks(ModType::COUNT).map(argmax).collect();
        let per_snr = confusion(&preds, &te.labels, &te.snrs, ModType::COUNT)?
            .into_iter()
            .map(|(s, m)| {
                (
                    s,
                    SnrResult {
                        accuracy: m.accuracy(),
                        confusion: m,
                    },
                )
            })
            .collect();
        Ok(EvalReport {
            method: selection.method.name().to_string(),
            d: self.d(),
            k,
            seed: self.seed,
            per_snr,
            epochs: out.history.epochs_run,
            train_seconds: out.history.seconds,
            selection_seconds: selection.seconds,
        })
    }
}

pub const RANKER_FILES: [(ArchKind, &str); 3] = [
    (ArchKind::MiniCnn, "ranker-cnn.msnn"),
    (ArchKind::MiniCldnn, "ranker-cldnn.msnn"),
    (ArchKind::MiniResNet, "ranker-resnet.msnn"),
];

pub fn save_rankers(dir: &Path, rankers: &[NeuralRanker]) -> Result<()> {
    for r in rankers {
        let (_, file) = RANKER_FILES.iter().find(|(k, _)| *k == r.kind).unwrap();
        checkpoint::save(&dir.join(file), &r.model)?;
    }
    Ok(())
}

pub fn load_rankers(dir: &Path) -> Result<Vec<NeuralRanker>> {
    RANKER_FILES
        .iter()
        .map(|&(kind, file)| NeuralRanker::from_model(kind, checkpoint::load(&dir.join(file))?))
        .collect()
}

/// Writes `report.csv`, `report.json`, one `confusion_<snr>.csv` per SNR
/// and, when there is one, `plan.json`.
pub fn write_outputs(dir: &Path, report: &EvalReport, plan: Option<&SelectionPlan>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_atomic(&dir.join("report.csv"), report_csv(report).as_bytes())?;
    write_atomic(
        &dir.join("report.json"),
        serde_json::to_string_pretty(report)?.as_bytes(),
    )?;
    for (s, r) in &report.per_snr {
        write_atomic(
            &dir.join(format!("confusion_{s}.csv")),
            confusion_csv(&r.confusion).as_bytes(),
        )?;
    }
    if let Some(p) = plan {
        super::plan_io::save_plan(&dir.join("plan.json"), p)?;
    }
    Ok(())
}

/// The selection a run config asks for: a saved plan if one is named,
/// otherwise `cfg.method` run on `bench`.
pub fn run_selection(bench: &mut Workbench, cfg: &RunConfig) -> Result<Selection> {
    let k = cfg.resolve_k(bench.d())?;
    if let Some(path) = &cfg.plan {
        let plan = super::plan_io::load_plan(path, Some(bench.grid()))?;
        if plan.d != bench.d() || plan.k != k {
            return Err(Error::Validation(vec![format!(
                "plan is for d={} k={}, run wants d={} k={k}",
                plan.d,
                plan.k,
                bench.d()
            )]));
        }
        let method = plan.method.as_deref().map(str::parse).transpose()?.unwrap_or(cfg.method);
        return Ok(Selection {
            method,
            selector: Selector::Plan(plan),
            seconds: 0.0,
        });
    }
    if cfg.method.needs_rankers() && bench.rankers().is_none() {
        match &cfg.rankers {
            Some(dir) => bench.set_rankers(load_rankers(dir)?)?,
            None => {
                bench.train_rankers(&cfg.ranker)?;
            }
        }
    }
    bench.select(cfg.method, k, cfg.leaf_budget, &cfg.leaf)
}

/// Runs selection and evaluation on an in-memory dataset.
pub fn run_pipeline_on(ds: &LabeledDataset, cfg: &RunConfig) -> Result<EvalReport> {
    let mut bench = Workbench::new(ds, cfg.seed, cfg.test_fraction, cfg.val_fraction)?;
    let selection = run_selection(&mut bench, cfg)?;
    let report = bench.evaluate(&selection, &cfg.train)?;
    if let Some(dir) = &cfg.out {
        write_outputs(dir, &report, selection.plan())?;
    }
    Ok(report)
}

/// Loads the dataset and runs the whole pipeline. On failure with an
/// output directory, a `FAILED` marker holding the error is left there.
pub fn run_pipeline(cfg: &RunConfig) -> Result<EvalReport> {
    let result = super::dataset_io::load_dataset(&cfg.dataset).and_then(|ds| run_pipeline_on(&ds, cfg));
    if let (Err(e), Some(dir)) = (&result, &cfg.out) {
        let _ = std::fs::create_dir_all(dir);
        let _ = write_atomic(&dir.join("FAILED"), format!("{e}\n").as_bytes());
    }
    result
}
