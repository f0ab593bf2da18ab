use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use amc_subsample::bench::{
    load_dataset, report_csv, run_pipeline, run_selection, save_dataset, save_plan, save_rankers,
    BenchConfig, EvalReport, Method, Workbench, REPORT_HEADER,
};
use amc_subsample::sigstream::generate_dataset;
use amc_subsample::Error;

#[derive(Parser)]
#[command(name = "amc-bench", about = "Sample-selection benchmark for modulation classification")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file or directory, depending on the subcommand.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Selecting {
    /// ensemble, holistic, subnet-{cnn,cldnn,resnet}, uniform, random,
    /// magnitude, pcs, fisher, laplacian, fqi or none.
    #[arg(long)]
    method: Option<Method>,
    /// Samples kept per frame; defaults to d.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize a dataset (MSUB file at --out).
    Gen(Common),
    /// Train the three rankers and save checkpoints into --out.
    TrainRankers(Common),
    /// Compute a selection plan (JSON at --out).
    Select {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sel: Selecting,
    },
    /// Select, train the final classifier and write reports into --out.
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sel: Selecting,
    },
    /// Summarize report.json files into one CSV (stdout or --out).
    Report {
        /// report.json files written by `eval`.
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(common: &Common, sel: Option<&Selecting>) -> amc_subsample::Result<BenchConfig> {
    let mut cfg = BenchConfig::load(common.config.as_deref())?;
    if let Some(s) = common.seed {
        cfg.gen.seed = s;
        cfg.run.seed = s;
    }
    if let Some(sel) = sel {
        if let Some(m) = sel.method {
            cfg.run.method = m;
        }
        if sel.k.is_some() {
            cfg.run.k = sel.k;
        }
    }
    Ok(cfg)
}

fn need_out(out: &Option<PathBuf>) -> amc_subsample::Result<&Path> {
    out.as_deref()
        .ok_or_else(|| Error::Validation(vec!["--out is required".into()]))
}

fn workbench(cfg: &BenchConfig) -> amc_subsample::Result<Workbench> {
    let ds = load_dataset(&cfg.run.dataset)?;
    Workbench::new(&ds, cfg.run.seed, cfg.run.test_fraction, cfg.run.val_fraction)
}

fn run(cli: Cli) -> amc_subsample::Result<()> {
    match cli.cmd {
        Cmd::Gen(c) => {
            let cfg = load_config(&c, None)?;
            let out = need_out(&c.out)?;
            let ds = generate_dataset(&cfg.gen)?;
            save_dataset(out, &ds)?;
            eprintln!("wrote {} frames to {}", ds.len(), out.display());
        }
        Cmd::TrainRankers(c) => {
            let cfg = load_config(&c, None)?;
            let out = need_out(&c.out)?;
            let mut wb = workbench(&cfg)?;
            let rankers = wb.train_rankers(&cfg.run.ranker)?;
            std::fs::create_dir_all(out)?;
            save_rankers(out, rankers)?;
            for r in rankers {
                eprintln!("{}: {} epochs, validation {:?}", r.kind, r.history.epochs_run, r.val_accuracy);
            }
        }
        Cmd::Select { common: c, sel: s } => {
            let cfg = load_config(&c, Some(&s))?;
            let out = need_out(&c.out)?;
            if cfg.run.method == Method::Magnitude {
                return Err(Error::Validation(vec![
                    "magnitude selection differs per frame and has no plan; use eval".into(),
                ]));
            }
            let mut wb = workbench(&cfg)?;
            let sel = run_selection(&mut wb, &cfg.run)?;
            save_plan(out, sel.plan().expect("plan-based method"))?;
            eprintln!("selection took {:.2}s", sel.seconds);
        }
        Cmd::Eval { common: c, sel: s } => {
            let mut cfg = load_config(&c, Some(&s))?;
            cfg.run.out = c.out.clone();
            let report = run_pipeline(&cfg.run)?;
            print!("{}", report_csv(&report));
        }
        Cmd::Report { reports, out } => {
            if reports.is_empty() {
                return Err(Error::Validation(vec!["no report files given".into()]));
            }
            let mut text = format!("method,k,seed,{REPORT_HEADER}\n");
            for p in &reports {
                let r: EvalReport = serde_json::from_str(&std::fs::read_to_string(p)?)?;
                for line in report_csv(&r).lines().skip(1) {
                    text.push_str(&format!("{},{},{},{line}\n", r.method, r.k, r.seed));
                }
            }
            match out {
                Some(p) => amc_subsample::bench::write_atomic(&p, text.as_bytes())?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Validation(_) | Error::InvalidInput(_) | Error::Parse { .. } | Error::Json(_) => {
                    ExitCode::from(2)
                }
                _ => ExitCode::from(3),
            }
        }
    }
}
