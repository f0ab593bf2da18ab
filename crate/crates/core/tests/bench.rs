use std::process::Command;

use amc_subsample::bench::*;
use amc_subsample::neurokit::TrainConfig;
use amc_subsample::search::SelectionPlan;
use amc_subsample::sigstream::{generate_dataset, GenConfig, LabeledDataset};
use amc_subsample::Error;

fn tiny_cfg() -> GenConfig {
    GenConfig {
        d: 16,
        shift: 8,
        snr_grid: vec![0, 18],
        frames_per_class_per_snr: 20,
        seed: 3,
        workers: 1,
        ..GenConfig::default()
    }
}

fn tiny() -> LabeledDataset {
    generate_dataset(&tiny_cfg()).unwrap()
}

fn quick_run(method: Method, k: Option<usize>) -> RunConfig {
    let quick = TrainConfig {
        max_epochs: 3,
        patience: 2,
        ..TrainConfig::default()
    };
    RunConfig {
        method,
        k,
        seed: 5,
        train: quick.clone(),
        ranker: quick.clone(),
        leaf: TrainConfig {
            max_epochs: 1,
            ..quick
        },
        leaf_budget: 4,
        ..RunConfig::default()
    }
}

#[test]
fn msub_round_trip_is_bit_exact() {
    let ds = tiny();
    let bytes = encode_dataset(&ds);
    assert_eq!(&bytes[..4], MSUB_MAGIC);
    assert_eq!(bytes.len(), MSUB_HEADER_LEN + 2 * 2 + ds.len() * (3 + 8 * 16));
    let back = decode_dataset(&bytes).unwrap();
    assert_eq!(encode_dataset(&back), bytes);
    assert_eq!(back.labels, ds.labels);
    assert_eq!(back.snrs, ds.snrs);
    assert!(back.iq.iter().zip(&ds.iq).all(|(a, b)| a.to_bits() == b.to_bits()));

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.msub");
    save_dataset(&p, &ds).unwrap();
    assert_eq!(std::fs::read(&p).unwrap(), bytes);
    assert_eq!(encode_dataset(&load_dataset(&p).unwrap()), bytes);
}

#[test]
fn corrupted_msub_files_give_structured_errors() {
    let ds = tiny();
    let bytes = encode_dataset(&ds);
    let header = MSUB_HEADER_LEN + 4;
    let frame = 3 + 8 * 16;
    // Cut in the middle of frame 5.
    let cut = &bytes[..header + 5 * frame + 40];
    match decode_dataset(cut) {
        Err(Error::Parse { offset, message }) => {
            assert_eq!(offset, header + 5 * frame);
            assert!(message.contains("frame 5"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(decode_dataset(&bad), Err(Error::Parse { offset: 0, .. })));
    let mut bad = bytes.clone();
    bad[header] = 200;
    assert!(matches!(decode_dataset(&bad), Err(Error::Parse { offset, .. }) if offset == header));
    assert!(matches!(decode_dataset(&bytes[..10]), Err(Error::Parse { .. })));
    let mut long = bytes.clone();
    long.push(0);
    assert!(decode_dataset(&long).is_err());
}

#[test]
fn empty_dataset_round_trips() {
    let ds = LabeledDataset::empty(8, vec![]);
    let b = encode_dataset(&ds);
    assert_eq!(b.len(), MSUB_HEADER_LEN);
    let back = decode_dataset(&b).unwrap();
    assert!(back.is_empty());
    assert_eq!(back.d, 8);
}

fn sample_plan() -> SelectionPlan {
    let mut p = SelectionPlan::new(128, 3).with_method("holistic");
    p.per_snr.insert(-4, vec![100, 3, 57]);
    p.per_snr.insert(18, vec![5, 127, 0]);
    p.epsilon_used.insert(18, 0.0625);
    p.val_acc.insert(18, 0.1 + 0.2);
    p
}

#[test]
fn plan_round_trip_preserves_order_exactly() {
    let p = sample_plan();
    let text = encode_plan(&p).unwrap();
    let back = decode_plan(&text, Some(&[-4, 18])).unwrap();
    assert_eq!(back, p);
    assert_eq!(back.per_snr[&-4], vec![100, 3, 57]);
    assert_eq!(encode_plan(&back).unwrap(), text);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plan.json");
    save_plan(&path, &p).unwrap();
    assert_eq!(load_plan(&path, None).unwrap(), p);
}

#[test]
fn plan_validation_itemizes_violations() {
    let mut p = sample_plan();
    p.per_snr.insert(18, vec![5, 128, 0]);
    match decode_plan(&encode_plan(&p).unwrap(), Some(&[-4, 10, 18])) {
        Err(Error::Validation(errs)) => {
            assert_eq!(errs.len(), 2, "{errs:?}");
            assert!(errs.iter().any(|e| e.contains("128")));
            assert!(errs.iter().any(|e| e.contains("SNR 10")));
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(decode_plan("{\"d\": 4", None), Err(Error::Json(_))));
}

fn report_with(n_snr: usize) -> EvalReport {
    let preds = [0usize, 1, 2, 2, 1, 0, 3];
    let labels = [0usize, 1, 1, 2, 1, 3, 3];
    let snrs: Vec<i16> = (0..7).map(|i| (i % n_snr) as i16 * 6).collect();
    let per_snr = confusion(&preds, &labels, &snrs, 10)
        .unwrap()
        .into_iter()
        .map(|(s, m)| (s, SnrResult { accuracy: m.accuracy(), confusion: m }))
        .collect();
    EvalReport {
        method: "uniform".into(),
        d: 64,
        k: 32,
        seed: 1,
        per_snr,
        epochs: 7,
        train_seconds: 3.5,
        selection_seconds: 0.0,
    }
}

#[test]
fn report_csv_shape_and_determinism() {
    let r = report_with(3);
    let csv = report_csv(&r);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], REPORT_HEADER);
    // Rows by SNR: {0, 3, 6} all right, {1, 4} all right, {2, 5} all wrong.
    assert_eq!(lines[1], "0,1.000000,7,0.500000,3.500000");
    assert_eq!(lines[2], "6,1.000000,7,0.500000,3.500000");
    assert_eq!(lines[3], "12,0.000000,7,0.500000,3.500000");
    for l in &lines[1..] {
        let acc: f64 = l.split(',').nth(1).unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&acc));
    }
    assert_eq!(report_csv(&r), csv);
    let m = &r.per_snr[&0].confusion;
    let c = confusion_csv(m);
    assert_eq!(c.lines().count(), 11);
    assert!(c.starts_with("true\\pred,BPSK,"));
}

#[test]
fn confusion_accuracy_agrees_with_direct_count() {
    let preds = [3usize, 1, 2, 2, 9, 0, 3, 3];
    let labels = [3usize, 1, 1, 2, 9, 3, 3, 0];
    let m = &confusion(&preds, &labels, &[2; 8], 10).unwrap()[&2];
    let direct = preds.iter().zip(&labels).filter(|(a, b)| a == b).count() as f64 / 8.0;
    assert!((m.accuracy() - direct).abs() <= 1e-9);
    assert_eq!(m.row_sums()[3], 3);
}

#[test]
fn uniform_at_full_width_reproduces_no_subsampling() {
    let ds = tiny();
    let none = run_pipeline_on(&ds, &quick_run(Method::None, None)).unwrap();
    let uni = run_pipeline_on(&ds, &quick_run(Method::Uniform, Some(16))).unwrap();
    let mut u = uni.without_timing();
    u.method = "none".into();
    assert_eq!(u, none.without_timing());
    for r in none.per_snr.values() {
        assert_eq!(r.confusion.row_sums(), vec![5; 10]);
        assert!((r.accuracy - r.confusion.accuracy()).abs() <= 1e-9);
    }
}

#[test]
fn pipeline_is_reproducible_for_a_fixed_seed() {
    let ds = tiny();
    for m in [Method::Holistic, Method::Magnitude, Method::Fisher] {
        let a = run_pipeline_on(&ds, &quick_run(m, Some(6))).unwrap();
        let b = run_pipeline_on(&ds, &quick_run(m, Some(6))).unwrap();
        assert_eq!(report_csv(&a.without_timing()), report_csv(&b.without_timing()), "{m}");
        assert_eq!(a.k, 6);
    }
}

#[test]
fn every_method_runs_end_to_end() {
    let ds = tiny();
    let mut bench = Workbench::new(&ds, 2, 0.25, 0.25).unwrap();
    let quick = quick_run(Method::None, None);
    bench.train_rankers(&quick.ranker).unwrap();
    for m in Method::ALL {
        let k = if m == Method::None { 16 } else { 4 };
        let sel = bench.select(m, k, 4, &quick.leaf).unwrap();
        if let Some(p) = sel.plan() {
            p.validate(Some(bench.grid())).unwrap();
            assert_eq!(p.method.as_deref(), Some(m.name()));
        }
        let r = bench.evaluate(&sel, &quick.train).unwrap();
        assert_eq!(r.per_snr.len(), 2, "{m}");
    }
}

#[test]
fn none_requires_full_width() {
    let ds = tiny();
    assert!(matches!(
        run_pipeline_on(&ds, &quick_run(Method::None, Some(8))),
        Err(Error::Validation(_))
    ));
    assert!(matches!(
        run_pipeline_on(&ds, &quick_run(Method::Uniform, Some(17))),
        Err(Error::Validation(_))
    ));
}

#[test]
fn outputs_and_failure_marker() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.msub");
    save_dataset(&data, &tiny()).unwrap();
    let out = dir.path().join("run");
    let cfg = RunConfig {
        dataset: data,
        out: Some(out.clone()),
        ..quick_run(Method::Random, Some(8))
    };
    let r = run_pipeline(&cfg).unwrap();
    for f in ["report.csv", "report.json", "confusion_0.csv", "confusion_18.csv", "plan.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert_eq!(std::fs::read_to_string(out.join("report.csv")).unwrap(), report_csv(&r));
    let plan = load_plan(&out.join("plan.json"), Some(&[0, 18])).unwrap();
    assert_eq!(plan.k, 8);

    // Evaluating the saved plan gives the same report.
    let again = run_pipeline(&RunConfig {
        plan: Some(out.join("plan.json")),
        out: None,
        ..cfg.clone()
    })
    .unwrap();
    assert_eq!(again.without_timing().per_snr, r.without_timing().per_snr);

    let bad_out = dir.path().join("bad");
    let bad = RunConfig {
        dataset: dir.path().join("missing.msub"),
        out: Some(bad_out.clone()),
        ..cfg
    };
    assert!(run_pipeline(&bad).is_err());
    assert!(bad_out.join("FAILED").exists());
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_amc-bench"))
}

#[test]
fn cli_runs_the_workflow_and_maps_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = |s: &str| dir.path().join(s);
    let data = p("d.msub");
    std::fs::write(
        p("c.conf"),
        format!(
            "# tiny\nd = 16\nshift = 8\nsnr_grid = 0, 18\nframes_per_class_per_snr = 20\n\
             dataset = {}\nepochs = 2\nranker_epochs = 2\nleaf_epochs = 1\nleaf_budget = 2\n",
            data.display()
        ),
    )
    .unwrap();
    let conf = p("c.conf");
    let ok = |args: &[&str]| {
        let o = cli().args(args).output().unwrap();
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        o
    };
    let c = conf.to_str().unwrap();
    ok(&["gen", "--config", c, "--seed", "4", "--out", data.to_str().unwrap()]);
    assert!(load_dataset(&data).unwrap().len() == 400);
    ok(&["train-rankers", "--config", c, "--out", p("rk").to_str().unwrap()]);
    for (_, f) in RANKER_FILES {
        assert!(p("rk").join(f).exists());
    }
    std::fs::write(
        p("c2.conf"),
        format!("{}rankers = {}\n", std::fs::read_to_string(&conf).unwrap(), p("rk").display()),
    )
    .unwrap();
    let c2 = p("c2.conf");
    let c2 = c2.to_str().unwrap();
    ok(&["select", "--config", c2, "--method", "holistic", "--k", "4", "--out", p("plan.json").to_str().unwrap()]);
    load_plan(&p("plan.json"), Some(&[0, 18])).unwrap();
    let o = ok(&["eval", "--config", c2, "--method", "uniform", "--k", "8", "--out", p("ev").to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with(REPORT_HEADER));
    let o = ok(&["report", p("ev").join("report.json").to_str().unwrap()]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().starts_with("uniform,8,0,"));

    let code = |args: &[&str]| cli().args(args).output().unwrap().status.code();
    std::fs::write(p("bad.conf"), "colour = red\n").unwrap();
    assert_eq!(code(&["gen", "--config", p("bad.conf").to_str().unwrap(), "--out", p("x").to_str().unwrap()]), Some(2));
    assert_eq!(code(&["eval", "--config", c, "--method", "none", "--k", "3"]), Some(2));
    assert_eq!(code(&["select", "--config", c, "--method", "magnitude", "--k", "3", "--out", p("m.json").to_str().unwrap()]), Some(2));
    assert_eq!(code(&["eval", "--method", "sideways"]), Some(2));
    std::fs::write(p("missing.conf"), format!("dataset = {}\n", p("nope.msub").display())).unwrap();
    assert_eq!(code(&["eval", "--config", p("missing.conf").to_str().unwrap()]), Some(3));
}
