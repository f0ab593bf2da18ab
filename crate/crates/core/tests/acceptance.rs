//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness. Pass a substring as the first argument
//! to run only matching criteria, e.g. `cargo test --test acceptance -- tier`;
//! `--skip-desk` leaves out the long desk benchmark.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use amc_subsample::baselines::{fisher_feature_scores, fqi_scores, PcaModel};
use amc_subsample::bench::{
    decode_dataset, decode_plan, encode_dataset, encode_plan, load_dataset, load_plan, save_dataset, save_plan,
    Method, Workbench,
};
use amc_subsample::classifiers::RankerModel;
use amc_subsample::neurokit::TrainConfig;
use amc_subsample::search::{
    ensemble_subsample_logged, epsilon_greedy, NeuralLeafTrainer, SearchConfig, SearchResult, SelectionPlan,
    DEFAULT_LEAF_BUDGET,
};
use amc_subsample::sigstream::{generate_dataset, GenConfig, ModType};
use amc_subsample::wrapper::{holistic_select, subsampler_net, tier_divide, RemovalScore};
use amc_subsample::Error;
use common::gradcheck::{check_gradients, gradcheck_configs};
use common::oracles::greedy_oracle;
use common::planted::{argmax, dead_input_case, planted, PLANTED_FEATURE};
use common::signal::{bpsk_low_band_share, cell_snr, constellation, expected_alphabet};
use common::stubs::{blank_batch, ConstLeaf, HashLeaf, HashRanker};
use common::tasks::{gnb_gaussian_pair_accuracy, gnb_pair_accuracy, two_gaussian_bayes_accuracy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// What a criterion measured; `Err` carries the reason it failed.
type Verdict = Result<String, String>;

type Criterion = (&'static str, fn() -> Verdict);

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_seconds(v: Verdict, start: Instant, limit: f64) -> Verdict {
    let secs = start.elapsed().as_secs_f64();
    match v {
        Ok(d) if secs <= limit => Ok(format!("{d}; {secs:.1}s <= {limit}s")),
        Ok(d) => Err(format!("{d}; took {secs:.1}s > {limit}s")),
        Err(e) => Err(e),
    }
}

fn rankers3(seed: u64, d: usize) -> Vec<HashRanker> {
    (0..3).map(|i| HashRanker::new(seed * 31 + i, d)).collect()
}

fn refs(rs: &[HashRanker]) -> Vec<&dyn RankerModel> {
    rs.iter().map(|r| r as &dyn RankerModel).collect()
}

fn greedy_oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let mut n = 0;
    for d in 1..=10 {
        for k in 1..=d.min(4) {
            for seed in 0..5 {
                let r = HashRanker::new(seed * 100 + d as u64, d);
                let b = blank_batch(d, 0);
                let got = subsampler_net(k, &b, &r).map_err(|e| e.to_string())?.indices;
                let want = greedy_oracle(k, &b, &r);
                if got != want {
                    return Err(format!("d={d} k={k} seed={seed}: {got:?} vs oracle {want:?}"));
                }
                n += 1;
            }
        }
    }
    within_seconds(Ok(format!("{n} instances match exactly")), start, 5.0)
}

fn epsilon_reduction_identity() -> Verdict {
    for seed in 0..5 {
        let (d, k) = (12, 5);
        let rs = rankers3(seed, d);
        let rs = refs(&rs);
        let b = blank_batch(d, 4);
        let cfg = SearchConfig {
            d,
            k,
            epsilon: 1.0 / d as f64,
            prev_snr_acc: 0.0,
            leaf_budget: DEFAULT_LEAF_BUDGET,
        };
        let out = epsilon_greedy(&cfg, 4, &b, &rs, &ConstLeaf(0.5)).map_err(|e| e.to_string())?;
        let SearchResult::Found(leaf) = out.result else {
            return Err(format!("seed {seed}: nothing found"));
        };
        let want = holistic_select(k, &b, &rs).map_err(|e| e.to_string())?.indices;
        if leaf.indices != want {
            return Err(format!("seed {seed}: {:?} vs holistic {want:?}", leaf.indices));
        }
    }
    Ok("5 seeds, identical index sequences".into())
}

fn tree_bound_and_termination() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let d = rng.gen_range(3..9);
        let k = rng.gen_range(1..4).min(d);
        let m = rng.gen_range(1..=d);
        let seed = rng.gen::<u32>() as u64;
        let rs = rankers3(seed, d);
        let cfg = SearchConfig {
            d,
            k,
            epsilon: m as f64 / d as f64,
            prev_snr_acc: 1.0,
            leaf_budget: 1_000_000,
        };
        let out = epsilon_greedy(&cfg, 0, &blank_batch(d, 0), &refs(&rs), &HashLeaf { seed })
            .map_err(|e| e.to_string())?;
        let bound = cfg.arity().pow(k as u32);
        if out.stats.leaves_visited > bound {
            return Err(format!("case {case}: {} leaves > bound {bound}", out.stats.leaves_visited));
        }
        worst = worst.max(out.stats.leaves_visited as f64 / bound as f64);
    }
    let rs = rankers3(3, 6);
    let per_snr: BTreeMap<i16, _> = [-10i16, 0, 10].iter().map(|&s| (s, blank_batch(6, s))).collect();
    let (plan, _) = ensemble_subsample_logged(2, &per_snr, &refs(&rs), &ConstLeaf(0.0), 1000)
        .map_err(|e| e.to_string())?;
    check(
        plan.missed == vec![-10, 0, 10] && plan.epsilon_used.values().all(|&e| e == 1.0),
        format!(
            "100 configs within (eps d)^k (max ratio {worst:.2}); adversarial run stopped at eps=1 with missed {:?}",
            plan.missed
        ),
    )
}

fn tier_laws() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..1000 {
        let universe = rng.gen_range(1..30);
        let sets: Vec<Vec<usize>> = (0..3)
            .map(|_| {
                let p: f64 = rng.gen();
                (0..universe).filter(|_| rng.gen_bool(p)).collect()
            })
            .collect();
        let scores: Vec<Vec<RemovalScore>> = (0..3)
            .map(|_| {
                (0..universe)
                    .map(|index| RemovalScore {
                        index,
                        accuracy: rng.gen_range(0..10) as f64 / 10.0,
                    })
                    .collect()
            })
            .collect();
        let t = tier_divide([&sets[0], &sets[1], &sets[2]], [&scores[0], &scores[1], &scores[2]]);
        let fail = |why: &str| Err(format!("trial {trial}: {why}"));
        let mut seen = BTreeSet::new();
        for (tier, j, p) in t.ordered() {
            if !seen.insert(j) {
                return fail("index in two tiers");
            }
            let owners: Vec<usize> = (0..3).filter(|&r| sets[r].contains(&j)).collect();
            if owners.len() != 4 - tier as usize {
                return fail("tier does not match membership count");
            }
            let want: f64 = owners.iter().map(|&r| scores[r][j].accuracy).sum();
            if (p - want).abs() > 1e-12 {
                return fail("priority is not the owners' summed accuracy");
            }
        }
        let union: BTreeSet<usize> = sets.iter().flatten().copied().collect();
        if seen != union {
            return fail("tiers do not cover the union");
        }
        for tier in [&t.tier1, &t.tier2, &t.tier3] {
            if !tier.windows(2).all(|w| w[0].1 < w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0)) {
                return fail("tier not sorted by priority then index");
            }
        }
        let want_head = t.tier1.first().or(t.tier2.first()).or(t.tier3.first()).map(|e| e.0);
        if t.head().map(|h| h.1) != want_head {
            return fail("head is not the first entry of the best tier");
        }
    }
    Ok("1000 random triples".into())
}

fn gradient_checks() -> Verdict {
    let start = Instant::now();
    let mut kinds = BTreeSet::new();
    let mut worst = 0.0f64;
    for cfg in gradcheck_configs() {
        kinds.extend(cfg.kinds());
        let r = check_gradients(&cfg);
        if r.max_rel_err > 1e-4 {
            return Err(format!("config {}: rel err {:.2e} at {}", cfg.seed, r.max_rel_err, r.worst));
        }
        worst = worst.max(r.max_rel_err);
    }
    let all = [
        "conv1d",
        "dense",
        "relu",
        "max_pool1d",
        "batch_norm",
        "lstm_cell_layer",
        "flatten",
        "softmax",
        "residual",
    ];
    if let Some(k) = all.iter().find(|k| !kinds.contains(*k)) {
        return Err(format!("no config exercises {k}"));
    }
    within_seconds(
        Ok(format!("20 configs, {} layer kinds, max rel err {worst:.2e}", all.len())),
        start,
        60.0,
    )
}

fn signal_fidelity() -> Verdict {
    let start = Instant::now();
    let cfg = GenConfig {
        snr_grid: (-20..=18).step_by(2).collect(),
        ..GenConfig::default()
    };
    let mut worst = 0.0f64;
    for &snr in &cfg.snr_grid {
        for m in ModType::ALL {
            let e = (cell_snr(&cfg, m, snr, 8) - snr as f64).abs();
            if e > 0.7 {
                return Err(format!("{m} at {snr} dB off by {e:.3} dB"));
            }
            worst = worst.max(e);
        }
    }
    for m in ModType::ALL {
        if let Some((n, _)) = constellation(m) {
            if Some(n) != expected_alphabet(m) {
                return Err(format!("{m} has {n} points"));
            }
        }
    }
    let share = bpsk_low_band_share(10);
    within_seconds(
        check(
            share >= 0.9,
            format!("max SNR error {worst:.3} dB; alphabets exact; BPSK low-band share {share:.4}"),
        ),
        start,
        300.0,
    )
}

fn gnb_table() -> Verdict {
    let start = Instant::now();
    let qam = gnb_pair_accuracy(ModType::Qam16, ModType::Qam64, 1, 200);
    let pam = gnb_pair_accuracy(ModType::Pam4, ModType::Qam64, 1, 200);
    let gauss = gnb_gaussian_pair_accuracy(3, 200_000);
    let bayes = two_gaussian_bayes_accuracy();
    within_seconds(
        check(
            qam <= 0.65 && pam - qam >= 0.10 && (gauss - 0.933).abs() <= 0.01 && (bayes - 0.933).abs() <= 0.01,
            format!("QAM16/QAM64 {qam:.3}, PAM4/QAM64 {pam:.3}, N(0,1)/N(3,1) {gauss:.4} (closed form {bayes:.4})"),
        ),
        start,
        300.0,
    )
}

fn serialization() -> Verdict {
    let start = Instant::now();
    let ds = generate_dataset(&GenConfig {
        d: 32,
        shift: 16,
        snr_grid: vec![-10, 18],
        frames_per_class_per_snr: 10,
        seed: 4,
        ..GenConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let bytes = encode_dataset(&ds);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("a.msub");
    save_dataset(&path, &ds).map_err(|e| e.to_string())?;
    let back = load_dataset(&path).map_err(|e| e.to_string())?;
    let bit_exact = encode_dataset(&back) == bytes
        && back.iq.iter().zip(&ds.iq).all(|(a, b)| a.to_bits() == b.to_bits())
        && back.labels == ds.labels
        && back.snrs == ds.snrs;

    let mut plan = SelectionPlan::new(32, 3).with_method("ensemble");
    plan.per_snr.insert(-10, vec![31, 0, 7]);
    plan.per_snr.insert(18, vec![4, 2, 9]);
    plan.val_acc.insert(18, 0.1 + 0.2);
    let ppath = dir.path().join("plan.json");
    save_plan(&ppath, &plan).map_err(|e| e.to_string())?;
    let plan_exact = load_plan(&ppath, Some(&[-10, 18])).map_err(|e| e.to_string())? == plan
        && encode_plan(&decode_plan(&encode_plan(&plan).unwrap(), None).unwrap()).unwrap()
            == encode_plan(&plan).unwrap();

    let frame = 3 + 8 * ds.d;
    let header = bytes.len() - ds.len() * frame;
    let truncated = matches!(
        decode_dataset(&bytes[..header + 3 * frame + 5]),
        Err(Error::Parse { offset, ref message }) if offset == header + 3 * frame && message.contains("frame 3")
    );
    let mut bad = bytes.clone();
    bad[0] = b'Z';
    let magic = matches!(decode_dataset(&bad), Err(Error::Parse { offset: 0, .. }));
    let mut bad = bytes.clone();
    bad[4] = 9;
    let version = matches!(decode_dataset(&bad), Err(Error::Parse { offset: 4, .. }));
    let mut bad_plan = plan.clone();
    bad_plan.per_snr.insert(18, vec![4, 32, 9]);
    let plan_err = matches!(
        decode_plan(&encode_plan(&bad_plan).unwrap(), None),
        Err(Error::Validation(ref v)) if v.iter().any(|e| e.contains("32"))
    );
    within_seconds(
        check(
            bit_exact && plan_exact && truncated && magic && version && plan_err,
            format!(
                "msub exact {bit_exact}, plan exact {plan_exact}, truncation {truncated}, magic {magic}, version {version}, plan schema {plan_err}"
            ),
        ),
        start,
        10.0,
    )
}

fn planted_baselines() -> Verdict {
    let hits = (0..10)
        .filter(|&seed| {
            let (x, y) = planted(seed, 400);
            argmax(&fisher_feature_scores(&x, 32, &y).unwrap()) == PLANTED_FEATURE
        })
        .count();
    let (model, batch) = dead_input_case();
    let dead = fqi_scores(&model, &batch).map_err(|e| e.to_string())?[2];
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let x: Vec<f32> = (0..300 * 10).map(|i| rng.gen::<f32>() * (1 + i % 10) as f32).collect();
    let residual = PcaModel::fit(&x, 10).map_err(|e| e.to_string())?.orthonormality_residual();
    check(
        hits == 10 && dead == 0.0 && residual <= 1e-6,
        format!("Fisher {hits}/10, FQI of dead input {dead}, PCA residual {residual:.1e}"),
    )
}

const DESK_SEEDS: [u64; 3] = [1, 2, 3];
const DESK_D: usize = 64;
const DESK_K: usize = 32;
const DESK_TOP_SNR: i16 = 18;

/// 18 dB test accuracy and training seconds of one desk run.
#[derive(Clone, Copy, Debug)]
struct DeskRun {
    acc: f64,
    train_seconds: f64,
}

#[derive(Debug, Default)]
struct DeskResults {
    runs: BTreeMap<(&'static str, usize), Vec<DeskRun>>,
    seconds: f64,
}

impl DeskResults {
    fn mean_acc(&self, key: (&'static str, usize)) -> f64 {
        let v = &self.runs[&key];
        v.iter().map(|r| r.acc).sum::<f64>() / v.len() as f64
    }

    fn mean_seconds(&self, key: (&'static str, usize)) -> f64 {
        let v = &self.runs[&key];
        v.iter().map(|r| r.train_seconds).sum::<f64>() / v.len() as f64
    }
}

/// The desk benchmark: per seed, rankers plus the final classifier for the
/// full width, uniform at d/2 and d/4, random and ensemble at d/2.
fn desk_benchmark() -> Result<DeskResults, String> {
    let start = Instant::now();
    let mut out = DeskResults::default();
    let s = |e: amc_subsample::Error| e.to_string();
    for seed in DESK_SEEDS {
        let ds = generate_dataset(&GenConfig {
            d: DESK_D,
            shift: DESK_D / 2,
            snr_grid: vec![-10, 0, 10, 18],
            frames_per_class_per_snr: 300,
            seed,
            workers: 1,
            ..GenConfig::default()
        })
        .map_err(s)?;
        let mut wb = Workbench::new(&ds, seed, 0.25, 0.25).map_err(s)?;
        wb.train_rankers(&TrainConfig {
            max_epochs: 20,
            patience: 4,
            ..TrainConfig::default()
        })
        .map_err(s)?;
        let final_cfg = TrainConfig::default();
        let leaf = NeuralLeafTrainer::default_config(0);
        let runs = [
            ("none", Method::None, DESK_D),
            ("uniform", Method::Uniform, DESK_K),
            ("uniform", Method::Uniform, DESK_K / 2),
            ("random", Method::Random, DESK_K),
            ("ensemble", Method::Ensemble, DESK_K),
        ];
        for (name, method, k) in runs {
            let sel = wb.select(method, k, DEFAULT_LEAF_BUDGET, &leaf).map_err(s)?;
            let rep = wb.evaluate(&sel, &final_cfg).map_err(s)?;
            let run = DeskRun {
                acc: rep.accuracy_at(DESK_TOP_SNR).unwrap_or(f64::NAN),
                train_seconds: rep.train_seconds,
            };
            eprintln!(
                "  seed {seed} {name:<8} k={k:<2} acc@{DESK_TOP_SNR}dB {:.4} train {:.1}s ({} epochs) select {:.1}s",
                run.acc, run.train_seconds, rep.epochs, sel.seconds
            );
            out.runs.entry((name, k)).or_default().push(run);
        }
    }
    out.seconds = start.elapsed().as_secs_f64();
    Ok(out)
}

fn desk_accuracy(r: &DeskResults) -> Verdict {
    let ens = r.mean_acc(("ensemble", DESK_K));
    let rnd = r.mean_acc(("random", DESK_K));
    let uni = r.mean_acc(("uniform", DESK_K));
    let full = r.mean_acc(("none", DESK_D));
    let detail = format!(
        "mean acc@18dB over {} seeds: ensemble {ens:.4}, random {rnd:.4}, uniform {uni:.4}, full {full:.4}; {:.0}s total",
        DESK_SEEDS.len(),
        r.seconds
    );
    let mut misses = Vec::new();
    if ens < rnd {
        misses.push("ensemble < random");
    }
    if ens < uni {
        misses.push("ensemble < uniform");
    }
    if ens < full - 0.02 {
        misses.push("ensemble < full - 2 points");
    }
    if r.seconds > 45.0 * 60.0 {
        misses.push("over 45 minutes");
    }
    if misses.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", misses.join(", ")))
    }
}

fn desk_training_time(r: &DeskResults) -> Verdict {
    // Uniform at k = d is the full-width run.
    let t: Vec<f64> = [("none", DESK_D), ("uniform", DESK_K), ("uniform", DESK_K / 2)]
        .into_iter()
        .map(|key| r.mean_seconds(key))
        .collect();
    check(
        t[0] > t[1] && t[1] > t[2],
        format!(
            "mean training seconds k={DESK_D}: {:.1}, k={DESK_K}: {:.1}, k={}: {:.1}",
            t[0],
            t[1],
            DESK_K / 2,
            t[2]
        ),
    )
}

fn guarded(f: impl FnOnce() -> Verdict) -> Verdict {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(v) => v,
        Err(p) => Err(format!(
            "panicked: {}",
            p.downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default()
        )),
    }
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let filter = args.iter().find(|a| !a.starts_with('-')).cloned();
    let skip_desk = args.iter().any(|a| a == "--skip-desk");
    let wanted = |name: &str| filter.as_deref().is_none_or(|f| name.contains(f));
    let quick: [Criterion; 9] = [
        ("greedy-oracle-equivalence", greedy_oracle_equivalence),
        ("epsilon-reduction-identity", epsilon_reduction_identity),
        ("tree-bound-and-termination", tree_bound_and_termination),
        ("tier-laws", tier_laws),
        ("gradient-checks", gradient_checks),
        ("signal-fidelity", signal_fidelity),
        ("gnb-pairs", gnb_table),
        ("serialization", serialization),
        ("planted-feature-baselines", planted_baselines),
    ];
    let mut results: Vec<(&str, Verdict)> = Vec::new();
    let mut report = |name: &'static str, v: Verdict| {
        match &v {
            Ok(d) => println!("PASS {name}: {d}"),
            Err(d) => println!("FAIL {name}: {d}"),
        }
        results.push((name, v));
    };
    for (name, f) in quick {
        if wanted(name) {
            report(name, guarded(f));
        }
    }
    let desk_names = ["desk-benchmark-accuracy", "desk-training-time-trend"];
    if !skip_desk && desk_names.iter().any(|n| wanted(n)) {
        eprintln!("desk benchmark: {} seeds, d={DESK_D}, k={DESK_K}", DESK_SEEDS.len());
        match panic::catch_unwind(desk_benchmark) {
            Ok(Ok(r)) => {
                report(desk_names[0], guarded(|| desk_accuracy(&r)));
                report(desk_names[1], guarded(|| desk_training_time(&r)));
            }
            Ok(Err(e)) => {
                for n in desk_names {
                    report(n, Err(format!("benchmark failed: {e}")));
                }
            }
            Err(_) => {
                for n in desk_names {
                    report(n, Err("benchmark panicked".into()));
                }
            }
        }
    }
    let failed = results.iter().filter(|(_, v)| v.is_err()).count();
    println!("{} criteria, {} passed, {failed} failed", results.len(), results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
