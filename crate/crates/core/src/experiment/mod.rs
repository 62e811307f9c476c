//! Experiment driver: the per-seed pipeline of each mode and its CSV
//! outputs.

mod config;

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;

pub use config::{
    fmt_float, parse_seeds, EvalConfig, ExperimentConfig, MetaChoice, Mode, ReductionConfig,
    VerifyConfig,
};

use crate::error::{Error, Result};
use crate::geometry::{LinearRep, TaskDataset};
use crate::learners::{
    metalearn_agnostic, metalearn_monotone, metalearn_realizable, multitask_erm, specialize,
    SearchConfig,
};
use crate::realizability::Family;
use crate::reductions::{
    meta_from_multitask, multitask_from_meta, resampling_budget, MultitaskOutcome,
    StoredSpecializer,
};
use crate::rng::{self, tags};
use crate::task_model::{
    random_orthonormal_rep, sample_meta, SpecializerLaw, Stream, SyntheticMeta,
};
use crate::theory_lab::{
    check_mon_bound, exact_err, exact_pnr, finite_nrc, finite_vc, pnr_lower_bound, vc_witness,
    DiscreteDist, FiniteClass, PnrOptions,
};

/// Mean test error of `rep` on `eval_tasks` fresh tasks from the evaluation
/// stream, each specialized on `n_spec` points and tested on
/// `test_points` further points, with the standard error across tasks.
pub fn evaluate_rep_err(
    rep: &LinearRep,
    meta: &SyntheticMeta,
    n_spec: usize,
    eval: &EvalConfig,
) -> Result<(f64, f64)> {
    if eval.eval_tasks == 0 || eval.test_points == 0 || n_spec == 0 {
        return Err(Error::invalid("eval_tasks, test_points and n_spec must be positive"));
    }
    let errors: Vec<f64> = (0..eval.eval_tasks as u64)
        .map(|j| {
            let task = meta.task(Stream::Eval, j);
            let train = task.draw(0, n_spec);
            let test = task.draw(n_spec as u64, eval.test_points);
            let h = specialize(rep, &train, meta.family())?;
            let wrong = test.iter().filter(|p| h.classify(&rep.apply(p.x())) != p.y()).count();
            Ok(wrong as f64 / test.len() as f64)
        })
        .collect::<Result<_>>()?;
    Ok(mean_and_stderr(&errors))
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Median of the finite entries, or `None` if there are none.
pub fn median(xs: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = xs.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// The synthetic metadistribution of one experiment seed.
pub fn build_meta(cfg: &ExperimentConfig, seed: u64) -> Result<SyntheticMeta> {
    let b_star = random_orthonormal_rep(cfg.k, cfg.d, &mut rng::stream(seed, tags::REP, 0));
    SyntheticMeta::new(
        b_star,
        cfg.features,
        SpecializerLaw { family: cfg.family, offset_range: cfg.offset_range },
        cfg.noise,
        seed,
    )
}

/// Rows and aggregates of one run. Wallclock times stay in memory.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub mode: Mode,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub summary: Vec<(String, String)>,
    pub wallclock: Vec<(u64, Duration)>,
}

impl RunResult {
    /// Column `name` of every row.
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn summary_value(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Fixed `rows.csv` header of each mode.
pub fn header(mode: Mode) -> Vec<&'static str> {
    match mode {
        Mode::MetalearnMon | Mode::MetalearnReal | Mode::MetalearnAgn => {
            vec!["seed", "objective", "rep_err", "stderr", "baseline_err", "success"]
        }
        Mode::Multitask => vec!["seed", "training_error", "test_error", "stderr", "success"],
        Mode::Reduction => vec![
            "seed",
            "meta_error",
            "baseline_error",
            "mtl_outcome",
            "mtl_error",
            "mtl_stderr",
            "success",
        ],
        Mode::Verify => vec![
            "seed", "instance", "check", "family", "m", "err", "lhs", "rhs", "stderr", "exact",
            "pass",
        ],
        Mode::VcWitness => vec!["t", "d", "k", "size", "expected_size", "labelings", "verified"],
        Mode::NrcScan => {
            vec!["class", "l", "domain_size", "vc", "nrc", "expected_vc", "expected_nrc", "pass"]
        }
    }
}

type Rows = Vec<Vec<String>>;

fn search_for(cfg: &ExperimentConfig, seed: u64) -> SearchConfig {
    cfg.search.with_seed(seed)
}

fn metalearn_rows(cfg: &ExperimentConfig, seed: u64) -> Result<Rows> {
    let meta = build_meta(cfg, seed)?;
    let sample = sample_meta(&meta, cfg.t, cfg.n, Stream::Train)?;
    let search = search_for(cfg, seed);
    let (rep, objective) = match cfg.mode {
        Mode::MetalearnMon => {
            let fit = metalearn_monotone(&sample)?;
            (fit.rep, fit.violations as f64)
        }
        Mode::MetalearnReal => {
            let out = metalearn_realizable(&sample, cfg.family, cfg.k, &search)?;
            (out.rep, out.objective)
        }
        _ => {
            let out = metalearn_agnostic(&sample, cfg.family, cfg.k, &search)?;
            (out.rep, out.objective)
        }
    };
    let (err, se) = evaluate_rep_err(&rep, &meta, cfg.n_spec, &cfg.eval)?;
    let (base, _) = evaluate_rep_err(meta.b_star(), &meta, cfg.n_spec, &cfg.eval)?;
    Ok(vec![vec![
        seed.to_string(),
        fmt_float(objective),
        fmt_float(err),
        fmt_float(se),
        fmt_float(base),
        (err <= cfg.epsilon).to_string(),
    ]])
}

fn task_test_error(
    classify: impl Fn(&[f64]) -> crate::geometry::Label,
    test: &TaskDataset,
) -> f64 {
    test.iter().filter(|p| classify(p.x()) != p.y()).count() as f64 / test.len() as f64
}

fn multitask_rows(cfg: &ExperimentConfig, seed: u64) -> Result<Rows> {
    let meta = build_meta(cfg, seed)?;
    let sample = sample_meta(&meta, cfg.t, cfg.n, Stream::Train)?;
    let model = multitask_erm(sample.tasks(), cfg.k, cfg.family, &search_for(cfg, seed))?;
    let errors: Vec<f64> = (0..cfg.t)
        .map(|j| {
            let test = meta.task(Stream::Train, j as u64).draw(cfg.n as u64, cfg.eval.test_points);
            model.error_on(j, &test)
        })
        .collect();
    let (err, se) = mean_and_stderr(&errors);
    Ok(vec![vec![
        seed.to_string(),
        fmt_float(model.training_error()),
        fmt_float(err),
        fmt_float(se),
        (err <= cfg.epsilon).to_string(),
    ]])
}

fn reduction_rows(cfg: &ExperimentConfig, seed: u64) -> Result<Rows> {
    let meta = build_meta(cfg, seed)?;
    let search = search_for(cfg, seed);
    let n = cfg.n as u64;

    let stored = sample_meta(&meta, cfg.t, cfg.n, Stream::Train)?.tasks().to_vec();
    let specializer = StoredSpecializer::new(stored, cfg.k, cfg.family, search.clone(), seed)?;
    let new_task = meta.task(Stream::Eval, 0);
    let new_train = new_task.draw(0, cfg.n);
    let new_test = new_task.draw(n, cfg.eval.test_points);
    let clf = meta_from_multitask(&specializer, &new_train)?;
    let meta_error = clf.error_on(&new_test);
    let b_star = meta.b_star();
    let h = specialize(b_star, &new_train, cfg.family)?;
    let baseline = task_test_error(|x| h.classify(&b_star.apply(x)), &new_test);

    let c = cfg.reduction.c.ok_or_else(|| Error::invalid("reduction mode needs c"))?;
    let budget = resampling_budget(c, cfg.t)?;
    let pool = cfg.n * budget + cfg.n_spec;
    let full: Vec<TaskDataset> = (0..cfg.t as u64)
        .map(|j| meta.task(Stream::Custom(1), j).draw(0, pool))
        .collect();
    let outcome = multitask_from_meta(&full, c, cfg.n, cfg.n_spec, cfg.family, seed, |s| {
        Ok(match cfg.reduction.metalearner {
            MetaChoice::Realizable => metalearn_realizable(s, cfg.family, cfg.k, &search)?.rep,
            MetaChoice::Agnostic => metalearn_agnostic(s, cfg.family, cfg.k, &search)?.rep,
        })
    })?;
    let (label, mtl_err, mtl_se) = match outcome {
        MultitaskOutcome::Bot => ("bot", String::new(), String::new()),
        MultitaskOutcome::Classifiers(model) => {
            let errors: Vec<f64> = (0..cfg.t)
                .map(|j| {
                    let test = meta
                        .task(Stream::Custom(1), j as u64)
                        .draw(pool as u64, cfg.eval.test_points);
                    model.error_on(j, &test)
                })
                .collect();
            let (e, s) = mean_and_stderr(&errors);
            ("ok", fmt_float(e), fmt_float(s))
        }
    };
    Ok(vec![vec![
        seed.to_string(),
        fmt_float(meta_error),
        fmt_float(baseline),
        label.to_string(),
        mtl_err,
        mtl_se,
        (meta_error <= cfg.epsilon).to_string(),
    ]])
}

fn verify_rows(cfg: &ExperimentConfig, seed: u64) -> Result<Rows> {
    let opts = PnrOptions { mc_draws: cfg.verify.mc_draws, seed, ..PnrOptions::default() };
    let mut rows = Vec::new();
    let mon = |instance: String, dist: &DiscreteDist, rows: &mut Rows| -> Result<()> {
        let r = check_mon_bound(dist, &opts)?;
        rows.push(vec![
            seed.to_string(),
            instance,
            "mon_bound".into(),
            Family::Monotone.to_string(),
            "2".into(),
            fmt_float(r.err_sq.sqrt()),
            fmt_float(r.err_sq),
            fmt_float(r.pnr),
            fmt_float(r.stderr),
            r.exact.to_string(),
            r.pass.to_string(),
        ]);
        Ok(())
    };
    let coin = DiscreteDist::on_line(&[
        (0.0, crate::geometry::Label::Pos, 0.5),
        (0.0, crate::geometry::Label::Neg, 0.5),
    ])?;
    mon("coin_flip".into(), &coin, &mut rows)?;
    for i in 0..cfg.verify.instances {
        let mut rng = rng::stream(seed, tags::EXPERIMENT, i as u64);
        let dist = DiscreteDist::random(cfg.verify.atoms, 1, cfg.verify.grid, &mut rng)?;
        mon(i.to_string(), &dist, &mut rows)?;
        for family in [Family::Monotone, Family::Halfspace] {
            let (m, vc) = (family.nrc(1), family.vc(1));
            let err = exact_err(&dist, family)?;
            if err <= 0.0 {
                continue;
            }
            let bound = pnr_lower_bound(err, m, vc)?;
            let p = exact_pnr(&dist, family, m, &opts)?;
            let slack = if p.exact { 1e-12 } else { 3.0 * p.stderr };
            rows.push(vec![
                seed.to_string(),
                i.to_string(),
                "pnr_lower_bound".into(),
                family.to_string(),
                m.to_string(),
                fmt_float(err),
                fmt_float(bound),
                fmt_float(p.value),
                fmt_float(p.stderr),
                p.exact.to_string(),
                (bound <= p.value + slack).to_string(),
            ]);
        }
    }
    Ok(rows)
}

fn vc_rows(cfg: &ExperimentConfig) -> Result<Rows> {
    cfg.triples
        .iter()
        .map(|&(t, d, k)| {
            let w = vc_witness(t, d, k)?;
            Ok(vec![
                t.to_string(),
                d.to_string(),
                k.to_string(),
                w.size().to_string(),
                w.expected_size().to_string(),
                w.labelings_checked.to_string(),
                w.verified().to_string(),
            ])
        })
        .collect()
}

fn nrc_rows(cfg: &ExperimentConfig) -> Result<Rows> {
    let mut rows = Vec::new();
    for &l in &cfg.sizes {
        let classes = [
            ("point_functions", FiniteClass::point_functions(l), 1, l),
            ("point_functions_with_negative", FiniteClass::point_functions_with_negative(l), 1, 2),
            ("forced_origin", FiniteClass::forced_origin(l), l, 2),
        ];
        for (name, class, vc_expected, nrc_expected) in classes {
            let vc = finite_vc(&class)?;
            let nrc = finite_nrc(&class)?;
            rows.push(vec![
                name.to_string(),
                l.to_string(),
                class.domain_size().to_string(),
                vc.to_string(),
                nrc.to_string(),
                vc_expected.to_string(),
                nrc_expected.to_string(),
                (vc == vc_expected && nrc == nrc_expected).to_string(),
            ]);
        }
    }
    Ok(rows)
}

fn per_seed(cfg: &ExperimentConfig) -> Result<(Rows, Vec<(u64, Duration)>)> {
    let results: Vec<(Rows, Duration)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let start = Instant::now();
            let rows = match cfg.mode {
                Mode::MetalearnMon | Mode::MetalearnReal | Mode::MetalearnAgn => {
                    metalearn_rows(cfg, seed)
                }
                Mode::Multitask => multitask_rows(cfg, seed),
                Mode::Reduction => reduction_rows(cfg, seed),
                _ => verify_rows(cfg, seed),
            }?;
            let elapsed = start.elapsed();
            log::info!("{} seed {seed} finished in {:.3}s", cfg.mode, elapsed.as_secs_f64());
            Ok((rows, elapsed))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut times = Vec::new();
    for (seed, (r, dt)) in cfg.seeds.iter().zip(results) {
        rows.extend(r);
        times.push((*seed, dt));
    }
    Ok((rows, times))
}

fn parse_col(result: &RunResult, name: &str) -> Vec<f64> {
    result
        .column(name)
        .unwrap_or_default()
        .iter()
        .map(|v| v.parse().unwrap_or(f64::NAN))
        .collect()
}

fn rate(flags: &[&str]) -> f64 {
    if flags.is_empty() {
        return 0.0;
    }
    flags.iter().filter(|f| **f == "true").count() as f64 / flags.len() as f64
}

fn summarize(result: &mut RunResult, cfg: &ExperimentConfig) {
    let mut s = vec![
        ("mode".to_string(), cfg.mode.to_string()),
        ("rows".to_string(), result.rows.len().to_string()),
    ];
    let med = |name: &str| median(&parse_col(result, name)).map_or(String::new(), fmt_float);
    let flag_rate = |name: &str| fmt_float(rate(&result.column(name).unwrap_or_default()));
    match cfg.mode {
        Mode::MetalearnMon | Mode::MetalearnReal | Mode::MetalearnAgn => {
            let objectives = parse_col(result, "objective");
            let zero = objectives.iter().filter(|o| **o == 0.0).count() as f64;
            s.push(("epsilon".into(), fmt_float(cfg.epsilon)));
            s.push(("median_rep_err".into(), med("rep_err")));
            s.push(("median_baseline_err".into(), med("baseline_err")));
            s.push(("median_objective".into(), med("objective")));
            s.push(("zero_objective_rate".into(), fmt_float(zero / objectives.len() as f64)));
            s.push(("success_rate".into(), flag_rate("success")));
        }
        Mode::Multitask => {
            s.push(("epsilon".into(), fmt_float(cfg.epsilon)));
            s.push(("median_training_error".into(), med("training_error")));
            s.push(("median_test_error".into(), med("test_error")));
            s.push(("success_rate".into(), flag_rate("success")));
        }
        Mode::Reduction => {
            let outcomes = result.column("mtl_outcome").unwrap_or_default();
            let bots = outcomes.iter().filter(|o| **o == "bot").count() as f64;
            s.push(("epsilon".into(), fmt_float(cfg.epsilon)));
            s.push(("median_meta_error".into(), med("meta_error")));
            s.push(("median_baseline_error".into(), med("baseline_error")));
            s.push(("median_mtl_error".into(), med("mtl_error")));
            s.push(("bot_rate".into(), fmt_float(bots / outcomes.len() as f64)));
            s.push(("success_rate".into(), flag_rate("success")));
        }
        Mode::Verify | Mode::VcWitness | Mode::NrcScan => {
            let col = match cfg.mode {
                Mode::VcWitness => "verified",
                _ => "pass",
            };
            let flags = result.column(col).unwrap_or_default();
            let passed = flags.iter().filter(|f| **f == "true").count();
            s.push(("checks".into(), flags.len().to_string()));
            s.push(("passed".into(), passed.to_string()));
            s.push(("all_pass".into(), (passed == flags.len()).to_string()));
        }
    }
    result.summary = s;
}

/// Runs the configured pipeline on the current rayon pool.
pub fn run(cfg: &ExperimentConfig) -> Result<RunResult> {
    cfg.validate()?;
    let (rows, wallclock) = match cfg.mode {
        Mode::VcWitness => (vc_rows(cfg)?, Vec::new()),
        Mode::NrcScan => (nrc_rows(cfg)?, Vec::new()),
        _ => per_seed(cfg)?,
    };
    let mut result =
        RunResult { mode: cfg.mode, header: header(cfg.mode), rows, summary: Vec::new(), wallclock };
    summarize(&mut result, cfg);
    Ok(result)
}

/// Runs on a dedicated pool of `threads` workers, or the global pool.
pub fn run_with_threads(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<RunResult> {
    match threads {
        None => run(cfg),
        Some(0) => Err(Error::invalid("thread count must be positive")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid(e.to_string()))?
            .install(|| run(cfg)),
    }
}

/// Worker cap from `REPLEARN_THREADS`, if set.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var("REPLEARN_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .map(Some)
            .ok_or_else(|| Error::invalid(format!("REPLEARN_THREADS = `{v}` is not a positive integer"))),
    }
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `rows.csv`, `summary.csv` and `config.echo` under `dir`.
pub fn write_outputs(result: &RunResult, cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_csv(&dir.join("rows.csv"), &result.header, &result.rows)?;
    let summary: Vec<Vec<String>> =
        result.summary.iter().map(|(k, v)| vec![k.clone(), v.clone()]).collect();
    write_csv(&dir.join("summary.csv"), &["key", "value"], &summary)?;
    fs::write(dir.join("config.echo"), cfg.echo())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(mode: Mode) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults(mode);
        cfg.t = 20;
        cfg.n_spec = 20;
        cfg.seeds = vec![0, 1];
        cfg.search = SearchConfig { restarts: 2, iters: 20, ..SearchConfig::default() };
        cfg.eval = EvalConfig { eval_tasks: 10, test_points: 30 };
        cfg.verify = VerifyConfig { instances: 3, atoms: 4, grid: 3, mc_draws: 1000 };
        cfg.reduction.c = Some(8.0);
        cfg.triples = vec![(1, 1, 1)];
        cfg.sizes = vec![3];
        cfg
    }

    #[test]
    fn ground_truth_rep_err_is_near_zero() {
        let meta = SyntheticMeta::standard(4, 1, Family::Halfspace, 0.0, 3).unwrap();
        let eval = EvalConfig { eval_tasks: 100, test_points: 100 };
        let (err, se) = evaluate_rep_err(meta.b_star(), &meta, 200, &eval).unwrap();
        assert!(err <= 3.0 * se + 0.01, "{err} ± {se}");
    }

    #[test]
    fn orthogonal_rep_err_is_near_half() {
        let b = LinearRep::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let star = LinearRep::from_rows(&[vec![0.0, 1.0]]).unwrap();
        let meta = SyntheticMeta::new(
            star,
            crate::task_model::FeatureLaw::Gaussian,
            SpecializerLaw { family: Family::Halfspace, offset_range: 0.0 },
            0.0,
            8,
        )
        .unwrap();
        let eval = EvalConfig { eval_tasks: 200, test_points: 200 };
        let (err, se) = evaluate_rep_err(&b, &meta, 50, &eval).unwrap();
        assert!((err - 0.5).abs() <= 0.05 + 3.0 * se, "{err} ± {se}");
    }

    #[test]
    fn zero_eval_tasks_is_rejected() {
        let meta = SyntheticMeta::standard(2, 1, Family::Halfspace, 0.0, 0).unwrap();
        let eval = EvalConfig { eval_tasks: 0, test_points: 10 };
        assert!(matches!(
            evaluate_rep_err(meta.b_star(), &meta, 10, &eval),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn every_mode_runs_with_its_header() {
        for mode in Mode::ALL {
            let out = run(&small(mode)).unwrap_or_else(|e| panic!("{mode}: {e}"));
            assert_eq!(out.header, header(mode));
            assert!(!out.rows.is_empty(), "{mode}");
            assert!(out.rows.iter().all(|r| r.len() == out.header.len()), "{mode}");
            assert_eq!(out.summary_value("mode"), Some(mode.name()));
        }
    }

    #[test]
    fn per_seed_modes_emit_one_row_per_seed_in_order() {
        for mode in [Mode::MetalearnReal, Mode::Multitask, Mode::Reduction] {
            let mut cfg = small(mode);
            cfg.seeds = vec![5, 2, 9];
            let out = run(&cfg).unwrap();
            assert_eq!(out.column("seed").unwrap(), vec!["5", "2", "9"]);
        }
    }

    #[test]
    fn median_handles_even_and_missing() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[f64::NAN, 1.0]), Some(1.0));
        assert_eq!(median(&[]), None);
    }
}
