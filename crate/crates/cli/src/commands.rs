//! One function per verb. Each returns a library error that `main` maps to
//! an exit code.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use smcal::data::{
    build_recalibration_set, read_dataset, read_predictions, write_dataset, write_predictions,
    write_scores,
};
use smcal::format::fmt_f64;
use smcal::metrics::{
    dual_smooth_ce, evaluate as evaluate_metrics, smooth_ce, LipschitzWitness, MetricOptions,
    MetricReport,
};
use smcal::models::{read_model, write_model};
use smcal::sweep::{assert_trends, preset, KrrSchedule, SweepConfig};
use smcal::{
    fit_klr, fit_krr, gen_miscalibrated_scores, gen_toy, gen_toy_1d, median_heuristic,
    training_smce_bound, Error, KernelChoice, KernelFamily, KernelModel, KernelSpec, KlrOptions,
    LabeledDataset, LossFamily, Result, Space, TrainReport,
};

use crate::plot;
use crate::{EvaluateArgs, FitArgs, GenerateArgs, PlotArgs, RecalibrateArgs, SweepArgs, TrainArgs};

pub const WORKERS_ENV: &str = "SMCAL_WORKERS";

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Input(format!("--{name} must be positive, got {v}")))
    }
}

pub fn generate(a: &GenerateArgs) -> Result<()> {
    if a.n == 0 {
        return Err(Error::Input("--n must be at least 1".into()));
    }
    if let Some(d) = &a.miscalibrated {
        let set = gen_miscalibrated_scores(a.n, d.parse()?, a.seed)?;
        write_scores(&a.out, &set)?;
    } else {
        let data = if a.toy1d {
            gen_toy_1d(a.n, a.seed)?
        } else {
            gen_toy(a.n, a.seed)?
        };
        write_dataset(&a.out, &data)?;
    }
    println!("rows={}", a.n);
    println!("out={}", a.out.display());
    Ok(())
}

fn klr_options(f: &FitArgs) -> KlrOptions {
    KlrOptions {
        max_iter: f.max_iter,
        step: f.step,
        tolerance: f.tol,
        estimate_err: f.estimate_err,
    }
}

fn fit(
    data: &LabeledDataset,
    loss: LossFamily,
    family: KernelFamily,
    lambda: f64,
    sigma: Option<f64>,
    f: &FitArgs,
) -> Result<(KernelModel, TrainReport, f64)> {
    let sigma = match sigma {
        Some(s) => positive("sigma", s)?,
        None => median_heuristic(&data.x)?.sigma,
    };
    let spec = KernelSpec::new(family, sigma)?;
    let choice = KernelChoice::auto(
        spec,
        data.dim(),
        data.len(),
        f.exact_threshold,
        f.features,
        f.seed,
    )?;
    let (model, report) = match loss {
        LossFamily::Squared => fit_krr(&data.x, &data.y, &choice, lambda)?,
        LossFamily::Logistic => fit_klr(&data.x, &data.y, &choice, lambda, &klr_options(f))?,
    };
    Ok((model, report, sigma))
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let data = read_dataset(&a.data)?;
    let loss: LossFamily = a.model.parse()?;
    let family: KernelFamily = a.kernel.parse()?;
    let lambda = match (a.lambda, &a.schedule) {
        (Some(l), _) => positive("lambda", l)?,
        (None, Some(s)) => match loss {
            LossFamily::Squared => KrrSchedule::parse(s)
                .ok_or_else(|| {
                    Error::Input(format!(
                        "unknown schedule `{s}` (expected standard or swapped)"
                    ))
                })?
                .for_family(family)
                .lambda(data.len()),
            LossFamily::Logistic => SweepConfig::default().klr_lambda,
        },
        (None, None) => return Err(Error::Input("--lambda or --schedule is required".into())),
    };
    let (model, report, sigma) = fit(&data, loss, family, lambda, a.sigma, &a.fit)?;
    write_model(&model, &a.out)?;
    let bound = match loss {
        LossFamily::Squared => fmt_f64(training_smce_bound(&model, &report)?),
        LossFamily::Logistic => String::new(),
    };
    println!("model={}", loss.model_name());
    println!("kernel={family}");
    println!("sigma={}", fmt_f64(sigma));
    println!("lambda={}", fmt_f64(lambda));
    println!("objective={}", fmt_f64(model.train_objective()));
    println!("hilbert_norm={}", fmt_f64(model.hilbert_norm()));
    println!("err_n={}", report.err_n.map(fmt_f64).unwrap_or_default());
    println!("smce_bound={bound}");
    println!("iterations={}", report.iterations);
    println!("converged={}", report.converged);
    println!("out={}", a.out.display());
    Ok(())
}

fn parse_space(s: &Option<String>) -> Result<Option<Space>> {
    s.as_deref().map(str::parse).transpose()
}

fn witness_text(title: &str, w: &LipschitzWitness) -> String {
    let mut out = format!(
        "# {title} lipschitz={} objective={}\nvalue,weight,witness\n",
        fmt_f64(w.lipschitz),
        fmt_f64(w.objective)
    );
    for ((v, m), h) in w.values.iter().zip(&w.weights).zip(&w.witness) {
        writeln!(out, "{},{},{}", fmt_f64(*v), fmt_f64(*m), fmt_f64(*h)).unwrap();
    }
    out
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let preds = match (&a.model, &a.data, &a.predictions) {
        (Some(m), Some(d), _) => {
            let model = read_model(m)?;
            let data = read_dataset(d)?;
            model.predict(&data.x)?.to_prediction_set(&data.y)?
        }
        (_, _, Some(p)) => read_predictions(p, parse_space(&a.space)?)?,
        _ => {
            return Err(Error::Input(
                "give --model with --data, or --predictions".into(),
            ))
        }
    };
    if a.dual && preds.space() == Space::Probability {
        return Err(Error::Input(
            "dual metrics need logit-space predictions; this input is in probability space".into(),
        ));
    }
    let opts = MetricOptions {
        bins: a.bins,
        mmce_family: a.mmce_kernel.parse()?,
        mmce_bandwidth: None,
    };
    let report = evaluate_metrics(&preds, &opts)?;
    println!("{}", MetricReport::CSV_HEADER);
    println!("{}", report.to_csv_row());
    if a.witness {
        print!(
            "{}",
            witness_text("smce witness", &smooth_ce(&preds.to_probability())?.1)
        );
        if preds.space() == Space::Logit {
            print!(
                "{}",
                witness_text("dual_smce witness", &dual_smooth_ce(&preds)?.1)
            );
        }
    }
    Ok(())
}

pub fn recalibrate(a: &RecalibrateArgs) -> Result<()> {
    let fallback = parse_space(&a.space)?;
    let train = build_recalibration_set(&a.scores)?;
    let test = build_recalibration_set(&a.test)?;
    let space_of = |declared: Option<Space>, path: &Path| {
        declared.or(fallback).ok_or_else(|| {
            Error::Input(format!(
                "{}: no `# space=` line; pass --space",
                path.display()
            ))
        })
    };
    let test_space = space_of(test.space, &a.test)?;
    space_of(train.space, &a.scores)?;
    let loss: LossFamily = a.recalibrator.parse()?;
    let lambda = positive("lambda", a.lambda)?;
    let (model, _, _) = fit(
        &train.to_dataset(),
        loss,
        a.kernel.parse()?,
        lambda,
        a.sigma,
        &a.fit,
    )?;
    let test_data = test.to_dataset();
    let after = model
        .predict(&test_data.x)?
        .to_prediction_set(&test_data.y)?;
    let before = test.to_prediction_set(test_space)?;
    write_predictions(&a.out, &after)?;
    let opts = MetricOptions::default();
    println!("stage,{}", MetricReport::CSV_HEADER);
    println!("before,{}", evaluate_metrics(&before, &opts)?.to_csv_row());
    println!("after,{}", evaluate_metrics(&after, &opts)?.to_csv_row());
    Ok(())
}

fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            Error::Input(format!(
                "{WORKERS_ENV} must be a positive integer, got `{v}`"
            ))
        }),
        Err(_) => Ok(None),
    }
}

pub fn sweep(a: &SweepArgs) -> Result<()> {
    let mut configs = match (&a.preset, &a.config) {
        (Some(p), _) => preset(p)?,
        (None, Some(path)) => vec![("sweep".to_string(), SweepConfig::parse(&read_file(path)?)?)],
        (None, None) => vec![("sweep".to_string(), SweepConfig::default())],
    };
    let env_workers = workers_from_env()?;
    for (_, cfg) in &mut configs {
        for o in &a.overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Input(format!("--set expects KEY=VALUE, got `{o}`")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.workers = a.workers.or(cfg.workers).or(env_workers);
        if cfg.workers == Some(0) {
            return Err(Error::Input("workers must be at least 1".into()));
        }
        cfg.validate()?;
    }
    let nested = configs.len() > 1;
    for (name, cfg) in &configs {
        let dir = if nested {
            a.out.join(name)
        } else {
            a.out.clone()
        };
        create_dir(&dir)?;
        let result = smcal::run_sweep(cfg)?;
        let trends = assert_trends(&result)?;
        write_file(&dir.join("config.txt"), &cfg.to_text())?;
        write_file(&dir.join("sweep_rows.csv"), &result.rows_csv())?;
        write_file(&dir.join("sweep_agg.csv"), &result.aggregates_csv())?;
        write_file(&dir.join("trends.csv"), &trends.to_csv())?;
        write_file(&dir.join("trends.txt"), &trends.to_text())?;
        let failed = result.rows.iter().filter(|r| r.outcome.is_err()).count();
        println!(
            "sweep={name} rows={} failed_rows={failed} out={}",
            result.rows.len(),
            dir.display()
        );
        print!("{}", trends.to_text());
    }
    Ok(())
}

pub fn plot(a: &PlotArgs) -> Result<()> {
    let aggregates = smcal::sweep::read_aggregates(&read_file(&a.agg)?)?;
    create_dir(&a.out)?;
    for chart in plot::charts(&aggregates, &a.metrics)? {
        let path = a.out.join(&chart.file_name);
        write_file(&path, &chart.svg)?;
        println!("{}", path.display());
    }
    Ok(())
}
