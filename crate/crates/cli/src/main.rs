use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use dalsa_core::data::{
    fuse_label, is_tumorous, load_patient, normalize_volume, save_patient, ClassId, ClassMode,
    FusionStage, LabelScheme, SampleTable, UNLABELED,
};
use dalsa_core::eval::{confusion_metrics, exact_roc, sweep_dice, sweep_roc};
use dalsa_core::forest::{train_forest, Forest};
use dalsa_core::pipeline::{
    best_row, dice_curve_csv, load_dataset, predict_patient, roc_curve_csv, run_depth_sweep,
    run_lambda_sweep, run_loocv, sweep_rows_csv, training_rows, write_loocv_outputs, Method,
    RunConfig,
};
use dalsa_core::synthetic::{
    make_gaussian_dataset, make_gaussian_shift, make_toy, GaussianShiftConfig, ToyConfig,
};
use dalsa_core::weights::{compute_patient_weights, compute_table_weights};
use dalsa_core::{Error, Result};
use log::{info, warn};
use serde_json::json;

mod args;

use args::{
    Classes, Cli, Command, EvalArgs, Fusion, ModelCommand, PredictArgs, RunArgs, SweepArgs,
    SynthCommand, TrainArgs, WeightsArgs,
};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

struct Globals {
    seed: Option<u64>,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
}

impl Globals {
    fn base_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = Some(out.clone());
        }
        Ok(cfg)
    }

    fn out_dir(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| Error::config("this command needs --out DIR"))
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = Globals {
        seed: cli.seed,
        config: cli.config,
        out: cli.out,
    };
    match cli.command {
        Command::Normalize { patient, bins } => normalize(&g, &patient, bins),
        Command::Weights(a) => weights(&g, a),
        Command::Train(a) => train(&g, a),
        Command::Predict(a) => predict(&g, a),
        Command::Eval(a) => eval(&g, a),
        Command::SweepRoc(a) => curve(&g, a, true),
        Command::SweepDice(a) => curve(&g, a, false),
        Command::Loocv(a) => loocv(&g, a),
        Command::SweepLambda { run, lambdas } => sweep_lambda(&g, run, &lambdas),
        Command::SweepDepth { run, depths } => sweep_depth(&g, run, &depths),
        Command::Synth(s) => synth(&g, s),
        Command::Model(ModelCommand::Show { model, tree }) => model_show(&model, tree),
    }
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_samples(path: &Path) -> Result<SampleTable> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let id = path
        .file_stem()
        .map_or("samples".into(), |s| s.to_string_lossy().into_owned());
    SampleTable::read_csv(file, &id)
}

fn apply_run_args(mut cfg: RunConfig, a: &RunArgs) -> Result<RunConfig> {
    if let Some(d) = &a.dataset {
        cfg.dataset_root = d.clone();
    }
    if !a.patients.is_empty() {
        cfg.patients = a.patients.clone();
    }
    if let Some(m) = &a.method {
        cfg.method = m.parse()?;
    }
    match a.classes {
        Some(Classes::Two) => cfg.label_scheme.mode = ClassMode::TwoClass,
        Some(Classes::Five) => cfg.label_scheme = LabelScheme::five_class(),
        None => {}
    }
    match a.fusion {
        Some(Fusion::Before) => cfg.label_scheme.fusion_stage = FusionStage::BeforeTraining,
        Some(Fusion::After) => cfg.label_scheme.fusion_stage = FusionStage::AfterPrediction,
        None => {}
    }
    if let Some(v) = a.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = a.c {
        cfg.c = v;
    }
    if let Some(v) = a.sample_ratio {
        cfg.sample_ratio = v;
    }
    if let Some(v) = a.threshold {
        cfg.decision_threshold = v;
    }
    cfg.save_models |= a.save_models;
    let f = &a.forest;
    if let Some(v) = f.trees {
        cfg.forest.n_trees = v;
    }
    if let Some(v) = f.depth {
        cfg.forest.max_depth = v;
    }
    if f.mtry.is_some() {
        cfg.forest.mtry = f.mtry;
    }
    if let Some(v) = f.min_leaf {
        cfg.forest.min_leaf = v;
    }
    if f.no_bootstrap {
        cfg.forest.bootstrap = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn normalize(g: &Globals, patient: &Path, bins: usize) -> Result<()> {
    let out = g.out_dir()?;
    let vol = load_patient(patient)?;
    let (norm, stats) = normalize_volume(&vol, bins)?;
    save_patient(&norm, out)?;
    write(
        &out.join("normalization.json"),
        serde_json::to_string_pretty(&stats)?,
    )?;
    for (ch, s) in norm.channels().iter().zip(&stats) {
        info!("{}: mode {} sigma {}", ch.name, s.mode, s.sigma);
    }
    Ok(())
}

fn weights(g: &Globals, a: WeightsArgs) -> Result<()> {
    let out = g.out_dir()?;
    let mut params = g.base_config()?.weight_params();
    if let Some(l) = a.lambda {
        params.lambda = l;
    }
    if let Some(c) = a.c {
        params.c = c;
    }
    if !(0.0..=1.0).contains(&params.lambda) || params.c.is_nan() || params.c <= 0.0 {
        return Err(Error::config(
            "lambda must lie in [0, 1] and c must be positive",
        ));
    }
    let report = match (&a.patient, &a.train, &a.test) {
        (Some(p), _, _) => {
            let vol = load_patient(p)?;
            let report = compute_patient_weights(&vol, &params)?;
            write(
                &out.join("weights.f32"),
                dalsa_core::data::f32_raster_bytes(&report.to_raster(vol.n_voxels())),
            )?;
            report
        }
        (None, Some(train), Some(test)) => {
            let train_t = read_samples(train)?;
            let test_t = read_samples(test)?;
            let (_, report) = compute_table_weights(&train_t, &test_t, &params, "samples")?;
            let weighted = train_t.with_weights(report.weights.clone())?;
            let path = out.join("weighted_samples.csv");
            let mut buf = Vec::new();
            weighted.write_csv(&mut buf, true)?;
            write(&path, buf)?;
            report
        }
        _ => {
            return Err(Error::config(
                "weights needs --patient or both --train and --test",
            ))
        }
    };
    let mut buf = Vec::new();
    report
        .write_csv(&mut buf)
        .map_err(|e| Error::io(out.join("weights.csv"), e))?;
    write(&out.join("weights.csv"), buf)?;
    write(
        &out.join("weights.json"),
        serde_json::to_string_pretty(&report.sidecar())?,
    )?;
    println!(
        "{}: {} weights, sum {:.6} (c * n_test = {})",
        report.patient_id,
        report.weights.len(),
        report.sum_weights,
        report.c * report.n_test as f64
    );
    Ok(())
}

fn train(g: &Globals, a: TrainArgs) -> Result<()> {
    let cfg = apply_run_args(g.base_config()?, &a.run)?;
    let table = if let Some(path) = &a.samples {
        let t = read_samples(path)?;
        if cfg.label_scheme.fusion_stage == FusionStage::BeforeTraining {
            t.map_labels(|l| fuse_label(l, ClassMode::TwoClass))?
        } else {
            t
        }
    } else if !a.patient.is_empty() {
        let mut rows = Vec::new();
        for p in &a.patient {
            rows.push(training_rows(&load_patient(p)?, &cfg)?.table);
        }
        let d = rows[0].d();
        SampleTable::concat(d, &rows)?
    } else {
        return Err(Error::config("train needs --samples CSV or --patient DIR"));
    };
    let forest = train_forest(&table, &cfg.forest_params())?;
    let path = match (&a.model, &g.out) {
        (Some(m), _) => m.clone(),
        (None, Some(out)) => out.join("model.json"),
        (None, None) => return Err(Error::config("train needs --model FILE or --out DIR")),
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    forest.save(&path)?;
    println!(
        "trained {} trees on {} rows -> {}",
        forest.trees.len(),
        table.len(),
        path.display()
    );
    Ok(())
}

fn predict(g: &Globals, a: PredictArgs) -> Result<()> {
    let out = g.out_dir()?;
    let forest = Forest::load(&a.model)?;
    let scheme = match a.classes {
        Classes::Two => LabelScheme {
            mode: ClassMode::TwoClass,
            fusion_stage: FusionStage::AfterPrediction,
        },
        Classes::Five => LabelScheme::five_class(),
    };
    let mut csv = String::from("index,label,score,reference\n");
    if let Some(p) = &a.patient {
        let vol = load_patient(p)?;
        let pred = predict_patient(&forest, &vol, scheme, a.threshold)?;
        let mut raster = vec![UNLABELED; vol.n_voxels()];
        for i in 0..pred.len() {
            let v = pred.voxel_indices[i];
            raster[v] = pred.labels[i];
            let reference = vol.labels().map_or(String::new(), |l| l[v].to_string());
            csv.push_str(&format!(
                "{v},{},{},{reference}\n",
                pred.labels[i], pred.scores[i]
            ));
        }
        write(&out.join("labels.u8"), &raster)?;
    } else if let Some(s) = &a.samples {
        let table = read_samples(s)?;
        let pred = forest.predict(&table, dalsa_core::data::TUMOROUS, a.threshold)?;
        for i in 0..table.len() {
            let label = match scheme.mode {
                ClassMode::TwoClass => fuse_label(pred.labels[i], ClassMode::TwoClass)?,
                ClassMode::FiveClass => pred.labels[i],
            };
            csv.push_str(&format!(
                "{i},{label},{},{}\n",
                pred.scores[i],
                table.labels()[i]
            ));
        }
    } else {
        return Err(Error::config(
            "predict needs --patient DIR or --samples CSV",
        ));
    }
    write(&out.join("predictions.csv"), csv)?;
    Ok(())
}

struct Predictions {
    labels: Vec<ClassId>,
    scores: Vec<f64>,
    reference: Vec<bool>,
}

fn read_predictions(path: &Path) -> Result<Predictions> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::data(format!("{}: missing column '{name}'", path.display())))
    };
    let (cl, cs, cr) = (col("label")?, col("score")?, col("reference")?);
    let mut p = Predictions {
        labels: Vec::new(),
        scores: Vec::new(),
        reference: Vec::new(),
    };
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad =
            |what: &str| Error::data(format!("{}: row {}: bad {what}", path.display(), line + 1));
        let reference: ClassId = match rec.get(cr).unwrap_or("") {
            "" => continue,
            r => r.parse().map_err(|_| bad("reference"))?,
        };
        if reference == UNLABELED {
            continue;
        }
        p.labels.push(
            rec.get(cl)
                .unwrap_or("")
                .parse()
                .map_err(|_| bad("label"))?,
        );
        p.scores.push(
            rec.get(cs)
                .unwrap_or("")
                .parse()
                .map_err(|_| bad("score"))?,
        );
        p.reference.push(is_tumorous(reference));
    }
    if p.reference.is_empty() {
        return Err(Error::data(format!(
            "{}: no rows with a reference label",
            path.display()
        )));
    }
    Ok(p)
}

fn eval(g: &Globals, a: EvalArgs) -> Result<()> {
    let p = read_predictions(&a.predictions)?;
    let pred: Vec<bool> = match a.threshold {
        Some(t) => p.scores.iter().map(|&s| s >= t).collect(),
        None => p.labels.iter().map(|&l| is_tumorous(l)).collect(),
    };
    let report = confusion_metrics(&pred, &p.reference, a.threshold.unwrap_or(f64::NAN))?;
    let text = serde_json::to_string_pretty(&report)?;
    if let Some(out) = &g.out {
        write(&out.join("metrics.json"), &text)?;
    }
    println!("{text}");
    Ok(())
}

fn curve(g: &Globals, a: SweepArgs, roc: bool) -> Result<()> {
    let p = read_predictions(&a.predictions)?;
    let cfg = g.base_config()?;
    let thresholds = if a.exact {
        let mut t = p.scores.clone();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    } else {
        cfg.thresholds.clone()
    };
    let (name, text) = if roc {
        let c = if a.exact {
            exact_roc(&p.scores, &p.reference)?
        } else {
            sweep_roc(&p.scores, &p.reference, &thresholds)?
        };
        println!("auc {}", c.auc);
        ("roc.csv", roc_curve_csv(&c))
    } else {
        (
            "dice.csv",
            dice_curve_csv(&sweep_dice(&p.scores, &p.reference, &thresholds)?),
        )
    };
    match &g.out {
        Some(out) => write(&out.join(name), text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn loocv_config(g: &Globals, a: &RunArgs) -> Result<(RunConfig, PathBuf)> {
    let cfg = apply_run_args(g.base_config()?, a)?;
    let out = cfg
        .output_dir
        .clone()
        .ok_or_else(|| Error::config("set --out DIR or output_dir in the config"))?;
    Ok((cfg, out))
}

fn loocv(g: &Globals, a: RunArgs) -> Result<()> {
    let (cfg, out) = loocv_config(g, &a)?;
    let outcome = run_loocv(&cfg)?;
    write_loocv_outputs(&outcome, &out)?;
    for e in &outcome.errors {
        warn!("fold {} failed: {}", e.patient_id, e.message);
    }
    if outcome.folds.is_empty() {
        return Err(Error::data("every fold failed; see errors.csv"));
    }
    if let Some(s) = &outcome.summary {
        println!(
            "{}: {} folds, median DICE {}, mean DICE {}",
            cfg.method,
            outcome.folds.len(),
            dalsa_core::pipeline::fmt_metric(s.dice.median),
            dalsa_core::pipeline::fmt_metric(s.dice.mean)
        );
    }
    Ok(())
}

fn sweep_lambda(g: &Globals, a: RunArgs, lambdas: &[f64]) -> Result<()> {
    let (mut cfg, out) = loocv_config(g, &a)?;
    if a.method.is_none() && g.config.is_none() {
        cfg.method = Method::Dalsa;
    }
    let (patients, _) = load_dataset(&cfg)?;
    let rows = run_lambda_sweep(&cfg, &patients, lambdas)?;
    let text = sweep_rows_csv("lambda", &rows);
    write(&out.join("lambda_sweep.csv"), &text)?;
    print!("{text}");
    Ok(())
}

fn sweep_depth(g: &Globals, a: RunArgs, depths: &[usize]) -> Result<()> {
    let (cfg, out) = loocv_config(g, &a)?;
    let (patients, _) = load_dataset(&cfg)?;
    let rows = run_depth_sweep(&cfg, &patients, depths)?;
    let text = sweep_rows_csv("depth", &rows);
    write(&out.join("depth_sweep.csv"), &text)?;
    print!("{text}");
    if let Some(best) = best_row(&rows) {
        println!("best depth {}", best.value);
    }
    Ok(())
}

fn synth(g: &Globals, s: SynthCommand) -> Result<()> {
    let out = g.out_dir()?;
    match s {
        SynthCommand::Toy { raw_intensity } => {
            let cfg = ToyConfig {
                encode_indicators: !raw_intensity,
                ..Default::default()
            };
            let path = save_patient(&make_toy(&cfg)?, out.join("toy"))?;
            println!("{}", path.display());
        }
        SynthCommand::Gaussian {
            n_train,
            n_test,
            patients,
        } => {
            let cfg = GaussianShiftConfig {
                seed: g.seed.unwrap_or(0),
                n_train,
                n_test,
                ..Default::default()
            };
            let (train, test) = make_gaussian_shift(&cfg)?;
            for (name, t) in [("train.csv", &train), ("test.csv", &test)] {
                let mut buf = Vec::new();
                t.write_csv(&mut buf, false)?;
                write(&out.join(name), buf)?;
            }
            for vol in make_gaussian_dataset(&cfg, patients)? {
                save_patient(&vol, out.join(vol.patient_id()))?;
            }
            write(
                &out.join("gaussian.json"),
                serde_json::to_string_pretty(&cfg)?,
            )?;
            println!("{}", out.display());
        }
    }
    Ok(())
}

fn model_show(path: &Path, tree: Option<usize>) -> Result<()> {
    let forest = Forest::load(path)?;
    if let Some(i) = tree {
        let t = forest.trees.get(i).ok_or_else(|| {
            Error::config(format!(
                "tree {i} out of range (forest has {})",
                forest.trees.len()
            ))
        })?;
        println!("{}", serde_json::to_string_pretty(t)?);
        return Ok(());
    }
    let leaves: usize = forest.trees.iter().map(|t| t.n_leaves()).sum();
    let info = json!({
        "n_trees": forest.trees.len(),
        "d": forest.d,
        "class_alphabet": forest.class_alphabet,
        "params": forest.params,
        "max_depth_reached": forest.max_depth(),
        "mean_leaves": leaves as f64 / forest.trees.len().max(1) as f64,
    });
    println!("{}", serde_json::to_string_pretty(&info)?);
    Ok(())
}
