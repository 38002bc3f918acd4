use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use pixel_rcnn::data::{
    load_dataset, pca_project, save_dataset, synth_generate, write_pca_csv, write_ratios_csv, PixelDataset, SynthSpec,
};
use pixel_rcnn::layers::{load_checkpoint, save_checkpoint, Checkpoint, PixelRcnn};
use pixel_rcnn::metrics::ConfusionMatrix;
use pixel_rcnn::training::{
    fit, logistic_baseline_fit, lr_range_test, predict_dataset, stratified_split, BaselineConfig, LrSearch,
    ScalerParams,
};
use pixel_rcnn::{Error, Tensor};

use crate::config::RunConfig;
use crate::{EvalArgs, Global, InspectArgs, LrFindArgs, PcaArgs, PredictArgs, SynthArgs, TrainArgs};

/// 3 for numeric failures, 2 for everything else.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(err) if err.is_numeric() => 3,
        _ => 2,
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Error::Usage(msg.into()).into()
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(out).map_err(Error::from).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join(name);
    let f = File::create(&path).map_err(Error::from).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn output_path(out: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(out).map_err(Error::from).with_context(|| format!("creating {}", out.display()))?;
    Ok(out.join(name))
}

fn open_dataset(path: &Path) -> Result<PixelDataset> {
    load_dataset(path).with_context(|| format!("loading dataset {}", path.display()))
}

fn open_checkpoint(path: &Path) -> Result<(Checkpoint, ScalerParams)> {
    let ckpt = load_checkpoint(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
    let scaler = ScalerParams::from_extras(&ckpt.extras)?;
    Ok((ckpt, scaler))
}

/// Loads `--data`, else the config's data path, else generates the
/// config's synthetic spec.
fn resolve_dataset(flag: Option<&Path>, cfg: &RunConfig) -> Result<PixelDataset> {
    match flag.or(cfg.data.path.as_deref()) {
        Some(p) => open_dataset(p),
        None => {
            info!("no dataset given; generating {:?}", cfg.data.synth);
            Ok(synth_generate(&cfg.data.synth)?)
        }
    }
}

fn run_config(g: &Global) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(g.config.as_deref())?;
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    cfg.train.seed = cfg.seed;
    Ok(cfg)
}

/// Adopts the dataset's time steps, bands and class count.
fn fit_model_to_data(cfg: &mut RunConfig, d: &PixelDataset) {
    let m = &mut cfg.model;
    if (m.time_steps, m.bands, m.classes) != (d.time_steps(), d.bands(), d.num_classes()) {
        warn!(
            "model config t={} b={} K={} adjusted to dataset t={} b={} K={}",
            m.time_steps,
            m.bands,
            m.classes,
            d.time_steps(),
            d.bands(),
            d.num_classes()
        );
        m.time_steps = d.time_steps();
        m.bands = d.bands();
        m.classes = d.num_classes();
    }
}

/// Checks that a dataset fits a checkpoint's architecture.
fn check_compatible(model: &PixelRcnn<f32>, d: &PixelDataset) -> Result<()> {
    let c = model.config();
    if (c.time_steps, c.bands) != (d.time_steps(), d.bands()) {
        return Err(Error::Shape(format!(
            "checkpoint expects {} × {} samples, dataset has {} × {}",
            c.time_steps,
            c.bands,
            d.time_steps(),
            d.bands()
        ))
        .into());
    }
    if d.num_classes() > c.classes {
        return Err(Error::Data(format!("dataset has {} classes, checkpoint {}", d.num_classes(), c.classes)).into());
    }
    Ok(())
}

pub fn synth(g: &Global, a: SynthArgs) -> Result<()> {
    let seed = g.seed.unwrap_or(42);
    let mut spec = match a.proportions.as_deref() {
        None => SynthSpec::balanced(a.classes, a.per_class, a.noise, seed),
        Some("reference") => SynthSpec::reference_proportions(a.total, a.noise, seed),
        Some(other) => return Err(usage(format!("unknown proportions {other:?}; expected reference"))),
    };
    spec.time_steps = a.time_steps;
    if let Some(j) = a.jitter {
        spec.phase_jitter = j;
    }
    let d = synth_generate(&spec)?;
    let path = output_path(&g.out, &a.name)?;
    save_dataset(&path, &d)?;
    println!("wrote {} ({} samples, {} × {})", path.display(), d.len(), d.time_steps(), d.bands());
    for (name, n) in d.classes().iter().zip(d.class_counts()) {
        println!("{name:>16} {n}");
    }
    Ok(())
}

pub fn train(g: &Global, a: TrainArgs) -> Result<()> {
    let mut cfg = run_config(g)?;
    if let Some(e) = a.epochs {
        cfg.train.epochs = e;
    }
    if let Some(b) = a.batch {
        cfg.train.batch_size = b;
    }
    if let Some(f) = a.train_fraction {
        cfg.data.train_fraction = f;
    }
    let data = resolve_dataset(a.data.as_deref(), &cfg)?;
    fit_model_to_data(&mut cfg, &data);

    let (train_raw, test_raw) = stratified_split(&data, cfg.data.train_fraction, cfg.seed)?;
    let scaler = ScalerParams::fit(&train_raw);
    let (train, test) = (scaler.apply(&train_raw)?, scaler.apply(&test_raw)?);
    let mut model = PixelRcnn::<f32>::new(cfg.model.clone(), cfg.seed)?;
    info!("training {} parameters on {} samples, testing on {}", model.param_count(), train.len(), test.len());

    let report = fit(&mut model, &train, Some(&test), &cfg.train)?;
    let mut csv = create(&g.out, "report.csv")?;
    report.write_csv(&mut csv)?;
    csv.flush()?;
    let mut json = create(&g.out, "report.json")?;
    report.write_json(&mut json)?;
    json.flush()?;
    if let Some(why) = &report.aborted {
        return Err(Error::Numeric(format!("training aborted: {why}")).into());
    }

    save_checkpoint(&output_path(&g.out, "model.ckpt")?, &model, &scaler.to_extras())?;
    save_dataset(&output_path(&g.out, "train.pxrc")?, &train_raw)?;
    save_dataset(&output_path(&g.out, "test.pxrc")?, &test_raw)?;
    let last = report.epochs.last().expect("at least one epoch");
    println!(
        "epochs {}  train loss {:.5}  train OA {:.4}  test OA {:.4}",
        last.epoch,
        last.train_loss,
        last.train_oa,
        last.test_oa.unwrap_or(f64::NAN)
    );
    println!("wrote model.ckpt, report.csv, report.json, train.pxrc, test.pxrc to {}", g.out.display());
    Ok(())
}

fn print_matrix(cm: &ConfusionMatrix) -> Result<()> {
    print!("{}", cm.render_text());
    for (k, m) in cm.class_metrics().iter().enumerate() {
        let fmt = |v: Option<f64>| v.map(|r| format!("{r:.4}")).unwrap_or_else(|| "undefined".into());
        println!("#{:<3} {:>16}  PA {}  UA {}", k + 1, m.name, fmt(m.producers), fmt(m.users));
    }
    Ok(())
}

pub fn eval(g: &Global, a: EvalArgs) -> Result<()> {
    if let Some(path) = &a.fixture {
        let f = File::open(path).map_err(Error::from).with_context(|| format!("opening {}", path.display()))?;
        let cm = ConfusionMatrix::read_csv(f)?;
        print_matrix(&cm)?;
        return Ok(());
    }
    let (Some(ckpt_path), Some(data_path)) = (&a.checkpoint, &a.data) else {
        return Err(usage("eval needs --checkpoint and --data, or --fixture"));
    };
    let (ckpt, scaler) = open_checkpoint(ckpt_path)?;
    let raw = open_dataset(data_path)?;
    check_compatible(&ckpt.model, &raw)?;
    let data = scaler.apply(&raw)?;
    let predicted = predict_dataset(&ckpt.model, &data)?;
    let mut names = raw.classes().to_vec();
    names.extend((names.len()..ckpt.model.config().classes).map(|k| format!("class_{k}")));
    let mut cm = ConfusionMatrix::new(names);
    cm.accumulate_all(data.labels(), &predicted)?;
    print_matrix(&cm)?;
    let mut csv = create(&g.out, "confusion.csv")?;
    cm.write_csv(&mut csv)?;
    csv.flush()?;

    if a.baseline {
        let train_path = a.train.as_ref().expect("clap enforces --train");
        let train_raw = open_dataset(train_path)?;
        check_compatible(&ckpt.model, &train_raw)?;
        let cfg = BaselineConfig { seed: g.seed.unwrap_or(42), ..BaselineConfig::default() };
        let b = logistic_baseline_fit(&scaler.apply(&train_raw)?, Some(&data), &cfg)?;
        println!(
            "logistic baseline: train OA {:.4}  OA on {} {:.4}",
            b.train_oa,
            data_path.display(),
            b.test_oa.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

pub fn predict(g: &Global, a: PredictArgs) -> Result<()> {
    let (ckpt, scaler) = open_checkpoint(&a.checkpoint)?;
    let raw = open_dataset(&a.data)?;
    check_compatible(&ckpt.model, &raw)?;
    if a.width == 0 || raw.len() % a.width != 0 {
        return Err(usage(format!("{} samples do not fill rows of width {}", raw.len(), a.width)));
    }
    let height = raw.len() / a.width;
    let classes = predict_dataset(&ckpt.model, &scaler.apply(&raw)?)?;

    let mut pgm = create(&g.out, "classmap.pgm")?;
    writeln!(pgm, "P2\n{} {}\n{}", a.width, height, (ckpt.model.config().classes - 1).max(1))?;
    for row in classes.chunks(a.width) {
        let line: Vec<String> = row.iter().map(usize::to_string).collect();
        writeln!(pgm, "{}", line.join(" "))?;
    }
    pgm.flush()?;
    let mut csv = create(&g.out, "classmap.csv")?;
    writeln!(csv, "row,col,class")?;
    for (i, c) in classes.iter().enumerate() {
        writeln!(csv, "{},{},{c}", i / a.width, i % a.width)?;
    }
    csv.flush()?;
    let hits = classes.iter().zip(raw.labels()).filter(|(p, t)| p == t).count();
    println!("{}×{} class map written; {hits}/{} cells match the dataset labels", a.width, height, raw.len());
    Ok(())
}

pub fn lr_find(g: &Global, a: LrFindArgs) -> Result<()> {
    let mut cfg = run_config(g)?;
    let data = resolve_dataset(a.data.as_deref(), &cfg)?;
    fit_model_to_data(&mut cfg, &data);
    let (train, _) = stratified_split(&data, cfg.data.train_fraction, cfg.seed)?;
    let train = ScalerParams::fit(&train).apply(&train)?;
    let model = PixelRcnn::<f32>::new(cfg.model.clone(), cfg.seed)?;
    let search = LrSearch { lo: a.lo, hi: a.hi, iters: a.iters };
    let r = lr_range_test(&model, &train, &search, &cfg.train)?;
    let mut csv = create(&g.out, "lr_find.csv")?;
    writeln!(csv, "lr,loss,smoothed")?;
    for ((lr, loss), s) in r.records.iter().zip(&r.smoothed) {
        writeln!(csv, "{lr},{loss},{s}")?;
    }
    csv.flush()?;
    if let Some(j) = r.diverged_at {
        println!("loss diverged at step {j}; record truncated");
    }
    match r.suggestion {
        Some(lr) => println!("suggested eta_max {lr}"),
        None => println!("no suggestion"),
    }
    Ok(())
}

pub fn pca(g: &Global, a: PcaArgs) -> Result<()> {
    let cfg = run_config(g)?;
    let data = resolve_dataset(a.data.as_deref(), &cfg)?;
    let p = pca_project(&data, a.components)?;
    let mut points = create(&g.out, "pca.csv")?;
    write_pca_csv(&mut points, &p)?;
    points.flush()?;
    let mut ratios = create(&g.out, "pca_ratios.csv")?;
    write_ratios_csv(&mut ratios, &p)?;
    ratios.flush()?;
    let cumulative = p.cumulative();
    println!(
        "first {} components explain {:.4} of the variance",
        a.components,
        cumulative[a.components - 1]
    );
    Ok(())
}

fn correlation(a: &[f32], b: &[f32]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().map(|&v| v as f64).sum::<f64>() / n, b.iter().map(|&v| v as f64).sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x as f64 - ma, y as f64 - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    sab / (saa * sbb).sqrt()
}

pub fn inspect(g: &Global, a: InspectArgs) -> Result<()> {
    let (ckpt, scaler) = open_checkpoint(&a.checkpoint)?;
    let raw = open_dataset(&a.data)?;
    check_compatible(&ckpt.model, &raw)?;
    if let Some(&bad) = a.samples.iter().find(|&&i| i >= raw.len()) {
        bail!(Error::Data(format!("sample {bad} out of range for {} samples", raw.len())));
    }
    let mut maps: Vec<Tensor<f32>> = Vec::new();
    for &i in &a.samples {
        let mut x = raw.sample(i);
        scaler.apply_row(x.data_mut());
        let (_, cache) = ckpt.model.forward_eval(&x)?;
        let name = format!("inspect_{i}.csv");
        let mut w = create(&g.out, &name)?;
        for r in 0..cache.y_timed.rows() {
            let row: Vec<String> = cache.y_timed.row(r).iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
        println!("sample {i} (class {}): wrote {name}", raw.classes()[raw.labels()[i]]);
        maps.push(cache.y_timed);
    }
    for (j, pair) in maps.windows(2).enumerate() {
        println!(
            "correlation sample {} vs {}: {:.4}",
            a.samples[j],
            a.samples[j + 1],
            correlation(pair[0].data(), pair[1].data())
        );
    }
    Ok(())
}
