use std::fmt::Write as _;
use std::path::Path;

use curvsal::classifier::{load_checkpoint, save_checkpoint, train as fit, Checkpoint, Classifier, ToyNet};
use curvsal::eval::{class_curve_report, default_fractions, ShapeCurves};
use curvsal::io::{generate_synthetic, write_ply_file, PlyExtras};
use curvsal::metrics::MetricReport;
use curvsal::saliency::{ig_only, mask_only, parse_mask_csv, pci_gos, zheng_saliency, SaliencyMask};
use curvsal::smoother::smooth_sequence;
use curvsal::PointCloud;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::files::{discover, load_cloud, read, record, Input, InputRecord, OutDir};
use crate::{EvalArgs, GenerateArgs, Method, Mode, SaliencyArgs, SmoothArgs, TrainArgs};

type Result<T> = std::result::Result<T, CliError>;

fn options(args: &impl Serialize) -> serde_json::Value {
    serde_json::to_value(args).expect("arguments serialize")
}

fn to_csv(f: impl FnOnce(&mut Vec<u8>) -> curvsal::Result<()>, context: &str) -> Result<Vec<u8>> {
    let mut buf = vec![];
    f(&mut buf).map_err(|e| CliError::lib(context, e))?;
    Ok(buf)
}

pub fn smooth(a: &SmoothArgs, config: &RunConfig) -> Result<()> {
    let ctx = a.input.display().to_string();
    let cloud = load_cloud(&a.input, config)?;
    let seq = smooth_sequence(&cloud, &config.smooth).map_err(|e| CliError::lib(&ctx, e))?;
    let mut out = OutDir::create(&a.out)?;
    for (l, level) in seq.clouds().iter().enumerate() {
        let path = out.path(&format!("level_{l:02}.ply"))?;
        write_ply_file(&path, level, &PlyExtras::default()).map_err(|e| CliError::lib(path.display(), e))?;
    }
    let metrics = MetricReport::for_sequence(&seq).map_err(|e| CliError::lib(&ctx, e))?;
    out.write("metrics.csv", to_csv(|b| metrics.write_csv(b), &ctx)?)?;
    out.finish("smooth", options(a), config, vec![record(&a.input)?])
}

/// Labeled clouds from a dataset root with one subdirectory per class.
fn labeled_dataset(root: &Path, config: &RunConfig) -> Result<(Vec<(PointCloud, usize)>, Vec<String>, Vec<InputRecord>)> {
    let inputs = discover(&[root.to_path_buf()])?;
    let mut names: Vec<String> = vec![];
    for i in &inputs {
        match &i.label_dir {
            Some(l) if !names.contains(l) => names.push(l.clone()),
            Some(_) => {}
            None => {
                return Err(CliError::Usage(format!(
                    "{} is not inside a class directory of {}",
                    i.path.display(),
                    root.display()
                )))
            }
        }
    }
    names.sort();
    let mut data = vec![];
    let mut records = vec![];
    for i in &inputs {
        let label = names.iter().position(|n| Some(n) == i.label_dir.as_ref()).unwrap();
        data.push((load_cloud(&i.path, config)?, label));
        records.push(record(&i.path)?);
    }
    Ok((data, names, records))
}

pub fn train(a: &TrainArgs, config: &RunConfig) -> Result<()> {
    let (data, names, records) = match &a.data {
        Some(root) => labeled_dataset(root, config)?,
        None => {
            let shapes = generate_synthetic(&config.synthetic).map_err(|e| CliError::lib("synthetic corpus", e))?;
            let names = config.synthetic.classes.iter().map(|c| c.name().to_string()).collect();
            (shapes.into_iter().map(|s| (s.cloud, s.label)).collect(), names, vec![])
        }
    };
    let (net, report) = fit(&data, &config.train).map_err(|e| CliError::lib("training", e))?;
    let mut out = OutDir::create(&a.out)?;
    let checkpoint = Checkpoint::new(net, names).map_err(|e| CliError::lib("checkpoint", e))?;
    let path = out.path("checkpoint.json")?;
    save_checkpoint(&path, &checkpoint).map_err(|e| CliError::lib(path.display(), e))?;
    out.write("train_report.json", serde_json::to_string_pretty(&report).expect("report serializes") + "\n")?;
    eprintln!(
        "train accuracy {:.3}, validation accuracy {:.3}",
        report.train_accuracy, report.validation_accuracy
    );
    out.finish("train", options(a), config, records)
}

fn open_checkpoint(path: &Path) -> Result<Checkpoint> {
    load_checkpoint(path).map_err(|e| match e {
        curvsal::Error::Io(source) => CliError::io(path, source),
        other => CliError::lib(path.display(), other),
    })
}

/// Explicit `--class` (name or index), else the input's class directory,
/// else the predicted class.
fn resolve_class(explicit: Option<&str>, input: &Input, names: &[String], net: &ToyNet, cloud: &PointCloud) -> Result<usize> {
    if let Some(c) = explicit {
        return names
            .iter()
            .position(|n| n == c)
            .or_else(|| c.parse::<usize>().ok().filter(|&i| i < names.len()))
            .ok_or_else(|| CliError::Usage(format!("unknown class {c:?}; classes are {names:?}")));
    }
    if let Some(i) = input.label_dir.as_ref().and_then(|l| names.iter().position(|n| n == l)) {
        return Ok(i);
    }
    Ok(net.scores(cloud).map_err(|e| CliError::lib(&input.name, e))?.argmax)
}

/// Runs `method`; returns the mask and its loss trace (empty for Zheng).
fn explain(method: Method, input: &Input, cloud: &PointCloud, net: &ToyNet, class: usize, config: &RunConfig) -> Result<(SaliencyMask, Vec<f64>)> {
    let ctx = |e| CliError::lib(&input.name, e);
    if method == Method::Zheng {
        return Ok((zheng_saliency(cloud, net, class).map_err(ctx)?, vec![]));
    }
    let seq = smooth_sequence(cloud, &config.smooth).map_err(ctx)?;
    let run = match method {
        Method::Pcigos => pci_gos,
        Method::Maskonly => mask_only,
        Method::Igonly => ig_only,
        Method::Zheng => unreachable!(),
    };
    let o = run(&seq, net, class, &config.mask).map_err(ctx)?;
    Ok((o.mask, o.loss_trace))
}

#[derive(Serialize)]
struct MaskSummary {
    shape: String,
    class: usize,
    class_name: String,
    method: &'static str,
    /// Clean-shape probability of `class`.
    score: f64,
    mean_mask: f64,
}

pub fn saliency(a: &SaliencyArgs, config: &RunConfig) -> Result<()> {
    let checkpoint = open_checkpoint(&a.checkpoint)?;
    let net = &checkpoint.network;
    let inputs = discover(&a.inputs)?;
    let mut out = OutDir::create(&a.out)?;
    let mut records = vec![record(&a.checkpoint)?];
    let mut summary = vec![];
    for input in &inputs {
        records.push(record(&input.path)?);
        let cloud = load_cloud(&input.path, config)?;
        let class = resolve_class(a.class.as_deref(), input, &checkpoint.class_names, net, &cloud)?;
        let (mask, trace) = explain(a.method, input, &cloud, net, class, config)?;
        out.write(&format!("{}.mask.csv", input.name), to_csv(|b| mask.write_csv(b), &input.name)?)?;
        let ply = out.path(&format!("{}.mask.ply", input.name))?;
        mask.write_ply(&ply, &cloud).map_err(|e| CliError::lib(ply.display(), e))?;
        let mut loss = String::from("step,loss\n");
        for (s, v) in trace.iter().enumerate() {
            writeln!(loss, "{s},{v:e}").unwrap();
        }
        out.write(&format!("{}.loss.csv", input.name), loss)?;
        let full = mask.full();
        summary.push(MaskSummary {
            shape: input.name.clone(),
            class,
            class_name: checkpoint.class_names[class].clone(),
            method: a.method.name(),
            score: net.scores(&cloud).map_err(|e| CliError::lib(&input.name, e))?.scores[class],
            mean_mask: full.iter().sum::<f64>() / full.len() as f64,
        });
    }
    out.write("summary.json", serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n")?;
    out.finish("saliency", options(a), config, records)
}

pub fn eval(a: &EvalArgs, config: &RunConfig) -> Result<()> {
    let checkpoint = open_checkpoint(&a.checkpoint)?;
    let net = &checkpoint.network;
    let inputs = discover(&a.inputs)?;
    let fractions = default_fractions();
    let mut out = OutDir::create(&a.out)?;
    let mut records = vec![record(&a.checkpoint)?];
    let mut shapes = vec![];
    for input in &inputs {
        records.push(record(&input.path)?);
        let ctx = |e| CliError::lib(&input.name, e);
        let cloud = load_cloud(&input.path, config)?;
        let class = resolve_class(a.class.as_deref(), input, &checkpoint.class_names, net, &cloud)?;
        let saliency = match &a.masks {
            Some(dir) => {
                let path = dir.join(format!("{}.mask.csv", input.name));
                records.push(record(&path)?);
                parse_mask_csv(&read(&path)?).map_err(|e| CliError::lib(path.display(), e))?
            }
            None => explain(a.method, input, &cloud, net, class, config)?.0.full(),
        };
        let seq = smooth_sequence(&cloud, &config.smooth).map_err(ctx)?;
        let mut curves =
            ShapeCurves::evaluate(&input.name, a.method.name(), &seq, &saliency, net, class, &fractions).map_err(ctx)?;
        curves.curves.retain(|k, _| match a.mode {
            Mode::Curvature => k.name().starts_with("curvature"),
            Mode::Point => k.name().starts_with("point"),
            Mode::All => true,
        });
        for (kind, curve) in &curves.curves {
            let name = format!("curves/{}.{}.csv", input.name, kind.name());
            out.write(&name, to_csv(|b| curve.write_csv(b), &input.name)?)?;
        }
        shapes.push(curves);
    }
    let report = class_curve_report(&shapes, &checkpoint.class_names).map_err(|e| CliError::lib("report", e))?;
    out.write("table.csv", to_csv(|b| report.write_table_csv(b), "report")?)?;
    out.write("plot.csv", to_csv(|b| report.write_plot_csv(b), "report")?)?;
    out.write("summary.json", serde_json::to_string_pretty(&report).expect("report serializes") + "\n")?;
    out.finish("eval", options(a), config, records)
}

pub fn generate(a: &GenerateArgs, config: &RunConfig) -> Result<()> {
    let shapes = generate_synthetic(&config.synthetic).map_err(|e| CliError::lib("synthetic corpus", e))?;
    let mut out = OutDir::create(&a.out)?;
    let mut labels = String::from("name,label,class\n");
    for s in &shapes {
        let class = config.synthetic.classes[s.label].name();
        let path = out.path(&format!("{class}/{}.ply", s.name))?;
        write_ply_file(&path, &s.cloud, &PlyExtras::default()).map_err(|e| CliError::lib(path.display(), e))?;
        writeln!(labels, "{},{},{class}", s.name, s.label).unwrap();
    }
    out.write("labels.csv", labels)?;
    out.finish("generate", options(a), config, vec![])
}
