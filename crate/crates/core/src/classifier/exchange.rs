//! File-based protocol for classifiers that run in another process.
//!
//! For query `k` the artifact writes `query_<k>.ply` (four-digit, zero
//! padded) with a `comment target_class <c>` header line, or
//! `target_class -` when only scores are needed. The responder writes
//! `scores_<k>.json` (`{"scores": [...]}`) and, for gradient queries,
//! `grads_<k>.csv` with columns `point_index,dx,dy,dz`. Rows absent from
//! the CSV are zero gradients. Responders should write each file under a
//! temporary name and rename it into place.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{ClassScores, Classifier, InputGradient};
use crate::error::{Error, Result};
use crate::geometry::{PointCloud, Vec3};
use crate::io::{write_ply_file, PlyExtras};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoresFile {
    scores: Vec<f64>,
}

/// Parses a scores response and checks it is a distribution over `classes`.
pub fn parse_scores_json(bytes: &[u8], classes: usize) -> Result<ClassScores> {
    let f: ScoresFile =
        serde_json::from_slice(bytes).map_err(|e| Error::parse("scores JSON", e.line().max(1), e.to_string()))?;
    if f.scores.len() != classes {
        return Err(Error::parse("scores JSON", 1, format!("expected {classes} scores, found {}", f.scores.len())));
    }
    if f.scores.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::parse("scores JSON", 1, "scores must lie in [0, 1]"));
    }
    let sum: f64 = f.scores.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::parse("scores JSON", 1, format!("scores sum to {sum}, not 1")));
    }
    Ok(ClassScores::from_scores(f.scores))
}

pub fn write_scores_json(path: impl AsRef<Path>, scores: &[f64]) -> Result<()> {
    std::fs::write(path, serde_json::to_string(&ScoresFile { scores: scores.to_vec() })?)?;
    Ok(())
}

/// Parses a gradient response for a cloud of `n` points.
pub fn parse_grads_csv(bytes: &[u8], n: usize) -> Result<Vec<Vec3>> {
    const FORMAT: &str = "gradient CSV";
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(bytes);
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(FORMAT, 1, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["point_index", "dx", "dy", "dz"] {
        return Err(Error::parse(FORMAT, 1, "header must be point_index,dx,dy,dz"));
    }
    let mut grads = vec![Vec3::ZERO; n];
    let mut seen = vec![false; n];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(1, |p| p.line() as usize);
            Error::parse(FORMAT, line, e.to_string())
        })?;
        let line = rec.position().map_or(1, |p| p.line() as usize);
        let idx: usize = rec[0]
            .parse()
            .map_err(|_| Error::parse(FORMAT, line, format!("bad point index {:?}", &rec[0])))?;
        if idx >= n {
            return Err(Error::parse(FORMAT, line, format!("point index {idx} out of range for {n} points")));
        }
        if std::mem::replace(&mut seen[idx], true) {
            return Err(Error::parse(FORMAT, line, format!("duplicate point index {idx}")));
        }
        let mut v = [0.0; 3];
        for (k, dst) in v.iter_mut().enumerate() {
            *dst = match rec[k + 1].parse::<f64>() {
                Ok(x) if x.is_finite() => x,
                _ => return Err(Error::parse(FORMAT, line, format!("bad gradient value {:?}", &rec[k + 1]))),
            };
        }
        grads[idx] = Vec3::from_array(v);
    }
    Ok(grads)
}

pub fn write_grads_csv(path: impl AsRef<Path>, grads: &[Vec3]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["point_index", "dx", "dy", "dz"])?;
    for (i, g) in grads.iter().enumerate() {
        w.write_record([i.to_string(), format!("{:e}", g.x), format!("{:e}", g.y), format!("{:e}", g.z)])?;
    }
    w.flush()?;
    Ok(())
}

/// A [`Classifier`] answered by an external process through a directory.
#[derive(Debug)]
pub struct ExchangeClassifier {
    dir: PathBuf,
    classes: usize,
    timeout: Duration,
    poll: Duration,
    next_id: AtomicUsize,
}

impl ExchangeClassifier {
    pub fn new(dir: impl Into<PathBuf>, classes: usize, timeout: Duration) -> Result<Self> {
        let dir = dir.into();
        if classes == 0 {
            return Err(Error::Parameter("exchange classifier needs at least one class".into()));
        }
        if !dir.is_dir() {
            return Err(Error::Parameter(format!("{} is not a directory", dir.display())));
        }
        Ok(ExchangeClassifier { dir, classes, timeout, poll: Duration::from_millis(5), next_id: AtomicUsize::new(0) })
    }

    fn wait_for(&self, path: &Path, start: Instant) -> Result<Vec<u8>> {
        loop {
            if path.exists() {
                return Ok(std::fs::read(path)?);
            }
            if start.elapsed() > self.timeout {
                return Err(Error::Classifier(format!("timed out waiting for {}", path.display())));
            }
            std::thread::sleep(self.poll);
        }
    }

    fn query(&self, cloud: &PointCloud, class: Option<usize>) -> Result<(ClassScores, Option<Vec<Vec3>>)> {
        let id = self.next_id.fetch_add(1, Ordering::SeqCst);
        let tag = class.map_or("-".to_string(), |c| c.to_string());
        let comments = [format!("target_class {tag}")];
        let tmp = self.dir.join(format!(".query_{id:04}.ply.tmp"));
        write_ply_file(&tmp, cloud, &PlyExtras { comments: &comments, ..Default::default() })?;
        std::fs::rename(&tmp, self.dir.join(format!("query_{id:04}.ply")))?;

        let start = Instant::now();
        let wrap = |e: Error| Error::Classifier(format!("response {id:04}: {e}"));
        let scores =
            parse_scores_json(&self.wait_for(&self.dir.join(format!("scores_{id:04}.json")), start)?, self.classes)
                .map_err(wrap)?;
        let grads = match class {
            Some(_) => Some(
                parse_grads_csv(&self.wait_for(&self.dir.join(format!("grads_{id:04}.csv")), start)?, cloud.len())
                    .map_err(wrap)?,
            ),
            None => None,
        };
        Ok((scores, grads))
    }
}

impl Classifier for ExchangeClassifier {
    fn num_classes(&self) -> usize {
        self.classes
    }

    fn scores(&self, cloud: &PointCloud) -> Result<ClassScores> {
        Ok(self.query(cloud, None)?.0)
    }

    fn input_gradient(&self, cloud: &PointCloud, class: usize) -> Result<InputGradient> {
        Ok(self.score_and_gradient(cloud, class)?.1)
    }

    fn score_and_gradient(&self, cloud: &PointCloud, class: usize) -> Result<(f64, InputGradient)> {
        if class >= self.classes {
            return Err(Error::Parameter(format!("class {class} out of range for {} classes", self.classes)));
        }
        let (s, g) = self.query(cloud, Some(class))?;
        Ok((s.scores[class], InputGradient { class, grads: g.unwrap_or_default() }))
    }
}
