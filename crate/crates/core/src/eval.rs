//! Deletion and insertion curves for saliency masks.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::saliency::blend;
use crate::smoother::SmoothSequence;

/// Kernel concentration used for binary evaluation masks. At this value the
/// off-peak kernel mass is below 1e-21, so binary masks land on levels
/// 0 and L up to rounding.
pub const EVAL_ALPHA: f64 = 50.0;

/// Guards `ceil(x * N)` against fractions like 0.15 that are not exact in
/// binary.
const COUNT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCurve {
    pub fractions: Vec<f64>,
    pub scores: Vec<f64>,
    pub auc: f64,
}

impl EvalCurve {
    pub fn new(fractions: Vec<f64>, scores: Vec<f64>) -> Result<Self> {
        validate_fractions(&fractions)?;
        if scores.len() != fractions.len() {
            return Err(Error::Parameter("curve needs one score per fraction".into()));
        }
        let auc = scores.iter().sum::<f64>() / scores.len() as f64;
        Ok(EvalCurve { fractions, scores, auc })
    }

    /// First fraction at which the score reaches `target`.
    pub fn fraction_to_reach(&self, target: f64) -> Option<f64> {
        self.fractions.iter().zip(&self.scores).find(|(_, &s)| s >= target).map(|(&f, _)| f)
    }

    /// `fraction,score` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["fraction", "score"])?;
        for (f, s) in self.fractions.iter().zip(&self.scores) {
            w.write_record([format!("{f}"), format!("{s:.17e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// 0, 0.05, ..., 1.
pub fn default_fractions() -> Vec<f64> {
    (0..=20).map(|k| k as f64 / 20.0).collect()
}

fn validate_fractions(f: &[f64]) -> Result<()> {
    if f.len() < 2 || f[0] != 0.0 || f[f.len() - 1] != 1.0 || f.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Parameter("fractions must increase strictly from 0 to 1".into()));
    }
    Ok(())
}

/// Number of points in the top `x` fraction of `n`.
pub fn top_count(x: f64, n: usize) -> usize {
    ((x * n as f64 - COUNT_EPS).ceil().max(0.0) as usize).min(n)
}

/// Point indices by decreasing saliency, ties by lower index.
pub fn saliency_order(saliency: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..saliency.len()).collect();
    idx.sort_by(|&a, &b| saliency[b].total_cmp(&saliency[a]).then(a.cmp(&b)));
    idx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    CurvatureDeletion,
    CurvatureInsertion,
    PointDeletion,
    PointInsertion,
}

impl CurveKind {
    pub const ALL: [CurveKind; 4] =
        [CurveKind::CurvatureDeletion, CurveKind::CurvatureInsertion, CurveKind::PointDeletion, CurveKind::PointInsertion];

    pub fn name(self) -> &'static str {
        match self {
            CurveKind::CurvatureDeletion => "curvature_deletion",
            CurveKind::CurvatureInsertion => "curvature_insertion",
            CurveKind::PointDeletion => "point_deletion",
            CurveKind::PointInsertion => "point_insertion",
        }
    }
}

fn check_inputs(n: usize, saliency: &[f64], classifier: &dyn Classifier, class: usize) -> Result<()> {
    if saliency.len() != n {
        return Err(Error::Parameter(format!("saliency has {} values for {n} points", saliency.len())));
    }
    if class >= classifier.num_classes() {
        return Err(Error::Parameter(format!("class {class} out of range for {} classes", classifier.num_classes())));
    }
    Ok(())
}

fn curvature_curve(
    seq: &SmoothSequence,
    saliency: &[f64],
    classifier: &dyn Classifier,
    class: usize,
    fractions: &[f64],
    top_value: f64,
) -> Result<EvalCurve> {
    let n = seq.len_points();
    check_inputs(n, saliency, classifier, class)?;
    validate_fractions(fractions)?;
    let order = saliency_order(saliency);
    let scores = fractions
        .par_iter()
        .map(|&x| {
            let mut m = vec![1.0 - top_value; n];
            for &i in &order[..top_count(x, n)] {
                m[i] = top_value;
            }
            let (cloud, _) = blend(seq, &m, EVAL_ALPHA)?;
            Ok(classifier.scores(&cloud)?.scores[class])
        })
        .collect::<Result<Vec<f64>>>()?;
    EvalCurve::new(fractions.to_vec(), scores)
}

/// Smooths the top-x most salient points fully and keeps the rest.
pub fn curvature_deletion(
    seq: &SmoothSequence,
    saliency: &[f64],
    classifier: &dyn Classifier,
    class: usize,
    fractions: &[f64],
) -> Result<EvalCurve> {
    curvature_curve(seq, saliency, classifier, class, fractions, 1.0)
}

/// Keeps the top-x most salient points and smooths everything else.
pub fn curvature_insertion(
    seq: &SmoothSequence,
    saliency: &[f64],
    classifier: &dyn Classifier,
    class: usize,
    fractions: &[f64],
) -> Result<EvalCurve> {
    curvature_curve(seq, saliency, classifier, class, fractions, 0.0)
}

/// Indices kept when the top `count` salient points are removed, in
/// original order.
pub fn deletion_kept(order: &[usize], count: usize) -> Vec<usize> {
    let mut k = order[count..].to_vec();
    k.sort_unstable();
    k
}

/// Indices kept when only the top `count` salient points remain, in
/// original order.
pub fn insertion_kept(order: &[usize], count: usize) -> Vec<usize> {
    let mut k = order[..count].to_vec();
    k.sort_unstable();
    k
}

fn point_curve(
    cloud: &PointCloud,
    saliency: &[f64],
    classifier: &dyn Classifier,
    class: usize,
    fractions: &[f64],
    keep: fn(&[usize], usize) -> Vec<usize>,
) -> Result<EvalCurve> {
    let n = cloud.len();
    check_inputs(n, saliency, classifier, class)?;
    validate_fractions(fractions)?;
    let order = saliency_order(saliency);
    let prior = 1.0 / classifier.num_classes() as f64;
    let scores = fractions
        .par_iter()
        .map(|&x| {
            let kept = keep(&order, top_count(x, n));
            if kept.is_empty() {
                return Ok(prior);
            }
            Ok(classifier.scores(&cloud.select(&kept)?)?.scores[class])
        })
        .collect::<Result<Vec<f64>>>()?;
    EvalCurve::new(fractions.to_vec(), scores)
}

/// Removes the top-x most salient points; an empty cloud scores `1/C`.
pub fn point_deletion(
    cloud: &PointCloud,
    saliency: &[f64],
    classifier: &dyn Classifier,
    class: usize,
    fractions: &[f64],
) -> Result<EvalCurve> {
    point_curve(cloud, saliency, classifier, class, fractions, deletion_kept)
}

/// Keeps only the top-x most salient points; an empty cloud scores `1/C`.
pub fn point_insertion(
    cloud: &PointCloud,
    saliency: &[f64],
    classifier: &dyn Classifier,
    class: usize,
    fractions: &[f64],
) -> Result<EvalCurve> {
    point_curve(cloud, saliency, classifier, class, fractions, insertion_kept)
}

/// All four curves for one shape and one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeCurves {
    pub shape: String,
    pub class: usize,
    pub method: String,
    pub curves: BTreeMap<CurveKind, EvalCurve>,
}

impl ShapeCurves {
    pub fn evaluate(
        shape: impl Into<String>,
        method: impl Into<String>,
        seq: &SmoothSequence,
        saliency: &[f64],
        classifier: &dyn Classifier,
        class: usize,
        fractions: &[f64],
    ) -> Result<Self> {
        let cloud = seq.original();
        let curves = BTreeMap::from([
            (CurveKind::CurvatureDeletion, curvature_deletion(seq, saliency, classifier, class, fractions)?),
            (CurveKind::CurvatureInsertion, curvature_insertion(seq, saliency, classifier, class, fractions)?),
            (CurveKind::PointDeletion, point_deletion(cloud, saliency, classifier, class, fractions)?),
            (CurveKind::PointInsertion, point_insertion(cloud, saliency, classifier, class, fractions)?),
        ]);
        Ok(ShapeCurves { shape: shape.into(), class, method: method.into(), curves })
    }
}

/// Mean curve of one (method, class, curve kind) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCurve {
    pub method: String,
    pub class: String,
    pub kind: CurveKind,
    pub shapes: usize,
    pub curve: EvalCurve,
}

/// One row of the summary table: per curve kind, the mean over classes of
/// the class-mean AUC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: String,
    pub auc: BTreeMap<CurveKind, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveReport {
    pub classes: Vec<ClassCurve>,
    pub table: Vec<MethodRow>,
}

/// Aggregates per-shape curves into per-class mean curves and a summary
/// table. Methods and classes appear in sorted order.
pub fn class_curve_report(shapes: &[ShapeCurves], class_names: &[String]) -> Result<CurveReport> {
    if shapes.is_empty() {
        return Err(Error::Parameter("no shapes to report".into()));
    }
    let mut groups: BTreeMap<(String, usize, CurveKind), Vec<&EvalCurve>> = BTreeMap::new();
    for s in shapes {
        let name_ok = s.class < class_names.len();
        if !name_ok {
            return Err(Error::Parameter(format!("shape {} has class {} without a name", s.shape, s.class)));
        }
        for (&kind, curve) in &s.curves {
            groups.entry((s.method.clone(), s.class, kind)).or_default().push(curve);
        }
    }
    let mut classes = vec![];
    let mut per_method: BTreeMap<(String, CurveKind), Vec<f64>> = BTreeMap::new();
    for ((method, class, kind), curves) in groups {
        let fractions = curves[0].fractions.clone();
        if curves.iter().any(|c| c.fractions != fractions) {
            return Err(Error::Parameter(format!("{method}/{class}: curves use different fraction grids")));
        }
        let k = curves.len() as f64;
        let scores: Vec<f64> =
            (0..fractions.len()).map(|j| curves.iter().map(|c| c.scores[j]).sum::<f64>() / k).collect();
        let curve = EvalCurve::new(fractions, scores)?;
        per_method.entry((method.clone(), kind)).or_default().push(curve.auc);
        classes.push(ClassCurve { method, class: class_names[class].clone(), kind, shapes: curves.len(), curve });
    }
    let mut table: BTreeMap<String, BTreeMap<CurveKind, f64>> = BTreeMap::new();
    for ((method, kind), aucs) in per_method {
        table.entry(method).or_default().insert(kind, aucs.iter().sum::<f64>() / aucs.len() as f64);
    }
    let table = table.into_iter().map(|(method, auc)| MethodRow { method, auc }).collect();
    Ok(CurveReport { classes, table })
}

impl CurveReport {
    /// `method,curvature_deletion,curvature_insertion,point_deletion,point_insertion`.
    pub fn write_table_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        let mut header = vec!["method".to_string()];
        header.extend(CurveKind::ALL.iter().map(|k| k.name().to_string()));
        w.write_record(&header)?;
        for row in &self.table {
            let mut rec = vec![row.method.clone()];
            rec.extend(CurveKind::ALL.iter().map(|k| row.auc.get(k).map_or(String::new(), |v| format!("{v:.6}"))));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Long-format plot data: `method,class,kind,fraction,score`.
    pub fn write_plot_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["method", "class", "kind", "fraction", "score"])?;
        for c in &self.classes {
            for (f, s) in c.curve.fractions.iter().zip(&c.curve.scores) {
                w.write_record([c.method.as_str(), &c.class, c.kind.name(), &format!("{f}"), &format!("{s:.17e}")])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
