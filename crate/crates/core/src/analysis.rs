//! Evaluation reports over a network, its interpretation model and a
//! dataset, plus CSV/JSON/PGM writers for them.
//!
//! "Prediction" is the positive-class (index 1) softmax probability.

use std::io::Write;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{argmax, dot, norm2};
use crate::netcore::{Configuration, Network};
use crate::openbox::InterpretationModel;
use crate::polytope::Sense;

fn positive(p: &[f64]) -> f64 {
    p[p.len().min(2) - 1]
}

fn check_dims(net: &Network, data: &Dataset) -> Result<()> {
    if !data.is_empty() && data.dim() != net.input_dim() {
        return Err(Error::dim("dataset instance", net.input_dim(), data.dim()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactnessReport {
    /// `|p_net(x) - p_llc(x)|` per instance.
    pub deltas: Vec<f64>,
    pub max: f64,
    pub mean: f64,
}

pub fn exactness_report(
    net: &Network,
    model: &InterpretationModel,
    data: &Dataset,
) -> Result<ExactnessReport> {
    model.check_fresh(net)?;
    check_dims(net, data)?;
    let deltas: Vec<f64> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let x = data.row(i);
            let p_net = net.positive_probability(x)?;
            let p_llc = positive(&model.llc_for(net, x)?.predict(x));
            Ok((p_net - p_llc).abs())
        })
        .collect::<Result<_>>()?;
    let max = deltas.iter().copied().fold(0.0, f64::max);
    let mean = deltas.iter().sum::<f64>() / deltas.len().max(1) as f64;
    Ok(ExactnessReport { deltas, max, mean })
}

/// Cosine similarity with the conventions used by the consistency report:
/// bitwise-equal vectors score exactly 1, two zero vectors score 1 and a
/// single zero vector scores 0.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm2(a), norm2(b));
    match (na == 0.0, nb == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ if a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()) => 1.0,
        _ => (dot(a, b) / (na * nb)).clamp(-1.0, 1.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyRecord {
    pub index: usize,
    pub neighbor: usize,
    pub same_configuration: bool,
    pub cosine: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyResult {
    pub records: Vec<ConsistencyRecord>,
    /// Min, 25%, median, 75%, max of the cosines (nearest-rank).
    pub quantiles: [f64; 5],
    pub fraction_exactly_one: f64,
}

fn quantiles(values: &[f64]) -> [f64; 5] {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let at = |q: f64| {
        let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
        v[rank - 1]
    };
    [v[0], at(0.25), at(0.5), at(0.75), v[v.len() - 1]]
}

/// Euclidean nearest neighbour of every instance, ties to the lowest index.
pub fn nearest_neighbors(data: &Dataset) -> Vec<usize> {
    (0..data.len())
        .into_par_iter()
        .map(|i| {
            let x = data.row(i);
            let mut best = (f64::INFINITY, usize::MAX);
            for j in (0..data.len()).filter(|&j| j != i) {
                let d = x
                    .iter()
                    .zip(data.row(j))
                    .fold(0.0, |acc, (a, b)| acc + (a - b) * (a - b));
                if d < best.0 {
                    best = (d, j);
                }
            }
            best.1
        })
        .collect()
}

pub fn consistency_report(
    net: &Network,
    model: &InterpretationModel,
    data: &Dataset,
) -> Result<ConsistencyResult> {
    model.check_fresh(net)?;
    check_dims(net, data)?;
    if data.len() < 2 {
        return Err(Error::Domain(
            "consistency needs at least 2 instances".into(),
        ));
    }
    let classifiers: Vec<(Configuration, Vec<f64>)> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let llc = model.llc_for(net, data.row(i))?;
            let row = llc
                .decision_features(llc.num_classes().min(2) - 1)?
                .to_vec();
            Ok((llc.configuration.clone(), row))
        })
        .collect::<Result<_>>()?;
    let records: Vec<ConsistencyRecord> = nearest_neighbors(data)
        .into_iter()
        .enumerate()
        .map(|(i, j)| ConsistencyRecord {
            index: i,
            neighbor: j,
            same_configuration: classifiers[i].0 == classifiers[j].0,
            cosine: cosine(&classifiers[i].1, &classifiers[j].1),
        })
        .collect();
    let cosines: Vec<f64> = records.iter().map(|r| r.cosine).collect();
    let ones = cosines.iter().filter(|&&c| c == 1.0).count();
    Ok(ConsistencyResult {
        quantiles: quantiles(&cosines),
        fraction_exactly_one: ones as f64 / cosines.len() as f64,
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSource {
    Openbox,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HackRecord {
    pub index: usize,
    pub p_before: f64,
    pub p_after: f64,
    pub label_before: usize,
    pub label_after: usize,
    pub zeroed: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HackResult {
    pub m: usize,
    pub source: FeatureSource,
    /// Mean `|p_after - p_before|`.
    pub cpp: f64,
    /// Number of instances whose predicted label flipped.
    pub nlci: usize,
    pub records: Vec<HackRecord>,
}

/// Indices of the `m` largest `|v|`, ties to the lower index.
pub fn top_m_by_magnitude(v: &[f64], m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()).then(a.cmp(&b)));
    idx.truncate(m);
    idx
}

/// Zeroes `m` features of every instance and measures the network's
/// response. `openbox` picks the top-`m` decision features of the predicted
/// class; `random` picks `m` uniformly (seeded) per instance.
pub fn hack(
    net: &Network,
    model: &InterpretationModel,
    data: &Dataset,
    m: usize,
    source: FeatureSource,
    seed: u64,
) -> Result<HackResult> {
    model.check_fresh(net)?;
    check_dims(net, data)?;
    let d = net.input_dim();
    if m > d {
        return Err(Error::Domain(format!("cannot zero {m} of {d} features")));
    }
    let random_sets: Vec<Vec<usize>> = match source {
        FeatureSource::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..data.len())
                .map(|_| sample(&mut rng, d, m).into_vec())
                .collect()
        }
        FeatureSource::Openbox => Vec::new(),
    };
    let records: Vec<HackRecord> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let x = data.row(i);
            let before = net.forward(x)?;
            let label_before = argmax(&before.output);
            let zeroed = match source {
                FeatureSource::Openbox => {
                    let llc = model.llc_for(net, x)?;
                    top_m_by_magnitude(llc.decision_features(label_before)?, m)
                }
                FeatureSource::Random => random_sets[i].clone(),
            };
            let mut hacked = x.to_vec();
            for &k in &zeroed {
                hacked[k] = 0.0;
            }
            let after = net.forward(&hacked)?.output;
            Ok(HackRecord {
                index: i,
                p_before: positive(&before.output),
                p_after: positive(&after),
                label_before,
                label_after: argmax(&after),
                zeroed,
            })
        })
        .collect::<Result<_>>()?;
    let cpp = records
        .iter()
        .map(|r| (r.p_after - r.p_before).abs())
        .sum::<f64>()
        / records.len().max(1) as f64;
    let nlci = records
        .iter()
        .filter(|r| r.label_after != r.label_before)
        .count();
    Ok(HackResult {
        m,
        source,
        cpp,
        nlci,
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DebugRecord {
    pub index: usize,
    pub true_label: usize,
    pub predicted: usize,
    pub predicted_probability: f64,
    /// `x ⊙ decision_features(class)` for each class.
    pub overlays: Vec<Vec<f64>>,
}

/// Misclassified instances, most confident first (ties by index).
pub fn debug_report(
    net: &Network,
    model: &InterpretationModel,
    data: &Dataset,
) -> Result<Vec<DebugRecord>> {
    model.check_fresh(net)?;
    check_dims(net, data)?;
    let mut records: Vec<DebugRecord> = (0..data.len())
        .into_par_iter()
        .map(|i| -> Result<Option<DebugRecord>> {
            let x = data.row(i);
            let out = net.forward(x)?.output;
            let predicted = argmax(&out);
            let true_label = data.label(i) as usize;
            if predicted == true_label {
                return Ok(None);
            }
            let llc = model.llc_for(net, x)?;
            let overlays = (0..llc.num_classes())
                .map(|c| {
                    let row = llc.decision_features(c)?;
                    Ok(x.iter().zip(row).map(|(a, b)| a * b).collect())
                })
                .collect::<Result<_>>()?;
            Ok(Some(DebugRecord {
                index: i,
                true_label,
                predicted,
                predicted_probability: out[predicted],
                overlays,
            }))
        })
        .filter_map(|r| r.transpose())
        .collect::<Result<_>>()?;
    records.sort_by(|a, b| {
        b.predicted_probability
            .total_cmp(&a.predicted_probability)
            .then(a.index.cmp(&b.index))
    });
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryRef {
    pub layer: usize,
    pub neuron: usize,
    pub sense: Sense,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PbfRow {
    pub configuration: Configuration,
    pub support: usize,
    pub boundaries: Vec<BoundaryRef>,
    /// Instances of `data` in this polytope, by label `[0, 1]`.
    pub class_counts: [usize; 2],
    /// LLC accuracy on those instances.
    pub accuracy: f64,
}

/// The `top_j` most-supported polytopes with their surviving constraints,
/// class make-up and local accuracy over `data`.
pub fn pbf_table(
    net: &Network,
    model: &InterpretationModel,
    data: &Dataset,
    top_j: usize,
) -> Result<Vec<PbfRow>> {
    model.check_fresh(net)?;
    check_dims(net, data)?;
    if model
        .entries()
        .values()
        .any(|e| !e.llc.polytope.redundancy_checked())
    {
        return Err(Error::Domain(
            "model was built without redundancy removal".into(),
        ));
    }
    let top = model
        .by_support()
        .into_iter()
        .take(top_j)
        .collect::<Vec<_>>();
    let confs: Vec<Configuration> = (0..data.len())
        .into_par_iter()
        .map(|i| net.conf(data.row(i)))
        .collect::<Result<_>>()?;
    Ok(top
        .into_iter()
        .map(|e| {
            let mut class_counts = [0usize; 2];
            let mut correct = 0usize;
            for (i, c) in confs.iter().enumerate() {
                if *c != e.llc.configuration {
                    continue;
                }
                let y = data.label(i) as usize;
                class_counts[y.min(1)] += 1;
                correct += usize::from(argmax(&e.llc.logits(data.row(i))) == y);
            }
            let n = class_counts[0] + class_counts[1];
            PbfRow {
                configuration: e.llc.configuration.clone(),
                support: e.support,
                boundaries: e
                    .llc
                    .polytope
                    .non_redundant()
                    .map(|h| BoundaryRef {
                        layer: h.layer,
                        neuron: h.neuron,
                        sense: h.sense,
                    })
                    .collect(),
                class_counts,
                accuracy: if n == 0 {
                    0.0
                } else {
                    correct as f64 / n as f64
                },
            }
        })
        .collect())
}

/// Instance/entry pairs where polytope membership disagrees with the
/// configuration: `contains(P_c, x) != (conf(x) == c)`.
pub fn partition_violations(
    net: &Network,
    model: &InterpretationModel,
    data: &Dataset,
) -> Result<usize> {
    model.check_fresh(net)?;
    check_dims(net, data)?;
    let per_instance: Vec<usize> = (0..data.len())
        .into_par_iter()
        .map(|i| -> Result<usize> {
            let x = data.row(i);
            let c = net.conf(x)?;
            let mut bad = 0;
            for (key, e) in model.entries() {
                if e.llc.polytope.contains(x)? != (*key == c) {
                    bad += 1;
                }
            }
            Ok(bad)
        })
        .collect::<Result<_>>()?;
    Ok(per_instance.into_iter().sum())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SamplingCheck {
    pub polytopes: usize,
    /// Samples that satisfied the reduced constraint set.
    pub inside: usize,
    /// Removed constraints violated by more than the redundancy slack.
    pub violations: usize,
}

/// Draws `samples` uniform points from the model's box for each of up to
/// `max_polytopes` entries with removed constraints, and checks that points
/// satisfying the kept constraints also satisfy the removed ones.
pub fn redundancy_sampling_check(
    model: &InterpretationModel,
    max_polytopes: usize,
    samples: usize,
    seed: u64,
) -> Result<SamplingCheck> {
    let Some(bbox) = model.bbox() else {
        return Err(Error::Domain("model has no redundancy bounding box".into()));
    };
    let mut candidates: Vec<_> = model
        .entries()
        .values()
        .filter(|e| e.llc.polytope.constraints().iter().any(|h| h.redundant))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if candidates.len() > max_polytopes {
        let mut keep = sample(&mut rng, candidates.len(), max_polytopes).into_vec();
        keep.sort_unstable();
        candidates = keep.into_iter().map(|i| candidates[i]).collect();
    }
    let mut out = SamplingCheck {
        polytopes: candidates.len(),
        ..SamplingCheck::default()
    };
    let mut x = vec![0.0; bbox.dim()];
    for e in candidates {
        let p = &e.llc.polytope;
        let removed: Vec<_> = p
            .constraints()
            .iter()
            .filter(|h| h.redundant)
            .map(|h| h.as_leq())
            .collect();
        for _ in 0..samples {
            for (k, v) in x.iter_mut().enumerate() {
                *v = rand::Rng::gen_range(&mut rng, bbox.lower[k]..=bbox.upper[k]);
            }
            if !p.contains_reduced(&x)? {
                continue;
            }
            out.inside += 1;
            out.violations += removed
                .iter()
                .filter(|(a, b)| dot(a, &x) > b + crate::polytope::EPS_REDUNDANT)
                .count();
        }
    }
    Ok(out)
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_exactness_csv(path: impl AsRef<Path>, r: &ExactnessReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "abs_delta"])?;
    for (i, d) in r.deltas.iter().enumerate() {
        w.serialize((i, d))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_consistency_csv(path: impl AsRef<Path>, r: &ConsistencyResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for rec in &r.records {
        w.serialize(rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_hack_csv(path: impl AsRef<Path>, results: &[HackResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "m",
        "source",
        "index",
        "p_before",
        "p_after",
        "abs_change",
        "label_before",
        "label_after",
    ])?;
    for h in results {
        let source = match h.source {
            FeatureSource::Openbox => "openbox",
            FeatureSource::Random => "random",
        };
        for r in &h.records {
            w.serialize((
                h.m,
                source,
                r.index,
                r.p_before,
                r.p_after,
                (r.p_after - r.p_before).abs(),
                r.label_before,
                r.label_after,
            ))?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Writes `v` as two `side x side` P5 images, `<stem>_pos.pgm` and
/// `<stem>_neg.pgm`, each scaled so the largest magnitude maps to 255.
pub fn write_pgm_pair(dir: impl AsRef<Path>, stem: &str, v: &[f64], side: usize) -> Result<()> {
    if v.len() != side * side {
        return Err(Error::dim("PGM overlay", side * side, v.len()));
    }
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for (suffix, sign) in [("pos", 1.0), ("neg", -1.0)] {
        let path = dir.as_ref().join(format!("{stem}_{suffix}.pgm"));
        let pixels: Vec<u8> = v
            .iter()
            .map(|&x| {
                let part = (sign * x).max(0.0);
                if scale == 0.0 {
                    0
                } else {
                    (255.0 * part / scale).round() as u8
                }
            })
            .collect();
        let mut w = create(&path)?;
        let mut write = || -> std::io::Result<()> {
            write!(w, "P5\n{side} {side}\n255\n")?;
            w.write_all(&pixels)?;
            w.flush()
        };
        write().map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
