//! Exact t-SNE projection of record vectors and lasso selection.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusSnapshot, Record};
use crate::error::{Error, Result};
use crate::quality::info_density;
use crate::surrogate::{confidence_score, SurrogateModel};
use crate::vectorizer::{Vectorizer, VectorizerConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            seed: 0,
        }
    }
}

const EXAGGERATION: f64 = 12.0;
const EXAGGERATION_ITERS: usize = 250;
const SEARCH_STEPS: usize = 50;
const SEARCH_TOL: f64 = 1e-5;
const P_FLOOR: f64 = 1e-12;
const INIT_SIGMA: f64 = 1e-4;
const MIN_GAIN: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct TsneResult {
    pub coords: Vec<[f64; 2]>,
    /// KL divergence before each update, when requested.
    pub kl: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of pair (i, j), i < j, in a packed upper triangle.
fn packed(n: usize, i: usize, j: usize) -> usize {
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Row of conditional affinities p(j|i) at the target entropy.
fn conditional_row(d: &[f64], i: usize, target_entropy: f64, out: &mut [f64]) {
    let n = d.len();
    let dmin = (0..n).filter(|&j| j != i).map(|j| d[j]).fold(f64::INFINITY, f64::min);
    let mut beta = 1.0;
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for _ in 0..SEARCH_STEPS {
        let mut sum = 0.0;
        let mut dot = 0.0;
        for j in 0..n {
            if j == i {
                out[j] = 0.0;
                continue;
            }
            let shifted = d[j] - dmin;
            let p = (-beta * shifted).exp();
            out[j] = p;
            sum += p;
            dot += shifted * p;
        }
        let h = sum.ln() + beta * dot / sum;
        let diff = h - target_entropy;
        if diff.abs() < SEARCH_TOL {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = if lo.is_finite() { (beta + lo) / 2.0 } else { beta / 2.0 };
        }
    }
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= sum);
}

fn validate(x: &[Vec<f64>], cfg: &TsneConfig) -> Result<usize> {
    let n = x.len();
    if n < 4 {
        return Err(Error::InvalidArgument(format!("projection needs at least 4 points, got {n}")));
    }
    let d = x[0].len();
    if d == 0 {
        return Err(Error::InvalidArgument("points have no dimensions".into()));
    }
    for row in x {
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("input contains non-finite values".into()));
        }
    }
    if !(cfg.perplexity >= 1.0 && cfg.perplexity < n as f64 / 3.0) {
        return Err(Error::InvalidArgument(format!(
            "perplexity must be in [1, n/3) = [1, {:.3}), got {}",
            n as f64 / 3.0,
            cfg.perplexity
        )));
    }
    if cfg.iterations < EXAGGERATION_ITERS {
        return Err(Error::InvalidArgument(format!(
            "iterations must be at least {EXAGGERATION_ITERS}"
        )));
    }
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::InvalidArgument("learning_rate must be positive".into()));
    }
    Ok(d)
}

pub fn tsne(x: &[Vec<f64>], cfg: &TsneConfig, trace: bool) -> Result<TsneResult> {
    validate(x, cfg)?;
    let n = x.len();
    let target = cfg.perplexity.ln();

    let mut p = vec![0.0f64; n * (n - 1) / 2];
    let mut dist = vec![0.0; n];
    let mut row = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            dist[j] = sq_dist(&x[i], &x[j]);
        }
        conditional_row(&dist, i, target, &mut row);
        for (j, &v) in row.iter().enumerate() {
            if j != i {
                p[packed(n, i.min(j), i.max(j))] += v;
            }
        }
    }
    let norm = 2.0 * n as f64;
    p.iter_mut().for_each(|v| *v = (*v / norm).max(P_FLOOR));
    let p_entropy: f64 = if trace { 2.0 * p.iter().map(|&v| v * v.ln()).sum::<f64>() } else { 0.0 };

    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, INIT_SIGMA).expect("valid sigma");
    let mut y: Vec<[f64; 2]> = (0..n).map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)]).collect();
    let mut update = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut attr = vec![[0.0f64; 2]; n];
    let mut rep = vec![[0.0f64; 2]; n];
    let mut kl = Vec::new();

    for t in 0..cfg.iterations {
        let exag = if t < EXAGGERATION_ITERS { EXAGGERATION } else { 1.0 };
        let momentum = if t < EXAGGERATION_ITERS { 0.5 } else { 0.8 };
        attr.iter_mut().for_each(|a| *a = [0.0; 2]);
        rep.iter_mut().for_each(|a| *a = [0.0; 2]);
        let mut z = 0.0;
        let mut p_log_num = 0.0;
        let mut k = 0;
        for i in 0..n {
            let yi = y[i];
            let (mut ai, mut ri) = ([0.0; 2], [0.0; 2]);
            for j in i + 1..n {
                let dx = yi[0] - y[j][0];
                let dy = yi[1] - y[j][1];
                let num = 1.0 / (1.0 + dx * dx + dy * dy);
                let pij = p[k];
                k += 1;
                z += 2.0 * num;
                if trace {
                    p_log_num += 2.0 * pij * num.ln();
                }
                let a = pij * num;
                let r = num * num;
                ai[0] += a * dx;
                ai[1] += a * dy;
                ri[0] += r * dx;
                ri[1] += r * dy;
                attr[j][0] -= a * dx;
                attr[j][1] -= a * dy;
                rep[j][0] -= r * dx;
                rep[j][1] -= r * dy;
            }
            attr[i][0] += ai[0];
            attr[i][1] += ai[1];
            rep[i][0] += ri[0];
            rep[i][1] += ri[1];
        }
        if trace {
            kl.push(p_entropy - p_log_num + z.ln());
        }
        for i in 0..n {
            for c in 0..2 {
                let g = 4.0 * (exag * attr[i][c] - rep[i][c] / z);
                let gain = &mut gains[i][c];
                if (g > 0.0) != (update[i][c] > 0.0) {
                    *gain += 0.2;
                } else {
                    *gain *= 0.8;
                }
                *gain = gain.max(MIN_GAIN);
                update[i][c] = momentum * update[i][c] - cfg.learning_rate * *gain * g;
                y[i][c] += update[i][c];
            }
        }
        let mean = y.iter().fold([0.0; 2], |m, v| [m[0] + v[0], m[1] + v[1]]);
        let mean = [mean[0] / n as f64, mean[1] / n as f64];
        for v in &mut y {
            v[0] -= mean[0];
            v[1] -= mean[1];
        }
    }
    Ok(TsneResult { coords: y, kl })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    WordVector,
    ConfidenceVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColorBy {
    Confidence,
    InfoDensity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectionConfig {
    pub layout: Layout,
    pub color: ColorBy,
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub max_points: usize,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            layout: Layout::WordVector,
            color: ColorBy::InfoDensity,
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            seed: 0,
            max_points: 5000,
        }
    }
}

impl ProjectionConfig {
    pub fn tsne(&self) -> TsneConfig {
        TsneConfig {
            perplexity: self.perplexity,
            iterations: self.iterations,
            learning_rate: self.learning_rate,
            seed: self.seed,
        }
    }

    pub fn needs_model(&self) -> bool {
        self.layout == Layout::ConfidenceVector || self.color == ColorBy::Confidence
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPoint {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub color: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub points: Vec<ProjectedPoint>,
    pub subsampled: bool,
    pub config: ProjectionConfig,
}

/// Positions kept when capping at `max_points`; ascending.
pub fn subsample(n: usize, max_points: usize, seed: u64) -> Vec<usize> {
    if n <= max_points {
        return (0..n).collect();
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, n, max_points).into_vec();
    idx.sort_unstable();
    idx
}

/// Maps infinite densities to one below the finite minimum (or one above
/// the finite maximum) so colors stay on a finite scale.
pub fn finite_colors(values: &[f64]) -> Vec<f64> {
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let min = finite.clone().fold(f64::INFINITY, f64::min);
    let max = finite.fold(f64::NEG_INFINITY, f64::max);
    let (min, max) = if min.is_finite() { (min, max) } else { (0.0, 0.0) };
    values
        .iter()
        .map(|&v| {
            if v == f64::NEG_INFINITY {
                min - 1.0
            } else if v == f64::INFINITY {
                max + 1.0
            } else {
                v
            }
        })
        .collect()
}

/// Projects the snapshot's records. Without a model, word vectors come from
/// a vectorizer fitted on the snapshot with default settings.
pub fn layout_records(
    model: Option<&SurrogateModel>,
    snapshot: &CorpusSnapshot,
    config: &ProjectionConfig,
) -> Result<Projection> {
    if config.needs_model() && model.is_none() {
        return Err(Error::InvalidArgument(
            "a trained model is required for this layout or color".into(),
        ));
    }
    let keep = subsample(snapshot.len(), config.max_points.max(1), config.seed);
    let records: Vec<&Record> = keep.iter().map(|&i| &snapshot.records()[i]).collect();
    let texts: Vec<String> = records.iter().map(|r| r.modeling_text()).collect();
    let fitted;
    let vectorizer = match model {
        Some(m) => &m.vectorizer,
        None => {
            let all: Vec<String> = snapshot.records().iter().map(Record::modeling_text).collect();
            let vcfg = VectorizerConfig {
                seed: config.seed,
                ..VectorizerConfig::default()
            };
            fitted = Vectorizer::fit(&all, &vcfg)?.0;
            &fitted
        }
    };
    let matrix: Vec<Vec<f64>> = match (config.layout, model) {
        (Layout::ConfidenceVector, Some(m)) => texts.iter().map(|t| m.predict_text(t).0).collect(),
        _ => texts.iter().map(|t| vectorizer.word_vector(t)).collect(),
    };
    let raw_colors: Vec<f64> = match (config.color, model) {
        (ColorBy::Confidence, Some(m)) => texts
            .iter()
            .map(|t| confidence_score(&m.predict_text(t)).unwrap_or(f64::NAN))
            .collect(),
        _ => {
            let tok = vectorizer.tfidf.tokenizer();
            let ann = snapshot.annotations();
            records
                .iter()
                .zip(&texts)
                .map(|(r, t)| info_density(ann.label_count(&r.id), tok.word_count(t)))
                .collect()
        }
    };
    let colors = finite_colors(&raw_colors);
    let result = tsne(&matrix, &config.tsne(), false)?;
    let points = records
        .iter()
        .zip(result.coords)
        .zip(colors)
        .map(|((r, c), color)| ProjectedPoint {
            id: r.id.clone(),
            x: c[0],
            y: c[1],
            color,
        })
        .collect();
    Ok(Projection {
        points,
        subsampled: keep.len() < snapshot.len(),
        config: config.clone(),
    })
}

/// Even-odd rule point-in-polygon test.
pub fn point_in_polygon(x: f64, y: f64, polygon: &[(f64, f64)]) -> bool {
    let mut inside = false;
    let n = polygon.len();
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = polygon[i];
        let (xj, yj) = polygon[j];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

pub fn select_polygon(projection: &Projection, polygon: &[(f64, f64)]) -> Result<BTreeSet<String>> {
    let distinct: BTreeSet<(u64, u64)> = polygon.iter().map(|(x, y)| (x.to_bits(), y.to_bits())).collect();
    if distinct.len() < 3 || polygon.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::InvalidArgument(
            "polygon needs at least 3 distinct finite vertices".into(),
        ));
    }
    Ok(projection
        .points
        .iter()
        .filter(|p| point_in_polygon(p.x, p.y, polygon))
        .map(|p| p.id.clone())
        .collect())
}
