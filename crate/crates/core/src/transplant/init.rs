use ndarray::{Array1, Array2};
use rand::distr::{Distribution, Uniform};
use rand_distr::StandardNormal;

use super::{finish, scaffold, EmbeddingMatrix, Initialized, Provenance, VocabAlignment};
use crate::seed;
use crate::tokenizer::tokenize_vocab_entry;
use crate::{Error, Result};

/// Per-dimension mean and population standard deviation of source rows.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionFit {
    pub mu: Array1<f64>,
    pub sigma: Array1<f64>,
}

pub fn fit_distribution(src: &EmbeddingMatrix) -> Result<DistributionFit> {
    let rows = src.rows();
    if rows.nrows() < 2 {
        return Err(Error::Argument(format!(
            "distribution fit needs at least 2 rows, got {}",
            rows.nrows()
        )));
    }
    // Welford's update, one pass over the rows.
    let dim = rows.ncols();
    let mut mean = Array1::<f64>::zeros(dim);
    let mut m2 = Array1::<f64>::zeros(dim);
    for (i, row) in rows.outer_iter().enumerate() {
        let n = (i + 1) as f64;
        for d in 0..dim {
            let delta = row[d] - mean[d];
            mean[d] += delta / n;
            m2[d] += delta * (row[d] - mean[d]);
        }
    }
    let n = rows.nrows() as f64;
    let sigma = m2.mapv(|v| (v / n).max(0.0).sqrt());
    Ok(DistributionFit { mu: mean, sigma })
}

/// New rows drawn i.i.d. from `U[lo, hi)`, row-major in target-ID order.
pub fn init_uniform(align: &VocabAlignment, src: &EmbeddingMatrix, seed: u64, lo: f64, hi: f64) -> Result<Initialized> {
    let dist =
        Uniform::new(lo, hi).map_err(|e| Error::Argument(format!("invalid uniform bounds [{lo}, {hi}): {e}")))?;
    let (mut rows, mut provenance) = scaffold(align, src);
    let mut rng = seed::rng(seed);
    for (id, prov) in provenance.iter_mut().enumerate() {
        if prov.is_none() {
            rows.row_mut(id).iter_mut().for_each(|v| *v = dist.sample(&mut rng));
            *prov = Some(Provenance::Sampled);
        }
    }
    finish(align, rows, provenance, 0)
}

/// New entries drawn from `N(mu[d], sigma[d])` fitted on the source rows.
pub fn init_normal(align: &VocabAlignment, src: &EmbeddingMatrix, seed: u64) -> Result<Initialized> {
    let fit = fit_distribution(src)?;
    let (mut rows, mut provenance) = scaffold(align, src);
    let mut rng = seed::rng(seed);
    for (id, prov) in provenance.iter_mut().enumerate() {
        if prov.is_none() {
            for (d, v) in rows.row_mut(id).iter_mut().enumerate() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v = fit.mu[d] + fit.sigma[d] * z;
            }
            *prov = Some(Provenance::Sampled);
        }
    }
    finish(align, rows, provenance, 0)
}

/// Each new type gets the mean source row of its pieces under the source
/// tokenizer, or the source `[UNK]` row when it cannot be segmented.
pub fn init_subword_average(align: &VocabAlignment, src: &EmbeddingMatrix) -> Result<Initialized> {
    let (mut rows, mut provenance) = scaffold(align, src);
    for (id, prov) in provenance.iter_mut().enumerate() {
        if prov.is_none() {
            let token = &align.target().tokens()[id];
            *prov = Some(average_into(&mut rows, id, token, src)?);
        }
    }
    finish(align, rows, provenance, 0)
}

pub(crate) fn average_into(
    rows: &mut Array2<f64>,
    id: usize,
    token: &str,
    src: &EmbeddingMatrix,
) -> Result<Provenance> {
    let source_vocab = src.vocab();
    let pieces = tokenize_vocab_entry(token, source_vocab)?;
    let mut out = rows.row_mut(id);
    if pieces.is_unk {
        out.assign(&src.rows().row(source_vocab.unk_id()));
        return Ok(Provenance::UnkFallback);
    }
    out.fill(0.0);
    for piece in &pieces.pieces {
        let sid = source_vocab.id(piece).expect("pieces are source tokens");
        out += &src.rows().row(sid);
    }
    out /= pieces.len() as f64;
    Ok(Provenance::Averaged)
}
