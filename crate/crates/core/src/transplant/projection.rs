//! Least-squares projection from skipgram space into the source embedding
//! space, fitted on shared types.

use ndarray::{Array2, ArrayView2};

use super::init::average_into;
use super::{finish, scaffold, EmbeddingMatrix, Initialized, Provenance, VocabAlignment};
use crate::linalg::solve_spd;
use crate::vectors::WordVectors;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionModel {
    /// `dim(vectors) × dim(source)`.
    pub weights: Array2<f64>,
    /// `‖F W − B‖²` over the fit set.
    pub residual: f64,
    pub ridge: f64,
    pub n_fit: usize,
    /// Shared tokens skipped because the vectors lack them.
    pub n_skipped: usize,
}

/// Squared Frobenius norm of `F W − B`.
pub fn residual(features: ArrayView2<f64>, weights: ArrayView2<f64>, targets: ArrayView2<f64>) -> f64 {
    let diff = features.dot(&weights) - targets;
    diff.iter().map(|v| v * v).sum()
}

/// Solves `(FᵀF + ridge·I) W = FᵀB` by Cholesky factorization.
pub fn solve_normal_equations(features: ArrayView2<f64>, targets: ArrayView2<f64>, ridge: f64) -> Result<Array2<f64>> {
    let mut gram = features.t().dot(&features);
    for i in 0..gram.nrows() {
        gram[[i, i]] += ridge;
    }
    let rhs = features.t().dot(&targets);
    solve_spd(gram.view(), rhs.view()).map_err(|e| match e {
        Error::Solver(msg) if ridge == 0.0 => Error::Solver(format!(
            "{msg}; the normal equations are singular, use a positive ridge"
        )),
        other => other,
    })
}

pub fn fit_projection<S: AsRef<str>>(
    vectors: &WordVectors,
    src: &EmbeddingMatrix,
    shared: &[S],
    ridge: f64,
) -> Result<ProjectionModel> {
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::Argument(format!("ridge must be non-negative, got {ridge}")));
    }
    let mut fit_set = Vec::new();
    let mut n_skipped = 0;
    for token in shared {
        let token = token.as_ref();
        match (vectors.word_index(token), src.vocab().id(token)) {
            (Some(v), Some(s)) => fit_set.push((v, s)),
            (None, Some(_)) => n_skipped += 1,
            (_, None) => {
                return Err(Error::Fit(format!(
                    "shared token {token:?} missing from the source matrix"
                )));
            }
        }
    }
    if fit_set.is_empty() {
        return Err(Error::Fit(format!(
            "no shared token has a vector ({n_skipped} skipped)"
        )));
    }
    if fit_set.len() < vectors.dim() {
        log::warn!(
            "projection fit set has {} tokens for {} input dimensions; the system is underdetermined without ridge",
            fit_set.len(),
            vectors.dim()
        );
    }

    let mut features = Array2::zeros((fit_set.len(), vectors.dim()));
    let mut targets = Array2::zeros((fit_set.len(), src.dim()));
    for (i, &(v, s)) in fit_set.iter().enumerate() {
        features.row_mut(i).assign(&vectors.embedding_at(v));
        targets.row_mut(i).assign(&src.rows().row(s));
    }
    let weights = solve_normal_equations(features.view(), targets.view(), ridge)?;
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Solver("projection weights are not finite".into()));
    }
    let residual = residual(features.view(), weights.view(), targets.view());
    log::info!(
        "fitted projection on {} shared types ({} without vectors), residual {residual:.6e}",
        fit_set.len(),
        n_skipped
    );
    Ok(ProjectionModel {
        weights,
        residual,
        ridge,
        n_fit: fit_set.len(),
        n_skipped,
    })
}

/// New types with a vector are projected; the others fall back to subword
/// averaging and are counted in `fallback_count`.
pub fn init_projection(
    align: &VocabAlignment,
    src: &EmbeddingMatrix,
    vectors: &WordVectors,
    model: &ProjectionModel,
) -> Result<Initialized> {
    let (in_dim, out_dim) = model.weights.dim();
    if in_dim != vectors.dim() || out_dim != src.dim() {
        return Err(Error::Argument(format!(
            "projection is {in_dim}x{out_dim} but vectors have dim {} and the source matrix dim {}",
            vectors.dim(),
            src.dim()
        )));
    }
    let (mut rows, mut provenance) = scaffold(align, src);
    let mut fallback_count = 0;
    for (id, prov) in provenance.iter_mut().enumerate() {
        if prov.is_some() {
            continue;
        }
        let token = &align.target().tokens()[id];
        match vectors.embedding(token) {
            Some(vector) => {
                rows.row_mut(id).assign(&vector.dot(&model.weights));
                *prov = Some(Provenance::Projected);
            }
            None => {
                fallback_count += 1;
                *prov = Some(average_into(&mut rows, id, token, src)?);
            }
        }
    }
    if fallback_count > 0 {
        log::info!("{fallback_count} new types without vectors fell back to subword averaging");
    }
    finish(align, rows, provenance, fallback_count)
}

#[cfg(test)]
mod tests {
    use ndarray::{array, Array2};

    use super::*;
    use crate::tokenizer::{Vocabulary, DEFAULT_SPECIALS};
    use crate::transplant::align_vocabs;

    fn vocab(extra: &[&str]) -> Vocabulary {
        let tokens = DEFAULT_SPECIALS.iter().chain(extra).map(|t| t.to_string()).collect();
        Vocabulary::new(tokens).unwrap()
    }

    #[test]
    fn square_self_projection_is_identity() {
        let v = vocab(&[]);
        let f = array![
            [2.0, 0.0, 1.0],
            [0.0, 1.0, 0.0],
            [1.0, 0.0, 3.0],
            [0.5, 0.5, 0.5],
            [1.0, 2.0, 3.0]
        ];
        let src = EmbeddingMatrix::new(v.clone(), f.clone()).unwrap();
        let vectors = WordVectors::new(v.tokens().to_vec(), f).unwrap();
        let model = fit_projection(&vectors, &src, v.tokens(), 0.0).unwrap();
        let eye = Array2::<f64>::eye(3);
        assert!((&model.weights - &eye).iter().all(|d| d.abs() < 1e-8));
        assert!(model.residual < 1e-20);
    }

    #[test]
    fn singular_system_suggests_ridge() {
        let v = vocab(&[]);
        let src = EmbeddingMatrix::new(v.clone(), Array2::ones((5, 2))).unwrap();
        let vectors = WordVectors::new(v.tokens().to_vec(), Array2::zeros((5, 3))).unwrap();
        let err = fit_projection(&vectors, &src, v.tokens(), 0.0).unwrap_err();
        assert!(err.to_string().contains("ridge"), "{err}");
        let model = fit_projection(&vectors, &src, v.tokens(), 1e-8).unwrap();
        assert!(model.weights.iter().all(|w| w.abs() < 1e-12));
    }

    #[test]
    fn empty_fit_set() {
        let v = vocab(&[]);
        let src = EmbeddingMatrix::new(v.clone(), Array2::ones((5, 2))).unwrap();
        let vectors = WordVectors::new(vec!["other".into()], array![[1.0]]).unwrap();
        assert!(matches!(
            fit_projection(&vectors, &src, v.tokens(), 0.0),
            Err(Error::Fit(_))
        ));
        assert!(fit_projection(&vectors, &src, v.tokens(), -1.0).is_err());
    }

    #[test]
    fn projection_rows_and_fallback() {
        let sv = vocab(&["a", "##b"]);
        let src_rows = Array2::from_shape_fn((sv.len(), 2), |(i, j)| (i + j) as f64);
        let src = EmbeddingMatrix::new(sv.clone(), src_rows).unwrap();
        let align = align_vocabs(&sv, &vocab(&["a", "ab", "zero", "abb", "q"]));

        let vectors = WordVectors::new(
            vec!["ab".into(), "zero".into(), "a".into()],
            array![[1.0, 2.0, 3.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
        )
        .unwrap();
        let model = ProjectionModel {
            weights: array![[1.0, -1.0], [0.5, 2.0], [0.0, 1.0]],
            residual: 0.0,
            ridge: 0.0,
            n_fit: 1,
            n_skipped: 0,
        };
        let out = init_projection(&align, &src, &vectors, &model).unwrap();
        let rows = out.matrix.rows();
        assert_eq!(rows.row(6), array![2.0, 6.0]);
        assert_eq!(rows.row(7), array![0.0, 0.0]);
        // abb -> a ##b ##b averaged; q is UNK under the source vocabulary.
        let expected = (&src.row("a").unwrap() + &src.row("##b").unwrap() * 2.0) / 3.0;
        assert_eq!(rows.row(8), expected);
        assert_eq!(rows.row(9), src.row("[UNK]").unwrap());
        assert_eq!(out.fallback_count, 2);
        assert_eq!(
            &out.provenance[5..],
            [
                Provenance::Copied,
                Provenance::Projected,
                Provenance::Projected,
                Provenance::Averaged,
                Provenance::UnkFallback
            ]
        );

        let wrong = ProjectionModel {
            weights: Array2::zeros((2, 2)),
            ..model
        };
        assert!(matches!(
            init_projection(&align, &src, &vectors, &wrong),
            Err(Error::Argument(_))
        ));
    }
}
