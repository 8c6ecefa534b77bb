//! Neural tensor layer triple scorer and tail-ranking link prediction.
//!
//! For relation parameters `(W, V, b)` with `k` slices over `d`-dimensional
//! entity vectors, slice `i` of the score vector is
//!
//! ```text
//! tanh( hᵀ W[i] t + V[i] · [h; t] + b[i] )
//! ```
//!
//! and the raw scalar score is the sum over slices. The raw score is treated
//! as high for false triples; ranking and training use the negated raw score
//! (plausibility), so the most plausible tail always sorts first.

mod train;

use indexmap::IndexMap;
use rand::Rng;

use crate::embeddings::WordVectorTable;
use crate::error::{Error, Result};
use crate::kb::{KnowledgeBase, Triple};
use crate::nn::gradcheck::{grad_check, Coordinates, GradCheckReport, Objective};
use crate::nn::Tensor;

pub use train::{train_ntl, NtlConfig, NtlTrainReport};

pub const DEFAULT_SLICES: usize = 4;
pub const INIT_RANGE: f64 = 0.1;

/// Per-relation parameters: `w` is `[k, d, d]` (slice-major), `v` is
/// `[k, 2d]`, `b` is `[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NtlRelationParams {
    pub w: Tensor,
    pub v: Tensor,
    pub b: Tensor,
}

/// Gradients of the raw scalar score.
#[derive(Debug, Clone, PartialEq)]
pub struct NtlGradients {
    pub w: Tensor,
    pub v: Tensor,
    pub b: Tensor,
    pub head: Vec<f64>,
    pub tail: Vec<f64>,
}

impl NtlRelationParams {
    pub fn zeros(d: usize, k: usize) -> Self {
        NtlRelationParams {
            w: Tensor::zeros(&[k, d, d]),
            v: Tensor::zeros(&[k, 2 * d]),
            b: Tensor::zeros(&[k]),
        }
    }

    /// All entries i.i.d. uniform in `[-range, range]`, drawn W, then V, then b.
    pub fn random(d: usize, k: usize, range: f64, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(d, k);
        for t in [&mut p.w, &mut p.v, &mut p.b] {
            t.data_mut()
                .iter_mut()
                .for_each(|x| *x = rng.random_range(-range..=range));
        }
        p
    }

    pub fn from_parts(w: Tensor, v: Tensor, b: Tensor) -> Result<Self> {
        let p = NtlRelationParams { w, v, b };
        p.dims()?;
        if !(p.w.is_finite() && p.v.is_finite() && p.b.is_finite()) {
            return Err(Error::NonFinite("relation parameters"));
        }
        Ok(p)
    }

    /// `(d, k)` after checking the three shapes agree.
    pub fn dims(&self) -> Result<(usize, usize)> {
        let [k, d, d2] = self.w.shape() else {
            return Err(Error::shape("W must be [k, d, d]"));
        };
        if d != d2 || self.v.shape() != [*k, 2 * d] || self.b.shape() != [*k] {
            return Err(Error::shape(format!(
                "inconsistent NTL shapes W{:?} V{:?} b{:?}",
                self.w.shape(),
                self.v.shape(),
                self.b.shape()
            )));
        }
        Ok((*d, *k))
    }

    pub fn tensors(&self) -> [&Tensor; 3] {
        [&self.w, &self.v, &self.b]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor; 3] {
        [&mut self.w, &mut self.v, &mut self.b]
    }

    fn check_inputs(&self, h: &[f64], t: &[f64]) -> Result<(usize, usize)> {
        let (d, k) = self.dims()?;
        if h.len() != d || t.len() != d {
            return Err(Error::shape(format!(
                "entity vectors of length {}/{} for d = {d}",
                h.len(),
                t.len()
            )));
        }
        if !h.iter().chain(t).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("entity vector"));
        }
        Ok((d, k))
    }

    /// Pre-activations `hᵀ W[i] t + V[i]·[h;t] + b[i]`.
    fn pre_activations(&self, h: &[f64], t: &[f64], d: usize, k: usize) -> Vec<f64> {
        let w = self.w.data();
        let v = self.v.data();
        (0..k)
            .map(|i| {
                let slice = &w[i * d * d..(i + 1) * d * d];
                let bilinear: f64 = h
                    .iter()
                    .enumerate()
                    .map(|(r, hr)| hr * slice[r * d..(r + 1) * d].iter().zip(t).map(|(a, b)| a * b).sum::<f64>())
                    .sum();
                let vrow = &v[i * 2 * d..(i + 1) * 2 * d];
                let linear: f64 = vrow[..d].iter().zip(h).map(|(a, b)| a * b).sum::<f64>()
                    + vrow[d..].iter().zip(t).map(|(a, b)| a * b).sum::<f64>();
                bilinear + linear + self.b.data()[i]
            })
            .collect()
    }

    /// The k-component tanh score vector.
    pub fn score_vector(&self, h: &[f64], t: &[f64]) -> Result<Vec<f64>> {
        let (d, k) = self.check_inputs(h, t)?;
        Ok(self.pre_activations(h, t, d, k).into_iter().map(f64::tanh).collect())
    }

    /// Raw scalar score: the sum of the score vector.
    pub fn score(&self, h: &[f64], t: &[f64]) -> Result<f64> {
        Ok(self.score_vector(h, t)?.iter().sum())
    }

    pub fn gradients(&self, h: &[f64], t: &[f64]) -> Result<NtlGradients> {
        let (d, k) = self.check_inputs(h, t)?;
        let pre = self.pre_activations(h, t, d, k);
        let w = self.w.data();
        let v = self.v.data();
        let mut g = NtlGradients {
            w: Tensor::zeros(&[k, d, d]),
            v: Tensor::zeros(&[k, 2 * d]),
            b: Tensor::zeros(&[k]),
            head: vec![0.0; d],
            tail: vec![0.0; d],
        };
        for (i, z) in pre.iter().enumerate() {
            let c = z.tanh();
            let s = 1.0 - c * c;
            g.b.data_mut()[i] = s;
            let gv = &mut g.v.data_mut()[i * 2 * d..(i + 1) * 2 * d];
            for r in 0..d {
                gv[r] = s * h[r];
                gv[d + r] = s * t[r];
            }
            let slice = &w[i * d * d..(i + 1) * d * d];
            let gw = &mut g.w.data_mut()[i * d * d..(i + 1) * d * d];
            let vrow = &v[i * 2 * d..(i + 1) * 2 * d];
            for r in 0..d {
                let row = &slice[r * d..(r + 1) * d];
                let mut wt = 0.0;
                for col in 0..d {
                    gw[r * d + col] = s * h[r] * t[col];
                    wt += row[col] * t[col];
                    // (Wᵀ h)[col] accumulates across rows.
                    g.tail[col] += s * row[col] * h[r];
                }
                g.head[r] += s * (wt + vrow[r]);
            }
            for col in 0..d {
                g.tail[col] += s * vrow[d + col];
            }
        }
        Ok(g)
    }

    /// Finite-difference check of [`Self::gradients`] over W, V, b, h and t.
    pub fn grad_check(&self, h: &[f64], t: &[f64], step: f64, coords: Coordinates) -> Result<GradCheckReport> {
        self.check_inputs(h, t)?;
        let mut obj = ScoreObjective {
            tensors: vec![
                self.w.clone(),
                self.v.clone(),
                self.b.clone(),
                Tensor::vector(h.to_vec()),
                Tensor::vector(t.to_vec()),
            ],
        };
        grad_check(&mut obj, step, coords)
    }
}

struct ScoreObjective {
    tensors: Vec<Tensor>,
}

impl ScoreObjective {
    fn split(&self) -> NtlRelationParams {
        NtlRelationParams {
            w: self.tensors[0].clone(),
            v: self.tensors[1].clone(),
            b: self.tensors[2].clone(),
        }
    }
}

impl Objective for ScoreObjective {
    fn params(&self) -> Vec<&Tensor> {
        self.tensors.iter().collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.tensors.iter_mut().collect()
    }

    fn value(&self) -> Result<(f64, u64)> {
        let s = self.split().score(self.tensors[3].data(), self.tensors[4].data())?;
        Ok((s, 0))
    }

    fn gradient(&self) -> Result<Vec<Tensor>> {
        let g = self.split().gradients(self.tensors[3].data(), self.tensors[4].data())?;
        Ok(vec![g.w, g.v, g.b, Tensor::vector(g.head), Tensor::vector(g.tail)])
    }
}

/// Plausibility used for ranking and the hinge loss: the negated raw score.
pub fn plausibility(raw_score: f64) -> f64 {
    -raw_score
}

/// Looks up a vector for every KB entity, in KB order.
pub fn entity_vectors(kb: &KnowledgeBase, table: &WordVectorTable) -> Result<IndexMap<String, Vec<f64>>> {
    kb.entities()
        .map(|e| Ok((e.to_string(), table.embed_entity(e)?.vector)))
        .collect()
}

/// Frozen entity vectors plus per-relation tensor-layer parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NtlModel {
    d: usize,
    k: usize,
    relations: IndexMap<String, NtlRelationParams>,
    entities: IndexMap<String, Vec<f64>>,
}

impl NtlModel {
    pub fn new(
        relations: IndexMap<String, NtlRelationParams>,
        entities: IndexMap<String, Vec<f64>>,
        d: usize,
        k: usize,
    ) -> Result<Self> {
        for (label, p) in &relations {
            if p.dims()? != (d, k) {
                return Err(Error::shape(format!("relation `{label}` is not d={d}, k={k}")));
            }
        }
        for (label, v) in &entities {
            if v.len() != d {
                return Err(Error::shape(format!(
                    "entity `{label}` vector length {} != {d}",
                    v.len()
                )));
            }
            if !v.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFinite("entity vector"));
            }
        }
        Ok(NtlModel {
            d,
            k,
            relations,
            entities,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn slices(&self) -> usize {
        self.k
    }

    pub fn relations(&self) -> &IndexMap<String, NtlRelationParams> {
        &self.relations
    }

    pub fn entities(&self) -> &IndexMap<String, Vec<f64>> {
        &self.entities
    }

    pub(crate) fn relations_mut(&mut self) -> &mut IndexMap<String, NtlRelationParams> {
        &mut self.relations
    }

    fn relation(&self, label: &str) -> Result<&NtlRelationParams> {
        self.relations.get(label).ok_or_else(|| Error::UnknownLabel {
            kind: "relation",
            label: label.to_string(),
        })
    }

    fn entity(&self, label: &str) -> Result<&[f64]> {
        self.entities
            .get(label)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownLabel {
                kind: "entity",
                label: label.to_string(),
            })
    }

    pub fn raw_score(&self, head: &str, relation: &str, tail: &str) -> Result<f64> {
        self.relation(relation)?.score(self.entity(head)?, self.entity(tail)?)
    }

    pub fn plausibility(&self, head: &str, relation: &str, tail: &str) -> Result<f64> {
        self.raw_score(head, relation, tail).map(plausibility)
    }

    /// Every entity as a candidate tail, most plausible first. Equal scores
    /// keep entity order.
    pub fn rank_tails(&self, head: &str, relation: &str) -> Result<Vec<(String, f64)>> {
        let params = self.relation(relation)?;
        let h = self.entity(head)?;
        let mut ranked = self
            .entities
            .iter()
            .map(|(label, t)| Ok((label.clone(), plausibility(params.score(h, t)?))))
            .collect::<Result<Vec<_>>>()?;
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
        Ok(ranked)
    }

    /// Fraction of `test` triples whose true tail is in the top `n` tails.
    pub fn hits_at_n<'a>(&self, test: impl IntoIterator<Item = &'a Triple>, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::invalid("hits@n needs n >= 1"));
        }
        let mut total = 0usize;
        let mut hits = 0usize;
        for t in test {
            self.entity(&t.tail)?;
            let ranked = self.rank_tails(&t.head, &t.relation)?;
            if ranked.iter().take(n).any(|(e, _)| *e == t.tail) {
                hits += 1;
            }
            total += 1;
        }
        if total == 0 {
            return Err(Error::Empty("test triple set"));
        }
        Ok(hits as f64 / total as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::relative_error;
    use crate::rng::{self, Purpose};

    fn params(d: usize, k: usize, w: &[f64], v: &[f64], b: &[f64]) -> NtlRelationParams {
        NtlRelationParams::from_parts(
            Tensor::from_vec(&[k, d, d], w.to_vec()).unwrap(),
            Tensor::from_vec(&[k, 2 * d], v.to_vec()).unwrap(),
            Tensor::from_vec(&[k], b.to_vec()).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_entities_give_tanh_bias() {
        let mut rng = rng::stream(1, Purpose::Synthetic, 0);
        let mut p = NtlRelationParams::random(3, 2, 1.0, &mut rng);
        p.b = Tensor::vector(vec![0.3, -0.7]);
        let s = p.score_vector(&[0.0; 3], &[0.0; 3]).unwrap();
        assert_eq!(s, [0.3f64.tanh(), (-0.7f64).tanh()]);
        p.b.fill(0.0);
        assert_eq!(p.score_vector(&[0.0; 3], &[0.0; 3]).unwrap(), [0.0, 0.0]);
        assert_eq!(p.score(&[0.0; 3], &[0.0; 3]).unwrap(), 0.0);
    }

    #[test]
    fn scalar_case() {
        let p = params(1, 1, &[1.0], &[0.0, 0.0], &[0.0]);
        let s = p.score_vector(&[0.5], &[0.5]).unwrap();
        assert!((s[0] - 0.25f64.tanh()).abs() < 1e-15);
        assert!((s[0] - 0.244919).abs() < 1e-6);
        assert_eq!(p.score(&[0.5], &[0.5]).unwrap(), s[0]);
    }

    #[test]
    fn two_by_two_case() {
        let p = params(2, 1, &[0.0, 1.0, 0.0, 0.0], &[0.0; 4], &[0.0]);
        let s = p.score_vector(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((s[0] - 1f64.tanh()).abs() < 1e-15);
        assert!((s[0] - 0.761594).abs() < 1e-6);
        // bilinear form is not symmetric
        assert_eq!(p.score_vector(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), [0.0]);
    }

    #[test]
    fn two_slices_sum() {
        let mut rng = rng::stream(2, Purpose::Synthetic, 0);
        let p = NtlRelationParams::random(3, 2, 1.0, &mut rng);
        let h = [0.1, -0.4, 0.9];
        let t = [0.5, 0.2, -0.3];
        let c = p.score_vector(&h, &t).unwrap();
        assert_eq!(p.score(&h, &t).unwrap(), c[0] + c[1]);
    }

    #[test]
    fn shape_and_finiteness_errors() {
        let p = NtlRelationParams::zeros(2, 1);
        assert!(matches!(p.score(&[0.0], &[0.0, 0.0]), Err(Error::Shape(_))));
        assert!(matches!(
            p.score(&[f64::NAN, 0.0], &[0.0, 0.0]),
            Err(Error::NonFinite(_))
        ));
        assert!(
            NtlRelationParams::from_parts(Tensor::zeros(&[1, 2, 2]), Tensor::zeros(&[1, 3]), Tensor::zeros(&[1]))
                .is_err()
        );
    }

    #[test]
    fn gradient_closed_forms() {
        // h = t = 0: db_i = 1 - tanh²(b_i), dW = 0
        let mut rng = rng::stream(3, Purpose::Synthetic, 0);
        let mut p = NtlRelationParams::random(2, 2, 1.0, &mut rng);
        p.b = Tensor::vector(vec![0.4, -1.1]);
        let g = p.gradients(&[0.0; 2], &[0.0; 2]).unwrap();
        for (gb, b) in g.b.data().iter().zip([0.4f64, -1.1]) {
            assert!((gb - (1.0 - b.tanh().powi(2))).abs() < 1e-15);
        }
        assert!(g.w.data().iter().all(|v| *v == 0.0));

        let p = params(1, 1, &[1.0], &[0.0, 0.0], &[0.0]);
        let g = p.gradients(&[0.5], &[0.5]).unwrap();
        let expected = (1.0 - 0.25f64.tanh().powi(2)) * 0.25;
        assert!((g.w.data()[0] - expected).abs() < 1e-15);
    }

    /// Central differences on the raw score, written independently of
    /// `grad_check`.
    fn numeric_head_grad(p: &NtlRelationParams, h: &[f64], t: &[f64]) -> Vec<f64> {
        let eps = 1e-6;
        (0..h.len())
            .map(|i| {
                let mut hp = h.to_vec();
                let mut hm = h.to_vec();
                hp[i] += eps;
                hm[i] -= eps;
                (p.score(&hp, t).unwrap() - p.score(&hm, t).unwrap()) / (2.0 * eps)
            })
            .collect()
    }

    #[test]
    fn head_gradient_with_zero_v() {
        let mut rng = rng::stream(4, Purpose::Synthetic, 0);
        let mut p = NtlRelationParams::random(3, 1, 1.0, &mut rng);
        p.v.fill(0.0);
        p.b.fill(0.0);
        let h = [0.2, -0.5, 0.7];
        let t = [-0.3, 0.8, 0.1];
        let g = p.gradients(&h, &t).unwrap();
        let z = p.score(&h, &t).unwrap().atanh();
        let w = p.w.data();
        for r in 0..3 {
            let wt: f64 = (0..3).map(|c| w[r * 3 + c] * t[c]).sum();
            assert!((g.head[r] - (1.0 - z.tanh().powi(2)) * wt).abs() < 1e-12);
        }
        for (a, n) in g.head.iter().zip(numeric_head_grad(&p, &h, &t)) {
            assert!(relative_error(*a, n) <= 1e-5);
        }
    }

    #[test]
    fn random_gradients_match_finite_differences() {
        for draw in 0..100u64 {
            let mut rng = rng::stream(draw, Purpose::GradCheck, 0);
            let d = rng.random_range(1..6);
            let k = rng.random_range(1..5);
            let p = NtlRelationParams::random(d, k, 1.0, &mut rng);
            let h: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let t: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r = p.grad_check(&h, &t, 1e-6, Coordinates::All).unwrap();
            assert!(r.max_rel_error <= 1e-5, "draw {draw}: {r:?}");
            assert_eq!(r.skipped_kinks, 0);
        }
    }

    fn uniform_model(n_entities: usize) -> NtlModel {
        let entities = (0..n_entities).map(|i| (format!("e{i}"), vec![0.5, -0.5])).collect();
        let mut relations = IndexMap::new();
        let mut rng = rng::stream(5, Purpose::Synthetic, 0);
        relations.insert("r".to_string(), NtlRelationParams::random(2, 2, 0.1, &mut rng));
        NtlModel::new(relations, entities, 2, 2).unwrap()
    }

    #[test]
    fn ties_rank_in_entity_order() {
        let m = uniform_model(4);
        let ranked = m.rank_tails("e2", "r").unwrap();
        let names: Vec<_> = ranked.iter().map(|(e, _)| e.as_str()).collect();
        assert_eq!(names, ["e0", "e1", "e2", "e3"]);
        assert!(ranked.windows(2).all(|w| w[0].1 == w[1].1));
    }

    #[test]
    fn single_entity_ranks_first() {
        let m = uniform_model(1);
        assert_eq!(m.rank_tails("e0", "r").unwrap().len(), 1);
    }

    #[test]
    fn ranking_errors_and_hits() {
        let m = uniform_model(3);
        assert!(matches!(m.rank_tails("zz", "r"), Err(Error::UnknownLabel { .. })));
        assert!(matches!(m.rank_tails("e0", "zz"), Err(Error::UnknownLabel { .. })));
        let test = [Triple::new("e0", "r", "e2"), Triple::new("e1", "r", "e1")];
        assert_eq!(m.hits_at_n(&test, 3).unwrap(), 1.0);
        assert_eq!(m.hits_at_n(&test, 1).unwrap(), 0.0);
        assert!(m.hits_at_n(&[], 1).is_err());
        assert!(m.hits_at_n(&test, 0).is_err());
        assert!(m.hits_at_n(&[Triple::new("e0", "r", "nope")], 1).is_err());
    }

    #[test]
    fn scores_are_bounded() {
        let mut rng = rng::stream(6, Purpose::Synthetic, 0);
        for _ in 0..200 {
            let p = NtlRelationParams::random(3, 3, 5.0, &mut rng);
            let h: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..5.0)).collect();
            let t: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..5.0)).collect();
            let c = p.score_vector(&h, &t).unwrap();
            assert!(c.iter().all(|v| v.abs() <= 1.0));
            assert!(p.score(&h, &t).unwrap().abs() <= 3.0);
            // zero head removes the bilinear term
            let zero = [0.0; 3];
            let expected: Vec<f64> = (0..3)
                .map(|i| {
                    let vrow = &p.v.data()[i * 6..(i + 1) * 6];
                    (vrow[3..].iter().zip(&t).map(|(a, b)| a * b).sum::<f64>() + p.b.data()[i]).tanh()
                })
                .collect();
            let got = p.score_vector(&zero, &t).unwrap();
            for (a, b) in got.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
