//! Vector-space similarity (max-TF weighting, cosine) and latent semantic
//! indexing over module documents.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::textgen::TermDoc;

/// Dense term indices.
#[derive(Clone, Debug, Default)]
pub struct Vocabulary<T: Ord = String> {
    terms: Vec<T>,
    index: BTreeMap<T, usize>,
}

impl<T: Ord + Clone> Vocabulary<T> {
    pub fn new() -> Self {
        Vocabulary {
            terms: Vec::new(),
            index: BTreeMap::new(),
        }
    }

    /// Terms of all documents, in order of first appearance.
    pub fn from_docs<'a>(docs: impl IntoIterator<Item = &'a TermDoc<T>>) -> Self
    where
        T: 'a,
    {
        let mut vocab = Self::new();
        for doc in docs {
            for t in doc.terms() {
                vocab.insert(t.clone());
            }
        }
        vocab
    }

    pub fn insert(&mut self, term: T) -> usize {
        if let Some(&i) = self.index.get(&term) {
            return i;
        }
        let i = self.terms.len();
        self.index.insert(term.clone(), i);
        self.terms.push(term);
        i
    }

    pub fn get(&self, term: &T) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, i: usize) -> &T {
        &self.terms[i]
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Raw term frequencies, one row per vocabulary term and one column per
/// module document.
#[derive(Clone, Debug)]
pub struct TermMatrix<T: Ord = String> {
    pub vocabulary: Vocabulary<T>,
    pub matrix: DMatrix<f64>,
}

impl<T: Ord + Clone> TermMatrix<T> {
    pub fn from_docs(docs: &[TermDoc<T>]) -> Self {
        let vocabulary = Vocabulary::from_docs(docs);
        let mut matrix = DMatrix::zeros(vocabulary.len(), docs.len());
        for (j, doc) in docs.iter().enumerate() {
            for (t, n) in doc.iter() {
                matrix[(vocabulary.get(t).expect("term in vocabulary"), j)] = f64::from(n);
            }
        }
        TermMatrix { vocabulary, matrix }
    }
}

/// Term frequencies divided by the document's largest frequency, laid out
/// over `vocab`. Terms outside the vocabulary are ignored.
pub fn tf_maxnorm_vector<T: Ord + Clone>(doc: &TermDoc<T>, vocab: &Vocabulary<T>) -> Vec<f64> {
    let mut v = vec![0.0; vocab.len()];
    for (t, n) in doc.iter() {
        if let Some(i) = vocab.get(t) {
            v[i] = f64::from(n);
        }
    }
    let max = v.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        v.iter_mut().for_each(|x| *x /= max);
    }
    v
}

/// Cosine similarity; zero when either vector is zero.
pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        0.0
    } else {
        dot / (nu * nv)
    }
}

/// Max-TF-weighted module documents prepared for repeated cosine queries.
#[derive(Clone, Debug)]
pub struct IrIndex<T: Ord> {
    docs: Vec<TermDoc<T>>,
    max: Vec<f64>,
    norms: Vec<f64>,
}

impl<T: Ord + Clone> IrIndex<T> {
    pub fn new(docs: Vec<TermDoc<T>>) -> Self {
        let max: Vec<f64> = docs.iter().map(|d| f64::from(d.max_count())).collect();
        let norms = docs
            .iter()
            .zip(&max)
            .map(|(d, &m)| {
                if m == 0.0 {
                    0.0
                } else {
                    d.iter().map(|(_, n)| (f64::from(n) / m).powi(2)).sum::<f64>().sqrt()
                }
            })
            .collect();
        IrIndex { docs, max, norms }
    }

    pub fn module_count(&self) -> usize {
        self.docs.len()
    }

    /// Cosine between the max-TF vectors of `query` and module `m`.
    pub fn similarity(&self, m: usize, query: &TermDoc<T>) -> f64 {
        let qmax = f64::from(query.max_count());
        if qmax == 0.0 || self.norms[m] == 0.0 {
            return 0.0;
        }
        let mut dot = 0.0;
        let mut qnorm = 0.0;
        for (t, n) in query.iter() {
            let q = f64::from(n) / qmax;
            qnorm += q * q;
            dot += q * f64::from(self.docs[m].count(t)) / self.max[m];
        }
        (dot / (qnorm.sqrt() * self.norms[m])).clamp(0.0, 1.0)
    }
}

/// Thin singular value decomposition `A = U diag(s) Vᵀ`, values
/// nonincreasing.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub v: DMatrix<f64>,
}

impl Svd {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.singular_values));
        &self.u * s * self.v.transpose()
    }
}

const SVD_MAX_ITERATIONS: usize = 10_000;

/// Leading `k` singular triplets of `matrix`.
pub fn svd(matrix: &DMatrix<f64>, k: usize) -> Result<Svd> {
    let (rows, cols) = matrix.shape();
    if k > rows.min(cols) {
        return Err(Error::InvalidArgument(format!("rank {k} exceeds matrix shape {rows}x{cols}")));
    }
    if k == 0 {
        return Ok(Svd {
            u: DMatrix::zeros(rows, 0),
            singular_values: Vec::new(),
            v: DMatrix::zeros(cols, 0),
        });
    }
    let decomposition = nalgebra::SVD::try_new(matrix.clone(), true, true, f64::EPSILON, SVD_MAX_ITERATIONS)
        .ok_or(Error::SvdNonConvergence(SVD_MAX_ITERATIONS))?;
    let u = decomposition.u.expect("u requested");
    let v_t = decomposition.v_t.expect("v requested");
    let s = decomposition.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    order.truncate(k);
    Ok(Svd {
        u: DMatrix::from_fn(rows, k, |i, j| u[(i, order[j])]),
        singular_values: order.iter().map(|&j| s[j]).collect(),
        v: DMatrix::from_fn(cols, k, |i, j| v_t[(order[j], i)]),
    })
}

/// Relative cut-off below which singular values count as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

const ZERO_ROW_TOLERANCE: f64 = 1e-9;

/// Reduced latent space of the module term matrix, at rank
/// `min(modules, numerical rank)`.
#[derive(Clone, Debug)]
pub struct LsiIndex<T: Ord> {
    rows: BTreeMap<T, usize>,
    u: DMatrix<f64>,
    sigma: Vec<f64>,
    v: DMatrix<f64>,
    v_norms: Vec<f64>,
}

impl<T: Ord + Clone> LsiIndex<T> {
    pub fn new(docs: &[TermDoc<T>]) -> Result<Self> {
        let tm = TermMatrix::from_docs(docs);
        let full = svd(&tm.matrix, tm.matrix.nrows().min(tm.matrix.ncols()))?;
        let smax = full.singular_values.first().copied().unwrap_or(0.0);
        let rank = full.singular_values.iter().filter(|&&s| s > RANK_TOLERANCE * smax).count();
        let k = rank.min(docs.len());
        let u = full.u.columns(0, k).into_owned();
        let v = full.v.columns(0, k).into_owned();
        // Rows of modules with empty documents lie in the null space and are
        // zero up to round-off.
        let v_norms = (0..v.nrows())
            .map(|i| v.row(i).norm())
            .map(|n| if n < ZERO_ROW_TOLERANCE { 0.0 } else { n })
            .collect();
        let rows = (0..tm.vocabulary.len()).map(|i| (tm.vocabulary.term(i).clone(), i)).collect();
        Ok(LsiIndex {
            rows,
            u,
            sigma: full.singular_values[..k].to_vec(),
            v,
            v_norms,
        })
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Projects a raw-TF query into the latent space: `Σ⁻¹ Uᵀ q`.
    pub fn fold_in(&self, query: &TermDoc<T>) -> Vec<f64> {
        let mut q = vec![0.0; self.rank()];
        for (t, n) in query.iter() {
            if let Some(&row) = self.rows.get(t) {
                for (j, x) in q.iter_mut().enumerate() {
                    *x += self.u[(row, j)] * f64::from(n);
                }
            }
        }
        q.iter_mut().zip(&self.sigma).for_each(|(x, s)| *x /= s);
        q
    }

    /// Cosine between a folded query and the latent vector of module `m`.
    pub fn similarity(&self, m: usize, folded: &[f64]) -> f64 {
        let qn = folded.iter().map(|x| x * x).sum::<f64>().sqrt();
        if qn == 0.0 || self.v_norms[m] == 0.0 {
            return 0.0;
        }
        let dot: f64 = folded.iter().enumerate().map(|(j, x)| x * self.v[(m, j)]).sum();
        dot / (qn * self.v_norms[m])
    }
}
