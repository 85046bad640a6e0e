//! Term vectors, cosine similarity and the synthetic content workload.
//!
//! The workload stands in for a real file-sharing corpus: documents are
//! short bags of terms drawn from topic-specific Zipf distributions, queries
//! are built from the top terms of a popularity-weighted seed document, and
//! ground-truth relevance is computed exhaustively with the same match rule
//! peers apply locally.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::derive_stream;
use crate::error::ContentError;
use crate::ids::{DocId, PeerId, QueryId};

/// Sparse non-negative term weights, sorted by term id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TermVector {
    entries: Vec<(u32, f64)>,
}

impl TermVector {
    /// Builds a vector from `(term, weight)` pairs. Duplicate terms are
    /// summed; zero weights are dropped. Negative weights are rejected.
    pub fn new(pairs: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        for (term, w) in pairs {
            assert!(w >= 0.0 && w.is_finite(), "term weight must be finite and >= 0");
            *acc.entry(term).or_default() += w;
        }
        Self {
            entries: acc.into_iter().filter(|&(_, w)| w > 0.0).collect(),
        }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn weight(&self, term: u32) -> f64 {
        self.entries
            .binary_search_by_key(&term, |&(t, _)| t)
            .map_or(0.0, |i| self.entries[i].1)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(self.entries.iter().map(|&(t, w)| (t, w * c)))
    }

    fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum()
    }

    fn dot(&self, other: &Self) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

pub fn cosine(a: &TermVector, b: &TermVector) -> Result<f64, ContentError> {
    if a.is_empty() || b.is_empty() {
        return Err(ContentError::EmptyVector);
    }
    let sim = a.dot(b) / (a.norm_sq() * b.norm_sq()).sqrt();
    Ok(sim.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: DocId,
    pub topic: u32,
    pub terms: TermVector,
}

/// Local hit rule: a document answers a query when their cosine reaches
/// `threshold`.
pub fn matches(doc: &Document, q: &TermVector, threshold: f64) -> bool {
    cosine(&doc.terms, q).is_ok_and(|c| c >= threshold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub query_id: QueryId,
    pub terms: TermVector,
    pub origin: PeerId,
    pub issue_time: f64,
    pub seed_doc: DocId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Each replica goes to a uniformly chosen peer.
    Uniform,
    /// Each peer is interested in a few topics and holds replicas of
    /// documents from those topics.
    Interest,
    /// Each peer shares its own library of `library_size` documents drawn
    /// from its interest topics by popularity, so replica counts grow with
    /// the number of peers and some documents may be shared by nobody.
    #[default]
    Library,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadParams {
    pub n_docs: usize,
    pub n_queries: usize,
    pub vocab_size: usize,
    /// Zipf exponent of term frequencies within a topic.
    pub zipf_s: f64,
    /// Terms each topic draws from; 0 means the whole vocabulary.
    pub topic_vocab: usize,
    pub replication: usize,
    pub match_threshold: f64,
    pub n_topics: usize,
    pub doc_tokens_min: usize,
    pub doc_tokens_max: usize,
    /// Minimum number of seed-document terms in a query.
    pub query_terms: usize,
    /// Probability of appending one off-document noise term to a query.
    pub noise_prob: f64,
    /// Zipf exponent of seed-document popularity.
    pub popularity_s: f64,
    pub placement: Placement,
    /// Topics per peer under interest and library placement.
    pub interests_per_peer: usize,
    /// Documents per peer under library placement.
    pub library_size: usize,
    pub issue_window_start: f64,
    pub issue_window_end: f64,
}

impl Default for WorkloadParams {
    fn default() -> Self {
        Self {
            n_docs: 1700,
            n_queries: 200,
            vocab_size: 2000,
            zipf_s: 1.0,
            topic_vocab: 20,
            replication: 2,
            match_threshold: 0.8,
            n_topics: 20,
            doc_tokens_min: 4,
            doc_tokens_max: 10,
            query_terms: 3,
            noise_prob: 0.25,
            popularity_s: 0.8,
            placement: Placement::Library,
            interests_per_peer: 3,
            library_size: 40,
            issue_window_start: 50.0,
            issue_window_end: 500.0,
        }
    }
}

impl WorkloadParams {
    pub fn validate(&self, n_peers: usize) -> Result<(), ContentError> {
        let bad = |msg: String| Err(ContentError::BadConfig(msg));
        if n_peers == 0 {
            return bad("n_peers must be at least 1".into());
        }
        if self.vocab_size < self.query_terms.max(1) {
            return bad(format!(
                "vocab_size {} is smaller than query length {}",
                self.vocab_size, self.query_terms
            ));
        }
        if self.n_docs == 0 {
            return bad("n_docs must be at least 1".into());
        }
        if self.n_topics == 0 {
            return bad("n_topics must be at least 1".into());
        }
        if self.placement != Placement::Library && (self.replication == 0 || self.replication > n_peers) {
            return bad(format!(
                "replication {} must be in 1..={n_peers}",
                self.replication
            ));
        }
        if self.doc_tokens_min == 0 || self.doc_tokens_min > self.doc_tokens_max {
            return bad("doc_tokens_min must satisfy 1 <= doc_tokens_min <= doc_tokens_max".into());
        }
        if !(self.match_threshold > 0.0 && self.match_threshold <= 1.0) {
            return bad("match_threshold must be in (0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.noise_prob) {
            return bad("noise_prob must be in [0, 1]".into());
        }
        if self.zipf_s < 0.0 || self.popularity_s < 0.0 {
            return bad("zipf_s and popularity_s must be non-negative".into());
        }
        if self.issue_window_end < self.issue_window_start || self.issue_window_start < 0.0 {
            return bad("issue_window_start must satisfy 0 <= issue_window_start <= issue_window_end".into());
        }
        if self.topic_vocab > self.vocab_size {
            return bad("topic_vocab must not exceed vocab_size".into());
        }
        if self.placement != Placement::Uniform && self.interests_per_peer == 0 {
            return bad("interests_per_peer must be at least 1".into());
        }
        if self.placement == Placement::Library && self.library_size == 0 {
            return bad("library_size must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    pub n_peers: usize,
    pub documents: Vec<Document>,
    /// `placement[p]` lists the documents shared by peer `p`, ascending.
    pub placement: Vec<Vec<DocId>>,
    pub queries: Vec<Query>,
    /// `relevance[q]` lists every document matching query `q`, ascending.
    pub relevance: Vec<Vec<DocId>>,
}

impl Workload {
    pub fn document(&self, id: DocId) -> &Document {
        &self.documents[id.index()]
    }

    pub fn query(&self, id: QueryId) -> &Query {
        &self.queries[id.index()]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("workload serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

fn zipf_weights(n: usize, s: f64) -> WeightedIndex<f64> {
    WeightedIndex::new((1..=n).map(|k| (k as f64).powf(-s))).expect("n >= 1")
}

/// Generates a complete workload for `n_peers` peers. Corpus and query
/// content depend only on `seed`; placement and query origins also depend
/// on `n_peers`.
pub fn generate_workload(
    params: &WorkloadParams,
    n_peers: usize,
    seed: u64,
) -> Result<Workload, ContentError> {
    params.validate(n_peers)?;
    let mut corpus_rng = derive_stream(seed, "workload/corpus");
    let documents = generate_documents(params, &mut corpus_rng);
    let popularity = popularity_weights(params, documents.len(), &mut corpus_rng);

    let mut query_rng = derive_stream(seed, "workload/queries");
    let term_queries = generate_query_terms(params, &documents, &popularity, &mut query_rng);

    let mut origin_rng = derive_stream(seed, "workload/origins");
    let mut queries = Vec::with_capacity(term_queries.len());
    for (i, (seed_doc, terms)) in term_queries.into_iter().enumerate() {
        let origin = PeerId::from(origin_rng.gen_range(0..n_peers));
        let issue_time = origin_rng.gen_range(params.issue_window_start..=params.issue_window_end);
        queries.push(Query {
            query_id: QueryId::from(i),
            terms,
            origin,
            issue_time,
            seed_doc,
        });
    }

    let mut placement_rng = derive_stream(seed, "workload/placement");
    let placement = place_documents(params, &documents, &popularity, n_peers, &mut placement_rng);

    let relevance = queries
        .iter()
        .map(|q| {
            documents
                .iter()
                .filter(|d| matches(d, &q.terms, params.match_threshold))
                .map(|d| d.doc_id)
                .collect()
        })
        .collect();

    Ok(Workload {
        n_peers,
        documents,
        placement,
        queries,
        relevance,
    })
}

fn generate_documents(params: &WorkloadParams, rng: &mut ChaCha8Rng) -> Vec<Document> {
    // each topic ranks the whole vocabulary in its own random order
    let vocab: Vec<u32> = (0..params.vocab_size as u32).collect();
    let topics: Vec<Vec<u32>> = (0..params.n_topics)
        .map(|_| {
            let mut v = vocab.clone();
            v.shuffle(rng);
            v
        })
        .collect();
    let width = if params.topic_vocab == 0 {
        params.vocab_size
    } else {
        params.topic_vocab
    };
    let rank = zipf_weights(width, params.zipf_s);

    (0..params.n_docs)
        .map(|i| {
            let topic = rng.gen_range(0..params.n_topics);
            let tokens = rng.gen_range(params.doc_tokens_min..=params.doc_tokens_max);
            let terms = TermVector::new((0..tokens).map(|_| (topics[topic][rank.sample(rng)], 1.0)));
            Document {
                doc_id: DocId::from(i),
                topic: topic as u32,
                terms,
            }
        })
        .collect()
}

/// Zipf popularity over a random ranking of the documents, indexed by doc id.
fn popularity_weights(params: &WorkloadParams, n_docs: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut ranking: Vec<usize> = (0..n_docs).collect();
    ranking.shuffle(rng);
    let mut weights = vec![0.0; n_docs];
    for (rank, &d) in ranking.iter().enumerate() {
        weights[d] = ((rank + 1) as f64).powf(-params.popularity_s);
    }
    weights
}

fn generate_query_terms(
    params: &WorkloadParams,
    documents: &[Document],
    popularity: &[f64],
    rng: &mut ChaCha8Rng,
) -> Vec<(DocId, TermVector)> {
    let pick = WeightedIndex::new(popularity).expect("n_docs >= 1");
    let threshold = params.match_threshold;

    (0..params.n_queries)
        .map(|_| {
            let seed = &documents[pick.sample(rng)];
            let mut ranked: Vec<(u32, f64)> = seed.terms.entries().to_vec();
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

            let mut take = params.query_terms.min(ranked.len()).max(1);
            let mut q = TermVector::new(ranked[..take].iter().copied());
            while take < ranked.len() && !matches(seed, &q, threshold) {
                take += 1;
                q = TermVector::new(ranked[..take].iter().copied());
            }

            if rng.gen_bool(params.noise_prob) {
                let noise = rng.gen_range(0..params.vocab_size as u32);
                if q.weight(noise) == 0.0 {
                    let noisy = TermVector::new(q.entries().iter().copied().chain([(noise, 1.0)]));
                    if matches(seed, &noisy, threshold) {
                        q = noisy;
                    }
                }
            }
            (seed.doc_id, q)
        })
        .collect()
}

fn place_documents(
    params: &WorkloadParams,
    documents: &[Document],
    popularity: &[f64],
    n_peers: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<DocId>> {
    let mut placement = vec![Vec::new(); n_peers];
    let per_peer = params.interests_per_peer.min(params.n_topics);
    match params.placement {
        Placement::Uniform => {
            for doc in documents {
                for p in index::sample(rng, n_peers, params.replication) {
                    placement[p].push(doc.doc_id);
                }
            }
        }
        Placement::Interest => {
            let mut by_topic: Vec<Vec<usize>> = vec![Vec::new(); params.n_topics];
            for p in 0..n_peers {
                for t in index::sample(rng, params.n_topics, per_peer) {
                    by_topic[t].push(p);
                }
            }
            for doc in documents {
                let fans = &by_topic[doc.topic as usize];
                // fall back to uniform choice for topics nobody follows
                let picks: Vec<usize> = if fans.len() >= params.replication {
                    index::sample(rng, fans.len(), params.replication)
                        .into_iter()
                        .map(|i| fans[i])
                        .collect()
                } else {
                    let mut v = fans.clone();
                    while v.len() < params.replication {
                        let p = rng.gen_range(0..n_peers);
                        if !v.contains(&p) {
                            v.push(p);
                        }
                    }
                    v
                };
                for p in picks {
                    placement[p].push(doc.doc_id);
                }
            }
        }
        Placement::Library => {
            let mut by_topic: Vec<Vec<usize>> = vec![Vec::new(); params.n_topics];
            for doc in documents {
                by_topic[doc.topic as usize].push(doc.doc_id.index());
            }
            for shelf in placement.iter_mut() {
                let mut pool: Vec<usize> = index::sample(rng, params.n_topics, per_peer)
                    .into_iter()
                    .flat_map(|t| by_topic[t].iter().copied())
                    .collect();
                pool.sort_unstable();
                let take = params.library_size.min(pool.len());
                let chosen = pool
                    .choose_multiple_weighted(rng, take, |&d| popularity[d])
                    .expect("positive weights");
                shelf.extend(chosen.map(|&d| DocId::from(d)));
            }
        }
    }
    for docs in &mut placement {
        docs.sort_unstable();
    }
    placement
}
