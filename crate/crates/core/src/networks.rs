//! Random graphs (Erdos-Renyi and the two-community block model), spectral
//! clustering through the second eigenvector of the adjacency matrix,
//! misclassification scoring, and the adjacency-concentration diagnostic.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{sym_eig, LinalgError, SymMatrix};
use crate::rng::RngStream;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("label vectors differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("edge list parse error on line {line}: {msg}")]
    EdgeListParse { line: usize, msg: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Two equal communities of size n/2; within-community edge probability `p`,
/// across-community probability `q <= p` (`q == p` gives the null model).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SbmParams {
    pub n: usize,
    pub p: f64,
    pub q: f64,
}

impl SbmParams {
    pub fn new(n: usize, p: f64, q: f64) -> Result<Self, NetworkError> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(NetworkError::InvalidParams(format!(
                "n must be even and >= 4, got {n}"
            )));
        }
        if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
            return Err(NetworkError::InvalidParams(
                "probabilities must lie in [0, 1]".into(),
            ));
        }
        if q > p {
            return Err(NetworkError::InvalidParams(format!(
                "need q <= p for planted structure, got p={p}, q={q}"
            )));
        }
        Ok(Self { n, p, q })
    }

    /// Expected degree d = (p + q) n / 2.
    pub fn expected_degree(&self) -> f64 {
        0.5 * (self.p + self.q) * self.n as f64
    }

    /// Separation condition statistic (a - b)^2 / (log(n) (a + b)) with
    /// a = pn, b = qn. Recovery wants this to be large.
    pub fn condition_ratio(&self) -> f64 {
        let a = self.p * self.n as f64;
        let b = self.q * self.n as f64;
        let denom = (self.n as f64).ln() * (a + b);
        if denom == 0.0 {
            f64::INFINITY
        } else {
            (a - b) * (a - b) / denom
        }
    }
}

/// Simple undirected graph stored as a 0/1 adjacency matrix with zero
/// diagonal.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    adjacency: SymMatrix,
}

impl Graph {
    pub fn from_adjacency(adjacency: SymMatrix) -> Result<Self, NetworkError> {
        let n = adjacency.n();
        for i in 0..n {
            if adjacency.get(i, i) != 0.0 {
                return Err(NetworkError::InvalidParams("nonzero diagonal".into()));
            }
            for j in i + 1..n {
                let v = adjacency.get(i, j);
                if v != 0.0 && v != 1.0 {
                    return Err(NetworkError::InvalidParams(format!(
                        "entry ({i},{j}) = {v} is not 0/1"
                    )));
                }
            }
        }
        Ok(Self { n, adjacency })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn adjacency(&self) -> &SymMatrix {
        &self.adjacency
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency.get(u, v) == 1.0
    }

    pub fn edge_count(&self) -> usize {
        let mut c = 0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.has_edge(i, j) {
                    c += 1;
                }
            }
        }
        c
    }

    /// One "u v" pair per line, 0-indexed, u < v.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.has_edge(i, j) {
                    out.push_str(&format!("{i} {j}\n"));
                }
            }
        }
        out
    }

    /// Parses an edge-list; `n` fixes the vertex count (isolated trailing
    /// vertices are representable this way).
    pub fn from_edge_list(text: &str, n: usize) -> Result<Self, NetworkError> {
        let mut adj = SymMatrix::zeros(n);
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<usize, NetworkError> {
                tok.ok_or_else(|| NetworkError::EdgeListParse {
                    line: idx + 1,
                    msg: "expected two vertex ids".into(),
                })?
                .parse::<usize>()
                .map_err(|e| NetworkError::EdgeListParse { line: idx + 1, msg: e.to_string() })
            };
            let u = parse(it.next())?;
            let v = parse(it.next())?;
            if u >= n || v >= n {
                return Err(NetworkError::EdgeListParse {
                    line: idx + 1,
                    msg: format!("vertex id out of range (n = {n})"),
                });
            }
            if u == v {
                return Err(NetworkError::EdgeListParse {
                    line: idx + 1,
                    msg: "self-loops not supported".into(),
                });
            }
            adj.set_sym(u, v, 1.0);
        }
        Graph::from_adjacency(adj)
    }

    /// Infers the vertex count as max id + 1.
    pub fn from_edge_list_inferred(text: &str) -> Result<Self, NetworkError> {
        let mut max_id = 0usize;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            for tok in line.split_whitespace().take(2) {
                if let Ok(v) = tok.parse::<usize>() {
                    max_id = max_id.max(v);
                }
            }
        }
        Self::from_edge_list(text, max_id + 1)
    }
}

/// Community labels in {+1, -1}.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterLabels {
    pub labels: Vec<i8>,
    pub ground_truth: bool,
}

impl ClusterLabels {
    pub fn n(&self) -> usize {
        self.labels.len()
    }
}

/// Erdos-Renyi G(n, p): every unordered pair independently with probability p.
pub fn sample_er(n: usize, p: f64, rng: &mut RngStream) -> Result<Graph, NetworkError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(NetworkError::InvalidParams(format!("p = {p} outside [0,1]")));
    }
    let mut adj = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.bernoulli(p) {
                adj.set_sym(i, j, 1.0);
            }
        }
    }
    Graph::from_adjacency(adj)
}

/// Samples G(n, p, q) with the first n/2 vertices in community +1.
pub fn sample_sbm(
    params: &SbmParams,
    rng: &mut RngStream,
) -> Result<(Graph, ClusterLabels), NetworkError> {
    let n = params.n;
    let half = n / 2;
    let mut adj = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            let same = (i < half) == (j < half);
            let pr = if same { params.p } else { params.q };
            if rng.bernoulli(pr) {
                adj.set_sym(i, j, 1.0);
            }
        }
    }
    let labels = (0..n).map(|i| if i < half { 1 } else { -1 }).collect();
    Ok((
        Graph::from_adjacency(adj)?,
        ClusterLabels { labels, ground_truth: true },
    ))
}

/// Like [`sample_sbm`] but with vertices relabeled by a recorded random
/// permutation (`perm[old] = new`).
pub fn sample_sbm_shuffled(
    params: &SbmParams,
    rng: &mut RngStream,
) -> Result<(Graph, ClusterLabels, Vec<usize>), NetworkError> {
    let (g, labels) = sample_sbm(params, rng)?;
    let n = params.n;
    let mut perm: Vec<usize> = (0..n).collect();
    // Fisher-Yates
    for i in (1..n).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        perm.swap(i, j);
    }
    let mut adj = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            if g.has_edge(i, j) {
                adj.set_sym(perm[i], perm[j], 1.0);
            }
        }
    }
    let mut new_labels = vec![0i8; n];
    for (old, &new) in perm.iter().enumerate() {
        new_labels[new] = labels.labels[old];
    }
    Ok((
        Graph::from_adjacency(adj)?,
        ClusterLabels { labels: new_labels, ground_truth: true },
        perm,
    ))
}

/// The expected adjacency in block form: `p` on within-community entries
/// (including the diagonal), `q` across. This is the rank-2 matrix whose
/// nonzero eigenpairs are `(p+q)n/2` with the all-ones vector and `(p-q)n/2`
/// with the block-sign vector. The concentration diagnostic subtracts the
/// diagonal separately so graphs are compared against a zero-diagonal target.
pub fn expected_adjacency(params: &SbmParams) -> SymMatrix {
    let n = params.n;
    let half = n / 2;
    SymMatrix::from_fn(n, |i, j| {
        if (i < half) == (j < half) {
            params.p
        } else {
            params.q
        }
    })
}

/// Zero-diagonal version of [`expected_adjacency`], matching the no-self-loop
/// convention of sampled graphs.
pub fn expected_adjacency_zero_diag(params: &SbmParams) -> SymMatrix {
    let mut ea = expected_adjacency(params);
    for i in 0..params.n {
        ea.set_sym(i, i, 0.0);
    }
    ea
}

/// Signs of the eigenvector for the second-largest (by value) eigenvalue.
/// Zero coefficients get +1.
///
/// When the top two eigenvalues tie (exactly disconnected communities, e.g.
/// p=1, q=0), "the second eigenvector" is only defined up to a rotation of
/// the shared eigenspace. The basis is then fixed by aligning the leading
/// vector with the all-ones direction, matching the expected-adjacency
/// convention where v1 is constant and v2 carries the block signs.
pub fn spectral_cluster_matrix(m: &SymMatrix) -> Result<ClusterLabels, NetworkError> {
    if m.n() < 2 {
        return Err(NetworkError::InvalidParams("need n >= 2".into()));
    }
    let spec = sym_eig(m)?;
    let mut v2 = spec.eigenvector(1);
    let gap = spec.eigenvalues[0] - spec.eigenvalues[1];
    if gap.abs() <= 1e-9 * (1.0 + spec.eigenvalues[0].abs()) {
        let v1 = spec.eigenvector(0);
        let c1: f64 = v1.iter().sum();
        let c2: f64 = v2.iter().sum();
        let norm = (c1 * c1 + c2 * c2).sqrt();
        if norm > 1e-12 {
            // rotate (v1, v2) within their span so the first component
            // points along the projection of the ones vector
            v2 = v1
                .iter()
                .zip(&v2)
                .map(|(a, b)| (-c2 * a + c1 * b) / norm)
                .collect();
        }
    }
    let labels = v2
        .iter()
        .map(|&c| if c >= 0.0 { 1i8 } else { -1i8 })
        .collect();
    Ok(ClusterLabels { labels, ground_truth: false })
}

pub fn spectral_cluster(g: &Graph) -> Result<ClusterLabels, NetworkError> {
    if g.n() < 4 {
        return Err(NetworkError::InvalidParams("need n >= 4".into()));
    }
    spectral_cluster_matrix(g.adjacency())
}

/// Fraction of misclassified vertices, minimized over the global label flip;
/// always in [0, 1/2].
pub fn misclassification_rate(
    pred: &ClusterLabels,
    truth: &ClusterLabels,
) -> Result<f64, NetworkError> {
    if pred.n() != truth.n() {
        return Err(NetworkError::LengthMismatch(pred.n(), truth.n()));
    }
    let n = pred.n();
    let disagreements = pred
        .labels
        .iter()
        .zip(&truth.labels)
        .filter(|(a, b)| a != b)
        .count();
    Ok(disagreements.min(n - disagreements) as f64 / n as f64)
}

/// Default constant for the concentration bound.
pub const DEFAULT_CONCENTRATION_C: f64 = 3.0;

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationReport {
    /// Per-trial operator norms ||A - E A||.
    pub deviations: Vec<f64>,
    pub mean_deviation: f64,
    /// C (sqrt(d log n) + log n).
    pub bound: f64,
    /// mean_deviation / bound.
    pub ratio: f64,
    pub expected_degree: f64,
    pub condition_ratio: f64,
    pub c_const: f64,
}

/// Monte-Carlo mean of `||A - E A||` (both with zero diagonal) against
/// `C (sqrt(d log n) + log n)`. Seeds run in parallel on split streams.
pub fn concentration_diagnostic(
    params: &SbmParams,
    trials: usize,
    rng: &RngStream,
    c_const: f64,
) -> Result<ConcentrationReport, NetworkError> {
    if trials < 1 {
        return Err(NetworkError::InvalidParams("need at least one trial".into()));
    }
    let ea = expected_adjacency_zero_diag(params);
    let deviations: Result<Vec<f64>, NetworkError> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut stream = rng.split(t as u64);
            let (g, _) = sample_sbm(params, &mut stream)?;
            Ok(g.adjacency().sub(&ea)?.operator_norm()?)
        })
        .collect();
    let deviations = deviations?;
    let mean_deviation = deviations.iter().sum::<f64>() / trials as f64;
    let n = params.n as f64;
    let d = params.expected_degree();
    let bound = c_const * ((d * n.ln()).sqrt() + n.ln());
    Ok(ConcentrationReport {
        mean_deviation,
        ratio: mean_deviation / bound,
        bound,
        expected_degree: d,
        condition_ratio: params.condition_ratio(),
        c_const,
        deviations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn er_degenerate_cases() {
        let mut rng = RngStream::new(1);
        let empty = sample_er(6, 0.0, &mut rng).unwrap();
        assert_eq!(empty.edge_count(), 0);
        let complete = sample_er(6, 1.0, &mut rng).unwrap();
        assert_eq!(complete.edge_count(), 15);
        assert!(sample_er(4, 1.5, &mut rng).is_err());
    }

    #[test]
    fn er_edge_count_concentrates() {
        // n=100, p=0.3: mean edge count within 3 sigma over 1e4 graphs would
        // be slow at full scale; use the binomial moments directly at a
        // smaller count, same statistic.
        let (n, p, reps) = (100usize, 0.3f64, 400usize);
        let pairs = n * (n - 1) / 2;
        let rng = RngStream::new(2);
        let mut total = 0usize;
        for i in 0..reps {
            let mut s = rng.split(i as u64);
            total += sample_er(n, p, &mut s).unwrap().edge_count();
        }
        let mean = total as f64 / reps as f64;
        let expect = p * pairs as f64;
        let sigma = (pairs as f64 * p * (1.0 - p) / reps as f64).sqrt();
        assert!((mean - expect).abs() < 3.0 * sigma, "mean {mean} expect {expect}");
    }

    #[test]
    fn sbm_extremes() {
        let mut rng = RngStream::new(3);
        let params = SbmParams::new(8, 1.0, 0.0).unwrap();
        let (g, labels) = sample_sbm(&params, &mut rng).unwrap();
        // two disjoint cliques
        for i in 0..8 {
            for j in (i + 1)..8 {
                let same = labels.labels[i] == labels.labels[j];
                assert_eq!(g.has_edge(i, j), same);
            }
        }
        let pred = spectral_cluster(&g).unwrap();
        assert_eq!(misclassification_rate(&pred, &labels).unwrap(), 0.0);
    }

    #[test]
    fn sbm_null_matches_er_distribution() {
        // p = q: edge probability is p for every pair, like G(n, p)
        let params = SbmParams::new(100, 0.3, 0.3).unwrap();
        let rng = RngStream::new(4);
        let reps = 300;
        let mut total = 0usize;
        for i in 0..reps {
            let mut s = rng.split(i as u64);
            total += sample_sbm(&params, &mut s).unwrap().0.edge_count();
        }
        let pairs = 100 * 99 / 2;
        let mean = total as f64 / reps as f64;
        let expect = 0.3 * pairs as f64;
        let sigma = (pairs as f64 * 0.3 * 0.7 / reps as f64).sqrt();
        assert!((mean - expect).abs() < 4.0 * sigma);
    }

    #[test]
    fn sbm_mean_degree_fig2_params() {
        // expected vertex degree is p(n/2 - 1) + q n/2 = d - p
        let params = SbmParams::new(200, 0.05, 0.005).unwrap();
        let rng = RngStream::new(5);
        let reps = 1000usize;
        let mut degree_sum = 0f64;
        for i in 0..reps {
            let mut s = rng.split(i as u64);
            let (g, _) = sample_sbm(&params, &mut s).unwrap();
            degree_sum += 2.0 * g.edge_count() as f64 / 200.0;
        }
        let mean_degree = degree_sum / reps as f64;
        let expect = 0.05 * 99.0 + 0.005 * 100.0; // 5.45 = d - p
        assert_abs_diff_eq!(expect, params.expected_degree() - params.p, epsilon = 1e-12);
        // 3 sigma of the averaged mean degree; per-graph variance of total
        // degree / n is below 2 d / n, generous envelope used here
        let sigma = (2.0 * params.expected_degree() / 200.0 / reps as f64).sqrt() * 2.0;
        assert!((mean_degree - expect).abs() < 3.0 * sigma.max(0.02));
    }

    #[test]
    fn expected_adjacency_spectrum() {
        let params = SbmParams::new(200, 0.05, 0.005).unwrap();
        let ea = expected_adjacency(&params);
        let spec = sym_eig(&ea).unwrap();
        assert_abs_diff_eq!(spec.eigenvalues[0], 5.5, epsilon = 1e-9);
        assert_abs_diff_eq!(spec.eigenvalues[1], 4.5, epsilon = 1e-9);
        // rank 2: remaining eigenvalues vanish
        for &l in &spec.eigenvalues[2..] {
            assert!(l.abs() < 1e-9);
        }
        // block-sign vector is an exact eigenvector for lambda_2
        let n = params.n;
        let v2: Vec<f64> = (0..n).map(|i| if i < n / 2 { 1.0 } else { -1.0 }).collect();
        let image = ea.mat_vec(&v2);
        let mut res = 0.0f64;
        for i in 0..n {
            res += (image[i] - 4.5 * v2[i]).powi(2);
        }
        assert!(res.sqrt() <= 1e-9);
    }

    #[test]
    fn clustering_expected_adjacency_recovers_blocks() {
        let params = SbmParams::new(12, 0.6, 0.1).unwrap();
        let labels = spectral_cluster_matrix(&expected_adjacency(&params)).unwrap();
        let truth: Vec<i8> = (0..12).map(|i| if i < 6 { 1 } else { -1 }).collect();
        let truth = ClusterLabels { labels: truth, ground_truth: true };
        assert_eq!(misclassification_rate(&labels, &truth).unwrap(), 0.0);
    }

    #[test]
    fn misclassification_properties() {
        let a = ClusterLabels { labels: vec![1, 1, -1, -1], ground_truth: true };
        let flipped = ClusterLabels {
            labels: a.labels.iter().map(|v| -v).collect(),
            ground_truth: false,
        };
        assert_eq!(misclassification_rate(&a, &a).unwrap(), 0.0);
        assert_eq!(misclassification_rate(&flipped, &a).unwrap(), 0.0);
        let b = ClusterLabels { labels: vec![1, -1, -1, -1], ground_truth: false };
        let r1 = misclassification_rate(&b, &a).unwrap();
        let r2 = misclassification_rate(&a, &b).unwrap();
        assert_eq!(r1, r2);
        assert!(r1 <= 0.5);
        let short = ClusterLabels { labels: vec![1], ground_truth: false };
        assert!(misclassification_rate(&short, &a).is_err());
    }

    #[test]
    fn misclassification_random_labels_near_half() {
        let n = 10_000;
        let mut rng = RngStream::new(6);
        let truth = ClusterLabels {
            labels: (0..n).map(|i| if i < n / 2 { 1 } else { -1 }).collect(),
            ground_truth: true,
        };
        let pred = ClusterLabels {
            labels: (0..n).map(|_| if rng.sign() > 0.0 { 1i8 } else { -1 }).collect(),
            ground_truth: false,
        };
        let r = misclassification_rate(&pred, &truth).unwrap();
        assert!((r - 0.5).abs() < 0.02, "rate {r}");
    }

    #[test]
    fn concentration_diagnostic_degenerate() {
        let rng = RngStream::new(7);
        // p = q = 0: the empty graph is deterministic
        let params = SbmParams::new(10, 0.0, 0.0).unwrap();
        let rep = concentration_diagnostic(&params, 3, &rng, 3.0).unwrap();
        assert_eq!(rep.mean_deviation, 0.0);
        // p = q = 1 with matching zero-diagonal conventions is also exact
        let params = SbmParams::new(10, 1.0, 1.0).unwrap();
        let rep = concentration_diagnostic(&params, 3, &rng, 3.0).unwrap();
        assert_eq!(rep.mean_deviation, 0.0);
    }

    #[test]
    fn concentration_ratio_trend_decreases_with_n() {
        // fixed (p, q), growing n: ||A - EA|| / ||EA|| must trend down
        let rng = RngStream::new(8);
        let mut ratios = Vec::new();
        for (idx, &n) in [100usize, 200, 400, 800].iter().enumerate() {
            let params = SbmParams::new(n, 0.05, 0.005).unwrap();
            let ea0 = expected_adjacency_zero_diag(&params);
            let norm_ea = ea0.operator_norm().unwrap();
            let mut s = rng.split(idx as u64);
            let (g, _) = sample_sbm(&params, &mut s).unwrap();
            let dev = g.adjacency().sub(&ea0).unwrap().operator_norm().unwrap();
            ratios.push(dev / norm_ea);
        }
        // Spearman on 4 strictly increasing n values: require strictly
        // decreasing ranks overall (negative correlation)
        let mut spearman_num = 0.0;
        for i in 0..ratios.len() {
            for j in (i + 1)..ratios.len() {
                spearman_num += (ratios[j] - ratios[i]).signum() * 1.0;
            }
        }
        assert!(spearman_num < 0.0, "ratios {ratios:?}");
    }

    #[test]
    fn edge_list_round_trip() {
        let mut rng = RngStream::new(9);
        let (g, _) = sample_sbm(&SbmParams::new(16, 0.7, 0.2).unwrap(), &mut rng).unwrap();
        let text = g.to_edge_list();
        let parsed = Graph::from_edge_list(&text, 16).unwrap();
        assert_eq!(parsed.adjacency().entries(), g.adjacency().entries());
        let inferred = Graph::from_edge_list_inferred(&text).unwrap();
        assert_eq!(inferred.n(), 16);

        assert!(Graph::from_edge_list("0 99\n", 16).is_err());
        assert!(Graph::from_edge_list("3 3\n", 16).is_err());
        assert!(Graph::from_edge_list("x y\n", 16).is_err());
    }

    #[test]
    fn shuffled_sbm_preserves_structure() {
        let params = SbmParams::new(20, 1.0, 0.0).unwrap();
        let mut rng = RngStream::new(10);
        let (g, labels, perm) = sample_sbm_shuffled(&params, &mut rng).unwrap();
        assert_eq!(perm.len(), 20);
        for i in 0..20 {
            for j in (i + 1)..20 {
                let same = labels.labels[i] == labels.labels[j];
                assert_eq!(g.has_edge(i, j), same);
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(SbmParams::new(7, 0.5, 0.1).is_err());
        assert!(SbmParams::new(2, 0.5, 0.1).is_err());
        assert!(SbmParams::new(8, 0.1, 0.5).is_err());
        assert!(SbmParams::new(8, 0.5, 0.5).is_ok());
    }
}
