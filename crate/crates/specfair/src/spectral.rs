//! Normalized Laplacian operator and its smallest nontrivial eigenpair.
//!
//! The operator `L = I - D^{-1/2} W D^{-1/2}` is applied matrix-free from the
//! CSR adjacency. `lambda_2` and the Fiedler vector come from Lanczos with
//! full reorthogonalization, deflating the known kernel direction `D^{1/2} 1`
//! every iteration; convergence is judged on the explicit residual
//! `||L v - lambda v||`, not on eigenvalue drift. A dense eigendecomposition
//! (nalgebra) serves as the independent oracle for small graphs and is
//! cross-checked automatically in debug builds.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{degree_stats, Graph};

/// Largest graph accepted by the dense-spectrum oracle.
pub const DENSE_MAX_NODES: usize = 2000;

/// Default perturbation weight for [`lambda2_edge_derivative`].
pub const DEFAULT_EDGE_EPSILON: f64 = 1e-6;

/// Iterative eigensolver configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Residual tolerance on `||L v - lambda v||`.
    pub tol: f64,
    /// Total matvec budget before giving up.
    pub max_iter: usize,
    /// Seed for the start vector.
    pub seed: u64,
    /// Lanczos basis size before an implicit restart.
    pub max_basis: usize,
    /// Below this size the result is cross-checked against the dense oracle
    /// in debug builds (or always, with `force_dense_check`).
    pub dense_threshold: usize,
    pub force_dense_check: bool,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-8,
            max_iter: 50_000,
            seed: 0x5eed,
            max_basis: 400,
            dense_threshold: DENSE_MAX_NODES,
            force_dense_check: false,
        }
    }
}

/// Result of the spectral-gap computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub lambda2: f64,
    /// Unit-norm Fiedler vector, orthogonal to the kernel direction. Sign is
    /// fixed so the largest-magnitude entry (lowest id on ties) is positive.
    pub fiedler: Vec<f64>,
    /// Achieved `||L v - lambda v||`.
    pub residual: f64,
    /// Matvec count spent by the solver.
    pub iterations: usize,
    pub delta_max: usize,
    pub delta_min: usize,
    pub beta: f64,
}

impl SpectralSummary {
    /// Degree-normalized Fiedler coordinate `x_k = v_k / sqrt(d_k)`.
    pub fn normalized_coordinate(&self, g: &Graph, k: usize) -> f64 {
        self.fiedler[k] / (g.degree(k) as f64).sqrt()
    }
}

trait SymOp {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// Unit vector spanning the operator kernel.
    fn kernel(&self) -> Vec<f64>;
}

struct NormalizedLaplacian<'a> {
    g: &'a Graph,
    inv_sqrt_deg: Vec<f64>,
}

impl<'a> NormalizedLaplacian<'a> {
    fn new(g: &'a Graph) -> Result<Self> {
        let n = g.node_count();
        let mut inv_sqrt_deg = Vec::with_capacity(n);
        for v in 0..n {
            let d = g.degree(v);
            if d == 0 {
                return Err(Error::IsolatedNode(v));
            }
            inv_sqrt_deg.push(1.0 / (d as f64).sqrt());
        }
        Ok(NormalizedLaplacian { g, inv_sqrt_deg })
    }
}

impl SymOp for NormalizedLaplacian<'_> {
    fn dim(&self) -> usize {
        self.g.node_count()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for u in 0..self.g.node_count() {
            let mut acc = 0.0;
            for &v in self.g.neighbors(u) {
                acc += self.inv_sqrt_deg[v as usize] * x[v as usize];
            }
            y[u] = x[u] - self.inv_sqrt_deg[u] * acc;
        }
    }

    fn kernel(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self.inv_sqrt_deg.iter().map(|isd| 1.0 / isd).collect();
        let norm = norm(&k);
        for e in &mut k {
            *e /= norm;
        }
        k
    }
}

/// One-off weighted overlay: the base graph plus edge `(i, j)` at weight
/// `eps`, with degrees adjusted accordingly. Used only by the perturbation
/// derivative, keeping [`Graph`] itself unweighted.
struct EpsilonEdgeOverlay<'a> {
    g: &'a Graph,
    inv_sqrt_deg: Vec<f64>,
    i: usize,
    j: usize,
    eps: f64,
}

impl<'a> EpsilonEdgeOverlay<'a> {
    fn new(g: &'a Graph, i: usize, j: usize, eps: f64) -> Result<Self> {
        let n = g.node_count();
        let mut inv_sqrt_deg = Vec::with_capacity(n);
        for v in 0..n {
            let mut d = g.degree(v) as f64;
            if v == i || v == j {
                d += eps;
            }
            if d == 0.0 {
                return Err(Error::IsolatedNode(v));
            }
            inv_sqrt_deg.push(1.0 / d.sqrt());
        }
        Ok(EpsilonEdgeOverlay {
            g,
            inv_sqrt_deg,
            i,
            j,
            eps,
        })
    }
}

impl SymOp for EpsilonEdgeOverlay<'_> {
    fn dim(&self) -> usize {
        self.g.node_count()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for u in 0..self.g.node_count() {
            let mut acc = 0.0;
            for &v in self.g.neighbors(u) {
                acc += self.inv_sqrt_deg[v as usize] * x[v as usize];
            }
            y[u] = x[u] - self.inv_sqrt_deg[u] * acc;
        }
        let scale = self.eps * self.inv_sqrt_deg[self.i] * self.inv_sqrt_deg[self.j];
        y[self.i] -= scale * x[self.j];
        y[self.j] -= scale * x[self.i];
    }

    fn kernel(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self.inv_sqrt_deg.iter().map(|isd| 1.0 / isd).collect();
        let norm = norm(&k);
        for e in &mut k {
            *e /= norm;
        }
        k
    }
}

/// `L x` for the normalized Laplacian of `g`, matrix-free.
pub fn laplacian_matvec(g: &Graph, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != g.node_count() {
        return Err(Error::InvalidInput(format!(
            "vector length {} does not match node count {}",
            x.len(),
            g.node_count()
        )));
    }
    let op = NormalizedLaplacian::new(g)?;
    let mut y = vec![0.0; x.len()];
    op.apply(x, &mut y);
    Ok(y)
}

/// Smallest nontrivial eigenpair of the normalized Laplacian.
pub fn spectral_gap(g: &Graph, opts: &EigenOptions) -> Result<SpectralSummary> {
    let n = g.node_count();
    if n < 2 {
        return Err(Error::InvalidInput(
            "spectral gap needs at least 2 nodes".into(),
        ));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let op = NormalizedLaplacian::new(g)?;
    let (lambda2, mut fiedler, residual, iterations) = lanczos_smallest(&op, opts)?;
    fix_sign(&mut fiedler);
    let stats = degree_stats(g)?;

    let summary = SpectralSummary {
        // Rayleigh quotients of the PSD operator can dip below zero by
        // rounding only.
        lambda2: lambda2.max(0.0),
        fiedler,
        residual,
        iterations,
        delta_max: stats.max_degree,
        delta_min: stats.min_degree,
        beta: stats.beta(),
    };

    if (cfg!(debug_assertions) || opts.force_dense_check) && n <= opts.dense_threshold {
        let dense = dense_spectrum(g)?;
        let diff = (summary.lambda2 - dense[1]).abs();
        assert!(
            diff <= 1e-6,
            "iterative lambda2 {} disagrees with dense oracle {} (diff {diff:.3e})",
            summary.lambda2,
            dense[1]
        );
    }
    Ok(summary)
}

/// All eigenvalues of the dense normalized Laplacian, ascending. Oracle only:
/// refuses graphs above [`DENSE_MAX_NODES`].
pub fn dense_spectrum(g: &Graph) -> Result<Vec<f64>> {
    let n = g.node_count();
    if n > DENSE_MAX_NODES {
        return Err(Error::GraphTooLarge {
            n,
            limit: DENSE_MAX_NODES,
        });
    }
    let mut eigs: Vec<f64> = dense_matrix(g, None)?
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Ok(eigs)
}

/// Numerical `d lambda_2 / d eps` at `eps = 0` for adding the non-edge
/// `(i, j)` with weight `eps`: a forward difference
/// `(lambda2(eps) - lambda2(0)) / eps`. Forward rather than central because a
/// negative edge weight is not meaningful on an unweighted graph.
pub fn lambda2_edge_derivative(
    g: &Graph,
    i: usize,
    j: usize,
    eps: f64,
    opts: &EigenOptions,
) -> Result<f64> {
    let n = g.node_count();
    if i >= n || j >= n {
        return Err(Error::NodeOutOfRange {
            id: i.max(j) as u32,
            n,
        });
    }
    if i == j {
        return Err(Error::InvalidInput("derivative needs i != j".into()));
    }
    if g.has_edge(i, j) {
        return Err(Error::EdgeExists {
            i: i as u32,
            j: j as u32,
        });
    }
    if !eps.is_finite() || eps <= 0.0 {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    let (at_eps, at_zero) = if n <= opts.dense_threshold.min(DENSE_MAX_NODES) {
        let perturbed = second_smallest(dense_matrix(g, Some((i, j, eps)))?);
        let base = second_smallest(dense_matrix(g, None)?);
        (perturbed, base)
    } else {
        let mut tight = *opts;
        tight.tol = opts.tol.min(1e-10);
        let overlay = EpsilonEdgeOverlay::new(g, i, j, eps)?;
        let perturbed = lanczos_smallest(&overlay, &tight)?.0;
        let base = lanczos_smallest(&NormalizedLaplacian::new(g)?, &tight)?.0;
        (perturbed, base)
    };
    Ok((at_eps - at_zero) / eps)
}

fn second_smallest(m: DMatrix<f64>) -> f64 {
    let mut eigs: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    eigs[1]
}

/// Dense normalized Laplacian, optionally with one `eps`-weighted extra edge.
fn dense_matrix(g: &Graph, extra: Option<(usize, usize, f64)>) -> Result<DMatrix<f64>> {
    let n = g.node_count();
    let mut deg: Vec<f64> = (0..n).map(|v| g.degree(v) as f64).collect();
    if let Some((i, j, eps)) = extra {
        deg[i] += eps;
        deg[j] += eps;
    }
    if let Some(v) = deg.iter().position(|&d| d == 0.0) {
        return Err(Error::IsolatedNode(v));
    }
    let mut m = DMatrix::identity(n, n);
    for u in 0..n {
        for &v in g.neighbors(u) {
            let v = v as usize;
            m[(u, v)] -= 1.0 / (deg[u] * deg[v]).sqrt();
        }
    }
    if let Some((i, j, eps)) = extra {
        let w = eps / (deg[i] * deg[j]).sqrt();
        m[(i, j)] -= w;
        m[(j, i)] -= w;
    }
    Ok(m)
}

/// Lanczos with full reorthogonalization against the basis and the kernel
/// direction, restarting from the best Ritz vector when the basis fills up.
/// Returns `(lambda, vector, residual, matvecs)`.
fn lanczos_smallest(op: &dyn SymOp, opts: &EigenOptions) -> Result<(f64, Vec<f64>, f64, usize)> {
    let n = op.dim();
    let kernel = op.kernel();
    let cap = opts.max_basis.min(n - 1).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut matvecs = 0usize;

    let fresh_start = |rng: &mut ChaCha8Rng| {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        orthogonalize(&mut v, &kernel);
        normalize(&mut v);
        v
    };
    let mut start = fresh_start(&mut rng);
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    let mut work = vec![0.0; n];

    while matvecs < opts.max_iter {
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();

        for j in 1..=cap {
            let vj = &basis[j - 1];
            op.apply(vj, &mut work);
            matvecs += 1;
            let mut w = work.clone();
            if j >= 2 {
                let beta_prev = betas[j - 2];
                for (we, pe) in w.iter_mut().zip(&basis[j - 2]) {
                    *we -= beta_prev * pe;
                }
            }
            let alpha = dot(vj, &w);
            for (we, ve) in w.iter_mut().zip(vj) {
                *we -= alpha * ve;
            }
            alphas.push(alpha);
            // Full reorthogonalization; the second pass mops up rounding.
            for _ in 0..2 {
                orthogonalize(&mut w, &kernel);
                for b in &basis {
                    orthogonalize(&mut w, b);
                }
            }
            let beta = norm(&w);

            let at_cap = j == cap;
            let breakdown = beta < 1e-12;
            let periodic = (j <= 64 && j % 4 == 0) || j % 16 == 0;
            if breakdown || at_cap || periodic {
                let (_, s) = smallest_ritz(&alphas, &betas);
                let estimate = (beta * s[j - 1]).abs();
                if estimate <= opts.tol || breakdown || at_cap {
                    let mut y = combine(&basis, &s);
                    orthogonalize(&mut y, &kernel);
                    normalize(&mut y);
                    op.apply(&y, &mut work);
                    matvecs += 1;
                    let lambda = dot(&y, &work);
                    let residual = work
                        .iter()
                        .zip(&y)
                        .map(|(ae, ye)| (ae - lambda * ye).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    if best.as_ref().map(|(_, _, r)| residual < *r).unwrap_or(true) {
                        best = Some((lambda, y.clone(), residual));
                    }
                    if residual <= opts.tol {
                        return Ok((lambda, y, residual, matvecs));
                    }
                    if breakdown {
                        // Stuck in an invariant subspace missing the target;
                        // only a fresh direction can escape it.
                        start = fresh_start(&mut rng);
                        break;
                    }
                    if at_cap {
                        start = y;
                        break;
                    }
                }
            }
            if j < cap {
                let mut next = w;
                for e in &mut next {
                    *e /= beta;
                }
                betas.push(beta);
                basis.push(next);
            }
        }
    }

    let (lambda, _, residual) = best.unwrap_or((f64::NAN, Vec::new(), f64::INFINITY));
    Err(Error::NotConverged {
        best_lambda2: lambda,
        residual,
        iterations: matvecs,
    })
}

/// Smallest eigenpair of the symmetric tridiagonal matrix defined by
/// `alphas` (diagonal) and `betas` (subdiagonal).
fn smallest_ritz(alphas: &[f64], betas: &[f64]) -> (f64, Vec<f64>) {
    let k = alphas.len();
    let mut d = alphas.to_vec();
    let mut e = vec![0.0; k];
    e[..betas.len().min(k.saturating_sub(1))]
        .copy_from_slice(&betas[..betas.len().min(k.saturating_sub(1))]);
    let mut z = vec![0.0; k * k];
    for i in 0..k {
        z[i * k + i] = 1.0;
    }
    tridiagonal_eigen(&mut d, &mut e, &mut z, k);
    let idx = d
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite Ritz values"))
        .map(|(i, _)| i)
        .expect("non-empty tridiagonal");
    let s: Vec<f64> = (0..k).map(|row| z[row * k + idx]).collect();
    (d[idx], s)
}

/// Implicit-shift QL for a symmetric tridiagonal matrix (EISPACK `tql2`).
/// `d` is the diagonal, `e[i]` couples rows `i` and `i+1` (`e[k-1]` unused),
/// `z` is a row-major `k x k` matrix (identity in) accumulating eigenvectors
/// in its columns.
fn tridiagonal_eigen(d: &mut [f64], e: &mut [f64], z: &mut [f64], k: usize) {
    if k == 0 {
        return;
    }
    e[k - 1] = 0.0;
    for l in 0..k {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < k {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 50, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in 0..k {
                    f = z[row * k + i + 1];
                    z[row * k + i + 1] = s * z[row * k + i] + c * f;
                    z[row * k + i] = c * z[row * k + i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    // Sort ascending, permuting eigenvector columns along.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).expect("finite eigenvalues"));
    let d_old = d.to_vec();
    let z_old = z.to_vec();
    for (new, &old) in order.iter().enumerate() {
        d[new] = d_old[old];
        for row in 0..k {
            z[row * k + new] = z_old[row * k + old];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: &mut [f64]) {
    let n = norm(a);
    if n > 0.0 {
        for e in a.iter_mut() {
            *e /= n;
        }
    }
}

fn orthogonalize(v: &mut [f64], against: &[f64]) {
    let proj = dot(v, against);
    for (ve, ae) in v.iter_mut().zip(against) {
        *ve -= proj * ae;
    }
}

fn combine(basis: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    let n = basis[0].len();
    let mut y = vec![0.0; n];
    for (b, &c) in basis.iter().zip(coeffs) {
        for (ye, be) in y.iter_mut().zip(b) {
            *ye += c * be;
        }
    }
    y
}

/// Make the largest-magnitude entry positive, ties to the lowest index.
fn fix_sign(v: &mut [f64]) {
    let mut idx = 0;
    for (i, e) in v.iter().enumerate() {
        if e.abs() > v[idx].abs() {
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        for e in v.iter_mut() {
            *e = -*e;
        }
    }
}
