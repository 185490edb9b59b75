//! Low-lying spectra: dense Hermitian diagonalization, restarted Lanczos,
//! subspace restriction, frozen-configuration scan and reference chains.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use std::collections::HashMap;

use crate::basis::{clock_trajectory, SpinBasis};
use crate::error::{Error, Result};
use crate::hamiltonian::{BondTerms, Part, RingOperator};
use crate::history::bits_of;
use crate::sparse::{sparse_dot, CsrMatrix, LinearOperator, SparseVector};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub dense_threshold: usize,
    pub tol: f64,
    /// Matrix-vector budget per converged eigenvector.
    pub max_matvecs: usize,
    pub krylov_dim: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            dense_threshold: 4096,
            tol: 1e-8,
            max_matvecs: 10_000,
            krylov_dim: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Dense,
    Iterative,
}

impl Method {
    fn tag(self) -> &'static str {
        match self {
            Method::Dense => "dense",
            Method::Iterative => "iterative",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub k: usize,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Cluster index of each eigenvalue.
    pub clusters: Vec<usize>,
    pub vectors: Vec<Vec<C64>>,
    pub method: Method,
    pub restricted: bool,
    pub cluster_tol: f64,
}

impl SpectralReport {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "# method {} restricted {} k {} cluster_tol {:e}\n",
            self.method.tag(),
            self.restricted,
            self.k,
            self.cluster_tol
        );
        for i in 0..self.eigenvalues.len() {
            s += &format!(
                "eig {} {:.12} {:.3e} {}\n",
                i, self.eigenvalues[i], self.residuals[i], self.clusters[i]
            );
        }
        s
    }

    /// Multiplicity of the lowest cluster.
    pub fn ground_degeneracy(&self) -> usize {
        self.clusters.iter().filter(|&&c| c == 0).count()
    }
}

/// Assigns cluster ids to ascending values; neighbours within `tol` share one.
pub fn cluster(values: &[f64], tol: f64) -> Vec<usize> {
    let mut out = Vec::with_capacity(values.len());
    let mut id = 0;
    for (i, v) in values.iter().enumerate() {
        if i > 0 && v - values[i - 1] > tol {
            id += 1;
        }
        out.push(id);
    }
    out
}

pub fn default_cluster_tol(op: &dyn LinearOperator) -> f64 {
    1e-7 * op.norm_bound().max(1.0)
}

fn hermiticity(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

fn eig_residual(m: &DMatrix<C64>, vals: &[f64], vecs: &DMatrix<C64>) -> f64 {
    let mut worst: f64 = 0.0;
    for (j, &v) in vals.iter().enumerate() {
        let x = vecs.column(j);
        worst = worst.max((m * x - x * C64::new(v, 0.0)).norm());
    }
    worst
}

/// Full eigendecomposition of a Hermitian matrix, ascending. Columns of the
/// returned matrix are the eigenvectors.
pub fn dense_eigh(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let (vals, vecs) = sort_pairs(eig.eigenvalues.iter().cloned().collect(), eig.eigenvectors);
    if eig_residual(m, &vals, &vecs) <= 1e-9 * scale * (n as f64).sqrt() {
        return (vals, vecs);
    }
    real_embedding_eigh(m)
}

fn sort_pairs(vals: Vec<f64>, vecs: DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let sorted_vals = idx.iter().map(|&i| vals[i]).collect();
    let sorted_vecs = DMatrix::from_fn(vecs.nrows(), idx.len(), |r, c| vecs[(r, idx[c])]);
    (sorted_vals, sorted_vecs)
}

/// Fallback through the real symmetric matrix `[[A, -B], [B, A]]`, whose
/// spectrum is that of `A + iB` with every eigenvalue doubled.
fn real_embedding_eigh(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    let big = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = m[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let eig = nalgebra::SymmetricEigen::new(big);
    let mut idx: Vec<usize> = (0..2 * n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    // Each real vector (u; v) maps to u + i v; keep a maximal orthonormal set.
    let mut vals = Vec::with_capacity(n);
    let mut cols: Vec<DVector<C64>> = Vec::with_capacity(n);
    for &i in &idx {
        if cols.len() == n {
            break;
        }
        let col = eig.eigenvectors.column(i);
        let mut z = DVector::from_fn(n, |r, _| C64::new(col[r], col[r + n]));
        for q in &cols {
            let p = q.dotc(&z);
            z -= q * p;
        }
        let norm = z.norm();
        if norm > 0.5 {
            cols.push(z / C64::new(norm, 0.0));
            vals.push(eig.eigenvalues[i]);
        }
    }
    (vals, DMatrix::from_columns(&cols))
}

fn check_hermitian_dense(m: &DMatrix<C64>) -> Result<()> {
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let h = hermiticity(m);
    if h > 1e-10 * scale {
        return Err(Error::NotHermitian(h));
    }
    Ok(())
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let mut v: Vec<C64> = (0..n)
        .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    normalize(&mut v);
    v
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(v: &mut [C64]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|z| *z /= n);
    }
    n
}

fn orthogonalize(v: &mut [C64], against: &[Vec<C64>]) {
    // twice is enough
    for _ in 0..2 {
        for q in against {
            let p = dot(q, v);
            v.iter_mut().zip(q).for_each(|(x, y)| *x -= p * y);
        }
    }
}

fn residual_of(op: &dyn LinearOperator, v: &[C64], theta: f64, scratch: &mut [C64]) -> f64 {
    op.apply(v, scratch);
    scratch
        .iter()
        .zip(v)
        .map(|(hv, x)| (hv - x * theta).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Block thick-restart Lanczos with full reorthogonalization and locking:
/// returns the `k` lowest eigenpairs (value, vector, residual), ascending.
///
/// The subspace grows by the residuals of the lowest `k` unconverged Ritz
/// vectors, so a level of multiplicity up to `k` is resolved from a random
/// block. Converged Ritz pairs are locked in ascending order only.
pub fn lanczos(
    op: &dyn LinearOperator,
    k: usize,
    opts: &SolverOptions,
) -> Result<Vec<(f64, Vec<C64>, f64)>> {
    let n = op.dim();
    let k = k.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let scale = op.norm_bound().max(1.0);
    let block = k.max(1);
    let m_max = opts.krylov_dim.max(3 * block).min(n);
    let mut found: Vec<(f64, Vec<C64>, f64)> = Vec::new();
    let mut locked: Vec<Vec<C64>> = Vec::new();
    let mut v: Vec<Vec<C64>> = Vec::new();
    let mut w: Vec<Vec<C64>> = Vec::new();
    let mut pending: Vec<Vec<C64>> = (0..block).map(|_| random_unit(n, &mut rng)).collect();
    let mut matvecs = 0usize;
    let mut best = (f64::NAN, f64::INFINITY);

    let combine = |basis: &[Vec<C64>], coef: &DMatrix<C64>, j: usize| -> Vec<C64> {
        let mut x = vec![ZERO; n];
        for (i, b) in basis.iter().enumerate() {
            let c = coef[(i, j)];
            x.iter_mut().zip(b).for_each(|(xv, bv)| *xv += c * bv);
        }
        x
    };

    while found.len() < k {
        let room = (n - locked.len()).min(m_max);
        for mut x in pending.drain(..) {
            if v.len() >= room {
                break;
            }
            orthogonalize(&mut x, &locked);
            orthogonalize(&mut x, &v);
            if normalize(&mut x) <= 1e-8 {
                x = random_unit(n, &mut rng);
                orthogonalize(&mut x, &locked);
                orthogonalize(&mut x, &v);
                if normalize(&mut x) <= 1e-8 {
                    continue;
                }
            }
            let mut hx = vec![ZERO; n];
            op.apply(&x, &mut hx);
            matvecs += 1;
            v.push(x);
            w.push(hx);
        }
        let s = v.len();
        let g = DMatrix::from_fn(s, s, |a, b| dot(&v[a], &w[b]));
        let g = (&g + g.adjoint()) * C64::new(0.5, 0.0);
        let (vals, y) = dense_eigh(&g);

        let want = (k - found.len()).min(s);
        let mut residuals = Vec::with_capacity(want);
        let mut ritz = Vec::with_capacity(want);
        for j in 0..want {
            let x = combine(&v, &y, j);
            let hx = combine(&w, &y, j);
            let r: Vec<C64> = hx.iter().zip(&x).map(|(a, b)| a - b * vals[j]).collect();
            residuals.push(norm(&r));
            ritz.push((x, r));
        }
        if residuals[0] < best.1 {
            best = (vals[0], residuals[0]);
        }
        let exhausted = s == n - locked.len();
        let n_lock = residuals
            .iter()
            .take_while(|&&r| exhausted || r <= opts.tol * scale)
            .count();
        if n_lock > 0 {
            let mut scratch = vec![ZERO; n];
            for (j, (x, _)) in ritz.iter().take(n_lock).enumerate() {
                let mut xn = x.clone();
                normalize(&mut xn);
                let res = residual_of(op, &xn, vals[j], &mut scratch);
                locked.push(xn.clone());
                found.push((vals[j], xn, res));
            }
            matvecs = 0;
            best = (f64::NAN, f64::INFINITY);
            let keep = (s - n_lock).min(m_max / 2);
            let nv: Vec<Vec<C64>> = (n_lock..n_lock + keep).map(|j| combine(&v, &y, j)).collect();
            let nw: Vec<Vec<C64>> = (n_lock..n_lock + keep).map(|j| combine(&w, &y, j)).collect();
            v = nv;
            w = nw;
            pending = ritz.into_iter().skip(n_lock).map(|(_, r)| r).collect();
            pending.extend((0..n_lock).map(|_| random_unit(n, &mut rng)));
            continue;
        }
        if matvecs >= opts.max_matvecs {
            return Err(Error::NoConvergence {
                matvecs,
                estimate: best.0,
                residual: best.1,
            });
        }
        if s + want > room {
            let keep = (m_max / 2).max(2 * block).min(s);
            let nv: Vec<Vec<C64>> = (0..keep).map(|j| combine(&v, &y, j)).collect();
            let nw: Vec<Vec<C64>> = (0..keep).map(|j| combine(&w, &y, j)).collect();
            v = nv;
            w = nw;
        }
        pending = ritz
            .into_iter()
            .zip(&residuals)
            .filter(|(_, &r)| r > opts.tol * scale)
            .map(|((_, r), _)| r)
            .collect();
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(found)
}

/// The `k` lowest eigenpairs, dense up to `dense_threshold`.
pub fn low_spectrum(op: &dyn LinearOperator, k: usize, opts: &SolverOptions) -> Result<SpectralReport> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::Parameter(format!("k = {k} outside 1..={n}")));
    }
    let tol = default_cluster_tol(op);
    let (vals, vecs, res, method) = if n <= opts.dense_threshold {
        let m = op.to_dense();
        check_hermitian_dense(&m)?;
        let (vals, vecs) = dense_eigh(&m);
        let mut scratch = vec![ZERO; n];
        let vs: Vec<Vec<C64>> = (0..k).map(|j| vecs.column(j).iter().cloned().collect()).collect();
        let res = vs
            .iter()
            .zip(&vals)
            .map(|(v, &l)| residual_of(op, v, l, &mut scratch))
            .collect();
        (vals[..k].to_vec(), vs, res, Method::Dense)
    } else {
        let pairs = lanczos(op, k, opts)?;
        let vals = pairs.iter().map(|p| p.0).collect();
        let res = pairs.iter().map(|p| p.2).collect();
        let vs = pairs.into_iter().map(|p| p.1).collect();
        (vals, vs, res, Method::Iterative)
    };
    Ok(SpectralReport {
        k,
        clusters: cluster(&vals, tol),
        eigenvalues: vals,
        residuals: res,
        vectors: vecs,
        method,
        restricted: false,
        cluster_tol: tol,
    })
}

/// Smallest eigenvalue, its vector and residual.
pub fn ground_energy(op: &dyn LinearOperator, opts: &SolverOptions) -> Result<(f64, Vec<C64>, f64)> {
    let mut r = low_spectrum(op, 1, opts)?;
    Ok((r.eigenvalues[0], r.vectors.remove(0), r.residuals[0]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapResult {
    pub ground: f64,
    /// `None` when the whole spectrum is one cluster.
    pub gap: Option<f64>,
    pub degeneracy: usize,
}

/// Gap between the lowest cluster and the next, raising `k` until resolved.
pub fn gap(op: &dyn LinearOperator, opts: &SolverOptions) -> Result<GapResult> {
    let n = op.dim();
    let mut k = 4.min(n);
    loop {
        let r = low_spectrum(op, k, opts)?;
        let deg = r.ground_degeneracy();
        if deg < k {
            return Ok(GapResult {
                ground: r.eigenvalues[0],
                gap: Some(r.eigenvalues[deg] - r.eigenvalues[0]),
                degeneracy: deg,
            });
        }
        if k == n {
            return Ok(GapResult {
                ground: r.eigenvalues[0],
                gap: None,
                degeneracy: deg,
            });
        }
        k = (2 * k).min(n);
    }
}

/// Index-based restriction: `H[keep, keep]`.
pub fn restrict_to_configs(h: &CsrMatrix, keep: &[usize]) -> DMatrix<C64> {
    h.submatrix(keep)
}

/// `<b_i|H|b_j>` for orthonormal sparse vectors, using the given sparse action of `H`.
pub fn restrict_to_vectors<F>(apply: F, basis: &[SparseVector]) -> Result<DMatrix<C64>>
where
    F: Fn(&SparseVector) -> SparseVector,
{
    let n = basis.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let g = sparse_dot(&basis[i], &basis[j]);
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - target).norm());
        }
    }
    if worst > 1e-10 {
        return Err(Error::NotOrthonormal(worst));
    }
    let images: Vec<SparseVector> = basis.iter().map(&apply).collect();
    Ok(DMatrix::from_fn(n, n, |i, j| sparse_dot(&basis[i], &images[j])))
}

/// Legal-orbit configurations with the Head at `head_site`, ordered by step
/// and then by qubit string. With `all_strings = false` only the all-zero
/// string is kept, giving one configuration per step.
pub fn orbit_configs(basis: &SpinBasis, head_site: usize, all_strings: bool) -> Vec<usize> {
    let n = basis.shape.n_qubits;
    let strings = if all_strings { 1usize << n } else { 1 };
    let mut out = Vec::new();
    for labels in clock_trajectory(&basis.shape) {
        for q in 0..strings {
            out.push(basis.layout_index(head_site, &labels, &bits_of(n, q)));
        }
    }
    out
}

/// `H[configs, configs]` straight from the ring operator's columns.
pub fn restrict_ring(op: &RingOperator, configs: &[usize]) -> DMatrix<C64> {
    let pos: HashMap<usize, usize> = configs.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut m = DMatrix::zeros(configs.len(), configs.len());
    for (j, &c) in configs.iter().enumerate() {
        for (r, v) in op.column(c) {
            if let Some(&i) = pos.get(&r) {
                m[(i, j)] = v;
            }
        }
    }
    m
}

/// Principal submatrix `H[keep, keep]` as a sparse operator.
pub fn masked_csr(h: &CsrMatrix, keep: &[usize]) -> Result<CsrMatrix> {
    let pos: HashMap<usize, usize> = keep.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let triples = h
        .triples()
        .filter_map(|(r, c, v)| Some((*pos.get(&r)?, *pos.get(&c)?, v)))
        .collect();
    CsrMatrix::from_triples(keep.len(), triples)
}

/// Form-legal configurations (one Head, positions in order) on which the
/// computation term acts as zero. No legal-orbit configuration qualifies,
/// since every orbit state has a transition.
pub fn detect_frozen(terms: &BondTerms) -> Vec<usize> {
    let basis = terms.basis;
    let shape = basis.shape;
    let n = shape.n_qubits;
    let rp1 = shape.n_cycles + 1;
    let comp = terms.ring(Part::Comp);
    let orbit = clock_trajectory(&shape);
    let mut out = Vec::new();
    let n_labels = rp1.pow(n as u32);
    for code in 0..n_labels {
        let mut labels = vec![0; n];
        let mut c = code;
        for l in labels.iter_mut().rev() {
            *l = c % rp1;
            c /= rp1;
        }
        if orbit.contains(&labels) {
            continue;
        }
        for head in 0..=n {
            for q in 0..1usize << n {
                let idx = basis.layout_index(head, &labels, &bits_of(n, q));
                if comp.column(idx).is_empty() {
                    out.push(idx);
                }
            }
        }
    }
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainKind {
    Uniform,
    Engineered,
}

/// Hopping chain on `l` sites with zero diagonal: uniform couplings `-1`, or
/// engineered couplings `-sqrt(n (l - n))` on bond `n`.
pub fn chain_model(l: usize, kind: ChainKind) -> Result<DMatrix<C64>> {
    if l < 2 {
        return Err(Error::Parameter(format!("chain needs at least 2 sites (got {l})")));
    }
    let mut m = DMatrix::zeros(l, l);
    for b in 1..l {
        let j = match kind {
            ChainKind::Uniform => -1.0,
            ChainKind::Engineered => -((b * (l - b)) as f64).sqrt(),
        };
        m[(b - 1, b)] = C64::new(j, 0.0);
        m[(b, b - 1)] = C64::new(j, 0.0);
    }
    Ok(m)
}

/// Path-graph Laplacian on `l` sites.
pub fn path_laplacian(l: usize) -> DMatrix<C64> {
    DMatrix::from_fn(l, l, |r, c| {
        if r == c {
            let deg = (r > 0) as usize + (r + 1 < l) as usize;
            C64::new(deg as f64, 0.0)
        } else if r.abs_diff(c) == 1 {
            C64::new(-1.0, 0.0)
        } else {
            ZERO
        }
    })
}

/// `(-1)^n sqrt(C(N, n)) / 2^(N/2)` for `n = 0..=N`.
pub fn binomial_vector(n: usize) -> Vec<f64> {
    let mut binom = 1.0f64;
    (0..=n)
        .map(|k| {
            if k > 0 {
                binom = binom * (n + 1 - k) as f64 / k as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * binom.sqrt() / 2f64.powf(n as f64 / 2.0)
        })
        .collect()
}

/// Exact spectral norm of a Hermitian matrix.
pub fn operator_norm(m: &DMatrix<C64>) -> f64 {
    let (vals, _) = dense_eigh(m);
    vals.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{ProblemShape, SweepSchedule};
    use std::f64::consts::PI;

    fn closed_form(l: usize) -> Vec<f64> {
        (0..l).map(|j| 2.0 * (1.0 - (PI * j as f64 / l as f64).cos())).collect()
    }

    #[test]
    fn zero_and_identity_operators() {
        let z: DMatrix<C64> = DMatrix::zeros(3, 3);
        let (l0, v, r) = ground_energy(&z, &SolverOptions::default()).unwrap();
        assert_eq!(l0, 0.0);
        assert!((norm(&v) - 1.0).abs() < 1e-12 && r == 0.0);
        let id: DMatrix<C64> = DMatrix::identity(5, 5);
        let rep = low_spectrum(&id, 3, &SolverOptions::default()).unwrap();
        assert_eq!(rep.eigenvalues, vec![1.0; 3]);
        let g = gap(&id, &SolverOptions::default()).unwrap();
        assert_eq!(g.gap, None);
        assert_eq!(g.degeneracy, 5);
    }

    #[test]
    fn two_site_laplacian() {
        let (l0, v, _) = ground_energy(&path_laplacian(2), &SolverOptions::default()).unwrap();
        assert!(l0.abs() < 1e-14);
        assert!((v[0].norm() - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((v[0] - v[1]).norm() < 1e-12);
    }

    #[test]
    fn laplacian_spectrum_and_gap() {
        let rep = low_spectrum(&path_laplacian(5), 5, &SolverOptions::default()).unwrap();
        for (a, b) in rep.eigenvalues.iter().zip(closed_form(5)) {
            assert!((a - b).abs() < 1e-10);
        }
        let g = gap(&path_laplacian(5), &SolverOptions::default()).unwrap();
        assert!((g.gap.unwrap() - 0.381966011250105).abs() < 1e-9);
        assert_eq!(g.degeneracy, 1);
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 60;
        let a = DMatrix::from_fn(n, n, |_, _| {
            C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        });
        let h = &a + a.adjoint();
        let dense = low_spectrum(&h, 4, &SolverOptions::default()).unwrap();
        let opts = SolverOptions {
            dense_threshold: 0,
            krylov_dim: 20,
            ..Default::default()
        };
        let it = low_spectrum(&h, 4, &opts).unwrap();
        assert_eq!(it.method, Method::Iterative);
        for i in 0..4 {
            assert!((dense.eigenvalues[i] - it.eigenvalues[i]).abs() < 1e-8);
            assert!(it.residuals[i] <= 1e-6 * h.norm_bound());
        }
    }

    #[test]
    fn lanczos_degenerate_ground_space() {
        // block-diagonal with a threefold ground level
        let mut m = path_laplacian(12);
        for i in 0..12 {
            m[(i, i)] += C64::new(1.0, 0.0);
        }
        let mut big = DMatrix::zeros(40, 40);
        for b in 0..3 {
            big.view_mut((12 * b, 12 * b), (12, 12)).copy_from(&m);
        }
        for i in 36..40 {
            big[(i, i)] = C64::new(10.0, 0.0);
        }
        let opts = SolverOptions {
            dense_threshold: 0,
            krylov_dim: 16,
            ..Default::default()
        };
        let rep = low_spectrum(&big, 5, &opts).unwrap();
        let base = 1.0 + closed_form(12)[0];
        let second = 1.0 + closed_form(12)[1];
        for i in 0..3 {
            assert!((rep.eigenvalues[i] - base).abs() < 1e-8, "{:?}", rep.eigenvalues);
        }
        assert!((rep.eigenvalues[3] - second).abs() < 1e-8);
        assert_eq!(rep.ground_degeneracy(), 3);
    }

    #[test]
    fn dense_rejects_non_hermitian() {
        let mut m: DMatrix<C64> = DMatrix::zeros(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(
            low_spectrum(&m, 1, &SolverOptions::default()),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn real_embedding_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = DMatrix::from_fn(6, 6, |_, _| {
            C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        });
        let h = &a + a.adjoint();
        let (v1, _) = dense_eigh(&h);
        let (v2, vecs) = real_embedding_eigh(&h);
        for (a, b) in v1.iter().zip(&v2) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(eig_residual(&h, &v2, &vecs) < 1e-10);
    }

    #[test]
    fn restrictions() {
        let h = CsrMatrix::from_triples(
            3,
            vec![(0, 0, C64::new(2.0, 0.0)), (0, 1, C64::new(0.5, 0.0)), (1, 0, C64::new(0.5, 0.0))],
        )
        .unwrap();
        assert_eq!(restrict_to_configs(&h, &[0])[(0, 0)], C64::new(2.0, 0.0));
        let e0: SparseVector = [(0, C64::new(1.0, 0.0))].into();
        let e1: SparseVector = [(1, C64::new(1.0, 0.0))].into();
        let r = restrict_to_vectors(|v| h.apply_sparse(v), &[e0.clone(), e1]).unwrap();
        assert_eq!(r[(0, 1)], C64::new(0.5, 0.0));
        let z = CsrMatrix::zeros(3);
        let r = restrict_to_vectors(|v| z.apply_sparse(v), &[e0.clone()]).unwrap();
        assert_eq!(r[(0, 0)], ZERO);
        assert!(restrict_to_vectors(|v| z.apply_sparse(v), &[e0.clone(), e0]).is_err());
    }

    #[test]
    fn frozen_scan_n2_r1() {
        let sh = ProblemShape::new(2, 1, 1).unwrap();
        let terms = BondTerms::build(&SweepSchedule::identity(sh));
        let frozen = detect_frozen(&terms);
        assert!(!frozen.is_empty());
        let comp = terms.ring(Part::Comp);
        let traj = clock_trajectory(&sh);
        for &c in &frozen {
            assert!(comp.column(c).is_empty());
            let cfg = terms.basis.decode_config(c);
            let heads = cfg.0.iter().filter(|s| **s == crate::basis::SpinState::Head).count();
            assert_eq!(heads, 1);
            let levels = terms.basis.config_levels(c);
            let head = levels.iter().position(|&l| l == 0).unwrap();
            let labels = terms.basis.labels_of(&levels, head).unwrap();
            assert!(!traj.contains(&labels));
        }
    }

    #[test]
    fn chain_models() {
        let u = chain_model(2, ChainKind::Uniform).unwrap();
        let (v, _) = dense_eigh(&u);
        assert!((v[0] + 1.0).abs() < 1e-14 && (v[1] - 1.0).abs() < 1e-14);
        assert!(chain_model(1, ChainKind::Uniform).is_err());
        for n in 1..=10 {
            let h = chain_model(n + 1, ChainKind::Engineered).unwrap();
            let b = binomial_vector(n);
            let x = DVector::from_iterator(n + 1, b.iter().map(|&a| C64::new(a, 0.0)));
            assert!((x.norm() - 1.0).abs() < 1e-12);
            let hx = &h * &x;
            // top of the equally spaced spectrum
            assert!((hx - &x * C64::new(n as f64, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn cluster_ids() {
        assert_eq!(cluster(&[0.0, 1e-9, 1.0, 1.0, 2.0], 1e-7), vec![0, 0, 1, 1, 2]);
    }
}
