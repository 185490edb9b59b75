//! Step-by-step history states of a sweep schedule, tracked on the clock
//! orbit (2^N amplitudes per step) and embedded into the ring space on demand.

use crate::basis::{clock_trajectory, SpinBasis};
use crate::circuit::{Gate, ProblemShape, SweepSchedule};
use crate::error::{Error, Result};
use crate::hamiltonian::RingOperator;
use crate::sparse::{sparse_dot, sparse_norm, SparseVector};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Qubit register state at one clock step.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    /// Clock labels by position.
    pub labels: Vec<usize>,
    /// Amplitudes indexed by bit string, qubit 1 most significant.
    pub amps: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryState {
    pub shape: ProblemShape,
    pub head_site: usize,
    pub snapshots: Vec<Snapshot>,
}

/// Bit string of a register index, qubit 1 first.
pub fn bits_of(n: usize, q: usize) -> Vec<u8> {
    (0..n).map(|j| ((q >> (n - 1 - j)) & 1) as u8).collect()
}

/// Register index of a bit string, qubit 1 most significant.
pub fn index_of(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| 2 * acc + b as usize)
}

/// Applies `u` to qubits `(n, n+1)` of an `N`-qubit register in place.
pub fn apply_gate(amps: &mut [C64], n_qubits: usize, n: usize, u: &Gate) {
    let hi = 1usize << (n_qubits - n);
    let lo = 1usize << (n_qubits - n - 1);
    for base in 0..amps.len() {
        if base & (hi | lo) != 0 {
            continue;
        }
        let idx = [base, base | lo, base | hi, base | hi | lo];
        let old = idx.map(|i| amps[i]);
        for (r, &i) in idx.iter().enumerate() {
            amps[i] = (0..4).map(|c| u[(r, c)] * old[c]).sum();
        }
    }
}

pub fn simulate_history(schedule: &SweepSchedule, x: &[u8], head_site: usize) -> Result<HistoryState> {
    let shape = *schedule.shape();
    let n = shape.n_qubits;
    if x.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: x.len(),
        });
    }
    if let Some(b) = x.iter().find(|&&b| b > 1) {
        return Err(Error::OutOfRange(format!("bit {b}")));
    }
    if head_site > n {
        return Err(Error::OutOfRange(format!("head site {head_site} > {n}")));
    }
    let traj = clock_trajectory(&shape);
    let mut amps = vec![ZERO; 1 << n];
    amps[index_of(x)] = C64::new(1.0, 0.0);
    let mut snapshots = Vec::with_capacity(traj.len());
    snapshots.push(Snapshot {
        labels: traj[0].clone(),
        amps: amps.clone(),
    });
    for (s, (_, bond, u)) in schedule.steps().enumerate() {
        apply_gate(&mut amps, n, bond, u);
        snapshots.push(Snapshot {
            labels: traj[s + 1].clone(),
            amps: amps.clone(),
        });
    }
    Ok(HistoryState {
        shape,
        head_site,
        snapshots,
    })
}

impl Snapshot {
    pub fn to_sparse(&self, basis: &SpinBasis, head_site: usize) -> SparseVector {
        let n = basis.shape.n_qubits;
        self.amps
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != ZERO)
            .map(|(q, &a)| (basis.layout_index(head_site, &self.labels, &bits_of(n, q)), a))
            .collect()
    }
}

impl HistoryState {
    pub fn basis(&self) -> SpinBasis {
        SpinBasis::new(self.shape)
    }

    pub fn snapshot_vectors(&self) -> Vec<SparseVector> {
        let basis = self.basis();
        self.snapshots
            .iter()
            .map(|s| s.to_sparse(&basis, self.head_site))
            .collect()
    }

    /// The uniform superposition over all snapshots.
    pub fn vector(&self) -> SparseVector {
        build_history_state(&self.snapshot_vectors()).expect("orbit snapshots are orthonormal")
    }

    /// Probability of reading 1 on qubit 1 after the last step.
    pub fn reject_probability(&self) -> f64 {
        let n = self.shape.n_qubits;
        let last = &self.snapshots.last().expect("at least one snapshot").amps;
        last.iter()
            .enumerate()
            .filter(|(q, _)| (q >> (n - 1)) & 1 == 1)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

fn orthonormality_defect(vs: &[SparseVector]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..vs.len() {
        for j in i..vs.len() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((sparse_dot(&vs[i], &vs[j]) - target).norm());
        }
    }
    worst
}

fn uniform_sum(vs: &[SparseVector]) -> SparseVector {
    let w = 1.0 / (vs.len() as f64).sqrt();
    let mut out = SparseVector::new();
    for v in vs {
        for (&i, &a) in v {
            *out.entry(i).or_insert(ZERO) += a * w;
        }
    }
    out
}

/// `(1/sqrt(T+1)) sum_t |eta_t>`.
pub fn build_history_state(snapshots: &[SparseVector]) -> Result<SparseVector> {
    if snapshots.is_empty() {
        return Err(Error::Parameter("no snapshots".into()));
    }
    let defect = orthonormality_defect(snapshots);
    if defect > 1e-10 {
        return Err(Error::NotOrthonormal(defect));
    }
    Ok(uniform_sum(snapshots))
}

/// `(1/sqrt(N+1)) sum_k |eta^(k)>` over all head sites.
pub fn symmetrize_over_head(states: &[HistoryState]) -> Result<SparseVector> {
    let first = states
        .first()
        .ok_or_else(|| Error::Parameter("no history states".into()))?;
    let ns = first.shape.n_sites();
    if states.len() != ns {
        return Err(Error::Dimension {
            expected: ns,
            got: states.len(),
        });
    }
    let mut heads: Vec<usize> = states.iter().map(|s| s.head_site).collect();
    heads.sort_unstable();
    if states.iter().any(|s| s.shape != first.shape) || heads != (0..ns).collect::<Vec<_>>() {
        return Err(Error::Shape("history states must share a shape and cover every head site".into()));
    }
    let vs: Vec<SparseVector> = states.iter().map(HistoryState::vector).collect();
    let defect = orthonormality_defect(&vs);
    if defect > 1e-10 {
        return Err(Error::NotOrthonormal(defect));
    }
    Ok(uniform_sum(&vs))
}

/// One history state per head site, same input.
pub fn all_head_translates(schedule: &SweepSchedule, x: &[u8]) -> Result<Vec<HistoryState>> {
    (0..schedule.shape().n_sites())
        .map(|k| simulate_history(schedule, x, k))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationReport {
    /// `(name, real part, imaginary residual)`.
    pub rows: Vec<(String, f64, f64)>,
}

impl ExpectationReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.0 == name).map(|r| r.1)
    }

    pub fn to_text(&self) -> String {
        self.rows
            .iter()
            .map(|(n, v, i)| format!("{n} {v:.12} {i:.3e}\n"))
            .collect()
    }
}

/// `<state|P|state>` for each named operator.
pub fn expectations(state: &SparseVector, parts: &[(&str, &RingOperator)]) -> Result<ExpectationReport> {
    let mut rows = Vec::with_capacity(parts.len());
    let nrm = sparse_norm(state);
    for (name, op) in parts {
        if let Some(dim) = op.dim() {
            if let Some((&last, _)) = state.iter().next_back() {
                if last >= dim {
                    return Err(Error::Dimension {
                        expected: dim,
                        got: last + 1,
                    });
                }
            }
        }
        let z = sparse_dot(state, &op.apply_sparse(state)) / (nrm * nrm);
        rows.push((name.to_string(), z.re, z.im.abs()));
    }
    Ok(ExpectationReport { rows })
}
