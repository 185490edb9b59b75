//! Bond-local terms of the clock Hamiltonian and their translation-invariant
//! sum around the ring.
//!
//! Every term acts on an ordered bond (left site, right site) of two qudits,
//! i.e. on a `d^2`-dimensional space indexed by `left * d + right`. The ring
//! operator places the same bond term on all `N + 1` bonds `(i, i+1 mod N+1)`.

use std::collections::{BTreeMap, HashMap};

use crate::basis::{clock_trajectory, SpinBasis};
use crate::circuit::{visitation_order, ProblemShape, SweepSchedule};
use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, LinearOperator, SparseVector};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Sparse operator on one bond, stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTerm {
    d: usize,
    /// `cols[c]` = nonzero `(row, value)` pairs, sorted by row.
    cols: Vec<Vec<(usize, C64)>>,
}

impl LocalTerm {
    pub fn zero(d: usize) -> Self {
        Self {
            d,
            cols: vec![Vec::new(); d * d],
        }
    }

    fn from_map(d: usize, map: BTreeMap<(usize, usize), C64>) -> Self {
        let mut cols = vec![Vec::new(); d * d];
        // map is keyed (col, row) so rows come out sorted
        for ((c, r), v) in map {
            if v != ZERO {
                cols[c].push((r, v));
            }
        }
        Self { d, cols }
    }

    /// Local qudit dimension `d`.
    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn column(&self, col: usize) -> &[(usize, C64)] {
        &self.cols[col]
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    /// `(row, col, value)`, sorted by `(col, row)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.cols
            .iter()
            .enumerate()
            .flat_map(|(c, col)| col.iter().map(move |&(r, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        match self.cols[c].binary_search_by_key(&r, |e| e.0) {
            Ok(k) => self.cols[c][k].1,
            Err(_) => ZERO,
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries().all(|(r, c, _)| r == c)
    }

    pub fn hermiticity_residual(&self) -> f64 {
        self.entries()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// `sum_k w_k T_k`; all terms must share the local dimension.
    pub fn weighted_sum(d: usize, parts: &[(f64, &LocalTerm)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (w, t) in parts {
            if t.d != d {
                return Err(Error::Dimension {
                    expected: d,
                    got: t.d,
                });
            }
            if *w == 0.0 {
                continue;
            }
            for (r, c, v) in t.entries() {
                *map.entry((c, r)).or_insert(ZERO) += v * *w;
            }
        }
        Ok(Self::from_map(d, map))
    }

    pub fn to_csr(&self) -> CsrMatrix {
        CsrMatrix::from_triples(self.d * self.d, self.entries().collect())
            .expect("local term entries in range")
    }
}

impl LinearOperator for LocalTerm {
    fn dim(&self) -> usize {
        self.d * self.d
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|v| *v = ZERO);
        for (c, col) in self.cols.iter().enumerate() {
            if x[c] == ZERO {
                continue;
            }
            for &(r, v) in col {
                y[r] += v * x[c];
            }
        }
    }

    fn norm_bound(&self) -> f64 {
        let mut rows = vec![0.0; self.d * self.d];
        for (r, _, v) in self.entries() {
            rows[r] += v.norm();
        }
        rows.into_iter().fold(0.0, f64::max)
    }
}

struct TermBuilder<'a> {
    basis: &'a SpinBasis,
    map: BTreeMap<(usize, usize), C64>,
}

impl<'a> TermBuilder<'a> {
    fn new(basis: &'a SpinBasis) -> Self {
        Self {
            basis,
            map: BTreeMap::new(),
        }
    }

    fn add(&mut self, row: usize, col: usize, v: C64) {
        *self.map.entry((col, row)).or_insert(ZERO) += v;
    }

    fn diag(&mut self, idx: usize, v: f64) {
        self.add(idx, idx, C64::new(v, 0.0));
    }

    /// Bond index of data spins at positions `(pos, pos + 1)`.
    fn data_pair(&self, bits: (usize, usize), labels: (usize, usize), pos: usize) -> usize {
        let b = self.basis;
        b.data_level(bits.0, labels.0, pos) * b.dim + b.data_level(bits.1, labels.1, pos + 1)
    }

    fn finish(self) -> LocalTerm {
        LocalTerm::from_map(self.basis.dim, self.map)
    }
}

/// Slot index of `(m, n)` in visitation order.
fn step_index(shape: &ProblemShape, m: usize, n: usize) -> usize {
    visitation_order(shape)
        .iter()
        .position(|&s| s == (m, n))
        .expect("slot in range")
}

/// Clock computation term.
///
/// For each slot `(m, n)` with before-pattern `b` and after-pattern `a` on
/// bond `(n, n+1)`, adds the edge operator
/// `P_b + P_a - (|a><b| ⊗ U_{m,n} + h.c.)`, which is positive semidefinite.
pub fn build_h_comp_bond(schedule: &SweepSchedule) -> LocalTerm {
    let shape = *schedule.shape();
    let basis = SpinBasis::new(shape);
    let traj = clock_trajectory(&shape);
    let mut tb = TermBuilder::new(&basis);
    for (s, (_, n, u)) in schedule.steps().enumerate() {
        let before = (traj[s][n - 1], traj[s][n]);
        let after = (traj[s + 1][n - 1], traj[s + 1][n]);
        for q in 0..4 {
            let bits = (q >> 1, q & 1);
            let b = tb.data_pair(bits, before, n);
            let a = tb.data_pair(bits, after, n);
            tb.diag(b, 1.0);
            tb.diag(a, 1.0);
        }
        for q_in in 0..4 {
            for q_out in 0..4 {
                let v = u[(q_out, q_in)];
                if v == ZERO {
                    continue;
                }
                let col = tb.data_pair((q_in >> 1, q_in & 1), before, n);
                let row = tb.data_pair((q_out >> 1, q_out & 1), after, n);
                tb.add(row, col, -v);
                tb.add(col, row, -v.conj());
            }
        }
    }
    tb.finish()
}

/// Ancilla check: for each ancilla position `p`, penalizes bit 1 on qubit `p`
/// in the clock state just before slot `(1, p-1)`, the last state in which
/// qubit `p` still holds its input value.
pub fn build_h_input_bond(shape: &ProblemShape) -> LocalTerm {
    let basis = SpinBasis::new(*shape);
    let traj = clock_trajectory(shape);
    let mut tb = TermBuilder::new(&basis);
    for p in shape.ancillas() {
        let n = p - 1;
        let s = step_index(shape, 1, n);
        let before = (traj[s][n - 1], traj[s][n]);
        for left_bit in 0..2 {
            let idx = tb.data_pair((left_bit, 1), before, n);
            tb.diag(idx, 1.0);
        }
    }
    tb.finish()
}

/// Reject check: penalizes bit 1 on qubit 1 in the clock state right after
/// slot `(R, 1)`, the last gate that touches qubit 1.
pub fn build_h_output_bond(shape: &ProblemShape) -> LocalTerm {
    let basis = SpinBasis::new(*shape);
    let traj = clock_trajectory(shape);
    let mut tb = TermBuilder::new(&basis);
    let s = step_index(shape, shape.n_cycles, 1);
    let after = (traj[s + 1][0], traj[s + 1][1]);
    for right_bit in 0..2 {
        let idx = tb.data_pair((1, right_bit), after, 1);
        tb.diag(idx, 1.0);
    }
    tb.finish()
}

/// `-|Head><Head|` on the left site of the bond.
pub fn build_head_reward_bond(shape: &ProblemShape) -> LocalTerm {
    let basis = SpinBasis::new(*shape);
    let d = basis.dim;
    let mut tb = TermBuilder::new(&basis);
    for r in 0..d {
        tb.diag(r, -1.0);
    }
    tb.finish()
}

/// Layout penalties: `+2` for data at position `< N` followed by Head,
/// `+2` for Head followed by Head, `+1` for Head followed by data not at
/// position 1, `+1` for data-data pairs whose positions do not increment by one.
pub fn build_form_penalty_bond(shape: &ProblemShape) -> LocalTerm {
    let basis = SpinBasis::new(*shape);
    let d = basis.dim;
    let n = shape.n_qubits;
    let mut tb = TermBuilder::new(&basis);
    let pos_of = |level: usize| match basis.decode_unchecked(level) {
        crate::basis::SpinState::Head => None,
        crate::basis::SpinState::Data { pos, .. } => Some(pos),
    };
    for l in 0..d {
        for r in 0..d {
            let penalty = match (pos_of(l), pos_of(r)) {
                (None, None) => 2.0,
                (Some(z), None) if z < n => 2.0,
                (Some(_), None) => 0.0,
                (None, Some(z)) if z != 1 => 1.0,
                (None, Some(_)) => 0.0,
                (Some(z), Some(zr)) if zr != z + 1 => 1.0,
                (Some(_), Some(_)) => 0.0,
            };
            if penalty != 0.0 {
                tb.diag(l * d + r, penalty);
            }
        }
    }
    tb.finish()
}

/// Head reward plus layout penalties.
pub fn build_h_form_bond(shape: &ProblemShape) -> LocalTerm {
    let d = SpinBasis::new(*shape).dim;
    LocalTerm::weighted_sum(
        d,
        &[
            (1.0, &build_head_reward_bond(shape)),
            (1.0, &build_form_penalty_bond(shape)),
        ],
    )
    .expect("same local dimension")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Part {
    Input,
    Form,
    Comp,
    Output,
}

impl Part {
    pub const ALL: [Part; 4] = [Part::Input, Part::Form, Part::Comp, Part::Output];

    pub fn name(&self) -> &'static str {
        match self {
            Part::Input => "H_input",
            Part::Form => "H_form",
            Part::Comp => "H_comp",
            Part::Output => "H_output",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().trim_start_matches("h_") {
            "input" => Ok(Part::Input),
            "form" => Ok(Part::Form),
            "comp" => Ok(Part::Comp),
            "output" => Ok(Part::Output),
            _ => Err(Error::Parameter(format!("unknown part `{s}`"))),
        }
    }
}

/// The four bond terms of one schedule.
#[derive(Debug, Clone)]
pub struct BondTerms {
    pub basis: SpinBasis,
    pub input: LocalTerm,
    pub form: LocalTerm,
    pub comp: LocalTerm,
    pub output: LocalTerm,
}

impl BondTerms {
    pub fn build(schedule: &SweepSchedule) -> Self {
        let shape = schedule.shape();
        Self {
            basis: SpinBasis::new(*shape),
            input: build_h_input_bond(shape),
            form: build_h_form_bond(shape),
            comp: build_h_comp_bond(schedule),
            output: build_h_output_bond(shape),
        }
    }

    pub fn part(&self, p: Part) -> &LocalTerm {
        match p {
            Part::Input => &self.input,
            Part::Form => &self.form,
            Part::Comp => &self.comp,
            Part::Output => &self.output,
        }
    }

    /// One part alone, unweighted.
    pub fn ring(&self, p: Part) -> RingOperator {
        RingOperator::from_bond(self.basis, self.part(p).clone(), p.name().to_string())
    }

    /// `J1 H_input + J2 (alpha H_form + H_comp) + w_out H_output`, restricted to `parts`.
    pub fn assemble(&self, parts: &[Part], k: &CouplingConstants) -> Result<RingOperator> {
        assemble(
            self.basis,
            &parts.iter().map(|&p| (p, self.part(p))).collect::<Vec<_>>(),
            k,
        )
    }

    pub fn total(&self, k: &CouplingConstants) -> RingOperator {
        self.assemble(&Part::ALL, k).expect("same local dimension")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingConstants {
    pub j1: f64,
    pub j2: f64,
    pub alpha: f64,
    /// Weight on `H_output`, `R (N - 1)` by default.
    pub w_out: f64,
}

impl CouplingConstants {
    pub fn new(j1: f64, j2: f64, alpha: f64, shape: &ProblemShape) -> Result<Self> {
        let k = Self {
            j1,
            j2,
            alpha,
            w_out: shape.total_steps() as f64,
        };
        for (name, v) in [("J1", j1), ("J2", j2), ("alpha", alpha), ("w_out", k.w_out)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be > 0 (got {v})")));
            }
        }
        Ok(k)
    }

    pub fn weight(&self, p: Part) -> f64 {
        match p {
            Part::Input => self.j1,
            Part::Form => self.j2 * self.alpha,
            Part::Comp => self.j2,
            Part::Output => self.w_out,
        }
    }
}

/// Sums each bond term over all ring bonds, scaled by its constant.
pub fn assemble(
    basis: SpinBasis,
    parts: &[(Part, &LocalTerm)],
    k: &CouplingConstants,
) -> Result<RingOperator> {
    let weighted: Vec<(f64, &LocalTerm)> = parts.iter().map(|(p, t)| (k.weight(*p), *t)).collect();
    let bond = LocalTerm::weighted_sum(basis.dim, &weighted)?;
    let names: Vec<String> = parts
        .iter()
        .map(|(p, _)| format!("{}*{}", k.weight(*p), p.name()))
        .collect();
    Ok(RingOperator::from_bond(basis, bond, names.join(" + ")))
}

/// Translation-invariant sum `sum_i h_{i,i+1}` over the ring.
#[derive(Debug, Clone)]
pub struct RingOperator {
    pub basis: SpinBasis,
    pub bond: LocalTerm,
    pub provenance: String,
}

/// Refuse full assembly beyond this many basis states by default.
pub const DEFAULT_DIM_CAP: usize = 1 << 24;

impl RingOperator {
    pub fn from_bond(basis: SpinBasis, bond: LocalTerm, provenance: String) -> Self {
        Self {
            basis,
            bond,
            provenance,
        }
    }

    /// Column `H|c>` as merged `(row, value)` pairs sorted by row.
    pub fn column(&self, config: usize) -> Vec<(usize, C64)> {
        let levels = self.basis.config_levels(config);
        let mut acc: BTreeMap<usize, C64> = BTreeMap::new();
        self.scatter(&levels, C64::new(1.0, 0.0), &mut acc);
        acc.into_iter().filter(|(_, v)| *v != ZERO).collect()
    }

    fn scatter(&self, levels: &[usize], amp: C64, acc: &mut BTreeMap<usize, C64>) {
        let d = self.basis.dim;
        let ns = levels.len();
        let mut next = levels.to_vec();
        for i in 0..ns {
            let j = (i + 1) % ns;
            for &(row, v) in self.bond.column(levels[i] * d + levels[j]) {
                next[i] = row / d;
                next[j] = row % d;
                *acc.entry(self.basis.config_index(&next)).or_insert(ZERO) += v * amp;
                next[i] = levels[i];
                next[j] = levels[j];
            }
        }
    }

    /// `H v` without assembling `H`.
    pub fn apply_sparse(&self, v: &SparseVector) -> SparseVector {
        let mut acc = BTreeMap::new();
        for (&c, &amp) in v {
            if amp != ZERO {
                self.scatter(&self.basis.config_levels(c), amp, &mut acc);
            }
        }
        acc.retain(|_, z| *z != ZERO);
        acc
    }

    pub fn dim(&self) -> Option<usize> {
        self.basis.ring_dim()
    }

    /// Full sparse assembly; refuses dimensions above `cap`.
    pub fn to_csr(&self, cap: usize) -> Result<CsrMatrix> {
        let dim = self.dim().filter(|&n| n <= cap).ok_or_else(|| Error::TooLarge {
            dim: (self.basis.dim as u128).pow(self.basis.n_sites() as u32),
            cap: cap as u128,
        })?;
        let mut triples = Vec::new();
        for c in 0..dim {
            for (r, v) in self.column(c) {
                triples.push((r, c, v));
            }
        }
        CsrMatrix::from_triples(dim, triples)
    }

    /// Smallest and largest eigenvalue of a diagonal ring operator, by a
    /// max-plus transfer pass around the ring.
    pub fn diagonal_extremes(&self) -> Result<(f64, f64)> {
        if !self.bond.is_diagonal() {
            return Err(Error::Parameter("bond term is not diagonal".into()));
        }
        let d = self.basis.dim;
        let ns = self.basis.n_sites();
        let w: Vec<f64> = (0..d * d).map(|i| self.bond.get(i, i).re).collect();
        let cycle_extreme = |sign: f64| {
            let mut best = f64::NEG_INFINITY;
            for s in 0..d {
                let mut v: Vec<f64> = (0..d).map(|b| sign * w[s * d + b]).collect();
                for _ in 0..ns - 2 {
                    v = (0..d)
                        .map(|b| {
                            (0..d).map(|a| v[a] + sign * w[a * d + b]).fold(f64::NEG_INFINITY, f64::max)
                        })
                        .collect();
                }
                let close = (0..d).map(|a| v[a] + sign * w[a * d + s]).fold(f64::NEG_INFINITY, f64::max);
                best = best.max(close);
            }
            sign * best
        };
        Ok((cycle_extreme(-1.0), cycle_extreme(1.0)))
    }
}

/// Cyclic shift moving the content of site `i` to site `i + 1 mod (N+1)`.
#[derive(Debug, Clone, Copy)]
pub struct ShiftOperator {
    pub basis: SpinBasis,
}

pub fn build_shift_operator(basis: SpinBasis) -> ShiftOperator {
    ShiftOperator { basis }
}

impl ShiftOperator {
    pub fn image(&self, config: usize) -> usize {
        let mut levels = self.basis.config_levels(config);
        levels.rotate_right(1);
        self.basis.config_index(&levels)
    }

    pub fn preimage(&self, config: usize) -> usize {
        let mut levels = self.basis.config_levels(config);
        levels.rotate_left(1);
        self.basis.config_index(&levels)
    }

    pub fn apply_sparse(&self, v: &SparseVector) -> SparseVector {
        v.iter().map(|(&c, &z)| (self.image(c), z)).collect()
    }

    pub fn to_csr(&self, cap: usize) -> Result<CsrMatrix> {
        let dim = self.basis.ring_dim().filter(|&n| n <= cap).ok_or(Error::TooLarge {
            dim: (self.basis.dim as u128).pow(self.basis.n_sites() as u32),
            cap: cap as u128,
        })?;
        CsrMatrix::from_triples(
            dim,
            (0..dim).map(|c| (self.image(c), c, C64::new(1.0, 0.0))).collect(),
        )
    }
}

/// `max |(S H - H S)_{rc}|` for the permutation `S`.
pub fn check_translation_invariance(h: &CsrMatrix, s: &ShiftOperator) -> f64 {
    // (SH - HS)_{s(r), c} = H_{r,c} - H_{s(r), s(c)}
    let fwd = h
        .triples()
        .map(|(r, c, v)| (v - h.get(s.image(r), s.image(c))).norm());
    let back = h
        .triples()
        .map(|(r, c, v)| (v - h.get(s.preimage(r), s.preimage(c))).norm());
    fwd.chain(back).fold(0.0, f64::max)
}

/// Diagonal of a ring operator on a set of configurations (cached lookups).
pub fn diagonal_on(h: &RingOperator, configs: &[usize]) -> HashMap<usize, f64> {
    configs
        .iter()
        .map(|&c| {
            let v = h
                .column(c)
                .into_iter()
                .find(|(r, _)| *r == c)
                .map_or(0.0, |(_, v)| v.re);
            (c, v)
        })
        .collect()
}
