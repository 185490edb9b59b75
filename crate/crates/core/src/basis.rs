//! Qudit levels, ring configurations and the legal clock orbit.
//!
//! Each qudit is either the head marker or a data level `(bit, cycle, position)`.
//! Levels are encoded as `Head -> 0`, `Data(x, y, z) -> 1 + x + 2 (y + (R+1)(z-1))`,
//! and a ring configuration of `N + 1` sites as the base-`d` number with
//! site 0 most significant.
//!
//! The clock lives in the cycle labels. End spins (positions 1 and N) count
//! the steps taken on their end bond; interior spins rest at label 0 and hold
//! the cycle number only while the sweep passes through them. Every step
//! changes both spins of its bond, so each 2-local before/after pattern
//! appears in exactly one state of the orbit.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use crate::circuit::{visitation_order, Direction, ProblemShape};
use crate::error::{Error, Result};
use crate::hamiltonian::LocalTerm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpinState {
    Head,
    Data { bit: u8, cycle: usize, pos: usize },
}

impl SpinState {
    pub fn data(bit: u8, cycle: usize, pos: usize) -> Self {
        SpinState::Data { bit, cycle, pos }
    }
}

impl fmt::Display for SpinState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpinState::Head => f.write_str("H"),
            SpinState::Data { bit, cycle, pos } => write!(f, "D({bit},{cycle},{pos})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpinBasis {
    pub shape: ProblemShape,
    /// Local dimension `2 N (R + 1) + 1`.
    pub dim: usize,
}

impl SpinBasis {
    pub fn new(shape: ProblemShape) -> Self {
        Self {
            shape,
            dim: 2 * shape.n_qubits * (shape.n_cycles + 1) + 1,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.shape.n_sites()
    }

    /// `d^(N+1)`, or `None` on overflow.
    pub fn ring_dim(&self) -> Option<usize> {
        (0..self.n_sites()).try_fold(1usize, |acc, _| acc.checked_mul(self.dim))
    }

    pub fn encode(&self, s: SpinState) -> Result<usize> {
        match s {
            SpinState::Head => Ok(0),
            SpinState::Data { bit, cycle, pos } => {
                let (n, r) = (self.shape.n_qubits, self.shape.n_cycles);
                if bit > 1 || cycle > r || pos < 1 || pos > n {
                    return Err(Error::OutOfRange(format!(
                        "{s} outside bit 0..=1, cycle 0..={r}, position 1..={n}"
                    )));
                }
                Ok(1 + bit as usize + 2 * (cycle + (r + 1) * (pos - 1)))
            }
        }
    }

    pub fn decode(&self, index: usize) -> Result<SpinState> {
        if index >= self.dim {
            return Err(Error::OutOfRange(format!(
                "level {index} >= local dimension {}",
                self.dim
            )));
        }
        Ok(self.decode_unchecked(index))
    }

    pub(crate) fn decode_unchecked(&self, index: usize) -> SpinState {
        if index == 0 {
            return SpinState::Head;
        }
        let k = index - 1;
        let rp1 = self.shape.n_cycles + 1;
        SpinState::Data {
            bit: (k % 2) as u8,
            cycle: (k / 2) % rp1,
            pos: (k / 2) / rp1 + 1,
        }
    }

    /// Level index of a data spin (no range checks).
    pub(crate) fn data_level(&self, bit: usize, cycle: usize, pos: usize) -> usize {
        1 + bit + 2 * (cycle + (self.shape.n_cycles + 1) * (pos - 1))
    }

    pub fn config_index(&self, levels: &[usize]) -> usize {
        levels.iter().fold(0, |acc, &l| acc * self.dim + l)
    }

    pub fn config_levels(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.n_sites()];
        for slot in out.iter_mut().rev() {
            *slot = index % self.dim;
            index /= self.dim;
        }
        out
    }

    pub fn encode_config(&self, c: &RingConfig) -> Result<usize> {
        if c.0.len() != self.n_sites() {
            return Err(Error::Dimension {
                expected: self.n_sites(),
                got: c.0.len(),
            });
        }
        let levels = c.0.iter().map(|&s| self.encode(s)).collect::<Result<Vec<_>>>()?;
        Ok(self.config_index(&levels))
    }

    pub fn decode_config(&self, index: usize) -> RingConfig {
        RingConfig(
            self.config_levels(index)
                .into_iter()
                .map(|l| self.decode_unchecked(l))
                .collect(),
        )
    }

    /// Configuration with the Head at `head_site` and, clockwise after it,
    /// positions `1..=N` carrying `bits[j]` and `labels[j]`.
    pub fn layout_index(&self, head_site: usize, labels: &[usize], bits: &[u8]) -> usize {
        let ns = self.n_sites();
        let mut levels = vec![0; ns];
        for j in 0..self.shape.n_qubits {
            levels[(head_site + 1 + j) % ns] = self.data_level(bits[j] as usize, labels[j], j + 1);
        }
        self.config_index(&levels)
    }

    /// Reads the clock labels of a configuration whose layout is legal
    /// with the Head at `head_site`.
    pub(crate) fn labels_of(&self, levels: &[usize], head_site: usize) -> Option<Vec<usize>> {
        let ns = self.n_sites();
        if levels[head_site] != 0 {
            return None;
        }
        (0..self.shape.n_qubits)
            .map(|j| match self.decode_unchecked(levels[(head_site + 1 + j) % ns]) {
                SpinState::Data { cycle, pos, .. } if pos == j + 1 => Some(cycle),
                _ => None,
            })
            .collect()
    }
}

/// `N + 1` spins around the ring, indexed by site.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RingConfig(pub Vec<SpinState>);

impl fmt::Display for RingConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Input configuration: Head at site `head_site`, then `Data(x_j, 0, j)`.
pub fn initial_config(basis: &SpinBasis, x: &[u8], head_site: usize) -> Result<RingConfig> {
    let n = basis.shape.n_qubits;
    if n < 2 {
        return Err(Error::Shape("N >= 2 required".into()));
    }
    if x.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: x.len(),
        });
    }
    if head_site > n {
        return Err(Error::OutOfRange(format!("head site {head_site} > {n}")));
    }
    let ns = n + 1;
    let mut sites = vec![SpinState::Head; ns];
    for (j, &bit) in x.iter().enumerate() {
        if bit > 1 {
            return Err(Error::OutOfRange(format!("bit {bit}")));
        }
        sites[(head_site + 1 + j) % ns] = SpinState::data(bit, 0, j + 1);
    }
    Ok(RingConfig(sites))
}

/// Clock labels (indexed by position - 1) for every step `t = 0..=T`.
pub fn clock_trajectory(shape: &ProblemShape) -> Vec<Vec<usize>> {
    let n = shape.n_qubits;
    let mut labels = vec![0usize; n];
    let mut out = Vec::with_capacity(shape.total_steps() + 1);
    out.push(labels.clone());
    for (m, b) in visitation_order(shape) {
        let (left, right) = (b - 1, b);
        match Direction::of_cycle(m) {
            Direction::LeftToRight => {
                labels[left] = if b == 1 { m } else { 0 };
                labels[right] = m;
            }
            Direction::RightToLeft => {
                labels[right] = if b + 1 == n { m } else { 0 };
                labels[left] = m;
            }
        }
        out.push(labels.clone());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClockDescriptor {
    /// Step index `t` in `0..=T`.
    pub step: usize,
    /// Cycle of the last applied slot (0 before the first step).
    pub cycle: usize,
    /// Bond of the last applied slot (0 before the first step).
    pub wall: usize,
    /// Clock labels by position.
    pub labels: Vec<usize>,
}

/// Closure of the all-zero clock under the off-diagonal part of `h_comp`,
/// ordered along the path. Errors if the closure is not a simple path.
pub fn orbit_closure(basis: &SpinBasis, h_comp: &LocalTerm) -> Result<Vec<ClockDescriptor>> {
    let shape = basis.shape;
    if shape.n_cycles < 1 {
        return Err(Error::Shape("n_cycles must be ≥1".into()));
    }
    let n = shape.n_qubits;
    let ns = n + 1;
    let d = basis.dim;
    let zeros = vec![0u8; n];

    let neighbours = |labels: &[usize]| -> Result<Vec<Vec<usize>>> {
        let levels = basis.config_levels(basis.layout_index(0, labels, &zeros));
        let mut out: Vec<Vec<usize>> = Vec::new();
        for i in 0..ns {
            let j = (i + 1) % ns;
            for &(row, _) in h_comp.column(levels[i] * d + levels[j]) {
                let mut next = levels.clone();
                next[i] = row / d;
                next[j] = row % d;
                let nl = basis.labels_of(&next, 0).ok_or_else(|| {
                    Error::OrbitNotPath("transition leaves the legal layout".into())
                })?;
                if nl != labels && !out.contains(&nl) {
                    out.push(nl);
                }
            }
        }
        Ok(out)
    };

    let start = vec![0usize; n];
    let mut order = vec![start.clone()];
    let mut seen: HashSet<Vec<usize>> = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    let mut degree: HashMap<Vec<usize>, usize> = HashMap::new();
    while let Some(cur) = queue.pop_front() {
        let nb = neighbours(&cur)?;
        degree.insert(cur.clone(), nb.len());
        if nb.len() > 2 {
            return Err(Error::OrbitNotPath(format!("{:?} has {} neighbours", cur, nb.len())));
        }
        for x in nb {
            if seen.insert(x.clone()) {
                order.push(x.clone());
                queue.push_back(x);
            }
        }
    }
    let t = shape.total_steps();
    if order.len() != t + 1 {
        return Err(Error::OrbitNotPath(format!(
            "closure has {} states, expected T+1 = {}",
            order.len(),
            t + 1
        )));
    }
    if t > 0 && (degree[&order[0]] != 1 || degree[&order[t]] != 1) {
        return Err(Error::OrbitNotPath("path endpoints have wrong degree".into()));
    }
    // BFS from an endpoint of a path visits it in order
    let slots = visitation_order(&shape);
    Ok(order
        .into_iter()
        .enumerate()
        .map(|(step, labels)| {
            let (cycle, wall) = if step == 0 { (0, 0) } else { slots[step - 1] };
            ClockDescriptor {
                step,
                cycle,
                wall,
                labels,
            }
        })
        .collect())
}

/// Legal orbit for `basis`, generated from the identity-schedule `h_comp`.
pub fn enumerate_legal_orbit(basis: &SpinBasis) -> Result<Vec<ClockDescriptor>> {
    let sched = crate::circuit::SweepSchedule::identity(basis.shape);
    let h = crate::hamiltonian::build_h_comp_bond(&sched);
    orbit_closure(basis, &h)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Number of Heads differs from one.
    HeadCount(usize),
    /// A Head preceded by another Head or by data at position `< N` (site index).
    HeadAdjacency { site: usize },
    /// Data at position `from` followed by data at position `to != from + 1`.
    PositionIncrement { from: usize, to: usize },
    /// Layout is fine but the clock labels are not in the orbit.
    ClockPattern(Vec<usize>),
}

/// Checks a configuration against the form rules and the clock orbit.
pub fn is_legal(basis: &SpinBasis, config: &RingConfig) -> (bool, Vec<Violation>) {
    let sites = &config.0;
    let ns = sites.len();
    let n = basis.shape.n_qubits;
    let mut v = Vec::new();
    let heads: Vec<usize> = (0..ns).filter(|&i| sites[i] == SpinState::Head).collect();
    if heads.len() != 1 {
        v.push(Violation::HeadCount(heads.len()));
    }
    if heads.len() >= 2 {
        for &h in &heads {
            match sites[(h + ns - 1) % ns] {
                SpinState::Head => v.push(Violation::HeadAdjacency { site: h }),
                SpinState::Data { pos, .. } if pos < n => {
                    v.push(Violation::HeadAdjacency { site: h })
                }
                _ => {}
            }
        }
    }
    for i in 0..ns {
        if let (SpinState::Data { pos: a, .. }, SpinState::Data { pos: b, .. }) =
            (sites[i], sites[(i + 1) % ns])
        {
            if b != a + 1 {
                v.push(Violation::PositionIncrement { from: a, to: b });
            }
        }
    }
    if v.is_empty() && ns == basis.n_sites() {
        let h = heads[0];
        let labels: Vec<usize> = (0..n)
            .map(|j| match sites[(h + 1 + j) % ns] {
                SpinState::Data { cycle, .. } => cycle,
                SpinState::Head => unreachable!(),
            })
            .collect();
        if !clock_trajectory(&basis.shape).contains(&labels) {
            v.push(Violation::ClockPattern(labels));
        }
    }
    (v.is_empty(), v)
}
