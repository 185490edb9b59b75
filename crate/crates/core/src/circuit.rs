//! Verifier circuits as boustrophedon sweep schedules.
//!
//! A schedule holds one two-qubit unitary per slot `(m, n)`: cycle `m` in
//! `1..=R`, bond `n` in `1..N` acting on qubits `(n, n+1)`. Odd cycles visit
//! bonds left to right, even cycles right to left.

use std::fmt::{self, Write as _};

use nalgebra::Matrix4;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::C64;

/// Two-qubit gate, row-major over `|q_n q_{n+1}>` with index `2 q_n + q_{n+1}`.
pub type Gate = Matrix4<C64>;

/// Tolerance on `max |U^dag U - 1|` for accepting a gate.
pub const UNITARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProblemShape {
    /// Number of computational qubits `N`.
    pub n_qubits: usize,
    /// Length `M` of the input string; qubits `M+1..=N` are ancillas.
    pub input_len: usize,
    /// Number of sweep cycles `R`.
    pub n_cycles: usize,
}

impl ProblemShape {
    pub fn new(n_qubits: usize, input_len: usize, n_cycles: usize) -> Result<Self> {
        let shape = Self {
            n_qubits,
            input_len,
            n_cycles,
        };
        if let Some(msg) = shape.violations().into_iter().next() {
            return Err(Error::Shape(msg));
        }
        Ok(shape)
    }

    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n_qubits < 2 {
            out.push(format!("n_qubits must be >=2 (got {})", self.n_qubits));
        }
        if self.input_len < 1 || self.input_len > self.n_qubits {
            out.push(format!(
                "input_len must lie in 1..={} (got {})",
                self.n_qubits, self.input_len
            ));
        }
        if self.n_cycles < 1 {
            out.push("n_cycles must be ≥1".to_string());
        }
        out
    }

    /// Number of bonds `N - 1`.
    pub fn n_bonds(&self) -> usize {
        self.n_qubits.saturating_sub(1)
    }

    /// Total number of clock steps `T = R (N - 1)`.
    pub fn total_steps(&self) -> usize {
        self.n_cycles * self.n_bonds()
    }

    /// Number of ring sites, `N + 1`.
    pub fn n_sites(&self) -> usize {
        self.n_qubits + 1
    }

    /// Ancilla positions `M+1..=N` (1-based).
    pub fn ancillas(&self) -> std::ops::RangeInclusive<usize> {
        self.input_len + 1..=self.n_qubits
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    LeftToRight,
    RightToLeft,
}

impl Direction {
    /// Sweep direction of cycle `m`: odd cycles go right, even cycles go left.
    pub fn of_cycle(m: usize) -> Self {
        if m % 2 == 1 {
            Direction::LeftToRight
        } else {
            Direction::RightToLeft
        }
    }
}

/// Bonds visited during cycle `m` on `n_qubits` qubits, in order.
pub fn sweep_order(n_qubits: usize, m: usize) -> Vec<usize> {
    let bonds = 1..n_qubits;
    match Direction::of_cycle(m) {
        Direction::LeftToRight => bonds.collect(),
        Direction::RightToLeft => bonds.rev().collect(),
    }
}

/// All slots `(m, n)` in the order the clock visits them. Length `T`.
pub fn visitation_order(shape: &ProblemShape) -> Vec<(usize, usize)> {
    (1..=shape.n_cycles)
        .flat_map(|m| sweep_order(shape.n_qubits, m).into_iter().map(move |n| (m, n)))
        .collect()
}

pub fn identity_gate() -> Gate {
    Gate::identity()
}

/// `max |U^dag U - 1|` over entries.
pub fn unitarity_deviation(u: &Gate) -> f64 {
    (u.adjoint() * u - Gate::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `a ⊗ b` for single-qubit `a` (on qubit n) and `b` (on qubit n+1).
pub fn kron2(a: &nalgebra::Matrix2<C64>, b: &nalgebra::Matrix2<C64>) -> Gate {
    Gate::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

pub fn pauli_x() -> nalgebra::Matrix2<C64> {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    nalgebra::Matrix2::new(o, l, l, o)
}

/// Haar-random two-qubit unitary (QR of a complex Ginibre matrix with phase fix).
pub fn random_gate<R: Rng + ?Sized>(rng: &mut R) -> Gate {
    let z = Gate::from_fn(|_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..4 {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..4 {
            q[(i, j)] *= phase;
        }
    }
    q
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatePlacement {
    pub cycle: usize,
    pub bond: usize,
    pub unitary: Gate,
}

/// One finding from [`SweepSchedule::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub slot: Option<(usize, usize)>,
    pub deviation: Option<f64>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((m, n)) = self.slot {
            write!(f, "slot ({m},{n}): ")?;
        }
        f.write_str(&self.message)?;
        if let Some(d) = self.deviation {
            write!(f, " (deviation {d:e})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSchedule {
    shape: ProblemShape,
    /// Row-major over `(m - 1, n - 1)`.
    slots: Vec<Gate>,
}

impl SweepSchedule {
    /// All slots identity.
    pub fn identity(shape: ProblemShape) -> Self {
        Self {
            slots: vec![Gate::identity(); shape.total_steps()],
            shape,
        }
    }

    /// Builds a schedule from raw slots without checking anything; use
    /// [`SweepSchedule::validate`] to inspect it.
    pub fn from_slots_unchecked(shape: ProblemShape, slots: Vec<Gate>) -> Self {
        Self { shape, slots }
    }

    /// Places gates at explicit slots. Unplaced slots are identity.
    pub fn from_placements(shape: ProblemShape, placements: &[GatePlacement]) -> Result<Self> {
        let shape = ProblemShape::new(shape.n_qubits, shape.input_len, shape.n_cycles)?;
        let mut sched = Self::identity(shape);
        let mut seen = vec![false; sched.slots.len()];
        for p in placements {
            let idx = sched.slot_index(p.cycle, p.bond)?;
            if seen[idx] {
                return Err(Error::Parameter(format!(
                    "slot ({},{}) placed twice",
                    p.cycle, p.bond
                )));
            }
            check_unitary(p.cycle, p.bond, &p.unitary)?;
            seen[idx] = true;
            sched.slots[idx] = p.unitary;
        }
        Ok(sched)
    }

    /// Random Haar unitaries in every slot.
    pub fn random<R: Rng + ?Sized>(shape: ProblemShape, rng: &mut R) -> Self {
        let slots = (0..shape.total_steps()).map(|_| random_gate(rng)).collect();
        Self { shape, slots }
    }

    pub fn shape(&self) -> &ProblemShape {
        &self.shape
    }

    fn slot_index(&self, m: usize, n: usize) -> Result<usize> {
        let nb = self.shape.n_bonds();
        if m < 1 || m > self.shape.n_cycles || n < 1 || n > nb {
            return Err(Error::OutOfRange(format!(
                "slot ({m},{n}) outside cycles 1..={} and bonds 1..={nb}",
                self.shape.n_cycles
            )));
        }
        Ok((m - 1) * nb + (n - 1))
    }

    /// The unitary stored at `(m, n)`.
    pub fn gate_at(&self, m: usize, n: usize) -> Result<&Gate> {
        let idx = self.slot_index(m, n)?;
        self.slots
            .get(idx)
            .ok_or_else(|| Error::OutOfRange(format!("slot ({m},{n}) missing")))
    }

    /// Gates in visitation order, tagged with their slot.
    pub fn steps(&self) -> impl Iterator<Item = (usize, usize, &Gate)> + '_ {
        visitation_order(&self.shape).into_iter().map(move |(m, n)| {
            let idx = (m - 1) * self.shape.n_bonds() + (n - 1);
            (m, n, &self.slots[idx])
        })
    }

    /// Empty iff every invariant holds.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out: Vec<Diagnostic> = self
            .shape
            .violations()
            .into_iter()
            .map(|message| Diagnostic {
                slot: None,
                deviation: None,
                message,
            })
            .collect();
        if self.slots.len() != self.shape.total_steps() {
            out.push(Diagnostic {
                slot: None,
                deviation: None,
                message: format!(
                    "expected {} slots, found {}",
                    self.shape.total_steps(),
                    self.slots.len()
                ),
            });
            return out;
        }
        let nb = self.shape.n_bonds();
        for (idx, u) in self.slots.iter().enumerate() {
            let dev = unitarity_deviation(u);
            if !(dev <= UNITARY_TOL) {
                out.push(Diagnostic {
                    slot: Some((idx / nb + 1, idx % nb + 1)),
                    deviation: Some(dev),
                    message: "gate is not unitary".to_string(),
                });
            }
        }
        out
    }

    /// Serializes to the circuit text format; identity slots are omitted.
    pub fn to_text(&self) -> String {
        let s = &self.shape;
        let mut out = format!("shape {} {} {}\n", s.n_qubits, s.input_len, s.n_cycles);
        for (m, n, u) in self.steps() {
            if *u == Gate::identity() {
                continue;
            }
            write!(out, "gate {m} {n}").unwrap();
            for z in u.transpose().iter() {
                write!(out, " {},{}", z.re, z.im).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn check_unitary(cycle: usize, bond: usize, u: &Gate) -> Result<()> {
    let deviation = unitarity_deviation(u);
    if deviation <= UNITARY_TOL {
        Ok(())
    } else {
        Err(Error::NonUnitary {
            cycle,
            bond,
            deviation,
        })
    }
}

/// Packs an ordered gate list into the fewest sweep cycles.
///
/// Each gate goes to the next slot in visitation order whose bond matches,
/// so relative order is preserved; every skipped slot stays identity.
pub fn schedule_from_gate_list(
    gates: &[(usize, Gate)],
    n_qubits: usize,
    input_len: usize,
) -> Result<SweepSchedule> {
    ProblemShape::new(n_qubits, input_len, 1)?;
    let nb = n_qubits - 1;
    let mut placements = Vec::with_capacity(gates.len());
    // cursor = (cycle, index within that cycle's sweep) of the next free slot
    let (mut m, mut pos) = (1usize, 0usize);
    for (k, (bond, u)) in gates.iter().enumerate() {
        if *bond < 1 || *bond > nb {
            return Err(Error::OutOfRange(format!(
                "gate {k}: bond {bond} outside 1..={nb}"
            )));
        }
        check_unitary(m, *bond, u)?;
        loop {
            let order = sweep_order(n_qubits, m);
            if let Some(off) = order[pos..].iter().position(|b| b == bond) {
                let at = pos + off;
                placements.push(GatePlacement {
                    cycle: m,
                    bond: *bond,
                    unitary: *u,
                });
                pos = at + 1;
                if pos == nb {
                    m += 1;
                    pos = 0;
                }
                break;
            }
            m += 1;
            pos = 0;
        }
    }
    let n_cycles = placements.last().map_or(1, |p| p.cycle);
    let shape = ProblemShape::new(n_qubits, input_len, n_cycles)?;
    SweepSchedule::from_placements(shape, &placements)
}

/// Parses the circuit text format.
///
/// ```text
/// # comment
/// shape N M [R]
/// gate <m> <n> <16 entries "re,im", row-major>
/// ```
///
/// Without `R` the gates are packed in file order by bond (`m` may be `*`).
pub fn parse_circuit(text: &str) -> Result<SweepSchedule> {
    let mut header: Option<(usize, usize, Option<usize>)> = None;
    let mut gates: Vec<(usize, Option<usize>, usize, Gate)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let perr = |msg: String| Error::Parse { line: line_no, msg };
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            "shape" => {
                if header.is_some() {
                    return Err(perr("duplicate shape header".into()));
                }
                if toks.len() != 3 && toks.len() != 4 {
                    return Err(perr("expected `shape N M [R]`".into()));
                }
                let num = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| perr(format!("bad integer `{s}`")))
                };
                let r = if toks.len() == 4 { Some(num(toks[3])?) } else { None };
                header = Some((num(toks[1])?, num(toks[2])?, r));
            }
            "gate" => {
                if toks.len() != 3 + 16 {
                    return Err(perr(format!(
                        "expected `gate m n` followed by 16 entries, found {} tokens",
                        toks.len()
                    )));
                }
                let m = match toks[1] {
                    "*" => None,
                    s => Some(
                        s.parse::<usize>()
                            .map_err(|_| perr(format!("bad cycle `{s}`")))?,
                    ),
                };
                let n = toks[2]
                    .parse::<usize>()
                    .map_err(|_| perr(format!("bad bond `{}`", toks[2])))?;
                let mut entries = [C64::new(0.0, 0.0); 16];
                for (k, tok) in toks[3..].iter().enumerate() {
                    let (re, im) = tok
                        .split_once(',')
                        .ok_or_else(|| perr(format!("entry `{tok}` is not `re,im`")))?;
                    let re: f64 = re.parse().map_err(|_| perr(format!("bad number `{re}`")))?;
                    let im: f64 = im.parse().map_err(|_| perr(format!("bad number `{im}`")))?;
                    entries[k] = C64::new(re, im);
                }
                gates.push((line_no, m, n, Gate::from_row_slice(&entries)));
            }
            other => return Err(perr(format!("unknown directive `{other}`"))),
        }
    }
    let (n_qubits, input_len, n_cycles) = header.ok_or(Error::Parse {
        line: 0,
        msg: "missing `shape` header".into(),
    })?;
    match n_cycles {
        None => {
            let list: Vec<(usize, Gate)> = gates.iter().map(|g| (g.2, g.3)).collect();
            schedule_from_gate_list(&list, n_qubits, input_len)
        }
        Some(r) => {
            let shape = ProblemShape::new(n_qubits, input_len, r)?;
            let mut placements = Vec::with_capacity(gates.len());
            for (line, m, n, u) in gates {
                let cycle = m.ok_or(Error::Parse {
                    line,
                    msg: "cycle `*` needs a header without R".into(),
                })?;
                placements.push(GatePlacement {
                    cycle,
                    bond: n,
                    unitary: u,
                });
            }
            SweepSchedule::from_placements(shape, &placements)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn g(seed: u64) -> Gate {
        random_gate(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn empty_list_gives_one_identity_cycle() {
        let s = schedule_from_gate_list(&[], 3, 3).unwrap();
        assert_eq!(s.shape().n_cycles, 1);
        assert_eq!(*s.gate_at(1, 1).unwrap(), identity_gate());
        assert_eq!(*s.gate_at(1, 2).unwrap(), identity_gate());
    }

    #[test]
    fn single_gate_on_bond_one() {
        let s = schedule_from_gate_list(&[(1, g(1))], 3, 1).unwrap();
        assert_eq!(s.shape().n_cycles, 1);
        assert_eq!(*s.gate_at(1, 1).unwrap(), g(1));
        assert_eq!(*s.gate_at(1, 2).unwrap(), identity_gate());

        let s = schedule_from_gate_list(&[(1, g(1))], 2, 1).unwrap();
        assert_eq!(*s.gate_at(1, 1).unwrap(), g(1));
    }

    #[test]
    fn order_forces_second_cycle() {
        // cycle 1 visits bonds 1,2; cycle 2 visits 2,1
        let s = schedule_from_gate_list(&[(2, g(1)), (1, g(2))], 3, 1).unwrap();
        assert_eq!(s.shape().n_cycles, 2);
        assert_eq!(*s.gate_at(1, 2).unwrap(), g(1));
        assert_eq!(*s.gate_at(2, 1).unwrap(), g(2));
        assert_eq!(*s.gate_at(1, 1).unwrap(), identity_gate());
        assert_eq!(*s.gate_at(2, 2).unwrap(), identity_gate());
    }

    #[test]
    fn rejects_bad_bond_and_nonunitary() {
        assert!(matches!(
            schedule_from_gate_list(&[(3, g(1))], 3, 1),
            Err(Error::OutOfRange(_))
        ));
        let two = Gate::identity() * C64::new(2.0, 0.0);
        match schedule_from_gate_list(&[(1, two)], 3, 1) {
            Err(Error::NonUnitary { deviation, .. }) => assert!((deviation - 3.0).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gate_at_out_of_range() {
        let s = SweepSchedule::identity(ProblemShape::new(3, 1, 2).unwrap());
        assert!(s.gate_at(3, 1).is_err());
        assert!(s.gate_at(1, 3).is_err());
        assert!(s.gate_at(0, 1).is_err());
    }

    #[test]
    fn validate_reports_each_problem() {
        let shape = ProblemShape::new(3, 1, 2).unwrap();
        assert!(SweepSchedule::identity(shape).validate().is_empty());

        let mut slots = vec![Gate::identity(); 4];
        slots[3] = Gate::identity() * C64::new(2.0, 0.0);
        let d = SweepSchedule::from_slots_unchecked(shape, slots).validate();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].slot, Some((2, 2)));
        assert_eq!(d[0].deviation, Some(3.0));

        let zero = ProblemShape {
            n_qubits: 3,
            input_len: 1,
            n_cycles: 0,
        };
        let d = SweepSchedule::from_slots_unchecked(zero, vec![]).validate();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].message, "n_cycles must be ≥1");
    }

    #[test]
    fn visitation_covers_every_slot_once() {
        for n in 2..=5 {
            for r in 1..=4 {
                let shape = ProblemShape::new(n, 1, r).unwrap();
                let v = visitation_order(&shape);
                assert_eq!(v.len(), shape.total_steps());
                let mut sorted = v.clone();
                sorted.sort();
                sorted.dedup();
                assert_eq!(sorted.len(), v.len());
            }
        }
    }

    #[test]
    fn random_gates_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            assert!(unitarity_deviation(&random_gate(&mut rng)) < UNITARY_TOL);
        }
    }

    #[test]
    fn text_round_trip_and_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = SweepSchedule::random(ProblemShape::new(3, 2, 2).unwrap(), &mut rng);
        let back = parse_circuit(&s.to_text()).unwrap();
        assert_eq!(back, s);

        let packed = parse_circuit("shape 3 1\n# c\n\ngate * 2 1,0 0,0 0,0 0,0 0,0 1,0 0,0 0,0 0,0 0,0 1,0 0,0 0,0 0,0 0,0 1,0\n")
            .unwrap();
        assert_eq!(packed.shape().n_cycles, 1);

        match parse_circuit("shape 2 1 1\ngate 1 1 1,0 0,0\n") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(parse_circuit("gate 1 1").is_err());
    }

    proptest::proptest! {
        #[test]
        fn packing_preserves_order(bonds in proptest::collection::vec(1usize..4, 0..12)) {
            let n = 4;
            let gates: Vec<(usize, Gate)> = bonds
                .iter()
                .enumerate()
                .map(|(k, &b)| (b, g(k as u64 + 100)))
                .collect();
            let s = schedule_from_gate_list(&gates, n, 1).unwrap();
            let placed: Vec<(usize, Gate)> = s
                .steps()
                .filter(|(_, _, u)| **u != identity_gate())
                .map(|(_, n, u)| (n, *u))
                .collect();
            proptest::prop_assert_eq!(placed, gates);
            // minimality: dropping the last cycle would lose a gate
            if s.shape().n_cycles > 1 {
                let r = s.shape().n_cycles;
                proptest::prop_assert!((1..n).any(|b| *s.gate_at(r, b).unwrap() != identity_gate()));
            }
        }
    }
}
