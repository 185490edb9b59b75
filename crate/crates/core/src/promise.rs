//! Projection-lemma bounds, constant selection, promise decisions and the
//! yes/no separation experiment.

use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::circuit::{ProblemShape, SweepSchedule};
use crate::error::{Error, Result};
use crate::hamiltonian::{
    build_head_reward_bond, build_form_penalty_bond, BondTerms, CouplingConstants, LocalTerm, Part,
    RingOperator, DEFAULT_DIM_CAP,
};
use crate::history::simulate_history;
use crate::sparse::{sparse_dot, LinearOperator};
use crate::spectral::{
    dense_eigh, detect_frozen, gap, ground_energy, masked_csr, operator_norm, orbit_configs,
    restrict_ring, SolverOptions,
};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PromiseParameters {
    pub a: f64,
    pub b: f64,
    pub epsilon: f64,
}

impl PromiseParameters {
    pub fn new(a: f64, b: f64, epsilon: f64) -> Result<Self> {
        if !(b > a) {
            return Err(Error::Parameter(format!("need b > a (got a = {a}, b = {b})")));
        }
        if !(0.0..0.5).contains(&epsilon) {
            return Err(Error::Parameter(format!("epsilon {epsilon} outside [0, 1/2)")));
        }
        Ok(Self { a, b, epsilon })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaBounds {
    pub lambda_restricted: f64,
    pub norm_h1: f64,
    pub j: f64,
    pub lower: f64,
    pub upper: f64,
}

/// `lambda - |H1|^2 / (J - 2|H1|) <= lambda(H1 + H2) <= lambda`.
pub fn projection_bounds(lambda_restricted: f64, norm_h1: f64, j: f64) -> Result<LemmaBounds> {
    if norm_h1 < 0.0 {
        return Err(Error::Parameter(format!("negative norm {norm_h1}")));
    }
    let slack = if norm_h1 == 0.0 {
        0.0
    } else if j > 2.0 * norm_h1 {
        norm_h1 * norm_h1 / (j - 2.0 * norm_h1)
    } else {
        return Err(Error::LemmaHypothesis { j, two_norm: 2.0 * norm_h1 });
    };
    Ok(LemmaBounds {
        lambda_restricted,
        norm_h1,
        j,
        lower: lambda_restricted - slack,
        upper: lambda_restricted,
    })
}

#[allow(non_snake_case)]
pub fn choose_J(norm_h1: f64) -> f64 {
    8.0 * norm_h1 * norm_h1 + 2.0 * norm_h1
}

/// `2 c / T^2`.
pub fn choose_alpha(shape: &ProblemShape, c_est: f64) -> Result<f64> {
    if !(c_est > 0.0 && c_est.is_finite()) {
        return Err(Error::Parameter(format!("c_est must be > 0 (got {c_est})")));
    }
    let t = shape.total_steps() as f64;
    Ok(2.0 * c_est / (t * t))
}

/// Gap of the computation term on one orbit branch, times `T^2`.
pub fn measured_gap_constant(shape: &ProblemShape, opts: &SolverOptions) -> Result<f64> {
    let terms = BondTerms::build(&SweepSchedule::identity(*shape));
    let comp = terms.ring(Part::Comp);
    let m = restrict_ring(&comp, &orbit_configs(&terms.basis, 0, false));
    let g = gap(&m, opts)?
        .gap
        .ok_or_else(|| Error::Parameter("orbit has a single level".into()))?;
    let t = shape.total_steps() as f64;
    Ok(g * t * t)
}

/// `|J1 H_input + w_out H_output|` exactly (both parts are diagonal).
pub fn penalty_norm(terms: &BondTerms, j1: f64, w_out: f64) -> Result<f64> {
    let bond = LocalTerm::weighted_sum(terms.basis.dim, &[(j1, &terms.input), (w_out, &terms.output)])?;
    let op = RingOperator::from_bond(terms.basis, bond, "H1".into());
    let (lo, hi) = op.diagonal_extremes()?;
    Ok(lo.abs().max(hi.abs()))
}

/// Resolves `None` entries: `J2 = choose_J(|H1|)`, `alpha = choose_alpha(c)`.
pub fn resolve_constants(
    shape: &ProblemShape,
    j1: f64,
    j2: Option<f64>,
    alpha: Option<f64>,
    opts: &SolverOptions,
) -> Result<CouplingConstants> {
    let w_out = shape.total_steps() as f64;
    let j2 = match j2 {
        Some(v) => v,
        None => {
            let terms = BondTerms::build(&SweepSchedule::identity(*shape));
            choose_J(penalty_norm(&terms, j1, w_out)?)
        }
    };
    let alpha = match alpha {
        Some(v) => v,
        None => choose_alpha(shape, measured_gap_constant(shape, opts)?)?,
    };
    CouplingConstants::new(j1, j2, alpha, shape)
}

fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let g = DMatrix::from_fn(n, n, |_, _| {
        C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            let d = r[(i, i)];
            d / d.norm()
        } else {
            C64::new(0.0, 0.0)
        }
    });
    q * phases
}

/// Outcome of one sandwich check on `H1 + H2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceCheck {
    pub bounds: LemmaBounds,
    pub lambda: f64,
    pub lower_margin: f64,
    pub upper_margin: f64,
}

impl InstanceCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.lower_margin >= -tol && self.upper_margin >= -tol
    }
}

/// Checks the hypotheses (H2 positive semidefinite, every nonzero
/// eigenvalue at least `J`, `J > 2|H1|`) and then both inequalities.
pub fn check_instance(h1: &DMatrix<C64>, h2: &DMatrix<C64>, j: f64) -> Result<InstanceCheck> {
    let norm_h1 = operator_norm(h1);
    let (vals2, vecs2) = dense_eigh(h2);
    let zero_tol = 1e-9 * j.max(1.0);
    if vals2[0] < -zero_tol || vals2.iter().any(|&v| v > zero_tol && v < j - zero_tol) {
        return Err(Error::LemmaHypothesis { j, two_norm: 2.0 * norm_h1 });
    }
    let s: Vec<usize> = (0..vals2.len()).filter(|&i| vals2[i] <= zero_tol).collect();
    let lambda_restricted = if s.is_empty() {
        f64::INFINITY
    } else {
        let q = DMatrix::from_columns(&s.iter().map(|&i| vecs2.column(i)).collect::<Vec<_>>());
        let restricted = q.adjoint() * h1 * &q;
        dense_eigh(&restricted).0[0]
    };
    let bounds = projection_bounds(lambda_restricted, norm_h1, j)?;
    let lambda = dense_eigh(&(h1 + h2)).0[0];
    Ok(InstanceCheck {
        bounds,
        lambda,
        lower_margin: lambda - bounds.lower,
        upper_margin: bounds.upper - lambda,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaReport {
    pub trials: usize,
    pub dim: usize,
    pub violations: usize,
    pub worst_lower_margin: f64,
    pub worst_upper_margin: f64,
}

impl LemmaReport {
    pub fn to_text(&self) -> String {
        format!(
            "trials {}\ndim {}\nviolations {}\nworst_lower_margin {:.6e}\nworst_upper_margin {:.6e}\n",
            self.trials, self.dim, self.violations, self.worst_lower_margin, self.worst_upper_margin
        )
    }
}

fn lemma_trial(seed: u64, trial: u64, dim: usize) -> Result<InstanceCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let zero_dim = rng.gen_range(1..=dim);
    let a = DMatrix::from_fn(dim, dim, |_, _| {
        C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
    });
    let h1 = &a + a.adjoint();
    let target: f64 = rng.gen_range(0.05..=1.0);
    let h1 = &h1 * C64::new(target / operator_norm(&h1), 0.0);
    let j = choose_J(operator_norm(&h1));
    let u = random_unitary(dim, &mut rng);
    let diag = DMatrix::from_fn(dim, dim, |r, c| {
        if r == c && r >= zero_dim {
            C64::new(j * (1.0 + rng.gen_range(0.0..1.0)), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let h2 = &u * diag * u.adjoint();
    let h2 = (&h2 + h2.adjoint()) * C64::new(0.5, 0.0);
    check_instance(&h1, &h2, j)
}

/// Samples hypothesis-satisfying pairs and counts sandwich violations.
/// Trial `i` draws from stream `i` of the seed, so results do not depend on
/// the worker count.
pub fn verify_lemma_numeric(seed: u64, trials: usize, dim: usize) -> Result<LemmaReport> {
    if dim == 0 {
        return Err(Error::Parameter("dim must be ≥1".into()));
    }
    let checks: Vec<InstanceCheck> = (0..trials as u64)
        .into_par_iter()
        .map(|t| lemma_trial(seed, t, dim))
        .collect::<Result<_>>()?;
    let tol = 1e-10;
    Ok(LemmaReport {
        trials,
        dim,
        violations: checks.iter().filter(|c| !c.holds(tol)).count(),
        worst_lower_margin: checks.iter().map(|c| c.lower_margin).fold(f64::INFINITY, f64::min),
        worst_upper_margin: checks.iter().map(|c| c.upper_margin).fold(f64::INFINITY, f64::min),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
    OutsidePromise,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "Yes",
            Verdict::No => "No",
            Verdict::OutsidePromise => "OutsidePromise",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PromiseDecision {
    pub verdict: Verdict,
    pub lambda0: f64,
    pub a: f64,
    pub b: f64,
    /// Distance to the threshold on the decided side; for
    /// `OutsidePromise`, the distance to the nearer threshold (negative).
    pub margin: f64,
}

impl PromiseDecision {
    pub fn to_text(&self) -> String {
        format!(
            "verdict {} lambda0 {:.12} a {} b {} margin {:.12}\n",
            self.verdict, self.lambda0, self.a, self.b, self.margin
        )
    }
}

pub fn decide(lambda0: f64, params: &PromiseParameters) -> PromiseDecision {
    let (a, b) = (params.a, params.b);
    let (verdict, margin) = if lambda0 <= a {
        (Verdict::Yes, a - lambda0)
    } else if lambda0 > b {
        (Verdict::No, lambda0 - b)
    } else {
        (Verdict::OutsidePromise, -(lambda0 - a).min(b - lambda0))
    };
    PromiseDecision {
        verdict,
        lambda0,
        a,
        b,
        margin,
    }
}

pub fn decide_operator(
    op: &dyn LinearOperator,
    params: &PromiseParameters,
    opts: &SolverOptions,
) -> Result<PromiseDecision> {
    let (l0, _, _) = ground_energy(op, opts)?;
    Ok(decide(l0, params))
}

/// Where the `-|Head><Head|` reward is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    /// `J1 H_input + J2 (alpha H_form + H_comp) + w_out H_output`.
    Literal,
    /// Reward moved into the `J1` group, penalties kept under `J2 alpha`.
    RewardWithInput,
}

impl Grouping {
    pub const ALL: [Grouping; 2] = [Grouping::Literal, Grouping::RewardWithInput];

    pub fn name(&self) -> &'static str {
        match self {
            Grouping::Literal => "literal",
            Grouping::RewardWithInput => "reward_with_input",
        }
    }
}

pub fn grouped_operator(terms: &BondTerms, k: &CouplingConstants, g: Grouping) -> Result<RingOperator> {
    match g {
        Grouping::Literal => Ok(terms.total(k)),
        Grouping::RewardWithInput => {
            let shape = &terms.basis.shape;
            let reward = build_head_reward_bond(shape);
            let penalty = build_form_penalty_bond(shape);
            let bond = LocalTerm::weighted_sum(
                terms.basis.dim,
                &[
                    (k.j1, &terms.input),
                    (k.j1, &reward),
                    (k.j2 * k.alpha, &penalty),
                    (k.j2, &terms.comp),
                    (k.w_out, &terms.output),
                ],
            )?;
            Ok(RingOperator::from_bond(terms.basis, bond, "reward grouped with input".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// One Head site, legal clock orbit, all qubit strings.
    Orbit,
    /// Whole ring space with the frozen configurations removed.
    FullMinusFrozen,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Orbit => "orbit",
            Mode::FullMinusFrozen => "full_minus_frozen",
        }
    }
}

/// Lowest eigenvalue of `op` in the given mode.
pub fn mode_ground_energy(
    op: &RingOperator,
    terms: &BondTerms,
    mode: Mode,
    opts: &SolverOptions,
) -> Result<f64> {
    match mode {
        Mode::Orbit => {
            let m = restrict_ring(op, &orbit_configs(&terms.basis, 0, true));
            Ok(ground_energy(&m, opts)?.0)
        }
        Mode::FullMinusFrozen => {
            let h = op.to_csr(DEFAULT_DIM_CAP)?;
            let frozen = detect_frozen(terms);
            let keep: Vec<usize> = (0..h.dim()).filter(|c| frozen.binary_search(c).is_err()).collect();
            let masked = masked_csr(&h, &keep)?;
            if masked.dim() <= opts.dense_threshold {
                Ok(ground_energy(&masked.to_dense(), opts)?.0)
            } else {
                Ok(ground_energy(&masked, opts)?.0)
            }
        }
    }
}

/// Smallest history-state energy over inputs with zero ancillas.
pub fn best_history_energy(schedule: &SweepSchedule, op: &RingOperator) -> Result<(f64, Vec<u8>)> {
    let shape = schedule.shape();
    let (n, m) = (shape.n_qubits, shape.input_len);
    let mut best = (f64::INFINITY, Vec::new());
    for w in 0..1usize << m {
        let x: Vec<u8> = (0..n)
            .map(|j| if j < m { ((w >> (m - 1 - j)) & 1) as u8 } else { 0 })
            .collect();
        let v = simulate_history(schedule, &x, 0)?.vector();
        let e = sparse_dot(&v, &op.apply_sparse(&v)).re;
        if e < best.0 {
            best = (e, x);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationRow {
    pub grouping: Grouping,
    pub mode: Mode,
    pub lambda_yes: f64,
    pub lambda_no: f64,
}

impl SeparationRow {
    pub fn margin(&self) -> f64 {
        self.lambda_no - self.lambda_yes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationReport {
    pub constants: CouplingConstants,
    pub rows: Vec<SeparationRow>,
    /// Best history-state energy (literal grouping) and its witness.
    pub variational_yes: (f64, Vec<u8>),
    pub variational_no: (f64, Vec<u8>),
    pub frozen: usize,
}

impl SeparationReport {
    pub fn row(&self, g: Grouping, m: Mode) -> Option<&SeparationRow> {
        self.rows.iter().find(|r| r.grouping == g && r.mode == m)
    }

    pub fn to_text(&self) -> String {
        let k = &self.constants;
        let bits = |x: &[u8]| x.iter().map(|b| b.to_string()).collect::<String>();
        let mut s = format!(
            "constants j1 {} j2 {} alpha {} w_out {}\nfrozen {}\n",
            k.j1, k.j2, k.alpha, k.w_out, self.frozen
        );
        for r in &self.rows {
            s += &format!(
                "separation {} {} lambda0_yes {:.12} lambda0_no {:.12} margin {:.12}\n",
                r.grouping.name(),
                r.mode.name(),
                r.lambda_yes,
                r.lambda_no,
                r.margin()
            );
        }
        s += &format!(
            "variational yes {:.12} witness {}\nvariational no {:.12} witness {}\n",
            self.variational_yes.0,
            bits(&self.variational_yes.1),
            self.variational_no.0,
            bits(&self.variational_no.1)
        );
        s
    }
}

/// Ground energies of the accepting and rejecting instances under identical
/// constants, in both modes and both groupings.
pub fn separation_experiment(
    accepting: &SweepSchedule,
    rejecting: &SweepSchedule,
    k: &CouplingConstants,
    modes: &[Mode],
    opts: &SolverOptions,
) -> Result<SeparationReport> {
    if accepting.shape() != rejecting.shape() {
        return Err(Error::Shape(format!(
            "schedules differ in shape: {:?} vs {:?}",
            accepting.shape(),
            rejecting.shape()
        )));
    }
    let yes = BondTerms::build(accepting);
    let no = BondTerms::build(rejecting);
    let mut rows = Vec::new();
    for g in Grouping::ALL {
        let (hy, hn) = (grouped_operator(&yes, k, g)?, grouped_operator(&no, k, g)?);
        for &m in modes {
            rows.push(SeparationRow {
                grouping: g,
                mode: m,
                lambda_yes: mode_ground_energy(&hy, &yes, m, opts)?,
                lambda_no: mode_ground_energy(&hn, &no, m, opts)?,
            });
        }
    }
    let frozen = if modes.contains(&Mode::FullMinusFrozen) {
        detect_frozen(&yes).len()
    } else {
        0
    };
    Ok(SeparationReport {
        constants: *k,
        rows,
        variational_yes: best_history_energy(accepting, &yes.total(k))?,
        variational_no: best_history_energy(rejecting, &no.total(k))?,
        frozen,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{kron2, pauli_x, GatePlacement};
    use nalgebra::{Matrix2, Matrix4};
    use std::f64::consts::PI;

    #[test]
    fn bounds_examples() {
        let b = projection_bounds(0.3, 0.0, 0.0).unwrap();
        assert_eq!((b.lower, b.upper), (0.3, 0.3));
        let b = projection_bounds(0.3, 1.0, 10.0).unwrap();
        assert!((b.upper - b.lower - 0.125).abs() < 1e-15);
        assert!(projection_bounds(0.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn choose_j_examples_and_slack() {
        assert_eq!(choose_J(1.0), 10.0);
        assert_eq!(choose_J(0.0), 0.0);
        assert_eq!(choose_J(2.0), 36.0);
        for i in 1..=20 {
            let n = 0.37 * i as f64;
            let b = projection_bounds(0.0, n, choose_J(n)).unwrap();
            assert!((b.upper - b.lower - 0.125).abs() < 1e-12);
        }
    }

    #[test]
    fn choose_alpha_examples() {
        let sh = ProblemShape::new(3, 1, 2).unwrap();
        assert!((choose_alpha(&sh, PI * PI).unwrap() - 2.0 * PI * PI / 16.0).abs() < 1e-12);
        let sh = ProblemShape::new(2, 1, 1).unwrap();
        assert_eq!(choose_alpha(&sh, 3.0).unwrap(), 6.0);
        assert!(choose_alpha(&sh, 0.0).is_err());
        assert!(choose_alpha(&sh, -1.0).is_err());
    }

    #[test]
    fn gap_constant_matches_laplacian() {
        let sh = ProblemShape::new(3, 1, 2).unwrap();
        let c = measured_gap_constant(&sh, &SolverOptions::default()).unwrap();
        assert!((c - 16.0 * 2.0 * (1.0 - (PI / 5.0).cos())).abs() < 1e-9);
    }

    #[test]
    fn lemma_trivial_and_gated_cases() {
        let h1 = DMatrix::from_fn(2, 2, |r, c| C64::new(if r == c { r as f64 } else { 0.3 }, 0.0));
        let n = operator_norm(&h1);
        let h2 = DMatrix::zeros(2, 2);
        let chk = check_instance(&h1, &h2, choose_J(n)).unwrap();
        assert!((chk.lambda - chk.bounds.upper).abs() < 1e-12);
        let j = 2.0 * n;
        let h2 = DMatrix::from_fn(2, 2, |r, c| C64::new(if r == c && r == 1 { j } else { 0.0 }, 0.0));
        assert!(matches!(check_instance(&h1, &h2, j), Err(Error::LemmaHypothesis { .. })));
    }

    #[test]
    fn lemma_numeric_is_deterministic() {
        let a = verify_lemma_numeric(1, 50, 8).unwrap();
        let b = verify_lemma_numeric(1, 50, 8).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.violations, 0);
    }

    #[test]
    fn decide_examples_and_monotonicity() {
        let p = PromiseParameters::new(0.0, 1.0, 0.0).unwrap();
        assert_eq!(decide(-1.0, &p).verdict, Verdict::Yes);
        assert_eq!(decide(2.0, &p).verdict, Verdict::No);
        assert_eq!(decide(0.5, &p).verdict, Verdict::OutsidePromise);
        let rank = |v| match v {
            Verdict::Yes => 0,
            Verdict::OutsidePromise => 1,
            Verdict::No => 2,
        };
        let mut last = 0;
        for i in 0..200 {
            let r = rank(decide(-1.0 + 0.015 * i as f64, &p).verdict);
            assert!(r >= last);
            last = r;
        }
        assert!(PromiseParameters::new(1.0, 1.0, 0.0).is_err());
        assert!(PromiseParameters::new(0.0, 1.0, 0.5).is_err());
        assert!(decide(-1.0, &p).to_text().starts_with("verdict Yes lambda0 -1"));
    }

    fn swap() -> Matrix4<C64> {
        Matrix4::from_fn(|r, c| {
            let hit = matches!((r, c), (0, 0) | (1, 2) | (2, 1) | (3, 3));
            C64::new(hit as u8 as f64, 0.0)
        })
    }

    #[test]
    fn orbit_separation_n3() {
        let sh = ProblemShape::new(3, 1, 1).unwrap();
        let yes = SweepSchedule::identity(sh);
        let x = kron2(&pauli_x(), &Matrix2::identity());
        let no = SweepSchedule::from_placements(
            sh,
            &[GatePlacement {
                cycle: 1,
                bond: 1,
                unitary: x * swap(),
            }],
        )
        .unwrap();
        let opts = SolverOptions::default();
        let k = resolve_constants(&sh, 1.0, None, None, &opts).unwrap();
        let rep = separation_experiment(&yes, &no, &k, &[Mode::Orbit], &opts).unwrap();
        for r in &rep.rows {
            assert!(r.margin() > 0.0, "{}", rep.to_text());
        }
        assert!(rep.variational_yes.0 >= rep.row(Grouping::Literal, Mode::Orbit).unwrap().lambda_yes - 1e-9);
        let t = sh.total_steps() as f64;
        // the rejecting witness pays the weighted output projector once
        assert!((rep.variational_no.0 - (-k.j2 * k.alpha + k.w_out / (t + 1.0))).abs() < 1e-9);
    }
}
