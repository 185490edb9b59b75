//! Command-line driver. Every subcommand renders a plain-text report; the
//! binary prints it and exits nonzero when a check fails.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::circuit::{parse_circuit, ProblemShape, SweepSchedule};
use crate::error::{Error, Result};
use crate::hamiltonian::{build_shift_operator, check_translation_invariance, BondTerms, Part, RingOperator};
use crate::history::{expectations, simulate_history};
use crate::promise::{
    decide, mode_ground_energy, resolve_constants, separation_experiment, verify_lemma_numeric, Mode,
    PromiseParameters,
};
use crate::sparse::{CsrMatrix, LinearOperator};
use crate::spectral::{detect_frozen, gap, low_spectrum, masked_csr, orbit_configs, restrict_ring, SolverOptions};

#[derive(Debug, Parser)]
#[command(name = "ti2lh", version, about = "Translation-invariant clock Hamiltonians on a qudit ring")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Assemble the operator, print structural checks, optionally export it.
    Compile(CompileArgs),
    /// History-state expectation values for one witness.
    Oracle(OracleArgs),
    /// Lowest eigenvalues of the assembled operator.
    Spectrum(RunArgs),
    /// Orbit gap of the computation term for a range of cycle counts.
    Gapscan(GapscanArgs),
    /// Yes/no separation, or a promise decision against thresholds.
    Verify(VerifyArgs),
    /// Sampled check of the projection-lemma sandwich.
    Lemma(LemmaArgs),
    /// Write the assembled operator in triplet format.
    Export(CompileArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub circuit: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub j1: f64,
    /// Number or `auto`.
    #[arg(long, default_value = "auto")]
    pub j2: String,
    /// Number or `auto`.
    #[arg(long, default_value = "auto")]
    pub alpha: String,
    #[arg(long, default_value_t = 6)]
    pub k: usize,
    #[arg(long, default_value_t = 4096)]
    pub dense_threshold: usize,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Work on the legal clock orbit of one Head site.
    #[arg(long)]
    pub orbit_restrict: bool,
    /// Remove frozen configurations from the full space.
    #[arg(long)]
    pub frozen_scan: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompileArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated subset of input,form,comp,output.
    #[arg(long, default_value = "input,form,comp,output")]
    pub parts: String,
    /// Largest configuration-space dimension to assemble.
    #[arg(long, default_value_t = crate::hamiltonian::DEFAULT_DIM_CAP)]
    pub cap: usize,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Input bits, qubit 1 first, e.g. `10`.
    #[arg(long)]
    pub witness: String,
    #[arg(long, default_value_t = 0)]
    pub head: usize,
}

#[derive(Debug, Clone, Args)]
pub struct GapscanArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Cycle counts to sweep.
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
    pub r_list: Vec<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub reject_circuit: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct LemmaArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Report text and whether every check passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub ok: bool,
}

impl Outcome {
    fn pass(text: String) -> Self {
        Self { text, ok: true }
    }
}

fn parse_auto(s: &str, name: &str) -> Result<Option<f64>> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| Error::Parameter(format!("--{name} expects a number or `auto`, got `{s}`")))
}

fn read_schedule(path: &Path) -> Result<SweepSchedule> {
    parse_circuit(&fs::read_to_string(path)?)
}

impl RunArgs {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            dense_threshold: self.dense_threshold,
            max_matvecs: self.max_iters,
            seed: self.seed,
            ..Default::default()
        }
    }

    /// Schedule from `--circuit`, or the identity schedule of `--n/--m/--r`.
    pub fn schedule(&self) -> Result<SweepSchedule> {
        match &self.circuit {
            Some(p) => {
                let s = read_schedule(p)?;
                let sh = s.shape();
                for (flag, given, have) in [
                    ("n", self.n, sh.n_qubits),
                    ("m", self.m, sh.input_len),
                    ("r", self.r, sh.n_cycles),
                ] {
                    if given.is_some_and(|g| g != have) {
                        return Err(Error::Shape(format!(
                            "--{flag} {} disagrees with the circuit ({have})",
                            given.unwrap()
                        )));
                    }
                }
                Ok(s)
            }
            None => {
                let need = |v: Option<usize>, f: &str| {
                    v.ok_or_else(|| Error::Parameter(format!("--{f} is required without --circuit")))
                };
                let sh = ProblemShape::new(need(self.n, "n")?, need(self.m, "m")?, need(self.r, "r")?)?;
                Ok(SweepSchedule::identity(sh))
            }
        }
    }

    fn constants(&self, shape: &ProblemShape) -> Result<crate::hamiltonian::CouplingConstants> {
        resolve_constants(
            shape,
            self.j1,
            parse_auto(&self.j2, "j2")?,
            parse_auto(&self.alpha, "alpha")?,
            &self.options(),
        )
    }

    fn mode(&self) -> Option<Mode> {
        if self.orbit_restrict {
            Some(Mode::Orbit)
        } else if self.frozen_scan {
            Some(Mode::FullMinusFrozen)
        } else {
            None
        }
    }
}

fn parse_parts(s: &str) -> Result<Vec<Part>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(|p| Part::parse(p.trim())).collect()
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    if let Some(p) = out {
        fs::write(p, text)?;
    }
    Ok(())
}

fn assemble(args: &CompileArgs) -> Result<(BondTerms, RingOperator, CsrMatrix)> {
    let sched = args.run.schedule()?;
    let k = args.run.constants(sched.shape())?;
    let terms = BondTerms::build(&sched);
    let op = terms.assemble(&parse_parts(&args.parts)?, &k)?;
    let h = op.to_csr(args.cap)?;
    Ok((terms, op, h))
}

fn cmd_compile(args: &CompileArgs) -> Result<Outcome> {
    let (terms, op, h) = assemble(args)?;
    let herm = h.hermiticity_residual();
    let trans = check_translation_invariance(&h, &build_shift_operator(terms.basis));
    if let Some(p) = &args.run.out {
        h.write_triplets(fs::File::create(p)?)?;
    }
    let diags = sched_diagnostics(&args.run)?;
    let comp_norm = terms.comp.norm_bound();
    let budget = 10.0 * terms.basis.shape.total_steps() as f64;
    let text = format!(
        "operator {}\nlocal_dim {}\ndim {}\nnnz {}\nhermiticity {:e}\ntranslation {:e}\ncomp_bond_norm_bound {} budget {}\ndiagnostics {}\n",
        op.provenance,
        terms.basis.dim,
        h.dim(),
        h.nnz(),
        herm,
        trans,
        comp_norm,
        budget,
        diags
    );
    Ok(Outcome {
        text,
        ok: herm == 0.0 && trans == 0.0 && diags == 0 && comp_norm <= budget,
    })
}

fn sched_diagnostics(run: &RunArgs) -> Result<usize> {
    Ok(run.schedule()?.validate().len())
}

fn cmd_export(args: &CompileArgs) -> Result<Outcome> {
    let (_, _, h) = assemble(args)?;
    let mut buf = Vec::new();
    h.write_triplets(&mut buf)?;
    let text = String::from_utf8(buf).expect("triplets are ASCII");
    emit(&args.run.out, &text)?;
    let ok = h.hermiticity_residual() == 0.0;
    if args.run.out.is_some() {
        Ok(Outcome {
            text: format!("wrote dim {} nnz {}\n", h.dim(), h.nnz()),
            ok,
        })
    } else {
        Ok(Outcome { text, ok })
    }
}

fn parse_bits(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(Error::Parameter(format!("witness `{s}` must be a 0/1 string"))),
        })
        .collect()
}

fn cmd_oracle(args: &OracleArgs) -> Result<Outcome> {
    let sched = args.run.schedule()?;
    let x = parse_bits(&args.witness)?;
    let hist = simulate_history(&sched, &x, args.head)?;
    let terms = BondTerms::build(&sched);
    let ops: Vec<(Part, RingOperator)> = Part::ALL.iter().map(|&p| (p, terms.ring(p))).collect();
    let named: Vec<(&str, &RingOperator)> = ops.iter().map(|(p, o)| (p.name(), o)).collect();
    let rep = expectations(&hist.vector(), &named)?;
    let p = hist.reject_probability();
    let t1 = (sched.shape().total_steps() + 1) as f64;
    let out = rep.get("H_output").unwrap_or(f64::NAN);
    let comp = rep.get("H_comp").unwrap_or(f64::NAN);
    let text = format!(
        "{}reject_probability {:.12}\nH_output_expected {:.12}\n",
        rep.to_text(),
        p,
        p / t1
    );
    emit(&args.run.out, &text)?;
    let ok = (out - p / t1).abs() <= 1e-10 && comp.abs() <= 1e-10 && rep.rows.iter().all(|r| r.2 < 1e-10);
    Ok(Outcome { text, ok })
}

fn cmd_spectrum(args: &RunArgs) -> Result<Outcome> {
    let sched = args.schedule()?;
    let k = args.constants(sched.shape())?;
    let terms = BondTerms::build(&sched);
    let op = terms.total(&k);
    let opts = args.options();
    let mut head = format!(
        "constants j1 {} j2 {} alpha {} w_out {}\n",
        k.j1, k.j2, k.alpha, k.w_out
    );
    let report = match args.mode() {
        Some(Mode::Orbit) => {
            let m = restrict_ring(&op, &orbit_configs(&terms.basis, 0, true));
            let mut r = low_spectrum(&m, args.k.min(m.nrows()), &opts)?;
            r.restricted = true;
            r
        }
        Some(Mode::FullMinusFrozen) => {
            let h = op.to_csr(crate::hamiltonian::DEFAULT_DIM_CAP)?;
            let frozen = detect_frozen(&terms);
            head += &format!("frozen {}\n", frozen.len());
            let keep: Vec<usize> = (0..h.dim()).filter(|c| frozen.binary_search(c).is_err()).collect();
            let masked = masked_csr(&h, &keep)?;
            let mut r = low_spectrum(&masked, args.k.min(masked.dim()), &opts)?;
            r.restricted = true;
            r
        }
        None => {
            let h = op.to_csr(crate::hamiltonian::DEFAULT_DIM_CAP)?;
            low_spectrum(&h, args.k.min(h.dim()), &opts)?
        }
    };
    let limit = match report.method {
        crate::spectral::Method::Dense => 1e-8,
        crate::spectral::Method::Iterative => 1e-6,
    };
    let scale = report.eigenvalues.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let ok = report.residuals.iter().all(|&r| r <= limit * scale);
    let text = head + &report.to_text();
    emit(&args.out, &text)?;
    Ok(Outcome { text, ok })
}

fn cmd_gapscan(args: &GapscanArgs) -> Result<Outcome> {
    let n = args.run.n.unwrap_or(2);
    let m = args.run.m.unwrap_or(1);
    let opts = args.run.options();
    let mut text = String::from("# T gap scaled_gap\n");
    for &r in &args.r_list {
        let sh = ProblemShape::new(n, m, r)?;
        let terms = BondTerms::build(&SweepSchedule::identity(sh));
        let mat = restrict_ring(&terms.ring(Part::Comp), &orbit_configs(&terms.basis, 0, false));
        let g = gap(&mat, &opts)?.gap.unwrap_or(0.0);
        let t1 = (sh.total_steps() + 1) as f64;
        text += &format!("{} {:.12} {:.12}\n", sh.total_steps(), g, g * t1 * t1);
    }
    emit(&args.run.out, &text)?;
    Ok(Outcome::pass(text))
}

fn cmd_verify(args: &VerifyArgs) -> Result<Outcome> {
    let yes = args.run.schedule()?;
    let k = args.run.constants(yes.shape())?;
    let opts = args.run.options();
    let (text, ok) = if let Some(p) = &args.reject_circuit {
        let no = read_schedule(p)?;
        let mut modes = vec![Mode::Orbit];
        if args.run.frozen_scan {
            modes.push(Mode::FullMinusFrozen);
        }
        let rep = separation_experiment(&yes, &no, &k, &modes, &opts)?;
        let ok = rep
            .rows
            .iter()
            .filter(|r| r.grouping == crate::promise::Grouping::Literal)
            .all(|r| r.margin() > 0.0);
        (rep.to_text(), ok)
    } else {
        let (a, b) = match (args.a, args.b) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::Parameter("verify needs --reject-circuit or both --a and --b".into())),
        };
        let params = PromiseParameters::new(a, b, 0.0)?;
        let terms = BondTerms::build(&yes);
        let mode = args.run.mode().unwrap_or(Mode::FullMinusFrozen);
        let l0 = mode_ground_energy(&terms.total(&k), &terms, mode, &opts)?;
        (decide(l0, &params).to_text(), true)
    };
    emit(&args.run.out, &text)?;
    Ok(Outcome { text, ok })
}

fn cmd_lemma(args: &LemmaArgs) -> Result<Outcome> {
    let rep = verify_lemma_numeric(args.seed, args.trials, args.dim)?;
    let text = rep.to_text();
    emit(&args.out, &text)?;
    Ok(Outcome {
        text,
        ok: rep.violations == 0,
    })
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Compile(a) => cmd_compile(a),
        Command::Export(a) => cmd_export(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Gapscan(a) => cmd_gapscan(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Lemma(a) => cmd_lemma(a),
    }
}

/// Parses `std::env::args`, runs, prints, and maps the outcome to an exit code:
/// 0 on success, 1 when a check failed, 2 on errors.
pub fn main_exit_code() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(o) => {
            print!("{}", o.text);
            if o.ok {
                0
            } else {
                eprintln!("check failed");
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
