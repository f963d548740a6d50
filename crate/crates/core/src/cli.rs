//! The `fibsic` command line: argument definitions, subcommands and the
//! built-in self test.
//!
//! Exit codes: 0 success, 1 usage or invalid input, 2 search did not
//! converge, 3 verification or self test failed, 4 I/O or parse error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;

use crate::fibonacci::{check_dimension_properties, check_identities, dimension};
use crate::io::{report_path, FiducialFile, FileError, RunReport, SearchSummary};
use crate::modmat::{
    analyze_fibonacci_symmetry, appleby_fa, classify_order3_against, fibonacci_matrix,
    reference_conjugations, solve_conjugator, zauner, ModMatrix, Order3Class,
};
use crate::search::{
    haar_random_vector, prepare_symmetry, search, to_real, welch_bound, SearchConfig,
    SymmetricObjective,
};
use crate::verify::{default_candidates, verify_with, VerifyOptions};
use crate::weyl::{clifford_modulus, WeylHeisenberg};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_FAILED: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "fibsic", version, about = "Fibonacci-Lucas SIC-POVM fiducials: search, verification and number theory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Table of the dimensions d_k = L_{2k} + 1.
    Dims(DimsArgs),
    /// Order, trace and order-3 class of a symmetry matrix.
    Symmetry(SymmetryArgs),
    /// Search for a fiducial with an anti-unitary symmetry.
    Search(SearchArgs),
    /// Verify a fiducial file.
    Verify(VerifyArgs),
    /// Run the built-in consistency checks.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct DimsArgs {
    /// Largest index k.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub k_max: u64,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("dimension").required(true).args(["dim", "k"])))]
pub struct DimensionArgs {
    /// Hilbert space dimension.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub dim: Option<u64>,
    /// Index into the Lucas dimension sequence.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=40))]
    pub k: Option<u64>,
}

impl DimensionArgs {
    fn resolve(&self) -> u64 {
        match (self.dim, self.k) {
            (Some(d), _) => d,
            (None, Some(k)) => crate::fibonacci::dimension_u64(k),
            (None, None) => unreachable!("clap enforces the group"),
        }
    }
}

#[derive(Debug, Args)]
pub struct SymmetryArgs {
    #[command(flatten)]
    pub dimension: DimensionArgs,
    /// Matrix "a,b,c,d" (row-major) or one of ff, fz, fa; default ff.
    #[arg(long, default_value = "ff")]
    pub matrix: String,
    /// Arithmetic modulus; defaults to d.
    #[arg(long)]
    pub modulus: Option<u64>,
    /// Analyse this power of the matrix.
    #[arg(long, default_value_t = 1)]
    pub power: u64,
    /// Classify the (powered) matrix as an order-3 element.
    #[arg(long)]
    pub classify: bool,
    /// Solve for G with G·M·G⁻¹ equal to this matrix (same syntax as --matrix).
    #[arg(long)]
    pub conjugate_to: Option<String>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub dimension: DimensionArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub restarts: u64,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iter: u64,
    /// Accepted excess of the frame potential over 2/(d+1).
    #[arg(long, default_value_t = 1e-13)]
    pub gap: f64,
    /// Fiducial output path; the report goes to <out>.report.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Evaluate the objective with FFTs.
    #[arg(long)]
    pub fft: bool,
    /// Worker threads (default: available parallelism). Does not change the result.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,
    /// Anti-unitary symmetry "a,b,c,d" mod d (default: the Fibonacci matrix).
    #[arg(long)]
    pub symmetry: Option<String>,
    /// Skip the Gauss-Newton refinement of near-solutions.
    #[arg(long)]
    pub no_polish: bool,
    /// Suppress progress messages on stderr.
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub file: PathBuf,
    #[arg(long, default_value_t = crate::verify::DEFAULT_TOLERANCE)]
    pub tol: f64,
    /// Candidate symmetries "a,b,c,d;a,b,c,d;..." mod d (default: ff).
    #[arg(long)]
    pub probe: Option<String>,
    /// Skip the stabilizer probe.
    #[arg(long, conflicts_with = "probe")]
    pub no_probe: bool,
    /// Also report max |phase| over overlaps with both indices divisible by p.
    #[arg(long)]
    pub phase_divisor: Option<u64>,
    /// Write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Negative control: replace the F_a class representative by a wrong matrix.
    #[arg(long, hide = true)]
    pub corrupt_fa: bool,
}

/// Parse and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli.command, out, err),
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            code
        }
    }
}

pub fn run(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match command {
        Command::Dims(a) => cmd_dims(&a, out),
        Command::Symmetry(a) => cmd_symmetry(&a, out),
        Command::Search(a) => cmd_search(&a, out, err),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Selftest(a) => cmd_selftest(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<FileError> for CliError {
    fn from(e: FileError) -> Self {
        Self { code: EXIT_IO, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self { code: EXIT_IO, message: e.to_string() }
    }
}

type CmdResult = Result<i32, CliError>;

/// `ff`, `fz`, `fa` or `"a,b,c,d"`, over `modulus`; `d` selects F_a.
fn parse_matrix(text: &str, modulus: u64, d: u64) -> Result<ModMatrix, CliError> {
    match text.trim() {
        "ff" => Ok(fibonacci_matrix(modulus)),
        "fz" => Ok(zauner(modulus)),
        "fa" => {
            if modulus != d {
                return Err(CliError::usage("fa is only defined modulo d"));
            }
            appleby_fa(d).ok_or_else(|| CliError::usage(format!("F_a needs d ≡ 3 mod 9, got d = {d}")))
        }
        other => ModMatrix::parse(other, modulus)
            .map_err(|e| CliError::usage(format!("matrix {other:?}: {e}"))),
    }
}

fn fmt_matrix(m: &ModMatrix) -> String {
    let [a, b, c, d] = m.entries();
    format!("[[{a},{b}],[{c},{d}]] mod {}", m.modulus())
}

pub fn cmd_dims(args: &DimsArgs, out: &mut dyn Write) -> CmdResult {
    writeln!(out, "{:>3}  {:>22}  {:>7}  {:>7}  {:>9}", "k", "d", "d mod 3", "d mod 9", "order 6k")?;
    for k in 1..=args.k_max {
        let e = dimension(k);
        let mod9 = if k % 4 == 0 {
            (e.d.clone() % 9u32).to_string()
        } else {
            "-".to_string()
        };
        writeln!(out, "{k:>3}  {:>22}  {:>7}  {:>7}  {:>9}", e.d.to_string(), e.d_mod3, mod9, 6 * k)?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_symmetry(args: &SymmetryArgs, out: &mut dyn Write) -> CmdResult {
    let d = args.dimension.resolve();
    let modulus = args.modulus.unwrap_or(d);
    if modulus < 2 {
        return Err(CliError::usage("modulus must be at least 2"));
    }
    let base = parse_matrix(&args.matrix, modulus, d)?;
    if !base.is_invertible() {
        return Err(CliError::usage(format!(
            "{} is not invertible (det {})",
            fmt_matrix(&base),
            base.det()
        )));
    }
    let m = base.pow(args.power);
    writeln!(out, "d            {d}")?;
    writeln!(out, "matrix       {}", fmt_matrix(&base))?;
    if args.power != 1 {
        writeln!(out, "power        {} -> {}", args.power, fmt_matrix(&m))?;
    }
    let cap = 24 * modulus.max(8);
    let order = m
        .order(cap)
        .map_err(|e| CliError::usage(e.to_string()))?;
    writeln!(out, "order        {order}")?;
    writeln!(out, "det          {}", m.det())?;
    writeln!(out, "trace        {}", m.trace())?;

    // Fibonacci-specific data along the Lucas sequence
    if let (Some(k), "ff", 1, true) = (args.dimension.k, args.matrix.trim(), args.power, modulus == d) {
        let a = analyze_fibonacci_symmetry(k).map_err(|e| CliError::usage(e.to_string()))?;
        writeln!(out, "trace F^2k   {} (d - 1 = {})", a.trace_at_2k, d - 1)?;
        match a.scalar_at_3k {
            Some(s) => writeln!(out, "F^3k         scalar {s}")?,
            None => writeln!(out, "F^3k         not scalar")?,
        }
        writeln!(out, "F^2k class   {}", a.order3_class)?;
    }

    if args.classify {
        let fa = if modulus == d { appleby_fa(d) } else { None };
        let c = classify_order3_against(&m, &zauner(modulus), fa.as_ref())
            .map_err(|e| CliError::usage(e.to_string()))?;
        writeln!(out, "class        {}", c.class)?;
        if let Some(g) = c.witness {
            writeln!(out, "witness      G = {}", fmt_matrix(&g))?;
        }
    }

    if let Some(target) = &args.conjugate_to {
        let t = parse_matrix(target, modulus, d)?;
        match solve_conjugator(&m, &t).map_err(|e| CliError::usage(e.to_string()))? {
            Some(g) => writeln!(out, "conjugator   G = {}  (G·M·G⁻¹ = {})", fmt_matrix(&g), fmt_matrix(&t))?,
            None => writeln!(out, "conjugator   none: not conjugate to {}", fmt_matrix(&t))?,
        }
    }
    Ok(EXIT_OK)
}

pub fn cmd_search(args: &SearchArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let d = args.dimension.resolve() as usize;
    if !(args.gap > 0.0) {
        return Err(CliError::usage("--gap must be positive"));
    }
    let dbar = clifford_modulus(d);
    let symmetry = match &args.symmetry {
        Some(s) => parse_matrix(s, d as u64, d as u64)?,
        None => fibonacci_matrix(dbar),
    };
    let config = SearchConfig {
        d,
        symmetry,
        max_restarts: args.restarts as usize,
        max_iterations: args.max_iter as usize,
        convergence_gap: args.gap,
        master_seed: args.seed,
        use_fft: args.fft,
        polish: !args.no_polish,
        jobs: args.jobs.map(|j| j as usize),
    };
    let out_path = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("fiducial-d{d}.txt")));
    if !args.quiet {
        writeln!(err, "searching d = {d}, seed {}, up to {} restarts", args.seed, args.restarts)?;
    }
    let result = search(&config).map_err(|e| CliError::usage(e.to_string()))?;

    let fiducial = FiducialFile {
        d,
        seed: Some(args.seed),
        symmetry: Some(format!("{}", sym_label(&config.symmetry))),
        potential: result.achieved_potential.is_finite().then_some(result.achieved_potential),
        amplitudes: result.fiducial.clone(),
    };
    fiducial.write(&out_path)?;

    let wh = WeylHeisenberg::new(d).map_err(|e| CliError::usage(e.to_string()))?;
    let verification = result
        .achieved_potential
        .is_finite()
        .then(|| {
            let opts = VerifyOptions { probe: Some(vec![config.symmetry]), phase_divisor: None };
            verify_with(&wh, &result.fiducial, crate::verify::DEFAULT_TOLERANCE, &opts)
        })
        .transpose()
        .map_err(|e| CliError::usage(e.to_string()))?;
    let report = RunReport {
        search: Some(SearchSummary::new(&config, &result)),
        verification,
    };
    let rpath = report_path(&out_path);
    crate::io::write_text(&rpath, &report.to_json()?)?;

    writeln!(out, "d                  {d}")?;
    writeln!(out, "converged          {}", result.converged)?;
    writeln!(out, "potential          {:.16e}", result.achieved_potential)?;
    writeln!(out, "bound 2/(d+1)      {:.16e}", welch_bound(d))?;
    writeln!(out, "gap                {:.3e}", result.gap())?;
    writeln!(out, "restarts used      {}", result.restarts_used)?;
    writeln!(out, "fiducial           {}", out_path.display())?;
    writeln!(out, "report             {}", rpath.display())?;
    Ok(if result.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn sym_label(m: &ModMatrix) -> String {
    let [a, b, c, d] = m.signed_entries();
    format!("{a},{b},{c},{d} mod {}", m.modulus())
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> CmdResult {
    let file = FiducialFile::read(&args.file)?;
    let d = file.d;
    let wh = WeylHeisenberg::new(d).map_err(|e| CliError::usage(e.to_string()))?;
    let probe = if args.no_probe {
        None
    } else {
        Some(match &args.probe {
            Some(list) => list
                .split(';')
                .filter(|s| !s.trim().is_empty())
                .map(|s| parse_matrix(s, d as u64, d as u64))
                .collect::<Result<Vec<_>, _>>()?,
            None => default_candidates(d),
        })
    };
    let options = VerifyOptions { probe, phase_divisor: args.phase_divisor };
    let report = verify_with(&wh, &file.amplitudes, args.tol, &options)
        .map_err(|e| CliError { code: EXIT_IO, message: e.to_string() })?;

    writeln!(out, "d                          {d}")?;
    writeln!(out, "max gram deviation         {:.3e}", report.max_gram_deviation)?;
    writeln!(out, "overlap modulus deviation  {:.3e}", report.overlap_modulus_deviation)?;
    writeln!(out, "sum |overlap|^2            {:.15}", report.modulus_square_sum)?;
    if let Some(h) = report.triple_product_hermiticity {
        writeln!(out, "triple product asymmetry   {h:.3e}")?;
    }
    if let Some(s) = &report.stabilizer {
        for c in &s.candidates {
            let kind = if c.antiunitary { "anti-unitary" } else { "unitary" };
            let [a, b, cc, dd] = c.matrix;
            let verdict = match (&c.error, c.accepted) {
                (Some(e), _) => format!("error: {e}"),
                (None, true) => format!("accepted (displacement {:?})", c.displacement.unwrap_or_default()),
                (None, false) => format!("rejected (best |overlap| {:.6})", c.best_modulus),
            };
            writeln!(out, "probe {a},{b},{cc},{dd} mod {} ({kind}): {verdict}", c.modulus)?;
        }
        match s.generated_order {
            Some(o) => writeln!(out, "generated order            {o}")?,
            None => writeln!(out, "generated order            -")?,
        }
    }
    match report.detected_antiunitary_order {
        Some(o) => writeln!(out, "anti-unitary order         {o}")?,
        None => writeln!(out, "anti-unitary order         none detected")?,
    }
    if let Some(sub) = &report.sublattice {
        match sub.max_abs_phase {
            Some(p) => writeln!(out, "max |phase| on {}-sublattice {p:.3e} ({} overlaps)", sub.divisor, sub.count)?,
            None => writeln!(out, "max |phase| on {}-sublattice -", sub.divisor)?,
        }
    }
    writeln!(out, "passed (tol {:e})         {}", args.tol, report.passed)?;

    if let Some(path) = &args.report {
        let doc = RunReport { search: None, verification: Some(report.clone()) };
        crate::io::write_text(path, &doc.to_json()?)?;
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_FAILED })
}

/// One section of the self test.
#[derive(Clone, Debug, PartialEq)]
pub struct SelftestSection {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct SelftestOptions {
    /// Replacement for the F_a representative used by the classification.
    pub fa_override: Option<[i64; 4]>,
}

pub fn selftest(options: &SelftestOptions) -> Vec<SelftestSection> {
    let mut sections = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| {
        sections.push(SelftestSection { name: name.into(), passed, detail })
    };

    let ids = check_identities(60);
    push(
        "Fibonacci-Lucas identities (n <= 60)",
        ids.all_passed(),
        format!("{} instances, {} violated", ids.checks.len(), ids.failures().count()),
    );
    let dims = check_dimension_properties(20);
    push(
        "dimension properties (k <= 20)",
        dims.all_passed(),
        format!("{} instances, {} violated", dims.checks.len(), dims.failures().count()),
    );

    let mut failed = Vec::new();
    let identities = reference_conjugations();
    for c in &identities {
        match c.evaluate() {
            Ok(check) if check.passed() => {}
            _ => failed.push(c.label.to_string()),
        }
    }
    for k in 1..=7u64 {
        let d = crate::fibonacci::dimension_u64(k);
        let p2k = fibonacci_matrix(d).pow(2 * k);
        let fa = match options.fa_override {
            Some(e) => ModMatrix::new(e, d).ok(),
            None => appleby_fa(d),
        };
        let expected = if d % 9 == 3 { Order3Class::ApplebyFa } else { Order3Class::Zauner };
        let ok = classify_order3_against(&p2k, &zauner(d), fa.as_ref())
            .map(|c| {
                c.class == expected
                    && c.witness.is_some_and(|g| {
                        let rep = if expected == Order3Class::Zauner { Some(zauner(d)) } else { fa };
                        crate::modmat::conjugate(&g, &p2k).ok() == rep
                    })
            })
            .unwrap_or(false);
        if !ok {
            failed.push(format!("class of F_f^{} at d={d}", 2 * k));
        }
    }
    push(
        "conjugation identities and order-3 classes",
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} identities, 7 classifications", identities.len())
        } else {
            format!("failed: {}", failed.join("; "))
        },
    );

    let mut worst: f64 = 0.0;
    for d in 2..=48usize {
        let wh = WeylHeisenberg::new(d).expect("d >= 2");
        let (x, z) = wh.shift_and_clock();
        let lhs = z.matmul(&x);
        let rhs = x.matmul(&z).scale(wh.omega_pow(1));
        worst = worst.max(lhs.max_diff(&rhs));
    }
    push("Weyl commutation ZX = ωXZ (d <= 48)", worst <= 1e-13, format!("max deviation {worst:.1e}"));

    let (ok, worst) = gradient_check(4);
    push("gradient vs finite differences (d = 4)", ok, format!("max relative error {worst:.1e}"));
    sections
}

/// Composite-objective and plain normalised-potential gradients against
/// central differences with step 1e-6; returns (pass, worst relative error).
pub fn gradient_check(d: usize) -> (bool, f64) {
    let wh = WeylHeisenberg::new(d).expect("d >= 2");
    let ce = prepare_symmetry(&wh, &fibonacci_matrix(clifford_modulus(d))).expect("Fibonacci symmetry");
    let objective = SymmetricObjective::new(ce, false);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for s in 0..4u64 {
        let x = to_real(&haar_random_vector(d, 7_000 + s));
        let (_, g) = objective.value_and_gradient(&x).expect("generic point");
        let (_, g_plain) = objective.engine().normalized_value_and_gradient(&x);
        let scale = g.iter().fold(1e-2f64, |m, v| m.max(v.abs()));
        let scale_plain = g_plain.iter().fold(1e-2f64, |m, v| m.max(v.abs()));
        for i in 0..2 * d {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (objective.value(&xp).unwrap() - objective.value(&xm).unwrap()) / (2.0 * h);
            worst = worst.max((fd - g[i]).abs() / scale);
            let e = objective.engine();
            let fd_plain = (e.normalized_value_and_gradient(&xp).0 - e.normalized_value_and_gradient(&xm).0) / (2.0 * h);
            worst = worst.max((fd_plain - g_plain[i]).abs() / scale_plain);
        }
    }
    (worst <= 1e-6, worst)
}

pub fn cmd_selftest(args: &SelftestArgs, out: &mut dyn Write) -> CmdResult {
    let options = SelftestOptions {
        fa_override: args.corrupt_fa.then_some([1, 3, 0, -2]),
    };
    let sections = selftest(&options);
    for s in &sections {
        let tag = if s.passed { "ok  " } else { "FAIL" };
        writeln!(out, "[{tag}] {}: {}", s.name, s.detail)?;
    }
    let all = sections.iter().all(|s| s.passed);
    writeln!(out, "{}", if all { "all checks passed" } else { "some checks FAILED" })?;
    Ok(if all { EXIT_OK } else { EXIT_FAILED })
}

/// Convenience for tests and scripts: write `amplitudes` as a fiducial file.
pub fn write_fiducial(path: &Path, amplitudes: &[C64]) -> Result<(), FileError> {
    FiducialFile::new(amplitudes.to_vec()).write(path)
}
