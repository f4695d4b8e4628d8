mod output;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ucentropy::distribution::{optimum_certificate, reduce_traced, MergeOrder};
use ucentropy::format::{parse_distribution, parse_family, parse_range, write_distribution, write_family};
use ucentropy::lab::{self, ScanConfig, ScanKind, ScanReport};
use ucentropy::setfamily::{
    check_frequency_bound, entropy_of, enumerate_union_closed, frequency_profile, union_closure,
    union_distribution, SetFamily, SubsetDistribution, MAX_ENUM_GROUND,
};
use ucentropy::suite::{self, Module, SuiteConfig};
use ucentropy::tolerance::{INEQUALITY_TOL, PIPELINE_TOL, REPLAY_TOL, SCAN_TOL};
use ucentropy::{Error, Prob, GOLDEN, GOLDEN_COMPLEMENT};

use output::{report_path, write_atomic, write_json, RunManifest};

const DEFAULT_SEED: u64 = 42;
const DEFAULT_STEP: f64 = 1e-4;
const DEFAULT_SAMPLES: usize = 100_000;
const DEFAULT_BETAS: &str = "0.55:0.70:0.01";

#[derive(Parser)]
#[command(
    name = "ucentropy",
    version,
    about = "Entropy inequality checks for union-closed families"
)]
struct Cli {
    /// Directory for reports.
    #[arg(long, global = true, default_value = "reports")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run every acceptance check and write one report per check.
    VerifyAll {
        /// Restrict to one module: kernel, distribution, lab or setfamily.
        #[arg(long, value_parser = parse_module)]
        only: Option<Module>,
        /// Replace every per-check tolerance.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Instances for each randomized coordinate-inequality scan.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Reduce a distribution file to at most one non-zero atom.
    Reduce { input: PathBuf, output: PathBuf },
    /// Run a single scan.
    Scan(ScanArgs),
    /// Union-closed family tools.
    #[command(subcommand)]
    Family(FamilyCommand),
}

#[derive(Subcommand)]
enum FamilyCommand {
    /// Frequency profile and the (3 - sqrt 5)/2 frequency bound.
    Check { file: PathBuf },
    /// Union closure of a family file.
    Closure {
        file: PathBuf,
        /// Write the closed family here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Census of every union-closed family on [n], n <= 4, as CSV.
    Enumerate {
        #[arg(long)]
        n: u8,
    },
    /// H(A), H(A ∪ B) and the union bound for A uniform on the family.
    Entropy {
        file: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
    },
}

fn parse_module(s: &str) -> Result<Module, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_scan(s: &str) -> Result<ScanKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure modes that map to exit codes 2 and 3.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Precondition(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Precondition(_)
            | Error::Infeasible(_)
            | Error::NotUnionClosed { .. }
            | Error::InvalidFamily(_) => Failure::Precondition(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::VerifyAll {
            only,
            tol,
            seed,
            samples,
        } => verify_all(&cli.out, cli.format, only, tol, seed, samples),
        Command::Reduce { ref input, ref output } => reduce(input, output),
        Command::Scan(ref args) => scan(&cli.out, cli.format, args),
        Command::Family(ref cmd) => family(&cli.out, cmd),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Precondition(msg)) => {
            eprintln!("precondition violated: {msg}");
            ExitCode::from(3)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn fmt_margin(x: f64) -> String {
    format!("{x:.6e}")
}

fn verify_all(
    out: &Path,
    format: Format,
    only: Option<Module>,
    tol: Option<f64>,
    seed: u64,
    samples: Option<usize>,
) -> Outcome {
    let mut cfg = SuiteConfig {
        seed,
        tolerance: tol,
        only,
        ..SuiteConfig::default()
    };
    if let Some(n) = samples {
        cfg.lemma_samples = n;
    }
    cfg.validate()?;

    let mut manifest = RunManifest::start("verify-all", seed);
    manifest.param("only", only.map_or("all".to_string(), |m| m.to_string()));
    manifest.param("tol", tol.map_or("default".to_string(), |t| t.to_string()));
    manifest.param("lemma_samples", cfg.lemma_samples);

    let outcomes = suite::run(&cfg)?;
    let mut csv = String::from(ScanReport::CSV_HEADER);
    csv.push('\n');
    let mut failed = 0;
    for c in &outcomes {
        let path = report_path(out, "verify-all", &format!("check-{:02}", c.criterion), seed, "json");
        write_json(&path, c)?;
        manifest.record(&path);
        for r in &c.reports {
            csv.push_str(&r.to_csv_row());
            csv.push('\n');
        }
        if !c.passed() {
            failed += 1;
        }
        if format == Format::Json {
            let verdict = if c.passed() { "PASS" } else { "FAIL" };
            let worst = c.worst().expect("every check has a report");
            println!(
                "criterion {} {}: {verdict} (worst {} min_margin={} tol={:e})",
                c.criterion,
                c.title,
                worst.name,
                fmt_margin(worst.min_margin),
                worst.config.tolerance
            );
        }
    }
    if format == Format::Csv {
        let path = report_path(out, "verify-all", "summary", seed, "csv");
        write_atomic(&path, csv.as_bytes())?;
        manifest.record(&path);
        print!("{csv}");
    }
    manifest.finish(&out.join("verify-all"), &format!("run-{seed}"))?;
    if failed == 0 {
        eprintln!("{} checks passed", outcomes.len());
    } else {
        eprintln!("{failed} of {} checks failed", outcomes.len());
    }
    Ok(failed == 0)
}

#[derive(Serialize)]
struct ReduceSidecar {
    input: String,
    atoms_in: usize,
    merges: usize,
    /// Mean of the input.
    t: f64,
    /// Expected entropy of the input.
    u: f64,
    /// Non-zero value of the reduced distribution.
    v: f64,
    /// Weight on `v`.
    q: f64,
    zero_mass: f64,
    mean_residual: f64,
    entropy_residual: f64,
    joint_entropy_before: f64,
    joint_entropy_after: f64,
    /// `v` from the closed form `g(u/t)`, when `0 < t < 1` and `u > 0`.
    closed_form_v: Option<f64>,
    closed_form_optimum: Option<f64>,
    passed: bool,
}

fn reduce(input: &Path, output: &Path) -> Outcome {
    let d = parse_distribution(&read(input)?).map_err(|e| Failure::Usage(format!("{}: {e}", input.display())))?;
    let trace = reduce_traced(&d, MergeOrder::Ascending);
    let r = &trace.result;

    let t = d.mean().get();
    let u = d.expected_entropy();
    let (q, v) = r.pairs().find(|&(_, x)| x > 0.0).unwrap_or((0.0, 0.0));
    let cert = (t > 0.0 && t < 1.0 && u > 0.0)
        .then(|| optimum_certificate(Prob::new(t).expect("mean"), u).ok())
        .flatten();
    let mean_residual = (r.mean().get() - t).abs();
    let entropy_residual = (r.expected_entropy() - u).abs();
    let sidecar = ReduceSidecar {
        input: input.display().to_string(),
        atoms_in: d.len(),
        merges: trace.steps.len(),
        t,
        u,
        v,
        q,
        zero_mass: r.zero_mass(),
        mean_residual,
        entropy_residual,
        joint_entropy_before: trace.initial_joint_entropy,
        joint_entropy_after: r.expected_joint_entropy(),
        closed_form_v: cert.as_ref().map(|c| c.v.get()),
        closed_form_optimum: cert.as_ref().map(|c| c.optimum),
        passed: mean_residual <= PIPELINE_TOL && entropy_residual <= PIPELINE_TOL,
    };

    write_atomic(output, write_distribution(r).as_bytes())?;
    let mut sidecar_path = output.as_os_str().to_owned();
    sidecar_path.push(".json");
    let sidecar_path = PathBuf::from(sidecar_path);
    write_json(&sidecar_path, &sidecar)?;
    println!(
        "reduced {} atoms in {} merges: v = {v}, q = {q}, residuals {} / {}",
        d.len(),
        trace.steps.len(),
        fmt_margin(mean_residual),
        fmt_margin(entropy_residual)
    );
    Ok(sidecar.passed)
}

#[derive(Args)]
struct ScanArgs {
    /// turlough, adric, peri, mercy, main, main2, threshold or bridge.
    #[arg(value_parser = parse_scan)]
    name: ScanKind,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Thresholds for `threshold`, as lo:hi:step.
    #[arg(long)]
    beta: Option<String>,
    /// Grid range as lo:hi.
    #[arg(long)]
    range: Option<String>,
    /// Scale inside f(alpha g(x)) for `peri`.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long)]
    tol: Option<f64>,
}

fn parse_pair(s: &str) -> Result<(f64, f64), Failure> {
    let bad = || Failure::Usage(format!("expected lo:hi, found '{s}'"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo < hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn scan(out: &Path, format: Format, a: &ScanArgs) -> Outcome {
    let step = a.step.unwrap_or(DEFAULT_STEP);
    let grid = |lo: f64, hi: f64| -> Result<ScanConfig, Failure> {
        let (lo, hi) = match &a.range {
            Some(r) => parse_pair(r)?,
            None => (lo, hi),
        };
        Ok(ScanConfig::grid(lo, hi, step)
            .with_seed(a.seed)
            .with_tolerance(a.tol.unwrap_or(SCAN_TOL)))
    };
    let random = |tol: f64| {
        let mut c = ScanConfig::random(a.samples, a.seed).with_tolerance(a.tol.unwrap_or(tol));
        c.grid_step = step;
        c
    };

    let mut manifest = RunManifest::start("scan", a.seed);
    manifest
        .param("name", a.name)
        .param("step", step)
        .param("samples", a.samples);

    let reports = match a.name {
        ScanKind::Turlough => vec![lab::scan_square_ratio(&grid(0.0, 1.0)?)?],
        ScanKind::Adric => vec![lab::scan_square_rate_ratio(&grid(GOLDEN, 1.0)?)?],
        ScanKind::Peri => {
            let alpha = Prob::new(a.alpha).map_err(|e| Failure::Usage(e.to_string()))?;
            manifest.param("alpha", a.alpha);
            vec![lab::scan_rate_composition_convexity(alpha, &grid(0.05, 10.0)?)?]
        }
        ScanKind::Mercy => vec![lab::scan_log_ratio_decreasing(&grid(0.0, 1.0)?)?],
        ScanKind::Main => vec![lab::scan_union_inequality(&random(INEQUALITY_TOL))?],
        ScanKind::Main2 => vec![lab::scan_product_inequality(&random(INEQUALITY_TOL))?],
        ScanKind::Bridge => vec![lab::scan_complement_bridge(&random(REPLAY_TOL))?],
        ScanKind::Threshold => {
            let spec = a.beta.as_deref().unwrap_or(DEFAULT_BETAS);
            manifest.param("beta", spec);
            let betas = parse_range(spec)?.points()?;
            lab::threshold_exploration(&betas, &random(INEQUALITY_TOL))?
        }
    };

    let name = a.name.as_str();
    let json_path = report_path(out, "scan", name, a.seed, "json");
    let csv_path = report_path(out, "scan", name, a.seed, "csv");
    let mut csv = String::new();
    if a.name == ScanKind::Threshold {
        write_json(&json_path, &reports)?;
        csv.push_str("beta,min_margin,random_min,family_min,points_checked,passed\n");
        for r in &reports {
            let x = |k: &str| r.extras.get(k).copied().unwrap_or(f64::NAN);
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{}",
                x("beta"),
                r.min_margin,
                x("random_min"),
                x("family_min"),
                r.points_checked,
                r.passed
            );
        }
    } else {
        write_json(&json_path, &reports[0])?;
        csv.push_str(ScanReport::CSV_HEADER);
        csv.push('\n');
        csv.push_str(&reports[0].to_csv_row());
        csv.push('\n');
    }
    manifest.record(&json_path);
    if format == Format::Csv || a.name == ScanKind::Threshold {
        write_atomic(&csv_path, csv.as_bytes())?;
        manifest.record(&csv_path);
    }
    manifest.finish(&out.join("scan"), &format!("{name}-{}", a.seed))?;

    match format {
        Format::Csv => print!("{csv}"),
        Format::Json if a.name == ScanKind::Threshold => {
            println!("{}", serde_json::to_string_pretty(&reports).expect("reports serialize"))
        }
        Format::Json => println!("{}", reports[0].to_json()),
    }
    // Threshold runs are exploratory and never fail.
    Ok(a.name == ScanKind::Threshold || reports.iter().all(|r| r.passed))
}

fn set_label(mask: u32) -> String {
    if mask == 0 {
        return "∅".to_string();
    }
    let labels: Vec<String> = SetFamily::elements(mask).map(|e| e.to_string()).collect();
    format!("{{{}}}", labels.join(","))
}

fn load_family(path: &Path) -> Result<SetFamily, Failure> {
    parse_family(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct FamilyCheckReport {
    ground_n: u8,
    size: u64,
    counts: Vec<u64>,
    frequency: Vec<f64>,
    max_count: u64,
    max_frequency: f64,
    argmax_element: Option<u32>,
    /// `max_frequency - (3 - sqrt 5)/2`.
    margin: f64,
    meets_bound: bool,
    meets_half: bool,
}

#[derive(Serialize)]
struct FamilyEntropyReport {
    ground_n: u8,
    size: usize,
    entropy: f64,
    union_entropy: f64,
    /// `H(A) - H(A ∪ B)`; nonnegative for union-closed families.
    uniform_gap: f64,
    union_distribution: Vec<(String, f64)>,
    max_marginal: f64,
    alpha: Option<f64>,
    /// `H(A ∪ B) - H(alpha^2)/H(alpha) H(A)`.
    margin: Option<f64>,
    /// `H(A ∪ B) - H(2 alpha - alpha^2)/H(alpha) H(A)`.
    sharp_margin: Option<f64>,
}

fn family(out: &Path, cmd: &FamilyCommand) -> Outcome {
    match cmd {
        FamilyCommand::Check { file } => {
            let f = load_family(file)?;
            if let Some((a, b, u)) = f.union_violation() {
                return Err(Failure::Precondition(format!(
                    "family is not union-closed: {} ∪ {} = {} is missing",
                    set_label(a),
                    set_label(b),
                    set_label(u)
                )));
            }
            let c = check_frequency_bound(&f)?;
            let p = frequency_profile(&f)?;
            let report = FamilyCheckReport {
                ground_n: f.ground_n(),
                size: p.size,
                counts: p.counts,
                frequency: p.frequency,
                max_count: c.max_count,
                max_frequency: p.max_frequency,
                argmax_element: c.argmax_element,
                margin: c.margin,
                meets_bound: c.meets_bound,
                meets_half: c.meets_half,
            };
            let stem = file.file_stem().map_or("family".into(), |s| s.to_string_lossy());
            write_json(&out.join("family").join(format!("check-{stem}.json")), &report)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("serializes"));
            Ok(report.meets_bound)
        }
        FamilyCommand::Closure { file, output } => {
            let f = load_family(file)?;
            let closed = union_closure(f.ground_n(), f.members().iter().copied())?;
            let text = write_family(&closed);
            match output {
                Some(path) => write_atomic(path, text.as_bytes())?,
                None => print!("{text}"),
            }
            Ok(true)
        }
        FamilyCommand::Enumerate { n } => enumerate(out, *n),
        FamilyCommand::Entropy { file, alpha } => {
            let f = load_family(file)?;
            let d = SubsetDistribution::uniform(&f)?;
            let u = union_distribution(&d);
            let max_marginal = d.marginals().into_iter().fold(0.0, f64::max);
            let alpha = match alpha {
                Some(a) => Some(*a),
                None if max_marginal > 0.0 && max_marginal <= GOLDEN_COMPLEMENT => Some(max_marginal),
                None => None,
            };
            let check = alpha
                .map(|a| ucentropy::setfamily::check_union_entropy(&d, a))
                .transpose()?;
            let entropy = entropy_of(&d);
            let union_entropy = entropy_of(&u);
            let report = FamilyEntropyReport {
                ground_n: f.ground_n(),
                size: f.len(),
                entropy,
                union_entropy,
                uniform_gap: entropy - union_entropy,
                union_distribution: u.atoms().iter().map(|&(p, m)| (set_label(m), p)).collect(),
                max_marginal,
                alpha,
                margin: check.as_ref().map(|c| c.margin),
                sharp_margin: check.as_ref().map(|c| c.sharp_margin),
            };
            let stem = file.file_stem().map_or("family".into(), |s| s.to_string_lossy());
            write_json(&out.join("family").join(format!("entropy-{stem}.json")), &report)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("serializes"));
            Ok(true)
        }
    }
}

#[derive(Serialize)]
struct EnumerateSummary {
    ground_n: u8,
    /// Union-closed families, `{∅}` included.
    families: u64,
    /// Families checked against the bound (`{∅}` excluded).
    checked: u64,
    min_max_frequency_num: Option<u64>,
    min_max_frequency_den: Option<u64>,
    min_family_id: Option<u64>,
    all_meet_bound: bool,
    all_meet_half: bool,
}

fn enumerate(out: &Path, n: u8) -> Outcome {
    if n > MAX_ENUM_GROUND {
        return Err(Failure::Usage(format!("enumerate supports n <= {MAX_ENUM_GROUND}, got {n}")));
    }
    let mut csv = String::from("family_id,size,max_frequency_num,max_frequency_den,margin\n");
    print!("{csv}");
    let mut s = EnumerateSummary {
        ground_n: n,
        families: 0,
        checked: 0,
        min_max_frequency_num: None,
        min_max_frequency_den: None,
        min_family_id: None,
        all_meet_bound: true,
        all_meet_half: true,
    };
    for (id, f) in enumerate_union_closed(n)? {
        s.families += 1;
        if f.is_empty_set_only() {
            continue;
        }
        s.checked += 1;
        let c = check_frequency_bound(&f)?;
        s.all_meet_bound &= c.meets_bound;
        s.all_meet_half &= c.meets_half;
        let smaller = match (s.min_max_frequency_num, s.min_max_frequency_den) {
            (Some(num), Some(den)) => {
                u128::from(c.max_count) * u128::from(den) < u128::from(num) * u128::from(c.size)
            }
            _ => true,
        };
        if smaller {
            s.min_max_frequency_num = Some(c.max_count);
            s.min_max_frequency_den = Some(c.size);
            s.min_family_id = Some(id);
        }
        let row = format!("{id},{},{},{},{}\n", c.size, c.max_count, c.size, c.margin);
        print!("{row}");
        csv.push_str(&row);
    }
    write_atomic(&out.join("family").join(format!("enumerate-n{n}.csv")), csv.as_bytes())?;
    write_json(&out.join("family").join(format!("enumerate-n{n}.json")), &s)?;
    if let (Some(num), Some(den)) = (s.min_max_frequency_num, s.min_max_frequency_den) {
        eprintln!(
            "n={n}: {} union-closed families, {} checked, minimum max frequency {num}/{den} (family {}), bound {}",
            s.families,
            s.checked,
            s.min_family_id.unwrap_or(0),
            if s.all_meet_bound { "holds" } else { "FAILS" }
        );
    } else {
        eprintln!("n={n}: {} union-closed families, none to check", s.families);
    }
    Ok(s.all_meet_bound)
}
