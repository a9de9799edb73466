use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use confgeom::classify::{classify, sample_points, Tolerances, DEFAULT_SAMPLES};
use confgeom::frameode::{CaseId, CaseSpec};
use confgeom::immersion::catalog::{catalog_entries, entry, Params};
use confgeom::immersion::{parse, ImmersionSpec};
use confgeom::invariants::{conformal_tensors, identity_residuals};

mod report;
mod suites;

use report::{sig17, sig17_list, CatalogRow, ClassReport, InputEcho, PointReport, Report, ResidualRow};
use suites::Suite;

/// `println!` that tolerates a closed stdout, e.g. when piped into `head`.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

/// Conformal invariants of hypersurfaces in pseudo-Riemannian space forms.
#[derive(Parser)]
#[command(name = "confgeom", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print tau, A, B, C and identity residuals at points.
    Compute(ComputeArgs),
    /// Decide regularity, conformality and Blaschke para-umbilicity.
    Classify(ClassifyArgs),
    /// Run a verification suite over the catalog.
    Verify(VerifyArgs),
    /// List the built-in surfaces.
    Catalog(CatalogArgs),
}

#[derive(Args)]
struct Source {
    /// Catalog surface name.
    #[arg(long, required_unless_present = "file", conflicts_with = "file")]
    surface: Option<String>,
    /// File with an immersion description.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Catalog parameter override, `name=value`.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
}

#[derive(Args)]
struct ComputeArgs {
    #[command(flatten)]
    source: Source,
    /// Evaluation point, comma separated; may be repeated.
    #[arg(long, value_parser = parse_point, conflicts_with = "grid")]
    at: Vec<Vec<f64>>,
    /// Evaluate on an `n^m` grid inside the domain.
    #[arg(long)]
    grid: Option<usize>,
    /// Fail with exit code 3 when an identity residual reaches this value.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// Write the JSON report here (`-` for standard output).
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    /// Tolerance for conformality and the para-umbilical fit.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
    /// Restrict the frame-ode suite to one case (I, II, III, T1..T5).
    #[arg(long)]
    case: Option<String>,
    /// Case parameter; requires --case.
    #[arg(long, requires = "case")]
    r: Option<f64>,
    /// Override every suite tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = suites::IDENTITY_SAMPLES)]
    samples: usize,
    /// Seed for the random isometries of the invariance suite.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct CatalogArgs {
    /// Show one entry with its description text.
    #[arg(long)]
    name: Option<String>,
    #[arg(long = "param", value_parser = parse_param, requires = "name")]
    params: Vec<(String, f64)>,
    #[arg(long)]
    json: Option<PathBuf>,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("bad value in `{s}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn parse_point(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| format!("bad coordinate `{x}`: {e}"))).collect()
}

/// Process outcome other than success.
enum Failure {
    Input(String),
    Degenerate(String),
    Verification,
}

impl From<confgeom::Error> for Failure {
    fn from(e: confgeom::Error) -> Self {
        if e.is_degeneracy() {
            Failure::Degenerate(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

type Outcome = Result<(), Failure>;

fn load(source: &Source) -> Result<(ImmersionSpec, InputEcho), Failure> {
    let given: Params = source.params.iter().cloned().collect();
    let (spec, resolved) = match (&source.surface, &source.file) {
        (Some(name), _) => {
            let e = entry(name)?;
            let resolved = e.resolve(&given)?;
            (e.spec(&given)?, resolved)
        }
        (None, Some(path)) => {
            if !given.is_empty() {
                return Err(Failure::Input("--param applies to catalog surfaces only".into()));
            }
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
            (parse(&text)?, Params::new())
        }
        (None, None) => return Err(Failure::Input("one of --surface or --file is required".into())),
    };
    let echo = InputEcho {
        surface: source.surface.clone(),
        file: source.file.as_ref().map(|p| p.display().to_string()),
        params: resolved,
        dsl: spec.to_dsl(),
        dim: spec.dim(),
    };
    Ok((spec, echo))
}

fn write_json(path: Option<&Path>, report: &Report) -> Outcome {
    let Some(path) = path else { return Ok(()) };
    let text = serde_json::to_string_pretty(report).map_err(|e| Failure::Input(e.to_string()))?;
    if path == Path::new("-") {
        out!("{text}");
        Ok(())
    } else {
        std::fs::write(path, text + "\n").map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
    }
}

fn print_matrix(label: &str, rows: &[Vec<f64>]) {
    for (i, r) in rows.iter().enumerate() {
        let head = if i == 0 { label } else { "" };
        out!("  {head:<6}{}", sig17_list(r));
    }
}

fn cmd_compute(args: &ComputeArgs) -> Outcome {
    let start = Instant::now();
    let (spec, echo) = load(&args.source)?;
    let m = spec.dim();
    let points = if let Some(n) = args.grid {
        sample_points(&spec, n.pow(m as u32))
    } else if args.at.is_empty() {
        vec![spec.domain_center()]
    } else {
        args.at.clone()
    };
    if let Some(p) = points.iter().find(|p| p.len() != m) {
        return Err(Failure::Input(format!("point has {} coordinates, surface has {m}", p.len())));
    }
    out!("surface: {}", echo.dsl);
    let mut report = Report::new("compute");
    let mut passed = true;
    for p in &points {
        let cd = conformal_tensors(&spec, p)?;
        let pr = PointReport::from(&cd);
        out!("point {}", sig17_list(p));
        out!("  tau   {}", sig17(pr.tau));
        out!("  eig B {}", sig17_list(&pr.second_form_eigenvalues));
        out!("  eig A {}", sig17_list(&pr.blaschke_eigenvalues));
        print_matrix("g", &pr.metric);
        print_matrix("A", &pr.blaschke);
        print_matrix("B", &pr.second_form);
        out!("  C     {}", sig17_list(&pr.conformal_form));
        out!("  rho   {}", sig17(pr.rho));
        for (name, x) in identity_residuals(&cd).named() {
            let ok = x < args.tol;
            passed &= ok;
            out!("  {name:<14}{}  {}", sig17(x), if ok { "ok" } else { "FAIL" });
        }
        report.points.push(pr);
    }
    report.input = Some(echo);
    report.passed = Some(passed);
    report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
    write_json(args.json.as_deref(), &report)?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn cmd_classify(args: &ClassifyArgs) -> Outcome {
    let start = Instant::now();
    let (spec, echo) = load(&args.source)?;
    let mut tol = Tolerances::default();
    if let Some(t) = args.tol {
        tol.conformal = t;
        tol.para_umbilical = t;
    }
    let result = classify(&spec, args.samples, &tol)?;
    let cr = ClassReport::from(&result);
    let short = |x: Option<f64>| x.map_or("-".to_string(), |x| format!("{x:.6}"));
    let mut summary = result.verdict().to_string();
    if result.para_umbilical {
        summary += &format!(", lambda={}, mu={}", short(cr.lambda), short(cr.mu));
        if let Some(case) = &cr.space_form_case {
            summary += &format!(", case={case}");
        }
    }
    out!("{summary}");
    out!("  samples          {}", cr.samples);
    out!("  regular          {}", cr.regular);
    if let Some(d) = &cr.degeneracy {
        out!("  degeneracy       {d}");
    }
    out!("  conformal        {}", cr.conformal);
    out!("  para-umbilical   {}", cr.para_umbilical);
    let opt = |x: Option<f64>| x.map_or("-".to_string(), sig17);
    out!("  max |C|          {}", opt(cr.max_conformal_form));
    out!("  lambda           {} +- {}", opt(cr.lambda), opt(cr.lambda_stddev));
    out!("  mu               {} +- {}", opt(cr.mu), opt(cr.mu_stddev));
    out!("  fit residual     {}", opt(cr.fit_residual));
    out!("  <c,c>            {}", opt(cr.c_norm));
    for (k, v) in &cr.c_residuals {
        out!("  c {k:<14} {}", sig17(*v));
    }
    out!("  space form       {}", cr.space_form_case.as_deref().unwrap_or("-"));
    let mut report = Report::new("classify");
    report.input = Some(echo);
    report.classification = Some(cr);
    report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
    write_json(args.json.as_deref(), &report)?;
    match result.degeneracy {
        Some(d) => Err(Failure::Degenerate(d)),
        None => Ok(()),
    }
}

fn print_rows(rows: &[ResidualRow]) {
    let width = rows.iter().map(|r| r.subject.len()).max().unwrap_or(0);
    for r in rows {
        let value = r.value.map_or("non-finite".to_string(), sig17);
        let cmp = match r.bound {
            report::Bound::Below => "<",
            report::Bound::AtLeast => ">=",
        };
        out!(
            "{:<5} {:<14} {:<width$} {:<28} {value:>24} {cmp} {:.1e}",
            if r.pass { "PASS" } else { "FAIL" },
            r.suite,
            r.subject,
            r.name,
            r.tolerance,
        );
    }
}

fn cmd_verify(args: &VerifyArgs) -> Outcome {
    let start = Instant::now();
    let cases: Vec<CaseSpec> = match &args.case {
        Some(name) => {
            let id: CaseId = name.parse()?;
            vec![CaseSpec::new(id, args.r.unwrap_or(id.default_r()))?]
        }
        None => CaseId::ALL.iter().map(|&id| CaseSpec::new(id, id.default_r())).collect::<Result<_, _>>()?,
    };
    let run = |s: Suite| args.suite == s || args.suite == Suite::All;
    let mut rows = Vec::new();
    if run(Suite::Identities) {
        rows.extend(suites::identities(args.samples, args.tol));
    }
    if run(Suite::Integrability) {
        rows.extend(suites::integrability(suites::INTEGRABILITY_POINTS, args.tol));
    }
    if run(Suite::FrameOde) {
        rows.extend(suites::frame_ode(&cases, args.tol));
    }
    if run(Suite::Invariance) {
        rows.extend(suites::invariance(args.seed, suites::ISOMETRY_DRAWS, args.samples, args.tol));
    }
    print_rows(&rows);
    let passed = rows.iter().all(|r| r.pass);
    let failed = rows.iter().filter(|r| !r.pass).count();
    out!("{}: {} checks, {failed} failed", if passed { "PASS" } else { "FAIL" }, rows.len());
    let mut report = Report::new("verify");
    report.residuals = rows;
    report.passed = Some(passed);
    report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
    write_json(args.json.as_deref(), &report)?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn cmd_catalog(args: &CatalogArgs) -> Outcome {
    let start = Instant::now();
    let selected = match &args.name {
        Some(name) => vec![entry(name)?],
        None => catalog_entries().iter().collect(),
    };
    let given: Params = args.params.iter().cloned().collect();
    let none = Params::new();
    let mut report = Report::new("catalog");
    for e in selected {
        let spec = e.spec(if args.name.is_some() { &given } else { &none })?;
        let a = &spec.ambient;
        let row = CatalogRow {
            name: e.name.into(),
            family: e.family.name().into(),
            description: e.surface.into(),
            constraint: e.constraint.into(),
            defaults: e.defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>(),
            ambient: format!("{} {} {}", a.form.letter(), a.signature.dim(), a.signature.index()),
            dsl: args.name.as_ref().map(|_| spec.to_dsl()),
        };
        let defaults: Vec<String> = row.defaults.iter().map(|(k, v)| format!("{k}={v}")).collect();
        out!(
            "{:<20} {:<19} ambient {:<8} [{}]  {}  {}",
            row.name,
            row.family,
            row.ambient,
            defaults.join(", "),
            row.constraint,
            row.description
        );
        if let Some(dsl) = &row.dsl {
            out!("  {dsl}");
        }
        report.catalog.push(row);
    }
    report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
    write_json(args.json.as_deref(), &report)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Compute(a) => cmd_compute(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Catalog(a) => cmd_catalog(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Degenerate(msg)) => {
            eprintln!("degenerate: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Verification) => {
            eprintln!("verification failed");
            ExitCode::from(3)
        }
    }
}
