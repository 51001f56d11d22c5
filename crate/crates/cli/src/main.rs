//! `specnorm` command-line front end.
//!
//! Exit codes: 0 verdict true or success, 1 verdict false (the certificate is
//! printed), 2 input error, 3 resource guard tripped.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use specnorm::construction::{parse_schedule, verify_trace, ConstructionConfig, ConstructionState, Trace};
use specnorm::error::{HomError, LatticeError, TermError};
use specnorm::hom::{BaseDoc, Coherence, HomDoc, TargetRef};
use specnorm::lattice::{FiniteLattice, LatticeDoc};
use specnorm::opminus::Term;
use specnorm::polyhedral::entails_basic;
use specnorm::rational::{format_scalar, parse_scalar, RationalVector};
use specnorm::FORMAT;

#[derive(Parser, Debug)]
#[command(name = "specnorm", version, about = "Exact half-space lattices, certified entailment and closed homomorphism construction")]
struct Cli {
    /// Seed for the enumeration shuffle; 0 keeps the natural order.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Stage budget for `construct`.
    #[arg(long, global = true, default_value_t = 200)]
    stages: usize,
    /// Largest λ tried by a closure step, as an exact rational.
    #[arg(long = "lambda-cap", global = true)]
    lambda_cap: Option<String>,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Stage schedule over V (value), D (domain), C (closure).
    #[arg(long, global = true, default_value = "VDCC")]
    schedule: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
    Text,
}

/// JSON arguments are inline documents, `@path`, or a path to an existing file.
#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether the meet of ⟦a⟧, a∈A, lies in the union of ⟦b⟧, b∈B.
    Entail {
        #[arg(long = "A")]
        a: String,
        #[arg(long = "B")]
        b: String,
    },
    /// Canonical form of a term.
    Canon {
        #[arg(long)]
        term: String,
    },
    /// Containment of two terms, with certificates.
    Leq {
        #[arg(long)]
        lhs: String,
        #[arg(long)]
        rhs: String,
    },
    /// Distributivity and complete normality of a finite lattice.
    LatticeCheck {
        #[arg(long)]
        file: String,
    },
    /// Coherence of a partial homomorphism.
    HomCheck {
        #[arg(long)]
        file: String,
        /// Lattice for documents whose target is given by id.
        #[arg(long)]
        lattice: Option<String>,
    },
    /// Run a bounded construction and write its trace.
    Construct {
        #[arg(long)]
        lattice: String,
        /// Base homomorphism document; defaults to the trivial base.
        #[arg(long)]
        base: Option<String>,
        /// Comma-separated labels fixing the value order.
        #[arg(long)]
        enumeration: Option<String>,
    },
    /// Re-check every certificate in a trace from scratch.
    VerifyTrace {
        #[arg(long)]
        file: String,
    },
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Guard(String),
}

impl From<LatticeError> for Failure {
    fn from(e: LatticeError) -> Self {
        match e {
            LatticeError::SizeGuard { .. } => Failure::Guard(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<TermError> for Failure {
    fn from(e: TermError) -> Self {
        Failure::Guard(e.to_string())
    }
}

impl From<HomError> for Failure {
    fn from(e: HomError) -> Self {
        match e {
            HomError::Term(t) => t.into(),
            other => Failure::Input(other.to_string()),
        }
    }
}

/// What a command produced: the rendered output and whether its verdict held.
struct Outcome {
    body: String,
    holds: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            if let Err(e) = emit(cli.out.as_deref(), &out.body) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            ExitCode::from(if out.holds { 0 } else { 1 })
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Guard(msg)) => {
            eprintln!("resource guard: {msg}");
            ExitCode::from(3)
        }
    }
}

fn emit(out: Option<&Path>, body: &str) -> std::io::Result<()> {
    match out {
        Some(p) => fs::write(p, body),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Entail { a, b } => entail(cli, a, b),
        Command::Canon { term } => canon(cli, term),
        Command::Leq { lhs, rhs } => leq(cli, lhs, rhs),
        Command::LatticeCheck { file } => lattice_check(cli, file),
        Command::HomCheck { file, lattice } => hom_check(cli, file, lattice.as_deref()),
        Command::Construct { lattice, base, enumeration } => construct(cli, lattice, base.as_deref(), enumeration.as_deref()),
        Command::VerifyTrace { file } => verify(cli, file),
    }
}

fn read_arg(arg: &str) -> Result<String, Failure> {
    let path = match arg.strip_prefix('@') {
        Some(p) => Some(p),
        None if !arg.trim_start().starts_with(['{', '[']) && Path::new(arg).is_file() => Some(arg),
        None => None,
    };
    match path {
        Some(p) => fs::read_to_string(p).map_err(|e| Failure::Input(format!("{p}: {e}"))),
        None => Ok(arg.to_string()),
    }
}

fn parse_arg<T: serde::de::DeserializeOwned>(arg: &str, what: &str) -> Result<T, Failure> {
    let text = read_arg(arg)?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{what}: {e}")))
}

fn json_body(mut v: Value) -> String {
    if let Value::Object(m) = &mut v {
        m.insert("format".into(), json!(FORMAT));
    }
    let mut s = serde_json::to_string_pretty(&v).expect("values serialize");
    s.push('\n');
    s
}

fn no_dot(cli: &Cli) -> Result<(), Failure> {
    if cli.format == Format::Dot {
        return Err(Failure::Input("dot output is only available for lattice-check and traces".into()));
    }
    Ok(())
}

fn entail(cli: &Cli, a: &str, b: &str) -> Result<Outcome, Failure> {
    no_dot(cli)?;
    let a: Vec<RationalVector> = parse_arg(a, "--A")?;
    let b: Vec<RationalVector> = parse_arg(b, "--B")?;
    let res = entails_basic(&a, &b);
    let verified = res.verify(&a, &b);
    if !verified {
        return Err(Failure::Input("internal error: certificate failed re-verification".into()));
    }
    let body = match cli.format {
        Format::Text => format!("{}\n", if res.holds { "entailed" } else { "not entailed" }),
        _ => json_body(json!({ "holds": res.holds, "certificate": res.certificate, "verified": verified })),
    };
    Ok(Outcome { body, holds: res.holds })
}

fn canon(cli: &Cli, term: &str) -> Result<Outcome, Failure> {
    no_dot(cli)?;
    let t: Term = parse_arg(term, "--term")?;
    let c = t.canonicalize()?;
    let body = match cli.format {
        Format::Text => format!("{c}\n"),
        _ => json_body(json!({ "term": c, "display": c.to_string() })),
    };
    Ok(Outcome { body, holds: true })
}

fn leq(cli: &Cli, lhs: &str, rhs: &str) -> Result<Outcome, Failure> {
    no_dot(cli)?;
    let l: Term = parse_arg(lhs, "--lhs")?;
    let r: Term = parse_arg(rhs, "--rhs")?;
    let c = l.leq(&r)?;
    let body = match cli.format {
        Format::Text => format!("{}\n", if c.holds { "contained" } else { "not contained" }),
        _ => json_body(json!({ "holds": c.holds, "certificates": c.certificates, "witness": c.witness })),
    };
    Ok(Outcome { body, holds: c.holds })
}

fn lattice_check(cli: &Cli, file: &str) -> Result<Outcome, Failure> {
    let doc: LatticeDoc = parse_arg(file, "lattice")?;
    let l = doc.to_order()?;
    let name = |x| l.label(x).to_string();
    let dist = l.distributivity_violation();
    // Complete normality is only meaningful for distributive lattices.
    let cn = if dist.is_none() { l.cn_counterexample() } else { None };
    let holds = dist.is_none() && cn.is_none();
    let body = match cli.format {
        Format::Dot => l.to_dot(),
        Format::Text => {
            let mut s = format!("elements: {}\n", l.len());
            match dist {
                None => s.push_str("distributive: yes\n"),
                Some((x, y, z)) => s.push_str(&format!("distributive: no ({}, {}, {})\n", name(x), name(y), name(z))),
            }
            match (dist, cn) {
                (Some(_), _) => s.push_str("completely normal: n/a\n"),
                (None, None) => s.push_str("completely normal: yes\n"),
                (None, Some((a, b))) => s.push_str(&format!("completely normal: no ({}, {})\n", name(a), name(b))),
            }
            s
        }
        Format::Json => json_body(json!({
            "elements": l.len(),
            "join_irreducibles": l.join_irreducibles().iter().map(|&j| name(j)).collect::<Vec<_>>(),
            "distributive": dist.is_none(),
            "distributivity_counterexample": dist.map(|(x, y, z)| [name(x), name(y), name(z)]),
            "completely_normal": if dist.is_none() { json!(cn.is_none()) } else { Value::Null },
            "cn_counterexample": cn.map(|(a, b)| [name(a), name(b)]),
        })),
    };
    Ok(Outcome { body, holds })
}

fn hom_check(cli: &Cli, file: &str, lattice: Option<&str>) -> Result<Outcome, Failure> {
    no_dot(cli)?;
    let doc: HomDoc = parse_arg(file, "hom")?;
    let target = match (&doc.target, lattice) {
        (TargetRef::Id(_), Some(arg)) => Some(Arc::new(parse_arg::<LatticeDoc>(arg, "--lattice")?.to_lattice()?)),
        _ => None,
    };
    // Incoherent generators are reported, not rejected, so build without the check.
    let h = match doc.to_hom(target) {
        Ok(h) => h,
        Err(HomError::Incoherent(msg)) => {
            let body = match cli.format {
                Format::Text => format!("coherent: no ({msg})\n"),
                _ => json_body(json!({ "coherent": false, "reason": msg })),
            };
            return Ok(Outcome { body, holds: false });
        }
        Err(e) => return Err(e.into()),
    };
    let l = h.target().clone();
    let coherence = h.coherence();
    let range: Vec<String> = h.range().into_iter().map(|x| l.label(x).to_string()).collect();
    let holds = coherence.is_coherent();
    let body = match cli.format {
        Format::Text => format!(
            "generators: {}\ncoherent: {}\nrange: {}\nrange consonant: {}\n",
            h.len(),
            if holds { "yes" } else { "no" },
            range.join(", "),
            if h.range_consonant() { "yes" } else { "no" }
        ),
        _ => {
            let evidence = match &coherence {
                Coherence::Coherent(points) => json!({ "points": points.iter().map(|p| json!({ "j": l.label(p.j), "point": p.point })).collect::<Vec<_>>() }),
                Coherence::Incoherent { j, farkas, strict, nonstrict } => json!({
                    "j": l.label(*j),
                    "farkas": farkas,
                    "strict": strict,
                    "nonstrict": nonstrict,
                }),
            };
            json_body(json!({
                "generators": h.len(),
                "coherent": holds,
                "evidence": evidence,
                "range": range,
                "range_consonant": h.range_consonant(),
            }))
        }
    };
    Ok(Outcome { body, holds })
}

fn config(cli: &Cli) -> Result<ConstructionConfig, Failure> {
    let mut c = ConstructionConfig { stages: cli.stages, seed: cli.seed, ..Default::default() };
    if let Some(cap) = &cli.lambda_cap {
        c.lambda_cap = parse_scalar(cap).map_err(|e| Failure::Input(format!("--lambda-cap: {e}")))?;
        if c.lambda_cap < parse_scalar("1").expect("literal") {
            return Err(Failure::Input(format!("--lambda-cap must be at least 1, got {}", format_scalar(&c.lambda_cap))));
        }
    }
    c.schedule = parse_schedule(&cli.schedule).map_err(|e| Failure::Input(format!("--schedule: {e}")))?;
    Ok(c)
}

fn construct(cli: &Cli, lattice: &str, base: Option<&str>, enumeration: Option<&str>) -> Result<Outcome, Failure> {
    let config = config(cli)?;
    let l: Arc<FiniteLattice> = Arc::new(parse_arg::<LatticeDoc>(lattice, "--lattice")?.to_lattice()?);
    let base = match base {
        Some(arg) => parse_arg::<BaseDoc>(arg, "--base")?.to_base(&l)?,
        None => BaseDoc::default().to_base(&l)?,
    };
    let enumeration = match enumeration {
        Some(s) => Some(s.split(',').map(|x| l.index_of(x.trim())).collect::<Result<Vec<_>, _>>()?),
        None => None,
    };
    let mut st = ConstructionState::new(l, enumeration, base, config)?;
    st.run();
    let trace = st.trace();
    let report = st.verify();
    let ok = report.ok();
    let body = match cli.format {
        Format::Dot => trace.to_dot(),
        Format::Text | Format::Json => trace.to_jsonl(),
    };
    // The trace is the primary output; the report goes to stderr so stdout stays parseable.
    eprint!("{}", json_body(serde_json::to_value(&report).expect("reports serialize")));
    Ok(Outcome { body, holds: ok })
}

fn verify(cli: &Cli, file: &str) -> Result<Outcome, Failure> {
    let text = read_arg(file)?;
    let trace = Trace::from_jsonl(&text).map_err(Failure::Input)?;
    if cli.format == Format::Dot {
        return Ok(Outcome { body: trace.to_dot(), holds: true });
    }
    let report = verify_trace(&trace);
    let ok = report.ok();
    let body = match cli.format {
        Format::Text => format!(
            "stages: {}\nsurjective: {}\ncoherent: {}\ncertificates: {} checked, {} failed\npending obligations: {}\nverdict: {}\n",
            report.stages,
            report.surjective,
            report.coherent,
            report.certificates_checked,
            report.certificates_failed,
            report.obligations.pending,
            if ok { "ok" } else { "FAILED" }
        ),
        _ => {
            let mut v = serde_json::to_value(&report).expect("reports serialize");
            v["ok"] = json!(ok);
            json_body(v)
        }
    };
    Ok(Outcome { body, holds: ok })
}
