//! Batch front end: build and inspect trees and systems, run fusion chains,
//! query names, execute generic runs from requirement scripts, run the
//! verification suites, and export DOT. Outputs are byte-stable for fixed
//! inputs and seeds; exit code 0 means success, 1 a domain failure, 2 a
//! usage or parse error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use silvertree::generic::{self, jensen_iterate, parse_script, Fragment, JensenConfig, RunError};
use silvertree::names::{df_neq, df_value, forced_prefix, RealName};
use silvertree::strings::BitString;
use silvertree::suites::{run_suite, suite_names, SuiteParams};
use silvertree::systems::{Ambient, FusionChain, MultiSystem, SplitSystem};
use silvertree::trees::SilverPattern;

const EXIT_DOMAIN: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "silvertree", version, about = "Silver-tree combinatorics workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect a pattern tree: stem, action, restriction, truncation, DOT.
    Tree(TreeArgs),
    /// Build a splitting system by seeding, extending and reducing.
    System(SystemArgs),
    /// Run a chain script and query its fusion limits.
    Fuse(FuseArgs),
    /// Inspect a real name and its direct-forcing predicates.
    Name(NameArgs),
    /// Execute a requirement script as a deterministic generic run.
    Generic(GenericArgs),
    /// Run the staged family iteration and print its reports.
    Jensen(JensenArgs),
    /// Run a verification suite (or `all`).
    Verify(VerifyArgs),
}

#[derive(Args)]
struct TreeArgs {
    /// Pattern over {0,1,*}; the full tree is "*".
    pattern: String,
    /// Acting strings applied in order, before any restriction.
    #[arg(long = "act")]
    act: Vec<String>,
    /// Restriction nodes applied in order.
    #[arg(long = "restrict")]
    restrict: Vec<String>,
    /// Print the stem instead of the pattern.
    #[arg(long)]
    stem: bool,
    /// Print the node window to this depth.
    #[arg(long)]
    truncate: Option<usize>,
    #[arg(long, default_value = "text")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SystemArgs {
    /// Pattern seeding the height-1 system.
    #[arg(long = "seed-tree")]
    seed_tree: String,
    /// Number of extension layers to add.
    #[arg(long, default_value_t = 0)]
    extend: usize,
    /// Top-layer reductions `INDEX:PATTERN`, applied in order.
    #[arg(long = "reduce")]
    reduce: Vec<String>,
    /// Print the five-clause validation report; domain failure if any fails.
    #[arg(long)]
    validate: bool,
    /// Print the union of the top layer.
    #[arg(long = "union-top")]
    union_top: bool,
    #[arg(long, default_value = "text")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FuseArgs {
    /// Chain script: lines `seed K "PAT"`, `extend K`, `extend-all`,
    /// `reduce K "INDEX" "PAT"`.
    script: PathBuf,
    /// Membership queries `K:INDEX:STRING`.
    #[arg(long = "member")]
    member: Vec<String>,
    /// Window queries `K:INDEX:DEPTH`.
    #[arg(long = "truncate")]
    truncate: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NameArgs {
    /// Canonical name with the given digit bound.
    #[arg(long, conflicts_with = "file")]
    canonical: Option<usize>,
    /// Load a name from its structured-text file.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Shift the name by this acting string.
    #[arg(long)]
    shift: Option<String>,
    /// Forced-digit queries `PATTERN:N`.
    #[arg(long = "df-value")]
    df_value: Vec<String>,
    /// Inequality query against the canonical name, from this tree.
    #[arg(long = "df-neq")]
    df_neq: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenericArgs {
    /// Requirement script.
    script: PathBuf,
    /// Write the derived family patterns to this file.
    #[arg(long)]
    family: Option<PathBuf>,
    /// Write the family truncations as DOT clusters to this file.
    #[arg(long = "family-dot")]
    family_dot: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct JensenArgs {
    #[arg(long, default_value_t = 2)]
    stages: usize,
    #[arg(long, default_value_t = 4)]
    depth: usize,
    #[arg(long, default_value_t = 32)]
    budget: usize,
    /// Base layer holds all patterns up to this length.
    #[arg(long = "base-bound", default_value_t = 2)]
    base_bound: usize,
    #[arg(long, default_value_t = 2)]
    roots: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name, or `all`.
    suite: String,
    #[arg(long, default_value_t = 0x5117e2)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    cases: usize,
    #[arg(long, default_value_t = 4)]
    depth: usize,
    #[arg(long, default_value_t = 32)]
    budget: usize,
    /// Comma-separated cover set override for the finite-cover suite.
    #[arg(long)]
    cover: Option<String>,
    /// Run independent suites of `all` on worker threads.
    #[arg(long)]
    parallel: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Format {
    Text,
    Dot,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Tree(args) => cmd_tree(args),
        Command::System(args) => cmd_system(args),
        Command::Fuse(args) => cmd_fuse(args),
        Command::Name(args) => cmd_name(args),
        Command::Generic(args) => cmd_generic(args),
        Command::Jensen(args) => cmd_jensen(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn domain(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_DOMAIN,
        message: message.into(),
    }
}

fn parse_pattern(text: &str) -> Result<SilverPattern, Failure> {
    SilverPattern::from_str(text).map_err(|e| usage(format!("pattern {text:?}: {e}")))
}

fn parse_bits(text: &str) -> Result<BitString, Failure> {
    BitString::from_str(text).map_err(|e| usage(format!("string {text:?}: {e}")))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| domain(format!("writing {}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_tree(args: TreeArgs) -> Result<(), Failure> {
    let mut tree = parse_pattern(&args.pattern)?;
    for s in &args.act {
        tree = tree.act(&parse_bits(s)?);
    }
    for u in &args.restrict {
        let node = parse_bits(u)?;
        tree = tree.restrict(&node).map_err(|e| domain(e.to_string()))?;
    }
    let mut output = String::new();
    if args.stem {
        output.push_str(&format!("{}\n", tree.stem()));
    }
    match (args.truncate, args.format) {
        (Some(depth), Format::Dot) => output.push_str(&tree.truncate(depth).to_dot()),
        (Some(depth), Format::Text) => {
            for node in tree.truncate(depth).nodes() {
                output.push_str(&format!("\"{node}\"\n"));
            }
        }
        (None, Format::Dot) => output.push_str(&tree.truncate(tree.len() + 2).to_dot()),
        (None, Format::Text) => {
            if !args.stem {
                output.push_str(&format!("{tree}\n"));
            }
        }
    }
    emit(&args.out, &output)
}

fn cmd_system(args: SystemArgs) -> Result<(), Failure> {
    let seed = parse_pattern(&args.seed_tree)?;
    let mut sys = SplitSystem::seed(seed);
    for _ in 0..args.extend {
        sys = sys.extend();
    }
    for spec in &args.reduce {
        let (index, pattern) = spec
            .split_once(':')
            .ok_or_else(|| usage(format!("--reduce wants INDEX:PATTERN, got {spec:?}")))?;
        let index = parse_bits(index)?;
        let pattern = parse_pattern(pattern)?;
        sys = sys
            .reduce_at(&index, &pattern)
            .map_err(|e| domain(e.to_string()))?;
    }
    let mut output = String::new();
    match args.format {
        Format::Dot => output.push_str(&sys.to_dot()),
        Format::Text => output.push_str(&format!("{sys}\n")),
    }
    if args.union_top {
        output.push_str(&format!("union-top \"{}\"\n", sys.union_top()));
    }
    let mut failed = false;
    if args.validate {
        let report = sys.validate(&Ambient::All);
        output.push_str(&report.to_string());
        failed = !report.all_hold();
    }
    emit(&args.out, &output)?;
    if failed {
        return Err(domain("validation failed"));
    }
    Ok(())
}

fn parse_chain_script(text: &str) -> Result<FusionChain, Failure> {
    let mut chain = FusionChain::new(MultiSystem::empty());
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut words = line.split_whitespace();
        let quoted = silvertree::systems::parse_quoted_list(line);
        let step = match words.next().unwrap() {
            "seed" => {
                let k: usize = words
                    .next()
                    .and_then(|w| w.parse().ok())
                    .ok_or_else(|| usage(format!("bad seed line: {line}")))?;
                let pattern = quoted
                    .first()
                    .ok_or_else(|| usage(format!("seed wants a quoted pattern: {line}")))?;
                chain.step_seed(k, parse_pattern(pattern)?)
            }
            "extend" => {
                let k: usize = words
                    .next()
                    .and_then(|w| w.parse().ok())
                    .ok_or_else(|| usage(format!("bad extend line: {line}")))?;
                chain.step_extend(k)
            }
            "extend-all" => chain.step_extend_all(),
            "reduce" => {
                let k: usize = words
                    .next()
                    .and_then(|w| w.parse().ok())
                    .ok_or_else(|| usage(format!("bad reduce line: {line}")))?;
                if quoted.len() != 2 {
                    return Err(usage(format!(
                        "reduce wants a quoted index and pattern: {line}"
                    )));
                }
                let index = parse_bits(&quoted[0])?;
                let pattern = parse_pattern(&quoted[1])?;
                chain.step_reduce(k, &index, &pattern)
            }
            other => return Err(usage(format!("unknown chain step: {other}"))),
        };
        step.map_err(|e| domain(e.to_string()))?;
    }
    Ok(chain)
}

fn split3(spec: &str) -> Result<(usize, BitString, String), Failure> {
    let mut parts = spec.splitn(3, ':');
    let (Some(k), Some(index), Some(rest)) = (parts.next(), parts.next(), parts.next()) else {
        return Err(usage(format!("query wants K:INDEX:ARG, got {spec:?}")));
    };
    let k: usize = k
        .parse()
        .map_err(|_| usage(format!("bad coordinate in {spec:?}")))?;
    Ok((k, parse_bits(index)?, rest.to_string()))
}

fn cmd_fuse(args: FuseArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.script)
        .map_err(|e| usage(format!("reading {}: {e}", args.script.display())))?;
    let chain = parse_chain_script(&text)?;
    let mut output = String::new();
    output.push_str(&format!("{}\n", chain.last()));
    for query in &args.member {
        let (k, index, t) = split3(query)?;
        let t = parse_bits(&t)?;
        let answer = chain
            .fusion_member(k, &index, &t)
            .map_err(|e| domain(e.to_string()))?;
        output.push_str(&format!(
            "member {k} \"{index}\" \"{t}\" -> {} ({:?})\n",
            answer.member, answer.certificate
        ));
    }
    for query in &args.truncate {
        let (k, index, depth) = split3(query)?;
        let depth: usize = depth
            .parse()
            .map_err(|_| usage(format!("bad depth in {query:?}")))?;
        let window = chain
            .fusion_truncate(k, &index, depth)
            .map_err(|e| domain(e.to_string()))?;
        output.push_str(&format!("window {k} \"{index}\" depth {depth}\n"));
        for node in window.nodes() {
            output.push_str(&format!("  \"{node}\"\n"));
        }
    }
    emit(&args.out, &output)
}

fn cmd_name(args: NameArgs) -> Result<(), Failure> {
    let mut name = match (&args.canonical, &args.file) {
        (Some(bound), None) => RealName::canonical(*bound),
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("reading {}: {e}", path.display())))?;
            text.parse::<RealName>()
                .map_err(|e| usage(format!("name file: {e}")))?
        }
        _ => return Err(usage("give exactly one of --canonical or --file")),
    };
    if let Some(sigma) = &args.shift {
        name = name.shift(&parse_bits(sigma)?);
    }
    let mut output = format!("{name}\n");
    for query in &args.df_value {
        let (pattern, digit) = query
            .split_once(':')
            .ok_or_else(|| usage(format!("--df-value wants PATTERN:N, got {query:?}")))?;
        let tree = parse_pattern(pattern)?;
        let n: usize = digit
            .parse()
            .map_err(|_| usage(format!("bad digit index in {query:?}")))?;
        if n >= name.bound() {
            return Err(domain(format!(
                "digit {n} is beyond the bound {}",
                name.bound()
            )));
        }
        let forced = match df_value(&tree, &name, n) {
            Some(digit) => u8::from(digit).to_string(),
            None => "none".to_string(),
        };
        output.push_str(&format!("df-value \"{tree}\" {n} -> {forced}\n"));
    }
    if let Some(pattern) = &args.df_neq {
        let tree = parse_pattern(pattern)?;
        let canonical = RealName::canonical(name.bound());
        match df_neq(&tree, &name, &canonical) {
            Some((s, t)) => output.push_str(&format!("df-neq \"{tree}\" -> (\"{s}\", \"{t}\")\n")),
            None => output.push_str(&format!(
                "df-neq \"{tree}\" -> none (forced prefix \"{}\")\n",
                forced_prefix(&tree, &name)
            )),
        }
    }
    emit(&args.out, &output)
}

fn run_error_failure(e: RunError) -> Failure {
    match e {
        RunError::Script(_) => usage(e.to_string()),
        other => domain(other.to_string()),
    }
}

fn cmd_generic(args: GenericArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.script)
        .map_err(|e| usage(format!("reading {}: {e}", args.script.display())))?;
    let script = parse_script(&text).map_err(run_error_failure)?;
    let run = generic::run_generic(
        Fragment::unrestricted(),
        script.requirements,
        script.schedule,
        script.budget,
    )
    .map_err(run_error_failure)?;
    let depth = run.schedule().truncation_depth;
    if let Some(path) = &args.family {
        let family = run.family_patterns(depth).map_err(run_error_failure)?;
        let mut text = String::new();
        for p in family {
            text.push_str(&format!("\"{p}\"\n"));
        }
        fs::write(path, text).map_err(|e| domain(format!("writing {}: {e}", path.display())))?;
    }
    if let Some(path) = &args.family_dot {
        let mut text = String::from("digraph family {\n");
        for (i, k) in run.final_stage().support().into_iter().enumerate() {
            let tree = run
                .u_tree(k, &BitString::empty())
                .map_err(run_error_failure)?;
            let window = tree.truncate(depth).map_err(run_error_failure)?;
            let body: String = window
                .to_dot()
                .lines()
                .skip(2)
                .take_while(|l| *l != "}")
                .map(|l| format!("  {l}\n"))
                .collect();
            text.push_str(&format!(
                "  subgraph cluster_{i} {{\n    label=\"coordinate {k}\";\n{body}  }}\n"
            ));
        }
        text.push_str("}\n");
        fs::write(path, text).map_err(|e| domain(format!("writing {}: {e}", path.display())))?;
    }
    emit(&args.out, &run.export_log())
}

fn cmd_jensen(args: JensenArgs) -> Result<(), Failure> {
    let config = JensenConfig {
        stages: args.stages,
        base_length_bound: args.base_bound,
        depth: args.depth,
        budget: args.budget,
        roots_per_stage: args.roots,
        ..JensenConfig::default()
    };
    let report = jensen_iterate(&config).map_err(run_error_failure)?;
    let mut output = String::from("jensen\n");
    output.push_str(&format!(
        "layers {}\n",
        report
            .layer_sizes
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    ));
    for sr in &report.stage_reports {
        output.push_str(&format!("stage {} family {}\n", sr.stage, sr.family_size));
        for (root, hit) in &sr.density_hits {
            output.push_str(&format!("  density \"{root}\" {hit}\n"));
        }
        for (i, ok) in &sr.covers_ok {
            output.push_str(&format!("  cover {i} {ok}\n"));
        }
    }
    for (i, ok) in &report.predense_recheck {
        output.push_str(&format!("predense-recheck {i} {ok}\n"));
    }
    output.push_str("end\n");
    emit(&args.out, &output)
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Failure> {
    let cover = match &args.cover {
        None => None,
        Some(spec) => {
            let mut trees = Vec::new();
            for item in spec.split(',') {
                trees.push(parse_pattern(item.trim())?);
            }
            Some(trees)
        }
    };
    let params = SuiteParams {
        seed: args.seed,
        cases: args.cases,
        depth: args.depth,
        budget: args.budget,
        cover,
    };
    let reports = if args.suite == "all" {
        let names = suite_names();
        if args.parallel {
            std::thread::scope(|scope| {
                let handles: Vec<_> = names
                    .iter()
                    .map(|name| {
                        let params = params.clone();
                        scope.spawn(move || run_suite(name, &params).expect("known suite"))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().unwrap()).collect()
            })
        } else {
            names
                .iter()
                .map(|name| run_suite(name, &params).expect("known suite"))
                .collect::<Vec<_>>()
        }
    } else {
        match run_suite(&args.suite, &params) {
            Some(report) => vec![report],
            None => {
                return Err(usage(format!(
                    "unknown suite {:?}; known: {} and all",
                    args.suite,
                    suite_names().join(", ")
                )))
            }
        }
    };
    let mut output = String::new();
    for report in &reports {
        output.push_str(&format!("{report}\n"));
    }
    emit(&args.out, &output)?;
    if reports.iter().any(|r| !r.pass()) {
        return Err(domain("verification failed"));
    }
    Ok(())
}
