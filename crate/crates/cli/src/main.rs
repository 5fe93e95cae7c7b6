use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::json;

use pythagorean::cocycle::cocycles_per_leaf;
use pythagorean::error::Error;
use pythagorean::gallery::{
    self, fmt_c, parse_complex, report_table, BallConfig, ExampleReport, SuiteReport,
};
use pythagorean::opalg::{CVec, PythModule};
use pythagorean::rep::{act, coefficient_pathsum, vacuum_coefficient, LimitVec};
use pythagorean::rotation::{empirical_rotation_limit, xj, RotationOpts};
use pythagorean::thompson::{enumerate_ball, parse_element, Flavor, FracElement};

#[derive(Parser)]
#[command(
    name = "pythag",
    version,
    about = "Pythagorean representations of Thompson's groups"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// <pi(g) Omega, Omega> by the path sum and by the direct-limit action.
    Coeff {
        #[arg(short, long)]
        module: String,
        #[arg(short = 'g', long)]
        element: String,
    },
    /// pi(g)^k Omega as leaf vectors.
    Act {
        #[arg(short, long)]
        module: String,
        #[arg(short = 'g', long)]
        element: String,
        #[arg(short = 'k', long, default_value_t = 1, allow_hyphen_values = true)]
        power: i64,
    },
    /// <pi(r_n^j) Omega, Omega> for n = 1..N.
    Rotlimit {
        #[arg(short, long)]
        module: String,
        #[arg(short, long, default_value_t = 1, allow_hyphen_values = true)]
        j: i64,
        #[arg(short = 'N', long = "max", default_value_t = 20)]
        n_max: usize,
    },
    /// x_j by the recursion and by the decorated tree t(j).
    Xj {
        #[arg(short, long)]
        j: u64,
        #[arg(long, allow_hyphen_values = true)]
        omega: String,
    },
    /// Runs gallery checks: a preset id (optionally with parameters) or `all`.
    Verify {
        #[arg(default_value = "all")]
        target: String,
        /// Use 3-leaf balls.
        #[arg(long)]
        reduced: bool,
    },
    /// Lists the reduced elements with at most the given number of leaves.
    Enumerate {
        #[arg(long)]
        leaves: usize,
        #[arg(long, default_value = "F")]
        flavor: String,
        #[arg(long, default_value_t = 2)]
        arity: usize,
    },
    /// Dilation, compression and U_beta checks for a module.
    Cuntz {
        #[arg(short, long)]
        module: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 5)]
        leaves: usize,
    },
    /// The cocycle U(g, J) for every bottom leaf J of g.
    Cocycle {
        #[arg(short, long)]
        module: String,
        #[arg(short = 'g', long)]
        element: String,
    },
}

/// Accepts `-omega`, `-leaves`, `-flavor`, `-arity` and friends as long flags.
fn normalize_args(args: impl Iterator<Item = String>) -> Vec<String> {
    const LONG: &[&str] = &[
        "omega", "leaves", "flavor", "arity", "format", "module", "element", "power", "samples",
        "reduced", "max",
    ];
    args.map(|a| match a.strip_prefix('-') {
        Some(rest) if !rest.starts_with('-') && LONG.contains(&rest) => format!("--{rest}"),
        _ => a,
    })
    .collect()
}

enum Failure {
    Usage(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotCuntz { .. }
            | Error::HypothesisFailed(_)
            | Error::AdjointInconsistent { .. } => Failure::Check(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type CliResult = Result<bool, Failure>;

fn cjson(z: Complex64) -> serde_json::Value {
    json!({ "re": z.re, "im": z.im })
}

fn element_for(m: &PythModule, text: &str) -> Result<FracElement, Failure> {
    Ok(parse_element(text, m.arity())?)
}

fn coeff(fmt: Format, module: &str, element: &str) -> CliResult {
    let m = gallery::module_from_selector(module)?;
    let g = element_for(&m, element)?;
    let p = coefficient_pathsum(&g, &m);
    let a = vacuum_coefficient(&g, &m)?;
    let diff = (p - a).norm();
    match fmt {
        Format::Table => {
            println!("element   {}", g.serialize());
            println!("module    {module}");
            println!("pathsum   {}", fmt_c(p));
            println!("act       {}", fmt_c(a));
            println!("|diff|    {diff:e}");
        }
        Format::Csv => {
            println!("method,re,im");
            println!("pathsum,{},{}", p.re, p.im);
            println!("act,{},{}", a.re, a.im);
        }
        Format::Json => println!(
            "{}",
            json!({ "element": g.serialize(), "module": module, "pathsum": cjson(p), "act": cjson(a), "difference": diff })
        ),
    }
    Ok(diff <= 1e-12)
}

fn act_cmd(fmt: Format, module: &str, element: &str, power: i64) -> CliResult {
    let m = gallery::module_from_selector(module)?;
    let g = element_for(&m, element)?.pow(power)?;
    let y = act(&g, &LimitVec::vacuum(m.clone()))?;
    let addrs = y.tree().leaf_addresses();
    match fmt {
        Format::Table => {
            println!("tree {}", y.tree());
            for (k, (a, v)) in addrs.iter().zip(y.parts()).enumerate() {
                println!("{:>4} {:<12} {}", k + 1, a.to_string(), v);
            }
        }
        Format::Csv => {
            println!("leaf,address,component,re,im");
            for (k, (a, v)) in addrs.iter().zip(y.parts()).enumerate() {
                for (i, z) in components(v) {
                    println!("{},{},{},{},{}", k + 1, a, i, z.re, z.im);
                }
            }
        }
        Format::Json => {
            let leaves: Vec<_> = addrs
                .iter()
                .zip(y.parts())
                .map(|(a, v)| {
                    let comps: Vec<_> = components(v)
                        .into_iter()
                        .map(|(i, z)| json!({ "component": i, "re": z.re, "im": z.im }))
                        .collect();
                    json!({ "address": a.to_string(), "vector": comps })
                })
                .collect();
            println!(
                "{}",
                json!({ "element": g.serialize(), "tree": y.tree().to_string(), "leaves": leaves })
            );
        }
    }
    Ok(true)
}

fn components(v: &CVec) -> Vec<(String, Complex64)> {
    match v {
        CVec::Dense(d) => d
            .iter()
            .enumerate()
            .map(|(i, z)| ((i + 1).to_string(), *z))
            .collect(),
        CVec::Sparse(m) => m.iter().map(|(l, z)| (l.to_string(), *z)).collect(),
    }
}

fn rotlimit(fmt: Format, module: &str, j: i64, n_max: usize) -> CliResult {
    let m = gallery::module_from_selector(module)?;
    let o = LimitVec::vacuum(m);
    let seq = empirical_rotation_limit(
        j,
        &o,
        &o,
        RotationOpts {
            n_max,
            stop_early: false,
            ..Default::default()
        },
    )?;
    match fmt {
        Format::Table | Format::Csv => {
            println!("n,re,im,abs_y");
            for (n, y) in &seq.values {
                println!("{n},{},{},{}", y.re, y.im, y.norm());
            }
        }
        Format::Json => {
            let rows: Vec<_> = seq
                .values
                .iter()
                .map(|(n, y)| json!({ "n": n, "re": y.re, "im": y.im, "abs_y": y.norm() }))
                .collect();
            println!(
                "{}",
                json!({ "module": module, "j": j, "values": rows, "converged": seq.converged })
            );
        }
    }
    Ok(true)
}

fn xj_cmd(fmt: Format, j: u64, omega: &str) -> CliResult {
    let w = parse_complex(omega)?;
    let r = xj(j, w)?;
    let diff = (r.value - r.by_tree).norm();
    match fmt {
        Format::Table => {
            println!("omega      {}", fmt_c(w));
            println!("x_{j:<8} {}", fmt_c(r.value));
            println!("by t({j})    {}", fmt_c(r.by_tree));
            println!("t({j})       {}", r.tree);
            if r.degenerate {
                println!("degenerate (omega = 0)");
            }
        }
        Format::Csv => {
            println!("j,re,im,tree_re,tree_im");
            println!(
                "{j},{},{},{},{}",
                r.value.re, r.value.im, r.by_tree.re, r.by_tree.im
            );
        }
        Format::Json => println!(
            "{}",
            json!({ "j": j, "omega": cjson(w), "value": cjson(r.value), "by_tree": cjson(r.by_tree),
                    "tree": r.tree.to_string(), "degenerate": r.degenerate })
        ),
    }
    Ok(diff <= 1e-12)
}

fn print_suite(fmt: Format, suite: &SuiteReport) {
    match fmt {
        Format::Table => print!("{}", suite.table()),
        Format::Csv => print!("{}", suite.to_csv()),
        Format::Json => println!("{}", suite.to_json()),
    }
}

fn verify(fmt: Format, target: &str, reduced: bool) -> CliResult {
    let cfg = if reduced {
        BallConfig::reduced()
    } else {
        BallConfig::default()
    };
    let suite = if target == "all" {
        gallery::run_all(&cfg)?
    } else {
        let (id, params) = match target.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (target, None),
        };
        SuiteReport {
            config: cfg,
            presets: vec![gallery::run(id, params, &cfg)?],
        }
    };
    print_suite(fmt, &suite);
    Ok(suite.pass())
}

fn enumerate(fmt: Format, leaves: usize, flavor: &str, arity: usize) -> CliResult {
    let fl = Flavor::parse(flavor)?;
    let ball = enumerate_ball(leaves, fl, arity)?;
    match fmt {
        Format::Table => {
            for g in &ball {
                println!("{}", g.serialize());
            }
            eprintln!("{} elements", ball.len());
        }
        Format::Csv => {
            println!("index,leaves,element");
            for (k, g) in ball.iter().enumerate() {
                println!("{},{},\"{}\"", k + 1, g.leaves(), g.serialize());
            }
        }
        Format::Json => {
            let v: Vec<_> = ball.iter().map(|g| g.serialize()).collect();
            println!(
                "{}",
                json!({ "flavor": flavor, "arity": arity, "max_leaves": leaves, "elements": v })
            );
        }
    }
    Ok(true)
}

fn print_report(fmt: Format, r: &ExampleReport) {
    match fmt {
        Format::Table => print!("{}", report_table(r)),
        Format::Csv | Format::Json => print_suite(
            fmt,
            &SuiteReport {
                config: BallConfig::default(),
                presets: vec![r.clone()],
            },
        ),
    }
}

fn cuntz(fmt: Format, module: &str, samples: usize, leaves: usize) -> CliResult {
    let m = gallery::module_from_selector(module)?;
    let r = gallery::cuntz_report(module, &m, samples, leaves, 0xc0)?;
    print_report(fmt, &r);
    Ok(r.pass())
}

fn cocycle(fmt: Format, module: &str, element: &str) -> CliResult {
    let m: Arc<PythModule> = gallery::module_from_selector(module)?;
    let g = element_for(&m, element)?;
    let ops = cocycles_per_leaf(&m, &g)?;
    let mats = ops
        .iter()
        .map(|op| {
            op.matrix(&m)
                .ok_or_else(|| Failure::Usage("cocycle matrices need a dense module".into()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    match fmt {
        Format::Table => {
            for (op, mat) in ops.iter().zip(&mats) {
                println!("J = {}  gJ = {}", op.j, op.gj);
                for r in 0..mat.nrows() {
                    let row: Vec<String> = (0..mat.ncols()).map(|c| fmt_c(mat[(r, c)])).collect();
                    println!("  [{}]", row.join(", "));
                }
            }
        }
        Format::Csv => {
            println!("leaf,j,gj,row,col,re,im");
            for (k, (op, mat)) in ops.iter().zip(&mats).enumerate() {
                for r in 0..mat.nrows() {
                    for c in 0..mat.ncols() {
                        let z = mat[(r, c)];
                        println!(
                            "{},{},{},{},{},{},{}",
                            k + 1,
                            op.j,
                            op.gj,
                            r + 1,
                            c + 1,
                            z.re,
                            z.im
                        );
                    }
                }
            }
        }
        Format::Json => {
            let v: Vec<_> = ops
                .iter()
                .zip(&mats)
                .map(|(op, mat)| {
                    let rows: Vec<Vec<_>> = (0..mat.nrows())
                        .map(|r| (0..mat.ncols()).map(|c| cjson(mat[(r, c)])).collect())
                        .collect();
                    json!({ "j": op.j.to_string(), "gj": op.gj.to_string(), "matrix": rows })
                })
                .collect();
            println!(
                "{}",
                json!({ "element": g.serialize(), "module": module, "cocycles": v })
            );
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse_from(normalize_args(std::env::args())) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let f = cli.format;
    let res = match &cli.cmd {
        Cmd::Coeff { module, element } => coeff(f, module, element),
        Cmd::Act {
            module,
            element,
            power,
        } => act_cmd(f, module, element, *power),
        Cmd::Rotlimit { module, j, n_max } => rotlimit(f, module, *j, *n_max),
        Cmd::Xj { j, omega } => xj_cmd(f, *j, omega),
        Cmd::Verify { target, reduced } => verify(f, target, *reduced),
        Cmd::Enumerate {
            leaves,
            flavor,
            arity,
        } => enumerate(f, *leaves, flavor, *arity),
        Cmd::Cuntz {
            module,
            samples,
            leaves,
        } => cuntz(f, module, *samples, *leaves),
        Cmd::Cocycle { module, element } => cocycle(f, module, element),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("pythag: check failed");
            ExitCode::from(1)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("pythag: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("pythag: {msg}");
            ExitCode::from(2)
        }
    }
}
