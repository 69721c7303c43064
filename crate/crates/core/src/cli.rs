//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a check fails or a module reports an
//! error, 2 on usage errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::catalog;
use crate::dods::{self, DelayKind, DodsSystem, InvarianceReport};
use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr, Var};
use crate::integrate::{self, Dy0, HistoryFunction};
use crate::linear::{self, CanonicalLinear};
use crate::reduce::{self, ReduceOptions};
use crate::sampling::DEFAULT_SEED;
use crate::symmetry::{self, VectorField};
use crate::traffic::{self, Example, Scenario, TrafficParams};

#[derive(Parser, Debug)]
#[command(name = "delaysym", version, about = "Lie point symmetries of second-order delay ODE systems")]
struct Cli {
    /// Seed for all random sampling.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check that fields are symmetries of a system file.
    Verify(VerifyArgs),
    /// Structure constants of the span of the given fields.
    Bracket(FieldsArgs),
    /// Rank of the prolongation matrix and the invariant count.
    Rank(FieldsArgs),
    /// Browse and check the classification catalog.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Integrate a system by the method of steps.
    Integrate(IntegrateArgs),
    /// Real roots of the characteristic equation of a canonical linear system.
    #[command(allow_negative_numbers = true)]
    Roots(RootsArgs),
    /// Invariant solution for a one-parameter symmetry.
    #[command(allow_negative_numbers = true)]
    Reduce(ReduceArgs),
    /// Car-following examples and platoon scenarios.
    #[command(allow_negative_numbers = true)]
    Traffic(TrafficArgs),
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// System file (`f = ...`, `g = ...`, ...).
    #[arg(long)]
    system: PathBuf,
    /// Field as `xi;eta`; repeat for several.
    #[arg(long = "field", required = true)]
    fields: Vec<String>,
    #[arg(long, default_value_t = 200)]
    samples: usize,
}

#[derive(Args, Debug)]
struct FieldsArgs {
    /// Fields as `xi;eta`.
    #[arg(long, required = true, num_args = 1..)]
    fields: Vec<String>,
    /// Parameter binding `name=value`; repeat for several.
    #[arg(long = "param")]
    params: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum CatalogAction {
    /// One line per entry.
    List,
    /// Basis, template and defaults of one entry.
    Show { id: String },
    /// Invariance of every basis field on the default system; all entries
    /// when no id is given.
    Check {
        id: Option<String>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Write the catalog in its text format.
    Export {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct IntegrateArgs {
    #[arg(long)]
    system: PathBuf,
    /// History function of `x`.
    #[arg(long, allow_hyphen_values = true)]
    phi: String,
    /// Initial slope, or `phi` for the slope of the history.
    #[arg(long, default_value = "phi", allow_hyphen_values = true)]
    dy0: String,
    /// Initial point.
    #[arg(long, default_value_t = 0.0)]
    from: f64,
    /// Start of the history interval; inferred for delays that do not
    /// depend on the solution.
    #[arg(long)]
    start: Option<f64>,
    #[arg(long)]
    to: f64,
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
    /// CSV output file with columns `x,y,dy`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RootsArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    gamma: f64,
    #[arg(long = "C")]
    c: f64,
    /// Search interval `lo,hi`.
    #[arg(long, allow_hyphen_values = true, default_value = "-10,10")]
    range: String,
    #[arg(long, default_value_t = 4000)]
    cells: usize,
}

#[derive(Args, Debug)]
struct ReduceArgs {
    #[arg(long)]
    system: PathBuf,
    /// Symmetry as `xi;eta`.
    #[arg(long)]
    field: String,
    /// Starting guess `A,B`; repeat for several.
    #[arg(long = "guess", allow_hyphen_values = true)]
    guesses: Vec<String>,
    /// Interval `lo,hi` for fitting and verification.
    #[arg(long, allow_hyphen_values = true)]
    interval: Option<String>,
}

#[derive(Args, Debug)]
struct TrafficArgs {
    /// Built-in example 1, 2 or 3.
    #[arg(long, conflicts_with = "scenario", value_parser = clap::value_parser!(u8).range(1..=3))]
    example: Option<u8>,
    /// Platoon scenario file.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// CSV output for scenarios.
    #[arg(long, requires = "scenario")]
    out: Option<PathBuf>,
    #[arg(long)]
    v: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// Offset of the invariant solution (example 1).
    #[arg(long = "A")]
    a: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    n1: Option<f64>,
    /// Exponent of example 3.
    #[arg(long)]
    n: Option<f64>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Integration step.
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
}

/// Parses `argv` (program name first), runs the command and writes the
/// report to `out`. Returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(std::io::stderr(), "{}", e.render());
                    2
                }
            };
        }
    };
    let mut report = String::new();
    let code = match execute(&cli, &mut report) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(report, "error: {e}");
            1
        }
    };
    let _ = out.write_all(report.as_bytes());
    code
}

fn execute(cli: &Cli, out: &mut String) -> Result<bool> {
    match &cli.command {
        Command::Verify(a) => verify(a, cli.seed, out),
        Command::Bracket(a) => bracket(a, cli.seed, out),
        Command::Rank(a) => rank(a, cli.seed, out),
        Command::Catalog { action } => catalog_cmd(action, cli.seed, out),
        Command::Integrate(a) => integrate_cmd(a, out),
        Command::Roots(a) => roots(a, out),
        Command::Reduce(a) => reduce_cmd(a, out),
        Command::Traffic(a) => traffic_cmd(a, cli.seed, out),
    }
}

fn read_system(path: &PathBuf) -> Result<DodsSystem> {
    fs::read_to_string(path)?.parse()
}

fn parse_fields(items: &[String]) -> Result<Vec<VectorField>> {
    items.iter().map(|s| VectorField::parse_pair(s)).collect()
}

fn parse_bindings(items: &[String]) -> Result<Bindings> {
    let mut b = Bindings::new();
    for it in items {
        let (k, v) = it
            .split_once('=')
            .ok_or_else(|| Error::InvalidParams(format!("expected `name=value`, got `{it}`")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParams(format!("invalid value in `{it}`")))?;
        b.set(k.trim(), v);
    }
    Ok(b)
}

fn parse_range(text: &str) -> Result<(f64, f64)> {
    dods::parse_pair(text)
        .filter(|(a, b)| a < b)
        .ok_or_else(|| Error::InvalidParams(format!("expected `lo,hi` with lo < hi, got `{text}`")))
}

/// Shortest decimal that rounds to `v` at 12 significant digits.
fn short(v: f64) -> String {
    let s = format!("{v:.12}");
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn write_report(out: &mut String, r: &InvarianceReport) {
    let _ = writeln!(
        out,
        "{} {}: dode {:.3e}, delay {:.3e} over {} samples ({} rejected)",
        verdict(r.passes()),
        r.field,
        r.max_residual_dode,
        r.max_residual_delay,
        r.n_samples,
        r.failed_samples
    );
}

fn verify(a: &VerifyArgs, seed: u64, out: &mut String) -> Result<bool> {
    let s = read_system(&a.system)?;
    let fields = parse_fields(&a.fields)?;
    let reports = dods::check_algebra_seeded(&s, &fields, a.samples, seed)?;
    for r in &reports {
        write_report(out, r);
    }
    Ok(reports.iter().all(InvarianceReport::passes))
}

fn bracket(a: &FieldsArgs, seed: u64, out: &mut String) -> Result<bool> {
    let fields = parse_fields(&a.fields)?;
    let params = parse_bindings(&a.params)?;
    let c = symmetry::check_closure_seeded(&fields, &params, seed)?;
    let _ = writeln!(out, "closed: span residual {:.3e}", c.max_residual);
    let nz = c.nonzero(1e-9);
    if nz.is_empty() {
        let _ = writeln!(out, "abelian");
    }
    for (i, j, k, v) in nz {
        if i < j {
            let _ = writeln!(out, "[X{}, X{}] : X{} coefficient {}", i + 1, j + 1, k + 1, short(v));
        }
    }
    Ok(true)
}

fn rank(a: &FieldsArgs, seed: u64, out: &mut String) -> Result<bool> {
    let fields = parse_fields(&a.fields)?;
    let params = parse_bindings(&a.params)?;
    let z = symmetry::invariant_count_seeded(&fields, &params, seed, 8)?;
    let _ = writeln!(out, "dim M = {}", z.dim_m);
    let _ = writeln!(out, "rank Z = {}", z.rank_z);
    let _ = writeln!(out, "invariants k = {}", z.k);
    Ok(true)
}

fn check_one(e: &catalog::CatalogEntry, samples: usize, seed: u64, out: &mut String) -> Result<bool> {
    let c = catalog::check_entry(e, samples, seed)?;
    let _ = writeln!(out, "{} ({})", e.id, e.algebra);
    for r in &c.invariance {
        write_report(out, r);
    }
    if let Some(sc) = &c.closure {
        let _ = writeln!(out, "  closure residual {:.3e}", sc.max_residual);
    }
    let _ = writeln!(out, "  jacobi residual {:.3e}", c.jacobi);
    let _ = writeln!(
        out,
        "  negative control residual {:.3e} ({})",
        c.negative_control,
        if c.negative_control > 1e-3 { "rejected as expected" } else { "NOT rejected" }
    );
    Ok(c.passes())
}

fn catalog_cmd(action: &CatalogAction, seed: u64, out: &mut String) -> Result<bool> {
    match action {
        CatalogAction::List => {
            for line in catalog::list_entries() {
                let _ = writeln!(out, "{line}");
            }
            Ok(true)
        }
        CatalogAction::Show { id } => {
            let _ = write!(out, "{}", catalog::get(id)?);
            Ok(true)
        }
        CatalogAction::Check { id: Some(id), samples } => check_one(catalog::get(id)?, *samples, seed, out),
        CatalogAction::Check { id: None, samples } => {
            let mut ok = true;
            for e in catalog::entries().iter().filter(|e| e.kind != catalog::EntryKind::Marker) {
                ok &= check_one(e, *samples, seed, out)?;
            }
            Ok(ok)
        }
        CatalogAction::Export { out: path } => {
            let text = catalog::export();
            match path {
                Some(p) => {
                    fs::write(p, &text)?;
                    let _ = writeln!(out, "wrote {} entries to {}", catalog::entries().len(), p.display());
                }
                None => out.push_str(&text),
            }
            Ok(true)
        }
    }
}

/// Lowest delayed point over `[from, to]` for delays that depend on `x`
/// only.
fn infer_history_start(s: &DodsSystem, from: f64, to: f64) -> Result<f64> {
    if !matches!(s.delay_kind, DelayKind::Constant | DelayKind::Independent) || s.is_implicit() {
        return Err(Error::InvalidParams(
            "the delay depends on the solution; pass --start for the history interval".into(),
        ));
    }
    let mut lo = from;
    for i in 0..=400 {
        let x = from + (to - from) * i as f64 / 400.0;
        lo = lo.min(s.g.eval(&s.params.clone().with_var(Var::X, x))?);
    }
    Ok(lo)
}

fn integrate_cmd(a: &IntegrateArgs, out: &mut String) -> Result<bool> {
    let s = read_system(&a.system)?;
    let phi: Expr = a.phi.parse()?;
    let start = match a.start {
        Some(v) => v,
        None => infer_history_start(&s, a.from, a.to)?,
    };
    let hist = HistoryFunction::symbolic(phi, start, a.from)?;
    let dy0 = if a.dy0 == "phi" {
        Dy0::FromPhi
    } else {
        Dy0::Value(
            a.dy0
                .parse()
                .map_err(|_| Error::InvalidParams(format!("--dy0 takes a number or `phi`, got `{}`", a.dy0)))?,
        )
    };
    let traj = integrate::solve(&s, &hist, dy0, a.to, a.h)?;
    let last = traj.last();
    let _ = writeln!(out, "method {} with h = {}", traj.method, short(traj.h));
    let _ = writeln!(out, "nodes {}", traj.nodes.len());
    let _ = writeln!(out, "y({}) = {}", short(last.x), short(last.y));
    let _ = writeln!(out, "dy({}) = {}", short(last.x), short(last.dy));
    let res = integrate::residual_on_trajectory(&s, &traj, 200)?;
    let _ = writeln!(out, "midpoint residual dode {:.3e}, delay {:.3e}", res.dode, res.delay);
    if let Some(p) = &a.out {
        fs::write(p, traj.to_csv())?;
        let _ = writeln!(out, "wrote {}", p.display());
    }
    Ok(true)
}

fn roots(a: &RootsArgs, out: &mut String) -> Result<bool> {
    let cl = CanonicalLinear::new(a.alpha, a.beta, a.gamma, a.c)?;
    let range = parse_range(&a.range)?;
    let rs = linear::characteristic_roots(&cl, range, a.cells);
    if rs.is_empty() {
        let _ = writeln!(out, "no real roots in [{}, {}]", short(range.0), short(range.1));
        return Ok(true);
    }
    let list: Vec<String> = rs.iter().map(|&r| short(r)).collect();
    let _ = writeln!(out, "roots: {}", list.join(", "));
    let mut ok = true;
    for r in rs {
        let res = linear::verify_exponential_solution(&cl, r);
        ok &= res < 1e-10;
        let _ = writeln!(out, "lambda = {:.15}: exponential residual {:.3e}", r, res);
    }
    Ok(ok)
}

fn reduce_cmd(a: &ReduceArgs, out: &mut String) -> Result<bool> {
    let s = read_system(&a.system)?;
    let x = VectorField::parse_pair(&a.field)?;
    let interval = match &a.interval {
        Some(t) => parse_range(t)?,
        None if s.domain.0.is_finite() && s.domain.1.is_finite() => s.domain,
        None => (0.0, 2.0),
    };
    let guesses = a
        .guesses
        .iter()
        .map(|g| dods::parse_pair(g).ok_or_else(|| Error::InvalidParams(format!("expected `A,B`, got `{g}`"))))
        .collect::<Result<Vec<_>>>()?;
    let pair = reduce::invariants_of(&x, &s.params)?;
    let sol = reduce::reduce_and_solve(&s, &x, &pair, &ReduceOptions::new(interval).with_guesses(guesses))?;
    let _ = writeln!(out, "{sol}");
    let chk = reduce::verify_invariant_solution(&s, &sol, interval);
    let _ = writeln!(out, "grid residual {:.3e}", chk.grid);
    match chk.integrator {
        Some(d) => {
            let _ = writeln!(out, "integrator deviation {:.3e}", d);
        }
        None => {
            let _ = writeln!(out, "integrator check unavailable");
        }
    }
    Ok(chk.grid < 1e-10)
}

fn example_params(a: &TrafficArgs, id: u8) -> Result<TrafficParams> {
    let base = TrafficParams::example(id)?;
    let p = match base.example {
        Some(Example::One { v, tau, a: off }) => {
            TrafficParams::example1(a.v.unwrap_or(v), a.tau.unwrap_or(tau), a.a.unwrap_or(off))
        }
        Some(Example::Two { k, q, beta }) => TrafficParams::example2(
            a.alpha.unwrap_or(base.alpha),
            a.n1.unwrap_or(base.n1),
            a.k.unwrap_or(k),
            a.q.unwrap_or(q),
            a.beta.unwrap_or(beta),
        ),
        Some(Example::Three { k, epsilon, tau }) => TrafficParams::example3(
            a.alpha.unwrap_or(base.alpha),
            a.n.unwrap_or(base.n1),
            a.epsilon.unwrap_or(epsilon),
            a.tau.unwrap_or(tau),
            a.k.unwrap_or(k),
        ),
        None => unreachable!("built-in examples carry their parameters"),
    };
    p.validate()?;
    Ok(p)
}

fn traffic_cmd(a: &TrafficArgs, seed: u64, out: &mut String) -> Result<bool> {
    if let Some(path) = &a.scenario {
        let sc: Scenario = fs::read_to_string(path)?.parse()?;
        let st = sc.run()?;
        let _ = writeln!(out, "cars {}", st.count());
        for (i, car) in st.cars.iter().enumerate() {
            let n = car.last();
            let _ = writeln!(out, "car {}: x({}) = {}", i + 1, short(n.x), short(n.y));
        }
        let _ = writeln!(out, "min headway {:.6e}", st.min_headway()?);
        if let Some(c) = &st.collision {
            let _ = writeln!(out, "collision: car {} at t = {} (headway {:.3e})", c.car, short(c.t), c.headway);
        }
        if let Some(p) = &a.out {
            fs::write(p, st.to_csv())?;
            let _ = writeln!(out, "wrote {}", p.display());
        }
        return Ok(st.collision.is_none());
    }
    let id = a
        .example
        .ok_or_else(|| Error::InvalidParams("pass --example 1|2|3 or --scenario FILE".into()))?;
    traffic_pipeline(&example_params(a, id)?, a.h, seed, out)
}

/// Build, verify the symmetry, solve the constraint and compare the
/// invariant solution with the integrator.
pub fn traffic_pipeline(p: &TrafficParams, h: f64, seed: u64, out: &mut String) -> Result<bool> {
    let id = p.example.map(|e| e.id()).unwrap_or(0);
    let s = traffic::build_two_car(p)?;
    let x = traffic::example_symmetry(p)?;
    let _ = writeln!(out, "traffic example {id}");
    let _ = writeln!(out, "ddy = {}", s.f.bind_params(&s.params));
    let _ = writeln!(out, "xm = {}", s.g.bind_params(&s.params));
    let inv = dods::check_invariance_seeded(&s, &x, 200, seed)?;
    let sym_ok = inv.passes_at(1e-9);
    let _ = writeln!(
        out,
        "{} symmetry {}: invariance {:.3e} over {} samples",
        verdict(sym_ok),
        x.label,
        inv.max_residual(),
        inv.n_samples
    );
    let pair = reduce::invariants_of(&x, &Bindings::new())?;
    let ann = reduce::check_invariants(&x, &pair, &Bindings::new(), traffic::default_interval(p), 100, seed)?;
    let _ = writeln!(out, "invariants J1 = {}, J2 = {}: annihilation {:.3e}", pair.j1, pair.j2, ann.max_annihilation);
    let cs = traffic::solve_constraint(p)?;
    let _ = writeln!(out, "B = {}", short(cs.b));
    if let Some(w) = &cs.warning {
        let _ = writeln!(out, "warning: {w}");
    }
    for (r, why) in &cs.rejected {
        let _ = writeln!(out, "rejected root A = {} ({why})", short(*r));
    }
    let roots: Vec<f64> = if cs.free_a {
        let a = match p.example {
            Some(Example::One { a, .. }) => a,
            _ => unreachable!("only example 1 leaves A free"),
        };
        let _ = writeln!(out, "A is free; using A = {}", short(a));
        vec![a]
    } else {
        for r in &cs.roots {
            let _ = writeln!(
                out,
                "root A = {:.12} (constraint residual {:.3e}{})",
                r.a,
                r.residual,
                if r.double { ", double" } else { "" }
            );
        }
        cs.roots.iter().map(|r| r.a).collect()
    };
    if let Some(cf) = traffic::example3_closed_form(p) {
        let _ = writeln!(out, "closed form A = {cf:.12}");
    }
    let interval = traffic::default_interval(p);
    let tol = if id == 1 { 1e-9 } else { 1e-6 };
    let mut ok = sym_ok;
    for a in roots {
        let sol = traffic::invariant_solution(p, a)?;
        let grid = reduce::grid_residual(&s, &sol.pair, sol.a, sol.b, interval);
        let cmp = traffic::compare_exact_vs_numeric(p, a, interval.1, h)?;
        let dev = if id == 1 { cmp.max_abs } else { cmp.max_rel };
        let pass = grid < 1e-10 && dev < tol;
        ok &= pass;
        let _ = writeln!(out, "solution y = {} with xm = {}", sol.h(), sol.k());
        let _ = writeln!(out, "  grid residual {:.3e}", grid);
        let kind = if id == 1 { "absolute" } else { "relative" };
        if dev < tol {
            let _ = writeln!(
                out,
                "  {} exact vs numeric on [{}, {}]: {kind} deviation < {tol:e} ({:.3e})",
                verdict(pass),
                short(interval.0),
                short(interval.1),
                dev
            );
        } else {
            let _ = writeln!(
                out,
                "  FAIL exact vs numeric on [{}, {}]: {kind} deviation {:.3e} exceeds {tol:e}",
                short(interval.0),
                short(interval.1),
                dev
            );
        }
    }
    Ok(ok)
}
