//! `asymbound`: classical and curve-based lower bounds on the asymptotic rate
//! of q-ary codes, the published reference examples, δ-sweeps and the
//! brute-force verification suites.

mod output;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;

use asymbound::classic::{gv_bound, ihara_lower, no1_bound, tvz_bound, IharaProfile};
use asymbound::numerics::{format_rational_exact, parse_rational};
use asymbound::psi::PsiDiagnostics;
use asymbound::rate::{
    compare_table, optimize_x, r_general, r_lin, BoundProblem, BoundResult, Cell, Row, XChoice,
};
use asymbound::reference::{cases_in, ReferenceCase};
use asymbound::verify::{run_suite, SuiteReport, SUITES};
use asymbound::{Error, Real};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rug::Rational;

use output::{num, render, Format, Layout, Record};

#[derive(Parser, Debug)]
#[command(
    name = "asymbound",
    version,
    about = "Asymptotic rate bounds for q-ary codes"
)]
struct Cli {
    #[command(flatten)]
    config: Config,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Config {
    /// Working precision in bits.
    #[arg(long, global = true, default_value_t = 768, value_parser = clap::value_parser!(u32).range(128..))]
    precision_bits: u32,
    /// Decimal digits to print.
    #[arg(long, global = true, default_value_t = 30, value_parser = clap::value_parser!(u32).range(1..))]
    digits: u32,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Seed for the randomized suites.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct Field {
    /// Field size, a prime power (`64`, `2^21`).
    #[arg(long, value_parser = parse_q)]
    q: u64,
    /// Ihara constant; defaults to the built-in value for squares and cubes.
    #[arg(long, value_parser = parse_num, allow_hyphen_values = true)]
    gamma: Option<Rational>,
    /// Degree-l place density as `l=v`; repeatable.
    #[arg(long = "gamma-l", value_parser = parse_gamma_l)]
    gamma_l: Vec<(u32, Rational)>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one bound at one relative distance.
    Bound {
        #[arg(value_enum)]
        kind: BoundKind,
        #[command(flatten)]
        field: Field,
        /// Relative distance; fractions are exact.
        #[arg(long, value_parser = parse_num, allow_hyphen_values = true)]
        delta: Rational,
        /// Comma-separated x-vector for `new`.
        #[arg(long, value_delimiter = ',', value_parser = parse_num)]
        x: Vec<Rational>,
        /// Search an x-vector of this length for `new` when `--x` is absent.
        #[arg(long)]
        m: Option<usize>,
        /// Evaluation budget of the x-search.
        #[arg(long, default_value_t = 200)]
        budget: usize,
    },
    /// Recompute a published example and compare with its printed constants.
    Reproduce {
        #[arg(value_parser = ["7.1", "7.2", "7.3"])]
        example: String,
    },
    /// Evaluate all bounds on an evenly spaced grid of distances.
    Scan {
        #[command(flatten)]
        field: Field,
        #[arg(long, value_parser = parse_num)]
        delta_from: Rational,
        #[arg(long, value_parser = parse_num)]
        delta_to: Rational,
        #[arg(long, default_value_t = 11, value_parser = clap::value_parser!(u64).range(1..))]
        steps: u64,
        /// Length of the x-vector (zeros unless `--x` or `--optimize`).
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, value_delimiter = ',', value_parser = parse_num, conflicts_with = "optimize")]
        x: Vec<Rational>,
        /// Search an x-vector of length `m` at every row.
        #[arg(long)]
        optimize: bool,
        #[arg(long, default_value_t = 200)]
        budget: usize,
    },
    /// Run the brute-force and randomized verification suites.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BoundKind {
    Gv,
    Tvz,
    No1,
    Lin,
    New,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Suite {
    Combinatorics,
    Vectors,
    Surface,
    All,
}

fn parse_num(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn parse_q(s: &str) -> Result<u64, String> {
    let r = parse_num(s)?;
    if *r.denom() != 1 {
        return Err(format!("q must be an integer, got {s}"));
    }
    r.numer()
        .to_u64()
        .ok_or_else(|| format!("q must be a positive 64-bit integer, got {s}"))
}

fn parse_gamma_l(s: &str) -> Result<(u32, Rational), String> {
    let (l, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected l=v, got {s:?}"))?;
    let l: u32 = l
        .trim()
        .parse()
        .map_err(|_| format!("bad degree in {s:?}"))?;
    Ok((l, parse_num(v)?))
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Core(Error::Input(_)) => 1,
            Failure::Core(Error::Domain(_)) | Failure::Core(Error::NonDifferentiable(_)) => 2,
            Failure::Core(Error::Internal(_)) => 3,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => format!("usage error: {m}"),
            Failure::Core(e) => e.to_string(),
        }
    }
}

/// Rendered output plus the exit code it carries.
struct Outcome {
    stdout: String,
    stderr: String,
    code: u8,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            stdout,
            stderr: String::new(),
            code: 0,
        }
    }
}

struct Ctx {
    prec: u32,
    digits: usize,
    format: Format,
    seed: u64,
}

impl Ctx {
    fn num(&self, v: &Real) -> String {
        num(v, self.digits)
    }

    fn real(&self, r: &Rational) -> Real {
        Real::from_rational(r, self.prec)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let ctx = Ctx {
        prec: cli.config.precision_bits,
        digits: cli.config.digits as usize,
        format: cli.config.format,
        seed: cli.config.seed,
    };
    match run(cli.command, &ctx) {
        Ok(out) => {
            print!("{}", out.stdout);
            eprint!("{}", out.stderr);
            ExitCode::from(out.code)
        }
        Err(f) => {
            eprintln!("{}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(command: Command, ctx: &Ctx) -> Result<Outcome, Failure> {
    match command {
        Command::Bound {
            kind,
            field,
            delta,
            x,
            m,
            budget,
        } => cmd_bound(kind, &field, &delta, &x, m, budget, ctx),
        Command::Reproduce { example } => cmd_reproduce(&example, ctx),
        Command::Scan {
            field,
            delta_from,
            delta_to,
            steps,
            m,
            x,
            optimize,
            budget,
        } => {
            let choice = if optimize {
                XChoice::Optimize { m, budget }
            } else if x.is_empty() {
                XChoice::Fixed(vec![Real::zero(ctx.prec); m.max(1)])
            } else {
                XChoice::Fixed(x.iter().map(|v| ctx.real(v)).collect())
            };
            cmd_scan(&field, &delta_from, &delta_to, steps, &choice, ctx)
        }
        Command::Verify { suite } => cmd_verify(suite, ctx),
    }
}

fn profile(field: &Field, ctx: &Ctx) -> Result<IharaProfile, Failure> {
    let gamma = match &field.gamma {
        Some(g) => ctx.real(g),
        None => match ihara_lower(field.q)?.value() {
            Some(g) => ctx.real(g),
            None => {
                return Err(Failure::Usage(format!(
                    "no built-in gamma for q = {} (neither a square nor a cube); pass --gamma",
                    field.q
                )))
            }
        },
    };
    let gl: BTreeMap<u32, Real> = field
        .gamma_l
        .iter()
        .map(|(l, v)| (*l, ctx.real(v)))
        .collect();
    Ok(IharaProfile::with_gamma_l(field.q, gamma, gl)?)
}

fn put_result(rec: &mut Record, res: &BoundResult, ctx: &Ctx) {
    let c = &res.components;
    rec.put("psi", ctx.num(&res.psi))
        .put("tvz", ctx.num(&c.tvz))
        .put("x_entropy", ctx.num(&c.x_entropy))
        .put("linear_penalty", ctx.num(&c.linear_penalty))
        .put("psi_term", ctx.num(&c.psi_term));
    put_diagnostics(rec, &res.psi_diagnostics, ctx);
}

fn put_diagnostics(rec: &mut Record, d: &PsiDiagnostics, ctx: &Ctx) {
    let method = serde_json::to_value(d.method)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    rec.put("theta", ctx.num(&d.theta))
        .put("target", ctx.num(&d.target))
        .put("i_at_zero", ctx.num(&d.i_at_zero))
        .put("limit_proxy", ctx.num(&d.limit_proxy))
        .put("iterations", d.iterations.to_string())
        .put("bracket_width", d.width.to_sci(3))
        .put("method", method)
        .put("zero_branch", d.zero_branch.to_string())
        .put("clamped", d.clamped.to_string())
        .put(
            "closed_form_throughout",
            d.closed_form_throughout.to_string(),
        )
        .put(
            "conditions_hold_at_bracket",
            d.conditions_hold_at_bracket.to_string(),
        );
}

fn cmd_bound(
    kind: BoundKind,
    field: &Field,
    delta: &Rational,
    x: &[Rational],
    m: Option<usize>,
    budget: usize,
    ctx: &Ctx,
) -> Result<Outcome, Failure> {
    let d = ctx.real(delta);
    let mut rec = Record::new();
    rec.put("bound", format!("{kind:?}").to_lowercase())
        .put("q", field.q.to_string())
        .put("delta", format_rational_exact(delta));
    match kind {
        BoundKind::Gv => {
            let v = gv_bound(field.q, &d)?;
            rec.put("value", ctx.num(&v));
        }
        BoundKind::Tvz | BoundKind::No1 => {
            let prof = profile(field, ctx)?;
            let v = match kind {
                BoundKind::Tvz => tvz_bound(&d, prof.gamma())?,
                _ => no1_bound(field.q, &d, prof.gamma())?,
            };
            rec.put("gamma", ctx.num(prof.gamma()))
                .put("value", ctx.num(&v));
        }
        BoundKind::Lin => {
            let prof = profile(field, ctx)?;
            let res = r_lin(&prof, &d, ctx.prec)?;
            rec.put("gamma", ctx.num(prof.gamma()))
                .put("value", ctx.num(&res.value));
            put_result(&mut rec, &res, ctx);
        }
        BoundKind::New => {
            let prof = profile(field, ctx)?;
            let (xs, res) = if !x.is_empty() {
                let xs: Vec<Real> = x.iter().map(|v| ctx.real(v)).collect();
                let res = r_general(&BoundProblem::new(&prof, &d, &xs, ctx.prec)?)?;
                (xs, res)
            } else if let Some(m) = m {
                let o = optimize_x(&prof, &d, m, budget, ctx.prec)?;
                (o.xs, o.result)
            } else {
                return Err(Failure::Usage("bound new needs --x or --m".into()));
            };
            let lin = r_lin(&prof, &d, ctx.prec)?;
            rec.put("gamma", ctx.num(prof.gamma()));
            for (i, v) in xs.iter().enumerate() {
                rec.put(&format!("x{}", i + 1), v.to_sci(ctx.digits));
            }
            rec.put("value", ctx.num(&res.value))
                .put("r_lin", ctx.num(&lin.value))
                .put("gain", (&res.value - &lin.value).to_sci(ctx.digits));
            put_result(&mut rec, &res, ctx);
        }
    }
    Ok(Outcome::ok(render(&[rec], ctx.format, Layout::Blocks)))
}

/// Smallest gain the computation can certify: the root search pins `Psi`
/// to `2^{-(prec-16)} theta`, and the bounds are O(1).
fn resolution(prec: u32) -> Real {
    Real::pow2(-(prec as i32 - 16), prec)
}

fn reproduce_case(case: &ReferenceCase, ctx: &Ctx) -> Result<(Record, bool), Failure> {
    let p = ctx.prec;
    let prof = case.profile(p)?;
    let delta = case.delta(p);
    let xs = case.xs(p);
    let lin = r_lin(&prof, &delta, p)?.value;
    let general = r_general(&BoundProblem::new(&prof, &delta, &xs, p)?)?.value;
    let printed = parse_rational(case.r_lin)?;
    let digits_ok = lin.to_decimal_truncated(18) == case.r_lin[..20];
    let gain = &general - &lin;
    let min_gain = Real::parse(case.min_gain, p)?;
    let res = resolution(p);
    let margin = lin.to_rational() - parse_rational(case.prior)?;
    let margin_ok = margin >= parse_rational(case.prior_margin)?;

    let mut reasons = Vec::new();
    if !digits_ok {
        reasons.push("r_lin differs from the printed digits".to_string());
    }
    if min_gain <= res {
        reasons.push(format!(
            "required gain {} is below the resolution {} at {p} bits",
            case.min_gain,
            res.to_sci(3)
        ));
    } else if gain < min_gain {
        reasons.push("gain below the printed value".to_string());
    }
    if !margin_ok {
        reasons.push("margin over the prior bound too small".to_string());
    }
    let ok = reasons.is_empty();
    let sci = |v: &Real| v.to_sci(ctx.digits.min(15));
    let mut rec = Record::new();
    rec.put("case", case.id)
        .put("q", case.q.to_string())
        .put("gamma", case.gamma)
        .put("delta", case.delta_literal())
        .put("xs", case.xs.join(","))
        .put("r_lin", ctx.num(&lin))
        .put("r_lin_printed", case.r_lin)
        .put(
            "r_lin_gap",
            sci(&(&lin - &Real::from_rational(&printed, p))),
        )
        .put("r_general", ctx.num(&general))
        .put("gain", sci(&gain))
        .put("gain_printed", case.min_gain)
        .put("resolution", res.to_sci(3))
        .put("prior", case.prior)
        .put("margin", sci(&Real::from_rational(&margin, p)))
        .put("margin_required", case.prior_margin)
        .put("status", if ok { "PASS" } else { "FAIL" });
    if !ok {
        rec.put("reason", reasons.join("; "));
    }
    Ok((rec, ok))
}

fn cmd_reproduce(example: &str, ctx: &Ctx) -> Result<Outcome, Failure> {
    let mut records = Vec::new();
    let mut all = true;
    for case in cases_in(example) {
        let (rec, ok) = reproduce_case(case, ctx)?;
        all &= ok;
        records.push(rec);
    }
    if ctx.format == Format::Csv {
        // Failing rows carry an extra column; keep the header uniform.
        for r in &mut records {
            if r.0.last().is_some_and(|(k, _)| k != "reason") {
                r.put("reason", "");
            }
        }
    }
    let mut out = render(&records, ctx.format, Layout::Blocks);
    if ctx.format == Format::Table {
        out.push_str(&format!(
            "\n{example}: {}\n",
            if all { "PASS" } else { "FAIL" }
        ));
    }
    Ok(Outcome {
        stdout: out,
        stderr: String::new(),
        code: if all { 0 } else { 3 },
    })
}

fn grid(from: &Rational, to: &Rational, steps: u64) -> Vec<Rational> {
    if steps == 1 {
        return vec![from.clone()];
    }
    let span = Rational::from(to - from);
    (0..steps)
        .map(|k| from + (&span * Rational::from((k, steps - 1))))
        .collect()
}

/// Rows in input order; evaluated on all available cores.
fn parallel_rows(prof: &IharaProfile, deltas: &[Rational], xs: &XChoice, prec: u32) -> Vec<Row> {
    let workers = thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(deltas.len())
        .max(1);
    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<Row>> = vec![None; deltas.len()];
    thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= deltas.len() {
                            break;
                        }
                        let row = compare_table(prof, &deltas[i..=i], xs, prec).remove(0);
                        done.push((i, row));
                    }
                    done
                })
            })
            .collect();
        for h in handles {
            for (i, row) in h.join().expect("scan worker panicked") {
                slots[i] = Some(row);
            }
        }
    });
    slots
        .into_iter()
        .map(|r| r.expect("every row computed"))
        .collect()
}

fn cmd_scan(
    field: &Field,
    from: &Rational,
    to: &Rational,
    steps: u64,
    xs: &XChoice,
    ctx: &Ctx,
) -> Result<Outcome, Failure> {
    let zero = Rational::new();
    let one = Rational::from(1);
    if *from <= zero || *to >= one || from > to || (steps > 1 && from == to) {
        return Err(Error::Domain(format!(
            "need 0 < delta_from < delta_to < 1, got {} and {}",
            format_rational_exact(from),
            format_rational_exact(to)
        ))
        .into());
    }
    let prof = profile(field, ctx)?;
    let rows = parallel_rows(&prof, &grid(from, to, steps), xs, ctx.prec);
    let records: Vec<Record> = rows.iter().map(|r| row_record(r, ctx)).collect();
    Ok(Outcome::ok(render(&records, ctx.format, Layout::Columns)))
}

fn row_record(row: &Row, ctx: &Ctx) -> Record {
    let cell = |c: &Cell| match c.value() {
        Some(v) => ctx.num(v),
        None => "out_of_domain".to_string(),
    };
    let mut rec = Record::new();
    rec.put("delta", format_rational_exact(&row.delta))
        .put("gv", cell(&row.gv))
        .put("tvz", cell(&row.tvz))
        .put("no1", cell(&row.no1))
        .put("r_lin", cell(&row.r_lin))
        .put("r_general", cell(&row.r_general))
        .put("best", row.best.unwrap_or(""));
    if ctx.format == Format::Json {
        let cells = [
            ("gv", &row.gv),
            ("tvz", &row.tvz),
            ("no1", &row.no1),
            ("r_lin", &row.r_lin),
            ("r_general", &row.r_general),
        ];
        let notes: Vec<String> = cells
            .iter()
            .filter_map(|(k, c)| match c {
                Cell::OutOfDomain(m) => Some(format!("{k}: {m}")),
                Cell::Value(_) => None,
            })
            .collect();
        if !notes.is_empty() {
            rec.put("out_of_domain", notes.join("; "));
        }
        if let Some(xs) = &row.xs {
            let s: Vec<String> = xs.iter().map(|v| v.to_sci(ctx.digits)).collect();
            rec.put("xs", s.join(","));
        }
    }
    rec
}

fn cmd_verify(suite: Suite, ctx: &Ctx) -> Result<Outcome, Failure> {
    let names: Vec<&str> = match suite {
        Suite::Combinatorics => vec!["combinatorics"],
        Suite::Vectors => vec!["vectors"],
        Suite::Surface => vec!["surface"],
        Suite::All => SUITES.to_vec(),
    };
    let reports: Vec<asymbound::Result<SuiteReport>> = thread::scope(|s| {
        let handles: Vec<_> = names
            .iter()
            .map(|n| s.spawn(move || run_suite(n, ctx.seed, ctx.prec)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("suite panicked"))
            .collect()
    });
    let mut records = Vec::new();
    let mut notes = Vec::new();
    let mut failure = None;
    for rep in reports {
        let rep = rep?;
        for c in &rep.checks {
            let mut r = Record::new();
            r.put("suite", rep.suite.as_str())
                .put("check", c.name.as_str())
                .put("cases", c.cases.to_string())
                .put("passed", c.passed.to_string())
                .put("status", if c.ok() { "PASS" } else { "FAIL" });
            records.push(r);
            if failure.is_none() && !c.ok() {
                failure = Some(serde_json::json!({
                    "suite": rep.suite,
                    "check": c.name,
                    "seed": ctx.seed.to_string(),
                    "counterexample": c.counterexample,
                }));
            }
        }
        notes.extend(rep.notes.iter().map(|n| format!("{}: {n}", rep.suite)));
    }
    let mut out = render(&records, ctx.format, Layout::Columns);
    if ctx.format == Format::Table {
        for n in &notes {
            out.push_str(&format!("note  {n}\n"));
        }
    }
    Ok(match failure {
        None => Outcome::ok(out),
        Some(f) => Outcome {
            stdout: out,
            stderr: format!("first counterexample: {f}\n"),
            code: 3,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn grid_is_exact_and_inclusive() {
        let g = grid(&Rational::from((1, 10)), &Rational::from((4, 5)), 71);
        assert_eq!(g.len(), 71);
        assert_eq!(g[0], Rational::from((1, 10)));
        assert_eq!(g[70], Rational::from((4, 5)));
        assert_eq!(g[1], Rational::from((11, 100)));
        assert_eq!(
            grid(&Rational::from((1, 3)), &Rational::from((1, 2)), 1).len(),
            1
        );
    }

    #[test]
    fn q_accepts_powers() {
        assert_eq!(parse_q("2^21"), Ok(1 << 21));
        assert!(parse_q("1/2").is_err());
        assert_eq!(parse_gamma_l("2=0.1").unwrap().0, 2);
    }
}
