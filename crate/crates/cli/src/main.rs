//! `thinset`: command-line access to thin-set enumeration, exponential sums,
//! kernels, averaging operators, the Calderón–Zygmund tools, ergodic
//! averages and the acceptance battery.

mod output;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use thinset_core::czd::{cz_decompose, refine, verify_absthm_hypotheses, weaktype_trials, CzdError};
use thinset_core::ergodic::{convergence_trace, ErgodicError, Observable, RotationSystem, Theta};
use thinset_core::expsum::{trest_scan_variant, xi_grid, ExpSumError, Variant};
use thinset_core::kernels::{gn_en_split, KernelError};
use thinset_core::operators::{maximal, oscillation, Op, OpError, ScalePlan};
use thinset_core::suite::{run_all, to_json, Mode};
use thinset_core::thinset::{enumerate, registry, registry_get, ThinSet, ThinSetError, ThinSetSpec};

use output::{read_signal, sink, write_text, Chart, Table};

/// Failure classes and their exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Exit 2.
    Config(String),
    /// Exit 3.
    Assertion(String),
    /// Exit 4.
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Assertion(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Assertion(m) => write!(f, "assertion failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<ThinSetError> for CliError {
    fn from(e: ThinSetError) -> Self {
        match e {
            ThinSetError::PrecisionExhausted { .. } => CliError::Assertion(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<OpError> for CliError {
    fn from(e: OpError) -> Self {
        match e {
            OpError::IdentityViolation { .. } => CliError::Assertion(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<CzdError> for CliError {
    fn from(e: CzdError) -> Self {
        match e {
            CzdError::Invariant { .. } => CliError::Assertion(e.to_string()),
            CzdError::Op(o) => o.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<ExpSumError> for CliError {
    fn from(e: ExpSumError) -> Self {
        match e {
            ExpSumError::ThinSet(t) => t.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ErgodicError> for CliError {
    fn from(e: ErgodicError) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "thinset", version, about = "Thin arithmetic sets, their averaging operators and ergodic averages")]
struct Cli {
    /// Worker threads (defaults to the config value, then to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct SetArgs {
    /// JSON set spec, or `{"set": ..., "seed": ..., "threads": ...}`.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named built-in configuration (see `thinset presets`).
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// List the built-in configurations.
    Presets,
    /// Enumerate B ∩ [1, N], one element per line.
    Gen {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long = "N")]
        n: u64,
        /// Emit the run statistics as JSON instead of the elements.
        #[arg(long)]
        stats: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// |B ∩ [1, t]| against phi_2(t) and Psi(t).
    Count {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long = "N")]
        n: u64,
        /// Comma-separated t values (default: N).
        #[arg(long, value_delimiter = ',')]
        t: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run statistics of B ∩ [1, N] as JSON.
    Stats {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long = "N")]
        n: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    #[command(subcommand)]
    Expsum(ExpsumCmd),
    #[command(subcommand)]
    Kernels(KernelsCmd),
    #[command(subcommand)]
    Ops(OpsCmd),
    #[command(subcommand)]
    Czd(CzdCmd),
    /// Same as `czd weaktype`.
    Weaktype(WeaktypeArgs),
    #[command(subcommand)]
    Ergodic(ErgodicCmd),
    /// Run the acceptance battery and print a JSON summary.
    Suite {
        /// Reduced sizes.
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 20240917)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ExpsumCmd {
    /// Exponential-sum errors over a dyadic N grid and a frequency grid.
    Scan {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long, default_value_t = 1024)]
        nmin: u64,
        #[arg(long, default_value_t = 1 << 20)]
        nmax: u64,
        /// Largest Farey denominator of the frequency grid.
        #[arg(long, default_value_t = 16)]
        qmax: u64,
        /// `ext2` (B against psi-weighted interval) or `ext`.
        #[arg(long, default_value = "ext2")]
        variant: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum KernelsCmd {
    /// K_N * K~_N, its main term G_N and the error E_N.
    Autocorr {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long = "N")]
        n: u64,
        #[arg(long, default_value_t = 0.0)]
        chi: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum OpsCmd {
    /// sup over scales of op_t |f|.
    Maximal {
        #[command(flatten)]
        set: SetArgs,
        /// Input signal, CSV with header `x,value`.
        #[arg(long)]
        f: PathBuf,
        /// `all_t`, `dyadic` or `tau_dyadic:<tau>`.
        #[arg(long, default_value = "all_t")]
        plan: String,
        /// `M`, `A`, `D`, `H` or `smooth_dyadic`.
        #[arg(long, default_value = "M")]
        op: String,
        #[arg(long, default_value_t = 4096)]
        horizon: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// 2-oscillation over cut points, optionally with the 2-variation.
    Oscillation {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long)]
        f: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        cuts: Vec<u64>,
        #[arg(long, default_value = "M")]
        op: String,
        #[arg(long)]
        variation: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CzdCmd {
    /// Dyadic Calderón–Zygmund decomposition at level alpha.
    Decompose {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        alpha: f64,
        /// Also split at thresholds `d_n,D_n`.
        #[arg(long, value_delimiter = ',')]
        refine: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the selected cubes here.
        #[arg(long)]
        cubes: Option<PathBuf>,
    },
    /// Weak-type statistic of the maximal function on random deltas.
    Weaktype(WeaktypeArgs),
    /// Measured hypotheses of the abstract weak-type theorem, as JSON.
    Absthm {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long, default_value_t = 8)]
        nmin: u32,
        #[arg(long, default_value_t = 14)]
        nmax: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct WeaktypeArgs {
    #[command(flatten)]
    set: SetArgs,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 1 << 20)]
    horizon: u64,
    /// Deltas per trial.
    #[arg(long, default_value_t = 100)]
    deltas: usize,
    /// Deltas are placed in [0, span).
    #[arg(long, default_value_t = 4096)]
    span: i64,
    #[arg(long)]
    seed: Option<u64>,
    /// Exit with status 3 when a statistic exceeds this value.
    #[arg(long)]
    max: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ErgodicCmd {
    /// Ergodic averages of a rotation along B over a logarithmic N grid.
    Trace {
        #[command(flatten)]
        set: SetArgs,
        /// `sqrt2m1` or `golden`.
        #[arg(long, default_value = "sqrt2m1")]
        theta: String,
        /// `indicator:a,b`, `cos:k` or `const:c`.
        #[arg(long, default_value = "indicator:0,0.5")]
        f: String,
        #[arg(long = "N")]
        n: u64,
        #[arg(long, value_delimiter = ',', default_value = "0.1")]
        starts: Vec<f64>,
        /// Grid points per decade.
        #[arg(long, default_value_t = 4)]
        per_decade: u32,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    set: serde_json::Value,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    threads: Option<usize>,
}

struct Loaded {
    spec: ThinSetSpec,
    seed: Option<u64>,
    threads: Option<usize>,
}

fn load(set: &SetArgs) -> Result<Loaded, CliError> {
    match (&set.config, &set.preset) {
        (Some(path), _) => load_config(path),
        (None, Some(name)) => registry_get(name)
            .map(|spec| Loaded { spec, seed: None, threads: None })
            .ok_or_else(|| CliError::Config(format!("unknown preset `{name}`"))),
        (None, None) => Err(CliError::Config("one of --config or --preset is required".into())),
    }
}

fn load_config(path: &Path) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let wrapped = value.get("set").is_some();
    if wrapped {
        let rc: RunConfig = serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let spec = ThinSetSpec::from_json_str(&rc.set.to_string())?;
        Ok(Loaded { spec, seed: rc.seed, threads: rc.threads })
    } else {
        Ok(Loaded { spec: ThinSetSpec::from_json_str(&text)?, seed: None, threads: None })
    }
}

fn enumerate_set(spec: &ThinSetSpec, horizon: u64) -> Result<ThinSet, CliError> {
    Ok(enumerate(spec, horizon)?)
}

/// Shortest round-trip formatting, switching to scientific notation for
/// very small or very large magnitudes.
fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn parse_op(s: &str) -> Result<Op, CliError> {
    s.parse().map_err(CliError::Config)
}

fn parse_plan(s: &str) -> Result<ScalePlan, CliError> {
    s.parse().map_err(CliError::Config)
}

fn write_table(path: Option<&Path>, t: &Table) -> Result<(), CliError> {
    t.write_to(sink(path)?, true)
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

/// Threads from the command line, else from a config file given to the
/// subcommand.
fn configure_threads(cli: &Cli) -> Result<(), CliError> {
    let from_config = || -> Option<usize> {
        let set = match &cli.cmd {
            Cmd::Gen { set, .. } | Cmd::Count { set, .. } | Cmd::Stats { set, .. } => set,
            Cmd::Expsum(ExpsumCmd::Scan { set, .. }) | Cmd::Kernels(KernelsCmd::Autocorr { set, .. }) => set,
            Cmd::Ops(OpsCmd::Maximal { set, .. }) | Cmd::Ops(OpsCmd::Oscillation { set, .. }) => set,
            Cmd::Czd(CzdCmd::Weaktype(w)) | Cmd::Weaktype(w) => &w.set,
            Cmd::Czd(CzdCmd::Absthm { set, .. }) | Cmd::Ergodic(ErgodicCmd::Trace { set, .. }) => set,
            _ => return None,
        };
        set.config.as_deref().and_then(|p| load_config(p).ok()).and_then(|l| l.threads)
    };
    if let Some(n) = cli.threads.or_else(from_config) {
        if n == 0 {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads(&cli)?;
    match cli.cmd {
        Cmd::Presets => {
            let mut out = String::new();
            for (name, spec) in registry() {
                out += &format!("{name}\t{}\n", serde_json::to_string(&spec).expect("serializable"));
            }
            write_text(None, &out)
        }
        Cmd::Gen { set, n, stats, out } => {
            let ts = enumerate_set(&load(&set)?.spec, n)?;
            if stats {
                return write_text(out.as_deref(), &json(&ts.run_stats()));
            }
            let mut t = Table::new(&["n"]);
            for &e in ts.elements() {
                t.push(vec![e.to_string()]);
            }
            t.write_to(sink(out.as_deref())?, false)
        }
        Cmd::Count { set, n, t, out } => {
            let ts = enumerate_set(&load(&set)?.spec, n)?;
            let ts_list = if t.is_empty() { vec![n] } else { t };
            let mut table = Table::new(&["t", "count", "phi2", "ratio", "psi_sum"]);
            for t in ts_list {
                let c = ts.count(t)?;
                let p = ts.phi2(t as f64);
                table.push(vec![t.to_string(), c.to_string(), num(p), num(c as f64 / p), num(ts.psi_sum(t)?)]);
            }
            write_table(out.as_deref(), &table)
        }
        Cmd::Stats { set, n, out } => {
            let ts = enumerate_set(&load(&set)?.spec, n)?;
            write_text(out.as_deref(), &json(&ts.run_stats()))
        }
        Cmd::Expsum(ExpsumCmd::Scan { set, nmin, nmax, qmax, variant, out, svg }) => {
            let variant = match variant.as_str() {
                "ext2" => Variant::Ext2,
                "ext" => Variant::Ext,
                v => return Err(CliError::Config(format!("unknown variant `{v}` (expected ext or ext2)"))),
            };
            if nmin == 0 || nmin > nmax {
                return Err(CliError::Config("need 1 <= nmin <= nmax".into()));
            }
            let mut grid = vec![nmin];
            while let Some(next) = grid.last().unwrap().checked_mul(2).filter(|&v| v <= nmax) {
                grid.push(next);
            }
            let ts = enumerate_set(&load(&set)?.spec, nmax)?;
            let xis = xi_grid(qmax);
            let r = trest_scan_variant(&ts, &grid, &xis, variant)?;
            let mut t = Table::new(&["N", "xi", "abs_error", "normalized_error"]);
            for (i, &n) in grid.iter().enumerate() {
                let norm = r.normalizer(i, &ts);
                for (j, xi) in xis.iter().enumerate() {
                    let a = r.abs_error(i, j);
                    t.push(vec![n.to_string(), xi.label(), num(a), num(a / norm)]);
                }
            }
            write_table(out.as_deref(), &t)?;
            if let Some(fit) = r.fit {
                eprintln!("fitted slope of the normalized sup error: {:.4}", fit.slope);
            }
            if let Some(p) = svg {
                let series = grid.iter().zip(&r.normalized_error).map(|(&n, &e)| (n as f64, e)).collect();
                let chart = Chart {
                    title: "normalized sup error",
                    x_label: "N",
                    y_label: "error",
                    log_x: true,
                    log_y: true,
                    series: vec![("sup over xi", series)],
                };
                write_text(Some(&p), &chart.render())?;
            }
            Ok(())
        }
        Cmd::Kernels(KernelsCmd::Autocorr { set, n, chi, out, svg }) => {
            let ts = enumerate_set(&load(&set)?.spec, 4 * n)?;
            let r = gn_en_split(&ts, n, chi)?;
            let mut t = Table::new(&["x", "kk", "g", "e"]);
            for (i, x) in r.x_values().enumerate() {
                t.push(vec![x.to_string(), num(r.kk[i]), num(r.g[i]), num(r.e[i])]);
            }
            write_table(out.as_deref(), &t)?;
            eprintln!(
                "c0 = {}, c_small = {:.4}, e_max = {:.3e}, lipschitz = {:.4}, symmetric = {}, mass error = {:.2e}",
                r.c0, r.c_small, r.e_max, r.lipschitz, r.symmetric, r.mass_rel_error
            );
            if let Some(w) = &r.warning {
                eprintln!("warning: {w}");
            }
            if let Some(p) = svg {
                let pick = |v: &[f64]| r.x_values().zip(v.iter().copied()).filter(|(x, _)| *x >= 0).map(|(x, y)| (x as f64, y)).collect();
                let chart = Chart {
                    title: "autocorrelation of K_N",
                    x_label: "x",
                    y_label: "value",
                    log_x: false,
                    log_y: false,
                    series: vec![("K*K~", pick(&r.kk)), ("G_N", pick(&r.g))],
                };
                write_text(Some(&p), &chart.render())?;
            }
            Ok(())
        }
        Cmd::Ops(OpsCmd::Maximal { set, f, plan, op, horizon, out }) => {
            let (plan, op) = (parse_plan(&plan)?, parse_op(&op)?);
            let f = read_signal(&f)?;
            let ts = enumerate_set(&load(&set)?.spec, horizon)?;
            let m = maximal(&ts, &f, &plan, op)?;
            let mut t = Table::new(&["x", "value"]);
            for (i, v) in m.values.iter().enumerate() {
                t.push(vec![(m.offset + i as i64).to_string(), num(*v)]);
            }
            write_table(out.as_deref(), &t)
        }
        Cmd::Ops(OpsCmd::Oscillation { set, f, cuts, op, variation, out }) => {
            let op = parse_op(&op)?;
            let f = read_signal(&f)?;
            let horizon = *cuts.last().ok_or_else(|| CliError::Config("empty --cuts".into()))?;
            let ts = enumerate_set(&load(&set)?.spec, horizon)?;
            let r = oscillation(&ts, &f, &cuts, op, variation)?;
            let header: &[&str] = if variation { &["x", "o2", "v2", "v2_exact", "l1"] } else { &["x", "o2"] };
            let mut t = Table::new(header);
            for (i, v) in r.o2.values.iter().enumerate() {
                let mut row = vec![(r.o2.offset + i as i64).to_string(), num(*v)];
                if let (Some(v2), Some(l1)) = (&r.v2, &r.l1) {
                    row.extend([num(v2[i].value), v2[i].exact.to_string(), num(l1[i])]);
                }
                t.push(row);
            }
            write_table(out.as_deref(), &t)?;
            for (p, o, fp) in &r.norms {
                eprintln!("p = {p}: |O^2|_p = {o:.6e}, |f|_p = {fp:.6e}");
            }
            Ok(())
        }
        Cmd::Czd(CzdCmd::Decompose { f, alpha, refine: thresholds, out, cubes }) => {
            let f = read_signal(&f)?;
            let dec = cz_decompose(&f, alpha)?;
            let refined = match thresholds.as_deref() {
                Some([d, big_d]) => Some(refine(&dec, *d, *big_d)?),
                Some(_) => return Err(CliError::Config("--refine takes two values `d_n,D_n`".into())),
                None => None,
            };
            let header: &[&str] = if refined.is_some() { &["x", "f", "g", "b", "good", "bad", "small", "large"] } else { &["x", "f", "g", "b"] };
            let mut t = Table::new(header);
            for i in 0..dec.g.len() {
                let x = dec.g.offset + i as i64;
                let mut row = vec![x.to_string(), num(dec.f.get(x)), num(dec.g.values[i]), num(dec.b.values[i])];
                if let Some(r) = &refined {
                    row.extend([r.good.get(x), r.bad.get(x), r.small.get(x), r.large.get(x)].map(num));
                }
                t.push(row);
            }
            write_table(out.as_deref(), &t)?;
            if let Some(p) = cubes {
                let mut c = Table::new(&["s", "j", "start", "side"]);
                for q in &dec.cubes {
                    c.push(vec![q.s.to_string(), q.j.to_string(), q.start().to_string(), q.side().to_string()]);
                }
                write_table(Some(&p), &c)?;
            }
            eprintln!("{} cubes selected, total size {}", dec.cubes.len(), dec.total_cube_size());
            Ok(())
        }
        Cmd::Czd(CzdCmd::Weaktype(w)) | Cmd::Weaktype(w) => weaktype(w),
        Cmd::Czd(CzdCmd::Absthm { set, nmin, nmax, out }) => {
            if nmin > nmax || nmax > 30 {
                return Err(CliError::Config("need nmin <= nmax <= 30".into()));
            }
            let ts = enumerate_set(&load(&set)?.spec, 4u64 << nmax)?;
            let ns: Vec<u32> = (nmin..=nmax).collect();
            let h = verify_absthm_hypotheses(&ts, &ns)?;
            write_text(out.as_deref(), &json(&h))
        }
        Cmd::Ergodic(ErgodicCmd::Trace { set, theta, f, n, starts, per_decade, out, svg }) => {
            let theta: Theta = theta.parse()?;
            let f: Observable = f.parse()?;
            let ts = enumerate_set(&load(&set)?.spec, n)?;
            let first = *ts.elements().first().ok_or_else(|| CliError::Config(format!("B ∩ [1, {n}] is empty")))?;
            let mut grid: Vec<u64> = Vec::new();
            let steps = (n as f64 / first as f64).log10() * per_decade.max(1) as f64;
            for k in 0..=steps.ceil() as u64 {
                let v = ((first as f64) * 10f64.powf(k as f64 / per_decade.max(1) as f64)).round() as u64;
                let v = v.clamp(first, n);
                if grid.last() != Some(&v) {
                    grid.push(v);
                }
            }
            if grid.last() != Some(&n) {
                grid.push(n);
            }
            let sys = RotationSystem { theta, f };
            let tr = convergence_trace(&ts, &sys, &starts, &grid)?;
            let mut t = Table::new(&["x0", "N", "average", "deviation"]);
            for (i, &x0) in starts.iter().enumerate() {
                for (j, &nn) in grid.iter().enumerate() {
                    t.push(vec![num(x0), nn.to_string(), num(tr.averages[i][j]), num(tr.deviations[i][j])]);
                }
            }
            write_table(out.as_deref(), &t)?;
            eprintln!(
                "reference {}, largest increment: bottom half {:.3e}, top half {:.3e}{}",
                tr.reference,
                tr.max_increment_bottom,
                tr.max_increment_top,
                if tr.shrinking { "" } else { " (not shrinking)" }
            );
            if let Some(p) = svg {
                let names: Vec<String> = starts.iter().map(|x| format!("x0 = {x}")).collect();
                let series = names
                    .iter()
                    .zip(&tr.deviations)
                    .map(|(name, d)| (name.as_str(), grid.iter().zip(d).map(|(&nn, &v)| (nn as f64, v)).collect()))
                    .collect();
                let chart = Chart { title: "deviation from the integral", x_label: "N", y_label: "deviation", log_x: true, log_y: true, series };
                write_text(Some(&p), &chart.render())?;
            }
            Ok(())
        }
        Cmd::Suite { quick, seed, out } => {
            let results = run_all(if quick { Mode::Quick } else { Mode::Full }, seed);
            for r in &results {
                eprintln!("{}", r.line());
            }
            write_text(out.as_deref(), &(to_json(&results) + "\n"))?;
            let failed: Vec<&str> = results.iter().filter(|r| !r.passed()).map(|r| r.criterion_id.as_str()).collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Assertion(format!("criteria {} failed", failed.join(", "))))
            }
        }
    }
}

fn weaktype(w: WeaktypeArgs) -> Result<(), CliError> {
    let loaded = load(&w.set)?;
    if w.span <= 0 {
        return Err(CliError::Config("span must be positive".into()));
    }
    let seed = w.seed.or(loaded.seed).unwrap_or(0);
    let ts = enumerate_set(&loaded.spec, w.horizon)?;
    let reports = weaktype_trials(&ts, w.trials, w.deltas, w.span, seed)?;
    let mut t = Table::new(&["trial", "statistic", "l1_norm"]);
    for (i, r) in reports.iter().enumerate() {
        t.push(vec![i.to_string(), num(r.statistic), num(r.f_l1)]);
    }
    write_table(w.out.as_deref(), &t)?;
    let worst = reports.iter().map(|r| r.statistic).fold(0.0, f64::max);
    eprintln!("largest weak-type statistic over {} trials: {worst:.4}", reports.len());
    match w.max {
        Some(m) if worst > m => Err(CliError::Assertion(format!("weak-type statistic {worst} exceeds {m}"))),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
