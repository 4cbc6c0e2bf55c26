//! Command-line front end. Tables go to standard output, JSON with
//! `--json`, Graphviz with `--dot`; `--out` redirects either to a file.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::cover::{build_cover_with, CoverError, GluingRule};
use crate::invariants::{classify_surface, euler_char, SurfaceReport};
use crate::numeric::{Sampling, DEFAULT_T};
use crate::orientation::{analyse_all, WallReport};
use crate::real::{enumerate_sigma_invariant_trees, sigma_normal, LabelInvolution};
use crate::strata::{build_poset, StratifiedComplex};
use crate::sw::{is_orientable, is_orientable_from_reports, w1_cycle, w1_cycle_from_reports};
use crate::tree::{describe, to_dot};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_INCONSISTENT: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "rms", version, about = "Strata, w1 cycles and orientation double covers of real moduli spaces of pointed rational curves")]
pub struct Cli {
    /// Worker threads for parallel enumerations.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List the invariant stable trees.
    Enumerate(Common),
    /// The stratification poset.
    Poset(Common),
    /// Walls on the first Stiefel-Whitney cycle.
    W1(WithSigns),
    /// The orientation double cover.
    Cover(WithSigns),
    /// Euler characteristic, orientability and surface type.
    Invariants {
        #[command(flatten)]
        common: Common,
        /// Also report the double cover.
        #[arg(long)]
        cover: bool,
    },
    /// Orientation signs on every wall, optionally against the numeric oracle.
    VerifySigns(WithSigns),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Number of conjugate label pairs.
    #[arg(long)]
    pub k: Option<u32>,
    /// Number of real labels.
    #[arg(long)]
    pub l: Option<u32>,
    /// Total number of labels (with `--sigma id`).
    #[arg(long)]
    pub n: Option<u32>,
    /// Label involution; only `id` is accepted.
    #[arg(long)]
    pub sigma: Option<String>,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub dot: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct WithSigns {
    #[command(flatten)]
    pub common: Common,
    /// Decide walls with the Jacobian sign oracle.
    #[arg(long)]
    pub numeric: bool,
    #[arg(long, default_value_t = DEFAULT_T)]
    pub t: f64,
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
}

impl WithSigns {
    fn sampling(&self) -> Option<Sampling> {
        self.numeric.then(|| Sampling { seeds: self.seeds, base_seed: base_seed(), t: self.t })
    }
}

/// Seed offset from `RMS_SEED`, default 0.
pub fn base_seed() -> u64 {
    std::env::var("RMS_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(0)
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn fail(code: i32, message: impl ToString) -> Failure {
    Failure { code, message: message.to_string() }
}

impl Common {
    fn sigma(&self) -> Result<LabelInvolution, Failure> {
        let (k, l) = match (self.k, self.l, self.n, self.sigma.as_deref()) {
            (Some(k), Some(l), None, None) => (k, l),
            (None, None, Some(n), Some("id")) => (0, n),
            (None, None, Some(_), Some(other)) => return Err(fail(EXIT_USAGE, format!("unsupported --sigma {other}; use id"))),
            _ => return Err(fail(EXIT_USAGE, "give --k and --l, or --n with --sigma id")),
        };
        sigma_normal(k, l).map_err(|e| fail(EXIT_VALIDATION, e))
    }
}

struct Output {
    text: String,
}

impl Output {
    fn new() -> Output {
        Output { text: String::new() }
    }
    fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }
    fn json(&mut self, v: &serde_json::Value) {
        self.line(serde_json::to_string_pretty(v).expect("json"));
    }
    fn emit(self, common: &Common) -> Result<(), Failure> {
        match &common.out {
            Some(p) => std::fs::write(p, self.text).map_err(|e| fail(EXIT_VALIDATION, format!("{}: {e}", p.display()))),
            None => std::io::stdout().write_all(self.text.as_bytes()).map_err(|e| fail(EXIT_VALIDATION, e)),
        }
    }
}

fn reports(cx: &StratifiedComplex, sampling: Option<&Sampling>) -> Result<std::collections::BTreeMap<usize, WallReport>, Failure> {
    analyse_all(cx, sampling).map_err(|e| fail(EXIT_INCONSISTENT, e))
}

fn cover_failure(e: CoverError) -> Failure {
    fail(EXIT_INCONSISTENT, e)
}

fn enumerate(c: &Common) -> Result<Output, Failure> {
    let sigma = c.sigma()?;
    let trees = enumerate_sigma_invariant_trees(&sigma);
    let mut out = Output::new();
    if c.json {
        let list: Vec<_> = trees
            .iter()
            .map(|(t, i)| {
                json!({
                    "tree": describe(t),
                    "vertices": t.num_vertices(),
                    "real_vertices": i.real_vertices,
                    "structure": t.to_json(),
                })
            })
            .collect();
        out.json(&json!({ "k": sigma.k, "l": sigma.l, "count": trees.len(), "trees": list }));
    } else if c.dot {
        for (t, _) in &trees {
            out.line(to_dot(t).trim_end());
        }
    } else {
        out.line(format!("{} invariant trees for k = {}, l = {}", trees.len(), sigma.k, sigma.l));
        for (t, i) in &trees {
            out.line(format!("  {:<40} real vertices {}", describe(t), i.real_vertices.len()));
        }
    }
    Ok(out)
}

fn poset(c: &Common) -> Result<Output, Failure> {
    let cx = build_poset(&c.sigma()?);
    let mut out = Output::new();
    if c.json {
        out.json(&cx.to_json());
    } else if c.dot {
        out.line(cx.to_dot().trim_end());
    } else {
        out.line(format!("{} strata, {} elementary adjacencies", cx.strata.len(), cx.adjacency.len()));
        for (d, count) in cx.count_by_dim().iter().enumerate() {
            out.line(format!("  dim {d}: {count}"));
        }
    }
    Ok(out)
}

fn w1(a: &WithSigns) -> Result<Output, Failure> {
    let cx = build_poset(&a.common.sigma()?);
    let cycle = match a.sampling() {
        Some(s) => w1_cycle_from_reports(&cx, &reports(&cx, Some(&s))?),
        None => w1_cycle(&cx),
    };
    let mut out = Output::new();
    if a.common.json {
        out.json(&serde_json::to_value(&cycle).expect("json"));
    } else {
        out.line(format!("{} walls on {} trees", cycle.strata.len(), cycle.tree_names.len()));
        for t in &cycle.tree_names {
            out.line(format!("  {t}"));
        }
    }
    Ok(out)
}

fn cover(a: &WithSigns) -> Result<Output, Failure> {
    let sigma = a.common.sigma()?;
    let cx = build_poset(&sigma);
    let measured = match a.sampling() {
        Some(s) => Some(reports(&cx, Some(&s))?),
        None => None,
    };
    let rule = measured.as_ref().map_or(GluingRule::Relations, GluingRule::Measured);
    let cov = build_cover_with(&cx, rule).map_err(cover_failure)?;
    let chi = cov.euler_char(&cx).map_err(cover_failure)?;
    let mut out = Output::new();
    if a.common.json {
        let mut v = cov.to_json();
        v["chi"] = json!(chi);
        out.json(&v);
    } else {
        out.line(format!("{} top cells, {} faces, {} gluings", cov.cells.len(), cov.faces.len(), cov.gluings.len()));
        out.line(format!("components: {}", cov.connected_components()));
        out.line(format!("strata by dimension: {:?}", cov.count_by_dim()));
        out.line(format!("chi: {chi}"));
        for (r, n) in cov.relation_counts() {
            out.line(format!("  relation {r:?}: {n}"));
        }
    }
    Ok(out)
}

fn invariants(c: &Common, with_cover: bool) -> Result<Output, Failure> {
    let sigma = c.sigma()?;
    let cx = build_poset(&sigma);
    let chi = euler_char(&cx).map_err(|e| fail(EXIT_INCONSISTENT, e))?;
    let surface = classify_surface(&sigma, &cx).ok();
    let cover_report = if with_cover {
        let cov = build_cover_with(&cx, GluingRule::Relations).map_err(cover_failure)?;
        let cchi = cov.euler_char(&cx).map_err(cover_failure)?;
        let comps = cov.connected_components();
        let surf = (sigma.n() == 5 && comps == 1).then(|| SurfaceReport::new(true, cchi));
        Some((cchi, comps, surf))
    } else {
        None
    };
    let mut out = Output::new();
    if c.json {
        let mut v = json!({ "k": sigma.k, "l": sigma.l, "chi": chi, "orientable": is_orientable(&sigma), "surface": surface });
        if let Some((cchi, comps, surf)) = &cover_report {
            v["cover"] = json!({ "chi": cchi, "components": comps, "surface": surf });
        }
        out.json(&v);
    } else {
        out.line(format!("chi: {chi}"));
        out.line(format!("orientable: {}", is_orientable(&sigma)));
        if let Some(s) = &surface {
            match (s.genus, s.crosscaps) {
                (Some(g), _) => out.line(format!("surface: orientable, genus {g}")),
                (_, Some(c)) => out.line(format!("surface: non-orientable, {c} cross-caps")),
                _ => {}
            }
        }
        if let Some((cchi, comps, surf)) = &cover_report {
            out.line(format!("cover chi: {cchi}"));
            out.line(format!("cover components: {comps}"));
            if let Some(g) = surf.as_ref().and_then(|s| s.genus) {
                out.line(format!("cover genus: {g}"));
            }
        }
    }
    Ok(out)
}

/// Disagreement counts over a set of wall reports.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct SignSummary {
    pub walls: usize,
    pub closed_vs_componentwise: usize,
    pub closed_vs_numeric: usize,
    pub table_vs_numeric: usize,
    pub reversal_vs_numeric: usize,
}

impl SignSummary {
    pub fn of<'a>(reports: impl IntoIterator<Item = &'a WallReport>) -> SignSummary {
        let mut s = SignSummary::default();
        for r in reports {
            s.walls += 1;
            s.closed_vs_componentwise += usize::from(r.mismatch_closed != r.mismatch_componentwise);
            if let Some(n) = r.mismatch_numeric {
                s.closed_vs_numeric += usize::from(r.mismatch_closed != n);
            }
            s.table_vs_numeric += r.sides.iter().filter(|x| x.boundary_numeric.is_some_and(|n| n != x.boundary_table)).count();
            if let Some(m) = r.reversal_numeric {
                s.reversal_vs_numeric += usize::from(m != r.reversal_formula);
            }
        }
        s
    }
    pub fn clean(&self) -> bool {
        self.closed_vs_componentwise + self.closed_vs_numeric + self.table_vs_numeric + self.reversal_vs_numeric == 0
    }
}

fn verify_signs(a: &WithSigns) -> Result<Output, Failure> {
    let sigma = a.common.sigma()?;
    let cx = build_poset(&sigma);
    let reps = reports(&cx, a.sampling().as_ref())?;
    let summary = SignSummary::of(reps.values());
    let orientable = is_orientable_from_reports(&reps);
    let mut out = Output::new();
    if a.common.json {
        out.json(&json!({ "summary": summary, "orientable": orientable, "walls": reps.values().collect::<Vec<_>>() }));
    } else {
        out.line(format!("walls: {}", summary.walls));
        out.line(format!("closed form vs componentwise: {} disagreements", summary.closed_vs_componentwise));
        if a.numeric {
            out.line(format!("closed form vs oracle: {} disagreements", summary.closed_vs_numeric));
            out.line(format!("sign table vs oracle: {} disagreements", summary.table_vs_numeric));
            out.line(format!("reversal sign vs oracle: {} disagreements", summary.reversal_vs_numeric));
        }
        out.line(format!("orientable from wall signs: {orientable}"));
    }
    if summary.clean() {
        Ok(out)
    } else {
        // still print the report before signalling
        out.emit(&a.common)?;
        Err(fail(EXIT_INCONSISTENT, "orientation signs disagree"))
    }
}

fn dispatch(cli: &Cli) -> Result<(Output, &Common), Failure> {
    Ok(match &cli.command {
        Command::Enumerate(c) => (enumerate(c)?, c),
        Command::Poset(c) => (poset(c)?, c),
        Command::W1(a) => (w1(a)?, &a.common),
        Command::Cover(a) => (cover(a)?, &a.common),
        Command::Invariants { common, cover } => (invariants(common, *cover)?, common),
        Command::VerifySigns(a) => (verify_signs(a)?, &a.common),
    })
}

/// Runs the command line and returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Some(n) = cli.threads {
        // a second call in one process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match dispatch(&cli).and_then(|(out, common)| out.emit(common)) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("rms: {}", f.message);
            f.code
        }
    }
}
