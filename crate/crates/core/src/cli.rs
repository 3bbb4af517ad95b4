//! Command-line front end.
//!
//! Every subcommand writes one CSV table, preceded by `#` comment lines that
//! record the program version and the resolved configuration in sorted key
//! order. Without `--out-dir` the table goes to stdout; with it the table is
//! written to `<out-dir>/<subcommand>.csv`.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::constants::{
    beta_curve, compute_beta, compute_fm_constant, first_order_constant, BetaPoint, BetaRoute,
    ConstantsConfig, ConstantsReport,
};
use crate::energy::EnergyBreakdown;
use crate::error::{Error, Result};
use crate::experiments::{
    convergence_study, infer_step_limit, minimize_G, offwell_measure, BoundaryRule, ConvergenceRecord,
    ExperimentSpec, LimitData, StudyRow,
};
use crate::glue::{random_specs, ratio_range, GlueReport, GlueSpec};
use crate::inequalities::{
    cosine_reference, inter1_sweep, inter2_sweep, inter3_check, refinement_change, sup_ratio, RatioSample,
    SweepConfig,
};
use crate::optimize::OptimizerConfig;
use crate::profile::HermiteProfile;

#[derive(Debug, Parser)]
#[command(name = "phasefield", version, about = "Wall energies and Gamma-limit checks for the second-order phase-transition functional")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Seed for multistart perturbations and random ensembles.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid resolution; the meaning depends on the subcommand (see its help).
    #[arg(long, global = true)]
    cells: Option<usize>,
    /// Directory for the CSV output instead of stdout.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Also write the minimizing profiles as `x,u,du` CSV files.
    #[arg(long, global = true)]
    dump_profile: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Route {
    Phi,
    Psi,
    Both,
}

impl From<Route> for BetaRoute {
    fn from(r: Route) -> Self {
        match r {
            Route::Phi => BetaRoute::Phi,
            Route::Psi => BetaRoute::Psi,
            Route::Both => BetaRoute::Both,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// α, c and the first-order constant. --cells: cells on the unit interval (default 512).
    ComputeAlpha {
        /// Cells per unit length for the whole-line problem.
        #[arg(long, default_value_t = 512)]
        cells_per_unit: usize,
        #[arg(long, default_value_t = 12.0)]
        l_max: f64,
        /// Cells for the first-order problem on [-L, L].
        #[arg(long, default_value_t = 1000)]
        first_order_cells: usize,
    },
    /// β(t) by one or both routes. --cells: cells on the unit interval (default 512).
    ComputeBeta {
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, value_enum, default_value = "both")]
        route: Route,
        /// Cells per unit length on the half line.
        #[arg(long, default_value_t = 64)]
        cells_per_unit: usize,
        #[arg(long, default_value_t = 12.0)]
        l_max: f64,
    },
    /// β on a uniform grid of t. --cells: cells on the unit interval (default 512).
    BetaCurve {
        #[arg(long, allow_negative_numbers = true)]
        t_min: f64,
        #[arg(long, allow_negative_numbers = true)]
        t_max: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, value_enum, default_value = "both")]
        route: Route,
        /// Solve every point independently (in parallel).
        #[arg(long)]
        no_warm_start: bool,
        #[arg(long, default_value_t = 64)]
        cells_per_unit: usize,
        #[arg(long, default_value_t = 12.0)]
        l_max: f64,
    },
    /// Whole-line transition energy c. --cells: cells per unit length (default 512).
    FmConstant {
        #[arg(long, default_value_t = 12.0)]
        l_max: f64,
    },
    /// First-order constant 8/3 on [-L, L]. --cells: total cells (default 1000).
    FirstOrder {
        #[arg(long, default_value_t = 10.0)]
        l_max: f64,
    },
    /// Connector sweep over random specs. --cells: Hermite nodes per connector (default 256).
    GlueTest {
        #[arg(long, default_value_t = 50)]
        count: usize,
    },
    /// Interpolation inequality sweeps. --cells: cells on (0, 1) (default 256).
    CheckInequalities {
        #[arg(long, default_value_t = 200)]
        profiles: usize,
    },
    /// Minimize F_ε on (a, b) with pinned endpoint values. --cells: cells per ε (default 64).
    Minimize {
        #[arg(long)]
        eps: f64,
        #[arg(long, allow_negative_numbers = true)]
        a_eps: f64,
        #[arg(long, allow_negative_numbers = true)]
        b_eps: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        a: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
        b: f64,
    },
    /// Run a convergence study described by a key = value file. --cells overrides cells_per_layer.
    ConvergenceStudy {
        #[arg(long)]
        config: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::ComputeAlpha { .. } => "compute-alpha",
            Command::ComputeBeta { .. } => "compute-beta",
            Command::BetaCurve { .. } => "beta-curve",
            Command::FmConstant { .. } => "fm-constant",
            Command::FirstOrder { .. } => "first-order",
            Command::GlueTest { .. } => "glue-test",
            Command::CheckInequalities { .. } => "check-inequalities",
            Command::Minimize { .. } => "minimize",
            Command::ConvergenceStudy { .. } => "convergence-study",
        }
    }
}

const DEFAULT_SEED: u64 = 42;

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit code: 0 on success, 2 on argument errors, 1 on numerical failures.
pub fn run(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_argument_error() {
                2
            } else {
                1
            }
        }
    }
}

/// Header lines and table rows of one run.
struct Table {
    command: &'static str,
    config: BTreeMap<String, String>,
    notes: Vec<String>,
    header: String,
    rows: Vec<String>,
}

impl Table {
    fn new(command: &'static str, header: &str) -> Self {
        Table {
            command,
            config: BTreeMap::new(),
            notes: Vec::new(),
            header: header.to_string(),
            rows: Vec::new(),
        }
    }

    fn set(&mut self, key: &str, value: impl Display) {
        self.config.insert(key.to_string(), value.to_string());
    }

    fn note(&mut self, key: &str, value: impl Display) {
        self.notes.push(format!("{key} = {value}"));
    }

    fn write_to(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "# phasefield {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(out, "# command = {}", self.command)?;
        for (k, v) in &self.config {
            writeln!(out, "# {k} = {v}")?;
        }
        for n in &self.notes {
            writeln!(out, "# {n}")?;
        }
        writeln!(out, "{}", self.header)?;
        for r in &self.rows {
            writeln!(out, "{r}")?;
        }
        Ok(())
    }
}

struct Output<'a> {
    common: &'a Common,
}

impl Output<'_> {
    fn dir(&self) -> &Path {
        self.common.out_dir.as_deref().unwrap_or(Path::new("."))
    }

    fn emit(&self, table: &Table) -> Result<()> {
        match &self.common.out_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let path = dir.join(format!("{}.csv", table.command));
                let file = std::io::BufWriter::new(std::fs::File::create(&path)?);
                table.write_to(file)?;
            }
            None => table.write_to(std::io::stdout().lock())?,
        }
        Ok(())
    }

    fn dump(&self, name: &str, p: &HermiteProfile) -> Result<()> {
        if !self.common.dump_profile {
            return Ok(());
        }
        std::fs::create_dir_all(self.dir())?;
        let file = std::fs::File::create(self.dir().join(format!("{name}.csv")))?;
        p.write_csv(std::io::BufWriter::new(file))?;
        Ok(())
    }
}

fn optimizer(seed: u64) -> OptimizerConfig {
    OptimizerConfig {
        rng_seed: seed,
        ..OptimizerConfig::default()
    }
}

fn constants_config(cells: usize, cells_per_unit: usize, l_max: f64, seed: u64) -> ConstantsConfig {
    ConstantsConfig {
        unit_cells: cells,
        cells_per_unit,
        l_max,
        opt: optimizer(seed),
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let c = &cli.common;
    let seed = c.seed.unwrap_or(DEFAULT_SEED);
    let out = Output { common: c };
    let name = cli.command.name();
    let mut table = match &cli.command {
        Command::ComputeAlpha { cells_per_unit, l_max, first_order_cells } => {
            let cfg = constants_config(c.cells.unwrap_or(512), *cells_per_unit, *l_max, seed);
            let report = ConstantsReport::compute(&cfg, *first_order_cells)?;
            let mut t = Table::new(name, ConstantsReport::CSV_HEADER);
            t.set("cells", cfg.unit_cells);
            t.set("cells_per_unit", cfg.cells_per_unit);
            t.set("first_order_cells", first_order_cells);
            t.set("l_max", cfg.l_max);
            t.set("seed", seed);
            let two_alpha = 2.0 * report.alpha.value;
            t.note("c_fm_half_domain", report.c_fm.value_half);
            t.note("rel_diff_c_2alpha", format!("{:e}", (report.c_fm.value - two_alpha).abs() / report.c_fm.value));
            t.note("first_order_exact", 8.0 / 3.0);
            t.rows.push(report.csv_row());
            out.dump("alpha_profile", report.alpha.minimizer())?;
            out.dump("fm_profile", &report.c_fm.result.profile)?;
            t
        }
        Command::ComputeBeta { t: tv, route, cells_per_unit, l_max } => {
            let cfg = constants_config(c.cells.unwrap_or(512), *cells_per_unit, *l_max, seed);
            let p = compute_beta(*tv, (*route).into(), &cfg)?;
            let mut t = beta_table(name, &cfg, *route, seed);
            if let Some(gap) = p.route_gap() {
                t.note("route_gap", format!("{gap:e}"));
            }
            t.rows.push(p.csv_row());
            dump_beta(&out, "beta", &p)?;
            t
        }
        Command::BetaCurve { t_min, t_max, steps, route, no_warm_start, cells_per_unit, l_max } => {
            let cfg = constants_config(c.cells.unwrap_or(512), *cells_per_unit, *l_max, seed);
            let rows = beta_curve(*t_min, *t_max, *steps, (*route).into(), &cfg, !no_warm_start)?;
            let mut t = beta_table(name, &cfg, *route, seed);
            t.set("steps", steps);
            t.set("t_max", t_max);
            t.set("t_min", t_min);
            t.set("warm_start", !no_warm_start);
            for (i, r) in rows.iter().enumerate() {
                if let Err(e) = &r.point {
                    t.note(&format!("failed_t_{}", r.t), e);
                }
                t.rows.push(r.csv_row(cfg.l_max));
                if let Ok(p) = &r.point {
                    dump_beta(&out, &format!("beta_{i:03}"), p)?;
                }
            }
            if rows.iter().all(|r| r.point.is_err()) {
                out.emit(&t)?;
                return Err(Error::Numerical {
                    message: "every point of the beta curve failed".into(),
                    last: None,
                });
            }
            t
        }
        Command::FmConstant { l_max } => {
            let cpu = c.cells.unwrap_or(512);
            let cfg = constants_config(512, cpu, *l_max, seed);
            let fm = compute_fm_constant(&cfg)?;
            let mut t = Table::new(name, "L_max,cells_per_unit,c_fm,c_fm_half");
            t.set("cells", cpu);
            t.set("l_max", l_max);
            t.set("seed", seed);
            t.rows.push(format!("{},{},{},{}", l_max, cpu, fm.value, fm.value_half));
            out.dump("fm_profile", &fm.result.profile)?;
            t
        }
        Command::FirstOrder { l_max } => {
            let cells = c.cells.unwrap_or(1000);
            let f = first_order_constant(*l_max, cells, &optimizer(seed))?;
            let mut t = Table::new(name, "L_max,n_cells,value,exact,tanh_sup_error");
            t.set("cells", cells);
            t.set("l_max", l_max);
            t.set("seed", seed);
            t.rows.push(format!(
                "{},{},{},{},{:e}",
                l_max,
                cells,
                f.value,
                8.0 / 3.0,
                f.tanh_sup_error()
            ));
            out.dump("first_order_profile", &f.result.profile)?;
            t
        }
        Command::GlueTest { count } => {
            let samples = c.cells.unwrap_or(crate::glue::DEFAULT_SAMPLES);
            let specs: Vec<GlueSpec> = random_specs(*count, seed)
                .into_iter()
                .map(|s| GlueSpec { samples, ..s })
                .collect();
            let mut t = Table::new(name, GlueReport::CSV_HEADER);
            t.set("cells", samples);
            t.set("count", count);
            t.set("seed", seed);
            let reports = specs.iter().map(GlueReport::of).collect::<Result<Vec<_>>>()?;
            let worst = reports.iter().map(|r| r.endpoint_error()).fold(0.0, f64::max);
            let spread = |f: fn(&GlueReport) -> f64| {
                let (lo, hi) = reports
                    .iter()
                    .map(f)
                    .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
                hi / lo
            };
            t.note("max_endpoint_error", format!("{worst:e}"));
            t.note("ratio_k0_max_over_min", spread(|r| r.ratio_k0));
            t.note("ratio_k2_max_over_min", spread(|r| r.ratio_k2));
            for k in [0, 2] {
                let (lo, hi) = ratio_range(k, samples)?;
                t.note(&format!("ratio_k{k}_attainable_range"), format!("{lo:.6e}..{hi:.6e}"));
            }
            t.rows = reports.iter().map(GlueReport::csv_row).collect();
            t
        }
        Command::CheckInequalities { profiles } => {
            let cfg = SweepConfig {
                profiles: *profiles,
                n_cells: c.cells.unwrap_or(256),
                seed,
                ..SweepConfig::default()
            };
            let mut t = Table::new(name, RatioSample::CSV_HEADER);
            t.set("cells", cfg.n_cells);
            t.set("profiles", profiles);
            t.set("seed", seed);
            let cos = cosine_reference(512)?;
            let inter1 = inter1_sweep(&cfg)?;
            let inter2 = inter2_sweep(&cfg)?;
            let inter3 = inter3_rows(seed)?;
            t.note("inter1_sup", sup_ratio(&inter1));
            t.note("inter2_sup", sup_ratio(&inter2));
            t.note("inter3_sup", sup_ratio(&inter3));
            t.note("refinement_change", format!("{:e}", refinement_change(&cfg)?));
            t.rows = std::iter::once(&cos)
                .chain(&inter1)
                .chain(&inter2)
                .chain(&inter3)
                .map(RatioSample::csv_row)
                .collect();
            t
        }
        Command::Minimize { eps, a_eps, b_eps, a, b } => {
            let spec = ExperimentSpec {
                a: *a,
                b: *b,
                epsilons: vec![*eps],
                a_rule: BoundaryRule::Const(*a_eps),
                b_rule: BoundaryRule::Const(*b_eps),
                a0: *a_eps,
                b0: *b_eps,
                cells_per_layer: c.cells.unwrap_or(64),
                opt: optimizer(seed),
                ..ExperimentSpec::default()
            };
            spec.validate()?;
            // no ζ-layers are resolved here, so the grid follows ε alone
            let grid = spec.grid_for(*eps, f64::INFINITY)?;
            let r = minimize_G(*eps, &spec, grid, &[])?;
            let mut t = Table::new(name, EnergyBreakdown::CSV_HEADER);
            t.set("a", a);
            t.set("a_eps", a_eps);
            t.set("b", b);
            t.set("b_eps", b_eps);
            t.set("cells", spec.cells_per_layer);
            t.set("eps", eps);
            t.set("seed", seed);
            t.note("n_cells", grid.n_cells());
            t.note("iterations", r.iterations);
            t.note("converged", r.converged);
            t.note("stop", format!("{:?}", r.stop));
            t.note("offwell_measure", offwell_measure(&r.profile));
            t.note("sign_changes", infer_step_limit(&r.profile, 0.0).jumps.len());
            t.rows.push(EnergyBreakdown::of(&r.profile, Some(*eps))?.csv_row());
            out.dump("minimize_profile", &r.profile)?;
            t
        }
        Command::ConvergenceStudy { config } => {
            let text = std::fs::read_to_string(config)
                .map_err(|e| Error::arg(format!("cannot read {}: {e}", config.display())))?;
            let (mut spec, file_seed) = parse_study_config(&text)?;
            let seed = c.seed.or(file_seed).unwrap_or(DEFAULT_SEED);
            spec.opt.rng_seed = seed;
            spec.constants.opt.rng_seed = seed;
            if let Some(cells) = c.cells {
                spec.cells_per_layer = cells;
            }
            spec.validate()?;
            let limits = LimitData::compute(&spec.constants)?;
            let rows = convergence_study(&spec, &limits)?;
            let mut t = Table::new(name, ConvergenceRecord::CSV_HEADER);
            describe_spec(&mut t, &spec, seed);
            t.note("alpha", limits.alpha);
            study_notes(&mut t, &rows);
            for r in &rows {
                t.rows.push(r.csv_row());
                if let Ok(rec) = &r.outcome {
                    out.dump(&format!("direct_eps{}", r.eps), &rec.direct)?;
                    out.dump(&format!("recovery_eps{}", r.eps), &rec.recovery)?;
                }
            }
            t
        }
    };
    if table.config.is_empty() {
        table.set("seed", seed);
    }
    out.emit(&table)
}

fn beta_table(name: &'static str, cfg: &ConstantsConfig, route: Route, seed: u64) -> Table {
    let mut t = Table::new(name, BetaPoint::CSV_HEADER);
    t.set("cells", cfg.unit_cells);
    t.set("cells_per_unit", cfg.cells_per_unit);
    t.set("l_max", cfg.l_max);
    t.set("route", format!("{route:?}").to_lowercase());
    t.set("seed", seed);
    t
}

fn dump_beta(out: &Output, stem: &str, p: &BetaPoint) -> Result<()> {
    if let Some(q) = &p.phi_profile {
        out.dump(&format!("{stem}_phi"), q)?;
    }
    if let Some(q) = &p.psi_profile {
        out.dump(&format!("{stem}_psi"), q)?;
    }
    Ok(())
}

fn describe_spec(t: &mut Table, spec: &ExperimentSpec, seed: u64) {
    let eps: Vec<String> = spec.epsilons.iter().map(|e| e.to_string()).collect();
    t.set("a", spec.a);
    t.set("a0", spec.a0);
    t.set("a_eps", spec.a_rule);
    t.set("b", spec.b);
    t.set("b0", spec.b0);
    t.set("b_eps", spec.b_rule);
    t.set("cells_per_layer", spec.cells_per_layer);
    t.set("epsilons", eps.join(","));
    t.set("p", spec.p_norm);
    t.set("seed", seed);
}

/// Failures, the β-normalization verdict at the smallest ε and L^p distances.
fn study_notes(t: &mut Table, rows: &[StudyRow]) {
    for r in rows {
        match &r.outcome {
            Ok(rec) => t.note(
                &format!("eps_{}", r.eps),
                format!(
                    "start_sign={} jumps={:?} lp_recovery={:.6e} converged={}",
                    rec.inferred.start_sign, rec.inferred.jumps, rec.lp_recovery, rec.converged
                ),
            ),
            Err(e) => t.note(&format!("eps_{}", r.eps), format!("failed: {e}")),
        }
    }
    if let Some(Ok(last)) = rows.last().map(|r| &r.outcome) {
        t.note("normalization", last.normalization());
    }
}

/// inter3 ratios on direct minimizers and recovery profiles of the default
/// boundary-data study at ε = 0.2, 0.1, 0.05.
fn inter3_rows(seed: u64) -> Result<Vec<RatioSample>> {
    let mut spec = ExperimentSpec {
        epsilons: vec![0.2, 0.1, 0.05],
        ..ExperimentSpec::default()
    };
    spec.opt.rng_seed = seed;
    let limits = LimitData::compute(&spec.constants)?;
    let rows = convergence_study(&spec, &limits)?;
    let margin = 0.1 * (spec.b - spec.a);
    let mut out = Vec::new();
    for r in rows {
        let rec = r.outcome?;
        for (kind, p) in [("direct", rec.direct), ("recovery", rec.recovery)] {
            let mut s = inter3_check(&[(p, rec.eps)], margin)?;
            s[0].name = format!("inter3_{kind}_eps{}", rec.eps);
            out.append(&mut s);
        }
    }
    Ok(out)
}

/// Parses the flat `key = value` study description.
///
/// Keys: `epsilons` (comma list), `a0`, `b0`, `a_eps` and `b_eps`
/// (`const:<v>` or `approach:<v0>,<rate>`), `cells_per_layer`, `seed`, and
/// optionally `a`, `b` (domain) and `p`. Missing boundary rules default to
/// the constant limit value; a missing limit is read off the rule.
pub fn parse_study_config(text: &str) -> Result<(ExperimentSpec, Option<u64>)> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::arg(format!("line {}: expected key = value", n + 1)))?;
        let k = k.trim().to_string();
        if map.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(Error::arg(format!("line {}: duplicate key {k}", n + 1)));
        }
    }
    let num = |k: &str, v: &str| {
        v.parse::<f64>()
            .map_err(|_| Error::arg(format!("{k}: not a number: {v}")))
    };
    let mut spec = ExperimentSpec::default();
    let mut seed = None;
    let (mut a0, mut b0, mut a_rule, mut b_rule) = (None, None, None, None);
    for (k, v) in &map {
        match k.as_str() {
            "epsilons" => {
                spec.epsilons = v
                    .split(',')
                    .map(|e| num(k, e.trim()))
                    .collect::<Result<Vec<_>>>()?;
            }
            "a0" => a0 = Some(num(k, v)?),
            "b0" => b0 = Some(num(k, v)?),
            "a_eps" => a_rule = Some(v.parse::<BoundaryRule>()?),
            "b_eps" => b_rule = Some(v.parse::<BoundaryRule>()?),
            "cells_per_layer" => {
                spec.cells_per_layer = v
                    .parse()
                    .map_err(|_| Error::arg(format!("cells_per_layer: not a count: {v}")))?;
            }
            "seed" => {
                seed = Some(v.parse().map_err(|_| Error::arg(format!("seed: not an integer: {v}")))?);
            }
            "a" => spec.a = num(k, v)?,
            "b" => spec.b = num(k, v)?,
            "p" => spec.p_norm = num(k, v)?,
            other => return Err(Error::arg(format!("unknown config key '{other}'"))),
        }
    }
    let resolve = |limit: Option<f64>, rule: Option<BoundaryRule>, default: BoundaryRule| match (limit, rule) {
        (Some(l), Some(r)) => (l, r),
        (Some(l), None) => (l, BoundaryRule::Const(l)),
        (None, Some(r)) => (r.limit(), r),
        (None, None) => (default.limit(), default),
    };
    (spec.a0, spec.a_rule) = resolve(a0, a_rule, spec.a_rule);
    (spec.b0, spec.b_rule) = resolve(b0, b_rule, spec.b_rule);
    spec.validate()?;
    Ok((spec, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(args: &[&str]) -> Vec<String> {
        std::iter::once("phasefield").chain(args.iter().copied()).map(String::from).collect()
    }

    #[test]
    fn unknown_subcommand_and_flag_exit_2() {
        assert_eq!(run(argv(&["frobnicate"])), 2);
        assert_eq!(run(argv(&["glue-test", "--bogus"])), 2);
        assert_eq!(run(argv(&[])), 2);
    }

    #[test]
    fn help_exits_0() {
        assert_eq!(run(argv(&["--help"])), 0);
    }

    #[test]
    fn argument_errors_exit_2() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().to_str().unwrap();
        assert_eq!(run(argv(&["first-order", "--l-max", "-1", "--out-dir", d])), 2);
        assert_eq!(run(argv(&["minimize", "--eps", "0", "--a-eps", "-1", "--b-eps", "1", "--out-dir", d])), 2);
    }

    #[test]
    fn config_parsing() {
        let text = "# study\nepsilons = 0.2, 0.1\na_eps = approach:-1,0.5\nb0 = 0\ncells_per_layer = 16\nseed = 7\n";
        let (spec, seed) = parse_study_config(text).unwrap();
        assert_eq!(spec.epsilons, vec![0.2, 0.1]);
        assert_eq!(spec.a0, -1.0);
        assert_eq!(spec.a_rule.at(0.2), -0.9);
        assert_eq!(spec.b_rule, BoundaryRule::Const(0.0));
        assert_eq!(spec.cells_per_layer, 16);
        assert_eq!(seed, Some(7));
        assert!(parse_study_config("colour = red").unwrap_err().is_argument_error());
        assert!(parse_study_config("a0 = 1\na_eps = const:-1").is_err());
        assert!(parse_study_config("epsilons = 0.1, 0.2").is_err());
        assert!(parse_study_config("seed = 1\nseed = 2").is_err());
    }

    #[test]
    fn glue_test_writes_headed_csv() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().to_str().unwrap();
        assert_eq!(run(argv(&["glue-test", "--count", "5", "--out-dir", d])), 0);
        let text = std::fs::read_to_string(dir.path().join("glue-test.csv")).unwrap();
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body[0], GlueReport::CSV_HEADER);
        assert_eq!(body.len(), 6);
        assert!(text.lines().any(|l| l == "# seed = 42"));
    }
}
