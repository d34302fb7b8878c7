//! The five subcommands. Each writes its tables into the output directory and
//! returns the gates it evaluated; the caller turns a failed gate into exit 3.

use std::path::{Path, PathBuf};

use affine_husimi::affine::{inner_half, quantize_kernel, symbol_of};
use affine_husimi::evolution::{conventions_ledger, energy, evolution_with, propagate, EvolutionReport, PropagationPlan, ProbeReport, Variant, VerifySettings};
use affine_husimi::families::{wide_symbol_grids, StateSpec};
use affine_husimi::mellin::{symbol_mellin, CriticalLineGrid};
use affine_husimi::phase::{coherent_values, husimi_from_mellin, husimi_operator, husimi_pure, husimi_pure_mass, identity_resolution, wigner_window_integral, affine_wigner};
use affine_husimi::{inner_product, AffineSymbol, HalfLineFunction, HusimiField, LogGrid, MellinKernel, PhaseGrid, PhasePoint, UniformGrid};

use crate::config::RunConfig;
use crate::output::Table;
use crate::CliError;

pub const PROBE_A: [f64; 5] = [0.6, 0.8, 1.0, 1.3, 1.7];
pub const PROBE_B: [f64; 5] = [-0.8, -0.3, 0.2, 0.7, 1.2];

/// First `k` points of the 5×5 probe lattice, a-major.
pub fn probe_lattice(k: usize) -> Result<Vec<PhasePoint>, CliError> {
    if !(1..=25).contains(&k) {
        return Err(CliError::Config(format!("--probes must be in 1..=25, got {k}")));
    }
    Ok(PROBE_A.iter().flat_map(|&a| PROBE_B.iter().map(move |&b| PhasePoint { a, b })).take(k).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub name: String,
    pub value: f64,
    pub tol: f64,
}

impl Gate {
    fn new(name: &str, value: f64, tol: f64) -> Self {
        Self { name: name.to_string(), value, tol }
    }
    pub fn pass(&self) -> bool {
        self.value <= self.tol
    }
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub gates: Vec<Gate>,
}

impl Outcome {
    pub fn failed(&self) -> Vec<&Gate> {
        self.gates.iter().filter(|g| !g.pass()).collect()
    }

    pub fn gate(&self, name: &str) -> Option<&Gate> {
        self.gates.iter().find(|g| g.name == name)
    }

    fn emit(&mut self, dir: &Path, name: &str, t: &Table) -> Result<(), CliError> {
        let path = dir.join(name);
        t.write(&path)?;
        self.files.push(path);
        Ok(())
    }

    fn emit_summary(&mut self, dir: &Path, cmd: &str, cfg: &RunConfig) -> Result<(), CliError> {
        let mut t = table(cmd, cfg, &["index", "value", "tol", "pass"]);
        for (i, g) in self.gates.iter().enumerate() {
            t.header(format!("gate {i}: {}", g.name));
        }
        for (i, g) in self.gates.iter().enumerate() {
            t.push(vec![i as f64, g.value, g.tol, if g.pass() { 1.0 } else { 0.0 }]);
        }
        self.emit(dir, &format!("{cmd}_summary.tsv"), &t)
    }
}

fn table(cmd: &str, cfg: &RunConfig, columns: &[&str]) -> Table {
    let mut t = Table::new(columns);
    t.header(format!("command={cmd}"));
    for line in cfg.echo() {
        t.header(format!("config {line}"));
    }
    t.header(format!("grid x: log [{:e}, {:e}] n={}", cfg.x_min, cfg.x_max, cfg.n));
    t.header(format!("grid a: log [{:e}, {:e}] n={}", cfg.a_min, cfg.a_max, cfg.n_a));
    t.header(format!("grid b: uniform [{:e}, {:e}] n={}", cfg.b_min, cfg.b_max, cfg.n_b));
    for (k, v) in conventions_ledger(cfg.hbar) {
        t.header(format!("convention {k}: {v}"));
    }
    t
}

fn field_table(cmd: &str, cfg: &RunConfig, fields: &[(&str, &HusimiField)]) -> Table {
    let mut cols = vec!["a", "b"];
    cols.extend(fields.iter().map(|(n, _)| *n));
    let mut t = table(cmd, cfg, &cols);
    let f0 = fields[0].1;
    for k in 0..f0.n_a() {
        for l in 0..f0.n_b() {
            let mut row = vec![f0.a_grid.points()[k], f0.b_grid.point(l)];
            row.extend(fields.iter().map(|(_, f)| f.at(k, l)));
            t.push(row);
        }
    }
    t
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::Internal(format!("create {}: {e}", cfg.out_dir.display())))?;
    Ok(cfg.out_dir.clone())
}

fn state(cfg: &RunConfig, grid: &LogGrid) -> Result<HalfLineFunction, CliError> {
    Ok(cfg.state.build(grid, cfg.hbar)?)
}

fn symbol(cfg: &RunConfig) -> Result<AffineSymbol, CliError> {
    let (ag, bg) = wide_symbol_grids();
    Ok(cfg.symbol.sample(&ag, &bg)?)
}

fn contour(cfg: &RunConfig) -> Result<CriticalLineGrid, CliError> {
    CriticalLineGrid::new(cfg.tau_max, cfg.m).map_err(|e| CliError::Config(format!("contour: {e}")))
}

fn omega() -> UniformGrid {
    UniformGrid::symmetric(14.0, 113).expect("valid constants")
}

/// Direct and Mellin-route Husimi fields of the configured symbol's operator
/// and their inner-half sup-relative difference.
fn two_path(cfg: &RunConfig, targets: &PhaseGrid) -> Result<(HusimiField, HusimiField, f64), CliError> {
    let sym = symbol(cfg)?;
    let op = quantize_kernel(&sym, &cfg.grid()?, cfg.hbar)?;
    let direct = husimi_operator(&op, targets, cfg.hbar);
    let spec = symbol_mellin(&sym, &contour(cfg)?, &omega())?;
    let via = husimi_from_mellin(&spec, targets, cfg.hbar)?;
    let (ka, lb) = inner_half(targets.a_grid.len(), targets.b_grid.n);
    let diff = via.sup_rel_diff(&direct, ka, lb)?;
    Ok((direct, via, diff))
}

pub fn cmd_husimi(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let dir = out_dir(cfg)?;
    let hb = cfg.hbar;
    let grid = cfg.grid()?;
    let targets = cfg.targets()?;
    let psi = state(cfg, &grid)?;
    let mut out = Outcome::default();

    let field = husimi_pure(&psi, &targets, hb);
    let mut t = field_table("husimi", cfg, &[("value", &field)]);
    let (kmax, _) = field.values.iter().enumerate().fold((0, f64::NEG_INFINITY), |m, (i, &v)| if v > m.1 { (i, v) } else { m });
    let (ka, lb) = (kmax / field.n_b(), kmax % field.n_b());
    t.header(format!("grid_peak a={:e} b={:e} value={:e}", field.a_grid.points()[ka], field.b_grid.point(lb), field.max()));
    if let StateSpec::Coherent { a, b } = cfg.state {
        let p = PhasePoint::new(a, b)?;
        let peak = inner_product(&coherent_values(p, hb, &grid), &psi)?.norm_sqr() / hb.value();
        t.header(format!("coherent_peak a={a:e} b={b:e} value={peak:e} expected={:e}", 1.0 / hb.value()));
        out.gates.push(Gate::new("coherent peak height relative to 1/hbar", (peak * hb.value() - 1.0).abs(), 1e-2));
    }
    out.emit(&dir, "husimi_state.tsv", &t)?;

    let (direct, via, diff) = two_path(cfg, &targets)?;
    let d = HusimiField { values: via.values.iter().zip(&direct.values).map(|(x, y)| x - y).collect(), ..direct.clone() };
    let t = field_table("husimi", cfg, &[("direct", &direct), ("mellin", &via), ("diff", &d)]);
    out.emit(&dir, "husimi_operator.tsv", &t)?;
    out.gates.push(Gate::new("operator two-path sup relative difference (inner half)", diff, 1e-3));

    let mass = husimi_pure_mass(&psi, &cfg.identity_window(), hb);
    out.gates.push(Gate::new("state Husimi window mass defect", (mass.derived - 1.0).abs(), 1e-2));
    out.emit_summary(&dir, "husimi", cfg)?;
    Ok(out)
}

pub fn cmd_wigner(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let dir = out_dir(cfg)?;
    let hb = cfg.hbar;
    let grid = cfg.grid()?;
    let targets = cfg.targets()?;
    let psi = state(cfg, &grid)?;
    let mut out = Outcome::default();

    let w = affine_wigner(&psi, &targets, hb);
    let mut t = table("wigner", cfg, &["a", "b", "re", "im"]);
    for k in 0..w.n_a() {
        for l in 0..w.n_b() {
            let v = w.at(k, l);
            t.push(vec![w.a_grid.points()[k], w.b_grid.point(l), v.re, v.im]);
        }
    }
    out.emit(&dir, "wigner_field.tsv", &t)?;

    let m = wigner_window_integral(&psi, &cfg.identity_window(), hb);
    let pi = std::f64::consts::PI;
    let mut t = table("wigner", cfg, &["integral_re", "integral_im", "norm", "norm_sq", "pi_norm", "pi_norm_sq"]);
    t.header("integral = sum W da db / a^2 over the identity window");
    t.push(vec![m.integral.re, m.integral.im, m.norm, m.norm_sq, pi * m.norm, pi * m.norm_sq]);
    out.emit(&dir, "wigner_mass.tsv", &t)?;
    out.gates.push(Gate::new("window integral vs pi |psi|^2 (relative)", (m.integral - pi * m.norm_sq).norm() / (pi * m.norm_sq), 1e-3));
    out.emit_summary(&dir, "wigner", cfg)?;
    Ok(out)
}

pub fn cmd_quantize(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let dir = out_dir(cfg)?;
    let hb = cfg.hbar;
    let grid = cfg.grid()?;
    let targets = cfg.targets()?;
    let mut out = Outcome::default();

    let sym = symbol(cfg)?;
    let k = quantize_kernel(&sym, &grid, hb)?;
    let n = k.n();
    let stride = n.div_ceil(64);
    let mut t = table("quantize", cfg, &["i", "j", "x", "y", "re", "im"]);
    t.header(format!("stride={stride}"));
    let xs = grid.points();
    for i in (0..n).step_by(stride) {
        for j in (0..n).step_by(stride) {
            let v = k.at(i, j);
            t.push(vec![i as f64, j as f64, xs[i], xs[j], v.re, v.im]);
        }
    }
    out.emit(&dir, "quantize_kernel.tsv", &t)?;

    let back = symbol_of(&k, &targets.a_grid, &targets.b_grid, hb);
    let want = AffineSymbol::from_fn(&targets.a_grid, &targets.b_grid, |a, b| affine_husimi::C64::new(cfg.symbol.eval(a, b), 0.0));
    let scale = want.values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut t = table("quantize", cfg, &["a", "b", "symbol", "back_re", "back_im", "rel_err"]);
    t.header("rel_err = |back - symbol| / max |symbol| over the window");
    for ka in 0..back.n_a() {
        for lb in 0..back.n_b() {
            let (g, w) = (back.at(ka, lb), want.at(ka, lb));
            t.push(vec![targets.a_grid.points()[ka], targets.b_grid.point(lb), w.re, g.re, g.im, (g - w).norm() / scale]);
        }
    }
    out.emit(&dir, "quantize_roundtrip.tsv", &t)?;
    let (ka, lb) = inner_half(back.n_a(), back.n_b());
    out.gates.push(Gate::new("symbol round-trip sup relative error (inner half)", back.sup_rel_diff(&want, ka, lb)?, 1e-3));
    out.emit_summary(&dir, "quantize", cfg)?;
    Ok(out)
}

fn probe_table(cfg: &RunConfig, title: &str, probes: &[ProbeReport]) -> Table {
    let mut t = table("verify", cfg, &["a", "b", "fd", "fd_half", "direct", "v0", "v1", "v2", "v3", "missing_mass", "nodes"]);
    t.header(title);
    for (i, v) in Variant::ALL.iter().enumerate() {
        t.header(format!("v{i}: {}", v.label()));
    }
    for p in probes {
        if let Some(e) = &p.error {
            t.header(format!("probe a={:e} b={:e} error: {e}", p.p.a, p.p.b));
        }
        let (r, mm, nodes) = match &p.kernel {
            Some(k) => (k.rates, k.missing_mass, k.nodes as f64),
            None => ([f64::NAN; 4], f64::NAN, 0.0),
        };
        t.push(vec![p.p.a, p.p.b, p.finite_difference, p.finite_difference_half, p.direct, r[0], r[1], r[2], r[3], mm, nodes]);
    }
    t
}

/// Worst absolute rate among all three routes (variant 0 for the kernel).
fn stationary_residual(r: &EvolutionReport) -> f64 {
    r.probes
        .iter()
        .map(|p| {
            let k = p.kernel.as_ref().map_or(f64::INFINITY, |k| k.rates[0].abs());
            p.direct.abs().max(p.finite_difference.abs()).max(k)
        })
        .fold(0.0, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v) })
}

pub fn cmd_verify(cfg: &RunConfig, n_probes: usize) -> Result<Outcome, CliError> {
    let probes = probe_lattice(n_probes)?;
    let dir = out_dir(cfg)?;
    let hb = cfg.hbar;
    let grid = cfg.grid()?;
    let targets = cfg.targets()?;
    let mut out = Outcome::default();

    let psi = state(cfg, &grid)?;
    let id = identity_resolution(&psi, &cfg.identity_window(), hb)?;
    let tol = if matches!(cfg.state, StateSpec::Coherent { .. }) { 1e-3 } else { 5e-3 };
    out.gates.push(Gate::new("resolution of identity defect", id.defect, tol));
    let mut t = table("verify", cfg, &["defect", "captured", "norm_sq"]);
    t.push(vec![id.defect, id.captured, id.norm_sq]);
    out.emit(&dir, "verify_identity.tsv", &t)?;

    let (direct, via, diff) = two_path(cfg, &targets)?;
    let mut t = field_table("verify", cfg, &[("direct", &direct), ("mellin", &via)]);
    t.header(format!("min_direct={:e} min_mellin={:e}", direct.min(), via.min()));
    out.emit(&dir, "verify_convo.tsv", &t)?;
    out.gates.push(Gate::new("Mellin vs direct Husimi sup relative difference (inner half)", diff, 1e-3));

    let settings = VerifySettings { grid: cfg.evolve_grid()?, ..VerifySettings::default() };
    let sym = symbol(cfg)?;
    let h_op = quantize_kernel(&sym, &settings.grid, hb)?;
    let span = settings.t_eval.abs() + 2.0 * settings.delta;
    let plan = PropagationPlan::new(h_op, hb, vec![-span, span])?;
    let spec = symbol_mellin(&sym, &settings.contour, &settings.omega)?;
    let kernel = MellinKernel::new(&spec, hb, Some(&settings.xi))?;
    let psi0 = state(cfg, &settings.grid)?;
    let report = evolution_with(&plan, &kernel, &psi0, &probes, &settings)?;
    out.emit(&dir, "verify_rates.tsv", &probe_table(cfg, &format!("energy={:e}", report.energy), &report.probes))?;
    out.gates.push(Gate::new("finite difference vs direct rate", report.max_fd_gap, 1e-5));
    let best = report.max_kernel_gap.iter().copied().fold(f64::INFINITY, f64::min);
    out.gates.push(Gate::new("direct vs kernel rate (best variant)", best, 1e-3));

    let mut t = table("verify", cfg, &["variant", "max_gap", "pass"]);
    for (i, v) in Variant::ALL.iter().enumerate() {
        t.header(format!("v{i}: {}", v.label()));
        let g = report.max_kernel_gap[i];
        t.push(vec![i as f64, g, if g <= 1e-3 { 1.0 } else { 0.0 }]);
    }
    out.emit(&dir, "verify_variants.tsv", &t)?;

    // Highest-energy eigenvector: concentrated near a = 1 where the symbol peaks.
    let (_, top) = plan.eigenstate(plan.eigenvalues.len() - 1);
    let diag: Vec<PhasePoint> = PROBE_A.iter().zip(PROBE_B).map(|(&a, b)| PhasePoint { a, b }).collect();
    let stat = evolution_with(&plan, &kernel, &top, &diag, &settings)?;
    out.emit(&dir, "verify_stationary.tsv", &probe_table(cfg, "stationary state: top eigenvector", &stat.probes))?;
    out.gates.push(Gate::new("stationary state rates", stationary_residual(&stat), 1e-4));

    out.emit_summary(&dir, "verify", cfg)?;
    Ok(out)
}

pub fn cmd_evolve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let dir = out_dir(cfg)?;
    let hb = cfg.hbar;
    let grid = cfg.evolve_grid()?;
    let targets = cfg.targets()?;
    let mut out = Outcome::default();

    let sym = symbol(cfg)?;
    let h_op = quantize_kernel(&sym, &grid, hb)?;
    let plan = PropagationPlan::new(h_op, hb, vec![0.0, cfg.t_max])?;
    let psi0 = state(cfg, &grid)?;
    let window = cfg.identity_window();
    let times: Vec<f64> = (0..cfg.n_t).map(|k| cfg.t_max * k as f64 / (cfg.n_t - 1) as f64).collect();

    let mut snaps = table("evolve", cfg, &["t", "a", "b", "value"]);
    let mut summary = table("evolve", cfg, &["t", "norm", "energy", "mass"]);
    summary.header("mass = sum Husimi da db / (2 pi a^2) over the identity window");
    let mut first: Option<(f64, f64, f64)> = None;
    let (mut dn, mut de, mut dm) = (0.0f64, 0.0f64, 0.0f64);
    for &t in &times {
        let psi = propagate(&plan, &psi0, t)?;
        let field = husimi_pure(&psi, &targets, hb);
        for k in 0..field.n_a() {
            for l in 0..field.n_b() {
                snaps.push(vec![t, field.a_grid.points()[k], field.b_grid.point(l), field.at(k, l)]);
            }
        }
        let (nrm, e, m) = (psi.norm(), energy(&plan.h, &psi)?, husimi_pure_mass(&psi, &window, hb).derived);
        summary.push(vec![t, nrm, e, m]);
        let (n0, e0, m0) = *first.get_or_insert((nrm, e, m));
        dn = dn.max((nrm - n0).abs() / n0);
        de = de.max((e - e0).abs() / e0.abs().max(f64::MIN_POSITIVE));
        dm = dm.max((m - m0).abs() / m0);
    }
    out.emit(&dir, "evolve_snapshots.tsv", &snaps)?;
    out.emit(&dir, "evolve_conservation.tsv", &summary)?;
    out.gates.push(Gate::new("relative norm drift", dn, 1e-8));
    out.gates.push(Gate::new("relative energy drift", de, 1e-8));
    out.gates.push(Gate::new("relative Husimi window mass drift", dm, 1e-2));
    out.emit_summary(&dir, "evolve", cfg)?;
    Ok(out)
}
