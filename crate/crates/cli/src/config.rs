//! Flat `key=value` run configuration.
//!
//! Precedence is defaults < config file < environment (`AFFINE_HUSIMI_<KEY>`).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use affine_husimi::families::{AFactor, BFactor, StateSpec, SymbolSpec};
use affine_husimi::{ConeWindow, LogGrid, PhaseGrid, PhasePoint, PlanckScale, UniformGrid, C64};

use crate::CliError;

pub const ENV_PREFIX: &str = "AFFINE_HUSIMI_";

/// Every accepted key with its default, in echo order.
const KEYS: &[(&str, &str)] = &[
    ("hbar", "1"),
    ("x_min", "1e-4"),
    ("x_max", "40"),
    ("n", "2048"),
    ("evolve_n", "1024"),
    ("a_min", "0.5"),
    ("a_max", "2"),
    ("n_a", "16"),
    ("b_min", "-1.5"),
    ("b_max", "1.5"),
    ("n_b", "17"),
    ("tau_max", "30"),
    ("m", "301"),
    ("state", "coherent"),
    ("state_a", "0.8"),
    ("state_b", "0.5"),
    ("state_k", "2"),
    ("state_c", "1"),
    ("state_terms", "1:0@0.8:0.5,0:1@1.3:-0.4"),
    ("symbol_a", "expsum"),
    ("symbol_a_c", "1"),
    ("symbol_a_center", "1"),
    ("symbol_a_width", "0.5"),
    ("symbol_b", "gaussian"),
    ("symbol_b_center", "0"),
    ("symbol_b_width", "1"),
    ("symbol_amplitude", "7.38905609893065"),
    ("out_dir", "out"),
    ("t_max", "5"),
    ("n_t", "6"),
];

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Raw merged values, used for the header echo.
    pub raw: BTreeMap<String, String>,
    pub hbar: PlanckScale,
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub evolve_n: usize,
    pub a_min: f64,
    pub a_max: f64,
    pub n_a: usize,
    pub b_min: f64,
    pub b_max: f64,
    pub n_b: usize,
    pub tau_max: f64,
    pub m: usize,
    pub state: StateSpec,
    pub symbol: SymbolSpec,
    pub out_dir: PathBuf,
    pub t_max: f64,
    pub n_t: usize,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("line {}: expected key=value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(bad(format!("line {}: empty key", i + 1)));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

impl RunConfig {
    /// Defaults, then `file`, then the given environment pairs.
    pub fn load(file: Option<&Path>, env: impl IntoIterator<Item = (String, String)>) -> Result<Self, CliError> {
        let mut raw: BTreeMap<String, String> = KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
            for (k, v) in parse_pairs(&text)? {
                if !known(&k) {
                    return Err(bad(format!("unknown key '{k}'")));
                }
                raw.insert(k, v);
            }
        }
        for (name, v) in env {
            let Some(k) = name.strip_prefix(ENV_PREFIX) else { continue };
            let k = k.to_ascii_lowercase();
            if !known(&k) {
                return Err(bad(format!("unknown key '{k}' from {name}")));
            }
            raw.insert(k, v);
        }
        Self::from_raw(raw)
    }

    pub fn from_env(file: Option<&Path>) -> Result<Self, CliError> {
        Self::load(file, std::env::vars())
    }

    fn from_raw(raw: BTreeMap<String, String>) -> Result<Self, CliError> {
        let get = |k: &str| raw.get(k).map(String::as_str).unwrap_or("");
        let f = |k: &str| -> Result<f64, CliError> {
            let v: f64 = get(k).parse().map_err(|_| bad(format!("{k}: not a number: '{}'", get(k))))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(format!("{k}: not finite")))
            }
        };
        let u = |k: &str| -> Result<usize, CliError> { get(k).parse().map_err(|_| bad(format!("{k}: not a count: '{}'", get(k)))) };

        let hbar = PlanckScale::new(f("hbar")?).map_err(|e| bad(format!("hbar: {e}")))?;
        let state = match get("state") {
            "coherent" => StateSpec::Coherent { a: f("state_a")?, b: f("state_b")? },
            "monomial" => StateSpec::MonomialExp { k: f("state_k")?, c: f("state_c")? },
            "superposition" => StateSpec::Superposition(parse_terms(get("state_terms"))?),
            other => return Err(bad(format!("state: unknown family '{other}'"))),
        };
        let a = match get("symbol_a") {
            "expsum" => AFactor::ExpSum { c: f("symbol_a_c")? },
            "bump" => AFactor::Bump { center: f("symbol_a_center")?, width: f("symbol_a_width")? },
            other => return Err(bad(format!("symbol_a: unknown family '{other}'"))),
        };
        let b = match get("symbol_b") {
            "gaussian" => BFactor::Gaussian { center: f("symbol_b_center")?, width: f("symbol_b_width")? },
            "bump" => BFactor::Bump { center: f("symbol_b_center")?, width: f("symbol_b_width")? },
            other => return Err(bad(format!("symbol_b: unknown family '{other}'"))),
        };
        let symbol = SymbolSpec { a, b, amplitude: f("symbol_amplitude")? };
        symbol.validate().map_err(|e| bad(e.to_string()))?;

        let cfg = Self {
            hbar,
            x_min: f("x_min")?,
            x_max: f("x_max")?,
            n: u("n")?,
            evolve_n: u("evolve_n")?,
            a_min: f("a_min")?,
            a_max: f("a_max")?,
            n_a: u("n_a")?,
            b_min: f("b_min")?,
            b_max: f("b_max")?,
            n_b: u("n_b")?,
            tau_max: f("tau_max")?,
            m: u("m")?,
            state,
            symbol,
            out_dir: PathBuf::from(get("out_dir")),
            t_max: f("t_max")?,
            n_t: u("n_t")?,
            raw,
        };
        cfg.grid()?;
        cfg.evolve_grid()?;
        cfg.targets()?;
        if !(cfg.tau_max > 0.0) || cfg.m < 3 || cfg.m % 2 == 0 {
            return Err(bad("contour needs tau_max > 0 and odd m >= 3"));
        }
        if !(cfg.t_max > 0.0) || cfg.n_t < 2 {
            return Err(bad("evolution needs t_max > 0 and n_t >= 2"));
        }
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<LogGrid, CliError> {
        LogGrid::new(self.x_min, self.x_max, self.n).map_err(|e| bad(format!("grid: {e}")))
    }

    pub fn evolve_grid(&self) -> Result<LogGrid, CliError> {
        LogGrid::new(self.x_min, self.x_max, self.evolve_n).map_err(|e| bad(format!("evolve grid: {e}")))
    }

    pub fn targets(&self) -> Result<PhaseGrid, CliError> {
        let a = LogGrid::new(self.a_min, self.a_max, self.n_a).map_err(|e| bad(format!("a window: {e}")))?;
        let b = UniformGrid::new(self.b_min, self.b_max, self.n_b).map_err(|e| bad(format!("b window: {e}")))?;
        Ok(PhaseGrid::new(a, b))
    }

    /// Resolution-of-identity window scaled to ħ.
    pub fn identity_window(&self) -> ConeWindow {
        ConeWindow::default_identity().scaled_for(self.hbar.value())
    }

    /// `key=value` lines in key order.
    pub fn echo(&self) -> Vec<String> {
        self.raw.iter().map(|(k, v)| format!("{k}={v}")).collect()
    }
}

/// `re:im@a:b` terms separated by commas.
fn parse_terms(s: &str) -> Result<Vec<(C64, PhasePoint)>, CliError> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad(format!("state_terms: bad number '{t}'")));
    let pair = |t: &str| -> Result<(f64, f64), CliError> {
        let (x, y) = t.split_once(':').ok_or_else(|| bad(format!("state_terms: expected x:y in '{t}'")))?;
        Ok((num(x)?, num(y)?))
    };
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let (c, p) = t.split_once('@').ok_or_else(|| bad(format!("state_terms: expected c@p in '{t}'")))?;
            let (re, im) = pair(c)?;
            let (a, b) = pair(p)?;
            let p = PhasePoint::new(a, b).map_err(|e| bad(format!("state_terms: {e}")))?;
            Ok((C64::new(re, im), p))
        })
        .collect()
}
