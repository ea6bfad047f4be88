//! Run configuration: a TOML document with fixed sections.
//!
//! ```toml
//! [grid]
//! dim = 1            # 1, 2 or 3
//! n = 16             # spectral cutoff, >= 1
//! oversample = 2.0   # physical points per axis >= oversample * (2n + 1)
//!
//! [nonlinearity]
//! m = 3              # damping exponent >= 1 (number or "a/b")
//! p = 3              # source exponent >= 1
//! damping = "power"  # "power" | "off"
//! source = "power"   # "power" | "off"
//!
//! [scheme]
//! kind = "rk4"       # "rk4" | "strang"
//! dt = 1e-3
//! cfl_safety = 1.0   # RK4 requires dt <= cfl_safety / n
//! blowup_threshold = 1e8
//!
//! [run]
//! horizon = 1.0
//! output_every = 10      # steps between stored states
//! checkpoint_every = 0   # steps between checkpoints, 0 = final only
//! output_dir = "out"
//! allow_uncovered = false
//!
//! [initial]
//! kind = "single_mode"   # single_mode | multi_mode | random | checkpoint
//! k = [1]
//! amp_u = 1.0
//! amp_v = 0.0
//! # multi_mode: modes = [{ k = [1], amp_u = 1.0, amp_v = 0.0 }, ...]
//! # random:     seed = 7, cutoff = 4, amplitude = 0.5
//! # checkpoint: path = "out/checkpoint.twv"
//! ```
//!
//! Parsing reports every violation at once. Unknown sections and keys are errors.

use std::collections::BTreeSet;
use std::path::PathBuf;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::checkpoint::read_checkpoint;
use crate::error::{Error, Result};
use crate::fourier::{wavenumber_sq, Mode, SpectralField, TorusGrid};
use crate::galerkin::{initial_state, SolverState};
use crate::integrator::{RunPlan, SchemeKind, SchemeSpec, DEFAULT_BLOWUP_THRESHOLD};
use crate::nonlinearity::{Damping, NonlinearityParams, Source};
use crate::regime::{classify_for_dim, parse_rational, Existence, RegimeVerdict};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct ModeSpec {
    pub k: Mode,
    pub amp_u: f64,
    pub amp_v: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    /// `u_0 = amp_u cos(k.x)`, `u_1 = amp_v cos(k.x)`.
    SingleMode(ModeSpec),
    MultiMode(Vec<ModeSpec>),
    /// Seeded Hermitian coefficients with `|k_i| <= cutoff`, decaying like `amplitude / (1 + |k|^2)`.
    RandomBandLimited { seed: u64, cutoff: usize, amplitude: f64 },
    FromCheckpoint(PathBuf),
}

impl InitialData {
    fn cosines<T: Real>(grid: &TorusGrid, modes: &[ModeSpec]) -> Result<(SpectralField<T>, SpectralField<T>)> {
        let mut u = SpectralField::zeros(grid);
        let mut v = SpectralField::zeros(grid);
        for m in modes {
            u.axpy(T::one(), &SpectralField::cosine_mode(grid, m.k, T::lit(m.amp_u))?);
            v.axpy(T::one(), &SpectralField::cosine_mode(grid, m.k, T::lit(m.amp_v))?);
        }
        Ok((u, v))
    }

    /// Modes beyond the grid cutoff are projected away.
    fn build_cosines<T: Real>(grid: &TorusGrid, modes: &[ModeSpec]) -> Result<SolverState<T>> {
        let kmax = max_mode(modes);
        if kmax <= grid.cutoff() {
            let (u, v) = Self::cosines(grid, modes)?;
            return SolverState::new(T::zero(), u, v);
        }
        let data_grid = TorusGrid::with_points(grid.dim(), kmax, 2 * kmax + 2)?;
        let (u, v) = Self::cosines(&data_grid, modes)?;
        initial_state(&u, &v, grid)
    }

    /// The projected initial state on `grid`.
    pub fn build<T: Real>(&self, grid: &TorusGrid) -> Result<SolverState<T>> {
        match self {
            InitialData::SingleMode(m) => Self::build_cosines(grid, std::slice::from_ref(m)),
            InitialData::MultiMode(ms) => Self::build_cosines(grid, ms),
            InitialData::RandomBandLimited { seed, cutoff, amplitude } => {
                let data_grid = TorusGrid::with_points(grid.dim(), *cutoff, 2 * cutoff + 2)?;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut draw = || {
                    let coeffs = (0..data_grid.num_modes())
                        .map(|i| {
                            let w = amplitude / (1.0 + wavenumber_sq(&data_grid.mode(i)) as f64);
                            Complex::new(T::lit(w * rng.gen_range(-1.0..1.0)), T::lit(w * rng.gen_range(-1.0..1.0)))
                        })
                        .collect();
                    let mut s = SpectralField::from_coeffs(&data_grid, coeffs).expect("sized by grid");
                    s.symmetrize();
                    s
                };
                let u = draw();
                let v = draw();
                initial_state(&u, &v, grid)
            }
            InitialData::FromCheckpoint(path) => {
                let state = read_checkpoint::<T>(path)?;
                if state.grid() != grid {
                    return Err(Error::Checkpoint(format!(
                        "checkpoint grid (dim {}, n {}, M {}) does not match the configured grid (dim {}, n {}, M {})",
                        state.grid().dim(),
                        state.grid().cutoff(),
                        state.grid().points(),
                        grid.dim(),
                        grid.cutoff(),
                        grid.points()
                    )));
                }
                Ok(state)
            }
        }
    }
}

fn max_mode(ms: &[ModeSpec]) -> usize {
    ms.iter().flat_map(|m| m.k.iter()).map(|c| c.unsigned_abs() as usize).max().unwrap_or(0)
}

#[derive(Clone, Debug)]
pub struct RunConfig<T> {
    pub grid: TorusGrid,
    pub oversample: f64,
    pub nonlinearity: NonlinearityParams<T>,
    pub scheme: SchemeSpec<T>,
    pub horizon: T,
    pub output_every: usize,
    pub checkpoint_every: usize,
    pub initial: InitialData,
    pub output_dir: PathBuf,
    pub allow_uncovered: bool,
    pub regime: RegimeVerdict,
    /// The document this configuration was parsed from (empty when built in code).
    pub source_text: String,
}

impl<T: Real> RunConfig<T> {
    pub fn plan(&self) -> RunPlan<T> {
        RunPlan {
            params: self.nonlinearity.clone(),
            scheme: self.scheme,
            horizon: self.horizon,
            output_every: self.output_every,
        }
    }

    pub fn initial_state(&self) -> Result<SolverState<T>> {
        self.initial.build(&self.grid)
    }

    /// Same configuration on a grid with a different cutoff (same oversampling rule).
    pub fn with_cutoff(&self, n: usize) -> Result<Self> {
        Ok(Self { grid: TorusGrid::new(self.grid.dim(), n, self.oversample)?, ..self.clone() })
    }

    pub fn with_dt(&self, dt: T) -> Self {
        Self { scheme: SchemeSpec { dt, ..self.scheme }, ..self.clone() }
    }

    /// SHA-256 of the source document, hex encoded.
    pub fn digest(&self) -> String {
        config_digest(&self.source_text)
    }
}

pub fn config_digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ConfigOverrides {
    pub allow_uncovered: bool,
}

pub fn parse_config<T: Real>(text: &str) -> Result<RunConfig<T>> {
    parse_config_with(text, ConfigOverrides::default())
}

const SCHEMA: &[(&str, &[&str])] = &[
    ("grid", &["dim", "n", "oversample"]),
    ("nonlinearity", &["m", "p", "damping", "source"]),
    ("scheme", &["kind", "dt", "cfl_safety", "blowup_threshold"]),
    ("run", &["horizon", "output_every", "checkpoint_every", "output_dir", "allow_uncovered"]),
    ("initial", &["kind", "k", "amp_u", "amp_v", "modes", "seed", "cutoff", "amplitude", "path"]),
];

struct Reader<'a> {
    root: &'a Table,
    errors: Vec<String>,
}

impl<'a> Reader<'a> {
    fn value(&mut self, section: &str, key: &str, required: bool) -> Option<&'a Value> {
        let v = self.root.get(section).and_then(|s| s.as_table()).and_then(|t| t.get(key));
        if v.is_none() && required {
            self.errors.push(format!("{section}.{key} is required"));
        }
        v
    }

    fn number(&mut self, section: &str, key: &str, default: Option<f64>) -> Option<f64> {
        match self.value(section, key, default.is_none()) {
            None => default,
            Some(v) => match number_of(v) {
                Some(x) => Some(x),
                None => {
                    self.errors.push(format!("{section}.{key} must be a number, got {v}"));
                    None
                }
            },
        }
    }

    fn integer(&mut self, section: &str, key: &str, default: Option<i64>) -> Option<i64> {
        match self.value(section, key, default.is_none()) {
            None => default,
            Some(Value::Integer(i)) => Some(*i),
            Some(v) => {
                self.errors.push(format!("{section}.{key} must be an integer, got {v}"));
                None
            }
        }
    }

    fn string(&mut self, section: &str, key: &str, default: Option<&str>) -> Option<String> {
        match self.value(section, key, default.is_none()) {
            None => default.map(str::to_owned),
            Some(Value::String(s)) => Some(s.clone()),
            Some(v) => {
                self.errors.push(format!("{section}.{key} must be a string, got {v}"));
                None
            }
        }
    }

    fn boolean(&mut self, section: &str, key: &str, default: bool) -> bool {
        match self.value(section, key, false) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(v) => {
                self.errors.push(format!("{section}.{key} must be true or false, got {v}"));
                default
            }
        }
    }

    /// Exponent given as a number or an exact `"a/b"` string; returns the float and its exact text.
    fn exponent(&mut self, key: &str) -> Option<(f64, Option<String>)> {
        match self.value("nonlinearity", key, true)? {
            Value::String(s) => match parse_rational(s) {
                Ok(r) => Some((*r.numer() as f64 / *r.denom() as f64, Some(s.clone()))),
                Err(_) => {
                    self.errors.push(format!("nonlinearity.{key} = {s:?} is not a number or fraction"));
                    None
                }
            },
            v => match number_of(v) {
                Some(x) => Some((x, Some(format!("{x}")))),
                None => {
                    self.errors.push(format!("nonlinearity.{key} must be a number, got {v}"));
                    None
                }
            },
        }
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.errors.push(msg());
        }
    }
}

fn number_of(v: &Value) -> Option<f64> {
    match v {
        Value::Integer(i) => Some(*i as f64),
        Value::Float(f) => Some(*f),
        _ => None,
    }
}

fn mode_of(v: &Value, dim: Option<usize>, path: &str, errors: &mut Vec<String>) -> Option<Mode> {
    let Some(arr) = v.as_array() else {
        errors.push(format!("{path} must be an array of integers"));
        return None;
    };
    let mut k = [0i64; 3];
    if arr.len() > 3 || dim.is_some_and(|d| arr.len() != d) {
        errors.push(format!("{path} has {} components but grid.dim = {}", arr.len(), dim.map_or(0, |d| d)));
        return None;
    }
    for (i, c) in arr.iter().enumerate() {
        match c.as_integer() {
            Some(x) => k[i] = x,
            None => {
                errors.push(format!("{path}[{i}] must be an integer"));
                return None;
            }
        }
    }
    Some(k)
}

fn mode_spec(table: &Table, dim: Option<usize>, path: &str, errors: &mut Vec<String>) -> Option<ModeSpec> {
    for key in table.keys() {
        if !["k", "amp_u", "amp_v"].contains(&key.as_str()) {
            errors.push(format!("unknown key {path}.{key}"));
        }
    }
    let k = match table.get("k") {
        Some(v) => mode_of(v, dim, &format!("{path}.k"), errors),
        None => {
            errors.push(format!("{path}.k is required"));
            None
        }
    };
    let mut amp = |key: &str| match table.get(key) {
        None => Some(0.0),
        Some(v) => match number_of(v) {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                errors.push(format!("{path}.{key} must be a finite number"));
                None
            }
        },
    };
    let amp_u = amp("amp_u");
    let amp_v = amp("amp_v");
    Some(ModeSpec { k: k?, amp_u: amp_u?, amp_v: amp_v? })
}

pub fn parse_config_with<T: Real>(text: &str, overrides: ConfigOverrides) -> Result<RunConfig<T>> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| Error::Config(vec![format!("syntax: {e}")]))?;
    let mut r = Reader { root: &root, errors: Vec::new() };

    for (section, value) in &root {
        match SCHEMA.iter().find(|(s, _)| s == section) {
            None => r.errors.push(format!("unknown section [{section}]")),
            Some((_, keys)) => match value.as_table() {
                None => r.errors.push(format!("{section} must be a table")),
                Some(t) => {
                    let allowed: BTreeSet<&str> = keys.iter().copied().collect();
                    for key in t.keys() {
                        if !allowed.contains(key.as_str()) {
                            r.errors.push(format!("unknown key {section}.{key}"));
                        }
                    }
                }
            },
        }
    }

    let dim = r.integer("grid", "dim", None);
    r.check(dim.is_none_or(|d| (1..=3).contains(&d)), || format!("grid.dim must be 1, 2 or 3, got {}", dim.unwrap_or(0)));
    let dim = dim.filter(|d| (1..=3).contains(d)).map(|d| d as usize);
    let n = r.integer("grid", "n", None);
    r.check(n.is_none_or(|n| n >= 1), || format!("grid.n must be >= 1, got {}", n.unwrap_or(0)));
    let n = n.filter(|&n| n >= 1).map(|n| n as usize);
    let oversample = r.number("grid", "oversample", Some(2.0));
    r.check(oversample.is_none_or(|o| o.is_finite() && o >= 1.0), || {
        format!("grid.oversample must be >= 1, got {}", oversample.unwrap_or(f64::NAN))
    });

    let m = r.exponent("m");
    let p = r.exponent("p");
    for (key, e) in [("m", &m), ("p", &p)] {
        if let Some((x, _)) = e {
            r.check(x.is_finite() && *x >= 1.0, || format!("nonlinearity.{key} must be >= 1, got {x}"));
        }
    }
    let damping = r.string("nonlinearity", "damping", Some("power"));
    r.check(damping.as_deref().is_none_or(|d| d == "power" || d == "off"), || {
        format!("nonlinearity.damping must be \"power\" or \"off\", got {:?}", damping.clone().unwrap_or_default())
    });
    let source = r.string("nonlinearity", "source", Some("power"));
    r.check(source.as_deref().is_none_or(|d| d == "power" || d == "off"), || {
        format!("nonlinearity.source must be \"power\" or \"off\", got {:?}", source.clone().unwrap_or_default())
    });

    let kind = r.string("scheme", "kind", None);
    let kind = match kind.as_deref() {
        Some("rk4") => Some(SchemeKind::Rk4),
        Some("strang") => Some(SchemeKind::Strang),
        Some(other) => {
            r.errors.push(format!("scheme.kind must be \"rk4\" or \"strang\", got {other:?}"));
            None
        }
        None => None,
    };
    let dt = r.number("scheme", "dt", None);
    let cfl = r.number("scheme", "cfl_safety", Some(1.0));
    let threshold = r.number("scheme", "blowup_threshold", Some(DEFAULT_BLOWUP_THRESHOLD));

    let horizon = r.number("run", "horizon", None);
    r.check(horizon.is_none_or(|h| h.is_finite() && h > 0.0), || {
        format!("run.horizon must be > 0, got {}", horizon.unwrap_or(f64::NAN))
    });
    let output_every = r.integer("run", "output_every", Some(1));
    r.check(output_every.is_none_or(|o| o >= 1), || {
        format!("run.output_every must be >= 1, got {}", output_every.unwrap_or(0))
    });
    let checkpoint_every = r.integer("run", "checkpoint_every", Some(0));
    r.check(checkpoint_every.is_none_or(|c| c >= 0), || {
        format!("run.checkpoint_every must be >= 0, got {}", checkpoint_every.unwrap_or(0))
    });
    let output_dir = r.string("run", "output_dir", Some("out"));
    let allow_uncovered = r.boolean("run", "allow_uncovered", false) || overrides.allow_uncovered;

    let initial = parse_initial(&mut r, dim, n);

    let grid = match (dim, n, oversample) {
        (Some(d), Some(n), Some(o)) if o.is_finite() && o >= 1.0 => TorusGrid::new(d, n, o).ok(),
        _ => None,
    };

    if let (Some(k), Some(dt), Some(cfl), Some(th), Some(n)) = (kind, dt, cfl, threshold, n) {
        let spec = SchemeSpec { kind: k, dt, cfl_safety: cfl, blowup_threshold: th };
        r.errors.extend(spec.violations(n));
    } else {
        if let Some(dt) = dt {
            r.check(dt > 0.0, || format!("scheme.dt must be > 0, got {dt}"));
        }
        if let Some(cfl) = cfl {
            r.check(cfl > 0.0 && cfl <= 1.0, || format!("scheme.cfl_safety must lie in (0, 1], got {cfl}"));
        }
    }

    let mut regime = None;
    if let (Some((mf, mt)), Some((pf, pt))) = (&m, &p) {
        if *mf >= 1.0 && *pf >= 1.0 {
            let exact = mt.as_deref().and_then(|s| parse_rational(s).ok()).zip(pt.as_deref().and_then(|s| parse_rational(s).ok()));
            let d = dim.unwrap_or(3);
            let verdict = match exact {
                Some((mr, pr)) => classify_for_dim(mr, pr, d),
                None => classify_for_dim(*mf, *pf, d),
            };
            if let Ok(v) = verdict {
                if v.existence == Existence::NotCovered && !allow_uncovered {
                    r.errors.push(format!(
                        "(m, p) = ({mf}, {pf}) is NotCovered by the existence region{}; pass --allow-uncovered (or run.allow_uncovered = true) to run anyway",
                        if v.blowup_candidate { " and is a blowup_candidate (p > m)" } else { "" }
                    ));
                }
                regime = Some(v);
            }
        }
    }

    if !r.errors.is_empty() {
        return Err(Error::Config(r.errors));
    }
    let (m, p) = (m.expect("checked").0, p.expect("checked").0);
    let mut params = NonlinearityParams::power_law(T::lit(m), T::lit(p))?;
    if damping.as_deref() == Some("off") {
        params.damping = Damping::Disabled;
    }
    if source.as_deref() == Some("off") {
        params.source = Source::Disabled;
    }
    Ok(RunConfig {
        grid: grid.expect("checked"),
        oversample: oversample.expect("checked"),
        nonlinearity: params,
        scheme: SchemeSpec {
            kind: kind.expect("checked"),
            dt: T::lit(dt.expect("checked")),
            cfl_safety: T::lit(cfl.expect("checked")),
            blowup_threshold: T::lit(threshold.expect("checked")),
        },
        horizon: T::lit(horizon.expect("checked")),
        output_every: output_every.expect("checked") as usize,
        checkpoint_every: checkpoint_every.expect("checked") as usize,
        initial: initial.expect("checked"),
        output_dir: PathBuf::from(output_dir.expect("checked")),
        allow_uncovered,
        regime: regime.expect("checked"),
        source_text: text.to_owned(),
    })
}

fn parse_initial(r: &mut Reader<'_>, dim: Option<usize>, n: Option<usize>) -> Option<InitialData> {
    let kind = r.string("initial", "kind", None)?;
    let allowed: &[&str] = match kind.as_str() {
        "single_mode" => &["kind", "k", "amp_u", "amp_v"],
        "multi_mode" => &["kind", "modes"],
        "random" => &["kind", "seed", "cutoff", "amplitude"],
        "checkpoint" => &["kind", "path"],
        other => {
            r.errors.push(format!(
                "initial.kind must be single_mode, multi_mode, random or checkpoint, got {other:?}"
            ));
            return None;
        }
    };
    if let Some(t) = r.root.get("initial").and_then(|v| v.as_table()) {
        for key in t.keys() {
            if !allowed.contains(&key.as_str()) && SCHEMA[4].1.contains(&key.as_str()) {
                r.errors.push(format!("initial.{key} does not apply to kind = {kind:?}"));
            }
        }
    }
    let check_modes = |r: &mut Reader<'_>, modes: &[ModeSpec]| {
        if let Some(n) = n {
            for m in modes {
                if m.k.iter().any(|c| c.unsigned_abs() as usize > n) {
                    r.errors.push(format!("initial mode k = {:?} exceeds the grid cutoff n = {n}", &m.k[..dim.unwrap_or(3)]));
                }
            }
        }
    };
    match kind.as_str() {
        "single_mode" => {
            let table = r.root.get("initial").and_then(|v| v.as_table())?.clone();
            let mut sub = Table::new();
            for key in ["k", "amp_u", "amp_v"] {
                if let Some(v) = table.get(key) {
                    sub.insert(key.into(), v.clone());
                }
            }
            let spec = mode_spec(&sub, dim, "initial", &mut r.errors)?;
            check_modes(r, std::slice::from_ref(&spec));
            Some(InitialData::SingleMode(spec))
        }
        "multi_mode" => {
            let modes = r.value("initial", "modes", true)?;
            let Some(arr) = modes.as_array() else {
                r.errors.push("initial.modes must be an array of tables".into());
                return None;
            };
            let mut out = Vec::new();
            let mut ok = true;
            for (i, m) in arr.iter().enumerate() {
                match m.as_table() {
                    Some(t) => match mode_spec(t, dim, &format!("initial.modes[{i}]"), &mut r.errors) {
                        Some(s) => out.push(s),
                        None => ok = false,
                    },
                    None => {
                        r.errors.push(format!("initial.modes[{i}] must be a table"));
                        ok = false;
                    }
                }
            }
            check_modes(r, &out);
            ok.then_some(InitialData::MultiMode(out))
        }
        "random" => {
            let seed = r.integer("initial", "seed", Some(0));
            r.check(seed.is_none_or(|s| s >= 0), || "initial.seed must be >= 0".into());
            let cutoff = r.integer("initial", "cutoff", None);
            r.check(cutoff.is_none_or(|c| c >= 0 && n.is_none_or(|n| c as usize <= n)), || {
                format!("initial.cutoff = {} must lie in [0, grid.n]", cutoff.unwrap_or(-1))
            });
            let amplitude = r.number("initial", "amplitude", Some(1.0));
            r.check(amplitude.is_none_or(|a| a.is_finite() && a >= 0.0), || {
                "initial.amplitude must be a finite number >= 0".into()
            });
            Some(InitialData::RandomBandLimited {
                seed: seed? as u64,
                cutoff: cutoff.filter(|&c| c >= 0)? as usize,
                amplitude: amplitude?,
            })
        }
        _ => {
            let path = r.string("initial", "path", None)?;
            Some(InitialData::FromCheckpoint(PathBuf::from(path)))
        }
    }
}
