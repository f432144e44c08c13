//! Experiment configuration: named bodies and the experiments run on them.
//!
//! ```toml
//! output = "out"
//! seed = 20240611
//!
//! [qmc]
//! replicates = 8
//! points = 131072
//!
//! [bodies.ellipse]
//! kind = "ellipsoid"
//! axes = [2.0, 1.0]
//!
//! [[experiments]]
//! name = "kdense"
//! kind = "kdense"
//! bodies = ["ellipse"]
//! r = [0.1, 0.5, 0.9]
//! ```
//!
//! Body kinds and their keys (`center` defaults to the origin):
//! `ball` (radius, center), `ellipsoid` (axes or q, center), `fourier` (cos, sin),
//! `superellipse` (p), `reuleaux` (width, rotation), `polygon` (vertices), `sum` (left, right),
//! `dilate` (of, factor), `translate` (of, by), `reflect` (of), `difference` (of).
//!
//! Experiment kinds: `kdense`, `asymptotic`, `petty`, `identities`, `report`. Each experiment
//! names its `bodies`; `k` is `"difference"` (K = G − G, the default), a body name, or a list
//! with one entry per body. `expect` lists error codes (see [`crate::Error::code`]) that are
//! anticipated and do not fail the run.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use nalgebra::DMatrix;
use toml::{Table, Value};

use crate::asymptotics::LadderConfig;
use crate::geometry::ConvexBody;
use crate::measure::QmcConfig;

/// A config problem, located by the dotted path of the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            write!(f, "config error: {}", self.message)
        } else {
            write!(f, "config error at `{}`: {}", self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(key: &str, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        key: key.to_string(),
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum BodySpec {
    Ball { radius: f64, center: Vec<f64> },
    Ellipsoid { q: Vec<Vec<f64>>, center: Vec<f64> },
    Fourier { cos: Vec<f64>, sin: Vec<f64> },
    Superellipse { p: f64 },
    Reuleaux { width: f64, rotation: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
    Sum { left: String, right: String },
    Dilate { of: String, factor: f64 },
    Translate { of: String, by: Vec<f64> },
    Reflect { of: String },
    Difference { of: String },
}

impl BodySpec {
    fn references(&self) -> Vec<&str> {
        match self {
            BodySpec::Sum { left, right } => vec![left, right],
            BodySpec::Dilate { of, .. }
            | BodySpec::Translate { of, .. }
            | BodySpec::Reflect { of }
            | BodySpec::Difference { of } => vec![of],
            _ => vec![],
        }
    }
}

/// Which K accompanies each body of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum KSpec {
    Difference,
    Body(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Check {
    Kp1,
    KrantzParks,
    CurvatureSymmetry,
    KEquals2G,
    Halfvolume,
    TouchPoint,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::Kp1,
        Check::KrantzParks,
        Check::CurvatureSymmetry,
        Check::KEquals2G,
        Check::Halfvolume,
        Check::TouchPoint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Kp1 => "kp1",
            Check::KrantzParks => "krantz_parks",
            Check::CurvatureSymmetry => "curvature_symmetry",
            Check::KEquals2G => "k_equals_2g",
            Check::Halfvolume => "halfvolume",
            Check::TouchPoint => "touch_point",
        }
    }

    fn parse(s: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentKind {
    Kdense {
        r: Vec<f64>,
        points: usize,
    },
    Asymptotic {
        ladder: LadderConfig,
        /// Number of equidistributed touch normals; `None` uses the first coordinate axis.
        boundary_points: Option<usize>,
    },
    Petty {
        directions: usize,
    },
    Identities {
        checks: Vec<Check>,
        directions: usize,
        tolerance: f64,
    },
    Report,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Kdense { .. } => "kdense",
            ExperimentKind::Asymptotic { .. } => "asymptotic",
            ExperimentKind::Petty { .. } => "petty",
            ExperimentKind::Identities { .. } => "identities",
            ExperimentKind::Report => "report",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub name: String,
    pub kind: ExperimentKind,
    pub bodies: Vec<String>,
    /// One entry per body.
    pub k: Vec<KSpec>,
    pub expect: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub output: PathBuf,
    pub seed: u64,
    pub qmc: QmcConfig,
    pub bodies: BTreeMap<String, BodySpec>,
    pub experiments: Vec<Experiment>,
}

/// Error codes accepted in `expect` lists.
pub const EXPECTABLE: [&str; 6] = [
    "non_unique_contact",
    "degenerate_fit",
    "flat_contact",
    "not_normalized",
    "postcondition",
    "non_unique_support",
];

/// Typed access to one TOML table, remembering its path and which keys were read.
struct Section<'a> {
    path: String,
    table: &'a Table,
    allowed: Vec<&'static str>,
}

impl<'a> Section<'a> {
    fn new(path: impl Into<String>, table: &'a Table) -> Self {
        Section {
            path: path.into(),
            table,
            allowed: Vec::new(),
        }
    }

    fn key(&self, k: &str) -> String {
        if self.path.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.path)
        }
    }

    fn get(&mut self, k: &'static str) -> Option<&'a Value> {
        self.allowed.push(k);
        self.table.get(k)
    }

    fn require(&mut self, k: &'static str) -> Result<&'a Value, ConfigError> {
        match self.get(k) {
            Some(v) => Ok(v),
            None => err(&self.key(k), "missing required key"),
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        for k in self.table.keys() {
            if !self.allowed.contains(&k.as_str()) {
                return err(&self.key(k), format!("unknown key (expected one of: {})", self.allowed.join(", ")));
            }
        }
        Ok(())
    }

    fn f64(&mut self, k: &'static str) -> Result<f64, ConfigError> {
        let v = self.require(k)?;
        to_f64(v).map_or_else(|| err(&self.key(k), "expected a number"), Ok)
    }

    fn f64_or(&mut self, k: &'static str, default: f64) -> Result<f64, ConfigError> {
        match self.get(k) {
            None => Ok(default),
            Some(v) => to_f64(v).map_or_else(|| err(&self.key(k), "expected a number"), Ok),
        }
    }

    fn count_or(&mut self, k: &'static str, default: usize) -> Result<usize, ConfigError> {
        match self.get(k) {
            None => Ok(default),
            Some(Value::Integer(i)) if *i > 0 => Ok(*i as usize),
            Some(_) => err(&self.key(k), "expected a positive integer"),
        }
    }

    fn string(&mut self, k: &'static str) -> Result<String, ConfigError> {
        match self.require(k)? {
            Value::String(s) => Ok(s.clone()),
            _ => err(&self.key(k), "expected a string"),
        }
    }

    fn vector(&mut self, k: &'static str) -> Result<Vec<f64>, ConfigError> {
        let v = self.require(k)?;
        to_vector(v).map_or_else(|| err(&self.key(k), "expected an array of numbers"), Ok)
    }

    fn vector_or(&mut self, k: &'static str, default: Vec<f64>) -> Result<Vec<f64>, ConfigError> {
        match self.get(k) {
            None => Ok(default),
            Some(v) => to_vector(v).map_or_else(|| err(&self.key(k), "expected an array of numbers"), Ok),
        }
    }

    fn matrix(&mut self, k: &'static str) -> Result<Vec<Vec<f64>>, ConfigError> {
        let key = self.key(k);
        match self.get(k) {
            Some(Value::Array(rows)) => rows
                .iter()
                .map(|r| to_vector(r).map_or_else(|| err(&key, "expected an array of number arrays"), Ok))
                .collect(),
            _ => err(&key, "expected an array of number arrays"),
        }
    }

    fn strings_or(&mut self, k: &'static str) -> Result<Vec<String>, ConfigError> {
        let key = self.key(k);
        match self.get(k) {
            None => Ok(Vec::new()),
            Some(Value::String(s)) => Ok(vec![s.clone()]),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::String(s) => Ok(s.clone()),
                    _ => err(&key, "expected an array of strings"),
                })
                .collect(),
            Some(_) => err(&key, "expected an array of strings"),
        }
    }
}

fn to_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn to_vector(v: &Value) -> Option<Vec<f64>> {
    match v {
        Value::Array(items) => items.iter().map(to_f64).collect(),
        _ => None,
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config, ConfigError> {
        let root: Table = text.parse().map_err(|e: toml::de::Error| ConfigError {
            key: String::new(),
            message: e.to_string(),
        })?;
        let mut top = Section::new("", &root);
        let output = match top.get("output") {
            None => PathBuf::from("out"),
            Some(Value::String(s)) => PathBuf::from(s),
            Some(_) => return err("output", "expected a string"),
        };
        let seed = match top.require("seed")? {
            Value::Integer(i) if *i >= 0 => *i as u64,
            _ => return err("seed", "expected a non-negative integer"),
        };
        let mut qmc = QmcConfig {
            seed,
            ..QmcConfig::default()
        };
        if let Some(v) = top.get("qmc") {
            let Value::Table(t) = v else {
                return err("qmc", "expected a table");
            };
            let mut s = Section::new("qmc", t);
            qmc.replicates = s.count_or("replicates", qmc.replicates)?;
            qmc.points = s.count_or("points", qmc.points)?;
            s.finish()?;
            if qmc.replicates < 2 {
                return err("qmc.replicates", "need at least 2 replicates for an error estimate");
            }
        }
        let mut bodies = BTreeMap::new();
        match top.require("bodies")? {
            Value::Table(t) => {
                for (name, v) in t {
                    let key = format!("bodies.{name}");
                    let Value::Table(bt) = v else {
                        return err(&key, "expected a table");
                    };
                    bodies.insert(name.clone(), parse_body(&key, bt)?);
                }
            }
            _ => return err("bodies", "expected a table of named bodies"),
        }
        let mut experiments = Vec::new();
        match top.require("experiments")? {
            Value::Array(items) => {
                for (i, v) in items.iter().enumerate() {
                    let key = format!("experiments[{i}]");
                    let Value::Table(et) = v else {
                        return err(&key, "expected a table");
                    };
                    experiments.push(parse_experiment(&key, et)?);
                }
            }
            _ => return err("experiments", "expected an array of tables ([[experiments]])"),
        }
        top.finish()?;
        let config = Config {
            output,
            seed,
            qmc,
            bodies,
            experiments,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            key: String::new(),
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Config::from_toml(&text)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        for (name, spec) in &self.bodies {
            for r in spec.references() {
                if !self.bodies.contains_key(r) {
                    return err(&format!("bodies.{name}"), format!("unknown body \"{r}\""));
                }
            }
        }
        let mut names = std::collections::BTreeSet::new();
        for (i, e) in self.experiments.iter().enumerate() {
            let key = format!("experiments[{i}]");
            if !names.insert(&e.name) {
                return err(&format!("{key}.name"), format!("duplicate experiment name \"{}\"", e.name));
            }
            for b in &e.bodies {
                if !self.bodies.contains_key(b) {
                    return err(&format!("{key}.bodies"), format!("unknown body \"{b}\""));
                }
            }
            for k in &e.k {
                if let KSpec::Body(b) = k {
                    if !self.bodies.contains_key(b) {
                        return err(&format!("{key}.k"), format!("unknown body \"{b}\""));
                    }
                }
            }
        }
        self.build_bodies().map(|_| ())
    }

    /// Constructs every named body, resolving references.
    pub fn build_bodies(&self) -> Result<BTreeMap<String, ConvexBody>, ConfigError> {
        let mut built = BTreeMap::new();
        for name in self.bodies.keys() {
            self.build_one(name, &mut built, &mut Vec::new())?;
        }
        Ok(built)
    }

    fn build_one(
        &self,
        name: &str,
        built: &mut BTreeMap<String, ConvexBody>,
        stack: &mut Vec<String>,
    ) -> Result<ConvexBody, ConfigError> {
        if let Some(b) = built.get(name) {
            return Ok(b.clone());
        }
        let key = format!("bodies.{name}");
        if stack.iter().any(|s| s == name) {
            return err(&key, format!("cyclic reference through \"{name}\""));
        }
        stack.push(name.to_string());
        let spec = &self.bodies[name];
        let mut dep = |n: &str| self.build_one(n, built, stack);
        let body = match spec {
            BodySpec::Ball { radius, center } => ConvexBody::ball(*radius, center),
            BodySpec::Ellipsoid { q, center } => {
                let n = q.len();
                if q.iter().any(|r| r.len() != n) {
                    return err(&format!("{key}.q"), "Q must be square");
                }
                let m = DMatrix::from_fn(n, n, |i, j| q[i][j]);
                let center = if center.is_empty() { vec![0.0; n] } else { center.clone() };
                ConvexBody::ellipsoid(m, &center)
            }
            BodySpec::Fourier { cos, sin } => ConvexBody::fourier_2d(cos, sin),
            BodySpec::Superellipse { p } => ConvexBody::superellipse_2d(*p),
            BodySpec::Reuleaux { width, rotation } => ConvexBody::reuleaux_2d_rotated(*width, *rotation),
            BodySpec::Polygon { vertices } => ConvexBody::polygon_2d(vertices),
            BodySpec::Sum { left, right } => {
                let (a, b) = (dep(left)?, dep(right)?);
                a.minkowski_sum(&b)
            }
            BodySpec::Dilate { of, factor } => dep(of)?.dilate(*factor),
            BodySpec::Translate { of, by } => dep(of)?.translate(by),
            BodySpec::Reflect { of } => Ok(dep(of)?.reflect()),
            BodySpec::Difference { of } => Ok(dep(of)?.difference_body()),
        };
        stack.pop();
        let body = body.map_err(|e| ConfigError {
            key: key.clone(),
            message: e.to_string(),
        })?;
        built.insert(name.to_string(), body.clone());
        Ok(body)
    }
}

fn parse_body(key: &str, t: &Table) -> Result<BodySpec, ConfigError> {
    let mut s = Section::new(key, t);
    let kind = s.string("kind")?;
    let spec = match kind.as_str() {
        "ball" => {
            let radius = s.f64("radius")?;
            let center = s.vector("center")?;
            BodySpec::Ball { radius, center }
        }
        "ellipsoid" => {
            let center = s.vector_or("center", Vec::new())?;
            let q = match (s.get("axes"), s.get("q")) {
                (Some(_), Some(_)) => return err(&s.key("q"), "give either `axes` or `q`, not both"),
                (Some(_), None) => {
                    let axes = s.vector("axes")?;
                    (0..axes.len())
                        .map(|i| (0..axes.len()).map(|j| if i == j { axes[i] * axes[i] } else { 0.0 }).collect())
                        .collect()
                }
                (None, Some(_)) => s.matrix("q")?,
                (None, None) => return err(&s.key("axes"), "missing `axes` (or `q`)"),
            };
            if !center.is_empty() && center.len() != q.len() {
                return err(&s.key("center"), "dimension does not match the axes");
            }
            BodySpec::Ellipsoid { q, center }
        }
        "fourier" => BodySpec::Fourier {
            cos: s.vector("cos")?,
            sin: s.vector_or("sin", Vec::new())?,
        },
        "superellipse" => BodySpec::Superellipse { p: s.f64("p")? },
        "reuleaux" => BodySpec::Reuleaux {
            width: s.f64("width")?,
            rotation: s.f64_or("rotation", 0.0)?,
        },
        "polygon" => {
            let rows = s.matrix("vertices")?;
            let mut vertices = Vec::with_capacity(rows.len());
            for r in rows {
                let [x, y] = r[..] else {
                    return err(&s.key("vertices"), "vertices must be [x, y] pairs");
                };
                vertices.push([x, y]);
            }
            BodySpec::Polygon { vertices }
        }
        "sum" => BodySpec::Sum {
            left: s.string("left")?,
            right: s.string("right")?,
        },
        "dilate" => BodySpec::Dilate {
            of: s.string("of")?,
            factor: s.f64("factor")?,
        },
        "translate" => BodySpec::Translate {
            of: s.string("of")?,
            by: s.vector("by")?,
        },
        "reflect" => BodySpec::Reflect { of: s.string("of")? },
        "difference" => BodySpec::Difference { of: s.string("of")? },
        other => return err(&s.key("kind"), format!("unknown body kind \"{other}\"")),
    };
    s.finish()?;
    Ok(spec)
}

fn parse_experiment(key: &str, t: &Table) -> Result<Experiment, ConfigError> {
    let mut s = Section::new(key, t);
    let name = s.string("name")?;
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        return err(&s.key("name"), "names may only use letters, digits, '_' and '-'");
    }
    let kind_name = s.string("kind")?;
    let kind = match kind_name.as_str() {
        "kdense" => {
            let r = s.vector("r")?;
            if r.is_empty() || r.iter().any(|v| !(*v > 0.0)) {
                return err(&s.key("r"), "r values must be positive");
            }
            ExperimentKind::Kdense {
                r,
                points: s.count_or("points", 64)?,
            }
        }
        "asymptotic" => {
            let d = LadderConfig::default();
            let ladder = LadderConfig {
                eps0: s.f64_or("eps0", d.eps0)?,
                ratio: s.f64_or("ratio", d.ratio)?,
                rungs: s.count_or("rungs", d.rungs)?,
            };
            if !(ladder.eps0 > 0.0 && ladder.eps0 < 1.0) {
                return err(&s.key("eps0"), "eps0 must lie in (0, 1)");
            }
            if !(ladder.ratio > 1.0) {
                return err(&s.key("ratio"), "ratio must exceed 1");
            }
            let boundary_points = match s.get("boundary_points") {
                None => None,
                Some(_) => Some(s.count_or("boundary_points", 1)?),
            };
            ExperimentKind::Asymptotic { ladder, boundary_points }
        }
        "petty" => ExperimentKind::Petty {
            directions: s.count_or("directions", 256)?,
        },
        "identities" => {
            let names = s.strings_or("checks")?;
            let checks = if names.is_empty() {
                Check::ALL.to_vec()
            } else {
                let mut out = Vec::new();
                for n in &names {
                    match Check::parse(n) {
                        Some(c) => out.push(c),
                        None => return err(&s.key("checks"), format!("unknown check \"{n}\"")),
                    }
                }
                out
            };
            ExperimentKind::Identities {
                checks,
                directions: s.count_or("directions", 64)?,
                tolerance: s.f64_or("tolerance", 1e-8)?,
            }
        }
        "report" => ExperimentKind::Report,
        other => return err(&s.key("kind"), format!("unknown experiment kind \"{other}\"")),
    };
    let bodies = s.strings_or("bodies")?;
    if bodies.is_empty() && kind != ExperimentKind::Report {
        return err(&s.key("bodies"), "list at least one body");
    }
    let k_names = s.strings_or("k")?;
    let to_k = |n: &String| {
        if n == "difference" {
            KSpec::Difference
        } else {
            KSpec::Body(n.clone())
        }
    };
    let k = match k_names.len() {
        0 => vec![KSpec::Difference; bodies.len()],
        1 => vec![to_k(&k_names[0]); bodies.len()],
        n if n == bodies.len() => k_names.iter().map(to_k).collect(),
        _ => return err(&s.key("k"), "give one K for all bodies or one per body"),
    };
    let expect = s.strings_or("expect")?;
    for e in &expect {
        if !EXPECTABLE.contains(&e.as_str()) {
            return err(&s.key("expect"), format!("unknown error code \"{e}\" (expected one of: {})", EXPECTABLE.join(", ")));
        }
    }
    s.finish()?;
    Ok(Experiment {
        name,
        kind,
        bodies,
        k,
        expect,
    })
}
