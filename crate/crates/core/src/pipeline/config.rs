use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CollocationMode, Shape};
use crate::krylov::GmresConfig;
use crate::lattice_ops::ClosureMode;
use crate::lgf::LgfEvalConfig;
use crate::Point3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    #[default]
    Double,
    Single,
    Direct,
}

impl FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "double" => Ok(Formulation::Double),
            "single" => Ok(Formulation::Single),
            "direct" => Ok(Formulation::Direct),
            _ => Err(Error::Config(format!("unknown formulation `{s}`"))),
        }
    }
}

/// Closed-form test solutions with the matching `f = -Δu + σu`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Manufactured {
    /// `u = x² + y² + z²`
    Quadratic,
    /// `u = sin x cos y sin z`
    Trig,
    /// `u = 0`
    Zero,
}

impl Manufactured {
    pub fn u(&self, [x, y, z]: Point3) -> f64 {
        match self {
            Manufactured::Quadratic => x * x + y * y + z * z,
            Manufactured::Trig => x.sin() * y.cos() * z.sin(),
            Manufactured::Zero => 0.0,
        }
    }

    pub fn f(&self, p: Point3, sigma: f64) -> f64 {
        match self {
            Manufactured::Quadratic => -6.0 + sigma * self.u(p),
            Manufactured::Trig => (3.0 + sigma) * self.u(p),
            Manufactured::Zero => 0.0,
        }
    }
}

impl FromStr for Manufactured {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic" => Ok(Manufactured::Quadratic),
            "trig" => Ok(Manufactured::Trig),
            "zero" => Ok(Manufactured::Zero),
            _ => Err(Error::Config(format!("unknown exact solution `{s}`"))),
        }
    }
}

/// `sphere:R`, `ellipsoid:a,b,c` or `torus:R,r`.
impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("geometry `{s}` is not of the form kind:params")))?;
        let nums = args
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Config(format!("geometry `{s}`: {e}")))?;
        let shape = match (kind, nums.as_slice()) {
            ("sphere", &[radius]) => Shape::Sphere { radius },
            ("ellipsoid", &[a, b, c]) => Shape::Ellipsoid { a, b, c },
            ("torus", &[major, minor]) => Shape::Torus { major, minor },
            _ => return Err(Error::Config(format!("cannot parse geometry `{s}`"))),
        };
        shape.validate()?;
        Ok(shape)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Sphere { radius } => write!(f, "sphere:{radius}"),
            Shape::Ellipsoid { a, b, c } => write!(f, "ellipsoid:{a},{b},{c}"),
            Shape::Torus { major, minor } => write!(f, "torus:{major},{minor}"),
        }
    }
}

/// Everything needed for one end-to-end run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub geometry: Shape,
    pub ell: f64,
    /// Grid exponent: `N = 2ⁿ - 1`.
    pub n: u32,
    pub sigma: f64,
    pub formulation: Formulation,
    pub gmres: GmresConfig,
    pub closure: ClosureMode,
    pub collocation: CollocationMode,
    pub lgf: LgfEvalConfig,
    pub lgf_cache: Option<PathBuf>,
    pub exact: Option<Manufactured>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            geometry: Shape::Ellipsoid { a: 1.0, b: 0.8, c: 0.4 },
            ell: 0.25,
            n: 5,
            sigma: 0.0,
            formulation: Formulation::Double,
            gmres: GmresConfig::default(),
            closure: ClosureMode::default(),
            collocation: CollocationMode::default(),
            lgf: LgfEvalConfig::default(),
            lgf_cache: None,
            exact: None,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::Config(format!("sigma must be a non-negative number, got {}", self.sigma)));
        }
        if !(self.gmres.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.gmres.tol)));
        }
        self.lgf.validate()
    }

    /// Applies the keys present in a flat JSON file.
    pub fn merge(&mut self, file: &FileConfig) -> Result<()> {
        if let Some(g) = &file.geometry {
            self.geometry = g.parse()?;
        }
        if let Some(v) = file.ell {
            self.ell = v;
        }
        if let Some(v) = file.n {
            self.n = v;
        }
        if let Some(v) = file.sigma {
            self.sigma = v;
        }
        if let Some(v) = &file.formulation {
            self.formulation = v.parse()?;
        }
        if let Some(v) = file.tol {
            self.gmres.tol = v;
        }
        if let Some(v) = file.max_iter {
            self.gmres.max_iter = v;
        }
        if let Some(v) = &file.lgf_cache {
            self.lgf_cache = Some(v.clone());
        }
        if let Some(v) = &file.exact {
            self.exact = Some(v.parse()?);
        }
        if let Some(v) = &file.out {
            self.out = Some(v.clone());
        }
        if let Some(v) = file.collocation {
            self.collocation = v;
        }
        if let Some(v) = file.closure {
            self.closure = v;
        }
        if let Some(v) = &file.lgf {
            self.lgf = v.clone();
        }
        Ok(())
    }
}

/// Flat JSON run file. Every key is optional:
///
/// ```json
/// { "geometry": "torus:0.6,0.3", "ell": 0.1, "n": 6, "sigma": 10,
///   "formulation": "double", "tol": 1e-14, "max_iter": 500,
///   "exact": "trig", "out": "runs/torus", "lgf_cache": "cache" }
/// ```
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub geometry: Option<String>,
    pub ell: Option<f64>,
    pub n: Option<u32>,
    pub sigma: Option<f64>,
    pub formulation: Option<String>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub lgf_cache: Option<PathBuf>,
    pub exact: Option<String>,
    pub out: Option<PathBuf>,
    pub lgf: Option<LgfEvalConfig>,
    pub closure: Option<ClosureMode>,
    pub collocation: Option<CollocationMode>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
