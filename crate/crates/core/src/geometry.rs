//! Implicit geometries, the auxiliary box grid, point classification and
//! boundary collocation.
//!
//! Grid nodes are addressed by `(i, j, k)` along `(x, y, z)` with
//! `0 ≤ i, j, k < N`; the linear index is `(i·N + j)·N + k`. All γ lists
//! are sorted by linear index.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Point3;

/// Implicit surface `φ = 0` with interior `φ < 0`.
pub trait LevelSet: Send + Sync {
    fn phi(&self, p: Point3) -> f64;
    fn grad(&self, p: Point3) -> Point3;
}

/// Built-in shapes, all centred at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Sphere { radius: f64 },
    Ellipsoid { a: f64, b: f64, c: f64 },
    /// `(√(x²+y²) - major)² + z² - minor²`.
    Torus { major: f64, minor: f64 },
}

impl Shape {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Sphere { radius } => radius > 0.0,
            Shape::Ellipsoid { a, b, c } => a > 0.0 && b > 0.0 && c > 0.0,
            Shape::Torus { major, minor } => minor > 0.0 && major > minor,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Geometry(format!("invalid shape parameters: {self:?}")))
        }
    }
}

impl LevelSet for Shape {
    fn phi(&self, [x, y, z]: Point3) -> f64 {
        match *self {
            Shape::Sphere { radius } => (x * x + y * y + z * z) / (radius * radius) - 1.0,
            Shape::Ellipsoid { a, b, c } => x * x / (a * a) + y * y / (b * b) + z * z / (c * c) - 1.0,
            Shape::Torus { major, minor } => {
                let rho = (x * x + y * y).sqrt() - major;
                rho * rho + z * z - minor * minor
            }
        }
    }

    fn grad(&self, [x, y, z]: Point3) -> Point3 {
        match *self {
            Shape::Sphere { radius } => {
                let s = 2.0 / (radius * radius);
                [s * x, s * y, s * z]
            }
            Shape::Ellipsoid { a, b, c } => [2.0 * x / (a * a), 2.0 * y / (b * b), 2.0 * z / (c * c)],
            Shape::Torus { major, .. } => {
                let rxy = (x * x + y * y).sqrt();
                if rxy == 0.0 {
                    return [0.0, 0.0, 2.0 * z];
                }
                let f = 2.0 * (rxy - major) / rxy;
                [f * x, f * y, 2.0 * z]
            }
        }
    }
}

/// A level-set geometry: one of the built-in shapes or a user-supplied one.
#[derive(Clone)]
pub enum LevelSetGeometry {
    Shape(Shape),
    Custom(Arc<dyn LevelSet>),
}

impl fmt::Debug for LevelSetGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevelSetGeometry::Shape(s) => s.fmt(f),
            LevelSetGeometry::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl From<Shape> for LevelSetGeometry {
    fn from(s: Shape) -> Self {
        LevelSetGeometry::Shape(s)
    }
}

impl LevelSet for LevelSetGeometry {
    fn phi(&self, p: Point3) -> f64 {
        match self {
            LevelSetGeometry::Shape(s) => s.phi(p),
            LevelSetGeometry::Custom(c) => c.phi(p),
        }
    }

    fn grad(&self, p: Point3) -> Point3 {
        match self {
            LevelSetGeometry::Shape(s) => s.grad(p),
            LevelSetGeometry::Custom(c) => c.grad(p),
        }
    }
}

/// The cube `[-1-ℓ, 1+ℓ]³` with `N = 2ⁿ - 1` interior nodes per dimension
/// and spacing `h = (2 + 2ℓ)/N`. Nodes sit at the cell centres
/// `-1-ℓ + (i + ½)h`, so the origin is a node; the layer `i ∈ {-1, N}` just
/// outside the cube carries the zero Dirichlet condition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuxiliaryBox {
    pub ell: f64,
    pub n: usize,
    pub h: f64,
}

impl AuxiliaryBox {
    pub fn new(ell: f64, exponent: u32) -> Result<Self> {
        if !(ell >= 0.0) {
            return Err(Error::Config(format!("margin must be non-negative, got {ell}")));
        }
        if !(2..=12).contains(&exponent) {
            return Err(Error::Config(format!("grid exponent must be in 2..=12, got {exponent}")));
        }
        Self::with_nodes(ell, (1usize << exponent) - 1)
    }

    /// A box with any odd node count `n ≥ 3` per dimension.
    pub fn with_nodes(ell: f64, n: usize) -> Result<Self> {
        if !(ell >= 0.0) {
            return Err(Error::Config(format!("margin must be non-negative, got {ell}")));
        }
        if n < 3 || n % 2 == 0 {
            return Err(Error::Config(format!("node count must be odd and at least 3, got {n}")));
        }
        Ok(Self {
            ell,
            n,
            h: (2.0 + 2.0 * ell) / n as f64,
        })
    }

    pub fn lower(&self) -> f64 {
        -1.0 - self.ell
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn index(&self, [i, j, k]: [usize; 3]) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn ijk(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.lower() + (i as f64 + 0.5) * self.h
    }

    #[inline]
    pub fn point(&self, [i, j, k]: [usize; 3]) -> Point3 {
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    /// The six stencil neighbours that lie inside the grid.
    pub fn neighbors(&self, [i, j, k]: [usize; 3]) -> impl Iterator<Item = [usize; 3]> {
        let n = self.n as isize;
        let c = [i as isize, j as isize, k as isize];
        (0..6).filter_map(move |d| {
            let mut m = c;
            m[d / 2] += if d % 2 == 0 { -1 } else { 1 };
            if m.iter().all(|&v| (0..n).contains(&v)) {
                Some([m[0] as usize, m[1] as usize, m[2] as usize])
            } else {
                None
            }
        })
    }
}

/// Membership of a grid node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeTag {
    Mplus,
    Mminus,
}

/// Which part of γ a node belongs to, with its position in that list.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GammaSlot {
    Plus(usize),
    Minus(usize),
}

const NOT_IN_GAMMA: u32 = u32::MAX;

/// Point sets `M±`, `γ±` over the auxiliary grid.
#[derive(Clone, Debug)]
pub struct GridClassification {
    pub grid: AuxiliaryBox,
    inside: Vec<bool>,
    gamma_plus: Vec<usize>,
    gamma_minus: Vec<usize>,
    slot: Vec<u32>,
}

impl GridClassification {
    pub fn tag(&self, idx: usize) -> NodeTag {
        if self.inside[idx] {
            NodeTag::Mplus
        } else {
            NodeTag::Mminus
        }
    }

    pub fn is_inside(&self, idx: usize) -> bool {
        self.inside[idx]
    }

    pub fn gamma_plus(&self) -> &[usize] {
        &self.gamma_plus
    }

    pub fn gamma_minus(&self) -> &[usize] {
        &self.gamma_minus
    }

    pub fn gamma_len(&self) -> usize {
        self.gamma_plus.len() + self.gamma_minus.len()
    }

    pub fn gamma_slot(&self, idx: usize) -> Option<GammaSlot> {
        let s = self.slot[idx];
        if s == NOT_IN_GAMMA {
            None
        } else if self.inside[idx] {
            Some(GammaSlot::Plus(s as usize))
        } else {
            Some(GammaSlot::Minus(s as usize))
        }
    }

    /// Nodes of `M⁺` in linear order.
    pub fn m_plus(&self) -> impl Iterator<Item = usize> + '_ {
        self.inside.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn m_plus_count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    /// `N⁺`: `M⁺` together with its stencil neighbours.
    pub fn in_n_plus(&self, idx: usize) -> bool {
        self.inside[idx] || self.grid.neighbors(self.grid.ijk(idx)).any(|m| self.inside[self.grid.index(m)])
    }

    /// `N⁻`: `M⁻` together with its stencil neighbours.
    pub fn in_n_minus(&self, idx: usize) -> bool {
        !self.inside[idx] || self.grid.neighbors(self.grid.ijk(idx)).any(|m| !self.inside[self.grid.index(m)])
    }

    /// Lattice coordinates of γ₊ followed by γ₋.
    pub fn gamma_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.gamma_plus.iter().chain(self.gamma_minus.iter()).copied()
    }

    /// Largest coordinate difference between two γ nodes, plus one: the
    /// LGF table extent needed by the layer operators.
    pub fn required_extent(&self) -> usize {
        let mut lo = [usize::MAX; 3];
        let mut hi = [0usize; 3];
        for idx in self.gamma_nodes() {
            let c = self.grid.ijk(idx);
            for d in 0..3 {
                lo[d] = lo[d].min(c[d]);
                hi[d] = hi[d].max(c[d]);
            }
        }
        (0..3).map(|d| hi[d].saturating_sub(lo[d])).max().unwrap_or(0) + 1
    }

    /// One line per node: `i j k tag` with tag in `M+`, `M-`, `g+`, `g-`.
    pub fn write_debug<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for idx in 0..self.grid.len() {
            let [i, j, k] = self.grid.ijk(idx);
            let tag = match (self.gamma_slot(idx), self.inside[idx]) {
                (Some(GammaSlot::Plus(_)), _) => "g+",
                (Some(GammaSlot::Minus(_)), _) => "g-",
                (None, true) => "M+",
                (None, false) => "M-",
            };
            writeln!(w, "{i} {j} {k} {tag}")?;
        }
        Ok(())
    }
}

/// Tags every node by the sign of `φ` (nodes with `|φ| < 1e-14` count as
/// interior) and extracts `γ₊ = {M⁺ nodes with an M⁻ neighbour}` and
/// `γ₋ = {M⁻ nodes with an M⁺ neighbour}`.
pub fn classify(grid: &AuxiliaryBox, geom: &dyn LevelSet) -> Result<GridClassification> {
    let n = grid.n;
    let inside: Vec<bool> = (0..grid.len())
        .map(|idx| {
            let phi = geom.phi(grid.point(grid.ijk(idx)));
            phi < 0.0 || phi.abs() < 1e-14
        })
        .collect();

    for (idx, _) in inside.iter().enumerate().filter(|(_, &b)| b) {
        let c = grid.ijk(idx);
        if c.iter().any(|&v| v < 2 || v + 3 > n) {
            return Err(Error::Geometry(format!(
                "interior node {c:?} lies within two nodes of the box face (N = {n})"
            )));
        }
    }

    let mut gamma_plus = Vec::new();
    let mut gamma_minus = Vec::new();
    let mut slot = vec![NOT_IN_GAMMA; grid.len()];
    for idx in 0..grid.len() {
        let me = inside[idx];
        let crosses = grid.neighbors(grid.ijk(idx)).any(|m| inside[grid.index(m)] != me);
        if crosses {
            let list = if me { &mut gamma_plus } else { &mut gamma_minus };
            slot[idx] = list.len() as u32;
            list.push(idx);
        }
    }
    if gamma_plus.is_empty() {
        return Err(Error::Geometry("no grid nodes inside the domain".into()));
    }
    Ok(GridClassification {
        grid: *grid,
        inside,
        gamma_plus,
        gamma_minus,
        slot,
    })
}

fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn axpy(a: f64, x: Point3, y: Point3) -> Point3 {
    [y[0] + a * x[0], y[1] + a * x[1], y[2] + a * x[2]]
}

pub fn distance(a: Point3, b: Point3) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    dot(d, d).sqrt()
}

/// Tolerance on `|φ|` for points accepted as lying on Γ.
pub const SURFACE_TOL: f64 = 1e-12;

/// Moves `x` onto Γ by Newton steps along `∇φ`; falls back to bisection on
/// the line through `x` in the initial gradient direction.
pub fn closest_point_projection(x: Point3, geom: &dyn LevelSet) -> Result<Point3> {
    let fail = |reason: String| Error::Projection { node: None, reason };
    let mut p = x;
    for _ in 0..50 {
        let phi = geom.phi(p);
        if phi.abs() <= SURFACE_TOL {
            return Ok(p);
        }
        let g = geom.grad(p);
        let g2 = dot(g, g);
        if !(g2 > 0.0) || !g2.is_finite() {
            break;
        }
        p = axpy(-phi / g2, g, p);
    }

    // Bisection along the unit normal at x.
    let g = geom.grad(x);
    let gn = dot(g, g).sqrt();
    if !(gn > 0.0) {
        return Err(fail("vanishing gradient".into()));
    }
    let dir = [g[0] / gn, g[1] / gn, g[2] / gn];
    let phi0 = geom.phi(x);
    let toward = if phi0 > 0.0 { -1.0 } else { 1.0 };
    let mut step = phi0.abs() / gn;
    let (mut a, mut b) = (0.0, 0.0);
    let mut found = false;
    for _ in 0..60 {
        b = toward * step;
        if geom.phi(axpy(b, dir, x)).signum() != phi0.signum() {
            found = true;
            break;
        }
        a = b;
        step *= 2.0;
    }
    if !found {
        return Err(fail("no sign change along the normal".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let pm = axpy(mid, dir, x);
        let phi = geom.phi(pm);
        if phi.abs() <= SURFACE_TOL {
            return Ok(pm);
        }
        if phi.signum() == phi0.signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    Err(fail("bisection did not reach the surface tolerance".into()))
}

/// One point on Γ per γ₋ node.
#[derive(Clone, Debug)]
pub struct BoundaryCollocation {
    /// `(position in γ₋, point on Γ)`.
    pub pairs: Vec<(usize, Point3)>,
}

impl BoundaryCollocation {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = Point3> + '_ {
        self.pairs.iter().map(|&(_, p)| p)
    }
}

/// How the boundary point paired with a γ₋ node is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollocationMode {
    /// Closest-point projection of the node along `∇φ`.
    Normal,
    /// Crossing of Γ with the grid edge from the node to an `M⁺` neighbour,
    /// taking the edge best aligned with `∇φ`. The hat support of such a
    /// point is the edge's two endpoints, both in γ.
    #[default]
    GridLine,
}

impl std::str::FromStr for CollocationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(CollocationMode::Normal),
            "gridline" => Ok(CollocationMode::GridLine),
            _ => Err(Error::Config(format!("unknown collocation mode `{s}`"))),
        }
    }
}

/// Projects every γ₋ node onto Γ along `∇φ`. Projections further than `2h`
/// from their node are rejected.
pub fn build_collocation(cls: &GridClassification, geom: &dyn LevelSet) -> Result<BoundaryCollocation> {
    build_collocation_with(cls, geom, CollocationMode::Normal)
}

/// Root of `φ` on the segment `[a, b]`, given `φ(a) > 0 ≥ φ(b)`.
fn edge_crossing(a: Point3, b: Point3, geom: &dyn LevelSet) -> Result<Point3> {
    let at = |t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])];
    let (mut lo, mut hi) = (0.0, 1.0);
    let (mut flo, mut fhi) = (geom.phi(a), geom.phi(b));
    if fhi.abs() <= SURFACE_TOL {
        return Ok(b);
    }
    if !(flo > 0.0 && fhi < 0.0) {
        return Err(Error::Projection {
            node: None,
            reason: format!("no sign change on edge: φ = {flo:e}, {fhi:e}"),
        });
    }
    // Regula falsi with the Illinois modification.
    let mut side = 0;
    for _ in 0..200 {
        let t = (lo * fhi - hi * flo) / (fhi - flo);
        let ft = geom.phi(at(t));
        if ft.abs() <= SURFACE_TOL || hi - lo < 1e-15 {
            return Ok(at(t));
        }
        if ft > 0.0 {
            lo = t;
            flo = ft;
            if side == 1 {
                fhi *= 0.5;
            }
            side = 1;
        } else {
            hi = t;
            fhi = ft;
            if side == -1 {
                flo *= 0.5;
            }
            side = -1;
        }
    }
    Err(Error::Projection {
        node: None,
        reason: "edge root search did not converge".into(),
    })
}

/// One boundary point per γ₋ node, chosen by `mode`.
pub fn build_collocation_with(
    cls: &GridClassification,
    geom: &dyn LevelSet,
    mode: CollocationMode,
) -> Result<BoundaryCollocation> {
    let grid = &cls.grid;
    let mut pairs = Vec::with_capacity(cls.gamma_minus().len());
    for (slot, &idx) in cls.gamma_minus().iter().enumerate() {
        let ijk = grid.ijk(idx);
        let x = grid.point(ijk);
        let tag = |e: Error| match e {
            Error::Projection { reason, .. } => Error::Projection { node: Some(ijk), reason },
            other => other,
        };
        let p = match mode {
            CollocationMode::Normal => closest_point_projection(x, geom).map_err(tag)?,
            CollocationMode::GridLine => {
                let g = geom.grad(x);
                let target = grid
                    .neighbors(ijk)
                    .filter(|&m| cls.is_inside(grid.index(m)))
                    .max_by(|&m1, &m2| {
                        let align = |m: [usize; 3]| {
                            (0..3).map(|d| (m[d] as f64 - ijk[d] as f64) * -g[d]).sum::<f64>()
                        };
                        align(m1).total_cmp(&align(m2))
                    })
                    .expect("γ₋ nodes have an interior neighbour");
                edge_crossing(x, grid.point(target), geom).map_err(tag)?
            }
        };
        if distance(p, x) > 2.0 * grid.h {
            return Err(Error::Projection {
                node: Some(ijk),
                reason: format!("projection moved {:.3e} > 2h", distance(p, x)),
            });
        }
        pairs.push((slot, p));
    }

    let mut sorted: Vec<Point3> = pairs.iter().map(|&(_, p)| p).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite points"));
    let dupes = sorted.windows(2).filter(|w| distance(w[0], w[1]) <= 1e-10 * grid.h).count();
    if dupes > 0 {
        warn!("{dupes} pairs of γ₋ nodes project to coincident boundary points");
    }
    Ok(BoundaryCollocation { pairs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_setup() -> (AuxiliaryBox, Shape, GridClassification) {
        let grid = AuxiliaryBox::new(0.25, 4).unwrap();
        let s = Shape::Sphere { radius: 0.5 };
        let cls = classify(&grid, &s).unwrap();
        (grid, s, cls)
    }

    #[test]
    fn box_dimensions() {
        let b = AuxiliaryBox::new(0.25, 4).unwrap();
        assert_eq!(b.n, 15);
        assert!((b.h - 2.5 / 15.0).abs() < 1e-15);
        assert!((b.coord(7)).abs() < 1e-14);
        assert_eq!(b.ijk(b.index([3, 4, 5])), [3, 4, 5]);
    }

    #[test]
    fn m_plus_count_matches_enumeration() {
        let (grid, s, cls) = sphere_setup();
        let mut brute = 0;
        for i in 0..grid.n {
            for j in 0..grid.n {
                for k in 0..grid.n {
                    let [x, y, z] = grid.point([i, j, k]);
                    // Nodes on the sphere up to rounding count as interior.
                    if x * x + y * y + z * z < 0.25 * (1.0 + 1e-14) {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(cls.m_plus_count(), brute);
        let _ = s;
    }

    #[test]
    fn origin_is_interior() {
        let (grid, _, cls) = sphere_setup();
        assert_eq!(cls.tag(grid.index([7, 7, 7])), NodeTag::Mplus);
    }

    #[test]
    fn gamma_sets_partition_intersection() {
        let (grid, _, cls) = sphere_setup();
        for idx in 0..grid.len() {
            let in_gamma = cls.in_n_plus(idx) && cls.in_n_minus(idx);
            match cls.gamma_slot(idx) {
                Some(GammaSlot::Plus(s)) => {
                    assert!(in_gamma && cls.is_inside(idx));
                    assert_eq!(cls.gamma_plus()[s], idx);
                }
                Some(GammaSlot::Minus(s)) => {
                    assert!(in_gamma && !cls.is_inside(idx));
                    assert_eq!(cls.gamma_minus()[s], idx);
                }
                None => assert!(!in_gamma),
            }
        }
        assert!(cls.gamma_plus().windows(2).all(|w| w[0] < w[1]));
        assert!(cls.gamma_minus().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn stencil_closure() {
        let (grid, _, cls) = sphere_setup();
        for idx in 0..grid.len() {
            let n_plus = cls.is_inside(idx) || matches!(cls.gamma_slot(idx), Some(GammaSlot::Minus(_)));
            assert_eq!(cls.in_n_plus(idx), n_plus);
            let n_minus = !cls.is_inside(idx) || matches!(cls.gamma_slot(idx), Some(GammaSlot::Plus(_)));
            assert_eq!(cls.in_n_minus(idx), n_minus);
        }
    }

    #[test]
    fn touching_the_box_is_rejected() {
        let grid = AuxiliaryBox::new(0.0, 4).unwrap();
        let s = Shape::Sphere { radius: 1.0 };
        assert!(matches!(classify(&grid, &s), Err(Error::Geometry(_))));
    }

    #[test]
    fn projections_on_axes() {
        let close = |a: Point3, b: Point3| distance(a, b) < 1e-12;
        let s = Shape::Sphere { radius: 0.5 };
        assert!(close(closest_point_projection([0.6, 0.0, 0.0], &s).unwrap(), [0.5, 0.0, 0.0]));
        let e = Shape::Ellipsoid { a: 1.0, b: 0.8, c: 0.4 };
        assert!(close(closest_point_projection([1.05, 0.0, 0.0], &e).unwrap(), [1.0, 0.0, 0.0]));
        let t = Shape::Torus { major: 0.6, minor: 0.3 };
        assert!(close(closest_point_projection([0.95, 0.0, 0.0], &t).unwrap(), [0.9, 0.0, 0.0]));
    }

    #[test]
    fn collocation_one_point_per_minus_node() {
        let (grid, s, cls) = sphere_setup();
        let col = build_collocation(&cls, &s).unwrap();
        assert_eq!(col.len(), cls.gamma_minus().len());
        for (slot, p) in &col.pairs {
            assert!(s.phi(*p).abs() <= SURFACE_TOL);
            let node = grid.point(grid.ijk(cls.gamma_minus()[*slot]));
            assert!(distance(node, *p) <= 2.0 * grid.h);
        }
        let pts: Vec<Point3> = col.points().collect();
        for a in 0..pts.len() {
            for b in a + 1..pts.len() {
                assert!(distance(pts[a], pts[b]) > 1e-10 * grid.h);
            }
        }
    }

    #[test]
    fn gridline_points_sit_on_inward_edges() {
        let (grid, s, cls) = sphere_setup();
        let col = build_collocation_with(&cls, &s, CollocationMode::GridLine).unwrap();
        assert_eq!(col.len(), cls.gamma_minus().len());
        for (slot, p) in &col.pairs {
            assert!(s.phi(*p).abs() <= SURFACE_TOL);
            let ijk = grid.ijk(cls.gamma_minus()[*slot]);
            let node = grid.point(ijk);
            let moved: Vec<usize> = (0..3).filter(|&d| (p[d] - node[d]).abs() > 0.0).collect();
            assert!(moved.len() <= 1);
            if let Some(&d) = moved.first() {
                assert!((p[d] - node[d]).abs() <= grid.h * (1.0 + 1e-12));
                let mut m = ijk;
                m[d] = if p[d] > node[d] { m[d] + 1 } else { m[d] - 1 };
                assert!(cls.is_inside(grid.index(m)));
            }
        }
    }

    #[test]
    fn collocation_modes_parse() {
        assert_eq!("normal".parse::<CollocationMode>().unwrap(), CollocationMode::Normal);
        assert_eq!("gridline".parse::<CollocationMode>().unwrap(), CollocationMode::GridLine);
        assert!("edge".parse::<CollocationMode>().is_err());
    }

    #[test]
    fn classification_is_deterministic() {
        let (grid, s, cls) = sphere_setup();
        let again = classify(&grid, &s).unwrap();
        assert_eq!(cls.gamma_plus(), again.gamma_plus());
        assert_eq!(cls.gamma_minus(), again.gamma_minus());
    }

    #[test]
    fn debug_dump_has_one_line_per_node() {
        let (grid, _, cls) = sphere_setup();
        let mut buf = Vec::new();
        cls.write_debug(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), grid.len());
        assert_eq!(text.lines().filter(|l| l.ends_with("g-")).count(), cls.gamma_minus().len());
    }
}
