//! Grid functions, the 7-point operator, boundary densities and the hat-basis
//! closure matrices.

use crate::error::{Error, Result};
use crate::geometry::{AuxiliaryBox, BoundaryCollocation, GammaSlot, GridClassification};
use crate::Point3;

/// Values at the `N³` interior nodes of an auxiliary box.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: AuxiliaryBox,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: AuxiliaryBox) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: AuxiliaryBox, f: impl Fn(Point3) -> f64) -> Self {
        let values = (0..grid.len()).map(|idx| f(grid.point(grid.ijk(idx)))).collect();
        Self { grid, values }
    }

    pub fn from_values(grid: AuxiliaryBox, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn at(&self, ijk: [usize; 3]) -> f64 {
        self.values[self.grid.index(ijk)]
    }

    /// Values at γ₊ and γ₋.
    pub fn trace(&self, cls: &GridClassification) -> BoundaryDensity {
        BoundaryDensity {
            plus: cls.gamma_plus().iter().map(|&i| self.values[i]).collect(),
            minus: cls.gamma_minus().iter().map(|&i| self.values[i]).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// A grid function on γ, split as `(γ₊, γ₋)` in classification order.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryDensity {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

impl BoundaryDensity {
    pub fn zeros(cls: &GridClassification) -> Self {
        Self {
            plus: vec![0.0; cls.gamma_plus().len()],
            minus: vec![0.0; cls.gamma_minus().len()],
        }
    }

    pub fn new(cls: &GridClassification, plus: Vec<f64>, minus: Vec<f64>) -> Result<Self> {
        let d = Self { plus, minus };
        d.check(cls)?;
        Ok(d)
    }

    pub fn check(&self, cls: &GridClassification) -> Result<()> {
        if self.plus.len() != cls.gamma_plus().len() {
            return Err(Error::Shape {
                expected: cls.gamma_plus().len(),
                got: self.plus.len(),
            });
        }
        if self.minus.len() != cls.gamma_minus().len() {
            return Err(Error::Shape {
                expected: cls.gamma_minus().len(),
                got: self.minus.len(),
            });
        }
        Ok(())
    }

    pub fn get(&self, slot: GammaSlot) -> f64 {
        match slot {
            GammaSlot::Plus(i) => self.plus[i],
            GammaSlot::Minus(i) => self.minus[i],
        }
    }

    /// Zero extension to the whole grid.
    pub fn extend(&self, cls: &GridClassification) -> GridFunction {
        let mut g = GridFunction::zeros(cls.grid);
        for (&idx, &v) in cls.gamma_plus().iter().zip(&self.plus) {
            g.values[idx] = v;
        }
        for (&idx, &v) in cls.gamma_minus().iter().zip(&self.minus) {
            g.values[idx] = v;
        }
        g
    }

    pub fn sub(&self, other: &Self) -> Self {
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        Self {
            plus: d(&self.plus, &other.plus),
            minus: d(&self.minus, &other.minus),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect();
        Self {
            plus: d(&self.plus, &other.plus),
            minus: d(&self.minus, &other.minus),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.plus.iter().chain(&self.minus).fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `(L_h u)(n) = ((6 + σh²) u(n) - Σ u(n ± e_i)) / h²`, with zero values
/// outside the box.
pub fn apply_lh(u: &GridFunction, sigma: f64, h: f64) -> GridFunction {
    let grid = u.grid;
    let n = grid.n;
    let centre = 6.0 + sigma * h * h;
    let inv_h2 = 1.0 / (h * h);
    let v = &u.values;
    let mut out = vec![0.0; v.len()];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let idx = (i * n + j) * n + k;
                let mut s = 0.0;
                if i > 0 {
                    s += v[idx - n * n];
                }
                if i + 1 < n {
                    s += v[idx + n * n];
                }
                if j > 0 {
                    s += v[idx - n];
                }
                if j + 1 < n {
                    s += v[idx + n];
                }
                if k > 0 {
                    s += v[idx - 1];
                }
                if k + 1 < n {
                    s += v[idx + 1];
                }
                out[idx] = (centre * v[idx] - s) * inv_h2;
            }
        }
    }
    GridFunction { grid, values: out }
}

/// `χ_{M⁻} L_h w` for the zero extension `w` of a γ density.
pub fn masked_lh_of_extension(density: &BoundaryDensity, cls: &GridClassification, sigma: f64) -> GridFunction {
    let grid = cls.grid;
    let h = grid.h;
    let centre = 6.0 + sigma * h * h;
    let inv_h2 = 1.0 / (h * h);
    let mut out = GridFunction::zeros(grid);
    let mut scatter = |idx: usize, slot_value: f64| {
        let ijk = grid.ijk(idx);
        if !cls.is_inside(idx) {
            out.values[idx] += centre * slot_value * inv_h2;
        }
        for m in grid.neighbors(ijk) {
            let midx = grid.index(m);
            if !cls.is_inside(midx) {
                out.values[midx] -= slot_value * inv_h2;
            }
        }
    };
    for (&idx, &v) in cls.gamma_plus().iter().zip(&density.plus) {
        scatter(idx, v);
    }
    for (&idx, &v) in cls.gamma_minus().iter().zip(&density.minus) {
        scatter(idx, v);
    }
    out
}

/// Trilinear hat centred at `node`, supported on `(-h, h)³` around it.
pub fn hat_weight(node: Point3, point: Point3, h: f64) -> f64 {
    (0..3).map(|d| (1.0 - (point[d] - node[d]).abs() / h).max(0.0)).product()
}

/// How closure rows treat hat-support corners that are not γ nodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosureMode {
    /// Drop their weights; rows then only reference γ.
    #[default]
    Drop,
    /// Keep corners in `M⁺` (their values come from the potential) and
    /// replace corners outside `N⁺` by linear extrapolation along a grid
    /// line from two `N⁺` nodes.
    Extend,
}

impl std::str::FromStr for ClosureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "drop" => Ok(ClosureMode::Drop),
            "extend" => Ok(ClosureMode::Extend),
            _ => Err(Error::Config(format!("unknown closure mode `{s}`"))),
        }
    }
}

/// A grid node referenced by a closure row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClosureNode {
    Gamma(GammaSlot),
    /// Position in [`PhiMatrices::interior_nodes`]: an `M⁺` node off γ.
    Interior(usize),
}

/// Closure rows, one per collocation point: `Φ₊ v₊ + Φ₋ v₋ + Φ_I v_I`,
/// where `v_I` are values at the `M⁺ \ γ₊` nodes listed in `interior_nodes`
/// (empty for [`ClosureMode::Drop`]).
#[derive(Clone, Debug)]
pub struct PhiMatrices {
    pub rows: Vec<Vec<(ClosureNode, f64)>>,
    pub plus_cols: usize,
    pub minus_cols: usize,
    pub interior_nodes: Vec<usize>,
}

impl PhiMatrices {
    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn apply(&self, plus: &[f64], minus: &[f64], interior: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&(node, w)| {
                        w * match node {
                            ClosureNode::Gamma(GammaSlot::Plus(i)) => plus[i],
                            ClosureNode::Gamma(GammaSlot::Minus(i)) => minus[i],
                            ClosureNode::Interior(i) => interior[i],
                        }
                    })
                    .sum()
            })
            .collect()
    }

    /// Rows applied to a grid function sampled at the referenced nodes.
    pub fn apply_grid(&self, u: &GridFunction, cls: &GridClassification) -> Vec<f64> {
        let t = u.trace(cls);
        let interior: Vec<f64> = self.interior_nodes.iter().map(|&i| u.values[i]).collect();
        self.apply(&t.plus, &t.minus, &interior)
    }

    /// Rows whose eight hat-support corners are not all in γ.
    pub fn incomplete_rows(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| {
                let gamma: f64 = r.iter().filter(|e| matches!(e.0, ClosureNode::Gamma(_))).map(|e| e.1).sum();
                r.iter().any(|e| matches!(e.0, ClosureNode::Interior(_))) || (gamma - 1.0).abs() > 1e-12
            })
            .count()
    }
}

/// Hat-basis rows that only use γ nodes ([`ClosureMode::Drop`]).
pub fn build_phi_matrices(colloc: &BoundaryCollocation, cls: &GridClassification) -> Result<PhiMatrices> {
    build_closure(colloc, cls, ClosureMode::Drop)
}

/// Trilinear hat-basis rows at the collocation points.
pub fn build_closure(colloc: &BoundaryCollocation, cls: &GridClassification, mode: ClosureMode) -> Result<PhiMatrices> {
    let grid = &cls.grid;
    let h = grid.h;
    let n = grid.n as isize;
    let in_grid = |c: [isize; 3]| c.iter().all(|&v| (0..n).contains(&v));
    let to_idx = |c: [isize; 3]| grid.index([c[0] as usize, c[1] as usize, c[2] as usize]);
    let in_n_plus = |c: [isize; 3]| in_grid(c) && cls.in_n_plus(to_idx(c));

    let mut interior_nodes = Vec::new();
    let mut interior_slot = std::collections::HashMap::new();
    let mut rows = Vec::with_capacity(colloc.len());
    for &(slot, p) in &colloc.pairs {
        let base: Vec<isize> = (0..3).map(|d| ((p[d] - grid.lower()) / h - 0.5).floor() as isize).collect();
        let mut raw: Vec<([isize; 3], f64)> = Vec::with_capacity(16);
        for corner in 0..8 {
            let c = [
                base[0] + (corner >> 2 & 1),
                base[1] + (corner >> 1 & 1),
                base[2] + (corner & 1),
            ];
            if !in_grid(c) {
                continue;
            }
            let w = hat_weight(grid.point([c[0] as usize, c[1] as usize, c[2] as usize]), p, h);
            if w <= 1e-14 {
                continue;
            }
            match mode {
                ClosureMode::Drop => {
                    if cls.gamma_slot(to_idx(c)).is_some() {
                        raw.push((c, w));
                    }
                }
                ClosureMode::Extend => {
                    if in_n_plus(c) {
                        raw.push((c, w));
                        continue;
                    }
                    // Extrapolate from the grid line that points most towards p.
                    let xc = grid.point([c[0] as usize, c[1] as usize, c[2] as usize]);
                    let mut best: Option<([isize; 3], f64)> = None;
                    for d in 0..6 {
                        let mut e = [0isize; 3];
                        e[d / 2] = if d % 2 == 0 { -1 } else { 1 };
                        let c1 = [c[0] + e[0], c[1] + e[1], c[2] + e[2]];
                        let c2 = [c1[0] + e[0], c1[1] + e[1], c1[2] + e[2]];
                        if in_n_plus(c1) && in_n_plus(c2) {
                            let score = e[d / 2] as f64 * (p[d / 2] - xc[d / 2]);
                            if best.is_none_or(|(_, s)| score > s) {
                                best = Some((e, score));
                            }
                        }
                    }
                    if let Some((e, _)) = best {
                        let c1 = [c[0] + e[0], c[1] + e[1], c[2] + e[2]];
                        let c2 = [c1[0] + e[0], c1[1] + e[1], c1[2] + e[2]];
                        raw.push((c1, 2.0 * w));
                        raw.push((c2, -w));
                    }
                }
            }
        }
        let mut row: Vec<(ClosureNode, f64)> = Vec::with_capacity(raw.len());
        for (c, w) in raw {
            let idx = to_idx(c);
            let node = match cls.gamma_slot(idx) {
                Some(s) => ClosureNode::Gamma(s),
                None => ClosureNode::Interior(*interior_slot.entry(idx).or_insert_with(|| {
                    interior_nodes.push(idx);
                    interior_nodes.len() - 1
                })),
            };
            match row.iter_mut().find(|e| e.0 == node) {
                Some(e) => e.1 += w,
                None => row.push((node, w)),
            }
        }
        if row.is_empty() {
            return Err(Error::Closure(format!(
                "collocation point {p:?} of γ₋ node {slot} has no supporting γ node"
            )));
        }
        rows.push(row);
    }
    Ok(PhiMatrices {
        rows,
        plus_cols: cls.gamma_plus().len(),
        minus_cols: cls.gamma_minus().len(),
        interior_nodes,
    })
}
