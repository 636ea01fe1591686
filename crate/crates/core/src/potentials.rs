//! Matrix-free discrete layer potentials built from the lattice Green's
//! function.
//!
//! Every operator here is a lattice sum `v(m) = Σ_s ρ(s) G(m - s)` over a
//! fixed source set: the γ₋ nodes followed by the outer neighbours of γ₋ (the
//! `M⁻` nodes next to γ₋ that are not in γ). Only the charges `ρ` differ:
//!
//! * single layer: `ρ = q` on γ₋;
//! * double layer: `|𝔻_n| q(n)` at `n ∈ γ₋` and `-q(n)` at each `k ∈ 𝔻_n`;
//! * direct: `ρ = χ_{M⁻} L w` for the zero extension `w` of a γ density.
//!
//! All sums are on the unit lattice; the `h²` of `L_h` and `G_h` cancel.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{GammaSlot, GridClassification};
use crate::lattice_ops::BoundaryDensity;
use crate::lgf::LgfTable;

/// Largest `|γ|` for which dense assembly is allowed.
pub const DENSE_LIMIT: usize = 20_000;

/// For each γ₋ node `n`, the neighbours `𝔻_n` outside `N⁺`, as grid indices.
#[derive(Clone, Debug)]
pub struct OutsideNeighborSets {
    pub sets: Vec<Vec<usize>>,
}

impl OutsideNeighborSets {
    pub fn build(cls: &GridClassification) -> Self {
        let grid = &cls.grid;
        let sets = cls
            .gamma_minus()
            .iter()
            .map(|&idx| {
                grid.neighbors(grid.ijk(idx))
                    .map(|m| grid.index(m))
                    .filter(|&m| !cls.in_n_plus(m))
                    .collect()
            })
            .collect();
        Self { sets }
    }

    /// γ₋ slots with an empty `𝔻_n`.
    pub fn degenerate(&self) -> Vec<usize> {
        self.sets.iter().enumerate().filter(|(_, s)| s.is_empty()).map(|(i, _)| i).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layer {
    Single,
    Double,
}

/// The six boundary operators, named by layer and target set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerKind {
    /// `S₊ : γ₋ → γ₊`
    SinglePlus,
    /// `S₋ : γ₋ → γ₋`
    SingleMinus,
    /// `D₊ : γ₋ → γ₊`
    DoublePlus,
    /// `D₋ : γ₋ → γ₋`
    DoubleMinus,
    /// `P₊ : γ₊ → γ₊`, the γ₊ columns of the direct operator.
    DirectPplus,
    /// `P₋ : γ₋ → γ₊`, the γ₋ columns of the direct operator.
    DirectPminus,
}

impl LayerKind {
    fn domain_len(self, cls: &GridClassification) -> usize {
        match self {
            LayerKind::DirectPplus => cls.gamma_plus().len(),
            _ => cls.gamma_minus().len(),
        }
    }

    fn targets_minus(self) -> bool {
        matches!(self, LayerKind::SingleMinus | LayerKind::DoubleMinus)
    }
}

/// Row-major dense matrix, for small spectral checks.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

/// Source and target coordinates plus the table, checked once for extent.
pub struct Potentials<'a> {
    table: &'a LgfTable,
    cls: &'a GridClassification,
    sets: OutsideNeighborSets,
    /// γ₋ coordinates followed by the outer neighbours.
    sites: Vec<[i32; 3]>,
    /// Per γ₋ slot, the site indices of `𝔻_n`.
    outer_sites: Vec<Vec<usize>>,
    /// Grid index of each site.
    site_nodes: Vec<usize>,
    plus: Vec<[i32; 3]>,
    minus: Vec<[i32; 3]>,
    /// The table unfolded onto the octant `[0, E]³`, one load per pair.
    octant: Vec<f64>,
    octant_dim: usize,
    /// Site indices in lexicographic coordinate order, for cache locality.
    site_order: Vec<usize>,
}

fn coords(cls: &GridClassification, idx: usize) -> [i32; 3] {
    let [i, j, k] = cls.grid.ijk(idx);
    [i as i32, j as i32, k as i32]
}

fn span(a: &[[i32; 3]], b: &[[i32; 3]]) -> usize {
    let bounds = |pts: &[[i32; 3]]| {
        let mut lo = [i32::MAX; 3];
        let mut hi = [i32::MIN; 3];
        for p in pts {
            for d in 0..3 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    };
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let (alo, ahi) = bounds(a);
    let (blo, bhi) = bounds(b);
    (0..3).map(|d| (ahi[d] - blo[d]).max(bhi[d] - alo[d]).max(0) as usize).max().unwrap_or(0)
}

impl<'a> Potentials<'a> {
    /// `table` must hold the unit-lattice function for `σh²`.
    pub fn new(table: &'a LgfTable, cls: &'a GridClassification, sigma: f64) -> Result<Self> {
        let h = cls.grid.h;
        let s = sigma * h * h;
        if (table.sigma() - s).abs() > 1e-12 * s.max(1.0) {
            return Err(Error::Config(format!(
                "table built for σh² = {}, operator needs {s}",
                table.sigma()
            )));
        }
        let sets = OutsideNeighborSets::build(cls);
        let degenerate = sets.degenerate();
        if !degenerate.is_empty() {
            log::warn!("{} γ₋ nodes have no neighbours outside N⁺; using monopole charges for their double layer", degenerate.len());
        }
        let mut sites: Vec<[i32; 3]> = cls.gamma_minus().iter().map(|&i| coords(cls, i)).collect();
        let mut site_nodes: Vec<usize> = cls.gamma_minus().to_vec();
        let mut outer_index = std::collections::HashMap::new();
        let outer_sites = sets
            .sets
            .iter()
            .map(|set| {
                set.iter()
                    .map(|&k| {
                        *outer_index.entry(k).or_insert_with(|| {
                            sites.push(coords(cls, k));
                            site_nodes.push(k);
                            sites.len() - 1
                        })
                    })
                    .collect()
            })
            .collect();
        let plus: Vec<[i32; 3]> = cls.gamma_plus().iter().map(|&i| coords(cls, i)).collect();
        let minus: Vec<[i32; 3]> = cls.gamma_minus().iter().map(|&i| coords(cls, i)).collect();
        let need = span(&sites, &plus).max(span(&sites, &minus));
        if need > table.extent() {
            return Err(Error::OutOfExtent(need as i64, 0, 0, table.extent()));
        }
        let octant_dim = table.extent() + 1;
        let mut octant = Vec::with_capacity(octant_dim.pow(3));
        for x in 0..octant_dim as u32 {
            for y in 0..octant_dim as u32 {
                for z in 0..octant_dim as u32 {
                    octant.push(table.get_abs(x, y, z));
                }
            }
        }
        let mut site_order: Vec<usize> = (0..sites.len()).collect();
        site_order.sort_by_key(|&i| sites[i]);
        Ok(Self {
            site_order,
            table,
            cls,
            sets,
            sites,
            outer_sites,
            site_nodes,
            plus,
            minus,
            octant,
            octant_dim,
        })
    }

    pub fn classification(&self) -> &GridClassification {
        self.cls
    }

    pub fn outside_sets(&self) -> &OutsideNeighborSets {
        &self.sets
    }

    /// Number of source sites (γ₋ plus outer neighbours).
    pub fn site_count(&self) -> usize {
        self.sites.len()
    }

    /// `S(m, n) = G(m - n)` for grid nodes `m`, `n`.
    pub fn single_kernel(&self, m: usize, n: usize) -> Result<f64> {
        let (a, b) = (coords(self.cls, m), coords(self.cls, n));
        self.kernel(a, b)
    }

    fn kernel(&self, a: [i32; 3], b: [i32; 3]) -> Result<f64> {
        let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
        self.table.lookup([d[0] as i64, d[1] as i64, d[2] as i64].into())
    }

    /// `D(m, n) = Σ_{k ∈ 𝔻_n} G(m - n) - G(m - k)` for a grid node `m` and
    /// the γ₋ slot `n`. A node with empty `𝔻_n` falls back to the monopole
    /// `G(m - n)`, so its column never vanishes.
    pub fn double_kernel(&self, m: usize, n_slot: usize) -> Result<f64> {
        let a = coords(self.cls, m);
        let gn = self.kernel(a, self.sites[n_slot])?;
        if self.outer_sites[n_slot].is_empty() {
            return Ok(gn);
        }
        let mut v = 0.0;
        for &k in &self.outer_sites[n_slot] {
            v += gn - self.kernel(a, self.sites[k])?;
        }
        Ok(v)
    }

    /// Charges at the sites for a layer density on γ₋.
    pub fn layer_charges(&self, layer: Layer, q: &[f64]) -> Result<Vec<f64>> {
        let nm = self.cls.gamma_minus().len();
        if q.len() != nm {
            return Err(Error::Shape { expected: nm, got: q.len() });
        }
        let mut rho = vec![0.0; self.sites.len()];
        match layer {
            Layer::Single => rho[..nm].copy_from_slice(q),
            Layer::Double => {
                for (n, outer) in self.outer_sites.iter().enumerate() {
                    if outer.is_empty() {
                        rho[n] += q[n];
                        continue;
                    }
                    rho[n] += outer.len() as f64 * q[n];
                    for &k in outer {
                        rho[k] -= q[n];
                    }
                }
            }
        }
        Ok(rho)
    }

    /// Unit-lattice charges `χ_{M⁻} L w` of the zero extension `w` of a γ
    /// density: `(6+σh²) w(s)` at γ₋ sites, minus the γ neighbours of every
    /// site.
    pub fn direct_charges(&self, v: &BoundaryDensity) -> Result<Vec<f64>> {
        v.check(self.cls)?;
        let grid = &self.cls.grid;
        let centre = 6.0 + self.table.sigma();
        let nm = self.cls.gamma_minus().len();
        let rho = self
            .site_nodes
            .iter()
            .enumerate()
            .map(|(s, &node)| {
                let mut r = if s < nm { centre * v.minus[s] } else { 0.0 };
                for m in grid.neighbors(grid.ijk(node)) {
                    if let Some(slot) = self.cls.gamma_slot(grid.index(m)) {
                        r -= v.get(slot);
                    }
                }
                r
            })
            .collect();
        Ok(rho)
    }

    /// `Σ_s ρ(s) G(t - s)` at each target; sites with zero charge are skipped.
    pub fn evaluate(&self, rho: &[f64], targets: &[[i32; 3]]) -> Vec<f64> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut zs = Vec::new();
        let mut ws = Vec::new();
        for &i in &self.site_order {
            let (p, w) = (self.sites[i], rho[i]);
            if w != 0.0 {
                xs.push(p[0]);
                ys.push(p[1]);
                zs.push(p[2]);
                ws.push(w);
            }
        }
        let octant = &self.octant;
        let d = self.octant_dim;
        // Four targets per pass share each source load.
        const BLOCK: usize = 4;
        targets
            .par_chunks(BLOCK)
            .with_min_len(16)
            .flat_map_iter(|block| {
                let mut acc = [0.0; BLOCK];
                let mut t = [block[0]; BLOCK];
                t[..block.len()].copy_from_slice(block);
                for i in 0..ws.len() {
                    let (sx, sy, sz, w) = (xs[i], ys[i], zs[i], ws[i]);
                    for b in 0..BLOCK {
                        let x = (t[b][0] - sx).unsigned_abs() as usize;
                        let y = (t[b][1] - sy).unsigned_abs() as usize;
                        let z = (t[b][2] - sz).unsigned_abs() as usize;
                        acc[b] += w * octant[(x * d + y) * d + z];
                    }
                }
                acc.into_iter().take(block.len())
            })
            .collect()
    }

    /// Potential at arbitrary grid nodes; checks the table extent first.
    pub fn evaluate_at_nodes(&self, rho: &[f64], nodes: &[usize]) -> Result<Vec<f64>> {
        let targets: Vec<[i32; 3]> = nodes.iter().map(|&n| coords(self.cls, n)).collect();
        let need = span(&self.sites, &targets);
        if need > self.table.extent() {
            return Err(Error::OutOfExtent(need as i64, 0, 0, self.table.extent()));
        }
        Ok(self.evaluate(rho, &targets))
    }

    /// Layer potential restricted to γ₊ and γ₋ in one sweep.
    pub fn layer_trace(&self, layer: Layer, q: &[f64]) -> Result<BoundaryDensity> {
        let rho = self.layer_charges(layer, q)?;
        Ok(self.trace_of(&rho))
    }

    /// Potential of the charges `rho` on γ₊ and γ₋.
    pub fn trace_of(&self, rho: &[f64]) -> BoundaryDensity {
        let mut all = self.evaluate(rho, &[self.plus.as_slice(), self.minus.as_slice()].concat());
        let minus = all.split_off(self.plus.len());
        BoundaryDensity { plus: all, minus }
    }

    /// Applies one of the six boundary operators.
    pub fn apply_layer(&self, kind: LayerKind, x: &[f64]) -> Result<Vec<f64>> {
        let want = kind.domain_len(self.cls);
        if x.len() != want {
            return Err(Error::Shape { expected: want, got: x.len() });
        }
        let rho = match kind {
            LayerKind::SinglePlus | LayerKind::SingleMinus => self.layer_charges(Layer::Single, x)?,
            LayerKind::DoublePlus | LayerKind::DoubleMinus => self.layer_charges(Layer::Double, x)?,
            LayerKind::DirectPplus => {
                let d = BoundaryDensity { plus: x.to_vec(), minus: vec![0.0; self.minus.len()] };
                self.direct_charges(&d)?
            }
            LayerKind::DirectPminus => {
                let d = BoundaryDensity { plus: vec![0.0; self.plus.len()], minus: x.to_vec() };
                self.direct_charges(&d)?
            }
        };
        let targets = if kind.targets_minus() { &self.minus } else { &self.plus };
        Ok(self.evaluate(&rho, targets))
    }

    /// Trace on γ (γ₊ then γ₋) of the infinite-lattice potential of the unit
    /// density at the γ node `p_star`.
    pub fn direct_potential_column(&self, p_star: usize) -> Result<BoundaryDensity> {
        let slot = self
            .cls
            .gamma_slot(p_star)
            .ok_or_else(|| Error::Domain(format!("node {p_star} is not in γ")))?;
        let mut d = BoundaryDensity::zeros(self.cls);
        match slot {
            GammaSlot::Plus(i) => d.plus[i] = 1.0,
            GammaSlot::Minus(i) => d.minus[i] = 1.0,
        }
        let rho = self.direct_charges(&d)?;
        Ok(self.trace_of(&rho))
    }

    /// `v₊ - P̂_{γ₊} v`.
    pub fn apply_direct(&self, v: &BoundaryDensity) -> Result<Vec<f64>> {
        let rho = self.direct_charges(v)?;
        let p = self.evaluate(&rho, &self.plus);
        Ok(v.plus.iter().zip(p).map(|(a, b)| a - b).collect())
    }

    /// Dense form of an operator, column by column.
    pub fn assemble(&self, kind: LayerKind) -> Result<DenseMatrix> {
        let total = self.cls.gamma_len();
        if total > DENSE_LIMIT {
            return Err(Error::Config(format!(
                "dense assembly refused for |γ| = {total} > {DENSE_LIMIT}"
            )));
        }
        let cols = kind.domain_len(self.cls);
        let rows = if kind.targets_minus() { self.minus.len() } else { self.plus.len() };
        let mut data = vec![0.0; rows * cols];
        let mut e = vec![0.0; cols];
        for j in 0..cols {
            e[j] = 1.0;
            let col = self.apply_layer(kind, &e)?;
            e[j] = 0.0;
            for (i, v) in col.into_iter().enumerate() {
                data[i * cols + j] = v;
            }
        }
        Ok(DenseMatrix { rows, cols, data })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{classify, AuxiliaryBox, Shape};
    use crate::lgf::{build_table, LgfEvalConfig};

    fn setup(sigma: f64) -> (GridClassification, LgfTable) {
        let grid = AuxiliaryBox::new(0.25, 4).unwrap();
        let cls = classify(&grid, &Shape::Sphere { radius: 0.5 }).unwrap();
        let table = build_table(sigma * grid.h * grid.h, cls.required_extent(), &LgfEvalConfig::default(), None).unwrap();
        (cls, table)
    }

    #[test]
    fn outside_sets_lie_outside_n_plus() {
        let (cls, _) = setup(0.0);
        let sets = OutsideNeighborSets::build(&cls);
        assert_eq!(sets.sets.len(), cls.gamma_minus().len());
        for set in &sets.sets {
            assert!(set.len() <= 6);
            for &k in set {
                assert!(!cls.is_inside(k) && cls.gamma_slot(k).is_none());
            }
        }
    }

    #[test]
    fn kernels_match_lookup() {
        let (cls, table) = setup(0.0);
        let pot = Potentials::new(&table, &cls, 0.0).unwrap();
        let n = cls.gamma_minus()[0];
        assert_eq!(pot.single_kernel(n, n).unwrap(), table.get([0, 0, 0]));
        let m = cls.gamma_plus()[7];
        assert_eq!(pot.single_kernel(m, n).unwrap(), pot.single_kernel(n, m).unwrap());
    }

    #[test]
    fn apply_matches_kernels() {
        let (cls, table) = setup(0.0);
        let pot = Potentials::new(&table, &cls, 0.0).unwrap();
        let nm = cls.gamma_minus().len();
        let mut e = vec![0.0; nm];
        e[11] = 1.0;
        let s = pot.apply_layer(LayerKind::SinglePlus, &e).unwrap();
        let d = pot.apply_layer(LayerKind::DoubleMinus, &e).unwrap();
        for (i, &m) in cls.gamma_plus().iter().enumerate() {
            assert!((s[i] - pot.single_kernel(m, cls.gamma_minus()[11]).unwrap()).abs() < 1e-15);
        }
        for (i, &m) in cls.gamma_minus().iter().enumerate() {
            assert!((d[i] - pot.double_kernel(m, 11).unwrap()).abs() < 1e-14);
        }
        assert!(pot.apply_layer(LayerKind::DoublePlus, &vec![0.0; nm]).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn double_layer_reproduces_constants() {
        // For σ = 0, the double-layer charge of q ≡ 1 is L χ_{N⁺}, so the
        // potential is 1 on N⁺.
        let (cls, table) = setup(0.0);
        let pot = Potentials::new(&table, &cls, 0.0).unwrap();
        let one = vec![1.0; cls.gamma_minus().len()];
        let t = pot.layer_trace(Layer::Double, &one).unwrap();
        assert!(t.max_abs() > 0.5);
        for v in t.plus.iter().chain(&t.minus) {
            assert!((v - 1.0).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn s_minus_is_symmetric() {
        let (cls, table) = setup(10.0);
        let pot = Potentials::new(&table, &cls, 10.0).unwrap();
        let s = pot.assemble(LayerKind::SingleMinus).unwrap();
        for i in 0..s.rows {
            for j in 0..i {
                assert_eq!(s.get(i, j), s.get(j, i));
            }
        }
    }

    #[test]
    fn mismatched_table_rejected() {
        let (cls, table) = setup(0.0);
        assert!(matches!(Potentials::new(&table, &cls, 1.0), Err(Error::Config(_))));
        let small = build_table(0.0, 3, &LgfEvalConfig::default(), None).unwrap();
        assert!(matches!(Potentials::new(&small, &cls, 0.0), Err(Error::OutOfExtent(..))));
    }
}
