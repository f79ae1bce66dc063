//! Finite hypercubic lattices, field configurations and plaquette holonomies.
//!
//! Sites are numbered lexicographically with axis 0 varying slowest. Edges are
//! listed by base site, then by axis; plaquettes by base site, then by the
//! axis pair `(a, b)` with `a < b`. These orders are fixed and every exported
//! table refers to them.

pub mod consistency;
pub mod subdivision;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::group::{GroupElement, GroupKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub dim: usize,
    pub extents: Vec<usize>,
    /// Refinement level `k`: edge length `2^{-k}`.
    pub level: u32,
    pub boundary: Boundary,
}

impl LatticeSpec {
    pub fn new(extents: Vec<usize>, level: u32, boundary: Boundary) -> Result<Self> {
        let dim = extents.len();
        if !(2..=4).contains(&dim) {
            return Err(invalid("dim", format!("must be 2, 3 or 4, got {dim}")));
        }
        if let Some(&l) = extents.iter().find(|&&l| l < 2) {
            return Err(invalid("extents", format!("every extent must be >= 2, got {l}")));
        }
        Ok(LatticeSpec {
            dim,
            extents,
            level,
            boundary,
        })
    }

    pub fn cubic(dim: usize, extent: usize, boundary: Boundary) -> Result<Self> {
        Self::new(vec![extent; dim], 0, boundary)
    }

    pub fn edge_length(&self) -> f64 {
        0.5f64.powi(self.level as i32)
    }

    pub fn n_sites(&self) -> Result<usize> {
        self.extents
            .iter()
            .try_fold(1usize, |acc, &l| acc.checked_mul(l))
            .ok_or(Error::IndexOverflow)
    }

    /// Number of edges along `axis` in one line of the lattice.
    fn links_per_line(&self, axis: usize) -> usize {
        match self.boundary {
            Boundary::Open => self.extents[axis] - 1,
            Boundary::Periodic => self.extents[axis],
        }
    }

    pub fn expected_edge_count(&self) -> Result<usize> {
        let n = self.n_sites()?;
        Ok((0..self.dim)
            .map(|a| n / self.extents[a] * self.links_per_line(a))
            .sum())
    }

    pub fn expected_plaquette_count(&self) -> Result<usize> {
        let n = self.n_sites()?;
        let mut total = 0;
        for a in 0..self.dim {
            for b in (a + 1)..self.dim {
                total += n / (self.extents[a] * self.extents[b])
                    * self.links_per_line(a)
                    * self.links_per_line(b);
            }
        }
        Ok(total)
    }

    /// The lattice one level finer covering the same region.
    pub fn refined(&self) -> LatticeSpec {
        let extents = self
            .extents
            .iter()
            .map(|&l| match self.boundary {
                Boundary::Open => 2 * l - 1,
                Boundary::Periodic => 2 * l,
            })
            .collect();
        LatticeSpec {
            dim: self.dim,
            extents,
            level: self.level + 1,
            boundary: self.boundary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub site: usize,
    pub axis: usize,
}

/// A unit square with edges `e1 = (x, a)`, `e2 = (x + â, b)`, `e3 = (x + b̂, a)`,
/// `e4 = (x, b)`; its holonomy is `h1 h2 h3⁻¹ h4⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlaquetteRef {
    pub site: usize,
    pub axes: (usize, usize),
    pub edges: [usize; 4],
    /// `+1` if the edge is traversed along its positive axis direction.
    pub signs: [i8; 4],
}

impl PlaquetteRef {
    pub const SIGNS: [i8; 4] = [1, 1, -1, -1];
}

#[derive(Debug, Clone)]
pub struct Lattice {
    spec: LatticeSpec,
    n_sites: usize,
    edges: Vec<Edge>,
    /// `site * dim + axis` → edge id.
    edge_lookup: Vec<Option<usize>>,
    plaquettes: Vec<PlaquetteRef>,
    edge_plaquettes: Vec<Vec<usize>>,
}

impl Lattice {
    pub fn build(spec: LatticeSpec) -> Result<Self> {
        let spec = LatticeSpec::new(spec.extents, spec.level, spec.boundary)?;
        let n_sites = spec.n_sites()?;
        let slots = n_sites.checked_mul(spec.dim).ok_or(Error::IndexOverflow)?;
        // plaquette ids must fit alongside edge ids in u32-sized tables downstream
        if slots > u32::MAX as usize {
            return Err(Error::IndexOverflow);
        }
        let mut lattice = Lattice {
            spec,
            n_sites,
            edges: Vec::new(),
            edge_lookup: vec![None; slots],
            plaquettes: Vec::new(),
            edge_plaquettes: Vec::new(),
        };
        let dim = lattice.spec.dim;
        for site in 0..n_sites {
            for axis in 0..dim {
                if lattice.shift(site, axis, 1).is_some() {
                    lattice.edge_lookup[site * dim + axis] = Some(lattice.edges.len());
                    lattice.edges.push(Edge { site, axis });
                }
            }
        }
        lattice.edge_plaquettes = vec![Vec::new(); lattice.edges.len()];
        for site in 0..n_sites {
            for a in 0..dim {
                for b in (a + 1)..dim {
                    let (Some(xa), Some(xb)) = (lattice.shift(site, a, 1), lattice.shift(site, b, 1))
                    else {
                        continue;
                    };
                    let edges = [
                        lattice.edge_id(site, a),
                        lattice.edge_id(xa, b),
                        lattice.edge_id(xb, a),
                        lattice.edge_id(site, b),
                    ];
                    let [Some(e1), Some(e2), Some(e3), Some(e4)] = edges else {
                        continue;
                    };
                    let id = lattice.plaquettes.len();
                    for e in [e1, e2, e3, e4] {
                        lattice.edge_plaquettes[e].push(id);
                    }
                    lattice.plaquettes.push(PlaquetteRef {
                        site,
                        axes: (a, b),
                        edges: [e1, e2, e3, e4],
                        signs: PlaquetteRef::SIGNS,
                    });
                }
            }
        }
        debug_assert_eq!(lattice.edges.len(), lattice.spec.expected_edge_count()?);
        debug_assert_eq!(lattice.plaquettes.len(), lattice.spec.expected_plaquette_count()?);
        Ok(lattice)
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn plaquettes(&self) -> &[PlaquetteRef] {
        &self.plaquettes
    }

    /// Plaquettes containing edge `e`.
    pub fn plaquettes_of(&self, e: usize) -> &[usize] {
        &self.edge_plaquettes[e]
    }

    pub fn site_coords(&self, mut site: usize) -> Vec<usize> {
        let mut coords = vec![0; self.spec.dim];
        for a in (0..self.spec.dim).rev() {
            coords[a] = site % self.spec.extents[a];
            site /= self.spec.extents[a];
        }
        coords
    }

    pub fn site_index(&self, coords: &[usize]) -> Option<usize> {
        if coords.len() != self.spec.dim {
            return None;
        }
        let mut idx = 0;
        for (a, &c) in coords.iter().enumerate() {
            if c >= self.spec.extents[a] {
                return None;
            }
            idx = idx * self.spec.extents[a] + c;
        }
        Some(idx)
    }

    /// Site reached by `steps` unit moves along `axis`; `None` if it leaves an
    /// open lattice.
    pub fn shift(&self, site: usize, axis: usize, steps: isize) -> Option<usize> {
        let mut coords = self.site_coords(site);
        let l = self.spec.extents[axis] as isize;
        let c = coords[axis] as isize + steps;
        coords[axis] = match self.spec.boundary {
            Boundary::Open if c < 0 || c >= l => return None,
            Boundary::Open => c as usize,
            Boundary::Periodic => c.rem_euclid(l) as usize,
        };
        self.site_index(&coords)
    }

    pub fn edge_id(&self, site: usize, axis: usize) -> Option<usize> {
        self.edge_lookup
            .get(site * self.spec.dim + axis)
            .copied()
            .flatten()
    }

    /// Index of the plaquette based at `site` in plane `(a, b)`, `a < b`.
    pub fn plaquette_at(&self, site: usize, a: usize, b: usize) -> Option<usize> {
        let e = self.edge_id(site, a)?;
        self.edge_plaquettes[e]
            .iter()
            .copied()
            .find(|&p| self.plaquettes[p].site == site && self.plaquettes[p].axes == (a, b))
    }

    /// Oriented edges of the `r × t` rectangle based at `site` in plane
    /// `(a, b)`: `r` steps along `a`, `t` along `b`, then back.
    pub fn rectangle_loop(
        &self,
        site: usize,
        a: usize,
        b: usize,
        r: usize,
        t: usize,
    ) -> Result<Vec<(usize, bool)>> {
        let misfit = || Error::LoopDoesNotFit { r, t };
        if a >= self.dim() || b >= self.dim() || a == b || r == 0 || t == 0 {
            return Err(misfit());
        }
        let step = |x: usize, axis: usize, n: usize| -> Result<Vec<usize>> {
            let mut out = Vec::with_capacity(n);
            let mut cur = x;
            for _ in 0..n {
                out.push(self.edge_id(cur, axis).ok_or_else(misfit)?);
                cur = self.shift(cur, axis, 1).ok_or_else(misfit)?;
            }
            Ok(out)
        };
        let corner_a = self.shift(site, a, r as isize).ok_or_else(misfit)?;
        let corner_b = self.shift(site, b, t as isize).ok_or_else(misfit)?;
        if self.spec.boundary == Boundary::Periodic
            && (r >= self.spec.extents[a] || t >= self.spec.extents[b])
        {
            return Err(misfit());
        }
        let mut path = Vec::with_capacity(2 * (r + t));
        path.extend(step(site, a, r)?.into_iter().map(|e| (e, true)));
        path.extend(step(corner_a, b, t)?.into_iter().map(|e| (e, true)));
        path.extend(step(corner_b, a, r)?.into_iter().rev().map(|e| (e, false)));
        path.extend(step(site, b, t)?.into_iter().rev().map(|e| (e, false)));
        Ok(path)
    }
}

/// An assignment of a group element to every edge, in lattice edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldConfig {
    pub kind: GroupKind,
    pub links: Vec<GroupElement>,
}

impl FieldConfig {
    pub fn identity(kind: GroupKind, lattice: &Lattice) -> Self {
        FieldConfig {
            kind,
            links: vec![kind.identity(); lattice.edges().len()],
        }
    }

    pub fn random<R: Rng + ?Sized>(kind: GroupKind, lattice: &Lattice, rng: &mut R) -> Self {
        FieldConfig {
            kind,
            links: (0..lattice.edges().len()).map(|_| kind.haar_sample(rng)).collect(),
        }
    }

    fn link(&self, e: usize) -> Result<&GroupElement> {
        self.links.get(e).ok_or(Error::MissingEdge(e))
    }

    /// Ordered product of an oriented edge path.
    pub fn path_product(&self, path: &[(usize, bool)]) -> Result<GroupElement> {
        let mut acc = self.kind.identity();
        for &(e, forward) in path {
            let h = self.link(e)?;
            acc = acc.multiply(&if forward { *h } else { h.inverse() })?;
        }
        Ok(acc)
    }

    pub fn plaquette_product(&self, p: &PlaquetteRef) -> Result<GroupElement> {
        let path: [(usize, bool); 4] =
            std::array::from_fn(|i| (p.edges[i], p.signs[i] > 0));
        self.path_product(&path)
    }

    /// `h_e → g(start) h_e g(end)⁻¹` for a site field `g`.
    pub fn gauge_transform(&self, lattice: &Lattice, g: &[GroupElement]) -> Result<FieldConfig> {
        if g.len() != lattice.n_sites() {
            return Err(invalid("gauge", "one element per site required"));
        }
        let mut links = Vec::with_capacity(self.links.len());
        for (id, edge) in lattice.edges().iter().enumerate() {
            let end = lattice
                .shift(edge.site, edge.axis, 1)
                .ok_or(Error::MissingEdge(id))?;
            links.push(g[edge.site].multiply(self.link(id)?)?.multiply(&g[end].inverse())?);
        }
        Ok(FieldConfig {
            kind: self.kind,
            links,
        })
    }
}

fn check_alignment(fine: &Lattice, coarse: &Lattice) -> Result<()> {
    let expected = coarse.spec().refined();
    if fine.spec() != &expected {
        return Err(Error::Alignment(format!(
            "fine lattice {:?} is not the refinement {:?} of the coarse one",
            fine.spec(),
            expected
        )));
    }
    Ok(())
}

fn fine_halves(fine: &Lattice, coarse: &Lattice, edge: &Edge) -> Result<(usize, usize)> {
    let coords: Vec<usize> = coarse.site_coords(edge.site).iter().map(|c| 2 * c).collect();
    let site = fine
        .site_index(&coords)
        .ok_or_else(|| Error::Alignment(format!("coarse site {} has no image", edge.site)))?;
    let mid = fine
        .shift(site, edge.axis, 1)
        .ok_or_else(|| Error::Alignment("half edge leaves the lattice".into()))?;
    let first = fine.edge_id(site, edge.axis);
    let second = fine.edge_id(mid, edge.axis);
    match (first, second) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::Alignment("missing half edge".into())),
    }
}

/// Restricts a configuration to the next coarser lattice: each coarse edge
/// gets the ordered product of its two fine halves.
pub fn project_config(
    fine_config: &FieldConfig,
    fine: &Lattice,
    coarse: &Lattice,
) -> Result<FieldConfig> {
    check_alignment(fine, coarse)?;
    if fine_config.links.len() != fine.edges().len() {
        return Err(Error::Alignment(format!(
            "config has {} links, lattice has {} edges",
            fine_config.links.len(),
            fine.edges().len()
        )));
    }
    let links = coarse
        .edges()
        .iter()
        .map(|edge| {
            let (a, b) = fine_halves(fine, coarse, edge)?;
            fine_config.links[a].multiply(&fine_config.links[b])
        })
        .collect::<Result<_>>()?;
    Ok(FieldConfig {
        kind: fine_config.kind,
        links,
    })
}

/// A fine configuration projecting onto `coarse_config`: the whole coarse
/// holonomy on the first half edge, identity everywhere else.
pub fn canonical_lift(
    coarse_config: &FieldConfig,
    coarse: &Lattice,
    fine: &Lattice,
) -> Result<FieldConfig> {
    check_alignment(fine, coarse)?;
    let mut lifted = FieldConfig::identity(coarse_config.kind, fine);
    for (id, edge) in coarse.edges().iter().enumerate() {
        let (a, _) = fine_halves(fine, coarse, edge)?;
        lifted.links[a] = *coarse_config.link(id)?;
    }
    Ok(lifted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn build(extents: &[usize], boundary: Boundary) -> Lattice {
        Lattice::build(LatticeSpec::new(extents.to_vec(), 0, boundary).unwrap()).unwrap()
    }

    #[test]
    fn count_examples() {
        let l = build(&[2, 2], Boundary::Open);
        assert_eq!((l.edges().len(), l.plaquettes().len()), (4, 1));
        let l = build(&[3, 3], Boundary::Open);
        assert_eq!((l.edges().len(), l.plaquettes().len()), (12, 4));
        let l = build(&[2, 2, 2, 2], Boundary::Periodic);
        assert_eq!((l.edges().len(), l.plaquettes().len()), (64, 96));
    }

    #[test]
    fn counts_match_closed_forms() {
        for boundary in [Boundary::Open, Boundary::Periodic] {
            for extents in [
                vec![2, 3],
                vec![5, 4],
                vec![3, 2, 4],
                vec![4, 4, 4],
                vec![2, 3, 2, 3],
                vec![3, 3, 3, 3],
            ] {
                let l = build(&extents, boundary);
                let n: usize = extents.iter().product();
                let d = extents.len();
                assert_eq!(l.edges().len(), l.spec().expected_edge_count().unwrap());
                assert_eq!(l.plaquettes().len(), l.spec().expected_plaquette_count().unwrap());
                if boundary == Boundary::Periodic {
                    assert_eq!(l.edges().len(), d * n);
                    assert_eq!(l.plaquettes().len(), d * (d - 1) / 2 * n);
                }
                assert!((0..l.edges().len()).all(|e| !l.plaquettes_of(e).is_empty()));
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(LatticeSpec::new(vec![4], 0, Boundary::Open).is_err());
        assert!(LatticeSpec::new(vec![2; 5], 0, Boundary::Open).is_err());
        assert!(LatticeSpec::new(vec![3, 1], 0, Boundary::Open).is_err());
        let huge = LatticeSpec {
            dim: 4,
            extents: vec![1 << 20; 4],
            level: 0,
            boundary: Boundary::Open,
        };
        assert!(matches!(Lattice::build(huge), Err(Error::IndexOverflow)));
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let l = build(&[3, 4], Boundary::Open);
        assert_eq!(l.site_coords(1), vec![0, 1]);
        assert_eq!(l.site_coords(4), vec![1, 0]);
        let first: Vec<_> = l.edges()[..3].iter().map(|e| (e.site, e.axis)).collect();
        assert_eq!(first, vec![(0, 0), (0, 1), (1, 0)]);
        for w in l.edges().windows(2) {
            assert!((w[0].site, w[0].axis) < (w[1].site, w[1].axis));
        }
        for w in l.plaquettes().windows(2) {
            assert!((w[0].site, w[0].axes) < (w[1].site, w[1].axes));
        }
    }

    #[test]
    fn plaquettes_close() {
        for boundary in [Boundary::Open, Boundary::Periodic] {
            let l = build(&[3, 2, 4], boundary);
            for p in l.plaquettes() {
                let (a, b) = p.axes;
                let e = |i: usize| l.edges()[p.edges[i]];
                assert_eq!((e(0).site, e(0).axis), (p.site, a));
                assert_eq!((e(1).site, e(1).axis), (l.shift(p.site, a, 1).unwrap(), b));
                assert_eq!((e(2).site, e(2).axis), (l.shift(p.site, b, 1).unwrap(), a));
                assert_eq!((e(3).site, e(3).axis), (p.site, b));
                // endpoints walk around the square back to the base site
                let mut at = p.site;
                for i in 0..4 {
                    let edge = e(i);
                    if p.signs[i] > 0 {
                        assert_eq!(edge.site, at);
                        at = l.shift(at, edge.axis, 1).unwrap();
                    } else {
                        assert_eq!(l.shift(edge.site, edge.axis, 1).unwrap(), at);
                        at = edge.site;
                    }
                }
                assert_eq!(at, p.site);
            }
        }
    }

    #[test]
    fn plaquette_product_examples() {
        let l = build(&[2, 2], Boundary::Open);
        let p = l.plaquettes()[0];
        let id = FieldConfig::identity(GroupKind::Circle, &l);
        assert_eq!(id.plaquette_product(&p).unwrap(), GroupElement::circle(0.0));
        let mut c = id.clone();
        for (i, t) in [0.3, 0.5, 0.2, 0.1].into_iter().enumerate() {
            c.links[p.edges[i]] = GroupElement::circle(t);
        }
        let theta = c.plaquette_product(&p).unwrap().as_angle().unwrap();
        assert!((theta - 0.5).abs() < 1e-15);
        let short = FieldConfig {
            kind: GroupKind::Circle,
            links: vec![],
        };
        assert!(matches!(short.plaquette_product(&p), Err(Error::MissingEdge(_))));
    }

    #[test]
    fn gauge_transform_preserves_plaquette_classes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for kind in [GroupKind::Circle, GroupKind::UnitQuaternion] {
            let l = build(&[3, 3, 3], Boundary::Periodic);
            let c = FieldConfig::random(kind, &l, &mut rng);
            let g: Vec<_> = (0..l.n_sites()).map(|_| kind.haar_sample(&mut rng)).collect();
            let t = c.gauge_transform(&l, &g).unwrap();
            for p in l.plaquettes() {
                let a = c.plaquette_product(p).unwrap().class_angle();
                let b = t.plaquette_product(p).unwrap().class_angle();
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rectangle_loops() {
        let l = build(&[4, 4], Boundary::Open);
        let path = l.rectangle_loop(0, 0, 1, 1, 1).unwrap();
        let p = l.plaquettes()[0];
        let expected: Vec<_> = (0..4).map(|i| (p.edges[i], p.signs[i] > 0)).collect();
        assert_eq!(path, expected);
        assert_eq!(l.rectangle_loop(0, 0, 1, 3, 2).unwrap().len(), 10);
        assert!(l.rectangle_loop(0, 0, 1, 4, 1).is_err());
        assert!(l.rectangle_loop(l.site_index(&[2, 2]).unwrap(), 0, 1, 2, 1).is_err());
        let per = build(&[4, 4], Boundary::Periodic);
        let s = per.site_index(&[3, 3]).unwrap();
        assert_eq!(per.rectangle_loop(s, 0, 1, 2, 2).unwrap().len(), 8);
        assert!(per.rectangle_loop(s, 0, 1, 4, 1).is_err());
    }

    #[test]
    fn projection_examples() {
        let coarse = build(&[2, 2], Boundary::Open);
        let fine = Lattice::build(coarse.spec().refined()).unwrap();
        assert_eq!(fine.spec().extents, vec![3, 3]);
        assert_eq!(fine.spec().level, 1);
        let mut fc = FieldConfig::identity(GroupKind::Circle, &fine);
        let c0 = coarse.edges()[0];
        let (a, b) = fine_halves(&fine, &coarse, &c0).unwrap();
        fc.links[a] = GroupElement::circle(0.2);
        fc.links[b] = GroupElement::circle(0.3);
        let proj = project_config(&fc, &fine, &coarse).unwrap();
        assert!((proj.links[0].as_angle().unwrap() - 0.5).abs() < 1e-15);
        let id = FieldConfig::identity(GroupKind::Circle, &fine);
        assert_eq!(
            project_config(&id, &fine, &coarse).unwrap(),
            FieldConfig::identity(GroupKind::Circle, &coarse)
        );
        assert!(matches!(
            project_config(&id, &fine, &fine),
            Err(Error::Alignment(_))
        ));
    }

    #[test]
    fn lift_is_a_section() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for kind in [GroupKind::Circle, GroupKind::UnitQuaternion] {
            for boundary in [Boundary::Open, Boundary::Periodic] {
                let coarse = build(&[3, 2, 2], boundary);
                let fine = Lattice::build(coarse.spec().refined()).unwrap();
                let c = FieldConfig::random(kind, &coarse, &mut rng);
                let back = project_config(&canonical_lift(&c, &coarse, &fine).unwrap(), &fine, &coarse)
                    .unwrap();
                for (x, y) in back.links.iter().zip(&c.links) {
                    assert!(x.multiply(&y.inverse()).unwrap().class_angle() < 1e-12);
                }
            }
        }
    }
}
