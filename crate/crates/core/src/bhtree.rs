//! Barnes-Hut `2^D`-tree over the static reference cloud and the
//! θ-gated force evaluation it enables.
//!
//! Nodes live in one arena. Siblings are allocated contiguously, so a node
//! only stores the index of its first child and the number of non-empty
//! children. Points are referenced through a permutation of the input
//! indices so every node owns a contiguous range.

use std::fmt::Write as _;

use crate::error::{FgaError, Result};
use crate::masses::MassField;
use crate::types::{bounding_box, FgaParams, Point, PointCloud};

const NO_CHILD: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct BhNode<const D: usize> {
    pub bbox_min: Point<D>,
    pub bbox_max: Point<D>,
    /// Diagonal length of the bounding box.
    pub length: f64,
    pub mass: f64,
    pub com: Point<D>,
    pub depth: usize,
    /// Set iff the node is a leaf holding exactly one point.
    pub point_index: Option<usize>,
    pub occupancy: usize,
    /// Which orthant of the parent this node occupies (bit `k` set for the upper half on axis `k`).
    pub orthant: usize,
    first_child: u32,
    child_count: u8,
    start: u32,
    end: u32,
}

impl<const D: usize> BhNode<D> {
    pub fn is_leaf(&self) -> bool {
        self.child_count == 0
    }

    pub fn child_count(&self) -> usize {
        self.child_count as usize
    }
}

#[derive(Debug, Clone)]
pub struct BhTree<const D: usize> {
    nodes: Vec<BhNode<D>>,
    order: Vec<u32>,
    depth_cap: usize,
}

/// Counters collected during a force query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TraversalStats {
    pub visited: usize,
    pub summarized: usize,
    pub leaves: usize,
}

/// Pairwise softened attraction pulling `query` toward `source`, with the
/// `-G m_q` prefactor left to the caller.
#[inline]
fn kernel<const D: usize>(query: &Point<D>, source: &Point<D>, mass: f64, eps_sq: f64) -> Point<D> {
    let diff = query - source;
    let d2 = diff.norm_squared() + eps_sq;
    if d2 == 0.0 {
        return Point::<D>::zeros();
    }
    diff * (mass / (d2 * d2.sqrt()))
}

impl<const D: usize> BhTree<D> {
    /// Builds the tree by recursive subdivision at cell centers, stopping at
    /// singleton cells or at `max_depth`.
    pub fn build(reference: &PointCloud<D>, masses: &MassField, max_depth: usize) -> Result<Self> {
        let pts = reference.points();
        if pts.is_empty() {
            return Err(FgaError::EmptyCloud);
        }
        if masses.len() != pts.len() {
            return Err(FgaError::LengthMismatch { expected: pts.len(), actual: masses.len() });
        }
        if pts.len() >= u32::MAX as usize {
            return Err(FgaError::LengthMismatch { expected: u32::MAX as usize - 1, actual: pts.len() });
        }
        let (lo, hi) = bounding_box(pts).ok_or(FgaError::EmptyCloud)?;
        let mut tree = Self {
            nodes: Vec::with_capacity(2 * pts.len()),
            order: (0..pts.len() as u32).collect(),
            depth_cap: max_depth,
        };
        let root = tree.make_node(pts, masses.values(), lo, hi, 0, 0, 0, pts.len());
        tree.nodes.push(root);
        let mut scratch = vec![0u32; pts.len()];
        tree.subdivide(0, pts, masses.values(), &mut scratch);
        Ok(tree)
    }

    #[allow(clippy::too_many_arguments)]
    fn make_node(
        &self,
        pts: &[Point<D>],
        masses: &[f64],
        lo: Point<D>,
        hi: Point<D>,
        depth: usize,
        orthant: usize,
        start: usize,
        end: usize,
    ) -> BhNode<D> {
        let mut mass = 0.0;
        let mut weighted = Point::<D>::zeros();
        for &i in &self.order[start..end] {
            let m = masses[i as usize];
            mass += m;
            weighted += pts[i as usize] * m;
        }
        let occupancy = end - start;
        BhNode {
            bbox_min: lo,
            bbox_max: hi,
            length: (hi - lo).norm(),
            mass,
            com: weighted / mass,
            depth,
            point_index: (occupancy == 1).then(|| self.order[start] as usize),
            occupancy,
            orthant,
            first_child: NO_CHILD,
            child_count: 0,
            start: start as u32,
            end: end as u32,
        }
    }

    fn subdivide(&mut self, idx: usize, pts: &[Point<D>], masses: &[f64], scratch: &mut [u32]) {
        let (start, end, depth) = {
            let n = &self.nodes[idx];
            (n.start as usize, n.end as usize, n.depth)
        };
        if end - start <= 1 || depth >= self.depth_cap {
            return;
        }
        let lo = self.nodes[idx].bbox_min;
        let hi = self.nodes[idx].bbox_max;
        let center = lo + (hi - lo) / 2.0;
        let orthant_of = |p: &Point<D>| -> usize {
            (0..D).fold(0, |acc, k| acc | (((p[k] >= center[k]) as usize) << k))
        };

        // Stable counting sort of the node's range by orthant.
        let n_orth = 1usize << D;
        let mut counts = vec![0usize; n_orth + 1];
        for &i in &self.order[start..end] {
            counts[orthant_of(&pts[i as usize]) + 1] += 1;
        }
        for o in 0..n_orth {
            counts[o + 1] += counts[o];
        }
        let bounds = counts.clone();
        for &i in &self.order[start..end] {
            let o = orthant_of(&pts[i as usize]);
            scratch[start + counts[o]] = i;
            counts[o] += 1;
        }
        self.order[start..end].copy_from_slice(&scratch[start..end]);

        let first = self.nodes.len();
        let mut made = 0u8;
        for o in 0..n_orth {
            let (cs, ce) = (start + bounds[o], start + bounds[o + 1]);
            if cs == ce {
                continue;
            }
            let mut clo = lo;
            let mut chi = hi;
            for k in 0..D {
                if o >> k & 1 == 1 {
                    clo[k] = center[k];
                } else {
                    chi[k] = center[k];
                }
            }
            let child = self.make_node(pts, masses, clo, chi, depth + 1, o, cs, ce);
            self.nodes.push(child);
            made += 1;
        }
        self.nodes[idx].first_child = first as u32;
        self.nodes[idx].child_count = made;
        for c in first..first + made as usize {
            self.subdivide(c, pts, masses, scratch);
        }
    }

    pub fn root(&self) -> &BhNode<D> {
        &self.nodes[0]
    }

    pub fn nodes(&self) -> &[BhNode<D>] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth_cap(&self) -> usize {
        self.depth_cap
    }

    pub const fn dim(&self) -> usize {
        D
    }

    pub fn children(&self, node: &BhNode<D>) -> &[BhNode<D>] {
        if node.child_count == 0 {
            return &[];
        }
        let f = node.first_child as usize;
        &self.nodes[f..f + node.child_count as usize]
    }

    /// Indices of the reference points contained in `node`.
    pub fn contained(&self, node: &BhNode<D>) -> impl Iterator<Item = usize> + '_ {
        self.order[node.start as usize..node.end as usize].iter().map(|&i| i as usize)
    }

    /// Number of tree levels, counting the root as level 1.
    pub fn realized_depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0) + 1
    }

    /// Upper bound on the node count for `n` points in a tree with `levels` levels:
    /// `n + Σ_{d=1}^{levels-1} (2^D)^d + 1`.
    pub fn node_bound(n: usize, levels: usize) -> u128 {
        let branching = 1u128 << D;
        let mut sum = 0u128;
        let mut pow = 1u128;
        for _ in 1..levels {
            pow = pow.saturating_mul(branching);
            sum = sum.saturating_add(pow);
        }
        (n as u128).saturating_add(sum).saturating_add(1)
    }

    /// Approximate gravitational force on a particle of mass `query_mass` at `query`.
    pub fn bh_force(&self, query: &Point<D>, query_mass: f64, params: &FgaParams) -> Point<D> {
        self.bh_force_counted(query, query_mass, params).0
    }

    /// [`BhTree::bh_force`] plus traversal counters.
    pub fn bh_force_counted(
        &self,
        query: &Point<D>,
        query_mass: f64,
        params: &FgaParams,
    ) -> (Point<D>, TraversalStats) {
        let eps_sq = params.epsilon * params.epsilon;
        let theta = params.theta;
        let mut stats = TraversalStats::default();
        let mut acc = Point::<D>::zeros();
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i as usize];
            stats.visited += 1;
            if node.child_count == 0 {
                stats.leaves += 1;
                acc += kernel(query, &node.com, node.mass, eps_sq);
                continue;
            }
            let dist = (query - node.com).norm();
            if dist > 0.0 && node.length / dist < theta {
                stats.summarized += 1;
                acc += kernel(query, &node.com, node.mass, eps_sq);
                continue;
            }
            let f = node.first_child;
            for c in (f..f + node.child_count as u32).rev() {
                stack.push(c);
            }
        }
        (acc * (-params.g * query_mass), stats)
    }

    /// Indented text dump, one node per line in depth-first order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        self.dump_node(0, &mut out);
        out
    }

    fn dump_node(&self, idx: usize, out: &mut String) {
        let n = &self.nodes[idx];
        let fmt_vec = |v: &Point<D>| {
            v.iter().map(|c| format!("{c}")).collect::<Vec<_>>().join(",")
        };
        let _ = writeln!(
            out,
            "{}depth={} bbox=[{}]..[{}] mass={} occupancy={}",
            "  ".repeat(n.depth),
            n.depth,
            fmt_vec(&n.bbox_min),
            fmt_vec(&n.bbox_max),
            n.mass,
            n.occupancy
        );
        if n.child_count > 0 {
            let f = n.first_child as usize;
            for c in f..f + n.child_count as usize {
                self.dump_node(c, out);
            }
        }
    }
}

/// Exact `O(N)` gravitational force on `query` from every reference point.
pub fn brute_force<const D: usize>(
    reference: &PointCloud<D>,
    ref_masses: &MassField,
    query: &Point<D>,
    query_mass: f64,
    params: &FgaParams,
) -> Point<D> {
    let eps_sq = params.epsilon * params.epsilon;
    let acc = reference
        .points()
        .iter()
        .zip(ref_masses.values())
        .fold(Point::<D>::zeros(), |acc, (p, &m)| acc + kernel(query, p, m, eps_sq));
    acc * (-params.g * query_mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::default_params;
    use nalgebra::{Vector2, Vector3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_masses(n: usize) -> MassField {
        MassField::uniform(n, 1.0).unwrap()
    }

    fn random_cloud3(n: usize, rng: &mut ChaCha8Rng) -> PointCloud<3> {
        PointCloud::new(
            (0..n)
                .map(|_| Vector3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)))
                .collect(),
        )
    }

    #[test]
    fn single_point_is_one_leaf() {
        let c = PointCloud::<3>::from_rows(&[[1.0, 2.0, 3.0]]);
        let t = BhTree::build(&c, &MassField::uniform(1, 2.5).unwrap(), 20).unwrap();
        assert_eq!(t.node_count(), 1);
        assert_eq!(t.root().com, Vector3::new(1.0, 2.0, 3.0));
        assert_eq!(t.root().mass, 2.5);
        assert_eq!(t.root().point_index, Some(0));
        assert_eq!(t.dump().lines().count(), 1);
    }

    #[test]
    fn empty_cloud_is_rejected() {
        let c = PointCloud::<3>::new(vec![]);
        assert_eq!(BhTree::build(&c, &unit_masses(0), 20).unwrap_err(), FgaError::EmptyCloud);
    }

    #[test]
    fn one_point_per_octant() {
        let mut rows = Vec::new();
        for o in 0..8 {
            rows.push([
                if o & 1 == 1 { 1.0 } else { -1.0 },
                if o & 2 == 2 { 1.0 } else { -1.0 },
                if o & 4 == 4 { 1.0 } else { -1.0 },
            ]);
        }
        let c = PointCloud::<3>::from_rows(&rows);
        let t = BhTree::build(&c, &unit_masses(8), 20).unwrap();
        assert_eq!(t.realized_depth(), 2);
        assert_eq!(t.node_count(), 9);
        assert!(t.node_count() as u128 <= BhTree::<3>::node_bound(8, 2));
        assert_eq!(BhTree::<3>::node_bound(8, 2), 17);
        for child in t.children(t.root()) {
            assert_eq!(child.point_index, Some(child.orthant));
        }
    }

    #[test]
    fn duplicates_stop_at_depth_cap() {
        let c = PointCloud::<3>::from_rows(&[[0.5, 0.5, 0.5], [0.5, 0.5, 0.5]]);
        let t = BhTree::build(&c, &unit_masses(2), 20).unwrap();
        let deepest = t.nodes().iter().max_by_key(|n| n.depth).unwrap();
        assert_eq!(deepest.depth, 20);
        assert!(deepest.is_leaf());
        assert_eq!(deepest.occupancy, 2);
        assert_eq!(deepest.point_index, None);
        assert_eq!(t.node_count(), 21);
    }

    #[test]
    fn boundary_points_go_to_upper_child() {
        let c = PointCloud::<2>::from_rows(&[[0.0, 0.0], [1.0, 1.0], [0.5, 0.5]]);
        let t = BhTree::build(&c, &unit_masses(3), 20).unwrap();
        let kids = t.children(t.root());
        assert_eq!(kids.len(), 2);
        let upper = kids.iter().find(|k| k.orthant == 3).unwrap();
        assert_eq!(upper.occupancy, 2);
    }

    #[test]
    fn node_summaries_are_conserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let c = random_cloud3(500, &mut rng);
        let masses = MassField::new((0..500).map(|_| rng.random_range(0.1..3.0)).collect()).unwrap();
        let t = BhTree::build(&c, &masses, 20).unwrap();
        for node in t.nodes() {
            let direct_mass: f64 = t.contained(node).map(|i| masses.values()[i]).sum();
            assert!((node.mass - direct_mass).abs() <= 1e-9 * direct_mass);
            assert!((node.length - (node.bbox_max - node.bbox_min).norm()).abs() < 1e-15);
            if !node.is_leaf() {
                assert!(node.occupancy >= 2);
                let kids = t.children(node);
                let m: f64 = kids.iter().map(|k| k.mass).sum();
                let mc = kids.iter().fold(Vector3::zeros(), |a, k| a + k.com * k.mass);
                assert!((m - node.mass).abs() <= 1e-9 * node.mass);
                assert!((mc - node.com * node.mass).norm() <= 1e-9 * (node.com * node.mass).norm().max(1.0));
            }
        }
    }

    #[test]
    fn reference_force_value() {
        let c = PointCloud::<3>::from_rows(&[[1.0, 0.0, 0.0]]);
        let mut p = default_params();
        p.g = 1.0;
        p.epsilon = 0.2;
        let t = BhTree::build(&c, &unit_masses(1), 20).unwrap();
        let f = t.bh_force(&Vector3::zeros(), 1.0, &p);
        let expected = 1.0 / 1.04f64.powf(1.5);
        assert!((f.x - expected).abs() < 1e-12);
        assert!((expected - 0.94287).abs() < 1e-5);
        assert_eq!((f.y, f.z), (0.0, 0.0));
    }

    #[test]
    fn far_cell_is_summarized() {
        // Cell of diagonal 1 centered at (2, 0) seen from the origin: l/r = 0.5 < 0.6.
        let s = 1.0 / (2.0f64).sqrt() / 2.0;
        let c = PointCloud::<2>::new(vec![Vector2::new(2.0 - s, -s), Vector2::new(2.0 + s, s)]);
        let t = BhTree::build(&c, &unit_masses(2), 20).unwrap();
        assert!((t.root().length - 1.0).abs() < 1e-12);
        let mut p = default_params();
        p.theta = 0.6;
        let (_, stats) = t.bh_force_counted(&Vector2::zeros(), 1.0, &p);
        assert_eq!(stats.summarized, 1);
        assert_eq!(stats.visited, 1);
        p.theta = 0.5;
        let (_, stats) = t.bh_force_counted(&Vector2::zeros(), 1.0, &p);
        assert_eq!(stats.summarized, 0);
        assert_eq!(stats.leaves, 2);
    }

    #[test]
    fn theta_zero_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = random_cloud3(300, &mut rng);
        let masses = MassField::new((0..300).map(|_| rng.random_range(0.5..2.0)).collect()).unwrap();
        let t = BhTree::build(&c, &masses, 20).unwrap();
        let mut p = default_params();
        p.theta = 0.0;
        for _ in 0..20 {
            let q = Vector3::new(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0));
            let a = t.bh_force(&q, 1.3, &p);
            let b = brute_force(&c, &masses, &q, 1.3, &p);
            assert!((a - b).norm() <= 1e-12 * b.norm());
        }
    }

    #[test]
    fn dump_lists_every_node() {
        let c = PointCloud::<2>::from_rows(&[[0.0, 0.0], [1.0, 1.0], [0.2, 0.9]]);
        let t = BhTree::build(&c, &unit_masses(3), 20).unwrap();
        let dump = t.dump();
        assert_eq!(dump.lines().count(), t.node_count());
        assert!(dump.starts_with("depth=0 bbox=[0,0]..[1,1] mass=3 occupancy=3\n"));
    }
}
