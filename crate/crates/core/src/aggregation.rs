//! Nonoverlapping aggregates, their overlapping extensions, Boolean
//! partition of unity, and a coloring of the aggregate adjacency graph.
//!
//! The strength graph is the full sparsity pattern of `A`; no strength of
//! connection filtering is applied. Scans run in ascending index order and
//! ties resolve to the lowest index, so results are deterministic.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, Pattern};

const UNASSIGNED: usize = usize::MAX;

/// Assignment of every node to exactly one aggregate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub assignment: Vec<usize>,
    pub n_aggregates: usize,
}

impl Partition {
    /// Validates that ids are dense in `0..n_aggregates` and every aggregate is nonempty.
    pub fn new(assignment: Vec<usize>) -> Result<Self> {
        let n_aggregates = assignment.iter().copied().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; n_aggregates];
        for &a in &assignment {
            seen[a] = true;
        }
        if let Some(empty) = seen.iter().position(|&s| !s) {
            return Err(Error::Input(format!("aggregate {empty} is empty")));
        }
        Ok(Self {
            assignment,
            n_aggregates,
        })
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Sorted member lists, one per aggregate.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_aggregates];
        for (node, &agg) in self.assignment.iter().enumerate() {
            out[agg].push(node);
        }
        out
    }

    /// Boolean tentative operator `T` (`n × n_aggregates`, `T[i, agg(i)] = 1`).
    pub fn tentative(&self) -> CsrMatrix {
        let n = self.assignment.len();
        CsrMatrix::from_csr(
            n,
            self.n_aggregates,
            (0..=n).collect(),
            self.assignment.clone(),
            vec![1.0; n],
        )
        .expect("assignment ids are in range")
    }
}

/// Greedy neighborhood aggregation on the pattern of `A`.
///
/// 1. Each node whose neighbors are all unaggregated seeds a new aggregate
///    made of itself and those neighbors.
/// 2. Each leftover node joins the aggregate of its neighbor with the largest
///    `|A_ij|` (lowest aggregate id on ties).
/// 3. Anything still unassigned becomes a singleton.
pub fn standard_aggregation(a: &CsrMatrix) -> Result<Partition> {
    let n = a.n_rows();
    if n == 0 || a.n_cols() != n {
        return Err(Error::Input(format!(
            "aggregation needs a nonempty square matrix, got {}x{}",
            a.n_rows(),
            a.n_cols()
        )));
    }
    let mut agg = vec![UNASSIGNED; n];
    let mut count = 0;

    for i in 0..n {
        if agg[i] != UNASSIGNED {
            continue;
        }
        let (cols, _) = a.row(i);
        if cols.iter().all(|&j| agg[j] == UNASSIGNED) {
            agg[i] = count;
            for &j in cols {
                agg[j] = count;
            }
            count += 1;
        }
    }

    // Pass 2 reads only pass-1 assignments so the result is order independent.
    let pass1 = agg.clone();
    for i in 0..n {
        if pass1[i] != UNASSIGNED {
            continue;
        }
        let (cols, vals) = a.row(i);
        let mut best: Option<(f64, usize)> = None;
        for (&j, &v) in cols.iter().zip(vals) {
            if j == i || pass1[j] == UNASSIGNED {
                continue;
            }
            let cand = (v.abs(), pass1[j]);
            best = match best {
                Some(b) if b.0 > cand.0 || (b.0 == cand.0 && b.1 <= cand.1) => Some(b),
                _ => Some(cand),
            };
        }
        if let Some((_, id)) = best {
            agg[i] = id;
        }
    }

    for slot in agg.iter_mut().filter(|s| **s == UNASSIGNED) {
        *slot = count;
        count += 1;
    }

    Ok(Partition {
        assignment: agg,
        n_aggregates: count,
    })
}

/// Aggregates aggregates: pass `k` aggregates `Tₖ₋₁ᵀ A Tₖ₋₁`, and the final
/// partition is the one whose Boolean operator is `T₁·…·T_{n_passes}`.
pub fn multi_pass_aggregation(a: &CsrMatrix, n_passes: usize) -> Result<Partition> {
    if n_passes == 0 {
        return Err(Error::Input("n_passes must be at least 1".into()));
    }
    let mut part = standard_aggregation(a)?;
    let mut coarse = a.clone();
    let mut t = part.tentative();
    for pass in 1..n_passes {
        if part.n_aggregates <= 1 {
            warn!("aggregation collapsed to a single aggregate after {pass} of {n_passes} passes");
            break;
        }
        coarse = t
            .transpose()
            .spgemm(&coarse.spgemm(&t, Pattern::Symbolic)?, Pattern::Symbolic)?;
        let next = standard_aggregation(&coarse)?;
        t = next.tentative();
        part = Partition {
            assignment: part
                .assignment
                .iter()
                .map(|&c| next.assignment[c])
                .collect(),
            n_aggregates: next.n_aggregates,
        };
    }
    Ok(part)
}

/// Interior sets `ω_i`, overlaps `Γ_i`, and a coloring in which aggregates
/// with intersecting `Ω_i = ω_i ∪ Γ_i` get distinct colors.
#[derive(Clone, Debug)]
pub struct AggregateTopology {
    pub omega: Vec<Vec<usize>>,
    pub gamma: Vec<Vec<usize>>,
    pub colors: Vec<usize>,
    pub n_colors: usize,
    /// Largest row multiplicity of the factor; filled in by the splitting stage.
    pub multiplicity_max: usize,
    pub n_nodes: usize,
}

impl AggregateTopology {
    pub fn n_aggregates(&self) -> usize {
        self.omega.len()
    }

    /// `Ω_i` ordered as `ω_i` followed by `Γ_i`.
    pub fn omega_cap(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.omega[i].len() + self.gamma[i].len());
        out.extend_from_slice(&self.omega[i]);
        out.extend_from_slice(&self.gamma[i]);
        out
    }

    /// Boolean partition of unity over `omega_cap(i)`: true on `ω_i`.
    pub fn pou_mask(&self, i: usize) -> Vec<bool> {
        let mut mask = vec![true; self.omega[i].len()];
        mask.resize(self.omega[i].len() + self.gamma[i].len(), false);
        mask
    }

    /// Aggregate id of every node.
    pub fn assignment(&self) -> Vec<usize> {
        let mut out = vec![0; self.n_nodes];
        for (i, w) in self.omega.iter().enumerate() {
            for &k in w {
                out[k] = i;
            }
        }
        out
    }

    /// Aggregate pairs with overlapping `Ω`, as sorted neighbor lists.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); self.n_nodes];
        for i in 0..self.n_aggregates() {
            for &k in self.omega[i].iter().chain(&self.gamma[i]) {
                members[k].push(i);
            }
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.n_aggregates()];
        for m in &members {
            for &p in m {
                for &q in m {
                    if p != q {
                        adj[p].push(q);
                    }
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }
}

/// Builds `Γ_i` from the stored pattern of `A` (explicit zeros included) and
/// colors the aggregates greedily in descending degree order.
pub fn build_topology(a: &CsrMatrix, partition: &Partition) -> Result<AggregateTopology> {
    let n = a.n_rows();
    if partition.len() != n {
        return Err(Error::Dim(format!(
            "partition covers {} nodes, matrix has {n}",
            partition.len()
        )));
    }
    let omega = partition.members();
    let mut mark = vec![usize::MAX; n];
    let gamma: Vec<Vec<usize>> = omega
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let mut g = Vec::new();
            for &k in w {
                for &j in a.row(k).0 {
                    if partition.assignment[j] != i && mark[j] != i {
                        mark[j] = i;
                        g.push(j);
                    }
                }
            }
            g.sort_unstable();
            g
        })
        .collect();

    let mut topo = AggregateTopology {
        omega,
        gamma,
        colors: Vec::new(),
        n_colors: 0,
        multiplicity_max: 0,
        n_nodes: n,
    };
    let adj = topo.adjacency();
    let mut order: Vec<usize> = (0..topo.n_aggregates()).collect();
    order.sort_by(|&p, &q| adj[q].len().cmp(&adj[p].len()).then(p.cmp(&q)));
    let mut colors = vec![usize::MAX; topo.n_aggregates()];
    let mut used = Vec::new();
    for &p in &order {
        used.clear();
        used.extend(
            adj[p]
                .iter()
                .map(|&q| colors[q])
                .filter(|&c| c != usize::MAX),
        );
        used.sort_unstable();
        used.dedup();
        colors[p] = used
            .iter()
            .enumerate()
            .find(|&(k, &c)| k != c)
            .map_or(used.len(), |(k, _)| k);
    }
    topo.n_colors = colors.iter().copied().max().map_or(0, |c| c + 1);
    topo.colors = colors;
    Ok(topo)
}

/// Writes the assignment as one aggregate id per line.
pub fn write_partition(path: impl AsRef<Path>, partition: &Partition) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for a in &partition.assignment {
        writeln!(w, "{a}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_partition(path: impl AsRef<Path>) -> Result<Partition> {
    let text = fs::read_to_string(path)?;
    let assignment = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse()
                .map_err(|_| Error::Format(format!("bad aggregate id {l:?}")))
        })
        .collect::<Result<Vec<usize>>>()?;
    Partition::new(assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{build_rotated_aniso, AnisoParams};

    pub(crate) fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    fn is_connected(a: &CsrMatrix, nodes: &[usize]) -> bool {
        let inside: std::collections::HashSet<usize> = nodes.iter().copied().collect();
        let mut seen = std::collections::HashSet::from([nodes[0]]);
        let mut stack = vec![nodes[0]];
        while let Some(k) = stack.pop() {
            for &j in a.row(k).0 {
                if inside.contains(&j) && seen.insert(j) {
                    stack.push(j);
                }
            }
        }
        seen.len() == nodes.len()
    }

    #[test]
    fn greedy_trace_on_1d_chain() {
        // Seeds at 0, 3, 6; node 2 and 5 have aggregated neighbors and node 8
        // is left over for pass 2, where it joins node 7's aggregate.
        let p = standard_aggregation(&laplacian_1d(9)).unwrap();
        assert_eq!(p.assignment, vec![0, 0, 1, 1, 1, 2, 2, 2, 2]);
        assert_eq!(p.n_aggregates, 3);
    }

    #[test]
    fn diagonal_matrix_gives_singletons() {
        let p = standard_aggregation(&CsrMatrix::identity(5)).unwrap();
        assert_eq!(p.assignment, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn empty_matrix_rejected() {
        assert!(matches!(
            standard_aggregation(&CsrMatrix::zeros(0, 0)),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn five_point_aggregates_are_connected() {
        let a = build_rotated_aniso(&AnisoParams::new(4, 4, 1.0, 0.0))
            .unwrap()
            .a;
        let p = standard_aggregation(&a).unwrap();
        assert!(p.assignment.iter().all(|&x| x < p.n_aggregates));
        for members in p.members() {
            assert!(!members.is_empty());
            assert!(is_connected(&a, &members));
        }
    }

    #[test]
    fn pass_two_prefers_strongest_neighbor() {
        // Seeds {0,1} and {2,3}; node 4 touches 1 and 3 and is left for pass 2.
        let build = |w1: f64, w3: f64| {
            let mut t = vec![];
            for (i, j, v) in [(0, 1, 1.0), (2, 3, 1.0), (4, 1, w1), (4, 3, w3)] {
                t.push((i, j, -v));
                t.push((j, i, -v));
            }
            t.extend((0..5).map(|i| (i, i, 10.0)));
            CsrMatrix::from_triplets(5, 5, &t).unwrap()
        };
        let strong_right = standard_aggregation(&build(0.1, 5.0)).unwrap();
        assert_eq!(strong_right.assignment, vec![0, 0, 1, 1, 1]);
        let strong_left = standard_aggregation(&build(5.0, 0.1)).unwrap();
        assert_eq!(strong_left.assignment, vec![0, 0, 1, 1, 0]);
        let tie = standard_aggregation(&build(2.0, 2.0)).unwrap();
        assert_eq!(tie.assignment, vec![0, 0, 1, 1, 0]);
    }

    #[test]
    fn multi_pass_composition() {
        let a = laplacian_1d(27);
        assert_eq!(
            multi_pass_aggregation(&a, 1).unwrap(),
            standard_aggregation(&a).unwrap()
        );

        let one = standard_aggregation(&a).unwrap();
        let two = multi_pass_aggregation(&a, 2).unwrap();
        assert!((1..=3).contains(&two.n_aggregates));
        // Contiguous runs.
        assert!(two
            .assignment
            .windows(2)
            .all(|w| w[1] == w[0] || w[1] == w[0] + 1));
        // Constant on each pass-1 aggregate.
        for members in one.members() {
            assert!(members
                .iter()
                .all(|&k| two.assignment[k] == two.assignment[members[0]]));
        }
    }

    #[test]
    fn multi_pass_stops_on_collapse() {
        let a = laplacian_1d(3);
        let p = multi_pass_aggregation(&a, 4).unwrap();
        assert_eq!(p.n_aggregates, 1);
    }

    #[test]
    fn topology_of_1d_chain() {
        let a = laplacian_1d(9);
        let part = Partition::new(vec![0, 0, 0, 1, 1, 1, 2, 2, 2]).unwrap();
        let t = build_topology(&a, &part).unwrap();
        assert_eq!(t.gamma, vec![vec![3], vec![2, 6], vec![5]]);
        assert_eq!(t.n_colors, 2);
        assert_eq!(t.omega_cap(1), vec![3, 4, 5, 2, 6]);
        assert_eq!(t.pou_mask(1), vec![true, true, true, false, false]);
    }

    #[test]
    fn topology_of_singletons_without_coupling() {
        let part = Partition::new((0..4).collect()).unwrap();
        let t = build_topology(&CsrMatrix::identity(4), &part).unwrap();
        assert!(t.gamma.iter().all(Vec::is_empty));
        assert_eq!(t.n_colors, 1);
    }

    #[test]
    fn coloring_is_valid_and_bounded() {
        for (eps, theta) in [(1.0, 0.0), (1e-3, 0.5)] {
            let a = build_rotated_aniso(&AnisoParams::new(12, 12, eps, theta))
                .unwrap()
                .a;
            for passes in [1, 2] {
                let part = multi_pass_aggregation(&a, passes).unwrap();
                let t = build_topology(&a, &part).unwrap();
                let adj = t.adjacency();
                let max_deg = adj.iter().map(Vec::len).max().unwrap_or(0);
                assert!(t.n_colors <= max_deg + 1);
                for (p, list) in adj.iter().enumerate() {
                    assert!(list.iter().all(|&q| t.colors[q] != t.colors[p]));
                }
            }
        }
    }

    #[test]
    fn partition_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("level0.part");
        let part = standard_aggregation(&laplacian_1d(11)).unwrap();
        write_partition(&path, &part).unwrap();
        assert_eq!(read_partition(&path).unwrap(), part);
    }
}
