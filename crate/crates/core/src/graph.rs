//! Epsilon-neighborhood graphs with binary weights and their combinatorial
//! Laplacian `L = D - W`, plus Laplacian-eigenmap features.

use faer::{Mat, MatRef};

use crate::kernel::PointSet;
use crate::linalg::symmetric_eigen;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct GraphLaplacian {
    laplacian: Mat<f64>,
    adjacency: Mat<f64>,
    degree: Vec<f64>,
    neighbors: Vec<Vec<usize>>,
    epsilon: f64,
}

impl GraphLaplacian {
    /// Graph with `m` nodes and no edges (`L = 0`).
    pub fn edgeless(m: usize, epsilon: f64) -> Self {
        Self {
            laplacian: Mat::zeros(m, m),
            adjacency: Mat::zeros(m, m),
            degree: vec![0.0; m],
            neighbors: vec![Vec::new(); m],
            epsilon,
        }
    }

    pub fn len(&self) -> usize {
        self.degree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degree.is_empty()
    }

    pub fn laplacian(&self) -> MatRef<'_, f64> {
        self.laplacian.as_ref()
    }

    pub fn adjacency(&self) -> MatRef<'_, f64> {
        self.adjacency.as_ref()
    }

    pub fn degree(&self) -> &[f64] {
        &self.degree
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn num_edges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// `L · rhs`, using the adjacency lists rather than the dense `L`.
    pub fn apply(&self, rhs: MatRef<'_, f64>) -> Result<Mat<f64>> {
        let m = self.len();
        if rhs.nrows() != m {
            return Err(Error::DimensionMismatch { expected: m, got: rhs.nrows() });
        }
        let mut out = Mat::<f64>::zeros(m, rhs.ncols());
        for c in 0..rhs.ncols() {
            for i in 0..m {
                let mut acc = self.degree[i] * rhs[(i, c)];
                for &j in &self.neighbors[i] {
                    acc -= rhs[(j, c)];
                }
                out[(i, c)] = acc;
            }
        }
        Ok(out)
    }
}

/// Builds `W_ij = 1` iff `i != j`, `‖s_i - s_j‖₂ <= epsilon` and, when
/// `same_action_only` is set, `a_i == a_j`.
pub fn build_laplacian(points: &PointSet, epsilon: f64, same_action_only: bool) -> Result<GraphLaplacian> {
    let m = points.len();
    if m < 2 {
        return Err(Error::InvalidParameter(format!("graph needs at least 2 points, got {m}")));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let eps2 = epsilon * epsilon;
    let mut neighbors = vec![Vec::new(); m];
    for i in 0..m {
        let si = points.state(i);
        for j in (i + 1)..m {
            if same_action_only && points.action(i) != points.action(j) {
                continue;
            }
            let d2: f64 = si.iter().zip(points.state(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 <= eps2 {
                neighbors[i].push(j);
                neighbors[j].push(i);
            }
        }
    }
    for nb in &mut neighbors {
        nb.sort_unstable();
    }
    let degree: Vec<f64> = neighbors.iter().map(|nb| nb.len() as f64).collect();
    let mut adjacency = Mat::<f64>::zeros(m, m);
    let mut laplacian = Mat::<f64>::zeros(m, m);
    for i in 0..m {
        laplacian[(i, i)] = degree[i];
        for &j in &neighbors[i] {
            adjacency[(i, j)] = 1.0;
            laplacian[(i, j)] = -1.0;
        }
    }
    Ok(GraphLaplacian { laplacian, adjacency, degree, neighbors, epsilon })
}

/// `vᵀ L v`.
pub fn laplacian_quadratic(l: &GraphLaplacian, v: &[f64]) -> Result<f64> {
    let m = l.len();
    if v.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: v.len() });
    }
    let lap = l.laplacian();
    let mut total = 0.0;
    for i in 0..m {
        let mut row = 0.0;
        for j in 0..m {
            row += lap[(i, j)] * v[j];
        }
        total += v[i] * row;
    }
    Ok(total)
}

/// The `k` eigenvectors of `L` with smallest eigenvalues, as columns of an
/// `m × k` matrix.
#[derive(Debug, Clone)]
pub struct EigenFeatures {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

impl EigenFeatures {
    pub fn num_features(&self) -> usize {
        self.values.len()
    }

    /// Feature vector of graph node `node`.
    pub fn node_features(&self, node: usize) -> Vec<f64> {
        (0..self.vectors.ncols()).map(|c| self.vectors[(node, c)]).collect()
    }
}

pub fn eigenmap_features(l: &GraphLaplacian, k: usize) -> Result<EigenFeatures> {
    let m = l.len();
    if k == 0 || k > m {
        return Err(Error::InvalidParameter(format!("eigenmap size {k} must be in 1..={m}")));
    }
    let (values, vectors) = symmetric_eigen(l.laplacian())?;
    let vectors = Mat::from_fn(m, k, |i, j| vectors[(i, j)]);
    Ok(EigenFeatures { values: values[..k].to_vec(), vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::StateAction;
    use crate::linalg::symmetric_eigen;
    use proptest::prelude::*;
    use std::collections::VecDeque;

    fn points(v: &[(f64, f64, usize)]) -> PointSet {
        let pairs: Vec<_> = v.iter().map(|&(x, y, a)| StateAction::new(vec![x, y], a)).collect();
        PointSet::from_pairs(&pairs).unwrap()
    }

    fn components_bfs(adj: MatRef<'_, f64>) -> usize {
        let m = adj.nrows();
        let mut seen = vec![false; m];
        let mut count = 0;
        for start in 0..m {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for w in 0..m {
                    if adj[(u, w)] != 0.0 && !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        count
    }

    #[test]
    fn far_points_no_edges() {
        let g = build_laplacian(&points(&[(0.0, 0.0, 0), (2.0, 0.0, 0)]), 1.0, true).unwrap();
        assert_eq!(g.num_edges(), 0);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(g.laplacian()[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn single_edge() {
        let g = build_laplacian(&points(&[(0.0, 0.0, 1), (0.5, 0.0, 1)]), 1.0, true).unwrap();
        let l = g.laplacian();
        assert_eq!([l[(0, 0)], l[(0, 1)], l[(1, 0)], l[(1, 1)]], [1.0, -1.0, -1.0, 1.0]);
        assert_eq!(laplacian_quadratic(&g, &[0.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn action_filter() {
        let p = points(&[(0.0, 0.0, 0), (0.5, 0.0, 1)]);
        assert_eq!(build_laplacian(&p, 1.0, true).unwrap().num_edges(), 0);
        assert_eq!(build_laplacian(&p, 1.0, false).unwrap().num_edges(), 1);
    }

    #[test]
    fn too_few_points() {
        assert!(build_laplacian(&points(&[(0.0, 0.0, 0)]), 1.0, true).is_err());
        assert!(build_laplacian(&points(&[(0.0, 0.0, 0), (1.0, 0.0, 0)]), 0.0, true).is_err());
    }

    #[test]
    fn grid_nullity_matches_bfs() {
        // two components: an L-shaped triple and a separated pair
        let p = points(&[(0.0, 0.0, 0), (1.0, 0.0, 0), (0.0, 1.0, 0), (5.0, 5.0, 0), (6.0, 5.0, 0)]);
        let g = build_laplacian(&p, 1.1, true).unwrap();
        let (vals, _) = symmetric_eigen(g.laplacian()).unwrap();
        let nullity = vals.iter().filter(|v| v.abs() < 1e-9).count();
        assert_eq!(nullity, components_bfs(g.adjacency()));
        assert_eq!(nullity, 2);
    }

    #[test]
    fn constant_vector_in_null_space() {
        let p = points(&[(0.0, 0.0, 0), (1.0, 0.0, 0), (2.0, 0.0, 0), (2.0, 1.0, 0)]);
        let g = build_laplacian(&p, 1.0, true).unwrap();
        assert_eq!(laplacian_quadratic(&g, &[3.0; 4]).unwrap(), 0.0);
        assert!(laplacian_quadratic(&g, &[1.0; 3]).is_err());
    }

    #[test]
    fn path_graph_spectrum() {
        let p = points(&[(0.0, 0.0, 0), (1.0, 0.0, 0), (2.0, 0.0, 0)]);
        let g = build_laplacian(&p, 1.0, true).unwrap();
        let f = eigenmap_features(&g, 3).unwrap();
        for (got, want) in f.values.iter().zip([0.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        for c in 0..3 {
            let v: Vec<f64> = (0..3).map(|r| f.vectors[(r, c)]).collect();
            let lv = crate::linalg::mat_vec(g.laplacian(), &v);
            let res: f64 = lv.iter().zip(&v).map(|(a, b)| (a - f.values[c] * b).powi(2)).sum::<f64>().sqrt();
            assert!(res <= 1e-8);
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn first_eigenvector_constant_sign() {
        let p = points(&[(0.0, 0.0, 0), (1.0, 0.0, 0), (1.0, 1.0, 0), (2.0, 1.0, 0), (2.0, 2.0, 0)]);
        let g = build_laplacian(&p, 1.0, true).unwrap();
        let f = eigenmap_features(&g, 1).unwrap();
        let want = 1.0 / 5f64.sqrt();
        for r in 0..5 {
            assert!((f.vectors[(r, 0)] - want).abs() < 1e-10);
        }
    }

    #[test]
    fn eigenmap_size_checked() {
        let p = points(&[(0.0, 0.0, 0), (1.0, 0.0, 0)]);
        let g = build_laplacian(&p, 1.0, true).unwrap();
        assert!(eigenmap_features(&g, 3).is_err());
        assert!(eigenmap_features(&g, 0).is_err());
    }

    #[test]
    fn sparse_apply_matches_dense() {
        let p = points(&[(0.0, 0.0, 0), (0.5, 0.0, 0), (0.9, 0.2, 1), (1.0, 0.0, 0), (0.9, 0.3, 1)]);
        let g = build_laplacian(&p, 0.6, true).unwrap();
        let rhs = Mat::from_fn(5, 3, |i, j| (i * 3 + j) as f64 * 0.37 - 1.0);
        let sparse = g.apply(rhs.as_ref()).unwrap();
        let dense = crate::linalg::matmul(g.laplacian(), rhs.as_ref());
        for i in 0..5 {
            for j in 0..3 {
                assert_eq!(sparse[(i, j)], dense[(i, j)]);
            }
        }
    }

    fn arb_points() -> impl Strategy<Value = Vec<StateAction>> {
        prop::collection::vec(
            (prop::collection::vec(0.0f64..3.0, 2), 0usize..2).prop_map(|(s, a)| StateAction::new(s, a)),
            2..14,
        )
    }

    proptest! {
        #[test]
        fn quadratic_shift_invariant_per_component(pts in arb_points(), eps in 0.3f64..1.5,
                                                   v in prop::collection::vec(-2.0f64..2.0, 14),
                                                   shifts in prop::collection::vec(-5.0f64..5.0, 14)) {
            let p = PointSet::from_pairs(&pts).unwrap();
            let g = build_laplacian(&p, eps, true).unwrap();
            let m = p.len();
            // label components
            let mut comp = vec![usize::MAX; m];
            let mut next = 0;
            for s in 0..m {
                if comp[s] != usize::MAX { continue; }
                comp[s] = next;
                let mut stack = vec![s];
                while let Some(u) = stack.pop() {
                    for &w in g.neighbors(u) {
                        if comp[w] == usize::MAX { comp[w] = next; stack.push(w); }
                    }
                }
                next += 1;
            }
            let v = &v[..m];
            let shifted: Vec<f64> = (0..m).map(|i| v[i] + shifts[comp[i]]).collect();
            let a = laplacian_quadratic(&g, v).unwrap();
            let b = laplacian_quadratic(&g, &shifted).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }

        #[test]
        fn permutation_equivariant(pts in arb_points(), seed in any::<u64>()) {
            let p = PointSet::from_pairs(&pts).unwrap();
            let m = p.len();
            let mut perm: Vec<usize> = (0..m).collect();
            let mut st = seed | 1;
            for i in (1..m).rev() {
                st = st.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (st >> 33) as usize % (i + 1));
            }
            let g = build_laplacian(&p, 1.0, true).unwrap();
            let h = build_laplacian(&p.permuted(&perm), 1.0, true).unwrap();
            for i in 0..m {
                for j in 0..m {
                    prop_assert_eq!(h.laplacian()[(i, j)], g.laplacian()[(perm[i], perm[j])]);
                }
            }
        }
    }
}
