//! Cotangent stiffness / lumped mass assembly for the discrete
//! Laplace–Beltrami operator.
//!
//! The pair `(W, A)` defines the generalized eigenproblem `W Φ = A Φ Λ`
//! solved in [`crate::spectral`]. `W` carries one off-diagonal entry per mesh
//! edge and an explicit diagonal equal to the negated off-diagonal row sum,
//! so `W · 1 = 0` holds exactly by construction.

use std::collections::BTreeMap;
use std::io::Write;

use thiserror::Error;

use crate::mesh::{TriangleMesh, VertexAreas};

#[derive(Debug, Error)]
pub enum LaplacianError {
    #[error("vertex {vertex} has zero area element; the mass matrix would be singular")]
    ZeroAreaVertex { vertex: usize },
}

/// Sparse symmetric matrix in CSR form with both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    /// Builds from (row, col, value) triplets, accumulating duplicates and
    /// mirroring off-diagonal entries.
    pub fn from_triplets(
        n: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Self {
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet index out of range");
            *map.entry((r, c)).or_insert(0.0) += v;
            if r != c {
                *map.entry((c, r)).or_insert(0.0) += v;
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        for &(r, _) in map.keys() {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut col_idx = Vec::with_capacity(map.len());
        let mut values = Vec::with_capacity(map.len());
        for ((_, c), v) in map {
            col_idx.push(c);
            values.push(v);
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn diagonal(diag: Vec<f64>) -> Self {
        let n = diag.len();
        Self {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(out.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            out[i] = acc;
        }
    }

    /// True if every stored entry lies on the diagonal.
    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, _)| j == i))
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.entry(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Infinity norm: maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).map(|(_, v)| v).sum()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.entry(i, i)).sum()
    }

    /// All stored entries; off-diagonals appear once per triangle.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// Congruence scaling `D S D` with `D = diag(s)`; pattern unchanged.
    pub fn scale_sym(&self, s: &[f64]) -> Self {
        assert_eq!(s.len(), self.n);
        let mut out = self.clone();
        for i in 0..self.n {
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.values[idx] = self.values[idx] * s[i] * s[self.col_idx[idx]];
            }
        }
        out
    }

    /// Off-diagonal adjacency structure as sorted neighbor lists.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, _)| j).filter(|&j| j != i).collect())
            .collect()
    }

    /// Writes every stored entry as `row col value` per line.
    pub fn dump_coord(&self, out: &mut impl Write) -> std::io::Result<()> {
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                writeln!(out, "{} {} {}", i, j, v)?;
            }
        }
        Ok(())
    }
}

/// Assembles the cotangent stiffness matrix. The off-diagonal entry for edge
/// `(i, j)` is `-(cot α + cot β)/2` over the incident triangles; boundary
/// edges see a single cotangent (natural Neumann condition). Negative
/// cotangents from obtuse triangles are kept as-is.
pub fn cotangent_stiffness(mesh: &TriangleMesh) -> SparseSymMatrix {
    let pos = mesh.positions();
    let mut w: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for f in mesh.faces() {
        for (opp, a, b) in [(f[0], f[1], f[2]), (f[1], f[2], f[0]), (f[2], f[0], f[1])] {
            let cot = cot_at(&pos[opp], &pos[a], &pos[b]);
            let key = (a.min(b), a.max(b));
            *w.entry(key).or_insert(0.0) += 0.5 * cot;
        }
    }

    let n = mesh.vertex_count();
    let mut diag = vec![0.0; n];
    let mut triplets = Vec::with_capacity(w.len() + n);
    for (&(i, j), &wij) in &w {
        triplets.push((i, j, -wij));
        diag[i] += wij;
        diag[j] += wij;
    }
    for (i, d) in diag.into_iter().enumerate() {
        triplets.push((i, i, d));
    }
    SparseSymMatrix::from_triplets(n, triplets)
}

/// Cotangent of the angle at `apex` in the triangle `(apex, a, b)`.
fn cot_at(apex: &[f64; 3], a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let u = [a[0] - apex[0], a[1] - apex[1], a[2] - apex[2]];
    let v = [b[0] - apex[0], b[1] - apex[1], b[2] - apex[2]];
    let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    let cx = u[1] * v[2] - u[2] * v[1];
    let cy = u[2] * v[0] - u[0] * v[2];
    let cz = u[0] * v[1] - u[1] * v[0];
    let cross = (cx * cx + cy * cy + cz * cz).sqrt();
    dot / cross
}

/// Diagonal lumped mass matrix `A = diag(da)`. Fails if any vertex has a zero
/// area element, since the generalized eigenproblem would be singular.
pub fn mass_matrix(areas: &VertexAreas) -> Result<SparseSymMatrix, LaplacianError> {
    if let Some(&vertex) = areas.isolated().first() {
        return Err(LaplacianError::ZeroAreaVertex { vertex });
    }
    Ok(SparseSymMatrix::diagonal(areas.da().to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{vertex_areas, TriangleMesh};
    use rand::{Rng, SeedableRng};

    fn mesh(positions: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> TriangleMesh {
        TriangleMesh::new(positions, faces).unwrap().0
    }

    /// Two equilateral triangles sharing edge (0, 1).
    fn equilateral_pair() -> TriangleMesh {
        let h = (3.0f64).sqrt() / 2.0;
        mesh(
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.5, h, 0.0],
                [0.5, -h, 0.0],
            ],
            vec![[0, 1, 2], [1, 0, 3]],
        )
    }

    /// Jittered planar grid, a generic non-degenerate test mesh.
    fn random_grid(nx: usize, ny: usize, seed: u64) -> TriangleMesh {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut positions = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                positions.push([
                    i as f64 + 0.3 * rng.random::<f64>(),
                    j as f64 + 0.3 * rng.random::<f64>(),
                    0.4 * rng.random::<f64>(),
                ]);
            }
        }
        let mut faces = Vec::new();
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let v = |a: usize, b: usize| b * nx + a;
                faces.push([v(i, j), v(i + 1, j), v(i, j + 1)]);
                faces.push([v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)]);
            }
        }
        mesh(positions, faces)
    }

    #[test]
    fn interior_edge_of_equilateral_pair() {
        let w = cotangent_stiffness(&equilateral_pair());
        // cot 60° on both sides: (cot60 + cot60)/2 = 1/sqrt(3)
        let expect = -1.0 / 3.0f64.sqrt();
        assert!((w.entry(0, 1) - expect).abs() < 1e-12);
        assert!((w.entry(1, 0) - expect).abs() < 1e-12);
    }

    #[test]
    fn boundary_edge_with_right_angle_is_zero() {
        let m = mesh(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 0.5, 0.0]],
            vec![[0, 1, 2]],
        );
        let w = cotangent_stiffness(&m);
        assert!(w.entry(0, 1).abs() < 1e-12);
    }

    #[test]
    fn row_sums_vanish_on_random_meshes() {
        for seed in 0..10 {
            let m = random_grid(5, 4, seed);
            let w = cotangent_stiffness(&m);
            let tol = 1e-9 * w.max_abs();
            for i in 0..w.n() {
                assert!(w.row_sum(i).abs() <= tol, "row {i} sum {}", w.row_sum(i));
            }
        }
    }

    #[test]
    fn quadratic_form_is_positive_semidefinite() {
        let m = random_grid(6, 5, 7);
        let w = cotangent_stiffness(&m);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let mut out = vec![0.0; w.n()];
        for _ in 0..20 {
            let f: Vec<f64> = (0..w.n()).map(|_| rng.random::<f64>() - 0.5).collect();
            w.mul_vec(&f, &mut out);
            let quad: f64 = f.iter().zip(&out).map(|(a, b)| a * b).sum();
            let norm2: f64 = f.iter().map(|a| a * a).sum();
            assert!(quad >= -1e-9 * norm2);
        }
    }

    #[test]
    fn rigid_motion_leaves_stiffness_unchanged() {
        let m = random_grid(5, 5, 3);
        let (s, c) = (0.28f64, (1.0f64 - 0.28 * 0.28).sqrt());
        let moved = m
            .transformed(|p| {
                [
                    c * p[0] + s * p[1] - 4.0,
                    -s * p[0] + c * p[1] + 0.5,
                    p[2] + 9.0,
                ]
            })
            .unwrap();
        let w0 = cotangent_stiffness(&m);
        let w1 = cotangent_stiffness(&moved);
        for i in 0..w0.n() {
            for ((j0, v0), (j1, v1)) in w0.row(i).zip(w1.row(i)) {
                assert_eq!(j0, j1);
                assert!((v0 - v1).abs() <= 1e-12 * v0.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn scaling_by_two_is_exact() {
        let m = random_grid(5, 4, 11);
        let scaled = m
            .transformed(|p| [2.0 * p[0], 2.0 * p[1], 2.0 * p[2]])
            .unwrap();
        let w0 = cotangent_stiffness(&m);
        let w1 = cotangent_stiffness(&scaled);
        assert_eq!(w0, w1); // cotangents are scale-free, exact for power-of-two factors

        let a0 = vertex_areas(&m);
        let a1 = vertex_areas(&scaled);
        for (x, y) in a0.da().iter().zip(a1.da()) {
            assert_eq!(*y, 4.0 * *x);
        }
    }

    #[test]
    fn mass_matrix_of_equilateral_triangle() {
        let h = (3.0f64).sqrt() / 2.0;
        let m = mesh(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, h, 0.0]],
            vec![[0, 1, 2]],
        );
        let a = mass_matrix(&vertex_areas(&m)).unwrap();
        assert!(a.is_diagonal());
        let expect = 3.0f64.sqrt() / 12.0;
        for i in 0..3 {
            assert!((a.entry(i, i) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn mass_trace_equals_surface_area() {
        let m = random_grid(6, 6, 5);
        let a = mass_matrix(&vertex_areas(&m)).unwrap();
        let rel = (a.trace() - m.surface_area()).abs() / m.surface_area();
        assert!(rel < 1e-12);
    }

    #[test]
    fn isolated_vertex_is_an_error() {
        let m = mesh(
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [3.0, 3.0, 3.0],
            ],
            vec![[0, 1, 2]],
        );
        match mass_matrix(&vertex_areas(&m)) {
            Err(LaplacianError::ZeroAreaVertex { vertex }) => assert_eq!(vertex, 3),
            other => panic!("expected zero-area error, got {other:?}"),
        }
    }

    #[test]
    fn coordinate_dump_round_trips() {
        let w = cotangent_stiffness(&equilateral_pair());
        let mut buf = Vec::new();
        w.dump_coord(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut count = 0;
        for line in text.lines() {
            let toks: Vec<&str> = line.split_whitespace().collect();
            assert_eq!(toks.len(), 3);
            let i: usize = toks[0].parse().unwrap();
            let j: usize = toks[1].parse().unwrap();
            let v: f64 = toks[2].parse().unwrap();
            assert_eq!(w.entry(i, j), v);
            count += 1;
        }
        assert_eq!(count, w.nnz());
    }
}
