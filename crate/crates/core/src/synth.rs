//! Procedural test shapes: icospheres, jittered grids and bumpy tori.
//!
//! All generators are deterministic, so they double as fixtures for the
//! integration and acceptance suites.

use crate::mesh::TriangleMesh;
use std::collections::BTreeMap;

/// Unit icosphere centered at the origin. Subdivision `s` yields
/// `10 * 4^s + 2` vertices (0 → 12, 4 → 2562, 5 → 10242).
pub fn icosphere(subdivisions: u32) -> TriangleMesh {
    let (mut positions, mut faces) = icosahedron();
    for _ in 0..subdivisions {
        let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let m01 = midpoint_index(&mut positions, &mut midpoint, f[0], f[1]);
            let m12 = midpoint_index(&mut positions, &mut midpoint, f[1], f[2]);
            let m20 = midpoint_index(&mut positions, &mut midpoint, f[2], f[0]);
            next.push([f[0], m01, m20]);
            next.push([f[1], m12, m01]);
            next.push([f[2], m20, m12]);
            next.push([m01, m12, m20]);
        }
        faces = next;
    }
    for p in &mut positions {
        normalize(p);
    }
    TriangleMesh::new(positions, faces)
        .expect("icosphere is valid")
        .0
}

/// Icosphere with a smooth deterministic radial modulation; breaks all
/// symmetries and produces curvature features for detector tests.
pub fn bumpy_sphere(subdivisions: u32, amplitude: f64) -> TriangleMesh {
    let sphere = icosphere(subdivisions);
    sphere
        .transformed(|p| {
            let r = 1.0 + amplitude * modulation(p);
            [p[0] * r, p[1] * r, p[2] * r]
        })
        .expect("modulated sphere is valid")
}

/// Torus with `nu * nv` vertices and a modulated tube radius. Closed,
/// genus 1, asymmetric; handy when an exact vertex count matters.
pub fn bumpy_torus(nu: usize, nv: usize, amplitude: f64) -> TriangleMesh {
    assert!(nu >= 3 && nv >= 3);
    let big_r = 1.0;
    let mut positions = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let theta = 2.0 * std::f64::consts::PI * i as f64 / nu as f64;
        for j in 0..nv {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / nv as f64;
            let tube = 0.38
                + amplitude
                    * (0.6 * (3.0 * theta).sin()
                        + 0.4 * (2.0 * phi + theta).cos()
                        + 0.25 * (5.0 * theta - phi).sin());
            let w = big_r + tube * phi.cos();
            positions.push([w * theta.cos(), w * theta.sin(), tube * phi.sin()]);
        }
    }
    let mut faces = Vec::with_capacity(2 * nu * nv);
    let v = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    for i in 0..nu {
        for j in 0..nv {
            faces.push([v(i, j), v(i + 1, j), v(i, j + 1)]);
            faces.push([v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)]);
        }
    }
    TriangleMesh::new(positions, faces)
        .expect("torus is valid")
        .0
}

/// Planar grid mesh with an optional height field, `nx * ny` vertices.
pub fn grid_mesh(nx: usize, ny: usize, height: impl Fn(f64, f64) -> f64) -> TriangleMesh {
    assert!(nx >= 2 && ny >= 2);
    let mut positions = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = (i as f64, j as f64);
            positions.push([x, y, height(x, y)]);
        }
    }
    let mut faces = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    let v = |i: usize, j: usize| j * nx + i;
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            faces.push([v(i, j), v(i + 1, j), v(i, j + 1)]);
            faces.push([v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)]);
        }
    }
    TriangleMesh::new(positions, faces)
        .expect("grid is valid")
        .0
}

fn modulation(p: &[f64; 3]) -> f64 {
    (2.3 * p[0] + 0.4).sin() * (1.7 * p[1] - 0.2).cos()
        + 0.6 * (3.1 * p[2] + 1.1).sin()
        + 0.35 * (1.3 * p[0] - 2.2 * p[2]).cos()
}

fn icosahedron() -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut positions = vec![
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    for p in &mut positions {
        normalize(p);
    }
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (positions, faces)
}

fn midpoint_index(
    positions: &mut Vec<[f64; 3]>,
    cache: &mut BTreeMap<(usize, usize), usize>,
    a: usize,
    b: usize,
) -> usize {
    let key = (a.min(b), a.max(b));
    if let Some(&idx) = cache.get(&key) {
        return idx;
    }
    let pa = positions[a];
    let pb = positions[b];
    let mut m = [
        0.5 * (pa[0] + pb[0]),
        0.5 * (pa[1] + pb[1]),
        0.5 * (pa[2] + pb[2]),
    ];
    normalize(&mut m);
    positions.push(m);
    let idx = positions.len() - 1;
    cache.insert(key, idx);
    idx
}

fn normalize(p: &mut [f64; 3]) {
    let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    p[0] /= n;
    p[1] /= n;
    p[2] /= n;
}
