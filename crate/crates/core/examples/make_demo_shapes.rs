//! Writes a small synthetic benchmark pair into a directory: a bumpy
//! sphere, a rigidly moved and vertex-permuted copy, and the ground-truth
//! correspondence between them.
//!
//! Usage: cargo run --release -p msc-core --example make_demo_shapes -- <dir>

use std::io::Write;
use std::path::PathBuf;

use msc_core::mesh::TriangleMesh;
use msc_core::synth::bumpy_sphere;
use rand::seq::SliceRandom;
use rand::SeedableRng;

fn main() {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "demo".to_string())
        .into();
    std::fs::create_dir_all(&dir).expect("create output directory");

    // Diameter ~100 units so the default diffusion time t = 2048 is in the
    // informative band.
    let shape = bumpy_sphere(3, 0.3)
        .transformed(|p| [50.0 * p[0], 50.0 * p[1], 50.0 * p[2]])
        .unwrap();
    shape.save_off(&dir.join("shape.off")).expect("write mesh");

    // Rigid motion plus a vertex permutation: an exact isometry with
    // scrambled indexing, the classic repeatability fixture.
    let n = shape.vertex_count();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut inv = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let (s, c) = (0.28f64, (1.0f64 - 0.28 * 0.28).sqrt());
    let positions: Vec<[f64; 3]> = perm
        .iter()
        .map(|&old| {
            let p = shape.positions()[old];
            [
                c * p[0] - s * p[1] + 20.0,
                s * p[0] + c * p[1] - 35.0,
                p[2] + 8.0,
            ]
        })
        .collect();
    let faces: Vec<[usize; 3]> = shape
        .faces()
        .iter()
        .map(|f| [inv[f[0]], inv[f[1]], inv[f[2]]])
        .collect();
    let moved = TriangleMesh::new(positions, faces).unwrap().0;
    moved
        .save_off(&dir.join("shape_iso.off"))
        .expect("write mesh");

    // Line i: the shape.off vertex corresponding to shape_iso.off vertex i.
    let mut corr = std::io::BufWriter::new(
        std::fs::File::create(dir.join("shape_iso.corr")).expect("create corr"),
    );
    for &old in &perm {
        writeln!(corr, "{old}").unwrap();
    }
    corr.flush().unwrap();

    println!(
        "wrote {}, {}, {}",
        dir.join("shape.off").display(),
        dir.join("shape_iso.off").display(),
        dir.join("shape_iso.corr").display()
    );
}
