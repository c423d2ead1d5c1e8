//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with its measured margin. Run with `--nocapture` to see them.
//!
//! Dataset-scale repeatability/EER tables depend on externally supplied
//! benchmark data; everything here is self-contained synthetic geometry
//! with independent oracles.

mod common;

use common::{
    assert_trees_equal, basis_for, brute_force_tree, heat_kernel_oracle, random_grid_mesh,
    random_weighted_graph, sort_oracle, tree_to_oracle_form, two_basin_graph, OracleDetector,
};
use msc_core::descriptors::{region_average, sihks_field};
use msc_core::detector::{detect, instability_scores, DetectorParams};
use msc_core::document::{
    write_descriptors_document, write_regions_document, DescribeConfig, DescriptorsDocument,
    DetectConfig, RegionsDocument, ReportWriter,
};
use msc_core::evaluation::{
    descriptor_roc, distance_matrix, matching_score, overlap, overlap_matrix, repeatability,
    Correspondence,
};
use msc_core::hash::mesh_content_hash;
use msc_core::mesh::{vertex_areas, TriangleMesh};
use msc_core::pipeline::detect_regions;
use msc_core::spectral::{save_basis_cache, TimeGrid};
use msc_core::synth::{bumpy_sphere, bumpy_torus, icosphere};
use msc_core::tree::{build_tree, GraphWeights, WeightedGraph};
use msc_core::weighting::WeightingSpec;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn scale(mesh: &TriangleMesh, gamma: f64) -> TriangleMesh {
    mesh.transformed(|p| [gamma * p[0], gamma * p[1], gamma * p[2]])
        .unwrap()
}

/// 1. Unit icosphere (2562 vertices), k = 20: eigenvalue clusters
///    {2 (x3), 6 (x5)} within 3% relative, solved in under a minute.
#[test]
fn criterion_01_sphere_spectrum() {
    let started = Instant::now();
    let sphere = icosphere(4);
    assert!(sphere.vertex_count() >= 2562);
    let (basis, _, _) = basis_for(&sphere, 20);
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");

    let ev = basis.eigenvalues();
    let mut worst = 0.0f64;
    for i in 1..=3 {
        worst = worst.max((ev[i] - 2.0).abs() / 2.0);
    }
    for i in 4..=8 {
        worst = worst.max((ev[i] - 6.0).abs() / 6.0);
    }
    assert!(worst <= 0.03, "worst cluster error {worst:.4}");
    println!(
        "acceptance 1 (sphere spectrum): PASS — worst relative error {:.3}%, {:.2?}",
        100.0 * worst,
        elapsed
    );
}

/// 2. Heat-kernel mass conservation: Σ_y h_t(x,y) da(y) = 1 within 1e-6
///    for 100 random sources, t ∈ {1, 100, 2048}, at several truncations.
#[test]
fn criterion_02_mass_conservation() {
    let mesh = icosphere(3);
    let areas = vertex_areas(&mesh);
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE55);
    let mut worst = 0.0f64;
    for k in [1usize, 7, 40] {
        let (basis, _, _) = basis_for(&mesh, k);
        for _ in 0..100 {
            let x = rng.random_range(0..mesh.vertex_count());
            for t in [1.0, 100.0, 2048.0] {
                let row = basis.heat_row(t, x).unwrap();
                let mass: f64 = row.iter().zip(areas.da()).map(|(h, da)| h * da).sum();
                worst = worst.max((mass - 1.0).abs());
            }
        }
    }
    assert!(worst < 1e-6, "worst mass defect {worst:.3e}");
    println!("acceptance 2 (mass conservation): PASS — worst defect {worst:.3e}");
}

/// 3. Small-instance kernel oracle: full-basis heat kernel within 1e-6 of
///    the dense matrix exponential; diffusion distance within 1e-8 of the
///    brute-force vertex sum.
#[test]
fn criterion_03_kernel_oracle() {
    let mut worst_h = 0.0f64;
    let mut worst_d = 0.0f64;
    for (nx, ny, seed) in [(5usize, 5usize, 21u64), (7, 7, 22), (5, 10, 23)] {
        let mesh = random_grid_mesh(nx, ny, seed);
        let n = mesh.vertex_count();
        assert!(n <= 50);
        let (basis, w, areas) = basis_for(&mesh, n);
        for t in [0.05f64, 0.5, 5.0] {
            let oracle = heat_kernel_oracle(&w, areas.da(), t);
            for x in 0..n {
                let row = basis.heat_row(t, x).unwrap();
                for y in 0..n {
                    worst_h = worst_h.max((row[y] - oracle[(x, y)]).abs());
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..20 {
                let v1 = rng.random_range(0..n);
                let v2 = rng.random_range(0..n);
                let spectral = basis.diffusion_distance(t, v1, v2).unwrap();
                let mut sum = 0.0;
                for v in 0..n {
                    let d = oracle[(v1, v)] - oracle[(v2, v)];
                    sum += d * d * areas.da()[v];
                }
                worst_d = worst_d.max((spectral - sum.sqrt()).abs());
            }
        }
    }
    assert!(worst_h < 1e-6, "heat kernel vs exponential: {worst_h:.3e}");
    assert!(worst_d < 1e-8, "diffusion distance vs sum: {worst_d:.3e}");
    println!("acceptance 3 (kernel oracle): PASS — heat {worst_h:.2e}, diffusion {worst_d:.2e}");
}

/// 4. Component-tree oracle: 1000 random weighted graphs, both variants,
///    identical to threshold-and-components brute force, under 30 s.
#[test]
fn criterion_04_component_tree_oracle() {
    let started = Instant::now();
    for seed in 0..1000u64 {
        let g = random_weighted_graph(seed, 40, seed % 2 == 1);
        let got = tree_to_oracle_form(&build_tree(&g));
        let want = sort_oracle(brute_force_tree(&g));
        assert_trees_equal(&got, &want, &format!("seed {seed}"));
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 30, "took {elapsed:?}");
    println!(
        "acceptance 4 (component-tree oracle): PASS — 1000 graphs in {:.2?}",
        elapsed
    );
}

/// 5. MSER oracle: the two-basin grid field yields exactly two regions,
///    one per basin, with scores equal to the oracle recomputation.
#[test]
fn criterion_05_mser_oracle() {
    let (g, basins) = two_basin_graph();
    let tree = build_tree(&g);
    let scores = instability_scores(&tree);
    let params = DetectorParams::default();
    let got = detect(&tree, &scores, &params).unwrap();
    let oracle = OracleDetector::new(brute_force_tree(&g));
    let want = oracle.detect(&params);

    assert_eq!(got.len(), 2, "detected {}", got.len());
    assert_eq!(want.len(), 2);
    for (r, (set, score)) in got.iter().zip(&want) {
        assert_eq!(&r.vertices, set);
        assert_eq!(r.score, *score, "scores must match exactly");
    }
    let mut got_sets: Vec<&Vec<usize>> = got.iter().map(|r| &r.vertices).collect();
    got_sets.sort();
    let mut want_sets: Vec<&Vec<usize>> = basins.iter().collect();
    want_sets.sort();
    assert_eq!(got_sets, want_sets, "regions must be the two basins");
    println!("acceptance 5 (MSER oracle): PASS — 2 regions, scores exact");
}

/// 6. Monotone invariance: strictly increasing (affine) weight transforms
///    preserve detected region vertex sets on 100 random instances with
///    filters disabled.
#[test]
fn criterion_06_monotone_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x600D);
    let params = DetectorParams::unfiltered();
    for seed in 0..100u64 {
        let g = random_weighted_graph(60_000 + seed, 32, seed % 2 == 0);
        let gain = 0.1 + 6.0 * rng.random::<f64>();
        let offset = 8.0 * rng.random::<f64>();
        let transform = |w: f64| gain * w + offset;
        let g2 = match g.weights() {
            GraphWeights::Vertex(w) => WeightedGraph::vertex_weighted(
                g.vertex_count(),
                g.edges().iter().copied(),
                w.iter().map(|&x| transform(x)).collect(),
                g.da().to_vec(),
            )
            .unwrap(),
            GraphWeights::Edge(d) => WeightedGraph::edge_weighted(
                g.vertex_count(),
                g.edges().iter().copied(),
                d.iter().map(|&x| transform(x)).collect(),
                g.da().to_vec(),
            )
            .unwrap(),
        };
        let sets = |g: &WeightedGraph| -> Vec<Vec<usize>> {
            let tree = build_tree(g);
            let scores = instability_scores(&tree);
            let mut out: Vec<Vec<usize>> = detect(&tree, &scores, &params)
                .unwrap()
                .into_iter()
                .map(|r| r.vertices)
                .collect();
            out.sort();
            out
        };
        assert_eq!(
            sets(&g),
            sets(&g2),
            "seed {seed} gain {gain} offset {offset}"
        );
    }
    println!("acceptance 6 (monotone invariance): PASS — 100 instances");
}

/// 7. Isometry repeatability: a 5040-vertex bumpy torus against a rigidly
///    moved, vertex-permuted copy with the default heat vertex weighting
///    reaches repeatability 1.0 at overlap 0.75 in under two minutes.
#[test]
fn criterion_07_isometry_repeatability() {
    let started = Instant::now();
    let mesh = scale(&bumpy_torus(72, 70, 0.12), 40.0);
    assert_eq!(mesh.vertex_count(), 5040);
    let n = mesh.vertex_count();

    let mut rng = ChaCha8Rng::seed_from_u64(0x150_7);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut inv = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let (s, c) = (0.36f64, (1.0f64 - 0.36 * 0.36).sqrt());
    let positions: Vec<[f64; 3]> = perm
        .iter()
        .map(|&old| {
            let p = mesh.positions()[old];
            [
                c * p[0] + s * p[2] + 11.0,
                p[1] - 40.0,
                -s * p[0] + c * p[2] + 3.0,
            ]
        })
        .collect();
    let faces: Vec<[usize; 3]> = mesh
        .faces()
        .iter()
        .map(|f| [inv[f[0]], inv[f[1]], inv[f[2]]])
        .collect();
    let moved = TriangleMesh::new(positions, faces).unwrap().0;

    let spec = WeightingSpec::parse("vw:heat:t=2048").unwrap();
    let params = DetectorParams::default();
    let run = |m: &TriangleMesh| {
        let areas = vertex_areas(m);
        let (basis, _, _) = basis_for(m, 200);
        let (regions, _) = detect_regions(m, &areas, &basis, &spec, &params).unwrap();
        (regions, areas)
    };
    let (null_regions, null_areas) = run(&mesh);
    let (trans_regions, trans_areas) = run(&moved);
    assert!(!null_regions.is_empty());

    // Ground truth: transformed vertex i is null vertex perm[i].
    let corr = Correspondence::new(perm.iter().map(|&p| Some(p)).collect(), n).unwrap();
    let null_sets: Vec<Vec<usize>> = null_regions.iter().map(|r| r.vertices.clone()).collect();
    let trans_sets: Vec<Vec<usize>> = trans_regions.iter().map(|r| r.vertices.clone()).collect();
    let om = overlap_matrix(
        &null_sets,
        &trans_sets,
        &corr,
        null_areas.da(),
        trans_areas.da(),
    );
    let curve = repeatability(&om, &[0.75]);
    let elapsed = started.elapsed();
    assert_eq!(
        curve.repeatability,
        vec![1.0],
        "repeatability {:?} with {} null / {} transformed regions",
        curve.repeatability,
        null_sets.len(),
        trans_sets.len()
    );
    assert!(elapsed.as_secs() < 120, "took {elapsed:?}");
    println!(
        "acceptance 7 (isometry repeatability): PASS — {} regions, 1.0 at 0.75, {:.2?}",
        trans_sets.len(),
        elapsed
    );
}

/// 8. Scale invariance at γ² = 2^{1/16}: per-vertex SI-HKS within 2%
///    (excluding the two band-edge frequencies) and commute-time-detected
///    regions overlapping at least 0.9 with the unscaled detections.
#[test]
fn criterion_08_scale_invariance() {
    let mesh = scale(&bumpy_sphere(3, 0.35), 50.0);
    let gamma2 = 2f64.powf(1.0 / 16.0);
    let scaled_mesh = scale(&mesh, gamma2.sqrt());
    let grid = TimeGrid::standard();

    let (base, _, _) = basis_for(&mesh, 150);
    let (big, _, _) = basis_for(&scaled_mesh, 150);

    let d0 = sihks_field(&base, &grid, 6).unwrap();
    let d1 = sihks_field(&big, &grid, 6).unwrap();
    let mut worst = 0.0f64;
    for v in 0..mesh.vertex_count() {
        for w in 1..5 {
            let a = d0.vector(v)[w];
            let b = d1.vector(v)[w];
            worst = worst.max((a - b).abs() / a.abs().max(1e-300));
        }
    }
    assert!(worst < 0.02, "worst SI-HKS drift {worst:.4}");

    let spec = WeightingSpec::parse("ew:invct").unwrap();
    let params = DetectorParams::default();
    let areas = vertex_areas(&mesh);
    let run = |m: &TriangleMesh, basis: &msc_core::spectral::SpectralBasis| {
        let a = vertex_areas(m);
        detect_regions(m, &a, basis, &spec, &params).unwrap().0
    };
    let r0 = run(&mesh, &base);
    let r1 = run(&scaled_mesh, &big);
    assert!(!r0.is_empty(), "no regions detected");
    assert_eq!(r0.len(), r1.len());
    let mut worst_overlap = 1.0f64;
    for (a, b) in r0.iter().zip(&r1) {
        worst_overlap = worst_overlap.min(overlap(&a.vertices, &b.vertices, areas.da()));
    }
    assert!(
        worst_overlap >= 0.9,
        "worst region overlap {worst_overlap:.3}"
    );
    println!(
        "acceptance 8 (scale invariance): PASS — SI-HKS drift {:.2}%, {} regions, overlap ≥ {:.3}",
        100.0 * worst,
        r0.len(),
        worst_overlap
    );
}

/// 9. Evaluation math: ROC/EER and matching score equal exhaustive sweeps
///    on a handcrafted 20-pair set; overlap passes symmetry/range checks on
///    10^4 random region pairs.
#[test]
fn criterion_09_evaluation_math() {
    // Handcrafted set: positives at distances 1..9 and 11, negatives at 10
    // and 12..20 — one inversion.
    let mut distances = Vec::new();
    let mut overlaps = Vec::new();
    for d in 1..=9 {
        distances.push(d as f64);
        overlaps.push(0.9);
    }
    distances.push(11.0);
    overlaps.push(0.9);
    distances.push(10.0);
    overlaps.push(0.1);
    for d in 12..=20 {
        distances.push(d as f64);
        overlaps.push(0.1);
    }
    let roc = descriptor_roc(&distances, &overlaps, 0.75).unwrap();
    // Exhaustive sweep: at τ = 9 rates are (fpr 0, fnr 0.1); at τ = 10 they
    // are (0.1, 0.1) — the crossing sits exactly at 0.1.
    let mut sweep = Vec::new();
    let mut taus = distances.clone();
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    for &tau in &taus {
        let tp = distances
            .iter()
            .zip(&overlaps)
            .filter(|&(&d, &o)| o >= 0.75 && d <= tau)
            .count();
        let fp = distances
            .iter()
            .zip(&overlaps)
            .filter(|&(&d, &o)| o < 0.75 && d <= tau)
            .count();
        sweep.push((tau, tp as f64 / 10.0, fp as f64 / 10.0));
    }
    assert_eq!(roc.points.len(), sweep.len());
    for (p, (tau, tpr, fpr)) in roc.points.iter().zip(&sweep) {
        assert_eq!((p.tau, p.tpr, p.fpr), (*tau, *tpr, *fpr));
    }
    assert!((roc.eer - 0.1).abs() < 1e-12, "EER {}", roc.eer);

    // First matches with one swap drop the score by exactly 2/m.
    let m = 10usize;
    let mut d = vec![1.0; m * m];
    let mut o = vec![0.0; m * m];
    for i in 0..m {
        d[i * m + i] = 0.0;
        o[i * m + i] = 1.0;
    }
    d[0] = 0.5;
    d[1] = 0.0;
    d[m + 1] = 0.5;
    d[m] = 0.0;
    let curve = matching_score(&d, &o, m, m, &[0.75]).unwrap();
    assert_eq!(curve.scores, vec![(m as f64 - 2.0) / m as f64]);

    // Overlap properties across 10^4 random pairs.
    let mut rng = ChaCha8Rng::seed_from_u64(0x0E9);
    let n = 64;
    let da: Vec<f64> = (0..n).map(|_| 0.01 + rng.random::<f64>()).collect();
    for _ in 0..10_000 {
        let r1: Vec<usize> = (0..n).filter(|_| rng.random::<f64>() < 0.2).collect();
        let r2: Vec<usize> = (0..n).filter(|_| rng.random::<f64>() < 0.2).collect();
        let o12 = overlap(&r1, &r2, &da);
        assert!((0.0..=1.0).contains(&o12));
        assert_eq!(o12, overlap(&r2, &r1, &da));
    }
    println!("acceptance 9 (evaluation math): PASS — sweep exact, EER 0.1, 10^4 overlap pairs");
}

/// 10. Determinism: two identical end-to-end runs produce byte-identical
///     cache, regions, descriptors and report files.
#[test]
fn criterion_10_determinism() {
    let mesh = scale(&bumpy_sphere(2, 0.3), 50.0);
    let hash = mesh_content_hash(&mesh);
    let dir = tempfile::tempdir().unwrap();

    let run = |tag: &str| -> Vec<(String, Vec<u8>)> {
        let out = dir.path().join(tag);
        std::fs::create_dir_all(&out).unwrap();
        let areas = vertex_areas(&mesh);
        let (basis, _, _) = basis_for(&mesh, 60);
        save_basis_cache(&out.join("basis.spec"), hash, &basis).unwrap();

        let spec = WeightingSpec::parse("vw:heat:t=2048").unwrap();
        let params = DetectorParams {
            overlap_dedup: 0.7,
            ..DetectorParams::default()
        };
        let (regions, _) = detect_regions(&mesh, &areas, &basis, &spec, &params).unwrap();
        let config = DetectConfig::from_params(spec.to_string(), 60, 7, &params);
        let doc = RegionsDocument::new(hash, config, areas.da().to_vec(), regions.clone());
        write_regions_document(&out.join("regions.json"), &doc).unwrap();

        let field = sihks_field(&basis, &TimeGrid::standard(), 6).unwrap();
        let desc: Vec<Vec<f64>> = regions
            .iter()
            .map(|r| region_average(&field, &r.vertices, &areas).unwrap())
            .collect();
        let ddoc = DescriptorsDocument::new(
            &doc.mesh_hash,
            msc_core::document::file_content_hash(&out.join("regions.json")).unwrap(),
            DescribeConfig {
                descriptor: "avg-sihks".into(),
                hks_times: None,
                num_freqs: Some(6),
                sigma: None,
                vocab_p: None,
                vocab_seed: None,
            },
            desc.clone(),
        );
        write_descriptors_document(&out.join("descriptors.json"), &ddoc).unwrap();

        // Self-evaluation report.
        let sets: Vec<Vec<usize>> = regions.iter().map(|r| r.vertices.clone()).collect();
        let corr = Correspondence::identity(mesh.vertex_count());
        let om = overlap_matrix(&sets, &sets, &corr, areas.da(), areas.da());
        let thresholds: Vec<f64> = (1..=19).map(|i| i as f64 / 20.0).collect();
        let curve = repeatability(&om, &thresholds);
        let writer = ReportWriter { out_dir: &out };
        writer
            .write_repeatability(
                &thresholds,
                &curve.repeatability,
                &curve
                    .correspondences
                    .iter()
                    .map(|&c| c as f64)
                    .collect::<Vec<_>>(),
            )
            .unwrap();
        let d = distance_matrix(&desc, &desc).unwrap();
        let flat_o: Vec<f64> = (0..sets.len() * sets.len())
            .map(|idx| om.at(idx / sets.len(), idx % sets.len()))
            .collect();
        let roc = descriptor_roc(&d, &flat_o, 0.75).unwrap();
        writer.write_roc(&roc).unwrap();

        [
            "basis.spec",
            "regions.json",
            "descriptors.json",
            "repeatability.csv",
            "roc.csv",
        ]
        .iter()
        .map(|name| (name.to_string(), std::fs::read(out.join(name)).unwrap()))
        .collect()
    };

    let a = run("a");
    let b = run("b");
    for ((name, bytes_a), (_, bytes_b)) in a.iter().zip(&b) {
        assert_eq!(bytes_a, bytes_b, "{name} differs between runs");
    }
    println!(
        "acceptance 10 (determinism): PASS — {} artifacts byte-identical",
        a.len()
    );
}
