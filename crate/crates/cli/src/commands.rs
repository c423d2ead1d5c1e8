//! Subcommand implementations.

use std::path::Path;

use msc_core::descriptors::{
    self, default_hks_times, load_vocabulary, save_vocabulary, PointDescriptorField,
};
use msc_core::detector::{suggested_max_instability, DetectorParams};
use msc_core::document::{
    curve_value_at, export_colored_ply, file_content_hash, read_descriptors_document,
    read_regions_document, write_descriptors_document, write_regions_document, DescribeConfig,
    DetectConfig, DocError, EvalSummary, RegionsDocument, ReportWriter,
};
use msc_core::evaluation::{
    descriptor_roc, distance_matrix, matching_score, overlap_matrix, parse_correspondence_file,
    repeatability, Correspondence, EvalError,
};
use msc_core::hash::{hash_hex, mesh_content_hash};
use msc_core::laplacian::{cotangent_stiffness, mass_matrix};
use msc_core::mesh::{vertex_areas, TriangleMesh, VertexAreas};
use msc_core::pipeline::detect_regions;
use msc_core::spectral::{
    eigenpairs, load_basis_cache, save_basis_cache, EigenOptions, SpectralBasis, TimeGrid,
};
use msc_core::weighting::WeightingSpec;

use crate::errors::AppError;
use crate::{DescribeArgs, DetectArgs, EvalArgs, ExportPlyArgs, SpectrumArgs, VocabArgs};

fn load_mesh(path: &Path) -> Result<(TriangleMesh, u64), AppError> {
    let (mesh, warnings) = TriangleMesh::load_auto(path)?;
    for w in &warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    let hash = mesh_content_hash(&mesh);
    Ok((mesh, hash))
}

struct LoadedBasis {
    basis: SpectralBasis,
    areas: VertexAreas,
}

/// Loads a cache, checks it against the mesh and re-validates the basis
/// invariants before use.
fn load_validated_basis(
    mesh: &TriangleMesh,
    mesh_hash: u64,
    cache_path: &Path,
) -> Result<LoadedBasis, AppError> {
    let contents = load_basis_cache(cache_path)?;
    if contents.mesh_hash != mesh_hash {
        return Err(AppError::Data(format!(
            "cache {} was computed for mesh hash {}, input mesh has {}",
            cache_path.display(),
            hash_hex(contents.mesh_hash),
            hash_hex(mesh_hash)
        )));
    }
    if contents.n != mesh.vertex_count() {
        return Err(AppError::Data(format!(
            "cache holds {} vertices, mesh has {}",
            contents.n,
            mesh.vertex_count()
        )));
    }
    let areas = vertex_areas(mesh);
    for &v in areas.isolated() {
        eprintln!("warning: vertex {v} belongs to no face (zero area element)");
    }
    let w = cotangent_stiffness(mesh);
    let a = mass_matrix(&areas)?;
    let basis = contents.into_basis(areas.da().to_vec());
    basis.validate(&w, &a)?;
    Ok(LoadedBasis { basis, areas })
}

pub fn spectrum(args: SpectrumArgs) -> Result<(), AppError> {
    let (mesh, hash) = load_mesh(&args.mesh)?;
    if args.k > mesh.vertex_count() {
        return Err(AppError::Spectral(
            msc_core::spectral::SpectralError::KOutOfRange {
                k: args.k,
                n: mesh.vertex_count(),
            },
        ));
    }
    if args.out.exists() {
        if let Ok(contents) = load_basis_cache(&args.out) {
            if contents.mesh_hash == hash && contents.k == args.k {
                eprintln!("cache {} is up to date", args.out.display());
                return Ok(());
            }
        }
        eprintln!(
            "cache {} is stale or unreadable; recomputing",
            args.out.display()
        );
    }
    let areas = vertex_areas(&mesh);
    for &v in areas.isolated() {
        eprintln!("warning: vertex {v} belongs to no face (zero area element)");
    }
    let w = cotangent_stiffness(&mesh);
    let a = mass_matrix(&areas)?;
    let opts = EigenOptions {
        seed: args.seed,
        ..EigenOptions::default()
    };
    let basis = eigenpairs(&w, &a, args.k, &opts)?;
    save_basis_cache(&args.out, hash, &basis)?;
    eprintln!(
        "solved {} eigenpairs of {} vertices -> {}",
        args.k,
        mesh.vertex_count(),
        args.out.display()
    );
    Ok(())
}

pub fn detect(args: DetectArgs) -> Result<(), AppError> {
    let spec = WeightingSpec::parse(&args.weight)?;
    let (mesh, hash) = load_mesh(&args.mesh)?;
    let loaded = load_validated_basis(&mesh, hash, &args.cache)?;
    let params = DetectorParams {
        max_instability: args
            .max_instability
            .unwrap_or_else(|| suggested_max_instability(&spec)),
        overlap_dedup: args.dedup,
        min_region_frac: args.min_frac,
        max_region_frac: args.max_frac,
    };
    let (regions, _) = detect_regions(&mesh, &loaded.areas, &loaded.basis, &spec, &params)?;
    let config = DetectConfig::from_params(spec.to_string(), loaded.basis.k(), args.seed, &params);
    let doc = RegionsDocument::new(hash, config, loaded.areas.da().to_vec(), regions);
    write_regions_document(&args.out, &doc)?;
    eprintln!(
        "detected {} regions -> {}",
        doc.regions.len(),
        args.out.display()
    );
    Ok(())
}

fn point_field(
    basis: &SpectralBasis,
    kind: &str,
    times: &Option<Vec<f64>>,
    freqs: usize,
) -> Result<PointDescriptorField, AppError> {
    match kind {
        "hks" => {
            let times = times.clone().unwrap_or_else(default_hks_times);
            Ok(descriptors::hks_field(basis, &times)?)
        }
        "sihks" => Ok(descriptors::sihks_field(
            basis,
            &TimeGrid::standard(),
            freqs,
        )?),
        other => Err(AppError::Config(format!(
            "unknown point descriptor {other:?}; expected hks or sihks"
        ))),
    }
}

pub fn describe(args: DescribeArgs) -> Result<(), AppError> {
    let (pool, point_kind) = match args.descriptor.as_str() {
        "avg-hks" => ("avg", "hks"),
        "avg-sihks" => ("avg", "sihks"),
        "bof-hks" => ("bof", "hks"),
        "bof-sihks" => ("bof", "sihks"),
        other => {
            return Err(AppError::Config(format!(
                "unknown descriptor {other:?}; expected avg-hks, avg-sihks, bof-hks or bof-sihks"
            )))
        }
    };
    let (mesh, hash) = load_mesh(&args.mesh)?;
    let regions_doc = read_regions_document(&args.regions)?;
    if regions_doc.mesh_hash != hash_hex(hash) {
        return Err(AppError::Doc(DocError::MeshHashMismatch {
            document: regions_doc.mesh_hash.clone(),
            input: hash_hex(hash),
        }));
    }
    let loaded = load_validated_basis(&mesh, hash, &args.cache)?;
    let field = point_field(&loaded.basis, point_kind, &args.times, args.freqs)?;

    let mut config = DescribeConfig {
        descriptor: args.descriptor.clone(),
        hks_times: (point_kind == "hks")
            .then(|| args.times.clone().unwrap_or_else(default_hks_times)),
        num_freqs: (point_kind == "sihks").then_some(args.freqs),
        sigma: None,
        vocab_p: None,
        vocab_seed: None,
    };
    let vectors = match pool {
        "avg" => regions_doc
            .regions
            .iter()
            .map(|r| descriptors::region_average(&field, &r.vertices, &loaded.areas))
            .collect::<Result<Vec<_>, _>>()?,
        _ => {
            let vocab_path = args.vocab.as_ref().ok_or_else(|| {
                AppError::Config(
                    "bag-of-features descriptors need --vocab <vocabulary file>".into(),
                )
            })?;
            let vocab = load_vocabulary(vocab_path)?;
            let sigma = args.sigma.unwrap_or(vocab.sigma_default);
            config.sigma = Some(sigma);
            config.vocab_p = Some(vocab.p());
            config.vocab_seed = Some(vocab.seed);
            let theta = descriptors::soft_quantize_field(&field, &vocab, sigma)?;
            regions_doc
                .regions
                .iter()
                .map(|r| descriptors::region_bof(&theta, &r.vertices, &loaded.areas))
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    let regions_hash = file_content_hash(&args.regions)?;
    let doc = msc_core::document::DescriptorsDocument::new(
        &regions_doc.mesh_hash,
        regions_hash,
        config,
        vectors,
    );
    write_descriptors_document(&args.out, &doc)?;
    eprintln!(
        "described {} regions -> {}",
        doc.descriptors.len(),
        args.out.display()
    );
    Ok(())
}

pub fn vocab(args: VocabArgs) -> Result<(), AppError> {
    if args.mesh.len() != args.cache.len() {
        return Err(AppError::Config(format!(
            "{} meshes but {} caches; the lists must align",
            args.mesh.len(),
            args.cache.len()
        )));
    }
    let mut fields = Vec::new();
    for (mesh_path, cache_path) in args.mesh.iter().zip(&args.cache) {
        let (mesh, hash) = load_mesh(mesh_path)?;
        let loaded = load_validated_basis(&mesh, hash, cache_path)?;
        fields.push(point_field(
            &loaded.basis,
            &args.descriptor,
            &args.times,
            args.freqs,
        )?);
    }
    let refs: Vec<&PointDescriptorField> = fields.iter().collect();
    let vocab = descriptors::build_vocabulary(&refs, args.p, args.seed)?;
    save_vocabulary(&args.out, &vocab)?;
    eprintln!(
        "trained {}-word vocabulary over {} shapes -> {}",
        vocab.p(),
        fields.len(),
        args.out.display()
    );
    Ok(())
}

struct EvalPair {
    null_doc: RegionsDocument,
    trans_doc: RegionsDocument,
    corr: Correspondence,
    null_desc: Option<Vec<Vec<f64>>>,
    trans_desc: Option<Vec<Vec<f64>>>,
}

fn load_descriptors_for(
    regions_path: &Path,
    regions_doc: &RegionsDocument,
    desc_path: &Path,
) -> Result<Vec<Vec<f64>>, AppError> {
    let doc = read_descriptors_document(desc_path)?;
    if doc.mesh_hash != regions_doc.mesh_hash {
        return Err(AppError::Doc(DocError::MeshHashMismatch {
            document: doc.mesh_hash.clone(),
            input: regions_doc.mesh_hash.clone(),
        }));
    }
    let expected = hash_hex(file_content_hash(regions_path)?);
    if doc.regions_hash != expected {
        return Err(AppError::Doc(DocError::RegionsHashMismatch {
            expected,
            found: doc.regions_hash.clone(),
        }));
    }
    if doc.descriptors.len() != regions_doc.regions.len() {
        return Err(AppError::Data(format!(
            "{} descriptors for {} regions",
            doc.descriptors.len(),
            regions_doc.regions.len()
        )));
    }
    Ok(doc.descriptors)
}

fn load_eval_pairs(args: &EvalArgs) -> Result<Vec<EvalPair>, AppError> {
    let n = args.null_regions.len();
    let aligned = |name: &str, len: usize, required: bool| -> Result<(), AppError> {
        if len != n && (required || len != 0) {
            return Err(AppError::Config(format!(
                "--{name} must be given once per pair ({n}), got {len}"
            )));
        }
        Ok(())
    };
    aligned("trans-regions", args.trans_regions.len(), true)?;
    aligned("corr", args.corr.len(), true)?;
    aligned("corr-sym", args.corr_sym.len(), false)?;
    aligned("null-descriptors", args.null_descriptors.len(), false)?;
    aligned("trans-descriptors", args.trans_descriptors.len(), false)?;
    if args.null_descriptors.is_empty() != args.trans_descriptors.is_empty() {
        return Err(AppError::Config(
            "descriptor documents must be given for both sides or neither".into(),
        ));
    }

    let mut pairs = Vec::with_capacity(n);
    for i in 0..n {
        let null_doc = read_regions_document(&args.null_regions[i])?;
        let trans_doc = read_regions_document(&args.trans_regions[i])?;
        let map = parse_correspondence_file(&args.corr[i])?;
        if map.len() != trans_doc.vertex_count {
            return Err(AppError::Eval(EvalError::LengthMismatch {
                expected: trans_doc.vertex_count,
                got: map.len(),
            }));
        }
        let mut corr = Correspondence::new(map, null_doc.vertex_count)?;
        if let Some(sym_path) = args.corr_sym.get(i) {
            let sym = parse_correspondence_file(sym_path)?;
            corr = corr.with_symmetric(sym, null_doc.vertex_count)?;
        }
        let (null_desc, trans_desc) = if args.null_descriptors.is_empty() {
            (None, None)
        } else {
            (
                Some(load_descriptors_for(
                    &args.null_regions[i],
                    &null_doc,
                    &args.null_descriptors[i],
                )?),
                Some(load_descriptors_for(
                    &args.trans_regions[i],
                    &trans_doc,
                    &args.trans_descriptors[i],
                )?),
            )
        };
        pairs.push(EvalPair {
            null_doc,
            trans_doc,
            corr,
            null_desc,
            trans_desc,
        });
    }
    Ok(pairs)
}

pub fn eval(args: EvalArgs) -> Result<(), AppError> {
    let thresholds: Vec<f64> = if args.overlaps.is_empty() {
        (1..=19).map(|i| i as f64 / 20.0).collect()
    } else {
        let mut t = args.overlaps.clone();
        t.sort_by(f64::total_cmp);
        t
    };
    let pairs = load_eval_pairs(&args)?;
    std::fs::create_dir_all(&args.out).map_err(|source| {
        AppError::Doc(DocError::Io {
            path: args.out.clone(),
            source,
        })
    })?;

    let mut warnings: Vec<String> = Vec::new();
    let mut mean_rep = vec![0.0f64; thresholds.len()];
    let mut total_corr = vec![0.0f64; thresholds.len()];
    let mut pooled_distances = Vec::new();
    let mut pooled_overlaps = Vec::new();
    let mut match_correct = vec![0usize; thresholds.len()];
    let mut match_total = 0usize;
    let mut null_count_sum = 0.0;
    let mut trans_count_sum = 0.0;

    for (pi, pair) in pairs.iter().enumerate() {
        let null_sets = pair.null_doc.region_vertex_sets();
        let trans_sets = pair.trans_doc.region_vertex_sets();
        null_count_sum += null_sets.len() as f64;
        trans_count_sum += trans_sets.len() as f64;
        if trans_sets.is_empty() {
            warnings.push(format!(
                "pair {pi}: transformed shape has no detected regions; repeatability counted as 0"
            ));
        }
        let om = overlap_matrix(
            &null_sets,
            &trans_sets,
            &pair.corr,
            &pair.null_doc.vertex_areas,
            &pair.trans_doc.vertex_areas,
        );
        let curve = repeatability(&om, &thresholds);
        for (i, (r, c)) in curve
            .repeatability
            .iter()
            .zip(&curve.correspondences)
            .enumerate()
        {
            mean_rep[i] += r / pairs.len() as f64;
            total_corr[i] += *c as f64;
        }

        if let (Some(null_desc), Some(trans_desc)) = (&pair.null_desc, &pair.trans_desc) {
            if !null_desc.is_empty() && !trans_desc.is_empty() {
                let d = distance_matrix(null_desc, trans_desc)?;
                pooled_distances.extend_from_slice(&d);
                pooled_overlaps.extend(
                    (0..null_sets.len())
                        .flat_map(|i| (0..trans_sets.len()).map(move |j| (i, j)))
                        .map(|(i, j)| om.at(i, j)),
                );
                let curve = matching_score(
                    &d,
                    &(0..null_sets.len() * trans_sets.len())
                        .map(|idx| om.at(idx / trans_sets.len(), idx % trans_sets.len()))
                        .collect::<Vec<_>>(),
                    null_sets.len(),
                    trans_sets.len(),
                    &thresholds,
                )?;
                for (i, c) in curve.correct_counts.iter().enumerate() {
                    match_correct[i] += c;
                }
                match_total += null_sets.len();
            }
        }
    }

    let writer = ReportWriter { out_dir: &args.out };
    writer.write_repeatability(&thresholds, &mean_rep, &total_corr)?;

    let mut eer = None;
    if !pooled_distances.is_empty() {
        match descriptor_roc(&pooled_distances, &pooled_overlaps, args.rho) {
            Ok(roc) => {
                writer.write_roc(&roc)?;
                eer = Some(roc.eer);
            }
            Err(e @ (EvalError::NoPositivePairs | EvalError::NoNegativePairs)) => {
                warnings.push(format!("ROC skipped: {e}"));
            }
            Err(e) => return Err(AppError::Eval(e)),
        }
    }
    let mut matching_at_075 = None;
    if match_total > 0 {
        let scores: Vec<f64> = match_correct
            .iter()
            .map(|&c| c as f64 / match_total as f64)
            .collect();
        let curve = msc_core::evaluation::MatchingCurve {
            rhos: thresholds.clone(),
            scores: scores.clone(),
            correct_counts: match_correct.clone(),
            first_matches: Vec::new(),
        };
        writer.write_matching(&curve)?;
        matching_at_075 = Some(curve_value_at(&thresholds, &scores, 0.75));
    }

    let summary = EvalSummary {
        pairs: pairs.len(),
        rho: args.rho,
        overlap_thresholds: thresholds.clone(),
        repeatability_at_075: curve_value_at(&thresholds, &mean_rep, 0.75),
        correspondences_at_075: curve_value_at(&thresholds, &total_corr, 0.75),
        avg_null_regions: null_count_sum / pairs.len().max(1) as f64,
        avg_transformed_regions: trans_count_sum / pairs.len().max(1) as f64,
        eer,
        matching_score_at_075: matching_at_075,
        warnings: warnings.clone(),
    };
    writer.write_summary(&summary)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    eprintln!("evaluated {} pairs -> {}", pairs.len(), args.out.display());
    Ok(())
}

pub fn export_ply(args: ExportPlyArgs) -> Result<(), AppError> {
    let (mesh, hash) = load_mesh(&args.mesh)?;
    let doc = read_regions_document(&args.regions)?;
    if doc.mesh_hash != hash_hex(hash) {
        return Err(AppError::Doc(DocError::MeshHashMismatch {
            document: doc.mesh_hash.clone(),
            input: hash_hex(hash),
        }));
    }
    export_colored_ply(&args.out, &mesh, &doc.regions)?;
    eprintln!(
        "wrote {} with {} colored regions",
        args.out.display(),
        doc.regions.len()
    );
    Ok(())
}
