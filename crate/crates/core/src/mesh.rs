//! Triangle mesh loading, validation and basic connectivity.
//!
//! Meshes are immutable after construction: positions, faces and the derived
//! edge set never change, so they can be shared freely across threads.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Supported ASCII mesh formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("face {face} references vertex {index} but the mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        face: usize,
        index: usize,
        vertex_count: usize,
    },
    #[error("degenerate faces (repeated vertex or zero area): {}", format_face_list(.faces))]
    DegenerateFaces { faces: Vec<usize> },
    #[error("mesh has no faces")]
    Empty,
    #[error("cannot infer mesh format from extension of {0}")]
    UnknownFormat(PathBuf),
}

fn format_face_list(faces: &[usize]) -> String {
    const SHOWN: usize = 16;
    let mut s = faces
        .iter()
        .take(SHOWN)
        .map(|f| f.to_string())
        .collect::<Vec<_>>()
        .join(", ");
    if faces.len() > SHOWN {
        s.push_str(&format!(", … ({} total)", faces.len()));
    }
    s
}

/// Non-fatal observations made while constructing a mesh.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeshWarning {
    /// A face duplicated an earlier one (same vertex set) and was dropped.
    DuplicateFace { face: usize, first: usize },
}

impl fmt::Display for MeshWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshWarning::DuplicateFace { face, first } => {
                write!(f, "face {face} duplicates face {first} and was dropped")
            }
        }
    }
}

/// An indexed triangle mesh with a derived, deduplicated edge set.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    positions: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
    edges: Vec<(usize, usize)>,
}

impl TriangleMesh {
    /// Validates and indexes a mesh. Faces with out-of-range indices,
    /// repeated vertices or zero area are rejected; exact duplicates are
    /// dropped with a warning.
    pub fn new(
        positions: Vec<[f64; 3]>,
        faces: Vec<[usize; 3]>,
    ) -> Result<(Self, Vec<MeshWarning>), MeshError> {
        let n = positions.len();
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v >= n {
                    return Err(MeshError::IndexOutOfRange {
                        face: fi,
                        index: v,
                        vertex_count: n,
                    });
                }
            }
        }

        let scale = bbox_diagonal(&positions).max(f64::MIN_POSITIVE);
        let area_tol = 1e-14 * scale * scale;
        let mut degenerate = Vec::new();
        for (fi, f) in faces.iter().enumerate() {
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                degenerate.push(fi);
                continue;
            }
            if triangle_area(&positions, f) <= area_tol {
                degenerate.push(fi);
            }
        }
        if !degenerate.is_empty() {
            return Err(MeshError::DegenerateFaces { faces: degenerate });
        }

        let mut warnings = Vec::new();
        let mut seen: BTreeSet<[usize; 3]> = BTreeSet::new();
        let mut kept = Vec::with_capacity(faces.len());
        let mut first_of = std::collections::BTreeMap::new();
        for (fi, f) in faces.iter().enumerate() {
            let mut key = *f;
            key.sort_unstable();
            if seen.insert(key) {
                first_of.insert(key, fi);
                kept.push(*f);
            } else {
                warnings.push(MeshWarning::DuplicateFace {
                    face: fi,
                    first: first_of[&key],
                });
            }
        }

        let mut edge_set: BTreeSet<(usize, usize)> = BTreeSet::new();
        for f in &kept {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                edge_set.insert((a.min(b), a.max(b)));
            }
        }

        Ok((
            Self {
                positions,
                faces: kept,
                edges: edge_set.into_iter().collect(),
            },
            warnings,
        ))
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Undirected edges as `(min, max)` index pairs in lexicographic order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted neighbor lists; symmetric by construction.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.positions.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Sum of all triangle areas.
    pub fn surface_area(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| triangle_area(&self.positions, f))
            .sum()
    }

    /// Returns a copy with every position transformed by `f`, revalidated.
    pub fn transformed(&self, f: impl Fn(&[f64; 3]) -> [f64; 3]) -> Result<Self, MeshError> {
        let positions = self.positions.iter().map(f).collect();
        Ok(Self::new(positions, self.faces.clone())?.0)
    }

    pub fn load(path: &Path, format: MeshFormat) -> Result<(Self, Vec<MeshWarning>), MeshError> {
        match format {
            MeshFormat::Off => load_off(path),
            MeshFormat::Obj => load_obj(path),
        }
    }

    /// Loads a mesh, picking the format from the file extension.
    pub fn load_auto(path: &Path) -> Result<(Self, Vec<MeshWarning>), MeshError> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        match ext.as_deref() {
            Some("off") => load_off(path),
            Some("obj") => load_obj(path),
            _ => Err(MeshError::UnknownFormat(path.to_path_buf())),
        }
    }

    /// Writes the mesh as ASCII OFF. Float formatting round-trips exactly.
    pub fn save_off(&self, path: &Path) -> Result<(), MeshError> {
        let io_err = |source| MeshError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
        let res = (|| {
            writeln!(out, "OFF")?;
            writeln!(out, "{} {} 0", self.positions.len(), self.faces.len())?;
            for p in &self.positions {
                writeln!(out, "{} {} {}", p[0], p[1], p[2])?;
            }
            for f in &self.faces {
                writeln!(out, "3 {} {} {}", f[0], f[1], f[2])?;
            }
            out.flush()
        })();
        res.map_err(io_err)
    }
}

fn bbox_diagonal(positions: &[[f64; 3]]) -> f64 {
    if positions.is_empty() {
        return 0.0;
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in positions {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2) + (hi[2] - lo[2]).powi(2)).sqrt()
}

pub(crate) fn triangle_area(positions: &[[f64; 3]], f: &[usize; 3]) -> f64 {
    let a = positions[f[0]];
    let b = positions[f[1]];
    let c = positions[f[2]];
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let cx = u[1] * v[2] - u[2] * v[1];
    let cy = u[2] * v[0] - u[0] * v[2];
    let cz = u[0] * v[1] - u[1] * v[0];
    0.5 * (cx * cx + cy * cy + cz * cz).sqrt()
}

/// Per-vertex area elements from barycentric lumping: each triangle donates a
/// third of its area to each corner.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexAreas {
    da: Vec<f64>,
    isolated: Vec<usize>,
}

impl VertexAreas {
    /// Wraps raw area elements; `da = 1` per vertex makes area equal
    /// cardinality, the convention for plain graphs.
    pub fn from_da(da: Vec<f64>) -> Self {
        let isolated = (0..da.len()).filter(|&v| da[v] == 0.0).collect();
        Self { da, isolated }
    }

    pub fn da(&self) -> &[f64] {
        &self.da
    }

    pub fn total(&self) -> f64 {
        self.da.iter().sum()
    }

    /// Vertices referenced by no face; their area element is zero.
    pub fn isolated(&self) -> &[usize] {
        &self.isolated
    }
}

pub fn vertex_areas(mesh: &TriangleMesh) -> VertexAreas {
    let mut da = vec![0.0; mesh.vertex_count()];
    for f in mesh.faces() {
        let third = triangle_area(mesh.positions(), f) / 3.0;
        for &v in f {
            da[v] += third;
        }
    }
    let isolated = (0..da.len()).filter(|&v| da[v] == 0.0).collect();
    VertexAreas { da, isolated }
}

struct LineSource {
    path: PathBuf,
    lines: std::io::Lines<BufReader<std::fs::File>>,
    lineno: usize,
}

impl LineSource {
    fn open(path: &Path) -> Result<Self, MeshError> {
        let file = std::fs::File::open(path).map_err(|source| MeshError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self {
            path: path.to_path_buf(),
            lines: BufReader::new(file).lines(),
            lineno: 0,
        })
    }

    fn err(&self, msg: impl Into<String>) -> MeshError {
        MeshError::Parse {
            path: self.path.clone(),
            line: self.lineno,
            msg: msg.into(),
        }
    }

    /// Next whitespace-tokenized line, skipping blanks and `#` comments.
    fn next_tokens(&mut self) -> Result<Option<Vec<String>>, MeshError> {
        loop {
            let Some(line) = self.lines.next() else {
                return Ok(None);
            };
            self.lineno += 1;
            let line = line.map_err(|source| MeshError::Io {
                path: self.path.clone(),
                source,
            })?;
            let body = line.split('#').next().unwrap_or("");
            let toks: Vec<String> = body.split_whitespace().map(str::to_owned).collect();
            if !toks.is_empty() {
                return Ok(Some(toks));
            }
        }
    }
}

fn parse_num<T: std::str::FromStr>(
    src: &LineSource,
    tok: &str,
    what: &str,
) -> Result<T, MeshError> {
    tok.parse()
        .map_err(|_| src.err(format!("invalid {what}: {tok:?}")))
}

pub fn load_off(path: &Path) -> Result<(TriangleMesh, Vec<MeshWarning>), MeshError> {
    let mut src = LineSource::open(path)?;
    let header = src
        .next_tokens()?
        .ok_or_else(|| src.err("empty OFF file"))?;
    if header[0] != "OFF" {
        return Err(src.err(format!("expected OFF header, found {:?}", header[0])));
    }
    // Counts may share a line with the keyword or follow on the next one.
    let counts = if header.len() > 1 {
        header[1..].to_vec()
    } else {
        src.next_tokens()?
            .ok_or_else(|| src.err("missing OFF counts"))?
    };
    if counts.len() < 2 {
        return Err(src.err("OFF counts line needs at least vertex and face counts"));
    }
    let nv: usize = parse_num(&src, &counts[0], "vertex count")?;
    let nf: usize = parse_num(&src, &counts[1], "face count")?;

    let mut positions = Vec::with_capacity(nv);
    for _ in 0..nv {
        let toks = src
            .next_tokens()?
            .ok_or_else(|| src.err("unexpected end of file in vertex list"))?;
        if toks.len() < 3 {
            return Err(src.err("vertex line needs 3 coordinates"));
        }
        let x: f64 = parse_num(&src, &toks[0], "coordinate")?;
        let y: f64 = parse_num(&src, &toks[1], "coordinate")?;
        let z: f64 = parse_num(&src, &toks[2], "coordinate")?;
        positions.push([x, y, z]);
    }

    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let toks = src
            .next_tokens()?
            .ok_or_else(|| src.err("unexpected end of file in face list"))?;
        let arity: usize = parse_num(&src, &toks[0], "face arity")?;
        if arity != 3 {
            return Err(src.err(format!("only triangles are supported, found {arity}-gon")));
        }
        if toks.len() < 4 {
            return Err(src.err("face line needs 3 indices"));
        }
        let a: usize = parse_num(&src, &toks[1], "face index")?;
        let b: usize = parse_num(&src, &toks[2], "face index")?;
        let c: usize = parse_num(&src, &toks[3], "face index")?;
        faces.push([a, b, c]);
    }

    TriangleMesh::new(positions, faces)
}

pub fn load_obj(path: &Path) -> Result<(TriangleMesh, Vec<MeshWarning>), MeshError> {
    let mut src = LineSource::open(path)?;
    let mut positions: Vec<[f64; 3]> = Vec::new();
    let mut faces = Vec::new();
    while let Some(toks) = src.next_tokens()? {
        match toks[0].as_str() {
            "v" => {
                if toks.len() < 4 {
                    return Err(src.err("vertex line needs 3 coordinates"));
                }
                let x: f64 = parse_num(&src, &toks[1], "coordinate")?;
                let y: f64 = parse_num(&src, &toks[2], "coordinate")?;
                let z: f64 = parse_num(&src, &toks[3], "coordinate")?;
                positions.push([x, y, z]);
            }
            "f" => {
                if toks.len() != 4 {
                    return Err(src.err(format!(
                        "only triangles are supported, face has {} vertices",
                        toks.len() - 1
                    )));
                }
                let mut idx = [0usize; 3];
                for (slot, tok) in idx.iter_mut().zip(&toks[1..]) {
                    let vertex_part = tok.split('/').next().unwrap_or("");
                    let raw: i64 = parse_num(&src, vertex_part, "face index")?;
                    // OBJ indices are 1-based; negative values count back
                    // from the current vertex list.
                    let resolved = if raw > 0 {
                        raw - 1
                    } else if raw < 0 {
                        positions.len() as i64 + raw
                    } else {
                        return Err(src.err("face index 0 is invalid in OBJ"));
                    };
                    if resolved < 0 {
                        return Err(src.err(format!("relative face index {raw} underflows")));
                    }
                    *slot = resolved as usize;
                }
                faces.push(idx);
            }
            // Normals, texture coordinates, materials and grouping are ignored.
            _ => {}
        }
    }
    TriangleMesh::new(positions, faces)
}
