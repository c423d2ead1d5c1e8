//! FNV-1a content hashing for cache/document consistency checks.

use crate::mesh::TriangleMesh;

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

#[derive(Debug, Clone)]
pub struct Fnv1a64 {
    state: u64,
}

impl Fnv1a64 {
    pub fn new() -> Self {
        Self { state: FNV_OFFSET }
    }

    pub fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.state ^= b as u64;
            self.state = self.state.wrapping_mul(FNV_PRIME);
        }
    }

    pub fn write_u64(&mut self, v: u64) {
        self.write(&v.to_le_bytes());
    }

    pub fn write_f64(&mut self, v: f64) {
        self.write(&v.to_le_bytes());
    }

    pub fn finish(&self) -> u64 {
        self.state
    }
}

impl Default for Fnv1a64 {
    fn default() -> Self {
        Self::new()
    }
}

/// Hash of the geometry a mesh file defines: vertex count, face count,
/// positions and face indices in order. Identical meshes loaded from
/// different files hash the same.
pub fn mesh_content_hash(mesh: &TriangleMesh) -> u64 {
    let mut h = Fnv1a64::new();
    h.write(b"MSC-MESH");
    h.write_u64(mesh.vertex_count() as u64);
    h.write_u64(mesh.face_count() as u64);
    for p in mesh.positions() {
        h.write_f64(p[0]);
        h.write_f64(p[1]);
        h.write_f64(p[2]);
    }
    for f in mesh.faces() {
        h.write_u64(f[0] as u64);
        h.write_u64(f[1] as u64);
        h.write_u64(f[2] as u64);
    }
    h.finish()
}

/// Renders a hash the way documents store it.
pub fn hash_hex(h: u64) -> String {
    format!("{h:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_fnv_vectors() {
        let mut h = Fnv1a64::new();
        h.write(b"");
        assert_eq!(h.finish(), 0xcbf29ce484222325);
        let mut h = Fnv1a64::new();
        h.write(b"a");
        assert_eq!(h.finish(), 0xaf63dc4c8601ec8c);
    }

    #[test]
    fn mesh_hash_tracks_geometry() {
        let m1 = crate::synth::grid_mesh(3, 3, |_, _| 0.0);
        let m2 = crate::synth::grid_mesh(3, 3, |_, _| 0.0);
        let m3 = crate::synth::grid_mesh(3, 3, |x, _| 0.1 * x);
        assert_eq!(mesh_content_hash(&m1), mesh_content_hash(&m2));
        assert_ne!(mesh_content_hash(&m1), mesh_content_hash(&m3));
    }
}
