use std::fmt::Write as _;

use glam::DVec3;

use super::RenderError;
use crate::pose::RigidPose;

/// Flat-colored triangle soup.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<DVec3>,
    pub triangles: Vec<[u32; 3]>,
    pub base_color: [u8; 3],
}

impl TriangleMesh {
    pub fn new(vertices: Vec<DVec3>, triangles: Vec<[u32; 3]>, base_color: [u8; 3]) -> Result<Self, RenderError> {
        let n = vertices.len() as u32;
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
            return Err(RenderError::Mesh(format!("triangle {t:?} references a vertex beyond {n}")));
        }
        Ok(Self { vertices, triangles, base_color })
    }

    /// Axis-aligned box with outward-facing triangles.
    pub fn cuboid(min: DVec3, max: DVec3, base_color: [u8; 3]) -> Self {
        let vertices = (0..8)
            .map(|i| {
                DVec3::new(
                    if i & 1 == 0 { min.x } else { max.x },
                    if i & 2 == 0 { min.y } else { max.y },
                    if i & 4 == 0 { min.z } else { max.z },
                )
            })
            .collect();
        #[rustfmt::skip]
        let triangles = vec![
            [0, 2, 1], [1, 2, 3], // -z
            [4, 5, 6], [5, 7, 6], // +z
            [0, 1, 4], [1, 5, 4], // -y
            [2, 6, 3], [3, 6, 7], // +y
            [0, 4, 2], [2, 4, 6], // -x
            [1, 3, 5], [3, 7, 5], // +x
        ];
        Self { vertices, triangles, base_color }
    }

    /// Copy with every vertex mapped through `pose`.
    pub fn transformed(&self, pose: &RigidPose) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| pose.transform_point(*v)).collect(),
            triangles: self.triangles.clone(),
            base_color: self.base_color,
        }
    }

    pub fn parse_obj(text: &str, base_color: [u8; 3]) -> Result<Self, RenderError> {
        parse_obj(text, base_color)
    }

    pub fn to_obj(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
        }
        for [a, b, c] in &self.triangles {
            let _ = writeln!(out, "f {} {} {}", a + 1, b + 1, c + 1);
        }
        out
    }
}

/// Square-section rod from the pose origin to the tip along local +Z, used
/// to draw the tracked instrument.
pub fn instrument_mesh(tip_length: f64, base_color: [u8; 3]) -> TriangleMesh {
    let half = (tip_length * 0.04).max(0.002);
    TriangleMesh::cuboid(DVec3::new(-half, -half, 0.0), DVec3::new(half, half, tip_length), base_color)
}

/// Wavefront OBJ subset: `v x y z` and polygonal `f` records (fan
/// triangulated, `v/vt/vn` forms and negative indices accepted). Other
/// records are ignored.
fn parse_obj(text: &str, base_color: [u8; 3]) -> Result<TriangleMesh, RenderError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let err = |msg: &str| RenderError::Mesh(format!("line {}: {msg}: {line:?}", lineno + 1));
        let mut words = line.split_whitespace();
        match words.next() {
            Some("v") => {
                let xyz: Vec<f64> = words.take(3).map(str::parse).collect::<Result<_, _>>().map_err(|_| err("bad vertex"))?;
                let [x, y, z] = xyz[..] else { return Err(err("vertex needs 3 coordinates")) };
                vertices.push(DVec3::new(x, y, z));
            }
            Some("f") => {
                let n = vertices.len() as i64;
                let idx: Vec<u32> = words
                    .map(|w| {
                        let i: i64 = w.split('/').next().unwrap_or("").parse().map_err(|_| err("bad face index"))?;
                        let resolved = if i < 0 { n + i } else { i - 1 };
                        if (0..n).contains(&resolved) {
                            Ok(resolved as u32)
                        } else {
                            Err(err("face index out of range"))
                        }
                    })
                    .collect::<Result<_, _>>()?;
                if idx.len() < 3 {
                    return Err(err("face needs at least 3 vertices"));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, triangles, base_color)
}
