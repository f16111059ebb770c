//! Seeded synthetic twin scenes: a box room with an operating table, a
//! surgeon point cloud moving along the table, and a drill trajectory that
//! spirals onto an entry point and then dwells there.
//!
//! Every byte of the output is a function of [`SyntheticSceneSpec`].

use std::f64::consts::TAU;
use std::io;
use std::path::Path;

use glam::{DQuat, DVec3, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pointcloud::{crop_aabb, encode_spcf, voxel_downsample, Aabb, PointCloudFrame, VoxelGridParams};
use crate::pose::{encode_strj, RigidPose, Trajectory};
use crate::render::TriangleMesh;
use crate::scene::{CameraConfig, EntityDescriptor, EntityKind, SceneManifest, FRAME_INDEX_TOKEN};

pub const SURGEON_ID: &str = "surgeon";
pub const INSTRUMENT_ID: &str = "drill";
pub const ROOM_ID: &str = "room";
pub const TABLE_ID: &str = "table";

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSceneSpec {
    pub name: String,
    pub frame_count: u32,
    pub anim_fps: f64,
    /// Raw points sampled per frame before cropping and downsampling.
    pub points_per_frame: u32,
    /// Room extent (x, y, z) in meters; the floor is at y = 0.
    pub room: DVec3,
    pub helix_radius: f64,
    pub helix_turns: f64,
    pub tip_length: f64,
    pub voxel_size: f32,
    pub image_width: u32,
    pub image_height: u32,
    pub seed: u64,
}

impl Default for SyntheticSceneSpec {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            frame_count: 30,
            anim_fps: 30.0,
            points_per_frame: 20_000,
            room: DVec3::new(5.0, 3.0, 5.0),
            helix_radius: 0.12,
            helix_turns: 1.5,
            tip_length: 0.15,
            voxel_size: 0.015,
            image_width: 1024,
            image_height: 1024,
            seed: 42,
        }
    }
}

/// Files of a generated scene, relative to the scene directory, in
/// write order.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub manifest: SceneManifest,
    pub files: Vec<(String, Vec<u8>)>,
}

impl SyntheticScene {
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        for (rel, bytes) in &self.files {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, bytes)?;
        }
        Ok(())
    }
}

const TABLE_TOP: f64 = 0.9;
const ENTRY_POINT: DVec3 = DVec3::new(0.0, TABLE_TOP + 0.12, 0.1);

/// Surgeon's working volume, used to crop every frame.
pub fn working_volume() -> Aabb {
    Aabb { min: Vec3::new(-1.3, 0.0, -1.2), max: Vec3::new(-0.25, 2.0, 1.2) }
}

fn surgeon_frame(rng: &mut ChaCha8Rng, spec: &SyntheticSceneSpec, phase: f64) -> PointCloudFrame {
    // body sways along the table over the sequence
    let center = DVec3::new(-0.75 + 0.1 * (TAU * phase).sin(), 0.0, -0.5 + 1.0 * phase);
    let lean = 0.15 * (TAU * phase * 2.0).sin();
    let mut positions = Vec::with_capacity(spec.points_per_frame as usize);
    let mut colors = Vec::with_capacity(spec.points_per_frame as usize);
    for _ in 0..spec.points_per_frame {
        let part: f64 = rng.random();
        let (p, color) = if part < 0.12 {
            // head: sphere
            let dir = random_unit(rng);
            let p = center + DVec3::new(0.05 + lean * 0.3, 1.68, 0.0) + dir * 0.11;
            (p, [224, 172, 138])
        } else if part < 0.70 {
            // torso: elliptic cylinder in scrubs
            let a = rng.random_range(0.0..TAU);
            let h = rng.random_range(0.85..1.55);
            let p = center + DVec3::new(0.16 * a.cos() + lean * (h - 0.85), h, 0.24 * a.sin());
            (p, [40, 110, 130])
        } else if part < 0.85 {
            // arms reaching towards the table
            let s: f64 = rng.random();
            let side = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let shoulder = center + DVec3::new(0.0, 1.45, 0.22 * side);
            let hand = DVec3::new(-0.3, 1.05, ENTRY_POINT.z + 0.12 * side);
            let p = shoulder.lerp(hand, s) + random_unit(rng) * 0.04;
            (p, [52, 128, 150])
        } else {
            // legs
            let side = if rng.random::<bool>() { 0.11 } else { -0.11 };
            let a = rng.random_range(0.0..TAU);
            let h = rng.random_range(0.0..0.85);
            let p = center + DVec3::new(0.07 * a.cos(), h, side + 0.07 * a.sin());
            (p, [35, 95, 115])
        };
        let shade = rng.random_range(-12i16..=12);
        positions.push(p.as_vec3());
        colors.push(color.map(|c| (c as i16 + shade).clamp(0, 255) as u8));
    }
    let raw = PointCloudFrame::from_points(positions, colors).expect("parallel arrays");
    let cropped = crop_aabb(&raw, &working_volume());
    let grid = VoxelGridParams::new(working_volume().min, spec.voxel_size).expect("positive voxel size");
    voxel_downsample(&cropped, &grid)
}

fn random_unit(rng: &mut ChaCha8Rng) -> DVec3 {
    loop {
        let v = DVec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let l = v.length_squared();
        if l > 1e-6 && l <= 1.0 {
            return v / l.sqrt();
        }
    }
}

/// Helical approach onto [`ENTRY_POINT`] over the first 60% of the sequence,
/// then a slow 2 cm advance along the tool axis.
fn drill_trajectory(spec: &SyntheticSceneSpec) -> Trajectory {
    let n = spec.frame_count;
    let samples = (0..n)
        .map(|k| {
            let u = if n > 1 { k as f64 / (n - 1) as f64 } else { 0.0 };
            let approach = (u / 0.6).min(1.0);
            let angle = spec.helix_turns * TAU * approach;
            let radius = spec.helix_radius * (1.0 - approach);
            let axis = DVec3::new(0.25 * (1.0 - approach) * angle.cos() + 0.2, -1.0, 0.15).normalize();
            let tip = if u < 0.6 {
                ENTRY_POINT + DVec3::new(radius * angle.cos(), 0.25 * (1.0 - approach), radius * angle.sin())
            } else {
                ENTRY_POINT + axis * (0.02 * (u - 0.6) / 0.4)
            };
            let rotation = DQuat::from_rotation_arc(DVec3::Z, axis);
            let pose = RigidPose::new(tip - axis * spec.tip_length, rotation).expect("unit rotation");
            (k as f64 / spec.anim_fps, pose)
        })
        .collect();
    Trajectory::new(samples).expect("increasing timestamps")
}

fn room_meshes(spec: &SyntheticSceneSpec) -> Vec<(&'static str, TriangleMesh, [u8; 3])> {
    let half = spec.room * 0.5;
    let room_color = [168, 176, 170];
    let table_color = [92, 104, 118];
    vec![
        (ROOM_ID, TriangleMesh::cuboid(DVec3::new(-half.x, 0.0, -half.z), DVec3::new(half.x, spec.room.y, half.z), room_color), room_color),
        (TABLE_ID, TriangleMesh::cuboid(DVec3::new(-0.3, 0.0, -0.95), DVec3::new(0.3, TABLE_TOP, 0.95), table_color), table_color),
        (
            "anatomy",
            TriangleMesh::cuboid(DVec3::new(-0.18, TABLE_TOP, -0.45), DVec3::new(0.18, TABLE_TOP + 0.12, 0.45), [214, 160, 140]),
            [214, 160, 140],
        ),
    ]
}

pub fn generate(spec: &SyntheticSceneSpec) -> SyntheticScene {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut files = Vec::new();

    let pattern = format!("frames/{FRAME_INDEX_TOKEN}.spcf");
    for k in 0..spec.frame_count {
        let phase = if spec.frame_count > 1 { k as f64 / (spec.frame_count - 1) as f64 } else { 0.0 };
        let frame = surgeon_frame(&mut rng, spec, phase);
        files.push((crate::scene::expand_frame_pattern(&pattern, k), encode_spcf(&frame)));
    }

    let mut entities = vec![EntityDescriptor {
        id: SURGEON_ID.into(),
        kind: EntityKind::PointcloudSequence,
        uri: None,
        uri_pattern: Some(pattern),
        base_color: None,
        tip_length: None,
        initially_visible: true,
    }];
    for (id, mesh, color) in room_meshes(spec) {
        let uri = format!("meshes/{id}.obj");
        files.push((uri.clone(), mesh.to_obj().into_bytes()));
        entities.push(EntityDescriptor {
            id: id.into(),
            kind: EntityKind::Mesh,
            uri: Some(uri),
            uri_pattern: None,
            base_color: Some(color),
            tip_length: None,
            initially_visible: true,
        });
    }
    let trajectory_uri = format!("trajectories/{INSTRUMENT_ID}.strj");
    files.push((trajectory_uri.clone(), encode_strj(&drill_trajectory(spec))));
    entities.push(EntityDescriptor {
        id: INSTRUMENT_ID.into(),
        kind: EntityKind::Instrument,
        uri: Some(trajectory_uri),
        uri_pattern: None,
        base_color: Some([225, 225, 235]),
        tip_length: Some(spec.tip_length),
        initially_visible: true,
    });

    let mut camera = CameraConfig::new(DVec3::new(1.3, 1.9, 1.5), DVec3::new(-0.3, 1.0, 0.0));
    camera.image_width = spec.image_width;
    camera.image_height = spec.image_height;
    let manifest = SceneManifest {
        name: spec.name.clone(),
        anim_fps: spec.anim_fps,
        frame_count: spec.frame_count,
        near_clip: 0.1,
        far_clip: 6.0,
        entities,
        default_camera: camera,
    };
    manifest.validate().expect("generated manifest is valid");
    files.insert(0, ("scene.json".into(), manifest.to_json().into_bytes()));
    SyntheticScene { manifest, files }
}
