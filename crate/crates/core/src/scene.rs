//! Shoebox room description: geometry, per-wall materials, endpoints.
//!
//! A [`Scene`] is immutable value data once validated; everything downstream
//! (image source synthesis, path tracing, analysis) takes it by reference.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::math::Vec3;

/// Speed of sound in air at 20 °C, m/s.
pub const DEFAULT_SPEED_OF_SOUND: f64 = 343.0;

/// Default sample rate for generated impulse responses, Hz.
pub const DEFAULT_SAMPLE_RATE: u32 = 8000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("room dimension `{axis}` must be strictly positive, got {value}")]
    NonPositiveDimension { axis: char, value: f64 },
    #[error("{which} position {pos:?} lies outside the room (dims {dims:?})")]
    PositionOutsideRoom {
        which: &'static str,
        pos: [f64; 3],
        dims: [f64; 3],
    },
    #[error("source and receiver positions coincide")]
    CoincidentPositions,
    #[error("{coeff} coefficient {value} outside [0, 1] on wall {wall:?}")]
    MaterialOutOfRange {
        wall: Wall,
        coeff: &'static str,
        value: f64,
    },
    #[error("speed of sound must be strictly positive, got {0}")]
    NonPositiveSpeedOfSound(f64),
    #[error("sample rate must be strictly positive")]
    NonPositiveSampleRate,
    #[error("non-finite value in scene field `{0}`")]
    NonFinite(&'static str),
}

/// One of the six faces of a shoebox room.
///
/// `XLow` is the plane x = 0, `XHigh` the plane x = L, and so on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Wall {
    XLow,
    XHigh,
    YLow,
    YHigh,
    ZLow,
    ZHigh,
}

impl Wall {
    pub const ALL: [Wall; 6] = [
        Wall::XLow,
        Wall::XHigh,
        Wall::YLow,
        Wall::YHigh,
        Wall::ZLow,
        Wall::ZHigh,
    ];

    /// Index into a `[SurfaceMaterial; 6]` array.
    pub fn index(self) -> usize {
        match self {
            Wall::XLow => 0,
            Wall::XHigh => 1,
            Wall::YLow => 2,
            Wall::YHigh => 3,
            Wall::ZLow => 4,
            Wall::ZHigh => 5,
        }
    }

    /// Axis (0 = x, 1 = y, 2 = z) this wall is perpendicular to.
    pub fn axis(self) -> usize {
        self.index() / 2
    }

    /// True for the wall at coordinate 0 of its axis.
    pub fn is_low(self) -> bool {
        self.index().is_multiple_of(2)
    }
}

/// Full-band acoustic surface: energy absorption α and scattering s, both in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMaterial {
    pub absorption: f64,
    pub scattering: f64,
}

impl SurfaceMaterial {
    pub fn new(absorption: f64, scattering: f64) -> Self {
        SurfaceMaterial {
            absorption,
            scattering,
        }
    }

    /// Pressure reflection magnitude β = sqrt(1 − α).
    pub fn reflection_magnitude(&self) -> f64 {
        (1.0 - self.absorption).sqrt()
    }

    fn validate(&self, wall: Wall) -> Result<(), SceneError> {
        for (coeff, value) in [("absorption", self.absorption), ("scattering", self.scattering)] {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(SceneError::MaterialOutOfRange { wall, coeff, value });
            }
        }
        Ok(())
    }
}

impl Default for SurfaceMaterial {
    fn default() -> Self {
        SurfaceMaterial::new(0.3, 0.1)
    }
}

/// A shoebox room with a single source and a single receiver.
///
/// The room occupies `[0, L] × [0, W] × [0, H]`. Walls are indexed by [`Wall`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    /// Room extents (length, width, height) in meters.
    #[serde(rename = "room")]
    pub room_dims: Vec3,
    #[serde(rename = "source")]
    pub source_pos: Vec3,
    #[serde(rename = "receiver")]
    pub receiver_pos: Vec3,
    /// Materials in [`Wall::ALL`] order.
    pub walls: [SurfaceMaterial; 6],
    /// Speed of sound, m/s.
    #[serde(rename = "c", default = "default_c")]
    pub speed_of_sound: f64,
    /// Target sample rate, Hz.
    #[serde(rename = "fs", default = "default_fs")]
    pub sample_rate: u32,
    /// Free-form annotations carried through config files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<serde_json::Value>,
}

fn default_c() -> f64 {
    DEFAULT_SPEED_OF_SOUND
}

fn default_fs() -> u32 {
    DEFAULT_SAMPLE_RATE
}

impl Scene {
    /// Scene with uniform wall material and default c / fs.
    pub fn uniform(
        room_dims: Vec3,
        source_pos: Vec3,
        receiver_pos: Vec3,
        material: SurfaceMaterial,
    ) -> Self {
        Scene {
            room_dims,
            source_pos,
            receiver_pos,
            walls: [material; 6],
            speed_of_sound: DEFAULT_SPEED_OF_SOUND,
            sample_rate: DEFAULT_SAMPLE_RATE,
            meta: None,
        }
    }

    /// Returns a copy with every wall's absorption replaced.
    pub fn with_uniform_absorption(&self, absorption: f64) -> Self {
        let mut scene = self.clone();
        for wall in &mut scene.walls {
            wall.absorption = absorption;
        }
        scene
    }

    /// Checks every invariant and returns the scene unchanged if they all hold.
    ///
    /// Idempotent: validating an already-valid scene is a no-op.
    pub fn validate(self) -> Result<Scene, SceneError> {
        self.check()?;
        Ok(self)
    }

    /// Like [`Scene::validate`] but borrowing.
    pub fn check(&self) -> Result<(), SceneError> {
        if !self.room_dims.is_finite() {
            return Err(SceneError::NonFinite("room"));
        }
        for (axis, value) in [
            ('L', self.room_dims.x),
            ('W', self.room_dims.y),
            ('H', self.room_dims.z),
        ] {
            if value <= 0.0 {
                return Err(SceneError::NonPositiveDimension { axis, value });
            }
        }
        for (which, pos) in [("source", self.source_pos), ("receiver", self.receiver_pos)] {
            if !pos.is_finite() {
                return Err(SceneError::NonFinite("position"));
            }
            let inside = (0..3).all(|a| {
                let p = pos.axis(a);
                p > 0.0 && p < self.room_dims.axis(a)
            });
            if !inside {
                return Err(SceneError::PositionOutsideRoom {
                    which,
                    pos: pos.into(),
                    dims: self.room_dims.into(),
                });
            }
        }
        if self.source_pos == self.receiver_pos {
            return Err(SceneError::CoincidentPositions);
        }
        for wall in Wall::ALL {
            self.walls[wall.index()].validate(wall)?;
        }
        if !self.speed_of_sound.is_finite() || self.speed_of_sound <= 0.0 {
            return Err(SceneError::NonPositiveSpeedOfSound(self.speed_of_sound));
        }
        if self.sample_rate == 0 {
            return Err(SceneError::NonPositiveSampleRate);
        }
        Ok(())
    }

    pub fn material(&self, wall: Wall) -> &SurfaceMaterial {
        &self.walls[wall.index()]
    }

    pub fn volume(&self) -> f64 {
        self.room_dims.x * self.room_dims.y * self.room_dims.z
    }

    pub fn total_wall_area(&self) -> f64 {
        let d = self.room_dims;
        2.0 * (d.x * d.y + d.x * d.z + d.y * d.z)
    }

    pub fn min_dimension(&self) -> f64 {
        self.room_dims.x.min(self.room_dims.y).min(self.room_dims.z)
    }

    pub fn source_receiver_distance(&self) -> f64 {
        (self.source_pos - self.receiver_pos).norm()
    }

    /// Sabine reverberation time for the scene's own materials,
    /// `T60 = 0.161 V / Σ α_i S_i`.
    pub fn sabine_t60(&self) -> f64 {
        let d = self.room_dims;
        let areas = [
            d.y * d.z, // x walls
            d.y * d.z,
            d.x * d.z, // y walls
            d.x * d.z,
            d.x * d.y, // z walls
            d.x * d.y,
        ];
        let absorbing_area: f64 = Wall::ALL
            .iter()
            .map(|w| self.walls[w.index()].absorption * areas[w.index()])
            .sum();
        crate::ism::SABINE_COEFFICIENT * self.volume() / absorbing_area
    }

    /// Stable content hash of the scene (hex SHA-256 of its canonical JSON).
    pub fn content_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.meta = None;
        let json = serde_json::to_string(&canonical).expect("scene serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn from_json(text: &str) -> Result<Scene, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn material(alpha: f64) -> SurfaceMaterial {
        SurfaceMaterial::new(alpha, 0.1)
    }

    #[test]
    fn valid_scene_passes_and_is_idempotent() {
        let scene = Scene::uniform(
            Vec3::new(10.7, 6.9, 2.6),
            Vec3::new(2.0, 2.0, 1.0),
            Vec3::new(5.0, 3.0, 1.5),
            material(0.3),
        );
        let validated = scene.clone().validate().unwrap();
        assert_eq!(validated, scene);
        let again = validated.clone().validate().unwrap();
        assert_eq!(again, scene);
    }

    #[test]
    fn coincident_positions_rejected() {
        let scene = Scene::uniform(
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(0.5, 0.5, 0.5),
            Vec3::new(0.5, 0.5, 0.5),
            material(0.3),
        );
        assert_eq!(scene.validate().unwrap_err(), SceneError::CoincidentPositions);
    }

    #[test]
    fn source_outside_room_rejected() {
        let scene = Scene::uniform(
            Vec3::new(4.0, 4.0, 4.0),
            Vec3::new(5.0, 1.0, 1.0),
            Vec3::new(2.0, 2.0, 2.0),
            material(0.3),
        );
        match scene.validate().unwrap_err() {
            SceneError::PositionOutsideRoom { which, .. } => assert_eq!(which, "source"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn boundary_positions_are_outside() {
        // Componentwise the constraint is strict: 0 < p < dim.
        let scene = Scene::uniform(
            Vec3::new(4.0, 4.0, 4.0),
            Vec3::new(0.0, 1.0, 1.0),
            Vec3::new(2.0, 2.0, 2.0),
            material(0.3),
        );
        assert!(matches!(
            scene.validate().unwrap_err(),
            SceneError::PositionOutsideRoom { .. }
        ));
    }

    #[test]
    fn non_positive_dimension_rejected() {
        let scene = Scene::uniform(
            Vec3::new(4.0, 0.0, 4.0),
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(2.0, 2.0, 2.0),
            material(0.3),
        );
        assert!(matches!(
            scene.validate().unwrap_err(),
            SceneError::NonPositiveDimension { axis: 'W', .. }
        ));
    }

    #[test]
    fn out_of_range_material_rejected() {
        let mut scene = Scene::uniform(
            Vec3::new(4.0, 4.0, 4.0),
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(2.0, 2.0, 2.0),
            material(0.3),
        );
        scene.walls[3].scattering = 1.5;
        assert!(matches!(
            scene.validate().unwrap_err(),
            SceneError::MaterialOutOfRange {
                wall: Wall::YHigh,
                coeff: "scattering",
                ..
            }
        ));
    }

    #[test]
    fn reflection_magnitude_bounds() {
        assert_eq!(SurfaceMaterial::new(0.0, 0.0).reflection_magnitude(), 1.0);
        assert_eq!(SurfaceMaterial::new(1.0, 0.0).reflection_magnitude(), 0.0);
        let beta = SurfaceMaterial::new(0.3, 0.0).reflection_magnitude();
        assert!((beta - (0.7f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_preserves_scene() {
        let scene = Scene::uniform(
            Vec3::new(7.5, 4.6, 3.1),
            Vec3::new(2.0, 2.0, 1.0),
            Vec3::new(5.0, 3.0, 1.5),
            material(0.3),
        );
        let json = scene.to_json_pretty();
        let back = Scene::from_json(&json).unwrap();
        assert_eq!(back, scene);
        assert_eq!(back.content_hash(), scene.content_hash());
    }

    #[test]
    fn config_defaults_apply() {
        let json = r#"{
            "room": [4.0, 3.0, 2.5],
            "source": [1.0, 1.0, 1.0],
            "receiver": [3.0, 2.0, 1.5],
            "walls": [
                {"absorption": 0.3, "scattering": 0.1},
                {"absorption": 0.3, "scattering": 0.1},
                {"absorption": 0.3, "scattering": 0.1},
                {"absorption": 0.3, "scattering": 0.1},
                {"absorption": 0.3, "scattering": 0.1},
                {"absorption": 0.3, "scattering": 0.1}
            ]
        }"#;
        let scene = Scene::from_json(json).unwrap().validate().unwrap();
        assert_eq!(scene.speed_of_sound, DEFAULT_SPEED_OF_SOUND);
        assert_eq!(scene.sample_rate, DEFAULT_SAMPLE_RATE);
    }
}
