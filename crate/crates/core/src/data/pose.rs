use crate::error::{invalid, Result};
use crate::scalar::{Scalar, Vec3};

/// Number of skeleton joints used throughout (51 coordinates).
pub const DEFAULT_JOINTS: usize = 17;
pub const DEFAULT_FRAME_RATE_HZ: f64 = 25.0;

/// One skeleton frame: joint-major Cartesian coordinates `x1 y1 z1 x2 ...`, meters.
#[derive(Clone, Debug, PartialEq)]
pub struct Pose<T = f64> {
    coords: Vec<T>,
}

impl<T: Scalar> Pose<T> {
    /// Builds a pose from flat joint-major coordinates. Length must be a multiple of 3.
    pub fn from_coords(coords: Vec<T>) -> Result<Self> {
        if coords.is_empty() || coords.len() % 3 != 0 {
            return Err(invalid(format!(
                "pose needs a positive multiple of 3 coordinates, got {}",
                coords.len()
            )));
        }
        Ok(Self { coords })
    }

    pub fn from_joints(joints: &[Vec3<T>]) -> Result<Self> {
        Self::from_coords(joints.iter().flat_map(|j| j.iter().copied()).collect())
    }

    pub fn zeros(n_joints: usize) -> Self {
        Self { coords: vec![T::zero(); 3 * n_joints] }
    }

    pub fn n_joints(&self) -> usize {
        self.coords.len() / 3
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [T] {
        &mut self.coords
    }

    pub fn into_coords(self) -> Vec<T> {
        self.coords
    }

    pub fn joint(&self, j: usize) -> Vec3<T> {
        [self.coords[3 * j], self.coords[3 * j + 1], self.coords[3 * j + 2]]
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }
}

/// A timed sequence of poses sharing one joint count.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionSequence<T = f64> {
    pub frames: Vec<Pose<T>>,
    pub frame_rate_hz: T,
    pub label: String,
}

impl<T: Scalar> MotionSequence<T> {
    /// Validating constructor: non-empty, uniform joint count, finite, positive rate.
    pub fn new(frames: Vec<Pose<T>>, frame_rate_hz: T, label: impl Into<String>) -> Result<Self> {
        let seq = Self { frames, frame_rate_hz, label: label.into() };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.frame_rate_hz > T::zero()) || !self.frame_rate_hz.is_finite() {
            return Err(invalid("frame rate must be positive and finite"));
        }
        let Some(first) = self.frames.first() else {
            return Err(invalid("motion sequence has no frames"));
        };
        let j = first.n_joints();
        for (i, f) in self.frames.iter().enumerate() {
            if f.n_joints() != j {
                return Err(invalid(format!(
                    "frame {i} has {} joints, expected {j}",
                    f.n_joints()
                )));
            }
            if !f.is_finite() {
                return Err(invalid(format!("frame {i} has a non-finite coordinate")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Joint count, or 0 for an empty sequence.
    pub fn n_joints(&self) -> usize {
        self.frames.first().map_or(0, Pose::n_joints)
    }

    pub fn last(&self) -> Option<&Pose<T>> {
        self.frames.last()
    }

    /// Copy of frames `[start, end)` with the same rate and label.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            frames: self.frames[start..end].to_vec(),
            frame_rate_hz: self.frame_rate_hz,
            label: self.label.clone(),
        }
    }
}
