//! Constant-velocity Kalman filter over `(cx, cy, a, h)` box measurements.
//!
//! The state is the box center, aspect ratio `w / h`, height, and their
//! per-frame velocities. Process and measurement noise scale with the box
//! height, so large (near) objects are allowed to move more pixels per frame.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::geometry::BoundingBox;

pub type StateVector = SVector<f64, 8>;
pub type StateCovariance = SMatrix<f64, 8, 8>;
type Measurement = SVector<f64, 4>;
type MeasurementCovariance = SMatrix<f64, 4, 4>;

/// Smallest height/aspect the mean may take after dead reckoning.
const MIN_EXTENT: f64 = 1e-3;

/// Noise weights relative to the box height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionParams {
    pub std_weight_position: f64,
    pub std_weight_velocity: f64,
}

impl Default for MotionParams {
    fn default() -> Self {
        Self {
            std_weight_position: 1.0 / 20.0,
            std_weight_velocity: 1.0 / 160.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub mean: StateVector,
    pub covariance: StateCovariance,
}

impl KalmanState {
    pub fn to_box(&self) -> BoundingBox {
        let m = &self.mean;
        BoundingBox::from_xyah(m[0], m[1], m[2].max(MIN_EXTENT), m[3].max(MIN_EXTENT))
    }

    pub fn center(&self) -> (f64, f64) {
        (self.mean[0], self.mean[1])
    }

    pub fn velocity(&self) -> (f64, f64) {
        (self.mean[4], self.mean[5])
    }

    fn height(&self) -> f64 {
        self.mean[3].max(MIN_EXTENT)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KalmanFilter {
    params: MotionParams,
}

impl KalmanFilter {
    pub fn new(params: MotionParams) -> Self {
        Self { params }
    }

    pub fn params(&self) -> MotionParams {
        self.params
    }

    fn transition() -> StateCovariance {
        let mut f = StateCovariance::identity();
        for i in 0..4 {
            f[(i, i + 4)] = 1.0;
        }
        f
    }

    fn projection() -> SMatrix<f64, 4, 8> {
        let mut h = SMatrix::<f64, 4, 8>::zeros();
        for i in 0..4 {
            h[(i, i)] = 1.0;
        }
        h
    }

    fn measurement_noise(&self, height: f64) -> MeasurementCovariance {
        let wp = self.params.std_weight_position;
        let std = [wp * height, wp * height, 1e-1, wp * height];
        MeasurementCovariance::from_diagonal(&Measurement::from_iterator(std.iter().map(|s| s * s)))
    }

    pub fn initiate(&self, bbox: &BoundingBox) -> KalmanState {
        let [cx, cy, a, h] = bbox.to_xyah();
        let mean = StateVector::from_column_slice(&[cx, cy, a, h, 0.0, 0.0, 0.0, 0.0]);

        let wp = self.params.std_weight_position;
        let wv = self.params.std_weight_velocity;
        let std = [
            2.0 * wp * h,
            2.0 * wp * h,
            1e-2,
            2.0 * wp * h,
            10.0 * wv * h,
            10.0 * wv * h,
            1e-5,
            10.0 * wv * h,
        ];
        let covariance =
            StateCovariance::from_diagonal(&StateVector::from_iterator(std.iter().map(|s| s * s)));
        KalmanState { mean, covariance }
    }

    /// One frame of constant-velocity propagation.
    pub fn predict(&self, state: &KalmanState) -> KalmanState {
        let h = state.height();
        let wp = self.params.std_weight_position;
        let wv = self.params.std_weight_velocity;
        let std = [wp * h, wp * h, 1e-2, wp * h, wv * h, wv * h, 1e-5, wv * h];
        let q =
            StateCovariance::from_diagonal(&StateVector::from_iterator(std.iter().map(|s| s * s)));

        let f = Self::transition();
        let mut mean = f * state.mean;
        mean[2] = mean[2].max(MIN_EXTENT);
        mean[3] = mean[3].max(MIN_EXTENT);
        let covariance = symmetrize(f * state.covariance * f.transpose() + q);
        KalmanState { mean, covariance }
    }

    /// Measurement-space mean and covariance of the state.
    pub fn project(&self, state: &KalmanState) -> (Measurement, MeasurementCovariance) {
        let hm = Self::projection();
        let mean = hm * state.mean;
        let cov = hm * state.covariance * hm.transpose() + self.measurement_noise(state.height());
        (mean, cov)
    }

    /// Squared Mahalanobis distance of `bbox` from the projected state.
    pub fn normalized_innovation(&self, state: &KalmanState, bbox: &BoundingBox) -> f64 {
        let (mean, cov) = self.project(state);
        let z = Measurement::from_column_slice(&bbox.to_xyah());
        let innovation = z - mean;
        match cov.cholesky() {
            Some(chol) => innovation.dot(&chol.solve(&innovation)),
            None => f64::INFINITY,
        }
    }

    /// Kalman correction with the Joseph-form covariance update.
    pub fn update(&self, state: &KalmanState, bbox: &BoundingBox) -> KalmanState {
        let hm = Self::projection();
        let r = self.measurement_noise(state.height());
        let (projected, s) = self.project(state);
        let z = Measurement::from_column_slice(&bbox.to_xyah());

        let pht = state.covariance * hm.transpose();
        let gain = match s.cholesky() {
            // K = P Hᵀ S⁻¹, solved as S Kᵀ = H P.
            Some(chol) => chol.solve(&pht.transpose()).transpose(),
            None => return state.clone(),
        };

        let mut mean = state.mean + gain * (z - projected);
        mean[2] = mean[2].max(MIN_EXTENT);
        mean[3] = mean[3].max(MIN_EXTENT);

        let i_kh = StateCovariance::identity() - gain * hm;
        let covariance =
            symmetrize(i_kh * state.covariance * i_kh.transpose() + gain * r * gain.transpose());
        KalmanState { mean, covariance }
    }
}

fn symmetrize(m: StateCovariance) -> StateCovariance {
    (m + m.transpose()) * 0.5
}
