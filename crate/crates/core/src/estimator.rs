//! Extended Kalman filter over the attacker pair.
//!
//! State layout (fixed):
//! `[x_A1, y_A1, x_A2, y_A2, heading_A1, heading_A2, accel_A1, accel_A2]`.
//! Measurement layout (fixed): `[r1, r2, R, los_A1T1, los_A2T2, los_A1A2]`.

use nalgebra::{SMatrix, SVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::angle::wrap;
use crate::engagement::JointState;
use crate::error::{Error, Result};

pub type Vector8 = SVector<f64, 8>;
pub type Vector6 = SVector<f64, 6>;
pub type Matrix8 = SMatrix<f64, 8, 8>;
pub type Matrix6 = SMatrix<f64, 6, 6>;
pub type Matrix6x8 = SMatrix<f64, 6, 8>;
pub type Matrix8x6 = SMatrix<f64, 8, 6>;

pub const X1: usize = 0;
pub const Y1: usize = 1;
pub const X2: usize = 2;
pub const Y2: usize = 3;
pub const HEADING1: usize = 4;
pub const HEADING2: usize = 5;
pub const ACCEL1: usize = 6;
pub const ACCEL2: usize = 7;

/// Indices of the bearing channels inside a [`MeasurementVector`].
pub const BEARINGS: [usize; 3] = [3, 4, 5];

/// Largest acceptable condition number of the innovation covariance.
pub const MAX_INNOVATION_CONDITION: f64 = 1e12;

/// Eight-element attacker belief.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttackerEstimate(pub Vector8);

impl AttackerEstimate {
    pub fn from_truth(s: &JointState, accel: [f64; 2]) -> Self {
        Self(Vector8::from([
            s.attacker1.x,
            s.attacker1.y,
            s.attacker2.x,
            s.attacker2.y,
            s.attacker1.heading,
            s.attacker2.heading,
            accel[0],
            accel[1],
        ]))
    }

    pub fn attacker1(&self) -> [f64; 2] {
        [self.0[X1], self.0[Y1]]
    }

    pub fn attacker2(&self) -> [f64; 2] {
        [self.0[X2], self.0[Y2]]
    }

    fn wrap_headings(&mut self) {
        self.0[HEADING1] = wrap(self.0[HEADING1]);
        self.0[HEADING2] = wrap(self.0[HEADING2]);
    }
}

/// Ranges and bearings in the fixed measurement order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementVector(pub Vector6);

impl MeasurementVector {
    pub fn from_truth(s: &JointState) -> Result<Self> {
        let est = AttackerEstimate::from_truth(s, [0.0, 0.0]);
        measurement_model(&est, s.target1.position(), s.target2.position())
    }
}

/// Process and measurement noise covariances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseCovariances {
    pub process: Matrix8,
    pub measurement: Matrix6,
}

impl NoiseCovariances {
    pub fn from_diagonals(process: [f64; 8], measurement: [f64; 6]) -> Self {
        Self {
            process: Matrix8::from_diagonal(&Vector8::from(process)),
            measurement: Matrix6::from_diagonal(&Vector6::from(measurement)),
        }
    }
}

/// Default process noise diagonal.
pub const DEFAULT_PROCESS_NOISE: [f64; 8] = [0.1, 0.1, 0.1, 0.1, 0.01, 0.01, 0.1, 0.1];
/// Default measurement noise diagonal.
pub const DEFAULT_MEASUREMENT_NOISE: [f64; 6] = [0.1, 0.1, 0.1, 0.01, 0.01, 0.01];
/// Default initial covariance diagonal.
pub const DEFAULT_INITIAL_COVARIANCE: [f64; 8] = [10.0, 10.0, 10.0, 10.0, 1.0, 1.0, 5.0, 5.0];

impl Default for NoiseCovariances {
    fn default() -> Self {
        Self::from_diagonals(DEFAULT_PROCESS_NOISE, DEFAULT_MEASUREMENT_NOISE)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpdateDiagnostics {
    pub innovation: Vector6,
    pub innovation_cov: Matrix6,
    pub gain: Matrix8x6,
}

/// Decaying-acceleration attacker model: `x' = v cos a`, `y' = v sin a`,
/// `heading' = accel / v`, `accel' = -accel`.
pub fn estimator_rhs(est: &AttackerEstimate, speeds: [f64; 2]) -> Vector8 {
    let e = &est.0;
    let (s1, c1) = e[HEADING1].sin_cos();
    let (s2, c2) = e[HEADING2].sin_cos();
    Vector8::from([
        speeds[0] * c1,
        speeds[0] * s1,
        speeds[1] * c2,
        speeds[1] * s2,
        e[ACCEL1] / speeds[0],
        e[ACCEL2] / speeds[1],
        -e[ACCEL1],
        -e[ACCEL2],
    ])
}

pub fn jacobian_f(est: &AttackerEstimate, speeds: [f64; 2]) -> Matrix8 {
    let e = &est.0;
    let (s1, c1) = e[HEADING1].sin_cos();
    let (s2, c2) = e[HEADING2].sin_cos();
    let mut f = Matrix8::zeros();
    f[(X1, HEADING1)] = -speeds[0] * s1;
    f[(Y1, HEADING1)] = speeds[0] * c1;
    f[(X2, HEADING2)] = -speeds[1] * s2;
    f[(Y2, HEADING2)] = speeds[1] * c2;
    f[(HEADING1, ACCEL1)] = 1.0 / speeds[0];
    f[(HEADING2, ACCEL2)] = 1.0 / speeds[1];
    f[(ACCEL1, ACCEL1)] = -1.0;
    f[(ACCEL2, ACCEL2)] = -1.0;
    f
}

struct Offsets {
    /// T1 - A1
    d1: [f64; 2],
    /// T2 - A2
    d2: [f64; 2],
    /// A2 - A1
    da: [f64; 2],
    r1: f64,
    r2: f64,
    ra: f64,
}

fn offsets(est: &AttackerEstimate, t1: [f64; 2], t2: [f64; 2]) -> Result<Offsets> {
    let [x1, y1] = est.attacker1();
    let [x2, y2] = est.attacker2();
    let d1 = [t1[0] - x1, t1[1] - y1];
    let d2 = [t2[0] - x2, t2[1] - y2];
    let da = [x2 - x1, y2 - y1];
    let r1 = d1[0].hypot(d1[1]);
    let r2 = d2[0].hypot(d2[1]);
    let ra = da[0].hypot(da[1]);
    if r1 == 0.0 {
        return Err(Error::DegenerateGeometry("A1 and T1 coincide"));
    }
    if r2 == 0.0 {
        return Err(Error::DegenerateGeometry("A2 and T2 coincide"));
    }
    if ra == 0.0 {
        return Err(Error::DegenerateGeometry("attackers coincide"));
    }
    Ok(Offsets { d1, d2, da, r1, r2, ra })
}

pub fn measurement_model(
    est: &AttackerEstimate,
    t1: [f64; 2],
    t2: [f64; 2],
) -> Result<MeasurementVector> {
    let o = offsets(est, t1, t2)?;
    Ok(MeasurementVector(Vector6::from([
        o.r1,
        o.r2,
        o.ra,
        o.d1[1].atan2(o.d1[0]),
        o.d2[1].atan2(o.d2[0]),
        o.da[1].atan2(o.da[0]),
    ])))
}

pub fn jacobian_h(est: &AttackerEstimate, t1: [f64; 2], t2: [f64; 2]) -> Result<Matrix6x8> {
    let Offsets { d1, d2, da, r1, r2, ra } = offsets(est, t1, t2)?;
    let mut h = Matrix6x8::zeros();
    h[(0, X1)] = -d1[0] / r1;
    h[(0, Y1)] = -d1[1] / r1;
    h[(1, X2)] = -d2[0] / r2;
    h[(1, Y2)] = -d2[1] / r2;
    h[(2, X1)] = -da[0] / ra;
    h[(2, Y1)] = -da[1] / ra;
    h[(2, X2)] = da[0] / ra;
    h[(2, Y2)] = da[1] / ra;
    let (r1s, r2s, ras) = (r1 * r1, r2 * r2, ra * ra);
    h[(3, X1)] = d1[1] / r1s;
    h[(3, Y1)] = -d1[0] / r1s;
    h[(4, X2)] = d2[1] / r2s;
    h[(4, Y2)] = -d2[0] / r2s;
    h[(5, X1)] = da[1] / ras;
    h[(5, Y1)] = -da[0] / ras;
    h[(5, X2)] = -da[1] / ras;
    h[(5, Y2)] = da[0] / ras;
    Ok(h)
}

fn symmetrize<const N: usize>(m: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    (m + m.transpose()) * 0.5
}

/// Euler state propagation and `P' = Phi P Phi^T + Q` with `Phi = I + F dt`.
pub fn ekf_predict(
    est: &AttackerEstimate,
    cov: &Matrix8,
    dt: f64,
    process: &Matrix8,
    speeds: [f64; 2],
) -> (AttackerEstimate, Matrix8) {
    let mut next = AttackerEstimate(est.0 + estimator_rhs(est, speeds) * dt);
    next.wrap_headings();
    let phi = Matrix8::identity() + jacobian_f(est, speeds) * dt;
    let p = phi * cov * phi.transpose() + process;
    (next, symmetrize(&p))
}

/// Innovation `z - h(est)` with bearing channels wrapped.
pub fn innovation(z: &MeasurementVector, predicted: &MeasurementVector) -> Vector6 {
    let mut nu = z.0 - predicted.0;
    for i in BEARINGS {
        nu[i] = wrap(nu[i]);
    }
    nu
}

fn condition_number(s: &Matrix6) -> f64 {
    let eig = SymmetricEigen::new(*s).eigenvalues;
    let max = eig.max();
    let min = eig.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn ekf_update(
    est: &AttackerEstimate,
    cov: &Matrix8,
    z: &MeasurementVector,
    measurement_noise: &Matrix6,
    t1: [f64; 2],
    t2: [f64; 2],
) -> Result<(AttackerEstimate, Matrix8, UpdateDiagnostics)> {
    let h = jacobian_h(est, t1, t2)?;
    let predicted = measurement_model(est, t1, t2)?;
    let nu = innovation(z, &predicted);
    let s = symmetrize(&(h * cov * h.transpose() + measurement_noise));
    let cond = condition_number(&s);
    if cond > MAX_INNOVATION_CONDITION {
        return Err(Error::SingularInnovation(cond));
    }
    let s_inv = s
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::SingularInnovation(f64::INFINITY))?;
    let k = cov * h.transpose() * s_inv;
    let mut next = AttackerEstimate(est.0 + k * nu);
    next.wrap_headings();
    let p = symmetrize(&(cov - k * s * k.transpose()));
    Ok((next, p, UpdateDiagnostics { innovation: nu, innovation_cov: s, gain: k }))
}

/// Filter configuration as it appears in scenario files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub process_noise: [f64; 8],
    pub measurement_noise: [f64; 6],
    pub initial_covariance: [f64; 8],
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            process_noise: DEFAULT_PROCESS_NOISE,
            measurement_noise: DEFAULT_MEASUREMENT_NOISE,
            initial_covariance: DEFAULT_INITIAL_COVARIANCE,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self
            .process_noise
            .iter()
            .chain(&self.measurement_noise)
            .chain(&self.initial_covariance)
            .all(|v| *v >= 0.0 && v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::ConfigInvalid("filter covariances must be non-negative".into()))
        }
    }

    pub fn noise(&self) -> NoiseCovariances {
        NoiseCovariances::from_diagonals(self.process_noise, self.measurement_noise)
    }
}

/// Running filter: estimate, covariance and the fixed model parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackerFilter {
    pub estimate: AttackerEstimate,
    pub covariance: Matrix8,
    pub speeds: [f64; 2],
    pub noise: NoiseCovariances,
}

impl AttackerFilter {
    /// Seeds the filter from one measurement: attacker positions are
    /// back-projected from the known target positions, headings point at the
    /// assigned targets and accelerations start at zero. The configured
    /// initial covariance is widened by the first-order spread of the
    /// back-projected positions.
    pub fn initialize(
        z: &MeasurementVector,
        t1: [f64; 2],
        t2: [f64; 2],
        speeds: [f64; 2],
        cfg: &FilterConfig,
    ) -> Self {
        let m = &z.0;
        let (s1, c1) = m[3].sin_cos();
        let (s2, c2) = m[4].sin_cos();
        let estimate = AttackerEstimate(Vector8::from([
            t1[0] - m[0] * c1,
            t1[1] - m[0] * s1,
            t2[0] - m[1] * c2,
            t2[1] - m[1] * s2,
            wrap(m[3]),
            wrap(m[4]),
            0.0,
            0.0,
        ]));
        // the seed is a function of z: add its first-order spread J Sigma J'
        let mut j = Matrix8x6::zeros();
        for (base, heading, range, bearing) in [(X1, HEADING1, 0, 3), (X2, HEADING2, 1, 4)] {
            let (s, c) = m[bearing].sin_cos();
            let r = m[range];
            j[(base, range)] = -c;
            j[(base + 1, range)] = -s;
            j[(base, bearing)] = r * s;
            j[(base + 1, bearing)] = -r * c;
            j[(heading, bearing)] = 1.0;
        }
        let sigma = Matrix6::from_diagonal(&Vector6::from(cfg.measurement_noise));
        let covariance =
            Matrix8::from_diagonal(&Vector8::from(cfg.initial_covariance)) + j * sigma * j.transpose();
        Self { estimate, covariance, speeds, noise: cfg.noise() }
    }

    pub fn predict(&mut self, dt: f64) {
        let (e, p) = ekf_predict(&self.estimate, &self.covariance, dt, &self.noise.process, self.speeds);
        self.estimate = e;
        self.covariance = p;
    }

    pub fn update(
        &mut self,
        z: &MeasurementVector,
        t1: [f64; 2],
        t2: [f64; 2],
    ) -> Result<UpdateDiagnostics> {
        let (e, p, d) =
            ekf_update(&self.estimate, &self.covariance, z, &self.noise.measurement, t1, t2)?;
        self.estimate = e;
        self.covariance = p;
        Ok(d)
    }

    pub fn sigmas(&self) -> Vector8 {
        self.covariance.diagonal().map(|v| v.max(0.0).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn est(values: [f64; 8]) -> AttackerEstimate {
        AttackerEstimate(Vector8::from(values))
    }

    #[test]
    fn rhs_rows() {
        let e = est([0.0, 0.0, 10.0, 10.0, 0.0, 1.0, 0.0, 2.0]);
        let d = estimator_rhs(&e, [60.0, 60.0]);
        assert_eq!((d[X1], d[Y1]), (60.0, 0.0));
        assert_eq!(d[HEADING1], 0.0);
        assert_eq!(d[ACCEL1], 0.0);
        assert_eq!(d[ACCEL2], -2.0);
        assert!((d[HEADING2] - 2.0 / 60.0).abs() < 1e-15);
    }

    #[test]
    fn jacobian_f_entries() {
        let e = est([0.0, 0.0, 0.0, 0.0, 0.0, 0.3, 0.0, 0.0]);
        let f = jacobian_f(&e, [60.0, 60.0]);
        assert_eq!(f[(X1, HEADING1)], 0.0);
        assert_eq!(f[(Y1, HEADING1)], 60.0);
        assert_eq!(f[(HEADING1, ACCEL1)], 1.0 / 60.0);
        assert_eq!(f[(ACCEL2, ACCEL2)], -1.0);
    }

    #[test]
    fn measurement_of_general_example() {
        let e = est([150.0, 0.0, -150.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let z = measurement_model(&e, [100.0, 300.0], [-100.0, 310.0]).unwrap();
        assert_eq!(z.0[2], 300.0);
        assert!((z.0[0] - 304.138_126_514_911).abs() < 1e-9);
        assert_eq!(z.0[5], PI);
        let north = measurement_model(&e, [150.0, 40.0], [-100.0, 310.0]).unwrap();
        assert_eq!(north.0[3], FRAC_PI_2);
        assert!(measurement_model(&e, [150.0, 0.0], [0.0, 1.0]).is_err());
    }

    #[test]
    fn jacobian_h_structure() {
        let e = est([0.0, 0.0, 100.0, 0.0, 0.2, -0.4, 1.0, 2.0]);
        let h = jacobian_h(&e, [30.0, 70.0], [-40.0, 90.0]).unwrap();
        assert_eq!(h[(2, X1)], -1.0);
        assert_eq!(h[(2, X2)], 1.0);
        for r in 0..6 {
            for c in 4..8 {
                assert_eq!(h[(r, c)], 0.0);
            }
        }
    }

    #[test]
    fn predict_with_identity_transition() {
        // straight, unaccelerated attackers heading along +x: F has only the
        // dy/dheading and dheading/daccel entries
        let e = est([0.0, 0.0, 100.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let (n, _) = ekf_predict(&e, &Matrix8::identity(), 0.05, &Matrix8::zeros(), [60.0, 60.0]);
        assert_eq!(n.0[X1], 3.0);
        assert_eq!(n.0[X2], 103.0);

        let zero = Matrix8::zeros();
        let (_, p) = ekf_predict(&e, &zero, 0.05, &zero, [60.0, 60.0]);
        assert_eq!(p, zero);
    }

    #[test]
    fn predict_matches_matrix_oracle() {
        let e = est([0.0, 0.0, 100.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let q = Matrix8::from_diagonal(&Vector8::from(DEFAULT_PROCESS_NOISE));
        let (_, p) = ekf_predict(&e, &Matrix8::identity(), 0.05, &q, [60.0, 60.0]);
        // oracle: explicit triple loop over Phi = I + F dt
        let f = jacobian_f(&e, [60.0, 60.0]);
        let mut phi = [[0.0; 8]; 8];
        for i in 0..8 {
            for j in 0..8 {
                phi[i][j] = if i == j { 1.0 } else { 0.0 } + 0.05 * f[(i, j)];
            }
        }
        for i in 0..8 {
            for j in 0..8 {
                let acc = (0..8).map(|k| phi[i][k] * phi[j][k]).sum::<f64>() + q[(i, j)];
                assert!((p[(i, j)] - acc).abs() < 1e-12, "({i},{j})");
            }
        }
        assert!((p[(0, 0)] - 1.1).abs() < 1e-12);
        // dy/dheading couples heading variance into y: 1 + 0.1 + (60*0.05)^2
        assert!((p[(Y1, Y1)] - (1.1 + 9.0)).abs() < 1e-12);
    }

    #[test]
    fn zero_innovation_leaves_estimate() {
        let e = est([150.0, 0.0, -150.0, 0.0, 1.0, 2.0, 0.5, -0.5]);
        let (t1, t2) = ([100.0, 300.0], [-100.0, 310.0]);
        let z = measurement_model(&e, t1, t2).unwrap();
        let p = Matrix8::identity() * 4.0;
        let sigma = NoiseCovariances::default().measurement;
        let (n, p2, d) = ekf_update(&e, &p, &z, &sigma, t1, t2).unwrap();
        assert_eq!(d.innovation, Vector6::zeros());
        assert_eq!(n, e);
        assert!((p2 - (p - d.gain * d.innovation_cov * d.gain.transpose())).abs().max() < 1e-12);
    }

    #[test]
    fn zero_prior_covariance_means_no_update() {
        let e = est([150.0, 0.0, -150.0, 0.0, 1.0, 2.0, 0.0, 0.0]);
        let (t1, t2) = ([100.0, 300.0], [-100.0, 310.0]);
        let mut z = measurement_model(&e, t1, t2).unwrap();
        z.0[0] += 5.0;
        let sigma = NoiseCovariances::default().measurement;
        let (n, p, d) = ekf_update(&e, &Matrix8::zeros(), &z, &sigma, t1, t2).unwrap();
        assert_eq!(d.gain, Matrix8x6::zeros());
        assert_eq!(n, e);
        assert_eq!(p, Matrix8::zeros());
    }

    #[test]
    fn singular_innovation_is_reported() {
        let e = est([150.0, 0.0, -150.0, 0.0, 1.0, 2.0, 0.0, 0.0]);
        let (t1, t2) = ([100.0, 300.0], [-100.0, 310.0]);
        let z = measurement_model(&e, t1, t2).unwrap();
        let r = ekf_update(&e, &Matrix8::zeros(), &z, &Matrix6::zeros(), t1, t2);
        assert!(matches!(r, Err(Error::SingularInnovation(_))));
    }

    #[test]
    fn innovation_wraps_bearings() {
        let mut a = Vector6::zeros();
        let mut b = Vector6::zeros();
        a[3] = PI - 0.01;
        b[3] = -PI + 0.01;
        let nu = innovation(&MeasurementVector(a), &MeasurementVector(b));
        assert!((nu[3] + 0.02).abs() < 1e-12);
    }

    #[test]
    fn initialization_recovers_positions() {
        let e = est([150.0, 0.0, -150.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let (t1, t2) = ([100.0, 300.0], [-100.0, 310.0]);
        let z = measurement_model(&e, t1, t2).unwrap();
        let f = AttackerFilter::initialize(&z, t1, t2, [60.0, 60.0], &FilterConfig::default());
        assert!((f.estimate.0[X1] - 150.0).abs() < 1e-9);
        assert!((f.estimate.0[Y2]).abs() < 1e-9);
        assert_eq!(f.estimate.0[HEADING1], z.0[3]);
        assert_eq!(f.covariance[(6, 6)], 5.0);
        // position block: configured 10 + 10, plus range and cross-range spread
        let r = z.0[0];
        let trace = f.covariance[(X1, X1)] + f.covariance[(Y1, Y1)];
        assert!((trace - (20.0 + 0.1 + r * r * 0.01)).abs() < 1e-9);
        // cross-range direction carries the bearing spread
        let (s, c) = z.0[3].sin_cos();
        let block = f.covariance.fixed_view::<2, 2>(X1, X1);
        let across = nalgebra::Vector2::new(s, -c);
        assert!(((across.transpose() * block * across)[0] - (10.0 + r * r * 0.01)).abs() < 1e-9);
        // heading shares the bearing noise with the cross-range position
        assert!((f.covariance[(HEADING1, HEADING1)] - 1.01).abs() < 1e-12);
        let cross = across.x * f.covariance[(X1, HEADING1)] + across.y * f.covariance[(Y1, HEADING1)];
        assert!((cross - r * 0.01).abs() < 1e-9);
        assert_eq!(f.covariance[(X1, X2)], 0.0);
    }
}
