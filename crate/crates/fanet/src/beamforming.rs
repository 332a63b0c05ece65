//! Uniform planar array model: element placement, steering vectors, binary
//! beam masks (wide vs. narrow beams), and realized gain under angular
//! misalignment.
//!
//! The array lies in the y-z plane with boresight along +x. Element `l`
//! (1-based, column-stacked) sits at `(0, i(l)*d_h*lambda, j(l)*d_v*lambda)`
//! with `i(l) = (l-1) mod m_h` and `j(l) = (l-1) div m_h`. A beam is a
//! binary on/off mask over the grid; steering multiplies the mask by the
//! steering-vector phases for the aim direction, so the realized response
//! at the true direction measures the pointing-error loss.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Angles, Vec3};

#[derive(Debug, Error, PartialEq)]
pub enum BeamformingError {
    #[error("array dimensions must be at least 1x1, got {m_h}x{m_v}")]
    InvalidDimensions { m_h: usize, m_v: usize },
    #[error("element spacings and wavelength must be positive")]
    InvalidSpacing,
    #[error("element index {index} out of range 1..={count}")]
    ElementIndexOutOfRange { index: usize, count: usize },
    #[error("active block {rows}x{cols} does not fit a {m_h}x{m_v} array")]
    ActiveBlockOutOfRange { rows: usize, cols: usize, m_h: usize, m_v: usize },
    #[error("beam pattern has no active element")]
    ZeroActiveElements,
    #[error("beam defined for a {expected}-element array, array has {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("no rectangular layout for {elements} elements")]
    NoLayout { elements: usize },
}

/// Geometry of one uniform planar array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpaConfig {
    /// Horizontal element count (rows of the logical mask matrix).
    pub m_h: usize,
    /// Vertical element count (columns of the logical mask matrix).
    pub m_v: usize,
    /// Horizontal element spacing in wavelengths.
    pub d_h: f64,
    /// Vertical element spacing in wavelengths.
    pub d_v: f64,
    /// Carrier wavelength in meters.
    pub wavelength: f64,
}

impl UpaConfig {
    pub fn new(
        m_h: usize,
        m_v: usize,
        d_h: f64,
        d_v: f64,
        wavelength: f64,
    ) -> Result<Self, BeamformingError> {
        if m_h < 1 || m_v < 1 {
            return Err(BeamformingError::InvalidDimensions { m_h, m_v });
        }
        if d_h <= 0.0 || d_v <= 0.0 || wavelength <= 0.0 {
            return Err(BeamformingError::InvalidSpacing);
        }
        Ok(UpaConfig { m_h, m_v, d_h, d_v, wavelength })
    }

    /// Half-wavelength-spaced array.
    pub fn half_wavelength(m_h: usize, m_v: usize, wavelength: f64) -> Result<Self, BeamformingError> {
        UpaConfig::new(m_h, m_v, 0.5, 0.5, wavelength)
    }

    /// Half-wavelength array for a total element count, factored as close
    /// to square as possible with `m_h >= m_v` (1 -> 1x1, 8 -> 4x2,
    /// 32 -> 8x4, 64 -> 8x8).
    pub fn from_element_count(elements: usize, wavelength: f64) -> Result<Self, BeamformingError> {
        if elements == 0 {
            return Err(BeamformingError::NoLayout { elements });
        }
        let mut m_v = (elements as f64).sqrt().floor() as usize;
        while m_v > 1 && elements % m_v != 0 {
            m_v -= 1;
        }
        UpaConfig::half_wavelength(elements / m_v, m_v, wavelength)
    }

    /// Total element count M.
    pub fn elements(&self) -> usize {
        self.m_h * self.m_v
    }

    /// Position of element `l` (1-based) in meters.
    pub fn element_position(&self, l: usize) -> Result<Vec3, BeamformingError> {
        let count = self.elements();
        if l < 1 || l > count {
            return Err(BeamformingError::ElementIndexOutOfRange { index: l, count });
        }
        let i = (l - 1) % self.m_h;
        let j = (l - 1) / self.m_h;
        Ok(Vec3::new(
            0.0,
            i as f64 * self.d_h * self.wavelength,
            j as f64 * self.d_v * self.wavelength,
        ))
    }
}

/// Wave vector for a plane wave towards (azimuth, elevation), in rad/m:
/// `(2*pi/lambda) * (cos(el)cos(az), cos(el)sin(az), sin(el))`.
pub fn wave_vector(angles: Angles, wavelength: f64) -> Vec3 {
    let k = 2.0 * PI / wavelength;
    let (sa, ca) = angles.azimuth.sin_cos();
    let (se, ce) = angles.elevation.sin_cos();
    Vec3::new(k * ce * ca, k * ce * sa, k * se)
}

/// Array steering vector: unit-modulus phase response of every element to
/// a plane wave from the given direction.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    entries: Vec<Complex64>,
}

impl SteeringVector {
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Steering vector `a(az, el)` with entry `l` equal to
/// `exp(j * k(az, el) . u_l)`.
pub fn steering_vector(angles: Angles, cfg: &UpaConfig) -> SteeringVector {
    let kappa = wave_vector(angles, cfg.wavelength);
    let entries = (1..=cfg.elements())
        .map(|l| {
            let u = cfg.element_position(l).expect("index in range by construction");
            Complex64::from_polar(1.0, kappa.dot(&u))
        })
        .collect();
    SteeringVector { entries }
}

/// Binary element-activation mask over the array grid. The stacked vector
/// is the column stacking of the logical mask matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamPattern {
    m_h: usize,
    m_v: usize,
    /// Column-major (stacked) activation flags, length `m_h * m_v`.
    stacked: Vec<bool>,
}

impl BeamPattern {
    /// All elements active: the narrowest beam the array can form.
    pub fn full(cfg: &UpaConfig) -> Self {
        BeamPattern {
            m_h: cfg.m_h,
            m_v: cfg.m_v,
            stacked: vec![true; cfg.elements()],
        }
    }

    /// Mask entry at grid position (row `i`, column `j`).
    pub fn mask(&self, i: usize, j: usize) -> bool {
        self.stacked[i + j * self.m_h]
    }

    /// Mask rows (horizontal element count).
    pub fn rows(&self) -> usize {
        self.m_h
    }

    /// Mask columns (vertical element count).
    pub fn cols(&self) -> usize {
        self.m_v
    }

    /// Column-stacked activation vector.
    pub fn stacked(&self) -> &[bool] {
        &self.stacked
    }

    /// Number of active elements.
    pub fn active_elements(&self) -> usize {
        self.stacked.iter().filter(|&&b| b).count()
    }

    pub fn len(&self) -> usize {
        self.stacked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stacked.is_empty()
    }
}

/// Builds a beam with ones exactly in the leading `active_rows` x
/// `active_cols` block of the mask matrix. Deactivating trailing rows or
/// columns widens the beam; a single active element is omnidirectional.
pub fn make_beam(
    cfg: &UpaConfig,
    active_cols: usize,
    active_rows: usize,
) -> Result<BeamPattern, BeamformingError> {
    if active_rows == 0 || active_cols == 0 {
        return Err(BeamformingError::ZeroActiveElements);
    }
    if active_rows > cfg.m_h || active_cols > cfg.m_v {
        return Err(BeamformingError::ActiveBlockOutOfRange {
            rows: active_rows,
            cols: active_cols,
            m_h: cfg.m_h,
            m_v: cfg.m_v,
        });
    }
    let mut stacked = vec![false; cfg.elements()];
    for j in 0..active_cols {
        for i in 0..active_rows {
            stacked[i + j * cfg.m_h] = true;
        }
    }
    Ok(BeamPattern { m_h: cfg.m_h, m_v: cfg.m_v, stacked })
}

/// Magnitude of the array response `|a(angles)^H w|` with `w` the plain
/// binary mask vector (unsteered beam).
pub fn array_response(
    angles: Angles,
    beam: &BeamPattern,
    cfg: &UpaConfig,
) -> Result<f64, BeamformingError> {
    if beam.len() != cfg.elements() {
        return Err(BeamformingError::DimensionMismatch {
            expected: beam.len(),
            actual: cfg.elements(),
        });
    }
    let a = steering_vector(angles, cfg);
    let sum: Complex64 = a
        .entries()
        .iter()
        .zip(beam.stacked())
        .filter(|(_, &on)| on)
        .map(|(e, _)| e.conj())
        .sum();
    Ok(sum.norm())
}

/// A beam mask steered towards an aim direction: weight vector
/// `w = a(aim) .* mask`, so the response at the aim direction sums the
/// active elements coherently.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeredBeam {
    weights: Vec<Complex64>,
    aim: Angles,
    active: usize,
}

impl SteeredBeam {
    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    /// Direction the beam was steered towards.
    pub fn aim(&self) -> Angles {
        self.aim
    }

    pub fn active_elements(&self) -> usize {
        self.active
    }
}

/// Applies steering phases for `aim` to the binary mask.
pub fn steer_beam(
    aim: Angles,
    beam: &BeamPattern,
    cfg: &UpaConfig,
) -> Result<SteeredBeam, BeamformingError> {
    if beam.len() != cfg.elements() {
        return Err(BeamformingError::DimensionMismatch {
            expected: beam.len(),
            actual: cfg.elements(),
        });
    }
    let a = steering_vector(aim, cfg);
    let weights = a
        .entries()
        .iter()
        .zip(beam.stacked())
        .map(|(e, &on)| if on { *e } else { Complex64::new(0.0, 0.0) })
        .collect();
    Ok(SteeredBeam { weights, aim, active: beam.active_elements() })
}

/// Magnitude of the response `|a(angles)^H w|` of a steered beam. Equals
/// the active-element count when `angles` is the aim direction.
pub fn steered_response(angles: Angles, beam: &SteeredBeam, cfg: &UpaConfig) -> f64 {
    let a = steering_vector(angles, cfg);
    let sum: Complex64 = a
        .entries()
        .iter()
        .zip(beam.weights())
        .map(|(e, w)| e.conj() * w)
        .sum();
    sum.norm()
}

/// Two-sided beamforming gain `h_tx * h_rx / (m_h * m_v)`, where each
/// response evaluates the realized direction against the beam's aim. Equals
/// M for a fully active, perfectly aligned link.
pub fn link_gain(
    tx_angles: Angles,
    rx_angles: Angles,
    tx_beam: &SteeredBeam,
    rx_beam: &SteeredBeam,
    cfg: &UpaConfig,
) -> f64 {
    let h_tx = steered_response(tx_angles, tx_beam, cfg);
    let h_rx = steered_response(rx_angles, rx_beam, cfg);
    h_tx * h_rx / cfg.elements() as f64
}

/// Peak-normalized link gain in [0, 1]: [`link_gain`] divided by M, i.e.
/// `h_tx * h_rx / M^2`. This is the misalignment loss factor applied to the
/// link budget; it is 1 for a fully active, perfectly aligned link no
/// matter the array size.
pub fn normalized_link_gain(
    tx_angles: Angles,
    rx_angles: Angles,
    tx_beam: &SteeredBeam,
    rx_beam: &SteeredBeam,
    cfg: &UpaConfig,
) -> f64 {
    link_gain(tx_angles, rx_angles, tx_beam, rx_beam, cfg) / cfg.elements() as f64
}

/// Magnitude of a geometric phase sum `|sum_{k<n} e^{j k x}|`, with the
/// coherent limit at multiples of 2 pi.
fn dirichlet_magnitude(n: usize, x: f64) -> f64 {
    let half = (0.5 * x).sin();
    if half.abs() < 1e-9 {
        n as f64
    } else {
        ((0.5 * n as f64 * x).sin() / half).abs()
    }
}

/// Response of a leading-block mask steered at `aim` and evaluated at
/// `realized`, computed in closed form. For a mask built by [`make_beam`]
/// the phase sum factors into two geometric series, so this equals
/// `steered_response(realized, steer_beam(aim, beam, cfg), cfg)` at a
/// fraction of the cost; it is the hot path of the Monte Carlo capacity
/// estimator.
pub fn block_response(
    realized: Angles,
    aim: Angles,
    active_rows: usize,
    active_cols: usize,
    cfg: &UpaConfig,
) -> f64 {
    let two_pi = 2.0 * PI;
    let sa_a = aim.azimuth.sin();
    let (se_a, ce_a) = aim.elevation.sin_cos();
    let sa_r = realized.azimuth.sin();
    let (se_r, ce_r) = realized.elevation.sin_cos();
    // Only the y and z wave-vector components hit the array plane.
    let x = two_pi * cfg.d_h * (ce_a * sa_a - ce_r * sa_r);
    let z = two_pi * cfg.d_v * (se_a - se_r);
    dirichlet_magnitude(active_rows, x) * dirichlet_magnitude(active_cols, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::reciprocal_angles;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cfg_4x4() -> UpaConfig {
        UpaConfig::half_wavelength(4, 4, 0.0107).unwrap()
    }

    #[test]
    fn first_element_at_origin() {
        let cfg = cfg_4x4();
        assert_eq!(cfg.element_position(1).unwrap(), Vec3::ZERO);
    }

    #[test]
    fn second_element_offset_horizontally() {
        let cfg = UpaConfig::half_wavelength(2, 1, 0.0107).unwrap();
        let p = cfg.element_position(2).unwrap();
        assert_eq!(p, Vec3::new(0.0, 0.5 * 0.0107, 0.0));
    }

    // Index-arithmetic oracle: recompute (i, j) for every l and compare
    // against the element coordinates.
    #[test]
    fn element_index_maps_cover_grid() {
        let cfg = cfg_4x4();
        let mut seen = vec![false; 16];
        for l in 1..=16 {
            let p = cfg.element_position(l).unwrap();
            let i = (p.y / (cfg.d_h * cfg.wavelength)).round() as usize;
            let j = (p.z / (cfg.d_v * cfg.wavelength)).round() as usize;
            assert_eq!(i, (l - 1) % 4);
            assert_eq!(j, (l - 1) / 4);
            assert!(!seen[i + 4 * j]);
            seen[i + 4 * j] = true;
        }
        assert_eq!(cfg.element_position(16).unwrap(), cfg.element_position(16).unwrap());
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn element_index_out_of_range() {
        let cfg = cfg_4x4();
        assert!(matches!(
            cfg.element_position(0),
            Err(BeamformingError::ElementIndexOutOfRange { .. })
        ));
        assert!(matches!(
            cfg.element_position(17),
            Err(BeamformingError::ElementIndexOutOfRange { .. })
        ));
    }

    #[test]
    fn element_count_factorization() {
        for (m, m_h, m_v) in [(1, 1, 1), (4, 2, 2), (8, 4, 2), (16, 4, 4), (32, 8, 4), (64, 8, 8)] {
            let cfg = UpaConfig::from_element_count(m, 0.0107).unwrap();
            assert_eq!((cfg.m_h, cfg.m_v), (m_h, m_v), "M = {m}");
        }
    }

    #[test]
    fn wave_vector_boresight_along_x() {
        let k = wave_vector(Angles::BORESIGHT, 0.0107);
        assert_relative_eq!(k.x, 2.0 * PI / 0.0107, max_relative = 1e-15);
        assert_eq!(k.y, 0.0);
        assert_eq!(k.z, 0.0);
    }

    #[test]
    fn wave_vector_quarter_turn_along_y() {
        let k = wave_vector(Angles::new(PI / 2.0, 0.0), 0.0107);
        assert!(k.x.abs() < 1e-10);
        assert_relative_eq!(k.y, 2.0 * PI / 0.0107, max_relative = 1e-15);
    }

    #[test]
    fn steering_vector_single_element() {
        let cfg = UpaConfig::half_wavelength(1, 1, 0.0107).unwrap();
        let a = steering_vector(Angles::new(0.7, -0.3), &cfg);
        assert_eq!(a.len(), 1);
        assert_relative_eq!(a.entries()[0].re, 1.0, max_relative = 1e-15);
        assert_relative_eq!(a.entries()[0].im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn steering_vector_boresight_all_ones() {
        let a = steering_vector(Angles::BORESIGHT, &cfg_4x4());
        for e in a.entries() {
            assert_relative_eq!(e.re, 1.0, max_relative = 1e-12);
            assert!(e.im.abs() < 1e-12);
        }
    }

    #[test]
    fn make_beam_single_active_element() {
        let beam = make_beam(&cfg_4x4(), 1, 1).unwrap();
        assert_eq!(beam.active_elements(), 1);
        assert!(beam.mask(0, 0));
    }

    #[test]
    fn make_beam_full_matches_full_constructor() {
        let cfg = cfg_4x4();
        assert_eq!(make_beam(&cfg, 4, 4).unwrap(), BeamPattern::full(&cfg));
    }

    // Index oracle: a 2x1 active block of a 4x4 array activates exactly the
    // stacked entries with i(l) in {0, 1} and j(l) = 0, i.e. l in {1, 2}.
    #[test]
    fn make_beam_leading_block_stacking() {
        let beam = make_beam(&cfg_4x4(), 1, 2).unwrap();
        assert_eq!(beam.active_elements(), 2);
        let expected: Vec<bool> = (0..16).map(|l| l % 4 <= 1 && l / 4 == 0).collect();
        assert_eq!(beam.stacked(), &expected[..]);
    }

    #[test]
    fn make_beam_rejects_empty_and_oversized() {
        let cfg = cfg_4x4();
        assert_eq!(make_beam(&cfg, 0, 1), Err(BeamformingError::ZeroActiveElements));
        assert!(matches!(
            make_beam(&cfg, 1, 5),
            Err(BeamformingError::ActiveBlockOutOfRange { .. })
        ));
    }

    #[test]
    fn array_response_boresight_coherent_sum() {
        let cfg = cfg_4x4();
        let r = array_response(Angles::BORESIGHT, &BeamPattern::full(&cfg), &cfg).unwrap();
        assert_relative_eq!(r, 16.0, max_relative = 1e-12);
    }

    #[test]
    fn array_response_single_element_is_unity() {
        let cfg = cfg_4x4();
        let beam = make_beam(&cfg, 1, 1).unwrap();
        for az in [-2.0, -0.4, 0.0, 1.1] {
            let r = array_response(Angles::new(az, 0.2), &beam, &cfg).unwrap();
            assert_relative_eq!(r, 1.0, max_relative = 1e-12);
        }
    }

    // Two-element null oracle: |1 + e^{j*pi}| = 0 at azimuth pi/2 for a
    // half-wavelength pair.
    #[test]
    fn array_response_two_element_null() {
        let cfg = UpaConfig::half_wavelength(2, 1, 0.0107).unwrap();
        let r = array_response(Angles::new(PI / 2.0, 0.0), &BeamPattern::full(&cfg), &cfg).unwrap();
        assert!(r < 1e-9, "null response {r}");
    }

    #[test]
    fn array_response_dimension_mismatch() {
        let cfg = cfg_4x4();
        let other = UpaConfig::half_wavelength(2, 2, 0.0107).unwrap();
        let beam = BeamPattern::full(&other);
        assert!(matches!(
            array_response(Angles::BORESIGHT, &beam, &cfg),
            Err(BeamformingError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn link_gain_perfect_alignment_equals_m() {
        for m in [1usize, 4, 8, 16, 32, 64] {
            let cfg = UpaConfig::from_element_count(m, 0.0107).unwrap();
            let aim = Angles::new(0.37, 0.11);
            let back = reciprocal_angles(aim);
            let tx = steer_beam(aim, &BeamPattern::full(&cfg), &cfg).unwrap();
            let rx = steer_beam(back, &BeamPattern::full(&cfg), &cfg).unwrap();
            let g = link_gain(aim, back, &tx, &rx, &cfg);
            assert_relative_eq!(g, m as f64, max_relative = 1e-12);
            let gn = normalized_link_gain(aim, back, &tx, &rx, &cfg);
            assert_relative_eq!(gn, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn link_gain_single_element_always_unity() {
        let cfg = UpaConfig::half_wavelength(1, 1, 0.0107).unwrap();
        let beam = steer_beam(Angles::new(0.4, 0.0), &BeamPattern::full(&cfg), &cfg).unwrap();
        for az in [-1.0, 0.0, 2.5] {
            let g = link_gain(Angles::new(az, -0.7), Angles::new(-az, 0.7), &beam, &beam, &cfg);
            assert_relative_eq!(g, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn link_gain_zero_at_null() {
        let cfg = UpaConfig::half_wavelength(2, 1, 0.0107).unwrap();
        let full = BeamPattern::full(&cfg);
        // Aim at boresight, realize at the two-element null.
        let tx = steer_beam(Angles::BORESIGHT, &full, &cfg).unwrap();
        let rx = steer_beam(reciprocal_angles(Angles::BORESIGHT), &full, &cfg).unwrap();
        let g = link_gain(
            Angles::new(PI / 2.0, 0.0),
            reciprocal_angles(Angles::BORESIGHT),
            &tx,
            &rx,
            &cfg,
        );
        assert!(g < 1e-9, "gain at null {g}");
    }

    proptest! {
        #[test]
        fn steering_entries_unit_modulus(az in -PI..PI, el in -1.5..1.5f64) {
            let a = steering_vector(Angles::new(az, el), &cfg_4x4());
            for e in a.entries() {
                prop_assert!((e.norm() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn steering_norm_squared_is_m(az in -PI..PI, el in -1.5..1.5f64) {
            let a = steering_vector(Angles::new(az, el), &cfg_4x4());
            let n2: f64 = a.entries().iter().map(|e| e.norm_sqr()).sum();
            prop_assert!((n2 - 16.0).abs() < 1e-9);
        }

        #[test]
        fn wave_vector_norm_fixed(az in -PI..PI, el in -1.5..1.5f64) {
            let k = wave_vector(Angles::new(az, el), 0.0107);
            prop_assert!((k.norm() - 2.0 * PI / 0.0107).abs() < 1e-6);
        }

        #[test]
        fn response_bounded_by_active_count(
            az in -PI..PI,
            el in -1.5..1.5f64,
            rows in 1usize..=4,
            cols in 1usize..=4,
        ) {
            let cfg = cfg_4x4();
            let beam = make_beam(&cfg, cols, rows).unwrap();
            let r = array_response(Angles::new(az, el), &beam, &cfg).unwrap();
            prop_assert!(r >= 0.0);
            prop_assert!(r <= beam.active_elements() as f64 + 1e-9);
        }
    }

    proptest! {
        // The closed-form block response must agree with the general
        // steered evaluator on every leading-block mask.
        #[test]
        fn block_response_matches_steered_response(
            aim_az in -PI..PI,
            aim_el in -1.5..1.5f64,
            real_az in -PI..PI,
            real_el in -1.5..1.5f64,
            rows in 1usize..=4,
            cols in 1usize..=4,
        ) {
            let cfg = cfg_4x4();
            let beam = make_beam(&cfg, cols, rows).unwrap();
            let aim = Angles::new(aim_az, aim_el);
            let realized = Angles::new(real_az, real_el);
            let steered = steer_beam(aim, &beam, &cfg).unwrap();
            let slow = steered_response(realized, &steered, &cfg);
            let fast = block_response(realized, aim, rows, cols, &cfg);
            prop_assert!((slow - fast).abs() < 1e-9 * (1.0 + slow), "{slow} vs {fast}");
        }
    }

    // Widening the beam trades peak gain for robustness: lower response at
    // the aim, higher response far off-axis (checked on a fixed grid).
    #[test]
    fn wider_beam_flattens_pattern() {
        let cfg = UpaConfig::half_wavelength(8, 8, 0.0107).unwrap();
        let narrow = make_beam(&cfg, 8, 8).unwrap();
        let wide = make_beam(&cfg, 1, 1).unwrap();
        let peak_narrow = array_response(Angles::BORESIGHT, &narrow, &cfg).unwrap();
        let peak_wide = array_response(Angles::BORESIGHT, &wide, &cfg).unwrap();
        assert!(peak_wide <= peak_narrow);

        // Normalized to the per-beam peak, the wide beam dominates at
        // large misalignment.
        for az in [0.8, 1.2, 2.0] {
            let far_narrow =
                array_response(Angles::new(az, 0.0), &narrow, &cfg).unwrap() / peak_narrow;
            let far_wide = array_response(Angles::new(az, 0.0), &wide, &cfg).unwrap() / peak_wide;
            assert!(
                far_wide >= far_narrow - 1e-12,
                "az {az}: wide {far_wide} vs narrow {far_narrow}"
            );
        }
    }
}
