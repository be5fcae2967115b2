//! Magnetostatic spin-wave modes of an in-plane magnetized film strip:
//! surface waves (MSSW, propagating across the bias field) and backward
//! volume waves (BVMSW, propagating along it), with standing-wave
//! quantization over the strip edges.
//!
//! Frequencies follow the thin-film dispersions
//!
//!   surface:  f_S^2 = f_0 (f_0 + f_M) + (f_M^2 / 4) (1 - e^{-2 k d})
//!   volume:   f_B^2 = f_0 [ f_0 + f_M (1 - e^{-k d}) / (k d) ]
//!
//! with f_0 = gyro * H_0 and f_M = gyro * mu0 * H_M (all in ordinary
//! frequency; this module works in angular units throughout and converts
//! at the boundary). Surface frequencies rise with k toward f_0 + f_M / 2;
//! volume frequencies fall from sqrt(f_0 (f_0 + f_M)) toward f_0, which is
//! what lets one field value park different mode orders at very different
//! frequencies.

use crate::error::{Error, Result};
use crate::units::TWO_PI;

/// Gyromagnetic ratio of YIG, Hz per tesla.
pub const DEFAULT_GYRO_OVER_2PI: f64 = 28.0e9;

/// Absolute tolerance for field-for-frequency inversion, rad/s (2 pi kHz).
pub const FIELD_SOLVE_TOL: f64 = TWO_PI * 1e3;

const FIELD_BRACKET: (f64, f64) = (1e-3, 2.0);

/// Which dispersion branch a mode lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeFamily {
    /// Magnetostatic surface wave, k perpendicular to the bias field.
    Mssw,
    /// Backward volume wave, k parallel to the bias field.
    Bvmsw,
}

impl ModeFamily {
    pub fn label(&self) -> &'static str {
        match self {
            ModeFamily::Mssw => "MSSW",
            ModeFamily::Bvmsw => "BVMSW",
        }
    }
}

/// How the wavevector entering the dispersion is built from the two
/// standing-wave indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WavevectorModel {
    /// Use only the index along the propagation direction of the family
    /// (BVMSW: n1 over l1; MSSW: n2 over l2).
    #[default]
    PropagationAxis,
    /// Use the full in-plane magnitude sqrt(k1^2 + k2^2).
    Magnitude,
}

/// Film material and strip geometry shared by every mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialGeometry {
    /// Saturation magnetization as mu0 * H_M, tesla.
    pub mu0_hm: f64,
    /// Film thickness, m.
    pub d: f64,
    /// Strip length along the bias field, m.
    pub l1: f64,
    /// Strip width across the bias field, m.
    pub l2: f64,
    /// Gyromagnetic ratio, Hz/T.
    pub gyro_over_2pi: f64,
    pub k_model: WavevectorModel,
}

impl MaterialGeometry {
    pub fn new(mu0_hm: f64, d: f64, l1: f64, l2: f64) -> Self {
        Self {
            mu0_hm,
            d,
            l1,
            l2,
            gyro_over_2pi: DEFAULT_GYRO_OVER_2PI,
            k_model: WavevectorModel::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (v, name) in [
            (self.mu0_hm, "mu0_hm"),
            (self.d, "film thickness"),
            (self.l1, "strip length"),
            (self.l2, "strip width"),
            (self.gyro_over_2pi, "gyromagnetic ratio"),
        ] {
            if !v.is_finite() {
                return Err(Error::NonFinite("geometry"));
            }
            if v <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v:.6e}"
                )));
            }
        }
        Ok(())
    }

    /// Magnetization frequency omega_M = 2 pi gyro mu0 H_M, rad/s.
    pub fn omega_m(&self) -> f64 {
        TWO_PI * self.gyro_over_2pi * self.mu0_hm
    }

    /// Larmor frequency omega_0 = 2 pi gyro H_0 at bias field `h0` (T).
    pub fn omega_0(&self, h0: f64) -> f64 {
        TWO_PI * self.gyro_over_2pi * h0
    }
}

/// One standing-wave mode of the strip. MSSW modes are indexed (1, n2),
/// BVMSW modes (n1, 1): the half-wave count runs along the propagation
/// direction and the transverse profile stays fundamental.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnetostaticMode {
    pub family: ModeFamily,
    pub n1: u32,
    pub n2: u32,
    /// Wavevector entering the dispersion, rad/m.
    pub k: f64,
    /// Resolved frequency, rad/s. `None` until [`resolve`](Self::resolve).
    pub omega: Option<f64>,
}

impl MagnetostaticMode {
    pub fn new(family: ModeFamily, n1: u32, n2: u32, geom: &MaterialGeometry) -> Result<Self> {
        geom.validate()?;
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidParameter(
                "standing-wave indices start at 1".into(),
            ));
        }
        match family {
            ModeFamily::Mssw if n1 != 1 => {
                return Err(Error::InvalidParameter(format!(
                    "surface modes keep n1 = 1, got n1 = {n1}"
                )))
            }
            ModeFamily::Bvmsw if n2 != 1 => {
                return Err(Error::InvalidParameter(format!(
                    "volume modes keep n2 = 1, got n2 = {n2}"
                )))
            }
            _ => {}
        }
        let k = standing_wave_k(family, n1, n2, geom);
        Ok(Self {
            family,
            n1,
            n2,
            k,
            omega: None,
        })
    }

    pub fn mssw(n2: u32, geom: &MaterialGeometry) -> Result<Self> {
        Self::new(ModeFamily::Mssw, 1, n2, geom)
    }

    pub fn bvmsw(n1: u32, geom: &MaterialGeometry) -> Result<Self> {
        Self::new(ModeFamily::Bvmsw, n1, 1, geom)
    }

    /// Fills in the dispersion frequency at bias field `h0` (T).
    pub fn resolve(&mut self, h0: f64, geom: &MaterialGeometry) -> Result<f64> {
        let w = dispersion_frequency(self.family, self.k, h0, geom)?;
        self.omega = Some(w);
        Ok(w)
    }

    /// "MSSW(1,3)" style tag for artifacts and logs.
    pub fn label(&self) -> String {
        format!("{}({},{})", self.family.label(), self.n1, self.n2)
    }
}

/// Standing-wave wavevector for indices (n1, n2), rad/m. Under the default
/// model only the propagation-axis index counts; under
/// [`WavevectorModel::Magnitude`] both do.
pub fn standing_wave_k(family: ModeFamily, n1: u32, n2: u32, geom: &MaterialGeometry) -> f64 {
    let k1 = n1 as f64 * std::f64::consts::PI / geom.l1;
    let k2 = n2 as f64 * std::f64::consts::PI / geom.l2;
    match geom.k_model {
        WavevectorModel::PropagationAxis => match family {
            ModeFamily::Bvmsw => k1,
            ModeFamily::Mssw => k2,
        },
        WavevectorModel::Magnitude => k1.hypot(k2),
    }
}

fn check_dispersion_inputs(k: f64, h0: f64, geom: &MaterialGeometry) -> Result<()> {
    geom.validate()?;
    if !k.is_finite() || k < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "wavevector must be finite and non-negative, got {k:.6e}"
        )));
    }
    if !h0.is_finite() || h0 <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "bias field must be positive, got {h0:.6e} T"
        )));
    }
    Ok(())
}

/// Surface-wave frequency, rad/s.
pub fn mssw_frequency(k: f64, h0: f64, geom: &MaterialGeometry) -> Result<f64> {
    check_dispersion_inputs(k, h0, geom)?;
    let w0 = geom.omega_0(h0);
    let wm = geom.omega_m();
    // 1 - e^{-2kd} via exp_m1 to keep small-kd accuracy
    let depth = -(-2.0 * k * geom.d).exp_m1();
    Ok((w0 * (w0 + wm) + 0.25 * wm * wm * depth).sqrt())
}

/// Volume-wave frequency, rad/s. The k -> 0 limit is sqrt(w0 (w0 + wM)).
pub fn bvmsw_frequency(k: f64, h0: f64, geom: &MaterialGeometry) -> Result<f64> {
    check_dispersion_inputs(k, h0, geom)?;
    let w0 = geom.omega_0(h0);
    let wm = geom.omega_m();
    let x = k * geom.d;
    // (1 - e^{-x}) / x, continuous at x = 0 where it equals 1
    let fill = if x == 0.0 { 1.0 } else { -(-x).exp_m1() / x };
    Ok((w0 * (w0 + wm * fill)).sqrt())
}

pub fn dispersion_frequency(
    family: ModeFamily,
    k: f64,
    h0: f64,
    geom: &MaterialGeometry,
) -> Result<f64> {
    match family {
        ModeFamily::Mssw => mssw_frequency(k, h0, geom),
        ModeFamily::Bvmsw => bvmsw_frequency(k, h0, geom),
    }
}

/// Inverts the dispersion: the bias field (T) that parks the mode at
/// `target_omega` (rad/s). Both branches rise monotonically with field at
/// fixed k, so a bisection over [1 mT, 2 T] settles it; targets outside
/// that band come back as [`Error::OutOfBand`] carrying the reachable
/// range.
pub fn field_for_frequency(
    family: ModeFamily,
    k: f64,
    target_omega: f64,
    geom: &MaterialGeometry,
) -> Result<f64> {
    if !target_omega.is_finite() || target_omega <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "target frequency must be positive, got {target_omega:.6e}"
        )));
    }
    let (mut lo, mut hi) = FIELD_BRACKET;
    let w_lo = dispersion_frequency(family, k, lo, geom)?;
    let w_hi = dispersion_frequency(family, k, hi, geom)?;
    if target_omega < w_lo || target_omega > w_hi {
        return Err(Error::OutOfBand {
            target_rad_s: target_omega,
            band_lo: w_lo,
            band_hi: w_hi,
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let w_mid = dispersion_frequency(family, k, mid, geom)?;
        if (w_mid - target_omega).abs() <= FIELD_SOLVE_TOL {
            return Ok(mid);
        }
        if w_mid < target_omega {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// All modes of one family up to `max_index` along the propagation
/// direction, resolved at bias field `h0` and sorted by frequency.
pub fn mode_catalog(
    geom: &MaterialGeometry,
    h0: f64,
    family: ModeFamily,
    max_index: u32,
) -> Result<Vec<MagnetostaticMode>> {
    if max_index == 0 {
        return Err(Error::InvalidParameter(
            "mode catalog needs max_index >= 1".into(),
        ));
    }
    let mut modes = Vec::with_capacity(max_index as usize);
    for n in 1..=max_index {
        let mut mode = match family {
            ModeFamily::Mssw => MagnetostaticMode::mssw(n, geom)?,
            ModeFamily::Bvmsw => MagnetostaticMode::bvmsw(n, geom)?,
        };
        mode.resolve(h0, geom)?;
        modes.push(mode);
    }
    modes.sort_by(|a, b| a.omega.unwrap().total_cmp(&b.omega.unwrap()));
    Ok(modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::angular;

    /// 0.5 mm thick, 3 mm x 1 mm strip, mu0 H_M = 0.175 T.
    fn strip() -> MaterialGeometry {
        MaterialGeometry::new(0.175, 0.5e-3, 3e-3, 1e-3)
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    /// Geometry where f_0 = 5 GHz, f_M = 4.9 GHz for hand-checkable numbers:
    /// bias 5/28 T.
    const H0_5GHZ: f64 = 5.0e9 / 28.0e9;

    #[test]
    fn mssw_long_wavelength_limit_matches_frozen_value() {
        let geom = strip();
        let w = mssw_frequency(0.0, H0_5GHZ, &geom).unwrap();
        assert!(rel_err(w, angular(7.035_623_639_735_144e9)) < 1e-12);
    }

    #[test]
    fn mssw_saturates_at_half_magnetization_offset() {
        let geom = strip();
        // kd = 50 is deep saturation: f -> f_0 + f_M / 2 = 7.45 GHz
        let k = 50.0 / geom.d;
        let w = mssw_frequency(k, H0_5GHZ, &geom).unwrap();
        assert!(rel_err(w, angular(7.45e9)) < 1e-12);
    }

    #[test]
    fn bvmsw_unit_kd_matches_frozen_value() {
        let geom = strip();
        let k = 1.0 / geom.d;
        let w = bvmsw_frequency(k, H0_5GHZ, &geom).unwrap();
        assert!(rel_err(w, angular(6.362_935_933_301_518e9)) < 1e-12);
    }

    #[test]
    fn bvmsw_limits_bracket_the_branch() {
        let geom = strip();
        // k -> 0: sqrt(f_0 (f_0 + f_M)); deep kd: toward f_0
        let w0 = bvmsw_frequency(0.0, H0_5GHZ, &geom).unwrap();
        assert!(rel_err(w0, angular((5.0e9f64 * 9.9e9).sqrt())) < 1e-12);
        let w_deep = bvmsw_frequency(50.0 / geom.d, H0_5GHZ, &geom).unwrap();
        assert!(rel_err(w_deep, angular(5.048_762_224_545_735e9)) < 1e-12);
        assert!(w_deep < w0);
    }

    #[test]
    fn branches_run_in_opposite_directions() {
        let geom = strip();
        let ks: Vec<f64> = (0..40).map(|i| i as f64 * 0.25 / geom.d).collect();
        let mut prev_s = 0.0;
        let mut prev_b = f64::INFINITY;
        for &k in &ks {
            let s = mssw_frequency(k, H0_5GHZ, &geom).unwrap();
            let b = bvmsw_frequency(k, H0_5GHZ, &geom).unwrap();
            assert!(s > prev_s, "surface branch must rise");
            assert!(b < prev_b, "volume branch must fall");
            prev_s = s;
            prev_b = b;
        }
    }

    #[test]
    fn standing_wave_k_uses_propagation_axis() {
        let geom = strip();
        // BVMSW(1,1) along l1 = 3 mm
        let k = standing_wave_k(ModeFamily::Bvmsw, 1, 1, &geom);
        assert!(rel_err(k, 1_047.197_551_2) < 1e-10);
        // BVMSW(2,1) doubles it
        let k2 = standing_wave_k(ModeFamily::Bvmsw, 2, 1, &geom);
        assert!(rel_err(k2, 2_094.395_102_39) < 1e-10);
        // MSSW uses l2 = 1 mm
        let km = standing_wave_k(ModeFamily::Mssw, 1, 1, &geom);
        assert!(rel_err(km, std::f64::consts::PI / 1e-3) < 1e-14);
    }

    #[test]
    fn magnitude_model_mixes_both_indices() {
        let mut geom = strip();
        geom.k_model = WavevectorModel::Magnitude;
        let k = standing_wave_k(ModeFamily::Bvmsw, 3, 2, &geom);
        let k1 = 3.0 * std::f64::consts::PI / geom.l1;
        let k2 = 2.0 * std::f64::consts::PI / geom.l2;
        assert!(rel_err(k, (k1 * k1 + k2 * k2).sqrt()) < 1e-14);
        // and exceeds either axis alone
        assert!(k > k1 && k > k2);
    }

    #[test]
    fn mode_constructors_enforce_family_indexing() {
        let geom = strip();
        assert!(MagnetostaticMode::new(ModeFamily::Mssw, 2, 1, &geom).is_err());
        assert!(MagnetostaticMode::new(ModeFamily::Bvmsw, 1, 2, &geom).is_err());
        assert!(MagnetostaticMode::new(ModeFamily::Mssw, 1, 3, &geom).is_ok());
        assert!(MagnetostaticMode::new(ModeFamily::Bvmsw, 4, 1, &geom).is_ok());
        assert!(MagnetostaticMode::mssw(0, &geom).is_err());
    }

    #[test]
    fn field_inversion_round_trips_through_dispersion() {
        let geom = strip();
        let mode = MagnetostaticMode::bvmsw(3, &geom).unwrap();
        let target = angular(4.6e9);
        let h0 = field_for_frequency(ModeFamily::Bvmsw, mode.k, target, &geom).unwrap();
        let back = bvmsw_frequency(mode.k, h0, &geom).unwrap();
        assert!((back - target).abs() <= FIELD_SOLVE_TOL);
    }

    #[test]
    fn field_for_volume_mode_matches_frozen_value() {
        // BVMSW(3,1): k = 3 pi / 3 mm, k d = pi / 2
        let geom = strip();
        let mode = MagnetostaticMode::bvmsw(3, &geom).unwrap();
        assert!(rel_err(mode.k * geom.d, std::f64::consts::FRAC_PI_2) < 1e-14);
        let h0 =
            field_for_frequency(ModeFamily::Bvmsw, mode.k, angular(4.6e9), &geom).unwrap();
        assert!((h0 - 0.125_983_635_954).abs() < 1e-7);
    }

    #[test]
    fn surface_fundamental_at_150mt_matches_frozen_value() {
        // square 3 mm x 3 mm flake, so l2 = 3 mm sets the surface-wave k
        let geom = MaterialGeometry::new(0.175, 0.5e-3, 3e-3, 3e-3);
        let mut mode = MagnetostaticMode::mssw(1, &geom).unwrap();
        assert!(rel_err(mode.k * geom.d, 0.5235987755982988) < 1e-14);
        let w = mode.resolve(0.150, &geom).unwrap();
        assert!(rel_err(w, angular(6_489_692_123.47)) < 1e-10);
        assert_eq!(mode.omega, Some(w));
    }

    #[test]
    fn unreachable_targets_report_the_band() {
        let geom = strip();
        let k = standing_wave_k(ModeFamily::Mssw, 1, 1, &geom);
        match field_for_frequency(ModeFamily::Mssw, k, angular(500e9), &geom) {
            Err(Error::OutOfBand {
                target_rad_s,
                band_lo,
                band_hi,
            }) => {
                assert!(rel_err(target_rad_s, angular(500e9)) < 1e-14);
                assert!(band_lo < band_hi);
                assert!(target_rad_s > band_hi);
            }
            other => panic!("expected OutOfBand, got {other:?}"),
        }
        assert!(field_for_frequency(ModeFamily::Mssw, k, angular(1e3), &geom).is_err());
    }

    #[test]
    fn catalog_is_sorted_and_family_ordered() {
        let geom = strip();
        // volume modes: higher index -> larger k -> lower frequency
        let cat = mode_catalog(&geom, 0.15, ModeFamily::Bvmsw, 4).unwrap();
        assert_eq!(cat.len(), 4);
        for pair in cat.windows(2) {
            assert!(pair[0].omega.unwrap() < pair[1].omega.unwrap());
        }
        assert_eq!(cat[0].n1, 4, "highest volume index sits lowest");
        assert_eq!(cat[3].n1, 1);
        assert_eq!(cat[0].label(), "BVMSW(4,1)");

        // surface modes: higher index -> larger k -> higher frequency
        let cat = mode_catalog(&geom, 0.15, ModeFamily::Mssw, 3).unwrap();
        assert_eq!(cat[0].n2, 1);
        assert_eq!(cat[2].n2, 3);
        assert_eq!(cat[2].label(), "MSSW(1,3)");
        assert!(mode_catalog(&geom, 0.15, ModeFamily::Mssw, 0).is_err());
    }

    #[test]
    fn bad_geometry_is_rejected() {
        let mut geom = strip();
        geom.d = 0.0;
        assert!(geom.validate().is_err());
        let mut geom = strip();
        geom.mu0_hm = -0.1;
        assert!(mssw_frequency(1e3, 0.15, &geom).is_err());
        let geom = strip();
        assert!(mssw_frequency(-1.0, 0.15, &geom).is_err());
        assert!(bvmsw_frequency(1e3, 0.0, &geom).is_err());
    }
}
