//! Three-mode coupled-mode chain: a microwave cavity mode `a`, a magnon
//! mode `m`, and an optical sideband `b`, linked a <-> m <-> b with beam-
//! splitter couplings g_ma and g_mb. The pump selects the sideband: an
//! anti-Stokes pump sits one magnon frequency below the optical resonance
//! (up-conversion), a Stokes pump one above (down-conversion, two-mode-
//! squeezing sign).
//!
//! Two independent routes to the same numbers live here on purpose: the
//! closed-form efficiencies ([`eta_antistokes`], [`eta_stokes`]) and the
//! frequency-domain steady state solved as a literal 3x3 linear system
//! ([`steady_state_solve`]). They are cross-checked against each other in
//! the test suite and must never be merged.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::units::{HBAR, SPEED_OF_LIGHT, TWO_PI};

/// Stokes parameter sets whose denominator magnitude falls below this
/// fraction of the bare (uncoupled) denominator are rejected as unstable
/// instead of reporting an unbounded efficiency.
pub const STOKES_INSTABILITY_THRESHOLD: f64 = 1e-6;

/// Which optical sideband the pump addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Process {
    AntiStokes,
    Stokes,
}

/// A driven cavity-like mode: resonance, external port coupling, internal
/// loss. All angular (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    pub omega: f64,
    pub kappa_ext: f64,
    pub gamma_int: f64,
}

impl OscillatorParams {
    pub fn new(omega: f64, kappa_ext: f64, gamma_int: f64) -> Self {
        Self {
            omega,
            kappa_ext,
            gamma_int,
        }
    }

    pub fn total_linewidth(&self) -> f64 {
        self.kappa_ext + self.gamma_int
    }

    pub fn half_linewidth(&self) -> f64 {
        0.5 * self.total_linewidth()
    }

    /// Fraction of the total linewidth owned by the external port,
    /// kappa / (kappa + gamma).
    pub fn extraction(&self) -> f64 {
        self.kappa_ext / self.total_linewidth()
    }

    fn validate(&self, label: &'static str) -> Result<()> {
        for v in [self.omega, self.kappa_ext, self.gamma_int] {
            if !v.is_finite() {
                return Err(Error::NonFinite(label));
            }
        }
        if self.omega <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "{label} resonance must be positive, got {:.6e}",
                self.omega
            )));
        }
        if self.kappa_ext < 0.0 || self.gamma_int < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "{label} rates must be non-negative"
            )));
        }
        if self.total_linewidth() <= 0.0 {
            return Err(Error::ZeroLinewidth(label));
        }
        Ok(())
    }
}

/// The magnon mode: resonance and its (strictly positive) linewidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnonParams {
    pub omega: f64,
    pub gamma: f64,
}

impl MagnonParams {
    pub fn new(omega: f64, gamma: f64) -> Self {
        Self { omega, gamma }
    }

    fn validate(&self) -> Result<()> {
        if !self.omega.is_finite() || !self.gamma.is_finite() {
            return Err(Error::NonFinite("magnon"));
        }
        if self.omega <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "magnon frequency must be positive, got {:.6e}",
                self.omega
            )));
        }
        if self.gamma <= 0.0 {
            return Err(Error::ZeroLinewidth("magnon"));
        }
        Ok(())
    }
}

/// Full parameter set for one conversion configuration.
///
/// `g_mb` is the pump-enhanced optomagnonic coupling. When the bookkeeping
/// pair (`g_mb_single`, `pump_amplitude`) is also present, their product
/// must reproduce `g_mb`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransducerConfig {
    pub microwave: OscillatorParams,
    pub magnon: MagnonParams,
    pub optical: OscillatorParams,
    /// Pump laser frequency, rad/s.
    pub pump_omega: f64,
    pub g_ma: f64,
    pub g_mb: f64,
    pub g_mb_single: Option<f64>,
    pub pump_amplitude: Option<f64>,
    pub process: Process,
}

impl TransducerConfig {
    /// Pump detuning from the optical resonance, omega_b - omega_p.
    pub fn delta_b(&self) -> f64 {
        self.optical.omega - self.pump_omega
    }

    /// Repins the pump so the scattered sideband lands on the optical
    /// resonance when the probe sits on the magnon: delta_b = +omega_m for
    /// anti-Stokes, -omega_m for Stokes.
    pub fn pin_triple_resonance(&mut self) {
        let target = match self.process {
            Process::AntiStokes => self.magnon.omega,
            Process::Stokes => -self.magnon.omega,
        };
        self.pump_omega = self.optical.omega - target;
    }

    pub fn validate(&self) -> Result<()> {
        self.microwave.validate("microwave")?;
        self.magnon.validate()?;
        self.optical.validate("optical")?;
        for (v, name) in [
            (self.pump_omega, "pump_omega"),
            (self.g_ma, "g_ma"),
            (self.g_mb, "g_mb"),
        ] {
            if !v.is_finite() {
                return Err(Error::NonFinite(name));
            }
        }
        if self.pump_omega <= 0.0 {
            return Err(Error::InvalidParameter(
                "pump frequency must be positive".into(),
            ));
        }
        if self.g_ma < 0.0 || self.g_mb < 0.0 {
            return Err(Error::InvalidParameter(
                "couplings must be non-negative".into(),
            ));
        }
        for (v, name) in [
            (self.g_mb_single, "g_mb_single"),
            (self.pump_amplitude, "pump_amplitude"),
        ] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(Error::NonFinite(name));
                }
                if v < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "{name} must be non-negative"
                    )));
                }
            }
        }
        if let (Some(g1), Some(beta)) = (self.g_mb_single, self.pump_amplitude) {
            let product = g1 * beta;
            let scale = self.g_mb.abs().max(product.abs()).max(f64::MIN_POSITIVE);
            if (self.g_mb - product).abs() > 1e-9 * scale {
                return Err(Error::InvalidParameter(format!(
                    "g_mb = {:.9e} disagrees with g_mb_single * pump_amplitude = {:.9e}",
                    self.g_mb, product
                )));
            }
        }
        Ok(())
    }
}

fn ensure_finite(v: f64, name: &'static str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(name))
    }
}

#[inline]
pub(crate) fn response_inv(half_linewidth: f64, probe: f64, center: f64) -> Complex64 {
    Complex64::new(half_linewidth, -(probe - center))
}

#[inline]
fn chi_a_inv(w: f64, cfg: &TransducerConfig) -> Complex64 {
    response_inv(cfg.microwave.half_linewidth(), w, cfg.microwave.omega)
}

#[inline]
fn chi_m_inv(w: f64, cfg: &TransducerConfig) -> Complex64 {
    response_inv(0.5 * cfg.magnon.gamma, w, cfg.magnon.omega)
}

/// chi_b written around the magnon frequency: the sideband response under
/// the triple-resonance pump placement (delta_b = +/- omega_m).
#[inline]
fn chi_b_resonant_inv(w: f64, cfg: &TransducerConfig) -> Complex64 {
    response_inv(cfg.optical.half_linewidth(), w, cfg.magnon.omega)
}

/// chi_b at the pump detuning actually configured. For an anti-Stokes pump
/// the sideband beats at omega - delta_b; for a Stokes pump the conjugate
/// mode beats at omega + delta_b. Both reduce to the resonant form when the
/// pump is pinned.
#[inline]
pub(crate) fn chi_b_pumped_inv(w: f64, cfg: &TransducerConfig) -> Complex64 {
    let center = match cfg.process {
        Process::AntiStokes => cfg.delta_b(),
        Process::Stokes => -cfg.delta_b(),
    };
    response_inv(cfg.optical.half_linewidth(), w, center)
}

/// Linear response of the three modes at a probe frequency. The optical
/// entry uses the triple-resonance convention (resonant when the probe sits
/// on the magnon).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Susceptibilities {
    pub chi_a: Complex64,
    pub chi_m: Complex64,
    pub chi_b: Complex64,
}

pub fn susceptibilities(probe_omega: f64, cfg: &TransducerConfig) -> Result<Susceptibilities> {
    cfg.validate()?;
    ensure_finite(probe_omega, "probe_omega")?;
    Ok(Susceptibilities {
        chi_a: chi_a_inv(probe_omega, cfg).inv(),
        chi_m: chi_m_inv(probe_omega, cfg).inv(),
        chi_b: chi_b_resonant_inv(probe_omega, cfg).inv(),
    })
}

fn closed_form_eta(probe_omega: f64, cfg: &TransducerConfig, sign: f64) -> Result<f64> {
    cfg.validate()?;
    ensure_finite(probe_omega, "probe_omega")?;
    let ca = chi_a_inv(probe_omega, cfg);
    let cm = chi_m_inv(probe_omega, cfg);
    let cb = chi_b_resonant_inv(probe_omega, cfg);
    let bare = ca * cb * cm;
    let den = bare + cfg.g_ma * cfg.g_ma * cb + sign * cfg.g_mb * cfg.g_mb * ca;
    if sign < 0.0 {
        let ratio = den.norm() / bare.norm();
        if ratio < STOKES_INSTABILITY_THRESHOLD {
            return Err(Error::StokesUnstable { ratio });
        }
    }
    let num = cfg.g_ma * cfg.g_mb * (cfg.microwave.kappa_ext * cfg.optical.kappa_ext).sqrt();
    Ok(num * num / den.norm_sqr())
}

/// Anti-Stokes photon-number conversion efficiency |b_out / a_in|^2 from
/// the closed-form three-mode expression. Valid under the triple-resonance
/// pump placement (delta_b = +omega_m); the pump detuning itself is not
/// consulted.
pub fn eta_antistokes(probe_omega: f64, cfg: &TransducerConfig) -> Result<f64> {
    if cfg.process != Process::AntiStokes {
        return Err(Error::InvalidParameter(
            "eta_antistokes called on a Stokes configuration".into(),
        ));
    }
    closed_form_eta(probe_omega, cfg, 1.0)
}

/// Stokes counterpart (delta_b = -omega_m). The two-mode-squeezing sign
/// flips the g_mb^2 term, so the denominator can shrink toward zero;
/// parameter sets within [`STOKES_INSTABILITY_THRESHOLD`] of cancelling it
/// are flagged as unstable.
pub fn eta_stokes(probe_omega: f64, cfg: &TransducerConfig) -> Result<f64> {
    if cfg.process != Process::Stokes {
        return Err(Error::InvalidParameter(
            "eta_stokes called on an anti-Stokes configuration".into(),
        ));
    }
    closed_form_eta(probe_omega, cfg, -1.0)
}

/// Efficiency with both port extraction factors divided out, together with
/// the factors themselves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InternalEfficiency {
    pub eta_internal: f64,
    pub xi_a: f64,
    pub xi_b: f64,
}

pub fn eta_internal(eta: f64, cfg: &TransducerConfig) -> Result<InternalEfficiency> {
    cfg.validate()?;
    if !eta.is_finite() || eta < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "eta must be finite and non-negative, got {eta:.6e}"
        )));
    }
    if cfg.microwave.kappa_ext == 0.0 || cfg.optical.kappa_ext == 0.0 {
        return Err(Error::InvalidParameter(
            "internal efficiency needs kappa_ext > 0 on both ports".into(),
        ));
    }
    let xi_a = cfg.microwave.extraction();
    let xi_b = cfg.optical.extraction();
    Ok(InternalEfficiency {
        eta_internal: eta / (xi_a * xi_b),
        xi_a,
        xi_b,
    })
}

/// Microwave extraction factor implied by a measured (eta, eta_internal)
/// pair once the optical factor is known: eta / (eta_internal * xi_b).
pub fn implied_xi_a(eta: f64, eta_internal: f64, xi_b: f64) -> Result<f64> {
    for (v, name) in [
        (eta, "eta"),
        (eta_internal, "eta_internal"),
        (xi_b, "xi_b"),
    ] {
        ensure_finite(v, name)?;
    }
    if eta < 0.0 || eta_internal <= 0.0 {
        return Err(Error::InvalidParameter(
            "eta must be non-negative and eta_internal positive".into(),
        ));
    }
    if xi_b <= 0.0 || xi_b > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "xi_b must lie in (0, 1], got {xi_b:.6e}"
        )));
    }
    Ok(eta / (eta_internal * xi_b))
}

/// Inputs entering the two ports, normalized like the mode amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Drive {
    pub a_in: Complex64,
    pub b_in: Complex64,
}

impl Drive {
    /// Unit microwave drive, dark optical port.
    pub fn microwave_unit() -> Self {
        Self {
            a_in: Complex64::new(1.0, 0.0),
            b_in: Complex64::new(0.0, 0.0),
        }
    }
}

/// Intracavity amplitudes and outgoing waves at one probe frequency. Under
/// a Stokes pump the `optical` slot holds the conjugate-mode amplitude
/// (b-dagger) and `optical_out` its outgoing wave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeAmplitudes {
    pub microwave: Complex64,
    pub magnon: Complex64,
    pub optical: Complex64,
    pub microwave_out: Complex64,
    pub optical_out: Complex64,
}

/// Frequency-domain steady state of the driven chain, solved as a literal
/// 3x3 complex linear system with a condition-number guard. No closed-form
/// shortcuts: this is the independent reference the closed-form
/// efficiencies are checked against. The optical row uses the pump detuning
/// as configured, so the solve stays valid away from triple resonance.
pub fn steady_state_solve(
    probe_omega: f64,
    cfg: &TransducerConfig,
    drive: Drive,
) -> Result<ModeAmplitudes> {
    cfg.validate()?;
    ensure_finite(probe_omega, "probe_omega")?;
    for (v, name) in [(drive.a_in, "a_in"), (drive.b_in, "b_in")] {
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NonFinite(name));
        }
    }

    let i = Complex64::new(0.0, 1.0);
    let mut m = CMatrix::zeros(3);
    m.set(0, 0, chi_a_inv(probe_omega, cfg));
    m.set(0, 1, i * cfg.g_ma);
    m.set(1, 0, i * cfg.g_ma);
    m.set(1, 1, chi_m_inv(probe_omega, cfg));
    m.set(1, 2, i * cfg.g_mb);
    let sideband_sign = match cfg.process {
        Process::AntiStokes => 1.0,
        Process::Stokes => -1.0,
    };
    m.set(2, 1, sideband_sign * i * cfg.g_mb);
    m.set(2, 2, chi_b_pumped_inv(probe_omega, cfg));

    let sqrt_ka = cfg.microwave.kappa_ext.sqrt();
    let sqrt_kb = cfg.optical.kappa_ext.sqrt();
    let rhs = [
        sqrt_ka * drive.a_in,
        Complex64::new(0.0, 0.0),
        sqrt_kb * drive.b_in,
    ];
    let x = linalg::solve_checked(&m, &rhs)?;
    Ok(ModeAmplitudes {
        microwave: x[0],
        magnon: x[1],
        optical: x[2],
        microwave_out: sqrt_ka * x[0] - drive.a_in,
        optical_out: sqrt_kb * x[2] - drive.b_in,
    })
}

/// Reflection coefficient at the microwave port for a unit probe,
/// sqrt(kappa_a) a / a_in - 1.
pub fn reflection_s11(probe_omega: f64, cfg: &TransducerConfig) -> Result<Complex64> {
    Ok(steady_state_solve(probe_omega, cfg, Drive::microwave_unit())?.microwave_out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityFigures {
    pub finesse: f64,
    pub quality: f64,
}

/// Finesse and loaded quality factor of an optical resonator from its free
/// spectral range (Hz), total linewidth, and vacuum wavelength.
pub fn cavity_figures(
    fsr_hz: f64,
    optical: &OscillatorParams,
    wavelength_m: f64,
) -> Result<CavityFigures> {
    optical.validate("optical")?;
    ensure_finite(fsr_hz, "fsr_hz")?;
    ensure_finite(wavelength_m, "wavelength_m")?;
    if fsr_hz <= 0.0 || wavelength_m <= 0.0 {
        return Err(Error::InvalidParameter(
            "free spectral range and wavelength must be positive".into(),
        ));
    }
    let linewidth_hz = optical.total_linewidth() / TWO_PI;
    Ok(CavityFigures {
        finesse: fsr_hz / linewidth_hz,
        quality: (SPEED_OF_LIGHT / wavelength_m) / linewidth_hz,
    })
}

/// Photons per second carried by `power_w` watts at angular frequency
/// `omega`.
pub fn photon_flux(power_w: f64, omega: f64) -> Result<f64> {
    ensure_finite(power_w, "power_w")?;
    ensure_finite(omega, "omega")?;
    if power_w < 0.0 {
        return Err(Error::InvalidParameter(
            "power must be non-negative".into(),
        ));
    }
    if omega <= 0.0 {
        return Err(Error::InvalidParameter(
            "photon frequency must be positive".into(),
        ));
    }
    Ok(power_w / (HBAR * omega))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::angular;

    /// kappa_a/2pi = gamma_a/2pi = gamma_m/2pi = 1 MHz, optical linewidths
    /// from the narrow sphere resonator, g_ma/2pi = 10 MHz, g_mb/2pi = 1 kHz,
    /// everything resonant at 5.99 GHz with the pump pinned.
    fn resonant_config(process: Process) -> TransducerConfig {
        let mut cfg = TransducerConfig {
            microwave: OscillatorParams::new(angular(5.99e9), angular(1e6), angular(1e6)),
            magnon: MagnonParams::new(angular(5.99e9), angular(1e6)),
            optical: OscillatorParams::new(angular(193.41e12), angular(6.56e6), angular(25.14e6)),
            pump_omega: 1.0,
            g_ma: angular(10e6),
            g_mb: angular(1e3),
            g_mb_single: None,
            pump_amplitude: None,
            process,
        };
        cfg.pin_triple_resonance();
        cfg
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn magnon_susceptibility_on_resonance_is_two_over_gamma() {
        let cfg = resonant_config(Process::AntiStokes);
        let s = susceptibilities(cfg.magnon.omega, &cfg).unwrap();
        // gamma_m/2pi = 1 MHz -> chi_m = 2/gamma_m = 1/(pi 1e6) s
        assert!(rel_err(s.chi_m.re, 3.183_098_861_837_907e-7) < 1e-14);
        assert!(s.chi_m.im.abs() < 1e-30);
    }

    #[test]
    fn optical_susceptibility_on_resonance_matches_linewidth_sum() {
        let cfg = resonant_config(Process::AntiStokes);
        let s = susceptibilities(cfg.magnon.omega, &cfg).unwrap();
        // (kappa_b + gamma_b)/2pi = 31.70 MHz -> chi_b = 1.0041e-8 s
        assert!(rel_err(s.chi_b.re, 1.004_132_133_071_895e-8) < 1e-14);
        assert!(s.chi_b.im.abs() < 1e-22);
    }

    #[test]
    fn susceptibility_magnitude_decays_off_resonance() {
        let cfg = resonant_config(Process::AntiStokes);
        let on = susceptibilities(cfg.magnon.omega, &cfg).unwrap();
        let off = susceptibilities(cfg.magnon.omega + angular(50e6), &cfg).unwrap();
        assert!(off.chi_m.norm() < on.chi_m.norm());
        assert!(off.chi_b.norm() < on.chi_b.norm());
    }

    #[test]
    fn eta_antistokes_matches_frozen_resonant_value() {
        let cfg = resonant_config(Process::AntiStokes);
        let eta = eta_antistokes(cfg.magnon.omega, &cfg).unwrap();
        assert!(rel_err(eta, 2.585_313_310_799_408e-10) < 1e-12);
    }

    #[test]
    fn eta_stokes_exceeds_antistokes_at_strong_coupling() {
        let mut as_cfg = resonant_config(Process::AntiStokes);
        as_cfg.g_mb = angular(1e6);
        as_cfg.pin_triple_resonance();
        let mut s_cfg = as_cfg.clone();
        s_cfg.process = Process::Stokes;
        s_cfg.pin_triple_resonance();
        let ea = eta_antistokes(as_cfg.magnon.omega, &as_cfg).unwrap();
        let es = eta_stokes(s_cfg.magnon.omega, &s_cfg).unwrap();
        assert!(es > ea);
    }

    #[test]
    fn stokes_and_antistokes_degenerate_at_weak_gmb() {
        let mut as_cfg = resonant_config(Process::AntiStokes);
        as_cfg.g_mb = angular(1.0);
        as_cfg.pin_triple_resonance();
        let mut s_cfg = as_cfg.clone();
        s_cfg.process = Process::Stokes;
        s_cfg.pin_triple_resonance();
        let w = as_cfg.magnon.omega;
        let ea = eta_antistokes(w, &as_cfg).unwrap();
        let es = eta_stokes(w, &s_cfg).unwrap();
        assert!((es - ea).abs() / ea < 1e-6);
    }

    #[test]
    fn stokes_gap_scales_with_gmb_squared() {
        let gap = |gmb_hz: f64| {
            let mut a = resonant_config(Process::AntiStokes);
            a.g_mb = angular(gmb_hz);
            a.pin_triple_resonance();
            let mut s = a.clone();
            s.process = Process::Stokes;
            s.pin_triple_resonance();
            let w = a.magnon.omega;
            let ea = eta_antistokes(w, &a).unwrap();
            let es = eta_stokes(w, &s).unwrap();
            (es - ea) / ea
        };
        let g1 = gap(200.0);
        let g2 = gap(100.0);
        assert!(rel_err(g1 / g2, 4.0) < 1e-4);
    }

    #[test]
    fn zero_coupling_kills_conversion() {
        let mut cfg = resonant_config(Process::AntiStokes);
        cfg.g_ma = 0.0;
        assert_eq!(eta_antistokes(cfg.magnon.omega, &cfg).unwrap(), 0.0);
        let mut cfg = resonant_config(Process::AntiStokes);
        cfg.g_mb = 0.0;
        assert_eq!(eta_antistokes(cfg.magnon.omega, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn process_mismatch_is_rejected() {
        let cfg = resonant_config(Process::AntiStokes);
        assert!(matches!(
            eta_stokes(cfg.magnon.omega, &cfg),
            Err(Error::InvalidParameter(_))
        ));
        let cfg = resonant_config(Process::Stokes);
        assert!(matches!(
            eta_antistokes(cfg.magnon.omega, &cfg),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn stokes_instability_is_flagged_not_returned() {
        // g_ma = 0 decouples the cavity; with g_mb^2 = Gamma_b * gamma_m / 2
        // the Stokes denominator cancels exactly on resonance.
        let mut cfg = resonant_config(Process::Stokes);
        cfg.g_ma = 0.0;
        let half_b = cfg.optical.half_linewidth();
        let half_m = 0.5 * cfg.magnon.gamma;
        cfg.g_mb = (half_b * half_m).sqrt();
        cfg.pin_triple_resonance();
        match eta_stokes(cfg.magnon.omega, &cfg) {
            Err(Error::StokesUnstable { ratio }) => assert!(ratio < 1e-6),
            other => panic!("expected StokesUnstable, got {other:?}"),
        }
    }

    #[test]
    fn reciprocal_port_swap_leaves_eta_unchanged() {
        // fully resonant chain; swap (g_ma, kappa_a, gamma_a) with
        // (g_mb, kappa_b, gamma_b)
        let omega = angular(5.99e9);
        let base = TransducerConfig {
            microwave: OscillatorParams::new(omega, angular(2e6), angular(0.7e6)),
            magnon: MagnonParams::new(omega, angular(1.1e6)),
            optical: OscillatorParams::new(angular(193.41e12), angular(6.56e6), angular(25.14e6)),
            pump_omega: omega, // placeholder, repinned below
            g_ma: angular(4e6),
            g_mb: angular(0.3e6),
            g_mb_single: None,
            pump_amplitude: None,
            process: Process::AntiStokes,
        };
        let mut fwd = base.clone();
        fwd.pin_triple_resonance();
        let mut swapped = base.clone();
        swapped.microwave.kappa_ext = base.optical.kappa_ext;
        swapped.microwave.gamma_int = base.optical.gamma_int;
        swapped.optical.kappa_ext = base.microwave.kappa_ext;
        swapped.optical.gamma_int = base.microwave.gamma_int;
        swapped.g_ma = base.g_mb;
        swapped.g_mb = base.g_ma;
        swapped.pin_triple_resonance();
        let ea = eta_antistokes(omega, &fwd).unwrap();
        let eb = eta_antistokes(omega, &swapped).unwrap();
        assert!(rel_err(ea, eb) < 1e-12);
    }

    #[test]
    fn eta_internal_divides_out_extraction_factors() {
        let cfg = resonant_config(Process::AntiStokes);
        let out = eta_internal(1.75e-8, &cfg).unwrap();
        assert!(rel_err(out.eta_internal * out.xi_a * out.xi_b, 1.75e-8) < 1e-15);
        // lossless ports: eta_internal == eta
        let mut lossless = cfg.clone();
        lossless.microwave.gamma_int = 0.0;
        lossless.optical.gamma_int = 0.0;
        let out = eta_internal(0.42, &lossless).unwrap();
        assert_eq!(out.eta_internal, 0.42);
        assert_eq!(out.xi_a, 1.0);
        assert_eq!(out.xi_b, 1.0);
    }

    #[test]
    fn optical_extraction_factor_matches_sphere_resonator() {
        let cfg = resonant_config(Process::AntiStokes);
        let xi_b = cfg.optical.extraction();
        assert!(rel_err(xi_b, 0.206_940_063_091) < 1e-10);
    }

    #[test]
    fn implied_xi_a_from_measured_pair_sits_in_physical_range() {
        let xi_b = 6.56 / 31.70;
        let xi_a = implied_xi_a(1.75e-8, 1.28e-7, xi_b).unwrap();
        assert!(rel_err(xi_a, 0.660_668_349_848) < 1e-10);
        assert!(xi_a > 0.63 && xi_a < 0.70);
    }

    #[test]
    fn eta_internal_rejects_dark_ports() {
        let mut cfg = resonant_config(Process::AntiStokes);
        cfg.microwave.kappa_ext = 0.0;
        assert!(matches!(
            eta_internal(1e-9, &cfg),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn zero_drive_means_zero_amplitudes() {
        let cfg = resonant_config(Process::AntiStokes);
        let out = steady_state_solve(cfg.magnon.omega, &cfg, Drive::default()).unwrap();
        assert_eq!(out.microwave, Complex64::new(0.0, 0.0));
        assert_eq!(out.magnon, Complex64::new(0.0, 0.0));
        assert_eq!(out.optical, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn decoupled_cavity_amplitude_is_lorentzian_peak() {
        let mut cfg = resonant_config(Process::AntiStokes);
        cfg.microwave.kappa_ext = angular(2e6);
        cfg.microwave.gamma_int = angular(1e6);
        cfg.g_ma = 0.0;
        cfg.g_mb = 0.0;
        let out =
            steady_state_solve(cfg.microwave.omega, &cfg, Drive::microwave_unit()).unwrap();
        // a = 2 sqrt(kappa_a) / (kappa_a + gamma_a), purely real on resonance
        let expect = 2.0 * cfg.microwave.kappa_ext.sqrt() / cfg.microwave.total_linewidth();
        assert!(rel_err(out.microwave.re, expect) < 1e-14);
        assert!(out.microwave.im.abs() < 1e-20);
        assert_eq!(out.magnon, Complex64::new(0.0, 0.0));
        assert_eq!(out.optical, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn critical_coupling_nulls_reflection_on_resonance() {
        let mut cfg = resonant_config(Process::AntiStokes);
        cfg.microwave.kappa_ext = angular(1.5e6);
        cfg.microwave.gamma_int = angular(1.5e6);
        cfg.g_ma = 0.0;
        let s11 = reflection_s11(cfg.microwave.omega, &cfg).unwrap();
        assert!(s11.norm() < 1e-12);
    }

    #[test]
    fn far_detuned_probe_reflects_fully() {
        let mut cfg = resonant_config(Process::AntiStokes);
        cfg.g_ma = 0.0;
        let s11 = reflection_s11(cfg.microwave.omega + angular(500e9), &cfg).unwrap();
        assert!((s11 - Complex64::new(-1.0, 0.0)).norm() < 1e-4);
    }

    #[test]
    fn strong_coupling_splits_reflection_into_two_dips() {
        let mut cfg = resonant_config(Process::AntiStokes);
        cfg.g_mb = 0.0;
        cfg.g_ma = angular(20e6);
        // dense |S11| scan across +/- 60 MHz
        let n = 4801;
        let lo = cfg.microwave.omega - angular(60e6);
        let hi = cfg.microwave.omega + angular(60e6);
        let mags: Vec<f64> = (0..n)
            .map(|i| {
                let w = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                reflection_s11(w, &cfg).unwrap().norm()
            })
            .collect();
        let mut minima = Vec::new();
        for i in 1..n - 1 {
            if mags[i] < mags[i - 1] && mags[i] <= mags[i + 1] {
                minima.push(i);
            }
        }
        assert_eq!(minima.len(), 2, "expected exactly two polariton dips");
        let step = (hi - lo) / (n - 1) as f64;
        let split = (minima[1] - minima[0]) as f64 * step;
        // dips sit at omega_a +/- g_ma for linewidths << g_ma
        assert!((split - 2.0 * cfg.g_ma).abs() < 2.0 * step + angular(0.2e6));
    }

    #[test]
    fn solver_matches_closed_form_at_resonance() {
        let cfg = resonant_config(Process::AntiStokes);
        let eta = eta_antistokes(cfg.magnon.omega, &cfg).unwrap();
        let out =
            steady_state_solve(cfg.magnon.omega, &cfg, Drive::microwave_unit()).unwrap();
        assert!(rel_err(out.optical_out.norm_sqr(), eta) < 1e-10);
    }

    #[test]
    fn singular_steady_state_is_rejected() {
        // Stokes cancellation makes the 3x3 system itself singular. The
        // optical resonance is kept at a GHz-scale value: at 193 THz the
        // rounding of pump_omega alone detunes the sideband by ~0.1 rad/s,
        // enough to regularize the intended cancellation.
        let mut cfg = resonant_config(Process::Stokes);
        cfg.optical.omega = angular(12e9);
        cfg.g_ma = 0.0;
        let half_b = cfg.optical.half_linewidth();
        let half_m = 0.5 * cfg.magnon.gamma;
        cfg.g_mb = (half_b * half_m).sqrt();
        cfg.pin_triple_resonance();
        match steady_state_solve(cfg.magnon.omega, &cfg, Drive::microwave_unit()) {
            Err(Error::SingularSystem { .. }) | Err(Error::StokesUnstable { .. }) => {}
            other => panic!("expected a singularity error, got {other:?}"),
        }
    }

    #[test]
    fn cavity_figures_match_sphere_resonator() {
        let optical =
            OscillatorParams::new(angular(193.41e12), angular(6.56e6), angular(25.14e6));
        let figs = cavity_figures(5.4936e9, &optical, 1550e-9).unwrap();
        assert!(rel_err(figs.quality, 6.101_403_4395e6) < 1e-8);
        assert!(rel_err(figs.finesse, 173.3) < 1e-3);
        // linear scalings
        let figs2 = cavity_figures(2.0 * 5.4936e9, &optical, 1550e-9).unwrap();
        assert!(rel_err(figs2.finesse, 2.0 * figs.finesse) < 1e-12);
    }

    #[test]
    fn photon_flux_matches_frozen_value() {
        let flux = photon_flux(1e-6, angular(6e9)).unwrap();
        assert!(rel_err(flux, 2.515_316_967_61e17) < 1e-10);
        assert_eq!(photon_flux(0.0, angular(6e9)).unwrap(), 0.0);
        assert!(photon_flux(-1e-6, angular(6e9)).is_err());
        assert!(photon_flux(1e-6, 0.0).is_err());
    }

    #[test]
    fn config_validation_catches_bad_inputs() {
        let mut cfg = resonant_config(Process::AntiStokes);
        cfg.magnon.gamma = 0.0;
        assert!(cfg.validate().is_err());

        let mut cfg = resonant_config(Process::AntiStokes);
        cfg.microwave.kappa_ext = 0.0;
        cfg.microwave.gamma_int = 0.0;
        assert!(matches!(cfg.validate(), Err(Error::ZeroLinewidth(_))));

        let mut cfg = resonant_config(Process::AntiStokes);
        cfg.g_ma = -1.0;
        assert!(cfg.validate().is_err());

        let mut cfg = resonant_config(Process::AntiStokes);
        cfg.g_mb_single = Some(angular(7.0));
        cfg.pump_amplitude = Some(100.0);
        assert!(cfg.validate().is_err()); // 7 Hz * 100 != 1 kHz
        cfg.g_mb = angular(7.0) * 100.0;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn non_finite_probe_is_rejected() {
        let cfg = resonant_config(Process::AntiStokes);
        assert!(matches!(
            eta_antistokes(f64::NAN, &cfg),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            steady_state_solve(f64::INFINITY, &cfg, Drive::microwave_unit()),
            Err(Error::NonFinite(_))
        ));
    }
}
