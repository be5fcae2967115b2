//! Parameter sweeps built on the steady-state solver: 2-D field/frequency
//! maps with a catalog of magnon modes, peak tracking across a free-
//! spectral-range scan, and small single-purpose optimizers for port
//! matching and triple-resonance placement.
//!
//! Determinism contract: every map and scan in this module is a pure
//! function of its inputs. Cells are computed independently and written by
//! index, so results are identical (bit for bit) regardless of thread
//! count.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::coupled_mode::{
    chi_b_pumped_inv, response_inv, steady_state_solve, Drive, Process, TransducerConfig,
};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::magnetostatics::{
    dispersion_frequency, field_for_frequency, MagnetostaticMode, MaterialGeometry, ModeFamily,
};
use crate::minimize::{golden_max, nelder_mead, SimplexOptions};
use crate::units::{angular, cycles};

/// One linearly spaced sweep axis. Names travel into artifact headers, so
/// they must stay free of commas and line breaks.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl SweepAxis {
    pub fn new(name: &str, start: f64, stop: f64, points: usize) -> Result<Self> {
        if name.is_empty() || name.contains(',') || name.contains('\n') || name.contains('\r') {
            return Err(Error::InvalidParameter(format!(
                "axis name must be non-empty and free of commas/newlines, got {name:?}"
            )));
        }
        if !start.is_finite() || !stop.is_finite() {
            return Err(Error::NonFinite("sweep axis"));
        }
        if points < 2 {
            return Err(Error::InvalidParameter(format!(
                "axis {name} needs at least 2 points, got {points}"
            )));
        }
        if stop <= start {
            return Err(Error::InvalidParameter(format!(
                "axis {name} needs stop > start, got [{start:.6e}, {stop:.6e}]"
            )));
        }
        Ok(Self {
            name: name.to_owned(),
            start,
            stop,
            points,
        })
    }

    pub fn step(&self) -> f64 {
        (self.stop - self.start) / (self.points - 1) as f64
    }

    pub fn value(&self, i: usize) -> f64 {
        self.start + self.step() * i as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.value(i)).collect()
    }

    /// Grid index closest to `v`, clamped to the axis.
    pub fn nearest_index(&self, v: f64) -> usize {
        let raw = (v - self.start) / self.step();
        raw.round().clamp(0.0, (self.points - 1) as f64) as usize
    }
}

/// What a 2-D map holds per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    /// Complex microwave reflection S11.
    Reflection,
    /// Photon-number conversion efficiency, anti-Stokes pump.
    ConversionAntiStokes,
    /// Photon-number conversion efficiency, Stokes pump.
    ConversionStokes,
}

impl MapKind {
    pub fn label(&self) -> &'static str {
        match self {
            MapKind::Reflection => "reflection",
            MapKind::ConversionAntiStokes => "conversion_anti_stokes",
            MapKind::ConversionStokes => "conversion_stokes",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapValues {
    Complex(Vec<Complex64>),
    Real(Vec<f64>),
}

impl MapValues {
    fn len(&self) -> usize {
        match self {
            MapValues::Complex(v) => v.len(),
            MapValues::Real(v) => v.len(),
        }
    }
}

/// Dense 2-D sweep result over (x = bias field in T, y = probe frequency
/// in Hz). Storage is row-major over y: `index(ix, iy) = iy * nx + ix`.
/// Cells whose solve failed are poisoned: `valid` is false and the stored
/// value is NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumMap {
    pub x_axis: SweepAxis,
    pub y_axis: SweepAxis,
    pub kind: MapKind,
    pub values: MapValues,
    pub valid: Vec<bool>,
}

impl SpectrumMap {
    /// Map of the right shape filled with zeros, all cells valid.
    pub fn zeros(x_axis: SweepAxis, y_axis: SweepAxis, kind: MapKind) -> Self {
        let n = x_axis.points * y_axis.points;
        let values = match kind {
            MapKind::Reflection => MapValues::Complex(vec![Complex64::new(0.0, 0.0); n]),
            _ => MapValues::Real(vec![0.0; n]),
        };
        SpectrumMap {
            x_axis,
            y_axis,
            kind,
            values,
            valid: vec![true; n],
        }
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.x_axis.points + ix
    }

    pub fn poisoned(&self) -> usize {
        self.valid.iter().filter(|v| !**v).count()
    }

    /// Bit-exact equality, NaN-safe: the determinism check used by tests
    /// and golden artifacts.
    pub fn bitwise_eq(&self, other: &Self) -> bool {
        if self.kind != other.kind
            || self.valid != other.valid
            || self.x_axis.points != other.x_axis.points
            || self.y_axis.points != other.y_axis.points
            || self.x_axis.name != other.x_axis.name
            || self.y_axis.name != other.y_axis.name
        {
            return false;
        }
        let axis_bits = |a: &SweepAxis, b: &SweepAxis| {
            a.start.to_bits() == b.start.to_bits() && a.stop.to_bits() == b.stop.to_bits()
        };
        if !axis_bits(&self.x_axis, &other.x_axis) || !axis_bits(&self.y_axis, &other.y_axis) {
            return false;
        }
        match (&self.values, &other.values) {
            (MapValues::Complex(a), MapValues::Complex(b)) => {
                a.len() == b.len()
                    && a.iter().zip(b).all(|(x, y)| {
                        x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()
                    })
            }
            (MapValues::Real(a), MapValues::Real(b)) => {
                a.len() == b.len()
                    && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            _ => false,
        }
    }
}

/// How the microwave coupling of each catalog mode scales relative to the
/// configured g_ma. The optomagnonic coupling is never scaled: it belongs
/// to the one active mode the pump addresses.
#[derive(Debug, Clone, PartialEq)]
pub enum CouplingProfile {
    /// Surface modes couple at full strength; volume modes fall off as
    /// 1/n1 with the standing-wave order.
    FamilyDefault,
    /// Every mode couples at full strength.
    Uniform,
    /// Explicit per-mode weights, one per catalog entry, in catalog order.
    Custom(Vec<f64>),
}

/// The magnon mode catalog entering a map: standing-wave modes of both
/// families, one of which (the `active` entry) carries the optomagnonic
/// coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    pub modes: Vec<MagnetostaticMode>,
    pub active: usize,
    pub profile: CouplingProfile,
}

impl ModeSet {
    /// Catalog with surface modes (1, 1..=mssw_max) and volume modes
    /// (1..=bvmsw_max, 1), in that order. `active` picks the mode that
    /// carries g_mb by family and propagation index.
    pub fn new(
        geom: &MaterialGeometry,
        mssw_max: u32,
        bvmsw_max: u32,
        active: (ModeFamily, u32),
        profile: CouplingProfile,
    ) -> Result<Self> {
        let mut modes = Vec::new();
        for n2 in 1..=mssw_max {
            modes.push(MagnetostaticMode::mssw(n2, geom)?);
        }
        for n1 in 1..=bvmsw_max {
            modes.push(MagnetostaticMode::bvmsw(n1, geom)?);
        }
        if modes.is_empty() {
            return Err(Error::InvalidParameter(
                "mode set needs at least one mode".into(),
            ));
        }
        let active_idx = modes
            .iter()
            .position(|m| {
                m.family == active.0
                    && match active.0 {
                        ModeFamily::Mssw => m.n2 == active.1,
                        ModeFamily::Bvmsw => m.n1 == active.1,
                    }
            })
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "active mode {}({}) is not in the catalog",
                    active.0.label(),
                    active.1
                ))
            })?;
        let set = Self {
            modes,
            active: active_idx,
            profile,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::InvalidParameter(
                "mode set needs at least one mode".into(),
            ));
        }
        if self.active >= self.modes.len() {
            return Err(Error::InvalidParameter(format!(
                "active index {} out of range for {} modes",
                self.active,
                self.modes.len()
            )));
        }
        if let CouplingProfile::Custom(w) = &self.profile {
            if w.len() != self.modes.len() {
                return Err(Error::InvalidParameter(format!(
                    "custom profile has {} weights for {} modes",
                    w.len(),
                    self.modes.len()
                )));
            }
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::InvalidParameter(
                    "profile weights must be finite and non-negative".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn weight(&self, idx: usize) -> f64 {
        match &self.profile {
            CouplingProfile::FamilyDefault => match self.modes[idx].family {
                ModeFamily::Mssw => 1.0,
                ModeFamily::Bvmsw => 1.0 / self.modes[idx].n1 as f64,
            },
            CouplingProfile::Uniform => 1.0,
            CouplingProfile::Custom(w) => w[idx],
        }
    }

    /// Resolves every mode at bias field `h0` into a solver channel. All
    /// channels share the configured magnon linewidth; the profile scales
    /// their microwave coupling and only the active mode keeps g_mb.
    pub fn channels(
        &self,
        h0: f64,
        geom: &MaterialGeometry,
        cfg: &TransducerConfig,
    ) -> Result<Vec<MagnonChannel>> {
        self.validate()?;
        let mut out = Vec::with_capacity(self.modes.len());
        for (idx, mode) in self.modes.iter().enumerate() {
            let omega = dispersion_frequency(mode.family, mode.k, h0, geom)?;
            out.push(MagnonChannel {
                omega,
                gamma: cfg.magnon.gamma,
                g_ma: cfg.g_ma * self.weight(idx),
                g_mb: if idx == self.active { cfg.g_mb } else { 0.0 },
            });
        }
        Ok(out)
    }
}

/// One magnon mode as the solver sees it: resonance, linewidth, and its
/// two couplings. All angular (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnonChannel {
    pub omega: f64,
    pub gamma: f64,
    pub g_ma: f64,
    pub g_mb: f64,
}

impl MagnonChannel {
    fn validate(&self) -> Result<()> {
        for v in [self.omega, self.gamma, self.g_ma, self.g_mb] {
            if !v.is_finite() {
                return Err(Error::NonFinite("magnon channel"));
            }
        }
        if self.omega <= 0.0 || self.gamma <= 0.0 {
            return Err(Error::InvalidParameter(
                "magnon channel needs positive frequency and linewidth".into(),
            ));
        }
        if self.g_ma < 0.0 || self.g_mb < 0.0 {
            return Err(Error::InvalidParameter(
                "channel couplings must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Steady state of the chain with several magnon modes in parallel. Mode
/// layout is [a, m_1 .. m_N, b], so with a single channel matching the
/// config this reproduces [`steady_state_solve`] bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct MultimodeAmplitudes {
    pub microwave: Complex64,
    pub magnons: Vec<Complex64>,
    pub optical: Complex64,
    pub microwave_out: Complex64,
    pub optical_out: Complex64,
}

pub fn multimode_steady_state(
    probe_omega: f64,
    cfg: &TransducerConfig,
    channels: &[MagnonChannel],
    drive: Drive,
) -> Result<MultimodeAmplitudes> {
    cfg.validate()?;
    if !probe_omega.is_finite() {
        return Err(Error::NonFinite("probe_omega"));
    }
    if channels.is_empty() {
        return Err(Error::InvalidParameter(
            "multimode solve needs at least one magnon channel".into(),
        ));
    }
    for ch in channels {
        ch.validate()?;
    }

    let n = channels.len();
    let dim = n + 2;
    let i = Complex64::new(0.0, 1.0);
    let mut m = CMatrix::zeros(dim);
    m.set(
        0,
        0,
        response_inv(cfg.microwave.half_linewidth(), probe_omega, cfg.microwave.omega),
    );
    let sideband_sign = match cfg.process {
        Process::AntiStokes => 1.0,
        Process::Stokes => -1.0,
    };
    for (j, ch) in channels.iter().enumerate() {
        let r = j + 1;
        m.set(0, r, i * ch.g_ma);
        m.set(r, 0, i * ch.g_ma);
        m.set(r, r, response_inv(0.5 * ch.gamma, probe_omega, ch.omega));
        m.set(r, dim - 1, i * ch.g_mb);
        m.set(dim - 1, r, sideband_sign * i * ch.g_mb);
    }
    m.set(dim - 1, dim - 1, chi_b_pumped_inv(probe_omega, cfg));

    let sqrt_ka = cfg.microwave.kappa_ext.sqrt();
    let sqrt_kb = cfg.optical.kappa_ext.sqrt();
    let mut rhs = vec![Complex64::new(0.0, 0.0); dim];
    rhs[0] = sqrt_ka * drive.a_in;
    rhs[dim - 1] = sqrt_kb * drive.b_in;

    let x = linalg::solve_checked(&m, &rhs)?;
    Ok(MultimodeAmplitudes {
        microwave: x[0],
        magnons: x[1..=n].to_vec(),
        optical: x[dim - 1],
        microwave_out: sqrt_ka * x[0] - drive.a_in,
        optical_out: sqrt_kb * x[dim - 1] - drive.b_in,
    })
}

/// One cell of a would-be map, for spot checks against full sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapSample {
    Reflection(Complex64),
    Conversion(f64),
}

fn check_kind_process(kind: MapKind, cfg: &TransducerConfig) -> Result<()> {
    let ok = match kind {
        MapKind::Reflection => true,
        MapKind::ConversionAntiStokes => cfg.process == Process::AntiStokes,
        MapKind::ConversionStokes => cfg.process == Process::Stokes,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "map kind {} does not match the configured pump process",
            kind.label()
        )))
    }
}

pub fn map_cell(
    cfg: &TransducerConfig,
    geom: &MaterialGeometry,
    set: &ModeSet,
    kind: MapKind,
    field_t: f64,
    probe_hz: f64,
) -> Result<MapSample> {
    check_kind_process(kind, cfg)?;
    let channels = set.channels(field_t, geom, cfg)?;
    let out = multimode_steady_state(angular(probe_hz), cfg, &channels, Drive::microwave_unit())?;
    Ok(match kind {
        MapKind::Reflection => MapSample::Reflection(out.microwave_out),
        _ => MapSample::Conversion(out.optical_out.norm_sqr()),
    })
}

/// Dense map over bias field (x, tesla) and probe frequency (y, Hz).
/// Columns run in parallel; failed cells are poisoned rather than fatal.
pub fn map_2d(
    cfg: &TransducerConfig,
    geom: &MaterialGeometry,
    set: &ModeSet,
    kind: MapKind,
    x_axis: SweepAxis,
    y_axis: SweepAxis,
) -> Result<SpectrumMap> {
    cfg.validate()?;
    geom.validate()?;
    set.validate()?;
    check_kind_process(kind, cfg)?;

    let nx = x_axis.points;
    let ny = y_axis.points;
    let probe_omegas: Vec<f64> = y_axis.values().iter().map(|&f| angular(f)).collect();

    // Each column resolves its channels once, then solves ny cells.
    let columns: Vec<Vec<(Complex64, bool)>> = (0..nx)
        .into_par_iter()
        .map(|ix| {
            let h0 = x_axis.value(ix);
            let channels = match set.channels(h0, geom, cfg) {
                Ok(c) => c,
                Err(_) => {
                    return vec![(Complex64::new(f64::NAN, f64::NAN), false); ny];
                }
            };
            probe_omegas
                .iter()
                .map(|&w| {
                    match multimode_steady_state(w, cfg, &channels, Drive::microwave_unit()) {
                        Ok(out) => match kind {
                            MapKind::Reflection => (out.microwave_out, true),
                            _ => (
                                Complex64::new(out.optical_out.norm_sqr(), 0.0),
                                true,
                            ),
                        },
                        Err(_) => (Complex64::new(f64::NAN, f64::NAN), false),
                    }
                })
                .collect()
        })
        .collect();

    let mut valid = vec![true; nx * ny];
    let values = match kind {
        MapKind::Reflection => {
            let mut v = vec![Complex64::new(0.0, 0.0); nx * ny];
            for (ix, col) in columns.iter().enumerate() {
                for (iy, (c, ok)) in col.iter().enumerate() {
                    v[iy * nx + ix] = *c;
                    valid[iy * nx + ix] = *ok;
                }
            }
            MapValues::Complex(v)
        }
        _ => {
            let mut v = vec![0.0; nx * ny];
            for (ix, col) in columns.iter().enumerate() {
                for (iy, (c, ok)) in col.iter().enumerate() {
                    v[iy * nx + ix] = c.re;
                    valid[iy * nx + ix] = *ok;
                }
            }
            MapValues::Real(v)
        }
    };

    let map = SpectrumMap {
        x_axis,
        y_axis,
        kind,
        values,
        valid,
    };
    debug_assert_eq!(map.values.len(), map.valid.len());
    Ok(map)
}

/// Location and height of the conversion maximum over probe frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConversionPeak {
    /// Probe frequency of the maximum, rad/s.
    pub omega: f64,
    pub eta: f64,
}

/// Finds the probe frequency maximizing |b_out|^2 for the configured pump.
/// The search brackets the three places a maximum can live: the two
/// polariton branches of the a-m doublet and the center of the optical
/// sideband filter, then refines the best bracket by golden section. The
/// pump detuning is honored as configured, so the optimum is free to sit
/// away from the bare cavity.
pub fn peak_conversion(cfg: &TransducerConfig) -> Result<ConversionPeak> {
    cfg.validate()?;
    let wa = cfg.microwave.omega;
    let wm = cfg.magnon.omega;
    let mid = 0.5 * (wa + wm);
    let half = (0.25 * (wa - wm) * (wa - wm) + cfg.g_ma * cfg.g_ma).sqrt();
    let filter_center = match cfg.process {
        Process::AntiStokes => cfg.delta_b(),
        Process::Stokes => -cfg.delta_b(),
    };
    let candidates = [mid - half, mid + half, filter_center];
    let half_width = 5.0
        * (cfg.microwave.total_linewidth() + cfg.magnon.gamma + cfg.optical.total_linewidth());

    let mut last_err: Option<Error> = None;
    let mut eval = |w: f64| -> f64 {
        if w <= 0.0 {
            return f64::NEG_INFINITY;
        }
        match steady_state_solve(w, cfg, Drive::microwave_unit()) {
            Ok(out) => out.optical_out.norm_sqr(),
            Err(e) => {
                last_err = Some(e);
                f64::NEG_INFINITY
            }
        }
    };

    const COARSE: usize = 33;
    let mut best: Option<(f64, f64, f64, f64)> = None; // (x, f, bracket_lo, bracket_hi)
    for &c in &candidates {
        let lo = c - half_width;
        let hi = c + half_width;
        let step = (hi - lo) / (COARSE - 1) as f64;
        let fs: Vec<f64> = (0..COARSE).map(|i| eval(lo + step * i as f64)).collect();
        for (i, &f) in fs.iter().enumerate() {
            if f.is_finite() && best.map_or(true, |(_, fb, _, _)| f > fb) {
                let x = lo + step * i as f64;
                let b_lo = if i == 0 { x } else { x - step };
                let b_hi = if i == COARSE - 1 { x } else { x + step };
                best = Some((x, f, b_lo, b_hi));
            }
        }
    }

    let Some((coarse_x, coarse_f, b_lo, b_hi)) = best else {
        drop(eval);
        return Err(last_err
            .unwrap_or_else(|| Error::InvalidParameter("conversion is nowhere finite".into())));
    };
    let (x, f) = golden_max(&mut eval, b_lo, b_hi, 1e-11, 200);
    if f >= coarse_f {
        Ok(ConversionPeak { omega: x, eta: f })
    } else {
        Ok(ConversionPeak {
            omega: coarse_x,
            eta: coarse_f,
        })
    }
}

/// Full width of `samples` (sorted by x) at half the peak value, by linear
/// interpolation outward from the argmax. `None` when either crossing
/// falls outside the sampled range.
pub fn half_max_width(samples: &[(f64, f64)]) -> Option<f64> {
    if samples.len() < 3 {
        return None;
    }
    let (imax, &(_, ymax)) = samples
        .iter()
        .enumerate()
        .filter(|(_, (_, y))| y.is_finite())
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))?;
    if !(ymax > 0.0) {
        return None;
    }
    let half = 0.5 * ymax;

    let cross = |a: (f64, f64), b: (f64, f64)| -> f64 {
        // linear interpolation of the half crossing between two samples
        a.0 + (half - a.1) * (b.0 - a.0) / (b.1 - a.1)
    };

    let mut left = None;
    for i in (1..=imax).rev() {
        let (p, q) = (samples[i - 1], samples[i]);
        if p.1.is_finite() && q.1.is_finite() && p.1 < half && q.1 >= half {
            left = Some(cross(p, q));
            break;
        }
    }
    let mut right = None;
    for i in imax..samples.len() - 1 {
        let (p, q) = (samples[i], samples[i + 1]);
        if p.1.is_finite() && q.1.is_finite() && p.1 >= half && q.1 < half {
            right = Some(cross(q, p));
            break;
        }
    }
    match (left, right) {
        (Some(l), Some(r)) if r > l => Some(r - l),
        _ => None,
    }
}

/// Why a scan sample carries no efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFlag {
    Ok,
    /// The requested magnon frequency is unreachable at any field in the
    /// solver bracket.
    OutOfBand,
    /// The Stokes denominator collapsed at this sample.
    Unstable,
}

/// One point of a 1-D scan: the swept value, the conversion maximum over
/// probe frequency, and where that maximum sits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSample {
    pub value: f64,
    pub peak_efficiency: f64,
    pub peak_freq_hz: f64,
    pub flag: SampleFlag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    /// Name of the swept parameter, comma-free.
    pub parameter: String,
    pub samples: Vec<ScanSample>,
    /// Full width at half maximum of the efficiency envelope, Hz, when
    /// both crossings are bracketed by healthy samples.
    pub bandwidth_3db_hz: Option<f64>,
}

/// Scans the optical free spectral range. At each FSR value the magnon is
/// retuned to match it (the scattered sideband must land one FSR from the
/// pump), the bias field realized by inverting the mode's dispersion, and
/// the pump repinned to triple resonance; the sample records the best
/// conversion over probe frequency. FSR values whose magnon frequency no
/// field can reach are flagged rather than fatal.
pub fn fsr_scan(
    cfg: &TransducerConfig,
    geom: &MaterialGeometry,
    mode: &MagnetostaticMode,
    fsr_axis_hz: &SweepAxis,
) -> Result<ScanResult> {
    cfg.validate()?;
    geom.validate()?;
    let mut samples = Vec::with_capacity(fsr_axis_hz.points);
    for fsr in fsr_axis_hz.values() {
        let target = angular(fsr);
        match field_for_frequency(mode.family, mode.k, target, geom) {
            Ok(_h0) => {}
            Err(Error::OutOfBand { .. }) => {
                samples.push(ScanSample {
                    value: fsr,
                    peak_efficiency: f64::NAN,
                    peak_freq_hz: f64::NAN,
                    flag: SampleFlag::OutOfBand,
                });
                continue;
            }
            Err(e) => return Err(e),
        }
        let mut point = cfg.clone();
        point.magnon.omega = target;
        point.pin_triple_resonance();
        match peak_conversion(&point) {
            Ok(peak) => samples.push(ScanSample {
                value: fsr,
                peak_efficiency: peak.eta,
                peak_freq_hz: cycles(peak.omega),
                flag: SampleFlag::Ok,
            }),
            Err(Error::StokesUnstable { .. }) | Err(Error::SingularSystem { .. }) => {
                samples.push(ScanSample {
                    value: fsr,
                    peak_efficiency: f64::NAN,
                    peak_freq_hz: f64::NAN,
                    flag: SampleFlag::Unstable,
                });
            }
            Err(e) => return Err(e),
        }
    }
    let healthy: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.flag == SampleFlag::Ok)
        .map(|s| (s.value, s.peak_efficiency))
        .collect();
    Ok(ScanResult {
        parameter: fsr_axis_hz.name.clone(),
        bandwidth_3db_hz: half_max_width(&healthy),
        samples,
    })
}

/// Result of the microwave port-matching sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaOptimum {
    pub best_kappa: f64,
    pub best_eta: f64,
    /// The sampled (kappa_a, eta) curve, log-spaced.
    pub curve: Vec<(f64, f64)>,
    /// Whether the sampled curve has a single interior maximum.
    pub unimodal: bool,
}

/// Sweeps the microwave external coupling over [lo, hi] (log-spaced) at
/// the on-resonance probe, then polishes the best bracket by golden
/// section. Internal losses and couplings stay fixed: this traces the
/// impedance-matching trade-off of the input port alone.
pub fn optimize_kappa_a(
    cfg: &TransducerConfig,
    lo: f64,
    hi: f64,
    points: usize,
) -> Result<KappaOptimum> {
    cfg.validate()?;
    if !(lo > 0.0) || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "kappa bounds must be finite with 0 < lo < hi, got [{lo:.6e}, {hi:.6e}]"
        )));
    }
    if points < 5 {
        return Err(Error::InvalidParameter(
            "kappa sweep needs at least 5 points".into(),
        ));
    }
    let probe = cfg.magnon.omega;
    let eval = |kappa: f64| -> f64 {
        let mut c = cfg.clone();
        c.microwave.kappa_ext = kappa;
        match steady_state_solve(probe, &c, Drive::microwave_unit()) {
            Ok(out) => out.optical_out.norm_sqr(),
            Err(_) => f64::NAN,
        }
    };

    let (ulo, uhi) = (lo.ln(), hi.ln());
    let du = (uhi - ulo) / (points - 1) as f64;
    let curve: Vec<(f64, f64)> = (0..points)
        .map(|i| {
            let k = (ulo + du * i as f64).exp();
            (k, eval(k))
        })
        .collect();

    let imax = curve
        .iter()
        .enumerate()
        .filter(|(_, (_, e))| e.is_finite())
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::InvalidParameter("kappa sweep produced no finite samples".into()))?;

    let b_lo = ulo + du * imax.saturating_sub(1) as f64;
    let b_hi = ulo + du * (imax + 1).min(points - 1) as f64;
    let (u_best, f_best) = golden_max(|u: f64| eval(u.exp()), b_lo, b_hi, 1e-12, 300);
    let (best_kappa, best_eta) = if f_best >= curve[imax].1 {
        (u_best.exp(), f_best)
    } else {
        curve[imax]
    };

    // peak count with plateau tolerance: rising/falling state machine
    let mut peaks = 0usize;
    let mut rising = false;
    for w in curve.windows(2) {
        let (a, b) = (w[0].1, w[1].1);
        let (a, b) = (
            if a.is_finite() { a } else { f64::NEG_INFINITY },
            if b.is_finite() { b } else { f64::NEG_INFINITY },
        );
        if b > a {
            rising = true;
        } else if b < a {
            if rising {
                peaks += 1;
            }
            rising = false;
        }
    }
    if rising {
        peaks += 1; // still climbing at the right edge
    }

    Ok(KappaOptimum {
        best_kappa,
        best_eta,
        curve,
        unimodal: peaks <= 1,
    })
}

/// Sweeps the pump-enhanced optomagnonic coupling for both pump choices at
/// the on-resonance probe. Axis values are g_mb in rad/s. Returns the
/// anti-Stokes scan and the Stokes scan, in that order; Stokes samples
/// past the instability are flagged.
pub fn gmb_scan(cfg: &TransducerConfig, axis: &SweepAxis) -> Result<(ScanResult, ScanResult)> {
    cfg.validate()?;
    if axis.start < 0.0 {
        return Err(Error::InvalidParameter(
            "g_mb axis must be non-negative".into(),
        ));
    }
    let run = |process: Process| -> Result<ScanResult> {
        let mut samples = Vec::with_capacity(axis.points);
        for g in axis.values() {
            let mut c = cfg.clone();
            c.process = process;
            c.g_mb = g;
            c.g_mb_single = None;
            c.pump_amplitude = None;
            c.pin_triple_resonance();
            let probe = c.magnon.omega;
            match steady_state_solve(probe, &c, Drive::microwave_unit()) {
                Ok(out) => samples.push(ScanSample {
                    value: g,
                    peak_efficiency: out.optical_out.norm_sqr(),
                    peak_freq_hz: cycles(probe),
                    flag: SampleFlag::Ok,
                }),
                Err(Error::StokesUnstable { .. }) | Err(Error::SingularSystem { .. }) => {
                    samples.push(ScanSample {
                        value: g,
                        peak_efficiency: f64::NAN,
                        peak_freq_hz: f64::NAN,
                        flag: SampleFlag::Unstable,
                    })
                }
                Err(e) => return Err(e),
            }
        }
        Ok(ScanResult {
            parameter: axis.name.clone(),
            samples,
            bandwidth_3db_hz: None,
        })
    };
    Ok((run(Process::AntiStokes)?, run(Process::Stokes)?))
}

/// Joint optimum over optical free spectral range and bias field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleResonanceOptimum {
    pub best_fsr_hz: f64,
    pub best_field_t: f64,
    pub best_eta: f64,
    /// True when the optimum landed within 0.1% of a bound span, i.e. the
    /// real optimum likely lies outside the box.
    pub at_boundary: bool,
}

/// Maximizes peak conversion over (FSR, bias field). The FSR positions the
/// sideband filter (the pump sits one FSR from the optical resonance), the
/// field drags the magnon along its dispersion, and the probe is
/// re-optimized inside every evaluation, so triple resonance emerges from
/// the optimization instead of being imposed.
pub fn optimize_triple_resonance(
    cfg: &TransducerConfig,
    geom: &MaterialGeometry,
    mode: &MagnetostaticMode,
    fsr_bounds_hz: (f64, f64),
    field_bounds_t: (f64, f64),
) -> Result<TripleResonanceOptimum> {
    cfg.validate()?;
    geom.validate()?;
    let (flo, fhi) = fsr_bounds_hz;
    let (hlo, hhi) = field_bounds_t;
    if !(flo > 0.0 && fhi > flo) || !flo.is_finite() || !fhi.is_finite() {
        return Err(Error::InfeasibleBounds(format!(
            "FSR bounds must be finite with 0 < lo < hi, got [{flo:.6e}, {fhi:.6e}]"
        )));
    }
    if !(hlo > 0.0 && hhi > hlo) || !hlo.is_finite() || !hhi.is_finite() {
        return Err(Error::InfeasibleBounds(format!(
            "field bounds must be finite with 0 < lo < hi, got [{hlo:.6e}, {hhi:.6e}]"
        )));
    }

    let eval = |fsr_hz: f64, h0: f64| -> f64 {
        let omega_m = match dispersion_frequency(mode.family, mode.k, h0, geom) {
            Ok(w) => w,
            Err(_) => return f64::NEG_INFINITY,
        };
        let mut c = cfg.clone();
        c.magnon.omega = omega_m;
        let detuning = angular(fsr_hz);
        c.pump_omega = match c.process {
            Process::AntiStokes => c.optical.omega - detuning,
            Process::Stokes => c.optical.omega + detuning,
        };
        match peak_conversion(&c) {
            Ok(peak) => peak.eta,
            Err(_) => f64::NEG_INFINITY,
        }
    };

    let fmid = 0.5 * (flo + fhi);
    let hmid = 0.5 * (hlo + hhi);
    let probes = [
        (fmid, hmid),
        (flo, hlo),
        (flo, hhi),
        (fhi, hlo),
        (fhi, hhi),
    ];
    let seed = probes
        .iter()
        .map(|&(f, h)| (f, h, eval(f, h)))
        .max_by(|a, b| a.2.total_cmp(&b.2))
        .expect("probe list is non-empty");
    if !seed.2.is_finite() {
        return Err(Error::InfeasibleBounds(
            "no (FSR, field) probe inside the bounds yields a finite efficiency".into(),
        ));
    }

    // a slice at fixed field holds two polariton peaks, so bracket the
    // taller lobe with a coarse scan before the golden polish
    let line_max = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64| -> (f64, f64) {
        let n = 33usize;
        let step = (hi - lo) / (n - 1) as f64;
        let mut bi = 0usize;
        let mut bv = f64::NEG_INFINITY;
        for i in 0..n {
            let v = f(lo + step * i as f64);
            if v > bv {
                bv = v;
                bi = i;
            }
        }
        let blo = lo + step * bi.saturating_sub(1) as f64;
        let bhi = (lo + step * (bi + 1) as f64).min(hi);
        let (x, v) = golden_max(f, blo, bhi, 1e-12, 300);
        if v >= bv {
            (x, v)
        } else {
            (lo + step * bi as f64, bv)
        }
    };

    let mut best_fsr = seed.0;
    let mut best_h = seed.1;
    let mut best_eta = f64::NEG_INFINITY;
    // alternating line maximizations zigzag on tilted ridges, so converge
    // well past the point where successive sweeps stop moving
    for _ in 0..12 {
        let (f_star, _) = line_max(&|f: f64| eval(f, best_h), flo, fhi);
        best_fsr = f_star;
        let (h_star, e_star) = line_max(&|h: f64| eval(best_fsr, h), hlo, hhi);
        best_h = h_star;
        best_eta = e_star;
    }
    if !best_eta.is_finite() {
        return Err(Error::InfeasibleBounds(
            "optimization never reached a finite efficiency".into(),
        ));
    }

    // a simplex polish removes the transverse residual the alternating
    // sweeps leave on ridges that are not axis-aligned
    let polish = nelder_mead(
        |p: &[f64]| {
            let (f, h) = (p[0], p[1]);
            if f < flo || f > fhi || h < hlo || h > hhi {
                return f64::INFINITY;
            }
            -eval(f, h)
        },
        &[best_fsr, best_h],
        &[(fhi - flo) / 200.0, (hhi - hlo) / 200.0],
        SimplexOptions {
            max_evals: 500,
            rel_tol: 1e-12,
        },
    );
    if polish.value.is_finite() && -polish.value >= best_eta {
        best_fsr = polish.x[0];
        best_h = polish.x[1];
        best_eta = -polish.value;
    }

    let near = |x: f64, lo: f64, hi: f64| {
        let span = hi - lo;
        (x - lo).abs() < 1e-3 * span || (hi - x).abs() < 1e-3 * span
    };
    Ok(TripleResonanceOptimum {
        best_fsr_hz: best_fsr,
        best_field_t: best_h,
        best_eta,
        at_boundary: near(best_fsr, flo, fhi) || near(best_h, hlo, hhi),
    })
}
