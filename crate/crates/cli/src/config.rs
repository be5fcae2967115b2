//! Strict TOML config schema. Every dimensioned value is a string with a
//! mandatory unit suffix ("6.56 MHz", "150 mT", "0.5 mm"); bare numbers on
//! dimensioned keys are rejected with the key name and line. Unknown keys
//! are rejected. `schema_version = 1` is required at the top level.
//!
//! Frequencies and rates are ordinary (cycles-per-second) values in the
//! file and are converted to angular rad/s at this boundary; nothing past
//! it ever re-interprets units.

use std::path::PathBuf;

use serde::Deserialize;
use toml::Spanned;

use magopt::coupled_mode::{MagnonParams, OscillatorParams, Process, TransducerConfig};
use magopt::fit::{CouplingBranch, Scale};
use magopt::magnetostatics::{MaterialGeometry, ModeFamily, WavevectorModel};
use magopt::sweep::{CouplingProfile, SweepAxis};
use magopt::units::angular;

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: i64 = 1;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum RawQty {
    Text(String),
    Int(i64),
    Number(f64),
}

type Qty = Spanned<RawQty>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub schema_version: Spanned<i64>,
    pub transducer: Option<TransducerSection>,
    pub geometry: Option<GeometrySection>,
    pub simulate: Option<SimulateSection>,
    pub map2d: Option<Map2dSection>,
    pub fsrscan: Option<FsrScanSection>,
    pub fit: Option<FitSection>,
    pub optimize: Option<OptimizeSection>,
    pub dispersion: Option<DispersionSection>,
    pub report: Option<ReportSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransducerSection {
    pub omega_a: Qty,
    pub kappa_a: Qty,
    pub gamma_a: Qty,
    pub omega_m: Qty,
    pub gamma_m: Qty,
    pub omega_b: Qty,
    pub kappa_b: Qty,
    pub gamma_b: Qty,
    pub g_ma: Qty,
    pub g_mb: Qty,
    pub process: Spanned<String>,
    pub pump_omega: Option<Qty>,
    pub delta_b: Option<Qty>,
    pub g_mb_single: Option<Qty>,
    pub pump_amplitude: Option<Spanned<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub mu0_hm: Qty,
    pub d: Qty,
    pub l1: Qty,
    pub l2: Qty,
    pub gyro_over_2pi: Option<Qty>,
    pub k_model: Option<Spanned<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub probe_start: Qty,
    pub probe_stop: Qty,
    pub points: Spanned<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Map2dSection {
    pub kind: Spanned<String>,
    pub field_start: Qty,
    pub field_stop: Qty,
    pub field_points: Spanned<i64>,
    pub probe_start: Qty,
    pub probe_stop: Qty,
    pub probe_points: Spanned<i64>,
    pub mssw_max_index: Spanned<i64>,
    pub bvmsw_max_index: Spanned<i64>,
    pub active_family: Spanned<String>,
    pub active_index: Spanned<i64>,
    pub profile: Option<Spanned<String>>,
    pub profile_weights: Option<Spanned<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FsrScanSection {
    pub fsr_start: Qty,
    pub fsr_stop: Qty,
    pub points: Spanned<i64>,
    pub family: Spanned<String>,
    pub n1: Spanned<i64>,
    pub n2: Spanned<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub kind: Spanned<String>,
    pub input: Spanned<String>,
    pub scale: Option<Spanned<String>>,
    pub branch: Option<Spanned<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    pub target: Spanned<String>,
    pub kappa_lo: Option<Qty>,
    pub kappa_hi: Option<Qty>,
    pub points: Option<Spanned<i64>>,
    pub fsr_lo: Option<Qty>,
    pub fsr_hi: Option<Qty>,
    pub field_lo: Option<Qty>,
    pub field_hi: Option<Qty>,
    pub family: Option<Spanned<String>>,
    pub n1: Option<Spanned<i64>>,
    pub n2: Option<Spanned<i64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionSection {
    pub family: Spanned<String>,
    pub max_index: Spanned<i64>,
    pub bias_field: Qty,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    pub measured_eta: Spanned<f64>,
    pub measured_eta_int: Spanned<f64>,
    pub xi_b: Option<Spanned<f64>>,
    pub xi_a: Option<Spanned<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitFamily {
    Frequency,
    Field,
    Length,
    FrequencyPerField,
}

impl UnitFamily {
    fn table(self) -> &'static [(&'static str, f64)] {
        match self {
            UnitFamily::Frequency => &[
                ("Hz", 1.0),
                ("kHz", 1e3),
                ("MHz", 1e6),
                ("GHz", 1e9),
                ("THz", 1e12),
            ],
            UnitFamily::Field => &[("T", 1.0), ("mT", 1e-3), ("uT", 1e-6)],
            UnitFamily::Length => &[("m", 1.0), ("mm", 1e-3), ("um", 1e-6), ("nm", 1e-9)],
            UnitFamily::FrequencyPerField => &[
                ("Hz/T", 1.0),
                ("kHz/T", 1e3),
                ("MHz/T", 1e6),
                ("GHz/T", 1e9),
            ],
        }
    }

    fn example(self) -> &'static str {
        match self {
            UnitFamily::Frequency => "\"6.56 MHz\"",
            UnitFamily::Field => "\"150 mT\"",
            UnitFamily::Length => "\"0.5 mm\"",
            UnitFamily::FrequencyPerField => "\"28 GHz/T\"",
        }
    }

    fn allowed(self) -> String {
        self.table()
            .iter()
            .map(|(s, _)| *s)
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Sign constraint applied right at the unit boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Range {
    Positive,
    NonNegative,
    Any,
}

fn line_of(src: &str, byte: usize) -> usize {
    let cut = byte.min(src.len());
    src[..cut].bytes().filter(|b| *b == b'\n').count() + 1
}

fn config_err(key: &str, line: usize, msg: &str) -> CliError {
    CliError::Config(format!("key `{key}` (line {line}): {msg}"))
}

/// The unit-suffix boundary: dimensioned keys must be strings of the form
/// "<number> <suffix>". Returns the value in the family's base unit (Hz,
/// T, m, Hz/T).
fn quantity(q: &Qty, key: &str, family: UnitFamily, range: Range, src: &str) -> Result<f64> {
    let line = line_of(src, q.span().start);
    let text = match q.get_ref() {
        RawQty::Text(s) => s,
        RawQty::Int(_) | RawQty::Number(_) => {
            return Err(config_err(
                key,
                line,
                &format!(
                    "missing unit suffix; write a string like {} (allowed: {})",
                    family.example(),
                    family.allowed()
                ),
            ));
        }
    };
    let mut parts = text.split_whitespace();
    let (num, suffix) = match (parts.next(), parts.next(), parts.next()) {
        (Some(n), Some(s), None) => (n, s),
        _ => {
            return Err(config_err(
                key,
                line,
                &format!(
                    "expected \"<number> <unit>\" like {}, got {text:?}",
                    family.example()
                ),
            ));
        }
    };
    let value: f64 = num.parse().map_err(|_| {
        config_err(key, line, &format!("{num:?} is not a number"))
    })?;
    if !value.is_finite() {
        return Err(config_err(key, line, "value must be finite"));
    }
    let factor = family
        .table()
        .iter()
        .find(|(s, _)| *s == suffix)
        .map(|(_, f)| *f)
        .ok_or_else(|| {
            config_err(
                key,
                line,
                &format!(
                    "unknown unit {suffix:?} (allowed: {})",
                    family.allowed()
                ),
            )
        })?;
    let scaled = value * factor;
    match range {
        Range::Positive if scaled <= 0.0 => {
            Err(config_err(key, line, "value must be positive"))
        }
        Range::NonNegative if scaled < 0.0 => {
            Err(config_err(key, line, "value must be non-negative"))
        }
        _ => Ok(scaled),
    }
}

fn keyword<'a>(
    s: &'a Spanned<String>,
    key: &str,
    allowed: &[&str],
    src: &str,
) -> Result<&'a str> {
    let v = s.get_ref().as_str();
    if allowed.contains(&v) {
        Ok(v)
    } else {
        Err(config_err(
            key,
            line_of(src, s.span().start),
            &format!("expected one of {}, got {v:?}", allowed.join(" | ")),
        ))
    }
}

fn count(s: &Spanned<i64>, key: &str, min: i64, src: &str) -> Result<usize> {
    let v = *s.get_ref();
    if v < min {
        Err(config_err(
            key,
            line_of(src, s.span().start),
            &format!("must be at least {min}, got {v}"),
        ))
    } else {
        Ok(v as usize)
    }
}

fn plain_f64(s: &Spanned<f64>, key: &str, range: Range, src: &str) -> Result<f64> {
    let v = *s.get_ref();
    let line = line_of(src, s.span().start);
    if !v.is_finite() {
        return Err(config_err(key, line, "value must be finite"));
    }
    match range {
        Range::Positive if v <= 0.0 => Err(config_err(key, line, "value must be positive")),
        Range::NonNegative if v < 0.0 => {
            Err(config_err(key, line, "value must be non-negative"))
        }
        _ => Ok(v),
    }
}

fn axis(name: &str, start: f64, stop: f64, points: usize, key: &str) -> Result<SweepAxis> {
    if stop <= start {
        return Err(CliError::Config(format!(
            "{key}: stop must exceed start, got [{start}, {stop}]"
        )));
    }
    SweepAxis::new(name, start, stop, points)
        .map_err(|e| CliError::Config(format!("{key}: {e}")))
}

fn family_word(s: &Spanned<String>, key: &str, src: &str) -> Result<ModeFamily> {
    match keyword(s, key, &["mssw", "bvmsw"], src)? {
        "mssw" => Ok(ModeFamily::Mssw),
        _ => Ok(ModeFamily::Bvmsw),
    }
}

/// What a conversion map measures is fixed by the configured process; the
/// config only chooses between reflection and conversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKindWord {
    Reflection,
    Conversion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatePlan {
    pub axis: SweepAxis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Map2dPlan {
    pub kind: MapKindWord,
    pub field_axis: SweepAxis,
    pub probe_axis: SweepAxis,
    pub mssw_max: u32,
    pub bvmsw_max: u32,
    pub active: (ModeFamily, u32),
    pub profile: CouplingProfile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FsrScanPlan {
    pub axis: SweepAxis,
    pub family: ModeFamily,
    pub n1: u32,
    pub n2: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitPlan {
    Reflection {
        input: PathBuf,
        scale: Scale,
        branch: CouplingBranch,
    },
    Lorentzian {
        input: PathBuf,
        scale: Scale,
    },
    Crossing {
        input: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum OptimizePlan {
    KappaA {
        lo: f64,
        hi: f64,
        points: usize,
    },
    TripleResonance {
        fsr_lo_hz: f64,
        fsr_hi_hz: f64,
        field_lo_t: f64,
        field_hi_t: f64,
        family: ModeFamily,
        n1: u32,
        n2: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionPlan {
    /// `None` lists both families.
    pub family: Option<ModeFamily>,
    pub max_index: u32,
    pub bias_field_t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportPlan {
    pub measured_eta: f64,
    pub measured_eta_int: f64,
    pub xi_b: Option<f64>,
    pub xi_a: Option<f64>,
}

/// Parsed config plus the source text (kept for line numbers in errors).
#[derive(Debug)]
pub struct ConfigFile {
    pub raw: RawConfig,
    text: String,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text)
            .map_err(|e| CliError::Config(format!("{e}")))?;
        let v = *raw.schema_version.get_ref();
        if v != SCHEMA_VERSION {
            return Err(config_err(
                "schema_version",
                line_of(text, raw.schema_version.span().start),
                &format!("expected {SCHEMA_VERSION}, got {v}"),
            ));
        }
        Ok(Self {
            raw,
            text: text.to_string(),
        })
    }

    fn section<'a, T>(&self, s: &'a Option<T>, name: &str) -> Result<&'a T> {
        s.as_ref().ok_or_else(|| {
            CliError::Config(format!("missing required [{name}] section"))
        })
    }

    pub fn transducer(&self) -> Result<TransducerConfig> {
        let t = self.section(&self.raw.transducer, "transducer")?;
        let src = &self.text;
        let freq = |q: &Qty, key: &str, range: Range| -> Result<f64> {
            Ok(angular(quantity(q, key, UnitFamily::Frequency, range, src)?))
        };
        let omega_a = freq(&t.omega_a, "transducer.omega_a", Range::Positive)?;
        let kappa_a = freq(&t.kappa_a, "transducer.kappa_a", Range::NonNegative)?;
        let gamma_a = freq(&t.gamma_a, "transducer.gamma_a", Range::NonNegative)?;
        let omega_m = freq(&t.omega_m, "transducer.omega_m", Range::Positive)?;
        let gamma_m = freq(&t.gamma_m, "transducer.gamma_m", Range::Positive)?;
        let omega_b = freq(&t.omega_b, "transducer.omega_b", Range::Positive)?;
        let kappa_b = freq(&t.kappa_b, "transducer.kappa_b", Range::NonNegative)?;
        let gamma_b = freq(&t.gamma_b, "transducer.gamma_b", Range::NonNegative)?;
        let g_ma = freq(&t.g_ma, "transducer.g_ma", Range::NonNegative)?;
        let g_mb = freq(&t.g_mb, "transducer.g_mb", Range::NonNegative)?;
        let process = match keyword(
            &t.process,
            "transducer.process",
            &["anti_stokes", "stokes"],
            src,
        )? {
            "anti_stokes" => Process::AntiStokes,
            _ => Process::Stokes,
        };
        let pump_omega = match (&t.pump_omega, &t.delta_b) {
            (Some(p), None) => freq(p, "transducer.pump_omega", Range::Positive)?,
            (None, Some(d)) => {
                let delta = freq(d, "transducer.delta_b", Range::Any)?;
                omega_b - delta
            }
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "transducer: give exactly one of pump_omega or delta_b, not both"
                        .into(),
                ));
            }
            (None, None) => {
                return Err(CliError::Config(
                    "transducer: one of pump_omega or delta_b is required".into(),
                ));
            }
        };
        let g_mb_single = t
            .g_mb_single
            .as_ref()
            .map(|q| freq(q, "transducer.g_mb_single", Range::NonNegative))
            .transpose()?;
        let pump_amplitude = t
            .pump_amplitude
            .as_ref()
            .map(|s| plain_f64(s, "transducer.pump_amplitude", Range::NonNegative, src))
            .transpose()?;
        let cfg = TransducerConfig {
            microwave: OscillatorParams::new(omega_a, kappa_a, gamma_a),
            magnon: MagnonParams::new(omega_m, gamma_m),
            optical: OscillatorParams::new(omega_b, kappa_b, gamma_b),
            pump_omega,
            g_ma,
            g_mb,
            g_mb_single,
            pump_amplitude,
            process,
        };
        cfg.validate()
            .map_err(|e| CliError::Config(format!("transducer: {e}")))?;
        Ok(cfg)
    }

    pub fn geometry(&self) -> Result<MaterialGeometry> {
        let g = self.section(&self.raw.geometry, "geometry")?;
        let src = &self.text;
        let mut geom = MaterialGeometry::new(
            quantity(&g.mu0_hm, "geometry.mu0_hm", UnitFamily::Field, Range::Positive, src)?,
            quantity(&g.d, "geometry.d", UnitFamily::Length, Range::Positive, src)?,
            quantity(&g.l1, "geometry.l1", UnitFamily::Length, Range::Positive, src)?,
            quantity(&g.l2, "geometry.l2", UnitFamily::Length, Range::Positive, src)?,
        );
        if let Some(q) = &g.gyro_over_2pi {
            geom.gyro_over_2pi = quantity(
                q,
                "geometry.gyro_over_2pi",
                UnitFamily::FrequencyPerField,
                Range::Positive,
                src,
            )?;
        }
        if let Some(s) = &g.k_model {
            geom.k_model = match keyword(
                s,
                "geometry.k_model",
                &["propagation_axis", "magnitude"],
                src,
            )? {
                "propagation_axis" => WavevectorModel::PropagationAxis,
                _ => WavevectorModel::Magnitude,
            };
        }
        geom.validate()
            .map_err(|e| CliError::Config(format!("geometry: {e}")))?;
        Ok(geom)
    }

    pub fn simulate(&self) -> Result<SimulatePlan> {
        let s = self.section(&self.raw.simulate, "simulate")?;
        let src = &self.text;
        let start = quantity(
            &s.probe_start,
            "simulate.probe_start",
            UnitFamily::Frequency,
            Range::Positive,
            src,
        )?;
        let stop = quantity(
            &s.probe_stop,
            "simulate.probe_stop",
            UnitFamily::Frequency,
            Range::Positive,
            src,
        )?;
        let points = count(&s.points, "simulate.points", 2, src)?;
        Ok(SimulatePlan {
            axis: axis("probe_hz", start, stop, points, "simulate")?,
        })
    }

    pub fn map2d(&self) -> Result<Map2dPlan> {
        let m = self.section(&self.raw.map2d, "map2d")?;
        let src = &self.text;
        let kind = match keyword(&m.kind, "map2d.kind", &["reflection", "conversion"], src)? {
            "reflection" => MapKindWord::Reflection,
            _ => MapKindWord::Conversion,
        };
        let field_axis = axis(
            "field_t",
            quantity(&m.field_start, "map2d.field_start", UnitFamily::Field, Range::Positive, src)?,
            quantity(&m.field_stop, "map2d.field_stop", UnitFamily::Field, Range::Positive, src)?,
            count(&m.field_points, "map2d.field_points", 2, src)?,
            "map2d field axis",
        )?;
        let probe_axis = axis(
            "probe_hz",
            quantity(&m.probe_start, "map2d.probe_start", UnitFamily::Frequency, Range::Positive, src)?,
            quantity(&m.probe_stop, "map2d.probe_stop", UnitFamily::Frequency, Range::Positive, src)?,
            count(&m.probe_points, "map2d.probe_points", 2, src)?,
            "map2d probe axis",
        )?;
        let mssw_max = count(&m.mssw_max_index, "map2d.mssw_max_index", 0, src)? as u32;
        let bvmsw_max = count(&m.bvmsw_max_index, "map2d.bvmsw_max_index", 0, src)? as u32;
        let active_family = family_word(&m.active_family, "map2d.active_family", src)?;
        let active_index = count(&m.active_index, "map2d.active_index", 1, src)? as u32;
        let profile = match (&m.profile, &m.profile_weights) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "map2d: give profile or profile_weights, not both".into(),
                ));
            }
            (None, None) => CouplingProfile::FamilyDefault,
            (Some(p), None) => match keyword(
                p,
                "map2d.profile",
                &["family_default", "uniform"],
                src,
            )? {
                "family_default" => CouplingProfile::FamilyDefault,
                _ => CouplingProfile::Uniform,
            },
            (None, Some(w)) => {
                let weights = w.get_ref().clone();
                if weights.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(config_err(
                        "map2d.profile_weights",
                        line_of(src, w.span().start),
                        "weights must be finite and non-negative",
                    ));
                }
                CouplingProfile::Custom(weights)
            }
        };
        Ok(Map2dPlan {
            kind,
            field_axis,
            probe_axis,
            mssw_max,
            bvmsw_max,
            active: (active_family, active_index),
            profile,
        })
    }

    pub fn fsrscan(&self) -> Result<FsrScanPlan> {
        let f = self.section(&self.raw.fsrscan, "fsrscan")?;
        let src = &self.text;
        let axis = axis(
            "fsr_hz",
            quantity(&f.fsr_start, "fsrscan.fsr_start", UnitFamily::Frequency, Range::Positive, src)?,
            quantity(&f.fsr_stop, "fsrscan.fsr_stop", UnitFamily::Frequency, Range::Positive, src)?,
            count(&f.points, "fsrscan.points", 2, src)?,
            "fsrscan axis",
        )?;
        Ok(FsrScanPlan {
            axis,
            family: family_word(&f.family, "fsrscan.family", src)?,
            n1: count(&f.n1, "fsrscan.n1", 1, src)? as u32,
            n2: count(&f.n2, "fsrscan.n2", 1, src)? as u32,
        })
    }

    pub fn fit(&self) -> Result<FitPlan> {
        let f = self.section(&self.raw.fit, "fit")?;
        let src = &self.text;
        let input = PathBuf::from(f.input.get_ref());
        let scale = match &f.scale {
            None => Scale::Linear,
            Some(s) => match keyword(s, "fit.scale", &["linear", "db"], src)? {
                "linear" => Scale::Linear,
                _ => Scale::Decibel,
            },
        };
        let branch = match &f.branch {
            None => CouplingBranch::Overcoupled,
            Some(b) => match keyword(
                b,
                "fit.branch",
                &["overcoupled", "undercoupled"],
                src,
            )? {
                "overcoupled" => CouplingBranch::Overcoupled,
                _ => CouplingBranch::Undercoupled,
            },
        };
        match keyword(
            &f.kind,
            "fit.kind",
            &["reflection", "crossing", "lorentzian"],
            src,
        )? {
            "reflection" => Ok(FitPlan::Reflection {
                input,
                scale,
                branch,
            }),
            "lorentzian" => Ok(FitPlan::Lorentzian { input, scale }),
            _ => Ok(FitPlan::Crossing { input }),
        }
    }

    pub fn optimize(&self) -> Result<OptimizePlan> {
        let o = self.section(&self.raw.optimize, "optimize")?;
        let src = &self.text;
        let need = |q: &Option<Qty>, key: &str, family: UnitFamily| -> Result<f64> {
            let q = q.as_ref().ok_or_else(|| {
                CliError::Config(format!("optimize: key `{key}` is required for this target"))
            })?;
            quantity(q, key, family, Range::Positive, src)
        };
        match keyword(
            &o.target,
            "optimize.target",
            &["kappa_a", "triple_resonance"],
            src,
        )? {
            "kappa_a" => {
                let lo = angular(need(&o.kappa_lo, "optimize.kappa_lo", UnitFamily::Frequency)?);
                let hi = angular(need(&o.kappa_hi, "optimize.kappa_hi", UnitFamily::Frequency)?);
                let points = match &o.points {
                    Some(p) => count(p, "optimize.points", 5, src)?,
                    None => 61,
                };
                if hi <= lo {
                    return Err(CliError::Config(
                        "optimize: kappa_hi must exceed kappa_lo".into(),
                    ));
                }
                Ok(OptimizePlan::KappaA { lo, hi, points })
            }
            _ => {
                let fsr_lo_hz = need(&o.fsr_lo, "optimize.fsr_lo", UnitFamily::Frequency)?;
                let fsr_hi_hz = need(&o.fsr_hi, "optimize.fsr_hi", UnitFamily::Frequency)?;
                let field_lo_t = need(&o.field_lo, "optimize.field_lo", UnitFamily::Field)?;
                let field_hi_t = need(&o.field_hi, "optimize.field_hi", UnitFamily::Field)?;
                let family = match &o.family {
                    Some(f) => family_word(f, "optimize.family", src)?,
                    None => {
                        return Err(CliError::Config(
                            "optimize: key `optimize.family` is required for this target"
                                .into(),
                        ));
                    }
                };
                let n1 = match &o.n1 {
                    Some(n) => count(n, "optimize.n1", 1, src)? as u32,
                    None => 1,
                };
                let n2 = match &o.n2 {
                    Some(n) => count(n, "optimize.n2", 1, src)? as u32,
                    None => 1,
                };
                if fsr_hi_hz <= fsr_lo_hz || field_hi_t <= field_lo_t {
                    return Err(CliError::Config(
                        "optimize: bounds must satisfy lo < hi".into(),
                    ));
                }
                Ok(OptimizePlan::TripleResonance {
                    fsr_lo_hz,
                    fsr_hi_hz,
                    field_lo_t,
                    field_hi_t,
                    family,
                    n1,
                    n2,
                })
            }
        }
    }

    pub fn dispersion(&self) -> Result<DispersionPlan> {
        let d = self.section(&self.raw.dispersion, "dispersion")?;
        let src = &self.text;
        let family = match keyword(
            &d.family,
            "dispersion.family",
            &["mssw", "bvmsw", "both"],
            src,
        )? {
            "mssw" => Some(ModeFamily::Mssw),
            "bvmsw" => Some(ModeFamily::Bvmsw),
            _ => None,
        };
        Ok(DispersionPlan {
            family,
            max_index: count(&d.max_index, "dispersion.max_index", 1, src)? as u32,
            bias_field_t: quantity(
                &d.bias_field,
                "dispersion.bias_field",
                UnitFamily::Field,
                Range::Positive,
                src,
            )?,
        })
    }

    pub fn report(&self) -> Result<ReportPlan> {
        let r = self.section(&self.raw.report, "report")?;
        let src = &self.text;
        let xi_check = |v: f64, key: &str, s: &Spanned<f64>| -> Result<f64> {
            if v <= 0.0 || v > 1.0 {
                Err(config_err(
                    key,
                    line_of(src, s.span().start),
                    "extraction fraction must lie in (0, 1]",
                ))
            } else {
                Ok(v)
            }
        };
        let xi_b = match &r.xi_b {
            Some(s) => Some(xi_check(
                plain_f64(s, "report.xi_b", Range::Positive, src)?,
                "report.xi_b",
                s,
            )?),
            None => None,
        };
        let xi_a = match &r.xi_a {
            Some(s) => Some(xi_check(
                plain_f64(s, "report.xi_a", Range::Positive, src)?,
                "report.xi_a",
                s,
            )?),
            None => None,
        };
        Ok(ReportPlan {
            measured_eta: plain_f64(&r.measured_eta, "report.measured_eta", Range::Positive, src)?,
            measured_eta_int: plain_f64(
                &r.measured_eta_int,
                "report.measured_eta_int",
                Range::Positive,
                src,
            )?,
            xi_b,
            xi_a,
        })
    }

    /// Canonical text form: fixed key order, original value spellings.
    /// Reparsing the output resolves to the same plans as the original.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("schema_version = {}\n", self.raw.schema_version.get_ref()));
        let qty = |out: &mut String, key: &str, q: &Qty| {
            match q.get_ref() {
                RawQty::Text(s) => out.push_str(&format!("{key} = {s:?}\n")),
                RawQty::Int(v) => out.push_str(&format!("{key} = {v}\n")),
                RawQty::Number(v) => out.push_str(&format!("{key} = {v}\n")),
            };
        };
        let opt_qty = |out: &mut String, key: &str, q: &Option<Qty>| {
            if let Some(q) = q {
                qty(out, key, q);
            }
        };
        let word = |out: &mut String, key: &str, s: &Spanned<String>| {
            out.push_str(&format!("{key} = {:?}\n", s.get_ref()));
        };
        let opt_word = |out: &mut String, key: &str, s: &Option<Spanned<String>>| {
            if let Some(s) = s {
                word(out, key, s);
            }
        };
        let int = |out: &mut String, key: &str, s: &Spanned<i64>| {
            out.push_str(&format!("{key} = {}\n", s.get_ref()));
        };
        let opt_int = |out: &mut String, key: &str, s: &Option<Spanned<i64>>| {
            if let Some(s) = s {
                int(out, key, s);
            }
        };
        let num = |out: &mut String, key: &str, s: &Spanned<f64>| {
            // a bare integer-valued float must not re-parse as a TOML int
            let v = *s.get_ref();
            if v == v.trunc() && v.abs() < 1e15 {
                out.push_str(&format!("{key} = {v:.1}\n"));
            } else {
                out.push_str(&format!("{key} = {v}\n"));
            }
        };
        let opt_num = |out: &mut String, key: &str, s: &Option<Spanned<f64>>| {
            if let Some(s) = s {
                num(out, key, s);
            }
        };

        if let Some(t) = &self.raw.transducer {
            out.push_str("\n[transducer]\n");
            qty(&mut out, "omega_a", &t.omega_a);
            qty(&mut out, "kappa_a", &t.kappa_a);
            qty(&mut out, "gamma_a", &t.gamma_a);
            qty(&mut out, "omega_m", &t.omega_m);
            qty(&mut out, "gamma_m", &t.gamma_m);
            qty(&mut out, "omega_b", &t.omega_b);
            qty(&mut out, "kappa_b", &t.kappa_b);
            qty(&mut out, "gamma_b", &t.gamma_b);
            qty(&mut out, "g_ma", &t.g_ma);
            qty(&mut out, "g_mb", &t.g_mb);
            word(&mut out, "process", &t.process);
            opt_qty(&mut out, "pump_omega", &t.pump_omega);
            opt_qty(&mut out, "delta_b", &t.delta_b);
            opt_qty(&mut out, "g_mb_single", &t.g_mb_single);
            opt_num(&mut out, "pump_amplitude", &t.pump_amplitude);
        }
        if let Some(g) = &self.raw.geometry {
            out.push_str("\n[geometry]\n");
            qty(&mut out, "mu0_hm", &g.mu0_hm);
            qty(&mut out, "d", &g.d);
            qty(&mut out, "l1", &g.l1);
            qty(&mut out, "l2", &g.l2);
            opt_qty(&mut out, "gyro_over_2pi", &g.gyro_over_2pi);
            opt_word(&mut out, "k_model", &g.k_model);
        }
        if let Some(s) = &self.raw.simulate {
            out.push_str("\n[simulate]\n");
            qty(&mut out, "probe_start", &s.probe_start);
            qty(&mut out, "probe_stop", &s.probe_stop);
            int(&mut out, "points", &s.points);
        }
        if let Some(m) = &self.raw.map2d {
            out.push_str("\n[map2d]\n");
            word(&mut out, "kind", &m.kind);
            qty(&mut out, "field_start", &m.field_start);
            qty(&mut out, "field_stop", &m.field_stop);
            int(&mut out, "field_points", &m.field_points);
            qty(&mut out, "probe_start", &m.probe_start);
            qty(&mut out, "probe_stop", &m.probe_stop);
            int(&mut out, "probe_points", &m.probe_points);
            int(&mut out, "mssw_max_index", &m.mssw_max_index);
            int(&mut out, "bvmsw_max_index", &m.bvmsw_max_index);
            word(&mut out, "active_family", &m.active_family);
            int(&mut out, "active_index", &m.active_index);
            opt_word(&mut out, "profile", &m.profile);
            if let Some(w) = &m.profile_weights {
                let body = w
                    .get_ref()
                    .iter()
                    .map(|v| {
                        if *v == v.trunc() && v.abs() < 1e15 {
                            format!("{v:.1}")
                        } else {
                            format!("{v}")
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(", ");
                out.push_str(&format!("profile_weights = [{body}]\n"));
            }
        }
        if let Some(f) = &self.raw.fsrscan {
            out.push_str("\n[fsrscan]\n");
            qty(&mut out, "fsr_start", &f.fsr_start);
            qty(&mut out, "fsr_stop", &f.fsr_stop);
            int(&mut out, "points", &f.points);
            word(&mut out, "family", &f.family);
            int(&mut out, "n1", &f.n1);
            int(&mut out, "n2", &f.n2);
        }
        if let Some(f) = &self.raw.fit {
            out.push_str("\n[fit]\n");
            word(&mut out, "kind", &f.kind);
            word(&mut out, "input", &f.input);
            opt_word(&mut out, "scale", &f.scale);
            opt_word(&mut out, "branch", &f.branch);
        }
        if let Some(o) = &self.raw.optimize {
            out.push_str("\n[optimize]\n");
            word(&mut out, "target", &o.target);
            opt_qty(&mut out, "kappa_lo", &o.kappa_lo);
            opt_qty(&mut out, "kappa_hi", &o.kappa_hi);
            opt_int(&mut out, "points", &o.points);
            opt_qty(&mut out, "fsr_lo", &o.fsr_lo);
            opt_qty(&mut out, "fsr_hi", &o.fsr_hi);
            opt_qty(&mut out, "field_lo", &o.field_lo);
            opt_qty(&mut out, "field_hi", &o.field_hi);
            opt_word(&mut out, "family", &o.family);
            opt_int(&mut out, "n1", &o.n1);
            opt_int(&mut out, "n2", &o.n2);
        }
        if let Some(d) = &self.raw.dispersion {
            out.push_str("\n[dispersion]\n");
            word(&mut out, "family", &d.family);
            int(&mut out, "max_index", &d.max_index);
            qty(&mut out, "bias_field", &d.bias_field);
        }
        if let Some(r) = &self.raw.report {
            out.push_str("\n[report]\n");
            num(&mut out, "measured_eta", &r.measured_eta);
            num(&mut out, "measured_eta_int", &r.measured_eta_int);
            opt_num(&mut out, "xi_b", &r.xi_b);
            opt_num(&mut out, "xi_a", &r.xi_a);
        }
        out
    }
}
