//! The seven subcommands. Each resolves its config section, runs the
//! model, and writes artifacts through [`Staging`] so failures leave the
//! output directory untouched. Data goes to files, progress to stderr.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use magopt::coupled_mode::{
    eta_antistokes, eta_internal, eta_stokes, implied_xi_a, reflection_s11, Process,
    TransducerConfig,
};
use magopt::fit::{
    fit_avoided_crossing, fit_reflection_resonance, lorentzian_fwhm_fit, reflection_model,
    extract_dips, FitResult, MeasuredTrace,
};
use magopt::magnetostatics::{mode_catalog, MagnetostaticMode, ModeFamily};
use magopt::sweep::{map_2d, optimize_kappa_a, optimize_triple_resonance, fsr_scan, MapKind,
    MapValues, ModeSet, SampleFlag, ScanResult};
use magopt::units::{angular, cycles};

use crate::artifacts::{cell, serialize_map, serialize_mask, parse_map, parse_trace, Staging};
use crate::config::{ConfigFile, FitPlan, MapKindWord, OptimizePlan};
use crate::error::{CliError, Result};

pub struct Ctx<'a> {
    pub config: &'a ConfigFile,
    pub out: &'a Path,
    pub quiet: bool,
}

impl Ctx<'_> {
    fn log(&self, msg: &str) {
        if !self.quiet {
            eprintln!("magopt: {msg}");
        }
    }

    fn read(&self, path: &Path) -> Result<String> {
        fs::read_to_string(path).map_err(|e| CliError::io(path, e))
    }
}

fn flag_word(flag: SampleFlag) -> &'static str {
    match flag {
        SampleFlag::Ok => "ok",
        SampleFlag::OutOfBand => "out_of_band",
        SampleFlag::Unstable => "unstable",
    }
}

/// Twin of `cfg` driving the opposite scattering process: the pump is
/// mirrored to the other side of the optical resonance so the sideband
/// detuning keeps its magnitude and flips sign.
fn mirrored_process(cfg: &TransducerConfig) -> TransducerConfig {
    let mut twin = cfg.clone();
    twin.process = match cfg.process {
        Process::AntiStokes => Process::Stokes,
        Process::Stokes => Process::AntiStokes,
    };
    twin.pump_omega = cfg.optical.omega + cfg.delta_b();
    twin
}

pub fn simulate(ctx: &Ctx) -> Result<Vec<PathBuf>> {
    let cfg = ctx.config.transducer()?;
    let plan = ctx.config.simulate()?;
    let twin = mirrored_process(&cfg);
    let (cfg_as, cfg_s) = match cfg.process {
        Process::AntiStokes => (&cfg, &twin),
        Process::Stokes => (&twin, &cfg),
    };
    let extraction_ok =
        cfg.microwave.extraction() > 0.0 && cfg.optical.extraction() > 0.0;
    let mut out = String::new();
    out.push_str("# magopt-simulate\n# schema_version = 1\n");
    let _ = writeln!(out, "# process = {}", match cfg.process {
        Process::AntiStokes => "anti_stokes",
        Process::Stokes => "stokes",
    });
    out.push_str("probe_hz,eta_anti_stokes,eta_stokes,eta_internal,s11_abs\n");
    for probe_hz in plan.axis.values() {
        let probe = angular(probe_hz);
        let e_as = eta_antistokes(probe, cfg_as)?;
        let e_s = match eta_stokes(probe, cfg_s) {
            Ok(v) => v,
            Err(magopt::Error::StokesUnstable { .. }) => f64::NAN,
            Err(e) => return Err(e.into()),
        };
        let own = match cfg.process {
            Process::AntiStokes => e_as,
            Process::Stokes => e_s,
        };
        let e_int = if extraction_ok && own.is_finite() {
            eta_internal(own, &cfg)?.eta_internal
        } else {
            f64::NAN
        };
        let s11 = match reflection_s11(probe, &cfg) {
            Ok(v) => v.norm(),
            Err(magopt::Error::StokesUnstable { .. }) => f64::NAN,
            Err(e) => return Err(e.into()),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            probe_hz,
            cell(e_as),
            cell(e_s),
            cell(e_int),
            cell(s11)
        );
    }
    let mut staging = Staging::new(ctx.out)?;
    staging.write("simulate.csv", &out)?;
    let done = staging.commit()?;
    ctx.log(&format!("simulate: {} probe points", plan.axis.points));
    Ok(done)
}

pub fn map2d(ctx: &Ctx) -> Result<Vec<PathBuf>> {
    let cfg = ctx.config.transducer()?;
    let geom = ctx.config.geometry()?;
    let plan = ctx.config.map2d()?;
    let kind = match plan.kind {
        MapKindWord::Reflection => MapKind::Reflection,
        MapKindWord::Conversion => match cfg.process {
            Process::AntiStokes => MapKind::ConversionAntiStokes,
            Process::Stokes => MapKind::ConversionStokes,
        },
    };
    let set = ModeSet::new(
        &geom,
        plan.mssw_max,
        plan.bvmsw_max,
        plan.active,
        plan.profile.clone(),
    )?;
    let map = map_2d(
        &cfg,
        &geom,
        &set,
        kind,
        plan.field_axis.clone(),
        plan.probe_axis.clone(),
    )?;
    let mut staging = Staging::new(ctx.out)?;
    staging.write("map.csv", &serialize_map(&map))?;
    match serialize_mask(&map) {
        Some(mask) => staging.write("map.csv.mask", &mask)?,
        None => staging.tombstone("map.csv.mask"),
    }
    let done = staging.commit()?;
    ctx.log(&format!(
        "map2d: {} kind, {}x{} cells, {} poisoned",
        kind.label(),
        plan.field_axis.points,
        plan.probe_axis.points,
        map.poisoned()
    ));
    Ok(done)
}

fn scan_csv(scan: &ScanResult, magic: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {magic}");
    out.push_str("# schema_version = 1\n");
    let _ = writeln!(out, "# parameter = {}", scan.parameter);
    let _ = writeln!(
        out,
        "# bandwidth_3db_hz = {}",
        scan.bandwidth_3db_hz.map_or("NA".to_string(), |v| format!("{v}"))
    );
    let _ = writeln!(out, "{},peak_efficiency,peak_freq_hz,flag", scan.parameter);
    for s in &scan.samples {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            s.value,
            cell(s.peak_efficiency),
            cell(s.peak_freq_hz),
            flag_word(s.flag)
        );
    }
    out
}

pub fn fsrscan(ctx: &Ctx) -> Result<Vec<PathBuf>> {
    let cfg = ctx.config.transducer()?;
    let geom = ctx.config.geometry()?;
    let plan = ctx.config.fsrscan()?;
    let mode = MagnetostaticMode::new(plan.family, plan.n1, plan.n2, &geom)?;
    let scan = fsr_scan(&cfg, &geom, &mode, &plan.axis)?;
    if scan
        .samples
        .iter()
        .all(|s| s.flag == SampleFlag::OutOfBand)
    {
        // re-derive the band error for the first requested value so the
        // exit code says "unreachable", not "empty artifact"
        magopt::magnetostatics::field_for_frequency(
            mode.family,
            mode.k,
            angular(plan.axis.start),
            &geom,
        )?;
        return Err(CliError::Other(
            "fsr scan produced no in-band samples".into(),
        ));
    }
    let healthy = scan
        .samples
        .iter()
        .filter(|s| s.flag == SampleFlag::Ok)
        .count();
    let mut staging = Staging::new(ctx.out)?;
    staging.write("fsrscan.csv", &scan_csv(&scan, "magopt-fsrscan"))?;
    let done = staging.commit()?;
    ctx.log(&format!(
        "fsrscan: {} of {} samples in band",
        healthy,
        scan.samples.len()
    ));
    Ok(done)
}

fn fit_report(fit: &FitResult) -> String {
    let mut out = String::new();
    for (name, p) in &fit.params {
        if p.unit.is_empty() {
            let _ = writeln!(out, "{name} = {}", p.value);
        } else {
            let _ = writeln!(out, "{name} = {} {}", p.value, p.unit);
        }
    }
    let _ = writeln!(out, "residual_rms = {}", fit.residual_rms);
    let _ = writeln!(out, "iterations = {}", fit.iterations);
    let _ = writeln!(out, "converged = {}", fit.converged);
    out
}

fn param(fit: &FitResult, name: &str) -> Result<f64> {
    fit.params
        .get(name)
        .map(|p| p.value)
        .ok_or_else(|| CliError::Other(format!("fit result lacks parameter {name}")))
}

pub fn fit(ctx: &Ctx) -> Result<Vec<PathBuf>> {
    let plan = ctx.config.fit()?;
    let mut staging = Staging::new(ctx.out)?;
    match &plan {
        FitPlan::Reflection {
            input,
            scale,
            branch,
        } => {
            let text = ctx.read(input)?;
            let (freq, value) = parse_trace(&text, input)?;
            let trace = MeasuredTrace::new(freq.clone(), value, *scale)?;
            let linear = trace.linear_values();
            let fit = fit_reflection_resonance(&trace, *branch)?;
            let wa = param(&fit, "omega_a")?;
            let kappa = param(&fit, "kappa_a")?;
            let gamma = param(&fit, "gamma_a")?;
            let mut resid = String::from("freq_hz,measured,model,residual\n");
            for (f, m) in freq.iter().zip(&linear) {
                let model = reflection_model(angular(*f) - wa, kappa, gamma);
                let _ = writeln!(resid, "{f},{m},{model},{}", m - model);
            }
            staging.write("fit.txt", &fit_report(&fit))?;
            staging.write("fit_residual.csv", &resid)?;
            ctx.log(&format!(
                "fit reflection: converged = {}, rms = {:.3e}",
                fit.converged, fit.residual_rms
            ));
        }
        FitPlan::Lorentzian { input, scale } => {
            let text = ctx.read(input)?;
            let (freq, value) = parse_trace(&text, input)?;
            let trace = MeasuredTrace::new(freq.clone(), value, *scale)?;
            let linear = trace.linear_values();
            let samples: Vec<(f64, f64)> =
                freq.iter().copied().zip(linear.iter().copied()).collect();
            let fit = lorentzian_fwhm_fit(&samples)?;
            let mut out = String::new();
            let _ = writeln!(out, "center_hz = {}", fit.center);
            let _ = writeln!(out, "fwhm_hz = {}", fit.fwhm);
            let _ = writeln!(out, "amplitude = {}", fit.amplitude);
            let _ = writeln!(out, "offset = {}", fit.offset);
            let _ = writeln!(out, "residual_norm = {}", fit.residual_norm);
            let _ = writeln!(out, "evaluations = {}", fit.evaluations);
            let mut resid = String::from("freq_hz,measured,model,residual\n");
            for (f, m) in &samples {
                let u = 2.0 * (f - fit.center) / fit.fwhm;
                let model = fit.offset + fit.amplitude / (1.0 + u * u);
                let _ = writeln!(resid, "{f},{m},{model},{}", m - model);
            }
            staging.write("fit.txt", &out)?;
            staging.write("fit_residual.csv", &resid)?;
            ctx.log(&format!(
                "fit lorentzian: fwhm = {:.6e} Hz over {} samples",
                fit.fwhm,
                samples.len()
            ));
        }
        FitPlan::Crossing { input } => {
            let text = ctx.read(input)?;
            let map = parse_map(&text)?;
            let fit = fit_avoided_crossing(&map)?;
            let wa = param(&fit, "omega_a")?;
            let g = param(&fit, "g_ma")?;
            let slope = param(&fit, "field_to_omega_slope")?;
            let wm_ref = param(&fit, "omega_m_ref")?;
            let field_ref = param(&fit, "field_ref")?;
            let mut resid =
                String::from("field_t,branch,measured_hz,model_hz,residual_hz\n");
            let magnitude_of = |idx: usize| -> f64 {
                match &map.values {
                    MapValues::Complex(v) => v[idx].norm(),
                    MapValues::Real(v) => v[idx],
                }
            };
            let probe_hz = map.y_axis.values();
            for (ix, h) in map.x_axis.values().iter().enumerate() {
                let column: Vec<f64> = (0..map.y_axis.points)
                    .map(|iy| magnitude_of(map.index(ix, iy)))
                    .collect();
                let mut dips = extract_dips(&probe_hz, &column);
                dips.sort_by(|a, b| a.freq_hz.total_cmp(&b.freq_hz));
                let wm = wm_ref + slope * (h - field_ref);
                let mid = 0.5 * (wa + wm);
                let split = (0.25 * (wa - wm) * (wa - wm) + g * g).sqrt();
                let model = [cycles(mid - split), cycles(mid + split)];
                match dips.len() {
                    2 => {
                        for (b, (d, m)) in dips.iter().zip(model).enumerate() {
                            let _ = writeln!(
                                resid,
                                "{h},{b},{},{m},{}",
                                d.freq_hz,
                                d.freq_hz - m
                            );
                        }
                    }
                    1 => {
                        let d = dips[0].freq_hz;
                        let b = usize::from((d - model[0]).abs() > (d - model[1]).abs());
                        let _ = writeln!(resid, "{h},{b},{d},{},{}", model[b], d - model[b]);
                    }
                    _ => {}
                }
            }
            staging.write("fit.txt", &fit_report(&fit))?;
            staging.write("fit_residual.csv", &resid)?;
            ctx.log(&format!(
                "fit crossing: g_ma/2pi = {:.6e} Hz, converged = {}",
                cycles(g),
                fit.converged
            ));
        }
    }
    staging.commit()
}

pub fn optimize(ctx: &Ctx) -> Result<Vec<PathBuf>> {
    let cfg = ctx.config.transducer()?;
    let plan = ctx.config.optimize()?;
    let mut staging = Staging::new(ctx.out)?;
    match plan {
        OptimizePlan::KappaA { lo, hi, points } => {
            let opt = optimize_kappa_a(&cfg, lo, hi, points)?;
            let mut out = String::from("target = kappa_a\n");
            let _ = writeln!(out, "best_kappa_rad_s = {}", opt.best_kappa);
            let _ = writeln!(out, "best_kappa_hz = {}", cycles(opt.best_kappa));
            let _ = writeln!(out, "best_eta = {}", opt.best_eta);
            let _ = writeln!(out, "unimodal = {}", opt.unimodal);
            let mut curve = String::from("kappa_rad_s,kappa_hz,eta\n");
            for (k, e) in &opt.curve {
                let _ = writeln!(curve, "{k},{},{}", cycles(*k), cell(*e));
            }
            staging.write("optimize.txt", &out)?;
            staging.write("optimize_curve.csv", &curve)?;
            ctx.log(&format!(
                "optimize kappa_a: best kappa/2pi = {:.6e} Hz, eta = {:.6e}",
                cycles(opt.best_kappa),
                opt.best_eta
            ));
        }
        OptimizePlan::TripleResonance {
            fsr_lo_hz,
            fsr_hi_hz,
            field_lo_t,
            field_hi_t,
            family,
            n1,
            n2,
        } => {
            let geom = ctx.config.geometry()?;
            let mode = MagnetostaticMode::new(family, n1, n2, &geom)?;
            let opt = optimize_triple_resonance(
                &cfg,
                &geom,
                &mode,
                (fsr_lo_hz, fsr_hi_hz),
                (field_lo_t, field_hi_t),
            )?;
            let mut out = String::from("target = triple_resonance\n");
            let _ = writeln!(out, "mode = {}", mode.label());
            let _ = writeln!(out, "best_fsr_hz = {}", opt.best_fsr_hz);
            let _ = writeln!(out, "best_field_t = {}", opt.best_field_t);
            let _ = writeln!(out, "best_eta = {}", opt.best_eta);
            let _ = writeln!(out, "at_boundary = {}", opt.at_boundary);
            staging.write("optimize.txt", &out)?;
            staging.tombstone("optimize_curve.csv");
            ctx.log(&format!(
                "optimize triple resonance: fsr = {:.6e} Hz, field = {:.6e} T, eta = {:.6e}",
                opt.best_fsr_hz, opt.best_field_t, opt.best_eta
            ));
        }
    }
    staging.commit()
}

pub fn dispersion(ctx: &Ctx) -> Result<Vec<PathBuf>> {
    let geom = ctx.config.geometry()?;
    let plan = ctx.config.dispersion()?;
    let families: &[ModeFamily] = match plan.family {
        Some(ModeFamily::Mssw) => &[ModeFamily::Mssw],
        Some(ModeFamily::Bvmsw) => &[ModeFamily::Bvmsw],
        None => &[ModeFamily::Mssw, ModeFamily::Bvmsw],
    };
    let mut modes = Vec::new();
    for family in families {
        modes.extend(mode_catalog(&geom, plan.bias_field_t, *family, plan.max_index)?);
    }
    modes.sort_by(|a, b| a.omega.unwrap().total_cmp(&b.omega.unwrap()));
    let mut out = String::new();
    out.push_str("# magopt-dispersion\n# schema_version = 1\n");
    let _ = writeln!(out, "# bias_field_t = {}", plan.bias_field_t);
    out.push_str("family,n1,n2,k_rad_per_m,frequency_hz\n");
    for m in &modes {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            m.family.label(),
            m.n1,
            m.n2,
            m.k,
            cycles(m.omega.expect("catalog modes are resolved"))
        );
    }
    let mut staging = Staging::new(ctx.out)?;
    staging.write("catalog.csv", &out)?;
    let done = staging.commit()?;
    ctx.log(&format!("dispersion: {} modes", modes.len()));
    Ok(done)
}

pub fn report(ctx: &Ctx) -> Result<Vec<PathBuf>> {
    let plan = ctx.config.report()?;
    let xi_b = match plan.xi_b {
        Some(v) => v,
        None => {
            let cfg = ctx.config.transducer().map_err(|_| {
                CliError::Config(
                    "report: xi_b not given and no [transducer] section to derive it from"
                        .into(),
                )
            })?;
            let xi = cfg.optical.extraction();
            if xi <= 0.0 {
                return Err(CliError::Config(
                    "report: optical kappa_ext is zero, xi_b cannot be derived".into(),
                ));
            }
            xi
        }
    };
    let implied = implied_xi_a(plan.measured_eta, plan.measured_eta_int, xi_b)?;
    let mut out = String::new();
    let _ = writeln!(out, "measured_eta = {}", plan.measured_eta);
    let _ = writeln!(out, "measured_eta_int = {}", plan.measured_eta_int);
    let _ = writeln!(out, "xi_b = {xi_b}");
    let _ = writeln!(out, "implied_xi_a = {implied}");
    if let Some(stated) = plan.xi_a {
        let product = plan.measured_eta_int * stated * xi_b;
        let _ = writeln!(out, "stated_xi_a = {stated}");
        let _ = writeln!(out, "eta_from_stated = {product}");
        let _ = writeln!(
            out,
            "stated_over_implied = {}",
            stated / implied
        );
    }
    if implied > 1.0 {
        out.push_str(
            "note = implied extraction exceeds 1, the (eta, eta_int, xi_b) triple is inconsistent\n",
        );
    }
    let mut staging = Staging::new(ctx.out)?;
    staging.write("report.txt", &out)?;
    let done = staging.commit()?;
    ctx.log(&format!("report: implied_xi_a = {implied:.6e}"));
    Ok(done)
}
