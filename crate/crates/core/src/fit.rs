//! Parameter extraction from measured (or simulated) traces: single
//! reflection resonances, Lorentzian peaks, and two-branch avoided
//! crossings in field/frequency maps.
//!
//! Magnitude-only reflection data cannot distinguish the external coupling
//! from the internal loss: |S11|^2 is symmetric under swapping the two.
//! Callers state which side of critical coupling the port sits on via
//! [`CouplingBranch`]; the default follows the overcoupled convention
//! (kappa > gamma).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::minimize::{nelder_mead, SimplexOptions};
use crate::sweep::{MapKind, MapValues, SpectrumMap};
use crate::units::angular;

/// How trace values are encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scale {
    /// Plain power ratio.
    #[default]
    Linear,
    /// Power decibels, 10 log10 of the ratio.
    Decibel,
}

/// A 1-D measured trace of power reflection |S11|^2 against frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredTrace {
    pub freq_hz: Vec<f64>,
    pub value: Vec<f64>,
    pub scale: Scale,
}

impl MeasuredTrace {
    pub fn new(freq_hz: Vec<f64>, value: Vec<f64>, scale: Scale) -> Result<Self> {
        if freq_hz.len() != value.len() {
            return Err(Error::DegenerateData(format!(
                "trace has {} frequencies but {} values",
                freq_hz.len(),
                value.len()
            )));
        }
        if freq_hz.len() < 8 {
            return Err(Error::DegenerateData(format!(
                "trace needs at least 8 samples, got {}",
                freq_hz.len()
            )));
        }
        if freq_hz.iter().any(|v| !v.is_finite()) || value.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("measured trace"));
        }
        if freq_hz.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::DegenerateData(
                "trace frequencies must increase strictly".into(),
            ));
        }
        let t = Self {
            freq_hz,
            value,
            scale,
        };
        if t.linear_values().iter().any(|v| *v < 0.0) {
            return Err(Error::DegenerateData(
                "linear power values must be non-negative".into(),
            ));
        }
        Ok(t)
    }

    /// Values as plain power ratios regardless of input scale.
    pub fn linear_values(&self) -> Vec<f64> {
        match self.scale {
            Scale::Linear => self.value.clone(),
            Scale::Decibel => self.value.iter().map(|v| 10f64.powf(v / 10.0)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedParam {
    pub value: f64,
    pub unit: &'static str,
}

/// Outcome of a parameter fit. `params` is ordered by name so artifacts
/// serialize deterministically.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: BTreeMap<String, FittedParam>,
    /// Root-mean-square misfit, in the units of the fitted objective
    /// (power ratio for traces, rad/s for branch positions).
    pub residual_rms: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Which side of critical coupling to assign to the external rate when
/// only |S11| magnitude is available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingBranch {
    #[default]
    Overcoupled,
    Undercoupled,
}

/// Power reflection of a single resonance at detuning `delta` (rad/s):
/// (delta^2 + ((gamma - kappa)/2)^2) / (delta^2 + ((kappa + gamma)/2)^2).
pub fn reflection_model(delta: f64, kappa: f64, gamma: f64) -> f64 {
    let dif = 0.5 * (gamma - kappa);
    let tot = 0.5 * (kappa + gamma);
    (delta * delta + dif * dif) / (delta * delta + tot * tot)
}

/// Fits the bare-cavity power reflection
/// (delta^2 + ((gamma - kappa)/2)^2) / (delta^2 + ((kappa + gamma)/2)^2)
/// to a trace holding one dip. Returns `omega_a`, `kappa_a`, `gamma_a`
/// (angular) with the branch choice deciding which of the two rates is
/// which.
pub fn fit_reflection_resonance(
    trace: &MeasuredTrace,
    branch: CouplingBranch,
) -> Result<FitResult> {
    let y = trace.linear_values();
    let n = y.len();

    let (idip, &ymin) = y
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("trace is non-empty");
    // baseline from the outer tenth of samples on each side
    let wing = (n / 10).max(2);
    let baseline = y[..wing]
        .iter()
        .chain(y[n - wing..].iter())
        .sum::<f64>()
        / (2 * wing) as f64;
    if baseline - ymin < 1e-9 * baseline.max(1e-300) {
        return Err(Error::DegenerateData(
            "trace shows no dip above the baseline".into(),
        ));
    }

    // full width at half depth, interpolated outward from the dip
    let level = 0.5 * (ymin + baseline);
    let mut left = None;
    for i in (1..=idip).rev() {
        if y[i - 1] >= level && y[i] < level {
            let t = (level - y[i]) / (y[i - 1] - y[i]);
            left = Some(trace.freq_hz[i] + t * (trace.freq_hz[i - 1] - trace.freq_hz[i]));
            break;
        }
    }
    let mut right = None;
    for i in idip..n - 1 {
        if y[i] < level && y[i + 1] >= level {
            let t = (level - y[i]) / (y[i + 1] - y[i]);
            right = Some(trace.freq_hz[i] + t * (trace.freq_hz[i + 1] - trace.freq_hz[i]));
            break;
        }
    }
    let (Some(fl), Some(fr)) = (left, right) else {
        return Err(Error::DegenerateData(
            "dip width is not bracketed by the trace".into(),
        ));
    };
    let span = trace.freq_hz[n - 1] - trace.freq_hz[0];
    let width_hz = fr - fl;
    if width_hz >= span {
        return Err(Error::DegenerateData(
            "dip is wider than the trace span".into(),
        ));
    }

    // total linewidth ~ dip FWHM; |kappa - gamma| from the dip floor
    let total = angular(width_hz);
    let contrast = (ymin.max(0.0) / baseline.max(f64::MIN_POSITIVE)).sqrt().min(1.0);
    let diff = contrast * total;
    let (k0, g0) = match branch {
        CouplingBranch::Overcoupled => (0.5 * (total + diff), 0.5 * (total - diff)),
        CouplingBranch::Undercoupled => (0.5 * (total - diff), 0.5 * (total + diff)),
    };
    let floor = 1e-6 * total;
    let p0 = [
        angular(trace.freq_hz[idip]),
        k0.max(floor).ln(),
        g0.max(floor).ln(),
    ];

    let omegas: Vec<f64> = trace.freq_hz.iter().map(|&f| angular(f)).collect();
    let sse = |p: &[f64]| -> f64 {
        let (wa, kappa, gamma) = (p[0], p[1].exp(), p[2].exp());
        omegas
            .iter()
            .zip(&y)
            .map(|(&w, &yv)| {
                let r = reflection_model(w - wa, kappa, gamma) - yv;
                r * r
            })
            .sum()
    };

    let steps = [angular(width_hz) / 10.0, 0.3, 0.3];
    let opts = SimplexOptions {
        max_evals: 1200,
        rel_tol: 1e-10,
    };
    let first = nelder_mead(sse, &p0, &steps, opts);
    let polish_steps = [steps[0] * 0.05, 0.02, 0.02];
    let polish_opts = SimplexOptions {
        max_evals: 800,
        rel_tol: 1e-12,
    };
    let out = nelder_mead(sse, &first.x, &polish_steps, polish_opts);
    let evaluations = first.evaluations + out.evaluations;
    if !out.converged {
        return Err(Error::FitDidNotConverge { evaluations });
    }

    let mut params = BTreeMap::new();
    params.insert(
        "omega_a".to_string(),
        FittedParam {
            value: out.x[0],
            unit: "rad/s",
        },
    );
    params.insert(
        "kappa_a".to_string(),
        FittedParam {
            value: out.x[1].exp(),
            unit: "rad/s",
        },
    );
    params.insert(
        "gamma_a".to_string(),
        FittedParam {
            value: out.x[2].exp(),
            unit: "rad/s",
        },
    );
    Ok(FitResult {
        params,
        residual_rms: (out.value / n as f64).sqrt(),
        iterations: evaluations,
        converged: out.converged,
    })
}

/// A local minimum found in a magnitude trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dip {
    /// Grid index of the discrete minimum.
    pub index: usize,
    /// Sub-grid refined position, Hz.
    pub freq_hz: f64,
    /// Depth below the trace maximum, in trace units.
    pub depth: f64,
}

/// Finds dips in one magnitude trace: smooth with a 5-point moving
/// average, take local minima, drop shallow ones, merge clusters closer
/// than 3 grid steps, and refine each survivor with a 3-point parabola.
/// A trace containing NaN yields no dips.
pub fn extract_dips(freq_hz: &[f64], magnitude: &[f64]) -> Vec<Dip> {
    let n = magnitude.len();
    if n < 5 || freq_hz.len() != n || magnitude.iter().any(|v| !v.is_finite()) {
        return Vec::new();
    }
    let smooth: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(2);
            let hi = (i + 2).min(n - 1);
            magnitude[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect();

    let gmax = smooth.iter().cloned().fold(f64::MIN, f64::max);
    let gmin = smooth.iter().cloned().fold(f64::MAX, f64::min);
    let range = gmax - gmin;
    if range <= 0.0 {
        return Vec::new();
    }

    let mut minima: Vec<usize> = (1..n - 1)
        .filter(|&i| smooth[i] < smooth[i - 1] && smooth[i] <= smooth[i + 1])
        .filter(|&i| gmax - smooth[i] >= 0.1 * range)
        .collect();

    // merge clusters of nearby minima, keeping the deepest of each
    minima.sort_unstable();
    let mut merged: Vec<usize> = Vec::new();
    for i in minima {
        match merged.last() {
            Some(&prev) if i - prev < 3 => {
                if smooth[i] < smooth[prev] {
                    *merged.last_mut().unwrap() = i;
                }
            }
            _ => merged.push(i),
        }
    }

    merged
        .into_iter()
        .map(|i| {
            // parabolic vertex through the three smoothed points
            let (a, b, c) = (smooth[i - 1], smooth[i], smooth[i + 1]);
            let denom = a - 2.0 * b + c;
            let shift = if denom.abs() > 0.0 {
                (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            let freq = if shift >= 0.0 {
                freq_hz[i] + shift * (freq_hz[i + 1] - freq_hz[i])
            } else {
                freq_hz[i] + shift * (freq_hz[i] - freq_hz[i - 1])
            };
            Dip {
                index: i,
                freq_hz: freq,
                depth: gmax - smooth[i],
            }
        })
        .collect()
}

/// Fits the two-polariton branch pattern
/// omega+-(H) = (omega_a + omega_m(H))/2 +- sqrt(((omega_a - omega_m(H))/2)^2 + g^2)
/// with omega_m linear in field across the window, to the dips of a
/// reflection map. Returns `g_ma`, `omega_a`, `omega_m_ref` (angular),
/// `field_to_omega_slope` (rad/s per tesla) and the reference field
/// `field_ref` (the field-axis midpoint).
pub fn fit_avoided_crossing(map: &SpectrumMap) -> Result<FitResult> {
    if map.kind != MapKind::Reflection {
        return Err(Error::InvalidParameter(
            "avoided-crossing fits need a reflection map".into(),
        ));
    }
    let MapValues::Complex(values) = &map.values else {
        return Err(Error::InvalidParameter(
            "reflection map must hold complex values".into(),
        ));
    };
    let nx = map.x_axis.points;
    let ny = map.y_axis.points;
    let freqs = map.y_axis.values();

    // per-column dip extraction on |S11|
    let mut columns: Vec<(f64, Vec<Dip>)> = Vec::with_capacity(nx);
    for ix in 0..nx {
        let mags: Vec<f64> = (0..ny)
            .map(|iy| {
                if map.valid[map.index(ix, iy)] {
                    values[map.index(ix, iy)].norm()
                } else {
                    f64::NAN
                }
            })
            .collect();
        columns.push((map.x_axis.value(ix), extract_dips(&freqs, &mags)));
    }

    let with_any = columns.iter().filter(|(_, d)| !d.is_empty()).count();
    let two_dip: Vec<(f64, f64, f64)> = columns
        .iter()
        .filter(|(_, d)| d.len() >= 2)
        .map(|(h, d)| {
            let mut best: Vec<&Dip> = d.iter().collect();
            best.sort_by(|a, b| b.depth.total_cmp(&a.depth));
            let (mut f1, mut f2) = (best[0].freq_hz, best[1].freq_hz);
            if f1 > f2 {
                std::mem::swap(&mut f1, &mut f2);
            }
            (*h, f1, f2)
        })
        .collect();
    if with_any * 5 < nx * 4 {
        return Err(Error::BranchExtraction(format!(
            "need dips in 80% of columns, got {with_any} of {nx}"
        )));
    }

    let field_ref = 0.5 * (map.x_axis.start + map.x_axis.stop);
    let grid_w = angular(map.y_axis.step());
    let (wa0, g0, slope0, wm_ref0) = if two_dip.len() >= 2 {
        // initialize from the sum line: omega+ + omega- = omega_a + omega_m(H)
        let hs: Vec<f64> = two_dip.iter().map(|(h, _, _)| *h).collect();
        let sums: Vec<f64> = two_dip
            .iter()
            .map(|(_, f1, f2)| angular(f1 + f2))
            .collect();
        let h_mean = hs.iter().sum::<f64>() / hs.len() as f64;
        let s_mean = sums.iter().sum::<f64>() / sums.len() as f64;
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        for (h, s) in hs.iter().zip(&sums) {
            sxx += (h - h_mean) * (h - h_mean);
            sxy += (h - h_mean) * (s - s_mean);
        }
        if sxx <= 0.0 {
            return Err(Error::BranchExtraction(
                "split columns share a single field value".into(),
            ));
        }
        let slope0 = sxy / sxx;
        let (h_min_split, min_split) = two_dip
            .iter()
            .map(|(h, f1, f2)| (*h, angular(f2 - f1)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("two_dip is non-empty");
        let sum_at_min = s_mean + slope0 * (h_min_split - h_mean);
        let wa0 = 0.5 * sum_at_min;
        let g0 = (0.5 * min_split).max(grid_w);
        (wa0, g0, slope0, s_mean + slope0 * (field_ref - h_mean) - wa0)
    } else {
        // no column ever splits: the couplings are below the grid. Start
        // from a flat cavity line with the magnon branch parked off it and
        // a sub-grid coupling; the fit then drives g toward zero.
        let mut freqs_seen: Vec<f64> = columns
            .iter()
            .flat_map(|(_, d)| d.iter().map(|dip| dip.freq_hz))
            .collect();
        freqs_seen.sort_by(f64::total_cmp);
        let wa0 = angular(freqs_seen[freqs_seen.len() / 2]);
        let span_w = angular(map.y_axis.stop - map.y_axis.start);
        (wa0, 0.25 * grid_w, 0.0, wa0 + 0.25 * span_w)
    };

    // objective: nearest-branch squared distance over every dip
    let dips: Vec<(f64, f64)> = columns
        .iter()
        .flat_map(|(h, d)| d.iter().map(move |dip| (*h, angular(dip.freq_hz))))
        .collect();
    let ndip = dips.len();
    let sse = |p: &[f64]| -> f64 {
        let (wa, g, slope, wm_ref) = (p[0], p[1].exp(), p[2], p[3]);
        dips.iter()
            .map(|&(h, w)| {
                let wm = wm_ref + slope * (h - field_ref);
                let mid = 0.5 * (wa + wm);
                let half = (0.25 * (wa - wm) * (wa - wm) + g * g).sqrt();
                let d1 = w - (mid - half);
                let d2 = w - (mid + half);
                (d1 * d1).min(d2 * d2)
            })
            .sum()
    };

    let span_w = angular(map.y_axis.stop - map.y_axis.start);
    let p0 = [wa0, g0.ln(), slope0, wm_ref0];
    let steps = [
        span_w / 20.0,
        0.3,
        slope0.abs() * 0.2 + span_w / (map.x_axis.stop - map.x_axis.start) / 50.0,
        span_w / 10.0,
    ];
    let first = nelder_mead(sse, &p0, &steps, SimplexOptions {
        max_evals: 1800,
        rel_tol: 1e-10,
    });
    let polish = [steps[0] * 0.05, 0.02, steps[2] * 0.05, steps[3] * 0.05];
    let out = nelder_mead(sse, &first.x, &polish, SimplexOptions {
        max_evals: 1200,
        rel_tol: 1e-12,
    });
    let evaluations = first.evaluations + out.evaluations;
    if !out.converged {
        return Err(Error::FitDidNotConverge { evaluations });
    }

    let mut params = BTreeMap::new();
    params.insert(
        "omega_a".to_string(),
        FittedParam {
            value: out.x[0],
            unit: "rad/s",
        },
    );
    params.insert(
        "g_ma".to_string(),
        FittedParam {
            value: out.x[1].exp(),
            unit: "rad/s",
        },
    );
    params.insert(
        "field_to_omega_slope".to_string(),
        FittedParam {
            value: out.x[2],
            unit: "rad/s/T",
        },
    );
    params.insert(
        "omega_m_ref".to_string(),
        FittedParam {
            value: out.x[3],
            unit: "rad/s",
        },
    );
    params.insert(
        "field_ref".to_string(),
        FittedParam {
            value: field_ref,
            unit: "T",
        },
    );
    Ok(FitResult {
        params,
        residual_rms: (out.value / ndip as f64).sqrt(),
        iterations: evaluations,
        converged: out.converged,
    })
}

/// A fitted Lorentzian peak y = offset + amplitude / (1 + (2(x-c)/w)^2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianFit {
    pub center: f64,
    pub fwhm: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub residual_norm: f64,
    pub evaluations: usize,
}

/// Least-squares Lorentzian peak fit. Callers fitting a dip should invert
/// the data first. Units follow the samples.
pub fn lorentzian_fwhm_fit(samples: &[(f64, f64)]) -> Result<LorentzianFit> {
    if samples.len() < 8 {
        return Err(Error::DegenerateData(format!(
            "peak fit needs at least 8 samples, got {}",
            samples.len()
        )));
    }
    if samples
        .iter()
        .any(|(x, y)| !x.is_finite() || !y.is_finite())
    {
        return Err(Error::NonFinite("peak fit samples"));
    }
    let (imax, &(cx, ymax)) = samples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("samples are non-empty");
    let _ = imax;
    let ymin = samples.iter().map(|&(_, y)| y).fold(f64::MAX, f64::min);
    let amp0 = ymax - ymin;
    if amp0 <= 0.0 || amp0 < 1e-12 * ymax.abs().max(1.0) {
        return Err(Error::DegenerateData("peak has no height".into()));
    }
    let xs_min = samples.iter().map(|&(x, _)| x).fold(f64::MAX, f64::min);
    let xs_max = samples.iter().map(|&(x, _)| x).fold(f64::MIN, f64::max);
    let span = xs_max - xs_min;
    if span <= 0.0 {
        return Err(Error::DegenerateData(
            "peak fit needs a spread of x values".into(),
        ));
    }

    let sse = |p: &[f64]| -> f64 {
        let (c, w, a, o) = (p[0], p[1].exp(), p[2], p[3]);
        samples
            .iter()
            .map(|&(x, y)| {
                let u = 2.0 * (x - c) / w;
                let r = o + a / (1.0 + u * u) - y;
                r * r
            })
            .sum()
    };
    let p0 = [cx, (span / 5.0).ln(), amp0, ymin];
    let steps = [span / 20.0, 0.4, 0.25 * amp0, 0.25 * amp0];
    let out = nelder_mead(sse, &p0, &steps, SimplexOptions {
        max_evals: 1000,
        rel_tol: 1e-11,
    });
    if !out.converged {
        return Err(Error::FitDidNotConverge {
            evaluations: out.evaluations,
        });
    }
    Ok(LorentzianFit {
        center: out.x[0],
        fwhm: out.x[1].exp(),
        amplitude: out.x[2],
        offset: out.x[3],
        residual_norm: out.value.sqrt(),
        evaluations: out.evaluations,
    })
}
