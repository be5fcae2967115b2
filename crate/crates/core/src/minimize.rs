//! Scalar and simplex optimizers shared by the sweep and fitting modules.
//! Both are fully deterministic: the same inputs produce the same iterates.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section maximization on `[lo, hi]`. Assumes `f` is unimodal on the
/// bracket. NaN evaluations count as negative infinity. Exact ties move the
/// bracket toward lower x.
pub fn golden_max<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    max_iter: usize,
) -> (f64, f64) {
    debug_assert!(hi >= lo);
    let mut eval = move |x: f64| {
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    for _ in 0..max_iter {
        let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        if (hi - lo) <= rel_tol * scale {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = eval(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_evals: usize,
    pub rel_tol: f64,
}

#[derive(Debug, Clone)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder-Mead downhill simplex minimization with the classic coefficients
/// (reflection 1, expansion 2, contraction 0.5, shrink 0.5). The initial
/// simplex is `x0` plus one vertex per dimension displaced by `steps[i]`.
///
/// Convergence is declared when either the relative value spread across the
/// simplex or the per-dimension vertex spread (relative to the larger of the
/// coordinate and its initial step) drops below `rel_tol`. Both criteria are
/// scale-free, so uniformly rescaling the objective does not change the
/// iterates.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    steps: &[f64],
    opts: SimplexOptions,
) -> SimplexOutcome {
    let n = x0.len();
    assert_eq!(steps.len(), n);
    assert!(n >= 1);

    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for d in 0..n {
        let mut v = x0.to_vec();
        v[d] += steps[d];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();

    let mut converged = false;
    while evals < opts.max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        let f_spread = values[worst] - values[best];
        let f_scale = values[best].abs().max(values[worst].abs());
        let f_ok = f_spread <= opts.rel_tol * f_scale;
        let x_ok = (0..n).all(|d| {
            let mut lov = f64::INFINITY;
            let mut hiv = f64::NEG_INFINITY;
            for v in &simplex {
                lov = lov.min(v[d]);
                hiv = hiv.max(v[d]);
            }
            let scale = simplex[best][d].abs().max(steps[d].abs());
            hiv - lov <= opts.rel_tol * scale
        });
        if f_ok || x_ok {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for &i in order.iter().take(n) {
            for d in 0..n {
                centroid[d] += simplex[i][d];
            }
        }
        for c in centroid.iter_mut() {
            *c /= n as f64;
        }

        let reflect: Vec<f64> = (0..n)
            .map(|d| centroid[d] + (centroid[d] - simplex[worst][d]))
            .collect();
        let fr = eval(&reflect, &mut evals);

        if fr < values[best] {
            let expand: Vec<f64> = (0..n)
                .map(|d| centroid[d] + 2.0 * (centroid[d] - simplex[worst][d]))
                .collect();
            let fe = eval(&expand, &mut evals);
            if fe < fr {
                simplex[worst] = expand;
                values[worst] = fe;
            } else {
                simplex[worst] = reflect;
                values[worst] = fr;
            }
        } else if fr < values[second_worst] {
            simplex[worst] = reflect;
            values[worst] = fr;
        } else {
            let contracted: Vec<f64> = if fr < values[worst] {
                (0..n).map(|d| centroid[d] + 0.5 * (reflect[d] - centroid[d])).collect()
            } else {
                (0..n)
                    .map(|d| centroid[d] - 0.5 * (centroid[d] - simplex[worst][d]))
                    .collect()
            };
            let fc = eval(&contracted, &mut evals);
            if fc < values[worst].min(fr) {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                // shrink toward the best vertex
                let anchor = simplex[best].clone();
                for i in 0..=n {
                    if i == best {
                        continue;
                    }
                    for d in 0..n {
                        simplex[i][d] = anchor[d] + 0.5 * (simplex[i][d] - anchor[d]);
                    }
                    values[i] = eval(&simplex[i], &mut evals);
                    if evals >= opts.max_evals {
                        break;
                    }
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=n {
        if values[i] < values[best] {
            best = i;
        }
    }
    SimplexOutcome {
        x: simplex[best].clone(),
        value: values[best],
        evaluations: evals,
        converged,
    }
}
