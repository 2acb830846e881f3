//! Derivative-free and quasi-Newton minimizers used by the estimators.

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    /// Relative change in the objective treated as convergence.
    pub rel: f64,
    pub max_iter: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-9,
            max_iter: 500,
        }
    }
}

fn settled(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

/// Nelder–Mead simplex search starting from `x0` with per-coordinate
/// initial edge lengths `steps`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], steps: &[f64], tol: Tolerance) -> Minimum {
    let n = x0.len();
    if n == 0 {
        let v = f(x0);
        return Minimum {
            x: vec![],
            f: v,
            iterations: 0,
            converged: true,
        };
    }
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < tol.max_iter {
        iterations += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        if settled(values[0], values[n], tol.rel) {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (w - c)).collect() };
        let xr = along(-alpha);
        let fr = f(&xr);
        if fr < values[0] {
            let xe = along(-gamma);
            let fe = f(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
        } else {
            let (xc, fc) = if fr < values[n] {
                let xc = along(-rho);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(rho);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
            } else {
                for i in 1..=n {
                    let shrunk: Vec<f64> = simplex[0]
                        .iter()
                        .zip(&simplex[i])
                        .map(|(b, v)| b + sigma * (v - b))
                        .collect();
                    values[i] = f(&shrunk);
                    simplex[i] = shrunk;
                }
            }
        }
    }
    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)))
        .unwrap();
    Minimum {
        x: simplex[best].clone(),
        f: values[best],
        iterations,
        converged,
    }
}

/// Central-difference gradient with step `1e-5 * max(1, |x_i|)`.
pub fn numerical_gradient<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64]) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-5 * x[i].abs().max(1.0);
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// BFGS with numerical gradients and a backtracking Armijo line search.
pub fn bfgs<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], tol: Tolerance) -> Minimum {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    if n == 0 {
        return Minimum {
            x,
            f: fx,
            iterations: 0,
            converged: true,
        };
    }
    let mut g = numerical_gradient(&mut f, &x);
    let mut h = vec![vec![0.0; n]; n];
    for (i, row) in h.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let mut converged = false;
    let mut iterations = 0;
    while iterations < tol.max_iter {
        iterations += 1;
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm < 1e-10 {
            converged = true;
            break;
        }
        let mut dir: Vec<f64> = h
            .iter()
            .map(|row| -row.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let mut slope: f64 = dir.iter().zip(&g).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            // not a descent direction: restart from steepest descent
            for (i, row) in h.iter_mut().enumerate() {
                row.iter_mut().for_each(|v| *v = 0.0);
                row[i] = 1.0;
            }
            dir = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            let fxn = f(&xn);
            if fxn.is_finite() && fxn <= fx + 1e-4 * t * slope {
                accepted = Some((xn, fxn));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fxn)) = accepted else {
            // no decrease along the search direction: numerically stationary
            converged = true;
            break;
        };
        let gn = numerical_gradient(&mut f, &xn);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let done = settled(fx, fxn, tol.rel);
        x = xn;
        fx = fxn;
        g = gn;
        if done {
            converged = true;
            break;
        }
        if sy > 1e-12 {
            let hy: Vec<f64> = h
                .iter()
                .map(|row| row.iter().zip(&y).map(|(a, b)| a * b).sum())
                .collect();
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
        }
    }
    Minimum {
        x,
        f: fx,
        iterations,
        converged,
    }
}

/// Golden-section search for the minimum of a unimodal `f` on `[a, b]`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn nelder_mead_then_bfgs_finds_rosenbrock_minimum() {
        let nm = nelder_mead(rosenbrock, &[-1.2, 1.0], &[0.1, 0.1], Tolerance::default());
        let polished = bfgs(rosenbrock, &nm.x, Tolerance::default());
        assert!((polished.x[0] - 1.0).abs() < 1e-4, "{:?}", polished.x);
        assert!((polished.x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn bfgs_on_quadratic() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + 10.0 * (x[1] + 1.0).powi(2) + x[0] * x[1];
        let m = bfgs(f, &[0.0, 0.0], Tolerance::default());
        // stationary point of the quadratic: 2(x0-3) + x1 = 0, 20(x1+1) + x0 = 0
        let x1 = -23.0 / 19.5;
        let x0 = 3.0 - x1 / 2.0;
        assert!((m.x[0] - x0).abs() < 1e-5 && (m.x[1] - x1).abs() < 1e-5, "{:?}", m.x);
        assert!(m.converged);
    }

    #[test]
    fn golden_section_parabola() {
        let (x, fx) = golden_section(|a| (a - 0.3).powi(2) + 1.0, 0.0, 1.0, 1e-10);
        // flat bottom: resolution is limited to about sqrt(machine epsilon)
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_of_cubic() {
        let mut f = |x: &[f64]| x[0].powi(3);
        let g = numerical_gradient(&mut f, &[2.0]);
        assert!((g[0] - 12.0).abs() < 1e-8);
    }
}
