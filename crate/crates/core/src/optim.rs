//! Nelder–Mead downhill simplex.

/// Simplex parameters. Defaults: edge 0.02, coefficients 1/2/0.5/0.5,
/// spread tolerance 1e−12, 500 iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead {
    pub edge: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { edge: 0.02, reflection: 1.0, expansion: 2.0, contraction: 0.5, shrink: 0.5, tol: 1e-12, max_iters: 500 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best value after each iteration, starting with the initial value.
    pub history: Vec<f64>,
}

fn order(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b)));
    idx
}

impl NelderMead {
    /// Minimizes `f` from `x0`. Non-finite values are treated as +∞. The
    /// returned value never exceeds f(x0).
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, x0: &[f64], mut f: F) -> Minimum {
        let n = x0.len();
        let mut eval = |x: &[f64]| {
            let v = f(x);
            if v.is_nan() { f64::INFINITY } else { v }
        };
        let f0 = eval(x0);
        if self.max_iters == 0 || n == 0 {
            return Minimum { x: x0.to_vec(), f: f0, iterations: 0, converged: false, history: vec![f0] };
        }
        let mut pts = vec![x0.to_vec()];
        let mut vals = vec![f0];
        for i in 0..n {
            let mut p = x0.to_vec();
            p[i] += self.edge;
            vals.push(eval(&p));
            pts.push(p);
        }
        let mut history = vec![f0];
        let mut converged = false;
        let mut iterations = 0;
        while iterations < self.max_iters {
            let idx = order(&vals);
            pts = idx.iter().map(|&i| pts[i].clone()).collect();
            vals = idx.iter().map(|&i| vals[i]).collect();
            let (best, worst) = (vals[0], vals[n]);
            if worst.is_finite() && worst - best < self.tol {
                converged = true;
                break;
            }
            iterations += 1;
            let centroid: Vec<f64> = (0..n).map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
            let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (pts[n][j] - centroid[j])).collect() };
            let xr = along(-self.reflection);
            let fr = eval(&xr);
            if fr < vals[0] {
                let xe = along(-self.reflection * self.expansion);
                let fe = eval(&xe);
                if fe < fr {
                    pts[n] = xe;
                    vals[n] = fe;
                } else {
                    pts[n] = xr;
                    vals[n] = fr;
                }
            } else if fr < vals[n - 1] {
                pts[n] = xr;
                vals[n] = fr;
            } else {
                let (xc, fc) = if fr < vals[n] {
                    let x = along(-self.reflection * self.contraction);
                    let v = eval(&x);
                    (x, v)
                } else {
                    let x = along(self.contraction);
                    let v = eval(&x);
                    (x, v)
                };
                if fc < vals[n].min(fr) {
                    pts[n] = xc;
                    vals[n] = fc;
                } else {
                    for i in 1..=n {
                        let p: Vec<f64> = (0..n).map(|j| pts[0][j] + self.shrink * (pts[i][j] - pts[0][j])).collect();
                        vals[i] = eval(&p);
                        pts[i] = p;
                    }
                }
            }
            history.push(vals.iter().copied().fold(f64::INFINITY, f64::min));
        }
        let idx = order(&vals);
        let (x, fbest) = (pts[idx[0]].clone(), vals[idx[0]]);
        if fbest <= f0 {
            Minimum { x, f: fbest, iterations, converged, history }
        } else {
            Minimum { x: x0.to_vec(), f: f0, iterations, converged, history }
        }
    }
}
