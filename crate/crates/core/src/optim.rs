//! Box-constrained Nelder–Mead minimizer.

/// Stopping rule and initial simplex size.
#[derive(Clone, Debug)]
pub struct NelderMead {
    pub max_iterations: usize,
    /// Stop once `max f − min f` over the simplex drops below this.
    pub value_tolerance: f64,
    /// Offset of each initial vertex from the start point along one axis.
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { max_iterations: 500, value_tolerance: 1e-6, initial_step: 1.0 }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    /// Objective at the (clamped) start point.
    pub start_value: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

impl NelderMead {
    /// Minimizes `f` inside the box `bounds`; trial points are projected
    /// onto the box. Non-finite objective values are treated as `+∞`.
    pub fn minimize<F>(&self, mut f: F, start: &[f64], bounds: &[(f64, f64)]) -> Minimum
    where
        F: FnMut(&[f64]) -> f64,
    {
        let dim = start.len();
        assert_eq!(dim, bounds.len(), "one bound per coordinate");
        let clamp = |x: &mut Vec<f64>| {
            for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
                *v = v.clamp(lo, hi);
            }
        };
        let mut evaluations = 0usize;
        let mut eval = |x: &[f64]| {
            evaluations += 1;
            let v = f(x);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        };

        let mut x0 = start.to_vec();
        clamp(&mut x0);
        let start_value = eval(&x0);
        let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.clone(), start_value)];
        for i in 0..dim {
            let mut v = x0.clone();
            // Step away from the bound when the start sits on it.
            v[i] += if v[i] + self.initial_step <= bounds[i].1 { self.initial_step } else { -self.initial_step };
            clamp(&mut v);
            let fv = eval(&v);
            simplex.push((v, fv));
        }

        let mut iterations = 0;
        while iterations < self.max_iterations {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = simplex[0].1;
            let worst = simplex[dim].1;
            if best.is_finite() && (worst - best).abs() < self.value_tolerance {
                break;
            }
            iterations += 1;

            let centroid: Vec<f64> = (0..dim)
                .map(|j| simplex[..dim].iter().map(|(p, _)| p[j]).sum::<f64>() / dim as f64)
                .collect();
            let along = |t: f64| {
                let mut p: Vec<f64> =
                    centroid.iter().zip(&simplex[dim].0).map(|(c, w)| c + t * (c - w)).collect();
                clamp(&mut p);
                p
            };

            let xr = along(REFLECT);
            let fr = eval(&xr);
            if fr < simplex[0].1 {
                let xe = along(EXPAND);
                let fe = eval(&xe);
                simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[dim - 1].1 {
                simplex[dim] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < simplex[dim].1 {
                let xc = along(REFLECT * CONTRACT);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(-CONTRACT);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < simplex[dim].1.min(fr) {
                simplex[dim] = (xc, fc);
                continue;
            }
            let anchor = simplex[0].0.clone();
            for (p, fp) in simplex.iter_mut().skip(1) {
                for (v, a) in p.iter_mut().zip(&anchor) {
                    *v = a + SHRINK * (*v - a);
                }
                *fp = eval(p);
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (point, value) = simplex.swap_remove(0);
        Minimum { point, value, start_value, iterations, evaluations }
    }
}
