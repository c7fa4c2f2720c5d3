//! Data functions: boundary/source data with the partial derivatives the
//! trace norms need, exact solutions for manufactured problems, and helpers
//! for building closed-form fields from separable univariate factors.

use std::sync::Arc;

/// A scalar field that can report its physical partial derivatives up to
/// total order two (what the H^{3/2} trace norms and H^1 volume norms need).
pub trait DataFn: Send + Sync {
    fn eval_deriv(&self, deriv: &[u8; 3], x: &[f64; 3]) -> f64;

    fn eval(&self, x: &[f64; 3]) -> f64 {
        self.eval_deriv(&[0, 0, 0], x)
    }
}

/// The zero function.
pub struct ZeroData;

impl DataFn for ZeroData {
    fn eval_deriv(&self, _deriv: &[u8; 3], _x: &[f64; 3]) -> f64 {
        0.0
    }
}

pub fn zero_data() -> Arc<dyn DataFn> {
    Arc::new(ZeroData)
}

/// A closure with hand-coded derivatives.
pub struct ClosureData(pub Arc<dyn Fn(&[u8; 3], &[f64; 3]) -> f64 + Send + Sync>);

impl DataFn for ClosureData {
    fn eval_deriv(&self, deriv: &[u8; 3], x: &[f64; 3]) -> f64 {
        (self.0)(deriv, x)
    }
}

/// Linear combination of data functions with constant coefficients.
pub struct ComboData {
    pub terms: Vec<(Arc<dyn DataFn>, f64)>,
}

impl DataFn for ComboData {
    fn eval_deriv(&self, deriv: &[u8; 3], x: &[f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|(f, c)| c * f.eval_deriv(deriv, x))
            .sum()
    }
}

pub type ScalarField = Arc<dyn Fn(&[u8; 3], &[f64; 3]) -> f64 + Send + Sync>;

/// Closed-form exact solution (u, p) with derivatives to total order two.
#[derive(Clone)]
pub struct ExactSolution {
    pub dim: usize,
    pub velocity: Vec<ScalarField>,
    pub pressure: ScalarField,
}

impl ExactSolution {
    /// Field by solver index: 0..dim-1 velocity components, dim pressure.
    pub fn field(&self, f: usize) -> &ScalarField {
        if f < self.dim {
            &self.velocity[f]
        } else {
            &self.pressure
        }
    }

    /// Max |div u| over a deterministic sample of points in [lo, hi].
    pub fn max_divergence(&self, lo: &[f64; 3], hi: &[f64; 3], n_points: usize) -> f64 {
        let mut worst: f64 = 0.0;
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..n_points {
            let mut x = [0.0; 3];
            for a in 0..self.dim {
                x[a] = lo[a] + (hi[a] - lo[a]) * next();
            }
            let mut div = 0.0;
            for a in 0..self.dim {
                let mut d = [0u8; 3];
                d[a] = 1;
                div += (self.velocity[a])(&d, &x);
            }
            worst = worst.max(div.abs());
        }
        worst
    }
}

/// Target obtained by applying a constant-coefficient derivative operator to
/// the exact solution: sum_k c_k D^{alpha_k + delta} field_k.
pub struct OperatorOnExact {
    pub exact: Arc<ExactSolution>,
    /// (field index, derivative multi-index, coefficient)
    pub parts: Vec<(usize, [u8; 3], f64)>,
}

impl DataFn for OperatorOnExact {
    fn eval_deriv(&self, deriv: &[u8; 3], x: &[f64; 3]) -> f64 {
        let mut acc = 0.0;
        for (field, alpha, coeff) in &self.parts {
            let d = [
                alpha[0] + deriv[0],
                alpha[1] + deriv[1],
                alpha[2] + deriv[2],
            ];
            acc += coeff * (self.exact.field(*field))(&d, x);
        }
        acc
    }
}

/// Univariate factor with derivatives: (order, t) -> value.
pub type Uni = Arc<dyn Fn(u8, f64) -> f64 + Send + Sync>;

/// Polynomial sum_k c_k t^k differentiated by the power rule.
pub fn poly1(coeffs: &[f64]) -> Uni {
    let c = coeffs.to_vec();
    Arc::new(move |order, t| {
        let mut acc = 0.0;
        for (k, &ck) in c.iter().enumerate() {
            if (k as u8) < order {
                continue;
            }
            let mut fac = 1.0;
            for j in 0..order {
                fac *= (k as u8 - j) as f64;
            }
            acc += ck * fac * t.powi(k as i32 - order as i32);
        }
        acc
    })
}

/// d^n/dt^n sin(pi t) = pi^n sin(pi t + n pi/2).
pub fn sin_pi() -> Uni {
    Arc::new(|order, t| {
        let pi = std::f64::consts::PI;
        pi.powi(order as i32) * (pi * t + order as f64 * pi / 2.0).sin()
    })
}

pub fn cos_pi() -> Uni {
    Arc::new(|order, t| {
        let pi = std::f64::consts::PI;
        pi.powi(order as i32) * (pi * t + order as f64 * pi / 2.0).cos()
    })
}

pub fn one() -> Uni {
    Arc::new(|order, _| if order == 0 { 1.0 } else { 0.0 })
}

/// Sum of separable products c * f0(x1) f1(x2) f2(x3); partial derivatives
/// factor per axis.
pub fn separable(terms: Vec<(f64, [Uni; 3])>) -> ScalarField {
    Arc::new(move |deriv, x| {
        terms
            .iter()
            .map(|(c, f)| c * f[0](deriv[0], x[0]) * f[1](deriv[1], x[1]) * f[2](deriv[2], x[2]))
            .sum()
    })
}

pub fn separable2(terms: Vec<(f64, Uni, Uni)>) -> ScalarField {
    separable(
        terms
            .into_iter()
            .map(|(c, a, b)| (c, [a, b, one()]))
            .collect(),
    )
}
