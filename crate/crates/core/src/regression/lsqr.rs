//! LSQR (Paige & Saunders) for `min ‖b − Ax‖` with a matrix-free operator.

pub trait Operator {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn apply(&self, v: &[f64]) -> Vec<f64>;
    fn apply_t(&self, u: &[f64]) -> Vec<f64>;
    fn frobenius_sq(&self) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsqrOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn scale(v: &mut [f64], s: f64) {
    v.iter_mut().for_each(|x| *x *= s);
}

/// Exact `min(‖r‖/‖b‖, ‖Aᵀr‖/(‖A‖_F‖r‖))` for the current iterate.
fn measure<A: Operator>(a: &A, b: &[f64], x: &[f64], a_norm: f64) -> f64 {
    let ax = a.apply(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(b, y)| b - y).collect();
    let r_norm = norm(&r);
    let b_norm = norm(b);
    if r_norm == 0.0 || b_norm == 0.0 {
        return 0.0;
    }
    let atr = norm(&a.apply_t(&r));
    (r_norm / b_norm).min(atr / (a_norm * r_norm))
}

pub fn lsqr<A: Operator>(a: &A, b: &[f64], tol: f64, max_iter: usize) -> LsqrOutcome {
    let n = a.cols();
    let mut x = vec![0.0; n];
    let a_norm = a.frobenius_sq().sqrt();
    let mut u = b.to_vec();
    let mut beta = norm(&u);
    if beta == 0.0 || a_norm == 0.0 {
        return LsqrOutcome {
            x,
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    scale(&mut u, 1.0 / beta);
    let mut v = a.apply_t(&u);
    let mut alpha = norm(&v);
    if alpha == 0.0 {
        return LsqrOutcome {
            x,
            iterations: 0,
            relative_residual: 1.0,
            converged: true,
        };
    }
    scale(&mut v, 1.0 / alpha);
    let mut w = v.clone();
    let mut phi_bar = beta;
    let mut rho_bar = alpha;
    let b_norm = beta;

    let mut it = 0;
    let mut rel = f64::INFINITY;
    while it < max_iter {
        it += 1;
        // bidiagonalization
        let av = a.apply(&v);
        for (ui, ai) in u.iter_mut().zip(&av) {
            *ui = ai - alpha * *ui;
        }
        beta = norm(&u);
        if beta > 0.0 {
            scale(&mut u, 1.0 / beta);
            let atu = a.apply_t(&u);
            for (vi, ai) in v.iter_mut().zip(&atu) {
                *vi = ai - beta * *vi;
            }
            alpha = norm(&v);
            if alpha > 0.0 {
                scale(&mut v, 1.0 / alpha);
            }
        }
        // plane rotation
        let rho = rho_bar.hypot(beta);
        let c = rho_bar / rho;
        let s = beta / rho;
        let theta = s * alpha;
        rho_bar = -c * alpha;
        let phi = c * phi_bar;
        phi_bar *= s;
        let t1 = phi / rho;
        let t2 = -theta / rho;
        for ((xi, wi), vi) in x.iter_mut().zip(w.iter_mut()).zip(&v) {
            *xi += t1 * *wi;
            *wi = vi + t2 * *wi;
        }
        // recurrence estimates; confirmed exactly before stopping
        let r_est = phi_bar;
        let atr_est = phi_bar * alpha * c.abs();
        let est = if r_est == 0.0 {
            0.0
        } else {
            (r_est / b_norm).min(atr_est / (a_norm * r_est))
        };
        if est <= tol || alpha == 0.0 || beta == 0.0 {
            rel = measure(a, b, &x, a_norm);
            if rel <= tol || alpha == 0.0 || beta == 0.0 {
                break;
            }
        }
    }
    if !rel.is_finite() || it == max_iter {
        rel = measure(a, b, &x, a_norm);
    }
    LsqrOutcome {
        x,
        iterations: it,
        relative_residual: rel,
        converged: rel <= tol,
    }
}
