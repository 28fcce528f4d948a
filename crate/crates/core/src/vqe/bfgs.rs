//! Quasi-Newton minimizer: BFGS with a strong-Wolfe line search and
//! central-difference gradients.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug)]
pub struct BfgsOptions {
    /// Stop when the gradient infinity-norm drops below this.
    pub gtol: f64,
    pub max_iter: usize,
    /// Central-difference step for the gradient.
    pub fd_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            gtol: 1e-8,
            max_iter: 5000,
            fd_step: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    /// Outer quasi-Newton iterations performed.
    pub iterations: usize,
    pub converged: bool,
}

const WOLFE_C1: f64 = 1e-4;
const WOLFE_C2: f64 = 0.9;

/// Central finite-difference gradient.
pub fn fd_gradient<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], step: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + step;
        let fp = f(&probe);
        probe[i] = orig - step;
        let fm = f(&probe);
        probe[i] = orig;
        g[i] = (fp - fm) / (2.0 * step);
    }
    g
}

/// Minimize `f` from `x0`. The objective must be smooth; gradients are taken
/// by central differences.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    opts: &BfgsOptions,
) -> BfgsOutcome {
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let mut fx = f(x.as_slice());
    if n == 0 {
        return BfgsOutcome {
            x: vec![],
            f: fx,
            iterations: 0,
            converged: true,
        };
    }
    let mut grad = DVector::from_vec(fd_gradient(&mut f, x.as_slice(), opts.fd_step));
    let mut h_inv = DMatrix::<f64>::identity(n, n);
    let mut iterations = 0;
    let mut converged = grad.amax() <= opts.gtol;

    while !converged && iterations < opts.max_iter {
        let direction = -(&h_inv * &grad);
        let slope = grad.dot(&direction);
        if slope >= 0.0 {
            // not a descent direction (stale curvature); reset
            h_inv = DMatrix::identity(n, n);
            iterations += 1;
            let direction = -grad.clone();
            match line_search(&mut f, &x, fx, &grad, &direction, opts) {
                Some((alpha, f_new, g_new)) => {
                    let step = alpha * &direction;
                    x += &step;
                    fx = f_new;
                    grad = g_new;
                }
                None => break,
            }
            converged = grad.amax() <= opts.gtol;
            continue;
        }
        let (alpha, f_new, g_new) = match line_search(&mut f, &x, fx, &grad, &direction, opts) {
            Some(found) => found,
            None => break,
        };
        let step = alpha * &direction;
        let x_new = &x + &step;
        let y = &g_new - &grad;
        let sy = step.dot(&y);
        if sy > 1e-12 * step.norm() * y.norm() {
            // standard BFGS inverse update
            let rho = 1.0 / sy;
            let sy_outer = &step * y.transpose();
            let identity = DMatrix::identity(n, n);
            let left = &identity - rho * &sy_outer;
            let right = &identity - rho * sy_outer.transpose();
            h_inv = left * h_inv * right + rho * (&step * step.transpose());
        }
        x = x_new;
        fx = f_new;
        grad = g_new;
        iterations += 1;
        converged = grad.amax() <= opts.gtol;
    }

    BfgsOutcome {
        x: x.as_slice().to_vec(),
        f: fx,
        iterations,
        converged,
    }
}

type SearchPoint = (f64, f64, DVector<f64>);

/// Strong-Wolfe line search (bracket + zoom). Returns (alpha, f, grad) or
/// `None` when no acceptable step exists at working precision.
fn line_search<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x: &DVector<f64>,
    f0: f64,
    g0: &DVector<f64>,
    direction: &DVector<f64>,
    opts: &BfgsOptions,
) -> Option<SearchPoint> {
    let slope0 = g0.dot(direction);
    debug_assert!(slope0 < 0.0);
    let mut eval = |alpha: f64| -> (f64, DVector<f64>, f64) {
        let xt = x + alpha * direction;
        let ft = f(xt.as_slice());
        let gt = DVector::from_vec(fd_gradient(f, xt.as_slice(), opts.fd_step));
        let st = gt.dot(direction);
        (ft, gt, st)
    };

    let mut alpha_prev = 0.0;
    let mut f_prev = f0;
    let mut slope_prev = slope0;
    let mut alpha = 1.0f64;
    let alpha_max = 64.0;

    for _ in 0..20 {
        let (ft, gt, st) = eval(alpha);
        if ft > f0 + WOLFE_C1 * alpha * slope0 || (alpha_prev > 0.0 && ft >= f_prev) {
            return zoom(
                f, x, f0, slope0, direction, opts, alpha_prev, f_prev, slope_prev, alpha, ft,
            );
        }
        if st.abs() <= -WOLFE_C2 * slope0 {
            return Some((alpha, ft, gt));
        }
        if st >= 0.0 {
            return zoom(
                f, x, f0, slope0, direction, opts, alpha, ft, st, alpha_prev, f_prev,
            );
        }
        alpha_prev = alpha;
        f_prev = ft;
        slope_prev = st;
        alpha = (2.0 * alpha).min(alpha_max);
        if alpha >= alpha_max {
            let (ft, gt, _) = eval(alpha_max);
            if ft < f0 {
                return Some((alpha_max, ft, gt));
            }
            return None;
        }
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn zoom<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x: &DVector<f64>,
    f0: f64,
    slope0: f64,
    direction: &DVector<f64>,
    opts: &BfgsOptions,
    mut lo: f64,
    mut f_lo: f64,
    mut slope_lo: f64,
    mut hi: f64,
    mut f_hi: f64,
) -> Option<SearchPoint> {
    let mut eval = |alpha: f64| -> (f64, DVector<f64>, f64) {
        let xt = x + alpha * direction;
        let ft = f(xt.as_slice());
        let gt = DVector::from_vec(fd_gradient(f, xt.as_slice(), opts.fd_step));
        let st = gt.dot(direction);
        (ft, gt, st)
    };
    for _ in 0..40 {
        // quadratic interpolation, safeguarded by bisection
        let width = hi - lo;
        let denom = 2.0 * (f_hi - f_lo - slope_lo * width);
        let mut alpha = if denom.abs() > 1e-300 {
            lo - slope_lo * width * width / denom
        } else {
            lo + 0.5 * width
        };
        let (a, b) = (lo.min(hi), lo.max(hi));
        let margin = 0.1 * (b - a);
        if !(a + margin..=b - margin).contains(&alpha) || !alpha.is_finite() {
            alpha = lo + 0.5 * width;
        }
        if (hi - lo).abs() < 1e-14 {
            break;
        }
        let (ft, gt, st) = eval(alpha);
        if ft > f0 + WOLFE_C1 * alpha * slope0 || ft >= f_lo {
            hi = alpha;
            f_hi = ft;
        } else {
            if st.abs() <= -WOLFE_C2 * slope0 {
                return Some((alpha, ft, gt));
            }
            if st * (hi - lo) >= 0.0 {
                hi = lo;
                f_hi = f_lo;
            }
            lo = alpha;
            f_lo = ft;
            slope_lo = st;
        }
    }
    // fall back to the best bracketed point if it improves on f0
    let alpha = lo;
    if alpha > 0.0 && f_lo < f0 {
        let xt = x + alpha * direction;
        let ft = f(xt.as_slice());
        let gt = DVector::from_vec(fd_gradient(f, xt.as_slice(), opts.fd_step));
        return Some((alpha, ft, gt));
    }
    None
}
