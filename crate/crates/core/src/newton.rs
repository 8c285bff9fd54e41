//! Damped Newton iteration for 2 x 2 systems.

pub type Mat2 = [[f64; 2]; 2];

pub(crate) fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Solves `m x = rhs` by Cramer's rule; `None` when `m` is singular.
pub(crate) fn solve2(m: &Mat2, rhs: [f64; 2]) -> Option<[f64; 2]> {
    let det = det2(m);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let x = [
        (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det,
        (m[0][0] * rhs[1] - rhs[0] * m[1][0]) / det,
    ];
    (x[0].is_finite() && x[1].is_finite()).then_some(x)
}

pub(crate) fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct NewtonSettings {
    pub tol: f64,
    pub max_iter: usize,
    /// Step-halving limit of the backtracking line search.
    pub max_halvings: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct NewtonOutcome {
    pub x: [f64; 2],
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `system(x)` returns the residual and its Jacobian, or `None` if the point
/// cannot be evaluated. Each step is halved until the residual norm drops.
/// Once the tolerance is met one more full step is tried and kept only if it
/// does not increase the residual, which usually lands at rounding level.
pub(crate) fn damped_newton<F>(mut system: F, x0: [f64; 2], settings: &NewtonSettings) -> NewtonOutcome
where
    F: FnMut([f64; 2]) -> Option<([f64; 2], Mat2)>,
{
    let finite = |f: &[f64; 2]| f[0].is_finite() && f[1].is_finite();
    let mut x = x0;
    let Some((mut f, mut jac)) = system(x).filter(|(f, _)| finite(f)) else {
        return NewtonOutcome {
            x,
            residual_norm: f64::INFINITY,
            iterations: 0,
            converged: false,
        };
    };
    let mut norm = norm2(f);

    for iter in 0..settings.max_iter {
        if norm <= settings.tol {
            if let Some(step) = solve2(&jac, [-f[0], -f[1]]) {
                let trial = [x[0] + step[0], x[1] + step[1]];
                if let Some((ft, _)) = system(trial).filter(|(f, _)| finite(f)) {
                    if norm2(ft) <= norm {
                        x = trial;
                        norm = norm2(ft);
                    }
                }
            }
            return NewtonOutcome {
                x,
                residual_norm: norm,
                iterations: iter,
                converged: true,
            };
        }

        let Some(step) = solve2(&jac, [-f[0], -f[1]]) else {
            break;
        };
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=settings.max_halvings {
            let trial = [x[0] + lambda * step[0], x[1] + lambda * step[1]];
            if let Some((ft, jt)) = system(trial).filter(|(f, _)| finite(f)) {
                if norm2(ft) < norm {
                    accepted = Some((trial, ft, jt));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((xn, fnew, jn)) = accepted else {
            break;
        };
        x = xn;
        f = fnew;
        jac = jn;
        norm = norm2(f);
    }

    NewtonOutcome {
        x,
        residual_norm: norm,
        iterations: settings.max_iter,
        converged: norm <= settings.tol,
    }
}
