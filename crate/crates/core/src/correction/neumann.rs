use nalgebra::{DMatrix, DVector};

use super::{CorrectionError, CorrectionOperator};
use crate::approximation::ElementSpace;

pub const MAX_DEGREE: usize = 8;
const RANK_TOL: f64 = 1e-7;
const RESIDUAL_TOL: f64 = 1e-9;
const COMPATIBILITY_TOL: f64 = 1e-10;

/// Minimum-norm solution of the stacked trace and moment constraints
///
/// ```text
/// w·n (x_q)        = α_q        at every edge quadrature point
/// −∫ ∇φ_σ·w  / h   = r_σ / h    for every DOF
/// ```
///
/// The moment rows always sum to zero, so the system has rank at most
/// `n_trace + ndof − 1`; a space is accepted only when it attains it.
#[derive(Debug, Clone)]
pub struct NeumannSolver {
    a: DMatrix<f64>,
    pinv: DMatrix<f64>,
    h: f64,
    pub degree: usize,
    pub n_trace: usize,
}

impl NeumannSolver {
    pub(super) fn new(space: &ElementSpace, op: &CorrectionOperator) -> Option<Self> {
        let n_trace = op.trace_len();
        let ndof = space.ndof();
        let nb = op.len();
        let h = space.h;
        let mut a = DMatrix::zeros(n_trace + ndof, nb);
        let mut row = 0;
        for t in &op.trace {
            a.view_mut((row, 0), (t.nrows(), nb)).copy_from(t);
            row += t.nrows();
        }
        a.view_mut((row, 0), (ndof, nb)).copy_from(&(&op.moments / h));
        let svd = a.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let eps = RANK_TOL * smax;
        let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
        if rank != n_trace + ndof - 1 {
            return None;
        }
        let pinv = svd.pseudo_inverse(eps).ok()?;
        Some(NeumannSolver { a, pinv, h, degree: op.space.degree, n_trace })
    }

    pub fn solve(&self, element: usize, alpha: &[f64], target: &[f64]) -> Result<Vec<f64>, CorrectionError> {
        let sum: f64 = target.iter().sum();
        let norm = target.iter().map(|t| t * t).sum::<f64>().sqrt();
        let tolerance = COMPATIBILITY_TOL * norm.max(f64::MIN_POSITIVE);
        if sum.abs() > tolerance {
            return Err(CorrectionError::Incompatible { element, sum, tolerance });
        }
        let mut rhs = DVector::zeros(self.a.nrows());
        rhs.rows_mut(0, self.n_trace).copy_from_slice(alpha);
        for (i, t) in target.iter().enumerate() {
            rhs[self.n_trace + i] = t / self.h;
        }
        let mut c = &self.pinv * &rhs;
        let res = &rhs - &self.a * &c;
        c += &self.pinv * res;
        let residual = (&self.a * &c - &rhs).amax();
        let tolerance = RESIDUAL_TOL * rhs.amax().max(1.0);
        if !(residual <= tolerance) {
            return Err(CorrectionError::Infeasible { element, residual, tolerance });
        }
        Ok(c.as_slice().to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Backend, CorrectionOperator};
    use crate::approximation::ElementSpace;
    use crate::mesh::generators;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn compatible_target_on_quad_is_met() {
        let m = generators::perturb_interior(&generators::unit_square_quads(2), 0.25, 8);
        let s = ElementSpace::build(&m, 0, 1).unwrap();
        let op = CorrectionOperator::new(&s, Backend::Neumann).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let alpha: Vec<f64> = (0..op.trace_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut target: Vec<f64> = (0..s.ndof()).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let mean = target.iter().sum::<f64>() / target.len() as f64;
        target.iter_mut().for_each(|t| *t -= mean);
        let f = op.assemble(&alpha, Some(&target)).unwrap();
        // independent re-quadrature of −∫∇φ_σ·∇ψ̃ on a finer rule
        let fine = s.volume_rule(14);
        let n = s.ndof();
        let mut r = vec![0.0; n];
        for (x, w) in fine.points.iter().zip(&fine.weights) {
            let (_, g) = s.eval(x);
            let (v, _) = op.eval(&f, x);
            for i in 0..n {
                r[i] -= w * g[i].dot(&v);
            }
        }
        for i in 0..n {
            assert!((r[i] - target[i]).abs() <= 1e-9, "{} vs {}", r[i], target[i]);
        }
        let rep = op.admissibility(&f, 1.0);
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn incompatible_target_is_an_error() {
        let m = generators::unit_square_quads(1);
        let s = ElementSpace::build(&m, 0, 1).unwrap();
        let op = CorrectionOperator::new(&s, Backend::Neumann).unwrap();
        let alpha = vec![0.0; op.trace_len()];
        let target = vec![1.0, 0.0, 0.0, 0.0];
        assert!(matches!(
            op.assemble(&alpha, Some(&target)),
            Err(super::CorrectionError::Incompatible { .. })
        ));
    }

    #[test]
    fn p1_constant_trace_has_zero_r_sum() {
        let m = generators::unit_square_triangles(1);
        let s = ElementSpace::build(&m, 0, 1).unwrap();
        let op = CorrectionOperator::new(&s, Backend::Neumann).unwrap();
        let f = op.assemble(&vec![1.0; op.trace_len()], None).unwrap();
        assert!(f.r.iter().sum::<f64>().abs() < 1e-14);
    }
}

