use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{default_rank_tol, qr_lstsq_with_tol, thin_svd, Cholesky, DenseMatrix, DenseVector};
use crate::samplers::BlockSample;

/// Mass matrix `M(A_S)` of the generalized update
/// `x' = x + A_S^T M(A_S) (b_S - A_S x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum MassMatrixKind {
    /// `M = (A_S A_S^T)^+`; the update projects onto the block's solution set.
    #[serde(rename = "rbk")]
    Rbk {
        /// Relative singular-value cutoff for `A_S^+`; `None` uses the default.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rank_tol: Option<f64>,
    },
    /// `M = (A_S A_S^T + lambda k I)^{-1}`; a proximal step of strength `lambda k`.
    #[serde(rename = "reblock")]
    ReBlocK { lambda: f64 },
    /// `M = (eta / k) I`; minibatch gradient descent.
    #[serde(rename = "msgd")]
    MSgd { step_size: f64 },
}

/// Suggested regularization for ReBlocK.
pub const DEFAULT_LAMBDA: f64 = 1e-3;

impl MassMatrixKind {
    pub fn rbk() -> Self {
        MassMatrixKind::Rbk { rank_tol: None }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MassMatrixKind::Rbk { .. } => "rbk",
            MassMatrixKind::ReBlocK { .. } => "reblock",
            MassMatrixKind::MSgd { .. } => "msgd",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MassMatrixKind::Rbk { rank_tol: Some(t) } if !(t.is_finite() && t >= 0.0) => {
                Err(Error::param("rbk rank_tol must be finite and non-negative"))
            }
            MassMatrixKind::ReBlocK { lambda } if !(lambda.is_finite() && lambda > 0.0) => {
                Err(Error::param(format!("reblock lambda must be positive, got {lambda}")))
            }
            MassMatrixKind::MSgd { step_size } if !(step_size.is_finite() && step_size > 0.0) => {
                Err(Error::param(format!("msgd step size must be positive, got {step_size}")))
            }
            _ => Ok(()),
        }
    }

    fn rank_tol(&self, a_block: &DenseMatrix) -> f64 {
        match *self {
            MassMatrixKind::Rbk { rank_tol: Some(t) } => t,
            _ => default_rank_tol(a_block.rows(), a_block.cols()),
        }
    }

    /// `A_S^T M(A_S) r` for a block residual `r`.
    pub fn update_direction(&self, a_block: &DenseMatrix, r: &DenseVector) -> Result<DenseVector> {
        if r.len() != a_block.rows() {
            return Err(Error::dims(
                "update_direction",
                format!("block is {}x{}, residual length {}", a_block.rows(), a_block.cols(), r.len()),
            ));
        }
        match *self {
            MassMatrixKind::Rbk { .. } => qr_lstsq_with_tol(a_block, r, self.rank_tol(a_block)),
            MassMatrixKind::ReBlocK { lambda } => {
                let mut g = a_block.gram_rows();
                g.add_to_diagonal(lambda * a_block.rows() as f64);
                let c = Cholesky::factor(&g)?.solve(r);
                Ok(a_block.tr_mul_vec(&c))
            }
            MassMatrixKind::MSgd { step_size } => {
                Ok(a_block.tr_mul_vec(r).scaled(step_size / a_block.rows() as f64))
            }
        }
    }

    /// The `k x k` mass matrix itself.
    pub fn mass_matrix(&self, a_block: &DenseMatrix) -> Result<DenseMatrix> {
        let k = a_block.rows();
        match *self {
            MassMatrixKind::Rbk { .. } => {
                // (A_S A_S^T)^+ = U_r S_r^{-2} U_r^T
                let (u, s, _) = thin_svd(a_block)?;
                let rank = crate::linalg::numerical_rank(&s, self.rank_tol(a_block));
                let mut m = DenseMatrix::zeros(k, k);
                for i in 0..k {
                    for j in 0..=i {
                        let v: f64 = (0..rank).map(|l| u[(i, l)] * u[(j, l)] / (s[l] * s[l])).sum();
                        m[(i, j)] = v;
                        m[(j, i)] = v;
                    }
                }
                Ok(m)
            }
            MassMatrixKind::ReBlocK { lambda } => {
                let mut g = a_block.gram_rows();
                g.add_to_diagonal(lambda * k as f64);
                Ok(Cholesky::factor(&g)?.inverse())
            }
            MassMatrixKind::MSgd { step_size } => Ok(DenseMatrix::identity(k).scaled(step_size / k as f64)),
        }
    }

    /// `P(S) = A_S^T M(A_S) A_S`, the expected-contraction operator of one step.
    pub fn update_operator(&self, a_block: &DenseMatrix) -> Result<DenseMatrix> {
        let n = a_block.cols();
        if let MassMatrixKind::Rbk { .. } = self {
            // Orthogonal projector onto the block's row space.
            let (_, s, vt) = thin_svd(a_block)?;
            let rank = crate::linalg::numerical_rank(&s, self.rank_tol(a_block));
            let mut p = DenseMatrix::zeros(n, n);
            for l in 0..rank {
                let v = vt.row(l);
                for i in 0..n {
                    for j in 0..n {
                        p[(i, j)] += v[i] * v[j];
                    }
                }
            }
            return Ok(p);
        }
        let m = self.mass_matrix(a_block)?;
        let ma = m.matmul(a_block)?;
        let mut p = a_block.transpose().matmul(&ma)?;
        p.symmetrize();
        Ok(p)
    }
}

/// `x + A_S^T M(A_S) (b_S - A_S x)`
pub fn apply_update(x: &DenseVector, block: &BlockSample, mass: &MassMatrixKind) -> Result<DenseVector> {
    let a = &block.a_block;
    if x.len() != a.cols() || block.b_block.len() != a.rows() {
        return Err(Error::dims(
            "apply_update",
            format!(
                "block is {}x{}, b_S length {}, x length {}",
                a.rows(),
                a.cols(),
                block.b_block.len(),
                x.len()
            ),
        ));
    }
    let r = a.residual(x, &block.b_block);
    let d = mass.update_direction(a, &r)?;
    Ok(x.add(&d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(rows: &[Vec<f64>], b: &[f64]) -> BlockSample {
        BlockSample {
            indices: None,
            a_block: DenseMatrix::from_rows(rows),
            b_block: DenseVector::from_vec(b.to_vec()),
        }
    }

    #[test]
    fn rbk_hits_intersection_of_two_lines() {
        let blk = block(&[vec![1.0, 1.0], vec![1.0, -1.0]], &[2.0, 0.0]);
        let x = apply_update(&DenseVector::zeros(2), &blk, &MassMatrixKind::rbk()).unwrap();
        assert!(x.distance(&DenseVector::from_vec(vec![1.0, 1.0])) < 1e-14);
    }

    #[test]
    fn reblock_approaches_msgd_for_large_lambda() {
        let blk = block(&[vec![1.0, 2.0, 0.5], vec![-1.0, 0.3, 2.0]], &[1.0, -2.0]);
        let x0 = DenseVector::from_vec(vec![0.2, -0.1, 0.4]);
        let lambda = 1e8;
        let xr = apply_update(&x0, &blk, &MassMatrixKind::ReBlocK { lambda }).unwrap();
        let xs = apply_update(&x0, &blk, &MassMatrixKind::MSgd { step_size: 1.0 / lambda }).unwrap();
        let dr = xr.sub(&x0);
        let ds = xs.sub(&x0);
        assert!(dr.distance(&ds) <= 1e-6 * ds.norm());
    }

    #[test]
    fn invalid_parameters() {
        assert!(MassMatrixKind::ReBlocK { lambda: 0.0 }.validate().is_err());
        assert!(MassMatrixKind::MSgd { step_size: -1.0 }.validate().is_err());
        assert!(MassMatrixKind::rbk().validate().is_ok());
    }

    #[test]
    fn operator_matches_mass_form() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0, 0.5], vec![-1.0, 0.3, 2.0]]);
        for mass in [MassMatrixKind::rbk(), MassMatrixKind::ReBlocK { lambda: 0.1 }] {
            let m = mass.mass_matrix(&a).unwrap();
            let direct = a.transpose().matmul(&m.matmul(&a).unwrap()).unwrap();
            assert!(direct.sub(&mass.update_operator(&a).unwrap()).max_abs() < 1e-12);
        }
    }

    #[test]
    fn serde_names() {
        let s = serde_json::to_string(&MassMatrixKind::ReBlocK { lambda: 0.5 }).unwrap();
        assert_eq!(s, r#"{"kind":"reblock","lambda":0.5}"#);
        let m: MassMatrixKind = serde_json::from_str(r#"{"kind":"rbk"}"#).unwrap();
        assert_eq!(m, MassMatrixKind::rbk());
    }
}
