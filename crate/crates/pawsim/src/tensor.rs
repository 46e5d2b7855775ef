//! Dense complex linear algebra over small Hilbert spaces.
//!
//! Everything here is built for spaces of dimension ≲ 32: operators are dense
//! `DMatrix<Complex64>` wrappers, eigendecompositions are full Hermitian
//! solves, and matrix exponentials go through the spectral decomposition so
//! the eigenvector data can be reused across a whole time grid.
//!
//! Tensor ordering is fixed once and for all: the leftmost factor is the
//! slowest-varying index, so `A ⊗ B` applied to `v ⊗ w` gives `Av ⊗ Bw` with
//! the first factor owning the most significant digit of the flat index.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative tolerance for Hermiticity checks: max|O − O†| ≤ tol · max|O|.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Tolerance for unitarity checks: max|U†U − 1| ≤ tol.
pub const UNITARITY_TOL: f64 = 1e-10;
/// Eigenvalues closer than this (relative to the spectral norm) are treated
/// as degenerate.
pub const DEGENERACY_REL_TOL: f64 = 1e-9;
/// Default kernel tolerance, relative to the spectral norm.
pub const KERNEL_REL_TOL: f64 = 1e-9;

/// A dense complex operator on a small Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    mat: CMatrix,
}

impl DenseOperator {
    /// Wraps a square matrix.
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                context: "DenseOperator::new (matrix must be square)",
                expected: mat.nrows(),
                actual: mat.ncols(),
            });
        }
        Ok(Self { mat })
    }

    /// Builds a `dim × dim` operator from row-major complex entries.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                context: "DenseOperator::from_rows",
                expected: dim * dim,
                actual: entries.len(),
            });
        }
        Ok(Self {
            mat: CMatrix::from_row_slice(dim, dim, entries),
        })
    }

    /// Builds an operator from row-major real entries.
    pub fn from_real_rows(dim: usize, entries: &[f64]) -> Result<Self> {
        let complex: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_rows(dim, &complex)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: CMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: CMatrix::zeros(dim, dim),
        }
    }

    /// Diagonal operator with real entries.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut mat = CMatrix::zeros(diag.len(), diag.len());
        for (k, &d) in diag.iter().enumerate() {
            mat[(k, k)] = C64::new(d, 0.0);
        }
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.mat.diagonal().sum()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    /// Spectral (operator 2-) norm, computed as √λ_max(O†O).
    pub fn spectral_norm(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        let gram = self.mat.adjoint() * &self.mat;
        let eig = gram.symmetric_eigen();
        eig.eigenvalues
            .iter()
            .fold(0.0f64, |acc, &l| acc.max(l.max(0.0)))
            .sqrt()
    }

    /// max|O − O†|, the absolute Hermiticity defect.
    pub fn hermiticity_defect(&self) -> f64 {
        let adj = self.mat.adjoint();
        (&self.mat - adj).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// True iff max|O − O†| ≤ `HERMITICITY_TOL` · max|O|.
    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= HERMITICITY_TOL * self.max_abs().max(f64::MIN_POSITIVE)
    }

    fn ensure_hermitian(&self, context: &'static str) -> Result<()> {
        let defect = self.hermiticity_defect();
        let tol = HERMITICITY_TOL * self.max_abs().max(f64::MIN_POSITIVE);
        if defect > tol {
            let _ = context;
            return Err(Error::NotHermitian { defect, tol });
        }
        Ok(())
    }

    /// True iff max|U†U − 1| ≤ `UNITARITY_TOL`.
    pub fn is_unitary(&self) -> bool {
        let gram = self.mat.adjoint() * &self.mat;
        let id = CMatrix::identity(self.dim(), self.dim());
        (gram - id).iter().map(|z| z.norm()).fold(0.0, f64::max) <= UNITARITY_TOL
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &DenseOperator) -> DenseOperator {
        assert_eq!(self.dim(), other.dim(), "matmul: dimension mismatch");
        DenseOperator {
            mat: &self.mat * &other.mat,
        }
    }

    pub fn add(&self, other: &DenseOperator) -> DenseOperator {
        assert_eq!(self.dim(), other.dim(), "add: dimension mismatch");
        DenseOperator {
            mat: &self.mat + &other.mat,
        }
    }

    pub fn sub(&self, other: &DenseOperator) -> DenseOperator {
        assert_eq!(self.dim(), other.dim(), "sub: dimension mismatch");
        DenseOperator {
            mat: &self.mat - &other.mat,
        }
    }

    pub fn scale(&self, factor: f64) -> DenseOperator {
        DenseOperator {
            mat: &self.mat * C64::new(factor, 0.0),
        }
    }

    pub fn scale_complex(&self, factor: C64) -> DenseOperator {
        DenseOperator {
            mat: &self.mat * factor,
        }
    }

    /// Commutator [self, other].
    pub fn commutator(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator {
            mat: &self.mat * &other.mat - &other.mat * &self.mat,
        }
    }

    /// Applies the operator to a state.
    pub fn apply(&self, v: &StateVector) -> StateVector {
        assert_eq!(self.dim(), v.dim(), "apply: dimension mismatch");
        StateVector {
            vec: &self.mat * v.vector(),
        }
    }

    /// ⟨v|O|v⟩.
    pub fn expectation(&self, v: &StateVector) -> C64 {
        let ov = &self.mat * v.vector();
        v.vector().dotc(&ov)
    }

    /// Kronecker product with the fixed ordering (first factor slowest).
    pub fn tensor(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator {
            mat: self.mat.kronecker(&other.mat),
        }
    }

    /// Full eigendecomposition of a Hermitian operator, eigenvalues ascending.
    pub fn eig_hermitian(&self) -> Result<SpectralDecomposition> {
        self.ensure_hermitian("eig_hermitian")?;
        let se = self.mat.clone().symmetric_eigen();
        let dim = self.dim();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
        let eigenvalues: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
        let eigenvectors: Vec<StateVector> = order
            .iter()
            .map(|&k| StateVector {
                vec: se.eigenvectors.column(k).into_owned(),
            })
            .collect();
        Ok(SpectralDecomposition {
            eigenvalues,
            eigenvectors,
        })
    }

    /// Orthonormal basis of the numerical kernel: every eigenvector whose
    /// eigenvalue magnitude is ≤ `tol` · ‖O‖. An empty list is a valid result.
    pub fn kernel(&self, tol: f64) -> Result<Vec<StateVector>> {
        let spec = self.eig_hermitian()?;
        let scale = spec.spectral_norm();
        Ok(spec
            .eigenvalues
            .iter()
            .zip(spec.eigenvectors.iter())
            .filter(|(l, _)| l.abs() <= tol * scale.max(f64::MIN_POSITIVE))
            .map(|(_, v)| v.clone())
            .collect())
    }

    /// Unitary e^{−iOt} for Hermitian O (ħ = 1), via the spectral
    /// decomposition.
    pub fn evolve(&self, t: f64) -> Result<DenseOperator> {
        Ok(self.eig_hermitian()?.evolution(t))
    }

    /// Partial trace over the factors not listed in `keep`.
    ///
    /// `dims` are the factor dimensions in tensor order (first = slowest
    /// index); `keep` lists the factor positions retained, in ascending order.
    pub fn partial_trace(&self, dims: &[usize], keep: &[usize]) -> Result<DenseOperator> {
        let total: usize = dims.iter().product();
        if total != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "partial_trace (product of dims must equal operator dim)",
                expected: self.dim(),
                actual: total,
            });
        }
        for &k in keep {
            if k >= dims.len() {
                return Err(Error::SiteOutOfRange {
                    index: k,
                    sites: dims.len(),
                });
            }
        }
        let mut keep_sorted = keep.to_vec();
        keep_sorted.sort_unstable();
        keep_sorted.dedup();
        let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep_sorted.contains(i)).collect();
        let d_keep: usize = keep_sorted.iter().map(|&i| dims[i]).product();
        let d_trace: usize = traced.iter().map(|&i| dims[i]).product::<usize>().max(1);

        // flat index of the full space from (kept multi-index, traced multi-index)
        let flat = |kidx: usize, tidx: usize| -> usize {
            let mut rem_k = kidx;
            let mut rem_t = tidx;
            let mut digits = vec![0usize; dims.len()];
            for &i in keep_sorted.iter().rev() {
                digits[i] = rem_k % dims[i];
                rem_k /= dims[i];
            }
            for &i in traced.iter().rev() {
                digits[i] = rem_t % dims[i];
                rem_t /= dims[i];
            }
            digits.iter().zip(dims.iter()).fold(0, |acc, (&d, &n)| acc * n + d)
        };

        let mut out = CMatrix::zeros(d_keep, d_keep);
        for i in 0..d_keep {
            for j in 0..d_keep {
                let mut acc = C64::new(0.0, 0.0);
                for t in 0..d_trace {
                    acc += self.mat[(flat(i, t), flat(j, t))];
                }
                out[(i, j)] = acc;
            }
        }
        Ok(DenseOperator { mat: out })
    }
}

/// Embeds `op` on factor `site` of a product space with factor dimensions
/// `dims`, i.e. builds 1 ⊗ … ⊗ op ⊗ … ⊗ 1 in the network ordering.
pub fn embed_local(op: &DenseOperator, site: usize, dims: &[usize]) -> Result<DenseOperator> {
    if site >= dims.len() {
        return Err(Error::SiteOutOfRange {
            index: site,
            sites: dims.len(),
        });
    }
    if dims[site] != op.dim() {
        return Err(Error::DimensionMismatch {
            context: "embed_local (dims[site] must equal operator dim)",
            expected: dims[site],
            actual: op.dim(),
        });
    }
    let d_left: usize = dims[..site].iter().product();
    let d_right: usize = dims[site + 1..].iter().product();
    let mut out = DenseOperator::identity(d_left);
    out = out.tensor(op);
    Ok(out.tensor(&DenseOperator::identity(d_right)))
}

/// Convenience free function mirroring [`DenseOperator::tensor`].
pub fn tensor_product(a: &DenseOperator, b: &DenseOperator) -> DenseOperator {
    a.tensor(b)
}

/// A complex state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    vec: CVector,
}

impl StateVector {
    pub fn new(vec: CVector) -> Self {
        Self { vec }
    }

    pub fn from_slice(amps: &[C64]) -> Self {
        Self {
            vec: CVector::from_row_slice(amps),
        }
    }

    /// Computational basis vector e_k.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut vec = CVector::zeros(dim);
        vec[k] = C64::new(1.0, 0.0);
        Self { vec }
    }

    pub fn dim(&self) -> usize {
        self.vec.len()
    }

    pub fn vector(&self) -> &CVector {
        &self.vec
    }

    pub fn norm(&self) -> f64 {
        self.vec.norm()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-12
    }

    pub fn normalized(&self) -> Result<StateVector> {
        let n = self.norm();
        if n <= f64::MIN_POSITIVE {
            return Err(Error::ZeroVector);
        }
        Ok(StateVector {
            vec: &self.vec / C64::new(n, 0.0),
        })
    }

    /// ⟨self|other⟩, conjugate-linear in `self`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.vec.dotc(&other.vec)
    }

    /// |⟨self|other⟩| for normalized states: global-phase-invariant overlap.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm()
    }

    /// |self⟩⟨other|.
    pub fn outer(&self, other: &StateVector) -> DenseOperator {
        let dim = self.dim();
        let mut mat = CMatrix::zeros(dim, other.dim());
        for i in 0..dim {
            for j in 0..other.dim() {
                mat[(i, j)] = self.vec[i] * other.vec[j].conj();
            }
        }
        DenseOperator { mat }
    }

    /// Projector |self⟩⟨self|.
    pub fn projector(&self) -> DenseOperator {
        self.outer(self)
    }

    /// Tensor product, first factor slowest.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut vec = CVector::zeros(self.dim() * other.dim());
        for i in 0..self.dim() {
            for j in 0..other.dim() {
                vec[i * other.dim() + j] = self.vec[i] * other.vec[j];
            }
        }
        StateVector { vec }
    }

    pub fn scale(&self, factor: C64) -> StateVector {
        StateVector {
            vec: &self.vec * factor,
        }
    }

    pub fn add(&self, other: &StateVector) -> StateVector {
        StateVector {
            vec: &self.vec + &other.vec,
        }
    }

    pub fn sub(&self, other: &StateVector) -> StateVector {
        StateVector {
            vec: &self.vec - &other.vec,
        }
    }

    /// Schmidt decomposition across the bipartition d_left × d_right.
    ///
    /// Returns coefficients λ_n (descending, Σλ = 1 for a normalized input)
    /// with the matching left/right orthonormal vectors, so that
    /// Ψ = Σ √λ_n left_n ⊗ right_n.
    pub fn schmidt(&self, d_left: usize, d_right: usize) -> Result<SchmidtData> {
        if d_left * d_right != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "schmidt (d_left · d_right must equal state dim)",
                expected: self.dim(),
                actual: d_left * d_right,
            });
        }
        let mat = CMatrix::from_fn(d_left, d_right, |i, j| self.vec[i * d_right + j]);
        let svd = mat.svd(true, true);
        let u = svd.u.as_ref().expect("svd: left vectors requested");
        let vt = svd.v_t.as_ref().expect("svd: right vectors requested");

        let r_max = d_left.min(d_right);
        let mut entries: Vec<(f64, StateVector, StateVector)> = Vec::with_capacity(r_max);
        for n in 0..r_max {
            let s = svd.singular_values[n];
            // drop numerically-zero Schmidt directions
            if s <= 1e-14 {
                continue;
            }
            let left = StateVector {
                vec: u.column(n).into_owned(),
            };
            let right = StateVector {
                vec: CVector::from_fn(d_right, |j, _| vt[(n, j)]),
            };
            entries.push((s * s, left, right));
        }
        entries.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        if entries.is_empty() {
            return Err(Error::ZeroVector);
        }
        Ok(SchmidtData {
            coefficients: entries.iter().map(|e| e.0).collect(),
            left: entries.iter().map(|e| e.1.clone()).collect(),
            right: entries.iter().map(|e| e.2.clone()).collect(),
        })
    }
}

/// Eigendecomposition of a Hermitian operator.
///
/// Eigenvalues are ascending and eigenvectors orthonormal; the decomposition
/// is reused wherever a function of the operator is needed at many points
/// (time grids especially).
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<StateVector>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// max |λ|.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l.abs()))
    }

    /// Σ f(λ_k) |v_k⟩⟨v_k|.
    pub fn apply_function(&self, f: impl Fn(f64) -> C64) -> DenseOperator {
        let dim = self.dim();
        let mut mat = CMatrix::zeros(dim, dim);
        for (l, v) in self.eigenvalues.iter().zip(self.eigenvectors.iter()) {
            let fv = f(*l);
            for i in 0..dim {
                for j in 0..dim {
                    mat[(i, j)] += fv * v.vec[i] * v.vec[j].conj();
                }
            }
        }
        DenseOperator { mat }
    }

    /// Σ λ_k |v_k⟩⟨v_k|.
    pub fn reconstruct(&self) -> DenseOperator {
        self.apply_function(|l| C64::new(l, 0.0))
    }

    /// e^{−iOt} from the stored eigendata.
    pub fn evolution(&self, t: f64) -> DenseOperator {
        self.apply_function(|l| (-C64::i() * C64::new(l * t, 0.0)).exp())
    }

    /// Applies e^{−iOt} to a state without forming the full matrix.
    pub fn evolve_state(&self, v: &StateVector, t: f64) -> StateVector {
        let dim = self.dim();
        let mut out = CVector::zeros(dim);
        for (l, ev) in self.eigenvalues.iter().zip(self.eigenvectors.iter()) {
            let coeff = ev.inner(v) * (-C64::i() * C64::new(l * t, 0.0)).exp();
            out += &ev.vec * coeff;
        }
        StateVector { vec: out }
    }
}

/// Schmidt data of a bipartite pure state.
#[derive(Debug, Clone)]
pub struct SchmidtData {
    /// λ_n, descending; sums to 1 for a normalized state.
    pub coefficients: Vec<f64>,
    pub left: Vec<StateVector>,
    pub right: Vec<StateVector>,
}

impl SchmidtData {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficient_sum(&self) -> f64 {
        self.coefficients.iter().sum()
    }

    /// Σ √λ_n left_n ⊗ right_n.
    pub fn reconstruct(&self) -> StateVector {
        let d = self.left[0].dim() * self.right[0].dim();
        let mut acc = StateVector {
            vec: CVector::zeros(d),
        };
        for ((l, lv), rv) in self
            .coefficients
            .iter()
            .zip(self.left.iter())
            .zip(self.right.iter())
        {
            acc = acc.add(&lv.tensor(rv).scale(C64::new(l.sqrt(), 0.0)));
        }
        acc
    }
}

/// Contracts a bra onto one factor of a product-space vector.
///
/// `dims` are the factor dimensions in tensor order, `site` selects the
/// factor, and `bra` is conjugated in the contraction. The result lives on
/// the remaining factors in their original order.
pub fn contract_factor(
    psi: &StateVector,
    dims: &[usize],
    site: usize,
    bra: &StateVector,
) -> Result<StateVector> {
    let total: usize = dims.iter().product();
    if total != psi.dim() {
        return Err(Error::DimensionMismatch {
            context: "contract_factor (product of dims must equal state dim)",
            expected: psi.dim(),
            actual: total,
        });
    }
    if site >= dims.len() {
        return Err(Error::SiteOutOfRange {
            index: site,
            sites: dims.len(),
        });
    }
    if dims[site] != bra.dim() {
        return Err(Error::DimensionMismatch {
            context: "contract_factor (bra dim must equal dims[site])",
            expected: dims[site],
            actual: bra.dim(),
        });
    }
    let d_left: usize = dims[..site].iter().product();
    let d_mid = dims[site];
    let d_right: usize = dims[site + 1..].iter().product();
    let mut out = CVector::zeros(d_left * d_right);
    for l in 0..d_left {
        for m in 0..d_mid {
            let phase = bra.vec[m].conj();
            for r in 0..d_right {
                out[l * d_right + r] += phase * psi.vec[(l * d_mid + m) * d_right + r];
            }
        }
    }
    Ok(StateVector { vec: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn sigma_x() -> DenseOperator {
        DenseOperator::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Deterministic pseudo-random Hermitian operator (no RNG dependency in
    /// unit tests; a fixed low-discrepancy walk is plenty).
    fn test_hermitian(dim: usize, seed: u64) -> DenseOperator {
        let mut x = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
        let mut next = || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let m = CMatrix::from_fn(dim, dim, |_, _| c(next(), next()));
        let herm = (&m + m.adjoint()) * c(0.5, 0.0);
        DenseOperator::new(herm).unwrap()
    }

    #[test]
    fn tensor_product_identities() {
        let id2 = DenseOperator::identity(2);
        let id4 = id2.tensor(&id2);
        assert_eq!(id4.dim(), 4);
        assert!(id4.sub(&DenseOperator::identity(4)).max_abs() < 1e-15);
    }

    #[test]
    fn tensor_product_basis_action() {
        // σ^x ⊗ 1 on e0⊗e0 flips the first (slowest) factor: e1⊗e0.
        let op = sigma_x().tensor(&DenseOperator::identity(2));
        let e00 = StateVector::basis(2, 0).tensor(&StateVector::basis(2, 0));
        let out = op.apply(&e00);
        let expected = StateVector::basis(2, 1).tensor(&StateVector::basis(2, 0));
        assert!(out.sub(&expected).norm() < 1e-15);
    }

    #[test]
    fn tensor_product_spectrum() {
        // direct diagonalization of the 4×4 product
        let op = sigma_x().tensor(&sigma_x());
        let spec = op.eig_hermitian().unwrap();
        let expected = [-1.0, -1.0, 1.0, 1.0];
        for (l, e) in spec.eigenvalues.iter().zip(expected.iter()) {
            assert_relative_eq!(l, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn embed_local_matches_kron() {
        let embedded = embed_local(&sigma_x(), 0, &[2, 2]).unwrap();
        let direct = sigma_x().tensor(&DenseOperator::identity(2));
        assert!(embedded.sub(&direct).max_abs() < 1e-15);

        let id_embedded = embed_local(&DenseOperator::identity(3), 1, &[2, 3]).unwrap();
        assert!(id_embedded.sub(&DenseOperator::identity(6)).max_abs() < 1e-15);
    }

    #[test]
    fn embedded_operators_on_distinct_sites_commute() {
        let a = embed_local(&sigma_x(), 0, &[2, 2, 3]).unwrap();
        let b = embed_local(&sigma_x(), 1, &[2, 2, 3]).unwrap();
        assert!(a.commutator(&b).max_abs() <= 1e-14);
    }

    #[test]
    fn embed_local_errors() {
        assert!(matches!(
            embed_local(&sigma_x(), 2, &[2, 2]),
            Err(Error::SiteOutOfRange { .. })
        ));
        assert!(matches!(
            embed_local(&sigma_x(), 0, &[3, 2]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn eig_sigma_x() {
        let spec = sigma_x().eig_hermitian().unwrap();
        assert_relative_eq!(spec.eigenvalues[0], -1.0, epsilon = 1e-14);
        assert_relative_eq!(spec.eigenvalues[1], 1.0, epsilon = 1e-14);
        // eigenvectors (1, ∓1)/√2 up to phase
        let minus = StateVector::from_slice(&[c(1.0, 0.0), c(-1.0, 0.0)])
            .normalized()
            .unwrap();
        assert_relative_eq!(spec.eigenvectors[0].fidelity(&minus), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eig_sorts_ascending() {
        let op = DenseOperator::from_diagonal(&[3.0, 1.0, 2.0]);
        let spec = op.eig_hermitian().unwrap();
        assert_eq!(spec.eigenvalues, vec![1.0, 2.0, 3.0]);
        assert_relative_eq!(
            spec.eigenvectors[0].fidelity(&StateVector::basis(3, 1)),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn eig_two_spin_clock_spectrum() {
        // σ^x⊗1 + 0.5·1⊗σ^x has spectrum {−1.5, −0.5, +0.5, +1.5}
        let h = sigma_x()
            .tensor(&DenseOperator::identity(2))
            .add(&DenseOperator::identity(2).tensor(&sigma_x()).scale(0.5));
        let spec = h.eig_hermitian().unwrap();
        let expected = [-1.5, -0.5, 0.5, 1.5];
        for (l, e) in spec.eigenvalues.iter().zip(expected.iter()) {
            assert_relative_eq!(l, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let op = DenseOperator::from_rows(2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        assert!(matches!(op.eig_hermitian(), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn eig_reconstruction_invariant() {
        let op = test_hermitian(5, 42);
        let spec = op.eig_hermitian().unwrap();
        let defect = spec.reconstruct().sub(&op).max_abs();
        assert!(defect <= 1e-10 * op.spectral_norm().max(1e-30));
        // Gram matrix of eigenvectors within 1e−10 of identity
        for i in 0..5 {
            for j in 0..5 {
                let g = spec.eigenvectors[i].inner(&spec.eigenvectors[j]);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g - c(expect, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn kernel_of_diagonal() {
        let op = DenseOperator::from_diagonal(&[1.0, 0.0, -1.0]);
        let ker = op.kernel(KERNEL_REL_TOL).unwrap();
        assert_eq!(ker.len(), 1);
        assert_relative_eq!(ker[0].fidelity(&StateVector::basis(3, 1)), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn kernel_empty_for_sigma_x() {
        assert!(sigma_x().kernel(KERNEL_REL_TOL).unwrap().is_empty());
    }

    #[test]
    fn kernel_of_clock_system_constraint() {
        // σ^x⊗1 − 1⊗σ^x has eigenvalues a−b with a,b ∈ {±1}: {−2, 0, 0, 2}
        let h = sigma_x()
            .tensor(&DenseOperator::identity(2))
            .sub(&DenseOperator::identity(2).tensor(&sigma_x()));
        let ker = h.kernel(KERNEL_REL_TOL).unwrap();
        assert_eq!(ker.len(), 2);
        for v in &ker {
            assert!(h.apply(v).norm() <= KERNEL_REL_TOL * h.spectral_norm());
        }
    }

    #[test]
    fn evolve_at_zero_is_identity() {
        let op = test_hermitian(4, 7);
        let u = op.evolve(0.0).unwrap();
        assert!(u.sub(&DenseOperator::identity(4)).max_abs() < 1e-14);
    }

    #[test]
    fn evolve_quarter_period_maps_reference_to_orthogonal() {
        // e^{−iωσ^x·π/(2ω)} sends (|+⟩+|−⟩)/√2 to (−i/√2)(|+⟩−|−⟩)
        let omega = 0.7;
        let h = sigma_x().scale(omega);
        let u = h.evolve(std::f64::consts::FRAC_PI_2 / omega).unwrap();
        let spec = sigma_x().eig_hermitian().unwrap();
        let minus = &spec.eigenvectors[0];
        let plus = &spec.eigenvectors[1];
        let reference = plus.add(minus).scale(c(std::f64::consts::FRAC_1_SQRT_2, 0.0));
        let rotated = u.apply(&reference);
        let expected = plus
            .sub(minus)
            .scale(c(0.0, -std::f64::consts::FRAC_1_SQRT_2));
        assert!(rotated.sub(&expected).norm() < 1e-12);
        assert!(rotated.inner(&reference).norm() < 1e-12);
    }

    #[test]
    fn evolve_group_law() {
        let op = test_hermitian(4, 11);
        let (s, t) = (0.37, -1.21);
        let lhs = op.evolve(s).unwrap().matmul(&op.evolve(t).unwrap());
        let rhs = op.evolve(s + t).unwrap();
        assert!(lhs.sub(&rhs).max_abs() < 1e-10);
    }

    #[test]
    fn evolve_is_unitary_and_commutes_with_generator() {
        let op = test_hermitian(5, 23);
        let u = op.evolve(1.3).unwrap();
        assert!(u.is_unitary());
        assert!(u.commutator(&op).max_abs() < 1e-10);
    }

    #[test]
    fn evolve_satisfies_generator_equation() {
        // ‖O·U(t) − i dU/dt‖ with central differences, step 1e−5
        let op = test_hermitian(3, 5);
        let t = 0.8;
        let h = 1e-5;
        let spec = op.eig_hermitian().unwrap();
        let u_plus = spec.evolution(t + h);
        let u_minus = spec.evolution(t - h);
        let dudt = u_plus.sub(&u_minus).scale(1.0 / (2.0 * h));
        let lhs = op.matmul(&spec.evolution(t));
        let rhs = dudt.scale_complex(c(0.0, 1.0));
        assert!(lhs.sub(&rhs).max_abs() <= 1e-6);
    }

    #[test]
    fn schmidt_product_state() {
        let v = StateVector::from_slice(&[c(0.6, 0.0), c(0.8, 0.0)]);
        let w = StateVector::from_slice(&[c(0.0, 1.0), c(0.0, 0.0)]);
        let data = v.tensor(&w).schmidt(2, 2).unwrap();
        assert_eq!(data.rank(), 1);
        assert_relative_eq!(data.coefficients[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn schmidt_bell_state() {
        let mut bell = StateVector::basis(2, 0).tensor(&StateVector::basis(2, 0));
        bell = bell.add(&StateVector::basis(2, 1).tensor(&StateVector::basis(2, 1)));
        let bell = bell.normalized().unwrap();
        let data = bell.schmidt(2, 2).unwrap();
        assert_eq!(data.rank(), 2);
        assert_relative_eq!(data.coefficients[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(data.coefficients[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn schmidt_random_state_reconstructs() {
        let op = test_hermitian(6, 99);
        // use a column of a Hermitian test matrix as an arbitrary state
        let psi = StateVector {
            vec: op.matrix().column(0).into_owned(),
        }
        .normalized()
        .unwrap();
        let data = psi.schmidt(2, 3).unwrap();
        assert!(data.rank() <= 2);
        assert_relative_eq!(data.coefficient_sum(), 1.0, epsilon = 1e-12);
        assert!(data.reconstruct().sub(&psi).norm() < 1e-10);
    }

    #[test]
    fn schmidt_dimension_mismatch() {
        let psi = StateVector::basis(6, 0);
        assert!(matches!(psi.schmidt(2, 2), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn partial_trace_product_state() {
        let rho_a = StateVector::basis(2, 0).projector();
        let spec = test_hermitian(3, 3).eig_hermitian().unwrap();
        let rho_b = spec.eigenvectors[0].projector();
        let joint = rho_a.tensor(&rho_b);
        let back_a = joint.partial_trace(&[2, 3], &[0]).unwrap();
        let back_b = joint.partial_trace(&[2, 3], &[1]).unwrap();
        assert!(back_a.sub(&rho_a).max_abs() < 1e-12);
        assert!(back_b.sub(&rho_b).max_abs() < 1e-12);
    }

    #[test]
    fn partial_trace_bell_state() {
        let mut bell = StateVector::basis(2, 0).tensor(&StateVector::basis(2, 0));
        bell = bell.add(&StateVector::basis(2, 1).tensor(&StateVector::basis(2, 1)));
        let rho = bell.normalized().unwrap().projector();
        for keep in [[0usize], [1usize]] {
            let red = rho.partial_trace(&[2, 2], &keep).unwrap();
            assert!(red.sub(&DenseOperator::identity(2).scale(0.5)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_schmidt_symmetry() {
        // both reductions of a pure state share their eigenvalue multiset
        let op = test_hermitian(6, 17);
        let psi = StateVector {
            vec: op.matrix().column(2).into_owned(),
        }
        .normalized()
        .unwrap();
        let rho = psi.projector();
        let ra = rho.partial_trace(&[2, 3], &[0]).unwrap();
        let rb = rho.partial_trace(&[2, 3], &[1]).unwrap();
        let ea = ra.eig_hermitian().unwrap().eigenvalues;
        let eb = rb.eig_hermitian().unwrap().eigenvalues;
        // rb has one extra zero eigenvalue (rank ≤ 2)
        assert!(eb[0].abs() < 1e-10);
        assert_relative_eq!(ea[0], eb[1], epsilon = 1e-10);
        assert_relative_eq!(ea[1], eb[2], epsilon = 1e-10);
    }

    #[test]
    fn partial_trace_dimension_mismatch() {
        let rho = DenseOperator::identity(4).scale(0.25);
        assert!(matches!(
            rho.partial_trace(&[3, 2], &[0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn contract_factor_on_product() {
        let v = StateVector::from_slice(&[c(0.6, 0.0), c(0.0, 0.8)]);
        let w = StateVector::from_slice(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let joint = v.tensor(&w);
        let got = contract_factor(&joint, &[2, 3], 0, &v).unwrap();
        // ⟨v|v⟩ = 1, so the contraction returns w
        assert!(got.sub(&w).norm() < 1e-12);
    }

    #[test]
    fn spectral_norm_matches_eigenvalues() {
        let op = test_hermitian(4, 31);
        let spec = op.eig_hermitian().unwrap();
        assert_relative_eq!(op.spectral_norm(), spec.spectral_norm(), epsilon = 1e-10);
    }
}
