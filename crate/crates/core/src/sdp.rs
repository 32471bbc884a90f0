//! Max-trace semidefinite relaxation of the unit-modulus reflection problem
//! and its Gaussian-randomization rounding.
//!
//! The relaxation `max tr(RΨ) s.t. diag(Ψ) = 1, Ψ ⪰ 0` is solved by ADMM on
//! the splitting `X = Z` with `X` in the PSD cone and `Z` on the unit-diagonal
//! affine set.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::channel::{complex_gaussian, ReflectedChannelSet, TapVector};
use crate::error::{Error, Result};
use crate::ofdm::cfr;
use crate::power::PowerAllocation;
use crate::reflection::DamHardware;

/// Complex Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    m: DMatrix<Complex64>,
}

impl HermitianMatrix {
    /// Wraps `m`, rejecting non-square or non-Hermitian input.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::InvalidScenario("Hermitian matrix must be square and non-empty".into()));
        }
        let scale = m.iter().map(|x| x.norm()).fold(1.0, f64::max);
        let skew = (&m - m.adjoint()).iter().map(|x| x.norm()).fold(0.0, f64::max);
        if skew > 1e-12 * scale {
            return Err(Error::InvalidScenario(format!("matrix is not Hermitian (skew {skew:e})")));
        }
        Ok(Self::symmetrized(m))
    }

    fn symmetrized(m: DMatrix<Complex64>) -> Self {
        let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        Self { m: h }
    }

    pub fn identity(dim: usize) -> Self {
        Self { m: DMatrix::identity(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.m[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    /// `φᴴ A φ`.
    pub fn quad_form(&self, phi: &[Complex64]) -> f64 {
        assert_eq!(phi.len(), self.dim());
        let mut acc = Complex64::default();
        for i in 0..phi.len() {
            let row: Complex64 = (0..phi.len()).map(|j| self.m[(i, j)] * phi[j]).sum();
            acc += phi[i].conj() * row;
        }
        acc.re
    }

    /// `Re tr(A B)`.
    pub fn trace_product(&self, other: &HermitianMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim());
        let d = self.dim();
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += (self.m[(i, j)] * other.m[(j, i)]).re;
            }
        }
        acc
    }

    /// Eigenvalues in descending order with matching eigenvector columns.
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<Complex64>) {
        let e = self.m.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
        let values = order.iter().map(|&i| e.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |r, c| e.eigenvectors[(r, order[c])]);
        (values, vectors)
    }
}

/// Number of coefficient groups when `group` adjacent elements share one.
pub fn group_count(elements_per_ris: usize, group: usize) -> usize {
    elements_per_ris.div_ceil(group.max(1))
}

/// Expands one coefficient per group (RIS-major) into per-element rows.
pub fn expand_groups(phi: &[Complex64], num_ris: usize, elements_per_ris: usize, group: usize) -> Vec<Vec<Complex64>> {
    let g = group.max(1);
    let per_ris = group_count(elements_per_ris, g);
    assert_eq!(phi.len(), num_ris * per_ris);
    (0..num_ris).map(|k| (0..elements_per_ris).map(|m| phi[k * per_ris + m / g]).collect()).collect()
}

/// `R = Tᴴ diag(p) T`, where column `a` of `T` is the CFR of the delayed,
/// decayed channel of element (or element group) `a`.
pub fn build_reflection_quadratic(
    channels: &ReflectedChannelSet,
    delays: &[Vec<usize>],
    p: &PowerAllocation,
    subcarriers: usize,
    hw: &DamHardware,
    group: usize,
) -> Result<HermitianMatrix> {
    assert_eq!(p.len(), subcarriers, "allocation length differs from N");
    let g = group.max(1);
    let per_ris = group_count(channels.elements_per_ris(), g);
    let dim = channels.num_ris() * per_ris;
    let mut t = DMatrix::<Complex64>::zeros(subcarriers, dim);
    for (k, m, h) in channels.iter() {
        let delay = delays[k][m];
        let shifted = TapVector::new(h.first_tap_index + delay, h.taps.clone());
        let column = cfr(&shifted, subcarriers)?;
        let amp = hw.amplitude(delay);
        let a = k * per_ris + m / g;
        for (n, d) in column.d.iter().enumerate() {
            t[(n, a)] += d * (amp * p.powers()[n].sqrt());
        }
    }
    Ok(HermitianMatrix::symmetrized(t.adjoint() * t))
}

/// Relaxed optimum of the max-trace problem.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    /// Feasible point with exactly unit diagonal.
    pub psi: HermitianMatrix,
    /// `tr(RΨ)`.
    pub objective: f64,
    pub iterations: usize,
    /// Final (primal, dual) residuals of the scaled problem.
    pub residuals: (f64, f64),
    pub converged: bool,
}

fn project_psd(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let e = h.symmetric_eigen();
    let v = &e.eigenvectors;
    let mut scaled = v.clone();
    for (c, &lambda) in e.eigenvalues.iter().enumerate() {
        scaled.column_mut(c).scale_mut(lambda.max(0.0));
    }
    scaled * v.adjoint()
}

fn frobenius(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Maximizes `tr(RΨ)` over unit-diagonal PSD `Ψ`.
///
/// Stops once both residuals fall below `tol·√D`. If `max_iter` is reached
/// first the last iterate is returned with `converged = false`. The returned
/// `Ψ` is the PSD iterate rescaled to unit diagonal, so it is always feasible.
pub fn solve_sdp(r: &HermitianMatrix, tol: f64, max_iter: usize) -> SdpSolution {
    let d = r.dim();
    let scale = frobenius(r.matrix());
    if scale == 0.0 || d == 1 {
        let psi = HermitianMatrix::identity(d);
        let objective = r.trace_product(&psi);
        return SdpSolution { psi, objective, iterations: 0, residuals: (0.0, 0.0), converged: true };
    }
    let rs = r.matrix() / Complex64::new(scale, 0.0);
    let threshold = tol * (d as f64).sqrt();

    let mut rho = 1.0;
    let mut z = DMatrix::<Complex64>::identity(d, d);
    let mut u = DMatrix::<Complex64>::zeros(d, d);
    let mut x = z.clone();
    let mut residuals = (f64::INFINITY, f64::INFINITY);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        x = project_psd(&(&z - &u + &rs / Complex64::new(rho, 0.0)));
        let z_prev = std::mem::replace(&mut z, &x + &u);
        for i in 0..d {
            z[(i, i)] = Complex64::new(1.0, 0.0);
        }
        let gap = &x - &z;
        u += &gap;
        residuals = (frobenius(&gap), rho * frobenius(&(&z - &z_prev)));
        if residuals.0 < threshold && residuals.1 < threshold {
            converged = true;
            break;
        }
        if residuals.0 > 10.0 * residuals.1 {
            rho *= 2.0;
            u /= Complex64::new(2.0, 0.0);
        } else if residuals.1 > 10.0 * residuals.0 {
            rho /= 2.0;
            u *= Complex64::new(2.0, 0.0);
        }
    }

    let psi = HermitianMatrix::symmetrized(normalize_diagonal(x));
    let objective = r.trace_product(&psi);
    SdpSolution { psi, objective, iterations, residuals, converged }
}

/// `D^{-1/2} X D^{-1/2}`; rows with vanishing diagonal become unit vectors.
fn normalize_diagonal(mut x: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let d = x.nrows();
    let floor = 1e-12 * (0..d).map(|i| x[(i, i)].re).fold(0.0, f64::max);
    let mut scale = vec![0.0; d];
    for i in 0..d {
        let di = x[(i, i)].re;
        if di > floor {
            scale[i] = 1.0 / di.sqrt();
        } else {
            for j in 0..d {
                x[(i, j)] = Complex64::default();
                x[(j, i)] = Complex64::default();
            }
            x[(i, i)] = Complex64::new(1.0, 0.0);
            scale[i] = 1.0;
        }
    }
    for i in 0..d {
        for j in 0..d {
            x[(i, j)] *= scale[i] * scale[j];
        }
    }
    for i in 0..d {
        x[(i, i)] = Complex64::new(1.0, 0.0);
    }
    x
}

/// Unit-modulus vector recovered from a relaxed solution.
#[derive(Debug, Clone)]
pub struct Rounding {
    pub phi: Vec<Complex64>,
    /// `φᴴRφ`.
    pub objective: f64,
}

/// Rank-one detection threshold on `λ₂/λ₁`.
pub const RANK_ONE_RATIO: f64 = 1e-6;

fn unit_modulus(v: impl Iterator<Item = Complex64>) -> Vec<Complex64> {
    v.map(|x| if x.norm() > 0.0 { Complex64::from_polar(1.0, x.arg()) } else { Complex64::new(1.0, 0.0) }).collect()
}

/// Best of `q` unit-modulus projections of `U Λ^{1/2} δ`, `δ ~ CN(0, I)`.
///
/// A rank-one `Ψ` yields its principal eigenvector's phases directly.
pub fn gaussian_randomize<R: Rng + ?Sized>(sol: &SdpSolution, r: &HermitianMatrix, q: usize, rng: &mut R) -> Rounding {
    assert!(q >= 1, "at least one randomization trial is required");
    let d = r.dim();
    let (values, vectors) = sol.psi.eigen();
    let lead = values[0].max(0.0);
    if d == 1 || values[1].max(0.0) <= RANK_ONE_RATIO * lead {
        let phi = unit_modulus(vectors.column(0).iter().copied());
        let objective = r.quad_form(&phi);
        return Rounding { phi, objective };
    }
    let factor = DMatrix::from_fn(d, d, |i, j| vectors[(i, j)] * values[j].max(0.0).sqrt());
    let mut best: Option<Rounding> = None;
    for _ in 0..q {
        let delta: Vec<Complex64> = (0..d).map(|_| complex_gaussian(rng, 1.0)).collect();
        let v = (0..d).map(|i| (0..d).map(|j| factor[(i, j)] * delta[j]).sum::<Complex64>());
        let phi = unit_modulus(v);
        let objective = r.quad_form(&phi);
        if best.as_ref().is_none_or(|b| objective > b.objective) {
            best = Some(Rounding { phi, objective });
        }
    }
    best.expect("q >= 1")
}
