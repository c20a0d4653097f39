//! Truncated composite Hilbert space L ⊗ T ⊗ R.
//!
//! The two oscillators are cut off at the highest level whose thermal
//! population still exceeds a threshold; the qutrit always keeps its three
//! lowest levels. Basis index ordering is row-major in (l, t, r).

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::params::ModelParams;
use crate::ratemodel;

pub const QUTRIT_DIM: usize = 3;

/// Rule deciding how many oscillator levels are kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    /// Largest thermal population allowed for the discarded levels.
    pub threshold: f64,
    /// Minimum number of excited levels kept, whatever the temperature.
    pub floor: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            threshold: 1e-3,
            floor: 4,
        }
    }
}

impl TruncationPolicy {
    pub fn new(threshold: f64, floor: usize) -> Result<Self> {
        let policy = TruncationPolicy { threshold, floor };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(invalid("threshold", format!("must lie in (0, 1), got {}", self.threshold)));
        }
        Ok(())
    }
}

/// Population of level `m` in a thermal oscillator with mean occupation `n`:
/// nᵐ/(1+n)^{m+1}.
pub fn thermal_population(n: f64, m: usize) -> Result<f64> {
    if !(n >= 0.0) || !n.is_finite() {
        return Err(invalid("n", format!("mean occupation must be finite and >= 0, got {n}")));
    }
    if n == 0.0 {
        return Ok(if m == 0 { 1.0 } else { 0.0 });
    }
    let ratio = n / (1.0 + n);
    Ok(ratio.powi(m as i32) / (1.0 + n))
}

/// Highest oscillator level kept for mean occupation `n`.
pub fn m_max(n: f64, policy: &TruncationPolicy) -> Result<usize> {
    if !(n >= 0.0) || !n.is_finite() {
        return Err(invalid("n", format!("mean occupation must be finite and >= 0, got {n}")));
    }
    policy.validate()?;
    if n == 0.0 {
        return Ok(policy.floor);
    }
    let raw = ((n + 1.0) * policy.threshold).ln() / (n.ln() - (n + 1.0).ln());
    let level = if raw <= 0.0 { 0 } else { raw.ceil() as usize };
    Ok(level.max(policy.floor))
}

/// Thermal populations of the first `dim` levels, renormalized to sum to one.
pub fn truncated_thermal_populations(n: f64, dim: usize) -> Result<Vec<f64>> {
    let mut pops = (0..dim)
        .map(|m| thermal_population(n, m))
        .collect::<Result<Vec<_>>>()?;
    let total: f64 = pops.iter().sum();
    pops.iter_mut().for_each(|p| *p /= total);
    Ok(pops)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Site {
    Left,
    Qutrit,
    Right,
}

impl Site {
    fn slot(self) -> usize {
        match self {
            Site::Left => 0,
            Site::Qutrit => 1,
            Site::Right => 2,
        }
    }
}

/// Single-site annihilation operator on `dim` levels: ⟨m−1|a|m⟩ = √m.
pub fn ladder_matrix(dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |row, col| {
        if col == row + 1 {
            C64::new((col as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Truncated tensor-product space (left oscillator, qutrit, right oscillator).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CompositeSpace {
    dims: [usize; 3],
}

impl CompositeSpace {
    /// Space with `left` and `right` oscillator levels and a qutrit.
    pub fn new(left: usize, right: usize) -> Result<Self> {
        if left == 0 || right == 0 {
            return Err(invalid("dims", "oscillator dimensions must be positive"));
        }
        Ok(CompositeSpace {
            dims: [left, QUTRIT_DIM, right],
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn dim(&self, site: Site) -> usize {
        self.dims[site.slot()]
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn index(&self, left: usize, qutrit: usize, right: usize) -> usize {
        debug_assert!(left < self.dims[0] && qutrit < QUTRIT_DIM && right < self.dims[2]);
        (left * QUTRIT_DIM + qutrit) * self.dims[2] + right
    }

    /// Occupations (l, t, r) of a basis index.
    pub fn levels(&self, index: usize) -> (usize, usize, usize) {
        let right = index % self.dims[2];
        let rest = index / self.dims[2];
        (rest / QUTRIT_DIM, rest % QUTRIT_DIM, right)
    }

    /// Total excitation number of a basis state.
    pub fn excitations(&self, index: usize) -> usize {
        let (l, t, r) = self.levels(index);
        l + t + r
    }

    /// Smallest space containing both `self` and `other`.
    pub fn union(&self, other: &CompositeSpace) -> CompositeSpace {
        CompositeSpace {
            dims: [
                self.dims[0].max(other.dims[0]),
                QUTRIT_DIM,
                self.dims[2].max(other.dims[2]),
            ],
        }
    }

    /// Embeds a single-site operator with identities on the other two sites.
    pub fn embed(&self, site: Site, op: &DMatrix<C64>) -> DMatrix<C64> {
        assert_eq!(op.nrows(), self.dim(site), "operator does not match site dimension");
        let eye = |d: usize| DMatrix::<C64>::identity(d, d);
        let factors = [Site::Left, Site::Qutrit, Site::Right].map(|s| {
            if s == site {
                op.clone()
            } else {
                eye(self.dim(s))
            }
        });
        factors[0].kronecker(&factors[1]).kronecker(&factors[2])
    }

    /// Annihilation operator of `site` embedded in the full space.
    pub fn ladder(&self, site: Site) -> DMatrix<C64> {
        self.embed(site, &ladder_matrix(self.dim(site)))
    }

    /// Number operator a†a of `site` (diagonal).
    pub fn number(&self, site: Site) -> DMatrix<C64> {
        let n = self.total_dim();
        DMatrix::from_fn(n, n, |row, col| {
            if row != col {
                return C64::new(0.0, 0.0);
            }
            let (l, t, r) = self.levels(row);
            let level = [l, t, r][site.slot()];
            C64::new(level as f64, 0.0)
        })
    }

    /// Projector |k_T⟩⟨k_T| on the qutrit level `k`.
    pub fn qutrit_projector(&self, k: usize) -> DMatrix<C64> {
        let n = self.total_dim();
        DMatrix::from_fn(n, n, |row, col| {
            if row == col && self.levels(row).1 == k {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }
}

/// Space sized for the occupations of the current bias.
pub fn build_space(params: &ModelParams, policy: &TruncationPolicy) -> Result<CompositeSpace> {
    params.validate()?;
    let (n_left, n_right) = params.occupations();
    CompositeSpace::new(m_max(n_left, policy)? + 1, m_max(n_right, policy)? + 1)
}

/// Space large enough for both bias configurations of `params`.
pub fn build_space_both_biases(
    params: &ModelParams,
    policy: &TruncationPolicy,
) -> Result<CompositeSpace> {
    let forward = build_space(&params.with_bias(crate::params::Bias::Forward), policy)?;
    let reverse = build_space(&params.with_bias(crate::params::Bias::Reverse), policy)?;
    Ok(forward.union(&reverse))
}

/// Hermitian, unit-trace, positive semidefinite state over a [`CompositeSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    elements: DMatrix<C64>,
}

impl DensityMatrix {
    pub const HERMITICITY_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-9;
    pub const POSITIVITY_TOL: f64 = 1e-8;

    /// Wraps `elements` after checking the density-matrix invariants.
    pub fn new(elements: DMatrix<C64>) -> Result<Self> {
        let state = DensityMatrix { elements };
        state.validate()?;
        Ok(state)
    }

    /// Wraps `elements` without any check.
    pub fn new_unchecked(elements: DMatrix<C64>) -> Self {
        DensityMatrix { elements }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let elements = DMatrix::from_diagonal_element(dim, dim, C64::new(1.0 / dim as f64, 0.0));
        DensityMatrix { elements }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.elements
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.elements.trace()
    }

    /// max |ρ − ρ†| over all entries.
    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.elements)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_hermitian_eigenvalue(&self.elements)
    }

    /// tr(Oρ).
    pub fn expectation(&self, op: &DMatrix<C64>) -> C64 {
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += op[(i, k)] * self.elements[(k, i)];
            }
        }
        acc
    }

    /// Populations of the three qutrit levels.
    pub fn qutrit_populations(&self, space: &CompositeSpace) -> [f64; 3] {
        let mut pops = [0.0; 3];
        for i in 0..self.dim() {
            pops[space.levels(i).1] += self.elements[(i, i)].re;
        }
        pops
    }

    pub fn validate(&self) -> Result<()> {
        if !self.elements.is_square() {
            return Err(Error::InvalidState("matrix is not square".into()));
        }
        let herm = self.hermiticity_error();
        if herm > Self::HERMITICITY_TOL {
            return Err(Error::InvalidState(format!("hermiticity error {herm:.3e}")));
        }
        let trace_err = (self.trace() - C64::new(1.0, 0.0)).norm();
        if trace_err > Self::TRACE_TOL {
            return Err(Error::InvalidState(format!("trace error {trace_err:.3e}")));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -Self::POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(())
    }
}

pub(crate) fn hermiticity_error(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn min_hermitian_eigenvalue(m: &DMatrix<C64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let sym = (m + m.adjoint()).scale(0.5);
    sym.symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Diagonal product state ρ_th(n_L) ⊗ ρ_T ⊗ ρ_th(n_R), with the qutrit
/// populations taken from the Markovian rate model.
pub fn initial_state(params: &ModelParams, space: &CompositeSpace) -> Result<DensityMatrix> {
    params.validate()?;
    let (n_left, n_right) = params.occupations();
    let [d_left, _, d_right] = space.dims();
    let left = truncated_thermal_populations(n_left, d_left)?;
    let right = truncated_thermal_populations(n_right, d_right)?;
    let qutrit = ratemodel::markov_steady_state(params)?;

    let n = space.total_dim();
    let mut elements = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        let (l, t, r) = space.levels(i);
        elements[(i, i)] = C64::new(left[l] * qutrit[t] * right[r], 0.0);
    }
    let trace = elements.trace();
    elements /= trace;
    Ok(DensityMatrix { elements })
}
