//! Interaction-picture Hamiltonian, dissipators and the Lindblad generator.
//!
//! Two representations of the generator live here. The dense functions
//! (`hamiltonian`, `dissipator_apply`, `liouvillian_apply`, ...) act on full
//! matrices and are the reference definitions. [`Generator`] compiles the
//! same generator into a sparse superoperator restricted to the part of
//! Liouville space reachable from the initial support, which is what the
//! integrator runs on.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{CompositeSpace, DensityMatrix, Site};
use crate::params::ModelParams;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Ladder operators of the three sites embedded in one space.
#[derive(Debug, Clone)]
pub struct Ladders {
    pub left: DMatrix<C64>,
    pub qutrit: DMatrix<C64>,
    pub right: DMatrix<C64>,
}

impl Ladders {
    pub fn new(space: &CompositeSpace) -> Self {
        Ladders {
            left: space.ladder(Site::Left),
            qutrit: space.ladder(Site::Qutrit),
            right: space.ladder(Site::Right),
        }
    }

    pub fn site(&self, site: Site) -> &DMatrix<C64> {
        match site {
            Site::Left => &self.left,
            Site::Qutrit => &self.qutrit,
            Site::Right => &self.right,
        }
    }
}

/// Static part H_s and modulated part H_d of H_I(t) = H_s + cos(δω t) H_d.
#[derive(Debug, Clone)]
pub struct HamiltonianParts {
    pub static_part: DMatrix<C64>,
    pub drive: DMatrix<C64>,
}

pub fn hamiltonian_parts(params: &ModelParams, space: &CompositeSpace) -> HamiltonianParts {
    let a = Ladders::new(space);
    let hop = |x: &DMatrix<C64>, y: &DMatrix<C64>| {
        let forward = x * y.adjoint();
        let back = forward.adjoint();
        forward + back
    };
    let left_hop = hop(&a.left, &a.qutrit);
    let right_hop = hop(&a.qutrit, &a.right);

    let mut static_part = space.qutrit_projector(0) * C64::new(-params.delta_omega, 0.0);
    static_part += &left_hop * C64::new(params.j, 0.0);
    static_part += right_hop * C64::new(params.j, 0.0);
    if params.omega_amp != 0.0 {
        // Resonant 1↔2 drive, static in the frame rotating at ω.
        static_part += (&a.qutrit + a.qutrit.adjoint()) * C64::new(params.omega_amp / 2.0, 0.0);
    }
    let drive = left_hop * C64::new(params.j_prime, 0.0);
    HamiltonianParts { static_part, drive }
}

/// H_I(t) = −δω|0_T⟩⟨0_T| + J_LT(t)(a_L a_T† + h.c.) + J(a_T a_R† + h.c.)
/// + (Ω/2)(a_T + a_T†), with J_LT(t) = J + J′ cos(δω t).
pub fn hamiltonian(params: &ModelParams, space: &CompositeSpace, t: f64) -> DMatrix<C64> {
    let parts = hamiltonian_parts(params, space);
    parts.static_part + parts.drive * C64::new((params.delta_omega * t).cos(), 0.0)
}

/// rate · (L ρ L† − ½{L†L, ρ}).
pub fn lindblad_term(rho: &DMatrix<C64>, jump: &DMatrix<C64>, rate: f64) -> DMatrix<C64> {
    if rate == 0.0 {
        return DMatrix::zeros(rho.nrows(), rho.ncols());
    }
    let jump_dag = jump.adjoint();
    let occupation = &jump_dag * jump;
    let sandwich = jump * rho * &jump_dag;
    let anti = &occupation * rho + rho * &occupation;
    (sandwich - anti * C64::new(0.5, 0.0)) * C64::new(rate, 0.0)
}

/// Thermal jump operators (rate, L) of the oscillator on `site`.
fn bath_jumps(a: &DMatrix<C64>, gamma: f64, n: f64) -> [(f64, DMatrix<C64>); 2] {
    [(gamma * (n + 1.0), a.clone()), (gamma * n, a.adjoint())]
}

/// Bath dissipator D_site[ρ] for an oscillator coupled at rate Γ to a bath of
/// occupation `n`.
pub fn dissipator_apply(
    rho: &DMatrix<C64>,
    space: &CompositeSpace,
    site: Site,
    gamma: f64,
    n: f64,
) -> DMatrix<C64> {
    let a = space.ladder(site);
    bath_jumps(&a, gamma, n)
        .iter()
        .fold(DMatrix::zeros(rho.nrows(), rho.ncols()), |acc, (rate, l)| {
            acc + lindblad_term(rho, l, *rate)
        })
}

/// Qutrit decay (jump a_T) and dephasing (jump a_T†a_T), both at rate γ_dec.
pub fn decoherence_apply(rho: &DMatrix<C64>, space: &CompositeSpace, gamma_dec: f64) -> DMatrix<C64> {
    if gamma_dec == 0.0 {
        return DMatrix::zeros(rho.nrows(), rho.ncols());
    }
    let a = space.ladder(Site::Qutrit);
    let number = a.adjoint() * &a;
    lindblad_term(rho, &a, gamma_dec) + lindblad_term(rho, &number, gamma_dec)
}

/// Every jump operator of the model with its rate.
pub fn jump_operators(params: &ModelParams, space: &CompositeSpace) -> Vec<(f64, DMatrix<C64>)> {
    let a = Ladders::new(space);
    let (n_l, n_r) = params.occupations();
    let mut jumps = Vec::new();
    jumps.extend(bath_jumps(&a.left, params.gamma, n_l));
    jumps.extend(bath_jumps(&a.right, params.gamma, n_r));
    if params.gamma_dec > 0.0 {
        let number = a.qutrit.adjoint() * &a.qutrit;
        jumps.push((params.gamma_dec, a.qutrit.clone()));
        jumps.push((params.gamma_dec, number));
    }
    jumps.retain(|(rate, _)| *rate != 0.0);
    jumps
}

/// Full generator −i[H_I(t), ρ] + D_L[ρ] + D_R[ρ] + decoherence.
pub fn liouvillian_apply(
    rho: &DMatrix<C64>,
    params: &ModelParams,
    space: &CompositeSpace,
    t: f64,
) -> DMatrix<C64> {
    let h = hamiltonian(params, space, t);
    let mut out = (&h * rho - rho * &h) * -I;
    let (n_l, n_r) = params.occupations();
    out += dissipator_apply(rho, space, Site::Left, params.gamma, n_l);
    out += dissipator_apply(rho, space, Site::Right, params.gamma, n_r);
    out += decoherence_apply(rho, space, params.gamma_dec);
    out
}

/// Compressed sparse rows over Liouville-space positions.
#[derive(Debug, Clone, Default)]
struct Csr {
    row_start: Vec<u32>,
    cols: Vec<u32>,
    vals: Vec<C64>,
}

impl Csr {
    fn from_sorted(rows: usize, triplets: &[(u32, u32, C64)]) -> Self {
        let mut row_start = vec![0u32; rows + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            row_start[r as usize + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for r in 0..rows {
            row_start[r + 1] += row_start[r];
        }
        Csr {
            row_start,
            cols,
            vals,
        }
    }

    #[inline]
    fn row_dot(&self, row: usize, x: &[C64]) -> C64 {
        let (start, end) = (self.row_start[row] as usize, self.row_start[row + 1] as usize);
        let mut acc = ZERO;
        for (&c, &v) in self.cols[start..end].iter().zip(&self.vals[start..end]) {
            debug_assert!((c as usize) < x.len());
            // SAFETY: column indices are positions of the generator support
            // and every state vector has exactly one entry per position.
            acc += v * unsafe { *x.get_unchecked(c as usize) };
        }
        acc
    }

    #[inline]
    fn row_dot_conj(&self, row: usize, x: &[C64]) -> C64 {
        let (start, end) = (self.row_start[row] as usize, self.row_start[row + 1] as usize);
        let mut acc = ZERO;
        for (&c, &v) in self.cols[start..end].iter().zip(&self.vals[start..end]) {
            debug_assert!((c as usize) < x.len());
            // SAFETY: as in `row_dot`.
            acc += v * unsafe { x.get_unchecked(c as usize) }.conj();
        }
        acc
    }

    fn nnz(&self) -> usize {
        self.vals.len()
    }
}

/// A superoperator acting on the upper triangle of a Hermitian ρ: entries
/// below the diagonal are read as conjugates of their mirror images, so the
/// map is only real-linear and splits into a direct and a conjugated part.
#[derive(Debug, Clone, Default)]
struct HermitianCsr {
    direct: Csr,
    mirrored: Csr,
}

impl HermitianCsr {
    #[inline]
    fn row_dot(&self, row: usize, x: &[C64]) -> C64 {
        self.direct.row_dot(row, x) + self.mirrored.row_dot_conj(row, x)
    }

    fn nnz(&self) -> usize {
        self.direct.nnz() + self.mirrored.nnz()
    }
}

/// Sparse functional ρ ↦ tr(Oρ) over the support of a [`Generator`].
#[derive(Debug, Clone, Default)]
pub struct Functional {
    direct: Vec<(u32, C64)>,
    mirrored: Vec<(u32, C64)>,
}

impl Functional {
    pub fn eval(&self, x: &[C64]) -> C64 {
        let d = self
            .direct
            .iter()
            .fold(ZERO, |acc, &(p, w)| acc + w * x[p as usize]);
        self.mirrored
            .iter()
            .fold(d, |acc, &(p, w)| acc + w * x[p as usize].conj())
    }
}

/// Lindblad generator compiled to a sparse superoperator.
///
/// The state is stored as the upper-triangular entries ρ_ij (i ≤ j) whose
/// position is reachable from the seed support under the generator. Without
/// the amplification drive the total excitation number is conserved by H_I
/// and changed by the jumps on both sides of ρ at once, so only blocks of
/// equal excitation number are ever populated.
#[derive(Debug, Clone)]
pub struct Generator {
    space: CompositeSpace,
    delta_omega: f64,
    positions: Vec<(u32, u32)>,
    lookup: Vec<u32>,
    static_part: HermitianCsr,
    drive: HermitianCsr,
    blocks: Vec<Vec<usize>>,
}

const ABSENT: u32 = u32::MAX;

fn nonzeros(m: &DMatrix<C64>) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != ZERO {
                out.push((i, j, v));
            }
        }
    }
    out
}

type Triplet = (u32, u32, C64);

fn merge_sorted(mut local: Vec<Triplet>, rows: usize) -> Csr {
    local.sort_unstable_by_key(|&(d, s, _)| (d, s));
    let mut merged: Vec<Triplet> = Vec::with_capacity(local.len());
    for (d, s, v) in local {
        match merged.last_mut() {
            Some(last) if last.0 == d && last.1 == s => last.2 += v,
            _ => merged.push((d, s, v)),
        }
    }
    merged.retain(|t| t.2 != ZERO);
    Csr::from_sorted(rows, &merged)
}

impl Generator {
    /// Generator seeded with diagonal states, the support of every
    /// initial state this crate builds.
    pub fn new(params: &ModelParams, space: &CompositeSpace) -> Result<Self> {
        Self::with_seed(params, space, None)
    }

    /// Generator whose support additionally covers the nonzero entries of
    /// the Hermitian matrix `seed`.
    pub fn with_seed(
        params: &ModelParams,
        space: &CompositeSpace,
        seed: Option<&DMatrix<C64>>,
    ) -> Result<Self> {
        params.validate()?;
        let parts = hamiltonian_parts(params, space);
        let jumps = jump_operators(params, space);
        Self::from_terms(space, params.delta_omega, &parts, &jumps, seed)
    }

    /// Generator of −i[H_s + cos(δω t) H_d, ρ] + Σ rate·(LρL† − ½{L†L, ρ})
    /// for arbitrary Hamiltonian parts and jump operators.
    pub fn from_terms(
        space: &CompositeSpace,
        delta_omega: f64,
        parts: &HamiltonianParts,
        jumps: &[(f64, DMatrix<C64>)],
        seed: Option<&DMatrix<C64>>,
    ) -> Result<Self> {
        let n = space.total_dim();
        if parts.static_part.nrows() != n || parts.drive.nrows() != n {
            return Err(Error::InvalidState("Hamiltonian does not match the space".into()));
        }

        // H_eff = H_s − (i/2) Σ rate L†L folds the anticommutators into the
        // coherent part: −i(H_eff ρ − ρ H_eff†).
        let mut effective = parts.static_part.clone();
        for (rate, l) in jumps {
            effective -= (l.adjoint() * l) * (I * (0.5 * rate));
        }

        // Triplets (destination, source, coefficient) over full positions
        // i·n + j. Destinations below the diagonal are dropped; they follow
        // from Hermiticity of L[ρ].
        let full = |i: usize, j: usize| (i * n + j) as u32;
        let mut static_triplets: Vec<Triplet> = Vec::new();
        let mut drive_triplets: Vec<Triplet> = Vec::new();
        let push_coherent = |out: &mut Vec<Triplet>, h: &DMatrix<C64>| {
            for (i, k, v) in nonzeros(h) {
                for j in 0..n {
                    // (Hρ)_ij ← H_ik ρ_kj
                    if i <= j {
                        out.push((full(i, j), full(k, j), -I * v));
                    }
                    // (ρH†)_ji ← ρ_jk conj(H_ik)
                    if j <= i {
                        out.push((full(j, i), full(j, k), I * v.conj()));
                    }
                }
            }
        };
        push_coherent(&mut static_triplets, &effective);
        push_coherent(&mut drive_triplets, &parts.drive);
        for (rate, l) in jumps {
            let entries = nonzeros(l);
            for &(i, k, x) in &entries {
                for &(j, m, y) in &entries {
                    if i <= j {
                        static_triplets.push((full(i, j), full(k, m), x * y.conj() * *rate));
                    }
                }
            }
        }

        // Forward reachability over upper-triangular positions, treating a
        // source below the diagonal as its mirror image.
        let canonical = |p: u32| {
            let (i, j) = (p as usize / n, p as usize % n);
            if i <= j {
                p
            } else {
                full(j, i)
            }
        };
        let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); n * n];
        for &(dest, src, _) in static_triplets.iter().chain(drive_triplets.iter()) {
            adjacency[canonical(src) as usize].push(dest);
        }
        let mut reached = vec![false; n * n];
        let mut queue = VecDeque::new();
        let mut seeds: Vec<usize> = (0..n).map(|i| i * n + i).collect();
        if let Some(seed) = seed {
            if seed.nrows() != n || seed.ncols() != n {
                return Err(Error::InvalidState("seed matrix does not match the space".into()));
            }
            seeds.extend(nonzeros(seed).into_iter().map(|(i, j, _)| i.min(j) * n + i.max(j)));
        }
        for p in seeds {
            if !reached[p] {
                reached[p] = true;
                queue.push_back(p);
            }
        }
        while let Some(p) = queue.pop_front() {
            for &dest in &adjacency[p] {
                if !reached[dest as usize] {
                    reached[dest as usize] = true;
                    queue.push_back(dest as usize);
                }
            }
        }

        let mut lookup = vec![ABSENT; n * n];
        let mut positions = Vec::new();
        for p in 0..n * n {
            if reached[p] {
                lookup[p] = positions.len() as u32;
                positions.push(((p / n) as u32, (p % n) as u32));
            }
        }

        let rows = positions.len();
        let compress = |triplets: Vec<Triplet>| {
            let mut direct = Vec::new();
            let mut mirrored = Vec::new();
            for (d, s, v) in triplets {
                let dest = lookup[d as usize];
                let src = lookup[canonical(s) as usize];
                if dest == ABSENT || src == ABSENT {
                    continue;
                }
                if canonical(s) == s {
                    direct.push((dest, src, v));
                } else {
                    mirrored.push((dest, src, v));
                }
            }
            HermitianCsr {
                direct: merge_sorted(direct, rows),
                mirrored: merge_sorted(mirrored, rows),
            }
        };
        let static_part = compress(static_triplets);
        let drive = compress(drive_triplets);

        let blocks = support_blocks(n, &positions);
        Ok(Generator {
            space: *space,
            delta_omega,
            positions,
            lookup,
            static_part,
            drive,
            blocks,
        })
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    /// Number of tracked upper-triangular density-matrix entries.
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.static_part.nnz() + self.drive.nnz()
    }

    /// Groups of basis states that can be coherent with each other; ρ is
    /// block diagonal with respect to them.
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Writes L(t)[x] into `out`.
    pub fn apply(&self, t: f64, x: &[C64], out: &mut [C64]) {
        assert!(x.len() == self.len() && out.len() == self.len(), "state length mismatch");
        let modulation = (self.delta_omega * t).cos();
        for (row, slot) in out.iter_mut().enumerate() {
            *slot = self.static_part.row_dot(row, x) + self.drive.row_dot(row, x) * modulation;
        }
    }

    fn entry(&self, x: &[C64], i: usize, j: usize) -> C64 {
        let n = self.space.total_dim();
        let (lo, hi) = (i.min(j), i.max(j));
        match self.lookup[lo * n + hi] {
            ABSENT => ZERO,
            p if i <= j => x[p as usize],
            p => x[p as usize].conj(),
        }
    }

    /// Support vector of a Hermitian matrix. Fails when `rho` has weight
    /// outside the tracked support.
    pub fn vectorize(&self, rho: &DMatrix<C64>) -> Result<Vec<C64>> {
        let n = self.space.total_dim();
        if rho.nrows() != n || rho.ncols() != n {
            return Err(Error::InvalidState("matrix does not match the generator space".into()));
        }
        for i in 0..n {
            for j in i..n {
                if self.lookup[i * n + j] == ABSENT
                    && (rho[(i, j)].norm() > 1e-14 || rho[(j, i)].norm() > 1e-14)
                {
                    return Err(Error::InvalidState(format!(
                        "entry ({i}, {j}) lies outside the generator support"
                    )));
                }
            }
        }
        Ok(self
            .positions
            .iter()
            .map(|&(i, j)| rho[(i as usize, j as usize)])
            .collect())
    }

    pub fn to_matrix(&self, x: &[C64]) -> DMatrix<C64> {
        let n = self.space.total_dim();
        let mut m = DMatrix::zeros(n, n);
        for (&(i, j), &v) in self.positions.iter().zip(x) {
            m[(i as usize, j as usize)] = v;
            m[(j as usize, i as usize)] = v.conj();
        }
        m
    }

    pub fn to_density(&self, x: &[C64]) -> DensityMatrix {
        DensityMatrix::new_unchecked(self.to_matrix(x))
    }

    /// tr(Oρ) restricted to the support.
    pub fn functional(&self, op: &DMatrix<C64>) -> Functional {
        let mut direct = Vec::new();
        let mut mirrored = Vec::new();
        for (p, &(i, j)) in self.positions.iter().enumerate() {
            let (i, j) = (i as usize, j as usize);
            let w = op[(j, i)];
            if w != ZERO {
                direct.push((p as u32, w));
            }
            if i != j {
                let w = op[(i, j)];
                if w != ZERO {
                    mirrored.push((p as u32, w));
                }
            }
        }
        Functional { direct, mirrored }
    }

    /// Support positions of the diagonal entries ρ_ii.
    pub fn diagonal_positions(&self) -> Vec<usize> {
        let n = self.space.total_dim();
        (0..n).map(|i| self.lookup[i * n + i] as usize).collect()
    }

    pub fn trace(&self, x: &[C64]) -> C64 {
        let n = self.space.total_dim();
        (0..n).fold(ZERO, |acc, i| acc + x[self.lookup[i * n + i] as usize])
    }

    /// Smallest eigenvalue of ρ, computed block by block.
    pub fn min_eigenvalue(&self, x: &[C64]) -> f64 {
        let mut worst = f64::INFINITY;
        for block in &self.blocks {
            let size = block.len();
            let sub = DMatrix::from_fn(size, size, |a, b| self.entry(x, block[a], block[b]));
            worst = worst.min(crate::hilbert::min_hermitian_eigenvalue(&sub));
        }
        worst
    }

    /// max |ρ_ij − conj(ρ_ji)|. Off-diagonal entries are stored once, so
    /// only the imaginary parts of the diagonal can contribute.
    pub fn hermiticity_error(&self, x: &[C64]) -> f64 {
        self.diagonal_positions()
            .into_iter()
            .map(|p| 2.0 * x[p].im.abs())
            .fold(0.0, f64::max)
    }
}

/// Connected components of the coherence graph linking i and j for every tracked (i, j).
fn support_blocks(n: usize, positions: &[(u32, u32)]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(i, j) in positions {
        let (a, b) = (find(&mut parent, i as usize), find(&mut parent, j as usize));
        if a != b {
            parent[a] = b;
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut label = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if label[root] == usize::MAX {
            label[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[label[root]].push(i);
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{build_space, initial_state, TruncationPolicy};
    use crate::params::Bias;

    fn max_abs(m: &DMatrix<C64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn small_space() -> CompositeSpace {
        CompositeSpace::new(3, 3).unwrap()
    }

    fn coupling(space: &CompositeSpace, t: f64, params: &ModelParams) -> C64 {
        let h = hamiltonian(params, space, t);
        h[(space.index(0, 1, 0), space.index(1, 0, 0))]
    }

    #[test]
    fn modulated_hopping() {
        let params = ModelParams::default();
        let space = small_space();
        assert!((coupling(&space, 0.0, &params) - C64::new(1.5, 0.0)).norm() < 1e-12);
        let half = std::f64::consts::PI / params.delta_omega;
        assert!((coupling(&space, half, &params) - C64::new(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn undriven_hamiltonian_is_static() {
        let params = ModelParams {
            j_prime: 0.0,
            ..ModelParams::default()
        };
        let space = small_space();
        let h0 = hamiltonian(&params, &space, 0.0);
        let h1 = hamiltonian(&params, &space, 0.1234);
        assert_eq!(max_abs(&(&h0 - &h1)), 0.0);
        assert!((coupling(&space, 0.3, &params) - C64::new(1.0, 0.0)).norm() < 1e-15);
        let hop_right = h0[(space.index(0, 0, 1), space.index(0, 1, 0))];
        assert!((hop_right - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn hamiltonian_hermitian_and_periodic() {
        let params = ModelParams {
            omega_amp: 0.7,
            ..ModelParams::default()
        };
        let space = small_space();
        for &t in &[0.0, 0.013, 1.7, 42.0] {
            let h = hamiltonian(&params, &space, t);
            assert_eq!(max_abs(&(&h - h.adjoint())), 0.0);
            let later = hamiltonian(&params, &space, t + params.drive_period());
            assert!(max_abs(&(&h - later)) < 1e-9);
        }
    }

    #[test]
    fn thermal_oscillator_is_dissipator_fixed_point() {
        let space = CompositeSpace::new(6, 1).unwrap();
        let n = 0.5;
        let pops = crate::hilbert::truncated_thermal_populations(n, 6).unwrap();
        let dim = space.total_dim();
        let mut rho = DMatrix::<C64>::zeros(dim, dim);
        for i in 0..dim {
            let (l, t, _) = space.levels(i);
            rho[(i, i)] = C64::new(pops[l] * [0.2, 0.5, 0.3][t], 0.0);
        }
        let d = dissipator_apply(&rho, &space, Site::Left, 10.0, n);
        assert!(max_abs(&d) < 1e-3 * 10.0);
        assert!(max_abs(&d) < 1e-14);
    }

    #[test]
    fn zero_temperature_amplitude_damping() {
        let space = CompositeSpace::new(3, 1).unwrap();
        let dim = space.total_dim();
        let (one, zero) = (space.index(1, 0, 0), space.index(0, 0, 0));
        let mut rho = DMatrix::<C64>::zeros(dim, dim);
        rho[(one, one)] = C64::new(1.0, 0.0);
        let d = dissipator_apply(&rho, &space, Site::Left, 2.0, 0.0);
        assert!((d[(one, one)] - C64::new(-2.0, 0.0)).norm() < 1e-14);
        assert!((d[(zero, zero)] - C64::new(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn decoherence_cases() {
        let space = CompositeSpace::new(2, 2).unwrap();
        let dim = space.total_dim();
        let rho = DensityMatrix::maximally_mixed(dim).into_matrix();
        assert_eq!(max_abs(&decoherence_apply(&rho, &space, 0.0)), 0.0);

        let mut dark = DMatrix::<C64>::zeros(dim, dim);
        dark[(space.index(1, 0, 0), space.index(1, 0, 0))] = C64::new(1.0, 0.0);
        assert_eq!(max_abs(&decoherence_apply(&dark, &space, 0.3)), 0.0);

        let top = space.index(0, 2, 1);
        let mut excited = DMatrix::<C64>::zeros(dim, dim);
        excited[(top, top)] = C64::new(1.0, 0.0);
        let d = decoherence_apply(&excited, &space, 0.3);
        assert!((d[(top, top)] - C64::new(-0.6, 0.0)).norm() < 1e-14);
        assert!((d[(space.index(0, 1, 1), space.index(0, 1, 1))] - C64::new(0.6, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn mixed_state_is_stationary_without_couplings() {
        let params = ModelParams {
            j: 1.0,
            j_prime: 0.0,
            gamma: 1.0,
            n_hot: 0.0,
            ..ModelParams::default()
        };
        let space = small_space();
        let rho = DensityMatrix::maximally_mixed(space.total_dim()).into_matrix();
        // Coherent part alone: the identity commutes with everything.
        let h = hamiltonian(&params, &space, 0.3);
        let coherent = (&h * &rho - &rho * &h) * -I;
        assert!(max_abs(&coherent) < 1e-15);
    }

    #[test]
    fn compiled_generator_matches_dense() {
        for bias in [Bias::Forward, Bias::Reverse] {
            let params = ModelParams {
                n_cold: 0.1,
                gamma_dec: 0.05,
                ..ModelParams::default()
            }
            .with_bias(bias);
            let space = CompositeSpace::new(4, 3).unwrap();
            let rho = initial_state(&params, &space).unwrap();
            let gen = Generator::new(&params, &space).unwrap();
            let x = gen.vectorize(rho.matrix()).unwrap();
            // Evolve the vector a little so it carries coherences too.
            let mut y = x.clone();
            let mut k = vec![ZERO; x.len()];
            for s in 0..50 {
                gen.apply(s as f64 * 1e-3, &y, &mut k);
                for (a, b) in y.iter_mut().zip(&k) {
                    *a += b * 1e-3;
                }
            }
            let t = 0.0123;
            let rho_y = gen.to_matrix(&y);
            let dense = liouvillian_apply(&rho_y, &params, &space, t);
            let mut out = vec![ZERO; y.len()];
            gen.apply(t, &y, &mut out);
            let sparse = gen.to_matrix(&out);
            assert!(max_abs(&(dense - sparse)) < 1e-10);
        }
    }

    #[test]
    fn support_is_excitation_blocks_without_amplification() {
        let params = ModelParams::default();
        let space = build_space(&params, &TruncationPolicy::default()).unwrap();
        let gen = Generator::new(&params, &space).unwrap();
        assert_eq!(gen.len(), (1159 + 105) / 2);
        for block in gen.blocks() {
            let n0 = space.excitations(block[0]);
            assert!(block.iter().all(|&i| space.excitations(i) == n0));
        }
        let amplified = ModelParams {
            omega_amp: 1.0,
            ..params
        };
        let gen = Generator::new(&amplified, &space).unwrap();
        assert_eq!(gen.len(), 105 * 106 / 2);
    }

    #[test]
    fn vectorize_rejects_outside_support() {
        let params = ModelParams::default();
        let space = small_space();
        let gen = Generator::new(&params, &space).unwrap();
        let dim = space.total_dim();
        let mut rho = DMatrix::<C64>::zeros(dim, dim);
        rho[(0, space.index(0, 1, 0))] = C64::new(0.1, 0.0);
        rho[(space.index(0, 1, 0), 0)] = C64::new(0.1, 0.0);
        assert!(gen.vectorize(&rho).is_err());
        let seeded = Generator::with_seed(&params, &space, Some(&rho)).unwrap();
        assert!(seeded.vectorize(&rho).is_ok());
    }
}
