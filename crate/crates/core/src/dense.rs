//! Exact dense backend: explicit operators on the joint space of n copies,
//! true projective back-action, and whole-sequence entanglement fidelity.
//!
//! Everything here is bounded by a hard qubit cap; the point is not scale
//! but ground truth. The yes-projector is built as a basis rotation of a
//! diagonal 0/1 indicator (cost O(n 4^n)), with the literal sum of product
//! projectors available as an independent cross-check. Measurement updates
//! use the same rotation identity, M = U D U', so a projective step costs
//! O(n 4^n) rather than a 8^n matrix product.

use num_complex::Complex64;
use rand::Rng;
use std::sync::OnceLock;

use crate::bloch::{DensityOperator, MeasBasis};
use crate::error::{Error, Result};
use crate::measurement::{sample_outcome, CollectiveMeasurement, Outcome};
use crate::types::TypicalSetSpec;

/// Default qubit cap: one operator is 16.8 MB of complex doubles.
pub const DEFAULT_CAP: usize = 10;

/// Opt-in ceiling; a single operator at 12 qubits occupies 268 MB.
pub const HARD_CAP: usize = 12;

/// Branches thinner than this are reported unavailable instead of being
/// renormalized by a division by ~0.
pub const BRANCH_FLOOR: f64 = 1e-14;

/// Outcome paths below this probability are pruned from sequence-fidelity
/// sums; the pruned mass is reported so the result is a certified interval.
pub const PRUNE_THRESHOLD: f64 = 1e-12;

/// Longest measurement plan accepted by the sequence-fidelity walk
/// (2^m outcome paths before pruning).
pub const MAX_PLAN_LEN: usize = 20;

type Mat2 = [[Complex64; 2]; 2];

fn mat2_adjoint(m: &Mat2) -> Mat2 {
    [
        [m[0][0].conj(), m[1][0].conj()],
        [m[0][1].conj(), m[1][1].conj()],
    ]
}

fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Row-major square complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl std::fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CMatrix({}x{})", self.dim, self.dim)
    }
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.at(i, i)).sum()
    }

    /// tr(self . other), without forming the product.
    pub fn product_trace(&self, other: &CMatrix) -> Complex64 {
        assert_eq!(self.dim, other.dim);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += self.at(i, j) * other.at(j, i);
            }
        }
        acc
    }

    pub fn adjoint(&self) -> CMatrix {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.set(j, i, self.at(i, j).conj());
            }
        }
        out
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row_b = &other.data[k * d..(k + 1) * d];
                let row_o = &mut out.data[i * d..(i + 1) * d];
                for j in 0..d {
                    row_o[j] += a * row_b[j];
                }
            }
        }
        out
    }

    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let (da, db) = (self.dim, other.dim);
        let d = da * db;
        let mut out = Self::zeros(d);
        for i in 0..da {
            for j in 0..da {
                let a = self.at(i, j);
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for k in 0..db {
                    for l in 0..db {
                        out.set(i * db + k, j * db + l, a * other.at(k, l));
                    }
                }
            }
        }
        out
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self.at(i, j) - self.at(j, i).conj()).norm());
            }
        }
        worst
    }

    /// y = self . x
    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        let d = self.dim;
        for i in 0..d {
            let row = &self.data[i * d..(i + 1) * d];
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..d {
                acc += row[j] * x[j];
            }
            y[i] = acc;
        }
    }

    /// Left-multiplies by a single-qubit gate acting on the given bit
    /// position (stride 1 << bit).
    fn apply_gate_rows(&mut self, g: &Mat2, bit: usize) {
        let d = self.dim;
        let stride = 1usize << bit;
        let (g00, g01, g10, g11) = (g[0][0], g[0][1], g[1][0], g[1][1]);
        let mut base = 0;
        while base < d {
            for r0 in base..base + stride {
                let r1 = r0 + stride;
                let (o0, o1) = (r0 * d, r1 * d);
                for j in 0..d {
                    let a = self.data[o0 + j];
                    let b = self.data[o1 + j];
                    self.data[o0 + j] = g00 * a + g01 * b;
                    self.data[o1 + j] = g10 * a + g11 * b;
                }
            }
            base += 2 * stride;
        }
    }

    /// Right-multiplies by a single-qubit gate acting on the given bit
    /// position.
    fn apply_gate_cols(&mut self, g: &Mat2, bit: usize) {
        let d = self.dim;
        let stride = 1usize << bit;
        let (g00, g01, g10, g11) = (g[0][0], g[0][1], g[1][0], g[1][1]);
        for i in 0..d {
            let off = i * d;
            let mut base = 0;
            while base < d {
                for c0 in base..base + stride {
                    let c1 = c0 + stride;
                    let a = self.data[off + c0];
                    let b = self.data[off + c1];
                    self.data[off + c0] = a * g00 + b * g10;
                    self.data[off + c1] = a * g01 + b * g11;
                }
                base += 2 * stride;
            }
        }
    }

    /// self <- (G^(x)n) self (G^(x)n)^dagger
    fn conjugate_each_qubit(&mut self, g: &Mat2, n: usize) {
        let gd = mat2_adjoint(g);
        for bit in 0..n {
            self.apply_gate_rows(g, bit);
        }
        for bit in 0..n {
            self.apply_gate_cols(&gd, bit);
        }
    }

    /// self <- (G^(x)n) self  (rows only)
    fn left_apply_each_qubit(&mut self, g: &Mat2, n: usize) {
        for bit in 0..n {
            self.apply_gate_rows(g, bit);
        }
    }

    /// Zeroes every entry (i, j) unless keep[i] == sense and keep[j] == sense.
    fn mask_with(&mut self, keep: &[bool], sense: bool) {
        let d = self.dim;
        for i in 0..d {
            let row = &mut self.data[i * d..(i + 1) * d];
            if keep[i] != sense {
                row.fill(Complex64::new(0.0, 0.0));
            } else {
                for (j, v) in row.iter_mut().enumerate() {
                    if keep[j] != sense {
                        *v = Complex64::new(0.0, 0.0);
                    }
                }
            }
        }
    }

    /// Zeroes every row i with keep[i] != sense.
    fn mask_rows_with(&mut self, keep: &[bool], sense: bool) {
        let d = self.dim;
        for i in 0..d {
            if keep[i] != sense {
                self.data[i * d..(i + 1) * d].fill(Complex64::new(0.0, 0.0));
            }
        }
    }

    fn masked_diag_sum(&self, keep: &[bool], sense: bool) -> f64 {
        (0..self.dim)
            .filter(|&i| keep[i] == sense)
            .map(|i| self.at(i, i).re)
            .sum()
    }
}

/// Validity probes for a joint state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDiagnostics {
    pub trace_deviation: f64,
    pub hermiticity_deviation: f64,
    /// Smallest-eigenvalue estimate from a power-iteration probe (not a full
    /// eigensolve).
    pub min_eigenvalue_probe: f64,
}

/// An explicit density matrix for n copies.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    n: usize,
    mat: CMatrix,
}

impl DenseState {
    /// rho^(x)n under the default cap.
    pub fn product_state(rho: &DensityOperator, n: usize) -> Result<Self> {
        Self::product_state_with_cap(rho, n, DEFAULT_CAP)
    }

    pub fn product_state_with_cap(rho: &DensityOperator, n: usize, cap: usize) -> Result<Self> {
        check_cap(n, cap)?;
        let m = rho.matrix();
        let mut rho2 = CMatrix::zeros(2);
        for i in 0..2 {
            for j in 0..2 {
                rho2.set(i, j, m[i][j]);
            }
        }
        let mut acc = CMatrix::identity(1);
        for _ in 0..n {
            acc = acc.kron(&rho2);
        }
        Ok(Self { n, mat: acc })
    }

    /// Wraps an explicit matrix; the dimension must be 2^n.
    pub fn from_matrix(n: usize, mat: CMatrix) -> Result<Self> {
        if mat.dim() != 1 << n {
            return Err(Error::InvalidParameter(format!(
                "matrix dimension {} does not match n = {n}",
                mat.dim()
            )));
        }
        Ok(Self { n, mat })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn diagnostics(&self) -> StateDiagnostics {
        StateDiagnostics {
            trace_deviation: (self.mat.trace().re - 1.0).abs() + self.mat.trace().im.abs(),
            hermiticity_deviation: self.mat.hermiticity_deviation(),
            min_eigenvalue_probe: min_eigenvalue_probe(&self.mat),
        }
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if cap > HARD_CAP {
        return Err(Error::InvalidParameter(format!(
            "cap {cap} exceeds the hard ceiling {HARD_CAP}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    if n > cap {
        return Err(Error::Capacity { n, cap });
    }
    Ok(())
}

/// Power-iteration estimate of the smallest eigenvalue of a Hermitian
/// matrix: iterate on cI - A where c bounds the spectrum from above.
fn min_eigenvalue_probe(mat: &CMatrix) -> f64 {
    let d = mat.dim();
    // Gershgorin bound on the spectral radius.
    let c = (0..d)
        .map(|i| (0..d).map(|j| mat.at(i, j).norm()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1.0);
    let mut v: Vec<Complex64> = (0..d)
        .map(|i| Complex64::new(1.0 + (i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()))
        .collect();
    let mut av = vec![Complex64::new(0.0, 0.0); d];
    let mut lambda_b = 0.0;
    for _ in 0..60 {
        mat.matvec(&v, &mut av);
        // b = c v - A v
        for i in 0..d {
            av[i] = c * v[i] - av[i];
        }
        let norm = av.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        for i in 0..d {
            v[i] = av[i] / norm;
        }
        lambda_b = norm;
    }
    c - lambda_b
}

/// The yes-projector of a collective measurement, with enough structure to
/// apply it without materializing the matrix.
pub struct DenseProjector {
    n: usize,
    basis: MeasBasis,
    spec: TypicalSetSpec,
    /// Acceptance by zero-count k (length n + 1).
    accept_k: Vec<bool>,
    /// Acceptance by basis-state index (length 2^n).
    keep: Vec<bool>,
    matrix: OnceLock<CMatrix>,
}

impl DenseProjector {
    pub fn build(m: &CollectiveMeasurement) -> Result<Self> {
        Self::build_with_cap(m, DEFAULT_CAP)
    }

    pub fn build_with_cap(m: &CollectiveMeasurement, cap: usize) -> Result<Self> {
        let n = m.n() as usize;
        check_cap(n, cap)?;
        let accept_k: Vec<bool> = (0..=n)
            .map(|k| m.spec().contains(k as u64).expect("k <= n"))
            .collect();
        let keep: Vec<bool> = (0..1usize << n)
            .map(|x| accept_k[n - x.count_ones() as usize])
            .collect();
        Ok(Self {
            n,
            basis: *m.basis(),
            spec: *m.spec(),
            accept_k,
            keep,
            matrix: OnceLock::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> &MeasBasis {
        &self.basis
    }

    pub fn spec(&self) -> &TypicalSetSpec {
        &self.spec
    }

    /// Acceptance indicator over basis-state indices (zero-count typicality).
    pub fn keep(&self) -> &[bool] {
        &self.keep
    }

    pub fn accepted_counts(&self) -> &[bool] {
        &self.accept_k
    }

    /// Number of accepted basis states = sum of C(n, k) over accepted k.
    pub fn rank(&self) -> u64 {
        self.keep.iter().filter(|b| **b).count() as u64
    }

    /// The projector as an explicit matrix, built by rotating the diagonal
    /// indicator into the measurement basis. Cached after first use.
    pub fn matrix(&self) -> &CMatrix {
        self.matrix.get_or_init(|| {
            let dim = 1usize << self.n;
            let mut m = CMatrix::zeros(dim);
            for (x, &kept) in self.keep.iter().enumerate() {
                if kept {
                    m.set(x, x, Complex64::new(1.0, 0.0));
                }
            }
            m.conjugate_each_qubit(&self.basis.unitary(), self.n);
            m
        })
    }

    /// I - M_yes.
    pub fn complement_matrix(&self) -> CMatrix {
        let m = self.matrix();
        let mut out = CMatrix::identity(m.dim());
        for i in 0..m.dim() {
            for j in 0..m.dim() {
                let v = out.at(i, j) - m.at(i, j);
                out.set(i, j, v);
            }
        }
        out
    }

    /// The literal construction: sum over accepted records of the rank-1
    /// product projector. O(8^n); cross-check only.
    pub fn matrix_sum_of_products(&self) -> CMatrix {
        let dim = 1usize << self.n;
        let amps = [self.basis.e0(), self.basis.e1()];
        let mut m = CMatrix::zeros(dim);
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        for x in 0..dim {
            if !self.keep[x] {
                continue;
            }
            for (y, slot) in v.iter_mut().enumerate() {
                let mut prod = Complex64::new(1.0, 0.0);
                for copy in 0..self.n {
                    let bit = self.n - 1 - copy;
                    let record = (x >> bit) & 1;
                    let component = (y >> bit) & 1;
                    prod *= amps[record][component];
                }
                *slot = prod;
            }
            for i in 0..dim {
                for j in 0..dim {
                    let add = v[i] * v[j].conj();
                    let cur = m.at(i, j);
                    m.set(i, j, cur + add);
                }
            }
        }
        m
    }
}

/// Result of a projective yes/no measurement on a dense state.
#[derive(Debug, Clone)]
pub struct MeasureOutcome {
    pub p_yes: f64,
    /// Normalized post-measurement state of the yes branch; None when the
    /// branch probability is below [`BRANCH_FLOOR`].
    pub post_yes: Option<DenseState>,
    pub post_no: Option<DenseState>,
}

/// Projective update: p_yes = tr(M S), post states M S M / p and
/// (I-M) S (I-M) / (1-p), computed through the rotation identity.
pub fn measure(state: &DenseState, proj: &DenseProjector) -> Result<MeasureOutcome> {
    if state.n() != proj.n() {
        return Err(Error::InvalidParameter(format!(
            "state has {} copies, projector {}",
            state.n(),
            proj.n()
        )));
    }
    let u = proj.basis().unitary();
    let udag = mat2_adjoint(&u);
    let mut sigma = state.mat.clone();
    // Into the measurement frame: sigma = (U')^(x)n S U^(x)n.
    sigma.conjugate_each_qubit(&udag, state.n);
    let p = sigma.masked_diag_sum(proj.keep(), true).clamp(0.0, 1.0);

    let branch = |sense: bool, prob: f64| -> Option<DenseState> {
        if prob < BRANCH_FLOOR {
            return None;
        }
        let mut b = sigma.clone();
        b.mask_with(proj.keep(), sense);
        b.scale(1.0 / prob);
        b.conjugate_each_qubit(&u, state.n);
        Some(DenseState {
            n: state.n,
            mat: b,
        })
    };

    Ok(MeasureOutcome {
        p_yes: p,
        post_yes: branch(true, p),
        post_no: branch(false, 1.0 - p),
    })
}

/// Sequential measurement engine that keeps the evolving joint state in the
/// frame of the last measured basis, so consecutive measurements cost one
/// frame change instead of two full rotations.
pub struct SequentialSimulator {
    n: usize,
    mat: CMatrix,
    frame: Option<MeasBasis>,
}

impl SequentialSimulator {
    pub fn new(state: DenseState) -> Self {
        Self {
            n: state.n,
            mat: state.mat,
            frame: None,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Measures, samples the outcome, and collapses the state onto the
    /// sampled branch. Returns the exact pre-measurement p_yes and the
    /// outcome. A branch thinner than [`BRANCH_FLOOR`] cannot be entered;
    /// the outcome is forced to the surviving branch.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        proj: &DenseProjector,
        rng: &mut R,
    ) -> Result<(f64, Outcome)> {
        if proj.n() != self.n {
            return Err(Error::InvalidParameter(format!(
                "state has {} copies, projector {}",
                self.n,
                proj.n()
            )));
        }
        let target = *proj.basis();
        let gate = match &self.frame {
            None => mat2_adjoint(&target.unitary()),
            Some(current) => mat2_mul(&mat2_adjoint(&target.unitary()), &current.unitary()),
        };
        self.mat.conjugate_each_qubit(&gate, self.n);
        self.frame = Some(target);

        let p = self.mat.masked_diag_sum(proj.keep(), true).clamp(0.0, 1.0);
        let mut outcome = sample_outcome(p, rng);
        let mut branch_p = match outcome {
            Outcome::Yes => p,
            Outcome::No => 1.0 - p,
        };
        if branch_p < BRANCH_FLOOR {
            outcome = match outcome {
                Outcome::Yes => Outcome::No,
                Outcome::No => Outcome::Yes,
            };
            branch_p = 1.0 - branch_p;
        }
        self.mat
            .mask_with(proj.keep(), outcome == Outcome::Yes);
        self.mat.scale(1.0 / branch_p);
        Ok((p, outcome))
    }

    /// Rotates back to the computational frame and returns the state.
    pub fn into_state(mut self) -> DenseState {
        if let Some(frame) = self.frame.take() {
            self.mat.conjugate_each_qubit(&frame.unitary(), self.n);
        }
        DenseState {
            n: self.n,
            mat: self.mat,
        }
    }
}

/// Certified interval for the fidelity of a whole measurement sequence:
/// the exact value lies in [fidelity, fidelity + pruned_mass].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceFidelity {
    /// Sum over retained outcome paths o of |tr(E_o S)|^2.
    pub fidelity: f64,
    /// Total probability of pruned outcome subtrees.
    pub pruned_mass: f64,
}

impl SequenceFidelity {
    pub fn upper_bound(&self) -> f64 {
        self.fidelity + self.pruned_mass
    }
}

/// Exact entanglement fidelity of an ordered measurement plan applied to
/// rho^(x)n: sum over outcome strings of |tr(E_o rho^(x)n)|^2, where E_o is
/// the ordered product of branch projectors.
pub fn sequence_entanglement_fidelity(
    rho: &DensityOperator,
    plan: &[CollectiveMeasurement],
    cap: usize,
) -> Result<SequenceFidelity> {
    if plan.is_empty() {
        return Ok(SequenceFidelity {
            fidelity: 1.0,
            pruned_mass: 0.0,
        });
    }
    if plan.len() > MAX_PLAN_LEN {
        return Err(Error::InvalidParameter(format!(
            "plan length {} exceeds {MAX_PLAN_LEN}",
            plan.len()
        )));
    }
    let n = plan[0].n();
    if plan.iter().any(|m| m.n() != n) {
        return Err(Error::InvalidParameter(
            "plan mixes different copy counts".into(),
        ));
    }
    let projectors: Vec<DenseProjector> = plan
        .iter()
        .map(|m| DenseProjector::build_with_cap(m, cap))
        .collect::<Result<_>>()?;
    let n = n as usize;
    let state = DenseState::product_state_with_cap(rho, n, cap)?;

    struct Walk<'a> {
        projectors: &'a [DenseProjector],
        n: usize,
        fidelity: f64,
        pruned: f64,
    }

    impl Walk<'_> {
        /// amp = E_o S (left products only), cond = E_o S E_o' (conjugations).
        fn descend(&mut self, amp: &CMatrix, cond: &CMatrix, depth: usize) {
            if depth == self.projectors.len() {
                self.fidelity += amp.trace().norm_sqr();
                return;
            }
            let proj = &self.projectors[depth];
            let u = proj.basis().unitary();
            let udag = mat2_adjoint(&u);

            // Rotate once into the measurement frame, then branch.
            let mut cond_f = cond.clone();
            cond_f.conjugate_each_qubit(&udag, self.n);
            let mut amp_f = amp.clone();
            amp_f.left_apply_each_qubit(&udag, self.n);

            for sense in [true, false] {
                let mut cond_b = cond_f.clone();
                cond_b.mask_with(proj.keep(), sense);
                let p = cond_b.trace().re;
                if p < PRUNE_THRESHOLD {
                    self.pruned += p.max(0.0);
                    continue;
                }
                cond_b.conjugate_each_qubit(&u, self.n);
                let mut amp_b = amp_f.clone();
                amp_b.mask_rows_with(proj.keep(), sense);
                amp_b.left_apply_each_qubit(&u, self.n);
                self.descend(&amp_b, &cond_b, depth + 1);
            }
        }
    }

    let mut walk = Walk {
        projectors: &projectors,
        n,
        fidelity: 0.0,
        pruned: 0.0,
    };
    walk.descend(&state.mat, &state.mat, 0);
    Ok(SequenceFidelity {
        fidelity: walk.fidelity,
        pruned_mass: walk.pruned,
    })
}

#[inline]
fn swap_bits(x: usize, a: usize, b: usize) -> usize {
    let xa = (x >> a) & 1;
    let xb = (x >> b) & 1;
    if xa != xb {
        x ^ ((1 << a) | (1 << b))
    } else {
        x
    }
}

/// Max entry-wise deviation of a 2^n-dimensional operator from invariance
/// under each adjacent copy transposition.
pub fn swap_deviation(mat: &CMatrix, n: usize) -> f64 {
    assert_eq!(mat.dim(), 1 << n);
    let dim = mat.dim();
    let mut worst = 0.0f64;
    for t in 0..n.saturating_sub(1) {
        let (b1, b2) = (n - 1 - t, n - 2 - t);
        for i in 0..dim {
            let si = swap_bits(i, b1, b2);
            for j in 0..dim {
                let sj = swap_bits(j, b1, b2);
                worst = worst.max((mat.at(si, sj) - mat.at(i, j)).norm());
            }
        }
    }
    worst
}

/// Swap deviation of the materialized yes-projector. Structural consequence
/// of summing over every record of each accepted count: must vanish.
pub fn permutation_invariance_check(proj: &DenseProjector) -> f64 {
    swap_deviation(proj.matrix(), proj.n())
}
