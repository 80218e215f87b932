//! The radar-scan protocol: a phi sweep locates the plane through the
//! z-axis and the state, a theta sweep locates the plane through the
//! y-axis, and their intersection estimates the eigen-axis.
//!
//! Two execution modes share the control flow. `AnalyticIid` consumes a
//! fresh product state per step and computes exact outcome probabilities
//! from the binomial identity; `DenseExact` drives one evolving joint state
//! through every projective update, so the second sweep sees the
//! back-action of the first. Comparing the two is the point of the
//! experiment.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::bloch::{
    dot3, eigenstates_on_axis, norm3, BasisFamily, DensityOperator, Eigendecomposition, MeasBasis,
};
use crate::dense::{DenseProjector, DenseState, SequentialSimulator, DEFAULT_CAP, HARD_CAP};
use crate::error::{Error, Result};
use crate::measurement::{
    entanglement_fidelity, p_yes, sample_outcome, CollectiveMeasurement, Outcome,
};

/// Yes-sets spanning more than this angular range mean the state lies in
/// (nearly) every tested layer: the sweep cannot constrain its plane.
pub const UNCONSTRAINED_SPAN: f64 = std::f64::consts::FRAC_PI_2;

/// Cross products shorter than this mean the two plane normals are
/// (near-)parallel and the intersection is not a line.
pub const PARALLEL_THRESHOLD: f64 = 1e-6;

/// How the protocol executes measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScanMode {
    /// Exact per-step probabilities on a fresh product state each time.
    AnalyticIid,
    /// One evolving joint state with true projective back-action.
    DenseExact,
}

/// Protocol configuration. The sweep step equals the layer thickness eps,
/// so a sweep visits ceil(pi / eps) angles at most.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanConfig {
    pub eps: f64,
    pub n: u64,
    pub mode: ScanMode,
    pub seed: u64,
    /// Stop each sweep at the first "yes" (protocol default) or run the
    /// full sweep and refine the estimate over the whole yes-set.
    pub refine: bool,
    pub max_steps: usize,
    /// Qubit cap for DenseExact runs.
    pub dense_cap: usize,
}

impl ScanConfig {
    pub fn new(eps: f64, n: u64, mode: ScanMode, seed: u64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "eps = {eps} outside (0, 2]"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("n must be >= 1".into()));
        }
        Ok(Self {
            eps,
            n,
            mode,
            seed,
            refine: false,
            max_steps: (std::f64::consts::PI / eps).ceil() as usize,
            dense_cap: DEFAULT_CAP,
        })
    }

    pub fn with_refine(mut self, refine: bool) -> Self {
        self.refine = refine;
        self
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Result<Self> {
        if max_steps == 0 {
            return Err(Error::InvalidParameter("max_steps must be >= 1".into()));
        }
        self.max_steps = max_steps;
        Ok(self)
    }

    pub fn with_dense_cap(mut self, cap: usize) -> Result<Self> {
        if cap > HARD_CAP {
            return Err(Error::InvalidParameter(format!(
                "dense cap {cap} exceeds the hard ceiling {HARD_CAP}"
            )));
        }
        self.dense_cap = cap;
        Ok(self)
    }

    /// Angles visited by one sweep: 0, eps, 2 eps, ... below pi.
    pub fn sweep_angles(&self) -> Vec<f64> {
        (0..self.max_steps)
            .map(|i| i as f64 * self.eps)
            .take_while(|a| *a < std::f64::consts::PI)
            .collect()
    }
}

/// One measurement in the ordered record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TranscriptEntry {
    pub family: BasisFamily,
    pub angle: f64,
    pub outcome: Outcome,
}

/// Exact per-step fidelity accounting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LedgerEntry {
    pub family: BasisFamily,
    pub angle: f64,
    /// Exact yes-probability at this step (DenseExact: on the current
    /// back-acted state; AnalyticIid: on a fresh product state).
    pub p_yes: f64,
    /// p^2 + (1-p)^2 for this step.
    pub step_fidelity: f64,
    /// 1 - max(p, 1-p): how far the step was from a certain outcome.
    pub implied_delta: f64,
    /// Running product of step fidelities up to and including this step.
    pub cumulative_fidelity_product: f64,
}

/// Estimated eigen-axis, defined up to sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum AxisEstimate {
    Resolved([f64; 3]),
    /// Geometry left the axis undetermined; no direction is fabricated.
    Degenerate,
}

/// Antipodal pure-state pair on the estimated axis; the labeling is
/// arbitrary since the spectrum is not estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenstatePair {
    pub e0: [num_complex::Complex64; 2],
    pub e1: [num_complex::Complex64; 2],
}

/// Full protocol output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    /// Angle locating the plane through z and the state, when constrained.
    pub phi_star: Option<f64>,
    /// Angle locating the plane through y and the state, when constrained.
    pub theta_star: Option<f64>,
    pub yes_sets: YesSets,
    pub axis: AxisEstimate,
    pub eigenstates: Option<EigenstatePair>,
    /// Unsigned angle between estimated and true axis, in [0, pi/2];
    /// None when either side is degenerate.
    pub angular_error: Option<f64>,
    pub fidelity_ledger: Vec<LedgerEntry>,
    pub transcript: Vec<TranscriptEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct YesSets {
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
}

/// Circular span of a set of diameter angles with period pi: the smallest
/// arc containing all of them.
pub fn circular_span(angles: &[f64]) -> f64 {
    const PERIOD: f64 = std::f64::consts::PI;
    if angles.len() <= 1 {
        return 0.0;
    }
    let mut sorted = angles.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut max_gap = PERIOD - sorted.last().unwrap() + sorted.first().unwrap();
    for w in sorted.windows(2) {
        max_gap = max_gap.max(w[1] - w[0]);
    }
    (PERIOD - max_gap).max(0.0)
}

fn phi_normal(angle: f64) -> [f64; 3] {
    [angle.cos(), angle.sin(), 0.0]
}

fn theta_normal(angle: f64) -> [f64; 3] {
    [angle.sin(), 0.0, angle.cos()]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize3(v: [f64; 3]) -> Option<[f64; 3]> {
    let n = norm3(v);
    if n < PARALLEL_THRESHOLD {
        None
    } else {
        Some([v[0] / n, v[1] / n, v[2] / n])
    }
}

/// Intersects the two located planes. Degenerate when the normals are
/// (near-)parallel, i.e. both sweeps found the same plane.
pub fn intersect_planes(phi_star: f64, theta_star: f64) -> AxisEstimate {
    match normalize3(cross3(phi_normal(phi_star), theta_normal(theta_star))) {
        Some(axis) => AxisEstimate::Resolved(axis),
        None => AxisEstimate::Degenerate,
    }
}

/// Projects a sweep's rotation axis onto the other sweep's plane: the
/// fallback when one sweep is unconstrained because the state is (nearly)
/// aligned with that rotation axis.
fn project_onto_plane(v: [f64; 3], normal: [f64; 3]) -> AxisEstimate {
    let d = dot3(v, normal);
    match normalize3([v[0] - d * normal[0], v[1] - d * normal[1], v[2] - d * normal[2]]) {
        Some(axis) => AxisEstimate::Resolved(axis),
        None => AxisEstimate::Degenerate,
    }
}

/// Unsigned angle between two axes (sign-blind), in [0, pi/2].
pub fn axis_angular_error(a: [f64; 3], b: [f64; 3]) -> f64 {
    dot3(a, b).abs().clamp(0.0, 1.0).acos()
}

enum Target<'a> {
    Analytic,
    Dense(&'a mut SequentialSimulator),
}

struct SweepOutput {
    star: Option<f64>,
    yes_set: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    family: BasisFamily,
    rho: &DensityOperator,
    target: &mut Target<'_>,
    cfg: &ScanConfig,
    rng: &mut ChaCha12Rng,
    transcript: &mut Vec<TranscriptEntry>,
    ledger: &mut Vec<LedgerEntry>,
    cumulative: &mut f64,
) -> Result<SweepOutput> {
    let mut yes_set = Vec::new();
    for angle in cfg.sweep_angles() {
        let m = CollectiveMeasurement::new(MeasBasis::new(family, angle), cfg.n, cfg.eps)?;
        let (p, outcome) = match target {
            Target::Analytic => {
                let p = p_yes(rho, &m);
                (p, sample_outcome(p, rng))
            }
            Target::Dense(sim) => {
                let proj = DenseProjector::build_with_cap(&m, cfg.dense_cap)?;
                sim.step(&proj, rng)?
            }
        };
        let step_fidelity = entanglement_fidelity(p);
        *cumulative *= step_fidelity;
        transcript.push(TranscriptEntry {
            family,
            angle,
            outcome,
        });
        ledger.push(LedgerEntry {
            family,
            angle,
            p_yes: p,
            step_fidelity,
            implied_delta: 1.0 - p.max(1.0 - p),
            cumulative_fidelity_product: *cumulative,
        });
        if outcome == Outcome::Yes {
            yes_set.push(angle);
            if !cfg.refine {
                break;
            }
        }
    }

    let star = if yes_set.is_empty() {
        // All-no sweep: possible at small n by bad luck; reported, not hidden.
        None
    } else if cfg.refine {
        if circular_span(&yes_set) > UNCONSTRAINED_SPAN {
            // The state sits in (nearly) every tested layer.
            None
        } else {
            // Refinement: the accepting angle whose layer is centered best,
            // judged by the projected distribution of the scanned state.
            let mut best = yes_set[0];
            let mut best_score = f64::INFINITY;
            for &a in &yes_set {
                let b = MeasBasis::new(family, a);
                let score = (b.project(rho).q0() - 0.5).abs();
                if score < best_score {
                    best_score = score;
                    best = a;
                }
            }
            Some(best)
        }
    } else {
        Some(yes_set[0])
    };
    Ok(SweepOutput { star, yes_set })
}

/// Runs the full protocol: phi sweep, theta sweep (on the same evolving
/// state in DenseExact mode), plane intersection, and error/fidelity
/// accounting against the hidden ground truth.
pub fn run_protocol(rho: &DensityOperator, cfg: &ScanConfig) -> Result<ScanResult> {
    run_protocol_with_state(rho, cfg).map(|(r, _)| r)
}

/// Like [`run_protocol`], additionally returning the final joint state of a
/// DenseExact run for diagnostics.
pub fn run_protocol_with_state(
    rho: &DensityOperator,
    cfg: &ScanConfig,
) -> Result<(ScanResult, Option<DenseState>)> {
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut transcript = Vec::new();
    let mut ledger = Vec::new();
    let mut cumulative = 1.0;

    let mut sim = match cfg.mode {
        ScanMode::AnalyticIid => None,
        ScanMode::DenseExact => {
            let state =
                DenseState::product_state_with_cap(rho, cfg.n as usize, cfg.dense_cap)?;
            Some(SequentialSimulator::new(state))
        }
    };

    let (phi_out, theta_out) = {
        let mut target = match sim.as_mut() {
            None => Target::Analytic,
            Some(s) => Target::Dense(s),
        };
        let phi_out = sweep(
            BasisFamily::Phi,
            rho,
            &mut target,
            cfg,
            &mut rng,
            &mut transcript,
            &mut ledger,
            &mut cumulative,
        )?;
        let theta_out = sweep(
            BasisFamily::Theta,
            rho,
            &mut target,
            cfg,
            &mut rng,
            &mut transcript,
            &mut ledger,
            &mut cumulative,
        )?;
        (phi_out, theta_out)
    };

    let axis = match (phi_out.star, theta_out.star) {
        (Some(p), Some(t)) => intersect_planes(p, t),
        // Theta unconstrained: the state is (nearly) aligned with the theta
        // sweep's rotation axis y; keep the phi plane and that constraint.
        (Some(p), None) => project_onto_plane([0.0, 1.0, 0.0], phi_normal(p)),
        // Phi unconstrained: aligned with the phi rotation axis z.
        (None, Some(t)) => project_onto_plane([0.0, 0.0, 1.0], theta_normal(t)),
        (None, None) => AxisEstimate::Degenerate,
    };

    let eigenstates = match axis {
        AxisEstimate::Resolved(a) => {
            let (e0, e1) = eigenstates_on_axis(a);
            Some(EigenstatePair { e0, e1 })
        }
        AxisEstimate::Degenerate => None,
    };

    let angular_error = match (&axis, rho.eigendecompose()) {
        (AxisEstimate::Resolved(est), Eigendecomposition::Resolved { axis: truth, .. }) => {
            Some(axis_angular_error(*est, truth))
        }
        _ => None,
    };

    let result = ScanResult {
        phi_star: phi_out.star,
        theta_star: theta_out.star,
        yes_sets: YesSets {
            phi: phi_out.yes_set,
            theta: theta_out.yes_set,
        },
        axis,
        eigenstates,
        angular_error,
        fidelity_ledger: ledger,
        transcript,
    };
    Ok((result, sim.map(SequentialSimulator::into_state)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{prop1_classify, LayerSide};
    use approx::assert_abs_diff_eq;

    fn state(x: f64, y: f64, z: f64) -> DensityOperator {
        DensityOperator::from_bloch([x, y, z]).unwrap()
    }

    #[test]
    fn sweep_angles_respect_step_and_period() {
        let cfg = ScanConfig::new(0.3, 10, ScanMode::AnalyticIid, 0).unwrap();
        let angles = cfg.sweep_angles();
        assert_eq!(angles.len(), 11);
        assert_eq!(angles[0], 0.0);
        assert_abs_diff_eq!(angles[10], 3.0, epsilon = 1e-15);
        assert!(angles.iter().all(|a| *a < std::f64::consts::PI));
    }

    #[test]
    fn circular_span_cases() {
        assert_eq!(circular_span(&[]), 0.0);
        assert_eq!(circular_span(&[1.0]), 0.0);
        assert_abs_diff_eq!(circular_span(&[0.0, 0.3]), 0.3, epsilon = 1e-12);
        // Cluster wrapping around the period: {0, 0.3, 3.0} spans
        // pi - 2.7, not 3.0.
        assert_abs_diff_eq!(
            circular_span(&[0.0, 0.3, 3.0]),
            std::f64::consts::PI - 2.7,
            epsilon = 1e-12
        );
        // Spread over the whole half-circle.
        let spread: Vec<f64> = (0..11).map(|i| 0.3 * i as f64).collect();
        assert_abs_diff_eq!(
            circular_span(&spread),
            std::f64::consts::PI - 0.3,
            epsilon = 1e-12
        );
    }

    #[test]
    fn intersect_examples() {
        // phi* = pi/2, theta* = 0: normals y and z, axis +-x.
        match intersect_planes(std::f64::consts::FRAC_PI_2, 0.0) {
            AxisEstimate::Resolved(a) => {
                assert_abs_diff_eq!(a[0].abs(), 1.0, epsilon = 1e-12);
                assert!(a[1].abs() < 1e-12 && a[2].abs() < 1e-12);
            }
            AxisEstimate::Degenerate => panic!("unexpected degenerate"),
        }
        // phi* = 0, theta* = pi/2: both normals are x, no unique line.
        assert_eq!(
            intersect_planes(0.0, std::f64::consts::FRAC_PI_2),
            AxisEstimate::Degenerate
        );
        // Oblique case: result orthogonal to both normals.
        let (p, t) = (std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_4);
        match intersect_planes(p, t) {
            AxisEstimate::Resolved(a) => {
                assert!(dot3(a, phi_normal(p)).abs() < 1e-10);
                assert!(dot3(a, theta_normal(t)).abs() < 1e-10);
                assert_abs_diff_eq!(norm3(a), 1.0, epsilon = 1e-12);
            }
            AxisEstimate::Degenerate => panic!("unexpected degenerate"),
        }
    }

    #[test]
    fn first_yes_with_certain_outcome_stops_immediately() {
        // eps = 2 accepts every record: p_yes = 1 at the first angle of each
        // sweep.
        let cfg = ScanConfig::new(2.0, 5, ScanMode::AnalyticIid, 3).unwrap();
        let result = run_protocol(&state(0.3, 0.2, 0.1), &cfg).unwrap();
        assert_eq!(result.transcript.len(), 2);
        assert_eq!(result.phi_star, Some(0.0));
        assert_eq!(result.theta_star, Some(0.0));
        assert_eq!(result.fidelity_ledger[0].p_yes, 1.0);
        assert_eq!(result.fidelity_ledger[1].cumulative_fidelity_product, 1.0);
    }

    #[test]
    fn maximally_mixed_state_is_degenerate_under_refine() {
        // Large n: every layer contains the center, both sweeps say yes
        // everywhere, and no plane is constrained.
        let cfg = ScanConfig::new(0.3, 400, ScanMode::AnalyticIid, 11)
            .unwrap()
            .with_refine(true);
        let result = run_protocol(&DensityOperator::maximally_mixed(), &cfg).unwrap();
        assert_eq!(result.phi_star, None);
        assert_eq!(result.theta_star, None);
        assert_eq!(result.axis, AxisEstimate::Degenerate);
        assert_eq!(result.eigenstates, None);
        assert_eq!(result.angular_error, None);
        assert_eq!(result.yes_sets.phi.len(), 11);
        assert_eq!(result.yes_sets.theta.len(), 11);
    }

    #[test]
    fn pure_y_state_uses_theta_fallback() {
        // r = (0, 1, 0): the theta sweep sees layer distance 0 everywhere
        // (y lies in every tested plane), so it is unconstrained; the phi
        // sweep plus the y-axis constraint recovers the axis exactly.
        let cfg = ScanConfig::new(0.3, 400, ScanMode::AnalyticIid, 17)
            .unwrap()
            .with_refine(true);
        let result = run_protocol(&state(0.0, 1.0, 0.0), &cfg).unwrap();
        assert_eq!(result.theta_star, None);
        assert_eq!(result.phi_star, Some(0.0));
        match result.axis {
            AxisEstimate::Resolved(a) => {
                assert_abs_diff_eq!(a[1].abs(), 1.0, epsilon = 1e-9);
            }
            AxisEstimate::Degenerate => panic!("axis should resolve"),
        }
        assert!(result.angular_error.unwrap() < 1e-9);
    }

    #[test]
    fn x_state_analytic_refine_recovers_axis() {
        let cfg = ScanConfig::new(0.3, 400, ScanMode::AnalyticIid, 5)
            .unwrap()
            .with_refine(true);
        let result = run_protocol(&state(0.8, 0.0, 0.0), &cfg).unwrap();
        // At large n the accepting angles cluster where |0.8 cos phi| <= eps
        // (phi sweep) and |0.8 sin theta| <= eps (theta sweep).
        for a in &result.yes_sets.phi {
            assert!(
                (0.8 * a.cos()).abs() < 0.45,
                "phi yes at {a} outside the soft layer"
            );
        }
        let err = result.angular_error.unwrap();
        assert!(err <= 0.3, "angular error {err}");
    }

    #[test]
    fn per_step_probabilities_respect_certificates() {
        let cfg = ScanConfig::new(0.25, 50, ScanMode::AnalyticIid, 23)
            .unwrap()
            .with_refine(true);
        let rho = state(0.7, 0.0, 0.1);
        let result = run_protocol(&rho, &cfg).unwrap();
        for entry in &result.fidelity_ledger {
            let m = CollectiveMeasurement::new(
                MeasBasis::new(entry.family, entry.angle),
                cfg.n,
                cfg.eps,
            )
            .unwrap();
            let cert = prop1_classify(&rho, &m);
            match cert.stats.side {
                LayerSide::Inside => {
                    assert!(entry.p_yes >= cert.stats.exponent_bound - 1e-12)
                }
                LayerSide::Outside => {
                    assert!(entry.p_yes <= cert.stats.exponent_bound + 1e-12)
                }
            }
        }
    }

    #[test]
    fn ledger_is_internally_consistent() {
        let cfg = ScanConfig::new(0.4, 30, ScanMode::AnalyticIid, 41)
            .unwrap()
            .with_refine(true);
        let result = run_protocol(&state(0.2, 0.5, -0.4), &cfg).unwrap();
        let mut cumulative = 1.0;
        for entry in &result.fidelity_ledger {
            let f = entanglement_fidelity(entry.p_yes);
            assert_abs_diff_eq!(entry.step_fidelity, f, epsilon = 1e-15);
            cumulative *= f;
            assert_abs_diff_eq!(
                entry.cumulative_fidelity_product,
                cumulative,
                epsilon = 1e-12
            );
            assert!(entry.implied_delta >= 0.0 && entry.implied_delta <= 0.5);
        }
        assert_eq!(result.fidelity_ledger.len(), result.transcript.len());
    }

    #[test]
    fn identical_seeds_reproduce_identical_results() {
        for mode in [ScanMode::AnalyticIid, ScanMode::DenseExact] {
            let n = if mode == ScanMode::DenseExact { 6 } else { 60 };
            let cfg = ScanConfig::new(0.5, n, mode, 12345)
                .unwrap()
                .with_refine(true);
            let rho = state(0.6, 0.3, 0.2);
            let a = run_protocol(&rho, &cfg).unwrap();
            let b = run_protocol(&rho, &cfg).unwrap();
            assert_eq!(a, b);
            assert_eq!(
                serde_json::to_string(&a).unwrap(),
                serde_json::to_string(&b).unwrap()
            );
        }
    }

    #[test]
    fn dense_run_keeps_state_valid() {
        let cfg = ScanConfig::new(0.5, 6, ScanMode::DenseExact, 77)
            .unwrap()
            .with_refine(true);
        let rho = state(0.8, 0.0, 0.0);
        let (result, final_state) = run_protocol_with_state(&rho, &cfg).unwrap();
        let final_state = final_state.unwrap();
        let d = final_state.diagnostics();
        assert!(d.trace_deviation <= 1e-9);
        assert!(d.hermiticity_deviation <= 1e-9);
        assert!(d.min_eigenvalue_probe >= -1e-9);
        assert!(crate::dense::swap_deviation(final_state.matrix(), 6) <= 1e-9);
        assert_eq!(result.transcript.len(), result.fidelity_ledger.len());
        assert!(!result.transcript.is_empty());
    }

    #[test]
    fn dense_capacity_is_enforced() {
        let cfg = ScanConfig::new(0.3, 11, ScanMode::DenseExact, 0).unwrap();
        assert!(matches!(
            run_protocol(&state(0.5, 0.0, 0.0), &cfg),
            Err(Error::Capacity { .. })
        ));
    }
}
