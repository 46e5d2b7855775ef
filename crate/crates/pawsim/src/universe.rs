//! Universe assembly, constraint solving, history states and conditioning.
//!
//! A Universe is the bipartite system clock ⊗ system with total Hamiltonian
//! H = H_C ⊗ 1_S + 1_C ⊗ H_S; its physical states are the kernel vectors of
//! H. Conditioning such a history state on a clock time state recovers the
//! conventional Schrödinger dynamics of the rest, with the conditioning
//! amplitude a(t) constant over the period ("evolution without evolution").
//!
//! Tensor ordering: local clocks first, in declaration order, then the
//! system factor; leftmost factor is the slowest index.

use num_complex::Complex64 as C64;

use crate::clock::ClockNetwork;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::tensor::{contract_factor, DenseOperator, SchmidtData, StateVector, KERNEL_REL_TOL};

/// Amplitudes at or below this floor raise [`Error::ZeroAmplitude`] instead
/// of producing a garbage direction.
pub const CONDITIONING_FLOOR: f64 = 1e-12;
/// Pairing tolerance (relative) for matching clock levels with system levels.
const PAIRING_REL_TOL: f64 = 1e-9;

/// Which clock the conditioning projects on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// Project the full (global) clock onto |t⟩_C.
    Global,
    /// Project local clock J onto |τ⟩_J, leaving the other clocks in place.
    Local(usize),
}

/// A clock network together with the system it provides time for.
#[derive(Debug, Clone)]
pub struct UniverseSpec {
    clock: ClockNetwork,
    system: DenseOperator,
}

impl UniverseSpec {
    pub fn new(clock: ClockNetwork, system: DenseOperator) -> Result<Self> {
        if !system.is_hermitian() {
            return Err(Error::NotHermitian {
                defect: system.hermiticity_defect(),
                tol: crate::tensor::HERMITICITY_TOL * system.max_abs().max(f64::MIN_POSITIVE),
            });
        }
        Ok(Self { clock, system })
    }

    pub fn clock(&self) -> &ClockNetwork {
        &self.clock
    }

    pub fn system(&self) -> &DenseOperator {
        &self.system
    }

    pub fn clock_dim(&self) -> usize {
        self.clock.dim()
    }

    pub fn system_dim(&self) -> usize {
        self.system.dim()
    }

    pub fn dim(&self) -> usize {
        self.clock_dim() * self.system_dim()
    }

    /// Factor dimensions in tensor order: local clocks then the system.
    pub fn factor_dims(&self) -> Vec<usize> {
        let mut dims = self.clock.dims();
        dims.push(self.system_dim());
        dims
    }

    /// H = H_C ⊗ 1_S + 1_C ⊗ H_S, with H_C including the gravitational-like
    /// clock-clock interaction when the network enables it.
    pub fn assemble_hamiltonian(&self) -> DenseOperator {
        let h_c = self.clock.hamiltonian();
        let id_s = DenseOperator::identity(self.system_dim());
        let id_c = DenseOperator::identity(self.clock_dim());
        h_c.tensor(&id_s).add(&id_c.tensor(&self.system))
    }

    /// Solves H|Ψ⟩ = 0, returning one history state per kernel basis vector.
    /// A multi-dimensional kernel is surfaced as a basis; combining it is
    /// the caller's choice (see [`select_history`]).
    pub fn solve_constraint(&self) -> Result<Vec<HistoryState>> {
        let h = self.assemble_hamiltonian();
        let kernel = h.kernel(KERNEL_REL_TOL)?;
        if kernel.is_empty() {
            return Err(Error::EmptyKernel {
                tol: KERNEL_REL_TOL * h.spectral_norm(),
            });
        }
        kernel
            .into_iter()
            .map(|v| HistoryState::from_state(self.clone(), v))
            .collect()
    }

    /// The kernel history whose Schmidt basis coincides with the clock
    /// energy basis: each global clock level W_k is paired with a system
    /// eigenstate of energy −W_k, all pairs entering with equal weight.
    pub fn energy_paired_history(&self) -> Result<HistoryState> {
        let clock_levels = self.clock.global_spectrum();
        let sys_spec = self.system.eig_hermitian()?;
        let scale = clock_levels
            .iter()
            .map(|w| w.abs())
            .chain(sys_spec.eigenvalues.iter().map(|e| e.abs()))
            .fold(1.0f64, f64::max);

        let d_s = self.system_dim();
        let mut psi = StateVector::new(crate::tensor::CVector::zeros(self.dim()));
        let mut pairs = 0usize;
        let mut used = vec![false; d_s];
        for (k, &w) in clock_levels.iter().enumerate() {
            for m in 0..d_s {
                if used[m] {
                    continue;
                }
                if (w + sys_spec.eigenvalues[m]).abs() <= PAIRING_REL_TOL * scale {
                    let term = StateVector::basis(self.clock_dim(), k)
                        .tensor(&sys_spec.eigenvectors[m]);
                    psi = psi.add(&term);
                    used[m] = true;
                    pairs += 1;
                    break;
                }
            }
        }
        if pairs == 0 {
            let h = self.assemble_hamiltonian();
            return Err(Error::EmptyKernel {
                tol: KERNEL_REL_TOL * h.spectral_norm(),
            });
        }
        HistoryState::from_state(self.clone(), psi.normalized()?)
    }
}

/// Normalized combination of kernel basis vectors, with Schmidt data and
/// constraint residual recomputed.
pub fn select_history(basis: &[HistoryState], coeffs: &[C64]) -> Result<HistoryState> {
    if basis.is_empty() {
        return Err(Error::InvalidInput("select_history needs a non-empty basis".into()));
    }
    if basis.len() != coeffs.len() {
        return Err(Error::DimensionMismatch {
            context: "select_history (one coefficient per basis vector)",
            expected: basis.len(),
            actual: coeffs.len(),
        });
    }
    let mut acc = StateVector::new(crate::tensor::CVector::zeros(basis[0].state().dim()));
    for (h, &c) in basis.iter().zip(coeffs.iter()) {
        acc = acc.add(&h.state().scale(c));
    }
    let normalized = acc.normalized()?;
    HistoryState::from_state(basis[0].universe().clone(), normalized)
}

/// A constraint-satisfying Universe state with its conditioning machinery.
#[derive(Debug, Clone)]
pub struct HistoryState {
    universe: UniverseSpec,
    psi: StateVector,
    constraint_residual: f64,
    schmidt: SchmidtData,
    /// c_ab = d_C^{-1} Σ_n λ_n ⟨φ_n|w_a⟩⟨w_b|φ_n⟩ in the clock energy basis;
    /// a²(t) = Σ_ab c_ab e^{−i(W_a−W_b)t}.
    clock_coefficients: crate::tensor::CMatrix,
}

impl HistoryState {
    /// Wraps an explicit constraint solution. The state must be normalized
    /// and lie in the numerical kernel of the assembled Hamiltonian.
    pub fn new(universe: UniverseSpec, psi: StateVector) -> Result<Self> {
        let psi = psi.normalized()?;
        let h = universe.assemble_hamiltonian();
        let residual = h.apply(&psi).norm();
        let tol = KERNEL_REL_TOL * h.spectral_norm().max(f64::MIN_POSITIVE);
        if residual > tol {
            return Err(Error::InvalidInput(format!(
                "state is not a constraint solution: residual {residual:.3e} > {tol:.3e}"
            )));
        }
        Self::from_state(universe, psi)
    }

    fn from_state(universe: UniverseSpec, psi: StateVector) -> Result<Self> {
        let h = universe.assemble_hamiltonian();
        let constraint_residual = h.apply(&psi).norm();
        let schmidt = psi.schmidt(universe.clock_dim(), universe.system_dim())?;
        let d_c = universe.clock_dim();
        let mut coeffs = crate::tensor::CMatrix::zeros(d_c, d_c);
        for (l, left) in schmidt.coefficients.iter().zip(schmidt.left.iter()) {
            for a in 0..d_c {
                for b in 0..d_c {
                    coeffs[(a, b)] +=
                        C64::new(l / d_c as f64, 0.0) * left.vector()[a].conj() * left.vector()[b];
                }
            }
        }
        Ok(Self {
            universe,
            psi,
            constraint_residual,
            schmidt,
            clock_coefficients: coeffs,
        })
    }

    pub fn universe(&self) -> &UniverseSpec {
        &self.universe
    }

    pub fn state(&self) -> &StateVector {
        &self.psi
    }

    pub fn constraint_residual(&self) -> f64 {
        self.constraint_residual
    }

    pub fn schmidt(&self) -> &SchmidtData {
        &self.schmidt
    }

    pub fn clock_coefficients(&self) -> &crate::tensor::CMatrix {
        &self.clock_coefficients
    }

    /// Unnormalized conditional vector (⟨t|_scope ⊗ 1)|Ψ⟩.
    fn project(&self, scope: Scope, t: f64) -> Result<StateVector> {
        match scope {
            Scope::Global => {
                let bra = self.universe.clock.global_time_state(t);
                contract_factor(
                    &self.psi,
                    &[self.universe.clock_dim(), self.universe.system_dim()],
                    0,
                    &bra,
                )
            }
            Scope::Local(j) => {
                let bra = self.universe.clock.local(j)?.time_state(t);
                contract_factor(&self.psi, &self.universe.factor_dims(), j, &bra)
            }
        }
    }

    /// Conditions on the global clock time state |t⟩_C.
    pub fn condition_global(&self, t: f64) -> Result<ConditionalState> {
        self.condition(Scope::Global, t)
    }

    /// Conditions on local clock J's time state |τ⟩_J; the result lives on
    /// the remaining clocks and the system.
    pub fn condition_local(&self, j: usize, tau: f64) -> Result<ConditionalState> {
        self.condition(Scope::Local(j), tau)
    }

    pub fn condition(&self, scope: Scope, t: f64) -> Result<ConditionalState> {
        let raw = self.project(scope, t)?;
        let amplitude = raw.norm();
        if amplitude <= CONDITIONING_FLOOR {
            return Err(Error::ZeroAmplitude {
                label: t,
                amplitude,
            });
        }
        Ok(ConditionalState {
            label: t,
            amplitude,
            psi: raw.scale(C64::new(1.0 / amplitude, 0.0)),
        })
    }

    /// Conditioning amplitude a(t) (0.0 where the projection vanishes).
    pub fn amplitude(&self, scope: Scope, t: f64) -> Result<f64> {
        Ok(self.project(scope, t)?.norm())
    }

    /// ρ(t) = |ψ(t)⟩⟨ψ(t)| of the conditional state.
    pub fn conditional_density(&self, scope: Scope, t: f64) -> Result<ConditionalDensity> {
        let cond = self.condition(scope, t)?;
        Ok(ConditionalDensity {
            label: t,
            rho: cond.psi.projector(),
        })
    }

    /// Tr[O ρ(t)] for a Hermitian observable.
    ///
    /// `observable` may act on the full conditional factor, or on the system
    /// alone, in which case it is embedded as 1 ⊗ O_S.
    pub fn expectation(&self, observable: &DenseOperator, scope: Scope, t: f64) -> Result<f64> {
        let cond = self.condition(scope, t)?;
        let op = self.embed_observable(observable, scope, cond.psi.dim())?;
        Ok(op.expectation(&cond.psi).re)
    }

    fn embed_observable(
        &self,
        observable: &DenseOperator,
        scope: Scope,
        conditional_dim: usize,
    ) -> Result<DenseOperator> {
        if observable.dim() == conditional_dim {
            return Ok(observable.clone());
        }
        if observable.dim() == self.universe.system_dim() {
            let d_rest = conditional_dim / self.universe.system_dim();
            return Ok(DenseOperator::identity(d_rest).tensor(observable));
        }
        let _ = scope;
        Err(Error::DimensionMismatch {
            context: "expectation (observable must match the conditional factor or the system)",
            expected: conditional_dim,
            actual: observable.dim(),
        })
    }

    /// Samples a(t) over the grid together with the time-state probability
    /// density Pr(t) = (d/T)·a²(t) and its quadrature sum over the span.
    pub fn amplitude_profile(&self, scope: Scope, grid: &TimeGrid) -> Result<AmplitudeProfile> {
        let d = match scope {
            Scope::Global => self.universe.clock_dim(),
            Scope::Local(j) => self.universe.clock.local(j)?.dim(),
        };
        let span = grid.span();
        let mut samples = Vec::with_capacity(grid.len);
        let mut densities = Vec::with_capacity(grid.len);
        let mut quadrature_sum = 0.0;
        for t in grid.nodes() {
            let a = self.amplitude(scope, t)?;
            let pr = d as f64 / span * a * a;
            quadrature_sum += pr * grid.step;
            samples.push((t, a));
            densities.push(pr);
        }
        Ok(AmplitudeProfile {
            samples,
            densities,
            quadrature_sum,
        })
    }
}

/// The pair (a, |ψ⟩) produced by conditioning at one time value.
#[derive(Debug, Clone)]
pub struct ConditionalState {
    pub label: f64,
    /// Conditioning amplitude a = ‖(⟨t| ⊗ 1)Ψ‖.
    pub amplitude: f64,
    /// Normalized conditional state on the complement factor.
    pub psi: StateVector,
}

/// Pure conditional density matrix at one time value.
#[derive(Debug, Clone)]
pub struct ConditionalDensity {
    pub label: f64,
    pub rho: DenseOperator,
}

/// a(t) samples plus the induced probability density of time states.
#[derive(Debug, Clone)]
pub struct AmplitudeProfile {
    pub samples: Vec<(f64, f64)>,
    /// Pr(t) = (d/T)·a²(t) per node.
    pub densities: Vec<f64>,
    /// Riemann sum of Pr(t) over the grid span (≈ 1 over one period).
    pub quadrature_sum: f64,
}

impl AmplitudeProfile {
    pub fn max_deviation_from_first(&self) -> f64 {
        let a0 = self.samples[0].1;
        self.samples
            .iter()
            .map(|(_, a)| (a - a0).abs())
            .fold(0.0, f64::max)
    }
}
