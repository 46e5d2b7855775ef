//! Clock models, time states, spectrum classification and resolutions of
//! the identity.
//!
//! A clock is specified by its (non-degenerate, strictly ascending) energy
//! spectrum {w_k} and reference phases {φ_k}; all clock states are expressed
//! in the clock's own energy eigenbasis, where the Hamiltonian is diagonal.
//! Time states are |t⟩ = d_C^{-1/2} Σ_k e^{−i(w_k t + φ_k)} |w_k⟩ and are
//! generally non-orthogonal across t in finite dimension.
//!
//! Resolutions of the identity come in three concrete kinds:
//! - discrete-orthonormal (evenly spaced spectra, N = d_C nodes, weight 1),
//! - overcomplete-discrete (rational frequency ratios, N > max r_k nodes,
//!   weight d_C/N),
//! - quadrature (uniform grid over one period, weight d_C·Δt/T).

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::tensor::{embed_local, DenseOperator, StateVector};

/// Identity-defect tolerance for discrete-orthonormal resolutions.
pub const RESOLUTION_TOL_ORTHONORMAL: f64 = 1e-12;
/// Identity-defect tolerance for overcomplete and quadrature resolutions.
pub const RESOLUTION_TOL_OTHER: f64 = 1e-10;
/// Default denominator cap for continued-fraction rationalization.
pub const DEFAULT_DENOMINATOR_CAP: u64 = 1_000_000;
/// Relative tolerance for the evenly-spaced gap test.
const EVEN_GAP_REL_TOL: f64 = 1e-9;
/// Absolute tolerance on |x − A/B| below which a ratio counts as exactly
/// rational rather than cap-bound approximated.
const RATIONAL_EXACT_TOL: f64 = 1e-13;
/// Hard ceiling for quadrature node counts during auto-selection.
const QUADRATURE_MAX_NODES: usize = 1 << 23;

/// A finite-dimensional clock: spectrum {w_k} (strictly ascending) plus
/// reference phases {φ_k}.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockModel {
    frequencies: Vec<f64>,
    phases: Vec<f64>,
}

impl ClockModel {
    pub fn new(frequencies: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(Error::Spectrum("clock needs at least one level".into()));
        }
        if phases.len() != frequencies.len() {
            return Err(Error::DimensionMismatch {
                context: "ClockModel::new (one phase per frequency)",
                expected: frequencies.len(),
                actual: phases.len(),
            });
        }
        for pair in frequencies.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(Error::Spectrum(format!(
                    "frequencies must be strictly ascending, got {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        if frequencies.iter().any(|w| !w.is_finite()) {
            return Err(Error::Spectrum("frequencies must be finite".into()));
        }
        Ok(Self { frequencies, phases })
    }

    /// Zero-phase clock.
    pub fn with_spectrum(frequencies: Vec<f64>) -> Result<Self> {
        let phases = vec![0.0; frequencies.len()];
        Self::new(frequencies, phases)
    }

    /// Two-level spin clock with Hamiltonian spectrum {−ω, +ω}.
    pub fn spin(omega: f64) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::Spectrum(format!(
                "spin clock frequency must be positive, got {omega}"
            )));
        }
        Self::with_spectrum(vec![-omega, omega])
    }

    pub fn dim(&self) -> usize {
        self.frequencies.len()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// The clock Hamiltonian, diagonal in its own energy basis.
    pub fn hamiltonian(&self) -> DenseOperator {
        DenseOperator::from_diagonal(&self.frequencies)
    }

    /// Equal-magnitude superposition d_C^{-1/2} Σ_k e^{−iφ_k} |w_k⟩.
    pub fn reference_state(&self) -> StateVector {
        self.time_state(0.0)
    }

    /// |t⟩ = d_C^{-1/2} Σ_k e^{−i(w_k t + φ_k)} |w_k⟩.
    pub fn time_state(&self, t: f64) -> StateVector {
        let d = self.dim();
        let amp = 1.0 / (d as f64).sqrt();
        let amps: Vec<C64> = self
            .frequencies
            .iter()
            .zip(self.phases.iter())
            .map(|(&w, &p)| C64::from_polar(amp, -(w * t + p)))
            .collect();
        StateVector::from_slice(&amps)
    }

    /// ⟨s|t⟩ = d_C^{-1} Σ_k e^{i w_k (s − t)}; phase-independent.
    pub fn overlap(&self, s: f64, t: f64) -> C64 {
        let d = self.dim() as f64;
        self.frequencies
            .iter()
            .map(|&w| C64::from_polar(1.0, w * (s - t)))
            .sum::<C64>()
            / C64::new(d, 0.0)
    }

    /// Classifies the spectrum as evenly spaced, rational or cap-bound
    /// approximated, and derives the fundamental period.
    pub fn classify_spectrum(&self, denominator_cap: u64) -> Result<SpectrumClass> {
        classify_frequencies(&self.frequencies, denominator_cap)
    }

    /// Builds a resolution of the identity of the requested kind with
    /// default node counts.
    pub fn build_resolution(&self, kind: ResolutionKind) -> Result<ResolutionOfIdentity> {
        self.build_resolution_with(kind, None, DEFAULT_DENOMINATOR_CAP)
    }

    /// Resolution builder with an explicit node count (`None` = default) and
    /// denominator cap.
    pub fn build_resolution_with(
        &self,
        kind: ResolutionKind,
        nodes: Option<usize>,
        denominator_cap: u64,
    ) -> Result<ResolutionOfIdentity> {
        let class = self.classify_spectrum(denominator_cap)?;
        let d = self.dim();
        match kind {
            ResolutionKind::DiscreteOrthonormal => {
                if class.kind != SpectrumKind::EvenlySpaced {
                    return Err(Error::InfeasibleResolution(format!(
                        "discrete-orthonormal requires an evenly spaced spectrum, got {:?}",
                        class.kind
                    )));
                }
                let n = nodes.unwrap_or(d);
                if n != d {
                    return Err(Error::InfeasibleResolution(format!(
                        "discrete-orthonormal requires N = d_C = {d}, got {n}"
                    )));
                }
                let ts: Vec<f64> = (0..n).map(|k| k as f64 * class.period / d as f64).collect();
                self.finish_resolution(kind, ts, 1.0, RESOLUTION_TOL_ORTHONORMAL)
            }
            ResolutionKind::OvercompleteDiscrete => {
                let min_nodes = class.max_harmonic() as usize + 1;
                let n = nodes.unwrap_or(min_nodes);
                if n < min_nodes {
                    return Err(Error::InfeasibleResolution(format!(
                        "overcomplete-discrete requires N > max r_k = {}, got {n}",
                        class.max_harmonic()
                    )));
                }
                let ts: Vec<f64> = (0..n).map(|k| k as f64 * class.period / n as f64).collect();
                let weight = d as f64 / n as f64;
                self.finish_resolution(kind, ts, weight, RESOLUTION_TOL_OTHER)
            }
            ResolutionKind::Quadrature => {
                let n = match nodes {
                    Some(n) => n,
                    None => self.auto_quadrature_nodes(&class)?,
                };
                let ts: Vec<f64> = (0..n).map(|k| k as f64 * class.period / n as f64).collect();
                let weight = d as f64 / n as f64; // d_C·Δt/T with Δt = T/N
                self.finish_resolution(kind, ts, weight, RESOLUTION_TOL_OTHER)
            }
        }
    }

    /// Explicitly sums weight·Σ_n |t_n⟩⟨t_n| and returns the Frobenius-norm
    /// defect against the identity. This is the direct-construction route;
    /// the auto-node search uses the closed geometric-sum form instead.
    pub fn identity_defect(&self, nodes: &[f64], weight: f64) -> f64 {
        let d = self.dim();
        // Gram accumulation over raw vectors; entry (a,b) of the summed
        // projector is (weight/d)·Σ_n e^{-i(w_a-w_b)t_n + i(φ_b-φ_a)}.
        let mut acc = vec![C64::new(0.0, 0.0); d * d];
        for &t in nodes {
            let amps: Vec<C64> = self
                .frequencies
                .iter()
                .zip(self.phases.iter())
                .map(|(&w, &p)| C64::from_polar(1.0, -(w * t + p)))
                .collect();
            for a in 0..d {
                for b in 0..d {
                    acc[a * d + b] += amps[a] * amps[b].conj();
                }
            }
        }
        let scale = weight / d as f64;
        let mut sq = 0.0;
        for a in 0..d {
            for b in 0..d {
                let mut v = acc[a * d + b] * C64::new(scale, 0.0);
                if a == b {
                    v -= C64::new(1.0, 0.0);
                }
                sq += v.norm_sqr();
            }
        }
        sq.sqrt()
    }

    /// Closed-form defect of a uniform N-node grid over one period, from the
    /// geometric sums Σ_n e^{iΔw·nT/N}. Cheap in N, used to pick quadrature
    /// node counts.
    pub fn uniform_grid_defect(&self, class: &SpectrumClass, n: usize) -> f64 {
        let d = self.dim();
        let mut sq = 0.0;
        for a in 0..d {
            for b in 0..d {
                if a == b {
                    continue;
                }
                let theta = (self.frequencies[a] - self.frequencies[b]) * class.period;
                let g = geometric_sum_magnitude(theta, n);
                sq += (g / n as f64).powi(2);
            }
        }
        sq.sqrt()
    }

    fn auto_quadrature_nodes(&self, class: &SpectrumClass) -> Result<usize> {
        let mut n = (class.max_harmonic() as usize + 1).max(self.dim()).max(2);
        let mut best = f64::INFINITY;
        loop {
            let defect = self.uniform_grid_defect(class, n);
            if defect <= RESOLUTION_TOL_OTHER {
                return Ok(n);
            }
            if n >= QUADRATURE_MAX_NODES {
                return Err(Error::InfeasibleResolution(format!(
                    "quadrature defect stalls at {defect:.3e} (period error {:.3e}); \
                     a finer rationalization cap is needed",
                    class.period_error
                )));
            }
            // bail out early once refinement stops helping (windowing floor)
            if defect > 0.99 * best && best.is_finite() {
                return Err(Error::InfeasibleResolution(format!(
                    "quadrature defect plateaus at {defect:.3e} > {RESOLUTION_TOL_OTHER:.0e}; \
                     the rationalized period is too coarse"
                )));
            }
            best = best.min(defect);
            n *= 2;
        }
    }

    fn finish_resolution(
        &self,
        kind: ResolutionKind,
        nodes: Vec<f64>,
        weight: f64,
        tol: f64,
    ) -> Result<ResolutionOfIdentity> {
        let defect = self.identity_defect(&nodes, weight);
        if defect > tol {
            return Err(Error::InfeasibleResolution(format!(
                "{kind:?} resolution defect {defect:.3e} exceeds tolerance {tol:.0e}"
            )));
        }
        Ok(ResolutionOfIdentity {
            kind,
            nodes,
            weight,
            defect,
        })
    }
}

/// Magnitude of Σ_{n=0}^{N-1} e^{iθn/N}.
fn geometric_sum_magnitude(theta: f64, n: usize) -> f64 {
    let half_step = theta / (2.0 * n as f64);
    let denom = half_step.sin();
    if denom.abs() < 1e-300 {
        return n as f64;
    }
    ((theta / 2.0).sin() / denom).abs()
}

/// Spectrum classification kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    EvenlySpaced,
    Rational,
    IrrationalApproximated,
}

/// Periodicity data for a clock spectrum: w_k = w_0 + r_k·2π/T with integer
/// harmonics r_k (exact for rational ratios, cap-bound approximations
/// otherwise).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumClass {
    pub kind: SpectrumKind,
    /// Fundamental period T = 2π r_1/(w_1 − w_0).
    pub period: f64,
    /// Integer harmonics r_k (r_0 = 0, ascending).
    pub harmonics: Vec<u64>,
    /// Reduced fractions A_k/B_k = (w_k − w_0)/(w_1 − w_0) for k ≥ 1.
    pub fractions: Vec<(u64, u64)>,
    /// max_k |w_k − (w_0 + r_k·2π/T)|, the induced spectral error of the
    /// rationalization (≈ 0 unless cap-bound).
    pub period_error: f64,
}

impl SpectrumClass {
    pub fn max_harmonic(&self) -> u64 {
        *self.harmonics.last().unwrap()
    }
}

fn classify_frequencies(freqs: &[f64], denominator_cap: u64) -> Result<SpectrumClass> {
    let d = freqs.len();
    if d < 2 {
        return Err(Error::Spectrum(
            "spectrum classification needs at least two levels".into(),
        ));
    }
    if denominator_cap == 0 {
        return Err(Error::InvalidInput("denominator cap must be positive".into()));
    }
    let w0 = freqs[0];
    let gap1 = freqs[1] - w0;

    // evenly spaced: all gaps equal within 1e−9 relative to the mean gap
    let gaps: Vec<f64> = freqs.windows(2).map(|p| p[1] - p[0]).collect();
    let mean_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let evenly = gaps
        .iter()
        .all(|g| (g - mean_gap).abs() <= EVEN_GAP_REL_TOL * mean_gap);
    if evenly {
        let period = 2.0 * std::f64::consts::PI / mean_gap;
        let harmonics: Vec<u64> = (0..d as u64).collect();
        let fractions: Vec<(u64, u64)> = (1..d as u64).map(|k| (k, 1)).collect();
        let period_error = freqs
            .iter()
            .enumerate()
            .map(|(k, &w)| (w - (w0 + k as f64 * mean_gap)).abs())
            .fold(0.0, f64::max);
        return Ok(SpectrumClass {
            kind: SpectrumKind::EvenlySpaced,
            period,
            harmonics,
            fractions,
            period_error,
        });
    }

    // continued-fraction rationalization of x_k = (w_k − w_0)/(w_1 − w_0)
    let mut fractions = Vec::with_capacity(d - 1);
    let mut cap_bound = false;
    for &w in &freqs[1..] {
        let x = (w - w0) / gap1;
        let (a, b, err) = best_rational(x, denominator_cap);
        if err > RATIONAL_EXACT_TOL * (1.0 + x.abs()) {
            cap_bound = true;
        }
        fractions.push((a, b));
    }

    let mut r1: u64 = 1;
    for &(_, b) in &fractions {
        r1 = lcm(r1, b).ok_or_else(|| {
            Error::Spectrum("harmonic lcm overflow; lower the denominator cap".into())
        })?;
    }
    let mut harmonics = Vec::with_capacity(d);
    harmonics.push(0u64);
    for &(a, b) in &fractions {
        let r = a
            .checked_mul(r1 / b)
            .ok_or_else(|| Error::Spectrum("harmonic overflow; lower the denominator cap".into()))?;
        harmonics.push(r);
    }
    for pair in harmonics.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::Spectrum(format!(
                "denominator cap {denominator_cap} too small to separate adjacent levels \
                 (harmonics {} and {} collide)",
                pair[0], pair[1]
            )));
        }
    }
    let period = 2.0 * std::f64::consts::PI * r1 as f64 / gap1;
    let period_error = freqs
        .iter()
        .zip(harmonics.iter())
        .map(|(&w, &r)| (w - (w0 + r as f64 * gap1 / r1 as f64)).abs())
        .fold(0.0, f64::max);

    Ok(SpectrumClass {
        kind: if cap_bound {
            SpectrumKind::IrrationalApproximated
        } else {
            SpectrumKind::Rational
        },
        period,
        harmonics,
        fractions,
        period_error,
    })
}

/// Best rational approximation A/B of x ≥ 0 with B ≤ cap, via continued
/// fractions. Returns (A, B, |x − A/B|).
fn best_rational(x: f64, cap: u64) -> (u64, u64, f64) {
    assert!(x >= 0.0, "frequency ratios are non-negative for ascending spectra");
    let (mut p0, mut q0, mut p1, mut q1) = (1u64, 0u64, x.floor() as u64, 1u64);
    let mut frac = x - x.floor();
    // continued-fraction convergents until exact or the cap binds
    for _ in 0..64 {
        let err = (x - p1 as f64 / q1 as f64).abs();
        if frac.abs() < 1e-15 || err < 1e-15 * (1.0 + x.abs()) {
            break;
        }
        let recip = 1.0 / frac;
        let a = recip.floor();
        if !a.is_finite() || a >= u64::MAX as f64 {
            break;
        }
        let a = a as u64;
        let (p2, q2) = match (
            a.checked_mul(p1).and_then(|v| v.checked_add(p0)),
            a.checked_mul(q1).and_then(|v| v.checked_add(q0)),
        ) {
            (Some(p2), Some(q2)) => (p2, q2),
            _ => break,
        };
        if q2 > cap {
            // try the best semiconvergent still under the cap
            let k = (cap - q0) / q1;
            if k > 0 {
                let ps = k * p1 + p0;
                let qs = k * q1 + q0;
                let err_semi = (x - ps as f64 / qs as f64).abs();
                let err_conv = (x - p1 as f64 / q1 as f64).abs();
                if err_semi < err_conv {
                    p1 = ps;
                    q1 = qs;
                }
            }
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        frac = recip - a as f64;
    }
    let g = gcd(p1.max(1), q1);
    let (a, b) = if p1 == 0 { (0, 1) } else { (p1 / g, q1 / g) };
    (a, b, (x - a as f64 / b as f64).abs())
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn lcm(a: u64, b: u64) -> Option<u64> {
    if a == 0 || b == 0 {
        return Some(0);
    }
    (a / gcd(a, b)).checked_mul(b)
}

/// Resolution kinds supported for finite-dimensional clocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolutionKind {
    DiscreteOrthonormal,
    OvercompleteDiscrete,
    Quadrature,
}

impl ResolutionKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "discrete-orthonormal" => Some(Self::DiscreteOrthonormal),
            "overcomplete-discrete" => Some(Self::OvercompleteDiscrete),
            "quadrature" => Some(Self::Quadrature),
            _ => None,
        }
    }
}

/// A verified resolution of the identity: weight·Σ_n |t_n⟩⟨t_n| = 1 within
/// the kind's tolerance.
#[derive(Debug, Clone)]
pub struct ResolutionOfIdentity {
    pub kind: ResolutionKind,
    pub nodes: Vec<f64>,
    pub weight: f64,
    /// Frobenius-norm identity defect measured at construction.
    pub defect: f64,
}

impl ResolutionOfIdentity {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn tolerance(&self) -> f64 {
        match self.kind {
            ResolutionKind::DiscreteOrthonormal => RESOLUTION_TOL_ORTHONORMAL,
            _ => RESOLUTION_TOL_OTHER,
        }
    }
}

/// How the local clocks of a network couple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InteractionKind {
    None,
    GravitationalLike,
}

/// An ordered collection of local clocks with symmetric pairwise couplings
/// g_JK (units 1/energy, zero diagonal). The joint system, including the
/// gravitational-like interaction −½ Σ g_JK H_J H_K when enabled, acts as
/// the global clock.
#[derive(Debug, Clone)]
pub struct ClockNetwork {
    locals: Vec<ClockModel>,
    couplings: Vec<Vec<f64>>,
    interaction: InteractionKind,
}

impl ClockNetwork {
    /// Non-interacting network.
    pub fn free(locals: Vec<ClockModel>) -> Result<Self> {
        let n = locals.len();
        Self::new(locals, vec![vec![0.0; n]; n], InteractionKind::None)
    }

    /// Single-clock network.
    pub fn single(clock: ClockModel) -> Self {
        Self {
            locals: vec![clock],
            couplings: vec![vec![0.0]],
            interaction: InteractionKind::None,
        }
    }

    pub fn new(
        locals: Vec<ClockModel>,
        couplings: Vec<Vec<f64>>,
        interaction: InteractionKind,
    ) -> Result<Self> {
        let n = locals.len();
        if n == 0 {
            return Err(Error::InvalidInput("network needs at least one clock".into()));
        }
        if couplings.len() != n || couplings.iter().any(|row| row.len() != n) {
            return Err(Error::DimensionMismatch {
                context: "ClockNetwork::new (couplings must be n×n)",
                expected: n,
                actual: couplings.len(),
            });
        }
        for j in 0..n {
            if couplings[j][j] != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "self-coupling g[{j}][{j}] must be zero"
                )));
            }
            for k in 0..n {
                if couplings[j][k] != couplings[k][j] {
                    return Err(Error::InvalidInput(format!(
                        "couplings must be symmetric, g[{j}][{k}] != g[{k}][{j}]"
                    )));
                }
            }
        }
        Ok(Self {
            locals,
            couplings,
            interaction,
        })
    }

    /// Two spin clocks ω and αω with the dimensionless coupling g of the
    /// spin-spin model, so that H_C = ω(σ^x_A + ασ^x_B − g σ^x_A σ^x_B).
    /// The raw symmetric coupling is g_AB = g/(αω) = g/ω_B in 1/energy units.
    pub fn two_spin(omega: f64, alpha: f64, g: f64) -> Result<Self> {
        let a = ClockModel::spin(omega)?;
        let b = ClockModel::spin(alpha * omega)?;
        let raw = g / (alpha * omega);
        let interaction = if g == 0.0 {
            InteractionKind::None
        } else {
            InteractionKind::GravitationalLike
        };
        Self::new(
            vec![a, b],
            vec![vec![0.0, raw], vec![raw, 0.0]],
            interaction,
        )
    }

    pub fn len(&self) -> usize {
        self.locals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locals.is_empty()
    }

    pub fn local(&self, j: usize) -> Result<&ClockModel> {
        self.locals.get(j).ok_or(Error::SiteOutOfRange {
            index: j,
            sites: self.locals.len(),
        })
    }

    pub fn locals(&self) -> &[ClockModel] {
        &self.locals
    }

    pub fn coupling(&self, j: usize, k: usize) -> f64 {
        self.couplings[j][k]
    }

    pub fn couplings(&self) -> &[Vec<f64>] {
        &self.couplings
    }

    pub fn interaction(&self) -> InteractionKind {
        self.interaction
    }

    pub fn dims(&self) -> Vec<usize> {
        self.locals.iter().map(|c| c.dim()).collect()
    }

    pub fn dim(&self) -> usize {
        self.locals.iter().map(|c| c.dim()).product()
    }

    /// H_J lifted to the full clock space.
    pub fn embedded_local_hamiltonian(&self, j: usize) -> Result<DenseOperator> {
        let dims = self.dims();
        embed_local(&self.local(j)?.hamiltonian(), j, &dims)
    }

    /// −½ Σ_{J,K} g_JK H_J H_K on the full clock space (zero when the
    /// network is non-interacting).
    pub fn interaction_hamiltonian(&self) -> DenseOperator {
        let d = self.dim();
        let mut out = DenseOperator::zeros(d);
        if self.interaction == InteractionKind::None {
            return out;
        }
        let n = self.len();
        let embedded: Vec<DenseOperator> = (0..n)
            .map(|j| self.embedded_local_hamiltonian(j).expect("validated network"))
            .collect();
        for j in 0..n {
            for k in 0..n {
                let g = self.couplings[j][k];
                if g != 0.0 {
                    out = out.sub(&embedded[j].matmul(&embedded[k]).scale(0.5 * g));
                }
            }
        }
        out
    }

    /// Global clock Hamiltonian Σ_J H_J + H_int.
    pub fn hamiltonian(&self) -> DenseOperator {
        let n = self.len();
        let mut out = self.interaction_hamiltonian();
        for j in 0..n {
            out = out.add(&self.embedded_local_hamiltonian(j).expect("validated network"));
        }
        out
    }

    /// Diagonal of the global clock Hamiltonian in the product energy basis
    /// (every term is diagonal there).
    pub fn global_spectrum(&self) -> Vec<f64> {
        self.hamiltonian()
            .matrix()
            .diagonal()
            .iter()
            .map(|z| z.re)
            .collect()
    }

    /// Summed local phases per product-basis state.
    pub fn global_phases(&self) -> Vec<f64> {
        let dims = self.dims();
        let d = self.dim();
        (0..d)
            .map(|mut idx| {
                let mut phase = 0.0;
                for (c, &dj) in self.locals.iter().zip(dims.iter()).rev() {
                    phase += c.phases()[idx % dj];
                    idx /= dj;
                }
                phase
            })
            .collect()
    }

    /// |t⟩_C: the product of local time states, dressed by e^{−iH_int t}
    /// when the gravitational-like interaction is enabled.
    pub fn global_time_state(&self, t: f64) -> StateVector {
        let mut state = self.locals[0].time_state(t);
        for c in &self.locals[1..] {
            state = state.tensor(&c.time_state(t));
        }
        if self.interaction == InteractionKind::GravitationalLike {
            let h_int = self.interaction_hamiltonian();
            // H_int is diagonal in the product energy basis; apply phases directly
            let phases: Vec<f64> = h_int.matrix().diagonal().iter().map(|z| z.re).collect();
            let amps: Vec<C64> = state
                .vector()
                .iter()
                .zip(phases.iter())
                .map(|(a, &h)| a * C64::from_polar(1.0, -h * t))
                .collect();
            state = StateVector::from_slice(&amps);
        }
        state
    }

    /// Transition amplitude F({τ_J} | t) = (⊗_J ⟨τ_J|) |t⟩_C.
    pub fn transition_amplitude(&self, taus: &[f64], t: f64) -> Result<C64> {
        if taus.len() != self.len() {
            return Err(Error::DimensionMismatch {
                context: "transition_amplitude (one τ per local clock)",
                expected: self.len(),
                actual: taus.len(),
            });
        }
        let mut bra = self.locals[0].time_state(taus[0]);
        for (c, &tau) in self.locals[1..].iter().zip(taus[1..].iter()) {
            bra = bra.tensor(&c.time_state(tau));
        }
        Ok(bra.inner(&self.global_time_state(t)))
    }

    /// Classification of the global spectrum, collapsing degenerate levels
    /// (periodicity only depends on the distinct values).
    pub fn classify_global(&self, denominator_cap: u64) -> Result<SpectrumClass> {
        let mut w = self.global_spectrum();
        w.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let scale = w.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let mut distinct: Vec<f64> = Vec::with_capacity(w.len());
        for x in w {
            if distinct.last().map_or(true, |&l| x - l > 1e-9 * scale) {
                distinct.push(x);
            }
        }
        if distinct.len() < 2 {
            return Err(Error::Spectrum(
                "global clock spectrum is fully degenerate; no period exists".into(),
            ));
        }
        classify_frequencies(&distinct, denominator_cap)
    }

    /// The global clock as a standalone clock model, valid only when the
    /// global spectrum is non-degenerate. Eigenvalues are sorted ascending
    /// with their phases carried along.
    pub fn global_clock_model(&self) -> Result<ClockModel> {
        let w = self.global_spectrum();
        let phases = self.global_phases();
        let mut order: Vec<usize> = (0..w.len()).collect();
        order.sort_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap());
        let sorted_w: Vec<f64> = order.iter().map(|&k| w[k]).collect();
        let sorted_p: Vec<f64> = order.iter().map(|&k| phases[k]).collect();
        let scale = sorted_w.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for pair in sorted_w.windows(2) {
            if pair[1] - pair[0] <= 1e-9 * scale {
                return Err(Error::Spectrum(format!(
                    "global clock spectrum is degenerate near {}, no time-state basis exists",
                    pair[0]
                )));
            }
        }
        ClockModel::new(sorted_w, sorted_p)
    }
}
