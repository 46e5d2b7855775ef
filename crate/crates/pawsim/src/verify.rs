//! The library invariant suite driven by `verify` (CLI subcommand and run
//! task): every check is a named metric with its tolerance, so the run
//! report names the invariant behind each verdict.
//!
//! Checks that need a constraint history or a redshift operator apply only
//! when the config provides them; inapplicable checks are recorded as
//! informational skips rather than silently dropped.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::clock::{ClockModel, ResolutionKind, SpectrumKind};
use crate::config::ExperimentConfig;
use crate::error::Error as LibError;
use crate::grid::TimeGrid;
use crate::presets::{random_hermitian, random_kernel_universe, random_state};
use crate::runner::Metric;
use crate::tidit::{
    check_redshift_conservation, conditional_hamiltonian, effective_hamiltonian, redshift,
    InverseMode,
};
use crate::universe::Scope;

fn skip(name: &str, invariant: &str, reason: String) -> Metric {
    Metric::info(name, f64::NAN, invariant).with_note(format!("skipped: {reason}"))
}

/// Runs the full suite and returns one metric per check.
pub fn run_suite(config: &ExperimentConfig, seed: u64, tol_scale: f64) -> Vec<Metric> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut metrics = Vec::new();

    tensor_checks(&mut rng, tol_scale, &mut metrics);
    clock_checks(config, &mut rng, tol_scale, &mut metrics);
    universe_checks(config, seed, tol_scale, &mut metrics);
    tidit_checks(config, tol_scale, &mut metrics);

    metrics
}

fn tensor_checks(rng: &mut ChaCha12Rng, tol_scale: f64, out: &mut Vec<Metric>) {
    let op = random_hermitian(rng, 4);
    let spec = op.eig_hermitian().expect("random Hermitian diagonalizes");
    let t = 1.1;
    let u = spec.evolution(t);

    let gram = u.adjoint().matmul(&u);
    let unitarity = gram
        .sub(&crate::tensor::DenseOperator::identity(4))
        .max_abs();
    out.push(Metric::check(
        "evolve-unitarity",
        unitarity,
        1e-10 * tol_scale,
        "evolve(O, t) is unitary",
    ));
    out.push(Metric::check(
        "evolve-commutes",
        u.commutator(&op).max_abs(),
        1e-10 * tol_scale,
        "evolve(O, t) commutes with its generator",
    ));

    let h = 1e-5;
    let dudt = spec.evolution(t + h).sub(&spec.evolution(t - h)).scale(1.0 / (2.0 * h));
    let generator_defect = op
        .matmul(&u)
        .sub(&dudt.scale_complex(C64::i()))
        .max_abs();
    out.push(Metric::check(
        "evolve-generator-equation",
        generator_defect,
        1e-6 * tol_scale,
        "O·U(t) equals i dU/dt (central differences, step 1e-5)",
    ));

    let (s1, s2) = (0.47, -0.92);
    let group_defect = spec
        .evolution(s1)
        .matmul(&spec.evolution(s2))
        .sub(&spec.evolution(s1 + s2))
        .max_abs();
    out.push(Metric::check(
        "evolve-group-law",
        group_defect,
        1e-10 * tol_scale,
        "evolve(O, s)·evolve(O, t) = evolve(O, s + t)",
    ));

    let psi = random_state(rng, 6);
    let schmidt = psi.schmidt(2, 3).expect("6 = 2 × 3");
    out.push(Metric::check(
        "schmidt-reconstruction",
        schmidt.reconstruct().sub(&psi).norm(),
        1e-10 * tol_scale,
        "Schmidt data reconstructs the state",
    ));
    out.push(Metric::check(
        "schmidt-normalization",
        (schmidt.coefficient_sum() - 1.0).abs(),
        1e-12 * tol_scale,
        "Schmidt coefficients sum to 1",
    ));

    let rho = psi.projector();
    let ra = rho.partial_trace(&[2, 3], &[0]).expect("dims match");
    let rb = rho.partial_trace(&[2, 3], &[1]).expect("dims match");
    let ea = ra.eig_hermitian().unwrap().eigenvalues;
    let eb = rb.eig_hermitian().unwrap().eigenvalues;
    // both reductions share the nonzero spectrum (pad with zeros)
    let mut diff = 0.0f64;
    for k in 0..ea.len() {
        diff = diff.max((ea[ea.len() - 1 - k] - eb[eb.len() - 1 - k]).abs());
    }
    out.push(Metric::check(
        "partial-trace-schmidt-symmetry",
        diff,
        1e-10 * tol_scale,
        "both reductions of a pure state share their eigenvalue multiset",
    ));
}

fn clock_checks(
    config: &ExperimentConfig,
    rng: &mut ChaCha12Rng,
    tol_scale: f64,
    out: &mut Vec<Metric>,
) {
    let cap = config.denominator_cap();
    let net = match config.build_network() {
        Ok(n) => n,
        Err(e) => {
            out.push(skip("clock-resolutions", "resolution identity defects", e.to_string()));
            return;
        }
    };

    for (j, clock) in net.locals().iter().enumerate() {
        let label = crate::config::clock_label(j);
        let class = match clock.classify_spectrum(cap) {
            Ok(c) => c,
            Err(e) => {
                out.push(skip(
                    &format!("resolution-defect[{label}]"),
                    "resolution identity defects",
                    e.to_string(),
                ));
                continue;
            }
        };
        let kinds: Vec<ResolutionKind> = match class.kind {
            SpectrumKind::EvenlySpaced => vec![
                ResolutionKind::DiscreteOrthonormal,
                ResolutionKind::OvercompleteDiscrete,
                ResolutionKind::Quadrature,
            ],
            _ => vec![ResolutionKind::OvercompleteDiscrete, ResolutionKind::Quadrature],
        };
        for kind in kinds {
            let name = format!("resolution-defect[{label}][{kind:?}]");
            match clock.build_resolution_with(kind, None, cap) {
                Ok(res) => {
                    out.push(Metric::check(
                        &name,
                        res.defect,
                        res.tolerance() * tol_scale,
                        "weight · Σ |t_n⟩⟨t_n| equals the identity",
                    ));
                    // POVM normalization on a random clock state
                    let psi = random_state(rng, clock.dim());
                    let total: f64 = res
                        .nodes
                        .iter()
                        .map(|&t| res.weight * clock.time_state(t).inner(&psi).norm_sqr())
                        .sum();
                    out.push(Metric::check(
                        format!("povm-normalization[{label}][{kind:?}]"),
                        (total - 1.0).abs(),
                        1e-10 * tol_scale,
                        "weight · Σ |⟨t_n|Ψ⟩|² = 1 for normalized Ψ",
                    ));
                }
                Err(e) => out.push(skip(&name, "resolution identity defects", e.to_string())),
            }
        }

        if class.kind != SpectrumKind::EvenlySpaced || clock.dim() > 2 {
            let t = 0.41;
            let shifted = clock.time_state(t + class.period);
            let phased = clock
                .time_state(t)
                .scale(C64::from_polar(1.0, -clock.frequencies()[0] * class.period));
            out.push(Metric::check(
                format!("time-state-periodicity[{label}]"),
                shifted.sub(&phased).norm(),
                1e-9 * tol_scale,
                "time states repeat after one period up to a global phase",
            ));
        }
    }

    // quadrature halving trend on a cap-bound spectrum: refining the grid
    // toward the windowing floor never increases the defect by more than 10%
    let probe = ClockModel::with_spectrum(vec![0.0, 1.0, 2f64.sqrt()]).unwrap();
    let class = probe.classify_spectrum(40).unwrap();
    let n0 = 2 * (class.max_harmonic() as usize + 1);
    let mut worst_ratio = 0.0f64;
    let mut prev = f64::INFINITY;
    for doubling in 0..4 {
        let n = n0 << doubling;
        let defect = probe.uniform_grid_defect(&class, n);
        if prev.is_finite() {
            worst_ratio = worst_ratio.max(defect / prev);
        }
        prev = defect;
    }
    out.push(Metric::check(
        "quadrature-halving-trend",
        worst_ratio,
        1.1,
        "quadrature defect decreases monotonically (within 10%) as nodes double",
    ));
}

fn universe_checks(
    config: &ExperimentConfig,
    seed: u64,
    tol_scale: f64,
    out: &mut Vec<Metric>,
) {
    // seeded random universes: evolution-without-evolution, a-constancy and
    // the flat profile, independent of the config
    let mut worst_infidelity = 0.0f64;
    let mut worst_deviation = 0.0f64;
    let mut worst_flat = 0.0f64;
    let dims = [(2usize, 2usize), (3, 2), (4, 3)];
    for (k, (d_c, d_s)) in dims.iter().enumerate() {
        let u = match random_kernel_universe(seed.wrapping_add(k as u64), *d_c, *d_s) {
            Ok(u) => u,
            Err(e) => {
                out.push(skip(
                    "random-universe",
                    "seeded random universes build",
                    e.to_string(),
                ));
                continue;
            }
        };
        let history = u.energy_paired_history().expect("paired by construction");
        let sys_spec = u.system().eig_hermitian().unwrap();
        let grid = TimeGrid::default_for_clock(u.clock().local(0).unwrap()).unwrap();
        let coarse = TimeGrid::new(grid.start, grid.step * 4.0, grid.len / 4);
        let psi0 = history.condition_global(0.0).unwrap().psi;
        for t in coarse.nodes() {
            let conditioned = history.condition_global(t).unwrap();
            let propagated = sys_spec.evolve_state(&psi0, t);
            worst_infidelity = worst_infidelity.max(1.0 - conditioned.psi.fidelity(&propagated));
            worst_deviation = worst_deviation
                .max((conditioned.amplitude - 1.0 / (*d_c as f64).sqrt()).abs());
            worst_flat = worst_flat
                .max((conditioned.amplitude.powi(2) - 1.0 / *d_c as f64).abs());
        }
    }
    out.push(Metric::check(
        "evolution-without-evolution",
        worst_infidelity,
        1e-10 * tol_scale,
        "conditioned states follow the system Schrödinger equation",
    ));
    out.push(Metric::check(
        "a-constancy[random]",
        worst_deviation,
        1e-12 * tol_scale,
        "a(t) is constant for constraint histories",
    ));
    out.push(Metric::check(
        "flat-profile[random]",
        worst_flat,
        1e-12 * tol_scale,
        "energy-paired Schmidt bases give a²(t) = 1/d_C",
    ));

    // config universe
    let universe = match config.build_universe() {
        Ok(u) => u,
        Err(e) => {
            out.push(skip("config-universe", "config universe builds", e.to_string()));
            return;
        }
    };
    let history = match config.build_history(&universe) {
        Ok(h) => h,
        Err(e) => {
            out.push(skip(
                "config-history",
                "config constraint has a kernel",
                e.to_string(),
            ));
            return;
        }
    };
    out.push(Metric::check(
        "constraint-residual",
        history.constraint_residual(),
        crate::tensor::KERNEL_REL_TOL
            * universe.assemble_hamiltonian().spectral_norm().max(1e-30)
            * tol_scale,
        "history state lies in the constraint kernel",
    ));
    out.push(Metric::check(
        "schmidt-sum",
        (history.schmidt().coefficient_sum() - 1.0).abs(),
        1e-12 * tol_scale,
        "Schmidt coefficients sum to 1",
    ));

    match config.build_grid(universe.clock(), Scope::Global) {
        Ok(grid) => {
            match history.amplitude_profile(Scope::Global, &grid) {
                Ok(profile) => {
                    out.push(Metric::check(
                        "a-constancy[config]",
                        profile.max_deviation_from_first(),
                        1e-12 * tol_scale,
                        "a(t) is constant for constraint histories",
                    ));
                    out.push(Metric::check(
                        "probability-normalization",
                        (profile.quadrature_sum - 1.0).abs(),
                        1e-8 * tol_scale,
                        "quadrature sum of Pr(t) over one period equals 1",
                    ));
                }
                Err(e) => out.push(skip(
                    "a-constancy[config]",
                    "a(t) is constant for constraint histories",
                    e.to_string(),
                )),
            }

            // global-phase invariance of conditioning
            let t_probe = grid.node(grid.len / 3);
            if let (Ok(c1), Ok(rebuilt)) = (
                history.condition_global(t_probe),
                crate::universe::HistoryState::new(
                    universe.clone(),
                    history.state().scale(C64::from_polar(1.0, 0.87)),
                ),
            ) {
                let c2 = rebuilt.condition_global(t_probe).unwrap();
                out.push(Metric::check(
                    "conditioning-phase-invariance",
                    (c1.amplitude - c2.amplitude)
                        .abs()
                        .max(1.0 - c1.psi.fidelity(&c2.psi)),
                    1e-12 * tol_scale,
                    "conditioning commutes with a global phase of Ψ",
                ));
            }
        }
        Err(e) => out.push(skip(
            "a-constancy[config]",
            "a(t) is constant for constraint histories",
            e.to_string(),
        )),
    }

    // reconstruction from the global resolution nodes (needs a
    // non-degenerate global spectrum)
    match universe.clock().global_clock_model() {
        Ok(global) => match global.build_resolution_with(
            ResolutionKind::OvercompleteDiscrete,
            None,
            config.denominator_cap(),
        ) {
            Ok(res) => {
                let mut acc = crate::tensor::StateVector::new(
                    crate::tensor::CVector::zeros(universe.dim()),
                );
                let mut ok = true;
                for &t in &res.nodes {
                    match history.condition_global(t) {
                        Ok(cond) => {
                            let term = universe
                                .clock()
                                .global_time_state(t)
                                .tensor(&cond.psi)
                                .scale(C64::new(res.weight * cond.amplitude, 0.0));
                            acc = acc.add(&term);
                        }
                        Err(_) => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    if let Ok(rebuilt) = acc.normalized() {
                        out.push(Metric::check(
                            "resolution-reconstruction",
                            1.0 - rebuilt.fidelity(history.state()),
                            1e-10 * tol_scale,
                            "weight · Σ a(t_n)|t_n⟩⊗ψ(t_n) rebuilds the history state",
                        ));
                    }
                }
            }
            Err(e) => out.push(skip(
                "resolution-reconstruction",
                "history reconstruction from resolution nodes",
                e.to_string(),
            )),
        },
        Err(e) => out.push(skip(
            "resolution-reconstruction",
            "history reconstruction from resolution nodes",
            e.to_string(),
        )),
    }

    // von Neumann / Heisenberg finite-difference checks on the system factor
    let (t, step) = (0.31, 1e-5);
    if let (Ok(rho_p), Ok(rho_m), Ok(rho_0)) = (
        history.conditional_density(Scope::Global, t + step),
        history.conditional_density(Scope::Global, t - step),
        history.conditional_density(Scope::Global, t),
    ) {
        let drho = rho_p.rho.sub(&rho_m.rho).scale(1.0 / (2.0 * step));
        let rhs = universe
            .system()
            .commutator(&rho_0.rho)
            .scale_complex(-C64::i());
        out.push(Metric::check(
            "von-neumann-equation",
            drho.sub(&rhs).max_abs(),
            1e-6 * tol_scale,
            "dρ/dt = −i[H_S, ρ] (central differences, step 1e-5)",
        ));
    }
}

fn tidit_checks(config: &ExperimentConfig, tol_scale: f64, out: &mut Vec<Metric>) {
    let universe = match config.build_universe() {
        Ok(u) => u,
        Err(_) => return,
    };
    if universe.clock().len() < 2 {
        return;
    }
    let a = 0usize;
    let bundle = match redshift(&universe, a) {
        Ok(b) => b,
        Err(e) => {
            out.push(skip("redshift", "redshift bundle builds", e.to_string()));
            return;
        }
    };
    out.push(Metric::check(
        "redshift-identity",
        bundle
            .redshift
            .sub(
                &crate::tensor::DenseOperator::identity(bundle.redshift.dim())
                    .sub(&bundle.phi),
            )
            .max_abs(),
        1e-14 * tol_scale,
        "R = 1 − Φ entrywise",
    ));

    if !bundle.invertible {
        match crate::tidit::degenerate_split(&universe, a) {
            Ok(split) => out.push(Metric::check(
                "stationary-residual",
                split.stationary_constraint_residual,
                1e-10 * tol_scale,
                "frozen-subspace states satisfy the stationary constraint",
            )),
            Err(e) => out.push(skip(
                "stationary-residual",
                "frozen-subspace stationary constraint",
                e.to_string(),
            )),
        }
        return;
    }

    let eff = match effective_hamiltonian(&universe, a, InverseMode::Exact) {
        Ok(e) => e,
        Err(e) => {
            out.push(skip("effective-hamiltonian", "TiDIT generator builds", e.to_string()));
            return;
        }
    };
    out.push(Metric::info(
        "anti-hermitian-defect",
        eff.anti_hermitian_defect,
        "measured Hermiticity defect of R⁻¹H^(A)",
    ));

    let h_cond = conditional_hamiltonian(&universe, a).unwrap();
    if bundle.phi.commutator(&h_cond).max_abs() <= 1e-12 {
        out.push(Metric::check(
            "redshift-commutes-with-generator",
            bundle.redshift.commutator(&eff.exact).max_abs(),
            1e-10 * tol_scale,
            "[R, H_eff] vanishes whenever [Φ, H^(A)] does",
        ));
    }

    if bundle.spectral_radius < 1.0 && bundle.spectral_radius > 0.0 {
        let series_eff =
            effective_hamiltonian(&universe, a, InverseMode::Series(None)).unwrap();
        let fp_floor = 16.0
            * f64::EPSILON
            * (series_eff.exact.spectral_norm() + series_eff.conditional.spectral_norm());
        let mut worst = f64::NEG_INFINITY;
        for (m, partial) in series_eff.series.iter().enumerate() {
            let err = partial.sub(&series_eff.exact).spectral_norm();
            worst = worst.max(err - series_eff.series_envelope(m) - fp_floor);
        }
        out.push(Metric::check(
            "series-envelope",
            worst.max(0.0),
            f64::MIN_POSITIVE,
            "‖series[m] − exact‖ stays under ‖H^(A)‖ρ^{m+1}/(1−ρ)",
        ));
    }

    match config.build_history(&universe) {
        Ok(history) => match config.build_grid(universe.clock(), Scope::Local(a)) {
            Ok(grid) => {
                let psi0 = match history.condition_local(a, grid.node(0)) {
                    Ok(c) => c.psi,
                    Err(e) => {
                        out.push(skip(
                            "route-equivalence",
                            "local conditioning matches time-dilated propagation",
                            e.to_string(),
                        ));
                        return;
                    }
                };
                match crate::tidit::propagate_time_dilated(&universe, a, &psi0, &grid) {
                    Ok(traj) => {
                        let mut worst = 0.0f64;
                        for (tau, psi) in &traj.samples {
                            if let Ok(cond) = history.condition_local(a, *tau) {
                                worst = worst.max(1.0 - cond.psi.fidelity(psi));
                            }
                        }
                        out.push(Metric::check(
                            "route-equivalence",
                            worst,
                            1e-8 * tol_scale,
                            "local conditioning matches time-dilated propagation",
                        ));
                        let drift =
                            check_redshift_conservation(&universe, a, &psi0, &grid).unwrap();
                        let tol = if bundle.spectral_radius < 1.0 { 1e-10 } else { 1e-8 };
                        out.push(Metric::check(
                            "redshift-conservation",
                            drift,
                            tol * tol_scale,
                            "the redshift expectation is conserved along trajectories",
                        ));
                    }
                    Err(e) => out.push(skip(
                        "route-equivalence",
                        "local conditioning matches time-dilated propagation",
                        e.to_string(),
                    )),
                }
            }
            Err(e) => out.push(skip(
                "route-equivalence",
                "local conditioning matches time-dilated propagation",
                e.to_string(),
            )),
        },
        Err(LibError::EmptyKernel { .. }) => {
            out.push(skip(
                "route-equivalence",
                "local conditioning matches time-dilated propagation",
                "config constraint has no kernel".to_string(),
            ));
        }
        Err(e) => out.push(skip(
            "route-equivalence",
            "local conditioning matches time-dilated propagation",
            e.to_string(),
        )),
    }
}
