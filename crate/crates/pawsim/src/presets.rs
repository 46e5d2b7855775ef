//! Named experiment presets, spin operators in the energy basis, and seeded
//! constraint-compatible random builders.
//!
//! Spin clocks live in their σ^x eigenbasis (ascending energy: |−⟩ then
//! |+⟩), so σ^x is diagonal while σ^z flips between the two energy levels.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::clock::{ClockModel, ClockNetwork, InteractionKind};
use crate::error::{Error, Result};
use crate::tensor::{CMatrix, DenseOperator, StateVector};
use crate::universe::UniverseSpec;

/// σ^x in its own eigenbasis: diag(−1, +1).
pub fn sigma_x_energy() -> DenseOperator {
    DenseOperator::from_diagonal(&[-1.0, 1.0])
}

/// σ^z in the σ^x eigenbasis: the level-flip matrix.
pub fn sigma_z_energy() -> DenseOperator {
    DenseOperator::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
}

/// σ^y in the σ^x eigenbasis.
pub fn sigma_y_energy() -> DenseOperator {
    DenseOperator::from_rows(
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(0.0, -1.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, 0.0),
        ],
    )
    .unwrap()
}

/// Looks up a named Pauli operator in the energy-basis convention.
pub fn spin_observable(name: &str) -> Option<DenseOperator> {
    match name {
        "sigma_x" => Some(sigma_x_energy()),
        "sigma_y" => Some(sigma_y_energy()),
        "sigma_z" => Some(sigma_z_energy()),
        _ => None,
    }
}

/// Haar-like random unitary: QR of a complex Gaussian matrix with the phase
/// convention fixed by the R diagonal.
pub fn random_unitary(rng: &mut ChaCha12Rng, dim: usize) -> DenseOperator {
    let gauss = |rng: &mut ChaCha12Rng| {
        // Box-Muller
        let u1: f64 = rng.random::<f64>().max(1e-12);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let m = CMatrix::from_fn(dim, dim, |_, _| C64::new(gauss(rng), gauss(rng)));
    let qr = m.qr();
    let q = qr.q();
    let r = qr.r();
    let mut fixed = q.clone();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / C64::new(d.norm(), 0.0)
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..dim {
            fixed[(i, j)] *= phase;
        }
    }
    DenseOperator::new(fixed).unwrap()
}

/// Random Hermitian operator with entries of scale ~1.
pub fn random_hermitian(rng: &mut ChaCha12Rng, dim: usize) -> DenseOperator {
    let m = CMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let herm = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    DenseOperator::new(herm).unwrap()
}

/// Random normalized state.
pub fn random_state(rng: &mut ChaCha12Rng, dim: usize) -> StateVector {
    loop {
        let v = StateVector::from_slice(
            &(0..dim)
                .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect::<Vec<_>>(),
        );
        if let Ok(n) = v.normalized() {
            return n;
        }
    }
}

/// Random clock with distinct rational frequencies k/q (modest periods).
pub fn random_rational_clock(rng: &mut ChaCha12Rng, dim: usize) -> ClockModel {
    let den = rng.random_range(1..=4) as f64;
    let mut ticks: Vec<i64> = Vec::with_capacity(dim);
    while ticks.len() < dim {
        let k = rng.random_range(-12..=12i64);
        if !ticks.contains(&k) {
            ticks.push(k);
        }
    }
    ticks.sort_unstable();
    let freqs: Vec<f64> = ticks.iter().map(|&k| k as f64 / den).collect();
    ClockModel::with_spectrum(freqs).expect("distinct sorted ticks")
}

/// Distinct values of the global clock spectrum, ascending.
pub fn distinct_global_levels(net: &ClockNetwork) -> Vec<f64> {
    let mut w = net.global_spectrum();
    w.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let scale = w.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let mut distinct: Vec<f64> = Vec::with_capacity(w.len());
    for x in w {
        if distinct.last().map_or(true, |&l| x - l > 1e-9 * scale) {
            distinct.push(x);
        }
    }
    distinct
}

/// Builds a system Hamiltonian guaranteed to satisfy the constraint against
/// the given clock network: d_s eigenvalues set to −W for a choice of
/// distinct global clock levels W (seeded random choice unless `levels`
/// pins it), in a Haar-random eigenbasis. Surplus system levels are placed
/// outside the clock spectrum so they create no accidental pairings.
pub fn paired_random_system(
    net: &ClockNetwork,
    d_s: usize,
    seed: u64,
    levels: Option<&[usize]>,
) -> Result<DenseOperator> {
    let distinct = distinct_global_levels(net);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let chosen: Vec<f64> = match levels {
        Some(idx) => {
            let mut out = Vec::with_capacity(idx.len());
            for &i in idx {
                let w = distinct.get(i).ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "level index {i} out of range ({} distinct global levels)",
                        distinct.len()
                    ))
                })?;
                out.push(*w);
            }
            out
        }
        None => {
            let count = d_s.min(distinct.len());
            let mut picked: Vec<usize> = Vec::with_capacity(count);
            while picked.len() < count {
                let i = rng.random_range(0..distinct.len());
                if !picked.contains(&i) {
                    picked.push(i);
                }
            }
            picked.sort_unstable();
            picked.iter().map(|&i| distinct[i]).collect()
        }
    };
    let w_scale = distinct.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let mut eigenvalues: Vec<f64> = chosen.iter().map(|w| -w).collect();
    let mut extra = 0usize;
    while eigenvalues.len() < d_s {
        extra += 1;
        eigenvalues.push(w_scale + 1.0 + extra as f64);
    }
    let u = random_unitary(&mut rng, d_s);
    let diag = DenseOperator::from_diagonal(&eigenvalues);
    let h = u.matmul(&diag).matmul(&u.adjoint());
    // symmetrize away the last-ulp QR asymmetry
    let herm = (h.matrix() + h.matrix().adjoint()) * C64::new(0.5, 0.0);
    DenseOperator::new(herm)
}

/// Seeded single-clock universe with a kernel-compatible random system:
/// the workhorse for randomized verification.
pub fn random_kernel_universe(seed: u64, d_c: usize, d_s: usize) -> Result<UniverseSpec> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let clock = random_rational_clock(&mut rng, d_c);
    let net = ClockNetwork::single(clock);
    let system = paired_random_system(&net, d_s, seed.wrapping_add(0x5EED), None)?;
    UniverseSpec::new(net, system)
}

/// Two-spin universe with the dimensionless coupling g and a seeded
/// constraint-compatible random system.
pub fn two_spin_universe(
    omega: f64,
    alpha: f64,
    g: f64,
    d_s: usize,
    seed: u64,
) -> Result<UniverseSpec> {
    let net = ClockNetwork::two_spin(omega, alpha, g)?;
    let system = paired_random_system(&net, d_s, seed, None)?;
    UniverseSpec::new(net, system)
}

/// Spin network from frequencies plus dimensionless couplings given per
/// ordered pair (observer, partner): raw g_jk = g̃/ω_partner.
pub fn spin_network(
    omegas: &[f64],
    dimensionless: &[(usize, usize, f64)],
) -> Result<ClockNetwork> {
    let clocks: Vec<ClockModel> = omegas
        .iter()
        .map(|&w| ClockModel::spin(w))
        .collect::<Result<_>>()?;
    let n = omegas.len();
    let mut raw = vec![vec![0.0; n]; n];
    let mut any = false;
    for &(j, k, g) in dimensionless {
        if j >= n || k >= n {
            return Err(Error::SiteOutOfRange {
                index: j.max(k),
                sites: n,
            });
        }
        let r = g / omegas[k];
        raw[j][k] = r;
        raw[k][j] = r;
        any |= g != 0.0;
    }
    let interaction = if any {
        InteractionKind::GravitationalLike
    } else {
        InteractionKind::None
    };
    ClockNetwork::new(clocks, raw, interaction)
}

pub const TWO_LEVEL_CLOCK: &str = r#"name = "two-level-clock"

# One spin-1/2 clock with a system paired against its two levels: the
# conditional amplitude stays flat at 1/sqrt(2) over the whole period.

[[clocks]]
kind = "spin"
omega = 1.0

[system]
kind = "paired-random"
dim = 2
seed = 11

[[tasks]]
name = "conditional-trace"
scope = "global"
observables = ["sigma_z@system"]

[[tasks]]
name = "amplitude-profile"
scope = "global"

[[tasks]]
name = "verify"
required = true
"#;

pub const TWO_SPIN_NONINTERACTING: &str = r#"name = "two-spin-noninteracting"

# Two free spin clocks (alpha = 1/2). Local conditioning on clock A keeps
# a_A = 1/sqrt(2); the transition amplitude factorizes into cosines.

[[clocks]]
kind = "spin"
omega = 1.0

[[clocks]]
kind = "spin"
omega = 0.5

[system]
kind = "paired-random"
dim = 2
seed = 12

[[tasks]]
name = "transition-amplitude"
nodes = 16

[[tasks]]
name = "conditional-trace"
scope = "local:A"

[[tasks]]
name = "amplitude-profile"
scope = "local:A"

[[tasks]]
name = "verify"
required = true
"#;

pub const TWO_SPIN_TIDIT: &str = r#"name = "two-spin-tidit"

# Two spin clocks with the gravitational-like spin-spin coupling in the
# dimensionless convention. The sweep crosses the degenerate point |g| = 1
# where one redshift eigenspace freezes.

[[clocks]]
kind = "spin"
omega = 1.0

[[clocks]]
kind = "spin"
omega = 0.5

[couplings]
dimensionless = true
pairs = [{ a = "A", b = "B", g = 0.3 }]

[system]
kind = "paired-random"
dim = 2
seed = 13

[[tasks]]
name = "conditional-trace"
scope = "local:A"
observables = ["sigma_z@B"]

[[tasks]]
name = "tidit-sweep"
clock = "A"
g_values = [0.0, 0.3, 0.9, 1.0, 1.5]

[[tasks]]
name = "amplitude-profile"
scope = "local:A"

[[tasks]]
name = "verify"
required = true
"#;

pub const THREE_SPIN_NETWORK: &str = r#"name = "three-spin-network"

# Three spin clocks with clock A coupled to B and C: the redshift spectrum
# from A's perspective splits into 1 +/- g_AB +/- g_AC.

[[clocks]]
kind = "spin"
omega = 1.0

[[clocks]]
kind = "spin"
omega = 0.5

[[clocks]]
kind = "spin"
omega = 0.75

[couplings]
dimensionless = true
pairs = [
    { a = "A", b = "B", g = 0.2 },
    { a = "A", b = "C", g = 0.1 },
]

[system]
kind = "paired-random"
dim = 2
seed = 14

[[tasks]]
name = "conditional-trace"
scope = "local:A"

[[tasks]]
name = "tidit-sweep"
clock = "A"
g_values = [0.1, 0.2, 0.4]

[[tasks]]
name = "verify"
required = true
"#;

/// All built-in presets as (name, config text) pairs.
pub fn presets() -> Vec<(&'static str, &'static str)> {
    vec![
        ("two-level-clock", TWO_LEVEL_CLOCK),
        ("two-spin-noninteracting", TWO_SPIN_NONINTERACTING),
        ("two-spin-tidit", TWO_SPIN_TIDIT),
        ("three-spin-network", THREE_SPIN_NETWORK),
    ]
}

pub fn preset(name: &str) -> Option<&'static str> {
    presets().into_iter().find(|(n, _)| *n == name).map(|(_, text)| text)
}
