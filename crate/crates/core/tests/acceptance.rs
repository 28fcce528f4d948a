//! Acceptance suite: end-to-end criteria with pinned tolerances, one test
//! per criterion. Each prints a single PASS/FAIL line.

use aim_core::ansatz::{build_spa, build_topology, Connectivity};
use aim_core::correlator::{
    correlator_fast, greater_lesser_retarded, hadamard_exact, CorrelatorSpec, FermionOp, Part,
};
use aim_core::greens::{
    classical_lanczos, continued_fraction, default_omega_grid, initial_krylov, omega_grid,
    relative_error, retarded_gf_exact, retarded_gf_variational, Branch, VarLanczosOptions,
    DEFAULT_B_TOL, DEFAULT_ETA,
};
use aim_core::measure::{estimate_energy_exact_from, plan_measurements};
use aim_core::model::ed::{exact_diagonalize, resolvent_reference, sector_spectrum};
use aim_core::model::{
    build_hamiltonian, enumerate_sectors, jw_ladder, sample_params, sector_basis, AimParams,
};
use aim_core::sim::State;
use aim_core::vqe::{ground_search_with, prepare_ground, GroundSearchOptions};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion}: {detail}");
}

/// First `count` seeds whose ED ground state is non-degenerate.
fn non_degenerate_seeds(n_imp: usize, n_bath: usize, count: usize) -> Vec<(u64, AimParams)> {
    let mut out = Vec::new();
    let mut seed = 0u64;
    while out.len() < count {
        let params = sample_params(seed, n_imp, n_bath);
        let ed = exact_diagonalize(&params).expect("desk scale");
        if !ed.degenerate {
            out.push((seed, params));
        }
        seed += 1;
    }
    out
}

#[test]
fn criterion_1_oracle_ground_state_equivalence() {
    let opts = GroundSearchOptions::default();
    let mut ok = 0usize;
    let mut total = 0usize;
    for sites in [2usize, 3] {
        for (seed, params) in non_degenerate_seeds(1, sites - 1, 25) {
            let ed = exact_diagonalize(&params).unwrap();
            let report_ = ground_search_with(&params, 1e-3, sites + 2, &opts).unwrap();
            total += 1;
            if report_.converged && report_.winning_sector == ed.ground_sector {
                ok += 1;
            } else {
                println!(
                    "  seed {seed} sites {sites}: converged={} delta={:.2e} sector {} vs ED {}",
                    report_.converged, report_.delta, report_.winning_sector, ed.ground_sector
                );
            }
        }
    }
    let rate = ok as f64 / total as f64;
    report(
        "1 ground-state equivalence",
        rate >= 0.90,
        &format!("{ok}/{total} seeds reached delta<=1e-3 at d<=sites+2 with the ED sector"),
    );
}

#[test]
fn criterion_2_depth_scaling_spot_check() {
    let opts = GroundSearchOptions::default();
    let sites = 3usize;
    let mut worst = 0usize;
    let mut all_converged = true;
    for (seed, params) in non_degenerate_seeds(1, sites - 1, 20) {
        let report_ = ground_search_with(&params, 1e-5, 2 * sites, &opts).unwrap();
        match report_.d_star {
            Some(d) => worst = worst.max(d),
            None => {
                all_converged = false;
                println!("  seed {seed}: no convergence by d=6, delta={:.2e}", report_.delta);
            }
        }
    }
    report(
        "2 depth scaling",
        all_converged && worst <= 2 * sites,
        &format!("worst-case d* = {worst} (bound {})", 2 * sites),
    );
}

#[test]
fn criterion_3_greens_function_accuracy() {
    let omega = default_omega_grid();
    let mut ok = 0usize;
    let mut total = 0usize;
    for sites in [2usize, 3] {
        let depth = sites;
        for (seed, params) in non_degenerate_seeds(1, sites - 1, 5) {
            let gs = prepare_ground(&params, depth, &GroundSearchOptions::default()).unwrap();
            let exact = retarded_gf_exact(&params, 0, &omega, DEFAULT_ETA).unwrap();
            let (var, _, _) = retarded_gf_variational(
                &params,
                &gs,
                0,
                &omega,
                DEFAULT_ETA,
                depth,
                &VarLanczosOptions::default(),
            )
            .unwrap();
            let err = relative_error(&var, &exact).unwrap();
            total += 1;
            if err <= 0.10 {
                ok += 1;
            } else {
                println!("  seed {seed} sites {sites}: eps_rel = {err:.3}");
            }
        }
    }
    let rate = ok as f64 / total as f64;
    report(
        "3 variational Green's functions",
        rate >= 0.70,
        &format!("{ok}/{total} seeds within 10% relative error at d = sites"),
    );
}

/// Extended (non-gating) run of criterion 3 at four sites.
#[test]
#[ignore]
fn criterion_3_extended_four_sites() {
    let omega = default_omega_grid();
    let sites = 4usize;
    let mut results = Vec::new();
    for (seed, params) in non_degenerate_seeds(1, sites - 1, 3) {
        let gs = prepare_ground(&params, sites, &GroundSearchOptions::default()).unwrap();
        let exact = retarded_gf_exact(&params, 0, &omega, DEFAULT_ETA).unwrap();
        let (var, _, _) = retarded_gf_variational(
            &params,
            &gs,
            0,
            &omega,
            DEFAULT_ETA,
            sites,
            &VarLanczosOptions::default(),
        )
        .unwrap();
        results.push((seed, relative_error(&var, &exact).unwrap()));
    }
    println!("acceptance 3-extended (4 sites, informational): {results:?}");
}

#[test]
fn criterion_4_continued_fraction_vs_resolvent() {
    let omega = default_omega_grid();
    let mut max_dev: f64 = 0.0;
    let mut checked = 0usize;
    for (n_bath, seeds) in [(1usize, 3usize), (2, 3), (3, 2)] {
        for (_, params) in non_degenerate_seeds(1, n_bath, seeds) {
            let ed = exact_diagonalize(&params).unwrap();
            let h_tilde = build_hamiltonian(&params)
                .unwrap()
                .add_identity(Complex64::new(-ed.ground_energy, 0.0));
            for branch in [Branch::Plus, Branch::Minus] {
                let kb = initial_krylov(&ed.ground_state, 0, branch);
                let Some(phi) = kb.state else { continue };
                let chain = classical_lanczos(
                    &h_tilde,
                    &phi,
                    1 << params.n_qubits(),
                    DEFAULT_B_TOL,
                )
                .unwrap();
                for &w in &omega {
                    let z = Complex64::new(w, DEFAULT_ETA);
                    let cf = continued_fraction(&chain, z).unwrap();
                    let reference =
                        resolvent_reference(&params, &phi, z, ed.ground_energy).unwrap();
                    max_dev = max_dev.max((cf - reference).norm());
                    checked += 1;
                }
            }
        }
    }
    report(
        "4 continued fraction vs dense resolvent",
        max_dev <= 1e-8,
        &format!("max |cf - resolvent| = {max_dev:.2e} over {checked} evaluations"),
    );
}

fn dense_heisenberg_oracle(gs: &State, spec: &CorrelatorSpec, h_dense: &DMatrix<Complex64>, n_qubits: usize) -> Complex64 {
    let eig = h_dense.clone().symmetric_eigen();
    let u = |t: f64| -> DMatrix<Complex64> {
        let dim = eig.eigenvalues.len();
        let mut d = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for (k, &e) in eig.eigenvalues.iter().enumerate() {
            d[(k, k)] = Complex64::from_polar(1.0, -e * t);
        }
        &eig.eigenvectors * d * eig.eigenvectors.adjoint()
    };
    let mut v = DVector::from_column_slice(gs.amplitudes());
    let mut prev_t = 0.0;
    for op in &spec.ops {
        v = u(op.t - prev_t) * v;
        prev_t = op.t;
        v = jw_ladder(op.orbital, op.dagger, n_qubits).unwrap().to_dense() * v;
    }
    let bra = u(prev_t) * DVector::from_column_slice(gs.amplitudes());
    (bra.adjoint() * v)[(0, 0)]
}

#[test]
fn criterion_5_theorem_1_equivalence() {
    let mut rng = ChaCha12Rng::seed_from_u64(505);
    let mut max_fast_vs_dense: f64 = 0.0;
    let mut max_gate_vs_fast: f64 = 0.0;
    let mut pairs = 0usize;
    for (_, params) in non_degenerate_seeds(1, 1, 5) {
        let h = build_hamiltonian(&params).unwrap();
        let h_dense = h.to_dense();
        // a converged variational prep serves both modes
        let gs = prepare_ground(&params, 3, &GroundSearchOptions::default()).unwrap();
        let topo = build_topology(1, 1, Connectivity::SquareNn).unwrap();
        let spa = build_spa(&topo, gs.depth, &gs.sector).unwrap();
        let prep = spa.bind(&gs.theta).unwrap();
        for _ in 0..4 {
            let m = rng.random_range(2..=4usize);
            let ops: Vec<FermionOp> = (0..m)
                .map(|_| FermionOp {
                    orbital: rng.random_range(0..4),
                    dagger: rng.random::<bool>(),
                    t: rng.random::<f64>() * 2.0 - 0.5,
                })
                .collect();
            let spec = CorrelatorSpec::new(ops).unwrap();
            let fast = correlator_fast(&gs.state, &spec, &h).unwrap();
            let dense = dense_heisenberg_oracle(&gs.state, &spec, &h_dense, 4);
            max_fast_vs_dense = max_fast_vs_dense.max((fast.value - dense).norm());
            if fast.aborted_at.is_none() {
                let re = hadamard_exact(&prep, &spec, &h, Part::Real).unwrap();
                let im = hadamard_exact(&prep, &spec, &h, Part::Imag).unwrap();
                let gate = Complex64::new(re, im);
                max_gate_vs_fast = max_gate_vs_fast.max((gate - fast.value).norm());
            }
            pairs += 1;
        }
    }
    report(
        "5 Theorem-1 equivalence",
        pairs == 20 && max_fast_vs_dense <= 1e-10 && max_gate_vs_fast <= 1e-10,
        &format!(
            "{pairs} pairs; |fast - dense| <= {max_fast_vs_dense:.2e}, |gate - fast| <= {max_gate_vs_fast:.2e}"
        ),
    );
}

#[test]
fn criterion_6_time_frequency_consistency() {
    let (_, params) = non_degenerate_seeds(1, 1, 1).pop().unwrap();
    let ed = exact_diagonalize(&params).unwrap();
    let h = build_hamiltonian(&params).unwrap();
    let eta = DEFAULT_ETA;
    let dt = 0.02;
    let steps = (400.0f64 / dt).round() as usize;
    let ts: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    let series = greater_lesser_retarded(&ed.ground_state, &h, 0, &ts).unwrap();
    let omega = omega_grid(-20.0, 20.0, 0.05);
    let freq = retarded_gf_exact(&params, 0, &omega, eta).unwrap();
    // damped Fourier transform by composite Simpson quadrature
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, &w) in omega.iter().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, (&t, g)) in ts.iter().zip(series.retarded.iter()).enumerate() {
            let weight = if j == 0 || j == steps {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += weight * g * Complex64::from_polar((-eta * t).exp(), w * t);
        }
        let ft = acc * (dt / 3.0);
        num += (ft - freq.values[k]).norm_sqr();
        den += freq.values[k].norm_sqr();
    }
    let err = (num / den).sqrt();
    report(
        "6 time/frequency consistency",
        err <= 0.02,
        &format!("L2 mismatch {err:.4} between transformed G^R(t) and G^R(omega)"),
    );
}

#[test]
fn criterion_7_measurement_plan_exactness() {
    let mut max_dev: f64 = 0.0;
    let mut counts_ok = true;
    let mut rng = ChaCha12Rng::seed_from_u64(707);
    for n_bath in [1usize, 2, 3] {
        for (_, params) in non_degenerate_seeds(1, n_bath, 2) {
            let h = build_hamiltonian(&params).unwrap();
            let nq = params.n_qubits();
            let unpar = plan_measurements(&params, false).unwrap();
            let par = plan_measurements(&params, true).unwrap();
            counts_ok &= unpar.n_circuits() == 1 + 2 * n_bath;
            counts_ok &= par.n_circuits() == 1 + n_bath.max(1);
            // random sector state
            let sector = enumerate_sectors(nq, true).unwrap()[rng.random_range(0..2)];
            let topo = build_topology(1, n_bath, Connectivity::SquareNn).unwrap();
            let spa = build_spa(&topo, 2, &sector).unwrap();
            let theta: Vec<f64> = (0..spa.parameter_count())
                .map(|_| rng.random_range(-1.5..1.5))
                .collect();
            let (state, _) = spa
                .bind(&theta)
                .unwrap()
                .run(&State::zero(nq))
                .unwrap();
            let exact = state.expectation(&h).unwrap().re;
            for plan in [&unpar, &par] {
                let est = estimate_energy_exact_from(&state, plan, true).unwrap();
                max_dev = max_dev.max((est.energy - exact).abs());
            }
        }
    }
    report(
        "7 measurement-plan exactness",
        counts_ok && max_dev <= 1e-10,
        &format!("max |estimate - <H>| = {max_dev:.2e}; circuit counts match the formulas: {counts_ok}"),
    );
}

#[test]
fn criterion_8_symmetry_suite() {
    let mut rng = ChaCha12Rng::seed_from_u64(808);
    // SPA leakage on 100 random parameter vectors per (topology, sector)
    let mut max_leak: f64 = 0.0;
    for (ni, nb, mode) in [
        (1usize, 1usize, Connectivity::SquareNn),
        (1, 2, Connectivity::SquareNn),
        (1, 2, Connectivity::SquareNnn),
    ] {
        let topo = build_topology(ni, nb, mode).unwrap();
        let nq = topo.n_qubits();
        for sector in enumerate_sectors(nq, true).unwrap() {
            let spa = build_spa(&topo, 2, &sector).unwrap();
            let basis = sector_basis(&sector, nq).unwrap();
            for _ in 0..100 {
                let theta: Vec<f64> = (0..spa.parameter_count())
                    .map(|_| rng.random_range(-3.0..3.0))
                    .collect();
                let (state, _) = spa.bind(&theta).unwrap().run(&State::zero(nq)).unwrap();
                max_leak = max_leak.max(state.mass_outside(&basis));
            }
        }
    }
    // noiseless post-selection keeps every shot
    let mut kept_min: f64 = 1.0;
    for (_, params) in non_degenerate_seeds(1, 2, 2) {
        let topo = build_topology(1, 2, Connectivity::SquareNn).unwrap();
        let sector = enumerate_sectors(6, true).unwrap()[3];
        let spa = build_spa(&topo, 2, &sector).unwrap();
        let theta: Vec<f64> = (0..spa.parameter_count())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let (state, _) = spa.bind(&theta).unwrap().run(&State::zero(6)).unwrap();
        let plan = plan_measurements(&params, true).unwrap();
        let est = estimate_energy_exact_from(&state, &plan, true).unwrap();
        kept_min = kept_min.min(est.kept_fraction);
    }
    // Z2 degeneracy of sector ED energies
    let mut z2_dev: f64 = 0.0;
    for (_, params) in non_degenerate_seeds(1, 2, 3) {
        for sector in enumerate_sectors(6, true).unwrap() {
            let a = sector_spectrum(&params, &sector).unwrap().energies[0];
            let b = sector_spectrum(&params, &sector.spin_flipped())
                .unwrap()
                .energies[0];
            z2_dev = z2_dev.max((a - b).abs());
        }
    }
    report(
        "8 symmetry suite",
        max_leak < 1e-12 && (kept_min - 1.0).abs() < 1e-12 && z2_dev <= 1e-10,
        &format!(
            "leakage <= {max_leak:.2e}, post-selection keeps {kept_min}, Z2 energy split <= {z2_dev:.2e}"
        ),
    );
}

#[test]
fn criterion_9_spectral_sum_rule() {
    let omega = omega_grid(-60.0, 60.0, 0.01);
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for sites in [2usize, 3] {
        for (_, params) in non_degenerate_seeds(1, sites - 1, 5) {
            let gf = retarded_gf_exact(&params, 0, &omega, 0.05).unwrap();
            let integral: f64 = gf.values.iter().map(|v| v.im).sum::<f64>() * 0.01;
            let weight = -integral / std::f64::consts::PI;
            worst = worst.max((weight - 1.0).abs());
            checked += 1;
        }
    }
    report(
        "9 spectral sum rule",
        worst <= 0.05,
        &format!("max |weight - 1| = {worst:.4} over {checked} seeds"),
    );
}
