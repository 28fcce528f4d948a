//! Sector-blocked exact diagonalization and a dense-resolvent reference.
//!
//! This is the oracle everything else in the crate is validated against.

use super::pauli::PauliSum;
use super::{
    build_hamiltonian, enumerate_sectors, sector_basis, AimParams, ModelError, Sector,
};
use crate::sim::{SimError, State};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Desk-scale guard for full diagonalization.
pub const MAX_ED_QUBITS: usize = 16;

/// Ground states closer than this in energy are flagged degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum EdError {
    #[error("{0} qubits exceeds the exact-diagonalization guard of {MAX_ED_QUBITS}")]
    TooLarge(usize),
    #[error("linear system is singular at this z")]
    SingularResolvent,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Outcome of a full sector-blocked diagonalization.
#[derive(Clone, Debug)]
pub struct EdResult {
    pub ground_energy: f64,
    pub ground_state: State,
    pub ground_sector: Sector,
    /// Set when the global gap is below [`DEGENERACY_TOL`].
    pub degenerate: bool,
    /// Energy gap between the two lowest global eigenvalues (eV).
    pub gap: f64,
}

/// Eigen-decomposition of one symmetry block.
#[derive(Clone, Debug)]
pub struct SectorSpectrum {
    pub sector: Sector,
    /// Basis-state indices spanning the block, ascending.
    pub basis: Vec<usize>,
    /// Eigenvalues ascending.
    pub energies: Vec<f64>,
    /// Column `k` holds the eigenvector of `energies[k]` over `basis`.
    pub vectors: DMatrix<f64>,
}

impl SectorSpectrum {
    /// Embed eigenvector `k` into the full register.
    pub fn eigenstate(&self, k: usize, n_qubits: usize) -> State {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        for (row, &idx) in self.basis.iter().enumerate() {
            amps[idx] = Complex64::new(self.vectors[(row, k)], 0.0);
        }
        State::from_amplitudes(amps).expect("power-of-two length")
    }
}

/// Dense real-symmetric block of a Hermitian operator within one sector.
pub fn sector_block(h: &PauliSum, sector: &Sector) -> Result<(Vec<usize>, DMatrix<f64>), EdError> {
    let nq = h.n_qubits();
    let basis = sector_basis(sector, nq)?;
    let mut pos = vec![usize::MAX; 1 << nq];
    for (p, &idx) in basis.iter().enumerate() {
        pos[idx] = p;
    }
    let d = basis.len();
    let mut block = DMatrix::zeros(d, d);
    // Accumulate the full image of each basis column first: single Pauli
    // strings may leave the sector even though the Hermitian sum does not.
    let mut image = vec![Complex64::new(0.0, 0.0); 1 << nq];
    for (col, &idx) in basis.iter().enumerate() {
        for a in &mut image {
            *a = Complex64::new(0.0, 0.0);
        }
        for term in h.terms() {
            let (phase, out) = term.apply_basis(idx);
            image[out] += phase;
        }
        for (out, amp) in image.iter().enumerate() {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            let row = pos[out];
            debug_assert!(
                row != usize::MAX || amp.norm() < 1e-12,
                "H must preserve the sector"
            );
            if row != usize::MAX {
                debug_assert!(amp.im.abs() < 1e-12, "real-symmetric model expected");
                block[(row, col)] += amp.re;
            }
        }
    }
    Ok((basis, block))
}

/// Diagonalize one sector of the AIM Hamiltonian.
pub fn sector_spectrum(params: &AimParams, sector: &Sector) -> Result<SectorSpectrum, EdError> {
    let nq = params.n_qubits();
    if nq > MAX_ED_QUBITS {
        return Err(EdError::TooLarge(nq));
    }
    let h = build_hamiltonian(params)?;
    sector_spectrum_of(&h, sector)
}

/// Diagonalize one sector of an arbitrary (real-symmetric, sector-preserving)
/// operator.
pub fn sector_spectrum_of(h: &PauliSum, sector: &Sector) -> Result<SectorSpectrum, EdError> {
    let (basis, block) = sector_block(h, sector)?;
    let eig = block.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(basis.len(), basis.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    Ok(SectorSpectrum {
        sector: *sector,
        basis,
        energies,
        vectors,
    })
}

/// Ground energy and state within one sector.
pub fn sector_ground(params: &AimParams, sector: &Sector) -> Result<(f64, State), EdError> {
    let spec = sector_spectrum(params, sector)?;
    let state = spec.eigenstate(0, params.n_qubits());
    Ok((spec.energies[0], state))
}

/// All sectors including the trivial vacuum and fully-filled ones.
pub fn all_sectors(n_qubits: usize) -> Result<Vec<Sector>, ModelError> {
    let mut sectors = vec![Sector::new(0, 0, n_qubits)?];
    sectors.extend(enumerate_sectors(n_qubits, false)?);
    sectors.push(Sector::new(n_qubits, 0, n_qubits)?);
    Ok(sectors)
}

/// Block-diagonalize the full Hamiltonian and report the global minimum.
pub fn exact_diagonalize(params: &AimParams) -> Result<EdResult, EdError> {
    let nq = params.n_qubits();
    if nq > MAX_ED_QUBITS {
        return Err(EdError::TooLarge(nq));
    }
    let h = build_hamiltonian(params)?;
    let mut all_energies: Vec<f64> = Vec::with_capacity(1 << nq);
    let mut best: Option<(f64, Sector, SectorSpectrum)> = None;
    for sector in all_sectors(nq)? {
        let spec = sector_spectrum_of(&h, &sector)?;
        all_energies.extend_from_slice(&spec.energies);
        let e0 = spec.energies[0];
        if best.as_ref().is_none_or(|(e, _, _)| e0 < *e) {
            best = Some((e0, sector, spec));
        }
    }
    let (ground_energy, ground_sector, spec) = best.expect("at least one sector");
    all_energies.sort_by(f64::total_cmp);
    let gap = all_energies[1] - all_energies[0];
    Ok(EdResult {
        ground_energy,
        ground_state: spec.eigenstate(0, nq),
        ground_sector,
        degenerate: gap < DEGENERACY_TOL,
        gap,
    })
}

/// Dense-solve reference for the resolvent matrix element
/// `<phi| (z - (H - e_gs))^{-1} |phi>`.
pub fn resolvent_reference(
    params: &AimParams,
    phi: &State,
    z: Complex64,
    e_gs: f64,
) -> Result<Complex64, EdError> {
    let h = build_hamiltonian(params)?;
    resolvent_reference_of(&h, phi, z, e_gs)
}

/// Same as [`resolvent_reference`] for a prebuilt operator.
pub fn resolvent_reference_of(
    h: &PauliSum,
    phi: &State,
    z: Complex64,
    e_gs: f64,
) -> Result<Complex64, EdError> {
    let nq = h.n_qubits();
    if nq > crate::sim::MAX_DENSE_QUBITS {
        return Err(EdError::Sim(SimError::TooLargeForDense(nq)));
    }
    if phi.n_qubits() != nq {
        return Err(EdError::Sim(SimError::RegisterMismatch {
            state: phi.n_qubits(),
            operator: nq,
        }));
    }
    let dim = 1usize << nq;
    let mut a = h.to_dense().scale(-1.0);
    let shift = z + Complex64::new(e_gs, 0.0);
    for i in 0..dim {
        a[(i, i)] += shift;
    }
    let rhs = DVector::from_column_slice(phi.amplitudes());
    let lu = a.lu();
    let x = lu.solve(&rhs).ok_or(EdError::SingularResolvent)?;
    Ok((rhs.adjoint() * &x)[(0, 0)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::pauli::{PauliOp, PauliTerm};
    use crate::model::sample_params;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn single_site_spectrum_by_hand() {
        // H = n_up + n_down + 2 n_up n_down has spectrum {0, 1, 1, 4}
        let params =
            AimParams::new(1, 0, vec![vec![1.0]], vec![2.0], vec![vec![]], vec![]).unwrap();
        let ed = exact_diagonalize(&params).unwrap();
        assert!((ed.ground_energy - 0.0).abs() < 1e-12);
        assert_eq!(ed.ground_sector, Sector { n_total: 0, s_z: 0 });
        assert!(!ed.degenerate);
        assert!((ed.gap - 1.0).abs() < 1e-12);
        let mut all: Vec<f64> = Vec::new();
        for sector in all_sectors(2).unwrap() {
            all.extend(sector_spectrum(&params, &sector).unwrap().energies);
        }
        all.sort_by(f64::total_cmp);
        let expect = [0.0, 1.0, 1.0, 4.0];
        for (got, want) in all.iter().zip(expect.iter()) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn ground_matches_full_dense_eigensolve() {
        for (seed, ni, nb) in [(1u64, 1, 1), (2, 1, 2), (3, 2, 1)] {
            let params = sample_params(seed, ni, nb);
            let ed = exact_diagonalize(&params).unwrap();
            let dense = build_hamiltonian(&params).unwrap().to_dense();
            let full = dense.map(|c| c.re).symmetric_eigen();
            let min = full.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(
                (ed.ground_energy - min).abs() < 1e-10,
                "seed {seed}: {} vs {min}",
                ed.ground_energy
            );
            // ground state support stays in the ground sector
            let basis = sector_basis(&ed.ground_sector, params.n_qubits()).unwrap();
            assert!(ed.ground_state.mass_outside(&basis) < 1e-12);
            assert!((ed.ground_state.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn blocked_and_full_ground_states_agree() {
        let params = sample_params(14, 1, 2);
        let ed = exact_diagonalize(&params).unwrap();
        if ed.degenerate {
            return;
        }
        let dense = build_hamiltonian(&params).unwrap().to_dense().map(|c| c.re);
        let full = dense.symmetric_eigen();
        let k = (0..full.eigenvalues.len())
            .min_by(|&a, &b| full.eigenvalues[a].total_cmp(&full.eigenvalues[b]))
            .unwrap();
        let full_state = State::from_amplitudes(
            full.eigenvectors
                .column(k)
                .iter()
                .map(|&x| Complex64::new(x, 0.0))
                .collect(),
        )
        .unwrap();
        let fid = ed.ground_state.inner(&full_state).norm();
        assert!(fid > 1.0 - 1e-12, "fidelity {fid}");
    }

    #[test]
    fn z2_partner_sectors_share_spectra() {
        let params = sample_params(6, 1, 2);
        for sector in enumerate_sectors(params.n_qubits(), true).unwrap() {
            let a = sector_spectrum(&params, &sector).unwrap();
            let b = sector_spectrum(&params, &sector.spin_flipped()).unwrap();
            for (ea, eb) in a.energies.iter().zip(b.energies.iter()) {
                assert!((ea - eb).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn size_guard_enforced() {
        let params = sample_params(0, 1, 8); // 18 qubits
        assert!(matches!(
            exact_diagonalize(&params),
            Err(EdError::TooLarge(18))
        ));
    }

    #[test]
    fn resolvent_on_eigenvector_is_pole() {
        // phi an eigenvector of H-tilde with eigenvalue lambda -> 1/(z-lambda)
        let params = sample_params(23, 1, 1);
        let ed = exact_diagonalize(&params).unwrap();
        let z = Complex64::new(0.4, 0.3);
        let got = resolvent_reference(&params, &ed.ground_state, z, ed.ground_energy).unwrap();
        // H-tilde annihilates the ground state, so lambda = 0
        let expect = 1.0 / z;
        assert!((got - expect).norm() < 1e-10);
    }

    #[test]
    fn two_level_resolvent_by_hand() {
        // H-tilde = sigma_x on one qubit: <0|(z - X)^{-1}|0> = z/(z^2-1)
        let h = PauliSum::new(
            1,
            vec![PauliTerm::single(Complex64::new(1.0, 0.0), 0, PauliOp::X)],
        )
        .unwrap();
        let z = Complex64::new(2.0, 0.0);
        let got = resolvent_reference_of(&h, &State::zero(1), z, 0.0).unwrap();
        assert!((got - Complex64::new(2.0 / 3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn resolvent_imaginary_part_sign() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        for seed in 0..5u64 {
            let params = sample_params(seed, 1, 1);
            let ed = exact_diagonalize(&params).unwrap();
            let amps: Vec<Complex64> = (0..16)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let phi = State::from_amplitudes(amps).unwrap().normalized();
            let omega = rng.random::<f64>() * 10.0 - 5.0;
            let z = Complex64::new(omega, 0.2);
            let g = resolvent_reference(&params, &phi, z, ed.ground_energy).unwrap();
            assert!(g.im < 0.0, "Im g = {} must be negative for eta > 0", g.im);
        }
    }
}
