//! Anderson impurity model: Hamiltonian parameters, the Jordan-Wigner qubit
//! image, and charge/spin sector combinatorics.
//!
//! Orbital-to-qubit convention: with `M = n_imp + n_bath` sites, spin-up
//! orbitals occupy qubits `0..M` (impurities first, then baths) and spin-down
//! orbitals occupy qubits `M..2M` in the same site order. Qubit `q` is bit `q`
//! of the basis-state integer (little-endian).

pub mod ed;
pub mod pauli;

use num_complex::Complex64;
use pauli::{PauliError, PauliSum, PauliTerm};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("h must be a symmetric {n}x{n} matrix (asymmetry {asym:.3e})")]
    AsymmetricH { n: usize, asym: f64 },
    #[error("inconsistent dimensions: {0}")]
    Dimensions(String),
    #[error("n_imp must be >= 1")]
    NoImpurity,
    #[error("orbital index {orbital} out of range for {n_qubits} qubits")]
    OrbitalOutOfRange { orbital: usize, n_qubits: usize },
    #[error("(N={n}, Sz={sz}) is not a valid sector for {n_qubits} qubits")]
    InvalidSector { n: usize, sz: i64, n_qubits: usize },
    #[error("n_qubits must be even, got {0}")]
    OddRegister(usize),
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

/// Hamiltonian parameter set. All energies are in eV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AimParams {
    pub n_imp: usize,
    pub n_bath: usize,
    /// Impurity single-particle block, symmetric `n_imp x n_imp`.
    pub h: Vec<Vec<f64>>,
    /// On-site interactions, length `n_imp`.
    #[serde(rename = "U")]
    pub u: Vec<f64>,
    /// Impurity-bath hybridization, `n_imp x n_bath`.
    #[serde(rename = "V")]
    pub v: Vec<Vec<f64>>,
    /// Bath on-site energies, length `n_bath`.
    pub eps: Vec<f64>,
    /// Sampler provenance, recorded when the parameters were drawn.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
}

pub const H_SYMMETRY_TOL: f64 = 1e-12;

impl AimParams {
    pub fn new(
        n_imp: usize,
        n_bath: usize,
        h: Vec<Vec<f64>>,
        u: Vec<f64>,
        v: Vec<Vec<f64>>,
        eps: Vec<f64>,
    ) -> Result<Self, ModelError> {
        if n_imp == 0 {
            return Err(ModelError::NoImpurity);
        }
        let dim_err = |what: &str| Err(ModelError::Dimensions(what.to_string()));
        if h.len() != n_imp || h.iter().any(|row| row.len() != n_imp) {
            return dim_err("h must be n_imp x n_imp");
        }
        if u.len() != n_imp {
            return dim_err("U must have length n_imp");
        }
        if v.len() != n_imp || v.iter().any(|row| row.len() != n_bath) {
            return dim_err("V must be n_imp x n_bath");
        }
        if eps.len() != n_bath {
            return dim_err("eps must have length n_bath");
        }
        let mut asym: f64 = 0.0;
        #[allow(clippy::needless_range_loop)] // reads h[i][j] against h[j][i]
        for i in 0..n_imp {
            for j in 0..n_imp {
                asym = asym.max((h[i][j] - h[j][i]).abs());
            }
        }
        if asym > H_SYMMETRY_TOL {
            return Err(ModelError::AsymmetricH { n: n_imp, asym });
        }
        Ok(AimParams {
            n_imp,
            n_bath,
            h,
            u,
            v,
            eps,
            seed: None,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_imp + self.n_bath
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.n_sites()
    }

    /// Qubit carrying site `site` (0-based, impurities first) with `spin_up`.
    pub fn qubit(&self, site: usize, spin_up: bool) -> usize {
        if spin_up {
            site
        } else {
            self.n_sites() + site
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("AimParams serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let raw: AimParams = serde_json::from_str(text)?;
        Ok(raw)
    }
}

/// Draw one Hamiltonian from the uniform parameter distributions
/// `h_ij in [-5, 5]` (symmetrized by drawing only `i <= j`), `U_i in [1, 10]`,
/// `V_ib in [-5, 5]`, `eps_b in [-5, 5]`. Deterministic in `seed`.
pub fn sample_params(seed: u64, n_imp: usize, n_bath: usize) -> AimParams {
    assert!(n_imp >= 1, "n_imp must be >= 1");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut h = vec![vec![0.0; n_imp]; n_imp];
    #[allow(clippy::needless_range_loop)] // fills h[i][j] and its mirror
    for i in 0..n_imp {
        for j in i..n_imp {
            let val = rng.random_range(-5.0..5.0);
            h[i][j] = val;
            h[j][i] = val;
        }
    }
    let u: Vec<f64> = (0..n_imp).map(|_| rng.random_range(1.0..10.0)).collect();
    let v: Vec<Vec<f64>> = (0..n_imp)
        .map(|_| (0..n_bath).map(|_| rng.random_range(-5.0..5.0)).collect())
        .collect();
    let eps: Vec<f64> = (0..n_bath).map(|_| rng.random_range(-5.0..5.0)).collect();
    let mut params = AimParams::new(n_imp, n_bath, h, u, v, eps).expect("sampled params valid");
    params.seed = Some(seed);
    params
}

/// Jordan-Wigner ladder operator on one spin-orbital:
/// `(1/2)(X -/+ iY)` on `orbital` times `Z` on every lower qubit index
/// (`-` for creation, `+` for annihilation).
pub fn jw_ladder(orbital: usize, dagger: bool, n_qubits: usize) -> Result<PauliSum, ModelError> {
    if orbital >= n_qubits {
        return Err(ModelError::OrbitalOutOfRange { orbital, n_qubits });
    }
    let y_coeff = if dagger {
        Complex64::new(0.0, -0.5)
    } else {
        Complex64::new(0.0, 0.5)
    };
    let string: Vec<(usize, pauli::PauliOp)> =
        (0..orbital).map(|q| (q, pauli::PauliOp::Z)).collect();
    let mut x_factors = string.clone();
    x_factors.push((orbital, pauli::PauliOp::X));
    let mut y_factors = string;
    y_factors.push((orbital, pauli::PauliOp::Y));
    Ok(PauliSum::new(
        n_qubits,
        vec![
            PauliTerm::new(Complex64::new(0.5, 0.0), x_factors),
            PauliTerm::new(y_coeff, y_factors),
        ],
    )?)
}

/// Number operator `n = c^dag c = (I - Z)/2` on one spin-orbital.
pub fn number_op(orbital: usize, n_qubits: usize) -> Result<PauliSum, ModelError> {
    let cdag = jw_ladder(orbital, true, n_qubits)?;
    let c = jw_ladder(orbital, false, n_qubits)?;
    Ok(cdag.mul(&c)?)
}

/// Qubit image of the AIM Hamiltonian over `2 * (n_imp + n_bath)` qubits.
pub fn build_hamiltonian(params: &AimParams) -> Result<PauliSum, ModelError> {
    let nq = params.n_qubits();
    let mut h_sum = PauliSum::zero(nq);
    let hop = |a: usize, b: usize, amp: f64| -> Result<PauliSum, ModelError> {
        let term = jw_ladder(a, true, nq)?.mul(&jw_ladder(b, false, nq)?)?;
        Ok(term.scale(Complex64::new(amp, 0.0)))
    };
    for spin_up in [true, false] {
        // impurity block: hopping and on-site energies
        for i in 0..params.n_imp {
            for j in 0..params.n_imp {
                let amp = params.h[i][j];
                if amp != 0.0 {
                    let qa = params.qubit(i, spin_up);
                    let qb = params.qubit(j, spin_up);
                    h_sum = h_sum.add(&hop(qa, qb, amp)?)?;
                }
            }
        }
        // hybridization, V c^dag_i c_b + h.c.
        for i in 0..params.n_imp {
            for b in 0..params.n_bath {
                let amp = params.v[i][b];
                if amp != 0.0 {
                    let qi = params.qubit(i, spin_up);
                    let qb = params.qubit(params.n_imp + b, spin_up);
                    h_sum = h_sum.add(&hop(qi, qb, amp)?)?;
                    h_sum = h_sum.add(&hop(qb, qi, amp)?)?;
                }
            }
        }
        // bath on-site energies
        for b in 0..params.n_bath {
            let amp = params.eps[b];
            if amp != 0.0 {
                let q = params.qubit(params.n_imp + b, spin_up);
                h_sum = h_sum.add(&number_op(q, nq)?.scale(Complex64::new(amp, 0.0)))?;
            }
        }
    }
    // on-site interaction U n_up n_down
    for i in 0..params.n_imp {
        let amp = params.u[i];
        if amp != 0.0 {
            let n_up = number_op(params.qubit(i, true), nq)?;
            let n_down = number_op(params.qubit(i, false), nq)?;
            h_sum = h_sum.add(&n_up.mul(&n_down)?.scale(Complex64::new(amp, 0.0)))?;
        }
    }
    Ok(h_sum)
}

/// Total-charge and spin-z operators `n^+ = N_up + N_down`,
/// `n^- = N_up - N_down` as Pauli sums.
pub fn symmetry_ops(n_qubits: usize) -> Result<(PauliSum, PauliSum), ModelError> {
    if !n_qubits.is_multiple_of(2) {
        return Err(ModelError::OddRegister(n_qubits));
    }
    let register = n_qubits / 2;
    let mut plus = PauliSum::zero(n_qubits);
    let mut minus = PauliSum::zero(n_qubits);
    for q in 0..n_qubits {
        let n = number_op(q, n_qubits)?;
        plus = plus.add(&n)?;
        if q < register {
            minus = minus.add(&n)?;
        } else {
            minus = minus.add(&n.scale(Complex64::new(-1.0, 0.0)))?;
        }
    }
    Ok((plus, minus))
}

/// A charge/spin symmetry sector: total charge `N` and spin z-component `Sz`
/// (in units where one electron contributes +/-1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Sector {
    pub n_total: usize,
    pub s_z: i64,
}

impl Sector {
    pub fn new(n_total: usize, s_z: i64, n_qubits: usize) -> Result<Self, ModelError> {
        let sector = Sector { n_total, s_z };
        if !n_qubits.is_multiple_of(2) {
            return Err(ModelError::OddRegister(n_qubits));
        }
        let register = (n_qubits / 2) as i64;
        let n = n_total as i64;
        let up2 = n + s_z;
        let down2 = n - s_z;
        let valid = up2 % 2 == 0
            && down2 % 2 == 0
            && up2 >= 0
            && down2 >= 0
            && up2 / 2 <= register
            && down2 / 2 <= register;
        if !valid {
            return Err(ModelError::InvalidSector {
                n: n_total,
                sz: s_z,
                n_qubits,
            });
        }
        Ok(sector)
    }

    pub fn n_up(&self) -> usize {
        ((self.n_total as i64 + self.s_z) / 2) as usize
    }

    pub fn n_down(&self) -> usize {
        ((self.n_total as i64 - self.s_z) / 2) as usize
    }

    /// The Z2 spin-flipped partner `(N, -Sz)`.
    pub fn spin_flipped(&self) -> Sector {
        Sector {
            n_total: self.n_total,
            s_z: -self.s_z,
        }
    }
}

impl std::fmt::Display for Sector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(N={}, Sz={})", self.n_total, self.s_z)
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Dimension `D(N, Sz) = C(Nq/2, N_up) * C(Nq/2, N_down)` of a sector.
pub fn sector_dimension(sector: &Sector, n_qubits: usize) -> Result<usize, ModelError> {
    Sector::new(sector.n_total, sector.s_z, n_qubits)?;
    let register = n_qubits / 2;
    Ok(binomial(register, sector.n_up()) * binomial(register, sector.n_down()))
}

/// All non-trivial sectors (`1 <= N <= Nq - 1`). With `unique_only` the
/// `Sz >= 0` representative of each Z2 pair is kept.
pub fn enumerate_sectors(n_qubits: usize, unique_only: bool) -> Result<Vec<Sector>, ModelError> {
    if !n_qubits.is_multiple_of(2) {
        return Err(ModelError::OddRegister(n_qubits));
    }
    let register = n_qubits / 2;
    let mut sectors = Vec::new();
    for n in 1..n_qubits {
        let up_min = n.saturating_sub(register);
        let up_max = n.min(register);
        for n_up in up_min..=up_max {
            let s_z = 2 * n_up as i64 - n as i64;
            if unique_only && s_z < 0 {
                continue;
            }
            sectors.push(Sector { n_total: n, s_z });
        }
    }
    sectors.sort();
    Ok(sectors)
}

/// Computational-basis indices spanning a sector, ascending.
pub fn sector_basis(sector: &Sector, n_qubits: usize) -> Result<Vec<usize>, ModelError> {
    Sector::new(sector.n_total, sector.s_z, n_qubits)?;
    let register = n_qubits / 2;
    let up_mask = (1usize << register) - 1;
    let n_up = sector.n_up() as u32;
    let n_down = sector.n_down() as u32;
    let dim = 1usize << n_qubits;
    let mut basis = Vec::with_capacity(sector_dimension(sector, n_qubits)?);
    for idx in 0..dim {
        let up = (idx & up_mask).count_ones();
        let down = (idx >> register).count_ones();
        if up == n_up && down == n_down {
            basis.push(idx);
        }
    }
    Ok(basis)
}

/// Sector of a single basis state.
pub fn basis_sector(index: usize, n_qubits: usize) -> Sector {
    let register = n_qubits / 2;
    let up_mask = (1usize << register) - 1;
    let n_up = (index & up_mask).count_ones() as i64;
    let n_down = (index >> register).count_ones() as i64;
    Sector {
        n_total: (n_up + n_down) as usize,
        s_z: n_up - n_down,
    }
}
