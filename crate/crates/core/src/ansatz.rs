//! Hardware-adaptable symmetry-preserving ansatz: topology graphs,
//! sector-initializing excitations, and layered parameterized circuits.
//!
//! Givens edges live inside one spin register and conserve its Hamming
//! weight; ZZ edges couple the two registers and are diagonal, so every
//! circuit built here keeps the state inside its `(N, Sz)` sector.

use crate::model::Sector;
use crate::sim::{Circuit, Gate};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum AnsatzError {
    #[error("unsupported layout: n_imp={n_imp}, n_bath={n_bath}, {mode:?}")]
    UnsupportedLayout {
        n_imp: usize,
        n_bath: usize,
        mode: Connectivity,
    },
    #[error("{occupation} excitations do not fit a register of {register} qubits")]
    OccupationExceedsRegister { occupation: usize, register: usize },
    #[error("depth must be >= 1")]
    ZeroDepth,
    #[error("sector needs {needed} qubits, topology has {available}")]
    SectorTooLarge { needed: usize, available: usize },
    #[error("expected {expected} parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Connectivity {
    /// Nearest-neighbour square lattice (two rows, one per spin register).
    SquareNn,
    /// Adds next-nearest (diagonal and in-row) couplings.
    SquareNnn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteRole {
    Impurity,
    Bath,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spin {
    Up,
    Down,
}

/// One qubit of the ansatz graph. The qubit index is the position in
/// [`Topology::nodes`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyNode {
    pub site: usize,
    pub spin: Spin,
    pub role: SiteRole,
}

/// Ansatz interaction graph: Givens edges within spin registers, ZZ edges
/// between them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub mode: Connectivity,
    pub n_imp: usize,
    pub n_bath: usize,
    pub nodes: Vec<TopologyNode>,
    pub givens_edges: Vec<(usize, usize)>,
    pub zz_edges: Vec<(usize, usize)>,
}

impl Topology {
    pub fn n_qubits(&self) -> usize {
        self.nodes.len()
    }

    pub fn register_size(&self) -> usize {
        self.n_imp + self.n_bath
    }

    pub fn n_edges(&self) -> usize {
        self.givens_edges.len() + self.zz_edges.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Check the structural invariants: Givens edges never cross registers,
    /// ZZ edges always do, and no edge repeats.
    pub fn validate(&self) -> Result<(), String> {
        let m = self.register_size();
        let spin_of = |q: usize| q / m;
        for &(a, b) in &self.givens_edges {
            if spin_of(a) != spin_of(b) {
                return Err(format!("Givens edge ({a},{b}) crosses spin registers"));
            }
        }
        for &(a, b) in &self.zz_edges {
            if spin_of(a) == spin_of(b) {
                return Err(format!("ZZ edge ({a},{b}) stays within one register"));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for &(a, b) in self.givens_edges.iter().chain(self.zz_edges.iter()) {
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(format!("duplicate edge ({a},{b})"));
            }
        }
        Ok(())
    }
}

fn sorted_edge(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Build the interaction graph for the requested connectivity.
///
/// Both registers get an impurity-to-bath Givens star per impurity; every
/// site gets a vertical ZZ rung. `SquareNnn` additionally couples impurity
/// pairs (Givens and cross-register ZZ) and consecutive bath pairs (Givens).
/// Supported: `n_imp == 1` on either mode, `n_imp == 2` on `SquareNnn`.
pub fn build_topology(
    n_imp: usize,
    n_bath: usize,
    mode: Connectivity,
) -> Result<Topology, AnsatzError> {
    let supported = n_imp == 1 || (n_imp == 2 && mode == Connectivity::SquareNnn);
    if !supported {
        return Err(AnsatzError::UnsupportedLayout {
            n_imp,
            n_bath,
            mode,
        });
    }
    let m = n_imp + n_bath;
    let mut nodes = Vec::with_capacity(2 * m);
    for spin in [Spin::Up, Spin::Down] {
        for site in 0..m {
            nodes.push(TopologyNode {
                site,
                spin,
                role: if site < n_imp {
                    SiteRole::Impurity
                } else {
                    SiteRole::Bath
                },
            });
        }
    }
    let mut givens = Vec::new();
    let mut zz = Vec::new();
    for offset in [0, m] {
        // impurity-bath star
        for i in 0..n_imp {
            for b in n_imp..m {
                givens.push(sorted_edge(offset + i, offset + b));
            }
        }
        if mode == Connectivity::SquareNnn {
            for i in 0..n_imp {
                for j in (i + 1)..n_imp {
                    givens.push(sorted_edge(offset + i, offset + j));
                }
            }
            for b in n_imp..m.saturating_sub(1) {
                givens.push(sorted_edge(offset + b, offset + b + 1));
            }
        }
    }
    // vertical ZZ rungs on every site
    for site in 0..m {
        zz.push(sorted_edge(site, m + site));
    }
    if mode == Connectivity::SquareNnn {
        // diagonal rungs between distinct impurity orbitals
        for i in 0..n_imp {
            for j in 0..n_imp {
                if i != j {
                    zz.push(sorted_edge(i, m + j));
                }
            }
        }
    }
    givens.sort();
    givens.dedup();
    zz.sort();
    zz.dedup();
    let topology = Topology {
        mode,
        n_imp,
        n_bath,
        nodes,
        givens_edges: givens,
        zz_edges: zz,
    };
    debug_assert!(topology.validate().is_ok());
    Ok(topology)
}

/// Deterministic as-even-as-possible placement: `k` excitations in a
/// register of size `r` go to positions `floor((i + 1/2) r / k)`.
pub fn spread_positions(k: usize, r: usize) -> Vec<usize> {
    (0..k)
        .map(|i| ((i as f64 + 0.5) * r as f64 / k as f64).floor() as usize)
        .collect()
}

/// X-gate positions (register-local) initializing a sector: one list per
/// spin register.
pub fn initial_excitations(
    sector: &Sector,
    register_size: usize,
) -> Result<(Vec<usize>, Vec<usize>), AnsatzError> {
    for occ in [sector.n_up(), sector.n_down()] {
        if occ > register_size {
            return Err(AnsatzError::OccupationExceedsRegister {
                occupation: occ,
                register: register_size,
            });
        }
    }
    Ok((
        spread_positions(sector.n_up(), register_size),
        spread_positions(sector.n_down(), register_size),
    ))
}

/// A depth-`d` symmetry-preserving ansatz over a topology, bound to one
/// sector. Parameter layout per layer: Givens edges (sorted), then ZZ edges
/// (sorted), then one Rz per qubit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaCircuit {
    pub topology: Topology,
    pub depth: usize,
    pub sector: Sector,
    pub excitations_up: Vec<usize>,
    pub excitations_down: Vec<usize>,
}

impl SpaCircuit {
    pub fn parameter_count(&self) -> usize {
        self.depth * (self.topology.n_edges() + self.topology.n_qubits())
    }

    /// Bind a parameter vector into an executable circuit on `|0...0>`.
    pub fn bind(&self, theta: &[f64]) -> Result<Circuit, AnsatzError> {
        let expected = self.parameter_count();
        if theta.len() != expected {
            return Err(AnsatzError::ParameterCount {
                expected,
                got: theta.len(),
            });
        }
        let nq = self.topology.n_qubits();
        let m = self.topology.register_size();
        let mut circuit = Circuit::new(nq);
        for &pos in &self.excitations_up {
            circuit.push(Gate::X { q: pos });
        }
        for &pos in &self.excitations_down {
            circuit.push(Gate::X { q: m + pos });
        }
        let mut it = theta.iter().copied();
        for _ in 0..self.depth {
            for &(a, b) in &self.topology.givens_edges {
                circuit.push(Gate::Givens {
                    a,
                    b,
                    theta: it.next().expect("length checked"),
                });
            }
            for &(a, b) in &self.topology.zz_edges {
                circuit.push(Gate::Zz {
                    a,
                    b,
                    theta: it.next().expect("length checked"),
                });
            }
            for q in 0..nq {
                circuit.push(Gate::Rz {
                    q,
                    phi: it.next().expect("length checked"),
                });
            }
        }
        Ok(circuit)
    }
}

/// Assemble the SPA for a sector on a prebuilt topology.
pub fn build_spa(
    topology: &Topology,
    depth: usize,
    sector: &Sector,
) -> Result<SpaCircuit, AnsatzError> {
    if depth == 0 {
        return Err(AnsatzError::ZeroDepth);
    }
    if sector.n_total > topology.n_qubits() {
        return Err(AnsatzError::SectorTooLarge {
            needed: sector.n_total,
            available: topology.n_qubits(),
        });
    }
    let (up, down) = initial_excitations(sector, topology.register_size())?;
    Ok(SpaCircuit {
        topology: topology.clone(),
        depth,
        sector: *sector,
        excitations_up: up,
        excitations_down: down,
    })
}
