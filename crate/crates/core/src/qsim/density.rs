use rand::Rng;

use super::state::{ghz_state, StateVector, C64};
use super::QsimError;

/// Largest register a [`DensityMatrix`] may hold (1024 × 1024 entries).
pub const MAX_DENSITY_QUBITS: usize = 10;

const HERMITIAN_TOL: f64 = 1e-10;
const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Row-major complex `2^n × 2^n` matrix with unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    entries: Vec<C64>,
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity.
    pub fn from_entries(n_qubits: usize, entries: Vec<C64>) -> Result<Self, QsimError> {
        check_density_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        if entries.len() != dim * dim {
            return Err(QsimError::Size(format!("{} entries for a {dim}×{dim} matrix", entries.len())));
        }
        let rho = DensityMatrix { n_qubits, entries };
        for i in 0..dim {
            for j in 0..dim {
                if (rho.get(i, j) - rho.get(j, i).conj()).norm() > HERMITIAN_TOL {
                    return Err(QsimError::NotDensity(format!("not Hermitian at ({i}, {j})")));
                }
            }
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > HERMITIAN_TOL {
            return Err(QsimError::NotDensity(format!("trace {tr}")));
        }
        if let Some(&min) = rho.eigenvalues().iter().min_by(|a, b| a.total_cmp(b)) {
            if min < -HERMITIAN_TOL {
                return Err(QsimError::NotDensity(format!("negative eigenvalue {min}")));
            }
        }
        Ok(rho)
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn from_pure(psi: &StateVector) -> Result<Self, QsimError> {
        check_density_size(psi.n_qubits())?;
        let a = psi.amplitudes();
        let dim = a.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(a[i] * a[j].conj());
            }
        }
        Ok(DensityMatrix {
            n_qubits: psi.n_qubits(),
            entries,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_qubits
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim() + col]
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.get(i, i).re).sum()
    }

    /// Real diagonal: the computational-basis outcome distribution.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i).re).collect()
    }

    /// Eigenvalues of the (Hermitian) matrix, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev = hermitian_eigenvalues(self.dim(), self.entries.clone());
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    fn check_same(&self, other: &DensityMatrix) -> Result<(), QsimError> {
        if self.n_qubits != other.n_qubits {
            return Err(QsimError::DimensionMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        Ok(())
    }
}

fn check_density_size(n_qubits: usize) -> Result<(), QsimError> {
    if n_qubits > MAX_DENSITY_QUBITS {
        return Err(QsimError::Size(format!(
            "density matrices support at most {MAX_DENSITY_QUBITS} qubits, got {n_qubits}"
        )));
    }
    Ok(())
}

/// `½ Σ|λ_i|` over the eigenvalues of `a − b`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64, QsimError> {
    a.check_same(b)?;
    let diff: Vec<C64> = a.entries.iter().zip(&b.entries).map(|(x, y)| x - y).collect();
    let d = 0.5 * hermitian_eigenvalues(a.dim(), diff).iter().map(|l| l.abs()).sum::<f64>();
    Ok(d.clamp(0.0, 1.0))
}

/// `⟨ψ|ρ|ψ⟩`.
pub fn fidelity_with_pure(rho: &DensityMatrix, psi: &StateVector) -> Result<f64, QsimError> {
    if rho.n_qubits != psi.n_qubits() {
        return Err(QsimError::DimensionMismatch {
            left: rho.n_qubits,
            right: psi.n_qubits(),
        });
    }
    let a = psi.amplitudes();
    let dim = rho.dim();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..dim {
        let row: C64 = (0..dim).map(|j| rho.get(i, j) * a[j]).sum();
        acc += a[i].conj() * row;
    }
    Ok(acc.re.clamp(0.0, 1.0))
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Each rotation first removes the phase of the pivot `a_pq` with a diagonal
/// unitary, then applies the real symmetric Jacobi rotation.
pub fn hermitian_eigenvalues(dim: usize, mut a: Vec<C64>) -> Vec<f64> {
    let idx = |r: usize, c: usize| r * dim + c;
    let scale = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt().max(1.0);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..dim)
            .flat_map(|r| (0..dim).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| a[idx(r, c)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off < JACOBI_TOL * scale {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = a[idx(p, q)];
                let r = apq.norm();
                if r < 1e-300 {
                    continue;
                }
                let phase = apq / r; // e^{iφ}
                let app = a[idx(p, p)].re;
                let aqq = a[idx(q, q)].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // U = V·P with V = diag(.., e^{-iφ} at q), P the real rotation
                let u_pp = C64::new(c, 0.0);
                let u_pq = C64::new(s, 0.0);
                let u_qp = phase.conj() * (-s);
                let u_qq = phase.conj() * c;
                for k in 0..dim {
                    let (akp, akq) = (a[idx(k, p)], a[idx(k, q)]);
                    a[idx(k, p)] = akp * u_pp + akq * u_qp;
                    a[idx(k, q)] = akp * u_pq + akq * u_qq;
                }
                for k in 0..dim {
                    let (apk, aqk) = (a[idx(p, k)], a[idx(q, k)]);
                    a[idx(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
                    a[idx(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
                }
                a[idx(p, q)] = C64::new(0.0, 0.0);
                a[idx(q, p)] = C64::new(0.0, 0.0);
                a[idx(p, p)] = C64::new(a[idx(p, p)].re, 0.0);
                a[idx(q, q)] = C64::new(a[idx(q, q)].re, 0.0);
            }
        }
    }
    (0..dim).map(|i| a[idx(i, i)].re).collect()
}

/// Classical mixture of pure states on a common register.
#[derive(Clone, Debug)]
pub struct NoiseEnsemble {
    components: Vec<(f64, StateVector)>,
}

impl NoiseEnsemble {
    pub fn new(components: Vec<(f64, StateVector)>) -> Result<Self, QsimError> {
        let Some((_, first)) = components.first() else {
            return Err(QsimError::Probability("empty ensemble".into()));
        };
        let n = first.n_qubits();
        let mut total = 0.0;
        for (p, s) in &components {
            if !(0.0..=1.0).contains(p) {
                return Err(QsimError::Probability(format!("weight {p} outside [0, 1]")));
            }
            if s.n_qubits() != n {
                return Err(QsimError::DimensionMismatch {
                    left: n,
                    right: s.n_qubits(),
                });
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(QsimError::Probability(format!("weights sum to {total}")));
        }
        Ok(NoiseEnsemble { components })
    }

    pub fn pure(state: StateVector) -> Self {
        NoiseEnsemble {
            components: vec![(1.0, state)],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.components[0].1.n_qubits()
    }

    pub fn components(&self) -> &[(f64, StateVector)] {
        &self.components
    }

    /// Applies the same pure-state map to every component.
    pub fn map_states(
        &self,
        f: impl Fn(&StateVector) -> Result<StateVector, QsimError>,
    ) -> Result<Self, QsimError> {
        let components = self
            .components
            .iter()
            .map(|(p, s)| Ok((*p, f(s)?)))
            .collect::<Result<Vec<_>, QsimError>>()?;
        NoiseEnsemble::new(components)
    }
}

/// `Σ p_i |ψ_i⟩⟨ψ_i|`.
pub fn density_from_ensemble(e: &NoiseEnsemble) -> Result<DensityMatrix, QsimError> {
    check_density_size(e.n_qubits())?;
    let dim = 1usize << e.n_qubits();
    let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
    for (p, s) in &e.components {
        if *p == 0.0 {
            continue;
        }
        let a = s.amplitudes();
        for i in 0..dim {
            if a[i].norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..dim {
                entries[i * dim + j] += a[i] * a[j].conj() * *p;
            }
        }
    }
    Ok(DensityMatrix {
        n_qubits: e.n_qubits(),
        entries,
    })
}

/// `p·|GHZ⟩⟨GHZ| + (1−p)·I/2^n`, as an explicit ensemble over the
/// computational basis for the white-noise part.
pub fn werner_ghz(n: usize, p: f64) -> Result<NoiseEnsemble, QsimError> {
    werner_around(ghz_state(n)?, p)
}

/// White-noise mixture around an arbitrary pure state.
pub fn werner_around(target: StateVector, p: f64) -> Result<NoiseEnsemble, QsimError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(QsimError::Probability(format!("mixing weight {p} outside [0, 1]")));
    }
    let n = target.n_qubits();
    let dim = 1usize << n;
    let mut components = Vec::with_capacity(dim + 1);
    components.push((p, target));
    if p < 1.0 {
        let w = (1.0 - p) / dim as f64;
        for z in 0..dim {
            components.push((w, StateVector::basis_state(n, z)?));
        }
    }
    NoiseEnsemble::new(components)
}

/// Mixing weight `p` with `⟨GHZ|ρ|GHZ⟩ = p + (1−p)/2^n = fidelity`.
pub fn werner_weight_for_fidelity(n: usize, fidelity: f64) -> Result<f64, QsimError> {
    let floor = 1.0 / (1usize << n) as f64;
    if !(fidelity > floor && fidelity <= 1.0) {
        return Err(QsimError::Probability(format!(
            "fidelity {fidelity} unreachable: must lie in ({floor}, 1]"
        )));
    }
    Ok((fidelity - floor) / (1.0 - floor))
}

/// Draws component `i` with probability `p_i`.
pub fn sample_ensemble<R: Rng + ?Sized>(e: &NoiseEnsemble, rng: &mut R) -> StateVector {
    if e.components.len() == 1 {
        return e.components[0].1.clone();
    }
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (p, s) in &e.components {
        acc += p;
        if u < acc {
            return s.clone();
        }
    }
    // u landed in the rounding gap above the cumulative sum
    e.components
        .iter()
        .rev()
        .find(|(p, _)| *p > 0.0)
        .map(|(_, s)| s.clone())
        .expect("ensemble has a positive weight")
}
