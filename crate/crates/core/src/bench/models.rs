use serde::{Deserialize, Serialize};

use super::config::{matrix_from_spec, MatrixSpec};
use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::model::LindbladModel;
use crate::scalar::cx;

type M = CMatrix<f64>;

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn default_n_ph() -> usize {
    10
}

/// A named benchmark model or an explicit `(H, {L_k})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// `H = (b/2) σ_Z`, `L = √(a/2) σ_Z`; coherences decay at rate `a + ib`.
    Dephasing {
        a: f64,
        #[serde(default)]
        b: f64,
    },
    /// Spontaneous emission and absorption of a two-level system.
    TwoLevelDecay { lambda0: f64, nu: f64 },
    /// A two-level atom coupled to one truncated photon mode.
    AtomPhoton {
        #[serde(default = "one")]
        omega: f64,
        #[serde(rename = "Omega", default = "one")]
        omega_atom: f64,
        g: f64,
        alpha: f64,
        beta: f64,
        gamma: f64,
        #[serde(default = "half")]
        nu: f64,
        #[serde(default = "half")]
        eta: f64,
        #[serde(default = "default_n_ph")]
        n_ph: usize,
    },
    Custom {
        #[serde(rename = "H")]
        hamiltonian: MatrixSpec,
        #[serde(rename = "L", default)]
        lindblads: Vec<MatrixSpec>,
    },
}

impl ModelSpec {
    /// The atom-photon model with `ω = Ω = 1`, `ν = η = ½`, `α = β = γ = rate`, 10 photon levels.
    pub fn atom_photon(rate: f64, g: f64) -> Self {
        ModelSpec::AtomPhoton {
            omega: 1.0,
            omega_atom: 1.0,
            g,
            alpha: rate,
            beta: rate,
            gamma: rate,
            nu: 0.5,
            eta: 0.5,
            n_ph: 10,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelSpec::Dephasing { .. } | ModelSpec::TwoLevelDecay { .. } => 2,
            ModelSpec::AtomPhoton { n_ph, .. } => 2 * n_ph,
            ModelSpec::Custom { hamiltonian, .. } => hamiltonian.len(),
        }
    }

    /// Dimensions of the tensor factors when the model is a composite system.
    pub fn factors(&self) -> Option<(usize, usize)> {
        match self {
            ModelSpec::AtomPhoton { n_ph, .. } => Some((2, *n_ph)),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Dephasing { .. } => "dephasing",
            ModelSpec::TwoLevelDecay { .. } => "two_level_decay",
            ModelSpec::AtomPhoton { .. } => "atom_photon",
            ModelSpec::Custom { .. } => "custom",
        }
    }
}

fn require(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::BadParameter(what.into()))
    }
}

/// Annihilation operator on `n` levels: `a|k⟩ = √k |k-1⟩`.
pub(crate) fn annihilation(n: usize) -> M {
    M::from_fn(n, |i, j| if j == i + 1 { cx((j as f64).sqrt(), 0.0) } else { cx(0.0, 0.0) })
}

pub fn build_model(spec: &ModelSpec) -> Result<LindbladModel<f64>> {
    match *spec {
        ModelSpec::Dephasing { a, b } => {
            require(a > 0.0 && a.is_finite(), "dephasing requires a > 0")?;
            require(b.is_finite(), "dephasing requires finite b")?;
            LindbladModel::new(M::sigma_z().scale_re(b / 2.0), vec![M::sigma_z().scale_re((a / 2.0).sqrt())])
        }
        ModelSpec::TwoLevelDecay { lambda0, nu } => {
            require(lambda0 >= 0.0 && lambda0.is_finite(), "two_level_decay requires lambda0 >= 0")?;
            require(nu >= 0.0 && nu.is_finite(), "two_level_decay requires nu >= 0")?;
            LindbladModel::new(
                M::zeros(2),
                vec![
                    M::sigma_minus().scale_re((lambda0 * (nu + 1.0)).sqrt()),
                    M::sigma_plus().scale_re((lambda0 * nu).sqrt()),
                ],
            )
        }
        ModelSpec::AtomPhoton { omega, omega_atom, g, alpha, beta, gamma, nu, eta, n_ph } => {
            for (v, name) in [(g, "g"), (alpha, "alpha"), (beta, "beta"), (gamma, "gamma"), (nu, "nu")] {
                require(v >= 0.0 && v.is_finite(), &format!("atom_photon requires {name} >= 0"))?;
            }
            require(omega.is_finite() && omega_atom.is_finite(), "atom_photon requires finite frequencies")?;
            require((0.0..=1.0).contains(&eta), "atom_photon requires eta in [0, 1]")?;
            require(n_ph >= 1, "atom_photon requires n_ph >= 1")?;
            log::warn!("photon mode truncated to {n_ph} levels; truncation error is outside the scheme error bounds");
            let id_a = M::identity(2);
            let id_p = M::identity(n_ph);
            let a = annihilation(n_ph);
            let ad = a.adjoint();
            let (sm, sp) = (M::sigma_minus(), M::sigma_plus());
            let number = ad.matmul(&a);
            let mut h = id_a.kron(&number.scale_re(omega));
            h += &M::sigma_z().scale_re(omega_atom).kron(&id_p);
            h -= &(&sm.kron(&ad) + &sp.kron(&a)).scale_re(g);
            let ls = vec![
                id_a.kron(&a.scale_re((alpha * (nu + 1.0)).sqrt())),
                id_a.kron(&ad.scale_re((alpha * nu).sqrt())),
                sm.scale_re((beta * (1.0 - eta)).sqrt()).kron(&id_p),
                sp.scale_re((beta * eta).sqrt()).kron(&id_p),
                M::sigma_z().scale_re(gamma.sqrt()).kron(&id_p),
            ];
            LindbladModel::new(h, ls)
        }
        ModelSpec::Custom { ref hamiltonian, ref lindblads } => {
            let h = matrix_from_spec(hamiltonian)?;
            let ls = lindblads.iter().map(matrix_from_spec).collect::<Result<Vec<_>>>()?;
            LindbladModel::new(h, ls)
        }
    }
}

/// `(kind, description, example JSON)` for every built-in model.
pub fn model_catalog() -> Vec<(&'static str, &'static str, String)> {
    let examples = [
        (
            "dephasing",
            "two-level pure dephasing; H = (b/2) sZ, L = sqrt(a/2) sZ, coherence rate a + ib",
            ModelSpec::Dephasing { a: 1.0, b: 0.0 },
        ),
        (
            "two_level_decay",
            "two-level emission/absorption; H = 0, L1 = sqrt(lambda0 (nu+1)) s-, L2 = sqrt(lambda0 nu) s+",
            ModelSpec::TwoLevelDecay { lambda0: 1.0, nu: 0.5 },
        ),
        (
            "atom_photon",
            "two-level atom coupled to a truncated photon mode (d = 2 n_ph) with five dissipation channels",
            ModelSpec::atom_photon(1.0, 1.0),
        ),
        (
            "custom",
            "explicit Hamiltonian and Lindblad operators, complex entries as [re, im], rows outermost",
            ModelSpec::Custom {
                hamiltonian: vec![vec![[1.0, 0.0], [0.0, 0.0]], vec![[0.0, 0.0], [-1.0, 0.0]]],
                lindblads: vec![vec![vec![[0.0, 0.0], [0.0, 0.0]], vec![[0.5, 0.0], [0.0, 0.0]]]],
            },
        ),
    ];
    examples
        .into_iter()
        .map(|(k, d, spec)| (k, d, serde_json::to_string(&spec).expect("model spec serializes")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::vectorize;

    #[test]
    fn two_level_decay_norms() {
        let model = build_model(&ModelSpec::TwoLevelDecay { lambda0: 2.0, nu: 0.5 }).unwrap();
        let gen = model.effective_generator();
        assert!((gen.ll_norm - 3.0).abs() < 1e-14);
        let expected = M::real_diag(&[3.0, 1.0]);
        assert!((model.dissipation() - &expected).max_abs() < 1e-14);
    }

    #[test]
    fn zero_rate_decay_is_trivial() {
        let model = build_model(&ModelSpec::TwoLevelDecay { lambda0: 0.0, nu: 0.5 }).unwrap();
        assert_eq!(vectorize(&model).matrix.max_abs(), 0.0);
    }

    #[test]
    fn atom_photon_dimension() {
        let model = build_model(&ModelSpec::atom_photon(1.0, 1.0)).unwrap();
        assert_eq!(model.dim(), 20);
        assert_eq!(model.lindblads().len(), 5);
    }

    #[test]
    fn parameter_validation() {
        assert!(build_model(&ModelSpec::Dephasing { a: 0.0, b: 1.0 }).is_err());
        assert!(build_model(&ModelSpec::TwoLevelDecay { lambda0: -1.0, nu: 0.5 }).is_err());
        let mut spec = ModelSpec::atom_photon(1.0, 1.0);
        if let ModelSpec::AtomPhoton { eta, .. } = &mut spec {
            *eta = 1.5;
        }
        assert!(build_model(&spec).is_err());
    }

    #[test]
    fn json_round_trip() {
        let json = r#"{"kind": "atom_photon", "g": 1, "alpha": 0.2, "beta": 0.2, "gamma": 0.2, "Omega": 2}"#;
        let spec: ModelSpec = serde_json::from_str(json).unwrap();
        match &spec {
            ModelSpec::AtomPhoton { omega, omega_atom, n_ph, .. } => {
                assert_eq!((*omega, *omega_atom, *n_ph), (1.0, 2.0, 10));
            }
            _ => panic!("wrong kind"),
        }
        for (_, _, example) in model_catalog() {
            let parsed: ModelSpec = serde_json::from_str(&example).unwrap();
            build_model(&parsed).unwrap();
        }
    }
}
