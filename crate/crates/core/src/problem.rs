//! Problem definition files.
//!
//! ```json
//! {
//!   "nu": 1,
//!   "A": {"builtin": "identity"},
//!   "B": {"taylor": [[[0.0]], [[[0.0, 0.5]]]]},
//!   "C": {"builtin": {"scaled_identity": 1.0}},
//!   "potential": {"modes": [{"xi": [1.0], "amplitude_taylor": [[[0.25]]]}]},
//!   "validity_radius": 1.0
//! }
//! ```
//!
//! Complex entries are a number or `[re, im]`. Instead of `A`, `B`, `C` a
//! whole builtin model may be named with `"builtin": "free"`,
//! `{"harmonic": λ}` or `{"magnetic": β}`. Omitted coefficients default to
//! `A = 𝟙`, `B = 0`, `C = 0`; an omitted potential is zero.

use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::model::{CoefficientModel, FourierPotential, MatPoly, Mode};

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(self) -> C64 {
        match self {
            Entry::Real(re) => C64::new(re, 0.0),
            Entry::Complex([re, im]) => C64::new(re, im),
        }
    }
}

type RawMatrix = Vec<Vec<Entry>>;

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum MatrixBuiltin {
    Identity,
    Zero,
    ScaledIdentity(f64),
    /// `B = −(i/2)β` for a real antisymmetric `β`.
    MagneticB(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoefficientSpec {
    builtin: Option<MatrixBuiltin>,
    taylor: Option<Vec<RawMatrix>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ModelBuiltin {
    Free,
    Harmonic(f64),
    Magnetic(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeSpec {
    xi: Vec<f64>,
    amplitude_taylor: Vec<RawMatrix>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialSpec {
    d: Option<usize>,
    modes: Vec<ModeSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemSpec {
    nu: usize,
    builtin: Option<ModelBuiltin>,
    #[serde(rename = "A")]
    a: Option<CoefficientSpec>,
    #[serde(rename = "B")]
    b: Option<CoefficientSpec>,
    #[serde(rename = "C")]
    c: Option<CoefficientSpec>,
    potential: Option<PotentialSpec>,
    validity_radius: Option<f64>,
}

/// A coefficient model together with its potential.
#[derive(Clone, Debug)]
pub struct Problem {
    pub model: CoefficientModel,
    pub potential: FourierPotential,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Problem(msg.into())
}

fn matrix(raw: &RawMatrix, what: &str) -> Result<CMat> {
    let n = raw.len();
    if n == 0 || raw.iter().any(|row| row.len() != n) {
        return Err(bad(format!("{what}: expected a non-empty square matrix")));
    }
    Ok(CMat::from_fn(n, n, |i, j| raw[i][j].value()))
}

fn real_matrix(raw: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let n = raw.len();
    if n == 0 || raw.iter().any(|row| row.len() != n) {
        return Err(bad(format!("{what}: expected a non-empty square matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| raw[i][j]))
}

fn taylor(raw: &[RawMatrix], what: &str) -> Result<MatPoly> {
    let coeffs = raw
        .iter()
        .enumerate()
        .map(|(k, m)| matrix(m, &format!("{what} coefficient {k}")))
        .collect::<Result<Vec<_>>>()?;
    MatPoly::new(coeffs).map_err(|e| bad(format!("{what}: {e}")))
}

fn coefficient(spec: Option<&CoefficientSpec>, nu: usize, default: MatPoly, what: &str) -> Result<MatPoly> {
    let Some(spec) = spec else {
        return Ok(default);
    };
    let poly = match (&spec.builtin, &spec.taylor) {
        (Some(_), Some(_)) => return Err(bad(format!("{what}: give either builtin or taylor, not both"))),
        (None, None) => return Err(bad(format!("{what}: needs builtin or taylor"))),
        (None, Some(raw)) => taylor(raw, what)?,
        (Some(b), None) => match b {
            MatrixBuiltin::Identity => MatPoly::identity(nu),
            MatrixBuiltin::Zero => MatPoly::zero(nu),
            MatrixBuiltin::ScaledIdentity(l) => MatPoly::constant(linalg::identity(nu) * C64::new(*l, 0.0)),
            MatrixBuiltin::MagneticB(beta) => {
                let beta = real_matrix(beta, what)?;
                MatPoly::constant(linalg::from_real(&beta) * C64::new(0.0, -0.5))
            }
        },
    };
    if poly.dim() != nu {
        return Err(bad(format!("{what}: dimension {} does not match nu = {nu}", poly.dim())));
    }
    Ok(poly)
}

impl Problem {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: ProblemSpec = serde_json::from_str(text).map_err(|e| bad(format!("invalid problem file: {e}")))?;
        Self::from_spec(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    fn from_spec(spec: ProblemSpec) -> Result<Self> {
        let nu = spec.nu;
        if nu == 0 {
            return Err(bad("nu must be at least 1"));
        }
        let radius = spec.validity_radius.unwrap_or(1.0);
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(bad(format!("validity_radius must be positive, got {radius}")));
        }
        let model = match &spec.builtin {
            Some(b) => {
                if spec.a.is_some() || spec.b.is_some() || spec.c.is_some() {
                    return Err(bad("a builtin model excludes A, B, C"));
                }
                match b {
                    ModelBuiltin::Free => CoefficientModel::free(nu),
                    ModelBuiltin::Harmonic(l) => CoefficientModel::harmonic(nu, *l),
                    ModelBuiltin::Magnetic(beta) => {
                        let beta = real_matrix(beta, "magnetic β")?;
                        if beta.nrows() != nu {
                            return Err(bad(format!("magnetic β has dimension {}, nu = {nu}", beta.nrows())));
                        }
                        CoefficientModel::magnetic(beta)?
                    }
                }
                .with_radius(radius)
            }
            None => {
                let a = coefficient(spec.a.as_ref(), nu, MatPoly::identity(nu), "A")?;
                let b = coefficient(spec.b.as_ref(), nu, MatPoly::zero(nu), "B")?;
                let c = coefficient(spec.c.as_ref(), nu, MatPoly::zero(nu), "C")?;
                CoefficientModel::custom(a, b, c, radius)?
            }
        };
        let potential = match &spec.potential {
            None => FourierPotential::zero(nu, 1),
            Some(p) => {
                let modes = p
                    .modes
                    .iter()
                    .enumerate()
                    .map(|(k, m)| {
                        Ok(Mode {
                            xi: m.xi.clone(),
                            amplitude: taylor(&m.amplitude_taylor, &format!("mode {k} amplitude"))?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let d = p.d.or_else(|| modes.first().map(|m| m.amplitude.dim())).unwrap_or(1);
                FourierPotential::new(nu, d, modes)?
            }
        };
        Ok(Problem { model, potential })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelKind;

    #[test]
    fn builtin_models() {
        let p = Problem::from_json_str(r#"{"nu": 2, "builtin": "free"}"#).unwrap();
        assert_eq!(p.model.nu(), 2);
        assert!(matches!(p.model.kind(), ModelKind::Free));
        assert!(p.potential.is_zero());

        let p = Problem::from_json_str(r#"{"nu": 1, "builtin": {"harmonic": 4.0}, "validity_radius": 2.0}"#).unwrap();
        assert!(matches!(p.model.kind(), ModelKind::Harmonic { .. }));
        assert_eq!(p.model.validity_radius(), 2.0);

        let p = Problem::from_json_str(r#"{"nu": 2, "builtin": {"magnetic": [[0, 1], [-1, 0]]}}"#).unwrap();
        assert!(matches!(p.model.kind(), ModelKind::Magnetic { .. }));
    }

    #[test]
    fn coefficient_matrices_and_potential() {
        let text = r#"{
            "nu": 1,
            "A": {"builtin": "identity"},
            "B": {"taylor": [[[[0.0, 0.0]]], [[0.1]]]},
            "C": {"builtin": {"scaled_identity": 0.5}},
            "potential": {"modes": [
                {"xi": [1.0], "amplitude_taylor": [[[0.25]]]},
                {"xi": [-1.0], "amplitude_taylor": [[[0.25]], [[[0.0, 1.0]]]]}
            ]},
            "validity_radius": 0.8
        }"#;
        let p = Problem::from_json_str(text).unwrap();
        let co = p.model.eval_coefficients(C64::new(0.5, 0.0)).unwrap();
        assert!((co.b[(0, 0)] - C64::new(0.05, 0.0)).norm() < 1e-15);
        assert!((co.c[(0, 0)] - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert_eq!(p.potential.modes().len(), 2);
        assert_eq!(p.potential.d(), 1);
        let a = p.potential.modes()[1].amplitude.eval(C64::new(2.0, 0.0));
        assert!((a[(0, 0)] - C64::new(0.25, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn magnetic_b_builtin_matches_magnetic_model() {
        let text = r#"{"nu": 2, "B": {"builtin": {"magnetic_b": [[0, 1], [-1, 0]]}}}"#;
        let p = Problem::from_json_str(text).unwrap();
        let reference = CoefficientModel::magnetic(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])).unwrap();
        let t = C64::new(0.3, 0.1);
        let got = p.model.eval_coefficients(t).unwrap();
        let want = reference.eval_coefficients(t).unwrap();
        assert!(linalg::max_abs(&(got.b - want.b)) < 1e-15);
    }

    #[test]
    fn errors_are_reported() {
        for text in [
            "not json",
            r#"{"nu": 0}"#,
            r#"{"nu": 1, "validity_radius": -1}"#,
            r#"{"nu": 1, "A": {"taylor": [[[1, 2]]]}}"#,
            r#"{"nu": 2, "A": {"builtin": "identity", "taylor": [[[1]]]}}"#,
            r#"{"nu": 1, "builtin": "free", "C": {"builtin": "zero"}}"#,
            r#"{"nu": 1, "potential": {"modes": [{"xi": [1, 2], "amplitude_taylor": [[[1]]]}]}}"#,
            r#"{"nu": 1, "A": {"builtin": {"scaled_identity": -1.0}}}"#,
            r#"{"nu": 1, "unknown": 3}"#,
        ] {
            assert!(Problem::from_json_str(text).is_err(), "{text}");
        }
    }
}
