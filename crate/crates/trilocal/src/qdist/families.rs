//! The three quantum target-distribution families and their noise models.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::born::{born_distribution, TriangleQuantumSetup};
use super::distribution::Distribution;
use super::matrix::{kron, ComplexMatrix};
use super::states::{
    bloch_ket, bloch_ket_antipodal, ket0, ket1, noisy_povm, observable_eigenvector, phi_plus,
    singlet, werner_state, PartyMeasurement, TwoQubitState,
};
use super::QdistError;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Noise models applied to a family's noiseless point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElegantNoise {
    /// Werner-state visibility on all three sources.
    Visibility,
    /// White noise mixed into every measurement element.
    Detector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenouNoise {
    None,
    Visibility,
    Detector,
}

/// The Fritz construction: a two-party Bell test wrapped into the triangle.
///
/// Alice and Bob share a singlet on source gamma (degraded to a Werner state
/// with visibility `v`); the other two sources distribute classically
/// correlated uniform bits. Alice reads her beta bit `s` and measures Z
/// (`s = 0`) or X (`s = 1`) on her gamma qubit; Bob reads his alpha bit `t`
/// and measures `(X+Z)/sqrt(2)` or `(X-Z)/sqrt(2)`; Charlie reads both bits.
/// Outcomes encode `(basis bit, result bit)` as `2*basis + result`.
pub fn fritz_family(v: f64) -> Result<Distribution, QdistError> {
    born_distribution(&fritz_setup(v)?)
}

/// The sources and measurements behind [`fritz_family`].
pub fn fritz_setup(v: f64) -> Result<TriangleQuantumSetup, QdistError> {
    if !(0.0..=1.0).contains(&v) {
        return Err(QdistError::ParamOutOfRange { name: "v", value: v, min: 0.0, max: 1.0 });
    }
    let z_axis = [0.0, 0.0, 1.0];
    let x_axis = [1.0, 0.0, 0.0];
    let diag_plus = [FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2];
    let diag_minus = [FRAC_1_SQRT_2, 0.0, -FRAC_1_SQRT_2];
    let bit_kets = [ket0(), ket1()];

    let mut alice = Vec::with_capacity(4);
    let mut bob = Vec::with_capacity(4);
    let mut charlie = Vec::with_capacity(4);
    for basis in 0..2u8 {
        for result in 0..2u8 {
            let bit = bit_kets[basis as usize].outer();
            let a_dir = if basis == 0 { z_axis } else { x_axis };
            let b_dir = if basis == 0 { diag_plus } else { diag_minus };
            // Alice holds (beta, gamma); the bit lives on beta.
            alice.push(kron(&bit, &observable_eigenvector(a_dir, result).outer()));
            // Bob holds (gamma, alpha); the bit lives on alpha.
            bob.push(kron(&observable_eigenvector(b_dir, result).outer(), &bit));
            // Charlie holds (alpha, beta) and reads both bits.
            charlie.push(kron(
                &bit_kets[basis as usize].outer(),
                &bit_kets[result as usize].outer(),
            ));
        }
    }
    Ok(TriangleQuantumSetup {
        source_alpha: TwoQubitState::correlated_bits(),
        source_beta: TwoQubitState::correlated_bits(),
        source_gamma: werner_state(&singlet(), v)?,
        meas_a: PartyMeasurement::new(alice)?,
        meas_b: PartyMeasurement::new(bob)?,
        meas_c: PartyMeasurement::new(charlie)?,
    })
}

/// Bloch directions of the four tetrahedron vertices.
pub const TETRAHEDRON: [[f64; 3]; 4] = {
    const S: f64 = 0.577_350_269_189_625_8; // 1/sqrt(3)
    [[S, S, S], [S, -S, -S], [-S, S, -S], [-S, -S, S]]
};

/// The four eigenstates of the elegant joint measurement:
/// `sqrt(3/2) |m_j, -m_j> + i (sqrt(3)-1)/2 |psi->`, with `|-m_j>` phased per
/// [`bloch_ket_antipodal`] so the four states form an orthonormal basis.
pub fn elegant_basis() -> Vec<ComplexMatrix> {
    let outer_coeff = c((3.0f64 / 2.0).sqrt(), 0.0);
    let singlet_coeff = c(0.0, (3.0f64.sqrt() - 1.0) / 2.0);
    let psi_minus = singlet();
    TETRAHEDRON
        .iter()
        .map(|&m| {
            let product = kron(&bloch_ket(m), &bloch_ket_antipodal(m));
            product.scale(outer_coeff).add(&psi_minus.scale(singlet_coeff))
        })
        .collect()
}

/// The elegant distribution: singlets on all three sources, every party
/// measuring the elegant joint measurement, under either source visibility
/// or detector noise with parameter `v`.
pub fn elegant_family(noise: ElegantNoise, v: f64) -> Result<Distribution, QdistError> {
    born_distribution(&elegant_setup(noise, v)?)
}

/// The sources and measurements behind [`elegant_family`].
pub fn elegant_setup(noise: ElegantNoise, v: f64) -> Result<TriangleQuantumSetup, QdistError> {
    if !(0.0..=1.0).contains(&v) {
        return Err(QdistError::ParamOutOfRange { name: "v", value: v, min: 0.0, max: 1.0 });
    }
    let measurement = PartyMeasurement::projective(&elegant_basis())?;
    let (source, meas) = match noise {
        ElegantNoise::Visibility => (werner_state(&singlet(), v)?, measurement),
        ElegantNoise::Detector => {
            (TwoQubitState::pure(&singlet())?, noisy_povm(&measurement, v)?)
        }
    };
    Ok(TriangleQuantumSetup {
        source_alpha: source.clone(),
        source_beta: source.clone(),
        source_gamma: source,
        meas_a: meas.clone(),
        meas_b: meas.clone(),
        meas_c: meas,
    })
}

/// Measurement basis for the Renou et al. family at a given `u^2`:
/// `|01>, |10>, u|00> + sqrt(1-u^2)|11>, sqrt(1-u^2)|00> - u|11>`.
pub fn renou_basis(u_squared: f64) -> Vec<ComplexMatrix> {
    let u = u_squared.sqrt();
    let w = (1.0 - u_squared).max(0.0).sqrt();
    vec![
        kron(&ket0(), &ket1()),
        kron(&ket1(), &ket0()),
        ComplexMatrix::ket(&[c(u, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(w, 0.0)]),
        ComplexMatrix::ket(&[c(w, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-u, 0.0)]),
    ]
}

/// The Renou et al. distribution: `|phi+>` on all three sources, every party
/// measuring the `u`-parameterized basis, with optional source visibility or
/// detector noise.
pub fn renou_family(
    u_squared: f64,
    noise: RenouNoise,
    v: f64,
) -> Result<Distribution, QdistError> {
    born_distribution(&renou_setup(u_squared, noise, v)?)
}

/// The sources and measurements behind [`renou_family`].
pub fn renou_setup(
    u_squared: f64,
    noise: RenouNoise,
    v: f64,
) -> Result<TriangleQuantumSetup, QdistError> {
    if !(0.5..=1.0).contains(&u_squared) {
        return Err(QdistError::ParamOutOfRange {
            name: "u_squared",
            value: u_squared,
            min: 0.5,
            max: 1.0,
        });
    }
    if noise != RenouNoise::None && !(0.0..=1.0).contains(&v) {
        return Err(QdistError::ParamOutOfRange { name: "v", value: v, min: 0.0, max: 1.0 });
    }
    let measurement = PartyMeasurement::projective(&renou_basis(u_squared))?;
    let (source, meas) = match noise {
        RenouNoise::None => (TwoQubitState::pure(&phi_plus())?, measurement),
        RenouNoise::Visibility => (werner_state(&phi_plus(), v)?, measurement),
        RenouNoise::Detector => {
            (TwoQubitState::pure(&phi_plus())?, noisy_povm(&measurement, v)?)
        }
    };
    Ok(TriangleQuantumSetup {
        source_alpha: source.clone(),
        source_beta: source.clone(),
        source_gamma: source,
        meas_a: meas.clone(),
        meas_b: meas.clone(),
        meas_c: meas,
    })
}

/// Names one of the parameterized target families, each a curve
/// `param -> p_t(param)` over its own noise (or scan) coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    FritzVisibility,
    ElegantVisibility,
    ElegantDetector,
    RenouScan,
    RenouVisibility,
    RenouDetector,
}

impl Family {
    pub fn cli_name(&self) -> &'static str {
        match self {
            Family::FritzVisibility => "fritz-visibility",
            Family::ElegantVisibility => "elegant-visibility",
            Family::ElegantDetector => "elegant-detector",
            Family::RenouScan => "renou-scan",
            Family::RenouVisibility => "renou-visibility",
            Family::RenouDetector => "renou-detector",
        }
    }

    pub fn from_cli_name(name: &str) -> Option<Self> {
        Some(match name {
            "fritz-visibility" => Family::FritzVisibility,
            "elegant-visibility" => Family::ElegantVisibility,
            "elegant-detector" => Family::ElegantDetector,
            "renou-scan" => Family::RenouScan,
            "renou-visibility" => Family::RenouVisibility,
            "renou-detector" => Family::RenouDetector,
            _ => return None,
        })
    }
}

/// A family together with the fixed parameters it needs. For the Renou noise
/// families `renou_u_squared` selects which scan point is being degraded; for
/// the scan itself the curve coordinate is `u^2` and no noise is applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renou_u_squared: Option<f64>,
}

impl FamilySpec {
    pub fn new(family: Family, renou_u_squared: Option<f64>) -> Result<Self, QdistError> {
        match family {
            Family::RenouVisibility | Family::RenouDetector => {
                let u2 = renou_u_squared.ok_or(QdistError::MissingParameter {
                    name: "u_squared",
                })?;
                if !(0.5..=1.0).contains(&u2) {
                    return Err(QdistError::ParamOutOfRange {
                        name: "u_squared",
                        value: u2,
                        min: 0.5,
                        max: 1.0,
                    });
                }
            }
            _ => {}
        }
        Ok(Self { family, renou_u_squared })
    }

    /// Valid range of the curve parameter.
    pub fn param_range(&self) -> (f64, f64) {
        match self.family {
            Family::RenouScan => (0.5, 1.0),
            _ => (0.0, 1.0),
        }
    }

    /// Generates the target distribution at a point of the curve.
    pub fn target(&self, param: f64) -> Result<Distribution, QdistError> {
        match self.family {
            Family::FritzVisibility => fritz_family(param),
            Family::ElegantVisibility => elegant_family(ElegantNoise::Visibility, param),
            Family::ElegantDetector => elegant_family(ElegantNoise::Detector, param),
            Family::RenouScan => renou_family(param, RenouNoise::None, 0.0),
            Family::RenouVisibility => {
                renou_family(self.renou_u_squared.unwrap(), RenouNoise::Visibility, param)
            }
            Family::RenouDetector => {
                renou_family(self.renou_u_squared.unwrap(), RenouNoise::Detector, param)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elegant_basis_is_orthonormal() {
        let basis = elegant_basis();
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let g = a.inner(b);
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (g.re - expected).abs() < 1e-10 && g.im.abs() < 1e-10,
                    "gram[{i}][{j}] = {g}"
                );
            }
        }
    }

    #[test]
    fn renou_basis_is_orthonormal() {
        for &u2 in &[0.5, 0.7, 0.85, 1.0] {
            let basis = renou_basis(u2);
            for (i, a) in basis.iter().enumerate() {
                for (j, b) in basis.iter().enumerate() {
                    let g = a.inner(b);
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((g.re - expected).abs() < 1e-12 && g.im.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn detector_noise_at_zero_is_uniform() {
        let elegant = elegant_family(ElegantNoise::Detector, 0.0).unwrap();
        let renou = renou_family(0.85, RenouNoise::Detector, 0.0).unwrap();
        for d in [elegant, renou] {
            for &p in d.probs() {
                assert!((p - 1.0 / 64.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn renou_at_u2_one_reads_out_correlated_bits() {
        let d = renou_family(1.0, RenouNoise::None, 0.0).unwrap();
        // With the third and fourth basis states reduced to |00> and -|11>,
        // each party announces its two source bits: outcome 0 for bits (0,1),
        // 1 for (1,0), 2 for (0,0), 3 for (1,1).
        let encode = |left: usize, right: usize| match (left, right) {
            (0, 1) => 0,
            (1, 0) => 1,
            (0, 0) => 2,
            _ => 3,
        };
        let mut expected = vec![0.0; 64];
        for x in 0..2 {
            // alpha bit (Bob, Charlie)
            for y in 0..2 {
                // beta bit (Alice, Charlie)
                for z in 0..2 {
                    // gamma bit (Alice, Bob)
                    let a = encode(y, z);
                    let b = encode(z, x);
                    let cc = encode(x, y);
                    expected[(a * 4 + b) * 4 + cc] += 1.0 / 8.0;
                }
            }
        }
        for (i, (&got, &want)) in d.probs().iter().zip(&expected).enumerate() {
            assert!((got - want).abs() < 1e-10, "entry {i}: {got} vs {want}");
        }
    }

    #[test]
    fn identical_party_families_are_cyclic_invariant() {
        let cases = [
            elegant_family(ElegantNoise::Visibility, 1.0).unwrap(),
            elegant_family(ElegantNoise::Detector, 0.7).unwrap(),
            renou_family(0.85, RenouNoise::None, 0.0).unwrap(),
            renou_family(0.7, RenouNoise::Visibility, 0.6).unwrap(),
        ];
        for d in cases {
            for a in 0..4 {
                for b in 0..4 {
                    for c in 0..4 {
                        assert!((d.prob(a, b, c) - d.prob(b, c, a)).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn family_spec_requires_u_squared_for_renou_noise() {
        assert!(FamilySpec::new(Family::RenouVisibility, None).is_err());
        assert!(FamilySpec::new(Family::RenouVisibility, Some(0.3)).is_err());
        assert!(FamilySpec::new(Family::RenouVisibility, Some(0.85)).is_ok());
        assert!(FamilySpec::new(Family::FritzVisibility, None).is_ok());
    }

    #[test]
    fn family_params_out_of_range_rejected() {
        assert!(fritz_family(1.2).is_err());
        assert!(elegant_family(ElegantNoise::Visibility, -0.1).is_err());
        assert!(renou_family(0.4, RenouNoise::None, 0.0).is_err());
        assert!(renou_family(0.85, RenouNoise::Visibility, 1.5).is_err());
    }
}
