//! State constructors: the three noisy network inputs, the closed-form
//! swapped state, Bell/GHZ primitives and seeded biseparable samples.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qlin::{c, kron, permute_qubits, CMatrix, Complex};

/// Slack allowed above pi/4 so that decimal renderings such as
/// `0.7853981634` are accepted. Mixing weights get no slack.
pub const THETA_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateParams {
    /// Mixing weight of the first and third inputs.
    pub p: f64,
    /// Mixing weight of the middle input.
    pub p1: f64,
    /// Entanglement angle in radians, `0 <= theta <= pi/4`.
    pub theta: f64,
}

impl StateParams {
    pub fn new(p: f64, p1: f64, theta: f64) -> Result<Self> {
        check_weight("p", p)?;
        check_weight("p1", p1)?;
        check_theta(theta)?;
        Ok(Self { p, p1, theta })
    }
}

pub(crate) fn check_weight(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange {
            name,
            value,
            min: 0.0,
            max: 1.0,
        })
    }
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if (0.0..=FRAC_PI_4 + THETA_SLACK).contains(&theta) {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange {
            name: "theta",
            value: theta,
            min: 0.0,
            max: FRAC_PI_4,
        })
    }
}

/// Relative sign of the `|111>` component in a GHZ-class state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

impl FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" => Ok(Sign::Plus),
            "-" | "minus" => Ok(Sign::Minus),
            _ => Err(Error::Parse(format!("unknown sign {s:?}"))),
        }
    }
}

/// The four two-qubit Bell states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BellKind {
    #[serde(rename = "phi+")]
    PhiPlus,
    #[serde(rename = "phi-")]
    PhiMinus,
    #[serde(rename = "psi+")]
    PsiPlus,
    #[serde(rename = "psi-")]
    PsiMinus,
}

impl BellKind {
    pub const ALL: [BellKind; 4] = [
        BellKind::PhiPlus,
        BellKind::PhiMinus,
        BellKind::PsiPlus,
        BellKind::PsiMinus,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BellKind::PhiPlus => "phi+",
            BellKind::PhiMinus => "phi-",
            BellKind::PsiPlus => "psi+",
            BellKind::PsiMinus => "psi-",
        }
    }

    pub fn is_psi(self) -> bool {
        matches!(self, BellKind::PsiPlus | BellKind::PsiMinus)
    }

    /// Amplitudes over `|00>, |01>, |10>, |11>`.
    pub fn ket(self) -> [Complex; 4] {
        let h = FRAC_1_SQRT_2;
        let (z, p, m) = (c(0.0, 0.0), c(h, 0.0), c(-h, 0.0));
        match self {
            BellKind::PhiPlus => [p, z, z, p],
            BellKind::PhiMinus => [p, z, z, m],
            BellKind::PsiPlus => [z, p, p, z],
            BellKind::PsiMinus => [z, p, m, z],
        }
    }
}

impl fmt::Display for BellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BellKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BellKind::ALL
            .into_iter()
            .find(|k| k.label() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown Bell label {s:?}")))
    }
}

pub fn bell_state(kind: BellKind) -> CMatrix {
    CMatrix::outer(&kind.ket()).expect("four amplitudes")
}

fn ket3(a000: f64, a111: f64) -> Vec<Complex> {
    let mut ket = vec![c(0.0, 0.0); 8];
    ket[0] = c(a000, 0.0);
    ket[7] = c(a111, 0.0);
    ket
}

/// `(|000> +/- |111>) / sqrt 2`.
pub fn ghz(sign: Sign) -> CMatrix {
    CMatrix::outer(&ket3(FRAC_1_SQRT_2, sign.factor() * FRAC_1_SQRT_2)).expect("eight amplitudes")
}

fn mixture(weight: f64, pure: &CMatrix, noise_bits: &str) -> CMatrix {
    let noise = CMatrix::basis_projector(noise_bits).expect("valid bit string");
    &pure.scale(weight) + &noise.scale(1.0 - weight)
}

/// `p |f><f| + (1-p) |001><001|` with `|f> = cos t |000> + sin t |111>`.
pub fn rho1(p: f64, theta: f64) -> Result<CMatrix> {
    check_weight("p", p)?;
    check_theta(theta)?;
    let pure = CMatrix::outer(&ket3(theta.cos(), theta.sin()))?;
    Ok(mixture(p, &pure, "001"))
}

/// `p1 |GHZ+><GHZ+| + (1-p1) |010><010|`.
pub fn rho2(p1: f64) -> Result<CMatrix> {
    check_weight("p1", p1)?;
    Ok(mixture(p1, &ghz(Sign::Plus), "010"))
}

/// `p |l><l| + (1-p) |100><100|` with `|l> = sin t |000> + cos t |111>`.
pub fn rho3(p: f64, theta: f64) -> Result<CMatrix> {
    check_weight("p", p)?;
    check_theta(theta)?;
    let pure = CMatrix::outer(&ket3(theta.sin(), theta.cos()))?;
    Ok(mixture(p, &pure, "100"))
}

/// GHZ weight of the swapped state, `2 p cos^2 t / (1 + p cos 2t)`.
pub fn p_final(p: f64, theta: f64) -> Result<f64> {
    check_weight("p", p)?;
    check_theta(theta)?;
    Ok(p_final_unchecked(p, theta))
}

pub(crate) fn p_final_unchecked(p: f64, theta: f64) -> f64 {
    (2.0 * p * theta.cos().powi(2) / (1.0 + p * (2.0 * theta).cos())).min(1.0)
}

/// Closed form of the phase-corrected swapped state:
/// `p_f |GHZ+-><GHZ+-| + (1-p_f) |100><100|`.
pub fn rho4_closed(p: f64, theta: f64, sign: Sign) -> Result<CMatrix> {
    let pf = p_final(p, theta)?;
    Ok(mixture(pf, &ghz(sign), "100"))
}

/// The state families the witnesses are tested against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Rho1,
    Rho2,
    Rho3,
    Rho4,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Rho1, Family::Rho2, Family::Rho3, Family::Rho4];

    pub fn name(self) -> &'static str {
        match self {
            Family::Rho1 => "rho1",
            Family::Rho2 => "rho2",
            Family::Rho3 => "rho3",
            Family::Rho4 => "rho4",
        }
    }

    pub fn state(self, params: &StateParams, sign: Sign) -> Result<CMatrix> {
        match self {
            Family::Rho1 => rho1(params.p, params.theta),
            Family::Rho2 => rho2(params.p1),
            Family::Rho3 => rho3(params.p, params.theta),
            Family::Rho4 => rho4_closed(params.p, params.theta, sign),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown state family {s:?}")))
    }
}

/// Which party is split off in a biseparable term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Partition {
    /// `A | BC`
    A,
    /// `B | AC`
    B,
    /// `C | AB`
    C,
}

impl Partition {
    pub const ALL: [Partition; 3] = [Partition::A, Partition::B, Partition::C];

    /// Qubit order mapping `single (x) pair` back to `(A, B, C)`.
    fn order(self) -> [usize; 3] {
        match self {
            Partition::A => [0, 1, 2],
            Partition::B => [1, 0, 2],
            Partition::C => [1, 2, 0],
        }
    }
}

#[derive(Debug, Clone)]
pub struct BiseparableTerm {
    pub weight: f64,
    pub partition: Partition,
    pub single: CMatrix,
    pub pair: CMatrix,
}

impl BiseparableTerm {
    pub fn state(&self) -> CMatrix {
        permute_qubits(&kron(&self.single, &self.pair), &self.partition.order()).expect("three-qubit permutation")
    }
}

/// A convex mixture of products across the three bipartitions.
#[derive(Debug, Clone)]
pub struct BiseparableMixture {
    pub terms: Vec<BiseparableTerm>,
}

impl BiseparableMixture {
    pub fn assemble(&self) -> CMatrix {
        self.terms
            .iter()
            .fold(CMatrix::zeros(3), |acc, t| &acc + &t.state().scale(t.weight))
    }
}

pub(crate) fn random_ket<R: Rng>(rng: &mut R, n_qubits: usize) -> Vec<Complex> {
    let mut ket: Vec<Complex> = (0..1usize << n_qubits)
        .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    ket.iter_mut().for_each(|z| *z /= norm);
    ket
}

/// Haar-random pure state on `n_qubits`.
pub fn random_pure<R: Rng>(rng: &mut R, n_qubits: usize) -> CMatrix {
    CMatrix::outer(&random_ket(rng, n_qubits)).expect("power-of-two ket")
}

/// Seeded biseparable sample: `n_terms` pure product terms over uniformly
/// chosen bipartitions with flat-Dirichlet weights.
pub fn random_biseparable(seed: u64, n_terms: usize) -> Result<BiseparableMixture> {
    if n_terms == 0 {
        return Err(Error::ParameterOutOfRange {
            name: "n_terms",
            value: 0.0,
            min: 1.0,
            max: f64::INFINITY,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..n_terms).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    let terms = raw
        .into_iter()
        .map(|w| BiseparableTerm {
            weight: w / total,
            partition: Partition::ALL[rng.random_range(0..3)],
            single: random_pure(&mut rng, 1),
            pair: random_pure(&mut rng, 2),
        })
        .collect();
    Ok(BiseparableMixture { terms })
}
