//! The nine-qubit multiple entanglement swapping network.
//!
//! Three tripartite inputs are laid out as
//!
//! ```text
//! rho1 -> qubits 0 1 2   held by A1 A2 A3
//! rho2 -> qubits 3 4 5   held by A2 A3 A4
//! rho3 -> qubits 6 7 8   held by A4 A5 A6
//! ```
//!
//! Parties A2, A3 and A4 each perform a Bell measurement on the two qubits
//! they hold, pairs (1,3), (2,4) and (5,6). The surviving qubits (0,7,8),
//! held by (A1,A5,A6), carry the swapped state. Within each measured pair the
//! first listed qubit is the most significant one of the Bell ket, so the
//! `psi-` outcome at A2 is `(|0>_1|1>_3 - |1>_1|0>_3)/sqrt 2`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::qlin::{contract_pure, kron_all, pauli, CMatrix, ZERO_WEIGHT};
use crate::states::{self, BellKind, Sign, StateParams};

/// Distance below which a corrected state counts as a member of the closed
/// form family.
pub const MATCH_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
}

/// Qubit ownership of the network. Only the canonical layout exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkLayout {
    pub ownership: Vec<(Party, Vec<usize>)>,
    pub measured_pairs: [(usize, usize); 3],
    pub output_qubits: [usize; 3],
}

impl NetworkLayout {
    pub fn canonical() -> Self {
        Self {
            ownership: vec![
                (Party::A1, vec![0]),
                (Party::A2, vec![1, 3]),
                (Party::A3, vec![2, 4]),
                (Party::A4, vec![5, 6]),
                (Party::A5, vec![7]),
                (Party::A6, vec![8]),
            ],
            measured_pairs: [(1, 3), (2, 4), (5, 6)],
            output_qubits: [0, 7, 8],
        }
    }

    pub fn measuring_parties(&self) -> [Party; 3] {
        [Party::A2, Party::A3, Party::A4]
    }
}

impl Default for NetworkLayout {
    fn default() -> Self {
        Self::canonical()
    }
}

/// Bell outcomes at (A2, A3, A4).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OutcomePattern(pub [BellKind; 3]);

impl OutcomePattern {
    pub const ALL_PSI_PLUS: OutcomePattern = OutcomePattern([BellKind::PsiPlus, BellKind::PsiPlus, BellKind::PsiPlus]);

    /// All 64 patterns; A2's label varies slowest.
    pub fn all() -> Vec<OutcomePattern> {
        let k = BellKind::ALL;
        (0..64)
            .map(|i| OutcomePattern([k[i / 16], k[(i / 4) % 4], k[i % 4]]))
            .collect()
    }

    pub fn is_all_psi(&self) -> bool {
        self.0.iter().all(|b| b.is_psi())
    }

    pub fn count(&self, kind: BellKind) -> usize {
        self.0.iter().filter(|&&b| b == kind).count()
    }
}

impl fmt::Display for OutcomePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.0[0], self.0[1], self.0[2])
    }
}

impl FromStr for OutcomePattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let labels: Vec<&str> = s.split(',').collect();
        if labels.len() != 3 {
            return Err(Error::Parse(format!(
                "pattern needs three comma-separated Bell labels, got {s:?}"
            )));
        }
        Ok(OutcomePattern([
            labels[0].parse()?,
            labels[1].parse()?,
            labels[2].parse()?,
        ]))
    }
}

impl Serialize for OutcomePattern {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OutcomePattern {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Single-qubit correction applied after post-selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PauliLabel {
    I,
    X,
    Z,
    /// The product `X * Z`.
    XZ,
}

impl PauliLabel {
    pub const ALL: [PauliLabel; 4] = [PauliLabel::I, PauliLabel::X, PauliLabel::Z, PauliLabel::XZ];

    pub fn matrix(self) -> CMatrix {
        match self {
            PauliLabel::I => pauli::i(),
            PauliLabel::X => pauli::x(),
            PauliLabel::Z => pauli::z(),
            PauliLabel::XZ => pauli::x().matmul(&pauli::z()).expect("single qubit"),
        }
    }
}

impl fmt::Display for PauliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

pub type Correction = [PauliLabel; 3];

/// Every local correction, lowest weight first; equal weights put the
/// corrections acting on earlier qubits first.
fn correction_search_order() -> Vec<Correction> {
    let mut all: Vec<Correction> = (0..64)
        .map(|i| {
            [
                PauliLabel::ALL[i / 16],
                PauliLabel::ALL[(i / 4) % 4],
                PauliLabel::ALL[i % 4],
            ]
        })
        .collect();
    all.sort_by_key(|corr| {
        let weight = corr.iter().filter(|&&l| l != PauliLabel::I).count();
        let idle = corr.map(|l| l == PauliLabel::I);
        (weight, idle, *corr)
    });
    all
}

fn correction_unitary(corr: &Correction) -> CMatrix {
    let mats: Vec<CMatrix> = corr.iter().map(|l| l.matrix()).collect();
    kron_all(&mats)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCorrection {
    pub corrected: CMatrix,
    pub correction: Correction,
    /// `None` when no correction brings the state within [`MATCH_TOL`].
    pub matched_sign: Option<Sign>,
    pub match_distance: f64,
}

fn best_correction(conditional: &CMatrix, targets: &[(Sign, CMatrix)]) -> Result<PhaseCorrection> {
    if conditional.n_qubits() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 8,
            found: conditional.dim(),
        });
    }
    let mut best: Option<(f64, Correction, Sign, CMatrix)> = None;
    for corr in correction_search_order() {
        let corrected = conditional.conjugate_by(&correction_unitary(&corr))?;
        for (sign, target) in targets {
            let d = corrected.frobenius_distance(target)?;
            if best.as_ref().is_none_or(|b| d < b.0 - 1e-14) {
                best = Some((d, corr, *sign, corrected.clone()));
            }
        }
    }
    let (match_distance, correction, sign, corrected) = best.expect("non-empty search");
    Ok(PhaseCorrection {
        corrected,
        correction,
        matched_sign: (match_distance <= MATCH_TOL).then_some(sign),
        match_distance,
    })
}

/// Searches all local Pauli corrections and both signs for the closest member
/// of the closed-form family at `(p, theta)`. Lower-weight corrections win
/// ties, so an uncorrected match reports its own sign.
pub fn phase_correct(conditional: &CMatrix, p: f64, theta: f64) -> Result<PhaseCorrection> {
    let targets = Sign::BOTH
        .iter()
        .map(|&s| Ok((s, states::rho4_closed(p, theta, s)?)))
        .collect::<Result<Vec<_>>>()?;
    best_correction(conditional, &targets)
}

/// As [`phase_correct`] with the target sign fixed.
pub fn phase_correct_to(conditional: &CMatrix, p: f64, theta: f64, sign: Sign) -> Result<PhaseCorrection> {
    best_correction(conditional, &[(sign, states::rho4_closed(p, theta, sign)?)])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwapResult {
    pub pattern: OutcomePattern,
    pub probability: f64,
    /// Normalized state on qubits (0,7,8); `None` for zero-weight patterns.
    pub conditional: Option<CMatrix>,
    pub correction: Option<PhaseCorrection>,
}

impl SwapResult {
    pub fn matched_sign(&self) -> Option<Sign> {
        self.correction.as_ref().and_then(|c| c.matched_sign)
    }

    pub fn match_distance(&self) -> Option<f64> {
        self.correction.as_ref().map(|c| c.match_distance)
    }

    pub fn corrected(&self) -> Option<&CMatrix> {
        self.correction.as_ref().map(|c| &c.corrected)
    }

    pub fn to_record(&self, include_state: bool) -> SwapRecord {
        SwapRecord {
            pattern: self.pattern,
            probability: self.probability,
            correction: self.correction.as_ref().map(|c| c.correction),
            matched_sign: self.matched_sign(),
            match_distance: self.match_distance(),
            state: if include_state { self.corrected().cloned() } else { None },
        }
    }
}

/// Serialized form of a [`SwapResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapRecord {
    pub pattern: OutcomePattern,
    pub probability: f64,
    pub correction: Option<Correction>,
    pub matched_sign: Option<Sign>,
    pub match_distance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<CMatrix>,
}

fn check_input(rho: &CMatrix, what: &str) -> Result<()> {
    if rho.n_qubits() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 8,
            found: rho.dim(),
        });
    }
    if !rho.is_density(1e-10) {
        return Err(Error::NotADensity { what: what.into() });
    }
    Ok(())
}

/// `rho1 (x) rho2 (x) rho3` in the canonical layout.
pub fn build_joint(r1: &CMatrix, r2: &CMatrix, r3: &CMatrix) -> Result<CMatrix> {
    check_input(r1, "rho1")?;
    check_input(r2, "rho2")?;
    check_input(r3, "rho3")?;
    Ok(kron_all([r1, r2, r3]))
}

/// A built network together with the `(p, theta)` whose closed form the
/// swapped states are compared against.
#[derive(Debug, Clone)]
pub struct SwapNetwork {
    joint: CMatrix,
    layout: NetworkLayout,
    p: f64,
    theta: f64,
}

impl SwapNetwork {
    pub fn new(r1: &CMatrix, r2: &CMatrix, r3: &CMatrix, p: f64, theta: f64) -> Result<Self> {
        states::check_weight("p", p)?;
        states::check_theta(theta)?;
        Ok(Self {
            joint: build_joint(r1, r2, r3)?,
            layout: NetworkLayout::canonical(),
            p,
            theta,
        })
    }

    /// Network fed with `rho1(p, theta)`, `rho2(p1)`, `rho3(p, theta)`.
    pub fn from_params(params: &StateParams) -> Result<Self> {
        let r1 = states::rho1(params.p, params.theta)?;
        let r2 = states::rho2(params.p1)?;
        let r3 = states::rho3(params.p, params.theta)?;
        Self::new(&r1, &r2, &r3, params.p, params.theta)
    }

    pub fn joint(&self) -> &CMatrix {
        &self.joint
    }

    pub fn layout(&self) -> &NetworkLayout {
        &self.layout
    }

    /// Unnormalized post-measurement state on the output qubits, obtained by
    /// contracting one measured pair at a time.
    pub fn unnormalized_output(&self, pattern: &OutcomePattern) -> Result<CMatrix> {
        let mut labels: Vec<usize> = (0..9).collect();
        let mut state = self.joint.clone();
        for (&(a, b), kind) in self.layout.measured_pairs.iter().zip(pattern.0) {
            let pos = |q: usize| labels.iter().position(|&l| l == q).expect("qubit still present");
            let (pa, pb) = (pos(a), pos(b));
            state = contract_pure(&state, &[pa, pb], &kind.ket())?;
            labels.retain(|&l| l != a && l != b);
        }
        debug_assert_eq!(labels, self.layout.output_qubits);
        Ok(state)
    }

    pub fn swap(&self, pattern: &OutcomePattern) -> Result<SwapResult> {
        let out = self.unnormalized_output(pattern)?;
        let weight = out.trace().re;
        if weight <= ZERO_WEIGHT {
            return Err(Error::ZeroProbabilityOutcome { weight });
        }
        let conditional = out.scale(1.0 / weight);
        let correction = phase_correct(&conditional, self.p, self.theta)?;
        Ok(SwapResult {
            pattern: *pattern,
            probability: weight,
            conditional: Some(conditional),
            correction: Some(correction),
        })
    }

    /// All 64 outcomes, most probable first (canonical order among ties).
    /// Zero-weight patterns carry probability 0 and no state.
    pub fn outcome_distribution(&self, exec: Execution) -> Result<Vec<SwapResult>> {
        let patterns = OutcomePattern::all();
        let results = par::map_slice(exec, &patterns, |pattern| match self.swap(pattern) {
            Err(Error::ZeroProbabilityOutcome { .. }) => Ok(SwapResult {
                pattern: *pattern,
                probability: 0.0,
                conditional: None,
                correction: None,
            }),
            other => other,
        });
        let mut results = results.into_iter().collect::<Result<Vec<_>>>()?;
        results.sort_by(|a, b| b.probability.total_cmp(&a.probability));
        Ok(results)
    }
}

pub fn swap(
    r1: &CMatrix,
    r2: &CMatrix,
    r3: &CMatrix,
    pattern: &OutcomePattern,
    p: f64,
    theta: f64,
) -> Result<SwapResult> {
    SwapNetwork::new(r1, r2, r3, p, theta)?.swap(pattern)
}

pub fn outcome_distribution(r1: &CMatrix, r2: &CMatrix, r3: &CMatrix, p: f64, theta: f64) -> Result<Vec<SwapResult>> {
    SwapNetwork::new(r1, r2, r3, p, theta)?.outcome_distribution(Execution::default())
}

/// `p p1 (1 + p cos 2t) sin^2 t / 2`.
pub fn success_probability(p: f64, p1: f64, theta: f64) -> Result<f64> {
    StateParams::new(p, p1, theta)?;
    Ok(0.5 * p * p1 * (1.0 + p * (2.0 * theta).cos()) * theta.sin().powi(2))
}

/// Brute-force probabilities to set against [`success_probability`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuccessReport {
    pub formula: f64,
    /// Probability of the single pattern `(psi+, psi+, psi+)`.
    pub single_pattern: f64,
    /// Summed over the eight patterns with a `psi` outcome at every party.
    pub all_psi_patterns: f64,
    /// Summed over every pattern that phase-corrects onto the family.
    pub family_matched: f64,
}

pub fn success_report(params: &StateParams, exec: Execution) -> Result<SuccessReport> {
    let network = SwapNetwork::from_params(params)?;
    let dist = network.outcome_distribution(exec)?;
    let sum = |f: &dyn Fn(&SwapResult) -> bool| dist.iter().filter(|r| f(r)).map(|r| r.probability).sum();
    Ok(SuccessReport {
        formula: success_probability(params.p, params.p1, params.theta)?,
        single_pattern: sum(&|r| r.pattern == OutcomePattern::ALL_PSI_PLUS),
        all_psi_patterns: sum(&|r| r.pattern.is_all_psi()),
        family_matched: sum(&|r| r.matched_sign().is_some()),
    })
}
