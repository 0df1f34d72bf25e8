//! Born-rule statistics and the witness expressions.
//!
//! A three-qubit state is reduced once to its Pauli correlation tensor
//! `T[mu][nu][la] = Tr(rho s_mu (x) s_nu (x) s_la)` with `s_0 = I`. Every
//! correlator of Bloch-vector observables is then a small contraction of that
//! tensor, which is what the optimizer evaluates in its inner loop.
//! [`joint_probability`] goes through the full matrices instead and serves as
//! the independent route.

use std::f64::consts::{FRAC_PI_2, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qlin::{bloch_observable, bloch_vector, kron_all, pauli, CMatrix};

/// A dichotomic observable `n . sigma` given by its Bloch angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    pub theta: f64,
    pub phi: f64,
}

impl Setting {
    pub const X: Setting = Setting {
        theta: FRAC_PI_2,
        phi: 0.0,
    };
    pub const Y: Setting = Setting {
        theta: FRAC_PI_2,
        phi: FRAC_PI_2,
    };
    pub const Z: Setting = Setting { theta: 0.0, phi: 0.0 };

    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn direction(&self) -> [f64; 3] {
        bloch_vector(self.theta, self.phi)
    }

    pub fn observable(&self) -> CMatrix {
        bloch_observable(self.theta, self.phi)
    }
}

/// Observables available to each of the three parties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementScenario {
    pub settings: [Vec<Setting>; 3],
}

impl MeasurementScenario {
    pub fn new(settings: [Vec<Setting>; 3]) -> Result<Self> {
        let m = settings[0].len();
        if !(2..=3).contains(&m) || settings.iter().any(|s| s.len() != m) {
            return Err(Error::Parse(format!(
                "every party needs the same number (2 or 3) of settings, got {:?}",
                settings.iter().map(Vec::len).collect::<Vec<_>>()
            )));
        }
        if settings
            .iter()
            .flatten()
            .any(|s| !(s.theta.is_finite() && s.phi.is_finite()))
        {
            return Err(Error::Parse("non-finite measurement angle".into()));
        }
        Ok(Self { settings })
    }

    /// Same settings at every party.
    pub fn uniform(settings: &[Setting]) -> Result<Self> {
        Self::new([settings.to_vec(), settings.to_vec(), settings.to_vec()])
    }

    /// Party-major `(theta, phi)` pairs: `[A0, A1, .., B0, .., C0, ..]`.
    pub fn from_angles(m: usize, angles: &[f64]) -> Result<Self> {
        if angles.len() != 6 * m {
            return Err(Error::DimensionMismatch {
                expected: 6 * m,
                found: angles.len(),
            });
        }
        let party = |k: usize| -> Vec<Setting> {
            (0..m)
                .map(|x| {
                    let i = 2 * (k * m + x);
                    Setting::new(angles[i], angles[i + 1])
                })
                .collect()
        };
        Self::new([party(0), party(1), party(2)])
    }

    pub fn to_angles(&self) -> Vec<f64> {
        self.settings.iter().flatten().flat_map(|s| [s.theta, s.phi]).collect()
    }

    pub fn m(&self) -> usize {
        self.settings[0].len()
    }

    pub(crate) fn directions(&self) -> Directions {
        let mut d = [[[0.0; 3]; 3]; 3];
        for (k, party) in self.settings.iter().enumerate() {
            for (x, s) in party.iter().enumerate() {
                d[k][x] = s.direction();
            }
        }
        d
    }
}

/// Unit Bloch vectors indexed by `[party][setting]`.
pub(crate) type Directions = [[[f64; 3]; 3]; 3];

/// Pauli-basis correlation tensor of a three-qubit state.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTensor {
    t: [[[f64; 4]; 4]; 4],
}

impl CorrelationTensor {
    pub fn from_state(rho: &CMatrix) -> Result<Self> {
        if rho.n_qubits() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 8,
                found: rho.dim(),
            });
        }
        let basis = [pauli::i(), pauli::x(), pauli::y(), pauli::z()];
        let mut t = [[[0.0; 4]; 4]; 4];
        for (m1, s1) in basis.iter().enumerate() {
            for (m2, s2) in basis.iter().enumerate() {
                for (m3, s3) in basis.iter().enumerate() {
                    let op = kron_all([s1, s2, s3]);
                    t[m1][m2][m3] = rho.trace_product(&op)?.re;
                }
            }
        }
        Ok(Self { t })
    }

    pub fn component(&self, a: usize, b: usize, c: usize) -> f64 {
        self.t[a][b][c]
    }

    /// `<(a.s) (x) (b.s) (x) (c.s)>` for four-vectors over `(I, X, Y, Z)`.
    pub fn expectation(&self, a: &[f64; 4], b: &[f64; 4], c: &[f64; 4]) -> f64 {
        let mut acc = 0.0;
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0.0 {
                continue;
            }
            for (j, &bj) in b.iter().enumerate() {
                if bj == 0.0 {
                    continue;
                }
                let w = ai * bj;
                for (k, &ck) in c.iter().enumerate() {
                    acc += w * ck * self.t[i][j][k];
                }
            }
        }
        acc
    }

    /// Three-body correlator of traceless observables.
    #[inline]
    pub fn correlator(&self, a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> f64 {
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let w = a[i] * b[j];
                let row = &self.t[i + 1][j + 1];
                acc += w * (c[0] * row[1] + c[1] * row[2] + c[2] * row[3]);
            }
        }
        acc
    }

    /// All `m^3` three-body correlators for the given directions, indexed
    /// `[x][y][z]`.
    pub(crate) fn correlators(&self, dirs: &Directions, m: usize) -> [[[f64; 3]; 3]; 3] {
        let mut out = [[[0.0; 3]; 3]; 3];
        for x in 0..m {
            let a = &dirs[0][x];
            // Contract A first: mat[j][k] = sum_i a_i T[i][j][k].
            let mut mat = [[0.0; 3]; 3];
            for (j, row) in mat.iter_mut().enumerate() {
                for (k, v) in row.iter_mut().enumerate() {
                    *v = a[0] * self.t[1][j + 1][k + 1]
                        + a[1] * self.t[2][j + 1][k + 1]
                        + a[2] * self.t[3][j + 1][k + 1];
                }
            }
            for y in 0..m {
                let b = &dirs[1][y];
                let v = [
                    b[0] * mat[0][0] + b[1] * mat[1][0] + b[2] * mat[2][0],
                    b[0] * mat[0][1] + b[1] * mat[1][1] + b[2] * mat[2][1],
                    b[0] * mat[0][2] + b[1] * mat[1][2] + b[2] * mat[2][2],
                ];
                for z in 0..m {
                    let c = &dirs[2][z];
                    out[x][y][z] = v[0] * c[0] + v[1] * c[1] + v[2] * c[2];
                }
            }
        }
        out
    }
}

fn four(v: &[f64; 3]) -> [f64; 4] {
    [0.0, v[0], v[1], v[2]]
}

const IDENTITY4: [f64; 4] = [1.0, 0.0, 0.0, 0.0];

/// Correlators of one scenario: three-body values `[x][y][z]` and the
/// marginal `<A_x B_y>` values.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorTable {
    pub m: usize,
    pub three: Vec<f64>,
    pub ab: Vec<f64>,
}

impl CorrelatorTable {
    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.three[(x * self.m + y) * self.m + z]
    }

    pub fn get_ab(&self, x: usize, y: usize) -> f64 {
        self.ab[x * self.m + y]
    }
}

pub fn correlator_table(rho: &CMatrix, scenario: &MeasurementScenario) -> Result<CorrelatorTable> {
    let t = CorrelationTensor::from_state(rho)?;
    let m = scenario.m();
    let dirs = scenario.directions();
    let raw = t.correlators(&dirs, m);
    let mut three = Vec::with_capacity(m * m * m);
    let mut ab = Vec::with_capacity(m * m);
    for x in 0..m {
        for y in 0..m {
            three.extend_from_slice(&raw[x][y][..m]);
            ab.push(t.expectation(&four(&dirs[0][x]), &four(&dirs[1][y]), &IDENTITY4));
        }
    }
    Ok(CorrelatorTable { m, three, ab })
}

fn check_index(what: &str, index: usize, m: usize) -> Result<()> {
    if index < m {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange(format!(
            "{what} = {index}, scenario has {m} settings"
        )))
    }
}

fn outcome_projector(setting: &Setting, outcome: i8) -> Result<CMatrix> {
    let sign = match outcome {
        1 => 1.0,
        -1 => -1.0,
        other => return Err(Error::IndexOutOfRange(format!("outcome {other} is not +1 or -1"))),
    };
    Ok((&CMatrix::identity(1) + &setting.observable().scale(sign)).scale(0.5))
}

/// `p(abc|xyz) = Tr[(M_a|x (x) M_b|y (x) M_c|z) rho]` with
/// `M_a|x = (I + a n_x . sigma) / 2`.
#[allow(clippy::too_many_arguments)]
pub fn joint_probability(
    rho: &CMatrix,
    scenario: &MeasurementScenario,
    x: usize,
    y: usize,
    z: usize,
    a: i8,
    b: i8,
    c: i8,
) -> Result<f64> {
    let m = scenario.m();
    check_index("x", x, m)?;
    check_index("y", y, m)?;
    check_index("z", z, m)?;
    let ops = [
        outcome_projector(&scenario.settings[0][x], a)?,
        outcome_projector(&scenario.settings[1][y], b)?,
        outcome_projector(&scenario.settings[2][z], c)?,
    ];
    let op = kron_all(&ops);
    if op.n_qubits() != rho.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: rho.dim(),
        });
    }
    Ok(rho.trace_product(&op)?.re)
}

/// `<A_x B_y C_z>` evaluated through the correlation tensor.
pub fn correlator(rho: &CMatrix, scenario: &MeasurementScenario, x: usize, y: usize, z: usize) -> Result<f64> {
    let m = scenario.m();
    check_index("x", x, m)?;
    check_index("y", y, m)?;
    check_index("z", z, m)?;
    let t = CorrelationTensor::from_state(rho)?;
    Ok(t.correlator(
        &scenario.settings[0][x].direction(),
        &scenario.settings[1][y].direction(),
        &scenario.settings[2][z].direction(),
    ))
}

/// Which side of the bound signals genuine multipartite entanglement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Above,
    Below,
}

/// Dense `m x m x m` coefficient tensor, index `(x*m + y)*m + z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub m: usize,
    pub values: Vec<f64>,
}

impl Coefficients {
    fn from_terms(m: usize, prefactor: f64, terms: &[(usize, usize, usize, f64)]) -> Self {
        let mut values = vec![0.0; m * m * m];
        for &(x, y, z, c) in terms {
            values[(x * m + y) * m + z] += prefactor * c;
        }
        Self { m, values }
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.values[(x * self.m + y) * self.m + z]
    }

    pub fn nonzero_terms(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0.0).count()
    }

    #[inline]
    fn apply(&self, corr: &[[[f64; 3]; 3]; 3]) -> f64 {
        let m = self.m;
        let mut acc = 0.0;
        for x in 0..m {
            for y in 0..m {
                for z in 0..m {
                    let c = self.values[(x * m + y) * m + z];
                    if c != 0.0 {
                        acc += c * corr[x][y][z];
                    }
                }
            }
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WitnessKind {
    /// `sum c[x][y][z] <A_x B_y C_z>`, optionally reported in absolute value.
    Linear { coeffs: Coefficients, absolute: bool },
    /// Square of the first form plus square of the second.
    SumOfSquares { first: Coefficients, second: Coefficients },
    /// Two untrusted parties with three settings each, third party trusted
    /// and measuring the Pauli operators.
    Steering,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessName {
    Mermin,
    Uffink,
    Bancal,
    Liang,
    Cavalcanti,
}

impl WitnessName {
    pub const ALL: [WitnessName; 5] = [
        WitnessName::Mermin,
        WitnessName::Uffink,
        WitnessName::Bancal,
        WitnessName::Liang,
        WitnessName::Cavalcanti,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WitnessName::Mermin => "mermin",
            WitnessName::Uffink => "uffink",
            WitnessName::Bancal => "bancal",
            WitnessName::Liang => "liang",
            WitnessName::Cavalcanti => "cavalcanti",
        }
    }

    pub fn spec(self) -> WitnessSpec {
        match self {
            WitnessName::Mermin => mermin(),
            WitnessName::Uffink => uffink(),
            WitnessName::Bancal => bancal(),
            WitnessName::Liang => liang(),
            WitnessName::Cavalcanti => cavalcanti_spec(),
        }
    }
}

impl fmt::Display for WitnessName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WitnessName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        WitnessName::ALL
            .into_iter()
            .find(|w| w.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown witness {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessSpec {
    pub name: WitnessName,
    pub m: usize,
    pub kind: WitnessKind,
    /// Largest (or smallest, for [`Direction::Below`]) biseparable value.
    pub bound: f64,
    pub direction: Direction,
}

impl WitnessSpec {
    pub fn violates(&self, value: f64) -> bool {
        match self.direction {
            Direction::Above => value > self.bound,
            Direction::Below => value < self.bound,
        }
    }

    /// Distance past the bound in the violating direction; positive means
    /// violated.
    pub fn margin(&self, value: f64) -> f64 {
        match self.direction {
            Direction::Above => value - self.bound,
            Direction::Below => self.bound - value,
        }
    }

    /// Number of free angles when optimizing over this witness's settings.
    pub fn n_angles(&self) -> usize {
        match self.kind {
            WitnessKind::Steering => 2 * 2 * 3,
            _ => 2 * 3 * self.m,
        }
    }

    pub(crate) fn value_from_tensor(&self, t: &CorrelationTensor, dirs: &Directions) -> f64 {
        match &self.kind {
            WitnessKind::Linear { coeffs, absolute } => {
                let v = coeffs.apply(&t.correlators(dirs, self.m));
                if *absolute {
                    v.abs()
                } else {
                    v
                }
            }
            WitnessKind::SumOfSquares { first, second } => {
                let corr = t.correlators(dirs, self.m);
                first.apply(&corr).powi(2) + second.apply(&corr).powi(2)
            }
            WitnessKind::Steering => steering_value(t, &dirs[0], &dirs[1]),
        }
    }

    /// Signed linear value before any absolute value is taken.
    pub(crate) fn signed_from_tensor(&self, t: &CorrelationTensor, dirs: &Directions) -> f64 {
        match &self.kind {
            WitnessKind::Linear { coeffs, .. } => coeffs.apply(&t.correlators(dirs, self.m)),
            _ => self.value_from_tensor(t, dirs),
        }
    }
}

pub fn mermin() -> WitnessSpec {
    WitnessSpec {
        name: WitnessName::Mermin,
        m: 2,
        kind: WitnessKind::Linear {
            coeffs: Coefficients::from_terms(2, 1.0, MERMIN_TERMS),
            absolute: true,
        },
        bound: 2.0 * SQRT_2,
        direction: Direction::Above,
    }
}

pub fn uffink() -> WitnessSpec {
    WitnessSpec {
        name: WitnessName::Uffink,
        m: 2,
        kind: WitnessKind::SumOfSquares {
            first: Coefficients::from_terms(2, 1.0, MERMIN_TERMS),
            second: Coefficients::from_terms(2, 1.0, UFFINK_SECOND_TERMS),
        },
        bound: 8.0,
        direction: Direction::Above,
    }
}

pub fn bancal() -> WitnessSpec {
    WitnessSpec {
        name: WitnessName::Bancal,
        m: 3,
        kind: WitnessKind::Linear {
            coeffs: Coefficients::from_terms(3, 3f64.sqrt() / 2.0, BANCAL_TERMS),
            absolute: false,
        },
        bound: 9.0,
        direction: Direction::Above,
    }
}

pub fn liang() -> WitnessSpec {
    WitnessSpec {
        name: WitnessName::Liang,
        m: 2,
        kind: WitnessKind::Linear {
            coeffs: Coefficients::from_terms(2, 0.25, LIANG_TERMS),
            absolute: false,
        },
        bound: SQRT_2,
        direction: Direction::Above,
    }
}

pub fn cavalcanti_spec() -> WitnessSpec {
    WitnessSpec {
        name: WitnessName::Cavalcanti,
        m: 3,
        kind: WitnessKind::Steering,
        bound: 0.0,
        direction: Direction::Below,
    }
}

const MERMIN_TERMS: &[(usize, usize, usize, f64)] = &[(1, 0, 0, 1.0), (0, 1, 0, 1.0), (0, 0, 1, 1.0), (1, 1, 1, -1.0)];

const UFFINK_SECOND_TERMS: &[(usize, usize, usize, f64)] =
    &[(1, 1, 0, 1.0), (0, 1, 1, 1.0), (1, 0, 1, 1.0), (0, 0, 0, -1.0)];

const BANCAL_TERMS: &[(usize, usize, usize, f64)] = &[
    (0, 0, 0, 1.0),
    (2, 0, 0, -1.0),
    (1, 1, 0, -1.0),
    (2, 1, 0, -1.0),
    (0, 2, 0, -1.0),
    (1, 2, 0, -1.0),
    (1, 0, 1, -1.0),
    (2, 0, 1, -1.0),
    (0, 1, 1, -1.0),
    (1, 1, 1, -1.0),
    (0, 2, 1, -1.0),
    (2, 2, 1, 1.0),
    (0, 0, 2, -1.0),
    (1, 0, 2, -1.0),
    (0, 1, 2, -1.0),
    (2, 1, 2, 1.0),
    (1, 2, 2, 1.0),
    (2, 2, 2, 1.0),
];

const LIANG_TERMS: &[(usize, usize, usize, f64)] = &[
    (0, 0, 0, 1.0),
    (0, 1, 0, 1.0),
    (0, 0, 1, 1.0),
    (0, 1, 1, 1.0),
    (1, 0, 0, 1.0),
    (1, 1, 0, 1.0),
    (1, 0, 1, 1.0),
    (1, 1, 1, -3.0),
];

/// Weight of the two-body and marginal terms of the steering inequality.
pub const STEERING_PAIR_WEIGHT: f64 = 0.1831;
/// Weight of the three-body terms of the steering inequality.
pub const STEERING_TRIPLE_WEIGHT: f64 = 0.2582;

const PAULI_X4: [f64; 4] = [0.0, 1.0, 0.0, 0.0];
const PAULI_Y4: [f64; 4] = [0.0, 0.0, 1.0, 0.0];
const PAULI_Z4: [f64; 4] = [0.0, 0.0, 0.0, 1.0];

fn steering_value(t: &CorrelationTensor, a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> f64 {
    let a: [[f64; 4]; 3] = [four(&a[0]), four(&a[1]), four(&a[2])];
    let b: [[f64; 4]; 3] = [four(&b[0]), four(&b[1]), four(&b[2])];
    // Settings named 1..3 live at indices 0..2.
    let pairs = t.expectation(&a[2], &b[2], &IDENTITY4)
        + t.expectation(&a[2], &IDENTITY4, &PAULI_Z4)
        + t.expectation(&IDENTITY4, &b[2], &PAULI_Z4);
    let triples = t.expectation(&a[0], &b[0], &PAULI_X4)
        - t.expectation(&a[0], &b[1], &PAULI_Y4)
        - t.expectation(&a[1], &b[0], &PAULI_Y4)
        - t.expectation(&a[1], &b[1], &PAULI_X4);
    1.0 - STEERING_PAIR_WEIGHT * pairs - STEERING_TRIPLE_WEIGHT * triples
}

/// Semi-device-independent steering expression. The third party is trusted
/// and measures `X`, `Y`, `Z`; values below zero certify genuine
/// entanglement.
pub fn cavalcanti(rho: &CMatrix, untrusted_a: &[Setting; 3], untrusted_b: &[Setting; 3]) -> Result<f64> {
    let t = CorrelationTensor::from_state(rho)?;
    let dir = |s: &[Setting; 3]| [s[0].direction(), s[1].direction(), s[2].direction()];
    Ok(steering_value(&t, &dir(untrusted_a), &dir(untrusted_b)))
}

/// Scenario carrying steering settings: the untrusted parties' three
/// observables plus the trusted `X, Y, Z` for the third party.
pub fn steering_scenario(untrusted_a: &[Setting; 3], untrusted_b: &[Setting; 3]) -> MeasurementScenario {
    MeasurementScenario {
        settings: [
            untrusted_a.to_vec(),
            untrusted_b.to_vec(),
            vec![Setting::X, Setting::Y, Setting::Z],
        ],
    }
}

/// Value of `witness` on `rho` under `scenario`. For the steering witness
/// the third party's settings are ignored in favour of the trusted Paulis.
pub fn evaluate(witness: &WitnessSpec, rho: &CMatrix, scenario: &MeasurementScenario) -> Result<f64> {
    if scenario.m() != witness.m {
        return Err(Error::ShapeMismatch {
            witness: witness.name.as_str(),
            expected: witness.m,
            found: scenario.m(),
        });
    }
    let t = CorrelationTensor::from_state(rho)?;
    Ok(witness.value_from_tensor(&t, &scenario.directions()))
}
