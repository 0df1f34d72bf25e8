//! Witness maximization over measurement angles, threshold recovery by
//! bisection, and closed-form reference values.

use std::f64::consts::SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::qlin::CMatrix;
use crate::states::{self, check_theta, Family, Sign, StateParams};
use crate::witnesses::{
    evaluate, steering_scenario, CorrelationTensor, Direction, Directions, MeasurementScenario, Setting, WitnessKind,
    WitnessName, WitnessSpec, STEERING_PAIR_WEIGHT, STEERING_TRIPLE_WEIGHT,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub restarts: usize,
    /// Simplex iterations allowed per restart.
    pub max_iters: usize,
    /// Convergence threshold on the spread of simplex values.
    pub tol: f64,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 200,
            max_iters: 2000,
            tol: 1e-9,
            seed: 0,
            exec: Execution::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iters == 0 || self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Parse(format!("invalid optimizer config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Simplex {
    step: f64,
    max_iters: usize,
    tol: f64,
}

/// Nelder-Mead minimization. Returns the best vertex, its value and the
/// number of iterations used.
fn nelder_mead(f: &impl Fn(&[f64]) -> f64, x0: &[f64], opts: Simplex) -> (Vec<f64>, f64, usize) {
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += opts.step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut order: Vec<usize> = (0..=n).collect();
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];

    let mut iters = 0;
    while iters < opts.max_iters {
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let (best, worst, second) = (order[0], order[n], order[n - 1]);
        if vals[worst] - vals[best] <= opts.tol {
            break;
        }
        iters += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&pts[i]) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64, out: &mut Vec<f64>, worst_pt: &[f64]| {
            for ((o, c), w) in out.iter_mut().zip(&centroid).zip(worst_pt) {
                *o = c + t * (c - w);
            }
        };

        along(REFLECT, &mut trial, &pts[worst]);
        let fr = f(&trial);
        if fr < vals[best] {
            along(EXPAND, &mut trial2, &pts[worst]);
            let fe = f(&trial2);
            if fe < fr {
                pts[worst].copy_from_slice(&trial2);
                vals[worst] = fe;
            } else {
                pts[worst].copy_from_slice(&trial);
                vals[worst] = fr;
            }
            continue;
        }
        if fr < vals[second] {
            pts[worst].copy_from_slice(&trial);
            vals[worst] = fr;
            continue;
        }
        let (t, reference) = if fr < vals[worst] {
            (CONTRACT, fr)
        } else {
            (-CONTRACT, vals[worst])
        };
        along(t, &mut trial2, &pts[worst]);
        let fc = f(&trial2);
        if fc < reference {
            pts[worst].copy_from_slice(&trial2);
            vals[worst] = fc;
            continue;
        }
        let anchor = pts[best].clone();
        for &i in &order[1..] {
            for (x, a) in pts[i].iter_mut().zip(&anchor) {
                *x = a + SHRINK * (*x - a);
            }
            vals[i] = f(&pts[i]);
        }
    }
    let best = (0..=n)
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .expect("non-empty simplex");
    (pts[best].clone(), vals[best], iters)
}

/// Local search from `x0`: an initial simplex run followed by re-started
/// runs with a shrinking simplex until the value stops improving.
fn local_search(f: &impl Fn(&[f64]) -> f64, x0: &[f64], config: &OptimizerConfig) -> (Vec<f64>, f64) {
    let mut budget = config.max_iters;
    let mut step = 0.8;
    let (mut x, mut fx, used) = nelder_mead(
        f,
        x0,
        Simplex {
            step,
            max_iters: budget,
            tol: config.tol,
        },
    );
    budget = budget.saturating_sub(used);
    for _ in 0..4 {
        if budget == 0 {
            break;
        }
        step *= 0.25;
        let (x2, f2, used) = nelder_mead(
            f,
            &x,
            Simplex {
                step,
                max_iters: budget,
                tol: config.tol,
            },
        );
        budget = budget.saturating_sub(used);
        let improved = fx - f2;
        if f2 < fx {
            x = x2;
            fx = f2;
        }
        if improved <= config.tol {
            break;
        }
    }
    (x, fx)
}

fn directions_from_angles(witness: &WitnessSpec, angles: &[f64]) -> Directions {
    let mut d = [[[0.0; 3]; 3]; 3];
    let (parties, m) = match witness.kind {
        WitnessKind::Steering => (2, 3),
        _ => (3, witness.m),
    };
    for k in 0..parties {
        for x in 0..m {
            let i = 2 * (k * m + x);
            d[k][x] = crate::qlin::bloch_vector(angles[i], angles[i + 1]);
        }
    }
    d
}

fn scenario_from_angles(witness: &WitnessSpec, angles: &[f64]) -> Result<MeasurementScenario> {
    match witness.kind {
        WitnessKind::Steering => {
            let s = |k: usize| -> [Setting; 3] {
                std::array::from_fn(|x| Setting::new(angles[2 * (3 * k + x)], angles[2 * (3 * k + x) + 1]))
            };
            Ok(steering_scenario(&s(0), &s(1)))
        }
        _ => MeasurementScenario::from_angles(witness.m, angles),
    }
}

/// Result of [`maximize_witness`]: the best value found in the violating
/// direction (a maximum, or for the steering witness a minimum).
#[derive(Debug, Clone, PartialEq)]
pub struct Maximum {
    pub value: f64,
    pub scenario: MeasurementScenario,
    /// Index of the restart that produced it.
    pub restart: usize,
}

/// Multi-start simplex search over all measurement angles. Restart `k`
/// starts from uniformly random angles drawn with seed `config.seed + k` and
/// the best restart wins, lowest index first on ties. For the absolute-value
/// Mermin form, even restarts climb the signed expression and odd restarts
/// its negation.
pub fn maximize_witness(rho: &CMatrix, witness: &WitnessSpec, config: &OptimizerConfig) -> Result<Maximum> {
    config.validate()?;
    let tensor = CorrelationTensor::from_state(rho)?;
    let n = witness.n_angles();
    let orient = match witness.direction {
        Direction::Above => 1.0,
        Direction::Below => -1.0,
    };
    let absolute = matches!(witness.kind, WitnessKind::Linear { absolute: true, .. });

    let runs = par::map_range(config.exec, config.restarts, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(k as u64));
        let x0: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        let flip = if absolute && k % 2 == 1 { -1.0 } else { 1.0 };
        let objective = |x: &[f64]| {
            let dirs = directions_from_angles(witness, x);
            -orient * flip * witness.signed_from_tensor(&tensor, &dirs)
        };
        let (x, _) = local_search(&objective, &x0, config);
        let value = witness.value_from_tensor(&tensor, &directions_from_angles(witness, &x));
        (orient * value, x)
    });

    let mut best: Option<(usize, f64, &Vec<f64>)> = None;
    for (k, (score, x)) in runs.iter().enumerate() {
        if best.as_ref().is_none_or(|b| *score > b.1) {
            best = Some((k, *score, x));
        }
    }
    let (restart, _, angles) = best.expect("at least one restart");
    let scenario = scenario_from_angles(witness, angles)?;
    let value = evaluate(witness, rho, &scenario)?;
    Ok(Maximum {
        value,
        scenario,
        restart,
    })
}

/// `X = -1 + p + p cos 2t`, `Y = p sin 2t`: the `ZZZ` and `XXX` correlations
/// of the first input state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticMerminParams {
    pub x: f64,
    pub y: f64,
}

impl AnalyticMerminParams {
    pub fn new(p: f64, theta: f64) -> Self {
        let c2 = (2.0 * theta).cos();
        Self {
            x: -1.0 + p + p * c2,
            y: p * (2.0 * theta).sin(),
        }
    }
}

/// Closed-form Mermin maximum on `rho1(p, theta)`:
/// `max[(2X^2 + Y^2) / sqrt(X^2 + Y^2), 4|Y|]`.
pub fn mermin_max_rho1_analytic(p: f64, theta: f64) -> Result<f64> {
    states::check_weight("p", p)?;
    check_theta(theta)?;
    let AnalyticMerminParams { x, y } = AnalyticMerminParams::new(p, theta);
    let r = x.hypot(y);
    // (2X^2 + Y^2)/r <= 2r, so the branch tends to zero with r.
    let tilted = if r == 0.0 { 0.0 } else { (2.0 * x * x + y * y) / r };
    Ok(tilted.max(4.0 * y.abs()))
}

/// GHZ weight above which a `w |GHZ><GHZ| + (1-w) |basis><basis|` mixture
/// violates the witness.
pub fn ghz_weight_threshold(witness: WitnessName) -> f64 {
    match witness {
        WitnessName::Mermin | WitnessName::Uffink => 1.0 / SQRT_2,
        WitnessName::Bancal => 2.0 / 3.0,
        WitnessName::Liang => 3.0 * SQRT_2 / 5.0,
        WitnessName::Cavalcanti => {
            (1.0 + STEERING_PAIR_WEIGHT) / (4.0 * STEERING_PAIR_WEIGHT + 4.0 * STEERING_TRIPLE_WEIGHT)
        }
    }
}

/// Closed-form violation threshold: the family is violated for parameter
/// values strictly above the returned one (`p1` for `rho2`, `p` otherwise).
/// Returns infinity where no parameter value violates.
pub fn table1_threshold(witness: WitnessName, family: Family, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let t = ghz_weight_threshold(witness);
    let s2 = (2.0 * theta).sin();
    let c_sq = theta.cos().powi(2);
    let inv = |d: f64| if d > 0.0 { 1.0 / d } else { f64::INFINITY };
    Ok(match (witness, family) {
        (WitnessName::Cavalcanti, Family::Rho1 | Family::Rho3) => {
            (1.0 + STEERING_PAIR_WEIGHT) * inv(4.0 * STEERING_PAIR_WEIGHT + 4.0 * STEERING_TRIPLE_WEIGHT * s2)
        }
        (_, Family::Rho1 | Family::Rho3) => t * inv(s2),
        (_, Family::Rho2) => t,
        // p_f(p, theta) > t solved for p.
        (_, Family::Rho4) => inv((2.0 / t - 2.0) * c_sq + 1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanParam {
    P,
    P1,
}

impl ScanParam {
    pub fn natural_for(family: Family) -> Self {
        match family {
            Family::Rho2 => ScanParam::P1,
            _ => ScanParam::P,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScanParam::P => "p",
            ScanParam::P1 => "p1",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub parameter: String,
    pub threshold: f64,
    pub bracket_width: f64,
    pub witness: WitnessName,
    pub monotonicity_checked: bool,
}

const COARSE_SAMPLES: usize = 17;

/// Whether the numerically maximized witness is violated by `family` at
/// `params`.
pub fn numerically_violated(
    witness: WitnessName,
    family: Family,
    params: &StateParams,
    config: &OptimizerConfig,
) -> Result<bool> {
    let spec = witness.spec();
    let rho = family.state(params, Sign::Plus)?;
    Ok(spec.violates(maximize_witness(&rho, &spec, config)?.value))
}

/// Smallest scanned value at which the maximized witness is violated,
/// bracketed to `tol`. The violation pattern is first sampled on a coarse
/// grid of 17 points and must switch from "no" to "yes" exactly once.
pub fn bisect_threshold(
    witness: WitnessName,
    family: Family,
    scan: ScanParam,
    fixed: StateParams,
    tol: f64,
    config: &OptimizerConfig,
) -> Result<ThresholdResult> {
    if scan != ScanParam::natural_for(family) {
        return Err(Error::Unsupported(format!(
            "{family} does not depend on {}",
            scan.name()
        )));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Parse(format!("tolerance must be positive, got {tol}")));
    }
    let at = |v: f64| -> Result<bool> {
        let mut params = fixed;
        match scan {
            ScanParam::P => params.p = v,
            ScanParam::P1 => params.p1 = v,
        }
        numerically_violated(witness, family, &params, config)
    };
    let grid: Vec<f64> = (0..COARSE_SAMPLES)
        .map(|i| i as f64 / (COARSE_SAMPLES - 1) as f64)
        .collect();
    let samples = grid.iter().map(|&v| at(v)).collect::<Result<Vec<bool>>>()?;
    let first = samples.iter().position(|&v| v);
    let Some(first) = first else {
        return Err(Error::NoViolation {
            witness: witness.to_string(),
            family: family.to_string(),
            param: scan.name().into(),
        });
    };
    if samples[first..].iter().any(|&v| !v) {
        return Err(Error::NonMonotone {
            param: scan.name().into(),
            samples,
        });
    }
    let (mut lo, mut hi) = if first == 0 {
        (0.0, 0.0)
    } else {
        (grid[first - 1], grid[first])
    };
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if at(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdResult {
        parameter: scan.name().into(),
        threshold: 0.5 * (lo + hi),
        bracket_width: hi - lo,
        witness,
        monotonicity_checked: true,
    })
}
