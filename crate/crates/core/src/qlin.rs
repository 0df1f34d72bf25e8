//! Dense complex linear algebra over multi-qubit operators.
//!
//! Every operator is a `2^n x 2^n` row-major matrix. Qubit 0 is the most
//! significant bit of a computational-basis index, so for three qubits the
//! basis state `|q0 q1 q2>` sits at index `4*q0 + 2*q1 + q2`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Complex = num_complex::Complex64;

/// Weights at or below this are treated as impossible outcomes.
pub const ZERO_WEIGHT: f64 = 1e-12;

/// Tolerance for the idempotence check in [`project`].
pub const PROJECTOR_TOL: f64 = 1e-10;

const MAX_QUBITS: usize = 12;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

/// Dense square complex matrix acting on `n_qubits` qubits.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CMatrixJson", into = "CMatrixJson")]
pub struct CMatrix {
    n_qubits: usize,
    data: Vec<Complex>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({} qubits)", self.n_qubits)?;
        let dim = self.dim();
        for r in 0..dim {
            for col in 0..dim {
                let z = self.get(r, col);
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl CMatrix {
    pub fn zeros(n_qubits: usize) -> Self {
        assert!(n_qubits <= MAX_QUBITS, "at most {MAX_QUBITS} qubits supported");
        let dim = 1usize << n_qubits;
        Self {
            n_qubits,
            data: vec![Complex::default(); dim * dim],
        }
    }

    pub fn identity(n_qubits: usize) -> Self {
        let mut m = Self::zeros(n_qubits);
        for i in 0..m.dim() {
            m.set(i, i, c(1.0, 0.0));
        }
        m
    }

    /// Maximally mixed state `I / 2^n`.
    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = (1usize << n_qubits) as f64;
        Self::identity(n_qubits).scale(1.0 / dim)
    }

    pub fn from_fn(n_qubits: usize, mut f: impl FnMut(usize, usize) -> Complex) -> Self {
        let mut m = Self::zeros(n_qubits);
        let dim = m.dim();
        for r in 0..dim {
            for col in 0..dim {
                m.data[r * dim + col] = f(r, col);
            }
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting wrong sizes and
    /// non-finite values.
    pub fn from_row_major(n_qubits: usize, data: Vec<Complex>) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::QubitOutOfRange {
                index: n_qubits,
                n_qubits: MAX_QUBITS,
            });
        }
        let dim = 1usize << n_qubits;
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self { n_qubits, data })
    }

    pub fn diag(n_qubits: usize, entries: &[f64]) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if entries.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: entries.len(),
            });
        }
        let mut m = Self::zeros(n_qubits);
        for (i, &v) in entries.iter().enumerate() {
            m.set(i, i, c(v, 0.0));
        }
        Ok(m)
    }

    /// Rank-one projector `|v><v|` for a (not necessarily normalized) ket.
    pub fn outer(ket: &[Complex]) -> Result<Self> {
        let n_qubits = qubits_for_len(ket.len())?;
        let dim = ket.len();
        let data = (0..dim * dim).map(|k| ket[k / dim] * ket[k % dim].conj()).collect();
        Self::from_row_major(n_qubits, data)
    }

    /// Projector onto a computational basis state given as a bit string such
    /// as `"001"`.
    pub fn basis_projector(bits: &str) -> Result<Self> {
        let index = usize::from_str_radix(bits, 2).map_err(|_| Error::Parse(format!("not a bit string: {bits:?}")))?;
        let mut ket = vec![Complex::default(); 1 << bits.len()];
        ket[index] = c(1.0, 0.0);
        Self::outer(&ket)
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    #[inline]
    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex {
        self.data[row * self.dim() + col]
    }

    #[inline]
    fn set(&mut self, row: usize, col: usize, value: Complex) {
        let dim = self.dim();
        self.data[row * dim + col] = value;
    }

    pub fn as_slice(&self) -> &[Complex] {
        &self.data
    }

    pub fn trace(&self) -> Complex {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n_qubits, |r, col| self.get(col, r).conj())
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            n_qubits: self.n_qubits,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        let dim = self.dim();
        let mut out = Self::zeros(self.n_qubits);
        for r in 0..dim {
            let row = &self.data[r * dim..(r + 1) * dim];
            let out_row = &mut out.data[r * dim..(r + 1) * dim];
            for (k, &a) in row.iter().enumerate() {
                if a == Complex::default() {
                    continue;
                }
                let other_row = &other.data[k * dim..(k + 1) * dim];
                for (o, &b) in out_row.iter_mut().zip(other_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `U rho U^dagger`.
    pub fn conjugate_by(&self, unitary: &Self) -> Result<Self> {
        unitary.matmul(self)?.matmul(&unitary.adjoint())
    }

    /// `Tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Result<Complex> {
        self.check_same_dim(other)?;
        let dim = self.dim();
        let mut acc = Complex::default();
        for r in 0..dim {
            for k in 0..dim {
                acc += self.data[r * dim + k] * other.data[k * dim + r];
            }
        }
        Ok(acc)
    }

    pub fn frobenius_distance(&self, other: &Self) -> Result<f64> {
        self.check_same_dim(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_dim(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let dim = self.dim();
        (0..dim).all(|r| (r..dim).all(|col| (self.get(r, col) - self.get(col, r).conj()).norm() <= tol))
    }

    /// True when every eigenvalue is at least `-tol`. Decided by attempting a
    /// Cholesky factorization of `self + tol * I`, which succeeds exactly when
    /// the shifted matrix is positive definite.
    pub fn is_positive_semidefinite(&self, tol: f64) -> bool {
        if !self.is_hermitian(tol) {
            return false;
        }
        let dim = self.dim();
        let mut l = vec![Complex::default(); dim * dim];
        for j in 0..dim {
            let mut diag = self.get(j, j).re + tol;
            for k in 0..j {
                diag -= l[j * dim + k].norm_sqr();
            }
            if diag.is_nan() || diag <= 0.0 {
                return false;
            }
            let pivot = diag.sqrt();
            l[j * dim + j] = c(pivot, 0.0);
            for i in (j + 1)..dim {
                // Hermitian part only; the imaginary residue was bounded above.
                let mut v = 0.5 * (self.get(i, j) + self.get(j, i).conj());
                for k in 0..j {
                    v -= l[i * dim + k] * l[j * dim + k].conj();
                }
                l[i * dim + j] = v / pivot;
            }
        }
        true
    }

    /// Hermitian, unit trace and positive semidefinite, all within `tol`.
    pub fn is_density(&self, tol: f64) -> bool {
        let tr = self.trace();
        (tr.re - 1.0).abs() <= tol && tr.im.abs() <= tol && self.is_positive_semidefinite(tol)
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n_qubits, rhs.n_qubits, "qubit count mismatch in add");
        CMatrix {
            n_qubits: self.n_qubits,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n_qubits, rhs.n_qubits, "qubit count mismatch in sub");
        CMatrix {
            n_qubits: self.n_qubits,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs).expect("qubit count mismatch in mul")
    }
}

fn qubits_for_len(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::DimensionMismatch {
            expected: len.next_power_of_two(),
            found: len,
        });
    }
    Ok(len.trailing_zeros() as usize)
}

/// Tensor product with `a` on the high-order qubits.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (da, db) = (a.dim(), b.dim());
    let n_qubits = a.n_qubits + b.n_qubits;
    let dim = da * db;
    let mut out = CMatrix::zeros(n_qubits);
    for ar in 0..da {
        for ac in 0..da {
            let x = a.get(ar, ac);
            if x == Complex::default() {
                continue;
            }
            for br in 0..db {
                let row = (ar * db + br) * dim + ac * db;
                for bc in 0..db {
                    out.data[row + bc] = x * b.get(br, bc);
                }
            }
        }
    }
    out
}

pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    factors.into_iter().fold(CMatrix::identity(0), |acc, m| kron(&acc, m))
}

/// Bit offset contributed by qubit `q` of an `n`-qubit register.
#[inline]
fn bit(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

/// Offsets into the full index for every assignment of the listed qubits,
/// with `qubits[0]` as the most significant bit of the local index.
fn local_offsets(n: usize, qubits: &[usize]) -> Vec<usize> {
    let k = qubits.len();
    (0..1usize << k)
        .map(|local| {
            qubits
                .iter()
                .enumerate()
                .filter(|(pos, _)| local & (1 << (k - 1 - pos)) != 0)
                .map(|(_, &q)| bit(n, q))
                .sum()
        })
        .collect()
}

fn validate_qubits(n: usize, qubits: &[usize]) -> Result<Vec<usize>> {
    let mut sorted = qubits.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if let Some(&bad) = sorted.iter().find(|&&q| q >= n) {
        return Err(Error::QubitOutOfRange {
            index: bad,
            n_qubits: n,
        });
    }
    Ok(sorted)
}

fn complement(n: usize, qubits: &[usize]) -> Vec<usize> {
    (0..n).filter(|q| !qubits.contains(q)).collect()
}

/// Traces out the `discard` qubits. Survivors keep their relative order.
pub fn partial_trace(rho: &CMatrix, discard: &[usize]) -> Result<CMatrix> {
    let n = rho.n_qubits;
    let discard = validate_qubits(n, discard)?;
    let keep = complement(n, &discard);
    let keep_off = local_offsets(n, &keep);
    let disc_off = local_offsets(n, &discard);
    let full = rho.dim();
    Ok(CMatrix::from_fn(keep.len(), |r, col| {
        disc_off
            .iter()
            .map(|&d| rho.data[(keep_off[r] + d) * full + keep_off[col] + d])
            .sum()
    }))
}

/// Reorders qubits: output qubit `i` is input qubit `order[i]`.
pub fn permute_qubits(rho: &CMatrix, order: &[usize]) -> Result<CMatrix> {
    let n = rho.n_qubits;
    if order.len() != n || validate_qubits(n, order)?.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: order.len(),
        });
    }
    let offsets = local_offsets(n, order);
    let full = rho.dim();
    Ok(CMatrix::from_fn(n, |r, col| rho.data[offsets[r] * full + offsets[col]]))
}

/// Projects with `proj` and renormalizes: returns `Tr(P rho P)` and
/// `P rho P / Tr(P rho P)`.
pub fn project(rho: &CMatrix, proj: &CMatrix) -> Result<(f64, CMatrix)> {
    let squared = proj.matmul(proj)?;
    let residual = squared.max_abs_diff(proj)?;
    if residual > PROJECTOR_TOL {
        return Err(Error::NotAProjector { residual });
    }
    let sandwiched = proj.matmul(rho)?.matmul(proj)?;
    let weight = sandwiched.trace().re;
    if weight <= ZERO_WEIGHT {
        return Err(Error::ZeroProbabilityOutcome { weight });
    }
    Ok((weight, sandwiched.scale(1.0 / weight)))
}

/// Contracts the listed qubits with the pure state `ket` on both sides,
/// i.e. `(<ket| x I) rho (|ket> x I)`, leaving an unnormalized operator on
/// the remaining qubits (original order). Its trace is the probability of
/// projecting onto `ket`. `qubits[0]` is the most significant qubit of `ket`.
pub fn contract_pure(rho: &CMatrix, qubits: &[usize], ket: &[Complex]) -> Result<CMatrix> {
    let n = rho.n_qubits;
    let sorted = validate_qubits(n, qubits)?;
    if sorted.len() != qubits.len() {
        return Err(Error::Parse(format!("repeated qubit in {qubits:?}")));
    }
    if ket.len() != 1 << qubits.len() {
        return Err(Error::DimensionMismatch {
            expected: 1 << qubits.len(),
            found: ket.len(),
        });
    }
    let keep = complement(n, qubits);
    let keep_off = local_offsets(n, &keep);
    let ket_off = local_offsets(n, qubits);
    let full = rho.dim();
    let amps: Vec<(usize, Complex)> = ket
        .iter()
        .zip(&ket_off)
        .filter(|(a, _)| **a != Complex::default())
        .map(|(a, &o)| (o, *a))
        .collect();
    Ok(CMatrix::from_fn(keep.len(), |r, col| {
        let mut acc = Complex::default();
        for &(so, sa) in &amps {
            let row = (keep_off[r] + so) * full + keep_off[col];
            for &(to, ta) in &amps {
                acc += sa.conj() * ta * rho.data[row + to];
            }
        }
        acc
    }))
}

pub mod pauli {
    use super::{c, CMatrix};

    pub fn i() -> CMatrix {
        CMatrix::identity(1)
    }

    pub fn x() -> CMatrix {
        CMatrix::from_fn(1, |r, col| if r != col { c(1.0, 0.0) } else { c(0.0, 0.0) })
    }

    pub fn y() -> CMatrix {
        CMatrix::from_fn(1, |r, col| match (r, col) {
            (0, 1) => c(0.0, -1.0),
            (1, 0) => c(0.0, 1.0),
            _ => c(0.0, 0.0),
        })
    }

    pub fn z() -> CMatrix {
        CMatrix::from_fn(1, |r, col| match (r, col) {
            (0, 0) => c(1.0, 0.0),
            (1, 1) => c(-1.0, 0.0),
            _ => c(0.0, 0.0),
        })
    }
}

/// Unit Bloch vector `(sin t cos f, sin t sin f, cos t)`.
#[inline]
pub fn bloch_vector(theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}

/// Dichotomic observable `n . sigma` for the Bloch direction `(theta, phi)`.
pub fn bloch_observable(theta: f64, phi: f64) -> CMatrix {
    let [nx, ny, nz] = bloch_vector(theta, phi);
    CMatrix::from_fn(1, |r, col| match (r, col) {
        (0, 0) => c(nz, 0.0),
        (1, 1) => c(-nz, 0.0),
        (0, 1) => c(nx, -ny),
        _ => c(nx, ny),
    })
}

#[derive(Serialize, Deserialize)]
struct CMatrixJson {
    n_qubits: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl From<CMatrix> for CMatrixJson {
    fn from(m: CMatrix) -> Self {
        let dim = m.dim();
        let rows = |f: fn(&Complex) -> f64| -> Vec<Vec<f64>> {
            m.data.chunks(dim).map(|row| row.iter().map(f).collect()).collect()
        };
        Self {
            n_qubits: m.n_qubits,
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

impl TryFrom<CMatrixJson> for CMatrix {
    type Error = Error;

    fn try_from(j: CMatrixJson) -> Result<Self> {
        let dim = 1usize
            .checked_shl(j.n_qubits as u32)
            .filter(|_| j.n_qubits <= MAX_QUBITS)
            .ok_or(Error::QubitOutOfRange {
                index: j.n_qubits,
                n_qubits: MAX_QUBITS,
            })?;
        let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == dim && rows.iter().all(|r| r.len() == dim);
        if !shape_ok(&j.re) || !shape_ok(&j.im) {
            return Err(Error::Parse(format!(
                "re/im must both be {dim}x{dim} for n_qubits = {}",
                j.n_qubits
            )));
        }
        let data =
            j.re.iter()
                .flatten()
                .zip(j.im.iter().flatten())
                .map(|(&re, &im)| c(re, im))
                .collect();
        CMatrix::from_row_major(j.n_qubits, data)
    }
}
