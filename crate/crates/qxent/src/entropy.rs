//! Classical and quantum information quantities.
//!
//! The central object is the cross entropy of a model state `σ` relative to a
//! data state `ρ`,
//!
//! ```text
//! S(ρ, σ) = -tr(ρ log σ),
//! ```
//!
//! finite when the support of `ρ` lies inside the support of `σ` and `+∞`
//! otherwise. It decomposes as relative entropy plus von Neumann entropy,
//! `S(ρ, σ) = S(ρ‖σ) + S(ρ)`, mirroring the classical decomposition of cross
//! entropy into Shannon entropy plus KL divergence, and it is bounded below
//! by state overlap and fidelity:
//!
//! ```text
//! S(ρ, σ) ≥ -log tr(ρσ) ≥ -log F(ρ, σ).
//! ```
//!
//! All logarithms are natural. Infinite branches are explicit values of
//! [`ExtendedReal`], decided by a support test rather than by the logarithm of
//! a tiny eigenvalue, so they are deterministic.

use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matfun::{matrix_log, matrix_sqrt, CMatrix, DEFAULT_SUPPORT_TOL};
use crate::states::{trace_product, DensityMatrix};

/// Threshold on `max|(I-P_σ) ρ (I-P_σ)|` above which cross-entropy-like
/// quantities are reported as `+∞`.
pub const SUPPORT_VIOLATION_TOL: f64 = 1e-9;

/// Normalization tolerance for classical probability vectors.
pub const DIST_TOL: f64 = 1e-12;

/// A real value extended with signed infinities.
///
/// Entropy-like quantities are `+∞` outside their support condition and
/// log-likelihoods are `-∞` on impossible data. Reports keep the distinction
/// explicit instead of smuggling IEEE infinities through arithmetic: the CSV
/// and structured forms serialize as the literal strings `"inf"` / `"-inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    PosInf,
    NegInf,
}

impl ExtendedReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    /// The finite value, if any.
    pub fn value(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    /// Collapse to `f64`, mapping the infinite branches to IEEE infinities.
    pub fn as_f64(self) -> f64 {
        match self {
            ExtendedReal::Finite(x) => x,
            ExtendedReal::PosInf => f64::INFINITY,
            ExtendedReal::NegInf => f64::NEG_INFINITY,
        }
    }

    /// Lift an IEEE float into the sum type.
    pub fn from_f64(x: f64) -> Self {
        if x == f64::INFINITY {
            ExtendedReal::PosInf
        } else if x == f64::NEG_INFINITY {
            ExtendedReal::NegInf
        } else {
            ExtendedReal::Finite(x)
        }
    }
}

impl std::ops::Neg for ExtendedReal {
    type Output = ExtendedReal;
    fn neg(self) -> ExtendedReal {
        match self {
            ExtendedReal::Finite(x) => ExtendedReal::Finite(-x),
            ExtendedReal::PosInf => ExtendedReal::NegInf,
            ExtendedReal::NegInf => ExtendedReal::PosInf,
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(x) => write!(f, "{x}"),
            ExtendedReal::PosInf => write!(f, "inf"),
            ExtendedReal::NegInf => write!(f, "-inf"),
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Finite(x) => serializer.serialize_f64(*x),
            ExtendedReal::PosInf => serializer.serialize_str("inf"),
            ExtendedReal::NegInf => serializer.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = ExtendedReal;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or \"inf\"/\"-inf\"")
            }
            fn visit_f64<E: de::Error>(self, x: f64) -> std::result::Result<ExtendedReal, E> {
                Ok(ExtendedReal::Finite(x))
            }
            fn visit_i64<E: de::Error>(self, x: i64) -> std::result::Result<ExtendedReal, E> {
                Ok(ExtendedReal::Finite(x as f64))
            }
            fn visit_u64<E: de::Error>(self, x: u64) -> std::result::Result<ExtendedReal, E> {
                Ok(ExtendedReal::Finite(x as f64))
            }
            fn visit_str<E: de::Error>(self, s: &str) -> std::result::Result<ExtendedReal, E> {
                match s {
                    "inf" => Ok(ExtendedReal::PosInf),
                    "-inf" => Ok(ExtendedReal::NegInf),
                    _ => Err(E::custom(format!("unexpected extended real {s:?}"))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// A discrete probability distribution with named outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalDist {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl ClassicalDist {
    /// Validate labeled probabilities: nonnegative entries summing to 1
    /// within [`DIST_TOL`].
    pub fn new(labels: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if labels.len() != probs.len() {
            return Err(Error::InvalidDistribution {
                reason: format!("{} labels for {} probabilities", labels.len(), probs.len()),
            });
        }
        if probs.is_empty() {
            return Err(Error::InvalidDistribution { reason: "empty distribution".into() });
        }
        if let Some(&bad) = probs.iter().find(|&&p: &&f64| p.is_nan() || p < 0.0) {
            return Err(Error::InvalidDistribution {
                reason: format!("negative or NaN probability {bad}"),
            });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > DIST_TOL {
            return Err(Error::InvalidDistribution {
                reason: format!("probabilities sum to {sum}, expected 1"),
            });
        }
        Ok(Self { labels, probs })
    }

    /// Build with positional labels `"0", "1", ...`.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let labels = (0..probs.len()).map(|i| i.to_string()).collect();
        Self::new(labels, probs)
    }

    /// Uniform distribution over `n` outcomes.
    pub fn uniform(n: usize) -> Self {
        Self::from_probs(vec![1.0 / n as f64; n]).expect("uniform weights are valid")
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Probability of a labeled outcome, if present.
    pub fn prob_of(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.probs[i])
    }

    fn check_same_support(&self, other: &Self) -> Result<()> {
        if self.labels != other.labels {
            return Err(Error::LabelMismatch);
        }
        Ok(())
    }
}

/// Shannon entropy `H(p) = -Σ p(x) log p(x)` in nats, with `0 log 0 = 0`.
pub fn shannon(p: &ClassicalDist) -> f64 {
    -p.probs.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

/// Classical cross entropy `H(p, q) = -Σ p(x) log q(x)`.
///
/// `+∞` exactly when some outcome has `p(x) > 0` but `q(x) = 0`.
pub fn classical_cross_entropy(p: &ClassicalDist, q: &ClassicalDist) -> Result<ExtendedReal> {
    p.check_same_support(q)?;
    let mut total = 0.0;
    for (&px, &qx) in p.probs.iter().zip(q.probs.iter()) {
        if px > 0.0 {
            if qx <= 0.0 {
                return Ok(ExtendedReal::PosInf);
            }
            total -= px * qx.ln();
        }
    }
    Ok(ExtendedReal::Finite(total))
}

/// KL divergence `D(p‖q) = Σ p(x) log(p(x)/q(x))`, `+∞` outside the support
/// condition.
pub fn kl_divergence(p: &ClassicalDist, q: &ClassicalDist) -> Result<ExtendedReal> {
    p.check_same_support(q)?;
    let mut total = 0.0;
    for (&px, &qx) in p.probs.iter().zip(q.probs.iter()) {
        if px > 0.0 {
            if qx <= 0.0 {
                return Ok(ExtendedReal::PosInf);
            }
            total += px * (px / qx).ln();
        }
    }
    Ok(ExtendedReal::Finite(total))
}

/// Classical fidelity `F(p, q) = (Σ √(p(x) q(x)))²`, in `[0, 1]`.
pub fn classical_fidelity(p: &ClassicalDist, q: &ClassicalDist) -> Result<f64> {
    p.check_same_support(q)?;
    let overlap: f64 =
        p.probs.iter().zip(q.probs.iter()).map(|(&px, &qx)| (px * qx).sqrt()).sum();
    Ok((overlap * overlap).clamp(0.0, 1.0))
}

/// Von Neumann entropy `S(ρ) = -tr(ρ log ρ) = -Σ λ log λ` over the spectrum.
pub fn von_neumann(rho: &DensityMatrix) -> f64 {
    -rho.eigenvalues().iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

fn check_dims(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { left: rho.dim(), right: sigma.dim() });
    }
    Ok(())
}

/// Max-norm of `ρ` compressed onto the orthogonal complement of the support
/// of `σ`. Zero (to eigensolver noise) iff `supp(ρ) ⊆ supp(σ)`.
pub fn support_violation(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let p = sigma.support_projector(DEFAULT_SUPPORT_TOL);
    let q = CMatrix::identity(sigma.dim(), sigma.dim()) - p;
    crate::matfun::max_norm(&(&q * rho.data() * &q))
}

/// Quantum cross entropy `S(ρ, σ) = -tr(ρ log σ)`.
///
/// Returns `+∞` when the support of `ρ` leaks out of the support of `σ` by
/// more than [`SUPPORT_VIOLATION_TOL`]; otherwise evaluates the trace against
/// the logarithm restricted to the support of `σ`.
pub fn quantum_cross_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<ExtendedReal> {
    check_dims(rho, sigma)?;
    if support_violation(rho, sigma) > SUPPORT_VIOLATION_TOL {
        return Ok(ExtendedReal::PosInf);
    }
    let log_sigma = matrix_log(sigma.data(), DEFAULT_SUPPORT_TOL)?;
    Ok(ExtendedReal::Finite(-trace_product(rho.data(), &log_sigma.matrix).re))
}

/// Quantum relative entropy `S(ρ‖σ) = tr(ρ log ρ) - tr(ρ log σ)`.
///
/// Computed from the two matrix logarithms directly, not by subtracting
/// [`von_neumann`] from [`quantum_cross_entropy`], so the decomposition
/// `S(ρ, σ) = S(ρ‖σ) + S(ρ)` is a nontrivial cross-check between routes.
pub fn quantum_relative_entropy(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
) -> Result<ExtendedReal> {
    check_dims(rho, sigma)?;
    if support_violation(rho, sigma) > SUPPORT_VIOLATION_TOL {
        return Ok(ExtendedReal::PosInf);
    }
    let log_rho = matrix_log(rho.data(), DEFAULT_SUPPORT_TOL)?;
    let log_sigma = matrix_log(sigma.data(), DEFAULT_SUPPORT_TOL)?;
    let value = trace_product(rho.data(), &log_rho.matrix).re
        - trace_product(rho.data(), &log_sigma.matrix).re;
    Ok(ExtendedReal::Finite(value))
}

/// Quantum fidelity `F(ρ, σ) = (tr √(√ρ σ √ρ))²`, clamped to `[0, 1]`.
pub fn quantum_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho, sigma)?;
    let sqrt_rho = matrix_sqrt(rho.data())?;
    let inner = &sqrt_rho * sigma.data() * &sqrt_rho;
    let inner = (&inner + inner.adjoint()).scale(0.5);
    let root = matrix_sqrt(&inner)?;
    let t = root.trace().re;
    Ok((t * t).clamp(0.0, 1.0))
}

/// The lower-bound chain `S(ρ, σ) ≥ -log tr(ρσ) ≥ -log F(ρ, σ)` evaluated on
/// one pair, with both gaps.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundChain {
    /// `S(ρ, σ)`.
    pub cross_entropy: ExtendedReal,
    /// `-log tr(ρσ)`.
    pub neg_log_overlap: ExtendedReal,
    /// `-log F(ρ, σ)`.
    pub neg_log_fidelity: ExtendedReal,
    /// `S(ρ, σ) + log tr(ρσ)`; nonnegative up to tolerance whenever finite.
    pub gap_overlap: ExtendedReal,
    /// `-log tr(ρσ) + log F(ρ, σ)`; nonnegative up to tolerance.
    pub gap_fidelity: ExtendedReal,
}

/// Evaluate the bound chain for one `(ρ, σ)` pair.
///
/// When `S(ρ, σ) = +∞` the supports are disjoint enough that the chain holds
/// with infinite slack; the gaps are reported as `+∞` rather than as NaN.
pub fn bound_chain(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<BoundChain> {
    check_dims(rho, sigma)?;
    let s = quantum_cross_entropy(rho, sigma)?;
    let overlap = trace_product(rho.data(), sigma.data()).re.max(0.0);
    let neg_log_overlap = if overlap > 0.0 {
        ExtendedReal::Finite(-overlap.ln())
    } else {
        ExtendedReal::PosInf
    };
    let fid = quantum_fidelity(rho, sigma)?;
    let neg_log_fidelity =
        if fid > 0.0 { ExtendedReal::Finite(-fid.ln()) } else { ExtendedReal::PosInf };
    let gap_overlap = match (s, neg_log_overlap) {
        (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => ExtendedReal::Finite(a - b),
        _ => ExtendedReal::PosInf,
    };
    let gap_fidelity = match (neg_log_overlap, neg_log_fidelity) {
        (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => ExtendedReal::Finite(a - b),
        _ => ExtendedReal::PosInf,
    };
    Ok(BoundChain { cross_entropy: s, neg_log_overlap, neg_log_fidelity, gap_overlap, gap_fidelity })
}
