//! Linear UCB arm statistics with the three episodic update rules.
//!
//! Each arm keeps the ridge sufficient statistics `A = I + Σ x xᵀ` and
//! `b = Σ r x`, plus a maintained inverse of `A`. The inverse is refreshed by
//! Sherman–Morrison on every rank-1 update and recomputed from scratch every
//! [`REINVERT_EVERY`] rank-1 updates to bound drift.
//!
//! Update rules:
//! - [`ArmState::update_rewarded`]: revealed reward, `A += x xᵀ`, `b += r x`.
//! - [`ArmState::update_selfsup`]: pseudo-reward from a clusterer, `b += r' x`
//!   only; the covariance is left untouched.
//! - [`ArmState::update_unlabeled`]: no reward, `A += x xᵀ` only.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{cholesky, dot, identity, mat_vec, spd_inverse};

/// Number of rank-1 updates between full re-inversions of `A`.
pub const REINVERT_EVERY: u32 = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BanditError {
    #[error("context has dimension {found}, arm expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("cannot select from an empty arm list")]
    NoArms,
    #[error("reward {0} outside [0, 1]")]
    InvalidReward(f64),
    #[error("exploration coefficient must be finite and >= 0, got {0}")]
    InvalidExploration(f64),
    #[error("context contains non-finite values")]
    NonFiniteContext,
}

/// A reward in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Reward(f64);

impl Reward {
    pub const ZERO: Reward = Reward(0.0);
    pub const ONE: Reward = Reward(1.0);

    pub fn new(value: f64) -> Result<Self, BanditError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(BanditError::InvalidReward(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<bool> for Reward {
    fn from(hit: bool) -> Self {
        if hit {
            Reward::ONE
        } else {
            Reward::ZERO
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UcbParams {
    /// Exploration coefficient `c`.
    pub c: f64,
}

impl UcbParams {
    pub fn new(c: f64) -> Result<Self, BanditError> {
        if c.is_finite() && c >= 0.0 {
            Ok(Self { c })
        } else {
            Err(BanditError::InvalidExploration(c))
        }
    }
}

impl Default for UcbParams {
    fn default() -> Self {
        Self { c: 1.0 }
    }
}

/// Per-arm ridge statistics. Matrices are stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmState {
    dim: usize,
    a: Vec<f64>,
    a_inv: Vec<f64>,
    b: Vec<f64>,
    /// Rank-1 updates since the last full re-inversion.
    since_reinvert: u32,
}

impl ArmState {
    /// `A = I`, `b = 0`.
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            a: identity(dim),
            a_inv: identity(dim),
            b: vec![0.0; dim],
            since_reinvert: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn a_inv(&self) -> &[f64] {
        &self.a_inv
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// `θ = A⁻¹ b`.
    pub fn theta(&self) -> Vec<f64> {
        mat_vec(&self.a_inv, self.dim, &self.b)
    }

    /// Whether `A` admits a Cholesky factorisation.
    pub fn is_positive_definite(&self) -> bool {
        cholesky(&self.a, self.dim).is_some()
    }

    fn check(&self, x: &[f64]) -> Result<(), BanditError> {
        if x.len() != self.dim {
            return Err(BanditError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(BanditError::NonFiniteContext);
        }
        Ok(())
    }

    /// `θᵀx + c·sqrt(xᵀ A⁻¹ x)`; the radicand is clamped at zero.
    pub fn ucb_score(&self, x: &[f64], params: UcbParams) -> Result<f64, BanditError> {
        self.check(x)?;
        let mean = dot(&self.theta(), x);
        let var = dot(x, &mat_vec(&self.a_inv, self.dim, x)).max(0.0);
        Ok(mean + params.c * var.sqrt())
    }

    pub fn update_rewarded(&mut self, x: &[f64], r: Reward) -> Result<(), BanditError> {
        self.check(x)?;
        self.rank_one(x);
        let r = r.value();
        if r != 0.0 {
            for (bi, xi) in self.b.iter_mut().zip(x) {
                *bi += r * xi;
            }
        }
        Ok(())
    }

    /// Pseudo-rewarded update: `b += r'·x` with binary `r'`; `A` and its
    /// inverse are never touched.
    pub fn update_selfsup(&mut self, x: &[f64], agrees: bool) -> Result<(), BanditError> {
        self.check(x)?;
        if agrees {
            for (bi, xi) in self.b.iter_mut().zip(x) {
                *bi += xi;
            }
        }
        Ok(())
    }

    /// Covariance-only update: `A += x xᵀ`, `b` unchanged.
    pub fn update_unlabeled(&mut self, x: &[f64]) -> Result<(), BanditError> {
        self.check(x)?;
        self.rank_one(x);
        Ok(())
    }

    fn rank_one(&mut self, x: &[f64]) {
        let d = self.dim;
        let u = mat_vec(&self.a_inv, d, x);
        let denom = 1.0 + dot(x, &u);
        for i in 0..d {
            for j in 0..d {
                self.a_inv[i * d + j] -= u[i] * u[j] / denom;
                self.a[i * d + j] += x[i] * x[j];
            }
        }
        self.since_reinvert += 1;
        if self.since_reinvert >= REINVERT_EVERY {
            if let Some(inv) = spd_inverse(&self.a, d) {
                self.a_inv = inv;
            }
            self.since_reinvert = 0;
        }
    }

    /// Structural validation used when restoring serialized state.
    pub(crate) fn is_well_formed(&self) -> bool {
        let d = self.dim;
        d > 0
            && self.a.len() == d * d
            && self.a_inv.len() == d * d
            && self.b.len() == d
            && self
                .a
                .iter()
                .chain(&self.a_inv)
                .chain(&self.b)
                .all(|v| v.is_finite())
    }
}

/// Scores of every arm for context `x`, in order.
pub fn ucb_scores<'a>(
    arms: impl IntoIterator<Item = &'a ArmState>,
    x: &[f64],
    params: UcbParams,
) -> Result<Vec<f64>, BanditError> {
    arms.into_iter().map(|a| a.ucb_score(x, params)).collect()
}

/// Index of the maximal score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}

pub fn select_arm<'a>(
    arms: impl IntoIterator<Item = &'a ArmState>,
    x: &[f64],
    params: UcbParams,
) -> Result<usize, BanditError> {
    let scores = ucb_scores(arms, x, params)?;
    argmax(&scores).ok_or(BanditError::NoArms)
}
