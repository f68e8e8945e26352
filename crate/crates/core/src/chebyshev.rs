//! Finite Chebyshev series of the first and second kinds.
//!
//! A series represents `offset + Σ c_k P_k(s·v)` where `P` is `T` or `U` and
//! `v` is the physical control variable (flux, time-integrated flux, ...).
//! Values are defined for every real `v`; nothing restricts `s·v` to
//! `[−1, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChebyshevKind {
    FirstKind,
    SecondKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevSeries {
    kind: ChebyshevKind,
    coeffs: Vec<f64>,
    scale: f64,
    offset: f64,
}

impl ChebyshevSeries {
    pub fn new(kind: ChebyshevKind, coeffs: Vec<f64>, scale: f64) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("coeffs", "must be finite"));
        }
        if !scale.is_finite() {
            return Err(Error::invalid("scale", "must be finite"));
        }
        Ok(ChebyshevSeries {
            kind,
            coeffs,
            scale,
            offset: 0.0,
        })
    }

    pub fn first_kind(coeffs: Vec<f64>, scale: f64) -> Result<Self> {
        Self::new(ChebyshevKind::FirstKind, coeffs, scale)
    }

    pub fn second_kind(coeffs: Vec<f64>, scale: f64) -> Result<Self> {
        Self::new(ChebyshevKind::SecondKind, coeffs, scale)
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn kind(&self) -> ChebyshevKind {
        self.kind
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Coefficient of `P_k`, zero past the stored length.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// Index of the last nonzero coefficient.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|&c| c != 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.offset == 0.0 && self.degree().is_none()
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut Vec<f64> {
        &mut self.coeffs
    }

    /// Clenshaw backward recurrence at control value `v`.
    pub fn eval(&self, v: f64) -> f64 {
        self.offset + clenshaw(self.kind, &self.coeffs, self.scale * v)
    }

    /// `d/dv` of a first-kind series as a second-kind series, using
    /// `T_k′ = k U_{k−1}` and the chain rule through `x = s·v`.
    pub fn differentiate_t_to_u(&self) -> Result<ChebyshevSeries> {
        if self.kind != ChebyshevKind::FirstKind {
            return Err(Error::invalid("series", "expected a first-kind series"));
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| k as f64 * c * self.scale)
            .collect();
        ChebyshevSeries::second_kind(coeffs, self.scale)
    }

    /// Antiderivative in `v` of a second-kind series, returned as a
    /// first-kind series with zero constant. Inverse of
    /// [`differentiate_t_to_u`](Self::differentiate_t_to_u) up to that constant.
    ///
    /// A nonzero offset or a zero scale has no first-kind antiderivative of
    /// this form and is rejected.
    pub fn integrate_u_to_t(&self) -> Result<ChebyshevSeries> {
        if self.kind != ChebyshevKind::SecondKind {
            return Err(Error::invalid("series", "expected a second-kind series"));
        }
        if self.offset != 0.0 {
            return Err(Error::invalid("series", "offset must be zero"));
        }
        if self.scale == 0.0 && self.degree().is_some() {
            return Err(Error::invalid("scale", "must be nonzero to integrate"));
        }
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(0.0);
        coeffs.extend(self.coeffs.iter().enumerate().map(|(k, &c)| {
            if c == 0.0 {
                0.0
            } else {
                c / ((k + 1) as f64 * self.scale)
            }
        }));
        ChebyshevSeries::first_kind(coeffs, self.scale)
    }

    /// Re-expresses a series in first-kind polynomials over the same argument.
    ///
    /// `U_n = 2(T_n + T_{n−2} + …)`, with the trailing `T_0` counted once.
    pub fn to_first_kind(&self) -> ChebyshevSeries {
        if self.kind == ChebyshevKind::FirstKind {
            return self.clone();
        }
        let len = self.coeffs.len();
        let mut out = vec![0.0; len];
        // suffix sums over indices of equal parity
        let mut tail = [0.0f64; 2];
        for j in (0..len).rev() {
            tail[j % 2] += self.coeffs[j];
            out[j] = if j == 0 { tail[0] } else { 2.0 * tail[j % 2] };
        }
        ChebyshevSeries {
            kind: ChebyshevKind::FirstKind,
            coeffs: out,
            scale: self.scale,
            offset: self.offset,
        }
    }

    /// `d/dv` of either kind, as a second-kind series.
    pub fn derivative(&self) -> ChebyshevSeries {
        self.to_first_kind()
            .differentiate_t_to_u()
            .expect("first-kind series always differentiates")
    }
}

fn clenshaw(kind: ChebyshevKind, coeffs: &[f64], x: f64) -> f64 {
    let Some((&c0, rest)) = coeffs.split_first() else {
        return 0.0;
    };
    let two_x = 2.0 * x;
    let (mut b1, mut b2) = (0.0, 0.0);
    for &c in rest.iter().rev() {
        let b0 = c + two_x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    match kind {
        ChebyshevKind::FirstKind => c0 + x * b1 - b2,
        ChebyshevKind::SecondKind => c0 + two_x * b1 - b2,
    }
}

/// Result of [`chebyshev_identity_suite`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    /// `max |T_n(cos θ) − cos nθ|`
    pub first_kind_error: f64,
    /// `max |U_{n−1}(cos θ) sin θ − sin nθ|`
    pub second_kind_error: f64,
}

impl IdentityReport {
    pub fn max_error(&self) -> f64 {
        self.first_kind_error.max(self.second_kind_error)
    }
}

/// Checks the trigonometric identities behind the synthesis formulas for
/// every `n ≤ n_max` on `points` equally spaced angles in `[0, π]`.
pub fn chebyshev_identity_suite(n_max: usize, points: usize) -> Result<IdentityReport> {
    if n_max < 1 {
        return Err(Error::invalid("n_max", "must be at least 1"));
    }
    if points < 2 {
        return Err(Error::invalid("points", "must be at least 2"));
    }
    let mut report = IdentityReport {
        first_kind_error: 0.0,
        second_kind_error: 0.0,
    };
    for n in 1..=n_max {
        let mut unit = vec![0.0; n + 1];
        unit[n] = 1.0;
        let t_n = ChebyshevSeries::first_kind(unit, 1.0)?;
        let mut unit = vec![0.0; n];
        unit[n - 1] = 1.0;
        let u_nm1 = ChebyshevSeries::second_kind(unit, 1.0)?;
        for j in 0..points {
            let theta = std::f64::consts::PI * j as f64 / (points - 1) as f64;
            let (s, c) = theta.sin_cos();
            let nt = n as f64 * theta;
            report.first_kind_error = report.first_kind_error.max((t_n.eval(c) - nt.cos()).abs());
            report.second_kind_error = report
                .second_kind_error
                .max((u_nm1.eval(c) * s - nt.sin()).abs());
        }
    }
    Ok(report)
}
