//! Mixedness measurements: geometric mixing scale, spectral `H^{-1}` norm,
//! its duality lower bound and the characteristic length scale, plus the two
//! lemma checks built on them.

mod balls;
mod duality;
mod geometric;
mod lemmas;
mod length_scale;
mod spectral;

pub use balls::{ball_average, radius_ladder, BallQuery, BallStencil, LADDER_STEP};
pub use duality::{bump_gradient_norm, duality_pairing, h_minus1_duality_lower_bound};
pub use geometric::{geometric_mixing_scale, GeometricScale};
pub use lemmas::{
    check_cellular_lower_bound, check_tiling_lemma, CellularLowerBoundReport, TilingLemmaReport,
    TILING_H1_CONSTANT,
};
pub use length_scale::{characteristic_length_scale, LengthScaleResult};
pub use spectral::{
    functional_convergence, functional_mixing_scale, periodic_h_minus1, PadConvergence,
};

use thiserror::Error;

use crate::domain::DomainError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("tracer vanishes identically")]
    ZeroField,
    #[error("tracer mean {mean:e} is not zero")]
    NotMeanFree { mean: f64 },
    #[error("pad factor must be at least 2, got {0}")]
    PadTooSmall(usize),
    #[error("ball average {ratio:.4} of the sup norm does not exceed kappa {kappa}")]
    BallNotUnmixed { ratio: f64, kappa: f64 },
    #[error("set is empty")]
    EmptySet,
    #[error("no ladder radius up to 1 has every ball mixed")]
    NoPassingRadius,
    #[error("tile ({tx},{ty}) has nonzero average")]
    TilesNotMeanFree { tx: usize, ty: usize },
    #[error("no ball of radius >= {required:.5} is filled above the threshold")]
    NoWitnessBall { required: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Both mixing scales of one tracer.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MixingScales {
    pub geometric: f64,
    pub functional: f64,
    pub kappa: f64,
}

/// Default zero-padding factor of the spectral norm.
pub const DEFAULT_PAD: usize = 2;

pub fn mixing_scales(
    rho: &crate::domain::TracerField,
    kappa: f64,
) -> Result<MixingScales, DiagnosticsError> {
    Ok(MixingScales {
        geometric: geometric_mixing_scale(rho, kappa)?.value,
        functional: functional_mixing_scale(rho, DEFAULT_PAD)?,
        kappa,
    })
}
