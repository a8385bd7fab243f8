use super::duality::h_minus1_duality_lower_bound;
use super::geometric::geometric_mixing_scale;
use super::length_scale::largest_filled_ball;
use super::spectral::functional_mixing_scale;
use super::{BallQuery, DiagnosticsError, DEFAULT_PAD};
use crate::domain::{make_tiling, tile_is_mean_free, BlockParams, Tiling, TracerField};

/// `C` in `||rho||_{H^{-1}} <= C ||rho||_inf lambda` for tile-mean-free tracers,
/// calibrated on the checkerboard with tiles of side 1/4 and frozen.
pub const TILING_H1_CONSTANT: f64 = 0.104;

/// Outcome of the tiling lemma check.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TilingLemmaReport {
    /// Tile side.
    pub side: f64,
    pub geometric: f64,
    /// `(4 sqrt 2 / kappa) * side`.
    pub geometric_bound: f64,
    pub functional: f64,
    /// `TILING_H1_CONSTANT * ||rho||_inf * side`.
    pub functional_bound: f64,
    pub geometric_ok: bool,
    pub functional_ok: bool,
}

impl TilingLemmaReport {
    pub fn holds(&self) -> bool {
        self.geometric_ok && self.functional_ok
    }
}

/// Checks both upper bounds of the tiling lemma for a tracer with zero
/// average on every tile of `tiling`.
pub fn check_tiling_lemma(
    rho: &TracerField,
    tiling: &Tiling,
    kappa: f64,
) -> Result<TilingLemmaReport, DiagnosticsError> {
    if let Some(t) = tiling.tiles().find(|t| !tile_is_mean_free(rho, t)) {
        return Err(DiagnosticsError::TilesNotMeanFree { tx: t.tx, ty: t.ty });
    }
    let side = tiling.tile_side();
    let geometric = geometric_mixing_scale(rho, kappa)?.value;
    let functional = functional_mixing_scale(rho, DEFAULT_PAD)?;
    let geometric_bound = 4.0 * std::f64::consts::SQRT_2 / kappa * side;
    let functional_bound = TILING_H1_CONSTANT * rho.sup_norm() * side;
    Ok(TilingLemmaReport {
        side,
        geometric,
        geometric_bound,
        functional,
        functional_bound,
        geometric_ok: geometric <= geometric_bound,
        functional_ok: functional <= functional_bound,
    })
}

/// Outcome of the cellular lower bound check at one stage.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CellularLowerBoundReport {
    pub level: u32,
    /// `lambda^n`.
    pub scale: f64,
    /// `(3/4) a lambda^n`.
    pub required_radius: f64,
    pub witness: BallQuery,
    pub geometric: f64,
    /// `G / (a lambda^n)`.
    pub geometric_constant: f64,
    pub duality_bound: f64,
    pub functional: f64,
    /// `duality_bound / lambda^{2n}`.
    pub functional_constant: f64,
    pub geometric_ok: bool,
    pub functional_ok: bool,
}

impl CellularLowerBoundReport {
    pub fn holds(&self) -> bool {
        self.geometric_ok && self.functional_ok
    }
}

/// Relative slack allowed between the duality bound and the spectral norm.
const DUALITY_SLACK: f64 = 0.02;

/// Finds a filled ball of radius at least `(3/4) a lambda^n` inside some tile of
/// `T_{lambda^n}` and confirms that it bounds both mixing scales from below.
pub fn check_cellular_lower_bound(
    rho: &TracerField,
    level: u32,
    params: &BlockParams,
) -> Result<CellularLowerBoundReport, DiagnosticsError> {
    params
        .validate()
        .map_err(DiagnosticsError::InvalidParameter)?;
    let mask = rho
        .level_set()
        .ok_or_else(|| DiagnosticsError::InvalidParameter("tracer is not binary".to_string()))?;
    let tiling = make_tiling(params.lambda, level, rho.grid())?;
    let scale = tiling.tile_side();
    let required = 0.75 * params.a * scale;
    let threshold = params.fill_threshold();
    let mut found = None;
    for tile in tiling.tiles() {
        match largest_filled_ball(&mask, &tile.region(), threshold, required) {
            Ok(Some(ls)) => {
                found = Some(ls.witness_ball);
                break;
            }
            Ok(None) | Err(DiagnosticsError::EmptySet) => {}
            Err(e) => return Err(e),
        }
    }
    let witness = found.ok_or(DiagnosticsError::NoWitnessBall { required })?;
    let geometric = geometric_mixing_scale(rho, params.kappa)?.value;
    let duality_bound =
        h_minus1_duality_lower_bound(rho, witness.center, witness.radius, params.kappa)?;
    let functional = functional_mixing_scale(rho, DEFAULT_PAD)?;
    Ok(CellularLowerBoundReport {
        level,
        scale,
        required_radius: required,
        witness,
        geometric,
        geometric_constant: geometric / (params.a * scale),
        duality_bound,
        functional,
        functional_constant: duality_bound / (scale * scale),
        geometric_ok: geometric >= witness.radius,
        functional_ok: duality_bound <= functional * (1.0 + DUALITY_SLACK),
    })
}
