//! Inference-time interventions: contrastive SAE latent clamping with an
//! intensity coefficient, and the mean-difference (ActAdd) baseline, both
//! packaged as [`Intervention`] transforms for the model.

use serde::{Deserialize, Serialize};

use crate::contrastive::LatentStatsFile;
use crate::error::{Error, Result};
use crate::model::{HookPoint, Intervention, PositionPolicy};
use crate::numerics::Vector;
use crate::sae::{SaeParams, SparseLatents};

/// How the clamped reconstruction re-enters the residual stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SteerMode {
    /// Replace the activation with `alpha * decode(x_clamped)`.
    #[default]
    Replace,
    /// Add `alpha * (decode(x_clamped) - decode(encode(z)))` to the
    /// activation, keeping the SAE reconstruction error out of the edit.
    Delta,
}

/// A complete, serializable SAE steering intervention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringSpec {
    pub layer: usize,
    pub alpha: f64,
    pub mode: SteerMode,
    /// `(latent index, expected logit under the positive set)`; raised to
    /// the expectation when observed below it.
    pub promoted: Vec<(usize, f64)>,
    /// `(latent index, expected logit under the negative set)`; lowered to
    /// the expectation when observed above it.
    pub demoted: Vec<(usize, f64)>,
}

impl SteeringSpec {
    /// Assemble from a selection file plus the run's alpha and mode.
    pub fn from_stats_file(stats: &LatentStatsFile, alpha: f64, mode: SteerMode) -> SteeringSpec {
        SteeringSpec {
            layer: stats.layer,
            alpha,
            mode,
            promoted: stats.promoted.clone(),
            demoted: stats.demoted.clone(),
        }
    }

    /// Disjoint promoted/demoted indices, nonnegative expectations and alpha.
    pub fn validate(&self) -> Result<()> {
        if self.alpha < 0.0 {
            return Err(Error::InvalidArg(format!(
                "alpha must be nonnegative, got {}",
                self.alpha
            )));
        }
        for &(i, e) in self.promoted.iter().chain(&self.demoted) {
            if e < 0.0 {
                return Err(Error::InvalidArg(format!(
                    "expectation for latent {i} is negative ({e})"
                )));
            }
        }
        for (i, _) in &self.promoted {
            if self.demoted.iter().any(|(j, _)| j == i) {
                return Err(Error::InvalidArg(format!(
                    "latent {i} appears in both promoted and demoted sets"
                )));
            }
        }
        Ok(())
    }
}

/// Mean-difference steering baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct ActAddSpec {
    pub layer: usize,
    pub alpha: f64,
    pub delta: Vector,
}

impl ActAddSpec {
    /// The conventional default intensity for this baseline.
    pub const DEFAULT_ALPHA: f64 = 2.0;

    pub fn new(layer: usize, alpha: f64, delta: Vector) -> ActAddSpec {
        ActAddSpec {
            layer,
            alpha,
            delta,
        }
    }
}

/// One-sided clamping: promoted latents are raised to their expectation when
/// below it, demoted latents lowered when above it. Untouched latents pass
/// through bit-identical.
pub fn clamp_latents(x: &SparseLatents, spec: &SteeringSpec) -> Result<SparseLatents> {
    let m = x.len();
    let mut values = x.values.clone();
    for &(i, expectation) in &spec.promoted {
        if i >= m {
            return Err(Error::LatentOutOfRange { index: i, m });
        }
        if values[i] < expectation {
            values[i] = expectation;
        }
    }
    for &(i, expectation) in &spec.demoted {
        if i >= m {
            return Err(Error::LatentOutOfRange { index: i, m });
        }
        if values[i] > expectation {
            values[i] = expectation;
        }
    }
    Ok(SparseLatents::from_values(values))
}

/// Contrastive SAE steering of one activation vector.
///
/// Encodes `z`, clamps the selected latents toward their expected logits,
/// then either returns `alpha * decode(x_clamped)` (`Replace`) or
/// `z + alpha * (decode(x_clamped) - decode(encode(z)))` (`Delta`).
pub fn sae_contrastive_steer(
    z: &Vector,
    sae: &SaeParams,
    spec: &SteeringSpec,
) -> Result<Vector> {
    let x = sae.encode(z)?;
    let clamped = clamp_latents(&x, spec)?;
    match spec.mode {
        SteerMode::Replace => Ok(sae.decode(&clamped)?.scale(spec.alpha)),
        SteerMode::Delta => {
            if spec.alpha == 0.0 {
                return Ok(z.clone());
            }
            let edited = sae.decode(&clamped)?;
            let reconstructed = sae.decode(&x)?;
            let mut out = z.clone();
            out.axpy(spec.alpha, &edited.sub(&reconstructed));
            Ok(out)
        }
    }
}

/// Mean difference between two equal-size activation sets.
pub fn actadd_delta(z_plus: &[Vector], z_minus: &[Vector]) -> Result<Vector> {
    if z_plus.is_empty() || z_minus.is_empty() {
        return Err(Error::EmptyInput("actadd activation sets"));
    }
    if z_plus.len() != z_minus.len() {
        return Err(Error::DimMismatch {
            op: "actadd_delta",
            expected: format!("{} negative activations", z_plus.len()),
            got: format!("{}", z_minus.len()),
        });
    }
    let d = z_plus[0].len();
    let mut delta = Vector::zeros(d);
    for z in z_plus {
        if z.len() != d {
            return Err(Error::DimMismatch {
                op: "actadd_delta",
                expected: format!("activations of length {d}"),
                got: format!("{}", z.len()),
            });
        }
        delta.axpy(1.0, z);
    }
    for z in z_minus {
        if z.len() != d {
            return Err(Error::DimMismatch {
                op: "actadd_delta",
                expected: format!("activations of length {d}"),
                got: format!("{}", z.len()),
            });
        }
        delta.axpy(-1.0, z);
    }
    Ok(delta.scale(1.0 / z_plus.len() as f64))
}

/// `z + alpha * delta`.
pub fn apply_actadd(z: &Vector, spec: &ActAddSpec) -> Result<Vector> {
    if z.len() != spec.delta.len() {
        return Err(Error::DimMismatch {
            op: "apply_actadd",
            expected: format!("activation of length {}", spec.delta.len()),
            got: format!("{}", z.len()),
        });
    }
    let mut out = z.clone();
    out.axpy(spec.alpha, &spec.delta);
    Ok(out)
}

/// Either steering method, for binding into a model hook.
#[derive(Debug, Clone)]
pub enum SteerMethodSpec {
    SaeContrastive(SteeringSpec),
    ActAdd(ActAddSpec),
}

/// Bind a spec to a model hook as a stateless, reusable transform. SAE
/// specs require the SAE whose latent space they index.
pub fn make_intervention(
    spec: &SteerMethodSpec,
    sae: Option<&SaeParams>,
    positions: PositionPolicy,
) -> Result<Intervention> {
    match spec {
        SteerMethodSpec::SaeContrastive(spec) => {
            spec.validate()?;
            let sae = sae.ok_or(Error::Missing("SAE for contrastive steering"))?.clone();
            let spec = spec.clone();
            Ok(
                Intervention::new(HookPoint { layer: spec.layer }, move |z| {
                    sae_contrastive_steer(z, &sae, &spec)
                })
                .with_positions(positions),
            )
        }
        SteerMethodSpec::ActAdd(spec) => {
            let spec = spec.clone();
            Ok(
                Intervention::new(HookPoint { layer: spec.layer }, move |z| {
                    apply_actadd(z, &spec)
                })
                .with_positions(positions),
            )
        }
    }
}
