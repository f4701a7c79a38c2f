//! Sampled infimum of `E` on the sphere `||u|| = rho`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::energy;
use crate::error::{Error, Result};
use crate::fem::DiscreteField;
use crate::nonlinearity::NonlinearitySpec;
use crate::spectral::{AssembledForms, SpectralSplit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereOptions {
    pub samples: usize,
    pub seed: u64,
}

impl Default for SphereOptions {
    fn default() -> Self {
        SphereOptions { samples: 500, seed: 0x5eed }
    }
}

/// Minimum of `E` over the sampled sphere. This is an upper bound on the true infimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereInfimum {
    pub rho: f64,
    pub min: f64,
    /// Index of the minimizing sample; extra directions follow the random ones.
    pub argmin: usize,
    pub samples: usize,
    pub extra: usize,
    pub seed: u64,
    pub projected_to_w: bool,
    pub upper_bound: bool,
}

/// Smooth random fields `K^-1 M xi` with `xi` uniform on `[-1, 1]` at each node.
pub fn random_smooth_fields(forms: &AssembledForms, count: usize, seed: u64) -> Vec<DiscreteField> {
    let n = forms.num_dofs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<DiscreteField> =
        (0..count).map(|_| DiscreteField::from_vec((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())).collect();
    noise
        .par_iter()
        .map(|xi| DiscreteField::from_vector(forms.solve_stiffness(&forms.mass().mul_vec(xi.coeffs()))))
        .collect()
}

/// Samples `E` on `||u|| = rho`; with a split, every direction is first projected onto `W`.
pub fn sphere_infimum(
    forms: &AssembledForms,
    spec: &NonlinearitySpec,
    rho: f64,
    opts: &SphereOptions,
    split: Option<&SpectralSplit>,
    extra: &[DiscreteField],
) -> Result<SphereInfimum> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::InvalidParameter(format!("sphere radius must be positive, got {rho}")));
    }
    if opts.samples == 0 && extra.is_empty() {
        return Err(Error::InvalidParameter("sphere sampling needs at least one direction".into()));
    }
    let mut dirs = random_smooth_fields(forms, opts.samples, opts.seed);
    dirs.extend(extra.iter().cloned());
    let values: Vec<f64> = dirs
        .par_iter()
        .map(|u| {
            let u = match split {
                Some(s) => s.project_w(u),
                None => u.clone(),
            };
            let n = forms.norm(&u);
            if n == 0.0 {
                return Ok(f64::INFINITY);
            }
            Ok(energy(&u.scaled(rho / n), forms, spec)?.total)
        })
        .collect::<Result<_>>()?;
    let (argmin, min) = values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
    Ok(SphereInfimum {
        rho,
        min,
        argmin,
        samples: opts.samples,
        extra: extra.len(),
        seed: opts.seed,
        projected_to_w: split.is_some(),
        upper_bound: true,
    })
}
