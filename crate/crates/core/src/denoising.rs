//! Perturbed edge queries and the decoder attention mask for denoising.
//!
//! Each valid ground-truth endpoint is displaced by independent uniform
//! offsets with `|dx| < lambda * w / 2` and `|dy| < lambda * h / 2` in image
//! units, then clamped back into the image. Each valid label flips with
//! probability `gamma`. Draw order is fixed (group, room, edge, endpoint,
//! axis, then the flip draw), so a seed reproduces the set bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::floorplan::{DirectedEdge, EdgeToken, Floorplan, ModelCapacity, Point2, RoomEdgeSequence};
use crate::matching::{PredictedRoom, PredictedToken, PredictionSet};
use crate::scalar::Scalar;

pub const DEFAULT_LAMBDA_GEO: f64 = 0.4;
pub const DEFAULT_GAMMA_FLIP: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseConfig<T> {
    pub lambda_geo: T,
    pub gamma_flip: T,
    pub seed: u64,
    /// Independent perturbed copies of the ground truth.
    pub groups: usize,
}

impl<T: Scalar> Default for NoiseConfig<T> {
    fn default() -> Self {
        NoiseConfig { lambda_geo: T::lit(DEFAULT_LAMBDA_GEO), gamma_flip: T::lit(DEFAULT_GAMMA_FLIP), seed: 0, groups: 1 }
    }
}

impl<T: Scalar> NoiseConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_geo >= T::zero()) || !self.lambda_geo.is_finite() {
            return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {}", self.lambda_geo)));
        }
        if !(self.gamma_flip >= T::zero() && self.gamma_flip <= T::one()) {
            return Err(Error::InvalidConfig(format!("gamma must be in [0,1], got {}", self.gamma_flip)));
        }
        if self.groups == 0 {
            return Err(Error::InvalidConfig("at least one perturbed group is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbedToken<T> {
    pub token: EdgeToken<T>,
    pub group: usize,
    /// Source `(room, edge)` in the ground truth.
    pub origin: (usize, usize),
    /// Pre-clamp offsets in normalized units, `[endpoint][axis]`.
    pub displacement: [[T; 2]; 2],
    pub flipped: bool,
}

/// Perturbed tokens, group-major then room-major then edge-minor.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedQuerySet<T> {
    tokens: Vec<PerturbedToken<T>>,
    groups: usize,
    capacity: ModelCapacity,
}

impl<T: Scalar> PerturbedQuerySet<T> {
    pub fn tokens(&self) -> &[PerturbedToken<T>] {
        &self.tokens
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn capacity(&self) -> ModelCapacity {
        self.capacity
    }

    pub fn group_tokens(&self, group: usize) -> &[PerturbedToken<T>] {
        let per = self.capacity.rooms * self.capacity.edges;
        &self.tokens[group * per..(group + 1) * per]
    }

    /// One group as a prediction set with 0/1 confidences.
    pub fn group_predictions(&self, group: usize) -> Result<PredictionSet<T>> {
        if group >= self.groups {
            return Err(Error::InvalidConfig(format!("group {group} out of {}", self.groups)));
        }
        let rooms = self
            .group_tokens(group)
            .chunks(self.capacity.edges)
            .map(|chunk| PredictedRoom {
                tokens: chunk.iter().map(|t| PredictedToken { confidence: t.token.label(), edge: t.token.edge }).collect(),
            })
            .collect();
        PredictionSet::new(rooms, self.capacity)
    }

    /// One group as a floorplan (flipped labels become padding flags).
    pub fn group_floorplan(&self, group: usize) -> Result<Floorplan<T>> {
        let rooms = self
            .group_tokens(group)
            .chunks(self.capacity.edges)
            .map(|chunk| RoomEdgeSequence::from_tokens(chunk.iter().map(|t| t.token).collect(), self.capacity))
            .collect::<Result<Vec<_>>>()?;
        Floorplan::new(rooms, self.capacity)
    }
}

fn sample_offset(rng: &mut ChaCha8Rng, half_range: f64) -> f64 {
    if half_range == 0.0 {
        return 0.0;
    }
    // Open interval: reject the (measure-zero) lower endpoint.
    loop {
        let u: f64 = rng.gen();
        let d = (2.0 * u - 1.0) * half_range;
        if d.abs() < half_range {
            return d;
        }
    }
}

/// Generates `cfg.groups` perturbed copies of `gt`. `width`/`height` are the
/// image extent the noise scale refers to; offsets are converted back to
/// normalized units before clamping to `[0,1]`.
pub fn perturb<T: Scalar>(gt: &Floorplan<T>, cfg: &NoiseConfig<T>, width: T, height: T) -> Result<PerturbedQuerySet<T>> {
    cfg.validate()?;
    if !(width > T::zero() && height > T::zero()) {
        return Err(Error::InvalidConfig("image extent must be positive".into()));
    }
    let lambda = cfg.lambda_geo.as_f64();
    let gamma = cfg.gamma_flip.as_f64();
    let (w, h) = (width.as_f64(), height.as_f64());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let capacity = gt.capacity();
    let mut tokens = Vec::with_capacity(cfg.groups * capacity.rooms * capacity.edges);

    for group in 0..cfg.groups {
        for (r, room) in gt.rooms().iter().enumerate() {
            for (e, token) in room.tokens().iter().enumerate() {
                let mut out = PerturbedToken {
                    token: *token,
                    group,
                    origin: (r, e),
                    displacement: [[T::zero(); 2]; 2],
                    flipped: false,
                };
                if token.valid {
                    let mut ends = [token.edge.p1, token.edge.p2];
                    for (k, end) in ends.iter_mut().enumerate() {
                        let dx = sample_offset(&mut rng, lambda * w / 2.0) / w;
                        let dy = sample_offset(&mut rng, lambda * h / 2.0) / h;
                        let (dx, dy) = (T::from_f64(dx).unwrap(), T::from_f64(dy).unwrap());
                        out.displacement[k] = [dx, dy];
                        *end = Point2::new(end.x + dx, end.y + dy).clamped();
                    }
                    out.token.edge = DirectedEdge::new(ends[0], ends[1]);
                    let u: f64 = rng.gen();
                    if u < gamma {
                        out.flipped = true;
                        out.token.valid = false;
                    }
                }
                tokens.push(out);
            }
        }
    }
    Ok(PerturbedQuerySet { tokens, groups: cfg.groups, capacity })
}

/// Fraction of valid ground-truth tokens whose perturbed label differs.
pub fn flip_rate<T: Scalar>(set: &PerturbedQuerySet<T>, gt: &Floorplan<T>) -> Result<f64> {
    if set.capacity() != gt.capacity() {
        return Err(Error::CapacityMismatch { left: set.capacity().as_pair(), right: gt.capacity().as_pair() });
    }
    let (mut valid, mut changed) = (0usize, 0usize);
    for t in set.tokens() {
        let src = &gt.rooms()[t.origin.0].tokens()[t.origin.1];
        if src.valid {
            valid += 1;
            if t.token.valid != src.valid {
                changed += 1;
            }
        }
    }
    Ok(if valid == 0 { 0.0 } else { changed as f64 / valid as f64 })
}

/// Boolean attention mask over `[perturbed groups | latent]` tokens;
/// `allowed(i, j)` means query `i` may attend to key `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttentionMask {
    groups: usize,
    group_size: usize,
    latent: usize,
    allowed: Vec<bool>,
}

impl AttentionMask {
    pub fn size(&self) -> usize {
        self.groups * self.group_size + self.latent
    }

    pub fn perturbed_len(&self) -> usize {
        self.groups * self.group_size
    }

    pub fn allowed(&self, query: usize, key: usize) -> bool {
        self.allowed[query * self.size() + key]
    }

    /// Group of token `i`, `None` for latent tokens.
    pub fn group_of(&self, i: usize) -> Option<usize> {
        (i < self.perturbed_len()).then(|| i / self.group_size)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.allowed
    }
}

pub fn build_attention_mask(groups: usize, group_size: usize, latent: usize) -> AttentionMask {
    let perturbed = groups * group_size;
    let size = perturbed + latent;
    let mut allowed = vec![false; size * size];
    for q in 0..size {
        for k in 0..size {
            allowed[q * size + k] = match (q < perturbed, k < perturbed) {
                (true, true) => q / group_size == k / group_size,
                (false, false) => true,
                _ => false,
            };
        }
    }
    AttentionMask { groups, group_size, latent, allowed }
}
