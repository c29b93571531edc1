//! Road profiles for the vehicle task: piecewise-constant friction segments
//! and cosine-ramped compound slopes, deterministic per seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MU_MIN: f64 = 0.1;
pub const MU_MAX: f64 = 1.0;
pub const LAT_SLOPE_CAP_DEG: f64 = 15.0;
pub const LON_SLOPE_CAP_DEG: f64 = 20.0;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub segment_len_min: f64,
    pub segment_len_max: f64,
    pub mu_low: f64,
    pub mu_high: f64,
    /// Fraction of segments drawn from the low-adhesion band.
    pub low_mu_fraction: f64,
    pub lat_slope_max_deg: f64,
    pub lon_slope_max_deg: f64,
}

impl Default for SegmentSpec {
    fn default() -> Self {
        Self {
            segment_len_min: 20.0,
            segment_len_max: 60.0,
            mu_low: MU_MIN,
            mu_high: MU_MAX,
            low_mu_fraction: 0.3,
            lat_slope_max_deg: LAT_SLOPE_CAP_DEG,
            lon_slope_max_deg: LON_SLOPE_CAP_DEG,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoadProfile {
    pub length: f64,
    pub seed: u64,
    /// (start_position, mu) with starts strictly increasing from 0.
    pub mu_segments: Vec<(f64, f64)>,
    /// Slope knots every `knot_spacing` meters, degrees.
    pub knot_spacing: f64,
    pub lat_slope_knots: Vec<f64>,
    pub lon_slope_knots: Vec<f64>,
}

impl RoadProfile {
    pub fn mu_at(&self, pos: f64) -> f64 {
        let p = pos.clamp(0.0, self.length);
        let idx = self
            .mu_segments
            .partition_point(|(start, _)| *start <= p)
            .saturating_sub(1);
        self.mu_segments[idx].1
    }

    fn slope_at(knots: &[f64], spacing: f64, pos: f64, length: f64) -> f64 {
        let p = pos.clamp(0.0, length);
        let i = ((p / spacing) as usize).min(knots.len().saturating_sub(2));
        let v0 = knots[i];
        let v1 = knots[i + 1];
        let t = (p - i as f64 * spacing) / spacing;
        // cosine ramp between knots keeps the profile C1
        v0 + (v1 - v0) * 0.5 * (1.0 - (std::f64::consts::PI * t).cos())
    }

    pub fn lateral_slope_deg(&self, pos: f64) -> f64 {
        Self::slope_at(&self.lat_slope_knots, self.knot_spacing, pos, self.length)
    }

    pub fn longitudinal_slope_deg(&self, pos: f64) -> f64 {
        Self::slope_at(&self.lon_slope_knots, self.knot_spacing, pos, self.length)
    }

    pub fn validate(&self) -> Result<()> {
        if self.length <= 0.0 {
            return Err(Error::InvalidArgument("road length must be positive".into()));
        }
        for (_, mu) in &self.mu_segments {
            if !(MU_MIN..=MU_MAX).contains(mu) {
                return Err(Error::InvalidArgument(format!("mu {mu} outside [{MU_MIN}, {MU_MAX}]")));
            }
        }
        let ok = |ks: &[f64], cap: f64| ks.iter().all(|k| k.abs() <= cap);
        if !ok(&self.lat_slope_knots, LAT_SLOPE_CAP_DEG)
            || !ok(&self.lon_slope_knots, LON_SLOPE_CAP_DEG)
        {
            return Err(Error::InvalidArgument("slope knots exceed caps".into()));
        }
        Ok(())
    }
}

pub fn generate_road(seed: u64, length: f64, spec: &SegmentSpec) -> Result<RoadProfile> {
    if length <= 0.0 {
        return Err(Error::InvalidArgument("road length must be positive".into()));
    }
    if spec.mu_low < MU_MIN
        || spec.mu_high > MU_MAX
        || spec.mu_low > spec.mu_high
        || spec.lat_slope_max_deg > LAT_SLOPE_CAP_DEG
        || spec.lon_slope_max_deg > LON_SLOPE_CAP_DEG
        || spec.segment_len_min <= 0.0
        || spec.segment_len_min > spec.segment_len_max
    {
        return Err(Error::InvalidArgument("segment spec violates road caps".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mu_segments = Vec::new();
    let mut pos = 0.0;
    while pos < length {
        let low = rng.gen::<f64>() < spec.low_mu_fraction;
        let mu = if low {
            rng.gen_range(spec.mu_low..=(spec.mu_low + 0.25 * (spec.mu_high - spec.mu_low)))
        } else {
            rng.gen_range((spec.mu_low + 0.5 * (spec.mu_high - spec.mu_low))..=spec.mu_high)
        };
        mu_segments.push((pos, mu));
        pos += rng.gen_range(spec.segment_len_min..=spec.segment_len_max);
    }

    let knot_spacing = 50.0;
    let n_knots = (length / knot_spacing).ceil() as usize + 2;
    let lat_slope_knots: Vec<f64> = (0..n_knots)
        .map(|_| rng.gen_range(-spec.lat_slope_max_deg..=spec.lat_slope_max_deg))
        .collect();
    let lon_slope_knots: Vec<f64> = (0..n_knots)
        .map(|_| rng.gen_range(-spec.lon_slope_max_deg..=spec.lon_slope_max_deg))
        .collect();

    let road = RoadProfile {
        length,
        seed,
        mu_segments,
        knot_spacing,
        lat_slope_knots,
        lon_slope_knots,
    };
    road.validate()?;
    Ok(road)
}
