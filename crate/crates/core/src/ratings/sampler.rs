use super::law::conditional_magnitude;
use super::params::{tendency_bit, FirmState, ModelParams, RatingClass, TendencyVector};
use super::ModelError;
use crate::rng::{cumulative, sample_cumulative, Stream};

/// Precomputed inverse-CDF tables for repeated joint steps under one model.
///
/// Draw order per step: one uniform for χ, then for each non-defaulted firm
/// in index order one uniform for δ and one for the selected component.
#[derive(Debug, Clone)]
pub struct JointSampler {
    m: usize,
    sectors: usize,
    chi_cdf: Vec<f64>,
    row_cdf: Vec<Vec<f64>>,
    up_cdf: Vec<Option<Vec<f64>>>,
    down_cdf: Vec<Option<Vec<f64>>>,
    q: Vec<Vec<f64>>,
}

impl JointSampler {
    pub fn new(params: &ModelParams) -> Self {
        let m = params.m();
        let row_cdf = (1..=m).map(|i| cumulative(params.p.row(i))).collect();
        let up_cdf = (1..=m)
            .map(|i| conditional_magnitude(&params.p, i, true).ok().map(|d| cumulative(&d)))
            .collect();
        let down_cdf = (1..=m)
            .map(|i| conditional_magnitude(&params.p, i, false).ok().map(|d| cumulative(&d)))
            .collect();
        Self {
            m,
            sectors: params.sectors,
            chi_cdf: cumulative(params.chi.masses()),
            row_cdf,
            up_cdf,
            down_cdf,
            q: params.q.rows().to_vec(),
        }
    }

    pub fn draw_tendency(&self, rng: &mut Stream) -> TendencyVector {
        sample_cumulative(&self.chi_cdf, rng.uniform()) as TendencyVector
    }

    /// Advances `ratings` in place by one period. `sectors[n]` is firm n's sector.
    pub fn step_in_place(
        &self,
        ratings: &mut [RatingClass],
        sectors: &[usize],
        rng: &mut Stream,
    ) -> Result<TendencyVector, ModelError> {
        let default = (self.m + 1) as RatingClass;
        let chi = self.draw_tendency(rng);
        for (r, &s) in ratings.iter_mut().zip(sectors) {
            if *r == default {
                continue;
            }
            let from = *r as usize;
            let q = self.q[from - 1][s - 1];
            let idiosyncratic = rng.uniform() < q;
            let cdf = if idiosyncratic {
                &self.row_cdf[from - 1]
            } else {
                let up = tendency_bit(chi, from);
                let table = if up {
                    &self.up_cdf[from - 1]
                } else {
                    &self.down_cdf[from - 1]
                };
                table.as_ref().ok_or(ModelError::DegenerateTendency {
                    class: from,
                    tendency: up,
                })?
            };
            *r = (sample_cumulative(cdf, rng.uniform()) + 1) as RatingClass;
        }
        Ok(chi)
    }

    pub fn step(&self, states: &[FirmState], rng: &mut Stream) -> Result<Vec<RatingClass>, ModelError> {
        let mut ratings: Vec<RatingClass> = states.iter().map(|s| s.rating).collect();
        let sectors: Vec<usize> = states.iter().map(|s| s.sector).collect();
        for s in states {
            if s.rating == 0 || s.rating as usize > self.m + 1 || s.sector == 0 || s.sector > self.sectors {
                return Err(ModelError::State(format!("firm state {s:?} out of range")));
            }
        }
        self.step_in_place(&mut ratings, &sectors, rng)?;
        Ok(ratings)
    }
}

/// One joint transition of every firm: draw χ once, then per firm δ, ξ and η.
/// Defaulted firms are returned unchanged.
pub fn step_joint(
    params: &ModelParams,
    states: &[FirmState],
    rng: &mut Stream,
) -> Result<Vec<RatingClass>, ModelError> {
    JointSampler::new(params).step(states, rng)
}
