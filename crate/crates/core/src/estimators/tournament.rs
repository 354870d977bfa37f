use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Dataset;

use super::median::median_1d;
use super::{dot, l2_dist};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TournamentOutcome {
    pub winner: usize,
    pub estimate: Vec<f64>,
    pub losses: Vec<usize>,
}

/// Pairwise comparisons on fresh data: along the line through two candidates, the one
/// whose projection is farther from the projected sample median takes a loss. Pairs closer
/// than `delta` are not compared. Fewest losses wins; ties go to the lowest index.
pub fn tournament_detailed(candidates: &[Vec<f64>], data: &Dataset, delta: f64) -> Result<TournamentOutcome> {
    if candidates.is_empty() {
        return Err(Error::EmptyData("tournament needs at least one candidate".into()));
    }
    let mut losses = vec![0usize; candidates.len()];
    if candidates.len() > 1 {
        if data.visible_count() == 0 {
            return Err(Error::EmptyData("tournament needs visible samples".into()));
        }
        for i in 0..candidates.len() {
            for j in i + 1..candidates.len() {
                let (a, b) = (&candidates[i], &candidates[j]);
                let gap = l2_dist(a, b);
                if gap <= delta {
                    continue;
                }
                let w: Vec<f64> = b.iter().zip(a).map(|(x, y)| (x - y) / gap).collect();
                let med = median_1d(&data.project(&w)?)?;
                if (dot(&w, a) - med).abs() > (dot(&w, b) - med).abs() {
                    losses[i] += 1;
                } else {
                    losses[j] += 1;
                }
            }
        }
    }
    let winner = (0..candidates.len()).min_by_key(|&i| (losses[i], i)).expect("non-empty");
    Ok(TournamentOutcome { winner, estimate: candidates[winner].clone(), losses })
}

pub fn tournament_improve(candidates: &[Vec<f64>], data: &Dataset, delta: f64) -> Result<Vec<f64>> {
    Ok(tournament_detailed(candidates, data, delta)?.estimate)
}
