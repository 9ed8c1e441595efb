//! The leader/challenger round of Dirichlet Sampling.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::history::ArmHistory;
use super::index::{bds_index, npts_index, qds_index, rds_index, Leverage};
use crate::error::{Error, Result};

/// The index used in the second duel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DsIndex {
    Npts { bound: f64 },
    Bds { rho: f64, gamma: f64 },
    Rds { leverage: Leverage },
    Qds { rho: f64, alpha: f64 },
}

impl DsIndex {
    pub fn draw<R: Rng + ?Sized>(&self, history: &ArmHistory, leader_mean: f64, rng: &mut R) -> f64 {
        match self {
            DsIndex::Npts { bound } => npts_index(history, *bound, rng),
            DsIndex::Bds { rho, gamma } => bds_index(history, leader_mean, *gamma, *rho, rng),
            DsIndex::Rds { leverage } => rds_index(history, leader_mean, leverage, rng),
            DsIndex::Qds { rho, alpha } => qds_index(history, leader_mean, *alpha, *rho, rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DuelOutcome {
    pub arm: usize,
    pub won_by_mean: bool,
    pub won_by_index: bool,
    pub eliminated_equal_count: bool,
}

impl DuelOutcome {
    pub fn won(&self) -> bool {
        self.won_by_mean || self.won_by_index
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundDecision {
    /// Arms to pull this round, in pull order.
    pub pulled_arms: Vec<usize>,
    pub leader: usize,
    /// One entry per non-leader arm, in arm order.
    pub duel_outcomes: Vec<DuelOutcome>,
}

impl RoundDecision {
    /// Checks the structural invariants of a decision taken on `histories`.
    pub fn check(&self, histories: &[ArmHistory]) -> std::result::Result<(), String> {
        let k = histories.len();
        if self.leader >= k {
            return Err(format!("leader {} out of range", self.leader));
        }
        let n_leader = histories[self.leader].len();
        if histories.iter().any(|h| h.len() > n_leader) {
            return Err("leader does not have the largest sample".into());
        }
        if self.pulled_arms.is_empty() {
            return Err("no arm pulled".into());
        }
        if self.duel_outcomes.len() != k - 1 {
            return Err("one duel outcome per challenger expected".into());
        }
        let mut winners = Vec::new();
        for o in &self.duel_outcomes {
            if o.arm == self.leader || o.arm >= k {
                return Err(format!("bad challenger {}", o.arm));
            }
            let flags = [o.won_by_mean, o.won_by_index, o.eliminated_equal_count];
            if flags.iter().filter(|&&f| f).count() > 1 {
                return Err(format!("conflicting flags for arm {}", o.arm));
            }
            if o.eliminated_equal_count != (histories[o.arm].len() == n_leader) {
                return Err(format!("elimination flag wrong for arm {}", o.arm));
            }
            if o.won_by_mean && histories[o.arm].mean() < histories[self.leader].mean() {
                return Err(format!("arm {} won by mean with a lower mean", o.arm));
            }
            if o.won() {
                winners.push(o.arm);
            }
        }
        let mut pulled = self.pulled_arms.clone();
        pulled.sort_unstable();
        if winners.is_empty() {
            if pulled != [self.leader] {
                return Err("leader must be pulled alone when no challenger wins".into());
            }
        } else if pulled != winners {
            return Err("pulled arms must be exactly the winners".into());
        }
        Ok(())
    }
}

/// Arm with the largest sample; ties go to the best empirical mean, then to a
/// uniform draw. The stream is only used when a random tie-break is needed.
pub fn select_leader<R: Rng + ?Sized>(histories: &[ArmHistory], rng: &mut R) -> Result<usize> {
    if histories.is_empty() {
        return Err(Error::invalid("leader selection needs at least one arm"));
    }
    if histories.iter().any(ArmHistory::is_empty) {
        return Err(Error::invalid("every arm must be pulled once before selecting a leader"));
    }
    let n_max = histories.iter().map(ArmHistory::len).max().unwrap();
    let best_mean = histories
        .iter()
        .filter(|h| h.len() == n_max)
        .map(ArmHistory::mean)
        .fold(f64::NEG_INFINITY, f64::max);
    let candidates: Vec<usize> = (0..histories.len())
        .filter(|&k| histories[k].len() == n_max && histories[k].mean() == best_mean)
        .collect();
    Ok(match candidates.len() {
        1 => candidates[0],
        c => candidates[rng.random_range(0..c)],
    })
}

/// One round after initialization: leader choice, duels in arm order, shuffle.
pub fn ds_round<R: Rng + ?Sized>(
    histories: &[ArmHistory],
    index: &DsIndex,
    rng: &mut R,
) -> Result<RoundDecision> {
    let leader = select_leader(histories, rng)?;
    let n_leader = histories[leader].len();
    let leader_mean = histories[leader].mean();

    let mut duel_outcomes = Vec::with_capacity(histories.len().saturating_sub(1));
    let mut winners = Vec::new();
    for (arm, history) in histories.iter().enumerate() {
        if arm == leader {
            continue;
        }
        let mut outcome = DuelOutcome {
            arm,
            won_by_mean: false,
            won_by_index: false,
            eliminated_equal_count: false,
        };
        if history.len() == n_leader {
            outcome.eliminated_equal_count = true;
        } else if history.mean() >= leader_mean {
            outcome.won_by_mean = true;
        } else if index.draw(history, leader_mean, rng) >= leader_mean {
            outcome.won_by_index = true;
        }
        if outcome.won() {
            winners.push(arm);
        }
        duel_outcomes.push(outcome);
    }

    let pulled_arms = if winners.is_empty() {
        vec![leader]
    } else {
        winners.shuffle(rng);
        winners
    };
    Ok(RoundDecision {
        pulled_arms,
        leader,
        duel_outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hist(values: &[f64]) -> ArmHistory {
        ArmHistory::from_observations(values)
    }

    #[test]
    fn leader_by_count_then_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let hs = [hist(&[0.0; 5]), hist(&[1.0; 3]), hist(&[1.0; 2])];
        assert_eq!(select_leader(&hs, &mut rng).unwrap(), 0);
        let hs = [hist(&[0.2; 4]), hist(&[0.7; 4])];
        assert_eq!(select_leader(&hs, &mut rng).unwrap(), 1);
        assert!(select_leader(&[], &mut rng).is_err());
        assert!(select_leader(&[hist(&[1.0]), hist(&[])], &mut rng).is_err());
    }

    #[test]
    fn leader_ties_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let hs = [hist(&[0.5; 4]), hist(&[0.5; 4])];
        let ones = (0..10_000).filter(|_| select_leader(&hs, &mut rng).unwrap() == 1).count();
        assert_abs_diff_eq!(ones as f64 / 1e4, 0.5, epsilon = 0.02);
    }

    #[test]
    fn first_duel_short_circuits() {
        // The leader history is long, so a draw from the index would consume the stream.
        let hs = [hist(&[0.5; 10]), hist(&[0.9])];
        let mut a = ChaCha8Rng::seed_from_u64(2);
        let d = ds_round(&hs, &DsIndex::Npts { bound: 1.0 }, &mut a).unwrap();
        assert_eq!(d.pulled_arms, vec![1]);
        assert!(d.duel_outcomes[0].won_by_mean);
        let mut b = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(a.random::<u64>(), b.random::<u64>());
    }

    #[test]
    fn equal_counts_are_eliminated() {
        let hs = [hist(&[0.9, 0.1]), hist(&[0.6, 0.6]), hist(&[0.0, 1.0])];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = ds_round(&hs, &DsIndex::Npts { bound: 1.0 }, &mut rng).unwrap();
        assert_eq!(d.leader, 1);
        assert_eq!(d.pulled_arms, vec![1]);
        assert!(d.duel_outcomes.iter().all(|o| o.eliminated_equal_count));
        d.check(&hs).unwrap();
    }

    #[test]
    fn npts_win_probability_matches_beta_tail() {
        // Points (0, 0, 1) at mu = 0.5: the weight on 1 is Beta(1, 2), P(w >= 0.5) = 0.25.
        let hs = [hist(&[0.5; 5]), hist(&[0.0, 0.0])];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rounds = 100_000;
        let wins = (0..rounds)
            .filter(|_| {
                let d = ds_round(&hs, &DsIndex::Npts { bound: 1.0 }, &mut rng).unwrap();
                d.duel_outcomes[0].won_by_index
            })
            .count();
        assert_abs_diff_eq!(wins as f64 / rounds as f64, 0.25, epsilon = 0.005);
    }

    #[test]
    fn winners_are_all_pulled() {
        let hs = [hist(&[0.5; 6]), hist(&[0.9]), hist(&[0.8, 0.7]), hist(&[0.1])];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = ds_round(&hs, &DsIndex::Rds { leverage: Leverage::SqrtLog }, &mut rng).unwrap();
        d.check(&hs).unwrap();
        let mut pulled = d.pulled_arms.clone();
        pulled.sort_unstable();
        assert!(pulled.starts_with(&[1, 2]));
    }

    #[test]
    fn check_catches_violations() {
        let hs = [hist(&[0.5; 3]), hist(&[0.1])];
        let bad = RoundDecision {
            pulled_arms: vec![],
            leader: 0,
            duel_outcomes: vec![],
        };
        assert!(bad.check(&hs).is_err());
        let bad = RoundDecision {
            pulled_arms: vec![0, 1],
            leader: 0,
            duel_outcomes: vec![DuelOutcome {
                arm: 1,
                won_by_mean: false,
                won_by_index: true,
                eliminated_equal_count: false,
            }],
        };
        assert!(bad.check(&hs).is_err());
    }
}
