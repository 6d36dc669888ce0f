//! Majority voter for replicated task groups.

use std::collections::BTreeMap;

/// Ballots collected for one round of one group.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteRound {
    pub group: u32,
    pub round: u64,
    pub members: Vec<u32>,
    pub ballots: BTreeMap<u32, i64>,
    pub deadline: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteOutcome {
    pub winner: Option<i64>,
    /// Members that voted differently from the winner or not at all; every
    /// member when there is no winner.
    pub minority: Vec<u32>,
}

impl VoteRound {
    pub fn new(group: u32, round: u64, members: Vec<u32>, deadline: f64) -> Self {
        VoteRound {
            group,
            round,
            members,
            ballots: BTreeMap::new(),
            deadline,
        }
    }

    /// Accepts the first ballot of a member; later ones and ballots from
    /// non-members are refused.
    pub fn submit(&mut self, member: u32, value: i64) -> bool {
        if !self.members.contains(&member) || self.ballots.contains_key(&member) {
            return false;
        }
        self.ballots.insert(member, value);
        true
    }
}

/// The winner is the value held by a strict majority of the submitted
/// ballots.
pub fn vote(round: &VoteRound) -> VoteOutcome {
    let mut tally: BTreeMap<i64, usize> = BTreeMap::new();
    for v in round.ballots.values() {
        *tally.entry(*v).or_default() += 1;
    }
    let submitted = round.ballots.len();
    let winner = tally
        .into_iter()
        .find(|(_, c)| 2 * c > submitted)
        .map(|(v, _)| v);
    let minority = round
        .members
        .iter()
        .copied()
        .filter(|m| winner.is_none() || round.ballots.get(m) != winner.as_ref())
        .collect();
    VoteOutcome { winner, minority }
}
