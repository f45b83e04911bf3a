//! Two-player matrix benchmarks.

use serde::{Deserialize, Serialize};

use crate::game::MatrixGame;

fn labels(rows: &[&str], cols: &[&str]) -> Vec<Vec<String>> {
    vec![
        rows.iter().map(|s| s.to_string()).collect(),
        cols.iter().map(|s| s.to_string()).collect(),
    ]
}

fn identical_interest_diagonal(n: usize) -> MatrixGame {
    MatrixGame::from_fn(vec![n, n], |j| {
        let r = if j[0] == j[1] { 1.0 } else { 0.0 };
        vec![r, r]
    })
    .expect("diagonal game is well formed")
    .with_potential_fn(|j| if j[0] == j[1] { 1.0 } else { 0.0 })
}

/// Two-action coordination game: `(U,L)` and `(D,R)` pay 1 to both players.
pub fn coordination_game() -> MatrixGame {
    identical_interest_diagonal(2)
        .with_labels(labels(&["U", "D"], &["L", "R"]))
        .expect("two labels per player")
}

/// Three-action force-matching game: equal forces pay 1 to both players.
pub fn three_action_game() -> MatrixGame {
    let forces = ["Weak", "Fair", "Strong"];
    identical_interest_diagonal(3)
        .with_labels(labels(&forces, &forces))
        .expect("three labels per player")
}

/// Matching pennies: the row player wins on a match, the column player otherwise.
pub fn matching_pennies() -> MatrixGame {
    MatrixGame::bimatrix(&[
        vec![(1.0, -1.0), (-1.0, 1.0)],
        vec![(-1.0, 1.0), (1.0, -1.0)],
    ])
    .expect("2x2 bimatrix")
    .with_labels(labels(&["Head", "Tail"], &["Head", "Tail"]))
    .expect("two labels per player")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetricKind {
    TwoAction,
    ThreeAction,
}

pub fn build_symmetric_game(kind: SymmetricKind) -> MatrixGame {
    match kind {
        SymmetricKind::TwoAction => coordination_game(),
        SymmetricKind::ThreeAction => three_action_game(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{format_joint, verify_exact_potential, Game, DEFAULT_ENUMERATION_CAP};

    #[test]
    fn table_entries() {
        let g2 = build_symmetric_game(SymmetricKind::TwoAction);
        assert_eq!(g2.rewards(&[0, 0]), vec![1.0, 1.0]);
        assert_eq!(format_joint(&g2, &[0, 1]), "(U,R)");
        let g3 = build_symmetric_game(SymmetricKind::ThreeAction);
        assert_eq!(g3.rewards(&[1, 1]), vec![1.0, 1.0]);
        assert_eq!(g3.rewards(&[0, 2]), vec![0.0, 0.0]);
        assert_eq!(g3.action_label(1, 2), "Strong");
    }

    #[test]
    fn shared_payoff_is_an_exact_potential() {
        for kind in [SymmetricKind::TwoAction, SymmetricKind::ThreeAction] {
            let g = build_symmetric_game(kind);
            assert!(verify_exact_potential(&g, |j| g.reward(0, j), DEFAULT_ENUMERATION_CAP).unwrap());
            assert!(verify_exact_potential(&g, |j| g.potential(j).unwrap(), DEFAULT_ENUMERATION_CAP).unwrap());
        }
    }

    #[test]
    fn matching_pennies_is_zero_sum() {
        let g = matching_pennies();
        for j in crate::game::JointActions::new(g.action_counts()) {
            assert_eq!(g.reward(0, &j) + g.reward(1, &j), 0.0);
        }
    }
}
