//! Target assignment. Inputs are attacker positions and the positions of
//! the currently alive defenders; outputs index into that alive list.
//! Every distance tie goes to the lowest index.

use super::Vec2;

fn nearest(from: Vec2, candidates: impl Iterator<Item = (usize, Vec2)>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in candidates {
        let d = from.distance_sq(p);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

fn nearest_defender(attacker: Vec2, defenders: &[Vec2]) -> usize {
    nearest(attacker, defenders.iter().copied().enumerate()).expect("at least one defender")
}

/// Each attacker chases its own nearest defender.
pub fn nearest_assign(attackers: &[Vec2], defenders: &[Vec2]) -> Vec<usize> {
    assert!(!defenders.is_empty(), "assignment needs an alive defender");
    attackers.iter().map(|&a| nearest_defender(a, defenders)).collect()
}

/// Greedy claiming: each defender, in index order, is assigned the attacker
/// closest to it, overwriting any earlier claim on that attacker. Attackers
/// left unclaimed chase their nearest defender.
pub fn greedy_assign(attackers: &[Vec2], defenders: &[Vec2]) -> Vec<usize> {
    assert!(!defenders.is_empty(), "assignment needs an alive defender");
    let mut target: Vec<Option<usize>> = vec![None; attackers.len()];
    for (j, &d) in defenders.iter().enumerate() {
        if let Some(i) = nearest(d, attackers.iter().copied().enumerate()) {
            target[i] = Some(j);
        }
    }
    target
        .into_iter()
        .zip(attackers)
        .map(|(t, &a)| t.unwrap_or_else(|| nearest_defender(a, defenders)))
        .collect()
}

/// Auction: each defender, in index order, takes the nearest attacker still
/// in the unassigned pool. Leftover attackers chase their nearest defender.
pub fn auction_assign(attackers: &[Vec2], defenders: &[Vec2]) -> Vec<usize> {
    assert!(!defenders.is_empty(), "assignment needs an alive defender");
    let mut target: Vec<Option<usize>> = vec![None; attackers.len()];
    for (j, &d) in defenders.iter().enumerate() {
        let pool = attackers
            .iter()
            .copied()
            .enumerate()
            .filter(|(i, _)| target[*i].is_none());
        match nearest(d, pool) {
            Some(i) => target[i] = Some(j),
            None => break,
        }
    }
    target
        .into_iter()
        .zip(attackers)
        .map(|(t, &a)| t.unwrap_or_else(|| nearest_defender(a, defenders)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(v: &[(f64, f64)]) -> Vec<Vec2> {
        v.iter().map(|&(x, y)| Vec2::new(x, y)).collect()
    }

    #[test]
    fn single_pair() {
        let a = pts(&[(5.0, 5.0)]);
        let d = pts(&[(0.0, 0.0)]);
        assert_eq!(greedy_assign(&a, &d), vec![0]);
        assert_eq!(auction_assign(&a, &d), vec![0]);
        assert_eq!(nearest_assign(&a, &d), vec![0]);
    }

    #[test]
    fn greedy_two_by_two() {
        let a = pts(&[(0.0, 0.0), (10.0, 0.0)]);
        let d = pts(&[(1.0, 0.0), (9.0, 0.0)]);
        assert_eq!(greedy_assign(&a, &d), vec![0, 1]);
        assert_eq!(nearest_assign(&a, &d), vec![0, 1]);
    }

    #[test]
    fn greedy_colocated_attackers_tie_to_lowest_index() {
        let a = pts(&[(2.0, 2.0), (2.0, 2.0), (2.0, 2.0)]);
        let d = pts(&[(0.0, 0.0), (5.0, 0.0)]);
        // both defenders claim attacker 0; the later claim wins
        let g = greedy_assign(&a, &d);
        assert_eq!(g[0], 1);
        // unclaimed attackers go to their nearest (defender 0 at 2.83 vs 3.61)
        assert_eq!(&g[1..], &[0, 0]);
        assert_eq!(nearest_assign(&a, &d), vec![0, 0, 0]);
    }

    #[test]
    fn auction_two_attackers_one_defender() {
        let a = pts(&[(0.0, 0.0), (3.0, 0.0)]);
        let d = pts(&[(1.0, 0.0)]);
        assert_eq!(auction_assign(&a, &d), vec![0, 0]);
    }

    #[test]
    fn auction_pool_removal() {
        let a = pts(&[(0.0, 0.0), (1.0, 0.0)]);
        let d = pts(&[(0.0, 1.0), (1.0, 1.0)]);
        assert_eq!(auction_assign(&a, &d), vec![0, 1]);
    }

    #[test]
    fn auction_more_defenders_than_attackers() {
        let a = pts(&[(0.0, 0.0)]);
        let d = pts(&[(0.0, 1.0), (0.0, 0.5)]);
        // defender 0 takes the only attacker; defender 1 finds an empty pool
        assert_eq!(auction_assign(&a, &d), vec![0]);
    }

    fn coord() -> impl Strategy<Value = (f64, f64)> {
        (-50.0..50.0f64, -50.0..50.0f64)
    }

    /// Brute force: attacker i gets defender j iff i is the first
    /// unassigned attacker minimizing distance when j is processed.
    fn auction_oracle(a: &[Vec2], d: &[Vec2]) -> Vec<usize> {
        let mut taken = vec![false; a.len()];
        let mut out = vec![usize::MAX; a.len()];
        for (j, dj) in d.iter().enumerate() {
            let mut order: Vec<usize> = (0..a.len()).filter(|&i| !taken[i]).collect();
            order.sort_by(|&x, &y| a[x].distance_sq(*dj).total_cmp(&a[y].distance_sq(*dj)).then(x.cmp(&y)));
            if let Some(&i) = order.first() {
                taken[i] = true;
                out[i] = j;
            }
        }
        for i in 0..a.len() {
            if out[i] == usize::MAX {
                let mut js: Vec<usize> = (0..d.len()).collect();
                js.sort_by(|&x, &y| {
                    a[i].distance_sq(d[x])
                        .total_cmp(&a[i].distance_sq(d[y]))
                        .then(x.cmp(&y))
                });
                out[i] = js[0];
            }
        }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn auction_is_injective_for_square_problems(
            raw in (1usize..12).prop_flat_map(|n| (
                proptest::collection::vec(coord(), n),
                proptest::collection::vec(coord(), n),
            ))
        ) {
            let a: Vec<Vec2> = raw.0.iter().map(|&(x, y)| Vec2::new(x, y)).collect();
            let d: Vec<Vec2> = raw.1.iter().map(|&(x, y)| Vec2::new(x, y)).collect();
            let t = auction_assign(&a, &d);
            let mut seen = vec![false; d.len()];
            for &j in &t {
                prop_assert!(!seen[j], "defender {} shared", j);
                seen[j] = true;
            }
            prop_assert_eq!(t, auction_oracle(&a, &d));
        }

        #[test]
        fn all_attackers_get_a_target(
            a in proptest::collection::vec(coord(), 1..15),
            d in proptest::collection::vec(coord(), 1..15),
        ) {
            let a: Vec<Vec2> = a.iter().map(|&(x, y)| Vec2::new(x, y)).collect();
            let d: Vec<Vec2> = d.iter().map(|&(x, y)| Vec2::new(x, y)).collect();
            for t in [greedy_assign(&a, &d), auction_assign(&a, &d), nearest_assign(&a, &d)] {
                prop_assert_eq!(t.len(), a.len());
                prop_assert!(t.iter().all(|&j| j < d.len()));
            }
        }

        #[test]
        fn one_defender_makes_all_rules_agree(
            a in proptest::collection::vec(coord(), 1..15),
            d in coord(),
        ) {
            let a: Vec<Vec2> = a.iter().map(|&(x, y)| Vec2::new(x, y)).collect();
            let d = vec![Vec2::new(d.0, d.1)];
            prop_assert_eq!(greedy_assign(&a, &d), auction_assign(&a, &d));
            prop_assert_eq!(nearest_assign(&a, &d), auction_assign(&a, &d));
        }
    }
}
