//! Cross-checks a compiled policy against the brute-force oracle.
//!
//! Each check walks every free state of the padded oracle box (or every
//! corner) and counts disagreements. Work is spread over threads but
//! results are gathered in state order, so reports are reproducible.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;

use crate::corner_mdp::{bellman_check, Cost};
use crate::maze::{Maze, Point};
use crate::oracle::{
    bfs_values, bounding_box, box_soundness_check, noisy_values, OracleError, Soundness, ValueField,
};
use crate::runtime::{
    apply_macros, default_max_steps, direct_go_to, episode_cost, reference_decision, Alpha,
    EpisodeError, ReferenceDecision,
};
use crate::tree::{LeafAction, PolicyTree};
use crate::Compiled;

/// Failure messages kept per check.
const KEEP: usize = 5;

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub checked: usize,
    pub failures: usize,
    pub examples: Vec<String>,
}

impl CheckResult {
    fn from_outcomes(name: &'static str, outcomes: Vec<Option<String>>) -> Self {
        let checked = outcomes.len();
        let failed: Vec<String> = outcomes.into_iter().flatten().collect();
        CheckResult {
            name,
            checked,
            failures: failed.len(),
            examples: failed.into_iter().take(KEEP).collect(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            write!(f, "PASS {} ({} checked)", self.name, self.checked)
        } else {
            write!(
                f,
                "FAIL {} ({} of {} failed)",
                self.name, self.failures, self.checked
            )?;
            for e in &self.examples {
                write!(f, "\n  {e}")?;
            }
            Ok(())
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub box_lo: Vec<i64>,
    pub box_hi: Vec<i64>,
    pub free_states: usize,
    pub corners: usize,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "box {:?}..{:?}, {} free states, {} corners",
            self.box_lo, self.box_hi, self.free_states, self.corners
        )?;
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub padding: i64,
    /// States that must lie in the oracle box besides obstacles and goal.
    pub extra_states: Vec<Point>,
    /// Per-episode step budget; defaults to [`default_max_steps`].
    pub max_steps: Option<u64>,
    /// Also check the noisy value law and greedy-action membership.
    pub alpha: Option<Alpha>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            padding: 1,
            extra_states: vec![],
            max_steps: None,
            alpha: None,
        }
    }
}

/// Runs the full invariant suite on `compiled` (built from `maze`).
pub fn verify(
    maze: &Maze,
    compiled: &Compiled,
    options: &VerifyOptions,
) -> Result<VerifyReport, OracleError> {
    let bbox = bounding_box(maze, &options.extra_states, options.padding)?;
    let field = bfs_values(maze, &bbox);
    let states: Vec<(Point, Cost)> = field.free_states().collect();
    let Compiled {
        grid,
        mdp,
        solution,
        tree,
    } = compiled;

    let mut checks = Vec::new();

    let corner_bellman = match bellman_check(mdp, solution) {
        Ok(()) => vec![None; grid.len()],
        Err(v) => v.into_iter().map(|e| Some(e.to_string())).collect(),
    };
    checks.push(CheckResult::from_outcomes("corner_bellman", corner_bellman));

    let oracle_bellman = field.bellman_violations(maze);
    let mut outcomes = vec![None; states.len() - oracle_bellman.len()];
    outcomes.extend(
        oracle_bellman
            .into_iter()
            .map(|p| Some(format!("{p}: no neighbour one step closer"))),
    );
    checks.push(CheckResult::from_outcomes("oracle_bellman", outcomes));

    let soundness = match box_soundness_check(maze, &field) {
        Soundness::Ok => None,
        Soundness::Suspect {
            state,
            inner,
            outer,
        } => Some(format!(
            "{state}: {inner} in the box, {outer} in the grown box"
        )),
    };
    checks.push(CheckResult::from_outcomes("box_soundness", vec![soundness]));

    let corner_values = grid
        .corners()
        .par_iter()
        .enumerate()
        .filter_map(|(c, p)| {
            let oracle = field.get(p)?;
            let v = solution.values[c];
            Some((oracle != v).then(|| format!("corner {p}: corner MDP {v}, oracle {oracle}")))
        })
        .collect();
    checks.push(CheckResult::from_outcomes("corner_values", corner_values));

    let surface_argmin = states
        .par_iter()
        .map(|(s, v)| {
            let best = grid
                .surface(s)
                .finite_corners()
                .iter()
                .filter_map(|c| {
                    grid.index_of(c)
                        .map(|i| solution.values[i].plus(s.manhattan(c)))
                })
                .min()
                .unwrap_or(Cost::Unreachable);
            (best != *v).then(|| format!("{s}: surface minimum {best}, oracle {v}"))
        })
        .collect();
    checks.push(CheckResult::from_outcomes("surface_argmin", surface_argmin));

    let depth_ok = tree.within_depth_bounds();
    let depth = tree.depth();
    checks.push(CheckResult::from_outcomes(
        "depth_bounds",
        vec![(!depth_ok).then(|| {
            format!(
                "grid {} (bound {}), direction {} (bound {})",
                depth.grid,
                tree.grid_depth_bound(),
                depth.direction,
                tree.direction_depth_bound()
            )
        })],
    ));

    let episodes: Vec<(Option<String>, Option<String>)> = states
        .par_iter()
        .map(|(s, v)| {
            let budget = options
                .max_steps
                .unwrap_or_else(|| default_max_steps(maze, s));
            match (episode_cost(maze, tree, s, budget), v) {
                (Ok(sum), Cost::Finite(v)) => {
                    let opt = (sum.total_cost != *v)
                        .then(|| format!("{s}: episode cost {}, oracle {v}", sum.total_cost));
                    let descent = (sum.tree_node_visits > depth.total).then(|| {
                        format!(
                            "{s}: {} tree visits, depth {}",
                            sum.tree_node_visits, depth.total
                        )
                    });
                    (opt, descent)
                }
                (Err(EpisodeError::Unreachable(_)), Cost::Unreachable) => (None, None),
                (Ok(sum), Cost::Unreachable) => (
                    Some(format!(
                        "{s}: reached the goal in {} but oracle says unreachable",
                        sum.total_cost
                    )),
                    None,
                ),
                (Err(e), v) => (Some(format!("{s}: {e} (oracle {v})")), None),
            }
        })
        .collect();
    let (optimality, descent): (Vec<_>, Vec<_>) = episodes.into_iter().unzip();
    checks.push(CheckResult::from_outcomes("optimality", optimality));
    checks.push(CheckResult::from_outcomes("one_descent", descent));

    let tree_vs_reference = states
        .par_iter()
        .map(|(s, _)| {
            let (leaf, _) = tree.evaluate(s);
            let want = match reference_decision(maze, grid, solution, s) {
                Ok(p) => p,
                Err(e) => return Some(format!("{s}: {e}")),
            };
            let got = match leaf.action {
                LeafAction::AtGoal => ReferenceDecision::AtGoal,
                LeafAction::Unreachable => ReferenceDecision::Unreachable,
                _ => ReferenceDecision::Corner(leaf.target().expect("leaf with a target")),
            };
            (got != want).then(|| format!("{s}: tree {got:?}, reference {want:?}"))
        })
        .collect();
    checks.push(CheckResult::from_outcomes(
        "tree_matches_reference",
        tree_vs_reference,
    ));

    checks.push(CheckResult::from_outcomes(
        "macro_paths",
        macro_path_outcomes(maze, tree, &states),
    ));

    if let Some(alpha) = options.alpha {
        let (law, invariance) = noise_outcomes(maze, tree, &field, alpha)?;
        checks.push(CheckResult::from_outcomes("noise_value_law", law));
        checks.push(CheckResult::from_outcomes(
            "noise_policy_invariance",
            invariance,
        ));
    }

    Ok(VerifyReport {
        box_lo: bbox.lo().to_vec(),
        box_hi: bbox.hi().to_vec(),
        free_states: states.len(),
        corners: grid.len(),
        checks,
    })
}

/// Leaf macros from every state and successor walks from every corner
/// must be unblocked and exactly as long as the Manhattan distance.
fn macro_path_outcomes(
    maze: &Maze,
    tree: &PolicyTree,
    states: &[(Point, Cost)],
) -> Vec<Option<String>> {
    let from_states = states.par_iter().filter_map(|(s, _)| {
        let (leaf, _) = tree.evaluate(s);
        let target = match leaf.action {
            LeafAction::GoToCorner { target } => target,
            _ => return None,
        };
        Some(check_walk(maze, s, tree.corner(target), &leaf.macros))
    });
    let from_corners = (0..tree.corners().len()).into_par_iter().filter_map(|c| {
        let next = tree.successor(c)?;
        let (from, to) = (tree.corner(c), tree.corner(next));
        Some(check_walk(maze, from, to, &direct_go_to(from, to)))
    });
    let mut out: Vec<Option<String>> = from_states.collect();
    out.extend(from_corners.collect::<Vec<_>>());
    out
}

fn check_walk(
    maze: &Maze,
    from: &Point,
    to: &Point,
    macros: &[crate::runtime::MacroAction],
) -> Option<String> {
    match apply_macros(maze, from, macros) {
        Ok((end, steps)) if end == *to && steps == from.manhattan(to) => None,
        Ok((end, steps)) => Some(format!(
            "{from} -> {to}: ended at {end} after {steps} steps"
        )),
        Err(e) => Some(format!("{from} -> {to}: {e}")),
    }
}

pub(crate) fn default_tolerance() -> BigRational {
    BigRational::new(BigInt::from(1), BigInt::from(1_000_000_000))
}

type Outcomes = Vec<Option<String>>;

fn noise_outcomes(
    maze: &Maze,
    tree: &PolicyTree,
    field: &ValueField,
    alpha: Alpha,
) -> Result<(Outcomes, Outcomes), OracleError> {
    let tol = default_tolerance();
    let noisy = noisy_values(maze, field.bbox(), alpha, &tol, 1_000_000)?;
    let scale = BigRational::new(
        BigInt::from(alpha.denom()),
        BigInt::from(alpha.denom() - alpha.numer()),
    );
    let mut law = Vec::new();
    let mut invariance = Vec::new();
    for (s, v) in field.free_states() {
        let got = noisy.value(&s);
        law.push(match (v, got) {
            (Cost::Finite(v), Some(n)) => {
                let want = BigRational::from_integer(BigInt::from(v)) * &scale;
                let err = if n > &want { n - &want } else { &want - n };
                (err > tol).then(|| format!("{s}: noisy value {n}, expected {want}"))
            }
            (Cost::Unreachable, None) => None,
            (v, n) => Some(format!(
                "{s}: reachability differs (oracle {v}, noisy {n:?})"
            )),
        });
        if v.is_finite() && !maze.is_goal(&s) {
            let a = tree.first_action(&s);
            let greedy = noisy.greedy_actions(&s);
            invariance.push(match a {
                Some(a) if greedy.contains(&a) => None,
                _ => Some(format!(
                    "{s}: tree action {a:?} not in greedy set {greedy:?}"
                )),
            });
        }
    }
    Ok((law, invariance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maze::fixtures::two_boxes;
    use crate::{compile, BuildOptions};

    #[test]
    fn fixture_passes() {
        let m = two_boxes();
        let c = compile(&m, &[], &BuildOptions::default()).unwrap();
        let opts = VerifyOptions {
            alpha: Some(Alpha::new(1, 2).unwrap()),
            ..VerifyOptions::default()
        };
        let r = verify(&m, &c, &opts).unwrap();
        assert!(r.passed(), "{r}");
        assert_eq!(r.checks.len(), 12);
    }

    #[test]
    fn corrupted_successor_is_caught() {
        let m = two_boxes();
        let mut c = compile(&m, &[], &BuildOptions::default()).unwrap();
        let c0 = c.grid.index_of(&[3, -1]).unwrap();
        let wrong = c.grid.index_of(&[3, 1]).unwrap();
        c.solution.successors[c0] = Some(wrong);
        let r = verify(&m, &c, &VerifyOptions::default()).unwrap();
        assert!(!r.passed());
        assert!(r
            .checks
            .iter()
            .any(|k| k.name == "corner_bellman" && !k.passed()));
    }
}
