use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::framework::Iteration;
use crate::problems::{make_game_problem, primal_dual_gap, GameDistribution};

use super::{field_err, parse_json, resolve_method, GAP_TOL};

fn default_methods() -> Vec<String> {
    ["crfb", "sdyr", "pdyr", "dfbr"].map(String::from).to_vec()
}
fn default_gamma() -> f64 {
    0.5
}
fn default_max_iter() -> usize {
    100_000
}
fn default_selection_iters() -> usize {
    2000
}

/// Methods × game settings × gap thresholds, each cell the median over
/// seeds of the iterations needed to bring the gap below the threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSuite {
    pub n: usize,
    pub d: usize,
    /// Defaults to `n−1` and `n−2`, the sizes every preset expects.
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub l: Option<usize>,
    pub settings: Vec<GameDistribution>,
    pub epsilons: Vec<f64>,
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_selection_iters")]
    pub selection_iters: usize,
}

/// Iterations to reach each threshold for one (setting, method, seed);
/// `None` marks a threshold not reached (DNF).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellResult {
    pub setting: GameDistribution,
    pub method: String,
    pub seed: u64,
    pub hits: Vec<Option<usize>>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchTable {
    pub methods: Vec<String>,
    pub epsilons: Vec<f64>,
    pub settings: Vec<GameDistribution>,
    /// `medians[s][e][k]` for setting `s`, threshold `e`, method `k`.
    pub medians: Vec<Vec<Vec<Option<usize>>>>,
    pub runs: Vec<CellResult>,
}

impl BenchSuite {
    pub fn parse(text: &str) -> Result<Self> {
        let suite: Self = parse_json(text)?;
        if suite.methods.is_empty() || suite.seeds.is_empty() || suite.settings.is_empty() {
            return Err(field_err("methods", "methods, settings and seeds must be nonempty"));
        }
        if suite.epsilons.iter().any(|e| !(*e > 0.0)) {
            return Err(field_err("epsilons", "thresholds must be positive"));
        }
        Ok(suite)
    }

    fn run_cell(&self, setting: GameDistribution, method: &str, seed: u64) -> CellResult {
        let mut cell = CellResult {
            setting,
            method: method.to_string(),
            seed,
            hits: vec![None; self.epsilons.len()],
            error: None,
        };
        if let Err(e) = self.fill_cell(&mut cell) {
            cell.error = Some(e.to_string());
        }
        cell
    }

    fn fill_cell(&self, cell: &mut CellResult) -> Result<()> {
        let n = self.n;
        let m = self.m.unwrap_or(n.saturating_sub(1));
        let l = self.l.unwrap_or(n.saturating_sub(2));
        let (game, ops) = make_game_problem(n, m, l, self.d, cell.setting, cell.seed)?;
        let method = resolve_method(&cell.method, &ops, None, None, None, self.selection_iters)?;
        let mut it = Iteration::new(&ops, &method.design, method.mode)?;
        let mut state = it.initial_state();
        // Iteration k evaluates the sweep from the k-th governor state, so a
        // threshold met by the very first sweep costs 0 iterations.
        for k in 0..=self.max_iter {
            it.step(&mut state, self.gamma);
            if !state.x.is_finite() {
                return Err(Error::Divergence {
                    iteration: k,
                    reason: "non-finite iterate".into(),
                });
            }
            let mean = state.x.mean_block();
            let (u, v) = game.split(&mean);
            let gap = primal_dual_gap(&game, u, v, GAP_TOL)?.gap;
            for (hit, eps) in cell.hits.iter_mut().zip(&self.epsilons) {
                if hit.is_none() && gap < *eps {
                    *hit = Some(k);
                }
            }
            if cell.hits.iter().all(Option::is_some) {
                break;
            }
        }
        Ok(())
    }
}

/// Median with DNF ordered last; `None` if the median itself is a DNF.
fn median(mut values: Vec<Option<usize>>) -> Option<usize> {
    values.sort_by_key(|v| v.unwrap_or(usize::MAX));
    values[(values.len() - 1) / 2]
}

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SPLITKIT_THREADS";

/// Runs every cell in parallel, on at most `SPLITKIT_THREADS` threads when
/// that variable holds a positive integer.
pub fn run_suite(suite: &BenchSuite) -> BenchTable {
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok());
    match threads.filter(|t| *t > 0) {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map(|pool| pool.install(|| run_cells(suite)))
            .unwrap_or_else(|_| run_cells(suite)),
        None => run_cells(suite),
    }
}

fn run_cells(suite: &BenchSuite) -> BenchTable {
    let jobs: Vec<(GameDistribution, &str, u64)> = suite
        .settings
        .iter()
        .flat_map(|s| {
            suite
                .methods
                .iter()
                .flat_map(move |m| suite.seeds.iter().map(move |seed| (*s, m.as_str(), *seed)))
        })
        .collect();
    let runs: Vec<CellResult> = jobs
        .par_iter()
        .map(|(s, m, seed)| suite.run_cell(*s, m, *seed))
        .collect();
    let medians = suite
        .settings
        .iter()
        .map(|s| {
            (0..suite.epsilons.len())
                .map(|e| {
                    suite
                        .methods
                        .iter()
                        .map(|m| {
                            median(
                                runs.iter()
                                    .filter(|r| r.setting == *s && &r.method == m)
                                    .map(|r| r.hits[e])
                                    .collect(),
                            )
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    BenchTable {
        methods: suite.methods.clone(),
        epsilons: suite.epsilons.clone(),
        settings: suite.settings.clone(),
        medians,
        runs,
    }
}

impl BenchTable {
    /// `setting,epsilon,<method>...` with `DNF` for unreached thresholds.
    pub fn to_csv(&self) -> String {
        let mut out = format!("setting,epsilon,{}\n", self.methods.join(","));
        for (s, setting) in self.settings.iter().enumerate() {
            for (e, eps) in self.epsilons.iter().enumerate() {
                let cells: Vec<String> = self.medians[s][e]
                    .iter()
                    .map(|v| v.map_or_else(|| "DNF".to_string(), |k| k.to_string()))
                    .collect();
                writeln!(out, "{},{:e},{}", setting, eps, cells.join(",")).expect("string write");
            }
        }
        out
    }

    /// Cells in which `method` is no worse than every other method.
    pub fn count_best(&self, method: &str, fewest: bool) -> usize {
        let Some(k) = self.methods.iter().position(|m| m == method) else {
            return 0;
        };
        let key = |v: Option<usize>| v.unwrap_or(usize::MAX);
        self.medians
            .iter()
            .flatten()
            .filter(|row| {
                let mine = key(row[k]);
                row.iter()
                    .all(|v| if fewest { mine <= key(*v) } else { mine >= key(*v) })
            })
            .count()
    }

    pub fn cells(&self) -> usize {
        self.settings.len() * self.epsilons.len()
    }

    /// The table with only `methods`, in the given order; unknown names are
    /// skipped. Runs of dropped methods are dropped too.
    pub fn restrict(&self, methods: &[&str]) -> BenchTable {
        let keep: Vec<usize> = methods
            .iter()
            .filter_map(|m| self.methods.iter().position(|k| k == m))
            .collect();
        BenchTable {
            methods: keep.iter().map(|&k| self.methods[k].clone()).collect(),
            epsilons: self.epsilons.clone(),
            settings: self.settings.clone(),
            medians: self
                .medians
                .iter()
                .map(|rows| rows.iter().map(|row| keep.iter().map(|&k| row[k]).collect()).collect())
                .collect(),
            runs: self
                .runs
                .iter()
                .filter(|r| keep.iter().any(|&k| self.methods[k] == r.method))
                .cloned()
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(methods: &str, eps: &str) -> BenchSuite {
        BenchSuite::parse(&format!(
            r#"{{"n": 4, "d": 3, "settings": ["uniform"], "epsilons": {}, "methods": {},
                "seeds": [1, 2, 3], "max_iter": 3000, "selection_iters": 300}}"#,
            eps, methods
        ))
        .unwrap()
    }

    #[test]
    fn huge_threshold_costs_nothing() {
        let table = run_suite(&tiny(r#"["crfb", "sdyr"]"#, "[1e9]"));
        assert_eq!(table.medians[0][0], vec![Some(0), Some(0)]);
    }

    #[test]
    fn single_method_gives_single_column() {
        let table = run_suite(&tiny(r#"["pdyr"]"#, "[1e-2, 1e-300]"));
        let csv = table.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "setting,epsilon,pdyr");
        assert!(lines.next().unwrap().starts_with("uniform,1e-2,"));
        assert_eq!(lines.next().unwrap(), "uniform,1e-300,DNF");
    }

    #[test]
    fn unknown_method_is_a_dnf_with_error() {
        let table = run_suite(&tiny(r#"["nope"]"#, "[1.0]"));
        assert_eq!(table.medians[0][0], vec![None]);
        assert!(table.runs.iter().all(|r| r.error.is_some()));
    }

    #[test]
    fn restriction_keeps_requested_columns() {
        let table = BenchTable {
            methods: vec!["a".into(), "b".into(), "c".into()],
            epsilons: vec![1e-3],
            settings: vec![GameDistribution::Uniform],
            medians: vec![vec![vec![Some(5), Some(3), None]]],
            runs: Vec::new(),
        };
        assert_eq!(table.count_best("b", true), 1);
        let sub = table.restrict(&["c", "a", "zzz"]);
        assert_eq!(sub.methods, vec!["c", "a"]);
        assert_eq!(sub.medians, vec![vec![vec![None, Some(5)]]]);
        assert_eq!(sub.count_best("a", true), 1);
        assert_eq!(sub.count_best("c", false), 1);
    }

    #[test]
    fn median_orders_dnf_last() {
        assert_eq!(median(vec![None, Some(5), Some(1)]), Some(5));
        assert_eq!(median(vec![None, None, Some(1)]), None);
    }
}
