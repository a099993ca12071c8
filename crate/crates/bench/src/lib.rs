//! Fixtures shared by the timing benches.

use splitkit::experiment::resolve_method;
use splitkit::framework::{Iteration, IterationState, Mode};
use splitkit::operators::OperatorTriple;
use splitkit::presets::PresetKind;
use splitkit::problems::{GameDistribution, GameProblem};
use splitkit::structure::SplittingDesign;

/// Resolvent count; presets fix `m = n − 1` and `l = n − 2`.
pub const GAME_N: usize = 6;

/// A game instance with a certified design, ready to iterate.
pub struct GameFixture {
    pub game: GameProblem,
    pub ops: OperatorTriple,
    pub design: SplittingDesign,
    pub mode: Mode,
}

impl GameFixture {
    /// `method` is a preset name or `crfb`; `d` is the per-player dimension.
    pub fn new(method: &str, d: usize, seed: u64) -> Self {
        let (m, l) = (GAME_N - 1, GAME_N - 2);
        let game = GameProblem::generate(GAME_N, m, l, d, GameDistribution::Normal, seed)
            .expect("benchmark game is well formed");
        let ops = game.operators().expect("benchmark operators");
        let resolved = resolve_method(method, &ops, None, None, None, 500).expect("method certifies");
        Self {
            game,
            ops,
            design: resolved.design,
            mode: resolved.mode,
        }
    }

    pub fn iteration(&self) -> Iteration<'_> {
        Iteration::new(&self.ops, &self.design, self.mode).expect("fixture is consistent")
    }

    /// State after `warm` iterations, so timings see a nontrivial iterate.
    pub fn warm_state(&self, iter: &mut Iteration<'_>, warm: usize) -> IterationState {
        let mut state = iter.initial_state();
        for _ in 0..warm {
            iter.step(&mut state, 0.5);
        }
        state
    }
}

/// Method names the benches sweep over.
pub fn methods() -> Vec<&'static str> {
    let mut names = vec!["crfb"];
    names.extend([PresetKind::Dfbr, PresetKind::Pdyr, PresetKind::Sdyr].map(PresetKind::name));
    names
}
