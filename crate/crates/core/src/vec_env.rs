//! Batched environment stepping.
//!
//! Every environment instance owns its state and RNG stream, so a batch step
//! is an independent map over instances: the parallel schedule cannot change
//! the result, and `ExecMode::Parallel` is bit-identical to
//! `ExecMode::Sequential`. Without the `parallel` feature the parallel mode
//! falls back to the sequential path.

use rand_chacha::ChaCha8Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::config::EnvConfig;
use crate::env::{EnvState, TwistEnv};
use crate::hand::NUM_JOINTS;
use crate::log::Transition;
use crate::rng::stream_rng;
use crate::SimResult;

/// How to fan a batch across cores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    Sequential,
    #[default]
    Parallel,
}

/// A batch of independent environment instances with auto-reset.
pub struct VectorEnv {
    env: TwistEnv,
    states: Vec<EnvState>,
    mode: ExecMode,
    auto_reset: bool,
}

impl VectorEnv {
    /// Build `num_envs` instances seeded from `seed` with one independent
    /// stream per instance.
    pub fn new(config: EnvConfig, num_envs: usize, seed: u64, mode: ExecMode) -> SimResult<Self> {
        let env = TwistEnv::new(config)?;
        let rngs: Vec<ChaCha8Rng> = (0..num_envs as u64).map(|i| stream_rng(seed, i)).collect();
        let states = Self::spawn_all(&env, rngs, mode)?;
        Ok(Self {
            env,
            states,
            mode,
            auto_reset: true,
        })
    }

    fn spawn_all(env: &TwistEnv, rngs: Vec<ChaCha8Rng>, mode: ExecMode) -> SimResult<Vec<EnvState>> {
        let spawn_one = |rng: ChaCha8Rng| env.spawn(rng);
        match mode {
            ExecMode::Sequential => rngs.into_iter().map(spawn_one).collect(),
            ExecMode::Parallel => {
                #[cfg(feature = "parallel")]
                {
                    rngs.into_par_iter().map(spawn_one).collect()
                }
                #[cfg(not(feature = "parallel"))]
                {
                    rngs.into_iter().map(spawn_one).collect()
                }
            }
        }
    }

    pub fn env(&self) -> &TwistEnv {
        &self.env
    }

    pub fn num_envs(&self) -> usize {
        self.states.len()
    }

    pub fn mode(&self) -> ExecMode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: ExecMode) {
        self.mode = mode;
    }

    /// Disable auto-reset (episode-by-episode evaluation drives resets
    /// manually).
    pub fn set_auto_reset(&mut self, on: bool) {
        self.auto_reset = on;
    }

    pub fn states(&self) -> &[EnvState] {
        &self.states
    }

    pub fn states_mut(&mut self) -> &mut [EnvState] {
        &mut self.states
    }

    /// Step every environment with its action. Equivalent to `num_envs`
    /// sequential `env_step` calls on the same states and RNG streams,
    /// regardless of mode. Done environments are reset before the next step
    /// (the returned transition keeps the terminal observation); an error in
    /// one environment leaves the others intact.
    pub fn try_step(&mut self, actions: &[[f64; NUM_JOINTS]]) -> Vec<SimResult<Transition>> {
        assert_eq!(actions.len(), self.states.len(), "one action per env");
        let env = &self.env;
        let auto_reset = self.auto_reset;
        let step_one = |(state, action): (&mut EnvState, &[f64; NUM_JOINTS])| {
            let tr = env.env_step(state, action)?;
            if tr.done && auto_reset {
                env.respawn(state)?;
            }
            Ok(tr)
        };
        match self.mode {
            ExecMode::Sequential => self
                .states
                .iter_mut()
                .zip(actions.iter())
                .map(step_one)
                .collect(),
            ExecMode::Parallel => {
                #[cfg(feature = "parallel")]
                {
                    self.states
                        .par_iter_mut()
                        .zip(actions.par_iter())
                        .map(step_one)
                        .collect()
                }
                #[cfg(not(feature = "parallel"))]
                {
                    self.states
                        .iter_mut()
                        .zip(actions.iter())
                        .map(step_one)
                        .collect()
                }
            }
        }
    }

    /// Step and fail on the first environment error.
    pub fn step(&mut self, actions: &[[f64; NUM_JOINTS]]) -> SimResult<Vec<Transition>> {
        self.try_step(actions).into_iter().collect()
    }
}
