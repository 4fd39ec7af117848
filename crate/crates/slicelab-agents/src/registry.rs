//! Name-to-factory registry over the [`SlicingAgent`] trait. Agent kinds are
//! selected at runtime (`--agent ppo|dqn|qtab|max|const:<n>`); adding a
//! variant means adding one descriptor here.

use std::path::Path;

use slicelab_core::{Observation, SlicingAction, Transition};

use crate::action_space::ActionSpace;
use crate::agent::{ActMode, AgentContext, AgentError, SlicingAgent};
use crate::dqn::DqnAgent;
use crate::ppo::PpoAgent;
use crate::qtab::QTableAgent;

type BuildFn = fn(&AgentContext, Option<&str>) -> Result<Box<dyn SlicingAgent>, AgentError>;
type LoadFn = fn(&AgentContext, &Path) -> Result<Box<dyn SlicingAgent>, AgentError>;

pub struct AgentDescriptor {
    pub name: &'static str,
    pub summary: &'static str,
    build: BuildFn,
    load: Option<LoadFn>,
}

static REGISTRY: &[AgentDescriptor] = &[
    AgentDescriptor {
        name: "ppo",
        summary: "clipped-surrogate actor-critic (the trained policy)",
        build: |ctx, _| {
            Ok(Box::new(PpoAgent::new(
                ctx.params.ppo.clone(),
                ctx.action_space,
                ctx.rng.clone(),
            )))
        },
        load: Some(|ctx, path| {
            Ok(Box::new(PpoAgent::load(
                ctx.params.ppo.clone(),
                ctx.action_space,
                ctx.rng.clone(),
                path,
            )?))
        }),
    },
    AgentDescriptor {
        name: "dqn",
        summary: "deep Q-network with replay buffer and target network",
        build: |ctx, _| {
            Ok(Box::new(DqnAgent::new(
                ctx.params.dqn.clone(),
                ctx.action_space,
                ctx.rng.clone(),
            )))
        },
        load: Some(|ctx, path| {
            Ok(Box::new(DqnAgent::load(
                ctx.params.dqn.clone(),
                ctx.action_space,
                ctx.rng.clone(),
                path,
            )?))
        }),
    },
    AgentDescriptor {
        name: "qtab",
        summary: "tabular Q-learning on a binned observation space",
        build: |ctx, _| {
            Ok(Box::new(QTableAgent::new(
                ctx.params.qtab.clone(),
                ctx.action_space,
                ctx.rng.clone(),
            )))
        },
        load: Some(|ctx, path| {
            Ok(Box::new(QTableAgent::load(
                ctx.params.qtab.clone(),
                ctx.action_space,
                ctx.rng.clone(),
                path,
            )?))
        }),
    },
    AgentDescriptor {
        name: "max",
        summary: "always grants the largest valid number of PRBs",
        build: |ctx, _| {
            Ok(Box::new(FixedAgent {
                kind: "max",
                action: ctx.action_space.action_at(ctx.action_space.n_actions - 1),
                space: ctx.action_space,
            }))
        },
        load: None,
    },
    AgentDescriptor {
        name: "const",
        summary: "always grants a fixed number of PRBs, e.g. const:12",
        build: |ctx, arg| {
            let arg = arg.ok_or_else(|| AgentError::MissingArgument {
                kind: "const".into(),
            })?;
            let prbs: u32 = arg.parse().map_err(|_| AgentError::BadArgument {
                arg: arg.into(),
                message: "expected a PRB count".into(),
            })?;
            let action = SlicingAction::from_prbs(prbs);
            if ctx.action_space.index_of(action).is_none() {
                return Err(AgentError::BadArgument {
                    arg: arg.into(),
                    message: format!(
                        "outside the action space [{}, {}]",
                        ctx.action_space.min_prbs,
                        ctx.action_space.min_prbs + ctx.action_space.n_actions as u32 - 1
                    ),
                });
            }
            Ok(Box::new(FixedAgent {
                kind: "const",
                action,
                space: ctx.action_space,
            }))
        },
        load: None,
    },
];

pub fn registry() -> &'static [AgentDescriptor] {
    REGISTRY
}

fn split_kind(kind: &str) -> (&str, Option<&str>) {
    match kind.split_once(':') {
        Some((name, arg)) => (name, Some(arg)),
        None => (kind, None),
    }
}

fn descriptor(name: &str) -> Result<&'static AgentDescriptor, AgentError> {
    REGISTRY
        .iter()
        .find(|d| d.name == name)
        .ok_or_else(|| AgentError::UnknownAgent(name.to_string()))
}

/// Builds a fresh agent from its registered name (with optional `:arg`).
pub fn build_agent(kind: &str, ctx: &AgentContext) -> Result<Box<dyn SlicingAgent>, AgentError> {
    let (name, arg) = split_kind(kind);
    (descriptor(name)?.build)(ctx, arg)
}

/// Restores a trained agent of the given kind from a checkpoint.
pub fn load_agent(
    kind: &str,
    ctx: &AgentContext,
    path: &Path,
) -> Result<Box<dyn SlicingAgent>, AgentError> {
    let (name, _) = split_kind(kind);
    let d = descriptor(name)?;
    let load = d.load.ok_or_else(|| AgentError::NotLoadable(name.to_string()))?;
    load(ctx, path)
}

/// Constant-grant policy used for baselines and plumbing tests.
struct FixedAgent {
    kind: &'static str,
    action: SlicingAction,
    space: ActionSpace,
}

impl SlicingAgent for FixedAgent {
    fn kind(&self) -> &'static str {
        self.kind
    }

    fn action_space(&self) -> ActionSpace {
        self.space
    }

    fn act(&mut self, _obs: &Observation, _mode: ActMode) -> SlicingAction {
        self.action
    }

    fn observe(&mut self, _t: &Transition) {}

    fn end_episode(&mut self) {}

    fn action_probs(&self, _obs: &Observation) -> Option<Vec<f64>> {
        None
    }

    fn save(&self, _path: &Path) -> Result<(), AgentError> {
        Err(AgentError::NotLoadable(self.kind.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use slicelab_core::{AgentParams, RngSource, SlaSpec};

    fn ctx() -> AgentContext {
        AgentContext {
            params: AgentParams::default(),
            action_space: ActionSpace {
                min_prbs: 1,
                n_actions: 49,
            },
            rng: RngSource::new(5).substream("registry-test"),
        }
    }

    #[test]
    fn builds_every_registered_kind() {
        let ctx = ctx();
        for kind in ["ppo", "dqn", "qtab", "max", "const:12"] {
            let agent = build_agent(kind, &ctx).unwrap();
            assert_eq!(agent.kind(), kind.split(':').next().unwrap());
        }
    }

    #[test]
    fn unknown_and_malformed_kinds_error() {
        let ctx = ctx();
        assert!(matches!(
            build_agent("sarsa", &ctx),
            Err(AgentError::UnknownAgent(_))
        ));
        assert!(matches!(
            build_agent("const", &ctx),
            Err(AgentError::MissingArgument { .. })
        ));
        assert!(matches!(
            build_agent("const:0", &ctx),
            Err(AgentError::BadArgument { .. })
        ));
        assert!(matches!(
            build_agent("const:50", &ctx),
            Err(AgentError::BadArgument { .. })
        ));
    }

    #[test]
    fn fixed_agents_always_answer_the_same() {
        let ctx = ctx();
        let obs = Observation::empty(SlaSpec::new(50.0, 0.9).unwrap());
        let mut max = build_agent("max", &ctx).unwrap();
        assert_eq!(max.act(&obs, ActMode::Greedy).prbs, 49);
        let mut c = build_agent("const:7", &ctx).unwrap();
        assert_eq!(c.act(&obs, ActMode::Sample).prbs, 7);
    }
}
