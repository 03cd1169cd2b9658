//! Game-tree compilation.
//!
//! [`CompiledGame`] enumerates a game once into a flat arena of nodes and
//! edges. Solvers, best response, and evaluation all run on the arena so the
//! cost of rebuilding trait objects is paid a single time per (sub)game.
//!
//! Node ids are assigned in depth-first preorder, so every parent precedes
//! its children. Information sets are interned in first-visit order, which
//! makes all downstream iteration deterministic.

use indexmap::IndexMap;

use crate::game::{Action, Game, InfosetKey, NodeCounter, Player, State, ToPlay, VisitKind};

pub type NodeId = usize;
pub type InfosetId = usize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    Decision { player: Player, infoset: InfosetId },
    Chance,
    /// Payoff to player one; player two receives the negation.
    Terminal { payoff_one: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct CompiledNode {
    pub kind: NodeKind,
    first_edge: usize,
    num_edges: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct CompiledEdge {
    pub action: Action,
    /// Outcome probability for chance edges; 1.0 on decision edges.
    pub prob: f64,
    pub child: NodeId,
}

/// One information set of the compiled game.
#[derive(Debug, Clone)]
pub struct InfosetMeta {
    pub key: InfosetKey,
    pub player: Player,
    /// Action menu, identical at every member node.
    pub actions: Vec<Action>,
    /// Member nodes in preorder.
    pub members: Vec<NodeId>,
    /// How many of the owner's decisions precede this set on any path to it.
    pub depth: usize,
}

/// Tree-shape summary used for reporting and expansion schedules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GameStats {
    /// Total nodes, including chance and terminal nodes.
    pub histories: usize,
    pub terminals: usize,
    pub chance_nodes: usize,
    pub decision_nodes: [usize; 2],
    pub infosets: [usize; 2],
    /// Largest action menu over all decision nodes.
    pub max_actions: usize,
    /// Largest number of decisions (both players combined) on any root-to-leaf path.
    pub horizon: usize,
}

impl GameStats {
    pub fn sum_infosets(&self) -> usize {
        self.infosets[0] + self.infosets[1]
    }
}

pub struct CompiledGame {
    pub name: String,
    pub utility_range: (f64, f64),
    pub nodes: Vec<CompiledNode>,
    pub edges: Vec<CompiledEdge>,
    pub infosets: Vec<InfosetMeta>,
    pub infoset_ids: IndexMap<InfosetKey, InfosetId>,
    pub stats: GameStats,
}

impl CompiledGame {
    /// Compiles without touching a node counter (used for one-time setup).
    pub fn build(game: &dyn Game) -> CompiledGame {
        Self::build_inner(game, None)
    }

    /// Compiles and charges one visit per enumerated node to `counter`.
    pub fn build_counted(
        game: &dyn Game,
        counter: &mut NodeCounter,
        kind: VisitKind,
    ) -> CompiledGame {
        Self::build_inner(game, Some((counter, kind)))
    }

    fn build_inner(
        game: &dyn Game,
        mut counting: Option<(&mut NodeCounter, VisitKind)>,
    ) -> CompiledGame {
        let mut builder = Builder {
            nodes: Vec::new(),
            edges: Vec::new(),
            infosets: Vec::new(),
            infoset_ids: IndexMap::new(),
            max_actions: 0,
            horizon: 0,
            terminals: 0,
            chance_nodes: 0,
            decision_nodes: [0, 0],
        };
        let root = game.root();
        builder.compile(root.as_ref(), [0, 0], 0, &mut counting);
        let stats = GameStats {
            histories: builder.nodes.len(),
            terminals: builder.terminals,
            chance_nodes: builder.chance_nodes,
            decision_nodes: builder.decision_nodes,
            infosets: [
                builder
                    .infosets
                    .iter()
                    .filter(|m| m.player == Player::One)
                    .count(),
                builder
                    .infosets
                    .iter()
                    .filter(|m| m.player == Player::Two)
                    .count(),
            ],
            max_actions: builder.max_actions,
            horizon: builder.horizon,
        };
        CompiledGame {
            name: game.name().to_string(),
            utility_range: game.utility_range(),
            nodes: builder.nodes,
            edges: builder.edges,
            infosets: builder.infosets,
            infoset_ids: builder.infoset_ids,
            stats,
        }
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn edges_of(&self, node: NodeId) -> &[CompiledEdge] {
        let n = &self.nodes[node];
        &self.edges[n.first_edge..n.first_edge + n.num_edges]
    }

    /// Ids of `player`'s information sets, deepest decisions first.
    ///
    /// Within a depth level the first-visit order is preserved, so the result
    /// is deterministic. Processing sets in this order guarantees that any
    /// set reachable after acting at set `I` appears before `I`.
    pub fn infosets_by_depth_desc(&self, player: Player) -> Vec<InfosetId> {
        let mut ids: Vec<InfosetId> = (0..self.infosets.len())
            .filter(|&i| self.infosets[i].player == player)
            .collect();
        ids.sort_by_key(|&i| std::cmp::Reverse(self.infosets[i].depth));
        ids
    }

    pub fn infoset(&self, id: InfosetId) -> &InfosetMeta {
        &self.infosets[id]
    }
}

struct Builder {
    nodes: Vec<CompiledNode>,
    edges: Vec<CompiledEdge>,
    infosets: Vec<InfosetMeta>,
    infoset_ids: IndexMap<InfosetKey, InfosetId>,
    max_actions: usize,
    horizon: usize,
    terminals: usize,
    chance_nodes: usize,
    decision_nodes: [usize; 2],
}

impl Builder {
    /// `own_depth[p]` counts player `p`'s decisions above this node;
    /// `path_decisions` counts both players' decisions above it.
    fn compile(
        &mut self,
        state: &dyn State,
        own_depth: [usize; 2],
        path_decisions: usize,
        counting: &mut Option<(&mut NodeCounter, VisitKind)>,
    ) -> NodeId {
        if let Some((counter, kind)) = counting {
            counter.count(*kind);
        }
        let id = self.nodes.len();
        self.nodes.push(CompiledNode {
            kind: NodeKind::Terminal { payoff_one: 0.0 },
            first_edge: 0,
            num_edges: 0,
        });
        match state.to_play() {
            ToPlay::Terminal => {
                self.terminals += 1;
                self.horizon = self.horizon.max(path_decisions);
                self.nodes[id].kind = NodeKind::Terminal {
                    payoff_one: state.payoff(Player::One),
                };
            }
            ToPlay::Chance => {
                self.chance_nodes += 1;
                self.nodes[id].kind = NodeKind::Chance;
                let mut outcomes = Vec::new();
                state.chance_outcomes(&mut outcomes);
                let mut local = Vec::with_capacity(outcomes.len());
                for (action, prob) in outcomes {
                    let child = state.child(action);
                    let child_id =
                        self.compile(child.as_ref(), own_depth, path_decisions, counting);
                    local.push(CompiledEdge {
                        action,
                        prob,
                        child: child_id,
                    });
                }
                self.attach_edges(id, local);
            }
            ToPlay::Player(player) => {
                self.decision_nodes[player.index()] += 1;
                let actions = state.actions();
                self.max_actions = self.max_actions.max(actions.len());
                let infoset = self.intern_infoset(state, &actions, own_depth[player.index()], id);
                self.nodes[id].kind = NodeKind::Decision { player, infoset };
                let mut child_depth = own_depth;
                child_depth[player.index()] += 1;
                let mut local = Vec::with_capacity(actions.len());
                for action in actions {
                    let child = state.child(action);
                    let child_id =
                        self.compile(child.as_ref(), child_depth, path_decisions + 1, counting);
                    local.push(CompiledEdge {
                        action,
                        prob: 1.0,
                        child: child_id,
                    });
                }
                self.attach_edges(id, local);
            }
        }
        id
    }

    fn attach_edges(&mut self, id: NodeId, local: Vec<CompiledEdge>) {
        self.nodes[id].first_edge = self.edges.len();
        self.nodes[id].num_edges = local.len();
        self.edges.extend(local);
    }

    fn intern_infoset(
        &mut self,
        state: &dyn State,
        actions: &[Action],
        depth: usize,
        member: NodeId,
    ) -> InfosetId {
        let key = state.infoset_key();
        if let Some(&id) = self.infoset_ids.get(&key) {
            let meta = &mut self.infosets[id];
            assert_eq!(
                meta.actions, actions,
                "information set {} has inconsistent action menus",
                meta.key
            );
            assert_eq!(
                meta.depth, depth,
                "information set {} has members at different own-decision depths",
                meta.key
            );
            meta.members.push(member);
            id
        } else {
            let id = self.infosets.len();
            self.infoset_ids.insert(key.clone(), id);
            self.infosets.push(InfosetMeta {
                key,
                player: match state.to_play() {
                    ToPlay::Player(p) => p,
                    _ => unreachable!(),
                },
                actions: actions.to_vec(),
                members: vec![member],
                depth,
            });
            id
        }
    }
}
