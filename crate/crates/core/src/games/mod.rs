//! Benchmark game registry.
//!
//! Games are built from a [`GameConfig`] (a registry name plus optional
//! integer parameter overrides) so that configuration files and the CLI can
//! name them uniformly. Every registry entry validates its parameters and
//! rejects unknown keys.

use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::Game;

pub mod blotto;
pub mod doubled;
pub mod kuhn;
pub mod leduc;
pub mod oshi_zumo;

pub use blotto::{Blotto, BlottoOutcome};
pub use doubled::DoubledActions;
pub use kuhn::Kuhn;
pub use leduc::Leduc;
pub use oshi_zumo::OshiZumo;

/// Errors raised while turning a configuration into a concrete game.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown game {name:?}; known games: {known}")]
    UnknownGame { name: String, known: String },
    #[error("game {game:?} does not accept parameter {key:?}")]
    UnknownParameter { game: String, key: String },
    #[error("invalid parameter for game {game:?}: {reason}")]
    InvalidParameter { game: String, reason: String },
}

/// A named game plus integer parameter overrides.
///
/// Parameters not present in `params` take the registry defaults listed in
/// [`build_game`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct GameConfig {
    pub name: String,
    #[serde(default)]
    pub params: IndexMap<String, u64>,
}

impl GameConfig {
    pub fn new(name: &str) -> GameConfig {
        GameConfig {
            name: name.to_string(),
            params: IndexMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: u64) -> GameConfig {
        self.params.insert(key.to_string(), value);
        self
    }
}

/// Registry names accepted by [`build_game`].
pub fn known_games() -> &'static [&'static str] {
    &[
        "kuhn",
        "large_kuhn",
        "leduc",
        "leduc10",
        "leduc_dummy",
        "blotto",
        "oshi_zumo",
    ]
}

/// Reads declared parameters and rejects any the game does not understand.
struct ParamReader<'a> {
    game: &'a str,
    params: &'a IndexMap<String, u64>,
    accepted: Vec<&'static str>,
}

impl<'a> ParamReader<'a> {
    fn new(game: &'a str, params: &'a IndexMap<String, u64>) -> ParamReader<'a> {
        ParamReader {
            game,
            params,
            accepted: Vec::new(),
        }
    }

    fn get(&mut self, key: &'static str, default: u64) -> u64 {
        self.accepted.push(key);
        self.params.get(key).copied().unwrap_or(default)
    }

    fn get_u32(&mut self, key: &'static str, default: u64) -> Result<u32, ConfigError> {
        let v = self.get(key, default);
        u32::try_from(v).map_err(|_| ConfigError::InvalidParameter {
            game: self.game.to_string(),
            reason: format!("{} = {} is out of range", key, v),
        })
    }

    fn get_u8(&mut self, key: &'static str, default: u64) -> Result<u8, ConfigError> {
        let v = self.get(key, default);
        u8::try_from(v).map_err(|_| ConfigError::InvalidParameter {
            game: self.game.to_string(),
            reason: format!("{} = {} is out of range", key, v),
        })
    }

    fn finish(self) -> Result<(), ConfigError> {
        for key in self.params.keys() {
            if !self.accepted.contains(&key.as_str()) {
                return Err(ConfigError::UnknownParameter {
                    game: self.game.to_string(),
                    key: key.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Builds a game from its registry name and parameter overrides.
///
/// Registry defaults:
///
/// | name         | defaults                                  |
/// |--------------|-------------------------------------------|
/// | `kuhn`       | `stack = 2`                               |
/// | `large_kuhn` | `stack = 40`                              |
/// | `leduc`      | `ranks = 3`                               |
/// | `leduc10`    | `ranks = 5`                               |
/// | `leduc_dummy`| `ranks = 3` (every action duplicated)     |
/// | `blotto`     | `forces = 20`, `deployments = 2`, `sign = 0` |
/// | `oshi_zumo`  | `coins = 4`, `k = 6`                      |
///
/// For `blotto`, `sign = 0` scores each battlefield by the margin of forces
/// and `sign = 1` by win/loss only.
pub fn build_game(config: &GameConfig) -> Result<Arc<dyn Game>, ConfigError> {
    let name = config.name.as_str();
    let mut p = ParamReader::new(name, &config.params);
    let game: Arc<dyn Game> = match name {
        "kuhn" => {
            let stack = p.get_u32("stack", 2)?;
            Arc::new(Kuhn::new(name, stack)?)
        }
        "large_kuhn" => {
            let stack = p.get_u32("stack", 40)?;
            Arc::new(Kuhn::new(name, stack)?)
        }
        "leduc" => {
            let ranks = p.get_u8("ranks", 3)?;
            Arc::new(Leduc::new(name, ranks)?)
        }
        "leduc10" => {
            let ranks = p.get_u8("ranks", 5)?;
            Arc::new(Leduc::new(name, ranks)?)
        }
        "leduc_dummy" => {
            let ranks = p.get_u8("ranks", 3)?;
            Arc::new(DoubledActions::new(
                name,
                Arc::new(Leduc::new("leduc", ranks)?),
            ))
        }
        "blotto" => {
            let forces = p.get_u32("forces", 20)?;
            let deployments = p.get_u32("deployments", 2)?;
            let outcome = match p.get("sign", 0) {
                0 => BlottoOutcome::Difference,
                1 => BlottoOutcome::Sign,
                other => {
                    return Err(ConfigError::InvalidParameter {
                        game: name.to_string(),
                        reason: format!("sign must be 0 or 1, got {}", other),
                    })
                }
            };
            Arc::new(Blotto::new(name, forces, deployments, outcome)?)
        }
        "oshi_zumo" => {
            let coins = p.get_u32("coins", 4)?;
            let k = p.get_u32("k", 6)?;
            Arc::new(OshiZumo::new(name, coins, k)?)
        }
        _ => {
            return Err(ConfigError::UnknownGame {
                name: name.to_string(),
                known: known_games().join(", "),
            })
        }
    };
    p.finish()?;
    Ok(game)
}
