//! Exact computations for the topological modular functor of a finite group.
//!
//! The crate is layered bottom-up:
//!
//! - [`group`]: finite groups as Cayley tables, presets, conjugacy data.
//! - [`cyclotomic`]: exact arithmetic in `Q(ζ_e)`.
//! - [`char_table`]: Dixon–Schneider character tables.
//! - [`double`]: the Drinfeld double `D(G)`, its simple modules, duals and fusion.
//! - [`surfaces`]: marked surfaces, marked `G`-bundles and the module `E(X)`.
//! - [`engine`]: modular-functor dimensions, decomposition tables, gluing
//!   checks and the modular data `(S, T)`.

pub mod char_table;
pub mod cyclotomic;
pub mod double;
pub mod engine;
pub mod group;
pub mod surfaces;

pub use char_table::{character_table, CharacterTable};
pub use cyclotomic::{CycloField, CycloInt, CycloNumber};
pub use double::{DoubleElement, DoubleLabel, DrinfeldDouble};
pub use engine::{Caps, Engine, LabelVector, Method, ModularData};
pub use group::{preset_group, FiniteGroup, Preset};
pub use surfaces::{BundleTuple, Cut, MarkedSurface};
