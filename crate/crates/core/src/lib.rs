//! Desk-scale combinatorics of Silver-tree forcing: pattern trees and their
//! algebra, splitting systems with an extend/reduce calculus, fusion limits,
//! real names with decidable direct-forcing predicates, and deterministic
//! generic runs driven by explicit dense-set requirements. Each structural
//! lemma of the construction comes with a runnable verification suite.

pub mod generic;
pub mod names;
pub mod points;
pub mod strings;
pub mod suites;
pub mod systems;
pub mod trees;

pub use points::{e0_related, orbit_prefixes, xor_point, LazyPoint, PointError, TailRule};
pub use strings::{xor_pad, xor_strings, BitString};
pub use systems::{
    sys3_check, Ambient, Certificate, FusionAnswer, FusionChain, MultiSystem, SplitSystem,
    SystemError,
};
pub use trees::{validate_silver_truncated, SilverPattern, Slot, TreeError, TruncatedTree};
