//! Compiles the code listings of the guide in `book/src` as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}
#[doc = include_str!("../../../book/src/dynamic_gate.md")]
pub mod dynamic_gate {}
#[doc = include_str!("../../../book/src/entangling_power.md")]
pub mod entangling_power {}
#[doc = include_str!("../../../book/src/adiabatic_gate.md")]
pub mod adiabatic_gate {}
#[doc = include_str!("../../../book/src/open_system.md")]
pub mod open_system {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../book/src/limitations.md")]
pub mod limitations {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
