// SPDX-License-Identifier: Apache-2.0

//! Switch-level simulation, cell generation and rule checking for a fully
//! static, fully adiabatic quad-rail CMOS logic family.

pub mod cells;
pub mod checker;
pub mod energy;
pub mod engine;
pub mod export;
pub mod netlist;
pub mod stimulus;
pub mod timing;
