//! Exact conditional-independence checks for finite discrete distributions on
//! non-product supports.
//!
//! Three notions of `Y_A ⊥ Y_C | Y_B` are decided with exact rational arithmetic:
//!
//! * **exceedance** (EH): plain CI after conditioning on each `Y_k > t`;
//! * **inner**: plain CI after conditioning on every in-region product rectangle,
//!   decided through 2×2 minors on slabs (a definitional brute force ships too);
//! * **outer**: existence of a product-supported `W` with `W_A ⊥ W_C | W_B` that
//!   conditions back to `Y`, decided by per-slice rank-one cycle consistency.
//!
//! Positive outer verdicts can be backed by an explicit, exactly verified witness
//! from [`witness`]. The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod ci;
pub mod dist;
pub mod error;
pub mod generators;
pub mod geometry;
pub mod rat;
pub mod witness;

pub use ci::{
    check_eh_ci, check_inner_ci, check_inner_ci_bruteforce, check_outer_ci, check_plain_ci, Caps, Certificate,
    CiVerdict, Conditioning, Notion,
};
pub use dist::{Block, BlockPartition, BlockValue, FiniteDistribution, Point};
pub use error::Error;
pub use geometry::{BlockClass, Rectangle, Region, Slab};
pub use rat::{parse_rat, Rat};
pub use witness::{
    build_outer_witness_generic, build_prop1_witness, build_prop2_witness, verify_witness, Method, VerificationReport,
    Witness,
};
