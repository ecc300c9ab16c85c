#![allow(dead_code)]

pub mod dense_oracle;
pub mod kat;
pub mod stats;
