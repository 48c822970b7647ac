pub mod cli;
pub mod control;
pub mod exponents;
pub mod flow;
pub mod polyfun;
pub mod report;
pub mod scenarios;
pub mod scalar;
