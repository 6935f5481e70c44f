pub mod cells;
pub mod cellsample;
pub mod error;
pub mod geometry;
pub mod group;
pub mod instance;
pub mod baseline;
pub mod inverter;
pub mod ksum;
pub mod owf;
pub mod runner;
