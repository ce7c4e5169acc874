pub mod cli;
pub mod error;
pub mod lopezabad;
pub mod lp;
pub mod pushout;
pub mod ratlin;
pub mod space;
pub mod verify;
