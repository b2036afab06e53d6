//! Model files shipped with the crate.
//!
//! * `oscillator2`: a damped oscillator (ω = 1, ζ = 0.1) sampled at 0.1 s with
//!   a zero-order hold. The attacker can add to the single actuator and
//!   tamper with the position sensor.
//! * `synthetic4`: a seeded random 4-state plant whose states 3–4 feed states
//!   1–2 but not the reverse. The attacker owns two actuator directions acting
//!   on states 1–2 and the sensors of states 1–2.
//!
//! `models/generate_models.py` regenerates both files.

use crate::model_file::parse_model;
use crate::plant::SystemModel;

pub const OSCILLATOR2_TOML: &str = include_str!("../models/oscillator2.toml");
pub const SYNTHETIC4_TOML: &str = include_str!("../models/synthetic4.toml");

pub fn oscillator2() -> SystemModel {
    parse_model(OSCILLATOR2_TOML).expect("bundled oscillator2 model parses")
}

pub fn synthetic4() -> SystemModel {
    parse_model(SYNTHETIC4_TOML).expect("bundled synthetic4 model parses")
}

pub const NAMES: [&str; 2] = ["oscillator2", "synthetic4"];

pub fn by_name(name: &str) -> Option<SystemModel> {
    match name {
        "oscillator2" => Some(oscillator2()),
        "synthetic4" => Some(synthetic4()),
        _ => None,
    }
}
